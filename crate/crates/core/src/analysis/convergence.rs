//! Both sides of the nonconvex SGD bound
//! `(1/K) Σ ‖∇J(Θ_k)‖² ≤ 2(J* − J(Θ_0))/(ηK) + L·η·σ²`
//! evaluated on a simulated run.
//!
//! `J` here is the probe-set objective: mean over probe questions of the
//! expected noiseless reward under the untempered policy. It and its
//! gradient are computed exactly from the mean table.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::env::SimSpec;
use crate::error::{Error, Result};
use crate::policy::{tempered_softmax, PolicyParams};
use crate::seed;
use crate::trainer::TrainReport;

/// One probe question: its bucket in the mean table and its context vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeContext {
    pub bucket: usize,
    pub context: Vec<f64>,
}

/// Per-axis conditional expected reward `E[μ | a_axis = i]` under the
/// product policy, plus the overall expectation.
fn marginal_rewards(table: &[f64], probs: &[Vec<f64>; 3]) -> ([Vec<f64>; 3], f64) {
    let (np, nt, ns) = (probs[0].len(), probs[1].len(), probs[2].len());
    let mut m: [Vec<f64>; 3] = [vec![0.0; np], vec![0.0; nt], vec![0.0; ns]];
    let mut total = 0.0;
    for p in 0..np {
        for t in 0..nt {
            for s in 0..ns {
                let mu = table[(p * nt + t) * ns + s];
                m[0][p] += probs[1][t] * probs[2][s] * mu;
                m[1][t] += probs[0][p] * probs[2][s] * mu;
                m[2][s] += probs[0][p] * probs[1][t] * mu;
                total += probs[0][p] * probs[1][t] * probs[2][s] * mu;
            }
        }
    }
    (m, total)
}

fn check_probe(params: &PolicyParams, spec: &SimSpec, probe: &[ProbeContext]) -> Result<()> {
    if probe.is_empty() {
        return Err(Error::validation("probe set is empty"));
    }
    if params.sizes() != spec.sizes() {
        return Err(Error::validation("policy heads do not match the simulator grid"));
    }
    if let Some(p) = probe.iter().find(|p| p.bucket >= spec.buckets()) {
        return Err(Error::validation(format!("probe bucket {} out of range", p.bucket)));
    }
    Ok(())
}

pub fn exact_objective(params: &PolicyParams, spec: &SimSpec, probe: &[ProbeContext]) -> Result<f64> {
    check_probe(params, spec, probe)?;
    let mut sum = 0.0;
    for p in probe {
        let probs = params.logits(&p.context)?.map(|l| tempered_softmax(&l, 1.0));
        sum += marginal_rewards(spec.table(p.bucket), &probs).1;
    }
    Ok(sum / probe.len() as f64)
}

/// `J` and `∇J` on the probe set.
pub fn exact_objective_grad(
    params: &PolicyParams,
    spec: &SimSpec,
    probe: &[ProbeContext],
) -> Result<(f64, PolicyParams)> {
    check_probe(params, spec, probe)?;
    let n = probe.len() as f64;
    let mut grad = params.zeros_like();
    let mut sum = 0.0;
    for p in probe {
        let probs = params.logits(&p.context)?.map(|l| tempered_softmax(&l, 1.0));
        let (m, j) = marginal_rewards(spec.table(p.bucket), &probs);
        // ∂J/∂z_i = π_i (E[μ | a = i] − J) for each head
        let logit_grads = [0, 1, 2].map(|s| {
            probs[s].iter().zip(&m[s]).map(|(pi, mi)| pi * (mi - j)).collect::<Vec<_>>()
        });
        grad.add_scaled(&params.backprop(&p.context, &logit_grads)?, 1.0 / n);
        sum += j;
    }
    Ok((sum / n, grad))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    /// Parameter pairs used to estimate the smoothness constant.
    pub lipschitz_pairs: usize,
    /// Relative size of the perturbation separating each pair.
    pub perturbation: f64,
    /// Monte-Carlo draws per snapshot for the gradient-noise variance.
    pub variance_samples: usize,
    /// Number of evenly spaced parameter snapshots kept from the trajectory.
    pub snapshots: usize,
    pub seed: u64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            lipschitz_pairs: 20,
            perturbation: 1e-2,
            variance_samples: 256,
            snapshots: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub steps: usize,
    pub learning_rate: f64,
    /// `(1/K) Σ ‖∇J(Θ_k)‖²` from the exact probe gradient.
    pub mean_sq_grad: f64,
    /// Mean of the recorded stochastic `‖r ∇ log Π‖²`.
    pub mean_sq_stochastic_grad: f64,
    pub objective_initial: f64,
    pub objective_final: f64,
    /// Best achievable probe objective: every probe question on its optimum.
    pub objective_optimal: f64,
    pub lipschitz: f64,
    pub variance: f64,
    /// Standard error of `variance`.
    pub variance_se: f64,
    /// `2 (J* − J_0) / (η K)`
    pub optimization_term: f64,
    /// `L η σ²`
    pub noise_term: f64,
    pub bound: f64,
    /// Bound with `σ²` raised by two standard errors.
    pub bound_upper: f64,
    /// `η ≤ 1 / L`
    pub step_size_ok: bool,
    pub holds: bool,
}

/// Observer that records `‖∇J(Θ_k)‖²` before every step and keeps a few
/// parameter snapshots for the smoothness and variance estimates.
pub struct ConvergenceProbe<'a> {
    spec: &'a SimSpec,
    probe: Vec<ProbeContext>,
    snapshot_every: usize,
    sq_norms: Vec<f64>,
    objectives: Vec<f64>,
    snapshots: Vec<PolicyParams>,
    error: Option<Error>,
}

impl<'a> ConvergenceProbe<'a> {
    pub fn new(spec: &'a SimSpec, probe: Vec<ProbeContext>, total_steps: usize, config: &ConvergenceConfig) -> Self {
        let snapshot_every = total_steps.div_ceil(config.snapshots.max(1)).max(1);
        Self {
            spec,
            probe,
            snapshot_every,
            sq_norms: Vec::with_capacity(total_steps),
            objectives: Vec::new(),
            snapshots: Vec::new(),
            error: None,
        }
    }

    pub fn observe(&mut self, step: usize, params: &PolicyParams) {
        if self.error.is_some() {
            return;
        }
        match exact_objective_grad(params, self.spec, &self.probe) {
            Ok((j, g)) => {
                self.sq_norms.push(g.norm_sq());
                if step == 0 {
                    self.objectives.push(j);
                }
                if step % self.snapshot_every == 0 {
                    self.snapshots.push(params.clone());
                }
            }
            Err(e) => self.error = Some(e),
        }
    }

    pub fn sq_norms(&self) -> &[f64] {
        &self.sq_norms
    }

    fn optimal_objective(&self) -> f64 {
        self.probe.iter().map(|p| self.spec.optimal_mean(p.bucket)).sum::<f64>() / self.probe.len() as f64
    }

    /// Largest `‖∇J(a) − ∇J(b)‖ / ‖a − b‖` over random nearby pairs.
    fn lipschitz<R: Rng>(&self, config: &ConvergenceConfig, rng: &mut R) -> Result<f64> {
        let mut best: f64 = 0.0;
        for _ in 0..config.lipschitz_pairs {
            let base = &self.snapshots[rng.random_range(0..self.snapshots.len())];
            let mut dir = base.zeros_like();
            for v in dir.values_mut() {
                *v = StandardNormal.sample(rng);
            }
            let scale = config.perturbation * base.norm_sq().sqrt().max(1.0) / dir.norm_sq().sqrt();
            let mut a = base.clone();
            a.add_scaled(&dir, scale / 2.0);
            let mut b = base.clone();
            b.add_scaled(&dir, -scale / 2.0);
            let ga = exact_objective_grad(&a, self.spec, &self.probe)?.1;
            let gb = exact_objective_grad(&b, self.spec, &self.probe)?.1;
            let ratio = (ga.distance_sq(&gb) / a.distance_sq(&b)).sqrt();
            if ratio.is_finite() {
                best = best.max(ratio);
            }
        }
        Ok(best)
    }

    /// Largest `E‖g − ∇J‖²` across snapshots, with its standard error.
    ///
    /// `g = r ∇ log Π(a | q)` with `q` uniform over the probe, `a` drawn from
    /// the untempered policy and `r` from the noisy simulator.
    fn variance<R: Rng>(&self, config: &ConvergenceConfig, rng: &mut R) -> Result<(f64, f64)> {
        let n = config.variance_samples.max(2);
        let mut worst = (0.0, 0.0);
        for params in &self.snapshots {
            let mean_grad = exact_objective_grad(params, self.spec, &self.probe)?.1;
            let mut devs = Vec::with_capacity(n);
            for _ in 0..n {
                let p = &self.probe[rng.random_range(0..self.probe.len())];
                let triple = params.sample(&p.context, 1.0, rng)?.triple;
                let mean = self.spec.mean(p.bucket, &triple)?;
                let r = noisy(mean, self.spec.noise_sigma(), rng);
                let g = params.grad_log_prob(&p.context, &triple)?.scaled(r);
                devs.push(g.distance_sq(&mean_grad));
            }
            let m = devs.iter().sum::<f64>() / n as f64;
            let var = devs.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / (n - 1) as f64;
            let se = (var / n as f64).sqrt();
            if m > worst.0 {
                worst = (m, se);
            }
        }
        Ok(worst)
    }

    pub fn finish(self, report: &TrainReport, learning_rate: f64, config: &ConvergenceConfig) -> Result<ConvergenceReport> {
        if let Some(e) = self.error {
            return Err(e);
        }
        let k = self.sq_norms.len();
        if k == 0 || k != report.steps() {
            return Err(Error::validation(format!(
                "probe saw {k} steps but the run has {}",
                report.steps()
            )));
        }
        let mut rng = seed::rng(config.seed, seed::PROBE);
        let lipschitz = self.lipschitz(config, &mut rng)?;
        let (variance, variance_se) = self.variance(config, &mut rng)?;
        let objective_optimal = self.optimal_objective();
        let objective_initial = self.objectives[0];
        let objective_final = exact_objective(&report.final_params, self.spec, &self.probe)?;
        let mean_sq_grad = self.sq_norms.iter().sum::<f64>() / k as f64;
        let mean_sq_stochastic_grad = report.gradient_sq_norm_curve.iter().sum::<f64>() / k as f64;
        let optimization_term = 2.0 * (objective_optimal - objective_initial).max(0.0) / (learning_rate * k as f64);
        let noise_term = lipschitz * learning_rate * variance;
        let bound = optimization_term + noise_term;
        let bound_upper = optimization_term + lipschitz * learning_rate * (variance + 2.0 * variance_se);
        Ok(ConvergenceReport {
            steps: k,
            learning_rate,
            mean_sq_grad,
            mean_sq_stochastic_grad,
            objective_initial,
            objective_final,
            objective_optimal,
            lipschitz,
            variance,
            variance_se,
            optimization_term,
            noise_term,
            bound,
            bound_upper,
            step_size_ok: learning_rate * lipschitz <= 1.0,
            holds: mean_sq_grad <= bound_upper,
        })
    }
}

fn noisy<R: Rng>(mean: f64, sigma: f64, rng: &mut R) -> f64 {
    if sigma == 0.0 {
        return mean;
    }
    loop {
        let x: f64 = StandardNormal.sample(rng);
        if x.abs() <= 3.0 {
            return (mean + sigma * x).clamp(0.0, 1.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::PolicyShape;
    use crate::space::{ActionTriple, AxisSizes};

    fn setup() -> (PolicyParams, SimSpec, Vec<ProbeContext>) {
        let sizes = AxisSizes([3, 2, 2]);
        let shape = PolicyShape { input_width: 8, hidden_width: 6, head_widths: vec![5] };
        let params = PolicyParams::init(sizes, &shape, 3).unwrap();
        let tables = vec![
            (0..12).map(|i| i as f64 / 12.0).collect(),
            (0..12).map(|i| ((i * 7) % 12) as f64 / 12.0).collect(),
        ];
        let spec = SimSpec::from_tables(sizes, tables, 0.05).unwrap();
        let probe = vec![
            ProbeContext { bucket: 0, context: (0..8).map(|i| (i as f64 * 0.7).sin()).collect() },
            ProbeContext { bucket: 1, context: (0..8).map(|i| (i as f64 * 1.3).cos()).collect() },
        ];
        (params, spec, probe)
    }

    /// Enumerate every triple directly.
    fn brute_objective(params: &PolicyParams, spec: &SimSpec, probe: &[ProbeContext]) -> f64 {
        let mut total = 0.0;
        for p in probe {
            for t in spec.sizes().triples() {
                let lp = params.log_prob(&p.context, &t).unwrap();
                total += lp.exp() * spec.mean(p.bucket, &t).unwrap();
            }
        }
        total / probe.len() as f64
    }

    #[test]
    fn objective_matches_enumeration() {
        let (params, spec, probe) = setup();
        let j = exact_objective(&params, &spec, &probe).unwrap();
        assert!((j - brute_objective(&params, &spec, &probe)).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_score_function_enumeration() {
        let (params, spec, probe) = setup();
        let mut expected = params.zeros_like();
        for p in &probe {
            for t in spec.sizes().triples() {
                let w = params.log_prob(&p.context, &t).unwrap().exp() * spec.mean(p.bucket, &t).unwrap();
                expected.add_scaled(&params.grad_log_prob(&p.context, &t).unwrap(), w / probe.len() as f64);
            }
        }
        let (_, grad) = exact_objective_grad(&params, &spec, &probe).unwrap();
        for (a, b) in grad.values().zip(expected.values()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (params, spec, probe) = setup();
        let (_, grad) = exact_objective_grad(&params, &spec, &probe).unwrap();
        let flat = grad.to_flat();
        for idx in (0..params.num_params()).step_by(7) {
            let mut plus = params.clone();
            let mut minus = params.clone();
            *plus.values_mut().nth(idx).unwrap() += 1e-6;
            *minus.values_mut().nth(idx).unwrap() -= 1e-6;
            let fd = (brute_objective(&plus, &spec, &probe) - brute_objective(&minus, &spec, &probe)) / 2e-6;
            assert!((fd - flat[idx]).abs() < 1e-7, "{idx}: {fd} vs {}", flat[idx]);
        }
    }

    #[test]
    fn optimum_of_probe() {
        let (params, spec, probe) = setup();
        let p = ConvergenceProbe::new(&spec, probe, 10, &ConvergenceConfig::default());
        assert_eq!(p.optimal_objective(), (11.0 / 12.0 + 11.0 / 12.0) / 2.0);
        assert_eq!(spec.optimum(0), ActionTriple::new(2, 1, 1));
        assert!(exact_objective(&params, &spec, &[]).is_err());
    }
}
