//! Factorized softmax policy.
//!
//! The question embedding is multiplied by `√width`, so a unit-norm
//! embedding has roughly unit-variance coordinates, and a shared `tanh`
//! layer maps it to a hidden vector `h`.
//! Three independent heads (instruction, temperature, steps) map `h` to
//! logits through `hidden → 128 → 64 → |axis|` stacks with ReLU between
//! layers. Each head is a Boltzmann distribution over its axis; the joint
//! policy is their product.
//!
//! Gradients are closed form. For a head with probabilities `p` at
//! temperature `τ`, `∂ log p_a / ∂ z_i = (1[i = a] − p_i) / τ`; the heads'
//! contributions to `h` are summed before the shared layer is differentiated.

mod checkpoint;
mod layer;

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use layer::Dense;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::space::{ActionTriple, Axis, AxisSizes};

/// Layer widths of the policy network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyShape {
    pub input_width: usize,
    pub hidden_width: usize,
    /// Interior widths of each head, input side first.
    pub head_widths: Vec<usize>,
}

impl Default for PolicyShape {
    fn default() -> Self {
        Self {
            input_width: crate::embed::DEFAULT_WIDTH,
            hidden_width: 128,
            head_widths: vec![128, 64],
        }
    }
}

impl PolicyShape {
    pub fn with_input_width(input_width: usize) -> Self {
        Self {
            input_width,
            ..Self::default()
        }
    }
}

/// All trainable weights. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub shared: Dense,
    /// Layer stacks indexed by [`Axis::slot`].
    pub heads: [Vec<Dense>; 3],
}

/// Logits and tempered probabilities of one head.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadDistribution {
    pub logits: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub tau: f64,
}

impl HeadDistribution {
    pub fn from_logits(logits: Vec<f64>, tau: f64) -> Self {
        let probabilities = tempered_softmax(&logits, tau);
        Self {
            logits,
            probabilities,
            tau,
        }
    }

    /// Inverse-CDF draw from the tempered probabilities.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.probabilities, rng)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutput {
    pub hidden: Vec<f64>,
    /// Indexed by [`Axis::slot`].
    pub heads: [HeadDistribution; 3],
}

impl PolicyOutput {
    pub fn head(&self, axis: Axis) -> &HeadDistribution {
        &self.heads[axis.slot()]
    }
}

/// A sampled configuration with the untempered log-probability of each
/// chosen arm.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDecision {
    pub triple: ActionTriple,
    /// `log π_axis(a_axis | h)` at τ = 1, indexed by [`Axis::slot`].
    pub log_probs: [f64; 3],
    pub hidden: Vec<f64>,
}

impl PolicyDecision {
    pub fn log_prob(&self, axis: Axis) -> f64 {
        self.log_probs[axis.slot()]
    }

    pub fn joint_log_prob(&self) -> f64 {
        self.log_probs.iter().sum()
    }
}

/// Softmax of `logits / tau` with max-logit subtraction.
///
/// Probabilities are floored at the smallest positive normal so they stay
/// strictly positive at very low temperatures.
pub fn tempered_softmax(logits: &[f64], tau: f64) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|z| ((z - max) / tau).exp()).collect();
    let total: f64 = out.iter().sum();
    for p in &mut out {
        *p = (*p / total).max(f64::MIN_POSITIVE);
    }
    out
}

/// `log softmax(logits / tau)[index]`.
pub fn log_softmax_at(logits: &[f64], index: usize, tau: f64) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = logits.iter().map(|z| ((z - max) / tau).exp()).sum::<f64>().ln();
    (logits[index] - max) / tau - lse
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn sample_index<R: Rng + ?Sized>(probabilities: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probabilities.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probabilities.len() - 1
}

fn relu(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Intermediate values kept for backpropagation.
struct Trace {
    input: Vec<f64>,
    hidden: Vec<f64>,
    /// Per head: the input to every layer, so `layer_inputs[0] == hidden`.
    layer_inputs: [Vec<Vec<f64>>; 3],
    logits: [Vec<f64>; 3],
}

impl PolicyParams {
    /// Deterministic initialization from `seed`.
    pub fn init(sizes: AxisSizes, shape: &PolicyShape, seed: u64) -> Result<Self> {
        if shape.input_width < crate::embed::MIN_WIDTH {
            return Err(Error::validation(format!(
                "input width {} below minimum {}",
                shape.input_width,
                crate::embed::MIN_WIDTH
            )));
        }
        if shape.hidden_width == 0 || shape.head_widths.iter().any(|&w| w == 0) {
            return Err(Error::validation("layer widths must be positive"));
        }
        if sizes.0.iter().any(|&n| n == 0) {
            return Err(Error::validation("every axis needs at least one value"));
        }
        let mut rng = seed::rng(seed, seed::INIT);
        let shared = Dense::glorot(shape.input_width, shape.hidden_width, &mut rng);
        let heads = Axis::ALL.map(|axis| {
            let mut widths = vec![shape.hidden_width];
            widths.extend(&shape.head_widths);
            widths.push(sizes.get(axis));
            widths
                .windows(2)
                .map(|w| Dense::glorot(w[0], w[1], &mut rng))
                .collect::<Vec<_>>()
        });
        Ok(Self { shared, heads })
    }

    pub fn input_width(&self) -> usize {
        self.shared.inputs
    }

    pub fn hidden_width(&self) -> usize {
        self.shared.outputs
    }

    pub fn shape(&self) -> PolicyShape {
        let head = &self.heads[0];
        PolicyShape {
            input_width: self.input_width(),
            hidden_width: self.hidden_width(),
            head_widths: head[..head.len() - 1].iter().map(|l| l.outputs).collect(),
        }
    }

    /// Output widths of the three heads.
    pub fn sizes(&self) -> AxisSizes {
        AxisSizes(self.heads.each_ref().map(|h| h.last().map_or(0, |l| l.outputs)))
    }

    pub fn head(&self, axis: Axis) -> &[Dense] {
        &self.heads[axis.slot()]
    }

    /// Same architecture, all zeros.
    pub fn zeros_like(&self) -> Self {
        let zero = |l: &Dense| Dense::zeros(l.inputs, l.outputs);
        Self {
            shared: zero(&self.shared),
            heads: self.heads.each_ref().map(|h| h.iter().map(zero).collect()),
        }
    }

    fn layers(&self) -> impl Iterator<Item = &Dense> {
        std::iter::once(&self.shared).chain(self.heads.iter().flatten())
    }

    fn layers_mut(&mut self) -> impl Iterator<Item = &mut Dense> {
        std::iter::once(&mut self.shared).chain(self.heads.iter_mut().flatten())
    }

    /// Every parameter in canonical order: shared layer, then the heads in
    /// axis order, each layer's weights before its biases.
    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers().flat_map(Dense::values)
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers_mut().flat_map(Dense::values_mut)
    }

    pub fn num_params(&self) -> usize {
        self.layers().map(Dense::num_params).sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.values().copied().collect()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.shared.same_shape(&other.shared)
            && self
                .heads
                .iter()
                .zip(&other.heads)
                .all(|(a, b)| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.same_shape(y)))
    }

    fn zip_slices<'a>(&'a self, other: &'a Self) -> impl Iterator<Item = (&'a [f64], &'a [f64])> {
        self.layers().zip(other.layers()).flat_map(|(a, b)| {
            [(a.weights.as_slice(), b.weights.as_slice()), (a.bias.as_slice(), b.bias.as_slice())]
        })
    }

    /// `self += scale · other`.
    pub fn add_scaled(&mut self, other: &Self, scale: f64) {
        debug_assert!(self.same_shape(other));
        for (la, lb) in self.layers_mut().zip(other.layers()) {
            for (a, b) in la.weights.iter_mut().zip(&lb.weights) {
                *a += scale * b;
            }
            for (a, b) in la.bias.iter_mut().zip(&lb.bias) {
                *a += scale * b;
            }
        }
    }

    pub fn scale(&mut self, scale: f64) {
        for l in self.layers_mut() {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(|v| *v *= scale);
        }
    }

    pub fn scaled(&self, scale: f64) -> Self {
        let mut out = self.clone();
        out.scale(scale);
        out
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.zip_slices(other).map(|(a, b)| layer::dot(a, b)).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    /// `‖self − other‖²`.
    pub fn distance_sq(&self, other: &Self) -> f64 {
        self.zip_slices(other)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers().all(|l| l.values().all(|v| v.is_finite()))
    }

    fn check_context(&self, context: &[f64]) -> Result<()> {
        if context.len() != self.input_width() {
            return Err(Error::validation(format!(
                "context width {} != policy input width {}",
                context.len(),
                self.input_width()
            )));
        }
        if context.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("context contains a non-finite value"));
        }
        Ok(())
    }

    fn trace(&self, context: &[f64]) -> Result<Trace> {
        self.check_context(context)?;
        let gain = (self.input_width() as f64).sqrt();
        let input: Vec<f64> = context.iter().map(|v| v * gain).collect();
        let hidden: Vec<f64> = self
            .shared
            .forward(&input)
            .into_iter()
            .map(f64::tanh)
            .collect();
        let mut layer_inputs: [Vec<Vec<f64>>; 3] = Default::default();
        let mut logits: [Vec<f64>; 3] = Default::default();
        for (slot, head) in self.heads.iter().enumerate() {
            let mut x = hidden.clone();
            for (i, layer) in head.iter().enumerate() {
                let mut y = layer.forward(&x);
                if i + 1 < head.len() {
                    relu(&mut y);
                }
                layer_inputs[slot].push(std::mem::replace(&mut x, y));
            }
            logits[slot] = x;
        }
        Ok(Trace {
            input,
            hidden,
            layer_inputs,
            logits,
        })
    }

    /// Logits of the three heads at `context`.
    pub fn logits(&self, context: &[f64]) -> Result<[Vec<f64>; 3]> {
        Ok(self.trace(context)?.logits)
    }

    pub fn forward(&self, context: &[f64], tau: f64) -> Result<PolicyOutput> {
        check_tau(tau)?;
        let trace = self.trace(context)?;
        Ok(PolicyOutput {
            hidden: trace.hidden,
            heads: trace.logits.map(|l| HeadDistribution::from_logits(l, tau)),
        })
    }

    /// Draw each axis independently from its `tau`-tempered distribution.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        context: &[f64],
        tau: f64,
        rng: &mut R,
    ) -> Result<PolicyDecision> {
        let out = self.forward(context, tau)?;
        let picks = out.heads.each_ref().map(|h| h.sample(rng));
        let log_probs = [0, 1, 2].map(|s| log_softmax_at(&out.heads[s].logits, picks[s], 1.0));
        Ok(PolicyDecision {
            triple: ActionTriple::from_array(picks),
            log_probs,
            hidden: out.hidden,
        })
    }

    /// Per-axis argmax; lowest index on ties.
    pub fn greedy(&self, context: &[f64]) -> Result<ActionTriple> {
        let logits = self.logits(context)?;
        Ok(ActionTriple::from_array(logits.each_ref().map(|l| argmax(l))))
    }

    /// `log Π(triple | context)` at temperature `tau`.
    pub fn log_prob_tempered(&self, context: &[f64], triple: &ActionTriple, tau: f64) -> Result<f64> {
        check_tau(tau)?;
        self.sizes().check(triple)?;
        let logits = self.logits(context)?;
        Ok(Axis::ALL
            .iter()
            .map(|&a| log_softmax_at(&logits[a.slot()], triple.index(a), tau))
            .sum())
    }

    pub fn log_prob(&self, context: &[f64], triple: &ActionTriple) -> Result<f64> {
        self.log_prob_tempered(context, triple, 1.0)
    }

    /// Vector-Jacobian product: gradient of `Σ_heads ⟨logit_grads[h], z_h⟩`
    /// with respect to every parameter.
    pub fn backprop(&self, context: &[f64], logit_grads: &[Vec<f64>; 3]) -> Result<PolicyParams> {
        let trace = self.trace(context)?;
        Ok(self.backprop_trace(&trace, logit_grads))
    }

    fn backprop_trace(&self, trace: &Trace, logit_grads: &[Vec<f64>; 3]) -> PolicyParams {
        let mut grad = self.zeros_like();
        let mut d_hidden = vec![0.0; self.hidden_width()];
        for slot in 0..3 {
            let head = &self.heads[slot];
            let inputs = &trace.layer_inputs[slot];
            let mut d = logit_grads[slot].clone();
            for i in (0..head.len()).rev() {
                let dx = head[i].backward(&inputs[i], &d, &mut grad.heads[slot][i]);
                d = if i > 0 {
                    // inputs[i] is the ReLU output of layer i-1
                    dx.into_iter()
                        .zip(&inputs[i])
                        .map(|(g, &a)| if a > 0.0 { g } else { 0.0 })
                        .collect()
                } else {
                    dx
                };
            }
            for (acc, g) in d_hidden.iter_mut().zip(&d) {
                *acc += g;
            }
        }
        let d_pre: Vec<f64> = d_hidden
            .iter()
            .zip(&trace.hidden)
            .map(|(g, h)| g * (1.0 - h * h))
            .collect();
        self.shared.backward(&trace.input, &d_pre, &mut grad.shared);
        grad
    }

    fn log_prob_logit_grads(logits: &[Vec<f64>; 3], picks: [Option<usize>; 3], tau: f64) -> [Vec<f64>; 3] {
        [0, 1, 2].map(|slot| match picks[slot] {
            None => vec![0.0; logits[slot].len()],
            Some(a) => {
                let p = tempered_softmax(&logits[slot], tau);
                p.iter()
                    .enumerate()
                    .map(|(i, pi)| (f64::from(u8::from(i == a)) - pi) / tau)
                    .collect()
            }
        })
    }

    /// `∇_Θ log Π_τ(triple | context)`, summed over the three heads.
    pub fn grad_log_prob_tempered(
        &self,
        context: &[f64],
        triple: &ActionTriple,
        tau: f64,
    ) -> Result<PolicyParams> {
        check_tau(tau)?;
        self.sizes().check(triple)?;
        let trace = self.trace(context)?;
        let picks = triple.as_array().map(Some);
        let g = Self::log_prob_logit_grads(&trace.logits, picks, tau);
        Ok(self.backprop_trace(&trace, &g))
    }

    /// `∇_Θ log Π(triple | context)` at τ = 1.
    pub fn grad_log_prob(&self, context: &[f64], triple: &ActionTriple) -> Result<PolicyParams> {
        self.grad_log_prob_tempered(context, triple, 1.0)
    }

    /// Gradient of a single head's log-probability. Only that head and the
    /// shared layer receive non-zero entries.
    pub fn grad_head_log_prob(&self, context: &[f64], axis: Axis, index: usize) -> Result<PolicyParams> {
        let len = self.sizes().get(axis);
        if index >= len {
            return Err(Error::Bounds { axis, index, len });
        }
        let trace = self.trace(context)?;
        let mut picks = [None; 3];
        picks[axis.slot()] = Some(index);
        let g = Self::log_prob_logit_grads(&trace.logits, picks, 1.0);
        Ok(self.backprop_trace(&trace, &g))
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(format!("temperature {tau} must be positive and finite")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::ActionSpace;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_shape() -> PolicyShape {
        PolicyShape {
            input_width: 8,
            hidden_width: 6,
            head_widths: vec![5, 4],
        }
    }

    fn context(seed: u64, width: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..width).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn init_matches_space() {
        let space = ActionSpace::build_default();
        let params = PolicyParams::init(space.sizes(), &PolicyShape::default(), 7).unwrap();
        assert_eq!(params.sizes(), AxisSizes([100, 11, 8]));
        assert_eq!(params.head(Axis::Instruction).len(), 3);
        assert_eq!(params.head(Axis::Steps)[0].inputs, 128);
        assert_eq!(params.head(Axis::Steps)[1].outputs, 64);
        assert_eq!(params.shape(), PolicyShape::default());

        let again = PolicyParams::init(space.sizes(), &PolicyShape::default(), 7).unwrap();
        let bits = |p: &PolicyParams| p.values().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&params), bits(&again));
        let other = PolicyParams::init(space.sizes(), &PolicyShape::default(), 8).unwrap();
        assert_ne!(bits(&params), bits(&other));
    }

    #[test]
    fn init_rejects_narrow_input() {
        let shape = PolicyShape {
            input_width: 4,
            ..small_shape()
        };
        assert!(PolicyParams::init(AxisSizes([2, 2, 2]), &shape, 0).is_err());
    }

    #[test]
    fn softmax_examples() {
        let p = tempered_softmax(&[3.0, 3.0, 3.0, 3.0], 0.37);
        assert!(p.iter().all(|&x| (x - 0.25).abs() < 1e-15));

        let p = tempered_softmax(&[1.0, 0.0], 1.0);
        let e = std::f64::consts::E;
        assert!((p[0] - e / (e + 1.0)).abs() < 1e-15);
        assert!((p[1] - 1.0 / (e + 1.0)).abs() < 1e-15);
        assert!((p[0] - 0.7311).abs() < 1e-4);

        let p = tempered_softmax(&[0.2, 0.5, 0.1], 1e-6);
        assert!(p[1] >= 1.0 - 1e-9);
        assert!(p.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn softmax_is_stable_for_large_logits() {
        let p = tempered_softmax(&[1000.0, 999.0], 1.0);
        assert!(p.iter().all(|x| x.is_finite()));
        assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[0.1, 0.9, 0.9, 0.2]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
    }

    #[test]
    fn forward_rejects_bad_inputs() {
        let params = PolicyParams::init(AxisSizes([3, 2, 2]), &small_shape(), 1).unwrap();
        let mut ctx = context(1, 8);
        assert!(params.forward(&ctx, 0.0).is_err());
        assert!(params.forward(&ctx, -1.0).is_err());
        assert!(params.forward(&ctx[..7], 1.0).is_err());
        ctx[3] = f64::NAN;
        assert!(matches!(params.forward(&ctx, 1.0), Err(Error::Validation(_))));
    }

    #[test]
    fn cold_sampling_is_greedy() {
        let params = PolicyParams::init(AxisSizes([10, 11, 8]), &small_shape(), 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for s in 0..20 {
            let ctx = context(s, 8);
            let d = params.sample(&ctx, 1e-6, &mut rng).unwrap();
            let greedy = params.greedy(&ctx).unwrap();
            for (slot, l) in params.logits(&ctx).unwrap().iter().enumerate() {
                let mut sorted = l.clone();
                sorted.sort_by(|a, b| b.total_cmp(a));
                if sorted[0] - sorted[1] > 1e-3 {
                    assert_eq!(d.triple.as_array()[slot], greedy.as_array()[slot]);
                }
            }
            assert!(d.log_probs.iter().all(|l| *l <= 0.0 && l.is_finite()));
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let params = PolicyParams::init(AxisSizes([10, 11, 8]), &small_shape(), 3).unwrap();
        let ctx = context(4, 8);
        let a = params.sample(&ctx, 1.0, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = params.sample(&ctx, 1.0, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn decision_log_probs_are_untempered() {
        let params = PolicyParams::init(AxisSizes([10, 11, 8]), &small_shape(), 3).unwrap();
        let ctx = context(4, 8);
        let d = params.sample(&ctx, 0.3, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let lp = params.log_prob(&ctx, &d.triple).unwrap();
        assert!((d.joint_log_prob() - lp).abs() < 1e-12);
    }

    #[test]
    fn greedy_tie_goes_low() {
        let mut params = PolicyParams::init(AxisSizes([3, 3, 3]), &small_shape(), 3).unwrap();
        // zero the last layer of the temperature head and plant a tie
        let last = params.heads[1].last_mut().unwrap();
        last.weights.iter_mut().for_each(|w| *w = 0.0);
        last.bias = vec![0.2, 0.7, 0.7];
        let g = params.greedy(&context(2, 8)).unwrap();
        assert_eq!(g.temperature_index, 1);
    }

    #[test]
    fn softmax_logit_gradient_identity() {
        // one-layer heads make logits an identity of the last bias
        let shape = PolicyShape {
            input_width: 8,
            hidden_width: 4,
            head_widths: vec![],
        };
        let mut params = PolicyParams::init(AxisSizes([3, 2, 2]), &shape, 0).unwrap();
        for head in &mut params.heads {
            head[0].weights.iter_mut().for_each(|w| *w = 0.0);
        }
        params.heads[0][0].bias = vec![0.3, -0.2, 1.1];
        let ctx = context(0, 8);
        let grad = params
            .grad_head_log_prob(&ctx, Axis::Instruction, 2)
            .unwrap();
        let p = tempered_softmax(&[0.3, -0.2, 1.1], 1.0);
        for i in 0..3 {
            let expected = if i == 2 { 1.0 - p[i] } else { -p[i] };
            assert!((grad.heads[0][0].bias[i] - expected).abs() < 1e-14);
        }

        // uniform head: 1 - 1/n on the taken arm
        let grad = params.grad_head_log_prob(&ctx, Axis::Steps, 1).unwrap();
        assert!((grad.heads[2][0].bias[1] - 0.5).abs() < 1e-15);
        assert!((grad.heads[2][0].bias[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn head_gradient_touches_only_its_head() {
        let params = PolicyParams::init(AxisSizes([4, 3, 2]), &small_shape(), 2).unwrap();
        let g = params.grad_head_log_prob(&context(3, 8), Axis::Temperature, 1).unwrap();
        assert!(g.heads[0].iter().all(|l| l.values().all(|&v| v == 0.0)));
        assert!(g.heads[2].iter().all(|l| l.values().all(|&v| v == 0.0)));
        assert!(g.heads[1].iter().any(|l| l.values().any(|&v| v != 0.0)));
    }

    #[test]
    fn head_gradients_sum_to_joint() {
        let params = PolicyParams::init(AxisSizes([5, 4, 3]), &small_shape(), 11).unwrap();
        let ctx = context(12, 8);
        let triple = ActionTriple::new(3, 1, 2);
        let joint = params.grad_log_prob(&ctx, &triple).unwrap();
        let mut sum = params.zeros_like();
        for axis in Axis::ALL {
            sum.add_scaled(&params.grad_head_log_prob(&ctx, axis, triple.index(axis)).unwrap(), 1.0);
        }
        for (a, b) in joint.values().zip(sum.values()) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn tempered_gradient_scales_with_tau() {
        let params = PolicyParams::init(AxisSizes([5, 4, 3]), &small_shape(), 11).unwrap();
        let ctx = context(1, 8);
        let triple = ActionTriple::new(0, 3, 1);
        let tau = 0.5;
        let g = params.grad_log_prob_tempered(&ctx, &triple, tau).unwrap();
        // central differences on the tempered log-prob along the gradient
        let eps = 1e-6;
        let dir = g.scaled(1.0 / g.norm_sq().sqrt());
        let mut plus = params.clone();
        plus.add_scaled(&dir, eps);
        let mut minus = params.clone();
        minus.add_scaled(&dir, -eps);
        let fd = (plus.log_prob_tempered(&ctx, &triple, tau).unwrap()
            - minus.log_prob_tempered(&ctx, &triple, tau).unwrap())
            / (2.0 * eps);
        assert!((fd - g.dot(&dir)).abs() < 1e-6 * (1.0 + fd.abs()));
    }

    proptest! {
        #[test]
        fn probabilities_normalized(
            logits in proptest::collection::vec(-50.0f64..50.0, 1..40),
            tau in 0.01f64..100.0,
        ) {
            let p = tempered_softmax(&logits, tau);
            let total: f64 = p.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|&x| x > 0.0));
        }

        #[test]
        fn argmax_invariant_under_temperature(
            logits in proptest::collection::vec(-10.0f64..10.0, 1..40),
            tau in 0.05f64..20.0,
        ) {
            let p = tempered_softmax(&logits, tau);
            let best = logits[argmax(&logits)];
            prop_assert_eq!(logits[argmax(&p)], best);
        }

        #[test]
        fn greedy_same_at_any_temperature(seed in 0u64..200) {
            let params = PolicyParams::init(AxisSizes([7, 5, 3]), &small_shape(), seed).unwrap();
            let ctx = context(seed + 1000, 8);
            let g = params.greedy(&ctx).unwrap();
            for tau in [0.1, 1.0, 10.0] {
                let out = params.forward(&ctx, tau).unwrap();
                let picks = out.heads.each_ref().map(|h| argmax(&h.probabilities));
                prop_assert_eq!(ActionTriple::from_array(picks), g);
            }
        }
    }
}
