//! Command-line front end: `train`, `infer`, `simulate` and `analyze`.
//!
//! Exit codes are 0 on success, 1 on usage errors and 2 on runtime errors.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    action_stats, compute_regret, read_transitions_csv, step_rows, sublinearity_check, write_json,
    write_step_csv, write_transitions_csv, ActionStats, ConvergenceConfig, ConvergenceProbe,
    ConvergenceReport, ProbeContext, SublinearityReport,
};
use crate::dataset::{Dataset, QaPair};
use crate::embed::{Embedder, EmbedderConfig};
use crate::env::{
    llm_generate, synthetic_dataset, Environment, LiveEnvironment, SimConfig, SimEnvironment, SimSpec,
};
use crate::error::{read_to_string, Error, Result};
use crate::policy::{Checkpoint, PolicyParams, PolicyShape};
use crate::seed;
use crate::space::{ActionSpace, ActionTriple};
use crate::trainer::{embed_dataset, train, TrainConfig, TrainReport, Transition};

/// Bearer token for a remote embedding endpoint.
pub const ENV_EMBED_KEY: &str = "CONFBANDIT_EMBED_KEY";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "confbandit", version, about = "Learn per-question reasoning configurations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a policy on a dataset and write a checkpoint.
    Train(TrainArgs),
    /// Print the greedy configuration for one question or a dataset.
    Infer(InferArgs),
    /// Train against the simulator and write regret, convergence and action reports.
    Simulate(SimulateArgs),
    /// Recompute reports from a stored transitions file.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    Sim,
    Live,
}

/// Flags that override fields of the `[train]` table.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Root seed; also used for the simulator table and convergence probes.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Shuffle question order with this seed.
    #[arg(long)]
    pub shuffle: Option<u64>,
    /// Trials per question.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub tau0: Option<f64>,
    #[arg(long = "tau-min")]
    pub tau_min: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// JSONL file with `id`, `question` and `reference` keys.
    #[arg(long)]
    pub dataset: PathBuf,
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "sim")]
    pub env: EnvKind,
    /// Score live answers with the binary judge instead of a scalar endpoint.
    #[arg(long)]
    pub judge: bool,
    /// Where to write the trained checkpoint.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Directory for the manifest and transitions; defaults to the checkpoint's directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Question text.
    #[arg(conflicts_with = "dataset", required_unless_present = "dataset")]
    pub question: Option<String>,
    /// JSONL dataset; one decision per record, in file order.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Also generate an answer with the configured LLM endpoint.
    #[arg(long)]
    pub live: bool,
    /// One JSON object per line.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Train on these questions instead of synthetic ones.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Print the summary as JSON.
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Transitions CSV written by `train` or `simulate`.
    #[arg(long)]
    pub transitions: PathBuf,
    /// Manifest of the run; defaults to `manifest.json` next to the transitions.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    /// Synthetic training questions when no dataset is given.
    pub questions: usize,
    /// Questions whose contexts define the exact objective.
    pub probe_questions: usize,
    /// Synthetic questions used to score the greedy policy.
    pub held_out: usize,
    pub top_instructions: usize,
    pub convergence: ConvergenceConfig,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            questions: 100,
            probe_questions: 20,
            held_out: 50,
            top_instructions: 5,
            convergence: ConvergenceConfig::default(),
        }
    }
}

/// Everything a run reads from its TOML file. Missing tables take defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub sim: SimConfig,
    pub embedder: EmbedderConfig,
    /// Defaults to the built-in space.
    pub space: Option<ActionSpace>,
    pub simulate: SimulateConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::format(format!("run config: {e}")))?;
        config.train.validate()?;
        Ok(config)
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::from_toml_str(&read_to_string(p)?),
            None => Ok(Self::default()),
        }
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(seed) = o.seed {
            self.train.seed = seed;
            self.sim.seed = seed;
            self.simulate.convergence.seed = seed;
        }
        if o.shuffle.is_some() {
            self.train.shuffle = o.shuffle;
        }
        if let Some(t) = o.trials {
            self.train.trials_per_question = t;
        }
        if let Some(lr) = o.lr {
            self.train.learning_rate = lr;
        }
        if let Some(t) = o.tau0 {
            self.train.tau0 = t;
        }
        if let Some(t) = o.tau_min {
            self.train.tau_min = t;
        }
        self.train.validate()
    }

    /// Fill in the space so the manifest is self-contained.
    pub fn resolved(mut self) -> Self {
        self.space.get_or_insert_with(ActionSpace::build_default);
        self
    }

    pub fn space(&self) -> ActionSpace {
        self.space.clone().unwrap_or_default()
    }
}

/// Written next to every run's outputs. Holds enough to rebuild a simulated
/// run; keys are never recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub env: EnvKind,
    pub config: RunConfig,
    pub dataset: Option<PathBuf>,
    /// Per-subsystem seeds derived from the root seed.
    pub seeds: BTreeMap<String, u64>,
    pub endpoints: Vec<String>,
    pub checkpoint: Option<PathBuf>,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
}

impl RunManifest {
    fn new(command: &str, env: EnvKind, config: &RunConfig) -> Self {
        let root = config.train.seed;
        let seeds = [seed::INIT, seed::SAMPLING, seed::SIM_NOISE, seed::SHUFFLE]
            .iter()
            .map(|l| (l.to_string(), seed::derive(root, l)))
            .chain([("root".to_string(), root), ("sim_table".to_string(), config.sim.seed)])
            .collect();
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            env,
            config: config.clone().resolved(),
            dataset: None,
            seeds,
            endpoints: Vec::new(),
            checkpoint: None,
            started_unix_ms: now_ms(),
            finished_unix_ms: 0,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        serde_json::from_str(&read_to_string(path)?)
            .map_err(|e| Error::format(format!("{}: {e}", path.display())))
    }

    fn finish(mut self, path: &Path) -> Result<()> {
        self.finished_unix_ms = now_ms();
        write_json(path, &self)
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Deterministic report written by `simulate` and `analyze`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub steps: usize,
    pub mean_reward: f64,
    pub final_tau: Option<f64>,
    pub cumulative_regret: Option<f64>,
    pub sublinearity: Option<SublinearityReport>,
    /// Why the sublinearity check was not run, when it was not.
    pub sublinearity_skipped: Option<String>,
    pub convergence: Option<ConvergenceReport>,
    /// Share of held-out questions whose greedy triple is their bucket's optimum.
    pub held_out_accuracy: Option<f64>,
    pub actions: ActionStats,
}

fn out_files(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn build_embedder(config: &EmbedderConfig) -> Result<Embedder> {
    config.build(std::env::var(ENV_EMBED_KEY).ok().filter(|k| !k.is_empty()))
}

fn init_policy(space: &ActionSpace, embedder: &EmbedderConfig, seed: u64) -> Result<PolicyParams> {
    PolicyParams::init(space.sizes(), &PolicyShape::with_input_width(embedder.width()), seed)
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

fn summarize(
    transitions: &[Transition],
    space: &ActionSpace,
    spec: Option<&SimSpec>,
    top_n: usize,
) -> Result<Summary> {
    let rewards: Vec<f64> = transitions.iter().map(|t| t.env_reward).collect();
    let triples: Vec<ActionTriple> = transitions.iter().map(|t| t.triple).collect();
    let regret = spec.map(|s| compute_regret(transitions, s)).transpose()?;
    let (sublinearity, sublinearity_skipped) = match &regret {
        Some(trace) => match sublinearity_check(trace) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        },
        None => (None, Some("no simulator table for this run".to_string())),
    };
    Ok(Summary {
        steps: transitions.len(),
        mean_reward: mean(&rewards),
        final_tau: transitions.last().map(|t| t.tau),
        cumulative_regret: regret.as_ref().map(|r| r.total()),
        sublinearity,
        sublinearity_skipped,
        convergence: None,
        held_out_accuracy: None,
        actions: action_stats(&triples, space, top_n)?,
    })
}

/// Parse `args` and run. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Train(a) => cmd_train(&a, &mut out),
        Command::Infer(a) => cmd_infer(&a, &mut out),
        Command::Simulate(a) => cmd_simulate(&a, &mut out).map(|_| ()),
        Command::Analyze(a) => cmd_analyze(&a, &mut out).map(|_| ()),
    }
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

pub fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let mut config = RunConfig::load(args.config.as_deref())?;
    config.apply(&args.overrides)?;
    let dataset = Dataset::load(&args.dataset)?;
    if dataset.is_empty() {
        return Err(Error::validation(format!("{}: dataset is empty", args.dataset.display())));
    }
    let space = config.space();
    let embedder = build_embedder(&config.embedder)?;
    let contexts = embed_dataset(&dataset, &embedder)?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| args.checkpoint.parent().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    out_files(&out_dir)?;

    let mut manifest = RunManifest::new("train", args.env, &config);
    manifest.dataset = Some(args.dataset.clone());
    let mut env: Box<dyn Environment> = match args.env {
        EnvKind::Sim => {
            let spec = SimSpec::generate(space.sizes(), &config.sim)?;
            Box::new(SimEnvironment::new(spec, config.train.seed))
        }
        EnvKind::Live => {
            let live = LiveEnvironment::from_env(args.judge)?.with_transcript(out_dir.join("transcript.jsonl"));
            manifest.endpoints = live.endpoints();
            Box::new(live)
        }
    };

    let params = init_policy(&space, &config.embedder, config.train.seed)?;
    let result = train(params, &dataset, &contexts, &space, env.as_mut(), &config.train, None);
    let report = match result {
        Ok(r) => r,
        Err(failure) => {
            write_transitions_csv(&out_dir.join("transitions.csv"), &failure.partial.transitions)?;
            manifest.finish(&out_dir.join("manifest.json"))?;
            return Err(failure.error);
        }
    };
    write_transitions_csv(&out_dir.join("transitions.csv"), &report.transitions)?;
    let metadata = serde_json::json!({
        "steps": report.steps(),
        "seed": config.train.seed,
        "dataset": args.dataset.display().to_string(),
    });
    Checkpoint::new(space, report.final_params.clone(), config.embedder.clone(), metadata)?.save(&args.checkpoint)?;
    manifest.checkpoint = Some(args.checkpoint.clone());
    manifest.finish(&out_dir.join("manifest.json"))?;
    writeln!(
        out,
        "trained {} steps, mean reward {:.4}, checkpoint {}",
        report.steps(),
        mean(&report.transitions.iter().map(|t| t.env_reward).collect::<Vec<_>>()),
        args.checkpoint.display()
    )
    .map_err(stdout_err)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub id: String,
    pub instruction_index: usize,
    pub temperature_index: usize,
    pub steps_index: usize,
    pub instruction: String,
    pub temperature: f64,
    pub steps: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
}

pub fn cmd_infer(args: &InferArgs, out: &mut dyn Write) -> Result<()> {
    let ckpt = Checkpoint::load(&args.checkpoint)?;
    let embedder = build_embedder(&ckpt.embedder)?;
    let pairs: Vec<QaPair> = match (&args.question, &args.dataset) {
        (_, Some(path)) => Dataset::load(path)?.pairs().to_vec(),
        (Some(q), None) => vec![QaPair::new("input", q.clone(), "-")?],
        (None, None) => return Err(Error::validation("give a question or --dataset")),
    };
    let live = if args.live {
        Some(LiveEnvironment::from_env(false)?)
    } else {
        None
    };
    for pair in &pairs {
        let context = if args.dataset.is_some() {
            embedder.embed(pair)?
        } else {
            embedder.embed_text(&pair.question)?
        };
        let triple = ckpt.params.greedy(context.values())?;
        let config = ckpt.space.resolve(&triple)?;
        let answer = match &live {
            Some(env) => Some(llm_generate(env.chat(), pair, &config, env.options())?),
            None => None,
        };
        let decision = Decision {
            id: pair.id.clone(),
            instruction_index: triple.instruction_index,
            temperature_index: triple.temperature_index,
            steps_index: triple.steps_index,
            instruction: config.instruction_text,
            temperature: config.temperature,
            steps: config.steps,
            answer,
        };
        let line = if args.json {
            serde_json::to_string(&decision).map_err(|e| Error::format(e.to_string()))?
        } else {
            let mut s = format!(
                "{}\tinstruction={} temperature={} steps={}",
                decision.id, decision.instruction_index, decision.temperature, decision.steps
            );
            if let Some(a) = &decision.answer {
                s.push_str(&format!("\tanswer={}", a.replace('\n', " ")));
            }
            s
        };
        writeln!(out, "{line}").map_err(stdout_err)?;
    }
    Ok(())
}

fn probe_contexts(
    spec: &SimSpec,
    embedder: &Embedder,
    n: usize,
    seed: u64,
) -> Result<Vec<ProbeContext>> {
    synthetic_dataset(n, "probe", spec.buckets(), seed)?
        .pairs()
        .iter()
        .map(|p| {
            Ok(ProbeContext {
                bucket: spec.bucket_of(&p.id),
                context: embedder.embed(p)?.values().to_vec(),
            })
        })
        .collect()
}

fn held_out_accuracy(
    params: &PolicyParams,
    spec: &SimSpec,
    embedder: &Embedder,
    n: usize,
    seed: u64,
) -> Result<Option<f64>> {
    if n == 0 {
        return Ok(None);
    }
    let test = synthetic_dataset(n, "held-out", spec.buckets(), seed)?;
    let mut hits = 0usize;
    for p in test.pairs() {
        let greedy = params.greedy(embedder.embed(p)?.values())?;
        hits += usize::from(greedy == spec.optimum(spec.bucket_of(&p.id)));
    }
    Ok(Some(hits as f64 / n as f64))
}

/// Outputs: `transitions.csv`, `regret.csv`, `summary.json`,
/// `checkpoint.json` and `manifest.json` in `args.out`.
pub fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<Summary> {
    let mut config = RunConfig::load(args.config.as_deref())?;
    config.apply(&args.overrides)?;
    let space = config.space();
    let spec = SimSpec::generate(space.sizes(), &config.sim)?;
    let seed = config.train.seed;
    let dataset = match &args.dataset {
        Some(p) => Dataset::load(p)?,
        None => synthetic_dataset(config.simulate.questions, "train", spec.buckets(), seed)?,
    };
    if dataset.is_empty() {
        return Err(Error::validation("no training questions"));
    }
    out_files(&args.out)?;
    let mut manifest = RunManifest::new("simulate", EnvKind::Sim, &config);
    manifest.dataset = args.dataset.clone();

    let embedder = build_embedder(&config.embedder)?;
    let contexts = embed_dataset(&dataset, &embedder)?;
    let probe = probe_contexts(&spec, &embedder, config.simulate.probe_questions, seed)?;
    let total = dataset.len() * config.train.trials_per_question;
    let conv_config = &config.simulate.convergence;
    let mut conv = (!probe.is_empty()).then(|| ConvergenceProbe::new(&spec, probe, total, conv_config));
    let mut env = SimEnvironment::new(spec.clone(), seed);
    let params = init_policy(&space, &config.embedder, seed)?;

    let result = {
        let mut observe = |k: usize, p: &PolicyParams| {
            if let Some(c) = conv.as_mut() {
                c.observe(k, p);
            }
        };
        train(params, &dataset, &contexts, &space, &mut env, &config.train, Some(&mut observe))
    };
    let report: TrainReport = match result {
        Ok(r) => r,
        Err(failure) => {
            write_transitions_csv(&args.out.join("transitions.csv"), &failure.partial.transitions)?;
            manifest.finish(&args.out.join("manifest.json"))?;
            return Err(failure.error);
        }
    };

    let regret = compute_regret(&report.transitions, &spec)?;
    write_transitions_csv(&args.out.join("transitions.csv"), &report.transitions)?;
    write_step_csv(&args.out.join("regret.csv"), &step_rows(&report.transitions, Some(&regret))?)?;

    let mut summary = summarize(&report.transitions, &space, Some(&spec), config.simulate.top_instructions)?;
    summary.convergence = conv
        .map(|c| c.finish(&report, config.train.learning_rate, conv_config))
        .transpose()?;
    summary.held_out_accuracy =
        held_out_accuracy(&report.final_params, &spec, &embedder, config.simulate.held_out, seed)?;
    write_json(&args.out.join("summary.json"), &summary)?;

    let ckpt_path = args.out.join("checkpoint.json");
    let metadata = serde_json::json!({ "steps": report.steps(), "seed": seed, "simulated": true });
    Checkpoint::new(space, report.final_params, config.embedder.clone(), metadata)?.save(&ckpt_path)?;
    manifest.checkpoint = Some(ckpt_path);
    manifest.finish(&args.out.join("manifest.json"))?;
    print_summary(out, &summary, args.json)?;
    Ok(summary)
}

fn print_summary(out: &mut dyn Write, summary: &Summary, json: bool) -> Result<()> {
    if json {
        let text = serde_json::to_string_pretty(summary).map_err(|e| Error::format(e.to_string()))?;
        return writeln!(out, "{text}").map_err(stdout_err);
    }
    let mut lines = vec![
        format!("steps            {}", summary.steps),
        format!("mean reward      {:.4}", summary.mean_reward),
    ];
    if let Some(r) = summary.cumulative_regret {
        lines.push(format!("cumulative regret {r:.2}"));
    }
    match (&summary.sublinearity, &summary.sublinearity_skipped) {
        (Some(s), _) => lines.push(format!(
            "doubling ratio   {:.3} ({})",
            s.mean_ratio,
            if s.sublinear { "sublinear" } else { "not sublinear" }
        )),
        (None, Some(why)) => lines.push(format!("doubling ratio   skipped: {why}")),
        _ => {}
    }
    if let Some(c) = &summary.convergence {
        lines.push(format!(
            "gradient bound   {:.4e} <= {:.4e}: {}",
            c.mean_sq_grad, c.bound_upper, c.holds
        ));
    }
    if let Some(a) = summary.held_out_accuracy {
        lines.push(format!("held-out optimum {:.1}%", 100.0 * a));
    }
    for line in lines {
        writeln!(out, "{line}").map_err(stdout_err)?;
    }
    Ok(())
}

/// Rebuilds `regret.csv` and `summary.json` from a transitions file. Regret
/// needs the run's manifest to regenerate the simulator table.
pub fn cmd_analyze(args: &AnalyzeArgs, out: &mut dyn Write) -> Result<Summary> {
    let transitions = read_transitions_csv(&args.transitions)?;
    let manifest_path = args.manifest.clone().unwrap_or_else(|| {
        args.transitions
            .parent()
            .unwrap_or(Path::new("."))
            .join("manifest.json")
    });
    let manifest = if manifest_path.exists() {
        Some(RunManifest::load(&manifest_path)?)
    } else if args.manifest.is_some() {
        return Err(Error::validation(format!("{}: no such manifest", manifest_path.display())));
    } else {
        None
    };
    let config = manifest.as_ref().map(|m| m.config.clone()).unwrap_or_default();
    let space = config.space();
    let spec = match manifest.as_ref().map(|m| m.env) {
        Some(EnvKind::Sim) => Some(SimSpec::generate(space.sizes(), &config.sim)?),
        _ => None,
    };
    out_files(&args.out)?;
    let regret = spec.as_ref().map(|s| compute_regret(&transitions, s)).transpose()?;
    write_step_csv(&args.out.join("regret.csv"), &step_rows(&transitions, regret.as_ref())?)?;
    let summary = summarize(&transitions, &space, spec.as_ref(), config.simulate.top_instructions)?;
    write_json(&args.out.join("summary.json"), &summary)?;
    print_summary(out, &summary, args.json)?;
    Ok(summary)
}
