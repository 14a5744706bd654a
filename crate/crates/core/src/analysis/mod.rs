//! Post-hoc diagnostics for training runs: regret against a known mean
//! table, the SGD convergence bound, action statistics, and CSV/JSON export.

mod convergence;
mod export;
mod oracle;
mod regret;
mod stats;

pub use convergence::{
    exact_objective, exact_objective_grad, ConvergenceConfig, ConvergenceProbe, ConvergenceReport,
    ProbeContext,
};
pub use export::{
    read_step_csv, read_transitions_csv, step_rows, write_json, write_step_csv,
    write_transitions_csv, StepRow, TransitionRow,
};
pub use oracle::{joint_oracle, joint_oracle_table, per_axis_argmax, MAX_ORACLE_ARMS};
pub use regret::{compute_regret, sublinearity_check, RegretTrace, SublinearityReport, SUBLINEAR_RATIO};
pub use stats::{action_stats, ActionStats, AxisSummary};
