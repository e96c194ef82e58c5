//! Structure scoring: per-sample core fitting and the log compression/error objective.

mod evaluate;
mod fit;

pub use evaluate::{objective_value, EvalCache, EvaluationResult, Evaluator, Lookup, Source};
pub use fit::{fit_cores, fit_run, init_cores, loss_and_gradient, FitConfig, FitRun, StepRule};

pub(crate) use fit::mix_seed;
