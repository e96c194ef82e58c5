//! Tensor network structure search over fully-connected tensor networks (FCTN).
//!
//! A candidate structure is a symmetric rank matrix over the complete graph on
//! the tensor's modes. Each candidate is scored by
//!
//! ```text
//! ln( phi(r) + lambda / L * sum_l min_V ||X_l - TNC(V; r)||_F / ||X_l||_F )
//! ```
//!
//! where `phi` is the compression ratio. Structures are searched with
//! sampling-based local search ([`search`]), a chat-model dialogue ([`llm`]),
//! or a hybrid that warm-starts local search from the dialogue's best answer.

pub mod contract;
pub mod error;
pub mod harness;
pub mod llm;
pub mod objective;
pub mod search;
pub mod structure;
pub mod tensor;

pub use contract::{tnc_contract, CoreSet};
pub use error::{Error, LlmError, ParseError, Result};
pub use objective::{EvalCache, EvaluationResult, Evaluator, FitConfig, Source};
pub use structure::{compression_ratio, param_count, TNStructure};
pub use tensor::{DenseTensor, SplitTag, TensorDataset};
