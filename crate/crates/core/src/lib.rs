//! Sequential parameter optimization driven by a Kriging surrogate.
//!
//! The crate is organized around the steps of the optimization loop:
//!
//! * [`param_space`] describes the search space and maps coded optimizer
//!   values to the natural values an objective sees.
//! * [`sampling`] builds seeded Latin hypercube designs.
//! * [`kriging`] fits the Gaussian-correlation surrogate by maximum likelihood
//!   and predicts mean, uncertainty and expected improvement.
//! * [`surrogate_opt`] searches the surrogate (differential evolution or a
//!   multistart coordinate search) and proposes infill points.
//! * [`ocba`] spreads a replication budget over noisy designs.
//! * [`objectives`] holds the analytic test functions.
//! * [`spot`] runs the loop and keeps a resumable [`spot::RunState`];
//!   [`state`] reads and writes it as versioned JSON.
//!
//! Data-parallel inner loops (optimizer populations, batched evaluations,
//! grid predictions) run on rayon when the `parallel` feature is enabled and
//! sequentially otherwise. Both paths produce identical results.

// `!(a < b)` is how NaN gets rejected along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod kriging;
pub mod objectives;
pub mod ocba;
pub mod par;
pub mod param_space;
pub mod rng;
pub mod sampling;
pub mod spot;
pub mod state;
pub mod surrogate_opt;

pub(crate) mod linalg;
pub(crate) mod serde_util;

pub use error::{KrigingError, ObjectiveError, SpaceError, SpotError};
pub use kriging::{KrigingConfig, KrigingModel, Prediction};
pub use objectives::{AnalyticObjective, Builtin, FunControl, Objective};
pub use param_space::{NaturalValue, SearchSpace, Transform, VarType, VariableSpec};
pub use sampling::DesignMatrix;
pub use spot::{InfillCriterion, RunState, SpotConfig};
pub use surrogate_opt::{OptimizerConfig, OptimizerKind};
