//! Ground operations, machine states and the effect of each operation.

mod model;
mod state;
mod step;

pub use model::{GroundOp, InstId, Model, OpId};
pub use state::{MachineState, Pc};
pub use step::{AssertFailure, NoTracker, StepResult, Tracker, Transition};

pub(crate) use state::{bit, set_bit, words_for};
