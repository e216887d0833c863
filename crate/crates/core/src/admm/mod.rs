//! Sharing ADMM with and without screening of converged pixels.

mod engine;
mod fusion;
mod params;
mod report;
mod sensor;

pub use engine::{run, run_with_clock, sharing_objective, Clock, Engine, NoClock, Problem, RunOutput};
pub use fusion::{aggregate, FusionState, RoundStatus};
pub use params::{Hyperparams, Mode, Unknowns};
pub use report::{ConvergenceReport, IterationRecord, CSV_HEADER};
pub use sensor::{Screening, SensorSolver};
