pub mod bounds;
pub mod channels;
pub mod error;
pub mod linalg;
pub mod lindblad;
pub mod metrology;
pub mod models;
pub mod quantum;

pub use bounds::{BoundReport, PassageOutcome, PassageResult, TrajectorySource};
pub use channels::{CptReport, KrausChannel};
pub use error::{Error, Result};
pub use linalg::{CMatrix, C64};
pub use lindblad::{Lindbladian, TimeDependentLindbladian, TrajectorySample};
pub use metrology::{
    FisherReport, Preparation, RamseyConfig, ResolutionReport, ScalingReport,
};
pub use models::{InitialStateSpec, LoadedModel, ModelKind, ModelSpec};
pub use quantum::{BlochState, DensityMatrix};
