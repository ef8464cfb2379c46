//! Root loci of single-input single-output plants with dead time.
//!
//! Given `G(s) e^{-hs}`, the crate traces every closed-loop characteristic
//! root inside the half-plane `Re(s) >= sigma0` as either the feedback gain or
//! the delay sweeps `[0, lambda_max]`.

pub mod error;
pub mod plant;
pub mod continuation;
pub mod critical;
pub mod engine;
pub mod rootfind;

pub use continuation::{ContinuationConfig, Termination, Trajectory, TrajectoryPoint};
pub use critical::{CriticalKind, CriticalPoint};
pub use engine::{compute_root_locus, RootLocusResult};
pub use error::{Error, Result};
pub use plant::{LocusKind, LocusProblem, Plant};
