//! Screw-theory kinematics for deployable scissor-link mechanisms.
//!
//! The crate is organised bottom-up:
//!
//! * [`screw`]: twists, spatial accelerations, Lie brackets and ring rotations.
//! * [`model`]: parametric design of the triple-scissors modular unit and the
//!   general mechanism description (nodes, links, revolute joints).
//! * [`mobility`]: loop bases, screw constraint matrices and degree-of-freedom counts.
//! * [`kinematics`]: joint rates/accelerations and node velocity/acceleration propagation.
//! * [`sim`]: time-domain deployment, trajectory statistics and unit comparison.
//! * [`io`]: mechanism files, trajectory CSV and report serialization.
//! * [`validate`]: finite-difference and closure self-checks.
//!
//! Screws are always ordered `(angular; linear)`. Angles are radians everywhere in
//! memory; degrees only appear in files and command-line flags.

pub mod error;
pub mod io;
pub mod kinematics;
pub mod mobility;
pub mod model;
pub mod screw;
pub mod sim;
pub mod validate;

pub use error::{Error, Result};
