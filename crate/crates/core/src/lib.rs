//! Turning coherent gate errors into incoherent ones by randomizing over
//! mixed-unitary ensembles.
//!
//! The crate is organized bottom-up:
//!
//! - [`matrix`]: dense complex matrices with norms from full decompositions.
//! - [`channel`]: superoperator channels, Choi matrices, and the diamond norm.
//! - [`ensemble`]: mixed-unitary ensembles and their per-gate and circuit bounds.
//! - [`circuit`]: exact, averaged and sampled circuit simulation, the toy
//!   error protocols, and scaling sweeps.
//! - [`injection`]: T gates by state injection with imperfect ancillas.
//! - [`fit`]: log-log slope fits for scaling sweeps.

pub mod channel;
pub mod circuit;
pub mod ensemble;
pub mod error;
pub mod fit;
pub mod injection;
pub mod matrix;
pub mod random;
mod search;

pub use channel::{diamond_norm_diff, mix, Channel, ChannelKind, ChoiMatrix};
pub use circuit::Circuit;
pub use ensemble::{MixedUnitaryEnsemble, ZRotationSpec};
pub use error::{Error, Result};
pub use matrix::{Matrix, C64};
