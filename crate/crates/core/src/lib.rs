//! Simulation of a single trapped 43Ca+ hyperfine qubit.
//!
//! The crate models the full experimental chain of a hyperfine-qubit ion
//! experiment: static atomic structure ([`atomic`]), the axial harmonic
//! mode ([`motion`]), state preparation ([`prep`]), coherent pulse
//! dynamics ([`pulse`]), the stochastic noise environment ([`noise`]),
//! electron-shelving detection ([`detection`]) and the weighted
//! least-squares fitting used to extract every reported quantity
//! ([`fitkit`]).

pub mod atomic;
pub mod constants;
pub mod detection;
pub mod error;
pub mod fitkit;
pub mod motion;
pub mod noise;
pub mod prep;
pub mod pulse;
pub mod stats;
pub mod wigner;

pub use constants::{AtomicConstants, Term};
pub use error::{Error, Result};
