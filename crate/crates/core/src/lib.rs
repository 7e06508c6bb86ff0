//! Geometrical Rabi transitions between decoupled quantum states.
//!
//! Two eigenstates with a vanishing drive matrix element cannot be connected
//! by a resonant drive alone. Combined with an adiabatic variation of the
//! Hamiltonian's parameters, the drive couples them through auxiliary states
//! and the population transfer is set by a rotation angle that depends only
//! on the path in parameter space.
//!
//! * [`spectrum`]: parameterized Hamiltonians, gauge-fixed eigenframes, non-adiabatic couplings.
//! * [`dynamics`]: full driven evolution, rotating-frame effective evolution, the
//!   path-ordered geometric propagator, rotation-angle integrals and validity checks.
//! * [`deltawell`]: bound states of two delta wells around a square well.
//! * [`lambda`]: the three-level Λ system with interference-decoupled drive.
//!
//! Units: ħ = 1 and 2m = 1 throughout.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::excessive_precision,
    clippy::too_many_arguments,
    clippy::type_complexity,
    clippy::needless_range_loop
)]

pub mod deltawell;
pub mod dynamics;
pub mod error;
pub mod lambda;
pub mod numerics;
pub mod par;
pub mod spectrum;

pub use error::{Error, Result};
pub use par::Exec;
