//! Driven dynamics along parameter paths.
//!
//! Three levels of description are available and can be cross-checked:
//!
//! * [`evolve_full`]: the driven Schrödinger equation in the instantaneous
//!   eigenbasis, every tracked state included;
//! * [`evolve_rwa`]: the two-level rotating-frame equations obtained by
//!   eliminating the auxiliary states;
//! * [`evolve_geometric`]: the time-free, path-ordered product of rotations
//!   generated by the field `f(λ)`.
//!
//! [`gamma_line`] and [`gamma_surface`] give the rotation angle when `i f`
//! is real, and [`adiabaticity_report`] checks the regime.

pub mod diagnostics;
pub mod effective;
pub mod evolve;
pub mod frames;
pub mod geometric;
pub mod path;

pub use diagnostics::{adiabaticity_report, AdiabaticityReport, ProbeRatios, ValidityFlag};
pub use effective::{
    effective_field, effective_field_f, effective_kappa, kappa_series, resonant_omega, resonant_omega_with, stark_shifts,
    DriveSchedule, EffectiveField, OmegaRule, StarkRule, StarkShifts,
};
pub use evolve::{evolve_full, evolve_full_on, evolve_rwa, evolve_rwa_on, Diagnostics, EvolutionRecord, FrameKind, StepControl};
pub use frames::{local_frame, FrameData, FrameTrack, GaugeTrack, LocalFrame};
pub use geometric::{
    evolve_geometric, gamma_line, gamma_line_detail, gamma_surface, GammaLine, SegmentControl, SurfaceControl, SurfacePatch,
};
pub use path::{Curve, ParamPath, SplineCurve, Timing};

use crate::par::Exec;
use crate::spectrum::SpectrumOptions;

/// Numerical settings shared by the path-based operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsOptions {
    pub spectrum: SpectrumOptions,
    /// Frames computed per traversal of a curve.
    pub frames_per_cycle: usize,
    pub quad_abs_tol: f64,
    pub quad_rel_tol: f64,
    pub exec: Exec,
}

impl Default for DynamicsOptions {
    fn default() -> Self {
        Self {
            spectrum: SpectrumOptions::default(),
            frames_per_cycle: 200,
            quad_abs_tol: 1e-14,
            quad_rel_tol: 1e-11,
            exec: Exec::default(),
        }
    }
}
