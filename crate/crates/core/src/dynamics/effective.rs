//! Adiabatically eliminated auxiliary states: Stark shifts, effective Rabi
//! frequency `κ`, the parameter-space field `f` and resonance tracking.
//!
//! Everything here works on one frame snapshot: energies `E`, the drive
//! matrix `D` per unit amplitude and a real "motion" matrix `X`, which is
//! `⟨Φ_i|Φ̇_j⟩` for `κ` and `⟨Φ_i|∂_μ Φ_j⟩` for component `μ` of `f`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::frames::local_frame;
use super::path::ParamPath;
use crate::error::{Error, Result};
use crate::spectrum::{HamiltonianModel, RoleMap, SpectrumOptions};

/// How Stark shifts are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StarkRule {
    /// `δE_j = Σ_a [2F²D_ja² + X_ja²]/(E_j − E_a)`: the quasi-static form,
    /// valid when the drive frequency is small against the auxiliary gaps.
    Static,
    /// Both drive sidebands kept: `F²D_ja²[1/(E_j+ω−E_a) + 1/(E_j−ω−E_a)] + X_ja²/(E_j−E_a)`.
    #[default]
    Dressed,
}

/// Drive frequency prescription.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmegaRule {
    Fixed(f64),
    /// `ω = E₂ − E₀ − (δE₀ − δE₂)` at every instant.
    Tracked(StarkRule),
}

/// The periodic drive `2F·H′·cos θ(t)` with `θ̇ = ω(t)`, `θ(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSchedule {
    pub amplitude: f64,
    pub omega: OmegaRule,
}

impl DriveSchedule {
    pub fn tracked(amplitude: f64) -> Self {
        Self { amplitude, omega: OmegaRule::Tracked(StarkRule::default()) }
    }

    pub fn fixed(amplitude: f64, omega: f64) -> Self {
        Self { amplitude, omega: OmegaRule::Fixed(omega) }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(Error::InvalidInput("drive amplitude must be finite".into()));
        }
        if let OmegaRule::Fixed(w) = self.omega {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidInput(format!("fixed drive frequency must be positive, got {w}")));
            }
        }
        Ok(())
    }

    /// Drive frequency for one snapshot.
    pub fn omega(&self, energies: &DVector<f64>, drive: &DMatrix<f64>, motion: &DMatrix<f64>, roles: &RoleMap) -> Result<f64> {
        match self.omega {
            OmegaRule::Fixed(w) => Ok(w),
            OmegaRule::Tracked(rule) => resonant_omega_from(energies, drive, motion, roles, self.amplitude, rule),
        }
    }
}

/// Stark shifts of the two decoupled states.
#[derive(Debug, Clone, PartialEq)]
pub struct StarkShifts {
    pub delta0: f64,
    pub delta2: f64,
    /// Auxiliary gaps small enough to make the perturbative shift unreliable.
    pub warnings: Vec<String>,
}

fn stark_one(e: &DVector<f64>, d: &DMatrix<f64>, x: &DMatrix<f64>, j: usize, aux: &[usize], f: f64, rule: StarkRule, omega: f64) -> f64 {
    let mut s = 0.0;
    for &a in aux {
        let gap = e[j] - e[a];
        let drive2 = (f * d[(j, a)]).powi(2);
        let motion2 = x[(j, a)].powi(2);
        s += match rule {
            StarkRule::Static => (2.0 * drive2 + motion2) / gap,
            StarkRule::Dressed => motion2 / gap + drive2 * (1.0 / (gap + omega) + 1.0 / (gap - omega)),
        };
    }
    s
}

/// Stark shifts `(δE₀, δE₂)` for one snapshot; `omega` is only used by the dressed rule.
pub fn stark_from(
    energies: &DVector<f64>,
    drive: &DMatrix<f64>,
    motion: &DMatrix<f64>,
    roles: &RoleMap,
    amplitude: f64,
    rule: StarkRule,
    omega: f64,
) -> StarkShifts {
    let (i0, i2) = (roles.state0, roles.state2);
    let range = energies.max() - energies.min();
    let mut warnings = Vec::new();
    for &a in &roles.auxiliary {
        for j in [i0, i2] {
            if (energies[j] - energies[a]).abs() < 1e-4 * range {
                warnings.push(format!("state {j} is within {:.3e} of auxiliary state {a}", (energies[j] - energies[a]).abs()));
            }
        }
    }
    StarkShifts {
        delta0: stark_one(energies, drive, motion, i0, &roles.auxiliary, amplitude, rule, omega),
        delta2: stark_one(energies, drive, motion, i2, &roles.auxiliary, amplitude, rule, omega),
        warnings,
    }
}

/// `ω = E₂ − E₀ − (δE₀ − δE₂)`; self-consistent in `ω` for the dressed rule.
pub fn resonant_omega_from(
    energies: &DVector<f64>,
    drive: &DMatrix<f64>,
    motion: &DMatrix<f64>,
    roles: &RoleMap,
    amplitude: f64,
    rule: StarkRule,
) -> Result<f64> {
    let bare = energies[roles.state2] - energies[roles.state0];
    let mut w = bare;
    let iterations = if rule == StarkRule::Static { 1 } else { 60 };
    for _ in 0..iterations {
        let s = stark_from(energies, drive, motion, roles, amplitude, rule, w);
        let next = bare - (s.delta0 - s.delta2);
        let done = (next - w).abs() <= 1e-15 * bare.abs().max(1e-300);
        w = next;
        if done {
            break;
        }
    }
    if !(w > 0.0) {
        return Err(Error::Model(format!("resonant drive frequency is not positive ({w:.6e}); check the state roles")));
    }
    Ok(w)
}

/// `i Σ_a [X_0a·F·D_a2/(E_a − E_0) + F·D_0a·X_a2/(E_a − E_2)]`.
pub fn effective_coupling(energies: &DVector<f64>, drive: &DMatrix<f64>, motion: &DMatrix<f64>, roles: &RoleMap, amplitude: f64) -> Complex64 {
    let (i0, i2) = (roles.state0, roles.state2);
    let mut s = 0.0;
    for &a in &roles.auxiliary {
        s += motion[(i0, a)] * amplitude * drive[(a, i2)] / (energies[a] - energies[i0]);
        s += amplitude * drive[(i0, a)] * motion[(a, i2)] / (energies[a] - energies[i2]);
    }
    Complex64::new(0.0, s)
}

/// Per-auxiliary contributions to `f`, `[a][μ]`, for truncation decisions.
pub fn field_contributions<S>(local: &super::frames::LocalFrame<S>, roles: &RoleMap, amplitude: f64) -> Vec<Vec<Complex64>> {
    let e = DVector::from_column_slice(local.energies());
    roles
        .auxiliary
        .iter()
        .map(|&a| {
            let single = RoleMap::new(roles.state0, vec![a], roles.state2);
            local.couplings.entries.iter().map(|t| effective_coupling(&e, &local.drive, t, &single, amplitude)).collect()
        })
        .collect()
}

/// `f`, `κ`, Stark shifts and detuning at one point of parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveField {
    pub lambda: Vec<f64>,
    /// `f_μ`, including the factor `i`.
    pub f: Vec<Complex64>,
    pub kappa: Complex64,
    pub stark: StarkShifts,
    /// `Δ = E₂ − E₀ − ω`.
    pub detuning: f64,
    pub omega: f64,
}

impl EffectiveField {
    /// `i f · v` for a parameter-space direction `v`: the real rotation rate.
    pub fn rotation(&self, v: &[f64]) -> f64 {
        self.f.iter().zip(v).map(|(f, x)| (Complex64::i() * f).re * x).sum()
    }
}

/// Full effective description at `lambda` in the canonical gauge.
pub fn effective_field<M: HamiltonianModel>(
    model: &M,
    lambda: &[f64],
    velocity: &[f64],
    drive: &DriveSchedule,
    opts: &SpectrumOptions,
) -> Result<EffectiveField> {
    drive.validate()?;
    check_velocity(model, velocity)?;
    let local = local_frame(model, lambda, None, opts)?;
    let roles = model.roles();
    let e = DVector::from_column_slice(local.energies());
    let motion = local.motion(velocity);
    let f: Vec<Complex64> = local
        .couplings
        .entries
        .iter()
        .map(|t| effective_coupling(&e, &local.drive, t, roles, drive.amplitude))
        .collect();
    let kappa = effective_coupling(&e, &local.drive, &motion, roles, drive.amplitude);
    let omega = drive.omega(&e, &local.drive, &motion, roles)?;
    let rule = match drive.omega {
        OmegaRule::Tracked(r) => r,
        OmegaRule::Fixed(_) => StarkRule::default(),
    };
    let stark = stark_from(&e, &local.drive, &motion, roles, drive.amplitude, rule, omega);
    let detuning = e[roles.state2] - e[roles.state0] - omega;
    Ok(EffectiveField { lambda: lambda.to_vec(), f, kappa, stark, detuning, omega })
}

fn check_velocity<M: HamiltonianModel>(model: &M, velocity: &[f64]) -> Result<()> {
    if velocity.len() != model.param_names().len() || velocity.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("velocity must be finite with one entry per parameter".into()));
    }
    Ok(())
}

/// Quasi-static Stark shifts `δE_j = Σ_a [2|H′_aj|² + |⟨Φ_j|Φ̇_a⟩|²]/(E_j − E_a)`.
pub fn stark_shifts<M: HamiltonianModel>(
    model: &M,
    lambda: &[f64],
    velocity: &[f64],
    amplitude: f64,
    opts: &SpectrumOptions,
) -> Result<StarkShifts> {
    check_velocity(model, velocity)?;
    let local = local_frame(model, lambda, None, opts)?;
    let e = DVector::from_column_slice(local.energies());
    Ok(stark_from(&e, &local.drive, &local.motion(velocity), model.roles(), amplitude, StarkRule::Static, 0.0))
}

/// Resonance-tracked drive frequency with the quasi-static Stark shifts.
pub fn resonant_omega<M: HamiltonianModel>(
    model: &M,
    lambda: &[f64],
    velocity: &[f64],
    amplitude: f64,
    opts: &SpectrumOptions,
) -> Result<f64> {
    resonant_omega_with(model, lambda, velocity, amplitude, StarkRule::Static, opts)
}

pub fn resonant_omega_with<M: HamiltonianModel>(
    model: &M,
    lambda: &[f64],
    velocity: &[f64],
    amplitude: f64,
    rule: StarkRule,
    opts: &SpectrumOptions,
) -> Result<f64> {
    check_velocity(model, velocity)?;
    let local = local_frame(model, lambda, None, opts)?;
    let e = DVector::from_column_slice(local.energies());
    resonant_omega_from(&e, &local.drive, &local.motion(velocity), model.roles(), amplitude, rule)
}

/// Effective Rabi frequency `κ` (purely imaginary for real models).
pub fn effective_kappa<M: HamiltonianModel>(
    model: &M,
    lambda: &[f64],
    velocity: &[f64],
    amplitude: f64,
    opts: &SpectrumOptions,
) -> Result<Complex64> {
    check_velocity(model, velocity)?;
    let local = local_frame(model, lambda, None, opts)?;
    let e = DVector::from_column_slice(local.energies());
    Ok(effective_coupling(&e, &local.drive, &local.motion(velocity), model.roles(), amplitude))
}

/// `f(λ)`, one complex component per parameter, in the canonical gauge.
pub fn effective_field_f<M: HamiltonianModel>(
    model: &M,
    lambda: &[f64],
    amplitude: f64,
    opts: &SpectrumOptions,
) -> Result<Vec<Complex64>> {
    let local = local_frame(model, lambda, None, opts)?;
    let e = DVector::from_column_slice(local.energies());
    Ok(local
        .couplings
        .entries
        .iter()
        .map(|t| effective_coupling(&e, &local.drive, t, model.roles(), amplitude))
        .collect())
}

/// `κ(t)` along a path with gauge continuity, at `samples` uniformly spaced times
/// in `[0, T]` (both ends included).
pub fn kappa_series<M: HamiltonianModel>(
    model: &M,
    path: &ParamPath,
    amplitude: f64,
    samples: usize,
    opts: &super::DynamicsOptions,
) -> Result<Vec<(f64, Complex64)>> {
    let track = super::frames::GaugeTrack::build(model, path.curve(), opts)?;
    let n = samples.max(2);
    let roles = model.roles();
    crate::par::try_map_range(opts.exec, n, |k| {
        let t = path.duration() * k as f64 / (n - 1) as f64;
        let (cycle, _) = path.phase(t);
        let (u, _) = path.u_at(t);
        let mut reference = track.reference(u).clone();
        if cycle % 2 == 1 && !track.is_trivial() {
            reference = super::frames::apply_signs(model, &reference, track.holonomy());
        }
        let local = local_frame(model, &path.at(t), Some(&reference), &opts.spectrum)?;
        let e = DVector::from_column_slice(local.energies());
        let kappa = effective_coupling(&e, &local.drive, &local.motion(&path.velocity(t)), roles, amplitude);
        Ok((t, kappa))
    })
}
