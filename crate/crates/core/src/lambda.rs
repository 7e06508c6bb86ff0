//! Three-level Λ system: two tunable ground states `g₁, g₂` (splitting `ε`,
//! tunnelling `δ`) and an excited state `e`, driven through perpendicular,
//! equal-magnitude dipoles.
//!
//! The ground doublet diagonalizes to `g₊ = sin α·g₁ + cos α·g₂` and
//! `g₋ = cos α·g₁ − sin α·g₂` with `α = ½·atan2(δ, ε)`. Dipoles are
//! `d_eg₁ = d(1, 0)`, `d_eg₂ = d(0, 1)` and the field points along
//! `(sin β, cos β)`, so `H′_eg₋ = dℰ sin(β − α)` and `H′_eg₊ = dℰ cos(β − α)`.
//! With the polarization tracking `β = α`, `g₋` is dark and the transfer
//! `g₋ → e` runs entirely through the geometric mechanism.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{Curve, DriveSchedule, ParamPath};
use crate::error::{Error, Result};
use crate::numerics::integrate;
use crate::spectrum::{EigenFrame, HamiltonianModel, RoleMap};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaParams {
    pub e_g: f64,
    pub e_e: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// Dipole magnitude `d`.
    pub dipole: f64,
    /// Field magnitude `ℰ`; the drive amplitude of the generic engine.
    pub field: f64,
    /// Polarization angle `β`.
    pub beta_pol: f64,
}

/// Engineering thresholds for the validity flags.
pub const MIN_GAP_RATIO: f64 = 20.0;
pub const MAX_COUPLING_RATIO: f64 = 0.2;

/// Validity measures of a parameter point; reported, never enforced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaValidity {
    /// `(E_e − E_g)/√(ε² + δ²)`; should be at least [`MIN_GAP_RATIO`].
    pub gap_ratio: f64,
    /// `dℰ/√(ε² + δ²)`; should be at most [`MAX_COUPLING_RATIO`].
    pub coupling_ratio: f64,
}

impl LambdaValidity {
    pub fn ok(&self) -> bool {
        self.gap_ratio >= MIN_GAP_RATIO && self.coupling_ratio <= MAX_COUPLING_RATIO
    }
}

impl LambdaParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.e_g, self.e_e, self.epsilon, self.delta, self.dipole, self.field, self.beta_pol];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("Λ-system parameters must be finite".into()));
        }
        if self.e_e <= self.e_g {
            return Err(Error::InvalidInput("the excited state must lie above the ground doublet".into()));
        }
        Ok(())
    }

    pub fn splitting(&self) -> f64 {
        self.epsilon.hypot(self.delta)
    }

    pub fn coupling(&self) -> f64 {
        self.dipole * self.field
    }

    pub fn validity(&self) -> LambdaValidity {
        let r = self.splitting();
        LambdaValidity { gap_ratio: (self.e_e - self.e_g) / r, coupling_ratio: self.coupling() / r }
    }

    /// `H₀` in the `{g₁, g₂, e}` basis.
    pub fn h0(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(
            3,
            3,
            &[
                self.e_g - 0.5 * self.epsilon,
                0.5 * self.delta,
                0.0,
                0.5 * self.delta,
                self.e_g + 0.5 * self.epsilon,
                0.0,
                0.0,
                0.0,
                self.e_e,
            ],
        )
    }
}

/// Diagonalized ground doublet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingState {
    /// Mixing angle, unwrapped against the previous state.
    pub alpha: f64,
    pub e_plus: f64,
    pub e_minus: f64,
    /// `(⟨g₁|g₊⟩, ⟨g₂|g₊⟩)`.
    pub g_plus: [f64; 2],
    pub g_minus: [f64; 2],
}

/// `α = ½·atan2(δ, ε)`, shifted by a multiple of `π` to lie closest to
/// `previous`.
pub fn mixing(params: &LambdaParams, previous: Option<&MixingState>) -> Result<MixingState> {
    let r = params.splitting();
    if !(r > 0.0) {
        return Err(Error::Degenerate {
            i: 0,
            j: 1,
            gap: 0.0,
            tol: 0.0,
            lambda: vec![params.epsilon, params.delta],
        });
    }
    let mut alpha = 0.5 * params.delta.atan2(params.epsilon);
    if let Some(p) = previous {
        alpha += PI * ((p.alpha - alpha) / PI).round();
    }
    let (s, c) = alpha.sin_cos();
    Ok(MixingState {
        alpha,
        e_plus: params.e_g + 0.5 * r,
        e_minus: params.e_g - 0.5 * r,
        g_plus: [s, c],
        g_minus: [c, -s],
    })
}

/// `(H′_eg₋, H′_eg₊) = dℰ·(sin(β − α), cos(β − α))`.
pub fn drive_couplings(params: &LambdaParams, alpha: f64) -> (f64, f64) {
    let de = params.coupling();
    let x = params.beta_pol - alpha;
    (de * x.sin(), de * x.cos())
}

/// A Λ system whose `(ε, δ)` follow `path`; the other parameters stay fixed.
#[derive(Debug, Clone)]
pub struct LambdaSchedule {
    pub params: LambdaParams,
    pub path: ParamPath,
}

impl LambdaSchedule {
    pub fn new(params: LambdaParams, path: ParamPath) -> Result<Self> {
        params.validate()?;
        if path.curve().dimension() != 2 {
            return Err(Error::InvalidInput("Λ-system paths live in the (ε, δ) plane".into()));
        }
        Ok(Self { params, path })
    }

    /// Origin-centered circle of radius `radius` traversed counterclockwise.
    pub fn circle(params: LambdaParams, radius: f64, period: f64, cycles: usize) -> Result<Self> {
        let path = ParamPath::new(Curve::circle([0.0, 0.0], radius, 0.0), period, cycles, crate::dynamics::Timing::Uniform)?;
        Self::new(params, path)
    }

    pub fn params_at(&self, t: f64) -> LambdaParams {
        let p = self.path.at(t);
        LambdaParams { epsilon: p[0], delta: p[1], ..self.params }
    }
}

/// `Γ = −dℰ∫dα/√(ε² + δ²)` over one traversal of the schedule's curve, by adaptive
/// quadrature of `dα = (ε dδ − δ dε)/(2(ε² + δ²))`.
pub fn gamma_analytic(schedule: &LambdaSchedule) -> Result<f64> {
    let curve = schedule.path.curve();
    let de = schedule.params.coupling();
    let scale = (0..=64)
        .map(|k| {
            let p = curve.point(k as f64 / 64.0);
            p[0].hypot(p[1])
        })
        .fold(0.0, f64::max);
    let mut hit_origin = false;
    let mut integrand = |u: f64| {
        let p = curve.point(u);
        let d = curve.tangent(u);
        let r2 = p[0] * p[0] + p[1] * p[1];
        if r2.sqrt() <= 1e-12 * scale {
            hit_origin = true;
            return 0.0;
        }
        -de * (p[0] * d[1] - p[1] * d[0]) / (2.0 * r2 * r2.sqrt())
    };
    let mut total = 0.0;
    for w in curve.breakpoints().windows(2) {
        total += integrate(&mut integrand, w[0], w[1], 1e-15, 1e-12)?.value;
    }
    if hit_origin || scale == 0.0 && !curve.is_static() {
        return Err(Error::InvalidInput("the path passes through the degeneracy at ε = δ = 0".into()));
    }
    Ok(total)
}

/// `a_e = sin Γ` for a system starting in `g₋` under resonance tracking.
pub fn excited_amplitude(gamma: f64) -> f64 {
    gamma.sin()
}

/// Generic-engine view of the Λ system over `(ε, δ)`.
///
/// States are column vectors in the `{g₁, g₂, e}` basis, ordered
/// `g₋, g₊, e`. The drive realizes the polarization tracking `β = α`: the
/// field is aligned with the tracked `g₊`, so `H′ = d(|e⟩⟨g₊| + |g₊⟩⟨e|)`
/// follows the frame continuously around any loop.
#[derive(Debug, Clone)]
pub struct LambdaModel {
    params: LambdaParams,
    names: Vec<String>,
    roles: RoleMap,
}

impl LambdaModel {
    pub fn new(params: LambdaParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params, names: vec!["epsilon".into(), "delta".into()], roles: RoleMap::new(0, vec![1], 2) })
    }

    pub fn params(&self) -> &LambdaParams {
        &self.params
    }

    fn analytic(&self, lambda: &[f64]) -> (Vec<f64>, Vec<DVector<f64>>) {
        let p = LambdaParams { epsilon: lambda[0], delta: lambda[1], ..self.params };
        let r = p.splitting();
        let alpha = 0.5 * p.delta.atan2(p.epsilon);
        let (s, c) = alpha.sin_cos();
        let energies = vec![p.e_g - 0.5 * r, p.e_g + 0.5 * r, p.e_e];
        let states = vec![
            DVector::from_column_slice(&[c, -s, 0.0]),
            DVector::from_column_slice(&[s, c, 0.0]),
            DVector::from_column_slice(&[0.0, 0.0, 1.0]),
        ];
        (energies, states)
    }
}

impl HamiltonianModel for LambdaModel {
    type State = DVector<f64>;

    fn param_names(&self) -> &[String] {
        &self.names
    }

    fn dimension(&self) -> usize {
        3
    }

    fn roles(&self) -> &RoleMap {
        &self.roles
    }

    fn eigenpairs(&self, lambda: &[f64]) -> Result<(Vec<f64>, Vec<DVector<f64>>)> {
        let (energies, states) = self.analytic(lambda);
        if energies[2] <= energies[1] {
            return Err(Error::Model("the ground doublet reaches the excited state".into()));
        }
        Ok((energies, states))
    }

    fn overlap(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        a.dot(b)
    }

    fn negate(&self, state: &DVector<f64>) -> DVector<f64> {
        -state
    }

    fn canonical_signs(&self, lambda: &[f64], states: &[DVector<f64>]) -> Vec<f64> {
        let (_, reference) = self.analytic(lambda);
        reference.iter().zip(states).map(|(r, s)| if r.dot(s) < 0.0 { -1.0 } else { 1.0 }).collect()
    }

    fn drive_matrix(&self, _lambda: &[f64], states: &[DVector<f64>]) -> DMatrix<f64> {
        let gp = &states[1];
        let field = DVector::from_column_slice(&[gp[0], gp[1], 0.0]);
        let e = DVector::from_column_slice(&[0.0, 0.0, 1.0]);
        let h = (&e * field.transpose() + &field * e.transpose()) * self.params.dipole;
        let v = DMatrix::from_columns(states);
        v.transpose() * h * v
    }

    fn param_scales(&self, lambda: &[f64]) -> Vec<f64> {
        let r = lambda[0].hypot(lambda[1]).max(f64::MIN_POSITIVE);
        vec![r, r]
    }
}

/// Model, path and resonance-tracked drive (amplitude `ℰ`) for the generic engine.
pub fn to_generic(schedule: &LambdaSchedule) -> Result<(LambdaModel, ParamPath, DriveSchedule)> {
    let model = LambdaModel::new(schedule.params)?;
    Ok((model, schedule.path.clone(), DriveSchedule::tracked(schedule.params.field)))
}

/// Frame of the generic model at a mixing state, for comparisons.
pub fn frame_from_mixing(params: &LambdaParams, m: &MixingState) -> EigenFrame<DVector<f64>> {
    EigenFrame {
        lambda: vec![params.epsilon, params.delta],
        energies: vec![m.e_minus, m.e_plus, params.e_e],
        states: vec![
            DVector::from_column_slice(&[m.g_minus[0], m.g_minus[1], 0.0]),
            DVector::from_column_slice(&[m.g_plus[0], m.g_plus[1], 0.0]),
            DVector::from_column_slice(&[0.0, 0.0, 1.0]),
        ],
    }
}
