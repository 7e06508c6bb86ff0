//! Parameterized Hamiltonians, gauge-fixed instantaneous eigenframes and
//! the non-adiabatic couplings `⟨Φ_i|∂_μ Φ_j⟩` between them.
//!
//! Every model is real-symmetric, so eigenstates are chosen real and the
//! diagonal connection `⟨Φ_n|∂_μ Φ_n⟩` vanishes. Signs are fixed by positive
//! overlap with a reference frame, or for a first frame by the model's
//! canonical sign convention. States keep their identity along a path: when
//! energy ordering changes, they are reassigned by maximal overlap.

mod matrix;

pub use matrix::{dphi_dparam, MatrixFn, MatrixModel};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::par::{self, Exec};

/// A point in parameter space with named components.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    names: Vec<String>,
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if names.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "{} parameter names but {} values",
                names.len(),
                values.len()
            )));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::InvalidInput(format!("duplicate parameter name `{n}`")));
            }
        }
        if let Some((n, v)) = names.iter().zip(&values).find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("parameter `{n}` is not finite ({v})")));
        }
        Ok(Self { names, values })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Physical roles of frame indices: the two decoupled states and the
/// auxiliary states that mediate between them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleMap {
    pub state0: usize,
    pub state2: usize,
    pub auxiliary: Vec<usize>,
}

impl RoleMap {
    pub fn new(state0: usize, auxiliary: Vec<usize>, state2: usize) -> Self {
        Self { state0, state2, auxiliary }
    }

    pub fn validate(&self, dimension: usize) -> Result<()> {
        let mut all = vec![self.state0, self.state2];
        all.extend(&self.auxiliary);
        if let Some(i) = all.iter().find(|&&i| i >= dimension) {
            return Err(Error::InvalidInput(format!("role index {i} out of range for dimension {dimension}")));
        }
        for (k, i) in all.iter().enumerate() {
            if all[..k].contains(i) {
                return Err(Error::InvalidInput(format!("role index {i} assigned twice")));
            }
        }
        Ok(())
    }
}

/// A real-symmetric Hamiltonian family `H₀(λ)` with a drive operator `H′(λ)`.
///
/// The drive operator is reported per unit amplitude; callers scale by the
/// drive amplitude `F`.
pub trait HamiltonianModel: Send + Sync {
    /// Real eigenvector representation (a column vector, a wavefunction, ...).
    type State: Clone + Send + Sync;

    fn param_names(&self) -> &[String];

    /// Number of tracked eigenstates.
    fn dimension(&self) -> usize;

    fn roles(&self) -> &RoleMap;

    /// Eigenpairs at `lambda`, energies ascending, signs arbitrary.
    fn eigenpairs(&self, lambda: &[f64]) -> Result<(Vec<f64>, Vec<Self::State>)>;

    fn overlap(&self, a: &Self::State, b: &Self::State) -> f64;

    fn negate(&self, state: &Self::State) -> Self::State;

    /// Signs (+1 or -1) that make `states` canonical at `lambda` in the absence
    /// of a reference frame.
    fn canonical_signs(&self, lambda: &[f64], states: &[Self::State]) -> Vec<f64>;

    /// `⟨Φ_i|H′|Φ_j⟩` per unit drive amplitude.
    fn drive_matrix(&self, lambda: &[f64], states: &[Self::State]) -> DMatrix<f64>;

    /// Characteristic magnitude of each parameter near `lambda`; finite-difference
    /// steps are relative to it.
    fn param_scales(&self, lambda: &[f64]) -> Vec<f64>;

    /// Closed-form couplings when the model has them; otherwise the engine
    /// differentiates overlaps numerically.
    fn analytic_couplings(&self, _frame: &EigenFrame<Self::State>) -> Option<Result<CouplingTensor>> {
        None
    }

    fn overlap_matrix(&self, bra: &[Self::State], ket: &[Self::State]) -> DMatrix<f64> {
        DMatrix::from_fn(bra.len(), ket.len(), |i, j| self.overlap(&bra[i], &ket[j]))
    }

    /// Validates a parameter point (length, finiteness, model domain).
    fn check_params(&self, lambda: &[f64]) -> Result<()> {
        if lambda.len() != self.param_names().len() {
            return Err(Error::InvalidInput(format!(
                "expected {} parameters, got {}",
                self.param_names().len(),
                lambda.len()
            )));
        }
        if lambda.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite parameter in {lambda:?}")));
        }
        Ok(())
    }
}

/// Numerical knobs shared by the spectrum operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions {
    /// Degeneracy threshold relative to the spectral range.
    pub degeneracy_tol: f64,
    /// Finite-difference step relative to the model's parameter scale.
    pub fd_step: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { degeneracy_tol: 1e-8, fd_step: 1e-5 }
    }
}

/// Gauge-fixed instantaneous eigenbasis at one parameter point.
#[derive(Debug, Clone)]
pub struct EigenFrame<S> {
    pub lambda: Vec<f64>,
    pub energies: Vec<f64>,
    pub states: Vec<S>,
}

impl<S> EigenFrame<S> {
    pub fn dimension(&self) -> usize {
        self.energies.len()
    }
}

fn check_degeneracy(energies: &[f64], lambda: &[f64], rel_tol: f64) -> Result<()> {
    if energies.len() < 2 {
        return Ok(());
    }
    let lo = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = rel_tol * (hi - lo).max(f64::MIN_POSITIVE);
    for i in 0..energies.len() {
        for j in i + 1..energies.len() {
            let gap = (energies[i] - energies[j]).abs();
            if gap < tol {
                return Err(Error::Degenerate { i, j, gap, tol, lambda: lambda.to_vec() });
            }
        }
    }
    Ok(())
}

/// Matches the states of a new frame to a reference frame: each reference
/// state is paired with the unused new state of largest `|overlap|`, taking
/// the globally largest overlaps first.
fn assign_by_overlap(overlaps: &DMatrix<f64>) -> Vec<usize> {
    let n = overlaps.nrows();
    let mut entries: Vec<(f64, usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (overlaps[(i, j)].abs(), i, j))
        .collect();
    entries.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut assigned = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for (_, i, j) in entries {
        if assigned[i] == usize::MAX && !used[j] {
            assigned[i] = j;
            used[j] = true;
        }
    }
    assigned
}

/// Eigendecomposition at `lambda`, gauge-fixed against `reference` when given.
pub fn eigenframe<M: HamiltonianModel>(
    model: &M,
    lambda: &[f64],
    reference: Option<&EigenFrame<M::State>>,
    opts: &SpectrumOptions,
) -> Result<EigenFrame<M::State>> {
    let (energies, states) = raw_eigenpairs(model, lambda, opts)?;
    fix_gauge(model, lambda, energies, states, reference)
}

fn raw_eigenpairs<M: HamiltonianModel>(
    model: &M,
    lambda: &[f64],
    opts: &SpectrumOptions,
) -> Result<(Vec<f64>, Vec<M::State>)> {
    model.check_params(lambda)?;
    let (energies, states) = model.eigenpairs(lambda)?;
    if energies.len() != model.dimension() || states.len() != model.dimension() {
        return Err(Error::Model(format!(
            "model returned {} eigenpairs, expected {}",
            energies.len(),
            model.dimension()
        )));
    }
    check_degeneracy(&energies, lambda, opts.degeneracy_tol)?;
    Ok((energies, states))
}

fn fix_gauge<M: HamiltonianModel>(
    model: &M,
    lambda: &[f64],
    energies: Vec<f64>,
    states: Vec<M::State>,
    reference: Option<&EigenFrame<M::State>>,
) -> Result<EigenFrame<M::State>> {
    match reference {
        None => {
            let signs = model.canonical_signs(lambda, &states);
            let states = states
                .iter()
                .zip(signs)
                .map(|(s, g)| if g < 0.0 { model.negate(s) } else { s.clone() })
                .collect();
            Ok(EigenFrame { lambda: lambda.to_vec(), energies, states })
        }
        Some(r) => {
            if r.dimension() != energies.len() {
                return Err(Error::InvalidInput("reference frame has a different dimension".into()));
            }
            let o = model.overlap_matrix(&r.states, &states);
            let order = assign_by_overlap(&o);
            let mut e = Vec::with_capacity(order.len());
            let mut s = Vec::with_capacity(order.len());
            for (i, &j) in order.iter().enumerate() {
                e.push(energies[j]);
                s.push(if o[(i, j)] < 0.0 { model.negate(&states[j]) } else { states[j].clone() });
            }
            Ok(EigenFrame { lambda: lambda.to_vec(), energies: e, states: s })
        }
    }
}

/// Gauge-continuous frames along a sequence of nearby points.
///
/// Eigenproblems are solved independently (in parallel under [`Exec::Parallel`]);
/// signs and state identities are then chained point to point, starting from
/// `start` or from the canonical convention.
pub fn track<M: HamiltonianModel>(
    model: &M,
    points: &[Vec<f64>],
    start: Option<&EigenFrame<M::State>>,
    exec: Exec,
    opts: &SpectrumOptions,
) -> Result<Vec<EigenFrame<M::State>>> {
    let raw = par::try_map_range(exec, points.len(), |k| raw_eigenpairs(model, &points[k], opts))?;
    let mut frames: Vec<EigenFrame<M::State>> = Vec::with_capacity(points.len());
    for (k, (e, s)) in raw.into_iter().enumerate() {
        let reference = if k == 0 { start } else { frames.last() };
        let f = fix_gauge(model, &points[k], e, s, reference)?;
        frames.push(f);
    }
    Ok(frames)
}

/// `entries[μ][(i, j)] = ⟨Φ_i|∂_μ Φ_j⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTensor {
    pub entries: Vec<DMatrix<f64>>,
}

impl CouplingTensor {
    pub fn zeros(params: usize, dimension: usize) -> Self {
        Self { entries: vec![DMatrix::zeros(dimension, dimension); params] }
    }

    /// Contraction with a parameter velocity: `⟨Φ_i|Φ̇_j⟩`.
    pub fn contract(&self, velocity: &[f64]) -> DMatrix<f64> {
        let n = self.entries.first().map_or(0, |m| m.nrows());
        let mut out = DMatrix::zeros(n, n);
        for (m, v) in self.entries.iter().zip(velocity) {
            out += m * *v;
        }
        out
    }

    /// Largest `|entry(i,j) + entry(j,i)|` over all components.
    pub fn antisymmetry_defect(&self) -> f64 {
        self.entries
            .iter()
            .map(|m| (m + m.transpose()).abs().max())
            .fold(0.0, f64::max)
    }
}

/// Finite-difference step for component `mu` at `lambda`.
pub(crate) fn fd_step<M: HamiltonianModel>(model: &M, lambda: &[f64], mu: usize, opts: &SpectrumOptions) -> Result<f64> {
    let scale = model.param_scales(lambda)[mu];
    let h = opts.fd_step * scale;
    let floor = 64.0 * f64::EPSILON * lambda[mu].abs().max(scale);
    if !(h > floor) {
        return Err(Error::InvalidInput(format!(
            "finite-difference step {h:.3e} for `{}` is below the precision floor {floor:.3e}",
            model.param_names()[mu]
        )));
    }
    Ok(h)
}

/// Central-difference couplings `⟨Φ_i(λ)|∂_μ Φ_j(λ)⟩` from overlaps with the
/// displaced frames `Φ(λ ± h e_μ)`, both gauge-fixed against `frame`.
pub fn coupling_tensor<M: HamiltonianModel>(
    model: &M,
    frame: &EigenFrame<M::State>,
    opts: &SpectrumOptions,
) -> Result<CouplingTensor> {
    let p = model.param_names().len();
    let mut entries = Vec::with_capacity(p);
    for mu in 0..p {
        let h = fd_step(model, &frame.lambda, mu, opts)?;
        let mut plus = frame.lambda.clone();
        plus[mu] += h;
        let mut minus = frame.lambda.clone();
        minus[mu] -= h;
        let fp = eigenframe(model, &plus, Some(frame), opts)?;
        let fm = eigenframe(model, &minus, Some(frame), opts)?;
        let op = model.overlap_matrix(&frame.states, &fp.states);
        let om = model.overlap_matrix(&frame.states, &fm.states);
        entries.push((op - om) / (2.0 * h));
    }
    Ok(CouplingTensor { entries })
}

/// Couplings for the dynamics engine: the model's closed form if available,
/// else [`coupling_tensor`].
pub fn couplings<M: HamiltonianModel>(
    model: &M,
    frame: &EigenFrame<M::State>,
    opts: &SpectrumOptions,
) -> Result<CouplingTensor> {
    match model.analytic_couplings(frame) {
        Some(t) => t,
        None => coupling_tensor(model, frame, opts),
    }
}

/// Convenience: frame and coupling tensor at `lambda` in one call.
pub fn coupling_tensor_at<M: HamiltonianModel>(
    model: &M,
    lambda: &[f64],
    reference: Option<&EigenFrame<M::State>>,
    opts: &SpectrumOptions,
) -> Result<(EigenFrame<M::State>, CouplingTensor)> {
    let frame = eigenframe(model, lambda, reference, opts)?;
    let t = coupling_tensor(model, &frame, opts)?;
    Ok((frame, t))
}
