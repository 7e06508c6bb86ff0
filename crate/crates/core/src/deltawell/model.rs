//! The delta-well system as a parameterized model over the depth energies
//! `(ε_c, ε_r) = (β², γ_r²)`, with drive `H′ = F·x`.

use std::f64::consts::TAU;

use nalgebra::DMatrix;

use super::{bound_states_on_grid, classify, BoundState, DeltaWellPotential, StateLabel, ROOT_GRID};
use crate::dynamics::effective::field_contributions;
use crate::dynamics::{local_frame, Curve, DriveSchedule, DynamicsOptions, ParamPath, Timing};
use crate::error::{Error, Result};
use crate::par;
use crate::spectrum::{CouplingTensor, EigenFrame, HamiltonianModel, RoleMap};

/// Which bound states a model carries besides the two localized ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthSelection {
    /// Ranks among the extended states, counted upward in energy.
    pub extended: Vec<usize>,
}

/// Two-parameter family over `(ε_c, ε_r)` with fixed `a` and `γ_l`.
#[derive(Debug, Clone)]
pub struct DeltaWellModel {
    base: DeltaWellPotential,
    selection: DepthSelection,
    names: Vec<String>,
    roles: RoleMap,
}

/// Localized-left, localized-right and extended states of a spectrum.
struct Sorted {
    left: BoundState,
    right: BoundState,
    extended: Vec<BoundState>,
}

fn sort_states(pot: &DeltaWellPotential) -> Result<Sorted> {
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut extended = Vec::new();
    for s in bound_states_on_grid(pot, ROOT_GRID) {
        match classify(&s, pot).label {
            StateLabel::LocalizedLeft => left.push(s),
            StateLabel::LocalizedRight => right.push(s),
            StateLabel::Extended => extended.push(s),
        }
    }
    if left.len() != 1 || right.len() != 1 {
        return Err(Error::Model(format!(
            "expected one localized state per delta well at depths {:?}, found {} left and {} right",
            pot.depths(),
            left.len(),
            right.len()
        )));
    }
    Ok(Sorted { left: left.remove(0), right: right.remove(0), extended })
}

impl DeltaWellModel {
    /// Model carrying the localized pair and the selected extended states;
    /// roles follow the energy order at the depths of `base`.
    pub fn new(base: DeltaWellPotential, selection: DepthSelection) -> Result<Self> {
        base.validate()?;
        let mut ranks = selection.extended.clone();
        ranks.sort_unstable();
        ranks.dedup();
        if ranks.is_empty() {
            return Err(Error::InvalidInput("at least one extended state is required".into()));
        }
        let selection = DepthSelection { extended: ranks };
        let mut model = Self {
            base,
            selection,
            names: vec!["eps_c".into(), "eps_r".into()],
            roles: RoleMap::new(0, vec![], 1),
        };
        let (energies, _, tags) = model.select(&base.depths())?;
        let find = |t: Tag| tags.iter().position(|&x| x == t).expect("tag present");
        let aux: Vec<usize> = (0..energies.len()).filter(|&i| tags[i] == Tag::Aux).collect();
        model.roles = RoleMap::new(find(Tag::Left), aux, find(Tag::Right));
        Ok(model)
    }

    pub fn base(&self) -> &DeltaWellPotential {
        &self.base
    }

    pub fn selection(&self) -> &DepthSelection {
        &self.selection
    }

    pub fn potential_at(&self, lambda: &[f64]) -> Result<DeltaWellPotential> {
        self.base.with_depths(lambda[0], lambda[1])
    }

    fn select(&self, lambda: &[f64]) -> Result<(Vec<f64>, Vec<BoundState>, Vec<Tag>)> {
        let pot = self.potential_at(lambda)?;
        let sorted = sort_states(&pot)?;
        let mut items = vec![(sorted.left, Tag::Left), (sorted.right, Tag::Right)];
        for &r in &self.selection.extended {
            let s = sorted.extended.get(r).ok_or_else(|| {
                Error::Model(format!(
                    "extended state {r} does not exist at depths {lambda:?} ({} extended states)",
                    sorted.extended.len()
                ))
            })?;
            items.push((s.clone(), Tag::Aux));
        }
        items.sort_by(|a, b| a.0.energy().total_cmp(&b.0.energy()));
        let energies = items.iter().map(|(s, _)| s.energy()).collect();
        let tags = items.iter().map(|(_, t)| *t).collect();
        let states = items.into_iter().map(|(s, _)| s).collect();
        Ok((energies, states, tags))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tag {
    Left,
    Right,
    Aux,
}

impl HamiltonianModel for DeltaWellModel {
    type State = BoundState;

    fn param_names(&self) -> &[String] {
        &self.names
    }

    fn dimension(&self) -> usize {
        2 + self.selection.extended.len()
    }

    fn roles(&self) -> &RoleMap {
        &self.roles
    }

    fn eigenpairs(&self, lambda: &[f64]) -> Result<(Vec<f64>, Vec<BoundState>)> {
        let (e, s, _) = self.select(lambda)?;
        Ok((e, s))
    }

    fn overlap(&self, a: &BoundState, b: &BoundState) -> f64 {
        a.overlap(b)
    }

    fn negate(&self, state: &BoundState) -> BoundState {
        state.negated()
    }

    fn canonical_signs(&self, _lambda: &[f64], states: &[BoundState]) -> Vec<f64> {
        vec![1.0; states.len()]
    }

    fn drive_matrix(&self, _lambda: &[f64], states: &[BoundState]) -> DMatrix<f64> {
        let n = states.len();
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = states[i].position(&states[j]);
                d[(i, j)] = v;
                d[(j, i)] = v;
            }
        }
        d
    }

    fn param_scales(&self, lambda: &[f64]) -> Vec<f64> {
        let floor = 1e-6 * self.base.gamma_l * self.base.gamma_l;
        lambda.iter().map(|v| v.abs().max(floor)).collect()
    }

    /// Hellmann–Feynman: `∂H/∂ε_c = −θ(a − |x|)`, `∂H/∂ε_r = −δ(x − a)/(2γ_r)`.
    fn analytic_couplings(&self, frame: &EigenFrame<BoundState>) -> Option<Result<CouplingTensor>> {
        let a = self.base.a;
        let gamma_r = frame.lambda[1].sqrt();
        if !(gamma_r > 0.0) {
            return Some(Err(Error::InvalidInput("ε_r must be positive for the coupling tensor".into())));
        }
        let n = frame.states.len();
        let edge: Vec<f64> = frame.states.iter().map(|s| s.edge_values().1).collect();
        let mut dc = DMatrix::zeros(n, n);
        let mut dr = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let gap = frame.energies[j] - frame.energies[i];
                let hc = -frame.states[i].product_integral(&frame.states[j], -a, a, 0);
                let hr = -edge[i] * edge[j] / (2.0 * gamma_r);
                dc[(i, j)] = hc / gap;
                dr[(i, j)] = hr / gap;
            }
        }
        Some(Ok(CouplingTensor { entries: vec![dc, dr] }))
    }

    fn check_params(&self, lambda: &[f64]) -> Result<()> {
        if lambda.len() != 2 || lambda.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("expected finite (ε_c, ε_r), got {lambda:?}")));
        }
        self.potential_at(lambda).map(|_| ())
    }
}

/// Elliptic depth path `ε_r = γ_r² + Λ_r cos Ωt`, `ε_c = β² + Λ_c sin Ωt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthPath {
    pub lambda_c: f64,
    pub lambda_r: f64,
    /// Angular frequency `Ω`.
    pub omega: f64,
    pub cycles: usize,
}

impl DepthPath {
    /// The path with amplitudes in units of the base energy unit `E_u`.
    pub fn in_energy_units(base: &DeltaWellPotential, lambda_c: f64, lambda_r: f64, omega: f64, cycles: usize) -> Self {
        let eu = base.energy_unit();
        Self { lambda_c: lambda_c * eu, lambda_r: lambda_r * eu, omega, cycles }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { lambda_c: s * self.lambda_c, lambda_r: s * self.lambda_r, ..*self }
    }

    pub fn curve(&self, base: &DeltaWellPotential) -> Curve {
        Curve::Ellipse { center: base.depths().to_vec(), cos_amp: vec![0.0, self.lambda_r], sin_amp: vec![self.lambda_c, 0.0] }
    }

    pub fn param_path(&self, base: &DeltaWellPotential) -> Result<ParamPath> {
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(Error::InvalidInput(format!("path frequency must be positive, got {}", self.omega)));
        }
        ParamPath::new(self.curve(base), TAU / self.omega, self.cycles, Timing::Uniform)
    }
}

/// Samples used for the localized-state check and the truncation.
const TRUNCATION_SAMPLES: usize = 64;

/// Builds the model for a depth path, keeping the extended states whose
/// path-summed `|f_a·λ′|` make up a fraction `threshold` of the total.
pub fn as_model(
    base: &DeltaWellPotential,
    path: &DepthPath,
    amplitude: f64,
    threshold: f64,
    opts: &DynamicsOptions,
) -> Result<(DeltaWellModel, ParamPath, DriveSchedule)> {
    base.validate()?;
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidInput(format!("truncation threshold must lie in (0, 1], got {threshold}")));
    }
    let drive = DriveSchedule::tracked(amplitude);
    drive.validate()?;
    let ppath = path.param_path(base)?;
    let curve = ppath.curve();
    let us: Vec<f64> = (0..TRUNCATION_SAMPLES).map(|k| k as f64 / TRUNCATION_SAMPLES as f64).collect();
    let counts = par::try_map_range(opts.exec, us.len(), |k| {
        let p = curve.point(us[k]);
        let pot = base.with_depths(p[0], p[1])?;
        Ok::<_, Error>(sort_states(&pot)?.extended.len())
    })?;
    let available = counts.iter().copied().min().unwrap_or(0);
    if available == 0 {
        return Err(Error::Model("no extended states along the depth path".into()));
    }
    let full = DeltaWellModel::new(*base, DepthSelection { extended: (0..available).collect() })?;
    let weights = par::try_map_range(opts.exec, us.len(), |k| {
        let u = us[k];
        let local = local_frame(&full, &curve.point(u), None, &opts.spectrum)?;
        let tangent = curve.tangent(u);
        let f = field_contributions(&local, full.roles(), 1.0);
        Ok::<_, Error>(f.iter().map(|fa| fa.iter().zip(&tangent).map(|(c, t)| c * t).sum::<num_complex::Complex64>().norm()).collect::<Vec<f64>>())
    })?;
    // aux frame indices map to extended ranks in energy order
    let mut totals = vec![0.0; available];
    for w in &weights {
        for (t, x) in totals.iter_mut().zip(w) {
            *t += x;
        }
    }
    let sum: f64 = totals.iter().sum();
    let mut order: Vec<usize> = (0..available).collect();
    order.sort_by(|&i, &j| totals[j].total_cmp(&totals[i]).then(i.cmp(&j)));
    let mut chosen = Vec::new();
    let mut acc = 0.0;
    for r in order {
        chosen.push(r);
        acc += totals[r];
        if sum == 0.0 || acc >= threshold * sum {
            break;
        }
    }
    let model = DeltaWellModel::new(*base, DepthSelection { extended: chosen })?;
    Ok((model, ppath, drive))
}
