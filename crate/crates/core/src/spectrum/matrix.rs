use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{eigenframe, EigenFrame, HamiltonianModel, RoleMap, SpectrumOptions};
use crate::error::{Error, Result};

pub type MatrixFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
type ScaleFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Largest-magnitude component positive; earliest index wins ties.
fn largest_component_sign(state: &DVector<f64>) -> f64 {
    let mut best = 0.0f64;
    for &v in state.iter() {
        if v.abs() > best.abs() * (1.0 + 1e-12) {
            best = v;
        }
    }
    if best < 0.0 { -1.0 } else { 1.0 }
}

/// A finite-dimensional model given by explicit `H₀(λ)` and `H′(λ)` matrices.
#[derive(Clone)]
pub struct MatrixModel {
    names: Vec<String>,
    dimension: usize,
    h0: MatrixFn,
    hprime: MatrixFn,
    roles: RoleMap,
    scales: ScaleFn,
    gauge: Option<MatrixFn>,
}

impl fmt::Debug for MatrixModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixModel")
            .field("names", &self.names)
            .field("dimension", &self.dimension)
            .field("roles", &self.roles)
            .finish_non_exhaustive()
    }
}

impl MatrixModel {
    pub fn new(names: Vec<String>, dimension: usize, h0: MatrixFn, hprime: MatrixFn, roles: RoleMap) -> Result<Self> {
        roles.validate(dimension)?;
        let p = names.len();
        Ok(Self {
            names,
            dimension,
            h0,
            hprime,
            roles,
            scales: Arc::new(move |_| vec![1.0; p]),
            gauge: None,
        })
    }

    /// λ-independent model; every eigenvector is constant.
    pub fn constant(names: Vec<String>, h0: DMatrix<f64>, hprime: DMatrix<f64>, roles: RoleMap) -> Result<Self> {
        let n = h0.nrows();
        Self::new(names, n, Arc::new(move |_| h0.clone()), Arc::new(move |_| hprime.clone()), roles)
    }

    /// Replaces the default unit parameter scales used for finite-difference steps.
    pub fn with_scales(mut self, scales: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.scales = Arc::new(scales);
        self
    }

    /// Sign convention for first frames: column `i` of `reference(λ)` must have
    /// positive overlap with eigenvector `i`.
    pub fn with_gauge(mut self, reference: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.gauge = Some(Arc::new(reference));
        self
    }

    pub fn h0_at(&self, lambda: &[f64]) -> DMatrix<f64> {
        (self.h0)(lambda)
    }

    pub fn hprime_at(&self, lambda: &[f64]) -> DMatrix<f64> {
        (self.hprime)(lambda)
    }
}

fn check_symmetric(m: &DMatrix<f64>, what: &str, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::Model(format!("{what} is {}x{}, expected {n}x{n}", m.nrows(), m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Model(format!("{what} has non-finite entries")));
    }
    let scale = m.abs().max();
    let asym = (m - m.transpose()).abs().max();
    if asym > 1e-12 * scale {
        return Err(Error::Model(format!("{what} is not symmetric (defect {asym:.3e})")));
    }
    Ok(())
}

impl HamiltonianModel for MatrixModel {
    type State = DVector<f64>;

    fn param_names(&self) -> &[String] {
        &self.names
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn roles(&self) -> &RoleMap {
        &self.roles
    }

    fn eigenpairs(&self, lambda: &[f64]) -> Result<(Vec<f64>, Vec<DVector<f64>>)> {
        let h = self.h0_at(lambda);
        check_symmetric(&h, "H0", self.dimension)?;
        let sym = 0.5 * (&h + h.transpose());
        let eig = SymmetricEigen::try_new(sym, 1e-15, 10_000)
            .ok_or_else(|| Error::Solver(format!("symmetric eigensolver did not converge at {lambda:?}")))?;
        let mut order: Vec<usize> = (0..self.dimension).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let energies = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let states = order.iter().map(|&k| eig.eigenvectors.column(k).into_owned()).collect();
        Ok((energies, states))
    }

    fn overlap(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        a.dot(b)
    }

    fn negate(&self, state: &DVector<f64>) -> DVector<f64> {
        -state
    }

    fn canonical_signs(&self, lambda: &[f64], states: &[DVector<f64>]) -> Vec<f64> {
        match &self.gauge {
            Some(g) => {
                let reference = g(lambda);
                states
                    .iter()
                    .enumerate()
                    .map(|(i, s)| if reference.column(i).dot(s) < 0.0 { -1.0 } else { 1.0 })
                    .collect()
            }
            None => states.iter().map(largest_component_sign).collect(),
        }
    }

    fn drive_matrix(&self, lambda: &[f64], states: &[DVector<f64>]) -> DMatrix<f64> {
        let hp = self.hprime_at(lambda);
        let v = DMatrix::from_columns(states);
        v.transpose() * hp * v
    }

    fn overlap_matrix(&self, bra: &[DVector<f64>], ket: &[DVector<f64>]) -> DMatrix<f64> {
        DMatrix::from_columns(bra).transpose() * DMatrix::from_columns(ket)
    }

    fn param_scales(&self, lambda: &[f64]) -> Vec<f64> {
        (self.scales)(lambda)
    }
}

/// Central-difference derivative `∂_μ Φ_n` of the gauge-fixed eigenvector,
/// one vector per parameter component, with explicit step `h`.
pub fn dphi_dparam<M>(
    model: &M,
    lambda: &[f64],
    n: usize,
    h: f64,
    reference: Option<&EigenFrame<DVector<f64>>>,
    opts: &SpectrumOptions,
) -> Result<Vec<DVector<f64>>>
where
    M: HamiltonianModel<State = DVector<f64>>,
{
    if n >= model.dimension() {
        return Err(Error::InvalidInput(format!("state index {n} out of range")));
    }
    let frame = eigenframe(model, lambda, reference, opts)?;
    let mut out = Vec::with_capacity(lambda.len());
    for mu in 0..lambda.len() {
        let floor = 64.0 * f64::EPSILON * lambda[mu].abs().max(1.0);
        if !(h > floor) {
            return Err(Error::InvalidInput(format!("step {h:.3e} is below the precision floor {floor:.3e}")));
        }
        let mut plus = lambda.to_vec();
        plus[mu] += h;
        let mut minus = lambda.to_vec();
        minus[mu] -= h;
        let fp = eigenframe(model, &plus, Some(&frame), opts)?;
        let fm = eigenframe(model, &minus, Some(&frame), opts)?;
        out.push((&fp.states[n] - &fm.states[n]) / (2.0 * h));
    }
    Ok(out)
}
