//! Two delta wells at `x = ±a` on top of a square well,
//! `V(x) = −V_c θ(a − |x|) − U_l δ(x + a) − U_r δ(x − a)`, in units where
//! `ħ = 2m = 1`: strengths are `γ = U`, `V_c = β²`, and a single delta of
//! strength `γ` binds at `−γ²/4`.
//!
//! Bound states are zeros of a 2×2 matching determinant, bracketed on a
//! log-spaced energy grid and refined by bisection. The interior is written
//! with exponentials anchored at the wall they decay from whenever it is
//! strongly evanescent, so tails of localized states stay accurate far from
//! their well.

mod model;
mod state;

pub use model::{as_model, DeltaWellModel, DepthPath, DepthSelection};
pub use state::{BoundState, InteriorCharacter};

use crate::error::{Error, Result};
use state::{ch_sh, Matching};

/// Potential parameters in global units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaWellPotential {
    /// Half-separation of the delta wells.
    pub a: f64,
    pub gamma_l: f64,
    pub gamma_r: f64,
    /// Square-well wavenumber, `V_c = β²`.
    pub beta: f64,
}

impl DeltaWellPotential {
    pub fn new(a: f64, gamma_l: f64, gamma_r: f64, beta: f64) -> Result<Self> {
        let p = Self { a, gamma_l, gamma_r, beta };
        p.validate()?;
        Ok(p)
    }

    /// `a = 44ζ`, `γ_r = 22/a`, `β = 7.8/a` with `ζ = 1/γ_l = 1`.
    pub fn fig2() -> Self {
        let a = 44.0;
        Self { a, gamma_l: 1.0, gamma_r: 22.0 / a, beta: 7.8 / a }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.a, self.gamma_l, self.gamma_r, self.beta];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("potential parameters must be finite".into()));
        }
        if !(self.a > 0.0) {
            return Err(Error::InvalidInput(format!("half-separation must be positive, got {}", self.a)));
        }
        if self.gamma_r < 0.0 || self.beta < 0.0 {
            return Err(Error::InvalidInput("strengths and β must be non-negative".into()));
        }
        if self.gamma_l < self.gamma_r {
            return Err(Error::InvalidInput(format!(
                "the left well must be the deepest (γ_l = {} < γ_r = {})",
                self.gamma_l, self.gamma_r
            )));
        }
        Ok(())
    }

    pub fn v_c(&self) -> f64 {
        self.beta * self.beta
    }

    /// Unit of length `ζ = 1/γ_l`.
    pub fn zeta(&self) -> f64 {
        1.0 / self.gamma_l
    }

    /// Energy unit `E_u = γ_r² − β²`.
    pub fn energy_unit(&self) -> f64 {
        self.gamma_r * self.gamma_r - self.beta * self.beta
    }

    /// Depth energies `(ε_c, ε_r) = (β², γ_r²)`.
    pub fn depths(&self) -> [f64; 2] {
        [self.beta * self.beta, self.gamma_r * self.gamma_r]
    }

    /// Same `a`, `γ_l` with depths `(ε_c, ε_r)`.
    pub fn with_depths(&self, eps_c: f64, eps_r: f64) -> Result<Self> {
        if !(eps_c >= 0.0) || !(eps_r >= 0.0) {
            return Err(Error::InvalidInput(format!("depths must be non-negative, got ({eps_c}, {eps_r})")));
        }
        Self::new(self.a, self.gamma_l, eps_r.sqrt(), eps_c.sqrt())
    }

    /// Lower end of the root search; no state lies below a single delta of
    /// the combined strength at the bottom of the square well.
    fn energy_floor(&self) -> f64 {
        let g = self.gamma_l + self.gamma_r;
        -1.2 * (self.v_c() + g * g / 4.0)
    }
}

/// Energy grid points of the root search.
pub const ROOT_GRID: usize = 2000;
/// Upper end of the root search.
pub const ROOT_CEILING: f64 = -1e-6;

fn det(pot: &DeltaWellPotential, e: f64) -> f64 {
    Matching::new(pot, e).det()
}

fn bisect(pot: &DeltaWellPotential, mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = det(pot, mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo <= 2.0 * f64::EPSILON * hi.abs() {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Number of bound states below `energy`: nodes of the solution that decays
/// to the left.
pub(crate) fn count_below(pot: &DeltaWellPotential, energy: f64) -> usize {
    let a = pot.a;
    let k = (-energy).sqrt();
    let s = energy + pot.v_c();
    // slope just inside the left wall, value 1
    let d0 = k - pot.gamma_l;
    let mut nodes = 0;
    let (v, d) = if s > 0.0 {
        let q = s.sqrt();
        let theta = 1.0f64.atan2(d0 / q) + 2.0 * q * a;
        nodes += (theta / std::f64::consts::PI).floor() as usize;
        (theta.sin(), q * theta.cos())
    } else {
        let p = (-s).sqrt();
        let (v, d) = if 2.0 * p * a < 1.0 {
            let (ch, sh) = ch_sh(s, 2.0 * a);
            (ch + d0 * sh, s * sh + d0 * ch)
        } else {
            // divided by cosh(2pa)
            let t = (2.0 * p * a).tanh();
            (1.0 + d0 / p * t, p * t + d0)
        };
        if v < 0.0 {
            nodes += 1;
        }
        (v, d)
    };
    let d = d - pot.gamma_r * v;
    if v != 0.0 && (v < 0.0) != (d < 0.0) && v.abs() * k < d.abs() {
        nodes += 1;
    }
    nodes
}

/// Roots inside `(lo, hi)` when the determinant misses some of them, split
/// apart by bisection on the state count.
fn isolate(pot: &DeltaWellPotential, lo: f64, hi: f64, n_lo: usize, n_hi: usize, out: &mut Vec<f64>) {
    if n_hi <= n_lo {
        return;
    }
    let (f_lo, f_hi) = (det(pot, lo), det(pot, hi));
    if n_hi - n_lo == 1 && f_lo != 0.0 && (f_lo < 0.0) != (f_hi < 0.0) {
        out.push(bisect(pot, lo, hi, f_lo));
        return;
    }
    let mid = 0.5 * (lo + hi);
    if mid <= lo || mid >= hi || hi - lo <= 4.0 * f64::EPSILON * hi.abs() {
        out.extend(std::iter::repeat_n(mid, n_hi - n_lo));
        return;
    }
    let n_mid = count_below(pot, mid);
    isolate(pot, lo, mid, n_lo, n_mid, out);
    isolate(pot, mid, hi, n_mid, n_hi, out);
}

/// Energy roots bracketed on `n` log-spaced energies, ascending. Cells whose
/// state count rises by more than their determinant sign changes show are
/// resolved by counting.
fn roots(pot: &DeltaWellPotential, n: usize) -> Vec<f64> {
    let floor = pot.energy_floor();
    if !(floor < ROOT_CEILING) {
        return Vec::new();
    }
    let (l0, l1) = ((-floor).ln(), (-ROOT_CEILING).ln());
    let grid: Vec<f64> = (0..n).map(|i| -(l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp()).collect();
    let mut out = Vec::new();
    let mut fprev = det(pot, grid[0]);
    let mut nprev = count_below(pot, grid[0]);
    if fprev == 0.0 {
        out.push(grid[0]);
    }
    for w in grid.windows(2) {
        let f = det(pot, w[1]);
        let nc = count_below(pot, w[1]);
        if nc > nprev + 1 {
            isolate(pot, w[0], w[1], nprev, nc, &mut out);
        } else if f == 0.0 {
            out.push(w[1]);
        } else if fprev != 0.0 && (f < 0.0) != (fprev < 0.0) {
            out.push(bisect(pot, w[0], w[1], fprev));
        }
        fprev = f;
        nprev = nc;
    }
    out
}

/// Bound states without the refinement check.
pub(crate) fn bound_states_on_grid(pot: &DeltaWellPotential, n: usize) -> Vec<BoundState> {
    roots(pot, n).into_iter().map(|e| BoundState::from_root(pot, e)).collect()
}

/// All bound states with `E` below the search ceiling, ascending in energy.
///
/// The root count is confirmed on a grid twice as fine.
pub fn bound_spectrum(pot: &DeltaWellPotential) -> Result<Vec<BoundState>> {
    pot.validate()?;
    let coarse = roots(pot, ROOT_GRID);
    let fine = roots(pot, 2 * ROOT_GRID);
    if coarse.len() != fine.len() {
        return Err(Error::Resolution { coarse: coarse.len(), fine: fine.len() });
    }
    Ok(fine.into_iter().map(|e| BoundState::from_root(pot, e)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateLabel {
    LocalizedLeft,
    LocalizedRight,
    Extended,
}

impl StateLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            StateLabel::LocalizedLeft => "localized-left",
            StateLabel::LocalizedRight => "localized-right",
            StateLabel::Extended => "extended",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateClassification {
    pub label: StateLabel,
    /// Probability within the left window.
    pub left: f64,
    pub right: f64,
    /// Probability between the two windows.
    pub central: f64,
}

/// Probability threshold for a localized label.
pub const LOCALIZED_WEIGHT: f64 = 0.9;

/// Window half-width around a delta of strength `gamma`: four single-delta
/// decay lengths `2/γ`.
pub fn window(gamma: f64) -> f64 {
    if gamma > 0.0 {
        8.0 / gamma
    } else {
        0.0
    }
}

/// Labels a state by where its probability sits. Windows are clipped at
/// `x = 0` so the three weights never overlap.
pub fn classify(state: &BoundState, pot: &DeltaWellPotential) -> StateClassification {
    let a = pot.a;
    let wl = window(pot.gamma_l);
    let wr = window(pot.gamma_r);
    let l_hi = (-a + wl).min(0.0);
    let r_lo = (a - wr).max(0.0);
    let left = if wl > 0.0 { state.probability(-a - wl, l_hi) } else { 0.0 };
    let right = if wr > 0.0 { state.probability(r_lo, a + wr) } else { 0.0 };
    let central = if r_lo > l_hi { state.probability(l_hi, r_lo) } else { 0.0 };
    let label = if left > LOCALIZED_WEIGHT {
        StateLabel::LocalizedLeft
    } else if right > LOCALIZED_WEIGHT {
        StateLabel::LocalizedRight
    } else {
        StateLabel::Extended
    };
    StateClassification { label, left, right, central }
}

/// `⟨x⟩_ij = ∫ψ_i x ψ_j dx`.
pub fn position_element(i: &BoundState, j: &BoundState) -> f64 {
    i.position(j)
}
