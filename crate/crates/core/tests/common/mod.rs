//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use georabi::deltawell::DeltaWellPotential;

/// Symmetric tridiagonal `−d²/dx² + V` on a uniform grid.
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: f64,
}

impl Tridiagonal {
    /// Number of eigenvalues below `e` (Sturm sequence of `T − e`).
    pub fn count_below(&self, e: f64) -> usize {
        let off2 = self.off * self.off;
        let mut count = 0;
        let mut q = self.diag[0] - e;
        if q < 0.0 {
            count += 1;
        }
        for d in &self.diag[1..] {
            let prev = if q == 0.0 { f64::EPSILON * self.off.abs() } else { q };
            q = d - e - off2 / prev;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Every eigenvalue in `(lo, hi)`, ascending, bisected to `tol`.
    pub fn eigenvalues_in(&self, lo: f64, hi: f64, tol: f64) -> Vec<f64> {
        let n_lo = self.count_below(lo);
        let n_hi = self.count_below(hi);
        (n_lo..n_hi)
            .map(|k| {
                let (mut a, mut b) = (lo, hi);
                while b - a > tol {
                    let m = 0.5 * (a + b);
                    if self.count_below(m) > k {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                0.5 * (a + b)
            })
            .collect()
    }
}

/// Finite-difference Hamiltonian on `[−half_box, half_box]` with step `h`.
/// Deltas become single-site wells of depth `γ/h`; the square well edge
/// sites carry half the well depth.
pub fn grid_hamiltonian(pot: &DeltaWellPotential, half_box: f64, h: f64) -> Tridiagonal {
    let n = (2.0 * half_box / h).round() as usize + 1;
    let inv_h2 = 1.0 / (h * h);
    let vc = pot.beta * pot.beta;
    let mut diag = Vec::with_capacity(n);
    for i in 0..n {
        let x = -half_box + i as f64 * h;
        let mut v = 2.0 * inv_h2;
        let edge = (x.abs() - pot.a).abs() < 0.5 * h;
        if edge {
            v -= 0.5 * vc;
            let g = if x < 0.0 { pot.gamma_l } else { pot.gamma_r };
            v -= g / h;
        } else if x.abs() < pot.a {
            v -= vc;
        }
        diag.push(v);
    }
    Tridiagonal { diag, off: -inv_h2 }
}

/// Bound energies from the dense grid: box `[−4a, 4a]`, `h = a/2500`.
pub fn grid_bound_energies(pot: &DeltaWellPotential) -> Vec<f64> {
    let h = pot.a / 2500.0;
    let t = grid_hamiltonian(pot, 4.0 * pot.a, h);
    let g = pot.gamma_l + pot.gamma_r;
    let floor = -2.0 * (pot.beta * pot.beta + g * g / 4.0) - 1.0;
    t.eigenvalues_in(floor, -1e-6, 1e-13)
}

/// Finite square well `V = −β²` on `|x| < a`: even roots of `z tan z = √(z₀² − z²)`,
/// odd roots of `−z cot z = √(z₀² − z²)`, `z = a√(E + β²)`, `z₀ = aβ`.
pub fn square_well_energies(a: f64, beta: f64) -> Vec<f64> {
    let z0 = a * beta;
    let even = |z: f64| z * z.sin() - (z0 * z0 - z * z).sqrt() * z.cos();
    let odd = |z: f64| -z * z.cos() - (z0 * z0 - z * z).sqrt() * z.sin();
    let mut out = Vec::new();
    let n = 200_000;
    for f in [&even as &dyn Fn(f64) -> f64, &odd] {
        let mut prev = f(1e-12);
        for i in 1..=n {
            let z = z0 * i as f64 / n as f64;
            let cur = f(z);
            if prev.signum() != cur.signum() {
                let (mut lo, mut hi) = (z0 * (i - 1) as f64 / n as f64, z);
                let flo = f(lo);
                for _ in 0..200 {
                    let m = 0.5 * (lo + hi);
                    if (f(m) < 0.0) == (flo < 0.0) {
                        lo = m;
                    } else {
                        hi = m;
                    }
                }
                let z = 0.5 * (lo + hi);
                out.push(z * z / (a * a) - beta * beta);
            }
            prev = cur;
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Composite Simpson rule with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + i as f64 * h);
    }
    s * h / 3.0
}

/// Linear interpolation of `(xs, ys)` at `x`; `xs` ascending.
pub fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let k = xs.partition_point(|&v| v <= x);
    if k >= xs.len() {
        return *ys.last().unwrap();
    }
    let (x0, x1) = (xs[k - 1], xs[k]);
    let w = (x - x0) / (x1 - x0);
    ys[k - 1] * (1.0 - w) + ys[k] * w
}
