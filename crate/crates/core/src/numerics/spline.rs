//! Cubic interpolating splines over a shared knot vector.
//!
//! Several series can share one set of knots, so a single interval lookup
//! serves all of them; this is how frame data along a path is interpolated.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Zero second derivative at both ends.
    Natural,
    /// Periodic in value, slope and curvature; first and last samples must agree.
    Periodic,
}

#[derive(Debug, Clone)]
pub struct CubicSpline {
    knots: Vec<f64>,
    // values[k * width + c]
    values: Vec<f64>,
    second: Vec<f64>,
    width: usize,
}

impl CubicSpline {
    /// Build from `knots` (strictly increasing) and per-knot rows of `width` values.
    pub fn new(knots: Vec<f64>, rows: &[Vec<f64>], boundary: Boundary) -> Result<Self> {
        let n = knots.len();
        if n < 2 || rows.len() != n {
            return Err(Error::InvalidInput(format!(
                "spline needs >= 2 knots with one row each (got {n} knots, {} rows)",
                rows.len()
            )));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("spline knots must be strictly increasing".into()));
        }
        let width = rows[0].len();
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidInput("spline rows must have equal width".into()));
        }
        let values: Vec<f64> = rows.iter().flatten().copied().collect();
        let mut second = vec![0.0; n * width];
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        for c in 0..width {
            let y: Vec<f64> = (0..n).map(|k| values[k * width + c]).collect();
            let m = match boundary {
                Boundary::Natural => natural_second(&h, &y),
                Boundary::Periodic => periodic_second(&h, &y),
            };
            for (k, v) in m.into_iter().enumerate() {
                second[k * width + c] = v;
            }
        }
        Ok(Self { knots, values, second, width })
    }

    /// Convenience constructor for a single series.
    pub fn scalar(knots: Vec<f64>, y: &[f64], boundary: Boundary) -> Result<Self> {
        let rows: Vec<Vec<f64>> = y.iter().map(|&v| vec![v]).collect();
        Self::new(knots, &rows, boundary)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().expect("non-empty"))
    }

    fn locate(&self, x: f64) -> usize {
        let n = self.knots.len();
        match self.knots.binary_search_by(|k| k.total_cmp(&x)) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Values of every series at `x` (clamped-cubic extrapolation outside the domain).
    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        let i = self.locate(x);
        let (x0, x1) = (self.knots[i], self.knots[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        let ca = (a * a * a - a) * h * h / 6.0;
        let cb = (b * b * b - b) * h * h / 6.0;
        let w = self.width;
        for (c, o) in out.iter_mut().enumerate().take(w) {
            *o = a * self.values[i * w + c]
                + b * self.values[(i + 1) * w + c]
                + ca * self.second[i * w + c]
                + cb * self.second[(i + 1) * w + c];
        }
    }

    /// First derivatives of every series at `x`.
    pub fn deriv_into(&self, x: f64, out: &mut [f64]) {
        let i = self.locate(x);
        let (x0, x1) = (self.knots[i], self.knots[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        let da = -(3.0 * a * a - 1.0) * h / 6.0;
        let db = (3.0 * b * b - 1.0) * h / 6.0;
        let w = self.width;
        for (c, o) in out.iter_mut().enumerate().take(w) {
            *o = (self.values[(i + 1) * w + c] - self.values[i * w + c]) / h
                + da * self.second[i * w + c]
                + db * self.second[(i + 1) * w + c];
        }
    }

    pub fn eval(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.width];
        self.eval_into(x, &mut out);
        out
    }

    pub fn deriv(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.width];
        self.deriv_into(x, &mut out);
        out
    }
}

fn natural_second(h: &[f64], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Tridiagonal system for interior second derivatives (Thomas algorithm).
    let k = n - 2;
    let mut diag = vec![0.0; k];
    let mut rhs = vec![0.0; k];
    let mut upper = vec![0.0; k];
    for i in 0..k {
        diag[i] = 2.0 * (h[i] + h[i + 1]);
        upper[i] = h[i + 1];
        rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h[i + 1] - (y[i + 1] - y[i]) / h[i]);
    }
    for i in 1..k {
        let w = h[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    m[k] = rhs[k - 1] / diag[k - 1];
    for i in (0..k - 1).rev() {
        m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
    }
    m
}

fn periodic_second(h: &[f64], y: &[f64]) -> Vec<f64> {
    // Unknowns m_0..m_{p-1} with m_p = m_0; cyclic tridiagonal solved by Sherman–Morrison.
    let p = y.len() - 1;
    if p < 2 {
        return vec![0.0; y.len()];
    }
    let hh = |i: usize| h[i % p];
    let mut a = vec![0.0; p]; // sub
    let mut b = vec![0.0; p]; // diag
    let mut c = vec![0.0; p]; // super
    let mut r = vec![0.0; p];
    for i in 0..p {
        let hl = hh((i + p - 1) % p);
        let hr = hh(i);
        a[i] = hl;
        b[i] = 2.0 * (hl + hr);
        c[i] = hr;
        let yl = y[(i + p - 1) % p];
        let yr = y[i + 1];
        r[i] = 6.0 * ((yr - y[i]) / hr - (y[i] - yl) / hl);
    }
    let m = cyclic_thomas(&a, &b, &c, &r);
    let mut out = m.clone();
    out.push(m[0]);
    out
}

fn cyclic_thomas(a: &[f64], b: &[f64], c: &[f64], r: &[f64]) -> Vec<f64> {
    let n = b.len();
    let alpha = c[n - 1];
    let beta = a[0];
    let gamma = -b[0];
    let mut bb = b.to_vec();
    bb[0] -= gamma;
    bb[n - 1] -= alpha * beta / gamma;
    let x = thomas(a, &bb, c, r);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = thomas(a, &bb, c, &u);
    let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

fn thomas(a: &[f64], b: &[f64], c: &[f64], r: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    dp[0] = r[0] / b[0];
    for i in 1..n {
        let den = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / den;
        dp[i] = (r[i] - a[i] * dp[i - 1]) / den;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}
