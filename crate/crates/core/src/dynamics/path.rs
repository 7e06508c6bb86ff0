//! Time-parameterized curves `λ(t)` in parameter space.
//!
//! A [`ParamPath`] separates geometry from timing: a [`Curve`] maps the
//! curve parameter `u ∈ [0, 1]` to a parameter point, and a [`Timing`]
//! maps normalized time within one period to `u`. Geometric quantities
//! only ever look at the curve, so they cannot depend on traversal speed.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::numerics::{Boundary, CubicSpline};

#[derive(Debug, Clone)]
pub enum Curve {
    /// Degenerate path that stays at one point.
    Point(Vec<f64>),
    /// `center + cos_amp·cos(2πu) + sin_amp·sin(2πu)`; closed.
    Ellipse { center: Vec<f64>, cos_amp: Vec<f64>, sin_amp: Vec<f64> },
    /// Circular arc `center + r(cos φ·e1 + sin φ·e2)` with `φ = start + sweep·u`,
    /// in the plane of parameter components `axes = (i, j)`.
    Arc { center: Vec<f64>, axes: (usize, usize), radius: f64, start: f64, sweep: f64 },
    Line { from: Vec<f64>, to: Vec<f64> },
    /// Cubic interpolation through knots at uniform `u`; `closed` adds the
    /// wrap-around segment and uses periodic end conditions.
    Spline(SplineCurve),
    /// Pieces traversed in order, each taking an equal share of `u`.
    Chain(Vec<Curve>),
}

#[derive(Debug, Clone)]
pub struct SplineCurve {
    knots: Vec<Vec<f64>>,
    closed: bool,
    spline: CubicSpline,
}

impl SplineCurve {
    pub fn new(knots: Vec<Vec<f64>>, closed: bool) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidInput("sampled path needs at least two waypoints".into()));
        }
        let dim = knots[0].len();
        if knots.iter().any(|k| k.len() != dim || k.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidInput("waypoints must share a dimension and be finite".into()));
        }
        let mut rows = knots.clone();
        if closed {
            rows.push(knots[0].clone());
        }
        let n = rows.len();
        let u: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
        let boundary = if closed && n > 3 { Boundary::Periodic } else { Boundary::Natural };
        let spline = CubicSpline::new(u, &rows, boundary)?;
        Ok(Self { knots, closed, spline })
    }

    pub fn knots(&self) -> &[Vec<f64>] {
        &self.knots
    }

    pub fn closed(&self) -> bool {
        self.closed
    }
}

impl Curve {
    pub fn circle(center: [f64; 2], radius: f64, start: f64) -> Self {
        Curve::Arc { center: center.to_vec(), axes: (0, 1), radius, start, sweep: TAU }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Curve::Point(p) => p.len(),
            Curve::Ellipse { center, .. } | Curve::Arc { center, .. } => center.len(),
            Curve::Line { from, .. } => from.len(),
            Curve::Spline(s) => s.knots[0].len(),
            Curve::Chain(c) => c.first().map_or(0, Curve::dimension),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        match self {
            Curve::Point(p) if p.iter().any(|v| !v.is_finite()) => bad("point path is not finite"),
            Curve::Ellipse { center, cos_amp, sin_amp } => {
                if cos_amp.len() != center.len() || sin_amp.len() != center.len() {
                    return bad("ellipse amplitudes must match the center dimension");
                }
                if center.iter().chain(cos_amp).chain(sin_amp).any(|v| !v.is_finite()) {
                    return bad("ellipse parameters must be finite");
                }
                Ok(())
            }
            Curve::Arc { center, axes, radius, start, sweep } => {
                if axes.0 >= center.len() || axes.1 >= center.len() || axes.0 == axes.1 {
                    return bad("arc axes must be two distinct parameter components");
                }
                if ![*radius, *start, *sweep].iter().chain(center).all(|v| v.is_finite()) || *radius < 0.0 {
                    return bad("arc radius must be finite and non-negative");
                }
                Ok(())
            }
            Curve::Line { from, to } => {
                if from.len() != to.len() || from.iter().chain(to).any(|v| !v.is_finite()) {
                    return bad("line endpoints must be finite with equal dimension");
                }
                Ok(())
            }
            Curve::Chain(pieces) => {
                if pieces.is_empty() {
                    return bad("chain path needs at least one piece");
                }
                let d = pieces[0].dimension();
                for (k, p) in pieces.iter().enumerate() {
                    p.validate()?;
                    if p.dimension() != d {
                        return bad("chain pieces must share a dimension");
                    }
                    if k > 0 {
                        let a = pieces[k - 1].point(1.0);
                        let b = p.point(0.0);
                        if distance(&a, &b) > 1e-9 * (1.0 + norm(&a)) {
                            return Err(Error::InvalidInput(format!("chain piece {k} does not start where piece {} ends", k - 1)));
                        }
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn chain_locate(pieces: &[Curve], u: f64) -> (usize, f64) {
        let n = pieces.len();
        let s = (u * n as f64).clamp(0.0, n as f64);
        let k = (s.floor() as usize).min(n - 1);
        (k, s - k as f64)
    }

    /// Parameter point at curve parameter `u ∈ [0, 1]`.
    pub fn point(&self, u: f64) -> Vec<f64> {
        match self {
            Curve::Point(p) => p.clone(),
            Curve::Ellipse { center, cos_amp, sin_amp } => {
                let (s, c) = (TAU * u).sin_cos();
                center.iter().zip(cos_amp).zip(sin_amp).map(|((m, a), b)| m + a * c + b * s).collect()
            }
            Curve::Arc { center, axes, radius, start, sweep } => {
                let phi = start + sweep * u;
                let mut p = center.clone();
                p[axes.0] += radius * phi.cos();
                p[axes.1] += radius * phi.sin();
                p
            }
            Curve::Line { from, to } => from.iter().zip(to).map(|(a, b)| a + (b - a) * u).collect(),
            Curve::Spline(s) => s.spline.eval(u),
            Curve::Chain(pieces) => {
                let (k, v) = Self::chain_locate(pieces, u);
                pieces[k].point(v)
            }
        }
    }

    /// Tangent `dλ/du`.
    pub fn tangent(&self, u: f64) -> Vec<f64> {
        match self {
            Curve::Point(p) => vec![0.0; p.len()],
            Curve::Ellipse { cos_amp, sin_amp, .. } => {
                let (s, c) = (TAU * u).sin_cos();
                cos_amp.iter().zip(sin_amp).map(|(a, b)| TAU * (-a * s + b * c)).collect()
            }
            Curve::Arc { center, axes, radius, start, sweep } => {
                let phi = start + sweep * u;
                let mut t = vec![0.0; center.len()];
                t[axes.0] = -radius * sweep * phi.sin();
                t[axes.1] = radius * sweep * phi.cos();
                t
            }
            Curve::Line { from, to } => from.iter().zip(to).map(|(a, b)| b - a).collect(),
            Curve::Spline(s) => s.spline.deriv(u),
            Curve::Chain(pieces) => {
                let (k, v) = Self::chain_locate(pieces, u);
                let n = pieces.len() as f64;
                pieces[k].tangent(v).into_iter().map(|x| x * n).collect()
            }
        }
    }

    /// Curve parameters where the tangent may be discontinuous (piece joints, knots).
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = match self {
            Curve::Chain(pieces) => {
                let n = pieces.len();
                (0..=n).map(|k| k as f64 / n as f64).collect()
            }
            Curve::Spline(s) => {
                let n = s.knots.len() + usize::from(s.closed) - 1;
                (0..=n).map(|k| k as f64 / n as f64).collect()
            }
            _ => vec![0.0, 1.0],
        };
        b.dedup();
        b
    }

    pub fn is_closed(&self) -> bool {
        let a = self.point(0.0);
        let b = self.point(1.0);
        let scale = 1.0 + norm(&a);
        distance(&a, &b) <= 1e-10 * scale
    }

    /// `true` when the curve never leaves its starting point.
    pub fn is_static(&self) -> bool {
        match self {
            Curve::Point(_) => true,
            Curve::Ellipse { cos_amp, sin_amp, .. } => cos_amp.iter().chain(sin_amp).all(|v| *v == 0.0),
            Curve::Arc { radius, sweep, .. } => *radius == 0.0 || *sweep == 0.0,
            Curve::Line { from, to } => from == to,
            Curve::Spline(s) => s.knots.iter().all(|k| k == &s.knots[0]),
            Curve::Chain(p) => p.iter().all(Curve::is_static),
        }
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Map from normalized time `τ ∈ [0, 1]` within a period to the curve parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Timing {
    Uniform,
    /// `u = τ − k/(2π)·sin(2πτ)`, monotone for `|k| < 1`.
    Eased { strength: f64 },
}

impl Timing {
    pub fn u(&self, tau: f64) -> f64 {
        match *self {
            Timing::Uniform => tau,
            Timing::Eased { strength } => tau - strength / TAU * (TAU * tau).sin(),
        }
    }

    pub fn du_dtau(&self, tau: f64) -> f64 {
        match *self {
            Timing::Uniform => 1.0,
            Timing::Eased { strength } => 1.0 - strength * (TAU * tau).cos(),
        }
    }
}

/// A curve traversed `cycles` times, each traversal lasting `period`.
#[derive(Debug, Clone)]
pub struct ParamPath {
    curve: Curve,
    period: f64,
    cycles: usize,
    timing: Timing,
}

impl ParamPath {
    pub fn new(curve: Curve, period: f64, cycles: usize, timing: Timing) -> Result<Self> {
        curve.validate()?;
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidInput(format!("path period must be positive, got {period}")));
        }
        if cycles == 0 {
            return Err(Error::InvalidInput("path needs at least one cycle".into()));
        }
        if cycles > 1 && !curve.is_closed() {
            return Err(Error::InvalidInput("only closed curves can be traversed repeatedly".into()));
        }
        if let Timing::Eased { strength } = timing {
            if !(strength.abs() < 1.0) {
                return Err(Error::InvalidInput("eased timing needs |strength| < 1".into()));
            }
        }
        Ok(Self { curve, period, cycles, timing })
    }

    /// One uniform traversal of `curve` over `period`.
    pub fn uniform(curve: Curve, period: f64) -> Result<Self> {
        Self::new(curve, period, 1, Timing::Uniform)
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn cycles(&self) -> usize {
        self.cycles
    }

    pub fn timing(&self) -> Timing {
        self.timing
    }

    pub fn duration(&self) -> f64 {
        self.period * self.cycles as f64
    }

    pub fn cyclic(&self) -> bool {
        self.curve.is_closed()
    }

    pub fn with_cycles(&self, cycles: usize) -> Result<Self> {
        Self::new(self.curve.clone(), self.period, cycles, self.timing)
    }

    pub fn with_period(&self, period: f64) -> Result<Self> {
        Self::new(self.curve.clone(), period, self.cycles, self.timing)
    }

    pub fn with_timing(&self, timing: Timing) -> Result<Self> {
        Self::new(self.curve.clone(), self.period, self.cycles, timing)
    }

    /// Cycle index and normalized time within the cycle.
    pub fn phase(&self, t: f64) -> (usize, f64) {
        let s = (t / self.period).clamp(0.0, self.cycles as f64);
        let k = (s.floor() as usize).min(self.cycles - 1);
        (k, s - k as f64)
    }

    /// Curve parameter `u` and its rate `du/dt` at time `t`.
    pub fn u_at(&self, t: f64) -> (f64, f64) {
        let (_, tau) = self.phase(t);
        (self.timing.u(tau), self.timing.du_dtau(tau) / self.period)
    }

    pub fn at(&self, t: f64) -> Vec<f64> {
        self.curve.point(self.u_at(t).0)
    }

    pub fn velocity(&self, t: f64) -> Vec<f64> {
        let (u, du) = self.u_at(t);
        self.curve.tangent(u).into_iter().map(|x| x * du).collect()
    }
}
