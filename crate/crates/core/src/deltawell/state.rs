//! Piecewise-analytic bound states and their integrals.
//!
//! Every piece of a wavefunction is a short sum of complex exponentials
//! `c·e^{z(x − x₀)}`, anchored so that each term is bounded by `|c|` on its
//! piece. Products of two states are again exponentials, so overlaps,
//! position elements and windowed probabilities have closed forms.

use num_complex::Complex64;

use super::DeltaWellPotential;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Term {
    pub c: Complex64,
    pub z: Complex64,
    pub x0: f64,
}

impl Term {
    fn at(&self, x: f64) -> Complex64 {
        self.c * (self.z * (x - self.x0)).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InteriorCharacter {
    /// `E > −V_c`: trigonometric inside the square well.
    Oscillatory,
    /// `E < −V_c`: hyperbolic inside the square well.
    Evanescent,
}

/// Normalized bound state on the three regions `x < −a`, `|x| < a`, `x > a`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundState {
    energy: f64,
    character: InteriorCharacter,
    a: f64,
    /// Exterior decay constant `√(−E)`.
    decay: f64,
    /// Factor that was applied to reach unit norm.
    norm_constant: f64,
    pieces: [Piece; 3],
}

/// `(cos(√s·a), sin(√s·a)/√s)`, continued to `s < 0` and evaluated by series
/// near `s = 0`.
pub(crate) fn ch_sh(s: f64, a: f64) -> (f64, f64) {
    let x = s * a * a;
    if x.abs() < 1e-3 {
        let (mut ch, mut sh) = (0.0, 0.0);
        let mut t = 1.0;
        for m in 0..8 {
            let m2 = 2.0 * m as f64;
            ch += t;
            sh += t / (m2 + 1.0);
            t *= -x / ((m2 + 1.0) * (m2 + 2.0));
        }
        (ch, a * sh)
    } else if s > 0.0 {
        let q = s.sqrt();
        ((q * a).cos(), (q * a).sin() / q)
    } else {
        let p = (-s).sqrt();
        ((p * a).cosh(), (p * a).sinh() / p)
    }
}

/// Interior representation used for the matching conditions.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Interior {
    /// `P·e^{−p(x+a)} + Q·e^{p(x−a)}`, for strongly evanescent interiors.
    Exponential { p: f64, w: f64 },
    /// `P·C(x) + Q·S(x)` with `C = cos(√s x)`, `S = sin(√s x)/√s`.
    Centered { s: f64, ch: f64, sh: f64 },
}

/// Matching matrix `M(E)` acting on the interior coefficients `(P, Q)`; bound
/// states are the zeros of its determinant. Both representations give
/// determinants of the same sign.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Matching {
    pub k: f64,
    pub interior: Interior,
    pub m: [[f64; 2]; 2],
}

impl Matching {
    pub fn new(pot: &DeltaWellPotential, energy: f64) -> Self {
        let a = pot.a;
        let k = (-energy).sqrt();
        let s = energy + pot.v_c();
        let (gl, gr) = (pot.gamma_l, pot.gamma_r);
        if s < 0.0 && (-s).sqrt() * a > 1.0 {
            let p = (-s).sqrt();
            let w = (-2.0 * p * a).exp();
            let m = [[gl - p - k, w * (gl + p - k)], [w * (gr + p - k), gr - p - k]];
            Matching { k, interior: Interior::Exponential { p, w }, m }
        } else {
            let (ch, sh) = ch_sh(s, a);
            let m = [[s * sh + (gl - k) * ch, ch - (gl - k) * sh], [(gr - k) * ch + s * sh, (gr - k) * sh - ch]];
            Matching { k, interior: Interior::Centered { s, ch, sh }, m }
        }
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Null vector `(P, Q)` taken from the better-conditioned row.
    fn null_vector(&self) -> (f64, f64) {
        let n0 = self.m[0][0].hypot(self.m[0][1]);
        let n1 = self.m[1][0].hypot(self.m[1][1]);
        let r = if n0 >= n1 { self.m[0] } else { self.m[1] };
        (r[1], -r[0])
    }
}

impl BoundState {
    /// State at an energy root of the matching determinant.
    pub(crate) fn from_root(pot: &DeltaWellPotential, energy: f64) -> Self {
        let a = pot.a;
        let mt = Matching::new(pot, energy);
        let k = mt.k;
        let (p_, q_) = mt.null_vector();
        let re = |v: f64| Complex64::new(v, 0.0);
        let (interior, left, right, character) = match mt.interior {
            Interior::Exponential { p, w } => {
                let terms = vec![
                    Term { c: re(p_), z: re(-p), x0: -a },
                    Term { c: re(q_), z: re(p), x0: a },
                ];
                (terms, p_ + q_ * w, p_ * w + q_, InteriorCharacter::Evanescent)
            }
            Interior::Centered { s, ch, sh } => {
                let mut z = if s < 0.0 { Complex64::new((-s).sqrt(), 0.0) } else { Complex64::new(0.0, s.sqrt()) };
                let floor = 1e-9 / a;
                if z.norm() < floor {
                    z = if s < 0.0 { re(floor) } else { Complex64::new(0.0, floor) };
                }
                let qz = q_ / z;
                let terms = vec![
                    Term { c: (re(p_) + qz) * 0.5, z, x0: 0.0 },
                    Term { c: (re(p_) - qz) * 0.5, z: -z, x0: 0.0 },
                ];
                let character = if s > 0.0 { InteriorCharacter::Oscillatory } else { InteriorCharacter::Evanescent };
                (terms, p_ * ch - q_ * sh, p_ * ch + q_ * sh, character)
            }
        };
        let pieces = [
            Piece { lo: f64::NEG_INFINITY, hi: -a, terms: vec![Term { c: re(left), z: re(k), x0: -a }] },
            Piece { lo: -a, hi: a, terms: interior },
            Piece { lo: a, hi: f64::INFINITY, terms: vec![Term { c: re(right), z: re(-k), x0: a }] },
        ];
        let mut st = BoundState { energy, character, a, decay: k, norm_constant: 1.0, pieces };
        let norm = st.overlap(&st).sqrt();
        let mut scale = 1.0 / norm;
        // positive left tail; largest sampled magnitude if the tail underflows
        let tail = st.pieces[0].terms[0].c.re;
        let sign = if tail.abs() > 1e-250 {
            tail
        } else {
            let (mut best, mut at) = (0.0, 0.0);
            for i in 0..=2000 {
                let v = st.value(-a + 2.0 * a * i as f64 / 2000.0);
                if v.abs() > best {
                    best = v.abs();
                    at = v;
                }
            }
            at
        };
        if sign < 0.0 {
            scale = -scale;
        }
        st.rescale(scale);
        st.norm_constant = scale.abs();
        st
    }

    fn rescale(&mut self, f: f64) {
        for p in &mut self.pieces {
            for t in &mut p.terms {
                t.c *= f;
            }
        }
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn character(&self) -> InteriorCharacter {
        self.character
    }

    /// Half-separation of the potential the state belongs to.
    pub fn half_width(&self) -> f64 {
        self.a
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn norm_constant(&self) -> f64 {
        self.norm_constant
    }

    pub fn value(&self, x: f64) -> f64 {
        let piece = if x < -self.a {
            &self.pieces[0]
        } else if x <= self.a {
            &self.pieces[1]
        } else {
            &self.pieces[2]
        };
        piece.terms.iter().map(|t| t.at(x)).sum::<Complex64>().re
    }

    /// `(ψ(−a), ψ(a))` from the exterior pieces.
    pub fn edge_values(&self) -> (f64, f64) {
        (self.pieces[0].terms[0].c.re, self.pieces[2].terms[0].c.re)
    }

    /// `∫_lo^hi x^n ψ_self ψ_other dx` for `n ∈ {0, 1}`; bounds may be infinite.
    pub fn product_integral(&self, other: &BoundState, lo: f64, hi: f64, n: u32) -> f64 {
        debug_assert!((self.a - other.a).abs() <= 1e-12 * self.a);
        let mut total = Complex64::new(0.0, 0.0);
        for (p, q) in self.pieces.iter().zip(&other.pieces) {
            let l = lo.max(p.lo);
            let h = hi.min(p.hi);
            if !(h > l) {
                continue;
            }
            for s in &p.terms {
                for t in &q.terms {
                    total += s.c * t.c * exp_moment(s, t, l, h, n);
                }
            }
        }
        total.re
    }

    pub fn overlap(&self, other: &BoundState) -> f64 {
        self.product_integral(other, f64::NEG_INFINITY, f64::INFINITY, 0)
    }

    /// `∫ψ_self x ψ_other dx`.
    pub fn position(&self, other: &BoundState) -> f64 {
        self.product_integral(other, f64::NEG_INFINITY, f64::INFINITY, 1)
    }

    /// Probability in `[lo, hi]`.
    pub fn probability(&self, lo: f64, hi: f64) -> f64 {
        self.product_integral(self, lo, hi, 0)
    }

    pub(crate) fn negated(&self) -> BoundState {
        let mut s = self.clone();
        s.rescale(-1.0);
        s
    }
}

/// `∫_0^L y^n e^{−w y} dy` for `n ∈ {0, 1}`, `Re w ≥ 0`.
fn moment(w: Complex64, len: f64, n: u32) -> Complex64 {
    if len.is_infinite() {
        return if n == 0 { 1.0 / w } else { 1.0 / (w * w) };
    }
    let u = w * len;
    if u.norm() < 0.5 {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut t = Complex64::new(1.0, 0.0);
        for m in 0..24 {
            sum += t / (m as f64 + 1.0 + n as f64);
            t *= -u / (m as f64 + 1.0);
        }
        sum * len.powi(n as i32 + 1)
    } else {
        let e = (-u).exp();
        if n == 0 {
            (1.0 - e) / w
        } else {
            (1.0 - e * (1.0 + u)) / (w * w)
        }
    }
}

/// `∫_l^h x^n e^{z₁(x−x₁) + z₂(x−x₂)} dx`, factored at the end where the
/// exponent is largest.
fn exp_moment(s: &Term, t: &Term, l: f64, h: f64, n: u32) -> Complex64 {
    let z = s.z + t.z;
    let shift = s.z * s.x0 + t.z * t.x0;
    let len = h - l;
    if z.re >= 0.0 {
        let pre = (z * h - shift).exp();
        let i0 = moment(z, len, 0);
        if n == 0 {
            pre * i0
        } else {
            pre * (h * i0 - moment(z, len, 1))
        }
    } else {
        let pre = (z * l - shift).exp();
        let i0 = moment(-z, len, 0);
        if n == 0 {
            pre * i0
        } else {
            pre * (l * i0 + moment(-z, len, 1))
        }
    }
}
