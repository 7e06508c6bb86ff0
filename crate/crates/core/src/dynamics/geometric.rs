//! Time-free propagation along a parameter-space curve: the path-ordered
//! product of two-level rotations, the rotation angle `Γ = i∮f·dλ` and its
//! surface form.

use num_complex::Complex64;

use super::evolve::{Diagnostics, EvolutionRecord, FrameKind};
use super::frames::{apply_signs, local_frame, track_local, GaugeTrack};
use super::path::{Curve, ParamPath};
use super::DynamicsOptions;
use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre, gauss_legendre_on, integrate};
use crate::par;
use crate::spectrum::{EigenFrame, HamiltonianModel, RoleMap};
use nalgebra::DVector;

use super::effective::effective_coupling;

fn field_at<M: HamiltonianModel>(
    model: &M,
    lambda: &[f64],
    reference: &EigenFrame<M::State>,
    amplitude: f64,
    opts: &DynamicsOptions,
) -> Result<(Vec<Complex64>, EigenFrame<M::State>)> {
    let local = local_frame(model, lambda, Some(reference), &opts.spectrum)?;
    let e = DVector::from_column_slice(local.energies());
    let roles: &RoleMap = model.roles();
    let f = local
        .couplings
        .entries
        .iter()
        .map(|t| effective_coupling(&e, &local.drive, t, roles, amplitude))
        .collect();
    Ok((f, local.frame))
}

fn dot(f: &[Complex64], v: &[f64]) -> Complex64 {
    f.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Segment-count control for the path-ordered product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentControl {
    /// Starting number of segments per traversal.
    pub segments: usize,
    /// Accepted change of the final state when the segment count doubles.
    pub tolerance: f64,
    pub max_doublings: u32,
}

impl Default for SegmentControl {
    fn default() -> Self {
        Self { segments: 64, tolerance: 1e-8, max_doublings: 8 }
    }
}

/// `exp(−i[[0, z], [z*, 0]])`.
fn rotation(z: Complex64) -> [[Complex64; 2]; 2] {
    let r = z.norm();
    let c = Complex64::new(r.cos(), 0.0);
    let s = if r == 0.0 { 1.0 } else { r.sin() / r };
    let mi = Complex64::new(0.0, -s);
    [[c, mi * z], [mi * z.conj(), c]]
}

fn apply(u: &[[Complex64; 2]; 2], a: [Complex64; 2]) -> [Complex64; 2] {
    [u[0][0] * a[0] + u[0][1] * a[1], u[1][0] * a[0] + u[1][1] * a[1]]
}

/// Integrated generator `∫ f·dλ` over each of `n` equal segments of the curve,
/// by 4-point Gauss–Legendre, for one gauge parity.
fn segment_generators<M: HamiltonianModel>(
    model: &M,
    curve: &Curve,
    track: &GaugeTrack<M::State>,
    parity: usize,
    amplitude: f64,
    n: usize,
    opts: &DynamicsOptions,
) -> Result<Vec<Complex64>> {
    let (x, w) = gauss_legendre(4);
    par::try_map_range(opts.exec, n, |k| {
        let (a, b) = (k as f64 / n as f64, (k + 1) as f64 / n as f64);
        let half = 0.5 * (b - a);
        let mut z = Complex64::new(0.0, 0.0);
        for (xi, wi) in x.iter().zip(&w) {
            let u = 0.5 * (a + b) + half * xi;
            let mut reference = track.reference(u).clone();
            if parity == 1 {
                reference = apply_signs(model, &reference, track.holonomy());
            }
            let (f, _) = field_at(model, &curve.point(u), &reference, amplitude, opts)?;
            z += dot(&f, &curve.tangent(u)) * (wi * half);
        }
        Ok(z)
    })
}

fn propagate(generators: &[Vec<Complex64>], cycles: usize, psi0: [Complex64; 2]) -> Vec<[Complex64; 2]> {
    let mut out = vec![psi0];
    let mut a = psi0;
    for c in 0..cycles {
        for z in &generators[c % generators.len()] {
            a = apply(&rotation(*z), a);
            out.push(a);
        }
    }
    out
}

/// Path-ordered propagation of `(a₀, a₂)` along every cycle of `path`.
///
/// Only the curve enters: the period and timing of `path` are ignored, so the
/// result is identical under any reparameterization of time.
pub fn evolve_geometric<M: HamiltonianModel>(
    model: &M,
    path: &ParamPath,
    amplitude: f64,
    psi0: [Complex64; 2],
    ctrl: &SegmentControl,
    opts: &DynamicsOptions,
) -> Result<EvolutionRecord> {
    let norm = psi0[0].norm_sqr() + psi0[1].norm_sqr();
    if !((norm - 1.0).abs() <= 1e-9) {
        return Err(Error::InvalidInput(format!("initial state is not normalized (norm² = {norm})")));
    }
    if ctrl.segments == 0 {
        return Err(Error::InvalidInput("segment count must be positive".into()));
    }
    let curve = path.curve();
    let track = GaugeTrack::build(model, curve, opts)?;
    let parities = if track.is_trivial() { 1 } else { 2 };
    let pieces = curve.breakpoints().len().saturating_sub(1).max(1);
    let mut n = if pieces <= 64 { ctrl.segments.div_ceil(pieces) * pieces } else { ctrl.segments };

    let build = |n: usize| -> Result<Vec<Vec<Complex64>>> {
        (0..parities).map(|p| segment_generators(model, curve, &track, p, amplitude, n, opts)).collect()
    };
    let mut coarse = build(n)?;
    let mut doublings = 0;
    let (generators, n) = loop {
        let fine = build(2 * n)?;
        let a = *propagate(&coarse, path.cycles(), psi0).last().expect("non-empty");
        let b = *propagate(&fine, path.cycles(), psi0).last().expect("non-empty");
        let diff = (a[0] - b[0]).norm().max((a[1] - b[1]).norm());
        if diff <= ctrl.tolerance {
            break (fine, 2 * n);
        }
        doublings += 1;
        if doublings > ctrl.max_doublings {
            return Err(Error::NotConverged(format!(
                "path-ordered product still changes by {diff:.3e} with {} segments",
                2 * n
            )));
        }
        n *= 2;
        coarse = fine;
    };

    let states = propagate(&generators, path.cycles(), psi0);
    let mut gamma = 0.0;
    let mut rec = EvolutionRecord {
        times: Vec::with_capacity(states.len()),
        amplitudes: Vec::with_capacity(states.len()),
        populations: Vec::with_capacity(states.len()),
        rotating: Vec::with_capacity(states.len()),
        gamma_accumulated: Vec::with_capacity(states.len()),
        frame: FrameKind::Rotating,
        diagnostics: Diagnostics { step: 1.0 / n as f64, steps: n * path.cycles(), halvings: doublings, ..Default::default() },
    };
    for (k, a) in states.iter().enumerate() {
        if k > 0 {
            let c = (k - 1) / n;
            let z = generators[c % generators.len()][(k - 1) % n];
            gamma += (Complex64::i() * z).re;
        }
        let pops = vec![a[0].norm_sqr(), a[1].norm_sqr()];
        rec.diagnostics.max_norm_defect = rec.diagnostics.max_norm_defect.max((pops[0] + pops[1] - 1.0).abs());
        rec.times.push(k as f64 / n as f64);
        rec.amplitudes.push(a.to_vec());
        rec.populations.push(pops);
        rec.rotating.push(*a);
        rec.gamma_accumulated.push(gamma);
    }
    Ok(rec)
}

/// Rotation angle with quadrature details.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaLine {
    pub gamma: f64,
    pub error: f64,
    /// `max|Re(f·λ′)| / max|f·λ′|` over quadrature nodes; zero when `i f` is real.
    pub realness_residual: f64,
    pub evaluations: usize,
}

/// `Γ = i∫ f·dλ` over one traversal of `curve`, gauge chained from the
/// canonical frame at the curve start.
pub fn gamma_line_detail<M: HamiltonianModel>(
    model: &M,
    curve: &Curve,
    amplitude: f64,
    opts: &DynamicsOptions,
) -> Result<GammaLine> {
    curve.validate()?;
    let track = GaugeTrack::build(model, curve, opts)?;
    gamma_line_on(model, curve, &track, amplitude, opts)
}

fn gamma_line_on<M: HamiltonianModel>(
    model: &M,
    curve: &Curve,
    track: &GaugeTrack<M::State>,
    amplitude: f64,
    opts: &DynamicsOptions,
) -> Result<GammaLine> {
    let mut failure: Option<Error> = None;
    let mut max_re: f64 = 0.0;
    let mut max_abs: f64 = 0.0;
    let mut integrand = |u: f64| -> f64 {
        if failure.is_some() {
            return 0.0;
        }
        match field_at(model, &curve.point(u), track.reference(u), amplitude, opts) {
            Ok((f, _)) => {
                let z = dot(&f, &curve.tangent(u));
                max_re = max_re.max(z.re.abs());
                max_abs = max_abs.max(z.norm());
                (Complex64::i() * z).re
            }
            Err(e) => {
                failure = Some(e);
                0.0
            }
        }
    };
    let b = curve.breakpoints();
    let mut gamma = 0.0;
    let mut error = 0.0;
    let mut evaluations = 0;
    for w in b.windows(2) {
        let q = integrate(&mut integrand, w[0], w[1], opts.quad_abs_tol, opts.quad_rel_tol)?;
        gamma += q.value;
        error += q.error;
        evaluations += q.evaluations;
    }
    if let Some(e) = failure {
        return Err(e);
    }
    let realness_residual = if max_abs > 0.0 { max_re / max_abs } else { 0.0 };
    if realness_residual > 1e-6 {
        return Err(Error::NotReal { residual: realness_residual, marginal: realness_residual <= 1e-3 });
    }
    Ok(GammaLine { gamma, error, realness_residual, evaluations })
}

/// Rotation angle of one traversal of the path's curve.
pub fn gamma_line<M: HamiltonianModel>(model: &M, path: &ParamPath, amplitude: f64, opts: &DynamicsOptions) -> Result<f64> {
    Ok(gamma_line_detail(model, path.curve(), amplitude, opts)?.gamma)
}

/// A two-parameter region whose boundary is the closed loop of interest.
#[derive(Debug, Clone)]
pub enum SurfacePatch {
    /// Region swept by the segments from `center` to the closed `boundary`.
    Star { boundary: Curve, center: Vec<f64> },
    /// `{center + r(cos φ, sin φ) : inner ≤ r ≤ outer, start ≤ φ ≤ start + sweep}`.
    AnnularSector { center: Vec<f64>, inner: f64, outer: f64, start: f64, sweep: f64 },
}

impl SurfacePatch {
    /// Point and signed Jacobian at unit-square coordinates `(s, t)`.
    fn map(&self, s: f64, t: f64) -> (Vec<f64>, f64) {
        match self {
            SurfacePatch::Star { boundary, center } => {
                let c = boundary.point(t);
                let d = boundary.tangent(t);
                let p = center.iter().zip(&c).map(|(m, x)| m + s * (x - m)).collect();
                let jac = s * ((c[0] - center[0]) * d[1] - (c[1] - center[1]) * d[0]);
                (p, jac)
            }
            SurfacePatch::AnnularSector { center, inner, outer, start, sweep } => {
                let r = inner + s * (outer - inner);
                let phi = start + t * sweep;
                (vec![center[0] + r * phi.cos(), center[1] + r * phi.sin()], (outer - inner) * r * sweep)
            }
        }
    }

    /// The boundary loop, oriented consistently with the surface integral and
    /// starting where the surface gauge chain starts.
    pub fn boundary(&self) -> Curve {
        match self {
            SurfacePatch::Star { boundary, .. } => boundary.clone(),
            SurfacePatch::AnnularSector { center, inner, outer, start, sweep } => {
                let at = |r: f64, phi: f64| vec![center[0] + r * phi.cos(), center[1] + r * phi.sin()];
                let end = start + sweep;
                Curve::Chain(vec![
                    Curve::Line { from: at(*inner, *start), to: at(*outer, *start) },
                    Curve::Arc { center: center.clone(), axes: (0, 1), radius: *outer, start: *start, sweep: *sweep },
                    Curve::Line { from: at(*outer, end), to: at(*inner, end) },
                    Curve::Arc { center: center.clone(), axes: (0, 1), radius: *inner, start: end, sweep: -sweep },
                ])
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SurfacePatch::Star { boundary, center } => {
                boundary.validate()?;
                if boundary.dimension() != 2 || center.len() != 2 {
                    return Err(Error::InvalidInput("surface patches live in a two-parameter plane".into()));
                }
                if !boundary.is_closed() {
                    return Err(Error::InvalidInput("surface boundary must be closed".into()));
                }
                Ok(())
            }
            SurfacePatch::AnnularSector { center, inner, outer, start, sweep } => {
                if center.len() != 2 || ![*inner, *outer, *start, *sweep].iter().all(|v| v.is_finite()) {
                    return Err(Error::InvalidInput("annular sector needs a 2D center and finite extents".into()));
                }
                if !(*inner >= 0.0 && outer >= inner) {
                    return Err(Error::InvalidInput("annular sector radii must satisfy 0 ≤ inner ≤ outer".into()));
                }
                Ok(())
            }
        }
    }
}

/// Quadrature grid for [`gamma_surface`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceControl {
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    /// Curl difference step relative to the patch extent.
    pub curl_step: f64,
}

impl Default for SurfaceControl {
    fn default() -> Self {
        Self { radial_nodes: 24, angular_nodes: 64, curl_step: 1e-3 }
    }
}

/// Chain points: every node in `nodes` plus a fine uniform grid, sorted; returns
/// the points' parameters and the positions of the nodes among them.
fn chain_params(nodes: &[f64], fine: usize) -> (Vec<f64>, Vec<usize>) {
    let mut all: Vec<(f64, Option<usize>)> = (0..=fine).map(|i| (i as f64 / fine as f64, None)).collect();
    all.extend(nodes.iter().enumerate().map(|(k, &x)| (x, Some(k))));
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut pos = vec![0; nodes.len()];
    for (i, (_, k)) in all.iter().enumerate() {
        if let Some(k) = k {
            pos[*k] = i;
        }
    }
    (all.into_iter().map(|x| x.0).collect(), pos)
}

/// `Γ` as the integral of `∂_μ g_ν − ∂_ν g_μ`, `g = Re(i f)`, over the patch.
///
/// Frames are chained from the boundary's start point, so the result is
/// consistent with [`gamma_line`] on [`SurfacePatch::boundary`]. A loop around
/// a level crossing (detected by a sign change of a tracked state around the
/// boundary) is rejected.
pub fn gamma_surface<M: HamiltonianModel>(
    model: &M,
    patch: &SurfacePatch,
    amplitude: f64,
    ctrl: &SurfaceControl,
    opts: &DynamicsOptions,
) -> Result<f64> {
    patch.validate()?;
    if model.param_names().len() != 2 {
        return Err(Error::InvalidInput("surface integrals need a two-parameter model".into()));
    }
    let boundary = patch.boundary();
    let probe: Vec<Vec<f64>> = (0..=128).map(|k| boundary.point(k as f64 / 128.0)).collect();
    let extent: Vec<f64> = (0..2)
        .map(|m| {
            let lo = probe.iter().map(|p| p[m]).fold(f64::INFINITY, f64::min);
            let hi = probe.iter().map(|p| p[m]).fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        })
        .collect();
    if extent.contains(&0.0) {
        return Ok(0.0);
    }
    let ring = GaugeTrack::build(model, &boundary, opts)?;
    let roles = model.roles();
    let mut tracked = vec![roles.state0, roles.state2];
    tracked.extend(&roles.auxiliary);
    if tracked.iter().any(|&j| ring.holonomy()[j] < 0.0) {
        return Err(Error::Model(
            "the loop encloses a level crossing; the surface integrand is singular inside".into(),
        ));
    }
    let start = ring.start().clone();

    let (sx, sw) = gauss_legendre_on(ctrl.radial_nodes, 0.0, 1.0);
    let (tx, tw) = gauss_legendre_on(ctrl.angular_nodes, 0.0, 1.0);
    let fine = 32;
    let (ray_s, ray_pos) = chain_params(&sx, fine);

    // Frame at the origin of each ray, chained from the loop start.
    let origins: Vec<EigenFrame<M::State>> = match patch {
        SurfacePatch::Star { center, .. } => {
            let p0 = boundary.point(0.0);
            let route: Vec<Vec<f64>> = (0..=fine)
                .map(|i| {
                    let a = i as f64 / fine as f64;
                    p0.iter().zip(center).map(|(x, c)| x + a * (c - x)).collect()
                })
                .collect();
            let frames = crate::spectrum::track(model, &route, Some(&start), opts.exec, &opts.spectrum)?;
            vec![frames.last().expect("non-empty").clone(); tx.len()]
        }
        SurfacePatch::AnnularSector { .. } => {
            let (arc_t, arc_pos) = chain_params(&tx, 4 * fine);
            let route: Vec<Vec<f64>> = arc_t.iter().map(|&t| patch.map(0.0, t).0).collect();
            let frames = crate::spectrum::track(model, &route, Some(&start), opts.exec, &opts.spectrum)?;
            arc_pos.iter().map(|&i| frames[i].clone()).collect()
        }
    };

    let h: Vec<f64> = extent.iter().map(|e| ctrl.curl_step * e).collect();
    let g_at = |lambda: &[f64], reference: &EigenFrame<M::State>| -> Result<[f64; 2]> {
        let (f, _) = field_at(model, lambda, reference, amplitude, opts)?;
        Ok([(Complex64::i() * f[0]).re, (Complex64::i() * f[1]).re])
    };
    let rays = par::try_map_range(opts.exec, tx.len(), |j| -> Result<f64> {
        let t = tx[j];
        let points: Vec<Vec<f64>> = ray_s.iter().map(|&s| patch.map(s, t).0).collect();
        let serial = DynamicsOptions { exec: par::Exec::Sequential, ..*opts };
        let frames = track_local(model, &points, Some(&origins[j]), &serial)?;
        let mut sum = 0.0;
        for (i, &s) in sx.iter().enumerate() {
            let node = &frames[ray_pos[i]].frame;
            let (lambda, jac) = patch.map(s, t);
            let shifted = |m: usize, sign: f64| {
                let mut p = lambda.clone();
                p[m] += sign * h[m];
                p
            };
            let gxp = g_at(&shifted(0, 1.0), node)?;
            let gxm = g_at(&shifted(0, -1.0), node)?;
            let gyp = g_at(&shifted(1, 1.0), node)?;
            let gym = g_at(&shifted(1, -1.0), node)?;
            let curl = (gxp[1] - gxm[1]) / (2.0 * h[0]) - (gyp[0] - gym[0]) / (2.0 * h[1]);
            sum += sw[i] * curl * jac;
        }
        Ok(tw[j] * sum)
    })?;
    Ok(rays.iter().sum())
}
