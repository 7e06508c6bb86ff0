//! Eigenframes along a curve: gauge tracking, holonomy, and interpolated
//! frame data for the time integrators.

use nalgebra::{DMatrix, DVector};

use super::path::Curve;
use super::DynamicsOptions;
use crate::error::{Error, Result};
use crate::numerics::{Boundary, CubicSpline};
use crate::par;
use crate::spectrum::{self, CouplingTensor, EigenFrame, HamiltonianModel, SpectrumOptions};

/// Frame, drive matrix (per unit amplitude) and couplings at one point.
#[derive(Debug, Clone)]
pub struct LocalFrame<S> {
    pub frame: EigenFrame<S>,
    pub drive: DMatrix<f64>,
    pub couplings: CouplingTensor,
}

impl<S> LocalFrame<S> {
    pub fn energies(&self) -> &[f64] {
        &self.frame.energies
    }

    /// `⟨Φ_i|Φ̇_j⟩` for a parameter velocity.
    pub fn motion(&self, velocity: &[f64]) -> DMatrix<f64> {
        self.couplings.contract(velocity)
    }
}

pub fn local_frame<M: HamiltonianModel>(
    model: &M,
    lambda: &[f64],
    reference: Option<&EigenFrame<M::State>>,
    opts: &SpectrumOptions,
) -> Result<LocalFrame<M::State>> {
    let frame = spectrum::eigenframe(model, lambda, reference, opts)?;
    complete(model, frame, opts)
}

fn complete<M: HamiltonianModel>(model: &M, frame: EigenFrame<M::State>, opts: &SpectrumOptions) -> Result<LocalFrame<M::State>> {
    let couplings = spectrum::couplings(model, &frame, opts)?;
    let drive = model.drive_matrix(&frame.lambda, &frame.states);
    Ok(LocalFrame { frame, drive, couplings })
}

/// Local frames at a chain of nearby points, gauge-continuous from `start`.
pub fn track_local<M: HamiltonianModel>(
    model: &M,
    points: &[Vec<f64>],
    start: Option<&EigenFrame<M::State>>,
    opts: &DynamicsOptions,
) -> Result<Vec<LocalFrame<M::State>>> {
    let frames = spectrum::track(model, points, start, opts.exec, &opts.spectrum)?;
    let done = par::try_map_range(opts.exec, frames.len(), |k| complete(model, frames[k].clone(), &opts.spectrum))?;
    Ok(done)
}

/// Maps padding knots outside `[0, 1]` back onto the curve.
fn wrap(u: f64, closed: bool) -> f64 {
    if (0.0..=1.0).contains(&u) {
        u
    } else if closed {
        u.rem_euclid(1.0)
    } else {
        u.clamp(0.0, 1.0)
    }
}

/// Gauge-fixed frames at uniform curve parameters, chained from the canonical
/// frame at the start of the curve.
#[derive(Debug, Clone)]
pub struct GaugeTrack<S> {
    frames: Vec<EigenFrame<S>>,
    closed: bool,
    holonomy: Vec<f64>,
}

impl<S: Clone + Send + Sync> GaugeTrack<S> {
    pub fn build<M: HamiltonianModel<State = S>>(model: &M, curve: &Curve, opts: &DynamicsOptions) -> Result<Self> {
        let k = opts.frames_per_cycle.max(8);
        let points: Vec<Vec<f64>> = (0..=k).map(|i| curve.point(i as f64 / k as f64)).collect();
        let frames = spectrum::track(model, &points, None, opts.exec, &opts.spectrum)?;
        let closed = curve.is_closed();
        let holonomy = if closed { holonomy_signs(model, &frames[0], &frames[k])? } else { vec![1.0; model.dimension()] };
        Ok(Self { frames, closed, holonomy })
    }

    pub fn frames(&self) -> &[EigenFrame<S>] {
        &self.frames
    }

    pub fn start(&self) -> &EigenFrame<S> {
        &self.frames[0]
    }

    /// Sign picked up by each tracked state after one traversal of a closed curve.
    pub fn holonomy(&self) -> &[f64] {
        &self.holonomy
    }

    pub fn is_trivial(&self) -> bool {
        self.holonomy.iter().all(|&s| s > 0.0)
    }

    /// Nearest tracked frame, for gauge-fixing a frame at curve parameter `u ∈ [0, 1]`.
    pub fn reference(&self, u: f64) -> &EigenFrame<S> {
        let k = self.frames.len() - 1;
        let i = (u.clamp(0.0, 1.0) * k as f64).round() as usize;
        &self.frames[i.min(k)]
    }

    pub fn closed(&self) -> bool {
        self.closed
    }
}

fn holonomy_signs<M: HamiltonianModel>(model: &M, first: &EigenFrame<M::State>, last: &EigenFrame<M::State>) -> Result<Vec<f64>> {
    let o = model.overlap_matrix(&first.states, &last.states);
    (0..o.nrows())
        .map(|j| {
            let v = o[(j, j)];
            if v.abs() < 0.5 {
                Err(Error::Model(format!(
                    "state {j} does not return to itself around the closed path (overlap {v:.3})"
                )))
            } else {
                Ok(v.signum())
            }
        })
        .collect()
}

/// Flips the states with negative `signs`.
pub fn apply_signs<M: HamiltonianModel>(model: &M, frame: &EigenFrame<M::State>, signs: &[f64]) -> EigenFrame<M::State> {
    let states = frame
        .states
        .iter()
        .zip(signs)
        .map(|(s, &g)| if g < 0.0 { model.negate(s) } else { s.clone() })
        .collect();
    EigenFrame { lambda: frame.lambda.clone(), energies: frame.energies.clone(), states }
}

/// Interpolated frame data at one curve parameter.
#[derive(Debug, Clone)]
pub struct FrameData {
    pub energies: DVector<f64>,
    /// Drive matrix per unit amplitude.
    pub drive: DMatrix<f64>,
    /// `Σ_μ ⟨Φ_i|∂_μ Φ_j⟩ dλ_μ/du`; the motion matrix is this times `du/dt`.
    pub geometric: DMatrix<f64>,
}

impl FrameData {
    pub fn zeros(n: usize) -> Self {
        Self { energies: DVector::zeros(n), drive: DMatrix::zeros(n, n), geometric: DMatrix::zeros(n, n) }
    }

    fn from_local<S>(local: &LocalFrame<S>, tangent: &[f64]) -> Self {
        Self {
            energies: DVector::from_column_slice(&local.frame.energies),
            drive: local.drive.clone(),
            geometric: local.couplings.contract(tangent),
        }
    }

    fn row(&self) -> Vec<f64> {
        let mut r = self.energies.as_slice().to_vec();
        r.extend_from_slice(self.drive.as_slice());
        r.extend_from_slice(self.geometric.as_slice());
        r
    }

    fn fill(&mut self, buf: &[f64]) {
        let n = self.energies.len();
        self.energies.as_mut_slice().copy_from_slice(&buf[..n]);
        self.drive.as_mut_slice().copy_from_slice(&buf[n..n + n * n]);
        self.geometric.as_mut_slice().copy_from_slice(&buf[n + n * n..]);
    }
}

/// Frames along a curve together with cubic-spline interpolants of the frame
/// data in the curve parameter.
///
/// For a closed curve whose states change sign around the loop, the second
/// traversal sees sign-flipped frames; a second interpolant holds that data
/// and traversals alternate between the two.
#[derive(Debug, Clone)]
pub struct FrameTrack<S> {
    gauge: GaugeTrack<S>,
    splines: Vec<CubicSpline>,
    dimension: usize,
}

impl<S: Clone + Send + Sync> FrameTrack<S> {
    pub fn build<M: HamiltonianModel<State = S>>(model: &M, curve: &Curve, opts: &DynamicsOptions) -> Result<Self> {
        let k = opts.frames_per_cycle.max(8) as i64;
        let closed = curve.is_closed();
        let pad: i64 = if closed { 4 } else { 0 };
        let u_of = |i: i64| i as f64 / k as f64;
        let forward: Vec<Vec<f64>> = (0..=k + pad).map(|i| curve.point(wrap(u_of(i), closed))).collect();
        let fwd = track_local(model, &forward, None, opts)?;
        let mut locals: Vec<LocalFrame<S>> = Vec::new();
        if pad > 0 {
            let backward: Vec<Vec<f64>> = (1..=pad).map(|i| curve.point(wrap(u_of(-i), closed))).collect();
            let mut bwd = track_local(model, &backward, Some(&fwd[0].frame), opts)?;
            bwd.reverse();
            locals.extend(bwd);
        }
        locals.extend(fwd);
        let knots: Vec<f64> = (-pad..=k + pad).map(u_of).collect();
        let tangents: Vec<Vec<f64>> = knots.iter().map(|&u| curve.tangent(wrap(u, closed))).collect();

        let n = model.dimension();
        let base = (pad as usize)..=((pad + k) as usize);
        let frames: Vec<EigenFrame<S>> = locals[base.clone()].iter().map(|l| l.frame.clone()).collect();
        let holonomy = if closed {
            holonomy_signs(model, &frames[0], &frames[k as usize])?
        } else {
            vec![1.0; n]
        };
        let gauge = GaugeTrack { frames, closed, holonomy: holonomy.clone() };

        let rows: Vec<Vec<f64>> = locals.iter().zip(&tangents).map(|(l, t)| FrameData::from_local(l, t).row()).collect();
        let mut splines = vec![CubicSpline::new(knots.clone(), &rows, Boundary::Natural)?];
        if !gauge.is_trivial() {
            let flipped: Vec<Vec<f64>> = locals
                .iter()
                .zip(&tangents)
                .map(|(l, t)| {
                    let frame = apply_signs(model, &l.frame, &holonomy);
                    let drive = model.drive_matrix(&frame.lambda, &frame.states);
                    let mut couplings = l.couplings.clone();
                    for m in &mut couplings.entries {
                        for i in 0..n {
                            for j in 0..n {
                                m[(i, j)] *= holonomy[i] * holonomy[j];
                            }
                        }
                    }
                    FrameData::from_local(&LocalFrame { frame, drive, couplings }, t).row()
                })
                .collect();
            splines.push(CubicSpline::new(knots, &flipped, Boundary::Natural)?);
        }
        Ok(Self { gauge, splines, dimension: n })
    }

    pub fn gauge(&self) -> &GaugeTrack<S> {
        &self.gauge
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of distinct traversal data sets (1, or 2 with a sign-changing loop).
    pub fn parities(&self) -> usize {
        self.splines.len()
    }

    /// Frame data at curve parameter `u` during traversal number `cycle`.
    pub fn data_into(&self, u: f64, cycle: usize, buf: &mut Vec<f64>, out: &mut FrameData) {
        let s = &self.splines[cycle % self.splines.len()];
        buf.resize(s.width(), 0.0);
        s.eval_into(u, buf);
        out.fill(buf);
    }

    pub fn data(&self, u: f64, cycle: usize) -> FrameData {
        let mut out = FrameData::zeros(self.dimension);
        let mut buf = Vec::new();
        self.data_into(u, cycle, &mut buf, &mut out);
        out
    }
}
