//! Time integration of the driven problem in the instantaneous eigenbasis and
//! of the two-level rotating-frame equations.
//!
//! The full equations `i ċ = [E + 2F cos θ·D − iC] c` are integrated in the
//! interaction picture `c_j = d_j e^{−iφ_j}`, `φ̇_j = E_j`, so the large
//! diagonal never enters a Runge–Kutta stage. The drive phase `θ` and the
//! rotation angle `Γ` are carried as extra ODE components.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::diagnostics::snapshot_ratios;
use super::effective::{effective_coupling, stark_from, DriveSchedule, OmegaRule, StarkRule};
use super::frames::{FrameData, FrameTrack};
use super::path::ParamPath;
use super::DynamicsOptions;
use crate::error::{Error, Result};
use crate::spectrum::{HamiltonianModel, RoleMap};

/// Fixed-step RK4 settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    /// Steps per period of the fastest oscillation in the problem (at least 40).
    pub steps_per_period: usize,
    /// How many times the step may be halved before giving up.
    pub max_halvings: u32,
    /// Largest accepted amplitude change between a step and its half over the
    /// first cycle.
    pub tolerance: f64,
    /// Recorded samples per cycle.
    pub samples_per_cycle: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { steps_per_period: 40, max_halvings: 8, tolerance: 1e-6, samples_per_cycle: 200 }
    }
}

impl StepControl {
    fn validate(&self) -> Result<()> {
        if self.steps_per_period < 40 {
            return Err(Error::InvalidInput("at least 40 steps per fastest period are required".into()));
        }
        if !(self.tolerance > 0.0) || self.samples_per_cycle == 0 {
            return Err(Error::InvalidInput("step tolerance and sample count must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    /// Instantaneous-eigenbasis amplitudes `c_j`.
    Lab,
    /// `(a₀, a₂)` with `a₂ = e^{iθ} c₂` relative to state 0.
    Rotating,
}

/// Integrator bookkeeping and validity measures seen along the run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    /// Largest `|⟨Φ_j|Φ̇_a⟩/(E_a − E_j)|`.
    pub max_nonadiabatic: f64,
    /// Largest `|F·D_aj/(|E_a − E_j| − ω)|`.
    pub max_offresonance: f64,
    pub max_norm_defect: f64,
    /// Accepted step (or segment count for the geometric propagator).
    pub step: f64,
    pub steps: usize,
    pub halvings: u32,
}

#[derive(Debug, Clone)]
pub struct EvolutionRecord {
    /// Sample times; for the geometric propagator, traversed cycles.
    pub times: Vec<f64>,
    pub amplitudes: Vec<Vec<Complex64>>,
    pub populations: Vec<Vec<f64>>,
    /// Rotating-frame pair `(a₀, a₂)` at every sample.
    pub rotating: Vec<[Complex64; 2]>,
    pub gamma_accumulated: Vec<f64>,
    pub frame: FrameKind,
    pub diagnostics: Diagnostics,
}

impl EvolutionRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_populations(&self) -> &[f64] {
        self.populations.last().map_or(&[], |p| p.as_slice())
    }

    /// `(|a₀|², |a₂|²)` at every sample.
    pub fn rotating_populations(&self) -> Vec<[f64; 2]> {
        self.rotating.iter().map(|a| [a[0].norm_sqr(), a[1].norm_sqr()]).collect()
    }

    pub fn final_gamma(&self) -> f64 {
        self.gamma_accumulated.last().copied().unwrap_or(0.0)
    }

    pub fn max_norm_defect(&self) -> f64 {
        self.populations
            .iter()
            .map(|p| (p.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

fn check_state(psi: &[Complex64], n: usize) -> Result<()> {
    if psi.len() != n {
        return Err(Error::InvalidInput(format!("initial state has {} components, expected {n}", psi.len())));
    }
    let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
    if !((norm - 1.0).abs() <= 1e-9) {
        return Err(Error::InvalidInput(format!("initial state is not normalized (norm² = {norm})")));
    }
    Ok(())
}

/// One classical RK4 step of `y' = rhs(s, y)`.
fn rk4_step<F>(rhs: &mut F, s: f64, h: f64, y: &mut [f64], work: &mut [Vec<f64>; 5]) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let m = y.len();
    let [k1, k2, k3, k4, tmp] = work;
    rhs(s, y, k1)?;
    for i in 0..m {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    rhs(s + 0.5 * h, tmp, k2)?;
    for i in 0..m {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    rhs(s + 0.5 * h, tmp, k3)?;
    for i in 0..m {
        tmp[i] = y[i] + h * k3[i];
    }
    rhs(s + h, tmp, k4)?;
    for i in 0..m {
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(())
}

/// Integrates one cycle of length `period` with `steps` steps, calling
/// `observe(step_index, y)` after every step.
fn run_cycle<F, O>(rhs: &mut F, y: &mut [f64], period: f64, steps: usize, mut observe: O) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    O: FnMut(usize, &[f64]),
{
    let m = y.len();
    let mut work = [vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]];
    let h = period / steps as f64;
    for i in 0..steps {
        rk4_step(rhs, i as f64 * h, h, y, &mut work)?;
        observe(i + 1, y);
    }
    Ok(())
}

/// Doubles the step count until a cycle and its halved-step rerun agree on
/// the first `compare` components.
fn settle<F>(mut first_cycle: F, base: usize, compare: usize, ctrl: &StepControl) -> Result<(usize, u32)>
where
    F: FnMut(usize) -> Result<Vec<f64>>,
{
    let mut n = base.max(1);
    let mut coarse = first_cycle(n)?;
    let mut last = f64::INFINITY;
    for halvings in 0..=ctrl.max_halvings {
        let fine = first_cycle(2 * n)?;
        let diff = coarse[..compare].iter().zip(&fine[..compare]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if diff <= ctrl.tolerance {
            return Ok((2 * n, halvings));
        }
        last = diff;
        n *= 2;
        coarse = fine;
    }
    Err(Error::StepUnderflow { halvings: ctrl.max_halvings, difference: last })
}

fn sample_stride(steps: usize, ctrl: &StepControl) -> usize {
    (steps / ctrl.samples_per_cycle).max(1)
}

/// Shared per-stage evaluation of interpolated frame data.
struct Stage<'a, S> {
    track: &'a FrameTrack<S>,
    path: &'a ParamPath,
    roles: &'a RoleMap,
    drive: DriveSchedule,
    buf: Vec<f64>,
    data: FrameData,
    motion: DMatrix<f64>,
}

impl<'a, S: Clone + Send + Sync> Stage<'a, S> {
    fn new(track: &'a FrameTrack<S>, path: &'a ParamPath, roles: &'a RoleMap, drive: DriveSchedule) -> Self {
        let n = track.dimension();
        Self { track, path, roles, drive, buf: Vec::new(), data: FrameData::zeros(n), motion: DMatrix::zeros(n, n) }
    }

    /// Loads data at local time `s` within traversal `cycle`; returns `ω`.
    fn load(&mut self, cycle: usize, s: f64) -> Result<f64> {
        let tau = s / self.path.period();
        let timing = self.path.timing();
        let u = timing.u(tau);
        let du_dt = timing.du_dtau(tau) / self.path.period();
        self.track.data_into(u, cycle, &mut self.buf, &mut self.data);
        self.motion.copy_from(&self.data.geometric);
        self.motion *= du_dt;
        self.drive.omega(&self.data.energies, &self.data.drive, &self.motion, self.roles)
    }

    fn kappa(&self) -> Complex64 {
        effective_coupling(&self.data.energies, &self.data.drive, &self.motion, self.roles, self.drive.amplitude)
    }

    fn stark_rule(&self) -> StarkRule {
        match self.drive.omega {
            OmegaRule::Tracked(r) => r,
            OmegaRule::Fixed(_) => StarkRule::default(),
        }
    }
}

/// Largest angular frequency in the interaction-picture equations.
fn fastest_frequency<S: Clone + Send + Sync>(track: &FrameTrack<S>, roles: &RoleMap, drive: &DriveSchedule) -> f64 {
    let mut w: f64 = 0.0;
    for k in 0..=64 {
        let d = track.data(k as f64 / 64.0, 0);
        let e: &DVector<f64> = &d.energies;
        let omega = match drive.omega {
            OmegaRule::Fixed(x) => x,
            OmegaRule::Tracked(_) => (e[roles.state2] - e[roles.state0]).abs(),
        };
        w = w.max(e.max() - e.min() + omega);
    }
    w
}

/// Right-hand side of the interaction-picture equations; layout
/// `[Re d, Im d interleaved | φ | θ | Γ]`.
fn full_rhs<S: Clone + Send + Sync>(
    stage: &mut Stage<'_, S>,
    phase: &mut [Complex64],
    cycle: usize,
    s: f64,
    y: &[f64],
    dy: &mut [f64],
) -> Result<()> {
    let n = phase.len();
    let omega = stage.load(cycle, s)?;
    let drive_scale = 2.0 * stage.drive.amplitude * y[3 * n].cos();
    for (j, p) in phase.iter_mut().enumerate() {
        *p = Complex64::from_polar(1.0, y[2 * n + j]);
    }
    for j in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let hjk = Complex64::new(drive_scale * stage.data.drive[(j, k)], -stage.motion[(j, k)]);
            let dk = Complex64::new(y[2 * k], y[2 * k + 1]);
            acc += hjk * dk * phase[j] * phase[k].conj();
        }
        // ḋ_j = −i·acc
        dy[2 * j] = acc.im;
        dy[2 * j + 1] = -acc.re;
        dy[2 * n + j] = stage.data.energies[j];
    }
    dy[3 * n] = omega;
    dy[3 * n + 1] = (Complex64::i() * stage.kappa()).re;
    Ok(())
}

/// Full driven evolution over every cycle of `path`.
///
/// `psi0` holds amplitudes in the eigenbasis at `t = 0`.
pub fn evolve_full<M: HamiltonianModel>(
    model: &M,
    path: &ParamPath,
    drive: &DriveSchedule,
    psi0: &[Complex64],
    ctrl: &StepControl,
    opts: &DynamicsOptions,
) -> Result<EvolutionRecord> {
    let track = FrameTrack::build(model, path.curve(), opts)?;
    evolve_full_on(&track, model.roles(), path, drive, psi0, ctrl)
}

/// [`evolve_full`] on prebuilt frames; `track` must come from `path.curve()`.
pub fn evolve_full_on<S: Clone + Send + Sync>(
    track: &FrameTrack<S>,
    roles: &RoleMap,
    path: &ParamPath,
    drive: &DriveSchedule,
    psi0: &[Complex64],
    ctrl: &StepControl,
) -> Result<EvolutionRecord> {
    drive.validate()?;
    ctrl.validate()?;
    let n = track.dimension();
    check_state(psi0, n)?;
    let (i0, i2) = (roles.state0, roles.state2);
    let amplitude = drive.amplitude;

    let mut stage = Stage::new(track, path, roles, *drive);
    let mut phase = vec![Complex64::new(0.0, 0.0); n];

    let mut y0 = vec![0.0; 3 * n + 2];
    for j in 0..n {
        y0[2 * j] = psi0[j].re;
        y0[2 * j + 1] = psi0[j].im;
    }

    let w = fastest_frequency(track, roles, drive);
    let h0 = TAU / w.max(1e-300) / ctrl.steps_per_period as f64;
    let base = (path.period() / h0).ceil() as usize;
    let (steps, halvings) = settle(
        |steps| {
            let mut y = y0.clone();
            let mut f = |s: f64, y: &[f64], dy: &mut [f64]| full_rhs(&mut stage, &mut phase, 0, s, y, dy);
            run_cycle(&mut f, &mut y, path.period(), steps, |_, _| {})?;
            Ok(y)
        },
        base,
        2 * n,
        ctrl,
    )?;

    let stride = sample_stride(steps, ctrl);
    let mut rec = EvolutionRecord {
        times: Vec::new(),
        amplitudes: Vec::new(),
        populations: Vec::new(),
        rotating: Vec::new(),
        gamma_accumulated: Vec::new(),
        frame: FrameKind::Lab,
        diagnostics: Diagnostics { step: path.period() / steps as f64, steps: steps * path.cycles(), halvings, ..Default::default() },
    };
    let mut probe = Stage::new(track, path, roles, *drive);
    let mut push = |rec: &mut EvolutionRecord, t: f64, cycle: usize, s: f64, y: &[f64]| -> Result<()> {
        let c: Vec<Complex64> = (0..n)
            .map(|j| Complex64::new(y[2 * j], y[2 * j + 1]) * Complex64::from_polar(1.0, -y[2 * n + j]))
            .collect();
        let pops: Vec<f64> = c.iter().map(|z| z.norm_sqr()).collect();
        let theta = y[3 * n];
        let a0 = Complex64::new(y[2 * i0], y[2 * i0 + 1]);
        let a2 = Complex64::new(y[2 * i2], y[2 * i2 + 1]) * Complex64::from_polar(1.0, theta + y[2 * n + i0] - y[2 * n + i2]);
        let omega = probe.load(cycle, s)?;
        let (na, off) = snapshot_ratios(&probe.data.energies, &probe.data.drive, &probe.motion, roles, amplitude, omega);
        let d = &mut rec.diagnostics;
        d.max_nonadiabatic = d.max_nonadiabatic.max(na);
        d.max_offresonance = d.max_offresonance.max(off);
        d.max_norm_defect = d.max_norm_defect.max((pops.iter().sum::<f64>() - 1.0).abs());
        rec.times.push(t);
        rec.amplitudes.push(c);
        rec.populations.push(pops);
        rec.rotating.push([a0, a2]);
        rec.gamma_accumulated.push(y[3 * n + 1]);
        Ok(())
    };

    let mut y = y0;
    push(&mut rec, 0.0, 0, 0.0, &y)?;
    let h = path.period() / steps as f64;
    for cycle in 0..path.cycles() {
        let t0 = cycle as f64 * path.period();
        let mut f = |s: f64, y: &[f64], dy: &mut [f64]| full_rhs(&mut stage, &mut phase, cycle, s, y, dy);
        let mut samples: Vec<(usize, Vec<f64>)> = Vec::new();
        run_cycle(&mut f, &mut y, path.period(), steps, |i, yy| {
            if i % stride == 0 || i == steps {
                samples.push((i, yy.to_vec()));
            }
        })?;
        for (i, yy) in samples {
            push(&mut rec, t0 + i as f64 * h, cycle, i as f64 * h, &yy)?;
        }
    }
    Ok(rec)
}

/// Rotating-frame two-level evolution
/// `i ψ̇_R = [[0, κ + F·D₀₂], [c.c., δE₂ − δE₀ + Δ]] ψ_R`.
pub fn evolve_rwa<M: HamiltonianModel>(
    model: &M,
    path: &ParamPath,
    drive: &DriveSchedule,
    psi0: [Complex64; 2],
    ctrl: &StepControl,
    opts: &DynamicsOptions,
) -> Result<EvolutionRecord> {
    let track = FrameTrack::build(model, path.curve(), opts)?;
    evolve_rwa_on(&track, model.roles(), path, drive, psi0, ctrl)
}

pub fn evolve_rwa_on<S: Clone + Send + Sync>(
    track: &FrameTrack<S>,
    roles: &RoleMap,
    path: &ParamPath,
    drive: &DriveSchedule,
    psi0: [Complex64; 2],
    ctrl: &StepControl,
) -> Result<EvolutionRecord> {
    drive.validate()?;
    ctrl.validate()?;
    check_state(&psi0, 2)?;
    let (i0, i2) = (roles.state0, roles.state2);
    let amplitude = drive.amplitude;
    let mut stage = Stage::new(track, path, roles, *drive);
    let rule = stage.stark_rule();

    let eval = |cycle: usize, s: f64, y: &[f64], dy: &mut [f64], stage: &mut Stage<S>| -> Result<()> {
        let omega = stage.load(cycle, s)?;
        let e = &stage.data.energies;
        let st = stark_from(e, &stage.data.drive, &stage.motion, roles, amplitude, rule, omega);
        let detuning = e[i2] - e[i0] - omega;
        let off = stage.kappa() + amplitude * stage.data.drive[(i0, i2)];
        let diag = st.delta2 - st.delta0 + detuning;
        let a0 = Complex64::new(y[0], y[1]);
        let a2 = Complex64::new(y[2], y[3]);
        let d0 = -Complex64::i() * (off * a2);
        let d2 = -Complex64::i() * (off.conj() * a0 + diag * a2);
        dy[0] = d0.re;
        dy[1] = d0.im;
        dy[2] = d2.re;
        dy[3] = d2.im;
        dy[4] = omega;
        dy[5] = (Complex64::i() * stage.kappa()).re;
        Ok(())
    };

    let y0 = vec![psi0[0].re, psi0[0].im, psi0[1].re, psi0[1].im, 0.0, 0.0];
    let base = 16 * ctrl.samples_per_cycle.max(64);
    let (steps, halvings) = settle(
        |steps| {
            let mut y = y0.clone();
            let mut f = |s: f64, y: &[f64], dy: &mut [f64]| eval(0, s, y, dy, &mut stage);
            run_cycle(&mut f, &mut y, path.period(), steps, |_, _| {})?;
            Ok(y)
        },
        base / 2,
        4,
        ctrl,
    )?;

    let stride = sample_stride(steps, ctrl);
    let mut rec = EvolutionRecord {
        times: Vec::new(),
        amplitudes: Vec::new(),
        populations: Vec::new(),
        rotating: Vec::new(),
        gamma_accumulated: Vec::new(),
        frame: FrameKind::Rotating,
        diagnostics: Diagnostics { step: path.period() / steps as f64, steps: steps * path.cycles(), halvings, ..Default::default() },
    };
    let mut probe = Stage::new(track, path, roles, *drive);
    let mut push = |rec: &mut EvolutionRecord, t: f64, cycle: usize, s: f64, y: &[f64]| -> Result<()> {
        let a = [Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3])];
        let omega = probe.load(cycle, s)?;
        let (na, off) = snapshot_ratios(&probe.data.energies, &probe.data.drive, &probe.motion, roles, amplitude, omega);
        let pops = vec![a[0].norm_sqr(), a[1].norm_sqr()];
        let d = &mut rec.diagnostics;
        d.max_nonadiabatic = d.max_nonadiabatic.max(na);
        d.max_offresonance = d.max_offresonance.max(off);
        d.max_norm_defect = d.max_norm_defect.max((pops[0] + pops[1] - 1.0).abs());
        rec.times.push(t);
        rec.amplitudes.push(a.to_vec());
        rec.populations.push(pops);
        rec.rotating.push(a);
        rec.gamma_accumulated.push(y[5]);
        Ok(())
    };

    let mut y = y0;
    push(&mut rec, 0.0, 0, 0.0, &y)?;
    let h = path.period() / steps as f64;
    for cycle in 0..path.cycles() {
        let t0 = cycle as f64 * path.period();
        let mut samples: Vec<(usize, Vec<f64>)> = Vec::new();
        let mut f = |s: f64, y: &[f64], dy: &mut [f64]| eval(cycle, s, y, dy, &mut stage);
        run_cycle(&mut f, &mut y, path.period(), steps, |i, yy| {
            if i % stride == 0 || i == steps {
                samples.push((i, yy.to_vec()));
            }
        })?;
        for (i, yy) in samples {
            push(&mut rec, t0 + i as f64 * h, cycle, i as f64 * h, &yy)?;
        }
    }
    Ok(rec)
}
