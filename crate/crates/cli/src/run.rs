//! Model construction and the subcommand bodies.

use std::f64::consts::TAU;
use std::sync::Arc;

use georabi::deltawell::{as_model, bound_spectrum, classify, DeltaWellModel, DeltaWellPotential, DepthPath};
use georabi::dynamics::*;
use georabi::lambda::{gamma_analytic, LambdaModel, LambdaParams, LambdaSchedule};
use georabi::spectrum::{eigenframe, HamiltonianModel, MatrixModel, RoleMap};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::*;
use crate::error::CliError;
use crate::table::{Cell, ResultTable};

pub enum Built {
    Delta(DeltaWellModel),
    Lambda(LambdaModel),
    Matrix(MatrixModel),
}

/// Runs `$body` with `$m` bound to the concrete model.
macro_rules! with_model {
    ($b:expr, $m:ident => $body:expr) => {
        match $b {
            Built::Delta($m) => $body,
            Built::Lambda($m) => $body,
            Built::Matrix($m) => $body,
        }
    };
}

pub struct Setup {
    pub model: Built,
    pub path: ParamPath,
    pub drive: DriveSchedule,
}

/// Tables produced by a subcommand and an optional validity violation.
#[derive(Default)]
pub struct Outcome {
    pub tables: Vec<ResultTable>,
    pub violation: Option<String>,
}

pub fn options() -> DynamicsOptions {
    DynamicsOptions::default()
}

fn core<T>(context: &str, r: georabi::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::from_core(context, e))
}

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

fn timing(easing: f64) -> Timing {
    if easing == 0.0 {
        Timing::Uniform
    } else {
        Timing::Eased { strength: easing }
    }
}

pub fn potential(cfg: &ExperimentConfig) -> Result<DeltaWellPotential, CliError> {
    match cfg.model {
        ModelConfig::Deltawell { a, gamma_left, gamma_right, beta, .. } => {
            core("model", DeltaWellPotential::new(a, gamma_left, gamma_right, beta))
        }
        _ => Err(CliError::Config("model.kind: this subcommand needs the deltawell model".into())),
    }
}

fn generic_path(cfg: &ExperimentConfig) -> Result<ParamPath, CliError> {
    let cycles = cfg.run.cycles;
    let (curve, omega, easing) = match &cfg.path {
        PathConfig::Circle { center, radius, start, omega, easing } => (Curve::circle([center[0], center[1]], *radius, *start), *omega, *easing),
        PathConfig::Ellipse { center, cos_amp, sin_amp, omega, easing } => {
            (Curve::Ellipse { center: center.clone(), cos_amp: cos_amp.clone(), sin_amp: sin_amp.clone() }, *omega, *easing)
        }
        PathConfig::Waypoints { points, closed, omega, easing } => {
            (Curve::Spline(core("path.points", SplineCurve::new(points.clone(), *closed))?), *omega, *easing)
        }
        PathConfig::Static { point: Some(p), omega } => (Curve::Point(p.clone()), *omega, 0.0),
        _ => return Err(CliError::Config("path.kind: not available for this model".into())),
    };
    core("path", ParamPath::new(curve, TAU / omega, cycles, timing(easing)))
}

fn drive_schedule(cfg: &ExperimentConfig) -> DriveSchedule {
    let omega = match cfg.drive.omega_rule {
        OmegaRuleConfig::Tracked => OmegaRule::Tracked(StarkRule::Dressed),
        OmegaRuleConfig::TrackedStatic => OmegaRule::Tracked(StarkRule::Static),
        OmegaRuleConfig::Fixed(w) => OmegaRule::Fixed(w),
    };
    DriveSchedule { amplitude: cfg.drive.amplitude, omega }
}

pub fn lambda_params(cfg: &ExperimentConfig) -> Result<LambdaParams, CliError> {
    match cfg.model {
        ModelConfig::Lambda { e_g, e_e, dipole } => Ok(LambdaParams {
            e_g,
            e_e,
            epsilon: 1.0,
            delta: 0.0,
            dipole,
            field: cfg.drive.amplitude,
            beta_pol: 0.0,
        }),
        _ => Err(CliError::Config("model.kind: this subcommand needs the lambda model".into())),
    }
}

pub fn build(cfg: &ExperimentConfig, opts: &DynamicsOptions) -> Result<Setup, CliError> {
    let drive = drive_schedule(cfg);
    match &cfg.model {
        ModelConfig::Deltawell { truncation, .. } => {
            let pot = potential(cfg)?;
            let (base, depth) = match &cfg.path {
                PathConfig::DepthEllipse { lambda_r, lambda_c, units, omega } => {
                    let dp = match units {
                        DepthUnits::EnergyUnit => DepthPath::in_energy_units(&pot, *lambda_c, *lambda_r, *omega, cfg.run.cycles),
                        DepthUnits::Absolute => DepthPath { lambda_c: *lambda_c, lambda_r: *lambda_r, omega: *omega, cycles: cfg.run.cycles },
                    };
                    (pot, dp)
                }
                PathConfig::Static { point, omega } => {
                    let base = match point {
                        Some(p) => core("path.point", pot.with_depths(p[0], p[1]))?,
                        None => pot,
                    };
                    (base, DepthPath { lambda_c: 0.0, lambda_r: 0.0, omega: *omega, cycles: cfg.run.cycles })
                }
                _ => return Err(CliError::Config("path.kind: the deltawell model takes `depth_ellipse` or `static` paths".into())),
            };
            let (model, path, _) = core("deltawell model", as_model(&base, &depth, drive.amplitude, *truncation, opts))?;
            Ok(Setup { model: Built::Delta(model), path, drive })
        }
        ModelConfig::Lambda { .. } => {
            let params = lambda_params(cfg)?;
            let path = generic_path(cfg)?;
            let schedule = core("lambda model", LambdaSchedule::new(params, path))?;
            let model = core("lambda model", LambdaModel::new(params))?;
            Ok(Setup { model: Built::Lambda(model), path: schedule.path, drive })
        }
        ModelConfig::Matrix { params, h0, h0_gradient, hprime, roles } => {
            let n = h0.len();
            let base = to_matrix(h0);
            let grads: Vec<DMatrix<f64>> = h0_gradient.iter().map(|g| to_matrix(g)).collect();
            let hp = to_matrix(hprime);
            let h0_fn = Arc::new(move |l: &[f64]| {
                let mut m = base.clone();
                for (g, x) in grads.iter().zip(l) {
                    m += g * *x;
                }
                m
            });
            let hp_fn = Arc::new(move |_: &[f64]| hp.clone());
            let rm = RoleMap::new(roles.state0, roles.auxiliary.clone(), roles.state2);
            let model = core("matrix model", MatrixModel::new(params.clone(), n, h0_fn, hp_fn, rm))?;
            Ok(Setup { model: Built::Matrix(model), path: generic_path(cfg)?, drive })
        }
    }
}

fn stride<T: Clone>(v: &[T], s: usize) -> Vec<(usize, T)> {
    v.iter().cloned().enumerate().filter(|(i, _)| i % s == 0 || *i + 1 == v.len()).collect()
}

fn nearest(times: &[f64], t: f64) -> usize {
    let mut best = 0;
    for (i, x) in times.iter().enumerate() {
        if (x - t).abs() < (times[best] - t).abs() {
            best = i;
        }
    }
    best
}

pub fn adiabaticity_table(report: &AdiabaticityReport) -> ResultTable {
    let mut t = ResultTable::new("adiabaticity", &["t", "omega", "nonadiabatic", "offresonance"]);
    for p in &report.probes {
        t.push(vec![p.time.into(), p.omega.into(), p.nonadiabatic.into(), p.offresonance.into()]);
    }
    t.note(format!("nonadiabatic_max: {:e} ({})", report.nonadiabatic_max, report.nonadiabatic_flag.as_str()));
    t.note(format!("offresonance_max: {:e} ({})", report.offresonance_max, report.offresonance_flag.as_str()));
    t.note(format!("flag: {}", report.flag().as_str()));
    t
}

fn violation(report: &AdiabaticityReport) -> Option<String> {
    (report.flag() == ValidityFlag::Violated).then(|| {
        format!(
            "adiabaticity flag violated (nonadiabatic max {:.3e}, off-resonance max {:.3e})",
            report.nonadiabatic_max, report.offresonance_max
        )
    })
}

fn report_of<M: HamiltonianModel>(m: &M, s: &Setup, cfg: &ExperimentConfig, opts: &DynamicsOptions) -> Result<AdiabaticityReport, CliError> {
    core("adiabaticity report", adiabaticity_report(m, &s.path, &s.drive, cfg.run.probes, opts))
}

/// `check`: the adiabaticity report alone.
pub fn check(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let opts = options();
    let s = build(cfg, &opts)?;
    let report = with_model!(&s.model, m => report_of(m, &s, cfg, &opts))?;
    Ok(Outcome { violation: violation(&report), tables: vec![adiabaticity_table(&report)] })
}

/// `spectrum`: bound states of the delta wells, or the eigenvalues at the path start.
pub fn spectrum(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mut table;
    if let ModelConfig::Deltawell { .. } = cfg.model {
        let pot = potential(cfg)?;
        let states = core("bound spectrum", bound_spectrum(&pot))?;
        let eu = pot.energy_unit();
        table = ResultTable::new(
            "spectrum",
            &["index", "energy", "energy_eu", "decay", "label", "interior", "weight_left", "weight_right", "weight_central"],
        );
        for (i, st) in states.iter().enumerate() {
            let c = classify(st, &pot);
            let interior = match st.character() {
                georabi::deltawell::InteriorCharacter::Oscillatory => "oscillatory",
                georabi::deltawell::InteriorCharacter::Evanescent => "evanescent",
            };
            table.push(vec![
                i.into(),
                st.energy().into(),
                (st.energy() / eu).into(),
                st.decay().into(),
                c.label.as_str().into(),
                interior.into(),
                c.left.into(),
                c.right.into(),
                c.central.into(),
            ]);
        }
        table.note(format!("E_u = gamma_r^2 - beta^2 = {eu:e}"));
    } else {
        let opts = options();
        let s = build(cfg, &opts)?;
        let lambda = s.path.at(0.0);
        let energies = with_model!(&s.model, m => {
            let f = core("eigenframe", eigenframe(m, &lambda, None, &opts.spectrum))?;
            let roles = m.roles().clone();
            Ok::<_, CliError>((f.energies, roles))
        })?;
        table = ResultTable::new("spectrum", &["index", "energy", "role"]);
        let (e, roles) = energies;
        for (i, x) in e.iter().enumerate() {
            let role = if i == roles.state0 {
                "state0"
            } else if i == roles.state2 {
                "state2"
            } else if roles.auxiliary.contains(&i) {
                "auxiliary"
            } else {
                "-"
            };
            table.push(vec![i.into(), (*x).into(), role.into()]);
        }
        table.note(format!("parameters: {lambda:?}"));
    }
    Ok(Outcome { tables: vec![table], violation: None })
}

fn initial(m: &impl HamiltonianModel) -> Vec<Complex64> {
    let mut psi = vec![Complex64::new(0.0, 0.0); m.dimension()];
    psi[m.roles().state0] = Complex64::new(1.0, 0.0);
    psi
}

fn evolve_with<M: HamiltonianModel>(m: &M, s: &Setup, cfg: &ExperimentConfig, force: bool) -> Result<Outcome, CliError> {
    let opts = options();
    let run = &cfg.run;
    let report = report_of(m, s, cfg, &opts)?;
    let mut out = Outcome { violation: violation(&report), tables: vec![adiabaticity_table(&report)] };
    if out.violation.is_some() && !force {
        return Ok(out);
    }
    let period = s.path.period();
    let amp = s.drive.amplitude;
    let step = StepControl {
        steps_per_period: run.steps_per_period,
        tolerance: run.step_tolerance,
        samples_per_cycle: run.samples_per_cycle,
        ..StepControl::default()
    };
    let seg = SegmentControl { segments: run.segments, tolerance: run.segment_tolerance, ..SegmentControl::default() };
    let one = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let k = cfg.output.stride;

    let one_cycle = core("path", s.path.with_cycles(1))?;
    let kappa = core("kappa series", kappa_series(m, &one_cycle, amp, run.samples_per_cycle + 1, &opts))?;
    let mut kt = ResultTable::new("kappa_timeseries", &["t", "kappa_re", "kappa_im", "kappa_abs"]);
    for (_, (t, z)) in stride(&kappa, k) {
        kt.push(vec![t.into(), z.re.into(), z.im.into(), z.norm().into()]);
    }
    kt.note("kappa carries the factor i of the effective coupling");
    out.tables.push(kt);

    let line = gamma_line_detail(m, s.path.curve(), amp, &opts);
    let gamma = match &line {
        Ok(g) => g.gamma,
        Err(_) => f64::NAN,
    };

    let full = if run.mode.full() {
        let rec = core("full evolution", evolve_full(m, &s.path, &s.drive, &initial(m), &step, &opts))?;
        let mut cols = vec!["t".to_string()];
        cols.extend((0..m.dimension()).map(|i| format!("p_{i}")));
        cols.extend(["p0_rot".into(), "p2_rot".into()]);
        let names: Vec<&str> = cols.iter().map(String::as_str).collect();
        let mut t = ResultTable::new("populations_full", &names);
        let rot = rec.rotating_populations();
        for (i, time) in stride(&rec.times, k) {
            let mut row: Vec<Cell> = vec![time.into()];
            row.extend(rec.populations[i].iter().map(|p| Cell::from(*p)));
            row.extend([rot[i][0].into(), rot[i][1].into()]);
            t.push(row);
        }
        t.note(format!("state0 = {}, state2 = {}; eigenbasis populations", m.roles().state0, m.roles().state2));
        t.note(format!("max_norm_defect: {:e}", rec.max_norm_defect()));
        out.tables.push(t);
        Some(rec)
    } else {
        None
    };

    let rwa = if run.mode.rwa() {
        let rec = core("rotating-frame evolution", evolve_rwa(m, &s.path, &s.drive, one, &step, &opts))?;
        let mut t = ResultTable::new("populations_rwa", &["t", "p0", "p2"]);
        let rot = rec.rotating_populations();
        for (i, time) in stride(&rec.times, k) {
            t.push(vec![time.into(), rot[i][0].into(), rot[i][1].into()]);
        }
        out.tables.push(t);
        Some(rec)
    } else {
        None
    };

    let geo = if run.mode.geometric() {
        let rec = core("geometric evolution", evolve_geometric(m, &s.path, amp, one, &seg, &opts))?;
        let mut t = ResultTable::new("populations_geometric", &["t", "cycles", "p0", "p2", "gamma_accumulated"]);
        let rot = rec.rotating_populations();
        for (i, c) in stride(&rec.times, k) {
            t.push(vec![(c * period).into(), c.into(), rot[i][0].into(), rot[i][1].into(), rec.gamma_accumulated[i].into()]);
        }
        out.tables.push(t);
        Some(rec)
    } else {
        None
    };

    let mut gt = ResultTable::new(
        "gamma_per_cycle",
        &["cycle", "gamma_per_cycle", "gamma_accumulated", "p2_closed_form", "p2_geometric", "p2_full", "p2_rwa"],
    );
    let at_time = |rec: &Option<EvolutionRecord>, t: f64| -> f64 {
        rec.as_ref().map_or(f64::NAN, |r| r.rotating_populations()[nearest(&r.times, t)][1])
    };
    for c in 0..=run.cycles {
        let acc = geo.as_ref().map_or(c as f64 * gamma, |r| r.gamma_accumulated[nearest(&r.times, c as f64)]);
        let p2_geo = geo.as_ref().map_or(f64::NAN, |r| r.rotating_populations()[nearest(&r.times, c as f64)][1]);
        let tc = c as f64 * period;
        gt.push(vec![
            c.into(),
            gamma.into(),
            acc.into(),
            (c as f64 * gamma).sin().powi(2).into(),
            p2_geo.into(),
            at_time(&full, tc).into(),
            at_time(&rwa, tc).into(),
        ]);
    }
    match line {
        Ok(g) => gt.note(format!("gamma_line error estimate: {:e}, realness residual: {:e}", g.error, g.realness_residual)),
        Err(e) => gt.note(format!("no closed-form rotation: {e}")),
    }
    out.tables.push(gt);
    Ok(out)
}

/// `evolve`: time series of the selected schemes.
pub fn evolve(cfg: &ExperimentConfig, force: bool) -> Result<Outcome, CliError> {
    let s = build(cfg, &options())?;
    with_model!(&s.model, m => evolve_with(m, &s, cfg, force))
}

/// `lambda`: closed form against the generic engine on a Λ system.
pub fn lambda(cfg: &ExperimentConfig, force: bool) -> Result<Outcome, CliError> {
    let params = lambda_params(cfg)?;
    let opts = options();
    let s = build(cfg, &opts)?;
    let Built::Lambda(m) = &s.model else { unreachable!("lambda_params checked the model") };
    let report = report_of(m, &s, cfg, &opts)?;
    let mut out = Outcome { violation: violation(&report), tables: vec![adiabaticity_table(&report)] };
    if out.violation.is_some() && !force {
        return Ok(out);
    }
    let schedule = core("lambda schedule", LambdaSchedule::new(params, s.path.clone()))?;
    let ga = core("closed-form rotation", gamma_analytic(&schedule))?;
    let gl = core("rotation line integral", gamma_line(m, &s.path, params.field, &opts))?;
    let one = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let seg = SegmentControl { segments: cfg.run.segments, tolerance: cfg.run.segment_tolerance, ..SegmentControl::default() };
    let geo = core("geometric evolution", evolve_geometric(m, &s.path, params.field, one, &seg, &opts))?;
    let step = StepControl {
        steps_per_period: cfg.run.steps_per_period,
        tolerance: cfg.run.step_tolerance,
        samples_per_cycle: cfg.run.samples_per_cycle,
        ..StepControl::default()
    };
    let full = core("full evolution", evolve_full(m, &s.path, &s.drive, &initial(m), &step, &opts))?;
    let mut t = ResultTable::new(
        "lambda_comparison",
        &["cycle", "gamma_analytic", "gamma_line", "gamma_rel_diff", "a_e_closed_form", "a_e_geometric", "a_e_full"],
    );
    let period = s.path.period();
    for c in 0..=cfg.run.cycles {
        let cf = c as f64;
        let g = geo.rotating_populations()[nearest(&geo.times, cf)][1].sqrt();
        let f = full.populations[nearest(&full.times, cf * period)][m.roles().state2].sqrt();
        t.push(vec![
            c.into(),
            (cf * ga).into(),
            (cf * gl).into(),
            ((gl - ga) / ga).abs().into(),
            (cf * ga).sin().abs().into(),
            g.into(),
            f.into(),
        ]);
    }
    let v = params_at_start(&params, &s.path).validity();
    t.note(format!("gap_ratio: {:e}, coupling_ratio: {:e}, within validity: {}", v.gap_ratio, v.coupling_ratio, v.ok()));
    let lam = s.path.at(0.0);
    let vel = s.path.velocity(0.0);
    let dressed = core("tracked omega", resonant_omega_with(m, &lam, &vel, params.field, StarkRule::Dressed, &opts.spectrum))?;
    let stat = core("tracked omega", resonant_omega_with(m, &lam, &vel, params.field, StarkRule::Static, &opts.spectrum))?;
    t.note(format!("tracked omega at t = 0: dressed {dressed:e}, static {stat:e}, difference {:e}", dressed - stat));
    out.tables.push(t);
    Ok(out)
}

fn params_at_start(p: &LambdaParams, path: &ParamPath) -> LambdaParams {
    let x = path.at(0.0);
    LambdaParams { epsilon: x[0], delta: x[1], ..*p }
}

/// Applies one sweep coordinate to a copy of the configuration.
fn apply(cfg: &mut ExperimentConfig, p: SweepParam, v: f64) -> Result<(), CliError> {
    let bad = |what: &str| Err(CliError::Config(format!("sweep: `{}` does not apply to {what}", p.as_str())));
    match p {
        SweepParam::Amplitude => cfg.drive.amplitude = v,
        SweepParam::Omega => match &mut cfg.path {
            PathConfig::DepthEllipse { omega, .. }
            | PathConfig::Circle { omega, .. }
            | PathConfig::Ellipse { omega, .. }
            | PathConfig::Waypoints { omega, .. }
            | PathConfig::Static { omega, .. } => *omega = v,
        },
        SweepParam::Radius => match &mut cfg.path {
            PathConfig::Circle { radius, .. } => *radius = v,
            _ => return bad("paths other than circles"),
        },
        SweepParam::LambdaR => match &mut cfg.path {
            PathConfig::DepthEllipse { lambda_r, .. } => *lambda_r = v,
            _ => return bad("paths other than depth ellipses"),
        },
        SweepParam::LambdaC => match &mut cfg.path {
            PathConfig::DepthEllipse { lambda_c, .. } => *lambda_c = v,
            _ => return bad("paths other than depth ellipses"),
        },
        SweepParam::Scale => match &mut cfg.path {
            PathConfig::DepthEllipse { lambda_r, lambda_c, .. } => {
                *lambda_r *= v;
                *lambda_c *= v;
            }
            PathConfig::Circle { radius, .. } => *radius *= v,
            PathConfig::Ellipse { cos_amp, sin_amp, .. } => {
                cos_amp.iter_mut().chain(sin_amp.iter_mut()).for_each(|x| *x *= v);
            }
            PathConfig::Waypoints { points, .. } => {
                let n = points.len() as f64;
                let dim = points[0].len();
                let c: Vec<f64> = (0..dim).map(|d| points.iter().map(|q| q[d]).sum::<f64>() / n).collect();
                for q in points.iter_mut() {
                    for d in 0..dim {
                        q[d] = c[d] + v * (q[d] - c[d]);
                    }
                }
            }
            PathConfig::Static { .. } => {}
        },
    }
    Ok(())
}

/// Cartesian grid of the sweep axes, last axis fastest.
pub fn grid(axes: &[SweepAxis]) -> Vec<Vec<f64>> {
    let mut points = vec![Vec::new()];
    for ax in axes {
        points = points.into_iter().flat_map(|p| ax.values.iter().map(move |v| [p.clone(), vec![*v]].concat())).collect();
    }
    points
}

struct RowResult {
    gamma: f64,
    realness: f64,
    nonadiabatic: f64,
    offresonance: f64,
    flag: String,
    error: String,
}

fn sweep_point(cfg: &ExperimentConfig) -> Result<RowResult, CliError> {
    cfg.validate()?;
    let opts = options();
    let s = build(cfg, &opts)?;
    with_model!(&s.model, m => {
        let g = core("rotation line integral", gamma_line_detail(m, s.path.curve(), s.drive.amplitude, &opts))?;
        let r = report_of(m, &s, cfg, &opts)?;
        Ok(RowResult {
            gamma: g.gamma,
            realness: g.realness_residual,
            nonadiabatic: r.nonadiabatic_max,
            offresonance: r.offresonance_max,
            flag: r.flag().as_str().into(),
            error: String::new(),
        })
    })
}

/// Sweep concurrency from `GEORABI_THREADS`; unset means the rayon default.
pub fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var("GEORABI_THREADS") {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("GEORABI_THREADS must be a positive integer, got `{s}`"))),
        },
    }
}

/// `gamma`: rotation per cycle over a parameter grid; per-point failures are
/// recorded in their row.
pub fn gamma(cfg: &ExperimentConfig, axes: &[SweepAxis], threads: Option<usize>) -> Result<Outcome, CliError> {
    // reject axes that cannot apply before spending any work
    let mut probe = cfg.clone();
    for ax in axes {
        apply(&mut probe, ax.name, ax.values[0])?;
    }
    let points = grid(axes);
    let eval = |p: &Vec<f64>| -> RowResult {
        let mut c = cfg.clone();
        let res = axes.iter().zip(p).try_for_each(|(ax, v)| apply(&mut c, ax.name, *v)).and_then(|_| sweep_point(&c));
        res.unwrap_or_else(|e| RowResult {
            gamma: f64::NAN,
            realness: f64::NAN,
            nonadiabatic: f64::NAN,
            offresonance: f64::NAN,
            flag: "error".into(),
            error: e.to_string(),
        })
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Numerical(format!("thread pool: {e}")))?;
    let rows: Vec<RowResult> = pool.install(|| points.par_iter().map(eval).collect());

    let mut cols = vec!["index".to_string()];
    cols.extend(axes.iter().map(|a| a.name.as_str().to_string()));
    cols.extend(["gamma_per_cycle", "realness_residual", "nonadiabatic_max", "offresonance_max", "flag", "error"].map(String::from));
    let names: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = ResultTable::new("gamma_sweep", &names);
    let mut violated = 0;
    for (i, (p, r)) in points.iter().zip(&rows).enumerate() {
        let mut row: Vec<Cell> = vec![i.into()];
        row.extend(p.iter().map(|v| Cell::from(*v)));
        row.extend([r.gamma.into(), r.realness.into(), r.nonadiabatic.into(), r.offresonance.into(), r.flag.clone().into(), r.error.clone().into()]);
        t.push(row);
        violated += usize::from(r.flag == "violated");
    }
    if matches!(cfg.model, ModelConfig::Deltawell { .. }) {
        t.note("depth-ellipse amplitudes in the configured units; gamma per traversal");
    }
    let violation = (violated > 0).then(|| format!("{violated} of {} sweep points have a violated adiabaticity flag", points.len()));
    Ok(Outcome { tables: vec![t], violation })
}
