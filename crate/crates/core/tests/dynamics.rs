use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::sync::Arc;

use approx::assert_relative_eq;
use georabi::deltawell::{as_model, DeltaWellPotential, DepthPath};
use georabi::dynamics::*;
use georabi::lambda::{LambdaModel, LambdaParams, LambdaSchedule};
use georabi::spectrum::{MatrixFn, MatrixModel, RoleMap, SpectrumOptions};
use georabi::Error;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn sopts() -> SpectrumOptions {
    SpectrumOptions::default()
}

fn lambda_params(field: f64) -> LambdaParams {
    LambdaParams { e_g: 0.0, e_e: 50.0, epsilon: 1.0, delta: 0.0, dipole: 1.0, field, beta_pol: 0.0 }
}

/// Energies `(0, 5, 1)` for roles `(0, aux, 2)` with `H′₀₁ = H′₁₂ = 0.1` per unit amplitude.
fn toy() -> MatrixModel {
    let h0 = DMatrix::from_diagonal(&DVector::from_column_slice(&[0.0, 1.0, 5.0]));
    let mut hp = DMatrix::zeros(3, 3);
    // sorted order: role 0 → 0, role 2 → 1, aux → 2
    hp[(0, 2)] = 0.1;
    hp[(2, 0)] = 0.1;
    hp[(1, 2)] = 0.1;
    hp[(2, 1)] = 0.1;
    MatrixModel::constant(vec!["x".into()], h0, hp, RoleMap::new(0, vec![2], 1)).unwrap()
}

/// `Φ₀ = (cos λ, −sin λ, 0)`, `Φ₁ = (sin λ, cos λ, 0)`, `Φ₂ = e₃`, energies
/// `(e0, e1, e2)` and `⟨Φ₁|H′|Φ₂⟩ = g` as the only drive element.
fn rotating_toy(e: [f64; 3], g: f64) -> MatrixModel {
    let frame = |l: f64| {
        let (s, co) = l.sin_cos();
        DMatrix::from_row_slice(3, 3, &[co, s, 0.0, -s, co, 0.0, 0.0, 0.0, 1.0])
    };
    let d = DMatrix::from_diagonal(&DVector::from_column_slice(&e));
    let mut gm = DMatrix::zeros(3, 3);
    gm[(1, 2)] = g;
    gm[(2, 1)] = g;
    let h0: MatrixFn = Arc::new(move |l: &[f64]| {
        let r = frame(l[0]);
        &r * &d * r.transpose()
    });
    let hp: MatrixFn = Arc::new(move |l: &[f64]| {
        let r = frame(l[0]);
        &r * &gm * r.transpose()
    });
    let (i0, i1, i2) = (0, 1, 2);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| e[a].total_cmp(&e[b]));
    let pos = |k: usize| order.iter().position(|&x| x == k).unwrap();
    let roles = RoleMap::new(pos(i0), vec![pos(i1)], pos(i2));
    MatrixModel::new(vec!["theta".into()], 3, h0, hp, roles).unwrap().with_gauge(move |l| {
        let r = frame(l[0]);
        DMatrix::from_columns(&order.map(|k| r.column(k).into_owned()))
    })
}

#[test]
fn stark_shifts_of_the_toy_model() {
    let m = toy();
    let s = stark_shifts(&m, &[0.0], &[0.0], 0.0, &sopts()).unwrap();
    assert_eq!((s.delta0, s.delta2), (0.0, 0.0));
    for f in [0.3, 2.0] {
        let s = stark_shifts(&m, &[0.0], &[0.0], f, &sopts()).unwrap();
        let d0 = 2.0 * (0.1 * f) * (0.1 * f) / (0.0 - 5.0);
        let d2 = 2.0 * (0.1 * f) * (0.1 * f) / (1.0 - 5.0);
        assert_relative_eq!(s.delta0, d0, max_relative = 1e-12);
        assert_relative_eq!(s.delta2, d2, max_relative = 1e-12);
        assert!(s.delta0 < 0.0 && s.delta2 < 0.0);
        let w = resonant_omega(&m, &[0.0], &[0.0], f, &sopts()).unwrap();
        assert_relative_eq!(w, 1.0 - d0 + d2, max_relative = 1e-12);
    }
    assert_eq!(resonant_omega(&m, &[0.0], &[0.0], 0.0, &sopts()).unwrap(), 1.0);
}

#[test]
fn misassigned_roles_give_a_negative_frequency() {
    let h0 = DMatrix::from_diagonal(&DVector::from_column_slice(&[0.0, 1.0, 5.0]));
    let m = MatrixModel::constant(vec!["x".into()], h0, DMatrix::zeros(3, 3), RoleMap::new(1, vec![2], 0)).unwrap();
    assert!(matches!(resonant_omega(&m, &[0.0], &[0.0], 0.0, &sopts()), Err(Error::Model(_))));
}

#[test]
fn kappa_vanishes_without_motion_or_drive() {
    let m = rotating_toy([0.0, 5.0, 1.0], 0.7);
    assert_eq!(effective_kappa(&m, &[0.3], &[0.0], 0.2, &sopts()).unwrap(), c(0.0));
    let dark = rotating_toy([0.0, 5.0, 1.0], 0.0);
    assert_eq!(effective_kappa(&dark, &[0.3], &[0.01], 0.2, &sopts()).unwrap().norm(), 0.0);
}

#[test]
fn kappa_of_a_rotating_auxiliary() {
    let (e0, e1, g, f) = (0.0, 5.0, 0.7, 0.2);
    let m = rotating_toy([e0, e1, 1.0], g);
    for (l, v) in [(0.3, 0.01), (1.1, -0.02)] {
        let k = effective_kappa(&m, &[l], &[v], f, &sopts()).unwrap();
        let expected = v * f * g / (e1 - e0);
        assert!(k.re.abs() < 1e-12);
        assert_relative_eq!(k.im, expected, max_relative = 1e-8);
        let field = effective_field_f(&m, &[l], f, &sopts()).unwrap();
        assert_relative_eq!((field[0] * v).im, k.im, max_relative = 1e-9);
    }
}

#[test]
fn field_vanishes_without_drive_or_parameter_dependence() {
    let m = rotating_toy([0.0, 5.0, 1.0], 0.7);
    assert!(effective_field_f(&m, &[0.4], 0.0, &sopts()).unwrap().iter().all(|z| z.norm() == 0.0));
    let h0 = DMatrix::from_diagonal(&DVector::from_column_slice(&[0.0, 1.0, 5.0]));
    let hp = DMatrix::from_element(3, 3, 0.3);
    let fixed = MatrixModel::constant(vec!["x".into(), "y".into()], h0, hp, RoleMap::new(0, vec![2], 1)).unwrap();
    assert!(effective_field_f(&fixed, &[0.1, 0.2], 1.0, &sopts()).unwrap().iter().all(|z| z.norm() == 0.0));
}

#[test]
fn lambda_field_along_the_mixing_angle() {
    let p = lambda_params(0.01);
    let m = LambdaModel::new(p).unwrap();
    for (r, phi) in [(1.0, 0.3), (2.5, 2.0), (0.7, -1.2)] {
        let lam = [r * f64::cos(phi), r * f64::sin(phi)];
        let f = effective_field_f(&m, &lam, p.field, &sopts()).unwrap();
        // dλ/dα = 2r(−sin φ, cos φ)
        let t = [-2.0 * r * phi.sin(), 2.0 * r * phi.cos()];
        let z: Complex64 = f.iter().zip(&t).map(|(a, b)| a * b).sum();
        let rate = (Complex64::i() * z).re;
        assert_relative_eq!(rate, -p.coupling() / r, max_relative = 1e-7);
        assert!((Complex64::i() * z).im.abs() < 1e-9 * rate.abs());
    }
}

#[test]
fn effective_field_kappa_consistency() {
    let m = LambdaModel::new(lambda_params(0.01)).unwrap();
    let ef = effective_field(&m, &[0.8, -0.3], &[0.02, 0.05], &DriveSchedule::tracked(0.01), &sopts()).unwrap();
    let fv: Complex64 = ef.f.iter().zip([0.02, 0.05]).map(|(a, b)| a * b).sum();
    assert_relative_eq!(fv.im, ef.kappa.im, max_relative = 1e-9);
    assert!(ef.f.iter().all(|z| z.re.abs() <= 1e-9 * z.norm()));
    assert_relative_eq!(ef.detuning, ef.stark.delta0 - ef.stark.delta2, epsilon = 1e-12);
}

#[test]
fn stationary_state_only_acquires_its_phase() {
    let h0 = DMatrix::from_diagonal(&DVector::from_column_slice(&[0.3, 1.0, 2.2]));
    let m = MatrixModel::constant(vec!["x".into()], h0, DMatrix::zeros(3, 3), RoleMap::new(0, vec![1], 2)).unwrap();
    let path = ParamPath::uniform(Curve::Point(vec![0.0]), 40.0).unwrap();
    let rec = evolve_full(&m, &path, &DriveSchedule::tracked(0.0), &[c(1.0), c(0.0), c(0.0)], &StepControl::default(), &DynamicsOptions::default())
        .unwrap();
    for (t, a) in rec.times.iter().zip(&rec.amplitudes) {
        assert!((a[0] - Complex64::from_polar(1.0, -0.3 * t)).norm() < 1e-12);
        assert_eq!(a[1].norm() + a[2].norm(), 0.0);
    }
    let rwa = evolve_rwa(&m, &path, &DriveSchedule::tracked(0.0), [c(1.0), c(0.0)], &StepControl::default(), &DynamicsOptions::default()).unwrap();
    assert!(rwa.populations.iter().all(|p| p[0] == 1.0 && p[1] == 0.0));
}

#[test]
fn rwa_with_constant_kappa_is_a_rabi_rotation() {
    let (g, f, v) = (1.0, 0.5, 1e-3);
    let m = rotating_toy([0.0, 5.0, 1.0], g);
    let kappa = v * f * g / 5.0;
    let horizon = FRAC_PI_4 / kappa;
    let path = ParamPath::uniform(Curve::Line { from: vec![0.0], to: vec![v * horizon] }, horizon).unwrap();
    let rec = evolve_rwa(&m, &path, &DriveSchedule::tracked(f), [c(1.0), c(0.0)], &StepControl::default(), &DynamicsOptions::default()).unwrap();
    for (t, p) in rec.times.iter().zip(&rec.populations) {
        assert!((p[1] - (kappa * t).sin().powi(2)).abs() < 1e-6, "t = {t}");
    }
    assert!(rec.max_norm_defect() <= 1e-6);
    assert_relative_eq!(rec.final_populations()[1], 0.5, epsilon = 1e-6);
}

#[test]
fn full_integrator_converges_at_fourth_order() {
    let g = 0.05;
    let h0 = DMatrix::from_diagonal(&DVector::from_column_slice(&[0.0, 0.5, 1.0]));
    let mut hp = DMatrix::zeros(3, 3);
    hp[(0, 2)] = g;
    hp[(2, 0)] = g;
    let m = MatrixModel::constant(vec!["x".into()], h0, hp, RoleMap::new(0, vec![1], 2)).unwrap();
    let path = ParamPath::uniform(Curve::Point(vec![0.0]), 20.0).unwrap();
    let finals: Vec<Vec<Complex64>> = [40, 80, 160]
        .iter()
        .map(|&n| {
            let ctrl = StepControl { steps_per_period: n, tolerance: 1.0, max_halvings: 0, samples_per_cycle: 1 };
            let r = evolve_full(&m, &path, &DriveSchedule::tracked(1.0), &[c(1.0), c(0.0), c(0.0)], &ctrl, &DynamicsOptions::default()).unwrap();
            r.amplitudes.last().unwrap().clone()
        })
        .collect();
    let diff = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let ratio = diff(&finals[0], &finals[1]) / diff(&finals[1], &finals[2]);
    assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn zero_length_path_is_the_identity() {
    let m = LambdaModel::new(lambda_params(0.01)).unwrap();
    let path = ParamPath::uniform(Curve::Point(vec![1.0, 0.0]), 10.0).unwrap();
    let psi = [c(0.6), Complex64::new(0.0, 0.8)];
    let rec = evolve_geometric(&m, &path, 0.01, psi, &SegmentControl::default(), &DynamicsOptions::default()).unwrap();
    assert_eq!(*rec.rotating.last().unwrap(), psi);
    assert_eq!(gamma_line(&m, &path, 0.01, &DynamicsOptions::default()).unwrap(), 0.0);
}

#[test]
fn quarter_turn_transfers_everything() {
    // Γ = −π·dℰ/Λ = −π/2
    let p = lambda_params(0.5);
    let s = LambdaSchedule::circle(p, 1.0, 100.0, 1).unwrap();
    let m = LambdaModel::new(p).unwrap();
    let rec = evolve_geometric(&m, &s.path, p.field, [c(1.0), c(0.0)], &SegmentControl::default(), &DynamicsOptions::default()).unwrap();
    let fin = rec.final_populations();
    assert!(fin[0] < 1e-9 && (fin[1] - 1.0).abs() < 1e-9);
    assert_relative_eq!(rec.final_gamma(), -FRAC_PI_2, max_relative = 1e-9);
}

#[test]
fn repeated_cycles_compose_to_one_rotation() {
    let p = lambda_params(0.03);
    let opts = DynamicsOptions::default();
    let m = LambdaModel::new(p).unwrap();
    let one = LambdaSchedule::circle(p, 1.0, 100.0, 1).unwrap();
    let gamma = gamma_line(&m, &one.path, p.field, &opts).unwrap();
    for n in [1, 4, 7] {
        let path = one.path.with_cycles(n).unwrap();
        let rec = evolve_geometric(&m, &path, p.field, [c(1.0), c(0.0)], &SegmentControl::default(), &opts).unwrap();
        let a = rec.rotating.last().unwrap();
        let ng = n as f64 * gamma;
        assert!((a[0] - c(ng.cos())).norm() < 1e-9, "n = {n}");
        assert!((a[1] - c(ng.sin())).norm() < 1e-9, "n = {n}");
    }
}

#[test]
fn geometric_propagation_ignores_timing() {
    let p = lambda_params(0.02);
    let opts = DynamicsOptions::default();
    let m = LambdaModel::new(p).unwrap();
    let base = LambdaSchedule::circle(p, 1.3, 100.0, 2).unwrap().path;
    let run = |path: &ParamPath| evolve_geometric(&m, path, p.field, [c(1.0), c(0.0)], &SegmentControl::default(), &opts).unwrap();
    let a = run(&base);
    for other in [base.with_period(37.0).unwrap(), base.with_timing(Timing::Eased { strength: 0.6 }).unwrap()] {
        let b = run(&other);
        assert_eq!(a.rotating, b.rotating);
        assert_eq!(a.gamma_accumulated, b.gamma_accumulated);
        assert_eq!(gamma_line(&m, &base, p.field, &opts).unwrap(), gamma_line(&m, &other, p.field, &opts).unwrap());
    }
}

#[test]
fn segment_doubling_is_converged() {
    // four levels with smooth two-parameter mixing
    let h0: MatrixFn = Arc::new(|l: &[f64]| {
        let mut h = DMatrix::from_diagonal(&DVector::from_column_slice(&[0.0, 3.0, 1.0, 4.5]));
        let pairs = [(0, 1, 0.4 * l[0]), (1, 2, 0.3 * l[1]), (2, 3, 0.2 * l[0] * l[1]), (0, 3, 0.25 * l[1].sin())];
        for (i, j, v) in pairs {
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
        h
    });
    let hp: MatrixFn = Arc::new(|_: &[f64]| {
        let mut h = DMatrix::zeros(4, 4);
        for (i, j, v) in [(0, 1, 1.0), (1, 2, 0.7), (0, 3, 0.5), (2, 3, -0.4)] {
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
        h
    });
    let m = MatrixModel::new(vec!["x".into(), "y".into()], 4, h0, hp, RoleMap::new(0, vec![2, 3], 1)).unwrap();
    let curve = Curve::Ellipse { center: vec![0.3, -0.2], cos_amp: vec![0.8, 0.1], sin_amp: vec![-0.2, 0.9] };
    let path = ParamPath::new(curve, 10.0, 3, Timing::Uniform).unwrap();
    let opts = DynamicsOptions::default();
    let rec = evolve_geometric(&m, &path, 0.3, [c(1.0), c(0.0)], &SegmentControl::default(), &opts).unwrap();
    let n = (1.0 / rec.diagnostics.step).round() as usize;
    let finer = SegmentControl { segments: 2 * n, max_doublings: 0, tolerance: 1.0 };
    let rec2 = evolve_geometric(&m, &path, 0.3, [c(1.0), c(0.0)], &finer, &opts).unwrap();
    let (a, b) = (rec.rotating.last().unwrap(), rec2.rotating.last().unwrap());
    assert!((a[0] - b[0]).norm().max((a[1] - b[1]).norm()) <= 1e-8);
    assert!(rec.final_gamma().abs() > 1e-3);
}

#[test]
fn circle_around_the_lambda_degeneracy() {
    let opts = DynamicsOptions::default();
    for (field, radius) in [(0.01, 1.0), (0.02, 0.5), (0.005, 3.0)] {
        let p = lambda_params(field);
        let m = LambdaModel::new(p).unwrap();
        let s = LambdaSchedule::circle(p, radius, 50.0, 1).unwrap();
        let g = gamma_line(&m, &s.path, field, &opts).unwrap();
        assert_relative_eq!(g, -PI * field / radius, max_relative = 1e-9);
    }
}

#[test]
fn surface_integral_examples() {
    let p = lambda_params(0.01);
    let m = LambdaModel::new(p).unwrap();
    let opts = DynamicsOptions::default();
    let flat = SurfacePatch::Star {
        boundary: Curve::Ellipse { center: vec![1.0, 1.0], cos_amp: vec![0.3, 0.3], sin_amp: vec![0.0, 0.0] },
        center: vec![1.0, 1.0],
    };
    assert_eq!(gamma_surface(&m, &flat, p.field, &SurfaceControl::default(), &opts).unwrap(), 0.0);

    let (inner, outer, sweep) = (0.5, 1.5, 1.9);
    let sector = SurfacePatch::AnnularSector { center: vec![0.0, 0.0], inner, outer, start: -0.4, sweep };
    let closed = -p.coupling() * (sweep / 2.0) * (1.0 / outer - 1.0 / inner);
    let s = gamma_surface(&m, &sector, p.field, &SurfaceControl::default(), &opts).unwrap();
    assert_relative_eq!(s, closed, max_relative = 1e-3);
    let line = gamma_line(&m, &ParamPath::uniform(sector.boundary(), 1.0).unwrap(), p.field, &opts).unwrap();
    assert_relative_eq!(line, closed, max_relative = 1e-9);

    let around = SurfacePatch::Star { boundary: Curve::circle([0.0, 0.0], 1.0, 0.0), center: vec![0.0, 0.0] };
    assert!(gamma_surface(&m, &around, p.field, &SurfaceControl::default(), &opts).is_err());
}

#[test]
fn adiabaticity_examples() {
    let p = lambda_params(0.01);
    let m = LambdaModel::new(p).unwrap();
    let opts = DynamicsOptions::default();
    let still = ParamPath::uniform(Curve::Point(vec![1.0, 0.3]), 10.0).unwrap();
    let r = adiabaticity_report(&m, &still, &DriveSchedule::tracked(0.0), 16, &opts).unwrap();
    assert_eq!((r.nonadiabatic_max, r.offresonance_max), (0.0, 0.0));
    assert_eq!(r.flag(), ValidityFlag::Ok);

    let drive = DriveSchedule::fixed(0.01, 49.0);
    let slow = LambdaSchedule::circle(p, 1.0, 400.0, 1).unwrap().path;
    let fast = slow.with_period(200.0).unwrap();
    let a = adiabaticity_report(&m, &slow, &drive, 33, &opts).unwrap();
    let b = adiabaticity_report(&m, &fast, &drive, 33, &opts).unwrap();
    assert_relative_eq!(b.nonadiabatic_max, 2.0 * a.nonadiabatic_max, max_relative = 1e-9);
    assert_relative_eq!(b.offresonance_max, a.offresonance_max, max_relative = 1e-12);
}

#[test]
fn tracked_frequency_matches_the_resonance_rule() {
    let p = lambda_params(0.01);
    let m = LambdaModel::new(p).unwrap();
    let opts = DynamicsOptions::default();
    let path = LambdaSchedule::circle(p, 1.0, 300.0, 1).unwrap().path;
    let rep = adiabaticity_report(&m, &path, &DriveSchedule::tracked(p.field), 9, &opts).unwrap();
    for probe in &rep.probes {
        let w = resonant_omega_with(&m, &path.at(probe.time), &path.velocity(probe.time), p.field, StarkRule::Dressed, &sopts()).unwrap();
        assert_relative_eq!(probe.omega, w, max_relative = 1e-12);
    }
}

#[test]
fn fig2_regime_is_adiabatic() {
    let pot = DeltaWellPotential::fig2();
    let opts = DynamicsOptions::default();
    let path = DepthPath::in_energy_units(&pot, 0.024, 0.037, 1e-2, 1);
    let (m, pp, drive) = as_model(&pot, &path, 1e-4, 0.99, &opts).unwrap();
    let r = adiabaticity_report(&m, &pp, &drive, 32, &opts).unwrap();
    assert!(r.nonadiabatic_max < 0.2 && r.offresonance_max < 0.2);
    let rwa = evolve_rwa(&m, &pp, &drive, [c(1.0), c(0.0)], &StepControl::default(), &opts).unwrap();
    let geo = evolve_geometric(&m, &pp, 1e-4, [c(1.0), c(0.0)], &SegmentControl::default(), &opts).unwrap();
    let (a, b) = (rwa.rotating.last().unwrap(), geo.rotating.last().unwrap());
    assert!((a[0] - b[0]).norm().max((a[1] - b[1]).norm()) <= 1e-3);
}

#[test]
fn sequential_and_parallel_agree() {
    let p = lambda_params(0.01);
    let m = LambdaModel::new(p).unwrap();
    let path = LambdaSchedule::circle(p, 1.0, 300.0, 1).unwrap().path;
    let par = DynamicsOptions { exec: georabi::Exec::Parallel, ..Default::default() };
    let seq = DynamicsOptions { exec: georabi::Exec::Sequential, ..Default::default() };
    let a = evolve_geometric(&m, &path, p.field, [c(1.0), c(0.0)], &SegmentControl::default(), &par).unwrap();
    let b = evolve_geometric(&m, &path, p.field, [c(1.0), c(0.0)], &SegmentControl::default(), &seq).unwrap();
    assert_eq!(a.rotating, b.rotating);
}

fn closed_curve() -> impl Strategy<Value = Curve> {
    prop_oneof![
        ([-1.0f64..1.0, -1.0f64..1.0], [0.1f64..1.0, -1.0f64..1.0], [-1.0f64..1.0, 0.1f64..1.0]).prop_map(|(c, a, b)| Curve::Ellipse {
            center: c.to_vec(),
            cos_amp: a.to_vec(),
            sin_amp: b.to_vec()
        }),
        prop::collection::vec(0.5f64..1.5, 5..9).prop_map(|radii| {
            let n = radii.len();
            let knots = radii
                .iter()
                .enumerate()
                .map(|(k, r)| {
                    let phi = TAU * k as f64 / n as f64;
                    vec![r * phi.cos(), r * phi.sin()]
                })
                .collect();
            Curve::Spline(SplineCurve::new(knots, true).unwrap())
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn paths_close_and_velocities_match_positions(curve in closed_curve(), period in 0.5f64..50.0, strength in -0.8f64..0.8) {
        let path = ParamPath::new(curve, period, 1, Timing::Eased { strength }).unwrap();
        let start = path.at(0.0);
        let end = path.at(period);
        prop_assert!(start.iter().zip(&end).all(|(a, b)| (a - b).abs() <= 1e-10));
        for k in 0..16 {
            let t = period * (k as f64 + 0.37) / 16.0;
            let h = 1e-5 * period;
            let v = path.velocity(t);
            let (a, b) = (path.at(t - h), path.at(t + h));
            let scale = v.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-3);
            for d in 0..2 {
                let fd = (b[d] - a[d]) / (2.0 * h);
                prop_assert!((fd - v[d]).abs() <= 1e-6 * scale, "t = {t}: {fd} vs {}", v[d]);
            }
        }
    }

    #[test]
    fn evolution_preserves_the_norm(field in 0.002f64..0.02, radius in 0.5f64..2.0, theta in 0.0f64..TAU) {
        let p = lambda_params(field);
        let m = LambdaModel::new(p).unwrap();
        let path = LambdaSchedule::circle(p, radius, 20.0, 1).unwrap().path;
        let psi = [c(theta.cos()), Complex64::new(0.0, theta.sin())];
        let opts = DynamicsOptions::default();
        let geo = evolve_geometric(&m, &path, field, psi, &SegmentControl::default(), &opts).unwrap();
        prop_assert!(geo.max_norm_defect() <= 1e-12);
        let rwa = evolve_rwa(&m, &path, &DriveSchedule::tracked(field), psi, &StepControl::default(), &opts).unwrap();
        prop_assert!(rwa.max_norm_defect() <= 1e-6);
    }
}
