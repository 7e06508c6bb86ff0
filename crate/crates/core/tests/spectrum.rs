use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use approx::assert_relative_eq;
use georabi::lambda::{LambdaModel, LambdaParams};
use georabi::spectrum::*;
use georabi::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn opts() -> SpectrumOptions {
    SpectrumOptions::default()
}

fn lambda_params(epsilon: f64, delta: f64) -> LambdaParams {
    LambdaParams { e_g: 0.0, e_e: 50.0, epsilon, delta, dipole: 1.0, field: 0.01, beta_pol: 0.0 }
}

/// `H₀(λ) = A + λ₀B + λ₁C` from seeded entries.
fn affine_model(n: usize, entries: &[f64]) -> (MatrixModel, [DMatrix<f64>; 3]) {
    let sym = |offset: usize| {
        let mut m = DMatrix::zeros(n, n);
        let mut k = offset;
        for i in 0..n {
            for j in i..n {
                m[(i, j)] = entries[k % entries.len()];
                m[(j, i)] = m[(i, j)];
                k += 1;
            }
        }
        m
    };
    let mut a = sym(0);
    for i in 0..n {
        a[(i, i)] += 3.0 * i as f64;
    }
    let b = sym(7);
    let c = sym(13);
    let (a2, b2, c2) = (a.clone(), b.clone(), c.clone());
    let h0: MatrixFn = Arc::new(move |l: &[f64]| &a2 + &b2 * l[0] + &c2 * l[1]);
    let hp: MatrixFn = Arc::new(move |_: &[f64]| DMatrix::identity(n, n));
    let roles = RoleMap::new(0, (1..n - 1).collect(), n - 1);
    (MatrixModel::new(vec!["x".into(), "y".into()], n, h0, hp, roles).unwrap(), [a, b, c])
}

#[test]
fn diagonal_hamiltonian_gives_identity_frame() {
    let h = DMatrix::from_diagonal(&DVector::from_column_slice(&[0.0, 1.0, 10.0]));
    let m = MatrixModel::constant(vec!["x".into()], h, DMatrix::zeros(3, 3), RoleMap::new(0, vec![1], 2)).unwrap();
    let f = eigenframe(&m, &[0.3], None, &opts()).unwrap();
    assert_eq!(f.energies, vec![0.0, 1.0, 10.0]);
    for (i, s) in f.states.iter().enumerate() {
        let mut e = DVector::zeros(3);
        e[i] = 1.0;
        assert!((s - e).norm() < 1e-15);
    }
}

#[test]
fn tunnelling_block_splits_symmetrically() {
    let h = lambda_params(0.0, 0.8).h0();
    let m = MatrixModel::constant(vec!["x".into()], h, DMatrix::zeros(3, 3), RoleMap::new(0, vec![1], 2)).unwrap();
    let f = eigenframe(&m, &[0.0], None, &opts()).unwrap();
    assert_relative_eq!(f.energies[0], -0.4, epsilon = 1e-14);
    assert_relative_eq!(f.energies[1], 0.4, epsilon = 1e-14);
    let lower = &f.states[0];
    let upper = &f.states[1];
    assert_relative_eq!(lower[0].abs(), FRAC_1_SQRT_2, epsilon = 1e-14);
    assert_relative_eq!(lower[0] * lower[1], -0.5, epsilon = 1e-14);
    assert_relative_eq!(upper[0] * upper[1], 0.5, epsilon = 1e-14);
}

#[test]
fn lambda_hamiltonian_at_unit_splitting_and_tunnelling() {
    let p = lambda_params(1.0, 1.0);
    let m = MatrixModel::constant(vec!["x".into()], p.h0(), DMatrix::zeros(3, 3), RoleMap::new(0, vec![1], 2)).unwrap();
    let f = eigenframe(&m, &[0.0], None, &opts()).unwrap();
    let half = 2f64.sqrt() / 2.0;
    assert_relative_eq!(f.energies[0], -half, epsilon = 1e-14);
    assert_relative_eq!(f.energies[1], half, epsilon = 1e-14);
    // g₋ = (cos α, −sin α): cos²α − sin²α = cos 2α
    let g = &f.states[0];
    assert_relative_eq!(g[0] * g[0] - g[1] * g[1], FRAC_1_SQRT_2, epsilon = 1e-14);
}

#[test]
fn degenerate_levels_are_rejected() {
    let h = DMatrix::from_diagonal(&DVector::from_column_slice(&[0.0, 1.0, 1.0]));
    let m = MatrixModel::constant(vec!["x".into()], h, DMatrix::zeros(3, 3), RoleMap::new(0, vec![1], 2)).unwrap();
    assert!(matches!(eigenframe(&m, &[0.0], None, &opts()), Err(Error::Degenerate { i: 1, j: 2, .. })));
}

#[test]
fn asymmetric_hamiltonian_is_rejected() {
    let mut h = DMatrix::from_diagonal(&DVector::from_column_slice(&[0.0, 1.0, 2.0]));
    h[(0, 1)] = 0.1;
    let m = MatrixModel::constant(vec!["x".into()], h, DMatrix::zeros(3, 3), RoleMap::new(0, vec![1], 2)).unwrap();
    assert!(matches!(eigenframe(&m, &[0.0], None, &opts()), Err(Error::Model(_))));
}

#[test]
fn constant_model_has_zero_derivatives_and_couplings() {
    let p = lambda_params(0.7, 0.2);
    let m = MatrixModel::constant(vec!["x".into(), "y".into()], p.h0(), DMatrix::zeros(3, 3), RoleMap::new(0, vec![1], 2)).unwrap();
    for n in 0..3 {
        for d in dphi_dparam(&m, &[0.1, 0.2], n, 1e-5, None, &opts()).unwrap() {
            assert_eq!(d.norm(), 0.0);
        }
    }
    let f = eigenframe(&m, &[0.1, 0.2], None, &opts()).unwrap();
    let t = coupling_tensor(&m, &f, &opts()).unwrap();
    assert!(t.entries.iter().all(|e| e.abs().max() == 0.0));
}

#[test]
fn mixing_angle_derivative_maps_lower_state_onto_upper() {
    // λ = α with (ε, δ) = (cos 2α, sin 2α)
    let h0: MatrixFn = Arc::new(|l: &[f64]| lambda_params((2.0 * l[0]).cos(), (2.0 * l[0]).sin()).h0());
    let hp: MatrixFn = Arc::new(|_: &[f64]| DMatrix::zeros(3, 3));
    let m = MatrixModel::new(vec!["alpha".into()], 3, h0, hp, RoleMap::new(0, vec![1], 2))
        .unwrap()
        .with_gauge(|l| {
            let (s, c) = l[0].sin_cos();
            DMatrix::from_row_slice(3, 3, &[c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0])
        });
    for alpha in [0.1, 0.4, 1.3] {
        let f = eigenframe(&m, &[alpha], None, &opts()).unwrap();
        let d = dphi_dparam(&m, &[alpha], 0, 1e-5, None, &opts()).unwrap();
        assert_relative_eq!(f.states[1].dot(&d[0]), -1.0, epsilon = 1e-8);
    }
}

#[test]
fn lambda_coupling_along_tunnelling_is_half_inverse_splitting() {
    for big_lambda in [0.5, 2.0, 7.0] {
        let m = LambdaModel::new(lambda_params(big_lambda, 0.0)).unwrap();
        let f = eigenframe(&m, &[big_lambda, 0.0], None, &opts()).unwrap();
        let t = coupling_tensor(&m, &f, &opts()).unwrap();
        assert_relative_eq!(t.entries[1][(0, 1)], 1.0 / (2.0 * big_lambda), max_relative = 1e-8);
        assert_relative_eq!(t.entries[1][(1, 0)], -1.0 / (2.0 * big_lambda), max_relative = 1e-8);
        assert!(t.entries[0].abs().max() < 1e-8);
    }
}

#[test]
fn richardson_ratio_of_central_differences() {
    let (m, _) = affine_model(4, &[0.3, -0.2, 0.5, 0.1, 0.7, -0.4, 0.25, 0.6, -0.35, 0.15, 0.45]);
    let l = [0.2, -0.1];
    let h = 0.05;
    let d: Vec<Vec<DVector<f64>>> = [h, h / 2.0, h / 4.0]
        .iter()
        .map(|&s| dphi_dparam(&m, &l, 1, s, None, &opts()).unwrap())
        .collect();
    for (mu, ((a, b), c)) in d[0].iter().zip(&d[1]).zip(&d[2]).take(2).enumerate() {
        let ratio = (a - b).norm() / (b - c).norm();
        assert!((3.5..=4.5).contains(&ratio), "μ = {mu}: ratio {ratio}");
    }
}

#[test]
fn tracking_follows_a_level_crossing_by_overlap() {
    // two uncoupled levels cross at x = 0.5; a weak third mixes nothing
    let h0: MatrixFn = Arc::new(|l: &[f64]| DMatrix::from_diagonal(&DVector::from_column_slice(&[l[0], 1.0 - l[0], 5.0])));
    let hp: MatrixFn = Arc::new(|_: &[f64]| DMatrix::zeros(3, 3));
    let m = MatrixModel::new(vec!["x".into()], 3, h0, hp, RoleMap::new(0, vec![2], 1)).unwrap();
    let pts: Vec<Vec<f64>> = [0.1, 0.3, 0.45, 0.55, 0.7, 0.9].iter().map(|&x| vec![x]).collect();
    let frames = track(&m, &pts, None, georabi::Exec::Sequential, &opts()).unwrap();
    for f in &frames {
        assert_relative_eq!(f.energies[0], f.lambda[0], epsilon = 1e-14);
        assert_relative_eq!(f.states[0][0], 1.0, epsilon = 1e-14);
    }
}

fn random_model() -> impl Strategy<Value = (usize, Vec<f64>, [f64; 2])> {
    (2usize..=10, prop::collection::vec(-1.0f64..1.0, 30..60), [-0.5f64..0.5, -0.5f64..0.5])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn frames_are_orthonormal_eigenbases((n, entries, l) in random_model()) {
        let (m, _) = affine_model(n, &entries);
        let h = m.h0_at(&l);
        let f = match eigenframe(&m, &l, None, &opts()) {
            Ok(f) => f,
            Err(Error::Degenerate { .. }) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let scale = h.norm();
        for i in 0..n {
            prop_assert!(f.energies.windows(2).all(|w| w[0] <= w[1]));
            let r = &h * &f.states[i] - &f.states[i] * f.energies[i];
            prop_assert!(r.norm() <= 1e-10 * scale);
            for j in 0..n {
                let o = f.states[i].dot(&f.states[j]) - if i == j { 1.0 } else { 0.0 };
                prop_assert!(o.abs() <= 1e-10);
            }
        }
        let near = [l[0] + 1e-3, l[1] - 1e-3];
        if let Ok(g) = eigenframe(&m, &near, Some(&f), &opts()) {
            for i in 0..n {
                prop_assert!(g.states[i].dot(&f.states[i]) > 0.0);
            }
        }
    }

    #[test]
    fn couplings_obey_hellmann_feynman((n, entries, l) in random_model()) {
        let (m, [_, b, c]) = affine_model(n, &entries);
        let Ok(f) = eigenframe(&m, &l, None, &opts()) else { return Ok(()) };
        let min_gap = f.energies.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        prop_assume!(min_gap > 0.05);
        let t = coupling_tensor(&m, &f, &opts()).unwrap();
        for (mu, dh) in [b, c].iter().enumerate() {
            let e = &t.entries[mu];
            for i in 0..n {
                prop_assert!(e[(i, i)].abs() <= 1e-9);
                for j in 0..n {
                    prop_assert!((e[(i, j)] + e[(j, i)]).abs() <= 1e-8);
                    if i != j {
                        let hf = f.states[i].dot(&(dh * &f.states[j])) / (f.energies[j] - f.energies[i]);
                        let tol = 1e-6 * hf.abs().max(1e-3);
                        prop_assert!((e[(i, j)] - hf).abs() <= tol, "({i},{j}) fd {} hf {}", e[(i, j)], hf);
                    }
                }
            }
        }
    }
}
