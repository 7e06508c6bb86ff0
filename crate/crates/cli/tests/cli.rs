use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use georabi_cli::config::*;
use georabi_cli::table::read_body;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_georabi"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).env_remove("GEORABI_THREADS").output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Column `name` of a written table as numbers.
fn column(path: &Path, name: &str) -> Vec<f64> {
    let body = read_body(path).unwrap();
    let i = body[0].iter().position(|c| c == name).unwrap_or_else(|| panic!("{name} not in {:?}", body[0]));
    body[1..].iter().map(|r| r[i].parse().unwrap()).collect()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.json");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const MINIMAL_LAMBDA: &str = r#"{
  "model": {"kind": "lambda", "e_e": 50.0},
  "path": {"kind": "circle", "center": [0.0, 0.0], "radius": 1.0, "omega": 0.02},
  "drive": {"amplitude": 0.01}
}"#;

#[test]
fn minimal_config_round_trips() {
    let cfg = parse_config(MINIMAL_LAMBDA).unwrap();
    let canon = canonical_json(&cfg);
    let again = parse_config(&canon).unwrap();
    assert_eq!(cfg, again);
    assert_eq!(canon, canonical_json(&again));
    assert_eq!(config_hash(&cfg), config_hash(&again));
}

#[test]
fn misspelled_key_is_named() {
    let text = r#"{"model": {"kind": "deltawell", "a": 44, "gama_left": 1, "gamma_right": 0.5, "beta": 0.2},
        "path": {"kind": "static", "omega": 0.01}, "drive": {"amplitude": 1e-4}}"#;
    let err = parse_config(text).unwrap_err().to_string();
    assert!(err.contains("gama_left") && err.contains("model"), "{err}");
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), text);
    let o = run_in(dir.path(), &["--config", &cfg, "spectrum"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gama_left"));
}

#[test]
fn field_errors_carry_their_path() {
    let nested = MINIMAL_LAMBDA.replace(r#""drive": {"amplitude": 0.01}"#, r#""drive": {"amplitude": 0.01}, "run": {"cycels": 2}"#);
    let err = parse_config(&nested).unwrap_err().to_string();
    assert!(err.contains("run") && err.contains("cycels"), "{err}");
    let missing = r#"{"model": {"kind": "deltawell", "a": 44, "gamma_left": 1, "gamma_right": 0.5},
        "path": {"kind": "static", "omega": 0.01}, "drive": {"amplitude": 1e-4}}"#;
    let err = parse_config(missing).unwrap_err().to_string();
    assert!(err.contains("beta") && err.contains("model"), "{err}");
    let bad = MINIMAL_LAMBDA.replace("\"omega\": 0.02", "\"omega\": 0.0");
    assert!(parse_config(&bad).unwrap_err().to_string().contains("path.omega"));
    let huge = MINIMAL_LAMBDA.replace("\"radius\": 1.0", "\"radius\": 1e999");
    assert!(parse_config(&huge).is_err());
    let wrong_dim = MINIMAL_LAMBDA.replace("[0.0, 0.0]", "[0.0, 0.0, 0.0]");
    assert!(parse_config(&wrong_dim).unwrap_err().to_string().contains("path.center"));
    assert!(matches!(parse_config("{"), Err(georabi_cli::error::CliError::Config(_))));
}

#[test]
fn fig2_preset_pins_the_constants() {
    let cfg = preset("fig2").unwrap();
    let ModelConfig::Deltawell { a, gamma_left, gamma_right, beta, .. } = cfg.model else { panic!() };
    assert_eq!((a, gamma_left), (44.0, 1.0));
    assert_eq!(gamma_right, 22.0 / a);
    assert_eq!(beta, 7.8 / a);
    let PathConfig::DepthEllipse { lambda_r, lambda_c, units, .. } = cfg.path else { panic!() };
    assert_eq!((lambda_r, lambda_c, units), (0.037, 0.024, DepthUnits::EnergyUnit));
    cfg.validate().unwrap();
    preset("lambda-circle").unwrap().validate().unwrap();
    assert!(preset("fig3").is_err());
}

#[test]
fn evolve_all_on_fig2_writes_every_table() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["--preset", "fig2", "--out", "res/f", "evolve", "--mode", "all"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for t in ["kappa_timeseries", "populations_full", "populations_rwa", "populations_geometric", "gamma_per_cycle", "adiabaticity"] {
        let p = dir.path().join(format!("res/f_{t}.csv"));
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.contains("# config_sha256: ") && text.contains("# units: hbar = 1, 2m = 1"), "{t}");
        assert!(text.contains(&format!("# table: {t}")));
        let body = read_body(&p).unwrap();
        assert!(body.len() > 1 && body.iter().all(|r| r.len() == body[0].len()), "{t}");
    }
    let g = column(&dir.path().join("res/f_gamma_per_cycle.csv"), "gamma_per_cycle");
    assert!(g[0] > 0.0);
    let im = column(&dir.path().join("res/f_kappa_timeseries.csv"), "kappa_re");
    assert!(im.iter().all(|v| v.abs() < 1e-20));
}

#[test]
fn geometric_cycles_follow_the_rotation_composition() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["--preset", "lambda-circle", "--cycles", "7", "--out", "g", "evolve", "--mode", "geometric"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let p = dir.path().join("g_gamma_per_cycle.csv");
    let gamma = column(&p, "gamma_per_cycle")[0];
    assert!((gamma + PI * 0.01).abs() <= 1e-6 * PI * 0.01);
    let geo = column(&p, "p2_geometric");
    for (n, p2) in geo.iter().enumerate() {
        assert!((p2 - (n as f64 * gamma).sin().powi(2)).abs() <= 1e-9);
    }
    let pg = dir.path().join("g_populations_geometric.csv");
    let p0 = column(&pg, "p0");
    let p2 = column(&pg, "p2");
    assert!((p0.last().unwrap() - (7.0 * gamma).cos().powi(2)).abs() <= 1e-9);
    assert!((p2.last().unwrap() - (7.0 * gamma).sin().powi(2)).abs() <= 1e-9);
    assert!(column(&p, "p2_full").iter().all(|v| v.is_nan()));
    assert!(!dir.path().join("g_populations_full.csv").exists());
}

#[test]
fn static_path_keeps_populations_constant() {
    let dir = TempDir::new().unwrap();
    let text = r#"{"model": {"kind": "deltawell", "a": 44, "gamma_left": 1, "gamma_right": 0.5, "beta": 0.17727272727272728},
        "path": {"kind": "static", "omega": 0.01}, "drive": {"amplitude": 1e-4}, "run": {"mode": "all"}}"#;
    let cfg = write_config(dir.path(), text);
    let o = run_in(dir.path(), &["--config", &cfg, "--out", "s", "evolve"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for (t, cols) in [("populations_full", vec!["p0_rot", "p2_rot"]), ("populations_rwa", vec!["p0", "p2"]), ("populations_geometric", vec!["p0", "p2"])] {
        let p = dir.path().join(format!("s_{t}.csv"));
        for c in cols {
            let v = column(&p, c);
            assert!(v.iter().all(|x| (x - v[0]).abs() <= 1e-6), "{t}/{c}");
        }
    }
    assert_eq!(column(&dir.path().join("s_gamma_per_cycle.csv"), "gamma_per_cycle")[0], 0.0);
}

#[test]
fn scaling_sweep_is_monotone_and_zero_path_gives_zero() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["--preset", "fig2", "--out", "sw", "gamma", "--sweep", "scale=0,0.25,0.5,0.75,1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let p = dir.path().join("sw_gamma_sweep.csv");
    assert_eq!(column(&p, "index"), vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    assert_eq!(column(&p, "scale"), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    let g = column(&p, "gamma_per_cycle");
    assert_eq!(g[0], 0.0);
    assert!(g.windows(2).all(|w| w[1] > w[0]), "{g:?}");
}

#[test]
fn lambda_radius_sweep_matches_closed_form_and_keeps_failed_rows() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["--preset", "lambda-circle", "--out", "r", "gamma", "--sweep", "radius=0.5,1,0,2,4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let p = dir.path().join("r_gamma_sweep.csv");
    let body = read_body(&p).unwrap();
    let r = column(&p, "radius");
    let g = column(&p, "gamma_per_cycle");
    assert_eq!(r, vec![0.5, 1.0, 0.0, 2.0, 4.0]);
    for i in [0, 1, 3, 4] {
        assert!((g[i] * r[i] + PI * 0.01).abs() <= 1e-6 * PI * 0.01, "row {i}: {}", g[i] * r[i]);
        assert_eq!(body[i + 1][body[0].len() - 2], "ok");
    }
    assert!(g[2].is_nan());
    assert_eq!(body[3][body[0].len() - 2], "error");
    assert!(!body[3].last().unwrap().is_empty());
}

#[test]
fn outputs_are_deterministic_and_thread_independent() {
    let dir = TempDir::new().unwrap();
    let args = |out: &'static str| ["--preset", "fig2", "--out", out, "gamma", "--sweep", "lambda_r=0.02,0.037;lambda_c=0.012,0.024"];
    let a = run_in(dir.path(), &args("a"));
    let b = bin().current_dir(dir.path()).args(args("b")).env("GEORABI_THREADS", "1").output().unwrap();
    assert!(a.status.success() && b.status.success());
    let ta = std::fs::read(dir.path().join("a_gamma_sweep.csv")).unwrap();
    let tb = std::fs::read(dir.path().join("b_gamma_sweep.csv")).unwrap();
    assert_eq!(ta, tb);
    assert_eq!(read_body(&dir.path().join("a_gamma_sweep.csv")).unwrap().len(), 5);

    let o = run_in(dir.path(), &["--preset", "lambda-circle", "--out", "c", "evolve"]);
    assert!(o.status.success());
    let first = std::fs::read(dir.path().join("c_populations_full.csv")).unwrap();
    let o = run_in(dir.path(), &["--preset", "lambda-circle", "--out", "c", "evolve"]);
    assert!(o.status.success());
    assert_eq!(first, std::fs::read(dir.path().join("c_populations_full.csv")).unwrap());
    assert!(!String::from_utf8(first).unwrap().contains("generated_unix"));

    let o = run_in(dir.path(), &["--preset", "lambda-circle", "--out", "d", "--stamp", "check"]);
    assert!(o.status.success());
    assert!(std::fs::read_to_string(dir.path().join("d_adiabaticity.csv")).unwrap().contains("# generated_unix: "));

    let bad = bin().current_dir(dir.path()).args(args("e")).env("GEORABI_THREADS", "zero").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn violated_validity_exits_three_unless_forced() {
    let dir = TempDir::new().unwrap();
    // mixing angle turns as fast as the doublet splitting
    let text = MINIMAL_LAMBDA.replace("\"omega\": 0.02", "\"omega\": 1.0");
    let cfg = write_config(dir.path(), &text);
    let o = run_in(dir.path(), &["--config", &cfg, "--out", "v", "check"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("--force"));
    assert!(std::fs::read_to_string(dir.path().join("v_adiabaticity.csv")).unwrap().contains("# flag: violated"));
    let o = run_in(dir.path(), &["--config", &cfg, "--out", "v", "--force", "check"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run_in(dir.path(), &["--config", &cfg, "--out", "w", "evolve", "--mode", "geometric"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!dir.path().join("w_populations_geometric.csv").exists());
}

#[test]
fn numerical_failure_exits_four() {
    let dir = TempDir::new().unwrap();
    let text = r#"{"model": {"kind": "matrix", "params": ["x"], "h0": [[0,0,0],[0,0,0],[0,0,1]], "hprime": [[0,1,0],[1,0,1],[0,1,0]],
        "roles": {"state0": 0, "auxiliary": [1], "state2": 2}},
        "path": {"kind": "static", "point": [0.0], "omega": 0.1}, "drive": {"amplitude": 1e-3}}"#;
    let cfg = write_config(dir.path(), text);
    let o = run_in(dir.path(), &["--config", &cfg, "spectrum"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn matrix_spectrum_lists_roles() {
    let dir = TempDir::new().unwrap();
    let text = r#"{"model": {"kind": "matrix", "params": ["x"], "h0": [[0,0,0],[0,3,0],[0,0,1]], "h0_gradient": [[[1,0,0],[0,0,0],[0,0,0]]],
        "hprime": [[0,1,0],[1,0,1],[0,1,0]], "roles": {"state0": 0, "auxiliary": [2], "state2": 1}},
        "path": {"kind": "static", "point": [0.5], "omega": 0.1}, "drive": {"amplitude": 1e-3}}"#;
    let cfg = write_config(dir.path(), text);
    let o = run_in(dir.path(), &["--config", &cfg, "--out", "m", "spectrum"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let body = read_body(&dir.path().join("m_spectrum.csv")).unwrap();
    assert_eq!(body[1], vec!["0", "5e-1", "state0"]);
    assert_eq!(body[2], vec!["1", "1e0", "state2"]);
    assert_eq!(body[3], vec!["2", "3e0", "auxiliary"]);
}

#[test]
fn lambda_subcommand_compares_closed_form() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["--preset", "lambda-circle", "--out", "l", "lambda"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let p = dir.path().join("l_lambda_comparison.csv");
    assert!(column(&p, "gamma_rel_diff")[1] <= 1e-6);
    let closed = column(&p, "a_e_closed_form")[1];
    assert!((column(&p, "a_e_full")[1] - closed).abs() <= 0.02);
    assert!((column(&p, "a_e_geometric")[1] - closed).abs() <= 1e-9);
    let o = run_in(dir.path(), &["--preset", "fig2", "lambda"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run_in(dir.path(), &["spectrum"]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), &["--preset", "nope", "spectrum"]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), &["--preset", "fig2", "gamma", "--sweep", "radius=1"]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), &["--preset", "fig2", "gamma", "--sweep", "scale=a"]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), &["--preset", "fig2", "--cycles", "0", "check"]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), &["--preset", "fig2", "frobnicate"]).status.code(), Some(2));
    let help = bin().args(["evolve", "--help"]).output().unwrap();
    assert!(String::from_utf8_lossy(&help.stdout).contains("p2_closed_form"));
}

#[test]
fn sweep_spec_parsing() {
    let axes = parse_sweep("scale=0:1:5; radius=1,2").unwrap();
    assert_eq!(axes[0].values, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    assert_eq!(axes[1].name, SweepParam::Radius);
    assert_eq!(georabi_cli::run::grid(&axes).len(), 10);
    assert_eq!(georabi_cli::run::grid(&axes)[1], vec![0.0, 2.0]);
    assert!(parse_sweep("").is_err());
    assert!(parse_sweep("scale=1:2").is_err());
    assert!(parse_sweep("size=1").is_err());
}
