use std::path::Path;
use std::process::{Command, Output};

use dirac_numerov_cli::csv;
use dirac_numerov_cli::manifest::RunManifest;

fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dirac-numerov"));
    cmd.args(args).env_remove("DIRAC_NUMEROV_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn manifest(path: &Path) -> RunManifest {
    RunManifest::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> csv::Parsed {
    csv::parse(&std::fs::read_to_string(path).unwrap())
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or_else(|_| panic!("not a number: {s:?}"))
}

fn is_fixed_scientific(s: &str) -> bool {
    let s = s.strip_prefix('-').unwrap_or(s);
    let Some((mantissa, exponent)) = s.split_once('e') else {
        return false;
    };
    let exponent = exponent.strip_prefix('-').unwrap_or(exponent);
    let b = mantissa.as_bytes();
    b.len() == 16
        && b[0].is_ascii_digit()
        && b[1] == b'.'
        && b[2..].iter().all(u8::is_ascii_digit)
        && !exponent.is_empty()
        && exponent.bytes().all(|c| c.is_ascii_digit())
}

#[test]
fn solve_three_dimensional_generalized_potential() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let out = run(&["solve", "--dimension", "3", "--ansatz", "2", "--output", path.to_str().unwrap()], &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&path);
    let r = m.results[0].result.as_ref().unwrap();
    assert!(r.found);
    assert!((r.epsilon_ev.unwrap() - -13.606).abs() < 1e-3);
    assert_eq!(m.tool_version, env!("CARGO_PKG_VERSION"));
    assert_eq!(m.config_echo.physical[0].dimension, 3);
}

#[test]
fn generalized_potential_in_five_dimensions_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let out = run(&["solve", "--dimension", "5", "--ansatz", "2", "--output", path.to_str().unwrap()], &[]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&path);
    let r = m.results[0].result.as_ref().unwrap();
    assert!(!r.found && r.eta_star.is_none());
    assert_eq!(r.scan_trace.len(), 2000);
}

#[test]
fn configuration_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad_key = dir.path().join("bad.conf");
    std::fs::write(&bad_key, "colour = blue\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["solve", "--dimension", "1", "--ansatz", "2"],
        vec!["solve", "--dimension", "3", "--scheme", "bogus"],
        vec!["solve", "--dimension", "3", "--eta-min", "0.9", "--eta-max", "0.8"],
        vec!["solve"],
        vec!["frobnicate"],
        vec!["solve", "--dimension", "3", "--config", bad_key.to_str().unwrap()],
        vec!["solve", "--dimension", "3", "--threads", "0"],
        vec!["profile", "--dimension", "3", "--quantity", "phi_plus", "--format", "json"],
    ];
    for args in cases {
        assert_eq!(code(&run(&args, &[])), 1, "{args:?}");
    }
    assert_eq!(code(&run(&["solve", "--dimension", "3"], &[("DIRAC_NUMEROV_THREADS", "lots")])), 1);
}

#[test]
fn manifest_is_deterministic_apart_from_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let read = |name: &str| {
        let path = dir.path().join(name);
        let out = run(
            &["solve", "--dimension", "4", "--ansatz", "1", "--scan-points", "400", "--output", path.to_str().unwrap()],
            &[],
        );
        assert_eq!(code(&out), 0);
        let mut m = manifest(&path);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(RunManifest::from_json(&m.to_json().unwrap()).unwrap(), m);
        m.results.iter_mut().for_each(|r| r.wall_time_ms = 0);
        (m.clone(), m.to_json().unwrap(), text)
    };
    let (a, a_text, raw) = read("a.json");
    let (b, b_text, _) = read("b.json");
    assert_eq!(a, b);
    assert_eq!(a_text, b_text);
    // Every reported energy carries its eigenvalue, grid and tolerances.
    for key in ["eta_star", "grid", "rho_min", "max_step", "root_tol", "mismatch_tol"] {
        assert!(raw.contains(&format!("\"{key}\"")), "{key}");
    }
}

#[test]
fn csv_output_format() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let out = run(
        &["scan", "--d-min", "3", "--d-max", "4", "--format", "csv", "--output", path.to_str().unwrap()],
        &[],
    );
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&path).unwrap();
    let first_data = text.lines().position(|l| !l.starts_with('#')).unwrap();
    assert!(first_data >= 2);
    let (meta, header, rows) = csv_rows(&path);
    assert!(meta.iter().any(|(k, v)| k == "tool" && v.starts_with("dirac-numerov")));
    assert_eq!(header[0], "dimension");
    assert_eq!(rows.len(), 2);
    let eta = header.iter().position(|h| h == "eta_star").unwrap();
    let eps = header.iter().position(|h| h == "epsilon_ev").unwrap();
    for row in &rows {
        assert!(is_fixed_scientific(&row[eta]), "{}", row[eta]);
        assert!(is_fixed_scientific(&row[eps]), "{}", row[eps]);
    }
    assert!((num(&rows[1][eps]) - -6.047).abs() < 1e-3);
}

#[test]
fn phi_plus_profile_overlays_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    let out = run(
        &["profile", "--dimension", "3", "--quantity", "phi_plus", "--stride", "7", "--output", path.to_str().unwrap()],
        &[],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (meta, header, rows) = csv_rows(&path);
    assert_eq!(header, vec!["rho", "phi_plus", "phi_plus_analytic"]);
    assert!(meta.iter().any(|(k, v)| k == "eta_source" && v == "ground"));
    let linf = rows
        .iter()
        .filter(|r| num(&r[0]) <= 20.0)
        .map(|r| (num(&r[1]) - num(&r[2])).abs())
        .fold(0.0, f64::max);
    assert!(linf <= 1e-3, "{linf}");
    assert!(rows.iter().all(|r| r.iter().all(|c| is_fixed_scientific(c))));
}

#[test]
fn f_and_g_profiles() {
    let dir = tempfile::tempdir().unwrap();
    for q in ["F", "G"] {
        let path = dir.path().join(format!("{q}.csv"));
        let out = run(
            &["profile", "--dimension", "4", "--quantity", q, "--stride", "50", "--output", path.to_str().unwrap()],
            &[],
        );
        assert_eq!(code(&out), 0);
        let (_, header, rows) = csv_rows(&path);
        assert_eq!(header, vec!["rho", q]);
        assert!(rows.iter().any(|r| num(&r[1]).abs() > 1e-3));
    }
}

#[test]
fn effective_potential_has_no_well_away_from_the_core() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.csv");
    let out = run(
        &[
            "profile",
            "--dimension",
            "5",
            "--ansatz",
            "2",
            "--quantity",
            "effective_potential",
            "--eta",
            "0.99",
            "--output",
            path.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(code(&out), 0);
    let (meta, _, rows) = csv_rows(&path);
    assert!(meta.iter().any(|(k, v)| k == "no_turning_point" && v.contains("singular_core")));
    // Allowed only inside the attractive core next to the cutoff.
    let outer: Vec<f64> = rows.iter().filter(|r| num(&r[0]) > 0.01).map(|r| num(&r[1])).collect();
    assert!(outer.len() > 40_000);
    assert!(outer.iter().all(|&v| v < 0.0));
}

#[test]
fn mismatch_scan_in_four_dimensions_is_all_sentinels() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    let out = run(
        &[
            "profile",
            "--dimension",
            "4",
            "--ansatz",
            "2",
            "--quantity",
            "mismatch_scan",
            "--scan-points",
            "200",
            "--output",
            path.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(code(&out), 0);
    let (_, header, rows) = csv_rows(&path);
    assert_eq!(header, vec!["eta", "delta", "status"]);
    assert_eq!(rows.len(), 200);
    assert!(rows.iter().all(|r| r[1] == "NaN" && r[2].starts_with("no_turning_point:")));
}

#[test]
fn flags_override_config_file_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "# test run\ndimension = 3\nscan_points = 300\nroot-tol = 1e-11\n").unwrap();
    let path = dir.path().join("m.json");
    let out = run(
        &["solve", "--config", conf.to_str().unwrap(), "--scan-points", "400", "--output", path.to_str().unwrap()],
        &[],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&path);
    let s = m.config_echo.settings;
    assert_eq!(m.config_echo.physical[0].dimension, 3);
    assert_eq!(s.scan_points, 400);
    assert_eq!(s.root_tol, 1e-11);
    assert_eq!(s.mismatch_tol, dirac_numerov::SolverSettings::default().mismatch_tol);
}

#[test]
fn thread_environment_variable_overrides_flag() {
    let args = ["solve", "--dimension", "3", "--scan-points", "300", "--threads", "0"];
    assert_eq!(code(&run(&args, &[("DIRAC_NUMEROV_THREADS", "2")])), 0);
    let args = ["solve", "--dimension", "3", "--scan-points", "300", "--threads", "2"];
    assert_eq!(code(&run(&args, &[("DIRAC_NUMEROV_THREADS", "0")])), 1);
}

#[test]
fn table1_and_selftest_pass() {
    let out = run(&["table1"], &[]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(text.contains("-13.606") && text.contains("-1.111"));
    assert_eq!(code(&run(&["selftest"], &[])), 0);
}
