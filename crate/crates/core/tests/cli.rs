use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use magblock::cli::commands::{run, Command as Cmd};
use magblock::cli::{resolve_config, ConfigBuilder};

fn magblock(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magblock"))
        .args(args)
        .env_remove("MAGBLOCK_WORKERS")
        .output()
        .expect("spawn magblock")
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn data_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let out = out.to_str().unwrap();
    assert_eq!(magblock(&["sweep-delta", "--n_points", "1", "--output", out]).status.code(), Some(2));
    assert_eq!(magblock(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(magblock(&["evolve", "--bogus", "1"]).status.code(), Some(2));
    assert_eq!(magblock(&["dephasing", "--gamma_p_list", "0,-1"]).status.code(), Some(2));
    assert_eq!(magblock(&["g2tau", "--kappa_c", "0"]).status.code(), Some(2));
    assert_eq!(magblock(&["optimize", "--config", "/nonexistent/cfg"]).status.code(), Some(2));
    let r = magblock(&["optimize", "--delta_min", "100", "--delta_max", "101", "--output", out]);
    assert_eq!(r.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&r.stderr).contains("no interior minimum"));
    assert_eq!(magblock(&["--help"]).status.code(), Some(0));
}

#[test]
fn workers_env_is_validated() {
    let r = Command::new(env!("CARGO_BIN_EXE_magblock"))
        .args(["optimize", "--output", "/tmp/unused"])
        .env("MAGBLOCK_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(2));
    let cfg = resolve_config(&[], Some("3")).unwrap();
    assert_eq!(cfg.workers, 3);
}

#[test]
fn sweep_delta_csv_layout_and_preamble_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("run.cfg");
    let out = tmp.path().join("out");
    fs::write(
        &cfg_path,
        format!("# sweep\nn_points = 15\nmode = both\nlambdas = 0, 2e-4\noutput = {}\n", out.display()),
    )
    .unwrap();
    let r = magblock(&["sweep-delta", "--config", cfg_path.to_str().unwrap(), "--engine", "analytic"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let names = [
        "sweep-delta_magnon_lambda0.000000000000e+00.csv",
        "sweep-delta_magnon_lambda2.000000000000e-04.csv",
        "sweep-delta_cavity_lambda0.000000000000e+00.csv",
        "sweep-delta_cavity_lambda2.000000000000e-04.csv",
    ];
    for name in names {
        let csv = read(&out, name);
        let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(header, "delta_over_omega_b,g2_analytic");
        let rows = data_rows(&csv);
        assert_eq!(rows.len(), 15);
        assert_eq!(rows[0][0], -2.0);
        assert_eq!(rows[14][0], 12.0);
        // every data cell has 13 significant digits
        let first = csv.lines().filter(|l| !l.starts_with('#')).nth(1).unwrap();
        for cell in first.split(',') {
            let mantissa = cell.trim_start_matches('-').split('e').next().unwrap();
            assert_eq!(mantissa.replace('.', "").len(), 13, "{cell}");
        }
        let mut b = ConfigBuilder::new();
        b.read_preamble(&csv).unwrap();
        let again = b.build().unwrap();
        let direct = resolve_config(
            &[
                "--config".into(),
                cfg_path.to_str().unwrap().into(),
                "--engine".into(),
                "analytic".into(),
            ],
            None,
        )
        .unwrap();
        assert_eq!(again.to_text(), direct.to_text());
    }
    assert!(out.join("plot.gp").exists());
}

#[test]
fn hz_and_kappa_units_give_identical_data() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let common = ["--n_points", "9", "--engine", "analytic"];
    let mut args_a = vec!["sweep-delta", "--output", a.to_str().unwrap(), "--lambda", "2e-4"];
    args_a.extend_from_slice(&common);
    let mut args_b = vec![
        "sweep-delta",
        "--output",
        b.to_str().unwrap(),
        "--units",
        "hz",
        "--lambda",
        "200",
        "--kappa_c",
        "1e6",
        "--kappa_m",
        "1e6",
        "--omega_b",
        "1e6",
        "--g_mb",
        "3e6",
        "--g_mc",
        "5e5",
        "--drive",
        "1e4",
        "--delta",
        "9.03e6",
        "--delta_min",
        "-2e6",
        "--delta_max",
        "12e6",
    ];
    args_b.extend_from_slice(&common);
    assert!(magblock(&args_a).status.success());
    assert!(magblock(&args_b).status.success());
    let name = "sweep-delta_magnon_lambda2.000000000000e-04.csv";
    let (ra, rb) = (data_rows(&read(&a, name)), data_rows(&read(&b, name)));
    assert_eq!(ra.len(), rb.len());
    for (x, y) in ra.iter().zip(&rb) {
        for (u, v) in x.iter().zip(y) {
            assert!((u - v).abs() <= 1e-10 * u.abs().max(1e-300), "{u} vs {v}");
        }
    }
}

#[test]
fn zero_dephasing_matches_plain_numeric_sweep() {
    let mut b = ConfigBuilder::new();
    b.read_text("n_points = 5\ndelta_min = 8.8\ndelta_max = 9.2\ngamma_p_list = 0\nengine = numeric\n")
        .unwrap();
    let cfg = b.build().unwrap();
    let sweep = run(Cmd::SweepDelta, &cfg).unwrap();
    let deph = run(Cmd::Dephasing, &cfg).unwrap();
    let s = sweep.tables[0].column("g2_numeric").unwrap();
    let d = deph.tables[0].column("g2_numeric").unwrap();
    for (x, y) in s.iter().zip(&d) {
        assert!(((x - y) / x).abs() <= 1e-10, "{x} vs {y}");
    }
}

#[test]
fn g2tau_first_row_is_equal_time_value() {
    let mut b = ConfigBuilder::new();
    b.read_text("tau_points = 11\ntau_max_us = 1\n").unwrap();
    let cfg = b.build().unwrap();
    let out = run(Cmd::G2Tau, &cfg).unwrap();
    let g = out.tables[0].column("g2_tau").unwrap();
    let g0 = magblock::g2_numeric(&cfg.params, magblock::Mode::Magnon, &cfg.numeric_options()).unwrap();
    assert!(((g[0] - g0) / g0).abs() <= 1e-8);
    assert!(out.tables[0].notes.iter().any(|(k, v)| k == "monotone_rise" && v == "true"));
}

#[test]
fn evolve_surfaces_trace_error() {
    let mut b = ConfigBuilder::new();
    b.read_text("t_points = 16\nt_max_us = 1.5\n").unwrap();
    let cfg = b.build().unwrap();
    let out = run(Cmd::Evolve, &cfg).unwrap();
    let t = &out.tables[0];
    assert_eq!(
        t.columns,
        ["t_us", "g2_m_zero", "population_m", "population_c", "trace_error"]
    );
    assert!(t.column("trace_error").unwrap().iter().all(|&e| e < 1e-8));
    // vacuum start: g² undefined until the magnon is populated
    assert!(t.rows[0][1].is_nan());
    assert!(t.rows[15][1] < 1e-3);
}

#[test]
fn optimize_reports_both_optima() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let r = magblock(&["optimize", "--mode", "both", "--output", out.to_str().unwrap()]);
    assert!(r.status.success());
    let text = String::from_utf8_lossy(&r.stdout);
    let values: Vec<f64> = text
        .lines()
        .filter_map(|l| l.strip_prefix("delta_opt/omega_b = "))
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(values.len(), 2);
    assert!((values[0] - 9.03).abs() < 0.05);
    assert!((values[1] + 0.03).abs() < 0.05);
    let trace = read(&out, "optimize_magnon_trace.csv");
    assert!(trace.contains("iteration,delta_over_omega_b,lambda_over_omega_b,log10_g2"));
}

#[test]
fn convergence_check_adds_report() {
    let mut b = ConfigBuilder::new();
    b.read_text("n_points = 3\ndelta_min = 0\ndelta_max = 1\n").unwrap();
    b.convergence_check(true);
    let cfg = b.build().unwrap();
    let out = run(Cmd::SweepDelta, &cfg).unwrap();
    assert!(out.report.contains("convergence check (8x8)"));
    let (_, v) = out.tables[0]
        .notes
        .iter()
        .find(|(k, _)| k == "convergence_check_8x8_max_rel_change")
        .unwrap();
    assert!(v.parse::<f64>().unwrap() < 1e-4);
}
