use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use casimir_reduce::convex::SampleRange;
use casimir_reduce::io::{read_density, read_table, write_function_table};
use casimir_reduce::radial::{reduced_energies, RadialDensity, RadialGrid};
use casimir_reduce::steady::{solve_steady, SolveOptions};
use casimir_reduce::Model;
use serde_json::Value;

fn casimir(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_casimir"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = casimir(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_closed_form_radius() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("solve");
    run_ok(&["solve", "--n", "1", "--mass", &PI.to_string(), "--out", s(&out)]);
    let v = json(&out.join("solve.json"));
    assert_eq!(v["schema_version"], 1);
    let r = v["R"].as_f64().unwrap();
    assert!((r - 1.25331).abs() <= 1e-4, "R = {r}");
    assert!(v["residual"].as_f64().unwrap() < 1e-10);
    for key in ["M", "E0", "energies"] {
        assert!(!v[key].is_null(), "missing {key}");
    }
    let t = read_table(&out.join("profile.csv")).unwrap();
    assert_eq!(t.headers, ["r", "rho", "U", "w"]);
}

#[test]
fn missing_model_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("model.txt");
    std::fs::write(&cfg, "mass = 1\n").unwrap();
    let out = casimir(&["solve", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exactly one of `q` or `phi`"));
}

#[test]
fn config_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("model.txt");
    for (text, needle) in [
        ("q = polytrope(1)\n\nmass = lots\n", "line 3"),
        ("phi = polytrope(3)\n", "0 < n < 3"),
        ("q = polytrope(1)\nphi = polytrope(1)\n", "not both"),
    ] {
        std::fs::write(&cfg, text).unwrap();
        let out = casimir(&["solve", "--config", s(&cfg), "--out", s(dir.path())]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "{err}");
    }
}

#[test]
fn nonconvex_table_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("q.csv"),
        "# schema_version: 1\nabscissa,value,derivative\n1,1,2\n2,3,1\n3,9,6\n4,16,8\n",
    )
    .unwrap();
    let cfg = dir.path().join("model.txt");
    std::fs::write(&cfg, "q = table(q.csv)\n").unwrap();
    let out = casimir(&["reduce", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invariant violated"));
}

#[test]
fn numerical_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("model.txt");
    // the lift needs (Q')⁻¹ far beyond a Q table that stops at f = 10
    std::fs::write(&cfg, "q = polytrope(1)\nsample_max = 10\n").unwrap();
    let out = casimir(&["lift", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn reduce_reports_the_spatial_index() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["reduce", "--k", "1", "--out", s(dir.path())]);
    let v = json(&dir.path().join("reduce.json"));
    assert!((v["n"].as_f64().unwrap() - 2.5).abs() < 1e-12);
    for name in ["q_star.csv", "phi_star.csv", "phi.csv", "g.csv"] {
        let t = read_table(&dir.path().join(name)).unwrap();
        assert!(t.rows.len() > 100, "{name}");
    }
}

#[test]
fn tabulated_q_runs_through_reduce() {
    let dir = tempfile::tempdir().unwrap();
    // Q(f) = f², sampled; the reduction is no longer recognised as a power
    let xs = SampleRange::default().abscissae();
    let table = casimir_reduce::convex::SampleTable {
        values: xs.iter().map(|f| f * f).collect(),
        derivatives: xs.iter().map(|f| 2.0 * f).collect(),
        abscissae: xs,
    };
    write_function_table(&dir.path().join("q.csv"), &table).unwrap();
    let cfg = dir.path().join("model.txt");
    std::fs::write(&cfg, "q = table(q.csv)\n").unwrap();
    let out = dir.path().join("out");
    run_ok(&["reduce", "--config", s(&cfg), "--out", s(&out)]);
    let v = json(&out.join("reduce.json"));
    assert!(v["n"].is_null());
    let upper = v["phi_envelope"]["upper"]["index"].as_f64().unwrap();
    assert!((upper - 2.5).abs() < 1e-3, "{upper}");
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        run_ok(&["solve", "--k", "0.5", "--mass", "2", "--out", s(out)]);
    }
    for name in ["solve.json", "profile.csv"] {
        assert_eq!(
            std::fs::read(a.join(name)).unwrap(),
            std::fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let (c, d) = (dir.path().join("c"), dir.path().join("d"));
    for (out, threads) in [(&c, "1"), (&d, "4")] {
        run_ok(&[
            "sweep",
            "--n-values",
            "1,2",
            "--masses",
            "0.5,1,2",
            "--threads",
            threads,
            "--out",
            s(out),
        ]);
    }
    assert_eq!(
        std::fs::read(c.join("sweep.json")).unwrap(),
        std::fs::read(d.join("sweep.json")).unwrap()
    );
    let v = json(&c.join("sweep.json"));
    assert_eq!(v["jobs"].as_array().unwrap().len(), 6);
    assert_eq!(v["failures"], 0);
}

#[test]
fn written_profiles_reproduce_energies() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["solve", "--n", "1.5", "--out", s(dir.path())]);
    let t = read_table(&dir.path().join("profile.csv")).unwrap();
    let grid = RadialGrid::new(t.column("r").unwrap()).unwrap();
    let reread = RadialDensity::new(grid, t.column("rho").unwrap()).unwrap();
    let model = Model::phi_polytrope(1.5).unwrap();
    let state = solve_steady(&model, 1.0, &SolveOptions::default()).unwrap();
    let a = reduced_energies(model.phi(), &reread, None).unwrap();
    let b = reduced_energies(model.phi(), &state.density, None).unwrap();
    let rel = |x: f64, y: f64| (x - y).abs() / y.abs();
    assert!(rel(a.reduced_total, b.reduced_total) <= 1e-10);
    assert!(rel(a.internal, b.internal) <= 1e-10);
    assert!(rel(a.epot, b.epot) <= 1e-10);
}

#[test]
fn minimize_then_lift_closes_the_gap() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("model.txt");
    std::fs::write(&cfg, "# k = 1\nq = polytrope(1)\nmass = 1\ngrid_nodes = 1500\n").unwrap();
    let m = dir.path().join("min");
    run_ok(&["minimize", "--config", s(&cfg), "--out", s(&m)]);
    let mv = json(&m.join("minimize.json"));
    assert_eq!(mv["converged"], true);
    assert!(mv["R"].as_f64().unwrap() <= mv["R0"].as_f64().unwrap());
    let l = dir.path().join("lift");
    run_ok(&[
        "lift",
        "--config",
        s(&cfg),
        "--input",
        s(&m.join("profile.csv")),
        "--out",
        s(&l),
    ]);
    let lv = json(&l.join("lift.json"));
    assert!(lv["relative_gap"].as_f64().unwrap().abs() <= 1e-5, "{lv}");
    let t = read_table(&l.join("phase_space.csv")).unwrap();
    assert_eq!(t.headers, ["r", "E", "f"]);
    assert!(t.column("f").unwrap().iter().all(|&f| f >= 0.0));
}

#[test]
fn solve_then_lift_from_the_written_profile() {
    let dir = tempfile::tempdir().unwrap();
    let common = ["--k", "1", "--mass", "2", "--grid-nodes", "1500"];
    let sv = dir.path().join("solve");
    run_ok(&[&common[..], &["solve", "--out", s(&sv)]].concat());
    let from_file = dir.path().join("file");
    let direct = dir.path().join("direct");
    run_ok(
        &[
            &common[..],
            &["lift", "--input", s(&sv.join("profile.csv")), "--out", s(&from_file)],
        ]
        .concat(),
    );
    run_ok(&[&common[..], &["lift", "--out", s(&direct)]].concat());
    let a = json(&from_file.join("lift.json"));
    let b = json(&direct.join("lift.json"));
    assert!(a["relative_gap"].as_f64().unwrap().abs() <= 1e-10, "{a}");
    let (ea, eb) = (a["E0"].as_f64().unwrap(), b["E0"].as_f64().unwrap());
    assert!((ea - eb).abs() <= 1e-12 * eb.abs(), "{ea} vs {eb}");
}

#[test]
fn rearrange_writes_a_decreasing_profile() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("rho.csv");
    let mut text = String::from("r,rho\n");
    for i in 0..=100 {
        let r = i as f64 * 0.02;
        let rho = (-(r - 1.0) * (r - 1.0) / 0.1).exp() * (2.0 - r);
        text.push_str(&format!("{r},{rho}\n"));
    }
    std::fs::write(&input, text).unwrap();
    run_ok(&["rearrange", "--input", s(&input), "--n", "1.5", "--out", s(dir.path())]);
    let star = read_density(&dir.path().join("rearranged.csv")).unwrap();
    assert!(star.values().windows(2).all(|w| w[1] <= w[0]));
    let v = json(&dir.path().join("rearrange.json"));
    let rel = |a: &str, b: &str| (v[a].as_f64().unwrap() - v[b].as_f64().unwrap()).abs() / v[b].as_f64().unwrap().abs();
    assert!(rel("mass_after", "mass_before") < 1e-10);
    assert!(rel("internal_after", "internal_before") < 1e-8);
    assert!(v["epot_after"].as_f64().unwrap() <= v["epot_before"].as_f64().unwrap());
}

#[test]
fn verify_passes_and_writes_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = casimir(&["verify", "--out", s(dir.path())]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    let v = json(&dir.path().join("verify.json"));
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 11);
    assert_eq!(v["failed"], 0);
    for c in checks {
        assert_eq!(c["passed"], true, "{c}");
        assert!(c["measured"].as_f64().unwrap() <= c["tolerance"].as_f64().unwrap());
    }
}

#[test]
fn exterior_density_adds_the_cross_term() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    run_ok(&["solve", "--n", "1.5", "--out", s(&first)]);
    // the state's own density as the exterior: cross term = 2 E_pot
    let t = read_table(&first.join("profile.csv")).unwrap();
    let rho = RadialDensity::new(
        RadialGrid::new(t.column("r").unwrap()).unwrap(),
        t.column("rho").unwrap(),
    )
    .unwrap();
    casimir_reduce::io::write_density(&dir.path().join("ext.csv"), &rho, "rho").unwrap();
    let cfg = dir.path().join("model.txt");
    std::fs::write(&cfg, "phi = polytrope(1.5)\nexterior = ext.csv\n").unwrap();
    let second = dir.path().join("second");
    run_ok(&["solve", "--config", s(&cfg), "--out", s(&second)]);
    let v = json(&second.join("solve.json"));
    let e = &v["exterior_energies"];
    let (cross, epot) = (e["exterior"].as_f64().unwrap(), e["epot"].as_f64().unwrap());
    assert!((cross - 2.0 * epot).abs() <= 1e-10 * epot.abs(), "{e}");
    let total = e["reduced_total"].as_f64().unwrap();
    assert!((total - (e["internal"].as_f64().unwrap() + 3.0 * epot)).abs() <= 1e-10 * total.abs());
}
