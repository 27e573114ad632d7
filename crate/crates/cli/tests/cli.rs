use std::fs;
use std::path::Path;

use csbp_cli::run;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["csbp"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn flow_values_and_domain_errors() {
    let (code, out, _) = call(&["flow", "--catalog", "feller", "-t", "1", "-l", "1"]);
    assert_eq!(code, 0);
    let value: f64 = out.lines().next().unwrap().rsplit(' ').next().unwrap().parse().unwrap();
    assert!((value - 0.5).abs() < 1e-12);
    assert!(out.contains("tolerance"));

    let (code, out, _) = call(&["flow", "--catalog", "feller", "-t", "0", "-l", "3"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("u(0, 3) = 3\n"));

    let (code, _, err) = call(&["flow", "--catalog", "feller", "-t", "-1", "-l", "5"]);
    assert_eq!(code, 1);
    assert!(err.contains("kappa(1)") && err.contains("v(1)"), "{err}");

    let (code, out, _) = call(&["flow", "--catalog", "feller", "-t", "-1", "-l", "0.5"]);
    assert_eq!(code, 0, "{out}");
}

#[test]
fn classify_reports_the_regime() {
    let (code, out, _) = call(&["classify", "--catalog", "neveu"]);
    assert_eq!(code, 0);
    assert!(out.contains("Super"));
    let regime: Vec<&str> = out.lines().filter(|l| l.starts_with("B ") || l.starts_with("C ")).collect();
    assert_eq!(regime.len(), 2);
    assert!(regime.iter().all(|l| l.trim_end().ends_with("eve")), "{out}");

    let (code, out, _) = call(&["classify", "--catalog", "feller", "--json"]);
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["prediction"]["events"][0]["outcome"]["tag"], "eve-finite-time");
    assert_eq!(doc["report"]["criticality"], "Critical");

    let (code, _, err) = call(&["classify", "--mechanism", "{ alpha = -1.0, beta = }"]);
    assert_eq!(code, 2);
    assert!(err.contains("--mechanism, column"), "{err}");

    let (code, _, err) = call(&["classify", "--mechanism", "{ alpha = 1.0 }"]);
    assert_eq!(code, 2);
    assert!(err.contains("invalid mechanism"), "{err}");

    let (code, out, _) = call(&["classify", "--mechanism", "{ alpha = -1.0, beta = 1.0 }"]);
    assert_eq!(code, 0);
    assert!(out.contains("no-dust-poisson-settlers"), "{out}");
}

#[test]
fn usage_errors_exit_with_two() {
    let (code, _, err) = call(&["verify", "nonsense", "--catalog", "feller"]);
    assert_eq!(code, 2);
    for s in csbp_cli::SUITES {
        assert!(err.contains(s), "{err}");
    }
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, _) = call(&["simulate", "--catalog", "feller", "--runs", "0", "--out", out]);
    assert_eq!(code, 2);
    assert_eq!(call(&["frobnicate"]).0, 2);
    assert_eq!(call(&["classify", "--catalog", "nope"]).0, 2);
    assert_eq!(call(&["classify"]).0, 2);
    assert_eq!(call(&["--help"]).0, 0);
    assert_eq!(call(&["--version"]).0, 0);
}

#[test]
fn config_diagnostics_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    fs::write(&path, "mechanism = \"feller\"\nx = 1.0\nruns = \"lots\"\n").unwrap();
    let (code, _, err) = call(&["classify", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("exp.toml:3:"), "{err}");

    fs::write(&path, "mechanism = { alpha = -1.0, beta = 1.0 }\nx = 2.0\n").unwrap();
    let (code, out, _) = call(&["classify", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("regime at x = 2"), "{out}");

    let (code, _, err) = call(&["classify", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("missing.toml"), "{err}");
}

#[test]
fn simulate_is_deterministic_across_reruns_and_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |dir: &Path, threads: &'static str| {
        vec![
            "simulate".to_string(),
            "--catalog".into(),
            "quadratic-super".into(),
            "--runs".into(),
            "30".into(),
            "--blocks".into(),
            "20".into(),
            "--seed".into(),
            "7".into(),
            "--threads".into(),
            threads.into(),
            "--out".into(),
            dir.to_str().unwrap().into(),
        ]
    };
    let run_args = |v: Vec<String>| {
        let refs: Vec<&str> = v.iter().map(String::as_str).collect();
        call(&refs)
    };
    assert_eq!(run_args(args(a.path(), "1")).0, 0);
    assert_eq!(run_args(args(b.path(), "2")).0, 0);
    let fa = files(a.path());
    assert_eq!(fa, files(b.path()));
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["plot.py", "settlers.csv", "summary.json", "trajectories.csv"]);
    for (name, bytes) in &fa {
        let text = String::from_utf8_lossy(bytes);
        assert!(text.contains("csbp "), "{name} lacks the version header");
        assert!(text.contains("config-sha256") || text.contains("config_sha256"), "{name}");
        assert!(text.contains("seed"), "{name}");
    }
}

#[test]
fn simulated_outcomes_match_the_prediction() {
    for (name, x) in [("feller", "1"), ("neveu", "1"), ("fv-compound-poisson", "3")] {
        let dir = tempfile::tempdir().unwrap();
        let (code, out, err) = call(&[
            "simulate",
            "--catalog",
            name,
            "-x",
            x,
            "--runs",
            "100",
            "--blocks",
            "50",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
        let text = fs::read_to_string(dir.path().join("summary.json")).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["pass"], true, "{name}: {out}");
    }
}

#[test]
fn verify_suites_emit_data_and_plot_scripts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ext");
    let (code, stdout, err) = call(&[
        "verify",
        "extinction",
        "--catalog",
        "feller",
        "--runs",
        "500",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("PASS"));
    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    let rows: Vec<&str> = results.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "t,empirical,theoretical,se,pass");
    let t1 = rows.iter().find(|r| r.starts_with("1,")).unwrap();
    let theoretical: f64 = t1.split(',').nth(2).unwrap().parse().unwrap();
    assert!((theoretical - (-1f64).exp()).abs() < 1e-9);
    let plot = fs::read_to_string(out.join("plot.py")).unwrap();
    assert!(plot.contains("results.csv"));

    let out = dir.path().join("coal");
    let (code, stdout, err) = call(&[
        "verify",
        "coalescence",
        "--catalog",
        "quadratic-super",
        "--runs",
        "500",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("quadrature"));
    for f in ["results.csv", "bounds.csv", "summary.json", "plot.py"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

/// Plot scripts must only read files that were emitted next to them.
#[test]
fn plot_scripts_reference_emitted_files() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&str, &[&str]); 3] = [
        ("grey-limits", &["verify", "grey-limits", "--catalog", "fv-compound-poisson", "--runs", "100"]),
        ("theorem12", &["verify", "theorem12", "--catalog", "neveu", "--runs", "50"]),
        ("simulate", &["simulate", "--catalog", "neveu", "--runs", "10"]),
    ];
    for (name, args) in cases {
        let out = dir.path().join(name);
        let mut a = args.to_vec();
        a.extend_from_slice(&["--out", out.to_str().unwrap()]);
        let (code, _, err) = call(&a);
        assert_eq!(code, 0, "{name}: {err}");
        let plot = fs::read_to_string(out.join("plot.py")).unwrap();
        for line in plot.lines() {
            if let Some(rest) = line.split("read(\"").nth(1) {
                let file = rest.split('"').next().unwrap();
                assert!(out.join(file).exists(), "{name}: plot reads {file}");
            }
        }
    }
}

#[test]
fn catalog_lists_every_entry() {
    let (code, out, _) = call(&["catalog", "list"]);
    assert_eq!(code, 0);
    for n in csbp::mechanism::catalog::NAMES {
        assert!(out.lines().any(|l| l.starts_with(n)), "{n}");
    }
}
