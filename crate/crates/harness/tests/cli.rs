use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn muskat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_muskat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn zero_scenario_passes_with_zero_ledgers() {
    let out = tempfile::tempdir().unwrap();
    let res = muskat(&[
        "simulate",
        "--config",
        arg(&configs().join("zero.toml")),
        "--out",
        arg(out.path()),
    ]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );

    let mut rd = csv::Reader::from_path(out.path().join("ledger.csv")).unwrap();
    let header = rd.headers().unwrap().clone();
    let mut rows = 0;
    for rec in rd.records() {
        let rec = rec.unwrap();
        for (name, v) in header.iter().zip(rec.iter()).skip(1) {
            assert_eq!(v.parse::<f64>().unwrap(), 0.0, "column {name}");
        }
        rows += 1;
    }
    assert!(rows >= 2);
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pass"], true);
}

#[test]
fn oversized_fixed_dt_is_rejected_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("zero.toml"))
        .unwrap()
        .replace(
            "[initial.f]\nkind = \"zero\"",
            "[initial.f]\nkind = \"bump\"\ncenter = 0.0\nhalf_width = 0.5\nheight = 1.0",
        )
        .replace("t_end = 0.1", "t_end = 0.1\nfixed_dt = 0.01");
    let line = text
        .lines()
        .position(|l| l.starts_with("fixed_dt"))
        .unwrap()
        + 1;
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, &text).unwrap();
    let res = muskat(&[
        "simulate",
        "--config",
        arg(&cfg),
        "--out",
        arg(&dir.path().join("out")),
    ]);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains(&format!("bad.toml:{line}:")), "{err}");
    assert!(err.contains("fixed_dt"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("zero.toml"))
        .unwrap()
        .replace("n = 16", "n = 16\ncells = 4");
    let cfg = dir.path().join("typo.toml");
    std::fs::write(&cfg, text).unwrap();
    let res = muskat(&[
        "simulate",
        "--config",
        arg(&cfg),
        "--out",
        arg(&dir.path().join("out")),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("typo.toml:6:"));
}

#[test]
fn centered_cross_flux_fails_the_positivity_gate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("suite.toml");
    std::fs::write(
        &cfg,
        "level = \"full\"\nonly = [\"2\", \"3\"]\ncross_flux = \"centered\"\n",
    )
    .unwrap();
    let res = muskat(&["verify", "--config", arg(&cfg), "--out", arg(dir.path())]);
    assert_eq!(res.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains("FAIL [2]"), "{stdout}");
    assert!(stdout.contains("positivity"), "{stdout}");
}

#[test]
fn fast_verification_passes_and_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let res = muskat(&[
            "verify",
            "--level",
            "fast",
            "--seed",
            "11",
            "--out",
            arg(d.path()),
        ]);
        assert_eq!(
            res.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&res.stdout)
        );
    }
    let ja = std::fs::read(a.path().join("verify.json")).unwrap();
    let jb = std::fs::read(b.path().join("verify.json")).unwrap();
    assert_eq!(ja, jb);
}

#[test]
fn simulate_is_reproducible_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("eps_sweep.toml")).unwrap();
    let text = &text[..text.find("[sweep]").unwrap()];
    let cfg = dir.path().join("one.toml");
    std::fs::write(&cfg, text).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        assert_eq!(
            muskat(&["simulate", "--config", arg(&cfg), "--out", arg(d)])
                .status
                .code(),
            Some(0)
        );
    }
    for f in ["ledger.csv", "snapshots.csv", "summary.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

/// Final-state L1 distance between two snapshot files.
fn final_distance(a: &Path, b: &Path) -> f64 {
    let last = |p: &Path| -> Vec<(f64, f64)> {
        let mut rd = csv::Reader::from_path(p).unwrap();
        let rows: Vec<Vec<f64>> = rd
            .records()
            .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect())
            .collect();
        let t_end = rows.iter().map(|r| r[0]).fold(f64::MIN, f64::max);
        rows.iter()
            .filter(|r| r[0] == t_end)
            .map(|r| (r[2], r[3]))
            .collect()
    };
    let (fa, fb) = (last(a), last(b));
    assert_eq!(fa.len(), fb.len());
    fa.iter()
        .zip(&fb)
        .map(|(x, y)| (x.0 - y.0).abs() + (x.1 - y.1).abs())
        .sum::<f64>()
}

#[test]
fn eps_sweep_runs_every_case_and_refines() {
    let out = tempfile::tempdir().unwrap();
    let res = muskat(&[
        "sweep",
        "--config",
        arg(&configs().join("eps_sweep.toml")),
        "--out",
        arg(out.path()),
    ]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stdout)
    );
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.path().join("sweep.json")).unwrap()).unwrap();
    assert_eq!(summary["cases"].as_array().unwrap().len(), 4);
    // Successive eps levels move closer together.
    let snap = |i: usize| {
        out.path()
            .join(format!("case_{i:03}"))
            .join("snapshots.csv")
    };
    let d: Vec<f64> = (0..3)
        .map(|i| final_distance(&snap(i), &snap(i + 1)))
        .collect();
    assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
}

#[test]
fn fit_recovers_the_exponent_from_a_written_trace() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("growth.toml"))
        .unwrap()
        .replace("t_end = 100.0", "t_end = 20.0")
        .replace("window = [1.0, 100.0]", "window = [1.0, 20.0]")
        .replace("n = 512", "n = 256")
        .replace("diagnostics_stride = 500", "diagnostics_stride = 50");
    let cfg = dir.path().join("growth.toml");
    std::fs::write(&cfg, text).unwrap();
    let run = dir.path().join("growth-out");
    let res = muskat(&["simulate", "--config", arg(&cfg), "--out", arg(&run)]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(run.join("summary.json")).unwrap()).unwrap();

    let fit_cfg = dir.path().join("fit.toml");
    std::fs::write(
        &fit_cfg,
        "[fit]\ntrace = \"growth-out/support.csv\"\nwindow = [1.0, 20.0]\n",
    )
    .unwrap();
    let out = dir.path().join("fit-out");
    let res = muskat(&["fit", "--config", arg(&fit_cfg), "--out", arg(&out)]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let fit: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("fit.json")).unwrap()).unwrap();
    let refit = fit["fit"]["right"]["exponent"].as_f64().unwrap();
    let original = summary["reports"]["growth"]["right"]["exponent"]
        .as_f64()
        .unwrap();
    // The CSV holds 17 significant digits, so the refit matches closely.
    assert!((refit - original).abs() < 1e-12, "{refit} vs {original}");
}
