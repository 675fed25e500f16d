use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rnmvar::cli::report::{read_csv, CSV_COLUMNS};
use rnmvar::cli::{exit_code, Report, EXIT_NUMERICAL, EXIT_VALIDATION};
use rnmvar::Error;
use tempfile::TempDir;

const IDENTITIES: &str = r#"
mode = "identities"
[potential]
kind = "ginibre"
[identities]
deltas = [-8.0, 0.0, 8.0]
sums = [-2.0, 0.0, 2.0]
[output]
name = "ids"
"#;

const MC: &str = r#"
mode = "mc-crosscheck"
n = [20]
seed = 5
[potential]
kind = "ginibre"
[region]
kind = "disc"
radius = 0.5
[mc]
sampler = "ginibre"
m = 200
[output]
name = "mc"
"#;

const BULK: &str = r#"
mode = "bulk"
n = [50, 100]
[potential]
kind = "ginibre"
[region]
kind = "disc"
radius = 0.5
[output]
name = "bulk"
"#;

fn rnmvar(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rnmvar"))
        .env_remove("RNMVAR_JOBS")
        .arg("--out")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(dir: &Path, config: &Path, extra: &[&str]) -> Output {
    let mut args: Vec<&str> = extra.to_vec();
    args.push("run");
    args.push(config.to_str().unwrap());
    rnmvar(&args, dir)
}

#[test]
fn identities_run_writes_csv_and_sidecar() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "ids.toml", IDENTITIES);
    let out = run(tmp.path(), &cfg, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = fs::read_to_string(tmp.path().join("ids.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), CSV_COLUMNS.join(","));
    let rows = read_csv(csv.as_bytes()).unwrap();
    let report = Report::load(&tmp.path().join("ids.csv")).unwrap();
    assert_eq!(rows.len(), 6);
    for (a, b) in rows.iter().zip(&report.rows) {
        assert_eq!(a.key(), b.key());
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.gap.map(f64::to_bits), b.gap.map(f64::to_bits));
        assert!(!b.provenance.is_empty());
    }
    assert!(rows.iter().all(|r| r.gap.unwrap() <= 1e-8));
    assert_eq!(report.config.output.name, "ids");
    assert!(!report.git_hash.is_empty());
}

#[test]
fn bulk_rows_carry_method_and_rates() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "bulk.toml", BULK);
    assert_eq!(run(tmp.path(), &cfg, &[]).status.code(), Some(0));
    let report = Report::load(&tmp.path().join("bulk.json")).unwrap();
    assert!(report.rows.iter().all(|r| r.method == "RADIAL_EXACT"));
    assert_eq!(report.rates.len(), 1);
    assert!(report.rates[0].slope < 0.0);
}

#[test]
fn seeded_runs_are_reproducible() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let cfg = write_config(tmp.path(), "mc.toml", MC);
    assert_eq!(rnmvar(&["run", cfg.to_str().unwrap()], &a).status.code(), Some(0));
    assert_eq!(
        rnmvar(&["--jobs", "2", "run", cfg.to_str().unwrap()], &b).status.code(),
        Some(0)
    );
    let ra = Report::load(&a.join("mc.json")).unwrap();
    let rb = Report::load(&b.join("mc.json")).unwrap();
    assert_eq!(ra.rows[0].value.to_bits(), rb.rows[0].value.to_bits());
    assert_eq!(ra.rows[0].stderr, rb.rows[0].stderr);

    let same = rnmvar(
        &[
            "compare",
            a.join("mc.csv").to_str().unwrap(),
            b.join("mc.csv").to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_eq!(same.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&same.stdout).lines().count(), 1);

    let c = tmp.path().join("c");
    assert_eq!(
        rnmvar(&["--seed", "6", "run", cfg.to_str().unwrap()], &c).status.code(),
        Some(0)
    );
    let rc = Report::load(&c.join("mc.json")).unwrap();
    assert_eq!(rc.config.seed, 6);
    assert_ne!(rc.rows[0].value, ra.rows[0].value);
    let diff = rnmvar(
        &[
            "compare",
            a.join("mc.json").to_str().unwrap(),
            c.join("mc.json").to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_eq!(diff.status.code(), Some(1));
    let loose = rnmvar(
        &[
            "compare",
            "--tol",
            "1.0",
            a.join("mc.json").to_str().unwrap(),
            c.join("mc.json").to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_eq!(loose.status.code(), Some(0));
}

#[test]
fn jobs_flag_beats_environment() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "ids.toml", IDENTITIES);
    let run_with = |dir: &str, args: &[&str]| {
        let out = tmp.path().join(dir);
        let res = Command::new(env!("CARGO_BIN_EXE_rnmvar"))
            .env("RNMVAR_JOBS", "3")
            .arg("--out")
            .arg(&out)
            .args(args)
            .arg("run")
            .arg(&cfg)
            .output()
            .unwrap();
        assert!(res.status.success());
        Report::load(&out.join("ids.json")).unwrap().jobs
    };
    assert_eq!(run_with("env", &[]), 3);
    assert_eq!(run_with("flag", &["--jobs", "1"]), 1);
}

#[test]
fn invalid_input_exits_2() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        ("unknown.toml", BULK.replace("[output]", "bogus = 1\n[output]")),
        ("order.toml", BULK.replace("[50, 100]", "[100, 50]")),
        (
            "exact.toml",
            BULK.replace("kind = \"ginibre\"", "kind = \"elliptic_ginibre\"\ntau = 0.5")
                + "method = \"radial_exact\"\n",
        ),
        ("mc.toml", MC.replace("[mc]\nsampler = \"ginibre\"\nm = 200\n", "")),
        ("syntax.toml", "mode = ".to_string()),
    ];
    for (name, text) in cases {
        let cfg = write_config(tmp.path(), name, &text);
        let out = run(tmp.path(), &cfg, &[]);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!out.stderr.is_empty());
    }
    let missing = run(tmp.path(), &tmp.path().join("absent.toml"), &[]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(rnmvar(&["frobnicate"], tmp.path()).status.code(), Some(2));
    let bad_report = write_config(tmp.path(), "r.json", "{\"schema_version\": 99}");
    let p = bad_report.to_str().unwrap();
    assert_eq!(rnmvar(&["compare", p, p], tmp.path()).status.code(), Some(2));
}

#[test]
fn numerical_failures_map_to_3() {
    for e in [
        Error::Quadrature("x".into()),
        Error::IllConditioned { pivot: 3, ratio: 1e-20 },
        Error::Envelope("x".into()),
        Error::AntipodalPoints,
    ] {
        assert_eq!(exit_code(&e), EXIT_NUMERICAL, "{e}");
    }
    assert_eq!(exit_code(&Error::Config("x".into())), EXIT_VALIDATION);
}
