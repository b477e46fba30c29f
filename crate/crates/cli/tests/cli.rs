use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use igarom::fom::{sample_field, write_field, Fom};
use igarom_cli::archive::Archive;
use igarom_cli::commands::{EvalRow, Common};
use igarom_cli::config::RunConfig;
use igarom_cli::modelfile::load_model;
use igarom_cli::pipeline::{self, ARCHIVE_NAME};
use igarom_cli::report::{self, EimRow, GreedyRow, SigmaRow, SummaryRow};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn igarom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_igarom")).args(args).output().unwrap()
}

fn quoted(p: &Path) -> String {
    format!("{:?}", p.display().to_string())
}

fn train_into(dir: &Path, extra: &[&str]) -> Output {
    let out = format!("output={}", quoted(dir));
    let cfg = fixture("small_config.toml");
    let mut args = vec!["train", "-c", cfg.to_str().unwrap(), "-s", &out];
    args.extend_from_slice(extra);
    igarom(&args)
}

/// One trained small model shared by the read-only tests.
fn trained() -> &'static Path {
    static DIR: OnceLock<tempfile::TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let d = tempfile::tempdir().unwrap();
        let o = train_into(d.path(), &[]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        d
    })
    .path()
}

fn common(dir: &Path) -> Common {
    Common {
        config: Some(fixture("small_config.toml")),
        model: None,
        overrides: vec![format!("output={}", quoted(dir))],
    }
}

#[test]
fn validate_benchmark_passes() {
    let m = fixture("../../../../models/benchmark/model.toml");
    let o = igarom(&["validate", "-m", m.to_str().unwrap(), "--samples", "20"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("det DF in"));
}

#[test]
fn validate_folded_fixture_fails() {
    let o = igarom(&["validate", "-m", fixture("folded.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("invalid"));
}

#[test]
fn missing_file_exits_two_with_path() {
    let o = igarom(&["validate", "-m", "/nonexistent/model.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/model.toml"));
}

#[test]
fn parse_errors_carry_line_numbers() {
    let o = igarom(&["validate", "-m", fixture("bad_model.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad_model.toml") && err.contains("line 5"), "{err}");
}

#[test]
fn nonpositive_tolerance_is_a_usage_error() {
    let m = fixture("small_model.toml");
    let o = igarom(&["validate", "-m", m.to_str().unwrap(), "-s", "tolerances.greedy=0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn explicit_patches_with_patch_file() {
    let loaded = load_model(&fixture("two_squares.toml")).unwrap();
    assert_eq!(loaded.model.n_patches(), 2);
    assert_eq!(loaded.model.ports().len(), 1);
    // 4 x 4 points per square, one shared column of 4, two clamped columns.
    assert_eq!(loaded.model.n_free(), 16 + 16 - 4 - 8);
    let o = igarom(&["validate", "-m", fixture("two_squares.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn model_hash_ignores_file_layout() {
    let a = load_model(&fixture("small_model.toml")).unwrap();
    let spec = igarom_cli::ModelSpec::parse(
        "[benchmark]\n# same model, other layout\nbound = 0.2\nelements = [2, 2, 2]\n[source]\nscale = 2.0\nkind = \"monomial\"\n",
    )
    .unwrap();
    let b = spec.build(Path::new(".")).unwrap();
    assert_eq!(a.hash, b.hash);
    let c = igarom_cli::ModelSpec::parse("[benchmark]\nelements = [2, 2, 2]\nbound = 0.1\n").unwrap();
    assert_ne!(a.hash, c.build(Path::new(".")).unwrap().hash);
}

#[test]
fn train_writes_archive_and_curves_that_round_trip() {
    let dir = trained();
    let a = Archive::read(&dir.join(ARCHIVE_NAME)).unwrap();
    let t = pipeline::from_archive(&a).unwrap();
    let sigma: Vec<SigmaRow> = report::read_csv(&dir.join("port_sigma.csv")).unwrap();
    assert_eq!(sigma, report::sigma_rows(&t));
    let eim: Vec<EimRow> = report::read_csv(&dir.join("eim_decay.csv")).unwrap();
    assert_eq!(eim, report::eim_rows(&t));
    let greedy: Vec<GreedyRow> = report::read_csv(&dir.join("greedy.csv")).unwrap();
    assert_eq!(greedy, report::greedy_rows(&t));
    let summary: Vec<SummaryRow> = report::read_csv(&dir.join("summary.csv")).unwrap();
    assert_eq!(summary, report::summary_rows(&t));
    assert_eq!(summary.len(), 4);
    assert!(summary.iter().all(|r| r.m_alpha > 0 && r.m_f > 0 && r.n_b > 0));
    assert_eq!(t.test_errors.len(), 4);
    assert!(t.test_errors.iter().all(|&e| e < 1e-2));
}

#[test]
fn report_rewrites_identical_csv() {
    let dir = trained();
    let out = tempfile::tempdir().unwrap();
    let arch = dir.join(ARCHIVE_NAME);
    let cfg = fixture("small_config.toml");
    let o = igarom(&[
        "report",
        "-c",
        cfg.to_str().unwrap(),
        "--archive",
        arch.to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    for f in ["port_sigma.csv", "eim_decay.csv", "greedy.csv", "summary.csv"] {
        assert_eq!(std::fs::read(dir.join(f)).unwrap(), std::fs::read(out.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn interrupted_training_resumes_to_the_same_archive() {
    let d = tempfile::tempdir().unwrap();
    let o = train_into(d.path(), &["--stop-after", "eim"]);
    assert!(o.status.success());
    assert!(!d.path().join(ARCHIVE_NAME).exists());
    assert!(d.path().join("checkpoint/eim.ckpt").exists());
    let o = train_into(d.path(), &["--resume"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let a = Archive::read(&d.path().join(ARCHIVE_NAME)).unwrap();
    let b = Archive::read(&trained().join(ARCHIVE_NAME)).unwrap();
    assert_eq!(a.deterministic_bytes().unwrap(), b.deterministic_bytes().unwrap());
}

#[test]
fn resume_rejects_checkpoints_of_another_configuration() {
    let d = tempfile::tempdir().unwrap();
    assert!(train_into(d.path(), &["--stop-after", "ports"]).status.success());
    let o = train_into(d.path(), &["--resume", "-s", "seeds.ports=7"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("different model or configuration"));
}

#[test]
fn eval_batch_produces_one_row_per_parameter() {
    let dir = trained();
    let cfg = RunConfig::load(&fixture("small_config.toml"), &[]).unwrap();
    let loaded = load_model(&cfg.model).unwrap();
    let mus = loaded.model.params().sample_lhs(100, 3);
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("mu.txt");
    let text: String = mus
        .iter()
        .map(|m| m.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ") + "\n")
        .collect();
    std::fs::write(&file, format!("# batch\n{text}")).unwrap();
    let args = igarom_cli::commands::EvalArgs {
        mu_file: Some(file),
        repeat: 2,
        out: Some(tmp.path().join("rows.csv")),
        ..Default::default()
    };
    let rows = igarom_cli::commands::eval(&common(dir), &args).unwrap();
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r.status == "ok" && r.total_ms > 0.0));
    assert!(rows.windows(2).all(|w| w[1].wall_s >= w[0].wall_s));
    let back: Vec<EvalRow> = report::read_csv(&tmp.path().join("rows.csv")).unwrap();
    assert_eq!(back.len(), 100);
    assert_eq!(back[7].mu, rows[7].mu);
}

#[test]
fn out_of_bounds_rows_fail_alone() {
    let dir = trained();
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("mu.txt");
    std::fs::write(&file, "0 0 0 0 0 0 0 0\n0.9 0 0 0 0 0 0 0\n0 0 0\nnot numbers\n0.1 0 0 0 0 0 0 -0.1\n").unwrap();
    let out = tmp.path().join("rows.csv");
    let cfg = fixture("small_config.toml");
    let ov = format!("output={}", quoted(dir));
    let o = igarom(&[
        "eval",
        "-c",
        cfg.to_str().unwrap(),
        "-s",
        &ov,
        "--mu-file",
        file.to_str().unwrap(),
        "--repeat",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let rows: Vec<EvalRow> = report::read_csv(&out).unwrap();
    let status: Vec<&str> = rows.iter().map(|r| r.status.as_str()).collect();
    assert_eq!(status, ["ok", "error", "error", "error", "ok"]);
    assert!(rows[1].message.contains("line 2") && rows[1].message.contains("out of bounds"));
    assert!(rows[3].message.contains("line 4"));
}

#[test]
fn eval_field_matches_fom_within_training_tolerance() {
    let dir = trained();
    let tmp = tempfile::tempdir().unwrap();
    let args = igarom_cli::commands::EvalArgs {
        mu: Some("0 0 0 0 0 0 0 0".into()),
        repeat: 1,
        out: Some(tmp.path().join("rows.csv")),
        fields: Some(tmp.path().to_path_buf()),
        lattice: 4,
        compare_fom: true,
        ..Default::default()
    };
    let rows = igarom_cli::commands::eval(&common(dir), &args).unwrap();
    assert!(rows[0].fom_error < 1e-3, "error {}", rows[0].fom_error);
    let fom_file = tmp.path().join("fom.field");
    let cfg = fixture("small_config.toml");
    let o = igarom(&["fom", "-c", cfg.to_str().unwrap(), "--mu", "0,0,0,0,0,0,0,0", "--lattice", "4", "--out", fom_file.to_str().unwrap()]);
    assert!(o.status.success());
    let values = |p: &Path| -> Vec<f64> {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| l.starts_with(|c: char| c.is_ascii_digit() || c == '-'))
            .map(|l| l.split_whitespace().last().unwrap().parse().unwrap())
            .collect()
    };
    let (a, b) = (values(&tmp.path().join("row0.field")), values(&fom_file));
    assert_eq!(a.len(), 4 * 64);
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-3 * scale));
}

#[test]
fn fom_command_equals_library_call() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("f.field");
    let m = fixture("small_model.toml");
    let o = igarom(&["fom", "-m", m.to_str().unwrap(), "--mu", "0.1,0,0,0,0,0,0,-0.1", "--lattice", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let loaded = load_model(&m).unwrap();
    let mu = [0.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -0.1];
    let sol = Fom::new(loaded.model.clone(), loaded.source.clone()).solve(&mu).unwrap();
    let text = write_field(&sample_field(&loaded.model, &sol, 3).unwrap(), 3, 3);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), text);
    assert_eq!(text.lines().filter(|l| !l.starts_with(|c: char| c.is_ascii_alphabetic() || c == '#')).count(), 4 * 27);
}

#[test]
fn stale_archive_is_rejected() {
    let dir = trained();
    let other = tempfile::tempdir().unwrap();
    let model = other.path().join("model.toml");
    std::fs::write(&model, "[benchmark]\nelements = [2, 2, 2]\nbound = 0.1\n").unwrap();
    let arch = dir.join(ARCHIVE_NAME);
    let o = igarom(&["eval", "-m", model.to_str().unwrap(), "--archive", arch.to_str().unwrap(), "--mu", "0 0 0 0 0 0 0 0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("different model"));
}
