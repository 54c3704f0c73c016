use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_marginals"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SCALING: &str = r#"
[scaling]
d = 6
index_set = "basis_pm(6)"
n_grid = [40, 160, 640]
trials = 8
seed = 3
width_trials = 300
"#;

#[test]
fn scaling_csv_has_schema_and_fit_block() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SCALING);
    let out = dir.path().join("r.csv");
    let (code, _, err) = run(&["scaling", "--config", &cfg, "--output", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# marginals "));
    let rows = data_lines(&text);
    assert_eq!(rows[0], "n,mean,sd,median,max,trials");
    assert_eq!(rows.len(), 4);
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    for (rec, n) in reader.records().zip([40, 160, 640]) {
        let rec = rec.unwrap();
        assert_eq!(rec[0].parse::<usize>().unwrap(), n);
        assert_eq!(rec[5].parse::<usize>().unwrap(), 8);
        // 17 significant digits.
        assert_eq!(rec[1].split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
    }
    let trailer: String = text.lines().skip_while(|l| *l != "# [fit]").map(|l| format!("{}\n", &l[2..])).collect();
    let fit: toml::Table = trailer.parse().unwrap();
    assert!(fit["fit"]["slope"].as_float().unwrap() < 0.0);
}

#[test]
fn rerun_from_report_reproduces_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SCALING);
    for format in ["csv", "json"] {
        let first = dir.path().join(format!("a.{format}"));
        let second = dir.path().join(format!("b.{format}"));
        let (code, _, err) = run(&["scaling", "--config", &cfg, "--format", format, "--output", first.to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
        let (code, _, err) = run(&[
            "scaling",
            "--config",
            first.to_str().unwrap(),
            "--format",
            format,
            "--output",
            second.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
        assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    }
}

#[test]
fn worker_count_leaves_rows_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SCALING);
    let (_, one, _) = run(&["scaling", "--config", &cfg, "--workers", "1"]);
    let (_, eight, _) = run(&["scaling", "--config", &cfg, "--workers", "8"]);
    assert_eq!(data_lines(&one), data_lines(&eight));
    assert!(one.contains("# workers = 1") && eight.contains("# workers = 8"));
}

#[test]
fn w1_sample_file() {
    let dir = tempfile::tempdir().unwrap();
    let sample = write(dir.path(), "s.txt", "0\n");
    let cfg = write(dir.path(), "c.toml", &format!("[w1]\nsample_file = {:?}\n", sample));
    let (code, out, err) = run(&["w1", "--config", &cfg]);
    assert_eq!(code, 0, "{err}");
    let rows = data_lines(&out);
    assert_eq!(rows.len(), 2);
    let value: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((value - 0.797_884_560_802_865_4).abs() < 1e-9);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&["scaling", "--set", "d=6"]);
    assert_eq!(code, 2);
    assert!(err.contains("index_set"), "{err}");

    let cfg = write(dir.path(), "c.toml", SCALING);
    let (code, _, err) = run(&["scaling", "--config", &cfg, "--set", "colour=red"]);
    assert_eq!(code, 2);
    assert!(err.contains("colour"));

    let (code, _, _) = run(&["scaling", "--config", &cfg, "--output", "/nonexistent-dir/x.csv"]);
    assert_eq!(code, 2);

    let (code, _, _) = run(&["scaling", "--config", "/nonexistent.toml"]);
    assert_eq!(code, 2);

    let bad = write(dir.path(), "bad.toml", "[scaling]\nd = 6\nindex_set = \"basis_pm(6)\"\nn_grid = [10]\ntrials = 1\nseed = 1\nextra = 3\n");
    let (code, _, err) = run(&["scaling", "--config", &bad]);
    assert_eq!(code, 2);
    assert!(err.contains("extra"));

    let (code, _, _) = run(&["frobnicate"]);
    assert_eq!(code, 2);
}

#[test]
fn every_subcommand_runs() {
    let common = ["--set", "d=3", "--set", "index_set=basis_pm(3)", "--set", "n_grid=[30]", "--set", "trials=3", "--set", "seed=1", "--set", "width_trials=50"];
    for sub in ["scaling", "tail", "width", "check-assumption", "lipschitz"] {
        let mut args = vec![sub];
        args.extend(common);
        let (code, out, err) = run(&args);
        assert_eq!(code, 0, "{sub}: {err}");
        assert!(out.contains(&format!("# subcommand = \"{sub}\"")));
    }
    let (code, out, err) = run(&["gamma2", "--set", "d=3", "--set", "index_set=basis_pm(3)", "--set", "seed=1", "--format", "json"]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["rows"][0]["points"], 6);
}

#[test]
fn numerical_failure_exits_three() {
    let (code, _, err) = run(&["w1", "--set", "sample=[1e308, -1e308]", "--set", "method=quadrature"]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn non_symmetric_width_set_is_a_config_error() {
    let (code, _, _) = run(&["width", "--set", "d=1", "--set", "index_set=explicit(1)", "--set", "n_grid=[5]", "--set", "trials=1", "--set", "seed=1"]);
    assert_eq!(code, 2);
}
