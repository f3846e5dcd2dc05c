use std::fs;
use std::process::{Command, Output};

fn poismix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_poismix"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn classify_gamma_prints_class_and_limit() {
    let o = poismix(&["classify", "--family", "gamma", "--alpha", "2", "--beta", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("D0E(β=2)"), "{text}");
    let limit: f64 = text
        .lines()
        .nth(1)
        .unwrap()
        .rsplit(' ')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((limit - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn classify_json() {
    let o = poismix(&["classify", "--family", "uniform", "--x0", "5", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["tail_ratio_limit"], 0.0);
    assert_eq!(v["tail_class"]["class"], "d_minus");
}

#[test]
fn usage_errors_exit_one_with_one_line() {
    for args in [
        vec!["--bogus"],
        vec!["classify", "--family", "gamma", "--alpha", "2"],
        vec!["classify", "--family", "gamma", "--alpha", "-1", "--beta", "1"],
        vec!["classify", "--family", "weibull", "--alpha", "1"],
        vec!["experiment", "table9"],
        vec![
            "sample", "--family", "gamma", "--alpha", "2", "--beta", "1", "--format", "xml",
        ],
    ] {
        let o = poismix(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert_eq!(stderr(&o).trim_end().lines().count(), 1, "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn negative_parameters_are_accepted_where_valid() {
    let o = poismix(&["classify", "--family", "lognormal", "--mu", "-1", "--sigma", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("D0H"));
}

#[test]
fn sample_is_seeded_and_feeds_pot_fit() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let args = |out: &str| {
        vec![
            "sample".to_string(),
            "--family".into(),
            "frechet".into(),
            "--alpha".into(),
            "1".into(),
            "--beta".into(),
            "1".into(),
            "--size".into(),
            "1000".into(),
            "--seed".into(),
            "5".into(),
            "--out".into(),
            out.into(),
        ]
    };
    let first = dir.path().join("first.csv");
    let a: Vec<String> = args(data.to_str().unwrap());
    let b: Vec<String> = args(first.to_str().unwrap());
    for list in [&a, &b] {
        let refs: Vec<&str> = list.iter().map(String::as_str).collect();
        assert_eq!(poismix(&refs).status.code(), Some(0));
    }
    let text = fs::read_to_string(&data).unwrap();
    assert_eq!(text, fs::read_to_string(&first).unwrap());
    assert!(text.starts_with("count\n"));
    assert_eq!(text.lines().count(), 1001);

    let o = poismix(&[
        "pot-fit",
        data.to_str().unwrap(),
        "--quantile",
        "0.95",
        "--bootstrap",
        "99",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in ["gamma", "sigma"] {
        assert!(v["gpd"][key].is_f64(), "{key}");
    }
    assert!(v["anderson_darling"]["p_value"].is_f64());
    assert!(v["deviance"]["p_value"].is_f64());
}

#[test]
fn pot_fit_reads_plain_lines_and_reports_failures() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("plain.txt");
    fs::write(
        &plain,
        (1..=100).map(|i| format!("{}\n", i * 7 % 101)).collect::<String>(),
    )
    .unwrap();
    let o = poismix(&[
        "pot-fit",
        plain.to_str().unwrap(),
        "--format",
        "csv",
        "--bootstrap",
        "99",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 2);

    let constant = dir.path().join("constant.txt");
    fs::write(&constant, "3\n".repeat(50)).unwrap();
    let o = poismix(&["pot-fit", constant.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("excesses"));

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "count\n1\n-4\n").unwrap();
    assert_eq!(poismix(&["pot-fit", bad.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(poismix(&["pot-fit", "/nonexistent/file"]).status.code(), Some(1));
}

#[test]
fn pmf_table_has_expected_columns() {
    let o = poismix(&[
        "pmf",
        "--family",
        "scaled_beta",
        "--x0",
        "5",
        "--alpha",
        "2",
        "--beta",
        "0.25",
        "--max-n",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("n,pmf,survival,tail_ratio_k1\n"));
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn experiment_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("t2.json");
    fs::write(
        &config,
        r#"{"replicates": 4, "bootstrap": 99, "specs": [{"family": "gamma", "params": {"alpha": 2, "beta": 2}}]}"#,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for format in ["csv", "json"] {
        let out = dir.path().join(format!("report.{format}"));
        for _ in 0..2 {
            let o = poismix(&[
                "experiment",
                "table2",
                "--config",
                config.to_str().unwrap(),
                "--seed",
                "42",
                "--format",
                format,
                "--out",
                out.to_str().unwrap(),
            ]);
            assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
            outputs.push(fs::read(&out).unwrap());
        }
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[2], outputs[3]);
    let json: serde_json::Value = serde_json::from_slice(&outputs[2]).unwrap();
    assert_eq!(json["config"]["base_seed"], 42);
    assert_eq!(json["config"]["replicates"], 4);
}

#[test]
fn experiment_config_errors_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    fs::write(&config, r#"{"replicates": 0}"#).unwrap();
    let o = poismix(&["experiment", "table2", "--config", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = poismix(&["experiment", "table2", "--config", "/nonexistent.json"]);
    assert_eq!(o.status.code(), Some(1));
}
