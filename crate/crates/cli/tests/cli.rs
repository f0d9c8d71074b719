use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn relu_hp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relu-hp"))
        .args(args)
        .current_dir(dir)
        .env_remove("RELU_HP_JOBS")
        .output()
        .expect("spawn relu-hp")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// CSV text with the trailing `seconds` column removed from every data row.
fn without_timing(csv: &str) -> String {
    csv.lines()
        .map(|l| {
            if l.starts_with('#') {
                l.to_string()
            } else {
                l.rsplit_once(',').map_or(l, |(head, _)| head).to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        relu_hp(&["hp-study", "--no-such-flag"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(relu_hp(&["frobnicate"], dir.path()).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = relu_hp(&["hp-study", "--func", "nonexistent", "--ell", "1..2"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown function key"));
}

#[test]
fn verify_calculus_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = relu_hp(&["verify-calculus", "--seed", "42", "--trials", "100"], dir.path());
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(stdout(&o).matches("PASS").count(), 6);
}

#[test]
fn hp_study_is_deterministic_and_has_fit_footer() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "hp-study",
        "--dim",
        "2",
        "--func",
        "corner_r_alpha",
        "--alpha",
        "0.5",
        "--ell",
        "1..4",
        "--jobs",
        "2",
    ];
    let mut a = args.to_vec();
    a.extend(["--out", "a.csv"]);
    let mut b = args.to_vec();
    b.extend(["--out", "b.csv"]);
    assert!(relu_hp(&a, dir.path()).status.success());
    assert!(relu_hp(&b, dir.path()).status.success());
    let ta = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let tb = fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert_eq!(without_timing(&ta), without_timing(&tb));
    let lines: Vec<&str> = ta.lines().collect();
    assert_eq!(
        lines[0],
        "dim,func,params,sigma,ell,p,N1d,coeff_l1,nn_size,nn_depth,h1_error,linf_error,certified,seconds"
    );
    // four rows in ell order, each certified
    let ells: Vec<&str> = lines[1..5].iter().map(|l| l.split(',').nth(4).unwrap()).collect();
    assert_eq!(ells, ["1", "2", "3", "4"]);
    assert!(lines[1..5].iter().all(|l| l.split(',').nth(12) == Some("1")));
    assert!(lines.iter().any(|l| l.starts_with("# fit exp_in_ell:")));
    let gp = fs::read_to_string(dir.path().join("a.gp")).unwrap();
    assert!(gp.contains("plot 'a.csv'"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("cfg.json"),
        r#"{"dim": 2, "func": "corner_r_alpha", "params": {"alpha": 0.7}, "sigma": 0.25, "ell": "1..2"}"#,
    )
    .unwrap();
    let o = relu_hp(&["--config", "cfg.json", "hp-study", "--sigma", "0.5"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 2);
    for r in rows {
        let f: Vec<&str> = r.split(',').collect();
        assert_eq!(f[2], "alpha=0.7");
        assert_eq!(f[3], "0.5");
    }
    fs::write(dir.path().join("bad.json"), r#"{"sigmaa": 0.3}"#).unwrap();
    assert_eq!(
        relu_hp(&["--config", "bad.json", "hp-study"], dir.path()).status.code(),
        Some(1)
    );
}

#[test]
fn build_info_and_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let o = relu_hp(
        &[
            "nn-build",
            "--dim",
            "2",
            "--func",
            "corner_r_alpha",
            "--alpha",
            "0.5",
            "--sigma",
            "0.15",
            "--eps",
            "0.1",
            "--out",
            "net.json",
            "--report",
            "report.csv",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let row: Vec<&str> = report.lines().nth(1).unwrap().split(',').collect();
    let h1: f64 = row[10].parse().unwrap();
    assert!(h1 <= 0.1 && row[12] == "1");

    let info = relu_hp(&["nn-info", "--net", "net.json", "--json"], dir.path());
    let v: serde_json::Value = serde_json::from_slice(&info.stdout).unwrap();
    assert_eq!(v["input_dim"], 2);
    assert_eq!(v["size"].as_u64().unwrap().to_string(), row[8]);

    fs::write(dir.path().join("pts.csv"), "x1,x2\n0.25,0.5\n0.9,0.1\n").unwrap();
    let e = relu_hp(&["nn-eval", "--net", "net.json", "--points", "pts.csv"], dir.path());
    assert!(e.status.success());
    let out = stdout(&e);
    let net = relu_hp::nn::network::NeuralNetwork::from_json(&fs::read_to_string(dir.path().join("net.json")).unwrap())
        .unwrap();
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "x1,x2,value");
    for (line, x) in lines[1..].iter().zip([[0.25, 0.5], [0.9, 0.1]]) {
        let v: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(v, net.realize(&x).unwrap()[0]);
    }
}

#[test]
fn mul_net_certifies() {
    let dir = tempfile::tempdir().unwrap();
    let o = relu_hp(
        &["mul-net", "--dim", "2", "--eps", "1e-3", "--m", "2", "--out", "pi.json"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).trim_end().ends_with("PASS"));
    assert!(dir.path().join("pi.json").exists());
}
