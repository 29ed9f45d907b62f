use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_skewhedge"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn synth(dir: &Path, ratios: &str, n_dates: &str) -> PathBuf {
    let chain = dir.join("chain.csv");
    let o = run(&["synth", "--out", chain.to_str().unwrap(), "--ratios", ratios, "--n-dates", n_dates, "--seed", "11"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    chain
}

#[test]
fn validate_clean_chain() {
    let dir = tempfile::tempdir().unwrap();
    let chain = synth(dir.path(), "0.6", "2");
    let o = run(&["validate", "--input", chain.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report.as_array().unwrap().len(), 2);
}

#[test]
fn validate_flags_bumped_convexity() {
    let dir = tempfile::tempdir().unwrap();
    let chain = synth(dir.path(), "0.6", "1");
    // triple both sides of one interior put quote
    let text = std::fs::read_to_string(&chain).unwrap();
    let mut bumped = 0;
    let lines: Vec<String> = text
        .lines()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if bumped == 0 && f.len() == 10 && f[1] == "2011-01-27" && f[2] == "900.0" && f[3] == "P" {
                bumped += 1;
                let b: f64 = f[4].parse().unwrap();
                let a: f64 = f[5].parse().unwrap();
                return format!("{},{},{},{},{},{},{},{},{},{}", f[0], f[1], f[2], f[3], 3.0 * b, 3.0 * a, f[6], f[7], f[8], f[9]);
            }
            l.to_string()
        })
        .collect();
    assert_eq!(bumped, 1);
    std::fs::write(&chain, lines.join("\n") + "\n").unwrap();
    let o = run(&["validate", "--input", chain.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("\"condition\": 4"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let o = run(&["validate", "--input", empty.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema"));
    assert_eq!(code(&run(&["validate", "--input", "/no/such/chain.csv"])), 3);
    assert_eq!(code(&run(&["figure", "no-such-figure"])), 2);
    assert_eq!(code(&run(&["validate", "--bogus-flag"])), 2);
    assert_eq!(code(&run(&["validate"])), 2);
}

#[test]
fn calibrate_constant_ratio_and_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let chain = synth(dir.path(), "0.5", "3");
    let out = dir.path().join("cal");
    let o = run(&["calibrate", "--input", chain.to_str().unwrap(), "--out", out.to_str().unwrap(), "--alpha", "0.2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let k: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("kappas.json")).unwrap()).unwrap();
    assert_eq!(k["alpha"], 0.2);
    assert!((k["kappa_lower"].as_f64().unwrap() - 0.5).abs() < 1e-4);
    assert!((k["kappa_upper"].as_f64().unwrap() - 0.5).abs() < 1e-4);
    // four listed expiries, three front maturities kept per date
    assert_eq!(k["n_ratios"], 9);
    let fits = std::fs::read_to_string(out.join("fits.csv")).unwrap();
    assert!(fits.starts_with("date,tau,sigma1,sigma2,ratio,rmse,n_quotes\n"));
    assert_eq!(fits.lines().count(), 10);
}

#[test]
fn rtis_values_and_skip_marker() {
    let dir = tempfile::tempdir().unwrap();
    let chain = synth(dir.path(), "0.9", "2");
    let kappa = dir.path().join("k.json");
    std::fs::write(&kappa, r#"{"alpha":0.01,"kappa_lower":0.3777,"kappa_upper":5.0,"n_ratios":1}"#).unwrap();
    let o = run(&["rtis", "--input", chain.to_str().unwrap(), "--kappa-file", kappa.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[5] == "built" {
            assert!(f[4].parse::<f64>().unwrap() > 0.0, "{line}");
            rows += 1;
        }
        // ratio 5 reflects far beyond the listed strikes
        assert_eq!(f[8], "skipped");
    }
    assert!(rows > 0);
}

#[test]
fn superhedge_on_simulated_paths() {
    let dir = tempfile::tempdir().unwrap();
    let chain = synth(dir.path(), "0.6", "1");
    let args = [
        "superhedge",
        "--input",
        chain.to_str().unwrap(),
        "--barrier",
        "1050",
        "--strike",
        "980",
        "--maturity",
        "0.1",
        "--kappa",
        "0.8949",
        "--n-paths",
        "100",
    ];
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(r["improved"]["initial_cost"].as_f64().unwrap() <= r["bhr"]["initial_cost"].as_f64().unwrap());
    assert_eq!(r["all_paths_ok"], true);
    assert_eq!(run(&args).stdout, o.stdout);
}

#[test]
fn superhedge_reports_path_gap() {
    let dir = tempfile::tempdir().unwrap();
    let chain = synth(dir.path(), "0.6", "1");
    let path = dir.path().join("path.csv");
    std::fs::write(&path, "time,spot\n0,1000\n0.05,1300\n0.1,900\n").unwrap();
    let o = run(&[
        "superhedge",
        "--input",
        chain.to_str().unwrap(),
        "--barrier",
        "1050",
        "--strike",
        "980",
        "--maturity",
        "0.1",
        "--kappa",
        "0.8949",
        "--paths",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("too coarse"));
}

#[test]
fn figure_kinks_and_reflected_strikes() {
    let o = run(&["figure", "g-kinks", "--barrier", "1000", "--strike", "750", "--ratio", "0.6", "--x-max", "3300"]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        String::from_utf8(o.stdout).unwrap(),
        "label,x\nreflected_strike,1150\nreflected_put_strike,1195\nkink,1150\nkink,2050\nkink,2350\nkink,3250\n"
    );
}

#[test]
fn figures_are_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let chain = synth(dir.path(), "0.4,0.9", "2");
    for name in ["g-payoff", "bhr-payoff", "dominating", "smile", "skew-series"] {
        let a = run(&["figure", name, "--input", chain.to_str().unwrap()]);
        let b = run(&["figure", name, "--input", chain.to_str().unwrap()]);
        assert_eq!(code(&a), 0, "{name}: {}", String::from_utf8_lossy(&a.stderr));
        assert!(a.stdout.len() > 20);
        assert_eq!(a.stdout, b.stdout, "{name}");
    }
}

#[test]
fn bhr_payoff_matches_caption_weights() {
    let o = run(&["figure", "bhr-payoff", "--step", "25", "--x-max", "1300"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let row = |x: &str| -> Vec<f64> {
        text.lines()
            .find(|l| l.split(',').next() == Some(x))
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect()
    };
    // 250/325 puts at 675 and 75/325 short forwards at 1000
    assert!((row("0")[1] - (250.0 / 325.0 * 675.0 + 75.0 / 325.0 * 1000.0)).abs() < 1e-9);
    assert!(row("1000")[1].abs() < 1e-12);
    // improved adds a short of 250/325·0.675 calls at 1195
    assert!((row("1300")[2] - (-75.0 / 325.0 * 300.0 - 250.0 / 325.0 * 0.675 * 105.0)).abs() < 1e-9);
}
