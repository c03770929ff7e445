use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const THREE_NODE: &str = r#"
n = 3
nu = 1.0
delta2 = 18.5

[[drives]]
atom = 1
branch = "e-r"
d = 1
rabi = 1.0
detuning = 16.0

[[drives]]
atom = 3
branch = "e-r"
d = 1
rabi = 1.0
detuning = 16.0
"#;

fn ringqed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ringqed"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// `key = value` lines printed on stderr.
fn summary_value(out: &Output, key: &str) -> f64 {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("{key} missing in:\n{text}"))
        .parse()
        .unwrap()
}

fn csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"))
}

fn pair_row(text: &str, l: usize, m: usize) -> Vec<f64> {
    let prefix = format!("{l},{m},");
    let line = text.lines().find(|x| x.starts_with(&prefix)).unwrap();
    line.split(',')
        .skip(2)
        .map(|x| x.parse().unwrap())
        .collect()
}

#[test]
fn couplings_reports_long_range_exchange() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "c.toml", THREE_NODE);
    let csv_path = dir.path().join("pairs.csv");
    let out = ringqed(&["couplings", "--config", s(&config), "--out", s(&csv_path)]);
    assert!(out.status.success());
    let chi = pair_row(&stdout(&out), 1, 3)[2];
    assert!((chi - 8.238e-4).abs() / 8.238e-4 < 0.01, "{chi}");
    let file = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(pair_row(&file, 1, 3)[2], chi);
    assert_eq!(pair_row(&file, 1, 2)[2], 0.0);
}

#[test]
fn couplings_without_drives_are_zero() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "c.toml", "n = 4\nnu = 1.0\ndelta2 = 18.5\n");
    let out = ringqed(&["couplings", "--config", s(&config)]);
    assert!(out.status.success());
    let text = stdout(&out);
    for l in 1..=4 {
        for m in l + 1..=4 {
            assert!(pair_row(&text, l, m).iter().all(|x| *x == 0.0));
        }
    }
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "c.toml", "n = [oops\n");
    for cmd in [&["couplings"][..], &["validate"], &["protocol", "entangle"]] {
        let mut args = cmd.to_vec();
        args.extend(["--config", s(&config)]);
        let out = ringqed(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
    }
    let missing = ringqed(&["couplings", "--config", "/nonexistent/c.toml"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn entangle_reaches_the_bell_state() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "c.toml", THREE_NODE);
    let out = ringqed(&[
        "protocol",
        "entangle",
        "--config",
        s(&config),
        "--samples",
        "20",
    ]);
    assert!(out.status.success());
    let gate_time = summary_value(&out, "gate_time");
    assert!((gate_time - 953.0).abs() / 953.0 < 0.01, "{gate_time}");
    assert!(summary_value(&out, "concurrence") > 1.0 - 1e-6);
    let (header, rows) = csv(&stdout(&out));
    assert_eq!(&header[..3], ["time", "norm", "leak"]);
    assert!(rows.len() >= 2);
    assert!((rows.last().unwrap()[0] - gate_time).abs() < 1e-9 * gate_time);
}

#[test]
fn transfer_moves_the_excitation() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "c.toml", THREE_NODE);
    let out = ringqed(&[
        "protocol",
        "transfer",
        "--config",
        s(&config),
        "--input",
        "0.6,0.8",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(summary_value(&out, "transfer_fidelity") > 1.0 - 1e-6);
    assert!((summary_value(&out, "population_q") - 0.64).abs() < 1e-6);
}

#[test]
fn direct_cluster_satisfies_stabilizers() {
    let out = ringqed(&[
        "protocol",
        "cluster",
        "--direct",
        "3,0.2,1.0",
        "--samples",
        "10",
    ]);
    assert!(out.status.success());
    assert!((summary_value(&out, "stabilizer_min") - 1.0).abs() < 1e-10);
}

#[test]
fn zero_duration_gives_one_row() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "c.toml", THREE_NODE);
    let out = ringqed(&[
        "protocol",
        "entangle",
        "--config",
        s(&config),
        "--model",
        "both",
        "--t-end",
        "0",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, rows) = csv(&stdout(&out));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][column(&header, "agreement")], 1.0);
    assert_eq!(summary_value(&out, "agreement"), 1.0);
}

#[test]
fn validate_reports_ratios_and_warnings() {
    let dir = TempDir::new().unwrap();
    let good = write(&dir, "good.toml", THREE_NODE);
    let out = ringqed(&["validate", "--config", s(&good)]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("19.89"), "{text}");
    assert!(!text.contains("warning"));

    let strong = THREE_NODE.replace("rabi = 1.0", "rabi = 16.0");
    let bad = write(&dir, "bad.toml", &strong);
    let out = ringqed(&["validate", "--config", s(&bad)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("warning: Delta1/Omega"));

    let single = write(&dir, "one.toml", "n = 1\nnu = 1.0\ndelta2 = 18.5\n");
    let out = ringqed(&["validate", "--config", s(&single)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_names_are_usage_errors() {
    assert_eq!(ringqed(&["protocol", "teleport"]).status.code(), Some(2));
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "c.toml", THREE_NODE);
    let bad_param = ringqed(&[
        "sweep",
        "--config",
        s(&config),
        "--param",
        "omega",
        "--values",
        "1",
    ]);
    assert_eq!(bad_param.status.code(), Some(2));
    let bad_model = ringqed(&[
        "protocol",
        "entangle",
        "--config",
        s(&config),
        "--model",
        "exact",
    ]);
    assert_eq!(bad_model.status.code(), Some(2));
}

#[test]
fn decay_sweep_lowers_the_fidelity_estimate() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "c.toml", THREE_NODE);
    let out = ringqed(&[
        "sweep",
        "--config",
        s(&config),
        "--param",
        "decay",
        "--values",
        "0,3e-3",
        "--samples",
        "2",
    ]);
    assert!(out.status.success());
    let (header, rows) = csv(&stdout(&out));
    let f = column(&header, "fidelity_estimate");
    assert_eq!(rows[0][f], 1.0);
    assert!((rows[1][f] - 0.98).abs() < 0.005, "{}", rows[1][f]);
}

#[test]
fn nu_sweep_matches_couplings() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "c.toml", THREE_NODE);
    let out = ringqed(&[
        "sweep",
        "--config",
        s(&config),
        "--param",
        "nu",
        "--range",
        "0.8:1.2:3",
        "--samples",
        "2",
    ]);
    assert!(out.status.success());
    let (header, rows) = csv(&stdout(&out));
    assert_eq!(
        rows.iter().map(|r| r[0]).collect::<Vec<_>>(),
        [0.8, 1.0, 1.2]
    );
    for row in &rows {
        let text = THREE_NODE.replace("nu = 1.0", &format!("nu = {:?}", row[0]));
        let point = write(&dir, "p.toml", &text);
        let c = ringqed(&["couplings", "--config", s(&point)]);
        let chi = pair_row(&stdout(&c), 1, 3)[2];
        assert_eq!(row[column(&header, "chi")], chi);
    }
}

#[test]
fn single_point_sweep_equals_protocol() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "c.toml", THREE_NODE);
    let proto = ringqed(&[
        "protocol",
        "entangle",
        "--config",
        s(&config),
        "--samples",
        "5",
    ]);
    let sweep = ringqed(&[
        "sweep",
        "--config",
        s(&config),
        "--param",
        "g",
        "--values",
        "1.0",
        "--samples",
        "5",
    ]);
    let (header, rows) = csv(&stdout(&sweep));
    assert_eq!(rows.len(), 1);
    for (i, key) in header.iter().enumerate().skip(1) {
        assert_eq!(rows[0][i], summary_value(&proto, key), "{key}");
    }
}

#[test]
fn output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "c.toml", THREE_NODE);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = ringqed(&[
            "sweep",
            "--config",
            s(&config),
            "--param",
            "nu",
            "--range",
            "0.9:1.1:4",
            "--parallel",
            "--samples",
            "3",
            "--out",
            s(path),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let serial = ringqed(&[
        "sweep",
        "--config",
        s(&config),
        "--param",
        "nu",
        "--range",
        "0.9:1.1:4",
        "--samples",
        "3",
    ]);
    assert_eq!(serial.stdout, std::fs::read(&a).unwrap());
}

#[test]
fn empty_sweep_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "c.toml", THREE_NODE);
    for extra in [&["--range", "1:2:0"][..], &["--values", ""], &[]] {
        let mut args = vec!["sweep", "--config", s(&config), "--param", "nu"];
        args.extend_from_slice(extra);
        let out = ringqed(&args);
        assert_eq!(out.status.code(), Some(2), "{extra:?}");
        assert!(out.stdout.is_empty());
    }
}
