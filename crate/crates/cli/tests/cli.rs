use std::path::PathBuf;
use std::process::{Command, Output};

use kreiss_cli::SystemFile;
use kreiss_core::fixtures;
use kreiss_core::matcore::RealMatrix;
use kreiss_core::sysmodel::{Controller, StateSpace};
use proptest::prelude::*;
use sha2::{Digest, Sha256};

/// SHA-256 of the canonical fixture text. Changes to any transcribed matrix
/// entry show up here.
const CANONICAL_SHA256: &str = "57b6a671a0a1d0a2f5f8d541aa5502035fc863336a154aabdfdb9afce91f327e";

fn kreiss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kreiss")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(args: &[&str]) -> serde_json::Value {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let o = kreiss(&full);
    assert!(o.status.success(), "{:?}: {}", args, String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("valid json")
}

fn record(records: &serde_json::Value, name: &str) -> f64 {
    records
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["quantity"] == name)
        .unwrap_or_else(|| panic!("no record {name} in {records}"))["value"]
        .as_f64()
        .unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("kreiss-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn fixture_checksum() {
    let digest = Sha256::digest(fixtures::canonical_text().as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(hex, CANONICAL_SHA256);
}

fn matrix(r: usize, c: usize) -> impl Strategy<Value = RealMatrix> {
    prop::collection::vec(
        prop_oneof![-1e6f64..1e6, -1.0f64..1.0, Just(0.0), Just(-0.0), 1e-300f64..1e-280],
        r * c,
    )
    .prop_map(move |v| RealMatrix::from_vec(r, c, v))
}

fn system_file() -> impl Strategy<Value = SystemFile> {
    let plant = (1usize..5, 1usize..4, 1usize..4).prop_flat_map(|(n, m, p)| {
        (matrix(n, n), matrix(n, m), matrix(p, n), matrix(p, m))
            .prop_map(|(a, b, c, d)| SystemFile::Plant(StateSpace::new(a, b, c, d).unwrap()))
    });
    let controller = (0usize..4, 1usize..4, 1usize..4).prop_flat_map(|(k, m, p)| {
        (matrix(k, k), matrix(k, p), matrix(m, k), matrix(m, p))
            .prop_map(|(a, b, c, d)| SystemFile::Controller(Controller::dynamic(a, b, c, d).unwrap()))
    });
    let closed = (1usize..6).prop_flat_map(|n| {
        (matrix(n, n), 1..=n).prop_map(|(a, plant_states)| SystemFile::ClosedLoop { a, plant_states })
    });
    prop_oneof![plant, controller, closed]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn system_files_round_trip(f in system_file()) {
        let text = f.serialize();
        let back = SystemFile::parse(&text).unwrap();
        prop_assert_eq!(back, f);
    }
}

#[test]
fn analyze_grcar_10() {
    let r = json(&["analyze", "--fixture", "grcar-10", "--quantity", "K"]);
    let k = record(&r, "K");
    assert!((k - 1.1855).abs() / 1.1855 < 5e-3, "{k}");
}

#[test]
fn analyze_plant_numerical_abscissa() {
    let r = json(&["analyze", "--fixture", "example-7x7", "--quantity", "omega,alpha"]);
    let w = record(&r, "omega");
    assert!((w - 680.4).abs() / 680.4 < 1e-3, "{w}");
    assert!(record(&r, "alpha") < 0.0);
}

#[test]
fn analyze_nonlinear_matrix() {
    let r = json(&["analyze", "--fixture", "nl-A", "--quantity", "K"]);
    let k = record(&r, "K");
    assert!((k - 4.36).abs() / 4.36 < 1e-2, "{k}");
}

#[test]
fn plant_and_controller_files_close_the_loop() {
    let plant = scratch("plant.txt");
    let ctrl = scratch("ctrl.txt");
    assert!(kreiss(&["fixtures", "dump", "example-7x7", "--out", plant.to_str().unwrap()]).status.success());
    assert!(kreiss(&["fixtures", "dump", "controller-kreiss", "--out", ctrl.to_str().unwrap()]).status.success());
    let from_files = json(&[
        "analyze",
        "--input",
        plant.to_str().unwrap(),
        "--controller",
        ctrl.to_str().unwrap(),
        "--quantity",
        "K",
    ]);
    let from_fixture = json(&["analyze", "--fixture", "closed-loop-kreiss", "--quantity", "K"]);
    let a = record(&from_files, "𝒦");
    let b = record(&from_fixture, "𝒦");
    assert!((a - b).abs() <= 1e-9 * b, "{a} {b}");
    assert!((a - 10.91).abs() / 10.91 < 0.05, "{a}");
}

#[test]
fn full_projection_is_at_least_restricted() {
    let restricted = record(&json(&["analyze", "--fixture", "nl-closed-loop", "--quantity", "K"]), "𝒦");
    let full = record(
        &json(&["analyze", "--fixture", "nl-closed-loop", "--quantity", "K", "--j", "full"]),
        "K",
    );
    assert!(full >= restricted * (1.0 - 1e-4), "{full} {restricted}");
}

#[test]
fn bench_small_sizes() {
    let out = scratch("bench.csv");
    let o = kreiss(&["bench-grcar", "--sizes", "2,10", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,estimate,reported,rel_err,cpu_s"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "2");
    assert!(first[1].parse::<f64>().unwrap() >= 1.0);
    assert!(first[2].is_empty());
    let second: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(second[3].parse::<f64>().unwrap() < 5e-3);
}

#[test]
fn table2_csv() {
    let out = scratch("table2.csv");
    let o = kreiss(&["table2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 5);
    for line in text.lines().skip(1) {
        let err: f64 = line.split(',').nth(7).unwrap().parse().unwrap();
        assert!(err < 0.05, "{line}");
    }
}

#[test]
fn zero_initial_state_stays_at_origin() {
    let r = json(&["simulate", "--x0", "0,0", "--horizon", "10"]);
    let run = &r["runs"][0];
    assert_eq!(run["terminal"], "origin");
    assert_eq!(run["max_norm"].as_f64(), Some(0.0));
}

#[test]
fn simulate_writes_trajectories() {
    let dir = scratch("traj");
    let o = kreiss(&["simulate", "--loop", "closed", "--x0", "0,1e-3", "--out", dir.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.join("closed-0.csv")).unwrap();
    assert!(csv.lines().count() > 10);
}

#[test]
fn open_loop_threshold() {
    let r = json(&["simulate", "--x0", "0,1e-4", "--threshold"]);
    let t = r["threshold"].as_f64().unwrap();
    assert!((t - 4.22e-4).abs() / 4.22e-4 < 0.02, "{t}");
}

#[test]
fn numabs_synthesis_beats_open_loop() {
    let ctrl = scratch("numabs.txt");
    let r = json(&[
        "synthesize",
        "--fixture",
        "example-7x7",
        "--method",
        "numabs",
        "--order",
        "1",
        "--restarts",
        "1",
        "--out",
        ctrl.to_str().unwrap(),
    ]);
    assert_eq!(r["status"], "certified");
    let omega = record(&r["records"], "omega");
    assert!(omega < 680.4, "{omega}");
    let SystemFile::Controller(k) = SystemFile::parse(&std::fs::read_to_string(&ctrl).unwrap()).unwrap() else {
        panic!("not a controller file")
    };
    assert_eq!(k.order(), 1);
    assert!(record(&r["records"], "alpha") <= -1e-3);
}

#[test]
fn exit_codes() {
    assert_eq!(kreiss(&["--help"]).status.code(), Some(0));
    assert_eq!(kreiss(&["analyze", "--bogus"]).status.code(), Some(1));
    assert_eq!(kreiss(&["analyze", "--fixture", "nope"]).status.code(), Some(1));
    assert_eq!(kreiss(&["analyze", "--fixture", "controller-kreiss"]).status.code(), Some(1));
    assert_eq!(kreiss(&["analyze", "--input", "/nonexistent/file"]).status.code(), Some(1));
    assert_eq!(kreiss(&["simulate", "--x0", "zero"]).status.code(), Some(1));
    // A zero-width decay band leaves no feasible region.
    let o = kreiss(&["synthesize", "--fixture", "example-7x7", "--decay", "100", "--radius", "100", "--restarts", "1"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    // An unstable matrix has no Kreiss constant.
    let bad = scratch("unstable.txt");
    std::fs::write(&bad, "kind closed-loop\nblock A 1 1\n  1\nend\n").unwrap();
    assert_eq!(kreiss(&["analyze", "--input", bad.to_str().unwrap(), "--quantity", "K"]).status.code(), Some(2));
}

#[test]
fn parse_errors_report_position() {
    let bad = scratch("bad.txt");
    std::fs::write(&bad, "kind plant\nblock A 1 1\n  1 x\nend\n").unwrap();
    let o = kreiss(&["analyze", "--input", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn workers_do_not_change_results() {
    let a = stdout(&kreiss(&["--workers", "1", "--json", "analyze", "--fixture", "closed-loop-h2match", "--quantity", "K"]));
    let b = stdout(&kreiss(&["--workers", "3", "--json", "analyze", "--fixture", "closed-loop-h2match", "--quantity", "K"]));
    let strip = |s: &str| -> serde_json::Value {
        let mut v: serde_json::Value = serde_json::from_str(s).unwrap();
        v[0]["seconds"] = 0.into();
        v
    };
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(kreiss(&["--workers", "0", "fixtures", "list"]).status.code(), Some(1));
}

#[test]
fn fixture_list_and_dump() {
    let list = stdout(&kreiss(&["fixtures", "list"]));
    for name in kreiss_cli::catalog::NAMES {
        assert!(list.contains(name), "{name}");
    }
    let dump = stdout(&kreiss(&["fixtures", "dump", "grcar-20"]));
    let Ok(SystemFile::ClosedLoop { a, plant_states }) = SystemFile::parse(&dump) else {
        panic!("dump does not parse")
    };
    assert_eq!(plant_states, 20);
    assert_eq!(a, fixtures::grcar(20));
}
