use std::fs;
use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn gafed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gafed")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = gafed(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

const CONFIG: &str = r#"{
  "rounds": 2,
  "local_epochs": 1,
  "batch_size": 8,
  "seed": 3,
  "aggregation": "sample-weighted",
  "clients": [{"id": "big", "share": 0.6}, {"id": "small", "share": 0.4}],
  "model": {"c1": 2, "c2": 2, "c3": 2, "c4": 2, "fc": 8, "alpha": 0.01},
  "transport": {"mode": "loopback", "timeout_sec": 60}
}"#;

/// Synthetic beats split, partitioned and encoded into `dir`.
fn prepare(dir: &Path) -> PathBuf {
    let cfg = dir.join("cfg.json");
    fs::write(&cfg, CONFIG).unwrap();
    ok(&["synth", "--out", &p(dir, "all.fgds"), "--per-class", "8", "--seed", "1"]);
    ok(&["split", "--in", &p(dir, "all.fgds"), "--out-train", &p(dir, "train.fgds"), "--out-test", &p(dir, "test.fgds"), "--seed", "2"]);
    let out = ok(&["partition", "--in", &p(dir, "train.fgds"), "--config", cfg.to_str().unwrap(), "--out-prefix", &p(dir, "shard"), "--seed", "4"]);
    // Per-class rounding: 4 beats per class at 0.6/0.4 gives 2/2.
    assert!(out.contains("shard big: 10 (N=2 L=2 R=2 A=2 V=2)"), "{out}");
    for name in ["shard-big", "shard-small", "test"] {
        ok(&["encode", "--in", &p(dir, &format!("{name}.fgds")), "--out", &p(dir, &format!("{name}.fgim"))]);
    }
    cfg
}

#[test]
fn no_arguments_is_a_usage_error() {
    let out = gafed(&[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(gafed(&["synth", "--bogus"]).status.code(), Some(1));
    assert_eq!(gafed(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(gafed(&["--help"]).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_two() {
    let out = gafed(&["eval", "--model", "/nonexistent/m.bin", "--test", "/nonexistent/t.fgim"]);
    assert_eq!(out.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), r#"{"rounds": 0, "clients": [{"id": "a", "share": 1.0}]}"#).unwrap();
    let out = gafed(&["simulate", "--config", &p(dir.path(), "bad.json"), "--shards", "x.fgim"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_eval_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = prepare(d);
    let run = d.join("run");
    let shards = format!("{},{}", p(d, "shard-big.fgim"), p(d, "shard-small.fgim"));
    let out = ok(&["simulate", "--config", cfg.to_str().unwrap(), "--shards", &shards, "--test", &p(d, "test.fgim"), "--out", run.to_str().unwrap()]);
    assert!(out.contains("Test Accuracy"));
    for f in ["config.json", "report.json", "report.md", "model_final.bin", "rounds.log"] {
        assert!(run.join(f).exists(), "{f} missing");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["aborted"], false);
    assert_eq!(report["rounds"].as_array().unwrap().len(), 2);
    assert_eq!(fs::read_to_string(run.join("rounds.log")).unwrap().lines().count(), 2);
    let test_acc = report["test_accuracy"].as_f64().unwrap();

    let eval = ok(&["eval", "--model", &p(&run, "model_final.bin"), "--test", &p(d, "test.fgim")]);
    assert!(eval.contains(&format!("accuracy: {:.2}%", 100.0 * test_acc)), "{eval}");
    let json: serde_json::Value = serde_json::from_str(&ok(&["eval", "--json", "--model", &p(&run, "model_final.bin"), "--test", &p(d, "test.fgim")])).unwrap();
    assert_eq!(json["accuracy"].as_f64().unwrap(), test_acc);

    let md = fs::read(run.join("report.md")).unwrap();
    ok(&["report", "--run", run.to_str().unwrap()]);
    assert_eq!(fs::read(run.join("report.md")).unwrap(), md);

    // Same seed, same bytes.
    let again = d.join("again");
    ok(&["simulate", "--config", cfg.to_str().unwrap(), "--shards", &shards, "--test", &p(d, "test.fgim"), "--out", again.to_str().unwrap()]);
    assert_eq!(fs::read(run.join("model_final.bin")).unwrap(), fs::read(again.join("model_final.bin")).unwrap());

    let ablated = d.join("ablated");
    ok(&["simulate", "--config", cfg.to_str().unwrap(), "--shards", &shards, "--exclude", "small", "--out", ablated.to_str().unwrap()]);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(ablated.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["rounds"][0]["clients"].as_array().unwrap().len(), 1);
}

#[test]
fn tcp_processes_match_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = prepare(d);
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let addr = format!("127.0.0.1:{port}");
    let server = Command::new(env!("CARGO_BIN_EXE_gafed"))
        .args(["server", "--bind", &addr, "--config", cfg.to_str().unwrap(), "--test", &p(d, "test.fgim"), "--out", &p(d, "tcp")])
        .env("RUST_LOG", "warn")
        .stdout(Stdio::null())
        .spawn()
        .unwrap();
    let clients: Vec<_> = ["big", "small"]
        .iter()
        .map(|id| {
            Command::new(env!("CARGO_BIN_EXE_gafed"))
                .args(["client", "--connect", &addr, "--shard", &p(d, &format!("shard-{id}.fgim")), "--id", id, "--config", cfg.to_str().unwrap()])
                .env("RUST_LOG", "warn")
                .stdout(Stdio::piped())
                .spawn()
                .unwrap()
        })
        .collect();
    for c in clients {
        let out = c.wait_with_output().unwrap();
        assert!(out.status.success());
        assert!(String::from_utf8_lossy(&out.stdout).contains("2 updates sent"));
    }
    assert!(server.wait_with_output().unwrap().status.success());

    let shards = format!("{},{}", p(d, "shard-big.fgim"), p(d, "shard-small.fgim"));
    ok(&["simulate", "--config", cfg.to_str().unwrap(), "--shards", &shards, "--test", &p(d, "test.fgim"), "--out", &p(d, "sim")]);
    assert_eq!(fs::read(d.join("tcp/model_final.bin")).unwrap(), fs::read(d.join("sim/model_final.bin")).unwrap());
    let bytes = |run: &str| {
        let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join(run).join("report.json")).unwrap()).unwrap();
        (r["bytes_sent"].as_u64().unwrap(), r["bytes_received"].as_u64().unwrap())
    };
    assert_eq!(bytes("tcp"), bytes("sim"));
}

#[test]
fn client_exits_nonzero_on_malformed_frame() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepare(d);
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let peer = std::thread::spawn(move || {
        let (mut s, _) = listener.accept().unwrap();
        s.write_all(b"XXXX\x01\x02\x00\x00\x00\x00").unwrap();
        std::thread::sleep(std::time::Duration::from_millis(200));
    });
    let out = gafed(&["client", "--connect", &addr, "--shard", &p(d, "shard-big.fgim"), "--id", "big"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("protocol"), "{}", String::from_utf8_lossy(&out.stderr));
    peer.join().unwrap();
}
