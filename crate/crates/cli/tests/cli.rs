use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hpfold(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hpfold"))
        .args(args)
        .current_dir(cwd)
        .env_remove("HPFOLD_OUT")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "{e}: {}\n{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn ok(out: &Output) {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn enumerate_small() {
    let dir = tempfile::tempdir().unwrap();
    let out = hpfold(&["enumerate", "--seq", "HPPH"], dir.path());
    ok(&out);
    let report = json(&out);
    assert_eq!(report["complete_count"], 5);
    assert_eq!(report["min_energy"], -1);

    let out = hpfold(
        &["enumerate", "--seq", "HPPHHPPH", "--landscape", "l.jsonl"],
        dir.path(),
    );
    ok(&out);
    let summary = json(&out);
    assert_eq!(summary["max_score"], 3);
    let walks = lines(&dir.path().join("l.jsonl"));
    assert_eq!(walks.len() as u64, summary["walks"].as_u64().unwrap());
    let top = walks
        .iter()
        .map(|l| serde_json::from_str::<Value>(l).unwrap()["score"].as_u64().unwrap())
        .max();
    assert_eq!(top, Some(3));

    let out = hpfold(&["enumerate", "--n", "12", "--verify-counts"], dir.path());
    ok(&out);
    assert_eq!(json(&out)[0]["found"], 15_037);
}

#[test]
fn bad_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = hpfold(&["train", "--seq", "HPXH"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("'X'"));
    for args in [
        &["train", "--bogus"][..],
        &["train", "--benchmark-id", "99mer"],
        &["train", "--seq", "HPPH", "--arch", "gru2x8"],
        &["bench", "--entries", "nope", "--episodes-override", "10"],
        &["enumerate", "--seq", "HPHPHPHPHPHPHPHPHPHPHPHPHP"],
    ] {
        assert_eq!(hpfold(args, dir.path()).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn train_rand_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let out = hpfold(
        &[
            "train",
            "--benchmark-id",
            "20mer-B",
            "--episodes",
            "1000",
            "--seed",
            "1",
            "--mode",
            "rand",
            "--out",
            "o",
        ],
        dir.path(),
    );
    ok(&out);
    let trial = dir.path().join("o/20mer-B_rand_seed1");
    for f in [
        "manifest.json",
        "curve.csv",
        "best.jsonl",
        "checkpoint.bin",
        "run_config.json",
    ] {
        assert!(trial.join(f).is_file(), "{f}");
    }
    let manifest: Value = serde_json::from_str(&fs::read_to_string(trial.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["sequence"], "HHHPPHPHPHPPHPHPHPPH");
    assert_eq!(manifest["config"]["episodes"], 1000);
    assert_eq!(lines(&trial.join("curve.csv")).len(), 1001);
}

#[test]
fn output_root_from_env() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hpfold"))
        .args(["baseline", "--seq", "HPPHPH", "--episodes", "20"])
        .current_dir(dir.path())
        .env("HPFOLD_OUT", "envroot")
        .output()
        .unwrap();
    ok(&out);
    assert!(dir.path().join("envroot/HPPHPH_rand_seed0/curve.csv").is_file());
}

const SMALL_DRL: &[&str] = &[
    "train",
    "--seq",
    "HPHPPHHPH",
    "--arch",
    "lstm1x8",
    "--episodes",
    "60",
    "--seed",
    "3",
];

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let mut args = SMALL_DRL.to_vec();
        args.extend(["--out", out]);
        ok(&hpfold(&args, dir.path()));
    }
    for f in ["curve.csv", "best.jsonl", "checkpoint.bin", "manifest.json"] {
        let a = fs::read(dir.path().join("a/HPHPPHHPH_drl_seed3").join(f)).unwrap();
        let b = fs::read(dir.path().join("b/HPHPPHHPH_drl_seed3").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn resume_continues_the_same_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = SMALL_DRL.to_vec();
    args.extend(["--out", "full", "--checkpoint-every", "25"]);
    ok(&hpfold(&args, dir.path()));
    let trial = dir.path().join("full/HPHPPHHPH_drl_seed3");
    let out = hpfold(
        &[
            "train",
            "--resume",
            trial.join("checkpoint_00000025.bin").to_str().unwrap(),
            "--out",
            "rest",
        ],
        dir.path(),
    );
    ok(&out);
    let full = lines(&trial.join("curve.csv"));
    let rest = lines(&dir.path().join("rest/curve.csv"));
    assert_eq!(rest[0], full[0]);
    assert_eq!(rest[1..], full[26..]);
    assert_eq!(
        fs::read(trial.join("checkpoint.bin")).unwrap(),
        fs::read(dir.path().join("rest/checkpoint.bin")).unwrap()
    );
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.json"),
        r#"{"sequence": "HPPHPH", "mode": "rand", "episodes": 50, "seeds": [4], "out": "fromfile"}"#,
    )
    .unwrap();
    ok(&hpfold(&["train", "--config", "run.json"], dir.path()));
    let trial = dir.path().join("fromfile/HPPHPH_rand_seed4");
    assert_eq!(lines(&trial.join("curve.csv")).len(), 51);

    ok(&hpfold(
        &["train", "--config", "run.json", "--episodes", "30", "--out", "flag"],
        dir.path(),
    ));
    let trial = dir.path().join("flag/HPPHPH_rand_seed4");
    assert_eq!(lines(&trial.join("curve.csv")).len(), 31);
    let resolved: Value = serde_json::from_str(&fs::read_to_string(trial.join("run_config.json")).unwrap()).unwrap();
    assert_eq!(resolved["episodes"], 30);
    assert_eq!(resolved["seeds"], serde_json::json!([4]));

    fs::write(dir.path().join("bad.json"), r#"{"episodes": "many"}"#).unwrap();
    assert_eq!(
        hpfold(&["train", "--config", "bad.json"], dir.path()).status.code(),
        Some(2)
    );
}

#[test]
fn bench_smoke_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = hpfold(
        &[
            "bench",
            "--modes",
            "rand",
            "--seeds",
            "0,1",
            "--episodes-override",
            "100",
            "--out",
            "suite",
        ],
        dir.path(),
    );
    ok(&out);
    let rows = json(&out);
    assert_eq!(rows.as_array().unwrap().len(), 7);
    let summary = lines(&dir.path().join("suite/summary.csv"));
    assert_eq!(summary.len(), 1 + 7 * 2);
    assert!(summary[1..].iter().all(|l| l.contains(",ok,")));
    let doc: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("suite/summary.json")).unwrap()).unwrap();
    assert_eq!(doc["trials"].as_array().unwrap().len(), 14);
}

#[test]
fn plotdata_bands_and_identity_window() {
    let dir = tempfile::tempdir().unwrap();
    ok(&hpfold(
        &[
            "baseline",
            "--seq",
            "HPPHPPHH",
            "--episodes",
            "80",
            "--seed",
            "0,1,2,3",
            "--out",
            "runs",
        ],
        dir.path(),
    ));
    let out = hpfold(
        &["plotdata", "--curves", "runs", "--window", "1", "--out", "w1"],
        dir.path(),
    );
    ok(&out);
    for l in &lines(&dir.path().join("w1/HPPHPPHH_rand_seed0_movmin.csv"))[1..] {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f[1], f[2]);
    }
    ok(&hpfold(&["plotdata", "--curves", "runs", "--out", "w200"], dir.path()));
    let band = lines(&dir.path().join("w200/HPPHPPHH_rand_band.csv"));
    assert_eq!(band[0], "episode,mean,std,lower,upper");
    assert_eq!(band.len(), 81);
    ok(&hpfold(
        &["plotdata", "--curves", "runs/HPPHPPHH_rand_seed2", "--out", "one"],
        dir.path(),
    ));
    assert!(dir.path().join("one/HPPHPPHH_rand_seed2_movmin.csv").is_file());
    assert_ne!(
        hpfold(&["plotdata", "--curves", "missing"], dir.path()).status.code(),
        Some(0)
    );
}

#[test]
fn confdb_import_export() {
    let dir = tempfile::tempdir().unwrap();
    ok(&hpfold(
        &[
            "baseline",
            "--seq",
            "HPPHPPHH",
            "--episodes",
            "200",
            "--seed",
            "0,1",
            "--out",
            "runs",
        ],
        dir.path(),
    ));

    let out = hpfold(
        &["confdb", "--import", "runs", "--export", "db", "--stats", "--draw"],
        dir.path(),
    );
    ok(&out);
    let stats = json(&out);
    let n = stats["records"].as_u64().unwrap() as usize;
    assert!(n > 0);
    assert_eq!(lines(&dir.path().join("db/records.jsonl")).len(), n);
    assert_eq!(fs::read_dir(dir.path().join("db/drawings")).unwrap().count(), n);
    let merged = hpfold(&["confdb", "--records", "db/records.jsonl", "--stats"], dir.path());
    ok(&merged);
    assert_eq!(json(&merged), stats);

    // An empty log gives an empty database.
    let empty = dir.path().join("runs/empty");
    fs::create_dir_all(&empty).unwrap();
    fs::copy(
        dir.path().join("runs/HPPHPPHH_rand_seed0/manifest.json"),
        empty.join("manifest.json"),
    )
    .unwrap();
    fs::write(empty.join("best.jsonl"), "").unwrap();
    let out = hpfold(&["confdb", "--import", "runs/empty", "--stats"], dir.path());
    ok(&out);
    assert_eq!(json(&out)["records"], 0);

    // Bad lines are reported and skipped.
    fs::write(
        empty.join("best.jsonl"),
        "{\"episode\":0,\"energy\":-9,\"actions\":\"LFFLLF\"}\nnot json\n{\"episode\":1,\"energy\":0,\"actions\":\"FFFFFF\"}\n",
    )
    .unwrap();
    let out = hpfold(
        &["confdb", "--import", "runs/empty", "--export", "db2", "--stats"],
        dir.path(),
    );
    ok(&out);
    assert_eq!(json(&out)["records"], 1);
    let rejected: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("db2/rejections.json")).unwrap()).unwrap();
    let lines: Vec<u64> = rejected
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["line"].as_u64().unwrap())
        .collect();
    assert_eq!(lines, [1, 2]);
}
