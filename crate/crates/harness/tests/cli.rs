use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn auv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_auv")).args(args).output().expect("binary runs")
}

fn repo(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel).display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Training log rows with the wall-clock column removed.
fn log_without_wall(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let wall = r.headers().unwrap().iter().position(|h| h == "wall_s").unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().enumerate().filter(|(i, _)| *i != wall).map(|(_, v)| v.to_string()).collect())
        .collect()
}

fn smoke_train(dir: &Path, extra: &[&str]) -> PathBuf {
    let out = dir.display().to_string();
    let cfg = repo("configs/smoke.toml");
    let mut args = vec!["train", "--config", &cfg[..], "--out", &out[..], "--quiet"];
    args.extend_from_slice(extra);
    let o = auv(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    dir.to_path_buf()
}

#[test]
fn train_smoke_writes_artifacts_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let a = smoke_train(&tmp.path().join("a"), &[]);
    for f in ["training.csv", "policy.ckpt", "resolved_config.toml"] {
        assert!(a.join(f).exists(), "{f} missing");
    }
    assert_eq!(log_without_wall(&a.join("training.csv")).len(), 3);
    let b = smoke_train(&tmp.path().join("b"), &[]);
    assert_eq!(log_without_wall(&a.join("training.csv")), log_without_wall(&b.join("training.csv")));
    assert_eq!(std::fs::read(a.join("policy.ckpt")).unwrap().len(), std::fs::read(b.join("policy.ckpt")).unwrap().len());

    // the snapshot alone reproduces the run
    let snap = a.join("resolved_config.toml").display().to_string();
    let c = tmp.path().join("c").display().to_string();
    let o = auv(&["train", "--config", &snap, "--out", &c, "--quiet", "--threads", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let c = PathBuf::from(c);
    assert_eq!(log_without_wall(&a.join("training.csv")), log_without_wall(&c.join("training.csv")));
    let weights = |p: &Path| {
        let bytes = std::fs::read(p).unwrap();
        let hlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        bytes[12 + hlen..].to_vec()
    };
    assert_eq!(weights(&a.join("policy.ckpt")), weights(&c.join("policy.ckpt")));

    let d = smoke_train(&tmp.path().join("d"), &["--seed", "99"]);
    assert_ne!(log_without_wall(&a.join("training.csv")), log_without_wall(&d.join("training.csv")));
}

#[test]
fn bad_config_is_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "seed = 1\n\n[ppo]\nhorizon = 8\nhorizn = 9\n").unwrap();
    let o = auv(&["train", "--config", &cfg.display().to_string(), "--out", &tmp.path().display().to_string()]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("horizn") && e.contains("line 5"), "{e}");

    let o = auv(&["train", "--override", "ppo.gamma=1.5", "--out", &tmp.path().display().to_string()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = auv(&["train", "--config", "/nonexistent/cfg.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn training_failure_is_runtime_error() {
    let o = auv(&["train", "--config", &repo("configs/smoke.toml"), "--out", "/dev/null/run", "--quiet"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn eval_and_replay_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let run = smoke_train(&tmp.path().join("run"), &[]);
    let ckpt = run.join("policy.ckpt").display().to_string();
    let ev = tmp.path().join("eval");
    let o = auv(&[
        "eval",
        "--checkpoint",
        &ckpt,
        "--scenario",
        &repo("scenarios/random_orientation.toml"),
        "--out",
        &ev.display().to_string(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(ev.join("metrics.csv").exists() && ev.join("summary.json").exists());

    // attitude draws come from the scenario seed
    let ev2 = tmp.path().join("eval2");
    let o = auv(&["eval", "--checkpoint", &ckpt, "--scenario", &repo("scenarios/random_orientation.toml"), "--out", &ev2.display().to_string()]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(ev.join("metrics.csv")).unwrap(), std::fs::read(ev2.join("metrics.csv")).unwrap());

    let rp = tmp.path().join("replay");
    let o = auv(&["replay", "--metrics", &ev.join("metrics.csv").display().to_string(), "--out", &rp.display().to_string()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("matches stored summary"));
    assert!(rp.join("trace.csv").exists() && rp.join("summary_replay.json").exists());

    // header only
    let text = std::fs::read_to_string(ev.join("metrics.csv")).unwrap();
    let header = text.lines().next().unwrap();
    let empty = tmp.path().join("empty.csv");
    std::fs::write(&empty, format!("{header}\n")).unwrap();
    let o = auv(&["replay", "--metrics", &empty.display().to_string(), "--out", &rp.display().to_string()]);
    assert_eq!(o.status.code(), Some(2));

    // a row cut short names its row
    let mut lines: Vec<&str> = text.lines().take(6).collect();
    let cut = lines[4].rsplitn(4, ',').last().unwrap().to_string();
    lines[4] = &cut;
    let trunc = tmp.path().join("trunc.csv");
    std::fs::write(&trunc, lines.join("\n")).unwrap();
    let o = auv(&["replay", "--metrics", &trunc.display().to_string(), "--out", &rp.display().to_string()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("row 4"), "{}", stderr(&o));

    let wrong = tmp.path().join("wrong.csv");
    std::fs::write(&wrong, text.replacen("t_s", "time", 1)).unwrap();
    let o = auv(&["replay", "--metrics", &wrong.display().to_string(), "--out", &rp.display().to_string()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eval_rejects_bad_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.ckpt");
    std::fs::write(&bad, b"AUVPOLCY\x05\x00\x00\x00{bad}").unwrap();
    let o = auv(&["eval", "--checkpoint", &bad.display().to_string(), "--scenario", &repo("scenarios/ballast.toml"), "--out", &tmp.path().display().to_string()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    // architecture in the header disagrees with the stored parameters
    let run = smoke_train(&tmp.path().join("run"), &[]);
    let bytes = std::fs::read(run.join("policy.ckpt")).unwrap();
    let text = String::from_utf8_lossy(&bytes).into_owned();
    assert!(text.contains("\"actor_hidden\":[128,128]"));
    let swapped = bytes.windows(24).position(|w| w == b"\"actor_hidden\":[128,128]").unwrap();
    let mut patched = bytes.clone();
    patched[swapped..swapped + 24].copy_from_slice(b"\"actor_hidden\":[128,127]");
    let mism = tmp.path().join("mism.ckpt");
    std::fs::write(&mism, patched).unwrap();
    let o = auv(&["eval", "--checkpoint", &mism.display().to_string(), "--scenario", &repo("scenarios/ballast.toml"), "--out", &tmp.path().display().to_string()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn bench_reports_throughput_and_determinism() {
    let o = auv(&["bench", "--envs", "64", "--steps", "30", "--threads", "2", "--check-determinism"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("env-steps/s") && out.contains("identical"), "{out}");
}
