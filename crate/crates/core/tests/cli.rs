use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wtc::data::{gen_linear_gaussian, load_fds};
use wtc::io::{decode_pgm, read_report, Checkpoint, REPORT_COLUMNS};
use wtc::models::{GenerativeModel, ModelKind};
use wtc::TrainConfig;

fn wtc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wtc")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = wtc(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn sprites(dir: &Path) -> String {
    let p = dir.join("sprites.fds");
    ok(&["gen-data", "--dataset", "toy-sprites", "--seed", "1", "--out", s(&p)]);
    s(&p).to_string()
}

#[test]
fn gen_data_is_deterministic_and_validates_names() {
    let dir = tempfile::tempdir().unwrap();
    let a = sprites(dir.path());
    let b = dir.path().join("again.fds");
    ok(&["gen-data", "--dataset", "toy-sprites", "--seed", "1", "--out", s(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(load_fds(&a).unwrap().len(), 768);
    let bad = wtc(&["gen-data", "--dataset", "mnist", "--seed", "1", "--out", s(&b)]);
    assert_eq!(bad.status.code(), Some(2));
    let lin = dir.path().join("lin.fds");
    ok(&[
        "gen-data",
        "--dataset",
        "linear-gaussian",
        "--seed",
        "2",
        "--out",
        s(&lin),
    ]);
    assert_eq!(load_fds(&lin).unwrap().len(), 625);
}

#[test]
fn train_writes_reproducible_checkpoints_and_logs() {
    let dir = tempfile::tempdir().unwrap();
    let data = sprites(dir.path());
    let run = |name: &str, steps: &str| {
        let out = dir.path().join(name);
        ok(&[
            "train",
            "--model",
            "wtc-vae",
            "--data",
            &data,
            "--gamma",
            "40",
            "--steps",
            steps,
            "--seed",
            "3",
            "--out",
            s(&out),
        ]);
        out
    };
    let a = run("a", "3");
    let b = run("b", "3");
    let ck_a = fs::read(a.join("checkpoint.wtck")).unwrap();
    assert_eq!(ck_a, fs::read(b.join("checkpoint.wtck")).unwrap());
    let log = fs::read_to_string(a.join("train_log.csv")).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines[0], "step,recon,kl,wtc_gap,prior_gap,critic_f,critic_g");
    assert_eq!(lines.len(), 4);
    let ck = Checkpoint::<f64>::from_bytes(&ck_a).unwrap();
    assert_eq!((ck.step, ck.config.gamma, ck.config.kind), (3, 40.0, ModelKind::WtcVae));

    let zero = run("zero", "0");
    let init = Checkpoint::<f64>::load(zero.join("checkpoint.wtck")).unwrap();
    let fresh = wtc::Trainer::new(init.config.clone(), 256).unwrap();
    assert_eq!(init.model, fresh.model);
    assert_eq!(init.step, 0);
}

#[test]
fn wtc_wae_with_small_gamma_only_warns() {
    let dir = tempfile::tempdir().unwrap();
    let data = sprites(dir.path());
    let out = ok(&[
        "train",
        "--model",
        "wtc-wae",
        "--data",
        &data,
        "--gamma",
        "1",
        "--beta",
        "4",
        "--steps",
        "1",
        "--seed",
        "0",
        "--out",
        s(&dir.path().join("w")),
    ]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn eval_of_ideal_encoder_scores_one() {
    let dir = tempfile::tempdir().unwrap();
    let lg = gen_linear_gaussian(2, &[5, 5, 5, 5], 12, 0.0).unwrap();
    let data = dir.path().join("lin.fds");
    wtc::data::save_fds(&lg.dataset, &data).unwrap();
    let (w, b) = lg.ideal_pixel_encoder();
    let model =
        GenerativeModel::from_affine_encoder(ModelKind::Vae, &w, &b, 12, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let ck = Checkpoint {
        config: TrainConfig {
            latent_dim: 4,
            ..TrainConfig::new(ModelKind::Vae)
        },
        model,
        critic_f: None,
        critic_g: None,
        step: 0,
    };
    let ckpt = dir.path().join("ideal.wtck");
    ck.save(&ckpt).unwrap();
    let report = dir.path().join("report.csv");
    ok(&[
        "eval",
        "--ckpt",
        s(&ckpt),
        "--data",
        s(&data),
        "--runs",
        "1",
        "--seed",
        "4",
        "--out",
        s(&report),
    ]);
    let text = fs::read_to_string(&report).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], REPORT_COLUMNS.join(","));
    assert_eq!(lines.len(), 3);
    let std_row: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(std_row[0], "vae_std");
    assert!(std_row[5..9].iter().all(|v| *v == "0"));
    let rows = read_report(&report).unwrap();
    assert_eq!(rows[0].factorvae, 1.0);

    let missing = wtc(&[
        "eval",
        "--ckpt",
        "/nonexistent.wtck",
        "--data",
        s(&data),
        "--seed",
        "1",
        "--out",
        s(&report),
    ]);
    assert_eq!(missing.status.code(), Some(1));
    let sprites = sprites(dir.path());
    let mismatch = wtc(&[
        "eval",
        "--ckpt",
        s(&ckpt),
        "--data",
        &sprites,
        "--seed",
        "1",
        "--out",
        s(&report),
    ]);
    assert_eq!(mismatch.status.code(), Some(1));
}

#[test]
fn sweep_traverse_and_rank_corr() {
    let dir = tempfile::tempdir().unwrap();
    let data = sprites(dir.path());
    let out = dir.path().join("sweep");
    ok(&[
        "sweep",
        "--model",
        "wtc-vae",
        "--gammas",
        "0,10,40",
        "--seeds",
        "1,2,3",
        "--steps",
        "2",
        "--runs",
        "1",
        "--data",
        &data,
        "--out",
        s(&out),
    ]);
    let report = fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(report.lines().count(), 1 + 9 * 2);
    assert!(report.lines().skip(1).all(|l| l.ends_with(",ok")));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 3);
    let rows = read_report(out.join("report.csv")).unwrap();
    assert_eq!(rows.len(), 9);
    let first: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    let mean_wdg = rows.iter().filter(|r| r.gamma == 0.0).map(|r| r.wdg).sum::<f64>() / 3.0;
    assert!((first[3].parse::<f64>().unwrap() - mean_wdg).abs() < 1e-12);

    let rc = dir.path().join("rank.csv");
    ok(&["rank-corr", "--reports", s(&out.join("report.csv")), "--out", s(&rc)]);
    let text = fs::read_to_string(&rc).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "metric,factorvae,mig,wdg,modularity");
    for (i, l) in lines[1..].iter().enumerate() {
        assert_eq!(l.split(',').nth(i + 1), Some("1"));
    }

    let ckpt = out.join("wtc-vae_g40_s1").join("checkpoint.wtck");
    let pgm = dir.path().join("t.pgm");
    ok(&[
        "traverse",
        "--ckpt",
        s(&ckpt),
        "--dim",
        "2",
        "--min",
        "-2",
        "--max",
        "2",
        "--steps",
        "5",
        "--anchor",
        "7",
        "--data",
        &data,
        "--out",
        s(&pgm),
    ]);
    let (w, h, px) = decode_pgm(&fs::read(&pgm).unwrap()).unwrap();
    assert_eq!((w, h, px.len()), (80, 16, 80 * 16));
    let bad = wtc(&[
        "traverse",
        "--ckpt",
        s(&ckpt),
        "--dim",
        "10",
        "--min",
        "-2",
        "--max",
        "2",
        "--steps",
        "5",
        "--data",
        &data,
        "--out",
        s(&pgm),
    ]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn rank_corr_needs_three_runs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    fs::write(
        &path,
        format!(
            "{}\nvae,0,1,0,1,0.1,0.5,0.1,0.9,10,1\nvae,0,1,1,1,0.2,0.6,0.2,0.8,11,1\n",
            REPORT_COLUMNS.join(",")
        ),
    )
    .unwrap();
    let out = wtc(&[
        "rank-corr",
        "--reports",
        s(&path),
        "--out",
        s(&dir.path().join("o.csv")),
    ]);
    assert_eq!(out.status.code(), Some(1));
}
