use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_kpasat");

fn kpasat(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn kpasat")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_instance(dir: &Path, name: &str) {
    let o = kpasat(
        dir,
        &[
            "--seed",
            "5",
            "gen",
            "-n",
            "2",
            "--rows",
            "2",
            "--cols",
            "1",
            "--key",
            "3c",
            "--key-token",
            "t",
            "--pairs",
            "3",
            "-o",
            name,
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn encrypt_then_decrypt() {
    let d = tempfile::tempdir().unwrap();
    let o = kpasat(
        d.path(),
        &["encrypt", "--key", "k6", "-p", "6162636465666768"],
    );
    assert!(o.status.success());
    let ct = stdout(&o).trim().to_string();
    assert_eq!(ct.len(), 16);
    let o = kpasat(
        d.path(),
        &["decrypt", "--key", "b25286f7d3e7b3e1", "--ciphertext", &ct],
    );
    assert_eq!(stdout(&o).trim(), "6162636465666768");
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(
        kpasat(d.path(), &["encrypt", "--key", "k3", "-p", "12"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        kpasat(d.path(), &["verify", "missing.cnf", "--key", "00"])
            .status
            .code(),
        Some(4)
    );
    assert_eq!(kpasat(d.path(), &["frobnicate"]).status.code(), Some(2));
    fs::write(d.path().join("bad.cnf"), "p cnf 2 1\n1 3 0\n").unwrap();
    assert_eq!(
        kpasat(d.path(), &["solve", "bad.cnf"]).status.code(),
        Some(3)
    );
}

#[test]
fn gen_is_reproducible_and_named() {
    let d = tempfile::tempdir().unwrap();
    for out in ["a.cnf", "b.cnf"] {
        let o = kpasat(
            d.path(),
            &[
                "--seed", "11", "gen", "--key", "k3", "--pairs", "22", "-o", out,
            ],
        );
        assert!(o.status.success());
        assert!(stdout(&o).starts_with("3-k3-22\tL=7296\t"));
    }
    let a = fs::read(d.path().join("a.cnf")).unwrap();
    assert_eq!(a, fs::read(d.path().join("b.cnf")).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.lines().any(|l| l.starts_with("p cnf 7296 ")));
    assert!(!text.contains("secret_key"));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("a.json")).unwrap()).unwrap();
    assert_eq!(meta["num_vars"], 7296);
    assert_eq!(meta["seed"], 11);
}

#[test]
fn solve_and_verify_model() {
    let d = tempfile::tempdir().unwrap();
    small_instance(d.path(), "i.cnf");
    let o = kpasat(d.path(), &["--seed", "1", "solve", "i.cnf"]);
    assert_eq!(o.status.code(), Some(10));
    fs::write(d.path().join("model.txt"), &o.stdout).unwrap();
    let v = kpasat(d.path(), &["verify", "i.cnf", "--model", "model.txt"]);
    assert!(v.status.success());
    assert_eq!(stdout(&v).trim(), "verified 3c");
    let wrong = kpasat(d.path(), &["verify", "i.cnf", "--key", "3d"]);
    assert_eq!(wrong.status.code(), Some(5));
}

#[test]
fn bench_external_template_and_report() {
    let d = tempfile::tempdir().unwrap();
    small_instance(d.path(), "i.cnf");
    let template = format!("{BIN} --seed={{seed}} solve {{instance}}");
    let o = kpasat(
        d.path(),
        &[
            "--seed",
            "3",
            "bench",
            "i.cnf",
            "--template",
            &template,
            "--reps",
            "3",
            "--jobs",
            "2",
            "--records",
            "runs.csv",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("instance,count,median,Q1,Q3,mean,sigma_pct\n2-t-3-default,3,"));
    let o = kpasat(
        d.path(),
        &[
            "--seed",
            "4",
            "bench",
            "i.cnf",
            "--internal",
            "--solver-config",
            "sw10",
            "--records",
            "runs.csv",
        ],
    );
    assert!(o.status.success());
    let csv = fs::read_to_string(d.path().join("runs.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().skip(1).all(|l| l.contains(",SAT,3c,true,")));
    let r = kpasat(d.path(), &["report", "runs.csv", "--boxplot", "box.dat"]);
    let table = stdout(&r);
    assert!(table.contains("\n2-t-3-default,3,"));
    assert!(table.contains("\n2-t-3-sw10,1,"));
    assert!(
        fs::read_to_string(d.path().join("box.dat"))
            .unwrap()
            .lines()
            .count()
            == 3
    );
}

#[test]
fn tune_synthetic_export_and_replay() {
    let d = tempfile::tempdir().unwrap();
    fs::write(
        d.path().join("p.pcs"),
        "gluehist [40, 250] [50]i\ngluecut0 [1, 6] [3]i\ngluecut1 [5, 9] [5]i\nadjustglue [0.3, 0.9] [0.7]\nfreq {0.0, 0.1, 0.2, 0.3, 0.4} [0.0]\n",
    )
    .unwrap();
    let o = kpasat(
        d.path(),
        &[
            "--seed",
            "2",
            "tune",
            "--pcs",
            "p.pcs",
            "--synthetic",
            "--budget",
            "200",
            "--journal",
            "j.jsonl",
            "--export",
            "best.flags",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("incumbent 0 after 1 evals"));
    let flags = fs::read_to_string(d.path().join("best.flags")).unwrap();
    assert!(flags.starts_with("# name=aac-"));
    assert!(flags.contains("--gluecut0=4"));
    let r = kpasat(d.path(), &["replay", "j.jsonl"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(
        kpasat(d.path(), &["tune", "--pcs", "p.pcs"]).status.code(),
        Some(3)
    );
}
