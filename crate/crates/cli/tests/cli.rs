use std::path::Path;
use std::process::{Command, Output};

fn pgembed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pgembed")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = pgembed(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    pgembed(args).status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(dir: &Path, v: &str, k: &str, n: &str) {
    ok(&["simulate", "--V", v, "--K", k, "--N", n, "--seed", "9", "--out", s(dir)]);
}

#[test]
fn gibbs_run_replays_byte_for_byte_and_ignores_threads() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    simulate(&sim, "8", "2", "3000");
    let pairs = sim.join("pairs.txt");
    let run = |out: &Path, threads: &str| {
        ok(&[
            "--threads", threads, "fit", "--method", "gibbs", "--stats", s(&pairs), "--K", "2", "--iters", "40",
            "--burn-in", "10", "--seed", "5", "--out", s(out),
        ]);
    };
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run(&a, "1");
    run(&b, "3");
    let draws_a = std::fs::read(a.join("draws.bin")).unwrap();
    assert_eq!(draws_a, std::fs::read(b.join("draws.bin")).unwrap());
    assert_eq!(std::fs::read(a.join("meta.json")).unwrap(), std::fs::read(b.join("meta.json")).unwrap());

    std::fs::remove_file(a.join("draws.bin")).unwrap();
    ok(&["replay", "--manifest", s(&a.join("manifest.json"))]);
    assert_eq!(draws_a, std::fs::read(a.join("draws.bin")).unwrap());
}

#[test]
fn diagnostics_and_eval_on_a_small_run() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    simulate(&sim, "6", "2", "4000");
    let pairs = sim.join("pairs.txt");
    let fit = tmp.path().join("fit");
    ok(&["fit", "--method", "laplace", "--stats", s(&pairs), "--K", "2", "--draws", "200", "--out", s(&fit)]);
    assert!(fit.join("laplace").join("laplace.bin").exists());

    let d = tmp.path().join("d");
    let line = ok(&[
        "diagnose", "--draws", s(&fit), "--truth", s(&sim.join("truth.bin")), "--report", "coverage", "--out", s(&d),
    ]);
    assert!(line.contains("over 36 pairs"), "{line}");
    let csv = std::fs::read_to_string(d.join("coverage.csv")).unwrap();
    assert_eq!(csv.lines().count(), 37);

    ok(&["diagnose", "--draws", s(&fit), "--report", "ess", "--pairs", "0:1", "--out", s(&d)]);
    let ess = std::fs::read_to_string(d.join("ess.csv")).unwrap();
    let rows: Vec<&str> = ess.lines().collect();
    assert_eq!(rows[0], "label,ess");
    // co_prob plus K coordinates of rho_0 and alpha_1
    assert_eq!(rows.len(), 1 + 1 + 2 + 2);

    let est = format!("{}:mean", s(&fit));
    let first = ok(&["eval", "--estimate", &est, "--test-stats", s(&pairs)]);
    let second = ok(&["eval", "--estimate", &est, "--test-stats", s(&pairs)]);
    assert_eq!(first, second);
    let ll: f64 = first.trim().parse().unwrap();
    assert!(ll < 0.0 && ll > -1.0, "{ll}");

    let table = tmp.path().join("emb.txt");
    ok(&["export", "--estimate", s(&fit.join("map.bin")), "--out", s(&table)]);
    let text = std::fs::read_to_string(&table).unwrap();
    assert_eq!(text.lines().next(), Some("6 2"));
    assert_eq!(text.lines().nth(1).unwrap().split(' ').count(), 5);
}

#[test]
fn ingest_writes_vocab_and_splits() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("c.txt");
    let text = "the cat sat on the mat and the dog sat on the log ".repeat(50);
    std::fs::write(&corpus, text).unwrap();
    let out = tmp.path().join("ing");
    ok(&["ingest", "--input", s(&corpus), "--vocab-size", "5", "--out", s(&out)]);
    let vocab = std::fs::read_to_string(out.join("vocab.txt")).unwrap();
    assert_eq!(vocab.lines().count(), 5);
    assert_eq!(vocab.lines().next(), Some("the"));
    for f in ["train.txt", "test.txt", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    assert_eq!(code(&["fit", "--method", "map"]), 2);
    assert_eq!(code(&["fit", "--method", "map", "--stats", "/no/such/file", "--K", "2", "--out", s(&out)]), 3);
    assert_eq!(code(&["simulate", "--V", "3", "--K", "0", "--N", "10", "--out", s(&out)]), 2);

    let sim = tmp.path().join("sim");
    simulate(&sim, "8", "2", "500");
    let pairs = sim.join("pairs.txt");
    let lambda = ["fit", "--method", "map", "--stats", s(&pairs), "--K", "2", "--lambda", "-1", "--out", s(&out)];
    assert_eq!(code(&lambda), 2);
    let bad = ["fit", "--method", "gibbs", "--stats", s(&pairs), "--K", "2", "--constraint", "ids:0", "--out", s(&out)];
    assert_eq!(code(&bad), 2);

    // 2VK - K^2 free coordinates above the dense limit
    let big = tmp.path().join("big");
    simulate(&big, "800", "4", "100");
    let (big_pairs, big_truth) = (big.join("pairs.txt"), big.join("truth.bin"));
    let laplace = [
        "fit", "--method", "laplace", "--stats", s(&big_pairs), "--K", "4", "--map", s(&big_truth), "--out", s(&out),
    ];
    assert_eq!(code(&laplace), 4);
}
