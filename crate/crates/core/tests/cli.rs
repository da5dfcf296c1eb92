use std::process::Command;

fn sumopt() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sumopt"));
    c.env("RUST_LOG", "error").env("SUMOPT_THREADS", "2");
    c
}

fn args(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

#[test]
fn twenty_seeds_thirty_epochs_row_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let st = sumopt()
        .args(args("--synthetic ridge --n 100 --d 10 --mu 0.1 --method finito --ordering permuted --epochs 30 --seeds 20 --out"))
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# sumopt trace schema 1"));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 17);
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 20 * 31);
    // Rows come grouped by seed, epochs ascending.
    let seed_col = header.iter().position(|h| *h == "seed").unwrap();
    let epoch_col = header.iter().position(|h| *h == "epoch").unwrap();
    let first: Vec<&str> = rows[0].split(',').collect();
    let last: Vec<&str> = rows[30].split(',').collect();
    assert_eq!((first[seed_col], first[epoch_col]), ("0", "0"));
    assert_eq!((last[seed_col], last[epoch_col]), ("0", "30"));
    assert!(rows[31].split(',').nth(seed_col) == Some("1"));
}

#[test]
fn prox_support_is_enforced() {
    let ok = sumopt().args(args("--synthetic logistic --n 30 --d 3 --l2 0.1 --method saga --l1 0.01 --loss logistic --epochs 2")).output().unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).starts_with("# sumopt trace schema 1"));
    let bad = sumopt().args(args("--synthetic logistic --n 30 --d 3 --l2 0.1 --method finito --l1 0.01")).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("finito"));
}

#[test]
fn config_errors_exit_two() {
    for a in [
        "--synthetic ridge --method newton",
        "--synthetic ridge --ordering sideways",
        "--synthetic ridge --step fast",
        "--synthetic ridge --seeds 0",
        "--method saga",
        "--data /definitely/not/here.svm",
        "--synthetic ridge --loss logistic",
    ] {
        let o = sumopt().args(args(a)).output().unwrap();
        assert_eq!(o.status.code(), Some(2), "{a}");
    }
}

#[test]
fn runtime_failure_exits_three() {
    // Finito refuses the default step when the big-data condition fails.
    let o = sumopt().args(args("--synthetic logistic --n 10 --d 3 --l2 0.001 --method finito --epochs 1")).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn libsvm_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("tiny.svm");
    std::fs::write(&data, "+1 1:0.5 3:1.0\n-1 2:1.0\n+1 1:1.0 2:-0.5\n-1 3:0.25\n").unwrap();
    let o = sumopt()
        .arg("--data")
        .arg(&data)
        .args(args("--loss logistic --l2 0.1 --method sag,saga --epochs 3 --no-wall-time"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 2 + 2 * 4);
}

#[test]
fn verify_subcommand() {
    let o = sumopt().args(["verify", "--pairs", "200"]).output().unwrap();
    assert!(o.status.success());
    let s = String::from_utf8_lossy(&o.stdout);
    assert!(s.contains("full-strong-lb") && s.contains("variance-decomposition"));
    assert!(s.trim_end().ends_with("catalog passed"));
}

#[test]
fn bounds_columns_filled() {
    let o = sumopt()
        .args(args("--synthetic ridge --n 50 --d 4 --l2 0.1 --method saga --epochs 3 --bounds --lyapunov --no-wall-time"))
        .output()
        .unwrap();
    assert!(o.status.success());
    let s = String::from_utf8_lossy(&o.stdout);
    let rows: Vec<Vec<&str>> = s.lines().skip(2).map(|l| l.split(',').collect()).collect();
    for r in rows {
        assert_eq!(r[12], "dist_sq");
        let (metric, bound) = (r[13].parse::<f64>().unwrap(), r[14].parse::<f64>().unwrap());
        assert!(metric.is_finite() && bound.is_finite());
        assert!(r[15].parse::<f64>().unwrap() >= 0.0);
        assert_eq!(r[6], "0");
    }
}
