use std::process::Command;

fn rstre(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_rstre"))
        .args(args)
        .env_remove("RSTRE_SEED")
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn body(csv: &str) -> String {
    csv.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

#[test]
fn exact_overlap_on_the_triangle() {
    let (code, out, _) = rstre(&["overlap", "--graph", "complete:3", "--beta", "0", "--exact", "--replicas", "1"]);
    assert_eq!(code, 0);
    assert!(out.contains("# experiment=overlap-sweep"));
    let row = out.lines().find(|l| l.contains(",edge_overlap,")).unwrap();
    let value: f64 = row.split(',').nth(5).unwrap().parse().unwrap();
    assert!((value - 4.0 / 3.0).abs() < 1e-12);
}

#[test]
fn worker_count_and_seed_source() {
    let args = ["length", "--graph", "complete:12", "--beta-grid", "0,3", "--replicas", "4", "--samples", "10", "--seed", "9"];
    let (_, one, _) = rstre(&[&args[..], &["--workers", "1"]].concat());
    let (_, eight, _) = rstre(&[&args[..], &["--workers", "8"]].concat());
    assert_eq!(body(&one), body(&eight));
    let from_env = Command::new(env!("CARGO_BIN_EXE_rstre"))
        .args(&args[..args.len() - 2])
        .env("RSTRE_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(body(&String::from_utf8(from_env.stdout).unwrap()), body(&one));
}

#[test]
fn config_file_and_output_file() {
    let dir = std::env::temp_dir().join(format!("rstre-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.cfg");
    let out = dir.join("out.csv");
    std::fs::write(&cfg, "# lattice run\nexperiment=free-energy-sweep\ngraph=box:1:2\nbeta=0\nreplicas=1\n").unwrap();
    let (code, stdout, _) = rstre(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    let row = text.lines().find(|l| l.contains(",free_energy,")).unwrap();
    let value: f64 = row.split(',').nth(5).unwrap().parse().unwrap();
    assert!((value - 192f64.ln() / 9.0).abs() < 1e-12);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn exit_codes() {
    assert_eq!(rstre(&["overlap", "--graph", "bogus:1"]).0, 1);
    assert_eq!(rstre(&["frobnicate"]).0, 1);
    assert_eq!(rstre(&["run"]).0, 1);
    assert_eq!(rstre(&["--help"]).0, 0);
    // Unwritable output path.
    assert_eq!(rstre(&["overlap", "--graph", "complete:4", "--replicas", "1", "--out", "/nonexistent/dir/x.csv"]).0, 3);
    // A negative tolerance can never be met.
    let (code, _, err) = rstre(&["kernel", "--graph", "regular:8:3", "--beta", "1", "--exact", "--replicas", "1", "--set", "tolerance.check=-1"]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("check failed"));
}

#[test]
fn sample_prints_trees() {
    let (code, out, _) = rstre(&["sample", "--graph", "cycle:5", "--beta", "1", "--replicas", "3"]);
    assert_eq!(code, 0);
    let trees: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(trees.len(), 3);
    assert!(trees.iter().all(|t| t.split_whitespace().count() == 4));
}
