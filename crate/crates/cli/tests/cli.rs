use std::fs;
use std::process::{Command, Output};

fn seenselect(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_seenselect"));
    cmd.args(args).env("RUST_LOG", "warn");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

const SYNTH: &str = "40,20,16,5,3,30";

#[test]
fn run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = seenselect(&["run", "--synthetic", SYNTH, "--repeats", "2", "--out-dir", out_dir], &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for r in 0..2 {
        for name in [
            format!("split_r{r}.json"),
            format!("seed_r{r}.json"),
            format!("trace_r{r}.jsonl"),
            format!("report_es_r{r}.csv"),
            format!("report_ps_r{r}.json"),
            format!("rarity_r{r}.json"),
        ] {
            assert!(dir.path().join(&name).exists(), "{name}");
        }
    }
    let summary = fs::read_to_string(dir.path().join("rarity_summary.csv")).unwrap();
    assert!(summary.starts_with("split,A_R,A_C,Y_R,Y_C\n"));
    assert!(String::from_utf8_lossy(&out.stdout).contains("repeat 1"));
}

#[test]
fn stage_commands_chain_through_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let traces = dir.path().join("traces");
    for stage in ["ingest", "split", "seed", "mine", "eval", "rarity"] {
        let out = seenselect(
            &[
                stage,
                "--synthetic",
                SYNTH,
                "--repeats",
                "1",
                "--out-dir",
                out_dir,
                "--trace-dir",
                traces.to_str().unwrap(),
            ],
            &[],
        );
        assert_eq!(code(&out), 0, "{stage}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert!(traces.join("trace_r0.jsonl").exists());
    assert!(dir.path().join("rarity_r0.csv").exists());
}

#[test]
fn single_repeat_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = seenselect(&["split", "--synthetic", SYNTH, "--repeat", "2", "--out-dir", out_dir], &[]);
    assert_eq!(code(&out), 0);
    assert!(dir.path().join("split_r2.json").exists());
    assert!(!dir.path().join("split_r0.json").exists());
    let out = seenselect(&["split", "--synthetic", SYNTH, "--repeat", "3", "--out-dir", out_dir], &[]);
    assert_eq!(code(&out), 2);
}

#[test]
fn config_file_env_and_flags_layer() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, format!("synthetic = {SYNTH}\nrepeats = 1\nseed = 1\n")).unwrap();
    let out_dir = dir.path().join("out");
    let args = ["split", "--config", conf.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()];

    let out = seenselect(&args, &[("SEENSELECT_SEED", "5")]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let split = fs::read_to_string(out_dir.join("split_r0.json")).unwrap();
    assert!(split.contains("\"rng_seed\": 5"));

    let out = seenselect(&[&args[..], &["--seed", "9"]].concat(), &[("SEENSELECT_SEED", "5")]);
    assert_eq!(code(&out), 0);
    let split = fs::read_to_string(out_dir.join("split_r0.json")).unwrap();
    assert!(split.contains("\"rng_seed\": 9"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    assert_eq!(code(&seenselect(&["run", "--out-dir", out_dir], &[])), 2);
    assert_eq!(code(&seenselect(&["run", "--synthetic", SYNTH, "--q", "two", "--out-dir", out_dir], &[])), 2);
    let out = seenselect(&["run", "--synthetic", SYNTH, "--out-dir", out_dir], &[("SEENSELECT_BOGUS", "1")]);
    assert_eq!(code(&out), 2);
}

#[test]
fn data_format_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let attrs = dir.path().join("a.tsv");
    fs::write(&attrs, "class\tx\ty\nalpha\t0.5\tnot-a-number\n").unwrap();
    let out = seenselect(
        &["ingest", "--attributes", attrs.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()],
        &[],
    );
    assert_eq!(code(&out), 3);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 2"), "{stderr}");
    assert!(dir.path().join("INCOMPLETE").exists());
}

#[test]
fn protocol_violation_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let base = ["--synthetic", SYNTH, "--repeats", "1", "--out-dir", out_dir];
    assert_eq!(code(&seenselect(&[&["run"][..], &base[..]].concat(), &[])), 0);
    let path = dir.path().join("split_r0.json");
    let mut doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let moved = doc["split"]["common_unseen"][0].clone();
    doc["split"]["seen_proposed"].as_array_mut().unwrap().push(moved);
    fs::write(&path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    assert_eq!(code(&seenselect(&[&["eval"][..], &base[..]].concat(), &[])), 4);
}

#[test]
fn help_lists_subcommands() {
    let out = seenselect(&["--help"], &[]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["ingest", "split", "seed", "mine", "eval", "rarity", "run"] {
        assert!(text.contains(sub), "{sub}");
    }
}
