use std::process::{Command, Output};

fn gendesign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gendesign")).args(args).output().unwrap()
}

fn summary(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).lines().last().unwrap_or("").to_string()
}

#[test]
fn help_and_usage_exit_codes() {
    assert_eq!(gendesign(&["--help"]).status.code(), Some(0));
    assert_eq!(gendesign(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(gendesign(&["evaluate"]).status.code(), Some(1));
    assert_eq!(gendesign(&["train-acgan", "--experiment", "bogus"]).status.code(), Some(1));
}

#[test]
fn missing_input_is_runtime_error() {
    let out = gendesign(&["simulate-sda", "--pattern", "/nonexistent/pattern.txt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn bad_config_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "unknown_key = 1\n").unwrap();
    let out = gendesign(&["--config", cfg.to_str().unwrap(), "synth-facade"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn synth_shapes_writes_files_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    let out = gendesign(&["--out", o, "synth-shapes", "--per-class", "2", "--freehand", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let line = summary(&out);
    assert!(line.starts_with("synth-shapes "), "{line}");
    assert!(line.split(' ').skip(1).all(|kv| kv.contains('=')), "{line}");
    let pgms = std::fs::read_dir(dir.path()).unwrap().filter(|e| {
        e.as_ref().unwrap().path().extension().is_some_and(|x| x == "pgm")
    });
    assert_eq!(pgms.count(), 12);
    assert!(dir.path().join("manifest.csv").exists());
    assert!(dir.path().join("freehand/manifest.csv").exists());
}

#[test]
fn simulate_closed_and_open_patterns() {
    let dir = tempfile::tempdir().unwrap();
    let closed = dir.path().join("closed.txt");
    let open = dir.path().join("open.txt");
    std::fs::write(&closed, grid('0')).unwrap();
    std::fs::write(&open, grid('1')).unwrap();
    let a = summary(&gendesign(&["simulate-sda", "--pattern", closed.to_str().unwrap()]));
    let b = summary(&gendesign(&["simulate-sda", "--pattern", open.to_str().unwrap()]));
    assert!(a.contains("label=A"), "{a}");
    assert!(b.starts_with("simulate-sda ") && b.contains("wwr=100"), "{b}");
}

// 8 rows of 18 cells
fn grid(cell: char) -> String {
    (0..8).map(|_| format!("{}\n", cell.to_string().repeat(18))).collect()
}
