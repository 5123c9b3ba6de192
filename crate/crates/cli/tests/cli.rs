use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svetshare")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("svetshare-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().to_string()).collect()
}

#[test]
fn eval_presets() {
    assert_eq!(stdout(&["eval", "--preset", "svetlichny-box", "--functional", "svetlichny3"]).trim(), "8");
    assert_eq!(stdout(&["eval", "--preset", "uniform", "--functional", "svetlichny3"]).trim(), "0");
    assert_eq!(stdout(&["eval", "--preset", "mermin-box", "--functional", "mermin3"]).trim(), "4");
    assert_eq!(stdout(&["eval", "--preset", "tunable-unsafe", "--param", "1/2"]).trim(), "5");
    let ghz: f64 = stdout(&["eval", "--preset", "ghz-optimal"]).trim().parse().unwrap();
    assert!((ghz - 4.0 * 2f64.sqrt()).abs() < 1e-9);
}

#[test]
fn box_output_round_trips_through_eval() {
    let path = scratch("mix.json");
    stdout(&["box", "--preset", "mix-v", "--param", "3/4", "--out", path.to_str().unwrap()]);
    assert_eq!(stdout(&["eval", "--behavior", path.to_str().unwrap()]).trim(), "7");
}

#[test]
fn facet_summaries_and_determinism() {
    let (a, b) = (scratch("either-a.json"), scratch("either-b.json"));
    let summary = stdout(&["facets", "--model", "either", "--out", a.to_str().unwrap()]);
    assert!(summary.contains("48 facets"), "{summary}");
    assert!(summary.contains("32 non-trivial"), "{summary}");
    stdout(&["facets", "--model", "either", "--out", b.to_str().unwrap()]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let bip = stdout(&["facets", "--model", "bipartite-sanity"]);
    assert!(bip.contains("16 facets (8 trivial, 8 non-trivial)"), "{bip}");
}

#[test]
fn ns_gamma_sweep_ends_at_one_half() {
    let csv = stdout(&["guess", "--resource", "ns", "--sweep-gamma", "4:8:17"]);
    let guess = column(&csv, "guess");
    assert_eq!(guess.len(), 17);
    assert_eq!(guess.last().unwrap(), "0.5");
    assert_eq!(column(&csv, "guess_exact").last().unwrap(), "1/2");
    assert_eq!(csv, stdout(&["guess", "--resource", "ns", "--sweep-gamma", "4:8:17"]));
}

#[test]
fn ns_mixture_sweep_matches_closed_form() {
    let csv = stdout(&["guess", "--resource", "ns", "--fixed-marginal", "mix-v", "--sweep-v", "0:1:5"]);
    let exact = column(&csv, "guess_exact");
    assert_eq!(exact, ["1", "7/8", "3/4", "5/8", "1/2"]);
}

#[test]
fn quantum_visibility_sweep_is_monotone() {
    let args = ["guess", "--resource", "quantum", "--level", "2", "--sweep-v", "0.7:1:4"];
    let csv = stdout(&args);
    let guess: Vec<f64> = column(&csv, "guess").iter().map(|g| g.parse().unwrap()).collect();
    assert_eq!(guess.len(), 4);
    assert!(guess.windows(2).all(|w| w[1] <= w[0] + 1e-6), "{guess:?}");
    assert!(guess[3] <= 0.501, "{guess:?}");
    assert_eq!(csv, stdout(&args));
}

#[test]
fn quick_selftest_passes() {
    let out = stdout(&["selftest", "--quick"]);
    assert!(out.contains("all criteria passed"), "{out}");
    assert_eq!(out.lines().filter(|l| l.starts_with("[PASS]")).count(), 9, "{out}");
}

#[test]
fn corrupted_golden_file_names_the_facet_criterion() {
    let golden = include_str!("../../core/data/facets_either_model.json");
    let path = scratch("corrupt.json");
    std::fs::write(&path, golden.replacen("4]", "5]", 1)).unwrap();
    let out = run(&["selftest", "--quick", "--golden", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("criterion 4 (facets)"), "{stderr}");
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["eval", "--preset", "no-such-box"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "--behavior", "/nonexistent/box.json"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "--preset", "mix-v"]).status.code(), Some(2));
    assert_eq!(run(&["guess", "--sweep-gamma", "4:8"]).status.code(), Some(2));
    assert_eq!(
        run(&["guess", "--resource", "quantum", "--level", "0+Q", "--sweep-gamma", "4:8:2"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["guess", "--sweep-gamma", "4:8:2", "--ss", "--ss-slack", "2"]).status.code(), Some(2));
    assert_eq!(run(&["guess", "--sweep-gamma", "4:8:2", "--ss-slack", "1e-6"]).status.code(), Some(2));
    assert_eq!(run(&["facets", "--model", "local", "--out", "/nonexistent/dir/f.json"]).status.code(), Some(3));
}
