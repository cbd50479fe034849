//! End-to-end runs of the command-line binary on JSON files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        let ws = Workspace { dir: tempfile::tempdir().unwrap() };
        ws.write("space.json", json!({"points": ["x", "y"], "d": [["0", "1"], ["1", "0"]]}));
        ws.write("mu.json", json!({"mass": {"x": "2/3", "y": "1/3"}}));
        ws.write("nu.json", json!({"mass": {"x": "1/3", "y": "2/3"}}));
        ws.write("hex.json", json!({"points": ["x", "y", "z"], "d": [["0", "1", "1"], ["1", "0", "1"], ["1", "1", "0"]]}));
        ws.write("a.json", json!({"generators": [{"x": "1/3", "y": "1/3", "z": "1/3"}, {"x": "2/3", "y": "1/3"}]}));
        ws.write("b.json", json!({"generators": [{"y": "2/3", "z": "1/3"}, {"x": "1/3", "z": "2/3"}]}));
        ws
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, v: Value) {
        std::fs::write(self.path(name), serde_json::to_string_pretty(&v).unwrap()).unwrap();
    }

    fn run(&self, args: &[&str]) -> Output {
        self.run_env(args, &[])
    }

    fn run_env(&self, args: &[&str], env: &[(&str, &str)]) -> Output {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_liftlab"));
        cmd.current_dir(self.dir.path()).args(args);
        for var in ["LIFTLAB_GUARD_SUBSETS", "LIFTLAB_GUARD_SPANNING_TREE", "LIFTLAB_GUARD_GRID"] {
            cmd.env_remove(var);
        }
        cmd.envs(env.iter().copied());
        cmd.output().unwrap()
    }
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn dist_args<'a>(modality: &'a str, construction: &'a str, nu: &'a str) -> Vec<&'a str> {
    vec!["dist", "--modality", modality, "--construction", construction, "--space", "space.json", "--mu", "mu.json", "--nu", nu]
}

#[test]
fn dist_reports_exact_values() {
    let ws = Workspace::new();
    for (construction, modality) in [("kantorovich", "expectation"), ("wasserstein", "generally"), ("lp-direct", "generally"), ("ky-fan", "generally")]
    {
        let v = json_of(&ws.run(&dist_args(modality, construction, "nu.json")));
        assert_eq!(v["value"]["exact"], "1/3", "{construction} {modality}");
        assert_eq!(v["value"]["decimal"], "0.333333333333");
    }
}

#[test]
fn dist_of_equal_arguments_is_zero() {
    let ws = Workspace::new();
    let v = json_of(&ws.run(&dist_args("expectation", "wasserstein", "mu.json")));
    assert_eq!(v["value"]["exact"], "0");
}

#[test]
fn witnesses_reverify() {
    let ws = Workspace::new();
    for (construction, modality) in [("kantorovich", "expectation"), ("wasserstein", "expectation"), ("kantorovich", "generally"), ("wasserstein", "generally")] {
        let mut args = dist_args(modality, construction, "nu.json");
        args.extend(["--witness", "--verify"]);
        let v = json_of(&ws.run(&args));
        assert_eq!(v["verified"]["ok"], true);
        assert!(!v["witness"].is_null(), "{construction} {modality}");
    }
    let sets = Workspace::new();
    sets.write("mu.json", json!({"set": ["x"]}));
    sets.write("nu.json", json!(["x", "y"]));
    let mut args = dist_args("sup", "kantorovich", "nu.json");
    args.extend(["--witness", "--verify"]);
    let v = json_of(&sets.run(&args));
    assert_eq!(v["value"]["exact"], "1");
    assert_eq!(v["verified"]["ok"], true);
}

#[test]
fn p_moment_values_are_decimal() {
    let ws = Workspace::new();
    let v = json_of(&ws.run(&dist_args("p_moment=2", "wasserstein", "nu.json")));
    assert!(v["value"]["decimal"].as_str().unwrap().starts_with("0.577350269189"));
    assert_eq!(v["value"]["digits"], 30);
    assert!(v["value"].get("exact").is_none());
    let v = json_of(&ws.run(&dist_args("p_moment=2", "kantorovich", "nu.json")));
    assert_eq!(v["exactness"], "lower_bound");
    assert!(v["upper_bound"]["decimal"].as_str().unwrap() <= "0.333333333333");
}

#[test]
fn duality_check() {
    let ws = Workspace::new();
    let args = ["duality-check", "--modality", "generally", "--space", "space.json", "--mu", "mu.json", "--nu", "nu.json"];
    let v = json_of(&ws.run(&args));
    assert_eq!(v["equal"], true);
    assert_eq!(v["gap"]["exact"], "0");
    let args = ["duality-check", "--modality", "p_moment=2", "--space", "space.json", "--mu", "mu.json", "--nu", "nu.json"];
    let v = json_of(&ws.run(&args));
    assert_eq!(v["equal"], false);
    assert_eq!(v["kantorovich_le_wasserstein"], true);
}

#[test]
fn relational_ground() {
    let ws = Workspace::new();
    ws.write("rel.json", json!({"points": ["x", "y"], "targets": ["u"], "d": [["1/2"], ["1"]]}));
    ws.write("dirac.json", json!({"u": "1"}));
    let args = ["dist", "--modality", "expectation", "--construction", "kantorovich", "--space", "rel.json", "--mu", "mu.json", "--nu", "dirac.json"];
    let v = json_of(&ws.run(&args));
    // E_mu[r(., u)] = 2/3 * 1/2 + 1/3 * 1
    assert_eq!(v["value"]["exact"], "2/3");
}

#[test]
fn witness_subcommand() {
    let ws = Workspace::new();
    let v = json_of(&ws.run(&["witness", "--epsilon", "1/4", "--space", "space.json", "--mu", "mu.json", "--nu", "nu.json", "--verify"]));
    assert_eq!(v["verified"], true);
    assert_eq!(v["margin"], "1/4");
    let v = json_of(&ws.run(&["witness", "--epsilon", "1/2", "--space", "space.json", "--mu", "mu.json", "--nu", "nu.json", "--crisp", "--verify"]));
    assert_eq!(v["verified"], true);
    assert_eq!(v["transport_cost"], "1/3");
    let out = ws.run(&["witness", "--epsilon", "1/2", "--space", "space.json", "--mu", "mu.json", "--nu", "nu.json"]);
    assert_eq!(out.status.code(), Some(1), "epsilon above the distance violates the precondition");
}

#[test]
fn convex_algorithms_agree() {
    let ws = Workspace::new();
    for alg in ["composite", "spanning-tree", "dual"] {
        let v = json_of(&ws.run(&["convex", "--algorithm", alg, "--space", "hex.json", "--a", "a.json", "--b", "b.json", "--verify"]));
        assert_eq!(v["value"]["exact"], "1/2", "{alg}");
        assert_eq!(v["verified"], true);
    }
}

#[test]
fn spanning_tree_guard_override() {
    let ws = Workspace::new();
    let args = ["convex", "--algorithm", "spanning-tree", "--space", "hex.json", "--a", "a.json", "--b", "b.json"];
    let out = ws.run_env(&args, &[("LIFTLAB_GUARD_SPANNING_TREE", "2")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("guard"));
    let out = ws.run_env(&args, &[("LIFTLAB_GUARD_SPANNING_TREE", "lots")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn subset_guard_override() {
    let ws = Workspace::new();
    let out = ws.run_env(&dist_args("generally", "lp-direct", "nu.json"), &[("LIFTLAB_GUARD_SUBSETS", "1")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn behavioural_labelled_chain() {
    let ws = Workspace::new();
    ws.write(
        "chain.json",
        json!({
            "kind": "labelled_markov_chain",
            "states": ["u", "v"],
            "gamma": {"u": {"out": "0", "next": {"v": "1"}}, "v": {"out": "1/2", "next": {"u": "1"}}}
        }),
    );
    let v = json_of(&ws.run(&["behavioural", "--coalgebra", "chain.json", "--modality", "expectation"]));
    assert_eq!(v["d"][0][1], "1/2");
    assert_eq!(v["iteration"], 2);
    assert_eq!(v["stop"], "exact_repeat");
    assert_eq!(v["monotone"], true);
    let out = ws.run(&["behavioural", "--coalgebra", "chain.json", "--modality", "convex_sup_expectation"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_csv() {
    let ws = Workspace::new();
    let out = ws.run(&["bench", "--suite", "convex", "--sizes", "3,5", "--generators", "2", "--repeats", "1"]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "algorithm,n,a0,b0,wall_ms,value,note");
    assert_eq!(lines.len(), 7);
    let guarded = lines.iter().find(|l| l.starts_with("spanning-tree,5")).unwrap();
    assert!(guarded.contains("guarded") && guarded.contains("390625"));
    // same instance, same value across algorithms
    let values: Vec<&str> = lines[1..4].iter().map(|l| l.split(',').nth(5).unwrap()).collect();
    assert!(values.iter().all(|v| *v == values[0]));
}

#[test]
fn examples_match() {
    let ws = Workspace::new();
    for name in ["hexagon", "p-wasserstein-gap", "lp-duality"] {
        let v = json_of(&ws.run(&["examples", "--name", name]));
        assert_eq!(v["all_match"], true, "{name}");
    }
}

#[test]
fn output_is_deterministic() {
    let ws = Workspace::new();
    let mut args = dist_args("generally", "kantorovich", "nu.json");
    args.push("--witness");
    let first = ws.run(&args).stdout;
    assert_eq!(first, ws.run(&args).stdout);
    let convex = ["convex", "--algorithm", "dual", "--space", "hex.json", "--a", "a.json", "--b", "b.json"];
    assert_eq!(ws.run(&convex).stdout, ws.run(&convex).stdout);
}

#[test]
fn invalid_input_exits_with_one() {
    let ws = Workspace::new();
    ws.write("bad.json", json!({"points": ["x", "y"], "d": [["0", "1"], ["1/2", "0"]]}));
    ws.write("heavy.json", json!({"x": "2/3", "y": "2/3"}));
    let cases: Vec<Vec<&str>> = vec![
        vec!["dist", "--modality", "expectation", "--construction", "kantorovich", "--space", "bad.json", "--mu", "mu.json", "--nu", "nu.json"],
        dist_args("expectation", "kantorovich", "heavy.json"),
        dist_args("expectation", "kantorovich", "missing.json"),
        dist_args("nonsense", "kantorovich", "nu.json"),
        dist_args("inf", "wasserstein", "nu.json"),
        vec!["frobnicate"],
    ];
    for args in cases {
        let out = ws.run(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty());
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn help_succeeds() {
    let ws = Workspace::new();
    let out = ws.run(&["--help"]);
    assert!(out.status.success());
    assert!(Path::new(env!("CARGO_BIN_EXE_liftlab")).exists());
}
