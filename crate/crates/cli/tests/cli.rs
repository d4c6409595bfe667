use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_clusterlr");

struct Run {
    code: i32,
    dir: tempfile::TempDir,
}

impl Run {
    fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.dir.path().join(name)).unwrap()
    }

    fn exists(&self, name: &str) -> bool {
        self.dir.path().join(name).exists()
    }

    fn manifest(&self) -> Value {
        serde_json::from_str(&self.read("manifest.json")).unwrap()
    }

    fn header(&self) -> String {
        self.read("results.csv").lines().next().unwrap().to_string()
    }
}

fn write_config(dir: &Path, config: &Value) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

fn run_with(sub: &str, config: &Value, extra: &[&str], env_threads: Option<&str>) -> Run {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), config);
    let out = dir.path().join("out");
    let mut cmd = Command::new(BIN);
    cmd.arg(sub).arg("--config").arg(&cfg).arg("--out").arg(&out).args(extra);
    cmd.env_remove("CLUSTERLR_THREADS");
    if let Some(t) = env_threads {
        cmd.env("CLUSTERLR_THREADS", t);
    }
    let status = cmd.output().unwrap();
    // Move the output directory up so `read` sees the files directly.
    let results = tempfile::tempdir().unwrap();
    if out.exists() {
        for entry in std::fs::read_dir(&out).unwrap() {
            let entry = entry.unwrap();
            std::fs::copy(entry.path(), results.path().join(entry.file_name())).unwrap();
        }
    }
    Run { code: status.status.code().unwrap(), dir: results }
}

fn run(sub: &str, config: &Value) -> Run {
    run_with(sub, config, &[], None)
}

fn tfim_chain(n: usize) -> Value {
    serde_json::json!({
        "lattice": { "dimension": 1, "side": n },
        "hamiltonian": "tfim",
        "params": { "J": 1.0, "g": 1.0 }
    })
}

fn simulate_config(epsilon: f64) -> Value {
    serde_json::json!({
        "command": "simulate",
        "model": tfim_chain(8),
        "observable": [[0, "Z"]],
        "grid": { "t": [0.25, 0.5] },
        "plan": { "r": 2, "m_star": 3, "epsilon": epsilon },
        "oracle": true
    })
}

fn dominance_config() -> Value {
    serde_json::json!({
        "command": "bound",
        "seed": 5,
        "sweeps": [
            { "bound": "dominance", "instances": 12, "max_qubits": 8 },
            { "bound": "standard_lr", "d_r": 1, "d_s": 1, "dist": [1, 2], "t": [0.5] }
        ]
    })
}

#[test]
fn simulate_header_and_oracle_agreement() {
    let r = run("simulate", &simulate_config(1e-6));
    assert_eq!(r.code, 0);
    assert_eq!(r.header(), "t,m_star,r,clusters,level_sum,estimate,exact,abs_error");
    let csv = r.read("results.csv");
    let last = csv.lines().last().unwrap();
    let err: f64 = last.split(',').nth(7).unwrap().parse().unwrap();
    assert!(err < 1e-10, "{last}");
    let m = r.manifest();
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["truncated"], false);
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn headers_of_other_commands() {
    let cases = [
        (
            "oracle",
            serde_json::json!({ "command": "oracle", "model": tfim_chain(4), "observable": [[1, "X"]], "grid": { "t": [0.1] } }),
            "t,expectation",
        ),
        (
            "lattice",
            serde_json::json!({ "command": "lattice", "model": tfim_chain(6), "clusters": { "root": 0, "m_max": 3 } }),
            "m,count,brute_force,cap",
        ),
        (
            "ssb",
            serde_json::json!({ "command": "ssb", "ssb": { "experiment": "ghz", "g": 0.1, "lengths": [3, 4] } }),
            "L,g,even,odd,delta",
        ),
        (
            "ssb",
            serde_json::json!({ "command": "ssb", "ssb": { "experiment": "identity", "instances": 2, "max_sites": 3, "max_order": 2, "t": [0.4] } }),
            "instance,n,m,t,lhs_re,lhs_im,rhs_re,rhs_im,gap",
        ),
        (
            "ssb",
            serde_json::json!({ "command": "ssb", "ssb": { "experiment": "rk", "lattice": { "dimension": 1, "side": 8, "periodic": true }, "beta": 0.5, "regions": [[2], [3]] } }),
            "region,vertices,boundary_bonds,value,bound,violated",
        ),
        (
            "bench",
            serde_json::json!({ "command": "bench", "bench": { "lengths": [4], "repetitions": 1 } }),
            "length,repetitions,clusters,mean_seconds,min_seconds",
        ),
        ("bound", dominance_config(), "bound,instance,R,t,value,valid,exact"),
    ];
    for (sub, cfg, header) in cases {
        let r = run(sub, &cfg);
        assert_eq!(r.code, 0, "{sub}");
        assert_eq!(r.header(), header, "{sub}");
    }
}

#[test]
fn lattice_writes_graph_document() {
    let r = run("lattice", &serde_json::json!({ "command": "lattice", "model": tfim_chain(3) }));
    assert_eq!(r.code, 0);
    assert!(!r.exists("results.csv"));
    let g: Value = serde_json::from_str(&r.read("lattice.json")).unwrap();
    assert!(g.is_object());
}

#[test]
fn nonpositive_epsilon_is_a_validity_error() {
    for eps in [0.0, -1e-3] {
        let r = run("simulate", &simulate_config(eps));
        assert_eq!(r.code, 2);
        assert!(!r.exists("results.csv"));
        let m = r.manifest();
        assert_eq!(m["exit_code"], 2);
        assert!(m["error"].as_str().unwrap().contains("target error"));
    }
}

#[test]
fn invalid_bound_points_are_flagged_not_fatal() {
    let cfg = serde_json::json!({
        "command": "bound",
        "sweeps": [{ "bound": "combinatorial", "regions": [[1, 1, 2]], "t": [0.1, 5.0] }]
    });
    let r = run("bound", &cfg);
    assert_eq!(r.code, 0);
    let csv = r.read("results.csv");
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert!(rows[0].ends_with(",true,"));
    assert!(rows[1].ends_with(",,false,"));
    assert!(!r.manifest()["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn unknown_keys_and_stray_sections_are_rejected() {
    let mut cfg = simulate_config(1e-6);
    cfg["bogus"] = 1.into();
    assert_eq!(run("simulate", &cfg).code, 1);

    let mut cfg = simulate_config(1e-6);
    cfg["plan"]["typo"] = 1.into();
    assert_eq!(run("simulate", &cfg).code, 1);

    let mut cfg = simulate_config(1e-6);
    cfg["bench"] = serde_json::json!({ "lengths": [4] });
    assert_eq!(run("simulate", &cfg).code, 1);

    let cfg = serde_json::json!({ "command": "simulate", "model": tfim_chain(4) });
    assert_eq!(run("simulate", &cfg).code, 1);
}

#[test]
fn subcommand_must_match_config() {
    assert_eq!(run("bound", &simulate_config(1e-6)).code, 1);
    assert_eq!(run("run", &simulate_config(1e-6)).code, 0);
}

#[test]
fn outputs_are_byte_identical_across_runs_and_threads() {
    let cfg = dominance_config();
    let a = run_with("bound", &cfg, &["--threads", "1"], None);
    let b = run_with("bound", &cfg, &["--threads", "3"], None);
    let c = run_with("bound", &cfg, &[], Some("2"));
    assert_eq!(a.code, 0);
    assert_eq!(a.read("results.csv"), b.read("results.csv"));
    assert_eq!(a.read("results.csv"), c.read("results.csv"));
    assert_eq!(b.manifest()["threads"], 3);
    assert_eq!(c.manifest()["threads"], 2);
    assert_eq!(a.manifest()["config_sha256"], b.manifest()["config_sha256"]);
}

#[test]
fn threads_flag_takes_precedence_over_env() {
    let r = run_with("bound", &dominance_config(), &["--threads", "2"], Some("3"));
    assert_eq!(r.manifest()["threads"], 2);
    let bad = run_with("bound", &dominance_config(), &[], Some("many"));
    assert_eq!(bad.code, 1);
}

#[test]
fn seed_override_changes_dominance_rows() {
    let a = run_with("bound", &dominance_config(), &[], None);
    let b = run_with("bound", &dominance_config(), &["--seed", "99"], None);
    assert_ne!(a.read("results.csv"), b.read("results.csv"));
    assert_eq!(b.manifest()["seed"], 99);
}

#[test]
fn mode_override_reaches_default_bounds() {
    let r = run_with("simulate", &simulate_config(1e-3), &["--mode", "paper-formula"], None);
    assert_eq!(r.code, 0);
    let m = r.manifest();
    assert_eq!(m["config"]["plan"]["mode"], "paper-formula");
    assert!(m["config"]["bounds"].is_object());
}

#[test]
fn verify_passes_and_mutation_fails() {
    let ok = run("verify", &serde_json::json!({ "command": "verify" }));
    assert_eq!(ok.code, 0);
    let report: Value = serde_json::from_str(&ok.read("verify.json")).unwrap();
    assert_eq!(report["pass"], true);

    let cfg = serde_json::json!({
        "command": "verify",
        "verify": { "suites": ["completeness"], "mutation": "flip-correction-sign" }
    });
    let bad = run("verify", &cfg);
    assert_eq!(bad.code, 1);
    let report: Value = serde_json::from_str(&bad.read("verify.json")).unwrap();
    assert_eq!(report["pass"], false);
    assert_eq!(bad.manifest()["exit_code"], 1);

    let cfg = serde_json::json!({ "command": "verify", "verify": { "mutation": "nonsense" } });
    assert_eq!(run("verify", &cfg).code, 1);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            clusterlr_cli::config::RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen > 0);
}
