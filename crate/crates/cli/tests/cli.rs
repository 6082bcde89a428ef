use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pedcoal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pedcoal")).args(args).env_remove("PEDCOAL_OUT").output().unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

/// exp(tQ) by a long Taylor series; fine for the tiny, well-scaled chains used here.
fn expm(q: [[f64; 3]; 3], t: f64) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    let mut term = [[0.0; 3]; 3];
    for i in 0..3 {
        out[i][i] = 1.0;
        term[i][i] = 1.0;
    }
    for k in 1..80 {
        let mut next = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                next[i][j] = (0..3).map(|m| term[i][m] * q[m][j]).sum::<f64>() * t / k as f64;
            }
        }
        term = next;
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] += term[i][j];
            }
        }
    }
    out
}

#[test]
fn presets_lists_the_four_models() {
    let out = pedcoal(&["presets"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let names: Vec<&str> = v["presets"].as_array().unwrap().iter().map(|p| p["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["two_deme_wf", "large_offspring", "beta_fitness", "fv_torus"]);
    assert!(v["presets"].as_array().unwrap().iter().all(|p| p["parameters"].is_object() && p["defaults"].is_object()));
}

#[test]
fn kernel_matches_the_two_deme_pair_chain() {
    let dir = tempfile::tempdir().unwrap();
    let out = pedcoal(&["kernel", "--n", "2", "--preset", "two_deme_wf", "--t", "1.0", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = data_rows(&fs::read_to_string(dir.path().join("kernel.csv")).unwrap());
    let prob = |from: &str, to: &[&str]| -> f64 {
        rows.iter().filter(|r| r[2] == from && to.contains(&r[4].as_str())).map(|r| r[5].parse::<f64>().unwrap()).sum()
    };

    // κ = 1 per deme and μ = 1 per edge: lineage pairs move between
    // "apart, same deme", "apart, different demes" and "merged".
    let p = expm([[-3.0, 2.0, 1.0], [2.0, -2.0, 0.0], [0.0, 0.0, 0.0]], 1.0);
    let merged = ["{1 2}@0", "{1 2}@1"];
    assert!((prob("{1}@0{2}@0", &merged) - p[0][2]).abs() < 1e-12);
    assert!((prob("{1}@0{2}@1", &merged) - p[1][2]).abs() < 1e-12);
    assert!((prob("{1 2}@0", &["{1 2}@0"]) - (1.0 + (-2.0f64).exp()) / 2.0).abs() < 1e-12);
    for from in ["{1 2}@0", "{1}@0{2}@0", "{1}@0{2}@1", "{1}@1{2}@1"] {
        let all: f64 = rows.iter().filter(|r| r[2] == from).map(|r| r[5].parse::<f64>().unwrap()).sum();
        assert!((all - 1.0).abs() < 1e-12);
    }
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files.into_iter().map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())).collect()
}

#[test]
fn same_seed_gives_byte_identical_files() {
    let base = tempfile::tempdir().unwrap();
    for command in ["simulate-quenched", "simulate-limit", "simulate-pedigree", "sfs"] {
        let run = |name: &str, seed: &str| {
            let dir = base.path().join(format!("{command}-{name}"));
            let out = pedcoal(&[
                command,
                "--population",
                "100",
                "--seed",
                seed,
                "--set",
                "experiment.pedigrees=4",
                "--set",
                "experiment.loci=3",
                "--set",
                "experiment.realizations=20",
                "--set",
                "experiment.sampling=[0,0,1]",
                "--out",
                dir.to_str().unwrap(),
            ]);
            assert!(out.status.success(), "{command}: {}", String::from_utf8_lossy(&out.stderr));
            read_all(&dir)
        };
        let (a, b, c) = (run("a", "11"), run("b", "11"), run("c", "12"));
        assert_eq!(a, b, "{command} is not reproducible");
        assert_ne!(a, c, "{command} ignores the seed");
    }
}

#[test]
fn outputs_carry_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let out = pedcoal(&["simulate-limit", "--set", "experiment.realizations=5", "--seed", "4", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("simulate-limit.metadata.json")).unwrap()).unwrap();
    let hash = meta["provenance"]["config_sha256"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 64);
    assert_eq!(meta["provenance"]["seed"], 4);
    let csv = fs::read_to_string(dir.path().join("limit.csv")).unwrap();
    assert!(csv.starts_with("# provenance: ") && csv.lines().next().unwrap().contains(&hash));
    let jsonl = fs::read_to_string(dir.path().join("psi.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
    assert_eq!(first["provenance"]["config_sha256"], hash.as_str());
}

#[test]
fn config_file_and_environment_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, "seed = 9\n[model]\npreset = \"large_offspring\"\npsi = 0.4\n[experiment]\ntimes = [0.5, 1.0]\n").unwrap();
    let target = dir.path().join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_pedcoal"))
        .args(["kernel", "--config", config.to_str().unwrap(), "--set", "model.gamma=0.5"])
        .env("PEDCOAL_OUT", &target)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(target.join("kernel.metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["seed"], 9);
    assert_eq!(meta["config"]["model"]["psi"], 0.4);
    assert_eq!(meta["config"]["model"]["gamma"], 0.5);
    assert_eq!(meta["summary"]["times"], serde_json::json!([0.5, 1.0]));
}

#[test]
fn exit_codes_and_error_json() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    for args in [
        vec!["kernel", "--set", "model.preset=nope", "--out", out_dir],
        vec!["kernel", "--preset", "large_offspring", "--set", "model.psi=1.5", "--out", out_dir],
        vec!["kernel", "--set", "experiment.sampling=[0,7]", "--out", out_dir],
        vec!["kernel", "--set", "experiment.unknown=1", "--out", out_dir],
        vec!["no-such-command"],
    ] {
        let out = pedcoal(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
        assert_eq!(err["error"], "validation");
        assert_eq!(err["exit_code"], 2);
    }

    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = pedcoal(&["kernel", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "runtime");
}
