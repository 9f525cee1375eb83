use std::fs;
use std::path::{Path, PathBuf};

use qpspec::formats::read_table;
use qpspec::{run, Command, ExperimentConfig, LoadedConfig, RunError};
use serde_json::json;

fn load(v: serde_json::Value) -> LoadedConfig {
    LoadedConfig::from_value(v, PathBuf::new()).unwrap()
}

fn small(cmd: Command) -> serde_json::Value {
    let base = json!({"potential": {"id": "amo"}, "lambda": 3.0, "seed": 5});
    let extra = match cmd {
        Command::Numtheory => json!({"depth": 12, "search_bound": 1000}),
        Command::Lyapunov => json!({"energies": [0.0, 1.0], "n": [20, 40, 80], "Nx": 32}),
        Command::Ldt => json!({"energies": [0.3], "n": [10, 20, 40], "delta": 0.05, "G": 1000}),
        Command::Wegner => json!({"energies": [0.3], "n": [20], "G": 1000}),
        Command::Spectrum => json!({"n": [16, 32], "Gx": 64, "energies": [-9.0, 0.1, 9.0]}),
        Command::Homogeneity => json!({"n": [16, 32], "Gx": 64, "sigma_count": 5, "fill": 50}),
        Command::Segment => json!({"energies": [0.0, 2.0], "n": [8], "Gx": 64}),
        Command::Greencheck => json!({"lambda": 50.0, "energies": [3.0], "n": [20], "Gx": 64, "Nx": 64}),
    };
    let mut v = base;
    v.as_object_mut().unwrap().extend(extra.as_object().unwrap().clone());
    v
}

fn csv_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn every_command_writes_its_fixed_columns() {
    for cmd in Command::ALL {
        let tmp = tempfile::tempdir().unwrap();
        let loaded = load(small(cmd));
        let outcome = match run(cmd, &loaded, tmp.path()) {
            Ok(o) => o,
            Err(e) => panic!("{}: {e}", cmd.name()),
        };
        let (header, rows) = read_table(&outcome.csv).unwrap();
        assert_eq!(header, cmd.columns(), "{}", cmd.name());
        assert!(!rows.is_empty(), "{}", cmd.name());
        let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(&outcome.manifest).unwrap()).unwrap();
        assert_eq!(manifest["files"].as_array().unwrap().len(), outcome.files.len());
        assert_eq!(manifest["checks"].as_array().unwrap().len(), outcome.checks.len());
        assert_eq!(manifest["seed"], 5);
    }
}

#[test]
fn tables_are_identical_across_thread_counts() {
    for cmd in Command::ALL {
        let mut outputs = Vec::new();
        for threads in [1, 4] {
            let tmp = tempfile::tempdir().unwrap();
            let mut v = small(cmd);
            v["threads"] = threads.into();
            run(cmd, &load(v), tmp.path()).unwrap();
            outputs.push(csv_bytes(tmp.path()));
        }
        assert_eq!(outputs[0], outputs[1], "{}", cmd.name());
    }
}

#[test]
fn inline_file_and_builtin_potentials_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let amo = qpspec_core::potential::GevreyPotential::almost_mathieu();
    qpspec::formats::save_potential(&tmp.path().join("amo.json"), &amo).unwrap();
    let doc = qpspec::formats::PotentialDoc::from_potential(&amo);
    let common = json!({"lambda": 2.0, "energies": [0.5], "n": [10, 20, 40], "Nx": 16});
    let mut tables = Vec::new();
    for potential in [json!({"id": "amo"}), json!({"file": "amo.json"}), json!({"inline": doc})] {
        let mut v = common.clone();
        v["potential"] = potential;
        let loaded = LoadedConfig::from_value(v, tmp.path().to_path_buf()).unwrap();
        let out = tmp.path().join(format!("o{}", tables.len()));
        let o = run(Command::Lyapunov, &loaded, &out).unwrap();
        tables.push(fs::read(o.csv).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
    assert_eq!(tables[0], tables[2]);
}

#[test]
fn verification_failure_is_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v = small(Command::Homogeneity);
    v["constants"] = json!({"tau_min": 1.0});
    v["verify"] = true.into();
    let err = run(Command::Homogeneity, &load(v.clone()), tmp.path()).unwrap_err();
    assert!(matches!(err, RunError::Verification { .. }));
    assert_eq!(err.exit_code(), 3);
    // the same run without verify reports the failed check instead
    v["verify"] = false.into();
    let o = run(Command::Homogeneity, &load(v), tmp.path()).unwrap();
    assert!(!o.passed());
}

#[test]
fn free_spectrum_criterion_certifies_outside_the_band() {
    let tmp = tempfile::tempdir().unwrap();
    let v = json!({"potential": {"id": "zero"}, "lambda": 0.0, "n": [40, 80], "Gx": 64,
        "energies": [-3.0, 0.0, 3.0], "edge_policy": "keep_all"});
    let o = run(Command::Spectrum, &load(v), tmp.path()).unwrap();
    assert!(o.passed());
    let (header, rows) = read_table(&tmp.path().join("spectrum.criterion.csv")).unwrap();
    let certified = header.iter().position(|h| h == "certified").unwrap();
    let flags: Vec<&str> = rows.iter().map(|r| r[certified].as_str()).collect();
    assert_eq!(flags, ["true", "false", "true"]);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        if p.file_name().unwrap() == "gevrey_potential.json" {
            continue;
        }
        let loaded = LoadedConfig::from_path(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        loaded.config.potential(&loaded.base_dir).unwrap();
        count += 1;
    }
    assert!(count >= 8);
}

#[test]
fn schema_lists_exactly_the_accepted_fields() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/config.schema.json");
    let schema: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let cfg: ExperimentConfig = serde_json::from_value(json!({"potential": {"id": "amo"}, "lambda": 1})).unwrap();
    let echo = serde_json::to_value(&cfg).unwrap();
    let keys = |v: &serde_json::Value| {
        let mut k: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
        k.sort();
        k
    };
    assert_eq!(keys(&schema["properties"]), keys(&echo));
    assert_eq!(keys(&schema["properties"]["constants"]["properties"]), keys(&echo["constants"]));
    assert_eq!(keys(&schema["properties"]["potential"]["properties"]), keys(&echo["potential"]));
}
