use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cavity_scatter_cli::commands::{read_histogram, read_table, RESONANCE_COLUMNS};
use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cavity-scatter"));
    cmd.env_remove("CAVITY_SCATTER_THREADS").env_remove("RUST_LOG");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, json: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, json).unwrap();
    path
}

fn small_ensemble(dir: &Path) -> PathBuf {
    write_config(dir, r#"{"n_cavities": 3, "f_max_GHz": 3.0, "master_seed": 11}"#)
}

fn ensemble(config: &Path, out: &Path, extra: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = bin();
    cmd.args(["ensemble", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    cmd.args(extra);
    if let Some(t) = threads {
        cmd.env("CAVITY_SCATTER_THREADS", t);
    }
    cmd.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["modes", "--count", "3", "--e-max", "100"]).status.code(), Some(1));
    assert_eq!(run(&["amplitudes", "--ka-min", "0"]).status.code(), Some(1));
    assert_eq!(run(&["xi", "--oracle"]).status.code(), Some(1));
}

#[test]
fn config_errors_name_the_key() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), r#"{"antenna_radius_m": -1.0}"#);
    let o = run(&["modes", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("antenna_radius_m"), "{}", stderr(&o));

    let cfg = write_config(dir.path(), r#"{"f_max_ghz": 6.0}"#);
    let o = run(&["modes", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("f_max_ghz"), "{}", stderr(&o));

    let cfg = write_config(dir.path(), r#"{"cavity": {"c1_m": "wide"}}"#);
    let o = run(&["modes", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cavity.c1_m"), "{}", stderr(&o));
}

#[test]
fn io_errors_exit_three() {
    assert_eq!(run(&["modes", "--config", "/nonexistent/config.json"]).status.code(), Some(3));
    assert_eq!(run(&["ingest", "/nonexistent/levels.csv", "--unit", "GHz"]).status.code(), Some(3));
}

#[test]
fn bad_thread_variable_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = small_ensemble(dir.path());
    let o = ensemble(&cfg, &dir.path().join("run"), &[], Some("many"));
    assert_eq!(o.status.code(), Some(1));
    assert!(!dir.path().join("run/manifest.json").exists());
}

#[test]
fn modes_table_starts_at_ground_state() {
    let o = run(&["modes", "--count", "4"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,m,energy_per_m2,k_per_m,f_GHz,weight,weyl_count");
    assert_eq!(lines.len(), 5);
    let e: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
    let expect = std::f64::consts::PI.powi(2) * (1.0 / 0.09 + 1.0 / 0.04);
    assert!((e - expect).abs() < 1e-9 * expect);
}

#[test]
fn xi_oracle_columns_agree() {
    let o = run(&["xi", "--imaginary", "--oracle", "--k-min", "20", "--k-max", "100", "--points", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    for line in text.lines().skip(1) {
        let diff: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!(diff < 1e-4, "{line}");
    }
}

#[test]
fn reflect_is_unimodular_in_both_formats() {
    let o = run(&["reflect", "--points", "20", "--format", "json"]);
    assert!(o.status.success());
    let rows: Vec<Value> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows.len(), 20);
    for row in rows {
        assert!((row["abs_r"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn band_below_ground_state_gives_header_only_csv() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), r#"{"f_max_GHz": 0.5}"#);
    let out = dir.path().join("run");
    let o = run(&["resonances", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("resonances.csv")).unwrap();
    assert_eq!(text, format!("{}\n", RESONANCE_COLUMNS.join(",")));

    let o = run(&["resonances", "--config", cfg.to_str().unwrap(), "--format", "json"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), "[]");
}

#[test]
fn resonances_command_writes_manifest_with_hashes() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), r#"{"f_max_GHz": 3.0}"#);
    let out = dir.path().join("run");
    let o = run(&["resonances", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest: Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "resonances");
    let n = manifest["summary"]["resonances"].as_u64().unwrap();
    assert!(n > 0);
    assert_eq!(n, manifest["summary"]["visible_poles"].as_u64().unwrap());
    let (columns, rows) = read_table(&out.join("resonances.csv")).unwrap();
    assert_eq!(columns, RESONANCE_COLUMNS);
    assert_eq!(rows.len() as u64, n);
    for row in &rows {
        let im: f64 = row[7].parse().unwrap();
        let residual: f64 = row[10].parse().unwrap();
        assert!(im < 0.0 && residual < 1e-8);
    }
}

fn sha_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[test]
fn ensemble_outputs_are_deterministic_and_hashed() {
    let dir = TempDir::new().unwrap();
    let cfg = small_ensemble(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let oa = ensemble(&cfg, &a, &[], Some("1"));
    assert!(oa.status.success(), "{}", stderr(&oa));
    let ob = ensemble(&cfg, &b, &[], Some("3"));
    assert!(ob.status.success(), "{}", stderr(&ob));
    for name in ["resonances.csv", "spacings.csv", "histogram.csv"] {
        let x = std::fs::read(a.join(name)).unwrap();
        assert_eq!(x, std::fs::read(b.join(name)).unwrap(), "{name} differs");
    }

    let manifest: Value = serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 11);
    assert_eq!(manifest["config"]["n_cavities"], 3);
    assert_eq!(manifest["cavities"].as_array().unwrap().len(), 3);
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 3);
    for rec in outputs {
        let bytes = std::fs::read(a.join(rec["file"].as_str().unwrap())).unwrap();
        assert_eq!(rec["bytes"].as_u64().unwrap(), bytes.len() as u64);
        assert_eq!(rec["sha256"].as_str().unwrap(), sha_hex(&bytes));
    }
    let leftovers: Vec<_> = std::fs::read_dir(&a)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().ends_with(".partial"))
        .collect();
    assert!(leftovers.is_empty());

    let other = dir.path().join("c");
    let oc = ensemble(&cfg, &other, &["--seed", "12"], None);
    assert!(oc.status.success());
    assert_ne!(std::fs::read(a.join("spacings.csv")).unwrap(), std::fs::read(other.join("spacings.csv")).unwrap());
}

#[test]
fn json_output_mirrors_csv() {
    let dir = TempDir::new().unwrap();
    let cfg = small_ensemble(dir.path());
    let csv_dir = dir.path().join("csv");
    let json_dir = dir.path().join("json");
    assert!(ensemble(&cfg, &csv_dir, &[], None).status.success());
    assert!(ensemble(&cfg, &json_dir, &["--format", "json"], None).status.success());
    for stem in ["resonances", "spacings", "histogram"] {
        let (c_cols, c_rows) = read_table(&csv_dir.join(format!("{stem}.csv"))).unwrap();
        let (j_cols, j_rows) = read_table(&json_dir.join(format!("{stem}.json"))).unwrap();
        assert_eq!(c_rows.len(), j_rows.len(), "{stem}");
        if !c_rows.is_empty() {
            assert_eq!(c_cols, j_cols, "{stem}");
        }
        for (c, j) in c_rows.iter().zip(&j_rows) {
            for (x, y) in c.iter().zip(j) {
                match (x.parse::<f64>(), y.parse::<f64>()) {
                    (Ok(a), Ok(b)) => assert_eq!(a, b, "{stem}: {x} vs {y}"),
                    _ => assert_eq!(x.is_empty(), y.is_empty(), "{stem}: {x} vs {y}"),
                }
            }
        }
    }
}

#[test]
fn histogram_round_trips_and_compare_reports_statistics() {
    let dir = TempDir::new().unwrap();
    let cfg = small_ensemble(dir.path());
    let out = dir.path().join("run");
    assert!(ensemble(&cfg, &out, &[], None).status.success());
    let hist = read_histogram(&out.join("histogram.csv")).unwrap();
    assert!((hist.total_mass() - 1.0).abs() < 1e-12);
    assert_eq!(hist.bin_edges.len(), 21);

    let o = run(&["compare", "--input", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(header.contains(&"ks_distance") && header.contains(&"small_s_fraction"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let ks: f64 = row[2].parse().unwrap();
    assert!(ks > 0.0 && ks < 1.0);

    // A run compared with itself.
    let o = run(&["compare", "--input", out.to_str().unwrap(), "--against", out.join("histogram.csv").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let ks: f64 = text.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!(ks.abs() < 1e-12);
}

#[test]
fn decoupled_control_is_poissonian() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), r#"{"decoupled": true, "missing_fraction": 0.0}"#);
    let out = dir.path().join("run");
    let o = ensemble(&cfg, &out, &[], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&["compare", "--input", out.to_str().unwrap(), "--format", "json"]);
    let rows: Vec<Value> = serde_json::from_slice(&o.stdout).unwrap();
    let ks = rows[0]["ks_distance"].as_f64().unwrap();
    assert!(rows[0]["sample_count"].as_u64().unwrap() > 1000);
    assert!(ks < 0.05, "KS = {ks}");
}

#[test]
fn ingest_converts_units_and_feeds_compare() {
    let dir = TempDir::new().unwrap();
    let ghz = dir.path().join("levels_ghz.csv");
    std::fs::write(&ghz, "frequency\n2.0\n1.0\n3.0\n").unwrap();
    let o = run(&["ingest", ghz.to_str().unwrap(), "--unit", "GHz"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let values: Vec<f64> = text.lines().skip(1).map(|l| l.parse().unwrap()).collect();
    assert_eq!(text.lines().next(), Some("level_per_m2"));
    let k1 = 2.0 * std::f64::consts::PI * 1e9 / 299_792_458.0;
    let expect = [k1 * k1, 4.0 * k1 * k1, 9.0 * k1 * k1];
    for (v, e) in values.iter().zip(expect) {
        assert!((v - e).abs() < 1e-12 * e, "{v} vs {e}");
    }

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "1.0\n-2.0\n").unwrap();
    assert_eq!(run(&["ingest", bad.to_str().unwrap(), "--unit", "per_m2"]).status.code(), Some(1));
    std::fs::write(&bad, "1.0\nx\n").unwrap();
    assert_eq!(run(&["ingest", bad.to_str().unwrap(), "--unit", "per_m"]).status.code(), Some(1));

    // Ingested levels as a comparison reference.
    let cfg = small_ensemble(dir.path());
    let run_dir = dir.path().join("run");
    assert!(ensemble(&cfg, &run_dir, &[], None).status.success());
    let levels: String = (1..400).map(|i| format!("{}\n", (i as f64).powi(2) * 0.731 + i as f64 * 3.1)).collect();
    let raw = dir.path().join("raw.csv");
    std::fs::write(&raw, levels).unwrap();
    let ingested = dir.path().join("ingested");
    let o = run(&["ingest", raw.to_str().unwrap(), "--unit", "per_m2", "--out", ingested.to_str().unwrap()]);
    assert!(o.status.success());
    let reference = ingested.join("levels.csv");
    let o = run(&["compare", "--input", run_dir.to_str().unwrap(), "--against", reference.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[5], "398");
}
