use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gkpsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gkpsim"))
        .args(args)
        .env_remove("GKPSIM_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn header_value(text: &str, key: &str) -> String {
    let prefix = format!("# {key}: ");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no `{key}` header"))
        .to_string()
}

fn rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn histogram_mass_below_one_percent() {
    let out = stdout(&gkpsim(&["histogram", "--protocol", "ape", "--rounds", "8"]));
    let mass: f64 = header_value(&out, "mass_below_0.01").parse().unwrap();
    assert!((mass - 0.94).abs() < 0.03, "{mass}");
    let bins = rows(&out);
    assert_eq!(bins.len(), 51);
    assert!((bins[1][1] - bins[1][0] - 0.002).abs() < 1e-15);
    let total: f64 = bins.iter().map(|r| r[2]).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn survey_orders_the_protocols() {
    let at_third = |p: &str| {
        let out = stdout(&gkpsim(&["survey", "--protocol", p, "--rounds", "4", "--samples", "20000", "--seed", "5"]));
        rows(&out)[60][1]
    };
    let (pe, ape) = (at_third("pe"), at_third("ape"));
    assert!(ape < pe, "ape {ape} pe {pe}");
}

#[test]
fn invalid_config_exits_with_code_two() {
    let o = gkpsim(&["photons", "--protocol", "pe", "--rounds", "8", "--delta", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`delta`"));

    let o = gkpsim(&["survey", "--protocol", "pe", "--rounds", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = gkpsim(&["survey", "--protocol", "xyz", "--rounds", "4"]);
    assert_eq!(o.status.code(), Some(2));
    let o = gkpsim(&["squeeze", "--sweep-db", "5:1:0.1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oversized_enumeration_exits_with_code_three() {
    let o = gkpsim(&["histogram", "--protocol", "pe", "--rounds", "40"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_file_matches_flags_and_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"command": "qec", "rounds": 50, "bound": 0.2, "seed": 3}"#).unwrap();
    let from_file = stdout(&gkpsim(&["run", "--config", cfg.to_str().unwrap()]));
    let from_flags = stdout(&gkpsim(&["qec", "--rounds", "50", "--bound", "0.2", "--seed", "3"]));
    assert_eq!(from_file, from_flags);

    fs::write(&cfg, r#"{"command": "qec", "rounds": 50, "bound": 0.2, "sed": 3}"#).unwrap();
    let o = gkpsim(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sed"));

    fs::write(&cfg, r#"{"command": "expand", "delta": -1, "order": 3, "nmax": 10}"#).unwrap();
    assert_eq!(gkpsim(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn output_is_independent_of_thread_count() {
    let args = ["survey", "--protocol", "ape", "--rounds", "6", "--samples", "9000", "--seed", "8"];
    let one = stdout(&gkpsim(&[&["--threads", "1"], &args[..]].concat()));
    let four = stdout(&gkpsim(&[&["--threads", "4"], &args[..]].concat()));
    let env = Command::new(env!("CARGO_BIN_EXE_gkpsim"))
        .args(args)
        .env("GKPSIM_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(one, four);
    assert_eq!(one, stdout(&env));
}

#[test]
fn table_file_round_trips_into_runs() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("table.csv");
    stdout(&gkpsim(&["table", "--depth", "6", "--out", table.to_str().unwrap()]));
    let with = stdout(&gkpsim(&["histogram", "--protocol", "ape", "--rounds", "6", "--table", table.to_str().unwrap()]));
    let without = stdout(&gkpsim(&["histogram", "--protocol", "ape", "--rounds", "6"]));
    assert_eq!(rows(&with), rows(&without));
    let o = gkpsim(&["histogram", "--protocol", "ape", "--rounds", "8", "--table", table.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn pulse_report_has_design_values() {
    let out = stdout(&gkpsim(&["pulse", "--chi-mhz", "2.5", "--omega-r-ghz", "10", "--target-gamma", "2.5066", "--out", "json"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["duration_ns"].as_f64().unwrap(), 200.0);
    assert!(v["summary"]["leakage_ratio"].as_f64().unwrap() < 0.5e-3);
    assert_eq!(v["summary"]["rotation_trivial"], true);
    assert_eq!(v["timing"]["round_ns"].as_f64().unwrap(), 500.0);
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn reproduce_all_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        stdout(&gkpsim(&["reproduce-all", "--dir", d.path().to_str().unwrap(), "--samples", "3000"]));
    }
    let (fa, fb) = (dir_bytes(a.path()), dir_bytes(b.path()));
    assert_eq!(fa, fb);
    let names: Vec<&str> = fa.iter().map(|f| f.0.as_str()).collect();
    for want in ["fig1_code0.csv", "fig2_wigner_delta0.2.csv", "fig5_ape_M8.csv", "fig7.csv", "fig9_ape.csv", "fig12_ape_M8.csv", "pulse.json", "qec.csv"] {
        assert!(names.contains(&want), "missing {want}");
    }
    let fig7 = String::from_utf8(fa.iter().find(|f| f.0 == "fig7.csv").unwrap().1.clone()).unwrap();
    assert!(fig7.lines().any(|l| l == "db,delta,p_error,n_photons"));
}
