use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use difq::io::{parse_scenario, scenario_hash, scenario_to_json, trace_header};
use difq_core::loss::{BertottiParams, FaultSpec, LossLineup};
use difq_core::network::{build_case, case_ids};

fn difq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_difq")).args(args).env_remove("DIFQ_OUT").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_variant(dir: &Path, name: &str, edit: impl FnOnce(&mut serde_json::Value)) -> PathBuf {
    let mut v = json(&repo("data/cases/A.json"));
    edit(&mut v);
    let p = dir.join(name);
    fs::write(&p, v.to_string()).unwrap();
    p
}

#[test]
fn cases_list_shows_six_cases_with_parameters() {
    let o = difq(&["cases", "list"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6);
    for (line, id) in lines.iter().zip(["A", "B", "C", "D", "E", "F"]) {
        assert!(line.starts_with(id), "{line}");
    }
    assert!(text.contains("(22 + j4) ohm") && text.contains("390 V") && text.contains("8 deg"));
    assert!(text.contains("245 V, 230 V, 200 V"));
}

#[test]
fn unknown_case_exits_with_validation_code() {
    for args in [&["cases", "run", "Z"][..], &["run", "cases/Z"], &["run", "no/such/file.json"]] {
        let o = difq(args);
        assert_eq!(code(&o), 2, "{args:?}");
        assert!(stderr(&o).contains("built-in case"), "{}", stderr(&o));
    }
}

#[test]
fn bad_arguments_exit_2_and_help_exits_0() {
    assert_eq!(code(&difq(&["frobnicate"])), 2);
    assert_eq!(code(&difq(&["loss", "--sweep", "100:10"])), 2);
    assert_eq!(code(&difq(&["envelope", "--v1", "-5", "--vdc", "48"])), 2);
    assert_eq!(code(&difq(&["--help"])), 0);
    assert_eq!(code(&difq(&["--version"])), 0);
}

#[test]
fn malformed_scenario_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let wrong_type = write_variant(dir.path(), "t.json", |v| v["line"]["x"] = "high".into());
    let o = difq(&["run", wrong_type.to_str().unwrap(), "--out", dir.path().join("o1").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line.x"), "{}", stderr(&o));

    let unknown = write_variant(dir.path(), "u.json", |v| v["module"]["colour"] = "red".into());
    let o = difq(&["run", unknown.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));

    let out_of_range = write_variant(dir.path(), "r.json", |v| v["sim"]["dt"] = (-1.0).into());
    let o = difq(&["run", out_of_range.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("dt"), "{}", stderr(&o));

    let not_json = dir.path().join("n.json");
    fs::write(&not_json, "{ topology: ").unwrap();
    assert_eq!(code(&difq(&["run", not_json.to_str().unwrap()])), 2);
    assert!(!dir.path().join("o1").join("manifest.json").exists());
}

#[test]
fn dc_collapse_exits_with_numerical_code() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_variant(dir.path(), "collapse.json", |v| {
        v["module"]["c_dc"] = 1e-4.into();
        v["module"]["llc"]["conductance"] = 1e-6.into();
        v["module"]["v_dc_min"] = 40.0.into();
        v["schedule"][1]["command"] = serde_json::json!({"kind": "inject_voltage", "v_rms": 30.0, "phase_deg": 180.0});
    });
    let out = dir.path().join("o");
    let o = difq(&["run", p.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("collapsed"));
    assert!(!out.join("manifest.json").exists());
}

/// Significant digits of a formatted number.
fn sig_digits(s: &str) -> usize {
    let mant = s.split('e').next().unwrap();
    let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    digits.trim_start_matches('0').len()
}

#[test]
fn run_writes_trace_metrics_charts_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a");
    let o = difq(&["run", "cases/A", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("all checks pass"));

    let mut rd = csv::Reader::from_path(out.join("trace.csv")).unwrap();
    let header: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, trace_header());
    let expected_start = ["t", "v_left_a", "v_right_a", "i_a", "vm_a", "vdcm_a", "v_left_b"];
    assert_eq!(&header[..7], expected_start);
    assert_eq!(&header[16..], ["p_src", "q_src", "p_mod", "q_mod", "vdc_shared"]);
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6000);
    for r in rows.iter().step_by(97) {
        assert_eq!(r.len(), 21);
        for f in r.iter() {
            let _: f64 = f.parse().unwrap();
            assert!(sig_digits(f) <= 9, "{f}");
        }
    }

    let mut md = csv::Reader::from_path(out.join("metrics.csv")).unwrap();
    assert_eq!(md.records().count(), 2);

    let svg = fs::read_to_string(out.join("charts.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("line currents"));

    let m = json(&out.join("manifest.json"));
    assert_eq!(m["tool"], "difq");
    assert_eq!(m["case"], "A");
    assert_eq!(m["pass"], true);
    assert_eq!(m["fidelity"], "averaged");
    assert_eq!(m["scenario_sha256"], scenario_hash(&build_case("A").unwrap()).as_str());
    let files: Vec<&str> = m["files"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).collect();
    assert_eq!(files, ["trace.csv", "metrics.csv", "charts.svg", "manifest.json"]);
    for f in files {
        assert!(out.join(f).is_file(), "{f}");
    }
    let names: Vec<&str> = m["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"A_q_after_4_cycles"), "{names:?}");
    // The config echo parses back to the scenario that ran.
    let echoed = parse_scenario(&m["scenario"].to_string()).unwrap();
    assert_eq!(echoed, build_case("A").unwrap());
    let leftovers: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "tmp"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn scenario_file_and_builtin_id_give_the_same_run() {
    let dir = tempfile::tempdir().unwrap();
    let (o1, o2) = (dir.path().join("id"), dir.path().join("file"));
    let file = repo("data/cases/B.json");
    assert_eq!(code(&difq(&["run", "B", "--out", o1.to_str().unwrap(), "--no-charts"])), 0);
    assert_eq!(code(&difq(&["run", file.to_str().unwrap(), "--out", o2.to_str().unwrap(), "--no-charts"])), 0);
    assert_eq!(fs::read(o1.join("trace.csv")).unwrap(), fs::read(o2.join("trace.csv")).unwrap());
    let (m1, m2) = (json(&o1.join("manifest.json")), json(&o2.join("manifest.json")));
    assert_eq!(m1["scenario_sha256"], m2["scenario_sha256"]);
    assert_eq!(m2["case"], "B");
    assert!(!o1.join("charts.svg").exists());
}

#[test]
fn default_output_root_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_difq"))
        .args(["run", "F", "--no-charts"])
        .env("DIFQ_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("F").join("manifest.json").is_file());
}

#[test]
fn run_all_writes_six_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let o = difq(&["cases", "run-all", "--out", dir.path().to_str().unwrap(), "--no-charts"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("6/6 cases pass"), "{}", stdout(&o));
    for id in case_ids() {
        let m = json(&dir.path().join(id).join("manifest.json"));
        assert_eq!(m["case"], id);
        assert_eq!(m["pass"], true, "{id}");
    }
}

#[test]
fn checked_in_data_matches_the_built_in_values() {
    for id in case_ids() {
        let text = fs::read_to_string(repo(&format!("data/cases/{id}.json"))).unwrap();
        let sc = parse_scenario(&text).unwrap();
        assert_eq!(sc, build_case(id).unwrap(), "{id}");
        assert_eq!(text.trim_end(), scenario_to_json(&sc), "{id}");
    }
    let lineup: LossLineup = serde_json::from_value(json(&repo("data/lineup.json"))).unwrap();
    assert_eq!(lineup, LossLineup::reference());
    let fault: FaultSpec = serde_json::from_value(json(&repo("data/fault.json"))).unwrap();
    assert_eq!(fault, FaultSpec::reference());
    let core: BertottiParams = serde_json::from_value(json(&repo("data/bertotti.json"))).unwrap();
    assert_eq!(core, BertottiParams::grain_oriented());
}

#[test]
fn exported_cases_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&difq(&["cases", "export", "--out", dir.path().to_str().unwrap()])), 0);
    for id in case_ids() {
        let text = fs::read_to_string(dir.path().join(format!("{id}.json"))).unwrap();
        let sc = parse_scenario(&text).unwrap();
        assert_eq!(scenario_to_json(&sc), text.trim_end());
    }
}

#[test]
fn envelope_prints_limits_and_writes_regions() {
    let dir = tempfile::tempdir().unwrap();
    let o = difq(&["envelope", "--v1", "230", "--vdc", "48", "--xline", "0.1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    for want in ["33.94", "8.463", "8.486", "78.06"] {
        assert!(text.contains(want), "{want} missing from\n{text}");
    }
    for f in [
        "region_reactive_comp.csv",
        "region_active_comp.csv",
        "region_two_grid_limits.csv",
        "region_regulation.csv",
        "regions.svg",
    ] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let mut rd = csv::Reader::from_path(dir.path().join("region_regulation.csv")).unwrap();
    assert_eq!(rd.headers().unwrap(), vec!["p_va", "q_var"]);
    assert_eq!(rd.records().count(), 181);

    let o = difq(&["envelope", "--v1", "230", "--vdc", "48", "--overmod"]);
    let text = stdout(&o);
    assert!(text.contains("48.00") && text.contains("12.046"), "{text}");
}

#[test]
fn loss_prints_lineup_and_faults_and_writes_a_monotone_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let lineup = repo("data/lineup.json");
    let o = difq(&[
        "loss",
        "--sweep",
        "10:10000",
        "--lineup",
        lineup.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    for want in ["209.6 W", "246.9 W", "50.0 W", "433 A", "5094 A", "200.0 W"] {
        assert!(text.contains(want), "{want} missing from\n{text}");
    }
    let mut rd = csv::Reader::from_path(dir.path().join("bertotti.csv")).unwrap();
    assert_eq!(rd.headers().unwrap(), vec!["f", "p_hys", "p_edd", "h"]);
    let rows: Vec<Vec<f64>> = rd.records().map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 61);
    assert_eq!((rows[0][0], rows[60][0]), (10.0, 10000.0));
    for w in rows.windows(2) {
        assert!(w[1][0] > w[0][0] && w[1][3] <= w[0][3], "{w:?}");
    }
}
