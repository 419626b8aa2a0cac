//! Scenario documents, CSV tables and file output.

use std::fs;
use std::path::{Path, PathBuf};

use difq_core::network::{build_case, case_ids, Scenario};
use difq_core::sim::{IntervalComparison, RunMetrics, TraceSet};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Version tag of the CSV layouts below.
pub const CSV_SCHEMA: &str = "difq-csv-1";

const PHASES: [&str; 3] = ["a", "b", "c"];

/// Format with 9 significant digits, `%g` style: plain decimals for
/// exponents in `[-5, 9)`, scientific otherwise, trailing zeros dropped.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mant, exp) = sci.split_once('e').unwrap_or((&sci, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mant))
    }
}

fn trim_zeros(s: &str) -> String {
    if !s.contains('.') {
        return s.into();
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.into()
    }
}

/// Parse a scenario document, reporting the path of the offending field.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let sc: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Validation(format!("scenario field `{path}`: {}", e.inner()))
    })?;
    sc.validate()?;
    Ok(sc)
}

pub fn scenario_to_json(sc: &Scenario) -> String {
    // Serializing plain data structs cannot fail.
    serde_json::to_string_pretty(sc).unwrap_or_default()
}

/// sha256 of the compact serialization, so formatting of the source file
/// does not change it.
pub fn scenario_hash(sc: &Scenario) -> String {
    let compact = serde_json::to_string(sc).unwrap_or_default();
    format!("{:x}", Sha256::digest(compact.as_bytes()))
}

#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    /// Built-in case this scenario is identical to.
    pub case_id: Option<String>,
    /// File it came from, if any.
    pub path: Option<PathBuf>,
}

/// Resolve a scenario argument: an existing file, or a built-in case id
/// written as `A` or `cases/A`.
pub fn load_scenario(arg: &str) -> Result<LoadedScenario> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let scenario = parse_scenario(&text)?;
        let case_id = case_ids().find(|id| build_case(id).is_ok_and(|c| c == scenario)).map(str::to_string);
        return Ok(LoadedScenario { scenario, case_id, path: Some(path.to_path_buf()) });
    }
    let id = arg.trim_end_matches('/').trim_start_matches("cases/").to_ascii_uppercase();
    match case_ids().find(|c| *c == id) {
        Some(c) => Ok(LoadedScenario { scenario: build_case(c)?, case_id: Some(c.to_string()), path: None }),
        None => Err(CliError::Validation(format!(
            "`{arg}` is neither a scenario file nor a built-in case (known: {})",
            case_ids().collect::<Vec<_>>().join(", ")
        ))),
    }
}

pub fn trace_header() -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for p in PHASES {
        for ch in ["v_left", "v_right", "i", "vm", "vdcm"] {
            h.push(format!("{ch}_{p}"));
        }
    }
    h.extend(["p_src", "q_src", "p_mod", "q_mod", "vdc_shared"].map(String::from));
    h
}

pub fn write_trace_csv(path: &Path, tr: &TraceSet) -> Result<()> {
    if !tr.is_consistent() {
        return Err(CliError::Internal("trace channels differ in length".into()));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    w.write_record(trace_header())?;
    let mut row = Vec::with_capacity(21);
    for k in 0..tr.len() {
        row.clear();
        row.push(fmt_num(tr.t[k]));
        for ph in &tr.phases {
            for ch in [&ph.v_left, &ph.v_right, &ph.i_line, &ph.v_m, &ph.v_dc_module] {
                row.push(fmt_num(ch[k]));
            }
        }
        for ch in [&tr.p_source, &tr.q_source, &tr.p_module, &tr.q_module, &tr.v_dc_shared] {
            row.push(fmt_num(ch[k]));
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn metrics_header() -> Vec<String> {
    let mut h: Vec<String> =
        ["start", "end", "command", "p_src", "q_src", "p_mod", "q_mod", "settle_time", "settled", "analytic_pass"]
            .map(String::from)
            .to_vec();
    for p in PHASES {
        for ch in ["i_rms", "i1", "i1_deg", "thd", "vm1", "vm1_deg", "p_mod"] {
            h.push(format!("{ch}_{p}"));
        }
    }
    h
}

/// One row per schedule interval. `settle_time` is empty when the interval
/// never settles.
pub fn write_metrics_csv(path: &Path, m: &RunMetrics, cmp: &[IntervalComparison]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    w.write_record(metrics_header())?;
    for (iv, c) in m.intervals.iter().zip(cmp) {
        let mut row = vec![
            fmt_num(iv.start),
            fmt_num(iv.end),
            iv.command.name().to_string(),
            fmt_num(iv.p_source),
            fmt_num(iv.q_source),
            fmt_num(iv.p_module),
            fmt_num(iv.q_module),
            iv.settling_time.map(fmt_num).unwrap_or_default(),
            iv.settled.to_string(),
            c.pass.to_string(),
        ];
        for ph in &iv.phases {
            row.extend([
                fmt_num(ph.i_rms),
                fmt_num(ph.i.norm()),
                fmt_num(ph.i.arg_deg()),
                fmt_num(ph.i_thd40),
                fmt_num(ph.v_m.norm()),
                fmt_num(ph.v_m.arg_deg()),
                fmt_num(ph.p_module),
            ]);
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Write a table of numeric rows under a header.
pub fn write_table_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|&x| fmt_num(x)))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn csv_io(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Internal(format!("{}: {other:?}", path.display())),
    }
}

/// Write through a temporary file and rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}
