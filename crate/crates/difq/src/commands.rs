//! Subcommand implementations. Each returns the text to print; files go
//! under the given output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use difq_core::envelope::{
    global_max_phase, max_inphase_diff, parity_max_phase, regulation_circle, sample_region, EnvelopeQuery, RegionKind,
};
use difq_core::loss::{
    bandwidth_3db, bertotti_loss, fault_ratings, loss_lineup, transformer_transfer, BertottiParams, FaultSpec,
    LossColumn, LossLineup, ThreeDb,
};
use difq_core::network::{build_case, case_ids, Fidelity, CASES};
use difq_core::sim::{compare_to_analytic, compute_metrics, run};
use serde::de::DeserializeOwned;

use crate::charts::{region_chart, run_chart};
use crate::checks::{case_checks, generic_checks, Check};
use crate::error::{CliError, Result};
use crate::io::{
    ensure_dir, fmt_num, load_scenario, scenario_to_json, write_atomic, write_metrics_csv, write_table_csv,
    write_trace_csv,
};
use crate::manifest::RunManifest;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "DIFQ_OUT";
pub const DEFAULT_OUT: &str = "out";

pub const MANIFEST: &str = "manifest.json";
pub const TRACE: &str = "trace.csv";
pub const METRICS: &str = "metrics.csv";
pub const CHARTS: &str = "charts.svg";

/// `DIFQ_OUT` if set, else `./out`.
pub fn default_out_root() -> PathBuf {
    std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub scenario: String,
    pub out: Option<PathBuf>,
    pub fidelity: Option<Fidelity>,
    pub charts: bool,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub manifest: RunManifest,
}

impl RunSummary {
    pub fn report(&self) -> String {
        let m = &self.manifest;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} ({} fidelity, {} steps, energy residual {:.2e}) -> {}",
            m.case.as_deref().or(m.source.as_deref()).unwrap_or("scenario"),
            m.fidelity,
            m.steps,
            m.energy_residual,
            self.dir.display()
        );
        for c in &m.checks {
            let _ = writeln!(
                s,
                "  [{}] {:<32} {:>14}  {}",
                if c.pass { "pass" } else { "FAIL" },
                c.name,
                fmt_num(c.value),
                c.expected
            );
        }
        let _ = writeln!(s, "{}", if m.pass { "all checks pass" } else { "some checks failed" });
        s
    }
}

fn scenario_name(path: Option<&Path>, case: Option<&str>) -> String {
    case.map(str::to_string)
        .or_else(|| path.and_then(|p| p.file_stem()).map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "scenario".into())
}

pub fn cmd_run(opts: &RunOptions) -> Result<RunSummary> {
    let loaded = load_scenario(&opts.scenario)?;
    let mut sc = loaded.scenario;
    if let Some(f) = opts.fidelity {
        if f != sc.sim.fidelity {
            sc.sim = sc.sim.with_fidelity(f);
        }
    }
    sc.validate()?;
    let dir = opts
        .out
        .clone()
        .unwrap_or_else(|| default_out_root().join(scenario_name(loaded.path.as_deref(), loaded.case_id.as_deref())));
    ensure_dir(&dir)?;

    let out = run(&sc)?;
    let metrics = compute_metrics(&sc, &out)?;
    let cmp = compare_to_analytic(&sc, &metrics)?;
    let mut checks: Vec<Check> = generic_checks(&metrics, &cmp);
    if let Some(id) = &loaded.case_id {
        checks.extend(case_checks(id, &sc, &metrics, &out));
    }

    let mut files = Vec::new();
    write_trace_csv(&dir.join(TRACE), &out.trace)?;
    files.push(TRACE.to_string());
    write_metrics_csv(&dir.join(METRICS), &metrics, &cmp)?;
    files.push(METRICS.to_string());
    if opts.charts {
        let svg = run_chart(&out.trace)?;
        write_atomic(&dir.join(CHARTS), svg.as_bytes())?;
        files.push(CHARTS.to_string());
    }
    files.push(MANIFEST.to_string());

    let manifest = RunManifest::new(
        &sc,
        loaded.case_id,
        loaded.path.map(|p| p.display().to_string()),
        out.steps,
        metrics.energy_residual,
        files,
        checks,
    );
    manifest.write(&dir.join(MANIFEST))?;
    Ok(RunSummary { dir, manifest })
}

pub fn cmd_cases_list() -> String {
    let mut s = String::new();
    for c in &CASES {
        let _ = writeln!(s, "{}  {:<52} {}", c.id, c.title, c.parameters);
    }
    s
}

/// Run every built-in case into `<root>/<id>`, concurrently.
pub fn cmd_cases_run_all(root: &Path, fidelity: Option<Fidelity>, charts: bool) -> Result<Vec<RunSummary>> {
    ensure_dir(root)?;
    let ids: Vec<&str> = case_ids().collect();
    let results: Vec<Result<RunSummary>> = std::thread::scope(|s| {
        let handles: Vec<_> = ids
            .iter()
            .map(|id| {
                let opts = RunOptions { scenario: id.to_string(), out: Some(root.join(id)), fidelity, charts };
                s.spawn(move || cmd_run(&opts))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(CliError::Internal("case worker panicked".into()))))
            .collect()
    });
    results.into_iter().collect()
}

pub fn run_all_report(runs: &[RunSummary]) -> String {
    let mut s = String::new();
    for r in runs {
        let m = &r.manifest;
        let failed: Vec<&str> = m.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        let _ = writeln!(
            s,
            "{}  {}  {} checks  {}",
            m.case.as_deref().unwrap_or("?"),
            if m.pass { "pass" } else { "FAIL" },
            m.checks.len(),
            if failed.is_empty() { String::new() } else { format!("failed: {}", failed.join(", ")) }
        );
    }
    let n = runs.iter().filter(|r| r.manifest.pass).count();
    let _ = writeln!(s, "{n}/{} cases pass", runs.len());
    s
}

/// Write every built-in case as `<dir>/<id>.json`.
pub fn cmd_cases_export(dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    case_ids()
        .map(|id| {
            let path = dir.join(format!("{id}.json"));
            let mut text = scenario_to_json(&build_case(id)?);
            text.push('\n');
            write_atomic(&path, text.as_bytes())?;
            Ok(path)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct EnvelopeOptions {
    pub v1: f64,
    pub v_dc: f64,
    pub v2: Option<f64>,
    pub x_line: Option<f64>,
    pub theta_deg: f64,
    pub overmod: bool,
    pub points: usize,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeLimits {
    /// Largest in-phase amplitude difference, V.
    pub delta_v_max: f64,
    /// Largest phase shift at equal amplitudes, deg.
    pub beta_deg: f64,
    /// Largest phase shift at any amplitude, deg; 180 when unconstrained.
    pub gamma_deg: f64,
    /// Radius of the reachable P-Q circle, VA.
    pub radius: Option<f64>,
}

pub fn envelope_limits(o: &EnvelopeOptions) -> Result<EnvelopeLimits> {
    let beta = parity_max_phase(o.v1, o.v_dc)?;
    let gamma = global_max_phase(o.v1, o.v_dc, o.overmod)?;
    let radius = match o.x_line {
        Some(x) => Some(
            regulation_circle(o.v1, o.v2.unwrap_or(o.v1), max_inphase_diff(o.v_dc, o.overmod), x, o.theta_deg)?.radius,
        ),
        None => None,
    };
    Ok(EnvelopeLimits {
        delta_v_max: max_inphase_diff(o.v_dc, o.overmod),
        beta_deg: beta.deg,
        gamma_deg: gamma.deg,
        radius,
    })
}

pub fn cmd_envelope(o: &EnvelopeOptions) -> Result<String> {
    let lim = envelope_limits(o)?;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "V1 {} V, Vdc {} V, {}",
        fmt_num(o.v1),
        fmt_num(o.v_dc),
        if o.overmod { "over-modulation" } else { "linear modulation" }
    );
    let _ = writeln!(s, "{:<34} {:>12}", "quantity", "value");
    let _ = writeln!(s, "{:<34} {:>12.2}", "dV_max (V)", lim.delta_v_max);
    let _ = writeln!(s, "{:<34} {:>12.3}", "beta, equal amplitudes (deg)", lim.beta_deg);
    let _ = writeln!(s, "{:<34} {:>12.3}", "gamma, any amplitude (deg)", lim.gamma_deg);
    if let Some(r) = lim.radius {
        let _ = writeln!(s, "{:<34} {:>12.2}", "regulation radius (kVA)", r / 1e3);
    }

    if let Some(dir) = &o.out {
        ensure_dir(dir)?;
        let mut q = EnvelopeQuery::new(o.v1, o.v_dc);
        q.v2_rms = o.v2;
        q.overmod = o.overmod;
        q.x_line = o.x_line;
        q.theta_deg = o.theta_deg;
        let mut kinds = vec![RegionKind::ReactiveComp, RegionKind::ActiveComp, RegionKind::TwoGridLimits];
        if o.x_line.is_some() {
            kinds.push(RegionKind::Regulation);
        }
        let mut regions = Vec::new();
        for kind in kinds {
            match sample_region(kind, &q, o.points) {
                Ok(r) => regions.push(r),
                // A region can cover the whole plane for large module voltages.
                Err(e) => {
                    let _ = writeln!(s, "region {kind:?} skipped: {e}");
                }
            }
        }
        for r in &regions {
            let name = serde_json::to_value(r.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            let rows: Vec<Vec<f64>> = r.points.iter().map(|&(x, y)| vec![x, y]).collect();
            write_table_csv(&dir.join(format!("region_{name}.csv")), &[r.x_label, r.y_label], &rows)?;
        }
        write_atomic(&dir.join("regions.svg"), region_chart(&regions)?.as_bytes())?;
        let _ = writeln!(s, "regions written to {}", dir.display());
    }
    Ok(s)
}

#[derive(Debug, Clone)]
pub struct LossOptions {
    pub sweep: (f64, f64),
    pub points: usize,
    pub p_inject: f64,
    pub bertotti: Option<PathBuf>,
    pub lineup: Option<PathBuf>,
    pub fault: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_P_INJECT: f64 = 3300.0;

/// Parse `a:b` with `0 < a < b`.
pub fn parse_sweep(s: &str) -> Result<(f64, f64)> {
    let bad = || CliError::Validation(format!("sweep `{s}`: expected f_min:f_max with 0 < f_min < f_max"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let (a, b): (f64, f64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if a > 0.0 && a < b && b.is_finite() {
        Ok((a, b))
    } else {
        Err(bad())
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::Validation(format!("{}: field `{}`: {}", path.display(), e.path(), e.inner())))
}

/// Logarithmically spaced frequencies, both ends included.
pub fn log_sweep(f0: f64, f1: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let (l0, l1) = (f0.ln(), f1.ln());
    (0..n).map(|k| if k + 1 == n { f1 } else { (l0 + (l1 - l0) * k as f64 / (n - 1) as f64).exp() }).collect()
}

/// Rows of `(f, P_hys, P_edd, H)`.
pub fn bertotti_sweep(p: &BertottiParams, p_inject: f64, freqs: &[f64]) -> Result<Vec<Vec<f64>>> {
    freqs
        .iter()
        .map(|&f| {
            let l = bertotti_loss(p, f)?;
            let h = transformer_transfer(p_inject, p, f)?.h;
            Ok(vec![f, l.hysteresis, l.eddy, h])
        })
        .collect()
}

pub fn cmd_loss(o: &LossOptions) -> Result<String> {
    let params = match &o.bertotti {
        Some(p) => read_json(p)?,
        None => BertottiParams::grain_oriented(),
    };
    let lineup: LossLineup = match &o.lineup {
        Some(p) => read_json(p)?,
        None => LossLineup::reference(),
    };
    let fault: FaultSpec = match &o.fault {
        Some(p) => read_json(p)?,
        None => FaultSpec::reference(),
    };
    let mut s = String::new();

    let freqs = log_sweep(o.sweep.0, o.sweep.1, o.points);
    let rows = bertotti_sweep(&params, o.p_inject, &freqs)?;
    let _ = writeln!(
        s,
        "core loss: eta {}, B_m {} T, sheet {} mm, rho {} uOhm m, volume {} m3; injected {} W",
        fmt_num(params.eta),
        fmt_num(params.b_m),
        fmt_num(params.t_sheet * 1e3),
        fmt_num(params.rho_lam * 1e6),
        fmt_num(params.volume),
        fmt_num(o.p_inject)
    );
    for reading in [ThreeDb::Power, ThreeDb::Amplitude] {
        let label = match reading {
            ThreeDb::Power => "H = 0.5",
            ThreeDb::Amplitude => "H = 0.707",
        };
        match bandwidth_3db(o.p_inject, &params, reading, 1e6) {
            Ok(f) => {
                let _ = writeln!(s, "  -3 dB ({label}): {:.1} Hz", f);
            }
            Err(e) => {
                let _ = writeln!(s, "  -3 dB ({label}): {e}");
            }
        }
    }

    let rep = loss_lineup(&lineup)?;
    let _ = writeln!(s, "\nloss lineup at {} A per phase", fmt_num(lineup.i_rms));
    let _ = writeln!(s, "{:<24} {:>18} {:>14}", "stage", "direct injection", "transformer");
    for st in &rep.stages {
        let (d, t) = match st.column {
            LossColumn::DirectInjection => (format!("{:.1} W", st.watts), String::new()),
            LossColumn::Transformer => (String::new(), format!("{:.1} W", st.watts)),
        };
        let _ = writeln!(s, "{:<24} {:>18} {:>14}", st.name, d, t);
    }
    let _ = writeln!(
        s,
        "{:<24} {:>18} {:>14}",
        "total",
        format!("{:.1} W", rep.direct_total),
        format!("{:.1} W", rep.transformer_total)
    );
    if rep.transformer_mismatch {
        let _ = writeln!(
            s,
            "note: transformer winding figure differs from I^2 R = {:.1} W at {} ohm",
            rep.transformer_i2r,
            fmt_num(lineup.r_transformer)
        );
    }

    let fr = fault_ratings(&fault)?;
    let _ = writeln!(
        s,
        "\nfault ratings: {} kVA at {} V, uk {}%, cleared in {} s",
        fmt_num(fault.s_tx / 1e3),
        fmt_num(fault.v_ll),
        fmt_num(fault.u_k * 100.0),
        fmt_num(fault.clear_time)
    );
    let _ = writeln!(s, "  continuous current {:.0} A", fr.i_nominal);
    let _ = writeln!(s, "  short-circuit current {:.0} A", fr.i_short);
    let _ = writeln!(s, "  I2t {:.4e} A2s", fr.i2t);

    if let Some(dir) = &o.out {
        ensure_dir(dir)?;
        write_table_csv(&dir.join("bertotti.csv"), &["f", "p_hys", "p_edd", "h"], &rows)?;
        let _ = writeln!(s, "\nsweep written to {}", dir.join("bertotti.csv").display());
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_argument() {
        assert_eq!(parse_sweep("10:10000").unwrap(), (10.0, 10000.0));
        for bad in ["10", "0:10", "10:5", "a:b", "-1:2"] {
            assert!(parse_sweep(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn log_sweep_ends() {
        let f = log_sweep(10.0, 10000.0, 4);
        assert_eq!(f.len(), 4);
        assert!((f[0] - 10.0).abs() < 1e-12 && f[3] == 10000.0);
        assert!((f[1] - 100.0).abs() < 1e-9 && (f[2] - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn envelope_table_values() {
        let o = EnvelopeOptions {
            v1: 230.0,
            v_dc: 48.0,
            v2: None,
            x_line: Some(0.1),
            theta_deg: 0.0,
            overmod: false,
            points: 64,
            out: None,
        };
        let l = envelope_limits(&o).unwrap();
        assert!((l.delta_v_max - 33.941).abs() < 1e-3);
        assert!((l.beta_deg - 8.4628).abs() < 1e-3);
        assert!((l.gamma_deg - 8.4861).abs() < 1e-3);
        assert!((l.radius.unwrap() - 78_064.6).abs() < 0.1);
    }
}
