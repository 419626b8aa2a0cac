//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Tolerances are pinned here rather than taken from the library, so a
//! change to a library constant cannot quietly loosen a criterion.

use std::process::ExitCode;

use difq::checks::{case_checks, rel_deg, Check};
use difq_core::envelope::{global_max_phase, max_inphase_diff, parity_max_phase, regulation_circle};
use difq_core::loss::{
    bandwidth_3db, bertotti_loss, fault_ratings, loss_lineup, transformer_transfer, BertottiParams, FaultSpec,
    LossLineup, ThreeDb,
};
use difq_core::network::{build_case, case_ids, Fidelity, Scenario};
use difq_core::phasor::Phasor;
use difq_core::sim::{compare_to_analytic, compute_metrics, run, IntervalComparison, RunMetrics, RunOutput};

struct Run {
    sc: Scenario,
    out: RunOutput,
    m: RunMetrics,
    cmp: Vec<IntervalComparison>,
}

fn simulate(sc: Scenario) -> Run {
    let out = run(&sc).expect("run");
    let m = compute_metrics(&sc, &out).expect("metrics");
    let cmp = compare_to_analytic(&sc, &m).expect("comparison");
    Run { sc, out, m, cmp }
}

fn case(id: &str) -> Run {
    simulate(build_case(id).expect("case"))
}

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, n: u32, title: &str, pass: bool, detail: &str) {
        if !pass {
            self.failures += 1;
        }
        println!("criterion {n:>2} [{}] {title}: {detail}", if pass { "PASS" } else { "FAIL" });
    }

    fn checks(&mut self, n: u32, title: &str, checks: &[Check]) {
        let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
        let detail = checks
            .iter()
            .map(|c| format!("{}{}={:.4}", if c.pass { "" } else { "!" }, c.name, c.value))
            .collect::<Vec<_>>()
            .join(", ");
        self.line(n, title, pass, &detail);
    }
}

fn find<'a>(checks: &'a [Check], name: &str) -> &'a Check {
    checks.iter().find(|c| c.name == name).unwrap_or_else(|| panic!("missing check {name}"))
}

fn within(x: f64, target: f64, rel: f64) -> bool {
    (x - target).abs() <= rel * target.abs()
}

/// Pinned versions of the case checks' tolerances.
fn pin(checks: &[Check], id: &str) -> bool {
    let v = |n: &str| find(checks, n).value;
    match id {
        "A" => {
            let q0 = v("A_q_before");
            within(q0, 1280.0, 0.10) && v("A_q_after_4_cycles").abs() < 0.05 * q0.abs()
        }
        "B" => ["a", "b", "c"].iter().all(|p| (v(&format!("B_current_quadrature_{p}")) - 90.0).abs() <= 5.0),
        "C" => within(v("C_regulated_current"), 20.0, 0.05) && v("C_reversed_flow") < 0.0,
        "D" => checks.iter().filter(|c| c.name.starts_with("D_power")).all(|c| c.value <= 0.05),
        "E" => {
            (v("E_source_thd") - 11.18).abs() <= 0.3 && v("E_h3_attenuation") >= 0.90 && v("E_h5_attenuation") >= 0.90
        }
        "F" => ["a", "b", "c"].iter().all(|p| {
            let d = v(&format!("F_collinear_{p}")).abs();
            d.min(180.0 - d) <= 2.0
        }),
        _ => false,
    }
}

fn case_line(r: &mut Report, n: u32, id: &str, title: &str, run: &Run) {
    let mut checks = case_checks(id, &run.sc, &run.m, &run.out);
    let pinned = pin(&checks, id);
    checks.push(Check {
        name: "pinned".into(),
        pass: pinned,
        value: f64::from(u8::from(pinned)),
        expected: String::new(),
    });
    r.checks(n, title, &checks);
}

fn criterion_2_extra(run: &Run) -> String {
    // Rotation of the current relative to its bypass value, for the record.
    let (pre, post) = (&run.m.intervals[0], &run.m.intervals[1]);
    let rot: Vec<String> = (0..3).map(|p| format!("{:.2}", rel_deg(post.phases[p].i, pre.phases[p].i))).collect();
    format!("rotation vs bypass [{}] deg", rot.join(", "))
}

fn envelope(r: &mut Report) {
    let dv = max_inphase_diff(48.0, false);
    let gamma = global_max_phase(230.0, 48.0, false).expect("gamma").deg;
    let beta = parity_max_phase(230.0, 48.0).expect("beta").deg;
    let dv_o = max_inphase_diff(48.0, true);
    let gamma_o = global_max_phase(230.0, 48.0, true).expect("gamma").deg;
    let radius = regulation_circle(230.0, 230.0, dv, 0.1, 0.0).expect("circle").radius;
    let pass = within(dv, 33.94, 0.005)
        && (gamma - 8.49).abs() <= 0.01
        && within(beta, 8.464, 0.005)
        && within(dv_o, 48.0, 0.005)
        && within(gamma_o, 12.05, 0.005)
        && within(radius, 78.06e3, 0.005);
    r.line(
        7,
        "envelope limits (V1 230 V, Vdc 48 V, X 0.1 ohm)",
        pass,
        &format!(
            "dV {dv:.3} V, gamma {gamma:.4} deg, beta {beta:.4} deg, overmod {dv_o:.2} V / {gamma_o:.3} deg, radius {:.2} kVA",
            radius / 1e3
        ),
    );
}

fn analytic(r: &mut Report, runs: &[(&str, Run)]) {
    let mut worst_i: f64 = 0.0;
    let mut worst_p: f64 = 0.0;
    let mut pass = true;
    for (_, run) in runs {
        for c in &run.cmp {
            for p in &c.phases {
                let i_lim = (0.01 * p.i_analytic.norm()).max(0.05);
                let p_lim = (0.02 * p.p_module_analytic.abs()).max(1.0);
                let p_err = (p.p_module_sim - p.p_module_analytic).abs();
                worst_i = worst_i.max(p.i_error / i_lim);
                worst_p = worst_p.max(p_err / p_lim);
                pass &= p.i_error <= i_lim && p_err <= p_lim;
            }
        }
    }
    r.line(
        8,
        "simulated steady state vs phasor solution, all cases and intervals",
        pass,
        &format!("worst current error {:.3} of 1% band, worst module power error {:.3} of 2% band", worst_i, worst_p),
    );
}

fn loss(r: &mut Report) {
    let rep = loss_lineup(&LossLineup::reference()).expect("lineup");
    let inductor = rep.stages.iter().find(|s| s.name == "filter inductor").expect("inductor").watts;
    let fr = fault_ratings(&FaultSpec::reference()).expect("fault");
    let p = BertottiParams::grain_oriented();
    let mut prop = true;
    for f in [10.0, 50.0, 400.0, 2500.0] {
        let (a, b) = (bertotti_loss(&p, f).expect("loss"), bertotti_loss(&p, 2.0 * f).expect("loss"));
        prop &= (b.hysteresis / a.hysteresis - 2.0).abs() < 1e-12 && (b.eddy / a.eddy - 4.0).abs() < 1e-12;
    }
    let h: Vec<f64> = (0..=300)
        .map(|k| 10.0 * 1000f64.powf(k as f64 / 300.0))
        .map(|f| transformer_transfer(3300.0, &p, f).expect("transfer").h)
        .collect();
    let monotone = h.windows(2).all(|w| w[1] <= w[0]);
    let bw = bandwidth_3db(3300.0, &p, ThreeDb::Power, 1e6).ok();
    let pass = (inductor - 50.0).abs() < 1e-9
        && (rep.direct_total - 209.6).abs() < 1e-9
        && (rep.transformer_total - 246.9).abs() < 1e-9
        && within(fr.i_nominal, 433.0, 0.001)
        && within(fr.i_short, 5095.0, 0.001)
        && prop
        && monotone;
    r.line(
        9,
        "loss and fault calculators",
        pass,
        &format!(
            "inductor {inductor:.3} W, totals {:.1} / {:.1} W, faults {:.1} / {:.1} A, P_hys~f P_edd~f^2 {prop}, H monotone {monotone}, \
             -3 dB at {} (informational)",
            rep.direct_total,
            rep.transformer_total,
            fr.i_nominal,
            fr.i_short,
            bw.map(|f| format!("{f:.0} Hz")).unwrap_or_else(|| "none".into())
        ),
    );
}

/// Largest relative change of the fundamental current and module voltage
/// phasors over the last interval.
fn phasor_change(a: &RunMetrics, b: &RunMetrics) -> f64 {
    let (ia, ib) = (a.intervals.last().expect("interval"), b.intervals.last().expect("interval"));
    let rel = |x: Phasor, y: Phasor| (x - y).norm() / y.norm().max(1e-9);
    (0..3).map(|p| rel(ia.phases[p].i, ib.phases[p].i).max(rel(ia.phases[p].v_m, ib.phases[p].v_m))).fold(0.0, f64::max)
}

fn hygiene(r: &mut Report, runs: &[(&str, Run)]) {
    let d1 = &runs.iter().find(|(id, _)| *id == "D").expect("D").1;
    let d2 = case("D");
    let deterministic = d1.out.trace == d2.out.trace;

    let a = &runs.iter().find(|(id, _)| *id == "A").expect("A").1;
    let mut half = build_case("A").expect("A");
    half.sim.dt /= 2.0;
    half.sim.record_decimation *= 2;
    let half = simulate(half);
    let dt_change = phasor_change(&half.m, &a.m);

    let worst_residual = runs.iter().map(|(_, r)| r.m.energy_residual).fold(half.m.energy_residual, f64::max);

    let mut sw = build_case("A").expect("A");
    sw.sim = sw.sim.with_fidelity(Fidelity::Switched);
    let sw = simulate(sw);
    let sw_change = phasor_change(&sw.m, &a.m);

    let pass = deterministic && dt_change < 0.005 && worst_residual < 1e-4 && sw_change < 0.02;
    r.line(
        10,
        "numerical hygiene",
        pass,
        &format!(
            "bit-identical rerun {deterministic}, dt/2 change {:.4}%, worst energy residual {worst_residual:.1e}, \
             switched vs averaged {:.3}%",
            100.0 * dt_change,
            100.0 * sw_change
        ),
    );
}

fn main() -> ExitCode {
    let runs: Vec<(&str, Run)> = case_ids().map(|id| (id, case(id))).collect();
    let get = |id: &str| &runs.iter().find(|(i, _)| *i == id).expect("case").1;
    let mut r = Report { failures: 0 };

    case_line(&mut r, 1, "A", "case A, reactive power shielded", get("A"));
    case_line(&mut r, 2, "B", &format!("case B, active power shielded ({})", criterion_2_extra(get("B"))), get("B"));
    case_line(&mut r, 3, "C", "case C, amplitude-difference grids", get("C"));
    case_line(&mut r, 4, "D", "case D, phase-difference grids", get("D"));
    case_line(&mut r, 5, "E", "case E, source harmonics blocked", get("E"));
    case_line(&mut r, 6, "F", "case F, unbalanced source", get("F"));
    envelope(&mut r);
    analytic(&mut r, &runs);
    loss(&mut r);
    hygiene(&mut r, &runs);

    if r.failures == 0 {
        println!("acceptance: all 10 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria fail", r.failures);
        ExitCode::FAILURE
    }
}
