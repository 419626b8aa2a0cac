//! Per-interval steady-state figures taken from a recorded run.
//!
//! Every figure uses the last two fundamental cycles of its interval unless
//! noted. Phasors are referenced to `cos(ωt)` at `t = 0`, like the analytic
//! ones, and corrected for the record-window averaging.

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use super::engine::RunOutput;
use super::trace::TraceSet;
use crate::error::{Error, Result};
use crate::fourier::{aperture_gain, correlate, spectrum, Spectrum};
use crate::network::{Command, Scenario};
use crate::phasor::Phasor;

/// Highest order used for the truncated THD.
pub const THD_MAX_ORDER: usize = 40;
/// Cycles analysed at the end of each interval.
pub const STEADY_CYCLES: f64 = 2.0;
/// Absolute floor of the settling band, amps.
pub const SETTLE_FLOOR: f64 = 0.05;
/// Relative settling band.
pub const SETTLE_BAND: f64 = 0.01;
/// Largest angle change, degrees, between the last two cycles and the two
/// before them for an interval to count as settled.
pub const SETTLED_ANGLE_DEG: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMetrics {
    /// Fundamental rms phasors.
    pub i: Phasor,
    /// True rms line current over the window.
    pub i_rms: f64,
    pub v_left: Phasor,
    pub v_right: Phasor,
    pub v_m: Phasor,
    /// `(order, phasor)` for orders 1..=THD_MAX_ORDER.
    pub i_orders: Vec<(u32, Phasor)>,
    pub v_m_orders: Vec<(u32, Phasor)>,
    /// Residual-definition THD of the line current.
    pub i_thd: f64,
    /// THD of the line current over orders 2..=40.
    pub i_thd40: f64,
    pub v_right_thd: f64,
    /// THD of the left bus voltage over orders 2..=40.
    pub v_left_thd: f64,
    /// Mean power absorbed by the module.
    pub p_module: f64,
    /// Mean power the module's LLC draws from the shared link.
    pub p_llc: f64,
    pub v_dc_min: f64,
    pub v_dc_max: f64,
    /// Share of control periods with a clipped command over the window.
    pub overmod: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMetrics {
    pub start: f64,
    pub end: f64,
    pub command: Command,
    pub phases: [PhaseMetrics; 3],
    /// Three-phase means over the window.
    pub p_source: f64,
    pub q_source: f64,
    pub p_module: f64,
    pub q_module: f64,
    /// Source powers over the fourth cycle after the interval start, if the
    /// interval is that long.
    pub p_source_4c: Option<f64>,
    pub q_source_4c: Option<f64>,
    /// Time from the interval start after which every one-cycle current
    /// phasor stays within the settling band of the final value. `None` if
    /// it never does.
    pub settling_time: Option<f64>,
    /// The last two cycles' current phasors differ from the two cycles
    /// before them by under `SETTLE_BAND` in magnitude and
    /// `SETTLED_ANGLE_DEG` in angle, on every phase. Intervals shorter than
    /// five cycles compare against the two cycles starting one cycle in (a
    /// reference change can wait up to half a cycle for its transfer
    /// instant), and never less than half a cycle before the final window.
    pub settled: bool,
    pub v_dc_shared_min: f64,
    pub v_dc_shared_max: f64,
    /// Mean AFE power into the shared link.
    pub p_afe: f64,
    /// Rate of change of the shared-link energy across the window, from the
    /// first and last recorded link voltages.
    pub shared_storage_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub intervals: Vec<IntervalMetrics>,
    pub energy_residual: f64,
}

impl RunMetrics {
    /// Interval whose span contains `t`.
    pub fn at(&self, t: f64) -> Option<&IntervalMetrics> {
        self.intervals.iter().find(|m| m.start <= t && t < m.end)
    }
}

fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }
}

fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

struct Analyser<'a> {
    tr: &'a TraceSet,
    f: f64,
    period: f64,
}

impl Analyser<'_> {
    fn window(&self, start: f64, end: f64) -> core::ops::Range<usize> {
        self.tr.range(start, end)
    }

    /// rms phasor at order `h` over `[start, end)`.
    fn phasor(&self, x: &[f64], r: &core::ops::Range<usize>, h: u32) -> Phasor {
        let fh = self.f * h as f64;
        correlate(&x[r.clone()], self.tr.t[r.start], self.tr.dt, fh) / aperture_gain(fh, self.tr.dt)
    }

    fn spectrum(&self, x: &[f64], r: &core::ops::Range<usize>) -> Result<Spectrum> {
        spectrum(&x[r.clone()], self.tr.t[r.start], self.tr.dt, self.f, STEADY_CYCLES, THD_MAX_ORDER, self.tr.dt)
    }

    fn settling(&self, start: f64, end: f64, finals: &[Phasor; 3]) -> Option<f64> {
        let step = self.period / 8.0;
        let n = ((end - start - self.period) / step).floor() as i64;
        let mut settled: Option<f64> = None;
        for j in 0..=n.max(-1) {
            let ws = start + j as f64 * step;
            let r = self.window(ws, ws + self.period);
            if r.len() < 2 {
                continue;
            }
            let ok = (0..3).all(|p| {
                let a = self.phasor(&self.tr.phases[p].i_line, &r, 1);
                (a - finals[p]).norm() <= SETTLE_BAND * finals[p].norm() + SETTLE_FLOOR
            });
            match (ok, settled) {
                (true, None) => settled = Some(ws - start),
                (false, _) => settled = None,
                _ => {}
            }
        }
        settled
    }

    fn settled(&self, start: f64, end: f64, finals: &[Phasor; 3]) -> bool {
        let span = STEADY_CYCLES * self.period;
        let p0 = (end - 2.0 * span).max(start + self.period).min(end - span - 0.5 * self.period);
        let r = self.window(p0, p0 + span);
        if r.len() < 2 {
            return false;
        }
        (0..3).all(|p| {
            let a = self.phasor(&self.tr.phases[p].i_line, &r, 1);
            let b = finals[p];
            let scale = a.norm().max(b.norm());
            if scale < SETTLE_FLOOR {
                return true;
            }
            let dm = (a.norm() - b.norm()).abs() <= SETTLE_BAND * scale;
            let da = (b * a.conj()).arg().to_degrees().abs() <= SETTLED_ANGLE_DEG;
            dm && da
        })
    }
}

/// Figures for every schedule interval of a finished run.
pub fn compute_metrics(sc: &Scenario, out: &RunOutput) -> Result<RunMetrics> {
    let tr = &out.trace;
    let f = sc.freq();
    let an = Analyser { tr, f, period: 1.0 / f };
    let orders: Vec<u32> = (1..=THD_MAX_ORDER as u32).collect();
    let mut intervals = Vec::new();
    for iv in sc.intervals() {
        let w_start = iv.end - STEADY_CYCLES * an.period;
        if w_start < iv.start - 1e-9 {
            return Err(Error::IntervalTooShort { start: iv.start, end: iv.end });
        }
        let r = an.window(w_start, iv.end);
        let need = (STEADY_CYCLES / (f * tr.dt)).round() as usize;
        if r.len() < need {
            return Err(Error::InsufficientSamples { needed: need, got: r.len() });
        }
        let mut phases = Vec::with_capacity(3);
        for ph in &tr.phases {
            let si = an.spectrum(&ph.i_line, &r)?;
            let sv = an.spectrum(&ph.v_right, &r)?;
            let sl = an.spectrum(&ph.v_left, &r)?;
            let (v_dc_min, v_dc_max) = min_max(&ph.v_dc_module[r.clone()]);
            let at = |x: &[f64]| -> Vec<(u32, Phasor)> { orders.iter().map(|&h| (h, an.phasor(x, &r, h))).collect() };
            phases.push(PhaseMetrics {
                i: si.fundamental(),
                i_rms: rms(&ph.i_line[r.clone()]),
                v_left: an.phasor(&ph.v_left, &r, 1),
                v_right: sv.fundamental(),
                v_m: an.phasor(&ph.v_m, &r, 1),
                i_orders: at(&ph.i_line),
                v_m_orders: at(&ph.v_m),
                i_thd: si.thd(),
                i_thd40: si.thd_orders(THD_MAX_ORDER),
                v_right_thd: sv.thd(),
                v_left_thd: sl.thd_orders(THD_MAX_ORDER),
                p_module: mean(&ph.p_module[r.clone()]),
                p_llc: mean(&ph.p_llc[r.clone()]),
                v_dc_min,
                v_dc_max,
                overmod: mean(&ph.overmod[r.clone()]),
            });
        }
        let phases: [PhaseMetrics; 3] = phases.try_into().unwrap_or_else(|_| unreachable!());
        let finals = [phases[0].i, phases[1].i, phases[2].i];
        let c4 = iv.start + 3.0 * an.period;
        let (p4, q4) = if iv.start + 4.0 * an.period <= iv.end + 1e-9 {
            let r4 = an.window(c4, c4 + an.period);
            (Some(mean(&tr.p_source[r4.clone()])), Some(mean(&tr.q_source[r4])))
        } else {
            (None, None)
        };
        let (v_sh_min, v_sh_max) = min_max(&tr.v_dc_shared[r.clone()]);
        let shared_storage_rate = if r.len() > 1 {
            let (v0, v1) = (tr.v_dc_shared[r.start], tr.v_dc_shared[r.end - 1]);
            0.5 * sc.module.shared.c_dc * (v1 * v1 - v0 * v0) / (tr.t[r.end - 1] - tr.t[r.start])
        } else {
            0.0
        };
        intervals.push(IntervalMetrics {
            start: iv.start,
            end: iv.end,
            command: iv.command.clone(),
            p_source: mean(&tr.p_source[r.clone()]),
            q_source: mean(&tr.q_source[r.clone()]),
            p_module: mean(&tr.p_module[r.clone()]),
            q_module: mean(&tr.q_module[r.clone()]),
            p_source_4c: p4,
            q_source_4c: q4,
            settling_time: an.settling(iv.start, iv.end, &finals),
            settled: an.settled(iv.start, iv.end, &finals),
            v_dc_shared_min: v_sh_min,
            v_dc_shared_max: v_sh_max,
            p_afe: mean(&tr.p_afe[r.clone()]),
            shared_storage_rate,
            phases,
        });
    }
    Ok(RunMetrics { intervals, energy_residual: out.energy.relative_residual() })
}
