//! Settled simulation figures against the analytic phasor solution.

use alloc::vec::Vec;

use super::metrics::RunMetrics;
use crate::error::Result;
use crate::network::{Command, Scenario};
use crate::phasor::{Complex, Phasor};

/// Relative current tolerance and its absolute floor, amps.
pub const CURRENT_TOL: f64 = 0.01;
pub const CURRENT_FLOOR: f64 = 0.05;
/// Relative module-power tolerance (of the fundamental apparent power) and
/// its absolute floor, watts.
pub const POWER_TOL: f64 = 0.02;
pub const POWER_FLOOR: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseComparison {
    pub i_sim: Phasor,
    pub i_analytic: Phasor,
    pub i_error: f64,
    pub i_tol: f64,
    /// Mean `v_m·i` from the trace.
    pub p_module_sim: f64,
    /// `Σ_h Re(V_m,h·conj(I_h))` with `I_h` solved from the sources and the
    /// measured module voltage harmonics.
    pub p_module_analytic: f64,
    /// Module power of the commanded operating point.
    pub p_module_command: f64,
    pub p_tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalComparison {
    pub start: f64,
    pub end: f64,
    pub command: Command,
    pub phases: Vec<PhaseComparison>,
    /// The interval settled; an unsettled interval never passes.
    pub settled: bool,
    pub pass: bool,
}

pub fn compare_to_analytic(sc: &Scenario, metrics: &RunMetrics) -> Result<Vec<IntervalComparison>> {
    let mut out = Vec::with_capacity(metrics.intervals.len());
    for iv in &metrics.intervals {
        let mut phases = Vec::with_capacity(3);
        for (p, pm) in iv.phases.iter().enumerate() {
            let op = sc.operating_point(p, &iv.command)?;
            let i_error = (pm.i - op.i).norm();
            let i_tol = CURRENT_TOL * op.i.norm() + CURRENT_FLOOR;
            let mut p_an = 0.0;
            let mut s1 = 0.0;
            for &(h, vm) in &pm.v_m_orders {
                let dv = sc.v_left(p, h) - sc.v_right_source(p, h) - vm;
                let i_h = dv / sc.loop_z(h);
                let s: Complex = vm * i_h.conj();
                p_an += s.re;
                if h == 1 {
                    s1 = s.norm();
                }
            }
            let p_tol = POWER_TOL * s1 + POWER_FLOOR;
            let pass = i_error <= i_tol && (pm.p_module - p_an).abs() <= p_tol;
            phases.push(PhaseComparison {
                i_sim: pm.i,
                i_analytic: op.i,
                i_error,
                i_tol,
                p_module_sim: pm.p_module,
                p_module_analytic: p_an,
                p_module_command: op.module_power().re,
                p_tol,
                pass,
            });
        }
        let pass = iv.settled && phases.iter().all(|c| c.pass);
        out.push(IntervalComparison {
            start: iv.start,
            end: iv.end,
            command: iv.command.clone(),
            phases,
            settled: iv.settled,
            pass,
        });
    }
    Ok(out)
}
