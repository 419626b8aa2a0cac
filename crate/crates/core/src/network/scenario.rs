use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{check, GridSegment, LineImpedance, PhaseOperatingPoint, RlLoad};
use crate::error::{Error, Result};
use crate::phasor::{Complex, Phasor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    LoadCase,
    TwoGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RightSide {
    Grid(GridSegment),
    Load(RlLoad),
}

/// Series filter inductance per phase. It is split equally between the two
/// module terminals; both halves carry the line current, so electrically
/// only the sum matters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterParams {
    /// Total inductance per phase, henries.
    pub l: f64,
    #[serde(default)]
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlcParams {
    /// Shared-link volts per module volt.
    pub ratio: f64,
    pub efficiency: f64,
    /// Droop conductance on the module side, A/V.
    pub conductance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharedLinkParams {
    /// Initial value and reference of the shared dc link.
    pub v_dc: f64,
    pub c_dc: f64,
    pub v_dc_min: f64,
    /// AFE grid filter per phase.
    pub afe_l: f64,
    pub afe_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleParams {
    /// Nominal (and initial) module dc-link voltage.
    pub v_dc: f64,
    /// Switching and control rate.
    pub f_sw: f64,
    pub c_dc: f64,
    /// Runs abort when a module link falls below this.
    pub v_dc_min: f64,
    #[serde(default = "yes")]
    pub allow_overmod: bool,
    pub llc: LlcParams,
    pub shared: SharedLinkParams,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesGains {
    /// Current-loop gains, in amps of correction per amp of error (the loop
    /// impedance converts the output to volts).
    pub kp: f64,
    /// rad/s.
    pub ki: f64,
    pub sogi_k: f64,
    pub pll_bandwidth_hz: f64,
    /// Integral rate of the harmonic current trim, rad/s.
    pub harmonic_trim: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AfeGains {
    pub current_bandwidth_hz: f64,
    pub neg_bandwidth_hz: f64,
    pub vdc_bandwidth_hz: f64,
    pub sogi_k: f64,
    /// Reactive power reference, var (positive = drawn inductively).
    #[serde(default)]
    pub q_ref: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerParams {
    pub series: SeriesGains,
    pub afe: AfeGains,
}

impl Default for ControllerParams {
    fn default() -> Self {
        ControllerParams {
            series: SeriesGains {
                kp: 0.5,
                ki: 60.0,
                sogi_k: core::f64::consts::SQRT_2,
                pll_bandwidth_hz: 2.0,
                harmonic_trim: 20.0,
            },
            afe: AfeGains {
                current_bandwidth_hz: 200.0,
                neg_bandwidth_hz: 10.0,
                vdc_bandwidth_hz: 10.0,
                sogi_k: core::f64::consts::SQRT_2,
                q_ref: 0.0,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fidelity {
    Averaged,
    Switched,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub fidelity: Fidelity,
    pub record_decimation: u32,
    /// Reserved. The engine has no random inputs.
    #[serde(default)]
    pub seed: u64,
}

impl SimConfig {
    /// 10 µs steps, recorded every 100 µs.
    pub fn averaged(t_end: f64) -> Self {
        SimConfig { dt: 1e-5, t_end, fidelity: Fidelity::Averaged, record_decimation: 10, seed: 0 }
    }

    /// 0.1 µs steps (100 per 10 µs switching period), recorded every 100 µs.
    pub fn switched(t_end: f64) -> Self {
        SimConfig { dt: 1e-7, t_end, fidelity: Fidelity::Switched, record_decimation: 1000, seed: 0 }
    }

    /// Same end time, defaults of the other fidelity.
    pub fn with_fidelity(self, f: Fidelity) -> Self {
        match f {
            Fidelity::Averaged => SimConfig { seed: self.seed, ..Self::averaged(self.t_end) },
            Fidelity::Switched => SimConfig { seed: self.seed, ..Self::switched(self.t_end) },
        }
    }

    pub fn record_interval(&self) -> f64 {
        self.dt * self.record_decimation as f64
    }

    pub fn validate(&self) -> Result<()> {
        check(self.dt > 0.0 && self.dt.is_finite(), "sim", "dt", "must be positive")?;
        check(self.t_end > 0.0 && self.t_end.is_finite(), "sim", "t_end", "must be positive")?;
        check(self.record_decimation >= 1, "sim", "record_decimation", "must be at least 1")?;
        check(self.t_end / self.dt <= 2.0e8, "sim", "dt", "too many steps for t_end")?;
        Ok(())
    }
}

/// What the series modules do from a schedule time onward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Command {
    Bypass,
    /// Track a line current, phase relative to the phase's own left voltage.
    RegulateCurrent {
        i_rms: f64,
        phase_deg: f64,
    },
    /// Open-loop module voltage, phase relative to the phase's own left voltage.
    InjectVoltage {
        v_rms: f64,
        phase_deg: f64,
    },
    /// Zero reactive power at the source, active power held at its bypass value.
    CompensateQ,
    /// Zero active power at the source, reactive power held at its bypass value.
    CompensateP,
    /// Fundamental bypassed, listed harmonic currents driven to zero.
    BlockHarmonics {
        orders: Vec<u32>,
    },
    /// Module voltage collinear with the phase voltage, sized so the load sees
    /// `v_rms`.
    BalanceLoadVoltage {
        v_rms: f64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Bypass => "bypass",
            Command::RegulateCurrent { .. } => "regulate_current",
            Command::InjectVoltage { .. } => "inject_voltage",
            Command::CompensateQ => "compensate_q",
            Command::CompensateP => "compensate_p",
            Command::BlockHarmonics { .. } => "block_harmonics",
            Command::BalanceLoadVoltage { .. } => "balance_load_voltage",
        }
    }

    pub fn is_bypass(&self) -> bool {
        matches!(self, Command::Bypass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub t: f64,
    pub command: Command,
}

/// One time span with a constant command.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
    pub command: Command,
}

/// A complete experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub topology: Topology,
    pub left: GridSegment,
    pub right: RightSide,
    pub line: LineImpedance,
    pub filter: FilterParams,
    pub module: ModuleParams,
    #[serde(default)]
    pub controllers: ControllerParams,
    pub schedule: Vec<ScheduleEntry>,
    pub sim: SimConfig,
}

impl Scenario {
    pub fn freq(&self) -> f64 {
        self.left.freq
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.left.freq
    }

    pub fn load(&self) -> Option<RlLoad> {
        match &self.right {
            RightSide::Load(l) => Some(*l),
            RightSide::Grid(_) => None,
        }
    }

    pub fn right_grid(&self) -> Option<&GridSegment> {
        match &self.right {
            RightSide::Grid(g) => Some(g),
            RightSide::Load(_) => None,
        }
    }

    /// Line plus filter at harmonic order `h`.
    pub fn series_z(&self, h: u32) -> Complex {
        let x_f = self.omega() * h as f64 * self.filter.l;
        self.line.z_at(h) + Complex::new(self.filter.r, x_f)
    }

    /// Everything between the module terminals and the right-side source,
    /// including the load.
    pub fn loop_z(&self, h: u32) -> Complex {
        match self.load() {
            Some(l) => self.series_z(h) + l.z_at(h),
            None => self.series_z(h),
        }
    }

    /// Total series inductance and resistance of the loop.
    pub fn loop_rl(&self) -> (f64, f64) {
        let z = self.loop_z(1);
        (z.re, z.im / self.omega())
    }

    pub fn v_left(&self, p: usize, h: u32) -> Phasor {
        self.left.harmonic(p, h)
    }

    /// Source voltage on the right (zero for a load).
    pub fn v_right_source(&self, p: usize, h: u32) -> Phasor {
        match &self.right {
            RightSide::Grid(g) => g.harmonic(p, h),
            RightSide::Load(_) => Phasor::ZERO,
        }
    }

    pub fn v_right_source_inst(&self, p: usize, t: f64) -> f64 {
        match &self.right {
            RightSide::Grid(g) => g.instantaneous(p, t),
            RightSide::Load(_) => 0.0,
        }
    }

    /// Harmonic orders above 1 present in either source.
    pub fn harmonic_orders(&self) -> Vec<u32> {
        let mut o = self.left.orders();
        if let Some(g) = self.right_grid() {
            o.extend(g.orders());
        }
        o.sort_unstable();
        o.dedup();
        o.retain(|&h| h > 1);
        o
    }

    /// Command in force at time `t` (bypass before the first entry).
    pub fn command_at(&self, t: f64) -> &Command {
        self.schedule.iter().rev().find(|e| e.t <= t).map(|e| &e.command).unwrap_or(&Command::Bypass)
    }

    pub fn intervals(&self) -> Vec<Interval> {
        let mut out = Vec::new();
        let first = self.schedule.first().map(|e| e.t).unwrap_or(self.sim.t_end);
        if first > 0.0 {
            out.push(Interval { start: 0.0, end: first.min(self.sim.t_end), command: Command::Bypass });
        }
        for (k, e) in self.schedule.iter().enumerate() {
            let end = self.schedule.get(k + 1).map(|n| n.t).unwrap_or(self.sim.t_end);
            if e.t < self.sim.t_end {
                out.push(Interval { start: e.t, end: end.min(self.sim.t_end), command: e.command.clone() });
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.left.validate("left")?;
        match (&self.topology, &self.right) {
            (Topology::LoadCase, RightSide::Load(l)) => {
                check(l.r >= 0.0 && l.r.is_finite(), "right.load", "r", "must be non-negative")?;
                check(l.x.is_finite(), "right.load", "x", "must be finite")?;
                check(self.loop_z(1).norm() > 0.0, "right.load", "r", "total impedance is zero")?;
            }
            (Topology::TwoGrid, RightSide::Grid(g)) => {
                g.validate("right.grid")?;
                check(g.freq == self.left.freq, "right.grid", "freq", "must equal left.freq")?;
            }
            _ => {
                return Err(Error::Validation {
                    field: "right".into(),
                    reason: "does not match topology (load_case needs `load`, two_grid needs `grid`)".into(),
                })
            }
        }
        let ln = &self.line;
        check(ln.r >= 0.0 && ln.r.is_finite(), "line", "r", "must be non-negative")?;
        check(ln.x >= 0.0 && ln.x.is_finite(), "line", "x", "must be non-negative")?;
        check(ln.rating > 0.0, "line", "rating", "must be positive")?;
        check(self.filter.l >= 0.0 && self.filter.l.is_finite(), "filter", "l", "must be non-negative")?;
        check(self.filter.r >= 0.0, "filter", "r", "must be non-negative")?;
        let (_, l_loop) = self.loop_rl();
        check(l_loop > 0.0, "filter", "l", "loop inductance must be positive")?;

        let m = &self.module;
        check(m.v_dc > 0.0 && m.v_dc.is_finite(), "module", "v_dc", "must be positive")?;
        check(m.f_sw > 0.0 && m.f_sw.is_finite(), "module", "f_sw", "must be positive")?;
        check(m.c_dc > 0.0 && m.c_dc.is_finite(), "module", "c_dc", "must be positive")?;
        check(m.v_dc_min >= 0.0 && m.v_dc_min < m.v_dc, "module", "v_dc_min", "must be within [0, v_dc)")?;
        check(m.llc.ratio > 0.0 && m.llc.ratio.is_finite(), "module.llc", "ratio", "must be positive")?;
        check(m.llc.efficiency > 0.0 && m.llc.efficiency <= 1.0, "module.llc", "efficiency", "must be within (0, 1]")?;
        check(
            m.llc.conductance > 0.0 && m.llc.conductance.is_finite(),
            "module.llc",
            "conductance",
            "must be positive",
        )?;
        let s = &m.shared;
        check(s.v_dc > 0.0 && s.v_dc.is_finite(), "module.shared", "v_dc", "must be positive")?;
        check(s.c_dc > 0.0 && s.c_dc.is_finite(), "module.shared", "c_dc", "must be positive")?;
        check(s.v_dc_min >= 0.0 && s.v_dc_min < s.v_dc, "module.shared", "v_dc_min", "must be within [0, v_dc)")?;
        check(s.afe_l > 0.0 && s.afe_l.is_finite(), "module.shared", "afe_l", "must be positive")?;
        check(s.afe_r >= 0.0 && s.afe_r.is_finite(), "module.shared", "afe_r", "must be non-negative")?;

        let c = &self.controllers;
        for (ok, f) in [
            (c.series.kp >= 0.0, "kp"),
            (c.series.ki >= 0.0, "ki"),
            (c.series.sogi_k > 0.0, "sogi_k"),
            (c.series.pll_bandwidth_hz > 0.0, "pll_bandwidth_hz"),
            (c.series.harmonic_trim >= 0.0, "harmonic_trim"),
        ] {
            check(ok, "controllers.series", f, "out of range")?;
        }
        for (ok, f) in [
            (c.afe.current_bandwidth_hz > 0.0, "current_bandwidth_hz"),
            (c.afe.neg_bandwidth_hz > 0.0, "neg_bandwidth_hz"),
            (c.afe.vdc_bandwidth_hz > 0.0, "vdc_bandwidth_hz"),
            (c.afe.sogi_k > 0.0, "sogi_k"),
            (c.afe.q_ref.is_finite(), "q_ref"),
        ] {
            check(ok, "controllers.afe", f, "out of range")?;
        }

        self.sim.validate()?;
        let steps_per_ctrl = 1.0 / (m.f_sw * self.sim.dt);
        check(steps_per_ctrl >= 0.999, "sim", "dt", "must not exceed the control period 1/f_sw")?;
        check(self.sim.dt * self.omega() * 40.0 < 0.5, "sim", "dt", "too coarse for order-40 harmonics")?;

        for (k, e) in self.schedule.iter().enumerate() {
            check(e.t >= 0.0 && e.t.is_finite(), "schedule", "t", "must be non-negative")?;
            if k > 0 {
                check(e.t > self.schedule[k - 1].t, "schedule", "t", "times must be strictly increasing")?;
            }
            self.validate_command(&e.command)?;
        }
        Ok(())
    }

    fn validate_command(&self, c: &Command) -> Result<()> {
        let load_only = |ok: bool| {
            check(ok || self.topology == Topology::LoadCase, "schedule.command", "kind", "only valid for load_case")
        };
        match c {
            Command::Bypass => Ok(()),
            Command::RegulateCurrent { i_rms, phase_deg } => {
                check(i_rms.is_finite() && *i_rms >= 0.0, "schedule.command", "i_rms", "must be non-negative")?;
                check(*i_rms <= self.line.rating, "schedule.command", "i_rms", "exceeds line rating")?;
                check(phase_deg.is_finite(), "schedule.command", "phase_deg", "must be finite")
            }
            Command::InjectVoltage { v_rms, phase_deg } => {
                check(v_rms.is_finite() && *v_rms >= 0.0, "schedule.command", "v_rms", "must be non-negative")?;
                check(phase_deg.is_finite(), "schedule.command", "phase_deg", "must be finite")
            }
            Command::CompensateQ | Command::CompensateP => {
                load_only(false)?;
                for p in 0..3 {
                    let op = self.operating_point(p, c)?;
                    check(op.i.norm() <= self.line.rating, "schedule.command", "kind", "current exceeds line rating")?;
                }
                Ok(())
            }
            Command::BlockHarmonics { orders } => {
                for h in orders {
                    check((2..=40).contains(h), "schedule.command", "orders", "must be within 2..=40")?;
                }
                Ok(())
            }
            Command::BalanceLoadVoltage { v_rms } => {
                load_only(false)?;
                check(v_rms.is_finite() && *v_rms >= 0.0, "schedule.command", "v_rms", "must be non-negative")
            }
        }
    }

    /// Analytic steady state of phase `p` under `command`.
    pub fn operating_point(&self, p: usize, command: &Command) -> Result<PhaseOperatingPoint> {
        let vl = self.v_left(p, 1);
        let vr = self.v_right_source(p, 1);
        let z = self.loop_z(1);
        if !(z.norm() > 0.0) {
            return Err(Error::ZeroImpedance);
        }
        let ang = vl.arg();
        let bypass_i = (vl - vr) / z;
        let (i, vm) = match command {
            Command::Bypass | Command::BlockHarmonics { .. } => (bypass_i, Phasor::ZERO),
            Command::RegulateCurrent { i_rms, phase_deg } => {
                let i = Phasor::from_polar(*i_rms, ang + phase_deg.to_radians());
                (i, vl - vr - z * i)
            }
            Command::InjectVoltage { v_rms, phase_deg } => {
                let vm = Phasor::from_polar(*v_rms, ang + phase_deg.to_radians());
                ((vl - vr - vm) / z, vm)
            }
            Command::CompensateQ | Command::CompensateP => {
                if self.topology != Topology::LoadCase || vl.norm() == 0.0 {
                    return Err(Error::invalid("command", "source compensation needs a load case with a live source"));
                }
                let s_b = vl * bypass_i.conj();
                let i = if matches!(command, Command::CompensateQ) {
                    Phasor::from_polar(s_b.re / vl.norm(), ang)
                } else {
                    Phasor::from_polar(s_b.im / vl.norm(), ang - PI / 2.0)
                };
                (i, vl - z * i)
            }
            Command::BalanceLoadVoltage { v_rms } => {
                let load =
                    self.load().ok_or_else(|| Error::invalid("command", "load voltage balancing needs a load case"))?;
                let zl = load.z().norm();
                if zl == 0.0 {
                    return Err(Error::ZeroImpedance);
                }
                let vm = Phasor::from_polar(vl.norm() - v_rms * z.norm() / zl, ang);
                ((vl - vm) / z, vm)
            }
        };
        let blocked: &[u32] = match command {
            Command::BlockHarmonics { orders } => orders,
            _ => &[],
        };
        let harmonics = self
            .harmonic_orders()
            .into_iter()
            .map(|h| {
                let dv = self.v_left(p, h) - self.v_right_source(p, h);
                if blocked.contains(&h) {
                    (h, Phasor::ZERO, dv)
                } else {
                    (h, dv / self.loop_z(h), Phasor::ZERO)
                }
            })
            .collect();
        Ok(PhaseOperatingPoint { v_left: vl, v_right: self.v_right_terminal(p, vr, i), i, v_m: vm, harmonics })
    }

    /// Voltage at the right terminal: the second grid, or the load voltage.
    fn v_right_terminal(&self, _p: usize, vr: Phasor, i: Phasor) -> Phasor {
        match self.load() {
            Some(l) => i * l.z(),
            None => vr,
        }
    }

    /// Fundamental current with the modules bypassed.
    pub fn uncontrolled_current(&self, p: usize) -> Result<Phasor> {
        Ok(self.operating_point(p, &Command::Bypass)?.i)
    }

    /// Short name for reports.
    pub fn describe(&self) -> String {
        match &self.right {
            RightSide::Load(l) => {
                alloc::format!("load case, {} V ph-ph, load ({} {:+} j) ohm", self.left.v_ll_rms, l.r, l.x)
            }
            RightSide::Grid(g) => alloc::format!(
                "two grids, {} V / {} V ph-ph at {} deg",
                self.left.v_ll_rms,
                g.v_ll_rms,
                g.phase_offset_deg
            ),
        }
    }
}
