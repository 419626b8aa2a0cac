//! Electrical description of the two studied topologies and their analytic
//! steady state.
//!
//! Circuit convention: the left grid drives current `i` (positive left to
//! right) through the module, the series filter and the line into either a
//! second grid or an RL load. Per phase,
//!
//! ```text
//! v_left − v_m − Z·i − v_right = 0,     I = (V_left − V_right − V_m) / Z
//! ```
//!
//! so `V_left` plays the part of V₂ and `V_right` of V₁ in the classic
//! two-source form. `S_m = V_m·conj(I)` is the power absorbed by the module.
//! Phases are independent (four-wire system with a shared neutral).

mod cases;
mod scenario;

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phasor::{Complex, Phasor, ThreePhaseSet};

pub use cases::{build_case, case_ids, CaseInfo, CASES};
pub use scenario::{
    AfeGains, Command, ControllerParams, Fidelity, FilterParams, Interval, LlcParams, ModuleParams, RightSide,
    Scenario, ScheduleEntry, SeriesGains, SharedLinkParams, SimConfig, Topology,
};

pub const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// One harmonic of a grid voltage: `magnitude_pu` of the fundamental phase
/// voltage, with phase `phase_deg` at the harmonic frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Harmonic {
    pub order: u32,
    pub magnitude_pu: f64,
    pub phase_deg: f64,
}

/// An ideal three-phase grid behind the point of connection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSegment {
    pub v_ll_rms: f64,
    #[serde(default)]
    pub phase_offset_deg: f64,
    pub freq: f64,
    /// Per-phase rms phase voltages that replace `v_ll_rms/√3`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_phase_overrides: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub harmonics: Vec<Harmonic>,
}

impl GridSegment {
    pub fn balanced(v_ll_rms: f64, phase_offset_deg: f64, freq: f64) -> Self {
        GridSegment { v_ll_rms, phase_offset_deg, freq, per_phase_overrides: None, harmonics: Vec::new() }
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.freq
    }

    /// Nominal phase voltage, the base for harmonic per-unit values.
    pub fn v_phase_nominal(&self) -> f64 {
        self.v_ll_rms / SQRT_3
    }

    /// Phase angle of phase `p` (0 = a) in radians.
    pub fn phase_angle(&self, p: usize) -> f64 {
        (self.phase_offset_deg - 120.0 * p as f64).to_radians()
    }

    pub fn phase_rms(&self, p: usize) -> f64 {
        match self.per_phase_overrides {
            Some(v) => v[p],
            None => self.v_phase_nominal(),
        }
    }

    pub fn fundamental(&self, p: usize) -> Phasor {
        Phasor::from_polar(self.phase_rms(p), self.phase_angle(p))
    }

    pub fn fundamental_set(&self) -> ThreePhaseSet {
        ThreePhaseSet::new(self.fundamental(0), self.fundamental(1), self.fundamental(2))
    }

    /// rms phasor at `h·f` for phase `p`. Order 1 is the fundamental.
    pub fn harmonic(&self, p: usize, h: u32) -> Phasor {
        if h == 1 {
            return self.fundamental(p);
        }
        self.harmonics
            .iter()
            .filter(|hm| hm.order == h)
            .map(|hm| {
                Phasor::from_polar(
                    hm.magnitude_pu * self.v_phase_nominal(),
                    h as f64 * self.phase_angle(p) + hm.phase_deg.to_radians(),
                )
            })
            .sum()
    }

    /// Instantaneous phase-to-neutral voltage.
    pub fn instantaneous(&self, p: usize, t: f64) -> f64 {
        let wt = self.omega() * t;
        let th = self.phase_angle(p);
        let mut v = SQRT_2 * self.phase_rms(p) * (wt + th).cos();
        let base = SQRT_2 * self.v_phase_nominal();
        for hm in &self.harmonics {
            let h = hm.order as f64;
            v += base * hm.magnitude_pu * (h * (wt + th) + hm.phase_deg.to_radians()).cos();
        }
        v
    }

    /// Orders present, fundamental first.
    pub fn orders(&self) -> Vec<u32> {
        let mut o: Vec<u32> = core::iter::once(1).chain(self.harmonics.iter().map(|h| h.order)).collect();
        o.sort_unstable();
        o.dedup();
        o
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        check(self.freq > 0.0 && self.freq.is_finite(), field, "freq", "must be positive")?;
        check(self.v_ll_rms >= 0.0 && self.v_ll_rms.is_finite(), field, "v_ll_rms", "must be non-negative")?;
        check(self.phase_offset_deg.is_finite(), field, "phase_offset_deg", "must be finite")?;
        if let Some(v) = self.per_phase_overrides {
            for x in v {
                check(x >= 0.0 && x.is_finite(), field, "per_phase_overrides", "must be non-negative")?;
            }
        }
        for h in &self.harmonics {
            check((2..=40).contains(&h.order), field, "harmonics.order", "must be within 2..=40")?;
            check(
                h.magnitude_pu >= 0.0 && h.magnitude_pu.is_finite(),
                field,
                "harmonics.magnitude_pu",
                "must be non-negative",
            )?;
            check(h.phase_deg.is_finite(), field, "harmonics.phase_deg", "must be finite")?;
        }
        Ok(())
    }
}

/// Series line impedance per phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineImpedance {
    pub r: f64,
    /// Reactance at the fundamental.
    pub x: f64,
    /// Current rating, rms amps. Current references above it are rejected.
    #[serde(default = "default_rating")]
    pub rating: f64,
}

fn default_rating() -> f64 {
    100.0
}

impl LineImpedance {
    pub fn new(r: f64, x: f64) -> Self {
        LineImpedance { r, x, rating: default_rating() }
    }

    pub fn z(&self) -> Complex {
        Complex::new(self.r, self.x)
    }

    /// Impedance at harmonic order `h`.
    pub fn z_at(&self, h: u32) -> Complex {
        Complex::new(self.r, self.x * h as f64)
    }

    pub fn inductance(&self, freq: f64) -> f64 {
        self.x / (2.0 * PI * freq)
    }
}

/// Series RL load per phase (star connected, neutral tied to the source).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RlLoad {
    pub r: f64,
    pub x: f64,
}

impl RlLoad {
    pub fn z(&self) -> Complex {
        Complex::new(self.r, self.x)
    }

    pub fn z_at(&self, h: u32) -> Complex {
        Complex::new(self.r, self.x * h as f64)
    }

    pub fn inductance(&self, freq: f64) -> f64 {
        self.x / (2.0 * PI * freq)
    }
}

/// Line current `(V₂ − V₁ − V_m)/Z_line`.
pub fn steady_state_current(v2: Phasor, v1: Phasor, vm: Phasor, z: LineImpedance) -> Result<Phasor> {
    current_through(v2 - v1 - vm, z.z())
}

/// `v_drive / z`, rejecting a zero impedance.
pub fn current_through(v_drive: Phasor, z: Complex) -> Result<Phasor> {
    if !(z.norm() > 0.0) {
        return Err(Error::ZeroImpedance);
    }
    Ok(v_drive / z)
}

/// Complex power absorbed by the module, `V_m·conj(I)` with `I` from
/// [`steady_state_current`].
pub fn module_apparent_power(vm: Phasor, v1: Phasor, v2: Phasor, z: LineImpedance) -> Result<Complex> {
    let i = steady_state_current(v2, v1, vm, z)?;
    Ok(vm * i.conj())
}

/// Per-phase series solution of a source feeding an RL load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadFlow {
    pub i: Phasor,
    /// Three-phase totals for a balanced set of this phase.
    pub p_source: f64,
    pub q_source: f64,
    /// Per-phase terms.
    pub s_source: Complex,
    pub p_load: f64,
    pub p_line: f64,
    pub s_module: Complex,
}

pub fn load_flow(load: RlLoad, v_source: Phasor, z: LineImpedance, vm: Phasor) -> Result<LoadFlow> {
    load_flow_z(load.z(), v_source, z.z(), vm)
}

/// [`load_flow`] with explicit series and load impedances.
pub fn load_flow_z(z_load: Complex, v_source: Phasor, z_series: Complex, vm: Phasor) -> Result<LoadFlow> {
    let z_tot = z_series + z_load;
    if !(z_tot.norm() > 0.0) {
        return Err(Error::ZeroImpedance);
    }
    let i = (v_source - vm) / z_tot;
    let s = v_source * i.conj();
    Ok(LoadFlow {
        i,
        p_source: 3.0 * s.re,
        q_source: 3.0 * s.im,
        s_source: s,
        p_load: i.norm_sqr() * z_load.re,
        p_line: i.norm_sqr() * z_series.re,
        s_module: vm * i.conj(),
    })
}

/// Analytic per-phase operating point for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseOperatingPoint {
    /// Phase voltage of the left grid at the fundamental.
    pub v_left: Phasor,
    pub v_right: Phasor,
    /// Fundamental line current and module voltage (absolute phasors).
    pub i: Phasor,
    pub v_m: Phasor,
    /// `(order, current, module voltage)` for each harmonic order present.
    pub harmonics: Vec<(u32, Phasor, Phasor)>,
}

impl PhaseOperatingPoint {
    /// `V_m·conj(I)` summed over all orders.
    pub fn module_power(&self) -> Complex {
        self.v_m * self.i.conj() + self.harmonics.iter().map(|&(_, i, v)| v * i.conj()).sum::<Complex>()
    }

    /// Current reference relative to the phase's own voltage angle.
    pub fn i_rel(&self) -> Phasor {
        self.i.rotate(-self.v_left.arg())
    }

    pub fn v_m_rel(&self) -> Phasor {
        self.v_m.rotate(-self.v_left.arg())
    }
}

pub(crate) fn check(ok: bool, parent: &str, field: &str, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        let mut f = alloc::string::String::from(parent);
        if !parent.is_empty() {
            f.push('.');
        }
        f.push_str(field);
        Err(Error::Validation { field: f, reason: reason.into() })
    }
}
