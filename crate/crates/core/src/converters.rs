//! Power-stage models: floating module bridge and capacitor, fixed-ratio LLC
//! link, shared dc link and the averaged AFE filter.
//!
//! Capacitors are advanced in energy form, `½Cv'² = ½Cv² + dt·p`, with `p`
//! the mean power over the step. That keeps the energy audit exact up to
//! rounding whatever the step size.

use alloc::string::String;

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use crate::control::ModuleMode;
use crate::error::{Error, Result};
use crate::network::{LlcParams, SharedLinkParams};
use crate::phasor::{abc_to_alpha_beta, AlphaBeta};

fn capacitor_energy_step(v: f64, c: f64, p: f64, dt: f64) -> f64 {
    let e = 0.5 * c * v * v + dt * p;
    (2.0 * e.max(0.0) / c).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloatingModuleState {
    pub v_dc: f64,
    pub c_dc: f64,
    pub v_dc_min: f64,
    /// Bridge duty in averaged mode, or the instantaneous switching state
    /// (−1, 0, +1) in switched mode.
    pub duty: f64,
    pub mode: ModuleMode,
    /// Per-side filter inductance.
    pub filter_l: f64,
    pub filter_i: f64,
    pub name: String,
    pub t: f64,
}

impl FloatingModuleState {
    pub fn new(name: impl Into<String>, v_dc: f64, c_dc: f64, v_dc_min: f64, filter_l: f64) -> Result<Self> {
        if !(c_dc > 0.0) {
            return Err(Error::invalid("c_dc", "module capacitance must be positive"));
        }
        if !(v_dc >= 0.0) {
            return Err(Error::invalid("v_dc", "must be non-negative"));
        }
        Ok(FloatingModuleState {
            v_dc,
            c_dc,
            v_dc_min,
            duty: 0.0,
            mode: ModuleMode::Bypass,
            filter_l,
            filter_i: 0.0,
            name: name.into(),
            t: 0.0,
        })
    }

    pub fn terminal_voltage(&self) -> f64 {
        self.duty * self.v_dc
    }

    pub fn energy(&self) -> f64 {
        0.5 * self.c_dc * self.v_dc * self.v_dc
    }
}

/// Advance one module by `dt`. `i_line` is the mean line current over the
/// step (flowing into the bridge on the positive terminal), `p_llc` the
/// power leaving the capacitor toward the LLC. The terminal voltage is held
/// over the step at its value from the starting capacitor voltage, which is
/// returned alongside the new state.
pub fn module_step(m: &FloatingModuleState, i_line: f64, p_llc: f64, dt: f64) -> Result<(FloatingModuleState, f64)> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    let v_term = m.terminal_voltage();
    let v = capacitor_energy_step(m.v_dc, m.c_dc, v_term * i_line - p_llc, dt);
    let mut next = m.clone();
    next.t = m.t + dt;
    next.filter_i = i_line;
    if !v.is_finite() {
        return Err(Error::Divergence { state: m.name.clone(), t: next.t, value: v });
    }
    if v < m.v_dc_min {
        return Err(Error::DcCollapse { link: m.name.clone(), v_dc: v, t: next.t });
    }
    next.v_dc = v;
    Ok((next, v_term))
}

/// Isolated fixed-ratio dc/dc link, modelled as a droop-coupled channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlcLink {
    pub ratio: f64,
    pub efficiency: f64,
    /// Module-side conductance, A/V.
    pub conductance: f64,
}

impl From<LlcParams> for LlcLink {
    fn from(p: LlcParams) -> Self {
        LlcLink { ratio: p.ratio, efficiency: p.efficiency, conductance: p.conductance }
    }
}

impl LlcLink {
    /// Shared-link power that corresponds to `p_module` delivered into the
    /// module (negative: exported by the module). Losses are always drawn
    /// from the sending side.
    pub fn shared_side_power(&self, p_module: f64) -> f64 {
        if p_module >= 0.0 {
            p_module / self.efficiency
        } else {
            p_module * self.efficiency
        }
    }
}

/// Module-side power moved toward the module. `dt` is accepted for symmetry
/// with the other stepping functions; the channel is memoryless.
pub fn llc_transfer(link: &LlcLink, v_module: f64, v_shared: f64, _dt: f64) -> f64 {
    let v_target = v_shared / link.ratio;
    link.conductance * v_target * (v_target - v_module)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SharedDcLink {
    pub v_dc: f64,
    pub c_dc: f64,
    pub v_dc_min: f64,
    pub t: f64,
}

impl SharedDcLink {
    pub fn new(p: &SharedLinkParams) -> Result<Self> {
        if !(p.c_dc > 0.0) {
            return Err(Error::invalid("shared.c_dc", "capacitance must be positive"));
        }
        Ok(SharedDcLink { v_dc: p.v_dc, c_dc: p.c_dc, v_dc_min: p.v_dc_min, t: 0.0 })
    }

    pub fn energy(&self) -> f64 {
        0.5 * self.c_dc * self.v_dc * self.v_dc
    }
}

/// `C·v·dv/dt = p_afe − p_llc_total`, with `p_llc_total` the sum of the
/// shared-side LLC powers.
pub fn shared_link_step(link: &SharedDcLink, p_afe: f64, p_llc_total: f64, dt: f64) -> Result<SharedDcLink> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    if !(link.c_dc > 0.0) {
        return Err(Error::invalid("c_dc", "capacitance must be positive"));
    }
    let v = capacitor_energy_step(link.v_dc, link.c_dc, p_afe - p_llc_total, dt);
    let t = link.t + dt;
    if !v.is_finite() {
        return Err(Error::Divergence { state: "shared dc link".into(), t, value: v });
    }
    if v < link.v_dc_min {
        return Err(Error::DcCollapse { link: "shared".into(), v_dc: v, t });
    }
    Ok(SharedDcLink { v_dc: v, t, ..link.clone() })
}

/// Averaged three-wire AFE filter in αβ: `L·di/dt = v − u − R·i`, with `i`
/// flowing from the grid into the converter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfeStage {
    pub i: AlphaBeta,
    pub l: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfeStepPower {
    /// Power drawn from the grid.
    pub p_grid: f64,
    /// Power delivered to the dc side.
    pub p_dc: f64,
}

impl AfeStage {
    pub fn new(l: f64, r: f64) -> Self {
        AfeStage { i: AlphaBeta::default(), l, r }
    }

    pub fn currents(&self) -> [f64; 3] {
        crate::phasor::alpha_beta_to_abc(self.i)
    }

    /// Inductor energy of all three phases.
    pub fn energy(&self) -> f64 {
        0.75 * self.l * (self.i.alpha * self.i.alpha + self.i.beta * self.i.beta)
    }

    /// Trapezoidal step with grid voltage `v0` → `v1` and held converter
    /// voltage `u`.
    pub fn step(&mut self, v0: [f64; 3], v1: [f64; 3], u: [f64; 3], dt: f64) -> AfeStepPower {
        let (a0, a1, au) = (abc_to_alpha_beta(v0), abc_to_alpha_beta(v1), abc_to_alpha_beta(u));
        let k1 = self.l / dt - self.r / 2.0;
        let k2 = self.l / dt + self.r / 2.0;
        let va = 0.5 * (a0.alpha + a1.alpha);
        let vb = 0.5 * (a0.beta + a1.beta);
        let na = (k1 * self.i.alpha + va - au.alpha) / k2;
        let nb = (k1 * self.i.beta + vb - au.beta) / k2;
        let (ma, mb) = (0.5 * (self.i.alpha + na), 0.5 * (self.i.beta + nb));
        self.i = AlphaBeta { alpha: na, beta: nb, zero: 0.0 };
        AfeStepPower { p_grid: 1.5 * (va * ma + vb * mb), p_dc: 1.5 * (au.alpha * ma + au.beta * mb) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{afe_step, AfeConfig, AfeController, AfeMeasurement};
    use crate::network::current_through;
    use crate::phasor::{Complex, Phasor};
    use core::f64::consts::{PI, SQRT_2};

    fn module() -> FloatingModuleState {
        FloatingModuleState::new("a", 48.0, 20e-3, 10.0, 100e-6).unwrap()
    }

    #[test]
    fn bypass_holds_voltage() {
        let (m, v) = module_step(&module(), 30.0, 0.0, 1e-5).unwrap();
        assert_eq!((m.v_dc, v), (48.0, 0.0));
    }

    #[test]
    fn half_duty_gives_half_voltage() {
        let mut m = module();
        m.duty = 0.5;
        assert_eq!(m.terminal_voltage(), 24.0);
    }

    #[test]
    fn cycle_mean_capacitor_power_matches_phasor_power() {
        // Module voltage and line current from the phasor circuit; the
        // capacitor absorbs Re(V_m·I*) on average.
        let z = Complex::new(0.02, 0.01 + 2.0 * PI * 50.0 * 200e-6);
        let vm = Phasor::from_polar_deg(20.0, 60.0);
        let i = current_through(Phasor::new(230.0, 0.0) - Phasor::from_polar_deg(230.0, -3.0) - vm, z).unwrap();
        let dt = 1e-5;
        let w = 2.0 * PI * 50.0;
        let mut m = module();
        let e0 = m.energy();
        for k in 0..2000 {
            let wt = w * (k as f64 + 0.5) * dt;
            m.duty = vm.instantaneous(wt) / m.v_dc;
            m = module_step(&m, i.instantaneous(wt), 0.0, dt).unwrap().0;
        }
        let p = (m.energy() - e0) / 0.02;
        let expect = (vm * i.conj()).re;
        assert!((p - expect).abs() < 0.01 * expect.abs(), "{p} vs {expect}");
    }

    #[test]
    fn collapse_is_reported() {
        let mut m = module();
        m.v_dc = 10.5;
        let err = module_step(&m, 0.0, 1e6, 1e-5).unwrap_err();
        assert!(matches!(err, Error::DcCollapse { .. }));
    }

    #[test]
    fn llc_balanced_and_antisymmetric() {
        let l = LlcLink { ratio: 700.0 / 48.0, efficiency: 0.97, conductance: 40.0 };
        assert_eq!(llc_transfer(&l, 48.0, 700.0, 1e-5), 0.0);
        let up = llc_transfer(&l, 47.5, 700.0, 1e-5);
        let down = llc_transfer(&l, 48.5, 700.0, 1e-5);
        assert!(up > 0.0);
        assert!((up + down).abs() < 1e-9);
    }

    #[test]
    fn exported_power_arrives_reduced_by_efficiency() {
        // A module exporting 500 W settles where the LLC returns it all.
        let l = LlcLink { ratio: 700.0 / 48.0, efficiency: 0.97, conductance: 40.0 };
        let mut m = module();
        let dt = 1e-5;
        let mut p = 0.0;
        for _ in 0..200_000 {
            p = llc_transfer(&l, m.v_dc, 700.0, dt);
            // The bridge pushes 500 W into the capacitor; the LLC takes it out.
            let e = m.energy() + dt * (500.0 + p);
            m.v_dc = (2.0 * e / m.c_dc).sqrt();
        }
        assert!((p + 500.0).abs() < 0.5, "{p}");
        assert!((l.shared_side_power(p) + 485.0).abs() < 0.5);
    }

    #[test]
    fn shared_link_balance_and_validation() {
        let p = SharedLinkParams { v_dc: 700.0, c_dc: 5e-3, v_dc_min: 300.0, afe_l: 5e-3, afe_r: 0.05 };
        let s = SharedDcLink::new(&p).unwrap();
        assert_eq!(shared_link_step(&s, 1234.0, 1234.0, 1e-5).unwrap().v_dc, 700.0);
        assert!(SharedDcLink::new(&SharedLinkParams { c_dc: 0.0, ..p }).is_err());
        let zero = SharedDcLink { c_dc: 0.0, ..s };
        assert!(shared_link_step(&zero, 0.0, 0.0, 1e-5).is_err());
    }

    #[test]
    fn shared_link_recovers_from_load_step() {
        let dt = 1e-5;
        let w = 2.0 * PI * 50.0;
        let params = SharedLinkParams { v_dc: 700.0, c_dc: 5e-3, v_dc_min: 300.0, afe_l: 5e-3, afe_r: 0.05 };
        let mut link = SharedDcLink::new(&params).unwrap();
        let mut stage = AfeStage::new(params.afe_l, params.afe_r);
        let mut ctl = AfeController::new(AfeConfig {
            omega: w,
            l_filter: params.afe_l,
            r_filter: params.afe_r,
            vdc_ref: 700.0,
            c_dc: params.c_dc,
            v_d_nominal: 230.0 * SQRT_2,
            q_ref: 0.0,
            current_bandwidth_hz: 200.0,
            neg_bandwidth_hz: 10.0,
            vdc_bandwidth_hz: 10.0,
            sogi_k: SQRT_2,
            i_max: 100.0,
            t_ctrl: dt,
        })
        .unwrap();
        let amp = 230.0 * SQRT_2;
        ctl.warm_start(Complex::new(amp, 0.0), Complex::new(0.0, -amp), 0.0, 700.0);
        let grid = |t: f64| [0.0, -2.0 * PI / 3.0, 2.0 * PI / 3.0].map(|o| amp * (w * t + o).cos());
        let mut v_min = f64::MAX;
        for k in 0..60_000 {
            let t = k as f64 * dt;
            let load = if t >= 0.1 { 1000.0 } else { 0.0 };
            let m = AfeMeasurement { v_grid: grid(t), i_in: stage.currents(), v_dc: link.v_dc };
            let out = afe_step(&mut ctl, &m, dt).unwrap();
            let pw = stage.step(grid(t), grid(t + dt), out.u, dt);
            link = shared_link_step(&link, pw.p_dc, load, dt).unwrap();
            if t >= 0.1 {
                v_min = v_min.min(link.v_dc);
            }
        }
        assert!(v_min < 699.5);
        assert!((link.v_dc - 700.0).abs() < 7.0, "{}", link.v_dc);
    }
}
