//! Shared active front end: dual-sequence dq current control under a dc-link
//! voltage loop.
//!
//! Sequence separation uses a SOGI pair on α and β (DSOGI). The PLL locks to
//! the positive-sequence voltage. Positive-sequence current is taken from the
//! plain Park transform; the negative-sequence current comes from a second
//! DSOGI and is always driven to zero.

use core::f64::consts::PI;

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use super::{MovingAverage, PiController};
use crate::error::{Error, Result};
use crate::phasor::{
    abc_to_alpha_beta, alpha_beta_to_abc, canonical_angle, inverse_park, park, AlphaBeta, DqSample, SogiState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sequence {
    Positive,
    Negative,
}

/// Node voltage for one sequence:
/// `U = V − PI ± ωL·(I_q, −I_d)`, with the coupling sign flipped for the
/// negative sequence.
pub fn afe_voltage_command(seq: Sequence, v: DqSample, pi_out: DqSample, i: DqSample, omega_l: f64) -> DqSample {
    let s = match seq {
        Sequence::Positive => 1.0,
        Sequence::Negative => -1.0,
    };
    DqSample::new(v.d - pi_out.d + s * omega_l * i.q, v.q - pi_out.q - s * omega_l * i.d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfeConfig {
    pub omega: f64,
    pub l_filter: f64,
    pub r_filter: f64,
    pub vdc_ref: f64,
    pub c_dc: f64,
    /// Nominal positive-sequence peak phase voltage (d axis).
    pub v_d_nominal: f64,
    pub q_ref: f64,
    pub current_bandwidth_hz: f64,
    pub neg_bandwidth_hz: f64,
    pub vdc_bandwidth_hz: f64,
    pub sogi_k: f64,
    /// Peak current limit on the d reference.
    pub i_max: f64,
    pub t_ctrl: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AfeMeasurement {
    pub v_grid: [f64; 3],
    pub i_in: [f64; 3],
    pub v_dc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfeOutput {
    /// Converter node voltages, phase to neutral.
    pub u: [f64; 3],
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AfeController {
    pub cfg: AfeConfig,
    pub vdc_loop: PiController,
    pub pos_d: PiController,
    pub pos_q: PiController,
    pub neg_d: PiController,
    pub neg_q: PiController,
    pub omega: f64,
    pub theta: f64,
    pll_pi: PiController,
    v_sogi: [SogiState; 2],
    i_sogi: [SogiState; 2],
    vdc_avg: MovingAverage<f64>,
    /// Last positive-sequence current reference.
    pub i_ref: DqSample,
    pub v_pos: DqSample,
    pub v_neg: DqSample,
    pub i_pos: DqSample,
    pub i_neg: DqSample,
}

fn sequences(a: &SogiState, b: &SogiState) -> (AlphaBeta, AlphaBeta) {
    let pos = AlphaBeta { alpha: 0.5 * (a.v_filt - b.v_quad), beta: 0.5 * (a.v_quad + b.v_filt), zero: 0.0 };
    let neg = AlphaBeta { alpha: 0.5 * (a.v_filt + b.v_quad), beta: 0.5 * (-a.v_quad + b.v_filt), zero: 0.0 };
    (pos, neg)
}

impl AfeController {
    pub fn new(cfg: AfeConfig) -> Result<Self> {
        if !(cfg.l_filter > 0.0) || !(cfg.c_dc > 0.0) || !(cfg.vdc_ref > 0.0) || !(cfg.t_ctrl > 0.0) {
            return Err(Error::invalid(
                "afe",
                "filter inductance, dc capacitance, dc reference and control period must be positive",
            ));
        }
        let a = 2.0 * PI * cfg.current_bandwidth_hz;
        let an = 2.0 * PI * cfg.neg_bandwidth_hz;
        let u_lim = cfg.vdc_ref;
        let wc = 2.0 * PI * cfg.vdc_bandwidth_hz;
        let gain = 1.5 * cfg.v_d_nominal / cfg.vdc_ref;
        let kp_v = wc * cfg.c_dc / gain;
        let wn = 2.0 * PI * 20.0;
        let half_cycle = (PI / (cfg.omega * cfg.t_ctrl)).round() as usize;
        Ok(AfeController {
            vdc_loop: PiController::symmetric(kp_v, kp_v * wc / 4.0, cfg.i_max)?,
            pos_d: PiController::symmetric(a * cfg.l_filter, a * cfg.r_filter, u_lim)?,
            pos_q: PiController::symmetric(a * cfg.l_filter, a * cfg.r_filter, u_lim)?,
            neg_d: PiController::symmetric(an * cfg.l_filter, an * cfg.r_filter, u_lim)?,
            neg_q: PiController::symmetric(an * cfg.l_filter, an * cfg.r_filter, u_lim)?,
            omega: cfg.omega,
            theta: 0.0,
            pll_pi: PiController::symmetric(2.0 * 0.707 * wn, wn * wn, 0.5 * cfg.omega)?,
            v_sogi: [SogiState::new(cfg.omega, cfg.sogi_k); 2],
            i_sogi: [SogiState::new(cfg.omega, cfg.sogi_k); 2],
            vdc_avg: MovingAverage::filled(half_cycle, cfg.vdc_ref),
            i_ref: DqSample::ZERO,
            v_pos: DqSample::ZERO,
            v_neg: DqSample::ZERO,
            i_pos: DqSample::ZERO,
            i_neg: DqSample::ZERO,
            cfg,
        })
    }

    /// Lock the voltage estimators onto a steady grid given as αβ peak
    /// phasors (`alpha`, `beta` as complex amplitudes at `wt`).
    pub fn warm_start(&mut self, alpha: crate::phasor::Complex, beta: crate::phasor::Complex, wt: f64, v_dc: f64) {
        let k = self.cfg.sogi_k;
        self.v_sogi = [
            SogiState::locked(self.cfg.omega, k, alpha.norm(), wt + alpha.arg()),
            SogiState::locked(self.cfg.omega, k, beta.norm(), wt + beta.arg()),
        ];
        let (pos, _) = sequences(&self.v_sogi[0], &self.v_sogi[1]);
        self.theta = pos.beta.atan2(pos.alpha);
        self.omega = self.cfg.omega;
        let n = self.vdc_avg.len();
        self.vdc_avg = MovingAverage::filled(n, v_dc);
    }

    /// Update the estimators and PLL from one sample.
    fn observe(&mut self, m: &AfeMeasurement, dt: f64) -> Result<AlphaBeta> {
        let v = abc_to_alpha_beta(m.v_grid);
        let i = abc_to_alpha_beta(m.i_in);
        self.v_sogi[0].step(v.alpha, dt)?;
        self.v_sogi[1].step(v.beta, dt)?;
        self.i_sogi[0].step(i.alpha, dt)?;
        self.i_sogi[1].step(i.beta, dt)?;
        let (vp, vn) = sequences(&self.v_sogi[0], &self.v_sogi[1]);
        self.theta = canonical_angle(self.theta + self.omega * dt);
        let err = canonical_angle(vp.beta.atan2(vp.alpha) - self.theta);
        self.omega = self.cfg.omega + self.pll_pi.step(err, dt);
        self.v_pos = park(vp.alpha, vp.beta, self.theta);
        self.v_neg = park(vn.alpha, vn.beta, -self.theta);
        let (_, i_n) = sequences(&self.i_sogi[0], &self.i_sogi[1]);
        self.i_pos = park(i.alpha, i.beta, self.theta);
        self.i_neg = park(i_n.alpha, i_n.beta, -self.theta);
        Ok(i)
    }

    /// Current loops only, tracking a given positive-sequence reference.
    pub fn step_current(&mut self, m: &AfeMeasurement, i_ref: DqSample, dt: f64) -> Result<AfeOutput> {
        self.observe(m, dt)?;
        self.i_ref = i_ref;
        Ok(self.current_loops(m.v_dc, dt))
    }

    fn current_loops(&mut self, v_dc: f64, dt: f64) -> AfeOutput {
        let wl = self.cfg.omega * self.cfg.l_filter;
        let pi_p = DqSample::new(
            self.pos_d.step(self.i_ref.d - self.i_pos.d, dt),
            self.pos_q.step(self.i_ref.q - self.i_pos.q, dt),
        );
        let pi_n = DqSample::new(self.neg_d.step(-self.i_neg.d, dt), self.neg_q.step(-self.i_neg.q, dt));
        let up = afe_voltage_command(Sequence::Positive, self.v_pos, pi_p, self.i_pos, wl);
        let un = afe_voltage_command(Sequence::Negative, self.v_neg, pi_n, self.i_neg, wl);
        let th = self.theta + self.omega * dt / 2.0;
        let (pa, pb) = inverse_park(up, th);
        let (na, nb) = inverse_park(un, -th);
        let mut ab = AlphaBeta { alpha: pa + na, beta: pb + nb, zero: 0.0 };
        let lim = v_dc.max(0.0) / 3.0_f64.sqrt();
        let mag = ab.alpha.hypot(ab.beta);
        let saturated = mag > lim;
        if saturated {
            ab.alpha *= lim / mag;
            ab.beta *= lim / mag;
        }
        AfeOutput { u: alpha_beta_to_abc(ab), saturated }
    }
}

/// One control period: dc-voltage loop sets the positive d reference, Q* the
/// q reference, negative-sequence references stay at zero.
pub fn afe_step(ctl: &mut AfeController, m: &AfeMeasurement, dt: f64) -> Result<AfeOutput> {
    ctl.observe(m, dt)?;
    let v_avg = ctl.vdc_avg.push(m.v_dc);
    let i_d = ctl.vdc_loop.step(ctl.cfg.vdc_ref - v_avg, dt);
    let v_d = ctl.v_pos.d.max(1e-3 * ctl.cfg.v_d_nominal);
    let i_q = (-2.0 * ctl.cfg.q_ref / (3.0 * v_d)).clamp(-ctl.cfg.i_max, ctl.cfg.i_max);
    ctl.i_ref = DqSample::new(i_d, i_q);
    Ok(ctl.current_loops(m.v_dc, dt))
}
