//! Per-phase floating-module controller.
//!
//! The PLL runs on the phase's own left voltage, so every dq quantity here is
//! relative to that phase. Current control uses a one-cycle sliding DFT of
//! the line current, a PI pair on the dq error and an analytic feedforward
//! `V_drive − Z·I_ref`, where `V_drive` is the measured voltage that would
//! push current through the loop with the module bypassed.
//!
//! The sliding DFT is blind to dc and to every harmonic. A SOGI would not do
//! here: its quadrature output passes dc, and the inverse transform turns a
//! dc current into a dc voltage command, which closes an unstable loop when
//! the line is mostly inductive.

use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use super::harmonic::{enable_orders, harmonic_block_step, HarmonicBlock};
use super::modulator::{max_fundamental, modulate, overmod_command, ModulatorOutput};
use super::{MovingAverage, PiController, Pll};
use crate::error::Result;
use crate::phasor::{park, Complex, DqSample, Phasor, SogiState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesConfig {
    pub omega: f64,
    pub kp: f64,
    pub ki: f64,
    pub sogi_k: f64,
    pub pll_bandwidth_hz: f64,
    pub harmonic_trim: f64,
    pub v_dc_nominal: f64,
    pub allow_overmod: bool,
    /// Control period.
    pub t_ctrl: f64,
    /// The right terminal is a voltage source whose voltage is part of the
    /// driving voltage (two-grid topology). For a load it is ignored.
    pub right_is_source: bool,
    /// Loop impedance at the fundamental, used for feedforward, for scaling
    /// the PI output and for predicting the current after a reference change.
    pub z_loop: Complex,
}

/// What the fundamental loop tracks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    Bypass,
    /// Peak dq current relative to the phase voltage.
    Current {
        i_ref: DqSample,
    },
    /// Open-loop peak dq module voltage.
    Voltage {
        v: DqSample,
    },
    /// Fundamental bypassed, harmonic blocks active.
    HarmonicsOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SeriesMeasurement {
    pub v_left: f64,
    /// Right terminal voltage (only used when the right side is a source).
    pub v_right: f64,
    pub i_line: f64,
    pub v_dc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOutput {
    pub v_cmd: f64,
    pub modulation: ModulatorOutput,
    /// The fundamental demand exceeded what the bridge can produce.
    pub limited: bool,
}

/// A reference change held back until the expected step in instantaneous
/// current crosses zero, so the line picks up no decaying dc offset.
#[derive(Debug, Clone, PartialEq)]
struct Transfer {
    reference: Reference,
    orders: Vec<u32>,
    delta: Complex,
    last: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesController {
    pub cfg: SeriesConfig,
    pub pll: Pll,
    /// One-cycle means of `2·i·e^{−jθ}`.
    i_dft: MovingAverage<Complex>,
    /// Expected dq current after the last feedforward change, and the same
    /// sliding DFT applied to it. The PI acts on the difference between the
    /// two windows, so it does not chase the loop's own step response.
    i_model: Complex,
    model_dft: MovingAverage<Complex>,
    pub sogi_vr: SogiState,
    pub i_loop_d: PiController,
    pub i_loop_q: PiController,
    pub harmonic_blocks: Vec<HarmonicBlock>,
    pub reference: Reference,
    /// Fundamental feedforward, peak dq.
    pub v_ff: DqSample,
    /// Last fundamental demand, peak dq. Zero while bypassed.
    v_fund: Complex,
    /// Reference waiting for its transfer instant.
    pending: Option<Transfer>,
    pub v_dc: f64,
    pub limited: bool,
    theta: f64,
}

impl SeriesController {
    pub fn new(cfg: SeriesConfig, harmonic_orders: &[(u32, Complex)]) -> Result<Self> {
        let lim = max_fundamental(cfg.v_dc_nominal);
        let n_cycle = (2.0 * core::f64::consts::PI / (cfg.omega * cfg.t_ctrl)).round() as usize;
        Ok(SeriesController {
            pll: Pll::with_moving_average(cfg.omega, cfg.sogi_k, cfg.pll_bandwidth_hz, n_cycle.max(1))?,
            i_dft: MovingAverage::new(n_cycle.max(1)),
            i_model: Complex::ZERO,
            model_dft: MovingAverage::new(n_cycle.max(1)),
            sogi_vr: SogiState::new(cfg.omega, cfg.sogi_k),
            i_loop_d: PiController::symmetric(cfg.kp, cfg.ki, lim)?,
            i_loop_q: PiController::symmetric(cfg.kp, cfg.ki, lim)?,
            harmonic_blocks: harmonic_orders
                .iter()
                .map(|&(h, z)| HarmonicBlock::new(h, n_cycle, z, cfg.harmonic_trim))
                .collect(),
            reference: Reference::Bypass,
            v_ff: DqSample::ZERO,
            v_fund: Complex::ZERO,
            pending: None,
            v_dc: cfg.v_dc_nominal,
            limited: false,
            theta: 0.0,
            cfg,
        })
    }

    /// Lock all estimators onto the given steady state at angle `wt`.
    pub fn warm_start(&mut self, v_left: Phasor, v_right: Phasor, i: Phasor, wt: f64) {
        self.pll.warm_start(SQRT_2 * v_left.norm(), wt + v_left.arg());
        let k = self.cfg.sogi_k;
        let n = self.i_dft.len();
        self.i_dft = MovingAverage::filled(n, DqSample::from_phasor(i, v_left.arg()).as_complex());
        self.sogi_vr = SogiState::locked(self.cfg.omega, k, SQRT_2 * v_right.norm(), wt + v_right.arg());
        self.theta = self.pll.theta;
    }

    /// Request a new fundamental reference. It takes effect at the first
    /// control period where the predicted step in instantaneous line current
    /// changes sign, at most half a cycle later. Between two current
    /// references the PI integrators and the reference model carry over, so
    /// a learned correction survives a set-point change.
    pub fn set_reference(&mut self, reference: Reference, harmonic_orders: &[u32]) {
        let z = self.z_loop();
        let i_now = match self.reference {
            Reference::Current { i_ref } => i_ref.as_complex(),
            _ => self.i_dft.mean(),
        };
        let i_next = match reference {
            Reference::Current { i_ref } => i_ref.as_complex(),
            Reference::Voltage { v } => i_now + (self.v_fund - v.as_complex()) / z,
            Reference::Bypass | Reference::HarmonicsOnly => i_now + self.v_fund / z,
        };
        let delta = i_next - i_now;
        let t = Transfer { reference, orders: harmonic_orders.to_vec(), delta, last: None };
        if delta.norm() <= 1e-6 * (1.0 + i_now.norm()) {
            self.transfer(t);
        } else {
            self.pending = Some(t);
        }
    }

    /// Switch immediately, skipping the transfer instant.
    pub fn set_reference_now(&mut self, reference: Reference, harmonic_orders: &[u32]) {
        self.transfer(Transfer { reference, orders: harmonic_orders.to_vec(), delta: Complex::ZERO, last: None });
    }

    /// The reference in force, or the pending one if a transfer is waiting.
    pub fn requested_reference(&self) -> Reference {
        self.pending.as_ref().map_or(self.reference, |t| t.reference)
    }

    fn transfer(&mut self, t: Transfer) {
        self.pending = None;
        let was_current = matches!(self.reference, Reference::Current { .. });
        self.reference = t.reference;
        self.v_ff = DqSample::ZERO;
        if !was_current {
            self.i_loop_d.reset();
            self.i_loop_q.reset();
            self.i_model = self.i_dft.mean();
            self.model_dft = self.i_dft.clone();
        }
        if matches!(t.reference, Reference::Current { .. }) {
            let lim = max_fundamental(self.cfg.v_dc_nominal) / self.z_loop().norm();
            self.i_loop_d.set_limits(-lim, lim);
            self.i_loop_q.set_limits(-lim, lim);
        }
        enable_orders(&mut self.harmonic_blocks, &t.orders);
    }

    /// Apply a pending reference once the predicted current step at angle
    /// `theta` has crossed zero.
    fn poll_transfer(&mut self, theta: f64) {
        let Some(t) = self.pending.as_mut() else { return };
        let s = (t.delta * Complex::from_polar(1.0, theta)).re;
        let crossed = s == 0.0 || t.last.is_some_and(|l| l * s <= 0.0);
        t.last = Some(s);
        if crossed {
            if let Some(t) = self.pending.take() {
                self.transfer(t);
            }
        }
    }

    fn z_loop(&self) -> Complex {
        if self.cfg.z_loop.norm() > 0.0 {
            self.cfg.z_loop
        } else {
            Complex::ONE
        }
    }

    fn observe_current(&mut self, i: f64) {
        self.i_dft.push(Complex::from_polar(2.0 * i, -self.theta));
    }

    /// Estimated angle of the phase voltage.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// dq (peak) of the line current in the PLL frame.
    pub fn current_dq(&self) -> DqSample {
        DqSample::from_complex(self.i_dft.mean())
    }

    /// dq (peak) of the bypass driving voltage in the PLL frame.
    pub fn drive_dq(&self) -> DqSample {
        let vl = park(self.pll.sogi.v_filt, self.pll.sogi.v_quad, self.theta);
        if self.cfg.right_is_source {
            let vr = park(self.sogi_vr.v_filt, self.sogi_vr.v_quad, self.theta);
            DqSample::new(vl.d - vr.d, vl.q - vr.q)
        } else {
            vl
        }
    }

    /// One control period.
    pub fn step(&mut self, m: SeriesMeasurement, dt: f64) -> Result<SeriesOutput> {
        self.v_dc = m.v_dc;
        self.theta = self.pll.step(m.v_left, dt)?;
        if self.cfg.right_is_source {
            self.sogi_vr.step(m.v_right, dt)?;
        }
        let v_drive = m.v_left - if self.cfg.right_is_source { m.v_right } else { 0.0 };
        for b in &mut self.harmonic_blocks {
            b.observe_voltage(v_drive, self.theta);
        }
        self.poll_transfer(self.theta);
        let fundamental = match self.reference {
            Reference::Current { i_ref } => {
                let d = self.drive_dq().as_complex() - self.z_loop() * i_ref.as_complex();
                self.v_ff = DqSample::from_complex(d);
                series_current_control(self, m.i_line, i_ref, dt)?
            }
            Reference::Voltage { v } => {
                self.observe_current(m.i_line);
                self.emit(v.as_complex(), dt)
            }
            Reference::Bypass | Reference::HarmonicsOnly => {
                self.observe_current(m.i_line);
                self.limited = false;
                self.v_fund = Complex::ZERO;
                0.0
            }
        };
        let theta_out = self.theta + self.cfg.omega * dt / 2.0;
        let harmonic = harmonic_block_step(&mut self.harmonic_blocks, m.i_line, self.theta, theta_out, dt);
        let v_cmd = if matches!(self.reference, Reference::Bypass) { 0.0 } else { fundamental + harmonic };
        let modulation = modulate(v_cmd, m.v_dc.max(1e-9), self.cfg.allow_overmod)?;
        Ok(SeriesOutput { v_cmd, modulation, limited: self.limited })
    }

    /// Limit a peak dq fundamental demand, pre-compensate clipping and return
    /// the instantaneous command half a control period ahead.
    fn emit(&mut self, v: Complex, dt: f64) -> f64 {
        let v_dc = self.v_dc.max(1e-9);
        let a_max = if self.cfg.allow_overmod { max_fundamental(v_dc) } else { v_dc };
        let a = v.norm();
        self.v_fund = v;
        self.limited = a > a_max;
        let peak = if a <= v_dc {
            a
        } else if self.cfg.allow_overmod {
            // Beyond the square-wave limit, ask for a very deep clip.
            overmod_command(a, v_dc).unwrap_or(1e3 * v_dc)
        } else {
            v_dc
        };
        if a == 0.0 {
            return 0.0;
        }
        let theta_out = self.theta + self.cfg.omega * dt / 2.0;
        (v * Complex::from_polar(peak / a, theta_out)).re
    }
}

/// Fundamental current loop: sliding DFT of the measured current against the
/// same DFT of the reference model, PI pair on the dq difference, feedforward
/// `ctl.v_ff` minus `Z·PI`, inverse transform to an instantaneous module
/// voltage command.
pub fn series_current_control(ctl: &mut SeriesController, i_meas: f64, i_ref: DqSample, dt: f64) -> Result<f64> {
    ctl.observe_current(i_meas);
    let target = i_ref.as_complex();
    let z = ctl.z_loop();
    let l = z.im / ctl.cfg.omega;
    ctl.i_model = if l > 0.0 {
        target + (ctl.i_model - target) * Complex::from_polar((-z.re / l * dt).exp(), -ctl.cfg.omega * dt)
    } else {
        target
    };
    let raw = ctl.i_model + ctl.i_model.conj() * Complex::from_polar(1.0, -2.0 * ctl.theta);
    ctl.model_dft.push(raw);
    let err = ctl.model_dft.mean() - ctl.i_dft.mean();
    let ud = ctl.i_loop_d.step(err.re, dt);
    let uq = ctl.i_loop_q.step(err.im, dt);
    let v = ctl.v_ff.as_complex() - z * Complex::new(ud, uq);
    Ok(ctl.emit(v, dt))
}
