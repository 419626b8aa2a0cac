//! Second-order generalized integrator (SOGI) orthogonal signal generator.
//!
//! Continuous structure:
//!
//! ```text
//! v'  = k·ω·s / (s² + k·ω·s + ω²) · v      (band-pass, unity gain at ω)
//! qv' = k·ω²  / (s² + k·ω·s + ω²) · v      (same, lagging by 90° at ω)
//! ```
//!
//! Both integrators are discretized with the trapezoidal rule. The resonance
//! is pre-warped so the discrete filter has exactly unity gain and quadrature
//! at `omega` for any step size.

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use crate::error::{Error, Result};

pub const DEFAULT_SOGI_GAIN: f64 = core::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SogiState {
    /// In-phase output v'.
    pub v_filt: f64,
    /// Quadrature output qv'.
    pub v_quad: f64,
    pub k_gain: f64,
    /// Tuned frequency, rad/s.
    pub omega: f64,
    /// Input at the previous step (trapezoidal memory).
    pub v_prev: f64,
}

impl SogiState {
    pub fn new(omega: f64, k_gain: f64) -> Self {
        SogiState { v_filt: 0.0, v_quad: 0.0, k_gain, omega, v_prev: 0.0 }
    }

    /// State a locked SOGI would hold for the input `peak·cos(angle)` at the
    /// present instant.
    pub fn locked(omega: f64, k_gain: f64, peak: f64, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        SogiState { v_filt: peak * c, v_quad: peak * s, k_gain, omega, v_prev: peak * c }
    }

    pub fn step(&mut self, v_in: f64, dt: f64) -> Result<()> {
        *self = sogi_step(*self, v_in, dt)?;
        Ok(())
    }

    /// Amplitude of the orthogonal pair.
    pub fn amplitude(&self) -> f64 {
        self.v_filt.hypot(self.v_quad)
    }

    /// Angle of the in-phase output, `atan2(qv', v')`.
    pub fn angle(&self) -> f64 {
        self.v_quad.atan2(self.v_filt)
    }
}

pub fn sogi_step(state: SogiState, v_in: f64, dt: f64) -> Result<SogiState> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    if !(dt * state.omega < 0.5) {
        return Err(Error::invalid("dt", "dt·omega must stay below 0.5"));
    }
    let a = (state.omega * dt / 2.0).tan();
    let k = state.k_gain;
    let (x1, x2) = (state.v_filt, state.v_quad);
    let r1 = (1.0 - k * a) * x1 - a * x2 + k * a * (v_in + state.v_prev);
    let r2 = a * x1 + x2;
    let det = 1.0 + k * a + a * a;
    Ok(SogiState { v_filt: (r1 - a * r2) / det, v_quad: (a * r1 + (1.0 + k * a) * r2) / det, v_prev: v_in, ..state })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::phasor_of_trace;
    use core::f64::consts::{PI, SQRT_2};
    use std::vec::Vec;

    const W: f64 = 2.0 * PI * 50.0;

    #[test]
    fn zero_input_stays_zero() {
        let mut s = SogiState::new(W, DEFAULT_SOGI_GAIN);
        for _ in 0..1000 {
            s.step(0.0, 1e-5).unwrap();
        }
        assert_eq!((s.v_filt, s.v_quad), (0.0, 0.0));
    }

    #[test]
    fn rejects_bad_steps() {
        let s = SogiState::new(W, DEFAULT_SOGI_GAIN);
        assert!(sogi_step(s, 1.0, 0.0).is_err());
        assert!(sogi_step(s, 1.0, -1e-5).is_err());
        assert!(sogi_step(s, 1.0, 0.01).is_err());
    }

    /// Run the SOGI over `cycles` of `input` and return (v', qv') phasors of the
    /// last cycle.
    fn run(input: impl Fn(f64) -> f64, cycles: usize, dt: f64) -> (crate::Phasor, crate::Phasor) {
        let n_cycle = (0.02 / dt).round() as usize;
        let mut s = SogiState::new(W, DEFAULT_SOGI_GAIN);
        let mut vf = Vec::new();
        let mut vq = Vec::new();
        for n in 0..cycles * n_cycle {
            let t = (n + 1) as f64 * dt;
            s.step(input(t), dt).unwrap();
            vf.push(s.v_filt);
            vq.push(s.v_quad);
        }
        let t0 = dt;
        let pf = phasor_of_trace(&vf, t0, dt, 50.0, 1.0).unwrap();
        let pq = phasor_of_trace(&vq, t0, dt, 50.0, 1.0).unwrap();
        (pf, pq)
    }

    #[test]
    fn unity_gain_and_quadrature_at_tuned_frequency() {
        // Analytic oracle: H(jω) = 1 for v', −j for qv'.
        let amp = 230.0 * SQRT_2;
        let (pf, pq) = run(|t| amp * (W * t).sin(), 5, 1e-5);
        let input_rms = 230.0;
        assert!((pf.norm() / input_rms - 1.0).abs() < 0.01);
        assert!((pq.norm() / input_rms - 1.0).abs() < 0.01);
        // sin input is cos shifted by −90°.
        assert!((pf.arg_deg() + 90.0).abs() < 0.5);
        let lag = crate::phasor::angle_diff_deg(pf.arg_deg(), pq.arg_deg());
        assert!((lag - 90.0).abs() < 0.5, "lag {lag}");
    }

    #[test]
    fn fifth_harmonic_follows_band_pass_gain() {
        // |H(j5ω)| = 5k / |1 − 25 + j5k| for the band-pass branch.
        let k = DEFAULT_SOGI_GAIN;
        let expected = 5.0 * k / ((-24.0f64).powi(2) + (5.0 * k).powi(2)).sqrt();
        let amp = 230.0 * SQRT_2;
        let n_cycle = 2000;
        let dt = 1e-5;
        let mut s = SogiState::new(W, k);
        let mut vf = Vec::new();
        for n in 0..8 * n_cycle {
            let t = (n + 1) as f64 * dt;
            let v = amp * (W * t).sin() + 0.2 * amp * (5.0 * W * t).sin();
            s.step(v, dt).unwrap();
            vf.push(s.v_filt);
        }
        let p5 = phasor_of_trace(&vf, dt, dt, 250.0, 5.0).unwrap();
        let gain = p5.norm() / (0.2 * 230.0);
        assert!((gain / expected - 1.0).abs() < 0.10, "gain {gain} expected {expected}");
    }
}
