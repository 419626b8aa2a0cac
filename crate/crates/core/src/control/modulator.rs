use core::f64::consts::PI;

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModuleMode {
    Bypass,
    SeriesPos,
    SeriesNeg,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulatorOutput {
    /// Averaged terminal voltage over `v_dc`, in [−1, 1].
    pub duty: f64,
    pub mode: ModuleMode,
    /// Command exceeded the dc voltage and over-modulation is allowed.
    pub overmod_active: bool,
    /// Command exceeded the dc voltage and was clipped (either way).
    pub saturated: bool,
}

/// Map an instantaneous voltage command onto the bridge.
///
/// The command is clipped at `±v_dc` in both cases; `allow_overmod` only
/// decides whether a clipped command counts as over-modulation or as plain
/// saturation.
pub fn modulate(v_cmd: f64, v_dc: f64, allow_overmod: bool) -> Result<ModulatorOutput> {
    if !(v_dc > 0.0) {
        return Err(Error::invalid("v_dc", "must be positive"));
    }
    let raw = v_cmd / v_dc;
    let duty = raw.clamp(-1.0, 1.0);
    let mode = if duty > 0.0 {
        ModuleMode::SeriesPos
    } else if duty < 0.0 {
        ModuleMode::SeriesNeg
    } else {
        ModuleMode::Bypass
    };
    let saturated = raw.abs() > 1.0;
    Ok(ModulatorOutput { duty, mode, overmod_active: saturated && allow_overmod, saturated })
}

/// Unipolar PWM switching function for a carrier position `phase` in [0, 1)
/// of the switching period. Returns −1, 0 or +1; its period average is `duty`.
pub fn unipolar_switch(duty: f64, phase: f64) -> f64 {
    let carrier = 1.0 - 4.0 * (phase - 0.5).abs();
    let leg_a = (duty > carrier) as i32;
    let leg_b = (-duty > carrier) as i32;
    (leg_a - leg_b) as f64
}

/// Fundamental peak of `k·v_dc·sin` clipped at `±v_dc`, for `k = peak/v_dc`.
pub fn clipped_fundamental(peak: f64, v_dc: f64) -> f64 {
    let k = peak.abs() / v_dc;
    if k <= 1.0 {
        return peak.abs();
    }
    let a = (1.0 / k).asin();
    v_dc * (2.0 / PI) * (k * a + a.cos())
}

/// Largest fundamental peak the bridge can produce (square wave).
pub fn max_fundamental(v_dc: f64) -> f64 {
    4.0 / PI * v_dc
}

/// Command peak whose clipped output has fundamental peak `target`.
/// Targets at or above the square-wave limit return `None`.
pub fn overmod_command(target: f64, v_dc: f64) -> Option<f64> {
    if target <= v_dc {
        return Some(target);
    }
    if target >= max_fundamental(v_dc) {
        return None;
    }
    let (mut lo, mut hi) = (v_dc, 2.0 * v_dc);
    while clipped_fundamental(hi, v_dc) < target {
        hi *= 2.0;
        if hi > 1e9 * v_dc {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if clipped_fundamental(mid, v_dc) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * v_dc {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::phasor_of_trace;
    use core::f64::consts::SQRT_2;
    use std::vec::Vec;

    #[test]
    fn zero_command_bypasses() {
        let m = modulate(0.0, 48.0, true).unwrap();
        assert_eq!((m.duty, m.mode, m.overmod_active), (0.0, ModuleMode::Bypass, false));
    }

    #[test]
    fn linear_boundary_reaches_unit_duty() {
        let v_dc = 48.0;
        let amp = (v_dc / SQRT_2) * SQRT_2;
        let mut peak: f64 = 0.0;
        for n in 0..2000 {
            let m = modulate(amp * (2.0 * PI * n as f64 / 2000.0).cos(), v_dc, true).unwrap();
            assert!(!m.overmod_active);
            peak = peak.max(m.duty.abs());
        }
        assert_eq!(peak, 1.0);
    }

    #[test]
    fn clipped_sinusoid_fundamental() {
        // Fourier analysis of the clipped waveform against the closed form.
        let v_dc = 48.0;
        let dt = 1e-5;
        let mut out = Vec::new();
        let mut flagged = false;
        for n in 0..2000 {
            let v = 40.0 * SQRT_2 * (2.0 * PI * 50.0 * n as f64 * dt).cos();
            let m = modulate(v, v_dc, true).unwrap();
            flagged |= m.overmod_active;
            out.push(m.duty * v_dc);
        }
        assert!(flagged);
        let f = phasor_of_trace(&out, 0.0, dt, 50.0, 1.0).unwrap().norm();
        assert!(f > 33.94);
        assert!((f - clipped_fundamental(40.0 * SQRT_2, v_dc) / SQRT_2).abs() < 0.01);
        assert!((f - 37.24).abs() < 0.05, "{f}");
    }

    #[test]
    fn overmod_inverse_round_trips() {
        for target in [30.0, 48.0, 50.0, 55.0, 60.0, 61.0] {
            let k = overmod_command(target, 48.0).unwrap();
            assert!((clipped_fundamental(k, 48.0) - target).abs() < 1e-9, "{target}");
        }
        assert_eq!(overmod_command(62.0, 48.0), None);
    }

    #[test]
    fn pwm_period_average_equals_duty() {
        for &d in &[-0.93, -0.5, -0.01, 0.0, 0.25, 0.77, 1.0] {
            let n = 100;
            let avg: f64 = (0..n).map(|k| unipolar_switch(d, (k as f64 + 0.5) / n as f64)).sum::<f64>() / n as f64;
            assert!((avg - d).abs() <= 0.02, "duty {d} avg {avg}");
        }
    }

    #[test]
    fn saturation_without_overmod_is_not_overmod() {
        let m = modulate(60.0, 48.0, false).unwrap();
        assert_eq!(m.duty, 1.0);
        assert!(m.saturated && !m.overmod_active);
    }

    #[test]
    fn rejects_non_positive_dc() {
        assert!(modulate(1.0, 0.0, true).is_err());
    }
}
