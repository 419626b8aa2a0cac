//! Single-frequency Fourier correlation over whole cycles, harmonic spectra and
//! total harmonic distortion of sampled waveforms.
//!
//! Samples are `x[k]` taken at `t0 + k·dt`. All analysis uses the trailing
//! `window` cycles of the record.

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::phasor::Phasor;

/// Number of samples covering `cycles` periods of `f`.
pub fn samples_per_window(dt: f64, f: f64, cycles: f64) -> Result<usize> {
    if !(dt > 0.0) || !(f > 0.0) || !(cycles > 0.0) {
        return Err(Error::invalid("window", "dt, f and cycles must be positive"));
    }
    Ok((cycles / (f * dt)).round() as usize)
}

/// rms phasor of the component at `f` over the last `cycles` periods of `f`.
pub fn phasor_of_trace(samples: &[f64], t0: f64, dt: f64, f: f64, cycles: f64) -> Result<Phasor> {
    let n = samples_per_window(dt, f, cycles)?;
    if n < 2 || n > samples.len() {
        return Err(Error::InsufficientSamples { needed: n.max(2), got: samples.len() });
    }
    let start = samples.len() - n;
    Ok(correlate(&samples[start..], t0 + start as f64 * dt, dt, f))
}

/// rms phasor at `f` of an exact slice (no window selection).
pub fn correlate(samples: &[f64], t0: f64, dt: f64, f: f64) -> Phasor {
    let w = 2.0 * PI * f;
    let (mut re, mut im) = (0.0, 0.0);
    for (k, &x) in samples.iter().enumerate() {
        let (s, c) = (w * (t0 + k as f64 * dt)).sin_cos();
        re += x * c;
        im -= x * s;
    }
    let scale = SQRT_2 / samples.len() as f64;
    Phasor::new(re * scale, im * scale)
}

/// Gain of a moving-average of length `aperture` at frequency `f`.
/// Divide a phasor taken from window-averaged samples by this to undo the
/// averaging.
pub fn aperture_gain(f: f64, aperture: f64) -> f64 {
    let x = PI * f * aperture;
    if x.abs() < 1e-12 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Harmonic content of a waveform whose fundamental is `f1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub f1: f64,
    /// Mean value over the window.
    pub dc: f64,
    /// `harmonics[h-1]` is the rms phasor of order `h`.
    pub harmonics: Vec<Phasor>,
    /// Total rms over the window.
    pub rms: f64,
}

impl Spectrum {
    pub fn fundamental(&self) -> Phasor {
        self.harmonics[0]
    }

    pub fn order(&self, h: usize) -> Option<Phasor> {
        h.checked_sub(1).and_then(|i| self.harmonics.get(i)).copied()
    }

    /// `rms of everything except dc and fundamental / fundamental`.
    pub fn thd(&self) -> f64 {
        let f = self.fundamental().norm();
        let resid = (self.rms * self.rms - self.dc * self.dc - f * f).max(0.0);
        if f > 0.0 {
            resid.sqrt() / f
        } else {
            0.0
        }
    }

    /// `√(Σ_{h=2}^{max_order} |X_h|²) / |X_1|`.
    pub fn thd_orders(&self, max_order: usize) -> f64 {
        let f = self.fundamental().norm();
        let sum: f64 = self.harmonics.iter().skip(1).take(max_order.saturating_sub(1)).map(|p| p.norm_sqr()).sum();
        if f > 0.0 {
            sum.sqrt() / f
        } else {
            0.0
        }
    }
}

/// Spectrum over the last `cycles` fundamental periods, orders `1..=max_order`.
/// `aperture` undoes window averaging of the samples (pass 0 for point samples).
pub fn spectrum(
    samples: &[f64],
    t0: f64,
    dt: f64,
    f1: f64,
    cycles: f64,
    max_order: usize,
    aperture: f64,
) -> Result<Spectrum> {
    let n = samples_per_window(dt, f1, cycles)?;
    if n < 2 || n > samples.len() {
        return Err(Error::InsufficientSamples { needed: n.max(2), got: samples.len() });
    }
    let start = samples.len() - n;
    let win = &samples[start..];
    let ts = t0 + start as f64 * dt;
    let harmonics = (1..=max_order.max(1))
        .map(|h| {
            let fh = f1 * h as f64;
            correlate(win, ts, dt, fh) / aperture_gain(fh, aperture)
        })
        .collect();
    let dc = win.iter().sum::<f64>() / n as f64;
    let rms = (win.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt();
    Ok(Spectrum { f1, dc, harmonics, rms })
}

/// Residual-definition THD over the last `cycles` periods.
pub fn thd(samples: &[f64], t0: f64, dt: f64, f1: f64, cycles: f64) -> Result<f64> {
    Ok(spectrum(samples, t0, dt, f1, cycles, 1, 0.0)?.thd())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasor::Phasor;
    use std::vec::Vec;

    const DT: f64 = 1e-5;

    fn sample(n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..n).map(|k| f(k as f64 * DT)).collect()
    }

    #[test]
    fn pure_sinusoid_phasor() {
        let x = sample(4000, |t| 230.0 * SQRT_2 * (2.0 * PI * 50.0 * t).cos());
        let p = phasor_of_trace(&x, 0.0, DT, 50.0, 1.0).unwrap();
        assert!((p.norm() / 230.0 - 1.0).abs() < 1e-3);
        assert!(p.arg_deg().abs() < 0.1);
    }

    #[test]
    fn dc_only_has_no_fundamental() {
        let x = sample(4000, |_| 17.0);
        let p = phasor_of_trace(&x, 0.0, DT, 50.0, 2.0).unwrap();
        assert!(p.norm() < 1e-9);
    }

    #[test]
    fn third_harmonic_is_orthogonal() {
        let i1 = Phasor::from_polar_deg(10.0, 30.0);
        let i3 = Phasor::from_polar_deg(1.0, 0.0);
        let w = 2.0 * PI * 50.0;
        let x = sample(6000, |t| i1.instantaneous(w * t) + i3.instantaneous(3.0 * w * t));
        let p = phasor_of_trace(&x, 0.0, DT, 50.0, 1.0).unwrap();
        assert!(p.rel_diff(i1) < 0.005);
    }

    #[test]
    fn short_record_is_rejected() {
        let x = sample(100, |t| t);
        assert_eq!(phasor_of_trace(&x, 0.0, DT, 50.0, 1.0), Err(Error::InsufficientSamples { needed: 2000, got: 100 }));
    }

    #[test]
    fn thd_of_pure_sinusoid_is_zero() {
        let x = sample(4000, |t| 100.0 * (2.0 * PI * 50.0 * t + 0.3).cos());
        assert!(thd(&x, 0.0, DT, 50.0, 2.0).unwrap() < 1e-3);
    }

    #[test]
    fn thd_of_table_harmonics() {
        // √(0.1² + 0.05²) by definition.
        let w = 2.0 * PI * 50.0;
        let x = sample(4000, |t| (w * t).cos() + 0.1 * (3.0 * w * t - 0.4).cos() + 0.05 * (5.0 * w * t + 0.6).cos());
        let expected = (0.1f64.powi(2) + 0.05f64.powi(2)).sqrt();
        assert!((thd(&x, 0.0, DT, 50.0, 2.0).unwrap() - expected).abs() < 0.002);
        let s = spectrum(&x, 0.0, DT, 50.0, 2.0, 40, 0.0).unwrap();
        assert!((s.thd_orders(40) - expected).abs() < 0.002);
        assert!((s.order(3).unwrap().norm() / s.fundamental().norm() - 0.1).abs() < 1e-6);
    }

    #[test]
    fn thd_of_square_wave() {
        // Fourier series oracle: √(π²/8 − 1) = 0.4834 over all odd orders,
        // 0.4703 when truncated at order 40.
        let x = sample(4000, |t| if (2.0 * PI * 50.0 * t + 0.1).cos() >= 0.0 { 1.0 } else { -1.0 });
        let full = (PI * PI / 8.0 - 1.0).sqrt();
        assert!((thd(&x, 0.0, DT, 50.0, 2.0).unwrap() - full).abs() < 0.01);
        let s = spectrum(&x, 0.0, DT, 50.0, 2.0, 40, 0.0).unwrap();
        let truncated = ((3..=39).step_by(2).map(|k| 1.0 / (k * k) as f64).sum::<f64>()).sqrt();
        assert!((s.thd_orders(40) - truncated).abs() < 0.01);
    }

    #[test]
    fn aperture_correction_restores_amplitude() {
        // Window means over 100 µs of a 2 kHz tone.
        let ap = 1e-4;
        let w = 2.0 * PI * 2000.0;
        let means: Vec<f64> = (0..400)
            .map(|k| {
                let a = k as f64 * ap;
                ((w * (a + ap)).sin() - (w * a).sin()) / (w * ap)
            })
            .collect();
        // Samples are timestamped at window midpoints.
        let p = correlate(&means, ap / 2.0, ap, 2000.0) / aperture_gain(2000.0, ap);
        assert!((p.norm() - 1.0 / SQRT_2).abs() < 1e-6);
    }
}
