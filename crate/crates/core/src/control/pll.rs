use core::f64::consts::PI;

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use super::{MovingAverage, PiController};
use crate::error::Result;
use crate::phasor::{canonical_angle, Complex, SogiState};

/// Single-phase PLL: SOGI orthogonal pair, `atan2` phase detector and a PI
/// frequency tracker.
///
/// With a moving-average detector the phase error is instead the angle of the
/// one-cycle mean of `2·v·e^{−jθ}`, which ignores every integer harmonic of
/// the nominal frequency. It delays the error by half a cycle, so keep the
/// bandwidth to a few hertz.
#[derive(Debug, Clone, PartialEq)]
pub struct Pll {
    pub sogi: SogiState,
    /// Estimated phase angle of the input (cosine reference), wrapped.
    pub theta: f64,
    pub omega: f64,
    pub omega_nominal: f64,
    pub pi: PiController,
    maf: Option<MovingAverage<Complex>>,
}

impl Pll {
    /// Loop tuned for natural frequency `2π·bandwidth_hz` and damping 0.707.
    pub fn new(omega_nominal: f64, sogi_k: f64, bandwidth_hz: f64) -> Result<Self> {
        let wn = 2.0 * PI * bandwidth_hz;
        let pi = PiController::symmetric(2.0 * 0.707 * wn, wn * wn, 0.5 * omega_nominal)?;
        Ok(Pll {
            sogi: SogiState::new(omega_nominal, sogi_k),
            theta: 0.0,
            omega: omega_nominal,
            omega_nominal,
            pi,
            maf: None,
        })
    }

    /// PLL with the moving-average phase detector over `samples_per_cycle`
    /// steps.
    pub fn with_moving_average(
        omega_nominal: f64,
        sogi_k: f64,
        bandwidth_hz: f64,
        samples_per_cycle: usize,
    ) -> Result<Self> {
        let mut pll = Self::new(omega_nominal, sogi_k, bandwidth_hz)?;
        pll.maf = Some(MovingAverage::new(samples_per_cycle));
        Ok(pll)
    }

    /// Start already locked onto `peak·cos(angle)`.
    pub fn warm_start(&mut self, peak: f64, angle: f64) {
        self.sogi = SogiState::locked(self.omega_nominal, self.sogi.k_gain, peak, angle);
        self.theta = canonical_angle(angle);
        self.omega = self.omega_nominal;
        self.pi.reset();
        // The detector then free-runs for a cycle rather than mixing a
        // synthetic window with the real waveform.
        if let Some(m) = &mut self.maf {
            *m = MovingAverage::new(m.len());
        }
    }

    /// The SOGI runs at the estimated frequency so its quadrature output keeps
    /// unit gain off nominal.
    pub fn step(&mut self, v: f64, dt: f64) -> Result<f64> {
        self.sogi.omega = self.omega;
        self.sogi.step(v, dt)?;
        self.theta = canonical_angle(self.theta + self.omega * dt);
        let err = match &mut self.maf {
            Some(m) => {
                let mean = m.push(Complex::from_polar(2.0 * v, -self.theta));
                if m.is_full() && mean.norm() > 1e-9 {
                    mean.im.atan2(mean.re)
                } else {
                    0.0
                }
            }
            None if self.sogi.amplitude() > 1e-9 => canonical_angle(self.sogi.angle() - self.theta),
            None => 0.0,
        };
        self.omega = self.omega_nominal + self.pi.step(err, dt);
        Ok(self.theta)
    }

    /// Peak amplitude seen by the SOGI.
    pub fn amplitude(&self) -> f64 {
        self.sogi.amplitude()
    }
}
