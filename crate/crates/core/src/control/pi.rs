use crate::error::{Error, Result};

/// Parallel PI with output clamping and integrator anti-windup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiController {
    pub kp: f64,
    pub ki: f64,
    pub integrator: f64,
    pub out_min: f64,
    pub out_max: f64,
}

impl PiController {
    pub fn new(kp: f64, ki: f64, out_min: f64, out_max: f64) -> Result<Self> {
        if !(kp >= 0.0 && ki >= 0.0) {
            return Err(Error::invalid("pi", "gains must be non-negative"));
        }
        if !(out_min <= out_max) {
            return Err(Error::invalid("pi", "out_min must not exceed out_max"));
        }
        Ok(PiController { kp, ki, integrator: 0.0, out_min, out_max })
    }

    /// Symmetric limits `±limit`.
    pub fn symmetric(kp: f64, ki: f64, limit: f64) -> Result<Self> {
        Self::new(kp, ki, -limit, limit)
    }

    /// Advance by `dt` with error `err` and return the clamped output.
    ///
    /// The integrator is held so that `kp·err + integrator` stays within the
    /// output bounds.
    pub fn step(&mut self, err: f64, dt: f64) -> f64 {
        let p = self.kp * err;
        let hi = (self.out_max - p).max(0.0).min(self.out_max.max(0.0));
        let lo = (self.out_min - p).min(0.0).max(self.out_min.min(0.0));
        self.integrator = (self.integrator + self.ki * err * dt).clamp(lo, hi);
        (p + self.integrator).clamp(self.out_min, self.out_max)
    }

    /// Output for `err` without advancing the state.
    pub fn peek(&self, err: f64) -> f64 {
        (self.kp * err + self.integrator).clamp(self.out_min, self.out_max)
    }

    pub fn saturated(&self, err: f64) -> bool {
        let raw = self.kp * err + self.integrator;
        raw > self.out_max || raw < self.out_min
    }

    pub fn reset(&mut self) {
        self.integrator = 0.0;
    }

    pub fn set_limits(&mut self, out_min: f64, out_max: f64) {
        self.out_min = out_min;
        self.out_max = out_max;
        self.integrator = self.integrator.clamp(out_min.min(0.0), out_max.max(0.0));
    }
}
