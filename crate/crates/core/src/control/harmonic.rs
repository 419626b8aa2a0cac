//! Per-order harmonic blocking for one series module.
//!
//! Each order keeps one-cycle moving averages of `2·x·e^{−jhθ}` for the
//! driving voltage and the line current, which are the exact dq images of
//! that harmonic for any periodic signal. The module re-injects the measured
//! driving harmonic (so no harmonic current is pushed through the loop) and a
//! slow integrator trims what remains of the current.

use alloc::vec::Vec;

use super::MovingAverage;
use crate::phasor::Complex;

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicBlock {
    pub order: u32,
    pub enabled: bool,
    v_drive: MovingAverage<Complex>,
    current: MovingAverage<Complex>,
    /// Integrated correction, peak volts in the order-h frame.
    pub trim: Complex,
    /// Loop impedance at this order.
    pub z: Complex,
    /// Integral rate of the trim, rad/s.
    pub ki: f64,
    /// Samples since the block was enabled. The trim waits until the current
    /// window holds only samples taken with the feedforward applied.
    since_enable: usize,
}

impl HarmonicBlock {
    pub fn new(order: u32, samples_per_cycle: usize, z: Complex, ki: f64) -> Self {
        HarmonicBlock {
            order,
            enabled: false,
            v_drive: MovingAverage::new(samples_per_cycle),
            current: MovingAverage::new(samples_per_cycle),
            trim: Complex::ZERO,
            z,
            ki,
            since_enable: 0,
        }
    }

    fn rotor(&self, theta: f64) -> Complex {
        Complex::from_polar(1.0, -(self.order as f64) * theta)
    }

    /// Feed one driving-voltage sample taken at fundamental angle `theta`.
    pub fn observe_voltage(&mut self, v_drive: f64, theta: f64) {
        let r = self.rotor(theta);
        self.v_drive.push(r * (2.0 * v_drive));
    }

    /// dq (peak) of the measured harmonic current.
    pub fn current_dq(&self) -> Complex {
        self.current.mean()
    }

    pub fn voltage_dq(&self) -> Complex {
        self.v_drive.mean()
    }

    /// Update with a current sample and return the additive voltage command,
    /// evaluated at angle `theta_out`.
    pub fn step(&mut self, i_meas: f64, theta: f64, theta_out: f64, dt: f64) -> f64 {
        let r = self.rotor(theta);
        let i_h = self.current.push(r * (2.0 * i_meas));
        if !self.enabled || !self.current.is_full() || !self.v_drive.is_full() {
            self.trim = Complex::ZERO;
            self.since_enable = 0;
            return 0.0;
        }
        if self.since_enable >= self.current.len() {
            self.trim += self.z * i_h * (self.ki * dt);
        } else {
            self.since_enable += 1;
        }
        let v = self.v_drive.mean() + self.trim;
        (v * Complex::from_polar(1.0, self.order as f64 * theta_out)).re
    }
}

/// Sum of all enabled blocks.
pub fn harmonic_block_step(blocks: &mut [HarmonicBlock], i_meas: f64, theta: f64, theta_out: f64, dt: f64) -> f64 {
    blocks.iter_mut().map(|b| b.step(i_meas, theta, theta_out, dt)).sum()
}

pub fn enable_orders(blocks: &mut [HarmonicBlock], orders: &[u32]) {
    for b in blocks.iter_mut() {
        b.enabled = orders.contains(&b.order);
        if !b.enabled {
            b.trim = Complex::ZERO;
        }
    }
}

pub fn configured_orders(blocks: &[HarmonicBlock]) -> Vec<u32> {
    blocks.iter().map(|b| b.order).collect()
}
