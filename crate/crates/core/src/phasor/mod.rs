//! Complex phasor algebra, three-phase sets and the transforms used by the
//! controllers.
//!
//! Phasors are rms-valued and use the cosine reference: `X = |X|∠φ` stands for
//! the waveform `√2·|X|·cos(ωt + φ)`.

mod sogi;
mod transforms;

use core::f64::consts::PI;
use core::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

pub use sogi::{sogi_step, SogiState, DEFAULT_SOGI_GAIN};
pub use transforms::{
    abc_to_alpha_beta, abc_to_dq, alpha_beta_to_abc, dq_to_alpha_beta, inverse_park, park, sequence_compose,
    sequence_decompose, AlphaBeta,
};

/// A complex number. Used for rms phasors, impedances and complex power.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

/// rms phasor (volts or amps).
pub type Phasor = Complex;

impl Complex {
    pub const ZERO: Complex = Complex { re: 0.0, im: 0.0 };
    pub const ONE: Complex = Complex { re: 1.0, im: 0.0 };
    pub const J: Complex = Complex { re: 0.0, im: 1.0 };

    pub const fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }

    pub fn from_polar(magnitude: f64, angle_rad: f64) -> Self {
        Complex { re: magnitude * angle_rad.cos(), im: magnitude * angle_rad.sin() }
    }

    pub fn from_polar_deg(magnitude: f64, angle_deg: f64) -> Self {
        Self::from_polar(magnitude, angle_deg.to_radians())
    }

    pub fn norm(self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    /// Angle in (−π, π].
    pub fn arg(self) -> f64 {
        canonical_angle(self.im.atan2(self.re))
    }

    pub fn arg_deg(self) -> f64 {
        self.arg().to_degrees()
    }

    pub fn conj(self) -> Self {
        Complex { re: self.re, im: -self.im }
    }

    pub fn scale(self, k: f64) -> Self {
        Complex { re: self.re * k, im: self.im * k }
    }

    /// Multiply by `e^{jθ}`.
    pub fn rotate(self, angle_rad: f64) -> Self {
        self * Complex::from_polar(1.0, angle_rad)
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    /// Instantaneous value of the waveform this rms phasor stands for at
    /// electrical angle `wt`.
    pub fn instantaneous(self, wt: f64) -> f64 {
        core::f64::consts::SQRT_2 * (self.re * wt.cos() - self.im * wt.sin())
    }

    /// Relative distance `|self − other| / |other|`.
    pub fn rel_diff(self, other: Complex) -> f64 {
        (self - other).norm() / other.norm()
    }
}

/// Map any angle to (−π, π].
pub fn canonical_angle(angle: f64) -> f64 {
    let mut a = angle % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Signed smallest difference `a − b` in degrees, in (−180, 180].
pub fn angle_diff_deg(a_deg: f64, b_deg: f64) -> f64 {
    canonical_angle((a_deg - b_deg).to_radians()).to_degrees()
}

impl Add for Complex {
    type Output = Complex;
    fn add(self, o: Complex) -> Complex {
        Complex::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for Complex {
    type Output = Complex;
    fn sub(self, o: Complex) -> Complex {
        Complex::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for Complex {
    type Output = Complex;
    fn mul(self, o: Complex) -> Complex {
        Complex::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
}

impl Mul<f64> for Complex {
    type Output = Complex;
    fn mul(self, k: f64) -> Complex {
        self.scale(k)
    }
}

impl Div for Complex {
    type Output = Complex;
    fn div(self, o: Complex) -> Complex {
        let d = o.norm_sqr();
        Complex::new((self.re * o.re + self.im * o.im) / d, (self.im * o.re - self.re * o.im) / d)
    }
}

impl Div<f64> for Complex {
    type Output = Complex;
    fn div(self, k: f64) -> Complex {
        Complex::new(self.re / k, self.im / k)
    }
}

impl Neg for Complex {
    type Output = Complex;
    fn neg(self) -> Complex {
        Complex::new(-self.re, -self.im)
    }
}

impl AddAssign for Complex {
    fn add_assign(&mut self, o: Complex) {
        self.re += o.re;
        self.im += o.im;
    }
}

impl SubAssign for Complex {
    fn sub_assign(&mut self, o: Complex) {
        self.re -= o.re;
        self.im -= o.im;
    }
}

impl core::iter::Sum for Complex {
    fn sum<I: Iterator<Item = Complex>>(iter: I) -> Complex {
        iter.fold(Complex::ZERO, |acc, x| acc + x)
    }
}

/// Per-phase phasors of a three-phase quantity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ThreePhaseSet {
    pub a: Phasor,
    pub b: Phasor,
    pub c: Phasor,
}

impl ThreePhaseSet {
    pub fn new(a: Phasor, b: Phasor, c: Phasor) -> Self {
        ThreePhaseSet { a, b, c }
    }

    /// Balanced positive-sequence set with phase a at `angle_deg`.
    pub fn balanced(rms: f64, angle_deg: f64) -> Self {
        ThreePhaseSet {
            a: Phasor::from_polar_deg(rms, angle_deg),
            b: Phasor::from_polar_deg(rms, angle_deg - 120.0),
            c: Phasor::from_polar_deg(rms, angle_deg + 120.0),
        }
    }

    pub fn from_array(p: [Phasor; 3]) -> Self {
        ThreePhaseSet { a: p[0], b: p[1], c: p[2] }
    }

    pub fn to_array(self) -> [Phasor; 3] {
        [self.a, self.b, self.c]
    }
}

/// Symmetric components of a three-phase set.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SequenceSet {
    pub pos: Phasor,
    pub neg: Phasor,
    pub zero: Phasor,
}

/// Instantaneous direct/quadrature pair.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DqSample {
    pub d: f64,
    pub q: f64,
}

impl DqSample {
    pub const ZERO: DqSample = DqSample { d: 0.0, q: 0.0 };

    pub fn new(d: f64, q: f64) -> Self {
        DqSample { d, q }
    }

    pub fn norm(self) -> f64 {
        self.d.hypot(self.q)
    }

    pub fn as_complex(self) -> Complex {
        Complex::new(self.d, self.q)
    }

    pub fn from_complex(c: Complex) -> Self {
        DqSample { d: c.re, q: c.im }
    }

    /// Peak-valued dq image of an rms phasor measured against a frame that
    /// sits at `frame_angle_rad` (the phasor angle of the synchronising voltage).
    pub fn from_phasor(p: Phasor, frame_angle_rad: f64) -> Self {
        DqSample::from_complex(p.rotate(-frame_angle_rad).scale(core::f64::consts::SQRT_2))
    }
}
