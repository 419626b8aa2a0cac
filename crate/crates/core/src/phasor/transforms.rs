//! Fortescue, Clarke and Park transforms.
//!
//! Clarke is amplitude-invariant and Park uses `d + jq = (α + jβ)·e^{−jθ}`:
//! a balanced set `x_k = A·cos(θ − k·120°)` maps to `d = A, q = 0`, and a
//! waveform lagging the frame by 90° maps to `q = −A`. Everything in the crate
//! uses this one convention.

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use super::{Complex, DqSample, SequenceSet, ThreePhaseSet};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// `α = 1∠120°`.
fn alpha() -> Complex {
    Complex::new(-0.5, SQRT_3 / 2.0)
}

/// Symmetric components of a phasor set (phase a reference).
pub fn sequence_decompose(v: ThreePhaseSet) -> SequenceSet {
    let a = alpha();
    let a2 = a * a;
    SequenceSet {
        pos: (v.a + a * v.b + a2 * v.c) / 3.0,
        neg: (v.a + a2 * v.b + a * v.c) / 3.0,
        zero: (v.a + v.b + v.c) / 3.0,
    }
}

/// Inverse Fortescue transform.
pub fn sequence_compose(s: SequenceSet) -> ThreePhaseSet {
    let a = alpha();
    let a2 = a * a;
    ThreePhaseSet { a: s.zero + s.pos + s.neg, b: s.zero + a2 * s.pos + a * s.neg, c: s.zero + a * s.pos + a2 * s.neg }
}

/// Stationary-frame pair plus zero sequence.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AlphaBeta {
    pub alpha: f64,
    pub beta: f64,
    pub zero: f64,
}

pub fn abc_to_alpha_beta(abc: [f64; 3]) -> AlphaBeta {
    let [a, b, c] = abc;
    AlphaBeta { alpha: (2.0 * a - b - c) / 3.0, beta: (b - c) / SQRT_3, zero: (a + b + c) / 3.0 }
}

pub fn alpha_beta_to_abc(ab: AlphaBeta) -> [f64; 3] {
    let half_sqrt3 = SQRT_3 / 2.0;
    [
        ab.alpha + ab.zero,
        -0.5 * ab.alpha + half_sqrt3 * ab.beta + ab.zero,
        -0.5 * ab.alpha - half_sqrt3 * ab.beta + ab.zero,
    ]
}

/// Rotate a stationary pair into the frame at `theta`.
pub fn park(alpha: f64, beta: f64, theta: f64) -> DqSample {
    let (s, c) = theta.sin_cos();
    DqSample { d: alpha * c + beta * s, q: -alpha * s + beta * c }
}

/// Rotate a dq pair back to the stationary frame.
pub fn inverse_park(dq: DqSample, theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (dq.d * c - dq.q * s, dq.d * s + dq.q * c)
}

pub fn dq_to_alpha_beta(dq: DqSample, theta: f64) -> AlphaBeta {
    let (alpha, beta) = inverse_park(dq, theta);
    AlphaBeta { alpha, beta, zero: 0.0 }
}

/// Amplitude-invariant Clarke followed by Park. The zero sequence is dropped.
pub fn abc_to_dq(abc: [f64; 3], theta: f64) -> DqSample {
    let ab = abc_to_alpha_beta(abc);
    park(ab.alpha, ab.beta, theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasor::{Phasor, ThreePhaseSet};
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn balanced_inst(peak: f64, theta: f64) -> [f64; 3] {
        [peak * theta.cos(), peak * (theta - 2.0 * PI / 3.0).cos(), peak * (theta + 2.0 * PI / 3.0).cos()]
    }

    #[test]
    fn balanced_set_has_only_positive_sequence() {
        let s = sequence_decompose(ThreePhaseSet::balanced(230.0, 0.0));
        assert!((s.pos - Phasor::new(230.0, 0.0)).norm() < 1e-12);
        assert!(s.neg.norm() < 1e-12);
        assert!(s.zero.norm() < 1e-12);
    }

    #[test]
    fn unbalanced_case_positive_sequence() {
        // (245 + 230 + 200) / 3 by hand: magnitudes add because α·b and α²·c
        // both land on the real axis.
        let v = ThreePhaseSet::new(
            Phasor::from_polar_deg(245.0, 0.0),
            Phasor::from_polar_deg(230.0, -120.0),
            Phasor::from_polar_deg(200.0, 120.0),
        );
        let s = sequence_decompose(v);
        assert!((s.pos.norm() - 225.0).abs() < 1e-9);
        assert!(s.pos.arg_deg().abs() < 1e-9);
        // Hand-checked: neg = zero* = 10 ± j8.660 → 13.2288 V.
        assert!((s.neg.norm() - 13.228_756_555_322_95).abs() < 1e-9);
        assert!((s.zero.norm() - 13.228_756_555_322_95).abs() < 1e-9);
    }

    #[test]
    fn aligned_balanced_set_maps_to_d_axis() {
        let theta = 0.7;
        let dq = abc_to_dq(balanced_inst(325.0, theta), theta);
        assert!((dq.d - 325.0).abs() < 1e-9);
        assert!(dq.q.abs() < 1e-9);
    }

    #[test]
    fn zero_input_maps_to_zero() {
        assert_eq!(abc_to_dq([0.0; 3], 1.234), DqSample::ZERO);
    }

    #[test]
    fn frame_ahead_by_quarter_turn_gives_negative_q() {
        // Symbolic oracle: d = A·cos(θ − θ'), q = A·sin(θ − θ') with θ' = θ + 90°.
        let theta = 0.3;
        let dq = abc_to_dq(balanced_inst(325.0, theta), theta + PI / 2.0);
        assert!(dq.d.abs() < 1e-9);
        assert!((dq.q + 325.0).abs() < 1e-9);
    }

    #[test]
    fn clarke_round_trip() {
        let abc = [1.0, -2.5, 4.0];
        let back = alpha_beta_to_abc(abc_to_alpha_beta(abc));
        for k in 0..3 {
            assert!((back[k] - abc[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn locked_balanced_set_gives_constant_dq() {
        let w = 2.0 * PI * 50.0;
        let mut first = None;
        for n in 0..2000 {
            let th = w * n as f64 * 1e-5 + 0.2;
            let dq = abc_to_dq(balanced_inst(100.0, th - 0.4), th);
            let f = *first.get_or_insert(dq);
            assert!((dq.d - f.d).abs() < 1e-9 && (dq.q - f.q).abs() < 1e-9);
        }
    }

    fn arb_phasor() -> impl Strategy<Value = Phasor> {
        (-500.0..500.0f64, -500.0..500.0f64).prop_map(|(re, im)| Phasor::new(re, im))
    }

    proptest! {
        #[test]
        fn fortescue_round_trip(a in arb_phasor(), b in arb_phasor(), c in arb_phasor()) {
            let v = ThreePhaseSet::new(a, b, c);
            let back = sequence_compose(sequence_decompose(v));
            let scale = a.norm().max(b.norm()).max(c.norm()).max(1.0);
            prop_assert!((back.a - a).norm() <= 1e-9 * scale);
            prop_assert!((back.b - b).norm() <= 1e-9 * scale);
            prop_assert!((back.c - c).norm() <= 1e-9 * scale);
        }

        #[test]
        fn park_preserves_norm(al in -400.0..400.0f64, be in -400.0..400.0f64, th in -10.0..10.0f64) {
            let dq = park(al, be, th);
            prop_assert!((dq.norm() - al.hypot(be)).abs() < 1e-9);
        }
    }
}
