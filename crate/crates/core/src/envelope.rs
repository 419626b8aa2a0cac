//! Coverage limits of a series module with dc-link voltage `V_dc`.
//!
//! All voltages are rms phase values. The largest module output is
//! `V_dc/√2` in the linear range and `V_dc` with over-modulation (the value
//! the limits below use; the true square-wave fundamental is higher still).

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI, SQRT_2};

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phasor::Complex;

/// Usable module rms voltage.
pub fn module_voltage_limit(v_dc: f64, overmod: bool) -> f64 {
    if overmod {
        v_dc
    } else {
        v_dc / SQRT_2
    }
}

/// Largest in-phase amplitude difference between the two sides.
pub fn max_inphase_diff(v_dc: f64, overmod: bool) -> f64 {
    module_voltage_limit(v_dc.max(0.0), overmod)
}

/// An angular limit; `unconstrained` when the module voltage is large enough
/// that the geometric bound does not apply (reported as 180°).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleLimit {
    pub deg: f64,
    pub unconstrained: bool,
}

fn asin_limit(x: f64, scale: f64) -> AngleLimit {
    if x > 1.0 {
        AngleLimit { deg: 180.0, unconstrained: true }
    } else {
        AngleLimit { deg: scale * x.max(0.0).asin().to_degrees(), unconstrained: false }
    }
}

fn check_positive(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, "must be positive and finite"))
    }
}

/// Largest phase shift that keeps both amplitudes equal.
pub fn parity_max_phase(v1: f64, v_dc: f64) -> Result<AngleLimit> {
    check_positive("v1", v1)?;
    Ok(asin_limit(v_dc.max(0.0) / (2.0 * SQRT_2 * v1), 2.0))
}

/// Largest phase shift at any amplitude (module voltage tangent to the
/// circle of `V₁`).
pub fn global_max_phase(v1: f64, v_dc: f64, overmod: bool) -> Result<AngleLimit> {
    check_positive("v1", v1)?;
    Ok(asin_limit(module_voltage_limit(v_dc.max(0.0), overmod) / v1, 1.0))
}

/// Outcome of a compensation feasibility test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub feasible: bool,
    /// Load power-factor angle, `atan(|Q|/|P|)`, degrees.
    pub load_angle_deg: f64,
    /// Module angle limit `asin(V_dc/(√2·V₁))`, degrees.
    pub limit_deg: f64,
    /// The module voltage exceeds `V₁`; every load passes.
    pub saturated: bool,
}

fn load_angle(p: f64, q: f64) -> Result<f64> {
    if p == 0.0 && q == 0.0 {
        return Err(Error::invalid("p, q", "at least one of P and Q must be non-zero"));
    }
    if !(p.is_finite() && q.is_finite()) {
        return Err(Error::invalid("p, q", "must be finite"));
    }
    Ok(q.abs().atan2(p.abs()))
}

/// Can the module cancel the reactive power of a load `P + jQ` fed at `V₁`?
pub fn reactive_comp_feasible(p: f64, q: f64, v1: f64, v_dc: f64) -> Result<Feasibility> {
    let phi = load_angle(p, q)?;
    let lim = global_max_phase(v1, v_dc, false)?;
    let feasible = lim.unconstrained || phi <= lim.deg.to_radians() + 1e-15;
    Ok(Feasibility { feasible, load_angle_deg: phi.to_degrees(), limit_deg: lim.deg, saturated: lim.unconstrained })
}

/// Can the module cancel the active power of a load `P + jQ` fed at `V₁`?
pub fn active_comp_feasible(p: f64, q: f64, v1: f64, v_dc: f64) -> Result<Feasibility> {
    let phi = load_angle(p, q)?;
    let lim = global_max_phase(v1, v_dc, false)?;
    let feasible = lim.unconstrained || phi + lim.deg.to_radians() >= FRAC_PI_2 - 1e-15;
    Ok(Feasibility { feasible, load_angle_deg: phi.to_degrees(), limit_deg: lim.deg, saturated: lim.unconstrained })
}

/// Largest amplitude difference reachable at phase difference `dtheta`,
/// principal (outer) root.
pub fn delta_v_limit(v2: f64, dtheta_deg: f64, v_m: f64) -> Result<f64> {
    let s = v2 * dtheta_deg.to_radians().sin();
    let disc = v_m * v_m - s * s;
    if disc < 0.0 {
        return Err(Error::Unreachable { dtheta_deg, v_m });
    }
    // 1 − cos written as 2·sin²(Δθ/2) so that Δθ = 0 returns `v_m` exactly.
    let half = (0.5 * dtheta_deg.to_radians()).sin();
    Ok((disc.sqrt() - 2.0 * v2 * half * half).abs())
}

/// Is `V₁ = (V₂ + ΔV)∠Δθ` within reach of a module of rms `v_m` placed
/// against `V₂∠0`?
pub fn two_grid_reachable(v2: f64, dtheta_deg: f64, dv: f64, v_m: f64) -> bool {
    let v1 = Complex::from_polar_deg(v2 + dv, dtheta_deg);
    (v1 - Complex::new(v2, 0.0)).norm() <= v_m
}

/// Power drawn from the `V₁` side of a lossless line `jX` with `V₂` at
/// angle `theta` relative to `V₁`.
pub fn uncontrolled_power(v1: f64, v2: f64, theta_deg: f64, x_line: f64) -> Result<Complex> {
    check_positive("x_line", x_line)?;
    let th = theta_deg.to_radians();
    Ok(Complex::new(-v1 * v2 * th.sin() / x_line, (v1 * v1 - v1 * v2 * th.cos()) / x_line))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Complex,
    pub radius: f64,
}

/// Reachable apparent power with a module of up to `v_m_max` rms.
///
/// Unlike the textbook form this needs `v2` for the centre; the radius is
/// `V₁·V_m/X`.
pub fn regulation_circle(v1: f64, v2: f64, v_m_max: f64, x_line: f64, theta_deg: f64) -> Result<Circle> {
    let center = uncontrolled_power(v1, v2, theta_deg, x_line)?;
    Ok(Circle { center, radius: v1 * v_m_max.max(0.0) / x_line })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    ReactiveComp,
    ActiveComp,
    TwoGridLimits,
    Regulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeQuery {
    pub v1_rms: f64,
    pub v2_rms: Option<f64>,
    pub v_dc: f64,
    pub overmod: bool,
    pub x_line: Option<f64>,
    pub theta_deg: f64,
}

impl EnvelopeQuery {
    pub fn new(v1_rms: f64, v_dc: f64) -> Self {
        EnvelopeQuery { v1_rms, v2_rms: None, v_dc, overmod: false, x_line: None, theta_deg: 0.0 }
    }

    pub fn v2(&self) -> f64 {
        self.v2_rms.unwrap_or(self.v1_rms)
    }

    pub fn v_m(&self) -> f64 {
        module_voltage_limit(self.v_dc, self.overmod)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionBoundary {
    pub kind: RegionKind,
    pub x_label: &'static str,
    pub y_label: &'static str,
    pub points: Vec<(f64, f64)>,
    /// The last point joins back to the first.
    pub closed: bool,
}

/// Sample the boundary of a region with `n` points.
///
/// - `ReactiveComp`, `ActiveComp`: the two rays (unit apparent power length)
///   bounding the feasible power-factor wedge, in per-unit P/Q; open.
/// - `TwoGridLimits`: ΔV (V) against Δθ (deg), the circle of reach around
///   `V₂`; closed.
/// - `Regulation`: P/Q circle in VA; closed.
pub fn sample_region(kind: RegionKind, q: &EnvelopeQuery, n: usize) -> Result<RegionBoundary> {
    if n < 16 {
        return Err(Error::invalid("n", "need at least 16 points"));
    }
    check_positive("v1_rms", q.v1_rms)?;
    if !(q.v_dc >= 0.0) {
        return Err(Error::invalid("v_dc", "must be non-negative"));
    }
    let ray = |angle: f64| -> Vec<(f64, f64)> {
        (0..n)
            .map(|k| {
                let s = -1.0 + 2.0 * k as f64 / (n - 1) as f64;
                (s.abs() * angle.cos(), s * angle.sin())
            })
            .collect()
    };
    let around = |center: Complex, r: f64| -> Vec<Complex> {
        (0..n).map(|k| center + Complex::from_polar(r, 2.0 * PI * k as f64 / n as f64)).collect()
    };
    let (points, closed, x_label, y_label) = match kind {
        RegionKind::ReactiveComp | RegionKind::ActiveComp => {
            let g = global_max_phase(q.v1_rms, q.v_dc, false)?;
            if g.unconstrained {
                return Err(Error::invalid("v_dc", "module voltage exceeds V1; the region is the whole plane"));
            }
            let g = g.deg.to_radians();
            let angle = if kind == RegionKind::ReactiveComp { g } else { FRAC_PI_2 - g };
            (ray(angle), false, "p_pu", "q_pu")
        }
        RegionKind::TwoGridLimits => {
            let v2 = q.v2();
            check_positive("v2_rms", v2)?;
            if q.v_m() >= v2 {
                return Err(Error::invalid("v_dc", "module voltage reaches V2; the region contains the origin"));
            }
            let pts =
                around(Complex::new(v2, 0.0), q.v_m()).into_iter().map(|v| (v.arg_deg(), v.norm() - v2)).collect();
            (pts, true, "dtheta_deg", "dv_v")
        }
        RegionKind::Regulation => {
            let x = q.x_line.ok_or_else(|| Error::invalid("x_line", "required for the regulation region"))?;
            let c = regulation_circle(q.v1_rms, q.v2(), q.v_m(), x, q.theta_deg)?;
            let pts = around(c.center, c.radius).into_iter().map(|s| (s.re, s.im)).collect();
            (pts, true, "p_va", "q_var")
        }
    };
    Ok(RegionBoundary { kind, x_label, y_label, points, closed })
}
