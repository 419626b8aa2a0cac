//! Magnetic loss, transformer transfer and bandwidth, loss roll-up and
//! fault ratings.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Bertotti model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BertottiParams {
    /// Steinmetz constant.
    pub eta: f64,
    /// Peak flux density, T.
    pub b_m: f64,
    /// Lamination thickness, m.
    pub t_sheet: f64,
    /// Lamination resistivity, Ω·m.
    pub rho_lam: f64,
    /// Core volume, m³.
    pub volume: f64,
}

impl BertottiParams {
    /// η = 15, 0.27 mm sheet, 0.48 µΩ·m, 0.129 m³, with `b_m` = 1.5 T as a
    /// configurable default.
    pub fn grain_oriented() -> Self {
        BertottiParams { eta: 15.0, b_m: 1.5, t_sheet: 0.27e-3, rho_lam: 0.48e-6, volume: 0.129 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eta", self.eta),
            ("b_m", self.b_m),
            ("t_sheet", self.t_sheet),
            ("rho_lam", self.rho_lam),
            ("volume", self.volume),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be positive and finite"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagneticLoss {
    pub hysteresis: f64,
    pub eddy: f64,
    pub total: f64,
}

pub fn bertotti_loss(p: &BertottiParams, f: f64) -> Result<MagneticLoss> {
    p.validate()?;
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::invalid("f", "frequency must be positive"));
    }
    let b2 = p.b_m * p.b_m;
    let hysteresis = p.eta * b2 * f * p.volume;
    let eddy = PI * PI * p.t_sheet * p.t_sheet * b2 / (6.0 * p.rho_lam) * f * f * p.volume;
    Ok(MagneticLoss { hysteresis, eddy, total: hysteresis + eddy })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferGain {
    /// `1 − P_magl/P_g`, floored at zero.
    pub h: f64,
    /// `|P_g − P_magl| / P_g` as written, without the floor.
    pub h_raw: f64,
    /// The core loss exceeds the injected power.
    pub clamped: bool,
}

/// Share of the injected power `p_inject` that survives the core loss.
pub fn transformer_transfer(p_inject: f64, params: &BertottiParams, f: f64) -> Result<TransferGain> {
    if !(p_inject > 0.0) {
        return Err(Error::invalid("p_inject", "must be positive"));
    }
    let loss = bertotti_loss(params, f)?.total;
    let ratio = (p_inject - loss) / p_inject;
    Ok(TransferGain { h: ratio.max(0.0), h_raw: ratio.abs(), clamped: loss > p_inject })
}

/// Which gain level counts as the 3 dB point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThreeDb {
    /// `H = 0.5`, reading `H` as a power ratio.
    #[default]
    Power,
    /// `H = 1/√2`, reading `H` as an amplitude ratio.
    Amplitude,
}

impl ThreeDb {
    pub fn level(self) -> f64 {
        match self {
            ThreeDb::Power => 0.5,
            ThreeDb::Amplitude => core::f64::consts::FRAC_1_SQRT_2,
        }
    }
}

/// Frequency where the transfer drops to the 3 dB level, by bisection on
/// `(0, f_max]`.
pub fn bandwidth_3db(p_inject: f64, params: &BertottiParams, reading: ThreeDb, f_max: f64) -> Result<f64> {
    let target = reading.level();
    let h = |f: f64| transformer_transfer(p_inject, params, f).map(|t| t.h);
    if h(f_max)? > target {
        return Err(Error::NoCrossing { f_max });
    }
    let (mut lo, mut hi) = (0.0, f_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= 0.0 || h(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * f_max {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossColumn {
    DirectInjection,
    Transformer,
}

/// How one stage's loss is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StageModel {
    /// A figure taken from a device-level model.
    Reference { watts: f64 },
    /// `I²·r_inductor`.
    InductorI2r,
    /// `I²·r_transformer`.
    TransformerI2r,
    /// `I²·r_on + f_sw·(e_on + e_off)·I/i_ref`.
    Semiconductor { r_on: f64, e_on: f64, e_off: f64, i_ref: f64, f_sw: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossStage {
    pub name: String,
    pub column: LossColumn,
    pub model: StageModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossLineup {
    pub i_rms: f64,
    /// Module output voltage at this operating point (informational).
    pub v_inject: f64,
    pub r_inductor: f64,
    pub r_transformer: f64,
    pub stages: Vec<LossStage>,
}

impl LossLineup {
    /// 100 A, 33 V, 5 mΩ filter, 20 mΩ injection transformer, with the
    /// device-level stage figures as reference inputs.
    pub fn reference() -> Self {
        let stage = |name: &str, column, model| LossStage { name: name.into(), column, model };
        use LossColumn::*;
        LossLineup {
            i_rms: 100.0,
            v_inject: 33.0,
            r_inductor: 5e-3,
            r_transformer: 20e-3,
            stages: alloc::vec![
                stage("floating module", DirectInjection, StageModel::Reference { watts: 44.3 }),
                stage("filter inductor", DirectInjection, StageModel::InductorI2r),
                stage("active front end", DirectInjection, StageModel::Reference { watts: 48.3 }),
                stage("dc/dc converter", DirectInjection, StageModel::Reference { watts: 67.0 }),
                stage("shunt converter", Transformer, StageModel::Reference { watts: 48.3 }),
                stage("series converter", Transformer, StageModel::Reference { watts: 48.3 }),
                stage("injection transformer", Transformer, StageModel::Reference { watts: 150.3 }),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.i_rms >= 0.0) {
            return Err(Error::invalid("i_rms", "must be non-negative"));
        }
        if !(self.r_inductor >= 0.0 && self.r_transformer >= 0.0) {
            return Err(Error::invalid("r_inductor, r_transformer", "must be non-negative"));
        }
        for s in &self.stages {
            match s.model {
                StageModel::Reference { watts } if !(watts >= 0.0) => {
                    return Err(Error::invalid("stages.model.watts", "must be non-negative"))
                }
                StageModel::Semiconductor { r_on, e_on, e_off, i_ref, f_sw }
                    if !(r_on >= 0.0 && e_on >= 0.0 && e_off >= 0.0 && i_ref > 0.0 && f_sw >= 0.0) =>
                {
                    return Err(Error::invalid(
                        "stages.model",
                        "semiconductor coefficients must be non-negative, i_ref positive",
                    ))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageLoss {
    pub name: String,
    pub column: LossColumn,
    pub watts: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub stages: Vec<StageLoss>,
    pub direct_total: f64,
    pub transformer_total: f64,
    /// `I²·r_transformer`, reported next to whatever the lineup uses.
    pub transformer_i2r: f64,
    /// True when the transformer column carries a reference figure that
    /// differs from `transformer_i2r` by more than 1%.
    pub transformer_mismatch: bool,
}

pub fn loss_lineup(l: &LossLineup) -> Result<LossReport> {
    l.validate()?;
    let i2 = l.i_rms * l.i_rms;
    let stages: Vec<StageLoss> = l
        .stages
        .iter()
        .map(|s| {
            let watts = match s.model {
                StageModel::Reference { watts } => watts,
                StageModel::InductorI2r => i2 * l.r_inductor,
                StageModel::TransformerI2r => i2 * l.r_transformer,
                StageModel::Semiconductor { r_on, e_on, e_off, i_ref, f_sw } => {
                    i2 * r_on + f_sw * (e_on + e_off) * l.i_rms / i_ref
                }
            };
            StageLoss { name: s.name.clone(), column: s.column, watts }
        })
        .collect();
    let total = |c| stages.iter().filter(|s| s.column == c).map(|s| s.watts).sum::<f64>();
    let transformer_i2r = i2 * l.r_transformer;
    let transformer_mismatch = l.stages.iter().zip(&stages).any(|(s, r)| {
        s.column == LossColumn::Transformer
            && matches!(s.model, StageModel::Reference { .. })
            && s.name.contains("transformer")
            && (r.watts - transformer_i2r).abs() > 0.01 * transformer_i2r.max(1e-12)
    });
    Ok(LossReport {
        direct_total: total(LossColumn::DirectInjection),
        transformer_total: total(LossColumn::Transformer),
        stages,
        transformer_i2r,
        transformer_mismatch,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSpec {
    /// Transformer rating, VA.
    pub s_tx: f64,
    /// Line-to-line voltage, V rms.
    pub v_ll: f64,
    /// Short-circuit voltage, per unit.
    pub u_k: f64,
    /// Protection clearing time, s.
    pub clear_time: f64,
}

impl FaultSpec {
    pub fn reference() -> Self {
        FaultSpec { s_tx: 300e3, v_ll: 400.0, u_k: 0.085, clear_time: 0.4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultRatings {
    pub i_nominal: f64,
    pub i_short: f64,
    pub i2t: f64,
}

pub fn fault_ratings(f: &FaultSpec) -> Result<FaultRatings> {
    if !(f.s_tx > 0.0 && f.v_ll > 0.0) {
        return Err(Error::invalid("s_tx, v_ll", "must be positive"));
    }
    if !(f.u_k > 0.0 && f.u_k <= 1.0) {
        return Err(Error::invalid("u_k", "must lie in (0, 1]"));
    }
    if !(f.clear_time >= 0.0) {
        return Err(Error::invalid("clear_time", "must be non-negative"));
    }
    let i_nominal = f.s_tx / (3.0_f64.sqrt() * f.v_ll);
    let i_short = i_nominal / f.u_k;
    Ok(FaultRatings { i_nominal, i_short, i2t: i_short * i_short * f.clear_time })
}
