use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("scenario field `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("impedance magnitude is zero")]
    ZeroImpedance,

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("unknown case id `{0}`")]
    UnknownCase(String),

    #[error("phase difference {dtheta_deg:.4} deg is unreachable with module voltage {v_m:.4} V")]
    Unreachable { dtheta_deg: f64, v_m: f64 },

    #[error("no -3 dB crossing below {f_max} Hz")]
    NoCrossing { f_max: f64 },

    #[error("interval [{start}, {end}] s is shorter than one fundamental cycle")]
    IntervalTooShort { start: f64, end: f64 },

    #[error("dc link `{link}` collapsed to {v_dc:.3} V at t = {t:.6} s")]
    DcCollapse { link: String, v_dc: f64, t: f64 },

    #[error("numerical divergence in `{state}` at t = {t:.6} s (value {value})")]
    Divergence { state: String, t: f64, value: f64 },

    #[error("run has not settled in interval [{start}, {end}] s")]
    Unsettled { start: f64, end: f64 },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field, reason: reason.into() }
    }

    /// True for errors caused by numerics during a run, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::DcCollapse { .. } | Error::Divergence { .. })
    }
}
