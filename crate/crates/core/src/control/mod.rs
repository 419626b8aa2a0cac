//! Closed-loop controllers and the module bridge modulator.

mod afe;
mod filters;
mod harmonic;
mod modulator;
mod pi;
mod pll;
mod series;

pub use afe::{afe_step, afe_voltage_command, AfeConfig, AfeController, AfeMeasurement, AfeOutput, Sequence};
pub use filters::{MovingAverage, Summable};
pub use harmonic::{configured_orders, enable_orders, harmonic_block_step, HarmonicBlock};
pub use modulator::{
    clipped_fundamental, max_fundamental, modulate, overmod_command, unipolar_switch, ModulatorOutput, ModuleMode,
};
pub use pi::PiController;
pub use pll::Pll;
pub use series::{series_current_control, Reference, SeriesConfig, SeriesController, SeriesMeasurement, SeriesOutput};
