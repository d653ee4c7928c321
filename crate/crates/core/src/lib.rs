pub mod cli;
pub mod error;
pub mod oracle;
pub mod params;
pub mod response;
pub mod spectra;
pub mod sweep;

pub use error::{Error, Result};
pub use params::{derive, thermal_occupancy, DerivedParams, PhysicalParams, Preset, Regime};
pub use response::{Rates, Susceptibilities, TransferCoefficients};
pub use spectra::{Magnetometer, NoiseBath, SignalTone, SpectrumPoint};
