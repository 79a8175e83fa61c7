//! Numerical experiments on the wave-packet frame: Fourier localization,
//! energy concentration, frame bounds and the spectrum of the
//! time-frequency limiting operator.

pub mod config;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod fft;
pub mod frame;
pub mod localize;
pub mod output;
pub mod region;
pub mod sector;
pub mod spectrum;

pub use error::LabError;
