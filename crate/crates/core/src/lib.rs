//! Simulation of multipath identification and suppression for frequency
//! diverse array MIMO (FDA-MIMO) radar.
//!
//! The crate follows the processing chain of a monostatic FDA-MIMO radar that
//! looks at point targets over a flat specular reflector:
//!
//! 1. [`array`]: mirror-target geometry and steering vectors.
//! 2. [`waveform`]: orthogonal baseband sets and the transmit ambiguity matrix.
//! 3. [`echo`]: four-path echo synthesis through the matched-filter bank.
//! 4. [`detection`]: beamformed range profiles and CA-CFAR.
//! 5. [`discrimination`]: range-compensated Capon spectra that label each
//!    detected cell as a real target or a multipath ghost.
//! 6. [`mitigation`]: transmit weighting, frequency-increment search and MPDR
//!    receive weighting that push multipath energy down.
//!
//! [`scenario`] reads the TOML experiment files used by the `fdamimo` binary.
//!
//! ```
//! use fdamimo::array::mirror_geometry;
//!
//! let m = mirror_geometry(2000.0, 70f64.to_radians(), 20.0).unwrap();
//! assert!((m.range_m - 2014.0).abs() < 0.1);
//! assert!((m.angle_rad.to_degrees() - 111.07).abs() < 0.01);
//! ```

// `!(x > 0.0)` style guards are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod array;
pub mod config;
pub mod detection;
pub mod discrimination;
pub mod echo;
pub mod error;
pub mod linalg;
pub mod mitigation;
pub mod scenario;
pub mod waveform;

pub use config::{NoiseModel, RadarConfig, Scene, Target, SPEED_OF_LIGHT};
pub use error::{Error, Result};

/// Complex sample type used throughout.
pub type C64 = num_complex::Complex<f64>;
/// Dense complex column vector.
pub type CVec = nalgebra::DVector<C64>;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;

/// `exp(j·phase)`.
#[inline]
pub fn cis(phase: f64) -> C64 {
    C64::from_polar(1.0, phase)
}
