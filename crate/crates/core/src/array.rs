//! Mirror-target geometry and steering vectors.
//!
//! Element indices are 0-based, so element `m` of a steering vector carries
//! the phase of the (m+1)-th physical element.

use std::f64::consts::PI;

use crate::{cis, CVec, Error, RadarConfig, Result, C64, SPEED_OF_LIGHT};

/// Image of a target in the reflector plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorTarget {
    /// Range r_s of the mirror target (m).
    pub range_m: f64,
    /// Angle θ_s of the mirror target (rad).
    pub angle_rad: f64,
    /// Equivalent one-bounce range r̄ = (r + r_s)/2 (m).
    pub equivalent_range_m: f64,
}

/// Mirror target of `(range_m, angle_rad)` for a reflector `offset_m` away
/// from the array.
///
/// ```
/// let m = fdamimo::array::mirror_geometry(2000.0, 70f64.to_radians(), 20.0).unwrap();
/// assert!((m.equivalent_range_m - 2007.0).abs() < 0.1);
/// ```
pub fn mirror_geometry(range_m: f64, angle_rad: f64, offset_m: f64) -> Result<MirrorTarget> {
    if !(range_m > 0.0 && range_m.is_finite()) {
        return Err(Error::Domain(format!(
            "range must be positive, got {range_m}"
        )));
    }
    if !(angle_rad > 0.0 && angle_rad < PI) {
        return Err(Error::Domain(format!(
            "angle must lie in (0, π), got {angle_rad}"
        )));
    }
    if !(offset_m >= 0.0) {
        return Err(Error::Domain(format!(
            "reflector offset must be ≥ 0, got {offset_m}"
        )));
    }
    let across = range_m * angle_rad.sin();
    let along = 2.0 * offset_m + range_m * angle_rad.cos();
    let rs = across.hypot(along);
    // atan2 keeps θ_s inside (0, π) when the image lies behind the broadside line.
    let angle = PI - across.atan2(along);
    Ok(MirrorTarget {
        range_m: rs,
        angle_rad: angle,
        equivalent_range_m: 0.5 * (range_m + rs),
    })
}

fn linear_phase(len: usize, step: f64) -> CVec {
    CVec::from_fn(len, |i, _| cis(step * i as f64))
}

/// Receive steering vector a_r(θ), element n = exp(j2π (d_r/λ0) n cos θ).
pub fn rx_steering(config: &RadarConfig, angle: f64) -> CVec {
    linear_phase(
        config.num_rx,
        2.0 * PI * config.rx_spacing_m / config.wavelength() * angle.cos(),
    )
}

/// Transmit angle steering vector a_t(θ).
pub fn tx_steering(config: &RadarConfig, angle: f64) -> CVec {
    linear_phase(
        config.num_tx,
        2.0 * PI * config.tx_spacing_m / config.wavelength() * angle.cos(),
    )
}

/// Transmit range steering vector Γ(r), element m = exp(−j2π (2Δf/c) m r).
pub fn range_steering(config: &RadarConfig, range: f64) -> CVec {
    linear_phase(
        config.num_tx,
        -2.0 * PI * 2.0 * config.freq_increment_hz / SPEED_OF_LIGHT * range,
    )
}

/// Joint transmit steering a_t(r, θ) = a_t(θ) ⊙ Γ(r).
pub fn tx_range_angle_steering(config: &RadarConfig, range: f64, angle: f64) -> CVec {
    tx_steering(config, angle).component_mul(&range_steering(config, range))
}

/// Kronecker product of two column vectors, `a` outer (slow) index.
pub fn kron(a: &CVec, b: &CVec) -> CVec {
    let mut out = CVec::zeros(a.len() * b.len());
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i * b.len() + j] = ai * bj;
        }
    }
    out
}

/// Virtual-array steering a_r(θ_r) ⊗ (w ⊙ a_t(r, θ_t)); channel index n·M + m.
pub fn virtual_steering(
    config: &RadarConfig,
    range: f64,
    tx_angle: f64,
    rx_angle: f64,
    tx_weights: Option<&CVec>,
) -> CVec {
    let mut at = tx_range_angle_steering(config, range, tx_angle);
    if let Some(w) = tx_weights {
        at.component_mul_assign(w);
    }
    kron(&rx_steering(config, rx_angle), &at)
}

/// Transmit and receive spatial frequencies (f_st, f_sr) in cycles per element.
pub fn spatial_frequencies(config: &RadarConfig, range: f64, angle: f64) -> (f64, f64) {
    let lam = config.wavelength();
    let fst = -2.0 * config.freq_increment_hz / SPEED_OF_LIGHT * range
        + config.tx_spacing_m / lam * angle.cos();
    let fsr = config.rx_spacing_m / lam * angle.cos();
    (fst, fsr)
}

/// Inner product aᴴb.
pub fn inner(a: &CVec, b: &CVec) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}
