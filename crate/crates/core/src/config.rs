//! Radar and scene descriptions.

use crate::{Error, Result, C64};

/// Speed of light in vacuum (m/s), exact.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Array geometry, carriers and pulse timing.
///
/// Element `m` (0-based) transmits on `carrier_hz + m * freq_increment_hz`.
/// A zero increment gives the conventional MIMO baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarConfig {
    /// Transmit elements M.
    pub num_tx: usize,
    /// Receive elements N.
    pub num_rx: usize,
    /// Reference carrier f0 (Hz).
    pub carrier_hz: f64,
    /// Inter-element frequency increment Δf (Hz).
    pub freq_increment_hz: f64,
    /// Transmit element spacing (m).
    pub tx_spacing_m: f64,
    /// Receive element spacing (m).
    pub rx_spacing_m: f64,
    /// Baseband bandwidth B_s (Hz).
    pub bandwidth_hz: f64,
    /// Pulse length T_s (s).
    pub pulse_s: f64,
    /// Pulse repetition interval T_p (s).
    pub pri_s: f64,
    /// Total transmit power P_t (linear), split evenly over the transmitters.
    pub total_power: f64,
}

impl RadarConfig {
    /// Half-wavelength uniform arrays with a 40 MHz band, 5 µs pulses in a
    /// 25 µs PRI and unit power per transmitter.
    pub fn half_wavelength(num_tx: usize, num_rx: usize, carrier_hz: f64) -> Self {
        let d = SPEED_OF_LIGHT / carrier_hz / 2.0;
        Self {
            num_tx,
            num_rx,
            carrier_hz,
            freq_increment_hz: 0.0,
            tx_spacing_m: d,
            rx_spacing_m: d,
            bandwidth_hz: 40e6,
            pulse_s: 5e-6,
            pri_s: 25e-6,
            total_power: num_tx as f64,
        }
    }

    pub fn with_freq_increment(&self, freq_increment_hz: f64) -> Self {
        Self {
            freq_increment_hz,
            ..self.clone()
        }
    }

    /// Reference wavelength λ0 = c / f0.
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// Number of virtual channels M·N.
    pub fn virtual_channels(&self) -> usize {
        self.num_tx * self.num_rx
    }

    /// Range period c/(2Δf) of the transmit range phase, `None` for MIMO.
    pub fn range_period_m(&self) -> Option<f64> {
        (self.freq_increment_hz != 0.0).then(|| SPEED_OF_LIGHT / (2.0 * self.freq_increment_hz))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.num_tx == 0 || self.num_rx == 0 {
            return bad("num_tx and num_rx must be at least 1");
        }
        for (name, v) in [
            ("carrier_hz", self.carrier_hz),
            ("tx_spacing_m", self.tx_spacing_m),
            ("rx_spacing_m", self.rx_spacing_m),
            ("bandwidth_hz", self.bandwidth_hz),
            ("pulse_s", self.pulse_s),
            ("pri_s", self.pri_s),
            ("total_power", self.total_power),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.freq_increment_hz.is_finite() && self.freq_increment_hz >= 0.0) {
            return bad("freq_increment_hz must be non-negative");
        }
        if self.pulse_s >= self.pri_s {
            return bad("pulse_s must be shorter than pri_s");
        }
        Ok(())
    }
}

/// A stationary or slowly moving point scatterer.
#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub range_m: f64,
    /// Angle from the array axis, in (0, π).
    pub angle_rad: f64,
    /// Complex scattering coefficient η̃0.
    pub scatter: C64,
    pub radial_velocity_mps: f64,
}

impl Target {
    pub fn new(range_m: f64, angle_rad: f64) -> Self {
        Self {
            range_m,
            angle_rad,
            scatter: C64::new(1.0, 0.0),
            radial_velocity_mps: 0.0,
        }
    }

    pub fn with_scatter(mut self, scatter: C64) -> Self {
        self.scatter = scatter;
        self
    }
}

/// How the post-filter noise is shared between receive elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseModel {
    /// Independent white noise per receive element (covariance I_N ⊗ ·).
    #[default]
    Independent,
    /// One noise stream seen by every receive element (covariance 1_N 1_Nᵀ ⊗ ·).
    Common,
}

/// Targets over a single flat specular reflector.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub targets: Vec<Target>,
    /// Distance h_a between the array and the reflector (m).
    pub reflector_offset_m: f64,
    /// Complex reflection coefficient ρ̃0.
    pub reflection_coeff: C64,
    /// Per-sample, per-element noise variance σ_n².
    pub noise_power: f64,
    pub noise_model: NoiseModel,
}

impl Scene {
    /// Noise power giving `snr_db` for a unit-scatter target, with the
    /// element-level definition SNR = |η0|²·M / σ_n² and |η0|² = P_t/M.
    pub fn noise_power_for_snr(config: &RadarConfig, snr_db: f64) -> f64 {
        let eta2 = config.total_power / config.num_tx as f64;
        eta2 * config.num_tx as f64 / 10f64.powf(snr_db / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reflection_coeff.norm() > 1.0 {
            return Err(Error::Config(
                "reflection coefficient magnitude must be ≤ 1".into(),
            ));
        }
        if !(self.reflector_offset_m >= 0.0) {
            return Err(Error::Config(
                "reflector_offset_m must be non-negative".into(),
            ));
        }
        if !(self.noise_power >= 0.0 && self.noise_power.is_finite()) {
            return Err(Error::Config("noise_power must be non-negative".into()));
        }
        for t in &self.targets {
            if !(t.range_m > 0.0) {
                return Err(Error::Config(format!(
                    "target range must be positive, got {}",
                    t.range_m
                )));
            }
            if !(t.angle_rad > 0.0 && t.angle_rad < std::f64::consts::PI) {
                return Err(Error::Config("target angle must lie in (0°, 180°)".into()));
            }
        }
        Ok(())
    }
}
