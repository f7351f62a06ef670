//! TOML experiment files.
//!
//! A scenario has the sections `[radar]`, `[scene]` (with `[[scene.targets]]`),
//! `[waveform]`, `[cfar]`, `[discrimination]`, `[mitigation]` and `[output]`.
//! Unknown keys are rejected. Physical quantities carry their unit in the key
//! name.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detection::CfarParams;
use crate::discrimination::DiscriminationParams;
use crate::echo::EchoParams;
use crate::mitigation::{Algorithm2Options, DescentOptions, TxWeightRule};
use crate::waveform::{
    build_waveform_set, shuffled_shifts, zadoff_chu_set, CorrelationMode, WaveformSet,
};
use crate::{cis, Error, NoiseModel, RadarConfig, Result, Scene, Target, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub radar: RadarSection,
    pub scene: SceneSection,
    pub waveform: WaveformSection,
    #[serde(default)]
    pub cfar: CfarSection,
    #[serde(default)]
    pub discrimination: DiscriminationSection,
    #[serde(default)]
    pub mitigation: MitigationSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarSection {
    pub num_tx: usize,
    pub num_rx: usize,
    pub carrier_hz: f64,
    pub freq_increment_hz: f64,
    pub tx_spacing_m: f64,
    pub rx_spacing_m: f64,
    pub bandwidth_hz: f64,
    pub pulse_s: f64,
    pub pri_s: f64,
    pub total_power: f64,
    #[serde(default = "default_pulses")]
    pub pulses: usize,
    #[serde(default = "default_window_start")]
    pub window_start_m: f64,
}

fn default_pulses() -> usize {
    EchoParams::default().pulses
}

fn default_window_start() -> f64 {
    EchoParams::default().window_start_m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetEntry {
    pub range_m: f64,
    pub angle_deg: f64,
    #[serde(default = "one")]
    pub scatter_magnitude: f64,
    #[serde(default)]
    pub scatter_phase_deg: f64,
    #[serde(default)]
    pub radial_velocity_mps: f64,
}

fn default_samples_per_chip() -> usize {
    2
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModelName {
    #[default]
    Independent,
    Common,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSection {
    pub targets: Vec<TargetEntry>,
    pub reflector_offset_m: f64,
    pub reflection_magnitude: f64,
    #[serde(default)]
    pub reflection_phase_deg: f64,
    /// Element-level SNR of a unit-scatter target; exclusive with `noise_power`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_power: Option<f64>,
    #[serde(default)]
    pub noise_model: NoiseModelName,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WaveformKind {
    ZadoffChu,
    BarkerRandomPhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationName {
    #[default]
    Cyclic,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformSection {
    pub kind: WaveformKind,
    pub chips_per_pulse: usize,
    #[serde(default = "default_samples_per_chip")]
    pub samples_per_chip: usize,
    #[serde(default)]
    pub correlation: CorrelationName,
    /// Seed of the random-phase family; for Zadoff–Chu it shuffles which
    /// transmitter gets which shift (0 keeps the listed order).
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zc_root: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zc_shifts: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CfarSection {
    pub train: usize,
    pub guard: usize,
    pub pfa: f64,
    pub wrap: bool,
}

impl Default for CfarSection {
    fn default() -> Self {
        let p = CfarParams::default();
        Self {
            train: p.train,
            guard: p.guard,
            pfa: p.pfa,
            wrap: p.wrap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscriminationSection {
    pub grid_deg: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle_tolerance_deg: Option<f64>,
}

impl Default for DiscriminationSection {
    fn default() -> Self {
        let p = DiscriminationParams::default();
        Self {
            grid_deg: p.grid_deg,
            angle_tolerance_deg: p.angle_tolerance_deg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TxRuleName {
    #[default]
    Projection,
    Orthogonal,
    ExactMaximizer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MitigationSection {
    pub initial_freq_increment_hz: f64,
    pub rounds: usize,
    pub tx_rule: TxRuleName,
    pub max_iter: usize,
    pub tol: f64,
    pub sweep_start_hz: f64,
    pub sweep_stop_hz: f64,
    pub sweep_steps: usize,
    /// Bins added on each side of the target's path cells for the covariance.
    pub gate_margin_bins: usize,
    /// Estimate the covariance over the whole receive window instead.
    pub gate_whole_window: bool,
}

impl Default for MitigationSection {
    fn default() -> Self {
        Self {
            initial_freq_increment_hz: 32e6,
            rounds: 1,
            tx_rule: TxRuleName::Projection,
            max_iter: DescentOptions::default().max_iter,
            tol: DescentOptions::default().tol,
            sweep_start_hz: 0.1e6,
            sweep_stop_hz: 39.9e6,
            sweep_steps: 399,
            gate_margin_bins: 2,
            gate_whole_window: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub write_cube: bool,
    /// Also simulate and export the Δf = 0 baseline.
    pub mimo_baseline: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            write_cube: true,
            mimo_baseline: true,
        }
    }
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read scenario {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.radar_config().validate()?;
        self.scene()?.validate()?;
        if self.scene.targets.is_empty() {
            return Err(Error::Config("scene needs at least one target".into()));
        }
        if self.radar.pulses == 0 {
            return Err(Error::Config("pulses must be at least 1".into()));
        }
        if self.waveform.kind == WaveformKind::ZadoffChu
            && (self.waveform.zc_root.is_none() || self.waveform.zc_shifts.is_none())
        {
            return Err(Error::Config(
                "zadoff-chu waveforms need zc_root and zc_shifts".into(),
            ));
        }
        let m = &self.mitigation;
        if !(m.initial_freq_increment_hz > 0.0
            && m.initial_freq_increment_hz < self.radar.bandwidth_hz)
        {
            return Err(Error::Config(
                "initial_freq_increment_hz must lie in (0, bandwidth_hz)".into(),
            ));
        }
        if m.sweep_steps == 0 {
            return Err(Error::Config("sweep_steps must be at least 1".into()));
        }
        Ok(())
    }

    pub fn radar_config(&self) -> RadarConfig {
        let r = &self.radar;
        RadarConfig {
            num_tx: r.num_tx,
            num_rx: r.num_rx,
            carrier_hz: r.carrier_hz,
            freq_increment_hz: r.freq_increment_hz,
            tx_spacing_m: r.tx_spacing_m,
            rx_spacing_m: r.rx_spacing_m,
            bandwidth_hz: r.bandwidth_hz,
            pulse_s: r.pulse_s,
            pri_s: r.pri_s,
            total_power: r.total_power,
        }
    }

    pub fn scene(&self) -> Result<Scene> {
        let s = &self.scene;
        let config = self.radar_config();
        let noise_power = match (s.snr_db, s.noise_power) {
            (Some(snr), None) => Scene::noise_power_for_snr(&config, snr),
            (None, Some(p)) => p,
            _ => {
                return Err(Error::Config(
                    "give exactly one of scene.snr_db and scene.noise_power".into(),
                ))
            }
        };
        Ok(Scene {
            targets: s
                .targets
                .iter()
                .map(|t| Target {
                    range_m: t.range_m,
                    angle_rad: t.angle_deg.to_radians(),
                    scatter: t.scatter_magnitude * cis(t.scatter_phase_deg.to_radians()),
                    radial_velocity_mps: t.radial_velocity_mps,
                })
                .collect(),
            reflector_offset_m: s.reflector_offset_m,
            reflection_coeff: C64::from(s.reflection_magnitude)
                * cis(s.reflection_phase_deg.to_radians()),
            noise_power,
            noise_model: match s.noise_model {
                NoiseModelName::Independent => NoiseModel::Independent,
                NoiseModelName::Common => NoiseModel::Common,
            },
        })
    }

    pub fn echo_params(&self) -> EchoParams {
        EchoParams {
            pulses: self.radar.pulses,
            window_start_m: self.radar.window_start_m,
        }
    }

    pub fn waveform_set(&self) -> Result<WaveformSet> {
        let w = &self.waveform;
        let config = self.radar_config();
        let set = match w.kind {
            WaveformKind::ZadoffChu => {
                let root = w
                    .zc_root
                    .ok_or_else(|| Error::Config("zc_root missing".into()))?;
                let shifts = w
                    .zc_shifts
                    .as_deref()
                    .ok_or_else(|| Error::Config("zc_shifts missing".into()))?;
                zadoff_chu_set(
                    &config,
                    w.chips_per_pulse,
                    w.samples_per_chip,
                    root,
                    &shuffled_shifts(shifts, w.seed),
                )?
            }
            WaveformKind::BarkerRandomPhase => {
                build_waveform_set(&config, w.chips_per_pulse * w.samples_per_chip, w.seed)?
            }
        };
        Ok(set.with_mode(match w.correlation {
            CorrelationName::Cyclic => CorrelationMode::Cyclic,
            CorrelationName::Linear => CorrelationMode::Linear,
        }))
    }

    pub fn cfar_params(&self) -> CfarParams {
        let c = &self.cfar;
        CfarParams {
            train: c.train,
            guard: c.guard,
            pfa: c.pfa,
            wrap: c.wrap,
        }
    }

    pub fn discrimination_params(&self) -> DiscriminationParams {
        DiscriminationParams {
            grid_deg: self.discrimination.grid_deg,
            angle_tolerance_deg: self.discrimination.angle_tolerance_deg,
        }
    }

    pub fn algorithm2_options(&self) -> Algorithm2Options {
        let m = &self.mitigation;
        Algorithm2Options {
            rounds: m.rounds,
            rule: match m.tx_rule {
                TxRuleName::Projection => TxWeightRule::Projection,
                TxRuleName::Orthogonal => TxWeightRule::Orthogonal,
                TxRuleName::ExactMaximizer => TxWeightRule::ExactMaximizer,
            },
            descent: DescentOptions {
                max_iter: m.max_iter,
                tol: m.tol,
                ..DescentOptions::default()
            },
            target: 0,
            gate_margin_bins: (!m.gate_whole_window).then_some(m.gate_margin_bins),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[radar]
num_tx = 2
num_rx = 2
carrier_hz = 10e9
freq_increment_hz = 1e6
tx_spacing_m = 0.015
rx_spacing_m = 0.015
bandwidth_hz = 40e6
pulse_s = 5e-6
pri_s = 25e-6
total_power = 2

[scene]
reflector_offset_m = 20
reflection_magnitude = 0.5
snr_db = 0
[[scene.targets]]
range_m = 2000
angle_deg = 70

[waveform]
kind = "zadoff-chu"
chips_per_pulse = 16
zc_root = 3
zc_shifts = [0, 8]
"#;

    #[test]
    fn minimal_parses_with_defaults() {
        let s = Scenario::from_toml_str(MINIMAL).unwrap();
        assert_eq!(s.radar.pulses, 64);
        assert_eq!(s.cfar, CfarSection::default());
        assert!((s.scene().unwrap().noise_power - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let bad = MINIMAL.replace("pri_s = 25e-6", "pri_s = 25e-6\npri_sec = 1");
        assert!(Scenario::from_toml_str(&bad).unwrap_err().is_config());
    }

    #[test]
    fn round_trip() {
        let s = Scenario::from_toml_str(MINIMAL).unwrap();
        let again = Scenario::from_toml_str(&s.to_toml_string().unwrap()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn both_noise_keys_rejected() {
        let bad = MINIMAL.replace("snr_db = 0", "snr_db = 0\nnoise_power = 1");
        assert!(Scenario::from_toml_str(&bad).is_err());
    }
}
