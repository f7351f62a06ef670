//! Four-path echo synthesis and the multi-channel matched-filter receiver.
//!
//! Every path contributes, at range bin ℓ of the virtual-channel cube,
//!
//! ```text
//! z[ℓ] += amp · [I_N ⊗ Rᵀ(ℓ − d)] · (a_r(θ_r) ⊗ (w_F ⊙ a_t(r, θ_t)))
//! ```
//!
//! where `d` is the (fractional) path delay in samples and `R` the waveform
//! ambiguity matrix, interpolated linearly between integer lags. Noise is
//! white at the elements and is pushed through the same bank of filters
//! matched to each transmitted waveform, so its covariance is `(σ²/L) · J ⊗ conj(R(0))` with `J` either `I_N` or `1_N 1_Nᵀ`.

use std::f64::consts::PI;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use crate::array::{mirror_geometry, rx_steering, tx_range_angle_steering};
use crate::waveform::{CorrelationMode, WaveformSet};
use crate::{cis, CMat, CVec, Error, NoiseModel, RadarConfig, Result, Scene, C64, SPEED_OF_LIGHT};

/// Which bounce pattern produced a component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Direct,
    /// Reflector bounce on the way in: target-angle transmit, mirror-angle receive.
    FirstOrderTx,
    /// Reflector bounce on the way out: mirror-angle transmit, target-angle receive.
    FirstOrderRx,
    SecondOrder,
}

/// One propagation path of one target.
#[derive(Debug, Clone, PartialEq)]
pub struct PathComponent {
    pub kind: PathKind,
    pub target: usize,
    /// Round-trip delay (s).
    pub delay_s: f64,
    pub rx_angle: f64,
    pub tx_angle: f64,
    /// Half the round-trip path length (m).
    pub effective_range_m: f64,
    pub amplitude: C64,
}

/// Equivalent target coefficient η0 = sqrt(P_t/M)·η̃0·exp(−j2π f0 τ0), with
/// the common Doppler phase of a moving target folded in.
pub fn equivalent_coefficient(config: &RadarConfig, target: &crate::Target) -> C64 {
    let tau0 = 2.0 * target.range_m / SPEED_OF_LIGHT;
    let amp = (config.total_power / config.num_tx as f64).sqrt();
    let doppler =
        -4.0 * PI * target.radial_velocity_mps * tau0 * config.carrier_hz / SPEED_OF_LIGHT;
    target.scatter * amp * cis(-2.0 * PI * config.carrier_hz * tau0 + doppler)
}

/// The four paths of every target: direct, the two one-bounce paths at the
/// equivalent range r̄, and the two-bounce path at the mirror range.
pub fn enumerate_paths(scene: &Scene, config: &RadarConfig) -> Result<Vec<PathComponent>> {
    let rho = scene.reflection_coeff;
    let mut out = Vec::with_capacity(4 * scene.targets.len());
    for (i, t) in scene.targets.iter().enumerate() {
        let m = mirror_geometry(t.range_m, t.angle_rad, scene.reflector_offset_m)?;
        let eta = equivalent_coefficient(config, t);
        let (r, rb, rs) = (t.range_m, m.equivalent_range_m, m.range_m);
        let mk = |kind, range: f64, tx_angle, rx_angle, amplitude| PathComponent {
            kind,
            target: i,
            delay_s: 2.0 * range / SPEED_OF_LIGHT,
            rx_angle,
            tx_angle,
            effective_range_m: range,
            amplitude,
        };
        out.push(mk(PathKind::Direct, r, t.angle_rad, t.angle_rad, eta));
        out.push(mk(
            PathKind::FirstOrderTx,
            rb,
            t.angle_rad,
            m.angle_rad,
            eta * rho,
        ));
        out.push(mk(
            PathKind::FirstOrderRx,
            rb,
            m.angle_rad,
            t.angle_rad,
            eta * rho,
        ));
        out.push(mk(
            PathKind::SecondOrder,
            rs,
            m.angle_rad,
            m.angle_rad,
            eta * rho * rho,
        ));
    }
    Ok(out)
}

/// Acquisition settings that sit outside the radar hardware description.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoParams {
    /// Pulses recorded; each brings an independent noise realization.
    pub pulses: usize,
    /// Range of the first bin in the receive window (m).
    pub window_start_m: f64,
}

impl Default for EchoParams {
    fn default() -> Self {
        Self {
            pulses: 64,
            window_start_m: 1625.0,
        }
    }
}

/// Matched-filter outputs for every pulse: `M·N` virtual channels × `L` bins.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoCube {
    /// One `MN × L` matrix per pulse; channel index n·M + m.
    pub pulses: Vec<CMat>,
    pub range_axis_m: Vec<f64>,
    pub config: RadarConfig,
    pub sample_rate_hz: f64,
    /// Absolute sample index of bin 0.
    pub first_bin: i64,
    pub rng_seed: u64,
}

impl EchoCube {
    pub fn num_bins(&self) -> usize {
        self.range_axis_m.len()
    }

    pub fn num_channels(&self) -> usize {
        self.config.virtual_channels()
    }

    /// Range-bin spacing c/(2 f_s).
    pub fn bin_spacing_m(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.sample_rate_hz)
    }

    /// Coherent average over pulses.
    pub fn integrated(&self) -> CMat {
        let mut acc = CMat::zeros(self.num_channels(), self.num_bins());
        for p in &self.pulses {
            acc += p;
        }
        acc / C64::from(self.pulses.len() as f64)
    }

    /// Every (pulse, bin) column, i.e. all fast-time snapshots.
    pub fn snapshots(&self) -> impl Iterator<Item = nalgebra::DVectorView<'_, C64>> + '_ {
        self.pulses.iter().flat_map(|p| p.column_iter())
    }

    pub fn snapshot_count(&self) -> usize {
        self.pulses.len() * self.num_bins()
    }

    /// Writes the integrated cube: 64-byte header (magic `FDMC`, version,
    /// M, N, L_r, pulses, f_s, first-bin range) and little-endian complex64
    /// payload, channel-major.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = [0u8; 64];
        header[0..4].copy_from_slice(b"FDMC");
        header[4..8].copy_from_slice(&1u32.to_le_bytes());
        header[8..12].copy_from_slice(&(self.config.num_tx as u32).to_le_bytes());
        header[12..16].copy_from_slice(&(self.config.num_rx as u32).to_le_bytes());
        header[16..20].copy_from_slice(&(self.num_bins() as u32).to_le_bytes());
        header[20..24].copy_from_slice(&(self.pulses.len() as u32).to_le_bytes());
        header[24..32].copy_from_slice(&self.sample_rate_hz.to_le_bytes());
        header[32..40].copy_from_slice(&self.range_axis_m[0].to_le_bytes());
        w.write_all(&header)?;
        let data = self.integrated();
        let mut buf = Vec::with_capacity(data.len() * 8);
        for ch in 0..data.nrows() {
            for k in 0..data.ncols() {
                let v = data[(ch, k)];
                buf.extend_from_slice(&(v.re as f32).to_le_bytes());
                buf.extend_from_slice(&(v.im as f32).to_le_bytes());
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }
}

/// Noise-free cube for a list of paths (one pulse's expected value).
pub fn expected_cube(
    paths: &[PathComponent],
    config: &RadarConfig,
    ws: &WaveformSet,
    tx_weights: &CVec,
    first_bin: i64,
) -> CMat {
    let (m, n, l) = (config.num_tx, config.num_rx, ws.len());
    let table = ws.ambiguity_table(config.freq_increment_hz);
    let mut z = CMat::zeros(m * n, l);
    for p in paths {
        let d = p.delay_s * ws.sample_rate_hz - first_bin as f64;
        let v = tx_range_angle_steering(config, p.effective_range_m, p.tx_angle)
            .component_mul(tx_weights);
        let ar = rx_steering(config, p.rx_angle) * p.amplitude;
        for bin in 0..l {
            let Some(r) = table.interpolated(bin as f64 - d) else {
                continue;
            };
            let u = r.transpose() * &v;
            for rx in 0..n {
                for tx in 0..m {
                    z[(rx * m + tx, bin)] += ar[rx] * u[tx];
                }
            }
        }
    }
    z
}

/// Simulates `params.pulses` pulses of the scene through the receiver.
pub fn simulate_echo(
    scene: &Scene,
    config: &RadarConfig,
    ws: &WaveformSet,
    tx_weights: &CVec,
    params: &EchoParams,
    seed: u64,
) -> Result<EchoCube> {
    config.validate()?;
    scene.validate()?;
    if ws.num_tx() != config.num_tx {
        return Err(Error::Dimension {
            expected: config.num_tx,
            got: ws.num_tx(),
        });
    }
    if tx_weights.len() != config.num_tx {
        return Err(Error::Dimension {
            expected: config.num_tx,
            got: tx_weights.len(),
        });
    }
    if params.pulses == 0 {
        return Err(Error::Config("at least one pulse is required".into()));
    }
    let fs = ws.sample_rate_hz;
    let dr = SPEED_OF_LIGHT / (2.0 * fs);
    let first_bin = (params.window_start_m / dr).round() as i64;
    let l = ws.len();
    let paths = enumerate_paths(scene, config)?;
    let clean = expected_cube(&paths, config, ws, tx_weights, first_bin);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bank = NoiseBank::new(config, ws);
    let pulses = (0..params.pulses)
        .map(|_| {
            let mut z = clean.clone();
            if scene.noise_power > 0.0 {
                bank.add_noise(&mut z, scene.noise_power, scene.noise_model, &mut rng);
            }
            z
        })
        .collect();
    Ok(EchoCube {
        pulses,
        range_axis_m: (0..l).map(|k| (first_bin + k as i64) as f64 * dr).collect(),
        config: config.clone(),
        sample_rate_hz: fs,
        first_bin,
        rng_seed: seed,
    })
}

/// Filters white element noise through the matched-filter bank.
struct NoiseBank {
    m: usize,
    n: usize,
    l: usize,
    nfft: usize,
    /// Conjugated spectra of the transmitted (frequency-shifted) references.
    refs: Vec<Vec<C64>>,
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl NoiseBank {
    fn new(config: &RadarConfig, ws: &WaveformSet) -> Self {
        let (m, l) = (config.num_tx, ws.len());
        let nfft = match ws.mode {
            CorrelationMode::Cyclic => l,
            CorrelationMode::Linear => 2 * l,
        };
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(nfft);
        let inv = planner.plan_fft_inverse(nfft);
        let refs = (0..m)
            .map(|tx| {
                let step = 2.0 * PI * tx as f64 * config.freq_increment_hz / ws.sample_rate_hz;
                let mut buf = vec![C64::new(0.0, 0.0); nfft];
                for (k, x) in buf.iter_mut().take(l).enumerate() {
                    *x = ws.samples[(tx, k)] * cis(step * k as f64);
                }
                fwd.process(&mut buf);
                buf.iter().map(|x| x.conj()).collect()
            })
            .collect();
        Self {
            m,
            n: config.num_rx,
            l,
            nfft,
            refs,
            fwd,
            inv,
        }
    }

    fn add_noise(&mut self, z: &mut CMat, sigma2: f64, model: NoiseModel, rng: &mut ChaCha8Rng) {
        let scale = (sigma2 / 2.0).sqrt();
        // Cyclic windows see one period of noise, linear ones need L − 1 extra samples.
        let span = match self.nfft == self.l {
            true => self.l,
            false => 2 * self.l - 1,
        };
        let streams = match model {
            NoiseModel::Independent => self.n,
            NoiseModel::Common => 1,
        };
        let mut filtered = vec![CMat::zeros(self.m, self.l); streams];
        let mut w = vec![C64::new(0.0, 0.0); self.nfft];
        let mut buf = vec![C64::new(0.0, 0.0); self.nfft];
        let norm = 1.0 / (self.l as f64 * self.nfft as f64);
        for out in filtered.iter_mut() {
            w.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
            for x in w.iter_mut().take(span) {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                *x = C64::new(re, im) * scale;
            }
            self.fwd.process(&mut w);
            for tx in 0..self.m {
                for ((b, x), r) in buf.iter_mut().zip(&w).zip(&self.refs[tx]) {
                    *b = x * r;
                }
                self.inv.process(&mut buf);
                for k in 0..self.l {
                    out[(tx, k)] = buf[k] * norm;
                }
            }
        }
        for rx in 0..self.n {
            let src = &filtered[if streams == 1 { 0 } else { rx }];
            for tx in 0..self.m {
                for k in 0..self.l {
                    z[(rx * self.m + tx, k)] += src[(tx, k)];
                }
            }
        }
    }
}

/// Covariance of one post-filter noise snapshot: `(σ²/L) · J ⊗ conj(R(0))`.
pub fn noise_covariance(
    config: &RadarConfig,
    ws: &WaveformSet,
    noise_power: f64,
    model: NoiseModel,
) -> CMat {
    let (m, n) = (config.num_tx, config.num_rx);
    let r = ws.zero_lag(config.freq_increment_hz);
    let s = noise_power / ws.len() as f64;
    CMat::from_fn(m * n, m * n, |i, j| {
        let (ri, ti) = (i / m, i % m);
        let (rj, tj) = (j / m, j % m);
        let couple = match model {
            NoiseModel::Independent => ri == rj,
            NoiseModel::Common => true,
        };
        if couple {
            r[(ti, tj)].conj() * s
        } else {
            C64::new(0.0, 0.0)
        }
    })
}
