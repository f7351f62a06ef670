//! Orthogonal baseband waveform sets and the transmit ambiguity matrix.
//!
//! For a set `s_m[k]`, `k = 0..L`, sampled at `f_s = L / T_s`, the ambiguity
//! matrix at lag `q` samples and frequency increment Δf is
//!
//! ```text
//! R(q)[m, m'] = (1/L) Σ_k s_m[k] · conj(s_m'[k − q]) · exp(−j2π (m'−m) Δf k / f_s)
//! ```
//!
//! Indices `k − q` wrap modulo `L` in [`CorrelationMode::Cyclic`] and fall
//! off the pulse (contributing zero) in [`CorrelationMode::Linear`].

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

use crate::{cis, CMat, Error, RadarConfig, Result, C64};

/// Canonical Barker-11 sequence.
pub const BARKER_11: [f64; 11] = [1.0, 1.0, 1.0, -1.0, -1.0, -1.0, 1.0, -1.0, -1.0, 1.0, -1.0];

/// Largest allowed normalized cross-correlation between distinct rows of a
/// Barker-derived set at nonzero lag.
pub const ORTHOGONALITY_BUDGET: f64 = 0.15;

pub fn barker11_phase_code() -> [f64; 11] {
    BARKER_11
}

/// How delayed copies of a pulse are correlated against the reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorrelationMode {
    /// Pulses repeat back to back; correlation is circular over one period.
    #[default]
    Cyclic,
    /// Isolated pulses; correlation is aperiodic.
    Linear,
}

/// M transmit waveforms of L samples each, unit average power per row.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformSet {
    /// One row per transmitter.
    pub samples: CMat,
    pub sample_rate_hz: f64,
    pub code_name: String,
    pub mode: CorrelationMode,
}

impl WaveformSet {
    /// Wraps explicit samples, rescaling every row to unit average power.
    pub fn from_rows(
        mut samples: CMat,
        sample_rate_hz: f64,
        code_name: &str,
        mode: CorrelationMode,
    ) -> Result<Self> {
        if samples.nrows() == 0 || samples.ncols() == 0 {
            return Err(Error::Config("waveform set is empty".into()));
        }
        for mut row in samples.row_iter_mut() {
            let p = row.iter().map(|x| x.norm_sqr()).sum::<f64>() / row.len() as f64;
            if p <= 0.0 {
                return Err(Error::Config("waveform row has zero energy".into()));
            }
            row /= C64::from(p.sqrt());
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            code_name: code_name.to_string(),
            mode,
        })
    }

    pub fn num_tx(&self) -> usize {
        self.samples.nrows()
    }

    /// Samples per pulse L.
    pub fn len(&self) -> usize {
        self.samples.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn with_mode(mut self, mode: CorrelationMode) -> Self {
        self.mode = mode;
        self
    }

    /// Ambiguity matrix at lag `lag` samples by direct summation.
    pub fn ambiguity_at(&self, lag: isize, freq_increment_hz: f64) -> CMat {
        let (m, l) = (self.num_tx(), self.len());
        let li = l as isize;
        CMat::from_fn(m, m, |a, b| {
            let step = -2.0 * PI * (b as f64 - a as f64) * freq_increment_hz / self.sample_rate_hz;
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..li {
                let idx = k - lag;
                let idx = match self.mode {
                    CorrelationMode::Cyclic => idx.rem_euclid(li),
                    CorrelationMode::Linear if (0..li).contains(&idx) => idx,
                    CorrelationMode::Linear => continue,
                };
                acc += self.samples[(a, k as usize)]
                    * self.samples[(b, idx as usize)].conj()
                    * cis(step * k as f64);
            }
            acc / l as f64
        })
    }

    /// Zero-lag ambiguity matrix R(0; Δf).
    pub fn zero_lag(&self, freq_increment_hz: f64) -> CMat {
        self.ambiguity_at(0, freq_increment_hz)
    }

    /// Ambiguity matrices at every lag, computed with FFT correlation.
    pub fn ambiguity_table(&self, freq_increment_hz: f64) -> AmbiguityTable {
        let (m, l) = (self.num_tx(), self.len());
        let nfft = match self.mode {
            CorrelationMode::Cyclic => l,
            CorrelationMode::Linear => 2 * l,
        };
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(nfft);
        let inv = planner.plan_fft_inverse(nfft);
        let spectra: Vec<Vec<C64>> = (0..m)
            .map(|b| {
                let mut buf = vec![C64::new(0.0, 0.0); nfft];
                for (k, x) in buf.iter_mut().take(l).enumerate() {
                    *x = self.samples[(b, k)];
                }
                fwd.process(&mut buf);
                buf
            })
            .collect();
        let nlags = match self.mode {
            CorrelationMode::Cyclic => l,
            CorrelationMode::Linear => 2 * l - 1,
        };
        let mut values = vec![CMat::zeros(m, m); nlags];
        let scale = 1.0 / (l as f64 * nfft as f64);
        let mut buf = vec![C64::new(0.0, 0.0); nfft];
        for a in 0..m {
            for b in 0..m {
                let step =
                    -2.0 * PI * (b as f64 - a as f64) * freq_increment_hz / self.sample_rate_hz;
                buf.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
                for (k, x) in buf.iter_mut().take(l).enumerate() {
                    *x = self.samples[(a, k)] * cis(step * k as f64);
                }
                fwd.process(&mut buf);
                for (x, y) in buf.iter_mut().zip(&spectra[b]) {
                    *x *= y.conj();
                }
                inv.process(&mut buf);
                for (slot, v) in values.iter_mut().enumerate() {
                    let lag = AmbiguityTable::lag_of_slot(self.mode, l, slot);
                    v[(a, b)] = buf[lag.rem_euclid(nfft as isize) as usize] * scale;
                }
            }
        }
        AmbiguityTable {
            mode: self.mode,
            len: l,
            values,
        }
    }

    /// Largest |R(q)[m, m']| over distinct rows and all lags.
    pub fn peak_cross_correlation(&self, freq_increment_hz: f64) -> f64 {
        let table = self.ambiguity_table(freq_increment_hz);
        let m = self.num_tx();
        table
            .values
            .iter()
            .flat_map(|r| {
                (0..m).flat_map(move |a| {
                    (0..m)
                        .filter(move |&b| b != a)
                        .map(move |b| r[(a, b)].norm())
                })
            })
            .fold(0.0, f64::max)
    }
}

/// R(q; Δf) for every lag of a [`WaveformSet`].
#[derive(Debug, Clone)]
pub struct AmbiguityTable {
    mode: CorrelationMode,
    len: usize,
    values: Vec<CMat>,
}

impl AmbiguityTable {
    fn lag_of_slot(mode: CorrelationMode, len: usize, slot: usize) -> isize {
        match mode {
            CorrelationMode::Cyclic => slot as isize,
            CorrelationMode::Linear => slot as isize - (len as isize - 1),
        }
    }

    /// R(lag), or `None` where the pulses no longer overlap.
    pub fn get(&self, lag: isize) -> Option<&CMat> {
        let l = self.len as isize;
        match self.mode {
            CorrelationMode::Cyclic => Some(&self.values[lag.rem_euclid(l) as usize]),
            CorrelationMode::Linear if lag.abs() < l => Some(&self.values[(lag + l - 1) as usize]),
            CorrelationMode::Linear => None,
        }
    }

    /// R at a fractional lag, linear between the neighbouring integer lags.
    /// This is exact for sample-and-hold waveforms at zero frequency offset.
    pub fn interpolated(&self, lag: f64) -> Option<CMat> {
        let lo = lag.floor();
        let f = lag - lo;
        let lo = lo as isize;
        let a = self.get(lo);
        let b = self.get(lo + 1);
        match (a, b) {
            (Some(a), Some(b)) => Some(a * C64::from(1.0 - f) + b * C64::from(f)),
            (Some(a), None) => Some(a * C64::from(1.0 - f)),
            (None, Some(b)) => Some(b * C64::from(f)),
            (None, None) => None,
        }
    }

    pub fn mode(&self) -> CorrelationMode {
        self.mode
    }
}

/// Ambiguity matrix for a physical delay.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguityMatrix {
    pub values: CMat,
    pub delay_s: f64,
    pub freq_increment_hz: f64,
}

/// Ambiguity matrix at `delay_s` using the configuration's frequency
/// increment; fractional sample delays interpolate linearly.
pub fn ambiguity_matrix(
    ws: &WaveformSet,
    delay_s: f64,
    config: &RadarConfig,
) -> Result<AmbiguityMatrix> {
    if ws.num_tx() != config.num_tx {
        return Err(Error::Dimension {
            expected: config.num_tx,
            got: ws.num_tx(),
        });
    }
    if delay_s.abs() >= config.pulse_s {
        return Err(Error::Domain(format!(
            "|delay| must be below the pulse length, got {delay_s} s"
        )));
    }
    let x = delay_s * ws.sample_rate_hz;
    let lo = x.floor();
    let f = x - lo;
    let values = ws.ambiguity_at(lo as isize, config.freq_increment_hz) * C64::from(1.0 - f)
        + ws.ambiguity_at(lo as isize + 1, config.freq_increment_hz) * C64::from(f);
    Ok(AmbiguityMatrix {
        values,
        delay_s,
        freq_increment_hz: config.freq_increment_hz,
    })
}

/// Barker-derived orthogonal set.
///
/// Row 0 is the Barker-11 code stretched over `samples_per_pulse` samples with
/// rectangular chips. The other rows put a seeded random phase on every sample
/// of the same envelope, then a zero-lag Gram–Schmidt pass makes the set
/// exactly orthogonal at zero lag and zero frequency offset.
pub fn build_waveform_set(
    config: &RadarConfig,
    samples_per_pulse: usize,
    seed: u64,
) -> Result<WaveformSet> {
    let (m, l) = (config.num_tx, samples_per_pulse);
    if l < 11 * m {
        return Err(Error::Config(format!(
            "samples_per_pulse must be at least {} for {m} transmitters",
            11 * m
        )));
    }
    let chip = |k: usize| BARKER_11[k * 11 / l];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = CMat::zeros(m, l);
    for k in 0..l {
        s[(0, k)] = C64::new(chip(k), 0.0);
    }
    for row in 1..m {
        for k in 0..l {
            s[(row, k)] = chip(k) * cis(rng.random::<f64>() * 2.0 * PI);
        }
    }
    for row in 1..m {
        for prev in 0..row {
            let num: C64 = (0..l).map(|k| s[(row, k)] * s[(prev, k)].conj()).sum();
            let den: f64 = (0..l).map(|k| s[(prev, k)].norm_sqr()).sum();
            let coeff = num / den;
            for k in 0..l {
                let p = s[(prev, k)];
                s[(row, k)] -= coeff * p;
            }
        }
    }
    WaveformSet::from_rows(
        s,
        l as f64 / config.pulse_s,
        "barker11-random-phase",
        CorrelationMode::Cyclic,
    )
}

/// Zadoff–Chu cyclic-shift set: row m is the root-`root` sequence of `chips`
/// chips advanced by `shifts[m]` chips, each chip held for `samples_per_chip`
/// samples.
///
/// With shifts chosen so that every pairwise shift difference (including the
/// extra shift a frequency offset of a whole number of bins induces) stays
/// outside ±Z chips, the set has a zero-correlation zone of Z chips under
/// cyclic correlation.
pub fn zadoff_chu_set(
    config: &RadarConfig,
    chips: usize,
    samples_per_chip: usize,
    root: usize,
    shifts: &[usize],
) -> Result<WaveformSet> {
    if shifts.len() != config.num_tx {
        return Err(Error::Dimension {
            expected: config.num_tx,
            got: shifts.len(),
        });
    }
    if chips == 0 || samples_per_chip == 0 || gcd(root, chips) != 1 {
        return Err(Error::Config(format!(
            "Zadoff–Chu root {root} must be coprime with length {chips}"
        )));
    }
    let odd = (chips % 2) as f64;
    let base: Vec<C64> = (0..chips)
        .map(|k| {
            let k = k as f64;
            cis(-PI * root as f64 * k * (k + odd) / chips as f64)
        })
        .collect();
    let l = chips * samples_per_chip;
    let s = CMat::from_fn(config.num_tx, l, |m, k| {
        base[(k / samples_per_chip + shifts[m]) % chips]
    });
    WaveformSet::from_rows(
        s,
        l as f64 / config.pulse_s,
        &format!("zadoff-chu-u{root}"),
        CorrelationMode::Cyclic,
    )
}

/// Reassigns the cyclic shifts to transmitters by a seeded shuffle; seed 0
/// keeps the given order. The pairwise shift differences, and therefore the
/// zero-correlation zone at Δf = 0, are unchanged.
pub fn shuffled_shifts(shifts: &[usize], seed: u64) -> Vec<usize> {
    let mut out = shifts.to_vec();
    if seed != 0 {
        out.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    out
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
