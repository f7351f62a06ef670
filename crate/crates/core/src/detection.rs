//! Beamformed range profiles and cell-averaging CFAR.

use crate::array::virtual_steering;
use crate::echo::EchoCube;
use crate::{CMat, CVec, Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    SingleChannel,
    Beamformed,
}

/// Output power per range bin.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeProfile {
    /// Linear power |wᴴ z[k]|².
    pub power: Vec<f64>,
    pub range_axis_m: Vec<f64>,
    pub kind: ProfileKind,
}

impl RangeProfile {
    /// 10·log10 of the power, shifted so the global peak sits at 0 dB.
    pub fn power_db(&self) -> Vec<f64> {
        let peak = self.power.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
        self.power
            .iter()
            .map(|p| 10.0 * (p.max(f64::MIN_POSITIVE) / peak).log10())
            .collect()
    }

    /// Unnormalized 10·log10 power.
    pub fn absolute_db(&self) -> Vec<f64> {
        self.power
            .iter()
            .map(|p| 10.0 * p.max(f64::MIN_POSITIVE).log10())
            .collect()
    }

    /// Bin nearest `range_m` (ties go to the even bin).
    pub fn bin_of(&self, range_m: f64) -> Result<usize> {
        nearest_bin(&self.range_axis_m, range_m)
    }

    /// Largest power within ±`half_width` bins of `range_m`.
    pub fn peak_near(&self, range_m: f64, half_width: usize) -> Result<f64> {
        let k = self.bin_of(range_m)?;
        let lo = k.saturating_sub(half_width);
        let hi = (k + half_width).min(self.power.len() - 1);
        Ok(self.power[lo..=hi].iter().cloned().fold(0.0, f64::max))
    }
}

pub(crate) fn nearest_bin(axis: &[f64], range_m: f64) -> Result<usize> {
    if axis.len() < 2 {
        return Err(Error::Domain("range axis too short".into()));
    }
    let step = axis[1] - axis[0];
    let pos = (range_m - axis[0]) / step;
    if !(pos >= -0.5 && pos <= axis.len() as f64 - 0.5) {
        return Err(Error::Domain(format!(
            "range {range_m} m is outside the receive window"
        )));
    }
    Ok((pos.round_ties_even() as usize).min(axis.len() - 1))
}

/// |steerᴴ z[k]|² over the coherently integrated cube.
pub fn beamform_profile(cube: &EchoCube, steer: &CVec) -> Result<RangeProfile> {
    beamform_matrix(&cube.integrated(), &cube.range_axis_m, steer)
}

/// Same as [`beamform_profile`] on an explicit `MN × L` matrix.
pub fn beamform_matrix(data: &CMat, range_axis_m: &[f64], steer: &CVec) -> Result<RangeProfile> {
    if steer.len() != data.nrows() {
        return Err(Error::Dimension {
            expected: data.nrows(),
            got: steer.len(),
        });
    }
    let out = data.adjoint() * steer;
    Ok(RangeProfile {
        power: out.iter().map(|y| y.norm_sqr()).collect(),
        range_axis_m: range_axis_m.to_vec(),
        kind: ProfileKind::Beamformed,
    })
}

/// Power of one virtual channel.
pub fn single_channel_profile(cube: &EchoCube, channel: usize) -> Result<RangeProfile> {
    if channel >= cube.num_channels() {
        return Err(Error::Dimension {
            expected: cube.num_channels(),
            got: channel,
        });
    }
    let z = cube.integrated();
    Ok(RangeProfile {
        power: z.row(channel).iter().map(|y| y.norm_sqr()).collect(),
        range_axis_m: cube.range_axis_m.clone(),
        kind: ProfileKind::SingleChannel,
    })
}

/// CA-CFAR settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfarParams {
    /// Training cells on each side.
    pub train: usize,
    /// Guard cells on each side.
    pub guard: usize,
    pub pfa: f64,
    /// Wrap the window around the ends (for cyclic range windows).
    pub wrap: bool,
}

impl Default for CfarParams {
    fn default() -> Self {
        Self {
            train: 16,
            guard: 8,
            pfa: 1e-4,
            wrap: true,
        }
    }
}

impl CfarParams {
    /// α = N_t (pfa^(−1/N_t) − 1) with N_t = 2·train.
    pub fn multiplier(&self) -> f64 {
        let nt = 2.0 * self.train as f64;
        nt * (self.pfa.powf(-1.0 / nt) - 1.0)
    }
}

/// CFAR output.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionSet {
    /// Centre of each detected bin.
    pub ranges_m: Vec<f64>,
    /// Sub-bin range estimate of each detection, see [`refine_peak`].
    pub refined_ranges_m: Vec<f64>,
    pub bins: Vec<usize>,
    /// Threshold per bin (linear power); NaN where no full window exists.
    pub threshold: Vec<f64>,
    pub pfa: f64,
}

impl DetectionSet {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// True if some detection lies within `tol_m` of `range_m`.
    pub fn contains_near(&self, range_m: f64, tol_m: f64) -> bool {
        self.ranges_m.iter().any(|r| (r - range_m).abs() <= tol_m)
    }

    /// Merges another detection set, dropping bins already present.
    pub fn union(mut self, other: &DetectionSet) -> DetectionSet {
        for (i, &b) in other.bins.iter().enumerate() {
            if !self.bins.contains(&b) {
                self.bins.push(b);
                self.ranges_m.push(other.ranges_m[i]);
                self.refined_ranges_m.push(other.refined_ranges_m[i]);
            }
        }
        let mut order: Vec<usize> = (0..self.bins.len()).collect();
        order.sort_by_key(|&i| self.bins[i]);
        self.bins = order.iter().map(|&i| self.bins[i]).collect();
        self.ranges_m = order.iter().map(|&i| self.ranges_m[i]).collect();
        self.refined_ranges_m = order.iter().map(|&i| self.refined_ranges_m[i]).collect();
        self
    }
}

/// Cell-averaging CFAR on linear power. Every local maximum among the cells
/// above the threshold is reported.
pub fn cfar_ca(profile: &RangeProfile, params: &CfarParams) -> Result<DetectionSet> {
    if params.train == 0 {
        return Err(Error::Domain("train must be at least 1".into()));
    }
    if !(params.pfa > 0.0 && params.pfa < 1.0) {
        return Err(Error::Domain("pfa must lie in (0, 1)".into()));
    }
    let n = profile.power.len();
    let reach = params.guard + params.train;
    if n < 2 * reach + 1 {
        return Err(Error::Domain(format!(
            "profile of {n} cells is shorter than the CFAR window"
        )));
    }
    let alpha = params.multiplier();
    let p = &profile.power;
    let mut threshold = vec![f64::NAN; n];
    for (k, th) in threshold.iter_mut().enumerate() {
        if !params.wrap && (k < reach || k + reach >= n) {
            continue;
        }
        let mut sum = 0.0;
        for off in params.guard + 1..=reach {
            sum += p[(k + off) % n] + p[(k + n - off) % n];
        }
        *th = alpha * sum / (2 * params.train) as f64;
    }
    let neighbour = |k: usize, d: isize| -> f64 {
        let j = k as isize + d;
        if params.wrap {
            p[j.rem_euclid(n as isize) as usize]
        } else if j < 0 || j >= n as isize {
            f64::NEG_INFINITY
        } else {
            p[j as usize]
        }
    };
    let bins: Vec<usize> = (0..n)
        .filter(|&k| p[k] > threshold[k] && p[k] >= neighbour(k, -1) && p[k] > neighbour(k, 1))
        .collect();
    Ok(DetectionSet {
        ranges_m: bins.iter().map(|&b| profile.range_axis_m[b]).collect(),
        refined_ranges_m: bins.iter().map(|&b| refine_peak(profile, b)).collect(),
        bins,
        threshold,
        pfa: params.pfa,
    })
}

/// Sub-bin peak position assuming a triangular amplitude mainlobe at least
/// two bins wide on each side, as produced by sample-and-hold chips sampled
/// twice or more per chip:
/// `δ = (a₊ − a₋) / (2 (a₀ − min(a₋, a₊)))` with `a = √power`.
pub fn refine_peak(profile: &RangeProfile, bin: usize) -> f64 {
    let n = profile.power.len();
    let r = profile.range_axis_m[bin];
    if bin == 0 || bin + 1 >= n {
        return r;
    }
    let a0 = profile.power[bin].sqrt();
    let am = profile.power[bin - 1].sqrt();
    let ap = profile.power[bin + 1].sqrt();
    let den = 2.0 * (a0 - am.min(ap));
    if !(den > 0.0) {
        return r;
    }
    let delta = ((ap - am) / den).clamp(-0.5, 0.5);
    r + delta * (profile.range_axis_m[1] - profile.range_axis_m[0])
}

/// Profiles for a matched beam at each `(range_m, angle_rad)` look, CFAR on
/// each, and the union of the detections.
pub fn detect_looks(
    cube: &EchoCube,
    looks: &[(f64, f64)],
    params: &CfarParams,
) -> Result<(Vec<RangeProfile>, DetectionSet)> {
    let mut profiles = Vec::with_capacity(looks.len());
    let mut found: Option<DetectionSet> = None;
    for &(r, a) in looks {
        let steer = virtual_steering(&cube.config, r, a, a, None);
        let prof = beamform_profile(cube, &matched_weights(&steer))?;
        let det = cfar_ca(&prof, params)?;
        found = Some(match found {
            None => det,
            Some(acc) => acc.union(&det),
        });
        profiles.push(prof);
    }
    let det = found.ok_or_else(|| Error::Domain("no look directions given".into()))?;
    Ok((profiles, det))
}

/// Integrated-cube column at the bin nearest `range_m`.
pub fn snapshot_at_range(cube: &EchoCube, range_m: f64) -> Result<CVec> {
    let k = nearest_bin(&cube.range_axis_m, range_m)?;
    let z = cube.integrated();
    Ok(z.column(k).into_owned())
}

/// Unit-gain matched weights ă/(ăᴴă).
pub fn matched_weights(steer: &CVec) -> CVec {
    steer / C64::from(steer.norm_squared())
}
