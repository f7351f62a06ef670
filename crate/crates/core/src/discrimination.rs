//! Real-versus-ghost labeling of detected range cells.
//!
//! Each candidate cell is processed in its own frame: every snapshot is
//! multiplied by `g(r) = 1_N ⊗ conj(Γ(r))`, which strips the transmit range
//! phase of anything that really sits at range `r`. A genuine target then
//! looks like a source with equal transmit and receive angles, while a
//! one-bounce path keeps mismatched angles and a residual range phase. The
//! Capon transmit–receive spectrum of the cell snapshot exposes which case
//! holds.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::array::{range_steering, rx_steering, tx_steering};
use crate::detection::nearest_bin;
use crate::echo::EchoCube;
use crate::linalg::{default_loading, HermitianMatrix};
use crate::{CMat, CVec, Error, RadarConfig, Result, C64};

/// g(r) = 1_N ⊗ conj(Γ(r)).
pub fn compensation_vector(config: &RadarConfig, range_m: f64) -> CVec {
    let gamma = range_steering(config, range_m).conjugate();
    CVec::from_fn(config.virtual_channels(), |i, _| gamma[i % config.num_tx])
}

/// Cube re-referenced to a hypothesized range.
#[derive(Debug, Clone, PartialEq)]
pub struct CompensatedCube {
    pub pulses: Vec<CMat>,
    pub range_axis_m: Vec<f64>,
    pub compensated_range_m: f64,
    pub config: RadarConfig,
}

impl CompensatedCube {
    /// Undoes the compensation.
    pub fn restore(&self) -> Vec<CMat> {
        let g = compensation_vector(&self.config, self.compensated_range_m).conjugate();
        self.pulses.iter().map(|p| scale_rows(p, &g)).collect()
    }

    pub fn integrated(&self) -> CMat {
        let mut acc = CMat::zeros(self.pulses[0].nrows(), self.pulses[0].ncols());
        for p in &self.pulses {
            acc += p;
        }
        acc / C64::from(self.pulses.len() as f64)
    }
}

fn scale_rows(m: &CMat, g: &CVec) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * g[i])
}

pub fn compensate(cube: &EchoCube, range_m: f64) -> CompensatedCube {
    let g = compensation_vector(&cube.config, range_m);
    CompensatedCube {
        pulses: cube.pulses.iter().map(|p| scale_rows(p, &g)).collect(),
        range_axis_m: cube.range_axis_m.clone(),
        compensated_range_m: range_m,
        config: cube.config.clone(),
    }
}

/// Sample covariance of all compensated snapshots with default loading.
pub fn compensated_covariance(cc: &CompensatedCube) -> Result<HermitianMatrix> {
    let dim = cc.config.virtual_channels();
    Ok(
        HermitianMatrix::from_snapshots(dim, cc.pulses.iter().flat_map(|p| p.column_iter()))?
            .with_default_loading(),
    )
}

/// Power over a square (θ_t, θ_r) grid; `power[(i_t, i_r)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialSpectrum {
    pub power: DMatrix<f64>,
    pub grid_rad: Vec<f64>,
    /// (θ̂_t, θ̂_r) of the maximum.
    pub argmax: (f64, f64),
    pub peak: f64,
    pub compensated_range_m: f64,
}

impl SpatialSpectrum {
    fn from_power(power: DMatrix<f64>, grid_rad: Vec<f64>, compensated_range_m: f64) -> Self {
        let (mut best, mut at) = (f64::NEG_INFINITY, (0, 0));
        for it in 0..power.nrows() {
            for ir in 0..power.ncols() {
                if power[(it, ir)] > best {
                    best = power[(it, ir)];
                    at = (it, ir);
                }
            }
        }
        Self {
            argmax: (grid_rad[at.0], grid_rad[at.1]),
            peak: best,
            power,
            grid_rad,
            compensated_range_m,
        }
    }

    /// Grid points that beat all eight neighbours and reach `floor_ratio`
    /// of the global peak, strongest first.
    pub fn local_maxima(&self, floor_ratio: f64) -> Vec<(f64, f64, f64)> {
        let n = self.grid_rad.len();
        let p = &self.power;
        let mut out = Vec::new();
        for it in 0..n {
            for ir in 0..n {
                let v = p[(it, ir)];
                if v < floor_ratio * self.peak {
                    continue;
                }
                let mut is_max = true;
                for dt in -1i64..=1 {
                    for dr in -1i64..=1 {
                        let (a, b) = (it as i64 + dt, ir as i64 + dr);
                        if (dt, dr) == (0, 0) || a < 0 || b < 0 || a >= n as i64 || b >= n as i64 {
                            continue;
                        }
                        if p[(a as usize, b as usize)] > v {
                            is_max = false;
                        }
                    }
                }
                if is_max {
                    out.push((self.grid_rad[it], self.grid_rad[ir], v));
                }
            }
        }
        out.sort_by(|a, b| b.2.total_cmp(&a.2));
        out
    }
}

/// Uniform grid over [0, π] with the given step.
pub fn angle_grid(step_deg: f64) -> Result<Vec<f64>> {
    let cells = 180.0 / step_deg;
    if !(step_deg > 0.0) || (cells - cells.round()).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "grid step {step_deg}° must divide 180° evenly"
        )));
    }
    let n = cells.round() as usize;
    Ok((0..=n)
        .map(|i| (i as f64 * step_deg).to_radians().min(PI))
        .collect())
}

fn steering_columns(config: &RadarConfig, grid: &[f64], rx: bool) -> CMat {
    let len = if rx { config.num_rx } else { config.num_tx };
    let mut a = CMat::zeros(len, grid.len());
    for (j, &th) in grid.iter().enumerate() {
        let v = if rx {
            rx_steering(config, th)
        } else {
            tx_steering(config, th)
        };
        a.set_column(j, &v);
    }
    a
}

/// |wᴴ z| with w = Q⁻¹ (a_r(θ_r) ⊗ a_t(θ_t)) over the grid, for the cell
/// snapshot `z` (already compensated).
pub fn capon_spectrum(
    q: &HermitianMatrix,
    snapshot: &CVec,
    config: &RadarConfig,
    grid_deg: f64,
) -> Result<SpatialSpectrum> {
    capon_spectrum_at(q, snapshot, config, grid_deg, f64::NAN)
}

fn capon_spectrum_at(
    q: &HermitianMatrix,
    snapshot: &CVec,
    config: &RadarConfig,
    grid_deg: f64,
    compensated_range_m: f64,
) -> Result<SpatialSpectrum> {
    let (m, n) = (config.num_tx, config.num_rx);
    if snapshot.len() != m * n {
        return Err(Error::Dimension {
            expected: m * n,
            got: snapshot.len(),
        });
    }
    let grid = angle_grid(grid_deg)?;
    // Q is Hermitian, so wᴴz = aᴴ Q⁻¹ z and one solve serves the whole grid.
    let u = q.solve(snapshot)?;
    let umat = CMat::from_fn(n, m, |rx, tx| u[rx * m + tx]);
    let at = steering_columns(config, &grid, false);
    let ar = steering_columns(config, &grid, true);
    let s = ar.adjoint() * (umat * at.conjugate());
    let power = DMatrix::from_fn(grid.len(), grid.len(), |it, ir| s[(ir, it)].norm());
    Ok(SpatialSpectrum::from_power(
        power,
        grid,
        compensated_range_m,
    ))
}

/// Capon power 1/(aᴴ Q⁻¹ a) over the grid.
pub fn capon_power_map(
    q: &HermitianMatrix,
    config: &RadarConfig,
    grid_deg: f64,
) -> Result<SpatialSpectrum> {
    let (m, n) = (config.num_tx, config.num_rx);
    let dim = m * n;
    let grid = angle_grid(grid_deg)?;
    let mut qinv = CMat::zeros(dim, dim);
    for j in 0..dim {
        let mut e = CVec::zeros(dim);
        e[j] = C64::from(1.0);
        qinv.set_column(j, &q.solve(&e)?);
    }
    let at = steering_columns(config, &grid, false);
    let ar = steering_columns(config, &grid, true);
    let mut power = DMatrix::zeros(grid.len(), grid.len());
    for it in 0..grid.len() {
        let a = at.column(it);
        let c = CMat::from_fn(n, n, |r1, r2| {
            let mut acc = C64::from(0.0);
            for t1 in 0..m {
                for t2 in 0..m {
                    acc += a[t1].conj() * qinv[(r1 * m + t1, r2 * m + t2)] * a[t2];
                }
            }
            acc
        });
        let quad = ar.adjoint() * &c * &ar;
        for ir in 0..grid.len() {
            power[(it, ir)] = 1.0 / quad[(ir, ir)].re;
        }
    }
    Ok(SpatialSpectrum::from_power(power, grid, f64::NAN))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Real,
    False,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Real => "real",
            Label::False => "false",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellLabel {
    pub range_m: f64,
    pub label: Label,
    pub theta_t: f64,
    pub theta_r: f64,
    pub peak_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminationReport {
    pub labels: Vec<CellLabel>,
    pub tolerance_rad: f64,
}

impl DiscriminationReport {
    pub fn label_near(&self, range_m: f64, tol_m: f64) -> Option<Label> {
        self.labels
            .iter()
            .find(|c| (c.range_m - range_m).abs() <= tol_m)
            .map(|c| c.label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscriminationParams {
    pub grid_deg: f64,
    /// Defaults to one grid step.
    pub angle_tolerance_deg: Option<f64>,
}

impl Default for DiscriminationParams {
    fn default() -> Self {
        Self {
            grid_deg: 0.5,
            angle_tolerance_deg: None,
        }
    }
}

impl DiscriminationParams {
    pub fn tolerance_rad(&self) -> f64 {
        self.angle_tolerance_deg
            .unwrap_or(self.grid_deg)
            .to_radians()
    }
}

/// Raw covariance of every snapshot and the loading used for it.
fn raw_covariance(cube: &EchoCube) -> Result<(HermitianMatrix, f64)> {
    let raw = HermitianMatrix::from_snapshots(cube.config.virtual_channels(), cube.snapshots())?;
    let eps = default_loading(raw.values());
    Ok((raw, eps))
}

fn cell_spectrum(
    cube: &EchoCube,
    raw: &HermitianMatrix,
    eps: f64,
    integrated: &CMat,
    cell_range_m: f64,
    hypothesis_range_m: f64,
    grid_deg: f64,
) -> Result<SpatialSpectrum> {
    let g = compensation_vector(&cube.config, hypothesis_range_m);
    let q = raw.scaled(&g).with_loading(eps);
    let bin = nearest_bin(&cube.range_axis_m, cell_range_m)?;
    let z = integrated.column(bin).component_mul(&g);
    capon_spectrum_at(&q, &z, &cube.config, grid_deg, hypothesis_range_m)
}

/// Spectrum of the cell nearest `cell_range_m` compensated as if its
/// content sat at `hypothesis_range_m`. With Δf = 0 the compensation is
/// trivial and the result does not depend on the hypothesis.
pub fn compensated_cell_spectrum(
    cube: &EchoCube,
    cell_range_m: f64,
    hypothesis_range_m: f64,
    grid_deg: f64,
) -> Result<SpatialSpectrum> {
    let (raw, eps) = raw_covariance(cube)?;
    cell_spectrum(
        cube,
        &raw,
        eps,
        &cube.integrated(),
        cell_range_m,
        hypothesis_range_m,
        grid_deg,
    )
}

/// Labels each range cell and returns the spectra that decided it.
pub fn discriminate_with_spectra(
    cube: &EchoCube,
    ranges_m: &[f64],
    params: &DiscriminationParams,
) -> Result<(DiscriminationReport, Vec<SpatialSpectrum>)> {
    let tol = params.tolerance_rad();
    // Compensation is a diagonal congruence, so the raw covariance is
    // estimated once and re-referenced per cell.
    let (raw, eps) = raw_covariance(cube)?;
    let integrated = cube.integrated();
    let mut labels = Vec::with_capacity(ranges_m.len());
    let mut spectra = Vec::with_capacity(ranges_m.len());
    for &r in ranges_m {
        let spec = cell_spectrum(cube, &raw, eps, &integrated, r, r, params.grid_deg)?;
        let (tt, tr) = spec.argmax;
        let label = if (tt - tr).abs() <= tol + 1e-12 {
            Label::Real
        } else {
            Label::False
        };
        labels.push(CellLabel {
            range_m: r,
            label,
            theta_t: tt,
            theta_r: tr,
            peak_power: spec.peak,
        });
        spectra.push(spec);
    }
    Ok((
        DiscriminationReport {
            labels,
            tolerance_rad: tol,
        },
        spectra,
    ))
}

/// Labels each range cell as real or multipath.
pub fn discriminate(
    cube: &EchoCube,
    ranges_m: &[f64],
    params: &DiscriminationParams,
) -> Result<DiscriminationReport> {
    Ok(discriminate_with_spectra(cube, ranges_m, params)?.0)
}
