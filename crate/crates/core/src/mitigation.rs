//! Multipath suppression: MPDR receive weights, eigen-based transmit
//! weights and a search over the frequency increment.
//!
//! The frequency increment is chosen by minimizing
//!
//! ```text
//! g(Δf) = ‖ă_tᴴ(r̄, θ) R*‖² + ‖ă_tᴴ(r̄, θ_s) R*‖² + |ρ|²‖ă_tᴴ(r_s, θ_s) R*‖²
//!       + tr(R) / (|η|²|ρ|²)
//! ```
//!
//! with `ă_t = w_F ⊙ a_t` and `R = R_ss(0; Δf)` the zero-lag transmit
//! correlation, which measures how much multipath energy survives the
//! transmit beam.

use crate::array::{kron, mirror_geometry, rx_steering, tx_range_angle_steering, virtual_steering};
use crate::detection::nearest_bin;
use crate::echo::{enumerate_paths, expected_cube, EchoCube, PathKind};
use crate::linalg::{eig_hermitian, HermitianMatrix};
use crate::waveform::WaveformSet;
use std::ops::RangeInclusive;

use crate::{CMat, CVec, Error, RadarConfig, Result, Scene, C64};

/// Sample covariance of the received snapshots and what produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    pub matrix: HermitianMatrix,
    pub snapshot_count: usize,
    pub freq_increment_hz: f64,
    pub tx_weights: Option<CVec>,
}

/// (1/K) Σ z zᴴ over every pulse and bin, with default loading.
pub fn received_covariance(cube: &EchoCube) -> Result<CovarianceEstimate> {
    let matrix = HermitianMatrix::from_snapshots(cube.num_channels(), cube.snapshots())?
        .with_default_loading();
    if !(matrix.trace() > 0.0) {
        return Err(Error::Numerical("covariance has zero trace".into()));
    }
    Ok(CovarianceEstimate {
        matrix,
        snapshot_count: cube.snapshot_count(),
        freq_increment_hz: cube.config.freq_increment_hz,
        tx_weights: None,
    })
}

/// Same as [`received_covariance`] restricted to the bins in `bins`.
pub fn received_covariance_gated(
    cube: &EchoCube,
    bins: RangeInclusive<usize>,
) -> Result<CovarianceEstimate> {
    if *bins.end() >= cube.num_bins() || bins.is_empty() {
        return Err(Error::Domain(format!(
            "bin gate {bins:?} does not fit {} bins",
            cube.num_bins()
        )));
    }
    let snaps = cube
        .pulses
        .iter()
        .flat_map(|p| bins.clone().map(move |k| p.column(k)));
    let matrix =
        HermitianMatrix::from_snapshots(cube.num_channels(), snaps)?.with_default_loading();
    if !(matrix.trace() > 0.0) {
        return Err(Error::Numerical("covariance has zero trace".into()));
    }
    Ok(CovarianceEstimate {
        matrix,
        snapshot_count: cube.pulses.len() * bins.count(),
        freq_increment_hz: cube.config.freq_increment_hz,
        tx_weights: None,
    })
}

/// Covariance of the gated snapshots once a known noise-free component
/// (`MN × L`, same for every pulse) is removed: the interference-plus-noise
/// covariance seen by that component.
pub fn interference_covariance(
    cube: &EchoCube,
    known: &CMat,
    bins: RangeInclusive<usize>,
) -> Result<CMat> {
    let dim = cube.num_channels();
    let mut acc = CMat::zeros(dim, dim);
    let mut count = 0usize;
    for p in &cube.pulses {
        for k in bins.clone() {
            let z = p.column(k) - known.column(k);
            acc.ger(C64::from(1.0), &z, &z.conjugate(), C64::from(1.0));
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Numerical("no snapshots".into()));
    }
    Ok(acc / C64::from(count as f64))
}

/// w = R⁻¹ă / (ăᴴ R⁻¹ ă).
pub fn mpdr_rx_weights(r: &CovarianceEstimate, steer: &CVec) -> Result<CVec> {
    if steer.iter().all(|x| x.norm() == 0.0) {
        return Err(Error::Domain("steering vector is zero".into()));
    }
    let u = r.matrix.solve(steer)?;
    let denom = steer.dotc(&u);
    if !(denom.norm() > 0.0) {
        return Err(Error::Numerical("ăᴴR⁻¹ă vanished".into()));
    }
    Ok(u / denom.conj())
}

/// ψ(w_F) = ăᴴ R⁻¹ ă for the virtual steering built with `tx_weights`.
pub fn psi(
    r: &CovarianceEstimate,
    config: &RadarConfig,
    range_m: f64,
    angle_rad: f64,
    tx_weights: &CVec,
) -> Result<f64> {
    let a = virtual_steering(config, range_m, angle_rad, angle_rad, Some(tx_weights));
    Ok(a.dotc(&r.matrix.solve(&a)?).re)
}

/// Response of the matched-filter bank to a direct return at its own delay:
/// a_r(θ) ⊗ (Rᵀ(0; Δf) (w_F ⊙ a_t(r, θ))). Equals the virtual steering
/// vector whenever R(0) = I.
pub fn effective_steering(
    config: &RadarConfig,
    ws: &WaveformSet,
    range_m: f64,
    angle_rad: f64,
    tx_weights: &CVec,
) -> CVec {
    let at = tx_range_angle_steering(config, range_m, angle_rad).component_mul(tx_weights);
    let r0 = ws.zero_lag(config.freq_increment_hz);
    kron(&rx_steering(config, angle_rad), &(r0.transpose() * at))
}

/// Rule for the closed-form transmit weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TxWeightRule {
    /// √M · P a_t / ‖P a_t‖ with P the projector onto the first transmit
    /// block of the principal eigenvector.
    #[default]
    Projection,
    /// Same, with the orthogonal complement of that block.
    Orthogonal,
    /// Principal eigenvector of Bᴴ R⁻¹ B with B = a_r ⊗ diag(a_t), which
    /// maximizes ψ exactly under the norm constraint.
    ExactMaximizer,
}

fn uniform(m: usize) -> CVec {
    CVec::from_element(m, C64::from(1.0))
}

fn scaled_to_sqrt_m(v: CVec) -> Result<CVec> {
    let norm = v.norm();
    if !(norm > 1e-12) {
        return Err(Error::Numerical(
            "transmit weight direction vanished".into(),
        ));
    }
    let m = v.len() as f64;
    Ok(v * C64::from(m.sqrt() / norm))
}

/// Transmit weights with ‖w_F‖₂ = √M. A flat eigenvalue spectrum means there
/// is nothing to steer away from and yields uniform weights.
pub fn optimal_tx_weights(
    r: &CovarianceEstimate,
    config: &RadarConfig,
    range_m: f64,
    angle_rad: f64,
    rule: TxWeightRule,
) -> Result<CVec> {
    let m = config.num_tx;
    let dim = config.virtual_channels();
    if r.matrix.dim() != dim {
        return Err(Error::Dimension {
            expected: dim,
            got: r.matrix.dim(),
        });
    }
    let at = tx_range_angle_steering(config, range_m, angle_rad);
    if rule == TxWeightRule::ExactMaximizer {
        let ar = rx_steering(config, angle_rad);
        let mut b = CMat::zeros(dim, m);
        for rx in 0..config.num_rx {
            for tx in 0..m {
                b[(rx * m + tx, tx)] = ar[rx] * at[tx];
            }
        }
        let mut rib = CMat::zeros(dim, m);
        for j in 0..m {
            rib.set_column(j, &r.matrix.solve(&b.column(j).into_owned())?);
        }
        let g = HermitianMatrix::new(b.adjoint() * rib)?;
        let (_, vecs) = eig_hermitian(&g)?;
        return scaled_to_sqrt_m(vecs.column(0).into_owned());
    }
    let (vals, vecs) = eig_hermitian(&r.matrix)?;
    if vals[0] - vals[dim - 1] <= 1e-9 * vals[0].abs() {
        return Ok(uniform(m));
    }
    let p = vecs.column(0).rows(0, m).into_owned();
    let pn2 = p.norm_squared();
    if pn2.sqrt() < 1e-12 {
        return Err(Error::Numerical(
            "principal eigenvector has no transmit component".into(),
        ));
    }
    let proj = &p * (p.dotc(&at) / pn2);
    let v = match rule {
        TxWeightRule::Projection => proj,
        _ => at - proj,
    };
    scaled_to_sqrt_m(v)
}

/// Zero-lag transmit correlation R_ss(0; Δf) of a waveform family.
pub trait TransmitCorrelation {
    fn zero_lag_correlation(&self, freq_increment_hz: f64) -> CMat;
}

impl TransmitCorrelation for WaveformSet {
    fn zero_lag_correlation(&self, freq_increment_hz: f64) -> CMat {
        self.zero_lag(freq_increment_hz)
    }
}

/// Perfectly orthogonal waveforms: R_ss(0) = I for every Δf.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdealOrthogonal {
    pub num_tx: usize,
}

impl TransmitCorrelation for IdealOrthogonal {
    fn zero_lag_correlation(&self, _freq_increment_hz: f64) -> CMat {
        CMat::identity(self.num_tx, self.num_tx)
    }
}

/// g(Δf) for the first target of the scene estimate. The scatter and
/// reflection magnitudes are taken from `scene` as given.
pub fn mitigation_objective<T: TransmitCorrelation + ?Sized>(
    freq_increment_hz: f64,
    scene: &Scene,
    config: &RadarConfig,
    corr: &T,
    tx_weights: &CVec,
) -> Result<f64> {
    if !(freq_increment_hz > 0.0 && freq_increment_hz < config.bandwidth_hz) {
        return Err(Error::Domain(format!(
            "Δf = {freq_increment_hz} Hz is outside (0, B_s)"
        )));
    }
    let target = scene
        .targets
        .first()
        .ok_or_else(|| Error::Config("scene estimate has no target".into()))?;
    let mirror = mirror_geometry(target.range_m, target.angle_rad, scene.reflector_offset_m)?;
    let cfg = config.with_freq_increment(freq_increment_hz);
    let r = corr.zero_lag_correlation(freq_increment_hz);
    let rc = r.conjugate();
    let term = |range: f64, angle: f64| {
        let a = tx_range_angle_steering(&cfg, range, angle).component_mul(tx_weights);
        (a.adjoint() * &rc).norm_squared()
    };
    let rho2 = scene.reflection_coeff.norm_sqr();
    let eta2 = target.scatter.norm_sqr() * config.total_power / config.num_tx as f64;
    let rb = mirror.equivalent_range_m;
    Ok(term(rb, target.angle_rad)
        + term(rb, mirror.angle_rad)
        + rho2 * term(mirror.range_m, mirror.angle_rad)
        + r.trace().re / (eta2 * rho2))
}

/// Settings of the projected descent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentOptions {
    /// Central-difference step as a fraction of the bandwidth.
    pub fd_step_ratio: f64,
    /// Distance kept from the band edges as a fraction of the bandwidth.
    pub margin_ratio: f64,
    /// Stop once an accepted step changes the objective by less than this.
    pub tol: f64,
    pub max_iter: usize,
    pub armijo_c: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
    /// First trial step as a fraction of the feasible interval.
    pub initial_move_ratio: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            fd_step_ratio: 1e-4,
            margin_ratio: 1e-3,
            tol: 1e-9,
            max_iter: 200,
            armijo_c: 1e-4,
            shrink: 0.5,
            max_backtracks: 50,
            initial_move_ratio: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentResult {
    pub x: f64,
    pub value: f64,
    /// Starting point followed by every accepted iterate.
    pub trace: Vec<(f64, f64)>,
    pub iterations: usize,
    pub converged: bool,
}

/// Central difference (f(x+h) − f(x−h)) / 2h.
pub fn central_difference<F: FnMut(f64) -> Result<f64>>(f: &mut F, x: f64, h: f64) -> Result<f64> {
    Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
}

/// Gradient descent on [lo, hi] with a finite-difference gradient, Armijo
/// backtracking and clipping. Accepted values never increase.
pub fn projected_descent<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    x0: f64,
    lo: f64,
    hi: f64,
    h: f64,
    opts: &DescentOptions,
) -> Result<DescentResult> {
    if !(lo < hi && x0 >= lo && x0 <= hi) {
        return Err(Error::Domain(format!("start {x0} is outside [{lo}, {hi}]")));
    }
    let mut x = x0;
    let mut fx = f(x)?;
    let mut trace = vec![(x, fx)];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        let grad = central_difference(&mut f, x, h)?;
        if !grad.is_finite() || grad == 0.0 {
            converged = true;
            break;
        }
        let mut t = opts.initial_move_ratio * (hi - lo) / grad.abs();
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let cand = (x - t * grad).clamp(lo, hi);
            if cand == x {
                break;
            }
            let fc = f(cand)?;
            if fc <= fx - opts.armijo_c * grad * (x - cand) {
                accepted = Some((cand, fc));
                break;
            }
            t *= opts.shrink;
        }
        let Some((xn, fxn)) = accepted else {
            converged = true;
            break;
        };
        iterations += 1;
        let change = (fx - fxn).abs();
        x = xn;
        fx = fxn;
        trace.push((x, fx));
        if change < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(DescentResult {
        x,
        value: fx,
        trace,
        iterations,
        converged,
    })
}

/// Feasible interval [δ, B_s − δ] and finite-difference step for Δf.
pub fn freq_bounds(config: &RadarConfig, opts: &DescentOptions) -> (f64, f64, f64) {
    let b = config.bandwidth_hz;
    (
        opts.margin_ratio * b,
        b - opts.margin_ratio * b,
        opts.fd_step_ratio * b,
    )
}

/// Minimizes g(Δf) from `start_hz`.
pub fn optimize_freq_increment<T: TransmitCorrelation + ?Sized>(
    scene: &Scene,
    config: &RadarConfig,
    corr: &T,
    tx_weights: &CVec,
    start_hz: f64,
    opts: &DescentOptions,
) -> Result<DescentResult> {
    let (lo, hi, h) = freq_bounds(config, opts);
    let f = |df: f64| mitigation_objective(df, scene, config, corr, tx_weights);
    projected_descent(f, start_hz.clamp(lo, hi), lo, hi, h, opts)
}

/// g on `steps` evenly spaced points from `start_hz` to `stop_hz`.
pub fn sweep_objective<T: TransmitCorrelation + ?Sized>(
    scene: &Scene,
    config: &RadarConfig,
    corr: &T,
    tx_weights: &CVec,
    start_hz: f64,
    stop_hz: f64,
    steps: usize,
) -> Result<Vec<(f64, f64)>> {
    linspace(start_hz, stop_hz, steps)?
        .into_iter()
        .map(|df| {
            Ok((
                df,
                mitigation_objective(df, scene, config, corr, tx_weights)?,
            ))
        })
        .collect()
}

/// Inclusive grid; a single step yields `start`.
pub fn linspace(start: f64, stop: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::Domain("at least one step is required".into()));
    }
    if steps == 1 {
        return Ok(vec![start]);
    }
    let d = (stop - start) / (steps - 1) as f64;
    Ok((0..steps).map(|i| start + d * i as f64).collect())
}

/// Noise-free direct-path cube of target `index` and the bin of its peak.
pub fn direct_component(
    cube: &EchoCube,
    scene: &Scene,
    ws: &WaveformSet,
    tx_weights: &CVec,
    index: usize,
) -> Result<(CMat, usize)> {
    let paths: Vec<_> = enumerate_paths(scene, &cube.config)?
        .into_iter()
        .filter(|p| p.kind == PathKind::Direct && p.target == index)
        .collect();
    let p = paths
        .first()
        .ok_or_else(|| Error::Config(format!("scene has no target {index}")))?;
    let bin = nearest_bin(&cube.range_axis_m, p.effective_range_m)?;
    Ok((
        expected_cube(&paths, &cube.config, ws, tx_weights, cube.first_bin),
        bin,
    ))
}

/// Peak of |wᴴ z|² for the noise-free returns of the given path kinds
/// (all targets), searched within ±`half_width` bins of each path's own
/// delay. Reads off how far a beamformer pushes a multipath return down at
/// the range where it would be detected.
pub fn component_peak(
    cube: &EchoCube,
    scene: &Scene,
    ws: &WaveformSet,
    tx_weights: &CVec,
    rx_weights: &CVec,
    kinds: &[PathKind],
    half_width: usize,
) -> Result<f64> {
    let paths: Vec<_> = enumerate_paths(scene, &cube.config)?
        .into_iter()
        .filter(|p| kinds.contains(&p.kind))
        .collect();
    let z = expected_cube(&paths, &cube.config, ws, tx_weights, cube.first_bin);
    let y: Vec<f64> = (z.adjoint() * rx_weights)
        .iter()
        .map(|v| v.norm_sqr())
        .collect();
    let mut best = 0.0f64;
    for p in &paths {
        let k = nearest_bin(&cube.range_axis_m, p.effective_range_m)?;
        let lo = k.saturating_sub(half_width);
        let hi = (k + half_width).min(y.len() - 1);
        best = y[lo..=hi].iter().cloned().fold(best, f64::max);
    }
    Ok(best)
}

/// |wᴴs|² / (wᴴ R_in w) in dB.
pub fn output_sinr_db(w: &CVec, interference: &CMat, signal: &CVec) -> Result<f64> {
    let num = w.dotc(signal).norm_sqr();
    let den = w.dotc(&(interference * w)).re;
    if !(den > 0.0) {
        return Err(Error::Numerical(
            "interference-plus-noise power is not positive".into(),
        ));
    }
    Ok(10.0 * (num / den).log10())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MitigationSolution {
    pub rx_weights: CVec,
    pub tx_weights: CVec,
    pub freq_increment_hz: f64,
    /// (round, SINR dB); round 0 is the initial acquisition.
    pub sinr_trace: Vec<(usize, f64)>,
    /// (Δf, g) of every accepted descent iterate across rounds.
    pub objective_trace: Vec<(f64, f64)>,
    pub descent_converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Algorithm2Options {
    pub rounds: usize,
    pub rule: TxWeightRule,
    pub descent: DescentOptions,
    /// Target of the scene estimate the weights protect.
    pub target: usize,
    /// Snapshots for the receive covariance come from the bins just past the
    /// direct return up to the second-order return, widened by this many
    /// bins. Leaving the direct lobe out keeps MPDR from nulling the target
    /// when its steering is imperfect. `None` uses the whole receive window.
    pub gate_margin_bins: Option<usize>,
}

impl Default for Algorithm2Options {
    fn default() -> Self {
        Self {
            rounds: 1,
            rule: TxWeightRule::default(),
            descent: DescentOptions::default(),
            target: 0,
            gate_margin_bins: Some(2),
        }
    }
}

/// Solution plus the last acquisition and its covariance.
#[derive(Debug, Clone)]
pub struct Algorithm2Output {
    pub solution: MitigationSolution,
    pub cube: EchoCube,
    pub covariance: CovarianceEstimate,
}

/// Alternates transmit weights, frequency increment and receive weights.
///
/// `cube` was acquired with `initial_tx` at `cube.config`. Each round picks
/// w_F from the latest covariance, descends on g(Δf) from the current Δf,
/// calls `acquire(config, w_F)` for a fresh cube and recomputes MPDR weights.
pub fn run_algorithm2<A>(
    cube: &EchoCube,
    initial_tx: &CVec,
    scene_estimate: &Scene,
    ws: &WaveformSet,
    opts: &Algorithm2Options,
    mut acquire: A,
) -> Result<Algorithm2Output>
where
    A: FnMut(&RadarConfig, &CVec) -> Result<EchoCube>,
{
    let target = scene_estimate
        .targets
        .get(opts.target)
        .ok_or_else(|| Error::Config(format!("scene estimate has no target {}", opts.target)))?
        .clone();
    let focus = Scene {
        targets: vec![target.clone()],
        ..scene_estimate.clone()
    };
    let (range, angle) = (target.range_m, target.angle_rad);

    // The transmit rule projects onto the principal eigenvector of the
    // whole-window covariance, where the target return dominates.
    let evaluate = |cube: &EchoCube, w_f: &CVec| -> Result<(CovarianceEstimate, CVec, f64)> {
        let gate = match opts.gate_margin_bins {
            Some(margin) => {
                let cells = test_cells(cube, &focus)?;
                let lo = cells[0] + margin + 1;
                let hi = (cells.iter().max().unwrap() + margin).min(cube.num_bins() - 1);
                lo..=hi
            }
            None => 0..=cube.num_bins() - 1,
        };
        let mut rx_cov = received_covariance_gated(cube, gate.clone())?;
        rx_cov.tx_weights = Some(w_f.clone());
        let steer = effective_steering(&cube.config, ws, range, angle, w_f);
        let w_r = mpdr_rx_weights(&rx_cov, &steer)?;
        let (direct, peak) = direct_component(cube, &focus, ws, w_f, 0)?;
        let rin = interference_covariance(cube, &direct, gate)?;
        let sinr = output_sinr_db(&w_r, &rin, &direct.column(peak).into_owned())?;
        Ok((rx_cov, w_r, sinr))
    };

    let mut current = cube.clone();
    let mut w_f = initial_tx.clone();
    let (mut cov, mut w_r, sinr) = evaluate(&current, &w_f)?;
    let mut sinr_trace = vec![(0, sinr)];
    let mut objective_trace = Vec::new();
    let mut converged = true;
    for round in 1..=opts.rounds {
        let cfg = current.config.clone();
        let full = received_covariance(&current)?;
        w_f = optimal_tx_weights(&full, &cfg, range, angle, opts.rule)?;
        let res =
            optimize_freq_increment(&focus, &cfg, ws, &w_f, cfg.freq_increment_hz, &opts.descent)?;
        converged &= res.converged;
        objective_trace.extend(res.trace.iter().copied());
        let next_cfg = cfg.with_freq_increment(res.x);
        current = acquire(&next_cfg, &w_f)?;
        let (c, w, sinr) = evaluate(&current, &w_f)?;
        cov = c;
        w_r = w;
        sinr_trace.push((round, sinr));
    }
    Ok(Algorithm2Output {
        solution: MitigationSolution {
            rx_weights: w_r,
            tx_weights: w_f,
            freq_increment_hz: current.config.freq_increment_hz,
            sinr_trace,
            objective_trace,
            descent_converged: converged,
        },
        cube: current,
        covariance: cov,
    })
}

/// Bins of the direct, first-order and second-order returns of the first target.
pub fn test_cells(cube: &EchoCube, scene: &Scene) -> Result<[usize; 3]> {
    let t = scene
        .targets
        .first()
        .ok_or_else(|| Error::Config("scene has no target".into()))?;
    let m = mirror_geometry(t.range_m, t.angle_rad, scene.reflector_offset_m)?;
    let bin = |r: f64| nearest_bin(&cube.range_axis_m, r);
    Ok([bin(t.range_m)?, bin(m.equivalent_range_m)?, bin(m.range_m)?])
}

/// Energy over the three test cells when cross terms between paths are
/// ignored:
/// |η|²N{‖ă_tᴴ(r,θ)R*‖² + |ρ|²‖ă_tᴴ(r̄,θ)R*‖² + |ρ|²‖ă_tᴴ(r̄,θ_s)R*‖² + |ρ|⁴‖ă_tᴴ(r_s,θ_s)R*‖²}
/// plus the noise of the three cells. Each path uses R at its offset from
/// the centre of its cell, so a path straddling two bins loses the energy
/// the sampled cube loses; on-grid paths use R(0). `first_bin` is the
/// absolute sample index of bin 0 of the receive window.
pub fn test_cell_energy_model(
    config: &RadarConfig,
    scene: &Scene,
    ws: &WaveformSet,
    tx_weights: &CVec,
    first_bin: i64,
) -> Result<f64> {
    let table = ws.ambiguity_table(config.freq_increment_hz);
    let mut total = 0.0;
    for p in enumerate_paths(scene, config)?
        .iter()
        .filter(|p| p.target == 0)
    {
        let d = p.delay_s * ws.sample_rate_hz - first_bin as f64;
        let offset = d.round_ties_even() - d;
        let rc = table
            .interpolated(offset)
            .ok_or_else(|| Error::Numerical("path offset outside the ambiguity table".into()))?
            .conjugate();
        let at = tx_range_angle_steering(config, p.effective_range_m, p.tx_angle)
            .component_mul(tx_weights);
        total += p.amplitude.norm_sqr() * (at.adjoint() * &rc).norm_squared();
    }
    let n = config.num_rx as f64;
    let r0 = ws.zero_lag(config.freq_increment_hz);
    let noise = scene.noise_power / ws.len() as f64 * r0.trace().re * n;
    Ok(n * total + 3.0 * noise)
}

/// Measured counterpart of [`test_cell_energy_model`]: Σ over the test
/// cells of the pulse-averaged ‖z‖².
pub fn test_cell_energy(cube: &EchoCube, scene: &Scene) -> Result<f64> {
    let cells = test_cells(cube, scene)?;
    let mut total = 0.0;
    for p in &cube.pulses {
        for &k in &cells {
            total += p.column(k).norm_squared();
        }
    }
    Ok(total / cube.pulses.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_noise_mpdr_is_matched_filter() {
        let c = RadarConfig::half_wavelength(3, 2, 10e9);
        let a = virtual_steering(&c, 1000.0, 1.0, 1.0, None);
        let r = CovarianceEstimate {
            matrix: HermitianMatrix::new(CMat::identity(6, 6) * C64::from(2.0)).unwrap(),
            snapshot_count: 1,
            freq_increment_hz: 0.0,
            tx_weights: None,
        };
        let w = mpdr_rx_weights(&r, &a).unwrap();
        assert!((w - &a / C64::from(6.0)).norm() < 1e-12);
    }

    #[test]
    fn flat_covariance_gives_uniform_tx() {
        let c = RadarConfig::half_wavelength(3, 2, 10e9);
        let r = CovarianceEstimate {
            matrix: HermitianMatrix::new(CMat::identity(6, 6)).unwrap(),
            snapshot_count: 1,
            freq_increment_hz: 0.0,
            tx_weights: None,
        };
        let w = optimal_tx_weights(&r, &c, 1000.0, 1.0, TxWeightRule::Projection).unwrap();
        assert_eq!(w, uniform(3));
    }

    #[test]
    fn linspace_edges() {
        assert_eq!(linspace(1.0, 2.0, 1).unwrap(), vec![1.0]);
        assert_eq!(linspace(0.0, 1.0, 3).unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(linspace(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn descent_finds_parabola_minimum() {
        let r = projected_descent(
            |x| Ok((x - 3.0).powi(2)),
            8.0,
            0.0,
            10.0,
            1e-4,
            &DescentOptions::default(),
        )
        .unwrap();
        assert!((r.x - 3.0).abs() < 1e-3, "{}", r.x);
        assert!(r.trace.windows(2).all(|w| w[1].1 <= w[0].1));
    }

    #[test]
    fn descent_respects_bounds() {
        let r =
            projected_descent(Ok, 5.0, 1.0, 10.0, 1e-4, &DescentOptions::default()).unwrap();
        assert_eq!(r.x, 1.0);
    }
}
