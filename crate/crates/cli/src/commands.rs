//! The four subcommands. Each resolves the scenario, runs, and writes a run
//! directory ending with `scenario.toml` and `manifest.toml`.

use std::path::Path;

use fdamimo::array::virtual_steering;
use fdamimo::detection::{
    beamform_profile, cfar_ca, detect_looks, matched_weights, CfarParams, DetectionSet,
    RangeProfile,
};
use fdamimo::discrimination::{discriminate_with_spectra, SpatialSpectrum};
use fdamimo::echo::{simulate_echo, EchoCube, PathKind};
use fdamimo::mitigation::{
    component_peak, linspace, mitigation_objective, run_algorithm2, sweep_objective,
};
use fdamimo::scenario::Scenario;
use fdamimo::{CVec, Error, Result, Scene, C64};

use crate::output::{db, f, RunDir};
use crate::{CommonArgs, SweepArgs};

const EXAMPLE1: &str = include_str!("../../../scenarios/example1.toml");
const EXAMPLE2: &str = include_str!("../../../scenarios/example2.toml");

struct Resolved {
    sc: Scenario,
    text: String,
    source: String,
}

/// Reads the scenario (a path, or a bundled name when no such file exists)
/// and applies the command-line overrides.
fn resolve(args: &CommonArgs) -> Result<Resolved> {
    let path = Path::new(&args.scenario);
    let (text, source) = if path.exists() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read scenario {}: {e}", path.display())))?;
        (text, path.display().to_string())
    } else {
        let text = match args.scenario.as_str() {
            "example1" => EXAMPLE1,
            "example2" => EXAMPLE2,
            other => return Err(Error::Config(format!("scenario {other} does not exist"))),
        };
        (text.to_string(), format!("builtin:{}", args.scenario))
    };
    let mut sc = Scenario::from_toml_str(&text)?;
    if let Some(seed) = args.seed {
        sc.scene.seed = seed;
    }
    if let Some(g) = args.grid_deg {
        sc.discrimination.grid_deg = g;
    }
    if let Some(p) = args.pfa {
        sc.cfar.pfa = p;
    }
    sc.validate()?;
    Ok(Resolved { sc, text, source })
}

fn uniform(m: usize) -> CVec {
    CVec::from_element(m, C64::from(1.0))
}

fn looks(scene: &Scene) -> Vec<(f64, f64)> {
    scene
        .targets
        .iter()
        .map(|t| (t.range_m, t.angle_rad))
        .collect()
}

fn simulate_at(sc: &Scenario, freq_increment_hz: f64) -> Result<(EchoCube, Scene)> {
    let scene = sc.scene()?;
    let cfg = sc.radar_config().with_freq_increment(freq_increment_hz);
    let ws = sc.waveform_set()?;
    let cube = simulate_echo(
        &scene,
        &cfg,
        &ws,
        &uniform(cfg.num_tx),
        &sc.echo_params(),
        sc.scene.seed,
    )?;
    Ok((cube, scene))
}

/// One power and one CFAR threshold column per look.
fn write_profiles(
    out: &mut RunDir,
    name: &str,
    profiles: &[RangeProfile],
    cfar: &CfarParams,
) -> Result<()> {
    let mut header = vec!["range_m".to_string()];
    for i in 0..profiles.len() {
        header.push(format!("power_db_target{i}"));
        header.push(format!("threshold_db_target{i}"));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut columns = Vec::with_capacity(2 * profiles.len());
    for p in profiles {
        columns.push(
            p.absolute_db()
                .iter()
                .map(|v| format!("{v:.4}"))
                .collect::<Vec<_>>(),
        );
        let det = cfar_ca(p, cfar)?;
        columns.push(
            det.threshold
                .iter()
                .map(|&t| if t.is_nan() { String::new() } else { db(t) })
                .collect(),
        );
    }
    let axis = &profiles[0].range_axis_m;
    let rows = (0..axis.len()).map(|k| {
        let mut row = vec![f(axis[k])];
        row.extend(columns.iter().map(|c| c[k].clone()));
        row
    });
    out.csv(name, &header, rows)
}

/// Key/value description of a cube written next to its binary.
fn write_cube_summary(out: &mut RunDir, name: &str, cube: &EchoCube) -> Result<()> {
    let rows = [
        ("num_tx", cube.config.num_tx.to_string()),
        ("num_rx", cube.config.num_rx.to_string()),
        ("bins", cube.num_bins().to_string()),
        ("pulses", cube.pulses.len().to_string()),
        ("sample_rate_hz", f(cube.sample_rate_hz)),
        ("first_range_m", f(cube.range_axis_m[0])),
        ("bin_spacing_m", f(cube.bin_spacing_m())),
        ("freq_increment_hz", f(cube.config.freq_increment_hz)),
        ("seed", cube.rng_seed.to_string()),
    ];
    out.csv(
        name,
        &["key", "value"],
        rows.into_iter().map(|(k, v)| vec![k.to_string(), v]),
    )
}

fn write_detections(out: &mut RunDir, name: &str, det: &DetectionSet) -> Result<()> {
    let rows = (0..det.len()).map(|i| {
        vec![
            det.bins[i].to_string(),
            f(det.ranges_m[i]),
            f(det.refined_ranges_m[i]),
        ]
    });
    out.csv(name, &["bin", "range_m", "refined_range_m"], rows)
}

pub fn simulate(args: &CommonArgs) -> Result<()> {
    let r = resolve(args)?;
    let mut out = RunDir::create(&args.out)?;
    let mut runs = vec![("fda", r.sc.radar.freq_increment_hz)];
    if r.sc.output.mimo_baseline {
        runs.push(("mimo", 0.0));
    }
    for (tag, df) in runs {
        let (cube, scene) = simulate_at(&r.sc, df)?;
        let (profiles, det) = detect_looks(&cube, &looks(&scene), &r.sc.cfar_params())?;
        write_profiles(
            &mut out,
            &format!("profile_{tag}.csv"),
            &profiles,
            &r.sc.cfar_params(),
        )?;
        write_detections(&mut out, &format!("detections_{tag}.csv"), &det)?;
        if r.sc.output.write_cube {
            out.binary(&format!("cube_{tag}.bin"), |w| cube.write_binary(w))?;
            write_cube_summary(&mut out, &format!("cube_{tag}.csv"), &cube)?;
        }
    }
    let ws = r.sc.waveform_set()?;
    let rows = (0..ws.num_tx()).flat_map(|m| {
        let ws = &ws;
        (0..ws.len()).map(move |k| {
            let v = ws.samples[(m, k)];
            vec![
                m.to_string(),
                k.to_string(),
                format!("{:.9e}", v.re),
                format!("{:.9e}", v.im),
            ]
        })
    });
    out.csv(
        "waveforms.csv",
        &["tx_index", "sample_index", "re", "im"],
        rows,
    )?;
    out.finish("simulate", &r.source, &r.text, &r.sc)
}

/// Long-format spectrum in dB relative to its peak.
fn write_spectrum(out: &mut RunDir, name: &str, spec: &SpatialSpectrum) -> Result<()> {
    let degs: Vec<String> = spec
        .grid_rad
        .iter()
        .map(|g| format!("{:.3}", g.to_degrees()))
        .collect();
    let rows = (0..spec.power.nrows()).flat_map(|it| {
        let degs = &degs;
        (0..spec.power.ncols()).map(move |ir| {
            vec![
                degs[it].clone(),
                degs[ir].clone(),
                db(spec.power[(it, ir)] / spec.peak),
            ]
        })
    });
    out.csv(name, &["theta_t_deg", "theta_r_deg", "power_db"], rows)
}

pub fn discriminate(args: &CommonArgs) -> Result<()> {
    let r = resolve(args)?;
    let mut out = RunDir::create(&args.out)?;
    let (cube, scene) = simulate_at(&r.sc, r.sc.radar.freq_increment_hz)?;
    let (_, det) = detect_looks(&cube, &looks(&scene), &r.sc.cfar_params())?;
    write_detections(&mut out, "detections.csv", &det)?;
    let (report, spectra) =
        discriminate_with_spectra(&cube, &det.refined_ranges_m, &r.sc.discrimination_params())?;
    let rows = report.labels.iter().map(|c| {
        vec![
            f(c.range_m),
            c.label.as_str().to_string(),
            format!("{:.3}", c.theta_t.to_degrees()),
            format!("{:.3}", c.theta_r.to_degrees()),
            format!("{:.6e}", c.peak_power),
        ]
    });
    out.csv(
        "labels.csv",
        &[
            "range_m",
            "label",
            "theta_t_deg",
            "theta_r_deg",
            "peak_power",
        ],
        rows,
    )?;
    for (i, spec) in spectra.iter().enumerate() {
        write_spectrum(&mut out, &format!("spectra/cell{i:02}.csv"), spec)?;
    }
    out.finish("discriminate", &r.source, &r.text, &r.sc)
}

pub fn mitigate(args: &CommonArgs) -> Result<()> {
    let r = resolve(args)?;
    let sc = &r.sc;
    let mut out = RunDir::create(&args.out)?;
    let scene = sc.scene()?;
    let ws = sc.waveform_set()?;
    let params = sc.echo_params();
    let seed = sc.scene.seed;
    let df0 = sc.mitigation.initial_freq_increment_hz;
    let cfg = sc.radar_config().with_freq_increment(df0);
    let w0 = uniform(cfg.num_tx);
    let cube = simulate_echo(&scene, &cfg, &ws, &w0, &params, seed)?;
    let t = &scene.targets[0];
    let before_w = matched_weights(&virtual_steering(
        &cfg,
        t.range_m,
        t.angle_rad,
        t.angle_rad,
        None,
    ));

    // every re-acquisition draws fresh noise
    let mut acquisitions = 0u64;
    let res = run_algorithm2(&cube, &w0, &scene, &ws, &sc.algorithm2_options(), |c, w| {
        acquisitions += 1;
        simulate_echo(&scene, c, &ws, w, &params, seed + acquisitions)
    })?;
    let s = &res.solution;

    let before = beamform_profile(&cube, &before_w)?.absolute_db();
    let after = beamform_profile(&res.cube, &s.rx_weights)?.absolute_db();
    let rows = (0..cube.num_bins()).map(|k| {
        vec![
            f(cube.range_axis_m[k]),
            format!("{:.4}", before[k]),
            format!("{:.4}", after[k]),
        ]
    });
    out.csv("profiles.csv", &["range_m", "before_db", "after_db"], rows)?;

    let sweep = sweep_objective(
        &scene,
        &res.cube.config,
        &ws,
        &s.tx_weights,
        sc.mitigation.sweep_start_hz,
        sc.mitigation.sweep_stop_hz,
        sc.mitigation.sweep_steps,
    )?;
    out.csv(
        "sweep.csv",
        &["freq_increment_hz", "objective"],
        sweep.iter().map(|(x, g)| vec![f(*x), format!("{g:.9e}")]),
    )?;
    let trace = s
        .objective_trace
        .iter()
        .enumerate()
        .map(|(i, (x, g))| vec![i.to_string(), f(*x), format!("{g:.9e}")]);
    out.csv(
        "descent_trace.csv",
        &["iteration", "delta_f_hz", "objective"],
        trace,
    )?;
    out.csv(
        "sinr_trace.csv",
        &["round", "sinr_db"],
        s.sinr_trace
            .iter()
            .map(|(k, v)| vec![k.to_string(), format!("{v:.4}")]),
    )?;

    let weights = s
        .tx_weights
        .iter()
        .enumerate()
        .map(|(i, w)| ("tx", i, w))
        .chain(s.rx_weights.iter().enumerate().map(|(i, w)| ("rx", i, w)))
        .map(|(kind, i, w)| {
            vec![
                kind.to_string(),
                i.to_string(),
                format!("{:.9e}", w.re),
                format!("{:.9e}", w.im),
            ]
        });
    out.csv("weights.csv", &["kind", "index", "re", "im"], weights)?;

    let groups: [(&str, &[PathKind]); 3] = [
        ("direct", &[PathKind::Direct]),
        (
            "first_order",
            &[PathKind::FirstOrderTx, PathKind::FirstOrderRx],
        ),
        ("second_order", &[PathKind::SecondOrder]),
    ];
    let mut rows = Vec::new();
    for (name, kinds) in groups {
        let b = component_peak(&cube, &scene, &ws, &w0, &before_w, kinds, 2)?;
        let a = component_peak(
            &res.cube,
            &scene,
            &ws,
            &s.tx_weights,
            &s.rx_weights,
            kinds,
            2,
        )?;
        rows.push(vec![
            name.to_string(),
            db(b),
            db(a),
            format!("{:.4}", 10.0 * (a / b).log10()),
        ]);
    }
    out.csv(
        "component_peaks.csv",
        &["component", "before_db", "after_db", "change_db"],
        rows,
    )?;
    let summary = format!(
        "initial_freq_increment_hz = {df0:?}\nfinal_freq_increment_hz = {:?}\ndescent_converged = {}\nrounds = {}\n",
        s.freq_increment_hz,
        s.descent_converged,
        s.sinr_trace.len() - 1
    );
    out.text("summary.toml", &summary)?;
    out.finish("mitigate", &r.source, &r.text, sc)
}

pub fn sweep(args: &SweepArgs) -> Result<()> {
    let r = resolve(&args.common)?;
    let sc = &r.sc;
    let m = &sc.mitigation;
    let (start, stop, steps) = match args.param.as_str() {
        "freq_increment_hz" => (args.start.unwrap_or(m.sweep_start_hz), args.stop.unwrap_or(m.sweep_stop_hz), args.steps.unwrap_or(m.sweep_steps)),
        "reflection_magnitude" | "reflector_offset_m" => {
            let (s, e) = args
                .start
                .zip(args.stop)
                .ok_or_else(|| Error::Config(format!("--start and --stop are required for {}", args.param)))?;
            (s, e, args.steps.unwrap_or(m.sweep_steps))
        }
        other => {
            return Err(Error::Config(format!(
                "unknown sweep parameter {other}; expected freq_increment_hz, reflection_magnitude or reflector_offset_m"
            )))
        }
    };
    let grid = linspace(start, stop, steps).map_err(|e| Error::Config(e.to_string()))?;
    let ws = sc.waveform_set()?;
    let cfg = sc.radar_config();
    let w = uniform(cfg.num_tx);
    let mut rows = Vec::with_capacity(grid.len());
    for x in grid {
        let mut s = sc.clone();
        let mut df = cfg.freq_increment_hz;
        match args.param.as_str() {
            "freq_increment_hz" => df = x,
            "reflection_magnitude" => s.scene.reflection_magnitude = x,
            _ => s.scene.reflector_offset_m = x,
        }
        let g = mitigation_objective(df, &s.scene()?, &cfg, &ws, &w)?;
        rows.push(vec![f(x), format!("{g:.9e}")]);
    }
    let mut out = RunDir::create(&args.common.out)?;
    out.csv("sweep.csv", &[args.param.as_str(), "objective"], rows)?;
    out.finish("sweep", &r.source, &r.text, sc)
}
