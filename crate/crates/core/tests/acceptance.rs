//! End-to-end acceptance criteria on the two bundled scenarios. Prints one
//! PASS/FAIL line per criterion and exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::Instant;

use fdamimo::array::{mirror_geometry, virtual_steering};
use fdamimo::detection::{beamform_profile, detect_looks, matched_weights};
use fdamimo::discrimination::{
    compensate, compensated_cell_spectrum, discriminate, discriminate_with_spectra, Label,
};
use fdamimo::echo::{noise_covariance, simulate_echo, EchoCube, PathKind};
use fdamimo::linalg::{eig_hermitian, trace_inverse_sum, HermitianMatrix};
use fdamimo::mitigation::{
    central_difference, component_peak, mitigation_objective, mpdr_rx_weights, optimal_tx_weights,
    optimize_freq_increment, received_covariance, run_algorithm2, sweep_objective, TxWeightRule,
};
use fdamimo::scenario::Scenario;
use fdamimo::{CMat, CVec, NoiseModel, Scene, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn scenario(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name);
    Scenario::load(&path).expect("bundled scenario loads")
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn uniform(m: usize) -> CVec {
    CVec::from_element(m, C64::from(1.0))
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn simulate(sc: &Scenario, freq_increment_hz: f64, seed: u64) -> (EchoCube, Scene) {
    let scene = sc.scene().unwrap();
    let cfg = sc.radar_config().with_freq_increment(freq_increment_hz);
    let ws = sc.waveform_set().unwrap();
    let cube = simulate_echo(
        &scene,
        &cfg,
        &ws,
        &uniform(cfg.num_tx),
        &sc.echo_params(),
        seed,
    )
    .unwrap();
    (cube, scene)
}

fn looks(scene: &Scene) -> Vec<(f64, f64)> {
    scene
        .targets
        .iter()
        .map(|t| (t.range_m, t.angle_rad))
        .collect()
}

fn ac1_geometry() -> Outcome {
    let m = mirror_geometry(2000.0, 70f64.to_radians(), 20.0).map_err(|e| e.to_string())?;
    let ts = m.angle_rad.to_degrees();
    let ok = (2013.0..=2015.0).contains(&m.range_m)
        && (110.8..=111.3).contains(&ts)
        && (2006.5..=2007.5).contains(&m.equivalent_range_m);
    check(
        ok,
        format!(
            "r_s = {:.3} m, θ_s = {:.3}°, r̄ = {:.3} m",
            m.range_m, ts, m.equivalent_range_m
        ),
    )
}

fn ac2_detection() -> Outcome {
    let sc = scenario("example1.toml");
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, df) in [("MIMO", 0.0), ("FDA-MIMO", sc.radar.freq_increment_hz)] {
        let (cube, scene) = simulate(&sc, df, 0);
        let (profiles, det) = detect_looks(&cube, &looks(&scene), &sc.cfar_params()).unwrap();
        let prof = &profiles[0];
        let direct = prof.peak_near(2000.0, 2).unwrap();
        let second = prof.power[prof.bin_of(2014.03).unwrap()];
        let sep = db(direct / second);
        let hit = det.contains_near(2000.0, 5.0) && det.contains_near(2007.0, 5.0);
        ok &= hit && sep >= 10.0;
        let ranges: Vec<String> = det
            .refined_ranges_m
            .iter()
            .map(|r| format!("{r:.1}"))
            .collect();
        notes.push(format!(
            "{name}: detections [{}], 2014 m bin {sep:.1} dB below direct",
            ranges.join(", ")
        ));
    }
    check(ok, notes.join("; "))
}

fn ac3_discrimination() -> Outcome {
    let sc = scenario("example1.toml");
    let params = sc.discrimination_params();
    let step = params.grid_deg.to_radians();
    let (cube, scene) = simulate(&sc, sc.radar.freq_increment_hz, 0);
    let (_, spectra) = discriminate_with_spectra(&cube, &[2000.0, 2007.0], &params).unwrap();
    let (tt, tr) = spectra[0].argmax;
    let target = 70f64.to_radians();
    let direct_ok = (tt - target).abs() <= step + 1e-9 && (tr - target).abs() <= step + 1e-9;
    let (gt, gr) = spectra[1].argmax;
    let ghost_ok = (gt - gr).abs() > params.tolerance_rad() + 1e-12;

    let (_, det) = detect_looks(&cube, &looks(&scene), &sc.cfar_params()).unwrap();
    let report = discriminate(&cube, &det.refined_ranges_m, &params).unwrap();
    let labels_ok = report.label_near(2000.0, 3.0) == Some(Label::Real)
        && report.label_near(2007.0, 3.0) == Some(Label::False);

    let (mimo, _) = simulate(&sc, 0.0, 0);
    let mut diff = 0.0f64;
    for cell in [2000.0, 2007.0] {
        let base = compensated_cell_spectrum(&mimo, cell, 2000.0, params.grid_deg).unwrap();
        for hyp in [2007.0, 2014.0] {
            let s = compensated_cell_spectrum(&mimo, cell, hyp, params.grid_deg).unwrap();
            diff = diff.max((&s.power - &base.power).abs().max());
        }
    }
    let ok = direct_ok && ghost_ok && labels_ok && diff <= 1e-12;
    let table: Vec<String> = report
        .labels
        .iter()
        .map(|c| format!("{:.1} m {}", c.range_m, c.label.as_str()))
        .collect();
    check(
        ok,
        format!(
            "2000 m argmax ({:.1}°, {:.1}°); 2007 m argmax ({:.1}°, {:.1}°); labels [{}]; MIMO spectra max diff {diff:.1e}",
            tt.to_degrees(),
            tr.to_degrees(),
            gt.to_degrees(),
            gr.to_degrees(),
            table.join(", ")
        ),
    )
}

fn first_order_level(cube: &EchoCube, scene: &Scene) -> f64 {
    let t = &scene.targets[0];
    let rb = mirror_geometry(t.range_m, t.angle_rad, scene.reflector_offset_m)
        .unwrap()
        .equivalent_range_m;
    let steer = virtual_steering(&cube.config, t.range_m, t.angle_rad, t.angle_rad, None);
    let prof = beamform_profile(cube, &matched_weights(&steer)).unwrap();
    db(prof.peak_near(rb, 2).unwrap() / prof.peak_near(t.range_m, 2).unwrap())
}

fn ac4_suppression_advantage() -> Outcome {
    let sc = scenario("example1.toml");
    let (mut fda, mut mimo) = (0.0, 0.0);
    let seeds = 20;
    for seed in 0..seeds {
        let (c, s) = simulate(&sc, sc.radar.freq_increment_hz, seed);
        fda += first_order_level(&c, &s);
        let (c, s) = simulate(&sc, 0.0, seed);
        mimo += first_order_level(&c, &s);
    }
    let (fda, mimo) = (fda / seeds as f64, mimo / seeds as f64);
    check(
        mimo - fda >= 5.0,
        format!("first-order peak relative to direct over {seeds} seeds: FDA-MIMO {fda:.1} dB, MIMO {mimo:.1} dB, advantage {:.1} dB", mimo - fda),
    )
}

fn ac5_mitigation() -> Outcome {
    let sc = scenario("example1.toml");
    let scene = sc.scene().unwrap();
    let ws = sc.waveform_set().unwrap();
    let params = sc.echo_params();
    let df0 = sc.mitigation.initial_freq_increment_hz;
    let cfg = sc.radar_config().with_freq_increment(df0);
    let w0 = uniform(cfg.num_tx);
    let seed = sc.scene.seed;
    let cube = simulate_echo(&scene, &cfg, &ws, &w0, &params, seed).unwrap();
    let t = &scene.targets[0];
    let steer = virtual_steering(&cfg, t.range_m, t.angle_rad, t.angle_rad, None);
    let before_w = matched_weights(&steer);
    let opts = sc.algorithm2_options();
    let out = run_algorithm2(&cube, &w0, &scene, &ws, &opts, |c, w| {
        simulate_echo(&scene, c, &ws, w, &params, seed + 1)
    })
    .map_err(|e| e.to_string())?;
    let s = &out.solution;
    let groups: [(&str, Vec<PathKind>); 3] = [
        ("direct", vec![PathKind::Direct]),
        (
            "first-order",
            vec![PathKind::FirstOrderTx, PathKind::FirstOrderRx],
        ),
        ("second-order", vec![PathKind::SecondOrder]),
    ];
    let mut levels = Vec::new();
    for (_, kinds) in &groups {
        let before = db(component_peak(&cube, &scene, &ws, &w0, &before_w, kinds, 2).unwrap());
        let after = db(component_peak(
            &out.cube,
            &scene,
            &ws,
            &s.tx_weights,
            &s.rx_weights,
            kinds,
            2,
        )
        .unwrap());
        levels.push((before, after));
    }
    let direct_ok = (levels[0].1 - levels[0].0).abs() <= 0.5;
    let first_ok = levels[1].0 - levels[1].1 >= 8.0;
    let second_ok = levels[2].0 - levels[2].1 >= 8.0;
    let monotone = s.sinr_trace.windows(2).all(|w| w[1].1 >= w[0].1);
    let lv: Vec<String> = groups
        .iter()
        .zip(&levels)
        .map(|((name, _), (b, a))| format!("{name} {b:.1} -> {a:.1} dB"))
        .collect();
    let trace: Vec<String> = s
        .sinr_trace
        .iter()
        .map(|(_, v)| format!("{v:.2}"))
        .collect();
    check(
        direct_ok && first_ok && second_ok && monotone,
        format!(
            "Δf {:.2} -> {:.2} MHz; {}; SINR trace [{}] dB; direct {}, first-order {}, second-order {}, SINR {}",
            df0 / 1e6,
            s.freq_increment_hz / 1e6,
            lv.join(", "),
            trace.join(", "),
            ok_word(direct_ok),
            ok_word(first_ok),
            ok_word(second_ok),
            if monotone { "non-decreasing" } else { "decreasing" }
        ),
    )
}

fn ok_word(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "short"
    }
}

fn ac6_descent_vs_sweep() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for seed in 0..3u64 {
        let mut sc = scenario("example1.toml");
        sc.waveform.seed = seed;
        let ws = sc.waveform_set().unwrap();
        let scene = sc.scene().unwrap();
        let cfg = sc.radar_config();
        let w = uniform(cfg.num_tx);
        let opts = sc.algorithm2_options().descent;
        let res = optimize_freq_increment(
            &scene,
            &cfg,
            &ws,
            &w,
            sc.mitigation.initial_freq_increment_hz,
            &opts,
        )
        .unwrap();
        let sweep = sweep_objective(&scene, &cfg, &ws, &w, 0.1e6, 39.9e6, 399).unwrap();
        let best =
            sweep.iter().cloned().fold(
                (f64::NAN, f64::INFINITY),
                |a, b| if b.1 < a.1 { b } else { a },
            );
        let gap = (res.x - best.0).abs();
        ok &= gap <= 2e6;
        notes.push(format!(
            "seed {seed}: descent {:.2} MHz, sweep min {:.1} MHz (gap {:.2} MHz)",
            res.x / 1e6,
            best.0 / 1e6,
            gap / 1e6
        ));
    }
    check(ok, notes.join("; "))
}

fn ac7_multi_target() -> Outcome {
    let sc = scenario("example2.toml");
    let params = sc.discrimination_params();
    let mut notes = Vec::new();
    let mut ok = true;
    for seed in [0u64, 1, 2] {
        let (cube, scene) = simulate(&sc, sc.radar.freq_increment_hz, seed);
        let (_, det) = detect_looks(&cube, &looks(&scene), &sc.cfar_params()).unwrap();
        let mut ranges = det.refined_ranges_m.clone();
        let mut ghosts = Vec::new();
        for t in &scene.targets {
            let rb = mirror_geometry(t.range_m, t.angle_rad, scene.reflector_offset_m)
                .unwrap()
                .equivalent_range_m;
            if !ranges.iter().any(|r| (r - rb).abs() <= 1.0) {
                ranges.push(rb);
            }
            ghosts.push(rb);
        }
        let report = discriminate(&cube, &ranges, &params).unwrap();
        let real = scene
            .targets
            .iter()
            .all(|t| report.label_near(t.range_m, 1.0) == Some(Label::Real));
        let fake = ghosts
            .iter()
            .all(|&rb| report.label_near(rb, 1.0) == Some(Label::False));
        ok &= real && fake;
        let table: Vec<String> = report
            .labels
            .iter()
            .map(|c| format!("{:.1} {}", c.range_m, c.label.as_str()))
            .collect();
        notes.push(format!("seed {seed}: [{}]", table.join(", ")));
    }
    check(ok, notes.join("; "))
}

fn random_hermitian_pd(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let a = CMat::from_fn(n, n, |_, _| {
        C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    &a * a.adjoint() + CMat::identity(n, n) * C64::from(0.1)
}

fn ac8_properties() -> Outcome {
    let sc = scenario("example1.toml");
    let cfg = sc.radar_config();
    let ws = sc.waveform_set().unwrap();
    let scene = sc.scene().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = Vec::new();

    // steering unimodularity and compensation invertibility
    for _ in 0..50 {
        let r = 500.0 + 3000.0 * rng.random::<f64>();
        let th = PI * rng.random::<f64>();
        let a = virtual_steering(&cfg, r, th, th, None);
        if a.iter().any(|x| (x.norm() - 1.0).abs() > 1e-12) {
            failures.push("steering magnitude".to_string());
        }
    }
    let (cube, _) = simulate(&sc, cfg.freq_increment_hz, 0);
    let cc = compensate(&cube, 2007.0);
    let back = cc.restore();
    let err = back
        .iter()
        .zip(&cube.pulses)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    if err > 1e-9 {
        failures.push(format!("compensation round trip {err:e}"));
    }

    // distortionless receive weights and transmit weight norm
    let cov = received_covariance(&cube).unwrap();
    let t = &scene.targets[0];
    let a = virtual_steering(&cfg, t.range_m, t.angle_rad, t.angle_rad, None);
    let wr = mpdr_rx_weights(&cov, &a).unwrap();
    if (wr.dotc(&a) - C64::from(1.0)).norm() > 1e-9 {
        failures.push("w_Rᴴă ≠ 1".into());
    }
    for rule in [
        TxWeightRule::Projection,
        TxWeightRule::Orthogonal,
        TxWeightRule::ExactMaximizer,
    ] {
        let wf = optimal_tx_weights(&cov, &cfg, t.range_m, t.angle_rad, rule).unwrap();
        if (wf.norm() - (cfg.num_tx as f64).sqrt()).abs() > 1e-9 {
            failures.push(format!("‖w_F‖ under {rule:?}"));
        }
    }

    // trace identity and eigen reconstruction
    for _ in 0..50 {
        let a = random_hermitian_pd(&mut rng, 8);
        let h = HermitianMatrix::new(a.clone()).unwrap();
        let (vals, vecs) = eig_hermitian(&h).unwrap();
        let tr_inv = a.clone().try_inverse().unwrap().trace().re;
        if ((tr_inv - trace_inverse_sum(&vals)) / tr_inv).abs() > 1e-8 {
            failures.push("trace of inverse".into());
        }
        let d = CMat::from_diagonal(&CVec::from_iterator(8, vals.iter().map(|&v| C64::from(v))));
        let recon = &vecs * d * vecs.adjoint();
        if (&recon - &a).norm() > 1e-8 * a.norm() {
            failures.push("eigen reconstruction".into());
        }
    }

    // energy bound on the estimated covariance
    let (vals, _) = eig_hermitian(&cov.matrix).unwrap();
    let sum: f64 = vals.iter().sum();
    let mn = cfg.virtual_channels() as f64;
    let sigma = scene.noise_power / ws.len() as f64;
    let eta2 = cfg.total_power / cfg.num_tx as f64;
    let upper = mn * (eta2 * (1.0 + scene.reflection_coeff.norm()).powi(4) + sigma);
    if !(sum >= 0.9 * mn * sigma && sum <= upper) {
        failures.push(format!(
            "energy bound: Σϱ = {sum:.3}, bounds [{:.3}, {upper:.3}]",
            mn * sigma
        ));
    }

    // noise covariance against Monte-Carlo
    let noise_only = Scene {
        targets: vec![],
        ..scene.clone()
    };
    let long = fdamimo::echo::EchoParams {
        pulses: 256,
        ..sc.echo_params()
    };
    let nc = simulate_echo(&noise_only, &cfg, &ws, &uniform(cfg.num_tx), &long, 5).unwrap();
    let est = HermitianMatrix::from_snapshots(cfg.virtual_channels(), nc.snapshots()).unwrap();
    let model = noise_covariance(&cfg, &ws, scene.noise_power, NoiseModel::Independent);
    let rel = (est.values() - &model).norm() / model.norm();
    if rel > 0.05 {
        failures.push(format!("noise covariance off by {:.1}%", 100.0 * rel));
    }

    // finite-difference convergence order
    let w = uniform(cfg.num_tx);
    let mut f = |x: f64| mitigation_objective(x, &scene, &cfg, &ws, &w);
    let mut orders = Vec::new();
    for _ in 0..20 {
        let x = 2e6 + 36e6 * rng.random::<f64>();
        // g ripples with a period of a few kHz in Δf, so the step must resolve it
        let h = 200.0;
        let d1 = central_difference(&mut f, x, h).unwrap();
        let d2 = central_difference(&mut f, x, h / 2.0).unwrap();
        let d4 = central_difference(&mut f, x, h / 4.0).unwrap();
        let (e1, e2) = ((d1 - d2).abs(), (d2 - d4).abs());
        if e2 > 1e-12 * d4.abs().max(1e-30) && e1 > 0.0 {
            orders.push((e1 / e2).log2());
        }
    }
    orders.sort_by(f64::total_cmp);
    let median_order = orders.get(orders.len() / 2).copied().unwrap_or(2.0);
    if median_order < 1.9 {
        failures.push(format!("finite-difference order {median_order:.2}"));
    }

    // CFAR false-alarm rate on exponential noise
    let params = sc.cfar_params();
    let n = 4096;
    let trials = 100;
    let mut alarms = 0usize;
    let mut cells = 0usize;
    let alpha = params.multiplier();
    for _ in 0..trials {
        let p: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let reach = params.guard + params.train;
        for k in 0..n {
            let mut s = 0.0;
            for off in params.guard + 1..=reach {
                s += p[(k + off) % n] + p[(k + n - off) % n];
            }
            if p[k] > alpha * s / (2 * params.train) as f64 {
                alarms += 1;
            }
            cells += 1;
        }
    }
    let rate = alarms as f64 / cells as f64;
    if !(rate >= params.pfa / 2.0 && rate <= params.pfa * 2.0) {
        failures.push(format!("CFAR false-alarm rate {rate:.2e}"));
    }

    check(
        failures.is_empty(),
        if failures.is_empty() {
            format!("all properties hold (FD order {median_order:.2}, CFAR rate {rate:.2e}, noise covariance error {:.1}%)", 100.0 * rel)
        } else {
            failures.join("; ")
        },
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("AC1 geometry", ac1_geometry),
        ("AC2 detection", ac2_detection),
        ("AC3 discrimination", ac3_discrimination),
        (
            "AC4 multipath suppression advantage",
            ac4_suppression_advantage,
        ),
        ("AC5 mitigation improvement", ac5_mitigation),
        ("AC6 descent vs sweep", ac6_descent_vs_sweep),
        ("AC7 multi-target", ac7_multi_target),
        ("AC8 property suite", ac8_properties),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} ({secs:.1} s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name} ({secs:.1} s): {detail}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
