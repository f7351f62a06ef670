//! Invariants over randomly drawn inputs.

use fdamimo::array::{
    kron, mirror_geometry, rx_steering, tx_range_angle_steering, virtual_steering,
};
use fdamimo::detection::{cfar_ca, CfarParams, ProfileKind, RangeProfile};
use fdamimo::discrimination::{compensate, compensation_vector};
use fdamimo::echo::EchoCube;
use fdamimo::linalg::{eig_hermitian, trace_inverse_sum, HermitianMatrix};
use fdamimo::mitigation::{
    central_difference, mpdr_rx_weights, optimal_tx_weights, CovarianceEstimate, TxWeightRule,
};
use fdamimo::{CMat, CVec, RadarConfig, C64};
use proptest::prelude::*;

fn config(m: usize, n: usize, df: f64) -> RadarConfig {
    RadarConfig::half_wavelength(m, n, 10e9).with_freq_increment(df)
}

fn cmat(n: usize, cols: usize, v: &[f64]) -> CMat {
    CMat::from_fn(n, cols, |i, j| {
        let k = 2 * (i * cols + j);
        C64::new(v[k % v.len()], v[(k + 1) % v.len()])
    })
}

fn pd(n: usize, v: &[f64]) -> CMat {
    let a = cmat(n, n, v);
    &a * a.adjoint() + CMat::identity(n, n) * C64::from(0.1)
}

fn estimate(matrix: CMat) -> CovarianceEstimate {
    CovarianceEstimate {
        matrix: HermitianMatrix::new(matrix).unwrap().with_default_loading(),
        snapshot_count: 1,
        freq_increment_hz: 0.0,
        tx_weights: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn steering_vectors_are_unimodular(
        r in 10.0f64..5000.0, tt in 0.01f64..3.13, tr in 0.01f64..3.13, df in 0.0f64..40e6,
    ) {
        let c = config(5, 4, df);
        let a = virtual_steering(&c, r, tt, tr, None);
        prop_assert_eq!(a.len(), 20);
        for x in a.iter() {
            prop_assert!((x.norm() - 1.0).abs() < 1e-12);
        }
        let b = kron(&rx_steering(&c, tr), &tx_range_angle_steering(&c, r, tt));
        prop_assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn compensation_round_trips(r in 100.0f64..5000.0, df in 0.0f64..40e6, v in prop::collection::vec(-1.0f64..1.0, 16..64)) {
        let c = config(3, 2, df);
        let g = compensation_vector(&c, r);
        prop_assert!(g.iter().all(|x| (x.norm() - 1.0).abs() < 1e-12));
        let cube = EchoCube {
            pulses: vec![cmat(6, 5, &v), cmat(6, 5, &v[1..])],
            range_axis_m: (0..5).map(|k| 1000.0 + k as f64).collect(),
            config: c,
            sample_rate_hz: 1e8,
            first_bin: 0,
            rng_seed: 0,
        };
        let back = compensate(&cube, r).restore();
        for (a, b) in back.iter().zip(&cube.pulses) {
            prop_assert!((a - b).norm() < 1e-12 * b.norm().max(1.0));
        }
    }

    #[test]
    fn mpdr_is_distortionless(v in prop::collection::vec(-1.0f64..1.0, 32..128), tt in 0.1f64..3.0, r in 100.0f64..4000.0) {
        let c = config(3, 3, 19.6e6);
        let a = virtual_steering(&c, r, tt, tt, None);
        let w = mpdr_rx_weights(&estimate(pd(9, &v)), &a).unwrap();
        prop_assert!((w.dotc(&a) - C64::from(1.0)).norm() < 1e-9);
    }

    #[test]
    fn tx_weights_have_norm_sqrt_m(v in prop::collection::vec(-1.0f64..1.0, 32..128), tt in 0.1f64..3.0, r in 100.0f64..4000.0) {
        let c = config(4, 2, 19.6e6);
        let est = estimate(pd(8, &v));
        for rule in [TxWeightRule::Projection, TxWeightRule::Orthogonal, TxWeightRule::ExactMaximizer] {
            if let Ok(w) = optimal_tx_weights(&est, &c, r, tt, rule) {
                prop_assert!((w.norm() - 2.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn trace_of_inverse_is_sum_of_reciprocal_eigenvalues(v in prop::collection::vec(-1.0f64..1.0, 16..128), n in 2usize..7) {
        let a = pd(n, &v);
        let (vals, _) = eig_hermitian(&HermitianMatrix::new(a.clone()).unwrap()).unwrap();
        let direct = a.try_inverse().unwrap().trace().re;
        prop_assert!(((direct - trace_inverse_sum(&vals)) / direct).abs() < 1e-8);
    }

    #[test]
    fn eigendecomposition_reconstructs(v in prop::collection::vec(-1.0f64..1.0, 16..128), n in 2usize..7) {
        let a = pd(n, &v);
        let (vals, vecs) = eig_hermitian(&HermitianMatrix::new(a.clone()).unwrap()).unwrap();
        prop_assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let d = CMat::from_diagonal(&CVec::from_iterator(n, vals.iter().map(|&x| C64::from(x))));
        prop_assert!((&vecs * d * vecs.adjoint() - &a).norm() < 1e-8 * a.norm());
        prop_assert!((vecs.adjoint() * &vecs - CMat::identity(n, n)).norm() < 1e-9);
    }

    #[test]
    fn central_difference_is_second_order(x in -2.0f64..2.0, k in 0.5f64..3.0) {
        let f = |t: f64| (k * t).sin().exp();
        let exact = k * (k * x).cos() * (k * x).sin().exp();
        let mut g = |t: f64| -> fdamimo::Result<f64> { Ok(f(t)) };
        let e1 = (central_difference(&mut g, x, 1e-2).unwrap() - exact).abs();
        let e2 = (central_difference(&mut g, x, 5e-3).unwrap() - exact).abs();
        if e2 > 1e-11 {
            prop_assert!((e1 / e2).log2() >= 1.9);
        }
    }

    #[test]
    fn cfar_is_scale_invariant(v in prop::collection::vec(0.0f64..1.0, 120..200), e in -20i32..20) {
        // powers of two scale without rounding
        let s = 2f64.powi(e);
        let mk = |scale: f64| RangeProfile {
            power: v.iter().map(|x| x * scale).collect(),
            range_axis_m: (0..v.len()).map(|k| k as f64).collect(),
            kind: ProfileKind::Beamformed,
        };
        let p = CfarParams { pfa: 0.05, ..CfarParams::default() };
        let a = cfar_ca(&mk(1.0), &p).unwrap();
        let b = cfar_ca(&mk(s), &p).unwrap();
        prop_assert_eq!(a.bins, b.bins);
    }

    #[test]
    fn mirror_range_follows_law_of_cosines(r in 100.0f64..5000.0, th in 0.05f64..3.09, h in 0.0f64..100.0) {
        let m = mirror_geometry(r, th, h).unwrap();
        let rs2 = r * r + 4.0 * h * h + 4.0 * h * r * th.cos();
        prop_assert!((m.range_m * m.range_m - rs2).abs() < 1e-9 * rs2);
        prop_assert!((m.equivalent_range_m - 0.5 * (r + m.range_m)).abs() < 1e-9);
        prop_assert!(m.angle_rad > 0.0 && m.angle_rad < std::f64::consts::PI);
        let flat = mirror_geometry(r, th, 0.0).unwrap();
        prop_assert!((flat.range_m - r).abs() < 1e-9 * r);
        prop_assert!((flat.angle_rad - (std::f64::consts::PI - th)).abs() < 1e-12);
    }
}
