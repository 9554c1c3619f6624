use cloudlap::coupling::{
    chart_x, chart_y, coupling_statistics, default_max_steps, draw, one_step_mean, one_step_mean_y, reflect,
    run_coupling, sample_ball, sample_biased_ball, start_point, step_x, step_y, trial_rng, Chart, Draws,
    ExitReason, Rotations, WalkConfig,
};
use cloudlap::geom::{self, Point};
use cloudlap::kernel_graph::sigma_eta;
use cloudlap::nonlocal_ops::averaging_abar;
use cloudlap::{CloudError, DensityModel, KernelKind, KernelModel, Manifold};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(m: Manifold, density: DensityModel, kind: KernelKind, eps: f64, r: f64) -> WalkConfig {
    let x0 = match m.intrinsic_dim() {
        1 => m.from_angles([0.4, 0.0]),
        _ => m.from_angles([1.0, 0.3]),
    };
    WalkConfig {
        kernel: KernelModel::new(kind, m.intrinsic_dim()).unwrap(),
        manifold: m,
        density,
        eps,
        r,
        x0,
        seed: 7,
    }
}

fn tilted() -> DensityModel {
    DensityModel::tilted(0.5).unwrap()
}

/// Random point of the geodesic ball of radius `r` around `x0`.
fn near<R: Rng>(cfg: &WalkConfig, r: f64, rng: &mut R) -> Point {
    let frame = cfg.base_frame();
    let a = rng.gen::<f64>() * std::f64::consts::TAU;
    let s = r * rng.gen::<f64>();
    let w = if cfg.manifold.intrinsic_dim() == 1 {
        [s * a.cos().signum(), 0.0]
    } else {
        [s * a.cos(), s * a.sin()]
    };
    cfg.manifold.exp_frame(&cfg.x0, &frame, &w)
}

#[test]
fn chart_tables() {
    assert_eq!(chart_x(None), Chart::Identity);
    assert_eq!(chart_x(Some(&[1.0, 0.0])), Chart::Direct);
    assert_eq!(chart_x(Some(&[-1.0, 0.0])), Chart::Flipped);
    assert_eq!(chart_x(Some(&[0.0, 1.0])), Chart::Direct);
    assert_eq!(chart_y(Some(&[1.0, 0.0]), None), Chart::Identity);
    assert_eq!(chart_y(None, Some(&[1.0, 0.0])), Chart::Direct);
    assert_eq!(chart_y(None, Some(&[-1.0, 0.0])), Chart::Flipped);
    assert_eq!(chart_y(Some(&[1.0, 0.0]), Some(&[1.0, 0.0])), Chart::Direct);
    assert_eq!(chart_y(Some(&[1.0, 0.0]), Some(&[-1.0, 0.0])), Chart::Flipped);
    assert_eq!(chart_y(Some(&[-1.0, 0.0]), Some(&[-1.0, 0.0])), Chart::Flipped);
    assert_eq!(chart_y(Some(&[-1.0, 0.0]), Some(&[1.0, 0.0])), Chart::Direct);
}

#[test]
fn rotations_send_e1_to_zeta() {
    for m in [1usize, 2] {
        let rot = Rotations { m };
        let zs: Vec<[f64; 2]> = if m == 1 {
            vec![[1.0, 0.0], [-1.0, 0.0]]
        } else {
            (0..16)
                .map(|k| {
                    let a = k as f64 * 0.4;
                    [a.cos(), a.sin()]
                })
                .collect()
        };
        for z in &zs {
            let chart = chart_x(Some(z));
            let q = rot.chart_matrix(chart, z);
            let e = [q[0][0], q[1][0]];
            assert!(
                (e[0] - z[0]).abs() < 1e-14 && (e[1] - z[1]).abs() < 1e-14,
                "{m} {z:?}"
            );
        }
        let q0 = rot.q0();
        assert_eq!([q0[0][0] * -1.0, q0[1][0] * -1.0], [1.0, 0.0]);
    }
}

#[test]
fn q_is_isometry_aligned_with_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for m in Manifold::all() {
        let cfg = config(m, tilted(), KernelKind::Uniform, 0.05, 0.5);
        for _ in 0..500 {
            let x = near(&cfg, cfg.r, &mut rng);
            let q = cfg.rotation_q(&x).unwrap();
            let dim = m.intrinsic_dim();
            for i in 0..dim {
                for j in 0..dim {
                    let qtq: f64 = (0..dim).map(|k| q[k][i] * q[k][j]).sum();
                    assert!((qtq - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
                }
            }
            let e1 = cfg.frame_at(&x).unwrap()[0];
            let image = cfg.rotation_q_ambient(&x, &e1).unwrap();
            let g = cfg.density.grad_log(&m, &x);
            let gn = geom::norm(&g);
            if gn > 1e-12 {
                for k in 0..4 {
                    assert!((image[k] - g[k] / gn).abs() < 1e-10, "{:?}", m.kind);
                }
            }
        }
        let flat = config(m, DensityModel::uniform(), KernelKind::Uniform, 0.05, 0.5);
        for _ in 0..20 {
            let x = near(&flat, flat.r, &mut rng);
            assert_eq!(flat.rotation_q(&x).unwrap(), [[1.0, 0.0], [0.0, 1.0]]);
        }
    }
}

#[test]
fn ball_samplers_have_the_right_moments() {
    for (m, kind) in [
        (1, KernelKind::Uniform),
        (2, KernelKind::Uniform),
        (2, KernelKind::Triangular),
        (1, KernelKind::QuadraticTaper),
    ] {
        let kernel = KernelModel::new(kind, m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let biased: Vec<[f64; 2]> = (0..n).map(|_| sample_biased_ball(&kernel, &mut rng)).collect();
        let plain: Vec<[f64; 2]> = (0..n).map(|_| sample_ball(&kernel, &mut rng)).collect();
        for w in biased.iter().chain(&plain) {
            assert!(w[0].hypot(w[1]) <= 1.0);
            if m == 1 {
                assert_eq!(w[1], 0.0);
            }
        }
        let mean_se = |xs: Vec<f64>| {
            let mu = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
            (mu, (var / xs.len() as f64).sqrt())
        };
        let (mu, se) = mean_se(biased.iter().map(|w| w[0]).collect());
        assert!((mu - sigma_eta(&kernel)).abs() < 4.0 * se, "{kind:?} {m}: {mu}");
        let (mu, se) = mean_se(biased.iter().map(|w| w[1]).collect());
        assert!(mu.abs() <= 4.0 * se.max(1e-300));
        let (mu, se) = mean_se(plain.iter().map(|w| w[0]).collect());
        assert!(mu.abs() < 4.0 * se);
        let (mu, se) = mean_se(plain.iter().map(|w| w[0] * w[0]).collect());
        assert!((mu - sigma_eta(&kernel)).abs() < 4.0 * se);
    }
}

#[test]
fn reflection_examples() {
    assert_eq!(reflect(&[1.0, 0.0], &[2.0, 0.0]), [-1.0, 0.0]);
    assert_eq!(reflect(&[0.0, 1.0], &[2.0, 0.0]), [0.0, 1.0]);
    let r = reflect(&[0.3, 0.4], &[1.0, 1.0]);
    assert!((r[0] + 0.4).abs() < 1e-15 && (r[1] + 0.3).abs() < 1e-15);
}

#[test]
fn circle_reflection_shrinks_distance_by_twice_the_step() {
    let c = Manifold::circle();
    let cfg = config(c, DensityModel::uniform(), KernelKind::Uniform, 0.05, 1.0);
    let a0 = 0.4;
    let x = c.from_angles([a0, 0.0]);
    for d in [0.3, 0.6, 0.9] {
        let y = c.from_angles([a0 + d, 0.0]);
        for w in [0.7, -0.45, 1.0, 0.0] {
            let draws = Draws {
                w: [w, 0.0],
                wbar: [0.0, 0.0],
                b: 0.5,
            };
            let nx = step_x(&cfg, &x, &draws).unwrap();
            let ny = step_y(&cfg, &x, &y, &draws).unwrap();
            let nd = c.dist(&nx, &ny);
            assert!((nd - (d - 2.0 * cfg.eps * w)).abs() < 1e-12, "{d} {w}: {nd}");
        }
    }
}

#[test]
fn steps_move_by_eps_times_draw_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for m in Manifold::all() {
        let cfg = config(m, tilted(), KernelKind::Triangular, 0.05, 0.5);
        for k in 0..200 {
            let x = near(&cfg, 0.45, &mut rng);
            let mut d = draw(&cfg.kernel, &mut rng);
            // alternate the plain and biased branches
            d.b = if k % 2 == 0 { 0.999 } else { 0.0 };
            let nx = step_x(&cfg, &x, &d).unwrap();
            assert!(m.constraint_residual(&nx) < 1e-10);
            let used = if k % 2 == 0 { d.w } else { d.wbar };
            let want = cfg.eps * used[0].hypot(used[1]);
            assert!((m.dist(&x, &nx) - want).abs() < 1e-10);
        }
    }
}

#[test]
fn frozen_states() {
    let s = Manifold::sphere2();
    let cfg = config(s, tilted(), KernelKind::Uniform, 0.05, 0.5);
    let outside = start_point(&cfg, 0.6);
    let d = Draws {
        w: [0.5, 0.2],
        wbar: [0.1, 0.1],
        b: 0.9,
    };
    assert_eq!(step_x(&cfg, &outside, &d).unwrap(), outside);
    // coalesced pair: y does not move
    let y = start_point(&cfg, 0.1);
    assert_eq!(step_y(&cfg, &cfg.x0, &y, &d).unwrap(), y);
    // separated pair
    let far = start_point(&cfg, 0.5);
    assert_eq!(step_y(&cfg, &cfg.x0, &far, &d).unwrap(), far);
    assert!(matches!(
        one_step_mean_y(&cfg, &cfg.x0, &y, |p| p[0], 10),
        Err(CloudError::InvalidParameter(_))
    ));
}

#[test]
fn coalesced_start_stops_immediately() {
    for m in Manifold::all() {
        let cfg = config(m, DensityModel::uniform(), KernelKind::Uniform, 0.02, 0.4);
        for d0 in [0.0, 0.03, 0.059] {
            let run = run_coupling(&cfg, &start_point(&cfg, d0), 100).unwrap();
            assert_eq!(run.tau, 0);
            assert_eq!(run.exit_reason, ExitReason::Coalesced);
            assert_eq!(run.x.len(), 1);
        }
    }
}

#[test]
fn trajectories_stay_on_the_manifold() {
    for m in Manifold::all() {
        let cfg = config(m, tilted(), KernelKind::Uniform, 0.03, 0.4);
        let y0 = start_point(&cfg, 0.15);
        let run = run_coupling(&cfg, &y0, 200_000).unwrap();
        assert_ne!(run.exit_reason, ExitReason::Truncated);
        assert_eq!(run.x.len(), run.tau + 1);
        for (x, y) in run.x.iter().zip(&run.y) {
            assert!(m.constraint_residual(x) < 1e-10);
            assert!(m.constraint_residual(y) < 1e-10);
        }
        for w in run.x.windows(2) {
            assert!(m.dist(&w[0], &w[1]) <= cfg.eps + 1e-12);
        }
        let last = run.tau;
        match run.exit_reason {
            ExitReason::Coalesced => assert!(run.d_final <= 3.0 * cfg.eps),
            ExitReason::Separated => assert!(run.d_final >= cfg.r),
            ExitReason::ExitedBall => assert!(m.dist(&cfg.x0, &run.x[last]) >= cfg.r),
            ExitReason::Truncated => unreachable!(),
        }
        assert_eq!(run_coupling(&cfg, &y0, 200_000).unwrap(), run);
    }
}

#[test]
fn one_step_means_match_the_biased_average() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for m in Manifold::all() {
        for kind in [KernelKind::Uniform, KernelKind::Triangular] {
            let cfg = config(m, DensityModel::tilted(0.6).unwrap(), kind, 0.2, 1.2);
            let f = |p: &Point| p[0] + 0.5 * p[1] * p[1] - 0.3 * p[2] + p[3];
            let x = near(&cfg, 0.2, &mut rng);
            let (mu, se) = one_step_mean(&cfg, &x, f, 400_000).unwrap();
            let want = averaging_abar(&m, &cfg.density, &cfg.kernel, cfg.eps, f, &x).unwrap();
            assert!(
                (mu - want).abs() < 4.0 * se,
                "{:?} {kind:?}: {mu} vs {want} (se {se})",
                m.kind
            );

            // beyond the coalescence radius 3 eps
            let y = m.exp_frame(&x, &m.frame(&x), &[0.8, 0.0]);
            let (mu, se) = one_step_mean_y(&cfg, &x, &y, f, 400_000).unwrap();
            let want = averaging_abar(&m, &cfg.density, &cfg.kernel, cfg.eps, f, &y).unwrap();
            assert!(
                (mu - want).abs() < 4.0 * se,
                "Y {:?} {kind:?}: {mu} vs {want} (se {se})",
                m.kind
            );
        }
    }
}

#[test]
fn statistics_are_deterministic_and_consistent() {
    let cfg = config(Manifold::sphere2(), tilted(), KernelKind::Uniform, 0.05, 0.5);
    let d0 = 0.2;
    let y0 = start_point(&cfg, d0);
    assert!((cfg.manifold.dist(&cfg.x0, &y0) - d0).abs() < 1e-12);
    let steps = default_max_steps(&cfg, d0);
    assert_eq!(steps, 50 * (2.0 * 0.5 * 0.2 / (0.25 * 0.0025f64)).ceil() as usize);
    let a = coupling_statistics(&cfg, &y0, 300, steps).unwrap();
    let b = coupling_statistics(&cfg, &y0, 300, steps).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.coalesced + a.separated + a.exited + a.truncated, 300);
    assert_eq!(a.completed, 300 - a.truncated);
    assert_eq!(a.checks.len(), 4);
    for c in &a.checks {
        assert!((c.upper95 - (c.estimate + 1.6448536269514722 * c.std_err)).abs() < 1e-9);
        assert_eq!(c.pass, c.upper95 <= c.bound);
    }
    let other = WalkConfig {
        seed: 8,
        ..cfg.clone()
    };
    assert_ne!(
        coupling_statistics(&other, &y0, 300, steps).unwrap().records,
        a.records
    );
}

#[test]
fn near_threshold_start_coalesces_quickly() {
    let cfg = config(
        Manifold::flat_torus2(),
        DensityModel::uniform(),
        KernelKind::Uniform,
        0.05,
        0.8,
    );
    let d0 = 3.5 * cfg.eps;
    let st = coupling_statistics(&cfg, &start_point(&cfg, d0), 400, default_max_steps(&cfg, d0)).unwrap();
    let bound = 2.0 * cfg.r * d0 / (cfg.kernel.sigma() * cfg.eps * cfg.eps);
    assert!(st.mean_tau < 0.25 * bound, "{} vs {bound}", st.mean_tau);
    assert!(st.coalesced as f64 > 0.9 * st.trials as f64);
}

#[test]
fn validation_errors() {
    let s = Manifold::sphere2();
    let good = config(s, tilted(), KernelKind::Uniform, 0.05, 0.5);
    assert!(good.validate().is_ok());
    for bad in [
        WalkConfig {
            eps: 2.0,
            ..good.clone()
        },
        WalkConfig {
            eps: 0.0,
            ..good.clone()
        },
        WalkConfig {
            r: 1.7,
            ..good.clone()
        },
        WalkConfig {
            x0: [2.0, 0.0, 0.0, 0.0],
            ..good.clone()
        },
        WalkConfig {
            kernel: KernelModel::uniform(1),
            ..good.clone()
        },
        WalkConfig {
            density: DensityModel::tilted(0.9).unwrap(),
            eps: 0.3,
            ..good.clone()
        },
    ] {
        assert!(bad.validate().is_err(), "{bad:?}");
    }
    let far = start_point(&good, 0.6);
    assert!(coupling_statistics(&good, &far, 10, 100).is_err());
}

#[test]
fn trial_streams_are_independent() {
    let mut a = trial_rng(1, 0);
    let mut b = trial_rng(1, 1);
    let mut c = trial_rng(1, 0);
    let xa: Vec<u64> = (0..8).map(|_| a.gen()).collect();
    let xb: Vec<u64> = (0..8).map(|_| b.gen()).collect();
    let xc: Vec<u64> = (0..8).map(|_| c.gen()).collect();
    assert_ne!(xa, xb);
    assert_eq!(xa, xc);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prop_reflection_is_involutive_isometry(w0 in -1.0f64..1.0, w1 in -1.0f64..1.0, v0 in -2.0f64..2.0, v1 in -2.0f64..2.0) {
        prop_assume!(v0.hypot(v1) > 1e-3);
        let w = [w0, w1];
        let v = [v0, v1];
        let r = reflect(&w, &v);
        prop_assert!((r[0].hypot(r[1]) - w0.hypot(w1)).abs() < 1e-12);
        let rr = reflect(&r, &v);
        prop_assert!((rr[0] - w0).abs() < 1e-12 && (rr[1] - w1).abs() < 1e-12);
        let dot_r = r[0] * v[0] + r[1] * v[1];
        let dot_w = w0 * v[0] + w1 * v[1];
        prop_assert!((dot_r + dot_w).abs() < 1e-12);
    }

    #[test]
    fn prop_coupled_steps_stay_on_manifold(seed in any::<u64>(), which in 0usize..3) {
        let m = Manifold::all()[which];
        let cfg = config(m, tilted(), KernelKind::QuadraticTaper, 0.04, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = near(&cfg, 0.4, &mut rng);
        let y = m.exp_frame(&x, &m.frame(&x), &[0.2, 0.0]);
        let d = draw(&cfg.kernel, &mut rng);
        let nx = step_x(&cfg, &x, &d).unwrap();
        let ny = step_y(&cfg, &x, &y, &d).unwrap();
        prop_assert!(m.constraint_residual(&nx) < 1e-10);
        prop_assert!(m.constraint_residual(&ny) < 1e-10);
        prop_assert!(m.dist(&y, &ny) <= cfg.eps + 1e-12);
        let q = cfg.rotation_q(&x).unwrap();
        let det = q[0][0] * q[1][1] - q[0][1] * q[1][0];
        prop_assert!((det.abs() - 1.0).abs() < 1e-10 || m.intrinsic_dim() == 1);
    }
}
