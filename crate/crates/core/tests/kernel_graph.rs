use std::f64::consts::PI;

use cloudlap::geom::{self, Point};
use cloudlap::kernel_graph::{build_eps_graph_brute, continuum_degree, sigma_eta, unit_ball_volume};
use cloudlap::{build_eps_graph, sample_cloud, DensityModel, KernelKind, KernelModel, Manifold};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn kernels(m: usize) -> Vec<KernelModel> {
    KernelKind::all()
        .iter()
        .map(|k| KernelModel::new(*k, m).unwrap())
        .collect()
}

/// Monte-Carlo estimate of `int <w, e1>^2 eta(|w|) dw` with its standard error.
fn sigma_mc(k: &KernelModel, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vol = unit_ball_volume(k.m);
    let mut s = 0.0;
    let mut s2 = 0.0;
    let mut taken = 0usize;
    while taken < samples {
        let w: Vec<f64> = (0..k.m).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect();
        let r2: f64 = w.iter().map(|v| v * v).sum();
        if r2 > 1.0 {
            continue;
        }
        let v = vol * w[0] * w[0] * k.eta(r2.sqrt());
        s += v;
        s2 += v * v;
        taken += 1;
    }
    let n = samples as f64;
    let mean = s / n;
    let var = (s2 / n - mean * mean) * n / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn kernels_are_normalized_monotone_and_supported() {
    for m in [1, 2] {
        for k in kernels(m) {
            assert!((k.radial_mass() - 1.0).abs() < 1e-10, "{:?} m={m}", k.kind);
            assert_eq!(k.eta(1.0 + 1e-12), 0.0);
            assert_eq!(k.eta(-0.1), 0.0);
            let mut prev = f64::INFINITY;
            for i in 0..=100 {
                let r = i as f64 / 100.0;
                let v = k.eta(r);
                assert!(v <= prev && v >= 0.0);
                prev = v;
                let h = 1e-3;
                if r + h <= 1.0 {
                    assert!((k.eta(r) - k.eta(r + h)).abs() <= k.lipschitz_bound() * h + 1e-12);
                }
            }
        }
    }
}

#[test]
fn sigma_eta_closed_forms() {
    assert!((sigma_eta(&KernelModel::uniform(1)) - 1.0 / 3.0).abs() < 1e-12);
    assert!((sigma_eta(&KernelModel::uniform(2)) - 0.25).abs() < 1e-12);
    for m in [1, 2] {
        for k in kernels(m) {
            assert!(k.sigma() > 0.0);
        }
    }
}

#[test]
fn sigma_eta_matches_monte_carlo() {
    for m in [1, 2] {
        for (i, k) in kernels(m).iter().enumerate() {
            let (est, se) = sigma_mc(k, 10_000_000, 100 + 10 * m as u64 + i as u64);
            let exact = sigma_eta(k);
            assert!(
                (est - exact).abs() <= 3.0 * se,
                "{:?} m={m}: mc {est} +- {se}, quadrature {exact}",
                k.kind
            );
        }
    }
}

#[test]
fn graph_examples_by_hand() {
    let c = Manifold::circle();
    let k = KernelModel::uniform(1);
    let eps: f64 = 0.1;
    // two points at chord 2 eps
    let half = f64::asin(eps);
    let pts = vec![c.from_angles([0.0, 0.0]), c.from_angles([2.0 * half, 0.0])];
    let chord = geom::dist(&pts[0], &pts[1]);
    assert!((chord - 2.0 * eps).abs() < 1e-12);
    let g = build_eps_graph(&c, pts, eps, &k).unwrap();
    assert_eq!(g.weights.nnz(), 0);
    assert!(!g.connected);

    // three points with chords 0.5 eps and 0.9 eps from the middle one; the
    // outer pair sits beyond eps (the triple {0.5, 0.9, 1.5} eps is not
    // realizable, the outer chord here is about 1.4 eps)
    let k1 = KernelModel::new(KernelKind::Triangular, 1).unwrap();
    let eps = 0.2;
    let arc = |c: f64| 2.0 * (0.5 * c).asin();
    let pts = vec![
        c.from_angles([0.0, 0.0]),
        c.from_angles([arc(0.5 * eps), 0.0]),
        c.from_angles([-arc(0.9 * eps), 0.0]),
    ];
    let d01 = geom::dist(&pts[0], &pts[1]) / eps;
    let d02 = geom::dist(&pts[0], &pts[2]) / eps;
    assert!((d01 - 0.5).abs() < 1e-12 && (d02 - 0.9).abs() < 1e-12);
    assert!(geom::dist(&pts[1], &pts[2]) > eps);
    let g = build_eps_graph(&c, pts, eps, &k1).unwrap();
    assert_eq!(g.weights.get(0, 1), k1.eta(d01));
    assert_eq!(g.weights.get(0, 2), k1.eta(d02));
    assert_eq!(g.weights.get(1, 2), 0.0);
    assert_eq!(g.weights.get(0, 0), 0.0);
}

#[test]
fn grid_graph_equals_brute_force() {
    for (mi, m) in Manifold::all().iter().enumerate() {
        for (ki, kind) in KernelKind::all().iter().enumerate() {
            let k = KernelModel::new(*kind, m.intrinsic_dim()).unwrap();
            for (n, eps) in [(300usize, 0.3), (1000, 0.15)] {
                let pts = sample_cloud(m, &DensityModel::tilted(0.4).unwrap(), n, (mi * 10 + ki) as u64);
                let a = build_eps_graph(m, pts.clone(), eps, &k).unwrap();
                let b = build_eps_graph_brute(m, pts, eps, &k).unwrap();
                assert_eq!(a.weights, b.weights, "{:?} {kind:?} n={n}", m.kind);
                assert_eq!(a.connected, b.connected);
            }
        }
    }
}

#[test]
fn graph_structure_invariants() {
    let s = Manifold::sphere2();
    let k = KernelModel::new(KernelKind::QuadraticTaper, 2).unwrap();
    let eps = 0.25;
    let pts = sample_cloud(&s, &DensityModel::uniform(), 800, 3);
    let g = build_eps_graph(&s, pts, eps, &k).unwrap();
    assert!(g.weights.is_symmetric());
    for (i, j, w) in g.edges() {
        assert!(w > 0.0);
        assert!(geom::dist(&g.points[i], &g.points[j]) <= eps);
        assert_eq!(w, g.weights.get(j, i));
    }
    for i in 0..g.n() {
        assert!(g.discrete_degree(&g.points[i]) > 0.0);
    }
}

#[test]
fn discrete_degree_examples() {
    let c = Manifold::circle();
    let k = KernelModel::uniform(1);
    let eps = 0.1;
    let x = c.from_angles([0.0, 0.0]);
    let g = build_eps_graph(&c, vec![x], eps, &k).unwrap();
    assert!((g.discrete_degree(&x) - k.eta0() / eps).abs() < 1e-14);
    assert_eq!(g.weights.n, 1);
    assert_eq!(g.weights.nnz(), 0);
    let far = c.from_angles([1.0, 0.0]);
    assert_eq!(g.discrete_degree(&far), 0.0);
}

#[test]
fn discrete_degree_tracks_density_on_sphere() {
    let s = Manifold::sphere2();
    let k = KernelModel::uniform(2);
    let rho = DensityModel::uniform();
    let eps = 0.3;
    let net = s.covering_net(0.05).unwrap();
    let mut medians = Vec::new();
    for n in [1250usize, 5000] {
        let mut sups = Vec::new();
        for seed in 0..20u64 {
            let g = build_eps_graph(&s, sample_cloud(&s, &rho, n, seed), eps, &k).unwrap();
            let sup = net
                .iter()
                .map(|x| (g.discrete_degree(x) - rho.value(&s, x)).abs())
                .fold(0.0, f64::max);
            sups.push(sup);
        }
        medians.push(cloudlap::stats::median(&sups));
    }
    // a fraction of the density level 1/(4 pi) and shrinking with n
    assert!(medians[1] < 0.5 / (4.0 * PI), "{medians:?}");
    assert!(medians[1] < medians[0], "{medians:?}");
}

#[test]
fn continuum_degree_examples() {
    let c = Manifold::circle();
    let k = KernelModel::uniform(1);
    let rho = DensityModel::uniform();
    for eps in [0.4, 0.1, 0.01] {
        let x = c.from_angles([0.3, 0.0]);
        let d = continuum_degree(&c, &rho, &k, eps, &x).unwrap();
        assert!((d - 1.0 / (2.0 * PI)).abs() < 1e-14);
    }

    let s = Manifold::sphere2();
    let tilted = DensityModel::tilted(0.5).unwrap();
    let x = s.from_angles([1.0, 0.5]);
    for rho in [DensityModel::uniform(), tilted] {
        for k in kernels(2) {
            let ratios: Vec<f64> = [0.4, 0.2, 0.1, 0.05]
                .iter()
                .map(|&eps| {
                    let d = continuum_degree(&s, &rho, &k, eps, &x).unwrap();
                    assert!(d > 0.0);
                    (d - rho.value(&s, &x)).abs() / (eps * eps)
                })
                .collect();
            let max = ratios.iter().cloned().fold(0.0, f64::max);
            let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(max < 0.1 && max <= 2.0 * min + 1e-12, "{ratios:?}");
        }
    }
    assert!(continuum_degree(&s, &tilted, &KernelModel::uniform(2), 4.0, &x).is_err());
}

#[test]
fn annulus_count_examples() {
    let s = Manifold::sphere2();
    let k = KernelModel::uniform(2);
    let eps = 0.2;
    let pts = sample_cloud(&s, &DensityModel::uniform(), 2000, 9);
    let g = build_eps_graph(&s, pts, eps, &k).unwrap();
    let x = [0.0, 0.0, 1.0, 0.0];
    let all_within_2eps = g.ball_count(&x, 2.0 * eps);
    assert_eq!(g.annulus_count(&x, eps, 1.0).unwrap(), all_within_2eps);
    // empty region: a cloud confined to the southern cap
    let south: Vec<Point> = g.points.iter().filter(|p| p[2] < -0.5).cloned().collect();
    let h = build_eps_graph(&s, south, eps, &k).unwrap();
    assert_eq!(h.annulus_count(&x, eps, 0.1).unwrap(), 0);
    assert!(g.annulus_count(&x, eps, 1e-3).is_err());
}

#[test]
fn annulus_ratio_is_stable_across_seeds() {
    let s = Manifold::sphere2();
    let k = KernelModel::uniform(2);
    let rho = DensityModel::uniform();
    let (n, eps, t) = (10_000usize, 0.2, 0.1);
    let x = s.from_angles([0.7, 1.1]);
    let ratios: Vec<f64> = (0..20u64)
        .map(|seed| {
            let g = build_eps_graph(&s, sample_cloud(&s, &rho, n, seed), eps, &k).unwrap();
            g.annulus_count(&x, eps, t).unwrap() as f64 / (t * n as f64 * eps * eps)
        })
        .collect();
    // expected ~ rho * 2 * m * |B_2| = 1
    let mean = cloudlap::stats::mean(&ratios);
    assert!((mean - 1.0).abs() < 0.15, "{mean}");
    for r in &ratios {
        assert!(*r > 0.5 && *r < 1.6, "{ratios:?}");
    }
}

fn manifold_strategy() -> impl Strategy<Value = Manifold> {
    prop_oneof![
        Just(Manifold::circle()),
        Just(Manifold::sphere2()),
        Just(Manifold::flat_torus2())
    ]
}

fn kind_strategy() -> impl Strategy<Value = KernelKind> {
    prop_oneof![
        Just(KernelKind::Uniform),
        Just(KernelKind::Triangular),
        Just(KernelKind::QuadraticTaper)
    ]
}

/// Rotation of R^3 (about e3 by `a`, then about e1 by `b`).
fn rotate(p: &Point, a: f64, b: f64) -> Point {
    let (ca, sa) = (a.cos(), a.sin());
    let (cb, sb) = (b.cos(), b.sin());
    let x = [ca * p[0] - sa * p[1], sa * p[0] + ca * p[1], p[2], p[3]];
    [x[0], cb * x[1] - sb * x[2], sb * x[1] + cb * x[2], x[3]]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn prop_grid_equals_brute(m in manifold_strategy(), kind in kind_strategy(), n in 1usize..400, eps in 0.05f64..0.6, seed in any::<u64>()) {
        let k = KernelModel::new(kind, m.intrinsic_dim()).unwrap();
        let pts = sample_cloud(&m, &DensityModel::uniform(), n, seed);
        let a = build_eps_graph(&m, pts.clone(), eps, &k).unwrap();
        let b = build_eps_graph_brute(&m, pts, eps, &k).unwrap();
        prop_assert_eq!(&a.weights, &b.weights);
        prop_assert!(a.weights.is_symmetric());
    }

    #[test]
    fn prop_weights_rigid_motion_invariant(kind in kind_strategy(), seed in any::<u64>(), a in 0.0f64..6.3, b in 0.0f64..6.3) {
        let s = Manifold::sphere2();
        let k = KernelModel::new(kind, 2).unwrap();
        let pts = sample_cloud(&s, &DensityModel::uniform(), 300, seed);
        let moved: Vec<Point> = pts.iter().map(|p| rotate(p, a, b)).collect();
        let g = build_eps_graph_brute(&s, pts, 0.3, &k).unwrap();
        let h = build_eps_graph_brute(&s, moved, 0.3, &k).unwrap();
        let ge: Vec<_> = g.edges().collect();
        let he: Vec<_> = h.edges().collect();
        // chords near the support boundary can flip under rounding
        let near_edge = |i: usize, j: usize| (geom::dist(&g.points[i], &g.points[j]) / 0.3 - 1.0).abs() < 1e-12;
        let gk: Vec<_> = ge.iter().filter(|e| !near_edge(e.0, e.1)).collect();
        let hk: Vec<_> = he.iter().filter(|e| !near_edge(e.0, e.1)).collect();
        prop_assert_eq!(gk.len(), hk.len());
        for (x, y) in gk.iter().zip(&hk) {
            prop_assert_eq!((x.0, x.1), (y.0, y.1));
            prop_assert!((x.2 - y.2).abs() < 1e-9);
        }
    }

    #[test]
    fn prop_degree_independent_of_ordering(m in manifold_strategy(), seed in any::<u64>(), shuffle in any::<u64>()) {
        let k = KernelModel::new(KernelKind::Triangular, m.intrinsic_dim()).unwrap();
        let pts = sample_cloud(&m, &DensityModel::uniform(), 200, seed);
        let mut perm: Vec<usize> = (0..pts.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(shuffle);
        for i in (1..perm.len()).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let shuffled: Vec<Point> = perm.iter().map(|&i| pts[i]).collect();
        let g = build_eps_graph(&m, pts.clone(), 0.4, &k).unwrap();
        let h = build_eps_graph(&m, shuffled, 0.4, &k).unwrap();
        for p in pts.iter().take(20) {
            let a = g.discrete_degree(p);
            prop_assert!(a > 0.0);
            prop_assert!((a - h.discrete_degree(p)).abs() < 1e-12 * a.max(1.0));
        }
    }
}
