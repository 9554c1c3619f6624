//! Monte-Carlo drivers for the concentration estimates: degree uniformity,
//! ball and annulus counts, and the double convolution kernel.
//!
//! The drivers query a cell grid directly instead of assembling a graph, so
//! large clouds at moderate eps stay cheap in memory.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CloudError, Result};
use crate::geom::{self, Point};
use crate::kernel_graph::{continuum_degree, unit_ball_volume, KernelModel, SpatialGrid};
use crate::manifold::{sample_cloud, BallRule, DensityModel, Manifold, ManifoldKind};
use crate::stats::{self, SlopeFit};

/// Per-seed values of one statistic with summary numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub statistic: String,
    pub n: usize,
    pub eps: f64,
    pub per_seed: Vec<f64>,
    pub median: f64,
    pub sup: f64,
    /// Reference value the statistic is compared with.
    pub reference: f64,
    pub pass: bool,
}

impl ConcentrationReport {
    fn new(statistic: &str, n: usize, eps: f64, per_seed: Vec<f64>, reference: f64, pass: bool) -> Self {
        ConcentrationReport {
            statistic: statistic.to_string(),
            n,
            eps,
            median: stats::median(&per_seed),
            sup: stats::max(&per_seed),
            per_seed,
            reference,
            pass,
        }
    }
}

fn seed_of(base: u64, n: usize, s: usize) -> u64 {
    base ^ ((n as u64) << 20) ^ (s as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

fn cloud_grid(m: &Manifold, rho: &DensityModel, n: usize, cell: f64, seed: u64) -> (Vec<Point>, SpatialGrid) {
    let pts = sample_cloud(m, rho, n, seed);
    let grid = SpatialGrid::new(&pts, m.ambient_dim(), cell);
    (pts, grid)
}

/// `(1/(n eps^m)) sum_i eta(|x_i - x| / eps)` over a cloud.
fn empirical_degree(grid: &SpatialGrid, pts: &[Point], kernel: &KernelModel, eps: f64, x: &Point) -> f64 {
    let mut s = 0.0;
    grid.for_each_within(pts, x, eps, |_, d2| s += kernel.eta(d2.sqrt() / eps));
    s / (pts.len() as f64 * eps.powi(kernel.m as i32))
}

/// Per seed, `sup_{x in net} |d_{eps,X_n}(x) - d_eps(x)|` over
/// `covering_net(eps^2)`.
pub fn degree_uniformity(
    m: &Manifold,
    rho: &DensityModel,
    kernel: &KernelModel,
    n: usize,
    eps: f64,
    seeds: usize,
    base_seed: u64,
) -> Result<ConcentrationReport> {
    if n == 0 || seeds == 0 {
        return Err(CloudError::InvalidParameter("need n >= 1 and seeds >= 1".into()));
    }
    let net = m.covering_net(eps * eps)?;
    let rule = BallRule::standard(m.intrinsic_dim());
    let cont: Vec<f64> = net
        .par_iter()
        .map(|x| crate::kernel_graph::continuum_degree_with(m, rho, kernel, eps, x, &rule))
        .collect();
    // validate once through the public entry point
    continuum_degree(m, rho, kernel, eps, &net[0])?;
    let per_seed: Vec<f64> = (0..seeds)
        .map(|s| {
            let (pts, grid) = cloud_grid(m, rho, n, eps, seed_of(base_seed, n, s));
            net.par_iter()
                .zip(&cont)
                .map(|(x, c)| (empirical_degree(&grid, &pts, kernel, eps, x) - c).abs())
                .reduce(|| 0.0, f64::max)
        })
        .collect();
    let nf = n as f64;
    let floor = (nf.ln() / nf).powf(1.0 / (m.intrinsic_dim() as f64 + 4.0)) / 2.0;
    Ok(ConcentrationReport::new(
        "degree_uniformity",
        n,
        eps,
        per_seed,
        eps * eps,
        eps >= floor,
    ))
}

/// Degree-uniformity statistics across `n` with the fitted decay slope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeSweep {
    pub reports: Vec<ConcentrationReport>,
    pub slope: SlopeFit,
    pub monotone: bool,
}

pub fn degree_uniformity_sweep(
    m: &Manifold,
    rho: &DensityModel,
    kernel: &KernelModel,
    n_list: &[usize],
    eps: f64,
    seeds: usize,
    base_seed: u64,
) -> Result<DegreeSweep> {
    let reports: Vec<ConcentrationReport> = n_list
        .iter()
        .map(|&n| degree_uniformity(m, rho, kernel, n, eps, seeds, base_seed))
        .collect::<Result<_>>()?;
    let levels: Vec<f64> = n_list.iter().map(|&n| n as f64).collect();
    let samples: Vec<Vec<f64>> = reports.iter().map(|r| r.per_seed.clone()).collect();
    let monotone = reports.windows(2).all(|w| w[1].median < w[0].median);
    Ok(DegreeSweep {
        slope: stats::loglog_slope_bootstrap(&levels, &samples, 1000, base_seed ^ 0xdee),
        monotone,
        reports,
    })
}

/// Min and max of a normalized count ratio per seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub statistic: String,
    pub n: usize,
    pub eps: f64,
    pub min_per_seed: Vec<f64>,
    pub max_per_seed: Vec<f64>,
    /// Expected ratio range from the density bounds.
    pub expected_min: f64,
    pub expected_max: f64,
    /// Every seed's range lies in `[expected_min / 4, 4 expected_max]`.
    pub pass: bool,
}

impl RatioReport {
    fn new(statistic: &str, n: usize, eps: f64, mins: Vec<f64>, maxs: Vec<f64>, lo: f64, hi: f64) -> Self {
        let pass = mins.iter().all(|v| *v >= 0.25 * lo) && maxs.iter().all(|v| *v <= 4.0 * hi);
        RatioReport {
            statistic: statistic.to_string(),
            n,
            eps,
            min_per_seed: mins,
            max_per_seed: maxs,
            expected_min: lo,
            expected_max: hi,
            pass,
        }
    }
}

fn count_range<F>(
    m: &Manifold,
    rho: &DensityModel,
    n: usize,
    cell: f64,
    seeds: usize,
    base_seed: u64,
    net: &[Point],
    count: F,
) -> (Vec<f64>, Vec<f64>)
where
    F: Fn(&SpatialGrid, &[Point], &Point) -> f64 + Sync,
{
    let mut mins = Vec::with_capacity(seeds);
    let mut maxs = Vec::with_capacity(seeds);
    for s in 0..seeds {
        let (pts, grid) = cloud_grid(m, rho, n, cell, seed_of(base_seed, n, s));
        let vals: Vec<f64> = net.par_iter().map(|x| count(&grid, &pts, x)).collect();
        mins.push(stats::min(&vals));
        maxs.push(stats::max(&vals));
    }
    (mins, maxs)
}

/// `#{x_i in B(x, eps)} / (n eps^m)` over `covering_net(eps / 2)`.
pub fn ball_count_check(
    m: &Manifold,
    rho: &DensityModel,
    n: usize,
    eps: f64,
    seeds: usize,
    base_seed: u64,
) -> Result<RatioReport> {
    if !(eps > 0.0) || n == 0 || seeds == 0 {
        return Err(CloudError::InvalidParameter(
            "need eps > 0, n >= 1, seeds >= 1".into(),
        ));
    }
    let net = m.covering_net(0.5 * eps.min(1.0))?;
    let dim = m.intrinsic_dim();
    let norm = n as f64 * eps.powi(dim as i32);
    let (mins, maxs) = count_range(m, rho, n, eps, seeds, base_seed, &net, |g, p, x| {
        let mut c = 0usize;
        g.for_each_within(p, x, eps, |_, _| c += 1);
        c as f64 / norm
    });
    let bm = unit_ball_volume(dim);
    Ok(RatioReport::new(
        "ball_count",
        n,
        eps,
        mins,
        maxs,
        rho.min_value(m) * bm,
        rho.max_value(m) * bm,
    ))
}

/// `#{(1-t) eps <= |x_i - x| <= (1+t) eps} / (n eps^m t)` over
/// `covering_net(eps / 2)`.
pub fn annulus_count_check(
    m: &Manifold,
    rho: &DensityModel,
    n: usize,
    eps: f64,
    t: f64,
    seeds: usize,
    base_seed: u64,
) -> Result<RatioReport> {
    if !(t >= eps * eps && t <= 1.0) {
        return Err(CloudError::InvalidParameter(format!(
            "annulus width t = {t} must lie in [eps^2, 1]"
        )));
    }
    let net = m.covering_net(0.5 * eps.min(1.0))?;
    let dim = m.intrinsic_dim();
    let norm = n as f64 * eps.powi(dim as i32) * t;
    let lo2 = ((1.0 - t) * eps).powi(2);
    let (mins, maxs) = count_range(m, rho, n, (1.0 + t) * eps, seeds, base_seed, &net, |g, p, x| {
        let mut c = 0usize;
        g.for_each_within(p, x, (1.0 + t) * eps, |_, d2| {
            if d2 >= lo2 {
                c += 1
            }
        });
        c as f64 / norm
    });
    // volume of the shell is about 2 t m |B_m| eps^m
    let shell = 2.0 * dim as f64 * unit_ball_volume(dim);
    Ok(RatioReport::new(
        "annulus_count",
        n,
        eps,
        mins,
        maxs,
        rho.min_value(m) * shell,
        rho.max_value(m) * shell,
    ))
}

/// Pairs `(x, y)` around net points: 8 directions (2 on the circle) times
/// radii `{0.5, 1, 1.5, 2} eps` along geodesics, plus `y = x`.
pub fn pair_net(m: &Manifold, eps: f64, h: f64) -> Result<Vec<(Point, Point)>> {
    let net = m.covering_net(h)?;
    let dirs: Vec<[f64; 2]> = match m.kind {
        ManifoldKind::Circle => vec![[1.0, 0.0], [-1.0, 0.0]],
        _ => (0..8)
            .map(|k| {
                let a = k as f64 * std::f64::consts::PI / 4.0;
                [a.cos(), a.sin()]
            })
            .collect(),
    };
    let mut out = Vec::new();
    for x in &net {
        let frame = m.frame(x);
        out.push((*x, *x));
        for d in &dirs {
            for k in 1..=4 {
                let s = 0.5 * k as f64 * eps;
                out.push((*x, m.exp_frame(x, &frame, &[s * d[0], s * d[1]])));
            }
        }
    }
    Ok(out)
}

/// `eps^{-m} int eta(|z-x|/eps) eta(|z-y|/eps) dVol(z)` by quadrature in
/// normal coordinates around `x` on a geodesic ball containing the support.
pub fn double_convolution_continuum(
    m: &Manifold,
    kernel: &KernelModel,
    eps: f64,
    x: &Point,
    y: &Point,
) -> f64 {
    if geom::dist(x, y) > 2.0 * eps {
        return 0.0;
    }
    let rule = double_rule(m.intrinsic_dim());
    // chords never exceed geodesic distances, so this radius covers |z-x| <= eps
    let rad = (2.0 * (0.5 * eps).asin()).min(0.99 * m.injectivity_radius());
    let frame = m.frame(x);
    let mut s = 0.0;
    for (w, q) in rule.nodes.iter().zip(&rule.weights) {
        let r = w[0].hypot(w[1]);
        let z = m.exp_frame(x, &frame, &[rad * w[0], rad * w[1]]);
        let a = kernel.eta(geom::dist(&z, x) / eps);
        if a == 0.0 {
            continue;
        }
        s += q * a * kernel.eta(geom::dist(&z, y) / eps) * m.metric_factor(rad * r);
    }
    s * (rad / eps).powi(m.intrinsic_dim() as i32)
}

fn double_rule(m: usize) -> &'static BallRule {
    use std::sync::OnceLock;
    static RULES: OnceLock<[BallRule; 2]> = OnceLock::new();
    &RULES.get_or_init(|| [BallRule::new(1, 400, 2), BallRule::new(2, 96, 192)])[m - 1]
}

/// Per seed, `sup |(1/n) sum eta_i(x) eta_i(y) / rho(x_i) - int eta eta dVol| / eps^m`
/// over [`pair_net`].
pub fn double_convolution_check(
    m: &Manifold,
    rho: &DensityModel,
    kernel: &KernelModel,
    n: usize,
    eps: f64,
    seeds: usize,
    base_seed: u64,
) -> Result<ConcentrationReport> {
    if !(eps > 0.0 && eps < 1.0) || n == 0 || seeds == 0 {
        return Err(CloudError::InvalidParameter(
            "need eps in (0, 1), n >= 1, seeds >= 1".into(),
        ));
    }
    let pairs = pair_net(m, eps, eps)?;
    let cont: Vec<f64> = pairs
        .par_iter()
        .map(|(x, y)| double_convolution_continuum(m, kernel, eps, x, y))
        .collect();
    let em = eps.powi(m.intrinsic_dim() as i32);
    let per_seed: Vec<f64> = (0..seeds)
        .map(|s| {
            let (pts, grid) = cloud_grid(m, rho, n, eps, seed_of(base_seed, n, s));
            pairs
                .par_iter()
                .zip(&cont)
                .map(|((x, y), c)| {
                    let mut acc = 0.0;
                    grid.for_each_within(&pts, x, eps, |i, d2| {
                        let b = kernel.eta(geom::dist(&pts[i], y) / eps);
                        if b > 0.0 {
                            acc += kernel.eta(d2.sqrt() / eps) * b / rho.value(m, &pts[i]);
                        }
                    });
                    (acc / n as f64 / em - c).abs()
                })
                .reduce(|| 0.0, f64::max)
        })
        .collect();
    let scale = stats::max(&cont);
    Ok(ConcentrationReport::new(
        "double_convolution",
        n,
        eps,
        per_seed,
        scale,
        true,
    ))
}
