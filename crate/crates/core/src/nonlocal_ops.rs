//! Continuum operators at scale eps: the nonlocal Laplacian, the averaging
//! operators `A_eps` and `Abar_eps`, and bridges from graph functions.
//!
//! All integrals over geodesic balls are taken in normal coordinates,
//! `int_{B_M(x, eps)} g dVol = eps^m int_{B(0,1)} g(Exp_x(eps w)) J(eps|w|) dw`,
//! with a tensor Gauss-Legendre / trapezoid rule on the unit ball.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrete_ops::{self, interpolate_unchecked};
use crate::error::{CloudError, Result};
use crate::geom::{self, Point};
use crate::kernel_graph::{EpsGraph, KernelModel};
use crate::manifold::{BallRule, DensityModel, Manifold, ManifoldKind};
use crate::stats;

fn rule(m: usize) -> &'static BallRule {
    static RULES: OnceLock<[BallRule; 2]> = OnceLock::new();
    let rules = RULES.get_or_init(|| [BallRule::standard(1), BallRule::standard(2)]);
    &rules[m - 1]
}

fn check_eps(manifold: &Manifold, eps: f64, limit: f64) -> Result<()> {
    if !(eps > 0.0 && eps < limit) {
        return Err(CloudError::InvalidParameter(format!(
            "eps = {eps} must lie in (0, {limit})"
        )));
    }
    let _ = manifold;
    Ok(())
}

fn check_kernel(manifold: &Manifold, kernel: &KernelModel) -> Result<()> {
    if kernel.m != manifold.intrinsic_dim() {
        return Err(CloudError::InvalidParameter(format!(
            "kernel dimension {} does not match manifold dimension {}",
            kernel.m,
            manifold.intrinsic_dim()
        )));
    }
    Ok(())
}

/// Ambient function restricted to `M`, or an angle harmonic, with closed-form
/// gradient and Laplace-Beltrami operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TestFunction {
    Constant {
        c: f64,
    },
    /// `<x, a>`
    Linear {
        a: Point,
    },
    /// `<x, a> <x, b>`
    Quadratic {
        a: Point,
        b: Point,
    },
    /// `tanh(k <x, a>)`, a smoothed sign.
    Ridge {
        a: Point,
        k: f64,
    },
    /// `cos(j t + phase)` in the angle `t` of factor `axis` (circle, torus)
    /// or the azimuth (sphere).
    Angle {
        axis: usize,
        j: f64,
        phase: f64,
    },
}

impl TestFunction {
    pub fn name(&self) -> String {
        match self {
            TestFunction::Constant { c } => format!("const({c})"),
            TestFunction::Linear { a } => format!("linear{:?}", &a[..]),
            TestFunction::Quadratic { a, b } => format!("quad{:?}x{:?}", &a[..], &b[..]),
            TestFunction::Ridge { a, k } => format!("ridge{:?}k{k}", &a[..]),
            TestFunction::Angle { axis, j, phase } => format!("angle{axis}_j{j}_p{phase}"),
        }
    }

    pub fn value(&self, m: &Manifold, x: &Point) -> f64 {
        match self {
            TestFunction::Constant { c } => *c,
            TestFunction::Linear { a } => geom::dot(x, a),
            TestFunction::Quadratic { a, b } => geom::dot(x, a) * geom::dot(x, b),
            TestFunction::Ridge { a, k } => (k * geom::dot(x, a)).tanh(),
            TestFunction::Angle { axis, j, phase } => {
                let (t, _, _) = angle_data(m, x, *axis);
                (j * t + phase).cos()
            }
        }
    }

    /// Riemannian gradient (ambient coordinates).
    pub fn gradient(&self, m: &Manifold, x: &Point) -> Point {
        match self {
            TestFunction::Constant { .. } => geom::ZERO,
            TestFunction::Angle { axis, j, phase } => {
                let (t, dir, s) = angle_data(m, x, *axis);
                geom::scale(&dir, -j * (j * t + phase).sin() / s)
            }
            _ => m.tangent_project(x, &self.ambient_gradient(x)),
        }
    }

    fn ambient_gradient(&self, x: &Point) -> Point {
        match self {
            TestFunction::Linear { a } => *a,
            TestFunction::Quadratic { a, b } => {
                geom::axpy(&geom::scale(a, geom::dot(x, b)), geom::dot(x, a), b)
            }
            TestFunction::Ridge { a, k } => {
                let th = (k * geom::dot(x, a)).tanh();
                geom::scale(a, k * (1.0 - th * th))
            }
            _ => geom::ZERO,
        }
    }

    /// Laplace-Beltrami operator `div grad f` (negative semidefinite sign).
    pub fn laplace_beltrami(&self, m: &Manifold, x: &Point) -> f64 {
        let frame = m.frame(x);
        let e = &frame[..m.intrinsic_dim()];
        match self {
            TestFunction::Constant { .. } => 0.0,
            TestFunction::Angle { axis, j, phase } => {
                let (t, _, s) = angle_data(m, x, *axis);
                -j * j * (j * t + phase).cos() / (s * s)
            }
            _ => {
                let trace = match self {
                    TestFunction::Linear { .. } => 0.0,
                    TestFunction::Quadratic { a, b } => {
                        2.0 * e.iter().map(|v| geom::dot(v, a) * geom::dot(v, b)).sum::<f64>()
                    }
                    TestFunction::Ridge { a, k } => {
                        let th = (k * geom::dot(x, a)).tanh();
                        let second = -2.0 * th * (1.0 - th * th) * k * k;
                        second * e.iter().map(|v| geom::dot(v, a).powi(2)).sum::<f64>()
                    }
                    _ => unreachable!(),
                };
                trace + geom::dot(&m.mean_curvature(x), &self.ambient_gradient(x))
            }
        }
    }

    /// `Delta f + 2 <grad f, grad log rho>`.
    pub fn weighted_a(&self, m: &Manifold, rho: &DensityModel, x: &Point) -> f64 {
        self.laplace_beltrami(m, x) + 2.0 * geom::dot(&self.gradient(m, x), &rho.grad_log(m, x))
    }
}

/// Angle coordinate, its unit direction and the metric length of `d/dt`.
fn angle_data(m: &Manifold, x: &Point, axis: usize) -> (f64, Point, f64) {
    match m.kind {
        ManifoldKind::Circle => (x[1].atan2(x[0]), [-x[1], x[0], 0.0, 0.0], 1.0),
        ManifoldKind::FlatTorus2 => {
            if axis == 0 {
                (x[1].atan2(x[0]), [-x[1], x[0], 0.0, 0.0], 1.0)
            } else {
                (x[3].atan2(x[2]), [0.0, 0.0, -x[3], x[2]], 1.0)
            }
        }
        ManifoldKind::Sphere2 => {
            let s = (x[0] * x[0] + x[1] * x[1]).sqrt();
            (x[1].atan2(x[0]), [-x[1] / s, x[0] / s, 0.0, 0.0], s)
        }
    }
}

/// `A_eps f(x)`: density- and kernel-weighted average over the geodesic ball.
pub fn averaging_a<F>(
    manifold: &Manifold,
    rho: &DensityModel,
    kernel: &KernelModel,
    eps: f64,
    f: F,
    x: &Point,
) -> Result<f64>
where
    F: Fn(&Point) -> f64,
{
    manifold.check_point(x)?;
    check_kernel(manifold, kernel)?;
    check_eps(manifold, eps, manifold.injectivity_radius())?;
    let (num, den) = weighted_ball_sums(manifold, rho, kernel, eps, &f, x);
    Ok(num / den)
}

fn weighted_ball_sums<F: Fn(&Point) -> f64>(
    manifold: &Manifold,
    rho: &DensityModel,
    kernel: &KernelModel,
    eps: f64,
    f: &F,
    x: &Point,
) -> (f64, f64) {
    let r = rule(manifold.intrinsic_dim());
    let frame = manifold.frame(x);
    let mut num = 0.0;
    let mut den = 0.0;
    for (w, q) in r.nodes.iter().zip(&r.weights) {
        let rad = w[0].hypot(w[1]);
        let y = manifold.exp_frame(x, &frame, &[eps * w[0], eps * w[1]]);
        let mass = q * kernel.eta(rad) * rho.value(manifold, &y) * manifold.metric_factor(eps * rad);
        num += mass * f(&y);
        den += mass;
    }
    (num, den)
}

/// `Abar_eps f(x) = int eta(|w|) (1 + eps <w, grad log rho(x)>) f(Exp_x(eps w)) dw`.
pub fn averaging_abar<F>(
    manifold: &Manifold,
    rho: &DensityModel,
    kernel: &KernelModel,
    eps: f64,
    f: F,
    x: &Point,
) -> Result<f64>
where
    F: Fn(&Point) -> f64,
{
    manifold.check_point(x)?;
    check_kernel(manifold, kernel)?;
    check_eps(manifold, eps, manifold.injectivity_radius())?;
    let r = rule(manifold.intrinsic_dim());
    let frame = manifold.frame(x);
    let g = manifold.frame_coords(&frame, &rho.grad_log(manifold, x));
    let mut s = 0.0;
    for (w, q) in r.nodes.iter().zip(&r.weights) {
        let rad = w[0].hypot(w[1]);
        let y = manifold.exp_frame(x, &frame, &[eps * w[0], eps * w[1]]);
        let tilt = 1.0 + eps * (w[0] * g[0] + w[1] * g[1]);
        s += q * kernel.eta(rad) * tilt * f(&y);
    }
    Ok(s)
}

/// `Delta_eps f(x) = eps^{-(m+2)} int eta(d_M(x,y)/eps) (f(x) - f(y)) rho(y) dVol(y)`.
pub fn nonlocal_laplacian<F>(
    manifold: &Manifold,
    rho: &DensityModel,
    kernel: &KernelModel,
    eps: f64,
    f: F,
    x: &Point,
) -> Result<f64>
where
    F: Fn(&Point) -> f64,
{
    manifold.check_point(x)?;
    check_kernel(manifold, kernel)?;
    check_eps(manifold, eps, manifold.injectivity_radius())?;
    Ok(nonlocal_laplacian_unchecked(manifold, rho, kernel, eps, &f, x))
}

fn nonlocal_laplacian_unchecked<F: Fn(&Point) -> f64>(
    manifold: &Manifold,
    rho: &DensityModel,
    kernel: &KernelModel,
    eps: f64,
    f: &F,
    x: &Point,
) -> f64 {
    let r = rule(manifold.intrinsic_dim());
    let frame = manifold.frame(x);
    let fx = f(x);
    let mut s = 0.0;
    for (w, q) in r.nodes.iter().zip(&r.weights) {
        let rad = w[0].hypot(w[1]);
        let y = manifold.exp_frame(x, &frame, &[eps * w[0], eps * w[1]]);
        s += q * kernel.eta(rad) * (fx - f(&y)) * rho.value(manifold, &y) * manifold.metric_factor(eps * rad);
    }
    s / (eps * eps)
}

/// Residuals `|A f - f - (sigma/2) eps^2 A_w f|` for `A_eps` and `Abar_eps`,
/// where `A_w f = Delta f + 2 <grad f, grad log rho>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyResidual {
    pub a: f64,
    pub abar: f64,
    /// `|A_eps f - Abar_eps f| / eps^2`
    pub a_abar_ratio: f64,
}

pub fn consistency_residual(
    manifold: &Manifold,
    rho: &DensityModel,
    kernel: &KernelModel,
    eps: f64,
    f: &TestFunction,
    x: &Point,
) -> Result<ConsistencyResidual> {
    check_eps(manifold, eps, 0.5 * manifold.injectivity_radius())?;
    let val = |y: &Point| f.value(manifold, y);
    let a = averaging_a(manifold, rho, kernel, eps, val, x)?;
    let abar = averaging_abar(manifold, rho, kernel, eps, val, x)?;
    let fx = f.value(manifold, x);
    let expansion = 0.5 * kernel.sigma() * eps * eps * f.weighted_a(manifold, rho, x);
    Ok(ConsistencyResidual {
        a: (a - fx - expansion).abs(),
        abar: (abar - fx - expansion).abs(),
        a_abar_ratio: (a - abar).abs() / (eps * eps),
    })
}

/// Residual sweep over several eps with fitted log-log slopes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencySweep {
    pub function: String,
    pub eps: Vec<f64>,
    pub residual_a: Vec<f64>,
    pub residual_abar: Vec<f64>,
    pub a_abar_ratio: Vec<f64>,
    pub slope_a: f64,
    pub slope_abar: f64,
}

impl ConsistencySweep {
    pub fn running_slopes_a(&self) -> Vec<f64> {
        stats::running_slopes(&self.eps, &self.residual_a)
    }

    pub fn running_slopes_abar(&self) -> Vec<f64> {
        stats::running_slopes(&self.eps, &self.residual_abar)
    }

    /// The ratio does not grow as eps shrinks: its maximum over the sweep is
    /// within a factor `tol` of its value at the largest eps (plus a
    /// rounding floor).
    pub fn ratio_bounded(&self, tol: f64) -> bool {
        let first = self.a_abar_ratio[0];
        self.a_abar_ratio
            .iter()
            .all(|r| r.is_finite() && *r <= tol * first + 1e-9)
    }
}

pub fn consistency_sweep(
    manifold: &Manifold,
    rho: &DensityModel,
    kernel: &KernelModel,
    f: &TestFunction,
    x: &Point,
    eps_list: &[f64],
) -> Result<ConsistencySweep> {
    let mut ra = Vec::new();
    let mut rb = Vec::new();
    let mut ratio = Vec::new();
    for &e in eps_list {
        let r = consistency_residual(manifold, rho, kernel, e, f, x)?;
        ra.push(r.a);
        rb.push(r.abar);
        ratio.push(r.a_abar_ratio);
    }
    Ok(ConsistencySweep {
        function: f.name(),
        eps: eps_list.to_vec(),
        slope_a: stats::loglog_slope(eps_list, &ra),
        slope_abar: stats::loglog_slope(eps_list, &rb),
        residual_a: ra,
        residual_abar: rb,
        a_abar_ratio: ratio,
    })
}

/// Output of [`discrete_to_nonlocal_check`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BridgeCheck {
    /// `|Delta_eps (I f)(x)|`
    pub lhs: f64,
    /// `||L f||_inf on B(x, eps) + osc f on B(x, 2 eps)`
    pub rhs: f64,
    /// `||L f||_inf + eps ||f||_inf` over the whole cloud
    pub rhs_improved: f64,
}

pub fn discrete_to_nonlocal_check(
    g: &EpsGraph,
    rho: &DensityModel,
    f: &[f64],
    x: &Point,
) -> Result<BridgeCheck> {
    let lf = discrete_ops::graph_laplacian_apply(g, f)?;
    discrete_to_nonlocal_with(g, rho, f, &lf, x)
}

/// Same as [`discrete_to_nonlocal_check`] with a precomputed `L f`.
pub fn discrete_to_nonlocal_with(
    g: &EpsGraph,
    rho: &DensityModel,
    f: &[f64],
    lf: &[f64],
    x: &Point,
) -> Result<BridgeCheck> {
    if f.len() != g.n() || lf.len() != g.n() {
        return Err(CloudError::ShapeMismatch {
            expected: g.n(),
            got: f.len().min(lf.len()),
        });
    }
    let interp = |y: &Point| interpolate_unchecked(g, f, y);
    let lhs = nonlocal_laplacian(&g.manifold, rho, &g.kernel, g.eps, interp, x)?.abs();
    let near = g.query_ball(x, g.eps);
    let lsup = near.iter().fold(0.0, |a: f64, &i| a.max(lf[i].abs()));
    let osc = discrete_ops::oscillation(g, f, x, 2.0 * g.eps)?;
    Ok(BridgeCheck {
        lhs,
        rhs: lsup + osc,
        rhs_improved: discrete_ops::sup_norm(lf) + g.eps * discrete_ops::sup_norm(f),
    })
}

/// Sup norms of `f` and `Delta_eps f` over `covering_net(eps / 4)`,
/// optionally restricted to the geodesic ball `B_M(center, radius)`.
pub fn nonlocal_sup_norms<F>(
    manifold: &Manifold,
    rho: &DensityModel,
    kernel: &KernelModel,
    eps: f64,
    f: &F,
    restrict: Option<(&Point, f64)>,
) -> Result<(f64, f64)>
where
    F: Fn(&Point) -> f64 + Sync,
{
    check_kernel(manifold, kernel)?;
    check_eps(manifold, eps, manifold.injectivity_radius())?;
    let net = manifold.covering_net(0.25 * eps)?;
    let pts: Vec<Point> = match restrict {
        Some((c, r)) => net.into_iter().filter(|p| manifold.dist(c, p) <= r).collect(),
        None => net,
    };
    let vals: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|p| {
            (
                f(p).abs(),
                nonlocal_laplacian_unchecked(manifold, rho, kernel, eps, f, p).abs(),
            )
        })
        .collect();
    Ok(vals
        .iter()
        .fold((0.0, 0.0), |(a, b), (u, v)| (a.max(*u), b.max(*v))))
}

/// `|f(x) - f(y)| / ((||f||_inf + ||Delta_eps f||_inf)(d_M(x,y) + eps))`.
pub fn nonlocal_regularity_constant<F>(
    manifold: &Manifold,
    rho: &DensityModel,
    kernel: &KernelModel,
    eps: f64,
    f: &F,
    x: &Point,
    y: &Point,
) -> Result<f64>
where
    F: Fn(&Point) -> f64 + Sync,
{
    let d = manifold.geodesic_distance(x, y)?;
    let (fs, ls) = nonlocal_sup_norms(manifold, rho, kernel, eps, f, None)?;
    if fs + ls == 0.0 {
        return Ok(0.0);
    }
    Ok((f(x) - f(y)).abs() / ((fs + ls) * (d + eps)))
}

/// Interior variant on `B_M(x0, r)` with sup norms over `B_M(x0, 7r)` and the
/// logarithmic weights of the interior estimate.
#[allow(clippy::too_many_arguments)]
pub fn nonlocal_interior_constant<F>(
    manifold: &Manifold,
    rho: &DensityModel,
    kernel: &KernelModel,
    eps: f64,
    f: &F,
    x0: &Point,
    r: f64,
    x: &Point,
    y: &Point,
) -> Result<f64>
where
    F: Fn(&Point) -> f64 + Sync,
{
    let d = manifold.geodesic_distance(x, y)?;
    if manifold.dist(x0, x) > r || manifold.dist(x0, y) > r {
        return Err(CloudError::InvalidParameter(
            "x and y must lie in B_M(x0, r)".into(),
        ));
    }
    let (fs, ls) = nonlocal_sup_norms(manifold, rho, kernel, eps, f, Some((x0, 7.0 * r)))?;
    let le = eps.ln().abs();
    let denom = (d / r + eps * le / r) * fs + (r * d + eps * r / le) * ls;
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((f(x) - f(y)).abs() / denom)
}
