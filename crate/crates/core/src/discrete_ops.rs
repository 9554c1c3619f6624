//! Graph Laplacian, interpolation operator, discrete norms and the
//! pairwise regularity functionals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CloudError, Result};
use crate::geom::Point;
use crate::kernel_graph::EpsGraph;
use crate::linalg::CsrMatrix;
use crate::manifold::Manifold;

fn check_len(g: &EpsGraph, f: &[f64]) -> Result<()> {
    if f.len() != g.n() {
        return Err(CloudError::ShapeMismatch {
            expected: g.n(),
            got: f.len(),
        });
    }
    Ok(())
}

/// `1 / (n eps^{m+2})`
pub fn laplacian_scale(g: &EpsGraph) -> f64 {
    1.0 / (g.n() as f64 * g.eps.powi(g.m() as i32 + 2))
}

/// `(Lf)_i = (1 / (n eps^{m+2})) sum_j w_ij (f_i - f_j)`
pub fn graph_laplacian_apply(g: &EpsGraph, f: &[f64]) -> Result<Vec<f64>> {
    check_len(g, f)?;
    let scale = laplacian_scale(g);
    Ok((0..g.n())
        .into_par_iter()
        .map(|i| {
            let (cols, vals) = g.weights.row(i);
            let mut s = 0.0;
            for (j, w) in cols.iter().zip(vals) {
                s += w * (f[i] - f[*j as usize]);
            }
            scale * s
        })
        .collect())
}

/// Assembled `(D - W) / (n eps^{m+2})`.
pub fn graph_laplacian_matrix(g: &EpsGraph) -> CsrMatrix {
    let scale = laplacian_scale(g);
    let rows: Vec<Vec<(u32, f64)>> = (0..g.n())
        .map(|i| {
            let (cols, vals) = g.weights.row(i);
            let deg: f64 = vals.iter().sum();
            let mut row: Vec<(u32, f64)> = cols.iter().zip(vals).map(|(j, w)| (*j, -scale * w)).collect();
            row.push((i as u32, scale * deg));
            row
        })
        .collect();
    CsrMatrix::from_rows(rows)
}

/// Degree-normalized kernel extension of `f`; zero where the degree vanishes.
pub fn interpolate(g: &EpsGraph, f: &[f64], x: &Point) -> Result<f64> {
    check_len(g, f)?;
    Ok(interpolate_unchecked(g, f, x))
}

pub(crate) fn interpolate_unchecked(g: &EpsGraph, f: &[f64], x: &Point) -> f64 {
    let (s0, s1) = g.kernel_sums(x, f);
    if s0 > 0.0 {
        s1 / s0
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

/// Empirical `L^1`, `L^2` and `L^inf` norms (uniform weights `1/n`).
pub fn norms(f: &[f64]) -> Norms {
    let n = f.len().max(1) as f64;
    let l1 = f.iter().map(|v| v.abs()).sum::<f64>() / n;
    let l2 = (f.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let linf = f.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
    Norms { l1, l2, linf }
}

pub fn sup_norm(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |a: f64, v| a.max(v.abs()))
}

/// `sup - inf` of `f` over cloud points in the closed ambient ball.
pub fn oscillation(g: &EpsGraph, f: &[f64], x: &Point, r: f64) -> Result<f64> {
    check_len(g, f)?;
    let idx = g.query_ball(x, r);
    Ok(oscillation_over(f, &idx))
}

fn oscillation_over(f: &[f64], idx: &[usize]) -> f64 {
    if idx.len() <= 1 {
        return 0.0;
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &i in idx {
        lo = lo.min(f[i]);
        hi = hi.max(f[i]);
    }
    hi - lo
}

/// Maximum of a pairwise statistic and the pair attaining it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairMax {
    pub value: f64,
    pub pair: (usize, usize),
}

impl PairMax {
    const EMPTY: PairMax = PairMax {
        value: 0.0,
        pair: (0, 0),
    };

    /// Larger value wins; ties go to the lexicographically smaller pair.
    fn better(self, other: PairMax) -> PairMax {
        if other.value > self.value || (other.value == self.value && other.pair < self.pair) {
            other
        } else {
            self
        }
    }
}

/// For each of `nv` statistics, the maximum of `score(v, i, j, d_M(x_i, x_j))`
/// over pairs `i < j` drawn from `subset`.
fn pairwise_max<F>(
    manifold: &Manifold,
    points: &[Point],
    subset: &[usize],
    nv: usize,
    score: F,
) -> Vec<PairMax>
where
    F: Fn(usize, usize, usize, f64) -> f64 + Sync,
{
    let partials: Vec<Vec<PairMax>> = subset
        .par_iter()
        .enumerate()
        .map(|(a, &i)| {
            let mut best = vec![PairMax::EMPTY; nv];
            for &j in &subset[a + 1..] {
                let d = manifold.dist(&points[i], &points[j]);
                let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                for (v, b) in best.iter_mut().enumerate() {
                    let s = score(v, i, j, d);
                    if s > b.value || (s == b.value && s > 0.0 && (lo, hi) < b.pair) {
                        *b = PairMax {
                            value: s,
                            pair: (lo, hi),
                        };
                    }
                }
            }
            best
        })
        .collect();
    let mut out = vec![PairMax::EMPTY; nv];
    for p in partials {
        for (o, b) in out.iter_mut().zip(p) {
            if b.value > 0.0 {
                *o = o.better(b);
            }
        }
    }
    out
}

/// `[f]_{delta} = max_{i,j} |f_i - f_j| / (d_M(x_i, x_j) + delta)`.
pub fn approx_lipschitz_seminorm(g: &EpsGraph, f: &[f64], delta: f64) -> Result<PairMax> {
    check_len(g, f)?;
    Ok(approx_lipschitz_many(&g.manifold, &g.points, &[f], delta)?[0])
}

/// Seminorms of several functions on the same cloud in one pass over pairs.
pub fn approx_lipschitz_many(
    manifold: &Manifold,
    points: &[Point],
    fs: &[&[f64]],
    delta: f64,
) -> Result<Vec<PairMax>> {
    if !(delta > 0.0) {
        return Err(CloudError::InvalidParameter(format!(
            "delta = {delta} must be positive"
        )));
    }
    for f in fs {
        if f.len() != points.len() {
            return Err(CloudError::ShapeMismatch {
                expected: points.len(),
                got: f.len(),
            });
        }
    }
    let all: Vec<usize> = (0..points.len()).collect();
    Ok(pairwise_max(manifold, points, &all, fs.len(), |v, i, j, d| {
        (fs[v][i] - fs[v][j]).abs() / (d + delta)
    }))
}

/// `||L f||_inf / ||f||_inf`.
pub fn lambda_f(g: &EpsGraph, f: &[f64]) -> Result<f64> {
    check_len(g, f)?;
    let s = sup_norm(f);
    if s == 0.0 {
        return Err(CloudError::ZeroFunction);
    }
    let lf = graph_laplacian_apply(g, f)?;
    Ok(sup_norm(&lf) / s)
}

/// Empirical constant of the global Lipschitz estimate:
/// `max |f_i - f_j| / ((||f||_inf + ||Lf||_inf)(d_M + eps))`.
pub fn global_regularity_constant(g: &EpsGraph, f: &[f64]) -> Result<f64> {
    check_len(g, f)?;
    let lf = graph_laplacian_apply(g, f)?;
    let denom = sup_norm(f) + sup_norm(&lf);
    if denom == 0.0 {
        return Ok(0.0);
    }
    let eps = g.eps;
    let all: Vec<usize> = (0..g.n()).collect();
    let best = pairwise_max(&g.manifold, &g.points, &all, 1, |_, i, j, d| {
        (f[i] - f[j]).abs() / (denom * (d + eps))
    });
    Ok(best[0].value)
}

/// Indices of cloud points in the closed geodesic ball `B_M(x, r)`.
pub fn geodesic_ball(g: &EpsGraph, x: &Point, r: f64) -> Vec<usize> {
    // geodesic distance dominates the chord, so the ambient ball is a superset
    g.query_ball(x, r)
        .into_iter()
        .filter(|&i| g.manifold.dist(x, &g.points[i]) <= r)
        .collect()
}

/// Empirical constant of the interior two-term estimate on `B_M(x, r)`,
/// with local sup norms taken over `B_M(x, 7r)`.
pub fn interior_regularity_constant(g: &EpsGraph, f: &[f64], x: &Point, r: f64) -> Result<f64> {
    check_len(g, f)?;
    g.manifold.check_point(x)?;
    if !(r > 0.0) {
        return Err(CloudError::InvalidParameter(format!("r = {r} must be positive")));
    }
    let inner = geodesic_ball(g, x, r);
    if inner.len() < 2 {
        return Err(CloudError::InsufficientPoints {
            found: inner.len(),
            needed: 2,
        });
    }
    let outer = geodesic_ball(g, x, 7.0 * r);
    let lf = graph_laplacian_apply(g, f)?;
    let fsup = outer.iter().fold(0.0, |a: f64, &i| a.max(f[i].abs()));
    let lsup = outer.iter().fold(0.0, |a: f64, &i| a.max(lf[i].abs()));
    if fsup == 0.0 && lsup == 0.0 {
        return Ok(0.0);
    }
    let eps = g.eps;
    let leps = eps.ln().abs();
    let best = pairwise_max(&g.manifold, &g.points, &inner, 1, |_, i, j, d| {
        let denom = (d / r + eps * leps / r) * fsup + (r * d + eps * r / leps) * lsup;
        if denom > 0.0 {
            (f[i] - f[j]).abs() / denom
        } else {
            0.0
        }
    });
    Ok(best[0].value)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub lipschitz_constant_emp: f64,
    pub pair_argmax: (usize, usize),
    pub eps_used: f64,
    pub lambda_f: f64,
    pub sup_norm: f64,
    pub l1_norm: f64,
    pub l2_norm: f64,
}

/// `[f]_{eps}` together with `lambda_f` and the norms of `f`.
pub fn regularity_report(g: &EpsGraph, f: &[f64]) -> Result<RegularityReport> {
    let lip = approx_lipschitz_seminorm(g, f, g.eps)?;
    let nm = norms(f);
    Ok(RegularityReport {
        lipschitz_constant_emp: lip.value,
        pair_argmax: lip.pair,
        eps_used: g.eps,
        lambda_f: lambda_f(g, f)?,
        sup_norm: nm.linf,
        l1_norm: nm.l1,
        l2_norm: nm.l2,
    })
}
