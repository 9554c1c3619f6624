use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::SpatialGrid;
use super::kernel::KernelModel;
use crate::error::{CloudError, Result};
use crate::geom::{self, Point};
use crate::linalg::CsrMatrix;
use crate::manifold::{BallRule, DensityModel, Manifold};

/// Weighted epsilon-graph: `w_ij = eta(|x_i - x_j| / eps)` in ambient
/// distance, no self loops.
#[derive(Clone, Debug)]
pub struct EpsGraph {
    pub manifold: Manifold,
    pub points: Vec<Point>,
    pub eps: f64,
    pub kernel: KernelModel,
    pub weights: CsrMatrix,
    pub connected: bool,
    grid: SpatialGrid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSidecar {
    pub n: usize,
    pub eps: f64,
    pub kernel: String,
    pub m: usize,
    pub connected: bool,
}

fn validate(manifold: &Manifold, points: &[Point], eps: f64, kernel: &KernelModel) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(CloudError::InvalidParameter(format!(
            "eps = {eps} must be positive"
        )));
    }
    if points.is_empty() {
        return Err(CloudError::InvalidParameter(
            "a graph needs at least one point".into(),
        ));
    }
    if kernel.m != manifold.intrinsic_dim() {
        return Err(CloudError::InvalidParameter(format!(
            "kernel dimension {} does not match manifold dimension {}",
            kernel.m,
            manifold.intrinsic_dim()
        )));
    }
    for p in points {
        manifold.check_point(p)?;
    }
    Ok(())
}

/// Builds the graph with an ambient cell grid of cell size `eps`.
pub fn build_eps_graph(
    manifold: &Manifold,
    points: Vec<Point>,
    eps: f64,
    kernel: &KernelModel,
) -> Result<EpsGraph> {
    validate(manifold, &points, eps, kernel)?;
    let grid = SpatialGrid::new(&points, manifold.ambient_dim(), eps);
    let rows: Vec<Vec<(u32, f64)>> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::new();
            grid.for_each_within(&points, &points[i], eps, |j, d2| {
                if j != i {
                    let w = kernel.eta(d2.sqrt() / eps);
                    if w > 0.0 {
                        row.push((j as u32, w));
                    }
                }
            });
            row
        })
        .collect();
    Ok(finish(manifold, points, eps, kernel, rows, grid))
}

/// O(n^2) reference construction.
pub fn build_eps_graph_brute(
    manifold: &Manifold,
    points: Vec<Point>,
    eps: f64,
    kernel: &KernelModel,
) -> Result<EpsGraph> {
    validate(manifold, &points, eps, kernel)?;
    let grid = SpatialGrid::new(&points, manifold.ambient_dim(), eps);
    let n = points.len();
    let rows: Vec<Vec<(u32, f64)>> = (0..n)
        .map(|i| {
            let mut row = Vec::new();
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d2 = geom::dist2(&points[j], &points[i]);
                if d2 <= eps * eps {
                    let w = kernel.eta(d2.sqrt() / eps);
                    if w > 0.0 {
                        row.push((j as u32, w));
                    }
                }
            }
            row
        })
        .collect();
    Ok(finish(manifold, points, eps, kernel, rows, grid))
}

fn finish(
    manifold: &Manifold,
    points: Vec<Point>,
    eps: f64,
    kernel: &KernelModel,
    rows: Vec<Vec<(u32, f64)>>,
    grid: SpatialGrid,
) -> EpsGraph {
    let weights = CsrMatrix::from_rows(rows);
    let connected = is_connected(&weights);
    EpsGraph {
        manifold: *manifold,
        points,
        eps,
        kernel: *kernel,
        weights,
        connected,
        grid,
    }
}

fn is_connected(w: &CsrMatrix) -> bool {
    if w.n == 0 {
        return true;
    }
    let mut seen = vec![false; w.n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = queue.pop_front() {
        for &j in w.row(i).0 {
            let j = j as usize;
            if !seen[j] {
                seen[j] = true;
                count += 1;
                queue.push_back(j);
            }
        }
    }
    count == w.n
}

impl EpsGraph {
    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn m(&self) -> usize {
        self.kernel.m
    }

    /// Row sums of the weight matrix.
    pub fn weighted_degrees(&self) -> Vec<f64> {
        self.weights.row_sums()
    }

    /// Advisory message when the graph is disconnected.
    pub fn regime_warning(&self) -> Option<String> {
        if self.connected {
            None
        } else {
            let n = self.n() as f64;
            let floor = (n.ln() / n).powf(1.0 / (self.m() as f64 + 4.0));
            Some(format!(
                "graph is disconnected at eps = {}; the regime eps >~ (log n / n)^(1/(m+4)) = {floor:.4} is advised",
                self.eps
            ))
        }
    }

    /// `d(x) = (1/n) sum_i eps^{-m} eta(|x - x_i| / eps)`, self term included.
    pub fn discrete_degree(&self, x: &Point) -> f64 {
        let mut s = 0.0;
        self.grid.for_each_within(&self.points, x, self.eps, |_, d2| {
            s += self.kernel.eta(d2.sqrt() / self.eps)
        });
        s / (self.n() as f64 * self.eps.powi(self.m() as i32))
    }

    /// Kernel-weighted sums `(sum eta_i, sum eta_i f_i)` around `x`.
    pub(crate) fn kernel_sums(&self, x: &Point, f: &[f64]) -> (f64, f64) {
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        self.grid.for_each_within(&self.points, x, self.eps, |i, d2| {
            let w = self.kernel.eta(d2.sqrt() / self.eps);
            s0 += w;
            s1 += w * f[i];
        });
        (s0, s1)
    }

    /// Indices of cloud points in the closed ambient ball, ascending.
    pub fn query_ball(&self, x: &Point, radius: f64) -> Vec<usize> {
        self.grid.query(&self.points, x, radius)
    }

    pub fn ball_count(&self, x: &Point, radius: f64) -> usize {
        let mut c = 0;
        self.grid.for_each_within(&self.points, x, radius, |_, _| c += 1);
        c
    }

    /// `#{i : (1 - t) eps <= |x_i - x| <= (1 + t) eps}`.
    pub fn annulus_count(&self, x: &Point, eps: f64, t: f64) -> Result<usize> {
        if !(t >= eps * eps && t <= 1.0) {
            return Err(CloudError::InvalidParameter(format!(
                "annulus width t = {t} must lie in [eps^2, 1]"
            )));
        }
        let lo = (1.0 - t) * eps;
        let lo2 = lo * lo;
        let mut c = 0;
        self.grid
            .for_each_within(&self.points, x, (1.0 + t) * eps, |_, d2| {
                if d2 >= lo2 {
                    c += 1;
                }
            });
        Ok(c)
    }

    /// Edges `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n()).flat_map(move |i| {
            let (cols, vals) = self.weights.row(i);
            cols.iter()
                .zip(vals)
                .filter(move |(j, _)| (**j as usize) > i)
                .map(move |(j, v)| (i, *j as usize, *v))
        })
    }

    pub fn sidecar(&self) -> GraphSidecar {
        GraphSidecar {
            n: self.n(),
            eps: self.eps,
            kernel: self.kernel.kind.as_str().to_string(),
            m: self.m(),
            connected: self.connected,
        }
    }

    /// Writes `i,j,w` rows plus the JSON sidecar next to it.
    pub fn write_csv(&self, csv_path: &Path, sidecar_path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(csv_path)?);
        writeln!(out, "i,j,w")?;
        for (i, j, w) in self.edges() {
            writeln!(out, "{i},{j},{}", crate::io::fmt_f64(w))?;
        }
        out.flush()?;
        let json = serde_json::to_string_pretty(&self.sidecar())?;
        std::fs::write(sidecar_path, json + "\n")?;
        Ok(())
    }
}

/// `d_eps(x) = int_{B(0,1)} eta(|w|) rho(Exp_x(eps w)) J(eps |w|) dw`, the
/// normal-coordinate form of the continuum degree.
pub fn continuum_degree(
    manifold: &Manifold,
    rho: &DensityModel,
    kernel: &KernelModel,
    eps: f64,
    x: &Point,
) -> Result<f64> {
    manifold.check_point(x)?;
    if !(eps > 0.0 && eps < manifold.injectivity_radius()) {
        return Err(CloudError::InvalidParameter(format!(
            "eps = {eps} must lie in (0, injectivity radius)"
        )));
    }
    let rule = BallRule::standard(manifold.intrinsic_dim());
    Ok(continuum_degree_with(manifold, rho, kernel, eps, x, &rule))
}

pub(crate) fn continuum_degree_with(
    manifold: &Manifold,
    rho: &DensityModel,
    kernel: &KernelModel,
    eps: f64,
    x: &Point,
    rule: &BallRule,
) -> f64 {
    let frame = manifold.frame(x);
    let mut s = 0.0;
    for (w, q) in rule.nodes.iter().zip(&rule.weights) {
        let r = w[0].hypot(w[1]);
        let y = manifold.exp_frame(x, &frame, &[eps * w[0], eps * w[1]]);
        s += q * kernel.eta(r) * rho.value(manifold, &y) * manifold.metric_factor(eps * r);
    }
    s
}
