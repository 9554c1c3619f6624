//! Eigenpairs of the graph Laplacian, closed-form eigenpairs of the weighted
//! Laplace-Beltrami operator for uniform densities, eigenspace alignment and
//! the convergence / regularity experiments built on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrete_ops::{self, graph_laplacian_matrix};
use crate::error::{CloudError, Result};
use crate::geom::Point;
use crate::kernel_graph::{build_eps_graph, EpsGraph, KernelModel};
use crate::linalg::{jacobi_eigh, lanczos_smallest, CsrMatrix, DenseMatrix, LanczosOptions};
use crate::manifold::{sample_cloud, DensityModel, Manifold, ManifoldKind};
use crate::stats::{self, SlopeFit};

pub const DENSE_LIMIT: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Lanczos,
    Dense,
}

/// Eigenpairs in ascending order. Vectors are normalized in `L^2(X_n)`,
/// i.e. `(1/n) sum f_i^2 = 1`, and residuals are `L^2(X_n)` norms of
/// `L f - lambda f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub solver: Solver,
}

impl SpectralResult {
    fn from_unit(values: Vec<f64>, unit: Vec<Vec<f64>>, residuals: Vec<f64>, solver: Solver) -> Self {
        let eigenvectors = unit
            .into_iter()
            .map(|v| {
                let s = (v.len() as f64).sqrt();
                fix_sign(v.iter().map(|x| x * s).collect())
            })
            .collect();
        SpectralResult {
            eigenvalues: values,
            eigenvectors,
            residuals,
            solver,
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Largest `|<f_a, f_b>_{L^2(X_n)}|` over distinct pairs.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..self.len() {
            for b in a + 1..self.len() {
                worst = worst.max(l2_inner(&self.eigenvectors[a], &self.eigenvectors[b]).abs());
            }
        }
        worst
    }
}

/// Sign convention: the entry of largest magnitude is positive (ties go to
/// the lowest index).
fn fix_sign(mut v: Vec<f64>) -> Vec<f64> {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < 0.0) {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
    v
}

/// `(1/n) sum a_i b_i`
pub fn l2_inner(a: &[f64], b: &[f64]) -> f64 {
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    stats::pairwise_sum(&prods) / a.len() as f64
}

/// Full spectrum of a symmetric matrix by cyclic Jacobi.
pub fn dense_eigh(a: &CsrMatrix) -> Result<SpectralResult> {
    if a.n > DENSE_LIMIT {
        return Err(CloudError::SizeLimit {
            n: a.n,
            limit: DENSE_LIMIT,
        });
    }
    let dense = a.to_dense();
    let (vals, vecs) = jacobi_eigh(&dense);
    let residuals = unit_residuals(&dense, &vals, &vecs);
    Ok(SpectralResult::from_unit(vals, vecs, residuals, Solver::Dense))
}

fn unit_residuals(a: &DenseMatrix, vals: &[f64], vecs: &[Vec<f64>]) -> Vec<f64> {
    vals.iter()
        .zip(vecs)
        .map(|(l, v)| {
            let av = a.matvec(v);
            av.iter()
                .zip(v)
                .map(|(x, y)| (x - l * y).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// `k` smallest eigenpairs by Lanczos with full reorthogonalization.
pub fn lanczos(a: &CsrMatrix, k: usize, seed: u64, tol: f64) -> Result<SpectralResult> {
    let opts = LanczosOptions {
        tol,
        ..LanczosOptions::default()
    };
    let pairs = lanczos_smallest(a.n, |x, y| a.matvec(x, y), k, seed, opts)?;
    Ok(SpectralResult::from_unit(
        pairs.values,
        pairs.vectors,
        pairs.residuals,
        Solver::Lanczos,
    ))
}

/// `k` smallest eigenpairs of the graph Laplacian of `g`.
pub fn graph_eigenpairs(g: &EpsGraph, k: usize, seed: u64, solver: Solver) -> Result<SpectralResult> {
    let l = graph_laplacian_matrix(g);
    match solver {
        Solver::Lanczos => lanczos(&l, k, seed, 1e-9),
        Solver::Dense => {
            let mut full = dense_eigh(&l)?;
            full.eigenvalues.truncate(k);
            full.eigenvectors.truncate(k);
            full.residuals.truncate(k);
            Ok(full)
        }
    }
}

/// One closed-form eigenfunction, normalized in `L^2(rho dVol)` for the
/// uniform density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AnalyticFunction {
    /// `1`
    Constant,
    /// `sqrt(2) cos(j t)` or `sqrt(2) sin(j t)`
    Circle { j: u32, sine: bool },
    /// Real spherical harmonic of degree `l` and order `mo` (negative order
    /// selects the sine branch).
    Sphere { l: u32, mo: i32 },
    /// `sqrt(2) cos(j1 t1 + j2 t2)` or the sine.
    Torus { j1: i32, j2: i32, sine: bool },
}

impl AnalyticFunction {
    pub fn value(&self, x: &Point) -> f64 {
        let r2 = std::f64::consts::SQRT_2;
        match *self {
            AnalyticFunction::Constant => 1.0,
            AnalyticFunction::Circle { j, sine } => {
                let t = j as f64 * x[1].atan2(x[0]);
                r2 * if sine { t.sin() } else { t.cos() }
            }
            AnalyticFunction::Sphere { l, mo } => real_harmonic(l, mo, x),
            AnalyticFunction::Torus { j1, j2, sine } => {
                let t = j1 as f64 * x[1].atan2(x[0]) + j2 as f64 * x[3].atan2(x[2]);
                r2 * if sine { t.sin() } else { t.cos() }
            }
        }
    }
}

/// `P_l^m(z)` without the Condon-Shortley phase, `0 <= m <= l`.
pub fn assoc_legendre(l: u32, m: u32, z: f64) -> f64 {
    let s = (1.0 - z * z).max(0.0).sqrt();
    let mut pmm = 1.0;
    for i in 1..=m {
        pmm *= (2 * i - 1) as f64 * s;
    }
    if l == m {
        return pmm;
    }
    let mut p1 = z * (2 * m + 1) as f64 * pmm;
    if l == m + 1 {
        return p1;
    }
    let mut p0 = pmm;
    for ll in m + 2..=l {
        let p2 = ((2 * ll - 1) as f64 * z * p1 - (ll + m - 1) as f64 * p0) / (ll - m) as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Real spherical harmonic with mean square one over the sphere.
fn real_harmonic(l: u32, mo: i32, x: &Point) -> f64 {
    let am = mo.unsigned_abs();
    let mut ratio = 1.0;
    for i in (l - am + 1)..=(l + am) {
        ratio /= i as f64;
    }
    let norm = ((2 * l + 1) as f64 * ratio).sqrt();
    let p = assoc_legendre(l, am, x[2].clamp(-1.0, 1.0));
    let phi = x[1].atan2(x[0]);
    let r2 = std::f64::consts::SQRT_2;
    norm * p
        * match mo {
            0 => 1.0,
            m if m > 0 => r2 * (m as f64 * phi).cos(),
            m => r2 * ((-m) as f64 * phi).sin(),
        }
}

/// One eigenvalue of `-(sigma rho / 2) Delta_LB` with an orthonormal basis
/// of its eigenspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticEigenpair {
    pub eigenvalue: f64,
    pub eigenspace: Vec<AnalyticFunction>,
    pub multiplicity: usize,
}

/// Analytic clusters in ascending order until their total multiplicity
/// reaches `k` (the last cluster is kept whole).
pub fn analytic_eigenpairs(
    manifold: &Manifold,
    rho: &DensityModel,
    kernel: &KernelModel,
    k: usize,
) -> Result<Vec<AnalyticEigenpair>> {
    if !rho.is_uniform() {
        return Err(CloudError::Unsupported(
            "closed-form eigenpairs exist only for the uniform density".into(),
        ));
    }
    let sigma = kernel.sigma();
    let dens = 1.0 / manifold.volume();
    let mut out = vec![AnalyticEigenpair {
        eigenvalue: 0.0,
        eigenspace: vec![AnalyticFunction::Constant],
        multiplicity: 1,
    }];
    let mut total = 1;
    let mut level = 1u32;
    while total < k {
        let (lb, space): (f64, Vec<AnalyticFunction>) = match manifold.kind {
            ManifoldKind::Circle => (
                (level * level) as f64,
                vec![
                    AnalyticFunction::Circle {
                        j: level,
                        sine: false,
                    },
                    AnalyticFunction::Circle { j: level, sine: true },
                ],
            ),
            ManifoldKind::Sphere2 => {
                let l = level as i32;
                (
                    (level * (level + 1)) as f64,
                    (-l..=l)
                        .map(|mo| AnalyticFunction::Sphere { l: level, mo })
                        .collect(),
                )
            }
            ManifoldKind::FlatTorus2 => {
                let s = level as i32;
                let mut space = Vec::new();
                let b = (s as f64).sqrt() as i32 + 1;
                for j1 in 0..=b {
                    for j2 in -b..=b {
                        if j1 * j1 + j2 * j2 != s || (j1 == 0 && j2 <= 0) {
                            continue;
                        }
                        space.push(AnalyticFunction::Torus { j1, j2, sine: false });
                        space.push(AnalyticFunction::Torus { j1, j2, sine: true });
                    }
                }
                (s as f64, space)
            }
        };
        level += 1;
        if space.is_empty() {
            continue;
        }
        total += space.len();
        out.push(AnalyticEigenpair {
            eigenvalue: 0.5 * sigma * dens * lb,
            multiplicity: space.len(),
            eigenspace: space,
        });
    }
    Ok(out)
}

/// Per-index cluster labels: index `i` belongs to the analytic cluster that
/// contains position `i` of the multiplicity-expanded analytic list.
pub fn index_clusters(analytic: &[AnalyticEigenpair], k: usize) -> Vec<usize> {
    let mut labels = Vec::with_capacity(k);
    for (c, a) in analytic.iter().enumerate() {
        for _ in 0..a.multiplicity {
            if labels.len() < k {
                labels.push(c);
            }
        }
    }
    labels
}

/// Threshold clustering: a discrete eigenvalue joins analytic cluster `c`
/// when it lies within `frac` times the smaller gap from `c` to its analytic
/// neighbours. Returns the label of each discrete value (None = unmatched).
pub fn threshold_clusters(discrete: &[f64], analytic: &[AnalyticEigenpair], frac: f64) -> Vec<Option<usize>> {
    let vals: Vec<f64> = analytic.iter().map(|a| a.eigenvalue).collect();
    let radius: Vec<f64> = (0..vals.len())
        .map(|c| {
            let lo = if c > 0 {
                vals[c] - vals[c - 1]
            } else {
                f64::INFINITY
            };
            let hi = if c + 1 < vals.len() {
                vals[c + 1] - vals[c]
            } else {
                lo
            };
            frac * lo.min(hi)
        })
        .collect();
    discrete
        .iter()
        .map(|l| (0..vals.len()).find(|&c| (l - vals[c]).abs() <= radius[c]))
        .collect()
}

/// Sizes of the runs of ascending `values` separated by gaps larger than
/// `threshold`.
pub fn gap_clusters(values: &[f64], threshold: f64) -> Vec<usize> {
    let mut sizes = Vec::new();
    let mut run = 0;
    for (i, v) in values.iter().enumerate() {
        if i > 0 && v - values[i - 1] > threshold {
            sizes.push(run);
            run = 0;
        }
        run += 1;
    }
    if run > 0 {
        sizes.push(run);
    }
    sizes
}

/// Splits the discrete spectrum at gaps above `frac` times the smallest gap
/// between the first `clusters` analytic eigenvalues and compares the run
/// sizes with the analytic multiplicities.
pub fn check_cluster_sizes(
    discrete: &[f64],
    analytic: &[AnalyticEigenpair],
    frac: f64,
    clusters: usize,
) -> Result<Vec<usize>> {
    let c = clusters.min(analytic.len());
    let min_gap = analytic[..c]
        .windows(2)
        .map(|w| w[1].eigenvalue - w[0].eigenvalue)
        .fold(f64::INFINITY, f64::min);
    let sizes = gap_clusters(discrete, frac * min_gap);
    let mut start = 0;
    for (j, a) in analytic[..c].iter().enumerate() {
        let size = sizes.get(j).copied().unwrap_or(0);
        if size != a.multiplicity {
            return Err(CloudError::AlignmentMismatch {
                cluster: j,
                size,
                multiplicity: a.multiplicity,
                values: discrete[start.min(discrete.len())..(start + size).min(discrete.len())].to_vec(),
            });
        }
        start += size;
    }
    Ok(sizes)
}

/// Result of aligning one discrete eigenvector with an analytic eigenspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    /// The aligned analytic function restricted to the cloud.
    pub restricted: Vec<f64>,
    pub linf_err: f64,
    pub lip_err: f64,
}

/// Projects each discrete vector of a cluster onto the restricted analytic
/// eigenspace in `L^2(X_n)`, renormalizes in `L^2(M)` and reports the sup and
/// approximate Lipschitz errors at scale `eps`.
pub fn eigenspace_align(
    cluster: &[Vec<f64>],
    analytic: &AnalyticEigenpair,
    manifold: &Manifold,
    points: &[Point],
    eps: f64,
) -> Result<Vec<Alignment>> {
    if cluster.len() != analytic.multiplicity {
        return Err(CloudError::AlignmentMismatch {
            cluster: 0,
            size: cluster.len(),
            multiplicity: analytic.multiplicity,
            values: vec![analytic.eigenvalue],
        });
    }
    align_vectors(cluster, analytic, manifold, points, eps)
}

fn align_vectors(
    cluster: &[Vec<f64>],
    analytic: &AnalyticEigenpair,
    manifold: &Manifold,
    points: &[Point],
    eps: f64,
) -> Result<Vec<Alignment>> {
    let n = points.len();
    for f in cluster {
        if f.len() != n {
            return Err(CloudError::ShapeMismatch {
                expected: n,
                got: f.len(),
            });
        }
    }
    let basis: Vec<Vec<f64>> = analytic
        .eigenspace
        .iter()
        .map(|phi| points.iter().map(|x| phi.value(x)).collect())
        .collect();
    let p = basis.len();
    let mut gram = vec![vec![0.0; p]; p];
    for a in 0..p {
        for b in a..p {
            let v = l2_inner(&basis[a], &basis[b]);
            gram[a][b] = v;
            gram[b][a] = v;
        }
    }
    let restricted: Vec<Vec<f64>> = cluster
        .iter()
        .map(|f| {
            let rhs: Vec<f64> = basis.iter().map(|phi| l2_inner(phi, f)).collect();
            let c = solve_spd(&gram, &rhs);
            // the analytic basis is orthonormal in L^2(M), so |c| is the
            // continuum norm of the projection
            let cn = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut g = vec![0.0; n];
            for (ci, phi) in c.iter().zip(&basis) {
                for (gi, v) in g.iter_mut().zip(phi) {
                    *gi += ci / cn * v;
                }
            }
            g
        })
        .collect();
    let diffs: Vec<Vec<f64>> = cluster
        .iter()
        .zip(&restricted)
        .map(|(f, g)| f.iter().zip(g).map(|(a, b)| a - b).collect())
        .collect();
    let refs: Vec<&[f64]> = diffs.iter().map(|d| d.as_slice()).collect();
    let lips = discrete_ops::approx_lipschitz_many(manifold, points, &refs, eps)?;
    Ok(restricted
        .into_iter()
        .zip(&diffs)
        .zip(lips)
        .map(|((g, d), lip)| Alignment {
            restricted: g,
            linf_err: discrete_ops::sup_norm(d),
            lip_err: lip.value,
        })
        .collect())
}

/// Gaussian elimination with partial pivoting for the small Gram systems.
fn solve_spd(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let p = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(*bi);
            r
        })
        .collect();
    for col in 0..p {
        let piv = (col..p)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap_or(col);
        m.swap(col, piv);
        for r in col + 1..p {
            let f = m[r][col] / m[col][col];
            for c in col..=p {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    let mut x = vec![0.0; p];
    for r in (0..p).rev() {
        let s: f64 = (r + 1..p).map(|c| m[r][c] * x[c]).sum();
        x[r] = (m[r][p] - s) / m[r][r];
    }
    x
}

/// Choice of eps as a function of `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum EpsRule {
    Fixed(f64),
    /// `c (log n / n)^{1/(m+4)}`
    Regime(f64),
}

impl EpsRule {
    pub fn eps(&self, n: usize, m: usize) -> f64 {
        match *self {
            EpsRule::Fixed(e) => e,
            EpsRule::Regime(c) => {
                let n = n as f64;
                c * (n.ln() / n).powf(1.0 / (m as f64 + 4.0))
            }
        }
    }
}

impl std::fmt::Display for EpsRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EpsRule::Fixed(e) => write!(f, "fixed:{e}"),
            EpsRule::Regime(c) => write!(f, "regime:{c}"),
        }
    }
}

/// Parses `fixed:<eps>`, `regime:<c>` or a bare number (fixed).
impl std::str::FromStr for EpsRule {
    type Err = CloudError;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || CloudError::InvalidParameter(format!("bad eps rule '{s}'"));
        let parse = |v: &str| v.parse::<f64>().map_err(|_| bad());
        let rule = if let Some(v) = s.strip_prefix("fixed:") {
            EpsRule::Fixed(parse(v)?)
        } else if let Some(v) = s.strip_prefix("regime:") {
            EpsRule::Regime(parse(v)?)
        } else {
            EpsRule::Fixed(parse(s)?)
        };
        let v = match rule {
            EpsRule::Fixed(v) | EpsRule::Regime(v) => v,
        };
        if !(v > 0.0 && v.is_finite()) {
            return Err(bad());
        }
        Ok(rule)
    }
}

/// Seed of experiment cell `(level, replicate)`.
pub fn cell_seed(base: u64, level: usize, replicate: usize) -> u64 {
    base ^ (((level as u64) << 32) | replicate as u64)
}

/// One row of the convergence rate table (one eigen index of one cell).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub eps: f64,
    pub seed: u64,
    pub index: usize,
    pub cluster: usize,
    pub lambda: f64,
    pub lambda_err: f64,
    pub linf_err: f64,
    pub lip_err: f64,
    pub connected: bool,
}

/// Slopes vs eps of the per-level medians for one eigen index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexSlopes {
    pub index: usize,
    pub eps: Vec<f64>,
    pub median_lambda_err: Vec<f64>,
    pub median_linf_err: Vec<f64>,
    pub median_lip_err: Vec<f64>,
    pub lambda_slope: SlopeFit,
    pub linf_slope: SlopeFit,
    pub lip_slope: SlopeFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub manifold: ManifoldKind,
    pub kernel: String,
    pub n_list: Vec<usize>,
    pub eps_rule: EpsRule,
    pub k: usize,
    pub seeds: usize,
    pub failed_cells: usize,
    pub rows: Vec<RateRow>,
    pub slopes: Vec<IndexSlopes>,
}

impl ConvergenceReport {
    pub fn slopes_for(&self, index: usize) -> Option<&IndexSlopes> {
        self.slopes.iter().find(|s| s.index == index)
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        use crate::io::fmt_f64;
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    fmt_f64(r.eps),
                    r.seed.to_string(),
                    r.cluster.to_string(),
                    r.index.to_string(),
                    fmt_f64(r.lambda_err),
                    fmt_f64(r.linf_err),
                    fmt_f64(r.lip_err),
                    r.connected.to_string(),
                ]
            })
            .collect()
    }

    pub const CSV_HEADER: [&'static str; 9] = [
        "n",
        "eps",
        "seed",
        "cluster",
        "index",
        "lambda_err",
        "linf_err",
        "lip_err",
        "connected",
    ];
}

/// Parameters shared by the spectral experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub manifold: Manifold,
    pub density: DensityModel,
    pub kernel: KernelModel,
    pub n_list: Vec<usize>,
    pub eps_rule: EpsRule,
    pub k: usize,
    pub seeds: usize,
    pub base_seed: u64,
}

impl ExperimentSpec {
    /// `(n, eps)` per level.
    pub fn plan(&self) -> Vec<(usize, f64)> {
        let m = self.manifold.intrinsic_dim();
        self.n_list
            .iter()
            .map(|&n| (n, self.eps_rule.eps(n, m)))
            .collect()
    }

    fn cells(&self) -> Vec<(usize, usize, usize, f64)> {
        let plan = self.plan();
        let mut cells = Vec::new();
        for (lvl, &(n, eps)) in plan.iter().enumerate() {
            for s in 0..self.seeds {
                cells.push((lvl, s, n, eps));
            }
        }
        cells
    }
}

fn solve_cell(spec: &ExperimentSpec, seed: u64, n: usize, eps: f64) -> Result<(EpsGraph, SpectralResult)> {
    let pts = sample_cloud(&spec.manifold, &spec.density, n, seed);
    let g = build_eps_graph(&spec.manifold, pts, eps, &spec.kernel)?;
    if !g.connected {
        return Err(CloudError::InvalidParameter("disconnected graph".into()));
    }
    let sr = graph_eigenpairs(&g, spec.k, seed, Solver::Lanczos)?;
    Ok((g, sr))
}

/// Eigenvalue and eigenvector errors against the analytic eigenpairs across
/// `n` and seeds, with log-log slopes vs eps per eigen index.
pub fn eigen_convergence_experiment(spec: &ExperimentSpec) -> Result<ConvergenceReport> {
    let analytic = analytic_eigenpairs(&spec.manifold, &spec.density, &spec.kernel, spec.k)?;
    let labels = index_clusters(&analytic, spec.k);
    // offset of each cluster in the expanded list
    let mut offsets = vec![0usize; analytic.len()];
    for c in 1..analytic.len() {
        offsets[c] = offsets[c - 1] + analytic[c - 1].multiplicity;
    }
    let k = spec.k;
    let cells = spec.cells();
    let results: Vec<Result<Vec<RateRow>>> = cells
        .par_iter()
        .map(|&(lvl, s, n, eps)| {
            let seed = cell_seed(spec.base_seed, lvl, s);
            let failed = |i: usize| RateRow {
                n,
                eps,
                seed,
                index: i,
                cluster: labels[i],
                lambda: f64::NAN,
                lambda_err: f64::NAN,
                linf_err: f64::NAN,
                lip_err: f64::NAN,
                connected: false,
            };
            let (g, sr) = match solve_cell(spec, seed, n, eps) {
                Ok(v) => v,
                Err(CloudError::InvalidParameter(msg)) if msg == "disconnected graph" => {
                    return Ok((0..k).map(failed).collect())
                }
                Err(e) => return Err(e),
            };
            let mut rows = Vec::with_capacity(k);
            for (c, a) in analytic.iter().enumerate() {
                let start = offsets[c];
                if start >= k {
                    break;
                }
                let end = (start + a.multiplicity).min(k);
                let cluster: Vec<Vec<f64>> = sr.eigenvectors[start..end].to_vec();
                // a cluster cut off by k is aligned against the full space
                let aligned = if end - start == a.multiplicity {
                    eigenspace_align(&cluster, a, &g.manifold, &g.points, eps)?
                } else {
                    align_vectors(&cluster, a, &g.manifold, &g.points, eps)?
                };
                for (off, al) in aligned.iter().enumerate() {
                    let i = start + off;
                    rows.push(RateRow {
                        n,
                        eps,
                        seed,
                        index: i,
                        cluster: c,
                        lambda: sr.eigenvalues[i],
                        lambda_err: (sr.eigenvalues[i] - a.eigenvalue).abs(),
                        linf_err: al.linf_err,
                        lip_err: al.lip_err,
                        connected: true,
                    });
                }
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    let failed_cells = rows.iter().filter(|r| !r.connected && r.index == 0).count();
    let plan = spec.plan();
    let eps_levels: Vec<f64> = plan.iter().map(|p| p.1).collect();
    let mut slopes = Vec::new();
    for i in 0..k {
        let per_level = |field: fn(&RateRow) -> f64| -> Vec<Vec<f64>> {
            plan.iter()
                .map(|&(n, _)| {
                    rows.iter()
                        .filter(|r| r.n == n && r.index == i && r.connected)
                        .map(field)
                        .collect()
                })
                .collect()
        };
        let le = per_level(|r| r.lambda_err);
        let fe = per_level(|r| r.linf_err);
        let pe = per_level(|r| r.lip_err);
        if le.iter().any(|v| v.is_empty()) {
            continue;
        }
        let bs = spec.base_seed ^ (0xb00 + i as u64);
        slopes.push(IndexSlopes {
            index: i,
            eps: eps_levels.clone(),
            median_lambda_err: le.iter().map(|v| stats::median(v)).collect(),
            median_linf_err: fe.iter().map(|v| stats::median(v)).collect(),
            median_lip_err: pe.iter().map(|v| stats::median(v)).collect(),
            lambda_slope: stats::loglog_slope_bootstrap(&eps_levels, &le, 1000, bs),
            linf_slope: stats::loglog_slope_bootstrap(&eps_levels, &fe, 1000, bs + 1),
            lip_slope: stats::loglog_slope_bootstrap(&eps_levels, &pe, 1000, bs + 2),
        });
    }
    Ok(ConvergenceReport {
        manifold: spec.manifold.kind,
        kernel: spec.kernel.kind.as_str().to_string(),
        n_list: spec.n_list.clone(),
        eps_rule: spec.eps_rule,
        k,
        seeds: spec.seeds,
        failed_cells,
        rows,
        slopes,
    })
}

/// Normalized regularity statistics of one eigenvector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityRow {
    pub index: usize,
    pub lambda: f64,
    /// `max |f_i - f_j| / ((lambda + 1)^{m+1} (d_M + eps))`
    pub lipschitz_stat: f64,
    /// `||f||_inf / ((lambda + 1)^m ||f||_1)`
    pub sup_stat: f64,
}

/// Both statistics for every eigenpair with `lambda < cap`.
pub fn eigen_regularity_experiment(
    g: &EpsGraph,
    sr: &SpectralResult,
    cap: f64,
) -> Result<Vec<RegularityRow>> {
    let m = g.m() as i32;
    let idx: Vec<usize> = (0..sr.len()).filter(|&i| sr.eigenvalues[i] < cap).collect();
    let refs: Vec<&[f64]> = idx.iter().map(|&i| sr.eigenvectors[i].as_slice()).collect();
    let lips = discrete_ops::approx_lipschitz_many(&g.manifold, &g.points, &refs, g.eps)?;
    Ok(idx
        .iter()
        .zip(lips)
        .map(|(&i, lip)| {
            let lam = sr.eigenvalues[i];
            let f = &sr.eigenvectors[i];
            let nm = discrete_ops::norms(f);
            RegularityRow {
                index: i,
                lambda: lam,
                lipschitz_stat: lip.value / (lam.max(0.0) + 1.0).powi(m + 1),
                sup_stat: nm.linf / ((lam.max(0.0) + 1.0).powi(m) * nm.l1),
            }
        })
        .collect())
}

/// Per-cell maxima of the regularity statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityCell {
    pub n: usize,
    pub eps: f64,
    pub seed: u64,
    pub vectors: usize,
    pub max_lipschitz_stat: f64,
    pub max_sup_stat: f64,
    pub connected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularitySweep {
    pub cap: f64,
    pub cells: Vec<RegularityCell>,
    pub n_list: Vec<usize>,
    pub median_lipschitz_stat: Vec<f64>,
    pub median_sup_stat: Vec<f64>,
    pub lipschitz_slope: SlopeFit,
    pub sup_slope: SlopeFit,
}

/// Regularity statistics over `n` and seeds: per cell the maximum over the
/// eigenvectors below `cap`, then the median over seeds and the log-log slope
/// of the medians vs `n`.
pub fn eigen_regularity_sweep(spec: &ExperimentSpec, cap: f64) -> Result<RegularitySweep> {
    let cells: Vec<Result<RegularityCell>> = spec
        .cells()
        .par_iter()
        .map(|&(lvl, s, n, eps)| {
            let seed = cell_seed(spec.base_seed, lvl, s);
            match solve_cell(spec, seed, n, eps) {
                Ok((g, sr)) => {
                    let rows = eigen_regularity_experiment(&g, &sr, cap)?;
                    Ok(RegularityCell {
                        n,
                        eps,
                        seed,
                        vectors: rows.len(),
                        max_lipschitz_stat: rows.iter().map(|r| r.lipschitz_stat).fold(0.0, f64::max),
                        max_sup_stat: rows.iter().map(|r| r.sup_stat).fold(0.0, f64::max),
                        connected: true,
                    })
                }
                Err(CloudError::InvalidParameter(msg)) if msg == "disconnected graph" => Ok(RegularityCell {
                    n,
                    eps,
                    seed,
                    vectors: 0,
                    max_lipschitz_stat: f64::NAN,
                    max_sup_stat: f64::NAN,
                    connected: false,
                }),
                Err(e) => Err(e),
            }
        })
        .collect();
    let cells: Vec<RegularityCell> = cells.into_iter().collect::<Result<_>>()?;
    let levels: Vec<f64> = spec.n_list.iter().map(|&n| n as f64).collect();
    let gather = |field: fn(&RegularityCell) -> f64| -> Vec<Vec<f64>> {
        spec.n_list
            .iter()
            .map(|&n| {
                cells
                    .iter()
                    .filter(|c| c.n == n && c.connected)
                    .map(field)
                    .collect()
            })
            .collect()
    };
    let lip = gather(|c| c.max_lipschitz_stat);
    let sup = gather(|c| c.max_sup_stat);
    Ok(RegularitySweep {
        cap,
        n_list: spec.n_list.clone(),
        median_lipschitz_stat: lip.iter().map(|v| stats::median(v)).collect(),
        median_sup_stat: sup.iter().map(|v| stats::median(v)).collect(),
        lipschitz_slope: stats::loglog_slope_bootstrap(&levels, &lip, 1000, spec.base_seed ^ 0x11),
        sup_slope: stats::loglog_slope_bootstrap(&levels, &sup, 1000, spec.base_seed ^ 0x12),
        cells,
    })
}
