//! Biased random walk whose one-step average is `Abar_eps`, and the
//! reflection-coupled pair `(X, Y)` stopped at coalescence, separation or exit.
//!
//! Tangent vectors are handled in frame coordinates. The X chain uses the
//! frame `e_i(X) = P_{x0,X} e_i(x0)`; the Y chain uses
//! `f_i(Y) = P_{X,Y} e_i(X)`. In these coordinates every composition of
//! parallel transports in the isometry fields collapses to a plain matrix.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CloudError, Result};
use crate::geom::{self, Point};
use crate::io::fmt_f64;
use crate::kernel_graph::KernelModel;
use crate::manifold::{DensityModel, Frame, Manifold};
use crate::stats;

/// Linear map on `R^m` (`m <= 2`), row-major.
pub type Mat2 = [[f64; 2]; 2];

const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

fn s0_cos() -> f64 {
    (8.0 * PI / 9.0).cos()
}

fn s1_cos() -> f64 {
    (5.0 * PI / 9.0).cos()
}

fn apply(q: &Mat2, w: &[f64; 2]) -> [f64; 2] {
    [q[0][0] * w[0] + q[0][1] * w[1], q[1][0] * w[0] + q[1][1] * w[1]]
}

fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

/// Cap membership of a unit vector in frame coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Caps {
    s0p: bool,
    s0m: bool,
    s1p: bool,
    s1m: bool,
}

fn caps(z: &[f64; 2]) -> Caps {
    Caps {
        s0p: z[0] > s0_cos(),
        s0m: -z[0] > s0_cos(),
        s1p: z[0] > s1_cos(),
        s1m: -z[0] > s1_cos(),
    }
}

/// Which chart of the isometry field applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    /// `Qbar(zeta)`
    Direct,
    /// `Q0^T Qbar(Q0 zeta)`
    Flipped,
    Identity,
}

/// Isometries `Qbar` and `Q0` for intrinsic dimension `m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rotations {
    pub m: usize,
}

impl Rotations {
    /// `Qbar(e)` with `Qbar(e) e1 = e`: the rotation taking `e1` to `e`
    /// (for `m = 1` the only element of `SO(1)`).
    pub fn qbar(&self, e: &[f64; 2]) -> Mat2 {
        if self.m == 1 {
            IDENTITY
        } else {
            [[e[0], -e[1]], [e[1], e[0]]]
        }
    }

    /// `Q0` with `Q0(-e1) = e1`: rotation by pi for `m = 2`, and the isometry
    /// `-1` for `m = 1`.
    pub fn q0(&self) -> Mat2 {
        [[-1.0, 0.0], [0.0, -1.0]]
    }

    pub fn chart_matrix(&self, chart: Chart, zeta: &[f64; 2]) -> Mat2 {
        match chart {
            Chart::Direct => self.qbar(zeta),
            Chart::Flipped => {
                let q0 = self.q0();
                let z = apply(&q0, zeta);
                matmul(&transpose(&q0), &self.qbar(&z))
            }
            Chart::Identity => IDENTITY,
        }
    }
}

/// Chart of `Q(x)` from the frame coordinates of `xi(x)`.
pub fn chart_x(zeta: Option<&[f64; 2]>) -> Chart {
    match zeta {
        None => Chart::Identity,
        Some(z) => {
            let c = caps(z);
            if c.s1p {
                Chart::Direct
            } else if c.s1m {
                Chart::Flipped
            } else {
                Chart::Identity
            }
        }
    }
}

/// Chart of `Q^X(y)` from the coordinates of `xi(X)` and `xi(y)`.
pub fn chart_y(zeta_x: Option<&[f64; 2]>, zeta_y: Option<&[f64; 2]>) -> Chart {
    let Some(zy) = zeta_y else {
        return Chart::Identity;
    };
    let cy = caps(zy);
    match zeta_x {
        Some(zx) => {
            let cx = caps(zx);
            let x_minus_only = cx.s1m && !cx.s1p;
            if (cx.s1p && cy.s0p) || (x_minus_only && cy.s0p && !cy.s0m) {
                Chart::Direct
            } else if (x_minus_only && cy.s0m) || (cx.s1p && cy.s0m && !cy.s0p) {
                Chart::Flipped
            } else {
                Chart::Identity
            }
        }
        None => {
            if cy.s1p {
                Chart::Direct
            } else if cy.s1m && !cy.s1p {
                Chart::Flipped
            } else {
                Chart::Identity
            }
        }
    }
}

/// Parameters of the walk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub manifold: Manifold,
    pub density: DensityModel,
    pub kernel: KernelModel,
    pub eps: f64,
    pub r: f64,
    pub x0: Point,
    pub seed: u64,
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        let m = &self.manifold;
        m.check_point(&self.x0)?;
        if self.kernel.m != m.intrinsic_dim() {
            return Err(CloudError::InvalidParameter(
                "kernel dimension does not match the manifold".into(),
            ));
        }
        let half = 0.5 * m.injectivity_radius();
        if !(self.eps > 0.0 && self.eps < half) {
            return Err(CloudError::InvalidParameter(format!(
                "eps = {} must lie in (0, {half})",
                self.eps
            )));
        }
        if !(self.r > 0.0 && self.r < half) {
            return Err(CloudError::InvalidParameter(format!(
                "r = {} must lie in (0, {half})",
                self.r
            )));
        }
        if !(self.eps * self.density.sup_grad_log() < 0.5) {
            return Err(CloudError::InvalidParameter(format!(
                "eps * sup|grad log rho| = {} must be below 1/2",
                self.eps * self.density.sup_grad_log()
            )));
        }
        Ok(())
    }

    fn m(&self) -> usize {
        self.manifold.intrinsic_dim()
    }

    fn rotations(&self) -> Rotations {
        Rotations { m: self.m() }
    }

    /// Frame at `x0`.
    pub fn base_frame(&self) -> Frame {
        self.manifold.frame(&self.x0)
    }

    /// `e_i(x) = P_{x0,x} e_i`.
    pub fn frame_at(&self, x: &Point) -> Result<Frame> {
        self.manifold.transport_frame(&self.x0, x, &self.base_frame())
    }

    fn zeta(&self, frame: &Frame, x: &Point) -> Option<[f64; 2]> {
        let g = self.density.grad_log(&self.manifold, x);
        let gn = geom::norm(&g);
        if gn == 0.0 {
            return None;
        }
        let z = self.manifold.frame_coords(frame, &g);
        let zn = z[0].hypot(z[1]);
        Some([z[0] / zn, z[1] / zn])
    }

    /// `Q(x)` in the coordinates of `e_i(x)`.
    pub fn rotation_q(&self, x: &Point) -> Result<Mat2> {
        let frame = self.frame_at(x)?;
        let z = self.zeta(&frame, x);
        let chart = chart_x(z.as_ref());
        Ok(self.rotations().chart_matrix(chart, &z.unwrap_or([1.0, 0.0])))
    }

    /// `Q(x)` as a map on ambient tangent vectors at `x`.
    pub fn rotation_q_ambient(&self, x: &Point, v: &Point) -> Result<Point> {
        let frame = self.frame_at(x)?;
        let q = self.rotation_q(x)?;
        let c = self.manifold.frame_coords(&frame, v);
        Ok(self.manifold.frame_vector(&frame, &apply(&q, &c)))
    }
}

/// Draws of one step: `w ~ eta`, `wbar ~ (1 + w_1) eta`, `b ~ U(0,1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Draws {
    pub w: [f64; 2],
    pub wbar: [f64; 2],
    pub b: f64,
}

fn uniform_ball<R: Rng + ?Sized>(m: usize, rng: &mut R) -> [f64; 2] {
    loop {
        let a = 2.0 * rng.gen::<f64>() - 1.0;
        if m == 1 {
            return [a, 0.0];
        }
        let b = 2.0 * rng.gen::<f64>() - 1.0;
        if a * a + b * b <= 1.0 {
            return [a, b];
        }
    }
}

/// Sample from `eta(|w|) dw` on the unit ball.
pub fn sample_ball<R: Rng + ?Sized>(kernel: &KernelModel, rng: &mut R) -> [f64; 2] {
    let top = kernel.eta0();
    loop {
        let w = uniform_ball(kernel.m, rng);
        let r = w[0].hypot(w[1]);
        if rng.gen::<f64>() * top < kernel.eta(r) {
            return w;
        }
    }
}

/// Sample from `(1 + <w, e1>) eta(|w|) dw`.
pub fn sample_biased_ball<R: Rng + ?Sized>(kernel: &KernelModel, rng: &mut R) -> [f64; 2] {
    loop {
        let w = sample_ball(kernel, rng);
        if rng.gen::<f64>() < 0.5 * (1.0 + w[0]) {
            return w;
        }
    }
}

pub fn draw<R: Rng + ?Sized>(kernel: &KernelModel, rng: &mut R) -> Draws {
    let w = sample_ball(kernel, rng);
    let wbar = sample_biased_ball(kernel, rng);
    let b = rng.gen::<f64>();
    Draws { w, wbar, b }
}

/// RNG of trial `trial`: the stream index selects an independent ChaCha
/// keystream under the common seed.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// One step of the X chain.
pub fn step_x(cfg: &WalkConfig, x: &Point, d: &Draws) -> Result<Point> {
    let m = &cfg.manifold;
    if m.dist(&cfg.x0, x) >= cfg.r {
        return Ok(*x);
    }
    let frame = cfg.frame_at(x)?;
    let coords = x_increment(cfg, &frame, x, d);
    Ok(m.exp_frame(x, &frame, &[cfg.eps * coords[0], cfg.eps * coords[1]]))
}

fn x_increment(cfg: &WalkConfig, frame: &Frame, x: &Point, d: &Draws) -> [f64; 2] {
    let gl = geom::norm(&cfg.density.grad_log(&cfg.manifold, x));
    if d.b >= cfg.eps * gl {
        d.w
    } else {
        let z = cfg.zeta(frame, x);
        let q = cfg
            .rotations()
            .chart_matrix(chart_x(z.as_ref()), &z.unwrap_or([1.0, 0.0]));
        apply(&q, &d.wbar)
    }
}

/// Householder reflection of `w` across the line perpendicular to `v`.
pub fn reflect(w: &[f64; 2], v: &[f64; 2]) -> [f64; 2] {
    let vv = v[0] * v[0] + v[1] * v[1];
    let c = 2.0 * (w[0] * v[0] + w[1] * v[1]) / vv;
    [w[0] - c * v[0], w[1] - c * v[1]]
}

/// Why the coupled pair stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitReason {
    Coalesced,
    Separated,
    ExitedBall,
    Truncated,
}

impl ExitReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExitReason::Coalesced => "coalesced",
            ExitReason::Separated => "separated",
            ExitReason::ExitedBall => "exited_ball",
            ExitReason::Truncated => "truncated",
        }
    }
}

/// Stopping predicate, checked in the order coalesced, separated, exited.
fn stop_reason(cfg: &WalkConfig, x: &Point, y: &Point) -> Option<ExitReason> {
    let m = &cfg.manifold;
    let d = m.dist(x, y);
    if d <= 3.0 * cfg.eps {
        Some(ExitReason::Coalesced)
    } else if d >= cfg.r {
        Some(ExitReason::Separated)
    } else if m.dist(&cfg.x0, x) >= cfg.r {
        Some(ExitReason::ExitedBall)
    } else {
        None
    }
}

/// One step of the Y chain given the current pair.
pub fn step_y(cfg: &WalkConfig, x: &Point, y: &Point, d: &Draws) -> Result<Point> {
    if stop_reason(cfg, x, y).is_some() {
        return Ok(*y);
    }
    let frame_x = cfg.frame_at(x)?;
    Ok(step_y_with(cfg, &frame_x, x, y, d)?.0)
}

fn step_y_with(cfg: &WalkConfig, frame_x: &Frame, x: &Point, y: &Point, d: &Draws) -> Result<(Point, Frame)> {
    let m = &cfg.manifold;
    let frame_y = m.transport_frame(x, y, frame_x)?;
    let gl = geom::norm(&cfg.density.grad_log(m, y));
    let coords = if d.b >= cfg.eps * gl {
        let v = m.frame_coords(frame_x, &m.log_map(x, y)?);
        reflect(&d.w, &v)
    } else {
        let zx = cfg.zeta(frame_x, x);
        let zy = cfg.zeta(&frame_y, y);
        let chart = chart_y(zx.as_ref(), zy.as_ref());
        let q = cfg.rotations().chart_matrix(chart, &zy.unwrap_or([1.0, 0.0]));
        apply(&q, &d.wbar)
    };
    let next = m.exp_frame(y, &frame_y, &[cfg.eps * coords[0], cfg.eps * coords[1]]);
    Ok((next, frame_y))
}

/// One coupled run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingRun {
    pub x: Vec<Point>,
    pub y: Vec<Point>,
    pub tau: usize,
    pub exit_reason: ExitReason,
    pub d_final: f64,
    /// `d_M(X_tau, x0)`
    pub x_final_dist: f64,
}

fn simulate(cfg: &WalkConfig, y0: &Point, max_steps: usize, trial: u64, record: bool) -> Result<CouplingRun> {
    let m = &cfg.manifold;
    let mut rng = trial_rng(cfg.seed, trial);
    let mut x = cfg.x0;
    let mut y = *y0;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    if record {
        xs.push(x);
        ys.push(y);
    }
    let mut tau = 0;
    let reason = loop {
        if let Some(r) = stop_reason(cfg, &x, &y) {
            break r;
        }
        if tau >= max_steps {
            break ExitReason::Truncated;
        }
        let d = draw(&cfg.kernel, &mut rng);
        let frame_x = cfg.frame_at(&x)?;
        let (ny, _) = step_y_with(cfg, &frame_x, &x, &y, &d)?;
        let inc = x_increment(cfg, &frame_x, &x, &d);
        let nx = m.exp_frame(&x, &frame_x, &[cfg.eps * inc[0], cfg.eps * inc[1]]);
        x = nx;
        y = ny;
        tau += 1;
        if record {
            xs.push(x);
            ys.push(y);
        }
    };
    Ok(CouplingRun {
        x: xs,
        y: ys,
        tau,
        exit_reason: reason,
        d_final: m.dist(&x, &y),
        x_final_dist: m.dist(&cfg.x0, &x),
    })
}

fn check_start(cfg: &WalkConfig, y0: &Point) -> Result<()> {
    cfg.validate()?;
    cfg.manifold.check_point(y0)?;
    let d = cfg.manifold.dist(&cfg.x0, y0);
    if d >= cfg.r {
        return Err(CloudError::InvalidParameter(format!(
            "d(x0, y0) = {d} must be below r = {}",
            cfg.r
        )));
    }
    Ok(())
}

/// Runs both chains on shared draws (trial stream 0) until the stopping
/// time, recording the trajectories.
pub fn run_coupling(cfg: &WalkConfig, y0: &Point, max_steps: usize) -> Result<CouplingRun> {
    check_start(cfg, y0)?;
    simulate(cfg, y0, max_steps, 0, true)
}

/// `50 * ceil(2 r d0 / (sigma eps^2))`
pub fn default_max_steps(cfg: &WalkConfig, d0: f64) -> usize {
    let bound = 2.0 * cfg.r * d0 / (cfg.kernel.sigma() * cfg.eps * cfg.eps);
    50 * bound.ceil().max(1.0) as usize
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub tau: usize,
    pub exit_reason: ExitReason,
    pub d_final: f64,
    pub x_final_dist: f64,
}

/// One-sided check `estimate + z * se <= bound`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub estimate: f64,
    pub std_err: f64,
    pub upper95: f64,
    pub bound: f64,
    pub pass: bool,
}

impl BoundCheck {
    fn new(name: &str, estimate: f64, std_err: f64, bound: f64) -> Self {
        let upper95 = estimate + stats::Z95 * std_err;
        BoundCheck {
            name: name.to_string(),
            estimate,
            std_err,
            upper95,
            bound,
            pass: upper95 <= bound,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingStatistics {
    pub trials: usize,
    pub completed: usize,
    pub truncated: usize,
    pub max_steps: usize,
    pub d0: f64,
    pub eps: f64,
    pub r: f64,
    pub sigma: f64,
    pub coalesced: usize,
    pub separated: usize,
    pub exited: usize,
    pub mean_tau: f64,
    pub se_tau: f64,
    pub p_separation: f64,
    pub p_exit: f64,
    pub mean_exit_dist2: f64,
    pub checks: Vec<BoundCheck>,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

impl CouplingStatistics {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn write_trials_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<Vec<String>> = self
            .records
            .iter()
            .map(|r| {
                vec![
                    r.trial.to_string(),
                    r.tau.to_string(),
                    r.exit_reason.as_str().to_string(),
                    fmt_f64(r.d_final),
                ]
            })
            .collect();
        crate::io::write_table(path, &["trial", "tau", "exit_reason", "d_final"], &rows)
    }
}

fn indicator_stats(xs: &[f64]) -> (f64, f64) {
    (stats::mean(xs), stats::std_err(xs))
}

/// Monte-Carlo estimates of the stopping-time moments and exit
/// probabilities with one-sided 95% checks of the four bounds. Truncated
/// runs are excluded from the estimates and counted.
pub fn coupling_statistics(
    cfg: &WalkConfig,
    y0: &Point,
    trials: usize,
    max_steps: usize,
) -> Result<CouplingStatistics> {
    check_start(cfg, y0)?;
    let d0 = cfg.manifold.dist(&cfg.x0, y0);
    let records: Vec<TrialRecord> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            simulate(cfg, y0, max_steps, t, false).map(|run| TrialRecord {
                trial: t,
                tau: run.tau,
                exit_reason: run.exit_reason,
                d_final: run.d_final,
                x_final_dist: run.x_final_dist,
            })
        })
        .collect::<Result<_>>()?;
    let done: Vec<&TrialRecord> = records
        .iter()
        .filter(|r| r.exit_reason != ExitReason::Truncated)
        .collect();
    if done.len() < 2 {
        return Err(CloudError::TooFewRuns {
            completed: done.len(),
            trials,
        });
    }
    let m = cfg.manifold.intrinsic_dim() as f64;
    let sigma = cfg.kernel.sigma();
    let eps = cfg.eps;
    let r = cfg.r;
    let tau: Vec<f64> = done.iter().map(|t| t.tau as f64).collect();
    let sep: Vec<f64> = done.iter().map(|t| (t.d_final >= r) as u8 as f64).collect();
    let exit: Vec<f64> = done.iter().map(|t| (t.x_final_dist >= r) as u8 as f64).collect();
    let d2: Vec<f64> = done.iter().map(|t| t.x_final_dist * t.x_final_dist).collect();
    let c = 1.5 * m * sigma * eps * eps;
    let z: Vec<f64> = d2.iter().zip(&tau).map(|(a, t)| a - c * t).collect();
    let (mt, st) = indicator_stats(&tau);
    let (ps, ss) = indicator_stats(&sep);
    let (pe, se) = indicator_stats(&exit);
    let (mz, sz) = indicator_stats(&z);
    let count = |e: ExitReason| records.iter().filter(|t| t.exit_reason == e).count();
    let checks = vec![
        BoundCheck::new("expected_tau", mt, st, 2.0 * r * d0 / (sigma * eps * eps)),
        BoundCheck::new("p_separation", ps, ss, 3.0 * d0 / r),
        BoundCheck::new("p_exit", pe, se, 3.0 * m * d0 / r),
        BoundCheck::new("exit_dist2_minus_drift", mz, sz, 0.0),
    ];
    Ok(CouplingStatistics {
        trials,
        completed: done.len(),
        truncated: count(ExitReason::Truncated),
        max_steps,
        d0,
        eps,
        r,
        sigma,
        coalesced: count(ExitReason::Coalesced),
        separated: count(ExitReason::Separated),
        exited: count(ExitReason::ExitedBall),
        mean_tau: mt,
        se_tau: st,
        p_separation: ps,
        p_exit: pe,
        mean_exit_dist2: stats::mean(&d2),
        checks,
        records,
    })
}

/// Point at geodesic distance `d0` from `x0` along the first frame vector.
pub fn start_point(cfg: &WalkConfig, d0: f64) -> Point {
    let frame = cfg.base_frame();
    cfg.manifold.exp_frame(&cfg.x0, &frame, &[d0, 0.0])
}

/// `E[tau]` across several eps with the log-log slope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauScaling {
    pub eps: Vec<f64>,
    pub mean_tau: Vec<f64>,
    pub slope: f64,
}

pub fn tau_scaling(cfg: &WalkConfig, d0: f64, eps_list: &[f64], trials: usize) -> Result<TauScaling> {
    let mut means = Vec::new();
    for &e in eps_list {
        let c = WalkConfig {
            eps: e,
            ..cfg.clone()
        };
        let y0 = start_point(&c, d0);
        let st = coupling_statistics(&c, &y0, trials, default_max_steps(&c, d0))?;
        means.push(st.mean_tau);
    }
    Ok(TauScaling {
        eps: eps_list.to_vec(),
        slope: stats::loglog_slope(eps_list, &means),
        mean_tau: means,
    })
}

/// One-step Monte-Carlo mean of `f(X_1)` from `x` with its standard error.
pub fn one_step_mean<F>(cfg: &WalkConfig, x: &Point, f: F, draws: usize) -> Result<(f64, f64)>
where
    F: Fn(&Point) -> f64 + Sync,
{
    cfg.validate()?;
    cfg.manifold.check_point(x)?;
    let frame = cfg.frame_at(x)?;
    const CHUNK: usize = 4096;
    let chunks = draws.div_ceil(CHUNK);
    let vals: Vec<Vec<f64>> = (0..chunks as u64)
        .into_par_iter()
        .map(|c| {
            let mut rng = trial_rng(cfg.seed, c);
            let len = CHUNK.min(draws - c as usize * CHUNK);
            (0..len)
                .map(|_| {
                    let d = draw(&cfg.kernel, &mut rng);
                    let inc = x_increment(cfg, &frame, x, &d);
                    f(&cfg
                        .manifold
                        .exp_frame(x, &frame, &[cfg.eps * inc[0], cfg.eps * inc[1]]))
                })
                .collect()
        })
        .collect();
    let all: Vec<f64> = vals.concat();
    Ok((stats::mean(&all), stats::std_err(&all)))
}

/// One-step Monte-Carlo mean of `f(Y_1)` for the coupled pair at `(x, y)`.
pub fn one_step_mean_y<F>(cfg: &WalkConfig, x: &Point, y: &Point, f: F, draws: usize) -> Result<(f64, f64)>
where
    F: Fn(&Point) -> f64 + Sync,
{
    cfg.validate()?;
    if stop_reason(cfg, x, y).is_some() {
        return Err(CloudError::InvalidParameter(
            "the pair is already stopped; the Y step is frozen".into(),
        ));
    }
    let frame_x = cfg.frame_at(x)?;
    const CHUNK: usize = 4096;
    let chunks = draws.div_ceil(CHUNK);
    let vals: Vec<Result<Vec<f64>>> = (0..chunks as u64)
        .into_par_iter()
        .map(|c| {
            let mut rng = trial_rng(cfg.seed, c);
            let len = CHUNK.min(draws - c as usize * CHUNK);
            (0..len)
                .map(|_| {
                    let d = draw(&cfg.kernel, &mut rng);
                    Ok(f(&step_y_with(cfg, &frame_x, x, y, &d)?.0))
                })
                .collect()
        })
        .collect();
    let mut all = Vec::with_capacity(draws);
    for v in vals {
        all.extend(v?);
    }
    Ok((stats::mean(&all), stats::std_err(&all)))
}
