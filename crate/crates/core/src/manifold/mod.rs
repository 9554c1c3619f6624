//! Closed-form Riemannian geometry of the reference manifolds: the unit
//! circle in R^2, the unit sphere in R^3 and the flat torus embedded in R^4
//! as a product of two unit circles.

mod density;

pub use density::{sample_cloud, DensityKind, DensityModel};

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CloudError, Result};
use crate::geom::{self, Point, ZERO};
use crate::quad::{gauss_legendre, gauss_legendre_interval};

/// Tolerance used to accept externally supplied points as lying on `M`.
pub const EMBED_TOL: f64 = 1e-8;
/// Tolerance used to accept a vector as tangent.
pub const TANGENT_TOL: f64 = 1e-8;
/// Distance to the cut locus below which `log_map` refuses to answer.
const CUT_MARGIN: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    Circle,
    Sphere2,
    FlatTorus2,
}

impl ManifoldKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ManifoldKind::Circle => "circle",
            ManifoldKind::Sphere2 => "sphere2",
            ManifoldKind::FlatTorus2 => "flat_torus2",
        }
    }
}

impl fmt::Display for ManifoldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ManifoldKind {
    type Err = CloudError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circle" => Ok(ManifoldKind::Circle),
            "sphere2" | "sphere" => Ok(ManifoldKind::Sphere2),
            "flat_torus2" | "torus" => Ok(ManifoldKind::FlatTorus2),
            other => Err(CloudError::InvalidParameter(format!(
                "unknown manifold '{other}' (expected circle, sphere2 or flat_torus2)"
            ))),
        }
    }
}

/// Orthonormal tangent frame; only the first `m` entries are meaningful.
pub type Frame = [Point; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifold {
    pub kind: ManifoldKind,
}

impl Manifold {
    pub fn new(kind: ManifoldKind) -> Self {
        Manifold { kind }
    }

    pub fn circle() -> Self {
        Self::new(ManifoldKind::Circle)
    }

    pub fn sphere2() -> Self {
        Self::new(ManifoldKind::Sphere2)
    }

    pub fn flat_torus2() -> Self {
        Self::new(ManifoldKind::FlatTorus2)
    }

    pub fn all() -> [Manifold; 3] {
        [Self::circle(), Self::sphere2(), Self::flat_torus2()]
    }

    pub fn intrinsic_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Circle => 1,
            _ => 2,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Circle => 2,
            ManifoldKind::Sphere2 => 3,
            ManifoldKind::FlatTorus2 => 4,
        }
    }

    pub fn injectivity_radius(&self) -> f64 {
        PI
    }

    pub fn reach(&self) -> f64 {
        1.0
    }

    pub fn volume(&self) -> f64 {
        match self.kind {
            ManifoldKind::Circle => 2.0 * PI,
            ManifoldKind::Sphere2 => 4.0 * PI,
            ManifoldKind::FlatTorus2 => 4.0 * PI * PI,
        }
    }

    pub fn constraint_residual(&self, x: &Point) -> f64 {
        match self.kind {
            ManifoldKind::Circle => {
                ((x[0] * x[0] + x[1] * x[1]).sqrt() - 1.0).abs() + x[2].abs() + x[3].abs()
            }
            ManifoldKind::Sphere2 => (geom::norm(x) - 1.0).abs() + x[3].abs(),
            ManifoldKind::FlatTorus2 => {
                ((x[0] * x[0] + x[1] * x[1]).sqrt() - 1.0).abs()
                    + ((x[2] * x[2] + x[3] * x[3]).sqrt() - 1.0).abs()
            }
        }
    }

    pub fn check_point(&self, x: &Point) -> Result<()> {
        let residual = self.constraint_residual(x);
        if residual.is_finite() && residual <= EMBED_TOL {
            Ok(())
        } else {
            Err(CloudError::ConstraintViolation { residual })
        }
    }

    /// Nearest point of `M` (blockwise normalization).
    pub fn project(&self, x: &Point) -> Point {
        match self.kind {
            ManifoldKind::Circle => {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                [x[0] / r, x[1] / r, 0.0, 0.0]
            }
            ManifoldKind::Sphere2 => {
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                [x[0] / r, x[1] / r, x[2] / r, 0.0]
            }
            ManifoldKind::FlatTorus2 => {
                let r1 = (x[0] * x[0] + x[1] * x[1]).sqrt();
                let r2 = (x[2] * x[2] + x[3] * x[3]).sqrt();
                [x[0] / r1, x[1] / r1, x[2] / r2, x[3] / r2]
            }
        }
    }

    /// Point from intrinsic angles: circle uses `a[0]`; sphere uses polar
    /// angle `a[0]` and azimuth `a[1]`; torus uses both factor angles.
    pub fn from_angles(&self, a: [f64; 2]) -> Point {
        match self.kind {
            ManifoldKind::Circle => [a[0].cos(), a[0].sin(), 0.0, 0.0],
            ManifoldKind::Sphere2 => {
                let (st, ct) = a[0].sin_cos();
                [st * a[1].cos(), st * a[1].sin(), ct, 0.0]
            }
            ManifoldKind::FlatTorus2 => [a[0].cos(), a[0].sin(), a[1].cos(), a[1].sin()],
        }
    }

    /// Inverse of [`Manifold::from_angles`].
    pub fn angles(&self, x: &Point) -> [f64; 2] {
        match self.kind {
            ManifoldKind::Circle => [x[1].atan2(x[0]), 0.0],
            ManifoldKind::Sphere2 => {
                let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
                [rho.atan2(x[2]), x[1].atan2(x[0])]
            }
            ManifoldKind::FlatTorus2 => [x[1].atan2(x[0]), x[3].atan2(x[2])],
        }
    }

    /// Orthogonal projection of an ambient vector onto `T_x M`.
    pub fn tangent_project(&self, x: &Point, v: &Point) -> Point {
        match self.kind {
            ManifoldKind::Circle | ManifoldKind::Sphere2 => {
                let mut p = geom::axpy(v, -geom::dot(v, x), x);
                if self.kind == ManifoldKind::Circle {
                    p[2] = 0.0;
                }
                p[3] = 0.0;
                p
            }
            ManifoldKind::FlatTorus2 => {
                let [t1, t2] = torus_tangents(x);
                geom::axpy(&geom::scale(&t1, geom::dot(v, &t1)), geom::dot(v, &t2), &t2)
            }
        }
    }

    fn check_tangent(&self, x: &Point, v: &Point) -> Result<()> {
        let p = self.tangent_project(x, v);
        let residual = geom::dist(&p, v);
        if residual <= TANGENT_TOL * (1.0 + geom::norm(v)) {
            Ok(())
        } else {
            Err(CloudError::NotTangent { residual })
        }
    }

    /// Unchecked geodesic distance, for hot loops over valid points.
    #[inline]
    pub fn dist(&self, x: &Point, y: &Point) -> f64 {
        match self.kind {
            ManifoldKind::Circle => circle_angle(x, y).abs(),
            ManifoldKind::Sphere2 => {
                let c = geom::cross3(x, y);
                geom::norm(&c).atan2(geom::dot(x, y))
            }
            ManifoldKind::FlatTorus2 => {
                let (d1, d2) = torus_deltas(x, y);
                d1.hypot(d2)
            }
        }
    }

    pub fn geodesic_distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.dist(x, y))
    }

    pub fn exp_map(&self, x: &Point, v: &Point) -> Result<Point> {
        self.check_point(x)?;
        self.check_tangent(x, v)?;
        let len = geom::norm(v);
        if len >= self.injectivity_radius() {
            return Err(CloudError::InjectivityRadius {
                norm: len,
                limit: self.injectivity_radius(),
            });
        }
        Ok(self.exp_unchecked(x, v))
    }

    /// Exponential map without validation.
    #[inline]
    pub fn exp_unchecked(&self, x: &Point, v: &Point) -> Point {
        match self.kind {
            ManifoldKind::Circle => {
                let t = [-x[1], x[0], 0.0, 0.0];
                let s = geom::dot(v, &t);
                let (sn, cs) = s.sin_cos();
                self.project(&[cs * x[0] + sn * t[0], cs * x[1] + sn * t[1], 0.0, 0.0])
            }
            ManifoldKind::Sphere2 => {
                let s = geom::norm(v);
                if s == 0.0 {
                    return *x;
                }
                let (sn, cs) = s.sin_cos();
                let y = geom::axpy(&geom::scale(x, cs), sn / s, v);
                self.project(&y)
            }
            ManifoldKind::FlatTorus2 => {
                let [t1, t2] = torus_tangents(x);
                let a1 = geom::dot(v, &t1);
                let a2 = geom::dot(v, &t2);
                let (s1, c1) = a1.sin_cos();
                let (s2, c2) = a2.sin_cos();
                self.project(&[
                    c1 * x[0] + s1 * t1[0],
                    c1 * x[1] + s1 * t1[1],
                    c2 * x[2] + s2 * t2[2],
                    c2 * x[3] + s2 * t2[3],
                ])
            }
        }
    }

    /// Exponential map of `sum_i w_i e_i` for a frame at `x`.
    #[inline]
    pub fn exp_frame(&self, x: &Point, frame: &Frame, w: &[f64; 2]) -> Point {
        let v = self.frame_vector(frame, w);
        self.exp_unchecked(x, &v)
    }

    #[inline]
    pub fn frame_vector(&self, frame: &Frame, w: &[f64; 2]) -> Point {
        if self.intrinsic_dim() == 1 {
            geom::scale(&frame[0], w[0])
        } else {
            geom::axpy(&geom::scale(&frame[0], w[0]), w[1], &frame[1])
        }
    }

    /// Coordinates of a tangent vector in a frame.
    #[inline]
    pub fn frame_coords(&self, frame: &Frame, v: &Point) -> [f64; 2] {
        if self.intrinsic_dim() == 1 {
            [geom::dot(v, &frame[0]), 0.0]
        } else {
            [geom::dot(v, &frame[0]), geom::dot(v, &frame[1])]
        }
    }

    pub fn log_map(&self, x: &Point, y: &Point) -> Result<Point> {
        self.check_point(x)?;
        self.check_point(y)?;
        self.log_unchecked(x, y)
    }

    /// Log map for valid points; still reports the cut locus.
    pub fn log_unchecked(&self, x: &Point, y: &Point) -> Result<Point> {
        let lim = self.injectivity_radius() - CUT_MARGIN;
        match self.kind {
            ManifoldKind::Circle => {
                let s = circle_angle(x, y);
                if s.abs() > lim {
                    return Err(CloudError::CutLocus);
                }
                Ok([-x[1] * s, x[0] * s, 0.0, 0.0])
            }
            ManifoldKind::Sphere2 => {
                let c = geom::dot(x, y);
                let u = geom::axpy(y, -c, x);
                let sn = geom::norm(&geom::cross3(x, y));
                let theta = sn.atan2(c);
                if theta > lim {
                    return Err(CloudError::CutLocus);
                }
                let un = geom::norm(&u);
                if un == 0.0 || theta == 0.0 {
                    return Ok(ZERO);
                }
                let mut v = geom::scale(&u, theta / un);
                v[3] = 0.0;
                Ok(self.tangent_project(x, &v))
            }
            ManifoldKind::FlatTorus2 => {
                let (d1, d2) = torus_deltas(x, y);
                if d1.abs() > lim || d2.abs() > lim {
                    return Err(CloudError::CutLocus);
                }
                let [t1, t2] = torus_tangents(x);
                Ok(geom::axpy(&geom::scale(&t1, d1), d2, &t2))
            }
        }
    }

    pub fn parallel_transport(&self, x: &Point, y: &Point, v: &Point) -> Result<Point> {
        self.check_point(x)?;
        self.check_point(y)?;
        self.check_tangent(x, v)?;
        self.transport_unchecked(x, y, v)
    }

    /// Parallel transport along the minimizing geodesic, for valid input.
    pub fn transport_unchecked(&self, x: &Point, y: &Point, v: &Point) -> Result<Point> {
        match self.kind {
            ManifoldKind::Circle => {
                if circle_angle(x, y).abs() > self.injectivity_radius() - CUT_MARGIN {
                    return Err(CloudError::CutLocus);
                }
                let a = -v[0] * x[1] + v[1] * x[0];
                Ok([-y[1] * a, y[0] * a, 0.0, 0.0])
            }
            ManifoldKind::Sphere2 => {
                let l = self.log_unchecked(x, y)?;
                let theta = geom::norm(&l);
                if theta == 0.0 {
                    return Ok(*v);
                }
                let u = geom::scale(&l, 1.0 / theta);
                let (sn, cs) = theta.sin_cos();
                let u_y = geom::axpy(&geom::scale(x, -sn), cs, &u);
                let a = geom::dot(v, &u);
                let perp = geom::axpy(v, -a, &u);
                Ok(self.tangent_project(y, &geom::axpy(&perp, a, &u_y)))
            }
            ManifoldKind::FlatTorus2 => {
                let (d1, d2) = torus_deltas(x, y);
                let lim = self.injectivity_radius() - CUT_MARGIN;
                if d1.abs() > lim || d2.abs() > lim {
                    return Err(CloudError::CutLocus);
                }
                let [t1, t2] = torus_tangents(x);
                let [s1, s2] = torus_tangents(y);
                Ok(geom::axpy(
                    &geom::scale(&s1, geom::dot(v, &t1)),
                    geom::dot(v, &t2),
                    &s2,
                ))
            }
        }
    }

    /// Transport of a whole frame from `x` to `y`.
    pub fn transport_frame(&self, x: &Point, y: &Point, frame: &Frame) -> Result<Frame> {
        let mut out = [ZERO; 2];
        for (k, e) in frame.iter().take(self.intrinsic_dim()).enumerate() {
            out[k] = self.transport_unchecked(x, y, e)?;
        }
        Ok(out)
    }

    /// Deterministic orthonormal frame of `T_x M`.
    pub fn frame(&self, x: &Point) -> Frame {
        match self.kind {
            ManifoldKind::Circle => [[-x[1], x[0], 0.0, 0.0], ZERO],
            ManifoldKind::Sphere2 => {
                let reference = if x[2].abs() < 0.9 {
                    [0.0, 0.0, 1.0, 0.0]
                } else {
                    [1.0, 0.0, 0.0, 0.0]
                };
                let p = self.tangent_project(x, &reference);
                let e1 = geom::scale(&p, 1.0 / geom::norm(&p));
                let e2 = geom::cross3(x, &e1);
                [e1, e2]
            }
            ManifoldKind::FlatTorus2 => torus_tangents(x),
        }
    }

    pub fn tangent_frame(&self, x: &Point) -> Vec<Point> {
        self.frame(x)[..self.intrinsic_dim()].to_vec()
    }

    /// Sum of second fundamental forms over an orthonormal frame; together
    /// with the ambient Hessian it gives the Laplace-Beltrami operator of
    /// restricted ambient functions.
    pub fn mean_curvature(&self, x: &Point) -> Point {
        match self.kind {
            ManifoldKind::Circle | ManifoldKind::FlatTorus2 => geom::scale(x, -1.0),
            ManifoldKind::Sphere2 => geom::scale(x, -2.0),
        }
    }

    /// Volume density of normal coordinates at geodesic radius `r`.
    #[inline]
    pub fn metric_factor(&self, r: f64) -> f64 {
        match self.kind {
            ManifoldKind::Sphere2 => {
                if r < 1e-8 {
                    1.0 - r * r / 6.0
                } else {
                    r.sin() / r
                }
            }
            _ => 1.0,
        }
    }

    /// Volume of the geodesic ball of radius `r` (below the injectivity radius).
    pub fn ball_volume(&self, r: f64) -> f64 {
        match self.kind {
            ManifoldKind::Circle => 2.0 * r,
            ManifoldKind::Sphere2 => 2.0 * PI * (1.0 - r.cos()),
            ManifoldKind::FlatTorus2 => PI * r * r,
        }
    }

    pub fn ball_volume_residual(&self, x: &Point, r: f64) -> Result<f64> {
        self.check_point(x)?;
        if !(r > 0.0 && r < self.injectivity_radius()) {
            return Err(CloudError::InvalidParameter(format!(
                "ball radius {r} must lie in (0, injectivity radius)"
            )));
        }
        match self.kind {
            // 2*pi*(1 - cos r) - pi r^2 loses all digits for small r
            ManifoldKind::Sphere2 => {
                let h = 0.5 * r;
                let s = h.sin();
                let diff = 4.0 * PI * (s - h) * (s + h);
                Ok(diff.abs() / r.powi(4))
            }
            // flat models: geodesic balls are Euclidean balls
            _ => Ok(0.0),
        }
    }

    /// `| d(Exp_x(sv), Exp_y(sw))^2 - |log_x(y) + s(P_{y,x} w - v)|^2 |`.
    pub fn quadrilateral_residual(&self, x: &Point, y: &Point, v: &Point, w: &Point, s: f64) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        self.check_tangent(x, v)?;
        self.check_tangent(y, w)?;
        let third = self.injectivity_radius() / 3.0;
        if self.dist(x, y) >= third || geom::norm(v) >= third || geom::norm(w) >= third {
            return Err(CloudError::InvalidParameter(
                "quadrilateral sides must be shorter than a third of the injectivity radius".into(),
            ));
        }
        if !(0.0..=1.0).contains(&s) {
            return Err(CloudError::InvalidParameter(format!("s = {s} outside [0, 1]")));
        }
        let a = self.exp_unchecked(x, &geom::scale(v, s));
        let b = self.exp_unchecked(y, &geom::scale(w, s));
        let l = self.dist(&a, &b).powi(2);
        let z = self.log_unchecked(x, y)?;
        let pw = self.transport_unchecked(y, x, w)?;
        let lin = geom::axpy(&z, s, &geom::sub(&pw, v));
        Ok((l - geom::dot(&lin, &lin)).abs())
    }

    /// Parameter-grid net with covering radius at most `h`.
    pub fn covering_net(&self, h: f64) -> Result<Vec<Point>> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(CloudError::InvalidParameter(format!(
                "net spacing {h} must be positive"
            )));
        }
        Ok(match self.kind {
            ManifoldKind::Circle => {
                let n = ((2.0 * PI / h).ceil() as usize).max(1);
                (0..n)
                    .map(|k| self.from_angles([2.0 * PI * k as f64 / n as f64, 0.0]))
                    .collect()
            }
            ManifoldKind::Sphere2 => {
                let bands = ((PI / h).ceil() as usize).max(1);
                let dtheta = PI / bands as f64;
                let mut pts = Vec::new();
                for b in 0..bands {
                    let theta = (b as f64 + 0.5) * dtheta;
                    let lo = b as f64 * dtheta;
                    let hi = lo + dtheta;
                    let smax = if lo <= 0.5 * PI && hi >= 0.5 * PI {
                        1.0
                    } else {
                        lo.sin().max(hi.sin())
                    };
                    let count = ((2.0 * PI * smax / h).ceil() as usize).max(1);
                    for k in 0..count {
                        let phi = 2.0 * PI * (k as f64 + 0.5 * (b % 2) as f64) / count as f64;
                        pts.push(self.from_angles([theta, phi]));
                    }
                }
                pts
            }
            ManifoldKind::FlatTorus2 => {
                let n = ((2.0 * PI / (std::f64::consts::SQRT_2 * h)).ceil() as usize).max(1);
                let mut pts = Vec::with_capacity(n * n);
                for i in 0..n {
                    for j in 0..n {
                        pts.push(
                            self.from_angles([
                                2.0 * PI * i as f64 / n as f64,
                                2.0 * PI * j as f64 / n as f64,
                            ]),
                        );
                    }
                }
                pts
            }
        })
    }

    /// Point drawn from the normalized volume measure.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match self.kind {
            ManifoldKind::Circle => self.from_angles([2.0 * PI * rng.gen::<f64>(), 0.0]),
            ManifoldKind::Sphere2 => {
                let z = 2.0 * rng.gen::<f64>() - 1.0;
                let phi = 2.0 * PI * rng.gen::<f64>();
                let r = (1.0 - z * z).max(0.0).sqrt();
                [r * phi.cos(), r * phi.sin(), z, 0.0]
            }
            ManifoldKind::FlatTorus2 => {
                let a = 2.0 * PI * rng.gen::<f64>();
                let b = 2.0 * PI * rng.gen::<f64>();
                self.from_angles([a, b])
            }
        }
    }

    /// `int_M g dVol` on a tensor parameter grid: trapezoid in periodic
    /// angles, Gauss-Legendre in the height coordinate of the sphere.
    pub fn quadrature<G>(&self, g: G, resolution: usize) -> f64
    where
        G: Fn(&Point) -> f64 + Sync,
    {
        let res = resolution.max(2);
        match self.kind {
            ManifoldKind::Circle => {
                let h = 2.0 * PI / res as f64;
                let vals: Vec<f64> = (0..res)
                    .into_par_iter()
                    .map(|k| g(&self.from_angles([k as f64 * h, 0.0])))
                    .collect();
                vals.iter().sum::<f64>() * h
            }
            ManifoldKind::Sphere2 => {
                let (z, wz) = gauss_legendre(res);
                let nphi = 2 * res;
                let h = 2.0 * PI / nphi as f64;
                let rows: Vec<f64> = (0..res)
                    .into_par_iter()
                    .map(|i| {
                        let r = (1.0 - z[i] * z[i]).sqrt();
                        let mut s = 0.0;
                        for k in 0..nphi {
                            let phi = k as f64 * h;
                            s += g(&[r * phi.cos(), r * phi.sin(), z[i], 0.0]);
                        }
                        s * h * wz[i]
                    })
                    .collect();
                rows.iter().sum()
            }
            ManifoldKind::FlatTorus2 => {
                let h = 2.0 * PI / res as f64;
                let rows: Vec<f64> = (0..res)
                    .into_par_iter()
                    .map(|i| {
                        let mut s = 0.0;
                        for j in 0..res {
                            s += g(&self.from_angles([i as f64 * h, j as f64 * h]));
                        }
                        s * h * h
                    })
                    .collect();
                rows.iter().sum()
            }
        }
    }
}

/// Signed angle from `x` to `y` on the circle.
#[inline]
fn circle_angle(x: &Point, y: &Point) -> f64 {
    (x[0] * y[1] - x[1] * y[0]).atan2(x[0] * y[0] + x[1] * y[1])
}

#[inline]
fn torus_deltas(x: &Point, y: &Point) -> (f64, f64) {
    let d1 = (x[0] * y[1] - x[1] * y[0]).atan2(x[0] * y[0] + x[1] * y[1]);
    let d2 = (x[2] * y[3] - x[3] * y[2]).atan2(x[2] * y[2] + x[3] * y[3]);
    (d1, d2)
}

#[inline]
fn torus_tangents(x: &Point) -> Frame {
    [[-x[1], x[0], 0.0, 0.0], [0.0, 0.0, -x[3], x[2]]]
}

/// Quadrature rule on the closed unit ball of R^m (m = 1 or 2) with
/// Lebesgue weights. Used to integrate over geodesic balls in normal
/// coordinates.
#[derive(Clone, Debug)]
pub struct BallRule {
    pub m: usize,
    pub nodes: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl BallRule {
    pub fn new(m: usize, radial: usize, angular: usize) -> Self {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        match m {
            1 => {
                let (r, w) = gauss_legendre_interval(radial, 0.0, 1.0);
                for sign in [-1.0, 1.0] {
                    for (ri, wi) in r.iter().zip(&w) {
                        nodes.push([sign * ri, 0.0]);
                        weights.push(*wi);
                    }
                }
            }
            2 => {
                let (r, w) = gauss_legendre_interval(radial, 0.0, 1.0);
                let h = 2.0 * PI / angular as f64;
                for (ri, wi) in r.iter().zip(&w) {
                    for k in 0..angular {
                        let phi = (k as f64 + 0.5) * h;
                        nodes.push([ri * phi.cos(), ri * phi.sin()]);
                        weights.push(wi * ri * h);
                    }
                }
            }
            _ => panic!("ball rules exist for m = 1, 2"),
        }
        BallRule { m, nodes, weights }
    }

    /// Default accuracy used by the continuum operators.
    pub fn standard(m: usize) -> Self {
        Self::new(m, 24, 48)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}
