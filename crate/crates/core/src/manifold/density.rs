use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Manifold, ManifoldKind};
use crate::error::{CloudError, Result};
use crate::geom::{self, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    Uniform,
    Tilted,
}

/// Sampling density with respect to the volume measure.
///
/// The tilted density is `(1 + a <x, u>) / Z` with `u = e1` on the circle,
/// `u = e3` on the sphere, and `(1 + a cos t1) / Z` on the torus. In all
/// three cases the tilt has zero mean, so `Z = Vol(M)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityModel {
    pub kind: DensityKind,
    pub a: f64,
}

impl DensityModel {
    pub fn uniform() -> Self {
        DensityModel {
            kind: DensityKind::Uniform,
            a: 0.0,
        }
    }

    pub fn tilted(a: f64) -> Result<Self> {
        if !(a.abs() < 1.0) {
            return Err(CloudError::InvalidParameter(format!(
                "tilt strength {a} must satisfy |a| < 1"
            )));
        }
        Ok(DensityModel {
            kind: DensityKind::Tilted,
            a,
        })
    }

    pub fn is_uniform(&self) -> bool {
        self.kind == DensityKind::Uniform || self.a == 0.0
    }

    pub fn normalization(&self, m: &Manifold) -> f64 {
        m.volume()
    }

    /// Tilt axis in ambient coordinates.
    pub fn axis(&self, m: &Manifold) -> Point {
        match m.kind {
            ManifoldKind::Sphere2 => [0.0, 0.0, 1.0, 0.0],
            _ => [1.0, 0.0, 0.0, 0.0],
        }
    }

    #[inline]
    fn tilt(&self, m: &Manifold, x: &Point) -> f64 {
        match m.kind {
            ManifoldKind::Sphere2 => x[2],
            _ => x[0],
        }
    }

    #[inline]
    pub fn value(&self, m: &Manifold, x: &Point) -> f64 {
        match self.kind {
            DensityKind::Uniform => 1.0 / m.volume(),
            DensityKind::Tilted => (1.0 + self.a * self.tilt(m, x)) / m.volume(),
        }
    }

    /// Riemannian gradient of `log rho` at `x`.
    #[inline]
    pub fn grad_log(&self, m: &Manifold, x: &Point) -> Point {
        match self.kind {
            DensityKind::Uniform => geom::ZERO,
            DensityKind::Tilted => {
                let g = m.tangent_project(x, &self.axis(m));
                geom::scale(&g, self.a / (1.0 + self.a * self.tilt(m, x)))
            }
        }
    }

    /// `sup_M |grad log rho|`, attained where the tilt equals `-a`.
    pub fn sup_grad_log(&self) -> f64 {
        match self.kind {
            DensityKind::Uniform => 0.0,
            DensityKind::Tilted => self.a.abs() / (1.0 - self.a * self.a).sqrt(),
        }
    }

    pub fn max_value(&self, m: &Manifold) -> f64 {
        (1.0 + self.a.abs()) / m.volume()
    }

    pub fn min_value(&self, m: &Manifold) -> f64 {
        (1.0 - self.a.abs()) / m.volume()
    }

    /// Rejection sampling against the uniform proposal.
    pub fn sample<R: Rng + ?Sized>(&self, m: &Manifold, rng: &mut R) -> Point {
        loop {
            let x = m.sample_uniform(rng);
            match self.kind {
                DensityKind::Uniform => return x,
                DensityKind::Tilted => {
                    let accept = (1.0 + self.a * self.tilt(m, &x)) / (1.0 + self.a.abs());
                    if rng.gen::<f64>() < accept {
                        return x;
                    }
                }
            }
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            DensityKind::Uniform => "uniform".into(),
            DensityKind::Tilted => format!("tilted:{}", self.a),
        }
    }
}

impl fmt::Display for DensityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Parses `uniform`, `tilted` (a = 0.5) or `tilted:<a>`.
impl FromStr for DensityModel {
    type Err = CloudError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::uniform()),
            "tilted" => Self::tilted(0.5),
            other => match other.strip_prefix("tilted:") {
                Some(a) => {
                    let a: f64 = a.parse().map_err(|_| {
                        CloudError::InvalidParameter(format!("bad tilt strength in '{other}'"))
                    })?;
                    Self::tilted(a)
                }
                None => Err(CloudError::InvalidParameter(format!(
                    "unknown density '{other}' (expected uniform, tilted or tilted:<a>)"
                ))),
            },
        }
    }
}

/// i.i.d. sample of `n` points from `rho dVol`.
pub fn sample_cloud(m: &Manifold, rho: &DensityModel, n: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rho.sample(m, &mut rng)).collect()
}
