use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CloudError, Result};
use crate::quad::adaptive_simpson;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Uniform,
    Triangular,
    QuadraticTaper,
}

impl KernelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            KernelKind::Uniform => "uniform",
            KernelKind::Triangular => "triangular",
            KernelKind::QuadraticTaper => "quadratic_taper",
        }
    }

    pub fn all() -> [KernelKind; 3] {
        [
            KernelKind::Uniform,
            KernelKind::Triangular,
            KernelKind::QuadraticTaper,
        ]
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelKind {
    type Err = CloudError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(KernelKind::Uniform),
            "triangular" => Ok(KernelKind::Triangular),
            "quadratic_taper" => Ok(KernelKind::QuadraticTaper),
            other => Err(CloudError::InvalidParameter(format!(
                "unknown kernel '{other}' (expected uniform, triangular or quadratic_taper)"
            ))),
        }
    }
}

/// Surface area of the unit sphere in R^m (the measure of S^{m-1}).
pub fn unit_sphere_area(m: usize) -> f64 {
    match m {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (m as f64 - 2.0) * unit_sphere_area(m - 2),
    }
}

pub fn unit_ball_volume(m: usize) -> f64 {
    unit_sphere_area(m) / m as f64
}

/// Radial kernel `eta` supported on [0, 1], normalized so that
/// `int_{R^m} eta(|w|) dw = 1`.
///
/// Profiles: uniform `1`, triangular `1 - r`, quadratic taper `1 - r^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelModel {
    pub kind: KernelKind,
    pub m: usize,
    c: f64,
}

impl KernelModel {
    pub fn new(kind: KernelKind, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(CloudError::InvalidParameter(
                "kernel dimension must be >= 1".into(),
            ));
        }
        let omega = unit_sphere_area(m);
        let mf = m as f64;
        let c = match kind {
            KernelKind::Uniform => mf / omega,
            KernelKind::Triangular => mf * (mf + 1.0) / omega,
            KernelKind::QuadraticTaper => mf * (mf + 2.0) / (2.0 * omega),
        };
        Ok(KernelModel { kind, m, c })
    }

    pub fn uniform(m: usize) -> Self {
        Self::new(KernelKind::Uniform, m).expect("m >= 1")
    }

    #[inline]
    fn profile(&self, r: f64) -> f64 {
        match self.kind {
            KernelKind::Uniform => 1.0,
            KernelKind::Triangular => 1.0 - r,
            KernelKind::QuadraticTaper => 1.0 - r * r,
        }
    }

    /// `eta(r)`, zero outside [0, 1]. The support is closed at r = 1.
    #[inline]
    pub fn eta(&self, r: f64) -> f64 {
        if (0.0..=1.0).contains(&r) {
            self.c * self.profile(r)
        } else {
            0.0
        }
    }

    /// `eps^{-m} eta(r / eps)`.
    #[inline]
    pub fn eta_eps(&self, r: f64, eps: f64) -> f64 {
        self.eta(r / eps) / eps.powi(self.m as i32)
    }

    pub fn normalization(&self) -> f64 {
        self.c
    }

    pub fn eta0(&self) -> f64 {
        self.c
    }

    pub fn lipschitz_bound(&self) -> f64 {
        match self.kind {
            KernelKind::Uniform => 0.0,
            KernelKind::Triangular => self.c,
            KernelKind::QuadraticTaper => 2.0 * self.c,
        }
    }

    /// `int_{R^m} eta(|w|) dw` by adaptive quadrature (should be 1).
    pub fn radial_mass(&self) -> f64 {
        let m = self.m as i32;
        unit_sphere_area(self.m) * adaptive_simpson(&|r: f64| self.eta(r) * r.powi(m - 1), 0.0, 1.0, 1e-14)
    }

    pub fn sigma(&self) -> f64 {
        sigma_eta(self)
    }
}

/// Second directional moment `int <w, e1>^2 eta(|w|) dw`, computed through
/// the radial reduction `(omega_{m-1} / m) int_0^1 eta(r) r^{m+1} dr`.
pub fn sigma_eta(k: &KernelModel) -> f64 {
    let m = k.m as i32;
    let radial = adaptive_simpson(&|r: f64| k.eta(r) * r.powi(m + 1), 0.0, 1.0, 1e-15);
    unit_sphere_area(k.m) / k.m as f64 * radial
}
