//! Bivariate Gaussians and the closed-form operations the decoder is built on.
//!
//! Everything is in millimetres on the keyboard plane, and every likelihood is
//! returned as a natural log. Inverses use the 2×2 adjugate with a determinant
//! guard instead of a general decomposition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];

/// Determinants at or below this are treated as singular.
pub const DET_EPSILON: f64 = 1e-12;

/// Symmetry tolerance for covariance matrices.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Default ridge added by [`fit_gaussian`] callers, in mm².
pub const DEFAULT_REG_EPSILON: f64 = 0.25;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[0.0, 0.0], [0.0, 0.0]]);
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn diag(a: f64, b: f64) -> Self {
        Mat2([[a, 0.0], [0.0, b]])
    }

    pub fn scaled_identity(s: f64) -> Self {
        Self::diag(s, s)
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    /// Adjugate inverse; `None` when the determinant is not above [`DET_EPSILON`].
    pub fn inverse(&self) -> Option<Mat2> {
        let det = self.det();
        if !(det > DET_EPSILON) {
            return None;
        }
        let m = &self.0;
        Some(Mat2([
            [m[1][1] / det, -m[0][1] / det],
            [-m[1][0] / det, m[0][0] / det],
        ]))
    }

    pub fn add(&self, other: &Mat2) -> Mat2 {
        let (a, b) = (&self.0, &other.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }

    pub fn mul(&self, other: &Mat2) -> Mat2 {
        let (a, b) = (&self.0, &other.0);
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    /// Averages the off-diagonal entries.
    pub fn symmetrized(&self) -> Mat2 {
        let m = &self.0;
        let off = 0.5 * (m[0][1] + m[1][0]);
        Mat2([[m[0][0], off], [off, m[1][1]]])
    }

    pub fn is_symmetric(&self) -> bool {
        (self.0[0][1] - self.0[1][0]).abs() <= SYMMETRY_TOLERANCE
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().flatten().all(|&v| v == 0.0)
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let s = self.symmetrized();
        let half_trace = 0.5 * s.trace();
        let diff = 0.5 * (s.0[0][0] - s.0[1][1]);
        let radius = (diff * diff + s.0[0][1] * s.0[0][1]).sqrt();
        [half_trace - radius, half_trace + radius]
    }
}

/// Squared Mahalanobis distance `dᵀ A d` for a precision matrix `A`.
fn quadratic_form(precision: &Mat2, d: Vec2) -> f64 {
    let pd = precision.apply(d);
    d[0] * pd[0] + d[1] * pd[1]
}

/// log N(x | mean, cov), with the determinant guard reported as `on_singular`.
fn log_normal(x: Vec2, mean: Vec2, cov: &Mat2, on_singular: fn(f64) -> Error) -> Result<f64> {
    let det = cov.det();
    let precision = cov.inverse().ok_or_else(|| on_singular(det))?;
    let d = [x[0] - mean[0], x[1] - mean[1]];
    Ok(-LN_2PI - 0.5 * det.ln() - 0.5 * quadratic_form(&precision, d))
}

/// A bivariate Gaussian on the keyboard plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian2 {
    pub mean: Vec2,
    pub cov: Mat2,
}

impl Gaussian2 {
    /// Validates symmetry and positive semi-definiteness.
    pub fn new(mean: Vec2, cov: Mat2) -> Result<Self> {
        if !mean.iter().all(|v| v.is_finite()) || !cov.0.iter().flatten().all(|v| v.is_finite()) {
            return Err(Error::InvalidCovariance("non-finite entry".into()));
        }
        if !cov.is_symmetric() {
            return Err(Error::InvalidCovariance(format!(
                "not symmetric: off-diagonals {} and {}",
                cov.0[0][1], cov.0[1][0]
            )));
        }
        let [low, _] = cov.eigenvalues();
        // Rounding on a rank-deficient matrix can leave a tiny negative eigenvalue.
        if low < -1e-12 * cov.trace().abs().max(1.0) {
            return Err(Error::InvalidCovariance(format!(
                "negative eigenvalue {low}"
            )));
        }
        Ok(Gaussian2 { mean, cov })
    }

    pub fn isotropic(mean: Vec2, variance: f64) -> Result<Self> {
        Self::new(mean, Mat2::scaled_identity(variance))
    }

    pub fn diagonal(mean: Vec2, var: Vec2) -> Result<Self> {
        Self::new(mean, Mat2::diag(var[0], var[1]))
    }

    /// A point mass; representable but has no density.
    pub fn deterministic(mean: Vec2) -> Self {
        Gaussian2 {
            mean,
            cov: Mat2::ZERO,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        self.cov.is_zero()
    }

    pub fn with_cov(&self, cov: Mat2) -> Self {
        Gaussian2 {
            mean: self.mean,
            cov,
        }
    }

    pub fn log_pdf(&self, x: Vec2) -> Result<f64> {
        log_pdf(self, x)
    }
}

pub fn log_pdf(g: &Gaussian2, x: Vec2) -> Result<f64> {
    log_normal(x, g.mean, &g.cov, |det| Error::DegenerateDensity { det })
}

/// Result of integrating the product of two Gaussians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionResult {
    /// Log of the integral of the product of both densities (nats).
    pub log_rho: f64,
    pub fused_mean: Vec2,
    pub fused_cov: Mat2,
}

/// Closed-form integral of `N(x|obs) N(x|key)` over the plane, plus the
/// normalized product Gaussian.
///
/// The product is written as `Σ_o S⁻¹ Σ_k` with `S = Σ_o + Σ_k`, which equals
/// `(Σ_o⁻¹ + Σ_k⁻¹)⁻¹` whenever both inverses exist and stays defined when
/// the observation is a point mass.
pub fn fuse(obs: &Gaussian2, key: &Gaussian2) -> Result<FusionResult> {
    let sum = obs.cov.add(&key.cov);
    let log_rho = log_normal(obs.mean, key.mean, &sum, |det| Error::DegenerateFusion {
        det,
    })?;
    let sum_inv = sum
        .inverse()
        .ok_or(Error::DegenerateFusion { det: sum.det() })?;
    let fused_cov = obs.cov.mul(&sum_inv).mul(&key.cov).symmetrized();
    let from_obs = key.cov.mul(&sum_inv).apply(obs.mean);
    let from_key = obs.cov.mul(&sum_inv).apply(key.mean);
    Ok(FusionResult {
        log_rho,
        fused_mean: [from_obs[0] + from_key[0], from_obs[1] + from_key[1]],
        fused_cov,
    })
}

/// Maximum-likelihood mean and full (population) covariance, with
/// `reg_epsilon · I` added so the result is always positive definite.
pub fn fit_gaussian(samples: &[Vec2], reg_epsilon: f64) -> Result<Gaussian2> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    if !(reg_epsilon >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "reg_epsilon must be nonnegative, got {reg_epsilon}"
        )));
    }
    let n = samples.len() as f64;
    let mut mean = [0.0; 2];
    for s in samples {
        mean[0] += s[0];
        mean[1] += s[1];
    }
    mean[0] /= n;
    mean[1] /= n;

    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for s in samples {
        let dx = s[0] - mean[0];
        let dy = s[1] - mean[1];
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let cov = Mat2([
        [sxx / n + reg_epsilon, sxy / n],
        [sxy / n, syy / n + reg_epsilon],
    ]);
    Gaussian2::new(mean, cov)
}
