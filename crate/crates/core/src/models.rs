//! Parametric response models.
//!
//! Both supported models are normal location-scale families with a univariate
//! response: the plain Gaussian `N(mu, sigma^2)` with `theta = (mu, sigma)` and
//! the normal-error linear regression `N(x'beta, sigma^2)` with
//! `theta = (beta_1, .., beta_p, sigma)`. The scale is always the last
//! coordinate and is stored directly, not on the log scale.

use std::f64::consts::PI;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `ln(sqrt(2 pi))`.
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Gaussian,
    LinearRegression,
}

/// A model family together with its dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Number of covariates; zero for the Gaussian model.
    pub covariate_dim: usize,
}

/// A point in parameter space, laid out as `(mu, sigma)` or `(beta.., sigma)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint(pub Vec<f64>);

impl ParamPoint {
    pub fn new(theta: Vec<f64>) -> Self {
        ParamPoint(theta)
    }

    pub fn scale(&self) -> f64 {
        *self.0.last().expect("empty parameter vector")
    }
}

impl Deref for ParamPoint {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ParamPoint {
    fn from(v: Vec<f64>) -> Self {
        ParamPoint(v)
    }
}

/// Row-major `n x p` covariate matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covariates {
    dim: usize,
    values: Vec<f64>,
}

impl Covariates {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || !values.len().is_multiple_of(dim) {
            return Err(Error::Schema(format!(
                "{} covariate values cannot form rows of width {dim}",
                values.len()
            )));
        }
        Ok(Covariates { dim, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Schema("ragged covariate rows".into()));
        }
        Self::new(dim, rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_rows(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    /// Keeps the rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let values = indices
            .iter()
            .flat_map(|&i| self.row(i).iter().copied())
            .collect();
        Covariates {
            dim: self.dim,
            values,
        }
    }
}

impl ModelSpec {
    pub fn gaussian() -> Self {
        ModelSpec {
            kind: ModelKind::Gaussian,
            covariate_dim: 0,
        }
    }

    pub fn linear_regression(covariate_dim: usize) -> Self {
        ModelSpec {
            kind: ModelKind::LinearRegression,
            covariate_dim,
        }
    }

    /// Dimension of `theta`.
    pub fn param_dim(&self) -> usize {
        match self.kind {
            ModelKind::Gaussian => 2,
            ModelKind::LinearRegression => self.covariate_dim + 1,
        }
    }

    pub fn scale_index(&self) -> usize {
        self.param_dim() - 1
    }

    pub fn param_names(&self) -> Vec<String> {
        match self.kind {
            ModelKind::Gaussian => vec!["mu".into(), "sigma".into()],
            ModelKind::LinearRegression => {
                let mut names: Vec<String> = if self.covariate_dim == 1 {
                    vec!["beta".into()]
                } else {
                    (1..=self.covariate_dim).map(|k| format!("beta{k}")).collect()
                };
                names.push("sigma".into());
                names
            }
        }
    }

    fn check_dim(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.param_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.param_dim(),
                got: theta.len(),
            });
        }
        Ok(())
    }

    /// Location and scale of the response distribution at `theta` (and `x`).
    ///
    /// The Gaussian model ignores `x`.
    #[inline]
    pub fn location_scale(&self, theta: &[f64], x: Option<&[f64]>) -> Result<(f64, f64)> {
        self.check_dim(theta)?;
        let sigma = theta[self.scale_index()];
        if !(sigma > 0.0) {
            return Err(Error::NonPositiveScale(sigma));
        }
        let loc = match self.kind {
            ModelKind::Gaussian => theta[0],
            ModelKind::LinearRegression => {
                let x = x.ok_or(Error::MissingCovariates)?;
                if x.len() != self.covariate_dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.covariate_dim,
                        got: x.len(),
                    });
                }
                x.iter().zip(theta).map(|(a, b)| a * b).sum()
            }
        };
        Ok((loc, sigma))
    }

    pub fn log_density(&self, theta: &[f64], y: f64, x: Option<&[f64]>) -> Result<f64> {
        let (loc, sigma) = self.location_scale(theta, x)?;
        Ok(normal_log_pdf(y, loc, sigma))
    }

    /// `f_theta(y)`.
    pub fn density(&self, theta: &[f64], y: f64, x: Option<&[f64]>) -> Result<f64> {
        self.log_density(theta, y, x).map(f64::exp)
    }

    /// First and second derivatives of the density with respect to `y`.
    pub fn d_density_dy(&self, theta: &[f64], y: f64, x: Option<&[f64]>) -> Result<(f64, f64)> {
        let (loc, sigma) = self.location_scale(theta, x)?;
        let f = normal_log_pdf(y, loc, sigma).exp();
        let r = y - loc;
        let s2 = sigma * sigma;
        Ok((-f * r / s2, f * (r * r - s2) / (s2 * s2)))
    }

    /// `int f_theta(t)^(1 + gamma) dt`, which for a normal density is
    /// `(2 pi sigma^2)^(-gamma/2) (1 + gamma)^(-1/2)` irrespective of location.
    pub fn power_integral(&self, theta: &[f64], gamma: f64) -> Result<f64> {
        let sigma = self.checked_scale(theta, gamma)?;
        Ok(normal_power_integral(sigma, gamma))
    }

    /// `d/dgamma int f^(1+gamma) = int f^(1+gamma) log f`.
    pub fn d_power_integral_dgamma(&self, theta: &[f64], gamma: f64) -> Result<f64> {
        let sigma = self.checked_scale(theta, gamma)?;
        let ln_2pi_s2 = (2.0 * PI * sigma * sigma).ln();
        Ok(normal_power_integral(sigma, gamma) * (-0.5 * ln_2pi_s2 - 0.5 / (1.0 + gamma)))
    }

    fn checked_scale(&self, theta: &[f64], gamma: f64) -> Result<f64> {
        self.check_dim(theta)?;
        if !(gamma > 0.0) {
            return Err(Error::NonPositiveGamma(gamma));
        }
        let sigma = theta[self.scale_index()];
        if !(sigma > 0.0) {
            return Err(Error::NonPositiveScale(sigma));
        }
        Ok(sigma)
    }
}

#[inline]
pub(crate) fn normal_log_pdf(y: f64, loc: f64, sigma: f64) -> f64 {
    let z = (y - loc) / sigma;
    -LN_SQRT_2PI - sigma.ln() - 0.5 * z * z
}

#[inline]
pub(crate) fn normal_power_integral(sigma: f64, gamma: f64) -> f64 {
    (-0.5 * gamma * (2.0 * PI * sigma * sigma).ln()).exp() / (1.0 + gamma).sqrt()
}
