//! Least squares under the restricted (`beta2 = 0`) and unrestricted models,
//! Mallows-type risk estimates, and their exponential-weight average
//!
//! ```text
//! beta_tilde = lambda * beta_R + (1 - lambda) * beta_U
//! lambda     = 1 / (1 + exp(-2 alpha k2) exp(alpha |X beta_R - X beta_U|^2 / sigma^2))
//! ```

use crate::design::PartitionedDesign;
use crate::error::{arg_err, Result};
use crate::normal::logistic;
use crate::shrink::ShrinkMap;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Tuning parameter `alpha` and known noise standard deviation `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AveragingConfig {
    pub alpha: f64,
    pub sigma: f64,
}

impl AveragingConfig {
    pub fn new(alpha: f64, sigma: f64) -> Result<Self> {
        let cfg = Self { alpha, sigma };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return arg_err(format!("alpha must be positive and finite, got {}", self.alpha));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return arg_err(format!("sigma must be positive and finite, got {}", self.sigma));
        }
        Ok(())
    }

    pub fn shrink_map(&self, k2: usize) -> Result<ShrinkMap> {
        ShrinkMap::for_averaging(self.alpha, self.sigma, k2)
    }

    /// Deterministic bound on `lambda * |beta_R - beta_U|` for every data
    /// vector: `sigma * sqrt(exp(4 alpha k2) / (alpha * lambda_min(X'X)))`.
    pub fn shrink_bound(&self, design: &PartitionedDesign) -> f64 {
        let k2 = design.k2() as f64;
        self.sigma * (2.0 * self.alpha * k2).exp() / (self.alpha * design.lambda_min()).sqrt()
    }

    /// The same bound after scaling by `sqrt(n)`.
    pub fn scaled_shrink_bound(&self, design: &PartitionedDesign) -> f64 {
        let k2 = design.k2() as f64;
        self.sigma * (2.0 * self.alpha * k2).exp() / (self.alpha * design.lambda_min_scaled()).sqrt()
    }
}

/// Everything the averaging estimator computes for one response vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateBundle {
    pub beta_r: DVector<f64>,
    pub beta_u: DVector<f64>,
    pub lambda: f64,
    pub beta_tilde: DVector<f64>,
    pub risk_r: f64,
    pub risk_u: f64,
    /// `|X beta_R - X beta_U|^2 = |(P_U - P_R) Y|^2`.
    pub fit_gap: f64,
}

impl EstimateBundle {
    /// `lambda * |beta_R - beta_U| = |beta_tilde - beta_U|`.
    pub fn shrink_norm(&self) -> f64 {
        self.lambda * (&self.beta_r - &self.beta_u).norm()
    }
}

/// `X'Y` and `Y'Y`, the only functions of `Y` the estimator needs.
struct CrossProducts {
    xty: DVector<f64>,
    yty: f64,
}

fn cross_products(design: &PartitionedDesign, y: &DVector<f64>) -> Result<CrossProducts> {
    if y.len() != design.n() {
        return arg_err(format!("response has length {}, design has {} rows", y.len(), design.n()));
    }
    Ok(CrossProducts { xty: design.x().tr_mul(y), yty: y.norm_squared() })
}

fn restricted_from(design: &PartitionedDesign, xty: &DVector<f64>) -> DVector<f64> {
    let k1 = design.k1();
    let inv_root = design.x1tx1_inv_root();
    let top = inv_root * (inv_root * xty.rows(0, k1));
    let mut beta = DVector::zeros(design.k());
    beta.rows_mut(0, k1).copy_from(&top);
    beta
}

/// `V2 = S2^{-1/2} X2'(I - P_R) Y`, whose squared norm is the fit gap.
fn v2_from(design: &PartitionedDesign, xty: &DVector<f64>) -> DVector<f64> {
    let (k1, k2) = (design.k1(), design.k2());
    let x1ty = xty.rows(0, k1);
    let resid = xty.rows(k1, k2) - design.coef12().transpose() * x1ty;
    design.s2_inv_root() * resid
}

/// Restricted least squares `[(X1'X1)^{-1} X1'Y ; 0]`.
pub fn restricted_ls(design: &PartitionedDesign, y: &DVector<f64>) -> Result<DVector<f64>> {
    let cp = cross_products(design, y)?;
    Ok(restricted_from(design, &cp.xty))
}

/// Unrestricted least squares `(X'X)^{-1} X'Y`.
pub fn unrestricted_ls(design: &PartitionedDesign, y: &DVector<f64>) -> Result<DVector<f64>> {
    let cp = cross_products(design, y)?;
    Ok(design.solve_gram(&cp.xty))
}

/// `|X beta_R - X beta_U|^2`.
pub fn fit_gap(design: &PartitionedDesign, y: &DVector<f64>) -> Result<f64> {
    let cp = cross_products(design, y)?;
    Ok(v2_from(design, &cp.xty).norm_squared())
}

fn risks_from(design: &PartitionedDesign, cfg: &AveragingConfig, cp: &CrossProducts, br: &DVector<f64>, bu: &DVector<f64>) -> (f64, f64) {
    let s2 = cfg.sigma * cfg.sigma;
    let n = design.n() as f64;
    let xtx = design.xtx();
    let r_r = cp.yty - br.dot(&(xtx * br)) + s2 * (2.0 * design.k1() as f64 - n);
    let r_u = cp.yty - bu.dot(&(xtx * bu)) + s2 * (2.0 * design.k() as f64 - n);
    (r_r, r_u)
}

/// Mallows-type risk estimates `(r_R, r_U)`.
pub fn risk_estimates(design: &PartitionedDesign, y: &DVector<f64>, cfg: &AveragingConfig) -> Result<(f64, f64)> {
    let cp = cross_products(design, y)?;
    let br = restricted_from(design, &cp.xty);
    let bu = design.solve_gram(&cp.xty);
    Ok(risks_from(design, cfg, &cp, &br, &bu))
}

fn weight_from_gap(gap: f64, k2: usize, cfg: &AveragingConfig) -> f64 {
    let alpha = cfg.alpha;
    logistic(2.0 * alpha * k2 as f64 - alpha * gap / (cfg.sigma * cfg.sigma))
}

/// Weight on the restricted estimator.
pub fn weight(design: &PartitionedDesign, y: &DVector<f64>, cfg: &AveragingConfig) -> Result<f64> {
    Ok(weight_from_gap(fit_gap(design, y)?, design.k2(), cfg))
}

/// The weight written through the two risk estimates,
/// `exp(-alpha r_R / sigma^2) / (exp(-alpha r_R / sigma^2) + exp(-alpha r_U / sigma^2))`.
///
/// Differencing two large risks loses precision; this form is kept as a
/// reference for [`weight`].
pub fn weight_from_risks(risk_r: f64, risk_u: f64, cfg: &AveragingConfig) -> f64 {
    let s2 = cfg.sigma * cfg.sigma;
    logistic(cfg.alpha * (risk_u - risk_r) / s2)
}

/// Runs the averaging estimator on one response vector.
pub fn model_average(design: &PartitionedDesign, y: &DVector<f64>, cfg: &AveragingConfig) -> Result<EstimateBundle> {
    let cp = cross_products(design, y)?;
    let beta_r = restricted_from(design, &cp.xty);
    let beta_u = design.solve_gram(&cp.xty);
    let fit_gap = v2_from(design, &cp.xty).norm_squared();
    let lambda = weight_from_gap(fit_gap, design.k2(), cfg);
    let beta_tilde = &beta_r * lambda + &beta_u * (1.0 - lambda);
    let (risk_r, risk_u) = risks_from(design, cfg, &cp, &beta_r, &beta_u);
    Ok(EstimateBundle { beta_r, beta_u, lambda, beta_tilde, risk_r, risk_u, fit_gap })
}
