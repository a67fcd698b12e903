//! Densities, CDFs and L1 distances of `sqrt(n) (beta_tilde - beta)` and of
//! its limits.
//!
//! Both the finite-sample law and the limit laws are instances of one
//! kernel. With `G` a positive definite Gram matrix (`X'X / n`, or `Q` in
//! the limit), `S` its Schur complement `G22 - G21 G11^{-1} G12`, and `gamma`
//! the scaled restricted coefficient (`sqrt(n) beta2`, or its limit), the
//! law is that of
//!
//! ```text
//! B gamma + C Z1 + D T(V),    V = Z2 + S^{1/2} gamma,
//! ```
//!
//! with `Z ~ N(0, sigma^2 I)` and `T` the radial shrink map. Its density is
//!
//! ```text
//! log f(t) = -k/2 ln(2 pi sigma^2) + 1/2 ln det G
//!            - |G11^{1/2} t1 + G11^{-1/2} G12 t2|^2 / (2 sigma^2)
//!            - ln det DT(T^{-1}(w)) - |T^{-1}(w) - S^{1/2} gamma|^2 / (2 sigma^2)
//! ```
//!
//! where `w = S^{1/2} (t2 + gamma)`. When `|gamma|` diverges the law is
//! `N(0, sigma^2 G^{-1})`.

mod numerics;

pub use numerics::{
    cdf, joint_box, l1_distance, marginal_cdf_table, transformed_density, CdfMethod, CdfValue, L1Estimate, MarginalCdf,
    MAX_QUADRATURE_DIM,
};

use crate::design::{GramBlocks, LimitDesign, PartitionedDesign};
use crate::error::{arg_err, Error, Result};
use crate::estimator::AveragingConfig;
use crate::normal::{logistic, LN_2PI};
use crate::sampling::{self, SampleBatch};
use crate::shrink::ShrinkMap;
use nalgebra::{DMatrix, DVector};

/// Limit of `sqrt(n) beta2(n)`: a finite vector, or divergence.
#[derive(Debug, Clone, PartialEq)]
pub enum Gamma {
    Finite(DVector<f64>),
    AtInfinity,
}

impl Gamma {
    pub fn finite(values: &[f64]) -> Self {
        Gamma::Finite(DVector::from_column_slice(values))
    }

    pub fn zero(k2: usize) -> Self {
        Gamma::Finite(DVector::zeros(k2))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Gamma::Finite(_))
    }
}

/// Box outside which a law has negligible mass.
///
/// Every law here is `N(0, sigma^2 G^{-1})` plus a perturbation of norm at
/// most `reach`, so `[-(c sd_i + reach), c sd_i + reach]` per axis leaves
/// mass below the Gaussian tail at `c` standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub sd: Vec<f64>,
    pub reach: f64,
}

impl Envelope {
    pub fn dim(&self) -> usize {
        self.sd.len()
    }

    pub fn bounds(&self, sds: f64) -> (Vec<f64>, Vec<f64>) {
        let hi: Vec<f64> = self.sd.iter().map(|s| sds * s + self.reach).collect();
        (hi.iter().map(|h| -h).collect(), hi)
    }

    /// Smallest envelope covering both.
    pub fn union(&self, other: &Envelope) -> Envelope {
        assert_eq!(self.dim(), other.dim());
        Envelope {
            sd: self.sd.iter().zip(&other.sd).map(|(a, b)| a.max(*b)).collect(),
            reach: self.reach.max(other.reach),
        }
    }
}

/// Box half-width multiplier used by the quadrature routines.
pub const ENVELOPE_SDS: f64 = 12.0;

/// A probability law on `R^k` with a log-density and an exact sampler.
pub trait Law: Send + Sync {
    fn dim(&self) -> usize;
    fn log_density(&self, t: &[f64]) -> Result<f64>;
    fn envelope(&self) -> Envelope;
    fn sample(&self, draws: usize, seed: u64) -> Result<SampleBatch>;

    fn density(&self, t: &[f64]) -> Result<f64> {
        Ok(self.log_density(t)?.exp())
    }
}

/// `sup_z z / (1 + exp(z^2 - ln a))`, the largest value of
/// `lambda * sqrt(alpha * fit_gap) / sigma`.
pub(crate) fn shrink_reach_factor(ln_a: f64) -> f64 {
    let phi = |z: f64| z * logistic(ln_a - z * z);
    let top = (ln_a.max(0.0) + 40.0).sqrt();
    let steps = 4000;
    let (mut best_z, mut best) = (0.0, 0.0);
    for i in 1..=steps {
        let z = top * i as f64 / steps as f64;
        let v = phi(z);
        if v > best {
            best = v;
            best_z = z;
        }
    }
    let h = top / steps as f64;
    let (mut lo, mut hi) = ((best_z - h).max(0.0), best_z + h);
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let m1 = hi - inv_phi * (hi - lo);
        let m2 = lo + inv_phi * (hi - lo);
        if phi(m1) < phi(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    best.max(phi(0.5 * (lo + hi)))
}

/// The shared density kernel for a Gram matrix `G` and scaled `gamma`.
#[derive(Debug, Clone)]
pub(crate) struct Kernel {
    k1: usize,
    k2: usize,
    sigma: f64,
    shrink: ShrinkMap,
    gram: DMatrix<f64>,
    g11_root: DMatrix<f64>,
    inv_root_g12: DMatrix<f64>,
    schur_root: DMatrix<f64>,
    gamma: Option<DVector<f64>>,
    s_gamma: Option<DVector<f64>>,
    log_norm: f64,
    envelope: Envelope,
}

impl Kernel {
    pub(crate) fn new(blocks: &GramBlocks, gamma: &Gamma, cfg: &AveragingConfig) -> Result<Self> {
        cfg.validate()?;
        let (k1, k2) = (blocks.k1, blocks.k2);
        let k = k1 + k2;
        let shrink = cfg.shrink_map(k2)?;
        let (gamma, s_gamma) = match gamma {
            Gamma::Finite(g) => {
                if g.len() != k2 {
                    return arg_err(format!("gamma has length {}, expected k2 = {k2}", g.len()));
                }
                if g.iter().any(|v| !v.is_finite()) {
                    return arg_err("gamma must be finite; use Gamma::AtInfinity for divergence");
                }
                (Some(g.clone()), Some(&blocks.schur_root * g))
            }
            Gamma::AtInfinity => (None, None),
        };
        let sigma = cfg.sigma;
        let log_norm = -(k as f64) * 0.5 * (LN_2PI + 2.0 * sigma.ln()) + 0.5 * blocks.log_det;
        let sd = blocks.inverse_diagonal().iter().map(|v| sigma * v.sqrt()).collect();
        let reach = if gamma.is_some() {
            sigma * shrink_reach_factor(shrink.ln_a()) / (cfg.alpha * blocks.lambda_min).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            k1,
            k2,
            sigma,
            shrink,
            gram: blocks.gram.clone(),
            g11_root: blocks.g11_root.clone(),
            inv_root_g12: blocks.inv_root_g12.clone(),
            schur_root: blocks.schur_root.clone(),
            gamma,
            s_gamma,
            log_norm,
            envelope: Envelope { sd, reach },
        })
    }

    pub(crate) fn dim(&self) -> usize {
        self.k1 + self.k2
    }

    pub(crate) fn envelope(&self) -> Envelope {
        self.envelope.clone()
    }

    pub(crate) fn log_density(&self, t: &[f64]) -> Result<f64> {
        let (k1, k2) = (self.k1, self.k2);
        if t.len() != k1 + k2 {
            return arg_err(format!("point has dimension {}, expected {}", t.len(), k1 + k2));
        }
        let s2 = 2.0 * self.sigma * self.sigma;
        let (gamma, s_gamma) = match (&self.gamma, &self.s_gamma) {
            (Some(g), Some(sg)) => (g, sg),
            _ => {
                let mut quad = 0.0;
                for i in 0..k1 + k2 {
                    for j in 0..k1 + k2 {
                        quad += t[i] * self.gram[(i, j)] * t[j];
                    }
                }
                return Ok(self.log_norm - quad / s2);
            }
        };
        let (t1, t2) = t.split_at(k1);
        let mut u2 = 0.0;
        for i in 0..k1 {
            let mut u = 0.0;
            for j in 0..k1 {
                u += self.g11_root[(i, j)] * t1[j];
            }
            for j in 0..k2 {
                u += self.inv_root_g12[(i, j)] * t2[j];
            }
            u2 += u * u;
        }
        let mut w = vec![0.0; k2];
        for (i, wi) in w.iter_mut().enumerate() {
            for j in 0..k2 {
                *wi += self.schur_root[(i, j)] * (t2[j] + gamma[j]);
            }
        }
        let q = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ratio = self.shrink.radial_ratio(q)?;
        let ldf = self.shrink.log_density_factor(q)?;
        let v2: f64 = w.iter().zip(s_gamma.iter()).map(|(wi, sg)| (ratio * wi - sg).powi(2)).sum();
        Ok(self.log_norm - u2 / s2 + ldf - v2 / s2)
    }
}

/// Exact law of `sqrt(n) (beta_tilde - beta)` for a fixed design.
#[derive(Debug, Clone)]
pub struct FiniteSampleLaw {
    design: PartitionedDesign,
    beta: DVector<f64>,
    cfg: AveragingConfig,
    kernel: Kernel,
}

impl FiniteSampleLaw {
    pub fn new(design: &PartitionedDesign, beta: &DVector<f64>, cfg: &AveragingConfig) -> Result<Self> {
        if beta.len() != design.k() {
            return arg_err(format!("beta has length {}, expected k = {}", beta.len(), design.k()));
        }
        let gamma = Gamma::Finite(beta.rows(design.k1(), design.k2()) * (design.n() as f64).sqrt());
        let kernel = Kernel::new(design.scaled_blocks(), &gamma, cfg)?;
        Ok(Self { design: design.clone(), beta: beta.clone(), cfg: *cfg, kernel })
    }

    pub fn design(&self) -> &PartitionedDesign {
        &self.design
    }
    pub fn beta(&self) -> &DVector<f64> {
        &self.beta
    }
    pub fn config(&self) -> &AveragingConfig {
        &self.cfg
    }
    pub fn shrink(&self) -> ShrinkMap {
        self.kernel.shrink
    }

    /// `sqrt(n) beta2`.
    pub fn scaled_gamma(&self) -> DVector<f64> {
        self.kernel.gamma.clone().expect("finite-sample gamma is finite")
    }
}

impl Law for FiniteSampleLaw {
    fn dim(&self) -> usize {
        self.kernel.dim()
    }
    fn log_density(&self, t: &[f64]) -> Result<f64> {
        self.kernel.log_density(t)
    }
    fn envelope(&self) -> Envelope {
        self.kernel.envelope()
    }
    fn sample(&self, draws: usize, seed: u64) -> Result<SampleBatch> {
        sampling::sample_root_rep(&self.design, &self.beta, &self.cfg, draws, seed)
    }
}

/// Limit law of `sqrt(n) (beta_tilde - beta(n))` along `sqrt(n) beta2(n) -> gamma`.
#[derive(Debug, Clone)]
pub struct AsymptoticLaw {
    limit: LimitDesign,
    gamma: Gamma,
    cfg: AveragingConfig,
    kernel: Kernel,
}

impl AsymptoticLaw {
    pub fn new(limit: &LimitDesign, gamma: Gamma, sigma: f64, alpha: f64) -> Result<Self> {
        let cfg = AveragingConfig::new(alpha, sigma)?;
        let kernel = Kernel::new(&limit.blocks, &gamma, &cfg)?;
        Ok(Self { limit: limit.clone(), gamma, cfg, kernel })
    }

    pub fn limit(&self) -> &LimitDesign {
        &self.limit
    }
    pub fn gamma(&self) -> &Gamma {
        &self.gamma
    }
    pub fn sigma(&self) -> f64 {
        self.cfg.sigma
    }
    pub fn alpha(&self) -> f64 {
        self.cfg.alpha
    }
}

impl Law for AsymptoticLaw {
    fn dim(&self) -> usize {
        self.kernel.dim()
    }
    fn log_density(&self, t: &[f64]) -> Result<f64> {
        self.kernel.log_density(t)
    }
    fn envelope(&self) -> Envelope {
        self.kernel.envelope()
    }
    fn sample(&self, draws: usize, seed: u64) -> Result<SampleBatch> {
        sampling::sample_asymptotic(&self.limit, &self.gamma, self.cfg.sigma, self.cfg.alpha, draws, seed)
    }
}

/// `ln f` at a point given as a vector.
pub fn log_density_at<L: Law + ?Sized>(law: &L, t: &DVector<f64>) -> Result<f64> {
    law.log_density(t.as_slice())
}

/// Evaluates `law.log_density` and maps failures to `NaN`, for integrands.
pub(crate) fn density_or_nan<L: Law + ?Sized>(law: &L, t: &[f64]) -> f64 {
    law.log_density(t).map(f64::exp).unwrap_or(f64::NAN)
}

pub(crate) fn check_finite(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Numeric(format!("{what} produced a non-finite value")))
    }
}
