//! A CDF estimator that is consistent at every fixed parameter, and the
//! experiments showing that no such estimator is uniformly consistent over
//! shrinking neighbourhoods of the restricted model.
//!
//! The estimator selects a model with a pre-test whose critical value
//! diverges slower than `sqrt(n)`. It then plugs `X'X / n` into either the
//! normal limit (unrestricted model selected) or the `gamma = 0` limit
//! (restricted model selected).

use crate::design::{DesignRule, LimitDesign, PartitionedDesign};
use crate::error::{arg_err, Error, Result};
use crate::estimator::{fit_gap, AveragingConfig};
use crate::laws::{cdf, AsymptoticLaw, CdfMethod, FiniteSampleLaw, Gamma, Law};
use crate::normal::std_normal_cdf;
use crate::sampling::{draw_rng, normals, stream_id};
use crate::table::{ResultTable, Value};
use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Test statistic used to decide between the two models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectorRule {
    /// `beta2_hat' S2 beta2_hat / sigma^2 > c_n^2`, any `k2`.
    Wald,
    /// `|beta2_hat| / (sigma sqrt((X'X)^{-1}_{22})) > c_n`, `k2 = 1` only.
    TStatistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSelector {
    /// `c_n = n^exponent`, with the exponent in `(0, 1/2)`.
    pub critical_value_exponent: f64,
    pub rule: SelectorRule,
}

impl Default for ModelSelector {
    fn default() -> Self {
        Self { critical_value_exponent: 0.25, rule: SelectorRule::Wald }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SelectedModel {
    Restricted,
    Unrestricted,
}

impl SelectedModel {
    pub fn name(self) -> &'static str {
        match self {
            SelectedModel::Restricted => "restricted",
            SelectedModel::Unrestricted => "unrestricted",
        }
    }
}

impl ModelSelector {
    pub fn new(critical_value_exponent: f64, rule: SelectorRule) -> Result<Self> {
        let s = Self { critical_value_exponent, rule };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let e = self.critical_value_exponent;
        if !(e > 0.0 && e < 0.5) {
            return arg_err(format!("critical value exponent must lie in (0, 0.5), got {e}"));
        }
        Ok(())
    }

    pub fn critical_value(&self, n: usize) -> f64 {
        (n as f64).powf(self.critical_value_exponent)
    }

    /// The test statistic on the scale of `c_n`.
    pub fn statistic(&self, design: &PartitionedDesign, y: &DVector<f64>, sigma: f64) -> Result<f64> {
        match self.rule {
            SelectorRule::Wald => Ok(fit_gap(design, y)? / (sigma * sigma)),
            SelectorRule::TStatistic => {
                if design.k2() != 1 {
                    return arg_err("the t-statistic selector needs k2 = 1");
                }
                let bu = design.solve_gram(&(design.x().transpose() * y));
                let var = design.raw_blocks().inverse_diagonal()[design.k() - 1];
                Ok(bu[design.k() - 1].abs() / (sigma * var.sqrt()))
            }
        }
    }

    /// Threshold the statistic is compared with.
    pub fn threshold(&self, n: usize) -> f64 {
        let c = self.critical_value(n);
        match self.rule {
            SelectorRule::Wald => c * c,
            SelectorRule::TStatistic => c,
        }
    }
}

pub fn select_model(design: &PartitionedDesign, y: &DVector<f64>, cfg: &AveragingConfig, selector: &ModelSelector) -> Result<SelectedModel> {
    selector.validate()?;
    cfg.validate()?;
    if y.len() != design.n() {
        return arg_err(format!("response has length {}, expected n = {}", y.len(), design.n()));
    }
    let stat = selector.statistic(design, y, cfg.sigma)?;
    Ok(if stat > selector.threshold(design.n()) { SelectedModel::Unrestricted } else { SelectedModel::Restricted })
}

/// The two plug-in laws the estimator chooses between for one design.
#[derive(Debug, Clone)]
pub struct CheckCandidates {
    restricted: AsymptoticLaw,
    unrestricted: AsymptoticLaw,
}

impl CheckCandidates {
    pub fn new(design: &PartitionedDesign, cfg: &AveragingConfig) -> Result<Self> {
        let limit = design.empirical_limit();
        Ok(Self {
            restricted: AsymptoticLaw::new(&limit, Gamma::zero(design.k2()), cfg.sigma, cfg.alpha)?,
            unrestricted: AsymptoticLaw::new(&limit, Gamma::AtInfinity, cfg.sigma, cfg.alpha)?,
        })
    }

    pub fn law(&self, model: SelectedModel) -> &AsymptoticLaw {
        match model {
            SelectedModel::Restricted => &self.restricted,
            SelectedModel::Unrestricted => &self.unrestricted,
        }
    }
}

/// The estimated law for one data set.
#[derive(Debug, Clone)]
pub struct CheckEstimate {
    selected: SelectedModel,
    law: AsymptoticLaw,
}

impl CheckEstimate {
    pub fn selected_model(&self) -> SelectedModel {
        self.selected
    }

    /// `N(0, sigma^2 (X'X/n)^{-1})` after selecting the unrestricted model,
    /// the `gamma = 0` limit law at `Q = X'X/n` otherwise.
    pub fn law(&self) -> &AsymptoticLaw {
        &self.law
    }

    pub fn density(&self, t: &[f64]) -> Result<f64> {
        self.law.density(t)
    }

    pub fn cdf(&self, t: &[f64]) -> Result<f64> {
        asymptotic_cdf_at(self.law.limit(), self.law.gamma(), self.law.sigma(), self.law.alpha(), t)
    }
}

pub fn check_estimator(design: &PartitionedDesign, y: &DVector<f64>, cfg: &AveragingConfig, selector: &ModelSelector) -> Result<CheckEstimate> {
    let selected = select_model(design, y, cfg, selector)?;
    let law = CheckCandidates::new(design, cfg)?.law(selected).clone();
    Ok(CheckEstimate { selected, law })
}

/// True when the limit CDF factorizes into independent normal coordinates
/// for the first block and a scalar second block.
fn has_product_form(limit: &LimitDesign) -> bool {
    if limit.k2() != 1 || !limit.is_block_diagonal(1e-12) {
        return false;
    }
    let q11 = limit.q11();
    let off = (0..q11.nrows()).flat_map(|i| (0..q11.ncols()).filter(move |&j| j != i).map(move |j| (i, j)));
    off.map(|(i, j)| q11[(i, j)].abs()).fold(0.0, f64::max) <= 1e-12 * q11.amax()
}

/// `P(T(V) <= w)` for scalar `V ~ N(mean, sigma^2)` and the odd shrink map.
fn shrunk_normal_cdf(shrink: &crate::shrink::ShrinkMap, mean: f64, sigma: f64, w: f64) -> Result<f64> {
    if w.is_infinite() {
        return Ok(if w > 0.0 { 1.0 } else { 0.0 });
    }
    Ok(std_normal_cdf((shrink.g_signed(w)? - mean) / sigma))
}

/// `F_{inf,gamma}(t)`, the CDF of the limit law.
///
/// For `k2 = 1`, block-diagonal `Q` and diagonal `Q11` the CDF is a product
/// of normal CDFs for the first block and
/// `Phi((g(sqrt(q22) (t2 + gamma)) - sqrt(q22) gamma) / sigma)` for the
/// second, with `g` extended oddly. Otherwise it falls back to quadrature.
pub fn asymptotic_cdf_at(limit: &LimitDesign, gamma: &Gamma, sigma: f64, alpha: f64, t: &[f64]) -> Result<f64> {
    let law = AsymptoticLaw::new(limit, gamma.clone(), sigma, alpha)?;
    if t.len() != limit.k() {
        return arg_err(format!("point has dimension {}, expected {}", t.len(), limit.k()));
    }
    if t.iter().any(|v| v.is_nan()) {
        return arg_err("cdf point contains NaN");
    }
    if !has_product_form(limit) {
        return Ok(cdf(&law, t, &CdfMethod::default())?.value);
    }
    let k1 = limit.k1();
    let q = limit.q();
    let mut p: f64 = (0..k1).map(|i| std_normal_cdf(q[(i, i)].sqrt() * t[i] / sigma)).product();
    let r22 = q[(k1, k1)].sqrt();
    let t2 = t[k1];
    p *= match gamma {
        Gamma::AtInfinity => std_normal_cdf(r22 * t2 / sigma),
        Gamma::Finite(g) => {
            let shrink = crate::shrink::ShrinkMap::for_averaging(alpha, sigma, 1)?;
            shrunk_normal_cdf(&shrink, r22 * g[0], sigma, r22 * (t2 + g[0]))?
        }
    };
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oscillation {
    /// Half of `max - min` of `F_{inf,gamma}(t)` over the grid.
    pub delta_star_half: f64,
    pub gamma_at_min: f64,
    pub gamma_at_max: f64,
    pub min: f64,
    pub max: f64,
}

/// Half the range of `gamma -> F_{inf,gamma}(t)` over a scalar grid (`k2 = 1`).
pub fn oscillation(limit: &LimitDesign, sigma: f64, alpha: f64, t: &[f64], gamma_grid: &[f64]) -> Result<Oscillation> {
    if limit.k2() != 1 {
        return arg_err("oscillation is computed over scalar gamma (k2 = 1)");
    }
    if gamma_grid.is_empty() || !gamma_grid.contains(&0.0) {
        return arg_err("gamma grid must be non-empty and contain 0");
    }
    let values: Vec<f64> = gamma_grid
        .par_iter()
        .map(|&g| asymptotic_cdf_at(limit, &Gamma::finite(&[g]), sigma, alpha, t))
        .collect::<Result<_>>()?;
    let (mut imin, mut imax) = (0, 0);
    for (i, v) in values.iter().enumerate() {
        if *v < values[imin] {
            imin = i;
        }
        if *v > values[imax] {
            imax = i;
        }
    }
    Ok(Oscillation {
        delta_star_half: 0.5 * (values[imax] - values[imin]),
        gamma_at_min: gamma_grid[imin],
        gamma_at_max: gamma_grid[imax],
        min: values[imin],
        max: values[imax],
    })
}

/// Equispaced grid on `[-radius, radius]` with an odd number of points.
pub fn symmetric_grid(radius: f64, half_points: usize) -> Vec<f64> {
    let h = half_points as i64;
    (-h..=h).map(|j| if j == 0 { 0.0 } else { radius * j as f64 / h as f64 }).collect()
}

/// Default radii scanned when choosing `rho0`.
pub const DEFAULT_RADII: [f64; 8] = [0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0];
/// Smallest oscillation (max - min) accepted when choosing `rho0`.
pub const MIN_OSCILLATION: f64 = 0.05;
/// `delta0` as a fraction of the half-oscillation at `rho0`.
pub const DELTA_FRACTION: f64 = 0.4;
const RADIUS_GRID_HALF_POINTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpossibilityConstants {
    pub rho0: f64,
    pub delta0: f64,
    pub delta_star_half: f64,
}

/// `rho0` is the smallest radius whose oscillation reaches
/// [`MIN_OSCILLATION`]; `delta0` is [`DELTA_FRACTION`] of the
/// half-oscillation over `[-rho0, rho0]`.
pub fn choose_constants(limit: &LimitDesign, sigma: f64, alpha: f64, t: &[f64], radii: &[f64]) -> Result<ImpossibilityConstants> {
    for &r in radii {
        if !(r > 0.0) {
            return arg_err(format!("radii must be positive, got {r}"));
        }
        let osc = oscillation(limit, sigma, alpha, t, &symmetric_grid(r, RADIUS_GRID_HALF_POINTS))?;
        if 2.0 * osc.delta_star_half >= MIN_OSCILLATION {
            return Ok(ImpossibilityConstants { rho0: r, delta0: DELTA_FRACTION * osc.delta_star_half, delta_star_half: osc.delta_star_half });
        }
    }
    Err(Error::Domain(format!("oscillation stays below {MIN_OSCILLATION} for every radius in {radii:?}")))
}

/// Description of a non-uniformity run.
#[derive(Debug, Clone, PartialEq)]
pub struct NonUniformitySpec {
    pub design_rule: DesignRule,
    /// Centre of the ball, in the restricted model (`beta2 = 0`).
    pub beta: Vec<f64>,
    pub sigma: f64,
    pub alpha: f64,
    pub t: Vec<f64>,
    pub rho0: f64,
    pub delta0: f64,
    pub n_ladder: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    pub selector: ModelSelector,
    /// Grid points on each side of the centre.
    pub half_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonUniformityReport {
    /// One row per `(n, theta2)`.
    pub cells: ResultTable,
    /// One row per `n`: the centre and the worst grid point.
    pub summary: ResultTable,
}

impl NonUniformityReport {
    pub fn summary_column(&self, name: &str) -> Vec<f64> {
        self.summary.column_f64(name).expect("summary column exists")
    }
}

const NON_UNIFORMITY_TAG: u64 = 17;

/// Estimates `P(|F_check(t) - F_{n,theta}(t)| > delta0)` on a grid of
/// `theta2` strictly inside the ball `|theta - beta| < rho0 / sqrt(n)`,
/// with `theta1 = beta1`. True CDF values come from quadrature of the
/// exact density.
pub fn non_uniformity_experiment(spec: &NonUniformitySpec) -> Result<NonUniformityReport> {
    let cfg = AveragingConfig::new(spec.alpha, spec.sigma)?;
    spec.selector.validate()?;
    let limit = spec.design_rule.limit()?;
    if limit.k2() != 1 || !limit.is_block_diagonal(1e-12) {
        return arg_err("the experiment needs k2 = 1 and a block-diagonal limit Q");
    }
    let k = limit.k();
    if spec.beta.len() != k || spec.t.len() != k {
        return arg_err(format!("beta and t need length k = {k}"));
    }
    if spec.beta[k - 1] != 0.0 {
        return arg_err("the centre beta must lie in the restricted model (beta2 = 0)");
    }
    if spec.replications == 0 || spec.n_ladder.is_empty() || spec.half_points == 0 {
        return arg_err("need replications, a ladder and a grid");
    }
    if !(spec.rho0 > 0.0) || !(spec.delta0 > 0.0) {
        return arg_err("rho0 and delta0 must be positive");
    }
    let osc = oscillation(&limit, spec.sigma, spec.alpha, &spec.t, &symmetric_grid(spec.rho0, RADIUS_GRID_HALF_POINTS))?;
    if spec.delta0 >= osc.delta_star_half {
        return arg_err(format!(
            "delta0 = {} must be below half the oscillation over the ball ({})",
            spec.delta0, osc.delta_star_half
        ));
    }

    let cols = ["n", "theta2", "t1", "t2", "delta0", "rho0", "true_cdf", "error_prob", "mc_se"];
    let mut cells = ResultTable::new(&cols);
    let mut summary = ResultTable::new(&["n", "center_error_prob", "center_mc_se", "sup_error_prob", "sup_mc_se", "worst_theta2"]);
    let h = spec.half_points as i64;
    let reps = spec.replications as f64;
    for (ni, &n) in spec.n_ladder.iter().enumerate() {
        let design = spec.design_rule.build(n)?;
        let candidates = CheckCandidates::new(&design, &cfg)?;
        let f_check = |m: SelectedModel| {
            let law = candidates.law(m);
            asymptotic_cdf_at(law.limit(), law.gamma(), spec.sigma, spec.alpha, &spec.t)
        };
        let f_r = f_check(SelectedModel::Restricted)?;
        let f_u = f_check(SelectedModel::Unrestricted)?;
        let radius = spec.rho0 / (n as f64).sqrt();
        let mut center = (0.0, 0.0);
        let mut worst = (f64::NEG_INFINITY, 0.0, 0.0);
        for (gi, j) in (-h..=h).enumerate() {
            // strictly inside the open ball
            let theta2 = radius * j as f64 / (h + 1) as f64;
            let mut theta = DVector::from_column_slice(&spec.beta);
            theta[k - 1] = theta2;
            let truth = cdf(&FiniteSampleLaw::new(&design, &theta, &cfg)?, &spec.t, &CdfMethod::default())?.value;
            let mean = design.x() * &theta;
            let stream = stream_id(&[NON_UNIFORMITY_TAG, ni as u64, gi as u64]);
            let errors: usize = (0..spec.replications)
                .into_par_iter()
                .map(|r| -> Result<usize> {
                    let mut rng = draw_rng(spec.seed, stream, r as u64);
                    let y = &mean + normals(&mut rng, spec.sigma, n);
                    let est = match select_model(&design, &y, &cfg, &spec.selector)? {
                        SelectedModel::Restricted => f_r,
                        SelectedModel::Unrestricted => f_u,
                    };
                    Ok(usize::from((est - truth).abs() > spec.delta0))
                })
                .try_reduce(|| 0, |a, b| Ok(a + b))?;
            let p = errors as f64 / reps;
            let se = (p * (1.0 - p) / reps).sqrt();
            cells.push(vec![
                n.into(),
                theta2.into(),
                spec.t[0].into(),
                spec.t[k - 1].into(),
                spec.delta0.into(),
                spec.rho0.into(),
                truth.into(),
                p.into(),
                se.into(),
            ])?;
            if j == 0 {
                center = (p, se);
            }
            if p > worst.0 {
                worst = (p, se, theta2);
            }
        }
        summary.push(vec![
            n.into(),
            center.0.into(),
            center.1.into(),
            worst.0.into(),
            worst.1.into(),
            Value::Float(worst.2),
        ])?;
    }
    Ok(NonUniformityReport { cells, summary })
}

/// Monte Carlo estimate of `P(sup_t |F_check(t) - F_{n,beta}(t)| > threshold)`
/// with the supremum taken over `t_grid`, one row per `n`.
#[allow(clippy::too_many_arguments)]
pub fn sup_error_probability(
    design_rule: &DesignRule,
    beta: &[f64],
    cfg: &AveragingConfig,
    selector: &ModelSelector,
    n_ladder: &[usize],
    t_grid: &[Vec<f64>],
    threshold: f64,
    replications: usize,
    seed: u64,
) -> Result<ResultTable> {
    cfg.validate()?;
    if replications == 0 || t_grid.is_empty() {
        return arg_err("need replications and a non-empty t grid");
    }
    let mut table = ResultTable::new(&["n", "sup_error_prob", "mc_se"]);
    let beta_v = DVector::from_column_slice(beta);
    for (ni, &n) in n_ladder.iter().enumerate() {
        let design = design_rule.build(n)?;
        if beta.len() != design.k() {
            return arg_err("beta length does not match the design");
        }
        let law = FiniteSampleLaw::new(&design, &beta_v, cfg)?;
        let limit = design.empirical_limit();
        let gamma = Gamma::Finite(law.scaled_gamma());
        let truth: Vec<f64> = t_grid
            .iter()
            .map(|t| asymptotic_cdf_at(&limit, &gamma, cfg.sigma, cfg.alpha, t))
            .collect::<Result<_>>()?;
        let candidates = CheckCandidates::new(&design, cfg)?;
        let sup_err = |m: SelectedModel| -> Result<f64> {
            let l = candidates.law(m);
            let mut worst: f64 = 0.0;
            for (t, f) in t_grid.iter().zip(&truth) {
                worst = worst.max((asymptotic_cdf_at(l.limit(), l.gamma(), cfg.sigma, cfg.alpha, t)? - f).abs());
            }
            Ok(worst)
        };
        let err_r = sup_err(SelectedModel::Restricted)?;
        let err_u = sup_err(SelectedModel::Unrestricted)?;
        let mean = design.x() * &beta_v;
        let stream = stream_id(&[NON_UNIFORMITY_TAG + 1, ni as u64]);
        let hits: usize = (0..replications)
            .into_par_iter()
            .map(|r| -> Result<usize> {
                let mut rng = draw_rng(seed, stream, r as u64);
                let y = &mean + normals(&mut rng, cfg.sigma, n);
                let e = match select_model(&design, &y, cfg, selector)? {
                    SelectedModel::Restricted => err_r,
                    SelectedModel::Unrestricted => err_u,
                };
                Ok(usize::from(e > threshold))
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))?;
        let p = hits as f64 / replications as f64;
        table.push(vec![n.into(), p.into(), (p * (1.0 - p) / replications as f64).sqrt().into()])?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests;
