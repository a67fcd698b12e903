//! Sample-size ladders: L1 convergence of the exact law to its limit,
//! the regime a parameter path falls into, the uniform tail bound, and the
//! approach of the finite-`gamma` limit to the normal limit.

use crate::design::{DesignRule, LimitDesign};
use crate::error::{arg_err, Error, Result};
use crate::estimator::AveragingConfig;
use crate::laws::{joint_box, l1_distance, AsymptoticLaw, FiniteSampleLaw, Gamma};
use crate::sampling::{sample_data_level, stream_id};
use crate::table::ResultTable;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// A rule giving `beta(n)` for every sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathRule {
    /// `beta(n) = beta`.
    Fixed { beta: Vec<f64> },
    /// `beta(n) = beta + delta / sqrt(n)`.
    Local { beta: Vec<f64>, delta: Vec<f64> },
    /// `beta(n) = (beta1, scale * n^{-exponent})` with `0 <= exponent < 1/2`.
    Diverging { beta1: Vec<f64>, scale: Vec<f64>, exponent: f64 },
    /// `beta + delta_even / sqrt(n)` for even `n`, `beta + delta_odd / sqrt(n)` for odd `n`.
    Alternating { beta: Vec<f64>, delta_even: Vec<f64>, delta_odd: Vec<f64> },
}

/// Limit behaviour of `sqrt(n) beta2(n)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Regime {
    Diverging,
    FiniteGamma(DVector<f64>),
}

impl Regime {
    pub fn gamma(&self) -> Gamma {
        match self {
            Regime::Diverging => Gamma::AtInfinity,
            Regime::FiniteGamma(g) => Gamma::Finite(g.clone()),
        }
    }
}

fn same_len(a: &[f64], b: &[f64], what: &str) -> Result<()> {
    if a.len() != b.len() {
        return arg_err(format!("{what}: lengths {} and {} differ", a.len(), b.len()));
    }
    Ok(())
}

impl PathRule {
    pub fn k(&self) -> usize {
        match self {
            PathRule::Fixed { beta } | PathRule::Local { beta, .. } | PathRule::Alternating { beta, .. } => beta.len(),
            PathRule::Diverging { beta1, scale, .. } => beta1.len() + scale.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        let ok = match self {
            PathRule::Fixed { beta } => all_finite(beta),
            PathRule::Local { beta, delta } => {
                same_len(beta, delta, "beta and delta")?;
                all_finite(beta) && all_finite(delta)
            }
            PathRule::Diverging { beta1, scale, exponent } => {
                if !(0.0..0.5).contains(exponent) {
                    return arg_err(format!("diverging exponent must lie in [0, 0.5), got {exponent}"));
                }
                all_finite(beta1) && all_finite(scale)
            }
            PathRule::Alternating { beta, delta_even, delta_odd } => {
                same_len(beta, delta_even, "beta and delta_even")?;
                same_len(beta, delta_odd, "beta and delta_odd")?;
                all_finite(beta) && all_finite(delta_even) && all_finite(delta_odd)
            }
        };
        if !ok {
            return arg_err("path parameters must be finite");
        }
        Ok(())
    }

    pub fn beta_at(&self, n: usize) -> DVector<f64> {
        let root_n = (n as f64).sqrt();
        match self {
            PathRule::Fixed { beta } => DVector::from_column_slice(beta),
            PathRule::Local { beta, delta } => DVector::from_iterator(beta.len(), beta.iter().zip(delta).map(|(b, d)| b + d / root_n)),
            PathRule::Diverging { beta1, scale, exponent } => {
                let f = (n as f64).powf(-exponent);
                DVector::from_iterator(beta1.len() + scale.len(), beta1.iter().copied().chain(scale.iter().map(|s| s * f)))
            }
            PathRule::Alternating { beta, delta_even, delta_odd } => {
                let d = if n % 2 == 0 { delta_even } else { delta_odd };
                DVector::from_iterator(beta.len(), beta.iter().zip(d).map(|(b, d)| b + d / root_n))
            }
        }
    }

    /// `sqrt(n) beta2(n)` for a split after `k1` coordinates.
    pub fn scaled_gamma_at(&self, n: usize, k1: usize) -> DVector<f64> {
        let b = self.beta_at(n);
        b.rows(k1, b.len() - k1) * (n as f64).sqrt()
    }
}

/// Classifies a path by the limit of `sqrt(n) beta2(n)`, read off the
/// rule's parameters. Paths without a limit are rejected.
pub fn regime_of(path: &PathRule, k1: usize) -> Result<Regime> {
    path.validate()?;
    let k = path.k();
    if k1 == 0 || k1 >= k {
        return arg_err(format!("need 1 <= k1 < k = {k}, got {k1}"));
    }
    let tail = |v: &[f64]| DVector::from_column_slice(&v[k1..]);
    let zero = |v: &DVector<f64>| v.iter().all(|&x| x == 0.0);
    Ok(match path {
        PathRule::Fixed { beta } => {
            if zero(&tail(beta)) {
                Regime::FiniteGamma(DVector::zeros(k - k1))
            } else {
                Regime::Diverging
            }
        }
        PathRule::Local { beta, delta } => {
            if zero(&tail(beta)) {
                Regime::FiniteGamma(tail(delta))
            } else {
                Regime::Diverging
            }
        }
        PathRule::Diverging { beta1, scale, .. } => {
            if beta1.len() != k1 {
                return arg_err(format!("beta1 has length {}, expected k1 = {k1}", beta1.len()));
            }
            let s = DVector::from_column_slice(scale);
            if zero(&s) {
                Regime::FiniteGamma(s)
            } else {
                Regime::Diverging
            }
        }
        PathRule::Alternating { beta, delta_even, delta_odd } => {
            if !zero(&tail(beta)) {
                Regime::Diverging
            } else if tail(delta_even) == tail(delta_odd) {
                Regime::FiniteGamma(tail(delta_even))
            } else {
                return Err(Error::Unsupported(
                    "sqrt(n) beta2(n) alternates between two limits; split the ladder into even and odd subsequences".into(),
                ));
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderSpec {
    pub n_ladder: Vec<usize>,
    pub path: PathRule,
    pub design_rule: DesignRule,
}

impl LadderSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_ladder.is_empty() {
            return arg_err("ladder is empty");
        }
        if self.n_ladder.windows(2).any(|w| w[0] >= w[1]) {
            return arg_err(format!("ladder must be strictly increasing, got {:?}", self.n_ladder));
        }
        self.path.validate()?;
        let k = self.design_rule.k()?;
        if self.path.k() != k {
            return arg_err(format!("path has dimension {}, design has k = {k}", self.path.k()));
        }
        if self.n_ladder[0] < k {
            return arg_err(format!("every n must be at least k = {k}"));
        }
        Ok(())
    }
}

/// Default number of composite Gauss-Legendre cells per axis for L1 ladders.
pub const DEFAULT_L1_CELLS: usize = 150;

/// `L1(f_n, f_inf)` along the ladder, with the limit chosen by [`regime_of`].
/// Without an explicit box the union of both envelopes is used per rung.
pub fn l1_ladder(spec: &LadderSpec, sigma: f64, alpha: f64, box_bounds: Option<(&[f64], &[f64])>, cells: usize) -> Result<ResultTable> {
    spec.validate()?;
    let cfg = AveragingConfig::new(alpha, sigma)?;
    let limit = spec.design_rule.limit()?;
    if limit.k() != 2 {
        return arg_err("L1 ladders are computed for k = 2");
    }
    let regime = regime_of(&spec.path, limit.k1())?;
    let limit_law = AsymptoticLaw::new(&limit, regime.gamma(), sigma, alpha)?;
    let mut table = ResultTable::new(&["n", "scaled_gamma_norm", "l1", "tail_bound"]);
    table.set_provenance("limit", if regime == Regime::Diverging { "normal".to_string() } else { format!("gamma={:?}", regime.gamma()) });
    for &n in &spec.n_ladder {
        let design = spec.design_rule.build(n)?;
        let law = FiniteSampleLaw::new(&design, &spec.path.beta_at(n), &cfg)?;
        let (lo, hi) = match box_bounds {
            Some((lo, hi)) => (lo.to_vec(), hi.to_vec()),
            None => joint_box(&law, &limit_law),
        };
        let d = l1_distance(&law, &limit_law, &lo, &hi, cells)?;
        table.push(vec![n.into(), law.scaled_gamma().norm().into(), d.value.into(), d.tail_bound.into()])?;
    }
    Ok(table)
}

/// True when every step decreases or rises by at most `slack`.
pub fn is_non_increasing_within(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + slack)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// One row per `(n, beta, M)`.
    pub cells: ResultTable,
    /// One row per `(n, M)`: the supremum over the beta grid.
    pub sup: ResultTable,
    /// Draws that broke the deterministic shrink bound (must be zero).
    pub bound_violations: usize,
    pub total_draws: usize,
}

const SWEEP_TAG: u64 = 29;

/// Empirical `P(sqrt(n) |beta_tilde - beta| >= M)` from data-level draws.
#[allow(clippy::too_many_arguments)]
pub fn consistency_sweep(
    design_rule: &DesignRule,
    sigma: f64,
    alpha: f64,
    m_grid: &[f64],
    beta_grid: &[Vec<f64>],
    n_ladder: &[usize],
    draws: usize,
    seed: u64,
) -> Result<SweepReport> {
    let cfg = AveragingConfig::new(alpha, sigma)?;
    if m_grid.is_empty() || beta_grid.is_empty() || n_ladder.is_empty() {
        return arg_err("M grid, beta grid and ladder must be non-empty");
    }
    if m_grid.iter().any(|m| !(*m >= 0.0)) {
        return arg_err("M values must be non-negative");
    }
    let k = design_rule.k()?;
    let k1 = design_rule.k1();
    let mut cells = ResultTable::new(&["n", "beta_index", "beta2_norm", "m", "tail_prob", "mc_se"]);
    let mut sup = ResultTable::new(&["n", "m", "sup_tail_prob"]);
    let mut violations = 0;
    let mut total = 0;
    for (ni, &n) in n_ladder.iter().enumerate() {
        let design = design_rule.build(n)?;
        let mut worst = vec![0.0f64; m_grid.len()];
        for (bi, b) in beta_grid.iter().enumerate() {
            if b.len() != k {
                return arg_err(format!("beta grid entry {bi} has length {}, expected {k}", b.len()));
            }
            let beta = DVector::from_column_slice(b);
            let batch = sample_data_level(&design, &beta, &cfg, draws, stream_id(&[SWEEP_TAG, seed, ni as u64, bi as u64]))?;
            violations += batch.bound_violations().unwrap_or(0);
            total += batch.len();
            let norms: Vec<f64> = batch.rows().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
            let b2 = beta.rows(k1, k - k1).norm();
            for (mi, &m) in m_grid.iter().enumerate() {
                let p = norms.iter().filter(|&&v| v >= m).count() as f64 / draws as f64;
                worst[mi] = worst[mi].max(p);
                cells.push(vec![n.into(), bi.into(), b2.into(), m.into(), p.into(), (p * (1.0 - p) / draws as f64).sqrt().into()])?;
            }
        }
        for (mi, &m) in m_grid.iter().enumerate() {
            sup.push(vec![n.into(), m.into(), worst[mi].into()])?;
        }
    }
    Ok(SweepReport { cells, sup, bound_violations: violations, total_draws: total })
}

/// `L1(f_{inf,gamma}, f_{inf,inf})` along a list of `gamma` vectors.
pub fn gamma_degeneration(limit: &LimitDesign, sigma: f64, alpha: f64, gammas: &[DVector<f64>], box_bounds: Option<(&[f64], &[f64])>, cells: usize) -> Result<ResultTable> {
    if limit.k() != 2 {
        return arg_err("gamma degeneration is computed for k = 2");
    }
    let normal = AsymptoticLaw::new(limit, Gamma::AtInfinity, sigma, alpha)?;
    let mut table = ResultTable::new(&["gamma_norm", "l1", "tail_bound"]);
    for g in gammas {
        let law = AsymptoticLaw::new(limit, Gamma::Finite(g.clone()), sigma, alpha)?;
        let (lo, hi) = match box_bounds {
            Some((lo, hi)) => (lo.to_vec(), hi.to_vec()),
            None => joint_box(&law, &normal),
        };
        let d = l1_distance(&law, &normal, &lo, &hi, cells)?;
        table.push(vec![g.norm().into(), d.value.into(), d.tail_bound.into()])?;
    }
    Ok(table)
}
