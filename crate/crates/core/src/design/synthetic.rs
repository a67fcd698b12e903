use super::{sym_sqrt, LimitDesign, PartitionedDesign};
use crate::error::{arg_err, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// The first `k` orthonormal DCT-II basis vectors of length `n`, as columns.
pub fn cosine_basis(n: usize, k: usize) -> DMatrix<f64> {
    let nf = n as f64;
    DMatrix::from_fn(n, k, |i, j| {
        if j == 0 {
            1.0 / nf.sqrt()
        } else {
            (2.0 / nf).sqrt() * (PI * j as f64 * (2.0 * i as f64 + 1.0) / (2.0 * nf)).cos()
        }
    })
}

/// Rules producing a design `X(n)` for every sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignRule {
    /// `X'X = n Q` exactly, built as `U (nQ)^{1/2}` with orthonormal `U`.
    ExactGram { q: Vec<Vec<f64>>, k1: usize },
    /// `X'X / n = Q + P n^{-rate}`, converging to `Q` at the given rate.
    Perturbed { q: Vec<Vec<f64>>, k1: usize, perturbation: Vec<Vec<f64>>, rate: f64 },
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let r = rows.len();
    if r == 0 {
        return arg_err("matrix has no rows");
    }
    let c = rows[0].len();
    if rows.iter().any(|row| row.len() != c) {
        return arg_err("matrix rows have unequal lengths");
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl DesignRule {
    pub fn exact(q: &DMatrix<f64>, k1: usize) -> Self {
        DesignRule::ExactGram { q: rows_of(q), k1 }
    }

    pub fn k1(&self) -> usize {
        match self {
            DesignRule::ExactGram { k1, .. } | DesignRule::Perturbed { k1, .. } => *k1,
        }
    }

    pub fn q(&self) -> Result<DMatrix<f64>> {
        match self {
            DesignRule::ExactGram { q, .. } | DesignRule::Perturbed { q, .. } => matrix_from_rows(q),
        }
    }

    pub fn k(&self) -> Result<usize> {
        Ok(self.q()?.nrows())
    }

    /// `X(n)'X(n) / n` prescribed by the rule.
    pub fn scaled_gram(&self, n: usize) -> Result<DMatrix<f64>> {
        let q = self.q()?;
        match self {
            DesignRule::ExactGram { .. } => Ok(q),
            DesignRule::Perturbed { perturbation, rate, .. } => {
                let p = matrix_from_rows(perturbation)?;
                if p.shape() != q.shape() {
                    return arg_err("perturbation and Q have different shapes");
                }
                Ok(q + p * (n as f64).powf(-rate))
            }
        }
    }

    pub fn build(&self, n: usize) -> Result<PartitionedDesign> {
        let g = self.scaled_gram(n)?;
        let k = g.nrows();
        if n < k {
            return arg_err(format!("need n >= k, got n={n}, k={k}"));
        }
        let (root, _) = sym_sqrt(&(g * n as f64))?;
        PartitionedDesign::new(cosine_basis(n, k) * root, self.k1())
    }

    pub fn limit(&self) -> Result<LimitDesign> {
        LimitDesign::new(self.q()?, self.k1())
    }
}

pub(crate) fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}
