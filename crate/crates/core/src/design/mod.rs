//! Partitioned regression designs `X = [X1 : X2]` and their limits.
//!
//! Everything downstream needs the same handful of matrices built from a
//! Gram matrix `G` split into blocks `G11 (k1 x k1)`, `G12`, `G22`: the
//! symmetric roots of `G11` and of the Schur complement
//! `S = G22 - G21 G11^{-1} G12`, and the three coefficient matrices
//!
//! ```text
//! B = [ G11^{-1} G12 ; -I ]      C = [ G11^{-1/2} ; 0 ]
//! D = [ -G11^{-1} G12 S^{-1/2} ; S^{-1/2} ]
//! ```
//!
//! For a finite design `G = X'X`; for a limit design `G = Q`.

mod synthetic;

pub use synthetic::{cosine_basis, DesignRule};

use crate::error::{arg_err, Error, Result};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use std::sync::OnceLock;

/// Relative threshold below which the smallest Gram eigenvalue counts as zero.
pub const RANK_TOL: f64 = 1e-10;
/// Relative eigenvalue floor accepted by [`sym_sqrt`].
pub const ROOT_EIG_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-10;

/// Symmetric positive definite square root and its inverse.
///
/// The input is symmetrized as `(A + A') / 2` before the eigendecomposition.
pub fn sym_sqrt(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (eig, _) = sym_eigen(a)?;
    let lmax = eig.eigenvalues.max();
    let lmin = eig.eigenvalues.min();
    if !(lmax > 0.0) || lmin <= ROOT_EIG_TOL * lmax {
        return Err(Error::Domain(format!(
            "matrix is not positive definite (eigenvalues in [{lmin:e}, {lmax:e}])"
        )));
    }
    let v = &eig.eigenvectors;
    let sq = eig.eigenvalues.map(f64::sqrt);
    let root = v * DMatrix::from_diagonal(&sq) * v.transpose();
    let inv_root = v * DMatrix::from_diagonal(&sq.map(|s| 1.0 / s)) * v.transpose();
    Ok((symmetrize(&root), symmetrize(&inv_root)))
}

fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

fn sym_eigen(a: &DMatrix<f64>) -> Result<(SymmetricEigen<f64, Dyn>, DMatrix<f64>)> {
    if !a.is_square() || a.nrows() == 0 {
        return arg_err(format!("expected a non-empty square matrix, got {}x{}", a.nrows(), a.ncols()));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    let scale = a.amax().max(1.0);
    let asym = (a - a.transpose()).amax();
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::Domain(format!("matrix is not symmetric (max asymmetry {asym:e})")));
    }
    let s = symmetrize(a);
    Ok((SymmetricEigen::new(s.clone()), s))
}

/// Block algebra derived from one symmetric positive definite Gram matrix.
#[derive(Debug, Clone)]
pub(crate) struct GramBlocks {
    pub k1: usize,
    pub k2: usize,
    pub gram: DMatrix<f64>,
    pub g11_root: DMatrix<f64>,
    pub g11_inv_root: DMatrix<f64>,
    /// `G11^{-1} G12`, k1 x k2.
    pub coef12: DMatrix<f64>,
    /// `G11^{-1/2} G12`, k1 x k2.
    pub inv_root_g12: DMatrix<f64>,
    pub schur: DMatrix<f64>,
    pub schur_root: DMatrix<f64>,
    pub schur_inv_root: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub chol: Cholesky<f64, Dyn>,
    pub log_det: f64,
    pub lambda_min: f64,
}

impl GramBlocks {
    pub fn new(gram: DMatrix<f64>, k1: usize) -> Result<Self> {
        let k = gram.nrows();
        if k < 2 || k1 < 1 || k1 >= k {
            return arg_err(format!("need 1 <= k1 < k with k >= 2, got k1={k1}, k={k}"));
        }
        let (eig, gram) = sym_eigen(&gram)?;
        let lambda_max = eig.eigenvalues.max();
        let lambda_min = eig.eigenvalues.min();
        let threshold = RANK_TOL * lambda_max.max(0.0);
        if !(lambda_max > 0.0) || lambda_min <= threshold {
            return Err(Error::DesignSingular { lambda_min, threshold });
        }
        let k2 = k - k1;
        let g11 = gram.view((0, 0), (k1, k1)).into_owned();
        let g12 = gram.view((0, k1), (k1, k2)).into_owned();
        let g22 = gram.view((k1, k1), (k2, k2)).into_owned();
        let (g11_root, g11_inv_root) = sym_sqrt(&g11)?;
        let g11_inv = &g11_inv_root * &g11_inv_root;
        let coef12 = &g11_inv * &g12;
        let inv_root_g12 = &g11_inv_root * &g12;
        let schur = symmetrize(&(&g22 - g12.transpose() * &coef12));
        let (schur_root, schur_inv_root) = sym_sqrt(&schur)?;

        let mut b = DMatrix::zeros(k, k2);
        b.view_mut((0, 0), (k1, k2)).copy_from(&coef12);
        b.view_mut((k1, 0), (k2, k2)).copy_from(&(-DMatrix::<f64>::identity(k2, k2)));
        let mut c = DMatrix::zeros(k, k1);
        c.view_mut((0, 0), (k1, k1)).copy_from(&g11_inv_root);
        let mut d = DMatrix::zeros(k, k2);
        d.view_mut((0, 0), (k1, k2)).copy_from(&(-(&coef12 * &schur_inv_root)));
        d.view_mut((k1, 0), (k2, k2)).copy_from(&schur_inv_root);

        let chol = Cholesky::new(gram.clone())
            .ok_or_else(|| Error::Numeric("Cholesky factorization of Gram matrix failed".into()))?;
        let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(Self {
            k1,
            k2,
            gram,
            g11_root,
            g11_inv_root,
            coef12,
            inv_root_g12,
            schur,
            schur_root,
            schur_inv_root,
            b,
            c,
            d,
            chol,
            log_det,
            lambda_min,
        })
    }

    pub fn k(&self) -> usize {
        self.k1 + self.k2
    }

    /// `[C : D]`, the k x k matrix mapping the independent coordinates.
    pub fn cd(&self) -> DMatrix<f64> {
        let k = self.k();
        let mut m = DMatrix::zeros(k, k);
        m.view_mut((0, 0), (k, self.k1)).copy_from(&self.c);
        m.view_mut((0, self.k1), (k, self.k2)).copy_from(&self.d);
        m
    }

    /// Diagonal of `G^{-1}`.
    pub fn inverse_diagonal(&self) -> DVector<f64> {
        self.chol.inverse().diagonal()
    }
}

/// A full-column-rank design `X = [X1 : X2]` with cached regression algebra.
///
/// All matrices of size k x k (or smaller) are computed eagerly. The two
/// n x n projections are materialised on first use only.
#[derive(Debug)]
pub struct PartitionedDesign {
    x: DMatrix<f64>,
    raw: GramBlocks,
    scaled: GramBlocks,
    p_r: OnceLock<DMatrix<f64>>,
    p_u: OnceLock<DMatrix<f64>>,
}

impl Clone for PartitionedDesign {
    fn clone(&self) -> Self {
        Self {
            x: self.x.clone(),
            raw: self.raw.clone(),
            scaled: self.scaled.clone(),
            p_r: OnceLock::new(),
            p_u: OnceLock::new(),
        }
    }
}

impl PartitionedDesign {
    /// Splits `x` after its first `k1` columns.
    pub fn new(x: DMatrix<f64>, k1: usize) -> Result<Self> {
        let (n, k) = x.shape();
        if k < 2 {
            return arg_err(format!("design needs at least two columns, got {k}"));
        }
        if k1 < 1 || k1 >= k {
            return arg_err(format!("k1 must satisfy 1 <= k1 < k = {k}, got {k1}"));
        }
        if n < k {
            return arg_err(format!("need n >= k, got n={n}, k={k}"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return arg_err("design contains non-finite entries");
        }
        let gram = x.tr_mul(&x);
        let raw = GramBlocks::new(gram.clone(), k1)?;
        let scaled = GramBlocks::new(gram / n as f64, k1)?;
        Ok(Self { x, raw, scaled, p_r: OnceLock::new(), p_u: OnceLock::new() })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }
    pub fn n(&self) -> usize {
        self.x.nrows()
    }
    pub fn k(&self) -> usize {
        self.x.ncols()
    }
    pub fn k1(&self) -> usize {
        self.raw.k1
    }
    pub fn k2(&self) -> usize {
        self.raw.k2
    }
    /// `X'X`.
    pub fn xtx(&self) -> &DMatrix<f64> {
        &self.raw.gram
    }
    /// `X'X / n`.
    pub fn gram_scaled(&self) -> &DMatrix<f64> {
        &self.scaled.gram
    }
    /// `(X1'X1)^{1/2}`.
    pub fn x1tx1_root(&self) -> &DMatrix<f64> {
        &self.raw.g11_root
    }
    /// `(X1'X1)^{-1/2}`.
    pub fn x1tx1_inv_root(&self) -> &DMatrix<f64> {
        &self.raw.g11_inv_root
    }
    /// `S2 = X2'(I - P_R)X2`.
    pub fn s2(&self) -> &DMatrix<f64> {
        &self.raw.schur
    }
    /// `S2^{1/2}`, the inverse of `D_{n2}`.
    pub fn s2_root(&self) -> &DMatrix<f64> {
        &self.raw.schur_root
    }
    /// `S2^{-1/2} = D_{n2}`.
    pub fn s2_inv_root(&self) -> &DMatrix<f64> {
        &self.raw.schur_inv_root
    }
    /// `(X1'X1)^{-1} X1'X2`.
    pub fn coef12(&self) -> &DMatrix<f64> {
        &self.raw.coef12
    }
    pub fn b_n(&self) -> &DMatrix<f64> {
        &self.raw.b
    }
    pub fn c_n(&self) -> &DMatrix<f64> {
        &self.raw.c
    }
    pub fn d_n(&self) -> &DMatrix<f64> {
        &self.raw.d
    }
    /// `[C_n : D_n]`.
    pub fn cd_n(&self) -> DMatrix<f64> {
        self.raw.cd()
    }
    /// `lambda_min(X'X / n)`.
    pub fn lambda_min_scaled(&self) -> f64 {
        self.scaled.lambda_min
    }
    /// `lambda_min(X'X)`.
    pub fn lambda_min(&self) -> f64 {
        self.raw.lambda_min
    }
    pub(crate) fn raw_blocks(&self) -> &GramBlocks {
        &self.raw
    }
    pub(crate) fn scaled_blocks(&self) -> &GramBlocks {
        &self.scaled
    }

    /// Projection onto the column space of `X1`.
    pub fn p_r(&self) -> &DMatrix<f64> {
        self.p_r.get_or_init(|| {
            let x1 = self.x.columns(0, self.k1());
            let m = x1 * (&self.raw.g11_inv_root * &self.raw.g11_inv_root) * x1.transpose();
            symmetrize(&m)
        })
    }

    /// Projection onto the column space of `X`.
    pub fn p_u(&self) -> &DMatrix<f64> {
        self.p_u.get_or_init(|| {
            let m = &self.x * self.raw.chol.inverse() * self.x.transpose();
            symmetrize(&m)
        })
    }

    /// Solves `X'X b = r`.
    pub fn solve_gram(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.raw.chol.solve(rhs)
    }

    /// The limit design with `Q = X'X / n`.
    pub fn empirical_limit(&self) -> LimitDesign {
        LimitDesign { blocks: self.scaled.clone() }
    }
}

/// A limiting design given by `Q = lim X'X / n`.
#[derive(Debug, Clone)]
pub struct LimitDesign {
    pub(crate) blocks: GramBlocks,
}

impl LimitDesign {
    pub fn new(q: DMatrix<f64>, k1: usize) -> Result<Self> {
        Ok(Self { blocks: GramBlocks::new(q, k1)? })
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.blocks.gram
    }
    pub fn k(&self) -> usize {
        self.blocks.k()
    }
    pub fn k1(&self) -> usize {
        self.blocks.k1
    }
    pub fn k2(&self) -> usize {
        self.blocks.k2
    }
    pub fn q11(&self) -> DMatrix<f64> {
        self.blocks.gram.view((0, 0), (self.k1(), self.k1())).into_owned()
    }
    pub fn q12(&self) -> DMatrix<f64> {
        self.blocks.gram.view((0, self.k1()), (self.k1(), self.k2())).into_owned()
    }
    pub fn q21(&self) -> DMatrix<f64> {
        self.q12().transpose()
    }
    pub fn q22(&self) -> DMatrix<f64> {
        self.blocks.gram.view((self.k1(), self.k1()), (self.k2(), self.k2())).into_owned()
    }
    pub fn b_inf(&self) -> &DMatrix<f64> {
        &self.blocks.b
    }
    pub fn c_inf(&self) -> &DMatrix<f64> {
        &self.blocks.c
    }
    pub fn d_inf(&self) -> &DMatrix<f64> {
        &self.blocks.d
    }
    /// `D_{inf,2} = (Q22 - Q21 Q11^{-1} Q12)^{-1/2}`.
    pub fn d_inf2(&self) -> &DMatrix<f64> {
        &self.blocks.schur_inv_root
    }
    /// Schur complement `Q22 - Q21 Q11^{-1} Q12`.
    pub fn schur(&self) -> &DMatrix<f64> {
        &self.blocks.schur
    }
    pub fn schur_root(&self) -> &DMatrix<f64> {
        &self.blocks.schur_root
    }
    pub fn lambda_min(&self) -> f64 {
        self.blocks.lambda_min
    }
    /// `Q^{-1}`.
    pub fn q_inverse(&self) -> DMatrix<f64> {
        self.blocks.chol.inverse()
    }
    /// True when `Q12` vanishes relative to the scale of `Q`.
    pub fn is_block_diagonal(&self, rel_tol: f64) -> bool {
        self.q12().amax() <= rel_tol * self.blocks.gram.amax()
    }
}
