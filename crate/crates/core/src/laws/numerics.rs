//! CDFs, marginal CDF tables, linear images and L1 distances.

use super::{check_finite, density_or_nan, Law, ENVELOPE_SDS};
use crate::error::{arg_err, Error, Result};
use crate::quadrature::{composite_legendre, integrate_box, GaussKronrod, ProductRule};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Largest dimension handled by nested quadrature.
pub const MAX_QUADRATURE_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum CdfMethod {
    Quadrature(GaussKronrod),
    MonteCarlo { draws: usize, seed: u64 },
}

impl Default for CdfMethod {
    fn default() -> Self {
        CdfMethod::Quadrature(GaussKronrod::new(1e-10, 1e-9))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfValue {
    pub value: f64,
    /// Quadrature error estimate (zero for Monte Carlo).
    pub abs_error: f64,
    /// Monte Carlo standard error (`None` for quadrature).
    pub std_error: Option<f64>,
}

/// `P(X <= t)` componentwise. Coordinates of `t` may be infinite.
pub fn cdf<L: Law + ?Sized>(law: &L, t: &[f64], method: &CdfMethod) -> Result<CdfValue> {
    let k = law.dim();
    if t.len() != k {
        return arg_err(format!("point has dimension {}, expected {k}", t.len()));
    }
    if t.iter().any(|v| v.is_nan()) {
        return arg_err("cdf point contains NaN");
    }
    match method {
        CdfMethod::Quadrature(rule) => {
            if k > MAX_QUADRATURE_DIM {
                return Err(Error::Unsupported(format!(
                    "quadrature CDF supports k <= {MAX_QUADRATURE_DIM}, got k = {k}; use Monte Carlo"
                )));
            }
            let (lo, hi) = law.envelope().bounds(ENVELOPE_SDS);
            let mut upper = hi.clone();
            for i in 0..k {
                if t[i] <= lo[i] {
                    return Ok(CdfValue { value: 0.0, abs_error: 0.0, std_error: None });
                }
                upper[i] = t[i].min(hi[i]);
            }
            let r = integrate_box(|p| density_or_nan(law, p), &lo, &upper, rule);
            let value = check_finite(r.value, "CDF quadrature")?;
            Ok(CdfValue { value: value.clamp(0.0, 1.0), abs_error: r.error, std_error: None })
        }
        CdfMethod::MonteCarlo { draws, seed } => {
            let batch = law.sample(*draws, *seed)?;
            let p = batch.empirical_cdf(t)?;
            let se = (p * (1.0 - p) / *draws as f64).sqrt();
            Ok(CdfValue { value: p, abs_error: 0.0, std_error: Some(se) })
        }
    }
}

/// Tabulated marginal CDF of one coordinate, interpolated by cubic Hermite
/// polynomials that use the marginal density as slope.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalCdf {
    xs: Vec<f64>,
    cdf: Vec<f64>,
    pdf: Vec<f64>,
}

impl MarginalCdf {
    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }

    /// Mass captured inside the tabulated range.
    pub fn total_mass(&self) -> f64 {
        *self.cdf.last().expect("table is non-empty")
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= self.xs[n - 1] {
            return 1.0;
        }
        let j = self.xs.partition_point(|&v| v <= x) - 1;
        let (x0, x1) = (self.xs[j], self.xs[j + 1]);
        let h = x1 - x0;
        let s = (x - x0) / h;
        let (s2, s3) = (s * s, s * s * s);
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * self.cdf[j]
            + (s3 - 2.0 * s2 + s) * h * self.pdf[j]
            + (-2.0 * s3 + 3.0 * s2) * self.cdf[j + 1]
            + (s3 - s2) * h * self.pdf[j + 1];
        v.clamp(0.0, 1.0)
    }

    pub fn pdf_at_nodes(&self) -> &[f64] {
        &self.pdf
    }
}

/// Interpolation error accepted per table segment.
pub const TABLE_TOL: f64 = 1e-8;
const TABLE_MAX_DEPTH: usize = 20;

/// `(left node, density there, mass of the segment)`.
type Piece = (f64, f64, f64);

fn segment_mass<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (nodes, weights) = composite_legendre(a, b, 2);
    nodes.iter().zip(&weights).map(|(&x, &w)| w * f(x)).sum()
}

/// Splits `[x0, x1]` until the Hermite interpolant matches the CDF at the
/// midpoint and the two half masses add up to the whole.
#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(f: &F, x0: f64, x1: f64, p0: f64, p1: f64, mass: f64, depth: usize, out: &mut Vec<Piece>) {
    let mid = 0.5 * (x0 + x1);
    let (left, right) = (segment_mass(f, x0, mid), segment_mass(f, mid, x1));
    let hermite_mid = 0.5 * mass + (x1 - x0) * (p0 - p1) / 8.0;
    let err = (hermite_mid - left).abs().max((left + right - mass).abs());
    if err <= TABLE_TOL || depth == TABLE_MAX_DEPTH || !err.is_finite() {
        out.push((x0, p0, mass));
        return;
    }
    let pm = f(mid);
    refine(f, x0, mid, p0, pm, left, depth + 1, out);
    refine(f, mid, x1, pm, p1, right, depth + 1, out);
}

/// Builds the marginal CDF of coordinate `axis` on the law's envelope.
/// Starts from `segments` equal segments and bisects each until the
/// interpolation error is below [`TABLE_TOL`].
pub fn marginal_cdf_table<L: Law + ?Sized>(law: &L, axis: usize, segments: usize, rule: &GaussKronrod) -> Result<MarginalCdf> {
    let k = law.dim();
    if axis >= k {
        return arg_err(format!("axis {axis} out of range for dimension {k}"));
    }
    if k > MAX_QUADRATURE_DIM {
        return Err(Error::Unsupported(format!("marginal tables support k <= {MAX_QUADRATURE_DIM}, got {k}")));
    }
    if segments == 0 {
        return arg_err("need at least one segment");
    }
    let (lo, hi) = law.envelope().bounds(ENVELOPE_SDS);
    let others: Vec<usize> = (0..k).filter(|&d| d != axis).collect();
    let olo: Vec<f64> = others.iter().map(|&d| lo[d]).collect();
    let ohi: Vec<f64> = others.iter().map(|&d| hi[d]).collect();
    let marginal = |x: f64| -> f64 {
        if others.is_empty() {
            return density_or_nan(law, &[x]);
        }
        integrate_box(
            |p| {
                let mut full = Vec::with_capacity(k);
                let mut it = p.iter();
                for d in 0..k {
                    full.push(if d == axis { x } else { *it.next().expect("inner point") });
                }
                density_or_nan(law, &full)
            },
            &olo,
            &ohi,
            rule,
        )
        .value
    };
    let (a, b) = (lo[axis], hi[axis]);
    let width = (b - a) / segments as f64;
    let edges: Vec<f64> = (0..=segments).map(|j| if j == segments { b } else { a + j as f64 * width }).collect();
    let edge_pdf: Vec<f64> = edges.par_iter().map(|&x| marginal(x)).collect();
    let pieces: Vec<Vec<Piece>> = (0..segments)
        .into_par_iter()
        .map(|j| {
            let mut out = Vec::new();
            let mass = segment_mass(&marginal, edges[j], edges[j + 1]);
            refine(&marginal, edges[j], edges[j + 1], edge_pdf[j], edge_pdf[j + 1], mass, 0, &mut out);
            out
        })
        .collect();
    let total = pieces.iter().map(Vec::len).sum::<usize>() + 1;
    let (mut xs, mut pdf, mut cdf) = (Vec::with_capacity(total), Vec::with_capacity(total), Vec::with_capacity(total));
    let mut acc = 0.0;
    for (x, p, m) in pieces.into_iter().flatten() {
        xs.push(x);
        pdf.push(p);
        cdf.push(acc);
        acc += m;
    }
    xs.push(b);
    pdf.push(edge_pdf[segments]);
    cdf.push(acc);
    if cdf.iter().chain(&pdf).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("marginal CDF table contains non-finite values".into()));
    }
    Ok(MarginalCdf { xs, cdf, pdf })
}

/// Density of `A X` at `s` for square nonsingular `A`: `|det A|^{-1} f(A^{-1} s)`.
pub fn transformed_density<L: Law + ?Sized>(law: &L, a: &DMatrix<f64>, s: &[f64]) -> Result<f64> {
    let k = law.dim();
    if !a.is_square() {
        return Err(Error::Unsupported(format!(
            "linear images need a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.nrows() != k || s.len() != k {
        return arg_err(format!("expected a {k}x{k} matrix and a length-{k} point"));
    }
    let lu = a.clone().lu();
    let det = lu.determinant();
    let scale = a.amax().powi(k as i32);
    if !(det.abs() > 1e-13 * scale) {
        return Err(Error::Domain(format!("matrix is singular (det = {det:e})")));
    }
    let x = lu
        .solve(&DVector::from_column_slice(s))
        .ok_or_else(|| Error::Domain("matrix is singular".into()))?;
    Ok((law.log_density(x.as_slice())? - det.abs().ln()).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Estimate {
    /// `int |f - f'|` over the box.
    pub value: f64,
    /// Bound on the contribution from outside the box: the mass each
    /// density leaves outside it, as measured by the same rule.
    pub tail_bound: f64,
    pub mass_a: f64,
    pub mass_b: f64,
}

/// L1 distance by a composite Gauss-Legendre tensor rule with `cells`
/// cells per axis.
pub fn l1_distance<A: Law + ?Sized, B: Law + ?Sized>(a: &A, b: &B, lo: &[f64], hi: &[f64], cells: usize) -> Result<L1Estimate> {
    let k = a.dim();
    if b.dim() != k || lo.len() != k || hi.len() != k {
        return arg_err("densities and box must share one dimension");
    }
    if lo.iter().zip(hi).any(|(l, h)| !(l < h)) {
        return arg_err("box must satisfy lo < hi on every axis");
    }
    let rule = ProductRule::new(lo, hi, cells);
    let [diff, ma, mb] = rule.sum_many(|p| {
        let fa = density_or_nan(a, p);
        let fb = density_or_nan(b, p);
        [(fa - fb).abs(), fa, fb]
    });
    check_finite(diff + ma + mb, "L1 quadrature")?;
    Ok(L1Estimate {
        value: diff.clamp(0.0, 2.0),
        tail_bound: (1.0 - ma).abs() + (1.0 - mb).abs(),
        mass_a: ma,
        mass_b: mb,
    })
}

/// The box covering both laws' envelopes.
pub fn joint_box<A: Law + ?Sized, B: Law + ?Sized>(a: &A, b: &B) -> (Vec<f64>, Vec<f64>) {
    a.envelope().union(&b.envelope()).bounds(ENVELOPE_SDS)
}
