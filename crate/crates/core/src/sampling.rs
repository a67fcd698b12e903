//! Reproducible exact samplers for `sqrt(n) (beta_tilde - beta)` and its
//! limit, empirical CDFs and Kolmogorov-Smirnov distances.
//!
//! Draw `i` of a batch is a pure function of `(seed, stream, i)`: each draw
//! gets its own ChaCha8 stream, so batches are bit-identical for any
//! thread count and any chunking.

use crate::design::{LimitDesign, PartitionedDesign};
use crate::error::{arg_err, Error, Result};
use crate::estimator::{model_average, AveragingConfig};
use crate::laws::Gamma;
use crate::shrink::ShrinkMap;
use crate::table::{ResultTable, Value};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use std::fmt;

/// Which stochastic representation produced a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Representation {
    /// Simulated responses `Y = X beta + u` pushed through the estimator.
    DataLevel,
    /// Two independent Gaussian blocks and the shrink factor.
    RootRep,
    /// Gaussian block, chi-square radius and uniform direction (`beta2 = 0`).
    ChiRep,
    /// The limit representation, or `N(0, sigma^2 Q^{-1})` at infinity.
    Asymptotic,
}

impl Representation {
    pub fn stream(self) -> u64 {
        match self {
            Representation::DataLevel => 1,
            Representation::RootRep => 2,
            Representation::ChiRep => 3,
            Representation::Asymptotic => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Representation::DataLevel => "data_level",
            Representation::RootRep => "root_rep",
            Representation::ChiRep => "chi_rep",
            Representation::Asymptotic => "asymptotic",
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines identifiers (experiment tag, ladder position, grid index, ...)
/// into one stream id.
pub fn stream_id(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5EED, |acc, &p| splitmix(acc ^ splitmix(p)))
}

/// Generator for draw `index` of stream `stream` under master `seed`.
pub fn draw_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(stream)));
    rng.set_stream(index);
    rng
}

/// `len` independent `N(0, sd^2)` values from `rng`.
pub fn normals(rng: &mut ChaCha8Rng, sd: f64, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| sd * rng.sample::<f64, _>(StandardNormal))
}

/// An `N x k` batch of draws, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    draws: Vec<f64>,
    dim: usize,
    seed: u64,
    representation: Representation,
    bound_violations: Option<usize>,
}

impl SampleBatch {
    pub fn from_rows(rows: Vec<f64>, dim: usize, seed: u64, representation: Representation) -> Result<Self> {
        if dim == 0 || rows.is_empty() || rows.len() % dim != 0 {
            return arg_err("a batch needs at least one draw of positive dimension");
        }
        Ok(Self { draws: rows, dim, seed, representation, bound_violations: None })
    }

    pub fn len(&self) -> usize {
        self.draws.len() / self.dim
    }
    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn representation(&self) -> Representation {
        self.representation
    }
    /// Number of draws that broke the deterministic shrink bound (data-level
    /// batches only).
    pub fn bound_violations(&self) -> Option<usize> {
        self.bound_violations
    }
    pub fn row(&self, i: usize) -> &[f64] {
        &self.draws[i * self.dim..(i + 1) * self.dim]
    }
    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.draws.chunks_exact(self.dim)
    }
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn mean(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.dim);
        for r in self.rows() {
            for j in 0..self.dim {
                m[j] += r[j];
            }
        }
        m / self.len() as f64
    }

    /// Sample covariance with divisor `N - 1` (`N` for a single draw).
    pub fn covariance(&self) -> DMatrix<f64> {
        let mean = self.mean();
        let mut c = DMatrix::zeros(self.dim, self.dim);
        for r in self.rows() {
            for i in 0..self.dim {
                for j in 0..self.dim {
                    c[(i, j)] += (r[i] - mean[i]) * (r[j] - mean[j]);
                }
            }
        }
        c / (self.len().max(2) - 1) as f64
    }

    /// Fraction of draws with every coordinate `<= t`.
    pub fn empirical_cdf(&self, t: &[f64]) -> Result<f64> {
        if t.len() != self.dim {
            return arg_err(format!("point has dimension {}, batch has {}", t.len(), self.dim));
        }
        let hits = self.rows().filter(|r| r.iter().zip(t).all(|(x, y)| x <= y)).count();
        Ok(hits as f64 / self.len() as f64)
    }

    /// One-sample KS distance of each coordinate against a marginal CDF.
    pub fn ks_against<F: Fn(usize, f64) -> f64>(&self, marginal_cdf: F) -> KsReport {
        let per_coordinate = (0..self.dim)
            .map(|j| ks_sorted(&sorted(self.column(j)), |x| marginal_cdf(j, x)))
            .collect();
        KsReport::new(per_coordinate)
    }

    /// Two-sample KS distance per coordinate.
    pub fn ks_two_sample(&self, other: &SampleBatch) -> Result<KsReport> {
        if other.dim != self.dim {
            return arg_err("batches have different dimensions");
        }
        let per_coordinate = (0..self.dim)
            .map(|j| ks_two_sorted(&sorted(self.column(j)), &sorted(other.column(j))))
            .collect();
        Ok(KsReport::new(per_coordinate))
    }

    /// One row per draw; provenance carries the seed and representation.
    pub fn to_table(&self) -> ResultTable {
        let cols: Vec<String> = (1..=self.dim).map(|j| format!("t{j}")).collect();
        let mut t = ResultTable::new(&cols);
        t.set_provenance("representation", self.representation);
        t.set_provenance("seed", self.seed);
        t.set_provenance("draws", self.len());
        for r in self.rows() {
            t.push(r.iter().map(|&v| Value::Float(v)).collect()).expect("row width matches");
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KsReport {
    pub per_coordinate: Vec<f64>,
    pub max: f64,
}

impl KsReport {
    fn new(per_coordinate: Vec<f64>) -> Self {
        let max = per_coordinate.iter().copied().fold(0.0, f64::max);
        Self { per_coordinate, max }
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn ks_sorted<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        // ties: step the empirical CDF over the whole run
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == xs[i] {
            j += 1;
        }
        let f = cdf(xs[i]);
        d = d.max(f - i as f64 / n).max((j + 1) as f64 / n - f);
        i = j + 1;
    }
    d
}

fn ks_two_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// One-sample KS statistic `sup_x |F_N(x) - F(x)|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<f64> {
    if sample.is_empty() {
        return arg_err("KS distance of an empty sample");
    }
    Ok(ks_sorted(&sorted(sample.to_vec()), cdf))
}

/// Two-sample KS statistic `sup_x |F_N(x) - G_M(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return arg_err("KS distance of an empty sample");
    }
    Ok(ks_two_sorted(&sorted(a.to_vec()), &sorted(b.to_vec())))
}

fn check_draws(draws: usize) -> Result<()> {
    if draws == 0 {
        return arg_err("number of draws must be at least 1");
    }
    Ok(())
}

fn fill_parallel<F>(draws: usize, dim: usize, draw: F) -> Result<Vec<f64>>
where
    F: Fn(usize, &mut [f64]) -> Result<()> + Sync,
{
    let mut out = vec![0.0; draws * dim];
    out.par_chunks_mut(dim).enumerate().try_for_each(|(i, row)| draw(i, row))?;
    Ok(out)
}

/// The representation `offset + C z1 + s (D z2 - offset)` with
/// `s = factor(|z2 + shift|^2)`, shared by the finite and limit samplers.
struct RootRepresentation {
    offset: DVector<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
    shift: DVector<f64>,
    shrink: ShrinkMap,
}

impl RootRepresentation {
    fn factor(&self, z2: &DVector<f64>) -> f64 {
        self.shrink.factor((z2 + &self.shift).norm_squared())
    }

    fn eval(&self, z1: &DVector<f64>, z2: &DVector<f64>) -> DVector<f64> {
        let s = self.factor(z2);
        &self.offset + &self.c * z1 + (&self.d * z2 - &self.offset) * s
    }

    /// The algebraically equal form `C z1 + D z2 - (1 - s)(D z2 - offset)`.
    fn eval_alternate(&self, z1: &DVector<f64>, z2: &DVector<f64>) -> DVector<f64> {
        let co = self.shrink.co_factor((z2 + &self.shift).norm_squared());
        let dz = &self.d * z2;
        &self.c * z1 + &dz - (dz.clone() - &self.offset) * co
    }
}

/// Every this-many draws of the root representation are recomputed with
/// the alternate form and compared.
const CROSS_CHECK_EVERY: usize = 64;
const CROSS_CHECK_TOL: f64 = 1e-10;

fn sample_representation(rep: &RootRepresentation, sigma: f64, draws: usize, seed: u64, tag: Representation) -> Result<SampleBatch> {
    check_draws(draws)?;
    let (k1, k2) = (rep.c.ncols(), rep.d.ncols());
    let dim = rep.c.nrows();
    let rows = fill_parallel(draws, dim, |i, row| {
        let mut rng = draw_rng(seed, tag.stream(), i as u64);
        let z1 = normals(&mut rng, sigma, k1);
        let z2 = normals(&mut rng, sigma, k2);
        let x = rep.eval(&z1, &z2);
        if i % CROSS_CHECK_EVERY == 0 {
            let alt = rep.eval_alternate(&z1, &z2);
            let scale = 1.0 + rep.offset.norm() + (&rep.d * &z2).norm() + (&rep.c * &z1).norm();
            if (&x - &alt).amax() > CROSS_CHECK_TOL * scale {
                return Err(Error::Numeric(format!("representation cross-check failed at draw {i}")));
            }
        }
        row.copy_from_slice(x.as_slice());
        Ok(())
    })?;
    SampleBatch::from_rows(rows, dim, seed, tag)
}

fn check_beta(design: &PartitionedDesign, beta: &DVector<f64>) -> Result<()> {
    if beta.len() != design.k() {
        return arg_err(format!("beta has length {}, expected k = {}", beta.len(), design.k()));
    }
    if beta.iter().any(|v| !v.is_finite()) {
        return arg_err("beta must be finite");
    }
    Ok(())
}

/// Simulates `Y = X beta + u`, runs the estimator and records
/// `sqrt(n) (beta_tilde - beta)`. Every draw is checked against the
/// deterministic bound on `sqrt(n) |beta_tilde - beta_U|`.
pub fn sample_data_level(design: &PartitionedDesign, beta: &DVector<f64>, cfg: &AveragingConfig, draws: usize, seed: u64) -> Result<SampleBatch> {
    check_draws(draws)?;
    check_beta(design, beta)?;
    cfg.validate()?;
    let n = design.n();
    let root_n = (n as f64).sqrt();
    let bound = cfg.scaled_shrink_bound(design);
    let mean = design.x() * beta;
    let tag = Representation::DataLevel;
    let violations = std::sync::atomic::AtomicUsize::new(0);
    let rows = fill_parallel(draws, design.k(), |i, row| {
        let mut rng = draw_rng(seed, tag.stream(), i as u64);
        let y = &mean + normals(&mut rng, cfg.sigma, n);
        let est = model_average(design, &y, cfg)?;
        if root_n * est.shrink_norm() > bound {
            violations.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        }
        for (r, (bt, b)) in row.iter_mut().zip(est.beta_tilde.iter().zip(beta.iter())) {
            *r = root_n * (bt - b);
        }
        Ok(())
    })?;
    let mut batch = SampleBatch::from_rows(rows, design.k(), seed, tag)?;
    batch.bound_violations = Some(violations.into_inner());
    Ok(batch)
}

/// Draws from the two-Gaussian-block representation of the exact law.
pub fn sample_root_rep(design: &PartitionedDesign, beta: &DVector<f64>, cfg: &AveragingConfig, draws: usize, seed: u64) -> Result<SampleBatch> {
    check_beta(design, beta)?;
    cfg.validate()?;
    let root_n = (design.n() as f64).sqrt();
    let beta2 = beta.rows(design.k1(), design.k2()).into_owned();
    let rep = RootRepresentation {
        offset: design.b_n() * (&beta2 * root_n),
        c: design.c_n() * root_n,
        d: design.d_n() * root_n,
        shift: design.s2_root() * &beta2,
        shrink: cfg.shrink_map(design.k2())?,
    };
    sample_representation(&rep, cfg.sigma, draws, seed, Representation::RootRep)
}

/// Draws from the chi-square radius / uniform direction representation,
/// valid when `beta2 = 0`.
pub fn sample_chi_rep(design: &PartitionedDesign, beta: &DVector<f64>, cfg: &AveragingConfig, draws: usize, seed: u64) -> Result<SampleBatch> {
    check_draws(draws)?;
    check_beta(design, beta)?;
    cfg.validate()?;
    let (k1, k2) = (design.k1(), design.k2());
    if beta.rows(k1, k2).iter().any(|&v| v != 0.0) {
        return Err(Error::Domain("the chi-square representation requires beta2 = 0".into()));
    }
    let root_n = (design.n() as f64).sqrt();
    let c = design.c_n() * root_n;
    let d = design.d_n() * root_n;
    let shrink = cfg.shrink_map(k2)?;
    let chi = ChiSquared::new(k2 as f64).map_err(|e| Error::Numeric(e.to_string()))?;
    let sigma2 = cfg.sigma * cfg.sigma;
    let tag = Representation::ChiRep;
    let rows = fill_parallel(draws, design.k(), |i, row| {
        let mut rng = draw_rng(seed, tag.stream(), i as u64);
        let z1 = normals(&mut rng, cfg.sigma, k1);
        let chi2 = sigma2 * chi.sample(&mut rng);
        let mut u = normals(&mut rng, 1.0, k2);
        while u.norm() == 0.0 {
            u = normals(&mut rng, 1.0, k2);
        }
        u /= u.norm();
        let x = &c * z1 + &d * u * (chi2.sqrt() * shrink.factor(chi2));
        row.copy_from_slice(x.as_slice());
        Ok(())
    })?;
    SampleBatch::from_rows(rows, design.k(), seed, tag)
}

/// Draws from the limit law: the limit representation for finite `gamma`,
/// `N(0, sigma^2 Q^{-1})` at infinity.
pub fn sample_asymptotic(limit: &LimitDesign, gamma: &Gamma, sigma: f64, alpha: f64, draws: usize, seed: u64) -> Result<SampleBatch> {
    let cfg = AveragingConfig::new(alpha, sigma)?;
    let k = limit.k();
    match gamma {
        Gamma::Finite(g) => {
            if g.len() != limit.k2() {
                return arg_err(format!("gamma has length {}, expected k2 = {}", g.len(), limit.k2()));
            }
            let rep = RootRepresentation {
                offset: limit.b_inf() * g,
                c: limit.c_inf().clone(),
                d: limit.d_inf().clone(),
                shift: limit.schur_root() * g,
                shrink: cfg.shrink_map(limit.k2())?,
            };
            sample_representation(&rep, sigma, draws, seed, Representation::Asymptotic)
        }
        Gamma::AtInfinity => {
            check_draws(draws)?;
            let lt = limit.blocks.chol.l().transpose();
            let tag = Representation::Asymptotic;
            let rows = fill_parallel(draws, k, |i, row| {
                let mut rng = draw_rng(seed, tag.stream(), i as u64);
                let z = normals(&mut rng, sigma, k);
                let x = lt
                    .solve_upper_triangular(&z)
                    .ok_or_else(|| Error::Numeric("triangular solve failed".into()))?;
                row.copy_from_slice(x.as_slice());
                Ok(())
            })?;
            SampleBatch::from_rows(rows, k, seed, tag)
        }
    }
}
