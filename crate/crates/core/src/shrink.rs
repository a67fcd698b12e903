//! The radial shrinkage map behind the averaging estimator's density.
//!
//! With positive parameters `a` and `b`, the scalar profile is
//! `h(xi) = xi / (1 + a exp(-xi^2 / b))` on `[0, inf)`. It is continuous,
//! strictly increasing, fixes 0 and satisfies `xi / (1 + a) <= h(xi) < xi`.
//! Its inverse is `g`. The vector map `T(x) = x / (1 + a exp(-|x|^2 / b))`
//! is a bijection of `R^m` with inverse `T^{-1}(y) = g(|y|) y / |y|`
//! (and `T^{-1}(0) = 0`).
//!
//! In applications `a = exp(2 alpha k2)` and `b = sigma^2 / alpha`.
//! Internally only `ln a` is used so very large tuning parameters do not
//! overflow.

use crate::error::{arg_err, Error, Result};
use crate::normal::{logistic, softplus};
use nalgebra::DVector;

const G_TOL: f64 = 1e-14;
const G_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShrinkMap {
    ln_a: f64,
    b: f64,
    m: usize,
}

impl ShrinkMap {
    pub fn new(a: f64, b: f64, m: usize) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return arg_err(format!("a must be positive and finite, got {a}"));
        }
        Self::from_log_a(a.ln(), b, m)
    }

    /// Builds the map from `ln a`, which may exceed the `f64` range of `a`.
    pub fn from_log_a(ln_a: f64, b: f64, m: usize) -> Result<Self> {
        if !ln_a.is_finite() {
            return arg_err(format!("ln a must be finite, got {ln_a}"));
        }
        if !(b > 0.0) || !b.is_finite() {
            return arg_err(format!("b must be positive and finite, got {b}"));
        }
        if m == 0 {
            return arg_err("dimension m must be at least 1");
        }
        Ok(Self { ln_a, b, m })
    }

    /// The map induced by tuning parameter `alpha`, noise level `sigma`
    /// and `k2` tested coefficients.
    pub fn for_averaging(alpha: f64, sigma: f64, k2: usize) -> Result<Self> {
        if !(alpha > 0.0) || !(sigma > 0.0) {
            return arg_err(format!("alpha and sigma must be positive, got {alpha}, {sigma}"));
        }
        Self::from_log_a(2.0 * alpha * k2 as f64, sigma * sigma / alpha, k2)
    }

    pub fn a(&self) -> f64 {
        self.ln_a.exp()
    }
    pub fn ln_a(&self) -> f64 {
        self.ln_a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn m(&self) -> usize {
        self.m
    }

    /// Shrink factor `1 / (1 + a exp(-r2 / b))` at squared radius `r2`.
    #[inline]
    pub fn factor(&self, r2: f64) -> f64 {
        logistic(r2 / self.b - self.ln_a)
    }

    /// Complementary factor `1 - factor(r2)`, accurate when it is tiny.
    #[inline]
    pub fn co_factor(&self, r2: f64) -> f64 {
        logistic(self.ln_a - r2 / self.b)
    }

    #[inline]
    fn h_raw(&self, xi: f64) -> f64 {
        xi * self.factor(xi * xi)
    }

    #[inline]
    fn h_prime(&self, xi: f64) -> f64 {
        let r2 = xi * xi;
        let s = self.factor(r2);
        s + 2.0 * r2 / self.b * s * self.co_factor(r2)
    }

    pub fn h(&self, xi: f64) -> Result<f64> {
        if !(xi >= 0.0) {
            return arg_err(format!("h is defined on [0, inf), got {xi}"));
        }
        Ok(self.h_raw(xi))
    }

    /// Inverse of [`h`](Self::h) by safeguarded Newton iteration.
    pub fn g(&self, zeta: f64) -> Result<f64> {
        if !(zeta >= 0.0) || !zeta.is_finite() {
            return arg_err(format!("g is defined on [0, inf), got {zeta}"));
        }
        if zeta == 0.0 {
            return Ok(0.0);
        }
        // h(xi) >= xi * logistic(2) once xi^2 / b >= ln a + 2.
        let knee = (self.b * (self.ln_a + 2.0).max(0.0)).sqrt();
        let upper = (zeta / logistic(2.0)).max(knee);
        let mut hi = match (1.0 + self.a()) * zeta {
            v if v.is_finite() => v.min(upper),
            _ => upper,
        };
        let mut lo = zeta;
        let tol = G_TOL * zeta.max(f64::MIN_POSITIVE).min(zeta.max(1.0));
        let mut x = if zeta * zeta / self.b > self.ln_a + 2.0 { zeta } else { hi };
        for _ in 0..G_MAX_ITER {
            let f = self.h_raw(x) - zeta;
            if f.abs() <= tol {
                return Ok(x);
            }
            if f < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(x);
            }
            let step = x - f / self.h_prime(x);
            x = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        }
        Err(Error::Numeric(format!("g({zeta}) did not converge in {G_MAX_ITER} iterations")))
    }

    /// Odd extension of `g` to the whole real line.
    pub fn g_signed(&self, zeta: f64) -> Result<f64> {
        Ok(self.g(zeta.abs())?.copysign(zeta))
    }

    /// `g(q) / q`, continuously extended by `1 + a` at `q = 0`.
    pub fn radial_ratio(&self, q: f64) -> Result<f64> {
        if q == 0.0 {
            Ok(1.0 + self.a())
        } else {
            Ok(self.g(q)? / q)
        }
    }

    pub fn forward(&self, x: &DVector<f64>) -> DVector<f64> {
        x * self.factor(x.norm_squared())
    }

    pub fn inverse(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        let q = y.norm();
        if q == 0.0 {
            return Ok(DVector::zeros(y.len()));
        }
        Ok(y * (self.g(q)? / q))
    }

    /// `ln det D_x T` as a function of the squared radius `|x|^2`.
    pub fn log_jacobian_det(&self, r2: f64) -> f64 {
        let u = r2 / self.b;
        -(self.m as f64) * softplus(self.ln_a - u) + (2.0 * u * self.co_factor(r2)).ln_1p()
    }

    pub fn jacobian_det(&self, x: &DVector<f64>) -> f64 {
        self.log_jacobian_det(x.norm_squared()).exp()
    }

    /// `-ln det D_x T` at any `x` with `|x| = g(q)`: the log of the density
    /// factor picked up when pushing a density through `T`.
    pub fn log_density_factor(&self, q: f64) -> Result<f64> {
        let g = self.g(q)?;
        Ok(-self.log_jacobian_det(g * g))
    }

    /// `g(zeta) - zeta`, evaluated as `g (1 - factor(g^2))` for accuracy.
    pub fn tail_gap(&self, zeta: f64) -> Result<f64> {
        let g = self.g(zeta)?;
        Ok(g * self.co_factor(g * g))
    }

    /// `ln(g(zeta) - zeta)`, finite for every `zeta > 0` even where the gap
    /// itself underflows.
    pub fn ln_tail_gap(&self, zeta: f64) -> Result<f64> {
        let g = self.g(zeta)?;
        Ok(g.ln() - softplus(g * g / self.b - self.ln_a))
    }
}
