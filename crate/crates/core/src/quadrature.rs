//! Deterministic numerical integration over boxes.
//!
//! [`GaussKronrod`] is a globally adaptive 7/15-point Gauss-Kronrod rule;
//! [`integrate_box`] nests it across dimensions. [`ProductRule`] is a fixed
//! composite Gauss-Legendre tensor grid, used where the integrand has kinks
//! (absolute differences of densities) and adaptivity buys little.

use rayon::prelude::*;
use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const GL8_X: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const GL8_W: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    /// False when the segment budget ran out before the tolerance was met.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussKronrod {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_segments: usize,
}

impl Default for GaussKronrod {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-10, max_segments: 400 }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

impl GaussKronrod {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> Integral {
        self.integrate_dyn(&mut f, a, b)
    }

    fn integrate_dyn(&self, f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> Integral {
        if a == b {
            return Integral { value: 0.0, error: 0.0, evaluations: 0, converged: true };
        }
        let (value, error) = kronrod15(f, a, b);
        let mut evaluations = 15;
        let mut heap = BinaryHeap::new();
        heap.push(Segment { a, b, value, error });
        let (mut total, mut total_err) = (value, error);
        let mut converged = true;
        while total_err > self.abs_tol.max(self.rel_tol * total.abs()) {
            if heap.len() >= self.max_segments {
                converged = false;
                break;
            }
            let worst = heap.pop().expect("heap is never empty");
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                heap.push(worst);
                converged = false;
                break;
            }
            let (v1, e1) = kronrod15(f, worst.a, mid);
            let (v2, e2) = kronrod15(f, mid, worst.b);
            evaluations += 30;
            total += v1 + v2 - worst.value;
            total_err += e1 + e2 - worst.error;
            heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
            heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
        }
        // re-sum to shed the drift of the running updates
        let (value, error) = heap.iter().fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        Integral { value, error, evaluations, converged }
    }
}

/// Integrates `f` over the box `[lo, hi]` by nesting adaptive rules, the
/// first coordinate outermost. The inner tolerances are tightened so the
/// outer error estimate dominates.
pub fn integrate_box<F: Fn(&[f64]) -> f64>(f: F, lo: &[f64], hi: &[f64], rule: &GaussKronrod) -> Integral {
    assert_eq!(lo.len(), hi.len(), "box bounds must have equal dimension");
    assert!(!lo.is_empty(), "box must have at least one dimension");
    let mut point = vec![0.0; lo.len()];
    nested(&f, lo, hi, rule, 0, &mut point)
}

fn nested(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], rule: &GaussKronrod, axis: usize, point: &mut Vec<f64>) -> Integral {
    let dims = lo.len();
    if axis + 1 == dims {
        return rule.integrate(
            |x| {
                point[axis] = x;
                f(point)
            },
            lo[axis],
            hi[axis],
        );
    }
    let width = (hi[axis] - lo[axis]).abs().max(1e-300);
    let inner_rule = GaussKronrod {
        abs_tol: rule.abs_tol * 0.1 / width.max(1.0),
        rel_tol: rule.rel_tol * 0.1,
        max_segments: rule.max_segments,
    };
    let inner_err = Cell::new(0.0f64);
    let evals = Cell::new(0usize);
    let all_converged = Cell::new(true);
    let mut outer = {
        let point_cell = std::cell::RefCell::new(std::mem::take(point));
        let res = rule.integrate(
            |x| {
                let mut p = point_cell.borrow_mut();
                p[axis] = x;
                let r = nested(f, lo, hi, &inner_rule, axis + 1, &mut p);
                inner_err.set(inner_err.get().max(r.error));
                evals.set(evals.get() + r.evaluations);
                if !r.converged {
                    all_converged.set(false);
                }
                r.value
            },
            lo[axis],
            hi[axis],
        );
        *point = point_cell.into_inner();
        res
    };
    outer.error += inner_err.get() * width;
    outer.evaluations = evals.get();
    outer.converged &= all_converged.get();
    outer
}

/// Composite 8-point Gauss-Legendre nodes on `[a, b]` split into `cells`.
pub fn composite_legendre(a: f64, b: f64, cells: usize) -> (Vec<f64>, Vec<f64>) {
    let cells = cells.max(1);
    let h = (b - a) / cells as f64;
    let mut xs = Vec::with_capacity(8 * cells);
    let mut ws = Vec::with_capacity(8 * cells);
    for c in 0..cells {
        let mid = a + (c as f64 + 0.5) * h;
        for (x, w) in GL8_X.iter().zip(GL8_W.iter()) {
            xs.push(mid - 0.5 * h * x);
            ws.push(0.5 * h * w);
            xs.push(mid + 0.5 * h * x);
            ws.push(0.5 * h * w);
        }
    }
    (xs, ws)
}

/// Tensor product of composite Gauss-Legendre rules over a box.
#[derive(Debug, Clone)]
pub struct ProductRule {
    axes: Vec<(Vec<f64>, Vec<f64>)>,
}

impl ProductRule {
    pub fn new(lo: &[f64], hi: &[f64], cells: usize) -> Self {
        assert_eq!(lo.len(), hi.len());
        Self { axes: lo.iter().zip(hi).map(|(&a, &b)| composite_legendre(a, b, cells)).collect() }
    }

    pub fn points(&self) -> usize {
        self.axes.iter().map(|a| a.0.len()).product()
    }

    /// Sums `f` against the rule for several integrands at once. Work is
    /// split over the first axis; partial sums are combined in axis order,
    /// so the result does not depend on the thread count.
    pub fn sum_many<F, const M: usize>(&self, f: F) -> [f64; M]
    where
        F: Fn(&[f64]) -> [f64; M] + Sync,
    {
        let (x0, w0) = &self.axes[0];
        let rest = &self.axes[1..];
        let partials: Vec<[f64; M]> = x0
            .par_iter()
            .zip(w0.par_iter())
            .map(|(&x, &w)| {
                let mut acc = [0.0; M];
                let mut point = vec![0.0; self.axes.len()];
                point[0] = x;
                let mut idx = vec![0usize; rest.len()];
                loop {
                    let mut weight = w;
                    for (d, &i) in idx.iter().enumerate() {
                        point[d + 1] = rest[d].0[i];
                        weight *= rest[d].1[i];
                    }
                    let v = f(&point);
                    for m in 0..M {
                        acc[m] += weight * v[m];
                    }
                    // odometer increment over the remaining axes
                    let mut d = rest.len();
                    loop {
                        if d == 0 {
                            return acc;
                        }
                        d -= 1;
                        idx[d] += 1;
                        if idx[d] < rest[d].0.len() {
                            break;
                        }
                        idx[d] = 0;
                    }
                }
            })
            .collect();
        let mut total = [0.0; M];
        for p in partials {
            for m in 0..M {
                total[m] += p[m];
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gauss_kronrod_polynomials_and_smooth() {
        let gk = GaussKronrod::default();
        let r = gk.integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0);
        assert!((r.value - 0.0).abs() < 1e-14);
        let r = gk.integrate(f64::sin, 0.0, PI);
        assert!((r.value - 2.0).abs() < 1e-13 && r.converged);
        let r = gk.integrate(|x| (-x * x / 2.0).exp(), -12.0, 12.0);
        assert!((r.value - (2.0 * PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn gauss_kronrod_adapts_to_peaks() {
        let gk = GaussKronrod::new(1e-12, 1e-12);
        let r = gk.integrate(|x| 1e-3 / (x * x + 1e-6), -1.0, 1.0);
        let exact = 2.0 * (1.0f64 / 1e-3).atan();
        assert!((r.value - exact).abs() < 1e-9, "{} vs {exact}", r.value);
    }

    #[test]
    fn box_integration_of_gaussian() {
        let gk = GaussKronrod::new(1e-10, 1e-10);
        let r = integrate_box(|p| (-(p[0] * p[0] + p[1] * p[1]) / 2.0).exp() / (2.0 * PI), &[-10.0, -10.0], &[10.0, 10.0], &gk);
        assert!((r.value - 1.0).abs() < 1e-9);
        let r = integrate_box(|p| p[0] * p[1] * p[2], &[0.0, 0.0, 0.0], &[1.0, 2.0, 3.0], &gk);
        assert!((r.value - 0.5 * 2.0 * 4.5).abs() < 1e-10);
    }

    #[test]
    fn product_rule_is_exact_for_polynomials() {
        let rule = ProductRule::new(&[0.0, -1.0], &[1.0, 1.0], 3);
        let [a, b] = rule.sum_many(|p| [p[0].powi(5) * p[1] * p[1], 1.0]);
        assert!((a - 1.0 / 6.0 * 2.0 / 3.0).abs() < 1e-14);
        assert!((b - 2.0).abs() < 1e-14);
        assert_eq!(rule.points(), 24 * 24);
    }
}
