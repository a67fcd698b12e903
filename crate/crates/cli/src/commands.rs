//! One function per subcommand: config in, tables and checks out.

use crate::config::*;
use crate::error::{invalid, CliResult};
use modavg::cdf_estimation::{asymptotic_cdf_at, choose_constants, non_uniformity_experiment, oscillation, symmetric_grid, NonUniformitySpec};
use modavg::convergence::{consistency_sweep, gamma_degeneration, is_non_increasing_within, l1_ladder, LadderSpec};
use modavg::laws::{cdf, CdfMethod};
use modavg::quadrature::GaussKronrod;
use modavg::sampling::{sample_asymptotic, sample_chi_rep, sample_data_level, sample_root_rep};
use modavg::{model_average, AveragingConfig, Gamma, ResultTable, ShrinkMap, Value};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::path::Path;

/// Outcome of one invariant check requested by a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Default)]
pub struct Outputs {
    /// `(file name, table)` in write order.
    pub tables: Vec<(String, ResultTable)>,
    pub checks: Vec<Check>,
}

impl Outputs {
    fn table(mut self, name: &str, t: ResultTable) -> Self {
        self.tables.push((name.to_string(), t));
        self
    }
}

pub struct Context<'a> {
    /// Directory relative input paths are resolved against.
    pub base: &'a Path,
    pub seed: u64,
}

fn t_columns(k: usize) -> Vec<String> {
    (1..=k).map(|j| format!("t{j}")).collect()
}

fn floats(v: &[f64]) -> Vec<Value> {
    v.iter().map(|&x| Value::Float(x)).collect()
}

pub fn estimate(c: &EstimateConfig, ctx: &Context) -> CliResult<Outputs> {
    let cfg = AveragingConfig::new(c.alpha, c.sigma)?;
    let design = c.design.load(ctx.base)?;
    let ys = c.data.responses(ctx.base, &design, c.sigma, ctx.seed)?;
    let bound = cfg.shrink_bound(&design);
    let bundles = ys.par_iter().map(|y| model_average(&design, y, &cfg)).collect::<Result<Vec<_>, _>>()?;
    let k = design.k();
    let mut cols = vec!["index".to_string(), "lambda".to_string()];
    for prefix in ["beta_tilde", "beta_r", "beta_u"] {
        cols.extend((1..=k).map(|j| format!("{prefix}_{j}")));
    }
    cols.extend(["risk_r", "risk_u", "fit_gap", "shrink_norm", "bound_ok"].map(String::from));
    let mut table = ResultTable::new(&cols);
    table.set_provenance("shrink_bound", Value::Float(bound));
    let mut violations = 0;
    for (i, b) in bundles.iter().enumerate() {
        let ok = b.shrink_norm() <= bound;
        violations += usize::from(!ok);
        let mut row = vec![i.into(), b.lambda.into()];
        for v in [&b.beta_tilde, &b.beta_r, &b.beta_u] {
            row.extend(floats(v.as_slice()));
        }
        row.extend([b.risk_r.into(), b.risk_u.into(), b.fit_gap.into(), b.shrink_norm().into(), ok.into()]);
        table.push(row)?;
    }
    let check = Check::new("shrink_bound", violations == 0, format!("{violations} of {} rows exceed the bound", bundles.len()));
    Ok(Outputs { checks: vec![check], ..Outputs::default() }.table("estimate.csv", table))
}

pub fn density(c: &DensityConfig, ctx: &Context) -> CliResult<Outputs> {
    let cfg = AveragingConfig::new(c.alpha, c.sigma)?;
    let built = c.law.build(ctx.base, &cfg)?;
    let law = built.as_law();
    let points = c.grid.points(law.dim())?;
    let values = points.par_iter().map(|t| law.density(t)).collect::<Result<Vec<_>, _>>()?;
    let mut cols = t_columns(law.dim());
    cols.push("density".into());
    let mut table = ResultTable::new(&cols);
    for (t, v) in points.iter().zip(values) {
        let mut row = floats(t);
        row.push(v.into());
        table.push(row)?;
    }
    Ok(Outputs::default().table("density.csv", table))
}

pub fn cdf_table(c: &CdfConfig, ctx: &Context) -> CliResult<Outputs> {
    let cfg = AveragingConfig::new(c.alpha, c.sigma)?;
    let built = c.law.build(ctx.base, &cfg)?;
    let law = built.as_law();
    let k = law.dim();
    let points = match (&c.points, &c.grid) {
        (Some(p), None) => {
            if p.is_empty() || p.iter().any(|t| t.len() != k) {
                return invalid(format!("every point needs length k = {k}"));
            }
            p.clone()
        }
        (None, Some(g)) => g.points(k)?,
        _ => return invalid("give exactly one of `points` or `grid`"),
    };
    if points.iter().flatten().any(|v| v.is_nan()) {
        return invalid("CDF points must not be NaN");
    }
    let method = match c.method {
        CdfMethodSpec::Quadrature { abs_tol, rel_tol } => {
            if !(abs_tol > 0.0 && rel_tol >= 0.0) {
                return invalid("quadrature tolerances must be positive");
            }
            CdfMethod::Quadrature(GaussKronrod::new(abs_tol, rel_tol))
        }
        CdfMethodSpec::MonteCarlo { draws } => CdfMethod::MonteCarlo { draws, seed: ctx.seed },
    };
    let values = points.par_iter().map(|t| cdf(law, t, &method)).collect::<Result<Vec<_>, _>>()?;
    let mut cols = t_columns(k);
    cols.extend(["cdf", "abs_error", "std_error"].map(String::from));
    let mut table = ResultTable::new(&cols);
    for (t, v) in points.iter().zip(values) {
        let mut row = floats(t);
        row.extend([v.value.into(), v.abs_error.into(), v.std_error.unwrap_or(f64::NAN).into()]);
        table.push(row)?;
    }
    Ok(Outputs::default().table("cdf.csv", table))
}

pub fn sample(c: &SampleConfig, ctx: &Context) -> CliResult<Outputs> {
    let cfg = AveragingConfig::new(c.alpha, c.sigma)?;
    let built = c.law.build(ctx.base, &cfg)?;
    let batch = match (&built, c.representation) {
        (BuiltLaw::Finite(l), RepresentationSpec::DataLevel) => sample_data_level(l.design(), l.beta(), &cfg, c.draws, ctx.seed)?,
        (BuiltLaw::Finite(l), RepresentationSpec::RootRep) => sample_root_rep(l.design(), l.beta(), &cfg, c.draws, ctx.seed)?,
        (BuiltLaw::Finite(l), RepresentationSpec::ChiRep) => sample_chi_rep(l.design(), l.beta(), &cfg, c.draws, ctx.seed)?,
        (BuiltLaw::Asymptotic(l), RepresentationSpec::Asymptotic) => sample_asymptotic(l.limit(), l.gamma(), c.sigma, c.alpha, c.draws, ctx.seed)?,
        (BuiltLaw::Finite(_), RepresentationSpec::Asymptotic) => return invalid("the asymptotic representation needs an asymptotic law"),
        (BuiltLaw::Asymptotic(_), _) => return invalid("data_level, root_rep and chi_rep need a finite law"),
    };
    let mut summary = ResultTable::new(&["coordinate", "mean", "sd"]);
    let (mean, cov) = (batch.mean(), batch.covariance());
    for j in 0..batch.dim() {
        summary.push(vec![(j + 1).into(), mean[j].into(), cov[(j, j)].sqrt().into()])?;
    }
    let mut out = Outputs::default();
    if let Some(v) = batch.bound_violations() {
        out.checks.push(Check::new("shrink_bound", v == 0, format!("{v} of {} draws exceed the bound", batch.len())));
    }
    Ok(out.table("sample.csv", batch.to_table()).table("sample_summary.csv", summary))
}

fn box_bounds<'a>(lo: &'a Option<Vec<f64>>, hi: &'a Option<Vec<f64>>) -> CliResult<Option<(&'a [f64], &'a [f64])>> {
    match (lo, hi) {
        (None, None) => Ok(None),
        (Some(lo), Some(hi)) => {
            if lo.len() != hi.len() || lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                return invalid("box_lo and box_hi need equal lengths and box_lo < box_hi");
            }
            Ok(Some((lo, hi)))
        }
        _ => invalid("give both box_lo and box_hi or neither"),
    }
}

pub fn l1(c: &L1LadderConfig, _ctx: &Context) -> CliResult<Outputs> {
    if c.cells == 0 {
        return invalid("cells must be positive");
    }
    let bounds = box_bounds(&c.box_lo, &c.box_hi)?;
    let spec = LadderSpec { n_ladder: c.n_ladder.clone(), path: c.path.clone(), design_rule: c.design.clone() };
    let table = l1_ladder(&spec, c.sigma, c.alpha, bounds, c.cells)?;
    let mut out = Outputs::default();
    let l1 = table.column_f64("l1").expect("l1 column");
    if let Some(checks) = &c.checks {
        if checks.non_increasing {
            let tol = table.column_f64("tail_bound").expect("tail column").into_iter().fold(0.0, f64::max);
            out.checks.push(Check::new("l1_non_increasing", is_non_increasing_within(&l1, 2.0 * tol), format!("{l1:?}")));
        }
        if let Some(limit) = checks.final_below {
            let last = *l1.last().expect("non-empty ladder");
            out.checks.push(Check::new("l1_final", last < limit, format!("{last:e} vs {limit:e}")));
        }
    }
    out = out.table("l1_ladder.csv", table);
    if let Some(g) = &c.gamma_degeneration {
        let gammas: Vec<DVector<f64>> = g.gammas.iter().map(|v| DVector::from_column_slice(v)).collect();
        let limit = c.design.limit()?;
        if gammas.iter().any(|v| v.len() != limit.k2()) {
            return invalid(format!("every gamma needs length k2 = {}", limit.k2()));
        }
        let t = gamma_degeneration(&limit, c.sigma, c.alpha, &gammas, bounds, c.cells)?;
        if let Some(limit) = g.final_below {
            let last = *t.column_f64("l1").expect("l1 column").last().unwrap_or(&f64::NAN);
            out.checks.push(Check::new("gamma_degeneration_final", last < limit, format!("{last:e} vs {limit:e}")));
        }
        out = out.table("gamma_degeneration.csv", t);
    }
    Ok(out)
}

pub fn oscillation_table(c: &OscillationConfig, _ctx: &Context) -> CliResult<Outputs> {
    let limit = c.limit()?;
    if !(c.gamma_radius > 0.0 && c.gamma_radius.is_finite()) || c.half_points == 0 {
        return invalid("gamma_radius must be positive and half_points at least 1");
    }
    if c.t.is_empty() || c.t.iter().any(|t| t.len() != limit.k()) {
        return invalid(format!("every t needs length k = {}", limit.k()));
    }
    let grid = symmetric_grid(c.gamma_radius, c.half_points);
    let k = limit.k();
    let mut curve_cols = t_columns(k);
    curve_cols.extend(["gamma", "cdf"].map(String::from));
    let mut curve = ResultTable::new(&curve_cols);
    let mut sum_cols = t_columns(k);
    sum_cols.extend(["delta_star_half", "gamma_at_min", "gamma_at_max", "min", "max"].map(String::from));
    let mut summary = ResultTable::new(&sum_cols);
    let mut out = Outputs::default();
    for t in &c.t {
        let osc = oscillation(&limit, c.sigma, c.alpha, t, &grid)?;
        let values = grid
            .par_iter()
            .map(|&g| asymptotic_cdf_at(&limit, &Gamma::finite(&[g]), c.sigma, c.alpha, t))
            .collect::<Result<Vec<_>, _>>()?;
        for (g, v) in grid.iter().zip(values) {
            let mut row = floats(t);
            row.extend([(*g).into(), v.into()]);
            curve.push(row)?;
        }
        let mut row = floats(t);
        row.extend(floats(&[osc.delta_star_half, osc.gamma_at_min, osc.gamma_at_max, osc.min, osc.max]));
        summary.push(row)?;
        out.checks.push(Check::new(format!("oscillation_positive{t:?}"), osc.delta_star_half > 0.0, format!("{:e}", osc.delta_star_half)));
    }
    Ok(out.table("oscillation.csv", summary).table("oscillation_curve.csv", curve))
}

pub fn impossibility(c: &ImpossibilityConfig, ctx: &Context) -> CliResult<Outputs> {
    let limit = c.design.limit()?;
    let (rho0, delta0, half) = match (c.rho0, c.delta0) {
        (Some(r), Some(d)) => (r, d, f64::NAN),
        (None, None) => {
            let k = choose_constants(&limit, c.sigma, c.alpha, &c.t, &c.radii)?;
            (k.rho0, k.delta0, k.delta_star_half)
        }
        _ => return invalid("give both rho0 and delta0 or neither"),
    };
    let spec = NonUniformitySpec {
        design_rule: c.design.clone(),
        beta: c.beta.clone(),
        sigma: c.sigma,
        alpha: c.alpha,
        t: c.t.clone(),
        rho0,
        delta0,
        n_ladder: c.n_ladder.clone(),
        replications: c.replications,
        seed: ctx.seed,
        selector: c.selector,
        half_points: c.half_points,
    };
    let report = non_uniformity_experiment(&spec)?;
    let mut summary = report.summary.clone();
    summary.set_provenance("rho0", Value::Float(rho0));
    summary.set_provenance("delta0", Value::Float(delta0));
    summary.set_provenance("delta_star_half", Value::Float(half));
    let mut out = Outputs::default();
    if let Some(ch) = &c.checks {
        let sup = report.summary_column("sup_error_prob");
        let center = report.summary_column("center_error_prob");
        if let Some(m) = ch.min_sup_error {
            out.checks.push(Check::new("sup_error_floor", sup.iter().all(|&p| p >= m), format!("{sup:?}")));
        }
        if let Some(m) = ch.max_final_center_error {
            let last = *center.last().expect("non-empty ladder");
            out.checks.push(Check::new("center_error_final", last < m, format!("{last} vs {m}")));
        }
        if ch.center_non_increasing {
            out.checks.push(Check::new("center_error_non_increasing", center.windows(2).all(|w| w[1] <= w[0]), format!("{center:?}")));
        }
    }
    Ok(out.table("impossibility_summary.csv", summary).table("impossibility_cells.csv", report.cells))
}

fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

/// Deterministic points in `R^m` spread over radii up to `3 sqrt(b)`.
fn probe_points(m: usize, count: usize, b: f64) -> Vec<DVector<f64>> {
    (0..count)
        .map(|i| {
            let r = 3.0 * b.sqrt() * (i as f64 + 0.5) / count as f64;
            let mut u = DVector::from_fn(m, |j, _| (1.618_033_988_749_895 * ((i + 1) * (j + 2)) as f64 + j as f64).sin());
            if u.norm() < 1e-3 {
                u[0] = 1.0;
            }
            let scale = r / u.norm();
            u * scale
        })
        .collect()
}

fn fd_jacobian_det(map: &ShrinkMap, x: &DVector<f64>) -> f64 {
    let m = x.len();
    let eps = 1e-5 * x.norm().max(1.0);
    let mut j = DMatrix::zeros(m, m);
    for l in 0..m {
        let mut plus = x.clone();
        let mut minus = x.clone();
        plus[l] += eps;
        minus[l] -= eps;
        j.set_column(l, &((map.forward(&plus) - map.forward(&minus)) / (2.0 * eps)));
    }
    j.determinant()
}

pub fn check_transform(c: &CheckTransformConfig, _ctx: &Context) -> CliResult<Outputs> {
    if c.zeta_count == 0 || !(c.zeta_min > 0.0 && c.zeta_min <= c.zeta_max && c.zeta_max.is_finite()) {
        return invalid("need zeta_count >= 1 and 0 < zeta_min <= zeta_max < inf");
    }
    if c.jacobian_dims.iter().any(|&m| m == 0) || c.k2s.iter().any(|&m| m == 0) {
        return invalid("dimensions must be positive");
    }
    let zetas = log_spaced(c.zeta_min, c.zeta_max, c.zeta_count);
    let mut table = ResultTable::new(&["alpha", "sigma", "m", "check", "worst", "tolerance", "passed"]);
    let mut failed = [0usize; 3];
    for &alpha in &c.alphas {
        for &sigma in &c.sigmas {
            for &m in &c.k2s {
                let map = ShrinkMap::for_averaging(alpha, sigma, m)?;
                let mut worst_rt = 0.0f64;
                // smallest ln(g(z) - z); the gap itself underflows for large z
                let mut worst_gap = f64::INFINITY;
                let mut below = false;
                for &z in &zetas {
                    let g = map.g(z)?;
                    worst_rt = worst_rt.max((map.h(g)? - z).abs() / z.max(1.0));
                    worst_gap = worst_gap.min(map.ln_tail_gap(z)?);
                    below |= g < z;
                }
                let rt_ok = worst_rt <= c.roundtrip_tol;
                let gap_ok = !below && worst_gap > f64::NEG_INFINITY;
                failed[0] += usize::from(!rt_ok);
                failed[1] += usize::from(!gap_ok);
                table.push(vec![alpha.into(), sigma.into(), m.into(), "roundtrip".into(), worst_rt.into(), c.roundtrip_tol.into(), rt_ok.into()])?;
                table.push(vec![alpha.into(), sigma.into(), m.into(), "g_exceeds_identity".into(), worst_gap.into(), f64::NEG_INFINITY.into(), gap_ok.into()])?;
            }
            for &m in &c.jacobian_dims {
                let map = ShrinkMap::for_averaging(alpha, sigma, m)?;
                let worst = probe_points(m, c.jacobian_points, map.b())
                    .iter()
                    .map(|x| {
                        let exact = map.jacobian_det(x);
                        (fd_jacobian_det(&map, x) - exact).abs() / exact.abs()
                    })
                    .fold(0.0, f64::max);
                let ok = worst <= c.jacobian_rel_tol;
                failed[2] += usize::from(!ok);
                table.push(vec![alpha.into(), sigma.into(), m.into(), "jacobian".into(), worst.into(), c.jacobian_rel_tol.into(), ok.into()])?;
            }
        }
    }
    let checks = ["roundtrip", "g_exceeds_identity", "jacobian"]
        .iter()
        .zip(failed)
        .map(|(name, f)| Check::new(*name, f == 0, format!("{f} failing settings")))
        .collect();
    Ok(Outputs { checks, ..Outputs::default() }.table("check_transform.csv", table))
}

pub fn sweep(c: &ConsistencySweepConfig, ctx: &Context) -> CliResult<Outputs> {
    let m_grid = match &c.m_grid {
        Some(m) => m.clone(),
        None => {
            let q = c.design.q()?;
            let inv = q.clone().try_inverse().ok_or_else(|| crate::error::CliError::Validation("Q is singular".into()))?;
            vec![1.0, 2.0, 5.0, 10.0 * c.sigma * inv.trace().sqrt()]
        }
    };
    let report = consistency_sweep(&c.design, c.sigma, c.alpha, &m_grid, &c.beta_grid, &c.n_ladder, c.draws, ctx.seed)?;
    let mut out = Outputs::default();
    out.checks.push(Check::new(
        "shrink_bound",
        report.bound_violations == 0,
        format!("{} of {} draws exceed the bound", report.bound_violations, report.total_draws),
    ));
    if let Some(limit) = c.checks.as_ref().and_then(|ch| ch.max_sup_tail) {
        let m_max = m_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ms = report.sup.column_f64("m").expect("m column");
        let p = report.sup.column_f64("sup_tail_prob").expect("tail column");
        let worst = ms.iter().zip(&p).filter(|(m, _)| **m == m_max).map(|(_, p)| *p).fold(0.0, f64::max);
        out.checks.push(Check::new("sup_tail", worst < limit, format!("{worst} at M = {m_max}")));
    }
    Ok(out.table("consistency_sup.csv", report.sup).table("consistency_cells.csv", report.cells))
}
