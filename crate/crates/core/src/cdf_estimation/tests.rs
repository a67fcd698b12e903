use super::*;
use crate::design::cosine_basis;
use nalgebra::DMatrix;

fn cfg() -> AveragingConfig {
    AveragingConfig::new(1.0, 1.0).unwrap()
}

fn identity_rule() -> DesignRule {
    DesignRule::exact(&DMatrix::identity(2, 2), 1)
}

fn identity_limit() -> LimitDesign {
    LimitDesign::new(DMatrix::identity(2, 2), 1).unwrap()
}

/// `g` by plain bisection on `h`, independent of the library's Newton solver.
fn bisect_g(alpha: f64, sigma: f64, y: f64) -> f64 {
    let a = (2.0 * alpha).exp();
    let b = sigma * sigma / alpha;
    let h = |x: f64| x / (1.0 + a * (-x * x / b).exp());
    let (mut lo, mut hi) = (y.abs(), (1.0 + a) * y.abs());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < y.abs() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).copysign(y)
}

fn oracle_cdf(t: [f64; 2], gamma: f64) -> f64 {
    std_normal_cdf(t[0]) * std_normal_cdf(bisect_g(1.0, 1.0, t[1] + gamma) - gamma)
}

fn draws_selecting(n: usize, beta2: f64, reps: usize, seed: u64, model: SelectedModel) -> usize {
    let design = identity_rule().build(n).unwrap();
    let mean = design.x() * DVector::from_vec(vec![1.0, beta2]);
    (0..reps)
        .filter(|&r| {
            let y = &mean + normals(&mut draw_rng(seed, 5, r as u64), 1.0, n);
            select_model(&design, &y, &cfg(), &ModelSelector::default()).unwrap() == model
        })
        .count()
}

#[test]
fn selector_validation() {
    assert!(ModelSelector::new(0.0, SelectorRule::Wald).is_err());
    assert!(ModelSelector::new(0.5, SelectorRule::Wald).is_err());
    assert!(ModelSelector::new(0.49, SelectorRule::TStatistic).is_ok());
    let d = PartitionedDesign::new(cosine_basis(10, 3), 1).unwrap();
    let s = ModelSelector::new(0.25, SelectorRule::TStatistic).unwrap();
    assert!(select_model(&d, &DVector::zeros(10), &cfg(), &s).is_err());
}

#[test]
fn restricted_fit_selects_restricted_model() {
    let d = identity_rule().build(50).unwrap();
    let y = d.x().column(0) * 3.0;
    assert_eq!(select_model(&d, &y, &cfg(), &ModelSelector::default()).unwrap(), SelectedModel::Restricted);
}

#[test]
fn t_statistic_is_root_wald_for_one_coefficient() {
    let d = identity_rule().build(40).unwrap();
    let y = DVector::from_fn(40, |i, _| (i as f64 * 0.37).sin());
    let w = ModelSelector::default().statistic(&d, &y, 1.3).unwrap();
    let t = ModelSelector::new(0.25, SelectorRule::TStatistic).unwrap().statistic(&d, &y, 1.3).unwrap();
    assert!((t * t - w).abs() < 1e-10 * w.max(1.0));
}

#[test]
fn large_beta2_selects_unrestricted() {
    // |beta2| = 10 sigma
    let hits = draws_selecting(200, 10.0, 10_000, 1, SelectedModel::Unrestricted);
    assert!(hits >= 9_900, "{hits}");
}

#[test]
fn restricted_selection_frequency_grows_with_n() {
    let freq: Vec<usize> = [50, 200, 800].iter().map(|&n| draws_selecting(n, 0.0, 10_000, 2, SelectedModel::Restricted)).collect();
    assert!(freq.windows(2).all(|w| w[0] <= w[1]) && freq[0] < freq[2], "{freq:?}");
}

#[test]
fn check_estimator_picks_the_matching_law() {
    let d = identity_rule().build(100).unwrap();
    let big = d.x() * DVector::from_vec(vec![0.0, 5.0]);
    let est = check_estimator(&d, &big, &cfg(), &ModelSelector::default()).unwrap();
    assert_eq!(est.selected_model(), SelectedModel::Unrestricted);
    assert_eq!(est.law().gamma(), &Gamma::AtInfinity);
    let t = [0.3, -0.2];
    let expected = (-0.5f64 * (0.09 + 0.04)).exp() / (2.0 * std::f64::consts::PI);
    assert!((est.density(&t).unwrap() - expected).abs() < 1e-12);

    let small = d.x().column(0).into_owned();
    let est = check_estimator(&d, &small, &cfg(), &ModelSelector::default()).unwrap();
    assert_eq!(est.selected_model(), SelectedModel::Restricted);
    assert!((est.cdf(&[50.0, 50.0]).unwrap() - 1.0).abs() < 1e-12);
    let again = check_estimator(&d, &small, &cfg(), &ModelSelector::default()).unwrap();
    assert_eq!(again.cdf(&[0.1, 0.2]).unwrap(), est.cdf(&[0.1, 0.2]).unwrap());
}

#[test]
fn fast_path_matches_quadrature_and_oracle() {
    let limit = identity_limit();
    for g in [0.0, 0.4, -1.3, 3.0] {
        let law = AsymptoticLaw::new(&limit, Gamma::finite(&[g]), 1.0, 1.0).unwrap();
        for t in [[0.0, 0.0], [0.5, -1.0], [-0.7, 1.2]] {
            let fast = asymptotic_cdf_at(&limit, &Gamma::finite(&[g]), 1.0, 1.0, &t).unwrap();
            let quad = cdf(&law, &t, &CdfMethod::default()).unwrap().value;
            assert!((fast - quad).abs() < 1e-8, "gamma {g}, t {t:?}: {fast} vs {quad}");
            assert!((fast - oracle_cdf(t, g)).abs() < 1e-12);
        }
    }
    let skew = LimitDesign::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]), 1).unwrap();
    let v = asymptotic_cdf_at(&skew, &Gamma::finite(&[0.5]), 1.0, 1.0, &[0.0, 0.0]).unwrap();
    let law = AsymptoticLaw::new(&skew, Gamma::finite(&[0.5]), 1.0, 1.0).unwrap();
    assert_eq!(v, cdf(&law, &[0.0, 0.0], &CdfMethod::default()).unwrap().value);
}

#[test]
fn limit_cdf_strict_inequalities() {
    let limit = identity_limit();
    let f = |t: [f64; 2], g: f64| asymptotic_cdf_at(&limit, &Gamma::finite(&[g]), 1.0, 1.0, &t).unwrap();
    for t2 in [0.1, 0.5, 1.0, 2.0] {
        assert!(f([0.0, t2], 0.0) > 0.5 * std_normal_cdf(t2));
    }
    for g in [0.1, 1.0, 3.0] {
        assert!(f([0.0, 0.0], g) > 0.5 * 0.5);
    }
    for t in [[0.0, -1.0], [0.3, 0.0], [-0.5, 1.0]] {
        let product = std_normal_cdf(t[0]) * std_normal_cdf(t[1]);
        for g in [-40.0, 40.0] {
            assert!((f(t, g) - product).abs() < 1e-3);
        }
        let at_inf = asymptotic_cdf_at(&limit, &Gamma::AtInfinity, 1.0, 1.0, &t).unwrap();
        assert!((at_inf - product).abs() < 1e-15);
    }
}

#[test]
fn oscillation_matches_oracle_and_grows_with_grid() {
    let limit = identity_limit();
    let grid = symmetric_grid(5.0, 100);
    let t = [0.0, 0.0];
    let osc = oscillation(&limit, 1.0, 1.0, &t, &grid).unwrap();
    let values: Vec<f64> = grid.iter().map(|&g| oracle_cdf(t, g)).collect();
    let (lo, hi) = values.iter().fold((1.0f64, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    assert!((osc.delta_star_half - 0.5 * (hi - lo)).abs() < 1e-12);
    assert!(osc.delta_star_half > 0.1);
    assert!(osc.gamma_at_min < 0.0 && osc.gamma_at_max > 0.0);

    let sub = oscillation(&limit, 1.0, 1.0, &t, &symmetric_grid(1.0, 20)).unwrap();
    assert!(sub.delta_star_half <= osc.delta_star_half);
    assert!(oscillation(&limit, 1.0, 1.0, &t, &[1.0, 2.0]).is_err());
}

#[test]
fn tiny_alpha_still_oscillates() {
    // As alpha -> 0, g(y) -> 2y, so F(0, gamma) -> Phi(0) Phi(gamma): the
    // oscillation over [-5, 5] approaches (Phi(5) - Phi(-5)) / 4.
    let limit = identity_limit();
    let osc = oscillation(&limit, 1.0, 1e-8, &[0.0, 0.0], &symmetric_grid(5.0, 100)).unwrap();
    let expected = 0.25 * (std_normal_cdf(5.0) - std_normal_cdf(-5.0));
    assert!((osc.delta_star_half - expected).abs() < 1e-6, "{}", osc.delta_star_half);
}

#[test]
fn constants_follow_the_harness_rule() {
    let c = choose_constants(&identity_limit(), 1.0, 1.0, &[0.0, 0.0], &DEFAULT_RADII).unwrap();
    assert_eq!(c.rho0, 0.25);
    assert!((c.delta0 - DELTA_FRACTION * c.delta_star_half).abs() < 1e-15);
    assert!(2.0 * c.delta_star_half >= MIN_OSCILLATION);
    let c1 = choose_constants(&identity_limit(), 1.0, 1.0, &[0.0, 1.0], &DEFAULT_RADII).unwrap();
    assert!(c1.rho0 > 0.25);
}

fn small_spec(delta0: f64) -> NonUniformitySpec {
    NonUniformitySpec {
        design_rule: identity_rule(),
        beta: vec![1.0, 0.0],
        sigma: 1.0,
        alpha: 1.0,
        t: vec![0.0, 0.0],
        rho0: 0.25,
        delta0,
        n_ladder: vec![50, 200],
        replications: 300,
        seed: 9,
        selector: ModelSelector::default(),
        half_points: 3,
    }
}

#[test]
fn experiment_rejects_delta_above_half_oscillation() {
    let err = non_uniformity_experiment(&small_spec(0.2)).unwrap_err();
    assert!(matches!(err, Error::Argument(_)));
    let mut off = small_spec(0.05);
    off.beta = vec![1.0, 0.1];
    assert!(non_uniformity_experiment(&off).is_err());
}

#[test]
fn small_experiment_has_expected_shape() {
    let report = non_uniformity_experiment(&small_spec(0.05)).unwrap();
    assert_eq!(report.cells.len(), 2 * 7);
    assert_eq!(report.summary.len(), 2);
    let sup = report.summary_column("sup_error_prob");
    let center = report.summary_column("center_error_prob");
    assert!(sup.iter().all(|&p| p > 0.5));
    assert!(center.iter().all(|&p| p < 0.1));
    let again = non_uniformity_experiment(&small_spec(0.05)).unwrap();
    assert_eq!(report, again);
    let thetas = report.cells.column_f64("theta2").unwrap();
    assert!(thetas.iter().all(|&t| t.abs() < 0.25 / 50f64.sqrt()));
}

#[test]
fn plug_in_estimator_is_consistent_at_fixed_beta() {
    let grid: Vec<Vec<f64>> = [-1.0, 0.0, 1.0]
        .iter()
        .flat_map(|&a| [-1.0, 0.0, 1.0].iter().map(move |&b| vec![a, b]))
        .collect();
    for b2 in [0.0, 0.5] {
        let table = sup_error_probability(&identity_rule(), &[1.0, b2], &cfg(), &ModelSelector::default(), &[50, 200, 800], &grid, 0.05, 4000, 3)
            .unwrap();
        let p = table.column_f64("sup_error_prob").unwrap();
        assert!(p.windows(2).all(|w| w[1] <= w[0] + 1e-12), "beta2 {b2}: {p:?}");
        assert!(p[2] < 0.05, "beta2 {b2}: {p:?}");
    }
}
