//! TOML experiment configs, one struct per subcommand. Unknown keys are
//! rejected everywhere; every numeric field is validated before it feeds
//! the library.

use crate::error::{invalid, CliError, CliResult};
use crate::input::{read_matrix, read_rows};
use modavg::cdf_estimation::DEFAULT_RADII;
use modavg::convergence::DEFAULT_L1_CELLS;
use modavg::{AsymptoticLaw, AveragingConfig, DesignRule, FiniteSampleLaw, Gamma, LimitDesign, ModelSelector, PartitionedDesign, PathRule};
use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use std::path::{Path, PathBuf};

pub fn parse<T: DeserializeOwned>(text: &str, origin: &str) -> CliResult<T> {
    toml::from_str(text).map_err(|e| CliError::Validation(format!("{origin}: {e}")))
}

fn matrix(rows: &[Vec<f64>], what: &str) -> CliResult<DMatrix<f64>> {
    let r = rows.len();
    if r == 0 || rows.iter().any(|row| row.len() != rows[0].len()) {
        return invalid(format!("{what} must be a non-empty rectangular matrix"));
    }
    Ok(DMatrix::from_fn(r, rows[0].len(), |i, j| rows[i][j]))
}

fn finite(values: &[f64], what: &str) -> CliResult<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return invalid(format!("{what} must be finite"));
    }
    Ok(())
}

fn identity2() -> Vec<Vec<f64>> {
    vec![vec![1.0, 0.0], vec![0.0, 1.0]]
}

fn default_rule() -> DesignRule {
    DesignRule::ExactGram { q: identity2(), k1: 1 }
}

fn one() -> f64 {
    1.0
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// A single design matrix: read from CSV or built by a synthetic rule.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignSource {
    Csv { path: PathBuf, k1: usize },
    ExactGram { q: Vec<Vec<f64>>, k1: usize, n: usize },
    Perturbed { q: Vec<Vec<f64>>, k1: usize, perturbation: Vec<Vec<f64>>, rate: f64, n: usize },
}

impl DesignSource {
    /// Relative CSV paths are taken relative to `base`, the config directory.
    pub fn load(&self, base: &Path) -> CliResult<PartitionedDesign> {
        Ok(match self {
            DesignSource::Csv { path, k1 } => PartitionedDesign::new(read_matrix(&resolve(base, path))?, *k1)?,
            DesignSource::ExactGram { q, k1, n } => DesignRule::ExactGram { q: q.clone(), k1: *k1 }.build(*n)?,
            DesignSource::Perturbed { q, k1, perturbation, rate, n } => {
                DesignRule::Perturbed { q: q.clone(), k1: *k1, perturbation: perturbation.clone(), rate: *rate }.build(*n)?
            }
        })
    }
}

/// `gamma = [..]` or `gamma = "infinity"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    Finite(Vec<f64>),
    Named(String),
}

impl GammaSpec {
    pub fn resolve(&self) -> CliResult<Gamma> {
        match self {
            GammaSpec::Finite(v) => {
                finite(v, "gamma")?;
                Ok(Gamma::finite(v))
            }
            GammaSpec::Named(s) if s == "infinity" => Ok(Gamma::AtInfinity),
            GammaSpec::Named(s) => invalid(format!("gamma must be a list of numbers or \"infinity\", got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawSpec {
    /// Exact law of `sqrt(n) (beta_tilde - beta)`.
    Finite { design: DesignSource, beta: Vec<f64> },
    /// Limit law for `X'X / n -> Q`.
    Asymptotic { q: Vec<Vec<f64>>, k1: usize, gamma: GammaSpec },
}

pub enum BuiltLaw {
    Finite(FiniteSampleLaw),
    Asymptotic(AsymptoticLaw),
}

impl BuiltLaw {
    pub fn as_law(&self) -> &dyn modavg::Law {
        match self {
            BuiltLaw::Finite(l) => l,
            BuiltLaw::Asymptotic(l) => l,
        }
    }
}

impl LawSpec {
    pub fn build(&self, base: &Path, cfg: &AveragingConfig) -> CliResult<BuiltLaw> {
        Ok(match self {
            LawSpec::Finite { design, beta } => {
                finite(beta, "beta")?;
                BuiltLaw::Finite(FiniteSampleLaw::new(&design.load(base)?, &DVector::from_column_slice(beta), cfg)?)
            }
            LawSpec::Asymptotic { q, k1, gamma } => {
                let limit = LimitDesign::new(matrix(q, "q")?, *k1)?;
                BuiltLaw::Asymptotic(AsymptoticLaw::new(&limit, gamma.resolve()?, cfg.sigma, cfg.alpha)?)
            }
        })
    }
}

/// A rectangular grid, first axis outermost in the output.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub points: Vec<usize>,
}

pub const MAX_GRID_POINTS: usize = 10_000_000;

impl GridSpec {
    pub fn axes(&self, k: usize) -> CliResult<Vec<Vec<f64>>> {
        if self.lo.len() != k || self.hi.len() != k || self.points.len() != k {
            return invalid(format!("grid lo, hi and points need length k = {k}"));
        }
        finite(&self.lo, "grid lo")?;
        finite(&self.hi, "grid hi")?;
        let mut total = 1usize;
        let mut axes = Vec::with_capacity(k);
        for j in 0..k {
            let (lo, hi, m) = (self.lo[j], self.hi[j], self.points[j]);
            if m == 0 || (m == 1 && lo != hi) || (m > 1 && !(lo < hi)) {
                return invalid(format!("grid axis {}: need lo < hi and points >= 2, or lo = hi and points = 1", j + 1));
            }
            total = total.saturating_mul(m);
            axes.push(if m == 1 { vec![lo] } else { (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect() });
        }
        if total > MAX_GRID_POINTS {
            return invalid(format!("grid has {total} points, limit is {MAX_GRID_POINTS}"));
        }
        Ok(axes)
    }

    pub fn points(&self, k: usize) -> CliResult<Vec<Vec<f64>>> {
        let axes = self.axes(k)?;
        let mut out: Vec<Vec<f64>> = vec![Vec::new()];
        for axis in &axes {
            out = out.iter().flat_map(|p| axis.iter().map(move |&x| [p.as_slice(), &[x]].concat())).collect();
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ResponseSource {
    /// One response vector per row.
    Csv { path: PathBuf },
    /// `Y = X beta + sigma u`, one vector per replication.
    Simulated { beta: Vec<f64>, replications: usize },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub alpha: f64,
    pub sigma: f64,
    pub design: DesignSource,
    pub data: ResponseSource,
}

impl ResponseSource {
    pub fn responses(&self, base: &Path, design: &PartitionedDesign, sigma: f64, seed: u64) -> CliResult<Vec<DVector<f64>>> {
        match self {
            ResponseSource::Csv { path } => {
                let rows = read_rows(&resolve(base, path))?;
                if rows[0].len() != design.n() {
                    return invalid(format!("responses have length {}, design has n = {}", rows[0].len(), design.n()));
                }
                Ok(rows.into_iter().map(DVector::from_vec).collect())
            }
            ResponseSource::Simulated { beta, replications } => {
                finite(beta, "beta")?;
                if beta.len() != design.k() {
                    return invalid(format!("beta has length {}, design has k = {}", beta.len(), design.k()));
                }
                if *replications == 0 {
                    return invalid("replications must be positive");
                }
                let mean = design.x() * DVector::from_column_slice(beta);
                let stream = modavg::sampling::stream_id(&[RESPONSE_TAG]);
                Ok((0..*replications)
                    .map(|i| {
                        let mut rng = modavg::sampling::draw_rng(seed, stream, i as u64);
                        &mean + modavg::sampling::normals(&mut rng, sigma, design.n())
                    })
                    .collect())
            }
        }
    }
}

const RESPONSE_TAG: u64 = 41;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub alpha: f64,
    pub sigma: f64,
    pub law: LawSpec,
    pub grid: GridSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CdfMethodSpec {
    Quadrature {
        #[serde(default = "default_abs_tol")]
        abs_tol: f64,
        #[serde(default = "default_rel_tol")]
        rel_tol: f64,
    },
    MonteCarlo { draws: usize },
}

fn default_abs_tol() -> f64 {
    1e-10
}
fn default_rel_tol() -> f64 {
    1e-9
}

impl Default for CdfMethodSpec {
    fn default() -> Self {
        CdfMethodSpec::Quadrature { abs_tol: default_abs_tol(), rel_tol: default_rel_tol() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CdfConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub alpha: f64,
    pub sigma: f64,
    pub law: LawSpec,
    pub points: Option<Vec<Vec<f64>>>,
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub method: CdfMethodSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepresentationSpec {
    DataLevel,
    RootRep,
    ChiRep,
    Asymptotic,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub alpha: f64,
    pub sigma: f64,
    pub law: LawSpec,
    pub representation: RepresentationSpec,
    pub draws: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderChecks {
    /// Require `L1` to be non-increasing up to twice the largest tail bound.
    #[serde(default)]
    pub non_increasing: bool,
    /// Require the last rung to be below this value.
    pub final_below: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaDegenerationSpec {
    pub gammas: Vec<Vec<f64>>,
    /// Require the last value to be below this.
    pub final_below: Option<f64>,
}

fn default_cells() -> usize {
    DEFAULT_L1_CELLS
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct L1LadderConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub alpha: f64,
    pub sigma: f64,
    pub design: DesignRule,
    pub path: PathRule,
    pub n_ladder: Vec<usize>,
    #[serde(default = "default_cells")]
    pub cells: usize,
    pub box_lo: Option<Vec<f64>>,
    pub box_hi: Option<Vec<f64>>,
    pub checks: Option<LadderChecks>,
    pub gamma_degeneration: Option<GammaDegenerationSpec>,
}

fn default_t_list() -> Vec<Vec<f64>> {
    vec![vec![0.0, -1.0], vec![0.0, 0.0], vec![0.0, 1.0]]
}
fn default_gamma_radius() -> f64 {
    5.0
}
fn default_osc_half_points() -> usize {
    250
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillationConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default = "identity2")]
    pub q: Vec<Vec<f64>>,
    #[serde(default = "one_usize")]
    pub k1: usize,
    #[serde(default = "default_t_list")]
    pub t: Vec<Vec<f64>>,
    #[serde(default = "default_gamma_radius")]
    pub gamma_radius: f64,
    #[serde(default = "default_osc_half_points")]
    pub half_points: usize,
}

fn one_usize() -> usize {
    1
}

impl Default for OscillationConfig {
    fn default() -> Self {
        parse("", "defaults").expect("all oscillation fields have defaults")
    }
}

impl OscillationConfig {
    pub fn limit(&self) -> CliResult<LimitDesign> {
        Ok(LimitDesign::new(matrix(&self.q, "q")?, self.k1)?)
    }
}

fn default_beta() -> Vec<f64> {
    vec![1.0, 0.0]
}
fn default_t() -> Vec<f64> {
    vec![0.0, 0.0]
}
fn default_impossibility_ladder() -> Vec<usize> {
    vec![50, 200, 800]
}
fn default_replications() -> usize {
    2000
}
fn default_impossibility_half_points() -> usize {
    10
}
fn default_radii() -> Vec<f64> {
    DEFAULT_RADII.to_vec()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpossibilityChecks {
    /// Require the worst-case error probability to reach this at every n.
    pub min_sup_error: Option<f64>,
    /// Require the centre error probability at the last n to be below this.
    pub max_final_center_error: Option<f64>,
    /// Require the centre error probability to be non-increasing in n.
    #[serde(default)]
    pub center_non_increasing: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpossibilityConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default = "default_rule")]
    pub design: DesignRule,
    #[serde(default = "default_beta")]
    pub beta: Vec<f64>,
    #[serde(default = "default_t")]
    pub t: Vec<f64>,
    #[serde(default = "default_impossibility_ladder")]
    pub n_ladder: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_impossibility_half_points")]
    pub half_points: usize,
    #[serde(default)]
    pub selector: ModelSelector,
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    /// Overrides the harness choice; must be given together with `delta0`.
    pub rho0: Option<f64>,
    pub delta0: Option<f64>,
    pub checks: Option<ImpossibilityChecks>,
}

fn default_alphas() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}
fn default_sigmas() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}
fn default_k2s() -> Vec<usize> {
    vec![1, 2]
}
fn default_zeta_count() -> usize {
    1000
}
fn default_zeta_min() -> f64 {
    1e-6
}
fn default_zeta_max() -> f64 {
    100.0
}
fn default_jacobian_dims() -> Vec<usize> {
    vec![1, 2, 3]
}
fn default_jacobian_points() -> usize {
    200
}
fn default_roundtrip_tol() -> f64 {
    1e-12
}
fn default_jacobian_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckTransformConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_sigmas")]
    pub sigmas: Vec<f64>,
    #[serde(default = "default_k2s")]
    pub k2s: Vec<usize>,
    #[serde(default = "default_zeta_count")]
    pub zeta_count: usize,
    #[serde(default = "default_zeta_min")]
    pub zeta_min: f64,
    #[serde(default = "default_zeta_max")]
    pub zeta_max: f64,
    #[serde(default = "default_jacobian_dims")]
    pub jacobian_dims: Vec<usize>,
    /// Points per `(alpha, sigma, m)` at which the Jacobian is compared.
    #[serde(default = "default_jacobian_points")]
    pub jacobian_points: usize,
    #[serde(default = "default_roundtrip_tol")]
    pub roundtrip_tol: f64,
    #[serde(default = "default_jacobian_tol")]
    pub jacobian_rel_tol: f64,
}

impl Default for CheckTransformConfig {
    fn default() -> Self {
        parse("", "defaults").expect("all check-transform fields have defaults")
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepChecks {
    /// Require the supremum tail probability at the largest M below this.
    pub max_sup_tail: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsistencySweepConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub alpha: f64,
    pub sigma: f64,
    #[serde(default = "default_rule")]
    pub design: DesignRule,
    pub n_ladder: Vec<usize>,
    pub beta_grid: Vec<Vec<f64>>,
    /// Defaults to `1, 2, 5` and `10 sigma sqrt(trace(Q^-1))`.
    pub m_grid: Option<Vec<f64>>,
    pub draws: usize,
    pub checks: Option<SweepChecks>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse::<OscillationConfig>("alpha = 1.0\nbogus = 2\n", "cfg").unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
        let err = parse::<SampleConfig>(
            "alpha = 1\nsigma = 1\ndraws = 5\nrepresentation = \"root_rep\"\n[law]\nkind = \"finite\"\nbeta = [1, 0]\n[law.design]\nkind = \"exact_gram\"\nq = [[1, 0], [0, 1]]\nk1 = 1\nn = 20\nextra = 1\n",
            "cfg",
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("extra"), "{err}");
    }

    #[test]
    fn nested_law_config_parses() {
        let cfg: SampleConfig = parse(
            "alpha = 1\nsigma = 1\ndraws = 5\nrepresentation = \"root_rep\"\n[law]\nkind = \"finite\"\nbeta = [1, 0]\n[law.design]\nkind = \"exact_gram\"\nq = [[1, 0], [0, 1]]\nk1 = 1\nn = 20\n",
            "cfg",
        )
        .unwrap();
        assert_eq!(cfg.representation, RepresentationSpec::RootRep);
        let a: DensityConfig =
            parse("alpha = 1\nsigma = 1\n[law]\nkind = \"asymptotic\"\nq = [[1, 0], [0, 1]]\nk1 = 1\ngamma = \"infinity\"\n[grid]\nlo = [-1, -1]\nhi = [1, 1]\npoints = [3, 3]\n", "cfg")
                .unwrap();
        let law = a.law.build(Path::new("."), &AveragingConfig::new(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(law.as_law().dim(), 2);
        assert_eq!(a.grid.points(2).unwrap().len(), 9);
        let bad = parse::<DensityConfig>("alpha = 1\nsigma = 1\n[law]\nkind = \"asymptotic\"\nq = [[1, 0], [0, 1]]\nk1 = 1\ngamma = \"huge\"\n[grid]\nlo = [0]\nhi = [1]\npoints = [2]\n", "cfg").unwrap();
        assert!(bad.law.build(Path::new("."), &AveragingConfig::new(1.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn grid_order_and_validation() {
        let g = GridSpec { lo: vec![0.0, 10.0], hi: vec![1.0, 20.0], points: vec![2, 3] };
        let p = g.points(2).unwrap();
        assert_eq!(p[0], vec![0.0, 10.0]);
        assert_eq!(p[1], vec![0.0, 15.0]);
        assert_eq!(p[3], vec![1.0, 10.0]);
        assert!(GridSpec { lo: vec![1.0], hi: vec![0.0], points: vec![5] }.points(1).is_err());
        assert!(GridSpec { lo: vec![0.5], hi: vec![0.5], points: vec![1] }.points(1).is_ok());
        assert!(g.points(3).is_err());
    }

    #[test]
    fn defaults_fill_every_field() {
        let o = OscillationConfig::default();
        assert_eq!(o.t.len(), 3);
        assert_eq!(o.gamma_radius, 5.0);
        let c = CheckTransformConfig::default();
        assert_eq!(c.zeta_count, 1000);
        let i: ImpossibilityConfig = parse("", "cfg").unwrap();
        assert_eq!(i.n_ladder, vec![50, 200, 800]);
        assert_eq!(i.selector, ModelSelector::default());
    }
}
