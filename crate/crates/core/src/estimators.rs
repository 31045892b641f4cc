//! Monte Carlo, importance sampling and L-BF-IS estimators, the end-to-end
//! pipeline, and the convergence-study harness.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::biasing::{normalizer_stream, BiasingModel, LfPool};
use crate::error::{Error, Result};
use crate::mala::{self, ChainOutput, MalaConfig, Subset};
use crate::problem::{LedgerSnapshot, ProblemSpec};
use crate::real::Real;
use crate::rng::{derive_seed, Stream};
use crate::samples::SampleMatrix;
use crate::tuning::{self, Approach, EllSweep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Mc,
    LfOnly,
    Lbfis,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Mc => "mc",
            Method::LfOnly => "lf-only",
            Method::Lbfis => "lbfis",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [Method::Mc, Method::LfOnly, Method::Lbfis]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub method: Method,
    pub value: f64,
    pub n_hf: usize,
    pub n_lf: usize,
    pub ell: Option<f64>,
    pub zhat: Option<f64>,
    pub seed: u64,
    pub replicates: Option<Vec<f64>>,
}

fn indicator<T: Real>(h: T) -> T {
    if h < T::zero() {
        T::one()
    } else {
        T::zero()
    }
}

/// `(1/N) Σ 1{h_HF(z_i) < 0}` over `n` draws from `p`; exactly `n` HF evaluations.
pub fn mc_estimate<T: Real>(problem: &ProblemSpec<T>, n: usize, seed: u64) -> Result<EstimateReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("Monte Carlo needs n >= 1".into()));
    }
    let stream = Stream::new(seed).tagged("mc");
    let d = problem.dim();
    let hits = (0..n)
        .into_par_iter()
        .map_init(
            || vec![T::zero(); d],
            |z, i| {
                problem.reference().sample_row(&stream, i, z);
                Ok((problem.hf_eval(z)? < T::zero()) as usize)
            },
        )
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(EstimateReport {
        method: Method::Mc,
        value: hits as f64 / n as f64,
        n_hf: n,
        n_lf: 0,
        ell: None,
        zhat: None,
        seed,
        replicates: None,
    })
}

/// Fraction of `m` reference draws with `h_LF < 0`; no HF cost.
pub fn lf_only_estimate<T: Real>(problem: &ProblemSpec<T>, m: usize, seed: u64) -> Result<EstimateReport> {
    if m == 0 {
        return Err(Error::InvalidParameter("LF-only estimate needs m >= 1".into()));
    }
    let pool = LfPool::build(problem, Stream::new(seed).tagged("lf-only"), m)?;
    Ok(EstimateReport {
        method: Method::LfOnly,
        value: pool.lf_failure_fraction().to_f64_lossy(),
        n_hf: 0,
        n_lf: m,
        ell: None,
        zhat: None,
        seed,
        replicates: None,
    })
}

/// Importance sampling with given weights `p/q` at draws from `q`.
pub fn is_estimate<T: Real>(problem: &ProblemSpec<T>, samples: &SampleMatrix<T>, weights: &[T]) -> Result<T> {
    if samples.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: samples.len(), actual: weights.len() });
    }
    if samples.is_empty() {
        return Err(Error::InvalidParameter("importance sampling needs at least one draw".into()));
    }
    let s = (0..samples.len())
        .into_par_iter()
        .map(|i| Ok(indicator(problem.hf_eval(samples.row(i))?) * weights[i]))
        .collect::<Result<Vec<T>>>()?;
    Ok(s.into_iter().sum::<T>() / T::from_usize_lossy(samples.len()))
}

/// HF values at the subset rows; exactly `subset.len()` HF evaluations.
fn subset_hf<T: Real>(b: &BiasingModel<T>, subset: &Subset<T>) -> Result<Vec<T>> {
    if subset.samples.is_empty() {
        return Err(Error::InvalidParameter("L-BF-IS needs N >= 1".into()));
    }
    (0..subset.samples.len()).into_par_iter().map(|i| b.problem().hf_eval(subset.samples.row(i))).collect()
}

fn lbfis_from_hf<T: Real>(b: &BiasingModel<T>, lf: &[T], hf: &[T]) -> Result<T> {
    let z_hat = b.zhat()?;
    let ell = b.ell();
    let s: T = lf.iter().zip(hf).map(|(&l, &h)| indicator(h) * (ell * l.tanh()).exp()).sum();
    Ok(z_hat * s / T::from_usize_lossy(hf.len()))
}

/// L-BF-IS on a given subset, LF values taken from the chain cache.
/// Exactly `subset.len()` HF evaluations.
pub fn lbfis_from_subset<T: Real>(b: &BiasingModel<T>, subset: &Subset<T>) -> Result<T> {
    b.zhat()?;
    let hf = subset_hf(b, subset)?;
    lbfis_from_hf(b, &subset.lf_values, &hf)
}

/// One HF-evaluated chain state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluatedDraw {
    /// Row in the pooled chain output.
    pub index: usize,
    pub z: Vec<f64>,
    pub lf: f64,
    pub hf: f64,
    /// `p/q` at this state.
    pub weight: f64,
}

/// `Ẑ (1/N) Σ 1{h_HF < 0} exp(ℓ tanh h_LF)` over `n` chain states chosen
/// uniformly without replacement.
pub fn lbfis_estimate<T: Real>(b: &BiasingModel<T>, chain: &ChainOutput<T>, n: usize, seed: u64) -> Result<EstimateReport> {
    let zhat = b.zhat()?;
    let subset = mala::subselect(chain, n, &subset_stream(seed))?;
    let value = lbfis_from_subset(b, &subset)?;
    Ok(EstimateReport {
        method: Method::Lbfis,
        value: value.to_f64_lossy(),
        n_hf: n,
        n_lf: 0,
        ell: Some(b.ell().to_f64_lossy()),
        zhat: Some(zhat.to_f64_lossy()),
        seed,
        replicates: None,
    })
}

fn subset_stream(seed: u64) -> Stream {
    Stream::new(seed).tagged("subset")
}

/// `√(mean((P̂ - P_f)²)) / P_f`.
pub fn rrmse(estimates: &[f64], pf_ref: f64) -> Result<f64> {
    if !(pf_ref > 0.0) {
        return Err(Error::ZeroFailureProbability);
    }
    if estimates.is_empty() {
        return Err(Error::InvalidParameter("rRMSE of an empty set".into()));
    }
    let mse = estimates.iter().map(|e| (e - pf_ref).powi(2)).sum::<f64>() / estimates.len() as f64;
    Ok(mse.sqrt() / pf_ref)
}

/// Linear-interpolation quantile of unsorted data.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum EllChoice {
    Fixed { ell: f64 },
    Tuned { method: Approach, grid: Vec<f64>, pilot_l: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LbfisConfig {
    pub ell: EllChoice,
    /// Reference draws for `Ẑ` (shared with tuning and resampled initial states).
    pub m: usize,
    /// HF evaluations in the estimator.
    pub n: usize,
    /// Chain settings; the seed field is replaced by one derived from the run seed.
    pub mala: MalaConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct LbfisRun {
    pub report: EstimateReport,
    pub sweep: Option<EllSweep>,
    pub acceptance_rate: Vec<f64>,
    pub nan_rejections: usize,
    pub lf_failure_fraction: f64,
    pub ledger: LedgerSnapshot,
    #[serde(skip)]
    pub draws: Vec<EvaluatedDraw>,
}

/// Seeds used by one pipeline run.
#[derive(Debug, Clone, Copy)]
pub struct RunSeeds {
    pub pool: u64,
    pub mala: u64,
    pub subset: u64,
}

impl RunSeeds {
    pub fn from_master(seed: u64) -> Self {
        Self { pool: seed, mala: derive_seed(seed, 1), subset: derive_seed(seed, 2) }
    }
}

/// Tuning (optional), normalizer, chains, subset and HF evaluations, on a
/// private ledger. HF cost is `N + L`, LF cost at most `M + C(B + T + 1)`.
pub fn run_lbfis<T: Real>(problem: &ProblemSpec<T>, cfg: &LbfisConfig, seed: u64) -> Result<LbfisRun> {
    let problem = problem.with_fresh_ledger();
    let seeds = RunSeeds::from_master(seed);
    if cfg.m == 0 {
        return Err(Error::InvalidParameter("M must be >= 1".into()));
    }
    let pool = Arc::new(LfPool::build(&problem, normalizer_stream(seeds.pool), cfg.m)?);
    let (ell, sweep) = match &cfg.ell {
        EllChoice::Fixed { ell } => (*ell, None),
        EllChoice::Tuned { method, grid, pilot_l } => {
            let (curve, failures) = tuning::sweep_pool(&problem, &pool, *method, grid, *pilot_l)?;
            let s = tuning::summarize_sweep(*method, grid, &[curve], failures)?;
            (s.ell_star, Some(s))
        }
    };
    let mut b = BiasingModel::new(problem.clone(), T::lit(ell))?;
    b.use_pool(pool.clone(), seeds.pool)?;
    let mcfg = MalaConfig { seed: seeds.mala, ..cfg.mala.clone() };
    let chain = mala::run(&b, &mcfg)?;
    let subset = mala::subselect(&chain, cfg.n, &subset_stream(seeds.subset))?;
    let hf = subset_hf(&b, &subset)?;
    let value = lbfis_from_hf(&b, &subset.lf_values, &hf)?;
    let draws = (0..subset.indices.len())
        .map(|i| {
            Ok(EvaluatedDraw {
                index: subset.indices[i],
                z: subset.samples.row(i).iter().map(|x| x.to_f64_lossy()).collect(),
                lf: subset.lf_values[i].to_f64_lossy(),
                hf: hf[i].to_f64_lossy(),
                weight: b.weight_from_lf(subset.lf_values[i])?.to_f64_lossy(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = EstimateReport {
        method: Method::Lbfis,
        value: value.to_f64_lossy(),
        n_hf: cfg.n,
        n_lf: 0,
        ell: Some(ell),
        zhat: Some(b.zhat()?.to_f64_lossy()),
        seed,
        replicates: None,
    };
    let ledger = problem.ledger();
    report.n_lf = ledger.lf_count as usize;
    report.n_hf = ledger.hf_count as usize;
    Ok(LbfisRun {
        report,
        sweep,
        acceptance_rate: chain.acceptance_rate.clone(),
        nan_rejections: chain.nan_rejections,
        lf_failure_fraction: pool.lf_failure_fraction().to_f64_lossy(),
        ledger,
        draws,
    })
}

// ---------------------------------------------------------------------------
// Convergence study
// ---------------------------------------------------------------------------

/// How L-BF-IS replicates obtain chain samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReplicateMode {
    /// New normalizer pool and chains per trial.
    Fresh,
    /// One pool and one chain run per study; disjoint subsets per trial.
    Pooled,
    /// Pooled when the chains hold `trials · max N` states, else fresh.
    #[default]
    Auto,
}

pub const DEFAULT_N_GRID: [usize; 10] = [10, 21, 46, 100, 215, 464, 1000, 2154, 4641, 10000];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub mode: ReplicateMode,
    pub ell: f64,
    pub m: usize,
    pub mala: MalaConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub method: Method,
    pub n: usize,
    pub trial: usize,
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: Method,
    pub n: usize,
    pub mean: f64,
    pub rrmse: f64,
    pub lo95: f64,
    pub hi95: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub pf_ref: f64,
    pub mode: ReplicateMode,
    pub trials: Vec<TrialRow>,
    pub summary: Vec<SummaryRow>,
    pub mean_acceptance: Option<f64>,
}

impl ConvergenceStudy {
    pub fn cell(&self, method: Method, n: usize) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.method == method && r.n == n)
    }

    pub fn estimates(&self, method: Method, n: usize) -> Vec<f64> {
        self.trials.iter().filter(|r| r.method == method && r.n == n).map(|r| r.estimate).collect()
    }
}

fn check_study(cfg: &StudyConfig) -> Result<()> {
    if cfg.n_grid.is_empty() || cfg.n_grid.contains(&0) || cfg.n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("n_grid must be non-empty, positive and strictly increasing".into()));
    }
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    if cfg.methods.is_empty() {
        return Err(Error::InvalidParameter("no methods selected".into()));
    }
    Ok(())
}

pub fn resolve_mode(cfg: &StudyConfig) -> ReplicateMode {
    let n_max = cfg.n_grid.last().copied().unwrap_or(0);
    let pooled_room = cfg.mala.chains * cfg.mala.iters;
    match cfg.mode {
        ReplicateMode::Auto if pooled_room >= cfg.trials * n_max => ReplicateMode::Pooled,
        ReplicateMode::Auto => ReplicateMode::Fresh,
        m => m,
    }
}

struct TrialOutcome {
    lbfis: Vec<f64>,
    lf_only: Option<f64>,
    acceptance: f64,
}

fn fresh_trial<T: Real>(problem: &ProblemSpec<T>, cfg: &StudyConfig, seed: u64) -> Result<TrialOutcome> {
    let seeds = RunSeeds::from_master(seed);
    let pool = Arc::new(LfPool::build(problem, normalizer_stream(seeds.pool), cfg.m)?);
    let lf_only = Some(pool.lf_failure_fraction().to_f64_lossy());
    if !cfg.methods.contains(&Method::Lbfis) {
        return Ok(TrialOutcome { lbfis: Vec::new(), lf_only, acceptance: f64::NAN });
    }
    let mut b = BiasingModel::new(problem.clone(), T::lit(cfg.ell))?;
    b.use_pool(pool, seeds.pool)?;
    let chain = mala::run(&b, &MalaConfig { seed: seeds.mala, ..cfg.mala.clone() })?;
    let lbfis = cfg
        .n_grid
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let subset = mala::subselect(&chain, n, &subset_stream(derive_seed(seeds.subset, k as u64)))?;
            Ok(lbfis_from_subset(&b, &subset)?.to_f64_lossy())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialOutcome { lbfis, lf_only, acceptance: chain.mean_acceptance() })
}

/// Replicated MC, LF-only and L-BF-IS estimates over an `N` grid.
pub fn convergence_study<T: Real>(
    problem: &ProblemSpec<T>,
    cfg: &StudyConfig,
    pf_ref: f64,
    seed: u64,
) -> Result<ConvergenceStudy> {
    check_study(cfg)?;
    if !(pf_ref > 0.0) {
        return Err(Error::ZeroFailureProbability);
    }
    let mode = resolve_mode(cfg);
    let n_max = *cfg.n_grid.last().unwrap();
    let mc_seed = derive_seed(seed, 0x4D43);
    let lb_seed = derive_seed(seed, 0x4C42);
    let mut rows: Vec<TrialRow> = Vec::new();
    let mut mean_acceptance = None;

    if cfg.methods.contains(&Method::Mc) {
        let cells: Vec<(usize, usize)> =
            cfg.n_grid.iter().flat_map(|&n| (0..cfg.trials).map(move |t| (n, t))).collect();
        let est = cells
            .par_iter()
            .enumerate()
            .map(|(k, &(n, _))| mc_estimate(problem, n, derive_seed(mc_seed, k as u64)).map(|r| r.value))
            .collect::<Result<Vec<_>>>()?;
        rows.extend(cells.iter().zip(est).map(|(&(n, trial), estimate)| TrialRow { method: Method::Mc, n, trial, estimate }));
    }

    let want_lf = cfg.methods.contains(&Method::LfOnly);
    let want_lb = cfg.methods.contains(&Method::Lbfis);
    if want_lf || want_lb {
        let outcomes: Vec<TrialOutcome> = match mode {
            ReplicateMode::Pooled => {
                let seeds = RunSeeds::from_master(lb_seed);
                let pool = Arc::new(LfPool::build(problem, normalizer_stream(seeds.pool), cfg.m)?);
                let mut b = BiasingModel::new(problem.clone(), T::lit(cfg.ell))?;
                b.use_pool(pool, seeds.pool)?;
                let (chain, lbfis_rows) = if want_lb {
                    let chain = mala::run(&b, &MalaConfig { seed: seeds.mala, ..cfg.mala.clone() })?;
                    if chain.len() < cfg.trials * n_max {
                        return Err(Error::InsufficientSamples { requested: cfg.trials * n_max, available: chain.len() });
                    }
                    let order = mala::subselect(&chain, chain.len(), &subset_stream(seeds.subset))?.indices;
                    (Some(chain), order)
                } else {
                    (None, Vec::new())
                };
                mean_acceptance = chain.as_ref().map(|c| c.mean_acceptance());
                (0..cfg.trials)
                    .into_par_iter()
                    .map(|t| {
                        let lf_only = if want_lf {
                            Some(lf_only_estimate(problem, cfg.m, derive_seed(lb_seed, 1_000_000 + t as u64))?.value)
                        } else {
                            None
                        };
                        let lbfis = match &chain {
                            Some(chain) => cfg
                                .n_grid
                                .iter()
                                .map(|&n| {
                                    let idx = &lbfis_rows[t * n_max..t * n_max + n];
                                    let subset = Subset {
                                        samples: chain.samples.select(idx),
                                        lf_values: idx.iter().map(|&i| chain.lf_values[i]).collect(),
                                        indices: idx.to_vec(),
                                    };
                                    Ok(lbfis_from_subset(&b, &subset)?.to_f64_lossy())
                                })
                                .collect::<Result<Vec<_>>>()?,
                            None => Vec::new(),
                        };
                        Ok(TrialOutcome { lbfis, lf_only, acceptance: f64::NAN })
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            _ => {
                let o = (0..cfg.trials)
                    .into_par_iter()
                    .map(|t| fresh_trial(problem, cfg, derive_seed(lb_seed, t as u64)))
                    .collect::<Result<Vec<_>>>()?;
                if want_lb {
                    mean_acceptance = Some(o.iter().map(|x| x.acceptance).sum::<f64>() / o.len() as f64);
                }
                o
            }
        };
        if want_lf {
            for &n in &cfg.n_grid {
                for (t, o) in outcomes.iter().enumerate() {
                    rows.push(TrialRow { method: Method::LfOnly, n, trial: t, estimate: o.lf_only.unwrap() });
                }
            }
        }
        if want_lb {
            for (k, &n) in cfg.n_grid.iter().enumerate() {
                for (t, o) in outcomes.iter().enumerate() {
                    rows.push(TrialRow { method: Method::Lbfis, n, trial: t, estimate: o.lbfis[k] });
                }
            }
        }
    }

    let mut summary = Vec::new();
    for method in [Method::Mc, Method::LfOnly, Method::Lbfis] {
        if !cfg.methods.contains(&method) {
            continue;
        }
        for &n in &cfg.n_grid {
            let est: Vec<f64> = rows.iter().filter(|r| r.method == method && r.n == n).map(|r| r.estimate).collect();
            summary.push(SummaryRow {
                method,
                n,
                mean: est.iter().sum::<f64>() / est.len() as f64,
                rrmse: rrmse(&est, pf_ref)?,
                lo95: quantile(&est, 0.025),
                hi95: quantile(&est, 0.975),
            });
        }
    }
    Ok(ConvergenceStudy { pf_ref, mode, trials: rows, summary, mean_acceptance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{make_toy_bimodal, toy_pf};
    use crate::density::{CoordinateFactor, ReferenceDensity};
    use crate::mala::InitialState;
    use crate::problem::{ClosureModel, DomainBox};

    fn constant(c: f64) -> ProblemSpec<f64> {
        let p = ReferenceDensity::new(vec![CoordinateFactor::uniform(0.0, 1.0).unwrap()]).unwrap();
        let m = ClosureModel::new(1, move |_: &[f64]| c, |_: &[f64]| vec![0.0], move |_: &[f64]| c);
        ProblemSpec::new("c", p, m, DomainBox::unbounded(1)).unwrap()
    }

    #[test]
    fn mc_trivial_cases() {
        assert_eq!(mc_estimate(&constant(-1.0), 50, 1).unwrap().value, 1.0);
        assert_eq!(mc_estimate(&constant(1.0), 50, 1).unwrap().value, 0.0);
        assert!(mc_estimate(&constant(1.0), 0, 1).is_err());
    }

    #[test]
    fn mc_toy() {
        let spec = make_toy_bimodal::<f64>();
        let r = mc_estimate(&spec, 100_000, 5).unwrap();
        let pf = toy_pf();
        assert!((r.value - pf).abs() < 3.0 * (pf * (1.0 - pf) / 1e5).sqrt());
        assert_eq!(spec.ledger().hf_count, 100_000);
    }

    #[test]
    fn rrmse_examples() {
        assert_eq!(rrmse(&[0.2, 0.2], 0.2).unwrap(), 0.0);
        assert!((rrmse(&[0.4], 0.2).unwrap() - 1.0).abs() < 1e-12);
        assert!((rrmse(&[0.0, 0.4], 0.2).unwrap() - 1.0).abs() < 1e-12);
        assert!(rrmse(&[0.1], 0.0).is_err());
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5), 2.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.25), 1.25);
    }

    #[test]
    fn lbfis_with_zero_ell_matches_mc_on_same_points() {
        let spec = make_toy_bimodal::<f64>();
        let mut b = BiasingModel::new(spec.clone(), 0.0).unwrap();
        b.estimate_normalizer(10, 1).unwrap();
        let rows = spec.reference().sample(&Stream::new(2), 200);
        let lf: Vec<f64> = rows.rows().map(|z| spec.lf_eval(z).unwrap()).collect();
        let subset = Subset { indices: (0..200).collect(), samples: rows.clone(), lf_values: lf };
        let a = lbfis_from_subset(&b, &subset).unwrap();
        let mc = rows.rows().filter(|z| spec.hf_eval(z).unwrap() < 0.0).count() as f64 / 200.0;
        assert!((a - mc).abs() < 1e-15);
        let w = vec![1.0; 200];
        assert!((is_estimate(&spec, &rows, &w).unwrap() - mc).abs() < 1e-15);
    }

    #[test]
    fn pipeline_budget() {
        let spec = make_toy_bimodal::<f64>();
        let cfg = LbfisConfig {
            ell: EllChoice::Tuned { method: Approach::One, grid: vec![1.0, 5.0, 10.0], pilot_l: 30 },
            m: 5000,
            n: 40,
            mala: MalaConfig::new(0.05, 50, 20, 5, 0).with_init(InitialState::Resample),
        };
        let r = run_lbfis(&spec, &cfg, 7).unwrap();
        assert_eq!(r.ledger.hf_count, 70);
        assert!(r.ledger.lf_count as usize <= 5000 + 5 * (50 + 20 + 1));
        assert!(r.report.value >= 0.0);
        let again = run_lbfis(&spec, &cfg, 7).unwrap();
        assert_eq!(r.report, again.report);
    }

    #[test]
    fn study_shapes_and_modes() {
        let spec = make_toy_bimodal::<f64>();
        let mut cfg = StudyConfig {
            n_grid: vec![10, 20],
            trials: 6,
            methods: vec![Method::Mc, Method::LfOnly, Method::Lbfis],
            mode: ReplicateMode::Auto,
            ell: 5.0,
            m: 2000,
            mala: MalaConfig::new(0.05, 50, 20, 10, 0).with_init(InitialState::Resample),
        };
        assert_eq!(resolve_mode(&cfg), ReplicateMode::Pooled);
        let s = convergence_study(&spec, &cfg, toy_pf(), 3).unwrap();
        assert_eq!(s.trials.len(), 2 * 6 * 3);
        assert_eq!(s.summary.len(), 6);
        cfg.mode = ReplicateMode::Fresh;
        let f = convergence_study(&spec, &cfg, toy_pf(), 3).unwrap();
        assert_eq!(f.mode, ReplicateMode::Fresh);
        assert_eq!(f.estimates(Method::Mc, 10), s.estimates(Method::Mc, 10));
        cfg.n_grid = vec![5, 5];
        assert!(convergence_study(&spec, &cfg, toy_pf(), 3).is_err());
    }
}
