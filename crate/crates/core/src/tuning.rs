//! Lengthscale selection by grid search over small-sample variance proxies.
//!
//! Both proxies estimate the second moment of one L-BF-IS term (the `N` in the
//! variance is a constant factor and is set to 1):
//!
//! * approach one, `Ẑ(ℓ)/L Σ 1{h_HF(z_j) < 0} exp(ℓ tanh h_LF(z_j))` over `L`
//!   pilot HF evaluations;
//! * approach two, the same with the LF indicator over all `M` pool draws, at no
//!   HF cost.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::biasing::{normalizer_stream, LfPool};
use crate::error::{Error, Result};
use crate::problem::ProblemSpec;
use crate::real::Real;
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Approach {
    One,
    Two,
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Approach::One => "one",
            Approach::Two => "two",
        })
    }
}

impl FromStr for Approach {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" | "1" => Ok(Approach::One),
            "two" | "2" => Ok(Approach::Two),
            _ => Err(Error::InvalidParameter(format!("unknown tuning method '{s}', expected one or two"))),
        }
    }
}

/// `points` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || points == 0 {
        return Err(Error::InvalidParameter(format!("bad lengthscale grid [{lo}, {hi}] with {points} points")));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect())
}

/// 40 log-spaced points on [0.1, 10].
pub fn default_grid() -> Vec<f64> {
    log_grid(0.1, 10.0, 40).expect("static grid")
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("lengthscale grid is empty".into()));
    }
    if grid.iter().any(|&l| !(l > 0.0 && l.is_finite())) || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("lengthscale grid must be positive and strictly increasing".into()));
    }
    Ok(())
}

/// Approach-one proxy and the standard error of its pilot average.
pub fn variance_proxy_hf<T: Real>(ell: T, zhat: T, pilot_hf: &[T], pilot_lf: &[T]) -> (T, T) {
    let terms = pilot_hf.iter().zip(pilot_lf).map(|(&hf, &lf)| {
        if hf < T::zero() {
            (ell * lf.tanh()).exp()
        } else {
            T::zero()
        }
    });
    let (m, se) = crate::biasing::mean_and_se(terms, pilot_hf.len());
    (zhat * m, zhat * se)
}

/// Approach-two proxy and its standard error.
pub fn variance_proxy_lf<T: Real>(ell: T, zhat: T, lf: &[T]) -> (T, T) {
    let terms = lf.iter().map(|&h| if h < T::zero() { (ell * h.tanh()).exp() } else { T::zero() });
    let (m, se) = crate::biasing::mean_and_se(terms, lf.len());
    (zhat * m, zhat * se)
}

/// Index of the smallest value; ties go to the lowest index.
pub fn argmin_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        match best {
            Some(b) if values[b] <= v => {}
            _ => best = Some(i),
        }
    }
    best
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub ell: f64,
    pub proxy: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EllSweep {
    pub method: Approach,
    pub points: Vec<SweepPoint>,
    pub ell_star: f64,
    pub replicates: usize,
    /// Pilot (approach one) or pool (approach two) failures behind the proxy,
    /// summed over replicates.
    pub failures: usize,
    /// Set when the band at `ℓ*` is wide relative to the proxy or the proxy
    /// rests on very few failures.
    pub high_uncertainty: bool,
}

impl EllSweep {
    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.ell).collect()
    }

    pub fn proxies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.proxy).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningConfig {
    pub method: Approach,
    pub grid: Vec<f64>,
    pub m: usize,
    pub pilot_l: usize,
    pub replicates: usize,
}

impl TuningConfig {
    pub fn new(method: Approach, grid: Vec<f64>, m: usize, pilot_l: usize) -> Self {
        Self { method, grid, m, pilot_l, replicates: 1 }
    }
}

/// Proxy values over `grid` from one pool. Approach one uses the first `l`
/// pool rows as pilots (exactly `l` HF evaluations).
pub fn sweep_pool<T: Real>(
    problem: &ProblemSpec<T>,
    pool: &LfPool<T>,
    method: Approach,
    grid: &[f64],
    l: usize,
) -> Result<(Vec<(f64, f64)>, usize)> {
    check_grid(grid)?;
    let tanh: Vec<T> = pool.values().iter().map(|h| h.tanh()).collect();
    let zhat = |ell: T| tanh.iter().map(|&t| (-ell * t).exp()).sum::<T>() / T::from_usize_lossy(tanh.len());
    match method {
        Approach::One => {
            if l == 0 || l > pool.len() {
                return Err(Error::InsufficientSamples { requested: l, available: pool.len() });
            }
            let hf = (0..l)
                .into_par_iter()
                .map(|i| problem.hf_eval(&pool.row(problem, i)))
                .collect::<Result<Vec<_>>>()?;
            let lf = &pool.values()[..l];
            let failures = hf.iter().filter(|&&h| h < T::zero()).count();
            let out = grid
                .par_iter()
                .map(|&e| {
                    let ell = T::lit(e);
                    let (v, se) = variance_proxy_hf(ell, zhat(ell), &hf, lf);
                    (v.to_f64_lossy(), se.to_f64_lossy())
                })
                .collect();
            Ok((out, failures))
        }
        Approach::Two => {
            let failures = pool.values().iter().filter(|&&h| h < T::zero()).count();
            let out = grid
                .par_iter()
                .map(|&e| {
                    let ell = T::lit(e);
                    let (v, se) = variance_proxy_lf(ell, zhat(ell), pool.values());
                    (v.to_f64_lossy(), se.to_f64_lossy())
                })
                .collect();
            Ok((out, failures))
        }
    }
}

/// Builds an [`EllSweep`] from per-replicate proxy curves.
pub fn summarize_sweep(
    method: Approach,
    grid: &[f64],
    curves: &[Vec<(f64, f64)>],
    failures: usize,
) -> Result<EllSweep> {
    let r = curves.len();
    let points: Vec<SweepPoint> = grid
        .iter()
        .enumerate()
        .map(|(g, &ell)| {
            let vals: Vec<f64> = curves.iter().map(|c| c[g].0).collect();
            let mean = vals.iter().sum::<f64>() / r as f64;
            let se = if r >= 2 {
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / ((r - 1) * r) as f64).sqrt()
            } else {
                curves[0][g].1
            };
            SweepPoint { ell, proxy: mean, lo: mean - 1.96 * se, hi: mean + 1.96 * se }
        })
        .collect();
    let proxies: Vec<f64> = points.iter().map(|p| p.proxy).collect();
    if proxies.iter().all(|&v| v == 0.0) {
        return Err(match method {
            Approach::One => Error::NoPilotFailures,
            Approach::Two => Error::InvalidParameter("no LF failures in the pool; the LF proxy is identically zero".into()),
        });
    }
    let best = argmin_first(&proxies).ok_or_else(|| Error::InvalidParameter("proxy is NaN on the whole grid".into()))?;
    let pt = &points[best];
    let high_uncertainty = failures < 10 || (pt.hi - pt.lo) > 0.5 * pt.proxy;
    Ok(EllSweep { method, ell_star: pt.ell, points, replicates: r, failures, high_uncertainty })
}

/// Grid search for `ℓ*`. Replicate 0 uses the pool of [`normalizer_stream`]`(seed)`;
/// further replicates use independent pools.
pub fn select_ell<T: Real>(problem: &ProblemSpec<T>, cfg: &TuningConfig, seed: u64) -> Result<EllSweep> {
    if cfg.replicates == 0 {
        return Err(Error::InvalidParameter("replicates must be >= 1".into()));
    }
    if cfg.m == 0 {
        return Err(Error::InvalidParameter("tuning needs M >= 1".into()));
    }
    let mut curves = Vec::with_capacity(cfg.replicates);
    let mut failures = 0;
    for r in 0..cfg.replicates {
        let s = if r == 0 { seed } else { derive_seed(seed, r as u64) };
        let pool = LfPool::build(problem, normalizer_stream(s), cfg.m)?;
        let (c, f) = sweep_pool(problem, &pool, cfg.method, &cfg.grid, cfg.pilot_l)?;
        curves.push(c);
        failures += f;
    }
    summarize_sweep(cfg.method, &cfg.grid, &curves, failures)
}
