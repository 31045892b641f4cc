//! Metropolis-adjusted Langevin sampling of the biasing density.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::biasing::{BiasingModel, PotentialEval};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::rng::{Stream, StreamRng};
use crate::samples::SampleMatrix;

/// Where each chain starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    /// Center of the domain box, or the reference mean along unbounded coordinates.
    #[default]
    Center,
    /// An independent draw from `p` per chain.
    Reference,
    /// A fixed point for every chain.
    Point(Vec<f64>),
    /// Resampled from the normalizer pool with weights `exp(-ℓ tanh h_LF)`,
    /// i.e. an approximate draw from `q`. Costs no extra LF evaluations beyond
    /// the initial state.
    Resample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MalaConfig {
    pub tau: f64,
    pub burn_in: usize,
    pub iters: usize,
    pub chains: usize,
    pub seed: u64,
    #[serde(default)]
    pub init: InitialState,
    #[serde(default)]
    pub keep_trace: bool,
}

impl MalaConfig {
    pub fn new(tau: f64, burn_in: usize, iters: usize, chains: usize, seed: u64) -> Self {
        Self { tau, burn_in, iters, chains, seed, init: InitialState::Center, keep_trace: false }
    }

    pub fn with_init(mut self, init: InitialState) -> Self {
        self.init = init;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {}", self.tau)));
        }
        if self.iters == 0 {
            return Err(Error::InvalidParameter("iters must be >= 1".into()));
        }
        if self.chains == 0 {
            return Err(Error::InvalidParameter("chains must be >= 1".into()));
        }
        Ok(())
    }

    /// Upper bound on LF evaluations for one run.
    pub fn lf_budget(&self) -> usize {
        self.chains * (self.burn_in + self.iters + 1)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainOutput<T> {
    /// Kept states, `chains × iters` rows ordered by (chain, step).
    pub samples: SampleMatrix<T>,
    /// `h_LF` at each kept state.
    pub lf_values: Vec<T>,
    pub acceptance_rate: Vec<f64>,
    pub rejected_count: usize,
    pub nan_rejections: usize,
    /// Potential at each kept state when requested.
    pub potential_trace: Option<Vec<T>>,
    pub iters: usize,
}

impl<T: Real> ChainOutput<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean_acceptance(&self) -> f64 {
        self.acceptance_rate.iter().sum::<f64>() / self.acceptance_rate.len().max(1) as f64
    }

    /// Kept states of one chain.
    pub fn chain(&self, c: usize) -> SampleMatrix<T> {
        let idx: Vec<usize> = (c * self.iters..(c + 1) * self.iters).collect();
        self.samples.select(&idx)
    }
}

/// `z' = z - τ ∇U(z) + √(2τ) ε`.
pub fn propose<T: Real>(z: &[T], grad: &[T], tau: T, rng: &mut StreamRng) -> Vec<T> {
    let s = (T::lit(2.0) * tau).sqrt();
    z.iter()
        .zip(grad)
        .map(|(&zi, &gi)| {
            let e: f64 = StandardNormal.sample(rng);
            zi - tau * gi + s * T::lit(e)
        })
        .collect()
}

/// Log density, up to a constant, of proposing `to` from `from`:
/// `-‖to - from + τ ∇U(from)‖² / (4τ)`.
pub fn log_transition<T: Real>(to: &[T], from: &[T], grad_from: &[T], tau: T) -> T {
    let s: T = to.iter().zip(from).zip(grad_from).map(|((&a, &b), &g)| (a - b + tau * g).powi(2)).sum();
    -s / (T::lit(4.0) * tau)
}

/// Log of the Metropolis-Hastings ratio for a move `cur → prop`.
pub fn log_accept_ratio<T: Real>(
    z_cur: &[T],
    cur: &PotentialEval<T>,
    z_prop: &[T],
    prop: &PotentialEval<T>,
    tau: T,
) -> T {
    cur.u - prop.u + log_transition(z_cur, z_prop, &prop.grad, tau) - log_transition(z_prop, z_cur, &cur.grad, tau)
}

/// Acceptance probability of `z_cur → z_prop`. Zero when `z_prop` leaves the
/// support of `p` or the ratio is NaN.
pub fn accept_prob<T: Real>(b: &BiasingModel<T>, z_cur: &[T], z_prop: &[T], tau: T) -> Result<T> {
    let cur = b
        .potential_with_grad(z_cur)?
        .ok_or_else(|| Error::DegenerateChain("current state outside the reference support".into()))?;
    let Some(prop) = b.potential_with_grad(z_prop)? else {
        return Ok(T::zero());
    };
    let r = log_accept_ratio(z_cur, &cur, z_prop, &prop, tau);
    Ok(if r.is_nan() { T::zero() } else { r.exp().min(T::one()) })
}

fn initial_states<T: Real>(b: &BiasingModel<T>, cfg: &MalaConfig, stream: &Stream) -> Result<Vec<Vec<T>>> {
    let problem = b.problem();
    let d = problem.dim();
    match &cfg.init {
        InitialState::Center => {
            let z = problem.domain().center_or(&problem.reference().mean());
            Ok(vec![z; cfg.chains])
        }
        InitialState::Point(p) => {
            if p.len() != d {
                return Err(Error::DimensionMismatch { expected: d, actual: p.len() });
            }
            Ok(vec![p.iter().map(|&x| T::lit(x)).collect(); cfg.chains])
        }
        InitialState::Reference => {
            let init = stream.tagged("init");
            Ok((0..cfg.chains)
                .map(|c| {
                    let mut z = vec![T::zero(); d];
                    problem.reference().sample_row(&init, c, &mut z);
                    z
                })
                .collect())
        }
        InitialState::Resample => {
            let pool = b
                .normalizer()
                .and_then(|n| n.pool.clone())
                .ok_or_else(|| Error::InvalidParameter("resampled initial states need a normalizer pool".into()))?;
            let ell = b.ell();
            let w: Vec<f64> = pool.values().iter().map(|&h| (-ell * h.tanh()).exp().to_f64_lossy()).collect();
            let dist = WeightedIndex::new(&w).map_err(|e| Error::InvalidParameter(format!("resampling weights: {e}")))?;
            let mut rng = stream.tagged("init").rng();
            Ok((0..cfg.chains).map(|_| pool.row(problem, dist.sample(&mut rng))).collect())
        }
    }
}

struct ChainRun<T> {
    samples: Vec<T>,
    lf: Vec<T>,
    trace: Vec<T>,
    accepted: usize,
    rejected: usize,
    nan: usize,
}

fn run_chain<T: Real>(b: &BiasingModel<T>, cfg: &MalaConfig, z0: Vec<T>, stream: Stream) -> Result<ChainRun<T>> {
    let d = z0.len();
    let tau = T::lit(cfg.tau);
    let mut rng = stream.rng();
    let mut z = z0;
    let mut cur = b
        .potential_with_grad(&z)?
        .ok_or_else(|| Error::DegenerateChain(format!("initial state outside the reference support: {z:?}")))?;
    if !cur.u.is_finite() || cur.grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::DegenerateChain(format!("non-finite potential at the initial state: {z:?}")));
    }
    let total = cfg.burn_in + cfg.iters;
    let mut out = ChainRun {
        samples: Vec::with_capacity(cfg.iters * d),
        lf: Vec::with_capacity(cfg.iters),
        trace: Vec::new(),
        accepted: 0,
        rejected: 0,
        nan: 0,
    };
    for step in 0..total {
        let zp = propose(&z, &cur.grad, tau, &mut rng);
        let u: f64 = rand::Rng::random(&mut rng);
        let prop = match b.potential_with_grad(&zp) {
            Ok(p) => p,
            Err(Error::NonFinite { .. }) => {
                out.nan += 1;
                None
            }
            Err(e) => return Err(e),
        };
        let accepted = match prop {
            Some(prop) => {
                let r = log_accept_ratio(&z, &cur, &zp, &prop, tau);
                if r.is_nan() || prop.grad.iter().any(|g| !g.is_finite()) {
                    out.nan += 1;
                    false
                } else if u.ln() < r.to_f64_lossy() {
                    z = zp;
                    cur = prop;
                    true
                } else {
                    false
                }
            }
            None => false,
        };
        if accepted {
            out.accepted += 1;
        } else {
            out.rejected += 1;
        }
        if step >= cfg.burn_in {
            out.samples.extend_from_slice(&z);
            out.lf.push(cur.lf);
            if cfg.keep_trace {
                out.trace.push(cur.u);
            }
        }
    }
    if total > 0 && out.nan == total {
        return Err(Error::DegenerateChain(format!("every proposal produced a NaN ({total} steps)")));
    }
    Ok(out)
}

/// Runs `cfg.chains` independent chains, each on its own substream.
pub fn run<T: Real>(b: &BiasingModel<T>, cfg: &MalaConfig) -> Result<ChainOutput<T>> {
    cfg.validate()?;
    let stream = Stream::new(cfg.seed).tagged("mala");
    let inits = initial_states(b, cfg, &stream)?;
    let runs = inits
        .into_par_iter()
        .enumerate()
        .map(|(c, z0)| run_chain(b, cfg, z0, stream.child(c as u64)))
        .collect::<Result<Vec<_>>>()?;
    let d = b.problem().dim();
    let total = (cfg.burn_in + cfg.iters).max(1) as f64;
    let mut samples = Vec::with_capacity(cfg.chains * cfg.iters * d);
    let mut lf_values = Vec::with_capacity(cfg.chains * cfg.iters);
    let mut trace = Vec::new();
    let mut acceptance_rate = Vec::with_capacity(cfg.chains);
    let (mut rejected_count, mut nan_rejections) = (0, 0);
    for r in runs {
        samples.extend(r.samples);
        lf_values.extend(r.lf);
        trace.extend(r.trace);
        acceptance_rate.push(r.accepted as f64 / total);
        rejected_count += r.rejected;
        nan_rejections += r.nan;
    }
    Ok(ChainOutput {
        samples: SampleMatrix::from_flat(d, samples),
        lf_values,
        acceptance_rate,
        rejected_count,
        nan_rejections,
        potential_trace: cfg.keep_trace.then_some(trace),
        iters: cfg.iters,
    })
}

/// Rows chosen uniformly without replacement from a chain output.
#[derive(Debug, Clone)]
pub struct Subset<T> {
    pub indices: Vec<usize>,
    pub samples: SampleMatrix<T>,
    pub lf_values: Vec<T>,
}

pub fn subselect<T: Real>(out: &ChainOutput<T>, n: usize, stream: &Stream) -> Result<Subset<T>> {
    if n > out.len() {
        return Err(Error::InsufficientSamples { requested: n, available: out.len() });
    }
    let indices = index::sample(&mut stream.rng(), out.len(), n).into_vec();
    Ok(Subset {
        samples: out.samples.select(&indices),
        lf_values: indices.iter().map(|&i| out.lf_values[i]).collect(),
        indices,
    })
}
