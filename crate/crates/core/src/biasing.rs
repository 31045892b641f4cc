//! Biasing density `q(z) = exp(-ℓ tanh h_LF(z)) p(z) / Z(ℓ)`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::ProblemSpec;
use crate::real::Real;
use crate::rng::Stream;

/// LF values at `M` reference draws. Row `i` is regenerated on demand from
/// `stream.child(i)`, so only the values are stored.
#[derive(Debug, Clone)]
pub struct LfPool<T> {
    stream: Stream,
    values: Vec<T>,
}

impl<T: Real> LfPool<T> {
    /// Draws `m` points from `p` and evaluates `h_LF` at each (`m` LF evaluations).
    pub fn build(problem: &ProblemSpec<T>, stream: Stream, m: usize) -> Result<Self> {
        let d = problem.dim();
        let values = (0..m)
            .into_par_iter()
            .map_init(
                || vec![T::zero(); d],
                |z, i| {
                    problem.reference().sample_row(&stream, i, z);
                    problem.lf_eval(z)
                },
            )
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { stream, values })
    }

    pub fn from_values(stream: Stream, values: Vec<T>) -> Self {
        Self { stream, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn stream(&self) -> Stream {
        self.stream
    }

    pub fn row(&self, problem: &ProblemSpec<T>, i: usize) -> Vec<T> {
        let mut z = vec![T::zero(); problem.dim()];
        problem.reference().sample_row(&self.stream, i, &mut z);
        z
    }

    /// Monte Carlo estimate of `Z(ℓ)` and its standard error.
    pub fn normalizer(&self, ell: T) -> (T, T) {
        mean_and_se(self.values.iter().map(|&h| (-ell * h.tanh()).exp()), self.values.len())
    }

    /// Fraction of draws with `h_LF < 0`.
    pub fn lf_failure_fraction(&self) -> T {
        let k = self.values.iter().filter(|&&h| h < T::zero()).count();
        T::from_usize_lossy(k) / T::from_usize_lossy(self.values.len().max(1))
    }
}

pub(crate) fn mean_and_se<T: Real>(xs: impl Iterator<Item = T> + Clone, n: usize) -> (T, T) {
    if n == 0 {
        return (T::nan(), T::nan());
    }
    let nf = T::from_usize_lossy(n);
    let mean = xs.clone().sum::<T>() / nf;
    if n < 2 {
        return (mean, T::zero());
    }
    let var = xs.map(|x| (x - mean).powi(2)).sum::<T>() / (nf - T::one());
    (mean, (var / nf).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalizerEstimate<T> {
    pub value: T,
    pub std_error: T,
    pub m: usize,
    pub seed: u64,
    #[serde(skip)]
    pub pool: Option<Arc<LfPool<T>>>,
}

/// Potential `U`, its gradient, and the LF value used to compute them.
#[derive(Debug, Clone)]
pub struct PotentialEval<T> {
    pub u: T,
    pub grad: Vec<T>,
    pub lf: T,
}

#[derive(Debug, Clone)]
pub struct BiasingModel<T: Real> {
    problem: ProblemSpec<T>,
    ell: T,
    zhat: Option<NormalizerEstimate<T>>,
}

impl<T: Real> BiasingModel<T> {
    /// `ℓ = 0` gives `q = p`.
    pub fn new(problem: ProblemSpec<T>, ell: T) -> Result<Self> {
        if !(ell >= T::zero() && ell.is_finite()) {
            return Err(Error::InvalidParameter(format!("lengthscale must be finite and >= 0, got {ell}")));
        }
        Ok(Self { problem, ell, zhat: None })
    }

    pub fn problem(&self) -> &ProblemSpec<T> {
        &self.problem
    }

    pub fn ell(&self) -> T {
        self.ell
    }

    pub fn normalizer(&self) -> Option<&NormalizerEstimate<T>> {
        self.zhat.as_ref()
    }

    /// `U(z) = ℓ tanh h_LF(z) - log p(z)`; `+∞` outside the support of `p`
    /// (no LF evaluation in that case).
    pub fn potential(&self, z: &[T]) -> Result<T> {
        let logp = self.problem.reference().log_density(z)?;
        if logp == T::neg_infinity() {
            return Ok(T::infinity());
        }
        Ok(self.ell * self.problem.lf_eval(z)?.tanh() - logp)
    }

    /// `None` outside the open support of `p`. One LF evaluation otherwise.
    pub fn potential_with_grad(&self, z: &[T]) -> Result<Option<PotentialEval<T>>> {
        let reference = self.problem.reference();
        if z.len() != reference.dim() {
            return Err(Error::DimensionMismatch { expected: reference.dim(), actual: z.len() });
        }
        if !reference.in_open_support(z) {
            return Ok(None);
        }
        let (lf, g) = self.problem.lf_eval_with_grad(z)?;
        let t = lf.tanh();
        let c = self.ell * (T::one() - t * t);
        let score = reference.score(z)?;
        let grad = g.iter().zip(&score).map(|(&gi, &si)| c * gi - si).collect();
        let u = self.ell * t - reference.log_density(z)?;
        Ok(Some(PotentialEval { u, grad, lf }))
    }

    pub fn potential_grad(&self, z: &[T]) -> Result<Vec<T>> {
        match self.potential_with_grad(z)? {
            Some(p) => Ok(p.grad),
            None => Err(Error::ScoreUndefined {
                coord: self.problem.reference().factors().iter().zip(z).position(|(f, &x)| !f.in_open_support(x)).unwrap_or(0),
                value: f64::NAN,
            }),
        }
    }

    /// Estimates `Ẑ_M(ℓ)` from `m` fresh reference draws (exactly `m` LF evaluations).
    pub fn estimate_normalizer(&mut self, m: usize, seed: u64) -> Result<T> {
        if m == 0 {
            return Err(Error::InvalidParameter("normalizer needs M >= 1".into()));
        }
        let pool = LfPool::build(&self.problem, normalizer_stream(seed), m)?;
        self.use_pool(Arc::new(pool), seed)
    }

    /// Sets `Ẑ` from an existing pool without new evaluations.
    pub fn use_pool(&mut self, pool: Arc<LfPool<T>>, seed: u64) -> Result<T> {
        if pool.is_empty() {
            return Err(Error::InvalidParameter("normalizer pool is empty".into()));
        }
        let (value, std_error) = pool.normalizer(self.ell);
        self.zhat = Some(NormalizerEstimate { value, std_error, m: pool.len(), seed, pool: Some(pool) });
        Ok(value)
    }

    /// Sets `Ẑ` directly.
    pub fn set_normalizer(&mut self, value: T, std_error: T, m: usize, seed: u64) {
        self.zhat = Some(NormalizerEstimate { value, std_error, m, seed, pool: None });
    }

    pub fn zhat(&self) -> Result<T> {
        self.zhat.as_ref().map(|e| e.value).ok_or(Error::NormalizerMissing)
    }

    /// `p/q = Ẑ exp(ℓ tanh h_LF)` for a known LF value.
    pub fn weight_from_lf(&self, lf: T) -> Result<T> {
        Ok(self.zhat()? * (self.ell * lf.tanh()).exp())
    }

    pub fn weight(&self, z: &[T]) -> Result<T> {
        let z_hat = self.zhat()?;
        Ok(z_hat * (self.ell * self.problem.lf_eval(z)?.tanh()).exp())
    }
}

/// Stream used by [`BiasingModel::estimate_normalizer`] for a given seed.
pub fn normalizer_stream(seed: u64) -> Stream {
    Stream::new(seed).tagged("normalizer")
}
