//! Paired low/high fidelity limit states over a reference density.
//!
//! Failure is `h(z) < 0` for both fidelities. Outside the domain box both
//! fidelities return the penalty `c·‖z‖²`, whose gradient `2c·z` pushes a
//! Langevin chain back toward the box. Every evaluation is counted in a shared
//! [`EvalLedger`].

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::density::ReferenceDensity;
use crate::error::{Error, Fidelity, Result};
use crate::real::{norm_sq, Real};

/// The two limit-state functions of a problem, valid inside its domain.
pub trait LimitStates<T: Real>: Send + Sync {
    fn dim(&self) -> usize;

    fn lf(&self, z: &[T]) -> Result<T>;

    fn lf_grad(&self, z: &[T]) -> Result<Vec<T>>;

    /// Value and gradient together; override when they share work.
    fn lf_with_grad(&self, z: &[T]) -> Result<(T, Vec<T>)> {
        Ok((self.lf(z)?, self.lf_grad(z)?))
    }

    fn hf(&self, z: &[T]) -> Result<T>;
}

type ScalarFn<T> = Box<dyn Fn(&[T]) -> T + Send + Sync>;
type VectorFn<T> = Box<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;

/// Limit states from plain closures; handy for custom problems and stubs.
pub struct ClosureModel<T> {
    dim: usize,
    lf: ScalarFn<T>,
    lf_grad: VectorFn<T>,
    hf: ScalarFn<T>,
}

impl<T: Real> ClosureModel<T> {
    pub fn new(
        dim: usize,
        lf: impl Fn(&[T]) -> T + Send + Sync + 'static,
        lf_grad: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static,
        hf: impl Fn(&[T]) -> T + Send + Sync + 'static,
    ) -> Self {
        Self { dim, lf: Box::new(lf), lf_grad: Box::new(lf_grad), hf: Box::new(hf) }
    }
}

impl<T: Real> LimitStates<T> for ClosureModel<T> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn lf(&self, z: &[T]) -> Result<T> {
        Ok((self.lf)(z))
    }
    fn lf_grad(&self, z: &[T]) -> Result<Vec<T>> {
        Ok((self.lf_grad)(z))
    }
    fn hf(&self, z: &[T]) -> Result<T> {
        Ok((self.hf)(z))
    }
}

/// Axis-aligned box; infinite bounds mark unbounded coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> DomainBox<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), actual: upper.len() });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::InvalidParameter("domain box needs lower < upper in every coordinate".into()));
        }
        Ok(Self { lower, upper })
    }

    pub fn unbounded(dim: usize) -> Self {
        Self { lower: vec![T::neg_infinity(); dim], upper: vec![T::infinity(); dim] }
    }

    /// The closed support of each reference factor.
    pub fn from_support(density: &ReferenceDensity<T>) -> Self {
        let (lower, upper) = density.factors().iter().map(|f| f.support()).unzip();
        Self { lower, upper }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, z: &[T]) -> bool {
        z.iter().zip(self.lower.iter().zip(&self.upper)).all(|(&x, (&l, &u))| x >= l && x <= u)
    }

    /// Midpoint of each bounded coordinate; `fallback` where a side is infinite.
    pub fn center_or(&self, fallback: &[T]) -> Vec<T> {
        self.lower
            .iter()
            .zip(&self.upper)
            .zip(fallback)
            .map(|((&l, &u), &f)| if l.is_finite() && u.is_finite() { T::lit(0.5) * (l + u) } else { f })
            .collect()
    }
}

/// Evaluation counters, shared by every clone of a [`ProblemSpec`].
#[derive(Debug, Default)]
pub struct EvalLedger {
    lf: AtomicU64,
    hf: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LedgerSnapshot {
    pub lf_count: u64,
    pub hf_count: u64,
}

impl std::ops::Sub for LedgerSnapshot {
    type Output = LedgerSnapshot;
    fn sub(self, rhs: Self) -> Self {
        LedgerSnapshot { lf_count: self.lf_count - rhs.lf_count, hf_count: self.hf_count - rhs.hf_count }
    }
}

impl EvalLedger {
    pub fn snapshot(&self) -> LedgerSnapshot {
        LedgerSnapshot { lf_count: self.lf.load(Ordering::Relaxed), hf_count: self.hf.load(Ordering::Relaxed) }
    }

    fn tick(&self, fidelity: Fidelity) {
        match fidelity {
            Fidelity::Low => self.lf.fetch_add(1, Ordering::Relaxed),
            Fidelity::High => self.hf.fetch_add(1, Ordering::Relaxed),
        };
    }
}

#[derive(Clone)]
pub struct ProblemSpec<T> {
    name: String,
    reference: Arc<ReferenceDensity<T>>,
    model: Arc<dyn LimitStates<T>>,
    domain: Arc<DomainBox<T>>,
    penalty_coeff: T,
    ledger: Arc<EvalLedger>,
}

impl<T: Real> fmt::Debug for ProblemSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("penalty_coeff", &self.penalty_coeff)
            .field("ledger", &self.ledger.snapshot())
            .finish()
    }
}

/// Central finite-difference gradient of `h_LF`, step `rel_step · max(|z_k|, 1)`.
pub fn fd_lf_gradient<T: Real>(model: &dyn LimitStates<T>, z: &[T], rel_step: T) -> Result<Vec<T>> {
    let mut zz = z.to_vec();
    let mut g = Vec::with_capacity(z.len());
    for k in 0..z.len() {
        let h = rel_step * z[k].abs().max(T::one());
        zz[k] = z[k] + h;
        let fp = model.lf(&zz)?;
        zz[k] = z[k] - h;
        let fm = model.lf(&zz)?;
        zz[k] = z[k];
        g.push((fp - fm) / (T::lit(2.0) * h));
    }
    Ok(g)
}

/// `max_k |a_k - b_k| / max_k |b_k|`, or the absolute error when `b` vanishes.
pub fn gradient_rel_error<T: Real>(a: &[T], b: &[T]) -> T {
    let num = a.iter().zip(b).map(|(x, y)| (*x - *y).abs()).fold(T::zero(), T::max);
    let den = b.iter().map(|y| y.abs()).fold(T::zero(), T::max);
    if den > T::zero() { num / den } else { num }
}

pub const DEFAULT_PENALTY: f64 = 100.0;

impl<T: Real> ProblemSpec<T> {
    pub fn new(
        name: impl Into<String>,
        reference: ReferenceDensity<T>,
        model: impl LimitStates<T> + 'static,
        domain: DomainBox<T>,
    ) -> Result<Self> {
        Self::from_arc(name, reference, Arc::new(model), domain)
    }

    pub fn from_arc(
        name: impl Into<String>,
        reference: ReferenceDensity<T>,
        model: Arc<dyn LimitStates<T>>,
        domain: DomainBox<T>,
    ) -> Result<Self> {
        let d = reference.dim();
        if model.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: model.dim() });
        }
        if domain.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: domain.dim() });
        }
        Ok(Self {
            name: name.into(),
            reference: Arc::new(reference),
            model,
            domain: Arc::new(domain),
            penalty_coeff: T::lit(DEFAULT_PENALTY),
            ledger: Arc::new(EvalLedger::default()),
        })
    }

    pub fn with_penalty(mut self, coeff: T) -> Result<Self> {
        if !(coeff >= T::zero()) {
            return Err(Error::InvalidParameter(format!("penalty coefficient must be >= 0, got {coeff}")));
        }
        self.penalty_coeff = coeff;
        Ok(self)
    }

    /// Same problem with its own, zeroed ledger.
    pub fn with_fresh_ledger(&self) -> Self {
        Self { ledger: Arc::new(EvalLedger::default()), ..self.clone() }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.reference.dim()
    }

    pub fn reference(&self) -> &ReferenceDensity<T> {
        &self.reference
    }

    pub fn domain(&self) -> &DomainBox<T> {
        &self.domain
    }

    pub fn penalty_coeff(&self) -> T {
        self.penalty_coeff
    }

    pub fn ledger(&self) -> LedgerSnapshot {
        self.ledger.snapshot()
    }

    /// The raw limit states, bypassing the penalty and the ledger.
    pub fn model(&self) -> &dyn LimitStates<T> {
        self.model.as_ref()
    }

    pub fn in_domain(&self, z: &[T]) -> bool {
        self.domain.contains(z)
    }

    fn check(&self, z: &[T]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: z.len() });
        }
        Ok(())
    }

    fn finite(fidelity: Fidelity, z: &[T], v: T) -> Result<T> {
        if v.is_nan() {
            Err(Error::NonFinite { fidelity, z: z.iter().map(|x| x.to_f64_lossy()).collect() })
        } else {
            Ok(v)
        }
    }

    fn penalty(&self, z: &[T]) -> T {
        self.penalty_coeff * norm_sq(z)
    }

    pub fn lf_eval(&self, z: &[T]) -> Result<T> {
        self.check(z)?;
        self.ledger.tick(Fidelity::Low);
        let v = if self.in_domain(z) { self.model.lf(z)? } else { self.penalty(z) };
        Self::finite(Fidelity::Low, z, v)
    }

    pub fn lf_grad_eval(&self, z: &[T]) -> Result<Vec<T>> {
        self.lf_eval_with_grad(z).map(|(_, g)| g)
    }

    /// One LF evaluation returning value and gradient.
    pub fn lf_eval_with_grad(&self, z: &[T]) -> Result<(T, Vec<T>)> {
        self.check(z)?;
        self.ledger.tick(Fidelity::Low);
        let (v, g) = if self.in_domain(z) {
            self.model.lf_with_grad(z)?
        } else {
            let two_c = T::lit(2.0) * self.penalty_coeff;
            (self.penalty(z), z.iter().map(|&x| two_c * x).collect())
        };
        let v = Self::finite(Fidelity::Low, z, v)?;
        if g.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: g.len() });
        }
        if g.iter().any(|x| x.is_nan()) {
            return Err(Error::NonFinite { fidelity: Fidelity::Low, z: z.iter().map(|x| x.to_f64_lossy()).collect() });
        }
        Ok((v, g))
    }

    pub fn hf_eval(&self, z: &[T]) -> Result<T> {
        self.check(z)?;
        self.ledger.tick(Fidelity::High);
        let v = if self.in_domain(z) { self.model.hf(z)? } else { self.penalty(z) };
        Self::finite(Fidelity::High, z, v)
    }
}
