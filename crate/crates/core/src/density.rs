//! Product-form reference densities.
//!
//! A [`ReferenceDensity`] is an ordered list of independent one-dimensional
//! factors, each either Gaussian or uniform. It supplies the exact log-density,
//! its gradient (the score), and seeded sampling. Points outside the closed
//! support of a uniform factor have log-density `-inf`; this is a value, not an
//! error.
//!
//! The score of a uniform factor is zero on the open interval and undefined on
//! or beyond its endpoints. Callers that may leave the support (Langevin
//! proposals) must check [`ReferenceDensity::in_open_support`] first.

use rand::Rng;
use rand_distr::{Open01, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::rng::{Stream, StreamRng};
use crate::samples::SampleMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CoordinateFactor<T> {
    Gaussian { mean: T, std: T },
    Uniform { lower: T, upper: T },
}

impl<T: Real> CoordinateFactor<T> {
    pub fn gaussian(mean: T, std: T) -> Result<Self> {
        if !(std > T::zero()) || !mean.is_finite() || !std.is_finite() {
            return Err(Error::InvalidParameter(format!("gaussian factor needs finite mean and std > 0, got N({mean}, {std})")));
        }
        Ok(Self::Gaussian { mean, std })
    }

    pub fn uniform(lower: T, upper: T) -> Result<Self> {
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::InvalidParameter(format!("uniform factor needs finite lower < upper, got U[{lower}, {upper}]")));
        }
        Ok(Self::Uniform { lower, upper })
    }

    /// Checks the invariants of a factor built without the constructors (e.g. deserialized).
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Gaussian { mean, std } => Self::gaussian(mean, std).map(|_| ()),
            Self::Uniform { lower, upper } => Self::uniform(lower, upper).map(|_| ()),
        }
    }

    pub fn log_pdf(&self, x: T) -> T {
        match *self {
            Self::Gaussian { mean, std } => {
                let r = (x - mean) / std;
                -T::lit(0.5) * r * r - std.ln() - T::lit(0.5) * (T::TAU()).ln()
            }
            Self::Uniform { lower, upper } => {
                if x >= lower && x <= upper {
                    -(upper - lower).ln()
                } else {
                    T::neg_infinity()
                }
            }
        }
    }

    pub fn in_open_support(&self, x: T) -> bool {
        match *self {
            Self::Gaussian { .. } => x.is_finite(),
            Self::Uniform { lower, upper } => x > lower && x < upper,
        }
    }

    /// d/dx log pdf; `None` on or outside a uniform boundary.
    pub fn score(&self, x: T) -> Option<T> {
        match *self {
            Self::Gaussian { mean, std } => Some(-(x - mean) / (std * std)),
            Self::Uniform { .. } => self.in_open_support(x).then(T::zero),
        }
    }

    pub fn sample(&self, rng: &mut StreamRng) -> T {
        match *self {
            Self::Gaussian { mean, std } => {
                let e: f64 = rng.sample(StandardNormal);
                mean + std * T::lit(e)
            }
            Self::Uniform { lower, upper } => {
                let u: f64 = rng.sample(Open01);
                lower + (upper - lower) * T::lit(u)
            }
        }
    }

    pub fn mean(&self) -> T {
        match *self {
            Self::Gaussian { mean, .. } => mean,
            Self::Uniform { lower, upper } => T::lit(0.5) * (lower + upper),
        }
    }

    pub fn variance(&self) -> T {
        match *self {
            Self::Gaussian { std, .. } => std * std,
            Self::Uniform { lower, upper } => (upper - lower).powi(2) / T::lit(12.0),
        }
    }

    /// Closed support (infinite for Gaussians).
    pub fn support(&self) -> (T, T) {
        match *self {
            Self::Gaussian { .. } => (T::neg_infinity(), T::infinity()),
            Self::Uniform { lower, upper } => (lower, upper),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceDensity<T> {
    factors: Vec<CoordinateFactor<T>>,
}

impl<T: Real> ReferenceDensity<T> {
    pub fn new(factors: Vec<CoordinateFactor<T>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParameter("reference density needs at least one factor".into()));
        }
        for f in &factors {
            f.validate()?;
        }
        Ok(Self { factors })
    }

    /// `dim` copies of one factor.
    pub fn iid(factor: CoordinateFactor<T>, dim: usize) -> Result<Self> {
        Self::new(vec![factor; dim])
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[CoordinateFactor<T>] {
        &self.factors
    }

    fn check_dim(&self, z: &[T]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: z.len() });
        }
        Ok(())
    }

    pub fn log_density(&self, z: &[T]) -> Result<T> {
        self.check_dim(z)?;
        let mut acc = T::zero();
        for (f, &x) in self.factors.iter().zip(z) {
            let lp = f.log_pdf(x);
            if lp == T::neg_infinity() {
                return Ok(lp);
            }
            acc = acc + lp;
        }
        Ok(acc)
    }

    pub fn in_open_support(&self, z: &[T]) -> bool {
        z.len() == self.dim() && self.factors.iter().zip(z).all(|(f, &x)| f.in_open_support(x))
    }

    pub fn score(&self, z: &[T]) -> Result<Vec<T>> {
        self.check_dim(z)?;
        self.factors
            .iter()
            .zip(z)
            .enumerate()
            .map(|(coord, (f, &x))| f.score(x).ok_or(Error::ScoreUndefined { coord, value: x.to_f64_lossy() }))
            .collect()
    }

    /// Writes one draw into `out` using the caller's generator.
    pub fn sample_into(&self, rng: &mut StreamRng, out: &mut [T]) {
        for (f, o) in self.factors.iter().zip(out.iter_mut()) {
            *o = f.sample(rng);
        }
    }

    /// Row `index` of the sample keyed by `stream`. Any row can be regenerated
    /// on its own, which lets large pools keep only derived values.
    pub fn sample_row(&self, stream: &Stream, index: usize, out: &mut [T]) {
        let mut rng = stream.child(index as u64).rng();
        self.sample_into(&mut rng, out);
    }

    /// `n` i.i.d. draws; deterministic in `stream` and independent of thread count.
    pub fn sample(&self, stream: &Stream, n: usize) -> SampleMatrix<T> {
        let d = self.dim();
        let mut data = vec![T::zero(); n * d];
        data.par_chunks_mut(d).enumerate().for_each(|(i, row)| self.sample_row(stream, i, row));
        SampleMatrix::from_flat(d, data)
    }

    pub fn mean(&self) -> Vec<T> {
        self.factors.iter().map(CoordinateFactor::mean).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn borehole_like() -> ReferenceDensity<f64> {
        ReferenceDensity::new(vec![
            CoordinateFactor::gaussian(0.10, 0.016).unwrap(),
            CoordinateFactor::uniform(990.0, 1110.0).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn log_density_examples() {
        let n01 = ReferenceDensity::new(vec![CoordinateFactor::gaussian(0.0f64, 1.0).unwrap()]).unwrap();
        assert!((n01.log_density(&[0.0]).unwrap() + 0.918_938_533_204_672_7).abs() < 1e-14);
        let u = ReferenceDensity::new(vec![CoordinateFactor::uniform(-1.0, 1.0).unwrap()]).unwrap();
        assert!((u.log_density(&[0.0]).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        let mixed = ReferenceDensity::new(vec![
            CoordinateFactor::gaussian(0.0, 1.0).unwrap(),
            CoordinateFactor::uniform(0.0, 2.0).unwrap(),
        ])
        .unwrap();
        let expect = -0.5 * std::f64::consts::TAU.ln() - 0.5 + 0.5f64.ln();
        assert!((mixed.log_density(&[1.0, 0.5]).unwrap() - expect).abs() < 1e-14);
        assert_eq!(mixed.log_density(&[1.0, 2.5]).unwrap(), f64::NEG_INFINITY);
        assert!(matches!(mixed.log_density(&[1.0]), Err(Error::DimensionMismatch { expected: 2, actual: 1 })));
    }

    #[test]
    fn score_examples() {
        let n01 = ReferenceDensity::new(vec![CoordinateFactor::gaussian(0.0, 1.0).unwrap()]).unwrap();
        assert_eq!(n01.score(&[2.0]).unwrap(), vec![-2.0]);
        let u = ReferenceDensity::new(vec![CoordinateFactor::uniform(-1.0, 1.0).unwrap()]).unwrap();
        assert_eq!(u.score(&[0.3]).unwrap(), vec![0.0]);
        assert!(matches!(u.score(&[1.0]), Err(Error::ScoreUndefined { coord: 0, .. })));
        assert!(u.score(&[1.5]).is_err());

        let d = borehole_like();
        let s = d.score(&[0.12, 1000.0]).unwrap();
        assert!((s[0] + 78.125).abs() < 1e-9);
        assert_eq!(s[1], 0.0);
        // central difference of log_density
        let h = 1e-6;
        let fd = (d.log_density(&[0.12 + h, 1000.0]).unwrap() - d.log_density(&[0.12 - h, 1000.0]).unwrap()) / (2.0 * h);
        assert!(((fd - s[0]) / s[0]).abs() < 1e-5);
    }

    #[test]
    fn invalid_factors() {
        assert!(CoordinateFactor::gaussian(0.0, 0.0).is_err());
        assert!(CoordinateFactor::uniform(1.0, 1.0).is_err());
        assert!(ReferenceDensity::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_empty_for_zero() {
        let d = borehole_like();
        let s = Stream::new(11);
        assert!(d.sample(&s, 0).is_empty());
        assert_eq!(d.sample(&s, 50), d.sample(&s, 50));
        assert_ne!(d.sample(&s, 5), d.sample(&Stream::new(12), 5));
        let mut row = [0.0; 2];
        d.sample_row(&s, 17, &mut row);
        assert_eq!(&row[..], d.sample(&s, 20).row(17));
    }

    #[test]
    fn uniform_sample_mean_clt() {
        let u = ReferenceDensity::new(vec![CoordinateFactor::uniform(-1.0, 1.0).unwrap()]).unwrap();
        let n = 100_000;
        let m = u.sample(&Stream::new(3), n);
        let mean: f64 = m.as_flat().iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 3.0 * (1.0f64 / 3.0).sqrt() / (n as f64).sqrt());
    }

    #[test]
    fn sample_moments_within_five_se() {
        let factors = vec![
            CoordinateFactor::gaussian(0.10, 0.016).unwrap(),
            CoordinateFactor::gaussian(7.71, 1.0056).unwrap(),
            CoordinateFactor::uniform(63070.0, 115600.0).unwrap(),
            CoordinateFactor::uniform(0.0, std::f64::consts::TAU).unwrap(),
        ];
        let d = ReferenceDensity::new(factors.clone()).unwrap();
        let n = 100_000;
        let m = d.sample(&Stream::new(99), n);
        for (j, f) in factors.iter().enumerate() {
            let col = m.column(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se_mean = (f.variance() / n as f64).sqrt();
            assert!((mean - f.mean()).abs() < 5.0 * se_mean, "factor {j} mean");
            // fourth central moment: 3σ⁴ (gaussian) or 9σ⁴/5 (uniform)
            let kurt = match f {
                CoordinateFactor::Gaussian { .. } => 3.0,
                CoordinateFactor::Uniform { .. } => 1.8,
            };
            let se_var = ((kurt - 1.0) * f.variance().powi(2) / n as f64).sqrt();
            assert!((var - f.variance()).abs() < 5.0 * se_var, "factor {j} variance");
            if let CoordinateFactor::Uniform { lower, upper } = f {
                assert!(col.iter().all(|x| x > lower && x < upper));
            }
        }
    }

    fn arb_factor() -> impl Strategy<Value = CoordinateFactor<f64>> {
        prop_oneof![
            (-5.0..5.0f64, 0.1..3.0f64).prop_map(|(m, s)| CoordinateFactor::gaussian(m, s).unwrap()),
            (-5.0..5.0f64, 0.5..4.0f64).prop_map(|(a, w)| CoordinateFactor::uniform(a, a + w).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn score_matches_central_differences(
            factors in prop::collection::vec(arb_factor(), 1..6),
            fracs in prop::collection::vec(0.05..0.95f64, 6),
        ) {
            let d = ReferenceDensity::new(factors.clone()).unwrap();
            let z: Vec<f64> = factors.iter().zip(&fracs).map(|(f, &u)| match *f {
                CoordinateFactor::Gaussian { mean, std } => mean + std * (4.0 * u - 2.0),
                CoordinateFactor::Uniform { lower, upper } => lower + (upper - lower) * u,
            }).collect();
            let s = d.score(&z).unwrap();
            let h = 1e-6;
            for j in 0..z.len() {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[j] += h;
                zm[j] -= h;
                let fd = (d.log_density(&zp).unwrap() - d.log_density(&zm).unwrap()) / (2.0 * h);
                let scale = s[j].abs().max(1.0);
                prop_assert!((fd - s[j]).abs() / scale < 1e-5, "coord {} fd {} score {}", j, fd, s[j]);
            }
        }

        #[test]
        fn product_log_density_is_sum_of_factors(
            factors in prop::collection::vec(arb_factor(), 1..6),
            raw in prop::collection::vec(-6.0..6.0f64, 6),
        ) {
            let z = &raw[..factors.len()];
            let d = ReferenceDensity::new(factors.clone()).unwrap();
            let total = d.log_density(z).unwrap();
            let parts: Vec<f64> = factors.iter().zip(z).map(|(f, &x)| {
                ReferenceDensity::new(vec![*f]).unwrap().log_density(&[x]).unwrap()
            }).collect();
            if parts.contains(&f64::NEG_INFINITY) {
                prop_assert_eq!(total, f64::NEG_INFINITY);
            } else {
                prop_assert!((total - parts.iter().sum::<f64>()).abs() < 1e-12);
            }
        }
    }
}
