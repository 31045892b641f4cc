//! Random-feature log conductivity field on the unit square.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// `K(x, z) = K̄ + exp(√(2/D′) Σ w_i cos(a1_i x1 + a2_i x2 + b_i))` with
/// `z = (w, a1, a2, b)`, each block of length `D′`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConductivityParams {
    pub dprime: usize,
    pub kbar: f64,
}

impl Default for ConductivityParams {
    fn default() -> Self {
        Self { dprime: 100, kbar: 3.0 }
    }
}

impl ConductivityParams {
    pub fn new(dprime: usize, kbar: f64) -> Result<Self> {
        if dprime == 0 {
            return Err(Error::InvalidParameter("dprime must be at least 1".into()));
        }
        if !(kbar >= 0.0 && kbar.is_finite()) {
            return Err(Error::InvalidParameter(format!("kbar must be finite and non-negative, got {kbar}")));
        }
        Ok(Self { dprime, kbar })
    }

    pub fn dim(&self) -> usize {
        4 * self.dprime
    }

    fn check<T>(&self, z: &[T]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: z.len() });
        }
        Ok(())
    }

    fn scale<T: Real>(&self) -> T {
        T::lit((2.0 / self.dprime as f64).sqrt())
    }

    fn blocks<'a, T>(&self, z: &'a [T]) -> (&'a [T], &'a [T], &'a [T], &'a [T]) {
        let d = self.dprime;
        (&z[..d], &z[d..2 * d], &z[2 * d..3 * d], &z[3 * d..])
    }

    pub fn eval<T: Real>(&self, z: &[T], x1: T, x2: T) -> Result<T> {
        self.check(z)?;
        let (w, a1, a2, b) = self.blocks(z);
        let s: T = (0..self.dprime).map(|i| w[i] * (a1[i] * x1 + a2[i] * x2 + b[i]).cos()).sum();
        Ok(T::lit(self.kbar) + (self.scale::<T>() * s).exp())
    }

    /// Adds `weight · ∂K(x, z)/∂z` to `grad`.
    pub fn accumulate_grad<T: Real>(&self, z: &[T], x1: T, x2: T, weight: T, grad: &mut [T]) {
        let d = self.dprime;
        let (w, a1, a2, b) = self.blocks(z);
        let c = self.scale::<T>();
        let mut s = T::zero();
        let mut cs = Vec::with_capacity(d);
        for i in 0..d {
            let (sin, cos) = (a1[i] * x1 + a2[i] * x2 + b[i]).sin_cos();
            s = s + w[i] * cos;
            cs.push((sin, cos));
        }
        let e = (c * s).exp() * c * weight;
        for (i, &(sin, cos)) in cs.iter().enumerate() {
            let ds = -e * w[i] * sin;
            grad[i] = grad[i] + e * cos;
            grad[d + i] = grad[d + i] + ds * x1;
            grad[2 * d + i] = grad[2 * d + i] + ds * x2;
            grad[3 * d + i] = grad[3 * d + i] + ds;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_input_gives_kbar_plus_one() {
        let cp = ConductivityParams::default();
        let z = vec![0.0; 400];
        assert_eq!(cp.eval(&z, 0.3, 0.7).unwrap(), 4.0);
    }

    #[test]
    fn single_mode() {
        let cp = ConductivityParams::new(1, 3.0).unwrap();
        let k = cp.eval(&[1.0, 0.0, 0.0, 0.0], 0.2, 0.9).unwrap();
        assert!((k - (3.0 + 2f64.sqrt().exp())).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_fd() {
        let cp = ConductivityParams::new(3, 3.0).unwrap();
        let z: [f64; 12] = [0.3, -1.1, 0.8, 0.5, 1.2, -0.4, -0.7, 0.2, 0.9, 1.0, 4.0, 2.5];
        let (x1, x2) = (0.37, 0.81);
        let mut g = vec![0.0; 12];
        cp.accumulate_grad(&z, x1, x2, 1.0, &mut g);
        for k in 0..12 {
            let mut zp = z;
            let mut zm = z;
            zp[k] += 1e-6;
            zm[k] -= 1e-6;
            let fd = (cp.eval(&zp, x1, x2).unwrap() - cp.eval(&zm, x1, x2).unwrap()) / 2e-6;
            assert!((fd - g[k]).abs() < 1e-7 * (1.0 + fd.abs()), "k={k} fd={fd} g={}", g[k]);
        }
    }

    #[test]
    fn b_gradient_vanishes_with_zero_weight() {
        let cp = ConductivityParams::new(2, 3.0).unwrap();
        let z = [0.0, 1.0, 0.3, 0.4, -0.2, 0.5, 1.0, 2.0];
        let mut g = vec![0.0; 8];
        cp.accumulate_grad(&z, 0.5, 0.5, 1.0, &mut g);
        assert_eq!(g[6], 0.0);
        assert!(g[7] != 0.0);
    }

    #[test]
    fn wrong_length_is_error() {
        let cp = ConductivityParams::default();
        assert!(cp.eval(&[0.0; 3], 0.1, 0.1).is_err());
    }
}
