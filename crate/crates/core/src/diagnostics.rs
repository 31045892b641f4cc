//! Overlap probabilities, variance decomposition, and the normalizer, variance
//! and KL bounds, with plug-in and (for one-dimensional problems) quadrature
//! versions.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::ProblemSpec;
use crate::quadrature::{integrate_with_breaks, sign_changes};
use crate::real::Real;
use crate::rng::Stream;

/// Joint Monte Carlo estimates of `P[A_L]`, `P[A_H]` and `P[A_H ∩ A_L^c]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlapReport {
    pub p_al: f64,
    pub p_ah: f64,
    pub p_ah_and_alc: f64,
    pub n_hf_used: usize,
    pub n_lf_used: usize,
}

fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n.max(1) as f64).sqrt()
}

impl OverlapReport {
    pub fn se_al(&self) -> f64 {
        binomial_se(self.p_al, self.n_lf_used)
    }

    pub fn se_ah(&self) -> f64 {
        binomial_se(self.p_ah, self.n_hf_used)
    }

    pub fn se_ah_and_alc(&self) -> f64 {
        binomial_se(self.p_ah_and_alc, self.n_hf_used)
    }
}

/// Costs `n_joint` HF and `n_joint` LF evaluations.
pub fn overlap_probs<T: Real>(problem: &ProblemSpec<T>, n_joint: usize, seed: u64) -> Result<OverlapReport> {
    if n_joint == 0 {
        return Err(Error::InvalidParameter("overlap estimate needs n_joint >= 1".into()));
    }
    let stream = Stream::new(seed).tagged("overlap");
    let d = problem.dim();
    let (al, ah, ah_alc) = (0..n_joint)
        .into_par_iter()
        .map_init(
            || vec![T::zero(); d],
            |z, i| {
                problem.reference().sample_row(&stream, i, z);
                let l = problem.lf_eval(z)? < T::zero();
                let h = problem.hf_eval(z)? < T::zero();
                Ok((l as usize, h as usize, (h && !l) as usize))
            },
        )
        .try_reduce(|| (0, 0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1, a.2 + b.2)))?;
    let n = n_joint as f64;
    Ok(OverlapReport {
        p_al: al as f64 / n,
        p_ah: ah as f64 / n,
        p_ah_and_alc: ah_alc as f64 / n,
        n_hf_used: n_joint,
        n_lf_used: n_joint,
    })
}

/// `Var[XY] = Var X · Var Y + E²X · Var Y + Var X · E²Y` for independent `X`, `Y`.
pub fn product_variance(mean_x: f64, var_x: f64, mean_y: f64, var_y: f64) -> f64 {
    var_x * var_y + mean_x * mean_x * var_y + var_x * mean_y * mean_y
}

/// The three terms of the L-BF-IS variance with `X = Ẑ_M`, `Y` the HF average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceBreakdown {
    /// `Var_p[e^{-ℓt}] Var_q[1_H e^{ℓt}] / (M N)`.
    pub cross: f64,
    /// `Z² Var_q[1_H e^{ℓt}] / N`, the large-`M` approximation.
    pub sampling: f64,
    /// `Var_p[e^{-ℓt}] P_f² / M`.
    pub normalizer: f64,
    pub total: f64,
}

/// Plug-in breakdown from factor moments: `Z`, `Var_p[e^{-ℓt}]`,
/// `Var_q[1_H e^{ℓt}]` and `P_f`.
pub fn variance_decomposition(z: f64, var_p: f64, var_q: f64, pf: f64, m: usize, n: usize) -> VarianceBreakdown {
    let (m, n) = (m as f64, n as f64);
    let cross = var_p * var_q / (m * n);
    let sampling = z * z * var_q / n;
    let normalizer = var_p * pf * pf / m;
    VarianceBreakdown { cross, sampling, normalizer, total: cross + sampling + normalizer }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizerBound {
    pub zhat: f64,
    pub bound: f64,
    pub slack: f64,
    pub satisfied: bool,
}

/// `Z(ℓ) < (e^ℓ - 1) P[A_L] + 1`, checked with `3·SE` slack from both plug-ins.
pub fn normalizer_bound(ell: f64, zhat: f64, zhat_se: f64, overlap: &OverlapReport) -> NormalizerBound {
    let k = ell.exp_m1();
    let bound = k * overlap.p_al + 1.0;
    let slack = 3.0 * (zhat_se.powi(2) + (k * overlap.se_al()).powi(2)).sqrt();
    let satisfied = if ell == 0.0 { zhat <= bound + slack } else { zhat < bound + slack };
    NormalizerBound { zhat, bound, slack, satisfied }
}

/// Variance bound `((1 + (e^ℓ-1)P[A_L]) (P_f + (e^ℓ-1) P[A_H∩A_L^c]) - P_f²) / N`.
pub fn variance_bound(ell: f64, overlap: &OverlapReport, n: usize) -> f64 {
    let k = ell.exp_m1();
    ((1.0 + k * overlap.p_al) * (overlap.p_ah + k * overlap.p_ah_and_alc) - overlap.p_ah.powi(2)) / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KlBound {
    /// `log((1 + (e^ℓ-1)P[A_L]) / P_f) + ℓ P[A_H∩A_L^c]`, as usually stated.
    pub stated: f64,
    /// Same with the mismatch term divided by `P_f`, which follows from taking
    /// the expectation under `q*`. Equal to `stated` when `A_H ⊆ A_L`.
    pub consistent: f64,
}

pub fn kl_bound(ell: f64, overlap: &OverlapReport) -> Result<KlBound> {
    if !(overlap.p_ah > 0.0) {
        return Err(Error::ZeroFailureProbability);
    }
    let head = ((1.0 + ell.exp_m1() * overlap.p_al) / overlap.p_ah).ln();
    Ok(KlBound {
        stated: head + ell * overlap.p_ah_and_alc,
        consistent: head + ell * overlap.p_ah_and_alc / overlap.p_ah,
    })
}

/// Exact functionals of a one-dimensional problem by quadrature.
pub struct Quadrature1d<'a> {
    pub lower: f64,
    pub upper: f64,
    pub density: &'a (dyn Fn(f64) -> f64 + Sync),
    pub h_lf: &'a (dyn Fn(f64) -> f64 + Sync),
    pub h_hf: &'a (dyn Fn(f64) -> f64 + Sync),
    breaks: Vec<f64>,
    tol: f64,
}

impl<'a> Quadrature1d<'a> {
    pub fn new(
        lower: f64,
        upper: f64,
        density: &'a (dyn Fn(f64) -> f64 + Sync),
        h_lf: &'a (dyn Fn(f64) -> f64 + Sync),
        h_hf: &'a (dyn Fn(f64) -> f64 + Sync),
    ) -> Self {
        let mut breaks = sign_changes(&|x| h_lf(x), lower, upper, 4000);
        breaks.extend(sign_changes(&|x| h_hf(x), lower, upper, 4000));
        breaks.sort_by(|a, b| a.total_cmp(b));
        Self { lower, upper, density, h_lf, h_hf, breaks, tol: 1e-14 }
    }

    /// Toy bimodal problem under U[-1, 1].
    pub fn toy() -> Quadrature1d<'static> {
        static P: fn(f64) -> f64 = |_| 0.5;
        static H: fn(f64) -> f64 = crate::benchmarks::toy_h::<f64>;
        Quadrature1d::new(-1.0, 1.0, &P, &H, &H)
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        integrate_with_breaks(&|x| f(x) * (self.density)(x), self.lower, self.upper, &self.breaks, self.tol)
    }

    fn fail(&self, x: f64) -> f64 {
        if (self.h_hf)(x) < 0.0 {
            1.0
        } else {
            0.0
        }
    }

    pub fn pf(&self) -> f64 {
        self.integrate(|x| self.fail(x))
    }

    pub fn p_al(&self) -> f64 {
        self.integrate(|x| if (self.h_lf)(x) < 0.0 { 1.0 } else { 0.0 })
    }

    pub fn p_ah_and_alc(&self) -> f64 {
        self.integrate(|x| if (self.h_lf)(x) >= 0.0 { self.fail(x) } else { 0.0 })
    }

    pub fn overlap(&self) -> OverlapReport {
        OverlapReport {
            p_al: self.p_al(),
            p_ah: self.pf(),
            p_ah_and_alc: self.p_ah_and_alc(),
            n_hf_used: usize::MAX,
            n_lf_used: usize::MAX,
        }
    }

    /// `Z(ℓ) = E_p[exp(-ℓ tanh h_LF)]`.
    pub fn z(&self, ell: f64) -> f64 {
        self.integrate(|x| (-ell * (self.h_lf)(x).tanh()).exp())
    }

    /// `Var_p[exp(-ℓ tanh h_LF)]`.
    pub fn var_p_normalizer(&self, ell: f64) -> f64 {
        self.integrate(|x| (-2.0 * ell * (self.h_lf)(x).tanh()).exp()) - self.z(ell).powi(2)
    }

    /// `E_p[1_H exp(ℓ tanh h_LF)]`.
    pub fn tilted_failure(&self, ell: f64) -> f64 {
        self.integrate(|x| self.fail(x) * (ell * (self.h_lf)(x).tanh()).exp())
    }

    /// `Var_q[1_H exp(ℓ tanh h_LF)]`, integrating against `q` directly.
    pub fn var_q(&self, ell: f64) -> f64 {
        let z = self.z(ell);
        let q = |x: f64| (-ell * (self.h_lf)(x).tanh()).exp() / z;
        let y = |x: f64| self.fail(x) * (ell * (self.h_lf)(x).tanh()).exp();
        let m1 = self.integrate(|x| y(x) * q(x));
        let m2 = self.integrate(|x| y(x) * y(x) * q(x));
        m2 - m1 * m1
    }

    /// `(Z² / N) Var_q[1_H e^{ℓt}]` from q-moments.
    pub fn variance_direct(&self, ell: f64, n: usize) -> f64 {
        self.z(ell).powi(2) * self.var_q(ell) / n as f64
    }

    /// The same quantity as `(Z/N) E_p[1_H e^{ℓt}] - P_f² / N`.
    pub fn variance_p_form(&self, ell: f64, n: usize) -> f64 {
        (self.z(ell) * self.tilted_failure(ell) - self.pf().powi(2)) / n as f64
    }

    /// `∫ q = 1` check value, `∫ exp(-ℓt) p / Z`.
    pub fn q_mass(&self, ell: f64) -> f64 {
        let z = self.z(ell);
        self.integrate(|x| (-ell * (self.h_lf)(x).tanh()).exp()) / z
    }

    /// `KL(q* ‖ q) = log(Z/P_f) + (ℓ/P_f) ∫_{A_H} tanh(h_LF) p`.
    pub fn kl(&self, ell: f64) -> f64 {
        let pf = self.pf();
        (self.z(ell) / pf).ln() + ell / pf * self.integrate(|x| self.fail(x) * (self.h_lf)(x).tanh())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{make_toy_bimodal, toy_pf};
    use crate::density::{CoordinateFactor, ReferenceDensity};
    use crate::problem::{ClosureModel, DomainBox};

    #[test]
    fn toy_quadrature_basics() {
        let q = Quadrature1d::toy();
        assert!((q.pf() - toy_pf()).abs() < 1e-12);
        assert_eq!(q.p_ah_and_alc(), 0.0);
        assert!((q.z(0.0) - 1.0).abs() < 1e-13);
        for ell in [0.5, 3.0, 9.0] {
            assert!((q.q_mass(ell) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn variance_forms_agree() {
        let q = Quadrature1d::toy();
        for ell in [2.0, 5.0, 8.0] {
            let a = q.variance_direct(ell, 1);
            let b = q.variance_p_form(ell, 1);
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn bounds_hold_under_quadrature() {
        let q = Quadrature1d::toy();
        let o = q.overlap();
        for ell in 1..=10 {
            let ell = ell as f64;
            let nb = normalizer_bound(ell, q.z(ell), 0.0, &o);
            assert!(nb.zhat < nb.bound);
            let kb = kl_bound(ell, &o).unwrap();
            assert!(q.kl(ell) < kb.stated);
            assert_eq!(kb.stated, kb.consistent);
        }
        let nb = normalizer_bound(0.0, 1.0, 0.0, &o);
        assert!(nb.satisfied && nb.bound == 1.0);
        let kb = kl_bound(1e-12, &o).unwrap();
        assert!((kb.stated - (1.0 / toy_pf()).ln()).abs() < 1e-9);
        assert!((q.kl(0.0) - (1.0 / toy_pf()).ln()).abs() < 1e-10);
    }

    #[test]
    fn product_variance_identity() {
        let mut rng = Stream::new(3).rng();
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| 1.0 + rand::Rng::random::<f64>(&mut rng)).collect();
        let ys: Vec<f64> = (0..n).map(|_| 2.0 * rand::Rng::random::<f64>(&mut rng)).collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let var = |v: &[f64]| {
            let m = mean(v);
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
        };
        let (mx, vx, my, vy) = (mean(&xs), var(&xs), mean(&ys), var(&ys));
        // Population moments of the outer product of the two samples.
        let ex2 = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let ey2 = ys.iter().map(|y| y * y).sum::<f64>() / n as f64;
        let direct = ex2 * ey2 - (mx * my).powi(2);
        assert!((product_variance(mx, vx, my, vy) - direct).abs() < 1e-12);
        // Analytic: X ~ U[1,2], Y ~ U[0,2].
        let exact = product_variance(1.5, 1.0 / 12.0, 1.0, 1.0 / 3.0);
        assert!((product_variance(mx, vx, my, vy) - exact).abs() < 0.01);
    }

    #[test]
    fn decomposition_limits() {
        let q = Quadrature1d::toy();
        let ell = 5.0;
        let v = variance_decomposition(q.z(ell), q.var_p_normalizer(ell), q.var_q(ell), q.pf(), usize::MAX / 4, 100);
        assert!(v.cross < 1e-15 && v.normalizer < 1e-15);
        assert!((v.sampling - q.variance_direct(ell, 100)).abs() < 1e-15);
    }

    #[test]
    fn overlap_cases() {
        let spec = make_toy_bimodal::<f64>();
        let o = overlap_probs(&spec, 50_000, 1).unwrap();
        assert_eq!(o.p_ah_and_alc, 0.0);
        assert_eq!(o.p_al, o.p_ah);
        assert!((o.p_ah - toy_pf()).abs() < 4.0 * o.se_ah());

        let p = ReferenceDensity::new(vec![CoordinateFactor::uniform(-1.0, 1.0).unwrap()]).unwrap();
        let m = ClosureModel::new(1, |z: &[f64]| -z[0], |_: &[f64]| vec![-1.0], |z: &[f64]| z[0]);
        let disjoint = ProblemSpec::new("disjoint", p, m, DomainBox::new(vec![-1.0], vec![1.0]).unwrap()).unwrap();
        let o = overlap_probs(&disjoint, 20_000, 2).unwrap();
        assert_eq!(o.p_ah_and_alc, o.p_ah);
        assert!((o.p_ah - 0.5).abs() < 0.02);
        assert!(o.p_ah_and_alc <= o.p_ah);
    }

    #[test]
    fn kl_needs_failures() {
        let o = OverlapReport { p_al: 0.1, p_ah: 0.0, p_ah_and_alc: 0.0, n_hf_used: 10, n_lf_used: 10 };
        assert!(kl_bound(1.0, &o).is_err());
    }
}
