//! Built-in benchmark problems with closed-form LF gradients.
//!
//! | name            | D    | reference                      | LF / HF                                  |
//! |-----------------|------|--------------------------------|------------------------------------------|
//! | `toy`           | 1    | U[-1, 1]                       | `-(sin πz + 0.95)(sin πz - 0.95)`, shared |
//! | `borehole`      | 8    | borehole input table           | `t - f(z)` with the two borehole flows    |
//! | `borehole-low`  | 8    | same                           | rarer failure, less accurate LF           |
//! | `synthetic1000` | 1000 | U[-1, 1]^1000                  | exponential vs. its quadratic Taylor poly |
//! | `beam`          | 4    | uniform loads and moduli       | Euler-Bernoulli tip deflection            |
//! | `heat`          | 400  | random conductivity field      | coarse vs. fine finite differences        |
//!
//! The beam HF is a stand-in: the same closed form with its own threshold. No
//! finite-element model is shipped.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::density::{CoordinateFactor, ReferenceDensity};
use crate::error::{Error, Result};
use crate::heatpde::{self, HeatConfig};
use crate::problem::{ClosureModel, DomainBox, LimitStates, ProblemSpec};
use crate::real::Real;

// ---------------------------------------------------------------------------
// Toy bimodal
// ---------------------------------------------------------------------------

pub fn toy_h<T: Real>(z: T) -> T {
    let s = (T::PI() * z).sin();
    let c = T::lit(0.95);
    -(s + c) * (s - c)
}

/// d/dz of `0.9025 - sin²(πz)`.
pub fn toy_h_prime<T: Real>(z: T) -> T {
    -T::PI() * (T::lit(2.0) * T::PI() * z).sin()
}

/// Exact failure probability of the toy problem under U[-1, 1].
pub fn toy_pf() -> f64 {
    1.0 - 2.0 / std::f64::consts::PI * 0.95f64.asin()
}

pub fn make_toy_bimodal<T: Real>() -> ProblemSpec<T> {
    let p = ReferenceDensity::new(vec![CoordinateFactor::uniform(-T::one(), T::one()).unwrap()]).unwrap();
    let dom = DomainBox::from_support(&p);
    let model = ClosureModel::new(1, |z: &[T]| toy_h(z[0]), |z: &[T]| vec![toy_h_prime(z[0])], |z: &[T]| toy_h(z[0]));
    ProblemSpec::new("toy", p, model, dom).unwrap()
}

// ---------------------------------------------------------------------------
// Borehole
// ---------------------------------------------------------------------------

/// Input box of the borehole function (also the support of its uniform inputs).
pub const BOREHOLE_LOWER: [f64; 8] = [0.05, 4.605, 63070.0, 990.0, 63.1, 700.0, 1120.0, 9855.0];
pub const BOREHOLE_UPPER: [f64; 8] = [0.15, 10.820, 115600.0, 1110.0, 116.0, 820.0, 1680.0, 12045.0];

/// Flow through a borehole,
/// `a·z3·(z4 - z5) / ((z2 - ln z1)·(c + 2·z7·z3 / ((z2 - ln z1)·z1²·z8) + z3/z5))`.
/// The HF flow uses `(a, c) = (2π, 1)`, the LF flow `(5, 1.5)`. `z6` does not enter.
#[derive(Debug, Clone, Copy)]
pub struct BoreholeFlow<T> {
    pub scale: T,
    pub offset: T,
}

impl<T: Real> BoreholeFlow<T> {
    pub fn high() -> Self {
        Self { scale: T::TAU(), offset: T::one() }
    }

    pub fn low() -> Self {
        Self { scale: T::lit(5.0), offset: T::lit(1.5) }
    }

    fn check(z: &[T]) -> Result<()> {
        if z[0] <= T::zero() {
            return Err(Error::Model(format!("borehole radius z1 = {} must be positive", z[0])));
        }
        Ok(())
    }

    // The denominator simplifies to c·L + 2·z7·z3/(z1²·z8) + L·z3/z5, L = z2 - ln z1.
    pub fn value(&self, z: &[T]) -> Result<T> {
        Self::check(z)?;
        let (z1, z2, z3, z4, z5, z7, z8) = (z[0], z[1], z[2], z[3], z[4], z[6], z[7]);
        let l = z2 - z1.ln();
        let num = self.scale * z3 * (z4 - z5);
        let den = self.offset * l + T::lit(2.0) * z7 * z3 / (z1 * z1 * z8) + l * z3 / z5;
        Ok(num / den)
    }

    pub fn value_and_grad(&self, z: &[T]) -> Result<(T, Vec<T>)> {
        Self::check(z)?;
        let two = T::lit(2.0);
        let (z1, z2, z3, z4, z5, z7, z8) = (z[0], z[1], z[2], z[3], z[4], z[6], z[7]);
        let (a, c) = (self.scale, self.offset);
        let l = z2 - z1.ln();
        let k = two * z7 * z3 / (z1 * z1 * z8);
        let num = a * z3 * (z4 - z5);
        let den = c * l + k + l * z3 / z5;

        let mut dnum = [T::zero(); 8];
        dnum[2] = a * (z4 - z5);
        dnum[3] = a * z3;
        dnum[4] = -a * z3;

        let mut dden = [T::zero(); 8];
        dden[0] = -(c + z3 / z5) / z1 - two * k / z1;
        dden[1] = c + z3 / z5;
        dden[2] = k / z3 + l / z5;
        dden[4] = -l * z3 / (z5 * z5);
        dden[6] = k / z7;
        dden[7] = -k / z8;

        let f = num / den;
        let grad = (0..8).map(|i| (dnum[i] - f * dden[i]) / den).collect();
        Ok((f, grad))
    }
}

pub struct BoreholeModel<T> {
    hf_threshold: T,
    lf_threshold: T,
}

impl<T: Real> LimitStates<T> for BoreholeModel<T> {
    fn dim(&self) -> usize {
        8
    }
    fn lf(&self, z: &[T]) -> Result<T> {
        Ok(self.lf_threshold - BoreholeFlow::low().value(z)?)
    }
    fn lf_grad(&self, z: &[T]) -> Result<Vec<T>> {
        self.lf_with_grad(z).map(|(_, g)| g)
    }
    fn lf_with_grad(&self, z: &[T]) -> Result<(T, Vec<T>)> {
        let (f, g) = BoreholeFlow::low().value_and_grad(z)?;
        Ok((self.lf_threshold - f, g.into_iter().map(|x| -x).collect()))
    }
    fn hf(&self, z: &[T]) -> Result<T> {
        Ok(self.hf_threshold - BoreholeFlow::high().value(z)?)
    }
}

pub fn borehole_reference<T: Real>() -> ReferenceDensity<T> {
    let mut f = vec![
        CoordinateFactor::gaussian(T::lit(0.10), T::lit(0.016)).unwrap(),
        CoordinateFactor::gaussian(T::lit(7.71), T::lit(1.0056)).unwrap(),
    ];
    for i in 2..8 {
        f.push(CoordinateFactor::uniform(T::lit(BOREHOLE_LOWER[i]), T::lit(BOREHOLE_UPPER[i])).unwrap());
    }
    ReferenceDensity::new(f).unwrap()
}

pub fn make_borehole<T: Real>(hf_threshold: T, lf_threshold: T) -> Result<ProblemSpec<T>> {
    if !(hf_threshold > T::zero() && lf_threshold > T::zero()) {
        return Err(Error::InvalidParameter("borehole thresholds must be positive".into()));
    }
    let dom = DomainBox::new(BOREHOLE_LOWER.map(T::lit).to_vec(), BOREHOLE_UPPER.map(T::lit).to_vec())?;
    ProblemSpec::new("borehole", borehole_reference(), BoreholeModel { hf_threshold, lf_threshold }, dom)
}

// ---------------------------------------------------------------------------
// High-dimensional synthetic
// ---------------------------------------------------------------------------

/// `s(z) = 2 - Σ sin(k)·z_k / k`; HF flow `exp(s)`, LF flow `1 + s + s²/2`.
pub struct SyntheticModel<T> {
    weights: Vec<T>,
    hf_threshold: T,
    lf_threshold: T,
}

impl<T: Real> SyntheticModel<T> {
    pub fn new(dim: usize, hf_threshold: T, lf_threshold: T) -> Self {
        let weights = (1..=dim).map(|k| T::lit((k as f64).sin() / k as f64)).collect();
        Self { weights, hf_threshold, lf_threshold }
    }

    pub fn exponent(&self, z: &[T]) -> T {
        T::lit(2.0) - crate::real::dot(&self.weights, z)
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }
}

fn taylor2<T: Real>(s: T) -> T {
    T::one() + s + T::lit(0.5) * s * s
}

impl<T: Real> LimitStates<T> for SyntheticModel<T> {
    fn dim(&self) -> usize {
        self.weights.len()
    }
    fn lf(&self, z: &[T]) -> Result<T> {
        Ok(self.lf_threshold - taylor2(self.exponent(z)))
    }
    fn lf_grad(&self, z: &[T]) -> Result<Vec<T>> {
        self.lf_with_grad(z).map(|(_, g)| g)
    }
    // ∇f_LF = -(1 + s)·w, so ∇h_LF = (1 + s)·w.
    fn lf_with_grad(&self, z: &[T]) -> Result<(T, Vec<T>)> {
        let s = self.exponent(z);
        let c = T::one() + s;
        Ok((self.lf_threshold - taylor2(s), self.weights.iter().map(|&w| c * w).collect()))
    }
    fn hf(&self, z: &[T]) -> Result<T> {
        Ok(self.hf_threshold - self.exponent(z).exp())
    }
}

pub fn make_synthetic<T: Real>(dim: usize, hf_threshold: T, lf_threshold: T) -> Result<ProblemSpec<T>> {
    if dim == 0 {
        return Err(Error::InvalidParameter("synthetic problem needs dim >= 1".into()));
    }
    let p = ReferenceDensity::iid(CoordinateFactor::uniform(-T::one(), T::one())?, dim)?;
    let dom = DomainBox::from_support(&p);
    ProblemSpec::new("synthetic1000", p, SyntheticModel::new(dim, hf_threshold, lf_threshold), dom)
}

pub fn make_synthetic1000<T: Real>(hf_threshold: T, lf_threshold: T) -> Result<ProblemSpec<T>> {
    make_synthetic(1000, hf_threshold, lf_threshold)
}

// ---------------------------------------------------------------------------
// Composite cantilever beam
// ---------------------------------------------------------------------------

/// Beam geometry: span `H`, flange thicknesses `h1` (top) and `h2` (bottom),
/// web height `h3` and web width `w`.
#[derive(Debug, Clone, Copy)]
pub struct BeamGeometry {
    pub span: f64,
    pub top: f64,
    pub bottom: f64,
    pub web: f64,
    pub width: f64,
}

pub const BEAM_GEOMETRY: BeamGeometry = BeamGeometry { span: 50.0, top: 0.1, bottom: 0.1, web: 5.0, width: 1.0 };
pub const BEAM_LOWER: [f64; 4] = [9.0, 0.9e6, 0.9e6, 0.9e4];
pub const BEAM_UPPER: [f64; 4] = [11.0, 1.1e6, 1.1e6, 1.1e4];

/// Second moment of area of the transformed section, and its partials with
/// respect to the top and bottom flange widths.
///
/// The section is three stacked rectangles: bottom flange `w2 × h2`, web
/// `w × h3`, top flange `w1 × h1`. Holes in the web are ignored. With `ȳ` the
/// area centroid, `I = Σ (b·h³/12 + A·(y - ȳ)²)` and
/// `∂I/∂b = h³/12 + h·(y - ȳ)²` for either flange.
pub fn beam_inertia<T: Real>(g: &BeamGeometry, top_width: T, bottom_width: T) -> (T, T, T) {
    let twelve = T::lit(12.0);
    let half = T::lit(0.5);
    let (h1, h2, h3, w) = (T::lit(g.top), T::lit(g.bottom), T::lit(g.web), T::lit(g.width));
    let parts = [
        (bottom_width, h2, half * h2),
        (w, h3, h2 + half * h3),
        (top_width, h1, h2 + h3 + half * h1),
    ];
    let area: T = parts.iter().map(|&(b, h, _)| b * h).sum();
    let ybar = parts.iter().map(|&(b, h, y)| b * h * y).sum::<T>() / area;
    let inertia = parts.iter().map(|&(b, h, y)| b * h * h * h / twelve + b * h * (y - ybar).powi(2)).sum();
    let d_top = h1 * h1 * h1 / twelve + h1 * (parts[2].2 - ybar).powi(2);
    let d_bottom = h2 * h2 * h2 / twelve + h2 * (parts[0].2 - ybar).powi(2);
    (inertia, d_top, d_bottom)
}

/// Tip deflection `u(H) = -z1·H⁴ / (8·E·I)` with `E = z4`, flange widths
/// `(z2/z4)·w` and `(z3/z4)·w`.
pub fn beam_tip_deflection<T: Real>(g: &BeamGeometry, z: &[T]) -> Result<(T, Vec<T>)> {
    let (z1, z2, z3, z4) = (z[0], z[1], z[2], z[3]);
    let w = T::lit(g.width);
    let (inertia, d_top, d_bottom) = beam_inertia(g, z2 / z4 * w, z3 / z4 * w);
    if !(inertia > T::zero()) || !(z4 > T::zero()) {
        return Err(Error::Model(format!("beam section stiffness must be positive, got E = {z4}, I = {inertia}")));
    }
    let span4 = T::lit(g.span).powi(4);
    let ei = z4 * inertia;
    let u = -z1 * span4 / (T::lit(8.0) * ei);
    // ∂(E·I)/∂z_k
    let dei2 = w * d_top;
    let dei3 = w * d_bottom;
    let dei4 = inertia - (z2 * d_top + z3 * d_bottom) * w / z4;
    let grad = vec![u / z1, -u / ei * dei2, -u / ei * dei3, -u / ei * dei4];
    Ok((u, grad))
}

pub struct BeamModel<T> {
    hf_threshold: T,
    lf_threshold: T,
}

impl<T: Real> LimitStates<T> for BeamModel<T> {
    fn dim(&self) -> usize {
        4
    }
    fn lf(&self, z: &[T]) -> Result<T> {
        Ok(self.lf_threshold + beam_tip_deflection(&BEAM_GEOMETRY, z)?.0)
    }
    fn lf_grad(&self, z: &[T]) -> Result<Vec<T>> {
        Ok(beam_tip_deflection(&BEAM_GEOMETRY, z)?.1)
    }
    fn lf_with_grad(&self, z: &[T]) -> Result<(T, Vec<T>)> {
        let (u, g) = beam_tip_deflection(&BEAM_GEOMETRY, z)?;
        Ok((self.lf_threshold + u, g))
    }
    /// Stand-in HF: same deflection, HF threshold.
    fn hf(&self, z: &[T]) -> Result<T> {
        Ok(self.hf_threshold + beam_tip_deflection(&BEAM_GEOMETRY, z)?.0)
    }
}

pub fn make_beam<T: Real>(hf_threshold: T, lf_threshold: T) -> Result<ProblemSpec<T>> {
    let f = (0..4)
        .map(|i| CoordinateFactor::uniform(T::lit(BEAM_LOWER[i]), T::lit(BEAM_UPPER[i])))
        .collect::<Result<Vec<_>>>()?;
    let p = ReferenceDensity::new(f)?;
    let dom = DomainBox::from_support(&p);
    ProblemSpec::new("beam", p, BeamModel { hf_threshold, lf_threshold }, dom)
}

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Benchmark {
    Toy,
    Borehole,
    #[serde(rename = "borehole-low")]
    BoreholeLow,
    Synthetic1000,
    Beam,
    Heat,
}

/// Names accepted by [`Benchmark::from_str`].
pub const BENCHMARK_NAMES: [&str; 6] = ["toy", "borehole", "borehole-low", "synthetic1000", "beam", "heat"];

/// Frozen reference failure probability from a seeded brute-force run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferencePf {
    pub value: f64,
    pub samples: u64,
    pub seed: u64,
}

impl ReferencePf {
    pub fn std_error(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            (self.value * (1.0 - self.value) / self.samples as f64).sqrt()
        }
    }
}

/// Seed used for every frozen Monte Carlo reference.
pub const REFERENCE_SEED: u64 = 20_240_601;
pub const REFERENCE_SAMPLES: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkInfo {
    pub name: &'static str,
    pub dim: usize,
    /// Thresholds as printed for the experiment, `(hf, lf)`.
    pub published_thresholds: (f64, f64),
    /// Thresholds used when none are given.
    pub default_thresholds: (f64, f64),
    pub reference_pf: Option<ReferencePf>,
}

impl Benchmark {
    pub const ALL: [Benchmark; 6] = [
        Benchmark::Toy,
        Benchmark::Borehole,
        Benchmark::BoreholeLow,
        Benchmark::Synthetic1000,
        Benchmark::Beam,
        Benchmark::Heat,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Benchmark::Toy => "toy",
            Benchmark::Borehole => "borehole",
            Benchmark::BoreholeLow => "borehole-low",
            Benchmark::Synthetic1000 => "synthetic1000",
            Benchmark::Beam => "beam",
            Benchmark::Heat => "heat",
        }
    }

    pub fn info(&self) -> BenchmarkInfo {
        let frozen = |value| Some(ReferencePf { value, samples: REFERENCE_SAMPLES, seed: REFERENCE_SEED });
        let (dim, published, default, reference_pf) = match self {
            Benchmark::Toy => (1, (0.0, 0.0), (0.0, 0.0), Some(ReferencePf { value: toy_pf(), samples: 0, seed: 0 })),
            Benchmark::Borehole => (8, (800.0, 1000.0), BOREHOLE_THRESHOLDS, frozen(BOREHOLE_PF)),
            Benchmark::BoreholeLow => (8, (900.0, 1100.0), BOREHOLE_LOW_THRESHOLDS, frozen(BOREHOLE_LOW_PF)),
            Benchmark::Synthetic1000 => (1000, (20.0, 8.0), (20.0, 8.0), frozen(SYNTHETIC1000_PF)),
            Benchmark::Beam => (4, (4.04, 3.18), BEAM_THRESHOLDS, frozen(BEAM_PF)),
            Benchmark::Heat => (400, (0.022, 0.019), (0.022, 0.019), None),
        };
        BenchmarkInfo { name: self.name(), dim, published_thresholds: published, default_thresholds: default, reference_pf }
    }

    pub fn build<T: Real>(&self, params: &BenchmarkParams) -> Result<ProblemSpec<T>> {
        let (dh, dl) = self.info().default_thresholds;
        let hf = T::lit(params.hf_threshold.unwrap_or(dh));
        let lf = T::lit(params.lf_threshold.unwrap_or(dl));
        let spec = match self {
            Benchmark::Toy => {
                if params.hf_threshold.is_some() || params.lf_threshold.is_some() {
                    return Err(Error::InvalidParameter("the toy problem has no thresholds".into()));
                }
                make_toy_bimodal()
            }
            Benchmark::Borehole | Benchmark::BoreholeLow => make_borehole(hf, lf)?,
            Benchmark::Synthetic1000 => make_synthetic1000(hf, lf)?,
            Benchmark::Beam => make_beam(hf, lf)?,
            Benchmark::Heat => {
                let mut cfg = HeatConfig::default();
                cfg.hf_threshold = params.hf_threshold.unwrap_or(cfg.hf_threshold);
                cfg.lf_threshold = params.lf_threshold.unwrap_or(cfg.lf_threshold);
                cfg.grid_hf = params.grid_hf.unwrap_or(cfg.grid_hf);
                cfg.grid_lf = params.grid_lf.unwrap_or(cfg.grid_lf);
                cfg.dprime = params.dprime.unwrap_or(cfg.dprime);
                heatpde::make_heat(&cfg)?
            }
        };
        Ok(spec)
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown problem '{s}', expected one of {BENCHMARK_NAMES:?}")))
    }
}

/// Optional overrides for [`Benchmark::build`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkParams {
    pub hf_threshold: Option<f64>,
    pub lf_threshold: Option<f64>,
    pub grid_hf: Option<usize>,
    pub grid_lf: Option<usize>,
    pub dprime: Option<usize>,
}

// Frozen constants. See `examples/freeze_reference.rs` for how they are produced.
pub const BOREHOLE_THRESHOLDS: (f64, f64) = (420.0, 332.0);
pub const BOREHOLE_LOW_THRESHOLDS: (f64, f64) = (460.0, 354.0);
pub const BEAM_THRESHOLDS: (f64, f64) = (6.30, 6.20);
pub const BOREHOLE_PF: f64 = 0.031_116_4;
pub const BOREHOLE_LOW_PF: f64 = 0.014_025_3;
pub const SYNTHETIC1000_PF: f64 = 0.045_831_2;
pub const BEAM_PF: f64 = 0.029_513_5;
