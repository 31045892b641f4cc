//! Steady heat equation `-∇·(K ∇u) = 1` on the unit square with zero
//! Dirichlet boundary and the random conductivity of [`ConductivityParams`].
//!
//! Nodes are `(i, j)` with `x = (i h, j h)`, `h = 1/(n - 1)`, flattened as
//! `i * n + j`. The 5-point stencil uses the arithmetic mean of nodal `K` at
//! each face. The HF model solves on the fine grid, the LF model on a coarse
//! grid and carries an adjoint gradient of its maximum temperature.

mod banded;
mod field;

pub use banded::{BandCholesky, BandMatrix};
pub use field::ConductivityParams;

use serde::{Deserialize, Serialize};

use crate::density::{CoordinateFactor, ReferenceDensity};
use crate::error::{Error, Result};
use crate::problem::{DomainBox, LimitStates, ProblemSpec};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
}

impl GridSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParameter(format!("grid needs at least 3 nodes per side, got {n}")));
        }
        Ok(Self { n })
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.n - 1) as f64
    }

    pub fn nodes(&self) -> usize {
        self.n * self.n
    }

    fn interior(&self) -> usize {
        self.n - 2
    }

    // Unknown index of interior node (i, j).
    fn unknown(&self, i: usize, j: usize) -> usize {
        (i - 1) * self.interior() + (j - 1)
    }

    fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.n - 1 || j == self.n - 1
    }
}

/// Nodal conductivity on a grid.
pub fn nodal_conductivity<T: Real>(cp: &ConductivityParams, grid: GridSpec, z: &[T]) -> Result<Vec<T>> {
    let h = T::lit(grid.spacing());
    let mut k = Vec::with_capacity(grid.nodes());
    for i in 0..grid.n {
        for j in 0..grid.n {
            k.push(cp.eval(z, T::from_usize_lossy(i) * h, T::from_usize_lossy(j) * h)?);
        }
    }
    Ok(k)
}

/// Temperature field together with the factorization that produced it.
#[derive(Debug, Clone)]
pub struct HeatSolution<T> {
    pub grid: GridSpec,
    /// `n × n` nodal temperatures, boundary included.
    pub u: Vec<T>,
    pub residual: T,
    chol: BandCholesky<T>,
}

impl<T: Real> HeatSolution<T> {
    pub fn at(&self, i: usize, j: usize) -> T {
        self.u[i * self.grid.n + j]
    }

    /// Largest nodal temperature and its node. Ties within `1e-14` go to the
    /// lowest node index.
    pub fn argmax(&self) -> (usize, T) {
        let max = self.u.iter().copied().fold(T::neg_infinity(), T::max);
        let tol = T::lit(1e-14);
        let idx = self.u.iter().position(|&v| v >= max - tol).unwrap_or(0);
        (idx, self.u[idx])
    }
}

fn face_neighbors(grid: GridSpec, i: usize, j: usize) -> impl Iterator<Item = (usize, usize)> {
    let n = grid.n;
    [(i.wrapping_sub(1), j), (i + 1, j), (i, j.wrapping_sub(1)), (i, j + 1)]
        .into_iter()
        .filter(move |&(a, b)| a < n && b < n)
}

/// Assembles the interior stiffness matrix for nodal conductivity `k`.
pub fn assemble<T: Real>(grid: GridSpec, k: &[T]) -> BandMatrix<T> {
    let n = grid.n;
    let m = grid.interior();
    let inv_h2 = T::lit(1.0 / grid.spacing().powi(2));
    let half = T::lit(0.5);
    let mut a = BandMatrix::zeros(m * m, m);
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            let p = grid.unknown(i, j);
            for (qi, qj) in face_neighbors(grid, i, j) {
                let kf = half * (k[i * n + j] + k[qi * n + qj]) * inv_h2;
                a.add(p, p, kf);
                if !grid.is_boundary(qi, qj) {
                    let q = grid.unknown(qi, qj);
                    if q < p {
                        a.add(p, q, -kf);
                    }
                }
            }
        }
    }
    a
}

fn relative_tolerance<T: Real>() -> T {
    T::lit(1e-10).max(T::epsilon() * T::lit(1e3))
}

/// Solves for nodal conductivity `k`.
pub fn solve_with_conductivity<T: Real>(grid: GridSpec, k: &[T]) -> Result<HeatSolution<T>> {
    let n = grid.n;
    let m = grid.interior();
    let a = assemble(grid, k);
    let chol = a.cholesky()?;
    let rhs = vec![T::one(); m * m];
    let x = chol.solve(&rhs);
    let ax = a.matvec(&x);
    let rn = ax.iter().zip(&rhs).map(|(p, q)| (*p - *q).powi(2)).sum::<T>().sqrt();
    let residual = rn / T::from_usize_lossy(m * m).sqrt();
    if !(residual < relative_tolerance()) {
        return Err(Error::SolverNonConvergence { residual: residual.to_f64_lossy() });
    }
    let mut u = vec![T::zero(); n * n];
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            u[i * n + j] = x[grid.unknown(i, j)];
        }
    }
    Ok(HeatSolution { grid, u, residual, chol })
}

pub fn solve<T: Real>(cp: &ConductivityParams, grid: GridSpec, z: &[T]) -> Result<HeatSolution<T>> {
    solve_with_conductivity(grid, &nodal_conductivity(cp, grid, z)?)
}

/// `∂u[node]/∂K_m` for every node `m`, from one adjoint solve.
pub fn adjoint_sensitivity<T: Real>(sol: &HeatSolution<T>, node: usize) -> Vec<T> {
    let grid = sol.grid;
    let n = grid.n;
    let m = grid.interior();
    let (ni, nj) = (node / n, node % n);
    let mut lam_full = vec![T::zero(); n * n];
    if !grid.is_boundary(ni, nj) {
        let mut e = vec![T::zero(); m * m];
        e[grid.unknown(ni, nj)] = T::one();
        sol.chol.solve_in_place(&mut e);
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                lam_full[i * n + j] = e[grid.unknown(i, j)];
            }
        }
    }
    // u[node] = λᵀb, so dU/dK_m = -λᵀ (∂A/∂K_m) u. Each face PQ contributes
    // K_f (λ_P - λ_Q)(u_P - u_Q)/h² to λᵀAu, with ∂K_f/∂K_P = 1/2.
    let c = T::lit(0.5 / grid.spacing().powi(2));
    let mut sens = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            let p = i * n + j;
            for (qi, qj) in [(i + 1, j), (i, j + 1)] {
                if qi >= n || qj >= n {
                    continue;
                }
                let q = qi * n + qj;
                let v = c * (lam_full[p] - lam_full[q]) * (sol.u[p] - sol.u[q]);
                if v != T::zero() {
                    sens[p] = sens[p] - v;
                    sens[q] = sens[q] - v;
                }
            }
        }
    }
    sens
}

/// Center temperature of `-Δu = 1` on the unit square, from the double sine series.
pub fn poisson_center_series(terms: usize) -> f64 {
    let pi4 = std::f64::consts::PI.powi(4);
    let mut s = 0.0;
    for j in (1..=terms).step_by(2) {
        for k in (1..=terms).step_by(2) {
            let sign = if ((j + k) / 2 - 1) % 2 == 0 { 1.0 } else { -1.0 };
            let (jf, kf) = (j as f64, k as f64);
            s += sign * 16.0 / (pi4 * jf * kf * (jf * jf + kf * kf));
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeatConfig {
    pub dprime: usize,
    pub kbar: f64,
    pub grid_hf: usize,
    pub grid_lf: usize,
    pub hf_threshold: f64,
    pub lf_threshold: f64,
}

impl Default for HeatConfig {
    fn default() -> Self {
        Self { dprime: 100, kbar: 3.0, grid_hf: 61, grid_lf: 17, hf_threshold: 0.022, lf_threshold: 0.019 }
    }
}

/// `h = t - max u` on two grids.
pub struct HeatModel<T> {
    cp: ConductivityParams,
    grid_hf: GridSpec,
    grid_lf: GridSpec,
    hf_threshold: T,
    lf_threshold: T,
}

impl<T: Real> HeatModel<T> {
    pub fn new(cfg: &HeatConfig) -> Result<Self> {
        Ok(Self {
            cp: ConductivityParams::new(cfg.dprime, cfg.kbar)?,
            grid_hf: GridSpec::new(cfg.grid_hf)?,
            grid_lf: GridSpec::new(cfg.grid_lf)?,
            hf_threshold: T::lit(cfg.hf_threshold),
            lf_threshold: T::lit(cfg.lf_threshold),
        })
    }

    pub fn params(&self) -> &ConductivityParams {
        &self.cp
    }

    pub fn grids(&self) -> (GridSpec, GridSpec) {
        (self.grid_hf, self.grid_lf)
    }
}

impl<T: Real> LimitStates<T> for HeatModel<T> {
    fn dim(&self) -> usize {
        self.cp.dim()
    }

    fn lf(&self, z: &[T]) -> Result<T> {
        Ok(self.lf_threshold - solve(&self.cp, self.grid_lf, z)?.argmax().1)
    }

    fn lf_grad(&self, z: &[T]) -> Result<Vec<T>> {
        self.lf_with_grad(z).map(|(_, g)| g)
    }

    // ∇h = -Σ_m (∂u*/∂K_m) ∇_z K(x_m, z).
    fn lf_with_grad(&self, z: &[T]) -> Result<(T, Vec<T>)> {
        let grid = self.grid_lf;
        let sol = solve(&self.cp, grid, z)?;
        let (node, umax) = sol.argmax();
        let sens = adjoint_sensitivity(&sol, node);
        let h = T::lit(grid.spacing());
        let mut g = vec![T::zero(); self.cp.dim()];
        for i in 0..grid.n {
            for j in 0..grid.n {
                let s = sens[i * grid.n + j];
                if s != T::zero() {
                    let (x1, x2) = (T::from_usize_lossy(i) * h, T::from_usize_lossy(j) * h);
                    self.cp.accumulate_grad(z, x1, x2, -s, &mut g);
                }
            }
        }
        Ok((self.lf_threshold - umax, g))
    }

    fn hf(&self, z: &[T]) -> Result<T> {
        Ok(self.hf_threshold - solve(&self.cp, self.grid_hf, z)?.argmax().1)
    }
}

pub fn heat_reference<T: Real>(dprime: usize) -> Result<ReferenceDensity<T>> {
    let g = CoordinateFactor::gaussian(T::zero(), T::one())?;
    let u = CoordinateFactor::uniform(T::zero(), T::TAU())?;
    let mut f = vec![g; 3 * dprime];
    f.extend(std::iter::repeat_n(u, dprime));
    ReferenceDensity::new(f)
}

pub fn make_heat<T: Real>(cfg: &HeatConfig) -> Result<ProblemSpec<T>> {
    let model = HeatModel::new(cfg)?;
    let p = heat_reference(cfg.dprime)?;
    let dom = DomainBox::from_support(&p);
    ProblemSpec::new("heat", p, model, dom)
}
