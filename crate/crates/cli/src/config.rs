//! Run configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use lbfis::benchmarks::BenchmarkParams;
use lbfis::estimators::{ReplicateMode, DEFAULT_N_GRID};
use lbfis::{Approach, Benchmark, InitialState, Method};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F64,
    F32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed. There is no wall-clock fallback.
    pub seed: Option<u64>,
    #[serde(default)]
    pub precision: Precision,
    pub output_dir: Option<PathBuf>,
    pub problem: ProblemSection,
    #[serde(default)]
    pub mala: MalaSection,
    #[serde(default)]
    pub estimator: EstimatorSection,
    #[serde(default)]
    pub ell: EllSection,
    #[serde(default)]
    pub tuning: TuningSection,
    #[serde(default)]
    pub diagnose: DiagnoseSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub name: Benchmark,
    pub hf_threshold: Option<f64>,
    pub lf_threshold: Option<f64>,
    pub grid_hf: Option<usize>,
    pub grid_lf: Option<usize>,
    pub dprime: Option<usize>,
    /// Out-of-domain penalty coefficient.
    pub penalty: Option<f64>,
    /// Overrides the catalog reference for rRMSE.
    pub reference_pf: Option<f64>,
}

impl ProblemSection {
    pub fn named(name: Benchmark) -> Self {
        Self {
            name,
            hf_threshold: None,
            lf_threshold: None,
            grid_hf: None,
            grid_lf: None,
            dprime: None,
            penalty: None,
            reference_pf: None,
        }
    }

    pub fn params(&self) -> BenchmarkParams {
        BenchmarkParams {
            hf_threshold: self.hf_threshold,
            lf_threshold: self.lf_threshold,
            grid_hf: self.grid_hf,
            grid_lf: self.grid_lf,
            dprime: self.dprime,
        }
    }

    pub fn reference_pf(&self) -> Option<f64> {
        let catalog = self.hf_threshold.is_none() && self.lf_threshold.is_none() && self.grid_hf.is_none();
        self.reference_pf.or_else(|| if catalog { self.name.info().reference_pf.map(|r| r.value) } else { None })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MalaSection {
    pub tau: f64,
    pub burn_in: usize,
    pub iters: usize,
    pub chains: usize,
    pub init: InitialState,
}

impl Default for MalaSection {
    fn default() -> Self {
        Self { tau: 1e-3, burn_in: 1000, iters: 1000, chains: 4, init: InitialState::Resample }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorSection {
    /// Reference draws for the normalizer.
    pub m: usize,
    /// HF evaluations per estimate.
    pub n: usize,
    pub trials: usize,
    pub n_grid: Vec<usize>,
    pub methods: Vec<Method>,
    pub mode: ReplicateMode,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        Self {
            m: 100_000,
            n: 100,
            trials: 100,
            n_grid: DEFAULT_N_GRID.to_vec(),
            methods: vec![Method::Mc, Method::LfOnly, Method::Lbfis],
            mode: ReplicateMode::Fresh,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EllMode {
    #[default]
    Fixed,
    Tuned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EllSection {
    pub mode: EllMode,
    pub value: f64,
}

impl Default for EllSection {
    fn default() -> Self {
        Self { mode: EllMode::Fixed, value: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuningSection {
    pub method: Approach,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_points: usize,
    /// HF pilot size, approach one only.
    pub pilot_l: usize,
    /// Pool size; the estimator's `m` when absent.
    pub m: Option<usize>,
    pub replicates: usize,
}

impl Default for TuningSection {
    fn default() -> Self {
        Self { method: Approach::Two, grid_min: 0.1, grid_max: 10.0, grid_points: 40, pilot_l: 0, m: None, replicates: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnoseSection {
    /// Joint HF/LF reference draws for the overlap probabilities.
    pub n_joint: usize,
}

impl Default for DiagnoseSection {
    fn default() -> Self {
        Self { n_joint: 100_000 }
    }
}

impl RunConfig {
    pub fn for_problem(name: Benchmark) -> Self {
        Self {
            seed: None,
            precision: Precision::F64,
            output_dir: None,
            problem: ProblemSection::named(name),
            mala: MalaSection::default(),
            estimator: EstimatorSection::default(),
            ell: EllSection::default(),
            tuning: TuningSection::default(),
            diagnose: DiagnoseSection::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| CliError::Config("a seed is required (config `seed` or --seed)".into()))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("out").join(self.problem.name.name()))
    }

    pub fn tuning_m(&self) -> usize {
        self.tuning.m.unwrap_or(self.estimator.m)
    }

    /// Rejects budgets and ranges that cannot run.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        self.seed()?;
        let m = &self.mala;
        if !(m.tau > 0.0 && m.tau.is_finite()) {
            return bad(format!("mala.tau must be positive, got {}", m.tau));
        }
        if m.iters == 0 || m.chains == 0 {
            return bad("mala.iters and mala.chains must be >= 1".into());
        }
        if let InitialState::Point(p) = &m.init {
            if p.len() != self.problem.name.info().dim && self.problem.name != Benchmark::Heat {
                return bad(format!("mala.init point has {} coordinates, the problem has {}", p.len(), self.problem.name.info().dim));
            }
        }
        let e = &self.estimator;
        if e.m == 0 || e.n == 0 || e.trials == 0 {
            return bad("estimator.m, estimator.n and estimator.trials must be >= 1".into());
        }
        if e.n_grid.is_empty() || e.n_grid.contains(&0) || e.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("estimator.n_grid must be a non-empty increasing list of positive sizes".into());
        }
        if e.methods.is_empty() {
            return bad("estimator.methods is empty".into());
        }
        if self.ell.mode == EllMode::Fixed && !(self.ell.value >= 0.0 && self.ell.value.is_finite()) {
            return bad(format!("ell.value must be finite and >= 0, got {}", self.ell.value));
        }
        let t = &self.tuning;
        if !(t.grid_min > 0.0 && t.grid_max > t.grid_min) || t.grid_points < 2 {
            return bad("tuning grid needs 0 < grid_min < grid_max and grid_points >= 2".into());
        }
        if t.method == Approach::One && t.pilot_l == 0 {
            return bad("tuning.method = \"one\" needs tuning.pilot_l >= 1".into());
        }
        if t.replicates == 0 || self.tuning_m() == 0 {
            return bad("tuning.replicates and tuning.m must be >= 1".into());
        }
        if self.diagnose.n_joint == 0 {
            return bad("diagnose.n_joint must be >= 1".into());
        }
        Ok(())
    }
}
