//! Subcommand bodies. Each returns the summary lines to print.

use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use lbfis::biasing::normalizer_stream;
use lbfis::diagnostics::{self, KlBound, NormalizerBound, OverlapReport, Quadrature1d};
use lbfis::estimators::{self, EllChoice, LbfisRun, RunSeeds, StudyConfig};
use lbfis::rng::derive_seed;
use lbfis::tuning::{self, TuningConfig};
use lbfis::{mala, Benchmark, BiasingModel, EllSweep, LbfisConfig, LfPool, MalaConfig, ProblemSpec, Real};

use crate::config::{EllMode, Precision, RunConfig};
use crate::error::CliError;
use crate::output::{coord_header, ensure_dir, fmt, write_json, write_records, write_table};

type Lines = Result<Vec<String>, CliError>;

const TUNE_SALT: u64 = 0x54_55_4E_45;
const OVERLAP_SALT: u64 = 0x4F_56_4C_50;

fn build<T: Real>(cfg: &RunConfig) -> Result<ProblemSpec<T>, CliError> {
    let spec: ProblemSpec<T> = cfg.problem.name.build(&cfg.problem.params())?;
    Ok(match cfg.problem.penalty {
        Some(c) => spec.with_penalty(T::lit(c))?,
        None => spec,
    })
}

fn mala_config(cfg: &RunConfig, seed: u64) -> MalaConfig {
    let m = &cfg.mala;
    MalaConfig::new(m.tau, m.burn_in, m.iters, m.chains, seed).with_init(m.init.clone())
}

fn tuning_config(cfg: &RunConfig) -> Result<TuningConfig, CliError> {
    let t = &cfg.tuning;
    Ok(TuningConfig {
        method: t.method,
        grid: tuning::log_grid(t.grid_min, t.grid_max, t.grid_points)?,
        m: cfg.tuning_m(),
        pilot_l: t.pilot_l,
        replicates: t.replicates,
    })
}

fn write_sweep(dir: &Path, sweep: &EllSweep) -> Result<(), CliError> {
    write_records(&dir.join("sweep.csv"), &sweep.points)
}

fn sweep_lines(sweep: &EllSweep) -> Vec<String> {
    let mut v = vec![format!(
        "ell* = {} (approach {}, {} failures in the proxy sample)",
        sweep.ell_star, sweep.method, sweep.failures
    )];
    if sweep.high_uncertainty {
        v.push("warning: the proxy at ell* is highly uncertain".into());
    }
    v
}

fn dispatch<F32, F64>(cfg: &RunConfig, f32: F32, f64: F64) -> Lines
where
    F32: FnOnce(&RunConfig) -> Lines,
    F64: FnOnce(&RunConfig) -> Lines,
{
    match cfg.precision {
        Precision::F32 => f32(cfg),
        Precision::F64 => f64(cfg),
    }
}

#[derive(Serialize)]
struct EstimateFile<'a> {
    command: &'static str,
    config: &'a RunConfig,
    run: &'a LbfisRun,
    reference_pf: Option<f64>,
}

pub fn estimate(cfg: &RunConfig) -> Lines {
    dispatch(cfg, estimate_t::<f32>, estimate_t::<f64>)
}

fn estimate_t<T: Real>(cfg: &RunConfig) -> Lines {
    let seed = cfg.seed()?;
    let problem = build::<T>(cfg)?;
    let ell = match cfg.ell.mode {
        EllMode::Fixed => EllChoice::Fixed { ell: cfg.ell.value },
        EllMode::Tuned => {
            let t = tuning_config(cfg)?;
            EllChoice::Tuned { method: t.method, grid: t.grid, pilot_l: t.pilot_l }
        }
    };
    let lcfg = LbfisConfig { ell, m: cfg.estimator.m, n: cfg.estimator.n, mala: mala_config(cfg, 0) };
    let run = estimators::run_lbfis(&problem, &lcfg, seed)?;

    let dir = cfg.output_dir();
    ensure_dir(&dir)?;
    let reference_pf = cfg.problem.reference_pf();
    write_json(&dir.join("report.json"), &EstimateFile { command: "estimate", config: cfg, run: &run, reference_pf })?;
    let mut header = vec!["index".to_string()];
    header.extend(coord_header("z", problem.dim()));
    header.extend(["lf", "hf", "weight"].map(String::from));
    write_table(
        &dir.join("samples.csv"),
        &header,
        run.draws.iter().map(|d| {
            let mut row = vec![d.index.to_string()];
            row.extend(d.z.iter().map(|&x| fmt(x)));
            row.extend([fmt(d.lf), fmt(d.hf), fmt(d.weight)]);
            row
        }),
    )?;
    let mut lines = Vec::new();
    if let Some(s) = &run.sweep {
        write_sweep(&dir, s)?;
        lines.extend(sweep_lines(s));
    }
    let r = &run.report;
    let acc = run.acceptance_rate.iter().sum::<f64>() / run.acceptance_rate.len() as f64;
    lines.push(format!("problem    {}", cfg.problem.name));
    lines.push(format!("estimate   {}", r.value));
    lines.push(format!("N          {}", cfg.estimator.n));
    lines.push(format!("ell        {}", r.ell.unwrap_or(f64::NAN)));
    lines.push(format!("Zhat       {}", r.zhat.unwrap_or(f64::NAN)));
    lines.push(format!("acceptance {acc:.4}"));
    lines.push(format!("hf_count   {}", run.ledger.hf_count));
    lines.push(format!("lf_count   {}", run.ledger.lf_count));
    if let Some(p) = reference_pf {
        lines.push(format!("reference  {p}"));
    }
    Ok(lines)
}

#[derive(Serialize)]
struct ConvergenceFile<'a> {
    command: &'static str,
    config: &'a RunConfig,
    ell: f64,
    sweep: Option<&'a EllSweep>,
    mode: estimators::ReplicateMode,
    pf_ref: f64,
    mean_acceptance: Option<f64>,
    summary: &'a [estimators::SummaryRow],
}

fn resolved_ell<T: Real>(cfg: &RunConfig, problem: &ProblemSpec<T>, seed: u64) -> Result<(f64, Option<EllSweep>), CliError> {
    match cfg.ell.mode {
        EllMode::Fixed => Ok((cfg.ell.value, None)),
        EllMode::Tuned => {
            let s = tuning::select_ell(problem, &tuning_config(cfg)?, derive_seed(seed, TUNE_SALT))?;
            Ok((s.ell_star, Some(s)))
        }
    }
}

pub fn convergence(cfg: &RunConfig) -> Lines {
    dispatch(cfg, convergence_t::<f32>, convergence_t::<f64>)
}

fn convergence_t<T: Real>(cfg: &RunConfig) -> Lines {
    let seed = cfg.seed()?;
    let problem = build::<T>(cfg)?;
    let pf_ref = cfg.problem.reference_pf().ok_or_else(|| {
        CliError::Config(format!("no reference P_f for {}; set problem.reference_pf", cfg.problem.name))
    })?;
    let (ell, sweep) = resolved_ell(cfg, &problem, seed)?;
    let e = &cfg.estimator;
    let scfg = StudyConfig {
        n_grid: e.n_grid.clone(),
        trials: e.trials,
        methods: e.methods.clone(),
        mode: e.mode,
        ell,
        m: e.m,
        mala: mala_config(cfg, 0),
    };
    let study = estimators::convergence_study(&problem, &scfg, pf_ref, seed)?;

    let dir = cfg.output_dir();
    ensure_dir(&dir)?;
    write_records(&dir.join("trials.csv"), &study.trials)?;
    write_records(&dir.join("summary.csv"), &study.summary)?;
    if let Some(s) = &sweep {
        write_sweep(&dir, s)?;
    }
    write_json(
        &dir.join("convergence.json"),
        &ConvergenceFile {
            command: "convergence",
            config: cfg,
            ell,
            sweep: sweep.as_ref(),
            mode: study.mode,
            pf_ref,
            mean_acceptance: study.mean_acceptance,
            summary: &study.summary,
        },
    )?;
    let mut lines = sweep.as_ref().map(sweep_lines).unwrap_or_default();
    lines.push(format!("problem {} ell {} mode {:?} reference {}", cfg.problem.name, ell, study.mode, pf_ref));
    lines.push(format!("{:<8} {:>7} {:>12} {:>10} {:>12} {:>12}", "method", "n", "mean", "rrmse", "lo95", "hi95"));
    for r in &study.summary {
        lines.push(format!(
            "{:<8} {:>7} {:>12.6e} {:>10.4} {:>12.6e} {:>12.6e}",
            r.method.name(),
            r.n,
            r.mean,
            r.rrmse,
            r.lo95,
            r.hi95
        ));
    }
    if let Some(a) = study.mean_acceptance {
        lines.push(format!("mean acceptance {a:.4}"));
    }
    Ok(lines)
}

#[derive(Serialize)]
struct TuneFile<'a> {
    command: &'static str,
    config: &'a RunConfig,
    sweep: &'a EllSweep,
    hf_count: u64,
    lf_count: u64,
}

pub fn tune(cfg: &RunConfig) -> Lines {
    dispatch(cfg, tune_t::<f32>, tune_t::<f64>)
}

fn tune_t<T: Real>(cfg: &RunConfig) -> Lines {
    let seed = cfg.seed()?;
    let problem = build::<T>(cfg)?;
    let sweep = tuning::select_ell(&problem, &tuning_config(cfg)?, seed)?;
    let ledger = problem.ledger();
    let dir = cfg.output_dir();
    ensure_dir(&dir)?;
    write_sweep(&dir, &sweep)?;
    write_json(
        &dir.join("sweep.json"),
        &TuneFile { command: "tune-ell", config: cfg, sweep: &sweep, hf_count: ledger.hf_count, lf_count: ledger.lf_count },
    )?;
    let mut lines = sweep_lines(&sweep);
    lines.push(format!("hf_count {} lf_count {}", ledger.hf_count, ledger.lf_count));
    Ok(lines)
}

#[derive(Serialize)]
struct QuadratureBlock {
    pf: f64,
    z: f64,
    kl: f64,
    variance_direct: f64,
    variance_p_form: f64,
}

#[derive(Serialize)]
struct DiagnoseFile<'a> {
    command: &'static str,
    config: &'a RunConfig,
    ell: f64,
    n: usize,
    overlap: OverlapReport,
    zhat: f64,
    zhat_se: f64,
    normalizer_bound: NormalizerBound,
    variance_bound: f64,
    kl_bound: Option<KlBound>,
    quadrature: Option<QuadratureBlock>,
}

pub fn diagnose(cfg: &RunConfig) -> Lines {
    dispatch(cfg, diagnose_t::<f32>, diagnose_t::<f64>)
}

fn diagnose_t<T: Real>(cfg: &RunConfig) -> Lines {
    let seed = cfg.seed()?;
    let problem = build::<T>(cfg)?;
    let (ell, _) = resolved_ell(cfg, &problem, seed)?;
    let n = cfg.estimator.n;
    let overlap = diagnostics::overlap_probs(&problem, cfg.diagnose.n_joint, derive_seed(seed, OVERLAP_SALT))?;
    let pool = LfPool::build(&problem, normalizer_stream(seed), cfg.estimator.m)?;
    let (zhat, zhat_se) = pool.normalizer(T::lit(ell));
    let (zhat, zhat_se) = (zhat.to_f64_lossy(), zhat_se.to_f64_lossy());
    let nb = diagnostics::normalizer_bound(ell, zhat, zhat_se, &overlap);
    let vb = diagnostics::variance_bound(ell, &overlap, n);
    let kl = diagnostics::kl_bound(ell, &overlap).ok();
    let quadrature = (cfg.problem.name == Benchmark::Toy).then(|| {
        let q = Quadrature1d::toy();
        QuadratureBlock {
            pf: q.pf(),
            z: q.z(ell),
            kl: q.kl(ell),
            variance_direct: q.variance_direct(ell, n),
            variance_p_form: q.variance_p_form(ell, n),
        }
    });

    let dir = cfg.output_dir();
    ensure_dir(&dir)?;
    let mut lines = vec![
        format!("problem {} ell {ell} n_joint {}", cfg.problem.name, cfg.diagnose.n_joint),
        format!("P[A_L] {}  P[A_H] {}  P[A_H and not A_L] {}", overlap.p_al, overlap.p_ah, overlap.p_ah_and_alc),
        format!(
            "Zhat {zhat} <= {} (slack {}): {}",
            nb.bound,
            nb.slack,
            if nb.satisfied { "holds" } else { "VIOLATED" }
        ),
        format!("variance bound at N={n}: {vb}"),
    ];
    match &kl {
        Some(k) => lines.push(format!("KL bound {} (consistent form {})", k.stated, k.consistent)),
        None => lines.push("KL bound undefined: no HF failures in the joint sample".into()),
    }
    if let Some(q) = &quadrature {
        lines.push(format!("quadrature: P_f {} Z {} KL {} Var {}", q.pf, q.z, q.kl, q.variance_direct));
    }
    write_json(
        &dir.join("diagnose.json"),
        &DiagnoseFile {
            command: "diagnose",
            config: cfg,
            ell,
            n,
            overlap,
            zhat,
            zhat_se,
            normalizer_bound: nb,
            variance_bound: vb,
            kl_bound: kl,
            quadrature,
        },
    )?;
    Ok(lines)
}

#[derive(Serialize)]
struct HistogramRow {
    lo: f64,
    hi: f64,
    count: usize,
    density: f64,
}

#[derive(Serialize)]
struct SampleFile<'a> {
    command: &'static str,
    config: &'a RunConfig,
    ell: f64,
    zhat: f64,
    acceptance_rate: &'a [f64],
    nan_rejections: usize,
    samples: usize,
    lf_count: u64,
}

const HISTOGRAM_BINS: usize = 40;

fn histogram(xs: &[f64], lo: f64, hi: f64) -> Vec<HistogramRow> {
    let w = (hi - lo) / HISTOGRAM_BINS as f64;
    let mut counts = vec![0usize; HISTOGRAM_BINS];
    for &x in xs {
        let k = (((x - lo) / w).floor() as isize).clamp(0, HISTOGRAM_BINS as isize - 1) as usize;
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramRow {
            lo: lo + k as f64 * w,
            hi: lo + (k + 1) as f64 * w,
            count,
            density: count as f64 / (xs.len() as f64 * w),
        })
        .collect()
}

pub fn sample(cfg: &RunConfig) -> Lines {
    dispatch(cfg, sample_t::<f32>, sample_t::<f64>)
}

fn sample_t<T: Real>(cfg: &RunConfig) -> Lines {
    let seed = cfg.seed()?;
    let problem = build::<T>(cfg)?.with_fresh_ledger();
    let seeds = RunSeeds::from_master(seed);
    let pool = Arc::new(LfPool::build(&problem, normalizer_stream(seeds.pool), cfg.estimator.m)?);
    let (ell, sweep) = match cfg.ell.mode {
        EllMode::Fixed => (cfg.ell.value, None),
        EllMode::Tuned => {
            let t = tuning_config(cfg)?;
            let (curve, failures) = tuning::sweep_pool(&problem, &pool, t.method, &t.grid, t.pilot_l)?;
            let s = tuning::summarize_sweep(t.method, &t.grid, &[curve], failures)?;
            (s.ell_star, Some(s))
        }
    };
    let mut b = BiasingModel::new(problem.clone(), T::lit(ell))?;
    let zhat = b.use_pool(pool, seeds.pool)?.to_f64_lossy();
    let out = mala::run(&b, &mala_config(cfg, seeds.mala))?;

    let dir = cfg.output_dir();
    ensure_dir(&dir)?;
    let d = problem.dim();
    let iters = out.iters;
    let mut header = vec!["chain".to_string(), "step".to_string()];
    header.extend(coord_header("z", d));
    header.push("lf".into());
    write_table(
        &dir.join("samples.csv"),
        &header,
        (0..out.len()).map(|i| {
            let mut row = vec![(i / iters).to_string(), (i % iters).to_string()];
            row.extend(out.samples.row(i).iter().map(|x| fmt(x.to_f64_lossy())));
            row.push(fmt(out.lf_values[i].to_f64_lossy()));
            row
        }),
    )?;
    write_table(
        &dir.join("chains.csv"),
        &["chain".to_string(), "acceptance_rate".to_string()],
        out.acceptance_rate.iter().enumerate().map(|(c, a)| vec![c.to_string(), fmt(*a)]),
    )?;
    let mut lines = sweep.as_ref().map(sweep_lines).unwrap_or_default();
    if let Some(s) = &sweep {
        write_sweep(&dir, s)?;
    }
    if d == 1 {
        let xs: Vec<f64> = out.samples.as_flat().iter().map(|x| x.to_f64_lossy()).collect();
        let dom = problem.domain();
        let (lo, hi) = (dom.lower[0].to_f64_lossy(), dom.upper[0].to_f64_lossy());
        let (lo, hi) = if lo.is_finite() && hi.is_finite() {
            (lo, hi)
        } else {
            let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, if hi > lo { hi } else { lo + 1.0 })
        };
        write_records(&dir.join("histogram.csv"), &histogram(&xs, lo, hi))?;
    }
    let lf_count = problem.ledger().lf_count;
    write_json(
        &dir.join("sample.json"),
        &SampleFile {
            command: "sample",
            config: cfg,
            ell,
            zhat,
            acceptance_rate: &out.acceptance_rate,
            nan_rejections: out.nan_rejections,
            samples: out.len(),
            lf_count,
        },
    )?;
    lines.push(format!("problem {} ell {ell} Zhat {zhat}", cfg.problem.name));
    lines.push(format!("{} samples from {} chains, mean acceptance {:.4}", out.len(), cfg.mala.chains, out.mean_acceptance()));
    lines.push(format!("lf_count {lf_count}"));
    Ok(lines)
}
