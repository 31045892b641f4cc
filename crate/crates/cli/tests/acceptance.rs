//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use lbfis::benchmarks::{self, BOREHOLE_LOW_PF, BOREHOLE_PF, SYNTHETIC1000_PF};
use lbfis::density::{CoordinateFactor, ReferenceDensity};
use lbfis::diagnostics::{self, OverlapReport, Quadrature1d};
use lbfis::estimators::{self, EllChoice, ReplicateMode, StudyConfig};
use lbfis::heatpde::{self, GridSpec, HeatConfig};
use lbfis::problem::{fd_lf_gradient, gradient_rel_error, ClosureModel, DomainBox};
use lbfis::tuning::{self, TuningConfig};
use lbfis::{
    mala, Approach, Benchmark, BiasingModel, InitialState, LbfisConfig, MalaConfig, Method, ProblemSpec, Stream,
};

type Criterion = (usize, &'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn within(t: Duration, limit_s: f64) -> bool {
    t.as_secs_f64() < limit_s
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

#[allow(clippy::too_many_arguments)]
fn study(
    problem: &ProblemSpec<f64>,
    ell: f64,
    n: usize,
    trials: usize,
    methods: Vec<Method>,
    m: usize,
    mala: MalaConfig,
    pf: f64,
    seed: u64,
) -> estimators::ConvergenceStudy {
    let cfg = StudyConfig { n_grid: vec![n], trials, methods, mode: ReplicateMode::Fresh, ell, m, mala };
    estimators::convergence_study(problem, &cfg, pf, seed).expect("convergence study")
}

fn rr(s: &estimators::ConvergenceStudy, m: Method, n: usize) -> f64 {
    s.cell(m, n).map(|c| c.rrmse).unwrap_or(f64::NAN)
}

// 1 ------------------------------------------------------------------------

/// Boundary between the two modes of the tilted toy density, from quadrature.
fn toy_mode_split(ell: f64) -> f64 {
    let q = |z: f64| (-ell * benchmarks::toy_h(z).tanh()).exp();
    let grid: Vec<f64> = (0..=4000).map(|k| -1.0 + 2.0 * k as f64 / 4000.0).collect();
    let left = grid.iter().copied().filter(|&z| z < 0.0).max_by(|a, b| q(*a).total_cmp(&q(*b))).unwrap();
    let right = grid.iter().copied().filter(|&z| z > 0.0).max_by(|a, b| q(*a).total_cmp(&q(*b))).unwrap();
    grid.iter().copied().filter(|&z| z > left && z < right).min_by(|a, b| q(*a).total_cmp(&q(*b))).unwrap()
}

fn criterion1() -> Verdict {
    let t0 = Instant::now();
    let mut b = BiasingModel::new(benchmarks::make_toy_bimodal::<f64>(), 5.0).unwrap();
    b.estimate_normalizer(10_000, 1).unwrap();
    let out = mala::run(&b, &MalaConfig::new(0.05, 200, 10, 100, 101)).unwrap();
    let split = toy_mode_split(5.0);
    let xs = out.samples.as_flat();
    let left = xs.iter().filter(|&&z| z < split).count() as f64 / xs.len() as f64;
    let t = t0.elapsed();
    let pass = (0.3..=0.7).contains(&left) && (0.3..=0.7).contains(&(1.0 - left)) && within(t, 10.0);
    verdict(
        pass,
        format!("{} samples, split {split:.4}, mode masses {left:.3}/{:.3}, {:.1}s", xs.len(), 1.0 - left, t.as_secs_f64()),
    )
}

// 2 ------------------------------------------------------------------------

fn criterion2() -> Verdict {
    let t0 = Instant::now();
    let problem = benchmarks::make_toy_bimodal::<f64>();
    let pf = benchmarks::toy_pf();
    let s = study(&problem, 5.0, 100, 500, vec![Method::Lbfis], 10_000, MalaConfig::new(0.05, 200, 10, 100, 0), pf, 202);
    let est = s.estimates(Method::Lbfis, 100);
    let (m, sd) = mean_sd(&est);
    let se = sd / (est.len() as f64).sqrt();
    let t = t0.elapsed();
    let z = (m - pf).abs() / se;
    verdict(
        z <= 3.0 && within(t, 120.0),
        format!("mean {m:.5} vs P_f {pf:.5}, SE {se:.2e}, |z| = {z:.2}, {} replicates, {:.1}s", est.len(), t.as_secs_f64()),
    )
}

// 3 ------------------------------------------------------------------------

fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn ks_normal(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

fn criterion3() -> Verdict {
    let t0 = Instant::now();
    let d = 10;
    let p = ReferenceDensity::iid(CoordinateFactor::gaussian(0.0, 1.0).unwrap(), d).unwrap();
    let model = ClosureModel::new(d, |_: &[f64]| 1.0, move |_: &[f64]| vec![0.0; d], |_: &[f64]| 1.0);
    let spec = ProblemSpec::new("gaussian", p, model, DomainBox::unbounded(d)).unwrap();
    let b = BiasingModel::new(spec, 0.0).unwrap();
    let (chains, iters, thin) = (10, 10_000, 50);
    let out = mala::run(&b, &MalaConfig::new(0.1, 1000, iters, chains, 303).with_init(InitialState::Reference)).unwrap();
    let n = out.len();
    let crit = 1.6276 / ((chains * iters / thin) as f64).sqrt();
    let mut worst_mean: f64 = 0.0;
    let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut worst_ks: f64 = 0.0;
    for j in 0..d {
        let col = out.samples.column(j);
        let m = col.iter().sum::<f64>() / n as f64;
        let v = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
        worst_mean = worst_mean.max(m.abs());
        vmin = vmin.min(v);
        vmax = vmax.max(v);
        let thinned: Vec<f64> = col.iter().step_by(thin).copied().collect();
        worst_ks = worst_ks.max(ks_normal(thinned));
    }
    let t = t0.elapsed();
    let pass = worst_mean < 0.05 && vmin >= 0.95 && vmax <= 1.05 && worst_ks < crit && within(t, 60.0);
    verdict(
        pass,
        format!(
            "{n} samples, max|mean| {worst_mean:.4}, var in [{vmin:.4}, {vmax:.4}], max KS {worst_ks:.4} < {crit:.4}, acceptance {:.3}, {:.1}s",
            out.mean_acceptance(),
            t.as_secs_f64()
        ),
    )
}

// 4 ------------------------------------------------------------------------

fn criterion4() -> Verdict {
    let t0 = Instant::now();
    let problem = Benchmark::Borehole.build::<f64>(&Default::default()).unwrap();
    let mcfg = MalaConfig::new(1e-4, 1000, 10_000, 25, 0).with_init(InitialState::Resample);
    let s = study(&problem, 3.26, 100, 200, vec![Method::Mc, Method::Lbfis], 100_000, mcfg, BOREHOLE_PF, 404);
    let (mc, lb) = (rr(&s, Method::Mc, 100), rr(&s, Method::Lbfis, 100));
    let t = t0.elapsed();
    verdict(
        lb <= mc / 3.0 && within(t, 600.0),
        format!(
            "N=100, 200 trials: rRMSE L-BF-IS {lb:.4}, MC {mc:.4} (ratio {:.1}), acceptance {:.3}, {:.1}s",
            mc / lb,
            s.mean_acceptance.unwrap_or(f64::NAN),
            t.as_secs_f64()
        ),
    )
}

// 5 ------------------------------------------------------------------------

fn criterion5() -> Verdict {
    let t0 = Instant::now();
    let problem = Benchmark::BoreholeLow.build::<f64>(&Default::default()).unwrap();
    let tcfg = TuningConfig::new(Approach::Two, tuning::default_grid(), 1_000_000, 0);
    let sweep = tuning::select_ell(&problem, &tcfg, 505).unwrap();
    let ell = sweep.ell_star;
    let mcfg = MalaConfig::new(1e-4, 1000, 10_000, 25, 0).with_init(InitialState::Resample);
    let methods = vec![Method::Mc, Method::LfOnly, Method::Lbfis];
    let s = study(&problem, ell, 215, 200, methods, 100_000, mcfg, BOREHOLE_LOW_PF, 506);
    let (mc, lf, lb) = (rr(&s, Method::Mc, 215), rr(&s, Method::LfOnly, 215), rr(&s, Method::Lbfis, 215));
    let t = t0.elapsed();
    verdict(
        (3.0..=4.5).contains(&ell) && lb < lf && lb < mc,
        format!("ell* {ell:.3}; N=215, 200 trials: rRMSE L-BF-IS {lb:.4}, LF-only {lf:.4}, MC {mc:.4}, {:.1}s", t.as_secs_f64()),
    )
}

// 6 ------------------------------------------------------------------------

fn criterion6() -> Verdict {
    let t0 = Instant::now();
    let problem = Benchmark::Synthetic1000.build::<f64>(&Default::default()).unwrap();
    let tcfg = TuningConfig::new(Approach::Two, tuning::default_grid(), 1_000_000, 0);
    let ell = tuning::select_ell(&problem, &tcfg, 606).unwrap().ell_star;
    let mcfg = MalaConfig::new(1e-5, 10_000, 10_000, 10, 0).with_init(InitialState::Resample);
    let s = study(&problem, ell, 100, 100, vec![Method::LfOnly, Method::Lbfis], 100_000, mcfg, SYNTHETIC1000_PF, 607);
    let (lf, lb) = (rr(&s, Method::LfOnly, 100), rr(&s, Method::Lbfis, 100));
    let est = s.estimates(Method::Lbfis, 100);
    let (m, sd) = mean_sd(&est);
    let bias = m / SYNTHETIC1000_PF - 1.0;
    let bias_tol = 0.03 + 3.0 * sd / (est.len() as f64).sqrt() / SYNTHETIC1000_PF;
    let t = t0.elapsed();
    let pass = (2.0..=2.8).contains(&ell) && lb <= 0.35 && lb < lf && bias.abs() <= bias_tol && within(t, 1800.0);
    verdict(
        pass,
        format!(
            "ell* {ell:.3}; N=100, 100 trials: rRMSE L-BF-IS {lb:.4}, LF-only {lf:.4}; bias {:+.2}% (tolerance {:.2}%), acceptance {:.3}, {:.1}s",
            100.0 * bias,
            100.0 * bias_tol,
            s.mean_acceptance.unwrap_or(f64::NAN),
            t.as_secs_f64()
        ),
    )
}

// 7 ------------------------------------------------------------------------

fn gradient_check(spec: &ProblemSpec<f64>, points: usize, step: f64, seed: u64) -> (usize, f64) {
    let stream = Stream::new(seed).tagged("gradient");
    let mut z = vec![0.0; spec.dim()];
    let (mut checked, mut worst, mut i) = (0, 0.0f64, 0);
    while checked < points && i < 100 * points {
        spec.reference().sample_row(&stream, i, &mut z);
        i += 1;
        if !spec.in_domain(&z) {
            continue;
        }
        let g = spec.model().lf_grad(&z).unwrap();
        let fd = fd_lf_gradient(spec.model(), &z, step).unwrap();
        worst = worst.max(gradient_rel_error(&g, &fd));
        checked += 1;
    }
    (checked, worst)
}

fn criterion7() -> Verdict {
    let t0 = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, b) in Benchmark::ALL.into_iter().enumerate() {
        let spec = b.build::<f64>(&Default::default()).unwrap();
        let (step, tol) = if b == Benchmark::Heat { (1e-5, 1e-4) } else { (1e-6, 1e-6) };
        let (n, worst) = gradient_check(&spec, 100, step, 700 + k as u64);
        ok &= n >= 100 && worst < tol;
        parts.push(format!("{b} {worst:.1e}<{tol:.0e}"));
    }
    verdict(ok, format!("100 points each: {}, {:.1}s", parts.join(", "), t0.elapsed().as_secs_f64()))
}

// 8 ------------------------------------------------------------------------

fn criterion8() -> Verdict {
    let q = Quadrature1d::toy();
    let ov = q.overlap();
    let mut toy_ok = true;
    let mut worst_z: f64 = f64::INFINITY;
    let mut worst_kl: f64 = f64::INFINITY;
    for ell in 1..=10 {
        let ell = ell as f64;
        let nb = ell.exp_m1() * ov.p_al + 1.0;
        let kb = diagnostics::kl_bound(ell, &ov).unwrap();
        let (z, kl) = (q.z(ell), q.kl(ell));
        toy_ok &= z < nb && kl < kb.stated && kl < kb.consistent;
        worst_z = worst_z.min(nb - z);
        worst_kl = worst_kl.min(kb.stated.min(kb.consistent) - kl);
    }

    let problem = Benchmark::Borehole.build::<f64>(&Default::default()).unwrap();
    let n = 1_000_000;
    let stream = Stream::new(808).tagged("bounds");
    let mut z = vec![0.0; problem.dim()];
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        problem.reference().sample_row(&stream, i, &mut z);
        rows.push((problem.lf_eval(&z).unwrap(), problem.hf_eval(&z).unwrap()));
    }
    let count = |f: &dyn Fn(f64, f64) -> bool| rows.iter().filter(|(l, h)| f(*l, *h)).count() as f64 / n as f64;
    let ov = OverlapReport {
        p_al: count(&|l, _| l < 0.0),
        p_ah: count(&|_, h| h < 0.0),
        p_ah_and_alc: count(&|l, h| h < 0.0 && l >= 0.0),
        n_hf_used: n,
        n_lf_used: n,
    };
    let mut bh_ok = true;
    let mut parts = Vec::new();
    for ell in [1.0, 3.26, 5.0] {
        let w: Vec<f64> = rows.iter().map(|(l, _)| (-ell * l.tanh()).exp()).collect();
        let (zhat, zsd) = mean_sd(&w);
        let zse = zsd / (n as f64).sqrt();
        let nb = diagnostics::normalizer_bound(ell, zhat, zse, &ov);
        let tf: Vec<f64> = rows.iter().filter(|(_, h)| *h < 0.0).map(|(l, _)| l.tanh()).collect();
        let (tm, tsd) = mean_sd(&tf);
        let kl_hat = (zhat / ov.p_ah).ln() + ell * tm;
        let kb = diagnostics::kl_bound(ell, &ov).unwrap();
        let k = ell.exp_m1();
        let slack = 3.0
            * ((zse / zhat).powi(2)
                + (k * ov.se_al() / (1.0 + k * ov.p_al)).powi(2)
                + (ell * tsd / (tf.len() as f64).sqrt()).powi(2)
                + (ell * ov.se_ah_and_alc()).powi(2))
            .sqrt();
        let kl_ok = kl_hat < kb.stated + slack;
        bh_ok &= nb.satisfied && kl_ok;
        parts.push(format!(
            "ell {ell}: Z {zhat:.4} < {:.4}, KL {kl_hat:.4} < {:.4}",
            nb.bound,
            kb.stated
        ));
    }
    verdict(
        toy_ok && bh_ok,
        format!(
            "toy ell 1..10 strict (min margins Z {worst_z:.2e}, KL {worst_kl:.2e}); borehole 1e6 draws: {}",
            parts.join("; ")
        ),
    )
}

// 9 ------------------------------------------------------------------------

fn criterion9() -> Verdict {
    let q = Quadrature1d::toy();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for ell in [2.0, 5.0, 8.0] {
        let a = q.variance_direct(ell, 1);
        let b = q.variance_p_form(ell, 1);
        let rel = (a - b).abs() / a.abs().max(b.abs());
        worst = worst.max(rel);
        parts.push(format!("ell {ell}: {a:.10e} vs {b:.10e}"));
    }
    verdict(worst < 1e-8, format!("max relative gap {worst:.2e}; {}", parts.join(", ")))
}

// 10 -----------------------------------------------------------------------

fn criterion10() -> Verdict {
    let t0 = Instant::now();
    let mut parts = Vec::new();

    let cfg = HeatConfig::default();
    let cp = lbfis::heatpde::ConductivityParams::new(cfg.dprime, cfg.kbar).unwrap();
    let reference = heatpde::heat_reference::<f64>(cfg.dprime).unwrap();
    let stream = Stream::new(1010).tagged("heat");
    let mut min_u = f64::INFINITY;
    let mut z = vec![0.0; reference.dim()];
    for i in 0..20 {
        reference.sample_row(&stream, i, &mut z);
        let s = heatpde::solve(&cp, GridSpec::new(33).unwrap(), &z).unwrap();
        min_u = min_u.min(s.u.iter().copied().fold(f64::INFINITY, f64::min));
    }
    let max_ok = min_u >= 0.0;
    parts.push(format!("min u {min_u:.1e}"));

    let constant = |n: usize, c: f64| {
        let g = GridSpec::new(n).unwrap();
        heatpde::solve_with_conductivity(g, &vec![c; g.nodes()]).unwrap().argmax().1
    };
    let exact = heatpde::poisson_center_series(401);
    let series_err = (constant(61, 1.0) - exact).abs() / exact;
    let series_ok = series_err < 5e-3;
    parts.push(format!("series err {series_err:.2e}"));

    let ratio = (constant(31, 1.0) - exact).abs() / (constant(61, 1.0) - exact).abs();
    let ratio_ok = (3.0..=5.0).contains(&ratio);
    parts.push(format!("convergence ratio {ratio:.3}"));

    let problem = Benchmark::Heat.build::<f64>(&Default::default()).unwrap();
    let (_, adj_err) = gradient_check(&problem, 5, 1e-5, 1011);
    let adj_ok = adj_err < 1e-4;
    parts.push(format!("adjoint vs FD {adj_err:.1e}"));

    let run = estimators::run_lbfis(
        &problem,
        &LbfisConfig {
            ell: EllChoice::Tuned { method: Approach::Two, grid: tuning::log_grid(10.0, 1e4, 40).unwrap(), pilot_l: 0 },
            m: 5000,
            n: 50,
            mala: MalaConfig::new(1e-4, 1000, 1000, 4, 0).with_init(InitialState::Resample),
        },
        1012,
    );
    let pipeline_ok = match &run {
        Ok(r) => {
            let acc = r.acceptance_rate.iter().sum::<f64>() / r.acceptance_rate.len() as f64;
            parts.push(format!(
                "D={} N=50: estimate {:.4}, ell {:.1}, acceptance {acc:.3}",
                problem.dim(),
                r.report.value,
                r.report.ell.unwrap()
            ));
            r.report.value.is_finite() && acc > 0.05 && acc < 0.95 && problem.dim() == 400
        }
        Err(e) => {
            parts.push(format!("pipeline error: {e}"));
            false
        }
    };
    let t = t0.elapsed();
    parts.push(format!("{:.1}s", t.as_secs_f64()));
    verdict(max_ok && series_ok && ratio_ok && adj_ok && pipeline_ok && within(t, 1800.0), parts.join(", "))
}

// 11 -----------------------------------------------------------------------

fn criterion11() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    let toy = benchmarks::make_toy_bimodal::<f64>();
    let borehole = Benchmark::Borehole.build::<f64>(&Default::default()).unwrap();
    let cases: Vec<(&str, &ProblemSpec<f64>, LbfisConfig, usize)> = vec![
        (
            "toy fixed",
            &toy,
            LbfisConfig {
                ell: EllChoice::Fixed { ell: 5.0 },
                m: 2000,
                n: 100,
                mala: MalaConfig::new(0.05, 200, 10, 100, 0),
            },
            0,
        ),
        (
            "toy tuned one",
            &toy,
            LbfisConfig {
                ell: EllChoice::Tuned { method: Approach::One, grid: tuning::log_grid(1.0, 30.0, 30).unwrap(), pilot_l: 300 },
                m: 5000,
                n: 80,
                mala: MalaConfig::new(0.05, 50, 40, 20, 0).with_init(InitialState::Resample),
            },
            300,
        ),
        (
            "borehole",
            &borehole,
            LbfisConfig {
                ell: EllChoice::Fixed { ell: 3.26 },
                m: 20_000,
                n: 100,
                mala: MalaConfig::new(1e-4, 100, 500, 5, 0).with_init(InitialState::Resample),
            },
            0,
        ),
        (
            "borehole tuned two",
            &borehole,
            LbfisConfig {
                ell: EllChoice::Tuned { method: Approach::Two, grid: tuning::default_grid(), pilot_l: 0 },
                m: 20_000,
                n: 50,
                mala: MalaConfig::new(1e-4, 100, 500, 5, 0).with_init(InitialState::Center),
            },
            0,
        ),
    ];
    for (k, (name, p, cfg, l)) in cases.into_iter().enumerate() {
        let r = estimators::run_lbfis(p, &cfg, 1100 + k as u64).unwrap();
        let m = &cfg.mala;
        let lf_cap = cfg.m + m.iters * m.chains + m.burn_in * m.chains + m.chains;
        let hf_ok = r.ledger.hf_count as usize == cfg.n + l;
        let lf_ok = r.ledger.lf_count as usize <= lf_cap;
        ok &= hf_ok && lf_ok;
        parts.push(format!("{name}: hf {} = {}, lf {} <= {lf_cap}", r.ledger.hf_count, cfg.n + l, r.ledger.lf_count));
    }
    verdict(ok, parts.join("; "))
}

// 12 -----------------------------------------------------------------------

fn lbfis(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_lbfis"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn csv_files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut v: Vec<(PathBuf, Vec<u8>)> = std::fs::read_dir(dir)
        .map(|rd| {
            rd.filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                .map(|p| {
                    let bytes = std::fs::read(&p).unwrap();
                    (PathBuf::from(p.file_name().unwrap()), bytes)
                })
                .collect()
        })
        .unwrap_or_default();
    v.sort();
    v
}

fn criterion12() -> Verdict {
    let t0 = Instant::now();
    let root = tempfile::tempdir().unwrap();
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let small = ["--M", "3000", "--N", "20", "--chains", "3", "--burn-in", "20", "--iters", "40"];
    let mut ok = true;
    let mut parts = Vec::new();
    for b in Benchmark::ALL {
        let cfg = configs.join(format!("{}.toml", b.name()));
        let cfg = cfg.to_str().unwrap();
        let mut commands = vec!["estimate", "sample"];
        if b.info().reference_pf.is_some() {
            commands.push("convergence");
        }
        let mut files = 0;
        for cmd in commands {
            let mut outputs = Vec::new();
            for (rep, threads) in [(0, "1"), (1, "1"), (2, "4")] {
                let out = root.path().join(format!("{}-{cmd}-{rep}", b.name()));
                let mut args = vec![cmd, "--config", cfg, "--out", out.to_str().unwrap(), "--threads", threads];
                args.extend(small);
                if cmd == "convergence" {
                    args.extend(["--trials", "3", "--n-grid", "5,10"]);
                }
                if !lbfis(&args) {
                    ok = false;
                    parts.push(format!("{b} {cmd} failed to run"));
                }
                outputs.push(csv_files(&out));
            }
            let same = !outputs[0].is_empty() && outputs.iter().all(|o| o == &outputs[0]);
            if !same {
                ok = false;
                parts.push(format!("{b} {cmd} differs"));
            }
            files += outputs[0].len();
        }
        parts.push(format!("{b} {files} csv"));
    }
    parts.push(format!("{:.1}s", t0.elapsed().as_secs_f64()));
    verdict(ok, parts.join(", "))
}

fn main() {
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [Criterion; 12] = [
        (1, "toy bimodality", criterion1),
        (2, "toy unbiasedness", criterion2),
        (3, "MALA on a Gaussian target", criterion3),
        (4, "borehole variance reduction", criterion4),
        (5, "borehole-low tuning and accuracy", criterion5),
        (6, "1000-dimensional problem", criterion6),
        (7, "gradient suite", criterion7),
        (8, "bounds suite", criterion8),
        (9, "variance identity", criterion9),
        (10, "heat benchmark properties", criterion10),
        (11, "budget ledger", criterion11),
        (12, "determinism", criterion12),
    ];
    let mut failed = Vec::new();
    for (k, name, f) in criteria {
        if !only.is_empty() && !only.contains(&k) {
            continue;
        }
        let v = f();
        println!("criterion {k:>2} {}: {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if !v.pass {
            failed.push(k);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
