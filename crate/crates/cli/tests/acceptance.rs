//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if any
//! criterion fails. Pass criterion numbers as arguments to run a subset.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use nvhmeta::bootstrap::{parametric_bootstrap, BootstrapConfig};
use nvhmeta::dataset::{synthesize, Dataset, NoiseLevel, SynthConfig, AERO_SPEEDS, THIRD_OCTAVE_100_8K};
use nvhmeta::diagnostics::{diagnose, r_hat, DiagnosticsOptions};
use nvhmeta::fit::{auto_fit, kfold_cv};
use nvhmeta::loo::{compare, psis_loo, LooReport, RankRow};
use nvhmeta::models::{build_bm1, build_bm2, BayesModel, InverseGamma, KnownMeanVarianceModel, PriorSpec};
use nvhmeta::sampler::{run_chains, FnTarget, PosteriorSamples, SamplerConfig, TargetDensity};
use nvhmeta::surrogate::{NoiseSd, ParameterVector, SurrogateSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::ContinuousCDF;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        (1, "sampler on 2-D standard normal", c1_standard_normal),
        (2, "conjugate variance posterior quantiles", c2_conjugate),
        (3, "BM1/BM2 gradients vs finite differences", c3_gradients),
        (4, "BM1 parameter recovery", c4_recovery),
        (5, "R-hat bands for BM1 and BM2", c5_r_hat_bands),
        (6, "PSIS-LOO ranks BM2 above BM1 on peaked spectra", c6_ranking),
        (7, "Pareto k behavior", c7_k_hat),
        (8, "PSIS-LOO vs brute-force LOO", c8_exact_loo),
        (9, "K-fold CV", c9_cv),
        (10, "bootstrap vs OLS standard errors", c10_bootstrap),
        (11, "R-hat unit value", c11_r_hat_unit),
        (12, "CLI determinism from manifests", c12_determinism),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, name, f) in criteria {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let t = Instant::now();
        let out = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        println!(
            "criterion {n:>2} {}: {name}: {} [{:.1}s]",
            if out.pass { "PASS" } else { "FAIL" },
            out.detail,
            t.elapsed().as_secs_f64()
        );
        if !out.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn synth(
    spec: &SurrogateSpec,
    truth: &ParameterVector,
    noise: NoiseLevel,
    reps: usize,
    seed: u64,
) -> Dataset {
    synthesize(&SynthConfig {
        generating_spec: spec.clone(),
        true_params: truth.clone(),
        speeds: AERO_SPEEDS.to_vec(),
        frequency_bands: THIRD_OCTAVE_100_8K.to_vec(),
        noise_sd_db: noise,
        replicate_count: reps,
        rng_seed: seed,
        categories: BTreeMap::new(),
    })
    .unwrap()
}

/// Type-7 quantile.
fn quantile(xs: &[f64], p: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn log_mean_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + (xs.iter().map(|x| (x - m).exp()).sum::<f64>() / xs.len() as f64).ln()
}

/// Constrained draws `[chain][draw][param]`.
fn constrained(model: &BayesModel, s: &PosteriorSamples) -> Vec<Vec<Vec<f64>>> {
    s.draws.iter().map(|c| c.iter().map(|q| model.constrain_flat(q)).collect()).collect()
}

fn column(draws: &[Vec<Vec<f64>>], j: usize) -> Vec<Vec<f64>> {
    draws.iter().map(|c| c.iter().map(|d| d[j]).collect()).collect()
}

fn c1_standard_normal() -> Outcome {
    let target = FnTarget::new(2, |q: &[f64]| (-0.5 * (q[0] * q[0] + q[1] * q[1]), vec![-q[0], -q[1]]));
    let t = Instant::now();
    let s = run_chains(&target, &SamplerConfig::default()).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let report = diagnose(&s, &DiagnosticsOptions::default()).unwrap();
    let mut ok = secs < 60.0 && report.divergences == 0 && report.max_r_hat() <= 1.01;
    let mut parts = Vec::new();
    for j in 0..2 {
        let x = s.pooled(j);
        let (m, d) = (mean(&x), sd(&x));
        ok &= m.abs() <= 0.05 && (d - 1.0).abs() <= 0.05;
        parts.push(format!("mean[{j}]={m:.4} sd[{j}]={d:.4}"));
    }
    outcome(
        ok,
        format!(
            "{} max R-hat={:.4} divergences={} sampling {secs:.1}s",
            parts.join(" "),
            report.max_r_hat(),
            report.divergences
        ),
    )
}

fn c2_conjugate() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let y: Vec<f64> = (0..30).map(|_| 1.0 + 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
    let (a0, b0) = (2.0, 2.0);
    let model = KnownMeanVarianceModel::new(y.clone(), 1.0, InverseGamma::new(a0, b0));
    let s = run_chains(&model, &SamplerConfig { seed: 2, ..Default::default() }).unwrap();
    let var: Vec<f64> = s.pooled(0).iter().map(|u| u.exp()).collect();
    // InvGamma(a0 + n/2, b0 + SS/2).
    let ss: f64 = y.iter().map(|v| (v - 1.0).powi(2)).sum();
    let exact = statrs::distribution::InverseGamma::new(a0 + y.len() as f64 / 2.0, b0 + ss / 2.0).unwrap();
    let mut worst: f64 = 0.0;
    for p in [0.05, 0.25, 0.5, 0.75, 0.95] {
        let want = exact.inverse_cdf(p);
        worst = worst.max(((quantile(&var, p) - want) / want).abs());
    }
    outcome(
        var.len() == 40_000 && worst < 0.02,
        format!("{} draws, max relative quantile error {worst:.4}", var.len()),
    )
}

fn bm1_truth() -> ParameterVector {
    ParameterVector {
        b_scale: 1.0,
        poly: vec![-90.0, 12.0, 3.0, -1.5, 0.2],
        amp: vec![],
        loc: vec![],
        width: vec![],
        noise_sd: NoiseSd::Scalar(1.0),
    }
}

fn peaks_truth() -> ParameterVector {
    ParameterVector {
        b_scale: 1.0,
        poly: vec![-60.0],
        amp: vec![6.0, -4.0, 5.0],
        loc: vec![2.3, 2.9, 3.5],
        width: vec![0.2, 0.25, 0.3],
        noise_sd: NoiseSd::Scalar(1.0),
    }
}

/// Max over points and coordinates of |analytic - central FD| / max(1, |analytic|),
/// with step 1e-6 * max(1, |q_j|).
fn max_gradient_error<T: TargetDensity>(t: &T, points: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = t.initial_point();
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let q: Vec<f64> = center.iter().map(|c| c + rng.random_range(-1.0..1.0)).collect();
        let (_, g) = t.logp_grad(&q);
        for j in 0..q.len() {
            let h = 1e-6 * q[j].abs().max(1.0);
            let mut up = q.clone();
            let mut dn = q.clone();
            up[j] += h;
            dn[j] -= h;
            let fd = (t.logp_grad(&up).0 - t.logp_grad(&dn).0) / (2.0 * h);
            worst = worst.max((g[j] - fd).abs() / g[j].abs().max(1.0));
        }
    }
    worst
}

fn c3_gradients() -> Outcome {
    let s1 = SurrogateSpec::aero_polynomial(4);
    let bm1 = build_bm1(&synth(&s1, &bm1_truth(), NoiseLevel::Scalar(1.0), 1, 1), &s1, &PriorSpec::default())
        .unwrap();
    let s2 = SurrogateSpec::aero_gaussian(3);
    let bm2 =
        build_bm2(&synth(&s2, &peaks_truth(), NoiseLevel::Scalar(1.0), 2, 2), &s2, &PriorSpec::default())
            .unwrap();
    let e1 = max_gradient_error(&bm1, 20, 3);
    let e2 = max_gradient_error(&bm2, 20, 4);
    outcome(e1 < 1e-5 && e2 < 1e-5, format!("BM1 {e1:.2e}, BM2 {e2:.2e}"))
}

struct Bm1Run {
    covered: Vec<bool>,
    r_hat: Vec<f64>,
    k_hat: Vec<f64>,
}

const RECOVERY_SEEDS: u64 = 20;

/// Twenty BM1 runs at the default sampler configuration, shared by the
/// recovery, R-hat and Pareto-k criteria.
fn bm1_runs() -> &'static [Bm1Run] {
    static RUNS: OnceLock<Vec<Bm1Run>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let spec = SurrogateSpec::aero_polynomial(4);
        let truth = bm1_truth();
        let mut want = truth.poly.clone();
        want.push(1.0);
        (0..RECOVERY_SEEDS)
            .map(|seed| {
                let d = synth(&spec, &truth, NoiseLevel::Scalar(1.0), 1, 100 + seed);
                let model = build_bm1(&d, &spec, &PriorSpec::default()).unwrap();
                let s = run_chains(&model, &SamplerConfig { seed, ..Default::default() }).unwrap();
                let draws = constrained(&model, &s);
                let mut covered = Vec::new();
                let mut rh = Vec::new();
                for (j, w) in want.iter().enumerate() {
                    let chains = column(&draws, j);
                    let pooled: Vec<f64> = chains.concat();
                    covered.push(quantile(&pooled, 0.025) <= *w && *w <= quantile(&pooled, 0.975));
                    rh.push(r_hat(&chains).unwrap());
                }
                let k_hat = psis_loo("bm1", &model, &s).unwrap().k_hat;
                Bm1Run { covered, r_hat: rh, k_hat }
            })
            .collect()
    })
}

fn c4_recovery() -> Outcome {
    let runs = bm1_runs();
    let counts: Vec<usize> =
        (0..runs[0].covered.len()).map(|j| runs.iter().filter(|r| r.covered[j]).count()).collect();
    let min = *counts.iter().min().unwrap();
    outcome(
        min >= 17,
        format!(
            "95% interval coverage per parameter (a0..a4, sigma) over {RECOVERY_SEEDS} seeds: {counts:?}"
        ),
    )
}

struct PeakRuns {
    bm2_r_hat: f64,
    bm1: LooReport,
    bm2: LooReport,
    ranking: Vec<RankRow>,
}

/// Gaussian-peak spectra with per-band noise between 0.5 and 2 dB, fitted
/// with both models.
fn peak_runs() -> &'static PeakRuns {
    static RUNS: OnceLock<PeakRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let s2 = SurrogateSpec::aero_gaussian(3);
        let noise: Vec<f64> = (0..THIRD_OCTAVE_100_8K.len()).map(|b| 0.5 + 1.5 * b as f64 / 19.0).collect();
        let d = synth(&s2, &peaks_truth(), NoiseLevel::PerBand(noise), 3, 31);

        let nls = auto_fit(&d, &s2).unwrap();
        let bm2 =
            build_bm2(&d, &s2, &PriorSpec::default()).unwrap().with_initial_params(&nls.params).unwrap();
        let cfg =
            SamplerConfig { draws: 1_000, warmup: 1_000, init_jitter: 0.1, seed: 5, ..Default::default() };
        let samples2 = run_chains(&bm2, &cfg).unwrap();
        let draws = constrained(&bm2, &samples2);
        let bm2_r_hat =
            (0..draws[0][0].len()).map(|j| r_hat(&column(&draws, j)).unwrap()).fold(0.0, f64::max);

        let s1 = SurrogateSpec::aero_polynomial(4);
        let bm1 = build_bm1(&d, &s1, &PriorSpec::default()).unwrap();
        let samples1 = run_chains(&bm1, &SamplerConfig { seed: 6, ..Default::default() }).unwrap();

        let r1 = psis_loo("bm1", &bm1, &samples1).unwrap();
        let r2 = psis_loo("bm2", &bm2, &samples2).unwrap();
        let ranking = compare(&[r1.clone(), r2.clone()]).unwrap();
        PeakRuns { bm2_r_hat, bm1: r1, bm2: r2, ranking }
    })
}

fn c5_r_hat_bands() -> Outcome {
    let runs = bm1_runs();
    let all: Vec<f64> = runs.iter().flat_map(|r| r.r_hat.iter().copied()).collect();
    let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = all.iter().copied().fold(0.0, f64::max);
    let bm2 = peak_runs().bm2_r_hat;
    outcome(
        (lo - 1.0).abs() <= 0.01 && (hi - 1.0).abs() <= 0.01 && bm2 <= 1.06,
        format!("BM1 R-hat in [{lo:.4}, {hi:.4}] over {} runs; BM2 max R-hat {bm2:.4}", runs.len()),
    )
}

fn c6_ranking() -> Outcome {
    let p = peak_runs();
    let top = &p.ranking[0];
    let second = &p.ranking[1];
    let ok =
        top.model_id == "bm2" && second.elpd_diff.abs() > 2.0 * second.se_diff && p.bm1.p_loo < p.bm2.p_loo;
    outcome(
        ok,
        format!(
            "rank 0 = {}; elpd bm2 {:.1} bm1 {:.1}; diff {:.1} (se {:.1}); p_loo bm1 {:.1} bm2 {:.1}",
            top.model_id, p.bm2.elpd, p.bm1.elpd, second.elpd_diff, second.se_diff, p.bm1.p_loo, p.bm2.p_loo
        ),
    )
}

fn c7_k_hat() -> Outcome {
    let pooled: Vec<f64> = bm1_runs().iter().flat_map(|r| r.k_hat.iter().copied()).collect();
    let good = pooled.iter().filter(|k| **k < 0.7).count() as f64 / pooled.len() as f64;

    let spec = SurrogateSpec::aero_polynomial(4);
    let d = synth(&spec, &bm1_truth(), NoiseLevel::Scalar(1.0), 1, 1000);
    let outliers = [5usize, 17, 30];
    let mut y = d.spl();
    for &i in &outliers {
        y[i] += 20.0;
    }
    let d = d.with_spl(&y).unwrap();
    let model = build_bm1(&d, &spec, &PriorSpec::default()).unwrap();
    let s = run_chains(&model, &SamplerConfig { seed: 7, ..Default::default() }).unwrap();
    let k = psis_loo("bm1", &model, &s).unwrap().k_hat;
    let rest: Vec<f64> = (0..k.len()).filter(|i| !outliers.contains(i)).map(|i| k[i]).collect();
    let median = quantile(&rest, 0.5);
    let out_k: Vec<f64> = outliers.iter().map(|&i| k[i]).collect();
    outcome(
        good >= 0.99 && out_k.iter().all(|&v| v > median),
        format!(
            "{:.2}% of {} well-specified observations below 0.7; outlier k {:?} vs median {median:.3}",
            100.0 * good,
            pooled.len(),
            out_k.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        ),
    )
}

fn c8_exact_loo() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let y: Vec<f64> = (0..20).map(|_| 1.0 + 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
    let prior = InverseGamma::new(2.0, 2.0);
    let full = KnownMeanVarianceModel::new(y.clone(), 1.0, prior);
    let s = run_chains(&full, &SamplerConfig { seed: 1, ..Default::default() }).unwrap();
    let psis = psis_loo("conj", &full, &s).unwrap();

    let mut exact = 0.0;
    for i in 0..y.len() {
        let mut rest = y.clone();
        let yi = rest.remove(i);
        let m = KnownMeanVarianceModel::new(rest, 1.0, prior);
        let si = run_chains(&m, &SamplerConfig { seed: 100 + i as u64, ..Default::default() }).unwrap();
        let ll: Vec<f64> = si
            .pooled(0)
            .iter()
            .map(|u| -0.5 * ((2.0 * std::f64::consts::PI).ln() + u + (yi - 1.0).powi(2) * (-u).exp()))
            .collect();
        exact += log_mean_exp(&ll);
    }
    let diff = (exact - psis.elpd).abs();
    outcome(
        diff <= 2.0 * psis.se,
        format!(
            "brute-force elpd {exact:.3}, PSIS elpd {:.3}, |diff| {diff:.3}, se {:.3}",
            psis.elpd, psis.se
        ),
    )
}

fn c9_cv() -> Outcome {
    let spec = SurrogateSpec::aero_polynomial(4);
    let truth = bm1_truth();
    let init = ParameterVector::default_init(&spec, &synth(&spec, &truth, NoiseLevel::Scalar(0.0), 1, 0));
    let mut ok = true;
    let mut parts = Vec::new();

    let clean = synth(&spec, &truth, NoiseLevel::Scalar(0.0), 1, 0);
    for k in [5, 10] {
        let r = kfold_cv(&clean, &spec, &init, k, 100, 9).unwrap();
        ok &= r.r2_cv > 0.999;
        parts.push(format!("zero-noise K={k}: {:.6}", r.r2_cv));
    }

    // Noise at 0.5x the spread of the true mean; 5 replicates keep the
    // finite-fold and parameter-count corrections small.
    let mu = clean.spl();
    let sigma = 0.5 * sd(&mu);
    let noisy = synth(&spec, &truth, NoiseLevel::Scalar(sigma), 5, 10);
    let predicted = 1.0 - sigma * sigma / sd(&noisy.spl()).powi(2);
    for k in [5, 10] {
        let r = kfold_cv(&noisy, &spec, &init, k, 100, 11).unwrap();
        ok &= (r.r2_cv - predicted).abs() <= 0.03;
        parts.push(format!("noisy K={k}: {:.4} vs {predicted:.4}", r.r2_cv));
    }
    outcome(ok, parts.join("; "))
}

fn c10_bootstrap() -> Outcome {
    let spec = SurrogateSpec::aero_polynomial(2);
    let truth = ParameterVector { poly: vec![-70.0, 10.0, -1.5], ..bm1_truth() };
    let d = synth(&spec, &truth, NoiseLevel::Scalar(1.0), 1, 12);

    // Closed-form OLS on [1, T, T^2] after removing the 10 log10(v^6 / (c0^3 1e-12)) offset.
    let n = d.len();
    let x = DMatrix::from_fn(n, 3, |i, c| d.records()[i].frequency_hz.log10().powi(c as i32));
    let y = DVector::from_iterator(
        n,
        d.records().iter().map(|r| {
            let v = r.speed / 3.6;
            r.spl_db - 10.0 * (v.powi(6) / (343.0f64.powi(3) * 1e-12)).log10()
        }),
    );
    let xtx_inv = (x.transpose() * &x).try_inverse().unwrap();
    let beta = &xtx_inv * x.transpose() * &y;
    let resid = &y - &x * &beta;
    let s2 = resid.norm_squared() / (n - 3) as f64;
    let se: Vec<f64> = (0..3).map(|j| (s2 * xtx_inv[(j, j)]).sqrt()).collect();

    // The closed form conditions on the design, so the design is held fixed.
    let cfg = BootstrapConfig { input_resampling: false, ..BootstrapConfig::new(spec.clone(), 2_000, 13) };
    let res = parametric_bootstrap(&d, &cfg).unwrap();
    let ratios: Vec<f64> = res.param_sd.iter().zip(&se).map(|(b, o)| b / o).collect();
    let sd_ok = ratios.iter().all(|r| (r - 1.0).abs() <= 0.15);

    let clean = synth(&spec, &truth, NoiseLevel::Scalar(0.0), 1, 0);
    let res0 = parametric_bootstrap(&clean, &BootstrapConfig::new(spec, 2_000, 14)).unwrap();
    let theta_hat = res0.theta_hat.free_mean_params();
    let worst = res0
        .replicate_params
        .iter()
        .flat_map(|r| r.iter().zip(&theta_hat).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    outcome(
        sd_ok && worst <= 1e-8 && res0.replicate_params.len() == 2_000,
        format!(
            "bootstrap/OLS sd ratios {:?}; zero-noise max deviation {worst:.1e} over {} replicates",
            ratios.iter().map(|r| (r * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
            res0.replicate_params.len()
        ),
    )
}

fn c11_r_hat_unit() -> Outcome {
    let got = r_hat(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]).unwrap();
    let want = (2.0f64 / 3.0).sqrt();
    outcome((got - want).abs() <= 1e-12, format!("{got:.15} vs {want:.15}"))
}

fn run_cli(args: &[&str], dir: &Path) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_nvhmeta")).args(args).current_dir(dir).output().unwrap();
    out.status.code().unwrap_or(-1)
}

fn c12_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let configs = [
        (
            "synth",
            r#"{"schema_version": 1, "out": "synth", "synth": {
                "generating_spec": {"family": "aero_gaussian", "n": 2},
                "true_params": {"poly": [-75.0], "amp": [8.0, 5.0], "loc": [2.5, 3.4], "width": [0.25, 0.2]},
                "speeds": [140, 200],
                "frequency_bands": [100, 125, 160, 200, 250, 315, 400, 500, 630, 800, 1000, 1250, 1600, 2000, 2500, 3150, 4000, 5000, 6300, 8000],
                "noise_sd_db": 0.5, "replicate_count": 2, "rng_seed": 7}}"#,
        ),
        (
            "fit",
            r#"{"schema_version": 1, "out": "fit", "data": {"path": "synth/dataset.csv"},
                "spec": {"family": "aero_gaussian", "n": 2}}"#,
        ),
        (
            "cv",
            r#"{"schema_version": 1, "out": "cv", "data": {"path": "synth/dataset.csv"},
                "spec": {"family": "aero_gaussian", "n": 2}, "runs": 5, "seed": 3}"#,
        ),
        (
            "sample",
            r#"{"schema_version": 1, "out": "bm1", "data": {"path": "synth/dataset.csv"}, "model": "bm1",
                "spec": {"family": "aero_polynomial", "m": 4}, "sampler": {"draws": 300, "warmup": 200, "seed": 4}}"#,
        ),
        (
            "sample",
            r#"{"schema_version": 1, "out": "bm2", "data": {"path": "synth/dataset.csv"}, "model": "bm2",
                "spec": {"family": "aero_gaussian", "n": 2},
                "sampler": {"draws": 200, "warmup": 200, "seed": 5, "init_jitter": 0.1}}"#,
        ),
        ("diagnose", r#"{"schema_version": 1, "out": "diag", "run": "bm2"}"#),
        (
            "loo",
            r#"{"schema_version": 1, "out": "loo", "runs": [{"id": "bm1", "run": "bm1"}, {"id": "bm2", "run": "bm2"}]}"#,
        ),
        (
            "bootstrap",
            r#"{"schema_version": 1, "out": "boot", "data": {"path": "synth/dataset.csv"},
                "bootstrap": {"replicates": 200, "spec": {"family": "aero_gaussian", "n": 2}, "seed": 1},
                "grid": {"speeds": [140, 200], "frequency_hz": [100, 1000, 8000]}, "predictive": true}"#,
        ),
        (
            "predict",
            r#"{"schema_version": 1, "out": "pred", "run": "bm2", "seed": 3,
                "grid": {"speeds": [160], "frequency_hz": [100, 1000, 8000]}}"#,
        ),
    ];
    let mut dirs = Vec::new();
    for (i, (cmd, cfg)) in configs.iter().enumerate() {
        let name = format!("cfg{i}.json");
        fs::write(root.join(&name), cfg).unwrap();
        let code = run_cli(&[cmd, "--config", &name], root);
        // diagnose may trip its gate on short chains; artifacts are still written.
        if code != 0 && !(*cmd == "diagnose" && code == 3) {
            return outcome(false, format!("`{cmd}` exited with {code}"));
        }
        let v: serde_json::Value = serde_json::from_str(cfg).unwrap();
        dirs.push(v["out"].as_str().unwrap().to_string());
    }

    let mut compared = 0;
    let mut mismatches = Vec::new();
    for dir in &dirs {
        let manifest = root.join(dir).join("manifest.json");
        let again = format!("{dir}_rerun");
        let code = run_cli(&["rerun", manifest.to_str().unwrap(), "--out", &again], root);
        if code != 0 && code != 3 {
            return outcome(false, format!("rerun of `{dir}` exited with {code}"));
        }
        let mut names: Vec<_> = fs::read_dir(root.join(dir))
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .filter(|n| n != "manifest.json")
            .collect();
        names.sort();
        for n in names {
            let a = fs::read(root.join(dir).join(&n)).unwrap();
            let b = fs::read(root.join(&again).join(&n)).unwrap_or_default();
            compared += 1;
            if a != b {
                mismatches.push(format!("{dir}/{n}"));
            }
        }
    }
    outcome(
        mismatches.is_empty() && compared >= 20,
        format!(
            "{} commands, {compared} artifacts re-run from manifests; mismatches: {mismatches:?}",
            dirs.len()
        ),
    )
}
