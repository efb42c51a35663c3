use super::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::stats::{mean, sample_sd};

fn std_normal(dim: usize) -> FnTarget<impl Fn(&[f64]) -> (f64, Vec<f64>) + Sync> {
    FnTarget::new(dim, |q: &[f64]| {
        let lp = -0.5 * q.iter().map(|x| x * x).sum::<f64>();
        (lp, q.iter().map(|x| -x).collect())
    })
}

fn energy_1d(q: f64, p: f64) -> f64 {
    0.5 * q * q + 0.5 * p * p
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

#[test]
fn free_particle_drifts() {
    let flat = FnTarget::new(2, |q: &[f64]| (0.0, vec![0.0; q.len()]));
    let (q, p) = leapfrog(&flat, &[1.0, -2.0], &[0.5, 3.0], 0.1);
    assert_eq!(p, vec![0.5, 3.0]);
    assert!((q[0] - 1.05).abs() < 1e-15);
    assert!((q[1] - (-1.7)).abs() < 1e-15);
}

#[test]
fn single_step_energy_error_small() {
    let t = std_normal(1);
    let (q, p) = leapfrog(&t, &[1.0], &[1.0], 1e-2);
    let dh = energy_1d(q[0], p[0]) - energy_1d(1.0, 1.0);
    assert!(dh.abs() < 1e-4, "dH = {dh}");
}

#[test]
fn leapfrog_is_reversible() {
    let t = FnTarget::new(3, |q: &[f64]| {
        let lp = -q.iter().map(|x| x.powi(4) / 4.0 + x * x).sum::<f64>();
        (lp, q.iter().map(|x| -(x.powi(3) + 2.0 * x)).collect())
    });
    let q0 = [0.3, -1.2, 0.8];
    let p0 = [1.1, 0.4, -0.7];
    let mut z = Point::new(&t, q0.to_vec(), p0.to_vec());
    for _ in 0..25 {
        z = leapfrog_step(&t, &z, 0.05);
    }
    z.p.iter_mut().for_each(|p| *p = -*p);
    for _ in 0..25 {
        z = leapfrog_step(&t, &z, 0.05);
    }
    for i in 0..3 {
        assert!((z.q[i] - q0[i]).abs() < 1e-12);
        assert!((z.p[i] + p0[i]).abs() < 1e-12);
    }
}

#[test]
fn energy_error_is_second_order() {
    // Integrate over unit time so the global error order shows.
    let t = std_normal(1);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for eps in [1e-1_f64, 1e-2, 1e-3] {
        let steps = (1.0 / eps).round() as usize;
        let mut z = Point::new(&t, vec![1.0], vec![1.0]);
        for _ in 0..steps {
            z = leapfrog_step(&t, &z, eps);
        }
        let dh = (energy_1d(z.q[0], z.p[0]) - 1.0).abs();
        xs.push(f64::ln(eps));
        ys.push(dh.ln());
    }
    let mx = mean(&xs);
    let my = mean(&ys);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
}

#[test]
fn depth_zero_is_metropolis_step() {
    let t = std_normal(2);
    let eps = 0.7;
    let q0 = vec![0.4, -1.3];
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (q, stats) = nuts_draw(&q0, eps, &t, 0, &mut rng).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p0: Vec<f64> = (0..2).map(|_| rng.sample(StandardNormal)).collect();
        let z0 = Point::new(&t, q0.clone(), p0);
        let sign = if rng.random::<f64>() > 0.5 { 1.0 } else { -1.0 };
        let z1 = leapfrog_step(&t, &z0, sign * eps);
        let log_ratio = z0.energy() - z1.energy();
        let accepted = log_ratio > 0.0 || rng.random::<f64>() < log_ratio.exp();
        let expected = if accepted { z1.q } else { q0.clone() };

        assert_eq!(q, expected);
        assert_eq!(stats.n_leapfrog, 1);
        assert!((stats.accept_stat - log_ratio.exp().min(1.0)).abs() < 1e-15);
    }
}

#[test]
fn same_seed_same_draws() {
    let t = std_normal(3);
    let cfg = SamplerConfig { chains: 2, draws: 200, warmup: 100, seed: 11, ..Default::default() };
    let a = run_chains(&t, &cfg).unwrap();
    let b = run_chains(&t, &cfg).unwrap();
    assert_eq!(a, b);
    let c = run_chains(&t, &SamplerConfig { seed: 12, ..cfg }).unwrap();
    assert_ne!(a.draws, c.draws);
}

#[test]
fn chain_streams_independent_of_chain_count() {
    let t = std_normal(2);
    let cfg = SamplerConfig { chains: 2, draws: 50, warmup: 50, seed: 3, ..Default::default() };
    let two = run_chains(&t, &cfg).unwrap();
    let four = run_chains(&t, &SamplerConfig { chains: 4, ..cfg }).unwrap();
    assert_eq!(two.draws[..], four.draws[..2]);
}

#[test]
fn one_chain_one_draw_shape() {
    let t = std_normal(3);
    let cfg = SamplerConfig { chains: 1, draws: 1, warmup: 10, ..Default::default() };
    let s = run_chains(&t, &cfg).unwrap();
    assert_eq!(s.draws.len(), 1);
    assert_eq!(s.draws[0].len(), 1);
    assert_eq!(s.draws[0][0].len(), 3);
    assert_eq!(s.accept_stats[0].len(), 1);
}

#[test]
fn invariant_distribution_passes_ks() {
    let t = std_normal(1);
    let cfg = SamplerConfig { draws: 10_000, warmup: 1_000, seed: 5, ..Default::default() };
    let s = run_chains(&t, &cfg).unwrap();
    let mut xs = s.pooled(0);
    assert_eq!(xs.len(), 40_000);
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.02, "KS statistic {ks}");

    let acc: Vec<f64> = s.accept_stats.iter().flatten().copied().collect();
    let a = mean(&acc);
    assert!((0.7..=0.9).contains(&a), "mean accept {a}");
    assert_eq!(s.total_divergences(), 0);
}

#[test]
fn standard_normal_2d_moments() {
    let t = std_normal(2);
    let s = run_chains(&t, &SamplerConfig { seed: 1, ..Default::default() }).unwrap();
    for j in 0..2 {
        let xs = s.pooled(j);
        assert!(mean(&xs).abs() < 0.05);
        assert!((sample_sd(&xs) - 1.0).abs() < 0.05);
    }
    assert_eq!(s.total_divergences(), 0);
}

#[test]
fn correlated_normal_recovers_rho() {
    let rho: f64 = 0.9;
    let det = 1.0 - rho * rho;
    let t = FnTarget::new(2, move |q: &[f64]| {
        let (x, y) = (q[0], q[1]);
        let lp = -0.5 * (x * x - 2.0 * rho * x * y + y * y) / det;
        (lp, vec![-(x - rho * y) / det, -(y - rho * x) / det])
    });
    let cfg = SamplerConfig { draws: 5_000, warmup: 1_000, seed: 9, ..Default::default() };
    let s = run_chains(&t, &cfg).unwrap();
    let xs = s.pooled(0);
    let ys = s.pooled(1);
    let (mx, my) = (mean(&xs), mean(&ys));
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (xs.len() - 1) as f64;
    let r = cov / (sample_sd(&xs) * sample_sd(&ys));
    assert!((r - rho).abs() < 0.05, "sample correlation {r}");
}

#[test]
fn failing_initialization_reports_chain() {
    // Support is x > 5, unreachable from jitter around zero.
    let t = FnTarget::new(
        1,
        |q: &[f64]| {
            if q[0] > 5.0 {
                (0.0, vec![0.0])
            } else {
                (f64::NEG_INFINITY, vec![0.0])
            }
        },
    );
    let err = run_chains(&t, &SamplerConfig::default()).unwrap_err();
    assert!(matches!(err, Error::Initialization { chain: 0, .. }), "{err}");
}

#[test]
fn csv_round_trip() {
    let t = std_normal(2);
    let cfg = SamplerConfig { chains: 2, draws: 30, warmup: 30, ..Default::default() };
    let s = run_chains(&t, &cfg).unwrap();
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    let summary = s.summary();
    let json = serde_json::to_string(&summary).unwrap();
    let summary: SamplesSummary = serde_json::from_str(&json).unwrap();
    let back = PosteriorSamples::read_csv(buf.as_slice(), Some(&summary)).unwrap();
    assert_eq!(back, s);
}

#[test]
fn config_rejects_bad_target_accept() {
    let cfg = SamplerConfig { target_accept: 1.0, ..Default::default() };
    assert!(matches!(cfg.validate(), Err(Error::Config(_))));
}
