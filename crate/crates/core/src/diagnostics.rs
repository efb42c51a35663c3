//! Convergence diagnostics: potential scale reduction, rank histograms and
//! effective sample size.

use std::io::Write;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::sampler::PosteriorSamples;
use crate::stats::{mean, sample_variance};
use crate::{par, Error, Result};

pub const DEFAULT_RANK_BINS: usize = 20;

/// Within-chain variance `W`, between-chain variance `B` and R̂.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RHat {
    pub r_hat: f64,
    pub w: f64,
    pub b: f64,
}

fn check_shape(chains: &[Vec<f64>], min_chains: usize, min_draws: usize) -> Result<usize> {
    if chains.len() < min_chains {
        return Err(Error::Precondition(format!("need at least {min_chains} chains, got {}", chains.len())));
    }
    let n = chains[0].len();
    if chains.iter().any(|c| c.len() != n) {
        return Err(Error::Precondition("chains have unequal lengths".into()));
    }
    if n < min_draws {
        return Err(Error::Precondition(format!("need at least {min_draws} draws per chain, got {n}")));
    }
    Ok(n)
}

/// `R̂ = sqrt(((N-1)/N · W + B/N) / W)` with `W` the mean within-chain sample
/// variance and `B = N · var(chain means)`.
///
/// Stuck chains (`W = 0 < B`) give `+∞`; fully constant identical chains
/// give 1.
pub fn r_hat_components(chains: &[Vec<f64>]) -> Result<RHat> {
    let n = check_shape(chains, 2, 2)? as f64;
    let w = mean(&chains.iter().map(|c| sample_variance(c)).collect::<Vec<_>>());
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let b = n * sample_variance(&means);
    let r_hat = if w > 0.0 {
        ((n - 1.0) / n + b / (n * w)).sqrt()
    } else if b > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    Ok(RHat { r_hat, w, b })
}

pub fn r_hat(chains: &[Vec<f64>]) -> Result<f64> {
    r_hat_components(chains).map(|r| r.r_hat)
}

/// Split every chain into halves (dropping the middle draw of odd-length
/// chains) before applying [`r_hat`].
pub fn split_r_hat(chains: &[Vec<f64>]) -> Result<f64> {
    check_shape(chains, 1, 4)?;
    let halves: Vec<Vec<f64>> = chains
        .iter()
        .flat_map(|c| {
            let h = c.len() / 2;
            [c[..h].to_vec(), c[c.len() - h..].to_vec()]
        })
        .collect();
    r_hat(&halves)
}

/// Average (1-based) ranks of `xs`, ties sharing their mean rank.
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Per-chain histograms of pooled ranks over `bins` equal-width bins.
pub fn rank_histogram(chains: &[Vec<f64>], bins: usize) -> Result<Vec<Vec<usize>>> {
    let n = check_shape(chains, 2, 1)?;
    if bins == 0 {
        return Err(Error::Precondition("rank histogram needs at least one bin".into()));
    }
    let pooled: Vec<f64> = chains.iter().flatten().copied().collect();
    let total = pooled.len() as f64;
    let ranks = average_ranks(&pooled);
    let mut hist = vec![vec![0usize; bins]; chains.len()];
    for (i, r) in ranks.iter().enumerate() {
        let bin = (((r - 0.5) / total * bins as f64).floor() as usize).min(bins - 1);
        hist[i / n][bin] += 1;
    }
    Ok(hist)
}

/// Pearson statistic of a rank histogram against uniformity, with its degrees
/// of freedom `(chains - 1)(bins - 1)`.
pub fn rank_chi_square(hist: &[Vec<usize>]) -> (f64, usize) {
    let bins = hist.first().map_or(0, Vec::len);
    let mut stat = 0.0;
    for chain in hist {
        let e = chain.iter().sum::<usize>() as f64 / bins as f64;
        stat += chain.iter().map(|&o| (o as f64 - e).powi(2) / e).sum::<f64>();
    }
    (stat, hist.len().saturating_sub(1) * bins.saturating_sub(1))
}

/// Biased autocovariance at all lags.
fn autocovariance(x: &[f64], planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let n = x.len();
    let m = mean(x);
    let len = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .map(|v| Complex::new(v - m, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(len)
        .collect();
    planner.plan_fft_forward(len).process(&mut buf);
    for c in &mut buf {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    buf[..n].iter().map(|c| c.re / (len as f64 * n as f64)).collect()
}

/// ESS returned for constant draws.
pub const ESS_SENTINEL: f64 = 1.0;

/// Multi-chain effective sample size with Geyer's initial monotone sequence
/// truncation.
pub fn ess(chains: &[Vec<f64>]) -> Result<f64> {
    let n = check_shape(chains, 1, 4)?;
    let m = chains.len();
    let total = (n * m) as f64;
    let mut planner = FftPlanner::new();
    let acov: Vec<Vec<f64>> = chains.iter().map(|c| autocovariance(c, &mut planner)).collect();
    let nf = n as f64;
    let mean_var = acov.iter().map(|a| a[0]).sum::<f64>() / m as f64 * nf / (nf - 1.0);
    let mut var_plus = mean_var * (nf - 1.0) / nf;
    if m > 1 {
        let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
        var_plus += sample_variance(&means);
    }
    if !(var_plus > 0.0) || !var_plus.is_finite() {
        return Ok(ESS_SENTINEL);
    }
    let rho = |t: usize| 1.0 - (mean_var - acov.iter().map(|a| a[t]).sum::<f64>() / m as f64) / var_plus;

    let mut rho_hat = vec![0.0; n];
    rho_hat[0] = 1.0;
    let mut even = 1.0;
    let mut odd = rho(1);
    rho_hat[1] = odd;
    let mut t = 1;
    while t + 5 < n && even + odd > 0.0 {
        even = rho(t + 1);
        odd = rho(t + 2);
        if even + odd >= 0.0 {
            rho_hat[t + 1] = even;
            rho_hat[t + 2] = odd;
        }
        t += 2;
    }
    let max_t = t;
    if even > 0.0 {
        rho_hat[max_t + 1] = even;
    }
    let mut s = 1;
    while s + 3 <= max_t {
        if rho_hat[s + 1] + rho_hat[s + 2] > rho_hat[s - 1] + rho_hat[s] {
            rho_hat[s + 1] = (rho_hat[s - 1] + rho_hat[s]) / 2.0;
            rho_hat[s + 2] = rho_hat[s + 1];
        }
        s += 2;
    }
    let tau = -1.0 + 2.0 * rho_hat[..max_t].iter().sum::<f64>() + rho_hat[max_t + 1];
    Ok(total / tau.max(1.0 / total.log10()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsOptions {
    pub rank_bins: usize,
    /// Use split chains for R̂.
    pub split: bool,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self { rank_bins: DEFAULT_RANK_BINS, split: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDiagnostics {
    pub name: String,
    pub r_hat: f64,
    pub ess: f64,
    pub w: f64,
    pub b: f64,
    /// `[chain][bin]`
    pub rank_histogram: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub split: bool,
    pub rank_bins: usize,
    pub chains: usize,
    pub draws: usize,
    pub divergences: usize,
    pub params: Vec<ParamDiagnostics>,
}

impl ConvergenceReport {
    pub fn max_r_hat(&self) -> f64 {
        self.params.iter().map(|p| p.r_hat).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_ess(&self) -> f64 {
        self.params.iter().map(|p| p.ess).fold(f64::INFINITY, f64::min)
    }

    /// Columns `param, chain, bin, count`.
    pub fn write_rank_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["param", "chain", "bin", "count"])?;
        for p in &self.params {
            for (c, hist) in p.rank_histogram.iter().enumerate() {
                for (b, count) in hist.iter().enumerate() {
                    out.write_record([p.name.clone(), c.to_string(), b.to_string(), count.to_string()])?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Diagnostics for every parameter, evaluated in parallel.
pub fn diagnose(samples: &PosteriorSamples, options: &DiagnosticsOptions) -> Result<ConvergenceReport> {
    let params = par::try_map_indexed(samples.dim(), |j| {
        let chains = samples.param_chains(j);
        let comps = r_hat_components(&chains)?;
        let r_hat = if options.split { split_r_hat(&chains)? } else { comps.r_hat };
        Ok::<_, Error>(ParamDiagnostics {
            name: samples.param_names[j].clone(),
            r_hat,
            ess: ess(&chains)?,
            w: comps.w,
            b: comps.b,
            rank_histogram: rank_histogram(&chains, options.rank_bins)?,
        })
    })?;
    Ok(ConvergenceReport {
        split: options.split,
        rank_bins: options.rank_bins,
        chains: samples.n_chains(),
        draws: samples.n_draws(),
        divergences: samples.total_divergences(),
        params,
    })
}
