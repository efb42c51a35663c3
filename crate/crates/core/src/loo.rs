//! Pareto-smoothed importance-sampling leave-one-out cross-validation.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::models::PointwiseLogLik;
use crate::sampler::{PosteriorSamples, TargetDensity};
use crate::stats::{log_sum_exp, mean, sample_variance};
use crate::{par, Error, Result};

/// k̂ below this is considered reliable.
pub const K_GOOD: f64 = 0.5;
/// k̂ above this flags an influential observation.
pub const K_BAD: f64 = 0.7;

/// Minimum draw count for Pareto smoothing; fewer draws fall back to
/// truncated importance sampling.
pub const MIN_SMOOTHING_DRAWS: usize = 100;

/// `log p(y_i | θ_j)` as `[draw][observation]`, draws pooled in chain order.
pub fn pointwise_loglik<M>(model: &M, samples: &PosteriorSamples) -> Result<Vec<Vec<f64>>>
where
    M: TargetDensity + PointwiseLogLik,
{
    if samples.dim() != model.dim() {
        return Err(Error::Config(format!(
            "samples have {} parameters, model expects {}",
            samples.dim(),
            model.dim()
        )));
    }
    let draws: Vec<&[f64]> = samples.pooled_draws().collect();
    Ok(par::map_slice(&draws, |q| {
        let mut out = vec![0.0; model.n_obs()];
        model.pointwise_loglik(q, &mut out);
        out
    }))
}

/// Zhang–Stephens posterior-mean estimate of the generalized Pareto shape
/// `k` and scale `σ` for ascending, positive exceedances `x`, with a weakly
/// informative adjustment of `k` towards 0.5.
pub fn gpdfit(x: &[f64]) -> (f64, f64) {
    const PRIOR_BS: f64 = 3.0;
    const PRIOR_K: f64 = 10.0;
    let n = x.len();
    let nf = n as f64;
    let m = 30 + (nf.sqrt() as usize);
    let quartile = x[((nf / 4.0 + 0.5) as usize).max(1) - 1];
    let xmax = x[n - 1];
    let b: Vec<f64> = (1..=m)
        .map(|j| (1.0 - (m as f64 / (j as f64 - 0.5)).sqrt()) / (PRIOR_BS * quartile) + 1.0 / xmax)
        .collect();
    let len_scale: Vec<f64> = b
        .iter()
        .map(|&bj| {
            let k = x.iter().map(|xi| (-bj * xi).ln_1p()).sum::<f64>() / nf;
            nf * ((-bj / k).ln() - k - 1.0)
        })
        .collect();
    let mut weights: Vec<f64> =
        len_scale.iter().map(|li| 1.0 / len_scale.iter().map(|lj| (lj - li).exp()).sum::<f64>()).collect();
    let keep: Vec<bool> = weights.iter().map(|w| *w >= 10.0 * f64::EPSILON).collect();
    let total: f64 = weights.iter().zip(&keep).filter(|(_, k)| **k).map(|(w, _)| w).sum();
    for (w, k) in weights.iter_mut().zip(&keep) {
        *w = if *k { *w / total } else { 0.0 };
    }
    let b_post: f64 = b.iter().zip(&weights).map(|(b, w)| b * w).sum();
    let k = x.iter().map(|xi| (-b_post * xi).ln_1p()).sum::<f64>() / nf;
    let sigma = -k / b_post;
    let k = (nf * k + PRIOR_K * 0.5) / (nf + PRIOR_K);
    (k, sigma)
}

/// Quantile function of the generalized Pareto distribution with location 0.
fn gpinv(p: f64, k: f64, sigma: f64) -> f64 {
    if k.abs() < f64::EPSILON {
        -sigma * (-p).ln_1p()
    } else {
        sigma * (-k * (-p).ln_1p()).exp_m1() / k
    }
}

/// Pareto-smoothed, normalized log weights and the tail shape estimate k̂.
///
/// With fewer than [`MIN_SMOOTHING_DRAWS`] draws the weights are truncated at
/// `mean · sqrt(S)` instead and k̂ is NaN (not estimated).
pub fn psis_log_weights(raw_log_weights: &[f64]) -> (Vec<f64>, f64) {
    let s = raw_log_weights.len();
    if s == 0 {
        return (Vec::new(), f64::NAN);
    }
    let max = raw_log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut lw: Vec<f64> = raw_log_weights.iter().map(|v| v - max).collect();
    let sf = s as f64;

    let k = if lw.iter().all(|&v| v == 0.0) {
        0.0
    } else if s < MIN_SMOOTHING_DRAWS {
        let cap = log_sum_exp(&lw) - sf.ln() + 0.5 * sf.ln();
        lw.iter_mut().for_each(|v| *v = v.min(cap));
        f64::NAN
    } else {
        let m = (0.2 * sf).min(3.0 * sf.sqrt()).ceil() as usize;
        let mut order: Vec<usize> = (0..s).collect();
        order.sort_by(|&a, &b| lw[a].total_cmp(&lw[b]));
        let cutoff = lw[order[s - m - 1]].max(f64::MIN_POSITIVE.ln());
        let exp_cutoff = cutoff.exp();
        let tail: Vec<usize> = order.iter().copied().filter(|&i| lw[i] > cutoff).collect();
        if tail.len() <= 4 {
            f64::INFINITY
        } else {
            let exceed: Vec<f64> = tail.iter().map(|&i| lw[i].exp() - exp_cutoff).collect();
            let (k, sigma) = gpdfit(&exceed);
            if k.is_finite() && sigma > 0.0 {
                let len = tail.len() as f64;
                for (j, &i) in tail.iter().enumerate() {
                    let p = (j as f64 + 0.5) / len;
                    lw[i] = (gpinv(p, k, sigma) + exp_cutoff).ln().min(0.0);
                }
            }
            k
        }
    };
    let norm = log_sum_exp(&lw);
    lw.iter_mut().for_each(|v| *v -= norm);
    (lw, k)
}

/// Normalized smoothed importance weights and k̂ for one observation.
pub fn psis_smooth(raw_log_weights: &[f64]) -> (Vec<f64>, f64) {
    let (lw, k) = psis_log_weights(raw_log_weights);
    (lw.iter().map(|v| v.exp()).collect(), k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooReport {
    pub model_id: String,
    pub n_obs: usize,
    pub n_draws: usize,
    pub elpd: f64,
    pub p_loo: f64,
    pub se: f64,
    pub k_hat: Vec<f64>,
    pub pointwise_elpd: Vec<f64>,
    /// Log pointwise predictive density of the full-data posterior.
    pub pointwise_lpd: Vec<f64>,
    /// Observations with k̂ above [`K_BAD`].
    pub n_k_above_bad: usize,
    pub warnings: Vec<String>,
}

impl LooReport {
    /// Columns `obs, frequency_hz, speed_kmph, k_hat`, ordered by frequency
    /// (observation index within a band). Without a dataset, by index.
    pub fn write_k_hat_csv<W: Write>(&self, w: W, data: Option<&Dataset>) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["obs", "frequency_hz", "speed_kmph", "k_hat"])?;
        let mut idx: Vec<usize> = (0..self.n_obs).collect();
        if let Some(d) = data {
            if d.len() != self.n_obs {
                return Err(Error::Dimension(format!(
                    "dataset has {} records, report has {}",
                    d.len(),
                    self.n_obs
                )));
            }
            let recs = d.records();
            idx.sort_by(|&a, &b| recs[a].frequency_hz.total_cmp(&recs[b].frequency_hz));
        }
        for i in idx {
            let (f, v) = data.map_or((String::new(), String::new()), |d| {
                let r = &d.records()[i];
                (r.frequency_hz.to_string(), r.speed.to_string())
            });
            out.write_record([i.to_string(), f, v, self.k_hat[i].to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// PSIS-LOO from a `[draw][observation]` log-likelihood matrix.
pub fn psis_loo_from_loglik(model_id: &str, loglik: &[Vec<f64>]) -> Result<LooReport> {
    let s = loglik.len();
    if s == 0 {
        return Err(Error::Precondition("PSIS-LOO needs at least one draw".into()));
    }
    let n = loglik[0].len();
    if loglik.iter().any(|row| row.len() != n) {
        return Err(Error::Dimension("log-likelihood rows differ in length".into()));
    }
    let per_obs = par::map_indexed(n, |i| {
        let ll: Vec<f64> = loglik.iter().map(|row| row[i]).collect();
        let neg: Vec<f64> = ll.iter().map(|v| -v).collect();
        let (lw, k) = psis_log_weights(&neg);
        let terms: Vec<f64> = lw.iter().zip(&ll).map(|(w, l)| w + l).collect();
        let elpd = log_sum_exp(&terms);
        let lpd = log_sum_exp(&ll) - (s as f64).ln();
        (elpd, lpd, k)
    });
    let pointwise_elpd: Vec<f64> = per_obs.iter().map(|t| t.0).collect();
    let pointwise_lpd: Vec<f64> = per_obs.iter().map(|t| t.1).collect();
    let k_hat: Vec<f64> = per_obs.iter().map(|t| t.2).collect();
    let elpd: f64 = pointwise_elpd.iter().sum();
    let lpd: f64 = pointwise_lpd.iter().sum();
    let se = if n > 1 { (n as f64 * sample_variance(&pointwise_elpd)).sqrt() } else { 0.0 };
    let n_bad = k_hat.iter().filter(|k| **k > K_BAD).count();
    let mut warnings = Vec::new();
    if n == 1 {
        warnings.push("single observation: leave-one-out estimate is vacuous".into());
    }
    if n_bad > 0 {
        warnings.push(format!("{n_bad} of {n} observations have k_hat > {K_BAD}"));
    }
    if s < MIN_SMOOTHING_DRAWS {
        warnings.push(format!("only {s} draws: truncated importance sampling, k_hat not estimated"));
    }
    Ok(LooReport {
        model_id: model_id.to_string(),
        n_obs: n,
        n_draws: s,
        elpd,
        p_loo: lpd - elpd,
        se,
        k_hat,
        pointwise_elpd,
        pointwise_lpd,
        n_k_above_bad: n_bad,
        warnings,
    })
}

pub fn psis_loo<M>(model_id: &str, model: &M, samples: &PosteriorSamples) -> Result<LooReport>
where
    M: TargetDensity + PointwiseLogLik,
{
    psis_loo_from_loglik(model_id, &pointwise_loglik(model, samples)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub model_id: String,
    pub rank: usize,
    pub elpd: f64,
    pub p_loo: f64,
    pub se: f64,
    /// `elpd - elpd of rank 0` (≤ 0).
    pub elpd_diff: f64,
    /// Standard error of the paired pointwise difference to rank 0.
    pub se_diff: f64,
}

/// Rank models by descending elpd; ties go to the lower se, then model id.
pub fn compare(reports: &[LooReport]) -> Result<Vec<RankRow>> {
    let Some(first) = reports.first() else {
        return Ok(Vec::new());
    };
    if let Some(r) = reports.iter().find(|r| r.n_obs != first.n_obs) {
        return Err(Error::Comparison(format!(
            "model `{}` has {} observations, `{}` has {}",
            r.model_id, r.n_obs, first.model_id, first.n_obs
        )));
    }
    let mut order: Vec<&LooReport> = reports.iter().collect();
    order.sort_by(|a, b| {
        b.elpd.total_cmp(&a.elpd).then(a.se.total_cmp(&b.se)).then(a.model_id.cmp(&b.model_id))
    });
    let best = order[0];
    Ok(order
        .iter()
        .enumerate()
        .map(|(rank, r)| {
            let diff: Vec<f64> =
                r.pointwise_elpd.iter().zip(&best.pointwise_elpd).map(|(a, b)| a - b).collect();
            let se_diff = if diff.len() > 1 && rank > 0 {
                (diff.len() as f64 * sample_variance(&diff)).sqrt()
            } else {
                0.0
            };
            RankRow {
                model_id: r.model_id.clone(),
                rank,
                elpd: r.elpd,
                p_loo: r.p_loo,
                se: r.se,
                elpd_diff: if rank == 0 { 0.0 } else { mean(&diff) * diff.len() as f64 },
                se_diff,
            }
        })
        .collect())
}
