//! Posterior predictive simulation over a grid of operating points.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::fit::substream;
use crate::sampler::PosteriorSamples;
use crate::stats::{mean, quantile_sorted};
use crate::Result;

use super::bayes::BayesModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    /// km/h
    pub speed: f64,
    pub frequency_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorPredictive {
    pub grid: Vec<GridPoint>,
    /// `[draw][point]`, simulated SPL in dB.
    pub samples: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub lower95: Vec<f64>,
    pub upper95: Vec<f64>,
}

impl PosteriorPredictive {
    /// Summarize `[draw][point]` simulations.
    pub fn from_samples(grid: Vec<GridPoint>, samples: Vec<Vec<f64>>) -> Self {
        let n = grid.len();
        let mut mean_v = Vec::with_capacity(n);
        let mut lo = Vec::with_capacity(n);
        let mut hi = Vec::with_capacity(n);
        for j in 0..n {
            let mut col: Vec<f64> = samples.iter().map(|s| s[j]).collect();
            mean_v.push(mean(&col));
            col.sort_by(f64::total_cmp);
            lo.push(quantile_sorted(&col, 0.025));
            hi.push(quantile_sorted(&col, 0.975));
        }
        Self { grid, samples, mean: mean_v, lower95: lo, upper95: hi }
    }

    /// Columns `point, speed_kmph, frequency_hz, mean, lower95, upper95`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["point", "speed_kmph", "frequency_hz", "mean", "lower95", "upper95"])?;
        for (i, g) in self.grid.iter().enumerate() {
            out.write_record([
                i.to_string(),
                g.speed.to_string(),
                g.frequency_hz.to_string(),
                self.mean[i].to_string(),
                self.lower95[i].to_string(),
                self.upper95[i].to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Simulate `L ~ Normal(mean(θ), σ²(θ, band))` for every pooled draw and grid
/// point. Noise comes from stream 0 of `seed`.
pub fn posterior_predictive(
    model: &BayesModel,
    samples: &PosteriorSamples,
    grid: &[GridPoint],
    seed: u64,
) -> Result<PosteriorPredictive> {
    let bands = grid.iter().map(|g| model.band_for(g.frequency_hz)).collect::<Result<Vec<_>>>()?;
    let mut rng = substream(seed, 0);
    let mut sims = Vec::with_capacity(samples.n_chains() * samples.n_draws());
    for q in samples.pooled_draws() {
        let row = grid
            .iter()
            .zip(&bands)
            .map(|(g, &b)| {
                let (m, sd) = model.predictive_moments(q, g.speed, g.frequency_hz, b)?;
                let e: f64 = rng.sample(StandardNormal);
                Ok(m + sd * e)
            })
            .collect::<Result<Vec<f64>>>()?;
        sims.push(row);
    }
    Ok(PosteriorPredictive::from_samples(grid.to_vec(), sims))
}
