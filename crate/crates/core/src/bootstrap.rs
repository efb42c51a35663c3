//! Parametric bootstrap around a least-squares point fit.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, SpectrumRecord};
use crate::fit::{auto_fit, nls_fit, substream};
use crate::models::GridPoint;
use crate::stats::{mean, quantile_sorted, sample_sd};
use crate::surrogate::{self, ParameterVector, SurrogateSpec};
use crate::{par, Error, Result};

/// Noise level of the simulated data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Residual sd of the point fit.
    #[default]
    ResidualSd,
    Fixed(f64),
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub spec: SurrogateSpec,
    #[serde(default)]
    pub noise_mode: NoiseMode,
    #[serde(default)]
    pub seed: u64,
    /// Resample design rows with replacement for every replicate; otherwise
    /// reuse the observed design.
    #[serde(default = "default_true")]
    pub input_resampling: bool,
    /// Starting point of the point fit; without one the fit runs
    /// [`auto_fit`](crate::fit::auto_fit).
    #[serde(default)]
    pub init: Option<ParameterVector>,
}

impl BootstrapConfig {
    pub fn new(spec: SurrogateSpec, replicates: usize, seed: u64) -> Self {
        Self { replicates, spec, noise_mode: NoiseMode::ResidualSd, seed, input_resampling: true, init: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub spec: SurrogateSpec,
    pub theta_hat: ParameterVector,
    pub param_names: Vec<String>,
    /// Free mean parameters of each successful replicate, in replicate order.
    pub replicate_params: Vec<Vec<f64>>,
    pub param_mean: Vec<f64>,
    pub param_sd: Vec<f64>,
    /// Noise sd used to simulate the replicates.
    pub noise_sd: f64,
    pub replicates: usize,
    pub failed_replicates: usize,
}

impl BootstrapResult {
    /// Columns `replicate, <param names…>`.
    pub fn write_replicates_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["replicate".to_string()];
        header.extend(self.param_names.iter().cloned());
        out.write_record(&header)?;
        for (i, row) in self.replicate_params.iter().enumerate() {
            let mut rec = vec![i.to_string()];
            rec.extend(row.iter().map(f64::to_string));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Point fit (from `cfg.init`, else [`auto_fit`]), then `replicates` rounds of simulating data from the fitted
/// mean plus Gaussian noise and refitting from a warm start at the point
/// estimate. Replicate `i` draws from stream `i` of `cfg.seed`.
pub fn parametric_bootstrap(d: &Dataset, cfg: &BootstrapConfig) -> Result<BootstrapResult> {
    if cfg.replicates < 2 {
        return Err(Error::Config("bootstrap needs at least 2 replicates".into()));
    }
    let spec = &cfg.spec;
    let point = match &cfg.init {
        Some(init) => nls_fit(d, spec, init),
        None => auto_fit(d, spec),
    }
    .map_err(|e| Error::PointFit(e.to_string()))?;
    let theta_hat = point.params;
    let noise_sd = match cfg.noise_mode {
        NoiseMode::ResidualSd => point.residual_sd,
        NoiseMode::Fixed(s) if s >= 0.0 && s.is_finite() => s,
        NoiseMode::Fixed(s) => {
            return Err(Error::Config(format!("bootstrap noise sd must be non-negative, got {s}")))
        }
    };

    let fits = par::map_indexed(cfg.replicates, |i| {
        let mut rng = substream(cfg.seed, i as u64);
        let design: Vec<&SpectrumRecord> = if cfg.input_resampling {
            (0..d.len()).map(|_| &d.records()[rng.random_range(0..d.len())]).collect()
        } else {
            d.records().iter().collect()
        };
        let records = design
            .into_iter()
            .map(|r| {
                let mu = surrogate::mean(r.speed, r.frequency_hz, spec, &theta_hat)?;
                let eta: f64 = rng.sample(StandardNormal);
                let mut rec = r.clone();
                rec.spl_db = mu + noise_sd * eta;
                Ok(rec)
            })
            .collect::<Result<Vec<_>>>()
            .ok()?;
        let sim = Dataset::new(records, d.schema().to_vec()).ok()?;
        let fit = nls_fit(&sim, spec, &theta_hat).ok()?;
        fit.converged.then(|| fit.params.free_mean_params())
    });

    let replicate_params: Vec<Vec<f64>> = fits.into_iter().flatten().collect();
    let failed_replicates = cfg.replicates - replicate_params.len();
    let p = spec.free_param_count();
    let column = |j: usize| -> Vec<f64> { replicate_params.iter().map(|r| r[j]).collect() };
    let (param_mean, param_sd) = if replicate_params.is_empty() {
        (vec![f64::NAN; p], vec![f64::NAN; p])
    } else {
        (
            (0..p).map(|j| mean(&column(j))).collect(),
            (0..p)
                .map(|j| if replicate_params.len() > 1 { sample_sd(&column(j)) } else { f64::NAN })
                .collect(),
        )
    };
    Ok(BootstrapResult {
        spec: spec.clone(),
        theta_hat,
        param_names: spec.free_param_names(),
        replicate_params,
        param_mean,
        param_sd,
        noise_sd,
        replicates: cfg.replicates,
        failed_replicates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionBands {
    pub grid: Vec<GridPoint>,
    pub mean: Vec<f64>,
    pub lower95: Vec<f64>,
    pub upper95: Vec<f64>,
}

impl PredictionBands {
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

/// Pointwise mean and 2.5/97.5% quantiles of the surrogate mean across
/// replicates. With `noise_seed`, observation noise at the bootstrap noise
/// level is added to every evaluation (predictive rather than confidence
/// bands).
pub fn predict_bands(
    result: &BootstrapResult,
    grid: &[GridPoint],
    noise_seed: Option<u64>,
) -> Result<PredictionBands> {
    if result.replicate_params.len() < 2 {
        return Err(Error::Precondition(format!(
            "prediction bands need at least 2 successful replicates, got {}",
            result.replicate_params.len()
        )));
    }
    let mut rng = noise_seed.map(|s| substream(s, 0));
    let mut columns = vec![Vec::with_capacity(result.replicate_params.len()); grid.len()];
    for theta in &result.replicate_params {
        let params = result.theta_hat.with_free_mean_params(&result.spec, theta);
        for (g, col) in grid.iter().zip(columns.iter_mut()) {
            let mut v = surrogate::mean(g.speed, g.frequency_hz, &result.spec, &params)?;
            if let Some(rng) = rng.as_mut() {
                v += result.noise_sd * rng.sample::<f64, _>(StandardNormal);
            }
            col.push(v);
        }
    }
    let mut bands = PredictionBands {
        grid: grid.to_vec(),
        mean: Vec::with_capacity(grid.len()),
        lower95: Vec::with_capacity(grid.len()),
        upper95: Vec::with_capacity(grid.len()),
    };
    for mut col in columns {
        bands.mean.push(mean(&col));
        col.sort_by(f64::total_cmp);
        bands.lower95.push(quantile_sorted(&col, 0.025));
        bands.upper95.push(quantile_sorted(&col, 0.975));
    }
    Ok(bands)
}
