//! Post-warmup draws and their CSV / JSON representations.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::stats::{mean, quantile, sample_sd};
use crate::{Error, Result};

const ACCEPT_COL: &str = "accept_stat__";
const DEPTH_COL: &str = "tree_depth__";

/// Post-warmup draws, indexed `[chain][draw][parameter]`, with sampler
/// statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    pub param_names: Vec<String>,
    pub draws: Vec<Vec<Vec<f64>>>,
    /// `[chain][draw]`
    pub accept_stats: Vec<Vec<f64>>,
    /// `[chain][draw]`
    pub tree_depths: Vec<Vec<u32>>,
    /// Adapted step size per chain.
    pub step_sizes: Vec<f64>,
    /// Divergent transitions per chain.
    pub divergences: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

/// JSON summary written next to the draws CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplesSummary {
    pub chains: usize,
    pub draws: usize,
    pub param_names: Vec<String>,
    pub step_sizes: Vec<f64>,
    pub divergences: Vec<usize>,
    pub mean_accept_stat: Vec<f64>,
    pub params: Vec<ParamSummary>,
}

impl PosteriorSamples {
    pub fn n_chains(&self) -> usize {
        self.draws.len()
    }

    pub fn n_draws(&self) -> usize {
        self.draws.first().map_or(0, Vec::len)
    }

    pub fn dim(&self) -> usize {
        self.param_names.len()
    }

    /// Draws of parameter `j` as `[chain][draw]`.
    pub fn param_chains(&self, j: usize) -> Vec<Vec<f64>> {
        self.draws.iter().map(|chain| chain.iter().map(|d| d[j]).collect()).collect()
    }

    /// Draws of parameter `j` pooled over chains in chain order.
    pub fn pooled(&self, j: usize) -> Vec<f64> {
        self.draws.iter().flatten().map(|d| d[j]).collect()
    }

    /// All draw vectors pooled over chains in chain order.
    pub fn pooled_draws(&self) -> impl Iterator<Item = &[f64]> {
        self.draws.iter().flatten().map(Vec::as_slice)
    }

    pub fn total_divergences(&self) -> usize {
        self.divergences.iter().sum()
    }

    pub fn summary(&self) -> SamplesSummary {
        let params = self
            .param_names
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let xs = self.pooled(j);
                ParamSummary {
                    name: name.clone(),
                    mean: mean(&xs),
                    sd: sample_sd(&xs),
                    q05: quantile(&xs, 0.05),
                    q50: quantile(&xs, 0.5),
                    q95: quantile(&xs, 0.95),
                }
            })
            .collect();
        SamplesSummary {
            chains: self.n_chains(),
            draws: self.n_draws(),
            param_names: self.param_names.clone(),
            step_sizes: self.step_sizes.clone(),
            divergences: self.divergences.clone(),
            mean_accept_stat: self.accept_stats.iter().map(|a| mean(a)).collect(),
            params,
        }
    }

    /// Columns `chain, draw, <params…>, accept_stat__, tree_depth__`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["chain".to_string(), "draw".to_string()];
        header.extend(self.param_names.iter().cloned());
        header.push(ACCEPT_COL.into());
        header.push(DEPTH_COL.into());
        out.write_record(&header)?;
        for (c, chain) in self.draws.iter().enumerate() {
            for (i, draw) in chain.iter().enumerate() {
                let mut row = vec![c.to_string(), i.to_string()];
                row.extend(draw.iter().map(f64::to_string));
                row.push(self.accept_stats[c][i].to_string());
                row.push(self.tree_depths[c][i].to_string());
                out.write_record(&row)?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Inverse of [`write_csv`](Self::write_csv). Step sizes and divergence
    /// counts are not part of the CSV and come from `summary` when given.
    pub fn read_csv<R: Read>(reader: R, summary: Option<&SamplesSummary>) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.get(0) != Some("chain") || headers.get(1) != Some("draw") {
            return Err(Error::MissingColumn("chain/draw".into()));
        }
        let names: Vec<String> = headers.iter().skip(2).map(str::to_string).collect();
        let accept_col = names.iter().position(|n| n == ACCEPT_COL);
        let depth_col = names.iter().position(|n| n == DEPTH_COL);
        let param_names: Vec<String> = names.iter().filter(|n| !n.ends_with("__")).cloned().collect();

        let mut samples = PosteriorSamples {
            param_names,
            draws: Vec::new(),
            accept_stats: Vec::new(),
            tree_depths: Vec::new(),
            step_sizes: Vec::new(),
            divergences: Vec::new(),
        };
        for (row_idx, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = row_idx + 1;
            let parse = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| Error::Parse { row, message: format!("missing field {k}") })?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse { row, message: e.to_string() })
            };
            let chain = parse(0)? as usize;
            if chain > samples.draws.len() {
                return Err(Error::Parse { row, message: format!("chain index {chain} out of order") });
            }
            if chain == samples.draws.len() {
                samples.draws.push(Vec::new());
                samples.accept_stats.push(Vec::new());
                samples.tree_depths.push(Vec::new());
            }
            let mut draw = Vec::with_capacity(samples.param_names.len());
            let mut accept = f64::NAN;
            let mut depth = 0;
            for (k, name) in names.iter().enumerate() {
                let v = parse(k + 2)?;
                if Some(k) == accept_col {
                    accept = v;
                } else if Some(k) == depth_col {
                    depth = v as u32;
                } else if !name.ends_with("__") {
                    draw.push(v);
                }
            }
            samples.draws[chain].push(draw);
            samples.accept_stats[chain].push(accept);
            samples.tree_depths[chain].push(depth);
        }
        let n = samples.n_draws();
        if samples.draws.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidDataset("chains have unequal draw counts".into()));
        }
        match summary {
            Some(s) => {
                if s.step_sizes.len() != samples.n_chains() {
                    return Err(Error::Dimension(format!(
                        "summary lists {} chains, CSV has {}",
                        s.step_sizes.len(),
                        samples.n_chains()
                    )));
                }
                samples.step_sizes = s.step_sizes.clone();
                samples.divergences = s.divergences.clone();
            }
            None => {
                samples.step_sizes = vec![f64::NAN; samples.n_chains()];
                samples.divergences = vec![0; samples.n_chains()];
            }
        }
        Ok(samples)
    }
}
