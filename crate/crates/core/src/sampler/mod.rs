//! Gradient-based MCMC: leapfrog dynamics, NUTS transitions, step-size
//! adaptation and multi-chain execution over any [`TargetDensity`].

mod adapt;
mod hamiltonian;
mod nuts;
mod samples;

pub use adapt::{adapt_step_size, find_reasonable_step_size, DualAveraging};
pub use hamiltonian::{leapfrog, leapfrog_step, Point};
pub use nuts::{nuts_draw, TransitionStats, MAX_DELTA_H};
pub use samples::{PosteriorSamples, SamplesSummary};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::fit::substream;
use crate::{par, Error, Result};

/// Un-normalized log density with gradient on an unconstrained space.
pub trait TargetDensity: Sync {
    fn dim(&self) -> usize;

    /// Log density (up to a constant) and its gradient at `q`. Outside the
    /// support the log density is `-inf` or NaN.
    fn logp_grad(&self, q: &[f64]) -> (f64, Vec<f64>);

    /// Center of the initialization region.
    fn initial_point(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }

    fn param_names(&self) -> Vec<String> {
        (0..self.dim()).map(|i| format!("theta[{i}]")).collect()
    }
}

/// Adapter turning a closure into a [`TargetDensity`].
pub struct FnTarget<F> {
    dim: usize,
    f: F,
}

impl<F> FnTarget<F>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>) + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> TargetDensity for FnTarget<F>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>) + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn logp_grad(&self, q: &[f64]) -> (f64, Vec<f64>) {
        (self.f)(q)
    }
}

fn default_chains() -> usize {
    4
}
fn default_draws() -> usize {
    10_000
}
fn default_warmup() -> usize {
    2_000
}
fn default_target_accept() -> f64 {
    0.8
}
fn default_max_tree_depth() -> u32 {
    10
}
fn default_init_jitter() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    #[serde(default = "default_chains")]
    pub chains: usize,
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default = "default_warmup")]
    pub warmup: usize,
    #[serde(default = "default_target_accept")]
    pub target_accept: f64,
    #[serde(default = "default_max_tree_depth")]
    pub max_tree_depth: u32,
    #[serde(default)]
    pub seed: u64,
    /// Half-width of the uniform jitter added to the initial point.
    #[serde(default = "default_init_jitter")]
    pub init_jitter: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            chains: default_chains(),
            draws: default_draws(),
            warmup: default_warmup(),
            target_accept: default_target_accept(),
            max_tree_depth: default_max_tree_depth(),
            seed: 0,
            init_jitter: default_init_jitter(),
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 || self.draws == 0 {
            return Err(Error::Config("chains and draws must be positive".into()));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::Config(format!(
                "target_accept must lie in (0, 1), got {}",
                self.target_accept
            )));
        }
        if !(self.init_jitter >= 0.0 && self.init_jitter.is_finite()) {
            return Err(Error::Config("init_jitter must be non-negative".into()));
        }
        Ok(())
    }
}

const INIT_ATTEMPTS: usize = 100;

fn initialize<T: TargetDensity + ?Sized, R: Rng>(
    target: &T,
    jitter: f64,
    chain: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let center = target.initial_point();
    if center.len() != target.dim() {
        return Err(Error::Initialization {
            chain,
            message: format!(
                "initial point has length {}, target dimension is {}",
                center.len(),
                target.dim()
            ),
        });
    }
    for _ in 0..INIT_ATTEMPTS {
        let q: Vec<f64> = center.iter().map(|c| c + jitter * (2.0 * rng.random::<f64>() - 1.0)).collect();
        let (logp, grad) = target.logp_grad(&q);
        if logp.is_finite() && grad.len() == q.len() && grad.iter().all(|g| g.is_finite()) {
            return Ok(q);
        }
    }
    Err(Error::Initialization {
        chain,
        message: format!("no finite log density after {INIT_ATTEMPTS} jittered attempts"),
    })
}

struct ChainOutput {
    draws: Vec<Vec<f64>>,
    stats: Vec<TransitionStats>,
    step_size: f64,
}

fn run_chain<T: TargetDensity + ?Sized>(
    target: &T,
    config: &SamplerConfig,
    chain: usize,
) -> Result<ChainOutput> {
    let mut rng = substream(config.seed, chain as u64);
    let mut q = initialize(target, config.init_jitter, chain, &mut rng)?;
    let with_chain = |e: Error| match e {
        Error::Initialization { message, .. } => Error::Initialization { chain, message },
        other => other,
    };

    let mut eps = find_reasonable_step_size(target, &q, &mut rng);
    if config.warmup > 0 {
        let mut da = DualAveraging::new(eps, config.target_accept);
        for _ in 0..config.warmup {
            let (next, stats) =
                nuts_draw(&q, da.current(), target, config.max_tree_depth, &mut rng).map_err(with_chain)?;
            q = next;
            da.update(stats.accept_stat);
        }
        eps = da.final_step_size();
    }

    let mut draws = Vec::with_capacity(config.draws);
    let mut stats = Vec::with_capacity(config.draws);
    for _ in 0..config.draws {
        let (next, s) = nuts_draw(&q, eps, target, config.max_tree_depth, &mut rng).map_err(with_chain)?;
        q = next;
        draws.push(q.clone());
        stats.push(s);
    }
    Ok(ChainOutput { draws, stats, step_size: eps })
}

/// Run `config.chains` independent chains. Chain `c` uses random stream `c`
/// of `config.seed`, so results do not depend on chain count or scheduling.
pub fn run_chains<T: TargetDensity + ?Sized>(target: &T, config: &SamplerConfig) -> Result<PosteriorSamples> {
    config.validate()?;
    let outputs = par::try_map_indexed(config.chains, |c| run_chain(target, config, c))?;
    let mut samples = PosteriorSamples {
        param_names: target.param_names(),
        draws: Vec::with_capacity(outputs.len()),
        accept_stats: Vec::with_capacity(outputs.len()),
        tree_depths: Vec::with_capacity(outputs.len()),
        step_sizes: Vec::with_capacity(outputs.len()),
        divergences: Vec::with_capacity(outputs.len()),
    };
    for out in outputs {
        samples.accept_stats.push(out.stats.iter().map(|s| s.accept_stat).collect());
        samples.tree_depths.push(out.stats.iter().map(|s| s.tree_depth).collect());
        samples.divergences.push(out.stats.iter().filter(|s| s.divergent).count());
        samples.step_sizes.push(out.step_size);
        samples.draws.push(out.draws);
    }
    Ok(samples)
}

#[cfg(test)]
mod tests;
