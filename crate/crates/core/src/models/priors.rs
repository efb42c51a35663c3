//! Prior specifications. Location and scale values refer to the internally
//! standardized scale: SPL residuals after removing the physical term are
//! centered and scaled to unit sd, transformed frequency likewise.

use serde::{Deserialize, Serialize};

use crate::stats::{inv_gamma_logpdf, ln_normal_cdf, normal_hazard_ratio, normal_logpdf};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normal {
    pub mu: f64,
    pub sigma: f64,
}

impl Normal {
    pub fn new(mu: f64, sigma: f64) -> Self {
        Self { mu, sigma }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        normal_logpdf(x, self.mu, self.sigma)
    }

    pub fn d_ln_pdf(&self, x: f64) -> f64 {
        -(x - self.mu) / (self.sigma * self.sigma)
    }

    fn check(&self, what: &str) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite() && self.mu.is_finite()) {
            return Err(Error::Config(format!(
                "{what}: Normal prior needs finite mu and sigma > 0, got ({}, {})",
                self.mu, self.sigma
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InverseGamma {
    pub shape: f64,
    pub scale: f64,
}

impl InverseGamma {
    pub fn new(shape: f64, scale: f64) -> Self {
        Self { shape, scale }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        inv_gamma_logpdf(x, self.shape, self.scale)
    }

    /// Mean, finite for `shape > 1`.
    pub fn mean(&self) -> f64 {
        if self.shape > 1.0 {
            self.scale / (self.shape - 1.0)
        } else {
            f64::INFINITY
        }
    }

    fn check(&self, what: &str) -> Result<()> {
        if !(self.shape > 0.0 && self.scale > 0.0 && self.shape.is_finite() && self.scale.is_finite()) {
            return Err(Error::Config(format!(
                "{what}: InverseGamma prior needs shape, scale > 0, got ({}, {})",
                self.shape, self.scale
            )));
        }
        Ok(())
    }
}

/// Prior on Gaussian basis widths, each truncated to `c > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum WidthPrior {
    /// `c_k ~ Normal(mu_c, sigma_c)`, `mu_c ~ Normal(mu_cc, sigma_cc)`.
    Hierarchical { mu_cc: f64, sigma_cc: f64, sigma_c: f64 },
    /// `c_k ~ Normal(mu_k, sigma_k)`.
    Independent(Vec<Normal>),
}

/// Per-block priors. Blocks left as `None` get data-dependent defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    /// One entry per polynomial coefficient (or the intercept).
    #[serde(default)]
    pub poly: Option<Vec<Normal>>,
    #[serde(default)]
    pub amp: Option<Vec<Normal>>,
    #[serde(default)]
    pub loc: Option<Vec<Normal>>,
    #[serde(default)]
    pub width: Option<WidthPrior>,
    /// Applied to every noise variance.
    #[serde(default)]
    pub variance: Option<InverseGamma>,
}

/// Default for linear coefficients on the standardized scale.
pub const DEFAULT_COEF_PRIOR: Normal = Normal { mu: 0.0, sigma: 10.0 };

/// Default noise-variance prior on the standardized scale.
pub const DEFAULT_VARIANCE_PRIOR: InverseGamma = InverseGamma { shape: 1.0, scale: 0.01 };

/// Priors with every block filled in and validated.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedPriors {
    pub poly: Vec<Normal>,
    pub amp: Vec<Normal>,
    pub loc: Vec<Normal>,
    pub width: WidthPrior,
    pub variance: InverseGamma,
}

fn resolve_block(
    given: &Option<Vec<Normal>>,
    len: usize,
    default: impl Fn(usize) -> Normal,
    what: &str,
) -> Result<Vec<Normal>> {
    let block = match given {
        Some(v) if v.len() != len => {
            return Err(Error::Config(format!(
                "{what} prior lists {} entries, model has {len} parameters",
                v.len()
            )))
        }
        Some(v) => v.clone(),
        None => (0..len).map(default).collect(),
    };
    for p in &block {
        p.check(what)?;
    }
    Ok(block)
}

impl PriorSpec {
    /// Fill defaults for a model with `poly_len` linear coefficients and `n`
    /// Gaussian bases over a standardized frequency range `[lo, hi]`.
    pub fn resolve(&self, poly_len: usize, n: usize, lo: f64, hi: f64) -> Result<ResolvedPriors> {
        let step = (hi - lo).abs().max(1e-3) / n.max(1) as f64;
        let poly = resolve_block(&self.poly, poly_len, |_| DEFAULT_COEF_PRIOR, "poly")?;
        let amp = resolve_block(&self.amp, n, |_| DEFAULT_COEF_PRIOR, "amp")?;
        let loc = resolve_block(&self.loc, n, |k| Normal::new(lo + (k as f64 + 0.5) * step, step), "loc")?;
        let width = match &self.width {
            None => WidthPrior::Hierarchical { mu_cc: step, sigma_cc: step, sigma_c: step },
            Some(WidthPrior::Hierarchical { mu_cc, sigma_cc, sigma_c }) => {
                Normal::new(*mu_cc, *sigma_cc).check("width hyperprior")?;
                Normal::new(0.0, *sigma_c).check("width sigma_c")?;
                self.width.clone().unwrap()
            }
            Some(WidthPrior::Independent(v)) => {
                WidthPrior::Independent(resolve_block(&Some(v.clone()), n, |_| unreachable!(), "width")?)
            }
        };
        let variance = self.variance.unwrap_or(DEFAULT_VARIANCE_PRIOR);
        variance.check("variance")?;
        Ok(ResolvedPriors { poly, amp, loc, width, variance })
    }
}

/// Log density of `Normal(mu, sigma)` truncated to `(0, ∞)` at `c`, with
/// derivatives with respect to `c` and `mu`.
pub(crate) fn truncated_normal_terms(c: f64, mu: f64, sigma: f64) -> (f64, f64, f64) {
    let z = mu / sigma;
    let lp = normal_logpdf(c, mu, sigma) - ln_normal_cdf(z);
    let d_c = -(c - mu) / (sigma * sigma);
    let d_mu = (c - mu) / (sigma * sigma) - normal_hazard_ratio(z) / sigma;
    (lp, d_c, d_mu)
}
