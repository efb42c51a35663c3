//! Gaussian observations with known mean and unknown variance: a target
//! with a closed-form posterior, used to validate the sampler and LOO.

use crate::sampler::TargetDensity;
use crate::stats::LN_2PI;

use super::priors::InverseGamma;
use super::PointwiseLogLik;

/// `y_i ~ Normal(mean, σ²)`, `σ² ~ InvGamma(shape, scale)`, sampled as `ln σ²`.
#[derive(Debug, Clone)]
pub struct KnownMeanVarianceModel {
    pub y: Vec<f64>,
    pub known_mean: f64,
    pub prior: InverseGamma,
}

impl KnownMeanVarianceModel {
    pub fn new(y: Vec<f64>, known_mean: f64, prior: InverseGamma) -> Self {
        Self { y, known_mean, prior }
    }

    fn ss(&self) -> f64 {
        self.y.iter().map(|v| (v - self.known_mean).powi(2)).sum()
    }
}

impl TargetDensity for KnownMeanVarianceModel {
    fn dim(&self) -> usize {
        1
    }

    fn logp_grad(&self, q: &[f64]) -> (f64, Vec<f64>) {
        let s = q[0];
        let n = self.y.len() as f64;
        let ss = self.ss();
        let e = (-s).exp();
        let lp = -0.5 * n * (LN_2PI + s) - 0.5 * ss * e + self.prior.ln_pdf(s.exp()) + s;
        let g = -0.5 * n + 0.5 * ss * e - self.prior.shape + self.prior.scale * e;
        (lp, vec![g])
    }

    fn param_names(&self) -> Vec<String> {
        vec!["log_var".into()]
    }
}

impl PointwiseLogLik for KnownMeanVarianceModel {
    fn n_obs(&self) -> usize {
        self.y.len()
    }

    fn pointwise_loglik(&self, q: &[f64], out: &mut [f64]) {
        let s = q[0];
        let e = (-s).exp();
        for (y, o) in self.y.iter().zip(out.iter_mut()) {
            *o = -0.5 * (LN_2PI + s + (y - self.known_mean).powi(2) * e);
        }
    }
}

/// Exact posterior `InvGamma(α + N/2, β + ½ Σ (y_i - mean)²)`.
pub fn conjugate_oracle_posterior(y: &[f64], known_mean: f64, prior: InverseGamma) -> InverseGamma {
    let ss: f64 = y.iter().map(|v| (v - known_mean).powi(2)).sum();
    InverseGamma::new(prior.shape + 0.5 * y.len() as f64, prior.scale + 0.5 * ss)
}

/// Log posterior predictive density of `y_new` under the exact posterior:
/// Student-t with `2α'` degrees of freedom and scale `sqrt(β'/α')`.
pub fn conjugate_predictive_logpdf(y_new: f64, known_mean: f64, posterior: InverseGamma) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let nu = 2.0 * posterior.shape;
    let scale2 = posterior.scale / posterior.shape;
    let t2 = (y_new - known_mean).powi(2) / scale2;
    ln_gamma(0.5 * (nu + 1.0))
        - ln_gamma(0.5 * nu)
        - 0.5 * (nu * std::f64::consts::PI * scale2).ln()
        - 0.5 * (nu + 1.0) * (1.0 + t2 / nu).ln()
}
