//! Bayesian surrogate models, priors, constraint transforms, a conjugate
//! reference model and posterior predictive simulation.

mod bayes;
mod conjugate;
mod predictive;
mod priors;
mod transform;

pub use bayes::{
    build_bm1, build_bm2, destandardize_poly, standardize_poly, BayesModel, ConstrainedDraw, Standardization,
};
pub use conjugate::{conjugate_oracle_posterior, conjugate_predictive_logpdf, KnownMeanVarianceModel};
pub use predictive::{posterior_predictive, GridPoint, PosteriorPredictive};
pub use priors::{
    InverseGamma, Normal, PriorSpec, ResolvedPriors, WidthPrior, DEFAULT_COEF_PRIOR, DEFAULT_VARIANCE_PRIOR,
};
pub use transform::{log_transform, log_untransform, ordered_transform, ordered_untransform};

/// Per-observation log likelihood at an unconstrained parameter point.
pub trait PointwiseLogLik: Sync {
    fn n_obs(&self) -> usize;

    /// Write `ln p(y_i | θ)` for every observation into `out`.
    fn pointwise_loglik(&self, q: &[f64], out: &mut [f64]);
}
