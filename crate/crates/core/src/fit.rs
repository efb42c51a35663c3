//! Nonlinear least-squares point estimation and K-fold cross-validation.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::par;
use crate::stats;
use crate::surrogate::{self, NoiseSd, ParameterVector, SurrogateSpec};

/// Levenberg-Marquardt settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NlsOptions {
    pub max_iterations: usize,
    pub initial_damping: f64,
    /// Relative cost decrease below which an accepted step ends the fit.
    pub ftol: f64,
    /// Gradient infinity-norm below which the fit is converged.
    pub gtol: f64,
    /// Largest admissible condition number of the column-scaled Jacobian at
    /// the solution.
    pub max_condition: f64,
}

impl Default for NlsOptions {
    fn default() -> Self {
        Self { max_iterations: 500, initial_damping: 1e-3, ftol: 1e-10, gtol: 1e-8, max_condition: 1e12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ParameterVector,
    pub residual_sd: f64,
    pub r_squared: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Cost (sum of squared residuals) after each accepted step, starting with
    /// the initial cost.
    pub cost_trace: Vec<f64>,
}

/// `1 - Σ(y - ŷ)² / Σ(y - ȳ)²`.
pub fn r_squared(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.len() != yhat.len() {
        return Err(Error::Dimension("y and yhat differ in length".into()));
    }
    if y.len() < 2 {
        return Err(Error::Precondition("R² needs at least two observations".into()));
    }
    let ybar = stats::mean(y);
    let sst: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    if sst == 0.0 {
        return Err(Error::DegenerateVariance("observed values are constant".into()));
    }
    let sse: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(1.0 - sse / sst)
}

struct Problem<'a> {
    d: &'a Dataset,
    spec: &'a SurrogateSpec,
    base: &'a ParameterVector,
}

impl Problem<'_> {
    fn params(&self, theta: &[f64]) -> ParameterVector {
        self.base.with_free_mean_params(self.spec, theta)
    }

    fn residuals(&self, theta: &[f64]) -> Result<DVector<f64>> {
        let p = self.params(theta);
        let mu = surrogate::mean_vector(self.d, self.spec, &p)?;
        Ok(DVector::from_iterator(mu.len(), self.d.records().iter().zip(mu).map(|(r, m)| r.spl_db - m)))
    }

    /// Residuals and the Jacobian of the *mean* (so the residual Jacobian is its
    /// negative).
    fn linearize(&self, theta: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let p = self.params(theta);
        let n = self.d.len();
        let k = theta.len();
        let mut r = DVector::zeros(n);
        let mut j = DMatrix::zeros(n, k);
        for (i, rec) in self.d.records().iter().enumerate() {
            let (mu, g) = surrogate::mean_with_gradient(rec.speed, rec.frequency_hz, self.spec, &p)
                .map_err(|e| Error::at_record(i, e))?;
            r[i] = rec.spl_db - mu;
            for c in 0..k {
                j[(i, c)] = g[1 + c];
            }
        }
        Ok((r, j))
    }
}

fn column_norms(j: &DMatrix<f64>) -> DVector<f64> {
    let norms: Vec<f64> = j.column_iter().map(|c| c.norm()).collect();
    let max = norms.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    DVector::from_iterator(norms.len(), norms.into_iter().map(|s| s.max(1e-12 * max)))
}

fn scaled_condition(j: &DMatrix<f64>) -> f64 {
    let s = column_norms(j);
    let mut js = j.clone();
    for (c, mut col) in js.column_iter_mut().enumerate() {
        col /= s[c];
    }
    let sv = js.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn widths_positive(spec: &SurrogateSpec, theta: &[f64]) -> bool {
    let p = spec.poly_len();
    let n = spec.gauss_count();
    theta[p + 2 * n..p + 3 * n].iter().all(|w| *w > 0.0)
}

/// Least-squares fit of the free mean parameters, with `b_scale` and the
/// noise block held at their `init` values.
pub fn nls_fit(d: &Dataset, spec: &SurrogateSpec, init: &ParameterVector) -> Result<FitResult> {
    nls_fit_with(d, spec, init, &NlsOptions::default())
}

pub fn nls_fit_with(
    d: &Dataset,
    spec: &SurrogateSpec,
    init: &ParameterVector,
    opts: &NlsOptions,
) -> Result<FitResult> {
    spec.validate()?;
    init.validate(spec)?;
    let k = spec.free_param_count();
    if d.len() <= k {
        return Err(Error::Precondition(format!(
            "need more observations ({}) than free parameters ({k})",
            d.len()
        )));
    }
    let prob = Problem { d, spec, base: init };
    let mut theta = init.free_mean_params();
    let (mut r, mut j) = prob.linearize(&theta)?;
    let mut cost = r.norm_squared();
    let mut cost_trace = vec![cost];
    let mut lambda = opts.initial_damping;
    let mut iterations = 0;
    let mut converged = (j.transpose() * &r).amax() < opts.gtol;

    while !converged && iterations < opts.max_iterations {
        iterations += 1;
        // Marquardt step in column-scaled coordinates: the damping term
        // λ·diag(JᵀJ) becomes λ·I, solved as an augmented least-squares system.
        let s = column_norms(&j);
        let mut a = DMatrix::zeros(d.len() + k, k);
        for c in 0..k {
            for i in 0..d.len() {
                a[(i, c)] = j[(i, c)] / s[c];
            }
            a[(d.len() + c, c)] = lambda.sqrt();
        }
        let mut b = DVector::zeros(d.len() + k);
        b.rows_mut(0, d.len()).copy_from(&r);
        let step = a
            .svd(true, true)
            .solve(&b, 1e-15)
            .map_err(|_| Error::Conditioning { condition: f64::INFINITY })?;
        let trial: Vec<f64> = theta.iter().enumerate().map(|(c, t)| t + step[c] / s[c]).collect();

        let trial_cost = if widths_positive(spec, &trial) {
            prob.residuals(&trial).ok().map(|r| r.norm_squared())
        } else {
            None
        };
        match trial_cost {
            Some(c) if c.is_finite() && c < cost => {
                let rel = (cost - c) / cost;
                theta = trial;
                (r, j) = prob.linearize(&theta)?;
                cost = r.norm_squared();
                cost_trace.push(cost);
                lambda = (lambda / 10.0).max(1e-15);
                if rel < opts.ftol || (j.transpose() * &r).amax() < opts.gtol {
                    converged = true;
                }
            }
            _ => {
                lambda *= 10.0;
                if lambda > 1e16 {
                    converged = (j.transpose() * &r).amax() < opts.gtol;
                    break;
                }
            }
        }
    }

    let condition = scaled_condition(&j);
    if !(condition <= opts.max_condition) {
        return Err(Error::Conditioning { condition });
    }

    let y = d.spl();
    let yhat: Vec<f64> = y.iter().zip(r.iter()).map(|(a, res)| a - res).collect();
    let residual_sd = (cost / (d.len() - k) as f64).sqrt();
    let mut params = prob.params(&theta);
    if residual_sd > 0.0 {
        params.noise_sd = NoiseSd::Scalar(residual_sd);
    }
    Ok(FitResult { params, residual_sd, r_squared: r_squared(&y, &yhat)?, iterations, converged, cost_trace })
}

/// Least-squares update of the free-mean columns in `cols`, holding the rest
/// of `theta` fixed. Exact for the linear blocks (`poly`, `amp`).
fn solve_linear(prob: &Problem<'_>, theta: &mut [f64], cols: &[usize]) -> Result<()> {
    let (r, j) = prob.linearize(theta)?;
    let jl = DMatrix::from_fn(j.nrows(), cols.len(), |i, c| j[(i, cols[c])]);
    let delta =
        jl.svd(true, true).solve(&r, 1e-12).map_err(|_| Error::Conditioning { condition: f64::INFINITY })?;
    for (c, &col) in cols.iter().enumerate() {
        theta[col] += delta[c];
    }
    Ok(())
}

/// Least-squares `poly` and `amp` blocks with `loc` and `width` held at their
/// values in `base`.
pub fn linear_init(d: &Dataset, spec: &SurrogateSpec, base: &ParameterVector) -> Result<ParameterVector> {
    spec.validate()?;
    base.validate(spec)?;
    let prob = Problem { d, spec, base };
    let mut theta = base.free_mean_params();
    let cols: Vec<usize> = (0..spec.poly_len() + spec.gauss_count()).collect();
    solve_linear(&prob, &mut theta, &cols)?;
    Ok(base.with_free_mean_params(spec, &theta))
}

/// Greedy data-driven start: fit the polynomial block, then place each
/// Gaussian at the transformed frequency with the largest mean absolute
/// residual and refit the linear blocks. Widths start at two grid spacings.
pub fn default_init(d: &Dataset, spec: &SurrogateSpec) -> Result<ParameterVector> {
    spec.validate()?;
    let mut base = ParameterVector::default_init(spec, d);
    let n = spec.gauss_count();
    if n == 0 {
        return linear_init(d, spec, &base);
    }
    let xs: Vec<f64> = d.records().iter().map(|r| spec.freq_transform.apply(r.frequency_hz)).collect();
    let mut grid = xs.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if grid.len() >= 2 {
        let mut gaps: Vec<f64> = grid.windows(2).map(|w| w[1] - w[0]).collect();
        gaps.sort_by(f64::total_cmp);
        let w0 = 2.0 * gaps[gaps.len() / 2];
        base.width.iter_mut().for_each(|w| *w = w0);
    }

    let p = spec.poly_len();
    let prob = Problem { d, spec, base: &base };
    let mut theta = base.free_mean_params();
    let mut cols: Vec<usize> = (0..p).collect();
    let mut used: Vec<usize> = Vec::new();
    for k in 0..n {
        solve_linear(&prob, &mut theta, &cols)?;
        let r = prob.residuals(&theta)?;
        let mut sum = vec![0.0; grid.len()];
        let mut cnt = vec![0usize; grid.len()];
        for (x, ri) in xs.iter().zip(r.iter()) {
            let g = grid.partition_point(|v| *v < *x - 1e-12);
            sum[g] += ri;
            cnt[g] += 1;
        }
        let best = (0..grid.len()).filter(|g| !used.contains(g) && cnt[*g] > 0).max_by(|a, b| {
            let fa = (sum[*a] / cnt[*a] as f64).abs();
            let fb = (sum[*b] / cnt[*b] as f64).abs();
            fa.total_cmp(&fb)
        });
        if let Some(g) = best {
            used.push(g);
            theta[p + n + k] = grid[g];
        }
        cols.push(p + k);
    }
    solve_linear(&prob, &mut theta, &cols)?;
    let mut out = base.with_free_mean_params(spec, &theta);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| out.loc[*a].total_cmp(&out.loc[*b]));
    out.amp = order.iter().map(|&i| out.amp[i]).collect();
    out.loc = order.iter().map(|&i| out.loc[i]).collect();
    out.width = order.iter().map(|&i| out.width[i]).collect();
    Ok(out)
}

/// NLS from [`default_init`] and from the evenly spread start; the converged
/// fit with the lower cost wins.
pub fn auto_fit(d: &Dataset, spec: &SurrogateSpec) -> Result<FitResult> {
    auto_fit_with(d, spec, &NlsOptions::default())
}

pub fn auto_fit_with(d: &Dataset, spec: &SurrogateSpec, opts: &NlsOptions) -> Result<FitResult> {
    let starts = [default_init(d, spec), linear_init(d, spec, &ParameterVector::default_init(spec, d))];
    let mut best: Option<FitResult> = None;
    let mut first_err = None;
    for start in starts {
        match start.and_then(|s| nls_fit_with(d, spec, &s, opts)) {
            Ok(f) => {
                let better = match &best {
                    None => true,
                    Some(b) => (f.converged, -f.residual_sd) > (b.converged, -b.residual_sd),
                };
                if better {
                    best = Some(f);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match (best, first_err) {
        (Some(b), _) => Ok(b),
        (None, Some(e)) => Err(e),
        (None, None) => unreachable!(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub runs: usize,
    pub rng_seed: u64,
    /// `[runs][k]` held-out R² values.
    pub fold_r2: Vec<Vec<f64>>,
    /// Per-run R²_CV, the mean of that run's fold values.
    pub run_r2_cv: Vec<f64>,
    /// Mean of `run_r2_cv`.
    pub r2_cv: f64,
    /// Sample variance of `run_r2_cv` (zero for a single run).
    pub r2_var: f64,
}

/// Random partition of `0..n` into `k` folds whose sizes differ by at most one.
pub fn kfold_partition(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        folds.push(idx[start..start + size].to_vec());
        start += size;
    }
    folds
}

/// RNG for run `run` derived from a master seed: one ChaCha stream per run.
pub(crate) fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Repeated random K-fold cross-validation of the NLS fit.
pub fn kfold_cv(
    d: &Dataset,
    spec: &SurrogateSpec,
    init: &ParameterVector,
    k: usize,
    runs: usize,
    seed: u64,
) -> Result<CvReport> {
    let n = d.len();
    if k < 2 || k > n {
        return Err(Error::Precondition(format!("k must lie in [2, {n}], got {k}")));
    }
    if runs == 0 {
        return Err(Error::Precondition("runs must be positive".into()));
    }
    if n / k < 2 {
        return Err(Error::Partition(format!(
            "k = {k} on {n} records leaves folds with fewer than 2 records"
        )));
    }

    let fold_r2 = par::try_map_indexed(runs, |run| -> Result<Vec<f64>> {
        let mut rng = substream(seed, run as u64);
        let folds = kfold_partition(n, k, &mut rng);
        folds
            .iter()
            .map(|test| {
                let mut train: Vec<usize> =
                    folds.iter().filter(|f| !std::ptr::eq(*f, test)).flatten().copied().collect();
                train.sort_unstable();
                let fit = nls_fit(&d.subset(&train), spec, init)?;
                let held = d.subset(test);
                let yhat = surrogate::mean_vector(&held, spec, &fit.params)?;
                r_squared(&held.spl(), &yhat)
            })
            .collect()
    })?;

    let run_r2_cv: Vec<f64> = fold_r2.iter().map(|f| stats::mean(f)).collect();
    Ok(CvReport {
        k,
        runs,
        rng_seed: seed,
        r2_cv: stats::mean(&run_r2_cv),
        r2_var: stats::sample_variance(&run_r2_cv),
        fold_r2,
        run_r2_cv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synthesize, NoiseLevel, SynthConfig, AERO_SPEEDS, THIRD_OCTAVE_100_8K};
    use std::collections::BTreeMap;

    fn poly_truth() -> (SurrogateSpec, ParameterVector) {
        let spec = SurrogateSpec::aero_polynomial(4);
        let p = ParameterVector {
            poly: vec![-160.0, 90.0, -25.0, 2.0, 0.05],
            ..ParameterVector::spread(&spec, 0.0, 1.0)
        };
        (spec, p)
    }

    fn gauss_truth() -> (SurrogateSpec, ParameterVector) {
        let spec = SurrogateSpec::aero_gaussian(2);
        let p = ParameterVector {
            poly: vec![-75.0],
            amp: vec![8.0, 5.0],
            loc: vec![2.5, 3.4],
            width: vec![0.25, 0.2],
            ..ParameterVector::spread(&spec, 0.0, 1.0)
        };
        (spec, p)
    }

    fn data(spec: &SurrogateSpec, p: &ParameterVector, sd: f64, reps: usize, seed: u64) -> Dataset {
        synthesize(&SynthConfig {
            generating_spec: spec.clone(),
            true_params: p.clone(),
            speeds: AERO_SPEEDS.to_vec(),
            frequency_bands: THIRD_OCTAVE_100_8K.to_vec(),
            noise_sd_db: NoiseLevel::Scalar(sd),
            replicate_count: reps,
            rng_seed: seed,
            categories: BTreeMap::new(),
        })
        .unwrap()
    }

    #[test]
    fn r_squared_examples() {
        let y = [1.0, 2.0, 3.0];
        assert_eq!(r_squared(&y, &y).unwrap(), 1.0);
        assert!(r_squared(&y, &[2.0, 2.0, 2.0]).unwrap().abs() < 1e-15);
        assert!((r_squared(&y, &[1.0, 2.0, 4.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(r_squared(&[2.0, 2.0], &[1.0, 3.0]), Err(Error::DegenerateVariance(_))));
    }

    #[test]
    fn starting_at_the_optimum_converges_immediately() {
        let (spec, truth) = gauss_truth();
        let d = data(&spec, &truth, 0.0, 1, 0);
        let fit = nls_fit(&d, &spec, &truth).unwrap();
        assert!(fit.converged);
        assert!(fit.iterations <= 2);
        for (a, b) in fit.params.free_mean_params().iter().zip(truth.free_mean_params()) {
            assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0));
        }
    }

    #[test]
    fn greedy_start_finds_both_peaks() {
        let (spec, truth) = gauss_truth();
        let d = data(&spec, &truth, 0.0, 1, 0);
        let init = default_init(&d, &spec).unwrap();
        for (l, t) in init.loc.iter().zip(&truth.loc) {
            assert!((l - t).abs() <= 0.1, "{:?}", init.loc);
        }
        let fit = auto_fit(&d, &spec).unwrap();
        assert!(fit.converged);
        assert!(fit.r_squared > 1.0 - 1e-12, "{}", fit.r_squared);
    }

    #[test]
    fn linear_init_is_exact_for_linear_blocks() {
        let (spec, truth) = gauss_truth();
        let d = data(&spec, &truth, 0.0, 1, 0);
        let base = ParameterVector { poly: vec![0.0], amp: vec![0.0, 0.0], ..truth.clone() };
        let p = linear_init(&d, &spec, &base).unwrap();
        assert!((p.poly[0] - truth.poly[0]).abs() < 1e-9);
        assert!((p.amp[0] - 8.0).abs() < 1e-9 && (p.amp[1] - 5.0).abs() < 1e-9);
    }

    fn ols_oracle(d: &Dataset, spec: &SurrogateSpec) -> Vec<f64> {
        // Closed-form least squares on the design [1, x, x², ...] after moving
        // the fixed physical term to the response.
        let rows = d.len();
        let cols = spec.m + 1;
        let x = DMatrix::from_fn(rows, cols, |i, c| d.records()[i].frequency_hz.log10().powi(c as i32));
        let y = DVector::from_iterator(
            rows,
            d.records().iter().map(|r| r.spl_db - surrogate::physical_aero_term(r.speed, spec, 1.0).unwrap()),
        );
        let qr = x.clone().qr();
        let qty = qr.q().transpose() * y;
        qr.r().solve_upper_triangular(&qty).unwrap().iter().copied().collect()
    }

    #[test]
    fn linear_case_matches_ordinary_least_squares() {
        let (spec, truth) = poly_truth();
        let d = data(&spec, &truth, 1.0, 3, 11);
        let init = ParameterVector::default_init(&spec, &d);
        let fit = nls_fit(&d, &spec, &init).unwrap();
        assert!(fit.converged, "{fit:?}");
        let ols = ols_oracle(&d, &spec);
        for (a, b) in fit.params.poly.iter().zip(&ols) {
            assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn cost_never_increases() {
        let (spec, truth) = gauss_truth();
        let d = data(&spec, &truth, 0.5, 2, 5);
        let fit = nls_fit(&d, &spec, &ParameterVector::default_init(&spec, &d)).unwrap();
        for w in fit.cost_trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert!(fit.r_squared > 0.9, "{}", fit.r_squared);
    }

    #[test]
    fn zero_noise_recovers_truth() {
        let (spec, truth) = gauss_truth();
        let d = data(&spec, &truth, 0.0, 1, 0);
        let fit = nls_fit(&d, &spec, &ParameterVector::default_init(&spec, &d)).unwrap();
        for (a, b) in fit.params.free_mean_params().iter().zip(truth.free_mean_params()) {
            assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn too_few_observations_is_rejected() {
        let (spec, truth) = poly_truth();
        let d = data(&spec, &truth, 0.0, 1, 0).subset(&[0, 1, 2, 3, 4]);
        assert!(matches!(nls_fit(&d, &spec, &truth), Err(Error::Precondition(_))));
    }

    #[test]
    fn collinear_design_is_a_conditioning_error() {
        let (spec, truth) = poly_truth();
        // Every record at one frequency: the polynomial columns are identical up to scale.
        let d = data(&spec, &truth, 1.0, 10, 2);
        let idx: Vec<usize> = d
            .records()
            .iter()
            .enumerate()
            .filter(|(_, r)| r.frequency_hz == 1000.0)
            .map(|(i, _)| i)
            .collect();
        let d = d.subset(&idx);
        assert!(matches!(nls_fit(&d, &spec, &truth), Err(Error::Conditioning { .. })));
    }

    #[test]
    fn partition_is_exact_and_balanced() {
        let mut rng = substream(4, 0);
        for &(n, k) in &[(40, 5), (41, 5), (23, 10), (7, 3)] {
            let folds = kfold_partition(n, k, &mut rng);
            assert_eq!(folds.len(), k);
            let sizes: Vec<usize> = folds.iter().map(|f| f.len()).collect();
            assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            let mut all: Vec<usize> = folds.concat();
            all.sort_unstable();
            assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn cv_boundaries() {
        let (spec, truth) = poly_truth();
        let d = data(&spec, &truth, 1.0, 1, 0);
        let n = d.len();
        assert!(matches!(kfold_cv(&d, &spec, &truth, n, 1, 0), Err(Error::Partition(_))));
        assert!(matches!(kfold_cv(&d, &spec, &truth, 1, 1, 0), Err(Error::Precondition(_))));
        assert!(matches!(kfold_cv(&d, &spec, &truth, n + 1, 1, 0), Err(Error::Precondition(_))));
    }

    #[test]
    fn cv_zero_noise_and_determinism() {
        let (spec, truth) = poly_truth();
        let d = data(&spec, &truth, 0.0, 2, 0);
        let init = ParameterVector::default_init(&spec, &d);
        let rep = kfold_cv(&d, &spec, &init, 5, 3, 17).unwrap();
        assert!(rep.r2_cv > 0.999);
        for (run, folds) in rep.fold_r2.iter().enumerate() {
            assert_eq!(folds.len(), 5);
            assert_eq!(rep.run_r2_cv[run], stats::mean(folds));
        }
        let again = kfold_cv(&d, &spec, &init, 5, 3, 17).unwrap();
        assert_eq!(rep, again);
    }
}
