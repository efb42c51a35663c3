//! Bayesian surrogate models as sampling targets.
//!
//! Sampling happens on a standardized, unconstrained space. With
//! `x = T(f)` and `y` the SPL minus the physical speed term,
//! `z = (x - x_center) / x_scale` and `y' = (y - y_center) / y_scale`.
//! The unconstrained vector is laid out as
//!
//! `[poly', amp', loc (ordered coordinates), ln width', ln σ'² per band, μ_c']`
//!
//! where primes denote standardized quantities and `μ_c'` is present only
//! under a hierarchical width prior with at least one basis function.

use crate::dataset::Dataset;
use crate::sampler::TargetDensity;
use crate::stats::{mean, normal_logpdf, sample_sd, LN_2PI};
use crate::surrogate::{
    gauss_basis_grad, physical_aero_term, poly_basis_eval, Family, NoiseSd, ParameterVector, SurrogateSpec,
};
use crate::{Error, Result};

use super::priors::{truncated_normal_terms, PriorSpec, ResolvedPriors, WidthPrior};
use super::transform::{log_transform, ordered_transform, ordered_untransform};
use super::PointwiseLogLik;

/// Affine maps between original and standardized scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Standardization {
    pub x_center: f64,
    pub x_scale: f64,
    pub y_center: f64,
    pub y_scale: f64,
}

fn center_scale(xs: &[f64]) -> (f64, f64) {
    let c = mean(xs);
    let s = if xs.len() > 1 { sample_sd(xs) } else { 0.0 };
    (c, if s > 0.0 && s.is_finite() { s } else { 1.0 })
}

/// Constrained parameters in original units, one posterior draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedDraw {
    pub params: ParameterVector,
    /// Hierarchical width location in transformed-frequency units.
    pub mu_c: Option<f64>,
}

#[derive(Debug, Clone)]
struct Obs {
    z: f64,
    y: f64,
    band: usize,
}

#[derive(Debug, Clone)]
pub struct BayesModel {
    spec: SurrogateSpec,
    priors: ResolvedPriors,
    heteroscedastic: bool,
    ordered_locations: bool,
    nearest_band_fallback: bool,
    data: Dataset,
    /// Distinct frequencies in ascending order; the position is the band id.
    bands: Vec<f64>,
    obs: Vec<Obs>,
    standardization: Standardization,
    center: Vec<f64>,
}

/// Homoscedastic polynomial model.
pub fn build_bm1(data: &Dataset, spec: &SurrogateSpec, priors: &PriorSpec) -> Result<BayesModel> {
    if spec.family != Family::AeroPolynomial {
        return Err(Error::Spec("the homoscedastic polynomial model needs family aero_polynomial".into()));
    }
    BayesModel::new(data, spec, priors, false)
}

/// Heteroscedastic Gaussian-basis model with per-band noise variances.
pub fn build_bm2(data: &Dataset, spec: &SurrogateSpec, priors: &PriorSpec) -> Result<BayesModel> {
    if spec.family != Family::AeroGaussian {
        return Err(Error::Spec(
            "the heteroscedastic Gaussian-basis model needs family aero_gaussian".into(),
        ));
    }
    BayesModel::new(data, spec, priors, true)
}

struct Unpacked {
    poly: Vec<f64>,
    amp: Vec<f64>,
    loc: Vec<f64>,
    width: Vec<f64>,
    log_var: Vec<f64>,
    mu_c: Option<f64>,
}

impl BayesModel {
    pub fn new(
        data: &Dataset,
        spec: &SurrogateSpec,
        priors: &PriorSpec,
        heteroscedastic: bool,
    ) -> Result<Self> {
        spec.validate()?;
        if spec.family == Family::Tire {
            return Err(Error::Spec("Bayesian models support the aero families only".into()));
        }
        if data.is_empty() {
            return Err(Error::InvalidDataset("Bayesian model needs at least one record".into()));
        }
        let xs: Vec<f64> = data.records().iter().map(|r| spec.freq_transform.apply(r.frequency_hz)).collect();
        let ys = data
            .records()
            .iter()
            .enumerate()
            .map(|(i, r)| {
                physical_aero_term(r.speed, spec, 1.0)
                    .map(|p| r.spl_db - p)
                    .map_err(|e| Error::at_record(i, e))
            })
            .collect::<Result<Vec<f64>>>()?;
        let (x_center, x_scale) = center_scale(&xs);
        let (y_center, y_scale) = center_scale(&ys);
        let standardization = Standardization { x_center, x_scale, y_center, y_scale };

        let bands = data.bands();
        let obs = data
            .records()
            .iter()
            .zip(xs.iter().zip(&ys))
            .map(|(r, (x, y))| {
                let band = if heteroscedastic {
                    bands.iter().position(|&b| b == r.frequency_hz).ok_or_else(|| {
                        Error::Config(format!("band {} missing from band map", r.frequency_hz))
                    })?
                } else {
                    0
                };
                Ok(Obs { z: (x - x_center) / x_scale, y: (y - y_center) / y_scale, band })
            })
            .collect::<Result<Vec<_>>>()?;

        let (lo, hi) =
            obs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), o| (lo.min(o.z), hi.max(o.z)));
        let priors = priors.resolve(spec.poly_len(), spec.gauss_count(), lo, hi)?;

        let mut model = Self {
            spec: spec.clone(),
            priors,
            heteroscedastic,
            ordered_locations: true,
            nearest_band_fallback: false,
            data: data.clone(),
            bands,
            obs,
            standardization,
            center: Vec::new(),
        };
        model.center = model.default_center();
        Ok(model)
    }

    /// Toggle the ordering constraint on Gaussian locations.
    pub fn with_ordered_locations(mut self, ordered: bool) -> Self {
        self.ordered_locations = ordered;
        self.center = self.default_center();
        self
    }

    /// In heteroscedastic mode, map unknown query frequencies to the nearest
    /// band instead of failing.
    pub fn with_nearest_band_fallback(mut self, on: bool) -> Self {
        self.nearest_band_fallback = on;
        self
    }

    /// Center the chain initialization on `params` (original units), e.g. a
    /// least-squares fit.
    pub fn with_initial_params(mut self, params: &ParameterVector) -> Result<Self> {
        self.center = self.unconstrain(params, None)?;
        Ok(self)
    }

    pub fn spec(&self) -> &SurrogateSpec {
        &self.spec
    }

    pub fn priors(&self) -> &ResolvedPriors {
        &self.priors
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn is_heteroscedastic(&self) -> bool {
        self.heteroscedastic
    }

    pub fn standardization(&self) -> Standardization {
        self.standardization
    }

    /// Distinct frequencies of the data (band ids are positions).
    pub fn bands(&self) -> &[f64] {
        &self.bands
    }

    fn n_var(&self) -> usize {
        if self.heteroscedastic {
            self.bands.len()
        } else {
            1
        }
    }

    fn has_mu_c(&self) -> bool {
        self.spec.gauss_count() > 0 && matches!(self.priors.width, WidthPrior::Hierarchical { .. })
    }

    fn offsets(&self) -> (usize, usize, usize, usize, usize, usize) {
        let p = self.spec.poly_len();
        let n = self.spec.gauss_count();
        let amp = p;
        let loc = amp + n;
        let width = loc + n;
        let var = width + n;
        let mu_c = var + self.n_var();
        (amp, loc, width, var, mu_c, mu_c + usize::from(self.has_mu_c()))
    }

    fn default_center(&self) -> Vec<f64> {
        let n = self.spec.gauss_count();
        let mut q = vec![0.0; self.dimension()];
        let (_, loc, width, _, mu_c, _) = self.offsets();
        let loc_means: Vec<f64> = self.priors.loc.iter().map(|p| p.mu).collect();
        if n > 0 {
            let u = if self.ordered_locations {
                ordered_transform(&loc_means).unwrap_or_else(|_| loc_means.clone())
            } else {
                loc_means.clone()
            };
            q[loc..loc + n].copy_from_slice(&u);
            let c0 = match &self.priors.width {
                WidthPrior::Hierarchical { mu_cc, .. } => mu_cc.max(1e-3),
                WidthPrior::Independent(v) => v.iter().map(|p| p.mu).sum::<f64>() / n as f64,
            }
            .max(1e-3);
            for k in 0..n {
                q[width + k] = c0.ln();
            }
            if self.has_mu_c() {
                q[mu_c] = c0;
            }
        }
        q
    }

    pub fn dimension(&self) -> usize {
        self.offsets().5
    }

    /// Names of the unconstrained coordinates.
    pub fn unconstrained_names(&self) -> Vec<String> {
        let n = self.spec.gauss_count();
        let mut names: Vec<String> = match self.spec.family {
            Family::AeroGaussian => vec!["std_alpha".into()],
            _ => (0..self.spec.poly_len()).map(|k| format!("std_a{k}")).collect(),
        };
        names.extend((0..n).map(|k| format!("std_amp[{k}]")));
        let loc_name = if self.ordered_locations { "ord_loc" } else { "std_loc" };
        names.extend((0..n).map(|k| format!("{loc_name}[{k}]")));
        names.extend((0..n).map(|k| format!("log_std_width[{k}]")));
        if self.heteroscedastic {
            names.extend(self.bands.iter().map(|b| format!("log_std_var[{b}]")));
        } else {
            names.push("log_std_var".into());
        }
        if self.has_mu_c() {
            names.push("std_mu_c".into());
        }
        names
    }

    /// Names of [`constrain_flat`](Self::constrain_flat) entries.
    pub fn constrained_names(&self) -> Vec<String> {
        let mut names = self.spec.free_param_names();
        if self.heteroscedastic {
            names.extend(self.bands.iter().map(|b| format!("sigma[{b}]")));
        } else {
            names.push("sigma".into());
        }
        if self.has_mu_c() {
            names.push("mu_c".into());
        }
        names
    }

    fn unpack(&self, q: &[f64]) -> Unpacked {
        let (amp, loc, width, var, mu_c, end) = self.offsets();
        let loc_u = &q[loc..width];
        Unpacked {
            poly: q[..amp].to_vec(),
            amp: q[amp..loc].to_vec(),
            loc: if self.ordered_locations { ordered_untransform(loc_u) } else { loc_u.to_vec() },
            width: q[width..var].iter().map(|w| w.exp()).collect(),
            log_var: q[var..mu_c].to_vec(),
            mu_c: (end > mu_c).then(|| q[mu_c]),
        }
    }

    /// Standardized mean at `z` with gradient written into `g` as
    /// `[poly, amp, loc, width]`.
    fn std_mean_grad(&self, u: &Unpacked, z: f64, g: &mut [f64]) -> f64 {
        let p = u.poly.len();
        let n = u.amp.len();
        let mut value = 0.0;
        match self.spec.family {
            Family::AeroGaussian => {
                value += u.poly[0];
                g[0] = 1.0;
            }
            _ => {
                let mut pow = 1.0;
                for (k, a) in u.poly.iter().enumerate() {
                    value += a * pow;
                    g[k] = pow;
                    pow *= z;
                }
            }
        }
        if n > 0 {
            let (_, rest) = g.split_at_mut(p);
            let (d_amp, rest) = rest.split_at_mut(n);
            let (d_loc, d_width) = rest.split_at_mut(n);
            gauss_basis_grad(z, &u.amp, &u.loc, &u.width, d_amp, d_loc, d_width);
            value += u.amp.iter().zip(d_amp.iter()).map(|(a, b)| a * b).sum::<f64>();
        }
        value
    }

    fn std_mean(&self, u: &Unpacked, z: f64) -> f64 {
        let base = match self.spec.family {
            Family::AeroGaussian => u.poly[0],
            _ => poly_basis_eval(z, &u.poly).unwrap_or(f64::NAN),
        };
        base + u
            .amp
            .iter()
            .zip(&u.loc)
            .zip(&u.width)
            .map(|((a, b), c)| {
                let t = (z - b) / c;
                a * (-t * t).exp()
            })
            .sum::<f64>()
    }

    /// Log density and gradient; `None` for the gradient skips its computation.
    fn evaluate(&self, q: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        let (_, loc_off, width_off, var_off, mu_c_off, _) = self.offsets();
        let p = self.spec.poly_len();
        let n = self.spec.gauss_count();
        let u = self.unpack(q);
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|x| *x = 0.0);
        }
        let inv_var: Vec<f64> = u.log_var.iter().map(|s| (-s).exp()).collect();

        // Gradient accumulators with respect to constrained standardized
        // mean parameters [poly, amp, loc, width].
        let mut d_mean = vec![0.0; p + 3 * n];
        let mut gm = vec![0.0; p + 3 * n];
        let mut lp = 0.0;
        for o in &self.obs {
            let s = u.log_var[o.band];
            let iv = inv_var[o.band];
            if grad.is_some() {
                let m = self.std_mean_grad(&u, o.z, &mut gm);
                let r = o.y - m;
                lp += -0.5 * (LN_2PI + s + r * r * iv);
                let g = grad.as_deref_mut().unwrap();
                for (d, gk) in d_mean.iter_mut().zip(&gm) {
                    *d += r * iv * gk;
                }
                g[var_off + o.band] += -0.5 + 0.5 * r * r * iv;
            } else {
                let r = o.y - self.std_mean(&u, o.z);
                lp += -0.5 * (LN_2PI + s + r * r * iv);
            }
        }

        // Priors on linear blocks and locations.
        for (k, pr) in self.priors.poly.iter().enumerate() {
            lp += pr.ln_pdf(u.poly[k]);
            d_mean[k] += pr.d_ln_pdf(u.poly[k]);
        }
        for k in 0..n {
            lp += self.priors.amp[k].ln_pdf(u.amp[k]);
            d_mean[p + k] += self.priors.amp[k].d_ln_pdf(u.amp[k]);
            lp += self.priors.loc[k].ln_pdf(u.loc[k]);
            d_mean[p + n + k] += self.priors.loc[k].d_ln_pdf(u.loc[k]);
        }

        // Width prior.
        let mut d_mu_c = 0.0;
        match &self.priors.width {
            WidthPrior::Hierarchical { mu_cc, sigma_cc, sigma_c } if n > 0 => {
                let mu_c = u.mu_c.expect("hierarchical layout has mu_c");
                for k in 0..n {
                    let (l, dc, dmu) = truncated_normal_terms(u.width[k], mu_c, *sigma_c);
                    lp += l;
                    d_mean[p + 2 * n + k] += dc;
                    d_mu_c += dmu;
                }
                lp += normal_logpdf(mu_c, *mu_cc, *sigma_cc);
                d_mu_c += -(mu_c - mu_cc) / (sigma_cc * sigma_cc);
            }
            WidthPrior::Independent(v) => {
                for k in 0..n {
                    let (l, dc, _) = truncated_normal_terms(u.width[k], v[k].mu, v[k].sigma);
                    lp += l;
                    d_mean[p + 2 * n + k] += dc;
                }
            }
            _ => {}
        }

        // Variance priors with the log-transform Jacobian.
        let vp = self.priors.variance;
        for &s in &u.log_var {
            lp += vp.ln_pdf(s.exp()) + s;
        }

        // Jacobians of the width and ordered-location transforms.
        let width_q = &q[width_off..var_off];
        lp += width_q.iter().sum::<f64>();
        if self.ordered_locations {
            lp += q[loc_off..width_off].iter().skip(1).sum::<f64>();
        }

        if let Some(g) = grad {
            g[..p + n].copy_from_slice(&d_mean[..p + n]);
            // Locations: d/du_j = Σ_{k≥j} ∂/∂loc_k · ∂loc_k/∂u_j.
            let d_loc = &d_mean[p + n..p + 2 * n];
            if self.ordered_locations {
                let mut tail = 0.0;
                for j in (0..n).rev() {
                    tail += d_loc[j];
                    g[loc_off + j] = if j == 0 { tail } else { tail * q[loc_off + j].exp() + 1.0 };
                }
            } else {
                g[loc_off..width_off].copy_from_slice(d_loc);
            }
            for k in 0..n {
                g[width_off + k] = d_mean[p + 2 * n + k] * u.width[k] + 1.0;
            }
            for (b, &s) in u.log_var.iter().enumerate() {
                g[var_off + b] += -vp.shape + vp.scale * (-s).exp();
            }
            if u.mu_c.is_some() {
                g[mu_c_off] = d_mu_c;
            }
        }
        if lp.is_nan() {
            f64::NEG_INFINITY
        } else {
            lp
        }
    }

    /// Log posterior (up to the evidence) on the unconstrained space.
    pub fn log_density(&self, q: &[f64]) -> f64 {
        self.evaluate(q, None)
    }

    /// Map an unconstrained point to original-unit parameters.
    pub fn constrain(&self, q: &[f64]) -> ConstrainedDraw {
        let st = self.standardization;
        let u = self.unpack(q);
        let poly = match self.spec.family {
            Family::AeroGaussian => vec![st.y_center + st.y_scale * u.poly[0]],
            _ => destandardize_poly(&u.poly, st),
        };
        let sd: Vec<f64> = u.log_var.iter().map(|s| st.y_scale * (0.5 * s).exp()).collect();
        let noise_sd = if self.heteroscedastic {
            NoiseSd::PerBand { frequency_hz: self.bands.clone(), sd }
        } else {
            NoiseSd::Scalar(sd[0])
        };
        ConstrainedDraw {
            params: ParameterVector {
                b_scale: 1.0,
                poly,
                amp: u.amp.iter().map(|a| st.y_scale * a).collect(),
                loc: u.loc.iter().map(|b| st.x_center + st.x_scale * b).collect(),
                width: u.width.iter().map(|c| st.x_scale * c).collect(),
                noise_sd,
            },
            mu_c: u.mu_c.map(|m| st.x_scale * m),
        }
    }

    /// Flat constrained vector ordered as [`constrained_names`](Self::constrained_names).
    pub fn constrain_flat(&self, q: &[f64]) -> Vec<f64> {
        let d = self.constrain(q);
        let mut out = d.params.free_mean_params();
        out.extend_from_slice(d.params.noise_sd.values());
        if let Some(m) = d.mu_c {
            out.push(m);
        }
        out
    }

    /// Inverse of [`constrain`](Self::constrain). A scalar noise sd is
    /// broadcast to every band; a missing `mu_c` defaults to the mean width.
    pub fn unconstrain(&self, params: &ParameterVector, mu_c: Option<f64>) -> Result<Vec<f64>> {
        params.validate(&self.spec)?;
        let st = self.standardization;
        let n = self.spec.gauss_count();
        let mut q = Vec::with_capacity(self.dimension());
        match self.spec.family {
            Family::AeroGaussian => q.push((params.poly[0] - st.y_center) / st.y_scale),
            _ => q.extend(standardize_poly(&params.poly, st)),
        }
        q.extend(params.amp.iter().map(|a| a / st.y_scale));
        let loc: Vec<f64> = params.loc.iter().map(|b| (b - st.x_center) / st.x_scale).collect();
        if self.ordered_locations {
            q.extend(ordered_transform(&loc)?);
        } else {
            q.extend(loc);
        }
        let width: Vec<f64> = params.width.iter().map(|c| c / st.x_scale).collect();
        for c in &width {
            q.push(log_transform(*c)?);
        }
        let sd_of = |band: f64| -> Result<f64> {
            params
                .noise_sd
                .at(band)
                .ok_or_else(|| Error::Config(format!("noise_sd has no entry for band {band}")))
        };
        if self.heteroscedastic {
            for &b in &self.bands {
                q.push(log_transform((sd_of(b)? / st.y_scale).powi(2))?);
            }
        } else {
            let sd = params.noise_sd.values().first().copied().unwrap_or(f64::NAN);
            q.push(log_transform((sd / st.y_scale).powi(2))?);
        }
        if self.has_mu_c() {
            let m = match mu_c {
                Some(m) => m / st.x_scale,
                None => width.iter().sum::<f64>() / n as f64,
            };
            q.push(m);
        }
        Ok(q)
    }

    /// Band id for a query frequency, honoring the nearest-band fallback.
    pub(crate) fn band_for(&self, f_hz: f64) -> Result<usize> {
        if !self.heteroscedastic {
            return Ok(0);
        }
        if let Some(b) = self.bands.iter().position(|&b| b == f_hz) {
            return Ok(b);
        }
        if self.nearest_band_fallback {
            let x = self.spec.freq_transform.apply(f_hz);
            let best = self
                .bands
                .iter()
                .enumerate()
                .min_by(|a, b| {
                    let da = (self.spec.freq_transform.apply(*a.1) - x).abs();
                    let db = (self.spec.freq_transform.apply(*b.1) - x).abs();
                    da.total_cmp(&db)
                })
                .map(|(i, _)| i)
                .unwrap_or(0);
            return Ok(best);
        }
        Err(Error::Extrapolation(format!("frequency {f_hz} Hz is not one of the model's bands")))
    }

    /// Mean (original units) and noise sd at a query point for draw `q`.
    pub(crate) fn predictive_moments(
        &self,
        q: &[f64],
        speed: f64,
        f_hz: f64,
        band: usize,
    ) -> Result<(f64, f64)> {
        let st = self.standardization;
        let u = self.unpack(q);
        let z = (self.spec.freq_transform.apply(f_hz) - st.x_center) / st.x_scale;
        let phys = physical_aero_term(speed, &self.spec, 1.0)?;
        let m = phys + st.y_center + st.y_scale * self.std_mean(&u, z);
        let sd = st.y_scale * (0.5 * u.log_var[band]).exp();
        Ok((m, sd))
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Coefficients in `x` of `y_center + y_scale · Σ a'_k ((x - x_center)/x_scale)^k`.
pub fn destandardize_poly(a_std: &[f64], st: Standardization) -> Vec<f64> {
    let m = a_std.len();
    let mut out = vec![0.0; m];
    for (k, &a) in a_std.iter().enumerate() {
        let scale = a * st.x_scale.powi(-(k as i32));
        for (j, o) in out.iter_mut().enumerate().take(k + 1) {
            *o += st.y_scale * scale * binomial(k, j) * (-st.x_center).powi((k - j) as i32);
        }
    }
    if let Some(c) = out.first_mut() {
        *c += st.y_center;
    }
    out
}

/// Inverse of [`destandardize_poly`].
pub fn standardize_poly(a: &[f64], st: Standardization) -> Vec<f64> {
    let m = a.len();
    let mut out = vec![0.0; m];
    for (j, &aj) in a.iter().enumerate() {
        for (k, o) in out.iter_mut().enumerate().take(j + 1) {
            *o += aj * binomial(j, k) * st.x_center.powi((j - k) as i32) * st.x_scale.powi(k as i32);
        }
    }
    if let Some(c) = out.first_mut() {
        *c -= st.y_center;
    }
    out.iter().map(|v| v / st.y_scale).collect()
}

impl TargetDensity for BayesModel {
    fn dim(&self) -> usize {
        self.dimension()
    }

    fn logp_grad(&self, q: &[f64]) -> (f64, Vec<f64>) {
        let mut g = vec![0.0; q.len()];
        let lp = self.evaluate(q, Some(&mut g));
        (lp, g)
    }

    fn initial_point(&self) -> Vec<f64> {
        self.center.clone()
    }

    fn param_names(&self) -> Vec<String> {
        self.unconstrained_names()
    }
}

impl PointwiseLogLik for BayesModel {
    fn n_obs(&self) -> usize {
        self.obs.len()
    }

    /// Log likelihood of each record in original dB units.
    fn pointwise_loglik(&self, q: &[f64], out: &mut [f64]) {
        let u = self.unpack(q);
        let log_sy = self.standardization.y_scale.ln();
        for (o, ll) in self.obs.iter().zip(out.iter_mut()) {
            let s = u.log_var[o.band];
            let r = o.y - self.std_mean(&u, o.z);
            *ll = -0.5 * (LN_2PI + s + r * r * (-s).exp()) - log_sy;
        }
    }
}
