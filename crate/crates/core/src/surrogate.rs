//! Deterministic mean functions for broadband noise spectra.
//!
//! Three families are supported:
//!
//! * `AeroPolynomial`: dipole speed law plus a polynomial in transformed frequency,
//! * `AeroGaussian`: dipole speed law plus an intercept and a sum of Gaussian bumps,
//! * `Tire`: `T(f)^r1 · P(v) + v^r2 · G(T(f))` with `P` a polynomial in speed and
//!   `G` a Gaussian sum in transformed frequency.
//!
//! Speeds enter in km/h and are converted to m/s before exponentiation.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

const KMH_TO_MS: f64 = 1.0 / 3.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    AeroPolynomial,
    AeroGaussian,
    Tire,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FreqTransform {
    #[default]
    Log10,
    Identity,
}

impl FreqTransform {
    pub fn apply(self, f_hz: f64) -> f64 {
        match self {
            FreqTransform::Log10 => f_hz.log10(),
            FreqTransform::Identity => f_hz,
        }
    }
}

/// Model family, basis sizes, physical exponents and constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSpec {
    pub family: Family,
    /// Polynomial order.
    #[serde(default = "default_m")]
    pub m: usize,
    /// Number of Gaussian basis functions.
    #[serde(default = "default_n")]
    pub n: usize,
    /// Speed exponent of the aero term.
    #[serde(default = "default_r")]
    pub r: u32,
    #[serde(default)]
    pub r1: f64,
    #[serde(default = "default_r2")]
    pub r2: f64,
    /// Reference speed constant in m/s.
    #[serde(default = "default_c0")]
    pub c0: f64,
    #[serde(default)]
    pub freq_transform: FreqTransform,
}

fn default_m() -> usize {
    4
}
fn default_n() -> usize {
    6
}
fn default_r() -> u32 {
    6
}
fn default_r2() -> f64 {
    1.0
}
fn default_c0() -> f64 {
    343.0
}

impl SurrogateSpec {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            m: default_m(),
            n: default_n(),
            r: default_r(),
            r1: 0.0,
            r2: default_r2(),
            c0: default_c0(),
            freq_transform: FreqTransform::Log10,
        }
    }

    pub fn aero_polynomial(m: usize) -> Self {
        Self { m, ..Self::new(Family::AeroPolynomial) }
    }

    pub fn aero_gaussian(n: usize) -> Self {
        Self { n, ..Self::new(Family::AeroGaussian) }
    }

    pub fn tire(m: usize, n: usize) -> Self {
        Self { m, n, r1: 0.0, r2: 1.0, ..Self::new(Family::Tire) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(Error::Spec(format!("c0 must be positive, got {}", self.c0)));
        }
        if self.r < 1 {
            return Err(Error::Spec("r must be at least 1".into()));
        }
        if !self.r1.is_finite() || !self.r2.is_finite() {
            return Err(Error::Spec("tire exponents must be finite".into()));
        }
        Ok(())
    }

    /// Length of the `poly` block. The Gaussian aero family keeps only its
    /// intercept there.
    pub fn poly_len(&self) -> usize {
        match self.family {
            Family::AeroPolynomial | Family::Tire => self.m + 1,
            Family::AeroGaussian => 1,
        }
    }

    pub fn gauss_count(&self) -> usize {
        match self.family {
            Family::AeroPolynomial => 0,
            Family::AeroGaussian | Family::Tire => self.n,
        }
    }

    /// Number of free mean parameters (everything except `b_scale` and noise).
    pub fn free_param_count(&self) -> usize {
        self.poly_len() + 3 * self.gauss_count()
    }

    /// Names of the free mean parameters in flattening order.
    pub fn free_param_names(&self) -> Vec<String> {
        let mut names: Vec<String> = match self.family {
            Family::AeroGaussian => vec!["alpha".to_string()],
            _ => (0..self.poly_len()).map(|k| format!("a{k}")).collect(),
        };
        for block in ["amp", "loc", "width"] {
            names.extend((0..self.gauss_count()).map(|k| format!("{block}[{k}]")));
        }
        names
    }
}

/// Per-observation noise level: one value or one per frequency band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseSd {
    Scalar(f64),
    PerBand { frequency_hz: Vec<f64>, sd: Vec<f64> },
}

impl Default for NoiseSd {
    fn default() -> Self {
        NoiseSd::Scalar(1.0)
    }
}

impl NoiseSd {
    /// Noise sd at `f_hz`; per-band values require an exact band match.
    pub fn at(&self, f_hz: f64) -> Option<f64> {
        match self {
            NoiseSd::Scalar(s) => Some(*s),
            NoiseSd::PerBand { frequency_hz, sd } => {
                frequency_hz.iter().position(|&b| b == f_hz).map(|i| sd[i])
            }
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            NoiseSd::Scalar(s) => std::slice::from_ref(s),
            NoiseSd::PerBand { sd, .. } => sd,
        }
    }
}

/// Flat parameter vector of a surrogate, stored as named blocks.
///
/// Flattening order is `b_scale, poly, amp, loc, width, noise_sd`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    #[serde(default = "one")]
    pub b_scale: f64,
    #[serde(default)]
    pub poly: Vec<f64>,
    #[serde(default)]
    pub amp: Vec<f64>,
    #[serde(default)]
    pub loc: Vec<f64>,
    #[serde(default)]
    pub width: Vec<f64>,
    #[serde(default)]
    pub noise_sd: NoiseSd,
}

fn one() -> f64 {
    1.0
}

impl ParameterVector {
    /// All-zero linear blocks with the Gaussian locations spread evenly over
    /// `[lo, hi]` (transformed frequency) and widths of `(hi - lo) / n`.
    pub fn spread(spec: &SurrogateSpec, lo: f64, hi: f64) -> Self {
        let n = spec.gauss_count();
        let range = (hi - lo).abs().max(f64::EPSILON);
        let step = range / n.max(1) as f64;
        Self {
            b_scale: 1.0,
            poly: vec![0.0; spec.poly_len()],
            amp: vec![0.0; n],
            loc: (0..n).map(|k| lo + (k as f64 + 0.5) * step).collect(),
            width: vec![step; n],
            noise_sd: NoiseSd::Scalar(1.0),
        }
    }

    /// Default initialization for fitting on `d`: spread over the observed
    /// transformed-frequency range.
    pub fn default_init(spec: &SurrogateSpec, d: &Dataset) -> Self {
        let (lo, hi) = d
            .records()
            .iter()
            .map(|r| spec.freq_transform.apply(r.frequency_hz))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
        if lo.is_finite() {
            Self::spread(spec, lo, hi)
        } else {
            Self::spread(spec, 0.0, 1.0)
        }
    }

    pub fn validate(&self, spec: &SurrogateSpec) -> Result<()> {
        let n = spec.gauss_count();
        if self.poly.len() != spec.poly_len() {
            return Err(Error::Dimension(format!(
                "poly block has {} entries, spec needs {}",
                self.poly.len(),
                spec.poly_len()
            )));
        }
        for (name, len) in [("amp", self.amp.len()), ("loc", self.loc.len()), ("width", self.width.len())] {
            if len != n {
                return Err(Error::Dimension(format!("{name} block has {len} entries, spec needs {n}")));
            }
        }
        if !(self.b_scale > 0.0) {
            return Err(Error::Domain(format!("b_scale must be positive, got {}", self.b_scale)));
        }
        if let Some(w) = self.width.iter().find(|w| !(**w > 0.0)) {
            return Err(Error::Domain(format!("width must be positive, got {w}")));
        }
        if let NoiseSd::PerBand { frequency_hz, sd } = &self.noise_sd {
            if frequency_hz.len() != sd.len() {
                return Err(Error::Dimension("per-band noise_sd length mismatch".into()));
            }
        }
        if let Some(s) = self.noise_sd.values().iter().find(|s| !(**s > 0.0)) {
            return Err(Error::Domain(format!("noise_sd must be positive, got {s}")));
        }
        Ok(())
    }

    /// Free mean parameters in flattening order (`poly, amp, loc, width`).
    pub fn free_mean_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.poly.len() + 3 * self.amp.len());
        out.extend_from_slice(&self.poly);
        out.extend_from_slice(&self.amp);
        out.extend_from_slice(&self.loc);
        out.extend_from_slice(&self.width);
        out
    }

    /// Copy of `self` with the free mean parameters replaced.
    pub fn with_free_mean_params(&self, spec: &SurrogateSpec, theta: &[f64]) -> Self {
        let p = spec.poly_len();
        let n = spec.gauss_count();
        debug_assert_eq!(theta.len(), p + 3 * n);
        Self {
            b_scale: self.b_scale,
            poly: theta[..p].to_vec(),
            amp: theta[p..p + n].to_vec(),
            loc: theta[p + n..p + 2 * n].to_vec(),
            width: theta[p + 2 * n..p + 3 * n].to_vec(),
            noise_sd: self.noise_sd.clone(),
        }
    }
}

fn check_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} is not finite ({x})")))
    }
}

/// `10·log10(b · v^r / (c0^(r-3) · 1e-12))` with `v` converted to m/s.
pub fn physical_aero_term(v_kmh: f64, spec: &SurrogateSpec, b_scale: f64) -> Result<f64> {
    if !(v_kmh > 0.0) || !v_kmh.is_finite() {
        return Err(Error::Domain(format!("speed must be positive, got {v_kmh}")));
    }
    if !(b_scale > 0.0) || !b_scale.is_finite() {
        return Err(Error::Domain(format!("b_scale must be positive, got {b_scale}")));
    }
    let r = spec.r as f64;
    let v = v_kmh * KMH_TO_MS;
    Ok(10.0 * (b_scale.log10() + r * v.log10() - (r - 3.0) * spec.c0.log10() + 12.0))
}

/// `Σ coeffs[k] x^k`, evaluated by Horner's rule.
pub fn poly_basis_eval(x: f64, coeffs: &[f64]) -> Result<f64> {
    if coeffs.is_empty() {
        return Err(Error::Dimension("polynomial needs at least one coefficient".into()));
    }
    check_finite("polynomial argument", x)?;
    Ok(coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c))
}

/// `Σ amp[k] exp(-(x - loc[k])² / width[k]²)`.
pub fn gauss_basis_eval(x: f64, amp: &[f64], loc: &[f64], width: &[f64]) -> Result<f64> {
    if amp.len() != loc.len() || amp.len() != width.len() {
        return Err(Error::Dimension("Gaussian basis blocks differ in length".into()));
    }
    check_finite("Gaussian basis argument", x)?;
    if let Some(w) = width.iter().find(|w| !(**w > 0.0)) {
        return Err(Error::Domain(format!("Gaussian width must be positive, got {w}")));
    }
    Ok(amp
        .iter()
        .zip(loc)
        .zip(width)
        .map(|((a, b), c)| {
            let z = (x - b) / c;
            a * (-z * z).exp()
        })
        .sum())
}

/// Partial derivatives of the Gaussian sum with respect to `(amp, loc, width)`,
/// written into three slices of length `amp.len()` each.
pub(crate) fn gauss_basis_grad(
    x: f64,
    amp: &[f64],
    loc: &[f64],
    width: &[f64],
    d_amp: &mut [f64],
    d_loc: &mut [f64],
    d_width: &mut [f64],
) {
    for k in 0..amp.len() {
        let d = x - loc[k];
        let c = width[k];
        let g = (-(d * d) / (c * c)).exp();
        d_amp[k] = g;
        d_loc[k] = amp[k] * g * 2.0 * d / (c * c);
        d_width[k] = amp[k] * g * 2.0 * d * d / (c * c * c);
    }
}

fn require_family(spec: &SurrogateSpec, family: Family) -> Result<()> {
    if spec.family != family {
        return Err(Error::Spec(format!("expected family {family:?}, got {:?}", spec.family)));
    }
    Ok(())
}

pub fn mean_aero1(v_kmh: f64, f_hz: f64, spec: &SurrogateSpec, params: &ParameterVector) -> Result<f64> {
    require_family(spec, Family::AeroPolynomial)?;
    let x = spec.freq_transform.apply(f_hz);
    Ok(physical_aero_term(v_kmh, spec, params.b_scale)? + poly_basis_eval(x, &params.poly)?)
}

pub fn mean_aero2(v_kmh: f64, f_hz: f64, spec: &SurrogateSpec, params: &ParameterVector) -> Result<f64> {
    require_family(spec, Family::AeroGaussian)?;
    let x = spec.freq_transform.apply(f_hz);
    let intercept = params.poly.first().copied().unwrap_or(0.0);
    Ok(physical_aero_term(v_kmh, spec, params.b_scale)?
        + intercept
        + gauss_basis_eval(x, &params.amp, &params.loc, &params.width)?)
}

fn tire_freq_power(x: f64, r1: f64) -> Result<f64> {
    if x < 0.0 && r1.fract() != 0.0 {
        return Err(Error::Domain(format!(
            "negative transformed frequency {x} with fractional exponent {r1}"
        )));
    }
    Ok(x.powf(r1))
}

pub fn mean_tire(v_kmh: f64, f_hz: f64, spec: &SurrogateSpec, params: &ParameterVector) -> Result<f64> {
    require_family(spec, Family::Tire)?;
    if !(v_kmh > 0.0) {
        return Err(Error::Domain(format!("speed must be positive, got {v_kmh}")));
    }
    let x = spec.freq_transform.apply(f_hz);
    let v = v_kmh * KMH_TO_MS;
    let first = tire_freq_power(x, spec.r1)? * poly_basis_eval(v, &params.poly)?;
    let second = if params.amp.is_empty() {
        0.0
    } else {
        v.powf(spec.r2) * gauss_basis_eval(x, &params.amp, &params.loc, &params.width)?
    };
    Ok(first + second)
}

/// Family-dispatched mean at one operating point.
pub fn mean(v_kmh: f64, f_hz: f64, spec: &SurrogateSpec, params: &ParameterVector) -> Result<f64> {
    match spec.family {
        Family::AeroPolynomial => mean_aero1(v_kmh, f_hz, spec, params),
        Family::AeroGaussian => mean_aero2(v_kmh, f_hz, spec, params),
        Family::Tire => mean_tire(v_kmh, f_hz, spec, params),
    }
}

/// Mean and its gradient. The gradient is laid out as
/// `[b_scale, poly..., amp..., loc..., width...]`.
pub fn mean_with_gradient(
    v_kmh: f64,
    f_hz: f64,
    spec: &SurrogateSpec,
    params: &ParameterVector,
) -> Result<(f64, Vec<f64>)> {
    let value = mean(v_kmh, f_hz, spec, params)?;
    let p = spec.poly_len();
    let n = spec.gauss_count();
    let mut grad = vec![0.0; 1 + p + 3 * n];
    let x = spec.freq_transform.apply(f_hz);
    let (gauss_scale, poly_x, poly_scale) = match spec.family {
        Family::AeroPolynomial | Family::AeroGaussian => {
            grad[0] = 10.0 / (params.b_scale * std::f64::consts::LN_10);
            (1.0, x, 1.0)
        }
        Family::Tire => {
            let v = v_kmh * KMH_TO_MS;
            (v.powf(spec.r2), v, tire_freq_power(x, spec.r1)?)
        }
    };
    if spec.family == Family::AeroGaussian {
        grad[1] = 1.0;
    } else {
        let mut pow = poly_scale;
        for g in grad[1..=p].iter_mut() {
            *g = pow;
            pow *= poly_x;
        }
    }
    if n > 0 {
        let (_, rest) = grad.split_at_mut(1 + p);
        let (d_amp, rest) = rest.split_at_mut(n);
        let (d_loc, d_width) = rest.split_at_mut(n);
        gauss_basis_grad(x, &params.amp, &params.loc, &params.width, d_amp, d_loc, d_width);
        for g in d_amp.iter_mut().chain(d_loc.iter_mut()).chain(d_width.iter_mut()) {
            *g *= gauss_scale;
        }
    }
    Ok((value, grad))
}

/// Mean at every record of `d`, in record order.
pub fn mean_vector(d: &Dataset, spec: &SurrogateSpec, params: &ParameterVector) -> Result<Vec<f64>> {
    if d.is_empty() {
        return Err(Error::InvalidDataset("mean_vector needs a non-empty dataset".into()));
    }
    d.records()
        .iter()
        .enumerate()
        .map(|(i, r)| mean(r.speed, r.frequency_hz, spec, params).map_err(|e| Error::at_record(i, e)))
        .collect()
}
