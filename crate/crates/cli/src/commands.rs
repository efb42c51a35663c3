use std::io::Write;
use std::path::{Path, PathBuf};

use nvhmeta::bootstrap::{parametric_bootstrap, predict_bands, BootstrapConfig};
use nvhmeta::dataset::{load_csv, select, synthesize, CategoricalSelector, Dataset, SynthConfig};
use nvhmeta::diagnostics::{diagnose, DiagnosticsOptions, DEFAULT_RANK_BINS};
use nvhmeta::fit::{auto_fit_with, default_init, kfold_cv, nls_fit_with, CvReport, NlsOptions};
use nvhmeta::loo::{compare, psis_loo, LooReport, RankRow};
use nvhmeta::models::{build_bm1, build_bm2, posterior_predictive, BayesModel, GridPoint, PriorSpec};
use nvhmeta::sampler::{run_chains, PosteriorSamples, SamplerConfig, SamplesSummary};
use nvhmeta::surrogate::{self, ParameterVector, SurrogateSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::output::Outputs;
use crate::run::{absolute, parse, read_json_value, read_manifest, Command, Status};

pub const POSTERIOR_CSV: &str = "posterior.csv";
pub const POSTERIOR_SUMMARY: &str = "posterior_summary.json";

fn schema_version() -> u32 {
    crate::run::SCHEMA_VERSION
}

/// Input dataset: a CSV plus the attribute columns to read and an optional
/// selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataRef {
    pub path: PathBuf,
    #[serde(default)]
    pub schema: Vec<String>,
    #[serde(default)]
    pub select: CategoricalSelector,
}

impl DataRef {
    fn load(&self) -> CliResult<Dataset> {
        let d = load_csv(&self.path, &self.schema).map_err(|e| match e {
            nvhmeta::Error::Io(source) => CliError::Read { path: self.path.clone(), source },
            e => e.into(),
        })?;
        if self.select.constraints.is_empty() {
            Ok(d)
        } else {
            Ok(select(&d, &self.select)?)
        }
    }
}

/// Cartesian product of speeds and bands, speed-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub speeds: Vec<f64>,
    pub frequency_hz: Vec<f64>,
}

impl Grid {
    fn points(&self) -> Vec<GridPoint> {
        self.speeds
            .iter()
            .flat_map(|&speed| {
                self.frequency_hz.iter().map(move |&frequency_hz| GridPoint { speed, frequency_hz })
            })
            .collect()
    }
}

fn write_csv_rows(w: &mut impl Write, header: &[String], rows: Vec<Vec<String>>) -> CliResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for r in rows {
        out.write_record(&r)?;
    }
    out.flush()?;
    Ok(())
}

fn strings(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthCmd {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub synth: SynthConfig,
}

impl Command for SynthCmd {
    const NAME: &'static str = "synth";

    fn schema_version(&self) -> u32 {
        self.schema_version
    }
    fn out_mut(&mut self) -> &mut Option<PathBuf> {
        &mut self.out
    }
    fn resolve_paths(&mut self, _base: &Path) {}
    fn apply_seed(&mut self, seed: Option<u64>) -> Option<u64> {
        if let Some(s) = seed {
            self.synth.rng_seed = s;
        }
        Some(self.synth.rng_seed)
    }

    fn run(&self, out: &mut Outputs) -> CliResult<Status> {
        let d = synthesize(&self.synth)?;
        out.write_with("dataset.csv", |w| Ok(d.write_csv(w)?))?;
        Ok(Status::Ok)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitCmd {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub data: DataRef,
    pub spec: SurrogateSpec,
    /// Starting point; without one the best of the built-in starts is used.
    #[serde(default)]
    pub init: Option<ParameterVector>,
    #[serde(default)]
    pub nls: NlsOptions,
}

impl Command for FitCmd {
    const NAME: &'static str = "fit";

    fn schema_version(&self) -> u32 {
        self.schema_version
    }
    fn out_mut(&mut self) -> &mut Option<PathBuf> {
        &mut self.out
    }
    fn resolve_paths(&mut self, base: &Path) {
        self.data.path = absolute(base, &self.data.path);
    }
    fn apply_seed(&mut self, _seed: Option<u64>) -> Option<u64> {
        None
    }

    fn run(&self, out: &mut Outputs) -> CliResult<Status> {
        let d = self.data.load()?;
        let fit = match &self.init {
            Some(init) => nls_fit_with(&d, &self.spec, init, &self.nls)?,
            None => auto_fit_with(&d, &self.spec, &self.nls)?,
        };
        let yhat = surrogate::mean_vector(&d, &self.spec, &fit.params)?;
        out.json("fit.json", &fit)?;
        let rows = d
            .records()
            .iter()
            .zip(&yhat)
            .map(|(r, m)| {
                vec![
                    r.frequency_hz.to_string(),
                    r.speed.to_string(),
                    r.spl_db.to_string(),
                    m.to_string(),
                    (r.spl_db - m).to_string(),
                ]
            })
            .collect();
        out.write_with("fitted.csv", |w| {
            write_csv_rows(w, &strings(&["frequency_hz", "speed_kmph", "spl_db", "fitted", "residual"]), rows)
        })?;
        Ok(Status::Ok)
    }
}

fn default_ks() -> Vec<usize> {
    vec![5, 10]
}

fn default_cv_runs() -> usize {
    1000
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvCmd {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub data: DataRef,
    pub spec: SurrogateSpec,
    #[serde(default)]
    pub init: Option<ParameterVector>,
    #[serde(default = "default_ks")]
    pub k: Vec<usize>,
    #[serde(default = "default_cv_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Command for CvCmd {
    const NAME: &'static str = "cv";

    fn schema_version(&self) -> u32 {
        self.schema_version
    }
    fn out_mut(&mut self) -> &mut Option<PathBuf> {
        &mut self.out
    }
    fn resolve_paths(&mut self, base: &Path) {
        self.data.path = absolute(base, &self.data.path);
    }
    fn apply_seed(&mut self, seed: Option<u64>) -> Option<u64> {
        if let Some(s) = seed {
            self.seed = s;
        }
        Some(self.seed)
    }

    fn run(&self, out: &mut Outputs) -> CliResult<Status> {
        let d = self.data.load()?;
        let init = match &self.init {
            Some(p) => p.clone(),
            None => default_init(&d, &self.spec)?,
        };
        let reports = self
            .k
            .iter()
            .map(|&k| kfold_cv(&d, &self.spec, &init, k, self.runs, self.seed))
            .collect::<nvhmeta::Result<Vec<CvReport>>>()?;
        out.json("cv.json", &reports)?;
        let mut runs = Vec::new();
        let mut folds = Vec::new();
        for r in &reports {
            for (run, (r2, fold_r2)) in r.run_r2_cv.iter().zip(&r.fold_r2).enumerate() {
                runs.push(vec![r.k.to_string(), run.to_string(), r2.to_string()]);
                for (fold, v) in fold_r2.iter().enumerate() {
                    folds.push(vec![r.k.to_string(), run.to_string(), fold.to_string(), v.to_string()]);
                }
            }
        }
        out.write_with("cv_runs.csv", |w| write_csv_rows(w, &strings(&["k", "run", "r2_cv"]), runs))?;
        out.write_with("cv_folds.csv", |w| write_csv_rows(w, &strings(&["k", "run", "fold", "r2"]), folds))?;
        Ok(Status::Ok)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Homoscedastic polynomial model.
    Bm1,
    /// Heteroscedastic Gaussian-basis model.
    Bm2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Center chains on a least-squares fit.
    #[default]
    Nls,
    /// Center chains on the model's default point.
    Default,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleCmd {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub data: DataRef,
    pub model: ModelKind,
    pub spec: SurrogateSpec,
    #[serde(default)]
    pub priors: PriorSpec,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub init: InitMode,
    #[serde(default = "default_true")]
    pub ordered_locations: bool,
}

impl SampleCmd {
    pub fn build_model(&self) -> CliResult<BayesModel> {
        let d = self.data.load()?;
        let model = match self.model {
            ModelKind::Bm1 => build_bm1(&d, &self.spec, &self.priors)?,
            ModelKind::Bm2 => build_bm2(&d, &self.spec, &self.priors)?,
        }
        .with_ordered_locations(self.ordered_locations);
        Ok(match self.init {
            InitMode::Default => model,
            InitMode::Nls => {
                let fit = auto_fit_with(&d, &self.spec, &NlsOptions::default())?;
                model.with_initial_params(&fit.params)?
            }
        })
    }
}

impl Command for SampleCmd {
    const NAME: &'static str = "sample";

    fn schema_version(&self) -> u32 {
        self.schema_version
    }
    fn out_mut(&mut self) -> &mut Option<PathBuf> {
        &mut self.out
    }
    fn resolve_paths(&mut self, base: &Path) {
        self.data.path = absolute(base, &self.data.path);
    }
    fn apply_seed(&mut self, seed: Option<u64>) -> Option<u64> {
        if let Some(s) = seed {
            self.sampler.seed = s;
        }
        Some(self.sampler.seed)
    }

    fn run(&self, out: &mut Outputs) -> CliResult<Status> {
        let model = self.build_model()?;
        let samples = run_chains(&model, &self.sampler)?;
        out.write_with(POSTERIOR_CSV, |w| Ok(samples.write_csv(w)?))?;
        out.json(POSTERIOR_SUMMARY, &samples.summary())?;

        let mut header = strings(&["chain", "draw"]);
        header.extend(model.constrained_names());
        let mut rows = Vec::with_capacity(samples.n_chains() * samples.n_draws());
        for (c, chain) in samples.draws.iter().enumerate() {
            for (i, q) in chain.iter().enumerate() {
                let mut row = vec![c.to_string(), i.to_string()];
                row.extend(model.constrain_flat(q).iter().map(f64::to_string));
                rows.push(row);
            }
        }
        out.write_with("params.csv", |w| write_csv_rows(w, &header, rows))?;
        Ok(Status::Ok)
    }
}

/// The sample configuration and draws stored in a `sample` output directory.
fn load_sample_run(dir: &Path) -> CliResult<(SampleCmd, PosteriorSamples)> {
    let manifest = read_manifest(dir)?;
    if manifest.command != SampleCmd::NAME {
        return Err(CliError::Usage(format!(
            "{} holds a `{}` run, expected `sample`",
            dir.display(),
            manifest.command
        )));
    }
    let cfg: SampleCmd = parse(manifest.config)?;
    let summary: SamplesSummary = parse(read_json_value(&dir.join(POSTERIOR_SUMMARY))?)?;
    let path = dir.join(POSTERIOR_CSV);
    let file = std::fs::File::open(&path).map_err(|source| CliError::Read { path, source })?;
    let samples = PosteriorSamples::read_csv(std::io::BufReader::new(file), Some(&summary))?;
    Ok((cfg, samples))
}

fn default_rank_bins() -> usize {
    DEFAULT_RANK_BINS
}

fn default_gate() -> f64 {
    1.1
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseCmd {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Output directory of a `sample` run.
    pub run: PathBuf,
    #[serde(default = "default_rank_bins")]
    pub rank_bins: usize,
    #[serde(default)]
    pub split: bool,
    /// Largest acceptable R̂.
    #[serde(default = "default_gate")]
    pub r_hat_gate: f64,
}

impl Command for DiagnoseCmd {
    const NAME: &'static str = "diagnose";

    fn schema_version(&self) -> u32 {
        self.schema_version
    }
    fn out_mut(&mut self) -> &mut Option<PathBuf> {
        &mut self.out
    }
    fn resolve_paths(&mut self, base: &Path) {
        self.run = absolute(base, &self.run);
    }
    fn apply_seed(&mut self, _seed: Option<u64>) -> Option<u64> {
        None
    }

    fn run(&self, out: &mut Outputs) -> CliResult<Status> {
        let (_, samples) = load_sample_run(&self.run)?;
        let report =
            diagnose(&samples, &DiagnosticsOptions { rank_bins: self.rank_bins, split: self.split })?;
        out.json("diagnostics.json", &report)?;
        out.write_with("rank_hist.csv", |w| Ok(report.write_rank_csv(w)?))?;
        let max = report.max_r_hat();
        if max <= self.r_hat_gate {
            Ok(Status::Ok)
        } else {
            Ok(Status::Gate(format!("max R-hat {max} exceeds gate {}", self.r_hat_gate)))
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LooRun {
    pub id: String,
    /// Output directory of a `sample` run.
    pub run: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LooCmd {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub runs: Vec<LooRun>,
}

#[derive(Debug, Serialize)]
struct LooOutput<'a> {
    reports: &'a [LooReport],
    ranking: &'a [RankRow],
}

impl Command for LooCmd {
    const NAME: &'static str = "loo";

    fn schema_version(&self) -> u32 {
        self.schema_version
    }
    fn out_mut(&mut self) -> &mut Option<PathBuf> {
        &mut self.out
    }
    fn resolve_paths(&mut self, base: &Path) {
        for r in &mut self.runs {
            r.run = absolute(base, &r.run);
        }
    }
    fn apply_seed(&mut self, _seed: Option<u64>) -> Option<u64> {
        None
    }

    fn run(&self, out: &mut Outputs) -> CliResult<Status> {
        if self.runs.is_empty() {
            return Err(CliError::Usage("loo needs at least one run".into()));
        }
        let mut reports = Vec::with_capacity(self.runs.len());
        for r in &self.runs {
            let (cfg, samples) = load_sample_run(&r.run)?;
            // Chain centering only affects initialization; skip the fit.
            let model = SampleCmd { init: InitMode::Default, ..cfg }.build_model()?;
            let report = psis_loo(&r.id, &model, &samples)?;
            out.write_with(&format!("k_hat_{}.csv", r.id), |w| {
                Ok(report.write_k_hat_csv(w, Some(model.data()))?)
            })?;
            reports.push(report);
        }
        let ranking = compare(&reports)?;
        out.json("loo.json", &LooOutput { reports: &reports, ranking: &ranking })?;
        let rows = ranking
            .iter()
            .map(|r| {
                vec![
                    r.rank.to_string(),
                    r.model_id.clone(),
                    r.elpd.to_string(),
                    r.p_loo.to_string(),
                    r.se.to_string(),
                    r.elpd_diff.to_string(),
                    r.se_diff.to_string(),
                ]
            })
            .collect();
        out.write_with("compare.csv", |w| {
            write_csv_rows(
                w,
                &strings(&["rank", "model_id", "elpd", "p_loo", "se", "elpd_diff", "se_diff"]),
                rows,
            )
        })?;
        Ok(Status::Ok)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapCmd {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub data: DataRef,
    pub bootstrap: BootstrapConfig,
    /// Evaluate 95% bands on this grid.
    #[serde(default)]
    pub grid: Option<Grid>,
    /// Add observation noise to the bands (prediction rather than confidence).
    #[serde(default)]
    pub predictive: bool,
}

impl Command for BootstrapCmd {
    const NAME: &'static str = "bootstrap";

    fn schema_version(&self) -> u32 {
        self.schema_version
    }
    fn out_mut(&mut self) -> &mut Option<PathBuf> {
        &mut self.out
    }
    fn resolve_paths(&mut self, base: &Path) {
        self.data.path = absolute(base, &self.data.path);
    }
    fn apply_seed(&mut self, seed: Option<u64>) -> Option<u64> {
        if let Some(s) = seed {
            self.bootstrap.seed = s;
        }
        Some(self.bootstrap.seed)
    }

    fn run(&self, out: &mut Outputs) -> CliResult<Status> {
        let d = self.data.load()?;
        let result = parametric_bootstrap(&d, &self.bootstrap)?;
        out.json("bootstrap.json", &result)?;
        out.write_with("replicates.csv", |w| Ok(result.write_replicates_csv(w)?))?;
        if let Some(grid) = &self.grid {
            let noise_seed = self.predictive.then_some(self.bootstrap.seed);
            let bands = predict_bands(&result, &grid.points(), noise_seed)?;
            out.write_with("bands.csv", |w| Ok(bands.write_csv(w)?))?;
        }
        Ok(Status::Ok)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictCmd {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Output directory of a `sample` run.
    pub run: PathBuf,
    pub grid: Grid,
    #[serde(default)]
    pub seed: u64,
    /// Map grid frequencies outside the observed bands to the nearest band.
    #[serde(default)]
    pub nearest_band_fallback: bool,
}

impl Command for PredictCmd {
    const NAME: &'static str = "predict";

    fn schema_version(&self) -> u32 {
        self.schema_version
    }
    fn out_mut(&mut self) -> &mut Option<PathBuf> {
        &mut self.out
    }
    fn resolve_paths(&mut self, base: &Path) {
        self.run = absolute(base, &self.run);
    }
    fn apply_seed(&mut self, seed: Option<u64>) -> Option<u64> {
        if let Some(s) = seed {
            self.seed = s;
        }
        Some(self.seed)
    }

    fn run(&self, out: &mut Outputs) -> CliResult<Status> {
        let (cfg, samples) = load_sample_run(&self.run)?;
        let model = SampleCmd { init: InitMode::Default, ..cfg }
            .build_model()?
            .with_nearest_band_fallback(self.nearest_band_fallback);
        let pred = posterior_predictive(&model, &samples, &self.grid.points(), self.seed)?;
        out.write_with("predictive.csv", |w| Ok(pred.write_csv(w)?))?;
        Ok(Status::Ok)
    }
}
