//! Spectral SPL datasets: CSV ingestion, categorical selection and synthesis.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surrogate::{self, ParameterVector, SurrogateSpec};

/// Third-octave band centers from 100 Hz to 8 kHz.
pub const THIRD_OCTAVE_100_8K: [f64; 20] = [
    100.0, 125.0, 160.0, 200.0, 250.0, 315.0, 400.0, 500.0, 630.0, 800.0, 1000.0, 1250.0, 1600.0, 2000.0,
    2500.0, 3150.0, 4000.0, 5000.0, 6300.0, 8000.0,
];

/// Wind-tunnel flow speeds (km/h).
pub const AERO_SPEEDS: [f64; 2] = [140.0, 200.0];

/// Rolling-noise test speeds (km/h).
pub const TIRE_SPEEDS: [f64; 3] = [50.0, 70.0, 90.0];

/// One SPL value at a (band, operating point, attributes) triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub frequency_hz: f64,
    /// km/h
    pub speed: f64,
    pub spl_db: f64,
    #[serde(default)]
    pub categories: BTreeMap<String, String>,
}

impl SpectrumRecord {
    pub fn new(frequency_hz: f64, speed: f64, spl_db: f64) -> Self {
        Self { frequency_hz, speed, spl_db, categories: BTreeMap::new() }
    }

    pub fn with_category(mut self, name: &str, value: &str) -> Self {
        self.categories.insert(name.to_string(), value.to_string());
        self
    }

    fn check(&self) -> std::result::Result<(), String> {
        if !(self.frequency_hz > 0.0 && self.frequency_hz.is_finite()) {
            return Err(format!("frequency_hz must be positive, got {}", self.frequency_hz));
        }
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err(format!("speed must be positive, got {}", self.speed));
        }
        if !self.spl_db.is_finite() {
            return Err(format!("spl_db must be finite, got {}", self.spl_db));
        }
        Ok(())
    }
}

/// Required attribute values; a record matches when every constraint holds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CategoricalSelector {
    pub constraints: BTreeMap<String, String>,
}

impl CategoricalSelector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: &str) -> Self {
        self.constraints.insert(name.to_string(), value.to_string());
        self
    }

    fn matches(&self, r: &SpectrumRecord) -> bool {
        self.constraints.iter().all(|(k, v)| r.categories.get(k) == Some(v))
    }
}

/// An ordered, validated collection of records sharing one category schema.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    records: Vec<SpectrumRecord>,
    schema: Vec<String>,
}

impl<'de> Deserialize<'de> for Dataset {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            records: Vec<SpectrumRecord>,
            #[serde(default)]
            schema: Vec<String>,
        }
        let raw = Raw::deserialize(de)?;
        Dataset::new(raw.records, raw.schema).map_err(serde::de::Error::custom)
    }
}

impl Dataset {
    pub fn new(records: Vec<SpectrumRecord>, schema: Vec<String>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            r.check().map_err(|m| Error::at_record(i, Error::InvalidDataset(m)))?;
            if r.categories.len() != schema.len() || !schema.iter().all(|s| r.categories.contains_key(s)) {
                return Err(Error::at_record(
                    i,
                    Error::InvalidDataset("record categories do not match the schema".into()),
                ));
            }
        }
        Ok(Self { records, schema })
    }

    pub fn records(&self) -> &[SpectrumRecord] {
        &self.records
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn spl(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.spl_db).collect()
    }

    /// Distinct frequencies in ascending order.
    pub fn bands(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.records.iter().map(|r| r.frequency_hz).collect();
        b.sort_by(|a, b| a.total_cmp(b));
        b.dedup();
        b
    }

    /// Records at the given indices, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            schema: self.schema.clone(),
        }
    }

    /// Same design, new responses.
    pub fn with_spl(&self, spl: &[f64]) -> Result<Dataset> {
        if spl.len() != self.records.len() {
            return Err(Error::Dimension("response length differs from record count".into()));
        }
        let records =
            self.records.iter().zip(spl).map(|(r, &y)| SpectrumRecord { spl_db: y, ..r.clone() }).collect();
        Dataset::new(records, self.schema.clone())
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["frequency_hz".to_string(), "speed_kmph".into(), "spl_db".into()];
        header.extend(self.schema.iter().cloned());
        out.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.frequency_hz.to_string(), r.speed.to_string(), r.spl_db.to_string()];
            row.extend(self.schema.iter().map(|s| r.categories[s].clone()));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::MissingColumn(name.to_string()))
}

/// Read a CSV with columns `frequency_hz`, `speed_kmph`, `spl_db` plus one per
/// schema attribute. Rows are numbered from 1, header excluded.
pub fn load_csv(path: impl AsRef<Path>, schema: &[String]) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_csv(file, schema)
}

pub fn read_csv<R: std::io::Read>(reader: R, schema: &[String]) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let fi = column(&headers, "frequency_hz")?;
    let vi = column(&headers, "speed_kmph")?;
    let yi = column(&headers, "spl_db")?;
    let ci: Vec<usize> = schema.iter().map(|s| column(&headers, s)).collect::<Result<_>>()?;

    let mut records = Vec::new();
    for (k, row) in rdr.records().enumerate() {
        let row_no = k + 1;
        let row = row.map_err(|e| Error::Parse { row: row_no, message: e.to_string() })?;
        let num = |idx: usize, name: &str| -> Result<f64> {
            let raw = row.get(idx).unwrap_or("");
            let x: f64 = raw.parse().map_err(|_| Error::Parse {
                row: row_no,
                message: format!("`{name}` is not numeric: {raw:?}"),
            })?;
            if !x.is_finite() {
                return Err(Error::Parse {
                    row: row_no,
                    message: format!("`{name}` is not finite: {raw:?}"),
                });
            }
            Ok(x)
        };
        let mut rec =
            SpectrumRecord::new(num(fi, "frequency_hz")?, num(vi, "speed_kmph")?, num(yi, "spl_db")?);
        rec.check().map_err(|message| Error::Parse { row: row_no, message })?;
        for (s, &c) in schema.iter().zip(&ci) {
            rec.categories.insert(s.clone(), row.get(c).unwrap_or("").to_string());
        }
        records.push(rec);
    }
    Dataset::new(records, schema.to_vec())
}

/// Records matching every constraint of `sel`, in their original order.
pub fn select(d: &Dataset, sel: &CategoricalSelector) -> Result<Dataset> {
    if let Some(bad) = sel.constraints.keys().find(|k| !d.schema.contains(k)) {
        return Err(Error::UnknownAttribute(bad.clone()));
    }
    Ok(Dataset {
        records: d.records.iter().filter(|r| sel.matches(r)).cloned().collect(),
        schema: d.schema.clone(),
    })
}

/// Observation noise for synthesis: one sd or one per frequency band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseLevel {
    Scalar(f64),
    PerBand(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub generating_spec: SurrogateSpec,
    pub true_params: ParameterVector,
    pub speeds: Vec<f64>,
    pub frequency_bands: Vec<f64>,
    pub noise_sd_db: NoiseLevel,
    pub replicate_count: usize,
    pub rng_seed: u64,
    /// Attribute values stamped on every synthesized record.
    #[serde(default)]
    pub categories: BTreeMap<String, String>,
}

/// Surrogate mean plus Gaussian noise at every (speed, band, replicate),
/// in that nesting order.
pub fn synthesize(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.generating_spec.validate()?;
    cfg.true_params.validate(&cfg.generating_spec)?;
    if cfg.replicate_count == 0 {
        return Err(Error::Precondition("replicate_count must be positive".into()));
    }
    let sds: Vec<f64> = match &cfg.noise_sd_db {
        NoiseLevel::Scalar(s) => vec![*s; cfg.frequency_bands.len()],
        NoiseLevel::PerBand(v) => {
            if v.len() != cfg.frequency_bands.len() {
                return Err(Error::Dimension(format!(
                    "per-band noise has {} entries for {} bands",
                    v.len(),
                    cfg.frequency_bands.len()
                )));
            }
            v.clone()
        }
    };
    if let Some(s) = sds.iter().find(|s| !(**s >= 0.0)) {
        return Err(Error::Domain(format!("noise sd must be non-negative, got {s}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut records = Vec::with_capacity(cfg.speeds.len() * cfg.frequency_bands.len() * cfg.replicate_count);
    for &v in &cfg.speeds {
        for (&f, &sd) in cfg.frequency_bands.iter().zip(&sds) {
            let mu = surrogate::mean(v, f, &cfg.generating_spec, &cfg.true_params)?;
            for _ in 0..cfg.replicate_count {
                let z: f64 = StandardNormal.sample(&mut rng);
                let mut rec = SpectrumRecord::new(f, v, mu + sd * z);
                rec.categories = cfg.categories.clone();
                records.push(rec);
            }
        }
    }
    Dataset::new(records, cfg.categories.keys().cloned().collect())
}
