//! The machine-readable result document and its serialization.
//!
//! Serialization is deterministic: struct-declared key order, pretty
//! printing with one key per line, and every float written with 17
//! significant digits (`{:.16e}`) so that writing, reading, and writing
//! again produces identical bytes. The wall-clock field is the last line
//! before the closing braces, so consumers comparing documents can drop
//! that single line.

use std::io;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct ResultDocument {
    pub schema_version: u32,
    pub command: String,
    pub config: ConfigEcho,
    pub seed: u64,
    pub results: ResultsSection,
    pub wall_clock_ms: u64,
}

/// Echo of the resolved run configuration; only the fields relevant to
/// the command appear.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Default)]
#[serde(default)]
pub struct ConfigEcho {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exp: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub obs: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub treatment: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub covariates: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimator: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub propensity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ridge: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boot: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub setting: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_exp: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_obs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prop_exp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prop_obs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub param: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Default)]
#[serde(default)]
pub struct ResultsSection {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub methods: Vec<MethodReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cv_trace: Option<CvTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<Vec<ReplicateRecord>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenarios: Option<Vec<ScenarioReport>>,
}

/// One method's numbers. Point estimation fills `estimate`/`lambda`;
/// Monte Carlo aggregation fills the accuracy block; `bootstrap_sd`
/// appears when resampling was requested.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Default)]
#[serde(default)]
pub struct MethodReport {
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bias: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sd_lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap_sd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ttest: Option<TTestDetail>,
}

#[derive(Serialize, Deserialize, Debug, Clone, Copy, PartialEq)]
pub struct TTestDetail {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
    pub pooled: bool,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct CvTrace {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub lambda_hat: f64,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct ReplicateRecord {
    pub run: usize,
    pub seed: u64,
    /// Aligned with the document's method list.
    pub estimates: Vec<f64>,
    pub lambdas: Vec<Option<f64>>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub scenario_id: String,
    pub value: f64,
    pub n_runs: usize,
    pub methods: Vec<MethodReport>,
}

/// Pretty JSON with every float at 17 significant digits.
struct F17<'a> {
    inner: serde_json::ser::PrettyFormatter<'a>,
}

impl serde_json::ser::Formatter for F17<'_> {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        serde_json::ser::Formatter::begin_array(&mut self.inner, writer)
    }

    fn end_array<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        serde_json::ser::Formatter::end_array(&mut self.inner, writer)
    }

    fn begin_array_value<W>(&mut self, writer: &mut W, first: bool) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        serde_json::ser::Formatter::begin_array_value(&mut self.inner, writer, first)
    }

    fn end_array_value<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        serde_json::ser::Formatter::end_array_value(&mut self.inner, writer)
    }

    fn begin_object<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        serde_json::ser::Formatter::begin_object(&mut self.inner, writer)
    }

    fn end_object<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        serde_json::ser::Formatter::end_object(&mut self.inner, writer)
    }

    fn begin_object_key<W>(&mut self, writer: &mut W, first: bool) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        serde_json::ser::Formatter::begin_object_key(&mut self.inner, writer, first)
    }

    fn begin_object_value<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        serde_json::ser::Formatter::begin_object_value(&mut self.inner, writer)
    }

    // The wrapped formatter tracks "object has members" through this
    // hook; without forwarding it, objects ending in a number (written
    // by the override above) would close on the value's line.
    fn end_object_value<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        serde_json::ser::Formatter::end_object_value(&mut self.inner, writer)
    }
}

/// Serialize with the deterministic format, ending in a newline.
pub fn to_json(doc: &ResultDocument) -> String {
    let mut out = Vec::new();
    let formatter = F17 {
        inner: serde_json::ser::PrettyFormatter::new(),
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut out, formatter);
    doc.serialize(&mut ser)
        .expect("document serialization cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("serializer emits UTF-8")
}

pub fn from_json(text: &str) -> Result<ResultDocument> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("unreadable document: {e}")))
}

/// One row of the long-format CSV companion.
#[derive(Debug, Clone, PartialEq)]
pub struct LongRow {
    pub scenario_id: String,
    pub method: String,
    pub metric: String,
    pub value: f64,
}

/// Render long rows as CSV with the fixed header, floats at 17
/// significant digits.
pub fn to_long_csv(rows: &[LongRow]) -> String {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["scenario_id", "method", "metric", "value"])
        .expect("csv in-memory write cannot fail");
    for r in rows {
        wtr.write_record([
            r.scenario_id.as_str(),
            r.method.as_str(),
            r.metric.as_str(),
            &format!("{:.16e}", r.value),
        ])
        .expect("csv in-memory write cannot fail");
    }
    String::from_utf8(wtr.into_inner().expect("csv flush")).expect("csv emits UTF-8")
}
