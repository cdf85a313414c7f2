use std::io;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::config::ExperimentConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Where a case's expected value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    PaperFormula,
    Oracle,
    Triviality,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub id: usize,
    pub name: String,
    pub provenance: Provenance,
    pub p: u32,
    pub d: usize,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub inputs: serde_json::Value,
    pub expected: serde_json::Value,
    pub observed: serde_json::Value,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub cases: Vec<Case>,
    pub summary: Summary,
    /// Wall-clock time per case, kept out of the JSON so reports stay reproducible.
    #[serde(skip)]
    pub timings: Vec<Duration>,
    /// Extra CSV tables produced by the experiment, by file name.
    #[serde(skip)]
    pub tables: Vec<(String, String)>,
}

/// A case under construction; `Report::push` assigns the id and pass flag.
pub struct CaseBuilder {
    pub name: String,
    pub provenance: Provenance,
    pub p: u32,
    pub d: usize,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub inputs: serde_json::Value,
    pub expected: serde_json::Value,
    pub observed: serde_json::Value,
    pub residual: f64,
    pub tolerance: f64,
}

impl CaseBuilder {
    pub fn new(name: impl Into<String>, provenance: Provenance, p: u32, d: usize) -> Self {
        CaseBuilder {
            name: name.into(),
            provenance,
            p,
            d,
            seed: None,
            alpha: None,
            inputs: serde_json::Value::Null,
            expected: serde_json::Value::Null,
            observed: serde_json::Value::Null,
            residual: 0.0,
            tolerance: 0.0,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn inputs(mut self, v: serde_json::Value) -> Self {
        self.inputs = v;
        self
    }

    pub fn expected(mut self, v: serde_json::Value) -> Self {
        self.expected = v;
        self
    }

    pub fn observed(mut self, v: serde_json::Value) -> Self {
        self.observed = v;
        self
    }

    /// Passes iff `residual <= tolerance`; a NaN residual fails.
    pub fn residual(mut self, residual: f64, tolerance: f64) -> Self {
        self.residual = residual;
        self.tolerance = tolerance;
        self
    }

    /// An exact check: residual 0 on success, 1 on failure.
    pub fn exact(self, ok: bool) -> Self {
        self.residual(if ok { 0.0 } else { 1.0 }, 0.0)
    }
}

impl Report {
    pub fn new(config: &ExperimentConfig) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            config: config.clone(),
            cases: Vec::new(),
            summary: Summary::default(),
            timings: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn push(&mut self, c: CaseBuilder, elapsed: Duration) {
        let pass = c.residual <= c.tolerance;
        self.summary.total += 1;
        if pass {
            self.summary.passed += 1;
        } else {
            self.summary.failed += 1;
        }
        self.cases.push(Case {
            id: self.cases.len(),
            name: c.name,
            provenance: c.provenance,
            p: c.p,
            d: c.d,
            seed: c.seed,
            alpha: c.alpha,
            inputs: c.inputs,
            expected: c.expected,
            observed: c.observed,
            residual: c.residual,
            tolerance: c.tolerance,
            pass,
        });
        self.timings.push(elapsed);
    }

    /// Runs `f`, timing it, and records the case; an error becomes a failed case.
    pub fn run(&mut self, name: &str, p: u32, d: usize, f: impl FnOnce() -> Result<CaseBuilder, String>) {
        let start = std::time::Instant::now();
        let case = f().unwrap_or_else(|e| {
            CaseBuilder::new(name, Provenance::Triviality, p, d)
                .observed(serde_json::Value::String(format!("error: {e}")))
                .residual(f64::INFINITY, 0.0)
        });
        self.push(case, start.elapsed());
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> String {
        to_json_17(self)
    }

    /// Columns `case_id, p, d, seed, alpha, residual, pass`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["case_id", "p", "d", "seed", "alpha", "residual", "pass"]).expect("in-memory write");
        for c in &self.cases {
            w.write_record([
                c.id.to_string(),
                c.p.to_string(),
                c.d.to_string(),
                c.seed.map(|s| s.to_string()).unwrap_or_default(),
                c.alpha.map(fmt17).unwrap_or_default(),
                fmt17(c.residual),
                c.pass.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// Columns `case_id, name, seconds`.
    pub fn timings_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["case_id", "name", "seconds"]).expect("in-memory write");
        for (c, t) in self.cases.iter().zip(&self.timings) {
            w.write_record([c.id.to_string(), c.name.clone(), format!("{:.6}", t.as_secs_f64())]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

/// A float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

struct Fixed17<'a>(PrettyFormatter<'a>);

impl Formatter for Fixed17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, x: f64) -> io::Result<()> {
        w.write_all(fmt17(x).as_bytes())
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, x: f32) -> io::Result<()> {
        self.write_f64(w, x as f64)
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty JSON with every float written as `d.dddddddddddddddde±x`.
///
/// Non-finite floats, which JSON cannot hold, are written as `null`.
pub fn to_json_17<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed17(PrettyFormatter::new()));
    // go through Value so non-finite floats become null
    let v = serde_json::to_value(value).expect("serializable");
    v.serialize(&mut ser).expect("in-memory write");
    let mut s = String::from_utf8(buf).expect("utf-8");
    s.push('\n');
    s
}
