//! Reports (`gencrit.report/1`) and their JSON encoding.
//!
//! Reals are written as `d.dddddddddddddddde±x` (17 significant digits), which
//! round-trips every finite `f64`. Non-finite values become `null`.

use gencrit_core::geometry::{GeneralizedRegularVerdict, RegularityReport};
use gencrit_core::stationarity::{MultiplierCertificate, OrthogonalWitness, StationarityCheck};
use gencrit_core::{Mat, Tolerances, Vector};
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Map, Value};
use std::io;

pub const REPORT_SCHEMA: &str = "gencrit.report/1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Outcome of a command, mapped one-to-one onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    SuiteFailure,
    InputError,
    NumericError,
    NotConverged,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::SuiteFailure => 1,
            Status::InputError => 2,
            Status::NumericError => 3,
            Status::NotConverged => 4,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::SuiteFailure => "suite_failure",
            Status::InputError => "input_error",
            Status::NumericError => "numeric_error",
            Status::NotConverged => "not_converged",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: Value,
    pub status: Status,
    pub tolerances: Option<Tolerances>,
    pub regularity: Option<Value>,
    pub stationarity: Option<Value>,
    pub certificate: Option<Value>,
    pub witness: Option<Value>,
    pub suite: Option<Value>,
    pub diagnostics: Vec<String>,
    pub timings: Option<Map<String, Value>>,
    /// Human-readable lines; not part of the JSON.
    pub summary: Vec<String>,
}

impl Report {
    pub fn new(command: Value) -> Self {
        Self {
            command,
            status: Status::Ok,
            tolerances: None,
            regularity: None,
            stationarity: None,
            certificate: None,
            witness: None,
            suite: None,
            diagnostics: Vec::new(),
            timings: None,
            summary: Vec::new(),
        }
    }

    /// Records a failure. The first non-`Ok` status wins.
    pub fn fail(&mut self, status: Status, message: impl Into<String>) {
        if self.status == Status::Ok {
            self.status = status;
        }
        let message = message.into();
        self.summary.push(format!("error: {message}"));
        self.diagnostics.push(message);
    }

    pub fn to_value(&self) -> Value {
        let mut out = Map::new();
        out.insert("schema".into(), REPORT_SCHEMA.into());
        out.insert("tool_version".into(), TOOL_VERSION.into());
        out.insert("command".into(), self.command.clone());
        out.insert("status".into(), self.status.label().into());
        out.insert("exit_code".into(), self.status.exit_code().into());
        if let Some(tol) = &self.tolerances {
            out.insert("tolerances".into(), tolerances(tol));
        }
        for (key, section) in [
            ("regularity", &self.regularity),
            ("stationarity", &self.stationarity),
            ("certificate", &self.certificate),
            ("witness", &self.witness),
            ("suite", &self.suite),
        ] {
            if let Some(v) = section {
                out.insert(key.into(), v.clone());
            }
        }
        out.insert("diagnostics".into(), json!(self.diagnostics));
        if let Some(t) = &self.timings {
            out.insert("timings".into(), Value::Object(t.clone()));
        }
        Value::Object(out)
    }

    pub fn to_json(&self) -> String {
        to_json(&self.to_value())
    }

    pub fn summary_text(&self) -> String {
        let mut text = self.summary.join("\n");
        if !text.is_empty() {
            text.push('\n');
        }
        text.push_str(&format!(
            "status: {} (exit {})\n",
            self.status.label(),
            self.status.exit_code()
        ));
        text
    }
}

/// Pretty JSON with 17-significant-digit reals and a trailing newline.
pub fn to_json(value: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SignificantDigits::default());
    serde::Serialize::serialize(value, &mut ser).expect("serializing a Value into memory");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

#[derive(Default)]
struct SignificantDigits {
    pretty: PrettyFormatter<'static>,
}

impl Formatter for SignificantDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.pretty.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.pretty.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(writer)
    }
}

pub fn real(x: f64) -> Value {
    // Value::from maps non-finite floats to null.
    Value::from(x)
}

pub fn vector(v: &Vector) -> Value {
    Value::Array(v.iter().copied().map(real).collect())
}

/// Row-major nested arrays.
pub fn matrix(m: &Mat) -> Value {
    Value::Array(
        m.row_iter()
            .map(|row| Value::Array(row.iter().copied().map(real).collect()))
            .collect(),
    )
}

/// One array per column, i.e. per basis vector.
pub fn columns(m: &Mat) -> Value {
    Value::Array(
        m.column_iter()
            .map(|col| Value::Array(col.iter().copied().map(real).collect()))
            .collect(),
    )
}

pub fn tolerances(tol: &Tolerances) -> Value {
    json!({
        "rank_rel": real(tol.rank_rel),
        "residual_abs": real(tol.residual_abs),
        "ortho": real(tol.ortho),
    })
}

pub fn regularity(r: &RegularityReport) -> Value {
    let verdict = match &r.generalized_regular_verdict {
        GeneralizedRegularVerdict::Confirmed { samples } => {
            json!({ "verdict": "confirmed", "samples": samples })
        }
        GeneralizedRegularVerdict::Refuted { witness } => {
            json!({ "verdict": "refuted", "witness": vector(witness) })
        }
        GeneralizedRegularVerdict::Unknown => json!({ "verdict": "unknown" }),
    };
    json!({
        "point": vector(&r.point),
        "constraint_residual": real(r.constraint_residual),
        "on_constraint": r.on_constraint,
        "rank": r.rank,
        "m": r.m,
        "regular": r.regular,
        "generalized_regular": verdict,
        "tangent_basis": columns(r.tangent_basis.matrix()),
    })
}

pub fn verdict_label(v: &GeneralizedRegularVerdict) -> &'static str {
    match v {
        GeneralizedRegularVerdict::Confirmed { .. } => "confirmed",
        GeneralizedRegularVerdict::Refuted { .. } => "refuted",
        GeneralizedRegularVerdict::Unknown => "unknown",
    }
}

pub fn stationarity(
    c: &StationarityCheck,
    iterations: Option<usize>,
    converged: Option<bool>,
) -> Value {
    let mut v = json!({
        "point": vector(&c.point),
        "constraint_residual": real(c.constraint_residual),
        "tangent_residual": real(c.tangent_residual),
        "is_critical": c.is_critical,
    });
    if let Some(it) = iterations {
        v["iterations"] = it.into();
    }
    if let Some(conv) = converged {
        v["converged"] = conv.into();
    }
    v
}

pub fn certificate(c: &MultiplierCertificate) -> Value {
    match c {
        MultiplierCertificate::UniqueRegular { l } => json!({
            "kind": "unique_regular",
            "l": vector(l),
        }),
        MultiplierCertificate::IllPosed {
            l,
            l1,
            alternative_inverse,
            witness,
            l_at_witness,
            l1_at_witness,
            gap,
        } => json!({
            "kind": "ill_posed",
            "l": vector(l),
            "l1": vector(l1),
            "alternative_inverse": matrix(alternative_inverse),
            "witness": vector(witness),
            "l_at_witness": real(*l_at_witness),
            "l1_at_witness": real(*l1_at_witness),
            "gap": real(*gap),
        }),
    }
}

/// Every generalized inverse gives the zero functional when `f′(x) = 0`.
pub fn zero_gradient_certificate(m: usize) -> Value {
    json!({ "kind": "zero_gradient", "l": vector(&Vector::zeros(m)) })
}

pub fn orthogonal_witness(w: &OrthogonalWitness) -> Value {
    json!({
        "e_star": vector(&w.e_star),
        "tangent_defect": real(w.tangent_defect),
        "gradient_null_defect": real(w.gradient_null_defect),
    })
}

pub fn format_vector(v: &Vector) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.10}")).collect();
    format!("({})", parts.join(", "))
}
