//! Trace and report files.
//!
//! Two encodings are supported for each:
//!
//! - CSV, with a fixed versioned first line (`# proxcert-trace v1` or
//!   `# proxcert-report v1`). Trace files carry their metadata as JSON on a
//!   second comment line `# meta {...}`.
//! - JSON lines, one self-describing object per line, each with a
//!   `schema_version` field; a trace starts with a `"kind": "meta"` line.
//!
//! Floats are written in the shortest decimal form that parses back to the
//! same bits, so a re-read trace certifies exactly like the original.
//! Non-finite values are written as `inf`, `-inf`, `NaN` in CSV and as those
//! strings in JSON.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::certificates::{CertificateName, CertificateReport, Certification};
use crate::harness::ProblemSpec;
use crate::solvers::{IterationRecord, Variant};
use crate::{Error, Result, Vector};

pub const SCHEMA_VERSION: u32 = 1;
pub const TRACE_MAGIC: &str = "# proxcert-trace v1";
pub const REPORT_MAGIC: &str = "# proxcert-report v1";
const TRACE_HEADER: &str = "k,f_y,gap,grad_map_norm,accepted,energy,x,y";
const REPORT_HEADER: &str = "k,name,lhs,rhs,slack,pass";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    JsonLines,
}

impl Format {
    pub fn as_str(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::JsonLines => "json-lines",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json-lines" | "jsonl" => Ok(Format::JsonLines),
            _ => Err(Error::RejectedConfig(format!(
                "unknown format '{s}'; valid formats: csv, json-lines"
            ))),
        }
    }
}

/// Everything needed to rebuild the run that produced a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub problem: ProblemSpec,
    pub problem_hash: String,
    pub solver: Variant,
    pub alpha: f64,
    pub step: f64,
    pub max_iters: usize,
    pub grad_map_tol: f64,
    /// Reference optimum used for the gap and energy columns, if any.
    pub f_star: Option<f64>,
    /// Whether `x` and `y` are stored per row.
    pub iterates: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub meta: TraceMeta,
    /// Without stored iterates, `x` and `y` are empty vectors.
    pub records: Vec<IterationRecord>,
}

fn float_json(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::String(v.to_string())
    }
}

fn opt_float_json(v: Option<f64>) -> Value {
    v.map_or(Value::Null, float_json)
}

fn parse_float(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Format(format!("bad number '{s}' in {what}")))
}

fn json_float(v: &Value, what: &str) -> Result<f64> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| Error::Format(format!("bad number in {what}"))),
        Value::String(s) => parse_float(s, what),
        _ => Err(Error::Format(format!("expected a number for {what}"))),
    }
}

fn json_opt_float(v: Option<&Value>, what: &str) -> Result<Option<f64>> {
    match v {
        None | Some(Value::Null) => Ok(None),
        Some(v) => json_float(v, what).map(Some),
    }
}

fn join_vector(v: &Vector) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

fn split_vector(s: &str, what: &str) -> Result<Vector> {
    let vals = s
        .split_whitespace()
        .map(|t| parse_float(t, what))
        .collect::<Result<Vec<_>>>()?;
    Ok(Vector::from_vec(vals))
}

fn opt_to_string(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

pub fn write_trace<W: Write>(out: &mut W, trace: &Trace, format: Format) -> Result<()> {
    let iterates = trace.meta.iterates;
    match format {
        Format::Csv => {
            writeln!(out, "{TRACE_MAGIC}")?;
            let meta = serde_json::to_string(&trace.meta).map_err(|e| Error::Format(e.to_string()))?;
            writeln!(out, "# meta {meta}")?;
            writeln!(out, "{TRACE_HEADER}")?;
            for r in &trace.records {
                let accepted = match r.accepted {
                    Some(true) => "1",
                    Some(false) => "0",
                    None => "",
                };
                let (x, y) = if iterates {
                    (join_vector(&r.x), join_vector(&r.y))
                } else {
                    (String::new(), String::new())
                };
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    r.k,
                    r.f_y,
                    opt_to_string(r.gap),
                    r.grad_map_norm,
                    accepted,
                    opt_to_string(r.energy),
                    x,
                    y
                )?;
            }
        }
        Format::JsonLines => {
            let mut meta = serde_json::to_value(&trace.meta).map_err(|e| Error::Format(e.to_string()))?;
            let obj = meta.as_object_mut().expect("meta serializes to an object");
            obj.insert("schema_version".into(), json!(SCHEMA_VERSION));
            obj.insert("kind".into(), json!("meta"));
            writeln!(out, "{meta}")?;
            for r in &trace.records {
                let mut row = Map::new();
                row.insert("schema_version".into(), json!(SCHEMA_VERSION));
                row.insert("k".into(), json!(r.k));
                row.insert("f_y".into(), float_json(r.f_y));
                row.insert("gap".into(), opt_float_json(r.gap));
                row.insert("grad_map_norm".into(), float_json(r.grad_map_norm));
                row.insert("accepted".into(), json!(r.accepted));
                row.insert("energy".into(), opt_float_json(r.energy));
                if iterates {
                    let vec = |v: &Vector| Value::Array(v.iter().map(|&c| float_json(c)).collect());
                    row.insert("x".into(), vec(&r.x));
                    row.insert("y".into(), vec(&r.y));
                }
                writeln!(out, "{}", Value::Object(row))?;
            }
        }
    }
    Ok(())
}

/// Reads either encoding, detected from the first line.
pub fn read_trace<R: BufRead>(input: R) -> Result<Trace> {
    let mut lines = input.lines();
    let first = match lines.next() {
        Some(l) => l?,
        None => return Err(Error::Format("empty trace file".into())),
    };
    if first.starts_with("# proxcert-trace") {
        if first.trim_end() != TRACE_MAGIC {
            return Err(Error::Format(format!(
                "unsupported trace version '{}', expected '{TRACE_MAGIC}'",
                first.trim_end()
            )));
        }
        read_csv_trace(lines)
    } else if first.trim_start().starts_with('{') {
        read_jsonl_trace(&first, lines)
    } else {
        Err(Error::Format("not a proxcert trace file".into()))
    }
}

fn read_csv_trace<I: Iterator<Item = std::io::Result<String>>>(mut lines: I) -> Result<Trace> {
    let meta_line = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::Format("trace is missing its meta line".into()))?;
    let meta_json = meta_line
        .strip_prefix("# meta ")
        .ok_or_else(|| Error::Format("second line must be '# meta {...}'".into()))?;
    let meta: TraceMeta = serde_json::from_str(meta_json).map_err(|e| Error::Format(format!("bad meta: {e}")))?;
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim_end() != TRACE_HEADER {
        return Err(Error::Format(format!("unexpected trace header '{header}'")));
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let what = format!("trace row {}", i + 1);
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 8 {
            return Err(Error::Format(format!("{what}: expected 8 columns, got {}", cols.len())));
        }
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                parse_float(s, &what).map(Some)
            }
        };
        let accepted = match cols[4] {
            "" => None,
            "1" => Some(true),
            "0" => Some(false),
            other => return Err(Error::Format(format!("{what}: bad accepted flag '{other}'"))),
        };
        records.push(IterationRecord {
            k: cols[0]
                .parse()
                .map_err(|_| Error::Format(format!("{what}: bad k '{}'", cols[0])))?,
            f_y: parse_float(cols[1], &what)?,
            gap: opt(cols[2])?,
            grad_map_norm: parse_float(cols[3], &what)?,
            accepted,
            energy: opt(cols[5])?,
            slacks: Vec::new(),
            x: split_vector(cols[6], &what)?,
            y: split_vector(cols[7], &what)?,
        });
    }
    Ok(Trace { meta, records })
}

fn check_schema(obj: &Map<String, Value>, what: &str) -> Result<()> {
    match obj.get("schema_version").and_then(Value::as_u64) {
        Some(v) if v == u64::from(SCHEMA_VERSION) => Ok(()),
        Some(v) => Err(Error::Format(format!(
            "{what}: unsupported schema_version {v}, expected {SCHEMA_VERSION}"
        ))),
        None => Err(Error::Format(format!("{what}: missing schema_version"))),
    }
}

fn parse_object(line: &str, what: &str) -> Result<Map<String, Value>> {
    match serde_json::from_str::<Value>(line) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(Error::Format(format!("{what}: expected a JSON object"))),
        Err(e) => Err(Error::Format(format!("{what}: {e}"))),
    }
}

fn json_vector(v: Option<&Value>, what: &str) -> Result<Vector> {
    match v {
        None => Ok(Vector::zeros(0)),
        Some(Value::Array(items)) => Ok(Vector::from_vec(
            items.iter().map(|c| json_float(c, what)).collect::<Result<Vec<_>>>()?,
        )),
        Some(_) => Err(Error::Format(format!("{what}: iterate must be an array"))),
    }
}

fn read_jsonl_trace<I: Iterator<Item = std::io::Result<String>>>(first: &str, lines: I) -> Result<Trace> {
    let mut meta_obj = parse_object(first, "meta line")?;
    check_schema(&meta_obj, "meta line")?;
    if meta_obj.get("kind").and_then(Value::as_str) != Some("meta") {
        return Err(Error::Format("first line must have kind \"meta\"".into()));
    }
    meta_obj.remove("schema_version");
    meta_obj.remove("kind");
    let meta: TraceMeta =
        serde_json::from_value(Value::Object(meta_obj)).map_err(|e| Error::Format(format!("bad meta: {e}")))?;
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let what = format!("trace row {}", i + 1);
        let obj = parse_object(&line, &what)?;
        check_schema(&obj, &what)?;
        let field = |name: &str| {
            obj.get(name)
                .ok_or_else(|| Error::Format(format!("{what}: missing field '{name}'")))
        };
        let accepted = match obj.get("accepted") {
            None | Some(Value::Null) => None,
            Some(Value::Bool(b)) => Some(*b),
            Some(_) => return Err(Error::Format(format!("{what}: accepted must be a boolean"))),
        };
        records.push(IterationRecord {
            k: field("k")?
                .as_u64()
                .ok_or_else(|| Error::Format(format!("{what}: bad k")))? as usize,
            f_y: json_float(field("f_y")?, &what)?,
            gap: json_opt_float(obj.get("gap"), &what)?,
            grad_map_norm: json_float(field("grad_map_norm")?, &what)?,
            accepted,
            energy: json_opt_float(obj.get("energy"), &what)?,
            slacks: Vec::new(),
            x: json_vector(obj.get("x"), &what)?,
            y: json_vector(obj.get("y"), &what)?,
        });
    }
    Ok(Trace { meta, records })
}

/// A report row; `k` is `None` for a certificate that was not applicable.
#[derive(Debug, Clone, PartialEq)]
pub enum ReportRow {
    Checked(CertificateReport),
    NotApplicable { name: CertificateName, reason: String },
}

pub fn report_rows(cert: &Certification) -> Vec<ReportRow> {
    let mut rows: Vec<ReportRow> = cert
        .not_applicable
        .iter()
        .map(|(name, reason)| ReportRow::NotApplicable {
            name: *name,
            reason: reason.clone(),
        })
        .collect();
    rows.extend(cert.reports.iter().cloned().map(ReportRow::Checked));
    rows
}

pub fn write_report<W: Write>(out: &mut W, rows: &[ReportRow], format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            writeln!(out, "{REPORT_MAGIC}")?;
            writeln!(out, "{REPORT_HEADER}")?;
            for row in rows {
                match row {
                    ReportRow::Checked(r) => writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        r.k,
                        r.name,
                        r.lhs,
                        r.rhs,
                        r.slack,
                        if r.pass { "pass" } else { "fail" }
                    )?,
                    // The reason is free text, so it is kept out of the columns.
                    ReportRow::NotApplicable { name, .. } => writeln!(out, ",{name},,,,not_applicable")?,
                }
            }
        }
        Format::JsonLines => {
            for row in rows {
                let v = match row {
                    ReportRow::Checked(r) => json!({
                        "schema_version": SCHEMA_VERSION,
                        "k": r.k,
                        "name": r.name,
                        "lhs": float_json(r.lhs),
                        "rhs": float_json(r.rhs),
                        "slack": float_json(r.slack),
                        "pass": if r.pass { "pass" } else { "fail" },
                    }),
                    ReportRow::NotApplicable { name, reason } => json!({
                        "schema_version": SCHEMA_VERSION,
                        "k": null,
                        "name": name,
                        "pass": "not_applicable",
                        "reason": reason,
                    }),
                };
                writeln!(out, "{v}")?;
            }
        }
    }
    Ok(())
}

/// Reads either report encoding. Reasons for not-applicable rows survive
/// only the JSON-lines encoding.
pub fn read_report<R: BufRead>(input: R) -> Result<Vec<ReportRow>> {
    let mut lines = input.lines();
    let first = match lines.next() {
        Some(l) => l?,
        None => return Ok(Vec::new()),
    };
    let mut rows = Vec::new();
    if first.starts_with("# proxcert-report") {
        if first.trim_end() != REPORT_MAGIC {
            return Err(Error::Format(format!("unsupported report version '{}'", first.trim_end())));
        }
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim_end() != REPORT_HEADER {
            return Err(Error::Format(format!("unexpected report header '{header}'")));
        }
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 6 {
                return Err(Error::Format(format!("report row '{line}' needs 6 columns")));
            }
            let name: CertificateName = cols[1].parse()?;
            let row = match cols[5] {
                "not_applicable" => ReportRow::NotApplicable {
                    name,
                    reason: String::new(),
                },
                verdict @ ("pass" | "fail") => ReportRow::Checked(CertificateReport {
                    k: cols[0]
                        .parse()
                        .map_err(|_| Error::Format(format!("bad k in report row '{line}'")))?,
                    name,
                    lhs: parse_float(cols[2], "report")?,
                    rhs: parse_float(cols[3], "report")?,
                    slack: parse_float(cols[4], "report")?,
                    pass: verdict == "pass",
                }),
                other => return Err(Error::Format(format!("bad verdict '{other}'"))),
            };
            rows.push(row);
        }
    } else {
        for line in std::iter::once(Ok(first)).chain(lines) {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let obj = parse_object(&line, "report row")?;
            check_schema(&obj, "report row")?;
            let name: CertificateName = obj
                .get("name")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::Format("report row without name".into()))?
                .parse()?;
            let row = match obj.get("pass").and_then(Value::as_str) {
                Some("not_applicable") => ReportRow::NotApplicable {
                    name,
                    reason: obj.get("reason").and_then(Value::as_str).unwrap_or("").to_string(),
                },
                Some(verdict @ ("pass" | "fail")) => ReportRow::Checked(CertificateReport {
                    k: obj
                        .get("k")
                        .and_then(Value::as_u64)
                        .ok_or_else(|| Error::Format("report row without k".into()))? as usize,
                    name,
                    lhs: json_float(obj.get("lhs").unwrap_or(&Value::Null), "lhs")?,
                    rhs: json_float(obj.get("rhs").unwrap_or(&Value::Null), "rhs")?,
                    slack: json_float(obj.get("slack").unwrap_or(&Value::Null), "slack")?,
                    pass: verdict == "pass",
                }),
                _ => return Err(Error::Format("report row with bad verdict".into())),
            };
            rows.push(row);
        }
    }
    Ok(rows)
}
