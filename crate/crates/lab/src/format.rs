//! Number formatting and the CSV / JSON renderers.

use std::fmt::Write as _;
use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{Map, Value};
use wva_core::experiments::FitResult;

pub const SCHEMA: &str = "wva-lab/1";
pub const BASIS: &str =
    "Dicke basis index k holds m = j - k (m descending); joint states are system-major";

/// Prints 12 significant digits with trailing zeros trimmed. Scientific notation applies below `1e-4` and from `1e12` up.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let a = x.abs();
    if !(1e-4..1e12).contains(&a) {
        let s = format!("{x:.11e}");
        let (mantissa, exp) = s.split_once('e').expect("exponent form");
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (11 - a.log10().floor() as i32).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Pretty JSON whose floats go through [`fmt_num`].
struct NumberFormatter {
    inner: PrettyFormatter<'static>,
}

macro_rules! delegate {
    ($($name:ident $(($arg:ident: $ty:ty))?),* $(,)?) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)?) -> io::Result<()> {
                self.inner.$name(w $(, $arg)?)
            }
        )*
    };
}

impl Formatter for NumberFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            w.write_all(fmt_num(value).as_bytes())
        } else {
            w.write_all(b"null")
        }
    }

    delegate!(
        begin_array,
        end_array,
        begin_array_value(first: bool),
        end_array_value,
        begin_object,
        end_object,
        begin_object_key(first: bool),
        begin_object_value,
        end_object_value,
    );
}

pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut buf,
        NumberFormatter {
            inner: PrettyFormatter::new(),
        },
    );
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitRow {
    pub x: String,
    pub y: String,
    pub fit: FitResult,
}

/// Everything a command prints.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: &'static str,
    pub parameters: Vec<(String, Value)>,
    pub summary: Vec<(String, Value)>,
    pub table: Option<Table>,
    pub fits: Vec<FitRow>,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            parameters: Vec::new(),
            summary: Vec::new(),
            table: None,
            fits: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.parameters.push((key.into(), value.into()));
        self
    }

    pub fn put(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.summary.push((key.into(), value.into()));
        self
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut root = Map::new();
        root.insert("schema".into(), SCHEMA.into());
        root.insert("basis".into(), BASIS.into());
        root.insert("command".into(), self.command.into());
        root.insert(
            "parameters".into(),
            Value::Object(self.parameters.iter().cloned().collect()),
        );
        root.insert(
            "summary".into(),
            Value::Object(self.summary.iter().cloned().collect()),
        );
        if let Some(t) = &self.table {
            let rows = t
                .rows
                .iter()
                .map(|r| Value::Object(t.columns.iter().cloned().zip(r.iter().cloned()).collect()))
                .collect();
            root.insert("records".into(), Value::Array(rows));
        }
        if !self.fits.is_empty() {
            let fits = self
                .fits
                .iter()
                .map(|f| {
                    let mut m = Map::new();
                    m.insert("x".into(), f.x.clone().into());
                    m.insert("y".into(), f.y.clone().into());
                    m.insert("slope".into(), f.fit.slope.into());
                    m.insert("intercept".into(), f.fit.intercept.into());
                    m.insert("r_squared".into(), f.fit.r_squared.into());
                    m.insert("points_used".into(), f.fit.points_used.into());
                    Value::Object(m)
                })
                .collect();
            root.insert("fits".into(), Value::Array(fits));
        }
        to_json(&Value::Object(root))
    }

    /// Table rows (or a one-row summary), then `#`-prefixed trailer rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match &self.table {
            Some(t) => {
                push_row(&mut out, t.columns.iter().map(|c| Value::from(c.as_str())));
                for r in &t.rows {
                    push_row(&mut out, r.iter().cloned());
                }
                if !self.fits.is_empty() {
                    out.push_str("# fit_columns,x,y,slope,intercept,r_squared,points_used\n");
                }
                for f in &self.fits {
                    let _ = writeln!(
                        out,
                        "# fit,{},{},{},{},{},{}",
                        f.x,
                        f.y,
                        fmt_num(f.fit.slope),
                        fmt_num(f.fit.intercept),
                        fmt_num(f.fit.r_squared),
                        f.fit.points_used
                    );
                }
                for (k, v) in &self.summary {
                    let _ = writeln!(out, "# summary,{k},{}", cell(v));
                }
            }
            None => {
                push_row(
                    &mut out,
                    self.summary.iter().map(|(k, _)| Value::from(k.as_str())),
                );
                push_row(&mut out, self.summary.iter().map(|(_, v)| v.clone()));
            }
        }
        for (k, v) in &self.parameters {
            let _ = writeln!(out, "# parameter,{k},{}", cell(v));
        }
        let _ = writeln!(out, "# schema,{SCHEMA}");
        out
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => fmt_num(x),
            _ => n.to_string(),
        },
        Value::String(s) if s.contains([',', '"', '\n']) => {
            format!("\"{}\"", s.replace('"', "\"\""))
        }
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn push_row(out: &mut String, cells: impl Iterator<Item = Value>) {
    let line: Vec<String> = cells.map(|c| cell(&c)).collect();
    out.push_str(&line.join(","));
    out.push('\n');
}

/// `Some(x)` as a number, `None` as null.
pub fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, Value::from)
}
