//! Serialisation helpers shared by the JSON and CSV outputs: exact
//! rationals, 12-digit floats and the provenance envelope.

use num_rational::BigRational;
use serde::{Serialize, Serializer};
use serde_json::Value;
use std::collections::BTreeMap;

/// Exact rationals are written as `"num/den"` strings (or `"num"`).
pub fn ser_rational<S: Serializer>(x: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&rational_string(x))
}

pub fn rational_string(x: &BigRational) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// `x` with 12 significant digits, in plain notation for moderate
/// magnitudes and scientific notation otherwise.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..15).contains(&e) {
        let decimals = (11 - e).max(0) as usize;
        let s = format!("{:.*}", decimals, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{:.11e}", x)
    }
}

/// Rounds `x` to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    fmt_sig(x).parse().unwrap_or(x)
}

/// Rounds every float in a JSON tree to 12 significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().unwrap_or(0.0));
            serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// Conventions echoed into every report.
pub const CONVENTIONS: &[&str] = &[
    "split tori: Vol(o^x x o^x) = 1; field tori: Vol(O_E^x) = 1",
    "g_n constant q^(n+ceil(n/2)-2)(q-1)^2 for n >= 1",
    "division algebra: cyclic model with uniformiser squaring to p",
    "norm of a hyperbolic class: x(t)^2 with x(t) = (|t| + sqrt(t^2-4))/2",
    "Psi sums c_Gamma * 2 sqrt(|t|-2) dPsi(t) over 2 < |t| <= sqrt(x) + 1/sqrt(x)",
    "global constant extracted from the enumerated SL_2(Z) spectrum",
];

/// The common header of every output.
#[derive(Debug, Clone, Serialize)]
pub struct Envelope<T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub conventions: &'static [&'static str],
    pub result: T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(command: &str, seed: u64, config: BTreeMap<String, String>, result: T) -> Self {
        Self {
            tool: "geomatch",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            seed,
            config,
            conventions: CONVENTIONS,
            result,
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        let v = round_json(serde_json::to_value(self)?);
        let mut s = serde_json::to_string_pretty(&v)?;
        s.push('\n');
        Ok(s)
    }

    /// `# key: value` comment lines followed by an RFC 4180 table.
    pub fn to_csv(&self, header: &[&str], rows: &[Vec<String>]) -> std::io::Result<String> {
        let mut out = String::new();
        out.push_str(&format!("# {} {} {}\n", self.tool, self.version, self.command));
        out.push_str(&format!("# seed: {}\n", self.seed));
        for (k, v) in &self.config {
            out.push_str(&format!("# config {k}: {v}\n"));
        }
        for c in self.conventions {
            out.push_str(&format!("# convention: {c}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        out.push_str(&String::from_utf8_lossy(&bytes));
        Ok(out)
    }
}
