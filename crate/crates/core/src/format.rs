//! JSON input files and deterministic number output.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{LiabilityData, Network};

/// Significant digits kept in every emitted number.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds to 12 significant digits. Negative zero becomes zero.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return if v == 0.0 { 0.0 } else { v };
    }
    let r: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v).parse().unwrap_or(v);
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Shortest decimal text of [`round_sig`]`(v)`.
pub fn fmt_num(v: f64) -> String {
    format!("{}", round_sig(v))
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(num) if !(num.is_i64() || num.is_u64()) => {
            if let Some(f) = num.as_f64() {
                if let Some(n) = serde_json::Number::from_f64(round_sig(f)) {
                    *num = n;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with every float rounded by [`round_sig`].
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::input(e.to_string()))?;
    round_value(&mut v);
    serde_json::to_string_pretty(&v).map_err(|e| Error::input(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub n: usize,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    pub w: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiabilityFile {
    #[serde(rename = "W")]
    pub liabilities: Vec<Vec<f64>>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub u: Vec<f64>,
}

/// Contents of an input file.
#[derive(Debug, Clone)]
pub enum Input {
    Network { net: Network, c: Option<Vec<f64>> },
    Liabilities(LiabilityData),
}

impl NetworkFile {
    pub fn new(net: &Network, c: Option<&[f64]>) -> Self {
        NetworkFile { n: net.n(), p: net.rows(), w: net.w().to_vec(), c: c.map(<[f64]>::to_vec) }
    }

    pub fn into_network(self) -> Result<(Network, Option<Vec<f64>>)> {
        if self.p.len() != self.n {
            return Err(Error::Dimension { what: "P rows", expected: self.n, found: self.p.len() });
        }
        let net = Network::from_rows(&self.p, self.w)?;
        if let Some(c) = &self.c {
            net.check_vector("c", c)?;
        }
        Ok((net, self.c))
    }
}

fn matrix(rows: &[Vec<f64>], what: &'static str) -> Result<nalgebra::DMatrix<f64>> {
    let n = rows.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::Dimension { what, expected: n, found: bad.len() });
    }
    Ok(nalgebra::DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl LiabilityFile {
    pub fn into_data(self) -> Result<LiabilityData> {
        LiabilityData::new(matrix(&self.liabilities, "W row")?, self.a, self.b, self.u)
    }
}

/// Parses a network or liability file, told apart by the presence of `"P"`
/// or `"W"`.
pub fn parse_input(text: &str) -> Result<Input> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::input(format!("bad JSON: {e}")))?;
    let obj = v.as_object().ok_or_else(|| Error::input("input must be a JSON object"))?;
    let bad = |e: serde_json::Error| Error::input(format!("bad input file: {e}"));
    match (obj.contains_key("P"), obj.contains_key("W")) {
        (true, false) => {
            let file: NetworkFile = serde_json::from_value(v).map_err(bad)?;
            let (net, c) = file.into_network()?;
            Ok(Input::Network { net, c })
        }
        (false, true) => {
            let file: LiabilityFile = serde_json::from_value(v).map_err(bad)?;
            Ok(Input::Liabilities(file.into_data()?))
        }
        (true, true) => Err(Error::input("input has both \"P\" and \"W\"")),
        (false, false) => Err(Error::input("input has neither \"P\" nor \"W\"")),
    }
}

/// Comma-separated list of numbers, as taken by `--c0`, `--q` and friends.
pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::input(format!("not a finite number: {s:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(fmt_num(0.1 + 0.2), "0.3");
        assert_eq!(fmt_num(4.380540540540541), "4.38054054054");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(2.0), "2");
        assert_eq!(fmt_num(1e-20), "0.00000000000000000001");
        assert_eq!(round_sig(123456789012345.0), 123456789012000.0);
    }

    #[test]
    fn json_rounds_floats_only() {
        #[derive(Serialize)]
        struct S {
            k: usize,
            v: Vec<f64>,
        }
        let s = to_json(&S { k: 3, v: vec![1.0 / 3.0, -0.0] }).unwrap();
        assert!(s.contains("\"k\": 3"));
        assert!(s.contains("0.333333333333"));
        assert!(!s.contains("0.3333333333333"));
    }

    #[test]
    fn detects_file_kind() {
        let net = r#"{"n": 2, "P": [[0, 1], [1, 0]], "w": [1, 1], "c": [0.5, -0.5]}"#;
        match parse_input(net).unwrap() {
            Input::Network { net, c } => {
                assert_eq!(net.n(), 2);
                assert_eq!(c, Some(vec![0.5, -0.5]));
            }
            other => panic!("{other:?}"),
        }
        let liab = r#"{"W": [[0, 4], [4, 0]], "a": [3, 1], "b": [1, 1], "u": [1, 0]}"#;
        assert!(matches!(parse_input(liab).unwrap(), Input::Liabilities(_)));
        assert!(parse_input(r#"{"n": 1}"#).is_err());
        assert!(parse_input(r#"{"n": 2, "P": [[0]], "w": [1]}"#).is_err());
        assert!(parse_input("[1]").is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list("5, 2,2").unwrap(), vec![5.0, 2.0, 2.0]);
        assert_eq!(parse_list("-1e-3").unwrap(), vec![-0.001]);
        assert!(parse_list("1,,2").is_err());
        assert!(parse_list("nan").is_err());
    }
}
