//! Parameter configuration space files.
//!
//! ```text
//! # comment
//! gluehist [40, 250] [50]i
//! adjustglue [0.3, 0.9] [0.7]
//! freq {0.0, 0.1, 0.2} [0.0]
//! ```

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {msg}")]
pub struct PcsError {
    pub line: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ParamKind {
    Integer {
        lo: i64,
        hi: i64,
        default: i64,
    },
    Real {
        lo: f64,
        hi: f64,
        default: f64,
    },
    Categorical {
        values: Vec<String>,
        default: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDef {
    pub name: String,
    pub kind: ParamKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Cat(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Real(v) => write!(f, "{v:?}"),
            ParamValue::Cat(v) => f.write_str(v),
        }
    }
}

impl ParamDef {
    pub fn default_value(&self) -> ParamValue {
        match &self.kind {
            ParamKind::Integer { default, .. } => ParamValue::Int(*default),
            ParamKind::Real { default, .. } => ParamValue::Real(*default),
            ParamKind::Categorical { default, .. } => ParamValue::Cat(default.clone()),
        }
    }

    pub fn is_legal(&self, v: &ParamValue) -> bool {
        match (&self.kind, v) {
            (ParamKind::Integer { lo, hi, .. }, ParamValue::Int(x)) => lo <= x && x <= hi,
            (ParamKind::Real { lo, hi, .. }, ParamValue::Real(x)) => lo <= x && x <= hi,
            (ParamKind::Categorical { values, .. }, ParamValue::Cat(x)) => values.contains(x),
            _ => false,
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> ParamValue {
        match &self.kind {
            ParamKind::Integer { lo, hi, .. } => ParamValue::Int(rng.gen_range(*lo..=*hi)),
            ParamKind::Real { lo, hi, .. } => ParamValue::Real(if lo == hi {
                *lo
            } else {
                rng.gen_range(*lo..=*hi)
            }),
            ParamKind::Categorical { values, .. } => {
                ParamValue::Cat(values[rng.gen_range(0..values.len())].clone())
            }
        }
    }

    /// Parses a flag value for this parameter.
    pub fn parse_value(&self, s: &str) -> Option<ParamValue> {
        let v = match &self.kind {
            ParamKind::Integer { .. } => ParamValue::Int(s.parse().ok()?),
            ParamKind::Real { .. } => ParamValue::Real(s.parse().ok()?),
            ParamKind::Categorical { .. } => ParamValue::Cat(s.to_string()),
        };
        self.is_legal(&v).then_some(v)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    pub params: Vec<ParamDef>,
}

impl ParamSpace {
    pub fn get(&self, name: &str) -> Option<&ParamDef> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Number of distinct configurations, or `None` if any parameter is real
    /// with a nonempty range.
    pub fn finite_size(&self) -> Option<u128> {
        self.params.iter().try_fold(1u128, |acc, p| {
            let n = match &p.kind {
                ParamKind::Integer { lo, hi, .. } => (hi - lo) as u128 + 1,
                ParamKind::Real { lo, hi, .. } => (lo == hi).then_some(1)?,
                ParamKind::Categorical { values, .. } => values.len() as u128,
            };
            Some(acc.saturating_mul(n))
        })
    }
}

fn split_bracket(s: &str, open: char, close: char) -> Option<(&str, &str)> {
    let s = s.trim_start();
    let rest = s.strip_prefix(open)?;
    let end = rest.find(close)?;
    Some((&rest[..end], &rest[end + 1..]))
}

fn parse_line(line: &str) -> Result<ParamDef, String> {
    let (name, rest) = line
        .split_once(char::is_whitespace)
        .ok_or_else(|| "expected `name range [default]`".to_string())?;
    let rest = rest.trim_start();
    let (def_body, tail) = if rest.starts_with('{') {
        let (body, tail) = split_bracket(rest, '{', '}').ok_or("unterminated value set")?;
        let values: Vec<String> = body.split(',').map(|v| v.trim().to_string()).collect();
        if values.iter().any(String::is_empty) {
            return Err("empty categorical value".into());
        }
        let (d, tail) = split_bracket(tail, '[', ']').ok_or("missing [default]")?;
        let d = d.trim().to_string();
        if !values.contains(&d) {
            return Err(format!("default {d} not in value set"));
        }
        let mut seen = std::collections::HashSet::new();
        if !values.iter().all(|v| seen.insert(v)) {
            return Err("duplicate categorical value".into());
        }
        (ParamKind::Categorical { values, default: d }, tail)
    } else {
        let (range, tail) = split_bracket(rest, '[', ']').ok_or("expected [lo, hi] or {values}")?;
        let (lo, hi) = range.split_once(',').ok_or("range needs lo, hi")?;
        let (d, tail) = split_bracket(tail, '[', ']').ok_or("missing [default]")?;
        let (lo, hi, d) = (lo.trim(), hi.trim(), d.trim());
        match tail.trim() {
            "i" => {
                let p = |s: &str| s.parse::<i64>().map_err(|_| format!("not an integer: {s}"));
                let (lo, hi, d) = (p(lo)?, p(hi)?, p(d)?);
                if lo > hi {
                    return Err("lo exceeds hi".into());
                }
                if d < lo || d > hi {
                    return Err(format!("default {d} outside [{lo}, {hi}]"));
                }
                (ParamKind::Integer { lo, hi, default: d }, "")
            }
            "" => {
                let p = |s: &str| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| format!("not a number: {s}"))
                };
                let (lo, hi, d) = (p(lo)?, p(hi)?, p(d)?);
                if lo > hi {
                    return Err("lo exceeds hi".into());
                }
                if d < lo || d > hi {
                    return Err(format!("default {d} outside [{lo}, {hi}]"));
                }
                (ParamKind::Real { lo, hi, default: d }, "")
            }
            other => return Err(format!("unexpected trailing {other:?}")),
        }
    };
    if !tail.trim().is_empty() {
        return Err(format!("unexpected trailing {:?}", tail.trim()));
    }
    Ok(ParamDef {
        name: name.to_string(),
        kind: def_body,
    })
}

pub fn parse_pcs(text: &str) -> Result<ParamSpace, PcsError> {
    let mut space = ParamSpace::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| PcsError { line: i + 1, msg };
        let def = parse_line(line).map_err(err)?;
        if space.get(&def.name).is_some() {
            return Err(err(format!("duplicate parameter {}", def.name)));
        }
        space.params.push(def);
    }
    Ok(space)
}

pub fn to_pcs(space: &ParamSpace) -> String {
    let mut out = String::new();
    for p in &space.params {
        let line = match &p.kind {
            ParamKind::Integer { lo, hi, default } => {
                format!("{} [{lo}, {hi}] [{default}]i", p.name)
            }
            ParamKind::Real { lo, hi, default } => {
                format!("{} [{lo:?}, {hi:?}] [{default:?}]", p.name)
            }
            ParamKind::Categorical { values, default } => {
                format!("{} {{{}}} [{default}]", p.name, values.join(", "))
            }
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}
