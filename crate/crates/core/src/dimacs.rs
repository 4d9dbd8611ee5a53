//! DIMACS CNF reading/writing and SAT-competition solver output parsing.
//!
//! Generated instances describe themselves through `c key=value` comment
//! lines placed before the `p cnf` header. The secret key is only written
//! when explicitly requested.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cipher::CipherParams;
use crate::encoder::{ClauseList, CnfInstance, InstanceMeta, Lit, SboxEncoding};

pub const GENERATOR: &str = concat!("kpasat ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error)]
pub enum DimacsError {
    #[error("missing `p cnf` header")]
    MissingHeader,
    #[error("line {line}: malformed header {text:?}")]
    MalformedHeader { line: usize, text: String },
    #[error("line {line}: invalid literal {token:?}")]
    BadLiteral { line: usize, token: String },
    #[error("line {line}: literal {literal} exceeds declared variable count {num_vars}")]
    LiteralOutOfRange {
        line: usize,
        literal: i64,
        num_vars: u32,
    },
    #[error("last clause is not terminated by 0")]
    UnterminatedClause,
    #[error("header declares {declared} clauses, body has {found}")]
    CountMismatch { declared: usize, found: usize },
    #[error("instance metadata: {0}")]
    BadMetadata(String),
    #[error("solver output: v-lines not terminated by 0")]
    TruncatedModel,
    #[error("solver output: invalid value literal {0:?}")]
    BadModelLiteral(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn hex_list(v: &[u8]) -> String {
    v.iter()
        .map(|x| format!("{x:#x}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn meta_lines(meta: &InstanceMeta, include_key: bool) -> Vec<(String, String)> {
    let p = &meta.params;
    let mut out = vec![
        ("generator".to_string(), GENERATOR.to_string()),
        ("token".into(), meta.token.clone()),
        ("key_token".into(), meta.key_token.clone()),
        ("rounds".into(), p.rounds.to_string()),
        ("rows".into(), p.rows.to_string()),
        ("cols".into(), p.cols.to_string()),
        ("word_bits".into(), p.word_bits.to_string()),
        ("pairs".into(), meta.plaintexts.len().to_string()),
        ("modulus".into(), format!("{:#x}", p.modulus)),
        (
            "mix".into(),
            p.mix_matrix
                .iter()
                .map(|r| hex_list(r))
                .collect::<Vec<_>>()
                .join(";"),
        ),
        ("affine".into(), hex_list(&p.affine_matrix)),
        ("affine_const".into(), format!("{:#x}", p.affine_const)),
        ("rcon_base".into(), format!("{:#x}", p.rcon_base)),
        ("sbox_encoding".into(), meta.sbox_encoding.to_string()),
        ("minimized".into(), meta.minimized.to_string()),
    ];
    for (i, (pt, ct)) in meta.plaintexts.iter().zip(&meta.ciphertexts).enumerate() {
        out.push((format!("plaintext.{i}"), pt.clone()));
        out.push((format!("ciphertext.{i}"), ct.clone()));
    }
    if include_key {
        if let Some(k) = &meta.secret_key {
            out.push(("secret_key".into(), k.clone()));
        }
    }
    out
}

/// Writes `cnf` in DIMACS form: metadata comments, `p cnf L N`, one
/// 0-terminated clause per line.
pub fn write_dimacs<W: Write>(cnf: &CnfInstance, include_key: bool, mut w: W) -> io::Result<()> {
    if let Some(meta) = &cnf.meta {
        for (k, v) in meta_lines(meta, include_key) {
            writeln!(w, "c {k}={v}")?;
        }
    }
    writeln!(w, "p cnf {} {}", cnf.num_vars, cnf.num_clauses())?;
    let mut line = String::with_capacity(128);
    for clause in cnf.clauses.iter() {
        line.clear();
        for l in clause {
            line.push_str(&l.dimacs().to_string());
            line.push(' ');
        }
        line.push_str("0\n");
        w.write_all(line.as_bytes())?;
    }
    w.flush()
}

pub fn to_dimacs_string(cnf: &CnfInstance, include_key: bool) -> String {
    let mut buf = Vec::new();
    write_dimacs(cnf, include_key, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("DIMACS is ASCII")
}

fn parse_u8_list(s: &str) -> Result<Vec<u8>, DimacsError> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            let r = match t.strip_prefix("0x") {
                Some(h) => u8::from_str_radix(h, 16),
                None => t.parse(),
            };
            r.map_err(|_| DimacsError::BadMetadata(format!("bad byte {t:?}")))
        })
        .collect()
}

fn parse_num<T: std::str::FromStr>(
    map: &BTreeMap<String, String>,
    key: &str,
) -> Result<T, DimacsError> {
    let raw = map
        .get(key)
        .ok_or_else(|| DimacsError::BadMetadata(format!("missing {key}")))?;
    let parsed = match raw.strip_prefix("0x") {
        Some(h) => u64::from_str_radix(h, 16)
            .ok()
            .and_then(|v| v.to_string().parse().ok()),
        None => raw.parse().ok(),
    };
    parsed.ok_or_else(|| DimacsError::BadMetadata(format!("bad {key}={raw}")))
}

fn meta_from_comments(map: &BTreeMap<String, String>) -> Result<Option<InstanceMeta>, DimacsError> {
    let Some(token) = map.get("token") else {
        return Ok(None);
    };
    let get = |k: &str| {
        map.get(k)
            .cloned()
            .ok_or_else(|| DimacsError::BadMetadata(format!("missing {k}")))
    };
    let mix = get("mix")?
        .split(';')
        .map(parse_u8_list)
        .collect::<Result<Vec<_>, _>>()?;
    let params = CipherParams {
        rounds: parse_num(map, "rounds")?,
        rows: parse_num(map, "rows")?,
        cols: parse_num(map, "cols")?,
        word_bits: parse_num(map, "word_bits")?,
        modulus: parse_num(map, "modulus")?,
        mix_matrix: mix,
        affine_matrix: parse_u8_list(&get("affine")?)?,
        affine_const: parse_num(map, "affine_const")?,
        rcon_base: parse_num(map, "rcon_base")?,
    };
    params
        .validate()
        .map_err(|e| DimacsError::BadMetadata(e.to_string()))?;
    let pairs: usize = parse_num(map, "pairs")?;
    let mut plaintexts = Vec::with_capacity(pairs);
    let mut ciphertexts = Vec::with_capacity(pairs);
    for i in 0..pairs {
        plaintexts.push(get(&format!("plaintext.{i}"))?);
        ciphertexts.push(get(&format!("ciphertext.{i}"))?);
    }
    Ok(Some(InstanceMeta {
        token: token.clone(),
        key_token: get("key_token")?,
        params,
        sbox_encoding: get("sbox_encoding")?
            .parse::<SboxEncoding>()
            .map_err(DimacsError::BadMetadata)?,
        minimized: parse_num(map, "minimized")?,
        plaintexts,
        ciphertexts,
        secret_key: map.get("secret_key").cloned(),
    }))
}

/// Parses DIMACS text. Comment lines are ignored except `c key=value`
/// metadata, which is recovered when present.
pub fn read_dimacs(text: &str) -> Result<CnfInstance, DimacsError> {
    let mut comments = BTreeMap::new();
    let mut header: Option<(u32, usize)> = None;
    let mut clauses = ClauseList::new();
    let mut current: Vec<Lit> = Vec::new();
    let mut open = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('c') {
            if header.is_none() {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    comments.insert(k.trim().to_string(), v.trim().to_string());
                }
            }
            continue;
        }
        if line.starts_with('p') {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let parsed = match parts.as_slice() {
                ["p", "cnf", v, c] if header.is_none() => v.parse().ok().zip(c.parse().ok()),
                _ => None,
            };
            header = Some(parsed.ok_or_else(|| DimacsError::MalformedHeader {
                line: line_no,
                text: line.to_string(),
            })?);
            continue;
        }
        if line == "%" {
            break;
        }
        let (num_vars, _) = header.ok_or(DimacsError::MissingHeader)?;
        for tok in line.split_whitespace() {
            let v: i64 = tok.parse().map_err(|_| DimacsError::BadLiteral {
                line: line_no,
                token: tok.to_string(),
            })?;
            if v == 0 {
                clauses.push(&current);
                current.clear();
                open = false;
                continue;
            }
            if v.unsigned_abs() > num_vars as u64 {
                return Err(DimacsError::LiteralOutOfRange {
                    line: line_no,
                    literal: v,
                    num_vars,
                });
            }
            current.push(Lit::from_dimacs(v as i32).expect("nonzero"));
            open = true;
        }
    }
    let (num_vars, declared) = header.ok_or(DimacsError::MissingHeader)?;
    if open {
        return Err(DimacsError::UnterminatedClause);
    }
    if clauses.len() != declared {
        return Err(DimacsError::CountMismatch {
            declared,
            found: clauses.len(),
        });
    }
    Ok(CnfInstance {
        num_vars,
        clauses,
        meta: meta_from_comments(&comments)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SolveStatus {
    Sat,
    Unsat,
    Unknown,
    Timeout,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Sat => "SAT",
            SolveStatus::Unsat => "UNSAT",
            SolveStatus::Unknown => "UNKNOWN",
            SolveStatus::Timeout => "TIMEOUT",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverModel {
    pub status: SolveStatus,
    pub assignment: Vec<Lit>,
}

impl SolverModel {
    pub fn unknown() -> Self {
        SolverModel {
            status: SolveStatus::Unknown,
            assignment: Vec::new(),
        }
    }

    /// Dense lookup `values[v]` for variables `1..=max`.
    pub fn values(&self) -> Vec<Option<bool>> {
        let max = self.assignment.iter().map(|l| l.var()).max().unwrap_or(0) as usize;
        let mut out = vec![None; max + 1];
        for l in &self.assignment {
            out[l.var() as usize] = Some(!l.is_negative());
        }
        out
    }

    /// Competition-format rendering: an `s` line and 0-terminated `v` lines.
    pub fn to_competition_output(&self) -> String {
        let mut out = String::new();
        match self.status {
            SolveStatus::Sat => out.push_str("s SATISFIABLE\n"),
            SolveStatus::Unsat => out.push_str("s UNSATISFIABLE\n"),
            _ => out.push_str("s UNKNOWN\n"),
        }
        if self.status == SolveStatus::Sat {
            for chunk in self.assignment.chunks(10) {
                out.push('v');
                for l in chunk {
                    out.push(' ');
                    out.push_str(&l.dimacs().to_string());
                }
                out.push('\n');
            }
            out.push_str("v 0\n");
        }
        out
    }
}

/// Reads `s` and `v` lines from solver stdout. A missing status line
/// yields `Unknown`; `v` lines must end with a terminating 0.
pub fn parse_solver_output(text: &str) -> Result<SolverModel, DimacsError> {
    let mut status = SolveStatus::Unknown;
    let mut assignment = Vec::new();
    let mut saw_values = false;
    let mut terminated = false;
    for line in text.lines() {
        let line = line.trim();
        if let Some(s) = line.strip_prefix("s ") {
            status = match s.trim() {
                "SATISFIABLE" => SolveStatus::Sat,
                "UNSATISFIABLE" => SolveStatus::Unsat,
                _ => SolveStatus::Unknown,
            };
        } else if let Some(v) = line.strip_prefix('v') {
            if !v.is_empty() && !v.starts_with(char::is_whitespace) {
                continue;
            }
            saw_values = true;
            for tok in v.split_whitespace() {
                let x: i32 = tok
                    .parse()
                    .map_err(|_| DimacsError::BadModelLiteral(tok.to_string()))?;
                if x == 0 {
                    terminated = true;
                } else {
                    assignment.push(Lit::from_dimacs(x).expect("nonzero"));
                }
            }
        }
    }
    if saw_values && !terminated {
        return Err(DimacsError::TruncatedModel);
    }
    Ok(SolverModel { status, assignment })
}
