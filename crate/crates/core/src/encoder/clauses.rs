//! Clause-level building blocks: literals, banned-assignment clauses,
//! relation tables and XOR expansion. None of these introduce variables.

use std::collections::{HashMap, HashSet};
use std::fmt;

use super::EncodeError;

/// A signed 1-based variable id; the sign is the polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(i32);

impl Lit {
    pub fn pos(var: u32) -> Self {
        assert!(
            var >= 1 && var <= i32::MAX as u32,
            "variable ids are 1-based"
        );
        Lit(var as i32)
    }

    pub fn neg(var: u32) -> Self {
        Lit(-Self::pos(var).0)
    }

    /// Literal of `var` that is true when `var == value`.
    pub fn with_value(var: u32, value: bool) -> Self {
        if value {
            Self::pos(var)
        } else {
            Self::neg(var)
        }
    }

    pub fn from_dimacs(v: i32) -> Option<Self> {
        (v != 0).then_some(Lit(v))
    }

    pub fn dimacs(self) -> i32 {
        self.0
    }

    pub fn var(self) -> u32 {
        self.0.unsigned_abs()
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    /// Truth value of this literal under `assignment[var - 1]`.
    pub fn eval(self, assignment: &[bool]) -> bool {
        assignment[self.var() as usize - 1] != self.is_negative()
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(-self.0)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub type Clause = Vec<Lit>;

/// One position of a relation: either a literal or a folded constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bit {
    Lit(Lit),
    Const(bool),
}

impl Bit {
    pub fn var(v: u32) -> Self {
        Bit::Lit(Lit::pos(v))
    }

    /// `self XOR flip`: constants fold, literals change polarity.
    pub fn xor(self, flip: bool) -> Self {
        match (self, flip) {
            (b, false) => b,
            (Bit::Lit(l), true) => Bit::Lit(!l),
            (Bit::Const(c), true) => Bit::Const(!c),
        }
    }
}

/// Clause excluding the assignment `positions[i] == values(i)`.
///
/// Returns `None` when the assignment is already impossible (a constant
/// disagrees, or one variable would need both values); duplicate literals
/// collapse.
pub fn banned_assignment(positions: &[Bit], value: impl Fn(usize) -> bool) -> Option<Clause> {
    let mut clause: Clause = Vec::with_capacity(positions.len());
    for (i, bit) in positions.iter().enumerate() {
        let want = value(i);
        match *bit {
            Bit::Const(c) => {
                if c != want {
                    return None;
                }
            }
            Bit::Lit(l) => {
                // position value = want  <=>  l == want; forbid it with !l or l.
                let forbid = if want { !l } else { l };
                if clause.contains(&!forbid) {
                    return None;
                }
                if !clause.contains(&forbid) {
                    clause.push(forbid);
                }
            }
        }
    }
    Some(clause)
}

/// Bans every assignment of `positions` (packed LSB-first into an integer)
/// for which `allowed` returns false.
pub fn relation_clauses(
    positions: &[Bit],
    max_arity: usize,
    allowed: impl Fn(u64) -> bool,
) -> Result<Vec<Clause>, EncodeError> {
    let k = positions.len();
    if k > max_arity {
        return Err(EncodeError::RelationTooWide {
            arity: k,
            max: max_arity,
        });
    }
    let mut out = Vec::new();
    for a in 0..(1u64 << k) {
        if allowed(a) {
            continue;
        }
        if let Some(c) = banned_assignment(positions, |i| (a >> i) & 1 == 1) {
            if c.is_empty() {
                return Err(EncodeError::Contradiction);
            }
            out.push(c);
        }
    }
    Ok(out)
}

/// S-box graph relation `out == sbox[in]` as one clause per excluded
/// `(x, y)` pair. Bits are LSB-first.
pub fn sbox_relation_clauses(
    sbox: &[u8],
    inputs: &[Bit],
    outputs: &[Bit],
) -> Result<Vec<Clause>, EncodeError> {
    let e = inputs.len();
    if e > 8 {
        return Err(EncodeError::SboxTooWide(e));
    }
    if outputs.len() != e || sbox.len() != 1 << e {
        return Err(EncodeError::Arity(format!(
            "S-box of {} entries with {} inputs and {} outputs",
            sbox.len(),
            e,
            outputs.len()
        )));
    }
    let positions: Vec<Bit> = inputs.iter().chain(outputs).copied().collect();
    let mask = (1u64 << e) - 1;
    relation_clauses(&positions, 2 * e, |a| {
        sbox[(a & mask) as usize] as u64 == a >> e
    })
}

/// CNF for `XOR(lits) == parity` without auxiliaries: `2^(k-1)` clauses.
///
/// Negative literals fold into the parity and repeated variables cancel.
pub fn xor_clause_expansion(
    lits: &[Lit],
    parity: bool,
    max_arity: usize,
) -> Result<Vec<Clause>, EncodeError> {
    let mut parity = parity;
    let mut odd: Vec<u32> = Vec::with_capacity(lits.len());
    for l in lits {
        parity ^= l.is_negative();
        match odd.iter().position(|&v| v == l.var()) {
            Some(i) => {
                odd.swap_remove(i);
            }
            None => odd.push(l.var()),
        }
    }
    let k = odd.len();
    if k > max_arity {
        return Err(EncodeError::XorTooWide {
            arity: k,
            max: max_arity,
        });
    }
    if k == 0 {
        return if parity {
            Err(EncodeError::Contradiction)
        } else {
            Ok(Vec::new())
        };
    }
    let mut out = Vec::with_capacity(1 << (k - 1));
    for a in 0u64..(1 << k) {
        if ((a.count_ones() & 1) == 1) == parity {
            continue;
        }
        out.push(
            odd.iter()
                .enumerate()
                .map(|(i, &v)| Lit::with_value(v, (a >> i) & 1 == 0))
                .collect(),
        );
    }
    Ok(out)
}

fn canonical(c: &Clause) -> Clause {
    let mut c = c.clone();
    c.sort_by_key(|l| (l.var(), l.is_negative()));
    c
}

/// Merges clause pairs that differ only in the sign of one literal into
/// their resolvent and drops duplicates, repeating to a fixpoint.
pub fn minimize_clauses(clauses: Vec<Clause>) -> Vec<Clause> {
    let mut current: Vec<Clause> = {
        let mut seen = HashSet::new();
        clauses
            .into_iter()
            .map(|c| canonical(&c))
            .filter(|c| seen.insert(c.clone()))
            .collect()
    };
    loop {
        let mut merged = false;
        let mut alive = vec![true; current.len()];
        let mut extra: Vec<Clause> = Vec::new();
        let mut index: HashMap<(Clause, u32), (usize, bool)> = HashMap::new();
        for (ci, c) in current.iter().enumerate() {
            for (li, l) in c.iter().enumerate() {
                let mut rest = c.clone();
                rest.remove(li);
                let key = (rest, l.var());
                match index.get(&key) {
                    Some(&(other, neg)) if neg != l.is_negative() && alive[other] && alive[ci] => {
                        alive[other] = false;
                        alive[ci] = false;
                        extra.push(key.0);
                        merged = true;
                    }
                    Some(_) => {}
                    None => {
                        index.insert(key, (ci, l.is_negative()));
                    }
                }
            }
        }
        if !merged {
            return current;
        }
        let mut seen = HashSet::new();
        current = current
            .into_iter()
            .zip(alive)
            .filter_map(|(c, a)| a.then_some(c))
            .chain(extra.into_iter().filter(|c| !c.is_empty()))
            .filter(|c| seen.insert(c.clone()))
            .collect();
    }
}
