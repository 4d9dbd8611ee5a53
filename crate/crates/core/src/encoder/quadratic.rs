//! Quadratic equation system of an S-box and its clause expansion.
//!
//! The system spans every polynomial of degree at most two in the `2e`
//! input/output bits that vanishes on the S-box graph. Each basis
//! equation is expanded into CNF on its own: one clause per assignment of
//! its support variables that makes the polynomial evaluate to one.

use super::clauses::{banned_assignment, Bit, Clause};
use super::EncodeError;

/// Monomial as a sorted list of at most two position indices; empty is `1`.
pub type Monomial = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equation {
    pub monomials: Vec<Monomial>,
    /// Positions appearing in the equation, ascending.
    pub support: Vec<usize>,
    /// Support assignments (LSB-first over `support`) violating the equation.
    pub violations: Vec<u32>,
}

impl Equation {
    pub fn eval(&self, point: &[bool]) -> bool {
        self.monomials
            .iter()
            .fold(false, |acc, m| acc ^ m.iter().all(|&i| point[i]))
    }
}

#[derive(Debug, Clone)]
pub struct QuadraticSystem {
    word_bits: usize,
    equations: Vec<Equation>,
    /// Full-width assignments satisfying every equation but outside the graph.
    spurious: Vec<u32>,
}

/// Largest support the truth-table expansion will accept.
pub const MAX_SUPPORT: usize = 12;

fn monomials(nvars: usize) -> Vec<Monomial> {
    let mut out = vec![vec![]];
    out.extend((0..nvars).map(|i| vec![i]));
    for i in 0..nvars {
        for j in i + 1..nvars {
            out.push(vec![i, j]);
        }
    }
    out
}

fn point(sbox: &[u8], e: usize, x: usize) -> Vec<bool> {
    let y = sbox[x] as usize;
    (0..e)
        .map(|i| (x >> i) & 1 == 1)
        .chain((0..e).map(|i| (y >> i) & 1 == 1))
        .collect()
}

impl QuadraticSystem {
    pub fn for_sbox(sbox: &[u8], word_bits: u32) -> Result<Self, EncodeError> {
        let e = word_bits as usize;
        if sbox.len() != 1 << e {
            return Err(EncodeError::Arity(format!(
                "S-box has {} entries for e={e}",
                sbox.len()
            )));
        }
        if 2 * e > MAX_SUPPORT {
            return Err(EncodeError::RelationTooWide {
                arity: 2 * e,
                max: MAX_SUPPORT,
            });
        }
        let nvars = 2 * e;
        let mons = monomials(nvars);
        let points: Vec<Vec<bool>> = (0..sbox.len()).map(|x| point(sbox, e, x)).collect();
        // Rows: graph points; columns: monomials. Reduce to RREF over GF(2).
        let mut rows: Vec<Vec<bool>> = points
            .iter()
            .map(|p| mons.iter().map(|m| m.iter().all(|&i| p[i])).collect())
            .collect();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..mons.len() {
            let Some(pr) = (r..rows.len()).find(|&i| rows[i][c]) else {
                continue;
            };
            rows.swap(r, pr);
            for i in 0..rows.len() {
                if i != r && rows[i][c] {
                    let pivot_row = rows[r].clone();
                    for (a, b) in rows[i].iter_mut().zip(pivot_row) {
                        *a ^= b;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        let mut equations = Vec::new();
        for free in (0..mons.len()).filter(|c| !pivots.contains(c)) {
            let mut coeffs = vec![false; mons.len()];
            coeffs[free] = true;
            for (i, &pc) in pivots.iter().enumerate() {
                if rows[i][free] {
                    coeffs[pc] = true;
                }
            }
            let ms: Vec<Monomial> = mons
                .iter()
                .zip(&coeffs)
                .filter(|&(_, &on)| on)
                .map(|(m, _)| m.clone())
                .collect();
            let mut support: Vec<usize> = ms.iter().flatten().copied().collect();
            support.sort_unstable();
            support.dedup();
            let mut eq = Equation {
                monomials: ms,
                support,
                violations: Vec::new(),
            };
            let mut scratch = vec![false; nvars];
            for a in 0u32..(1 << eq.support.len()) {
                for (k, &pos) in eq.support.iter().enumerate() {
                    scratch[pos] = (a >> k) & 1 == 1;
                }
                if eq.eval(&scratch) {
                    eq.violations.push(a);
                }
            }
            equations.push(eq);
        }
        let spurious = (0u32..(1 << nvars))
            .filter(|&a| {
                let x = (a & ((1 << e) - 1)) as usize;
                let y = (a >> e) as u8;
                sbox[x] != y && {
                    let p: Vec<bool> = (0..nvars).map(|i| (a >> i) & 1 == 1).collect();
                    equations.iter().all(|eq| !eq.eval(&p))
                }
            })
            .collect();
        Ok(QuadraticSystem {
            word_bits: e,
            equations,
            spurious,
        })
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    /// Non-graph points the equations fail to exclude; each gets a
    /// full-width banned clause.
    pub fn spurious_points(&self) -> &[u32] {
        &self.spurious
    }

    /// Clauses per S-box when every position is a distinct variable.
    pub fn clauses_per_sbox(&self) -> usize {
        self.equations
            .iter()
            .map(|e| e.violations.len())
            .sum::<usize>()
            + self.spurious.len()
    }

    pub fn clauses(&self, inputs: &[Bit], outputs: &[Bit]) -> Result<Vec<Clause>, EncodeError> {
        if inputs.len() != self.word_bits || outputs.len() != self.word_bits {
            return Err(EncodeError::Arity(format!(
                "quadratic S-box system of width {} given {}+{} positions",
                self.word_bits,
                inputs.len(),
                outputs.len()
            )));
        }
        let positions: Vec<Bit> = inputs.iter().chain(outputs).copied().collect();
        let mut out = Vec::with_capacity(self.clauses_per_sbox());
        let mut sub: Vec<Bit> = Vec::with_capacity(positions.len());
        for eq in &self.equations {
            sub.clear();
            sub.extend(eq.support.iter().map(|&i| positions[i]));
            for &a in &eq.violations {
                if let Some(c) = banned_assignment(&sub, |k| (a >> k) & 1 == 1) {
                    if c.is_empty() {
                        return Err(EncodeError::Contradiction);
                    }
                    out.push(c);
                }
            }
        }
        for &a in &self.spurious {
            if let Some(c) = banned_assignment(&positions, |k| (a >> k) & 1 == 1) {
                if c.is_empty() {
                    return Err(EncodeError::Contradiction);
                }
                out.push(c);
            }
        }
        Ok(out)
    }
}
