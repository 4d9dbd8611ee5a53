//! Known-plaintext attack on SR(n, r, c, e) compiled to CNF.
//!
//! Variables are the bits of all `n + 1` round keys followed, per text
//! pair, by the S-box outputs `y_1..y_n` and the S-box inputs `x_2..x_n`.
//! Round-1 inputs are `k_0 XOR plaintext` and the final output relation
//! uses ciphertext constants, so both fold into literal polarities.
//! No auxiliary variables are ever introduced:
//!
//! ```text
//! L = b * (n + 1) + p * b * (2n - 1),   b = r * c * e
//! ```

pub mod clauses;
pub mod quadratic;

use std::collections::HashSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cipher::{Cipher, CipherError, CipherParams, State};
pub use clauses::{
    banned_assignment, minimize_clauses, relation_clauses, sbox_relation_clauses,
    xor_clause_expansion, Bit, Clause, Lit,
};
pub use quadratic::QuadraticSystem;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("XOR of arity {arity} exceeds the limit of {max}")]
    XorTooWide { arity: usize, max: usize },
    #[error("relation over {arity} positions exceeds the limit of {max}")]
    RelationTooWide { arity: usize, max: usize },
    #[error("S-box of width {0} bits is too wide for a relation table")]
    SboxTooWide(usize),
    #[error("arity mismatch: {0}")]
    Arity(String),
    #[error("constraint folds to an empty clause")]
    Contradiction,
    #[error("plaintext #{0} duplicates an earlier plaintext")]
    DuplicatePlaintext(usize),
    #[error("at least one text pair is required")]
    NoPairs,
    #[error("assignment covers {found} variables, instance has {expected}")]
    IncompleteAssignment { expected: usize, found: usize },
    #[error("instance carries no layout metadata")]
    MissingLayout,
    #[error(transparent)]
    Cipher(#[from] CipherError),
}

/// Total variable count `(n+1)*b + p*(2n-1)*b` for block size `b = r*c*e`.
pub fn num_vars(rounds: usize, rows: usize, cols: usize, word_bits: u32, pairs: usize) -> u64 {
    let b = (rows * cols) as u64 * word_bits as u64;
    let n = rounds as u64;
    b * (n + 1) + pairs as u64 * b * (2 * n - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SboxEncoding {
    /// Each quadratic equation of the S-box expanded on its own support.
    Quadratic,
    /// One full-width clause per excluded (input, output) pair.
    Banned,
}

impl SboxEncoding {
    /// Quadratic where its truth tables stay small, banned otherwise.
    pub fn default_for(word_bits: u32) -> Self {
        if 2 * word_bits as usize <= quadratic::MAX_SUPPORT {
            SboxEncoding::Quadratic
        } else {
            SboxEncoding::Banned
        }
    }
}

impl fmt::Display for SboxEncoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SboxEncoding::Quadratic => "quadratic",
            SboxEncoding::Banned => "banned",
        })
    }
}

impl std::str::FromStr for SboxEncoding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "quadratic" => Ok(SboxEncoding::Quadratic),
            "banned" => Ok(SboxEncoding::Banned),
            other => Err(format!("unknown S-box encoding {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncoderOptions {
    pub sbox_encoding: SboxEncoding,
    pub xor_max_arity: usize,
    pub relation_max_arity: usize,
    /// Merge clauses differing in one literal, per emitted block.
    pub minimize: bool,
}

impl EncoderOptions {
    pub fn for_word_bits(word_bits: u32) -> Self {
        EncoderOptions {
            sbox_encoding: SboxEncoding::default_for(word_bits),
            xor_max_arity: 16,
            relation_max_arity: 16,
            minimize: false,
        }
    }
}

impl Default for EncoderOptions {
    fn default() -> Self {
        Self::for_word_bits(4)
    }
}

/// Mapping from cipher bits to 1-based variable ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarLayout {
    pub rounds: usize,
    pub rows: usize,
    pub cols: usize,
    pub word_bits: u32,
    pub pairs: usize,
}

impl VarLayout {
    pub fn new(params: &CipherParams, pairs: usize) -> Self {
        VarLayout {
            rounds: params.rounds,
            rows: params.rows,
            cols: params.cols,
            word_bits: params.word_bits,
            pairs,
        }
    }

    pub fn block_bits(&self) -> usize {
        self.rows * self.cols * self.word_bits as usize
    }

    pub fn num_vars(&self) -> u32 {
        num_vars(
            self.rounds,
            self.rows,
            self.cols,
            self.word_bits,
            self.pairs,
        ) as u32
    }

    pub fn num_key_vars(&self) -> u32 {
        ((self.rounds + 1) * self.block_bits()) as u32
    }

    /// Round key `round`, state bit `bit` (= word * e + bit-in-word).
    #[inline]
    pub fn key_var(&self, round: usize, bit: usize) -> u32 {
        debug_assert!(round <= self.rounds && bit < self.block_bits());
        (1 + round * self.block_bits() + bit) as u32
    }

    #[inline]
    fn pair_base(&self, pair: usize) -> usize {
        1 + (self.rounds + 1) * self.block_bits() + pair * (2 * self.rounds - 1) * self.block_bits()
    }

    /// S-box output of round `round` (1-based).
    #[inline]
    pub fn sbox_out_var(&self, pair: usize, round: usize, bit: usize) -> u32 {
        debug_assert!((1..=self.rounds).contains(&round) && pair < self.pairs);
        (self.pair_base(pair) + 2 * (round - 1) * self.block_bits() + bit) as u32
    }

    /// S-box input of round `round`, defined for `round >= 2`.
    #[inline]
    pub fn sbox_in_var(&self, pair: usize, round: usize, bit: usize) -> u32 {
        debug_assert!((2..=self.rounds).contains(&round) && pair < self.pairs);
        (self.pair_base(pair) + (2 * round - 3) * self.block_bits() + bit) as u32
    }

    fn word_index(&self, row: usize, col: usize) -> usize {
        col * self.rows + row
    }

    /// Reads round key 0 back from a per-variable lookup.
    pub fn decode_secret_key(&self, value: impl Fn(u32) -> Option<bool>) -> Option<State> {
        let e = self.word_bits as usize;
        let mut words = vec![0u8; self.rows * self.cols];
        for (w, word) in words.iter_mut().enumerate() {
            for j in 0..e {
                if value(self.key_var(0, w * e + j))? {
                    *word |= 1 << j;
                }
            }
        }
        State::from_words(self.rows, self.cols, words).ok()
    }
}

/// Key, text pairs and naming of one attack instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceSpec {
    pub params: CipherParams,
    pub key_token: String,
    pub secret_key: State,
    pub pairs: Vec<(State, State)>,
}

impl InstanceSpec {
    pub fn new(
        cipher: &Cipher,
        key_token: &str,
        secret_key: State,
        plaintexts: &[State],
    ) -> Result<Self, EncodeError> {
        if plaintexts.is_empty() {
            return Err(EncodeError::NoPairs);
        }
        let mut seen = HashSet::new();
        for (i, p) in plaintexts.iter().enumerate() {
            if !seen.insert(p.words().to_vec()) {
                return Err(EncodeError::DuplicatePlaintext(i));
            }
        }
        let km = cipher.expand_key(&secret_key)?;
        let pairs = plaintexts
            .iter()
            .map(|p| Ok((p.clone(), cipher.encrypt(p, &km)?)))
            .collect::<Result<Vec<_>, CipherError>>()?;
        Ok(InstanceSpec {
            params: cipher.params().clone(),
            key_token: key_token.to_string(),
            secret_key,
            pairs,
        })
    }

    /// `<rounds>-<key token>-<pairs>`, e.g. `3-k3-22`.
    pub fn token(&self) -> String {
        instance_token(self.params.rounds, &self.key_token, self.pairs.len())
    }

    pub fn layout(&self) -> VarLayout {
        VarLayout::new(&self.params, self.pairs.len())
    }
}

pub fn instance_token(rounds: usize, key_token: &str, pairs: usize) -> String {
    format!("{rounds}-{key_token}-{pairs}")
}

/// Self-describing metadata carried alongside a generated instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub token: String,
    pub key_token: String,
    pub params: CipherParams,
    pub sbox_encoding: SboxEncoding,
    pub minimized: bool,
    pub plaintexts: Vec<String>,
    pub ciphertexts: Vec<String>,
    /// Only present when explicitly requested (test fixtures).
    pub secret_key: Option<String>,
}

impl InstanceMeta {
    pub fn layout(&self) -> VarLayout {
        VarLayout::new(&self.params, self.plaintexts.len())
    }
}

/// Flat clause storage.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClauseList {
    lits: Vec<Lit>,
    ends: Vec<usize>,
}

impl ClauseList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, clause: &[Lit]) {
        self.lits.extend_from_slice(clause);
        self.ends.push(self.lits.len());
    }

    pub fn extend_from(&mut self, other: ClauseList) {
        let offset = self.lits.len();
        self.lits.extend(other.lits);
        self.ends.extend(other.ends.into_iter().map(|e| e + offset));
    }

    pub fn len(&self) -> usize {
        self.ends.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ends.is_empty()
    }

    pub fn num_literals(&self) -> usize {
        self.lits.len()
    }

    pub fn get(&self, i: usize) -> &[Lit] {
        let start = if i == 0 { 0 } else { self.ends[i - 1] };
        &self.lits[start..self.ends[i]]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[Lit]> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    pub fn max_var(&self) -> u32 {
        self.lits.iter().map(|l| l.var()).max().unwrap_or(0)
    }
}

impl<C: AsRef<[Lit]>> FromIterator<C> for ClauseList {
    fn from_iter<I: IntoIterator<Item = C>>(iter: I) -> Self {
        let mut out = ClauseList::new();
        for c in iter {
            out.push(c.as_ref());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnfInstance {
    pub num_vars: u32,
    pub clauses: ClauseList,
    pub meta: Option<InstanceMeta>,
}

impl CnfInstance {
    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn density(&self) -> f64 {
        if self.num_vars == 0 {
            0.0
        } else {
            self.clauses.len() as f64 / self.num_vars as f64
        }
    }

    pub fn layout(&self) -> Option<VarLayout> {
        self.meta.as_ref().map(InstanceMeta::layout)
    }

    pub fn token(&self) -> Option<&str> {
        self.meta.as_ref().map(|m| m.token.as_str())
    }
}

/// Either S-box encoding, prepared once per instance.
enum SboxClauses<'a> {
    Quadratic(QuadraticSystem),
    Banned(&'a [u8]),
}

impl SboxClauses<'_> {
    fn emit(&self, inputs: &[Bit], outputs: &[Bit]) -> Result<Vec<Clause>, EncodeError> {
        match self {
            SboxClauses::Quadratic(sys) => sys.clauses(inputs, outputs),
            SboxClauses::Banned(sbox) => sbox_relation_clauses(sbox, inputs, outputs),
        }
    }
}

fn push_block(out: &mut ClauseList, block: Vec<Clause>, minimize: bool) {
    let block = if minimize {
        minimize_clauses(block)
    } else {
        block
    };
    for c in &block {
        out.push(c);
    }
}

/// Key-schedule constraints; they appear once regardless of the pair count.
pub fn encode_key_schedule(
    cipher: &Cipher,
    layout: &VarLayout,
    opts: &EncoderOptions,
) -> Result<ClauseList, EncodeError> {
    let (r, c) = (layout.rows, layout.cols);
    let e = layout.word_bits as usize;
    let sbox = cipher.sbox();
    let mut out = ClauseList::new();
    for step in 0..layout.rounds {
        let rcon = cipher.round_constant(step);
        for row in 0..r {
            let in_word = layout.word_index((row + 1) % r, c - 1);
            let col0 = layout.word_index(row, 0);
            let positions: Vec<Bit> = (0..e)
                .map(|j| Bit::var(layout.key_var(step, in_word * e + j)))
                .chain((0..e).map(|j| Bit::var(layout.key_var(step, col0 * e + j))))
                .chain((0..e).map(|j| Bit::var(layout.key_var(step + 1, col0 * e + j))))
                .collect();
            let rc = if row == 0 { rcon as u64 } else { 0 };
            let mask = (1u64 << e) - 1;
            let block = relation_clauses(&positions, opts.relation_max_arity, |a| {
                let x = a & mask;
                let prev = (a >> e) & mask;
                let next = (a >> (2 * e)) & mask;
                next ^ prev ^ rc == sbox[x as usize] as u64
            })?;
            push_block(&mut out, block, opts.minimize);
        }
        for col in 1..c {
            for row in 0..r {
                let w = layout.word_index(row, col);
                let w_left = layout.word_index(row, col - 1);
                for j in 0..e {
                    let lits = [
                        Lit::pos(layout.key_var(step, w * e + j)),
                        Lit::pos(layout.key_var(step + 1, w_left * e + j)),
                        Lit::pos(layout.key_var(step + 1, w * e + j)),
                    ];
                    push_block(
                        &mut out,
                        xor_clause_expansion(&lits, false, opts.xor_max_arity)?,
                        opts.minimize,
                    );
                }
            }
        }
    }
    Ok(out)
}

fn encode_pair(
    layout: &VarLayout,
    deps: &[Vec<usize>],
    sboxes: &SboxClauses<'_>,
    pair: usize,
    plaintext: &State,
    ciphertext: &State,
    opts: &EncoderOptions,
) -> Result<ClauseList, EncodeError> {
    let e = layout.word_bits as usize;
    let b = layout.block_bits();
    let n = layout.rounds;
    let mut out = ClauseList::new();
    for round in 1..=n {
        let inputs: Vec<Bit> = (0..b)
            .map(|t| {
                if round == 1 {
                    Bit::var(layout.key_var(0, t)).xor(plaintext.bit(t / e, (t % e) as u32))
                } else {
                    Bit::var(layout.sbox_in_var(pair, round, t))
                }
            })
            .collect();
        let outputs: Vec<Bit> = (0..b)
            .map(|t| Bit::var(layout.sbox_out_var(pair, round, t)))
            .collect();
        for w in 0..layout.rows * layout.cols {
            let block = sboxes.emit(&inputs[w * e..(w + 1) * e], &outputs[w * e..(w + 1) * e])?;
            push_block(&mut out, block, opts.minimize);
        }
    }
    let mut lits = Vec::new();
    for round in 1..=n {
        for (t, dep) in deps.iter().enumerate() {
            lits.clear();
            lits.extend(
                dep.iter()
                    .map(|&i| Lit::pos(layout.sbox_out_var(pair, round, i))),
            );
            lits.push(Lit::pos(layout.key_var(round, t)));
            let parity = if round < n {
                lits.push(Lit::pos(layout.sbox_in_var(pair, round + 1, t)));
                false
            } else {
                ciphertext.bit(t / e, (t % e) as u32)
            };
            push_block(
                &mut out,
                xor_clause_expansion(&lits, parity, opts.xor_max_arity)?,
                opts.minimize,
            );
        }
    }
    Ok(out)
}

/// Per-pair round constraints, concatenated in pair order.
pub fn encode_rounds(
    cipher: &Cipher,
    spec: &InstanceSpec,
    opts: &EncoderOptions,
) -> Result<ClauseList, EncodeError> {
    let layout = spec.layout();
    let deps = cipher.linear_bit_dependencies();
    let sboxes = match opts.sbox_encoding {
        SboxEncoding::Quadratic => {
            SboxClauses::Quadratic(QuadraticSystem::for_sbox(cipher.sbox(), layout.word_bits)?)
        }
        SboxEncoding::Banned => SboxClauses::Banned(cipher.sbox()),
    };
    let blocks: Vec<ClauseList> = spec
        .pairs
        .par_iter()
        .enumerate()
        .map(|(q, (pt, ct))| encode_pair(&layout, &deps, &sboxes, q, pt, ct, opts))
        .collect::<Result<_, _>>()?;
    let mut out = ClauseList::new();
    for b in blocks {
        out.extend_from(b);
    }
    Ok(out)
}

/// Builds the full instance: key schedule followed by every pair's rounds.
pub fn generate_instance(
    cipher: &Cipher,
    key_token: &str,
    secret_key: State,
    plaintexts: &[State],
    opts: &EncoderOptions,
) -> Result<(InstanceSpec, CnfInstance), EncodeError> {
    let spec = InstanceSpec::new(cipher, key_token, secret_key, plaintexts)?;
    let cnf = encode_spec(cipher, &spec, opts)?;
    Ok((spec, cnf))
}

pub fn encode_spec(
    cipher: &Cipher,
    spec: &InstanceSpec,
    opts: &EncoderOptions,
) -> Result<CnfInstance, EncodeError> {
    let layout = spec.layout();
    let mut clauses = encode_key_schedule(cipher, &layout, opts)?;
    clauses.extend_from(encode_rounds(cipher, spec, opts)?);
    let e = spec.params.word_bits;
    let meta = InstanceMeta {
        token: spec.token(),
        key_token: spec.key_token.clone(),
        params: spec.params.clone(),
        sbox_encoding: opts.sbox_encoding,
        minimized: opts.minimize,
        plaintexts: spec.pairs.iter().map(|(p, _)| p.to_hex(e)).collect(),
        ciphertexts: spec.pairs.iter().map(|(_, c)| c.to_hex(e)).collect(),
        secret_key: Some(spec.secret_key.to_hex(e)),
    };
    Ok(CnfInstance {
        num_vars: layout.num_vars(),
        clauses,
        meta: Some(meta),
    })
}

/// The assignment induced by the true key and its encryption traces.
pub fn witness_assignment(cipher: &Cipher, spec: &InstanceSpec) -> Result<Vec<bool>, EncodeError> {
    let layout = spec.layout();
    let e = layout.word_bits as usize;
    let b = layout.block_bits();
    let mut a = vec![false; layout.num_vars() as usize];
    let km = cipher.expand_key(&spec.secret_key)?;
    for (i, rk) in km.round_keys.iter().enumerate() {
        for t in 0..b {
            a[layout.key_var(i, t) as usize - 1] = rk.bit(t / e, (t % e) as u32);
        }
    }
    for (q, (pt, _)) in spec.pairs.iter().enumerate() {
        let trace = cipher.encrypt_block(pt, &km)?;
        for round in 1..=layout.rounds {
            for t in 0..b {
                let (w, j) = (t / e, (t % e) as u32);
                a[layout.sbox_out_var(q, round, t) as usize - 1] =
                    trace.sbox_outputs[round - 1].bit(w, j);
                if round >= 2 {
                    a[layout.sbox_in_var(q, round, t) as usize - 1] =
                        trace.sbox_inputs[round - 1].bit(w, j);
                }
            }
        }
    }
    Ok(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOutcome {
    pub satisfied: bool,
    pub first_falsified: Option<usize>,
    pub falsified: usize,
}

/// Evaluates every clause; `assignment[v - 1]` is the value of variable `v`.
pub fn check_assignment(
    cnf: &CnfInstance,
    assignment: &[bool],
) -> Result<CheckOutcome, EncodeError> {
    if assignment.len() < cnf.num_vars as usize {
        return Err(EncodeError::IncompleteAssignment {
            expected: cnf.num_vars as usize,
            found: assignment.len(),
        });
    }
    let mut first = None;
    let mut falsified = 0;
    for (i, c) in cnf.clauses.iter().enumerate() {
        if !c.iter().any(|l| l.eval(assignment)) {
            first.get_or_insert(i);
            falsified += 1;
        }
    }
    Ok(CheckOutcome {
        satisfied: first.is_none(),
        first_falsified: first,
        falsified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cipher(n: usize, r: usize, c: usize, e: u32) -> Cipher {
        Cipher::new(CipherParams::small_scale(n, r, c, e).unwrap()).unwrap()
    }

    fn random_state(rng: &mut impl Rng, p: &CipherParams) -> State {
        let words = (0..p.words())
            .map(|_| rng.gen::<u8>() & p.word_mask())
            .collect();
        State::from_words(p.rows, p.cols, words).unwrap()
    }

    fn distinct_plaintexts(rng: &mut impl Rng, p: &CipherParams, count: usize) -> Vec<State> {
        let mut out: Vec<State> = Vec::new();
        while out.len() < count {
            let s = random_state(rng, p);
            if !out.contains(&s) {
                out.push(s);
            }
        }
        out
    }

    #[test]
    fn table_variable_counts() {
        let rows = [
            (3, 12, 4096),
            (3, 14, 4736),
            (3, 16, 5376),
            (3, 18, 6016),
            (3, 20, 6656),
            (3, 22, 7296),
            (3, 24, 7936),
            (3, 30, 9856),
            (4, 30, 13760),
        ];
        for (n, p, l) in rows {
            assert_eq!(num_vars(n, 4, 4, 4, p), l, "n={n} p={p}");
        }
    }

    #[test]
    fn layout_is_contiguous_and_disjoint() {
        for (n, r, c, e, p) in [
            (1, 1, 1, 4, 2),
            (2, 2, 2, 4, 3),
            (3, 4, 4, 4, 2),
            (2, 1, 2, 8, 2),
        ] {
            let params = CipherParams::small_scale(n, r, c, e).unwrap();
            let l = VarLayout::new(&params, p);
            let b = l.block_bits();
            let mut ids = Vec::new();
            for round in 0..=n {
                ids.extend((0..b).map(|t| l.key_var(round, t)));
            }
            for q in 0..p {
                for round in 1..=n {
                    ids.extend((0..b).map(|t| l.sbox_out_var(q, round, t)));
                    if round >= 2 {
                        ids.extend((0..b).map(|t| l.sbox_in_var(q, round, t)));
                    }
                }
            }
            ids.sort_unstable();
            let expect: Vec<u32> = (1..=l.num_vars()).collect();
            assert_eq!(ids, expect);
            assert_eq!(l.num_vars() as u64, num_vars(n, r, c, e, p));
        }
    }

    #[test]
    fn key_schedule_clause_count_fixture() {
        // 3 steps x 4 S-box words x (2^12 - 2^8) + 3 steps x 48 bits x 4.
        let c = cipher(3, 4, 4, 4);
        let l = VarLayout::new(c.params(), 1);
        let ks = encode_key_schedule(&c, &l, &EncoderOptions::default()).unwrap();
        assert_eq!(ks.len(), 3 * 4 * 3840 + 3 * 48 * 4);
        assert_eq!(ks.len(), 46656);
    }

    #[test]
    fn witness_satisfies_key_schedule() {
        let c = cipher(3, 4, 4, 4);
        let key = c.parse_state("b25286f7d3e7b3e1").unwrap();
        let pt = c.parse_state("6162636465666768").unwrap();
        let spec = InstanceSpec::new(&c, "k6", key, &[pt]).unwrap();
        let w = witness_assignment(&c, &spec).unwrap();
        let ks = encode_key_schedule(&c, &spec.layout(), &EncoderOptions::default()).unwrap();
        let cnf = CnfInstance {
            num_vars: spec.layout().num_vars(),
            clauses: ks,
            meta: None,
        };
        assert!(check_assignment(&cnf, &w).unwrap().satisfied);
    }

    #[test]
    fn max_linear_xor_arity_default_layer() {
        // x_{i+1} bit = XOR(y deps) ^ k bit, plus the x variable itself.
        let c = cipher(3, 4, 4, 4);
        let deps = c.linear_bit_dependencies();
        let max = deps.iter().map(|d| d.len() + 2).max().unwrap();
        assert!(max <= 11, "max arity {max}");
        assert_eq!(max, 9);
    }

    #[test]
    fn soundness_small_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (n, r, cc, e, p) in [
            (1, 1, 1, 4, 3),
            (2, 2, 2, 4, 2),
            (2, 1, 2, 4, 3),
            (3, 2, 1, 4, 2),
            (1, 4, 4, 4, 1),
        ] {
            let c = cipher(n, r, cc, e);
            for enc in [SboxEncoding::Quadratic, SboxEncoding::Banned] {
                let opts = EncoderOptions {
                    sbox_encoding: enc,
                    ..Default::default()
                };
                let key = random_state(&mut rng, c.params());
                let pts = distinct_plaintexts(&mut rng, c.params(), p);
                let (spec, cnf) = generate_instance(&c, "kx", key, &pts, &opts).unwrap();
                let w = witness_assignment(&c, &spec).unwrap();
                assert!(check_assignment(&cnf, &w).unwrap().satisfied);
                assert!(cnf.clauses.max_var() <= cnf.num_vars);
                for cl in cnf.clauses.iter() {
                    let vars: HashSet<u32> = cl.iter().map(|l| l.var()).collect();
                    assert_eq!(vars.len(), cl.len(), "duplicate variable in clause");
                    assert!(!cl.is_empty());
                }
            }
        }
    }

    #[test]
    fn flipped_key_bit_is_caught() {
        let c = cipher(2, 2, 2, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let key = random_state(&mut rng, c.params());
        let pts = distinct_plaintexts(&mut rng, c.params(), 3);
        let (spec, cnf) =
            generate_instance(&c, "kx", key, &pts, &EncoderOptions::default()).unwrap();
        let w = witness_assignment(&c, &spec).unwrap();
        for v in 0..spec.layout().num_key_vars() as usize {
            let mut flipped = w.clone();
            flipped[v] = !flipped[v];
            let out = check_assignment(&cnf, &flipped).unwrap();
            assert!(!out.satisfied);
            let idx = out.first_falsified.unwrap();
            assert!(!cnf.clauses.get(idx).iter().any(|l| l.eval(&flipped)));
        }
    }

    #[test]
    fn plaintext_constants_do_not_change_counts() {
        let c = cipher(2, 2, 2, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let key = random_state(&mut rng, c.params());
        let a = distinct_plaintexts(&mut rng, c.params(), 3);
        let b = distinct_plaintexts(&mut rng, c.params(), 3);
        let opts = EncoderOptions::default();
        let (_, ca) = generate_instance(&c, "k", key.clone(), &a, &opts).unwrap();
        let (_, cb) = generate_instance(&c, "k", key, &b, &opts).unwrap();
        assert_eq!(ca.num_clauses(), cb.num_clauses());
        assert_ne!(ca.clauses, cb.clauses);
    }

    #[test]
    fn duplicate_plaintexts_rejected() {
        let c = cipher(1, 1, 1, 4);
        let key = c.parse_state("a").unwrap();
        let p = c.parse_state("3").unwrap();
        assert_eq!(
            generate_instance(
                &c,
                "k",
                key.clone(),
                &[p.clone(), p],
                &EncoderOptions::default()
            )
            .unwrap_err(),
            EncodeError::DuplicatePlaintext(1)
        );
        assert_eq!(
            generate_instance(&c, "k", key, &[], &EncoderOptions::default()).unwrap_err(),
            EncodeError::NoPairs
        );
    }

    #[test]
    fn token_and_key_decode() {
        let c = cipher(3, 4, 4, 4);
        let key = c.parse_state("0123456789abcdef").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts = distinct_plaintexts(&mut rng, c.params(), 2);
        let spec = InstanceSpec::new(&c, "k3", key, &pts).unwrap();
        assert_eq!(spec.token(), "3-k3-2");
        let w = witness_assignment(&c, &spec).unwrap();
        let decoded = spec
            .layout()
            .decode_secret_key(|v| w.get(v as usize - 1).copied())
            .unwrap();
        assert_eq!(decoded.to_hex(4), "0123456789abcdef");
    }

    #[test]
    fn incomplete_assignment_rejected() {
        let cnf = CnfInstance {
            num_vars: 3,
            clauses: [vec![Lit::pos(1)], vec![Lit::pos(3)]].into_iter().collect(),
            meta: None,
        };
        assert!(matches!(
            check_assignment(&cnf, &[true]),
            Err(EncodeError::IncompleteAssignment {
                expected: 3,
                found: 1
            })
        ));
        assert!(
            check_assignment(&cnf, &[true, true, true])
                .unwrap()
                .satisfied
        );
    }

    #[test]
    fn minimized_instances_stay_sound() {
        let c = cipher(2, 2, 2, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let key = random_state(&mut rng, c.params());
        let pts = distinct_plaintexts(&mut rng, c.params(), 2);
        let plain = EncoderOptions::default();
        let min = EncoderOptions {
            minimize: true,
            ..plain.clone()
        };
        let (spec, a) = generate_instance(&c, "k", key.clone(), &pts, &plain).unwrap();
        let (_, b) = generate_instance(&c, "k", key, &pts, &min).unwrap();
        assert!(b.num_clauses() < a.num_clauses());
        assert_eq!(a.num_vars, b.num_vars);
        let w = witness_assignment(&c, &spec).unwrap();
        assert!(check_assignment(&b, &w).unwrap().satisfied);
    }

    #[test]
    fn wide_words_use_banned_encoding_but_key_schedule_is_guarded() {
        assert_eq!(SboxEncoding::default_for(8), SboxEncoding::Banned);
        let c = cipher(1, 1, 1, 8);
        let key = c.parse_state("2b").unwrap();
        let p = c.parse_state("00").unwrap();
        let err =
            generate_instance(&c, "k", key, &[p], &EncoderOptions::for_word_bits(8)).unwrap_err();
        assert_eq!(err, EncodeError::RelationTooWide { arity: 24, max: 16 });
    }
}
