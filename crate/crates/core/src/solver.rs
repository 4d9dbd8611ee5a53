//! Small built-in CDCL solver.
//!
//! Two watched literals with blockers, first-UIP learning with local
//! minimization, Luby restarts and length-based learnt clause reduction.
//! Branching picks the most active variable by default; the static rule
//! (lowest-index unassigned variable) branches on key bits first since
//! generated instances number them first. Both use saved phases.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dimacs::{SolveStatus, SolverModel};
use crate::encoder::{CnfInstance, Lit};

pub const DEFAULT_MAX_CLAUSES: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("instance has {clauses} clauses, internal solver limit is {max}")]
    TooLarge { clauses: usize, max: usize },
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub max_clauses: usize,
    pub branching: Branching,
    pub timeout: Option<Duration>,
    /// Zero keeps all initial phases false; other values randomize them.
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_clauses: DEFAULT_MAX_CLAUSES,
            branching: Branching::default(),
            timeout: None,
            seed: 0,
        }
    }
}

/// Variable selection rule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Branching {
    /// Lowest-index unassigned variable.
    Static,
    /// Highest conflict activity (exponentially decayed bumps).
    #[default]
    Activity,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub decisions: u64,
    pub conflicts: u64,
    pub propagations: u64,
    pub restarts: u64,
}

const NONE: u32 = u32::MAX;
const UNDEF: u8 = 2;

#[inline]
fn ilit(l: Lit) -> u32 {
    ((l.var() - 1) << 1) | l.is_negative() as u32
}

#[inline]
fn lit_value(assigns: &[u8], x: u32) -> u8 {
    let a = assigns[(x >> 1) as usize];
    if a == UNDEF {
        UNDEF
    } else {
        a ^ (x & 1) as u8
    }
}

fn luby(mut i: u64) -> u64 {
    // Index i >= 1 into 1,1,2,1,1,2,4,...
    loop {
        let mut k = 1;
        while (1u64 << k) - 1 < i {
            k += 1;
        }
        if (1u64 << k) - 1 == i {
            return 1 << (k - 1);
        }
        i -= (1u64 << (k - 1)) - 1;
    }
}

/// Max-heap of variables ordered by activity.
struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<u32>,
}

impl VarHeap {
    fn new(n: usize) -> Self {
        VarHeap {
            heap: (0..n as u32).collect(),
            pos: (0..n as u32).collect(),
        }
    }

    fn contains(&self, v: usize) -> bool {
        self.pos[v] != NONE
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            if act[self.heap[parent] as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = self.heap[parent];
            self.pos[self.heap[i] as usize] = i as u32;
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as u32;
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        loop {
            let l = 2 * i + 1;
            if l >= self.heap.len() {
                break;
            }
            let r = l + 1;
            let c =
                if r < self.heap.len() && act[self.heap[r] as usize] > act[self.heap[l] as usize] {
                    r
                } else {
                    l
                };
            if act[self.heap[c] as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = self.heap[c];
            self.pos[self.heap[i] as usize] = i as u32;
            i = c;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as u32;
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.pos[v] = self.heap.len() as u32;
        self.heap.push(v as u32);
        self.up(self.heap.len() - 1, act);
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().expect("nonempty");
        self.pos[top as usize] = NONE;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.down(0, act);
        }
        Some(top as usize)
    }
}

pub struct Solver {
    branching: Branching,
    activity: Vec<f64>,
    var_inc: f64,
    order: VarHeap,
    clauses: Vec<Vec<u32>>,
    learnt: Vec<bool>,
    deleted: Vec<bool>,
    num_learnts: usize,
    watches: Vec<Vec<Watch>>,
    assigns: Vec<u8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    phase: Vec<bool>,
    seen: Vec<bool>,
    trail: Vec<u32>,
    trail_lim: Vec<usize>,
    qhead: usize,
    next_var: usize,
    ok: bool,
    stats: SolveStats,
}

/// Watch-list entry; `blocker` is some other literal of the clause; when it
/// is true the clause need not be visited.
#[derive(Clone, Copy)]
struct Watch {
    clause: u32,
    blocker: u32,
}

enum Search {
    Sat,
    Unsat,
    Restart,
    Timeout,
}

impl Solver {
    pub fn new(num_vars: u32, seed: u64, branching: Branching) -> Self {
        let n = num_vars as usize;
        let phase = if seed == 0 {
            vec![false; n]
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| rng.gen()).collect()
        };
        Solver {
            branching,
            activity: vec![0.0; n],
            var_inc: 1.0,
            order: VarHeap::new(n),
            clauses: Vec::new(),
            learnt: Vec::new(),
            deleted: Vec::new(),
            num_learnts: 0,
            watches: vec![Vec::new(); 2 * n],
            assigns: vec![UNDEF; n],
            level: vec![0; n],
            reason: vec![NONE; n],
            phase,
            seen: vec![false; n],
            trail: Vec::with_capacity(n),
            trail_lim: Vec::new(),
            qhead: 0,
            next_var: 0,
            ok: true,
            stats: SolveStats::default(),
        }
    }

    pub fn from_cnf(cnf: &CnfInstance, seed: u64, branching: Branching) -> Self {
        let mut s = Solver::new(cnf.num_vars, seed, branching);
        let mut distinct = HashSet::new();
        for c in cnf.clauses.iter() {
            let mut key = c.to_vec();
            key.sort_unstable();
            if !distinct.insert(key) {
                continue;
            }
            if !s.add_clause(c) {
                break;
            }
        }
        s
    }

    pub fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    pub fn stats(&self) -> SolveStats {
        self.stats
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, x: u32, reason: u32) {
        let v = (x >> 1) as usize;
        self.assigns[v] = 1 ^ (x & 1) as u8;
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(x);
    }

    fn attach(&mut self, lits: Vec<u32>, learnt: bool) -> u32 {
        let ci = self.clauses.len() as u32;
        self.watches[lits[0] as usize].push(Watch {
            clause: ci,
            blocker: lits[1],
        });
        self.watches[lits[1] as usize].push(Watch {
            clause: ci,
            blocker: lits[0],
        });
        self.clauses.push(lits);
        self.learnt.push(learnt);
        self.deleted.push(false);
        if learnt {
            self.num_learnts += 1;
        }
        ci
    }

    /// Adds a clause at decision level 0. Returns false once the formula
    /// is known to be unsatisfiable.
    pub fn add_clause(&mut self, clause: &[Lit]) -> bool {
        if !self.ok {
            return false;
        }
        self.backtrack(0);
        let mut lits: Vec<u32> = clause.iter().map(|&l| ilit(l)).collect();
        lits.sort_unstable();
        lits.dedup();
        if lits.windows(2).any(|w| w[0] ^ 1 == w[1]) {
            return true;
        }
        let mut kept = Vec::with_capacity(lits.len());
        for x in lits {
            match lit_value(&self.assigns, x) {
                1 => return true,
                0 => {}
                _ => kept.push(x),
            }
        }
        match kept.len() {
            0 => self.ok = false,
            1 => {
                self.enqueue(kept[0], NONE);
                if self.propagate().is_some() {
                    self.ok = false;
                }
            }
            _ => {
                self.attach(kept, false);
            }
        }
        self.ok
    }

    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = p ^ 1;
            let mut ws = std::mem::take(&mut self.watches[false_lit as usize]);
            let (mut i, mut j) = (0, 0);
            let mut conflict = None;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if lit_value(&self.assigns, w.blocker) == 1 {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let ci = w.clause;
                if self.deleted[ci as usize] {
                    continue;
                }
                let c = &mut self.clauses[ci as usize];
                if c[0] == false_lit {
                    c.swap(0, 1);
                }
                let first = c[0];
                let kept = Watch {
                    clause: ci,
                    blocker: first,
                };
                if first != w.blocker && lit_value(&self.assigns, first) == 1 {
                    ws[j] = kept;
                    j += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..c.len() {
                    if lit_value(&self.assigns, c[k]) != 0 {
                        c.swap(1, k);
                        let nw = c[1] as usize;
                        self.watches[nw].push(kept);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = kept;
                j += 1;
                if lit_value(&self.assigns, first) == 0 {
                    conflict = Some(ci);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, ci);
                }
            }
            ws.truncate(j);
            self.watches[false_lit as usize] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn analyze(&mut self, mut confl: u32) -> (Vec<u32>, u32) {
        let mut learnt = vec![0u32];
        let mut path = 0usize;
        let mut p: Option<u32> = None;
        let mut idx = self.trail.len();
        let current = self.decision_level();
        loop {
            let start = usize::from(p.is_some());
            for k in start..self.clauses[confl as usize].len() {
                let q = self.clauses[confl as usize][k];
                let v = (q >> 1) as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump(v);
                    if self.level[v] == current {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[(self.trail[idx] >> 1) as usize] {
                    break;
                }
            }
            let x = self.trail[idx];
            let v = (x >> 1) as usize;
            p = Some(x);
            confl = self.reason[v];
            self.seen[v] = false;
            path -= 1;
            if path == 0 {
                break;
            }
        }
        learnt[0] = p.expect("conflict at level > 0") ^ 1;

        // Drop literals implied by other literals of the clause.
        let mut out = vec![learnt[0]];
        for &q in &learnt[1..] {
            let r = self.reason[(q >> 1) as usize];
            let redundant = r != NONE
                && self.clauses[r as usize][1..].iter().all(|&y| {
                    let u = (y >> 1) as usize;
                    self.seen[u] || self.level[u] == 0
                });
            if !redundant {
                out.push(q);
            }
        }
        for &q in &learnt[1..] {
            self.seen[(q >> 1) as usize] = false;
        }

        let mut bt = 0;
        if out.len() > 1 {
            let mut best = 1;
            for k in 2..out.len() {
                if self.level[(out[k] >> 1) as usize] > self.level[(out[best] >> 1) as usize] {
                    best = k;
                }
            }
            out.swap(1, best);
            bt = self.level[(out[1] >> 1) as usize];
        }
        (out, bt)
    }

    fn bump(&mut self, v: usize) {
        if self.branching == Branching::Static {
            return;
        }
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        if self.order.contains(v) {
            let i = self.order.pos[v] as usize;
            self.order.up(i, &self.activity);
        }
    }

    fn backtrack(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let start = self.trail_lim[level as usize];
        for &x in &self.trail[start..] {
            let v = (x >> 1) as usize;
            self.phase[v] = self.assigns[v] == 1;
            self.assigns[v] = UNDEF;
            self.reason[v] = NONE;
            self.next_var = self.next_var.min(v);
            if self.branching == Branching::Activity {
                self.order.insert(v, &self.activity);
            }
        }
        self.trail.truncate(start);
        self.trail_lim.truncate(level as usize);
        self.qhead = self.trail.len();
    }

    fn reduce_learnts(&mut self) {
        let mut cands: Vec<(usize, u32)> = (0..self.clauses.len())
            .filter(|&ci| self.learnt[ci] && !self.deleted[ci] && self.clauses[ci].len() > 2)
            .filter(|&ci| {
                let c0 = self.clauses[ci][0];
                !(self.reason[(c0 >> 1) as usize] == ci as u32 && lit_value(&self.assigns, c0) == 1)
            })
            .map(|ci| (self.clauses[ci].len(), ci as u32))
            .collect();
        cands.sort_unstable_by(|a, b| b.cmp(a));
        for &(_, ci) in &cands[..cands.len() / 2] {
            self.deleted[ci as usize] = true;
            self.clauses[ci as usize] = Vec::new();
            self.num_learnts -= 1;
        }
        for ws in &mut self.watches {
            ws.retain(|w| !self.deleted[w.clause as usize]);
        }
    }

    fn pick_branch(&mut self) -> Option<u32> {
        if self.branching == Branching::Activity {
            while let Some(v) = self.order.pop(&self.activity) {
                if self.assigns[v] == UNDEF {
                    return Some(((v as u32) << 1) | (!self.phase[v]) as u32);
                }
            }
            return None;
        }
        while self.next_var < self.assigns.len() && self.assigns[self.next_var] != UNDEF {
            self.next_var += 1;
        }
        let v = self.next_var;
        (v < self.assigns.len()).then(|| ((v as u32) << 1) | (!self.phase[v]) as u32)
    }

    fn search(
        &mut self,
        conflict_budget: u64,
        deadline: Option<Instant>,
        max_learnts: &mut f64,
    ) -> Search {
        let mut conflicts = 0u64;
        loop {
            if let Some(ci) = self.propagate() {
                self.stats.conflicts += 1;
                conflicts += 1;
                if self.decision_level() == 0 {
                    return Search::Unsat;
                }
                let (learnt, bt) = self.analyze(ci);
                self.var_inc /= 0.95;
                self.backtrack(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NONE);
                } else {
                    let first = learnt[0];
                    let ci = self.attach(learnt, true);
                    self.enqueue(first, ci);
                }
                if conflicts.is_multiple_of(256) && deadline.is_some_and(|d| Instant::now() >= d) {
                    return Search::Timeout;
                }
            } else {
                if conflicts >= conflict_budget {
                    self.backtrack(0);
                    return Search::Restart;
                }
                if self.num_learnts as f64 >= *max_learnts + self.trail.len() as f64 {
                    self.reduce_learnts();
                    *max_learnts *= 1.1;
                }
                match self.pick_branch() {
                    None => return Search::Sat,
                    Some(x) => {
                        self.stats.decisions += 1;
                        if self.stats.decisions.is_multiple_of(4096)
                            && deadline.is_some_and(|d| Instant::now() >= d)
                        {
                            return Search::Timeout;
                        }
                        self.trail_lim.push(self.trail.len());
                        self.enqueue(x, NONE);
                    }
                }
            }
        }
    }

    /// Runs until a model, a refutation, or the deadline.
    pub fn solve(&mut self, deadline: Option<Instant>) -> SolveStatus {
        if !self.ok {
            return SolveStatus::Unsat;
        }
        let mut max_learnts = (self.clauses.len() as f64 / 3.0).max(2000.0);
        let mut restart = 1u64;
        loop {
            match self.search(100 * luby(restart), deadline, &mut max_learnts) {
                Search::Sat => return SolveStatus::Sat,
                Search::Unsat => {
                    self.ok = false;
                    return SolveStatus::Unsat;
                }
                Search::Timeout => {
                    self.backtrack(0);
                    return SolveStatus::Timeout;
                }
                Search::Restart => {
                    restart += 1;
                    self.stats.restarts += 1;
                }
            }
        }
    }

    /// Current full assignment as literals over variables `1..=n`.
    pub fn model(&self) -> Vec<Lit> {
        self.assigns
            .iter()
            .enumerate()
            .map(|(v, &a)| Lit::with_value(v as u32 + 1, a == 1))
            .collect()
    }
}

fn check_size(cnf: &CnfInstance, opts: &SolverOptions) -> Result<(), SolverError> {
    if cnf.num_clauses() > opts.max_clauses {
        return Err(SolverError::TooLarge {
            clauses: cnf.num_clauses(),
            max: opts.max_clauses,
        });
    }
    Ok(())
}

/// Solves `cnf` with the built-in solver.
pub fn solve_internal(cnf: &CnfInstance, opts: &SolverOptions) -> Result<SolverModel, SolverError> {
    solve_with_stats(cnf, opts).map(|(m, _)| m)
}

pub fn solve_with_stats(
    cnf: &CnfInstance,
    opts: &SolverOptions,
) -> Result<(SolverModel, SolveStats), SolverError> {
    check_size(cnf, opts)?;
    let deadline = opts.timeout.map(|t| Instant::now() + t);
    let mut s = Solver::from_cnf(cnf, opts.seed, opts.branching);
    let status = s.solve(deadline);
    let assignment = if status == SolveStatus::Sat {
        s.model()
    } else {
        Vec::new()
    };
    Ok((SolverModel { status, assignment }, s.stats()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enumeration {
    pub models: Vec<SolverModel>,
    /// True when the search proved there are no further models.
    pub exhausted: bool,
}

/// Enumerates models that differ on `projection` (all variables when
/// `None`), stopping after `limit` models or at the deadline.
pub fn enumerate_models(
    cnf: &CnfInstance,
    opts: &SolverOptions,
    projection: Option<&[u32]>,
    limit: usize,
) -> Result<Enumeration, SolverError> {
    check_size(cnf, opts)?;
    let deadline = opts.timeout.map(|t| Instant::now() + t);
    let mut s = Solver::from_cnf(cnf, opts.seed, opts.branching);
    let all: Vec<u32> = (1..=cnf.num_vars).collect();
    let proj = projection.unwrap_or(&all);
    let mut models = Vec::new();
    loop {
        match s.solve(deadline) {
            SolveStatus::Sat => {
                let model = s.model();
                let block: Vec<Lit> = proj.iter().map(|&v| !model[v as usize - 1]).collect();
                models.push(SolverModel {
                    status: SolveStatus::Sat,
                    assignment: model,
                });
                if block.is_empty() || !s.add_clause(&block) {
                    return Ok(Enumeration {
                        models,
                        exhausted: true,
                    });
                }
                if models.len() >= limit {
                    return Ok(Enumeration {
                        models,
                        exhausted: false,
                    });
                }
            }
            SolveStatus::Unsat => {
                return Ok(Enumeration {
                    models,
                    exhausted: true,
                })
            }
            _ => {
                return Ok(Enumeration {
                    models,
                    exhausted: false,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{check_assignment, ClauseList};
    use proptest::prelude::*;

    fn cnf(num_vars: u32, clauses: &[&[i32]]) -> CnfInstance {
        CnfInstance {
            num_vars,
            clauses: clauses
                .iter()
                .map(|c| {
                    c.iter()
                        .map(|&x| Lit::from_dimacs(x).unwrap())
                        .collect::<Vec<_>>()
                })
                .collect(),
            meta: None,
        }
    }

    fn values(m: &SolverModel) -> Vec<bool> {
        m.assignment.iter().map(|l| !l.is_negative()).collect()
    }

    fn brute_force_count(c: &CnfInstance) -> usize {
        (0u32..1 << c.num_vars)
            .filter(|a| {
                let asg: Vec<bool> = (0..c.num_vars).map(|i| (a >> i) & 1 == 1).collect();
                check_assignment(c, &asg).unwrap().satisfied
            })
            .count()
    }

    #[test]
    fn luby_prefix() {
        let s: Vec<u64> = (1..=15).map(luby).collect();
        assert_eq!(s, [1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]);
    }

    #[test]
    fn empty_formula_is_sat_with_empty_model() {
        let m = solve_internal(&cnf(0, &[]), &SolverOptions::default()).unwrap();
        assert_eq!(m.status, SolveStatus::Sat);
        assert!(m.assignment.is_empty());
    }

    #[test]
    fn complementary_units_unsat() {
        let m = solve_internal(&cnf(1, &[&[1], &[-1]]), &SolverOptions::default()).unwrap();
        assert_eq!(m.status, SolveStatus::Unsat);
    }

    #[test]
    fn empty_clause_unsat() {
        let c = CnfInstance {
            num_vars: 2,
            clauses: [Vec::<Lit>::new()].into_iter().collect(),
            meta: None,
        };
        assert_eq!(
            solve_internal(&c, &SolverOptions::default())
                .unwrap()
                .status,
            SolveStatus::Unsat
        );
    }

    #[test]
    fn pigeonhole_4_into_3_unsat() {
        // p(i,j): pigeon i in hole j, var 3i+j+1.
        let var = |i: i32, j: i32| 3 * i + j + 1;
        let mut cl: Vec<Vec<i32>> = (0..4)
            .map(|i| (0..3).map(|j| var(i, j)).collect())
            .collect();
        for j in 0..3 {
            for a in 0..4 {
                for b in a + 1..4 {
                    cl.push(vec![-var(a, j), -var(b, j)]);
                }
            }
        }
        let refs: Vec<&[i32]> = cl.iter().map(|c| c.as_slice()).collect();
        let m = solve_internal(&cnf(12, &refs), &SolverOptions::default()).unwrap();
        assert_eq!(m.status, SolveStatus::Unsat);
    }

    #[test]
    fn size_guard() {
        let c = cnf(1, &[&[1], &[1]]);
        let opts = SolverOptions {
            max_clauses: 1,
            ..Default::default()
        };
        assert_eq!(
            solve_internal(&c, &opts),
            Err(SolverError::TooLarge { clauses: 2, max: 1 })
        );
    }

    #[test]
    fn enumeration_counts_xor_models() {
        // x1 ^ x2 ^ x3 = 1 has four models.
        let c = cnf(3, &[&[1, 2, 3], &[1, -2, -3], &[-1, 2, -3], &[-1, -2, 3]]);
        let e = enumerate_models(&c, &SolverOptions::default(), None, 100).unwrap();
        assert!(e.exhausted);
        assert_eq!(e.models.len(), 4);
        let proj = enumerate_models(&c, &SolverOptions::default(), Some(&[1]), 100).unwrap();
        assert_eq!(proj.models.len(), 2);
        let capped = enumerate_models(&c, &SolverOptions::default(), None, 3).unwrap();
        assert_eq!(capped.models.len(), 3);
        assert!(!capped.exhausted);
    }

    fn random_3sat() -> impl Strategy<Value = CnfInstance> {
        (3u32..10).prop_flat_map(|n| {
            prop::collection::vec(prop::collection::vec((1..=n, any::<bool>()), 3), 0..45).prop_map(
                move |raw| {
                    let clauses: ClauseList = raw
                        .into_iter()
                        .map(|c| {
                            c.into_iter()
                                .map(|(v, s)| Lit::with_value(v, s))
                                .collect::<Vec<_>>()
                        })
                        .collect();
                    CnfInstance {
                        num_vars: n,
                        clauses,
                        meta: None,
                    }
                },
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn agrees_with_brute_force(c in random_3sat(), seed in 0u64..4) {
            let opts = SolverOptions { seed, ..Default::default() };
            let m = solve_internal(&c, &opts).unwrap();
            let count = brute_force_count(&c);
            prop_assert_eq!(m.status == SolveStatus::Sat, count > 0);
            if m.status == SolveStatus::Sat {
                prop_assert!(check_assignment(&c, &values(&m)).unwrap().satisfied);
            }
            let e = enumerate_models(&c, &opts, None, usize::MAX).unwrap();
            prop_assert!(e.exhausted);
            prop_assert_eq!(e.models.len(), count);
        }
    }
}
