//! Algorithm configuration by random sampling and racing.
//!
//! The default configuration is evaluated first. Each sampled challenger
//! then races the incumbent on the incumbent's seeds, doubling its run
//! count (1, 2, 4, ...) and dropping out as soon as its median is not
//! strictly below the incumbent's on the shared seeds. Challenger runs
//! are capped at a multiple of the incumbent's median. Every decision
//! depends only on the gathered results, never on their arrival order.

pub mod pcs;

use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, HashSet};
use std::hash::{Hash, Hasher};
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dimacs::SolveStatus;
use crate::encoder::CnfInstance;
use crate::harness::{run_once, Backend, Flag, HarnessError, NamedConfig, RunItem};
use crate::stats::quantile_sorted;
pub use pcs::{parse_pcs, to_pcs, ParamDef, ParamKind, ParamSpace, ParamValue, PcsError};

#[derive(Debug, Error)]
pub enum TunerError {
    #[error("evaluation failed: {0}")]
    Evaluation(String),
    #[error("no incumbent recorded")]
    EmptyHistory,
    #[error("flag {0:?} does not belong to the parameter space")]
    UnknownFlag(String),
    #[error("illegal value {value:?} for {name}")]
    IllegalValue { name: String, value: String },
    #[error("journal line {line}: {msg}")]
    Journal { line: usize, msg: String },
    #[error(transparent)]
    Pcs(#[from] PcsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Default,
    Sampled,
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    /// One value per space parameter, in space order.
    pub values: Vec<(String, ParamValue)>,
    pub provenance: Provenance,
}

impl Configuration {
    pub fn default_of(space: &ParamSpace) -> Self {
        Configuration {
            values: space
                .params
                .iter()
                .map(|p| (p.name.clone(), p.default_value()))
                .collect(),
            provenance: Provenance::Default,
        }
    }

    /// Canonical text identifying the configuration.
    pub fn key(&self) -> String {
        self.values
            .iter()
            .map(|(n, v)| format!("{n}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn validate(&self, space: &ParamSpace) -> bool {
        self.values.len() == space.params.len()
            && self
                .values
                .iter()
                .zip(&space.params)
                .all(|((n, v), p)| *n == p.name && p.is_legal(v))
    }

    pub fn to_named(&self, name: &str) -> NamedConfig {
        NamedConfig {
            name: name.to_string(),
            flags: self.values.iter().map(|(n, v)| Flag::new(n, v)).collect(),
            requires_modified_solver: false,
        }
    }

    /// Reads flags back into a configuration; absent parameters take their
    /// defaults.
    pub fn from_named(space: &ParamSpace, config: &NamedConfig) -> Result<Self, TunerError> {
        let mut c = Configuration::default_of(space);
        c.provenance = Provenance::User;
        for f in &config.flags {
            let def = space
                .get(&f.name)
                .ok_or_else(|| TunerError::UnknownFlag(f.name.clone()))?;
            let v = def
                .parse_value(&f.value)
                .ok_or_else(|| TunerError::IllegalValue {
                    name: f.name.clone(),
                    value: f.value.clone(),
                })?;
            let slot = c
                .values
                .iter_mut()
                .find(|(n, _)| *n == f.name)
                .expect("space parameter");
            slot.1 = v;
        }
        Ok(c)
    }
}

pub fn sample_config(space: &ParamSpace, rng: &mut impl Rng) -> Configuration {
    Configuration {
        values: space
            .params
            .iter()
            .map(|p| (p.name.clone(), p.sample(rng)))
            .collect(),
        provenance: Provenance::Sampled,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EvalStatus {
    Ok,
    TimeoutCapped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub config: String,
    pub instance: String,
    pub seed: u64,
    pub runtime: f64,
    pub status: EvalStatus,
}

/// Raw outcome of one target run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetRun {
    pub runtime: f64,
    pub solved: bool,
}

/// Boundary between the configurator and whatever it tunes.
pub trait TargetEvaluator: Sync {
    fn run(
        &self,
        config: &Configuration,
        instance: &str,
        seed: u64,
        cutoff: f64,
    ) -> Result<TargetRun, TunerError>;
}

/// Runs the target and caps the result: unsolved runs and runs reaching
/// `cutoff` are recorded at exactly `cutoff`.
pub fn evaluate(
    tae: &dyn TargetEvaluator,
    config: &Configuration,
    instance: &str,
    seed: u64,
    cutoff: f64,
) -> Result<EvalResult, TunerError> {
    assert!(cutoff > 0.0, "cutoff must be positive");
    let r = tae.run(config, instance, seed, cutoff)?;
    let (runtime, status) = if r.solved && r.runtime < cutoff {
        (r.runtime, EvalStatus::Ok)
    } else {
        (cutoff, EvalStatus::TimeoutCapped)
    };
    Ok(EvalResult {
        config: config.key(),
        instance: instance.to_string(),
        seed,
        runtime,
        status,
    })
}

/// Deterministic noisy response `scale * (p - optimum)^2 + base + N(0, sigma)`
/// over one integer parameter.
#[derive(Debug, Clone)]
pub struct SyntheticTae {
    pub param: String,
    pub optimum: f64,
    pub scale: f64,
    pub base: f64,
    pub sigma: f64,
}

impl SyntheticTae {
    pub fn gluecut0() -> Self {
        SyntheticTae {
            param: "gluecut0".into(),
            optimum: 4.0,
            scale: 100.0,
            base: 10.0,
            sigma: 1.0,
        }
    }

    pub fn mean_runtime(&self, config: &Configuration) -> f64 {
        let x = match config.get(&self.param) {
            Some(ParamValue::Int(v)) => *v as f64,
            Some(ParamValue::Real(v)) => *v,
            _ => self.optimum,
        };
        self.scale * (x - self.optimum).powi(2) + self.base
    }
}

impl TargetEvaluator for SyntheticTae {
    fn run(
        &self,
        config: &Configuration,
        _instance: &str,
        seed: u64,
        _cutoff: f64,
    ) -> Result<TargetRun, TunerError> {
        let mut h = DefaultHasher::new();
        config.key().hash(&mut h);
        seed.hash(&mut h);
        let mut rng = ChaCha8Rng::seed_from_u64(h.finish());
        let noise = Normal::new(0.0, self.sigma)
            .expect("finite sigma")
            .sample(&mut rng);
        Ok(TargetRun {
            runtime: (self.mean_runtime(config) + noise).max(0.0),
            solved: true,
        })
    }
}

/// Evaluates configurations by running a solver on one instance through
/// the harness; a run counts as solved only with a verified key.
pub struct HarnessTae {
    pub instance_path: PathBuf,
    pub instance: Arc<CnfInstance>,
    pub backend: Backend,
}

impl TargetEvaluator for HarnessTae {
    fn run(
        &self,
        config: &Configuration,
        _instance: &str,
        seed: u64,
        cutoff: f64,
    ) -> Result<TargetRun, TunerError> {
        let item = RunItem {
            instance_path: self.instance_path.clone(),
            instance: Arc::clone(&self.instance),
            config: config.to_named("candidate"),
            seed,
            timeout: Some(Duration::from_secs_f64(cutoff)),
            repetition: 0,
        };
        let rec = run_once(&item, &self.backend)
            .map_err(|e: HarnessError| TunerError::Evaluation(e.to_string()))?;
        Ok(TargetRun {
            runtime: rec.runtime(),
            solved: rec.status == SolveStatus::Sat && rec.verified,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaceOptions {
    /// Maximum number of target evaluations.
    pub budget: usize,
    /// Per-run cap in seconds.
    pub cutoff: f64,
    /// Challenger runs are capped at this multiple of the incumbent median.
    pub cap_factor: f64,
    /// Most runs any configuration receives.
    pub max_runs: usize,
    pub workers: usize,
    pub seed: u64,
}

impl Default for RaceOptions {
    fn default() -> Self {
        RaceOptions {
            budget: 500,
            cutoff: 3600.0,
            cap_factor: 2.0,
            max_runs: 8,
            workers: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incumbent {
    pub config: Configuration,
    /// Median over the seeds the decision was taken on.
    pub median: f64,
    /// The replaced incumbent's median on the same seeds.
    pub previous_median: Option<f64>,
    pub supporting: Vec<EvalResult>,
    pub evaluations_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaceOutcome {
    pub history: Vec<Incumbent>,
    pub evaluations: Vec<EvalResult>,
}

impl RaceOutcome {
    pub fn incumbent(&self) -> Option<&Incumbent> {
        self.history.last()
    }
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum JournalEntry {
    Header {
        instance: String,
        pcs: String,
        options: RaceOptions,
    },
    Eval(EvalResult),
    Incumbent(Incumbent),
}

struct Racer<'a, 'j> {
    space: &'a ParamSpace,
    tae: &'a dyn TargetEvaluator,
    instance: &'a str,
    opts: &'a RaceOptions,
    seeds: Vec<u64>,
    results: HashMap<String, Vec<EvalResult>>,
    out: RaceOutcome,
    journal: Option<&'j mut dyn Write>,
}

impl Racer<'_, '_> {
    fn remaining(&self) -> usize {
        self.opts.budget - self.out.evaluations.len()
    }

    fn log(&mut self, e: &JournalEntry) -> Result<(), TunerError> {
        if let Some(w) = self.journal.as_mut() {
            writeln!(w, "{}", serde_json::to_string(e).expect("serializable"))?;
        }
        Ok(())
    }

    fn runs(&self, c: &Configuration) -> usize {
        self.results.get(&c.key()).map_or(0, Vec::len)
    }

    /// Runs `batch` (configuration, seed, cap) in parallel, recording the
    /// results in batch order. The batch is cut to the remaining budget.
    fn run_batch(&mut self, mut batch: Vec<(Configuration, u64, f64)>) -> Result<bool, TunerError> {
        let complete = batch.len() <= self.remaining();
        batch.truncate(self.remaining());
        let (tae, instance) = (self.tae, self.instance);
        let work = || {
            batch
                .par_iter()
                .map(|(c, seed, cap)| evaluate(tae, c, instance, *seed, *cap))
                .collect::<Vec<_>>()
        };
        let results = if self.opts.workers > 1 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(self.opts.workers)
                .build()
                .map_err(|e| TunerError::Evaluation(e.to_string()))?
                .install(work)
        } else {
            batch
                .iter()
                .map(|(c, seed, cap)| evaluate(tae, c, instance, *seed, *cap))
                .collect()
        };
        for ((c, _, _), r) in batch.iter().zip(results) {
            let r = r?;
            self.log(&JournalEntry::Eval(r.clone()))?;
            self.results.entry(c.key()).or_default().push(r.clone());
            self.out.evaluations.push(r);
        }
        Ok(complete)
    }

    fn median_on(&self, c: &Configuration, n: usize) -> f64 {
        let rs = &self.results[&c.key()];
        median(&rs[..n].iter().map(|r| r.runtime).collect::<Vec<_>>())
    }

    fn crown(
        &mut self,
        c: &Configuration,
        n: usize,
        previous: Option<f64>,
    ) -> Result<(), TunerError> {
        let inc = Incumbent {
            config: c.clone(),
            median: self.median_on(c, n),
            previous_median: previous,
            supporting: self.results[&c.key()][..n].to_vec(),
            evaluations_used: self.out.evaluations.len(),
        };
        self.log(&JournalEntry::Incumbent(inc.clone()))?;
        self.out.history.push(inc);
        Ok(())
    }

    /// Gives the incumbent one more run if it has fewer than the maximum.
    fn intensify(&mut self, inc: &Configuration) -> Result<bool, TunerError> {
        let n = self.runs(inc);
        if n >= self.opts.max_runs || self.remaining() == 0 {
            return Ok(false);
        }
        self.run_batch(vec![(inc.clone(), self.seeds[n], self.opts.cutoff)])
    }

    /// Returns true if the challenger replaced the incumbent.
    fn challenge(&mut self, inc: &Configuration, chal: &Configuration) -> Result<bool, TunerError> {
        let n_inc = self.runs(inc);
        let mut k = 1;
        loop {
            let k_eff = k.min(n_inc);
            let inc_median = self.median_on(inc, k_eff);
            let cap = (self.opts.cap_factor * inc_median)
                .min(self.opts.cutoff)
                .max(f64::MIN_POSITIVE);
            let have = self.runs(chal);
            let batch: Vec<_> = (have..k_eff)
                .map(|i| (chal.clone(), self.seeds[i], cap))
                .collect();
            if !self.run_batch(batch)? {
                return Ok(false);
            }
            let chal_median = self.median_on(chal, k_eff);
            if chal_median >= inc_median {
                return Ok(false);
            }
            if k_eff == n_inc {
                self.crown(chal, k_eff, Some(inc_median))?;
                return Ok(true);
            }
            k *= 2;
        }
    }
}

/// Races sampled challengers against the incumbent until the evaluation
/// budget is spent. Each incumbent change is written to `journal` along
/// with every evaluation.
pub fn race(
    space: &ParamSpace,
    tae: &dyn TargetEvaluator,
    instance: &str,
    opts: &RaceOptions,
    journal: Option<&mut dyn Write>,
) -> Result<RaceOutcome, TunerError> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let max_runs = opts.max_runs.max(1);
    let mut seeds = Vec::with_capacity(max_runs);
    while seeds.len() < max_runs {
        let s = rng.gen_range(1..=i32::MAX as u64);
        if !seeds.contains(&s) {
            seeds.push(s);
        }
    }
    let opts = RaceOptions {
        max_runs,
        ..opts.clone()
    };
    let mut r = Racer {
        space,
        tae,
        instance,
        opts: &opts,
        seeds,
        results: HashMap::new(),
        out: RaceOutcome {
            history: Vec::new(),
            evaluations: Vec::new(),
        },
        journal,
    };
    r.log(&JournalEntry::Header {
        instance: instance.to_string(),
        pcs: to_pcs(space),
        options: opts.clone(),
    })?;
    if opts.budget == 0 {
        return Ok(r.out);
    }
    let mut inc = Configuration::default_of(space);
    r.run_batch(vec![(inc.clone(), r.seeds[0], opts.cutoff)])?;
    r.crown(&inc, 1, None)?;
    let mut tried: HashSet<String> = HashSet::from([inc.key()]);
    let exhaustible = space.finite_size();
    while r.remaining() > 0 {
        let fresh = (0..100)
            .map(|_| sample_config(r.space, &mut rng))
            .find(|c| !tried.contains(&c.key()));
        let Some(chal) = fresh else {
            if exhaustible.is_some_and(|n| tried.len() as u128 >= n) && !r.intensify(&inc)? {
                break;
            }
            continue;
        };
        tried.insert(chal.key());
        r.intensify(&inc)?;
        if r.remaining() == 0 {
            break;
        }
        if r.challenge(&inc, &chal)? {
            inc = chal;
        }
    }
    Ok(r.out)
}

/// Exports the latest incumbent as a flags configuration named `aac-<n>`,
/// `n` counting incumbent changes.
pub fn export_incumbent(history: &[Incumbent]) -> Result<NamedConfig, TunerError> {
    let last = history.last().ok_or(TunerError::EmptyHistory)?;
    Ok(last.config.to_named(&format!("aac-{}", history.len() - 1)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Journal {
    pub instance: String,
    pub space: ParamSpace,
    pub options: RaceOptions,
    pub evaluations: Vec<EvalResult>,
    pub history: Vec<Incumbent>,
}

pub fn read_journal(text: &str) -> Result<Journal, TunerError> {
    let mut header = None;
    let mut evaluations = Vec::new();
    let mut history = Vec::new();
    for (i, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let entry: JournalEntry = serde_json::from_str(line).map_err(|e| TunerError::Journal {
            line: i + 1,
            msg: e.to_string(),
        })?;
        match entry {
            JournalEntry::Header {
                instance,
                pcs,
                options,
            } => header = Some((instance, parse_pcs(&pcs)?, options)),
            JournalEntry::Eval(e) => evaluations.push(e),
            JournalEntry::Incumbent(c) => history.push(c),
        }
    }
    let (instance, space, options) = header.ok_or(TunerError::Journal {
        line: 1,
        msg: "missing header".into(),
    })?;
    Ok(Journal {
        instance,
        space,
        options,
        evaluations,
        history,
    })
}

/// Answers evaluations from a journal's recorded results.
struct RecordedTae(HashMap<(String, u64), EvalResult>);

impl TargetEvaluator for RecordedTae {
    fn run(
        &self,
        config: &Configuration,
        _instance: &str,
        seed: u64,
        _cutoff: f64,
    ) -> Result<TargetRun, TunerError> {
        let r = self.0.get(&(config.key(), seed)).ok_or_else(|| {
            TunerError::Evaluation(format!(
                "no recorded result for {} seed {seed}",
                config.key()
            ))
        })?;
        Ok(TargetRun {
            runtime: r.runtime,
            solved: r.status == EvalStatus::Ok,
        })
    }
}

/// Re-runs the racing decisions of a journal against its recorded results.
pub fn replay_journal(journal: &Journal) -> Result<RaceOutcome, TunerError> {
    let tae = RecordedTae(
        journal
            .evaluations
            .iter()
            .map(|e| ((e.config.clone(), e.seed), e.clone()))
            .collect(),
    );
    race(
        &journal.space,
        &tae,
        &journal.instance,
        &journal.options,
        None,
    )
}
