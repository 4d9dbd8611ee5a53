//! Repeated solver runs over generated instances.
//!
//! A run spawns an external competition-style solver (or uses the built-in
//! one), enforces a wall-clock timeout, parses the model, decodes the key
//! bits and checks the key by re-encrypting every known plaintext.

use std::collections::HashSet;
use std::fs::OpenOptions;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use wait_timeout::ChildExt;

use crate::cipher::{Cipher, CipherError, State};
use crate::dimacs::{parse_solver_output, DimacsError, SolveStatus, SolverModel};
use crate::encoder::{CnfInstance, InstanceMeta, VarLayout};
use crate::solver::{solve_with_stats, SolverError, SolverOptions};

pub const DEFAULT_TEMPLATE: &str = "cryptominisat5 {flags} --random={seed} {instance}";
pub const PLACEHOLDERS: [&str; 5] = ["flags", "seed", "instance", "timeout", "threads"];

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown placeholder {{{0}}} in solver template")]
    UnknownPlaceholder(String),
    #[error("solver template has no {{instance}} placeholder")]
    MissingInstance,
    #[error("solver template is empty")]
    EmptyTemplate,
    #[error("unknown configuration {0:?}")]
    UnknownConfig(String),
    #[error("flags line {line}: {msg}")]
    Flags { line: usize, msg: String },
    #[error("failed to start {program}: {source}")]
    Spawn { program: String, source: io::Error },
    #[error("instance carries no metadata")]
    MissingMetadata,
    #[error("model does not assign every key variable")]
    IncompleteModel,
    #[error("repetitions must be at least 1")]
    NoRepetitions,
    #[error(transparent)]
    Output(#[from] DimacsError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Cipher(#[from] CipherError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flag {
    pub name: String,
    pub value: String,
}

impl Flag {
    pub fn new(name: &str, value: impl ToString) -> Self {
        Flag {
            name: name.to_string(),
            value: value.to_string(),
        }
    }

    pub fn render(&self) -> String {
        format!("--{}={}", self.name, self.value)
    }
}

/// Flags passed to every solver run ahead of the configuration's own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseFlags {
    pub verb: u32,
    pub threads: u32,
    pub comps: u32,
}

impl Default for BaseFlags {
    fn default() -> Self {
        BaseFlags {
            verb: 4,
            threads: 31,
            comps: 0,
        }
    }
}

impl BaseFlags {
    pub fn flags(&self) -> Vec<Flag> {
        vec![
            Flag::new("verb", self.verb),
            Flag::new("threads", self.threads),
            Flag::new("comps", self.comps),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedConfig {
    pub name: String,
    pub flags: Vec<Flag>,
    /// Expects a solver build in which every thread uses these settings.
    pub requires_modified_solver: bool,
}

impl NamedConfig {
    pub fn new(name: &str, flags: &[(&str, &str)]) -> Self {
        NamedConfig {
            name: name.to_string(),
            flags: flags.iter().map(|(n, v)| Flag::new(n, v)).collect(),
            requires_modified_solver: false,
        }
    }

    /// Base flags followed by the configuration's flags, in order.
    pub fn argv_flags(&self, base: &BaseFlags) -> Vec<String> {
        base.flags()
            .iter()
            .chain(&self.flags)
            .map(Flag::render)
            .collect()
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.flags
            .iter()
            .find(|f| f.name == name)
            .map(|f| f.value.as_str())
    }
}

/// The explored parameter combinations, plus `default` (no extra flags).
pub fn builtin_configs() -> Vec<NamedConfig> {
    let sw4 = [
        ("restart", "glue"),
        ("gluecut0", "4"),
        ("updateglueonprop", "1"),
    ];
    let mut sw10 = sw4.to_vec();
    sw10.extend([("gluecut1", "7"), ("gluehist", "45")]);
    let modified = |mut c: NamedConfig| {
        c.requires_modified_solver = true;
        c
    };
    vec![
        NamedConfig::new("default", &[]),
        NamedConfig::new(
            "sw1",
            &[
                ("restart", "geom"),
                ("maple", "1"),
                ("bva", "0"),
                ("sync", "30000"),
            ],
        ),
        NamedConfig::new(
            "sw2",
            &[
                ("gluehist", "30"),
                ("maple", "1"),
                ("maxnummatrixes", "8"),
                ("bva", "0"),
            ],
        ),
        modified(NamedConfig::new(
            "sw3",
            &[
                ("restart", "geom"),
                ("maple", "1"),
                ("cachesize", "4096"),
                ("cachecutoff", "3000"),
            ],
        )),
        modified(NamedConfig::new("sw4", &sw4)),
        NamedConfig::new("sw6", &sw4),
        NamedConfig::new(
            "sw7",
            &[
                ("gluecut0", "5"),
                ("gluecut1", "7"),
                ("updateglueonprop", "1"),
            ],
        ),
        modified(NamedConfig::new("sw10", &sw10)),
    ]
}

pub fn builtin_config(name: &str) -> Result<NamedConfig, HarnessError> {
    builtin_configs()
        .into_iter()
        .find(|c| c.name == name)
        .ok_or_else(|| HarnessError::UnknownConfig(name.to_string()))
}

/// Parses a flags file: `# name=<id>` names the configuration, other `#`
/// lines are comments, and flags appear as `--k=v` or `--k v`.
pub fn parse_flags(text: &str, default_name: &str) -> Result<NamedConfig, HarnessError> {
    let mut name = default_name.to_string();
    let mut flags = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(c) = line.strip_prefix('#') {
            if let Some(n) = c.trim().strip_prefix("name=") {
                name = n.trim().to_string();
            }
            continue;
        }
        let mut toks = line.split_whitespace().peekable();
        while let Some(tok) = toks.next() {
            let err = |msg: &str| HarnessError::Flags {
                line: i + 1,
                msg: format!("{msg}: {tok:?}"),
            };
            let body = tok
                .strip_prefix("--")
                .ok_or_else(|| err("expected --flag"))?;
            let flag = match body.split_once('=') {
                Some((k, v)) if !k.is_empty() => Flag::new(k, v),
                Some(_) => return Err(err("empty flag name")),
                None => match toks.next_if(|t| !t.starts_with("--")) {
                    Some(v) => Flag::new(body, v),
                    None => return Err(err("flag without value")),
                },
            };
            flags.push(flag);
        }
    }
    Ok(NamedConfig {
        name,
        flags,
        requires_modified_solver: false,
    })
}

pub fn format_flags(config: &NamedConfig) -> String {
    let mut out = format!("# name={}\n", config.name);
    for f in &config.flags {
        out.push_str(&f.render());
        out.push('\n');
    }
    out
}

/// Built-in name, or a path to a flags file.
pub fn resolve_config(spec: &str) -> Result<NamedConfig, HarnessError> {
    match builtin_config(spec) {
        Ok(c) => Ok(c),
        Err(e) => {
            let path = Path::new(spec);
            if path.is_file() {
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(spec);
                parse_flags(&std::fs::read_to_string(path)?, stem)
            } else {
                Err(e)
            }
        }
    }
}

/// Substitutes placeholders in a whitespace-separated template. `{flags}`
/// as a whole token expands to the base and configuration flags.
pub fn build_command(
    config: &NamedConfig,
    base: &BaseFlags,
    template: &str,
    instance: &Path,
    seed: u64,
    timeout: Option<Duration>,
) -> Result<Vec<String>, HarnessError> {
    let mut argv = Vec::new();
    let mut saw_instance = false;
    for tok in template.split_whitespace() {
        if tok == "{flags}" {
            argv.extend(config.argv_flags(base));
            continue;
        }
        let mut out = String::new();
        let mut rest = tok;
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let close = rest[open..]
                .find('}')
                .ok_or_else(|| HarnessError::UnknownPlaceholder(rest[open + 1..].to_string()))?;
            let key = &rest[open + 1..open + close];
            match key {
                "instance" => {
                    saw_instance = true;
                    out.push_str(&instance.to_string_lossy());
                }
                "seed" => out.push_str(&seed.to_string()),
                "timeout" => out.push_str(&timeout.map_or(0, |t| t.as_secs().max(1)).to_string()),
                "threads" => out.push_str(&base.threads.to_string()),
                "flags" => out.push_str(&config.argv_flags(base).join(" ")),
                other => return Err(HarnessError::UnknownPlaceholder(other.to_string())),
            }
            rest = &rest[open + close + 1..];
        }
        out.push_str(rest);
        argv.push(out);
    }
    if argv.is_empty() {
        return Err(HarnessError::EmptyTemplate);
    }
    if !saw_instance {
        return Err(HarnessError::MissingInstance);
    }
    Ok(argv)
}

#[derive(Debug, Clone)]
pub enum Backend {
    External {
        template: String,
        base: BaseFlags,
        env: Vec<(String, String)>,
    },
    Internal(SolverOptions),
}

impl Backend {
    pub fn external(template: &str, threads: u32) -> Self {
        Backend::External {
            template: template.to_string(),
            base: BaseFlags {
                threads,
                ..BaseFlags::default()
            },
            env: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub config: String,
    pub repetition: usize,
    pub seed: u64,
    pub wall_time: f64,
    /// Time reported by the solver for its winning thread, when printed.
    pub solve_time: Option<f64>,
    pub status: SolveStatus,
    pub recovered_key: Option<String>,
    pub verified: bool,
    pub anomaly: Option<String>,
    pub solver: String,
}

impl RunRecord {
    /// Solver-reported time when available, wall time otherwise.
    pub fn runtime(&self) -> f64 {
        self.solve_time.unwrap_or(self.wall_time)
    }
}

/// Decodes the secret-key bits of a model into hex.
pub fn extract_key(model: &SolverModel, layout: &VarLayout) -> Result<String, HarnessError> {
    let values = model.values();
    let key = layout
        .decode_secret_key(|v| values.get(v as usize).copied().flatten())
        .ok_or(HarnessError::IncompleteModel)?;
    Ok(key.to_hex(layout.word_bits))
}

/// Re-encrypts every recorded plaintext under `key_hex`.
pub fn verify_key(meta: &InstanceMeta, key_hex: &str) -> Result<bool, HarnessError> {
    let cipher = Cipher::new(meta.params.clone())?;
    let key: State = cipher.parse_state(key_hex)?;
    let km = cipher.expand_key(&key)?;
    for (pt, ct) in meta.plaintexts.iter().zip(&meta.ciphertexts) {
        let got = cipher.encrypt(&cipher.parse_state(pt)?, &km)?;
        if got != cipher.parse_state(ct)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Reads `c Total time ... : <seconds>` style lines; the last one wins.
pub fn parse_reported_time(output: &str) -> Option<f64> {
    output
        .lines()
        .filter(|l| l.starts_with("c Total time"))
        .filter_map(|l| {
            l.rsplit(':')
                .next()?
                .split_whitespace()
                .next()?
                .parse()
                .ok()
        })
        .next_back()
}

#[derive(Debug, Clone)]
pub struct RunItem {
    pub instance_path: PathBuf,
    pub instance: Arc<CnfInstance>,
    pub config: NamedConfig,
    pub seed: u64,
    pub timeout: Option<Duration>,
    pub repetition: usize,
}

fn instance_name(item: &RunItem) -> String {
    item.instance
        .token()
        .map(str::to_string)
        .unwrap_or_else(|| item.instance_path.display().to_string())
}

fn finish_record(
    item: &RunItem,
    solver: String,
    wall: f64,
    reported: Option<f64>,
    model: SolverModel,
) -> Result<RunRecord, HarnessError> {
    let mut rec = RunRecord {
        instance: instance_name(item),
        config: item.config.name.clone(),
        repetition: item.repetition,
        seed: item.seed,
        wall_time: wall,
        solve_time: reported,
        status: model.status,
        recovered_key: None,
        verified: false,
        anomaly: None,
        solver,
    };
    let meta = item.instance.meta.as_ref();
    match model.status {
        SolveStatus::Sat => {
            if let Some(meta) = meta {
                match extract_key(&model, &meta.layout()) {
                    Ok(key) => {
                        rec.verified = verify_key(meta, &key)?;
                        rec.recovered_key = Some(key);
                        if !rec.verified {
                            rec.anomaly =
                                Some("recovered key does not reproduce the ciphertexts".into());
                        }
                    }
                    Err(_) => rec.anomaly = Some("model does not cover the key variables".into()),
                }
            }
        }
        SolveStatus::Unsat if meta.is_some() => {
            rec.anomaly = Some("UNSAT reported for a satisfiable-by-construction instance".into());
        }
        _ => {}
    }
    Ok(rec)
}

pub fn run_once(item: &RunItem, backend: &Backend) -> Result<RunRecord, HarnessError> {
    match backend {
        Backend::Internal(opts) => {
            let opts = SolverOptions {
                timeout: item.timeout,
                seed: item.seed,
                ..opts.clone()
            };
            let start = Instant::now();
            let (model, _) = solve_with_stats(&item.instance, &opts)?;
            let wall = start.elapsed().as_secs_f64();
            finish_record(item, "internal".into(), wall, None, model)
        }
        Backend::External {
            template,
            base,
            env,
        } => {
            let argv = build_command(
                &item.config,
                base,
                template,
                &item.instance_path,
                item.seed,
                item.timeout,
            )?;
            log::debug!("run {}: {}", item.repetition, argv.join(" "));
            let start = Instant::now();
            let mut child = Command::new(&argv[0])
                .args(&argv[1..])
                .envs(env.iter().map(|(k, v)| (k, v)))
                .stdin(Stdio::null())
                .stdout(Stdio::piped())
                .stderr(Stdio::null())
                .spawn()
                .map_err(|source| HarnessError::Spawn {
                    program: argv[0].clone(),
                    source,
                })?;
            let mut stdout = child.stdout.take().expect("piped stdout");
            let reader = std::thread::spawn(move || {
                let mut s = String::new();
                let _ = stdout.read_to_string(&mut s);
                s
            });
            let exit = match item.timeout {
                Some(t) => child.wait_timeout(t)?,
                None => Some(child.wait()?),
            };
            let timed_out = exit.is_none();
            if timed_out {
                let _ = child.kill();
                child.wait()?;
            }
            let wall = start.elapsed().as_secs_f64();
            let output = reader.join().unwrap_or_default();
            let model = if timed_out {
                SolverModel {
                    status: SolveStatus::Timeout,
                    assignment: Vec::new(),
                }
            } else {
                let parsed = parse_solver_output(&output)?;
                let status = match exit.and_then(|s| s.code()) {
                    Some(10) => SolveStatus::Sat,
                    Some(20) => SolveStatus::Unsat,
                    _ => SolveStatus::Unknown,
                };
                SolverModel {
                    status,
                    assignment: parsed.assignment,
                }
            };
            finish_record(
                item,
                argv[0].clone(),
                wall,
                parse_reported_time(&output),
                model,
            )
        }
    }
}

#[derive(Debug, Clone)]
pub struct Campaign {
    pub instance_path: PathBuf,
    pub instance: Arc<CnfInstance>,
    pub config: NamedConfig,
    pub repetitions: usize,
    pub timeout: Option<Duration>,
    pub jobs: usize,
    pub seed: u64,
}

/// Distinct per-run solver seeds derived from the campaign seed.
pub fn seed_schedule(campaign_seed: u64, repetitions: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(campaign_seed);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(repetitions);
    while out.len() < repetitions {
        let s = rng.gen_range(1..=i32::MAX as u64);
        if seen.insert(s) {
            out.push(s);
        }
    }
    out
}

/// Runs every repetition, at most `jobs` at a time. Results come back in
/// repetition order whatever the completion order.
pub fn run_campaign(
    campaign: &Campaign,
    backend: &Backend,
) -> Result<Vec<Result<RunRecord, HarnessError>>, HarnessError> {
    if campaign.repetitions == 0 {
        return Err(HarnessError::NoRepetitions);
    }
    let items: Vec<RunItem> = seed_schedule(campaign.seed, campaign.repetitions)
        .into_iter()
        .enumerate()
        .map(|(repetition, seed)| RunItem {
            instance_path: campaign.instance_path.clone(),
            instance: Arc::clone(&campaign.instance),
            config: campaign.config.clone(),
            seed,
            timeout: campaign.timeout,
            repetition,
        })
        .collect();
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    let workers = campaign.jobs.clamp(1, items.len());
    let mut slots: Vec<Option<Result<RunRecord, HarnessError>>> =
        (0..items.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let (items, next) = (&items, &next);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(item) = items.get(i) else { break };
                if tx.send((i, run_once(item, backend))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, r) in rx {
            if let Ok(rec) = &r {
                log::info!(
                    "rep {} seed {}: {} in {:.2}s",
                    rec.repetition,
                    rec.seed,
                    rec.status,
                    rec.runtime()
                );
            }
            slots[i] = Some(r);
        }
    });
    Ok(slots
        .into_iter()
        .map(|s| s.expect("every run reports"))
        .collect())
}

/// Appends records to a CSV file, writing the header only for a new file.
pub fn append_csv(path: &Path, records: &[RunRecord]) -> Result<(), HarnessError> {
    let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(fresh)
        .from_writer(file);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<RunRecord>, HarnessError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

pub fn append_jsonl(path: &Path, records: &[RunRecord]) -> Result<(), HarnessError> {
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    for r in records {
        writeln!(file, "{}", serde_json::to_string(r)?)?;
    }
    Ok(())
}
