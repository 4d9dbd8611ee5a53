//! `kpasat` command line.
//!
//! Exit codes: 0 success, 2 usage error, 3 invalid input (hex, parameters,
//! DIMACS, PCS, flags), 4 file I/O, 5 verification failed, 6 solver or
//! evaluation failure. `solve` instead follows the solver convention:
//! 10 satisfiable, 20 unsatisfiable, 0 unknown.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use kpasat::cipher::{Cipher, CipherError, CipherParams};
use kpasat::config::{Config, ConfigError};
use kpasat::dimacs::{self, DimacsError, SolveStatus};
use kpasat::encoder::{
    check_assignment, generate_instance, CnfInstance, EncodeError, EncoderOptions, SboxEncoding,
};
use kpasat::harness::{self, Backend, Campaign, HarnessError};
use kpasat::solver::{solve_with_stats, Branching, SolverError, SolverOptions};
use kpasat::stats::{self, StatsError};
use kpasat::textpairs::{self, PairsError};
use kpasat::tuner::{self, HarnessTae, RaceOptions, SyntheticTae, TargetEvaluator, TunerError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "kpasat",
    version,
    about = "Known-plaintext key recovery on small-scale AES via SAT"
)]
struct Cli {
    /// TOML file with [cipher], [encoder] and [solver] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Top-level seed; every derived seed follows from it. Random if absent.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Copy)]
struct CipherArgs {
    /// Rounds n.
    #[arg(short = 'n', long, default_value_t = 3)]
    rounds: usize,
    /// State rows r.
    #[arg(long, default_value_t = 4)]
    rows: usize,
    /// State columns c.
    #[arg(long, default_value_t = 4)]
    cols: usize,
    /// Word size e in bits.
    #[arg(long, default_value_t = 4)]
    word_bits: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    Static,
    Activity,
}

#[derive(Subcommand)]
enum Cmd {
    /// Encrypt plaintext blocks.
    Encrypt {
        #[command(flatten)]
        cipher: CipherArgs,
        /// Key as hex or a named key (k3, k4, k6).
        #[arg(long)]
        key: String,
        #[arg(long = "plaintext", short = 'p', required = true)]
        plaintexts: Vec<String>,
    },
    /// Decrypt ciphertext blocks.
    Decrypt {
        #[command(flatten)]
        cipher: CipherArgs,
        #[arg(long)]
        key: String,
        #[arg(long = "ciphertext", required = true)]
        ciphertexts: Vec<String>,
    },
    /// Generate a DIMACS instance of the known-plaintext attack.
    Gen {
        #[command(flatten)]
        cipher: CipherArgs,
        #[arg(long)]
        key: String,
        /// Token used in the instance name; defaults to the key alias.
        #[arg(long)]
        key_token: Option<String>,
        /// Number of text pairs; required unless plaintexts are given.
        #[arg(long)]
        pairs: Option<usize>,
        /// Explicit plaintext blocks.
        #[arg(long = "plaintext", short = 'p')]
        plaintexts: Vec<String>,
        /// Sample plaintexts as byte windows of this text file.
        #[arg(long, conflicts_with = "plaintexts")]
        text: Option<PathBuf>,
        #[arg(long, short = 'o')]
        output: PathBuf,
        /// Metadata JSON path; defaults to the output path with .json.
        #[arg(long)]
        meta: Option<PathBuf>,
        /// Write the secret key into the instance comments.
        #[arg(long)]
        include_key: bool,
        #[arg(long)]
        sbox_encoding: Option<SboxEncoding>,
        /// Merge clauses that differ in a single literal.
        #[arg(long)]
        minimize: bool,
    },
    /// Solve an instance with the built-in solver, printing competition output.
    Solve {
        instance: PathBuf,
        /// Seconds.
        #[arg(long)]
        timeout: Option<f64>,
        #[arg(long, value_enum, default_value = "activity")]
        branching: BranchArg,
        /// Clause limit of the built-in solver.
        #[arg(long, default_value_t = kpasat::solver::DEFAULT_MAX_CLAUSES)]
        max_clauses: usize,
    },
    /// Run repeated solver attempts on one instance and summarize runtimes.
    Bench {
        instance: PathBuf,
        /// Built-in configuration name (default, sw1..sw10) or flags file.
        #[arg(long = "solver-config", default_value = "default")]
        solver_config: String,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        /// Per-run timeout in seconds.
        #[arg(long, default_value_t = 3600.0)]
        timeout: f64,
        /// Concurrent runs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Use the built-in solver instead of the external template.
        #[arg(long)]
        internal: bool,
        /// Solver command template, overriding the config file.
        #[arg(long)]
        template: Option<String>,
        #[arg(long)]
        threads: Option<u32>,
        /// Run records CSV (appended).
        #[arg(long, default_value = "runs.csv")]
        records: PathBuf,
        #[arg(long)]
        jsonl: Option<PathBuf>,
        /// Summary table CSV.
        #[arg(long)]
        table: Option<PathBuf>,
        /// Boxplot data file.
        #[arg(long)]
        boxplot: Option<PathBuf>,
    },
    /// Search solver parameters of a PCS file by racing.
    Tune {
        #[arg(long)]
        pcs: PathBuf,
        /// Instance to tune on; omit with --synthetic.
        #[arg(long)]
        instance: Option<PathBuf>,
        /// Evaluate on the synthetic surface 100 (gluecut0 - 4)^2 + 10 + noise.
        #[arg(long)]
        synthetic: bool,
        #[arg(long, default_value_t = 500)]
        budget: usize,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Per-run cap in seconds.
        #[arg(long, default_value_t = 3600.0)]
        cutoff: f64,
        #[arg(long, default_value_t = 2.0)]
        cap_factor: f64,
        #[arg(long, default_value_t = 8)]
        max_runs: usize,
        #[arg(long)]
        internal: bool,
        #[arg(long)]
        template: Option<String>,
        #[arg(long)]
        threads: Option<u32>,
        #[arg(long, default_value = "tune.jsonl")]
        journal: PathBuf,
        /// Flags file for the final incumbent; printed when absent.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Replay a tuning journal and check it reaches the same incumbents.
    Replay { journal: PathBuf },
    /// Check a key or a solver model against an instance.
    Verify {
        instance: PathBuf,
        #[arg(long, conflicts_with = "model")]
        key: Option<String>,
        /// Solver output with s/v lines.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Summarize run-record CSV files per instance and configuration.
    Report {
        #[arg(required = true)]
        records: Vec<PathBuf>,
        #[arg(long, short = 'o')]
        output: Option<PathBuf>,
        #[arg(long)]
        boxplot: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Fail {
    Input(String),
    Io(String),
    Verify(String),
    Solver(String),
}

impl Fail {
    fn code(&self) -> u8 {
        match self {
            Fail::Input(_) => 3,
            Fail::Io(_) => 4,
            Fail::Verify(_) => 5,
            Fail::Solver(_) => 6,
        }
    }

    fn message(&self) -> &str {
        match self {
            Fail::Input(m) | Fail::Io(m) | Fail::Verify(m) | Fail::Solver(m) => m,
        }
    }
}

impl From<io::Error> for Fail {
    fn from(e: io::Error) -> Self {
        Fail::Io(e.to_string())
    }
}

macro_rules! input_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for Fail {
            fn from(e: $t) -> Self {
                Fail::Input(e.to_string())
            }
        }
    )*};
}
input_errors!(
    CipherError,
    EncodeError,
    StatsError,
    PairsError,
    tuner::PcsError
);

impl From<SolverError> for Fail {
    fn from(e: SolverError) -> Self {
        Fail::Solver(e.to_string())
    }
}

impl From<DimacsError> for Fail {
    fn from(e: DimacsError) -> Self {
        match e {
            DimacsError::Io(e) => Fail::Io(e.to_string()),
            e => Fail::Input(e.to_string()),
        }
    }
}

impl From<ConfigError> for Fail {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Fail::Io(e.to_string()),
            e => Fail::Input(e.to_string()),
        }
    }
}

impl From<HarnessError> for Fail {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Io(_) | HarnessError::Csv(_) | HarnessError::Json(_) => {
                Fail::Io(e.to_string())
            }
            HarnessError::Spawn { .. } | HarnessError::Solver(_) | HarnessError::Output(_) => {
                Fail::Solver(e.to_string())
            }
            e => Fail::Input(e.to_string()),
        }
    }
}

impl From<TunerError> for Fail {
    fn from(e: TunerError) -> Self {
        match e {
            TunerError::Evaluation(_) => Fail::Solver(e.to_string()),
            TunerError::Io(_) => Fail::Io(e.to_string()),
            e => Fail::Input(e.to_string()),
        }
    }
}

fn read_text(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| Fail::Io(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Fail> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Fail::Io(format!("{}: {e}", path.display())))
}

fn read_instance(path: &Path) -> Result<CnfInstance, Fail> {
    Ok(dimacs::read_dimacs(&read_text(path)?)?)
}

fn build_cipher(args: &CipherArgs, config: &Config) -> Result<Cipher, Fail> {
    let params = CipherParams::with_overrides(
        args.rounds,
        args.rows,
        args.cols,
        args.word_bits,
        &config.cipher,
    )?;
    Ok(Cipher::new(params)?)
}

fn backend(
    config: &Config,
    internal: bool,
    template: Option<String>,
    threads: Option<u32>,
) -> Backend {
    if internal {
        Backend::Internal(SolverOptions::default())
    } else {
        let t = template.unwrap_or_else(|| config.solver.template.clone());
        Backend::external(&t, threads.unwrap_or(config.solver.threads))
    }
}

fn run(cli: Cli) -> Result<ExitCode, Fail> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let seed = cli.seed.unwrap_or_else(rand::random);
    log::info!("seed {seed}");
    let mut out = io::stdout().lock();

    match cli.cmd {
        Cmd::Encrypt {
            cipher,
            key,
            plaintexts,
        } => {
            let c = build_cipher(&cipher, &config)?;
            let km = c.expand_key(&c.parse_state(&textpairs::resolve_key(&key, None).1)?)?;
            for p in plaintexts {
                let ct = c.encrypt(&c.parse_state(&p)?, &km)?;
                writeln!(out, "{}", ct.to_hex(cipher.word_bits))?;
            }
        }
        Cmd::Decrypt {
            cipher,
            key,
            ciphertexts,
        } => {
            let c = build_cipher(&cipher, &config)?;
            let km = c.expand_key(&c.parse_state(&textpairs::resolve_key(&key, None).1)?)?;
            for x in ciphertexts {
                let pt = c.decrypt_block(&c.parse_state(&x)?, &km)?;
                writeln!(out, "{}", pt.to_hex(cipher.word_bits))?;
            }
        }
        Cmd::Gen {
            cipher,
            key,
            key_token,
            pairs,
            plaintexts,
            text,
            output,
            meta,
            include_key,
            sbox_encoding,
            minimize,
        } => {
            let c = build_cipher(&cipher, &config)?;
            let (token, key_hex) = textpairs::resolve_key(&key, key_token.as_deref());
            let key_state = c.parse_state(&key_hex)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (pts, source) = if !plaintexts.is_empty() {
                if pairs.is_some_and(|p| p != plaintexts.len()) {
                    return Err(Fail::Input(
                        "--pairs disagrees with the number of plaintexts".into(),
                    ));
                }
                let pts = plaintexts
                    .iter()
                    .map(|p| c.parse_state(p))
                    .collect::<Result<Vec<_>, _>>()?;
                (pts, "explicit".to_string())
            } else {
                let p = pairs
                    .ok_or_else(|| Fail::Input("--pairs is required without --plaintext".into()))?;
                match &text {
                    Some(path) => {
                        let bytes = fs::read(path)
                            .map_err(|e| Fail::Io(format!("{}: {e}", path.display())))?;
                        let pts = textpairs::sample_text_windows(&bytes, c.params(), p, &mut rng)?;
                        (pts, format!("text:{}", path.display()))
                    }
                    None => (
                        textpairs::random_plaintexts(c.params(), p, &mut rng)?,
                        "random".to_string(),
                    ),
                }
            };
            let mut opts = EncoderOptions::for_word_bits(cipher.word_bits);
            if let Some(enc) = sbox_encoding.or(config.encoder.sbox_encoding) {
                opts.sbox_encoding = enc;
            }
            opts.minimize = minimize || config.encoder.minimize;
            let start = Instant::now();
            let (_, cnf) = generate_instance(&c, &token, key_state, &pts, &opts)?;
            log::info!("encoded in {:.2}s", start.elapsed().as_secs_f64());
            let mut w = create(&output)?;
            dimacs::write_dimacs(&cnf, include_key, &mut w)?;
            let mut m = cnf
                .meta
                .clone()
                .expect("generated instances carry metadata");
            if !include_key {
                m.secret_key = None;
            }
            let meta_path = meta.unwrap_or_else(|| output.with_extension("json"));
            let doc = json!({
                "instance": m,
                "num_vars": cnf.num_vars,
                "num_clauses": cnf.num_clauses(),
                "density": cnf.density(),
                "seed": seed,
                "plaintext_source": source,
            });
            fs::write(
                &meta_path,
                serde_json::to_string_pretty(&doc).expect("json") + "\n",
            )?;
            writeln!(
                out,
                "{}\tL={}\tN={}\tdensity={:.1}",
                m.token,
                cnf.num_vars,
                cnf.num_clauses(),
                cnf.density()
            )?;
        }
        Cmd::Solve {
            instance,
            timeout,
            branching,
            max_clauses,
        } => {
            let cnf = read_instance(&instance)?;
            let opts = SolverOptions {
                max_clauses,
                branching: match branching {
                    BranchArg::Static => Branching::Static,
                    BranchArg::Activity => Branching::Activity,
                },
                timeout: timeout.map(Duration::from_secs_f64),
                seed,
            };
            let start = Instant::now();
            let (model, st) = solve_with_stats(&cnf, &opts)?;
            writeln!(
                out,
                "c decisions {} conflicts {} restarts {}",
                st.decisions, st.conflicts, st.restarts
            )?;
            writeln!(
                out,
                "c Total time (this thread) : {:.3}",
                start.elapsed().as_secs_f64()
            )?;
            write!(out, "{}", model.to_competition_output())?;
            out.flush()?;
            return Ok(ExitCode::from(match model.status {
                SolveStatus::Sat => 10,
                SolveStatus::Unsat => 20,
                _ => 0,
            }));
        }
        Cmd::Bench {
            instance,
            solver_config,
            reps,
            timeout,
            jobs,
            internal,
            template,
            threads,
            records,
            jsonl,
            table,
            boxplot,
        } => {
            let cnf = Arc::new(read_instance(&instance)?);
            let named = harness::resolve_config(&solver_config)?;
            if named.requires_modified_solver && !internal {
                log::warn!(
                    "{} expects a solver build that applies its flags to every thread",
                    named.name
                );
            }
            let backend = backend(&config, internal, template, threads);
            let campaign = Campaign {
                instance_path: instance.clone(),
                instance: cnf.clone(),
                config: named.clone(),
                repetitions: reps,
                timeout: Some(Duration::from_secs_f64(timeout)),
                jobs,
                seed,
            };
            let results = harness::run_campaign(&campaign, &backend)?;
            let mut recs = Vec::new();
            let mut first_err = None;
            for r in results {
                match r {
                    Ok(rec) => {
                        if let Some(a) = &rec.anomaly {
                            log::warn!("rep {}: {a}", rec.repetition);
                        }
                        recs.push(rec);
                    }
                    Err(e) => {
                        log::error!("run failed: {e}");
                        first_err.get_or_insert(e);
                    }
                }
            }
            if recs.is_empty() {
                return Err(first_err.map_or_else(|| Fail::Solver("no runs".into()), Fail::from));
            }
            harness::append_csv(&records, &recs)?;
            if let Some(p) = jsonl {
                harness::append_jsonl(&p, &recs)?;
            }
            let label = format!("{}-{}", recs[0].instance, named.name);
            let solved: Vec<f64> = recs
                .iter()
                .filter(|r| r.status == SolveStatus::Sat)
                .map(|r| r.runtime())
                .collect();
            let censored = recs.len() - solved.len();
            if solved.is_empty() {
                writeln!(out, "{label}: no successful runs, {censored} censored")?;
            } else {
                let s = stats::summarize_records(&recs)?;
                let t = stats::to_table(&[(label.clone(), s.clone())]);
                write!(out, "{t}")?;
                writeln!(out, "censored {censored}")?;
                if let Some(p) = table {
                    fs::write(p, &t)?;
                }
                if let Some(p) = boxplot {
                    fs::write(
                        p,
                        stats::gnuplot_data(&[(label, stats::boxplot_summary(&solved)?)]),
                    )?;
                }
            }
            if recs
                .iter()
                .any(|r| r.status == SolveStatus::Sat && !r.verified)
            {
                return Err(Fail::Verify(
                    "a SAT run produced a key that does not verify".into(),
                ));
            }
        }
        Cmd::Tune {
            pcs,
            instance,
            synthetic,
            budget,
            workers,
            cutoff,
            cap_factor,
            max_runs,
            internal,
            template,
            threads,
            journal,
            export,
        } => {
            if cutoff <= 0.0 {
                return Err(Fail::Input("--cutoff must be positive".into()));
            }
            let space = tuner::parse_pcs(&read_text(&pcs)?)?;
            let (tae, label): (Box<dyn TargetEvaluator>, String) = match (&instance, synthetic) {
                (_, true) => (Box::new(SyntheticTae::gluecut0()), "synthetic".into()),
                (Some(path), false) => {
                    let cnf = Arc::new(read_instance(path)?);
                    let label = cnf
                        .token()
                        .map_or_else(|| path.display().to_string(), str::to_string);
                    let tae = HarnessTae {
                        instance_path: path.clone(),
                        instance: cnf,
                        backend: backend(&config, internal, template, threads),
                    };
                    (Box::new(tae), label)
                }
                (None, false) => {
                    return Err(Fail::Input("--instance or --synthetic is required".into()))
                }
            };
            let opts = RaceOptions {
                budget,
                cutoff,
                cap_factor,
                max_runs,
                workers,
                seed,
            };
            let mut w = create(&journal)?;
            let outcome = tuner::race(&space, tae.as_ref(), &label, &opts, Some(&mut w))?;
            w.flush()?;
            for (i, inc) in outcome.history.iter().enumerate() {
                writeln!(
                    out,
                    "incumbent {i} after {} evals: median {:.3} [{}]",
                    inc.evaluations_used,
                    inc.median,
                    inc.config.key()
                )?;
            }
            let named = tuner::export_incumbent(&outcome.history)?;
            let text = harness::format_flags(&named);
            match export {
                Some(p) => fs::write(p, text)?,
                None => write!(out, "{text}")?,
            }
        }
        Cmd::Replay { journal } => {
            let j = tuner::read_journal(&read_text(&journal)?)?;
            let replayed = tuner::replay_journal(&j)?;
            if replayed.history != j.history {
                return Err(Fail::Verify(
                    "replayed incumbents differ from the journal".into(),
                ));
            }
            writeln!(
                out,
                "replayed {} incumbents from {} evaluations",
                j.history.len(),
                j.evaluations.len()
            )?;
        }
        Cmd::Verify {
            instance,
            key,
            model,
        } => {
            let cnf = read_instance(&instance)?;
            let meta = cnf.meta.as_ref().ok_or(HarnessError::MissingMetadata)?;
            let key = match (key, model) {
                (Some(k), None) => k,
                (None, Some(path)) => {
                    let m = dimacs::parse_solver_output(&read_text(&path)?)?;
                    if m.status != SolveStatus::Sat {
                        return Err(Fail::Verify(format!("solver status is {}", m.status)));
                    }
                    let values = m.values();
                    let assignment: Vec<bool> = (1..=cnf.num_vars as usize)
                        .map(|v| values.get(v).copied().flatten())
                        .collect::<Option<_>>()
                        .ok_or(HarnessError::IncompleteModel)?;
                    let check = check_assignment(&cnf, &assignment)?;
                    if let Some(i) = check.first_falsified {
                        return Err(Fail::Verify(format!("model falsifies clause {i}")));
                    }
                    harness::extract_key(&m, &meta.layout())?
                }
                _ => {
                    return Err(Fail::Input(
                        "exactly one of --key or --model is required".into(),
                    ))
                }
            };
            if harness::verify_key(meta, &key)? {
                writeln!(out, "verified {key}")?;
            } else {
                return Err(Fail::Verify(format!(
                    "key {key} does not reproduce the ciphertexts"
                )));
            }
        }
        Cmd::Report {
            records,
            output,
            boxplot,
        } => {
            let mut groups: Vec<(String, Vec<harness::RunRecord>)> = Vec::new();
            for p in &records {
                for r in harness::read_csv(p)? {
                    let label = format!("{}-{}", r.instance, r.config);
                    match groups.iter_mut().find(|(l, _)| *l == label) {
                        Some((_, v)) => v.push(r),
                        None => groups.push((label, vec![r])),
                    }
                }
            }
            let mut rows = Vec::new();
            let mut boxes = Vec::new();
            for (label, recs) in &groups {
                let solved: Vec<f64> = recs
                    .iter()
                    .filter(|r| r.status == SolveStatus::Sat)
                    .map(|r| r.runtime())
                    .collect();
                if solved.is_empty() {
                    log::warn!("{label}: no successful runs");
                    continue;
                }
                rows.push((label.clone(), stats::summarize_records(recs)?));
                boxes.push((label.clone(), stats::boxplot_summary(&solved)?));
            }
            let t = stats::to_table(&rows);
            match output {
                Some(p) => fs::write(p, &t)?,
                None => write!(out, "{t}")?,
            }
            if let Some(p) = boxplot {
                fs::write(p, stats::gnuplot_data(&boxes))?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(match cli.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            _ => log::LevelFilter::Debug,
        })
        .parse_env("KPASAT_LOG")
        .init();
    log::info!(
        "invocation: {}",
        std::env::args().collect::<Vec<_>>().join(" ")
    );
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
