//! Command-line front end. [`run`] returns the process exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | likely true positive with `--fail-on-finding`, or `bench --assert` mismatch |
//! | 2 | usage or configuration error |
//! | 3 | network failure while fetching |
//! | 4 | source not verified |
//! | 5 | rate limited |

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bench::{check_label_files, load_dir, read_labels_file, run_batch, SourceFile};
use crate::config::{parse_call_kinds, ConfigError, OutputFormat, RunConfig};
use crate::fetch::{normalize_address, Client};
use crate::report::{run_timestamp, Report};
use crate::triage::CauseType;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FINDINGS: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "retriage", version, about = "Reentrancy candidates and false-positive triage for Solidity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analyze Solidity files or directories and print a report.
    Analyze(AnalyzeArgs),
    /// Run a labeled corpus and print metrics.
    Bench(BenchArgs),
    /// Download verified source for an address.
    Fetch(FetchArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated triage rules; empty disables triage.
    #[arg(long)]
    rules: Option<String>,
    /// Per-file time budget in seconds.
    #[arg(long)]
    timeout: Option<u64>,
    /// json or text.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    #[command(flatten)]
    common: Common,
    /// Comma-separated call kinds to consider.
    #[arg(long = "call-kinds")]
    call_kinds: Option<String>,
    /// Do not report calls without state writes after them.
    #[arg(long = "no-bare")]
    no_bare: bool,
    /// Exit 1 when a likely true positive remains.
    #[arg(long = "fail-on-finding")]
    fail_on_finding: bool,
}

#[derive(Debug, Args)]
struct BenchArgs {
    dir: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Exit 1 unless every labeled record matches.
    #[arg(long)]
    assert: bool,
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct FetchArgs {
    address: String,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn base_config(common: &Common) -> Result<RunConfig, ConfigError> {
    let mut c = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(r) = &common.rules {
        c.rules = CauseType::parse_list(r)?;
    }
    if let Some(t) = common.timeout {
        c.set_timeout_secs(t)?;
    }
    if let Some(f) = &common.format {
        c.format = f.parse()?;
    }
    Ok(c)
}

/// Files named directly keep their path as given; directories contribute
/// every `.sol` file beneath them.
fn collect_inputs(paths: &[PathBuf]) -> Result<Vec<SourceFile>, String> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let files = load_dir(p).map_err(|e| e.to_string())?;
            out.extend(files.into_iter().map(|f| SourceFile { name: join_name(p, &f.name), bytes: f.bytes }));
        } else {
            let bytes = std::fs::read(p).map_err(|e| format!("{}: {e}", p.display()))?;
            out.push(SourceFile { name: p.display().to_string(), bytes });
        }
    }
    Ok(out)
}

fn join_name(dir: &Path, rel: &str) -> String {
    let d = dir.display().to_string();
    format!("{}/{rel}", d.trim_end_matches('/'))
}

fn analyze(args: AnalyzeArgs, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let config = (|| {
        let mut c = base_config(&args.common)?;
        if let Some(k) = &args.call_kinds {
            c.call_kinds = parse_call_kinds(k)?;
        }
        if args.no_bare {
            c.report_bare = false;
        }
        Ok::<_, ConfigError>(c)
    })();
    let config = match config {
        Ok(c) => c,
        Err(e) => return usage(err, e),
    };
    let inputs = match collect_inputs(&args.paths) {
        Ok(i) => i,
        Err(e) => return usage(err, e),
    };
    let mut batch = config.batch();
    batch.dedupe = false;
    let result = run_batch(inputs, None, &batch);
    let report = Report::new(run_timestamp(), &result.files);
    let text = match config.format {
        OutputFormat::Json => report.to_json() + "\n",
        OutputFormat::Text => report.to_text(),
    };
    let _ = out.write_all(text.as_bytes());
    if args.fail_on_finding && report.likely_true_positives() > 0 {
        EXIT_FINDINGS
    } else {
        EXIT_OK
    }
}

fn bench(args: BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let mut config = match base_config(&args.common) {
        Ok(c) => c,
        Err(e) => return usage(err, e),
    };
    if let Some(w) = args.workers {
        if let Err(e) = config.set_workers(w) {
            return usage(err, e);
        }
    }
    let files = match load_dir(&args.dir) {
        Ok(f) => f,
        Err(e) => return usage(err, e),
    };
    let labels = match read_labels_file(&args.labels).and_then(|l| check_label_files(&l, &files).map(|_| l)) {
        Ok(l) => l,
        Err(e) => return usage(err, e),
    };
    let result = run_batch(files, Some(&labels), &config.batch());
    let m = &result.metrics;
    let text = match config.format {
        OutputFormat::Json => serde_json::to_string_pretty(m).expect("metrics serialize") + "\n",
        OutputFormat::Text => m.text_table(),
    };
    let _ = out.write_all(text.as_bytes());
    if args.assert && !m.all_records_agree() {
        for r in m.records.iter().filter(|r| !r.agrees) {
            let _ = writeln!(err, "mismatch {}", r.describe());
        }
        return EXIT_FINDINGS;
    }
    EXIT_OK
}

fn fetch(args: FetchArgs, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    // validate before touching config, env or network
    if let Err(e) = normalize_address(&args.address) {
        let _ = writeln!(err, "error: {e}");
        return e.exit_code();
    }
    let config = match &args.config {
        Some(p) => match RunConfig::load(p) {
            Ok(c) => c,
            Err(e) => return usage(err, e),
        },
        None => RunConfig::default(),
    };
    let client = match Client::from_env(config.fetch) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return e.exit_code();
        }
    };
    match client.fetch_to_dir(&args.address, &args.out) {
        Ok(o) => {
            for f in &o.files {
                let _ = writeln!(out, "{}", f.display());
            }
            let _ = writeln!(out, "{}", o.metadata_path.display());
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn usage(err: &mut dyn Write, e: impl std::fmt::Display) -> u8 {
    let _ = writeln!(err, "error: {e}");
    EXIT_USAGE
}

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let msg = e.render().to_string();
            return if e.use_stderr() {
                let _ = err.write_all(msg.as_bytes());
                EXIT_USAGE
            } else {
                let _ = out.write_all(msg.as_bytes());
                EXIT_OK
            };
        }
    };
    match cli.command {
        Command::Analyze(a) => analyze(a, out, err),
        Command::Bench(b) => bench(b, out, err),
        Command::Fetch(f) => fetch(f, out, err),
    }
}
