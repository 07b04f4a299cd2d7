//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 I/O error, 4 resource
//! guard. Output files are written to a temporary file in the target directory
//! and renamed into place only once every artifact of the command is ready.
//! Node and function indices in every JSON and CSV artifact are 0-based.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use tempfile::NamedTempFile;

use crate::bounds::all_reports;
use crate::codes::{construct_sbc, matched_q, BlockLayout, CodeFamily, CodeSpec};
use crate::decoding::DecoderKind;
use crate::error::{Error, Result};
use crate::experiments::{
    attack_comparison, nonstragglers_for, plot, read_results_csv, run_gd_demo, run_paired_trial,
    run_sweep, AttackMethod, SweepConfig, StragglerModel,
};
use crate::seeding;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "sbcode",
    version,
    about = "Stochastic block gradient codes: generation, simulation and bounds",
    after_help = "All node and function indices in JSON and CSV output are 0-based."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample an assignment matrix and write it as a dense 0/1 CSV.
    Gen(GenArgs),
    /// Run trials of one code/decoder pair under random stragglers.
    Simulate(SimulateArgs),
    /// Run a parameter sweep from a JSON config.
    Sweep(SweepArgs),
    /// Evaluate every error bound as JSON.
    Bounds(BoundsArgs),
    /// Compare straggler attacks under optimal decoding.
    Attack(AttackArgs),
    /// Render a results CSV as SVG.
    Plot(PlotArgs),
    /// Coded gradient descent on a synthetic least-squares problem.
    GdDemo(GdArgs),
}

/// `q` as a number or the word `matched`.
#[derive(Debug, Clone, Copy)]
enum QArg {
    Matched,
    Value(f64),
}

fn parse_q(s: &str) -> std::result::Result<QArg, String> {
    if s.eq_ignore_ascii_case("matched") {
        return Ok(QArg::Matched);
    }
    s.parse::<f64>()
        .map(QArg::Value)
        .map_err(|_| format!("expected a probability or 'matched', got '{s}'"))
}

#[derive(Debug, Clone, Args)]
struct CodeArgs {
    /// Number of functions and nodes.
    #[arg(long)]
    k: usize,
    /// Block size.
    #[arg(long)]
    s: usize,
    /// Within-block edge probability.
    #[arg(long)]
    p: f64,
    /// Cross-block edge probability, or `matched` for expected column weight s.
    #[arg(long, value_parser = parse_q)]
    q: QArg,
    /// Allow s not dividing k (the last block is shorter).
    #[arg(long)]
    allow_partial_block: bool,
}

impl CodeArgs {
    fn spec(&self) -> Result<CodeSpec> {
        let q = match self.q {
            QArg::Matched => matched_q(self.k, self.s, self.p)?,
            QArg::Value(q) => q,
        };
        let layout = if self.allow_partial_block {
            BlockLayout::Truncated
        } else {
            BlockLayout::Exact
        };
        CodeSpec::new(self.k, self.s, self.p, q, CodeFamily::classify(self.p, q), layout)
    }
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// Number of non-stragglers (defaults to round((1 − epsilon)·k)).
    #[arg(long, conflicts_with = "epsilon")]
    r: Option<usize>,
    /// Straggler fraction.
    #[arg(long)]
    epsilon: Option<f64>,
    /// STOCHASTIC_BLOCK, AVERAGED_BLOCK, BGC_UNIFORM or OPTIMAL; repeatable.
    #[arg(long, value_delimiter = ',', default_value = "STOCHASTIC_BLOCK")]
    decoder: Vec<DecoderKind>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// JSON sweep config.
    #[arg(long)]
    config: PathBuf,
    /// Results CSV path.
    #[arg(long)]
    out_csv: PathBuf,
    /// Optional SVG plot path.
    #[arg(long)]
    out_svg: Option<PathBuf>,
    /// Override the config's trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (0 = automatic).
    #[arg(long, env = "SBCODE_THREADS", default_value_t = 0)]
    threads: usize,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// Number of non-stragglers, used by the block-size hypotheses (default k).
    #[arg(long)]
    r: Option<usize>,
}

#[derive(Debug, Args)]
struct AttackArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[arg(long)]
    r: usize,
    /// random, blocks, greedy, spectral or bruteforce; repeatable.
    #[arg(long, value_delimiter = ',', required = true)]
    method: Vec<AttackMethod>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write per-trial errors as CSV.
    #[arg(long)]
    out_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long)]
    in_csv: PathBuf,
    #[arg(long)]
    out_svg: PathBuf,
}

#[derive(Debug, Args)]
struct GdArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    /// Model dimension.
    #[arg(long, default_value_t = 5)]
    dim: usize,
    #[arg(long, default_value = "OPTIMAL")]
    decoder: DecoderKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::Numerical(_) => EXIT_USAGE,
        Error::Io(_) => EXIT_IO,
        Error::Csv(c) if c.is_io_error() => EXIT_IO,
        Error::Csv(_) => EXIT_USAGE,
        Error::ResourceLimit(_) => EXIT_RESOURCE,
    }
}

/// Files to publish together once the command has succeeded.
#[derive(Default)]
struct Outputs {
    staged: Vec<(NamedTempFile, PathBuf)>,
}

impl Outputs {
    fn stage(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        let mut tmp = NamedTempFile::new_in(dir)?;
        tmp.write_all(bytes)?;
        tmp.flush()?;
        self.staged.push((tmp, path.to_path_buf()));
        Ok(())
    }

    fn commit(self) -> Result<()> {
        for (tmp, path) in self.staged {
            tmp.persist(&path).map_err(|e| Error::Io(e.error))?;
        }
        Ok(())
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().ansi().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<()> {
    let mut files = Outputs::default();
    match cmd {
        Command::Gen(a) => {
            let spec = a.code.spec()?;
            let g = construct_sbc(spec, a.seed)?;
            let mut buf = Vec::new();
            g.write_csv(&mut buf)?;
            files.stage(&a.out, &buf)?;
            files.commit()?;
            write!(out, "{}", to_json(&spec))?;
        }
        Command::Simulate(a) => {
            let spec = a.code.spec()?;
            let r = match (a.r, a.epsilon) {
                (Some(r), _) => r,
                (None, Some(eps)) => {
                    if !(0.0..1.0).contains(&eps) {
                        return Err(Error::invalid(format!("epsilon={eps} outside [0, 1)")));
                    }
                    nonstragglers_for(spec.k, eps)
                }
                (None, None) => return Err(Error::invalid("one of --r or --epsilon is required")),
            };
            if a.trials == 0 {
                return Err(Error::invalid("trials must be at least 1"));
            }
            let mut records = Vec::new();
            for t in 0..a.trials {
                let seed = seeding::derive(a.seed, t as u64);
                records.extend(run_paired_trial(&spec, r, &a.decoder, StragglerModel::Random, t, seed)?);
            }
            let means: Vec<_> = a
                .decoder
                .iter()
                .map(|&d| {
                    let errs: Vec<f64> = records.iter().filter(|x| x.decoder == d).map(|x| x.err).collect();
                    (d, errs.iter().sum::<f64>() / errs.len() as f64)
                })
                .collect();
            #[derive(Serialize)]
            struct Report<'a> {
                spec: CodeSpec,
                r: usize,
                trials: usize,
                seed: u64,
                mean_err: Vec<(DecoderKind, f64)>,
                records: &'a [crate::experiments::TrialRecord],
            }
            let text = to_json(&Report {
                spec,
                r,
                trials: a.trials,
                seed: a.seed,
                mean_err: means,
                records: &records,
            });
            emit(a.out.as_deref(), &text, files, out)?;
        }
        Command::Sweep(a) => {
            let text = String::from_utf8(read_file(&a.config)?)
                .map_err(|_| Error::invalid("config is not UTF-8"))?;
            let mut cfg = SweepConfig::from_json(&text)?;
            if let Some(t) = a.trials {
                cfg.trials = t;
            }
            let result = run_sweep(&cfg, a.threads)?;
            let csv_text = result.to_csv_string()?;
            files.stage(&a.out_csv, csv_text.as_bytes())?;
            if let Some(svg_path) = &a.out_svg {
                let rows = read_results_csv(csv_text.as_bytes())?;
                files.stage(svg_path, plot::render_svg(&rows)?.as_bytes())?;
            }
            files.commit()?;
            writeln!(out, "{:>4} {:>6} {:>8} {:>6} {:<16} {:>12} {:>8}", "s", "p", "q", "eps", "decoder", "mean_err/k", "uncoded")?;
            for c in &result.cells {
                writeln!(
                    out,
                    "{:>4} {:>6} {:>8.5} {:>6} {:<16} {:>12.6} {:>8}",
                    c.s, c.p, c.q, c.epsilon, c.decoder.as_str(), c.mean_err_over_k, c.uncoded
                )?;
            }
        }
        Command::Bounds(a) => {
            let spec = a.code.spec()?;
            let r = a.r.unwrap_or(spec.k);
            if r == 0 || r > spec.k {
                return Err(Error::invalid(format!("need 1 <= r <= k, got r={r}")));
            }
            let reports = all_reports(spec.k, spec.s, r, spec.p, spec.q)?;
            write!(out, "{}", to_json(&reports))?;
        }
        Command::Attack(a) => {
            let spec = a.code.spec()?;
            let report = attack_comparison(&spec, a.r, a.trials, a.seed, &a.method)?;
            if let Some(path) = &a.out_csv {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["method", "trial", "err"])?;
                for row in &report.rows {
                    for (t, e) in row.errs.iter().enumerate() {
                        w.write_record([row.method.as_str(), &t.to_string(), &e.to_string()])?;
                    }
                }
                let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
                files.stage(path, &bytes)?;
                files.commit()?;
            }
            write!(out, "{}", to_json(&report))?;
        }
        Command::Plot(a) => {
            let bytes = read_file(&a.in_csv)?;
            let rows = read_results_csv(bytes.as_slice())?;
            files.stage(&a.out_svg, plot::render_svg(&rows)?.as_bytes())?;
            files.commit()?;
        }
        Command::GdDemo(a) => {
            let spec = a.code.spec()?;
            let report = run_gd_demo(&spec, a.decoder, a.epsilon, a.steps, a.dim, a.seed)?;
            emit(a.out.as_deref(), &to_json(&report), files, out)?;
        }
    }
    Ok(())
}

fn emit(path: Option<&Path>, text: &str, mut files: Outputs, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => {
            files.stage(p, text.as_bytes())?;
            files.commit()
        }
        None => Ok(write!(out, "{text}")?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("sbcode").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn help_is_success() {
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("0-based"));
        assert_eq!(run_capture(&["bounds", "--help"]).0, 0);
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        let (code, _, err) = run_capture(&["bounds", "--k", "4", "--nope"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("Usage"));
    }

    #[test]
    fn bounds_frc_values_are_zero() {
        let (code, out, _) = run_capture(&["bounds", "--k", "100", "--s", "10", "--p", "1", "--q", "0"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        for r in v.as_array().unwrap() {
            if r["name"] == "theorem1" || r["name"] == "corollary2" {
                assert_eq!(r["value"], 0.0);
            }
        }
    }

    #[test]
    fn matched_q_resolves_to_zero_at_p_one() {
        let spec = CodeArgs { k: 10, s: 5, p: 1.0, q: QArg::Matched, allow_partial_block: false }
            .spec()
            .unwrap();
        assert_eq!(spec.q, 0.0);
        assert_eq!(spec.family, CodeFamily::Frc);
    }
}
