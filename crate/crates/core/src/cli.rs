//! Command-line interface: argument parsing and subcommand dispatch.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::group::DEFAULT_CAP;
use crate::invring::InvariantPresentation;
use crate::modstruct::{classify_case, Chapter};
use crate::report::{
    analyze_group, fuzz_campaign, presentation_for, write_report_dir, AnalysisOptions, FuzzConfig,
    GroupInput, InputError, DEFAULT_DEGREE_BOUND, DEGREE_BOUND_ENV,
};

/// Exit code for a completed analysis, whatever its verdict.
pub const EXIT_OK: i32 = 0;
/// Exit code for unreadable or invalid input.
pub const EXIT_INPUT: i32 = 1;
/// Exit code when verdict methods disagree.
pub const EXIT_INCONSISTENT: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "modinv",
    version,
    about = "Invariant rings and Gorenstein verdicts for reducible subgroups of SL(3, q)"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SubgroupKind {
    Transvections,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ChapterArg {
    A,
    B,
    D,
    E,
    F,
    G,
}

impl From<ChapterArg> for Chapter {
    fn from(c: ChapterArg) -> Chapter {
        match c {
            ChapterArg::A => Chapter::A,
            ChapterArg::B => Chapter::B,
            ChapterArg::D => Chapter::D,
            ChapterArg::E => Chapter::E,
            ChapterArg::F => Chapter::F,
            ChapterArg::G => Chapter::G,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Full pipeline: classification, invariants, and Gorenstein verdicts.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        /// Also run the Hilbert-series palindrome oracle.
        #[arg(long)]
        oracle: bool,
        #[arg(long, env = DEGREE_BOUND_ENV, default_value_t = DEFAULT_DEGREE_BOUND)]
        degree_bound: u32,
        /// Write the report here instead of standard output.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Stable subspaces and case label of the module.
    Classify {
        #[arg(long)]
        input: PathBuf,
    },
    /// Certified generators of the invariant ring of a subgroup.
    Invariants {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = SubgroupKind::Transvections)]
        subgroup: SubgroupKind,
        #[arg(long, env = DEGREE_BOUND_ENV, default_value_t = DEFAULT_DEGREE_BOUND)]
        max_degree: u32,
    },
    /// Seeded random campaign over reducible subgroups of SL(3, p^s).
    Fuzz {
        #[arg(long)]
        p: u32,
        #[arg(long, default_value_t = 1)]
        s: u32,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        max_order: usize,
        #[arg(long, value_enum)]
        chapter: Option<ChapterArg>,
        #[arg(long, env = DEGREE_BOUND_ENV, default_value_t = DEFAULT_DEGREE_BOUND)]
        degree_bound: u32,
        /// Accumulate per-instance reports and the summary in this directory.
        #[arg(long)]
        report_dir: Option<PathBuf>,
    },
}

/// What a subcommand produced: a JSON document for standard output and an exit code.
pub struct Outcome {
    pub document: Option<serde_json::Value>,
    pub exit_code: i32,
}

fn presentation_json(p: &Option<InvariantPresentation>, note: &Option<String>) -> serde_json::Value {
    serde_json::json!({
        "presentation": p.as_ref().map(|p| p.to_json()),
        "note": note,
    })
}

fn io_error(path: &std::path::Path, source: std::io::Error) -> InputError {
    InputError::Io { path: path.display().to_string(), source }
}

/// Execute one parsed command.
pub fn run(cli: Cli) -> Result<Outcome, InputError> {
    match cli.command {
        Command::Analyze { input, oracle, degree_bound, report } => {
            let inp = GroupInput::load(&input)?;
            let opts = AnalysisOptions { degree_bound, oracle, cap: DEFAULT_CAP };
            let analysis = analyze_group(&inp, &opts)?;
            let doc = analysis.to_json();
            let exit_code = analysis.exit_code();
            if let Some(path) = report {
                let text = serde_json::to_string_pretty(&doc)?;
                std::fs::write(&path, text).map_err(|e| io_error(&path, e))?;
                return Ok(Outcome { document: None, exit_code });
            }
            Ok(Outcome { document: Some(doc), exit_code })
        }
        Command::Classify { input } => {
            let inp = GroupInput::load(&input)?;
            let g = inp.closure(DEFAULT_CAP)?;
            let doc = match classify_case(&g) {
                Ok(c) => c.to_json(),
                Err(e) => serde_json::json!({ "error": format!("modstruct: {e}") }),
            };
            Ok(Outcome { document: Some(doc), exit_code: EXIT_OK })
        }
        Command::Invariants { input, subgroup: SubgroupKind::Transvections, max_degree } => {
            let inp = GroupInput::load(&input)?;
            let g = inp.closure(DEFAULT_CAP)?;
            let t = g.reflection_subgroups().t.group;
            let doc = match classify_case(&g) {
                Ok(cls) => {
                    let (p, note) = presentation_for(&t, &cls, max_degree);
                    presentation_json(&p, &note)
                }
                Err(e) => serde_json::json!({ "error": format!("modstruct: {e}") }),
            };
            Ok(Outcome { document: Some(doc), exit_code: EXIT_OK })
        }
        Command::Fuzz { p, s, count, seed, max_order, chapter, degree_bound, report_dir } => {
            let cfg = FuzzConfig {
                max_order,
                chapter: chapter.map(Chapter::from),
                degree_bound,
                ..FuzzConfig::new(p, s, count, seed)
            };
            let (summary, analyses) = fuzz_campaign(&cfg)?;
            if let Some(dir) = &report_dir {
                write_report_dir(dir, &cfg, &summary, &analyses).map_err(|e| io_error(dir, e))?;
            }
            let disagree = analyses.iter().any(|a| !a.methods_agree());
            let exit_code = if disagree { EXIT_INCONSISTENT } else { EXIT_OK };
            let doc = serde_json::json!({ "config": cfg, "summary": summary });
            Ok(Outcome { document: Some(doc), exit_code })
        }
    }
}

/// Parse the process arguments, run, print, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(out) => {
            if let Some(doc) = out.document {
                use std::io::Write;
                let text = serde_json::to_string_pretty(&doc).expect("JSON values serialize");
                // a closed pipe on the reading side is not an analysis failure
                let _ = writeln!(std::io::stdout().lock(), "{text}");
            }
            out.exit_code
        }
        Err(e) => {
            eprintln!("input error: {e}");
            EXIT_INPUT
        }
    }
}
