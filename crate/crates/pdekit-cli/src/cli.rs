//! Argument handling. Exit codes: 0 success, 2 analysis error, 1 usage error.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use pdekit::involution::Caps;

use crate::commands::{run, Command, CommandError};
use crate::envelope::{envelope, to_pretty, EnvelopeParts};
use crate::parse::parse_system;

#[derive(Parser, Debug)]
#[command(name = "pdekit", version, about = "Exact analysis of linear PDE systems")]
struct Cli {
    /// Emit the JSON envelope instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for the coordinate search (PDEKIT_SEED overrides).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true)]
    max_order: Option<u32>,
    #[arg(long, global = true, default_value_t = 500)]
    max_tries: usize,
    /// Include wall-clock timing (makes output nondeterministic).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Complete to involution and print the system with its board.
    Complete { file: PathBuf },
    Characters { file: PathBuf },
    /// Symbol g_{q+r}.
    Symbol {
        file: PathBuf,
        #[arg(long)]
        r: u32,
    },
    /// δ-cohomology at ∧^s T* ⊗ g_level.
    Delta {
        file: PathBuf,
        #[arg(long = "s")]
        s: usize,
        #[arg(long)]
        level: u32,
    },
    Janet { file: PathBuf },
    SpencerForm { file: PathBuf },
    Ck { file: PathBuf },
    /// Section table up to the given total order.
    Sections {
        file: PathBuf,
        #[arg(long)]
        order: u32,
        #[arg(long)]
        generators: bool,
    },
    Adjoint { file: PathBuf },
    Torsion { file: PathBuf },
    Cd {
        file: PathBuf,
        /// Linear expression in the unknowns, e.g. "y2[0,0,2] - y1[0,1,1]".
        #[arg(long)]
        element: Option<String>,
    },
    Localize {
        file: PathBuf,
        #[arg(long)]
        codim: usize,
    },
    Purity { file: PathBuf },
    /// Combined analysis report (the golden-file payload).
    Report { file: PathBuf },
    /// Run one argument-free command over several files in parallel.
    Batch {
        #[arg(long, default_value = "report")]
        command: String,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn simple_command(name: &str) -> Option<Command> {
    Some(match name {
        "complete" => Command::Complete,
        "characters" => Command::Characters,
        "janet" => Command::Janet,
        "spencer-form" => Command::SpencerForm,
        "ck" => Command::Ck,
        "adjoint" => Command::Adjoint,
        "torsion" => Command::Torsion,
        "cd" => Command::Cd { element: None },
        "purity" => Command::Purity,
        "report" => Command::Report,
        _ => return None,
    })
}

struct FileResult {
    code: i32,
    text: String,
    json: serde_json::Value,
}

fn run_file(cmd: &Command, file: &PathBuf, caps: &Caps, timing: bool) -> FileResult {
    let input = match std::fs::read_to_string(file) {
        Ok(t) => t,
        Err(e) => {
            let msg = format!("cannot read {}: {}", file.display(), e);
            let json = envelope(EnvelopeParts {
                command: cmd.name(),
                input: "",
                payload: None,
                log: vec![],
                timing_ms: None,
                error: Some(("usage", msg.clone())),
            });
            return FileResult { code: 1, text: format!("error: {}\n", msg), json };
        }
    };
    let start = Instant::now();
    let result = parse_system(&input).map_err(CommandError::from).and_then(|s| run(cmd, &s, caps));
    let ms = timing.then(|| start.elapsed().as_secs_f64() * 1000.0);
    match result {
        Ok(out) => {
            let mut text = out.text.join("\n");
            text.push('\n');
            let json = envelope(EnvelopeParts {
                command: cmd.name(),
                input: &input,
                payload: Some(out.payload),
                log: out.log,
                timing_ms: ms,
                error: None,
            });
            FileResult { code: 0, text, json }
        }
        Err(e) => {
            let (kind, code) = match &e {
                CommandError::Parse(_) => ("parse", 1),
                CommandError::Analysis(_) => ("analysis", 2),
            };
            let json = envelope(EnvelopeParts {
                command: cmd.name(),
                input: &input,
                payload: None,
                log: vec![],
                timing_ms: ms,
                error: Some((kind, e.to_string())),
            });
            FileResult { code, text: format!("error: {}\n", e), json }
        }
    }
}

/// Parse arguments (argv[0] included) and run; `env_seed` is PDEKIT_SEED.
pub fn run_cli(args: &[String], env_seed: Option<&str>) -> CliOutput {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                CliOutput { code, stdout: text, stderr: String::new() }
            } else {
                CliOutput { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let seed = match env_seed {
        Some(v) => match v.trim().parse() {
            Ok(s) => s,
            Err(_) => {
                return CliOutput { code: 1, stdout: String::new(), stderr: format!("error: PDEKIT_SEED `{}` is not an integer\n", v) }
            }
        },
        None => cli.seed,
    };
    let caps = Caps { max_order: cli.max_order, seed, max_tries: cli.max_tries };
    let single = |cmd: Command, file: PathBuf| {
        let r = run_file(&cmd, &file, &caps, cli.timing);
        let stdout = if cli.json { to_pretty(&r.json) } else if r.code == 0 { r.text.clone() } else { String::new() };
        let stderr = if !cli.json && r.code != 0 { r.text } else { String::new() };
        CliOutput { code: r.code, stdout, stderr }
    };
    match cli.cmd {
        Cmd::Complete { file } => single(Command::Complete, file),
        Cmd::Characters { file } => single(Command::Characters, file),
        Cmd::Symbol { file, r } => single(Command::Symbol { r }, file),
        Cmd::Delta { file, s, level } => single(Command::Delta { s, level }, file),
        Cmd::Janet { file } => single(Command::Janet, file),
        Cmd::SpencerForm { file } => single(Command::SpencerForm, file),
        Cmd::Ck { file } => single(Command::Ck, file),
        Cmd::Sections { file, order, generators } => single(Command::Sections { order, generators }, file),
        Cmd::Adjoint { file } => single(Command::Adjoint, file),
        Cmd::Torsion { file } => single(Command::Torsion, file),
        Cmd::Cd { file, element } => single(Command::Cd { element }, file),
        Cmd::Localize { file, codim } => single(Command::Localize { codim }, file),
        Cmd::Purity { file } => single(Command::Purity, file),
        Cmd::Report { file } => single(Command::Report, file),
        Cmd::Batch { command, files } => {
            let Some(cmd) = simple_command(&command) else {
                return CliOutput { code: 1, stdout: String::new(), stderr: format!("error: `{}` cannot run in batch mode\n", command) };
            };
            let results: Vec<FileResult> = std::thread::scope(|sc| {
                let handles: Vec<_> = files.iter().map(|f| sc.spawn(|| run_file(&cmd, f, &caps, cli.timing))).collect();
                handles.into_iter().map(|h| h.join().expect("worker finished")).collect()
            });
            let code = results.iter().map(|r| r.code).max().unwrap_or(0);
            let stdout = if cli.json {
                to_pretty(&serde_json::Value::Array(results.iter().map(|r| r.json.clone()).collect()))
            } else {
                files.iter().zip(&results).map(|(f, r)| format!("== {} ==\n{}", f.display(), r.text)).collect()
            };
            CliOutput { code, stdout, stderr: String::new() }
        }
    }
}
