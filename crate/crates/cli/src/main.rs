use std::io::{self, BufRead, IsTerminal, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gredo_cli::format::OutputFormat;
use gredo_cli::session::{split_statements, Session, SessionConfig};
use gredo_core::cost::CostConstants;
use gredo_core::query::optimizer::Rule;

/// Multi-model database shell: relations, documents and property graphs
/// queried together.
#[derive(Parser, Debug)]
#[command(name = "gredo", version)]
struct Args {
    /// Database directory; in-memory when omitted.
    #[arg(long)]
    db: Option<PathBuf>,

    /// Enable or disable the query optimizer.
    #[arg(long, default_value = "on", value_parser = parse_on_off, action = clap::ArgAction::Set)]
    opt: bool,

    /// Toggle one rewrite rule, e.g. `--rule predicate-pushdown off`.
    #[arg(long, num_args = 2, value_names = ["NAME", "on|off"])]
    rule: Vec<String>,

    /// Worker threads for analytics kernels.
    #[arg(long)]
    workers: Option<usize>,

    #[arg(long)]
    cost_io: Option<f64>,

    #[arg(long)]
    cost_cpu: Option<f64>,

    #[arg(long, default_value = "table")]
    format: OutputFormat,

    /// Seed for fixtures and benchmarks.
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Run these commands and exit.
    #[arg(short = 'c', long = "command")]
    commands: Vec<String>,

    /// Script to run; reads stdin when neither this nor -c is given.
    script: Option<PathBuf>,
}

fn parse_on_off(s: &str) -> Result<bool, String> {
    match s.to_ascii_lowercase().as_str() {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(format!("expected on or off, found {other}")),
    }
}

fn config(args: &Args) -> Result<SessionConfig, String> {
    let mut config = SessionConfig {
        db_dir: args.db.clone(),
        optimizer: args.opt,
        format: args.format,
        seed: args.seed,
        ..SessionConfig::default()
    };
    for pair in args.rule.chunks(2) {
        let rule = Rule::parse(&pair[0]).ok_or_else(|| format!("unknown rule {}", pair[0]))?;
        config.rules.push((rule, parse_on_off(&pair[1])?));
    }
    if let Some(w) = args.workers {
        config.workers = w;
    }
    let mut costs = CostConstants::default();
    if let Some(io) = args.cost_io {
        costs.io = io;
    }
    if let Some(cpu) = args.cost_cpu {
        costs.cpu = cpu;
    }
    config.costs = costs;
    Ok(config)
}

/// Run statements in order, stopping at the first error. Returns the exit
/// code.
fn run_all(session: &mut Session, statements: &[String]) -> u8 {
    let stdout = io::stdout();
    for stmt in statements {
        match session.run_command(stmt) {
            Ok(out) => {
                if !out.is_empty() {
                    let _ = writeln!(stdout.lock(), "{out}");
                }
            }
            Err(e) => {
                eprintln!("{}", e.render());
                return e.exit_code() as u8;
            }
        }
    }
    0
}

/// Interactive loop: errors are reported and the shell keeps going.
fn repl(session: &mut Session) -> io::Result<()> {
    let stdin = io::stdin();
    let mut pending = String::new();
    print!("gredo> ");
    io::stdout().flush()?;
    for line in stdin.lock().lines() {
        let line = line?;
        pending.push_str(&line);
        pending.push('\n');
        let trimmed = pending.trim();
        let complete = trimmed.starts_with('.') || trimmed.ends_with(';') || trimmed.is_empty();
        if complete {
            for stmt in split_statements(&pending) {
                match session.run_command(&stmt) {
                    Ok(out) if !out.is_empty() => println!("{out}"),
                    Ok(_) => {}
                    Err(e) => eprintln!("{}", e.render()),
                }
            }
            pending.clear();
        }
        print!("{}", if pending.is_empty() { "gredo> " } else { "   ... " });
        io::stdout().flush()?;
    }
    println!();
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error[execution]: {e}");
            return ExitCode::from(1);
        }
    };
    let mut session = match Session::open(config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            return ExitCode::from(1);
        }
    };
    let code = if !args.commands.is_empty() {
        let statements: Vec<String> = args.commands.iter().flat_map(|c| split_statements(c)).collect();
        run_all(&mut session, &statements)
    } else if let Some(path) = &args.script {
        match std::fs::read_to_string(path) {
            Ok(text) => run_all(&mut session, &split_statements(&text)),
            Err(e) => {
                eprintln!("error[io]: {}: {e}", path.display());
                1
            }
        }
    } else if io::stdin().is_terminal() {
        if let Err(e) = repl(&mut session) {
            eprintln!("error[io]: {e}");
        }
        0
    } else {
        let mut text = String::new();
        match io::stdin().read_to_string(&mut text) {
            Ok(_) => run_all(&mut session, &split_statements(&text)),
            Err(e) => {
                eprintln!("error[io]: {e}");
                1
            }
        }
    };
    if let Err(e) = session.close() {
        eprintln!("error[{}]: {e}", e.category());
        return ExitCode::from(1);
    }
    ExitCode::from(code)
}
