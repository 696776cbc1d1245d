use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use rayon::prelude::*;

use wavecouple::error::Error;
use wavecouple::io::{self, Report};
use wavecouple::pipeline::{self, Stage};
use wavecouple::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    Trajectory,
    Covering,
    Steer,
    Reduce,
    Global,
    Verify,
    Sweep,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Trajectory => "trajectory",
            Command::Covering => "covering",
            Command::Steer => "steer",
            Command::Reduce => "reduce",
            Command::Global => "global",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
        }
    }
}

/// Return trajectories, fictitious controls and their reduction for
/// cubically coupled 1D wave equations.
#[derive(Debug, Parser)]
#[command(name = "wavecouple", version)]
struct Cli {
    command: Command,
    /// scenario file; repeat for `sweep`. The built-in default is used when absent.
    #[arg(long)]
    scenario: Vec<PathBuf>,
    /// output root
    #[arg(long, env = "WAVECOUPLE_OUT", default_value = "wavecouple-out")]
    out: PathBuf,
    /// concurrent scenarios for `sweep`
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// dyadic refinements of the scenario grid
    #[arg(long, default_value_t = 0)]
    grid_refine: u32,
    #[arg(long)]
    compat_order: Option<usize>,
    /// seed of randomized data families
    #[arg(long)]
    seed: Option<u64>,
}

const EXIT_PARSE: u8 = 2;
const EXIT_PRECONDITION: u8 = 3;
const EXIT_CHECK: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) => EXIT_PARSE,
        Error::NewtonStalled(_) | Error::PicardDiverged(_) | Error::BlowUp(_) => EXIT_CHECK,
        _ => EXIT_PRECONDITION,
    }
}

fn load(cli: &Cli, path: Option<&Path>) -> Result<Scenario, Error> {
    let mut s = match path {
        Some(p) => Scenario::load(p)?,
        None => Scenario::default(),
    };
    if let Some(k) = cli.compat_order {
        s.compat_order = k;
    }
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    Ok(s)
}

fn stage(cmd: Command) -> Stage {
    match cmd {
        Command::Trajectory => Stage::Trajectory,
        Command::Covering => Stage::Covering,
        Command::Steer => Stage::Steer,
        Command::Reduce => Stage::Reduce,
        Command::Global => Stage::Global,
        Command::Verify | Command::Sweep => Stage::Verify,
    }
}

/// Runs one scenario into `dir` and returns the exit code with a reason.
fn run_one(cli: &Cli, cmd: Command, path: Option<&Path>, dir: &Path) -> (u8, Option<String>) {
    let s = match load(cli, path) {
        Ok(s) => s,
        Err(e) => return (exit_code(&e), Some(e.to_string())),
    };
    let o = match pipeline::run_stage(stage(cmd), &s, cli.grid_refine) {
        Ok(o) => o,
        Err(e) => return (exit_code(&e), Some(e.to_string())),
    };
    let mut files = o.artifacts.clone();
    files.push(("scenario.txt".into(), s.to_text()));
    files.push(("report.txt".into(), o.report.to_text()));
    files.push(("summary".into(), pipeline::summary(cmd.name(), &o)));
    for (name, text) in &files {
        if let Err(e) = io::write(&dir.join(name), text) {
            return (EXIT_PRECONDITION, Some(e.to_string()));
        }
    }
    match o.first_failure() {
        None => (0, None),
        Some(c) => (EXIT_CHECK, Some(format!("{} failed: {}", c.name, c.detail))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let root = cli.out.join(cli.command.name());
    if cli.command != Command::Sweep {
        if cli.scenario.len() > 1 {
            eprintln!("wavecouple: only `sweep` takes more than one --scenario");
            return ExitCode::from(EXIT_PARSE);
        }
        let (code, reason) = run_one(&cli, cli.command, cli.scenario.first().map(|p| p.as_path()), &root);
        if let Some(r) = reason {
            eprintln!("wavecouple: {r}");
        }
        return ExitCode::from(code);
    }
    let paths: Vec<Option<PathBuf>> = if cli.scenario.is_empty() { vec![None] } else { cli.scenario.iter().cloned().map(Some).collect() };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.max(1)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("wavecouple: {e}");
            return ExitCode::from(EXIT_PRECONDITION);
        }
    };
    let results: Vec<(String, u8, Option<String>)> = pool.install(|| {
        paths
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                let stem = p
                    .as_ref()
                    .and_then(|p| p.file_stem())
                    .map_or("default".to_string(), |s| s.to_string_lossy().into_owned());
                let name = format!("{i:02}-{stem}");
                let (code, reason) = run_one(&cli, Command::Sweep, p.as_deref(), &root.join(&name));
                (name, code, reason)
            })
            .collect()
    });
    let mut index = Report::default();
    let mut worst = 0;
    for (name, code, reason) in &results {
        index.put(&format!("{name}.exit"), code);
        if let Some(r) = reason {
            eprintln!("wavecouple: {name}: {r}");
        }
        worst = worst.max(*code);
    }
    index.put("status", if worst == 0 { "pass" } else { "fail" });
    if let Err(e) = io::write(&root.join("summary"), &index.to_text()) {
        eprintln!("wavecouple: {e}");
        return ExitCode::from(EXIT_PRECONDITION);
    }
    ExitCode::from(worst)
}
