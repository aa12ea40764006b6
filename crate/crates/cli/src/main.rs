use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ugfsim_cli::{
    load_file, presets, render, run, run_csv, sweep, CliError, EngineChoice, Overrides, Scenario,
};

#[derive(Parser)]
#[command(name = "ugfsim", version, about = "Atom interferometers, clock pairs and local probes in gravitational fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write CSV output to this file
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Phase engine(s) to run
    #[arg(long, global = true, value_enum)]
    engine: Option<EngineArg>,

    /// Integrator step in seconds
    #[arg(long, global = true, value_name = "SECONDS")]
    dt: Option<f64>,

    /// Engine agreement tolerance in radians (closed-form and integrated)
    #[arg(long, global = true, value_name = "RAD")]
    tol: Option<f64>,

    /// Only print errors
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file
    Run { file: PathBuf },
    /// Run the sweep defined in a scenario file
    Sweep { file: PathBuf },
    /// Run a built-in scenario
    Preset {
        /// Preset name; omit with --list
        name: Option<String>,
        /// Run the preset's sweep instead of a single point
        #[arg(long)]
        sweep: bool,
        /// Print the preset document and exit
        #[arg(long)]
        print: bool,
        /// List preset names
        #[arg(long)]
        list: bool,
    },
    /// Parse and validate a scenario file without running it
    Validate { file: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Midpoint,
    Action,
    Perturbation,
    All,
}

impl From<EngineArg> for EngineChoice {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Midpoint => EngineChoice::Midpoint,
            EngineArg::Action => EngineChoice::Action,
            EngineArg::Perturbation => EngineChoice::Perturbation,
            EngineArg::All => EngineChoice::All,
        }
    }
}

fn write_out(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Output {
        path: path.display().to_string(),
        source,
    })
}

fn print(text: &str) {
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(text.as_bytes());
}

fn do_run(cli: &Cli, mut scenario: Scenario, overrides: &Overrides) -> Result<bool, CliError> {
    scenario.apply(overrides)?;
    let report = run(&scenario)?;
    if let Some(out) = &cli.out {
        write_out(out, &run_csv(&report))?;
    }
    if !cli.quiet {
        print(&render(&report));
    }
    Ok(report.passed)
}

fn do_sweep(cli: &Cli, mut scenario: Scenario, overrides: &Overrides) -> Result<bool, CliError> {
    scenario.apply(overrides)?;
    let table = sweep(&scenario)?;
    let csv = table.to_csv();
    match &cli.out {
        Some(out) => {
            write_out(out, &csv)?;
            if !cli.quiet {
                let failed = table.rows.iter().filter(|r| !r.passed || r.error.is_some()).count();
                print(&format!(
                    "sweep of {} over {} values: {} failed, wrote {}\n",
                    table.parameter,
                    table.rows.len(),
                    failed,
                    out.display()
                ));
            }
        }
        None => print(&csv),
    }
    for r in table.rows.iter().filter(|r| r.error.is_some()) {
        log::error!("{} = {}: {}", table.parameter, r.value, r.error.as_deref().unwrap_or_default());
    }
    Ok(table.passed())
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    let overrides = Overrides {
        engine: cli.engine.map(Into::into),
        dt: cli.dt,
        tol: cli.tol,
    };
    match &cli.command {
        Command::Run { file } => do_run(cli, load_file(file)?, &overrides),
        Command::Sweep { file } => do_sweep(cli, load_file(file)?, &overrides),
        Command::Validate { file } => {
            let mut s = load_file(file)?;
            s.apply(&overrides)?;
            if !cli.quiet {
                let kind = s.kind().map_or("?", |k| k.name());
                print(&format!("{}: valid {kind} scenario\n", s.name));
            }
            Ok(true)
        }
        Command::Preset {
            name,
            sweep,
            print: show,
            list,
        } => {
            if *list {
                print(&(presets::names().join("\n") + "\n"));
                return Ok(true);
            }
            let name = name
                .as_deref()
                .ok_or_else(|| CliError::Invalid(vec!["preset: a name is required (see --list)".into()]))?;
            if *show {
                print(presets::text(name)?);
                return Ok(true);
            }
            let scenario = presets::load(name)?;
            if *sweep {
                do_sweep(cli, scenario, &overrides)
            } else {
                do_run(cli, scenario, &overrides)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { log::LevelFilter::Error } else { log::LevelFilter::Warn };
    env_logger::Builder::new().filter_level(level).init();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
