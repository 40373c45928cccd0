use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dcf_police::error::Result;
use dcf_police::experiment::{run_all, run_outputs, Overrides, RunSpec};
use dcf_police::output::{write_all, OutputFile};
use dcf_police::sweep::{parse_seeds, parse_values, run_sweeps, Axis, SweepSpec};
use dcf_police::{parse_scenario, presets, tables, CliError, ScenarioConfig};
use dcf_police_core::MeasurementMode;

/// Slot-level 802.11 DCF simulator with AP-side ACK-suppression policing.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario file.
    Run {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a named experiment.
    Preset {
        #[arg(required_unless_present = "list")]
        name: Option<String>,
        /// List the available presets.
        #[arg(long)]
        list: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Vary one scenario parameter over values and seeds.
    Sweep {
        file: PathBuf,
        /// Parameter path, e.g. n_fair or controller.alpha.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        /// Seed count, inclusive range `a..b`, or comma-separated list.
        #[arg(long, default_value = "10")]
        seeds: String,
        #[command(flatten)]
        common: Common,
    },
    /// Write an analytic table.
    Analytics {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(tables::CURVES))]
        curve: String,
        #[arg(long, env = "DCF_POLICE_OUT_DIR", default_value = "out")]
        out_dir: PathBuf,
    },
    /// Print a scenario file in canonical form.
    Normalize { file: PathBuf },
}

#[derive(Args)]
struct Common {
    /// Seed of the run (first seed of a sweep).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "DCF_POLICE_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, value_enum)]
    measurement_mode: Option<Mode>,
    /// Disable the policing controller.
    #[arg(long)]
    no_policing: bool,
    /// Worker threads for independent runs (0 uses every core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Oracle,
    Realistic,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            measurement_mode: self.measurement_mode.map(|m| match m {
                Mode::Oracle => MeasurementMode::Oracle,
                Mode::Realistic => MeasurementMode::Realistic,
            }),
            no_policing: self.no_policing,
        }
    }
}

fn load(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    parse_scenario(&text).map_err(|source| CliError::ScenarioFile { path: path.to_path_buf(), source })
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scenario".into())
}

fn emit(dir: &Path, files: &[OutputFile]) -> Result<()> {
    for p in write_all(dir, files)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { file, common } => {
            let mut cfg = load(&file)?;
            common.overrides().apply(&mut cfg);
            let name = stem(&file);
            let results = run_all(&[RunSpec::new(name.clone(), cfg)], common.workers)?;
            emit(&common.out_dir, &run_outputs(&name, &results))
        }
        Command::Preset { list: true, .. } => {
            for p in &presets::PRESETS {
                println!("{:<20} {}", p.name, p.description);
            }
            Ok(())
        }
        Command::Preset { name, common, .. } => {
            let name = name.expect("clap requires a name without --list");
            let files = presets::run_preset(&name, common.seed.unwrap_or(1), &common.overrides(), common.workers)?;
            emit(&common.out_dir, &files)
        }
        Command::Sweep { file, axis, values, seeds, common } => {
            let mut base = load(&file)?;
            let overrides = Overrides { seed: None, ..common.overrides() };
            overrides.apply(&mut base);
            let spec = SweepSpec {
                label: stem(&file),
                base,
                axis: Axis::parse(&axis)?,
                values: parse_values(&values)?,
                seeds: parse_seeds(&seeds, common.seed)?,
            };
            let result = run_sweeps(std::slice::from_ref(&spec), common.workers)?;
            emit(&common.out_dir, &result.outputs(&format!("{}-sweep", spec.label)))
        }
        Command::Analytics { curve, out_dir } => {
            let table = tables::curve(&curve)?;
            emit(&out_dir, &[OutputFile { name: format!("{curve}.csv"), contents: table.to_csv() }])
        }
        Command::Normalize { file } => {
            print!("{}", load(&file)?.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
