//! `tqet-lab`: command-line front end for the TQET laboratory.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{CliError, Session, SweepWhich};
use config::{Origin, RawConfig, RunConfig};

/// Output directory used when `--out` is not given.
const OUT_ENV: &str = "TQET_LAB_OUT";

#[derive(Parser, Debug)]
#[command(name = "tqet-lab", version, about = "Timelike quantum energy teleportation on mixed-field Ising chains")]
#[command(after_help = concat!(
    "Configuration keys (flat `key = value` file, `#` comments):\n\n",
    "  n_sites, j, h, g, site_a, site_b, sigma_a, sigma_b, t_max, dt,\n",
    "  g_min, g_max, g_points, h_min, h_max, h_points, n_min, n_max, allow_large_n,\n",
    "  scalarization, write_sync, corrupt_check, out, workers, format\n\n",
    "Precedence: defaults < --config file < --set (in order) < TQET_LAB_OUT < --out/--workers/--format.\n",
    "Exit codes: 0 success, 1 configuration error, 2 numerical error or failed check, 3 I/O error."
))]
struct Cli {
    /// Configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Both,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ground-state energy, gap, injected energy and outcome probabilities.
    Ground,
    /// Energy balance over the time grid: trace and summary files.
    Trace,
    /// Second moments of the time-separated correlator and the sync report.
    Timelike,
    /// Parameter sweeps.
    Sweep {
        #[arg(value_enum)]
        which: SweepArg,
    },
    /// Run the invariant suite at N = 4 and N = 6.
    Validate,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SweepArg {
    /// Heatmap over (g, h).
    Gh,
    /// Efficiencies versus N.
    Ece,
    /// TQET/QET ratio versus N.
    Ratio,
    /// Net advantage versus N at fixed distance.
    Fixed,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut raw = match &cli.config {
        Some(path) => RawConfig::from_file(path)?,
        None => RawConfig::default(),
    };
    for assignment in &cli.set {
        raw.set(assignment, Origin::Flag)?;
    }
    match (&cli.out, std::env::var_os(OUT_ENV)) {
        (Some(dir), _) => raw.set(&format!("out={}", dir.display()), Origin::Flag)?,
        (None, Some(dir)) if !dir.is_empty() => {
            raw.set(&format!("out={}", PathBuf::from(dir).display()), Origin::Environment)?
        }
        _ => {}
    }
    if let Some(w) = cli.workers {
        raw.set(&format!("workers={w}"), Origin::Flag)?;
    }
    if let Some(f) = cli.format {
        let name = match f {
            FormatArg::Csv => "csv",
            FormatArg::Json => "json",
            FormatArg::Both => "both",
        };
        raw.set(&format!("format={name}"), Origin::Flag)?;
    }
    Ok(RunConfig::from_raw(&raw)?)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = load(&cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| CliError::Numerical(tqet_core::Error::WorkerPool(e.to_string())))?;
    let session = Session::new(config);
    pool.install(|| match cli.command {
        Command::Ground => session.ground(),
        Command::Trace => session.trace(),
        Command::Timelike => session.timelike(),
        Command::Sweep { which } => session.sweep(match which {
            SweepArg::Gh => SweepWhich::Gh,
            SweepArg::Ece => SweepWhich::Ece,
            SweepArg::Ratio => SweepWhich::Ratio,
            SweepArg::Fixed => SweepWhich::Fixed,
        }),
        Command::Validate => session.validate(),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tqet-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
