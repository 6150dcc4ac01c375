use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use sosdecomp::hjb::EPS_FLOOR;
use sosdecomp_cli::commands::{self, CellStatus};
use sosdecomp_cli::config::SolveConfig;
use sosdecomp_cli::error::CliError;

/// Sum-of-squares bounds on the desirability of first-exit control problems.
#[derive(Parser)]
#[command(name = "sosdecomp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Config file, or a bundled name (`scalar_sec6`, `cartesian_sec7`).
    config: String,
    /// Override a config key, e.g. `--set solver.degree=8`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<SolveConfig, CliError> {
        SolveConfig::load(&self.config, &self.set)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate a config: noise assumption, q >= 0, boundary fits.
    Check(ConfigArgs),
    /// Solve and write solution.txt, trace.csv and summary.txt.
    Solve {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output directory; defaults to `output.directory`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a solution record on a uniform grid.
    Eval {
        record: PathBuf,
        #[arg(long, default_value_t = 101)]
        resolution: usize,
        #[arg(long, default_value_t = EPS_FLOOR)]
        eps_floor: f64,
        /// CSV path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare records with the finite-difference reference.
    Compare {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long = "record", required = true)]
        records: Vec<PathBuf>,
        #[arg(long, default_value_t = 201)]
        nodes: usize,
    },
    /// Slack table over degrees and regions per axis.
    Table {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_delimiter = ',', default_value = "4,6,8")]
        degrees: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        regions: Vec<usize>,
        /// Seconds per cell before it is marked skipped.
        #[arg(long)]
        budget: Option<f64>,
        /// CSV path; defaults to `<output.directory>/table.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn csv_sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            Box::new(BufWriter::new(File::create(p)?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Check(args) => {
            let report = commands::cmd_check(&args.load()?);
            print!("{}", report.render());
            match report.failure {
                None => Ok(()),
                Some((reason, detail)) => Err(CliError::Validation { reason, detail }),
            }
        }
        Command::Solve { cfg, out } => {
            let cfg = cfg.load()?;
            let dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
            let res = commands::cmd_solve(&cfg, &dir)?;
            print!("{}", fs::read_to_string(&res.summary_path)?);
            if res.solution.converged {
                Ok(())
            } else {
                Err(CliError::NotConverged(format!(
                    "stopped after {} outer iterations",
                    res.solution.trace.len()
                )))
            }
        }
        Command::Eval {
            record,
            resolution,
            eps_floor,
            out,
        } => {
            let rec = commands::load_record(&record)?;
            let mut sink = csv_sink(out.as_deref())?;
            commands::cmd_eval(&rec, resolution, eps_floor, &mut sink)?;
            sink.flush()?;
            Ok(())
        }
        Command::Compare { cfg, records, nodes } => {
            let cfg = cfg.load()?;
            let recs = records.iter().map(|p| commands::load_record(p)).collect::<Result<Vec<_>, _>>()?;
            let report = commands::cmd_compare(&cfg, &recs, nodes)?;
            print!("{}", report.render());
            Ok(())
        }
        Command::Table {
            cfg,
            degrees,
            regions,
            budget,
            out,
        } => {
            let cfg = cfg.load()?;
            let cells = commands::cmd_table(&cfg, &degrees, &regions, budget.map(Duration::from_secs_f64));
            let path = out.unwrap_or_else(|| Path::new(&cfg.output.directory).join("table.csv"));
            let mut sink = csv_sink(Some(&path))?;
            commands::write_table_csv(&cells, &mut sink)?;
            sink.flush()?;
            print!("{}", commands::render_table(&cells, &degrees, &regions));
            let failed = cells.iter().filter(|c| c.status == CellStatus::Failed).count();
            if failed > 0 {
                log::warn!("{failed} cell(s) failed; see {}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
