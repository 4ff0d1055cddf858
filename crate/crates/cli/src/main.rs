use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gennum::{EpsGrid, Gauge, Ring};
use gennum_cli::report::render_text;
use gennum_cli::{emit_csv, emit_report, load_config, run, CliError, Status};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "gennum",
    version,
    about = "Solve and certify equations over generalized numbers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver described by a config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        /// Override the number of ε samples.
        #[arg(long)]
        grid_count: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        quiet: bool,
    },
    /// Classify an expression as infinitesimal, finite or infinite.
    Classify {
        expr: String,
        #[arg(long, default_value = "eps")]
        gauge: String,
    },
    /// Print the canonical form of an expression.
    Parse { expr: String },
}

fn exec(cmd: Command) -> Result<Status, CliError> {
    match cmd {
        Command::Run {
            config,
            csv,
            json,
            grid_count,
            seed,
            quiet,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(n) = grid_count {
                cfg.grid.count = n;
            }
            if let Some(s) = seed {
                cfg.solver.seed = s;
            }
            let csv = csv.or_else(|| cfg.output.csv.as_ref().map(PathBuf::from));
            let json = json.or_else(|| cfg.output.json.as_ref().map(PathBuf::from));
            let report = run(&cfg)?;
            if let Some(p) = csv {
                emit_csv(&report, &p)?;
            }
            if let Some(p) = json {
                emit_report(&report, &p)?;
            }
            if !quiet {
                print!("{}", render_text(&report));
            }
            Ok(report.status)
        }
        Command::Classify { expr, gauge } => {
            let grid = EpsGrid::default();
            let gauge = Gauge::<gennum::Real>::parse(&gauge, &grid)?;
            let ring = Ring::new(gauge, grid);
            let x = gennum::expr::eval_str(&ring, &expr, &gennum::ParamEnv::new(0))?;
            let c = ring.classify(&x);
            let out = json!({
                "kind": c.kind,
                "near_standard_value": c.near_standard_value,
                "confidence": c.confidence,
                "fit": c.fit,
            });
            println!("{}", serde_json::to_string(&out)?);
            Ok(if c.kind == gennum::Kind::Indeterminate {
                Status::UNDECIDED
            } else {
                Status::OK
            })
        }
        Command::Parse { expr } => {
            let ast = gennum::parse(&expr)?;
            println!("{}", gennum::print_ast(&ast));
            Ok(Status::OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match exec(cli.command) {
        Ok(status) => ExitCode::from(status.code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Status::ERROR.code as u8)
        }
    }
}
