use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use plc_nav::behavior::BehaviorMode;
use plc_nav::harness::batch::run_matrix_file;
use plc_nav::harness::export::{self, parse_plans_csv, parse_trajectory_csv, render_svg};
use plc_nav::harness::sim::run_with_map;
use plc_nav::harness::{compute_metrics, Config, ScenarioConfig, ScenarioKind, Turn};
use plc_nav::world::parse_map;

#[derive(Parser)]
#[command(name = "plcnav", version, about = "Hallway encounter simulator with proactive lane changing")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Frontal,
    Blind,
}

#[derive(Clone, Copy, ValueEnum)]
enum TurnArg {
    Ab,
    Aprime,
}

#[derive(Clone, Copy, ValueEnum)]
enum BehaviorArg {
    Constant,
    Stop,
    Slow,
    Plc,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate one encounter and write its logs.
    Run {
        #[arg(long, value_enum)]
        scenario: ScenarioArg,
        #[arg(long, value_enum)]
        turn: Option<TurnArg>,
        #[arg(long, value_enum)]
        behavior: BehaviorArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// TOML config; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write lane_field.csv.
        #[arg(long)]
        dump_lane_field: bool,
        /// ASCII map replacing the generated layout (same shape).
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Run a task matrix over a seed range.
    Batch {
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Render trajectory.svg from a trajectory CSV and the map.txt beside it.
    Plot {
        #[arg(long)]
        log: PathBuf,
        /// Map cell size used to place map.txt (m).
        #[arg(long, default_value_t = 0.05)]
        resolution: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the default configuration as TOML.
    DefaultConfig,
}

fn main() -> ExitCode {
    match real_main(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = e.source();
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::FAILURE
        }
    }
}

type AnyError = Box<dyn std::error::Error>;

fn real_main(cli: Cli) -> Result<(), AnyError> {
    match cli.cmd {
        Cmd::Run {
            scenario,
            turn,
            behavior,
            seed,
            config,
            out,
            dump_lane_field,
            map,
        } => {
            let config = match config {
                Some(p) => Config::load(&p)?,
                None => Config::default(),
            };
            let cfg = ScenarioConfig::new(
                match scenario {
                    ScenarioArg::Frontal => ScenarioKind::Frontal,
                    ScenarioArg::Blind => ScenarioKind::Blind,
                },
                turn.map(|t| match t {
                    TurnArg::Ab => Turn::Ab,
                    TurnArg::Aprime => Turn::Aprime,
                }),
                match behavior {
                    BehaviorArg::Constant => BehaviorMode::Constant,
                    BehaviorArg::Stop => BehaviorMode::Stop,
                    BehaviorArg::Slow => BehaviorMode::SlowDown,
                    BehaviorArg::Plc => BehaviorMode::Plc,
                },
                seed,
            )
            .with_config(config);
            let grid = match map {
                Some(p) => Some(parse_map(&export::read(&p)?, cfg.config.world.resolution)?),
                None => None,
            };
            let (sc, log) = run_with_map(&cfg, grid)?;
            let metrics = compute_metrics(&log, &cfg);
            export::write_run(&out, &sc.grid, &log, &metrics)?;
            if dump_lane_field {
                export::write_lane_field(&out.join("lane_field.csv"), &sc.lane.to_csv())?;
            }
            print!("{}", export::metrics_json(&metrics));
            Ok(())
        }
        Cmd::Batch { matrix } => {
            let (out, metrics) = run_matrix_file(&matrix)?;
            let done = metrics.iter().filter(|m| m.termination == "completed").count();
            println!("{} runs ({} completed) written to {}", metrics.len(), done, out.display());
            Ok(())
        }
        Cmd::Plot { log, resolution, out } => {
            let tracks = parse_trajectory_csv(&export::read(&log)?, &log)?;
            let dir = log.parent().unwrap_or(Path::new("."));
            let map = parse_map(&export::read(&dir.join("map.txt"))?, resolution)?;
            let map = map.with_origin(glam::DVec2::splat(-resolution));
            let plans = match export::read(&dir.join("plans.csv")) {
                Ok(t) => parse_plans_csv(&t),
                Err(_) => Vec::new(),
            };
            let out = out.unwrap_or_else(|| dir.join("trajectory.svg"));
            export::write_text(&out, &render_svg(&map, &tracks, &plans))?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Cmd::DefaultConfig => {
            print!("{}", Config::default().to_toml());
            Ok(())
        }
    }
}
