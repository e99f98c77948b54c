//! Command-line front end: simulate a scenario across its antenna sweep,
//! compute coverage maps, or just validate a scenario file.

use clap::{Args, Parser, Subcommand};
use gobsim::config::{parse_config, ScenarioConfig};
use gobsim::engine;
use gobsim::output;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "gobsim",
    version,
    about = "Beamformed macro-network mobility simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the scenario once per antenna element count and write the
    /// metrics, handover-event and beam-grid CSVs for each run.
    Run(RunArgs),
    /// Sample the static best-beam RSRP field over random positions, one
    /// column per element count plus a no-beamforming baseline.
    CoverageMap(CoverageArgs),
    /// Parse and validate a scenario file and print the effective scenario.
    Validate(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override the scenario's RNG seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Override the element sweep (e.g. 16,64).
    #[arg(long, value_name = "E,...", value_delimiter = ',')]
    elements: Option<Vec<usize>>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Run the sweep entries on parallel threads.
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct CoverageArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Carrier frequency for the map (GHz).
    #[arg(long, value_name = "GHZ", default_value_t = 28.0)]
    freq: f64,
    /// Number of uniformly drawn positions.
    #[arg(long, value_name = "N", default_value_t = 1000)]
    positions: usize,
}

fn main() -> ExitCode {
    // Usage errors exit with clap's own status (2) before reaching here.
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::CoverageMap(args) => cmd_coverage(args),
        Command::Validate(args) => {
            let cfg = load_scenario(&args)?;
            print!("{}", cfg.to_toml_string());
            Ok(())
        }
    }
}

/// Read, parse, override and validate the scenario. Nothing is written to
/// disk before this succeeds, so a rejected scenario leaves no artifacts.
fn load_scenario(common: &CommonArgs) -> Result<ScenarioConfig, String> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| format!("{}: {e}", common.config.display()))?;
    let mut cfg = parse_config(&text).map_err(|e| e.to_string())?;
    if let Some(seed) = common.seed {
        cfg.rng_seed = seed;
    }
    if let Some(elements) = &common.elements {
        cfg.element_sweep = elements.clone();
        if !elements.contains(&cfg.antenna_elements) {
            cfg.antenna_elements = elements[0];
        }
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn cmd_run(args: RunArgs) -> Result<(), String> {
    let cfg = load_scenario(&args.common)?;
    std::fs::create_dir_all(&args.out).map_err(|e| format!("{}: {e}", args.out.display()))?;

    let simulate_one = |elements: usize| -> Result<Vec<PathBuf>, String> {
        let run_cfg = ScenarioConfig {
            antenna_elements: elements,
            ..cfg.clone()
        };
        let log = engine::run(&run_cfg).map_err(|e| e.to_string())?;
        let grid = engine::grid_summary(&run_cfg).map_err(|e| e.to_string())?;
        output::write_run_files(&log, &grid, &args.out).map_err(|e| e.to_string())
    };

    let results: Vec<Result<Vec<PathBuf>, String>> = if args.parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = cfg
                .element_sweep
                .iter()
                .map(|&e| scope.spawn(move || simulate_one(e)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("simulation threads do not panic"))
                .collect()
        })
    } else {
        cfg.element_sweep.iter().map(|&e| simulate_one(e)).collect()
    };

    for result in results {
        for path in result? {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn cmd_coverage(args: CoverageArgs) -> Result<(), String> {
    let cfg = load_scenario(&args.common)?;
    if !(args.freq.is_finite() && args.freq > 0.0) {
        return Err(format!(
            "--freq must be a positive frequency, got {}",
            args.freq
        ));
    }
    let map = engine::coverage_map(&cfg, args.freq, args.positions).map_err(|e| e.to_string())?;
    std::fs::create_dir_all(&args.out).map_err(|e| format!("{}: {e}", args.out.display()))?;
    let meta = engine::run_meta(&cfg);
    let paths = output::write_coverage_files(&map, &meta, &args.out).map_err(|e| e.to_string())?;
    for path in paths {
        println!("wrote {}", path.display());
    }
    Ok(())
}
