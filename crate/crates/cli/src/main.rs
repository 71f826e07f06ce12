//! Command-line front end: runs scenarios from config files or built-in
//! presets, lists presets, and emits reference trajectories for circular
//! particles.
//!
//! One run per invocation. Exit status 0 on success; any engine or
//! configuration failure prints a diagnostic to stderr and exits nonzero,
//! flushing whatever output prefix the run produced (the manifest then
//! carries a truncation marker).

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use dissolve2d_core::oracle::{solve_circle, CircleSetup, OracleSolution};
use dissolve2d_core::output::{render_oracle_csv, write_oracle_csv, write_run_outputs};
use dissolve2d_core::physchem::DrugParams;
use dissolve2d_core::scenario::{preset, preset_names, ScenarioConfig, UM};
use dissolve2d_core::{Result, SimError};

#[derive(Parser)]
#[command(
    name = "dissolve2d",
    version,
    about = "2D level-set simulator for dissolution and bulk recrystallization of drug particles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its output directory.
    Run(RunArgs),
    /// Inspect the built-in scenario presets.
    Presets {
        #[command(subcommand)]
        action: PresetsAction,
    },
    /// Integrate the single-circle reference model and emit its trajectory.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario configuration file (TOML).
    #[arg(long, value_name = "FILE", required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset name (see `presets list`).
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Output directory [default: out/<run name>].
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override the grid spacing [µm].
    #[arg(long, value_name = "UM")]
    dx: Option<f64>,
    /// Override the CFL ratio, in (0, 1].
    #[arg(long, value_name = "RATIO")]
    cfl: Option<f64>,
    /// Override the simulated horizon [s].
    #[arg(long, value_name = "S")]
    t_end: Option<f64>,
    /// Override the sampling seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads for per-particle parallelism (1 runs serially).
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Contour snapshot spacing [s].
    #[arg(long, value_name = "S")]
    snapshot_every: Option<f64>,
    /// Override the interfacial enhancement volume alpha [m³].
    #[arg(long, value_name = "M3")]
    alpha: Option<f64>,
}

#[derive(Subcommand)]
enum PresetsAction {
    /// Print the names of all built-in presets.
    List,
    /// Print one preset's full configuration (TOML).
    Show {
        #[arg(value_name = "NAME")]
        name: String,
    },
}

#[derive(Args)]
struct OracleArgs {
    /// Drug preset name.
    #[arg(long, value_name = "NAME")]
    drug: String,
    /// Initial circle radius [µm].
    #[arg(long, value_name = "UM")]
    r0: f64,
    /// Liquid-to-solid volume ratio V+.
    #[arg(long, value_name = "RATIO")]
    vplus: f64,
    /// Integration horizon [s].
    #[arg(long, value_name = "S", default_value_t = 1000.0)]
    t_end: f64,
    /// Integrator step [s].
    #[arg(long, value_name = "S", default_value_t = 1e-3)]
    dt: f64,
    /// Row spacing in the emitted CSV [s] [default: t_end/1000].
    #[arg(long, value_name = "S")]
    every: Option<f64>,
    /// Output CSV path [default: stdout].
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Presets { action } => cmd_presets(action),
        Command::Oracle(args) => cmd_oracle(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut config = match (&args.config, &args.preset) {
        (Some(path), None) => ScenarioConfig::from_file(path)?,
        (None, Some(name)) => preset(name).ok_or_else(|| {
            SimError::config(format!(
                "unknown preset {name:?}; run `dissolve2d presets list`"
            ))
        })?,
        // clap enforces exactly one of --config / --preset.
        _ => unreachable!(),
    };

    // Fold every override into the config itself, so the manifest echo
    // reproduces this exact run.
    if let Some(dx) = args.dx {
        let g = config.grid.get_or_insert_with(Default::default);
        g.dx_um = Some(dx);
        g.cells_across = None;
    }
    if let Some(cfl) = args.cfl {
        config.run.cfl = Some(cfl);
    }
    if let Some(t_end) = args.t_end {
        config.run.t_end_s = t_end;
    }
    if let Some(seed) = args.seed {
        config.seed = Some(seed);
    }
    if let Some(every) = args.snapshot_every {
        config.run.snapshot_interval_s = Some(every);
    }
    if let Some(alpha) = args.alpha {
        config.alpha_m3 = Some(alpha);
    }
    match args.jobs {
        Some(0) => {
            return Err(SimError::config("--jobs must be at least 1"));
        }
        Some(1) => config.run.parallel = Some(false),
        Some(n) => {
            config.run.parallel = Some(true);
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| SimError::config(format!("worker pool setup failed: {e}")))?;
        }
        None => {}
    }

    let scenario = config.build()?;
    let out_dir = args
        .out
        .unwrap_or_else(|| PathBuf::from("out").join(&scenario.name));

    let mut sim = scenario.build_sim()?;
    let started = Instant::now();
    let (result, run_err) = sim.run_partial(&scenario.options);
    let wall = started.elapsed().as_secs_f64();

    let manifest_path = write_run_outputs(
        &out_dir,
        &config,
        &scenario,
        &sim,
        &result,
        run_err.as_ref(),
        wall,
    )?;

    match run_err {
        Some(e) => {
            eprintln!(
                "partial outputs flushed to {} (see {})",
                out_dir.display(),
                manifest_path.display()
            );
            Err(e)
        }
        None => {
            let last = result.records.last();
            println!(
                "{}: t = {} s, {} steps, {} records, regime {}{} ({:.1} s wall)",
                scenario.name,
                last.map(|r| r.t).unwrap_or(0.0),
                result.steps,
                result.records.len(),
                last.map(|r| r.regime.as_str()).unwrap_or("dissolution"),
                if result.finished_early {
                    ", fully dissolved early"
                } else {
                    ""
                },
                wall,
            );
            println!("outputs in {}", out_dir.display());
            Ok(())
        }
    }
}

fn cmd_presets(action: PresetsAction) -> Result<()> {
    match action {
        PresetsAction::List => {
            for name in preset_names() {
                println!("{name}");
            }
            Ok(())
        }
        PresetsAction::Show { name } => {
            let config = preset(&name).ok_or_else(|| {
                SimError::config(format!(
                    "unknown preset {name:?}; run `dissolve2d presets list`"
                ))
            })?;
            print!("{}", config.to_toml_string()?);
            Ok(())
        }
    }
}

fn cmd_oracle(args: OracleArgs) -> Result<()> {
    let drug = DrugParams::preset(&args.drug).ok_or_else(|| {
        SimError::config(format!(
            "unknown drug preset {:?}; available: {}",
            args.drug,
            DrugParams::preset_names().join(", ")
        ))
    })?;
    let r0 = args.r0 * UM;
    let v_ext = args.vplus * std::f64::consts::PI * r0 * r0;
    let setup = CircleSetup::planar(drug, r0, v_ext, args.t_end, args.dt);
    let solution = solve_circle(&setup)?;
    let thinned = thin(&solution, args.every.unwrap_or(args.t_end / 1000.0));

    match args.out {
        Some(path) => write_oracle_csv(&path, &thinned)?,
        None => {
            let stdout = std::io::stdout();
            render_oracle_csv(&mut stdout.lock(), &thinned)?;
        }
    }
    Ok(())
}

/// Keeps roughly one sample per `every` seconds (always the first and the
/// last), without touching the integration itself.
fn thin(solution: &OracleSolution, every: f64) -> OracleSolution {
    let samples = &solution.samples;
    if samples.len() < 3 || !(every > 0.0 && every.is_finite()) {
        return solution.clone();
    }
    let dt = samples[1].t - samples[0].t;
    let stride = (every / dt).round().max(1.0) as usize;
    let mut out: Vec<_> = samples.iter().copied().step_by(stride).collect();
    let last = *samples.last().unwrap();
    if out.last().map(|s| s.t) != Some(last.t) {
        out.push(last);
    }
    OracleSolution {
        samples: out,
        ..solution.clone()
    }
}
