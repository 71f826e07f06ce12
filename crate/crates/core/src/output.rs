//! Run artifact writers: plot-ready CSV files, contour snapshots, level-set
//! field dumps, and a TOML manifest that makes every run reproducible.
//!
//! Determinism contract: every float is printed with Rust's shortest
//! round-trip formatter and rows are emitted in a fixed order, so a rerun
//! from the same manifest produces byte-identical files. Lengths are written
//! in micrometres (the natural plotting scale for these particles);
//! concentrations, masses, and transfer coefficients stay in SI. Column
//! names carry their units.

use std::fs::{self, File};
use std::io::{BufWriter, Write as IoWrite};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{OutputRecord, ParticleRecord, RunResult, SimState, Snapshot};
use crate::error::{Result, SimError};
use crate::geometry::ShapeKind;
use crate::levelset::LevelSetField;
use crate::oracle::OracleSolution;
use crate::scenario::{Scenario, ScenarioConfig, UM};

/// Bumped whenever any emitted schema changes shape.
pub const SCHEMA_VERSION: u32 = 1;

/// Header of the bulk time-series file.
pub const TIMESERIES_HEADER: &str = "t_s,c_b_kg_m3,c_s_kg_m3,regime,m_c_kg_m,\
                                     solid_kg_m,alive,total_perimeter_um,total_area_um2,closure_error";
/// Header of the per-particle measure log.
pub const PARTICLES_HEADER: &str =
    "particle_id,t_s,alive,r_eq_um,perimeter_um,area_um2,min_radius_um,max_transfer_m_s";
/// Header of the contour snapshot file.
pub const CONTOURS_HEADER: &str = "particle_id,t_s,loop_idx,x_um,y_um";
/// Header of the initial-population audit file.
pub const POPULATION_HEADER: &str =
    "particle_id,kind,multiplicity,center_x_um,center_y_um,rotation_rad,area_um2,r_eq_um";
/// Header of the reference-trajectory file (same naming as the particle log
/// so columns can be diffed directly).
pub const ORACLE_HEADER: &str = "t_s,r_eq_um,c_b_kg_m3,c_s_kg_m3,regime";

/// File names used inside a run output directory.
pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const PARTICLES_FILE: &str = "particles.csv";
pub const CONTOURS_FILE: &str = "contours.csv";
pub const SNAPSHOTS_FILE: &str = "snapshots.json";
pub const POPULATION_FILE: &str = "population.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Shortest round-trip decimal form of `x` (total order, no locale).
fn fmt(x: f64) -> String {
    format!("{x}")
}

fn meters_to_um(x: f64) -> f64 {
    x / UM
}

fn area_to_um2(x: f64) -> f64 {
    x / (UM * UM)
}

/// Writes the bulk time series, one row per output instant.
pub fn write_timeseries_csv(path: &Path, records: &[OutputRecord]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{TIMESERIES_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt(r.t),
            fmt(r.c_b),
            fmt(r.c_s),
            r.regime.as_str(),
            fmt(r.m_c),
            fmt(r.solid_mass),
            fmt(r.alive),
            fmt(meters_to_um(r.total_perimeter)),
            fmt(area_to_um2(r.total_area)),
            fmt(r.closure_error),
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the per-particle measure log, one row per particle per instant.
pub fn write_particles_csv(path: &Path, records: &[ParticleRecord]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{PARTICLES_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.id,
            fmt(r.t),
            u8::from(r.alive),
            fmt(meters_to_um(r.r_eq)),
            fmt(meters_to_um(r.perimeter)),
            fmt(area_to_um2(r.area)),
            // A dead/degenerate contour reports an infinite minimum radius;
            // write an empty cell instead of a non-numeric token.
            if r.min_radius.is_finite() {
                fmt(meters_to_um(r.min_radius))
            } else {
                String::new()
            },
            fmt(r.max_transfer),
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Writes contour snapshots as flat rows; loops are delimited by the
/// `loop_idx` column and each closed loop repeats its first vertex last.
pub fn write_contours_csv(path: &Path, snapshots: &[Snapshot]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{CONTOURS_HEADER}")?;
    for s in snapshots {
        for (li, poly) in s.loops.iter().enumerate() {
            for &(x, y) in &poly.points {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    s.particle,
                    fmt(s.t),
                    li,
                    fmt(meters_to_um(x)),
                    fmt(meters_to_um(y)),
                )?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct JsonLoop {
    closed: bool,
    /// Vertices in micrometres, `[x, y]` pairs.
    points_um: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct JsonSnapshot {
    particle_id: usize,
    t_s: f64,
    loops: Vec<JsonLoop>,
}

/// Writes contour snapshots as a JSON polyline list (same content as the
/// CSV, structured for direct consumption by plotting scripts).
pub fn write_snapshots_json(path: &Path, snapshots: &[Snapshot]) -> Result<()> {
    let list: Vec<JsonSnapshot> = snapshots
        .iter()
        .map(|s| JsonSnapshot {
            particle_id: s.particle,
            t_s: s.t,
            loops: s
                .loops
                .iter()
                .map(|l| JsonLoop {
                    closed: l.closed,
                    points_um: l
                        .points
                        .iter()
                        .map(|&(x, y)| [meters_to_um(x), meters_to_um(y)])
                        .collect(),
                })
                .collect(),
        })
        .collect();
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, &list)
        .map_err(|e| SimError::config(format!("snapshot serialization failed: {e}")))?;
    w.flush()?;
    Ok(())
}

/// Echoes the resolved initial population (one row per particle) so sampled
/// sizes can be audited without re-deriving the RNG streams.
pub fn write_population_csv(path: &Path, scenario: &Scenario) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{POPULATION_HEADER}")?;
    for (id, p) in scenario.particles.iter().enumerate() {
        let kind = match p.shape.kind {
            ShapeKind::Circle { .. } => "circle",
            ShapeKind::Superellipse { .. } => "superellipse",
            ShapeKind::Rectangle { .. } => "rectangle",
        };
        let area = p.shape.analytic_area();
        let r_eq = (area / std::f64::consts::PI).sqrt();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            id,
            kind,
            fmt(p.multiplicity),
            fmt(meters_to_um(p.shape.center.0)),
            fmt(meters_to_um(p.shape.center.1)),
            fmt(p.shape.rotation),
            fmt(area_to_um2(area)),
            fmt(meters_to_um(r_eq)),
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a reference circular-particle trajectory with the same column
/// conventions as the run outputs.
pub fn write_oracle_csv(path: &Path, solution: &OracleSolution) -> Result<()> {
    let mut w = create(path)?;
    render_oracle_csv(&mut w, solution)?;
    w.flush()?;
    Ok(())
}

/// Streams the reference trajectory as CSV into any writer (stdout, files).
pub fn render_oracle_csv(w: &mut impl IoWrite, solution: &OracleSolution) -> Result<()> {
    writeln!(w, "{ORACLE_HEADER}")?;
    for s in &solution.samples {
        let regime = match solution.switch_time {
            Some(ts) if s.t >= ts => "recrystallization",
            _ => "dissolution",
        };
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt(s.t),
            fmt(meters_to_um(s.radius)),
            fmt(s.c_b),
            fmt(s.c_s),
            regime,
        )?;
    }
    Ok(())
}

/// Dumps one level-set field as CSV for offline visualization: `#`-prefixed
/// header lines carrying the grid geometry and time, then `i,j,phi` rows in
/// row-major order (SI values; phi is a distance in metres).
pub fn write_field_csv(path: &Path, field: &LevelSetField, t: f64) -> Result<()> {
    let grid = field.grid();
    let (ox, oy) = grid.origin();
    let mut w = create(path)?;
    writeln!(w, "# cells={}", grid.cells())?;
    writeln!(w, "# dx={}", fmt(grid.dx()))?;
    writeln!(w, "# origin={},{}", fmt(ox), fmt(oy))?;
    writeln!(w, "# t={}", fmt(t))?;
    writeln!(w, "i,j,phi")?;
    let n = grid.cells();
    let values = field.values();
    for j in 0..n {
        for i in 0..n {
            writeln!(w, "{},{},{}", i, j, fmt(values[j * n + i]))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Everything needed to reproduce and audit a finished (or truncated) run.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub code_version: String,
    pub name: String,
    pub seed: u64,
    /// `"completed"`, or `"truncated: <error>"` when the engine failed
    /// mid-run and the files hold a prefix of the trajectory.
    pub status: String,
    pub finished_early: bool,
    pub steps: u64,
    pub wall_seconds: f64,
    /// Resolved bath volume per unit depth [m²].
    pub v_ext_m2: f64,
    /// Initial solid mass per unit depth [kg/m].
    pub initial_mass_kg_m: f64,
    /// Last recorded time [s].
    pub final_t_s: f64,
    /// Emitted files, relative to the manifest's directory.
    pub files: Vec<String>,
    /// Column headers, index-matched to `files` (empty for non-tabular
    /// files).
    pub headers: Vec<String>,
    /// Complete scenario configuration; feeding this text back through the
    /// parser reproduces the run (`seed` included above is the resolved
    /// value, echoed in the text as well).
    pub config_toml: String,
}

impl RunManifest {
    pub fn from_file(path: &Path) -> Result<RunManifest> {
        let text = fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| SimError::config(format!("manifest parse error: {e}")))
    }

    /// The embedded scenario configuration, reparsed.
    pub fn config(&self) -> Result<ScenarioConfig> {
        ScenarioConfig::parse_str(&self.config_toml)
    }
}

/// Writes a complete run output directory: time series, particle log,
/// population echo, contour snapshots (when any were taken), and the
/// manifest. Returns the manifest path. When `error` is given the files
/// hold whatever prefix the engine produced and the manifest's `status`
/// carries the truncation marker.
pub fn write_run_outputs(
    dir: &Path,
    config: &ScenarioConfig,
    scenario: &Scenario,
    sim: &SimState,
    result: &RunResult,
    error: Option<&SimError>,
    wall_seconds: f64,
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;

    let mut files = vec![
        (TIMESERIES_FILE, TIMESERIES_HEADER),
        (PARTICLES_FILE, PARTICLES_HEADER),
        (POPULATION_FILE, POPULATION_HEADER),
    ];
    write_timeseries_csv(&dir.join(TIMESERIES_FILE), &result.records)?;
    write_particles_csv(&dir.join(PARTICLES_FILE), &result.particle_records)?;
    write_population_csv(&dir.join(POPULATION_FILE), scenario)?;
    if !result.snapshots.is_empty() {
        write_contours_csv(&dir.join(CONTOURS_FILE), &result.snapshots)?;
        write_snapshots_json(&dir.join(SNAPSHOTS_FILE), &result.snapshots)?;
        files.push((CONTOURS_FILE, CONTOURS_HEADER));
        files.push((SNAPSHOTS_FILE, ""));
    }

    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        name: scenario.name.clone(),
        seed: scenario.seed,
        status: match error {
            None => "completed".to_string(),
            Some(e) => format!("truncated: {e}"),
        },
        finished_early: result.finished_early,
        steps: result.steps,
        wall_seconds,
        v_ext_m2: sim.v_ext,
        initial_mass_kg_m: sim.m0,
        final_t_s: result.records.last().map(|r| r.t).unwrap_or(0.0),
        files: files.iter().map(|(f, _)| f.to_string()).collect(),
        headers: files.iter().map(|(_, h)| h.to_string()).collect(),
        config_toml: config.to_toml_string()?,
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = toml::to_string_pretty(&manifest)
        .map_err(|e| SimError::config(format!("manifest serialize error: {e}")))?;
    fs::write(&manifest_path, text)?;
    Ok(manifest_path)
}
