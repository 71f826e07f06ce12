//! Coupled time stepping: level-set dissolution of every particle against a
//! shared bulk concentration, switching to the closed-form bulk
//! recrystallization transient when the liquid saturates.
//!
//! All bookkeeping runs per unit depth: areas stand in for volumes and the
//! bath volume is an area as well, so concentrations stay in kg/m³.
//!
//! The coupling is conservative: each step the bulk gains exactly the solid
//! mass the measured fronts lost, so `m0 = solid + dissolved + crystal`
//! holds to round-off at every instant. The interface transfer integral
//! enters through the front speeds; using it a second time as a separate
//! bulk-gain quadrature would let the two discretizations drift apart.

use rayon::prelude::*;

use crate::error::{Result, SimError};
use crate::geometry::{extract_contours, measure, ContourMeasure, ContourPolyline};
use crate::levelset::{
    cfl_dt, curvature_field, curvature_or_neighbor, foot_point_curvature, upwind_step,
    CurvatureField, LevelSetField,
    SpeedField,
};
use crate::physchem::{solubility, supersaturation_decay, DrugParams, TransferContext};

/// Safety fraction of the parabolic stability bound on the step length.
///
/// The normal speed depends on the local curvature radius roughly as
/// `K ~ D/R`, so the front motion contains a diffusion-like feedback with
/// effective diffusivity `|dK/dR| R^2 (C_s - C_b) / rho_s ~ D (C_s - C_b)
/// / rho_s`. Explicit stepping is stable only below `dx^2` over twice that
/// diffusivity; crossing it wrinkles the front at grid scale long before
/// the advective CFL bound binds.
const PARABOLIC_SAFETY: f64 = 0.25;

/// Parabolic step bound for one particle grid (see [`PARABOLIC_SAFETY`]).
fn parabolic_dt(dx: f64, drug: &DrugParams, deficit: f64) -> f64 {
    PARABOLIC_SAFETY * dx * dx * drug.solid_density / (deficit * drug.diffusivity)
}

/// Which process currently controls the bulk concentration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Particles dissolve; the bulk is below the solubility curve.
    Dissolution,
    /// The bulk reached the (decaying) solubility curve; dissolution halts
    /// and bulk recrystallization drains the excess.
    Recrystallization,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Dissolution => "dissolution",
            Regime::Recrystallization => "recrystallization",
        }
    }
}

/// One particle: its level-set field plus derived per-step quantities.
#[derive(Debug)]
pub struct ParticleState {
    pub id: usize,
    /// Number of identical physical particles this field represents.
    pub multiplicity: f64,
    pub field: LevelSetField,
    pub alive: bool,
    /// Analytic cross-section area of the seeded shape [m²].
    pub analytic_area: f64,
    /// Interface measures of the current field (refreshed lazily).
    pub measure: ContourMeasure,
    curv: CurvatureField,
    speed: SpeedField,
    scratch: Vec<f64>,
    fresh: bool,
    /// Area at the start of the current step, for conservative coupling.
    prev_area: f64,
}

impl ParticleState {
    /// Recomputes curvature and interface measures if the field changed.
    /// Declares the particle dead when its contour vanishes or its area
    /// falls below one cell.
    fn refresh(&mut self, drug: &DrugParams) {
        if !self.alive || self.fresh {
            return;
        }
        curvature_field(&self.field, &mut self.curv);
        self.measure = measure(&self.field, &self.curv, drug);
        self.fresh = true;
        let dx = self.field.grid().dx();
        if self.measure.loop_count == 0 || self.measure.area < dx * dx {
            // The final sliver counts as dissolved; conservative coupling
            // credits it to the bulk because the measured area drops to 0.
            self.alive = false;
            self.measure = ContourMeasure {
                min_radius: f64::INFINITY,
                ..ContourMeasure::default()
            };
        }
    }

    /// Fills the per-node normal speed `v = -K(kappa) (C_s - C_b) / rho_s`.
    fn build_speed(&mut self, drug: &DrugParams, deficit: f64) {
        debug_assert!(self.fresh && self.alive);
        let grid = self.field.grid();
        let n1 = grid.nodes_per_side();
        let r_min = 0.5 * grid.dx();
        let ctx = TransferContext::new(drug, self.measure.r_eq);
        let scale = deficit / drug.solid_density;
        self.speed.values.clear();
        self.speed.values.resize(grid.node_count(), 0.0);
        let mut max_abs = 0.0f64;
        for j in 0..n1 {
            for i in 0..n1 {
                // Each node drives the interface point its normal ray hits,
                // so the transfer law is evaluated with the curvature at
                // that foot point; using the node's own level-set curvature
                // instead biases the front speed by O(Δx).
                let kappa = foot_point_curvature(&self.field, &self.curv, i, j)
                    .or_else(|| curvature_or_neighbor(&self.curv, grid, i, j));
                let eval = match kappa {
                    Some(kappa) => ctx.eval_from_curvature(kappa, r_min),
                    None => ctx.eval_concave(),
                };
                let v = -eval.transfer * scale;
                self.speed.values[j * n1 + i] = v;
                max_abs = max_abs.max(v.abs());
            }
        }
        self.speed.max_abs = max_abs;
    }
}

/// How the external liquid volume is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BathVolume {
    /// Liquid area per unit depth [m²].
    PerDepth(f64),
    /// Multiple of the total initial solid cross-section (the
    /// liquid-to-solid volume ratio).
    SolidRatio(f64),
}

/// A seeded particle handed to the simulation.
#[derive(Debug)]
pub struct ParticleSeed {
    pub field: LevelSetField,
    pub multiplicity: f64,
    /// Analytic area of the seeding shape [m²], used to resolve
    /// [`BathVolume::SolidRatio`] reproducibly.
    pub analytic_area: f64,
}

/// Stepper options.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub t_end: f64,
    /// Advection stability fraction in (0, 1].
    pub cfl: f64,
    /// Hard cap on any step length [s].
    pub dt_max: f64,
    /// Spacing of time-series records [s].
    pub output_interval: f64,
    /// Spacing of contour snapshots [s], if any.
    pub snapshot_interval: Option<f64>,
    /// Process particles on the worker pool (per-particle parallelism).
    pub parallel: bool,
}

impl RunOptions {
    /// Defaults: CFL 0.9, `dt_max = t_end / 10⁴`, 200 records, no
    /// snapshots.
    pub fn new(t_end: f64) -> RunOptions {
        RunOptions {
            t_end,
            cfl: 0.9,
            dt_max: t_end / 1e4,
            output_interval: t_end / 200.0,
            snapshot_interval: None,
            parallel: true,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, ok, value) in [
            ("t_end", self.t_end > 0.0 && self.t_end.is_finite(), self.t_end),
            ("cfl", self.cfl > 0.0 && self.cfl <= 1.0, self.cfl),
            ("dt_max", self.dt_max > 0.0, self.dt_max),
            (
                "output_interval",
                self.output_interval > 0.0,
                self.output_interval,
            ),
            (
                "snapshot_interval",
                self.snapshot_interval.map_or(true, |s| s > 0.0),
                self.snapshot_interval.unwrap_or(1.0),
            ),
        ] {
            if !ok {
                return Err(SimError::InvalidParam {
                    name,
                    reason: "out of range",
                    value,
                });
            }
        }
        Ok(())
    }
}

/// One time-series record.
#[derive(Debug, Clone, Copy)]
pub struct OutputRecord {
    pub t: f64,
    pub c_b: f64,
    pub c_s: f64,
    pub regime: Regime,
    /// Crystallized mass [kg per depth].
    pub m_c: f64,
    /// Remaining solid mass [kg per depth].
    pub solid_mass: f64,
    /// Multiplicity-weighted count of alive particles.
    pub alive: f64,
    /// Multiplicity-weighted total perimeter [m].
    pub total_perimeter: f64,
    /// Multiplicity-weighted total area [m²].
    pub total_area: f64,
    /// |M₀ - (solid + dissolved + crystallized)| / M₀ at this instant.
    pub closure_error: f64,
}

/// Per-particle record at an output instant.
#[derive(Debug, Clone, Copy)]
pub struct ParticleRecord {
    pub id: usize,
    pub t: f64,
    pub alive: bool,
    pub r_eq: f64,
    pub perimeter: f64,
    pub area: f64,
    pub min_radius: f64,
    pub max_transfer: f64,
}

/// Interface loops of one particle at one instant.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub particle: usize,
    pub t: f64,
    pub loops: Vec<ContourPolyline>,
}

/// Everything a run produced.
#[derive(Debug)]
pub struct RunResult {
    pub records: Vec<OutputRecord>,
    pub particle_records: Vec<ParticleRecord>,
    pub snapshots: Vec<Snapshot>,
    /// True when the run ended before the horizon because nothing could
    /// evolve anymore (all particles gone, bulk below the stable-form
    /// solubility).
    pub finished_early: bool,
    pub steps: u64,
}

/// Full simulation state.
#[derive(Debug)]
pub struct SimState {
    pub drug: DrugParams,
    pub particles: Vec<ParticleState>,
    /// External liquid volume per unit depth [m²].
    pub v_ext: f64,
    pub t: f64,
    pub c_b: f64,
    /// Crystallized mass [kg per depth].
    pub m_c: f64,
    pub regime: Regime,
    /// Initial solid mass from the measured seed areas [kg per depth].
    pub m0: f64,
    switch_t: f64,
    switch_cb: f64,
    mc_base: f64,
    steps: u64,
}

impl SimState {
    pub fn new(drug: DrugParams, seeds: Vec<ParticleSeed>, bath: BathVolume) -> Result<SimState> {
        drug.validate()?;
        // An empty particle list is allowed with an explicit bath volume
        // (the run degenerates to a flat C_b = 0 series); a solid-ratio
        // bath needs solids to scale against and falls through to the
        // positive-volume check below.
        let mut analytic_total = 0.0;
        for (k, seed) in seeds.iter().enumerate() {
            if !(seed.multiplicity > 0.0 && seed.multiplicity.is_finite()) {
                return Err(SimError::config(format!(
                    "particle {k}: multiplicity must be positive"
                )));
            }
            if !(seed.analytic_area > 0.0 && seed.analytic_area.is_finite()) {
                return Err(SimError::config(format!(
                    "particle {k}: analytic area must be positive"
                )));
            }
            analytic_total += seed.multiplicity * seed.analytic_area;
        }
        let v_ext = match bath {
            BathVolume::PerDepth(v) => v,
            BathVolume::SolidRatio(r) => r * analytic_total,
        };
        if !(v_ext > 0.0 && v_ext.is_finite()) {
            return Err(SimError::InvalidParam {
                name: "v_ext",
                reason: "external volume must be positive",
                value: v_ext,
            });
        }

        let mut particles: Vec<ParticleState> = seeds
            .into_iter()
            .enumerate()
            .map(|(id, seed)| ParticleState {
                id,
                multiplicity: seed.multiplicity,
                field: seed.field,
                alive: true,
                analytic_area: seed.analytic_area,
                measure: ContourMeasure::default(),
                curv: CurvatureField::default(),
                speed: SpeedField::new_zero(0),
                scratch: Vec::new(),
                fresh: false,
                prev_area: 0.0,
            })
            .collect();
        for p in particles.iter_mut() {
            p.refresh(&drug);
            if !p.alive {
                return Err(SimError::InvalidShape(format!(
                    "particle {} is unresolved on its grid (no interface)",
                    p.id
                )));
            }
            p.prev_area = p.measure.area;
        }
        let m0 = drug.solid_density
            * particles
                .iter()
                .map(|p| p.multiplicity * p.measure.area)
                .sum::<f64>();

        Ok(SimState {
            drug,
            particles,
            v_ext,
            t: 0.0,
            c_b: 0.0,
            m_c: 0.0,
            regime: Regime::Dissolution,
            m0,
            switch_t: 0.0,
            switch_cb: 0.0,
            mc_base: 0.0,
            steps: 0,
        })
    }

    /// Remaining solid mass from current measures [kg per depth].
    pub fn solid_mass(&self) -> f64 {
        self.drug.solid_density
            * self
                .particles
                .iter()
                .map(|p| p.multiplicity * p.measure.area)
                .sum::<f64>()
    }

    fn all_dead(&self) -> bool {
        self.particles.iter().all(|p| !p.alive)
    }

    fn refresh_measures(&mut self, parallel: bool) {
        let drug = self.drug;
        if parallel && self.particles.len() > 1 {
            self.particles.par_iter_mut().for_each(|p| p.refresh(&drug));
        } else {
            self.particles.iter_mut().for_each(|p| p.refresh(&drug));
        }
    }

    /// Applies the regime guards at the current time.
    fn check_regime(&mut self) {
        let c_s = solubility(&self.drug, self.t);
        match self.regime {
            Regime::Dissolution => {
                if self.c_b >= c_s {
                    self.regime = Regime::Recrystallization;
                    self.switch_t = self.t;
                    self.switch_cb = self.c_b;
                    self.mc_base = self.m_c;
                }
            }
            Regime::Recrystallization => {
                if self.c_b < c_s {
                    self.regime = Regime::Dissolution;
                }
            }
        }
    }

    /// One dissolution step, at most `dt_cap` long. Returns the step
    /// actually taken.
    fn step_dissolution(&mut self, dt_cap: f64, opts: &RunOptions) -> Result<f64> {
        let deficit = solubility(&self.drug, self.t) - self.c_b;
        debug_assert!(deficit > 0.0);
        let drug = self.drug;
        let parallel = opts.parallel && self.particles.len() > 1;

        // Speed fields from the current fronts.
        if parallel {
            self.particles.par_iter_mut().for_each(|p| {
                if p.alive {
                    p.build_speed(&drug, deficit);
                }
            });
        } else {
            for p in self.particles.iter_mut() {
                if p.alive {
                    p.build_speed(&drug, deficit);
                }
            }
        }

        // Stability bounds across all alive particles: the advective CFL
        // plus the parabolic limit of the curvature-speed feedback.
        let mut dt = dt_cap.min(opts.dt_max);
        for p in self.particles.iter().filter(|p| p.alive) {
            let dx = p.field.grid().dx();
            dt = dt.min(cfl_dt(dx, p.speed.max_abs, opts.cfl, opts.dt_max));
            dt = dt.min(parabolic_dt(dx, &drug, deficit));
        }

        // Advance the fronts and re-measure them; the bulk then gains
        // exactly the solid the fronts lost (conservative coupling).
        if parallel {
            self.particles
                .par_iter_mut()
                .try_for_each(|p| -> Result<()> {
                    if p.alive {
                        p.prev_area = p.measure.area;
                        upwind_step(&mut p.field, &p.speed, dt, &mut p.scratch)?;
                        p.fresh = false;
                        p.refresh(&drug);
                    }
                    Ok(())
                })?;
        } else {
            for p in self.particles.iter_mut() {
                if p.alive {
                    p.prev_area = p.measure.area;
                    upwind_step(&mut p.field, &p.speed, dt, &mut p.scratch)?;
                    p.fresh = false;
                    p.refresh(&drug);
                }
            }
        }
        // Serial sum in particle order keeps the result deterministic.
        // Resetting `prev_area` zeroes every particle's pending loss, so
        // ones skipped by later steps (dead) contribute nothing again.
        let mut lost_area = 0.0;
        for p in self.particles.iter_mut() {
            lost_area += p.multiplicity * (p.prev_area - p.measure.area);
            p.prev_area = p.measure.area;
        }
        self.c_b += drug.solid_density * lost_area / self.v_ext;
        self.t += dt;
        self.steps += 1;
        Ok(dt)
    }

    /// One recrystallization step: the bulk follows its closed-form
    /// transient anchored at the switch state, and the crystallized mass
    /// absorbs exactly what the bulk loses. Fronts stay frozen.
    fn step_recrystallization(&mut self, dt_cap: f64, opts: &RunOptions) -> f64 {
        let dt = dt_cap.min(opts.dt_max);
        let t_new = self.t + dt;
        self.c_b = supersaturation_decay(&self.drug, self.switch_t, self.switch_cb, t_new);
        self.m_c = self.mc_base + self.v_ext * (self.switch_cb - self.c_b);
        self.t = t_new;
        self.steps += 1;
        dt
    }

    /// Idle advance used when nothing can evolve (all particles dead but
    /// the bulk still sits below the solubility curve).
    fn step_idle(&mut self, dt_cap: f64, opts: &RunOptions) -> f64 {
        let dt = dt_cap.min(opts.dt_max);
        self.t += dt;
        self.steps += 1;
        dt
    }

    fn emit_record(&mut self, out: &mut RunResult, parallel: bool) {
        self.refresh_measures(parallel);
        let c_s = solubility(&self.drug, self.t);
        let solid = self.solid_mass();
        let dissolved = self.c_b * self.v_ext;
        let closure = if self.m0 > 0.0 {
            ((self.m0 - (solid + dissolved + self.m_c)) / self.m0).abs()
        } else {
            0.0
        };
        let mut alive = 0.0;
        let mut total_p = 0.0;
        let mut total_a = 0.0;
        for p in &self.particles {
            if p.alive {
                alive += p.multiplicity;
            }
            total_p += p.multiplicity * p.measure.perimeter;
            total_a += p.multiplicity * p.measure.area;
        }
        out.records.push(OutputRecord {
            t: self.t,
            c_b: self.c_b,
            c_s,
            regime: self.regime,
            m_c: self.m_c,
            solid_mass: solid,
            alive,
            total_perimeter: total_p,
            total_area: total_a,
            closure_error: closure,
        });
        for p in &self.particles {
            out.particle_records.push(ParticleRecord {
                id: p.id,
                t: self.t,
                alive: p.alive,
                r_eq: p.measure.r_eq,
                perimeter: p.measure.perimeter,
                area: p.measure.area,
                min_radius: p.measure.min_radius,
                max_transfer: p.measure.max_transfer,
            });
        }
    }

    fn emit_snapshots(&mut self, out: &mut RunResult) {
        for p in &self.particles {
            if !p.alive {
                continue;
            }
            out.snapshots.push(Snapshot {
                particle: p.id,
                t: self.t,
                loops: extract_contours(&p.field),
            });
        }
    }

    /// Runs the coupled system to the horizon, emitting records at every
    /// output boundary. Time lands exactly on each boundary (steps are
    /// shortened to hit them), so records across runs with the same
    /// output interval share identical timestamps.
    pub fn run(&mut self, opts: &RunOptions) -> Result<RunResult> {
        let (out, err) = self.run_partial(opts);
        match err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    /// Like [`SimState::run`], but an engine failure mid-run hands back the
    /// records accumulated so far together with the error, so callers can
    /// flush partial outputs with a truncation marker instead of losing the
    /// whole run.
    pub fn run_partial(&mut self, opts: &RunOptions) -> (RunResult, Option<SimError>) {
        let mut out = RunResult {
            records: Vec::new(),
            particle_records: Vec::new(),
            snapshots: Vec::new(),
            finished_early: false,
            steps: 0,
        };
        if let Err(e) = opts.validate() {
            return (out, Some(e));
        }
        let parallel = opts.parallel;
        let t_end = opts.t_end;
        let t_eps = t_end * 1e-12;

        self.refresh_measures(parallel);
        self.emit_record(&mut out, parallel);
        if opts.snapshot_interval.is_some() {
            self.emit_snapshots(&mut out);
        }
        let mut out_idx: u64 = 1;
        let mut snap_idx: u64 = 1;

        while self.t < t_end - t_eps {
            self.check_regime();
            if self.m0 > 0.0
                && self.all_dead()
                && self.regime == Regime::Dissolution
                && self.c_b < self.drug.solubility_final
            {
                // The bulk can never reach the decaying solubility curve
                // again; nothing left to evolve. (A run that never had
                // particles instead idles to the horizon, emitting its
                // flat series.)
                out.finished_early = true;
                break;
            }

            let out_t = (out_idx as f64 * opts.output_interval).min(t_end);
            let mut boundary = out_t;
            let snap_t = opts
                .snapshot_interval
                .map(|s| (snap_idx as f64 * s).min(t_end));
            if let Some(st) = snap_t {
                boundary = boundary.min(st);
            }
            let dt_cap = boundary - self.t;
            debug_assert!(dt_cap > 0.0);

            let used = match self.regime {
                Regime::Dissolution => {
                    let any_alive = !self.all_dead();
                    if any_alive {
                        self.refresh_measures(parallel);
                        match self.step_dissolution(dt_cap, opts) {
                            Ok(dt) => dt,
                            Err(e) => {
                                // State before the failed step is intact;
                                // the emitted records stay consistent.
                                out.steps = self.steps;
                                return (out, Some(e));
                            }
                        }
                    } else {
                        self.step_idle(dt_cap, opts)
                    }
                }
                Regime::Recrystallization => self.step_recrystallization(dt_cap, opts),
            };

            if used >= dt_cap * (1.0 - 1e-9) {
                self.t = boundary;
                if (boundary - out_t).abs() <= t_eps {
                    self.emit_record(&mut out, parallel);
                    out_idx += 1;
                }
                if let Some(st) = snap_t {
                    if (boundary - st).abs() <= t_eps {
                        self.refresh_measures(parallel);
                        self.emit_snapshots(&mut out);
                        snap_idx += 1;
                    }
                }
            }
        }

        // Capture the final state if the loop broke off a boundary.
        let last_t = out.records.last().map(|r| r.t).unwrap_or(-1.0);
        if self.t > last_t + t_eps {
            self.emit_record(&mut out, parallel);
        }
        out.steps = self.steps;
        (out, None)
    }
}
