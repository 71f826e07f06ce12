//! Independent reference solutions used to verify the level-set engine: a
//! circular-particle dissolution ODE integrated with a third-order
//! strong-stability-preserving Runge-Kutta scheme, and the closed-form
//! bulk recrystallization transient.
//!
//! Nothing here touches the grid machinery; agreement between these
//! solutions and the engine is checked by the acceptance suite.

use crate::error::{Result, SimError};
use crate::physchem::{overall_transfer, solubility, DrugParams};

/// How the reduced model couples interface flux to the bulk volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleGeometry {
    /// Two-dimensional cross-section extruded one unit deep: flux through
    /// the circle perimeter, `v_ext` in m² (volume per unit depth).
    Planar,
    /// A sphere in a three-dimensional bath: flux through the sphere
    /// surface, `v_ext` in m³.
    Spherical,
}

/// Inputs of the single-circle reference problem.
#[derive(Debug, Clone)]
pub struct CircleSetup {
    pub drug: DrugParams,
    /// Initial radius [m].
    pub r0: f64,
    /// Initial bulk concentration [kg/m³].
    pub c_b0: f64,
    /// External liquid volume (units per [`OracleGeometry`]).
    pub v_ext: f64,
    /// Number of identical particles sharing the bulk.
    pub multiplicity: f64,
    pub geometry: OracleGeometry,
    /// Integration horizon [s].
    pub t_end: f64,
    /// Fixed step size [s].
    pub dt: f64,
    /// Radius at which the particle is declared gone [m].
    pub r_floor: f64,
}

impl CircleSetup {
    /// A planar single circle starting in drug-free liquid.
    pub fn planar(drug: DrugParams, r0: f64, v_ext: f64, t_end: f64, dt: f64) -> CircleSetup {
        CircleSetup {
            drug,
            r0,
            c_b0: 0.0,
            v_ext,
            multiplicity: 1.0,
            geometry: OracleGeometry::Planar,
            t_end,
            dt,
            r_floor: 1e-9,
        }
    }
}

/// One recorded instant of the reference trajectory.
#[derive(Debug, Clone, Copy)]
pub struct OracleSample {
    pub t: f64,
    pub radius: f64,
    pub c_b: f64,
    pub c_s: f64,
}

/// Full reference trajectory with the terminating event, if any.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub samples: Vec<OracleSample>,
    /// First step end where the bulk reached the solubility curve.
    pub switch_time: Option<f64>,
    /// Step end where the radius fell through the floor.
    pub death_time: Option<f64>,
}

impl OracleSolution {
    /// Linearly interpolated radius at time `t` (clamped to the recorded
    /// range).
    pub fn radius_at(&self, t: f64) -> f64 {
        self.interp(t, |s| s.radius)
    }

    /// Linearly interpolated bulk concentration at time `t`.
    pub fn c_b_at(&self, t: f64) -> f64 {
        self.interp(t, |s| s.c_b)
    }

    pub fn last(&self) -> &OracleSample {
        self.samples.last().expect("solution has samples")
    }

    fn interp(&self, t: f64, field: impl Fn(&OracleSample) -> f64) -> f64 {
        let s = &self.samples;
        if t <= s[0].t {
            return field(&s[0]);
        }
        if t >= s[s.len() - 1].t {
            return field(&s[s.len() - 1]);
        }
        let mut lo = 0;
        let mut hi = s.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if s[mid].t <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (a, b) = (&s[lo], &s[hi]);
        let w = (t - a.t) / (b.t - a.t);
        field(a) * (1.0 - w) + field(b) * w
    }
}

/// Integrates the coupled radius/bulk system for one circular particle:
///
/// dR/dt = -K(R) (C_s(t) - C_b) / rho_s
/// dC_b/dt = (perimeter or surface) K(R) (C_s(t) - C_b) · multiplicity / V_ext
///
/// with K from the curvature-dependent transfer law evaluated at local
/// radius R and equivalent radius R. Stops at the horizon, when the
/// radius falls through the floor, or when the bulk reaches the
/// solubility curve (the recrystallization regime takes over there).
pub fn solve_circle(setup: &CircleSetup) -> Result<OracleSolution> {
    setup.drug.validate()?;
    for (name, value) in [
        ("r0", setup.r0),
        ("v_ext", setup.v_ext),
        ("multiplicity", setup.multiplicity),
        ("t_end", setup.t_end),
        ("dt", setup.dt),
        ("r_floor", setup.r_floor),
    ] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(SimError::InvalidParam {
                name: "circle oracle input",
                reason: "must be positive and finite",
                value,
            });
        }
        let _ = name;
    }
    if !(setup.c_b0 >= 0.0 && setup.c_b0.is_finite()) {
        return Err(SimError::InvalidParam {
            name: "c_b0",
            reason: "must be non-negative",
            value: setup.c_b0,
        });
    }

    let drug = &setup.drug;
    let rho = drug.solid_density;
    let rhs = |t: f64, r: f64, c_b: f64| -> (f64, f64) {
        let r_sane = r.max(1e-12);
        let k = overall_transfer(drug, r_sane, r_sane).transfer;
        let deficit = solubility(drug, t) - c_b;
        let dr = -k * deficit / rho;
        let boundary = match setup.geometry {
            OracleGeometry::Planar => std::f64::consts::TAU * r_sane,
            OracleGeometry::Spherical => 4.0 * std::f64::consts::PI * r_sane * r_sane,
        };
        let dc = boundary * k * deficit * setup.multiplicity / setup.v_ext;
        (dr, dc)
    };

    let mut r = setup.r0;
    let mut c_b = setup.c_b0;
    let dt = setup.dt;
    let steps = (setup.t_end / dt).ceil() as u64;
    let mut samples = Vec::with_capacity(steps as usize + 1);
    samples.push(OracleSample {
        t: 0.0,
        radius: r,
        c_b,
        c_s: solubility(drug, 0.0),
    });
    let mut switch_time = None;
    let mut death_time = None;

    for step in 1..=steps {
        let t = (step - 1) as f64 * dt;
        // Shu-Osher SSP-RK3 stages.
        let (k1r, k1c) = rhs(t, r, c_b);
        let r1 = r + dt * k1r;
        let c1 = c_b + dt * k1c;
        let (k2r, k2c) = rhs(t + dt, r1, c1);
        let r2 = 0.75 * r + 0.25 * (r1 + dt * k2r);
        let c2 = 0.75 * c_b + 0.25 * (c1 + dt * k2c);
        let (k3r, k3c) = rhs(t + 0.5 * dt, r2, c2);
        r = r / 3.0 + 2.0 / 3.0 * (r2 + dt * k3r);
        c_b = c_b / 3.0 + 2.0 / 3.0 * (c2 + dt * k3c);

        let t_now = step as f64 * dt;
        let c_s = solubility(drug, t_now);
        samples.push(OracleSample {
            t: t_now,
            radius: r.max(0.0),
            c_b,
            c_s,
        });
        if r <= setup.r_floor {
            death_time = Some(t_now);
            break;
        }
        if c_b >= c_s {
            switch_time = Some(t_now);
            break;
        }
    }

    Ok(OracleSolution {
        samples,
        switch_time,
        death_time,
    })
}

/// Closed-form bulk concentration during recrystallization [kg/m³], for the
/// canonical initial condition `C_b(t*) = C_s(t*)`: the solution of
/// `dC_b/dt = k_rb (C_s(t) - C_b)` from the saturation instant `t_star`.
pub fn recrystallization_cb(drug: &DrugParams, t_star: f64, t: f64) -> f64 {
    let k_rb = drug.recrystallization_rate;
    let k_r = drug.solubility_decay_rate;
    let span = drug.solubility_initial - drug.solubility_final;
    let beta = k_rb / (k_rb - k_r);
    let relax = (-k_rb * (t - t_star)).exp();
    let cs_star = solubility(drug, t_star);
    cs_star * relax
        + drug.solubility_final * (1.0 - relax)
        + beta * span * ((-k_r * t).exp() - (-k_r * t_star).exp() * relax)
}

/// Closed-form crystallized mass during recrystallization [kg], same
/// canonical initial conditions (`M_c(t*) = 0`), for bulk volume `v_ext`.
pub fn recrystallization_mc(drug: &DrugParams, t_star: f64, t: f64, v_ext: f64) -> f64 {
    let k_rb = drug.recrystallization_rate;
    let k_r = drug.solubility_decay_rate;
    let span = drug.solubility_initial - drug.solubility_final;
    let beta = k_rb / (k_rb - k_r);
    let relax = (-k_rb * (t - t_star)).exp();
    v_ext
        * span
        * ((-k_r * t_star).exp() - beta * (-k_r * t).exp()
            + (beta - 1.0) * (-k_r * t_star).exp() * relax)
}
