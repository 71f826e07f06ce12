//! Drug/fluid physical chemistry: solubility decay, particle settling, and
//! the curvature-dependent mass-transfer coefficient chain.
//!
//! All quantities are SI unless noted: lengths in m, densities and
//! concentrations in kg/m³, rates in 1/s, transfer coefficients in m/s,
//! dynamic viscosity in Pa·s, diffusivity and kinematic viscosity in m²/s.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Standard gravitational acceleration [m/s²].
pub const STANDARD_GRAVITY: f64 = 9.81;

fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}

/// Physical constants of one drug dissolving in one fluid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrugParams {
    /// Solid (particle) density [kg/m³].
    pub solid_density: f64,
    /// Solubility of the metastable solid form at time zero [kg/m³].
    pub solubility_initial: f64,
    /// Solubility of the stable solid form, approached as t → ∞ [kg/m³].
    pub solubility_final: f64,
    /// First-order rate of the solubility decay [1/s].
    pub solubility_decay_rate: f64,
    /// First-order rate of bulk recrystallization [1/s].
    pub recrystallization_rate: f64,
    /// Surface-integration coefficient of a flat interface [m/s].
    pub surface_coeff_flat: f64,
    /// Molecular diffusivity of the dissolved drug [m²/s].
    pub diffusivity: f64,
    /// Fluid density [kg/m³].
    pub fluid_density: f64,
    /// Fluid dynamic viscosity [Pa·s].
    pub fluid_viscosity: f64,
    /// Fluid kinematic viscosity [m²/s].
    pub fluid_kinematic_viscosity: f64,
    /// Small-radius enhancement volume of the surface coefficient [m³].
    pub surface_enhancement_volume: f64,
    /// Crossover length of the surface-coefficient size dependence [m].
    pub surface_transition_length: f64,
    /// Gravitational acceleration [m/s²].
    #[serde(default = "default_gravity")]
    pub gravity: f64,
}

impl DrugParams {
    /// Names accepted by [`DrugParams::preset`].
    pub fn preset_names() -> &'static [&'static str] {
        &[
            "theophylline-25",
            "theophylline-37",
            "griseofulvin-37",
            "nimesulide-37",
        ]
    }

    /// Built-in drug/fluid parameter sets. The suffix is the bath
    /// temperature in °C.
    pub fn preset(name: &str) -> Option<DrugParams> {
        let p = match name {
            "theophylline-25" => DrugParams {
                solid_density: 1490.0,
                solubility_initial: 11.6,
                solubility_final: 6.1,
                solubility_decay_rate: 6.0e-3,
                recrystallization_rate: 6.6e-3,
                surface_coeff_flat: 3.7e-3,
                diffusivity: 6.2e-10,
                fluid_density: 1000.0,
                fluid_viscosity: 1.0e-3,
                fluid_kinematic_viscosity: 1.0e-6,
                surface_enhancement_volume: 1.0e-15,
                surface_transition_length: 1.0e-9,
                gravity: STANDARD_GRAVITY,
            },
            "theophylline-37" => DrugParams {
                solid_density: 1490.0,
                solubility_initial: 12.495,
                solubility_final: 6.569,
                solubility_decay_rate: 6.0e-3,
                recrystallization_rate: 5.7e-3,
                surface_coeff_flat: 2.0e-3,
                diffusivity: 8.2e-10,
                fluid_density: 993.0,
                fluid_viscosity: 6.91e-4,
                fluid_kinematic_viscosity: 6.96e-7,
                surface_enhancement_volume: 1.0e-15,
                surface_transition_length: 2.6e-10,
                gravity: STANDARD_GRAVITY,
            },
            "griseofulvin-37" => DrugParams {
                solid_density: 1495.0,
                solubility_initial: 0.494,
                solubility_final: 0.025,
                solubility_decay_rate: 8.8e-3,
                recrystallization_rate: 8.36e-3,
                surface_coeff_flat: 0.126,
                diffusivity: 7.057e-10,
                fluid_density: 993.0,
                fluid_viscosity: 6.91e-4,
                fluid_kinematic_viscosity: 6.96e-7,
                surface_enhancement_volume: 1.0e-15,
                surface_transition_length: 3.10e-10,
                gravity: STANDARD_GRAVITY,
            },
            "nimesulide-37" => DrugParams {
                solid_density: 1476.0,
                solubility_initial: 4.108,
                solubility_final: 0.028,
                solubility_decay_rate: 1.3e-2,
                recrystallization_rate: 1.235e-2,
                surface_coeff_flat: 1.8e-7,
                diffusivity: 7.388e-10,
                fluid_density: 993.0,
                fluid_viscosity: 6.91e-4,
                fluid_kinematic_viscosity: 6.96e-7,
                surface_enhancement_volume: 1.0e-15,
                surface_transition_length: 2.82e-10,
                gravity: STANDARD_GRAVITY,
            },
            _ => return None,
        };
        Some(p)
    }

    /// Checks all parameters for physical admissibility.
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &'static str, value: f64) -> Result<()> {
            if !(value > 0.0 && value.is_finite()) {
                return Err(SimError::InvalidParam {
                    name,
                    reason: "must be a positive finite number",
                    value,
                });
            }
            Ok(())
        }
        fn non_negative(name: &'static str, value: f64) -> Result<()> {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(SimError::InvalidParam {
                    name,
                    reason: "must be a non-negative finite number",
                    value,
                });
            }
            Ok(())
        }

        positive("solid_density", self.solid_density)?;
        positive("solubility_initial", self.solubility_initial)?;
        positive("solubility_final", self.solubility_final)?;
        positive("solubility_decay_rate", self.solubility_decay_rate)?;
        positive("recrystallization_rate", self.recrystallization_rate)?;
        positive("surface_coeff_flat", self.surface_coeff_flat)?;
        positive("diffusivity", self.diffusivity)?;
        positive("fluid_density", self.fluid_density)?;
        positive("fluid_viscosity", self.fluid_viscosity)?;
        positive("fluid_kinematic_viscosity", self.fluid_kinematic_viscosity)?;
        non_negative("surface_enhancement_volume", self.surface_enhancement_volume)?;
        non_negative("surface_transition_length", self.surface_transition_length)?;
        positive("gravity", self.gravity)?;

        if self.solid_density <= self.fluid_density {
            return Err(SimError::InvalidParam {
                name: "solid_density",
                reason: "must exceed fluid_density for the particle to settle",
                value: self.solid_density,
            });
        }
        if self.solubility_initial <= self.solubility_final {
            return Err(SimError::InvalidParam {
                name: "solubility_initial",
                reason: "must exceed solubility_final",
                value: self.solubility_initial,
            });
        }
        let rate_gap = (self.recrystallization_rate - self.solubility_decay_rate).abs();
        if rate_gap <= 1e-12 * self.solubility_decay_rate.max(self.recrystallization_rate) {
            return Err(SimError::InvalidParam {
                name: "recrystallization_rate",
                reason: "must differ from solubility_decay_rate",
                value: self.recrystallization_rate,
            });
        }
        Ok(())
    }
}

/// Solubility of the metastable form at time `t` [kg/m³]: exponential decay
/// from the initial to the final (stable-form) value.
pub fn solubility(drug: &DrugParams, t: f64) -> f64 {
    drug.solubility_final
        + (drug.solubility_initial - drug.solubility_final)
            * (-drug.solubility_decay_rate * t).exp()
}

/// Radius of the circle with the given cross-section area [m].
pub fn equivalent_radius(area: f64) -> f64 {
    (area / std::f64::consts::PI).sqrt()
}

/// Terminal settling speed of the particle relative to the fluid [m/s],
/// Stokes drag on a sphere of diameter `2 * r_eq`.
pub fn settling_speed(drug: &DrugParams, r_eq: f64) -> f64 {
    let diameter = 2.0 * r_eq;
    (drug.solid_density - drug.fluid_density) * drug.gravity * diameter * diameter
        / (18.0 * drug.fluid_viscosity)
}

/// Diffusive boundary-layer coefficient of a convex surface element with
/// local radius `r`, on a particle whose settling speed is set by `r_eq`
/// [m/s]. Sphere-in-flow correlation: `(D / 2r) * (2 + 0.6 Re^1/2 Sc^1/3)`.
pub fn boundary_coeff_curved(drug: &DrugParams, r: f64, r_eq: f64) -> f64 {
    let delta_u = settling_speed(drug, r_eq);
    let d = drug.diffusivity;
    let nu = drug.fluid_kinematic_viscosity;
    let reynolds = 2.0 * r * delta_u / nu;
    let schmidt = nu / d;
    d / (2.0 * r) * (2.0 + 0.6 * reynolds.sqrt() * schmidt.cbrt())
}

/// Diffusive boundary-layer coefficient of a flat (or concave) surface
/// element [m/s]. Flat-plate correlation with the particle extent `r_eq`
/// as the streamwise length: `0.621 D^2/3 nu^-1/6 sqrt(dU / r_eq)`.
pub fn boundary_coeff_flat(drug: &DrugParams, r_eq: f64) -> f64 {
    let delta_u = settling_speed(drug, r_eq);
    let d = drug.diffusivity;
    let nu = drug.fluid_kinematic_viscosity;
    0.621 * d.powf(2.0 / 3.0) * nu.powf(-1.0 / 6.0) * (delta_u / r_eq).sqrt()
}

/// Local radius at which the convex boundary-layer coefficient equals the
/// flat one [m]. Above this radius a surface element is treated as flat.
///
/// With `k_curved(r) = D/r + c/sqrt(r)` (the same expression as
/// [`boundary_coeff_curved`] regrouped), the matching radius solves a
/// quadratic in `1/sqrt(r)` and is returned in closed form.
pub fn planarization_radius(drug: &DrugParams, r_eq: f64) -> f64 {
    let delta_u = settling_speed(drug, r_eq);
    let d = drug.diffusivity;
    let nu = drug.fluid_kinematic_viscosity;
    // k_curved(r) = d/r + sqrt_coeff/sqrt(r)
    let sqrt_coeff = 0.3 * d.powf(2.0 / 3.0) * nu.powf(-1.0 / 6.0) * (2.0 * delta_u).sqrt();
    let k_flat = boundary_coeff_flat(drug, r_eq);
    // d s^2 + sqrt_coeff s - k_flat = 0, s = 1/sqrt(r), positive root.
    let s = (-sqrt_coeff + (sqrt_coeff * sqrt_coeff + 4.0 * d * k_flat).sqrt()) / (2.0 * d);
    1.0 / (s * s)
}

/// Surface-integration coefficient of a convex surface element with local
/// radius `r` [m/s]. Grows as `1/r³` at small radii and crosses over to the
/// flat-interface value at large radii.
pub fn surface_coeff(drug: &DrugParams, r: f64) -> f64 {
    drug.surface_coeff_flat
        * (drug.surface_enhancement_volume / (r * r * r)
            + r / (r + 2.0 * drug.surface_transition_length))
}

/// Series combination of the boundary-layer and surface-integration
/// resistances with the curvature factor applied to each stage.
fn combine(curvature_factor: f64, boundary: f64, surface: f64) -> f64 {
    1.0 / (curvature_factor * (1.0 / boundary + curvature_factor / surface))
}

/// One evaluation of the overall mass-transfer coefficient.
#[derive(Debug, Clone, Copy)]
pub struct TransferEval {
    /// Local radius the evaluation used [m]; infinite on the concave/flat
    /// branch.
    pub radius: f64,
    /// Boundary-layer coefficient [m/s].
    pub boundary_coeff: f64,
    /// Surface-integration coefficient [m/s].
    pub surface_coeff: f64,
    /// Curvature factor `1 + D / (k_boundary * r)`; 1 on the flat branch.
    pub curvature_factor: f64,
    /// Overall transfer coefficient [m/s].
    pub transfer: f64,
    /// Whether the flat-interface branch was taken.
    pub flat_branch: bool,
}

/// Precomputed per-particle quantities for repeated transfer evaluations at
/// a fixed equivalent radius.
#[derive(Debug, Clone)]
pub struct TransferContext {
    diffusivity: f64,
    surface_coeff_flat: f64,
    enhancement_volume: f64,
    two_transition: f64,
    boundary_flat: f64,
    planarization_radius: f64,
    /// `c` in `k_curved(r) = D/r + c/sqrt(r)`.
    sqrt_coeff: f64,
    concave: TransferEval,
}

impl TransferContext {
    /// Builds the context for a particle of equivalent radius `r_eq` > 0.
    pub fn new(drug: &DrugParams, r_eq: f64) -> TransferContext {
        assert!(
            r_eq > 0.0 && r_eq.is_finite(),
            "equivalent radius must be positive, got {r_eq}"
        );
        let d = drug.diffusivity;
        let nu = drug.fluid_kinematic_viscosity;
        let delta_u = settling_speed(drug, r_eq);
        let boundary_flat = boundary_coeff_flat(drug, r_eq);
        let sqrt_coeff = 0.3 * d.powf(2.0 / 3.0) * nu.powf(-1.0 / 6.0) * (2.0 * delta_u).sqrt();
        let concave_transfer = combine(1.0, boundary_flat, drug.surface_coeff_flat);
        TransferContext {
            diffusivity: d,
            surface_coeff_flat: drug.surface_coeff_flat,
            enhancement_volume: drug.surface_enhancement_volume,
            two_transition: 2.0 * drug.surface_transition_length,
            boundary_flat,
            planarization_radius: planarization_radius(drug, r_eq),
            sqrt_coeff,
            concave: TransferEval {
                radius: f64::INFINITY,
                boundary_coeff: boundary_flat,
                surface_coeff: drug.surface_coeff_flat,
                curvature_factor: 1.0,
                transfer: concave_transfer,
                flat_branch: true,
            },
        }
    }

    /// Radius above which the flat branch fires, see
    /// [`planarization_radius`].
    pub fn planarization_radius(&self) -> f64 {
        self.planarization_radius
    }

    /// Evaluates the transfer coefficient at a finite local radius `r` > 0.
    /// Radii above the planarization radius take the flat branch.
    pub fn eval(&self, r: f64) -> TransferEval {
        if r > self.planarization_radius {
            let surface = self.surface_coeff_finite(r);
            TransferEval {
                radius: r,
                boundary_coeff: self.boundary_flat,
                surface_coeff: surface,
                curvature_factor: 1.0,
                transfer: combine(1.0, self.boundary_flat, surface),
                flat_branch: true,
            }
        } else {
            let boundary = self.diffusivity / r + self.sqrt_coeff / r.sqrt();
            let surface = self.surface_coeff_finite(r);
            let factor = 1.0 + self.diffusivity / (boundary * r);
            TransferEval {
                radius: r,
                boundary_coeff: boundary,
                surface_coeff: surface,
                curvature_factor: factor,
                transfer: combine(factor, boundary, surface),
                flat_branch: false,
            }
        }
    }

    /// Transfer coefficient of a concave or exactly flat surface element
    /// (curvature ≤ 0): flat boundary layer, no curvature factor, and the
    /// flat-interface surface coefficient.
    pub fn eval_concave(&self) -> TransferEval {
        self.concave
    }

    /// Evaluates from an interface curvature [1/m]. Non-positive curvature
    /// takes the concave branch; positive curvature uses the osculating
    /// radius `1/kappa` clamped to `[r_min, planarization_radius]`, so a
    /// convex element never jumps to the flat branch.
    pub fn eval_from_curvature(&self, kappa: f64, r_min: f64) -> TransferEval {
        if kappa <= 0.0 {
            self.concave
        } else {
            let r_hi = self.planarization_radius.max(r_min);
            self.eval((1.0 / kappa).clamp(r_min, r_hi))
        }
    }

    fn surface_coeff_finite(&self, r: f64) -> f64 {
        self.surface_coeff_flat
            * (self.enhancement_volume / (r * r * r) + r / (r + self.two_transition))
    }
}

/// Overall mass-transfer coefficient at local radius `r` on a particle of
/// equivalent radius `r_eq`. Convenience wrapper over [`TransferContext`];
/// hot paths should hold a context instead.
pub fn overall_transfer(drug: &DrugParams, r: f64, r_eq: f64) -> TransferEval {
    TransferContext::new(drug, r_eq).eval(r)
}

/// Closed-form solution of the bulk balance `dC_b/dt = k_rb (C_s(t) - C_b)`
/// with `C_b(t0) = cb0`: the bulk concentration at `t >= t0` while bulk
/// recrystallization controls the liquid [kg/m³].
pub fn supersaturation_decay(drug: &DrugParams, t0: f64, cb0: f64, t: f64) -> f64 {
    let k_rb = drug.recrystallization_rate;
    let k_r = drug.solubility_decay_rate;
    let span = drug.solubility_initial - drug.solubility_final;
    let relax = (-k_rb * (t - t0)).exp();
    let beta = k_rb / (k_rb - k_r);
    cb0 * relax
        + drug.solubility_final * (1.0 - relax)
        + beta * span * ((-k_r * t).exp() - (-k_r * t0).exp() * relax)
}
