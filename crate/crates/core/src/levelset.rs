//! Cartesian grid, level-set field, first-order upwind transport under a
//! normal speed, and interface-curvature stencils.
//!
//! Convention: the field is negative inside the particle, positive outside,
//! and approximately a signed distance (|∇φ| ≈ 1). A negative normal speed
//! shrinks the inside region.

use crate::error::{Result, SimError};

/// Relative slack on the advection stability bound `dt · max|v| <= dx`.
const CFL_SLACK: f64 = 1e-9;

/// Gradient magnitude below which curvature and normals are degenerate.
/// Gradients of a distance function are dimensionless (≈ 1 near the front).
pub const EPS_GRAD: f64 = 1e-6;

/// Largest second difference, relative to |∇φ|/dx, that a curvature stencil
/// may contain and still count as resolved. Second differences of order the
/// gradient itself mark a sub-grid crease (the kink left behind where an
/// interior level set has collapsed, or a distance-function medial axis);
/// there the centered formula returns spurious O(1/dx) curvatures. Such
/// nodes are flagged invalid exactly like degenerate-gradient nodes, so
/// consumers fall back to the nearest resolved neighbor. The value 0.5
/// accepts every curvature radius down to about two cells.
pub const KINK_JUMP_RATIO: f64 = 0.5;

/// Minimum supported cells per side.
pub const MIN_CELLS: usize = 8;

/// The interface must keep at least this many cells of clearance from the
/// grid edge so the one-sided stencils never straddle it.
pub const PAD_CELLS: usize = 3;

/// Uniform square grid: `cells × cells` cells, `(cells+1)²` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    cells: usize,
    dx: f64,
    origin: (f64, f64),
}

impl Grid2D {
    /// Builds a grid. `origin` is the position of node (0, 0) [m].
    pub fn new(cells: usize, dx: f64, origin: (f64, f64)) -> Result<Grid2D> {
        if cells < MIN_CELLS {
            return Err(SimError::GridTooSmall {
                min: MIN_CELLS,
                got: cells,
            });
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(SimError::InvalidParam {
                name: "dx",
                reason: "must be a positive finite number",
                value: dx,
            });
        }
        Ok(Grid2D { cells, dx, origin })
    }

    /// Builds a grid whose domain is centered on the coordinate origin.
    pub fn centered(cells: usize, dx: f64) -> Result<Grid2D> {
        let half = 0.5 * cells as f64 * dx;
        Grid2D::new(cells, dx, (-half, -half))
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn nodes_per_side(&self) -> usize {
        self.cells + 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_side() * self.nodes_per_side()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    pub fn side_length(&self) -> f64 {
        self.cells as f64 * self.dx
    }

    #[inline]
    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.cells + 1) + i
    }

    pub fn node_pos(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.origin.0 + i as f64 * self.dx,
            self.origin.1 + j as f64 * self.dx,
        )
    }
}

/// Level-set field sampled on grid nodes.
#[derive(Debug, Clone)]
pub struct LevelSetField {
    grid: Grid2D,
    values: Vec<f64>,
}

impl LevelSetField {
    pub fn new(grid: Grid2D) -> LevelSetField {
        LevelSetField {
            grid,
            values: vec![0.0; grid.node_count()],
        }
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.node_index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let idx = self.grid.node_index(i, j);
        self.values[idx] = v;
    }

    /// Fills every node from a coordinate function.
    pub fn fill_with(&mut self, f: impl Fn(f64, f64) -> f64) {
        let n1 = self.grid.nodes_per_side();
        for j in 0..n1 {
            for i in 0..n1 {
                let (x, y) = self.grid.node_pos(i, j);
                self.values[j * n1 + i] = f(x, y);
            }
        }
    }

    /// Verifies the interface keeps [`PAD_CELLS`] cells of clearance from
    /// the grid edge. `particle` only labels the error.
    pub fn check_padding(&self, particle: usize) -> Result<()> {
        let n = self.grid.cells;
        let n1 = n + 1;
        let mut worst: Option<usize> = None;
        for j in 0..n1 {
            for i in 0..n1 {
                let ring = i.min(j).min(n - i).min(n - j);
                if ring >= PAD_CELLS {
                    continue;
                }
                if self.values[j * n1 + i] <= 0.0 {
                    worst = Some(worst.map_or(ring, |w: usize| w.min(ring)));
                }
            }
        }
        match worst {
            Some(got) => Err(SimError::PaddingViolation {
                particle,
                got,
                required: PAD_CELLS,
            }),
            None => Ok(()),
        }
    }
}

/// Normal-direction interface speed sampled on grid nodes [m/s].
#[derive(Debug, Clone)]
pub struct SpeedField {
    pub values: Vec<f64>,
    /// Largest |v| over all nodes, maintained by the producer.
    pub max_abs: f64,
}

impl SpeedField {
    pub fn new_zero(node_count: usize) -> SpeedField {
        SpeedField {
            values: vec![0.0; node_count],
            max_abs: 0.0,
        }
    }

    pub fn recompute_max(&mut self) {
        self.max_abs = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    }
}

/// Largest stable time step for the upwind scheme: `cfl · dx / max|v|`,
/// capped at `dt_max`. `cfl` must lie in (0, 1].
pub fn cfl_dt(dx: f64, max_speed: f64, cfl: f64, dt_max: f64) -> f64 {
    assert!(cfl > 0.0 && cfl <= 1.0, "cfl out of (0, 1]: {cfl}");
    if max_speed * dt_max <= cfl * dx {
        dt_max
    } else {
        cfl * dx / max_speed
    }
}

/// Advances the field by one upwind step of `∂φ/∂t + v|∇φ| = 0`.
///
/// Uses the one-sided difference selected by the local speed sign; nodes on
/// the grid edge substitute the only available one-sided difference.
/// `scratch` must have the same length as the field and is overwritten.
pub fn upwind_step(
    field: &mut LevelSetField,
    speed: &SpeedField,
    dt: f64,
    scratch: &mut Vec<f64>,
) -> Result<()> {
    let grid = field.grid;
    let n = grid.cells;
    let n1 = n + 1;
    let dx = grid.dx;
    if dt * speed.max_abs > dx * (1.0 + CFL_SLACK) {
        return Err(SimError::CflViolation {
            dt,
            max_dt: dx / speed.max_abs,
            max_speed: speed.max_abs,
        });
    }
    scratch.clear();
    scratch.resize(field.values.len(), 0.0);
    let inv_dx = 1.0 / dx;
    let phi = &field.values;
    let v = &speed.values;

    for j in 0..n1 {
        let row = j * n1;
        for i in 0..n1 {
            let idx = row + i;
            let c = phi[idx];
            let s = v[idx];
            if s == 0.0 {
                scratch[idx] = c;
                continue;
            }
            let (dxm, dxp) = if i == 0 {
                let d = (phi[idx + 1] - c) * inv_dx;
                (d, d)
            } else if i == n {
                let d = (c - phi[idx - 1]) * inv_dx;
                (d, d)
            } else {
                ((c - phi[idx - 1]) * inv_dx, (phi[idx + 1] - c) * inv_dx)
            };
            let (dym, dyp) = if j == 0 {
                let d = (phi[idx + n1] - c) * inv_dx;
                (d, d)
            } else if j == n {
                let d = (c - phi[idx - n1]) * inv_dx;
                (d, d)
            } else {
                ((c - phi[idx - n1]) * inv_dx, (phi[idx + n1] - c) * inv_dx)
            };
            let grad = if s > 0.0 {
                let a = dxm.max(0.0);
                let b = dxp.min(0.0);
                let c2 = dym.max(0.0);
                let d2 = dyp.min(0.0);
                (a * a + b * b + c2 * c2 + d2 * d2).sqrt()
            } else {
                let a = dxp.max(0.0);
                let b = dxm.min(0.0);
                let c2 = dyp.max(0.0);
                let d2 = dym.min(0.0);
                (a * a + b * b + c2 * c2 + d2 * d2).sqrt()
            };
            scratch[idx] = c - dt * s * grad;
        }
    }
    std::mem::swap(&mut field.values, scratch);
    Ok(())
}

/// Interface curvature at grid nodes [1/m], with a validity mask.
///
/// Nodes whose gradient is degenerate (|∇φ| < [`EPS_GRAD`], e.g. shape
/// centers and skeleton points) are flagged invalid; consumers substitute a
/// neighboring valid value.
#[derive(Debug, Clone, Default)]
pub struct CurvatureField {
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

/// Fills `out` with the divergence-of-normal curvature from centered
/// second-order stencils. Positive curvature means the surface bulges
/// outward (a circle has curvature `1/r`). The outermost node ring copies
/// its nearest interior neighbor.
pub fn curvature_field(field: &LevelSetField, out: &mut CurvatureField) {
    let grid = field.grid;
    let n = grid.cells;
    let n1 = n + 1;
    let dx = grid.dx;
    out.values.clear();
    out.values.resize(field.values.len(), 0.0);
    out.valid.clear();
    out.valid.resize(field.values.len(), false);
    let phi = &field.values;
    let inv_2dx = 1.0 / (2.0 * dx);
    let inv_dx2 = 1.0 / (dx * dx);
    let eps2 = EPS_GRAD * EPS_GRAD;

    for j in 1..n {
        let row = j * n1;
        for i in 1..n {
            let idx = row + i;
            let c = phi[idx];
            let e = phi[idx + 1];
            let w = phi[idx - 1];
            let nn = phi[idx + n1];
            let ss = phi[idx - n1];
            let px = (e - w) * inv_2dx;
            let py = (nn - ss) * inv_2dx;
            let grad2 = px * px + py * py;
            if grad2 < eps2 {
                continue;
            }
            let pxx = (e - 2.0 * c + w) * inv_dx2;
            let pyy = (nn - 2.0 * c + ss) * inv_dx2;
            let pxy = (phi[idx + n1 + 1] - phi[idx + n1 - 1] - phi[idx - n1 + 1]
                + phi[idx - n1 - 1])
                * 0.25
                * inv_dx2;
            let grad = grad2.sqrt();
            // Unresolved crease in the stencil: curvature would be spurious.
            let jump_lim = KINK_JUMP_RATIO * grad / dx;
            if pxx.abs() > jump_lim || pyy.abs() > jump_lim || pxy.abs() > jump_lim {
                continue;
            }
            let kappa = (pxx * py * py - 2.0 * px * py * pxy + pyy * px * px) / (grad2 * grad);
            out.values[idx] = kappa;
            out.valid[idx] = true;
        }
    }
    // Edge ring inherits the adjacent interior node.
    for j in 0..n1 {
        for i in 0..n1 {
            if i > 0 && i < n && j > 0 && j < n {
                continue;
            }
            let src = grid.node_index(i.clamp(1, n - 1), j.clamp(1, n - 1));
            let dst = grid.node_index(i, j);
            out.values[dst] = out.values[src];
            out.valid[dst] = out.valid[src];
        }
    }
}

/// Curvature at a node, substituting the nearest valid neighbor when the
/// node itself is degenerate. Scans square rings of growing radius (up to
/// 8) in a fixed order, so the substitution is deterministic. Returns
/// `None` when no valid node exists nearby (deep plateau regions).
pub fn curvature_or_neighbor(
    curv: &CurvatureField,
    grid: Grid2D,
    i: usize,
    j: usize,
) -> Option<f64> {
    let idx = grid.node_index(i, j);
    if curv.valid[idx] {
        return Some(curv.values[idx]);
    }
    let n = grid.cells() as isize;
    let (ci, cj) = (i as isize, j as isize);
    for radius in 1..=8isize {
        for dj in -radius..=radius {
            for di in -radius..=radius {
                if di.abs().max(dj.abs()) != radius {
                    continue;
                }
                let (pi, pj) = (ci + di, cj + dj);
                if pi < 0 || pj < 0 || pi > n || pj > n {
                    continue;
                }
                let pidx = grid.node_index(pi as usize, pj as usize);
                if curv.valid[pidx] {
                    return Some(curv.values[pidx]);
                }
            }
        }
    }
    None
}

/// Outward unit normal at a node (∇φ/|∇φ|), or `None` on degenerate
/// gradients. Edge nodes use the available one-sided difference.
/// Curvature at the foot of the normal dropped from node `(i, j)` onto the
/// interface. A node drives the interface point its normal ray hits, so
/// speed laws want the curvature there (where φ ≈ 0), not the curvature of
/// the node's own level set; the difference is an O(Δx) speed bias on
/// curved fronts. The sample is a validity-weighted bilinear interpolation
/// of `curv` at `x − φ·n̂`, clamped to the grid. Returns None when the
/// gradient is degenerate or the surrounding curvature nodes are invalid.
pub fn foot_point_curvature(
    field: &LevelSetField,
    curv: &CurvatureField,
    i: usize,
    j: usize,
) -> Option<f64> {
    let grid = field.grid;
    let (nx, ny) = normal_at(field, i, j)?;
    let phi = field.get(i, j);
    let (x, y) = grid.node_pos(i, j);
    let n = grid.cells;
    let span = n as f64;
    let sx = ((x - phi * nx - grid.origin.0) / grid.dx).clamp(0.0, span);
    let sy = ((y - phi * ny - grid.origin.1) / grid.dx).clamp(0.0, span);
    let i0 = (sx.floor() as usize).min(n - 1);
    let j0 = (sy.floor() as usize).min(n - 1);
    let u = sx - i0 as f64;
    let v = sy - j0 as f64;
    let mut acc = 0.0;
    let mut wsum = 0.0;
    for (di, dj, w) in [
        (0, 0, (1.0 - u) * (1.0 - v)),
        (1, 0, u * (1.0 - v)),
        (0, 1, (1.0 - u) * v),
        (1, 1, u * v),
    ] {
        let idx = grid.node_index(i0 + di, j0 + dj);
        if curv.valid[idx] {
            acc += w * curv.values[idx];
            wsum += w;
        }
    }
    // A sliver of valid weight would let an off-corner dominate; fall back
    // to the caller's node-local path instead.
    if wsum > 0.1 {
        Some(acc / wsum)
    } else {
        None
    }
}

pub fn normal_at(field: &LevelSetField, i: usize, j: usize) -> Option<(f64, f64)> {
    let grid = field.grid;
    let n = grid.cells;
    let dx = grid.dx;
    let diff = |a: f64, b: f64, h: f64| (a - b) / h;
    let px = if i == 0 {
        diff(field.get(1, j), field.get(0, j), dx)
    } else if i == n {
        diff(field.get(n, j), field.get(n - 1, j), dx)
    } else {
        diff(field.get(i + 1, j), field.get(i - 1, j), 2.0 * dx)
    };
    let py = if j == 0 {
        diff(field.get(i, 1), field.get(i, 0), dx)
    } else if j == n {
        diff(field.get(i, n), field.get(i, n - 1), dx)
    } else {
        diff(field.get(i, j + 1), field.get(i, j - 1), 2.0 * dx)
    };
    let norm = (px * px + py * py).sqrt();
    if norm < EPS_GRAD {
        None
    } else {
        Some((px / norm, py / norm))
    }
}

/// Optional redistancing hook: relaxes the field toward |∇φ| = 1 while
/// pinning the zero level set, by pseudo-time iterations of the standard
/// sign-function reinitialization equation with a Godunov Hamiltonian.
///
/// The dissolution stepper keeps fields close to signed distance on its
/// own (speeds vary smoothly along the front), so this is not called in
/// the main loop; it is available for long-running or pathological setups.
pub fn reinitialize(field: &mut LevelSetField, sweeps: usize, scratch: &mut Vec<f64>) {
    let grid = field.grid;
    let n = grid.cells;
    let n1 = n + 1;
    let dx = grid.dx;
    let dtau = 0.45 * dx;
    let inv_dx = 1.0 / dx;
    let initial = field.values.clone();

    for _ in 0..sweeps {
        scratch.clear();
        scratch.resize(field.values.len(), 0.0);
        for j in 0..n1 {
            for i in 0..n1 {
                let idx = j * n1 + i;
                let c = field.values[idx];
                let phi0 = initial[idx];
                let sign = phi0 / (phi0 * phi0 + dx * dx).sqrt();
                let (dxm, dxp) = if i == 0 {
                    let d = (field.values[idx + 1] - c) * inv_dx;
                    (d, d)
                } else if i == n {
                    let d = (c - field.values[idx - 1]) * inv_dx;
                    (d, d)
                } else {
                    (
                        (c - field.values[idx - 1]) * inv_dx,
                        (field.values[idx + 1] - c) * inv_dx,
                    )
                };
                let (dym, dyp) = if j == 0 {
                    let d = (field.values[idx + n1] - c) * inv_dx;
                    (d, d)
                } else if j == n {
                    let d = (c - field.values[idx - n1]) * inv_dx;
                    (d, d)
                } else {
                    (
                        (c - field.values[idx - n1]) * inv_dx,
                        (field.values[idx + n1] - c) * inv_dx,
                    )
                };
                let grad = if sign > 0.0 {
                    let a = dxm.max(0.0).max(-dxp.min(0.0));
                    let b = dym.max(0.0).max(-dyp.min(0.0));
                    (a * a + b * b).sqrt()
                } else {
                    let a = dxp.max(0.0).max(-dxm.min(0.0));
                    let b = dyp.max(0.0).max(-dym.min(0.0));
                    (a * a + b * b).sqrt()
                };
                scratch[idx] = c - dtau * sign * (grad - 1.0);
            }
        }
        std::mem::swap(&mut field.values, scratch);
    }
}
