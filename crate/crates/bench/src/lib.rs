//! Shared fixtures for the kernel benchmarks: representative fields and
//! parameter sets sized like the single-particle reference runs.

use dissolve2d_core::geometry::{sdf_init, ShapeKind, ShapeSpec};
use dissolve2d_core::levelset::{Grid2D, LevelSetField};
use dissolve2d_core::physchem::DrugParams;

/// Signed-distance circle on the grid the reference runs use
/// (256 cells at 1 µm around a 50 µm radius).
pub fn reference_circle() -> LevelSetField {
    let grid = Grid2D::centered(256, 1e-6).expect("valid grid");
    let shape = ShapeSpec {
        kind: ShapeKind::Circle { radius: 50e-6 },
        center: (0.0, 0.0),
        rotation: 0.0,
    };
    sdf_init(&shape, grid, 0).expect("circle fits the grid")
}

/// The drug parameter set the reference runs use.
pub fn reference_drug() -> DrugParams {
    DrugParams::preset("theophylline-25").expect("built-in preset")
}
