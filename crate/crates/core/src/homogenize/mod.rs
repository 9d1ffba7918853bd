//! Numerical cell problems and explicit recovery configurations.

mod cell;
mod recovery;

pub use cell::{
    cell_problem_min, window_grid, AnnealSchedule, CellProblemResult, CellProblemSpec, Optimizer,
    EXHAUSTIVE_LIMIT,
};
pub use recovery::{audit_faces, cell_label, checkerboard_recovery, recovery_3d, CellSource, Recovery3d};
