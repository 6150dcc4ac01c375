pub mod conic;
pub mod decomp;
pub mod hjb;
pub mod polynomial;
pub mod record;
pub mod refgrid;
pub mod soscert;

pub use conic::{ConeSolution, ConicProgram, SolveStatus, SolverOptions};
pub use decomp::{admm_solve, evaluate_stitched, make_grid_partition, DecompError, DecompOptions, DecomposedSolution, Partition};
pub use hjb::{check_noise_assumption, BoxRegion, ControlProblem, Facet, HjbError};
pub use polynomial::{parse, MultiIndex, PolyMatrix, Polynomial};
pub use record::SolutionRecord;
pub use refgrid::{solve_fd, GridSolution};
pub use soscert::{Direction, RegionSubproblem, SemialgebraicSet};
