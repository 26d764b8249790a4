//! Forward scattering: MSR matrices from series and boundary integrals.

mod msr;
mod noise;
mod nystrom;
mod series;

pub use msr::{format_complex, parse_complex, FarFieldMatrix};
pub use noise::add_noise;
pub use nystrom::{
    solve_nystrom_dirichlet, solve_nystrom_neumann, DensitySolve, NystromSolver, PlaneWave,
    NEUMANN_CONDITION_WARNING,
};
pub use series::{disk_modal_coefficients, min_truncation, solve_disk_series, DISK_FAR_FIELD_SCALE};
