//! Finite-state spectral laboratory for DA and sandwich kernels.

pub mod group;
pub mod io;
pub mod kernel;
pub mod report;
pub mod spectrum;
pub mod table;

pub use group::{build_group_r, check_shared_conditional, verify_orbit_projection, GroupAction, OrbitProjectionReport};
pub use io::{load_lab, parse_lab, LabInput};
pub use kernel::{build_da_kernel, build_sandwich_kernel, Kernel};
pub use report::{domination_report, SpectralReport};
pub use spectrum::{chi_square_distance, eigenvalues_mean_zero, svd_ratio, verify_svd_identities, SvdIdentityReport, Spectrum, SvdBasis};
pub use table::JointTable;
