//! Independent reference implementations used to validate the network and
//! the dynamics.

mod brute;
mod fock;
mod path_sum;

pub use brute::{brute_force_influence, BRUTE_FORCE_LIMIT};
pub use fock::{
    exact_few_mode_correlation, exact_few_mode_trajectory, FewModeModel, FewModeTrajectory,
    FOCK_DIM_LIMIT, LEAK_WARNING,
};
pub use path_sum::path_sum_dynamics;
