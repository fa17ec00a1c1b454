//! Dynamical oracles: the exact matrix flow in `Y` and the eigenvalue SDE,
//! plus checks against their closed-form laws.

mod checks;
mod dyson;
mod langevin;
mod paths;

pub use checks::{
    element_moment_check, hs_mean_s2_two_level, hs_two_level_mean, laguerre_log_density, stationary_check, Check, CheckReport,
};
pub use dyson::{default_base_step, dyson_evolve, DysonState, DEFAULT_STEP_FLOOR};
pub use langevin::{
    eb_mu_at_flow_y, evolved_profile, flow_y_of_eb, langevin_evolve, separable_profile, LangevinState, DEFAULT_V2,
};
pub use paths::{direct_ensemble, dyson_ensemble, langevin_ensemble, normalized_s23, Checkpoint, DysonRun, PathSpec};
