//! Inner-problem solvers and optimality verifiers.

pub mod phi;
pub mod qp;
pub mod quantile_ode;
pub mod verify;

pub use phi::{phi_eval, PhiProfile};
pub use qp::{solve_slopes, QpOptions, QpSolution};
pub use quantile_ode::{retention_from_psi, solve_quantile_ode, solve_single_obstacle_concave, NodeLabel, OdeOptions, PsiSolution};
pub use verify::{verify_condition_i, verify_oide, verify_optimality, Certifier, OptimalityReport};
