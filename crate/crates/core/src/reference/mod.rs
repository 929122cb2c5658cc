//! Independent solutions of the conservation law: exact Riemann solutions for
//! concave fluxes and a first-order Godunov scheme.

mod godunov;
mod riemann;

pub use godunov::{evolve, godunov, godunov_flux, max_characteristic_speed, GodunovGrid, GodunovRun};
pub use riemann::{riemann_eval, riemann_solve, ExactSolution, RiemannSolution, Wave, CONCAVITY_SAMPLES};
