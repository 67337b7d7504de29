//! Newtonian three-body integration, eclipse detection and special
//! initial conditions.

pub mod events;
pub mod integrator;
pub mod nbody;
pub mod special;
mod tableau;

pub use events::{detect_eclipses, find_root, EventConfig};
pub use integrator::{DenseSegment, StepControl, StepStats};
pub use nbody::{acceleration, integrate, integrate_from, IntegratorConfig, Precision, Termination, Trajectory};
pub use twofloat::TwoFloat;

pub use special::{lagrange_circular_ic, lagrange_circular_state, lagrange_homothety_ic};
