//! Small numerical kernels shared by the physics modules: adaptive
//! Gauss-Kronrod quadrature, bracketing root finding and a stiff Rosenbrock
//! integrator.

pub mod quad;
pub mod roots;
pub mod rosenbrock;

pub use quad::{integrate, QuadResult, QuadTol};
pub use roots::{bisect, golden_min};
pub use rosenbrock::{Rosenbrock, StepControl, StepInfo, StiffSystem};
