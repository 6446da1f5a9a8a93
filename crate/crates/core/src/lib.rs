//! Boundary-element forward solvers and sampling-method inversion for
//! corrosion imaging of partially buried two-dimensional objects.
//!
//! The object D sits partially underground: only the Neumann arc Γ_N is
//! accessible for current injection and voltage measurement, the buried arc
//! Γ_D is grounded, and corrosion has eaten the unknown part Ω of D whose
//! interface Γ_C carries a Robin condition with coefficient γ. The crate
//! simulates the healthy and corroded voltage traces on Γ_N, forms the
//! Galerkin gap matrix between the two Neumann-to-Dirichlet maps, and images
//! Ω with the regularized factorization and linear sampling methods.
//!
//! Module layout mirrors the pipeline: [`geometry`] describes the arcs and
//! panels, [`kernels`] the Laplace layer kernels and quadrature, [`bem`] the
//! block collocation systems, [`ntd`] the gap matrix and its spectrum,
//! [`imaging`] the sampling functionals and masks, [`diagnostics`] the
//! self-checks the command line exposes.

pub mod bem;
pub mod diagnostics;
pub mod geometry;
pub mod imaging;
pub mod kernels;
pub mod linalg;
pub mod ntd;
