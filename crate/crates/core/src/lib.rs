//! Numerical laboratory for multi-parameter Hausdorff operators.
//!
//! Evaluates the dilation average H_φ and its adjoint by adaptive
//! quadrature, computes the moment integrals that realize the sharp
//! operator norms on L^p(R^n) and on the product Hardy space
//! H^1(R×···×R), and drives the extremal-family sweeps and structural
//! identity checks (adjoint duality, Fourier commutation, Hilbert
//! transform commutation) that verify them numerically.

pub mod error;
pub mod field;
pub mod gridfn;
pub mod hausdorff;
pub mod kernel;
pub mod quad;

pub use error::{Error, Result};
pub use field::FieldFn;
pub use gridfn::{sample, tensor_product, GridFunction, GridSpec};
pub use hausdorff::{apply_adjoint, apply_hausdorff, QuadConfig};
pub use kernel::{
    make_named_kernel, moment, moment_uniform, reflect, truncate_inner, truncate_scaled, Kernel,
    KernelFactor, MomentReport,
};
