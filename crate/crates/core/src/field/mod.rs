//! Grids, complex fields, differential operators, quadrature and the polar
//! decomposition ψ = R·exp(iS/ħ).

pub mod dump;
mod grid;
mod ops;
mod polar;
pub mod radial;
pub mod spectral;
mod system;
mod values;

pub use grid::{Axis, Boundary, SpatialGrid};
pub use ops::{
    gradient, gradient_real, inner_product, integrate_real, laplacian, laplacian_real, masked_stencil_gradient, norm,
    quadrature_weights, AxisGroup,
};
pub(crate) use ops::{spectral_laplacian, stencil_laplacian};
pub use polar::{default_node_threshold, polar_decompose, PolarForm, DEFAULT_NODE_REL};
pub(crate) use polar::mask_fraction;
pub use radial::RadialGrid;
pub use system::{ParticleSystem, Potential};
pub use values::{ComplexField, RealField};
