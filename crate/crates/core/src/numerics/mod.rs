pub mod quadrature;
pub mod spline;

pub use quadrature::{gauss_legendre, gauss_legendre_on, integrate, Quadrature};
pub use spline::{Boundary, CubicSpline};
