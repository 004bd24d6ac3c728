//! Numerical building blocks shared by the engines.

pub mod ode;
pub mod quadrature;
pub mod richardson;
pub mod roots;
