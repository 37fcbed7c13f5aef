//! Curvature, quadratic-functional residuals and a discrete gradient flow for
//! three-dimensional Riemannian metrics.

pub mod cli;
pub mod curvature;
pub mod expr;
pub mod flow;
pub mod functionals;
pub mod identities;
pub mod jets;
pub mod metric;
pub mod report;
pub mod tensor;
