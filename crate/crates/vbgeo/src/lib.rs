//! Numerical laboratory for weighted spherically symmetric metrics on
//! vector bundle manifolds.
//!
//! Given a base chart, a metric bundle connection and a pair of radial
//! weight functions, the crate assembles the total-space metric, evaluates
//! its Levi-Civita connection and curvature in closed form, integrates
//! geodesics, and computes the local holonomy algebra by bracket closure
//! of the curvature generators. Every closed form is backed by a
//! finite-difference oracle built directly from the assembled metric.

pub mod bundle;
pub mod chart;
pub mod check;
pub mod curvature;
pub mod geodesic;
pub mod hermitian;
pub mod holonomy;
pub mod numerics;
pub mod par;
pub mod scenario;
pub mod total;
pub mod weights;

pub use bundle::{curvature_operator, lambda2_bundle, tangent_bundle, trivial_bundle, BundleConnection, BundleSign, FourManifoldCurvatureOperator};
pub use chart::{model_chart, BaseChart, ChartKind};
pub use scenario::{Scenario, Scene};
pub use total::{FieldJet, MetricAtPoint, RadialFn, SplitVector, TotalPoint};
pub use weights::{ConnectionCoefficients, WeightProfile};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Evaluation outside a chart box, a weight domain or a fibre bound.
    #[error("domain error: {0}")]
    Domain(String),
    /// Rejected constructor or operation input.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// Malformed or inconsistent scenario description.
    #[error("scenario error: {0}")]
    Scenario(String),
    /// Numerical breakdown (NaN, rank decision failure, non-convergence).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
