//! Generalized sparse additive models: losses, univariate proximal
//! operators, proximal-gradient and block-coordinate solvers, paths and
//! cross-validation.

pub mod data;
pub mod error;
pub mod linalg;
pub mod losses;
pub mod model;
pub mod optimizer;
pub mod oracle;
pub mod path;
pub mod penalty;
pub mod prox;
pub mod qp;
pub mod roots;
pub mod sim;

pub use data::{Dataset, FeatureKnots};
pub use error::{GsamError, Result};
pub use losses::LossKind;
pub use model::{AdditiveModel, ComponentFit, Diagnostics, Interpolation};
pub use optimizer::{
    block_coordinate_fit, fit, lambda_max, lambda_max_exact, prox_gradient_fit, sparsity_pattern_probe, Algorithm, FitOptions,
    FitTrace, StepPolicy,
};
pub use path::{fit_path, kfold_cv, lambda_grid, CvRule, PathResult};
pub use penalty::{BasisFamily, Direction, PenaltySpec};
pub use prox::{prox_composite, prox_structure, ProxProblem};
