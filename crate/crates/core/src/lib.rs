//! Line-of-sight coverage probabilities for millimeter-wave access point
//! deployments.
//!
//! * [`blockage`]: height-aware blocking probability and the scaled rate `β'`.
//! * [`irregular`]: LOS association probability for PPP-deployed APs.
//! * [`regular`]: three-AP hexagonal triangle, per-point and worst-case LOS.
//! * [`joint`]: low-rise plus high-rise tiers and the high-rise count search.
//! * [`oracle`]: seeded Monte Carlo estimators used to check all of the above.

pub mod blockage;
pub mod error;
pub mod irregular;
pub mod joint;
pub mod model;
pub mod oracle;
pub mod quadrature;
pub mod regular;

pub use error::{Error, Result};
pub use model::{
    BlockageParams, HeightProfile, IrregularDeployment, LambdaConvention, McEstimate,
    PathLossParams,
};
