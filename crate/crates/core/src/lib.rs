//! Proxy data selection, proxy networks and budget-accounted
//! hyper-parameter search for 3D medical image segmentation.

pub mod analysis;
pub mod error;
pub mod hpo;
pub mod io;
pub mod measures;
pub mod preprocess;
pub mod proxynet;
pub mod seed;
pub mod synth;
pub mod trainer;
pub mod volume;

pub use error::{Error, ErrorCategory, Result};
pub use hpo::{BudgetLedger, SearchMode, SearchReport, SearchSpace, TrialTemplate};
pub use io::DatasetManifest;
pub use measures::{MeasureConfig, MeasureKind, PairwiseMatrix, RoiMode};
pub use proxynet::UNetSpec;
pub use trainer::{Evaluator, HyperParams, Optimizer, TrialResult, TrialSpec};
pub use volume::{LabelMask, Shape, Volume3D};
