//! Matrix generation, tile-parallel kernels, the inter-buffer and the
//! analysis pipeline behind ANALYZE.

pub mod buffer;
pub mod kernels;
pub mod matrix;
pub mod pipeline;

pub use buffer::{fingerprint, InterBuffer};
pub use kernels::{
    cosine_similarity, logistic_regression, multiply, regression_gradient, KernelConfig, RegressionModel,
    RegressionParams,
};
pub use matrix::{gather_matrix, rel2matrix, result_matrix, Matrix};
pub use pipeline::{plan_pipeline, run_analyze, run_pipeline, AnalysisOutput, AnalysisTask, PipelinePlan, TaskInput};
