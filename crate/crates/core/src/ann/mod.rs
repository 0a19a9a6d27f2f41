//! Neural models: sigmoid perceptron and Gaussian RBF network.

pub mod mlp;
pub mod rbf;

pub use mlp::{sigmoid, MlpModel, MlpTrainOutcome};
pub use rbf::{rbf_activation, RbfModel, RbfTrainOutcome};
