//! Regression toolkit for predicting the electrical efficiency of a
//! photovoltaic-thermal (PV/T) collector from its operating point.
//!
//! Four model families share one data pipeline:
//!
//! - [`lssvm`]: least-squares support vector regression with an RBF kernel,
//!   hyperparameters tuned by a genetic algorithm (or PSO).
//! - [`anfis`]: first-order Takagi–Sugeno neuro-fuzzy system, Gaussian
//!   premises tuned by particle swarm, consequents by least squares.
//! - [`ann::mlp`]: 5-7-1 sigmoid/linear perceptron trained by gradient
//!   descent or Levenberg–Marquardt.
//! - [`ann::rbf`]: Gaussian radial-basis network, exact interpolation or a
//!   reduced set of centers.
//!
//! [`evaluation`] holds the error metrics, leverage diagnostics, relevancy
//! factors and plot-data exporters.

pub mod anfis;
pub mod ann;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod lssvm;
pub mod numerics;

pub use error::{Error, ErrorKind, Result};
