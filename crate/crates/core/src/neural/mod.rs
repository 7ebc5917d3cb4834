//! Fully connected Q-network: ReLU hidden layers, linear output, exact
//! backpropagation and plain SGD updates.

mod io;
mod mlp;

pub use io::{load, save};
pub use mlp::{loss_sym, loss_td, GradientBuffer, Layer, Mlp, ParamSnapshot, SelectedLoss};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("a network needs at least two layer sizes, got {0}")]
    TooFewLayers(usize),
    #[error("layer {0} has zero width")]
    ZeroWidth(usize),
    #[error("input has length {got}, expected {expected}")]
    InputSize { got: usize, expected: usize },
    #[error("output index {index} out of range for {outputs} outputs")]
    OutputIndex { index: usize, outputs: usize },
    #[error("batch has {inputs} inputs but {labels} labels")]
    BatchShape { inputs: usize, labels: usize },
    #[error("parameter shapes do not match the network")]
    ShapeMismatch,
    #[error("non-finite gradient entry")]
    NonFiniteGradient,
    #[error("invalid parameter file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
