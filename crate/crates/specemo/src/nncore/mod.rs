//! Minimal dense-tensor NN kernels: explicit forward and backward passes
//! for the VGG layer set, softmax cross-entropy, SGD-momentum and Adam,
//! finite-difference gradient checking, and the weight container.
//!
//! There is no autodiff tape. Each layer exposes `*_forward` and
//! `*_backward` pairs and the models compose them by hand, which keeps
//! every gradient individually testable against finite differences.
//!
//! Training runs in f32; gradient checks run the same code in f64.
//! Kernels parallelize over independent output slices only, and every
//! output element is accumulated in a fixed order, so results do not
//! depend on the worker count.

mod container;
mod gradcheck;
mod layers;
mod loss;
mod optim;
mod tensor;

pub use container::{Container, ContainerError, ContainerWriter};
pub use gradcheck::{grad_check, GradCheckReport, SignatureHasher};
pub use layers::{
    conv_backward, conv_forward, dense_backward, dense_forward, flatten, maxpool_backward,
    maxpool_forward, relu_backward, relu_forward, Padding,
};
pub use loss::{softmax_rows, softmax_xent};
pub use optim::{Optimizer, OptimKind, ParamGroup};
pub use tensor::{Scalar, Tensor};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("{op}: shape mismatch, {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("maxpool2x2 requires even spatial dims, got {h}x{w}")]
    OddSpatialDim { h: usize, w: usize },
    #[error("label {label} out of range for {k} classes")]
    LabelOutOfRange { label: usize, k: usize },
}

pub(crate) fn shape_err(op: &'static str, detail: String) -> NnError {
    NnError::ShapeMismatch { op, detail }
}
