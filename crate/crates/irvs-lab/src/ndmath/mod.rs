//! Dense math for small MLPs: forward evaluation, exact reverse-mode
//! gradients with respect to parameters and inputs, spectral
//! normalization by power iteration, and text checkpoints.

mod checkpoint;
mod matrix;
mod mlp;
mod spectral;

pub use checkpoint::{format_f64, load_mlp, parse_mlp, save_mlp};
pub use matrix::{dot, norm2, Matrix};
pub use mlp::{Activation, GradPair, Layer, MlpGrads, MlpParams};
pub use spectral::spectral_normalize;
