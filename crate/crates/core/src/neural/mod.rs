//! Neural signed distance fields: a Fourier-feature MLP `f(p) -> d` with an
//! exact input gradient, trained from labelled samples with an L1 loss.

mod gemm;
mod io;
mod model;
mod train;

pub use io::{load_model, read_model, save_model, write_model, MODEL_MAGIC, MODEL_VERSION};
pub use model::{fourier_features, NeuralSdf};
pub use train::{train, EpochStats, TrainConfig, TrainHistory};
