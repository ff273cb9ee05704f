//! Graph encoder producing 3D node embeddings.
//!
//! Two mean-aggregation graph convolutions with ReLU, a linear head and a
//! linear residual shortcut from the raw input:
//!
//! ```text
//! h1  = relu(W1s x + W1n mean(x_nbr) + b1)          40 -> 20
//! h2  = relu(W2s h1 + W2n mean(h1_nbr) + b2)        20 -> 20
//! out = Wh h2 + bh + Wr x + br                      20 -> 3, 40 -> 3
//! ```
//!
//! Training reconstructs the undirected adjacency from `sigmoid(x_i . x_j)`
//! with binary cross-entropy on logits. All maths is `f64` and the backward
//! pass is written out by hand; [`gradient_check`] compares it against
//! central differences.

mod gradcheck;
mod input;
mod loss;
mod model;
mod train;

pub use gradcheck::gradient_check;
pub use input::GraphInput;
pub use loss::{bce_with_logits, edge_score, reconstruction_loss, sigmoid, PairTargets};
pub use model::{EncoderModel, Linear, ModelFile, SageLayer, HIDDEN_DIM, INPUT_DIM, OUTPUT_DIM};
pub use train::{
    embed_graph, holdout_scores, roc_auc, split_edges, train, HeldOut, TrainConfig, TrainReport,
    TrainSample,
};
