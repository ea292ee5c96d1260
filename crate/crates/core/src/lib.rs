//! Whole-neuron pruning for small sigmoid multilayer perceptrons.
//!
//! The crate trains fully connected sigmoid networks from scratch, scores every
//! hidden neuron by how much the total squared error changes when that neuron is
//! switched off, and removes neurons one at a time while recording how the
//! network degrades.
//!
//! Three saliency criteria are available:
//!
//! - **brute force**: switch each neuron off in turn and measure the error change
//!   with a forward pass (the ground truth);
//! - **first-order Taylor**: `ΔE ≈ -O·∂E/∂O`;
//! - **second-order Taylor**: `ΔE ≈ -O·∂E/∂O + ½·O²·∂²E/∂O²`, with the curvature
//!   term supplied by a diagonal second-order backward pass ([`grad2`]).
//!
//! Two removal policies drive them: a single ranking computed once up front
//! ([`pruning::single_overall_ranking`]) and greedy re-ranking after every
//! removal ([`pruning::iterative_reranking`]).
//!
//! # Conventions
//!
//! Layers are indexed from the output backwards: layer `0` is the output layer,
//! layer `1` the hidden layer feeding it, and so on. Weights of layer `m` are
//! stored row-major as `weights[j * size + i]`, the connection from source `j`
//! (a neuron of layer `m + 1`, or an input feature) to neuron `i` of layer `m`.
//!
//! Pruning never deletes parameters. A neuron is removed by setting its output
//! gain to zero; [`Network::compact`] produces a physically smaller copy.
//!
//! Total error is `E = ½ Σ_samples Σ_i (O_i - t_i)²`, summed rather than averaged.
//!
//! ```
//! use neuroprune::{data, train::{train, TrainConfig}};
//!
//! # fn main() -> neuroprune::Result<()> {
//! let ds = data::gen_cosine(200, 3)?;
//! let cfg = TrainConfig { epochs: 5, ..TrainConfig::preset("cosine-2x10")? };
//! let (net, report) = train(&cfg, &ds)?;
//! assert_eq!(report.loss_curve.len(), 5);
//! assert_eq!(net.hidden_neuron_count(), 20);
//! # Ok(())
//! # }
//! ```

pub mod analysis;
pub mod cli;
pub mod config;
pub mod data;
mod error;
pub mod grad2;
pub mod matrix;
pub mod model_io;
pub mod net;
pub mod pruning;
pub mod train;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use net::{EvalResult, ForwardTape, LayerParams, Network, NeuronId};
