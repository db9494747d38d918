//! Factorization-machine surrogates for approximate Ising models.
//!
//! The crate builds FMs whose pairwise couplings `⟨v_i, v_j⟩` reproduce a
//! given coupling matrix `J`, compares a low-rank eigendecomposition
//! initializer with two moment-matched random initializers, refines them by
//! training on sampled energies, and predicts the rank needed from the
//! random-matrix spectrum of `J`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fm;
pub mod harness;
pub mod init;
pub mod ising;
pub mod linalg;
pub mod rmt;
pub mod train;

pub use error::{Error, Result};
pub use fm::{FmGradient, FmParams, FmSign};
pub use harness::{
    run, write_report, Check, ExperimentConfig, Figure, FigureReport, Method, Preset, RunRecord,
    SweepRecord,
};
pub use init::{
    coupling_error, coupling_random_init, energy_random_init, low_rank_init, match_linear,
    truncation_error, CouplingStats, RandomInitSpec,
};
pub use ising::{build_dataset, energy, generate_sk, Dataset, IsingModel, SkParams, SpinConfig};
pub use linalg::{eigh, frobenius, EigenDecomposition, SymMatrix};
pub use rmt::{approx_cdf, predicted_rank, Branch, EnsembleParams, RankPrediction};
pub use train::{mse_loss, train, TrainConfig, TrainResult};
