//! Federated differentially-private synthetic data generation.
//!
//! Clients hold disjoint shards of a labeled dataset. Each client averages
//! `l` randomly chosen same-class samples per synthetic record and perturbs
//! the mix with Gaussian noise before sending it to an aggregating server.
//! In CAPE mode the per-client noise carries a jointly dealt zero-sum
//! component that cancels at the server, so the released dataset keeps
//! centralized-level noise while every client's own transmission stays as
//! noisy as the conventional federated scheme requires.
//!
//! The crate is organized around that pipeline:
//!
//! - [`data`]: dataset types, IDX/CSV/binary formats, blob generator
//! - [`preprocess`]: per-client z-score normalization and l2 clipping
//! - [`accountant`]: Renyi-DP accounting and noise calibration
//! - [`noise`]: keyed deterministic streams and the zero-sum dealer
//! - [`synthesis`]: per-client class-wise mixing
//! - [`federation`]: mode wiring, aggregation, the end-to-end pipeline
//! - [`eval`]: softmax probe, utility ratios, parameter sweeps
//!
//! Everything downstream of a master seed is bit-reproducible, independent
//! of thread count.

pub mod accountant;
pub mod data;
pub mod error;
pub mod eval;
pub mod federation;
pub mod noise;
pub mod preprocess;
pub mod synthesis;

pub use accountant::{AccountingReport, NoiseScales, PrivacyParams};
pub use data::{Dataset, SyntheticDataset, SyntheticRecord};
pub use error::{Error, Result};
pub use federation::{Mode, RunConfig};
