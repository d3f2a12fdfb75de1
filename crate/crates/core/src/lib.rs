//! Multi-channel speech enhancement front-end.
//!
//! The crate covers the signal-processing chain used ahead of a speech
//! recogniser in overlapped, noisy and reverberant conditions:
//!
//! - [`stft`]: multichannel analysis/synthesis and log-power features
//! - [`spatial`]: inter-microphone phase differences, steering vectors and
//!   location-guided angle features
//! - [`masking`]: complex ratio mask separation, spectral-mapping
//!   dereverberation and oracle mask construction
//! - [`wpe`]: weighted prediction error dereverberation, both the iterative
//!   variant and the mask-driven single-pass variant
//! - [`simulate`]: image-source room impulse responses and mixture synthesis
//! - [`metrics`]: SI-SNR, SRMR and an oracle early-to-late ratio
//! - [`pipeline`]: manifest-driven orchestration used by the `mcse` CLI
//!
//! Neural mask estimators are not part of this crate. Masks come either from
//! ground truth ("oracle") or from binary mask files written by an external
//! estimator, see [`formats`].

pub mod error;
pub mod formats;
pub mod masking;
pub mod metrics;
pub mod pipeline;
pub mod simulate;
pub mod spatial;
pub mod stft;
pub mod wav;
pub mod wpe;

pub use error::{Error, Result};
pub use num_complex::Complex64;
