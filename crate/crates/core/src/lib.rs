//! Deterministic augmentation scenarios for dermoscopy images and the
//! evaluation protocol that goes with them: test-time augmentation,
//! 144-crop averaging, ROC-AUC, early stopping and training-set subsets.
//!
//! Every random decision is drawn from an [`RngStream`] derived from
//! `(seed, sample id, copy index, stage index)`, so outputs do not depend
//! on thread count or evaluation order.

pub mod elastic;
pub mod erasing;
mod error;
pub mod geometric;
pub mod imgcore;
pub mod lesionmix;
pub mod par;
pub mod photometric;
pub mod pipeline;
pub mod tta_eval;

pub use error::{Error, Result};
pub use imgcore::{
    derive_stream, ImageBuffer, Mask, Manifest, NormalizedTensor, Record, RngStream, Sample,
    Split,
};
pub use pipeline::{build_scenario, ScenarioId, TransformChain};
