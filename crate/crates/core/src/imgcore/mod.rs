//! Image representation, preprocessing, dataset manifests and the
//! deterministic random streams every transform draws from.

mod image;
mod manifest;
mod rng;

pub use self::image::{
    normalize, resize_max_side, resize_to, Edge, ImageBuffer, Mask, Normalization,
    NormalizedTensor, Sample,
};
pub use self::manifest::{load_manifest, Manifest, Record, Split};
pub use self::rng::{derive_stream, stream_id, RngStream};

/// Round half to even and clamp into the 8-bit range.
#[inline]
pub(crate) fn to_u8(v: f64) -> u8 {
    v.round_ties_even().clamp(0.0, 255.0) as u8
}
