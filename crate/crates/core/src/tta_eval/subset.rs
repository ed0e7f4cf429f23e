use crate::{derive_stream, Error, Manifest, Result};

/// Training-set sizes studied for the limited-data experiments.
pub const REFERENCE_SUBSET_SIZES: [usize; 5] = [1500, 1000, 500, 250, 125];

/// Uniform sample of `size` records without replacement, kept in manifest
/// order.
pub fn sample_subset(manifest: &Manifest, size: usize, seed: u64) -> Result<Manifest> {
    if size < 1 || size > manifest.len() {
        return Err(Error::InvalidParameter(format!(
            "subset size must lie in [1, {}], got {size}",
            manifest.len()
        )));
    }
    let mut rng = derive_stream(seed, "subset", size as u64, 0);
    let mut picked = rand::seq::index::sample(&mut rng, manifest.len(), size).into_vec();
    picked.sort_unstable();
    Ok(Manifest {
        split: manifest.split,
        records: picked.into_iter().map(|i| manifest.records[i].clone()).collect(),
        base_dir: manifest.base_dir.clone(),
    })
}
