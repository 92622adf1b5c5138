//! Shared helpers for unit tests across modules.

use crate::dataset::SparseDataset;

/// Adapter: reference dense data into the sparse container, fully stored.
pub(crate) fn random_dataset(m: usize, n: u32, seed: u64) -> SparseDataset {
    let d = mmfs_testkit::random_dense(m, n as usize, seed);
    let mut entries = Vec::new();
    for i in 0..m {
        for j in 0..n as usize {
            entries.push((i as u32, j as u32, d.get(i, j)));
        }
    }
    SparseDataset::from_entries(m, n, &entries, d.labels).unwrap()
}
