//! Size limits guarding dense code paths.
//!
//! Sparse storage and the coordinate-descent solver scale with the number of
//! stored values, so they take no limit. Anything that materializes a dense
//! object (centering, Gram matrices, leave-one-out evaluation) is gated here.

/// Maximum number of stored values a densifying operation may produce.
pub const DEFAULT_DENSE_LIMIT: usize = 50_000_000;

/// Maximum order for a dense Gram matrix.
pub const DEFAULT_GRAM_LIMIT: usize = 4096;

/// Environment variable overriding [`DEFAULT_DENSE_LIMIT`].
pub const DENSE_LIMIT_ENV: &str = "MMFS_DENSE_LIMIT";

/// Effective dense limit: the environment override when set and parseable,
/// the default otherwise.
pub fn dense_limit() -> usize {
    std::env::var(DENSE_LIMIT_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(DEFAULT_DENSE_LIMIT)
}
