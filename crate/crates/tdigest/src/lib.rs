//! t-digest: online estimation of quantiles, CDF values and trimmed means
//! with accuracy weighted toward the tails of the distribution.
//!
//! A digest clusters samples on the real line and keeps only each cluster's
//! mean and weight. A scale function limits cluster sizes so that extreme
//! quantiles are summarized by very small clusters (often single samples)
//! while the middle of the distribution uses large ones; the result is a
//! sketch of a few hundred bytes whose relative error stays roughly constant
//! in `q(1−q)`. Digests built over separate partitions of a stream merge
//! without losing these guarantees.
//!
//! ```
//! use tdigest::{ScaleKind, TDigest};
//!
//! let values = (0..10_000).map(|i| (i as f64) / 10_000.0);
//! let digest = TDigest::from_values(
//!     100.0,
//!     ScaleKind::K2,
//!     tdigest::MergePolicy::default_for(100.0),
//!     values,
//! )
//! .unwrap();
//! let p99 = digest.quantile(0.99).unwrap();
//! assert!((p99 - 0.99).abs() < 0.01);
//! ```

mod digest;
mod error;
mod interpolate;
mod oracle;
mod scale;

pub mod codec;

pub use digest::{Centroid, MergePolicy, TDigest, MIN_DELTA};
pub use error::{Error, Result};
pub use oracle::SampleSet;
pub use scale::ScaleKind;
