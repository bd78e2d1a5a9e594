//! Analytics over deleted social-media posts.
//!
//! `postmortem` classifies posts (image + text) into a fixed 15-way topic
//! space, measures how often and how quickly posts in each topic are taken
//! down, and fits proportional-hazards survival models over per-post factors.
//! A seeded synthetic generator with planted ground truth backs the test
//! suite end to end, so every estimator here is checked against an
//! independent oracle.
//!
//! The narrative guide lives in `book/`; its code samples are compiled and
//! run as doc-tests via the [`guide`] module.

pub mod analytics;
pub mod augment;
pub mod category;
pub mod corpus;
pub mod error;
pub mod imgclf;
pub mod linalg;
pub mod metrics;
pub mod plots;
pub mod raster;
pub mod review;
pub mod scores;
pub mod synth;
pub mod textclf;

pub mod guide;

pub use category::Category;
pub use error::{Error, Result};
pub use raster::ImageTensor;
pub use scores::ClassScores;

/// Splitmix64 seed derivation, used wherever a per-item rng has to be
/// derived from a run seed and an item index so that serial and parallel
/// traversals agree.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
