//! The book's chapters, compiled as doc-tests so the guide and the
//! library cannot drift apart. `mdbook build book` renders the same
//! files; `cargo test --doc` runs every code block below.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/corpus.md")]
pub mod corpus {}

#[doc = include_str!("../../../book/src/augmentation.md")]
pub mod augmentation {}

#[doc = include_str!("../../../book/src/image-classifier.md")]
pub mod image_classifier {}

#[doc = include_str!("../../../book/src/activation-maps.md")]
pub mod activation_maps {}

#[doc = include_str!("../../../book/src/text-classifier.md")]
pub mod text_classifier {}

#[doc = include_str!("../../../book/src/sentiment.md")]
pub mod sentiment {}

#[doc = include_str!("../../../book/src/survival.md")]
pub mod survival {}

#[doc = include_str!("../../../book/src/agreement.md")]
pub mod agreement {}

#[doc = include_str!("../../../book/src/synthetic.md")]
pub mod synthetic {}

#[doc = include_str!("../../../book/src/pipeline.md")]
pub mod pipeline {}
