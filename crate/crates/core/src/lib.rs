//! Tooling for denoising animal vocalizations without clean training data.

// `!(x > 0.0)` is how parameter checks reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audio;
pub mod error;
pub mod gate;
pub mod harness;
pub mod metrics;
pub mod mixing;
pub mod pseudo;
pub mod seed;
pub mod segment;

pub use audio::{AudioClip, TimeScaleFactor};
pub use error::{Error, Result};

// Guide chapters run as doctests so their snippets track the API.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/audio.md")]
    mod audio {}
    #[doc = include_str!("../../../book/src/gate.md")]
    mod gate {}
    #[doc = include_str!("../../../book/src/segmentation.md")]
    mod segmentation {}
    #[doc = include_str!("../../../book/src/mixing.md")]
    mod mixing {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/pseudo.md")]
    mod pseudo {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
    #[doc = include_str!("../../../book/src/seeds.md")]
    mod seeds {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
