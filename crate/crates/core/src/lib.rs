//! Abelian embeddings of finite joint distributions, with the correlation
//! and noise machinery around them.
//!
//! The guide in `book/` walks through each module; its listings run as
//! doctests of this crate.

pub mod ascent;
pub mod correlation;
pub mod dictatorship;
pub mod distribution;
pub mod efron_stein;
pub mod fixtures;
pub mod embedding;
pub mod error;
pub mod function;
pub mod io;
pub mod lattice;
pub mod reduction;
pub mod sampling;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/distributions.md")]
    mod distributions {}
    #[doc = include_str!("../../../book/src/embeddings.md")]
    mod embeddings {}
    #[doc = include_str!("../../../book/src/functions.md")]
    mod functions {}
    #[doc = include_str!("../../../book/src/correlations.md")]
    mod correlations {}
    #[doc = include_str!("../../../book/src/reductions.md")]
    mod reductions {}
    #[doc = include_str!("../../../book/src/dictatorship.md")]
    mod dictatorship {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
