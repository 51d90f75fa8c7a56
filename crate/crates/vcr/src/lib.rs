//! Visual concept ranking on synthetic benchmarks.
//!
//! The crate generates images with known feature dependencies, trains a
//! small differentiable classifier on them, ranks concepts by the
//! directional derivative of the task score along ridge-fitted concept
//! directions, and checks those rankings against interventional ground
//! truth.

pub mod concept_oracle;
pub mod image;
pub mod rng;
pub mod synthgen;
pub mod toy_lmm;
pub mod evaluation;
pub mod ranking;
pub mod report;
pub mod timing;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/datasets.md")]
    mod datasets {}
    #[doc = include_str!("../../../book/src/concepts.md")]
    mod concepts {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/ranking.md")]
    mod ranking {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
