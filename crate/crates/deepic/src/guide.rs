//! The book under `book/` mirrored as documentation, so `cargo test`
//! compiles and runs every code block in it. If a chapter drifts from
//! the library, the doctests here fail.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/channel.md")]
pub mod channel {}

#[doc = include_str!("../../../book/src/autodiff.md")]
pub mod autodiff {}

#[doc = include_str!("../../../book/src/neural-code.md")]
pub mod neural_code {}

#[doc = include_str!("../../../book/src/classic-baselines.md")]
pub mod classic_baselines {}

#[doc = include_str!("../../../book/src/training.md")]
pub mod training {}

#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
