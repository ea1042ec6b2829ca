//! mdbook cannot run snippets that depend on workspace crates, so each
//! chapter is pulled in as a doc comment and checked by `cargo test --doc`.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[doc = include_str!("../../../book/src/drivers.md")]
mod drivers {}

#[doc = include_str!("../../../book/src/rough-paths.md")]
mod rough_paths {}

#[doc = include_str!("../../../book/src/rde.md")]
mod rde {}

#[doc = include_str!("../../../book/src/slowfast.md")]
mod slowfast {}

#[doc = include_str!("../../../book/src/ldp.md")]
mod ldp {}

#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
