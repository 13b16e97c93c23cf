//! The user guide, embedded from `book/src` so its code runs as doc-tests.
//!
//! Each submodule carries one chapter verbatim. `mdbook build book` renders
//! the same sources, and `cargo test --doc` compiles and runs every Rust
//! block in them, so the guide cannot drift from the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/sparse.md")]
pub mod sparse {}

#[doc = include_str!("../../../book/src/operators.md")]
pub mod operators {}

#[doc = include_str!("../../../book/src/problems.md")]
pub mod problems {}

#[doc = include_str!("../../../book/src/smoothers.md")]
pub mod smoothers {}

#[doc = include_str!("../../../book/src/factorizations.md")]
pub mod factorizations {}

#[doc = include_str!("../../../book/src/amg.md")]
pub mod amg {}

#[doc = include_str!("../../../book/src/combined.md")]
pub mod combined {}

#[doc = include_str!("../../../book/src/krylov.md")]
pub mod krylov {}

#[doc = include_str!("../../../book/src/certificates.md")]
pub mod certificates {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
