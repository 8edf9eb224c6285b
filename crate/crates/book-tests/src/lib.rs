//! Every chapter of the book is pulled in as a doc comment so that
//! `cargo test` compiles and runs its listings. One module per chapter keeps
//! failures traceable to a file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/waveforms.md")]
pub mod waveforms {}
#[doc = include_str!("../../../book/src/sogi.md")]
pub mod sogi {}
#[doc = include_str!("../../../book/src/thd.md")]
pub mod thd {}
#[doc = include_str!("../../../book/src/zero-sequence.md")]
pub mod zero_sequence {}
#[doc = include_str!("../../../book/src/detector.md")]
pub mod detector {}
#[doc = include_str!("../../../book/src/harness.md")]
pub mod harness {}
