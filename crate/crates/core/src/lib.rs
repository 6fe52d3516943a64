//! Staged stream fusion: pipelines of stream combinators compiled into single
//! loop nests in a small imperative IR, with no intermediate streams left in
//! the output.
//!
//! * [`ir`] is the target language, with checker, evaluator and printer.
//! * [`staged`] builds user-tagged IR expressions for per-element logic.
//! * [`stream`] is the fusion library proper.
//! * [`api`] is the user-facing pipeline builder.
//! * [`spec`] reads and writes JSON pipeline descriptions.
//! * [`oracle`] runs pipelines directly on lists, for differential testing.
//! * [`random`] generates random well-formed pipelines.

pub mod api;
pub mod arith;
pub mod ir;
pub mod oracle;
pub mod random;
pub mod spec;
pub mod staged;
pub mod stream;
