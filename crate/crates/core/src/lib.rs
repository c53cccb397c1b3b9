//! Runtime machinery for skill-governed tool workflows.
//!
//! The crate is split along the lines of the runtime: a tiered skill
//! registry, a line-oriented tool protocol with a deterministic mock
//! server, the phased gate engine that audits every reported value,
//! residue numbering reconciliation, optimization campaign control, and
//! the benchmark metric and statistics suite.

pub mod bench;
pub mod campaign;
pub mod gate;
pub mod residue;
pub mod skills;
pub mod toollink;

pub use toollink::artifact::Category;
