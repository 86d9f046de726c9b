//! Decision procedure for existential generalised Semёnov arithmetic.

pub mod abstraction;
pub mod certificate;
pub mod encoding;
pub mod error;
pub mod formula;
pub mod lavass;
pub mod oracle;
pub mod regular;
pub mod sexpr;
pub mod solver;
pub mod strings;
pub mod translate;
pub mod witness;
