//! The PE calculus: polymorphic value and computation types, a stoup-based
//! typechecker, and a finite relational model of its semantics.

pub mod encodings;
pub mod finmodel;
pub mod interp;
pub mod kernel;
pub mod paramlab;
pub mod surface;
pub mod typecheck;
