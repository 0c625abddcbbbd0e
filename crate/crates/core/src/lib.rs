pub mod diffpoly;
pub mod expr;
pub mod gpr;
pub mod invariant;
pub mod pipeline;
pub mod poly;
pub mod simulate;
pub mod solvability;
