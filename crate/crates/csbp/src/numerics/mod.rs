//! Shared numerical routines. Hand-rolled so that every oracle's arithmetic is
//! inspectable; tolerances are chosen one decade tighter than the contracts
//! that consume them.

pub mod matexp;
pub mod ode;
pub mod quad;
pub mod roots;
