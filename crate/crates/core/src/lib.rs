//! Moment-SOS hierarchies over basic semi-algebraic sets, Christoffel-Darboux
//! kernels on products of simple sets, and tools to measure how far truncated
//! pseudo-moment sequences sit from true moment sequences.

pub mod polycore;
pub mod semialg;
pub mod momentkit;
pub mod hierarchy;
pub mod cdkernel;
pub mod distcone;
pub mod bench;
