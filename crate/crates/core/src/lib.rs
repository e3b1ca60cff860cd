//! Optimum OR/AND/XOR bi-decomposition of Boolean functions.

pub mod aig;
pub mod cnf;
pub mod sat;
pub mod qbf;
pub mod engine;
pub mod parallel;
pub mod cli;
