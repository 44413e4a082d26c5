//! Curvature inequalities for submanifolds: the algebraic lemmas, the first
//! inequality, the δ(2,2) inequality, and their equality and minimality
//! consequences.

pub mod lemmas;
mod report;

pub use report::*;
