//! Exact verification of dimension-quotient decompositions for finite
//! semidirect products.
//!
//! The library computes quotients of powers of augmentation ideals in
//! integral group rings two independent ways — directly on group-ring
//! lattices, and through graded Lie rings, enveloping-algebra components and
//! torsion operators — and checks that the two routes agree.

pub mod abelian;
pub mod cli;
pub mod corpus;
pub mod group;
pub mod lie;
pub mod groupring;
pub mod matrix;
pub mod quotients;
