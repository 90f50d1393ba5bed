//! Exact modular invariant theory for reducible subgroups of SL(3, GF(p^s)).

pub mod cli;
pub mod gf;
pub mod gorenstein;
pub mod group;
pub mod invring;
pub mod linalg;
pub mod modstruct;
pub mod polyact;
pub mod properties;
pub mod report;
