//! Quadratisation of pseudo-Boolean functions.
//!
//! A [`Pbf`] in multilinear form is reduced to degree 2 by replacing
//! variable pairs with auxiliary variables, each tied to its pair by a
//! penalty gadget. Two reducers are provided: [`lsr`] (graph-driven, local
//! updates) and [`quadratise_baseline`] (full-scan reference). The
//! [`oracle`] module verifies results by brute force.

pub mod baseline;
pub mod bench;
pub mod combinatorics;
pub mod error;
pub mod graph;
pub mod index;
pub mod lsr;
pub mod oracle;
pub mod pbf;
pub mod result;

pub use baseline::{get_next_var_pair, quadratise_baseline, SelectionVariant};
pub use bench::{generate, reduce_command, run_sweep, terms_scaling_report, Algorithm, GeneratorSpec};
pub use error::{Error, Result};
pub use graph::{build_graph, Edge, MultiGraph, VarPair};
pub use index::{build_index, MultiplicityIndex};
pub use lsr::{lsr, reduce_to_degree_k, LsrConfig, LsrRun};
pub use oracle::{check_quadratisation, oracle_penalty_scale, VerificationReport};
pub use pbf::{penalty_term, Assignment, Monomial, Pbf, TermId, VarId};
pub use result::{ReductionResult, Substitution};
