//! Finite-automaton strategies in infinitely repeated two-player games.
//!
//! Machines are Moore-style: each state emits an action and moves on the
//! opponent's observed action. Payoffs use the limit of means and are exact
//! rationals throughout.

pub mod cycles;
pub mod equilibrium;
pub mod error;
pub mod game;
pub mod machine;
pub mod par;
pub mod play;
pub mod sequences;
pub mod structure;

pub use cycles::{best_response_value, construct_best_response, is_sigma_machine, MachinePath};
pub use equilibrium::{
    ar_implies_lean, canonicalize, default_bound, enumerate_machines, enumerate_machines_within, is_abreu_rubinstein,
    is_best_response, is_lean, is_nash, measure, simplify_to_lean, Certificate, CertifyMode, CheckOptions, Measure,
    Outcome, SearchBound, Verdict, VerdictKind, Witness,
};
pub use error::{Error, Result};
pub use game::{ActionPair, PayoffProfile, Player, Rational, StageGame};
pub use machine::{builtin_machine, classify_states, ComplexityReport, Machine};
pub use par::Execution;
pub use play::{simulate, EventualPlay, Partition, Periodic, Relation, Step};
pub use sequences::ActionSeq;
pub use structure::{audit_structure, infer_machines, rho_decompose, StructureAudit};
