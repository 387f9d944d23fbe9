//! Exact evaluation and auditing of collaboration strategies over
//! calibrated binary predictors.
//!
//! A *collaboration setting* is a finite distribution over labeled inputs
//! together with one partition per agent; each agent predicts the exact
//! conditional probability of a positive label given the cell it sees, so
//! every agent is calibrated by construction. A *strategy* merges the
//! agents' predicted probabilities into a single 0/1 classification. This
//! crate evaluates agents and strategies at exact rational precision, and
//! audits black-box strategies: for strategies that genuinely combine
//! opinions rather than defer to one fixed agent, it constructs and
//! verifies a concrete setting on which the strategy is strictly less
//! accurate than every single agent.
//!
//! ```
//! use collab::{audit, make_strategy, verify_witness, AuditOutcome, SearchConfig, StrategySpec};
//!
//! let avg = make_strategy(&StrategySpec::RoundAverage, 2).unwrap();
//! let report = audit(&avg, 2, &SearchConfig::default()).unwrap();
//! match report.outcome {
//!     AuditOutcome::WitnessFound { witness } => {
//!         // the claim is re-checkable from the serialized setting alone
//!         verify_witness(&witness, Some(&avg)).unwrap();
//!         let worst_agent = witness.accuracies.agents.iter().min().unwrap();
//!         assert!(witness.accuracies.strategy < *worst_agent);
//!     }
//!     AuditOutcome::ConsistentWithinBudget { .. } => unreachable!("averaging is collaborative"),
//! }
//! ```
//!
//! Everything is deterministic: searches are seeded, constructions are
//! closed-form, and all values are immutable after construction, so sharing
//! across threads needs no synchronization.

pub mod audit;
pub mod construct;
pub mod eval;
pub mod predictor;
pub mod prob;
pub mod setting;
pub mod strategy;
pub mod witness;

pub use audit::{
    audit, audit_builtin, build_witness, find_disagreement, find_half_split, AuditError,
    AuditOutcome, AuditReport, HalfSplitOutcome, ProbeCache, SearchConfig,
};
pub use construct::{
    disagreement_setting, effective_tie_weight, glue, half_split_setting,
    random_calibrated_setting, random_glue_weights, uninformed_agent_setting, ConstructError,
    GlueWeights,
};
pub use eval::{
    agent_accuracy_formula, classifier_accuracy, correctness_table, evaluate, AccuracyVerdict,
    Classifier, EvalError, Evaluation, PointRecord,
};
pub use predictor::{
    check_calibration, induce_all_predictors, induce_predictor, CalibrationVerdict, Predictor,
    PredictorError,
};
pub use prob::{Label, Prob, ProbError};
pub use setting::{Partition, Point, PointId, Setting, SettingError};
pub use strategy::{
    make_strategy, scan_non_collaborative, zoo, BuiltinStrategy, NonCollabVerdict, Strategy,
    StrategyError, StrategySpec,
};
pub use witness::{verify_witness, ConstructionTrace, StrategyDescriptor, VerifyError, Witness};

// The guide's chapters double as doctests so the book can never drift from
// the library: `cargo test --doc` compiles and runs every Rust block in
// book/src/.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/settings.md")]
    pub mod settings {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    pub mod evaluation {}
    #[doc = include_str!("../../../book/src/strategies.md")]
    pub mod strategies {}
    #[doc = include_str!("../../../book/src/constructions.md")]
    pub mod constructions {}
    #[doc = include_str!("../../../book/src/auditing.md")]
    pub mod auditing {}
}
