//! Collaboration strategies.
//!
//! A strategy is a deterministic map from the tuple of all agents' predicted
//! probabilities to a binary label. This module provides the built-in zoo —
//! deferral, probability averaging, majority vote, most-confident deferral,
//! and deferral with a certainty override — behind the same [`Strategy`]
//! trait that black-box strategies implement, plus a probe-based scan for
//! the "essentially always defers to one agent" shape.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prob::{Label, Prob};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StrategyError {
    #[error("unknown strategy spec `{0}`")]
    UnknownSpec(String),
    #[error("agent index {index} out of range for n={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("certain_override priority list repeats or targets agent {0}")]
    BadPriority(usize),
    #[error("probe set is empty")]
    EmptyProbeSet,
    #[error("probe tuple {0:?} touches the boundary of the cube; probes must lie in (0,1)^n")]
    BoundaryProbe(Vec<String>),
    #[error("probe tuple has arity {got}, expected {expected}")]
    ProbeArity { got: usize, expected: usize },
}

/// A deterministic collaboration strategy on probability tuples.
///
/// Implementations must be total on `[0,1]^n` for the arity they are used
/// at, and deterministic: equal tuples must yield equal labels. The auditor
/// memoizes probes and treats a replayed mismatch as a contract violation.
pub trait Strategy: Send + Sync {
    fn decide(&self, probs: &[Prob]) -> Label;
}

impl<F> Strategy for F
where
    F: Fn(&[Prob]) -> Label + Send + Sync,
{
    fn decide(&self, probs: &[Prob]) -> Label {
        self(probs)
    }
}

/// Serializable descriptor of a built-in strategy.
///
/// ```
/// use collab::strategy::StrategySpec;
///
/// let spec: StrategySpec = serde_json::from_str(r#"{"kind":"defer_to","k":0}"#).unwrap();
/// assert_eq!(spec, StrategySpec::DeferTo { k: 0 });
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategySpec {
    /// Round agent `k`'s prediction, ignoring everyone else.
    DeferTo { k: usize },
    /// Round the arithmetic mean of the predicted probabilities.
    RoundAverage,
    /// Majority vote over the rounded individual predictions; an even split
    /// goes to 1 (the vote mean is rounded half-up).
    MajorityVote,
    /// Defer to the agent whose prediction is farthest from 1/2; confidence
    /// ties go to the lowest agent index.
    MostConfident,
    /// Defer to agent `k`, except when another agent predicts exactly 0 or
    /// 1, in which case output that certain prediction. `priority` orders
    /// the overriding agents; omitted, it is every other agent by index.
    CertainOverride {
        k: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        priority: Option<Vec<usize>>,
    },
}

/// An executable built-in strategy, validated for a fixed arity `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuiltinStrategy {
    spec: StrategySpec,
    n: usize,
    /// Resolved override order for `CertainOverride`; empty otherwise.
    priority: Vec<usize>,
}

impl BuiltinStrategy {
    pub fn spec(&self) -> &StrategySpec {
        &self.spec
    }

    pub fn arity(&self) -> usize {
        self.n
    }
}

/// Instantiates a built-in strategy for `n` agents, validating indices.
pub fn make_strategy(spec: &StrategySpec, n: usize) -> Result<BuiltinStrategy, StrategyError> {
    let check = |index: usize| {
        if index < n {
            Ok(())
        } else {
            Err(StrategyError::IndexOutOfRange { index, n })
        }
    };
    let mut priority = Vec::new();
    match spec {
        StrategySpec::DeferTo { k } => check(*k)?,
        StrategySpec::RoundAverage | StrategySpec::MajorityVote | StrategySpec::MostConfident => {}
        StrategySpec::CertainOverride { k, priority: order } => {
            check(*k)?;
            match order {
                Some(order) => {
                    for &i in order {
                        check(i)?;
                        if i == *k || priority.contains(&i) {
                            return Err(StrategyError::BadPriority(i));
                        }
                        priority.push(i);
                    }
                }
                None => priority.extend((0..n).filter(|i| i != k)),
            }
        }
    }
    Ok(BuiltinStrategy {
        spec: spec.clone(),
        n,
        priority,
    })
}

impl Strategy for BuiltinStrategy {
    fn decide(&self, probs: &[Prob]) -> Label {
        assert_eq!(
            probs.len(),
            self.n,
            "strategy instantiated for n={} called with a {}-tuple",
            self.n,
            probs.len()
        );
        match &self.spec {
            StrategySpec::DeferTo { k } => probs[*k].round_half_up(),
            StrategySpec::RoundAverage => Prob::mean(probs).round_half_up(),
            StrategySpec::MajorityVote => {
                let votes: Vec<Prob> = probs.iter().map(|p| p.round_half_up().as_prob()).collect();
                Prob::mean(&votes).round_half_up()
            }
            StrategySpec::MostConfident => {
                let mut best = 0;
                for j in 1..probs.len() {
                    if probs[j].distance_from_half() > probs[best].distance_from_half() {
                        best = j;
                    }
                }
                probs[best].round_half_up()
            }
            StrategySpec::CertainOverride { k, .. } => {
                for &i in &self.priority {
                    if probs[i].is_certain() {
                        return probs[i].round_half_up();
                    }
                }
                probs[*k].round_half_up()
            }
        }
    }
}

/// The built-in strategies for `n` agents: one deferral per agent, the
/// three aggregation rules, and a certainty override around agent 0.
pub fn zoo(n: usize) -> Vec<BuiltinStrategy> {
    let mut specs: Vec<StrategySpec> = (0..n).map(|k| StrategySpec::DeferTo { k }).collect();
    specs.push(StrategySpec::RoundAverage);
    specs.push(StrategySpec::MajorityVote);
    specs.push(StrategySpec::MostConfident);
    specs.push(StrategySpec::CertainOverride {
        k: 0,
        priority: None,
    });
    specs
        .iter()
        .map(|spec| make_strategy(spec, n).expect("zoo specs are valid"))
        .collect()
}

/// Outcome of probing a strategy against the always-defer-to-`k` shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum NonCollabVerdict {
    /// Every probe is consistent with deferring to agent `k`. `alpha` is the
    /// constant tie label observed at probes with `p_k = 1/2`, when any were
    /// present. Consistency over a finite probe set is evidence, not proof.
    Consistent { k: usize, alpha: Option<Label> },
    /// For every candidate agent, a certified counter-probe.
    ViolationFound { violations: Vec<AgentViolation> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentViolation {
    pub k: usize,
    pub violation: ClauseViolation,
}

/// Why a candidate agent `k` cannot be the deferred-to agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "clause", rename_all = "snake_case")]
pub enum ClauseViolation {
    /// A tuple with `p_k != 1/2` whose output is not `round(p_k)`.
    Disagreement { tuple: Vec<Prob>, output: Label },
    /// Two tuples with `p_k = 1/2` labeled differently.
    TieSplit {
        tuple_one: Vec<Prob>,
        tuple_zero: Vec<Prob>,
    },
}

/// Probes `strategy` over `probe_tuples` (all strictly inside `(0,1)^n`)
/// and reports either the first agent `k` the probes are consistent with
/// deferring to, or one violation per candidate agent.
pub fn scan_non_collaborative(
    strategy: &dyn Strategy,
    probe_tuples: &[Vec<Prob>],
) -> Result<NonCollabVerdict, StrategyError> {
    let first = probe_tuples.first().ok_or(StrategyError::EmptyProbeSet)?;
    let n = first.len();
    for tuple in probe_tuples {
        if tuple.len() != n {
            return Err(StrategyError::ProbeArity {
                got: tuple.len(),
                expected: n,
            });
        }
        if tuple.iter().any(|p| p.is_certain()) {
            return Err(StrategyError::BoundaryProbe(
                tuple.iter().map(|p| p.to_string()).collect(),
            ));
        }
    }
    let outputs: Vec<Label> = probe_tuples.iter().map(|t| strategy.decide(t)).collect();

    let mut violations = Vec::new();
    'candidates: for k in 0..n {
        let mut tie_one: Option<&Vec<Prob>> = None;
        let mut tie_zero: Option<&Vec<Prob>> = None;
        for (tuple, output) in probe_tuples.iter().zip(&outputs) {
            if tuple[k].is_half() {
                match output {
                    Label::One => tie_one = Some(tuple),
                    Label::Zero => tie_zero = Some(tuple),
                }
                if let (Some(one), Some(zero)) = (tie_one, tie_zero) {
                    violations.push(AgentViolation {
                        k,
                        violation: ClauseViolation::TieSplit {
                            tuple_one: one.clone(),
                            tuple_zero: zero.clone(),
                        },
                    });
                    continue 'candidates;
                }
            } else if *output != tuple[k].round_half_up() {
                violations.push(AgentViolation {
                    k,
                    violation: ClauseViolation::Disagreement {
                        tuple: tuple.clone(),
                        output: *output,
                    },
                });
                continue 'candidates;
            }
        }
        // k survived every probe; at most one tie side was observed
        let alpha = if tie_one.is_some() {
            Some(Label::One)
        } else if tie_zero.is_some() {
            Some(Label::Zero)
        } else {
            None
        };
        return Ok(NonCollabVerdict::Consistent { k, alpha });
    }
    Ok(NonCollabVerdict::ViolationFound { violations })
}
