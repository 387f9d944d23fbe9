//! Machine-verifiable counterexample witnesses.
//!
//! A [`Witness`] packages a setting, the strategy it indicts (as a built-in
//! descriptor and/or a probe transcript), exact accuracies, and the
//! construction that produced it. Its claim — the strategy is strictly less
//! accurate than *every* agent — is re-checkable from the serialized
//! setting alone: [`verify_witness`] recomputes everything and trusts no
//! stored number.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{classifier_accuracy, Classifier};
use crate::predictor::{check_calibration, induce_all_predictors};
use crate::prob::{Label, Prob};
use crate::setting::Setting;
use crate::strategy::{Strategy, StrategySpec};

/// One remembered probe: the strategy's label on a tuple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub tuple: Vec<Prob>,
    pub label: Label,
}

/// How to reproduce the audited strategy: a built-in spec, a transcript of
/// every probe the witness depends on, or both.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyDescriptor {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<StrategySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<Vec<ProbeRecord>>,
}

/// Which construction assembled the witness setting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstructionTrace {
    /// One disagreement setting per agent, glued with uniform weights.
    Prop4Glue {
        weights: Vec<Prob>,
        tuples: Vec<Vec<Prob>>,
    },
    /// An uninformed-agent setting glued with a half-split setting.
    Prop5Glue {
        k: usize,
        epsilon: Prob,
        weights: Vec<Prob>,
        p_tuple: Vec<Prob>,
        q_tuple: Vec<Prob>,
    },
}

/// The one claim a witness can make.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessVerdict {
    StrategyBelowAllAgents,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessAccuracies {
    pub agents: Vec<Prob>,
    pub strategy: Prob,
}

/// A serialized counterexample: a setting on which the recorded strategy is
/// strictly worse than every agent, with exact accuracies attached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub setting: Setting,
    pub strategy: StrategyDescriptor,
    pub accuracies: WitnessAccuracies,
    pub construction: ConstructionTrace,
    pub verdict: WitnessVerdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    /// A stored value disagrees with its recomputation.
    #[error("tampered witness: {0}")]
    Tampered(String),
    /// The witness is internally consistent but its claim does not hold, or
    /// it cannot be re-evaluated at all.
    #[error("invalid witness: {0}")]
    Invalid(String),
}

struct TranscriptStrategy {
    map: BTreeMap<Vec<Prob>, Label>,
}

impl TranscriptStrategy {
    fn lookup(&self, tuple: &[Prob]) -> Option<Label> {
        self.map.get(tuple).copied()
    }
}

/// Recomputes a witness's claim from its serialized setting, trusting
/// nothing stored: re-induces all predictors, re-checks their calibration,
/// re-evaluates every accuracy, and confirms the strategy lands strictly
/// below every agent.
///
/// The strategy's labels come from `strategy` when given (the transcript,
/// if also present, is replayed against it and must agree), otherwise from
/// the embedded transcript, otherwise from the embedded spec.
pub fn verify_witness(
    witness: &Witness,
    strategy: Option<&dyn Strategy>,
) -> Result<(), VerifyError> {
    let setting = &witness.setting;
    let n = setting.n_agents();
    if witness.accuracies.agents.len() != n {
        return Err(VerifyError::Tampered(format!(
            "stored accuracies cover {} agents, setting has {n}",
            witness.accuracies.agents.len()
        )));
    }

    let predictors = induce_all_predictors(setting)
        .map_err(|e| VerifyError::Invalid(format!("setting not evaluable: {e}")))?;
    for (i, predictor) in predictors.iter().enumerate() {
        let verdict = check_calibration(setting, predictor)
            .map_err(|e| VerifyError::Invalid(format!("calibration check failed: {e}")))?;
        if !verdict.is_pass() {
            return Err(VerifyError::Invalid(format!(
                "agent {i}'s induced predictor is not calibrated"
            )));
        }
    }

    // resolve the strategy's labels at the realized tuples
    let tuples: Vec<Vec<Prob>> = setting
        .points()
        .iter()
        .map(|point| {
            predictors
                .iter()
                .map(|p| {
                    p.value(&point.id)
                        .expect("induced covers all points")
                        .clone()
                })
                .collect()
        })
        .collect();

    let transcript = witness
        .strategy
        .transcript
        .as_ref()
        .map(|records| TranscriptStrategy {
            map: records.iter().map(|r| (r.tuple.clone(), r.label)).collect(),
        });
    let builtin = match (&strategy, &witness.strategy.spec) {
        (None, Some(spec)) => Some(crate::strategy::make_strategy(spec, n).map_err(|e| {
            VerifyError::Invalid(format!("embedded strategy spec does not instantiate: {e}"))
        })?),
        _ => None,
    };

    let mut labels = Vec::with_capacity(tuples.len());
    for tuple in &tuples {
        let label =
            if let Some(live) = strategy {
                let out = live.decide(tuple);
                if let Some(t) = &transcript {
                    if let Some(recorded) = t.lookup(tuple) {
                        if recorded != out {
                            return Err(VerifyError::Tampered(format!(
                            "transcript records {recorded} at ({}) but the strategy answers {out}",
                            tuple.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ")
                        )));
                        }
                    }
                }
                out
            } else if let Some(t) = &transcript {
                t.lookup(tuple).ok_or_else(|| {
                    VerifyError::Invalid(format!(
                        "transcript has no entry for realized tuple ({})",
                        tuple
                            .iter()
                            .map(|p| p.to_string())
                            .collect::<Vec<_>>()
                            .join(", ")
                    ))
                })?
            } else if let Some(b) = &builtin {
                b.decide(tuple)
            } else {
                return Err(VerifyError::Invalid(
                    "witness carries neither a spec nor a transcript and no strategy was supplied"
                        .to_string(),
                ));
            };
        labels.push(label);
    }

    let strategy_acc = classifier_accuracy(setting, &Classifier::from_labels(labels))
        .map_err(|e| VerifyError::Invalid(format!("accuracy recomputation failed: {e}")))?;
    if strategy_acc != witness.accuracies.strategy {
        return Err(VerifyError::Tampered(format!(
            "stored strategy accuracy {} but recomputed {}",
            witness.accuracies.strategy, strategy_acc
        )));
    }

    for i in 0..n {
        let agent = Classifier::agent(setting, i)
            .map_err(|e| VerifyError::Invalid(format!("agent {i} not evaluable: {e}")))?;
        let acc = classifier_accuracy(setting, &agent)
            .map_err(|e| VerifyError::Invalid(format!("accuracy recomputation failed: {e}")))?;
        if acc != witness.accuracies.agents[i] {
            return Err(VerifyError::Tampered(format!(
                "stored accuracy {} for agent {i} but recomputed {}",
                witness.accuracies.agents[i], acc
            )));
        }
        if strategy_acc >= acc {
            return Err(VerifyError::Invalid(format!(
                "strategy accuracy {strategy_acc} is not strictly below agent {i}'s {acc}"
            )));
        }
    }
    Ok(())
}

impl Witness {
    /// [`verify_witness`] as a method.
    pub fn verify(&self, strategy: Option<&dyn Strategy>) -> Result<(), VerifyError> {
        verify_witness(self, strategy)
    }
}
