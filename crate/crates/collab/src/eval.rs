//! Exact 0-1 accuracy of agents and strategies on a setting.
//!
//! Accuracy here is the fraction classified correctly: for a classifier
//! emitting label `y(x)` at each point, the accuracy is
//! `sum_x mass(x) * (eta(x) if y(x)=1 else 1-eta(x))`, computed exactly.
//! Two independent routes are provided for agents — evaluating the induced
//! classifier, and the closed form `E[max(P_i, 1-P_i)]` — and are asserted
//! equal in the test suites.

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::predictor::{induce_all_predictors, induce_predictor, PredictorError};
use crate::prob::{Label, Prob};
use crate::setting::{PointId, Setting};
use crate::strategy::Strategy;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("classifier has no label for point `{0}`")]
    MissingPoint(String),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
}

/// A deterministic point-to-label map over a setting, fully materialized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classifier {
    /// Labels aligned with the setting's point order.
    labels: Vec<Label>,
}

impl Classifier {
    /// Agent `i`'s induced classifier: round the induced predictor.
    pub fn agent(setting: &Setting, agent_index: usize) -> Result<Self, EvalError> {
        let predictor = induce_predictor(setting, agent_index)?;
        let labels = setting
            .points()
            .iter()
            .map(|point| {
                predictor
                    .value(&point.id)
                    .expect("induced predictor covers every point")
                    .round_half_up()
            })
            .collect();
        Ok(Classifier { labels })
    }

    /// The strategy's induced classifier: at each point, apply the strategy
    /// to the full tuple of induced predictor values. Endpoint coordinates
    /// (exact 0 or 1) are passed through when they occur.
    pub fn strategy(setting: &Setting, strategy: &dyn Strategy) -> Result<Self, EvalError> {
        let predictors = induce_all_predictors(setting)?;
        let labels = setting
            .points()
            .iter()
            .map(|point| {
                let tuple: Vec<Prob> = predictors
                    .iter()
                    .map(|p| {
                        p.value(&point.id)
                            .expect("induced predictor covers every point")
                            .clone()
                    })
                    .collect();
                strategy.decide(&tuple)
            })
            .collect();
        Ok(Classifier { labels })
    }

    /// The accuracy-optimal classifier: threshold `eta` itself.
    pub fn bayes(setting: &Setting) -> Self {
        Classifier {
            labels: setting
                .points()
                .iter()
                .map(|p| p.eta.round_half_up())
                .collect(),
        }
    }

    /// From explicit per-point labels in setting order.
    pub fn from_labels(labels: Vec<Label>) -> Self {
        Classifier { labels }
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label_at(&self, setting: &Setting, id: &PointId) -> Result<Label, EvalError> {
        let idx = setting
            .point_index(id)
            .ok_or_else(|| EvalError::MissingPoint(id.0.clone()))?;
        self.labels
            .get(idx)
            .copied()
            .ok_or_else(|| EvalError::MissingPoint(id.0.clone()))
    }
}

/// Exact 0-1 accuracy of a classifier on a setting.
pub fn classifier_accuracy(setting: &Setting, classifier: &Classifier) -> Result<Prob, EvalError> {
    if classifier.labels.len() != setting.points().len() {
        let id = &setting.points()[classifier.labels.len().min(setting.points().len() - 1)].id;
        return Err(EvalError::MissingPoint(id.0.clone()));
    }
    let mut total = BigRational::zero();
    for (point, label) in setting.points().iter().zip(&classifier.labels) {
        let correct_prob = match label {
            Label::One => point.eta.clone(),
            Label::Zero => point.eta.complement(),
        };
        total += point.mass.ratio() * correct_prob.ratio();
    }
    Ok(Prob::try_from_ratio(total).expect("accuracy stays in [0, 1]"))
}

/// Agent accuracy by the closed form `E[max(P_i, 1 - P_i)]`.
///
/// This is an independent route to the same number as
/// `classifier_accuracy(setting, Classifier::agent(setting, i))`; the test
/// suites assert exact equality of the two.
pub fn agent_accuracy_formula(setting: &Setting, agent_index: usize) -> Result<Prob, EvalError> {
    let predictor = induce_predictor(setting, agent_index)?;
    let mut total = BigRational::zero();
    for point in setting.points() {
        let value = predictor
            .value(&point.id)
            .expect("induced predictor covers every point");
        total += point.mass.ratio() * value.max_with_complement().ratio();
    }
    Ok(Prob::try_from_ratio(total).expect("accuracy stays in [0, 1]"))
}

/// Per-point account of who labels what, and who is correct.
///
/// "Correct" means agreeing with the accuracy-optimal label
/// `round(eta(x))`; it is about the label an optimal judge would pick, not
/// about the realized outcome of a single draw.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointRecord {
    pub point: PointId,
    pub agent_labels: Vec<Label>,
    pub strategy_label: Label,
    pub bayes_label: Label,
    pub agent_correct: Vec<bool>,
    pub strategy_correct: bool,
    /// `agents_agree[i][j]` iff agents `i` and `j` emit the same label here.
    pub agents_agree: Vec<Vec<bool>>,
    /// Per agent, whether the strategy's label matches the agent's.
    pub strategy_agrees: Vec<bool>,
}

/// One record per point, eagerly computed.
pub fn correctness_table(
    setting: &Setting,
    strategy: &dyn Strategy,
) -> Result<Vec<PointRecord>, EvalError> {
    let n = setting.n_agents();
    let agents: Vec<Classifier> = (0..n)
        .map(|i| Classifier::agent(setting, i))
        .collect::<Result<_, _>>()?;
    let strat = Classifier::strategy(setting, strategy)?;
    let bayes = Classifier::bayes(setting);

    let mut records = Vec::with_capacity(setting.points().len());
    for (idx, point) in setting.points().iter().enumerate() {
        let agent_labels: Vec<Label> = agents.iter().map(|c| c.labels[idx]).collect();
        let strategy_label = strat.labels[idx];
        let bayes_label = bayes.labels[idx];
        let agents_agree = (0..n)
            .map(|i| (0..n).map(|j| agent_labels[i] == agent_labels[j]).collect())
            .collect();
        records.push(PointRecord {
            point: point.id.clone(),
            agent_correct: agent_labels.iter().map(|&l| l == bayes_label).collect(),
            strategy_correct: strategy_label == bayes_label,
            strategy_agrees: agent_labels.iter().map(|&l| l == strategy_label).collect(),
            agent_labels,
            strategy_label,
            bayes_label,
            agents_agree,
        });
    }
    Ok(records)
}

/// How the strategy's accuracy sits relative to the agents'.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyVerdict {
    /// Strictly below every agent: the reliability failure the auditor hunts.
    StrategyBelowAllAgents,
    /// Strictly above every agent: complementarity.
    StrategyAboveAllAgents,
    /// Neither extreme.
    StrategyWithinAgentRange,
}

impl AccuracyVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            AccuracyVerdict::StrategyBelowAllAgents => "strategy_below_all_agents",
            AccuracyVerdict::StrategyAboveAllAgents => "strategy_above_all_agents",
            AccuracyVerdict::StrategyWithinAgentRange => "strategy_within_agent_range",
        }
    }
}

/// A full exact evaluation of one strategy on one setting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evaluation {
    pub agent_accuracies: Vec<Prob>,
    pub strategy_accuracy: Prob,
    pub bayes_accuracy: Prob,
    pub verdict: AccuracyVerdict,
}

/// Evaluates every agent, the strategy, and the optimal classifier.
pub fn evaluate(setting: &Setting, strategy: &dyn Strategy) -> Result<Evaluation, EvalError> {
    let agent_accuracies: Vec<Prob> = (0..setting.n_agents())
        .map(|i| classifier_accuracy(setting, &Classifier::agent(setting, i)?))
        .collect::<Result<_, _>>()?;
    let strategy_accuracy =
        classifier_accuracy(setting, &Classifier::strategy(setting, strategy)?)?;
    let bayes_accuracy = classifier_accuracy(setting, &Classifier::bayes(setting))?;
    let min = agent_accuracies.iter().min().expect("n >= 1");
    let max = agent_accuracies.iter().max().expect("n >= 1");
    let verdict = if strategy_accuracy < *min {
        AccuracyVerdict::StrategyBelowAllAgents
    } else if strategy_accuracy > *max {
        AccuracyVerdict::StrategyAboveAllAgents
    } else {
        AccuracyVerdict::StrategyWithinAgentRange
    };
    Ok(Evaluation {
        agent_accuracies,
        strategy_accuracy,
        bayes_accuracy,
        verdict,
    })
}

impl Evaluation {
    /// Plain-text accuracy table, one agent per row, then the strategy,
    /// the optimal threshold classifier, and a verdict line.
    pub fn render_text(&self, strategy_name: &str) -> String {
        let mut rows: Vec<(String, String)> = self
            .agent_accuracies
            .iter()
            .enumerate()
            .map(|(i, acc)| (format!("agent {i}"), acc.to_string()))
            .collect();
        rows.push((
            format!("strategy {strategy_name}"),
            self.strategy_accuracy.to_string(),
        ));
        rows.push(("bayes".to_string(), self.bayes_accuracy.to_string()));
        let width = rows
            .iter()
            .map(|(name, _)| name.len())
            .max()
            .unwrap_or(0)
            .max("classifier".len())
            + 2;
        let mut out = format!("{:<width$}accuracy\n", "classifier");
        for (name, value) in rows {
            out.push_str(&format!("{name:<width$}{value}\n"));
        }
        out.push_str(&format!("verdict: {}\n", self.verdict.as_str()));
        out
    }
}
