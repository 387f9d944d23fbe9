//! Partition-induced calibrated predictors.
//!
//! Given a setting and an agent's partition, the agent's predictor assigns
//! to every point the exact conditional probability of a positive label
//! given the cell containing that point. Predictors built this way are
//! calibrated by construction; [`check_calibration`] verifies the property
//! for arbitrary predictors, exactly.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::prob::Prob;
use crate::setting::{PointId, Setting, SettingError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PredictorError {
    #[error("agent {agent}: cell {cell} has total mass 0, conditional undefined")]
    ZeroMassCell { agent: usize, cell: usize },
    #[error("predictor has no value for point `{0}`")]
    MissingPoint(String),
    #[error(transparent)]
    Setting(#[from] SettingError),
}

/// A probability map over the points of a setting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Predictor {
    values: BTreeMap<PointId, Prob>,
}

impl Predictor {
    pub fn new(values: BTreeMap<PointId, Prob>) -> Self {
        Predictor { values }
    }

    pub fn value(&self, id: &PointId) -> Option<&Prob> {
        self.values.get(id)
    }

    pub fn values(&self) -> &BTreeMap<PointId, Prob> {
        &self.values
    }

    fn value_or_err(&self, id: &PointId) -> Result<&Prob, PredictorError> {
        self.values
            .get(id)
            .ok_or_else(|| PredictorError::MissingPoint(id.0.clone()))
    }
}

/// Outcome of the exact calibration check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CalibrationVerdict {
    Pass,
    /// Some predicted level `p` whose mass-weighted positive rate is not `p`.
    Fail {
        level: Prob,
        observed_rate: Option<Prob>,
    },
}

impl CalibrationVerdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, CalibrationVerdict::Pass)
    }
}

/// Builds agent `agent_index`'s predictor: on each cell `A` of the agent's
/// partition, the constant value `Pr[Y=1 | X in A]`, computed exactly.
///
/// Fails with [`PredictorError::ZeroMassCell`] if any cell carries no mass,
/// since the conditional is undefined there.
pub fn induce_predictor(
    setting: &Setting,
    agent_index: usize,
) -> Result<Predictor, PredictorError> {
    let partition = setting.partition(agent_index)?;
    let mut values = BTreeMap::new();
    for (c, cell) in partition.cells().iter().enumerate() {
        let mut total = BigRational::zero();
        let mut weighted = BigRational::zero();
        for id in cell {
            let point = setting
                .point(id)
                .expect("setting invariant: partition ids resolve");
            total += point.mass.ratio();
            weighted += point.mass.ratio() * point.eta.ratio();
        }
        if total.is_zero() {
            return Err(PredictorError::ZeroMassCell {
                agent: agent_index,
                cell: c,
            });
        }
        let value = Prob::try_from_ratio(weighted / total)
            .expect("conditional of eta values stays in [0, 1]");
        for id in cell {
            values.insert(id.clone(), value.clone());
        }
    }
    Ok(Predictor { values })
}

/// All agents' predictors, in agent order.
pub fn induce_all_predictors(setting: &Setting) -> Result<Vec<Predictor>, PredictorError> {
    (0..setting.n_agents())
        .map(|i| induce_predictor(setting, i))
        .collect()
}

/// Checks exact calibration: for every value `p` in the predictor's image,
/// the mass-weighted average of `eta` over `{x : P(x) = p}` equals `p`.
///
/// Levels carrying zero total mass are vacuous (the conditional would
/// condition on a null event) and are skipped. The first violation in
/// ascending level order is reported.
pub fn check_calibration(
    setting: &Setting,
    predictor: &Predictor,
) -> Result<CalibrationVerdict, PredictorError> {
    let mut by_level: BTreeMap<&Prob, (BigRational, BigRational)> = BTreeMap::new();
    for point in setting.points() {
        let level = predictor.value_or_err(&point.id)?;
        let entry = by_level
            .entry(level)
            .or_insert_with(|| (BigRational::zero(), BigRational::zero()));
        entry.0 += point.mass.ratio();
        entry.1 += point.mass.ratio() * point.eta.ratio();
    }
    for (level, (total, weighted)) in by_level {
        if total.is_zero() {
            continue;
        }
        let rate = Prob::try_from_ratio(weighted / total)
            .expect("conditional of eta values stays in [0, 1]");
        if &rate != level {
            return Ok(CalibrationVerdict::Fail {
                level: level.clone(),
                observed_rate: Some(rate),
            });
        }
    }
    Ok(CalibrationVerdict::Pass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setting::{Partition, Point};

    fn p(s: &str) -> Prob {
        s.parse().unwrap()
    }

    #[test]
    fn conditional_over_a_cell() {
        let s = Setting::new(
            vec![
                Point::new("a", p("3/32"), p("1")),
                Point::new("b", p("2/32"), p("0")),
                Point::new("c", p("27/32"), p("0")),
            ],
            vec![Partition::new(vec![
                vec!["a".into(), "b".into()],
                vec!["c".into()],
            ])],
        )
        .unwrap();
        let pred = induce_predictor(&s, 0).unwrap();
        // (3/32 * 1) / (5/32) = 3/5 on both points of the cell
        assert_eq!(pred.value(&"a".into()), Some(&p("3/5")));
        assert_eq!(pred.value(&"b".into()), Some(&p("3/5")));
        // singleton: conditional equals eta
        assert_eq!(pred.value(&"c".into()), Some(&p("0")));
        assert!(check_calibration(&s, &pred).unwrap().is_pass());
    }

    #[test]
    fn single_cell_uniform_symmetry() {
        let s = Setting::new(
            vec![
                Point::new("a", p("1/2"), p("1/4")),
                Point::new("b", p("1/2"), p("3/4")),
            ],
            vec![Partition::new(vec![vec!["a".into(), "b".into()]])],
        )
        .unwrap();
        let pred = induce_predictor(&s, 0).unwrap();
        assert_eq!(pred.value(&"a".into()), Some(&p("1/2")));
        assert_eq!(pred.value(&"b".into()), Some(&p("1/2")));
        assert!(check_calibration(&s, &pred).unwrap().is_pass());
    }

    #[test]
    fn zero_mass_cell_is_rejected() {
        let s = Setting::new(
            vec![
                Point::new("a", p("1"), p("1/3")),
                Point::new("b", p("0"), p("1")),
            ],
            vec![Partition::singletons(vec!["a".into(), "b".into()])],
        )
        .unwrap();
        let err = induce_predictor(&s, 0).unwrap_err();
        assert_eq!(err, PredictorError::ZeroMassCell { agent: 0, cell: 1 });
    }

    #[test]
    fn calibration_violation_is_reported_at_its_level() {
        let s = Setting::new(
            vec![Point::new("a", p("1"), p("1/2"))],
            vec![Partition::singletons(vec!["a".into()])],
        )
        .unwrap();
        let mut values = BTreeMap::new();
        values.insert(PointId::from("a"), p("9/10"));
        let verdict = check_calibration(&s, &Predictor::new(values)).unwrap();
        assert_eq!(
            verdict,
            CalibrationVerdict::Fail {
                level: p("9/10"),
                observed_rate: Some(p("1/2")),
            }
        );
    }

    #[test]
    fn base_rate_predictor_is_calibrated() {
        let s = Setting::new(
            vec![
                Point::new("a", p("1/4"), p("1")),
                Point::new("b", p("3/4"), p("1/3")),
            ],
            vec![Partition::new(vec![vec!["a".into(), "b".into()]])],
        )
        .unwrap();
        // one cell covering everything: the predictor is the base rate
        let pred = induce_predictor(&s, 0).unwrap();
        assert_eq!(pred.value(&"a".into()), Some(&p("1/2")));
        assert!(check_calibration(&s, &pred).unwrap().is_pass());
    }

    #[test]
    fn relabeling_points_commutes_with_induction() {
        let rename = |id: &PointId| PointId::from(format!("node-{id}"));
        for seed in 0..30u64 {
            let setting = crate::construct::random_calibrated_setting(seed, 9, 3, 12);
            let renamed = Setting::new(
                setting
                    .points()
                    .iter()
                    .map(|pt| Point::new(rename(&pt.id), pt.mass.clone(), pt.eta.clone()))
                    .collect(),
                setting
                    .partitions()
                    .iter()
                    .map(|part| {
                        Partition::new(
                            part.cells()
                                .iter()
                                .map(|cell| cell.iter().map(rename).collect())
                                .collect(),
                        )
                    })
                    .collect(),
            )
            .unwrap();
            for agent in 0..setting.n_agents() {
                let original = induce_predictor(&setting, agent).unwrap();
                let mapped = induce_predictor(&renamed, agent).unwrap();
                for point in setting.points() {
                    assert_eq!(original.value(&point.id), mapped.value(&rename(&point.id)));
                }
            }
        }
    }

    #[test]
    fn incomplete_predictor_is_an_error() {
        let s = Setting::new(
            vec![Point::new("a", p("1"), p("1/2"))],
            vec![Partition::singletons(vec!["a".into()])],
        )
        .unwrap();
        let empty = Predictor::new(BTreeMap::new());
        assert!(matches!(
            check_calibration(&s, &empty),
            Err(PredictorError::MissingPoint(_))
        ));
    }
}
