//! Finite collaboration settings.
//!
//! A [`Setting`] is a finite input space with a probability mass and a
//! conditional positive-label probability per point, together with one
//! partition of the input space per agent. Partitions are what agents
//! *see*: each agent's predictor is the exact conditional probability of a
//! positive label given the cell containing the input (see
//! [`crate::predictor`]).
//!
//! Settings serialize to a stable JSON schema with rationals as `"num/den"`
//! strings:
//!
//! ```text
//! {"points":[{"id":"0","mass":"3/32","eta":"1"},...],
//!  "partitions":[[["0","1"],["2"]],...]}
//! ```

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prob::{sum_probs, Prob};

/// Opaque identifier of a point in the input space, unique within a setting.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointId(pub String);

impl PointId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PointId {
    fn from(s: &str) -> Self {
        PointId(s.to_string())
    }
}

impl From<String> for PointId {
    fn from(s: String) -> Self {
        PointId(s)
    }
}

/// One point of the input space: its marginal mass and the conditional
/// probability `eta = Pr[Y=1 | X=x]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Point {
    pub id: PointId,
    pub mass: Prob,
    pub eta: Prob,
}

impl Point {
    pub fn new(id: impl Into<PointId>, mass: Prob, eta: Prob) -> Self {
        Point {
            id: id.into(),
            mass,
            eta,
        }
    }
}

/// A partition of the point-id set into disjoint non-empty cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Partition {
    cells: Vec<Vec<PointId>>,
}

impl Partition {
    pub fn new(cells: Vec<Vec<PointId>>) -> Self {
        Partition { cells }
    }

    /// One cell per point.
    pub fn singletons<I: IntoIterator<Item = PointId>>(ids: I) -> Self {
        Partition {
            cells: ids.into_iter().map(|id| vec![id]).collect(),
        }
    }

    pub fn cells(&self) -> &[Vec<PointId>] {
        &self.cells
    }
}

/// Validation failures when assembling or deserializing a [`Setting`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SettingError {
    #[error("setting has no points")]
    NoPoints,
    #[error("setting has no partitions (need at least one agent)")]
    NoAgents,
    #[error("duplicate point id `{0}`")]
    DuplicatePointId(String),
    #[error("points: masses sum to {0}, expected exactly 1")]
    MassSum(String),
    #[error("partitions[{agent}]: cell {cell} is empty")]
    EmptyCell { agent: usize, cell: usize },
    #[error("partitions[{agent}]: point `{id}` appears in more than one cell")]
    OverlappingCells { agent: usize, id: String },
    #[error("partitions[{agent}]: unknown point id `{id}`")]
    UnknownPointId { agent: usize, id: String },
    #[error("partitions[{agent}]: point `{id}` is not covered by any cell")]
    UncoveredPoint { agent: usize, id: String },
    #[error("agent index {index} out of range for {n} agents")]
    AgentOutOfRange { index: usize, n: usize },
}

#[derive(Deserialize)]
struct RawSetting {
    points: Vec<Point>,
    partitions: Vec<Partition>,
}

/// A finite collaboration setting: a distribution over labeled points plus
/// one partition per agent.
///
/// Invariants enforced at construction and on deserialization: point ids are
/// unique, masses sum to exactly 1, there is at least one agent, and every
/// partition is a genuine partition of the full point set. Zero-mass
/// *points* are allowed; zero-mass *cells* are only rejected later, when a
/// predictor is induced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(try_from = "RawSetting")]
pub struct Setting {
    points: Vec<Point>,
    partitions: Vec<Partition>,
    #[serde(skip)]
    index: HashMap<PointId, usize>,
}

impl TryFrom<RawSetting> for Setting {
    type Error = SettingError;

    fn try_from(raw: RawSetting) -> Result<Self, Self::Error> {
        Setting::new(raw.points, raw.partitions)
    }
}

impl<'de> Deserialize<'de> for Setting {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawSetting::deserialize(deserializer)?;
        Setting::try_from(raw).map_err(serde::de::Error::custom)
    }
}

impl Setting {
    pub fn new(points: Vec<Point>, partitions: Vec<Partition>) -> Result<Self, SettingError> {
        if points.is_empty() {
            return Err(SettingError::NoPoints);
        }
        if partitions.is_empty() {
            return Err(SettingError::NoAgents);
        }
        let mut index = HashMap::with_capacity(points.len());
        for (i, point) in points.iter().enumerate() {
            if index.insert(point.id.clone(), i).is_some() {
                return Err(SettingError::DuplicatePointId(point.id.0.clone()));
            }
        }
        let total = sum_probs(points.iter().map(|p| &p.mass))
            .map_err(|_| SettingError::MassSum("more than 1".to_string()))?;
        if !total.is_one() {
            return Err(SettingError::MassSum(total.to_string()));
        }
        for (agent, partition) in partitions.iter().enumerate() {
            let mut seen: BTreeSet<&PointId> = BTreeSet::new();
            for (c, cell) in partition.cells().iter().enumerate() {
                if cell.is_empty() {
                    return Err(SettingError::EmptyCell { agent, cell: c });
                }
                for id in cell {
                    if !index.contains_key(id) {
                        return Err(SettingError::UnknownPointId {
                            agent,
                            id: id.0.clone(),
                        });
                    }
                    if !seen.insert(id) {
                        return Err(SettingError::OverlappingCells {
                            agent,
                            id: id.0.clone(),
                        });
                    }
                }
            }
            if seen.len() != points.len() {
                let missing = points
                    .iter()
                    .find(|p| !seen.contains(&p.id))
                    .expect("some point must be uncovered");
                return Err(SettingError::UncoveredPoint {
                    agent,
                    id: missing.id.0.clone(),
                });
            }
        }
        Ok(Setting {
            points,
            partitions,
            index,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    /// Number of agents.
    pub fn n_agents(&self) -> usize {
        self.partitions.len()
    }

    pub fn partition(&self, agent: usize) -> Result<&Partition, SettingError> {
        self.partitions
            .get(agent)
            .ok_or(SettingError::AgentOutOfRange {
                index: agent,
                n: self.n_agents(),
            })
    }

    /// Index of a point id within `points()`.
    pub fn point_index(&self, id: &PointId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn point(&self, id: &PointId) -> Option<&Point> {
        self.point_index(id).map(|i| &self.points[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Prob {
        s.parse().unwrap()
    }

    pub(crate) fn worked_setting() -> Setting {
        // Three points, two agents; each agent's partition pairs point "0"
        // with its own point and leaves the rest singleton.
        Setting::new(
            vec![
                Point::new("0", p("3/32"), p("1")),
                Point::new("1", p("2/32"), p("0")),
                Point::new("2", p("27/32"), p("0")),
            ],
            vec![
                Partition::new(vec![vec!["0".into(), "1".into()], vec!["2".into()]]),
                Partition::new(vec![vec!["0".into(), "2".into()], vec!["1".into()]]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn accepts_a_valid_setting() {
        let s = worked_setting();
        assert_eq!(s.n_agents(), 2);
        assert_eq!(s.points().len(), 3);
        assert_eq!(s.point_index(&"2".into()), Some(2));
    }

    #[test]
    fn rejects_bad_mass_sum() {
        let err = Setting::new(
            vec![
                Point::new("a", p("1/2"), p("0")),
                Point::new("b", p("1/4"), p("0")),
            ],
            vec![Partition::singletons(vec!["a".into(), "b".into()])],
        )
        .unwrap_err();
        assert_eq!(err, SettingError::MassSum("3/4".to_string()));
    }

    #[test]
    fn rejects_duplicate_ids_and_bad_partitions() {
        let two = vec![
            Point::new("a", p("1/2"), p("0")),
            Point::new("b", p("1/2"), p("1")),
        ];
        let dup = Setting::new(
            vec![
                Point::new("a", p("1/2"), p("0")),
                Point::new("a", p("1/2"), p("1")),
            ],
            vec![Partition::singletons(vec!["a".into()])],
        );
        assert!(matches!(dup, Err(SettingError::DuplicatePointId(_))));

        let missing = Setting::new(two.clone(), vec![Partition::new(vec![vec!["a".into()]])]);
        assert!(matches!(missing, Err(SettingError::UncoveredPoint { .. })));

        let overlap = Setting::new(
            two.clone(),
            vec![Partition::new(vec![
                vec!["a".into(), "b".into()],
                vec!["b".into()],
            ])],
        );
        assert!(matches!(
            overlap,
            Err(SettingError::OverlappingCells { .. })
        ));

        let unknown = Setting::new(
            two.clone(),
            vec![Partition::new(vec![vec![
                "a".into(),
                "b".into(),
                "c".into(),
            ]])],
        );
        assert!(matches!(unknown, Err(SettingError::UnknownPointId { .. })));

        let empty_cell = Setting::new(
            two,
            vec![Partition::new(vec![vec!["a".into(), "b".into()], vec![]])],
        );
        assert!(matches!(empty_cell, Err(SettingError::EmptyCell { .. })));
    }

    #[test]
    fn allows_zero_mass_points() {
        let s = Setting::new(
            vec![
                Point::new("a", p("1"), p("1/3")),
                Point::new("b", p("0"), p("1")),
            ],
            vec![Partition::singletons(vec!["a".into(), "b".into()])],
        );
        assert!(s.is_ok());
    }

    #[test]
    fn json_schema_round_trip() {
        let s = worked_setting();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(
            json,
            r#"{"points":[{"id":"0","mass":"3/32","eta":"1"},{"id":"1","mass":"1/16","eta":"0"},{"id":"2","mass":"27/32","eta":"0"}],"partitions":[[["0","1"],["2"]],[["0","2"],["1"]]]}"#
        );
        let back: Setting = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn deserialization_validates() {
        let bad_mass = r#"{"points":[{"id":"0","mass":"1/2","eta":"1"}],"partitions":[[["0"]]]}"#;
        let err = serde_json::from_str::<Setting>(bad_mass).unwrap_err();
        assert!(err.to_string().contains("masses sum to 1/2"));

        let bad_rational =
            r#"{"points":[{"id":"0","mass":"0.5","eta":"1"}],"partitions":[[["0"]]]}"#;
        let err = serde_json::from_str::<Setting>(bad_rational).unwrap_err();
        assert!(err.to_string().contains("malformed rational"));
    }
}
