//! Constructors for adversarial and random collaboration settings.
//!
//! The three named constructions are the building blocks the auditor
//! assembles counterexamples from:
//!
//! * [`disagreement_setting`] turns one tuple on which a strategy's output
//!   disagrees with a target agent's rounded prediction into a small
//!   setting where that strategy is strictly worse than the target agent
//!   and no better than anyone else.
//! * [`uninformed_agent_setting`] gives one agent a trivial partition so
//!   that deferring to that agent is strictly worse than every other agent.
//! * [`half_split_setting`] turns two tuples that pin the target agent at
//!   exactly 1/2 but receive different labels into a setting where the
//!   strategy is strictly worse than the target agent.
//!
//! [`glue`] mixes settings on a tagged-union input space so that every
//! accuracy — agent or strategy — combines linearly with the mixture
//! weights, exactly. [`random_calibrated_setting`] generates seeded random
//! settings for property tests.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::prob::{Label, Prob};
use crate::setting::{Partition, Point, PointId, Setting, SettingError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstructError {
    #[error("invalid tuple: {0}")]
    InvalidTuple(String),
    #[error("epsilon must satisfy 0 < epsilon < 1/2, got {0}")]
    InvalidEpsilon(Prob),
    #[error("agent index {index} out of range for n={n}")]
    AgentOutOfRange { index: usize, n: usize },
    #[error("settings disagree on the number of agents: {0} vs {1}")]
    ArityMismatch(usize, usize),
    #[error("{settings} settings but {weights} weights")]
    WeightMismatch { settings: usize, weights: usize },
    #[error("weights must sum to exactly 1, got {0}")]
    WeightSum(String),
    #[error("weight {index} is zero; every glued piece needs positive probability")]
    ZeroWeight { index: usize },
    #[error("no settings to glue")]
    EmptyGlue,
    #[error("accuracies admit no mixing weight separating the strategy from the agents")]
    NoSeparatingWeight,
    #[error(transparent)]
    Setting(#[from] SettingError),
}

fn check_agent(k: usize, n: usize) -> Result<(), ConstructError> {
    if k < n {
        Ok(())
    } else {
        Err(ConstructError::AgentOutOfRange { index: k, n })
    }
}

fn check_open_tuple(tuple: &[Prob], n: usize) -> Result<(), ConstructError> {
    if tuple.len() != n {
        return Err(ConstructError::InvalidTuple(format!(
            "expected {n} coordinates, got {}",
            tuple.len()
        )));
    }
    if let Some(p) = tuple.iter().find(|p| p.is_certain()) {
        return Err(ConstructError::InvalidTuple(format!(
            "coordinate {p} lies on the boundary; the construction needs (0,1)^n"
        )));
    }
    Ok(())
}

/// Odds ratio used by the adversarial mass formulas: `(1-p)/p` when the
/// strategy answered 0, `p/(1-p)` when it answered 1.
fn odds(p: &Prob, c_value: Label) -> BigRational {
    match c_value {
        Label::Zero => p.complement().ratio() / p.ratio(),
        Label::One => p.ratio() / p.complement().ratio(),
    }
}

/// Builds the (n+1)-point setting in which a strategy that outputs
/// `c_value` on `tuple` (with `tuple[k] != 1/2`) is strictly less accurate
/// than agent `k` and at most as accurate as every other agent.
///
/// Point `"0"` carries label probability `1 - c`, points `"1"..="n"` carry
/// `c`; masses are chosen so that the conditional positive rate of each
/// pair cell `{"0", "i"}` is exactly `tuple[i-1]`, which makes every
/// agent's predictor reproduce the given tuple at point `"0"`.
///
/// The caller certifies that the strategy really outputs `c_value` on
/// `tuple`; the construction itself only validates the tuple.
pub fn disagreement_setting(
    n: usize,
    k: usize,
    tuple: &[Prob],
    c_value: Label,
) -> Result<Setting, ConstructError> {
    check_agent(k, n)?;
    check_open_tuple(tuple, n)?;
    if tuple[k].is_half() {
        return Err(ConstructError::InvalidTuple(format!(
            "coordinate {k} is exactly 1/2; the tie case needs the half-split construction"
        )));
    }

    let weights: Vec<BigRational> = tuple.iter().map(|p| odds(p, c_value)).collect();
    let normalizer = BigRational::one() + weights.iter().sum::<BigRational>();

    let eta_zero = c_value.flip().as_prob();
    let eta_rest = c_value.as_prob();

    let mut points = Vec::with_capacity(n + 1);
    points.push(Point::new(
        "0",
        Prob::try_from_ratio(BigRational::one() / &normalizer).expect("mass in [0,1]"),
        eta_zero,
    ));
    for (i, w) in weights.iter().enumerate() {
        points.push(Point::new(
            (i + 1).to_string(),
            Prob::try_from_ratio(w / &normalizer).expect("mass in [0,1]"),
            eta_rest.clone(),
        ));
    }

    let partitions = (0..n)
        .map(|agent| {
            let mut cells = vec![vec![
                PointId::from("0"),
                PointId::from((agent + 1).to_string()),
            ]];
            for j in 1..=n {
                if j != agent + 1 {
                    cells.push(vec![PointId::from(j.to_string())]);
                }
            }
            Partition::new(cells)
        })
        .collect();

    Ok(Setting::new(points, partitions)?)
}

/// A two-point setting where agent `k` sees nothing (one cell covering the
/// whole space) while every other agent sees everything (singleton cells).
///
/// Any strategy that defers to agent `k` inherits `k`'s accuracy here,
/// which is strictly below every other agent's for `0 < epsilon < 1/2`.
pub fn uninformed_agent_setting(
    n: usize,
    k: usize,
    epsilon: &Prob,
) -> Result<Setting, ConstructError> {
    check_agent(k, n)?;
    if epsilon.is_zero() || *epsilon >= Prob::half() {
        return Err(ConstructError::InvalidEpsilon(epsilon.clone()));
    }
    let third = Prob::new(1, 3).unwrap();
    let points = vec![
        Point::new("0", third.clone(), epsilon.clone()),
        Point::new("1", third.complement(), epsilon.complement()),
    ];
    let ids = || vec![PointId::from("0"), PointId::from("1")];
    let partitions = (0..n)
        .map(|agent| {
            if agent == k {
                Partition::new(vec![ids()])
            } else {
                Partition::singletons(ids())
            }
        })
        .collect();
    Ok(Setting::new(points, partitions)?)
}

/// Builds the 2(n+1)-point setting from two tuples `p` and `q` that both
/// pin agent `k` at exactly 1/2 but on which the strategy answers 1 and 0
/// respectively.
///
/// Points are tagged `"(b,i)"` with `b` naming the side (`p` side 0, `q`
/// side 1) and `i = 0` the points agent `k` cannot tell apart. Agent `k`'s
/// predictor is exactly 1/2 on `{(0,0), (1,0)}`, while agent `i`'s pair
/// cells have conditional positive rates `p_i` and `q_i`, so the strategy
/// faces the certified tuples at `(0,0)` and `(1,0)` and is wrong on both.
/// Agent `k` is right on one of them and everywhere else, hence strictly
/// better.
pub fn half_split_setting(
    n: usize,
    k: usize,
    p_tuple: &[Prob],
    q_tuple: &[Prob],
) -> Result<Setting, ConstructError> {
    check_agent(k, n)?;
    check_open_tuple(p_tuple, n)?;
    check_open_tuple(q_tuple, n)?;
    if !p_tuple[k].is_half() || !q_tuple[k].is_half() {
        return Err(ConstructError::InvalidTuple(format!(
            "coordinate {k} must be exactly 1/2 in both tuples"
        )));
    }

    let p_odds: Vec<BigRational> = p_tuple.iter().map(|p| odds(p, Label::One)).collect();
    let q_odds: Vec<BigRational> = q_tuple.iter().map(|q| odds(q, Label::Zero)).collect();
    let normalizer = BigRational::from(BigInt::from(2))
        + p_odds.iter().sum::<BigRational>()
        + q_odds.iter().sum::<BigRational>();
    let mass =
        |numer: &BigRational| Prob::try_from_ratio(numer / &normalizer).expect("mass in [0,1]");
    let id = |b: usize, i: usize| PointId::from(format!("({b},{i})"));

    let mut points = Vec::with_capacity(2 * (n + 1));
    points.push(Point::new(
        id(0, 0),
        mass(&BigRational::one()),
        Prob::zero(),
    ));
    for (i, w) in p_odds.iter().enumerate() {
        points.push(Point::new(id(0, i + 1), mass(w), Prob::one()));
    }
    points.push(Point::new(id(1, 0), mass(&BigRational::one()), Prob::one()));
    for (i, w) in q_odds.iter().enumerate() {
        points.push(Point::new(id(1, i + 1), mass(w), Prob::zero()));
    }

    let partitions = (0..n)
        .map(|agent| {
            let mut cells: Vec<Vec<PointId>> = Vec::new();
            if agent == k {
                cells.push(vec![id(0, 0), id(1, 0)]);
                for b in 0..=1 {
                    for i in 1..=n {
                        cells.push(vec![id(b, i)]);
                    }
                }
            } else {
                cells.push(vec![id(0, 0), id(0, agent + 1)]);
                cells.push(vec![id(1, 0), id(1, agent + 1)]);
                for b in 0..=1 {
                    for i in 1..=n {
                        if i != agent + 1 {
                            cells.push(vec![id(b, i)]);
                        }
                    }
                }
            }
            Partition::new(cells)
        })
        .collect();

    Ok(Setting::new(points, partitions)?)
}

/// Mixture weights over a family of settings: a point of the simplex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlueWeights {
    weights: Vec<Prob>,
}

impl GlueWeights {
    /// Validates that the weights sum to exactly 1.
    pub fn new(weights: Vec<Prob>) -> Result<Self, ConstructError> {
        let total: BigRational = weights.iter().map(|w| w.ratio().clone()).sum();
        if !total.is_one() {
            return Err(ConstructError::WeightSum(
                Prob::try_from_ratio(total.clone())
                    .map(|p| p.to_string())
                    .unwrap_or_else(|_| total.to_string()),
            ));
        }
        Ok(GlueWeights { weights })
    }

    /// `len` equal weights `1/len`.
    pub fn uniform(len: usize) -> Self {
        assert!(len > 0, "uniform weights need at least one setting");
        GlueWeights {
            weights: (0..len)
                .map(|_| Prob::new(1, len as u64).unwrap())
                .collect(),
        }
    }

    pub fn weights(&self) -> &[Prob] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Mixes settings on a tagged-union input space: point `x` of setting `m`
/// becomes `"(m,x)"` with mass scaled by `weights[m]`, labels and
/// partitions carried over per piece.
///
/// Every agent's and every strategy's accuracy on the result is exactly the
/// weighted sum of its per-piece accuracies. Weights must be strictly
/// positive: a zero-mass piece would make the partition-induced predictors
/// undefined on its cells.
pub fn glue(settings: &[Setting], weights: &GlueWeights) -> Result<Setting, ConstructError> {
    let first = settings.first().ok_or(ConstructError::EmptyGlue)?;
    let n = first.n_agents();
    for s in settings {
        if s.n_agents() != n {
            return Err(ConstructError::ArityMismatch(n, s.n_agents()));
        }
    }
    if settings.len() != weights.len() {
        return Err(ConstructError::WeightMismatch {
            settings: settings.len(),
            weights: weights.len(),
        });
    }
    if let Some(index) = weights.weights().iter().position(|w| w.is_zero()) {
        return Err(ConstructError::ZeroWeight { index });
    }

    let tag = |m: usize, id: &PointId| PointId::from(format!("({m},{id})"));
    let mut points = Vec::new();
    let mut partitions: Vec<Vec<Vec<PointId>>> = vec![Vec::new(); n];
    for (m, (setting, weight)) in settings.iter().zip(weights.weights()).enumerate() {
        for point in setting.points() {
            points.push(Point::new(
                tag(m, &point.id),
                weight.mul(&point.mass),
                point.eta.clone(),
            ));
        }
        for (agent, partition) in setting.partitions().iter().enumerate() {
            for cell in partition.cells() {
                partitions[agent].push(cell.iter().map(|id| tag(m, id)).collect());
            }
        }
    }
    Ok(Setting::new(
        points,
        partitions.into_iter().map(Partition::new).collect(),
    )?)
}

/// Picks the mixing weight for gluing an uninformed-agent setting with a
/// half-split setting so that the strategy lands strictly below every
/// agent.
///
/// Writing `d1_i` and `d2_i` for agent `i`'s accuracy margin over the
/// strategy on the two settings, the choice must satisfy
/// `lambda*d1_i + (1-lambda)*d2_i > 0` for every agent. Agents with
/// `d2_i < 0` impose thresholds `lambda > d2_i / (d2_i - d1_i)`; this
/// returns the midpoint between the largest threshold and 1.
pub fn effective_tie_weight(
    k: usize,
    agent_accs_first: &[Prob],
    strategy_acc_first: &Prob,
    agent_accs_second: &[Prob],
    strategy_acc_second: &Prob,
) -> Result<Prob, ConstructError> {
    let n = agent_accs_first.len();
    check_agent(k, n)?;
    if agent_accs_second.len() != n {
        return Err(ConstructError::ArityMismatch(n, agent_accs_second.len()));
    }
    let d1: Vec<BigRational> = agent_accs_first
        .iter()
        .map(|a| a.ratio() - strategy_acc_first.ratio())
        .collect();
    let d2: Vec<BigRational> = agent_accs_second
        .iter()
        .map(|a| a.ratio() - strategy_acc_second.ratio())
        .collect();

    // agent k must win on the second setting, everyone else on the first
    if d2[k] <= BigRational::zero() {
        return Err(ConstructError::NoSeparatingWeight);
    }
    for (i, margin) in d1.iter().enumerate() {
        if i != k && *margin <= BigRational::zero() {
            return Err(ConstructError::NoSeparatingWeight);
        }
    }

    let mut threshold = BigRational::zero();
    for i in 0..n {
        if d2[i] < BigRational::zero() {
            let cut = -&d2[i] / (&d1[i] - &d2[i]);
            if cut > threshold {
                threshold = cut;
            }
        }
    }
    let lambda = (BigRational::one() + threshold) / BigRational::from(BigInt::from(2));
    Prob::try_from_ratio(lambda).map_err(|_| ConstructError::NoSeparatingWeight)
}

/// A seeded random setting whose partition-induced predictors are all
/// calibrated by construction: masses are strictly positive rationals
/// normalized to sum to 1, label probabilities are rationals with bounded
/// denominator, and each agent gets an independently shuffled partition.
///
/// Deterministic in `seed`.
pub fn random_calibrated_setting(
    seed: u64,
    max_points: usize,
    n: usize,
    denominator_bound: u64,
) -> Setting {
    assert!(max_points >= 1, "need at least one point");
    assert!(n >= 1, "need at least one agent");
    let bound = denominator_bound.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let count = rng.gen_range(1..=max_points);
    let raw_masses: Vec<u64> = (0..count).map(|_| rng.gen_range(1..=bound)).collect();
    let total: u64 = raw_masses.iter().sum();
    let points: Vec<Point> = raw_masses
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let den = rng.gen_range(1..=bound);
            let num = rng.gen_range(0..=den);
            Point::new(
                i.to_string(),
                Prob::new(w, total).unwrap(),
                Prob::new(num, den).unwrap(),
            )
        })
        .collect();

    let partitions = (0..n)
        .map(|_| {
            let mut ids: Vec<PointId> = points.iter().map(|p| p.id.clone()).collect();
            ids.shuffle(&mut rng);
            let cell_count = rng.gen_range(1..=ids.len());
            let mut cells: Vec<Vec<PointId>> = Vec::with_capacity(cell_count);
            for (i, id) in ids.into_iter().enumerate() {
                if i < cell_count {
                    cells.push(vec![id]);
                } else {
                    let slot = rng.gen_range(0..cell_count);
                    cells[slot].push(id);
                }
            }
            Partition::new(cells)
        })
        .collect();

    Setting::new(points, partitions).expect("generator output is always valid")
}

/// Seeded random mixture weights with bounded denominators, strictly
/// positive and summing to exactly 1.
pub fn random_glue_weights(seed: u64, len: usize, denominator_bound: u64) -> GlueWeights {
    assert!(len >= 1);
    let bound = denominator_bound.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<u64> = (0..len).map(|_| rng.gen_range(1..=bound)).collect();
    let total: u64 = raw.iter().sum();
    GlueWeights {
        weights: raw.iter().map(|&w| Prob::new(w, total).unwrap()).collect(),
    }
}
