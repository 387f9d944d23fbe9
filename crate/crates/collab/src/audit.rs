//! Black-box strategy auditing.
//!
//! The auditor probes a strategy over the open cube looking for the two
//! behaviors that separate it from plain deferral: a tuple where its output
//! disagrees with some agent's rounded prediction, and a pair of tuples
//! that pin an agent at exactly 1/2 but receive different labels. Whatever
//! it finds is compiled, through the constructors in [`crate::construct`],
//! into a [`Witness`] certifying that the strategy is strictly worse than
//! every agent on a concrete setting. Searches are budgeted and seeded:
//! finding nothing is reported as consistency *within budget*, never as
//! proof.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::construct::{
    disagreement_setting, effective_tie_weight, glue, half_split_setting, uninformed_agent_setting,
    ConstructError, GlueWeights,
};
use crate::eval::{evaluate, EvalError};
use crate::predictor::induce_all_predictors;
use crate::prob::{Label, Prob};
use crate::setting::Setting;
use crate::strategy::{BuiltinStrategy, Strategy, StrategySpec};
use crate::witness::{
    ConstructionTrace, ProbeRecord, StrategyDescriptor, Witness, WitnessAccuracies, WitnessVerdict,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuditError {
    #[error("grid resolution must be at least 3, got {0}")]
    GridTooCoarse(u32),
    #[error("tuple for agent {k} is not a disagreement: the strategy answers round(p_{k})")]
    NotADisagreement { k: usize },
    #[error("strategy is not deterministic: two probes of the same tuple disagreed")]
    NonDeterministicStrategy,
    #[error("need a tuple for every one of the {n} agents, got {got}")]
    IncompleteTuples { n: usize, got: usize },
    #[error("assembled setting does not put the strategy strictly below every agent")]
    VerdictFailed,
    #[error(transparent)]
    Construct(#[from] ConstructError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Budget and determinism knobs for the probe searches.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Grid coordinates are `j/g` for `0 < j < g`. Must be at least 3 so
    /// both sides of 1/2 are probed; even values put 1/2 itself on the grid.
    pub grid_resolution: u32,
    /// Random probes tried per agent after the grid is exhausted.
    pub random_probes: usize,
    pub seed: u64,
    /// Hard cap on probes per agent per search phase.
    pub max_tuples_per_agent: usize,
}

impl SearchConfig {
    pub fn new(grid_resolution: u32, random_probes: usize, seed: u64) -> Result<Self, AuditError> {
        if grid_resolution < 3 {
            return Err(AuditError::GridTooCoarse(grid_resolution));
        }
        Ok(SearchConfig {
            grid_resolution,
            random_probes,
            seed,
            max_tuples_per_agent: 1_000_000,
        })
    }
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            grid_resolution: 10,
            random_probes: 200,
            seed: 0,
            max_tuples_per_agent: 1_000_000,
        }
    }
}

/// Memoizing wrapper around a strategy. Every tuple is evaluated once;
/// [`ProbeCache::recheck`] re-evaluates and reports a determinism breach.
pub struct ProbeCache<'a> {
    strategy: &'a dyn Strategy,
    cache: Mutex<HashMap<Vec<Prob>, Label>>,
}

impl<'a> ProbeCache<'a> {
    pub fn new(strategy: &'a dyn Strategy) -> Self {
        ProbeCache {
            strategy,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn probe(&self, tuple: &[Prob]) -> Label {
        let mut cache = self.cache.lock().expect("probe cache poisoned");
        if let Some(&label) = cache.get(tuple) {
            return label;
        }
        let label = self.strategy.decide(tuple);
        cache.insert(tuple.to_vec(), label);
        label
    }

    /// Fresh evaluation compared against the memo.
    pub fn recheck(&self, tuple: &[Prob]) -> Result<Label, AuditError> {
        let fresh = self.strategy.decide(tuple);
        let mut cache = self.cache.lock().expect("probe cache poisoned");
        match cache.get(tuple) {
            Some(&stored) if stored != fresh => Err(AuditError::NonDeterministicStrategy),
            _ => {
                cache.insert(tuple.to_vec(), fresh);
                Ok(fresh)
            }
        }
    }

    pub fn probes_used(&self) -> usize {
        self.cache.lock().expect("probe cache poisoned").len()
    }
}

impl Strategy for &ProbeCache<'_> {
    fn decide(&self, probs: &[Prob]) -> Label {
        self.probe(probs)
    }
}

/// Lexicographic tuples over the open grid `{1/g, ..., (g-1)/g}^n`, with an
/// optional coordinate pinned to 1/2.
struct GridTuples {
    coords: Vec<Prob>,
    indices: Vec<usize>,
    pinned: Option<usize>,
    done: bool,
}

impl GridTuples {
    fn open(n: usize, g: u32) -> Self {
        GridTuples {
            coords: (1..g)
                .map(|j| Prob::new(j as u64, g as u64).unwrap())
                .collect(),
            indices: vec![0; n],
            pinned: None,
            done: n == 0,
        }
    }

    fn pinned_at_half(n: usize, g: u32, k: usize) -> Self {
        let mut it = Self::open(n, g);
        it.pinned = Some(k);
        it
    }
}

impl Iterator for GridTuples {
    type Item = Vec<Prob>;

    fn next(&mut self) -> Option<Vec<Prob>> {
        if self.done {
            return None;
        }
        let tuple: Vec<Prob> = self
            .indices
            .iter()
            .enumerate()
            .map(|(pos, &i)| {
                if self.pinned == Some(pos) {
                    Prob::half()
                } else {
                    self.coords[i].clone()
                }
            })
            .collect();
        // advance the free coordinates, most significant first
        let mut pos = self.indices.len();
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            if self.pinned == Some(pos) {
                continue;
            }
            if self.indices[pos] + 1 < self.coords.len() {
                self.indices[pos] += 1;
                for later in pos + 1..self.indices.len() {
                    self.indices[later] = 0;
                }
                break;
            }
        }
        Some(tuple)
    }
}

fn rng_for(cfg: &SearchConfig, k: usize, phase: u64) -> ChaCha8Rng {
    let salt = (k as u64)
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(phase);
    ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(salt))
}

fn random_open_coord(rng: &mut ChaCha8Rng) -> Prob {
    let den = rng.gen_range(2..=97u64);
    let num = rng.gen_range(1..den);
    Prob::new(num, den).unwrap()
}

fn search_disagreement(
    cache: &ProbeCache<'_>,
    k: usize,
    n: usize,
    cfg: &SearchConfig,
) -> Option<Vec<Prob>> {
    let mut budget = cfg.max_tuples_per_agent;
    let hit =
        |tuple: &[Prob]| !tuple[k].is_half() && cache.probe(tuple) != tuple[k].round_half_up();
    for tuple in GridTuples::open(n, cfg.grid_resolution) {
        if budget == 0 {
            return None;
        }
        if tuple[k].is_half() {
            continue;
        }
        budget -= 1;
        if hit(&tuple) {
            return Some(tuple);
        }
    }
    let mut rng = rng_for(cfg, k, 1);
    for _ in 0..cfg.random_probes.min(budget) {
        let tuple: Vec<Prob> = (0..n)
            .map(|pos| loop {
                let p = random_open_coord(&mut rng);
                if pos != k || !p.is_half() {
                    return p;
                }
            })
            .collect();
        if hit(&tuple) {
            return Some(tuple);
        }
    }
    None
}

/// Result of hunting for a label flip among tuples pinning agent `k` at 1/2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HalfSplitOutcome {
    /// Tuples labeled 1 and 0 respectively, both with `p_k = 1/2`.
    Found {
        tuple_one: Vec<Prob>,
        tuple_zero: Vec<Prob>,
    },
    /// Every probed pinned tuple got the same label.
    Constant { alpha: Label },
}

fn search_half_split(
    cache: &ProbeCache<'_>,
    k: usize,
    n: usize,
    cfg: &SearchConfig,
) -> HalfSplitOutcome {
    let mut one: Option<Vec<Prob>> = None;
    let mut zero: Option<Vec<Prob>> = None;
    let mut budget = cfg.max_tuples_per_agent;
    let consider =
        |tuple: Vec<Prob>, one: &mut Option<Vec<Prob>>, zero: &mut Option<Vec<Prob>>| match cache
            .probe(&tuple)
        {
            Label::One if one.is_none() => *one = Some(tuple),
            Label::Zero if zero.is_none() => *zero = Some(tuple),
            _ => {}
        };
    for tuple in GridTuples::pinned_at_half(n, cfg.grid_resolution, k) {
        if budget == 0 {
            break;
        }
        budget -= 1;
        consider(tuple, &mut one, &mut zero);
        if one.is_some() && zero.is_some() {
            break;
        }
    }
    if !(one.is_some() && zero.is_some()) {
        let mut rng = rng_for(cfg, k, 2);
        for _ in 0..cfg.random_probes.min(budget) {
            let tuple: Vec<Prob> = (0..n)
                .map(|pos| {
                    if pos == k {
                        Prob::half()
                    } else {
                        random_open_coord(&mut rng)
                    }
                })
                .collect();
            consider(tuple, &mut one, &mut zero);
            if one.is_some() && zero.is_some() {
                break;
            }
        }
    }
    match (one, zero) {
        (Some(tuple_one), Some(tuple_zero)) => HalfSplitOutcome::Found {
            tuple_one,
            tuple_zero,
        },
        (Some(_), None) => HalfSplitOutcome::Constant { alpha: Label::One },
        (None, Some(_)) => HalfSplitOutcome::Constant { alpha: Label::Zero },
        (None, None) => unreachable!("at least one pinned tuple is always probed"),
    }
}

/// Searches for a tuple in `(0,1)^n` with `p_k != 1/2` on which the
/// strategy's output differs from `round(p_k)`: the full grid in
/// lexicographic order, then seeded random rationals. `None` means none
/// found within budget — not that none exists.
pub fn find_disagreement(
    strategy: &dyn Strategy,
    k: usize,
    n: usize,
    cfg: &SearchConfig,
) -> Option<Vec<Prob>> {
    search_disagreement(&ProbeCache::new(strategy), k, n, cfg)
}

/// Searches for two tuples pinning `p_k = 1/2` that the strategy labels 1
/// and 0 respectively. [`HalfSplitOutcome::Constant`] reports the single
/// label observed when no flip was found within budget.
pub fn find_half_split(
    strategy: &dyn Strategy,
    k: usize,
    n: usize,
    cfg: &SearchConfig,
) -> HalfSplitOutcome {
    search_half_split(&ProbeCache::new(strategy), k, n, cfg)
}

/// Realized predictor tuples of a setting, in point order.
fn realized_tuples(setting: &Setting) -> Result<Vec<Vec<Prob>>, EvalError> {
    let predictors = induce_all_predictors(setting)?;
    Ok(setting
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
        .collect())
}

fn transcript_for(
    cache: &ProbeCache<'_>,
    setting: &Setting,
) -> Result<Vec<ProbeRecord>, EvalError> {
    let mut records: Vec<ProbeRecord> = Vec::new();
    for tuple in realized_tuples(setting)? {
        if records.iter().any(|r| r.tuple == tuple) {
            continue;
        }
        let label = cache.probe(&tuple);
        records.push(ProbeRecord { tuple, label });
    }
    records.sort_by(|a, b| a.tuple.cmp(&b.tuple));
    Ok(records)
}

fn assemble_witness(
    cache: &ProbeCache<'_>,
    setting: Setting,
    spec: Option<StrategySpec>,
    construction: ConstructionTrace,
) -> Result<Witness, AuditError> {
    let evaluation = evaluate(&setting, &cache)?;
    for acc in &evaluation.agent_accuracies {
        if evaluation.strategy_accuracy >= *acc {
            return Err(AuditError::VerdictFailed);
        }
    }
    let transcript = transcript_for(cache, &setting)?;
    Ok(Witness {
        strategy: StrategyDescriptor {
            spec,
            transcript: Some(transcript),
        },
        accuracies: WitnessAccuracies {
            agents: evaluation.agent_accuracies,
            strategy: evaluation.strategy_accuracy,
        },
        construction,
        verdict: WitnessVerdict::StrategyBelowAllAgents,
        setting,
    })
}

fn build_witness_cached(
    cache: &ProbeCache<'_>,
    n: usize,
    tuples: &[Vec<Prob>],
    spec: Option<StrategySpec>,
) -> Result<Witness, AuditError> {
    if tuples.len() != n {
        return Err(AuditError::IncompleteTuples {
            n,
            got: tuples.len(),
        });
    }
    let mut pieces = Vec::with_capacity(n);
    for (k, tuple) in tuples.iter().enumerate() {
        let c_value = cache.recheck(tuple)?;
        if tuple[k].is_half() || c_value == tuple[k].round_half_up() {
            return Err(AuditError::NotADisagreement { k });
        }
        pieces.push(disagreement_setting(n, k, tuple, c_value)?);
    }
    let weights = GlueWeights::uniform(n);
    let setting = glue(&pieces, &weights)?;
    let construction = ConstructionTrace::Prop4Glue {
        weights: weights.weights().to_vec(),
        tuples: tuples.to_vec(),
    };
    assemble_witness(cache, setting, spec, construction)
}

/// Compiles one certified disagreement tuple per agent into a glued witness
/// setting on which the strategy is strictly below every agent.
///
/// `tuples[k]` must satisfy `tuples[k][k] != 1/2` and
/// `strategy(tuples[k]) != round(tuples[k][k])`; each tuple is re-probed,
/// and a flipped answer fails the build.
pub fn build_witness(
    strategy: &dyn Strategy,
    n: usize,
    tuples: &[Vec<Prob>],
) -> Result<Witness, AuditError> {
    build_witness_cached(&ProbeCache::new(strategy), n, tuples, None)
}

/// Default label-probability gap for the uninformed-agent piece of a
/// tie-violation witness.
pub fn default_tie_epsilon() -> Prob {
    Prob::new(1, 4).unwrap()
}

fn build_tie_witness_cached(
    cache: &ProbeCache<'_>,
    n: usize,
    k: usize,
    tuple_one: &[Prob],
    tuple_zero: &[Prob],
    spec: Option<StrategySpec>,
) -> Result<TieBuildOutcome, AuditError> {
    let epsilon = default_tie_epsilon();
    let first = uninformed_agent_setting(n, k, &epsilon)?;

    // the construction only separates if the strategy defers to agent k on
    // the first piece's realized tuples; a deviation there is itself a
    // disagreement we can recycle
    for tuple in realized_tuples(&first)? {
        let expected = tuple[k].round_half_up();
        if cache.recheck(&tuple)? != expected {
            return Ok(TieBuildOutcome::NewDisagreement { k, tuple });
        }
    }

    let second = half_split_setting(n, k, tuple_one, tuple_zero)?;
    if cache.recheck(tuple_one)? != Label::One || cache.recheck(tuple_zero)? != Label::Zero {
        return Err(AuditError::NonDeterministicStrategy);
    }

    let eval_first = evaluate(&first, &cache)?;
    let eval_second = evaluate(&second, &cache)?;
    let lambda = effective_tie_weight(
        k,
        &eval_first.agent_accuracies,
        &eval_first.strategy_accuracy,
        &eval_second.agent_accuracies,
        &eval_second.strategy_accuracy,
    )?;
    let weights = GlueWeights::new(vec![lambda.clone(), lambda.complement()])?;
    let setting = glue(&[first, second], &weights)?;
    let construction = ConstructionTrace::Prop5Glue {
        k,
        epsilon,
        weights: weights.weights().to_vec(),
        p_tuple: tuple_one.to_vec(),
        q_tuple: tuple_zero.to_vec(),
    };
    let witness = assemble_witness(cache, setting, spec, construction)?;
    Ok(TieBuildOutcome::Witness(Box::new(witness)))
}

enum TieBuildOutcome {
    Witness(Box<Witness>),
    /// The strategy failed to defer on the first piece; the offending tuple
    /// is a fresh clause-style disagreement for `k`.
    NewDisagreement {
        k: usize,
        tuple: Vec<Prob>,
    },
}

/// What an audit concluded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AuditOutcome {
    /// A verified counterexample setting.
    WitnessFound { witness: Box<Witness> },
    /// Every probe was consistent with deferring to agent `k` (with tie
    /// label `alpha` where observed). Evidence within budget, not proof.
    ConsistentWithinBudget {
        k: usize,
        alpha: Option<Label>,
        probes_used: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub n: usize,
    pub config: SearchConfig,
    #[serde(flatten)]
    pub outcome: AuditOutcome,
}

/// Audits a strategy of arity `n`: hunts disagreement tuples for every
/// agent and compiles them into a witness; for agents with no disagreement
/// found, hunts a tie flip and compiles the two-piece tie witness; if some
/// agent survives both hunts, reports consistency with deferral to that
/// agent within the probe budget.
pub fn audit(
    strategy: &dyn Strategy,
    n: usize,
    cfg: &SearchConfig,
) -> Result<AuditReport, AuditError> {
    audit_inner(strategy, n, None, cfg)
}

/// [`audit`] for a built-in strategy, embedding its spec in any witness.
pub fn audit_builtin(
    strategy: &BuiltinStrategy,
    cfg: &SearchConfig,
) -> Result<AuditReport, AuditError> {
    audit_inner(
        strategy,
        strategy.arity(),
        Some(strategy.spec().clone()),
        cfg,
    )
}

fn audit_inner(
    strategy: &dyn Strategy,
    n: usize,
    spec: Option<StrategySpec>,
    cfg: &SearchConfig,
) -> Result<AuditReport, AuditError> {
    if cfg.grid_resolution < 3 {
        return Err(AuditError::GridTooCoarse(cfg.grid_resolution));
    }
    let cache = ProbeCache::new(strategy);
    let mut pool: Vec<Option<Vec<Prob>>> = (0..n)
        .map(|k| search_disagreement(&cache, k, n, cfg))
        .collect();

    let report = |outcome| {
        Ok(AuditReport {
            n,
            config: cfg.clone(),
            outcome,
        })
    };

    loop {
        if pool.iter().all(Option::is_some) {
            let tuples: Vec<Vec<Prob>> = pool.into_iter().map(Option::unwrap).collect();
            let witness = build_witness_cached(&cache, n, &tuples, spec)?;
            return report(AuditOutcome::WitnessFound {
                witness: Box::new(witness),
            });
        }
        let k = pool
            .iter()
            .position(Option::is_none)
            .expect("some agent is pending");
        match search_half_split(&cache, k, n, cfg) {
            HalfSplitOutcome::Constant { alpha } => {
                // agent k survived both hunts
                return report(AuditOutcome::ConsistentWithinBudget {
                    k,
                    alpha: Some(alpha),
                    probes_used: cache.probes_used(),
                });
            }
            HalfSplitOutcome::Found {
                tuple_one,
                tuple_zero,
            } => {
                match build_tie_witness_cached(&cache, n, k, &tuple_one, &tuple_zero, spec.clone())?
                {
                    TieBuildOutcome::Witness(witness) => {
                        return report(AuditOutcome::WitnessFound { witness });
                    }
                    TieBuildOutcome::NewDisagreement { k, tuple } => {
                        pool[k] = Some(tuple);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::{make_strategy, zoo};
    use crate::witness::verify_witness;

    fn p(s: &str) -> Prob {
        s.parse().unwrap()
    }

    fn tuple(parts: &[&str]) -> Vec<Prob> {
        parts.iter().map(|s| p(s)).collect()
    }

    fn cfg() -> SearchConfig {
        SearchConfig::new(10, 100, 7).unwrap()
    }

    #[test]
    fn config_rejects_coarse_grids() {
        assert!(matches!(
            SearchConfig::new(2, 10, 0),
            Err(AuditError::GridTooCoarse(2))
        ));
    }

    #[test]
    fn grid_enumeration_is_open_and_lexicographic() {
        let tuples: Vec<Vec<Prob>> = GridTuples::open(2, 4).collect();
        assert_eq!(tuples.len(), 9);
        assert_eq!(tuples[0], tuple(&["1/4", "1/4"]));
        assert_eq!(tuples[1], tuple(&["1/4", "1/2"]));
        assert_eq!(tuples[8], tuple(&["3/4", "3/4"]));

        let pinned: Vec<Vec<Prob>> = GridTuples::pinned_at_half(2, 4, 0).collect();
        assert_eq!(pinned.len(), 3);
        assert!(pinned.iter().all(|t| t[0].is_half()));
    }

    #[test]
    fn finds_disagreements_for_averaging() {
        let avg = make_strategy(&StrategySpec::RoundAverage, 2).unwrap();
        let found = find_disagreement(&avg, 0, 2, &cfg()).expect("averaging must disagree");
        assert!(!found[0].is_half());
        assert_ne!(avg.decide(&found), found[0].round_half_up());
        // the first hit in lexicographic grid order
        assert_eq!(found, tuple(&["1/10", "9/10"]));
    }

    #[test]
    fn finds_disagreements_for_most_confident() {
        let mc = make_strategy(&StrategySpec::MostConfident, 2).unwrap();
        let found = find_disagreement(&mc, 0, 2, &cfg()).expect("most-confident must disagree");
        assert_ne!(mc.decide(&found), found[0].round_half_up());
    }

    #[test]
    fn deferral_yields_no_disagreement() {
        let defer = make_strategy(&StrategySpec::DeferTo { k: 0 }, 2).unwrap();
        assert_eq!(find_disagreement(&defer, 0, 2, &cfg()), None);
    }

    #[test]
    fn half_split_outcomes() {
        // defers to agent 1 exactly when agent 0 is at 1/2
        let tie_sensitive = |probs: &[Prob]| {
            if probs[0].is_half() {
                probs[1].round_half_up()
            } else {
                probs[0].round_half_up()
            }
        };
        match find_half_split(&tie_sensitive, 0, 2, &cfg()) {
            HalfSplitOutcome::Found {
                tuple_one,
                tuple_zero,
            } => {
                assert!(tuple_one[0].is_half() && tuple_zero[0].is_half());
                assert_eq!(tie_sensitive(&tuple_one), Label::One);
                assert_eq!(tie_sensitive(&tuple_zero), Label::Zero);
            }
            other => panic!("expected a flip, got {other:?}"),
        }

        let defer = make_strategy(&StrategySpec::DeferTo { k: 0 }, 2).unwrap();
        assert_eq!(
            find_half_split(&defer, 0, 2, &cfg()),
            HalfSplitOutcome::Constant { alpha: Label::One }
        );

        let constant_zero = |_: &[Prob]| Label::Zero;
        assert_eq!(
            find_half_split(&constant_zero, 0, 2, &cfg()),
            HalfSplitOutcome::Constant { alpha: Label::Zero }
        );
    }

    #[test]
    fn builds_the_worked_witness() {
        let avg = make_strategy(&StrategySpec::RoundAverage, 2).unwrap();
        let tuples = vec![tuple(&["3/5", "1/10"]), tuple(&["9/10", "2/5"])];
        let witness = build_witness(&avg, 2, &tuples).unwrap();
        assert_eq!(witness.setting.points().len(), 6);
        let min_agent = witness.accuracies.agents.iter().min().unwrap();
        assert!(witness.accuracies.strategy < *min_agent);
        verify_witness(&witness, Some(&avg)).unwrap();
        // also verifiable from the transcript alone
        verify_witness(&witness, None).unwrap();
    }

    #[test]
    fn rejects_non_disagreements() {
        let avg = make_strategy(&StrategySpec::RoundAverage, 2).unwrap();
        // averaging agrees with round(p_0) here
        let tuples = vec![tuple(&["3/5", "3/5"]), tuple(&["9/10", "2/5"])];
        assert_eq!(
            build_witness(&avg, 2, &tuples).unwrap_err(),
            AuditError::NotADisagreement { k: 0 }
        );
        assert!(matches!(
            build_witness(&avg, 2, &tuples[..1]),
            Err(AuditError::IncompleteTuples { n: 2, got: 1 })
        ));
    }

    #[test]
    fn audit_indicts_the_aggregating_strategies() {
        for n in [2usize, 3] {
            for spec in [
                StrategySpec::RoundAverage,
                StrategySpec::MajorityVote,
                StrategySpec::MostConfident,
            ] {
                let strategy = make_strategy(&spec, n).unwrap();
                let report = audit_builtin(&strategy, &cfg()).unwrap();
                match report.outcome {
                    AuditOutcome::WitnessFound { witness } => {
                        assert_eq!(witness.strategy.spec.as_ref(), Some(&spec));
                        verify_witness(&witness, Some(&strategy)).unwrap();
                    }
                    other => panic!("expected witness for {spec:?} at n={n}, got {other:?}"),
                }
            }
        }
    }

    #[test]
    fn audit_clears_deferral_and_certainty_override() {
        for n in [2usize, 3] {
            for k in 0..n {
                let defer = make_strategy(&StrategySpec::DeferTo { k }, n).unwrap();
                let report = audit_builtin(&defer, &cfg()).unwrap();
                assert!(matches!(
                    report.outcome,
                    AuditOutcome::ConsistentWithinBudget { k: kk, alpha: Some(Label::One), .. }
                        if kk == k
                ));

                let over =
                    make_strategy(&StrategySpec::CertainOverride { k, priority: None }, n).unwrap();
                let report = audit_builtin(&over, &cfg()).unwrap();
                assert!(matches!(
                    report.outcome,
                    AuditOutcome::ConsistentWithinBudget { k: kk, alpha: Some(Label::One), .. }
                        if kk == k
                ));
            }
        }
    }

    #[test]
    fn audit_builds_tie_witnesses() {
        // clause-style deferral to agent 0 everywhere except at the tie,
        // where it copies agent 1: only the tie hunt can catch this
        let tie_sensitive = |probs: &[Prob]| {
            if probs[0].is_half() {
                probs[1].round_half_up()
            } else {
                probs[0].round_half_up()
            }
        };
        let report = audit(&tie_sensitive, 2, &cfg()).unwrap();
        match report.outcome {
            AuditOutcome::WitnessFound { witness } => {
                assert!(matches!(
                    witness.construction,
                    ConstructionTrace::Prop5Glue { k: 0, .. }
                ));
                verify_witness(&witness, Some(&tie_sensitive)).unwrap();
                verify_witness(&witness, None).unwrap();
            }
            other => panic!("expected tie witness, got {other:?}"),
        }
    }

    #[test]
    fn audit_is_deterministic() {
        let avg = make_strategy(&StrategySpec::RoundAverage, 3).unwrap();
        let a = audit_builtin(&avg, &cfg()).unwrap();
        let b = audit_builtin(&avg, &cfg()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn verification_catches_tampering_and_strategy_swaps() {
        let avg = make_strategy(&StrategySpec::RoundAverage, 2).unwrap();
        let report = audit_builtin(&avg, &cfg()).unwrap();
        let witness = match report.outcome {
            AuditOutcome::WitnessFound { witness } => *witness,
            other => panic!("expected witness, got {other:?}"),
        };

        let mut tampered = witness.clone();
        tampered.accuracies.strategy = p("1");
        assert!(matches!(
            verify_witness(&tampered, Some(&avg)),
            Err(crate::witness::VerifyError::Tampered(_))
        ));

        let mut tampered = witness.clone();
        tampered.accuracies.agents[0] = p("1/2");
        assert!(matches!(
            verify_witness(&tampered, Some(&avg)),
            Err(crate::witness::VerifyError::Tampered(_))
        ));

        // pairing the witness with a different strategy must not verify
        let majority = make_strategy(&StrategySpec::MajorityVote, 2).unwrap();
        assert!(verify_witness(&witness, Some(&majority)).is_err());
    }

    #[test]
    fn witnesses_survive_serialization() {
        let avg = make_strategy(&StrategySpec::RoundAverage, 2).unwrap();
        let report = audit_builtin(&avg, &cfg()).unwrap();
        let witness = match report.outcome {
            AuditOutcome::WitnessFound { witness } => *witness,
            other => panic!("expected witness, got {other:?}"),
        };
        let json = serde_json::to_string(&witness).unwrap();
        assert!(json.contains(r#""kind":"prop4_glue""#));
        assert!(json.contains(r#""verdict":"strategy_below_all_agents""#));
        let back: Witness = serde_json::from_str(&json).unwrap();
        assert_eq!(back, witness);
        verify_witness(&back, None).unwrap();
    }

    #[test]
    fn zoo_never_probes_inconsistently() {
        // replaying the whole grid through the cache must never trip the
        // determinism recheck
        for strategy in zoo(2) {
            let cache = ProbeCache::new(&strategy);
            for t in GridTuples::open(2, 6) {
                cache.probe(&t);
            }
            for t in GridTuples::open(2, 6) {
                cache.recheck(&t).unwrap();
            }
        }
    }
}
