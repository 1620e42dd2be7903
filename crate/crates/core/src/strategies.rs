//! Search strategies behind a common suggest/observe loop.
//!
//! Every strategy owns a ChaCha8 generator seeded from the run seed, so a
//! trajectory is a pure function of the seed and the rewards it observes.
//! Random, evolution warmup and TPE startup all draw through
//! [`SpaceSpec::sample_uniform`] on that generator, which makes their
//! initial suggestions identical for equal seeds.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::search_space::{Genotype, SpaceSpec};

pub trait SearchStrategy: Send {
    fn kind(&self) -> StrategyKind;

    /// Next genotype to evaluate.
    fn suggest(&mut self) -> Genotype;

    /// Reports the reward for the genotype returned by the preceding
    /// [`suggest`](Self::suggest).
    fn observe(&mut self, g: &Genotype, reward: f64);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Random,
    Evolution,
    Tpe,
    PolicyRl,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::PolicyRl,
        StrategyKind::Evolution,
        StrategyKind::Random,
        StrategyKind::Tpe,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StrategyKind::Random => "random",
            StrategyKind::Evolution => "evolution",
            StrategyKind::Tpe => "tpe",
            StrategyKind::PolicyRl => "policy_rl",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(StrategyKind::Random),
            "evolution" => Ok(StrategyKind::Evolution),
            "tpe" => Ok(StrategyKind::Tpe),
            "policy_rl" => Ok(StrategyKind::PolicyRl),
            other => Err(Error::Config(format!(
                "unknown strategy {other:?} (expected random, evolution, tpe or policy_rl)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionParams {
    pub population_size: usize,
    pub sample_size: usize,
}

impl Default for EvolutionParams {
    fn default() -> Self {
        EvolutionParams {
            population_size: 10,
            sample_size: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TpeParams {
    pub gamma: f64,
    pub n_startup: usize,
    pub n_candidates: usize,
}

impl Default for TpeParams {
    fn default() -> Self {
        TpeParams {
            gamma: 0.25,
            n_startup: 10,
            n_candidates: 24,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyParams {
    pub learning_rate: f64,
    pub baseline_decay: f64,
}

impl Default for PolicyParams {
    fn default() -> Self {
        PolicyParams {
            learning_rate: 1.0,
            baseline_decay: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyParams {
    pub evolution: EvolutionParams,
    pub tpe: TpeParams,
    pub policy: PolicyParams,
}

impl StrategyParams {
    pub fn validate(&self) -> Result<()> {
        let e = &self.evolution;
        if e.population_size == 0 || e.sample_size == 0 {
            return Err(Error::Config(
                "evolution population_size and sample_size must be positive".into(),
            ));
        }
        let t = &self.tpe;
        if !(t.gamma > 0.0 && t.gamma < 1.0) {
            return Err(Error::Config(format!("tpe gamma must lie in (0, 1), got {}", t.gamma)));
        }
        if t.n_candidates == 0 {
            return Err(Error::Config("tpe n_candidates must be positive".into()));
        }
        let p = &self.policy;
        if !(p.learning_rate.is_finite() && p.learning_rate > 0.0) {
            return Err(Error::Config("policy learning_rate must be positive".into()));
        }
        if !(0.0..=1.0).contains(&p.baseline_decay) {
            return Err(Error::Config("policy baseline_decay must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

pub fn build_strategy(
    kind: StrategyKind,
    params: &StrategyParams,
    space: &SpaceSpec,
    seed: u64,
) -> Box<dyn SearchStrategy> {
    match kind {
        StrategyKind::Random => Box::new(RandomSearch::new(space.clone(), seed)),
        StrategyKind::Evolution => {
            Box::new(RegularizedEvolution::new(space.clone(), params.evolution, seed))
        }
        StrategyKind::Tpe => Box::new(Tpe::new(space.clone(), params.tpe, seed)),
        StrategyKind::PolicyRl => Box::new(PolicyGradient::new(space.clone(), params.policy, seed)),
    }
}

// ---------------------------------------------------------------------------

/// Uniform sampling with replacement.
#[derive(Debug, Clone)]
pub struct RandomSearch {
    space: SpaceSpec,
    rng: ChaCha8Rng,
}

impl RandomSearch {
    pub fn new(space: SpaceSpec, seed: u64) -> Self {
        RandomSearch {
            space,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl SearchStrategy for RandomSearch {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Random
    }

    fn suggest(&mut self) -> Genotype {
        self.space.sample_uniform(&mut self.rng)
    }

    fn observe(&mut self, _g: &Genotype, _reward: f64) {}
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub genotype: Genotype,
    pub reward: f64,
}

/// Aging evolution: a FIFO population, tournament selection over a random
/// subset, single-slot mutation of the winner, eviction of the oldest.
#[derive(Debug, Clone)]
pub struct RegularizedEvolution {
    space: SpaceSpec,
    params: EvolutionParams,
    rng: ChaCha8Rng,
    population: VecDeque<Member>,
    history: Vec<Member>,
    last_parent: Option<Genotype>,
}

impl RegularizedEvolution {
    pub fn new(space: SpaceSpec, params: EvolutionParams, seed: u64) -> Self {
        RegularizedEvolution {
            space,
            params,
            rng: ChaCha8Rng::seed_from_u64(seed),
            population: VecDeque::with_capacity(params.population_size + 1),
            history: Vec::new(),
            last_parent: None,
        }
    }

    /// Oldest first.
    pub fn population(&self) -> &VecDeque<Member> {
        &self.population
    }

    pub fn history(&self) -> &[Member] {
        &self.history
    }

    /// Tournament winner behind the latest suggestion, `None` during warmup.
    pub fn last_parent(&self) -> Option<&Genotype> {
        self.last_parent.as_ref()
    }

    pub fn in_warmup(&self) -> bool {
        self.population.len() < self.params.population_size
    }
}

impl SearchStrategy for RegularizedEvolution {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Evolution
    }

    fn suggest(&mut self) -> Genotype {
        if self.in_warmup() {
            self.last_parent = None;
            return self.space.sample_uniform(&mut self.rng);
        }
        let n = self.population.len();
        let k = self.params.sample_size.min(n);
        let mut contestants = index::sample(&mut self.rng, n, k).into_vec();
        // Ties resolve to the earliest-inserted member.
        contestants.sort_unstable();
        let mut winner = contestants[0];
        for &i in &contestants[1..] {
            if self.population[i].reward > self.population[winner].reward {
                winner = i;
            }
        }
        let parent = self.population[winner].genotype.clone();
        let child = self.space.mutate_one_slot(&parent, &mut self.rng);
        self.last_parent = Some(parent);
        child
    }

    fn observe(&mut self, g: &Genotype, reward: f64) {
        let member = Member {
            genotype: g.clone(),
            reward,
        };
        self.population.push_back(member.clone());
        self.history.push(member);
        while self.population.len() > self.params.population_size {
            self.population.pop_front();
        }
    }
}

// ---------------------------------------------------------------------------

/// Per-slot categorical densities fitted to a history split.
#[derive(Debug, Clone, PartialEq)]
pub struct TpeModel {
    pub good_size: usize,
    pub bad_size: usize,
    /// `good[i][v]`: smoothed probability of choice `v` at slot `i` among the
    /// good observations.
    pub good: Vec<Vec<f64>>,
    pub bad: Vec<Vec<f64>>,
}

impl TpeModel {
    /// Splits `history` into the top `ceil(gamma * n)` observations by reward
    /// (ties favour earlier observations) and the rest, then fits add-one
    /// smoothed categoricals to each part.
    pub fn fit(history: &[Member], gamma: f64, space: &SpaceSpec) -> TpeModel {
        let n = history.len();
        let good_size = ((gamma * n as f64).ceil() as usize).min(n);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| history[b].reward.total_cmp(&history[a].reward));
        let n_choices = space.num_choices();
        let n_slots = space.num_slots();
        let mut good = vec![vec![0usize; n_choices]; n_slots];
        let mut bad = vec![vec![0usize; n_choices]; n_slots];
        for (rank, &i) in order.iter().enumerate() {
            let counts = if rank < good_size { &mut good } else { &mut bad };
            for (slot, &v) in history[i].genotype.slots().iter().enumerate() {
                counts[slot][v as usize] += 1;
            }
        }
        let smooth = |counts: Vec<Vec<usize>>, total: usize| -> Vec<Vec<f64>> {
            counts
                .into_iter()
                .map(|row| {
                    row.into_iter()
                        .map(|c| (c + 1) as f64 / (total + n_choices) as f64)
                        .collect()
                })
                .collect()
        };
        TpeModel {
            good_size,
            bad_size: n - good_size,
            good: smooth(good, good_size),
            bad: smooth(bad, n - good_size),
        }
    }

    /// `prod_i l_i(v_i) / g_i(v_i)`.
    pub fn score(&self, g: &Genotype) -> f64 {
        g.slots()
            .iter()
            .enumerate()
            .map(|(i, &v)| self.good[i][v as usize] / self.bad[i][v as usize])
            .product()
    }

    pub fn sample_good<R: Rng + ?Sized>(&self, rng: &mut R) -> Genotype {
        Genotype::new(
            self.good
                .iter()
                .map(|probs| sample_categorical(probs, rng) as u8)
                .collect(),
        )
    }
}

/// Record of one model-based TPE suggestion.
#[derive(Debug, Clone, PartialEq)]
pub struct TpeStep {
    pub observations: usize,
    pub model: TpeModel,
    /// Candidates with their scores, in draw order.
    pub candidates: Vec<(Genotype, f64)>,
    pub chosen: usize,
}

#[derive(Debug, Clone)]
pub struct Tpe {
    space: SpaceSpec,
    params: TpeParams,
    rng: ChaCha8Rng,
    history: Vec<Member>,
    last_step: Option<TpeStep>,
}

impl Tpe {
    pub fn new(space: SpaceSpec, params: TpeParams, seed: u64) -> Self {
        Tpe {
            space,
            params,
            rng: ChaCha8Rng::seed_from_u64(seed),
            history: Vec::new(),
            last_step: None,
        }
    }

    /// Details of the latest suggestion, `None` while still in startup.
    pub fn last_step(&self) -> Option<&TpeStep> {
        self.last_step.as_ref()
    }

    pub fn history(&self) -> &[Member] {
        &self.history
    }
}

impl SearchStrategy for Tpe {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Tpe
    }

    fn suggest(&mut self) -> Genotype {
        if self.history.len() < self.params.n_startup.max(1) {
            self.last_step = None;
            return self.space.sample_uniform(&mut self.rng);
        }
        let model = TpeModel::fit(&self.history, self.params.gamma, &self.space);
        let candidates: Vec<(Genotype, f64)> = (0..self.params.n_candidates)
            .map(|_| {
                let c = model.sample_good(&mut self.rng);
                let s = model.score(&c);
                (c, s)
            })
            .collect();
        let mut chosen = 0;
        for (i, (c, s)) in candidates.iter().enumerate().skip(1) {
            let (best, best_s) = &candidates[chosen];
            // Equal scores resolve to the lowest arch id, i.e. the
            // lexicographically smallest genotype.
            if *s > *best_s || (*s == *best_s && c < best) {
                chosen = i;
            }
        }
        let pick = candidates[chosen].0.clone();
        self.last_step = Some(TpeStep {
            observations: self.history.len(),
            model,
            candidates,
            chosen,
        });
        pick
    }

    fn observe(&mut self, g: &Genotype, reward: f64) {
        self.history.push(Member {
            genotype: g.clone(),
            reward,
        });
    }
}

// ---------------------------------------------------------------------------

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Score-function step for one slot: `lr * advantage * d log pi(chosen) / d logits`,
/// i.e. `lr * a * (1 - pi(chosen))` on the chosen entry and `-lr * a * pi(v)`
/// elsewhere.
pub fn reinforce_step(logits: &[f64], chosen: usize, lr: f64, advantage: f64) -> Vec<f64> {
    softmax(logits)
        .into_iter()
        .enumerate()
        .map(|(v, p)| {
            let indicator = if v == chosen { 1.0 } else { 0.0 };
            lr * advantage * (indicator - p)
        })
        .collect()
}

/// Independent per-slot categorical policy trained with REINFORCE and an
/// exponential-moving-average baseline.
#[derive(Debug, Clone)]
pub struct PolicyGradient {
    space: SpaceSpec,
    params: PolicyParams,
    rng: ChaCha8Rng,
    logits: Vec<Vec<f64>>,
    baseline: Option<f64>,
}

impl PolicyGradient {
    pub fn new(space: SpaceSpec, params: PolicyParams, seed: u64) -> Self {
        let logits = vec![vec![0.0; space.num_choices()]; space.num_slots()];
        PolicyGradient {
            space,
            params,
            rng: ChaCha8Rng::seed_from_u64(seed),
            logits,
            baseline: None,
        }
    }

    pub fn logits(&self) -> &[Vec<f64>] {
        &self.logits
    }

    pub fn set_logits(&mut self, logits: Vec<Vec<f64>>) {
        assert_eq!(logits.len(), self.space.num_slots());
        self.logits = logits;
    }

    pub fn baseline(&self) -> Option<f64> {
        self.baseline
    }

    pub fn set_baseline(&mut self, baseline: Option<f64>) {
        self.baseline = baseline;
    }

    pub fn probabilities(&self) -> Vec<Vec<f64>> {
        self.logits.iter().map(|l| softmax(l)).collect()
    }

    /// Probability of sampling exactly `g`.
    pub fn probability_of(&self, g: &Genotype) -> f64 {
        self.logits
            .iter()
            .zip(g.slots())
            .map(|(l, &v)| softmax(l)[v as usize])
            .product()
    }

    /// Applies one REINFORCE update. The first reward seeds the baseline, so
    /// it produces a zero advantage.
    pub fn update(&mut self, g: &Genotype, reward: f64) {
        let baseline = *self.baseline.get_or_insert(reward);
        let advantage = reward - baseline;
        if advantage != 0.0 {
            for (logits, &v) in self.logits.iter_mut().zip(g.slots()) {
                let step = reinforce_step(logits, v as usize, self.params.learning_rate, advantage);
                for (l, d) in logits.iter_mut().zip(step) {
                    *l += d;
                }
            }
        }
        let decay = self.params.baseline_decay;
        self.baseline = Some(decay * baseline + (1.0 - decay) * reward);
    }
}

impl SearchStrategy for PolicyGradient {
    fn kind(&self) -> StrategyKind {
        StrategyKind::PolicyRl
    }

    fn suggest(&mut self) -> Genotype {
        let rng = &mut self.rng;
        Genotype::new(
            self.logits
                .iter()
                .map(|l| sample_categorical(&softmax(l), rng) as u8)
                .collect(),
        )
    }

    fn observe(&mut self, g: &Genotype, reward: f64) {
        self.update(g, reward);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> Genotype {
        s.parse().unwrap()
    }

    fn member(s: &str, reward: f64) -> Member {
        Member {
            genotype: g(s),
            reward,
        }
    }

    #[test]
    fn strategy_names_round_trip() {
        for k in StrategyKind::ALL {
            assert_eq!(k.as_str().parse::<StrategyKind>().unwrap(), k);
        }
        assert!("annealing".parse::<StrategyKind>().is_err());
    }

    #[test]
    fn random_is_reproducible_and_ignores_rewards() {
        let space = SpaceSpec::default();
        let mut a = RandomSearch::new(space.clone(), 5);
        let mut b = RandomSearch::new(space, 5);
        for i in 0..50 {
            let x = a.suggest();
            let y = b.suggest();
            assert_eq!(x, y);
            a.observe(&x, i as f64);
            b.observe(&y, -(i as f64));
        }
    }

    #[test]
    fn evolution_warmup_matches_random_then_mutates() {
        let space = SpaceSpec::default();
        let mut evo = RegularizedEvolution::new(space.clone(), EvolutionParams::default(), 9);
        let mut rnd = RandomSearch::new(space, 9);
        for i in 0..10 {
            let x = evo.suggest();
            assert_eq!(x, rnd.suggest());
            assert!(evo.last_parent().is_none());
            evo.observe(&x, i as f64 / 10.0);
        }
        for _ in 0..40 {
            let members: Vec<_> = evo.population().iter().map(|m| m.genotype.clone()).collect();
            let x = evo.suggest();
            let parent = evo.last_parent().unwrap().clone();
            assert!(members.contains(&parent));
            assert_eq!(parent.hamming(&x), 1);
            evo.observe(&x, 0.5);
            assert_eq!(evo.population().len(), 10);
        }
        assert_eq!(evo.history().len(), 50);
    }

    #[test]
    fn evolution_evicts_oldest() {
        let space = SpaceSpec::single_stage(2);
        let params = EvolutionParams {
            population_size: 2,
            sample_size: 2,
        };
        let mut evo = RegularizedEvolution::new(space, params, 0);
        evo.observe(&g("00"), 0.1);
        evo.observe(&g("11"), 0.2);
        evo.observe(&g("22"), 0.3);
        let pop: Vec<_> = evo.population().iter().map(|m| m.genotype.to_string()).collect();
        assert_eq!(pop, ["11", "22"]);
    }

    #[test]
    fn evolution_tournament_takes_best_with_full_sample() {
        let space = SpaceSpec::single_stage(2);
        let params = EvolutionParams {
            population_size: 3,
            sample_size: 3,
        };
        let mut evo = RegularizedEvolution::new(space, params, 4);
        evo.observe(&g("00"), 0.5);
        evo.observe(&g("11"), 0.9);
        evo.observe(&g("22"), 0.9);
        for _ in 0..20 {
            evo.suggest();
            assert_eq!(evo.last_parent().unwrap(), &g("11"));
        }
    }

    #[test]
    fn tpe_startup_matches_random() {
        let space = SpaceSpec::default();
        let mut tpe = Tpe::new(space.clone(), TpeParams::default(), 21);
        let mut rnd = RandomSearch::new(space, 21);
        for _ in 0..10 {
            let x = tpe.suggest();
            assert_eq!(x, rnd.suggest());
            assert!(tpe.last_step().is_none());
            tpe.observe(&x, 0.3);
        }
        tpe.suggest();
        assert!(tpe.last_step().is_some());
    }

    #[test]
    fn tpe_hand_example() {
        // Eight observations on a 2-slot space; gamma 0.25 puts the top
        // ceil(2) = 2 rewards (0.9 then the earlier of the two 0.8s) in the
        // good set.
        let space = SpaceSpec::single_stage(2);
        let history = vec![
            member("00", 0.1),
            member("12", 0.8),
            member("21", 0.3),
            member("10", 0.9),
            member("02", 0.8),
            member("22", 0.2),
            member("11", 0.4),
            member("01", 0.5),
        ];
        let m = TpeModel::fit(&history, 0.25, &space);
        assert_eq!((m.good_size, m.bad_size), (2, 6));
        // Good slot 0 values {1, 1}: counts (0, 2, 0) -> (1, 3, 1) / 5.
        let l0 = [0.2, 0.6, 0.2];
        // Bad slot 0 values {0, 2, 0, 2, 1, 0}: counts (3, 1, 2) -> (4, 2, 3) / 9.
        let g0 = [4.0 / 9.0, 2.0 / 9.0, 3.0 / 9.0];
        for v in 0..3 {
            assert!((m.good[0][v] - l0[v]).abs() < 1e-15);
            assert!((m.bad[0][v] - g0[v]).abs() < 1e-15);
        }
        // Good slot 1 values {2, 0}: (2, 1, 2) / 5. Bad slot 1 values
        // {0, 1, 2, 2, 1, 1}: (2, 4, 3) / 9.
        let l1 = [0.4, 0.2, 0.4];
        let g1 = [2.0 / 9.0, 4.0 / 9.0, 3.0 / 9.0];
        let want = (l0[1] / g0[1]) * (l1[2] / g1[2]);
        assert!((m.score(&g("12")) - want).abs() < 1e-12);
        assert!((want - 3.24).abs() < 1e-12);
    }

    #[test]
    fn tpe_picks_argmax_candidate() {
        let space = SpaceSpec::default();
        let mut tpe = Tpe::new(space, TpeParams::default(), 2);
        for t in 0..60 {
            let x = tpe.suggest();
            if let Some(step) = tpe.last_step() {
                let n = step.observations;
                assert_eq!(step.model.good_size, (0.25 * n as f64).ceil() as usize);
                let best = step.candidates[step.chosen].1;
                assert!(step.candidates.iter().all(|(_, s)| *s <= best));
                assert_eq!(step.candidates[step.chosen].0, x);
            }
            let reward = x.slots().iter().filter(|&&v| v == 0).count() as f64 / 9.0;
            tpe.observe(&x, reward * (t % 3) as f64 / 3.0);
        }
    }

    #[test]
    fn softmax_normalizes() {
        let p = softmax(&[1000.0, 0.0, -1000.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p[0] > 0.999_999);
    }

    #[test]
    fn zero_advantage_leaves_logits() {
        let mut pg = PolicyGradient::new(SpaceSpec::single_stage(1), PolicyParams::default(), 0);
        pg.set_logits(vec![vec![0.3, -0.2, 0.1]]);
        pg.set_baseline(Some(0.5));
        pg.update(&g("1"), 0.5);
        assert_eq!(pg.logits(), &[vec![0.3, -0.2, 0.1]]);
    }

    #[test]
    fn first_reward_seeds_baseline() {
        let mut pg = PolicyGradient::new(SpaceSpec::single_stage(1), PolicyParams::default(), 0);
        pg.update(&g("2"), 0.7);
        assert_eq!(pg.logits(), &[vec![0.0, 0.0, 0.0]]);
        assert_eq!(pg.baseline(), Some(0.7));
        pg.update(&g("2"), 0.8);
        assert!((pg.baseline().unwrap() - 0.71).abs() < 1e-12);
    }

    #[test]
    fn single_slot_hand_update() {
        let step = reinforce_step(&[0.0, 0.0, 0.0], 0, 0.1, 1.0);
        let want = [0.1 * 2.0 / 3.0, -0.1 / 3.0, -0.1 / 3.0];
        for (s, w) in step.iter().zip(want) {
            assert!((s - w).abs() < 1e-4);
        }
        assert!((step[0] - 0.0667).abs() < 1e-4);
        assert!((step[1] + 0.0333).abs() < 1e-4);
    }

    #[test]
    fn policy_stays_normalized() {
        let space = SpaceSpec::default();
        let mut pg = PolicyGradient::new(space, PolicyParams::default(), 13);
        for t in 0..300 {
            let x = pg.suggest();
            pg.observe(&x, (t % 7) as f64 / 7.0);
            for p in pg.probabilities() {
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn params_validation() {
        assert!(StrategyParams::default().validate().is_ok());
        let mut p = StrategyParams::default();
        p.tpe.gamma = 1.0;
        assert!(p.validate().is_err());
        let mut p = StrategyParams::default();
        p.evolution.population_size = 0;
        assert!(p.validate().is_err());
    }
}
