//! Experiment driver: strategy/evaluator loop, per-trial metrics, optional
//! parameter budget, summaries, multi-seed comparison and the exhaustive
//! oracle.

use std::collections::HashMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost_model::{self, model_cost};
use crate::error::{Error, Result};
use crate::evaluators::{Evaluator, ExternalEvaluator, Surrogate, SurrogateSpec, TableEvaluator};
use crate::metrics::{m_alpha, s_prime};
use crate::search_space::{Genotype, SpaceSpec};
use crate::strategies::{build_strategy, StrategyKind, StrategyParams};

fn default_timeout() -> f64 {
    300.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EvaluatorConfig {
    Surrogate {
        #[serde(default)]
        spec: SurrogateSpec,
    },
    Table {
        path: PathBuf,
    },
    External {
        /// Program and arguments.
        command: Vec<String>,
        #[serde(default = "default_timeout")]
        timeout_secs: f64,
    },
}

impl Default for EvaluatorConfig {
    fn default() -> Self {
        EvaluatorConfig::Surrogate {
            spec: SurrogateSpec::default(),
        }
    }
}

impl EvaluatorConfig {
    pub fn build(&self, space: &SpaceSpec) -> Result<Box<dyn Evaluator + Send>> {
        Ok(match self {
            EvaluatorConfig::Surrogate { spec } => {
                if spec.target.len() != space.num_slots() {
                    return Err(Error::Config(format!(
                        "surrogate target has {} slots, space has {}",
                        spec.target.len(),
                        space.num_slots()
                    )));
                }
                space.validate_genotype(&spec.target)?;
                Box::new(Surrogate::new(spec.clone())?)
            }
            EvaluatorConfig::Table { path } => Box::new(TableEvaluator::load(path, space.clone())?),
            EvaluatorConfig::External {
                command,
                timeout_secs,
            } => {
                if command.is_empty() {
                    return Err(Error::Config("external evaluator command is empty".into()));
                }
                if !(timeout_secs.is_finite() && *timeout_secs > 0.0) {
                    return Err(Error::Config("timeout_secs must be positive".into()));
                }
                Box::new(ExternalEvaluator::spawn(
                    command,
                    space.clone(),
                    Duration::from_secs_f64(*timeout_secs),
                )?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub strategy: StrategyKind,
    pub trials: usize,
    pub alpha: f64,
    pub seed: u64,
    pub evaluator: EvaluatorConfig,
    pub space: SpaceSpec,
    /// Parameter budget; over-budget trials score zero without evaluation.
    pub max_params: Option<u64>,
    pub strategy_params: StrategyParams,
    /// Reuse accuracies of genotypes already evaluated in this run.
    pub memoize: bool,
    /// Record measured evaluation time. Off by default so logs are
    /// byte-reproducible.
    pub record_timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            strategy: StrategyKind::Random,
            trials: 50,
            alpha: 1.0,
            seed: 0,
            evaluator: EvaluatorConfig::default(),
            space: SpaceSpec::default(),
            max_params: None,
            strategy_params: StrategyParams::default(),
            memoize: true,
            record_timing: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::Config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        self.space.validate()?;
        self.strategy_params.validate()
    }
}

/// One evaluated (or budget-rejected) architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialRecord {
    pub trial: usize,
    pub arch_id: u64,
    pub genotype: Genotype,
    pub params: u64,
    pub macs: u64,
    /// `None` when the trial exceeded the parameter budget.
    pub accuracy: Option<f64>,
    pub s_prime: f64,
    pub m_value: f64,
    pub best_so_far: f64,
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    fn of(values: impl IntoIterator<Item = f64>) -> Option<Stats> {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        Some(Stats {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopQuintile {
    pub records: Vec<TrialRecord>,
    /// Over records with an accuracy; `None` if all were budget-rejected.
    pub accuracy: Option<Stats>,
    pub params: Option<Stats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: RunConfig,
    pub p_min: u64,
    pub best: TrialRecord,
    pub top_quintile: TopQuintile,
    #[serde(skip)]
    pub trial_log: Vec<TrialRecord>,
}

/// Earliest record with the highest `m_value`.
fn best_record(log: &[TrialRecord]) -> Option<&TrialRecord> {
    log.iter()
        .fold(None, |best: Option<&TrialRecord>, r| match best {
            Some(b) if b.m_value >= r.m_value => Some(b),
            _ => Some(r),
        })
}

pub fn run_experiment(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let mut evaluator = cfg.evaluator.build(&cfg.space)?;
    run_with_evaluator(cfg, &mut *evaluator)
}

/// Runs `cfg` against a caller-supplied evaluator; `cfg.evaluator` is
/// echoed but not used.
pub fn run_with_evaluator(cfg: &RunConfig, evaluator: &mut dyn Evaluator) -> Result<RunSummary> {
    cfg.validate()?;
    let space = &cfg.space;
    let p_min = cost_model::p_min(space)?;
    let mut strategy = build_strategy(cfg.strategy, &cfg.strategy_params, space, cfg.seed);
    let mut memo: HashMap<Genotype, f64> = HashMap::new();
    let mut log: Vec<TrialRecord> = Vec::with_capacity(cfg.trials);
    let mut best = f64::NEG_INFINITY;

    for trial in 1..=cfg.trials {
        let g = strategy.suggest();
        let fail = |source: Error, log: Vec<TrialRecord>| Error::Trial {
            trial,
            partial_log: log,
            source: Box::new(source),
        };
        let cost = match model_cost(&g, space) {
            Ok(c) => c,
            Err(e) => return Err(fail(e, log)),
        };
        let arch_id = space.encode(&g).expect("validated by model_cost");
        let sp = s_prime(cost.params, p_min).expect("p_min is the space minimum");
        let over_budget = cfg.max_params.is_some_and(|theta| cost.params > theta);

        let (accuracy, wall_time) = if over_budget {
            (None, 0.0)
        } else if let Some(&acc) = memo.get(&g) {
            (Some(acc), 0.0)
        } else {
            let start = Instant::now();
            let acc = match evaluator.evaluate(&g) {
                Ok(a) => a,
                Err(e) => return Err(fail(e, log)),
            };
            let elapsed = start.elapsed().as_secs_f64();
            if cfg.memoize {
                memo.insert(g.clone(), acc);
            }
            (Some(acc), if cfg.record_timing { elapsed } else { 0.0 })
        };
        let m_value = match accuracy {
            Some(a) => match m_alpha(a, sp, cfg.alpha) {
                Ok(m) => m,
                Err(e) => return Err(fail(e, log)),
            },
            None => 0.0,
        };
        best = best.max(m_value);
        strategy.observe(&g, m_value);
        log.push(TrialRecord {
            trial,
            arch_id,
            genotype: g,
            params: cost.params,
            macs: cost.macs,
            accuracy,
            s_prime: sp,
            m_value,
            best_so_far: best,
            wall_time,
        });
    }

    let best = best_record(&log).expect("trials >= 1").clone();
    Ok(RunSummary {
        config: cfg.clone(),
        p_min,
        best,
        top_quintile: select_top_quintile(&log),
        trial_log: log,
    })
}

/// Running maximum of `m_value` as `(trial, best)` pairs.
pub fn best_so_far_curve(log: &[TrialRecord]) -> Result<Vec<(usize, f64)>> {
    if log.is_empty() {
        return Err(Error::EmptyRun);
    }
    let mut best = f64::NEG_INFINITY;
    Ok(log
        .iter()
        .map(|r| {
            best = best.max(r.m_value);
            (r.trial, best)
        })
        .collect())
}

fn select_top_quintile(log: &[TrialRecord]) -> TopQuintile {
    let k = (log.len() as f64 * 0.2).ceil() as usize;
    let mut order: Vec<&TrialRecord> = log.iter().collect();
    // Stable: equal m_values keep trial order.
    order.sort_by(|a, b| b.m_value.total_cmp(&a.m_value));
    let records: Vec<TrialRecord> = order.into_iter().take(k).cloned().collect();
    TopQuintile {
        accuracy: Stats::of(records.iter().filter_map(|r| r.accuracy)),
        params: Stats::of(
            records
                .iter()
                .filter(|r| r.accuracy.is_some())
                .map(|r| r.params as f64),
        ),
        records,
    }
}

/// Best `ceil(0.2 n)` trials by `m_value` with accuracy and size statistics.
pub fn top_quintile_analysis(log: &[TrialRecord]) -> Result<TopQuintile> {
    if log.len() < 5 {
        return Err(Error::InsufficientData {
            needed: 5,
            got: log.len(),
        });
    }
    Ok(select_top_quintile(log))
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    /// Best record of the run, or the error message if it failed.
    pub result: std::result::Result<TrialRecord, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub strategy: StrategyKind,
    /// Best record across all successful seeds (earliest seed on ties).
    pub best: Option<TrialRecord>,
    pub median_best_m: Option<f64>,
    pub per_seed: Vec<SeedOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// Runs every config under every seed (the config's own seed is replaced)
/// and tabulates best results per config. Cells run on up to `jobs`
/// threads; a failing cell does not affect the others.
pub fn compare_strategies(cfgs: &[RunConfig], seeds: &[u64], jobs: usize) -> Result<Comparison> {
    if cfgs.is_empty() {
        return Err(Error::Config("compare needs at least one run config".into()));
    }
    if seeds.is_empty() {
        return Err(Error::Config("compare needs at least one seed".into()));
    }
    let cells: Vec<(usize, u64)> = (0..cfgs.len())
        .flat_map(|c| seeds.iter().map(move |&s| (c, s)))
        .collect();
    let run_cell = |&(c, seed): &(usize, u64)| {
        let cfg = RunConfig {
            seed,
            ..cfgs[c].clone()
        };
        SeedOutcome {
            seed,
            result: run_experiment(&cfg)
                .map(|s| s.best)
                .map_err(|e| e.to_string()),
        }
    };
    let outcomes: Vec<SeedOutcome> = if jobs <= 1 {
        cells.iter().map(run_cell).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| cells.par_iter().map(run_cell).collect())
    };

    let mut outcomes = outcomes.into_iter();
    let rows = cfgs
        .iter()
        .map(|cfg| {
            let per_seed: Vec<SeedOutcome> = outcomes.by_ref().take(seeds.len()).collect();
            let ok: Vec<&TrialRecord> = per_seed.iter().filter_map(|o| o.result.as_ref().ok()).collect();
            let best = ok
                .iter()
                .fold(None, |best: Option<&TrialRecord>, r| match best {
                    Some(b) if b.m_value >= r.m_value => Some(b),
                    _ => Some(r),
                })
                .cloned();
            let ms: Vec<f64> = ok.iter().map(|r| r.m_value).collect();
            ComparisonRow {
                strategy: cfg.strategy,
                best,
                median_best_m: median(&ms),
                per_seed,
            }
        })
        .collect();
    Ok(Comparison { rows })
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub genotype: Genotype,
    pub arch_id: u64,
    pub accuracy: f64,
    pub params: u64,
    pub m_value: f64,
}

/// Exact argmax of `M_alpha` over the whole space; ties go to the lowest
/// arch id.
pub fn oracle_best(
    space: &SpaceSpec,
    evaluator: &mut dyn Evaluator,
    alpha: f64,
) -> Result<OracleResult> {
    if !evaluator.is_cheap() {
        return Err(Error::RefusedExpensiveOracle);
    }
    space.validate()?;
    let p_min = cost_model::p_min(space)?;
    let mut best: Option<OracleResult> = None;
    for (id, g) in space.enumerate().enumerate() {
        let params = cost_model::count_params(&g, space)?;
        let accuracy = evaluator.evaluate(&g)?;
        let m = m_alpha(accuracy, s_prime(params, p_min)?, alpha)?;
        if best.as_ref().is_none_or(|b| m > b.m_value) {
            best = Some(OracleResult {
                genotype: g,
                arch_id: id as u64,
                accuracy,
                params,
                m_value: m,
            });
        }
    }
    Ok(best.expect("space is non-empty"))
}
