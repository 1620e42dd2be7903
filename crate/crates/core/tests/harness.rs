mod common;

use std::collections::HashMap;

use mfnas_core::evaluators::{Surrogate, SurrogateSpec, TableEvaluator};
use mfnas_core::harness::{
    best_so_far_curve, compare_strategies, oracle_best, run_with_evaluator, top_quintile_analysis,
    EvaluatorConfig,
};
use mfnas_core::{
    m_alpha, p_min, run_experiment, Error, Genotype, RunConfig, SpaceSpec, StrategyKind,
};

const DEFAULT_OPTIMUM: f64 = 0.7741936670012773;

#[test]
fn random_run_contract() {
    let cfg = RunConfig {
        seed: 7,
        ..RunConfig::default()
    };
    let s = run_experiment(&cfg).unwrap();
    assert_eq!(s.trial_log.len(), 50);
    assert_eq!(s.p_min, 272_474);
    let mut prev = f64::NEG_INFINITY;
    for (i, r) in s.trial_log.iter().enumerate() {
        assert_eq!(r.trial, i + 1);
        assert!(r.best_so_far >= prev);
        prev = r.best_so_far;
        let want = m_alpha(r.accuracy.unwrap(), s.p_min as f64 / r.params as f64, 1.0).unwrap();
        assert!((r.m_value - want).abs() <= 1e-12);
    }
    let curve = best_so_far_curve(&s.trial_log).unwrap();
    assert_eq!(curve.len(), 50);
    assert_eq!(curve.last().unwrap().1, s.best.m_value);
    assert_eq!(s.top_quintile.records.len(), 10);
    assert_eq!(top_quintile_analysis(&s.trial_log).unwrap(), s.top_quintile);
}

#[test]
fn budget_at_p_min_zeroes_everything_larger() {
    let cfg = RunConfig {
        strategy: StrategyKind::Evolution,
        trials: 80,
        max_params: Some(272_474),
        ..RunConfig::default()
    };
    let s = run_experiment(&cfg).unwrap();
    for r in &s.trial_log {
        if r.genotype.slots().iter().any(|&v| v > 0) {
            assert_eq!(r.m_value, 0.0);
            assert!(r.accuracy.is_none());
        } else {
            assert!(r.accuracy.is_some());
        }
        if r.params > 272_474 {
            assert!(r.accuracy.is_none());
        }
    }
}

#[test]
fn oracle_examples() {
    let space = SpaceSpec::default();
    let flat = SurrogateSpec {
        base: 0.6,
        step: 0.0,
        ..SurrogateSpec::default()
    };
    let o = oracle_best(&space, &mut Surrogate::new(flat).unwrap(), 1.0).unwrap();
    assert_eq!(o.genotype.to_string(), "000000000");

    let o = oracle_best(&space, &mut Surrogate::default(), 0.0).unwrap();
    assert_eq!(o.genotype, SurrogateSpec::default().target);
    assert_eq!(o.m_value, o.accuracy);

    let o = oracle_best(&space, &mut Surrogate::default(), 1.0).unwrap();
    assert_eq!(o.genotype.to_string(), "012010000");
    assert_eq!(o.arch_id, 3726);
    assert_eq!(o.params, 303_194);
    assert_eq!(o.m_value, DEFAULT_OPTIMUM);
}

#[test]
fn oracle_matches_naive_double_loop_on_two_slots() {
    let space = SpaceSpec::single_stage(2);
    let spec = SurrogateSpec {
        target: "12".parse().unwrap(),
        base: 0.3,
        step: 0.25,
        noise_amplitude: 0.2,
        noise_seed: 17,
    };
    let mut eval = Surrogate::new(spec).unwrap();
    let pm = p_min(&space).unwrap();
    let mut best: Option<(Genotype, f64)> = None;
    for a in 0..3u8 {
        for b in 0..3u8 {
            let g = Genotype::new(vec![a, b]);
            let m = common::reward(&space, &mut eval, &g, 1.0);
            assert!(pm <= mfnas_core::count_params(&g, &space).unwrap());
            if best.as_ref().is_none_or(|(_, bm)| m > *bm) {
                best = Some((g, m));
            }
        }
    }
    let o = oracle_best(&space, &mut eval, 1.0).unwrap();
    assert_eq!((o.genotype, o.m_value), best.unwrap());
}

#[test]
fn oracle_refuses_external_evaluator() {
    let script = r#"echo '{"protocol":"mfnas-eval/1"}'; sleep 5"#;
    let mut ext = EvaluatorConfig::External {
        command: vec!["sh".into(), "-c".into(), script.into()],
        timeout_secs: 5.0,
    }
    .build(&SpaceSpec::default())
    .unwrap();
    assert!(matches!(
        oracle_best(&SpaceSpec::default(), &mut *ext, 1.0),
        Err(Error::RefusedExpensiveOracle)
    ));
}

#[test]
fn random_search_bounded_by_oracle() {
    let s = run_experiment(&RunConfig {
        trials: 2_000,
        seed: 1,
        ..RunConfig::default()
    })
    .unwrap();
    assert!(s.best.m_value <= DEFAULT_OPTIMUM);
    let s = run_experiment(&RunConfig {
        trials: 100_000,
        seed: 1,
        ..RunConfig::default()
    })
    .unwrap();
    assert!((s.best.m_value - DEFAULT_OPTIMUM).abs() <= 1e-12);
}

#[test]
fn evaluator_failure_keeps_partial_log() {
    let space = SpaceSpec::default();
    // Only the first 30 random suggestions of seed 3 have entries.
    let cfg = RunConfig {
        seed: 3,
        ..RunConfig::default()
    };
    let full = run_experiment(&cfg).unwrap();
    let mut entries = HashMap::new();
    for r in &full.trial_log[..30] {
        entries.insert(r.arch_id, r.accuracy.unwrap());
    }
    let missing = full.trial_log[30..]
        .iter()
        .find(|r| !entries.contains_key(&r.arch_id))
        .unwrap()
        .trial;
    let mut table = TableEvaluator::new(space, entries).unwrap();
    match run_with_evaluator(&cfg, &mut table) {
        Err(e @ Error::Trial { .. }) => {
            assert!(e.is_evaluator_failure());
            let Error::Trial { trial, partial_log, source } = e else { unreachable!() };
            assert_eq!(trial, missing);
            assert_eq!(partial_log.len(), missing - 1);
            assert_eq!(partial_log[..], full.trial_log[..missing - 1]);
            assert!(matches!(*source, Error::MissingEntry(_)));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn table_config_replays_surrogate() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let space = SpaceSpec::default();
    TableEvaluator::write_from(&path, &space, &mut Surrogate::default()).unwrap();
    let base = RunConfig {
        strategy: StrategyKind::Tpe,
        seed: 12,
        ..RunConfig::default()
    };
    let a = run_experiment(&base).unwrap();
    let b = run_experiment(&RunConfig {
        evaluator: EvaluatorConfig::Table { path },
        ..base
    })
    .unwrap();
    assert_eq!(a.trial_log, b.trial_log);
}

#[test]
fn comparison_table() {
    let cfgs: Vec<RunConfig> = StrategyKind::ALL
        .iter()
        .map(|&strategy| RunConfig {
            strategy,
            ..RunConfig::default()
        })
        .collect();
    let seeds: Vec<u64> = (0..20).collect();
    let serial = compare_strategies(&cfgs, &seeds, 1).unwrap();
    let parallel = compare_strategies(&cfgs, &seeds, 4).unwrap();
    assert_eq!(serial, parallel);
    assert_eq!(serial.rows.len(), 4);
    for row in &serial.rows {
        assert_eq!(row.per_seed.len(), 20);
        assert!(row.median_best_m.unwrap() <= DEFAULT_OPTIMUM);
        assert!(row.best.as_ref().unwrap().m_value <= DEFAULT_OPTIMUM);
    }

    let single = RunConfig {
        strategy: StrategyKind::Evolution,
        seed: 5,
        ..RunConfig::default()
    };
    let table = compare_strategies(std::slice::from_ref(&single), &[5], 1).unwrap();
    let run = run_experiment(&single).unwrap();
    assert_eq!(table.rows[0].best.as_ref().unwrap(), &run.best);
    assert_eq!(table.rows[0].median_best_m, Some(run.best.m_value));
}

#[test]
fn comparison_isolates_failing_cells() {
    let bad = RunConfig {
        evaluator: EvaluatorConfig::Table {
            path: "/nonexistent/table.csv".into(),
        },
        ..RunConfig::default()
    };
    let good = RunConfig::default();
    let t = compare_strategies(&[bad, good], &[1, 2], 2).unwrap();
    assert!(t.rows[0].per_seed.iter().all(|c| c.result.is_err()));
    assert!(t.rows[0].best.is_none());
    assert!(t.rows[1].per_seed.iter().all(|c| c.result.is_ok()));
}

#[test]
fn weighted_alpha_changes_scores() {
    let cfg = RunConfig {
        alpha: 2.0,
        seed: 4,
        ..RunConfig::default()
    };
    let s = run_experiment(&cfg).unwrap();
    for r in &s.trial_log {
        let want = m_alpha(r.accuracy.unwrap(), r.s_prime, 2.0).unwrap();
        assert!((r.m_value - want).abs() <= 1e-12);
    }
}
