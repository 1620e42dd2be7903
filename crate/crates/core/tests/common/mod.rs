#![allow(dead_code)]

use mfnas_core::evaluators::Evaluator;
use mfnas_core::strategies::SearchStrategy;
use mfnas_core::{count_params, m_alpha, p_min, s_prime, Genotype, SpaceSpec};

/// Reward the harness would assign to `g`.
pub fn reward(space: &SpaceSpec, eval: &mut dyn Evaluator, g: &Genotype, alpha: f64) -> f64 {
    let pm = p_min(space).unwrap();
    let acc = eval.evaluate(g).unwrap();
    m_alpha(acc, s_prime(count_params(g, space).unwrap(), pm).unwrap(), alpha).unwrap()
}

/// Suggest/observe loop that calls `inspect(trial, strategy, suggestion)`
/// right after every suggestion.
pub fn drive<S: SearchStrategy>(
    strategy: &mut S,
    space: &SpaceSpec,
    eval: &mut dyn Evaluator,
    trials: usize,
    mut inspect: impl FnMut(usize, &S, &Genotype),
) {
    for t in 1..=trials {
        let g = strategy.suggest();
        inspect(t, strategy, &g);
        let r = reward(space, eval, &g, 1.0);
        strategy.observe(&g, r);
    }
}

/// Independent parameter count for the default three-stage layout, written
/// out layer by layer.
pub fn hand_params(kernels: &[u64]) -> u64 {
    assert_eq!(kernels.len(), 9);
    let bn = |c: u64| 2 * c;
    let mut total = 3 * 16 * 9 + bn(16);
    let widths = [16u64, 32, 64];
    let mut c_in = 16;
    for stage in 0..3 {
        let w = widths[stage];
        for block in 0..3 {
            let k = kernels[stage * 3 + block];
            total += c_in * w * k * k + bn(w);
            total += w * w * 9 + bn(w);
            if block == 0 && stage > 0 {
                total += c_in * w + bn(w);
            }
            c_in = w;
        }
    }
    total + 64 * 10 + 10
}

/// Independent MAC count for the default layout (sides 32/16/8).
pub fn hand_macs(kernels: &[u64]) -> u64 {
    let mut total = 9 * 3 * 16 * 32 * 32;
    let widths = [16u64, 32, 64];
    let sides = [32u64, 16, 8];
    let mut c_in = 16;
    for stage in 0..3 {
        let (w, hw) = (widths[stage], sides[stage] * sides[stage]);
        for block in 0..3 {
            let k = kernels[stage * 3 + block];
            total += k * k * c_in * w * hw;
            total += 9 * w * w * hw;
            if block == 0 && stage > 0 {
                total += c_in * w * hw;
            }
            c_in = w;
        }
    }
    total + 64 * 10
}
