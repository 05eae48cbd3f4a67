//! Test-only oracles, independent of the optimizer's refinement path.

#![allow(dead_code)]

use fairfluid::{
    static_profit, validate_instance, Distribution, Instance, RawInstance, RevenueFunction,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Two types, rewards {0, r}; type 1 never leaves when paid r.
pub fn reward_slashing_instance(lambda: f64, r: f64, alpha: f64) -> Instance {
    validate_instance(RawInstance {
        lambdas: vec![0.1 * lambda, lambda],
        rewards: vec![0.0, r],
        departures: vec![vec![0.1, 0.0], vec![1.0, 0.5]],
        revenue: RevenueFunction::Linear { alpha },
    })
    .unwrap()
}

/// Two types, rewards {0, v1, v2}; type 1 stays for any positive reward,
/// type 2 only for v2. Revenue α·min{N, D}, arrivals D/4 and D/2.
pub fn explicit_discrimination_instance(v1: f64, v2: f64, alpha: f64, cap: f64) -> Instance {
    validate_instance(RawInstance {
        lambdas: vec![cap / 4.0, cap / 2.0],
        rewards: vec![0.0, v1, v2],
        departures: vec![vec![1.0, 0.0, 0.0], vec![1.0, 1.0, 0.0]],
        revenue: RevenueFunction::CappedLinear { alpha, cap },
    })
    .unwrap()
}

fn profit(inst: &Instance, probs: &[f64]) -> f64 {
    Distribution::new(probs.to_vec())
        .ok()
        .and_then(|x| static_profit(inst, &x).ok())
        .unwrap_or(f64::NEG_INFINITY)
}

fn project(x: &[f64], d: &[f64], t: f64) -> Vec<f64> {
    let y: Vec<f64> = x.iter().zip(d).map(|(a, b)| (a + t * b).max(0.0)).collect();
    let s: f64 = y.iter().sum();
    y.iter().map(|v| v / s).collect()
}

/// Maximizes along a segment by repeated dense sampling and zooming.
fn sample_line(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut best = (0.0, f(0.0));
    for _ in 0..40 {
        let n = 16;
        for i in 0..=n {
            let t = a + (b - a) * i as f64 / n as f64;
            let v = f(t);
            if v > best.1 {
                best = (t, v);
            }
        }
        let w = (b - a) / n as f64;
        a = (best.0 - w).max(lo);
        b = (best.0 + w).min(hi);
        if b - a < 1e-13 {
            break;
        }
    }
    best
}

/// Local maximization of the static profit from `start` by line searches
/// along random sparse zero-sum directions. Stops after `patience`
/// consecutive directions without improvement.
pub fn random_direction_refine(inst: &Instance, start: &[f64], seed: u64, patience: usize) -> f64 {
    let n = start.len();
    let mut x = start.to_vec();
    let mut best = profit(inst, &x);
    if n == 1 {
        return best;
    }
    let mut rng = rng(seed);
    let mut stall = 0;
    while stall < patience {
        let mut d: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    rng.gen_range(-1.0..1.0)
                } else {
                    0.0
                }
            })
            .collect();
        let support = d.iter().filter(|v| **v != 0.0).count();
        if support < 2 {
            continue;
        }
        let mean = d.iter().sum::<f64>() / support as f64;
        d.iter_mut().filter(|v| **v != 0.0).for_each(|v| *v -= mean);
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..n {
            if d[i] > 0.0 {
                lo = lo.max(-x[i] / d[i]);
            } else if d[i] < 0.0 {
                hi = hi.min(-x[i] / d[i]);
            }
        }
        if hi.is_nan() || hi <= lo {
            stall += 1;
            continue;
        }
        let f = |t: f64| profit(inst, &project(&x, &d, t));
        let (t, v) = sample_line(&f, lo, hi);
        if v > best + 1e-14 {
            x = project(&x, &d, t);
            best = profit(inst, &x);
            stall = 0;
        } else {
            stall += 1;
        }
    }
    best
}
