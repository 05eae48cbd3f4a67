//! Random instance and policy generators for property suites.

use rand::Rng;

use crate::dynamics::Policy;
use crate::model::{validate_instance, Distribution, Instance, RawInstance, RevenueFunction};

/// Uniformly random point on the simplex with `len` entries.
pub fn distribution<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Distribution {
    // normalized exponentials; occasionally sparse so vertices and faces show up
    let mut w: Vec<f64> = (0..len)
        .map(|_| {
            if rng.gen_bool(0.2) {
                0.0
            } else {
                -(1.0 - rng.gen::<f64>()).ln()
            }
        })
        .collect();
    if w.iter().all(|v| *v <= 0.0) {
        w[rng.gen_range(0..len)] = 1.0;
    }
    let total: f64 = w.iter().sum();
    let mut probs: Vec<f64> = w.iter().map(|v| v / total).collect();
    let drift: f64 = 1.0 - probs.iter().sum::<f64>();
    let largest = (0..len)
        .max_by(|&a, &b| probs[a].total_cmp(&probs[b]))
        .unwrap();
    probs[largest] += drift;
    Distribution::new(probs).expect("normalized weights form a distribution")
}

/// Increasing reward values starting at zero.
pub fn rewards<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    let mut values = vec![0.0];
    while values.len() < len {
        let last = *values.last().unwrap();
        values.push(last + rng.gen_range(0.1..1.0));
    }
    values
}

/// Departure row that is nonincreasing in the reward paid.
pub fn departure_row<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..=1.0)).collect();
    row.sort_by(|a, b| b.total_cmp(a));
    // keep the lowest reward strictly repelling so some static policy is stable
    row[0] = row[0].max(0.05);
    row
}

pub fn concave_piecewise<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> RevenueFunction {
    let segments = rng.gen_range(1..5);
    let mut slopes: Vec<f64> = (0..segments).map(|_| rng.gen_range(0.0..3.0)).collect();
    slopes.sort_by(|a, b| b.total_cmp(a));
    let mut bps = vec![[0.0, 0.0]];
    for s in slopes {
        let [m, v] = *bps.last().unwrap();
        let width = rng.gen_range(0.1..1.0) * scale;
        bps.push([m + width, v + s * width]);
    }
    RevenueFunction::piecewise(bps).expect("sorted slopes are concave")
}

pub fn revenue<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> RevenueFunction {
    match rng.gen_range(0..3) {
        0 => RevenueFunction::Linear {
            alpha: rng.gen_range(0.5..3.0),
        },
        1 => RevenueFunction::CappedLinear {
            alpha: rng.gen_range(0.5..3.0),
            cap: rng.gen_range(0.5..2.0) * scale,
        },
        _ => concave_piecewise(rng, scale),
    }
}

/// Random instance with up to `max_types` types and up to `max_rewards`
/// rewards.
pub fn instance<R: Rng + ?Sized>(rng: &mut R, max_types: usize, max_rewards: usize) -> Instance {
    let k = rng.gen_range(1..=max_types);
    let m = rng.gen_range(1..=max_rewards);
    let lambdas: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..2.0)).collect();
    let scale = lambdas.iter().sum::<f64>() * 3.0;
    validate_instance(RawInstance {
        lambdas,
        rewards: rewards(rng, m),
        departures: (0..k).map(|_| departure_row(rng, m)).collect(),
        revenue: revenue(rng, scale),
    })
    .expect("generated instance is valid")
}

/// Single-type instance with the given revenue curve.
pub fn single_type_instance<R: Rng + ?Sized>(
    rng: &mut R,
    max_rewards: usize,
    revenue: RevenueFunction,
) -> Instance {
    let m = rng.gen_range(2..=max_rewards);
    validate_instance(RawInstance {
        lambdas: vec![rng.gen_range(0.1..2.0)],
        rewards: rewards(rng, m),
        departures: vec![departure_row(rng, m)],
        revenue,
    })
    .expect("generated instance is valid")
}

/// Cyclic policy of random length in `1..=max_period`.
pub fn cyclic_policy<R: Rng + ?Sized>(
    rng: &mut R,
    num_rewards: usize,
    max_period: usize,
) -> Policy {
    let tau = rng.gen_range(1..=max_period);
    Policy::Cyclic((0..tau).map(|_| distribution(rng, num_rewards)).collect())
}
