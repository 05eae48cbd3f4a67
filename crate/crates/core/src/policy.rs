//! Policy construction and static-policy optimization.
//!
//! The static optimizer searches the simplex of reward distributions for
//! the best long-run profit subject to per-type stability
//! `λ_i = n_i Σ_r ℓ_i(r) x_r`, with populations relaxed to reals. A
//! uniform grid pass is followed by golden-section refinement along
//! coordinate pairs and along level sets of the total population.

use serde::Serialize;

use crate::dynamics::{steady_cycle, Buildup, CohortSchedule, Policy};
use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::model::{expected_payment, Distribution, Instance};

pub const DEFAULT_GRID: f64 = 0.01;
pub const DEFAULT_REFINE_TOL: f64 = 1e-9;

/// Stationary population of each type under the static distribution `x`.
pub fn stability_populations(inst: &Instance, x: &Distribution) -> Result<Vec<f64>> {
    x.check_len(inst.rewards())?;
    inst.lambdas()
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            if lambda == 0.0 {
                return Ok(0.0);
            }
            let rate = inst.departures().rate(i, x);
            if rate <= 0.0 {
                Err(Error::UnstableStatic { type_index: i })
            } else {
                Ok(lambda / rate)
            }
        })
        .collect()
}

/// Long-run profit of paying `x` every period.
pub fn static_profit(inst: &Instance, x: &Distribution) -> Result<f64> {
    let total: f64 = stability_populations(inst, x)?.iter().sum();
    Ok(inst.revenue().eval(total)? - expected_payment(x, inst.rewards()) * total)
}

fn profit_or_nan(inst: &Instance, probs: &[f64]) -> f64 {
    static_profit(inst, &Distribution(probs.to_vec())).unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluidOptResult {
    pub x_star: Distribution,
    pub n_star: Vec<f64>,
    pub value: f64,
    pub grid_resolution: f64,
    /// Whether refinement moved away from the best grid point.
    pub refined: bool,
    #[serde(skip)]
    pub grid_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidOptConfig {
    pub grid_resolution: f64,
    pub refine_tolerance: f64,
    pub exec: Exec,
    pub max_sweeps: usize,
}

impl Default for FluidOptConfig {
    fn default() -> Self {
        Self {
            grid_resolution: DEFAULT_GRID,
            refine_tolerance: DEFAULT_REFINE_TOL,
            exec: Exec::default(),
            max_sweeps: 500,
        }
    }
}

/// Number of grid steps per unit mass for resolution `h`; the effective
/// step `1/m` never exceeds `h`.
pub fn grid_steps(h: f64) -> Result<usize> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "grid resolution {h} outside (0, 1]"
        )));
    }
    let inv = 1.0 / h;
    let rounded = inv.round();
    Ok(if (inv - rounded).abs() < 1e-9 {
        rounded
    } else {
        inv.ceil()
    } as usize)
}

/// All compositions of `m` into `parts` nonnegative parts, in
/// lexicographic order.
pub fn simplex_compositions(parts: usize, m: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    if parts == 0 {
        return out;
    }
    let mut current = vec![0u32; parts];
    loop {
        let used: u32 = current[..parts - 1].iter().sum();
        current[parts - 1] = m as u32 - used;
        out.push(current.clone());
        // advance the prefix like an odometer bounded by the remaining mass
        let mut pos = parts - 1;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            let prefix: u32 = current[..pos].iter().sum();
            if prefix + current[pos] < m as u32 {
                current[pos] += 1;
                for v in &mut current[pos + 1..parts - 1] {
                    *v = 0;
                }
                break;
            }
        }
    }
}

fn composition_probs(counts: &[u32], m: usize) -> Vec<f64> {
    counts.iter().map(|&c| c as f64 / m as f64).collect()
}

/// Best grid point: highest profit, ties to the earliest composition.
fn best_on_grid(inst: &Instance, m: usize, exec: Exec) -> Result<(Vec<f64>, f64)> {
    let comps = simplex_compositions(inst.num_rewards(), m);
    let values = exec::map(exec, &comps, |c| {
        profit_or_nan(inst, &composition_probs(c, m))
    });
    let mut best: Option<(usize, f64)> = None;
    for (idx, &v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((idx, v));
        }
    }
    let (idx, value) = best.ok_or(Error::NoFeasiblePoint)?;
    Ok((composition_probs(&comps[idx], m), value))
}

/// Grid phase of [`solve_fluid_opt`] alone.
pub fn grid_search(inst: &Instance, h: f64, exec: Exec) -> Result<(Distribution, f64)> {
    let (probs, value) = best_on_grid(inst, grid_steps(h)?, exec)?;
    Ok((Distribution(probs), value))
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a maximum of `f` on `[lo, hi]`. NaN counts
/// as −∞.
fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let g = |t: f64| {
        let v = f(t);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let (mut fa, mut fb) = (g(a), g(b));
    while hi - lo > tol {
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = g(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = g(b);
        }
    }
    if fa >= fb {
        (a, fa)
    } else {
        (b, fb)
    }
}

fn shift_pair(x: &[f64], (j, k): (usize, usize), t: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    // t ∈ [−x_j, x_k]: shift t from k to j, pinning the endpoints exactly
    y[j] = if t == -x[j] { 0.0 } else { (x[j] + t).max(0.0) };
    y[k] = if t == x[k] { 0.0 } else { (x[k] - t).max(0.0) };
    y
}

/// Total stationary population, `+∞` when some present type never leaves.
fn total_population(inst: &Instance, probs: &[f64]) -> f64 {
    let ell = inst.departures();
    inst.lambdas()
        .iter()
        .zip(ell.rows())
        .map(|(&lambda, row)| {
            if lambda == 0.0 {
                return 0.0;
            }
            let rate: f64 = row.iter().zip(probs).map(|(l, p)| l * p).sum();
            if rate <= 0.0 {
                f64::INFINITY
            } else {
                lambda / rate
            }
        })
        .sum()
}

/// Moves `x` along pair `b` until the total population returns to
/// `target`, taking the root closest to `x`.
fn restore_population(
    inst: &Instance,
    x: &[f64],
    b: (usize, usize),
    target: f64,
) -> Option<Vec<f64>> {
    let gap = |s: f64| total_population(inst, &shift_pair(x, b, s)) - target;
    let g0 = gap(0.0);
    if g0 == 0.0 {
        return Some(x.to_vec());
    }
    let mut best: Option<f64> = None;
    for bound in [x[b.1], -x[b.0]] {
        if bound == 0.0 {
            continue;
        }
        // geometric scan outward from 0 for the first sign change, then bisect
        let mut inner = 0.0;
        for e in (0..=48).rev() {
            let outer = bound * 0.5f64.powi(e);
            if (gap(outer) > 0.0) != (g0 > 0.0) {
                let (mut lo, mut hi) = (inner, outer);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if (gap(mid) > 0.0) == (g0 > 0.0) {
                        lo = mid
                    } else {
                        hi = mid
                    }
                }
                if best.is_none_or(|s: f64| hi.abs() < s.abs()) {
                    best = Some(hi);
                }
                break;
            }
            inner = outer;
        }
    }
    best.map(|s| shift_pair(x, b, s))
}

/// Search intervals for a line through the current point: the whole
/// feasible segment plus two windows around the point, so a local basin
/// is not lost when the segment is multimodal.
fn windows(lo: f64, hi: f64, step: f64) -> Vec<(f64, f64)> {
    let mut out = vec![(lo, hi)];
    for w in [2.0 * step, step / 8.0] {
        let win = (lo.max(-w), hi.min(w));
        if win.1 - win.0 > 0.0 && win != (lo, hi) {
            out.push(win);
        }
    }
    out
}

/// Golden-section line search along every coordinate pair.
fn pair_sweep(inst: &Instance, x: &mut Vec<f64>, value: &mut f64, step: f64) {
    let n = x.len();
    for j in 0..n {
        for k in j + 1..n {
            let (lo, hi) = (-x[j], x[k]);
            if hi - lo <= 0.0 {
                continue;
            }
            let f = |t: f64| profit_or_nan(inst, &shift_pair(x, (j, k), t));
            let mut candidates = vec![(lo, f(lo)), (hi, f(hi))];
            for (a, b) in windows(lo, hi, step) {
                candidates.push(golden_max(f, a, b, (b - a) * 1e-12));
            }
            let (t, v) =
                candidates
                    .into_iter()
                    .fold((0.0, *value), |best, c| if c.1 > best.1 { c } else { best });
            if v > *value {
                *value = v;
                *x = shift_pair(x, (j, k), t);
            }
        }
    }
}

/// Line searches along the total-population level set through `x`: shift
/// mass along one pair and compensate along another. Follows the ridges
/// where the revenue curve has a kink, which single-pair moves cannot.
fn level_set_sweep(inst: &Instance, x: &mut Vec<f64>, value: &mut f64, step: f64) {
    let n = x.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|j| (j + 1..n).map(move |k| (j, k)))
        .collect();
    for &a in &pairs {
        for &b in &pairs {
            if a == b {
                continue;
            }
            let target = total_population(inst, x);
            if !target.is_finite() {
                return;
            }
            let (lo, hi) = (-x[a.0], x[a.1]);
            if hi - lo <= 0.0 {
                continue;
            }
            let point = |t: f64| restore_population(inst, &shift_pair(x, a, t), b, target);
            let f = |t: f64| point(t).map_or(f64::NAN, |y| profit_or_nan(inst, &y));
            let mut candidates = vec![(lo, f(lo)), (hi, f(hi))];
            for (a, b) in windows(lo, hi, step) {
                candidates.push(golden_max(f, a, b, (b - a) * 1e-12));
            }
            let mut chosen: Option<(f64, Vec<f64>)> = None;
            for (t, v) in candidates {
                if v > chosen.as_ref().map_or(*value, |c| c.0) {
                    chosen = point(t).map(|y| (v, y)).or(chosen);
                }
            }
            if let Some((v, y)) = chosen {
                *value = v;
                *x = y;
            }
        }
    }
}

/// Alternates pair and level-set sweeps while a round improves profit by
/// at least the refinement tolerance.
fn refine(
    inst: &Instance,
    start: Vec<f64>,
    start_value: f64,
    cfg: &FluidOptConfig,
) -> (Vec<f64>, f64) {
    let mut x = start;
    let mut value = start_value;
    if x.len() < 2 {
        return (x, value);
    }
    let step = cfg.grid_resolution;
    for _ in 0..cfg.max_sweeps {
        let round_start = value;
        pair_sweep(inst, &mut x, &mut value, step);
        if x.len() > 2 {
            level_set_sweep(inst, &mut x, &mut value, step);
        }
        if value - round_start < cfg.refine_tolerance {
            break;
        }
    }
    (x, value)
}

/// Optimal static policy: grid search at resolution `h`, then pairwise
/// refinement until a sweep improves by less than `eps`.
pub fn solve_fluid_opt(inst: &Instance, h: f64, eps: f64) -> Result<FluidOptResult> {
    solve_fluid_opt_with(
        inst,
        &FluidOptConfig {
            grid_resolution: h,
            refine_tolerance: eps,
            ..FluidOptConfig::default()
        },
    )
}

pub fn solve_fluid_opt_with(inst: &Instance, cfg: &FluidOptConfig) -> Result<FluidOptResult> {
    if cfg.refine_tolerance.is_nan() || cfg.refine_tolerance <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "refinement tolerance {} must be positive",
            cfg.refine_tolerance
        )));
    }
    let m = grid_steps(cfg.grid_resolution)?;
    let (grid_x, grid_value) = best_on_grid(inst, m, cfg.exec)?;
    let (mut x, _) = refine(inst, grid_x.clone(), grid_value, cfg);
    let total: f64 = x.iter().sum();
    x.iter_mut().for_each(|p| *p /= total);
    // re-evaluate at the normalized point so value and x agree exactly
    let value = profit_or_nan(inst, &x);
    let (x, value, refined) = if value > grid_value {
        (x, value, true)
    } else {
        (grid_x, grid_value, false)
    };
    let x_star = Distribution::new(x)?;
    let n_star = stability_populations(inst, &x_star)?;
    Ok(FluidOptResult {
        x_star,
        n_star,
        value,
        grid_resolution: cfg.grid_resolution,
        refined,
        grid_value,
    })
}

/// Exhaustive enumeration of the simplex grid at step `h`, no refinement.
/// Kept deliberately naive as an independent check on [`solve_fluid_opt`].
pub fn grid_oracle(inst: &Instance, h: f64) -> Result<(Distribution, f64)> {
    fn visit(
        inst: &Instance,
        m: usize,
        remaining: usize,
        prefix: &mut Vec<usize>,
        best: &mut Option<(Vec<f64>, f64)>,
    ) {
        if prefix.len() + 1 == inst.num_rewards() {
            prefix.push(remaining);
            let probs: Vec<f64> = prefix.iter().map(|&c| c as f64 / m as f64).collect();
            if let Ok(x) = Distribution::new(probs.clone()) {
                if let Ok(v) = static_profit(inst, &x) {
                    if best.as_ref().is_none_or(|(_, b)| v > *b) {
                        *best = Some((probs, v));
                    }
                }
            }
            prefix.pop();
            return;
        }
        for c in 0..=remaining {
            prefix.push(c);
            visit(inst, m, remaining - c, prefix, best);
            prefix.pop();
        }
    }

    let m = grid_steps(h)?;
    let mut best = None;
    visit(inst, m, m, &mut Vec::new(), &mut best);
    let (probs, value) = best.ok_or(Error::NoFeasiblePoint)?;
    Ok((Distribution(probs), value))
}

/// Static distribution paying each reward with its presence-weighted
/// long-run frequency under a periodic policy.
///
/// Weights are the type-1 masses when there is a single type and total
/// masses otherwise (only the single-type case carries an optimality
/// guarantee).
pub fn presence_weighted_static(inst: &Instance, policy: &Policy) -> Result<Distribution> {
    match policy {
        Policy::Static(x) => {
            x.check_len(inst.rewards())?;
            return Ok(x.clone());
        }
        Policy::CohortConditioned(_) => return Err(Error::UnsupportedPolicy("cohort-conditioned")),
        Policy::Cyclic(_) => {}
    }
    let profile = steady_cycle(inst, policy)?;
    let mut weighted = vec![0.0; inst.num_rewards()];
    let mut presence = 0.0;
    for (t, state) in profile.period_masses.iter().enumerate() {
        let w = if inst.num_types() == 1 {
            state.type_mass(0)
        } else {
            state.total()
        };
        presence += w;
        for (acc, p) in weighted.iter_mut().zip(policy.payouts(t)[0].probs()) {
            *acc += w * p;
        }
    }
    if presence <= 0.0 {
        return Err(Error::EmptyPresence { type_index: None });
    }
    weighted.iter_mut().for_each(|v| *v /= presence);
    Ok(Distribution(weighted))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefPolicyParams {
    /// Periods in which every agent is paid `retained_payout` before the
    /// cohort schedule starts (simulation only).
    pub buildup_periods: usize,
    pub pool_target: f64,
    pub retained_payout: Distribution,
    pub new_payout: Distribution,
}

/// Cohort-conditioned policy that pays arrivals `new_payout` and agents
/// who stayed through a payout `retained_payout`.
pub fn make_belief_based(inst: &Instance, params: &BeliefPolicyParams) -> Result<Policy> {
    params.retained_payout.check_len(inst.rewards())?;
    params.new_payout.check_len(inst.rewards())?;
    Policy::cohort(CohortSchedule {
        new: vec![params.new_payout.clone()],
        retained: vec![params.retained_payout.clone()],
        buildup: (params.buildup_periods > 0).then(|| Buildup {
            periods: params.buildup_periods,
            payout: params.retained_payout.clone(),
        }),
        pool_target: params.pool_target,
    })
}

/// Two-period cycle alternating the high and the low reward, high first.
pub fn make_reward_slashing(inst: &Instance) -> Result<Policy> {
    if inst.num_rewards() != 2 {
        return Err(Error::WrongRewardCount {
            expected: 2,
            found: inst.num_rewards(),
        });
    }
    Policy::cyclic(vec![
        Distribution::point_mass(2, 1),
        Distribution::point_mass(2, 0),
    ])
}
