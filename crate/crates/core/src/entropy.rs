//! Exact information and entropy of finite partitions, block entropy
//! rates, and Brin–Katok local entropy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lyapunov::std_error;
use crate::partitions::{join_range, refine, FinitePartition, ATOM_BUDGET};
use crate::rng;
use crate::systems::{
    cylinder_log_measure_at, cylinder_measure_at, orbit_distances, sample_point, Chain, MeasureOracle, Point, ShiftMetric, SystemDescriptor,
};

/// Atom budget when every atom needs its own oracle query.
const QUERY_BUDGET: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMode {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyEstimate {
    /// Nats.
    pub value: f64,
    pub mode: EstimateMode,
    pub n_used: usize,
    pub sample_count: usize,
    pub stderr: Option<f64>,
}

impl EntropyEstimate {
    fn exact(value: f64, n_used: usize) -> Self {
        EntropyEstimate { value, mode: EstimateMode::Exact, n_used, sample_count: 0, stderr: None }
    }
}

/// Measure of the atom of `part` containing `x`.
pub fn atom_measure(part: &FinitePartition, oracle: &MeasureOracle, x: &Point) -> Result<f64> {
    match (part, oracle, x) {
        (FinitePartition::Trivial, _, _) => Ok(1.0),
        (FinitePartition::TorusGrid { m }, MeasureOracle::LebesgueTorus, Point::Torus(_)) => Ok(1.0 / (*m as f64).powi(2)),
        (FinitePartition::Product { left, right }, MeasureOracle::Product { left: lo, right: ro }, Point::Product(a, b)) => {
            Ok(atom_measure(left, lo, a)? * atom_measure(right, ro, b)?)
        }
        (FinitePartition::Cylinder { .. }, _, _) => cylinder_measure_at(oracle, &part.fixed_of(x)?),
        _ => Err(Error::IncompatibleOracle(format!("{} atoms under {}", part.kind_name(), oracle.name()))),
    }
}

/// `I(alpha | cond)(x) = -log( mu(alpha(x) ∩ cond(x)) / mu(cond(x)) )`.
pub fn information_function(
    alpha: &FinitePartition,
    cond: &FinitePartition,
    oracle: &MeasureOracle,
    x: &Point,
) -> Result<f64> {
    let c = atom_measure(cond, oracle, x)?;
    if c <= 0.0 {
        return Err(Error::ZeroMassAtom);
    }
    let joint = atom_measure(&refine(alpha, cond)?, oracle, x)?;
    if joint <= 0.0 {
        return Err(Error::ZeroMassAtom);
    }
    Ok((-(joint / c).ln()).max(0.0))
}

/// `sum_w g(mass(w))` over the words on sorted `coords` with positive mass.
/// Subtotals are added per subtree, which keeps the rounding error
/// logarithmic in the number of words.
pub fn word_sum(chain: &Chain, coords: &[i64], g: &dyn Fn(f64) -> f64) -> f64 {
    if coords.is_empty() {
        return g(1.0);
    }
    let kernels: Vec<Vec<Vec<f64>>> = coords.windows(2).map(|w| chain.kernel((w[1] - w[0]) as u64)).collect();
    fn walk(depth: usize, last: usize, mass: f64, kernels: &[Vec<Vec<f64>>], g: &dyn Fn(f64) -> f64) -> f64 {
        if depth > kernels.len() {
            return g(mass);
        }
        let row = &kernels[depth - 1][last];
        (0..row.len())
            .filter(|&s| mass * row[s] > 0.0)
            .map(|s| walk(depth + 1, s, mass * row[s], kernels, g))
            .sum()
    }
    (0..chain.alphabet()).filter(|&s| chain.pi[s] > 0.0).map(|s| walk(1, s, chain.pi[s], &kernels, g)).sum()
}

/// `H(part)` by exact enumeration of its atoms.
pub fn partition_entropy(part: &FinitePartition, oracle: &MeasureOracle) -> Result<f64> {
    match (part, oracle) {
        (FinitePartition::Trivial, _) => Ok(0.0),
        (FinitePartition::TorusGrid { m }, MeasureOracle::LebesgueTorus) => Ok(2.0 * (*m as f64).ln()),
        (FinitePartition::Product { left, right }, MeasureOracle::Product { left: lo, right: ro }) => {
            Ok(partition_entropy(left, lo)? + partition_entropy(right, ro)?)
        }
        (FinitePartition::Cylinder { coords, alphabet }, MeasureOracle::BernoulliIid { .. } | MeasureOracle::MarkovStationary { .. }) => {
            check_alphabet(*alphabet, oracle)?;
            let chain = oracle.chain()?;
            Ok(word_sum(&chain, coords, &|m| -m * m.ln()))
        }
        (FinitePartition::Cylinder { coords, alphabet }, MeasureOracle::Conditional { .. }) => {
            check_alphabet(*alphabet, oracle)?;
            let atoms = part.atom_count();
            if atoms > QUERY_BUDGET as f64 {
                return Err(Error::AtomBudgetExceeded { atoms, budget: QUERY_BUDGET });
            }
            let k = *alphabet as u64;
            let mut h = 0.0;
            for w in 0..atoms as u64 {
                let fixed: Vec<(i64, u8)> = coords
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| (c, ((w / k.pow((coords.len() - 1 - i) as u32)) % k) as u8))
                    .collect();
                let m = cylinder_measure_at(oracle, &fixed)?;
                if m > 0.0 {
                    h -= m * m.ln();
                }
            }
            Ok(h)
        }
        _ => Err(Error::IncompatibleOracle(format!("{} partition under {}", part.kind_name(), oracle.name()))),
    }
}

fn check_alphabet(alphabet: u8, oracle: &MeasureOracle) -> Result<()> {
    match oracle.alphabet_size() {
        Some(k) if k == alphabet as usize => Ok(()),
        _ => Err(Error::IncompatibleOracle(format!("partition alphabet {alphabet} vs oracle {}", oracle.name()))),
    }
}

/// `H(alpha | cond) = H(alpha ∨ cond) - H(cond)`, both by exact enumeration.
pub fn conditional_entropy(alpha: &FinitePartition, cond: &FinitePartition, oracle: &MeasureOracle) -> Result<EntropyEstimate> {
    let joint = refine(alpha, cond)?;
    let h = partition_entropy(&joint, oracle)? - partition_entropy(cond, oracle)?;
    Ok(EntropyEstimate::exact(h.max(0.0), 1))
}

/// Monte Carlo budget for `block_entropy_rate` when exact enumeration does not fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McBudget {
    pub samples: usize,
    pub seed: u64,
}

impl Default for McBudget {
    fn default() -> Self {
        McBudget { samples: 100_000, seed: 0 }
    }
}

/// `(1/n) H(alpha_0^{n-1})`. Exact when the join fits the atom budget;
/// otherwise the mean of `-log mu(alpha_0^{n-1}(y))` over sampled `y`
/// (exact atom masses, sampled atoms), with its standard error.
pub fn block_entropy_rate(oracle: &MeasureOracle, alpha: &FinitePartition, n: usize, mc: McBudget) -> Result<EntropyEstimate> {
    if n == 0 {
        return Err(invalid("block length must be positive"));
    }
    let coords_set: Vec<i64> = match alpha {
        FinitePartition::Cylinder { coords, .. } => {
            let mut all: Vec<i64> = coords.iter().flat_map(|c| (0..n as i64).map(move |j| c + j)).collect();
            all.sort_unstable();
            all.dedup();
            all
        }
        FinitePartition::Trivial => return Ok(EntropyEstimate::exact(0.0, n)),
        _ => return Err(Error::IncompatiblePartitions(format!("block rates need a cylinder partition, got {}", alpha.kind_name()))),
    };
    let alphabet = oracle.alphabet_size().ok_or_else(|| Error::UnsupportedOracle(oracle.name().into()))?;
    let atoms = (alphabet as f64).powi(coords_set.len() as i32);
    if atoms <= ATOM_BUDGET as f64 {
        let joined = join_range(alpha, 0, n as i64 - 1)?;
        return Ok(EntropyEstimate::exact(partition_entropy(&joined, oracle)? / n as f64, n));
    }
    if mc.samples < 2 {
        return Err(Error::AtomBudgetExceeded { atoms, budget: ATOM_BUDGET });
    }
    let chain = oracle.chain()?;
    let (lo, hi) = (coords_set[0], *coords_set.last().unwrap());
    let vals: Vec<f64> = (0..mc.samples)
        .into_par_iter()
        .map(|s| {
            let mut g = rng::stream(mc.seed, s as u64);
            let path = match oracle {
                MeasureOracle::Conditional { lo: bl, symbols, .. } => chain.sample_conditional_path(*bl, symbols, lo, hi, &mut g),
                _ => chain.sample_path(lo, hi, &mut g),
            };
            let fixed: Vec<(i64, u8)> = coords_set.iter().map(|&c| (c, path[(c - lo) as usize])).collect();
            cylinder_log_measure_at(oracle, &fixed).map(|l| -l / n as f64)
        })
        .collect::<Result<_>>()?;
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    Ok(EntropyEstimate {
        value: mean,
        mode: EstimateMode::MonteCarlo,
        n_used: n,
        sample_count: mc.samples,
        stderr: Some(std_error(&vals)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BrinKatokMode {
    /// Bowen balls of the dyadic shift are cylinders; their mass is exact.
    ExactCylinder,
    /// Hit frequency of `B_n(x, eps)` among `samples` draws from the oracle.
    MonteCarlo { samples: usize },
}

/// Minimum hit count for a Monte Carlo ball mass to be used.
pub const HIT_FLOOR: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsCurve {
    pub eps: f64,
    pub n: Vec<usize>,
    /// `-log mu(B_n(x, eps))`, `None` when no sample hit the ball.
    pub neg_log_mass: Vec<Option<f64>>,
    /// `-log mu(B_n(x, eps)) / n`.
    pub values: Vec<Option<f64>>,
    pub hits: Option<Vec<usize>>,
    /// Min / max over the trailing half of the schedule.
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub reliable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrinKatokReport {
    pub lower: EntropyEstimate,
    pub upper: EntropyEstimate,
    /// The smallest reliable `eps`, at which `lower` and `upper` are read.
    pub eps_used: f64,
    /// Least-squares slope of `-log mu(B_n)` against `n` at `eps_used`.
    pub slope: Option<f64>,
    pub per_eps: Vec<EpsCurve>,
    pub hit_floor: usize,
}

/// Smallest `j` with `2^{-j} < eps`: the dyadic ball `B(x, eps)` is the
/// cylinder of agreement on `|i| <= j - 1`.
pub fn dyadic_ball_depth(eps: f64) -> i64 {
    let mut j = 0;
    while 2f64.powi(-(j as i32)) >= eps {
        j += 1;
    }
    j
}

pub fn brin_katok_local(
    sys: &SystemDescriptor,
    oracle: &MeasureOracle,
    x: &Point,
    eps_schedule: &[f64],
    n_schedule: &[usize],
    mode: BrinKatokMode,
    seed: u64,
) -> Result<BrinKatokReport> {
    if eps_schedule.is_empty() || n_schedule.is_empty() {
        return Err(Error::EmptySchedule);
    }
    if eps_schedule.windows(2).any(|w| w[0] <= w[1]) || eps_schedule.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::ConfigInvalid { field: "eps_schedule".into(), message: "must be positive and strictly decreasing".into() });
    }
    if n_schedule[0] == 0 || n_schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::ConfigInvalid { field: "n_schedule".into(), message: "must start at >= 1 and strictly increase".into() });
    }
    // log masses, `None` where the ball is null (or never hit)
    let (masses, hits, samples): (Vec<Vec<Option<f64>>>, Option<Vec<Vec<usize>>>, usize) = match mode {
        BrinKatokMode::ExactCylinder => (exact_log_masses(sys, oracle, x, eps_schedule, n_schedule)?, None, 0),
        BrinKatokMode::MonteCarlo { samples } => {
            if samples == 0 {
                return Err(invalid("Monte Carlo mode needs samples >= 1"));
            }
            let h = hit_counts(sys, oracle, x, eps_schedule, n_schedule, samples, seed)?;
            let m = h
                .iter()
                .map(|row| row.iter().map(|&c| (c > 0).then(|| (c as f64 / samples as f64).ln())).collect())
                .collect();
            (m, Some(h), samples)
        }
    };

    let half = n_schedule.len() / 2;
    let mut per_eps = Vec::with_capacity(eps_schedule.len());
    for (e, &eps) in eps_schedule.iter().enumerate() {
        let neg_log_mass: Vec<Option<f64>> = masses[e].iter().map(|m| m.map(|v| -v)).collect();
        let values: Vec<Option<f64>> =
            neg_log_mass.iter().zip(n_schedule).map(|(v, &n)| v.map(|v| v / n as f64)).collect();
        let trailing: Vec<f64> = values[half..].iter().flatten().copied().collect();
        let complete = trailing.len() == n_schedule.len() - half;
        let lower = complete.then(|| trailing.iter().copied().fold(f64::INFINITY, f64::min));
        let upper = complete.then(|| trailing.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        let row_hits = hits.as_ref().map(|h| h[e].clone());
        let reliable = complete && row_hits.as_ref().is_none_or(|h| h.iter().all(|&c| c >= HIT_FLOOR));
        if let (Some(l), Some(u)) = (lower, upper) {
            assert!(l <= u, "trailing min exceeds trailing max");
        }
        per_eps.push(EpsCurve { eps, n: n_schedule.to_vec(), neg_log_mass, values, hits: row_hits, lower, upper, reliable });
    }

    let Some(chosen) = per_eps.iter().rposition(|c| c.reliable) else {
        let best = hits.as_ref().map_or(0, |h| h.iter().map(|row| *row.iter().min().unwrap()).max().unwrap_or(0));
        return Err(Error::HitStarvation { floor: HIT_FLOOR, best });
    };
    let c = &per_eps[chosen];
    let stderr = |v: f64| {
        // delta method for -log(p_hat)/n at the trailing-half extremum
        hits.as_ref().map(|h| {
            let idx = c.values.iter().rposition(|x| *x == Some(v)).unwrap_or(n_schedule.len() - 1);
            let p = h[chosen][idx] as f64 / samples as f64;
            ((1.0 - p) / (samples as f64 * p)).sqrt() / n_schedule[idx] as f64
        })
    };
    let mode_tag = if hits.is_some() { EstimateMode::MonteCarlo } else { EstimateMode::Exact };
    let make = |v: f64| EntropyEstimate { value: v, mode: mode_tag, n_used: *n_schedule.last().unwrap(), sample_count: samples, stderr: stderr(v) };
    let points: Vec<(f64, f64)> =
        n_schedule.iter().zip(&c.neg_log_mass).filter_map(|(&n, v)| v.map(|v| (n as f64, v))).collect();
    Ok(BrinKatokReport {
        lower: make(c.lower.unwrap()),
        upper: make(c.upper.unwrap()),
        eps_used: c.eps,
        slope: least_squares(&points).map(|(s, _)| s),
        per_eps,
        hit_floor: HIT_FLOOR,
    })
}

fn exact_log_masses(
    sys: &SystemDescriptor,
    oracle: &MeasureOracle,
    x: &Point,
    eps_schedule: &[f64],
    n_schedule: &[usize],
) -> Result<Vec<Vec<Option<f64>>>> {
    let SystemDescriptor::FullShift { metric: ShiftMetric::Dyadic, .. } = sys else {
        return Err(Error::UnsupportedOracle(format!("exact Bowen-ball masses need a dyadic shift, got {}", sys.name())));
    };
    let p = x.as_symbolic().ok_or(Error::MixedSystems)?;
    let mut out = Vec::with_capacity(eps_schedule.len());
    for &eps in eps_schedule {
        let m = dyadic_ball_depth(eps) - 1;
        let mut row = Vec::with_capacity(n_schedule.len());
        for &n in n_schedule {
            let (lo, hi) = (-m, n as i64 - 1 + m);
            let fixed: Vec<(i64, u8)> = (lo..=hi)
                .map(|i| p.get(i).map(|s| (i, s)).ok_or(Error::WindowExhausted { needed: lo.abs().max(hi.abs()), available: p.radius() }))
                .collect::<Result<_>>()?;
            let log_mass = cylinder_log_measure_at(oracle, &fixed)?;
            row.push(log_mass.is_finite().then_some(log_mass));
        }
        out.push(row);
    }
    Ok(out)
}

fn hit_counts(
    sys: &SystemDescriptor,
    oracle: &MeasureOracle,
    x: &Point,
    eps_schedule: &[f64],
    n_schedule: &[usize],
    samples: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    let n_max = *n_schedule.last().unwrap();
    let zero = || vec![vec![0usize; n_schedule.len()]; eps_schedule.len()];
    const CHUNK: usize = 4096;
    let chunks: Vec<Vec<Vec<usize>>> = (0..samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = zero();
            for s in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                let y = sample_point(sys, oracle, rng::derive_seed(seed, s as u64))?;
                let d = orbit_distances(sys, x, &y, n_max - 1, true)?;
                let mut prefix = Vec::with_capacity(n_max);
                let mut run = 0.0f64;
                for v in d {
                    run = run.max(v);
                    prefix.push(run);
                }
                for (e, &eps) in eps_schedule.iter().enumerate() {
                    for (ni, &n) in n_schedule.iter().enumerate() {
                        if prefix[n - 1] < eps {
                            acc[e][ni] += 1;
                        }
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = zero();
    for c in chunks {
        for (t, r) in total.iter_mut().zip(c) {
            for (a, b) in t.iter_mut().zip(r) {
                *a += b;
            }
        }
    }
    Ok(total)
}

/// `(slope, intercept)` of the least-squares line through `points`.
pub fn least_squares(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}
