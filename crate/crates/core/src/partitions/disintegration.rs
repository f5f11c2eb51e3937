//! Conditional measures given a finite past, the local Shannon–McMillan–
//! Breiman check on them, and the shifted-block comparison.
//!
//! The past of `x` at depth `P` is the strict past, coordinates `-P..=-1`,
//! matching `∨_{j=1}^{P} T^j α` for the time-0 partition `α`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::lyapunov::std_error;
use crate::partitions::FinitePartition;
use crate::rng;
use crate::systems::{cylinder_log_measure_at, cylinder_measure_at, MeasureOracle, Point};

/// `μ( · | x_{-P..=-1})` as an exact oracle.
pub fn disintegrate_past(oracle: &MeasureOracle, past_depth: usize, x: &Point) -> Result<MeasureOracle> {
    if past_depth == 0 {
        return Err(invalid("past depth must be positive"));
    }
    disintegrate_window(oracle, -(past_depth as i64), -1, x)
}

/// `μ( · | x_{lo..=hi})`.
pub fn disintegrate_window(oracle: &MeasureOracle, lo: i64, hi: i64, x: &Point) -> Result<MeasureOracle> {
    if !matches!(oracle, MeasureOracle::BernoulliIid { .. } | MeasureOracle::MarkovStationary { .. }) {
        return Err(Error::UnsupportedOracle(format!("cannot disintegrate {}", oracle.name())));
    }
    if hi < lo {
        return Err(invalid("empty conditioning window"));
    }
    let p = x.as_symbolic().ok_or(Error::MixedSystems)?;
    let symbols: Vec<u8> = (lo..=hi)
        .map(|i| p.get(i).ok_or(Error::WindowExhausted { needed: lo.abs().max(hi.abs()), available: p.radius() }))
        .collect::<Result<_>>()?;
    let block: Vec<(i64, u8)> = symbols.iter().enumerate().map(|(i, &s)| (lo + i as i64, s)).collect();
    if cylinder_measure_at(oracle, &block)? <= 0.0 {
        return Err(Error::ZeroMassAtom);
    }
    Ok(MeasureOracle::Conditional { base: Box::new(oracle.clone()), lo, symbols })
}

/// Coordinates of `α_m^n = ∨_{j=m}^{n} T^{-j} α` (inclusive).
fn block_coords(alpha: &FinitePartition, m: usize, n: usize) -> Result<Vec<i64>> {
    let FinitePartition::Cylinder { coords, .. } = alpha else {
        return Err(Error::IncompatiblePartitions("need a cylinder partition".into()));
    };
    let mut out: Vec<i64> = coords.iter().flat_map(|&c| (m as i64..=n as i64).map(move |j| c + j)).collect();
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn fixed_from_path(coords: &[i64], path_lo: i64, path: &[u8]) -> Vec<(i64, u8)> {
    coords.iter().map(|&c| (c, path[(c - path_lo) as usize])).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRow {
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmbReport {
    pub past_depth: usize,
    pub samples: usize,
    pub rows: Vec<RatioRow>,
    /// Mean of the row means over the trailing half of the schedule.
    pub limit_estimate: f64,
    pub target: f64,
    pub tolerance: f64,
    pub converged: bool,
}

fn rows_from(n_schedule: &[usize], per_sample: &[Vec<f64>]) -> Vec<RatioRow> {
    n_schedule
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let col: Vec<f64> = per_sample.iter().map(|r| r[i]).collect();
            RatioRow {
                n,
                mean: col.iter().sum::<f64>() / col.len() as f64,
                stderr: std_error(&col),
                min: col.iter().copied().fold(f64::INFINITY, f64::min),
                max: col.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect()
}

fn trailing_mean(rows: &[RatioRow]) -> f64 {
    let t = &rows[rows.len() / 2..];
    t.iter().map(|r| r.mean).sum::<f64>() / t.len() as f64
}

fn check_schedule(n_schedule: &[usize], samples: usize) -> Result<()> {
    if n_schedule.is_empty() {
        return Err(Error::EmptySchedule);
    }
    if n_schedule[0] == 0 || n_schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::ConfigInvalid { field: "n_schedule".into(), message: "must start at >= 1 and strictly increase".into() });
    }
    if samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    Ok(())
}

/// For `x ~ μ` and `y ~ μ_x` (the past-`P` conditional of `x`), the ratios
/// `-log μ_x(α_0^{N-1}(y)) / N`, compared with the entropy rate.
pub fn local_smb_check(
    oracle: &MeasureOracle,
    past_depth: usize,
    alpha: &FinitePartition,
    n_schedule: &[usize],
    samples: usize,
    tolerance: f64,
    seed: u64,
) -> Result<SmbReport> {
    check_schedule(n_schedule, samples)?;
    let chain = oracle.chain()?;
    let target = oracle.entropy_rate()?;
    let n_max = *n_schedule.last().unwrap();
    let all = block_coords(alpha, 0, n_max - 1)?;
    let lo = all[0].min(-(past_depth as i64));
    let hi = *all.last().unwrap();
    let per_sample: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut g = rng::stream(seed, s as u64);
            let x_path = chain.sample_path(-(past_depth as i64), -1, &mut g);
            let mu_x = MeasureOracle::Conditional { base: Box::new(oracle.clone()), lo: -(past_depth as i64), symbols: x_path.clone() };
            let y_path = chain.sample_conditional_path(-(past_depth as i64), &x_path, lo, hi, &mut g);
            n_schedule
                .iter()
                .map(|&n| {
                    let coords = block_coords(alpha, 0, n - 1)?;
                    let l = cylinder_log_measure_at(&mu_x, &fixed_from_path(&coords, lo, &y_path))?;
                    if !l.is_finite() {
                        return Err(Error::ZeroMassAtom);
                    }
                    Ok(-l / n as f64)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let rows = rows_from(n_schedule, &per_sample);
    let limit_estimate = trailing_mean(&rows);
    let converged = (limit_estimate - target).abs() <= tolerance * target.max(f64::MIN_POSITIVE) || limit_estimate == target;
    Ok(SmbReport { past_depth, samples, rows, limit_estimate, target, tolerance, converged })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftLemmaReport {
    pub k: usize,
    pub samples: usize,
    /// `-log μ(α_0^n(x)) / n`.
    pub base: Vec<RatioRow>,
    /// `-log μ(α_k^n(x)) / n`.
    pub shifted: Vec<RatioRow>,
    /// `(n - k + 1) / (n + 1)`: the ratio of block lengths.
    pub length_factor: Vec<f64>,
    pub base_trailing_mean: f64,
    pub shifted_trailing_mean: f64,
    pub relative_gap: f64,
    pub tolerance: f64,
    pub agree: bool,
}

pub fn shift_lemma_check(
    oracle: &MeasureOracle,
    alpha: &FinitePartition,
    k: usize,
    n_schedule: &[usize],
    samples: usize,
    tolerance: f64,
    seed: u64,
) -> Result<ShiftLemmaReport> {
    check_schedule(n_schedule, samples)?;
    if n_schedule[0] < k {
        return Err(invalid("every n in the schedule must be at least k"));
    }
    let chain = oracle.chain()?;
    let n_max = *n_schedule.last().unwrap();
    let all = block_coords(alpha, 0, n_max)?;
    let (lo, hi) = (all[0], *all.last().unwrap());
    let per_sample: Vec<(Vec<f64>, Vec<f64>)> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut g = rng::stream(seed, s as u64);
            let path = chain.sample_path(lo, hi, &mut g);
            let mut a = Vec::with_capacity(n_schedule.len());
            let mut b = Vec::with_capacity(n_schedule.len());
            for &n in n_schedule {
                for (j0, out) in [(0, &mut a), (k, &mut b)] {
                    let coords = block_coords(alpha, j0, n)?;
                    let l = cylinder_log_measure_at(oracle, &fixed_from_path(&coords, lo, &path))?;
                    if !l.is_finite() {
                        return Err(Error::ZeroMassAtom);
                    }
                    out.push(-l / n as f64);
                }
            }
            Ok((a, b))
        })
        .collect::<Result<_>>()?;
    let (a, b): (Vec<Vec<f64>>, Vec<Vec<f64>>) = per_sample.into_iter().unzip();
    let base = rows_from(n_schedule, &a);
    let shifted = rows_from(n_schedule, &b);
    let base_trailing_mean = trailing_mean(&base);
    let shifted_trailing_mean = trailing_mean(&shifted);
    let relative_gap = if base_trailing_mean == 0.0 {
        shifted_trailing_mean.abs()
    } else {
        (base_trailing_mean - shifted_trailing_mean).abs() / base_trailing_mean
    };
    Ok(ShiftLemmaReport {
        k,
        samples,
        length_factor: n_schedule.iter().map(|&n| (n - k + 1) as f64 / (n + 1) as f64).collect(),
        base,
        shifted,
        base_trailing_mean,
        shifted_trailing_mean,
        relative_gap,
        tolerance,
        agree: relative_gap <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{cylinder_measure, sample_point, SymbolicPoint, SystemDescriptor};

    fn markov() -> MeasureOracle {
        MeasureOracle::markov(vec![vec![0.9, 0.1], vec![0.5, 0.5]]).unwrap()
    }

    #[test]
    fn bernoulli_conditional_is_unconditional_on_the_future() {
        let o = MeasureOracle::bernoulli(vec![0.5, 0.5]).unwrap();
        let sys = SystemDescriptor::dyadic_shift(2, 16);
        let x = sample_point(&sys, &o, 4).unwrap();
        let c = disintegrate_past(&o, 8, &x).unwrap();
        for len in 1..=10 {
            let word: Vec<u8> = (0..len).map(|i| (i % 3 == 0) as u8).collect();
            assert!((cylinder_measure(&c, &word, 0).unwrap() - 2f64.powi(-(len as i32))).abs() < 1e-15);
        }
    }

    #[test]
    fn markov_conditional_restarts_from_last_past_symbol() {
        let o = markov();
        for a in 0..2u8 {
            let x = Point::Symbolic(SymbolicPoint::new(-3, vec![1, 0, a, 1, 0, 0, 1]));
            let c = disintegrate_past(&o, 2, &x).unwrap();
            for b in 0..2u8 {
                let p = [[0.9, 0.1], [0.5, 0.5]][a as usize][b as usize];
                assert!((cylinder_measure(&c, &[b], 0).unwrap() - p).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn total_probability_over_pasts() {
        let o = markov();
        let word = [0u8, 1, 1, 0];
        let direct = cylinder_measure(&o, &word, 0).unwrap();
        let p = 3;
        let mut total = 0.0;
        for past in 0..(1u8 << p) {
            let syms: Vec<u8> = (0..p).map(|i| (past >> (p - 1 - i)) & 1).chain([0; 4]).collect();
            let x = Point::Symbolic(SymbolicPoint::new(-(p as i64), syms.clone()));
            let pm = cylinder_measure(&o, &syms[..p as usize], -(p as i64)).unwrap();
            let c = disintegrate_past(&o, p as usize, &x).unwrap();
            total += pm * cylinder_measure(&c, &word, 0).unwrap();
        }
        assert!((total - direct).abs() < 1e-15);
    }

    #[test]
    fn smb_fair_coin_is_exact() {
        let o = MeasureOracle::bernoulli(vec![0.5, 0.5]).unwrap();
        let rep = local_smb_check(&o, 8, &FinitePartition::time_zero(2), &[1, 2, 5, 10, 50], 20, 0.02, 1).unwrap();
        for r in &rep.rows {
            assert!((r.min - 2f64.ln()).abs() < 1e-12 && (r.max - 2f64.ln()).abs() < 1e-12);
        }
        assert!(rep.converged);
    }

    #[test]
    fn smb_point_mass_is_zero() {
        let o = MeasureOracle::bernoulli(vec![1.0, 0.0]).unwrap();
        let rep = local_smb_check(&o, 4, &FinitePartition::time_zero(2), &[1, 10], 5, 0.02, 1).unwrap();
        assert!(rep.rows.iter().all(|r| r.max == 0.0));
        assert!(rep.converged);
    }

    #[test]
    fn shift_lemma_fair_coin() {
        let o = MeasureOracle::bernoulli(vec![0.5, 0.5]).unwrap();
        let ns = [10, 20, 40, 80];
        let rep = shift_lemma_check(&o, &FinitePartition::time_zero(2), 3, &ns, 10, 0.1, 2).unwrap();
        for (i, &n) in ns.iter().enumerate() {
            assert!((rep.base[i].mean - (n + 1) as f64 / n as f64 * 2f64.ln()).abs() < 1e-12);
            assert!((rep.shifted[i].mean - (n - 2) as f64 / n as f64 * 2f64.ln()).abs() < 1e-12);
            assert!((rep.shifted[i].mean / rep.base[i].mean - rep.length_factor[i]).abs() < 1e-12);
        }
        let same = shift_lemma_check(&o, &FinitePartition::time_zero(2), 0, &ns, 3, 0.0, 2).unwrap();
        assert_eq!(same.base, same.shifted);
    }

    #[test]
    fn markov_smb_small_run() {
        let o = markov();
        let h = o.entropy_rate().unwrap();
        let rep = local_smb_check(&o, 8, &FinitePartition::time_zero(2), &[500, 1000, 2000], 50, 0.05, 3).unwrap();
        assert!((rep.limit_estimate / h - 1.0).abs() < 0.05, "{} vs {h}", rep.limit_estimate);
    }
}
