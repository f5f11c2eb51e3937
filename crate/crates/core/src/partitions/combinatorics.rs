//! Hamming pseudometric on words, the constant `Δ(ε, #α)` and exact
//! Hamming-ball counts against their exponential bounds.

use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Fraction of positions where `v` and `w` differ.
pub fn hamming_pseudometric(v: &[u8], w: &[u8]) -> Result<f64> {
    if v.len() != w.len() {
        return Err(Error::LengthMismatch(v.len(), w.len()));
    }
    if v.is_empty() {
        return Err(invalid("words must be nonempty"));
    }
    let d = v.iter().zip(w).filter(|(a, b)| a != b).count();
    Ok(d as f64 / v.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaConstant {
    pub eps: f64,
    pub alphabet_size: usize,
    pub value: f64,
}

/// `Δ = 2√ε log(#α - 1) - 2√ε log(2√ε) - (1 - 2√ε) log(1 - 2√ε)` in nats.
pub fn delta_constant(eps: f64, alphabet_size: usize) -> Result<DeltaConstant> {
    if alphabet_size < 2 {
        return Err(invalid("alphabet needs at least two symbols"));
    }
    let t = 2.0 * eps.sqrt();
    if !(eps > 0.0 && t < 1.0) {
        return Err(Error::EpsOutOfRange(eps));
    }
    let value = t * ((alphabet_size - 1) as f64).ln() - t * t.ln() - (1.0 - t) * (1.0 - t).ln();
    Ok(DeltaConstant { eps, alphabet_size, value })
}

fn binomial(n: u32, k: u32) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `sum_{i<=top} C(n, i) (a-1)^i`, exact.
fn ball_sum(n: u32, a: u128, top: u32) -> Result<u128> {
    let mut s: u128 = 0;
    for i in 0..=top.min(n) {
        let term = (a - 1)
            .checked_pow(i)
            .and_then(|p| p.checked_mul(binomial(n, i)))
            .ok_or_else(|| invalid("count overflows 128 bits"))?;
        s = s.checked_add(term).ok_or_else(|| invalid("count overflows 128 bits"))?;
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HammingBallReport {
    pub n: usize,
    pub alphabet_size: usize,
    pub eps: f64,
    /// `⌈2n√ε⌉`.
    pub m: usize,
    /// Words at Hamming distance `i <= m - 1` (strictly inside radius `2n√ε`).
    pub exact_count: u128,
    /// `sum_{i<=m} C(n,i)(#α-1)^i`, the left side of the crude inequality.
    pub crude_lhs: u128,
    /// `m C(n,m) (#α-1)^m`.
    pub crude_bound: f64,
    pub crude_holds: bool,
    /// `exp((Δ + ε) n)`.
    pub stirling_bound: f64,
    pub stirling_holds: bool,
    pub radius_convention: &'static str,
}

pub fn hamming_ball_bound_check(n: usize, alphabet_size: usize, eps: f64) -> Result<HammingBallReport> {
    if n == 0 || n > 64 {
        return Err(invalid("n must be in 1..=64"));
    }
    let delta = delta_constant(eps, alphabet_size)?;
    let a = alphabet_size as u128;
    // guard against 2n√ε landing a hair above an integer
    let m = (2.0 * n as f64 * eps.sqrt() - 1e-9).ceil().max(0.0) as usize;
    let exact_count = if m == 0 { 0 } else { ball_sum(n as u32, a, m as u32 - 1)? };
    let crude_lhs = ball_sum(n as u32, a, m as u32)?;
    let crude_bound = m as f64 * binomial(n as u32, m as u32) as f64 * ((alphabet_size - 1) as f64).powi(m as i32);
    let stirling_bound = ((delta.value + eps) * n as f64).exp();
    Ok(HammingBallReport {
        n,
        alphabet_size,
        eps,
        m,
        exact_count,
        crude_lhs,
        crude_bound,
        crude_holds: (crude_lhs as f64) < crude_bound,
        stirling_bound,
        stirling_holds: exact_count as f64 <= stirling_bound,
        radius_convention: "open ball: distances i <= ceil(2 n sqrt(eps)) - 1",
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HammingScan {
    pub rows: Vec<HammingBallReport>,
    /// Least `n` in the range from which every later row satisfies the bound.
    pub stirling_holds_from: Option<usize>,
    pub crude_holds_from: Option<usize>,
    /// `n` values where the crude inequality fails.
    pub crude_failures: Vec<usize>,
}

pub fn hamming_bounds_scan(ns: impl IntoIterator<Item = usize>, alphabet_size: usize, eps: f64) -> Result<HammingScan> {
    let rows: Vec<HammingBallReport> =
        ns.into_iter().map(|n| hamming_ball_bound_check(n, alphabet_size, eps)).collect::<Result<_>>()?;
    let holds_from = |f: &dyn Fn(&HammingBallReport) -> bool| match rows.iter().rposition(|r| !f(r)) {
        None => rows.first().map(|r| r.n),
        Some(i) => rows.get(i + 1).map(|r| r.n),
    };
    Ok(HammingScan {
        stirling_holds_from: holds_from(&|r| r.stirling_holds),
        crude_holds_from: holds_from(&|r| r.crude_holds),
        crude_failures: rows.iter().filter(|r| !r.crude_holds).map(|r| r.n).collect(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h2(p: f64) -> f64 {
        -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming_pseudometric(&[1, 0, 1], &[1, 0, 1]).unwrap(), 0.0);
        assert_eq!(hamming_pseudometric(&[0, 0, 0, 0], &[0, 1, 0, 0]).unwrap(), 0.25);
        assert_eq!(hamming_pseudometric(&[0, 1], &[1, 0]).unwrap(), 1.0);
        assert_eq!(hamming_pseudometric(&[0], &[0, 1]), Err(Error::LengthMismatch(1, 2)));
    }

    #[test]
    fn hamming_is_a_pseudometric_exhaustively() {
        for n in 1..=8usize {
            let words: Vec<Vec<u8>> = (0..1u32 << n).map(|w| (0..n).map(|i| ((w >> i) & 1) as u8).collect()).collect();
            let step = if n > 5 { 7 } else { 1 };
            for u in words.iter().step_by(step) {
                for v in &words {
                    let uv = hamming_pseudometric(u, v).unwrap();
                    assert_eq!(uv, hamming_pseudometric(v, u).unwrap());
                    for w in words.iter().step_by(step) {
                        let t = hamming_pseudometric(u, w).unwrap() + hamming_pseudometric(w, v).unwrap();
                        assert!(uv <= t + 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn delta_examples() {
        let d = delta_constant(0.01, 2).unwrap().value;
        assert!((d - (0.2 * -(0.2f64).ln() + 0.8 * -(0.8f64).ln())).abs() < 1e-12);
        for eps in [0.001, 0.01, 0.04, 0.1, 0.2] {
            assert!((delta_constant(eps, 2).unwrap().value - h2(2.0 * eps.sqrt())).abs() < 1e-12);
        }
        let v: Vec<f64> = [1e-2, 1e-4, 1e-6].iter().map(|&e| delta_constant(e, 2).unwrap().value).collect();
        assert!(v[0] > v[1] && v[1] > v[2] && v[2] > 0.0 && v[2] < 0.03);
        assert_eq!(delta_constant(0.25, 2), Err(Error::EpsOutOfRange(0.25)));
        assert_eq!(delta_constant(0.0, 2), Err(Error::EpsOutOfRange(0.0)));
        assert!(delta_constant(0.01, 3).unwrap().value > delta_constant(0.01, 2).unwrap().value);
    }

    #[test]
    fn ball_counts_by_enumeration() {
        for n in 1..=12usize {
            for eps in [0.001, 0.01, 0.04, 0.09] {
                let r = hamming_ball_bound_check(n, 2, eps).unwrap();
                let brute = (0..1u32 << n).filter(|w| (w.count_ones() as f64) < 2.0 * n as f64 * eps.sqrt() - 1e-9).count();
                assert_eq!(r.exact_count, brute as u128, "n={n} eps={eps}");
            }
        }
        // radius 2n√ε = 1.6 at n = 4 covers distances 0 and 1
        assert_eq!(hamming_ball_bound_check(4, 2, 0.04).unwrap().exact_count, 5);
    }

    #[test]
    fn stirling_bound_on_range_and_crude_failure() {
        let scan = hamming_bounds_scan(12..=30, 2, 0.04).unwrap();
        assert!(scan.rows.iter().all(|r| r.stirling_holds));
        assert_eq!(scan.stirling_holds_from, Some(12));
        let r20 = &scan.rows[8];
        assert_eq!(r20.m, 8);
        assert_eq!(r20.exact_count, (0..=7).map(|i| binomial(20, i)).sum::<u128>());
        let small = hamming_ball_bound_check(2, 2, 0.04).unwrap();
        assert_eq!(small.m, 1);
        assert_eq!(small.crude_lhs, 3);
        assert!(!small.crude_holds);
    }
}
