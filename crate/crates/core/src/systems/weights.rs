//! Weight sequences `a = (a_k)` for the weighted sequence space and the
//! left shift acting on it.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightRule {
    /// `a_k = 1 / (k^power + 1)`; `power = 2` is the default sequence.
    InversePower { power: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WitnessRule {
    /// `b_m = (m + 1)^power`
    Polynomial { power: f64 },
}

/// Sub-exponential witness `(C, b)` with `a_k / a_l <= C * b_{|k-l|}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Witness {
    pub c: f64,
    pub rule: WitnessRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSequence {
    pub rule: WeightRule,
    pub witness: Witness,
}

impl Default for WeightSequence {
    fn default() -> Self {
        WeightSequence {
            rule: WeightRule::InversePower { power: 2.0 },
            witness: Witness { c: 2.0, rule: WitnessRule::Polynomial { power: 2.0 } },
        }
    }
}

/// Outcome of the numerical checks on a weight sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightCheck {
    pub horizon: usize,
    pub strictly_decreasing: bool,
    pub witness_holds: bool,
    /// Largest `a_k / (a_l * C * b_{|k-l|})` over the grid; `<= 1` when the witness holds.
    pub worst_witness_ratio: f64,
    /// `(1/k) |log b_k|` at the horizon.
    pub witness_growth_at_horizon: f64,
    pub partial_sum: f64,
}

impl WeightSequence {
    pub fn validate(&self) -> Result<()> {
        match self.rule {
            WeightRule::InversePower { power } if power > 0.0 && power.is_finite() => {}
            _ => return Err(invalid("weight power must be positive and finite")),
        }
        match self.witness.rule {
            WitnessRule::Polynomial { power } if power >= 0.0 && power.is_finite() => {}
            _ => return Err(invalid("witness power must be nonnegative and finite")),
        }
        if !(self.witness.c > 0.0) {
            return Err(invalid("witness constant C must be positive"));
        }
        Ok(())
    }

    #[inline]
    pub fn a(&self, k: u64) -> f64 {
        match self.rule {
            WeightRule::InversePower { power } => 1.0 / ((k as f64).powf(power) + 1.0),
        }
    }

    #[inline]
    pub fn b(&self, m: u64) -> f64 {
        match self.witness.rule {
            WitnessRule::Polynomial { power } => ((m + 1) as f64).powf(power),
        }
    }

    /// `sum_{k > from} a_k`: direct sum over the next 10^4 terms plus a
    /// midpoint integral for the remainder.
    pub fn tail_sum(&self, from: u64) -> f64 {
        let cutoff = from + 10_000;
        let mut s = 0.0;
        for k in (from + 1..=cutoff).rev() {
            s += self.a(k);
        }
        match self.rule {
            // integral of x^{-p} from cutoff to infinity
            WeightRule::InversePower { power } if power > 1.0 => {
                s + (cutoff as f64 + 0.5).powf(1.0 - power) / (power - 1.0)
            }
            _ => f64::INFINITY,
        }
    }

    pub fn check(&self, horizon: usize) -> WeightCheck {
        let h = horizon as u64;
        let strictly_decreasing = (0..h).all(|k| self.a(k + 1) < self.a(k));
        let mut worst = 0.0f64;
        for k in 0..=h {
            for l in 0..=h {
                let bound = self.witness.c * self.b(k.abs_diff(l));
                worst = worst.max(self.a(k) / self.a(l) / bound);
            }
        }
        let growth = if h == 0 { 0.0 } else { self.b(h).ln().abs() / h as f64 };
        WeightCheck {
            horizon,
            strictly_decreasing,
            witness_holds: worst <= 1.0,
            worst_witness_ratio: worst,
            witness_growth_at_horizon: growth,
            partial_sum: (0..=h).map(|k| self.a(k)).sum(),
        }
    }
}

/// `(sum_n a_{|n|} |x_n|^2)^{1/2}` for coefficients at indices `lo, lo+1, ...`.
pub fn weighted_norm(w: &WeightSequence, lo: i64, coeffs: &[f64]) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(j, c)| w.a((lo + j as i64).unsigned_abs()) * c * c)
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorNorm {
    pub k: u64,
    pub window: i64,
    pub value: f64,
    /// Index `n` where `a_{|n-k|} / a_{|n|}` is largest.
    pub argmax: i64,
    /// The maximiser lies strictly inside the window, so widening it cannot
    /// change the value unless the ratio grows again beyond the edge.
    pub attained_in_range: bool,
    /// `sqrt` of the ratio at the window edges.
    pub edge_value: f64,
}

/// `||T^k||` on the weighted space restricted to indices `|n| <= window`:
/// `max_n (a_{|n-k|} / a_{|n|})^{1/2}`.
pub fn operator_norm_power(w: &WeightSequence, k: u64, window: i64) -> OperatorNorm {
    let ratio = |n: i64| w.a((n - k as i64).unsigned_abs()) / w.a(n.unsigned_abs());
    let mut best = f64::NEG_INFINITY;
    let mut argmax = 0;
    for n in -window..=window {
        let r = ratio(n);
        if r > best {
            best = r;
            argmax = n;
        }
    }
    OperatorNorm {
        k,
        window,
        value: best.sqrt(),
        argmax,
        attained_in_range: argmax.abs() < window,
        edge_value: ratio(window).max(ratio(-window)).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_weights_are_subexponential_on_grid() {
        let w = WeightSequence::default();
        let c = w.check(300);
        assert!(c.strictly_decreasing);
        assert!(c.witness_holds, "worst ratio {}", c.worst_witness_ratio);
        assert!(c.witness_growth_at_horizon < 0.04);
        assert!(c.partial_sum < 2.1);
    }

    #[test]
    fn weighted_norm_examples() {
        let w = WeightSequence::default();
        assert_eq!(weighted_norm(&w, -3, &[0.0; 7]), 0.0);
        let v = weighted_norm(&w, 2, &[1.0]);
        assert!((v - (0.2f64).sqrt()).abs() < 1e-15);
        let base = [0.3, -1.2, 2.0, 0.0, 0.7];
        let n = weighted_norm(&w, -2, &base);
        let scaled: Vec<f64> = base.iter().map(|x| -3.5 * x).collect();
        assert!((weighted_norm(&w, -2, &scaled) - 3.5 * n).abs() < 1e-12);
    }

    #[test]
    fn operator_norm_identity_and_growth() {
        let w = WeightSequence::default();
        assert_eq!(operator_norm_power(&w, 0, 256).value, 1.0);
        let k100 = operator_norm_power(&w, 100, 256);
        assert!(k100.attained_in_range);
        assert!(k100.value.ln() / 100.0 < 0.05);
        for k in 1..60 {
            assert!(operator_norm_power(&w, k, 256).value > 1.0);
        }
    }

    #[test]
    fn tail_sum_matches_direct_sum() {
        let w = WeightSequence::default();
        let direct: f64 = (257..5_000_000u64).map(|k| w.a(k)).sum();
        let est = w.tail_sum(256);
        assert!((direct - est).abs() < 1e-6, "{direct} vs {est}");
        // two-sided tail of the default sequence at N = 256 stays below 0.09
        assert!((2.0 * est).sqrt() < 0.09);
    }
}
