//! Invariant measures: Lebesgue on the torus, Bernoulli and stationary
//! Markov measures on shift spaces, products, and conditional measures of
//! Markov/Bernoulli measures given a block of coordinates.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{self, StreamRng};
use crate::systems::{Point, SymbolicPoint, SystemDescriptor, TorusPoint};

const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureOracle {
    LebesgueTorus,
    BernoulliIid {
        p: Vec<f64>,
    },
    MarkovStationary {
        transition: Vec<Vec<f64>>,
        stationary: Vec<f64>,
    },
    Product {
        left: Box<MeasureOracle>,
        right: Box<MeasureOracle>,
    },
    /// `base` conditioned on the coordinates `lo..=hi` taking `symbols`.
    Conditional {
        base: Box<MeasureOracle>,
        lo: i64,
        symbols: Vec<u8>,
    },
}

impl MeasureOracle {
    pub fn bernoulli(p: Vec<f64>) -> Result<Self> {
        let o = MeasureOracle::BernoulliIid { p };
        o.validate()?;
        Ok(o)
    }

    /// Markov measure with the stationary vector solved from `transition`.
    /// Fails when the stationary vector is not unique.
    pub fn markov(transition: Vec<Vec<f64>>) -> Result<Self> {
        check_stochastic(&transition)?;
        let stationary = stationary_vector(&transition)?;
        let o = MeasureOracle::MarkovStationary { transition, stationary };
        o.validate()?;
        Ok(o)
    }

    pub fn markov_with_stationary(transition: Vec<Vec<f64>>, stationary: Vec<f64>) -> Result<Self> {
        let o = MeasureOracle::MarkovStationary { transition, stationary };
        o.validate()?;
        Ok(o)
    }

    pub fn product(left: MeasureOracle, right: MeasureOracle) -> Self {
        MeasureOracle::Product { left: Box::new(left), right: Box::new(right) }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MeasureOracle::LebesgueTorus => Ok(()),
            MeasureOracle::BernoulliIid { p } => check_probability(p, "p"),
            MeasureOracle::MarkovStationary { transition, stationary } => {
                check_stochastic(transition)?;
                check_probability(stationary, "stationary")?;
                if stationary.len() != transition.len() {
                    return Err(invalid("stationary vector length differs from transition matrix"));
                }
                let k = stationary.len();
                for j in 0..k {
                    let v: f64 = (0..k).map(|i| stationary[i] * transition[i][j]).sum();
                    if (v - stationary[j]).abs() > STOCHASTIC_TOL {
                        return Err(invalid(format!(
                            "stationary vector fails piP = pi at state {j} (residual {:e})",
                            v - stationary[j]
                        )));
                    }
                }
                Ok(())
            }
            MeasureOracle::Product { left, right } => {
                left.validate()?;
                right.validate()
            }
            MeasureOracle::Conditional { base, symbols, .. } => {
                base.validate()?;
                let k = base.alphabet_size().ok_or_else(|| {
                    invalid("conditional oracle needs a Bernoulli or Markov base")
                })?;
                if symbols.iter().any(|&s| s as usize >= k) {
                    return Err(invalid("conditioning symbol outside alphabet"));
                }
                if symbols.is_empty() {
                    return Err(invalid("conditioning block is empty"));
                }
                Ok(())
            }
        }
    }

    pub fn alphabet_size(&self) -> Option<usize> {
        match self {
            MeasureOracle::BernoulliIid { p } => Some(p.len()),
            MeasureOracle::MarkovStationary { stationary, .. } => Some(stationary.len()),
            MeasureOracle::Conditional { base, .. } => base.alphabet_size(),
            _ => None,
        }
    }

    /// Transition structure for exact cylinder evaluation, if this oracle has one.
    pub fn chain(&self) -> Result<Chain> {
        match self {
            MeasureOracle::BernoulliIid { p } => Ok(Chain::iid(p.clone())),
            MeasureOracle::MarkovStationary { transition, stationary } => {
                Ok(Chain::markov(transition.clone(), stationary.clone()))
            }
            MeasureOracle::Conditional { base, .. } => base.chain(),
            other => Err(Error::UnsupportedOracle(format!("{} has no cylinder structure", other.name()))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MeasureOracle::LebesgueTorus => "lebesgue-torus",
            MeasureOracle::BernoulliIid { .. } => "bernoulli-iid",
            MeasureOracle::MarkovStationary { .. } => "markov-stationary",
            MeasureOracle::Product { .. } => "product",
            MeasureOracle::Conditional { .. } => "conditional",
        }
    }

    /// Shannon entropy rate in nats for Bernoulli/Markov oracles.
    pub fn entropy_rate(&self) -> Result<f64> {
        let chain = self.chain()?;
        Ok(chain.entropy_rate())
    }
}

fn check_probability(p: &[f64], name: &str) -> Result<()> {
    if p.is_empty() {
        return Err(invalid(format!("{name} is empty")));
    }
    if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(invalid(format!("{name} has entries outside [0, 1]")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > STOCHASTIC_TOL {
        return Err(invalid(format!("{name} sums to {s}, not 1")));
    }
    Ok(())
}

fn check_stochastic(m: &[Vec<f64>]) -> Result<()> {
    if m.is_empty() || m.iter().any(|row| row.len() != m.len()) {
        return Err(invalid("transition matrix must be square and nonempty"));
    }
    for (i, row) in m.iter().enumerate() {
        check_probability(row, &format!("transition row {i}"))?;
    }
    Ok(())
}

/// Solves `pi P = pi`, `sum pi = 1` by LU on the bordered system.
fn stationary_vector(p: &[Vec<f64>]) -> Result<Vec<f64>> {
    let k = p.len();
    let mut a = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            a[(i, j)] = p[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..k {
        a[(k - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(k);
    rhs[k - 1] = 1.0;
    let lu = a.lu();
    let pi = lu
        .solve(&rhs)
        .ok_or_else(|| invalid("stationary vector is not unique; pass it explicitly"))?;
    let mut pi: Vec<f64> = pi.iter().map(|&x| if x.abs() < 1e-15 { 0.0 } else { x }).collect();
    if pi.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(invalid("stationary vector is not unique; pass it explicitly"));
    }
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= s);
    Ok(pi)
}

/// Finite-state stationary chain: initial law `pi`, forward kernel `p`
/// and time-reversed kernel `rev`. Bernoulli measures are chains whose
/// rows all equal `pi`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub pi: Vec<f64>,
    pub p: Vec<Vec<f64>>,
    pub rev: Vec<Vec<f64>>,
    iid: bool,
}

impl Chain {
    pub fn iid(p: Vec<f64>) -> Self {
        let rows = vec![p.clone(); p.len()];
        Chain { pi: p, p: rows.clone(), rev: rows, iid: true }
    }

    pub fn markov(p: Vec<Vec<f64>>, pi: Vec<f64>) -> Self {
        let k = pi.len();
        let mut rev = vec![vec![0.0; k]; k];
        for a in 0..k {
            for b in 0..k {
                // states of zero stationary mass are never visited
                rev[a][b] = if pi[a] > 0.0 { pi[b] * p[b][a] / pi[a] } else { pi[b] };
            }
        }
        Chain { pi, p, rev, iid: false }
    }

    pub fn alphabet(&self) -> usize {
        self.pi.len()
    }

    pub fn is_iid(&self) -> bool {
        self.iid
    }

    pub fn entropy_rate(&self) -> f64 {
        let k = self.alphabet();
        let mut h = 0.0;
        for i in 0..k {
            for j in 0..k {
                h -= self.pi[i] * xlogx(self.p[i][j]);
            }
        }
        h
    }

    /// Product of transition probabilities along a path with the given gaps.
    fn kernel_power(kernel: &[Vec<f64>], gap: u64, cache: &mut HashMap<u64, Vec<Vec<f64>>>) -> Vec<Vec<f64>> {
        if gap == 1 {
            return kernel.to_vec();
        }
        if let Some(m) = cache.get(&gap) {
            return m.clone();
        }
        let m = mat_pow(kernel, gap);
        cache.insert(gap, m.clone());
        m
    }

    /// `P^gap` (the i.i.d. kernel is gap-independent).
    pub fn kernel(&self, gap: u64) -> Vec<Vec<f64>> {
        if self.iid || gap == 1 {
            self.p.clone()
        } else {
            mat_pow(&self.p, gap)
        }
    }

    /// Exact `mu{z : z_c = s for (c, s) in fixed}`.
    pub fn cylinder(&self, fixed: &[(i64, u8)]) -> f64 {
        self.cylinder_factors(fixed).map_or(0.0, |f| f.iter().product())
    }

    /// `log` of [`Chain::cylinder`]; `-inf` for null cylinders. Safe for
    /// blocks long enough that the mass underflows.
    pub fn log_cylinder(&self, fixed: &[(i64, u8)]) -> f64 {
        log_of(self.cylinder_factors(fixed))
    }

    /// Transition factors whose product is the cylinder mass; `None` when a
    /// coordinate is fixed twice to different symbols.
    fn cylinder_factors(&self, fixed: &[(i64, u8)]) -> Option<Vec<f64>> {
        let mut f: Vec<(i64, u8)> = fixed.to_vec();
        f.sort_by_key(|&(c, _)| c);
        let mut out = Vec::with_capacity(f.len());
        if f.is_empty() {
            return Some(out);
        }
        let mut cache = HashMap::new();
        out.push(self.pi[f[0].1 as usize]);
        for w in f.windows(2) {
            let (c0, s0) = w[0];
            let (c1, s1) = w[1];
            if c0 == c1 {
                if s0 != s1 {
                    return None;
                }
                continue;
            }
            out.push(self.step(c0, s0, c1, s1, &mut cache));
        }
        Some(out)
    }

    fn step(&self, c0: i64, s0: u8, c1: i64, s1: u8, cache: &mut HashMap<u64, Vec<Vec<f64>>>) -> f64 {
        let gap = (c1 - c0) as u64;
        if self.iid || gap == 1 {
            self.p[s0 as usize][s1 as usize]
        } else {
            Self::kernel_power(&self.p, gap, cache)[s0 as usize][s1 as usize]
        }
    }

    /// Measure of `fixed` conditioned on coordinates `lo..lo+block.len()`
    /// equal to `block`.
    pub fn conditional_cylinder(&self, lo: i64, block: &[u8], fixed: &[(i64, u8)]) -> f64 {
        self.conditional_factors(lo, block, fixed).map_or(0.0, |f| f.iter().product())
    }

    pub fn log_conditional_cylinder(&self, lo: i64, block: &[u8], fixed: &[(i64, u8)]) -> f64 {
        log_of(self.conditional_factors(lo, block, fixed))
    }

    fn conditional_factors(&self, lo: i64, block: &[u8], fixed: &[(i64, u8)]) -> Option<Vec<f64>> {
        let hi = lo + block.len() as i64 - 1;
        let mut above: Vec<(i64, u8)> = Vec::new();
        let mut below: Vec<(i64, u8)> = Vec::new();
        for &(c, s) in fixed {
            if c > hi {
                above.push((c, s));
            } else if c < lo {
                below.push((c, s));
            } else if block[(c - lo) as usize] != s {
                return None;
            }
        }
        above.sort_by_key(|&(c, _)| c);
        below.sort_by_key(|&(c, _)| std::cmp::Reverse(c));
        let mut out = Vec::with_capacity(above.len() + below.len());
        let mut cache = HashMap::new();
        let mut prev = (hi, block[block.len() - 1]);
        for &(c, s) in &above {
            if c == prev.0 {
                if s != prev.1 {
                    return None;
                }
                continue;
            }
            out.push(self.step(prev.0, prev.1, c, s, &mut cache));
            prev = (c, s);
        }
        let mut rcache = HashMap::new();
        let mut prev = (lo, block[0]);
        for &(c, s) in &below {
            if c == prev.0 {
                if s != prev.1 {
                    return None;
                }
                continue;
            }
            let gap = (prev.0 - c) as u64;
            out.push(if self.iid || gap == 1 {
                self.rev[prev.1 as usize][s as usize]
            } else {
                Self::kernel_power(&self.rev, gap, &mut rcache)[prev.1 as usize][s as usize]
            });
            prev = (c, s);
        }
        Some(out)
    }

    pub fn draw(dist: &[f64], rng: &mut StreamRng) -> u8 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &q) in dist.iter().enumerate() {
            acc += q;
            if u < acc {
                return i as u8;
            }
        }
        // rounding left u above the cumulative sum; take the last state with mass
        dist.iter().rposition(|&q| q > 0.0).unwrap_or(0) as u8
    }

    /// Stationary path on coordinates `lo..=hi`.
    pub fn sample_path(&self, lo: i64, hi: i64, rng: &mut StreamRng) -> Vec<u8> {
        let len = (hi - lo + 1).max(0) as usize;
        let mut out = Vec::with_capacity(len);
        if len == 0 {
            return out;
        }
        let mut s = Self::draw(&self.pi, rng);
        out.push(s);
        for _ in 1..len {
            s = Self::draw(&self.p[s as usize], rng);
            out.push(s);
        }
        out
    }

    /// Path on `lo..=hi` conditioned on `block` at `block_lo..`.
    pub fn sample_conditional_path(
        &self,
        block_lo: i64,
        block: &[u8],
        lo: i64,
        hi: i64,
        rng: &mut StreamRng,
    ) -> Vec<u8> {
        let block_hi = block_lo + block.len() as i64 - 1;
        let len = (hi - lo + 1).max(0) as usize;
        let mut out = vec![0u8; len];
        for c in lo..=hi {
            if (block_lo..=block_hi).contains(&c) {
                out[(c - lo) as usize] = block[(c - block_lo) as usize];
            }
        }
        // forward from the top of the block
        let mut s = block[block.len() - 1];
        for c in (block_hi + 1)..=hi {
            s = Self::draw(&self.p[s as usize], rng);
            if c >= lo {
                out[(c - lo) as usize] = s;
            }
        }
        // backward from the bottom of the block
        let mut s = block[0];
        let mut c = block_lo - 1;
        while c >= lo {
            s = Self::draw(&self.rev[s as usize], rng);
            if c <= hi {
                out[(c - lo) as usize] = s;
            }
            c -= 1;
        }
        out
    }
}

fn log_of(factors: Option<Vec<f64>>) -> f64 {
    match factors {
        Some(f) if f.iter().all(|&x| x > 0.0) => f.iter().map(|x| x.ln()).sum(),
        _ => f64::NEG_INFINITY,
    }
}

pub(crate) fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = a.len();
    let mut c = vec![vec![0.0; k]; k];
    for i in 0..k {
        for l in 0..k {
            let ail = a[i][l];
            if ail == 0.0 {
                continue;
            }
            for j in 0..k {
                c[i][j] += ail * b[l][j];
            }
        }
    }
    c
}

fn mat_pow(m: &[Vec<f64>], mut e: u64) -> Vec<Vec<f64>> {
    let k = m.len();
    let mut result: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut base = m.to_vec();
    while e > 0 {
        if e & 1 == 1 {
            result = mat_mul(&result, &base);
        }
        base = mat_mul(&base, &base);
        e >>= 1;
    }
    result
}

/// Draw a point of `sys` distributed according to `oracle`.
pub fn sample_point(sys: &SystemDescriptor, oracle: &MeasureOracle, seed: u64) -> Result<Point> {
    let mut rng = rng::stream(seed, 0);
    sample_with(sys, oracle, seed, &mut rng)
}

fn sample_with(sys: &SystemDescriptor, oracle: &MeasureOracle, seed: u64, rng: &mut StreamRng) -> Result<Point> {
    match (sys, oracle) {
        (SystemDescriptor::Inverse { inner }, _) => sample_with(inner, oracle, seed, rng),
        (
            SystemDescriptor::ToralAutomorphism { .. } | SystemDescriptor::TorusTranslation { .. },
            MeasureOracle::LebesgueTorus,
        ) => Ok(Point::Torus(TorusPoint::from_raw(rng.random(), rng.random()))),
        (SystemDescriptor::FullShift { alphabet_size, window, .. }, o) => {
            let k = o.alphabet_size().ok_or_else(|| {
                Error::IncompatibleOracle(format!("{} cannot drive a shift", o.name()))
            })?;
            if k != *alphabet_size as usize {
                return Err(Error::IncompatibleOracle(format!(
                    "oracle alphabet {k} differs from shift alphabet {alphabet_size}"
                )));
            }
            let chain = o.chain()?;
            let symbols = match o {
                MeasureOracle::Conditional { lo, symbols, .. } => {
                    chain.sample_conditional_path(*lo, symbols, -window, *window, rng)
                }
                _ => chain.sample_path(-window, *window, rng),
            };
            Ok(Point::Symbolic(SymbolicPoint::new(-window, symbols)))
        }
        (SystemDescriptor::Product { left, right }, MeasureOracle::Product { left: lo, right: ro }) => {
            let mut lr = rng::stream(seed, 1);
            let mut rr = rng::stream(seed, 2);
            Ok(Point::Product(
                Box::new(sample_with(left, lo, rng::derive_seed(seed, 1), &mut lr)?),
                Box::new(sample_with(right, ro, rng::derive_seed(seed, 2), &mut rr)?),
            ))
        }
        (s, o) => Err(Error::IncompatibleOracle(format!("{} cannot be sampled on {}", o.name(), s.name()))),
    }
}

/// Exact probability of `{z : z_{start+i} = word_i}`.
pub fn cylinder_measure(oracle: &MeasureOracle, word: &[u8], start_index: i64) -> Result<f64> {
    let fixed: Vec<(i64, u8)> = word.iter().enumerate().map(|(i, &s)| (start_index + i as i64, s)).collect();
    cylinder_measure_at(oracle, &fixed)
}

/// Exact probability that each listed coordinate takes its listed symbol.
pub fn cylinder_measure_at(oracle: &MeasureOracle, fixed: &[(i64, u8)]) -> Result<f64> {
    let k = oracle
        .alphabet_size()
        .ok_or_else(|| Error::UnsupportedOracle(format!("{} has no cylinder measure", oracle.name())))?;
    if fixed.iter().any(|&(_, s)| s as usize >= k) {
        return Ok(0.0);
    }
    let chain = oracle.chain()?;
    Ok(match oracle {
        MeasureOracle::Conditional { lo, symbols, .. } => chain.conditional_cylinder(*lo, symbols, fixed),
        _ => chain.cylinder(fixed),
    })
}

/// `log` of [`cylinder_measure_at`], finite even where the mass underflows.
pub fn cylinder_log_measure_at(oracle: &MeasureOracle, fixed: &[(i64, u8)]) -> Result<f64> {
    let k = oracle
        .alphabet_size()
        .ok_or_else(|| Error::UnsupportedOracle(format!("{} has no cylinder measure", oracle.name())))?;
    if fixed.iter().any(|&(_, s)| s as usize >= k) {
        return Ok(f64::NEG_INFINITY);
    }
    let chain = oracle.chain()?;
    Ok(match oracle {
        MeasureOracle::Conditional { lo, symbols, .. } => chain.log_conditional_cylinder(*lo, symbols, fixed),
        _ => chain.log_cylinder(fixed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::SystemDescriptor;

    fn all_words(k: usize, len: usize) -> Vec<Vec<u8>> {
        let mut out = vec![vec![]];
        for _ in 0..len {
            out = out
                .into_iter()
                .flat_map(|w| {
                    (0..k as u8).map(move |s| {
                        let mut v = w.clone();
                        v.push(s);
                        v
                    })
                })
                .collect();
        }
        out
    }

    #[test]
    fn cylinder_examples() {
        let half = MeasureOracle::bernoulli(vec![0.5, 0.5]).unwrap();
        assert_eq!(cylinder_measure(&half, &[0, 1, 1, 0, 1, 0, 0], -3).unwrap(), 2f64.powi(-7));
        let b = MeasureOracle::bernoulli(vec![0.3, 0.7]).unwrap();
        assert!((cylinder_measure(&b, &[0, 1, 1], 0).unwrap() - 0.147).abs() < 1e-15);
        let m = MeasureOracle::markov(vec![vec![0.9, 0.1], vec![0.5, 0.5]]).unwrap();
        let MeasureOracle::MarkovStationary { stationary, transition } = &m else { unreachable!() };
        assert!((cylinder_measure(&m, &[0, 1], 5).unwrap() - stationary[0] * transition[0][1]).abs() < 1e-15);
        assert!(cylinder_measure(&MeasureOracle::LebesgueTorus, &[0], 0).is_err());
    }

    #[test]
    fn markov_stationary_vector_solved() {
        let m = MeasureOracle::markov(vec![vec![0.9, 0.1], vec![0.5, 0.5]]).unwrap();
        let MeasureOracle::MarkovStationary { stationary, .. } = m else { unreachable!() };
        assert!((stationary[0] - 5.0 / 6.0).abs() < 1e-14);
        assert!(MeasureOracle::markov(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).is_err());
        assert!(MeasureOracle::markov_with_stationary(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![1.0, 0.0]
        )
        .is_ok());
        assert!(MeasureOracle::markov_with_stationary(
            vec![vec![0.9, 0.1], vec![0.5, 0.5]],
            vec![0.5, 0.5]
        )
        .is_err());
    }

    #[test]
    fn cylinders_sum_to_one_for_every_length() {
        let oracles = [
            MeasureOracle::bernoulli(vec![0.3, 0.7]).unwrap(),
            MeasureOracle::markov(vec![vec![0.9, 0.1], vec![0.5, 0.5]]).unwrap(),
        ];
        for o in &oracles {
            for len in 1..=12 {
                let s: f64 = all_words(2, len).iter().map(|w| cylinder_measure(o, w, 0).unwrap()).sum();
                assert!((s - 1.0).abs() < 1e-12, "len {len}: {s}");
            }
        }
    }

    #[test]
    fn gapped_cylinders_marginalise_correctly() {
        let m = MeasureOracle::markov(vec![vec![0.9, 0.1], vec![0.5, 0.5]]).unwrap();
        for a in 0..2u8 {
            for c in 0..2u8 {
                let direct: f64 = (0..2u8).map(|b| cylinder_measure(&m, &[a, b, c], 0).unwrap()).sum();
                let gapped = cylinder_measure_at(&m, &[(0, a), (2, c)]).unwrap();
                assert!((direct - gapped).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn conditional_matches_ratio_of_cylinders() {
        let m = MeasureOracle::markov(vec![vec![0.9, 0.1], vec![0.5, 0.5]]).unwrap();
        let block = vec![1u8, 0, 1];
        let cond = MeasureOracle::Conditional { base: Box::new(m.clone()), lo: -3, symbols: block.clone() };
        let fixed = [(-6i64, 0u8), (-4, 1), (0, 0), (2, 1)];
        let mut joint: Vec<(i64, u8)> = fixed.to_vec();
        joint.extend(block.iter().enumerate().map(|(i, &s)| (-3 + i as i64, s)));
        let expected = cylinder_measure_at(&m, &joint).unwrap() / cylinder_measure(&m, &block, -3).unwrap();
        let got = cylinder_measure_at(&cond, &fixed).unwrap();
        assert!((expected - got).abs() < 1e-14, "{expected} vs {got}");
    }

    #[test]
    fn degenerate_identity_chain_samples_constant_word() {
        let sys = SystemDescriptor::dyadic_shift(2, 16);
        let o = MeasureOracle::markov_with_stationary(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 0.0]).unwrap();
        for seed in 0..20 {
            let Point::Symbolic(p) = sample_point(&sys, &o, seed).unwrap() else { unreachable!() };
            assert!(p.symbols().iter().all(|&s| s == 0));
        }
    }

    #[test]
    fn sampling_is_deterministic_and_checks_compatibility() {
        let sys = SystemDescriptor::dyadic_shift(2, 8);
        let o = MeasureOracle::bernoulli(vec![0.5, 0.5]).unwrap();
        assert_eq!(sample_point(&sys, &o, 3).unwrap(), sample_point(&sys, &o, 3).unwrap());
        assert!(matches!(
            sample_point(&sys, &MeasureOracle::LebesgueTorus, 0),
            Err(Error::IncompatibleOracle(_))
        ));
        let three = MeasureOracle::bernoulli(vec![0.2, 0.3, 0.5]).unwrap();
        assert!(sample_point(&sys, &three, 0).is_err());
    }
}
