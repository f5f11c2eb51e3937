//! Finite-depth construction of a partition subordinate to local unstable
//! sets on a shift space.
//!
//! Conventions under the left shift `T`: `T^k β` moves cylinder coordinates
//! by `-k`, so `α⁻ = ∨_{j≥1} T^j α` looks into the past. The infinite past
//! is truncated at depth `P`; the resulting `ξ` atom fixes every coordinate
//! at or below `max coord(α_Q) - 1`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::entropy::conditional_entropy;
use crate::error::{invalid, Error, Result};
use crate::partitions::{pullback, refine, FinitePartition};
use crate::rng;
use crate::systems::{orbit_distances, MeasureOracle, Point, SymbolicPoint, SystemDescriptor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubordinateRequest {
    pub delta: f64,
    /// `β_1 ≺ β_2 ≺ ...`, at least `depth` of them.
    pub betas: Vec<FinitePartition>,
    pub depth: usize,
    pub past_depth: usize,
    /// Required margin as a fraction of the right-hand side.
    pub tol: f64,
    pub k_max: usize,
}

impl SubordinateRequest {
    /// `β_p = [-p+1, p]`: diameters `2^{-p}` and `diam(Tβ_1) = 1/2`.
    pub fn default_chain(depth: usize, alphabet: u8) -> Vec<FinitePartition> {
        (1..=depth as i64).map(|p| FinitePartition::window(-p + 1, p, alphabet)).collect()
    }

    pub fn with_defaults(delta: f64, alphabet: u8) -> Self {
        SubordinateRequest {
            delta,
            betas: Self::default_chain(3, alphabet),
            depth: 3,
            past_depth: 8,
            tol: 0.1,
            k_max: 16,
        }
    }
}

/// One instance of the inequality
/// `H(α_p | α_{q-1}⁻) - H(α_p | α_q⁻) < 1 / (p 2^{q-p})` at depth `P`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub q: usize,
    pub p: usize,
    pub lhs: f64,
    /// Same difference with past depth `P / 2`.
    pub lhs_half_depth: f64,
    pub rhs: f64,
    pub holds_with_margin: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchTrace {
    pub q: usize,
    /// Worst `lhs / rhs` over `p < q` for `k = 0, 1, ...` as tried.
    pub worst_ratio_per_k: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubordinatePlan {
    pub delta: f64,
    pub betas: Vec<FinitePartition>,
    pub ks: Vec<usize>,
    pub depth: usize,
    pub past_depth: usize,
    pub tol: f64,
    /// `α_q = ∨_{p≤q} T^{k_p} β_p`.
    pub alphas: Vec<FinitePartition>,
    pub residuals: Vec<Residual>,
    pub search: Vec<SearchTrace>,
    /// `H(α_p | α_Q⁻)` at depth `P` and `P / 2`.
    pub c_p: Vec<f64>,
    pub c_p_half_depth: Vec<f64>,
    pub sup_c: f64,
    pub entropy_rate: Option<f64>,
    pub gap_to_entropy_rate: Option<f64>,
}

impl SubordinatePlan {
    /// Coordinates fixed by the `ξ` atom: everything at or below this index.
    pub fn xi_top(&self) -> i64 {
        self.alphas.last().and_then(|a| a.coords().last().copied()).unwrap_or(0) - 1
    }
}

/// `T^k β`.
fn push(beta: &FinitePartition, k: i64) -> Result<FinitePartition> {
    pullback(beta, -k)
}

/// `∨_{j=1}^{depth} T^j α`.
fn past(alpha: &FinitePartition, depth: usize) -> Result<FinitePartition> {
    let mut out = FinitePartition::Trivial;
    for j in 1..=depth as i64 {
        out = refine(&out, &push(alpha, j)?)?;
    }
    Ok(out)
}

fn h_given_past(alpha: &FinitePartition, of: &FinitePartition, depth: usize, oracle: &MeasureOracle) -> Result<f64> {
    Ok(conditional_entropy(alpha, &past(of, depth)?, oracle)?.value)
}

pub fn construct_subordinate_partition(
    sys: &SystemDescriptor,
    oracle: &MeasureOracle,
    req: &SubordinateRequest,
) -> Result<SubordinatePlan> {
    let SystemDescriptor::FullShift { .. } = sys else {
        return Err(Error::IncompatiblePartitions(format!("subordinate construction needs a shift, got {}", sys.name())));
    };
    oracle.chain()?;
    if req.depth == 0 || req.betas.len() < req.depth {
        return Err(invalid("need depth >= 1 and at least depth partitions in the chain"));
    }
    if req.past_depth == 0 || !(0.0..1.0).contains(&req.tol) {
        return Err(invalid("need past_depth >= 1 and tol in [0, 1)"));
    }
    let betas = &req.betas[..req.depth];
    if betas.windows(2).any(|w| !w[1].refines(&w[0])) {
        return Err(invalid("partition chain must be increasing in refinement"));
    }
    let d1 = betas[0].diam_bound(sys)?;
    let dt1 = push(&betas[0], 1)?.diam_bound(sys)?;
    if d1 > req.delta || dt1 > req.delta {
        return Err(invalid(format!(
            "diam(beta_1) = {d1} and diam(T beta_1) = {dt1} must not exceed delta = {}",
            req.delta
        )));
    }

    let half = (req.past_depth / 2).max(1);
    let mut ks = vec![0usize];
    let mut alphas = vec![betas[0].clone()];
    let mut residuals = Vec::new();
    let mut search = Vec::new();
    for q in 2..=req.depth {
        let prev = alphas.last().unwrap().clone();
        // H(α_p | α_{q-1}⁻) does not depend on the candidate k
        let before: Vec<(f64, f64)> = (1..q)
            .map(|p| {
                Ok((
                    h_given_past(&alphas[p - 1], &prev, req.past_depth, oracle)?,
                    h_given_past(&alphas[p - 1], &prev, half, oracle)?,
                ))
            })
            .collect::<Result<_>>()?;
        let mut trace = Vec::new();
        let mut chosen = None;
        for k in 0..=req.k_max {
            let cand = refine(&prev, &push(&betas[q - 1], k as i64)?)?;
            let mut level = Vec::with_capacity(q - 1);
            let mut worst: f64 = 0.0;
            for p in 1..q {
                let rhs = 1.0 / (p as f64 * 2f64.powi((q - p) as i32));
                let lhs = before[p - 1].0 - h_given_past(&alphas[p - 1], &cand, req.past_depth, oracle)?;
                let lhs_half = before[p - 1].1 - h_given_past(&alphas[p - 1], &cand, half, oracle)?;
                worst = worst.max(lhs / rhs);
                level.push(Residual { q, p, lhs, lhs_half_depth: lhs_half, rhs, holds_with_margin: lhs < (1.0 - req.tol) * rhs });
            }
            trace.push(worst);
            if level.iter().all(|r| r.holds_with_margin) {
                chosen = Some((k, cand, level));
                break;
            }
        }
        let Some((k, cand, level)) = chosen else {
            return Err(Error::SearchExhausted { level: q, k_max: req.k_max, residuals: trace });
        };
        ks.push(k);
        alphas.push(cand);
        residuals.extend(level);
        search.push(SearchTrace { q, worst_ratio_per_k: trace });
    }

    let top = alphas.last().unwrap().clone();
    let c_p: Vec<f64> = alphas.iter().map(|a| h_given_past(a, &top, req.past_depth, oracle)).collect::<Result<_>>()?;
    let c_p_half_depth: Vec<f64> = alphas.iter().map(|a| h_given_past(a, &top, half, oracle)).collect::<Result<_>>()?;
    let sup_c = c_p.iter().copied().fold(0.0, f64::max);
    let entropy_rate = oracle.entropy_rate().ok();
    Ok(SubordinatePlan {
        delta: req.delta,
        betas: betas.to_vec(),
        ks,
        depth: req.depth,
        past_depth: req.past_depth,
        tol: req.tol,
        alphas,
        residuals,
        search,
        c_p,
        c_p_half_depth,
        sup_c,
        entropy_rate,
        gap_to_entropy_rate: entropy_rate.map(|h| h - sup_c),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelCheck {
    pub j: usize,
    pub k_j: usize,
    pub diam_beta: f64,
    /// Worst `d(T^{-(k_j+i)} y, T^{-(k_j+i)} z)` over pairs and `i`.
    pub max_observed: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomCheckReport {
    pub horizon: usize,
    pub pairs: usize,
    /// Worst `d(T^{-i} y, T^{-i} z)` over pairs and `0 <= i <= horizon`.
    pub max_back_diam: f64,
    pub delta: f64,
    pub delta_violations: usize,
    pub per_j: Vec<LevelCheck>,
    /// Coordinates `<= xi_top` are fixed in the sampled atom.
    pub xi_top: i64,
}

impl AtomCheckReport {
    pub fn total_violations(&self) -> usize {
        self.delta_violations + self.per_j.iter().map(|l| l.violations).sum::<usize>()
    }
}

/// Samples pairs in the `ξ` atom of `x` (agreeing with `x` at every
/// coordinate `<= xi_top`, free above) and checks the back-iterated
/// diameters against `δ` and against `diam(β_j)` after `k_j` steps.
pub fn check_atom_in_unstable(
    sys: &SystemDescriptor,
    plan: &SubordinatePlan,
    x: &Point,
    horizon: usize,
    sample_pairs: usize,
    seed: u64,
) -> Result<AtomCheckReport> {
    let SystemDescriptor::FullShift { alphabet_size, .. } = sys else {
        return Err(Error::IncompatiblePartitions(format!("atom check needs a shift, got {}", sys.name())));
    };
    let xs = x.as_symbolic().ok_or(Error::MixedSystems)?;
    let top = plan.xi_top();
    let diam: Vec<f64> = plan.betas.iter().map(|b| b.diam_bound(sys)).collect::<Result<_>>()?;
    let mut per_j: Vec<LevelCheck> = plan
        .ks
        .iter()
        .enumerate()
        .map(|(j, &k)| LevelCheck { j: j + 1, k_j: k, diam_beta: diam[j], max_observed: 0.0, violations: 0 })
        .collect();
    let mut max_back: f64 = 0.0;
    let mut delta_violations = 0;
    let max_k = plan.ks.iter().copied().max().unwrap_or(0);
    let steps = horizon + max_k;
    for s in 0..sample_pairs {
        let mut g = rng::stream(seed, s as u64);
        let mut draw = || {
            let symbols: Vec<u8> = (xs.lo()..=xs.hi())
                .map(|c| if c <= top { xs.get(c).unwrap() } else { g.random_range(0..*alphabet_size) })
                .collect();
            Point::Symbolic(SymbolicPoint::new(xs.lo(), symbols))
        };
        let (y, z) = (draw(), draw());
        let d = orbit_distances(sys, &y, &z, steps, false)?;
        for &di in &d[..=horizon] {
            max_back = max_back.max(di);
            if di > plan.delta {
                delta_violations += 1;
            }
        }
        for level in per_j.iter_mut() {
            for &di in &d[level.k_j..=level.k_j + horizon] {
                level.max_observed = level.max_observed.max(di);
                if di > level.diam_beta {
                    level.violations += 1;
                }
            }
        }
    }
    Ok(AtomCheckReport {
        horizon,
        pairs: sample_pairs,
        max_back_diam: max_back,
        delta: plan.delta,
        delta_violations,
        per_j,
        xi_top: top,
    })
}
