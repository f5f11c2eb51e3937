//! Maximal Lyapunov exponent by subadditive averaging of `log⁺ L_n^r`.
//!
//! For each sample point one probe set is drawn at the largest radius and
//! reused, restricted, for every smaller radius and every `n`; this makes
//! `Λ^r` monotone in `r` point by point and keeps the cost at one orbit per
//! probe.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::ProbeOrbits;
use crate::rng;
use crate::systems::{sample_point, MeasureOracle, SystemDescriptor};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubadditiveSeries {
    pub n_schedule: Vec<usize>,
    /// `phi_n`, one per entry of `n_schedule`.
    pub values: Vec<f64>,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeketeLimit {
    /// `min_n phi_n / n` over the schedule.
    pub value: f64,
    pub argmin_n: usize,
    /// `phi_{n_max} / n_max`.
    pub last_slope: f64,
}

pub fn fekete_limit(series: &SubadditiveSeries) -> Result<FeketeLimit> {
    if series.n_schedule.is_empty() {
        return Err(Error::EmptySchedule);
    }
    if series.n_schedule.len() != series.values.len() {
        return Err(Error::LengthMismatch(series.n_schedule.len(), series.values.len()));
    }
    if series.n_schedule.windows(2).any(|w| w[0] >= w[1]) || series.n_schedule[0] == 0 {
        return Err(invalid("n schedule must be increasing and start at n >= 1"));
    }
    if series.values.iter().any(|v| !(*v >= 0.0)) {
        return Err(invalid("subadditive series values must be nonnegative"));
    }
    let mut value = f64::INFINITY;
    let mut argmin_n = 0;
    for (&n, &v) in series.n_schedule.iter().zip(&series.values) {
        let s = v / n as f64;
        if s < value {
            value = s;
            argmin_n = n;
        }
    }
    let last = series.n_schedule.len() - 1;
    Ok(FeketeLimit {
        value,
        argmin_n,
        last_slope: series.values[last] / series.n_schedule[last] as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChiConfig {
    /// Strictly decreasing.
    pub r_schedule: Vec<f64>,
    /// Strictly increasing, starting at `n >= 1`.
    pub n_schedule: Vec<usize>,
    pub sample_points: usize,
    pub probes: usize,
    pub seed: u64,
}

impl ChiConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r_schedule.is_empty() || self.n_schedule.is_empty() {
            return Err(Error::EmptySchedule);
        }
        if self.r_schedule.windows(2).any(|w| w[0] <= w[1]) || self.r_schedule.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::ConfigInvalid { field: "r_schedule".into(), message: "must be positive and strictly decreasing".into() });
        }
        if self.n_schedule[0] == 0 || self.n_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::ConfigInvalid { field: "n_schedule".into(), message: "must start at >= 1 and strictly increase".into() });
        }
        if self.sample_points == 0 || self.probes == 0 {
            return Err(Error::ConfigInvalid { field: "budgets".into(), message: "sample_points and probes must be positive".into() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusLevel {
    pub r: f64,
    /// `Λ^r`: Fekete limit of the mean series.
    pub lambda: f64,
    pub argmin_n: usize,
    pub last_slope: f64,
    pub series: SubadditiveSeries,
    /// Points with no accepted probe at `(n, r)`, per entry of `n_schedule`.
    pub excluded: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiDiagnostics {
    /// `Λ^r` nonincreasing along the schedule within 0.05.
    pub monotone_in_r: bool,
    /// Standard error of the per-point `log⁺ L_{n_max}^r / n_max` at the smallest `r`.
    pub fluctuation: f64,
    /// Empirical max of `log⁺ L_1^r` at the largest `r` over the first half of
    /// the points and over all of them; growth hints at a non-integrable tail.
    pub max_log_l1_half: f64,
    pub max_log_l1: f64,
    pub integrability_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiEstimate {
    pub value: f64,
    pub per_r: Vec<RadiusLevel>,
    pub sample_count: usize,
    pub n_schedule: Vec<usize>,
    pub diagnostics: ChiDiagnostics,
}

/// `log⁺` values per `(r index, n index)`; `None` when nothing was accepted.
type PointTable = Vec<Vec<Option<f64>>>;

fn point_table(sys: &SystemDescriptor, oracle: &MeasureOracle, cfg: &ChiConfig, i: usize) -> Result<PointTable> {
    let x = sample_point(sys, oracle, rng::derive_seed(cfg.seed, i as u64))?;
    let n_max = *cfg.n_schedule.last().unwrap();
    let probe_seed = rng::derive_seed(cfg.seed ^ 0x5EED_0F_9B0B, i as u64);
    let orbits = ProbeOrbits::sample(sys, &x, cfg.r_schedule[0], n_max, cfg.probes, probe_seed)?;
    Ok(cfg
        .r_schedule
        .iter()
        .map(|&r| {
            cfg.n_schedule
                .iter()
                .map(|&n| orbits.lipschitz(n, r).map(|(v, _)| v.ln().max(0.0)))
                .collect()
        })
        .collect())
}

pub fn estimate_chi(sys: &SystemDescriptor, oracle: &MeasureOracle, cfg: &ChiConfig) -> Result<ChiEstimate> {
    cfg.validate()?;
    sys.validate()?;
    oracle.validate()?;
    let tables: Vec<PointTable> = (0..cfg.sample_points)
        .into_par_iter()
        .map(|i| point_table(sys, oracle, cfg, i))
        .collect::<Result<_>>()?;

    let mut per_r = Vec::with_capacity(cfg.r_schedule.len());
    for (ri, &r) in cfg.r_schedule.iter().enumerate() {
        let mut values = Vec::with_capacity(cfg.n_schedule.len());
        let mut excluded = Vec::with_capacity(cfg.n_schedule.len());
        for ni in 0..cfg.n_schedule.len() {
            let (mut sum, mut count) = (0.0, 0usize);
            for t in &tables {
                if let Some(v) = t[ri][ni] {
                    sum += v;
                    count += 1;
                }
            }
            excluded.push(cfg.sample_points - count);
            if count == 0 {
                return Err(Error::NoProbeAccepted { n: cfg.n_schedule[ni], r, attempts: cfg.probes * cfg.sample_points });
            }
            values.push(sum / count as f64);
        }
        let series = SubadditiveSeries { n_schedule: cfg.n_schedule.clone(), values, r };
        let f = fekete_limit(&series)?;
        per_r.push(RadiusLevel { r, lambda: f.value, argmin_n: f.argmin_n, last_slope: f.last_slope, series, excluded });
    }

    let monotone_in_r = per_r.windows(2).all(|w| w[1].lambda <= w[0].lambda + 0.05);
    let last_r = cfg.r_schedule.len() - 1;
    let last_n = cfg.n_schedule.len() - 1;
    let n_max = cfg.n_schedule[last_n] as f64;
    let slopes: Vec<f64> = tables.iter().filter_map(|t| t[last_r][last_n]).map(|v| v / n_max).collect();
    let fluctuation = std_error(&slopes);
    let l1 = |t: &PointTable| if cfg.n_schedule[0] == 1 { t[0][0].unwrap_or(0.0) } else { 0.0 };
    let half = tables.len().div_ceil(2);
    let max_log_l1_half = tables[..half].iter().map(l1).fold(0.0, f64::max);
    let max_log_l1 = tables.iter().map(l1).fold(0.0, f64::max);

    Ok(ChiEstimate {
        value: per_r[last_r].lambda,
        sample_count: cfg.sample_points,
        n_schedule: cfg.n_schedule.clone(),
        diagnostics: ChiDiagnostics {
            monotone_in_r,
            fluctuation,
            max_log_l1_half,
            max_log_l1,
            integrability_flag: max_log_l1 > 1.5 * max_log_l1_half + 1e-12,
        },
        per_r,
    })
}

pub(crate) fn std_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64, n_max: usize) -> SubadditiveSeries {
        let n_schedule: Vec<usize> = (1..=n_max).collect();
        let values = n_schedule.iter().map(|&n| f(n as f64)).collect();
        SubadditiveSeries { n_schedule, values, r: 0.1 }
    }

    #[test]
    fn fekete_examples() {
        let c = 0.7;
        assert!((fekete_limit(&series(|n| c * n, 64)).unwrap().value - c).abs() < 1e-15);
        let f = fekete_limit(&series(|n| c * n + n.ln(), 64)).unwrap();
        assert!((f.value - c).abs() <= 0.065);
        assert!(f.value <= f.last_slope);
        assert_eq!(fekete_limit(&series(|_| 0.0, 64)).unwrap().value, 0.0);
        let s = series(|n| (n * 3.0).sqrt(), 32);
        assert!(fekete_limit(&s).unwrap().value <= s.values[0]);
    }

    #[test]
    fn fekete_errors() {
        let empty = SubadditiveSeries { n_schedule: vec![], values: vec![], r: 0.1 };
        assert_eq!(fekete_limit(&empty), Err(Error::EmptySchedule));
        let neg = SubadditiveSeries { n_schedule: vec![1], values: vec![-1.0], r: 0.1 };
        assert!(fekete_limit(&neg).is_err());
    }

    fn cfg(r: Vec<f64>, n_max: usize, points: usize, probes: usize) -> ChiConfig {
        ChiConfig { r_schedule: r, n_schedule: (1..=n_max).collect(), sample_points: points, probes, seed: 11 }
    }

    #[test]
    fn translation_has_zero_exponent() {
        let t = SystemDescriptor::translation(0.1234, 0.5678);
        let est = estimate_chi(&t, &MeasureOracle::LebesgueTorus, &cfg(vec![0.2, 0.1], 16, 20, 20)).unwrap();
        assert!(est.value.abs() < 1e-9);
    }

    #[test]
    fn cat_map_small_run() {
        let cat = SystemDescriptor::cat_map();
        let target = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        let est = estimate_chi(&cat, &MeasureOracle::LebesgueTorus, &cfg(vec![0.2, 0.1, 0.05], 12, 100, 64)).unwrap();
        assert!((est.value / target - 1.0).abs() < 0.02, "{}", est.value);
        assert!(est.diagnostics.monotone_in_r);
        let lams: Vec<f64> = est.per_r.iter().map(|l| l.lambda).collect();
        assert!(lams.iter().all(|l| (l / lams[0] - 1.0).abs() < 0.01), "{lams:?}");
    }

    #[test]
    fn dyadic_shift_exponent_is_log_two() {
        let sys = SystemDescriptor::dyadic_shift(2, 64);
        let o = MeasureOracle::bernoulli(vec![0.5, 0.5]).unwrap();
        let est = estimate_chi(&sys, &o, &cfg(vec![0.5, 0.25], 16, 50, 200)).unwrap();
        assert!((est.value / 2f64.ln() - 1.0).abs() < 0.05, "{}", est.value);
    }

    #[test]
    fn serial_and_parallel_agree() {
        let cat = SystemDescriptor::cat_map();
        let c = cfg(vec![0.2, 0.1], 8, 40, 16);
        let par = estimate_chi(&cat, &MeasureOracle::LebesgueTorus, &c).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let ser = pool.install(|| estimate_chi(&cat, &MeasureOracle::LebesgueTorus, &c)).unwrap();
        assert_eq!(serde_json::to_string(&par).unwrap(), serde_json::to_string(&ser).unwrap());
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(vec![0.1, 0.2], 4, 1, 1);
        assert!(matches!(c.validate(), Err(Error::ConfigInvalid { ref field, .. }) if field == "r_schedule"));
        c.r_schedule = vec![0.2, 0.1];
        c.n_schedule = vec![0, 1];
        assert!(matches!(c.validate(), Err(Error::ConfigInvalid { ref field, .. }) if field == "n_schedule"));
    }
}
