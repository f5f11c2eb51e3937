//! Bowen balls, sampled pointwise Lipschitz constants `L_n^r(x)` and the
//! shrinking-ball inclusion check `B(x, eta e^{-n lambda}) ⊂ B_n(x, eps)`.
//!
//! Probe design. On the torus a probe is `x + rho * u` with `u` a uniform
//! direction and `log rho` uniform between the probe floor and `r`, so every
//! scale below `r` is visited; this is what lets deep Bowen balls (which are
//! exponentially thin along the unstable direction) receive probes at all.
//! On shifts a probe flips one coordinate at distance `j` from the origin,
//! `j` spread over the coordinate scales inside the ball, and with
//! probability 1/2 also resamples every coordinate beyond `j`.

use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::rng::{self, StreamRng};
use crate::systems::{self, det, orbit_distances, Point, ShiftMetric, SymbolicPoint, SystemDescriptor};

/// Candidate draws allowed per requested probe before giving up.
pub const ATTEMPTS_PER_PROBE: usize = 50;

/// `y ∈ B_n(x, r)`, i.e. `max_{0<=k<n} d(T^k x, T^k y) < r`.
pub fn bowen_ball_contains(sys: &SystemDescriptor, x: &Point, y: &Point, n: usize, r: f64) -> Result<bool> {
    if n == 0 {
        return Err(invalid("Bowen ball needs n >= 1"));
    }
    if !(r > 0.0) {
        return Err(invalid("Bowen ball radius must be positive"));
    }
    let d = orbit_distances(sys, x, y, n - 1, true)?;
    Ok(d.iter().all(|&dk| dk < r))
}

/// Smallest probe radius used for `sys`.
pub fn probe_radius_floor(sys: &SystemDescriptor) -> f64 {
    match sys {
        SystemDescriptor::ToralAutomorphism { .. } | SystemDescriptor::TorusTranslation { .. } => {
            1e3 * systems::TORUS_RESOLUTION_FLOOR
        }
        _ => sys.resolution_floor(),
    }
}

/// Draw `y` with `0 < d(x, y) < r`, spread over scales.
pub fn random_probe(sys: &SystemDescriptor, x: &Point, r: f64, rng: &mut StreamRng) -> Result<Point> {
    let floor = probe_radius_floor(sys);
    if r <= floor {
        return Err(Error::ScaleUnderflow { scale: r, floor });
    }
    match (sys, x) {
        (SystemDescriptor::Inverse { inner }, _) => random_probe(inner, x, r, rng),
        (SystemDescriptor::ToralAutomorphism { .. } | SystemDescriptor::TorusTranslation { .. }, Point::Torus(p)) => {
            let rho = (rng.random_range(floor.ln()..r.ln())).exp();
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            Ok(Point::Torus(p.displaced(rho * theta.cos(), rho * theta.sin())))
        }
        (SystemDescriptor::FullShift { alphabet_size, metric, window }, Point::Symbolic(p)) => {
            symbolic_probe(*alphabet_size, metric, *window, p, r, rng).map(Point::Symbolic)
        }
        (SystemDescriptor::Product { left, right }, Point::Product(a, b)) => Ok(Point::Product(
            Box::new(random_probe(left, a, r, rng)?),
            Box::new(random_probe(right, b, r, rng)?),
        )),
        _ => Err(Error::MixedSystems),
    }
}

fn symbolic_probe(
    alphabet: u8,
    metric: &ShiftMetric,
    window: i64,
    x: &SymbolicPoint,
    r: f64,
    rng: &mut StreamRng,
) -> Result<SymbolicPoint> {
    let reach = x.radius().min(window);
    let single = |j: u64| match metric {
        ShiftMetric::Dyadic => 2f64.powi(-(j as i32)),
        ShiftMetric::WeightedL2 { weights } => (alphabet as f64 - 1.0) * weights.a(j).sqrt(),
    };
    let j_min = (0..=reach).find(|&j| single(j as u64) < r).ok_or(Error::ScaleUnderflow {
        scale: r,
        floor: single(reach.max(0) as u64),
    })?;
    let j = match metric {
        ShiftMetric::Dyadic => rng.random_range(j_min..=reach),
        ShiftMetric::WeightedL2 { .. } => {
            let lo = (j_min as f64 + 1.0).ln();
            let hi = (reach as f64 + 2.0).ln();
            ((rng.random_range(lo..hi)).exp() as i64 - 1).clamp(j_min, reach)
        }
    };
    let side = if j == 0 || rng.random_bool(0.5) { 1 } else { -1 };
    let mut y = x.clone();
    let c = side * j;
    let old = x.get(c).expect("inside radius");
    let new = (old + 1 + rng.random_range(0..alphabet - 1)) % alphabet;
    y.set(c, new)?;
    if rng.random_bool(0.5) {
        for i in x.lo()..=x.hi() {
            if i.abs() > j {
                y.set(i, rng.random_range(0..alphabet))?;
            }
        }
    }
    Ok(y)
}

/// Orbit distances of a set of probes around one base point; answers
/// `L_n^{r'}(x)` for every `n <= n_max` and `r' <= r` from one sample.
#[derive(Debug, Clone)]
pub struct ProbeOrbits {
    pub r: f64,
    pub n_max: usize,
    /// `d(T^k x, T^k y)` for `k = 0..=n_max`, one row per probe, in draw order.
    pub orbits: Vec<Vec<f64>>,
}

impl ProbeOrbits {
    /// `probes` candidate draws; probe `i` uses stream `(seed, i)`.
    pub fn sample(sys: &SystemDescriptor, x: &Point, r: f64, n_max: usize, probes: usize, seed: u64) -> Result<Self> {
        let mut orbits = Vec::with_capacity(probes);
        for i in 0..probes {
            let mut g = rng::stream(seed, i as u64);
            let y = random_probe(sys, x, r, &mut g)?;
            let d = orbit_distances(sys, x, &y, n_max, true)?;
            if d[0] > 0.0 && d[0] < r {
                orbits.push(d);
            }
        }
        Ok(ProbeOrbits { r, n_max, orbits })
    }

    fn admitted(orbit: &[f64], n: usize, r: f64) -> bool {
        orbit[0] > 0.0 && orbit[..n].iter().all(|&d| d < r)
    }

    /// `(max ratio, accepted count)` over probes inside `B_n(x, r) \ {x}`.
    pub fn lipschitz(&self, n: usize, r: f64) -> Option<(f64, usize)> {
        assert!(n >= 1 && n <= self.n_max && r <= self.r);
        let mut best: Option<f64> = None;
        let mut count = 0;
        for o in &self.orbits {
            if Self::admitted(o, n, r) {
                count += 1;
                let ratio = o[n] / o[0];
                best = Some(best.map_or(ratio, |b: f64| b.max(ratio)));
            }
        }
        best.map(|b| (b, count))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzEstimate {
    pub x: Point,
    pub n: usize,
    pub r: f64,
    /// Maximum sampled stretch ratio; a lower bound for `L_n^r(x)`.
    pub value: f64,
    pub probe_count: usize,
    pub attempts: usize,
    pub probe_radius_floor: f64,
    /// Running maximum after 1, 2, 4, ... accepted probes.
    pub convergence: Vec<(usize, f64)>,
}

/// Maximum of `d(T^n x, T^n y) / d(x, y)` over `probes` accepted points
/// `y ∈ B_n(x, r) \ {x}`.
pub fn estimate_pointwise_lipschitz(
    sys: &SystemDescriptor,
    x: &Point,
    n: usize,
    r: f64,
    probes: usize,
    seed: u64,
) -> Result<LipschitzEstimate> {
    if probes == 0 || n == 0 {
        return Err(invalid("need n >= 1 and probes >= 1"));
    }
    let floor = probe_radius_floor(sys);
    if r <= floor {
        return Err(Error::ScaleUnderflow { scale: r, floor });
    }
    let budget = probes * ATTEMPTS_PER_PROBE;
    let mut accepted = 0;
    let mut best = 0.0f64;
    let mut convergence = Vec::new();
    let mut attempts = 0;
    while accepted < probes && attempts < budget {
        let mut g = rng::stream(seed, attempts as u64);
        attempts += 1;
        let y = random_probe(sys, x, r, &mut g)?;
        let d = orbit_distances(sys, x, &y, n, true)?;
        if !ProbeOrbits::admitted(&d, n, r) {
            continue;
        }
        accepted += 1;
        best = best.max(d[n] / d[0]);
        if accepted.is_power_of_two() {
            convergence.push((accepted, best));
        }
    }
    if accepted == 0 {
        return Err(Error::NoProbeAccepted { n, r, attempts });
    }
    if convergence.last().map(|c| c.0) != Some(accepted) {
        convergence.push((accepted, best));
    }
    Ok(LipschitzEstimate {
        x: x.clone(),
        n,
        r,
        value: best,
        probe_count: accepted,
        attempts,
        probe_radius_floor: floor,
        convergence,
    })
}

/// `L_n(x)` where it is known in closed form: `||A^n||` for toral
/// automorphisms (independent of `x` and of `r`), 1 for translations.
pub fn exact_lipschitz(sys: &SystemDescriptor, n: usize) -> Option<f64> {
    match sys {
        SystemDescriptor::ToralAutomorphism { matrix } => {
            let m = [[matrix[0][0] as f64, matrix[0][1] as f64], [matrix[1][0] as f64, matrix[1][1] as f64]];
            let mut p = [[1.0, 0.0], [0.0, 1.0]];
            for _ in 0..n {
                p = mul2(&p, &m);
            }
            Some(spectral_norm2(&p))
        }
        SystemDescriptor::TorusTranslation { .. } => Some(1.0),
        SystemDescriptor::Inverse { inner } => match inner.as_ref() {
            SystemDescriptor::ToralAutomorphism { matrix } => {
                let d = det(matrix);
                let inv = [[d * matrix[1][1], -d * matrix[0][1]], [-d * matrix[1][0], d * matrix[0][0]]];
                exact_lipschitz(&SystemDescriptor::ToralAutomorphism { matrix: inv }, n)
            }
            SystemDescriptor::TorusTranslation { .. } => Some(1.0),
            _ => None,
        },
        _ => None,
    }
}

fn mul2(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// Largest singular value of a 2x2 matrix.
fn spectral_norm2(m: &[[f64; 2]; 2]) -> f64 {
    let f2 = m[0][0].powi(2) + m[0][1].powi(2) + m[1][0].powi(2) + m[1][1].powi(2);
    let d = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (f2 * f2 - 4.0 * d * d).max(0.0).sqrt();
    ((f2 + disc) / 2.0).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallInclusionReport {
    /// Least `N` such that no sampled probe violated the inclusion for any
    /// `N <= n <= n_max`; `None` if the last level still failed.
    pub holds_from_n: Option<usize>,
    /// First `(n, witness)` with `witness ∈ B(x, eta e^{-n lambda}) \ B_n(x, eps)`.
    pub first_failure: Option<(usize, Point)>,
    pub violations_per_n: Vec<usize>,
    pub probes_per_n: usize,
}

/// Uniform point of the ambient ball `B(x, rho)` (area-uniform on the torus,
/// flip-based on shifts).
pub fn ball_point(sys: &SystemDescriptor, x: &Point, rho: f64, rng: &mut StreamRng) -> Result<Point> {
    match (sys, x) {
        (SystemDescriptor::Inverse { inner }, _) => ball_point(inner, x, rho, rng),
        (SystemDescriptor::ToralAutomorphism { .. } | SystemDescriptor::TorusTranslation { .. }, Point::Torus(p)) => {
            let s = rho * rng.random::<f64>().sqrt();
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            Ok(Point::Torus(p.displaced(s * theta.cos(), s * theta.sin())))
        }
        (SystemDescriptor::Product { left, right }, Point::Product(a, b)) => Ok(Point::Product(
            Box::new(ball_point(left, a, rho, rng)?),
            Box::new(ball_point(right, b, rho, rng)?),
        )),
        _ => random_probe(sys, x, rho, rng),
    }
}

pub fn check_ball_inclusion(
    sys: &SystemDescriptor,
    x: &Point,
    lambda: f64,
    eps: f64,
    eta: f64,
    n_max: usize,
    probes_per_n: usize,
    seed: u64,
) -> Result<BallInclusionReport> {
    if !(lambda > 0.0 && eps > 0.0 && eta > 0.0 && eta < 1.0) {
        return Err(invalid("need lambda > 0, eps > 0, eta in (0, 1)"));
    }
    let floor = probe_radius_floor(sys);
    let mut violations_per_n = Vec::with_capacity(n_max);
    let mut first_failure = None;
    for n in 1..=n_max {
        let rho = eta * (-(n as f64) * lambda).exp();
        if rho < floor {
            return Err(Error::ScaleUnderflow { scale: rho, floor });
        }
        let mut bad = 0;
        for i in 0..probes_per_n {
            let mut g = rng::stream(rng::derive_seed(seed, n as u64), i as u64);
            let y = ball_point(sys, x, rho, &mut g)?;
            if !bowen_ball_contains(sys, x, &y, n, eps)? {
                bad += 1;
                if first_failure.is_none() {
                    first_failure = Some((n, y));
                }
            }
        }
        violations_per_n.push(bad);
    }
    let holds_from_n = match violations_per_n.iter().rposition(|&v| v > 0) {
        None => Some(1),
        Some(last) if last + 1 < n_max => Some(last + 2),
        Some(_) => None,
    };
    Ok(BallInclusionReport { holds_from_n, first_failure, violations_per_n, probes_per_n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{MeasureOracle, TorusPoint};

    fn dyadic_point(window: i64, seed: u64) -> (SystemDescriptor, Point) {
        let sys = SystemDescriptor::dyadic_shift(2, window);
        let o = MeasureOracle::bernoulli(vec![0.5, 0.5]).unwrap();
        let x = systems::sample_point(&sys, &o, seed).unwrap();
        (sys, x)
    }

    #[test]
    fn bowen_ball_basics() {
        let (sys, x) = dyadic_point(32, 1);
        for n in 1..10 {
            assert!(bowen_ball_contains(&sys, &x, &x, n, 1e-6).unwrap());
        }
        let mut g = rng::stream(3, 0);
        for _ in 0..200 {
            let y = random_probe(&sys, &x, 1.0, &mut g).unwrap();
            let d = systems::distance(&sys, &x, &y).unwrap();
            for r in [0.3, 0.5, 0.9] {
                assert_eq!(bowen_ball_contains(&sys, &x, &y, 1, r).unwrap(), d < r);
            }
        }
    }

    #[test]
    fn dyadic_bowen_ball_is_a_cylinder() {
        // B_n(x, 2^-m) = {y : y_i = x_i for -m <= i <= n + m - 1}
        let (sys, x) = dyadic_point(40, 2);
        let xs = x.as_symbolic().unwrap().clone();
        let mut g = rng::stream(9, 0);
        for n in 1..=12usize {
            for m in 0..=6i64 {
                let r = 2f64.powi(-(m as i32));
                for _ in 0..30 {
                    // perturb a single coordinate near the window edge
                    let c = g.random_range(-m - 2..=(n as i64) + m + 1);
                    let mut y = xs.clone();
                    y.set(c, 1 - xs.get(c).unwrap()).unwrap();
                    let inside = (-m..=(n as i64) + m - 1).all(|i| y.get(i) == xs.get(i));
                    let got = bowen_ball_contains(&sys, &x, &Point::Symbolic(y), n, r).unwrap();
                    assert_eq!(got, inside, "n={n} m={m} c={c}");
                }
            }
        }
    }

    #[test]
    fn bowen_balls_are_nested() {
        let cat = SystemDescriptor::cat_map();
        let x = Point::Torus(TorusPoint::new(0.123, 0.456));
        let mut g = rng::stream(4, 0);
        for _ in 0..500 {
            let y = random_probe(&cat, &x, 0.2, &mut g).unwrap();
            for n in 1..12 {
                if bowen_ball_contains(&cat, &x, &y, n + 1, 0.2).unwrap() {
                    assert!(bowen_ball_contains(&cat, &x, &y, n, 0.2).unwrap());
                }
            }
        }
    }

    #[test]
    fn cat_map_lipschitz_matches_operator_norm() {
        let cat = SystemDescriptor::cat_map();
        let x = Point::Torus(TorusPoint::new(0.31, 0.77));
        for n in 1..=8 {
            let est = estimate_pointwise_lipschitz(&cat, &x, n, 0.1, 10_000, 17).unwrap();
            let exact = exact_lipschitz(&cat, n).unwrap();
            assert!(est.value <= exact * (1.0 + 1e-9));
            assert!((est.value / exact - 1.0).abs() < 0.02, "n={n}: {} vs {exact}", est.value);
        }
    }

    #[test]
    fn translation_is_an_isometry() {
        let t = SystemDescriptor::translation(0.318, 0.1415);
        let x = Point::Torus(TorusPoint::new(0.5, 0.5));
        let est = estimate_pointwise_lipschitz(&t, &x, 5, 0.1, 500, 1).unwrap();
        assert!((est.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dyadic_one_step_lipschitz_is_two() {
        let (sys, x) = dyadic_point(64, 5);
        let est = estimate_pointwise_lipschitz(&sys, &x, 1, 0.5, 10_000, 3).unwrap();
        assert!(est.value >= 1.9 && est.value <= 2.0, "{}", est.value);
    }

    #[test]
    fn more_probes_never_lower_the_estimate() {
        let cat = SystemDescriptor::cat_map();
        let x = Point::Torus(TorusPoint::new(0.2, 0.9));
        let mut prev = 0.0;
        for probes in [1, 4, 16, 64, 256] {
            let v = estimate_pointwise_lipschitz(&cat, &x, 6, 0.1, probes, 8).unwrap().value;
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn no_probe_accepted_is_reported() {
        // B_100(x, 0.1) is thinner than the probe floor along the unstable direction
        let cat = SystemDescriptor::cat_map();
        let x = Point::Torus(TorusPoint::new(0.3, 0.3));
        let err = estimate_pointwise_lipschitz(&cat, &x, 100, 0.1, 10, 0).unwrap_err();
        assert_eq!(err, Error::NoProbeAccepted { n: 100, r: 0.1, attempts: 10 * ATTEMPTS_PER_PROBE });
    }

    #[test]
    fn lipschitz_shrinks_with_radius_on_same_probes() {
        let sys = SystemDescriptor::weighted_shift(Default::default(), 128);
        let o = MeasureOracle::bernoulli(vec![0.5, 0.5]).unwrap();
        let x = systems::sample_point(&sys, &o, 4).unwrap();
        let probes = ProbeOrbits::sample(&sys, &x, 1.0, 16, 400, 2).unwrap();
        for n in [1, 4, 16] {
            let mut prev = f64::INFINITY;
            for r in [1.0, 0.8, 0.6, 0.5, 0.4] {
                if let Some((v, _)) = probes.lipschitz(n, r) {
                    assert!(v <= prev);
                    prev = v;
                }
            }
        }
    }

    #[test]
    fn ball_inclusion_cat_map() {
        let cat = SystemDescriptor::cat_map();
        let x = Point::Torus(TorusPoint::new(0.6, 0.2));
        let good = check_ball_inclusion(&cat, &x, 1.1, 0.1, 0.5, 40, 100, 1).unwrap();
        assert!(good.holds_from_n.is_some());
        assert!(good.violations_per_n[good.holds_from_n.unwrap() - 1..].iter().all(|&v| v == 0));
        let bad = check_ball_inclusion(&cat, &x, 0.5, 0.1, 0.05, 40, 100, 1).unwrap();
        assert!(bad.first_failure.is_some());
        assert_eq!(bad.holds_from_n, None);
    }

    #[test]
    fn ball_inclusion_translation_holds_immediately() {
        let t = SystemDescriptor::translation(0.25, 0.125);
        let x = Point::Torus(TorusPoint::new(0.1, 0.1));
        let rep = check_ball_inclusion(&t, &x, 0.3, 0.1, 0.05, 30, 50, 2).unwrap();
        assert_eq!(rep.holds_from_n, Some(1));
        assert!(rep.first_failure.is_none());
    }

    #[test]
    fn ball_inclusion_underflow() {
        let cat = SystemDescriptor::cat_map();
        let x = Point::Torus(TorusPoint::new(0.6, 0.2));
        assert!(matches!(
            check_ball_inclusion(&cat, &x, 5.0, 0.1, 0.5, 40, 1, 1),
            Err(Error::ScaleUnderflow { .. })
        ));
    }
}
