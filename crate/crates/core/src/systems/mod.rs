//! Invertible model systems and their metrics.
//!
//! Torus points are stored as 128-bit fixed-point fractions, so integer
//! matrices act by exact wrapping arithmetic and `T^n` followed by `T^-n`
//! returns the starting point bit for bit. Symbolic points carry the block
//! of coordinates they know; shifting re-indexes the block without losing
//! data, and metrics only read coordinates with `|i| <= window` that both
//! points still know.

pub mod measure;
pub mod weights;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
pub use measure::{cylinder_log_measure_at, cylinder_measure, cylinder_measure_at, sample_point, Chain, MeasureOracle};
pub use weights::{operator_norm_power, weighted_norm, OperatorNorm, WeightCheck, WeightSequence};

const TWO_128: f64 = 340_282_366_920_938_463_463_374_607_431_768_211_456.0;

/// Smallest displacement the fixed-point torus representation resolves reliably.
pub const TORUS_RESOLUTION_FLOOR: f64 = 1e-28;

pub const DEFAULT_WINDOW: i64 = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ShiftMetric {
    /// `d(x, y) = 2^-k`, `k = min{|i| : x_i != y_i}`.
    Dyadic,
    /// `d(x, y) = (sum_n a_{|n|} |x_n - y_n|^2)^{1/2}`.
    WeightedL2 { weights: WeightSequence },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemDescriptor {
    ToralAutomorphism {
        matrix: [[i64; 2]; 2],
    },
    /// Isometric reference map `x -> x + shift (mod 1)`.
    TorusTranslation {
        shift: [f64; 2],
    },
    /// Left shift `(Tx)_i = x_{i+1}` on sequences truncated to `-window..=window`.
    FullShift {
        alphabet_size: u8,
        metric: ShiftMetric,
        window: i64,
    },
    /// Product with the max-of-components metric.
    Product {
        left: Box<SystemDescriptor>,
        right: Box<SystemDescriptor>,
    },
    /// `T^-1` of the inner system, same metric.
    Inverse {
        inner: Box<SystemDescriptor>,
    },
}

impl SystemDescriptor {
    pub fn cat_map() -> Self {
        SystemDescriptor::ToralAutomorphism { matrix: [[2, 1], [1, 1]] }
    }

    pub fn toral(matrix: [[i64; 2]; 2]) -> Result<Self> {
        let s = SystemDescriptor::ToralAutomorphism { matrix };
        s.validate()?;
        Ok(s)
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        SystemDescriptor::TorusTranslation { shift: [dx, dy] }
    }

    pub fn dyadic_shift(alphabet_size: u8, window: i64) -> Self {
        SystemDescriptor::FullShift { alphabet_size, metric: ShiftMetric::Dyadic, window }
    }

    pub fn weighted_shift(weights: WeightSequence, window: i64) -> Self {
        SystemDescriptor::FullShift { alphabet_size: 2, metric: ShiftMetric::WeightedL2 { weights }, window }
    }

    pub fn product(left: SystemDescriptor, right: SystemDescriptor) -> Self {
        SystemDescriptor::Product { left: Box::new(left), right: Box::new(right) }
    }

    pub fn inverse(self) -> Self {
        match self {
            SystemDescriptor::Inverse { inner } => *inner,
            s => SystemDescriptor::Inverse { inner: Box::new(s) },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SystemDescriptor::ToralAutomorphism { .. } => "toral-automorphism",
            SystemDescriptor::TorusTranslation { .. } => "torus-translation",
            SystemDescriptor::FullShift { metric: ShiftMetric::Dyadic, .. } => "dyadic-shift",
            SystemDescriptor::FullShift { .. } => "weighted-shift",
            SystemDescriptor::Product { .. } => "product",
            SystemDescriptor::Inverse { .. } => "inverse",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SystemDescriptor::ToralAutomorphism { matrix } => {
                let det = det(matrix);
                if det.abs() != 1 {
                    return Err(Error::NonInvertible { det });
                }
                Ok(())
            }
            SystemDescriptor::TorusTranslation { shift } => {
                if shift.iter().all(|s| s.is_finite()) {
                    Ok(())
                } else {
                    Err(invalid("translation must be finite"))
                }
            }
            SystemDescriptor::FullShift { alphabet_size, metric, window } => {
                if *alphabet_size < 2 {
                    return Err(invalid("alphabet size must be at least 2"));
                }
                if *window < 1 {
                    return Err(invalid("window must be at least 1"));
                }
                if let ShiftMetric::WeightedL2 { weights } = metric {
                    weights.validate()?;
                }
                Ok(())
            }
            SystemDescriptor::Product { left, right } => {
                left.validate()?;
                right.validate()
            }
            SystemDescriptor::Inverse { inner } => inner.validate(),
        }
    }

    /// `Some(true)` for a hyperbolic automorphism (`det = 1`, `|trace| > 2`
    /// or `det = -1`, `trace != 0`).
    pub fn is_hyperbolic(&self) -> Option<bool> {
        match self {
            SystemDescriptor::ToralAutomorphism { matrix } => {
                let t = matrix[0][0] + matrix[1][1];
                Some(if det(matrix) == 1 { t.abs() > 2 } else { t != 0 })
            }
            SystemDescriptor::Inverse { inner } => inner.is_hyperbolic(),
            _ => None,
        }
    }

    pub fn window(&self) -> Option<i64> {
        match self {
            SystemDescriptor::FullShift { window, .. } => Some(*window),
            SystemDescriptor::Inverse { inner } => inner.window(),
            _ => None,
        }
    }

    /// Upper bound on the distance contributed by coordinates with `|i| > radius`.
    pub fn tail_bound(&self, radius: i64) -> f64 {
        match self {
            SystemDescriptor::FullShift { alphabet_size, metric, .. } => match metric {
                ShiftMetric::Dyadic => 2f64.powi(-(radius as i32 + 1)),
                ShiftMetric::WeightedL2 { weights } => {
                    (*alphabet_size as f64 - 1.0) * (2.0 * weights.tail_sum(radius.max(0) as u64)).sqrt()
                }
            },
            SystemDescriptor::Product { left, right } => left.tail_bound(radius).max(right.tail_bound(radius)),
            SystemDescriptor::Inverse { inner } => inner.tail_bound(radius),
            _ => 0.0,
        }
    }

    /// Scales below this are not resolved by the representation.
    pub fn resolution_floor(&self) -> f64 {
        match self {
            SystemDescriptor::ToralAutomorphism { .. } | SystemDescriptor::TorusTranslation { .. } => {
                TORUS_RESOLUTION_FLOOR
            }
            SystemDescriptor::FullShift { metric, window, .. } => match metric {
                ShiftMetric::Dyadic => 2f64.powi(-(*window as i32)),
                ShiftMetric::WeightedL2 { .. } => 2.0 * self.tail_bound(*window),
            },
            SystemDescriptor::Product { left, right } => left.resolution_floor().max(right.resolution_floor()),
            SystemDescriptor::Inverse { inner } => inner.resolution_floor(),
        }
    }

    /// `(forward_step, backward_step)` of the underlying automorphism.
    fn torus_matrices(&self) -> Option<([[i64; 2]; 2], [[i64; 2]; 2])> {
        match self {
            SystemDescriptor::ToralAutomorphism { matrix } => Some((*matrix, inverse_matrix(matrix))),
            _ => None,
        }
    }
}

pub(crate) fn det(m: &[[i64; 2]; 2]) -> i64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn inverse_matrix(m: &[[i64; 2]; 2]) -> [[i64; 2]; 2] {
    let d = det(m);
    [[d * m[1][1], -d * m[0][1]], [-d * m[1][0], d * m[0][0]]]
}

/// Point of the 2-torus as a pair of fractions `raw / 2^128`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TorusPoint {
    raw: [u128; 2],
}

fn frac_to_raw(v: f64) -> u128 {
    let f = v - v.floor();
    if f >= 1.0 {
        0
    } else {
        (f * TWO_128) as u128
    }
}

fn signed_to_raw(v: f64) -> u128 {
    // split off the integer part so small displacements keep full precision
    let f = v - v.round();
    ((f * TWO_128) as i128) as u128
}

impl TorusPoint {
    pub fn new(x: f64, y: f64) -> Self {
        TorusPoint { raw: [frac_to_raw(x), frac_to_raw(y)] }
    }

    pub fn from_raw(x: u128, y: u128) -> Self {
        TorusPoint { raw: [x, y] }
    }

    pub fn raw(&self) -> [u128; 2] {
        self.raw
    }

    pub fn x(&self) -> f64 {
        self.raw[0] as f64 / TWO_128
    }

    pub fn y(&self) -> f64 {
        self.raw[1] as f64 / TWO_128
    }

    /// `self + (dx, dy) mod 1`.
    pub fn displaced(&self, dx: f64, dy: f64) -> Self {
        TorusPoint {
            raw: [self.raw[0].wrapping_add(signed_to_raw(dx)), self.raw[1].wrapping_add(signed_to_raw(dy))],
        }
    }

    /// Minimal-image displacement `other - self`, each component in `[-1/2, 1/2)`.
    pub fn delta(&self, other: &TorusPoint) -> [f64; 2] {
        [
            other.raw[0].wrapping_sub(self.raw[0]) as i128 as f64 / TWO_128,
            other.raw[1].wrapping_sub(self.raw[1]) as i128 as f64 / TWO_128,
        ]
    }

    fn apply(&self, m: &[[i64; 2]; 2]) -> Self {
        let c = |v: i64| v as i128 as u128;
        let [x, y] = self.raw;
        TorusPoint {
            raw: [
                c(m[0][0]).wrapping_mul(x).wrapping_add(c(m[0][1]).wrapping_mul(y)),
                c(m[1][0]).wrapping_mul(x).wrapping_add(c(m[1][1]).wrapping_mul(y)),
            ],
        }
    }

    fn add_raw(&self, t: [u128; 2]) -> Self {
        TorusPoint { raw: [self.raw[0].wrapping_add(t[0]), self.raw[1].wrapping_add(t[1])] }
    }

    fn sub_raw(&self, t: [u128; 2]) -> Self {
        TorusPoint { raw: [self.raw[0].wrapping_sub(t[0]), self.raw[1].wrapping_sub(t[1])] }
    }
}

impl Serialize for TorusPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.x(), self.y()].serialize(s)
    }
}

impl<'de> Deserialize<'de> for TorusPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [x, y] = <[f64; 2]>::deserialize(d)?;
        Ok(TorusPoint::new(x, y))
    }
}

/// Symbols at coordinates `lo..lo + symbols.len()`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymbolicPoint {
    lo: i64,
    symbols: Vec<u8>,
}

impl SymbolicPoint {
    pub fn new(lo: i64, symbols: Vec<u8>) -> Self {
        SymbolicPoint { lo, symbols }
    }

    /// Point known on `-radius..=radius`.
    pub fn centered(symbols: Vec<u8>) -> Result<Self> {
        if symbols.len() % 2 == 0 {
            return Err(invalid("centered symbolic point needs odd length"));
        }
        let r = (symbols.len() / 2) as i64;
        Ok(SymbolicPoint { lo: -r, symbols })
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.symbols.len() as i64 - 1
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    /// Largest `r` with `-r..=r` known; negative once coordinate 0 is lost.
    pub fn radius(&self) -> i64 {
        (-self.lo).min(self.hi())
    }

    #[inline]
    pub fn get(&self, i: i64) -> Option<u8> {
        let j = i - self.lo;
        if j < 0 {
            None
        } else {
            self.symbols.get(j as usize).copied()
        }
    }

    pub fn set(&mut self, i: i64, s: u8) -> Result<()> {
        let j = i - self.lo;
        match self.symbols.get_mut(j.max(0) as usize) {
            Some(slot) if j >= 0 => {
                *slot = s;
                Ok(())
            }
            _ => Err(Error::WindowExhausted { needed: i.abs(), available: self.radius() }),
        }
    }

    fn shifted(&self, n: i64) -> Self {
        SymbolicPoint { lo: self.lo - n, symbols: self.symbols.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Point {
    Torus(TorusPoint),
    Symbolic(SymbolicPoint),
    Product(Box<Point>, Box<Point>),
}

impl Point {
    pub fn as_torus(&self) -> Option<&TorusPoint> {
        match self {
            Point::Torus(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_symbolic(&self) -> Option<&SymbolicPoint> {
        match self {
            Point::Symbolic(s) => Some(s),
            _ => None,
        }
    }
}

/// `T^n(x)`; negative `n` applies the inverse.
pub fn iterate(sys: &SystemDescriptor, x: &Point, n: i64) -> Result<Point> {
    match (sys, x) {
        (SystemDescriptor::Inverse { inner }, _) => iterate(inner, x, -n),
        (SystemDescriptor::ToralAutomorphism { matrix }, Point::Torus(p)) => {
            let d = det(matrix);
            if d.abs() != 1 {
                return Err(Error::NonInvertible { det: d });
            }
            let m = if n >= 0 { *matrix } else { inverse_matrix(matrix) };
            let mut q = *p;
            for _ in 0..n.unsigned_abs() {
                q = q.apply(&m);
            }
            Ok(Point::Torus(q))
        }
        (SystemDescriptor::TorusTranslation { shift }, Point::Torus(p)) => {
            let t = [signed_to_raw(shift[0]), signed_to_raw(shift[1])];
            let mut q = *p;
            for _ in 0..n.unsigned_abs() {
                q = if n >= 0 { q.add_raw(t) } else { q.sub_raw(t) };
            }
            Ok(Point::Torus(q))
        }
        (SystemDescriptor::FullShift { .. }, Point::Symbolic(p)) => {
            let q = p.shifted(n);
            if q.radius() < 0 {
                return Err(Error::WindowExhausted { needed: n.abs(), available: p.radius() });
            }
            Ok(Point::Symbolic(q))
        }
        (SystemDescriptor::Product { left, right }, Point::Product(a, b)) => {
            Ok(Point::Product(Box::new(iterate(left, a, n)?), Box::new(iterate(right, b, n)?)))
        }
        _ => Err(Error::MixedSystems),
    }
}

pub fn distance(sys: &SystemDescriptor, x: &Point, y: &Point) -> Result<f64> {
    match (sys, x, y) {
        (SystemDescriptor::Inverse { inner }, _, _) => distance(inner, x, y),
        (
            SystemDescriptor::ToralAutomorphism { .. } | SystemDescriptor::TorusTranslation { .. },
            Point::Torus(a),
            Point::Torus(b),
        ) => Ok(torus_distance(a, b)),
        (SystemDescriptor::FullShift { metric, window, .. }, Point::Symbolic(a), Point::Symbolic(b)) => {
            symbolic_distance(metric, *window, a, b, 0)
        }
        (SystemDescriptor::Product { left, right }, Point::Product(a1, a2), Point::Product(b1, b2)) => {
            Ok(distance(left, a1, b1)?.max(distance(right, a2, b2)?))
        }
        _ => Err(Error::MixedSystems),
    }
}

fn torus_distance(a: &TorusPoint, b: &TorusPoint) -> f64 {
    let [dx, dy] = a.delta(b);
    dx.hypot(dy)
}

/// Distance between `T^k a` and `T^k b` read straight off the stored blocks.
fn symbolic_distance(metric: &ShiftMetric, window: i64, a: &SymbolicPoint, b: &SymbolicPoint, k: i64) -> Result<f64> {
    let rad = |p: &SymbolicPoint| (k - p.lo).min(p.hi() - k);
    let r = window.min(rad(a)).min(rad(b));
    if r < 0 {
        return Err(Error::WindowExhausted { needed: k.abs(), available: rad(a).min(rad(b)) + k.abs() });
    }
    // offsets of coordinate 0 of T^k into the stored blocks
    let oa = k - a.lo;
    let ob = k - b.lo;
    let sa = &a.symbols;
    let sb = &b.symbols;
    match metric {
        ShiftMetric::Dyadic => {
            for j in 0..=r {
                let pos = sa[(oa + j) as usize] != sb[(ob + j) as usize];
                let neg = sa[(oa - j) as usize] != sb[(ob - j) as usize];
                if pos || neg {
                    return Ok(2f64.powi(-(j as i32)));
                }
            }
            Ok(0.0)
        }
        ShiftMetric::WeightedL2 { weights } => {
            let mut s = 0.0;
            for i in -r..=r {
                let d = sa[(oa + i) as usize] as f64 - sb[(ob + i) as usize] as f64;
                if d != 0.0 {
                    s += weights.a(i.unsigned_abs()) * d * d;
                }
            }
            Ok(s.sqrt())
        }
    }
}

/// `d(T^{k s} x, T^{k s} y)` for `k = 0..=steps`, `s = +1` forward and `-1` backward.
pub fn orbit_distances(sys: &SystemDescriptor, x: &Point, y: &Point, steps: usize, forward: bool) -> Result<Vec<f64>> {
    match (sys, x, y) {
        (SystemDescriptor::Inverse { inner }, _, _) => orbit_distances(inner, x, y, steps, !forward),
        (SystemDescriptor::ToralAutomorphism { .. }, Point::Torus(a), Point::Torus(b)) => {
            let (fwd, bwd) = sys.torus_matrices().expect("automorphism");
            let m = if forward { fwd } else { bwd };
            // linear action: iterate the displacement alone
            let mut diff = TorusPoint::from_raw(b.raw[0].wrapping_sub(a.raw[0]), b.raw[1].wrapping_sub(a.raw[1]));
            let zero = TorusPoint::from_raw(0, 0);
            let mut out = Vec::with_capacity(steps + 1);
            out.push(torus_distance(&zero, &diff));
            for _ in 0..steps {
                diff = diff.apply(&m);
                out.push(torus_distance(&zero, &diff));
            }
            Ok(out)
        }
        (SystemDescriptor::TorusTranslation { .. }, Point::Torus(a), Point::Torus(b)) => {
            Ok(vec![torus_distance(a, b); steps + 1])
        }
        (SystemDescriptor::FullShift { metric, window, .. }, Point::Symbolic(a), Point::Symbolic(b)) => {
            let dir = if forward { 1 } else { -1 };
            (0..=steps as i64).map(|k| symbolic_distance(metric, *window, a, b, k * dir)).collect()
        }
        (SystemDescriptor::Product { left, right }, Point::Product(a1, a2), Point::Product(b1, b2)) => {
            let l = orbit_distances(left, a1, b1, steps, forward)?;
            let r = orbit_distances(right, a2, b2, steps, forward)?;
            Ok(l.into_iter().zip(r).map(|(u, v)| u.max(v)).collect())
        }
        _ => Err(Error::MixedSystems),
    }
}
