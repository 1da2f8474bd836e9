//! Integer simplex lattices carved by exact rational constraints.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_rational::Rational64;
use num_traits::{Float, ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};

/// Largest admissible simplex dimension `n` (so `n + 1` assets).
pub const MAX_DIMENSION: usize = 6;
/// Largest admissible resolution `N`.
pub const MAX_RESOLUTION: u32 = 400;
/// Hard cap on enumerated lattice size.
pub const MAX_POINTS: u64 = 5_000_000;
/// Tolerance for floating predicates on continuous points.
pub const TOL: f64 = 1e-9;
/// Ticks per unit weight in a [`Point`] key.
pub const KEY_SCALE: f64 = 1e9;

/// A weight vector together with its canonical rounded key.
///
/// Equality and order use the key only, so two floats that agree to `1e-9`
/// collapse to one point. The exact weights of the first representative are kept.
#[derive(Clone)]
pub struct Point {
    key: Vec<i64>,
    weights: Vec<f64>,
}

impl Point {
    pub fn new(weights: Vec<f64>) -> Self {
        let key = weights.iter().map(|w| Float::round(w * KEY_SCALE) as i64).collect();
        Self { key, weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn key(&self) -> &[i64] {
        &self.key
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

impl PartialEq for Point {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}
impl Eq for Point {}
impl PartialOrd for Point {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Point {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key)
    }
}
impl core::hash::Hash for Point {
    fn hash<H: core::hash::Hasher>(&self, state: &mut H) {
        self.key.hash(state)
    }
}
impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.weights.iter()).finish()
    }
}

/// Lattice point `coords / resolution` with `sum(coords) == resolution`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GridPoint {
    coords: Vec<u32>,
    resolution: u32,
}

impl GridPoint {
    pub fn new(coords: Vec<u32>, resolution: u32) -> Result<Self> {
        if resolution == 0 {
            return Err(invalid!("resolution must be positive"));
        }
        if coords.is_empty() {
            return Err(invalid!("a grid point needs at least one coordinate"));
        }
        let sum: u64 = coords.iter().map(|&c| c as u64).sum();
        if sum != resolution as u64 {
            return Err(invalid!("coordinates sum to {sum}, expected {resolution}"));
        }
        Ok(Self { coords, resolution })
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    /// Simplex dimension `n`, one less than the number of assets.
    pub fn dimension(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn weights(&self) -> Vec<f64> {
        let n = self.resolution as f64;
        self.coords.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn to_point(&self) -> Point {
        Point::new(self.weights())
    }

    /// Squared coordinate norm `sum c_i^2`, exact.
    pub fn coord_norm_sq(&self) -> u64 {
        self.coords.iter().map(|&c| (c as u64) * (c as u64)).sum()
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}/{}", self.resolution)?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "<=" | "le" => Ok(Sense::Le),
            "=" | "==" | "eq" => Ok(Sense::Eq),
            ">=" | "ge" => Ok(Sense::Ge),
            other => Err(invalid!("unknown sense '{other}'")),
        }
    }

    fn accepts(self, ord: Ordering) -> bool {
        match self {
            Sense::Le => ord != Ordering::Greater,
            Sense::Eq => ord == Ordering::Equal,
            Sense::Ge => ord != Ordering::Less,
        }
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// `coeffs . w  (sense)  bound`, held exactly over the rationals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinearConstraint {
    coeffs: Vec<Rational64>,
    bound: Rational64,
    sense: Sense,
    // Denominator-cleared integer form: scaled . c  (sense)  scaled_bound * N.
    scaled: Vec<i128>,
    scaled_bound: i128,
}

impl LinearConstraint {
    pub fn new(coeffs: Vec<Rational64>, bound: Rational64, sense: Sense) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(invalid!("constraint has no coefficients"));
        }
        let mut lcm: i128 = 1;
        for r in coeffs.iter().chain(core::iter::once(&bound)) {
            let d = *r.denom() as i128;
            lcm = lcm / gcd(lcm, d) * d;
            if lcm > (1i128 << 62) {
                return Err(invalid!("constraint denominators too large"));
            }
        }
        let clear = |r: &Rational64| *r.numer() as i128 * (lcm / *r.denom() as i128);
        let scaled = coeffs.iter().map(clear).collect();
        let scaled_bound = clear(&bound);
        Ok(Self { coeffs, bound, sense, scaled, scaled_bound })
    }

    /// `w[index] (sense) bound` over `assets` coordinates.
    pub fn single(index: usize, assets: usize, bound: Rational64, sense: Sense) -> Result<Self> {
        if index >= assets {
            return Err(invalid!("asset index {index} out of range for {assets} assets"));
        }
        let mut coeffs = alloc::vec![Rational64::zero(); assets];
        coeffs[index] = Rational64::from_integer(1);
        Self::new(coeffs, bound, sense)
    }

    /// Parses `x1<=0.6`, `10x1+5x2<=6` (1-based asset names) or `0,1,0<=3/5`.
    pub fn parse(text: &str, assets: usize) -> Result<Self> {
        let (pos, op) = ["<=", ">=", "=="]
            .iter()
            .filter_map(|op| text.find(op).map(|p| (p, *op)))
            .next()
            .or_else(|| text.find('=').map(|p| (p, "=")))
            .ok_or_else(|| invalid!("constraint '{text}' has no comparison"))?;
        let sense = Sense::parse(op)?;
        let lhs = text[..pos].trim();
        let bound = parse_rational(&text[pos + op.len()..])?;
        let mut coeffs = alloc::vec![Rational64::zero(); assets];
        if lhs.contains('x') {
            for term in lhs.split('+') {
                let term = term.trim();
                let at = term.find('x').ok_or_else(|| invalid!("term '{term}' names no asset"))?;
                let coef = term[..at].trim().trim_end_matches('*').trim();
                let coef = if coef.is_empty() { Rational64::from_integer(1) } else { parse_rational(coef)? };
                let idx: usize = term[at + 1..]
                    .trim()
                    .parse()
                    .map_err(|_| invalid!("bad asset index in '{term}'"))?;
                if idx == 0 || idx > assets {
                    return Err(invalid!("asset x{idx} out of range 1..={assets}"));
                }
                coeffs[idx - 1] += coef;
            }
        } else {
            let parts: Vec<&str> = lhs.trim_matches(|c| c == '[' || c == ']').split(',').collect();
            if parts.len() != assets {
                return Err(invalid!("expected {assets} coefficients, got {}", parts.len()));
            }
            for (slot, p) in coeffs.iter_mut().zip(parts) {
                *slot = parse_rational(p)?;
            }
        }
        Self::new(coeffs, bound, sense)
    }

    pub fn coeffs(&self) -> &[Rational64] {
        &self.coeffs
    }

    pub fn bound(&self) -> Rational64 {
        self.bound
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn coeffs_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(rational_to_f64).collect()
    }

    pub fn bound_f64(&self) -> f64 {
        rational_to_f64(&self.bound)
    }

    /// Exact test on integer coordinates at resolution `resolution`.
    pub fn holds_grid(&self, coords: &[u32], resolution: u32) -> bool {
        debug_assert_eq!(coords.len(), self.scaled.len());
        let lhs: i128 = self.scaled.iter().zip(coords).map(|(a, &c)| a * c as i128).sum();
        let rhs = self.scaled_bound * resolution as i128;
        self.sense.accepts(lhs.cmp(&rhs))
    }

    /// `coeffs . w`.
    pub fn value(&self, w: &[f64]) -> f64 {
        self.coeffs.iter().zip(w).map(|(a, x)| rational_to_f64(a) * x).sum()
    }

    /// Floating test within [`TOL`].
    pub fn holds_weights(&self, w: &[f64]) -> bool {
        let v = self.value(w);
        let b = self.bound_f64();
        match self.sense {
            Sense::Le => v <= b + TOL,
            Sense::Eq => (v - b).abs() <= TOL,
            Sense::Ge => v >= b - TOL,
        }
    }
}

impl fmt::Display for LinearConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            if *c == Rational64::from_integer(1) {
                write!(f, "x{}", i + 1)?;
            } else {
                write!(f, "{c}*x{}", i + 1)?;
            }
        }
        if first {
            f.write_str("0")?;
        }
        write!(f, " {} {}", self.sense.symbol(), self.bound)
    }
}

pub fn rational_to_f64(r: &Rational64) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parses `a/b`, an integer, or a finite decimal such as `-0.05`.
pub fn parse_rational(text: &str) -> Result<Rational64> {
    let s = text.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| invalid!("bad numerator in '{s}'"))?;
        let d: i64 = d.trim().parse().map_err(|_| invalid!("bad denominator in '{s}'"))?;
        if d == 0 {
            return Err(invalid!("zero denominator in '{s}'"));
        }
        return Ok(Rational64::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.trim_start().starts_with('-');
        let int_digits = int.trim_start_matches(['-', '+']);
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 15 {
            return Err(invalid!("bad decimal '{s}'"));
        }
        let whole: i64 = if int_digits.is_empty() {
            0
        } else {
            int_digits.parse().map_err(|_| invalid!("bad decimal '{s}'"))?
        };
        let den = 10i64.pow(frac.len() as u32);
        let f: i64 = frac.parse().map_err(|_| invalid!("bad decimal '{s}'"))?;
        let num = whole
            .checked_mul(den)
            .and_then(|v| v.checked_add(f))
            .ok_or_else(|| invalid!("decimal '{s}' overflows"))?;
        return Ok(Rational64::new(if neg { -num } else { num }, den));
    }
    s.parse::<i64>()
        .map(Rational64::from_integer)
        .map_err(|_| invalid!("cannot parse '{s}' as a rational"))
}

/// Number of lattice points of the full simplex, `C(N + n, n)`.
pub fn simplex_count(n: usize, resolution: u32) -> u64 {
    let mut acc: u128 = 1;
    for k in 1..=n as u128 {
        acc = acc * (resolution as u128 + k) / k;
    }
    acc.min(u64::MAX as u128) as u64
}

/// Finite lattice `{x in Delta^n_N : constraints}`, points in lexicographic order.
#[derive(Debug, Clone)]
pub struct LatticeSpace {
    dimension: usize,
    resolution: u32,
    constraints: Vec<LinearConstraint>,
    carved: bool,
    points: Vec<GridPoint>,
    cells: Vec<Point>,
}

impl PartialEq for LatticeSpace {
    fn eq(&self, other: &Self) -> bool {
        self.same_grid(other) && self.points == other.points
    }
}

impl LatticeSpace {
    /// Every grid point of `Delta^n_N`.
    pub fn enumerate_simplex(dimension: usize, resolution: u32) -> Result<Self> {
        Self::with_constraints(dimension, resolution, Vec::new())
    }

    pub fn with_constraints(
        dimension: usize,
        resolution: u32,
        constraints: Vec<LinearConstraint>,
    ) -> Result<Self> {
        if dimension > MAX_DIMENSION {
            return Err(invalid!("dimension must be at most {MAX_DIMENSION}, got {dimension}"));
        }
        if resolution == 0 || resolution > MAX_RESOLUTION {
            return Err(invalid!("resolution must be in 1..={MAX_RESOLUTION}, got {resolution}"));
        }
        let count = simplex_count(dimension, resolution);
        if count > MAX_POINTS {
            return Err(invalid!("lattice would hold {count} points, cap is {MAX_POINTS}"));
        }
        for c in &constraints {
            if c.coeffs.len() != dimension + 1 {
                return Err(invalid!(
                    "constraint has {} coefficients, expected {}",
                    c.coeffs.len(),
                    dimension + 1
                ));
            }
        }
        let mut points = Vec::new();
        let mut coords = alloc::vec![0u32; dimension + 1];
        fill(&mut coords, 0, resolution, &mut |c| {
            if constraints.iter().all(|k| k.holds_grid(c, resolution)) {
                points.push(GridPoint { coords: c.to_vec(), resolution });
            }
        });
        Ok(Self::from_parts(dimension, resolution, constraints, false, points))
    }

    fn from_parts(
        dimension: usize,
        resolution: u32,
        constraints: Vec<LinearConstraint>,
        carved: bool,
        points: Vec<GridPoint>,
    ) -> Self {
        let cells = points.iter().map(GridPoint::to_point).collect();
        Self { dimension, resolution, constraints, carved, points, cells }
    }

    /// Subset of this space satisfying extra constraints.
    pub fn restrict(&self, extra: &[LinearConstraint]) -> Result<Self> {
        for c in extra {
            if c.coeffs.len() != self.dimension + 1 {
                return Err(invalid!("constraint arity does not match dimension {}", self.dimension));
            }
        }
        let points: Vec<GridPoint> = self
            .points
            .iter()
            .filter(|p| extra.iter().all(|c| c.holds_grid(&p.coords, self.resolution)))
            .cloned()
            .collect();
        let mut constraints = self.constraints.clone();
        constraints.extend(extra.iter().cloned());
        Ok(Self::from_parts(self.dimension, self.resolution, constraints, self.carved, points))
    }

    /// Arbitrary subset of this space, e.g. the domain of a partial relation.
    pub fn carve(&self, keep: impl Fn(&GridPoint) -> bool) -> Self {
        let points = self.points.iter().filter(|p| keep(p)).cloned().collect();
        Self::from_parts(self.dimension, self.resolution, self.constraints.clone(), true, points)
    }

    /// The unconstrained simplex on the same grid.
    pub fn ambient(&self) -> Result<Self> {
        Self::enumerate_simplex(self.dimension, self.resolution)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn assets(&self) -> usize {
        self.dimension + 1
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    /// True when the point set was carved beyond the linear constraints.
    pub fn is_carved(&self) -> bool {
        self.carved
    }

    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    /// Weight vectors aligned with [`Self::points`].
    pub fn cells(&self) -> &[Point] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.dimension == other.dimension && self.resolution == other.resolution
    }

    pub fn index_of(&self, p: &Point) -> Option<usize> {
        self.cells.binary_search(p).ok()
    }

    pub fn index_of_grid(&self, p: &GridPoint) -> Option<usize> {
        self.points.binary_search(p).ok()
    }

    /// Exact membership of a grid point.
    pub fn contains(&self, p: &GridPoint) -> Result<bool> {
        if p.coords.len() != self.dimension + 1 || p.resolution != self.resolution {
            return Err(invalid!(
                "point {p} does not live on Delta^{}_{}",
                self.dimension,
                self.resolution
            ));
        }
        if self.carved {
            return Ok(self.index_of_grid(p).is_some());
        }
        Ok(self.constraints.iter().all(|c| c.holds_grid(&p.coords, self.resolution)))
    }

    /// Membership of a continuous point in the predicate region, within [`TOL`].
    ///
    /// Carved spaces only admit their own lattice points.
    pub fn contains_weights(&self, w: &[f64]) -> bool {
        if w.len() != self.dimension + 1 {
            return false;
        }
        if self.carved {
            return self.index_of(&Point::new(w.to_vec())).is_some();
        }
        in_simplex(w) && self.constraints.iter().all(|c| c.holds_weights(w))
    }
}

/// True when `w` is a probability vector within [`TOL`].
pub fn in_simplex(w: &[f64]) -> bool {
    let sum: f64 = w.iter().sum();
    w.iter().all(|x| *x >= -TOL && x.is_finite()) && (sum - 1.0).abs() <= TOL * w.len() as f64
}

fn fill(coords: &mut [u32], at: usize, remaining: u32, emit: &mut impl FnMut(&[u32])) {
    if at + 1 == coords.len() {
        coords[at] = remaining;
        emit(coords);
        return;
    }
    for c in 0..=remaining {
        coords[at] = c;
        fill(coords, at + 1, remaining - c, emit);
    }
}

/// Euclidean distance.
pub fn l2(a: &[f64], b: &[f64]) -> f64 {
    Float::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
}

/// L1 distance.
pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Max-norm distance.
pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Largest-remainder rounding of a probability vector onto `Delta_N`.
///
/// Ties in the remainder go to the lower index.
pub fn snap_largest_remainder(w: &[f64], resolution: u32) -> Result<GridPoint> {
    if !in_simplex(w) {
        return Err(invalid!("cannot snap a non-simplex vector"));
    }
    let scaled: Vec<f64> = w.iter().map(|x| x.max(0.0) * resolution as f64).collect();
    let mut coords: Vec<u32> = scaled.iter().map(|s| Float::floor(*s + 1e-9) as u32).collect();
    let used: u32 = coords.iter().sum();
    let mut order: Vec<usize> = (0..w.len()).collect();
    let rem = |i: usize| scaled[i] - coords[i] as f64;
    order.sort_by(|&a, &b| rem(b).partial_cmp(&rem(a)).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    let missing = resolution.saturating_sub(used) as usize;
    for &i in order.iter().take(missing) {
        coords[i] += 1;
    }
    let mut total: u32 = coords.iter().sum();
    // Over-full only through the 1e-9 floor slack.
    for i in (0..coords.len()).rev() {
        while total > resolution && coords[i] > 0 {
            coords[i] -= 1;
            total -= 1;
        }
    }
    GridPoint::new(coords, resolution)
}

/// `w -> coeffs . w` with exact evaluation on grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFunctional {
    coeffs: Vec<Rational64>,
    units: String,
}

impl LinearFunctional {
    pub fn new(coeffs: Vec<Rational64>, units: impl Into<String>) -> Self {
        Self { coeffs, units: units.into() }
    }

    pub fn from_integers(coeffs: &[i64], units: &str) -> Self {
        Self::new(coeffs.iter().map(|&c| Rational64::from_integer(c)).collect(), units)
    }

    pub fn coeffs(&self) -> &[Rational64] {
        &self.coeffs
    }

    pub fn units(&self) -> &str {
        &self.units
    }

    pub fn eval(&self, p: &GridPoint) -> Result<Rational64> {
        if p.coords.len() != self.coeffs.len() {
            return Err(invalid!("functional arity {} does not match point", self.coeffs.len()));
        }
        let n = p.resolution as i64;
        let mut acc = Rational64::zero();
        for (a, &c) in self.coeffs.iter().zip(&p.coords) {
            acc += *a * Rational64::new(c as i64, n);
        }
        Ok(acc)
    }

    pub fn eval_weights(&self, w: &[f64]) -> f64 {
        self.coeffs.iter().zip(w).map(|(a, x)| rational_to_f64(a) * x).sum()
    }

    pub fn describe(&self) -> String {
        let parts: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        alloc::format!("[{}] {}", parts.join(", "), self.units)
    }
}

/// Linear attribute map `w -> A w` into `R^k`; `None` rows mean identity.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeMap {
    inputs: usize,
    rows: Option<Vec<Vec<f64>>>,
}

impl AttributeMap {
    pub fn identity(inputs: usize) -> Self {
        Self { inputs, rows: None }
    }

    pub fn matrix(rows: Vec<Vec<f64>>) -> Result<Self> {
        let inputs = rows.first().map(Vec::len).ok_or_else(|| invalid!("attribute matrix has no rows"))?;
        if inputs == 0 || rows.iter().any(|r| r.len() != inputs) {
            return Err(invalid!("attribute matrix rows must share a positive width"));
        }
        for r in &rows {
            check_finite(r, "attribute matrix")?;
        }
        Ok(Self { inputs, rows: Some(rows) })
    }

    /// Projection onto one coordinate.
    pub fn coordinate(index: usize, inputs: usize) -> Result<Self> {
        if index >= inputs {
            return Err(invalid!("coordinate {index} out of range"));
        }
        let mut row = alloc::vec![0.0; inputs];
        row[index] = 1.0;
        Self::matrix(alloc::vec![row])
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.rows.as_ref().map_or(self.inputs, Vec::len)
    }

    pub fn rows(&self) -> Option<&[Vec<f64>]> {
        self.rows.as_deref()
    }

    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        match &self.rows {
            None => w.to_vec(),
            Some(rows) => rows.iter().map(|r| r.iter().zip(w).map(|(a, x)| a * x).sum()).collect(),
        }
    }
}

pub(crate) fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(alloc::format!("{what} contains a non-finite value")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn r(s: &str) -> Rational64 {
        parse_rational(s).unwrap()
    }

    fn binom(n: u64, k: u64) -> u64 {
        // Pascal's triangle, independent of simplex_count.
        let mut row = vec![1u64];
        for _ in 0..n {
            let mut next = vec![1u64; row.len() + 1];
            for i in 1..row.len() {
                next[i] = row[i - 1] + row[i];
            }
            row = next;
        }
        row[k as usize]
    }

    #[test]
    fn simplex_counts_match_binomials() {
        for n in 1..=4usize {
            for big_n in [1u32, 2, 5, 10, 20] {
                let s = LatticeSpace::enumerate_simplex(n, big_n).unwrap();
                let want = binom(big_n as u64 + n as u64, n as u64);
                assert_eq!(s.len() as u64, want);
                assert_eq!(simplex_count(n, big_n), want);
            }
        }
        assert_eq!(LatticeSpace::enumerate_simplex(2, 100).unwrap().len(), 5151);
        assert_eq!(LatticeSpace::enumerate_simplex(2, 50).unwrap().len(), 1326);
    }

    #[test]
    fn delta2_n2_is_lexicographic() {
        let s = LatticeSpace::enumerate_simplex(2, 2).unwrap();
        let got: Vec<Vec<u32>> = s.points().iter().map(|p| p.coords().to_vec()).collect();
        assert_eq!(
            got,
            vec![vec![0, 0, 2], vec![0, 1, 1], vec![0, 2, 0], vec![1, 0, 1], vec![1, 1, 0], vec![2, 0, 0]]
        );
    }

    #[test]
    fn hub_cap_counts() {
        let base = LatticeSpace::enumerate_simplex(2, 100).unwrap();
        let hub = base.restrict(&[LinearConstraint::parse("x1<=0.6", 3).unwrap()]).unwrap();
        assert_eq!(hub.len(), 4331);
        let half = LatticeSpace::with_constraints(2, 50, vec![LinearConstraint::parse("x1<=1/2", 3).unwrap()]).unwrap();
        // sum_{a=0}^{25} (51 - a)
        assert_eq!(half.len(), (0..=25).map(|a| 51 - a).sum::<usize>());
        let cap = LatticeSpace::with_constraints(2, 50, vec![LinearConstraint::parse("x1<=0.4", 3).unwrap()]).unwrap();
        assert_eq!(cap.len(), 861);
    }

    #[test]
    fn contains_is_exact_at_the_boundary() {
        let k = LatticeSpace::with_constraints(
            2,
            100,
            vec![LinearConstraint::new(vec![r("0"), r("1"), r("0")], r("3/5"), Sense::Le).unwrap()],
        )
        .unwrap();
        assert!(k.contains(&GridPoint::new(vec![40, 60, 0], 100).unwrap()).unwrap());
        assert!(!k.contains(&GridPoint::new(vec![30, 61, 9], 100).unwrap()).unwrap());
        assert!(k.contains(&GridPoint::new(vec![1, 2], 3).unwrap()).is_err());
    }

    #[test]
    fn fee_functional_is_exact() {
        let fee = LinearFunctional::from_integers(&[10, 5, 0], "bps");
        let p = GridPoint::new(vec![30, 20, 50], 100).unwrap();
        assert_eq!(fee.eval(&p).unwrap(), Rational64::from_integer(4));
    }

    #[test]
    fn rejects_bad_arguments() {
        assert_eq!(LatticeSpace::enumerate_simplex(0, 10).unwrap().len(), 1);
        assert!(LatticeSpace::enumerate_simplex(7, 10).is_err());
        assert!(LatticeSpace::enumerate_simplex(2, 0).is_err());
        assert!(LatticeSpace::enumerate_simplex(6, 400).is_err());
        assert!(GridPoint::new(vec![1, 1], 3).is_err());
        let bad = LinearConstraint::parse("x1<=0.5", 2).unwrap();
        assert!(LatticeSpace::with_constraints(2, 10, vec![bad]).is_err());
    }

    #[test]
    fn parses_rationals_and_constraints() {
        assert_eq!(r("0.6"), Rational64::new(3, 5));
        assert_eq!(r("-0.05"), Rational64::new(-1, 20));
        assert_eq!(r("3/5"), Rational64::new(3, 5));
        assert_eq!(r("7"), Rational64::from_integer(7));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        let fee = LinearConstraint::parse("10x1 + 5*x2 <= 6", 3).unwrap();
        assert_eq!(fee.coeffs(), &[r("10"), r("5"), r("0")]);
        assert_eq!(fee.sense(), Sense::Le);
        let ge = LinearConstraint::parse("1,0,1>=1/4", 3).unwrap();
        assert_eq!(ge.sense(), Sense::Ge);
        assert!(LinearConstraint::parse("x4<=1", 3).is_err());
    }

    #[test]
    fn snapping_preserves_total() {
        let p = snap_largest_remainder(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 10).unwrap();
        assert_eq!(p.coords(), &[4, 3, 3]);
        let q = snap_largest_remainder(&[0.25, 0.75], 8).unwrap();
        assert_eq!(q.coords(), &[2, 6]);
    }

    #[test]
    fn point_keys_collapse_float_noise() {
        let a = Point::new(vec![0.1 + 0.2, 0.7]);
        let b = Point::new(vec![0.3, 0.7]);
        assert_eq!(a, b);
    }
}
