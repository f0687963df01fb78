//! Exact interval and brick arithmetic: intersections, common refinements,
//! uniform tilings and max-norm balls.
//!
//! Everything here is closed over rationals; there is no floating point in
//! this module. Open/closed endpoint flags are tracked exactly so that
//! pointwise membership, refinement grids and tilings are genuine pointwise
//! partitions.

use crate::rational::{fmt_rat, parse_rat, Point, Rat};
use num_traits::Zero;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum GeometryError {
    #[error("interval [{lo}, {hi}] is empty (lo > hi, or lo = hi with an open endpoint)")]
    EmptyInterval { lo: String, hi: String },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("a brick needs at least one factor")]
    NoFactors,
    #[error("brick is not contained in the ambient brick")]
    OutsideAmbient,
    #[error("subdivision count must be positive")]
    ZeroSubdivisions,
    #[error("ambient brick is degenerate (zero volume)")]
    DegenerateAmbient,
    #[error("point lies outside the brick")]
    PointOutsideBrick,
    #[error("radius must be positive")]
    NonpositiveRadius,
}

/// A bounded rational-endpoint interval with explicit endpoint membership.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: Rat,
    hi: Rat,
    lo_closed: bool,
    hi_closed: bool,
}

impl Interval {
    pub fn new(lo: Rat, hi: Rat, lo_closed: bool, hi_closed: bool) -> Result<Self, GeometryError> {
        if lo > hi || (lo == hi && !(lo_closed && hi_closed)) {
            return Err(GeometryError::EmptyInterval {
                lo: fmt_rat(&lo),
                hi: fmt_rat(&hi),
            });
        }
        Ok(Self { lo, hi, lo_closed, hi_closed })
    }

    pub fn closed(lo: Rat, hi: Rat) -> Result<Self, GeometryError> {
        Self::new(lo, hi, true, true)
    }

    pub fn open(lo: Rat, hi: Rat) -> Result<Self, GeometryError> {
        Self::new(lo, hi, false, false)
    }

    /// `[lo, hi)`.
    pub fn half_open(lo: Rat, hi: Rat) -> Result<Self, GeometryError> {
        Self::new(lo, hi, true, false)
    }

    pub fn point(x: Rat) -> Self {
        Self { lo: x.clone(), hi: x, lo_closed: true, hi_closed: true }
    }

    pub fn lo(&self) -> &Rat {
        &self.lo
    }

    pub fn hi(&self) -> &Rat {
        &self.hi
    }

    pub fn lo_closed(&self) -> bool {
        self.lo_closed
    }

    pub fn hi_closed(&self) -> bool {
        self.hi_closed
    }

    pub fn length(&self) -> Rat {
        &self.hi - &self.lo
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn midpoint(&self) -> Rat {
        (&self.lo + &self.hi) / Rat::from_integer(2.into())
    }

    pub fn contains(&self, x: &Rat) -> bool {
        let above = if self.lo_closed { x >= &self.lo } else { x > &self.lo };
        let below = if self.hi_closed { x <= &self.hi } else { x < &self.hi };
        above && below
    }

    pub fn closure(&self) -> Self {
        Self { lo: self.lo.clone(), hi: self.hi.clone(), lo_closed: true, hi_closed: true }
    }

    /// Pointwise subset test honoring endpoint flags.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        let lo_ok = match self.lo.cmp(&other.lo) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Equal => other.lo_closed || !self.lo_closed,
            std::cmp::Ordering::Less => false,
        };
        let hi_ok = match self.hi.cmp(&other.hi) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Equal => other.hi_closed || !self.hi_closed,
            std::cmp::Ordering::Greater => false,
        };
        lo_ok && hi_ok
    }

    /// Exact intersection; `None` when empty.
    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let (lo, lo_closed) = match self.lo.cmp(&other.lo) {
            std::cmp::Ordering::Greater => (self.lo.clone(), self.lo_closed),
            std::cmp::Ordering::Less => (other.lo.clone(), other.lo_closed),
            std::cmp::Ordering::Equal => (self.lo.clone(), self.lo_closed && other.lo_closed),
        };
        let (hi, hi_closed) = match self.hi.cmp(&other.hi) {
            std::cmp::Ordering::Less => (self.hi.clone(), self.hi_closed),
            std::cmp::Ordering::Greater => (other.hi.clone(), other.hi_closed),
            std::cmp::Ordering::Equal => (self.hi.clone(), self.hi_closed && other.hi_closed),
        };
        Interval::new(lo, hi, lo_closed, hi_closed).ok()
    }

    /// Whether the open interiors overlap.
    pub fn interior_overlaps(&self, other: &Self) -> bool {
        if self.is_degenerate() || other.is_degenerate() {
            return false;
        }
        let lo = self.lo.clone().max(other.lo.clone());
        let hi = self.hi.clone().min(other.hi.clone());
        lo < hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            fmt_rat(&self.lo),
            fmt_rat(&self.hi),
            if self.hi_closed { ']' } else { ')' },
        )
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        (fmt_rat(&self.lo), fmt_rat(&self.hi), self.lo_closed, self.hi_closed).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (lo, hi, lc, hc) = <(String, String, bool, bool)>::deserialize(d)?;
        let lo = parse_rat(&lo).map_err(D::Error::custom)?;
        let hi = parse_rat(&hi).map_err(D::Error::custom)?;
        Interval::new(lo, hi, lc, hc).map_err(D::Error::custom)
    }
}

/// A product of `n >= 1` bounded intervals.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Brick {
    factors: Vec<Interval>,
}

impl<'de> Deserialize<'de> for Brick {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let factors = Vec::<Interval>::deserialize(d)?;
        Brick::new(factors).map_err(D::Error::custom)
    }
}

impl Brick {
    pub fn new(factors: Vec<Interval>) -> Result<Self, GeometryError> {
        if factors.is_empty() {
            return Err(GeometryError::NoFactors);
        }
        Ok(Self { factors })
    }

    /// Closed unit-style brick `[lo_1, hi_1] x ... x [lo_n, hi_n]`.
    pub fn closed_from_bounds(bounds: &[(Rat, Rat)]) -> Result<Self, GeometryError> {
        let factors = bounds
            .iter()
            .map(|(lo, hi)| Interval::closed(lo.clone(), hi.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(factors)
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Interval] {
        &self.factors
    }

    pub fn factor(&self, k: usize) -> &Interval {
        &self.factors[k]
    }

    /// Exact volume: the product of factor lengths.
    pub fn volume(&self) -> Rat {
        self.factors.iter().map(Interval::length).product()
    }

    pub fn is_degenerate(&self) -> bool {
        self.factors.iter().any(Interval::is_degenerate)
    }

    pub fn contains_point(&self, x: &[Rat]) -> bool {
        x.len() == self.dim() && self.factors.iter().zip(x).all(|(f, xi)| f.contains(xi))
    }

    pub fn center(&self) -> Point {
        self.factors.iter().map(Interval::midpoint).collect()
    }

    pub fn closure(&self) -> Self {
        Self { factors: self.factors.iter().map(Interval::closure).collect() }
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.dim() == other.dim()
            && self
                .factors
                .iter()
                .zip(&other.factors)
                .all(|(a, b)| a.is_subset_of(b))
    }

    /// Factor-wise intersection; `Ok(None)` when empty.
    pub fn intersect(&self, other: &Self) -> Result<Option<Self>, GeometryError> {
        if self.dim() != other.dim() {
            return Err(GeometryError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        let mut factors = Vec::with_capacity(self.dim());
        for (a, b) in self.factors.iter().zip(&other.factors) {
            match a.intersect(b) {
                Some(i) => factors.push(i),
                None => return Ok(None),
            }
        }
        Ok(Some(Self { factors }))
    }

    /// Whether the open interiors of two bricks meet. Degenerate bricks have
    /// empty interior and never overlap anything.
    pub fn interior_overlaps(&self, other: &Self) -> bool {
        self.dim() == other.dim()
            && self
                .factors
                .iter()
                .zip(&other.factors)
                .all(|(a, b)| a.interior_overlaps(b))
    }

    /// Max-norm distance from an interior point to the boundary (the largest
    /// `r` with the open max-norm ball inside the closure). Zero on the
    /// boundary.
    pub fn boundary_distance(&self, x: &[Rat]) -> Rat {
        self.factors
            .iter()
            .zip(x)
            .map(|(f, xi)| (xi - f.lo()).min(f.hi() - xi))
            .min()
            .expect("brick has at least one factor")
    }

    /// Max-norm diameter (largest factor length).
    pub fn diameter(&self) -> Rat {
        self.factors
            .iter()
            .map(Interval::length)
            .max()
            .expect("brick has at least one factor")
    }

    /// Whether `x` lies strictly inside every factor.
    pub fn strictly_contains(&self, x: &[Rat]) -> bool {
        x.len() == self.dim()
            && self
                .factors
                .iter()
                .zip(x)
                .all(|(f, xi)| f.lo() < xi && xi < f.hi())
    }
}

impl fmt::Display for Brick {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, factor) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, " x ")?;
            }
            write!(f, "{factor}")?;
        }
        Ok(())
    }
}

/// The open max-norm ball `prod (x_k - r, x_k + r)` clipped to `T`.
pub fn max_norm_ball(x: &[Rat], r: &Rat, ambient: &Brick) -> Result<Brick, GeometryError> {
    if r <= &Rat::zero() {
        return Err(GeometryError::NonpositiveRadius);
    }
    if !ambient.contains_point(x) {
        return Err(GeometryError::PointOutsideBrick);
    }
    let mut factors = Vec::with_capacity(ambient.dim());
    for (f, xi) in ambient.factors.iter().zip(x) {
        let ball = Interval::new(xi - r, xi + r, false, false).expect("r > 0");
        factors.push(ball.intersect(f).expect("x is in the ambient brick"));
    }
    Brick::new(factors)
}

/// A common refinement of finitely many bricks inside an ambient brick.
///
/// Per axis the ambient factor is split into pieces (possibly degenerate
/// points) such that each input brick factor is an exact union of pieces;
/// cells are products of pieces. Cells partition the ambient brick pointwise
/// and each cell is contained in or disjoint from every input brick.
#[derive(Debug, Clone)]
pub struct RefinementGrid {
    ambient: Brick,
    axes: Vec<Vec<Interval>>,
    /// membership[axis][piece][input]: piece is a subset of the input's factor.
    membership: Vec<Vec<Vec<bool>>>,
}

pub fn common_refinement(bricks: &[Brick], ambient: &Brick) -> Result<RefinementGrid, GeometryError> {
    for b in bricks {
        if b.dim() != ambient.dim() {
            return Err(GeometryError::DimensionMismatch { left: b.dim(), right: ambient.dim() });
        }
        if !b.is_subset_of(ambient) {
            return Err(GeometryError::OutsideAmbient);
        }
    }
    let mut axes = Vec::with_capacity(ambient.dim());
    let mut membership = Vec::with_capacity(ambient.dim());
    for k in 0..ambient.dim() {
        let inputs: Vec<&Interval> = bricks.iter().map(|b| b.factor(k)).collect();
        let (pieces, member) = refine_axis(ambient.factor(k), &inputs);
        axes.push(pieces);
        membership.push(member);
    }
    Ok(RefinementGrid { ambient: ambient.clone(), axes, membership })
}

/// Split one ambient factor into signature-merged pieces.
fn refine_axis(ambient: &Interval, inputs: &[&Interval]) -> (Vec<Interval>, Vec<Vec<bool>>) {
    let mut cuts: Vec<Rat> = vec![ambient.lo().clone(), ambient.hi().clone()];
    for i in inputs {
        cuts.push(i.lo().clone());
        cuts.push(i.hi().clone());
    }
    cuts.sort();
    cuts.dedup();

    // Elementary pieces: degenerate points at cut values contained in the
    // ambient factor, and open intervals between consecutive cuts.
    let mut elementary: Vec<Interval> = Vec::new();
    for (i, v) in cuts.iter().enumerate() {
        if ambient.contains(v) {
            elementary.push(Interval::point(v.clone()));
        }
        if let Some(next) = cuts.get(i + 1) {
            if v < next {
                elementary.push(Interval::open(v.clone(), next.clone()).unwrap());
            }
        }
    }

    let signature = |piece: &Interval| -> Vec<bool> {
        let probe = piece.midpoint();
        inputs.iter().map(|i| i.contains(&probe)).collect()
    };

    // Merge consecutive pieces with the same membership signature.
    let mut pieces: Vec<Interval> = Vec::new();
    let mut members: Vec<Vec<bool>> = Vec::new();
    for piece in elementary {
        let sig = signature(&piece);
        if let (Some(last), Some(last_sig)) = (pieces.last_mut(), members.last()) {
            if *last_sig == sig && last.hi() == piece.lo() {
                // Adjacent pieces always abut exactly; extend the run.
                *last = Interval::new(
                    last.lo().clone(),
                    piece.hi().clone(),
                    last.lo_closed(),
                    piece.hi_closed(),
                )
                .unwrap();
                continue;
            }
        }
        pieces.push(piece);
        members.push(sig);
    }
    (pieces, members)
}

impl RefinementGrid {
    pub fn ambient(&self) -> &Brick {
        &self.ambient
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn pieces(&self, axis: usize) -> &[Interval] {
        &self.axes[axis]
    }

    pub fn cell_count(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn cell(&self, idx: &[usize]) -> Brick {
        let factors = idx
            .iter()
            .zip(&self.axes)
            .map(|(&i, pieces)| pieces[i].clone())
            .collect();
        Brick::new(factors).expect("grid axes are nonempty")
    }

    /// Whether cell `idx` is contained in input brick `j`.
    pub fn cell_in_input(&self, idx: &[usize], j: usize) -> bool {
        idx.iter()
            .zip(&self.membership)
            .all(|(&i, axis)| axis[i][j])
    }

    /// Iterate over all multi-indices in lexicographic order.
    pub fn indices(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let dims: Vec<usize> = self.axes.iter().map(Vec::len).collect();
        MultiIndex::new(dims)
    }
}

/// Odometer over a rectangular index space.
pub(crate) struct MultiIndex {
    dims: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl MultiIndex {
    pub(crate) fn new(dims: Vec<usize>) -> Self {
        let next = if dims.iter().all(|&d| d > 0) {
            Some(vec![0; dims.len()])
        } else {
            None
        };
        Self { dims, next }
    }
}

impl Iterator for MultiIndex {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.clone()?;
        let mut bumped = current.clone();
        let mut done = true;
        for k in (0..self.dims.len()).rev() {
            bumped[k] += 1;
            if bumped[k] < self.dims[k] {
                done = false;
                break;
            }
            bumped[k] = 0;
        }
        self.next = if done { None } else { Some(bumped) };
        Some(current)
    }
}

/// A tiling of `T` by `m^n` translates of `m^{-1} T`, half-open so the cells
/// partition `T` pointwise (the outermost slabs inherit `T`'s own endpoint
/// flags).
#[derive(Debug, Clone)]
pub struct UniformTiling {
    pub ambient: Brick,
    pub m: usize,
    cells: Vec<Brick>,
    centers: Vec<Point>,
}

pub fn uniform_tiling(ambient: &Brick, m: usize) -> Result<UniformTiling, GeometryError> {
    if m == 0 {
        return Err(GeometryError::ZeroSubdivisions);
    }
    if ambient.volume().is_zero() {
        return Err(GeometryError::DegenerateAmbient);
    }
    let m_rat = Rat::from_integer(m.into());
    let mut axis_cells: Vec<Vec<Interval>> = Vec::with_capacity(ambient.dim());
    for f in ambient.factors() {
        let step = f.length() / &m_rat;
        let mut row = Vec::with_capacity(m);
        for j in 0..m {
            let lo = f.lo() + &step * Rat::from_integer(j.into());
            let hi = f.lo() + &step * Rat::from_integer((j + 1).into());
            let lo_closed = if j == 0 { f.lo_closed() } else { true };
            let hi_closed = if j == m - 1 { f.hi_closed() } else { false };
            row.push(Interval::new(lo, hi, lo_closed, hi_closed).expect("step > 0"));
        }
        axis_cells.push(row);
    }
    let mut cells = Vec::with_capacity(m.pow(ambient.dim() as u32));
    let mut centers = Vec::with_capacity(cells.capacity());
    for idx in MultiIndex::new(vec![m; ambient.dim()]) {
        let factors: Vec<Interval> = idx
            .iter()
            .enumerate()
            .map(|(k, &j)| axis_cells[k][j].clone())
            .collect();
        let cell = Brick::new(factors).unwrap();
        centers.push(cell.center());
        cells.push(cell);
    }
    Ok(UniformTiling { ambient: ambient.clone(), m, cells, centers })
}

impl UniformTiling {
    pub fn cells(&self) -> &[Brick] {
        &self.cells
    }

    pub fn centers(&self) -> &[Point] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Index of the unique cell containing `x`, or `None` if `x` is outside
    /// the ambient brick.
    pub fn cell_index_of(&self, x: &[Rat]) -> Option<usize> {
        if !self.ambient.contains_point(x) {
            return None;
        }
        let m_rat = Rat::from_integer(self.m.into());
        let mut index = 0usize;
        for (f, xi) in self.ambient.factors().iter().zip(x) {
            let offset = (xi - f.lo()) * &m_rat / f.length();
            let raw = offset.floor().to_integer();
            let j = usize::try_from(&raw).map_or(self.m - 1, |j| j.min(self.m - 1));
            index = index * self.m + j;
        }
        debug_assert!(self.cells[index].contains_point(x));
        Some(index)
    }
}
