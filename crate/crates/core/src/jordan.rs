//! Jordan content machinery: inner/outer dyadic content estimates, null-set
//! certification, and boundary covers.
//!
//! Cell classification samples the closure corners and the center of each
//! dyadic cell, so `content_bounds` is a semi-decision: correct in the limit
//! for predicates whose boundary is tame with respect to dyadic grids, and
//! always exact as rational arithmetic on whatever the samples report.

use crate::geometry::{Brick, GeometryError, Interval, MultiIndex};
use crate::oracle::PointPredicate;
use crate::rational::{Point, Rat};
use num_traits::Zero;
use serde::{Deserialize, Serialize};

/// Finitely many bricks with their exact total volume: the "finitely many
/// bricks of total volume less than delta" of the convergence definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceptionCover {
    bricks: Vec<Brick>,
    #[serde(with = "crate::rational::serde_rat")]
    total_volume: Rat,
}

impl ExceptionCover {
    pub fn new(bricks: Vec<Brick>) -> Self {
        let total_volume = bricks.iter().map(Brick::volume).sum();
        Self { bricks, total_volume }
    }

    pub fn empty() -> Self {
        Self { bricks: Vec::new(), total_volume: Rat::zero() }
    }

    pub fn bricks(&self) -> &[Brick] {
        &self.bricks
    }

    pub fn total_volume(&self) -> &Rat {
        &self.total_volume
    }

    pub fn is_empty(&self) -> bool {
        self.bricks.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bricks.len()
    }

    pub fn contains_point(&self, x: &[Rat]) -> bool {
        self.bricks.iter().any(|b| b.contains_point(x))
    }

    /// Concatenation of two covers (volumes add; no disjointness implied).
    pub fn merged(&self, other: &Self) -> Self {
        let mut bricks = self.bricks.clone();
        bricks.extend(other.bricks.iter().cloned());
        Self::new(bricks)
    }

    /// Exact measure of the union of the bricks (inclusion-exclusion via a
    /// common refinement over the bounding box).
    pub fn union_measure(&self) -> Result<Rat, GeometryError> {
        if self.bricks.is_empty() {
            return Ok(Rat::zero());
        }
        let bounding = bounding_box(&self.bricks)?;
        let grid = crate::geometry::common_refinement(&self.bricks, &bounding)?;
        let mut measure = Rat::zero();
        for idx in grid.indices() {
            if (0..self.bricks.len()).any(|j| grid.cell_in_input(&idx, j)) {
                measure += grid.cell(&idx).volume();
            }
        }
        Ok(measure)
    }
}

fn bounding_box(bricks: &[Brick]) -> Result<Brick, GeometryError> {
    let dim = bricks[0].dim();
    let mut bounds = Vec::with_capacity(dim);
    for k in 0..dim {
        let mut lo = bricks[0].factor(k).lo().clone();
        let mut hi = bricks[0].factor(k).hi().clone();
        for b in bricks {
            if b.dim() != dim {
                return Err(GeometryError::DimensionMismatch { left: b.dim(), right: dim });
            }
            lo = lo.min(b.factor(k).lo().clone());
            hi = hi.max(b.factor(k).hi().clone());
        }
        bounds.push((lo, hi));
    }
    Brick::closed_from_bounds(&bounds)
}

/// Exact inner/outer dyadic content estimates at a given depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentBounds {
    #[serde(with = "crate::rational::serde_rat")]
    pub inner: Rat,
    #[serde(with = "crate::rational::serde_rat")]
    pub outer: Rat,
    pub depth: u32,
}

impl ContentBounds {
    pub fn gap(&self) -> Rat {
        &self.outer - &self.inner
    }
}

/// A uniform grid over an ambient brick: `cells_per_axis` slabs per axis
/// (a power of two for the dyadic sweeps, arbitrary for tilings).
pub(crate) struct DyadicGrid {
    pub ambient: Brick,
    /// Per axis: cells_per_axis + 1 cut values.
    cuts: Vec<Vec<Rat>>,
    pub cells_per_axis: usize,
}

impl DyadicGrid {
    pub fn new(ambient: &Brick, depth: u32) -> Self {
        Self::custom(ambient, 1usize << depth)
    }

    pub fn custom(ambient: &Brick, cells_per_axis: usize) -> Self {
        assert!(cells_per_axis > 0);
        let m_rat = Rat::from_integer(cells_per_axis.into());
        let cuts = ambient
            .factors()
            .iter()
            .map(|f| {
                let step = f.length() / &m_rat;
                (0..=cells_per_axis)
                    .map(|j| f.lo() + &step * Rat::from_integer(j.into()))
                    .collect()
            })
            .collect();
        Self { ambient: ambient.clone(), cuts, cells_per_axis }
    }

    pub fn cell_volume(&self) -> Rat {
        self.ambient.volume() / Rat::from_integer(self.cell_count_big())
    }

    pub fn cell_count_big(&self) -> num_bigint::BigInt {
        num_bigint::BigInt::from(self.cells_per_axis).pow(self.ambient.dim() as u32)
    }

    pub fn cell_count_big_f64(&self) -> f64 {
        (self.cells_per_axis as f64).powi(self.ambient.dim() as i32)
    }

    /// Closed closure of cell `idx`.
    pub fn closed_cell(&self, idx: &[usize]) -> Brick {
        let factors = idx
            .iter()
            .enumerate()
            .map(|(k, &j)| {
                Interval::closed(self.cuts[k][j].clone(), self.cuts[k][j + 1].clone()).unwrap()
            })
            .collect();
        Brick::new(factors).unwrap()
    }

    pub fn center(&self, idx: &[usize]) -> Point {
        idx.iter()
            .enumerate()
            .map(|(k, &j)| (&self.cuts[k][j] + &self.cuts[k][j + 1]) / Rat::from_integer(2.into()))
            .collect()
    }

    pub fn indices(&self) -> MultiIndex {
        MultiIndex::new(vec![self.cells_per_axis; self.ambient.dim()])
    }

    /// Visit the closure corners and the center of a cell.
    pub fn sample_points(&self, idx: &[usize]) -> Vec<Point> {
        let n = self.ambient.dim();
        let mut points = Vec::with_capacity((1 << n) + 1);
        for corner in MultiIndex::new(vec![2; n]) {
            let p: Point = corner
                .iter()
                .enumerate()
                .map(|(k, &side)| self.cuts[k][idx[k] + side].clone())
                .collect();
            points.push(p);
        }
        points.push(self.center(idx));
        points
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum CellClass {
    AllSatisfy,
    NoneSatisfy,
    Mixed,
}

fn classify_cell(grid: &DyadicGrid, idx: &[usize], member: &PointPredicate) -> CellClass {
    let mut any = false;
    let mut all = true;
    for p in grid.sample_points(idx) {
        if member.test(&p) {
            any = true;
        } else {
            all = false;
        }
        if any && !all {
            return CellClass::Mixed;
        }
    }
    if all {
        CellClass::AllSatisfy
    } else if any {
        CellClass::Mixed
    } else {
        CellClass::NoneSatisfy
    }
}

/// Inner/outer content estimates: the inner sum collects cells all of whose
/// sampled points satisfy the predicate, the outer sum collects cells with at
/// least one satisfying sample. Both are exact rational sums.
pub fn content_bounds(member: &PointPredicate, ambient: &Brick, depth: u32) -> ContentBounds {
    let grid = DyadicGrid::new(ambient, depth);
    let cell_vol = grid.cell_volume();
    let mut inner_cells = 0u64;
    let mut outer_cells = 0u64;
    for idx in grid.indices() {
        match classify_cell(&grid, &idx, member) {
            CellClass::AllSatisfy => {
                inner_cells += 1;
                outer_cells += 1;
            }
            CellClass::Mixed => outer_cells += 1,
            CellClass::NoneSatisfy => {}
        }
    }
    ContentBounds {
        inner: &cell_vol * Rat::from_integer(inner_cells.into()),
        outer: &cell_vol * Rat::from_integer(outer_cells.into()),
        depth,
    }
}

/// The dyadic cells at the given depth whose samples are mixed (some satisfy
/// the predicate, some do not): a cover of the sampled boundary.
pub fn boundary_cells(member: &PointPredicate, ambient: &Brick, depth: u32) -> ExceptionCover {
    let grid = DyadicGrid::new(ambient, depth);
    let mut bricks = Vec::new();
    for idx in grid.indices() {
        if classify_cell(&grid, &idx, member) == CellClass::Mixed {
            bricks.push(grid.closed_cell(&idx));
        }
    }
    ExceptionCover::new(bricks)
}

/// Input to `certify_null`: either finitely many points, or an existing
/// cover standing in for a set only known through it.
#[derive(Debug, Clone)]
pub enum NullInput {
    Points(Vec<Point>),
    Cover(ExceptionCover),
}

/// Result of a null-set certification attempt. Failure is a value: the
/// input cannot be certified below the requested volume.
#[derive(Debug, Clone)]
pub enum CertifyOutcome {
    Certified(ExceptionCover),
    CannotCertify { obstruction: Rat },
}

impl CertifyOutcome {
    pub fn is_certified(&self) -> bool {
        matches!(self, CertifyOutcome::Certified(_))
    }

    pub fn cover(&self) -> Option<&ExceptionCover> {
        match self {
            CertifyOutcome::Certified(c) => Some(c),
            CertifyOutcome::CannotCertify { .. } => None,
        }
    }
}

/// Try to produce a cover of total volume `< epsilon` containing the input.
///
/// Finitely many points are always certifiable: they are covered by small
/// dyadic cubes whose exact total volume stays below `epsilon`. A cover
/// input is certified exactly when the measure of its union is below
/// `epsilon` (the union is re-expressed as disjoint refinement cells); a set
/// known only through a cover cannot be shrunk below that measure.
pub fn certify_null(input: &NullInput, epsilon: &Rat) -> Result<CertifyOutcome, GeometryError> {
    if epsilon <= &Rat::zero() {
        return Ok(CertifyOutcome::CannotCertify { obstruction: Rat::zero() });
    }
    match input {
        NullInput::Points(points) => {
            if points.is_empty() {
                return Ok(CertifyOutcome::Certified(ExceptionCover::empty()));
            }
            let n = points[0].len().max(1);
            let count = Rat::from_integer(points.len().into());
            // Largest dyadic side 2^-j with count * side^n < epsilon.
            let mut side = Rat::new(1.into(), 2.into());
            loop {
                let total = &count * pow_usize(&side, n);
                if &total < epsilon {
                    break;
                }
                side /= Rat::from_integer(2.into());
            }
            let half = &side / Rat::from_integer(2.into());
            let bricks = points
                .iter()
                .map(|p| {
                    let bounds: Vec<(Rat, Rat)> =
                        p.iter().map(|x| (x - &half, x + &half)).collect();
                    Brick::closed_from_bounds(&bounds)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(CertifyOutcome::Certified(ExceptionCover::new(bricks)))
        }
        NullInput::Cover(cover) => {
            let measure = cover.union_measure()?;
            if &measure < epsilon {
                Ok(CertifyOutcome::Certified(cover.clone()))
            } else {
                Ok(CertifyOutcome::CannotCertify { obstruction: measure })
            }
        }
    }
}

fn pow_usize(r: &Rat, n: usize) -> Rat {
    let mut acc = Rat::from_integer(1.into());
    for _ in 0..n {
        acc *= r;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rint};

    fn unit_square() -> Brick {
        Brick::closed_from_bounds(&[(rint(0), rint(1)), (rint(0), rint(1))]).unwrap()
    }

    fn triangle() -> PointPredicate {
        PointPredicate::new(|x: &[Rat]| &x[0] + &x[1] <= rint(1))
    }

    #[test]
    fn full_predicate_is_exact() {
        let everything = PointPredicate::new(|_: &[Rat]| true);
        for depth in [1, 3, 5] {
            let b = content_bounds(&everything, &unit_square(), depth);
            assert_eq!(b.inner, rint(1));
            assert_eq!(b.outer, rint(1));
        }
        assert!(boundary_cells(&everything, &unit_square(), 4).is_empty());
    }

    #[test]
    fn triangle_bounds_bracket_half() {
        let b = content_bounds(&triangle(), &unit_square(), 8);
        assert!(b.inner <= rat(1, 2));
        assert!(b.outer >= rat(1, 2));
        assert!(b.gap() < rat(2, 100), "gap = {}", b.gap());
        // Oracle: the diagonal meets exactly the cells with i + j in
        // {255, 256} sample pattern; count boundary cells directly.
        let grid_cells = 1u64 << 16;
        let mixed = (boundary_cells(&triangle(), &unit_square(), 8)).len() as u64;
        assert_eq!(b.gap(), rat(mixed as i64, grid_cells as i64));
    }

    #[test]
    fn dense_sampled_predicate_has_full_outer() {
        // Every dyadic corner/center at depth k has denominator <= 2^(k+1),
        // so a denominator-bounded predicate looks dense to the sampler.
        let member = PointPredicate::new(|x: &[Rat]| {
            x.iter().all(|c| c.denom() <= &num_bigint::BigInt::from(1u64 << 12))
        });
        let b = content_bounds(&member, &unit_square(), 6);
        assert_eq!(b.outer, rint(1));
    }

    #[test]
    fn monotone_in_depth_on_tested_predicates() {
        let preds = [triangle(), PointPredicate::new(|x: &[Rat]| x[0] <= rat(3, 7))];
        for member in preds {
            let mut prev: Option<ContentBounds> = None;
            for depth in 1..=6 {
                let b = content_bounds(&member, &unit_square(), depth);
                assert!(b.inner <= b.outer);
                if let Some(p) = prev {
                    assert!(b.inner >= p.inner, "inner not nondecreasing at {depth}");
                    assert!(b.outer <= p.outer, "outer not nonincreasing at {depth}");
                }
                prev = Some(b);
            }
        }
    }

    #[test]
    fn aligned_brick_is_measured_exactly() {
        // [0,1/4] x [0,1/2] aligns with the dyadic grid at depth >= 2.
        let member = PointPredicate::new(|x: &[Rat]| {
            x[0] <= rat(1, 4) && x[1] <= rat(1, 2)
        });
        let b = content_bounds(&member, &unit_square(), 5);
        assert_eq!(b.inner, rat(1, 8));
        // Outer includes the sample-touching shell of cells.
        assert!(b.outer - b.inner <= rat(50, 1024));
    }

    #[test]
    fn brick_boundary_cover_shrinks() {
        let member = PointPredicate::new(|x: &[Rat]| {
            x[0] <= rat(1, 3) && x[1] <= rat(2, 3)
        });
        let mut prev = rint(2);
        for depth in [2, 4, 6] {
            let cover = boundary_cells(&member, &unit_square(), depth);
            assert!(cover.total_volume() < &prev);
            prev = cover.total_volume().clone();
        }
        let at6 = boundary_cells(&triangle(), &unit_square(), 6);
        assert!(at6.total_volume() < &rat(1, 10));
    }

    #[test]
    fn certify_points_succeeds() {
        let points: Vec<Point> = (0..10).map(|i| vec![rat(i, 10), rat(i, 13)]).collect();
        let out = certify_null(&NullInput::Points(points.clone()), &rat(1, 2)).unwrap();
        let cover = out.cover().expect("points are always certifiable");
        assert!(cover.total_volume() < &rat(1, 2));
        for p in &points {
            assert!(cover.contains_point(p));
        }
    }

    #[test]
    fn certify_cover_volume_obstruction() {
        let brick = Brick::closed_from_bounds(&[(rint(0), rat(1, 4))]).unwrap();
        let cover = ExceptionCover::new(vec![brick]);
        let out = certify_null(&NullInput::Cover(cover), &rat(1, 8)).unwrap();
        match out {
            CertifyOutcome::CannotCertify { obstruction } => assert_eq!(obstruction, rat(1, 4)),
            CertifyOutcome::Certified(_) => panic!("volume obstruction must fail"),
        }
    }

    #[test]
    fn union_measure_handles_overlap() {
        let a = Brick::closed_from_bounds(&[(rint(0), rat(1, 2))]).unwrap();
        let b = Brick::closed_from_bounds(&[(rat(1, 4), rat(3, 4))]).unwrap();
        let cover = ExceptionCover::new(vec![a, b]);
        assert_eq!(cover.total_volume(), &rint(1));
        assert_eq!(cover.union_measure().unwrap(), rat(3, 4));
    }
}
