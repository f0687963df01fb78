//! Executable fixtures: the fat Cantor set, the Riemann-but-not-K-integrable
//! oscillator built on it, the iterated-integration counterexample, Thomae's
//! function and its rotated sheet, and the indicator sequences used by the
//! convergence module.
//!
//! Fixtures evaluate exactly on rational points wherever the underlying
//! definition is arithmetic (interval location, rationality of a coordinate);
//! transcendental parts go through f64. Fixtures that know where their
//! pathology lives implement [`WitnessSource`] so cell sweeps can probe the
//! right points; the probing machinery still has to confirm the behavior by
//! sampling.

use crate::directional::WitnessSource;
use crate::geometry::Brick;
use crate::jordan::ExceptionCover;
use crate::oracle::{EvalError, PointOracle};
use crate::rational::{rat, rat_to_f64, rint, simplest_in_open, Point, Rat};
use crate::stepfn::StepFunction;
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::sync::Arc;

#[derive(Debug, Clone, thiserror::Error)]
pub enum GalleryError {
    #[error("unknown gallery fixture {0:?}")]
    UnknownFixture(String),
    #[error("bad parameter for fixture {fixture}: {message}")]
    BadParameter { fixture: String, message: String },
}

/// The open intervals removed in the fat Cantor construction, stage by
/// stage: stage `k` removes `2^(k-1)` middle intervals of length `4^-k`.
#[derive(Debug, Clone)]
pub struct RemovedIntervals {
    stages: Vec<Vec<(Rat, Rat)>>,
    remaining: Vec<(Rat, Rat)>,
}

impl RemovedIntervals {
    pub fn stages(&self) -> &[Vec<(Rat, Rat)>] {
        &self.stages
    }

    /// Exact total removed length: `(1/2)(1 - 2^-k)` after `k` stages.
    pub fn total_removed(&self) -> Rat {
        self.stages
            .iter()
            .flatten()
            .map(|(a, b)| b - a)
            .sum()
    }

    /// Stage-major, left-to-right enumeration `(n, a_n, b_n)`, `n` 1-based.
    pub fn enumerated(&self) -> Vec<(usize, Rat, Rat)> {
        let mut out = Vec::new();
        let mut n = 1;
        for stage in &self.stages {
            for (a, b) in stage {
                out.push((n, a.clone(), b.clone()));
                n += 1;
            }
        }
        out
    }

    /// The closed intervals remaining after all stages: the stage-k
    /// approximation of the fat Cantor set S.
    pub fn remaining(&self) -> &[(Rat, Rat)] {
        &self.remaining
    }

    /// The stage-k approximation of S as a brick cover. Any closed cover of
    /// the full endpoint set must contain these intervals, so this cover
    /// stands in for "the endpoint set" in null-certification experiments.
    pub fn closure_cover(&self) -> ExceptionCover {
        let bricks = self
            .remaining
            .iter()
            .map(|(a, b)| Brick::closed_from_bounds(&[(a.clone(), b.clone())]).unwrap())
            .collect();
        ExceptionCover::new(bricks)
    }

    /// All endpoints `a_n, b_n` in enumeration order.
    pub fn endpoints(&self) -> Vec<Rat> {
        let mut out = Vec::new();
        for stage in &self.stages {
            for (a, b) in stage {
                out.push(a.clone());
                out.push(b.clone());
            }
        }
        out
    }
}

/// Remove the open middle fourth of `[0,1]`, then middle `4^-k` pieces of
/// every remaining interval, for `k` stages. Exact rational endpoints.
pub fn fat_cantor(k: u32) -> RemovedIntervals {
    let mut remaining: Vec<(Rat, Rat)> = vec![(rint(0), rint(1))];
    let mut stages = Vec::with_capacity(k as usize);
    for stage in 1..=k {
        let len = crate::rational::pow2(-(2 * stage as i32)); // 4^-k
        let half = &len / rint(2);
        let mut removed = Vec::with_capacity(remaining.len());
        let mut next = Vec::with_capacity(remaining.len() * 2);
        for (lo, hi) in remaining {
            let mid = (&lo + &hi) / rint(2);
            let a = &mid - &half;
            let b = &mid + &half;
            removed.push((a.clone(), b.clone()));
            next.push((lo, a));
            next.push((b, hi));
        }
        stages.push(removed);
        remaining = next;
    }
    RemovedIntervals { stages, remaining }
}

/// The Riemann-integrable but not K-integrable oscillator: zero on the
/// stage-k fat Cantor approximation, and
/// `(1/n) (sin 1/(x - a_n) + sin 1/(b_n - x))` on the n-th removed interval.
#[derive(Debug, Clone)]
pub struct FatCantorOscillator {
    /// Removed intervals sorted by position: `(a_n, b_n, n)`.
    sorted: Vec<(Rat, Rat, usize)>,
    /// Endpoints in enumeration order (for witness lookup).
    endpoints_by_n: Vec<(usize, Rat)>,
    pub stages: u32,
}

impl FatCantorOscillator {
    pub fn new(stages: u32) -> Self {
        let removed = fat_cantor(stages);
        let mut sorted: Vec<(Rat, Rat, usize)> = removed
            .enumerated()
            .into_iter()
            .map(|(n, a, b)| (a, b, n))
            .collect();
        sorted.sort_by(|x, y| x.0.cmp(&y.0));
        let mut endpoints_by_n = Vec::new();
        for (n, a, b) in removed.enumerated() {
            endpoints_by_n.push((n, a));
            endpoints_by_n.push((n, b));
        }
        Self { sorted, endpoints_by_n, stages }
    }

    pub fn ambient() -> Brick {
        Brick::closed_from_bounds(&[(rint(0), rint(1))]).unwrap()
    }

    /// Locate `x` in a removed interval, if any (open containment).
    fn locate(&self, x: &Rat) -> Option<&(Rat, Rat, usize)> {
        let idx = self.sorted.partition_point(|(a, _, _)| a < x);
        // Candidate: the last interval with a_n < x.
        let cand = self.sorted.get(idx.checked_sub(1)?)?;
        (x < &cand.1).then_some(cand)
    }

    pub fn eval(&self, x: &Rat) -> f64 {
        match self.locate(x) {
            None => 0.0,
            Some((a, b, n)) => {
                let left = rat_to_f64(&(x - a));
                let right = rat_to_f64(&(b - x));
                ((1.0 / left).sin() + (1.0 / right).sin()) / *n as f64
            }
        }
    }

    pub fn oracle(&self) -> PointOracle {
        let f = self.clone();
        PointOracle::new(move |x: &[Rat]| {
            if x.len() != 1 {
                return Err(EvalError::new("fat Cantor oscillator is one-dimensional"));
            }
            Ok(f.eval(&x[0]))
        })
    }
}

impl WitnessSource for FatCantorOscillator {
    /// The removed-interval endpoint with the smallest index (largest
    /// oscillation amplitude) strictly inside the cell.
    fn witness_in(&self, cell: &Brick) -> Option<Point> {
        if cell.dim() != 1 {
            return None;
        }
        let f = cell.factor(0);
        self.endpoints_by_n
            .iter()
            .find(|(_, e)| e > f.lo() && e < f.hi() && e > &rint(0) && e < &rint(1))
            .map(|(_, e)| vec![e.clone()])
    }
}

/// The iterated-integration counterexample: `h(x,y) = 1` iff
/// `0 <= y <= f(x) + 2` on `[0,1] x [0,4]`, with `f` the fat Cantor
/// oscillator.
#[derive(Debug, Clone)]
pub struct FubiniFailure {
    pub f: FatCantorOscillator,
}

impl FubiniFailure {
    pub fn new(stages: u32) -> Self {
        Self { f: FatCantorOscillator::new(stages) }
    }

    pub fn ambient() -> Brick {
        Brick::closed_from_bounds(&[(rint(0), rint(1)), (rint(0), rint(4))]).unwrap()
    }

    pub fn eval(&self, x: &Rat, y: &Rat) -> f64 {
        if y < &rint(0) {
            return 0.0;
        }
        let cutoff = self.f.eval(x) + 2.0;
        if rat_to_f64(y) <= cutoff {
            1.0
        } else {
            0.0
        }
    }

    pub fn oracle(&self) -> PointOracle {
        let h = self.clone();
        PointOracle::new(move |p: &[Rat]| {
            if p.len() != 2 {
                return Err(EvalError::new("h fixture is two-dimensional"));
            }
            Ok(h.eval(&p[0], &p[1]))
        })
    }

    /// The outer integrand of the iterated integral: `x -> f(x) + 2`.
    pub fn outer_integrand(&self) -> PointOracle {
        let f = self.f.clone();
        PointOracle::new(move |x: &[Rat]| {
            if x.len() != 1 {
                return Err(EvalError::new("outer integrand is one-dimensional"));
            }
            Ok(f.eval(&x[0]) + 2.0)
        })
    }
}

/// Thomae's function on exact rational input: `1/q` at `p/q` in lowest terms
/// (`p != 0`), `0` at zero. Exact.
pub fn thomae_exact(x: &Rat) -> Rat {
    if x.numer().is_zero() {
        return Rat::zero();
    }
    Rat::new(BigInt::one(), x.denom().clone())
}

/// Rational-aware input: decimals cannot witness irrationality, so inputs are
/// either exact rationals or marked irrational.
#[derive(Debug, Clone)]
pub enum RationalAware {
    Exact(Rat),
    MarkedIrrational,
}

pub fn thomae_value(x: &RationalAware) -> Rat {
    match x {
        RationalAware::Exact(r) => thomae_exact(r),
        RationalAware::MarkedIrrational => Rat::zero(),
    }
}

/// Denominator-bounded detection for decimal input: `x` counts as rational
/// when its best approximation with denominator `<= max_den` sits within
/// `detection_tol`. Resolution-limited by construction.
pub fn thomae_from_decimal(x: f64, max_den: u64, detection_tol: f64) -> Rat {
    match crate::rational::best_approximation(x, max_den) {
        Some(approx) if (x - rat_to_f64(&approx)).abs() <= detection_tol => {
            thomae_exact(&approx)
        }
        _ => Rat::zero(),
    }
}

/// The K-integrable sheet `h(x,y) = H(x)` on the unit square: bounded, no
/// second-kind discontinuities (the pathology is axis-aligned, so every
/// directional limit exists).
#[derive(Debug, Clone, Default)]
pub struct ThomaeSheet;

impl ThomaeSheet {
    pub fn ambient() -> Brick {
        Brick::closed_from_bounds(&[(rint(0), rint(1)), (rint(0), rint(1))]).unwrap()
    }

    pub fn oracle(&self) -> PointOracle {
        PointOracle::new(|p: &[Rat]| {
            if p.len() != 2 {
                return Err(EvalError::new("thomae sheet is two-dimensional"));
            }
            Ok(rat_to_f64(&thomae_exact(&p[0])))
        })
    }
}

impl WitnessSource for ThomaeSheet {
    /// The lowest-denominator vertical rational line through the cell; the
    /// sheet's pathology is axis-aligned, so these probes classify as first
    /// kind (a deliberate contrast with the rotated sheet).
    fn witness_in(&self, cell: &Brick) -> Option<Point> {
        if cell.dim() != 2 {
            return None;
        }
        let fx = cell.factor(0);
        let x = simplest_in_open(fx.lo(), fx.hi())?;
        Some(vec![x, cell.factor(1).midpoint()])
    }
}

/// A rotation angle with exactly rational sine and cosine (a Pythagorean
/// triple), which keeps the inverse-rotation bookkeeping exact on rational
/// points.
#[derive(Debug, Clone, PartialEq)]
pub struct PythagoreanAngle {
    pub sin: Rat,
    pub cos: Rat,
}

impl PythagoreanAngle {
    /// Angle with `sin = a/c`, `cos = b/c` where `c^2 = a^2 + b^2` must be a
    /// perfect square. `(3,4)` gives the default angle `~36.87` degrees.
    pub fn from_legs(a: i64, b: i64) -> Result<Self, GalleryError> {
        if a <= 0 || b <= 0 {
            return Err(GalleryError::BadParameter {
                fixture: "rotated_thomae".into(),
                message: "legs must be positive".into(),
            });
        }
        let c2 = a * a + b * b;
        let c = (c2 as f64).sqrt().round() as i64;
        if c * c != c2 {
            return Err(GalleryError::BadParameter {
                fixture: "rotated_thomae".into(),
                message: format!("{a}^2 + {b}^2 = {c2} is not a perfect square"),
            });
        }
        Ok(Self { sin: rat(a, c), cos: rat(b, c) })
    }
}

impl Default for PythagoreanAngle {
    fn default() -> Self {
        Self::from_legs(3, 4).expect("3-4-5 is a Pythagorean triple")
    }
}

/// The rotated Thomae sheet: `H(u)` where `(u,v)` is the pre-image of the
/// input under the rotation, extended by zero outside the rotated unit
/// square. On rational input with a Pythagorean angle the pre-image is
/// exactly rational, so rationality of `u` is decided exactly.
#[derive(Debug, Clone)]
pub struct RotatedThomae {
    pub angle: PythagoreanAngle,
    ambient: Brick,
}

impl RotatedThomae {
    pub fn new(angle: PythagoreanAngle) -> Self {
        // The rotated unit square spans x in [-sin, cos], y in [0, sin+cos].
        let ambient = Brick::closed_from_bounds(&[
            (-&angle.sin, angle.cos.clone()),
            (rint(0), &angle.sin + &angle.cos),
        ])
        .unwrap();
        Self { angle, ambient }
    }

    pub fn ambient(&self) -> &Brick {
        &self.ambient
    }

    /// Rotate forward: domain point `(u, v)` to ambient coordinates.
    pub fn forward(&self, u: &Rat, v: &Rat) -> Point {
        vec![
            u * &self.angle.cos - v * &self.angle.sin,
            u * &self.angle.sin + v * &self.angle.cos,
        ]
    }

    /// Inverse rotation: ambient `(x, y)` to the pre-image `(u, v)`. Exact.
    pub fn preimage(&self, x: &Rat, y: &Rat) -> (Rat, Rat) {
        (
            x * &self.angle.cos + y * &self.angle.sin,
            y * &self.angle.cos - x * &self.angle.sin,
        )
    }

    pub fn eval(&self, x: &Rat, y: &Rat) -> Rat {
        let (u, v) = self.preimage(x, y);
        let zero = Rat::zero();
        let one = Rat::from_integer(1.into());
        if u < zero || u > one || v < zero || v > one {
            return Rat::zero();
        }
        thomae_exact(&u)
    }

    pub fn oracle(&self) -> PointOracle {
        let f = self.clone();
        PointOracle::new(move |p: &[Rat]| {
            if p.len() != 2 {
                return Err(EvalError::new("rotated thomae is two-dimensional"));
            }
            Ok(rat_to_f64(&f.eval(&p[0], &p[1])))
        })
    }

    /// Points on the rotated image of the line `u = p/q`, strictly inside
    /// both the domain square and the ambient brick.
    pub fn line_points(&self, u: &Rat, count: usize) -> Vec<Point> {
        let mut out = Vec::new();
        for j in 1..=count {
            let v = rat(2 * j as i64 - 1, 2 * count as i64);
            let p = self.forward(u, &v);
            if self.ambient.strictly_contains(&p) {
                out.push(p);
            }
        }
        out
    }

    /// Witness points on rotated rational lines with small denominators.
    pub fn canonical_witnesses(&self, max_den: i64, per_line: usize) -> Vec<Point> {
        let mut out = Vec::new();
        for q in 1..=max_den {
            for p in 1..=q {
                if num_integer::gcd(p, q) != 1 {
                    continue;
                }
                out.extend(self.line_points(&rat(p, q), per_line));
            }
        }
        out
    }
}

impl WitnessSource for RotatedThomae {
    /// A point of the cell lying exactly on the lowest-denominator rotated
    /// rational line crossing it.
    fn witness_in(&self, cell: &Brick) -> Option<Point> {
        if cell.dim() != 2 {
            return None;
        }
        let (fx, fy) = (cell.factor(0), cell.factor(1));
        // u = x cos + y sin is increasing in both coordinates.
        let (u_lo, _) = self.preimage(fx.lo(), fy.lo());
        let (u_hi, _) = self.preimage(fx.hi(), fy.hi());
        let u_min = u_lo.max(Rat::zero());
        let u_max = u_hi.min(rint(1));
        let u = simplest_in_open(&u_min, &u_max)?;
        // Line u = const inside the open cell: x(v) decreasing, y(v)
        // increasing in v.
        let v_from_x_hi = (&(&u * &self.angle.cos) - fx.hi()) / &self.angle.sin;
        let v_from_x_lo = (&(&u * &self.angle.cos) - fx.lo()) / &self.angle.sin;
        let v_from_y_lo = (fy.lo() - &(&u * &self.angle.sin)) / &self.angle.cos;
        let v_from_y_hi = (fy.hi() - &(&u * &self.angle.sin)) / &self.angle.cos;
        let v_lo = v_from_x_hi.max(v_from_y_lo).max(Rat::zero());
        let v_hi = v_from_x_lo.min(v_from_y_hi).min(rint(1));
        if v_lo >= v_hi {
            return None;
        }
        let v = (&v_lo + &v_hi) / rint(2);
        let p = self.forward(&u, &v);
        (cell.contains_point(&p) && self.ambient.strictly_contains(&p)).then_some(p)
    }
}

/// Fixed enumeration of the rationals in `[0,1]`: `0, 1`, then reduced
/// fractions by increasing denominator, numerators ascending. 1-based.
pub fn rational_in_unit_interval(m: usize) -> Rat {
    assert!(m >= 1, "enumeration is 1-based");
    match m {
        1 => return rint(0),
        2 => return rint(1),
        _ => {}
    }
    let mut seen = 2usize;
    let mut q = 2i64;
    loop {
        for p in 1..q {
            if num_integer::gcd(p, q) == 1 {
                seen += 1;
                if seen == m {
                    return rat(p, q);
                }
            }
        }
        q += 1;
    }
}

/// The Prop 2.6 witness: `g_m` is 1 exactly at the m-th rational of `[0,1]`
/// and 0 elsewhere (a degenerate-brick step function of integral zero).
pub fn rational_indicator(m: usize) -> StepFunction {
    let ambient = Brick::closed_from_bounds(&[(rint(0), rint(1))]).unwrap();
    let q = rational_in_unit_interval(m);
    let support = Brick::closed_from_bounds(&[(q.clone(), q)]).unwrap();
    StepFunction::indicator(ambient, support, rint(1)).unwrap()
}

/// The remark's witness: `g_m = chi_{[0, 1/m]}` on `[0,1]`, converging
/// nearly uniformly to zero.
pub fn shrinking_indicator(m: usize) -> StepFunction {
    assert!(m >= 1);
    let ambient = Brick::closed_from_bounds(&[(rint(0), rint(1))]).unwrap();
    let support = Brick::closed_from_bounds(&[(rint(0), rat(1, m as i64))]).unwrap();
    StepFunction::indicator(ambient, support, rint(1)).unwrap()
}

/// A fixture resolved from a gallery reference: oracle, geometry, and the
/// structural extras the decision machinery can use.
#[derive(Clone)]
pub struct Fixture {
    pub name: String,
    pub dimension: usize,
    pub ambient: Brick,
    pub oracle: PointOracle,
    pub witnesses: Option<Arc<dyn WitnessSource + Send + Sync>>,
    /// A bound `C` such that `|f| <= C` everywhere (all gallery fixtures are
    /// bounded).
    pub bound: Rat,
}

/// Resolve a gallery fixture by name with integer parameters.
///
/// Known names: `f_prop41c` (`k` stages, default 8), `h_fixture` (`k`),
/// `outer_h` (`k`; the iterated integral's outer integrand `f+2`),
/// `thomae`, `thomae_sheet`, `rotated_thomae` (`a`, `b` legs, default 3,4).
pub fn fixture(name: &str, params: &[(String, i64)]) -> Result<Fixture, GalleryError> {
    let get = |key: &str, default: i64| -> i64 {
        params
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| *v)
            .unwrap_or(default)
    };
    let stages = || -> Result<u32, GalleryError> {
        let k = get("k", 8);
        if !(1..=16).contains(&k) {
            return Err(GalleryError::BadParameter {
                fixture: name.to_string(),
                message: format!("stage count k={k} out of range 1..=16"),
            });
        }
        Ok(k as u32)
    };
    match name {
        "f_prop41c" => {
            let f = FatCantorOscillator::new(stages()?);
            Ok(Fixture {
                name: name.into(),
                dimension: 1,
                ambient: FatCantorOscillator::ambient(),
                oracle: f.oracle(),
                witnesses: Some(Arc::new(f)),
                bound: rint(2),
            })
        }
        "h_fixture" => {
            let h = FubiniFailure::new(stages()?);
            Ok(Fixture {
                name: name.into(),
                dimension: 2,
                ambient: FubiniFailure::ambient(),
                oracle: h.oracle(),
                witnesses: None,
                bound: rint(1),
            })
        }
        "outer_h" => {
            let h = FubiniFailure::new(stages()?);
            let f = h.f.clone();
            Ok(Fixture {
                name: name.into(),
                dimension: 1,
                ambient: FatCantorOscillator::ambient(),
                oracle: h.outer_integrand(),
                witnesses: Some(Arc::new(f)),
                bound: rint(4),
            })
        }
        "thomae" => Ok(Fixture {
            name: name.into(),
            dimension: 1,
            ambient: Brick::closed_from_bounds(&[(rint(0), rint(1))]).unwrap(),
            oracle: PointOracle::new(|x: &[Rat]| {
                if x.len() != 1 {
                    return Err(EvalError::new("thomae is one-dimensional"));
                }
                Ok(rat_to_f64(&thomae_exact(&x[0])))
            }),
            witnesses: None,
            bound: rint(1),
        }),
        "thomae_sheet" | "thomae-sheet" => {
            let sheet = ThomaeSheet;
            Ok(Fixture {
                name: "thomae_sheet".into(),
                dimension: 2,
                ambient: ThomaeSheet::ambient(),
                oracle: sheet.oracle(),
                witnesses: Some(Arc::new(sheet)),
                bound: rint(1),
            })
        }
        "rotated_thomae" => {
            let angle = PythagoreanAngle::from_legs(get("a", 3), get("b", 4))?;
            let f = RotatedThomae::new(angle);
            Ok(Fixture {
                name: name.into(),
                dimension: 2,
                ambient: f.ambient().clone(),
                oracle: f.oracle(),
                witnesses: Some(Arc::new(f)),
                bound: rint(1),
            })
        }
        other => Err(GalleryError::UnknownFixture(other.to_string())),
    }
}

/// Names accepted by [`fixture`], for CLI listings.
pub fn fixture_names() -> &'static [&'static str] {
    &[
        "f_prop41c",
        "h_fixture",
        "outer_h",
        "thomae",
        "thomae_sheet",
        "rotated_thomae",
    ]
}
