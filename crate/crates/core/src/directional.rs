//! Directional limits, discontinuity classification, and the finite
//! resolution K-integrability decision.
//!
//! A direction is a nonzero vector in `{-1,0,1}^n`; it selects the sub-brick
//! of points lying strictly on the given side of `x` per axis (or pinned to
//! `x_k` where the component is zero). Classification is a semi-decision
//! with explicit resolution parameters: limits are probed on shrinking
//! max-norm shells with a deterministic rational lattice plus seeded random
//! dyadic points. The lattice directions are rational, so structure aligned
//! with rational lines (the rotation counterexample) is visible to the
//! sampler; reports always carry the resolution used.

use crate::geometry::{max_norm_ball, Brick, GeometryError, Interval, MultiIndex};
use crate::jordan::ExceptionCover;
use crate::oracle::{random_point_in, seeded_rng, EvalError, PointOracle};
use crate::rational::{fmt_rat, pow2, Point, Rat};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum DirectionalError {
    #[error("direction must be a nonzero vector over {{-1,0,1}}")]
    InvalidDirection,
    #[error("direction has dimension {got}, expected {expected}")]
    DirectionDimension { got: usize, expected: usize },
    #[error("point must lie in the interior of the ambient brick")]
    NotInterior,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A nonzero vector in `{-1,0,1}^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Direction(Vec<i8>);

impl Direction {
    pub fn new(components: Vec<i8>) -> Result<Self, DirectionalError> {
        if components.is_empty()
            || components.iter().any(|c| !(-1..=1).contains(c))
            || components.iter().all(|&c| c == 0)
        {
            return Err(DirectionalError::InvalidDirection);
        }
        Ok(Self(components))
    }

    pub fn components(&self) -> &[i8] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// No zero components (the `{-1,1}^n` directions of strong derivatives).
    pub fn is_full(&self) -> bool {
        self.0.iter().all(|&c| c != 0)
    }

    /// All `3^n - 1` nonzero directions, quadrant (full) directions first.
    pub fn all(n: usize) -> Vec<Direction> {
        let mut out: Vec<Direction> = MultiIndex::new(vec![3; n])
            .filter_map(|idx| {
                let comps: Vec<i8> = idx.iter().map(|&i| i as i8 - 1).collect();
                Direction::new(comps).ok()
            })
            .collect();
        out.sort_by_key(|d| d.0.iter().filter(|&&c| c == 0).count());
        out
    }

    /// The `2^n` directions without zero components.
    pub fn full_directions(n: usize) -> Vec<Direction> {
        MultiIndex::new(vec![2; n])
            .map(|idx| {
                let comps: Vec<i8> = idx.iter().map(|&i| if i == 0 { -1 } else { 1 }).collect();
                Direction::new(comps).expect("nonzero by construction")
            })
            .collect()
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c:+}")?;
        }
        write!(f, ")")
    }
}

/// The sub-brick `T_{x,alpha}`: per axis `[a_k, x_k)`, `{x_k}` or `(x_k, b_k]`
/// according to the direction component. The `3^n - 1` sub-bricks together
/// with `{x}` partition the ambient brick pointwise.
pub fn subbrick(ambient: &Brick, x: &[Rat], alpha: &Direction) -> Result<Brick, DirectionalError> {
    if alpha.dim() != ambient.dim() {
        return Err(DirectionalError::DirectionDimension {
            got: alpha.dim(),
            expected: ambient.dim(),
        });
    }
    if !ambient.strictly_contains(x) {
        return Err(DirectionalError::NotInterior);
    }
    let factors = ambient
        .factors()
        .iter()
        .zip(x)
        .zip(alpha.components())
        .map(|((f, xi), &c)| match c {
            -1 => Interval::new(f.lo().clone(), xi.clone(), f.lo_closed(), false),
            0 => Ok(Interval::point(xi.clone())),
            _ => Interval::new(xi.clone(), f.hi().clone(), false, f.hi_closed()),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Brick::new(factors)?)
}

/// Resolution parameters for directional probing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// Strictly decreasing max-norm shell radii.
    #[serde(with = "radii_serde")]
    pub radii: Vec<Rat>,
    /// Interior lattice points per nondegenerate axis (denominator
    /// `lattice + 1`).
    pub lattice: usize,
    /// Seeded random dyadic points per shell.
    pub random_samples: usize,
    /// Oscillation / Cauchy tolerance.
    pub tol: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            radii: (3..=12).map(|k| pow2(-k)).collect(),
            lattice: 6,
            random_samples: 16,
            tol: 1e-3,
            seed: 0xB51C,
        }
    }
}

impl ProbeConfig {
    /// A cheaper schedule for cell sweeps: three shells ending at the same
    /// finest radius as the default.
    pub fn sweep() -> Self {
        Self { radii: vec![pow2(-6), pow2(-9), pow2(-12)], ..Self::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_radii(mut self, radii: Vec<Rat>) -> Self {
        self.radii = radii;
        self
    }
}

mod radii_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rat], s: S) -> Result<S::Ok, S::Error> {
        let strings: Vec<String> = v.iter().map(fmt_rat).collect();
        serde::Serialize::serialize(&strings, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rat>, D::Error> {
        let strings = <Vec<String> as serde::Deserialize>::deserialize(d)?;
        strings
            .iter()
            .map(|t| crate::rational::parse_rat(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Sampled statistics on one shell.
#[derive(Debug, Clone, Serialize)]
pub struct ShellStats {
    pub radius: String,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub samples: usize,
}

impl ShellStats {
    pub fn oscillation(&self) -> f64 {
        self.max - self.min
    }
}

/// Result of probing one directional limit.
#[derive(Debug, Clone, Serialize)]
pub struct DirectionalLimitReport {
    pub direction: Direction,
    pub per_radius: Vec<ShellStats>,
    pub outcome: LimitOutcome,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind")]
pub enum LimitOutcome {
    /// Final-shell oscillation below tolerance and final estimates Cauchy.
    Limit { value: f64, oscillation: f64 },
    /// Oscillation failed to shrink along the radius schedule.
    NoLimit { oscillation: f64 },
}

impl LimitOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            LimitOutcome::Limit { value, .. } => Some(*value),
            LimitOutcome::NoLimit { .. } => None,
        }
    }
}

/// Deterministic lattice + seeded random sample of a brick piece. Lattice
/// coordinates sit at `lo + len * j/(D+1)`; degenerate factors stay pinned.
fn sample_points(piece: &Brick, cfg: &ProbeConfig, rng: &mut impl rand::Rng) -> Vec<Point> {
    let open_axes: Vec<usize> = (0..piece.dim())
        .filter(|&k| !piece.factor(k).is_degenerate())
        .collect();
    let denom = Rat::from_integer(((cfg.lattice + 1) as i64).into());
    let mut points = Vec::new();
    for combo in MultiIndex::new(vec![cfg.lattice; open_axes.len()]) {
        let mut p: Point = piece.factors().iter().map(|f| f.lo().clone()).collect();
        for (slot, &axis) in open_axes.iter().enumerate() {
            let f = piece.factor(axis);
            let j = Rat::from_integer(((combo[slot] + 1) as i64).into());
            p[axis] = f.lo() + f.length() * j / &denom;
        }
        points.push(p);
    }
    for _ in 0..cfg.random_samples {
        points.push(random_point_in(piece, rng));
    }
    points
}

/// Probe the limit of `f` at `x` in direction `alpha` along shrinking shells.
pub fn directional_limit(
    f: &PointOracle,
    ambient: &Brick,
    x: &[Rat],
    alpha: &Direction,
    cfg: &ProbeConfig,
) -> Result<DirectionalLimitReport, DirectionalError> {
    let piece_full = subbrick(ambient, x, alpha)?;
    let mut rng = seeded_rng(cfg.seed);
    let mut per_radius = Vec::with_capacity(cfg.radii.len());
    for r in &cfg.radii {
        let ball = max_norm_ball(x, r, ambient)?;
        let piece = match piece_full.intersect(&ball)? {
            Some(p) => p,
            None => continue,
        };
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        let mut count = 0usize;
        for p in sample_points(&piece, cfg, &mut rng) {
            // Skip the tag point itself: the limit ignores the value at x.
            if p == x {
                continue;
            }
            let v = match f.eval(&p) {
                Ok(v) => v,
                // Isolated oracle failures (e.g. a pole on the shell) count
                // as missing samples, not as evidence.
                Err(_) => continue,
            };
            min = min.min(v);
            max = max.max(v);
            sum += v;
            count += 1;
        }
        if count == 0 {
            continue;
        }
        per_radius.push(ShellStats {
            radius: fmt_rat(r),
            mean: sum / count as f64,
            min,
            max,
            samples: count,
        });
    }
    let outcome = judge(&per_radius, cfg.tol);
    Ok(DirectionalLimitReport { direction: alpha.clone(), per_radius, outcome })
}

fn judge(per_radius: &[ShellStats], tol: f64) -> LimitOutcome {
    match per_radius {
        [] => LimitOutcome::Limit { value: 0.0, oscillation: 0.0 },
        [only] => {
            if only.oscillation() < tol {
                LimitOutcome::Limit { value: only.mean, oscillation: only.oscillation() }
            } else {
                LimitOutcome::NoLimit { oscillation: only.oscillation() }
            }
        }
        [.., prev, last] => {
            // When a limit exists, the mean over a smaller shell cannot
            // drift further than the larger shell's value spread; allow a
            // factor of two for sampled extremes underestimating the range.
            let drift_allowance = tol.max(2.0 * prev.oscillation());
            if last.oscillation() < tol && (last.mean - prev.mean).abs() < drift_allowance {
                LimitOutcome::Limit { value: last.mean, oscillation: last.oscillation() }
            } else {
                LimitOutcome::NoLimit { oscillation: last.oscillation() }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kind {
    Continuous,
    FirstKind,
    SecondKindSuspect,
    Undetermined,
}

/// Aggregated per-point classification.
#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub kind: Kind,
    pub value_at_point: Option<f64>,
    pub per_direction: Vec<DirectionalLimitReport>,
    pub tol: f64,
}

/// Classify an interior point by probing all `3^n - 1` directional limits.
/// Stops at the first direction whose oscillation refuses to shrink (the
/// kind is already determined at that point).
pub fn classify(
    f: &PointOracle,
    ambient: &Brick,
    x: &[Rat],
    cfg: &ProbeConfig,
) -> Result<Classification, DirectionalError> {
    let value_at_point = f.eval(x).ok();
    let mut per_direction = Vec::new();
    let mut any_no_limit = false;
    for alpha in Direction::all(ambient.dim()) {
        let report = directional_limit(f, ambient, x, &alpha, cfg)?;
        let no_limit = matches!(report.outcome, LimitOutcome::NoLimit { .. });
        per_direction.push(report);
        if no_limit {
            any_no_limit = true;
            break;
        }
    }
    let kind = if any_no_limit {
        Kind::SecondKindSuspect
    } else {
        match value_at_point {
            None => Kind::Undetermined,
            Some(v) => {
                let all_match = per_direction.iter().all(|r| {
                    r.outcome
                        .value()
                        .map(|lim| (lim - v).abs() < cfg.tol)
                        .unwrap_or(false)
                });
                if all_match {
                    Kind::Continuous
                } else {
                    Kind::FirstKind
                }
            }
        }
    };
    Ok(Classification { kind, value_at_point, per_direction, tol: cfg.tol })
}

/// Structure-supplied probe points: a gallery fixture (or a user) may know
/// where its pathology lives. `dis2_cover` probes one witness per cell in
/// addition to the cell center when a source is given.
pub trait WitnessSource: Sync {
    /// A known-suspicious point strictly inside `cell` (and strictly inside
    /// the ambient brick), if the structure supplies one.
    fn witness_in(&self, cell: &Brick) -> Option<Point>;
}

/// Cells at the given dyadic depth containing a probe point classified
/// `SecondKindSuspect`; the exact total volume comes with the cover.
pub fn dis2_cover(
    f: &PointOracle,
    ambient: &Brick,
    depth: u32,
    cfg: &ProbeConfig,
    witnesses: Option<&dyn WitnessSource>,
) -> Result<Dis2Report, DirectionalError> {
    let grid = crate::jordan::DyadicGrid::new(ambient, depth);
    let mut flagged = Vec::new();
    let mut suspect_probes = Vec::new();
    for idx in grid.indices() {
        let cell = grid.closed_cell(&idx);
        let mut probes: Vec<Point> = vec![grid.center(&idx)];
        if let Some(src) = witnesses {
            if let Some(w) = src.witness_in(&cell) {
                if ambient.strictly_contains(&w) && cell.contains_point(&w) {
                    probes.push(w);
                }
            }
        }
        let mut suspect = false;
        for p in probes {
            if !ambient.strictly_contains(&p) {
                continue;
            }
            let c = classify(f, ambient, &p, cfg)?;
            if c.kind == Kind::SecondKindSuspect {
                suspect_probes.push(p);
                suspect = true;
                break;
            }
        }
        if suspect {
            flagged.push(cell);
        }
    }
    Ok(Dis2Report { cover: ExceptionCover::new(flagged), suspect_probes, depth })
}

#[derive(Debug, Clone)]
pub struct Dis2Report {
    pub cover: ExceptionCover,
    /// The probe points that triggered each flagged cell.
    pub suspect_probes: Vec<Point>,
    pub depth: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    LikelyIntegrable,
    NotIntegrableEvidence,
    Undetermined,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntegrabilityReport {
    pub verdict: Verdict,
    /// (depth, exact dis2-cover volume) along the schedule.
    pub dis2_volumes: Vec<(u32, String)>,
    /// (depth, exact volume of cells whose center violates the bound).
    pub unbounded_volumes: Vec<(u32, String)>,
    pub evidence_floor: String,
    #[serde(skip)]
    pub suspect_probes: Vec<Point>,
}

/// Finite-resolution Theorem 3.3 check: `likely integrable` needs the
/// sampled second-kind cover volumes to shrink toward zero and `|f| <= C`
/// off them; persistent cover volume above the floor (or persistent bound
/// violations) is evidence of non-integrability. Anything else stays
/// undetermined.
pub fn decide_k_integrability(
    f: &PointOracle,
    ambient: &Brick,
    depth_schedule: &[u32],
    bound: &Rat,
    cfg: &ProbeConfig,
    witnesses: Option<&dyn WitnessSource>,
) -> Result<IntegrabilityReport, DirectionalError> {
    let floor = Rat::new(1.into(), 20.into());
    let mut dis2_volumes = Vec::new();
    let mut unbounded_volumes = Vec::new();
    let mut volumes = Vec::new();
    let mut bound_vols = Vec::new();
    let mut suspect_probes = Vec::new();
    for &depth in depth_schedule {
        let report = dis2_cover(f, ambient, depth, cfg, witnesses)?;
        let grid = crate::jordan::DyadicGrid::new(ambient, depth);
        let cell_vol = grid.cell_volume();
        let mut violations = 0u64;
        for idx in grid.indices() {
            let center = grid.center(&idx);
            if report.cover.contains_point(&center) {
                continue;
            }
            if let Ok(v) = f.eval(&center) {
                let v_abs = v.abs();
                if v_abs.is_finite() {
                    if crate::rational::rat_from_f64(v_abs)
                        .map(|r| r > *bound)
                        .unwrap_or(true)
                    {
                        violations += 1;
                    }
                } else {
                    violations += 1;
                }
            }
        }
        let unbounded = &cell_vol * Rat::from_integer(violations.into());
        dis2_volumes.push((depth, fmt_rat(report.cover.total_volume())));
        unbounded_volumes.push((depth, fmt_rat(&unbounded)));
        volumes.push(report.cover.total_volume().clone());
        bound_vols.push(unbounded);
        suspect_probes.extend(report.suspect_probes);
    }
    let all_above = |vs: &[Rat]| vs.iter().all(|v| v >= &floor);
    let shrinking = |vs: &[Rat]| {
        vs.last().map(|last| last < &floor).unwrap_or(true)
            && vs.windows(2).all(|w| w[1] <= w[0] || w[1] < floor)
    };
    let verdict = if all_above(&volumes) || all_above(&bound_vols) {
        Verdict::NotIntegrableEvidence
    } else if shrinking(&volumes) && shrinking(&bound_vols) {
        Verdict::LikelyIntegrable
    } else {
        Verdict::Undetermined
    };
    Ok(IntegrabilityReport {
        verdict,
        dis2_volumes,
        unbounded_volumes,
        evidence_floor: fmt_rat(&floor),
        suspect_probes,
    })
}

/// Directional-modulus limit estimation for the sufficiency construction:
/// find a radius whose shell oscillation stays below `eps` and return the
/// limit estimate with that radius. Fails when no tested radius works.
pub fn modulus_estimate(
    f: &PointOracle,
    ambient: &Brick,
    x: &[Rat],
    alpha: &Direction,
    eps: f64,
    cfg: &ProbeConfig,
) -> Result<(f64, Rat), EstimateError> {
    let piece_full =
        subbrick(ambient, x, alpha).map_err(|e| EstimateError::Geometry(e.to_string()))?;
    oscillation_radius(f, ambient, x, &piece_full, eps, cfg)
}

/// The sub-brick selected by a direction at a point allowed to sit on the
/// ambient boundary: factors that would be empty make the whole piece empty
/// (`None`). Interior points recover the plain [`subbrick`].
pub fn subbrick_clipped(ambient: &Brick, x: &[Rat], alpha: &Direction) -> Option<Brick> {
    if alpha.dim() != ambient.dim() || !ambient.contains_point(x) {
        return None;
    }
    let mut factors = Vec::with_capacity(ambient.dim());
    for ((f, xi), &c) in ambient.factors().iter().zip(x).zip(alpha.components()) {
        let piece = match c {
            -1 => Interval::new(f.lo().clone(), xi.clone(), f.lo_closed(), false),
            0 => Ok(Interval::point(xi.clone())),
            _ => Interval::new(xi.clone(), f.hi().clone(), false, f.hi_closed()),
        };
        match piece {
            Ok(p) => factors.push(p),
            Err(_) => return None,
        }
    }
    Brick::new(factors).ok()
}

/// Search the radius schedule, largest first, for a shell of `piece_full`
/// around `x` whose sampled oscillation stays below `eps`; return the mean
/// there together with the radius.
pub fn oscillation_radius(
    f: &PointOracle,
    ambient: &Brick,
    x: &[Rat],
    piece_full: &Brick,
    eps: f64,
    cfg: &ProbeConfig,
) -> Result<(f64, Rat), EstimateError> {
    let mut rng = seeded_rng(cfg.seed);
    for r in &cfg.radii {
        let ball = max_norm_ball(x, r, ambient)
            .map_err(|e| EstimateError::Geometry(e.to_string()))?;
        let piece = match piece_full.intersect(&ball) {
            Ok(Some(p)) => p,
            Ok(None) => continue,
            Err(e) => return Err(EstimateError::Geometry(e.to_string())),
        };
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        let mut count = 0usize;
        for p in sample_points(&piece, cfg, &mut rng) {
            if p == x {
                continue;
            }
            let v = f.eval(&p).map_err(|e| EstimateError::Oracle(e.to_string()))?;
            min = min.min(v);
            max = max.max(v);
            sum += v;
            count += 1;
        }
        if count == 0 {
            continue;
        }
        if max - min < eps {
            return Ok((sum / count as f64, r.clone()));
        }
    }
    Err(EstimateError::NoStableRadius { piece: piece_full.to_string(), eps })
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum EstimateError {
    #[error("no tested radius brings the oscillation below {eps} on {piece}")]
    NoStableRadius { piece: String, eps: f64 },
    #[error("oracle failure: {0}")]
    Oracle(String),
    #[error("geometry failure: {0}")]
    Geometry(String),
}

impl From<EvalError> for EstimateError {
    fn from(e: EvalError) -> Self {
        EstimateError::Oracle(e.to_string())
    }
}
