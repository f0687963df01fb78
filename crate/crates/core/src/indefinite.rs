//! Indefinite integrals as set functions on closed sub-bricks, strong
//! derivatives (full and directional), reconstruction of the integrand from
//! the set function, and the four-property report behind the
//! characterization of indefinite integrals.
//!
//! The family of closed sub-bricks is never materialized; it is the implicit
//! domain of a set oracle. Derivative probing draws random sub-bricks of the
//! shrinking ball *including deliberately skewed aspect ratios and bricks
//! not containing the base point*: strong differentiability quantifies over
//! all bricks in the ball, and cube-only probing would falsely report
//! stability.

use crate::directional::{subbrick_clipped, Direction};
use crate::geometry::{Brick, GeometryError, Interval};
use crate::integrator::{midpoint_integral, IntegrandSpec, IntegrateError, Precision};
use crate::jordan::ExceptionCover;
use crate::oracle::{random_unit_dyadic, seeded_rng};
use rand::Rng;
use crate::rational::{fmt_rat, pow2, rat_to_f64, Point, Rat};
use num_traits::Zero;
use serde::Serialize;
use std::sync::Arc;

#[derive(Debug, Clone, thiserror::Error)]
pub enum IndefiniteError {
    #[error("the queried brick is not a closed sub-brick of the ambient brick")]
    NotSubBrick,
    #[error("directional strong derivatives need directions without zero components")]
    ZeroComponentDirection,
    #[error("point must lie in the interior of the ambient brick")]
    NotInterior,
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A set-function value with its error bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PsiValue {
    pub value: f64,
    pub error_bound: f64,
}

#[derive(Clone)]
enum PsiSource {
    Integrand { spec: IntegrandSpec, mesh: usize, precision: Precision },
    SetOracle { f: Arc<dyn Fn(&Brick) -> f64 + Send + Sync>, error: f64 },
}

/// The indefinite integral `S -> integral of f over S` on closed sub-bricks
/// of the ambient brick, backed either by an integrand (sampled integration
/// per query) or by a direct set oracle.
#[derive(Clone)]
pub struct IndefiniteIntegral {
    ambient: Brick,
    source: PsiSource,
}

impl std::fmt::Debug for IndefiniteIntegral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "IndefiniteIntegral on {}", self.ambient)
    }
}

impl IndefiniteIntegral {
    pub fn from_integrand(spec: IntegrandSpec, mesh: usize, precision: Precision) -> Self {
        let ambient = spec.ambient.clone();
        Self { ambient, source: PsiSource::Integrand { spec, mesh, precision } }
    }

    /// Direct set oracle with a uniform per-query error bound.
    pub fn from_set_oracle(
        ambient: Brick,
        error: f64,
        f: impl Fn(&Brick) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { ambient, source: PsiSource::SetOracle { f: Arc::new(f), error } }
    }

    pub fn ambient(&self) -> &Brick {
        &self.ambient
    }

    /// `Psi(S)` with an error bound. Degenerate bricks integrate to zero.
    pub fn value(&self, s: &Brick) -> Result<PsiValue, IndefiniteError> {
        let closed = s
            .factors()
            .iter()
            .all(|f| f.lo_closed() && f.hi_closed());
        if !closed || !s.is_subset_of(&self.ambient.closure()) {
            return Err(IndefiniteError::NotSubBrick);
        }
        if s.volume().is_zero() {
            return Ok(PsiValue { value: 0.0, error_bound: 0.0 });
        }
        match &self.source {
            PsiSource::Integrand { spec, mesh, precision } => {
                let restricted = spec.restricted_to(s)?;
                let coarse = midpoint_integral(&restricted, (mesh / 2).max(1), precision)?;
                let fine = midpoint_integral(&restricted, *mesh, precision)?;
                let gap = rat_to_f64(&(&fine - &coarse)).abs();
                Ok(PsiValue { value: rat_to_f64(&fine), error_bound: gap + 1e-12 })
            }
            PsiSource::SetOracle { f, error } => {
                Ok(PsiValue { value: f(s), error_bound: *error })
            }
        }
    }
}

/// `Psi(S) = integral of f over S` for a closed sub-brick: the indefinite
/// integral of an integrand queried once.
pub fn psi(
    f: &IntegrandSpec,
    s: &Brick,
    mesh: usize,
    precision: &Precision,
) -> Result<PsiValue, IndefiniteError> {
    IndefiniteIntegral::from_integrand(f.clone(), mesh, precision.clone()).value(s)
}

/// Resolution parameters for derivative probing.
#[derive(Debug, Clone)]
pub struct DerivConfig {
    /// Strictly decreasing ball radii.
    pub radii: Vec<Rat>,
    /// Random sub-bricks per radius (on top of the structured probes).
    pub probes: usize,
    /// Spread tolerance at the final radius.
    pub tol: f64,
    /// Largest aspect-ratio exponent: extents down to `radius * 2^-max_skew`.
    pub max_skew: u32,
    pub seed: u64,
}

impl Default for DerivConfig {
    fn default() -> Self {
        Self {
            radii: (3..=10).map(|k| pow2(-k)).collect(),
            probes: 24,
            tol: 1e-2,
            max_skew: 8,
            seed: 0xDE1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stability {
    Stable,
    Unstable,
}

/// A strong-derivative estimate: the mean ratio at the final radius, the
/// spread of ratios observed there, and whether that spread beat the
/// tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct DerivativeEstimate {
    pub value: f64,
    pub radius_used: String,
    pub spread: f64,
    pub status: Stability,
    /// (radius, min ratio, max ratio) per shell.
    pub per_radius: Vec<(String, f64, f64)>,
}

impl DerivativeEstimate {
    pub fn is_stable(&self) -> bool {
        self.status == Stability::Stable
    }
}

/// Random closed sub-brick of `ball(u, r) (cap region)` with skewed extents;
/// `region` restricts to a closed orthant piece for directional probing.
fn random_probe_brick(
    region: &Brick,
    rng: &mut impl rand::Rng,
    max_skew: u32,
    force_skew: Option<(u32, u32)>,
) -> Option<Brick> {
    let mut factors = Vec::with_capacity(region.dim());
    for (k, f) in region.factors().iter().enumerate() {
        if f.is_degenerate() {
            return None;
        }
        let len = f.length();
        let skew = match force_skew {
            Some((lo, hi)) => {
                if k % 2 == 0 {
                    lo
                } else {
                    hi
                }
            }
            None => rng.gen_range(0..=max_skew),
        };
        // Extent between len * 2^-(skew+1) and len * 2^-skew.
        let base = len.clone() * pow2(-(skew as i32 + 1));
        let extent = &base + &base * random_unit_dyadic(rng) / Rat::from_integer(2.into());
        let slack = &len - &extent;
        if slack <= Rat::zero() {
            return None;
        }
        let offset = &slack * random_unit_dyadic(rng);
        let lo = f.lo() + offset;
        let hi = &lo + &extent;
        factors.push(Interval::closed(lo, hi).ok()?);
    }
    Brick::new(factors).ok()
}

/// The closed probing region `closure(ball(u,r)) cap T`, shrunk slightly so
/// closed probe bricks stay inside the open ball.
fn probe_region(
    ambient: &Brick,
    u: &[Rat],
    r: &Rat,
) -> Result<Brick, IndefiniteError> {
    let shrink = r * Rat::new(15.into(), 16.into());
    let factors = ambient
        .factors()
        .iter()
        .zip(u)
        .map(|(f, ui)| {
            let lo = (ui - &shrink).max(f.lo().clone());
            let hi = (ui + &shrink).min(f.hi().clone());
            Interval::closed(lo, hi)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(IndefiniteError::Geometry)?;
    Ok(Brick::new(factors).map_err(IndefiniteError::Geometry)?)
}

fn ratios_on_region(
    psi: &IndefiniteIntegral,
    region: &Brick,
    cfg: &DerivConfig,
    rng: &mut impl rand::Rng,
) -> Result<Vec<f64>, IndefiniteError> {
    let mut ratios = Vec::new();
    let mut structured: Vec<Option<(u32, u32)>> =
        vec![Some((0, 0)), Some((0, cfg.max_skew)), Some((cfg.max_skew, 0))];
    structured.extend(std::iter::repeat(None).take(cfg.probes));
    for force in structured {
        let Some(probe) = random_probe_brick(region, rng, cfg.max_skew, force) else {
            continue;
        };
        if probe.volume().is_zero() {
            continue;
        }
        let v = psi.value(&probe)?;
        ratios.push(v.value / rat_to_f64(&probe.volume()));
    }
    Ok(ratios)
}

fn estimate_from_shells(
    shells: Vec<(Rat, Vec<f64>)>,
    tol: f64,
) -> DerivativeEstimate {
    let per_radius: Vec<(String, f64, f64)> = shells
        .iter()
        .map(|(r, ratios)| {
            let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (fmt_rat(r), min, max)
        })
        .collect();
    match shells.last() {
        None => DerivativeEstimate {
            value: 0.0,
            radius_used: "0".into(),
            spread: f64::INFINITY,
            status: Stability::Unstable,
            per_radius,
        },
        Some((r, ratios)) => {
            let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
            let spread = max - min;
            DerivativeEstimate {
                value: mean,
                radius_used: fmt_rat(r),
                spread,
                status: if spread < tol { Stability::Stable } else { Stability::Unstable },
                per_radius,
            }
        }
    }
}

/// Probe `Psi(S)/lambda(S)` over random positive-volume sub-bricks of the
/// shrinking ball around `u` (skewed shapes included, bricks need not
/// contain `u`); stable when the final-radius spread stays below the
/// tolerance.
pub fn strong_derivative(
    psi: &IndefiniteIntegral,
    u: &[Rat],
    cfg: &DerivConfig,
) -> Result<DerivativeEstimate, IndefiniteError> {
    if !psi.ambient().strictly_contains(u) {
        return Err(IndefiniteError::NotInterior);
    }
    let mut rng = seeded_rng(cfg.seed);
    let mut shells = Vec::new();
    for r in &cfg.radii {
        let region = probe_region(psi.ambient(), u, r)?;
        let ratios = ratios_on_region(psi, &region, cfg, &mut rng)?;
        if !ratios.is_empty() {
            shells.push((r.clone(), ratios));
        }
    }
    Ok(estimate_from_shells(shells, cfg.tol))
}

/// As [`strong_derivative`] but with probes drawn inside
/// `closure(T_{u,alpha})`; the direction must have no zero components (other
/// directions select zero-volume sub-bricks).
pub fn directional_strong_derivative(
    psi: &IndefiniteIntegral,
    u: &[Rat],
    alpha: &Direction,
    cfg: &DerivConfig,
) -> Result<DerivativeEstimate, IndefiniteError> {
    if !alpha.is_full() {
        return Err(IndefiniteError::ZeroComponentDirection);
    }
    if !psi.ambient().strictly_contains(u) {
        return Err(IndefiniteError::NotInterior);
    }
    let closed = psi.ambient().closure();
    let orthant = subbrick_clipped(&closed, u, alpha)
        .ok_or(IndefiniteError::NotInterior)?
        .closure();
    let mut rng = seeded_rng(cfg.seed ^ 0xA1FA);
    let mut shells = Vec::new();
    for r in &cfg.radii {
        let ball = probe_region(psi.ambient(), u, r)?;
        let region = match ball.intersect(&orthant)? {
            Some(region) => region,
            None => continue,
        };
        let ratios = ratios_on_region(psi, &region, cfg, &mut rng)?;
        if !ratios.is_empty() {
            shells.push((r.clone(), ratios));
        }
    }
    Ok(estimate_from_shells(shells, cfg.tol))
}

/// Outcome of reconstructing `f(x)` from the set function via the
/// shrinking-ball supremum formula.
#[derive(Debug, Clone, Serialize)]
pub enum ReconstructOutcome {
    Value { value: f64, per_radius_sup: Vec<(String, f64)> },
    Divergence { per_radius_sup: Vec<(String, f64)> },
}

impl ReconstructOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            ReconstructOutcome::Value { value, .. } => Some(*value),
            ReconstructOutcome::Divergence { .. } => None,
        }
    }
}

/// `f(x) = lim sup {Psi(S)/lambda(S) : S in ball(x, r)}` approximated by a
/// finite max over probes per radius; the finite max under-estimates the
/// supremum (one-sided error). Returns the limit when the sup sequence is
/// Cauchy at the final two radii.
pub fn reconstruct(
    psi: &IndefiniteIntegral,
    x: &[Rat],
    cfg: &DerivConfig,
) -> Result<ReconstructOutcome, IndefiniteError> {
    if !psi.ambient().strictly_contains(x) {
        return Err(IndefiniteError::NotInterior);
    }
    let mut rng = seeded_rng(cfg.seed ^ 0x5C0);
    let mut sups: Vec<(Rat, f64)> = Vec::new();
    for r in &cfg.radii {
        let region = probe_region(psi.ambient(), x, r)?;
        let ratios = ratios_on_region(psi, &region, cfg, &mut rng)?;
        if let Some(sup) = ratios.iter().cloned().reduce(f64::max) {
            sups.push((r.clone(), sup));
        }
    }
    let per_radius_sup: Vec<(String, f64)> =
        sups.iter().map(|(r, s)| (fmt_rat(r), *s)).collect();
    match sups.as_slice() {
        [] => Ok(ReconstructOutcome::Divergence { per_radius_sup }),
        [single] => Ok(ReconstructOutcome::Value { value: single.1, per_radius_sup }),
        [.., prev, last] => {
            if (last.1 - prev.1).abs() < cfg.tol {
                Ok(ReconstructOutcome::Value { value: last.1, per_radius_sup })
            } else {
                Ok(ReconstructOutcome::Divergence { per_radius_sup })
            }
        }
    }
}

/// The four-property report: Lipschitz ratio, additivity residuals on random
/// nonoverlapping splits, and the fraction of probed interior points with
/// stable (full / directional) derivative estimates, with a cover of the
/// unstable ones.
#[derive(Debug, Clone, Serialize)]
pub struct Theorem54Report {
    pub lipschitz_estimate: f64,
    pub additivity_max_residual: f64,
    pub additivity_allowed: f64,
    pub derivative_stable_fraction: f64,
    pub directional_stable_fraction: f64,
    #[serde(skip)]
    pub unstable_points: Vec<Point>,
    pub unstable_cover: ExceptionCover,
}

pub fn check_theorem54(
    psi: &IndefiniteIntegral,
    trials: usize,
    cfg: &DerivConfig,
) -> Result<Theorem54Report, IndefiniteError> {
    let ambient = psi.ambient().closure();
    let mut rng = seeded_rng(cfg.seed ^ 0x54);
    // (1) Lipschitz ratio over random bricks.
    let mut lipschitz: f64 = 0.0;
    for _ in 0..trials.max(1) {
        if let Some(s) = random_probe_brick(&ambient, &mut rng, 4, None) {
            if s.volume().is_zero() {
                continue;
            }
            let v = psi.value(&s)?;
            lipschitz = lipschitz.max(v.value.abs() / rat_to_f64(&s.volume()));
        }
    }
    // (2) Additivity residuals on random axis splits.
    let mut max_residual: f64 = 0.0;
    let mut allowed: f64 = 0.0;
    for _ in 0..trials.max(1) {
        let Some(s) = random_probe_brick(&ambient, &mut rng, 2, None) else {
            continue;
        };
        if s.volume().is_zero() {
            continue;
        }
        let axis = rng.gen_range(0..s.dim());
        let f = s.factor(axis);
        let cut = f.lo() + f.length() * random_unit_dyadic(&mut rng);
        let mut left = s.factors().to_vec();
        let mut right = s.factors().to_vec();
        left[axis] = Interval::closed(f.lo().clone(), cut.clone()).map_err(IndefiniteError::Geometry)?;
        right[axis] = Interval::closed(cut, f.hi().clone()).map_err(IndefiniteError::Geometry)?;
        let s1 = Brick::new(left).map_err(IndefiniteError::Geometry)?;
        let s2 = Brick::new(right).map_err(IndefiniteError::Geometry)?;
        let (w, w1, w2) = (psi.value(&s)?, psi.value(&s1)?, psi.value(&s2)?);
        let residual = (w.value - w1.value - w2.value).abs();
        max_residual = max_residual.max(residual);
        allowed = allowed.max(w.error_bound + w1.error_bound + w2.error_bound);
    }
    // (3) and (4): derivative coverage at random interior points.
    let mut stable = 0usize;
    let mut dir_stable = 0usize;
    let mut dir_total = 0usize;
    let mut unstable_points = Vec::new();
    let directions = Direction::full_directions(ambient.dim());
    let points: Vec<Point> = (0..trials.max(1))
        .map(|_| {
            ambient
                .factors()
                .iter()
                .map(|f| {
                    let margin = f.length() * Rat::new(1.into(), 8.into());
                    let lo = f.lo() + &margin;
                    let span = f.length() - Rat::from_integer(2.into()) * &margin;
                    lo + span * random_unit_dyadic(&mut rng)
                })
                .collect()
        })
        .collect();
    for u in &points {
        let est = strong_derivative(psi, u, cfg)?;
        if est.is_stable() {
            stable += 1;
        } else {
            unstable_points.push(u.clone());
        }
        for alpha in &directions {
            dir_total += 1;
            if directional_strong_derivative(psi, u, alpha, cfg)?.is_stable() {
                dir_stable += 1;
            }
        }
    }
    let unstable_cover = match crate::jordan::certify_null(
        &crate::jordan::NullInput::Points(unstable_points.clone()),
        &Rat::new(1.into(), 10.into()),
    ) {
        Ok(out) => out.cover().cloned().unwrap_or_else(ExceptionCover::empty),
        Err(_) => ExceptionCover::empty(),
    };
    Ok(Theorem54Report {
        lipschitz_estimate: lipschitz,
        additivity_max_residual: max_residual,
        additivity_allowed: allowed,
        derivative_stable_fraction: stable as f64 / points.len() as f64,
        directional_stable_fraction: if dir_total == 0 {
            1.0
        } else {
            dir_stable as f64 / dir_total as f64
        },
        unstable_points,
        unstable_cover,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::PointOracle;
    use crate::rational::{rat, rint};

    fn unit() -> Brick {
        Brick::closed_from_bounds(&[(rint(0), rint(1))]).unwrap()
    }

    fn unit_square() -> Brick {
        Brick::closed_from_bounds(&[(rint(0), rint(1)), (rint(0), rint(1))]).unwrap()
    }

    fn product_psi() -> IndefiniteIntegral {
        // The midpoint rule is exact for bilinear integrands at any mesh,
        // so a coarse per-query mesh loses nothing here.
        let spec = IntegrandSpec::new(
            unit_square(),
            PointOracle::total(|x: &[Rat]| rat_to_f64(&x[0]) * rat_to_f64(&x[1])),
        );
        IndefiniteIntegral::from_integrand(spec, 8, Precision::default())
    }

    fn edge_psi() -> IndefiniteIntegral {
        // chi_{(1/2,1]} on [0,1]
        let spec = IntegrandSpec::new(
            unit(),
            PointOracle::total(|x: &[Rat]| if x[0] > rat(1, 2) { 1.0 } else { 0.0 }),
        );
        IndefiniteIntegral::from_integrand(spec, 32, Precision::default())
    }

    #[test]
    fn psi_examples() {
        let ones = IntegrandSpec::new(unit_square(), PointOracle::constant(1.0));
        let s = Brick::closed_from_bounds(&[(rat(1, 4), rat(3, 4)), (rint(0), rat(1, 2))]).unwrap();
        let v = psi(&ones, &s, 8, &Precision::default()).unwrap();
        assert!((v.value - 0.25).abs() < 1e-12);

        // f = xy on [0,1/2]^2: exact midpoint value 1/64.
        let spec = IntegrandSpec::new(
            unit_square(),
            PointOracle::total(|x: &[Rat]| rat_to_f64(&x[0]) * rat_to_f64(&x[1])),
        );
        let quarter = Brick::closed_from_bounds(&[(rint(0), rat(1, 2)), (rint(0), rat(1, 2))]).unwrap();
        let v = psi(&spec, &quarter, 16, &Precision::default()).unwrap();
        assert!((v.value - 1.0 / 64.0).abs() < 1e-9, "got {}", v.value);

        let degenerate =
            Brick::closed_from_bounds(&[(rat(1, 3), rat(1, 3)), (rint(0), rint(1))]).unwrap();
        let v = psi(&spec, &degenerate, 16, &Precision::default()).unwrap();
        assert_eq!(v.value, 0.0);

        let outside = Brick::closed_from_bounds(&[(rint(0), rint(2)), (rint(0), rint(1))]).unwrap();
        assert!(matches!(
            psi(&spec, &outside, 8, &Precision::default()),
            Err(IndefiniteError::NotSubBrick)
        ));
    }

    #[test]
    fn constant_derivative_is_flat() {
        let c = IndefiniteIntegral::from_integrand(
            IntegrandSpec::new(unit_square(), PointOracle::constant(2.5)),
            8,
            Precision::default(),
        );
        let est = strong_derivative(&c, &[rat(1, 3), rat(2, 5)], &DerivConfig::default()).unwrap();
        assert!(est.is_stable());
        assert!((est.value - 2.5).abs() < 1e-9);
        assert!(est.spread < 1e-9);
    }

    #[test]
    fn product_derivative_matches_value() {
        let psi = product_psi();
        let u = [rat(1, 2), rat(1, 2)];
        let est = strong_derivative(&psi, &u, &DerivConfig::default()).unwrap();
        assert!(est.is_stable(), "spread {}", est.spread);
        assert!((est.value - 0.25).abs() < 1e-2, "value {}", est.value);
    }

    #[test]
    fn edge_derivative_unstable_but_directional_stable() {
        let psi = edge_psi();
        let u = [rat(1, 2)];
        let full = strong_derivative(&psi, &u, &DerivConfig::default()).unwrap();
        assert!(!full.is_stable(), "straddling probes must disagree");
        assert!(full.spread > 0.5);

        let plus = directional_strong_derivative(
            &psi,
            &u,
            &Direction::new(vec![1]).unwrap(),
            &DerivConfig::default(),
        )
        .unwrap();
        assert!(plus.is_stable());
        assert!((plus.value - 1.0).abs() < 1e-9);

        let minus = directional_strong_derivative(
            &psi,
            &u,
            &Direction::new(vec![-1]).unwrap(),
            &DerivConfig::default(),
        )
        .unwrap();
        assert!(minus.is_stable());
        assert!(minus.value.abs() < 1e-9);

        let axis = Direction::new(vec![1, 0]).unwrap();
        let psi2 = product_psi();
        assert!(matches!(
            directional_strong_derivative(&psi2, &[rat(1, 2), rat(1, 2)], &axis, &DerivConfig::default()),
            Err(IndefiniteError::ZeroComponentDirection)
        ));
    }

    #[test]
    fn quadrant_derivatives_match_quadrant_limits() {
        // First-kind fixture: distinct constant values on the four
        // quadrants around (1/2, 1/2).
        let spec = IntegrandSpec::new(
            unit_square(),
            PointOracle::total(|x: &[Rat]| {
                let a = if x[0] > rat(1, 2) { 1.0 } else { 0.0 };
                let b = if x[1] > rat(1, 2) { 2.0 } else { 0.0 };
                a + b
            }),
        );
        let psi = IndefiniteIntegral::from_integrand(spec.clone(), 8, Precision::default());
        let u = [rat(1, 2), rat(1, 2)];
        let cfg = DerivConfig::default();
        let probe_cfg = crate::directional::ProbeConfig::default();
        for alpha in Direction::full_directions(2) {
            let deriv = directional_strong_derivative(&psi, &u, &alpha, &cfg).unwrap();
            assert!(deriv.is_stable(), "direction {alpha}");
            let lim = crate::directional::directional_limit(
                &spec.eval,
                &unit_square(),
                &u,
                &alpha,
                &probe_cfg,
            )
            .unwrap();
            let lim_value = lim.outcome.value().expect("quadrant limits exist");
            assert!(
                (deriv.value - lim_value).abs() < 2e-2,
                "direction {alpha}: derivative {} vs limit {}",
                deriv.value,
                lim_value
            );
        }
    }

    #[test]
    fn reconstruct_examples() {
        let c = IndefiniteIntegral::from_integrand(
            IntegrandSpec::new(unit(), PointOracle::constant(3.0)),
            16,
            Precision::default(),
        );
        let out = reconstruct(&c, &[rat(2, 7)], &DerivConfig::default()).unwrap();
        assert!((out.value().unwrap() - 3.0).abs() < 1e-9);

        // The sup formula picks the right-hand side at the step edge.
        let psi = edge_psi();
        let out = reconstruct(&psi, &[rat(1, 2)], &DerivConfig::default()).unwrap();
        assert!((out.value().unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn reconstruct_recovers_product() {
        let psi = product_psi();
        let mut rng = seeded_rng(0x77);
        let cfg = DerivConfig::default();
        for _ in 0..20 {
            let u = vec![
                rat(1, 8) + rat(3, 4) * random_unit_dyadic(&mut rng),
                rat(1, 8) + rat(3, 4) * random_unit_dyadic(&mut rng),
            ];
            let expected = rat_to_f64(&u[0]) * rat_to_f64(&u[1]);
            let out = reconstruct(&psi, &u, &cfg).unwrap();
            let got = out.value().expect("product psi reconstructs everywhere");
            assert!((got - expected).abs() < 1e-2, "at {u:?}: {got} vs {expected}");
        }
    }

    #[test]
    fn theorem54_report_flags_the_edge() {
        let psi = edge_psi();
        let cfg = DerivConfig { probes: 16, ..DerivConfig::default() };
        let report = check_theorem54(&psi, 24, &cfg).unwrap();
        assert!(report.lipschitz_estimate <= 1.0 + 1e-9);
        assert!(report.additivity_max_residual <= report.additivity_allowed + 1e-9);
        // Directional derivatives exist everywhere for the edge indicator.
        assert_eq!(report.directional_stable_fraction, 1.0);
        // The full derivative fails only near the edge.
        let max_radius = rat_to_f64(&cfg.radii[0]);
        for p in &report.unstable_points {
            assert!(
                (rat_to_f64(&p[0]) - 0.5).abs() <= max_radius,
                "unstable away from the edge: {p:?}"
            );
        }
    }

    #[test]
    fn theorem54_report_constant() {
        let c = IndefiniteIntegral::from_integrand(
            IntegrandSpec::new(unit(), PointOracle::constant(1.0)),
            16,
            Precision::default(),
        );
        let report = check_theorem54(&c, 16, &DerivConfig::default()).unwrap();
        assert!((report.lipschitz_estimate - 1.0).abs() < 1e-9);
        assert_eq!(report.derivative_stable_fraction, 1.0);
        assert_eq!(report.directional_stable_fraction, 1.0);
        assert!(report.unstable_cover.is_empty());
    }

    #[test]
    fn set_oracle_source_works() {
        // Psi given directly as the volume set-function (derivative 1).
        let psi = IndefiniteIntegral::from_set_oracle(unit(), 0.0, |s: &Brick| {
            rat_to_f64(&s.volume())
        });
        let est = strong_derivative(&psi, &[rat(1, 3)], &DerivConfig::default()).unwrap();
        assert!(est.is_stable());
        assert!((est.value - 1.0).abs() < 1e-9);
    }
}
