//! Constructive K-integration of point-oracle integrands: center-sampled
//! step approximations on uniform tilings, iterated 1-D integration,
//! Darboux brackets, truncation and domain extension.
//!
//! Oracle values are decimals rounded onto a rational grid (default 1e-12)
//! before they enter exact step algebra, so step-function identities stay
//! exact while transcendental integrands remain admissible.

use crate::geometry::{uniform_tiling, Brick, GeometryError};
use crate::jordan::{boundary_cells, ExceptionCover};
use crate::oracle::{random_point_in, seeded_rng, EvalError, PointOracle, PointPredicate};
use crate::rational::{fmt_rat, rat_to_f64, round_to_grid, Rat};
use crate::stepfn::{StepFnError, StepFunction};
use crate::convergence::{KIntegralResult, NUCertificate, ScheduleEntry};
use num_traits::{Signed, Zero};

#[derive(Debug, Clone, thiserror::Error)]
pub enum IntegrateError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    StepFn(#[from] StepFnError),
    #[error("oracle evaluation failed: {0}")]
    Eval(String),
    #[error("oracle produced a non-finite value")]
    NonFiniteValue,
    #[error("schedule must be nonempty and increasing")]
    BadSchedule,
    #[error("truncation bound must be positive")]
    NonpositiveTruncation,
    #[error("the original ambient brick is not contained in the extension")]
    NotSubset,
    #[error("tolerance not reached; best value {value} with error bound {error_bound}")]
    ToleranceNotReached { value: String, error_bound: String },
}

impl From<EvalError> for IntegrateError {
    fn from(e: EvalError) -> Self {
        IntegrateError::Eval(e.to_string())
    }
}

/// Decimal-to-rational rounding precision (grid of integer multiples).
#[derive(Debug, Clone)]
pub struct Precision {
    grid: Rat,
}

impl Default for Precision {
    fn default() -> Self {
        Self { grid: Rat::new(1.into(), num_bigint::BigInt::from(10u64).pow(12)) }
    }
}

impl Precision {
    pub fn new(grid: Rat) -> Self {
        assert!(grid > Rat::zero(), "precision grid must be positive");
        Self { grid }
    }

    pub fn grid(&self) -> &Rat {
        &self.grid
    }

    pub fn round(&self, x: f64) -> Result<Rat, IntegrateError> {
        round_to_grid(x, &self.grid).ok_or(IntegrateError::NonFiniteValue)
    }
}

/// An integrand: ambient brick, point oracle, optional support predicate
/// (the compact set C the function is asserted to vanish outside of), and an
/// optional claimed bound.
#[derive(Debug, Clone)]
pub struct IntegrandSpec {
    pub ambient: Brick,
    pub eval: PointOracle,
    pub support: Option<PointPredicate>,
    pub claimed_bound: Option<Rat>,
}

impl IntegrandSpec {
    pub fn new(ambient: Brick, eval: PointOracle) -> Self {
        Self { ambient, eval, support: None, claimed_bound: None }
    }

    pub fn with_support(mut self, support: PointPredicate) -> Self {
        self.support = Some(support);
        self
    }

    pub fn with_bound(mut self, bound: Rat) -> Self {
        self.claimed_bound = Some(bound);
        self
    }

    /// Restrict to a closed sub-brick (the oracle is simply re-ambiented).
    pub fn restricted_to(&self, sub: &Brick) -> Result<Self, IntegrateError> {
        if !sub.is_subset_of(&self.ambient) {
            return Err(IntegrateError::NotSubset);
        }
        Ok(Self {
            ambient: sub.clone(),
            eval: self.eval.clone(),
            support: self.support.clone(),
            claimed_bound: self.claimed_bound.clone(),
        })
    }
}

/// The center-sampled step approximation on the uniform `m`-tiling
/// (coefficients rounded at the configured precision; zero cells dropped).
pub fn sample_step(
    f: &IntegrandSpec,
    m: usize,
    precision: &Precision,
) -> Result<StepFunction, IntegrateError> {
    let tiling = uniform_tiling(&f.ambient, m)?;
    let mut terms = Vec::new();
    for (cell, center) in tiling.cells().iter().zip(tiling.centers()) {
        let v = f.eval.eval(center)?;
        let coeff = precision.round(v)?;
        if !coeff.is_zero() {
            terms.push((coeff, cell.clone()));
        }
    }
    Ok(StepFunction::new(f.ambient.clone(), terms)?)
}

/// The exact integral of `sample_step(f, m)` computed by streaming over cell
/// centers, without materializing the step function.
pub fn midpoint_integral(
    f: &IntegrandSpec,
    m: usize,
    precision: &Precision,
) -> Result<Rat, IntegrateError> {
    if f.ambient.volume().is_zero() {
        return Ok(Rat::zero());
    }
    let grid = crate::jordan::DyadicGrid::custom(&f.ambient, m);
    let cell_vol = f.ambient.volume() / Rat::from_integer(grid.cell_count_big());
    let mut total = Rat::zero();
    for idx in grid.indices() {
        let center = grid.center(&idx);
        let v = f.eval.eval(&center)?;
        let r = precision.round(v)?;
        if !r.is_zero() {
            total += r;
        }
    }
    Ok(total * cell_vol)
}

#[derive(Debug, Clone)]
pub struct KIntegrateConfig {
    pub m_schedule: Vec<usize>,
    pub precision: Precision,
    /// Sample count for the certificate's tail-sup estimates.
    pub cert_samples: usize,
    pub seed: u64,
}

impl Default for KIntegrateConfig {
    fn default() -> Self {
        Self {
            m_schedule: vec![8, 16, 32, 64, 128, 256, 512],
            precision: Precision::default(),
            cert_samples: 64,
            seed: 0x1D7E,
        }
    }
}

/// Result of constructive K-integration: value, certified error bound, the
/// tiling parameter reached, and the nearly-uniform-convergence certificate
/// assembled along the way.
#[derive(Debug, Clone)]
pub struct KIntegrationReport {
    pub result: KIntegralResult,
    pub certificate: NUCertificate,
    pub m_used: usize,
    pub method: &'static str,
}

/// Run the sampling construction along the schedule. Covers come from the
/// boundary cells of the support predicate (empty for functions continuous
/// on the whole brick); the stopping rule is the Cauchy gap between
/// successive step integrals plus the cover term `2 C lambda(cover)`.
pub fn k_integrate(
    f: &IntegrandSpec,
    tol: &Rat,
    cfg: &KIntegrateConfig,
) -> Result<KIntegrationReport, IntegrateError> {
    if cfg.m_schedule.is_empty() || cfg.m_schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(IntegrateError::BadSchedule);
    }
    if f.ambient.volume().is_zero() {
        return Ok(KIntegrationReport {
            result: KIntegralResult {
                value: Rat::zero(),
                error_bound: Rat::zero(),
                terms_used: 1,
            },
            certificate: NUCertificate {
                uniform_bound: Rat::zero(),
                schedule: vec![ScheduleEntry {
                    delta: Rat::from_integer(1.into()),
                    cover: ExceptionCover::empty(),
                    tail_index: 1,
                    tail_sup: Rat::zero(),
                }],
            },
            m_used: 1,
            method: "degenerate-ambient",
        });
    }
    let mut rng = seeded_rng(cfg.seed);
    let bound = f.claimed_bound.clone();
    let mut prev: Option<(usize, Rat)> = None;
    let mut entries: Vec<ScheduleEntry> = Vec::new();
    let mut best: Option<(Rat, Rat, usize)> = None;
    for (step, &m) in cfg.m_schedule.iter().enumerate() {
        let integral = midpoint_integral(f, m, &cfg.precision)?;
        let cover = match &f.support {
            Some(p) => {
                let depth = (m as f64).log2().ceil().max(1.0) as u32;
                boundary_cells(p, &f.ambient, depth)
            }
            None => ExceptionCover::empty(),
        };
        // Estimate the off-cover sup |g_m - f| at sampled points and record
        // a certificate entry when the estimates keep shrinking.
        let tail_sup = estimate_tail_sup(f, m, &cover, cfg, &mut rng)?;
        let c = bound.clone().unwrap_or_else(|| {
            // No claimed bound: fall back to the largest sampled magnitude.
            tail_sup.clone() + integral.abs()
        });
        let delta = cover.total_volume() + crate::rational::pow2(-(step as i32 + 1));
        let monotone_ok = entries
            .last()
            .map(|e: &ScheduleEntry| delta < e.delta && tail_sup < e.tail_sup)
            .unwrap_or(true);
        if monotone_ok {
            entries.push(ScheduleEntry {
                delta,
                cover: cover.clone(),
                tail_index: m,
                tail_sup: tail_sup.clone(),
            });
        }
        if let Some((_, prev_integral)) = &prev {
            let gap = (&integral - prev_integral).abs();
            let cover_term =
                Rat::from_integer(2.into()) * &c * cover.total_volume();
            let err = &gap + &cover_term;
            if best.as_ref().map(|(_, e, _)| &err < e).unwrap_or(true) {
                best = Some((integral.clone(), err.clone(), m));
            }
            if &err <= tol {
                let certificate = finish_certificate(c, entries);
                return Ok(KIntegrationReport {
                    result: KIntegralResult {
                        value: integral,
                        error_bound: err,
                        terms_used: m,
                    },
                    certificate,
                    m_used: m,
                    method: "midpoint-sampling",
                });
            }
        }
        prev = Some((m, integral));
    }
    let (value, error_bound, _) = best.ok_or(IntegrateError::BadSchedule)?;
    Err(IntegrateError::ToleranceNotReached {
        value: fmt_rat(&value),
        error_bound: fmt_rat(&error_bound),
    })
}

fn estimate_tail_sup(
    f: &IntegrandSpec,
    m: usize,
    cover: &ExceptionCover,
    cfg: &KIntegrateConfig,
    rng: &mut impl rand::Rng,
) -> Result<Rat, IntegrateError> {
    let tiling_probe = |x: &[Rat]| -> Result<f64, IntegrateError> {
        // g_m(x) = rounded f at the center of the cell containing x.
        let m_rat = Rat::from_integer(m.into());
        let center: Vec<Rat> = f
            .ambient
            .factors()
            .iter()
            .zip(x)
            .map(|(fac, xi)| {
                let step = fac.length() / &m_rat;
                let offset = ((xi - fac.lo()) / &step).floor();
                let j = offset.min(Rat::from_integer((m - 1).into()));
                fac.lo() + &step * (j + Rat::new(1.into(), 2.into()))
            })
            .collect();
        let v = f.eval.eval(&center)?;
        Ok(rat_to_f64(&cfg.precision.round(v)?))
    };
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    let mut attempts = 0usize;
    while checked < cfg.cert_samples && attempts < cfg.cert_samples * 10 {
        attempts += 1;
        let x = random_point_in(&f.ambient, rng);
        if cover.contains_point(&x) {
            continue;
        }
        checked += 1;
        let fx = match f.eval.eval(&x) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let gx = tiling_probe(&x)?;
        worst = worst.max((gx - fx).abs());
    }
    // Double the sampled figure (a sampled sup underestimates) and keep the
    // entry strictly positive so schedules stay well-formed.
    let doubled = 2.0 * worst + rat_to_f64(cfg.precision.grid());
    cfg.precision.round(doubled).map(|r| r.max(cfg.precision.grid().clone()))
}

fn finish_certificate(bound: Rat, entries: Vec<ScheduleEntry>) -> NUCertificate {
    // Entries were filtered for monotonicity during the run; a certificate
    // needs at least one entry.
    let schedule = if entries.is_empty() {
        vec![ScheduleEntry {
            delta: Rat::from_integer(1.into()),
            cover: ExceptionCover::empty(),
            tail_index: 1,
            tail_sup: Rat::from_integer(1.into()),
        }]
    } else {
        entries
    };
    NUCertificate { uniform_bound: bound, schedule }
}

/// Iterated one-dimensional midpoint integration, innermost axis last (the
/// inner integral runs over the last coordinate, the outer over the first).
/// Valid for continuous integrands, which the caller asserts.
pub fn fubini(f: &IntegrandSpec, m: usize, precision: &Precision) -> Result<Rat, IntegrateError> {
    if m == 0 {
        return Err(IntegrateError::BadSchedule);
    }
    if f.ambient.volume().is_zero() {
        return Ok(Rat::zero());
    }
    let mut prefix: Vec<Rat> = Vec::with_capacity(f.ambient.dim());
    iterate_axis(f, m, precision, &mut prefix)
}

fn iterate_axis(
    f: &IntegrandSpec,
    m: usize,
    precision: &Precision,
    prefix: &mut Vec<Rat>,
) -> Result<Rat, IntegrateError> {
    let axis = prefix.len();
    if axis == f.ambient.dim() {
        let v = f.eval.eval(prefix)?;
        return precision.round(v);
    }
    let factor = f.ambient.factor(axis);
    let m_rat = Rat::from_integer(m.into());
    let step = factor.length() / &m_rat;
    let mut acc = Rat::zero();
    for j in 0..m {
        let center = factor.lo() + &step * (Rat::from_integer(j.into()) + Rat::new(1.into(), 2.into()));
        prefix.push(center);
        let inner = iterate_axis(f, m, precision, prefix)?;
        prefix.pop();
        acc += inner;
    }
    Ok(acc * step)
}

/// Sampled per-cell Darboux brackets on the uniform `m`-tiling: closure
/// corners, center, and seeded random points per cell. Sampled extrema
/// underestimate the true oscillation, so `lower` may sit above the true
/// lower sum (and symmetrically for `upper`); brackets still shrink for
/// Riemann-integrable integrands.
pub fn darboux(
    f: &IntegrandSpec,
    m: usize,
    samples_per_cell: usize,
    seed: u64,
) -> Result<(f64, f64), IntegrateError> {
    let grid = crate::jordan::DyadicGrid::custom(&f.ambient, m);
    let mut rng = seeded_rng(seed);
    let mut lower = 0.0f64;
    let mut upper = 0.0f64;
    let cell_vol = rat_to_f64(&f.ambient.volume()) / grid.cell_count_big_f64();
    for idx in grid.indices() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut points = grid.sample_points(&idx);
        if samples_per_cell > 0 {
            let cell = grid.closed_cell(&idx);
            for _ in 0..samples_per_cell {
                points.push(random_point_in(&cell, &mut rng));
            }
        }
        for p in points {
            let v = f.eval.eval(&p)?;
            if !v.is_finite() {
                return Err(IntegrateError::NonFiniteValue);
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        lower += lo * cell_vol;
        upper += hi * cell_vol;
    }
    Ok((lower, upper))
}

/// Pointwise median clamp `med {-C, f, C}`. The K-integral is unchanged
/// whenever the overflow set is Jordan-null.
pub fn truncate(f: &IntegrandSpec, c: &Rat) -> Result<IntegrandSpec, IntegrateError> {
    if c <= &Rat::zero() {
        return Err(IntegrateError::NonpositiveTruncation);
    }
    let cap = rat_to_f64(c);
    let inner = f.eval.clone();
    let eval = PointOracle::new(move |x: &[Rat]| {
        let v = inner.eval(x)?;
        Ok(v.clamp(-cap, cap))
    });
    Ok(IntegrandSpec {
        ambient: f.ambient.clone(),
        eval,
        support: f.support.clone(),
        claimed_bound: Some(c.clone()),
    })
}

/// Extend by zero to a larger ambient brick: the integral is unchanged.
pub fn extend(f: &IntegrandSpec, into: &Brick) -> Result<IntegrandSpec, IntegrateError> {
    if !f.ambient.is_subset_of(into) {
        return Err(IntegrateError::NotSubset);
    }
    let inner = f.eval.clone();
    let original = f.ambient.clone();
    let support_inner = f.support.clone();
    let eval = PointOracle::new(move |x: &[Rat]| {
        if original.contains_point(x) {
            inner.eval(x)
        } else {
            Ok(0.0)
        }
    });
    let original_for_support = f.ambient.clone();
    let support = PointPredicate::new(move |x: &[Rat]| {
        original_for_support.contains_point(x)
            && support_inner.as_ref().map(|p| p.test(x)).unwrap_or(true)
    });
    Ok(IntegrandSpec {
        ambient: into.clone(),
        eval,
        support: Some(support),
        claimed_bound: f.claimed_bound.clone(),
    })
}
