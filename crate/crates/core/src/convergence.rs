//! Nearly-uniform convergence certificates and the K-integral as the limit
//! of step integrals.
//!
//! A certificate is explicit data, not a proof: the definition quantifies
//! over every positive delta, and a finite schedule of (delta, cover,
//! tail index, tail sup) entries with both columns decreasing to zero is the
//! computable surrogate. Verification is exact for step-function targets and
//! sampled for oracle targets.

use crate::geometry::Brick;
use crate::jordan::ExceptionCover;
use crate::oracle::{random_point_in, seeded_rng, PointOracle};
use crate::rational::{fmt_rat, rat_to_f64, Rat};
use crate::stepfn::{StepFnError, StepFunction};
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, thiserror::Error)]
pub enum ConvergenceError {
    #[error("malformed certificate schedule: {0}")]
    InvalidSchedule(String),
    #[error("schedule exhausted before reaching tolerance; best bound {best}")]
    ScheduleExhausted { best: String },
    #[error(transparent)]
    StepFn(#[from] StepFnError),
}

/// One certificate entry: off `cover` (of total volume `< delta`), every
/// `g_m` with `m >= tail_index` stays within `tail_sup` of the target.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleEntry {
    #[serde(with = "crate::rational::serde_rat")]
    pub delta: Rat,
    pub cover: ExceptionCover,
    pub tail_index: usize,
    #[serde(with = "crate::rational::serde_rat")]
    pub tail_sup: Rat,
}

/// Evidence that an indexed family of step functions converges nearly
/// uniformly: a uniform bound plus a schedule of shrinking exception covers
/// and tail bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NUCertificate {
    #[serde(with = "crate::rational::serde_rat")]
    pub uniform_bound: Rat,
    pub schedule: Vec<ScheduleEntry>,
}

impl NUCertificate {
    pub fn new(uniform_bound: Rat, schedule: Vec<ScheduleEntry>) -> Result<Self, ConvergenceError> {
        let cert = Self { uniform_bound, schedule };
        cert.validate()?;
        Ok(cert)
    }

    pub fn validate(&self) -> Result<(), ConvergenceError> {
        if self.schedule.is_empty() {
            return Err(ConvergenceError::InvalidSchedule("empty schedule".into()));
        }
        if self.uniform_bound < Rat::zero() {
            return Err(ConvergenceError::InvalidSchedule("negative uniform bound".into()));
        }
        for (i, e) in self.schedule.iter().enumerate() {
            if e.delta <= Rat::zero() {
                return Err(ConvergenceError::InvalidSchedule(format!(
                    "entry {i}: delta must be positive"
                )));
            }
            if e.cover.total_volume() >= &e.delta {
                return Err(ConvergenceError::InvalidSchedule(format!(
                    "entry {i}: cover volume {} is not below delta {}",
                    fmt_rat(e.cover.total_volume()),
                    fmt_rat(&e.delta)
                )));
            }
            if e.tail_sup < Rat::zero() {
                return Err(ConvergenceError::InvalidSchedule(format!(
                    "entry {i}: negative tail sup"
                )));
            }
            if e.tail_index == 0 {
                return Err(ConvergenceError::InvalidSchedule(format!(
                    "entry {i}: tail index is 1-based"
                )));
            }
        }
        for w in self.schedule.windows(2) {
            if w[1].delta >= w[0].delta {
                return Err(ConvergenceError::InvalidSchedule(
                    "deltas must strictly decrease".into(),
                ));
            }
            if w[1].tail_sup > w[0].tail_sup || (w[1].tail_sup == w[0].tail_sup && !w[1].tail_sup.is_zero()) {
                return Err(ConvergenceError::InvalidSchedule(
                    "tail sups must strictly decrease (until they reach zero)".into(),
                ));
            }
        }
        Ok(())
    }

    /// Certificate for `a*f + b*g` from certificates of `f` and `g`:
    /// covers merge, bounds and sups combine linearly. Schedules are zipped
    /// entry by entry (the shorter one rules).
    pub fn linear_combination(a: &Rat, c1: &Self, b: &Rat, c2: &Self) -> Result<Self, ConvergenceError> {
        let schedule = c1
            .schedule
            .iter()
            .zip(&c2.schedule)
            .map(|(e1, e2)| ScheduleEntry {
                delta: &e1.delta + &e2.delta,
                cover: e1.cover.merged(&e2.cover),
                tail_index: e1.tail_index.max(e2.tail_index),
                tail_sup: a.abs() * &e1.tail_sup + b.abs() * &e2.tail_sup,
            })
            .collect();
        Self::new(a.abs() * &c1.uniform_bound + b.abs() * &c2.uniform_bound, schedule)
    }
}

/// An indexed family of step functions (1-based index).
pub trait StepSequence {
    fn ambient(&self) -> &Brick;
    fn term(&self, m: usize) -> StepFunction;
}

/// Step sequence from a closure.
pub struct FnSequence<F: Fn(usize) -> StepFunction> {
    ambient: Brick,
    f: F,
}

impl<F: Fn(usize) -> StepFunction> FnSequence<F> {
    pub fn new(ambient: Brick, f: F) -> Self {
        Self { ambient, f }
    }
}

impl<F: Fn(usize) -> StepFunction> StepSequence for FnSequence<F> {
    fn ambient(&self) -> &Brick {
        &self.ambient
    }

    fn term(&self, m: usize) -> StepFunction {
        (self.f)(m)
    }
}

/// Convergence target: another step function (checked exactly) or a point
/// oracle (checked at sampled points off the cover).
pub enum Target {
    Step(StepFunction),
    Oracle(PointOracle),
}

impl Target {
    pub fn zero(ambient: Brick) -> Self {
        Target::Step(StepFunction::zero(ambient))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyConfig {
    /// Sample points per entry for oracle targets.
    pub samples: usize,
    /// How many indices at and beyond each tail index get checked.
    pub horizon: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { samples: 200, horizon: 8, seed: 0x5EED }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum NuVerdict {
    Pass,
    Fail { entry: usize, m: usize, reason: String },
}

impl NuVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, NuVerdict::Pass)
    }
}

/// Check a certificate against the sequence: uniform boundedness of the
/// checked terms, and for every entry and every `m` in the checked window,
/// the sup of `|g_m - target|` off the cover within `tail_sup`. Step targets
/// are compared exactly on the common refinement; oracle targets at sampled
/// points off the cover. Reports the first violated entry.
pub fn verify_nu(
    seq: &dyn StepSequence,
    target: &Target,
    cert: &NUCertificate,
    cfg: &VerifyConfig,
) -> Result<NuVerdict, ConvergenceError> {
    cert.validate()?;
    let ambient = seq.ambient();
    let mut rng = seeded_rng(cfg.seed);
    for (i, entry) in cert.schedule.iter().enumerate() {
        for m in entry.tail_index..entry.tail_index + cfg.horizon {
            let g = seq.term(m);
            let sup = g.sup_abs();
            if sup > cert.uniform_bound {
                return Ok(NuVerdict::Fail {
                    entry: i,
                    m,
                    reason: format!(
                        "uniform bound violated: sup |g_{m}| = {} > {}",
                        fmt_rat(&sup),
                        fmt_rat(&cert.uniform_bound)
                    ),
                });
            }
            match target {
                Target::Step(t) => {
                    let diff =
                        StepFunction::sup_diff_outside(&g, t, entry.cover.bricks())?;
                    if diff > entry.tail_sup {
                        return Ok(NuVerdict::Fail {
                            entry: i,
                            m,
                            reason: format!(
                                "sup off cover = {} > tail sup {}",
                                fmt_rat(&diff),
                                fmt_rat(&entry.tail_sup)
                            ),
                        });
                    }
                }
                Target::Oracle(f) => {
                    let allowance = rat_to_f64(&entry.tail_sup) + 1e-9;
                    let mut checked = 0usize;
                    while checked < cfg.samples {
                        let x = random_point_in(ambient, &mut rng);
                        if entry.cover.contains_point(&x) {
                            continue;
                        }
                        checked += 1;
                        let fx = match f.eval(&x) {
                            Ok(v) => v,
                            Err(_) => continue,
                        };
                        let gx = rat_to_f64(&g.evaluate_or_zero(&x));
                        if (gx - fx).abs() > allowance {
                            return Ok(NuVerdict::Fail {
                                entry: i,
                                m,
                                reason: format!(
                                    "|g_{m} - f| = {} at a sampled point, above {}",
                                    (gx - fx).abs(),
                                    allowance
                                ),
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(NuVerdict::Pass)
}

/// The K-integral value extracted from a certified sequence.
#[derive(Debug, Clone, Serialize)]
pub struct KIntegralResult {
    #[serde(with = "crate::rational::serde_rat")]
    pub value: Rat,
    #[serde(with = "crate::rational::serde_rat")]
    pub error_bound: Rat,
    pub terms_used: usize,
}

/// The integral of the first scheduled term whose certified error bound
/// `tail_sup * lambda(T) + 2 C delta` reaches the tolerance. The first half
/// bounds the off-cover difference integral, the second the on-cover part
/// (both functions stay within the uniform bound there).
pub fn k_integral(
    seq: &dyn StepSequence,
    cert: &NUCertificate,
    tol: &Rat,
) -> Result<KIntegralResult, ConvergenceError> {
    cert.validate()?;
    let volume = seq.ambient().volume();
    let mut best: Option<Rat> = None;
    for entry in &cert.schedule {
        let err = &entry.tail_sup * &volume + rat_i(2) * &cert.uniform_bound * &entry.delta;
        if &err <= tol {
            let g = seq.term(entry.tail_index);
            return Ok(KIntegralResult {
                value: g.integral(),
                error_bound: err,
                terms_used: entry.tail_index,
            });
        }
        best = Some(match best {
            None => err,
            Some(b) => b.min(err),
        });
    }
    Err(ConvergenceError::ScheduleExhausted {
        best: best.map(|b| fmt_rat(&b)).unwrap_or_else(|| "none".into()),
    })
}

fn rat_i(n: i64) -> Rat {
    Rat::from_integer(n.into())
}
