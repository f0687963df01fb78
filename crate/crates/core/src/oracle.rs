//! Point oracles: the boundary between exact rational geometry and
//! user-supplied functions evaluated in floating point.

use crate::rational::{Point, Rat};
use std::fmt;
use std::sync::Arc;

/// Evaluation failure inside a point oracle (division by zero, domain error,
/// unresolved gallery reference, ...).
#[derive(Debug, Clone, thiserror::Error)]
#[error("evaluation error{}: {message}", at.as_ref().map(|p| format!(" at {p:?}")).unwrap_or_default())]
pub struct EvalError {
    pub message: String,
    pub at: Option<Vec<String>>,
}

impl EvalError {
    pub fn new(message: impl Into<String>) -> Self {
        Self { message: message.into(), at: None }
    }

    pub fn at_point(message: impl Into<String>, point: &[Rat]) -> Self {
        Self {
            message: message.into(),
            at: Some(point.iter().map(crate::rational::fmt_rat).collect()),
        }
    }
}

/// A total (up to evaluation errors) real-valued function on rational points.
#[derive(Clone)]
pub struct PointOracle {
    f: Arc<dyn Fn(&[Rat]) -> Result<f64, EvalError> + Send + Sync>,
}

impl PointOracle {
    pub fn new(f: impl Fn(&[Rat]) -> Result<f64, EvalError> + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f) }
    }

    /// Oracle that never fails.
    pub fn total(f: impl Fn(&[Rat]) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(move |x| Ok(f(x)))
    }

    pub fn constant(c: f64) -> Self {
        Self::total(move |_| c)
    }

    pub fn eval(&self, x: &[Rat]) -> Result<f64, EvalError> {
        (self.f)(x)
    }
}

impl fmt::Debug for PointOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PointOracle(..)")
    }
}

/// A total boolean predicate on rational points.
#[derive(Clone)]
pub struct PointPredicate {
    f: Arc<dyn Fn(&[Rat]) -> bool + Send + Sync>,
}

impl PointPredicate {
    pub fn new(f: impl Fn(&[Rat]) -> bool + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f) }
    }

    pub fn test(&self, x: &[Rat]) -> bool {
        (self.f)(x)
    }
}

impl fmt::Debug for PointPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PointPredicate(..)")
    }
}

/// A positive radius function on the ambient brick (a gauge, and the various
/// proof-specific radius choices).
#[derive(Clone)]
pub struct RadiusOracle {
    f: Arc<dyn Fn(&[Rat]) -> Rat + Send + Sync>,
}

impl RadiusOracle {
    pub fn new(f: impl Fn(&[Rat]) -> Rat + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f) }
    }

    pub fn constant(r: Rat) -> Self {
        Self::new(move |_| r.clone())
    }

    pub fn radius(&self, x: &[Rat]) -> Rat {
        (self.f)(x)
    }
}

impl fmt::Debug for RadiusOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("RadiusOracle(..)")
    }
}

/// Convenience: evaluate an oracle at a point given as f64s is deliberately
/// absent; oracles take exact rational points so membership decisions stay
/// exact. Convert once at the boundary instead.
pub fn point_to_f64(x: &[Rat]) -> Vec<f64> {
    x.iter().map(crate::rational::rat_to_f64).collect()
}

/// Deterministic seeded RNG used across all randomized probing.
pub fn seeded_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

/// A uniformly random dyadic rational in `(0, 1)` at 20 fractional bits.
/// Dyadic sample points keep denominators small and membership tests cheap.
pub fn random_unit_dyadic(rng: &mut impl rand::Rng) -> Rat {
    use num_bigint::BigInt;
    let bits: u64 = rng.gen_range(1..(1u64 << 20));
    Rat::new(BigInt::from(bits), BigInt::from(1u64 << 20))
}

/// Random dyadic point in the closure of a brick (coordinates strictly
/// interior to each nondegenerate factor).
pub fn random_point_in(brick: &crate::geometry::Brick, rng: &mut impl rand::Rng) -> Point {
    brick
        .factors()
        .iter()
        .map(|f| {
            if f.is_degenerate() {
                f.lo().clone()
            } else {
                f.lo() + f.length() * random_unit_dyadic(rng)
            }
        })
        .collect()
}
