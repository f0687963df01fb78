//! Step functions: finite linear combinations of characteristic functions of
//! bricks, with exact evaluation, integration, canonicalization and sup-norm
//! computations off exception sets.
//!
//! Representations are non-canonical by design: supports may overlap and
//! coefficients may cancel. `canonicalize` produces an equivalent
//! representation on a common-refinement grid with pairwise nonoverlapping
//! supports; `integral` never needs it and stays O(M).

use crate::geometry::{common_refinement, Brick, GeometryError};
use crate::rational::{Rat, Point};
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum StepFnError {
    #[error("term support is not contained in the ambient brick")]
    SupportOutsideAmbient,
    #[error("ambient bricks differ")]
    AmbientMismatch,
    #[error("point lies outside the ambient brick")]
    PointOutsideAmbient,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One weighted characteristic function `c * chi_B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    #[serde(with = "crate::rational::serde_rat")]
    pub coeff: Rat,
    pub support: Brick,
}

/// A step function `sum_j c_j chi_{T_j}` over an ambient brick `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    ambient: Brick,
    terms: Vec<Term>,
}

impl StepFunction {
    pub fn new(ambient: Brick, terms: Vec<(Rat, Brick)>) -> Result<Self, StepFnError> {
        for (_, support) in &terms {
            if !support.is_subset_of(&ambient) {
                return Err(StepFnError::SupportOutsideAmbient);
            }
        }
        Ok(Self {
            ambient,
            terms: terms
                .into_iter()
                .map(|(coeff, support)| Term { coeff, support })
                .collect(),
        })
    }

    /// The zero function on `ambient`.
    pub fn zero(ambient: Brick) -> Self {
        Self { ambient, terms: Vec::new() }
    }

    /// `c * chi_B` on `ambient`.
    pub fn indicator(ambient: Brick, support: Brick, coeff: Rat) -> Result<Self, StepFnError> {
        Self::new(ambient, vec![(coeff, support)])
    }

    /// The constant function `c` on `ambient`.
    pub fn constant(ambient: Brick, c: Rat) -> Self {
        let support = ambient.clone();
        Self { ambient, terms: vec![Term { coeff: c, support }] }
    }

    pub fn ambient(&self) -> &Brick {
        &self.ambient
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Exact pointwise value: the sum of coefficients of terms whose support
    /// contains `x` (endpoint flags included).
    pub fn evaluate(&self, x: &[Rat]) -> Result<Rat, StepFnError> {
        if !self.ambient.contains_point(x) {
            return Err(StepFnError::PointOutsideAmbient);
        }
        Ok(self
            .terms
            .iter()
            .filter(|t| t.support.contains_point(x))
            .map(|t| t.coeff.clone())
            .sum())
    }

    /// Exact integral `sum_j c_j lambda(T_j)`. Independent of the particular
    /// representation; degenerate supports contribute nothing.
    pub fn integral(&self) -> Rat {
        self.terms
            .iter()
            .map(|t| &t.coeff * t.support.volume())
            .sum()
    }

    /// `a*g1 + b*g2` without canonicalizing; exact and O(M1 + M2).
    pub fn combine(a: &Rat, g1: &Self, b: &Rat, g2: &Self) -> Result<Self, StepFnError> {
        if g1.ambient != g2.ambient {
            return Err(StepFnError::AmbientMismatch);
        }
        let mut terms = Vec::with_capacity(g1.terms.len() + g2.terms.len());
        for (scale, g) in [(a, g1), (b, g2)] {
            if scale.is_zero() {
                continue;
            }
            for t in &g.terms {
                let coeff = scale * &t.coeff;
                if !coeff.is_zero() {
                    terms.push(Term { coeff, support: t.support.clone() });
                }
            }
        }
        Ok(Self { ambient: g1.ambient.clone(), terms })
    }

    pub fn scale(&self, a: &Rat) -> Self {
        Self {
            ambient: self.ambient.clone(),
            terms: self
                .terms
                .iter()
                .filter(|_| !a.is_zero())
                .map(|t| Term { coeff: a * &t.coeff, support: t.support.clone() })
                .collect(),
        }
    }

    /// An equivalent representation on the common refinement of all supports:
    /// pairwise nonoverlapping supports, one constant value per grid cell,
    /// zero-valued cells dropped. Pointwise equal to `self` everywhere on the
    /// ambient brick and integral-preserving, both exactly.
    pub fn canonicalize(&self) -> Self {
        let supports: Vec<Brick> = self.terms.iter().map(|t| t.support.clone()).collect();
        let grid = common_refinement(&supports, &self.ambient)
            .expect("supports were validated against the ambient brick");
        let mut terms = Vec::new();
        for idx in grid.indices() {
            let mut value = Rat::zero();
            for (j, t) in self.terms.iter().enumerate() {
                if grid.cell_in_input(&idx, j) {
                    value += &t.coeff;
                }
            }
            if !value.is_zero() {
                terms.push(Term { coeff: value, support: grid.cell(&idx) });
            }
        }
        Self { ambient: self.ambient.clone(), terms }
    }

    /// Largest absolute value attained anywhere on the ambient brick. The
    /// canonical form drops zero-valued cells, which only ever contribute 0
    /// to the max, so iterating its terms is enough.
    pub fn sup_abs(&self) -> Rat {
        self.canonicalize()
            .terms
            .iter()
            .map(|t| t.coeff.abs())
            .max()
            .unwrap_or_else(Rat::zero)
    }

    /// Exact `sup |g1 - g2|` over the ambient brick minus the union of the
    /// exception bricks, computed on the common refinement of every involved
    /// brick. Returns 0 when the complement is empty.
    pub fn sup_diff_outside(
        g1: &Self,
        g2: &Self,
        exceptions: &[Brick],
    ) -> Result<Rat, StepFnError> {
        if g1.ambient != g2.ambient {
            return Err(StepFnError::AmbientMismatch);
        }
        let diff = Self::combine(&Rat::from_integer(1.into()), g1, &Rat::from_integer((-1).into()), g2)?;
        // Clip exceptions to the ambient brick; parts outside it are
        // irrelevant to the sup.
        let mut clipped = Vec::new();
        for e in exceptions {
            if let Some(part) = diff.ambient.intersect(e)? {
                clipped.push(part);
            }
        }
        let mut inputs: Vec<Brick> = diff.terms.iter().map(|t| t.support.clone()).collect();
        let term_count = inputs.len();
        inputs.extend(clipped.iter().cloned());
        let grid = common_refinement(&inputs, &diff.ambient)?;
        let mut sup = Rat::zero();
        let mut any_cell = false;
        for idx in grid.indices() {
            let excluded =
                (term_count..inputs.len()).any(|j| grid.cell_in_input(&idx, j));
            if excluded {
                continue;
            }
            any_cell = true;
            let mut value = Rat::zero();
            for (j, t) in diff.terms.iter().enumerate() {
                if grid.cell_in_input(&idx, j) {
                    value += &t.coeff;
                }
            }
            sup = sup.max(value.abs());
        }
        let _ = any_cell; // empty complement: sup stays 0 by definition
        Ok(sup)
    }

    /// Evaluate as a point oracle (used when a step function feeds machinery
    /// expecting decimal-valued functions). Exact membership, then one exact
    /// rational-to-float conversion.
    pub fn oracle(&self) -> crate::oracle::PointOracle {
        let g = self.clone();
        crate::oracle::PointOracle::new(move |x: &[Rat]| {
            g.evaluate(x)
                .map(|v| crate::rational::rat_to_f64(&v))
                .map_err(|e| crate::oracle::EvalError::at_point(e.to_string(), x))
        })
    }

    /// Restrict to a sub-brick (terms clipped factor-wise).
    pub fn restrict(&self, sub: &Brick) -> Result<Self, StepFnError> {
        if !sub.is_subset_of(&self.ambient) {
            return Err(StepFnError::SupportOutsideAmbient);
        }
        let mut terms = Vec::new();
        for t in &self.terms {
            if let Some(clipped) = t.support.intersect(sub)? {
                terms.push(Term { coeff: t.coeff.clone(), support: clipped });
            }
        }
        Ok(Self { ambient: sub.clone(), terms })
    }

    /// Evaluate at a point returning 0 outside the ambient brick (pointwise
    /// extension by zero).
    pub fn evaluate_or_zero(&self, x: &[Rat]) -> Rat {
        self.evaluate(x).unwrap_or_else(|_| Rat::zero())
    }

    /// All cell values of the canonical form (for positivity checks).
    pub fn canonical_values(&self) -> Vec<(Brick, Rat)> {
        self.canonicalize()
            .terms
            .into_iter()
            .map(|t| (t.support, t.coeff))
            .collect()
    }

    /// Centers of the canonical cells (handy probe points in tests).
    pub fn canonical_centers(&self) -> Vec<Point> {
        self.canonicalize()
            .terms
            .iter()
            .map(|t| t.support.center())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Interval;
    use crate::rational::{rat, rint};

    fn unit() -> Brick {
        Brick::closed_from_bounds(&[(rint(0), rint(1))]).unwrap()
    }

    fn brick_1d(lo: Rat, hi: Rat) -> Brick {
        Brick::closed_from_bounds(&[(lo, hi)]).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let g = StepFunction::indicator(unit(), brick_1d(rint(0), rat(1, 2)), rint(1)).unwrap();
        assert_eq!(g.evaluate(&[rat(1, 4)]).unwrap(), rint(1));

        let overlapping = StepFunction::new(
            unit(),
            vec![
                (rint(1), brick_1d(rint(0), rat(1, 2))),
                (rint(2), brick_1d(rat(1, 4), rint(1))),
            ],
        )
        .unwrap();
        assert_eq!(overlapping.evaluate(&[rat(1, 3)]).unwrap(), rint(3));

        let half_open = StepFunction::indicator(
            unit(),
            Brick::new(vec![Interval::half_open(rint(0), rat(1, 2)).unwrap()]).unwrap(),
            rint(1),
        )
        .unwrap();
        assert_eq!(half_open.evaluate(&[rat(1, 2)]).unwrap(), rint(0));

        assert_eq!(
            half_open.evaluate(&[rint(2)]).unwrap_err(),
            StepFnError::PointOutsideAmbient
        );
    }

    #[test]
    fn integral_examples() {
        let square =
            Brick::closed_from_bounds(&[(rint(0), rint(1)), (rint(0), rint(1))]).unwrap();
        let chi_t = StepFunction::constant(square, rint(1));
        assert_eq!(chi_t.integral(), rint(1));

        let g = StepFunction::new(
            unit(),
            vec![
                (rint(2), brick_1d(rint(0), rat(1, 2))),
                (rint(3), brick_1d(rat(1, 4), rat(3, 4))),
            ],
        )
        .unwrap();
        assert_eq!(g.integral(), rat(5, 2));
        assert_eq!(g.canonicalize().integral(), rat(5, 2));

        // chi_{[0,1]} - chi_{[0,1)} is supported on the single point {1}.
        let closed = StepFunction::indicator(unit(), unit(), rint(1)).unwrap();
        let half = StepFunction::indicator(
            unit(),
            Brick::new(vec![Interval::half_open(rint(0), rint(1)).unwrap()]).unwrap(),
            rint(1),
        )
        .unwrap();
        let diff = StepFunction::combine(&rint(1), &closed, &rint(-1), &half).unwrap();
        assert_eq!(diff.integral(), rint(0));
        assert_eq!(diff.evaluate(&[rint(1)]).unwrap(), rint(1));
        assert_eq!(diff.evaluate(&[rat(1, 2)]).unwrap(), rint(0));
    }

    #[test]
    fn canonicalize_is_pointwise_equal() {
        let g = StepFunction::new(
            unit(),
            vec![
                (rint(2), brick_1d(rint(0), rat(1, 2))),
                (rint(-3), brick_1d(rat(1, 4), rat(3, 4))),
                (rat(1, 2), brick_1d(rat(1, 4), rat(1, 4))),
            ],
        )
        .unwrap();
        let canon = g.canonicalize();
        assert_eq!(canon.integral(), g.integral());
        // No two canonical supports overlap in the interior.
        for (i, a) in canon.terms().iter().enumerate() {
            for b in &canon.terms()[i + 1..] {
                assert!(!a.support.interior_overlaps(&b.support));
            }
        }
        // Spot-check pointwise equality on a rational grid.
        for num in 0..=40 {
            let x = vec![rat(num, 40)];
            assert_eq!(g.evaluate(&x).unwrap(), canon.evaluate(&x).unwrap(), "at {num}/40");
        }

        let already = StepFunction::indicator(unit(), brick_1d(rint(0), rat(1, 2)), rint(1)).unwrap();
        let again = already.canonicalize();
        for num in 0..=20 {
            let x = vec![rat(num, 20)];
            assert_eq!(already.evaluate(&x).unwrap(), again.evaluate(&x).unwrap());
        }

        let zero = StepFunction::zero(unit());
        assert!(zero.canonicalize().terms().is_empty());
    }

    #[test]
    fn combine_examples() {
        let g = StepFunction::new(
            unit(),
            vec![
                (rint(2), brick_1d(rint(0), rat(1, 2))),
                (rint(1), brick_1d(rat(1, 4), rint(1))),
            ],
        )
        .unwrap();
        let cancel = StepFunction::combine(&rint(1), &g, &rint(-1), &g).unwrap();
        assert_eq!(cancel.integral(), rint(0));
        for num in 0..=10 {
            assert_eq!(cancel.evaluate(&[rat(num, 10)]).unwrap(), rint(0));
        }

        let doubled = StepFunction::combine(&rint(2), &g, &rint(0), &g).unwrap();
        assert_eq!(doubled.integral(), g.integral() * rint(2));
    }

    #[test]
    fn sup_diff_examples() {
        let g = StepFunction::indicator(unit(), brick_1d(rint(0), rat(1, 4)), rint(1)).unwrap();
        let zero = StepFunction::zero(unit());

        assert_eq!(StepFunction::sup_diff_outside(&g, &g, &[]).unwrap(), rint(0));

        let exc = vec![brick_1d(rint(0), rat(1, 2))];
        assert_eq!(StepFunction::sup_diff_outside(&g, &zero, &exc).unwrap(), rint(0));

        let g2 = StepFunction::new(
            unit(),
            vec![
                (rint(1), brick_1d(rint(0), rat(1, 4))),
                (rint(1), brick_1d(rat(3, 4), rint(1))),
            ],
        )
        .unwrap();
        assert_eq!(StepFunction::sup_diff_outside(&g2, &zero, &exc).unwrap(), rint(1));

        // Exceptions covering everything: sup over the empty set is 0.
        let all = vec![unit()];
        assert_eq!(StepFunction::sup_diff_outside(&g2, &zero, &all).unwrap(), rint(0));
    }

    #[test]
    fn restriction_clips_supports() {
        let g = StepFunction::new(
            unit(),
            vec![
                (rint(1), brick_1d(rint(0), rat(1, 2))),
                (rint(4), brick_1d(rat(3, 4), rint(1))),
            ],
        )
        .unwrap();
        let sub = brick_1d(rat(1, 4), rat(3, 4));
        let restricted = g.restrict(&sub).unwrap();
        assert_eq!(restricted.integral(), rat(1, 4));
        assert_eq!(restricted.evaluate(&[rat(3, 4)]).unwrap(), rint(4));
    }

    #[test]
    fn serde_round_trip() {
        let g = StepFunction::new(
            unit(),
            vec![(rat(-3, 2), brick_1d(rint(0), rat(1, 2)))],
        )
        .unwrap();
        let json = serde_json::to_string(&g).unwrap();
        let back: StepFunction = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
    }
}
