//! Property tests for the exact-arithmetic invariants: representation
//! independence of the step integral, the positivity/bound estimates,
//! tiling pointwise-partition behavior, and DSL round-tripping.

use brickint_core::dsl::{self, BinOp, CmpOp, Expr, Func};
use brickint_core::geometry::{common_refinement, uniform_tiling, Brick, Interval};
use brickint_core::rational::{rat, rint, Rat};
use brickint_core::stepfn::StepFunction;
use num_traits::Signed;
use proptest::prelude::*;

fn dyadic(denom_pow: u32) -> impl Strategy<Value = Rat> {
    let q = 1i64 << denom_pow;
    (0..=q).prop_map(move |p| rat(p, q))
}

fn interval_in_unit() -> impl Strategy<Value = Interval> {
    (dyadic(5), dyadic(5), any::<bool>(), any::<bool>()).prop_map(|(a, b, lc, hc)| {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if lo == hi {
            Interval::point(lo)
        } else {
            Interval::new(lo, hi, lc, hc).expect("lo < hi")
        }
    })
}

fn brick_in_unit_square() -> impl Strategy<Value = Brick> {
    (interval_in_unit(), interval_in_unit())
        .prop_map(|(a, b)| Brick::new(vec![a, b]).expect("two factors"))
}

fn unit_square() -> Brick {
    Brick::closed_from_bounds(&[(rint(0), rint(1)), (rint(0), rint(1))]).unwrap()
}

fn step_function_strategy() -> impl Strategy<Value = StepFunction> {
    proptest::collection::vec(((-8i64..=8).prop_map(rint), brick_in_unit_square()), 1..5)
        .prop_map(|terms| StepFunction::new(unit_square(), terms).expect("supports in ambient"))
}

/// A randomized equivalent re-representation: split supports along an axis,
/// permute terms, and append a cancelling pair.
fn re_represent(
    g: &StepFunction,
    splits: &[(usize, usize, u8)],
    cancel: &(Rat, Brick),
    rotate: usize,
) -> StepFunction {
    let mut terms: Vec<(Rat, Brick)> = g
        .terms()
        .iter()
        .map(|t| (t.coeff.clone(), t.support.clone()))
        .collect();
    for &(term_pick, axis_pick, frac) in splits {
        if terms.is_empty() {
            break;
        }
        let idx = term_pick % terms.len();
        let (coeff, support) = terms.swap_remove(idx);
        let axis = axis_pick % support.dim();
        let f = support.factor(axis);
        if f.is_degenerate() {
            terms.push((coeff, support));
            continue;
        }
        // Interior dyadic cut: lo + len * (1..16)/16.
        let cut = f.lo() + f.length() * rat(1 + (frac % 15) as i64, 16);
        let mut left = support.factors().to_vec();
        let mut right = support.factors().to_vec();
        left[axis] = Interval::new(f.lo().clone(), cut.clone(), f.lo_closed(), false).unwrap();
        right[axis] = Interval::new(cut, f.hi().clone(), true, f.hi_closed()).unwrap();
        terms.push((coeff.clone(), Brick::new(left).unwrap()));
        terms.push((coeff, Brick::new(right).unwrap()));
    }
    let (c, b) = cancel;
    terms.push((c.clone(), b.clone()));
    terms.push((-c.clone(), b.clone()));
    let n = terms.len();
    terms.rotate_left(rotate % n.max(1));
    StepFunction::new(g.ambient().clone(), terms).expect("same ambient")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integral_is_representation_independent(
        g in step_function_strategy(),
        splits in proptest::collection::vec((any::<usize>(), any::<usize>(), any::<u8>()), 0..4),
        cancel_coeff in -5i64..=5,
        cancel_brick in brick_in_unit_square(),
        rotate in any::<usize>(),
    ) {
        let alt = re_represent(&g, &splits, &(rint(cancel_coeff), cancel_brick), rotate);
        prop_assert_eq!(g.integral(), alt.integral());
        // Pointwise equality at canonical centers of both representations.
        for x in g.canonical_centers().into_iter().take(8) {
            prop_assert_eq!(g.evaluate(&x).unwrap(), alt.evaluate(&x).unwrap());
        }
    }

    #[test]
    fn positivity_and_bound(g in step_function_strategy()) {
        let canonical = g.canonicalize();
        if canonical.terms().iter().all(|t| !t.coeff.is_negative()) {
            prop_assert!(g.integral() >= rint(0));
        }
        if canonical.terms().iter().all(|t| !t.coeff.is_positive()) {
            prop_assert!(g.integral() <= rint(0));
        }
        // |integral| <= max|g| * sum of support volumes, exactly.
        let bound: Rat = g.sup_abs()
            * g.terms().iter().map(|t| t.support.volume()).sum::<Rat>();
        prop_assert!(g.integral().abs() <= bound);
    }

    #[test]
    fn combine_is_pointwise_linear(
        g1 in step_function_strategy(),
        g2 in step_function_strategy(),
        a in -4i64..=4,
        b in -4i64..=4,
        px in dyadic(6),
        py in dyadic(6),
    ) {
        let combined = StepFunction::combine(&rint(a), &g1, &rint(b), &g2).unwrap();
        let x = vec![px, py];
        let expected = rint(a) * g1.evaluate(&x).unwrap() + rint(b) * g2.evaluate(&x).unwrap();
        prop_assert_eq!(combined.evaluate(&x).unwrap(), expected);
        prop_assert_eq!(
            combined.integral(),
            rint(a) * g1.integral() + rint(b) * g2.integral()
        );
    }

    #[test]
    fn tiling_is_a_pointwise_partition(
        m in 1usize..6,
        px in dyadic(7),
        py in dyadic(7),
    ) {
        let tiling = uniform_tiling(&unit_square(), m).unwrap();
        let x = vec![px, py];
        let holders = tiling.cells().iter().filter(|c| c.contains_point(&x)).count();
        prop_assert_eq!(holders, 1);
        let idx = tiling.cell_index_of(&x).unwrap();
        prop_assert!(tiling.cells()[idx].contains_point(&x));
    }

    #[test]
    fn refinement_is_additive(bricks in proptest::collection::vec(brick_in_unit_square(), 0..4)) {
        let ambient = unit_square();
        let grid = common_refinement(&bricks, &ambient).unwrap();
        let total: Rat = grid.indices().map(|i| grid.cell(&i).volume()).sum();
        prop_assert_eq!(total, rint(1));
        // Every input brick is exactly the union of its cells.
        for (j, b) in bricks.iter().enumerate() {
            let vol: Rat = grid
                .indices()
                .filter(|i| grid.cell_in_input(i, j))
                .map(|i| grid.cell(&i).volume())
                .sum();
            prop_assert_eq!(vol, b.volume());
        }
    }
}

// ---------------------------------------------------------------------------
// DSL round-trip property

fn expr_strategy() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0i64..=40, 1i64..=9).prop_map(|(p, q)| Expr::num(rat(p, q))),
        (0usize..3).prop_map(Expr::Var),
    ];
    leaf.prop_recursive(5, 64, 3, |inner| {
        prop_oneof![
            (inner.clone()).prop_map(|e| Expr::Neg(Box::new(e))),
            (
                prop_oneof![
                    Just(BinOp::Add),
                    Just(BinOp::Sub),
                    Just(BinOp::Mul),
                    Just(BinOp::Div)
                ],
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b))),
            (
                prop_oneof![Just(Func::Sin), Just(Func::Cos), Just(Func::Abs)],
                inner.clone()
            )
                .prop_map(|(f, a)| Expr::Call(f, vec![a])),
            (
                prop_oneof![Just(Func::Min), Just(Func::Max)],
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(f, a, b)| Expr::Call(f, vec![a, b])),
            (
                prop_oneof![
                    Just(CmpOp::Le),
                    Just(CmpOp::Lt),
                    Just(CmpOp::Ge),
                    Just(CmpOp::Gt),
                    Just(CmpOp::Eq),
                    Just(CmpOp::Ne)
                ],
                inner.clone(),
                inner.clone(),
                inner.clone(),
                inner
            )
                .prop_map(|(op, lhs, rhs, then, otherwise)| Expr::If {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                    then: Box::new(then),
                    otherwise: Box::new(otherwise),
                }),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn dsl_round_trip(e in expr_strategy()) {
        let printed = dsl::print(&e);
        let reparsed = dsl::parse(&printed, 0)
            .map_err(|err| TestCaseError::fail(format!("{err} while reparsing {printed:?}")))?;
        prop_assert_eq!(reparsed, e, "printed form: {}", printed);
    }
}
