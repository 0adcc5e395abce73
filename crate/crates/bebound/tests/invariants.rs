//! Property-based invariants: structural identities that must hold for
//! every valid input, checked on randomized distributions and parameters.

use num_complex::Complex64;
use proptest::prelude::*;

use bebound::cf_core::{signed_power_eval, CharFn, DiscreteDist};
use bebound::filters::SmoothingFilter;
use bebound::oracle::delta_profile;
use bebound::pv_transform::{g_transform, SymmetryClass};
use bebound::{cdf_bounds, fix_correction};

// ---------------------------------------------------------------------------
// strategies
// ---------------------------------------------------------------------------

/// A finite distribution with 2..=4 distinct atoms and strictly positive
/// masses summing to one.
fn arb_dist() -> impl Strategy<Value = DiscreteDist> {
    (
        -3.0..-0.3f64,
        prop::collection::vec(0.2..1.5f64, 1..=3),
        prop::collection::vec(0.05..1.0f64, 4),
    )
        .prop_map(|(x0, gaps, raw_w)| {
            let mut xs = vec![x0];
            for g in gaps {
                xs.push(xs.last().unwrap() + g);
            }
            let m = xs.len();
            let total: f64 = raw_w[..m].iter().sum();
            DiscreteDist::new(xs.into_iter().zip(raw_w[..m].iter().map(|w| w / total)))
                .expect("atoms are distinct and masses positive")
        })
}

/// A distribution symmetric about the origin: mirrored atom pairs with
/// equal masses, plus an optional atom at zero.
fn arb_symmetric_dist() -> impl Strategy<Value = DiscreteDist> {
    (
        prop::collection::vec((0.2..3.0f64, 0.05..1.0f64), 1..=2),
        0.0..0.6f64,
    )
        .prop_map(|(half, w0)| {
            let mut atoms: Vec<(f64, f64)> = Vec::new();
            let mut x_prev = 0.0;
            let mut total = w0;
            let mut mirrored = Vec::new();
            for (gap, w) in half {
                x_prev += gap;
                mirrored.push((x_prev, w));
                total += 2.0 * w;
            }
            if w0 > 0.0 {
                atoms.push((0.0, w0 / total));
            }
            for (x, w) in mirrored {
                atoms.push((x, w / total));
                atoms.push((-x, w / total));
            }
            DiscreteDist::new(atoms).expect("mirrored atoms are valid")
        })
}

// ---------------------------------------------------------------------------
// cheap atom-sum identities: many cases
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Negating the variable flips the signed functionals by the documented
    /// signs: L picks up (-1)^(k+1), the two spectral transforms (-1)^k.
    #[test]
    fn parity_identities_hold(
        d in arb_dist(),
        k in 1u32..=3,
        x in -3.0..3.0f64,
        t in -5.0..5.0f64,
    ) {
        let neg = d.negate();
        let f = signed_power_eval(&d, k);
        let fn_ = signed_power_eval(&neg, k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let l_lhs = fn_.signed_tail_moment(x);
        let l_rhs = -sign * f.signed_tail_moment(-x);
        prop_assert!((l_lhs - l_rhs).abs() <= 1e-13 * (1.0 + l_lhs.abs()));
        let fh = (fn_.partial_transform(t) - sign * f.partial_transform(-t)).norm();
        prop_assert!(fh <= 1e-13 * (1.0 + fn_.partial_transform(t).norm()));
        let gh = (fn_.capped_transform(t) - sign * f.capped_transform(-t)).norm();
        prop_assert!(gh <= 1e-13 * (1.0 + fn_.capped_transform(t).norm()));
    }

    /// The swap-error terms scale exactly as T^{-p}, and the atom-exact
    /// form never exceeds the lazy moment form.
    #[test]
    fn fix_correction_scaling_and_order(
        d in arb_dist(),
        p in prop::sample::select(vec![0.25, 0.5, 1.0, 1.5, 2.0]),
        x in 0.1..4.0f64,
        t_max in 1.0..20.0f64,
    ) {
        let k = 3u32;
        let one = fix_correction(&d, k, p, x, t_max).unwrap();
        let two = fix_correction(&d, k, p, x, 2.0 * t_max).unwrap();
        prop_assert!(one.exact_term <= one.moment_min_term + 1e-15);
        let want = 0.5f64.powf(p);
        if one.exact_term > 0.0 {
            prop_assert!((two.exact_term / one.exact_term - want).abs() < 1e-12);
            prop_assert!(
                (two.moment_min_term / one.moment_min_term - want).abs() < 1e-12
            );
        } else {
            // no negative mass: both terms vanish at every T
            prop_assert!(one.moment_min_term == 0.0 && two.exact_term == 0.0);
        }
    }

    /// Standardization is affine-invariant, so the normal-gap profile of
    /// a*X + b matches the profile of X exactly.
    #[test]
    fn delta_profile_is_scale_invariant(
        d in arb_dist(),
        a in 0.2..3.0f64,
        b in -2.0..2.0f64,
        n in 1u32..=4,
    ) {
        // skip (nearly) degenerate bases, which cannot be standardized
        prop_assume!(d.variance() > 1e-6);
        let grid: Vec<f64> = (0..9).map(|i| 0.5 * i as f64).collect();
        let p1 = delta_profile(&d, n, &grid, "base").unwrap();
        let scaled = d.affine(a, b).unwrap();
        let p2 = delta_profile(&scaled, n, &grid, "scaled").unwrap();
        prop_assert!((p1.beta3 - p2.beta3).abs() <= 1e-10 * p1.beta3);
        for (r1, r2) in p1.rows.iter().zip(p2.rows.iter()) {
            prop_assert!((r1.delta - r2.delta).abs() <= 1e-11);
        }
    }
}

// ---------------------------------------------------------------------------
// quadrature-backed identities: fewer cases
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// The sandwich is ordered and contains the exact one-sided values.
    #[test]
    fn cdf_sandwich_contains_exact_cdf(
        d in arb_dist(),
        x in -4.0..4.0f64,
        t_max in 2.0..20.0f64,
    ) {
        let cf = CharFn::from_discrete(&d);
        let b = cdf_bounds(&cf, x, t_max, 1e-9).unwrap();
        prop_assert!(b.lower <= b.upper);
        prop_assert!(b.lower <= d.prob_lt(x) + 1e-9);
        prop_assert!(d.prob_le(x) <= b.upper + 1e-9);
    }

    /// The principal-value transform is linear in the weight, within the
    /// reported quadrature errors.
    #[test]
    fn transform_is_linear_in_the_weight(
        d1 in arb_dist(),
        d2 in arb_dist(),
        a in -2.0..2.0f64,
        c in -2.0..2.0f64,
        x in -3.0..3.0f64,
    ) {
        let t_max = 8.0;
        let tol = 1e-10;
        let filt = SmoothingFilter::standard();
        let m1 = |u: f64| Complex64::new(filt.real_part(u), 0.0);
        let cf1 = CharFn::from_discrete(&d1);
        let cf2 = CharFn::from_discrete(&d2);
        let w1 = |t: f64| cf1.eval(t);
        let w2 = |t: f64| cf2.eval(t);
        let combo = |t: f64| a * cf1.eval(t) + c * cf2.eval(t);
        let r1 = g_transform(&m1, &w1, t_max, x, tol, SymmetryClass::Hermitian).unwrap();
        let r2 = g_transform(&m1, &w2, t_max, x, tol, SymmetryClass::Hermitian).unwrap();
        let rc = g_transform(&m1, &combo, t_max, x, tol, SymmetryClass::Hermitian).unwrap();
        let budget = rc.abs_error_estimate
            + a.abs() * r1.abs_error_estimate
            + c.abs() * r2.abs_error_estimate
            + 1e-12;
        prop_assert!(
            (rc.value - (a * r1.value + c * r2.value)).abs() <= budget,
            "linearity off by {} with budget {}",
            (rc.value - (a * r1.value + c * r2.value)).abs(),
            budget
        );
    }

    /// For a distribution symmetric about the origin, reflecting the
    /// evaluation point swaps the two sandwich curves: lower(-x) and
    /// 1 - upper(x) coincide up to quadrature error.
    #[test]
    fn symmetric_dists_swap_sandwich_curves(
        d in arb_symmetric_dist(),
        x in 0.0..3.0f64,
        t_max in 4.0..16.0f64,
    ) {
        let cf = CharFn::from_discrete(&d);
        let at_neg = cdf_bounds(&cf, -x, t_max, 1e-10).unwrap();
        let at_pos = cdf_bounds(&cf, x, t_max, 1e-10).unwrap();
        let gap = (at_neg.lower - (1.0 - at_pos.upper)).abs();
        let budget = at_neg.quad_error + at_pos.quad_error + 1e-11;
        prop_assert!(gap <= budget, "curve swap off by {gap}, budget {budget}");
    }
}

// ---------------------------------------------------------------------------
// fixed engineering properties
// ---------------------------------------------------------------------------

/// The spectral envelope constant is finite only for exponents up to 2
/// (the kernel decays quadratically), so steeper corrections are rejected.
#[test]
fn correction_exponents_above_two_are_rejected() {
    let d = DiscreteDist::rademacher();
    assert!(fix_correction(&d, 3, 2.75, 1.0, 10.0).is_err());
    assert!(fix_correction(&d, 3, 2.0, 1.0, 10.0).is_ok());
}

/// Raising the truncation point tightens the normal sandwich.
#[test]
fn normal_sandwich_width_shrinks_with_t() {
    let cf = CharFn::standard_normal();
    for &x in &[-2.0, -0.5, 0.0, 1.0, 3.0] {
        let wide = cdf_bounds(&cf, x, 10.0, 1e-9).unwrap();
        let tight = cdf_bounds(&cf, x, 30.0, 1e-9).unwrap();
        assert!(
            tight.width <= wide.width,
            "x = {x}: width {} at T = 30 above {} at T = 10",
            tight.width,
            wide.width
        );
    }
}
