use betaop_core::field::rat;
use betaop_core::transfer::{apply_koopman, apply_transfer, greedy_expand};
use betaop_core::{BetaParams, PiecewisePoly, Polynomial, QuadNum};
use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_traits::{Signed, Zero};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = BetaParams> {
    (1i64..=5)
        .prop_flat_map(|a0| (Just(a0), 1..=a0))
        .prop_map(|(a0, a1)| BetaParams::new(a0, a1).unwrap())
}

fn rational() -> impl Strategy<Value = (i64, i64)> {
    (-60i64..=60, 1i64..=24)
}

fn quad(params: BetaParams) -> impl Strategy<Value = QuadNum> {
    (rational(), rational()).prop_map(move |((n1, d1), (n2, d2))| QuadNum::new(rat(n1, d1), rat(n2, d2), params))
}

fn unit_point(params: BetaParams) -> impl Strategy<Value = QuadNum> {
    quad(params).prop_map(|x| x.fract())
}

fn poly(params: BetaParams) -> impl Strategy<Value = Polynomial> {
    prop::collection::vec(quad(params), 1..=4).prop_map(move |c| Polynomial::new(c, params))
}

fn piecewise(params: BetaParams) -> impl Strategy<Value = PiecewisePoly> {
    (prop::collection::vec(unit_point(params), 0..=3), prop::collection::vec(poly(params), 4)).prop_map(
        move |(mut cuts, polys)| {
            cuts.retain(|c| !c.is_zero());
            cuts.sort_by(|a, b| a.cmp_exact(b));
            cuts.dedup();
            let mut bps = vec![QuadNum::zero(params)];
            bps.extend(cuts);
            bps.push(QuadNum::one(params));
            let pieces = polys.into_iter().take(bps.len() - 1).collect();
            PiecewisePoly::new(bps, pieces).unwrap()
        },
    )
}

fn with_params<T: std::fmt::Debug, S: Strategy<Value = T>>(
    f: impl Fn(BetaParams) -> S + Clone + 'static,
) -> impl Strategy<Value = (BetaParams, T)> {
    params().prop_flat_map(move |p| (Just(p), f(p)))
}

/// Sign of `p + q beta` from a scaled integer square root of the discriminant.
/// `None` when the approximation cannot decide.
fn sign_oracle(x: &QuadNum) -> Option<i32> {
    let params = x.params();
    let l = x.p().denom().lcm(x.q().denom());
    let scale = |r: &num_rational::BigRational| r.numer() * (&l / r.denom());
    let (p, q) = (scale(x.p()), scale(x.q()));
    // 2x = (2p + a0 q) + q sqrt(D)
    let u = &p * BigInt::from(2) + &q * BigInt::from(params.a0());
    let ten40 = BigInt::from(10).pow(40);
    let root: BigInt = Roots::sqrt(&(params.discriminant() * &ten40 * &ten40));
    let approx = &u * &ten40 + &q * &root;
    if approx.abs() <= q.abs() + 1 {
        return if u.is_zero() && q.is_zero() { Some(0) } else { None };
    }
    Some(if approx.is_positive() { 1 } else { -1 })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn field_axioms((_, (x, y, z)) in with_params(|p| (quad(p), quad(p), quad(p)))) {
        prop_assert_eq!(&x + &y, &y + &x);
        prop_assert_eq!(&x * &y, &y * &x);
        prop_assert_eq!(&(&x + &y) + &z, &x + &(&y + &z));
        prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
        prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
        prop_assert!((&x - &x).is_zero());
        if !x.is_zero() {
            prop_assert_eq!(&x * &x.recip(), QuadNum::one(x.params()));
            prop_assert_eq!(&(&y / &x) * &x, y.clone());
        }
    }

    #[test]
    fn sign_matches_integer_oracle((_, x) in with_params(quad)) {
        if let Some(s) = sign_oracle(&x) {
            prop_assert_eq!(x.signum(), s);
        }
    }

    #[test]
    fn floor_brackets_value((_, x) in with_params(quad)) {
        let m = QuadNum::from_rational(num_rational::BigRational::from_integer(x.floor()), x.params());
        let f = &x - &m;
        prop_assert!(f.signum() >= 0);
        prop_assert!(f < QuadNum::one(x.params()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn transfer_conserves_integral((_, f) in with_params(piecewise)) {
        prop_assert_eq!(apply_transfer(&f).unwrap().integrate(), f.integrate());
    }

    #[test]
    fn transfer_is_linear((p, (f, g, c)) in with_params(|p| (piecewise(p), piecewise(p), quad(p)))) {
        let lhs = apply_transfer(&f.add(&g.scale(&c)).unwrap()).unwrap();
        let rhs = apply_transfer(&f).unwrap().add(&apply_transfer(&g).unwrap().scale(&c)).unwrap();
        prop_assert!(lhs.equal_ae(&rhs), "linearity fails for {}", p);
    }

    #[test]
    fn transfer_is_dual_to_koopman((_, (f, g)) in with_params(|p| (piecewise(p), piecewise(p)))) {
        let lhs = apply_transfer(&f).unwrap().mul(&g).unwrap().integrate();
        let rhs = f.mul(&apply_koopman(&g).unwrap()).unwrap().integrate();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn sup_bracket_shrinks_under_doubling((_, f) in with_params(piecewise)) {
        let mut prev = f.sup_norm_estimate(4).unwrap();
        for s in [8, 16, 32, 64, 128] {
            let next = f.sup_norm_estimate(s).unwrap();
            prop_assert!(next.lower >= prev.lower);
            prop_assert!(next.upper - next.lower <= prev.upper - prev.lower + 1e-12 * prev.upper.max(1.0));
            prop_assert!(next.lower <= next.upper);
            prev = next;
        }
    }

    #[test]
    fn transfer_contracts_sup_norm((p, f) in with_params(piecewise)) {
        let g = apply_transfer(&f).unwrap();
        let factor = (p.a0() + 1) as f64 / p.beta_f64();
        let (sf, sg) = (f.sup_norm_estimate(64).unwrap(), g.sup_norm_estimate(64).unwrap());
        prop_assert!(sg.lower <= factor * sf.upper * (1.0 + 1e-12));
    }

    #[test]
    fn greedy_partial_sums_converge((p, x) in with_params(unit_point)) {
        let g = greedy_expand(&x, 20).unwrap();
        let err = &x - &g.partial_sum(20);
        prop_assert!(err.signum() >= 0);
        prop_assert!(err < QuadNum::beta_pow(p, -20));
    }
}
