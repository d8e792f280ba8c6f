//! Fixtures shared by the benchmarks.

use betaop_core::field::rat;
use betaop_core::{BetaParams, Builtin, PiecewisePoly, Polynomial, QuadNum};

/// Parameter pairs exercised by every benchmark group.
pub fn bench_params() -> [BetaParams; 3] {
    [
        BetaParams::golden(),
        BetaParams::new(2, 1).expect("valid"),
        BetaParams::new(3, 2).expect("valid"),
    ]
}

/// A three-piece cubic with a breakpoint off the invariant set.
pub fn cubic_fixture(params: BetaParams) -> PiecewisePoly {
    let q = |p: i64, d: i64, r: i64| QuadNum::new(rat(p, d), rat(r, 7), params);
    let cut = QuadNum::from_ratio(2, 5, params);
    let pieces = vec![
        Polynomial::new(vec![q(1, 2, 1), q(-3, 1, 0), q(2, 3, 2), q(1, 1, -1)], params),
        Polynomial::new(vec![q(-1, 3, 0), q(5, 2, 3)], params),
    ];
    PiecewisePoly::new(vec![QuadNum::zero(params), cut, QuadNum::one(params)], pieces).expect("valid fixture")
}

pub fn quadratic(params: BetaParams) -> PiecewisePoly {
    Builtin::Quadratic.exact(params).expect("polynomial builtin")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_well_formed() {
        for p in bench_params() {
            assert_eq!(cubic_fixture(p).piece_count(), 2);
            assert_eq!(quadratic(p).integrate(), QuadNum::one(p));
        }
    }
}
