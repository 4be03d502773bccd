use std::collections::BTreeMap;

use num::complex::Complex64;
use num::BigRational;
use proptest::prelude::*;

use obstruction::expr::{Expr, Gen};
use obstruction::jet::{jet_arith, Jet, JetOp};

fn coeff() -> impl Strategy<Value = Expr> {
    prop::collection::vec(((-4i64..=4, 1i64..=3), -1i32..=1, 0i32..=1), 1..3).prop_map(|terms| {
        terms
            .into_iter()
            .fold(Expr::zero(), |acc, ((n, d), ea, ex)| {
                acc + Expr::monomial(
                    BigRational::new(n.into(), d.into()),
                    vec![(Gen::A(1), ea), (Gen::Xi(1), ex)],
                )
            })
    })
}

fn unit_coeff() -> impl Strategy<Value = Expr> {
    (prop_oneof![-3i64..=-1, 1i64..=3], -1i32..=1).prop_map(|(n, e)| {
        Expr::monomial(BigRational::from_integer(n.into()), vec![(Gen::A(1), e)])
    })
}

fn jet_with(
    order: usize,
    c0: BoxedStrategy<Expr>,
    c1: BoxedStrategy<Expr>,
) -> impl Strategy<Value = Jet> {
    (c0, c1, prop::collection::vec(coeff(), order - 1)).prop_map(move |(c0, c1, rest)| {
        let mut coeffs = vec![c0, c1];
        coeffs.extend(rest);
        Jet::new(1, order, coeffs).unwrap()
    })
}

fn any_jet(order: usize) -> impl Strategy<Value = Jet> {
    jet_with(order, coeff().boxed(), coeff().boxed())
}

fn unit_jet(order: usize) -> impl Strategy<Value = Jet> {
    jet_with(order, unit_coeff().boxed(), coeff().boxed())
}

fn zero_constant_jet(order: usize) -> impl Strategy<Value = Jet> {
    jet_with(order, Just(Expr::zero()).boxed(), coeff().boxed())
}

fn invertible_jet(order: usize) -> impl Strategy<Value = Jet> {
    jet_with(order, Just(Expr::zero()).boxed(), unit_coeff().boxed())
}

fn env() -> BTreeMap<Gen, Complex64> {
    [
        (Gen::A(1), Complex64::new(1.5, 0.25)),
        (Gen::Xi(1), Complex64::new(-0.4, 0.7)),
    ]
    .into_iter()
    .collect()
}

fn numeric(j: &Jet) -> Vec<Complex64> {
    j.coeffs()
        .iter()
        .map(|c| c.evaluate(&env(), Complex64::new(0.0, 0.0)).unwrap())
        .collect()
}

fn sum_at(c: &[Complex64], t: Complex64) -> Complex64 {
    c.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &x| acc * t + x)
}

fn truncated_product(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    (0..a.len())
        .map(|m| (0..=m).map(|i| a[i] * b[m - i]).sum())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn ring_laws((a, b, c) in (1usize..=4).prop_flat_map(|n| (any_jet(n), any_jet(n), any_jet(n)))) {
        let ab = a.mul(&b).unwrap();
        prop_assert_eq!(ab.clone(), b.mul(&a).unwrap());
        prop_assert_eq!(ab.mul(&c).unwrap(), a.mul(&b.mul(&c).unwrap()).unwrap());
        prop_assert_eq!(
            a.mul(&b.add(&c).unwrap()).unwrap(),
            ab.add(&a.mul(&c).unwrap()).unwrap()
        );
    }

    #[test]
    fn division_undoes_multiplication((a, u) in (1usize..=4).prop_flat_map(|n| (any_jet(n), unit_jet(n)))) {
        let q = jet_arith(JetOp::Div, &a, &u).unwrap();
        prop_assert_eq!(q.mul(&u).unwrap(), a);
    }

    #[test]
    fn composition_is_associative(
        (f, g, h) in (1usize..=4).prop_flat_map(|n| (any_jet(n), zero_constant_jet(n), zero_constant_jet(n)))
    ) {
        let left = f.compose(&g).unwrap().compose(&h).unwrap();
        let right = f.compose(&g.compose(&h).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn series_inversion_round_trips(f in (1usize..=4).prop_flat_map(invertible_jet)) {
        let g = f.invert_series(2).unwrap();
        prop_assert!(f.compose(&g).unwrap().is_identity());
        prop_assert!(g.compose(&f).unwrap().retag(1).is_identity());
    }

    #[test]
    fn evaluation_commutes_with_arithmetic(
        (a, b, u) in (1usize..=4).prop_flat_map(|n| (any_jet(n), any_jet(n), unit_jet(n))),
        t in prop::sample::select(vec![1e-2, 1e-3]),
    ) {
        let t = Complex64::new(t, 0.0);
        let (na, nb, nu) = (numeric(&a), numeric(&b), numeric(&u));
        let rel = |got: Complex64, want: Complex64| (got - want).norm() <= 1e-8 * want.norm().max(1.0);

        let sum = sum_at(&numeric(&a.add(&b).unwrap()), t);
        prop_assert!(rel(sum, sum_at(&na, t) + sum_at(&nb, t)));

        let prod = sum_at(&numeric(&a.mul(&b).unwrap()), t);
        prop_assert!(rel(prod, sum_at(&truncated_product(&na, &nb), t)));

        let quotient = numeric(&a.div(&u).unwrap());
        let back = sum_at(&truncated_product(&quotient, &nu), t);
        prop_assert!(rel(back, sum_at(&na, t)));
    }
}
