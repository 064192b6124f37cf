use proptest::prelude::*;
use radon_weights::field::{lie_bracket, VectorField};
use radon_weights::scalar::int;
use radon_weights::{QJet, QPolynomial, Rational};

/// A polynomial in `nvars` variables with small integer coefficients.
fn poly(nvars: usize, max_deg: u32) -> impl Strategy<Value = QPolynomial> {
    prop::collection::vec((prop::collection::vec(0..=max_deg, nvars), -3i64..=3), 0..5)
        .prop_map(move |terms| QPolynomial::from_terms(nvars, terms.into_iter().map(|(e, c)| (e, int(c)))).unwrap())
}

fn jet() -> impl Strategy<Value = QJet> {
    // one parameter, two series variables, order 3
    poly(3, 3).prop_map(|p| QJet::from_poly(p, 1, 3))
}

fn field() -> impl Strategy<Value = VectorField<Rational>> {
    prop::collection::vec(poly(2, 2), 2).prop_map(|c| VectorField::new(c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn jet_ring_laws(a in jet(), b in jet(), c in jet()) {
        prop_assert_eq!(a.mul(&b).unwrap().mul(&c).unwrap(), a.mul(&b.mul(&c).unwrap()).unwrap());
        prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
        prop_assert_eq!(a.mul(&b.add(&c).unwrap()).unwrap(), a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap());
        prop_assert!(a.sub(&a).unwrap().is_zero());
    }

    #[test]
    fn truncation_is_a_ring_map(a in jet(), b in jet()) {
        let lhs = a.mul(&b).unwrap().truncate(2);
        let rhs = a.truncate(2).mul(&b.truncate(2)).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn product_rule_in_t(a in jet(), b in jet()) {
        // ∂_t (ab) = a ∂_t b + b ∂_t a, compared below the top order
        let lhs = a.mul(&b).unwrap().partial_t(0).unwrap().truncate(2);
        let rhs = a.mul(&b.partial_t(0).unwrap()).unwrap().add(&b.mul(&a.partial_t(0).unwrap()).unwrap()).unwrap().truncate(2);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn bracket_is_antisymmetric_and_satisfies_jacobi(x in field(), y in field(), z in field()) {
        let xy = lie_bracket(&x, &y).unwrap();
        prop_assert!(xy.add(&lie_bracket(&y, &x).unwrap()).is_zero());
        let j = lie_bracket(&x, &lie_bracket(&y, &z).unwrap()).unwrap()
            .add(&lie_bracket(&y, &lie_bracket(&z, &x).unwrap()).unwrap())
            .add(&lie_bracket(&z, &xy).unwrap());
        prop_assert!(j.is_zero());
    }

    #[test]
    fn bracket_is_a_derivation_on_functions(x in field(), y in field(), f in poly(2, 3)) {
        // [X,Y] f = X(Y f) − Y(X f)
        let lhs = lie_bracket(&x, &y).unwrap().apply(&f).unwrap();
        let rhs = x.apply(&y.apply(&f).unwrap()).unwrap().checked_sub(&y.apply(&x.apply(&f).unwrap()).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }
}
