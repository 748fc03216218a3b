use forge_core::decodability::finest_partition;
use forge_core::design::{Design, GroupValidity};
use forge_core::f4::{hr_orthogonal_f4, CodeVector, F4};
use forge_core::pauli::{hr_orthogonal_matrix, is_hermitian, phi, phi_inv};
use nalgebra::Complex;
use proptest::prelude::*;

fn f4() -> impl Strategy<Value = F4> {
    (0u8..4).prop_map(F4::from_bits)
}

fn vector(m: usize) -> impl Strategy<Value = CodeVector> {
    (0u32..(1 << (2 * m + 1))).prop_map(move |i| CodeVector::from_index(m, i).unwrap())
}

fn vector_any() -> impl Strategy<Value = CodeVector> {
    (0usize..=4).prop_flat_map(vector)
}

fn pair() -> impl Strategy<Value = (CodeVector, CodeVector)> {
    (1usize..=4).prop_flat_map(|m| (vector(m), vector(m)))
}

fn permutation(m: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((1..=m).collect::<Vec<_>>()).prop_shuffle()
}

/// A design on distinct vectors of one space, grouped by its finest partition.
fn design() -> impl Strategy<Value = Design> {
    (1usize..=3)
        .prop_flat_map(|m| (Just(m), proptest::collection::btree_set(0u32..(1 << (2 * m + 1)), 1..12)))
        .prop_map(|(m, idx)| {
            let v: Vec<CodeVector> = idx.into_iter().map(|i| CodeVector::from_index(m, i).unwrap()).collect();
            let k = v.len();
            let d = Design::new(m, v.clone(), vec![(0..k).collect()], "random").unwrap();
            Design::new(m, v, finest_partition(&d), "random").unwrap()
        })
}

proptest! {
    #[test]
    fn f4_addition_is_a_group(a in f4(), b in f4(), c in f4()) {
        prop_assert_eq!(a + b, b + a);
        prop_assert_eq!((a + b) + c, a + (b + c));
        prop_assert_eq!(a + F4::Zero, a);
        prop_assert_eq!(a + a, F4::Zero);
    }

    #[test]
    fn vector_addition_is_a_group((u, v) in pair()) {
        let zero = CodeVector::zero(u.m()).unwrap();
        prop_assert_eq!(u.add(&v).unwrap(), v.add(&u).unwrap());
        prop_assert_eq!(u.add(&zero).unwrap(), u);
        prop_assert_eq!(u.add(&u).unwrap(), zero);
    }

    #[test]
    fn phi_inverts_phi_inv(v in vector_any()) {
        prop_assert_eq!(phi(&phi_inv(&v)).unwrap(), v);
    }

    #[test]
    fn weight_tests_match_matrices((u, v) in pair()) {
        let (a, b) = (phi_inv(&u), phi_inv(&v));
        prop_assert_eq!(hr_orthogonal_matrix(&a, &b).unwrap(), hr_orthogonal_f4(&u, &v).unwrap());
        prop_assert_eq!(is_hermitian(&a), u.is_even());
    }

    #[test]
    fn permutation_preserves_weight_and_inverts(
        (v, sigma) in (1usize..=5).prop_flat_map(|m| (vector(m), permutation(m)))
    ) {
        let p = v.permute(&sigma).unwrap();
        prop_assert_eq!(p.weight(), v.weight());
        let mut inverse = vec![0; sigma.len()];
        for (i, &s) in sigma.iter().enumerate() {
            inverse[s - 1] = i + 1;
        }
        prop_assert_eq!(p.permute(&inverse).unwrap(), v);
    }

    #[test]
    fn text_form_round_trips(v in vector_any()) {
        prop_assert_eq!(v.to_string().parse::<CodeVector>().unwrap(), v);
    }

    #[test]
    fn design_json_round_trips(d in design()) {
        let text = d.to_json();
        prop_assert_eq!(Design::from_json(&text).unwrap(), d);
    }

    #[test]
    fn finest_partition_is_valid_and_idempotent(d in design()) {
        prop_assert_eq!(d.validate_g_group(), GroupValidity::Valid);
        prop_assert_eq!(finest_partition(&d), d.groups().to_vec());
    }

    #[test]
    fn materialize_is_linear(
        (d, x, y) in design().prop_flat_map(|d| {
            let k = d.k();
            (Just(d), proptest::collection::vec(-3.0f64..3.0, k), proptest::collection::vec(-3.0f64..3.0, k))
        }),
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
    ) {
        let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let lhs = d.materialize(&mix).unwrap();
        let rhs = d.materialize(&x).unwrap() * Complex::new(a, 0.0) + d.materialize(&y).unwrap() * Complex::new(b, 0.0);
        prop_assert!((lhs - rhs).norm() < 1e-9);
    }
}
