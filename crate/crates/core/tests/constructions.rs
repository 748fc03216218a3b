use std::collections::BTreeSet;

use forge_core::constructions::{self, abba_cycle, new_fgd_blocks, FgdParams, StepSpec};
use forge_core::decodability::{analyze, complexity, Regime, DEFAULT_BUDGET};
use forge_core::design::{Design, GroupValidity};
use forge_core::f4::{CodeVector, CosetTranslates, F4};
use nalgebra::{Complex, DMatrix};
use num_complex::Complex64;
use num_rational::Rational64;

/// Parses rows like `"x1 +ix2 | -x3 +ix4"` into the coefficient matrix of each symbol.
fn display(k: usize, rows: &[&str]) -> Vec<DMatrix<Complex64>> {
    let n = rows.len();
    let mut out = vec![DMatrix::zeros(n, n); k];
    for (r, row) in rows.iter().enumerate() {
        for (c, entry) in row.split('|').enumerate() {
            for tok in entry.split_whitespace() {
                let (sign, rest) = match tok.strip_prefix('-') {
                    Some(t) => (-1.0, t),
                    None => (1.0, tok.trim_start_matches('+')),
                };
                let (unit, rest) = match rest.strip_prefix('i') {
                    Some(t) => (Complex::new(0.0, sign), t),
                    None => (Complex::new(sign, 0.0), rest),
                };
                let idx: usize = rest.strip_prefix('x').unwrap().parse().unwrap();
                out[idx - 1][(r, c)] += unit;
            }
        }
    }
    out
}

fn unit(k: usize, i: usize) -> Vec<f64> {
    let mut x = vec![0.0; k];
    x[i] = 1.0;
    x
}

/// Each symbol's weight matrix equals the displayed one, up to sign when `signed`.
fn assert_matches(d: &Design, shown: &[DMatrix<Complex64>], signed: bool) {
    for (i, s) in shown.iter().enumerate() {
        let a = d.materialize(&unit(d.k(), i)).unwrap();
        let ok = (&a - s).norm() < 1e-12 || (signed && (&a + s).norm() < 1e-12);
        assert!(ok, "{}: symbol {} is {a} but displayed {s}", d.name(), i + 1);
    }
}

#[test]
fn two_by_two_displays() {
    let abba = display(4, &["x1 +ix4 | -x2 +ix3", "-x2 +ix3 | x1 +ix4"]);
    assert_matches(&constructions::two_by_two(0).unwrap(), &abba, false);
    let diag = display(4, &["x1 -x2 +ix4 +ix3 | ", " | x1 +x2 +ix4 -ix3"]);
    assert_matches(&constructions::two_by_two(1).unwrap(), &diag, false);
    let ab = display(4, &["x1 +ix3 | x4 +ix2", "-x4 -ix2 | x1 +ix3"]);
    assert_matches(&constructions::two_by_two(2).unwrap(), &ab, false);
}

#[test]
fn quasi_orthogonal_display() {
    let shown = display(
        8,
        &[
            "x1 +ix2 | x3 +ix4 | x5 +ix6 | x7 +ix8",
            "-x3 +ix4 | x1 -ix2 | -x7 +ix8 | x5 -ix6",
            "-x5 +ix6 | -x7 +ix8 | x1 -ix2 | x3 -ix4",
            "x7 +ix8 | -x5 -ix6 | -x3 -ix4 | x1 +ix2",
        ],
    );
    assert_matches(&constructions::quasi_orthogonal_4x4(), &shown, true);
}

#[test]
fn rate_two_display() {
    let shown = display(8, &["x1 +x2 +ix3 +ix4 | x5 +x6 +ix7 +ix8", "x5 -x6 +ix7 -ix8 | x1 -x2 +ix3 -ix4"]);
    assert_matches(&constructions::pavan_rate2_2x2(), &shown, true);
}

#[test]
fn alamouti_matrices() {
    let shown = display(4, &["x1 +ix3 | ix2 +x4", "ix2 -x4 | x1 -ix3"]);
    assert_matches(&constructions::alamouti(), &shown, false);
}

#[test]
fn square_od_identity() {
    for m in 1..=3 {
        let d = constructions::square_od(m).unwrap();
        assert_eq!(d.k(), 2 * m + 2);
        assert_eq!(d.rate(), Rational64::new(m as i64 + 1, 1 << m));
        for seed in 0..5 {
            let x: Vec<f64> = (0..d.k()).map(|i| ((i * 7 + seed * 13) % 11) as f64 / 3.0 - 1.5).collect();
            let xm = d.materialize(&x).unwrap();
            let s: f64 = x.iter().map(|v| v * v).sum();
            let expect = DMatrix::<Complex64>::identity(1 << m, 1 << m) * Complex::new(s, 0.0);
            assert!((xm.adjoint() * &xm - expect).norm() < 1e-12);
        }
    }
}

#[test]
fn square_od_one_is_alamouti_up_to_order() {
    let a: BTreeSet<CodeVector> = constructions::alamouti().vectors().iter().copied().collect();
    let s: BTreeSet<CodeVector> = constructions::square_od(1).unwrap().vectors().iter().copied().collect();
    let a_valid = constructions::alamouti().validate_g_group();
    assert_eq!(a_valid, GroupValidity::Valid);
    // Both are single-symbol decodable with four symbols; the vector sets may differ by translation.
    assert_eq!(a.len(), s.len());
    assert_eq!(constructions::square_od(1).unwrap().groups().len(), 4);
}

#[test]
fn abba_block_form() {
    // construction_a with l = 0 then moving the new coordinate outermost gives
    // [[X, -W], [-W, X]], with W's symbols free to change sign.
    let seed = constructions::two_by_two(0).unwrap();
    let d = constructions::permute(&constructions::construction_a(&seed, 0).unwrap(), &abba_cycle(2)).unwrap();
    let k = seed.k();
    for i in 0..k {
        let x = seed.materialize(&unit(k, i)).unwrap();
        let top = d.materialize(&unit(2 * k, i)).unwrap();
        let bottom = d.materialize(&unit(2 * k, k + i)).unwrap();
        let mut want_x = DMatrix::<Complex64>::zeros(4, 4);
        want_x.view_mut((0, 0), (2, 2)).copy_from(&x);
        want_x.view_mut((2, 2), (2, 2)).copy_from(&x);
        let mut want_w = DMatrix::<Complex64>::zeros(4, 4);
        want_w.view_mut((0, 2), (2, 2)).copy_from(&x);
        want_w.view_mut((2, 0), (2, 2)).copy_from(&x);
        assert!((top - want_x).norm() < 1e-12);
        assert!((&bottom + &want_w).norm() < 1e-12 || (bottom - want_w).norm() < 1e-12);
    }
}

#[test]
fn four_group_recursion_matches_quasi_orthogonal_shape() {
    use F4::*;
    let steps = [StepSpec::A { l: 0, sigma: None }, StepSpec::C { xi: [Zero, One, Omega, OmegaSq], sigma: None }];
    let d = constructions::four_group_recursive(2, &steps).unwrap();
    assert_eq!((d.k(), d.groups().len()), (8, 4));
    assert!(d.groups().iter().all(|g| g.len() == 2));
    assert_eq!(d.validate_g_group(), GroupValidity::Valid);
    let redundant = [StepSpec::A { l: 0, sigma: None }, StepSpec::C { xi: [Zero, Omega, One, OmegaSq], sigma: None }];
    let err = constructions::four_group_recursive(2, &redundant).unwrap_err();
    assert!(err.to_string().contains("column permutation"));
}

#[test]
fn g_group_examples() {
    let d = constructions::g_group(4, 1).unwrap();
    assert_eq!((d.antennas(), d.rate(), d.groups()[0].len()), (4, Rational64::from_integer(1), 2));
    let d = constructions::g_group(6, 0).unwrap();
    assert_eq!((d.antennas(), d.rate()), (4, Rational64::new(3, 4)));
    assert_eq!(constructions::g_group(5, 1).unwrap().rate(), Rational64::new(5, 8));
}

#[test]
fn fgd_coset_structure() {
    for m in 1..=4 {
        let (d, b) = new_fgd_blocks(&FgdParams::new(m, Rational64::new(5, 4))).unwrap();
        let t = CosetTranslates::new(m, F4::One, F4::Omega).unwrap();
        let v = |idx: &[usize]| -> BTreeSet<CodeVector> { idx.iter().map(|&i| d.vectors()[i]).collect() };
        let shift = |s: &BTreeSet<CodeVector>, by: &CodeVector| -> BTreeSet<CodeVector> { s.iter().map(|y| y.add(by).unwrap()).collect() };
        let a = v(&b.a);
        assert_eq!(v(&b.b), shift(&a, &t.gamma));
        assert_eq!(v(&b.c), shift(&a, &t.nu));
        assert_eq!(v(&b.d), shift(&a, &t.gamma.add(&t.nu).unwrap()));
        assert_eq!(v(&b.e), shift(&a, &t.delta));
        for x in &a {
            for y in &a {
                assert!(a.contains(&x.add(y).unwrap()));
            }
        }
        let all: BTreeSet<CodeVector> = d.vectors().iter().copied().collect();
        assert_eq!(all.len(), d.k());
        assert_eq!(d.k(), 5 << (m - 1));
    }
}

#[test]
fn fgd_17_8_declared_cost() {
    let d = constructions::fgd_17_8();
    assert_eq!(d.rate(), Rational64::new(17, 8));
    let node = d.structure().unwrap();
    assert_eq!(complexity(&d, node, Regime::Arbitrary).cost.to_string(), "5M^6 + M^0.5");
    let rep = analyze(&d, DEFAULT_BUDGET);
    assert!(rep.arbitrary.exponent == "6");
}

#[test]
fn rate_two_designs_are_fast_decodable() {
    for d in [constructions::pavan_rate2_2x2(), constructions::htw_pga()] {
        let rep = analyze(&d, DEFAULT_BUDGET);
        assert!(rep.fast_decodable, "{}", d.name());
        assert_eq!(rep.arbitrary.expression, "2M^3");
    }
    let all: BTreeSet<CodeVector> = constructions::htw_pga().vectors().iter().copied().collect();
    assert_eq!(all.len(), 8);
}
