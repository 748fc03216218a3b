//! Exact Gaussian-integer matrices and the correspondence between code vectors and
//! tensor products of Pauli matrices.
//!
//! `phi_inv` sends `[lambda, xi_1, ..., xi_m]` to `i^lambda * P(xi_1) (x) ... (x) P(xi_m)`
//! with `P(0) = I`, `P(1) = iX`, `P(w) = iZ`, `P(w^2) = ZX`, where the first coordinate
//! is the leftmost Kronecker factor. `phi` inverts it by peeling off one 2x2 factor per
//! level of the block structure.

use std::collections::HashSet;
use std::fmt;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::f4::{enumerate_space, hr_orthogonal_f4, CodeVector, F4Error, F4};

pub type GaussInt = Complex<i64>;

const ZERO: GaussInt = Complex { re: 0, im: 0 };
const ONE: GaussInt = Complex { re: 1, im: 0 };
const I: GaussInt = Complex { re: 0, im: 1 };

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PauliError {
    #[error("matrix dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("matrix dimension {0} exceeds 2^{max}", max = crate::f4::MAX_M)]
    TooLarge(usize),
    #[error("not in the transversal: Kronecker factor {factor} is not one of I, iX, iZ, ZX")]
    BadFactor { factor: usize },
    #[error("not in the transversal: overall phase {phase} is not 1 or i")]
    BadPhase { phase: String },
    #[error("shape mismatch: {0}x{0} vs {1}x{1}")]
    Shape(usize, usize),
    #[error(transparent)]
    F4(#[from] F4Error),
}

/// A square matrix of Gaussian integers, stored row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GaussMatrix {
    dim: usize,
    data: Vec<GaussInt>,
}

impl GaussMatrix {
    pub fn zeros(dim: usize) -> GaussMatrix {
        GaussMatrix { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> GaussMatrix {
        let mut m = GaussMatrix::zeros(dim);
        for k in 0..dim {
            m.data[k * dim + k] = ONE;
        }
        m
    }

    pub fn scalar(c: GaussInt) -> GaussMatrix {
        GaussMatrix { dim: 1, data: vec![c] }
    }

    /// Builds from rows of `(re, im)` pairs.
    pub fn from_rows(rows: &[&[(i64, i64)]]) -> GaussMatrix {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            assert_eq!(r.len(), dim, "matrix must be square");
            data.extend(r.iter().map(|&(a, b)| Complex::new(a, b)));
        }
        GaussMatrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> GaussInt {
        self.data[r * self.dim + c]
    }

    pub fn entries(&self) -> &[GaussInt] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.is_zero())
    }

    pub fn kron(&self, other: &GaussMatrix) -> GaussMatrix {
        let (a, b) = (self.dim, other.dim);
        let n = a * b;
        let mut out = GaussMatrix::zeros(n);
        for i in 0..a {
            for j in 0..a {
                let s = self.get(i, j);
                if s.is_zero() {
                    continue;
                }
                for k in 0..b {
                    for l in 0..b {
                        out.data[(i * b + k) * n + j * b + l] = s * other.get(k, l);
                    }
                }
            }
        }
        out
    }

    pub fn matmul(&self, other: &GaussMatrix) -> Result<GaussMatrix, PauliError> {
        if self.dim != other.dim {
            return Err(PauliError::Shape(self.dim, other.dim));
        }
        let n = self.dim;
        let mut out = GaussMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let s = self.get(i, k);
                if s.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += s * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn plus(&self, other: &GaussMatrix) -> Result<GaussMatrix, PauliError> {
        if self.dim != other.dim {
            return Err(PauliError::Shape(self.dim, other.dim));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(GaussMatrix { dim: self.dim, data })
    }

    pub fn scale(&self, c: GaussInt) -> GaussMatrix {
        GaussMatrix { dim: self.dim, data: self.data.iter().map(|z| z * c).collect() }
    }

    pub fn neg(&self) -> GaussMatrix {
        self.scale(Complex::new(-1, 0))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> GaussMatrix {
        let n = self.dim;
        let mut out = GaussMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.get(i, j).conj();
            }
        }
        out
    }

    fn block(&self, bi: usize, bj: usize) -> GaussMatrix {
        let h = self.dim / 2;
        let mut out = GaussMatrix::zeros(h);
        for i in 0..h {
            for j in 0..h {
                out.data[i * h + j] = self.get(bi * h + i, bj * h + j);
            }
        }
        out
    }

    pub fn to_complex(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.dim, self.dim, |r, c| {
            let z = self.get(r, c);
            Complex64::new(z.re as f64, z.im as f64)
        })
    }
}

impl fmt::Debug for GaussMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> = (0..self.dim)
            .map(|r| (0..self.dim).map(|c| gauss_to_string(self.get(r, c))).collect())
            .collect();
        write!(f, "{rows:?}")
    }
}

impl Serialize for GaussMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> = (0..self.dim)
            .map(|r| (0..self.dim).map(|c| gauss_to_string(self.get(r, c))).collect())
            .collect();
        rows.serialize(s)
    }
}

fn gauss_to_string(z: GaussInt) -> String {
    match (z.re, z.im) {
        (a, 0) => a.to_string(),
        (0, b) => format!("{b}i"),
        (a, b) if b < 0 => format!("{a}{b}i"),
        (a, b) => format!("{a}+{b}i"),
    }
}

pub fn pauli_x() -> GaussMatrix {
    GaussMatrix::from_rows(&[&[(0, 0), (1, 0)], &[(1, 0), (0, 0)]])
}

pub fn pauli_z() -> GaussMatrix {
    GaussMatrix::from_rows(&[&[(1, 0), (0, 0)], &[(0, 0), (-1, 0)]])
}

/// The 2x2 factor attached to one F4 coordinate.
pub fn psi_inv(x: F4) -> GaussMatrix {
    match x {
        F4::Zero => GaussMatrix::identity(2),
        F4::One => GaussMatrix::from_rows(&[&[(0, 0), (0, 1)], &[(0, 1), (0, 0)]]),
        F4::Omega => GaussMatrix::from_rows(&[&[(0, 1), (0, 0)], &[(0, 0), (0, -1)]]),
        F4::OmegaSq => GaussMatrix::from_rows(&[&[(0, 0), (1, 0)], &[(-1, 0), (0, 0)]]),
    }
}

/// The weight matrix indexed by a code vector.
pub fn phi_inv(v: &CodeVector) -> GaussMatrix {
    let mut out = GaussMatrix::scalar(if v.lambda() { I } else { ONE });
    for x in v.xis() {
        out = out.kron(&psi_inv(x));
    }
    out
}

/// Recovers the code vector of a matrix in the transversal, or reports which factor or
/// phase rules it out.
pub fn phi(t: &GaussMatrix) -> Result<CodeVector, PauliError> {
    let n = t.dim();
    if n == 0 || !n.is_power_of_two() {
        return Err(PauliError::NotPowerOfTwo(n));
    }
    let m = n.trailing_zeros() as usize;
    if m > crate::f4::MAX_M as usize {
        return Err(PauliError::TooLarge(n));
    }
    let mut xi = Vec::with_capacity(m);
    let mut cur = t.clone();
    for factor in 1..=m {
        let (b00, b01, b10, b11) = (cur.block(0, 0), cur.block(0, 1), cur.block(1, 0), cur.block(1, 1));
        let (x, rep) = if b01.is_zero() && b10.is_zero() && !b00.is_zero() {
            if b11 == b00 {
                (F4::Zero, b00)
            } else if b11 == b00.neg() {
                (F4::Omega, b00)
            } else {
                return Err(PauliError::BadFactor { factor });
            }
        } else if b00.is_zero() && b11.is_zero() && !b01.is_zero() {
            if b10 == b01 {
                (F4::One, b01)
            } else if b10 == b01.neg() {
                (F4::OmegaSq, b01)
            } else {
                return Err(PauliError::BadFactor { factor });
            }
        } else {
            return Err(PauliError::BadFactor { factor });
        };
        // Divide out the unit that sits in the representative block of the factor.
        let unit = match x {
            F4::Zero | F4::OmegaSq => ONE,
            F4::One | F4::Omega => I,
        };
        cur = rep.scale(unit.conj());
        xi.push(x);
    }
    let c = cur.get(0, 0);
    let lambda = if c == ONE {
        false
    } else if c == I {
        true
    } else {
        return Err(PauliError::BadPhase { phase: gauss_to_string(c) });
    };
    Ok(CodeVector::new(lambda, &xi)?)
}

pub fn is_hermitian(t: &GaussMatrix) -> bool {
    t.adjoint() == *t
}

/// Whether `a^H b + b^H a = 0`.
pub fn hr_orthogonal_matrix(a: &GaussMatrix, b: &GaussMatrix) -> Result<bool, PauliError> {
    let s = a.adjoint().matmul(b)?.plus(&b.adjoint().matmul(a)?)?;
    Ok(s.is_zero())
}

fn kron_all(factors: &[GaussMatrix]) -> GaussMatrix {
    factors.iter().fold(GaussMatrix::identity(1), |acc, f| acc.kron(f))
}

/// The `2m` pairwise anticommuting generators `E_1, ..., E_2m` whose products, times
/// `i^lambda`, give the transversal up to sign.
pub fn clifford_generators(m: usize) -> Vec<GaussMatrix> {
    let x = pauli_x();
    let z = pauli_z();
    let ixz = x.matmul(&z).unwrap().scale(I);
    let id = GaussMatrix::identity(2);
    let mut gens = vec![GaussMatrix::identity(1); 2 * m];
    for s in 0..m {
        let mut a = Vec::with_capacity(m);
        let mut b = Vec::with_capacity(m);
        for pos in 0..m {
            let (fa, fb) = match pos.cmp(&s) {
                std::cmp::Ordering::Less => (z.clone(), z.clone()),
                std::cmp::Ordering::Equal => (ixz.clone(), x.clone()),
                std::cmp::Ordering::Greater => (id.clone(), id.clone()),
            };
            a.push(fa);
            b.push(fb);
        }
        gens[s] = kron_all(&a).scale(I);
        gens[s + m] = kron_all(&b).scale(I);
    }
    gens
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct BasisReport {
    pub m: usize,
    pub transversal_size: usize,
    pub expected_size: usize,
    /// Exact rank of the transversal over the reals.
    pub real_rank: usize,
    pub expected_rank: usize,
    /// Size of the transversal together with its negatives.
    pub signed_size: usize,
    pub expected_signed_size: usize,
    /// Whether the signed transversal equals `{±i^l B_1 (x) ... (x) B_m : B in {I, X, Z, iXZ}}`.
    pub matches_pauli_group: bool,
    /// Whether `±i^l` times products of the generators reproduce the signed transversal.
    pub matches_generator_products: bool,
    pub passed: bool,
}

/// Checks that the transversal is a real basis of all `2^m x 2^m` complex matrices and
/// that it and its negatives form the Pauli group generated as above.
pub fn verify_basis(m: usize) -> Result<BasisReport, PauliError> {
    let space = enumerate_space(m)?;
    let mats: Vec<GaussMatrix> = space.iter().map(phi_inv).collect();
    let n = 1usize << m;

    let rows: Vec<Vec<i64>> = mats
        .iter()
        .map(|t| t.entries().iter().map(|z| z.re).chain(t.entries().iter().map(|z| z.im)).collect())
        .collect();
    let real_rank = integer_rank(&rows);

    let signed: HashSet<GaussMatrix> = mats.iter().flat_map(|t| [t.clone(), t.neg()]).collect();

    let x = pauli_x();
    let z = pauli_z();
    let basic = [GaussMatrix::identity(2), x.clone(), z.clone(), x.matmul(&z).unwrap().scale(I)];
    let mut group = HashSet::new();
    for code in 0..(1usize << (2 * m)) {
        let factors: Vec<GaussMatrix> = (0..m).map(|k| basic[(code >> (2 * k)) & 3].clone()).collect();
        let p = kron_all(&factors);
        for unit in [ONE, I, -ONE, -I] {
            group.insert(p.scale(unit));
        }
    }

    let gens = clifford_generators(m);
    let mut products = HashSet::new();
    for mask in 0..(1usize << (2 * m)) {
        let mut p = GaussMatrix::identity(n);
        for (k, g) in gens.iter().enumerate() {
            if mask >> k & 1 == 1 {
                p = p.matmul(g)?;
            }
        }
        for unit in [ONE, I, -ONE, -I] {
            products.insert(p.scale(unit));
        }
    }

    let expected_size = 1usize << (2 * m + 1);
    let expected_signed_size = 1usize << (2 * m + 2);
    let matches_pauli_group = group == signed;
    let matches_generator_products = products == signed;
    let passed = mats.len() == expected_size
        && real_rank == expected_size
        && signed.len() == expected_signed_size
        && matches_pauli_group
        && matches_generator_products;
    Ok(BasisReport {
        m,
        transversal_size: mats.len(),
        expected_size,
        real_rank,
        expected_rank: 2 * n * n,
        signed_size: signed.len(),
        expected_signed_size,
        matches_pauli_group,
        matches_generator_products,
        passed,
    })
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub m: usize,
    /// Ordered pairs checked; all of them when `exhaustive`.
    pub pairs: u64,
    pub exhaustive: bool,
    /// Pairs where `A^H B + B^H A = 0` agrees with odd weight of `u + v`.
    pub orthogonality_agreements: u64,
    pub vectors: u64,
    /// Vectors where Hermitian agrees with even weight.
    pub hermitian_agreements: u64,
    pub passed: bool,
}

/// Compares the matrix-side conditions with the weight conditions over the transversal:
/// every ordered pair when `samples` is `None`, otherwise that many seeded random pairs.
pub fn verify_equivalence(m: usize, samples: Option<(u64, u64)>) -> Result<EquivalenceReport, PauliError> {
    let space = enumerate_space(m)?;
    let mats: Vec<GaussMatrix> = space.iter().map(phi_inv).collect();
    let hermitian_agreements = space.iter().zip(&mats).filter(|(v, t)| v.is_even() == is_hermitian(t)).count() as u64;
    let pairs: Vec<(usize, usize)> = match samples {
        None => (0..space.len()).flat_map(|a| (0..space.len()).map(move |b| (a, b))).collect(),
        Some((count, seed)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count).map(|_| (rng.random_range(0..space.len()), rng.random_range(0..space.len()))).collect()
        }
    };
    let mut orthogonality_agreements = 0;
    for &(a, b) in &pairs {
        if hr_orthogonal_matrix(&mats[a], &mats[b])? == hr_orthogonal_f4(&space[a], &space[b])? {
            orthogonality_agreements += 1;
        }
    }
    let (n_pairs, vectors) = (pairs.len() as u64, space.len() as u64);
    Ok(EquivalenceReport {
        m,
        pairs: n_pairs,
        exhaustive: samples.is_none(),
        orthogonality_agreements,
        vectors,
        hermitian_agreements,
        passed: orthogonality_agreements == n_pairs && hermitian_agreements == vectors,
    })
}

/// Exact rank of an integer matrix by fraction-free elimination.
pub fn integer_rank(rows: &[Vec<i64>]) -> usize {
    let mut a: Vec<Vec<BigInt>> = rows.iter().map(|r| r.iter().map(|&v| BigInt::from(v)).collect()).collect();
    let nrows = a.len();
    let ncols = a.first().map_or(0, |r| r.len());
    let mut prev = BigInt::from(1);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(p) = (rank..nrows).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        let pivot = a[rank][col].clone();
        for r in rank + 1..nrows {
            let f = a[r][col].clone();
            for c in col + 1..ncols {
                let v = (&a[r][c] * &pivot - &f * &a[rank][c]) / &prev;
                a[r][c] = v;
            }
            a[r][col] = BigInt::zero();
        }
        prev = pivot;
        rank += 1;
        if rank == nrows {
            break;
        }
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(s: &str) -> CodeVector {
        s.parse().unwrap()
    }

    #[test]
    fn single_factor_images() {
        assert_eq!(phi_inv(&cv("0|0")), GaussMatrix::identity(2));
        assert_eq!(phi_inv(&cv("0|W")), GaussMatrix::from_rows(&[&[(0, 0), (1, 0)], &[(-1, 0), (0, 0)]]));
        assert_eq!(phi_inv(&cv("1|")), GaussMatrix::scalar(I));
        assert_eq!(phi_inv(&cv("0|1w")), psi_inv(F4::One).kron(&psi_inv(F4::Omega)));
    }

    #[test]
    fn inverse_round_trip_small() {
        for m in 0..=2 {
            for v in enumerate_space(m).unwrap() {
                assert_eq!(phi(&phi_inv(&v)).unwrap(), v);
            }
        }
    }

    #[test]
    fn negative_identity_is_rejected_by_phase() {
        let err = phi(&GaussMatrix::identity(2).neg()).unwrap_err();
        assert_eq!(err, PauliError::BadPhase { phase: "-1".into() });
    }

    #[test]
    fn bad_factor_is_named() {
        let t = GaussMatrix::identity(2).kron(&GaussMatrix::from_rows(&[&[(1, 0), (1, 0)], &[(0, 0), (1, 0)]]));
        assert_eq!(phi(&t).unwrap_err(), PauliError::BadFactor { factor: 2 });
        assert_eq!(phi(&GaussMatrix::zeros(3)).unwrap_err(), PauliError::NotPowerOfTwo(3));
    }

    #[test]
    fn generators_for_one_coordinate() {
        let g = clifford_generators(1);
        let zx = psi_inv(F4::OmegaSq);
        assert_eq!(g[0], zx);
        assert_eq!(g[1], psi_inv(F4::One));
    }

    #[test]
    fn generators_anticommute_and_square_to_minus_identity() {
        for m in 1..=3 {
            let g = clifford_generators(m);
            let n = 1 << m;
            for a in 0..g.len() {
                assert_eq!(g[a].matmul(&g[a]).unwrap(), GaussMatrix::identity(n).neg());
                for b in a + 1..g.len() {
                    let s = g[a].matmul(&g[b]).unwrap().plus(&g[b].matmul(&g[a]).unwrap()).unwrap();
                    assert!(s.is_zero());
                }
            }
        }
    }

    #[test]
    fn rank_of_small_matrices() {
        assert_eq!(integer_rank(&[vec![1, 2], vec![2, 4]]), 1);
        assert_eq!(integer_rank(&[vec![0, 0], vec![0, 0]]), 0);
        assert_eq!(integer_rank(&[vec![0, 3, 1], vec![2, 0, 1], vec![2, 3, 2]]), 2);
        assert_eq!(integer_rank(&[vec![2, 1], vec![1, 3]]), 2);
    }

    #[test]
    fn basis_for_small_m() {
        for m in 0..=2 {
            let r = verify_basis(m).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn weight_conditions_match_small_m() {
        let r = verify_equivalence(1, None).unwrap();
        assert_eq!((r.pairs, r.vectors), (64, 8));
        assert!(r.passed);
        let r = verify_equivalence(2, Some((500, 3))).unwrap();
        assert!(r.passed && !r.exhaustive);
    }
}
