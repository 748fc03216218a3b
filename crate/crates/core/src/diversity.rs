//! Full-diversity checks and constellation builders.
//!
//! A design with real constellations `A_1, ..., A_K` has full diversity when every
//! difference of distinct codewords is nonsingular. Codeword differences are exactly the
//! sums `sum_i d_i A_i` with each `d_i` drawn from the difference set of `A_i`, so the
//! check enumerates those patterns (one per sign pair) instead of codeword pairs; this
//! covers every pair.
//!
//! A determinant counts as nonzero when `|det| > tol * s^N`, where `s` is the largest
//! entry magnitude of the difference matrix.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::Design;
use crate::pauli::{GaussMatrix, phi_inv};

pub const DEFAULT_TOL: f64 = 1e-9;
/// Largest number of codewords accepted by [`verify_full_diversity`].
pub const MAX_CODEWORDS: u128 = 1 << 16;
/// Largest number of partial difference matrices kept while building.
pub const MAX_PATTERNS: usize = 1 << 21;
const MAX_CANDIDATES: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiversityError {
    #[error("expected {expected} symbol constellations, got {got}")]
    SymbolCount { expected: usize, got: usize },
    #[error("symbol {0} has an empty constellation")]
    Empty(usize),
    #[error("symbol {0} has repeated constellation points")]
    Repeated(usize),
    #[error("{count} codewords exceed the limit of {limit}")]
    TooManyCodewords { count: u128, limit: u128 },
    #[error("{count} difference patterns exceed the limit of {limit}")]
    TooManyPatterns { count: u128, limit: usize },
    #[error("symbols {a} and {b} violate A_i^H A_j + A_j^H A_i = 2 delta_ij I")]
    NotHurwitzRadon { a: usize, b: usize },
    #[error("symbol index {0} is out of range")]
    BadSymbol(usize),
    #[error("fixed values of symbol {0} lose full diversity")]
    FixedValuesFail(usize),
    #[error("no admissible point found for symbol {0} within {MAX_CANDIDATES} candidates")]
    NoCandidate(usize),
    #[error("constellation sizes must be at least 1")]
    BadSize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointSource {
    /// Chosen point by point so every new codeword pair stays nonsingular.
    Greedy,
    /// Regular PAM, unit average energy.
    RegularPam,
    /// Supplied by the caller.
    Given,
}

/// Real constellation for each symbol of a design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    pub values: Vec<Vec<f64>>,
    pub sources: Vec<PointSource>,
}

impl Constellation {
    pub fn given(values: Vec<Vec<f64>>) -> Constellation {
        let sources = vec![PointSource::Given; values.len()];
        Constellation { values, sources }
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.values.iter().map(|v| v.len()).collect()
    }

    pub fn codewords(&self) -> u128 {
        self.values.iter().map(|v| v.len() as u128).product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub passed: bool,
    pub tolerance: f64,
    pub codewords: u128,
    /// Unordered pairs of distinct codewords covered.
    pub pairs: u128,
    /// Difference patterns evaluated (one per sign pair).
    pub patterns: u64,
    pub min_abs_det: f64,
    pub min_scaled_det: f64,
    /// Point indices (zero-based) of a pair attaining the minimum.
    pub worst_pair: Option<(Vec<usize>, Vec<usize>)>,
}

fn dense(mats: &[GaussMatrix]) -> Vec<DMatrix<Complex64>> {
    mats.iter().map(|m| m.to_complex()).collect()
}

/// `|det|` and `|det| / s^N` for a difference matrix.
fn scaled_det(m: &DMatrix<Complex64>) -> (f64, f64) {
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return (0.0, 0.0);
    }
    let d = m.clone().determinant().norm();
    (d, d / scale.powi(m.nrows() as i32))
}

/// Distinct differences `a_p - a_q` of one constellation with a witness `(p, q)`,
/// zero first.
fn differences(points: &[f64]) -> Vec<(f64, usize, usize)> {
    let mut out: Vec<(f64, usize, usize)> = vec![(0.0, 0, 0)];
    for (p, &x) in points.iter().enumerate() {
        for (q, &y) in points.iter().enumerate() {
            let d = x - y;
            if p != q && !out.iter().any(|e| e.0 == d) {
                out.push((d, p, q));
            }
        }
    }
    out
}

fn check_points(values: &[Vec<f64>], k: usize) -> Result<(), DiversityError> {
    if values.len() != k {
        return Err(DiversityError::SymbolCount { expected: k, got: values.len() });
    }
    for (i, v) in values.iter().enumerate() {
        if v.is_empty() {
            return Err(DiversityError::Empty(i + 1));
        }
        if (0..v.len()).any(|a| (a + 1..v.len()).any(|b| v[a] == v[b])) {
            return Err(DiversityError::Repeated(i + 1));
        }
    }
    Ok(())
}

/// Checks every pair of distinct codewords for a nonsingular difference.
pub fn verify_full_diversity(d: &Design, c: &Constellation, tol: f64) -> Result<Certificate, DiversityError> {
    check_points(&c.values, d.k())?;
    let codewords = c.codewords();
    if codewords > MAX_CODEWORDS {
        return Err(DiversityError::TooManyCodewords { count: codewords, limit: MAX_CODEWORDS });
    }
    let mats = dense(&d.weight_matrices());
    let diffs: Vec<Vec<(f64, usize, usize)>> = c.values.iter().map(|v| differences(v)).collect();
    let radices: Vec<usize> = diffs.iter().map(|v| v.len()).collect();
    let total: u128 = radices.iter().map(|&r| r as u128).product();
    let n = d.antennas();

    let decode = |mut idx: u64| -> Vec<usize> {
        radices
            .iter()
            .map(|&r| {
                let digit = (idx % r as u64) as usize;
                idx /= r as u64;
                digit
            })
            .collect()
    };
    // The negation of a pattern has the same |det|, so keep patterns whose first nonzero
    // difference is positive.
    let best = (1..total as u64)
        .into_par_iter()
        .filter_map(|idx| {
            let digits = decode(idx);
            let first = digits.iter().enumerate().find(|(_, &g)| g != 0).map(|(i, &g)| diffs[i][g].0)?;
            if first < 0.0 {
                return None;
            }
            let mut m = DMatrix::<Complex64>::zeros(n, n);
            for (i, &g) in digits.iter().enumerate() {
                if g != 0 {
                    m += &mats[i] * Complex64::new(diffs[i][g].0, 0.0);
                }
            }
            let (abs, scaled) = scaled_det(&m);
            Some((scaled, abs, idx))
        })
        .map(|t| (t, 1u64))
        .reduce(
            || ((f64::INFINITY, f64::INFINITY, 0), 0),
            |a, b| {
                let keep = if b.0 .0 < a.0 .0 || (b.0 .0 == a.0 .0 && b.0 .2 < a.0 .2) { b.0 } else { a.0 };
                (keep, a.1 + b.1)
            },
        );
    let ((min_scaled, min_abs, idx), patterns) = best;
    let worst_pair = (patterns > 0).then(|| {
        let digits = decode(idx);
        let u = digits.iter().enumerate().map(|(i, &g)| if g == 0 { 0 } else { diffs[i][g].1 }).collect();
        let v = digits.iter().enumerate().map(|(i, &g)| if g == 0 { 0 } else { diffs[i][g].2 }).collect();
        (u, v)
    });
    let (min_scaled, min_abs) = if patterns == 0 { (f64::INFINITY, f64::INFINITY) } else { (min_scaled, min_abs) };
    Ok(Certificate {
        passed: min_scaled > tol,
        tolerance: tol,
        codewords,
        pairs: codewords * (codewords - 1) / 2,
        patterns,
        min_abs_det: min_abs,
        min_scaled_det: min_scaled,
        worst_pair,
    })
}

/// Regular PAM with `q` points and unit average energy.
pub fn regular_pam(q: usize) -> Vec<f64> {
    if q <= 1 {
        return vec![0.0; q];
    }
    let s = (3.0 / ((q * q - 1) as f64)).sqrt();
    (0..q).map(|k| (2.0 * k as f64 - q as f64 + 1.0) * s).collect()
}

/// Regular PAM values for the chosen symbols (zero-based), after checking exactly that
/// their weight matrices satisfy `A_i^H A_j + A_j^H A_i = 2 delta_ij I`.
pub fn regular_pam_assignment(d: &Design, symbols: &[usize], q: usize) -> Result<Vec<(usize, Vec<f64>)>, DiversityError> {
    if q == 0 {
        return Err(DiversityError::BadSize);
    }
    if let Some(&bad) = symbols.iter().find(|&&s| s >= d.k()) {
        return Err(DiversityError::BadSymbol(bad + 1));
    }
    let mats: Vec<GaussMatrix> = symbols.iter().map(|&s| phi_inv(&d.vectors()[s])).collect();
    let two = GaussMatrix::identity(d.antennas()).scale(num_complex::Complex::new(2, 0));
    for i in 0..mats.len() {
        for j in i..mats.len() {
            let s = mats[i].adjoint().matmul(&mats[j]).and_then(|x| x.plus(&mats[j].adjoint().matmul(&mats[i])?));
            let ok = match s {
                Ok(s) if i == j => s == two,
                Ok(s) => s.is_zero(),
                Err(_) => false,
            };
            if !ok {
                return Err(DiversityError::NotHurwitzRadon { a: symbols[i] + 1, b: symbols[j] + 1 });
            }
        }
    }
    Ok(symbols.iter().map(|&s| (s, regular_pam(q))).collect())
}

/// Low-discrepancy candidate points in `[-2, 2]`: a seeded rotation of the golden-ratio
/// sequence, rounded to multiples of `2^-18`.
struct Candidates {
    shift: f64,
    t: u64,
}

impl Candidates {
    fn new(seed: u64, symbol: usize) -> Candidates {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(symbol as u64));
        Candidates { shift: rng.random::<f64>(), t: 0 }
    }
}

impl Iterator for Candidates {
    type Item = f64;
    fn next(&mut self) -> Option<f64> {
        const G: f64 = 0.618_033_988_749_894_9;
        self.t += 1;
        let u = (self.shift + self.t as f64 * G).fract();
        Some(-2.0 + 4.0 * (u * (1u64 << 18) as f64).round() / (1u64 << 18) as f64)
    }
}

/// Builds constellations of the given sizes with full diversity, one point at a time.
///
/// Symbols listed in `fixed` keep their values and are placed first; every other point
/// is the first candidate that keeps all codeword differences involving it nonsingular.
/// The result is re-verified before it is returned.
pub fn build_constellations(
    d: &Design,
    q: &[usize],
    seed: u64,
    fixed: &[(usize, Vec<f64>)],
    tol: f64,
) -> Result<(Constellation, Certificate), DiversityError> {
    let k = d.k();
    if q.len() != k {
        return Err(DiversityError::SymbolCount { expected: k, got: q.len() });
    }
    if q.iter().any(|&x| x == 0) {
        return Err(DiversityError::BadSize);
    }
    let count: u128 = q.iter().map(|&x| x as u128).product();
    if count > MAX_CODEWORDS {
        return Err(DiversityError::TooManyCodewords { count, limit: MAX_CODEWORDS });
    }
    let mut values: Vec<Vec<f64>> = vec![vec![]; k];
    let mut sources = vec![PointSource::Greedy; k];
    let mut order: Vec<usize> = vec![];
    for (s, v) in fixed {
        if *s >= k {
            return Err(DiversityError::BadSymbol(s + 1));
        }
        if v.len() != q[*s] {
            return Err(DiversityError::SymbolCount { expected: q[*s], got: v.len() });
        }
        order.push(*s);
    }
    let rest: Vec<usize> = (0..k).filter(|i| !order.contains(i)).collect();
    order.extend(rest);

    let mats = dense(&d.weight_matrices());
    let n = d.antennas();
    let mut prefix: Vec<DMatrix<Complex64>> = vec![DMatrix::zeros(n, n)];
    for &s in &order {
        let given = fixed.iter().find(|(f, _)| *f == s).map(|(_, v)| v.clone());
        let mut cand = Candidates::new(seed, s);
        for p in 0..q[s] {
            let ok = |z: f64, placed: &[f64]| -> bool {
                placed.iter().all(|&a| {
                    if a == z {
                        return false;
                    }
                    let step = &mats[s] * Complex64::new(z - a, 0.0);
                    prefix.par_iter().all(|m| scaled_det(&(m + &step)).1 > tol)
                })
            };
            let z = match &given {
                Some(v) => {
                    if !ok(v[p], &values[s]) {
                        return Err(DiversityError::FixedValuesFail(s + 1));
                    }
                    v[p]
                }
                None => (&mut cand).take(MAX_CANDIDATES).find(|&z| ok(z, &values[s])).ok_or(DiversityError::NoCandidate(s + 1))?,
            };
            values[s].push(z);
        }
        if given.is_some() {
            sources[s] = if fixed.iter().any(|(f, v)| *f == s && *v == regular_pam(q[s])) { PointSource::RegularPam } else { PointSource::Given };
        }
        let diffs: Vec<f64> = differences(&values[s]).into_iter().skip(1).map(|t| t.0).collect();
        let grown = prefix.len() as u128 * (diffs.len() as u128 + 1);
        if grown > MAX_PATTERNS as u128 && s != *order.last().expect("non-empty") {
            return Err(DiversityError::TooManyPatterns { count: grown, limit: MAX_PATTERNS });
        }
        let mut next = prefix.clone();
        for m in &prefix {
            for &df in &diffs {
                next.push(m + &mats[s] * Complex64::new(df, 0.0));
            }
        }
        prefix = next;
    }
    let c = Constellation { values, sources };
    let cert = verify_full_diversity(d, &c, tol)?;
    Ok((c, cert))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{alamouti, two_by_two};

    /// Direct enumeration of codeword pairs.
    fn brute_min(d: &Design, c: &Constellation) -> f64 {
        let mats = dense(&d.weight_matrices());
        let cw: Vec<Vec<usize>> = {
            let mut all = vec![vec![]];
            for v in &c.values {
                all = all.into_iter().flat_map(|p| (0..v.len()).map(move |i| [p.clone(), vec![i]].concat())).collect();
            }
            all
        };
        let word = |ix: &[usize]| {
            let mut m = DMatrix::<Complex64>::zeros(d.antennas(), d.antennas());
            for (i, &p) in ix.iter().enumerate() {
                m += &mats[i] * Complex64::new(c.values[i][p], 0.0);
            }
            m
        };
        let mut best = f64::INFINITY;
        for a in 0..cw.len() {
            for b in a + 1..cw.len() {
                best = best.min(scaled_det(&(word(&cw[a]) - word(&cw[b]))).1);
            }
        }
        best
    }

    #[test]
    fn pam_values() {
        let v = regular_pam(4);
        let e: f64 = v.iter().map(|x| x * x).sum::<f64>() / 4.0;
        assert!((e - 1.0).abs() < 1e-12);
        assert_eq!(regular_pam(2), vec![-1.0, 1.0]);
    }

    #[test]
    fn pattern_check_matches_pairwise_enumeration() {
        let d = two_by_two(1).unwrap();
        let c = Constellation::given(vec![vec![-1.0, 0.5, 1.0], vec![-1.0, 1.0], vec![0.0, 0.3], vec![-1.0, 1.0]]);
        let cert = verify_full_diversity(&d, &c, DEFAULT_TOL).unwrap();
        assert!((cert.min_scaled_det - brute_min(&d, &c)).abs() < 1e-12);
    }

    #[test]
    fn pam_everywhere_on_diagonal_code_is_singular() {
        let d = two_by_two(1).unwrap();
        let c = Constellation::given(vec![regular_pam(2); 4]);
        let cert = verify_full_diversity(&d, &c, DEFAULT_TOL).unwrap();
        assert!(!cert.passed);
        assert!(cert.min_abs_det < 1e-12);
    }

    #[test]
    fn builder_is_deterministic_and_full_diversity() {
        let d = alamouti();
        let (a, ca) = build_constellations(&d, &[2; 4], 11, &[], DEFAULT_TOL).unwrap();
        let (b, _) = build_constellations(&d, &[2; 4], 11, &[], DEFAULT_TOL).unwrap();
        assert_eq!(a, b);
        assert!(ca.passed);
    }

    #[test]
    fn errors() {
        let d = alamouti();
        assert!(matches!(verify_full_diversity(&d, &Constellation::given(vec![vec![1.0]; 3]), 1e-9), Err(DiversityError::SymbolCount { .. })));
        assert!(matches!(verify_full_diversity(&d, &Constellation::given(vec![vec![1.0, 1.0]; 4]), 1e-9), Err(DiversityError::Repeated(1))));
        assert!(matches!(build_constellations(&d, &[1 << 5; 4], 0, &[], 1e-9), Err(DiversityError::TooManyCodewords { .. })));
        let k = two_by_two(0).unwrap();
        assert_eq!(regular_pam_assignment(&k, &[0, 1], 2).unwrap_err(), DiversityError::NotHurwitzRadon { a: 1, b: 2 });
    }

    #[test]
    fn single_symbol_design() {
        let d = Design::new(1, vec!["0|1".parse().unwrap()], vec![vec![0]], "one").unwrap();
        let c = Constellation::given(vec![vec![-0.3, 0.9, 2.0]]);
        assert!(verify_full_diversity(&d, &c, DEFAULT_TOL).unwrap().passed);
    }
}
