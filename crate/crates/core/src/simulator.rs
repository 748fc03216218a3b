//! Monte Carlo checks on the real-valued system model `y = H x + n`.
//!
//! Column `i` of `H` stacks the real and imaginary parts of `vec(A_i H_c)` for a channel
//! `H_c` with i.i.d. CN(0, 1) entries. Every random draw comes from a ChaCha8 stream
//! seeded with `seed + trial`, so results are reproducible trial by trial.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::decodability::{check_structure, tree_cost, DecodeNode, StructureError};
use crate::design::Design;
use crate::diversity::{regular_pam, Constellation};

/// Largest flat search accepted by [`decode_count`].
pub const MAX_FLAT: u64 = 1 << 22;
/// Negative-control threshold for entries not claimed to vanish.
pub const CONTROL_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("channel has {got} rows, design needs {expected}")]
    ChannelShape { expected: usize, got: usize },
    #[error("column order is not a permutation of the symbols")]
    BadOrder,
    #[error("constellation size {0} is not a perfect square, so single real symbols cannot use square PAM")]
    NotSquare(u64),
    #[error("encoding group {0} has an odd number (> 1) of real symbols")]
    OddGroup(usize),
    #[error("flat search over {0} candidates exceeds the limit")]
    TooLarge(u128),
    #[error("signal set does not match the design's encoding groups")]
    SignalMismatch,
    #[error(transparent)]
    Structure(#[from] StructureError),
}

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial))
}

/// `n x nr` channel with i.i.d. CN(0, 1) entries.
pub fn draw_channel(rng: &mut impl Rng, n: usize, nr: usize) -> DMatrix<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_fn(n, nr, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * s, im * s)
    })
}

/// Real-equivalent channel, one column per symbol in index order.
pub fn real_equivalent(d: &Design, h: &DMatrix<Complex64>) -> Result<DMatrix<f64>, SimError> {
    let n = d.antennas();
    if h.nrows() != n {
        return Err(SimError::ChannelShape { expected: n, got: h.nrows() });
    }
    let rows = n * h.ncols();
    let mut out = DMatrix::<f64>::zeros(2 * rows, d.k());
    for (i, a) in d.weight_matrices().iter().enumerate() {
        let prod = a.to_complex() * h;
        for (r, z) in prod.iter().enumerate() {
            out[(r, i)] = z.re;
            out[(rows + r, i)] = z.im;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RFactor {
    /// Symbol placed in each column.
    pub order: Vec<usize>,
    pub r: DMatrix<f64>,
    /// More symbols than real observations, or a (numerically) zero pivot.
    pub rank_deficient: bool,
    /// Columns (positions in `order`) with a pivot below `1e-12` times the largest.
    pub small_pivots: Vec<usize>,
}

/// QR of the real-equivalent channel with columns in the given order.
pub fn r_factor(d: &Design, h: &DMatrix<Complex64>, order: &[usize]) -> Result<RFactor, SimError> {
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..d.k()).collect::<Vec<_>>() {
        return Err(SimError::BadOrder);
    }
    let full = real_equivalent(d, h)?;
    let cols: Vec<DVector<f64>> = order.iter().map(|&i| full.column(i).into_owned()).collect();
    let a = DMatrix::from_columns(&cols);
    let r = a.clone().qr().r();
    let diag: Vec<f64> = (0..r.nrows().min(r.ncols())).map(|i| r[(i, i)].abs()).collect();
    let top = diag.iter().cloned().fold(0.0, f64::max);
    let small_pivots: Vec<usize> = diag.iter().enumerate().filter(|(_, &v)| v <= 1e-12 * top.max(f64::MIN_POSITIVE)).map(|(i, _)| i).collect();
    Ok(RFactor { order: order.to_vec(), rank_deficient: a.nrows() < a.ncols() || !small_pivots.is_empty(), small_pivots, r })
}

#[derive(Debug, Clone, Serialize)]
pub struct RStructureReport {
    pub design: String,
    pub trials: u64,
    pub receivers: usize,
    pub tolerance: f64,
    pub claimed_pairs: usize,
    /// Largest `|r_lk| / ||h_k||` over claimed zeros and trials.
    pub max_claimed: f64,
    pub control_pairs: usize,
    /// Median of `|r_lk| / ||h_k||` over unclaimed upper-triangular entries.
    pub control_median: Option<f64>,
    pub rank_deficient_trials: u64,
    pub passed: bool,
    pub control_passed: Option<bool>,
}

/// Draws channels and checks that the entries of `R` claimed to vanish by the decoding
/// tree are below `tol` (relative to the column norm), and that the other entries are
/// not (a negative control against vacuous passes). Rank deficiency is reported but
/// does not fail the check: the zero pattern holds for every channel.
pub fn verify_r_structure(d: &Design, node: &DecodeNode, trials: u64, tol: f64, seed: u64, receivers: usize) -> Result<RStructureReport, SimError> {
    let order = node.column_order();
    let mut pos = vec![0; d.k()];
    for (p, &s) in order.iter().enumerate() {
        pos[s] = p;
    }
    let mut claimed = vec![vec![false; d.k()]; d.k()];
    for (a, b) in node.zero_pairs() {
        claimed[pos[a]][pos[b]] = true;
    }
    let claimed_pairs = node.zero_pairs().len();
    let mut max_claimed: f64 = 0.0;
    let mut control = vec![];
    let mut deficient = 0;
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let h = draw_channel(&mut rng, d.antennas(), receivers);
        let f = r_factor(d, &h, &order)?;
        if f.rank_deficient {
            deficient += 1;
        }
        let rows = f.r.nrows();
        for k in 0..d.k() {
            let norm = f.r.column(k).norm();
            for l in 0..k.min(rows) {
                let v = f.r[(l, k)].abs() / norm;
                if claimed[l][k] {
                    max_claimed = max_claimed.max(v);
                } else {
                    control.push(v);
                }
            }
        }
    }
    let control_pairs = control.len() / trials.max(1) as usize;
    let control_median = if control.is_empty() {
        None
    } else {
        control.sort_by(|a, b| a.total_cmp(b));
        Some(control[control.len() / 2])
    };
    Ok(RStructureReport {
        design: d.name().to_string(),
        trials,
        receivers,
        tolerance: tol,
        claimed_pairs,
        max_claimed,
        control_pairs,
        control_median,
        rank_deficient_trials: deficient,
        passed: max_claimed <= tol && control_median.is_none_or(|m| m > CONTROL_FLOOR),
        control_passed: control_median.map(|m| m > CONTROL_FLOOR),
    })
}

/// Finite signal set: for every encoding group, the list of joint values it can take.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSet {
    pub units: Vec<Vec<usize>>,
    pub points: Vec<Vec<Vec<f64>>>,
}

impl SignalSet {
    /// Independent real constellations, one per symbol.
    pub fn from_constellation(c: &Constellation) -> SignalSet {
        SignalSet {
            units: (0..c.values.len()).map(|i| vec![i]).collect(),
            points: c.values.iter().map(|v| v.iter().map(|&x| vec![x]).collect()).collect(),
        }
    }

    /// Signal set of size `M` per complex symbol: single real symbols take
    /// `sqrt(M)`-PAM; an encoding group of `2t` real symbols takes `t` rotated `M`-PSK
    /// symbols, mixed by a seeded orthogonal matrix when `t > 1`.
    pub fn for_size(d: &Design, m_size: u64, seed: u64) -> Result<SignalSet, SimError> {
        let units = d.encoding_groups();
        let mut points = vec![];
        for (u, grp) in units.iter().enumerate() {
            let n = grp.len();
            if n == 1 {
                let q = (m_size as f64).sqrt().round() as u64;
                if q * q != m_size {
                    return Err(SimError::NotSquare(m_size));
                }
                points.push(regular_pam(q as usize).into_iter().map(|x| vec![x]).collect());
                continue;
            }
            if n % 2 == 1 {
                return Err(SimError::OddGroup(u + 1));
            }
            let t = n / 2;
            let psk: Vec<(f64, f64)> = (0..m_size)
                .map(|k| {
                    let a = std::f64::consts::PI * (2.0 * k as f64 + 0.5) / m_size as f64;
                    (a.cos(), a.sin())
                })
                .collect();
            let mix = if t > 1 {
                let mut rng = trial_rng(seed, u as u64);
                let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
                g.qr().q()
            } else {
                DMatrix::identity(n, n)
            };
            let total = (m_size as usize).pow(t as u32);
            let mut list = Vec::with_capacity(total);
            for mut idx in 0..total {
                let mut v = DVector::<f64>::zeros(n);
                for s in 0..t {
                    let (re, im) = psk[idx % m_size as usize];
                    idx /= m_size as usize;
                    v[2 * s] = re;
                    v[2 * s + 1] = im;
                }
                list.push((&mix * v).iter().copied().collect());
            }
            points.push(list);
        }
        Ok(SignalSet { units, points })
    }

    fn flat_size(&self) -> u128 {
        self.points.iter().map(|p| p.len() as u128).product()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecodeCountReport {
    pub design: String,
    pub m_size: u64,
    pub trials: u64,
    pub receivers: usize,
    /// Metric evaluations of the conditional decoder per received word.
    pub conditional_evaluations: u64,
    /// Metric evaluations of exhaustive ML per received word.
    pub flat_evaluations: u64,
    /// Cost polynomial of the tree evaluated at `M`, when integral.
    pub predicted: Option<u64>,
    pub agreements: u64,
    pub passed: bool,
}

struct Decoder {
    unit_of: Vec<usize>,
    /// `contrib[u][p]`: received contribution of unit `u` taking point `p`.
    contrib: Vec<Vec<Vec<f64>>>,
    evaluations: u64,
}

impl Decoder {
    fn new(h: &DMatrix<f64>, set: &SignalSet, unit_of: Vec<usize>) -> Decoder {
        let contrib = set
            .units
            .iter()
            .zip(&set.points)
            .map(|(syms, pts)| {
                pts.iter()
                    .map(|p| {
                        let mut v = DVector::zeros(h.nrows());
                        for (&s, &x) in syms.iter().zip(p) {
                            v += h.column(s) * x;
                        }
                        v.as_slice().to_vec()
                    })
                    .collect()
            })
            .collect();
        Decoder { unit_of, contrib, evaluations: 0 }
    }

    fn units_in(&self, symbols: &[usize]) -> Vec<usize> {
        let mut u: Vec<usize> = symbols.iter().map(|&s| self.unit_of[s]).collect();
        u.sort_unstable();
        u.dedup();
        u
    }

    /// Depth-first walk over every joint choice for `units`, calling `f` with the
    /// choice and the squared norm of the residual left after subtracting it.
    fn walk(&self, units: &[usize], r: &[f64], f: &mut dyn FnMut(&[usize], f64)) {
        let mut choice = vec![0; units.len()];
        if units.is_empty() {
            f(&choice, r.iter().map(|v| v * v).sum());
            return;
        }
        let mut bufs = vec![r.to_vec(); units.len()];
        self.walk_from(0, units, &mut bufs, &mut choice, f);
    }

    fn walk_from(&self, depth: usize, units: &[usize], bufs: &mut [Vec<f64>], choice: &mut [usize], f: &mut dyn FnMut(&[usize], f64)) {
        let last = depth + 1 == units.len();
        for (p, c) in self.contrib[units[depth]].iter().enumerate() {
            choice[depth] = p;
            if last {
                let m = bufs[depth].iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                f(choice, m);
            } else {
                let (lo, hi) = bufs.split_at_mut(depth + 1);
                for ((o, a), b) in hi[0].iter_mut().zip(&lo[depth]).zip(c) {
                    *o = a - b;
                }
                self.walk_from(depth + 1, units, bufs, choice, f);
            }
        }
    }

    fn subtract(&self, units: &[usize], choice: &[usize], r: &[f64]) -> Vec<f64> {
        let mut out = r.to_vec();
        for (&u, &p) in units.iter().zip(choice) {
            for (o, c) in out.iter_mut().zip(&self.contrib[u][p]) {
                *o -= c;
            }
        }
        out
    }

    /// Minimum of `||r - H_S x_S||^2` over the subtree and the minimizing choices.
    fn solve(&mut self, node: &DecodeNode, r: &[f64]) -> (f64, Vec<(usize, usize)>) {
        match node {
            DecodeNode::Leaf(symbols) => {
                let units = self.units_in(symbols);
                let mut best = (f64::INFINITY, vec![]);
                let mut evals = 0;
                self.walk(&units, r, &mut |choice, m| {
                    evals += 1;
                    if m < best.0 {
                        best = (m, units.iter().copied().zip(choice.iter().copied()).collect());
                    }
                });
                self.evaluations += evals;
                best
            }
            DecodeNode::Split { conditioned, groups } => {
                let units = self.units_in(conditioned);
                let mut branches = vec![];
                self.walk(&units, r, &mut |choice, m| branches.push((choice.to_vec(), m)));
                let mut best = (f64::INFINITY, vec![]);
                for (choice, base) in branches {
                    let rest = self.subtract(&units, &choice, r);
                    let mut total = base;
                    let mut assign: Vec<(usize, usize)> = units.iter().copied().zip(choice).collect();
                    for g in groups {
                        let (m, a) = self.solve(g, &rest);
                        total += m - base;
                        assign.extend(a);
                    }
                    if total < best.0 {
                        best = (total, assign);
                    }
                }
                best
            }
        }
    }
}

/// Decodes noisy received words with the conditional decoder given by the tree and
/// with exhaustive ML, counting metric evaluations and checking that both pick the
/// same transmitted point. `m_size` is the per-complex-symbol constellation size used
/// to evaluate the tree's arbitrary-constellation cost.
pub fn decode_count(
    d: &Design,
    set: &SignalSet,
    node: &DecodeNode,
    m_size: u64,
    trials: u64,
    seed: u64,
    noise_var: f64,
) -> Result<DecodeCountReport, SimError> {
    check_structure(d, node)?;
    if set.units != d.encoding_groups() {
        return Err(SimError::SignalMismatch);
    }
    let flat = set.flat_size();
    if flat > MAX_FLAT as u128 {
        return Err(SimError::TooLarge(flat));
    }
    let mut unit_of = vec![0; d.k()];
    for (u, grp) in set.units.iter().enumerate() {
        for &s in grp {
            unit_of[s] = u;
        }
    }
    let receivers = d.antennas();
    let all_units: Vec<usize> = (0..set.units.len()).collect();
    let outcomes: Vec<(bool, u64)> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<(bool, u64), SimError> {
            let mut rng = trial_rng(seed, t);
            let hc = draw_channel(&mut rng, d.antennas(), receivers);
            let h = real_equivalent(d, &hc)?;
            let sent: Vec<usize> = set.points.iter().map(|p| rng.random_range(0..p.len())).collect();
            let mut dec = Decoder::new(&h, set, unit_of.clone());
            let mut y = vec![0.0; h.nrows()];
            for (u, &p) in sent.iter().enumerate() {
                for (o, c) in y.iter_mut().zip(&dec.contrib[u][p]) {
                    *o += c;
                }
            }
            for v in y.iter_mut() {
                let e: f64 = rng.sample(StandardNormal);
                *v += e * noise_var.sqrt();
            }

            let mut flat_best = (f64::INFINITY, vec![]);
            dec.walk(&all_units, &y, &mut |choice, m| {
                if m < flat_best.0 {
                    flat_best = (m, choice.to_vec());
                }
            });

            let (_, assign) = dec.solve(node, &y);
            let mut cond = vec![0; set.units.len()];
            for (u, p) in assign {
                cond[u] = p;
            }
            Ok((cond == flat_best.1, dec.evaluations))
        })
        .collect::<Result<_, _>>()?;
    let agreements = outcomes.iter().filter(|o| o.0).count() as u64;
    let conditional_evaluations = outcomes.iter().map(|o| o.1).max().unwrap_or(0);
    let predicted = tree_cost(node, &|_| false).eval_count(m_size);
    Ok(DecodeCountReport {
        design: d.name().to_string(),
        m_size,
        trials,
        receivers,
        conditional_evaluations,
        flat_evaluations: flat as u64,
        predicted,
        agreements,
        passed: agreements == trials && predicted == Some(conditional_evaluations),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions;
    use crate::decodability::{analyze, DEFAULT_BUDGET};

    #[test]
    fn alamouti_gram_is_diagonal() {
        let d = constructions::alamouti();
        let mut rng = trial_rng(1, 0);
        let h = draw_channel(&mut rng, 2, 1);
        let a = real_equivalent(&d, &h).unwrap();
        let g = a.transpose() * &a;
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(g[(i, j)].abs() < 1e-12, "{i},{j}: {}", g[(i, j)]);
                }
            }
        }
        let f = r_factor(&d, &h, &[0, 1, 2, 3]).unwrap();
        assert_eq!((f.r.nrows(), f.r.ncols()), (4, 4));
        assert!(!f.rank_deficient);
        let q = a.clone().qr().q();
        assert!((q * &f.r - a).norm() < 1e-10);
    }

    #[test]
    fn quasi_orthogonal_blocks() {
        let d = constructions::quasi_orthogonal_4x4();
        let mut rng = trial_rng(2, 0);
        let h = draw_channel(&mut rng, 4, 1);
        let order: Vec<usize> = d.groups().concat();
        let f = r_factor(&d, &h, &order).unwrap();
        for k in 0..8 {
            for l in 0..k {
                let same_block = l / 2 == k / 2;
                assert_eq!(f.r[(l, k)].abs() > 1e-9, same_block, "{l},{k}");
            }
        }
    }

    #[test]
    fn zero_channel_is_flagged() {
        let d = constructions::alamouti();
        let f = r_factor(&d, &DMatrix::zeros(2, 1), &[0, 1, 2, 3]).unwrap();
        assert!(f.rank_deficient);
        assert!(r_factor(&d, &DMatrix::zeros(3, 1), &[0, 1, 2, 3]).is_err());
        assert!(r_factor(&d, &DMatrix::zeros(2, 1), &[0, 1, 2, 2]).is_err());
    }

    #[test]
    fn claimed_zeros_hold_for_pavan() {
        let d = constructions::pavan_rate2_2x2();
        let rep = analyze(&d, DEFAULT_BUDGET);
        let r = verify_r_structure(&d, &rep.node, 20, 1e-9, 5, 1).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.claimed_pairs > 0);
    }

    #[test]
    fn same_seed_same_report() {
        let d = constructions::quasi_orthogonal_4x4();
        let rep = analyze(&d, DEFAULT_BUDGET);
        let a = verify_r_structure(&d, &rep.node, 5, 1e-9, 9, 1).unwrap();
        let b = verify_r_structure(&d, &rep.node, 5, 1e-9, 9, 1).unwrap();
        assert_eq!(a.max_claimed, b.max_claimed);
        assert_eq!(a.control_median, b.control_median);
    }

    #[test]
    fn conditional_matches_flat_and_count() {
        let d = constructions::htw_pga();
        let rep = analyze(&d, DEFAULT_BUDGET);
        let mut counts = vec![];
        for m in [2, 4] {
            let s = SignalSet::for_size(&d, m, 1).unwrap();
            let c = decode_count(&d, &s, &rep.node, m, 10, 3, 0.5).unwrap();
            assert!(c.passed, "{c:?}");
            counts.push(c.conditional_evaluations);
        }
        assert_eq!(counts[1], 8 * counts[0]);
    }

    #[test]
    fn alamouti_counts_per_symbol() {
        let d = constructions::alamouti();
        let rep = analyze(&d, DEFAULT_BUDGET);
        let s = SignalSet::for_size(&d, 4, 1).unwrap();
        let c = decode_count(&d, &s, &rep.node, 4, 10, 3, 1.0).unwrap();
        assert_eq!((c.conditional_evaluations, c.flat_evaluations), (8, 16));
        assert!(c.passed);
    }

    #[test]
    fn signal_set_errors() {
        let d = constructions::alamouti();
        assert_eq!(SignalSet::for_size(&d, 2, 0), Err(SimError::NotSquare(2)));
        let s = SignalSet::for_size(&constructions::htw_pga(), 2, 0).unwrap();
        assert!(matches!(decode_count(&d, &s, &analyze(&d, DEFAULT_BUDGET).node, 2, 1, 0, 0.1), Err(SimError::SignalMismatch)));
    }
}
