//! Arithmetic over F4 = {0, 1, w, w^2} and the code vectors `[lambda, xi_1, ..., xi_m]`
//! that index weight matrices.
//!
//! Elements use the 2-bit encoding `0 -> 00`, `1 -> 01`, `w -> 10`, `w^2 -> 11`, so
//! addition is XOR. A code vector is packed into one integer with `lambda` as the most
//! significant bit and `xi_1` as the most significant coordinate pair. The integer order
//! is the canonical order used everywhere in the crate: lambda first, then
//! `xi_1, ..., xi_m` read as base-4 digits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Largest number of F4 coordinates accepted (`N = 2^m` transmit antennas).
pub const MAX_M: u8 = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum F4Error {
    #[error("dimension mismatch: m = {left} vs m = {right}")]
    DimensionMismatch { left: u8, right: u8 },
    #[error("m = {0} exceeds the supported maximum of {MAX_M}")]
    TooLarge(usize),
    #[error("invalid F4 symbol {0:?} (expected one of 0, 1, w, W)")]
    BadSymbol(char),
    #[error("malformed code vector {0:?} (expected `lambda|x1..xm`, e.g. `1|wW0`)")]
    Malformed(String),
    #[error("invalid coordinate permutation {0:?}")]
    BadPermutation(Vec<usize>),
}

/// An element of F4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum F4 {
    Zero = 0,
    One = 1,
    Omega = 2,
    OmegaSq = 3,
}

impl F4 {
    pub const ALL: [F4; 4] = [F4::Zero, F4::One, F4::Omega, F4::OmegaSq];

    pub fn from_bits(b: u8) -> F4 {
        match b & 3 {
            0 => F4::Zero,
            1 => F4::One,
            2 => F4::Omega,
            _ => F4::OmegaSq,
        }
    }

    pub fn bits(self) -> u8 {
        self as u8
    }

    /// `w^l` for `l` in 0..=2 (taken mod 3).
    pub fn omega_pow(l: u8) -> F4 {
        match l % 3 {
            0 => F4::One,
            1 => F4::Omega,
            _ => F4::OmegaSq,
        }
    }

    pub fn is_zero(self) -> bool {
        self == F4::Zero
    }

    pub fn symbol(self) -> char {
        match self {
            F4::Zero => '0',
            F4::One => '1',
            F4::Omega => 'w',
            F4::OmegaSq => 'W',
        }
    }

    pub fn from_symbol(c: char) -> Result<F4, F4Error> {
        match c {
            '0' => Ok(F4::Zero),
            '1' => Ok(F4::One),
            'w' => Ok(F4::Omega),
            'W' => Ok(F4::OmegaSq),
            other => Err(F4Error::BadSymbol(other)),
        }
    }
}

impl std::ops::Add for F4 {
    type Output = F4;
    fn add(self, rhs: F4) -> F4 {
        F4::from_bits(self.bits() ^ rhs.bits())
    }
}

impl fmt::Display for F4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

impl Serialize for F4 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.symbol().to_string())
    }
}

impl<'de> Deserialize<'de> for F4 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<F4, D::Error> {
        let s = String::deserialize(d)?;
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => F4::from_symbol(c).map_err(serde::de::Error::custom),
            _ => Err(serde::de::Error::custom(format!("invalid F4 symbol {s:?}"))),
        }
    }
}

/// A vector `[lambda, xi_1, ..., xi_m]` in F2 x F4^m.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CodeVector {
    m: u8,
    bits: u32,
}

fn check_m(m: usize) -> Result<u8, F4Error> {
    if m > MAX_M as usize {
        Err(F4Error::TooLarge(m))
    } else {
        Ok(m as u8)
    }
}

const PAIR_LOW: u32 = 0x5555_5555;

impl CodeVector {
    pub fn new(lambda: bool, xi: &[F4]) -> Result<CodeVector, F4Error> {
        let m = check_m(xi.len())?;
        let mut bits = lambda as u32;
        for x in xi {
            bits = (bits << 2) | x.bits() as u32;
        }
        Ok(CodeVector { m, bits })
    }

    /// The all-zero vector of length `m`.
    pub fn zero(m: usize) -> Result<CodeVector, F4Error> {
        Ok(CodeVector { m: check_m(m)?, bits: 0 })
    }

    /// Inverse of [`CodeVector::index`].
    pub fn from_index(m: usize, index: u32) -> Result<CodeVector, F4Error> {
        let m = check_m(m)?;
        if index >> (2 * m as u32 + 1) != 0 {
            return Err(F4Error::Malformed(format!("index {index} out of range for m = {m}")));
        }
        Ok(CodeVector { m, bits: index })
    }

    /// Position of the vector in the canonical order of its space.
    pub fn index(&self) -> u32 {
        self.bits
    }

    pub fn m(&self) -> usize {
        self.m as usize
    }

    pub fn lambda(&self) -> bool {
        (self.bits >> (2 * self.m as u32)) & 1 == 1
    }

    /// Coordinate `xi_{k+1}` (zero-based `k`).
    pub fn xi(&self, k: usize) -> F4 {
        assert!(k < self.m as usize, "coordinate {k} out of range for m = {}", self.m);
        F4::from_bits((self.bits >> (2 * (self.m as usize - 1 - k))) as u8)
    }

    pub fn xis(&self) -> Vec<F4> {
        (0..self.m()).map(|k| self.xi(k)).collect()
    }

    fn xi_bits(&self) -> u32 {
        self.bits & ((1u32 << (2 * self.m as u32)) - 1)
    }

    /// Hamming weight: `lambda` plus the number of nonzero F4 coordinates.
    pub fn weight(&self) -> u32 {
        let x = self.xi_bits();
        self.lambda() as u32 + ((x | (x >> 1)) & PAIR_LOW).count_ones()
    }

    pub fn is_even(&self) -> bool {
        self.weight() % 2 == 0
    }

    pub fn add(&self, other: &CodeVector) -> Result<CodeVector, F4Error> {
        if self.m != other.m {
            return Err(F4Error::DimensionMismatch { left: self.m, right: other.m });
        }
        Ok(self.xor(other))
    }

    /// Addition for vectors already known to share `m`.
    pub(crate) fn xor(&self, other: &CodeVector) -> CodeVector {
        debug_assert_eq!(self.m, other.m);
        CodeVector { m: self.m, bits: self.bits ^ other.bits }
    }

    /// Appends `xi_{m+1} = x`.
    pub fn extend(&self, x: F4) -> Result<CodeVector, F4Error> {
        let m = check_m(self.m as usize + 1)?;
        Ok(CodeVector { m, bits: (self.bits << 2) | x.bits() as u32 })
    }

    pub fn with_lambda_flipped(&self) -> CodeVector {
        CodeVector { m: self.m, bits: self.bits ^ (1 << (2 * self.m as u32)) }
    }

    /// Coordinate permutation: `sigma` is one-based and the result has
    /// `xi_k' = xi_{sigma(k)}`.
    pub fn permute(&self, sigma: &[usize]) -> Result<CodeVector, F4Error> {
        check_permutation(sigma, self.m())?;
        let xi: Vec<F4> = sigma.iter().map(|&s| self.xi(s - 1)).collect();
        CodeVector::new(self.lambda(), &xi)
    }
}

pub(crate) fn check_permutation(sigma: &[usize], m: usize) -> Result<(), F4Error> {
    let mut seen = vec![false; m];
    if sigma.len() != m {
        return Err(F4Error::BadPermutation(sigma.to_vec()));
    }
    for &s in sigma {
        if s == 0 || s > m || seen[s - 1] {
            return Err(F4Error::BadPermutation(sigma.to_vec()));
        }
        seen[s - 1] = true;
    }
    Ok(())
}

impl PartialOrd for CodeVector {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CodeVector {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.m, self.bits).cmp(&(other.m, other.bits))
    }
}

impl fmt::Display for CodeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|", self.lambda() as u8)?;
        for x in self.xis() {
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

impl FromStr for CodeVector {
    type Err = F4Error;
    fn from_str(s: &str) -> Result<CodeVector, F4Error> {
        let (l, rest) = s.split_once('|').ok_or_else(|| F4Error::Malformed(s.to_string()))?;
        let lambda = match l {
            "0" => false,
            "1" => true,
            _ => return Err(F4Error::Malformed(s.to_string())),
        };
        let xi = rest.chars().map(F4::from_symbol).collect::<Result<Vec<_>, _>>()?;
        CodeVector::new(lambda, &xi)
    }
}

impl Serialize for CodeVector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for CodeVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<CodeVector, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Whether the weight matrices indexed by `u` and `v` are Hurwitz-Radon orthogonal,
/// i.e. whether `wt(u + v)` is odd.
pub fn hr_orthogonal_f4(u: &CodeVector, v: &CodeVector) -> Result<bool, F4Error> {
    Ok(!u.add(v)?.is_even())
}

/// All `2^(2m+1)` vectors of length `m`, in canonical order.
pub fn enumerate_space(m: usize) -> Result<Vec<CodeVector>, F4Error> {
    let m8 = check_m(m)?;
    Ok((0..1u32 << (2 * m + 1)).map(|bits| CodeVector { m: m8, bits }).collect())
}

/// The fixed translates used by the coset-based constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CosetTranslates {
    /// `[0, 0, ..., 0, xi_1]`
    pub gamma: CodeVector,
    /// `[1 if m even, xi_2, ..., xi_2]`
    pub nu: CodeVector,
    /// `[1, 0, ..., 0]`
    pub delta: CodeVector,
}

impl CosetTranslates {
    pub fn new(m: usize, xi1: F4, xi2: F4) -> Result<CosetTranslates, F4Error> {
        check_m(m)?;
        let mut g = vec![F4::Zero; m];
        if m > 0 {
            g[m - 1] = xi1;
        }
        Ok(CosetTranslates {
            gamma: CodeVector::new(false, &g)?,
            nu: CodeVector::new(m % 2 == 0, &vec![xi2; m])?,
            delta: CodeVector::new(true, &vec![F4::Zero; m])?,
        })
    }
}
