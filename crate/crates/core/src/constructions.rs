//! Catalog designs and the constructions that build larger designs from smaller ones.
//!
//! Every construction appends one F4 coordinate (doubling the number of antennas) and
//! keeps the rate. Output vectors list the images of the input vectors first, in input
//! order, followed by the new block(s).
//!
//! Matrix forms, writing `X` for the input design and `W` for a copy of it in fresh
//! symbols, after reordering coordinates with [`abba_cycle`] so the new coordinate
//! becomes the outermost Kronecker factor:
//!
//! | step | result |
//! |---|---|
//! | `construction_a`, `l = 0` | `[[X, -W], [-W, X]]` |
//! | `construction_a`, `l = 1` | `diag(X - W, X + W)` |
//! | `construction_a`, `l = 2` | `[[X, iW], [-iW, X]]` (up to symbol signs) |
//! | `construction_b`, `l = 0` | `[[X, iW], [iW, X]]` |
//! | `construction_b`, `l = 1` | `diag(X + iW, X - iW)` |
//! | `construction_b`, `l = 2` | `[[X, W], [-W, X]]` |
//!
//! For `construction_c` with a seed whose first group has Hermitian and second group
//! skew-Hermitian weight matrices, `(0, 1, w, w^2)` gives `[[X^H, iW], [iW^H, X]]`,
//! `(w, w^2, 0, 1)` gives `[[iX, W^H], [-W, -iX^H]]` and `(w, 1, 0, w^2)` gives
//! `i [[X, W], [W^H, -X^H]]`, which is the doubling `[[X, -W^H], [W, X^H]]` up to a
//! unitary column transform and symbol relabeling.

use num_rational::Rational64;
use num_traits::One;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decodability::{finest_partition, DecodeNode};
use crate::design::{Design, DesignError, GroupValidity, Step};
use crate::f4::{check_permutation, enumerate_space, CodeVector, CosetTranslates, F4Error, F4, MAX_M};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstructionError {
    #[error("l must be 0, 1 or 2 (got {0})")]
    BadL(u8),
    #[error("input must have exactly two groups (has {0})")]
    NotTwoGroups(usize),
    #[error("symbols {a} and {b} of group {group} have an odd-weight sum")]
    OddWithinGroup { group: usize, a: usize, b: usize },
    #[error("input is not a valid multigroup design: symbols {a} and {b} are not HR-orthogonal")]
    InvalidInput { a: usize, b: usize },
    #[error("the four new coordinates must be distinct elements of F4")]
    RepeatedXi,
    #[error("m would exceed the supported maximum of {MAX_M}")]
    TooLarge,
    #[error("invalid recipe: {0}")]
    Recipe(String),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error(transparent)]
    F4(#[from] F4Error),
    #[error(transparent)]
    Design(#[from] DesignError),
}

type Result<T> = std::result::Result<T, ConstructionError>;

fn cv(s: &str) -> CodeVector {
    s.parse().expect("catalog vector literal")
}

fn cvs(list: &[&str]) -> Vec<CodeVector> {
    list.iter().map(|s| cv(s)).collect()
}

fn singletons(k: usize) -> Vec<Vec<usize>> {
    (0..k).map(|i| vec![i]).collect()
}

fn catalog_step(name: &str) -> Vec<Step> {
    vec![Step::Catalog { name: name.into() }]
}

/// The 2x2 orthogonal design.
pub fn alamouti() -> Design {
    Design::new(1, cvs(&["0|0", "0|1", "0|w", "0|W"]), singletons(4), "alamouti")
        .expect("valid")
        .with_provenance(catalog_step("alamouti"))
}

/// Rate-1 two-group 2x2 designs: `l = 0` is the 2x2 ABBA code, `l = 1` the 2x2 CIOD and
/// `l = 2` a third code with the same group structure.
pub fn two_by_two(l: u8) -> Result<Design> {
    let list = match l {
        0 => ["0|0", "1|1", "0|1", "1|0"],
        1 => ["0|0", "1|w", "0|w", "1|0"],
        2 => ["0|0", "1|W", "1|0", "0|W"],
        _ => return Err(ConstructionError::BadL(l)),
    };
    let name = format!("two-by-two-l{l}");
    Ok(Design::new(1, cvs(&list), vec![vec![0, 1], vec![2, 3]], &name)?.with_provenance(catalog_step(&name)))
}

/// The 4x4 rate-1 quasi-orthogonal design decodable in four pairs.
pub fn quasi_orthogonal_4x4() -> Design {
    let v = cvs(&["0|00", "1|ww", "0|0W", "1|w1", "0|W0", "1|1w", "0|WW", "1|11"]);
    Design::new(2, v, vec![vec![0, 6], vec![1, 7], vec![2, 4], vec![3, 5]], "quasi-orthogonal-4x4")
        .expect("valid")
        .with_provenance(catalog_step("quasi-orthogonal-4x4"))
}

/// Square orthogonal design on `2^m` antennas with `2m + 2` real symbols.
pub fn square_od(m: usize) -> Result<Design> {
    if m > MAX_M as usize {
        return Err(ConstructionError::TooLarge);
    }
    let mut v = vec![CodeVector::zero(0)?; 2 * m + 2];
    for k in 1..=m {
        let build = |head: F4| -> Result<CodeVector> {
            let mut xi = vec![F4::Zero; m - k];
            xi.push(head);
            xi.extend(std::iter::repeat(F4::Omega).take(k - 1));
            Ok(CodeVector::new(k % 2 == 0, &xi)?)
        };
        v[k - 1] = build(F4::OmegaSq)?;
        v[k + m - 1] = build(F4::One)?;
    }
    v[2 * m] = CodeVector::new(m % 2 == 0, &vec![F4::Omega; m])?;
    v[2 * m + 1] = CodeVector::zero(m)?;
    Ok(Design::new(m, v, singletons(2 * m + 2), format!("square-od-{m}"))?.with_provenance(vec![Step::SquareOd { m }]))
}

/// Rate-17/8 fast-group-decodable 4x4 design: the zero vector alone, and all sixteen
/// odd-weight vectors, which decouple into five single symbols once the other eleven
/// are fixed.
pub fn fgd_17_8() -> Design {
    let odd: Vec<CodeVector> = enumerate_space(2).expect("m = 2").into_iter().filter(|v| !v.is_even()).collect();
    let mut v = vec![CodeVector::zero(2).expect("m = 2")];
    v.extend(&odd);
    let single: Vec<CodeVector> = square_od(2).expect("m = 2").vectors().iter().copied().filter(|y| !y.is_even()).collect();
    let pos = |y: &CodeVector| v.iter().position(|x| x == y).expect("odd vector present");
    let leaves: Vec<usize> = single.iter().map(pos).collect();
    let conditioned: Vec<usize> = (1..17).filter(|i| !leaves.contains(i)).collect();
    let inner = DecodeNode::Split { conditioned, groups: leaves.iter().map(|&i| DecodeNode::Leaf(vec![i])).collect() };
    Design::new(2, v, vec![vec![0], (1..17).collect()], "fgd-17-8")
        .expect("valid")
        .with_structure(DecodeNode::groups(vec![DecodeNode::Leaf(vec![0]), inner]))
        .expect("covers all symbols")
        .with_provenance(catalog_step("fgd-17-8"))
}

/// Rate-2 2x2 design from four complex symbols: two pairs that decouple once the last
/// four real symbols are fixed. Symbols `{1,2}`, `{3,4}` and `{5..8}` are encoded jointly.
pub fn pavan_rate2_2x2() -> Design {
    let v = cvs(&["0|0", "1|w", "1|0", "0|w", "1|1", "0|W", "0|1", "1|W"]);
    let tree = DecodeNode::Split { conditioned: vec![4, 5, 6, 7], groups: vec![DecodeNode::Leaf(vec![0, 1]), DecodeNode::Leaf(vec![2, 3])] };
    Design::new(1, v, vec![(0..8).collect()], "pavan-rate2-2x2")
        .expect("valid")
        .with_encoding(vec![vec![0, 1], vec![2, 3], vec![4, 5, 6, 7]])
        .expect("refines")
        .with_structure(tree)
        .expect("covers")
        .with_provenance(catalog_step("pavan-rate2-2x2"))
}

/// The rate-2 2x2 code `[[s1, s2], [-s2*, s1*]] + [[s3, s4], [-s4*, s3*]] Z`, symbols
/// ordered `s1I, s1Q, s2I, s2Q, s3I, s3Q, s4I, s4Q`; `s3` and `s4` are encoded jointly.
pub fn htw_pga() -> Design {
    let v = cvs(&["0|0", "0|w", "0|W", "0|1", "1|w", "1|0", "1|1", "1|W"]);
    let tree = DecodeNode::Split { conditioned: vec![4, 5, 6, 7], groups: vec![DecodeNode::Leaf(vec![0, 1]), DecodeNode::Leaf(vec![2, 3])] };
    Design::new(1, v, vec![(0..8).collect()], "htw-pga")
        .expect("valid")
        .with_encoding(vec![vec![0, 1], vec![2, 3], vec![4, 5, 6, 7]])
        .expect("refines")
        .with_structure(tree)
        .expect("covers")
        .with_provenance(catalog_step("htw-pga"))
}

/// Names accepted by [`by_name`].
pub const CATALOG_NAMES: [&str; 14] = [
    "alamouti",
    "two-by-two-l0",
    "two-by-two-l1",
    "two-by-two-l2",
    "quasi-orthogonal-4x4",
    "square-od-1",
    "square-od-2",
    "square-od-3",
    "fgd-17-8",
    "pavan-rate2-2x2",
    "htw-pga",
    "four-group-k2",
    "new-fgd-n4-r5-4",
    "new-fgd-n4-r2",
];

pub fn by_name(name: &str) -> Option<Design> {
    let fgd = |r: Rational64| new_fgd(&FgdParams::new(2, r)).ok();
    Some(match name {
        "alamouti" => alamouti(),
        "two-by-two-l0" => two_by_two(0).ok()?,
        "two-by-two-l1" => two_by_two(1).ok()?,
        "two-by-two-l2" => two_by_two(2).ok()?,
        "quasi-orthogonal-4x4" => quasi_orthogonal_4x4(),
        "square-od-1" => square_od(1).ok()?,
        "square-od-2" => square_od(2).ok()?,
        "square-od-3" => square_od(3).ok()?,
        "fgd-17-8" => fgd_17_8(),
        "pavan-rate2-2x2" => pavan_rate2_2x2(),
        "htw-pga" => htw_pga(),
        "four-group-k2" => {
            let steps = [StepSpec::A { l: 0, sigma: None }, StepSpec::C { xi: [F4::Zero, F4::One, F4::Omega, F4::OmegaSq], sigma: None }];
            four_group_recursive(2, &steps).ok()?
        }
        "new-fgd-n4-r5-4" => fgd(Rational64::new(5, 4))?,
        "new-fgd-n4-r2" => fgd(Rational64::new(2, 1))?,
        _ => return None,
    }
    .with_name(name))
}

pub fn catalog() -> Vec<Design> {
    CATALOG_NAMES.iter().map(|n| by_name(n).expect("catalog entry builds")).collect()
}

fn check_l(l: u8) -> Result<()> {
    if l > 2 {
        Err(ConstructionError::BadL(l))
    } else {
        Ok(())
    }
}

fn require_valid(d: &Design) -> Result<()> {
    match d.validate_g_group() {
        GroupValidity::Valid => Ok(()),
        GroupValidity::Invalid { first, second } => Err(ConstructionError::InvalidInput { a: first + 1, b: second + 1 }),
    }
}

/// Two groups whose within-group sums all have even weight.
fn require_even_two_groups(d: &Design) -> Result<()> {
    require_valid(d)?;
    if d.groups().len() != 2 {
        return Err(ConstructionError::NotTwoGroups(d.groups().len()));
    }
    let v = d.vectors();
    for (g, grp) in d.groups().iter().enumerate() {
        for (x, &a) in grp.iter().enumerate() {
            for &b in &grp[x + 1..] {
                if !v[a].xor(&v[b]).is_even() {
                    return Err(ConstructionError::OddWithinGroup { group: g + 1, a: a.min(b) + 1, b: a.max(b) + 1 });
                }
            }
        }
    }
    Ok(())
}

fn extend_all(vs: &[CodeVector], x: F4, flip: bool) -> Result<Vec<CodeVector>> {
    vs.iter()
        .map(|y| {
            let e = y.extend(x).map_err(|_| ConstructionError::TooLarge)?;
            Ok(if flip { e.with_lambda_flipped() } else { e })
        })
        .collect()
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

fn push_step(d: &Design, step: Step) -> Vec<Step> {
    let mut p = d.provenance().to_vec();
    p.push(step);
    p
}

fn doubled_encoding(d: &Design) -> Option<Vec<Vec<usize>>> {
    if !d.has_joint_encoding() {
        return None;
    }
    let k = d.k();
    let e = d.encoding_groups();
    Some(e.iter().cloned().chain(e.iter().map(|g| g.iter().map(|i| i + k).collect())).collect())
}

/// `S_i -> {[y, 0]} u {[y, w^l] + delta}` for every group: keeps the number of groups,
/// doubles their size, and keeps within-group sums even if they were.
pub fn construction_a(d: &Design, l: u8) -> Result<Design> {
    check_l(l)?;
    require_valid(d)?;
    let k = d.k();
    let mut v = extend_all(d.vectors(), F4::Zero, false)?;
    v.extend(extend_all(d.vectors(), F4::omega_pow(l), true)?);
    let groups = d.groups().iter().map(|g| sorted(g.iter().copied().chain(g.iter().map(|i| i + k)).collect())).collect();
    let mut out = Design::new(d.m() + 1, v, groups, format!("{}+a{l}", d.name()))?;
    if let Some(e) = doubled_encoding(d) {
        out = out.with_encoding(e)?;
    }
    Ok(out.with_provenance(push_step(d, Step::ConstructionA { l })))
}

/// For a two-group input with even within-group sums:
/// `S_1' = [S_1, 0] u [S_2, w^l]`, `S_2' = [S_2, 0] u [S_1, w^l]`.
pub fn construction_b(d: &Design, l: u8) -> Result<Design> {
    check_l(l)?;
    require_even_two_groups(d)?;
    let k = d.k();
    let mut v = extend_all(d.vectors(), F4::Zero, false)?;
    v.extend(extend_all(d.vectors(), F4::omega_pow(l), false)?);
    let (g1, g2) = (&d.groups()[0], &d.groups()[1]);
    let groups = vec![
        sorted(g1.iter().copied().chain(g2.iter().map(|i| i + k)).collect()),
        sorted(g2.iter().copied().chain(g1.iter().map(|i| i + k)).collect()),
    ];
    Ok(Design::new(d.m() + 1, v, groups, format!("{}+b{l}", d.name()))?.with_provenance(push_step(d, Step::ConstructionB { l })))
}

/// For a two-group input with even within-group sums and distinct `xi`:
/// four groups `[S_1, xi_1]`, `[S_1, xi_2]`, `[S_2, xi_3] + delta`, `[S_2, xi_4] + delta`.
pub fn construction_c(d: &Design, xi: [F4; 4]) -> Result<Design> {
    if (0..4).any(|a| (a + 1..4).any(|b| xi[a] == xi[b])) {
        return Err(ConstructionError::RepeatedXi);
    }
    require_even_two_groups(d)?;
    let v = d.vectors();
    let (g1, g2) = (&d.groups()[0], &d.groups()[1]);
    let pick = |g: &[usize]| g.iter().map(|&i| v[i]).collect::<Vec<_>>();
    let blocks = [
        extend_all(&pick(g1), xi[0], false)?,
        extend_all(&pick(g1), xi[1], false)?,
        extend_all(&pick(g2), xi[2], true)?,
        extend_all(&pick(g2), xi[3], true)?,
    ];
    let mut out = vec![];
    let mut groups = vec![];
    for b in blocks {
        groups.push((out.len()..out.len() + b.len()).collect());
        out.extend(b);
    }
    let name = format!("{}+c{}{}{}{}", d.name(), xi[0], xi[1], xi[2], xi[3]);
    Ok(Design::new(d.m() + 1, out, groups, name)?.with_provenance(push_step(d, Step::ConstructionC { xi })))
}

/// Applies a coordinate permutation (one-based, `xi_k' = xi_{sigma(k)}`) to every vector.
/// Weights, and therefore all orthogonality relations, are unchanged.
pub fn permute(d: &Design, sigma: &[usize]) -> Result<Design> {
    check_permutation(sigma, d.m())?;
    let v = d.vectors().iter().map(|y| y.permute(sigma)).collect::<std::result::Result<Vec<_>, _>>()?;
    let mut out = Design::new(d.m(), v, d.groups().to_vec(), d.name())?;
    if d.has_joint_encoding() {
        out = out.with_encoding(d.encoding_groups())?;
    }
    if let Some(s) = d.structure() {
        out = out.with_structure(s.clone())?;
    }
    Ok(out.with_provenance(push_step(d, Step::Permute { sigma: sigma.to_vec() })))
}

/// The cycle that moves the last coordinate to the front: `sigma(1) = m`, `sigma(k) = k - 1`.
pub fn abba_cycle(m: usize) -> Vec<usize> {
    if m == 0 {
        return vec![];
    }
    std::iter::once(m).chain(1..m).collect()
}

/// Removes one group (zero-based) and renumbers the remaining symbols.
pub fn delete_group(d: &Design, group: usize) -> Result<Design> {
    if group >= d.groups().len() || d.groups().len() < 2 {
        return Err(ConstructionError::Params(format!("cannot delete group {}", group + 1)));
    }
    let gone = &d.groups()[group];
    let keep: Vec<usize> = (0..d.k()).filter(|i| !gone.contains(i)).collect();
    let new_index = |i: usize| keep.iter().position(|&x| x == i).expect("kept");
    let v = keep.iter().map(|&i| d.vectors()[i]).collect();
    let groups = d.groups().iter().enumerate().filter(|(g, _)| *g != group).map(|(_, g)| g.iter().map(|&i| new_index(i)).collect()).collect();
    Ok(Design::new(d.m(), v, groups, d.name())?.with_provenance(push_step(d, Step::DeleteGroup { group: group + 1 })))
}

/// One step of a recursive construction. `sigma`, if present, permutes coordinates
/// after the step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSpec {
    A {
        l: u8,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<Vec<usize>>,
    },
    B {
        l: u8,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<Vec<usize>>,
    },
    C {
        xi: [F4; 4],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<Vec<usize>>,
    },
}

impl StepSpec {
    pub fn apply(&self, d: &Design) -> Result<Design> {
        let (out, sigma) = match self {
            StepSpec::A { l, sigma } => (construction_a(d, *l)?, sigma),
            StepSpec::B { l, sigma } => (construction_b(d, *l)?, sigma),
            StepSpec::C { xi, sigma } => (construction_c(d, *xi)?, sigma),
        };
        match sigma {
            Some(s) => permute(&out, s),
            None => Ok(out),
        }
    }
}

/// Choices of `construction_c` coordinates with distinct matrix forms; the remaining
/// splits of F4 are equivalent to one of these up to a column permutation.
pub fn c_menu_contains(xi: [F4; 4]) -> bool {
    let pair = |a: F4, b: F4| if a < b { (a, b) } else { (b, a) };
    use F4::*;
    let menu = [((Zero, One), (Omega, OmegaSq)), ((Omega, OmegaSq), (Zero, One)), ((One, OmegaSq), (Zero, Omega)), ((One, Omega), (Zero, OmegaSq))];
    menu.contains(&(pair(xi[0], xi[1]), pair(xi[2], xi[3])))
}

/// The one-antenna two-group seed `{[0]}, {[1]}`.
pub fn seed() -> Design {
    Design::new(0, cvs(&["0|", "1|"]), vec![vec![0], vec![1]], "seed").expect("valid").with_provenance(vec![Step::Seed])
}

/// Rate-1 four-group design on `2^k` antennas: from the seed, `k - 1` steps of kind A
/// or B and a final step of kind C.
pub fn four_group_recursive(k: usize, steps: &[StepSpec]) -> Result<Design> {
    if k == 0 || steps.len() != k {
        return Err(ConstructionError::Recipe(format!("need k >= 1 and exactly k steps (k = {k}, {} steps)", steps.len())));
    }
    if k > MAX_M as usize {
        return Err(ConstructionError::TooLarge);
    }
    let mut d = seed();
    for (i, s) in steps.iter().enumerate() {
        let last = i + 1 == k;
        match s {
            StepSpec::C { xi, .. } if last => {
                if !c_menu_contains(*xi) {
                    return Err(ConstructionError::Recipe(
                        "this choice of xi is equivalent to a listed one up to a column permutation; use one of the listed choices".into(),
                    ));
                }
            }
            StepSpec::C { .. } => return Err(ConstructionError::Recipe(format!("step {} of kind C must be last", i + 1))),
            _ if last => return Err(ConstructionError::Recipe("the last step must be of kind C".into())),
            _ => {}
        }
        d = s.apply(&d)?;
    }
    Ok(d.with_name(format!("four-group-k{k}")))
}

/// `g`-group design with groups of size `2^a`: a square orthogonal design extended `a`
/// times by `construction_a`; for odd `g` one group of the `g + 1` design is dropped.
/// Rate `g / 2^ceil(g/2)`, on `2^(ceil(g/2) - 1 + a)` antennas.
pub fn g_group(g: usize, a: usize) -> Result<Design> {
    if g < 2 {
        return Err(ConstructionError::Params("g must be at least 2".into()));
    }
    let even = g + g % 2;
    let m = even / 2 - 1;
    if m + a > MAX_M as usize {
        return Err(ConstructionError::TooLarge);
    }
    let mut d = square_od(m)?;
    for _ in 0..a {
        d = construction_a(&d, 0)?;
    }
    if g % 2 == 1 {
        d = delete_group(&d, even - 1)?;
    }
    Ok(d.with_name(format!("g-group-{g}-{a}")))
}

/// How the extra vectors are chosen for rates above 5/4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// The first unused vectors in canonical order.
    Canonical,
    /// A seeded random choice among the unused vectors.
    Seeded(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FgdParams {
    pub m: usize,
    pub xi1: F4,
    pub xi2: F4,
    pub rate: Rational64,
    pub selection: Selection,
}

impl FgdParams {
    /// Defaults `xi1 = 1`, `xi2 = w` and canonical selection.
    pub fn new(m: usize, rate: Rational64) -> FgdParams {
        FgdParams { m, xi1: F4::One, xi2: F4::Omega, rate, selection: Selection::Canonical }
    }
}

/// Sizes of the coset blocks of the fast-group-decodable family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FgdBlocks {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub c: Vec<usize>,
    pub d: Vec<usize>,
    pub e: Vec<usize>,
    pub extra: Vec<usize>,
}

/// Fast-group-decodable design on `2^m` antennas at rate `R` with `1 <= R <= 2^m` and
/// `2^(m+1) R` an integer.
///
/// With `S = {[0, z] : z_i in {0, xi1}}`, the blocks are its even part `A`, its odd part
/// `B`, `C = nu + A`, `D = nu + B` and `E = delta + A`. `A` is orthogonal to the other
/// four; `B`, `C`, `D` decouple once `E` is fixed. Rates above 5/4 add
/// `2^(m-1)(4R - 5)` further vectors that are conditioned on first; rates below 5/4
/// drop vectors from `E`. Symbols are ordered `A, B, C, D, E, extra`.
pub fn new_fgd(p: &FgdParams) -> Result<Design> {
    Ok(new_fgd_blocks(p)?.0)
}

pub fn new_fgd_blocks(p: &FgdParams) -> Result<(Design, FgdBlocks)> {
    let m = p.m;
    if m == 0 || m > MAX_M as usize {
        return Err(ConstructionError::Params(format!("m must be in 1..={MAX_M}")));
    }
    if p.xi1.is_zero() || p.xi2.is_zero() || p.xi1 == p.xi2 {
        return Err(ConstructionError::Params("xi1 and xi2 must be distinct and nonzero".into()));
    }
    let half = 1i64 << (m - 1);
    let k_r = p.rate * Rational64::from_integer(4 * half);
    if !k_r.is_integer() || p.rate < Rational64::one() || p.rate > Rational64::from_integer(2 * half) {
        return Err(ConstructionError::Params(format!("rate {} needs 1 <= R <= {} and 2^(m+1) R integral", p.rate, 2 * half)));
    }
    let k = k_r.to_integer() as usize;
    let t = CosetTranslates::new(m, p.xi1, p.xi2)?;
    let base: Vec<CodeVector> = (0..1usize << m)
        .map(|mask| {
            let xi: Vec<F4> = (0..m).map(|c| if mask >> (m - 1 - c) & 1 == 1 { p.xi1 } else { F4::Zero }).collect();
            CodeVector::new(false, &xi)
        })
        .collect::<std::result::Result<_, _>>()?;
    let a: Vec<CodeVector> = base.iter().copied().filter(|v| v.is_even()).collect();
    let b: Vec<CodeVector> = base.iter().copied().filter(|v| !v.is_even()).collect();
    let c: Vec<CodeVector> = a.iter().map(|v| v.xor(&t.nu)).collect();
    let dd: Vec<CodeVector> = b.iter().map(|v| v.xor(&t.nu)).collect();
    let mut e: Vec<CodeVector> = a.iter().map(|v| v.xor(&t.delta)).collect();

    let core = 5 * half as usize;
    let (punctured, extra_count) = if k < core { (core - k, 0) } else { (0, k - core) };
    e.truncate(e.len() - punctured);
    let mut used: Vec<CodeVector> = [&a, &b, &c, &dd, &e].iter().flat_map(|s| s.iter().copied()).collect();
    let mut spare: Vec<CodeVector> = enumerate_space(m)?.into_iter().filter(|v| !used.contains(v)).collect();
    let selection = match p.selection {
        Selection::Canonical => "canonical".to_string(),
        Selection::Seeded(seed) => {
            spare.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            format!("seeded:{seed}")
        }
    };
    let mut extra: Vec<CodeVector> = spare.into_iter().take(extra_count).collect();
    extra.sort();
    used.extend(&extra);

    let mut next = 0;
    let mut range = |n: usize| {
        let r: Vec<usize> = (next..next + n).collect();
        next += n;
        r
    };
    let blocks = FgdBlocks { a: range(a.len()), b: range(b.len()), c: range(c.len()), d: range(dd.len()), e: range(e.len()), extra: range(extra.len()) };

    let leaf = |s: &[usize]| DecodeNode::Leaf(s.to_vec());
    let bcd = vec![leaf(&blocks.b), leaf(&blocks.c), leaf(&blocks.d)];
    let second = if blocks.e.is_empty() { None } else { Some(DecodeNode::Split { conditioned: blocks.e.clone(), groups: bcd.clone() }) };
    let tree = match (second, blocks.extra.is_empty()) {
        (None, _) => DecodeNode::groups(std::iter::once(leaf(&blocks.a)).chain(bcd).collect()),
        (Some(s), true) => DecodeNode::groups(vec![leaf(&blocks.a), s]),
        (Some(s), false) => DecodeNode::Split { conditioned: blocks.extra.clone(), groups: vec![leaf(&blocks.a), s] },
    };

    let name = format!("new-fgd-m{m}-r{}", p.rate).replace('/', "_");
    let shell = Design::new(m, used.clone(), vec![(0..k).collect()], &name)?;
    let groups = finest_partition(&shell);
    let step = Step::NewFgd {
        m,
        xi1: p.xi1,
        xi2: p.xi2,
        rate: p.rate.to_string(),
        selection,
        selected: blocks.extra.len(),
        punctured,
    };
    let d = Design::new(m, used, groups, name)?.with_structure(tree)?.with_provenance(vec![step]);
    Ok((d, blocks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::GroupValidity;

    #[test]
    fn catalog_entries_are_valid() {
        for d in catalog() {
            assert_eq!(d.validate_g_group(), GroupValidity::Valid, "{}", d.name());
        }
    }

    #[test]
    fn square_od_two() {
        let d = square_od(2).unwrap();
        let expect = cvs(&["0|0W", "1|Ww", "0|01", "1|1w", "1|ww", "0|00"]);
        assert_eq!(d.vectors(), expect.as_slice());
        assert_eq!(square_od(0).unwrap().vectors(), cvs(&["1|", "0|"]).as_slice());
    }

    #[test]
    fn abba_cycle_moves_last_to_front() {
        assert_eq!(abba_cycle(3), vec![3, 1, 2]);
        let d = permute(&construction_a(&alamouti(), 0).unwrap(), &abba_cycle(2)).unwrap();
        assert!(d.validate_g_group().is_valid());
    }

    #[test]
    fn preconditions_are_enforced() {
        assert_eq!(construction_b(&alamouti(), 0).unwrap_err(), ConstructionError::NotTwoGroups(4));
        assert_eq!(construction_a(&alamouti(), 3).unwrap_err(), ConstructionError::BadL(3));
        let seed_ok = two_by_two(0).unwrap();
        assert_eq!(construction_c(&seed_ok, [F4::One; 4]).unwrap_err(), ConstructionError::RepeatedXi);
        let odd = Design::new(1, cvs(&["0|0", "0|1", "1|1", "1|0"]), vec![vec![0, 1], vec![2, 3]], "t").unwrap();
        assert!(matches!(construction_b(&odd, 0), Err(ConstructionError::InvalidInput { .. }) | Err(ConstructionError::OddWithinGroup { .. })));
    }

    #[test]
    fn odd_g_deletes_a_group() {
        let d = g_group(3, 0).unwrap();
        assert_eq!(d.k(), 3);
        assert_eq!(d.groups().len(), 3);
        assert_eq!(d.rate(), Rational64::new(3, 4));
    }

    #[test]
    fn fgd_block_sizes() {
        let (d, b) = new_fgd_blocks(&FgdParams::new(2, Rational64::new(5, 4))).unwrap();
        assert_eq!(d.k(), 10);
        assert_eq!((b.a.len(), b.b.len(), b.c.len(), b.d.len(), b.e.len(), b.extra.len()), (2, 2, 2, 2, 2, 0));
        let (d, b) = new_fgd_blocks(&FgdParams::new(3, Rational64::new(9, 8))).unwrap();
        assert_eq!(d.k(), 18);
        assert_eq!(b.e.len(), 2);
        assert_eq!(new_fgd(&FgdParams::new(2, Rational64::new(9, 8))).unwrap().k(), 9);
        assert!(new_fgd(&FgdParams::new(2, Rational64::new(17, 16))).is_err());
        assert!(new_fgd(&FgdParams::new(2, Rational64::new(5, 1))).is_err());
    }

    #[test]
    fn seeded_selection_is_reproducible() {
        let mut p = FgdParams::new(2, Rational64::new(2, 1));
        p.selection = Selection::Seeded(7);
        assert_eq!(new_fgd(&p).unwrap(), new_fgd(&p).unwrap());
    }
}
