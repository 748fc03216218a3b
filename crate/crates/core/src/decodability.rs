//! Decodability analysis: HR-orthogonality graphs, multigroup and conditional
//! partitions, decoding trees and their ML decoding cost.
//!
//! A decoding tree is either a leaf (a group decoded by joint search) or a split: a
//! conditioned set that is searched exhaustively and, for each of its values, a list of
//! mutually HR-orthogonal subtrees that decouple. The cost of a tree, in metric
//! evaluations for a constellation of size `M` per complex symbol, is a polynomial in
//! `M^(1/2)`: a leaf of `n` real symbols costs `M^(n/2)` and a split costs
//! `M^(|C|/2)` times the sum of its children.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{Design, NodeFile};
use crate::f4::CodeVector;
use crate::pauli::{GaussMatrix, phi_inv};

/// Node of a decoding tree; symbol indices are zero-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeNode {
    Leaf(Vec<usize>),
    Split { conditioned: Vec<usize>, groups: Vec<DecodeNode> },
}

impl DecodeNode {
    /// Multigroup split with nothing conditioned.
    pub fn groups(groups: Vec<DecodeNode>) -> DecodeNode {
        DecodeNode::Split { conditioned: vec![], groups }
    }

    pub fn symbols(&self) -> Vec<usize> {
        let mut parts = vec![];
        self.collect_parts(&mut parts);
        let mut all: Vec<usize> = parts.into_iter().flatten().collect();
        all.sort_unstable();
        all
    }

    /// Leaves and non-empty conditioned sets, which together partition the symbols.
    pub fn collect_parts(&self, out: &mut Vec<Vec<usize>>) {
        match self {
            DecodeNode::Leaf(s) => out.push(s.clone()),
            DecodeNode::Split { conditioned, groups } => {
                if !conditioned.is_empty() {
                    out.push(conditioned.clone());
                }
                for g in groups {
                    g.collect_parts(out);
                }
            }
        }
    }

    pub fn leaves(&self) -> Vec<&[usize]> {
        match self {
            DecodeNode::Leaf(s) => vec![s.as_slice()],
            DecodeNode::Split { groups, .. } => groups.iter().flat_map(|g| g.leaves()).collect(),
        }
    }

    /// Column order for a QR decomposition: each split lists its groups in order and
    /// its conditioned set last.
    pub fn column_order(&self) -> Vec<usize> {
        match self {
            DecodeNode::Leaf(s) => s.clone(),
            DecodeNode::Split { conditioned, groups } => {
                let mut out: Vec<usize> = groups.iter().flat_map(|g| g.column_order()).collect();
                out.extend(conditioned);
                out
            }
        }
    }

    /// Pairs `(a, b)` with `a` ordered before `b` whose `R` entry vanishes when columns
    /// follow [`DecodeNode::column_order`]: `a` and `b` sit in different sibling groups.
    pub fn zero_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = vec![];
        if let DecodeNode::Split { groups, .. } = self {
            let orders: Vec<Vec<usize>> = groups.iter().map(|g| g.column_order()).collect();
            for i in 0..orders.len() {
                for j in i + 1..orders.len() {
                    for &a in &orders[i] {
                        for &b in &orders[j] {
                            out.push((a, b));
                        }
                    }
                }
            }
            for g in groups {
                out.extend(g.zero_pairs());
            }
        }
        out
    }

    /// Whether some split conditions on a non-empty set.
    pub fn has_conditioning(&self) -> bool {
        match self {
            DecodeNode::Leaf(_) => false,
            DecodeNode::Split { conditioned, groups } => {
                !conditioned.is_empty() || groups.iter().any(|g| g.has_conditioning())
            }
        }
    }

    fn canonical(self) -> DecodeNode {
        match self {
            DecodeNode::Leaf(mut s) => {
                s.sort_unstable();
                DecodeNode::Leaf(s)
            }
            DecodeNode::Split { mut conditioned, groups } => {
                conditioned.sort_unstable();
                let mut groups: Vec<DecodeNode> = groups.into_iter().map(DecodeNode::canonical).collect();
                groups.sort_by_key(|g| g.symbols()[0]);
                DecodeNode::Split { conditioned, groups }
            }
        }
    }
}

/// Decoding cost as a polynomial in `M^(1/2)`: half-exponent to coefficient.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cost {
    terms: BTreeMap<u32, u64>,
}

impl Cost {
    /// `coeff * M^(half / 2)`.
    pub fn monomial(half: u32, coeff: u64) -> Cost {
        let mut terms = BTreeMap::new();
        if coeff > 0 {
            terms.insert(half, coeff);
        }
        Cost { terms }
    }

    pub fn plus(&self, other: &Cost) -> Cost {
        let mut terms = self.terms.clone();
        for (&h, &c) in &other.terms {
            *terms.entry(h).or_insert(0) += c;
        }
        Cost { terms }
    }

    /// Multiplies by `M^(half / 2)`.
    pub fn shifted(&self, half: u32) -> Cost {
        Cost { terms: self.terms.iter().map(|(&h, &c)| (h + half, c)).collect() }
    }

    pub fn leading_half(&self) -> u32 {
        self.terms.keys().next_back().copied().unwrap_or(0)
    }

    pub fn leading_multiplier(&self) -> u64 {
        self.terms.values().next_back().copied().unwrap_or(0)
    }

    pub fn leading_exponent(&self) -> Rational64 {
        Rational64::new(self.leading_half() as i64, 2)
    }

    /// Terms as `(exponent, coefficient)`, highest exponent first.
    pub fn terms(&self) -> Vec<(Rational64, u64)> {
        self.terms.iter().rev().map(|(&h, &c)| (Rational64::new(h as i64, 2), c)).collect()
    }

    pub fn eval(&self, m: f64) -> f64 {
        self.terms.iter().map(|(&h, &c)| c as f64 * m.powf(h as f64 / 2.0)).sum()
    }

    /// Exact value at integer `M`, when every term is an integer there.
    pub fn eval_count(&self, m: u64) -> Option<u64> {
        let root = (m as f64).sqrt().round() as u64;
        let square = root * root == m;
        let mut total: u64 = 0;
        for (&h, &c) in &self.terms {
            let v = if h % 2 == 0 {
                m.checked_pow(h / 2)?
            } else if square {
                root.checked_pow(h)?
            } else {
                return None;
            };
            total = total.checked_add(c.checked_mul(v)?)?;
        }
        Some(total)
    }
}

fn half_to_string(h: u32) -> String {
    if h % 2 == 0 {
        (h / 2).to_string()
    } else {
        format!("{}.5", h / 2)
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .rev()
            .map(|(&h, &c)| {
                let coeff = if c == 1 && h > 0 { String::new() } else { c.to_string() };
                match h {
                    0 => c.to_string(),
                    2 => format!("{coeff}M"),
                    _ => format!("{coeff}M^{}", half_to_string(h)),
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cost {
    /// Asymptotic order: leading exponent, then its multiplier, then lower terms.
    fn cmp(&self, other: &Self) -> Ordering {
        let mut a = self.terms.iter().rev();
        let mut b = other.terms.iter().rev();
        loop {
            match (a.next(), b.next()) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((ha, ca)), Some((hb, cb))) => {
                    let o = ha.cmp(hb).then(ca.cmp(cb));
                    if o != Ordering::Equal {
                        return o;
                    }
                }
            }
        }
    }
}

/// Constellation regime for the cost model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Arbitrary constellations: every real symbol of a group is searched.
    Arbitrary,
    /// One unitary PAM symbol per leaf is recovered by rounding instead of search.
    Reduced,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("symbols {a} and {b} are in sibling groups but are not HR-orthogonal")]
    NotOrthogonal { a: usize, b: usize },
    #[error("encoding group {0} is split across parts of the decoding structure")]
    SplitsEncodingGroup(usize),
    #[error("a split must have at least two groups")]
    TooFewGroups,
    #[error("structure does not cover the design's symbols exactly once")]
    Coverage,
}

fn conflict(a: &CodeVector, b: &CodeVector) -> bool {
    a.xor(b).is_even()
}

/// Checks that a decoding tree is sound for a design: siblings are HR-orthogonal and no
/// encoding group is split. Error indices are one-based.
pub fn check_structure(d: &Design, node: &DecodeNode) -> Result<(), StructureError> {
    if node.symbols() != (0..d.k()).collect::<Vec<_>>() {
        return Err(StructureError::Coverage);
    }
    let mut part_of = vec![0usize; d.k()];
    let mut parts = vec![];
    node.collect_parts(&mut parts);
    for (p, part) in parts.iter().enumerate() {
        for &i in part {
            part_of[i] = p;
        }
    }
    for (e, grp) in d.encoding_groups().iter().enumerate() {
        if grp.iter().any(|&i| part_of[i] != part_of[grp[0]]) {
            return Err(StructureError::SplitsEncodingGroup(e + 1));
        }
    }
    check_node(d.vectors(), node)
}

fn check_node(v: &[CodeVector], node: &DecodeNode) -> Result<(), StructureError> {
    if let DecodeNode::Split { groups, .. } = node {
        if groups.len() < 2 {
            return Err(StructureError::TooFewGroups);
        }
        let syms: Vec<Vec<usize>> = groups.iter().map(|g| g.symbols()).collect();
        for i in 0..syms.len() {
            for j in i + 1..syms.len() {
                for &a in &syms[i] {
                    for &b in &syms[j] {
                        if conflict(&v[a], &v[b]) {
                            return Err(StructureError::NotOrthogonal { a: a.min(b) + 1, b: a.max(b) + 1 });
                        }
                    }
                }
            }
        }
        for g in groups {
            check_node(v, g)?;
        }
    }
    Ok(())
}

/// Connected components of the non-orthogonality graph restricted to `subset`, each
/// sorted, ordered by smallest member.
pub fn components(vectors: &[CodeVector], subset: &[usize]) -> Vec<Vec<usize>> {
    let n = subset.len();
    let mut comp = vec![usize::MAX; n];
    let mut out = vec![];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| subset[i]);
    for &s in &order {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        comp[s] = id;
        let mut stack = vec![s];
        let mut members = vec![];
        while let Some(u) = stack.pop() {
            members.push(subset[u]);
            for w in 0..n {
                if comp[w] == usize::MAX && conflict(&vectors[subset[u]], &vectors[subset[w]]) {
                    comp[w] = id;
                    stack.push(w);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

/// The finest multigroup partition of a design (zero-based, canonical order).
pub fn finest_partition(d: &Design) -> Vec<Vec<usize>> {
    let all: Vec<usize> = (0..d.k()).collect();
    components(d.vectors(), &all)
}

/// Result of conditioning on a set of symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FdOutcome {
    pub conditioned: Vec<usize>,
    /// Finest partition of the remaining symbols.
    pub groups: Vec<Vec<usize>>,
}

impl FdOutcome {
    /// Conditioning helps when the rest splits into more than one group.
    pub fn is_success(&self) -> bool {
        self.groups.len() > 1
    }
}

pub fn fd_structure(d: &Design, conditioned: &[usize]) -> FdOutcome {
    let mut cond: Vec<usize> = conditioned.to_vec();
    cond.sort_unstable();
    cond.dedup();
    let rest: Vec<usize> = (0..d.k()).filter(|i| cond.binary_search(i).is_err()).collect();
    FdOutcome { groups: components(d.vectors(), &rest), conditioned: cond }
}

/// Cost of a tree without checking it.
pub fn tree_cost(node: &DecodeNode, pam_leaf: &dyn Fn(&[usize]) -> bool) -> Cost {
    match node {
        DecodeNode::Leaf(s) => {
            let n = s.len() as u32;
            if pam_leaf(s) {
                Cost::monomial(n - 1, 1)
            } else {
                Cost::monomial(n, 1)
            }
        }
        DecodeNode::Split { conditioned, groups } => groups
            .iter()
            .fold(Cost::default(), |acc, g| acc.plus(&tree_cost(g, pam_leaf)))
            .shifted(conditioned.len() as u32),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Complexity {
    pub cost: Cost,
    /// Regime actually applied (reduced falls back to arbitrary when it cannot apply).
    pub regime: Regime,
    /// Symbols (zero-based) that take regular PAM values in the reduced regime.
    pub pam_symbols: Vec<usize>,
    pub note: Option<String>,
}

/// Decoding cost of a tree under a constellation regime.
///
/// In the reduced regime each leaf picks its first symbol whose encoding group is a
/// singleton; those symbols lie in pairwise orthogonal groups, so they can carry
/// regular PAM and be recovered by rounding. The reduction is used only if it lowers
/// the leading exponent by exactly one half and the chosen weight matrices satisfy
/// `A_i^H A_j + A_j^H A_i = 2 delta_ij I`.
pub fn complexity(d: &Design, node: &DecodeNode, regime: Regime) -> Complexity {
    let arbitrary = tree_cost(node, &|_| false);
    let plain = |note: Option<String>| Complexity { cost: arbitrary.clone(), regime: Regime::Arbitrary, pam_symbols: vec![], note };
    if regime == Regime::Arbitrary {
        return plain(None);
    }
    let singleton: Vec<bool> = {
        let mut s = vec![false; d.k()];
        for g in d.encoding_groups() {
            if g.len() == 1 {
                s[g[0]] = true;
            }
        }
        s
    };
    let pick = |leaf: &[usize]| leaf.iter().copied().find(|&i| singleton[i]);
    let pam_symbols: Vec<usize> = node.leaves().iter().filter_map(|l| pick(l)).collect();
    let reduced = tree_cost(node, &|leaf| pick(leaf).is_some());
    if reduced.leading_half() + 1 != arbitrary.leading_half() {
        return plain(Some(
            "no regular-PAM symbol is available in every leaf of the leading term; arbitrary-constellation cost reported".into(),
        ));
    }
    let mats: Vec<GaussMatrix> = pam_symbols.iter().map(|&i| phi_inv(&d.vectors()[i])).collect();
    if !regular_pam_compatible(&mats) {
        return plain(Some("chosen PAM symbols fail the Hurwitz-Radon identity; arbitrary-constellation cost reported".into()));
    }
    Complexity { cost: reduced, regime: Regime::Reduced, pam_symbols, note: None }
}

/// Whether `A_i^H A_j + A_j^H A_i = 2 delta_ij I` for all pairs, exactly.
pub fn regular_pam_compatible(mats: &[GaussMatrix]) -> bool {
    for i in 0..mats.len() {
        for j in i..mats.len() {
            let (a, b) = (&mats[i], &mats[j]);
            let s = match (a.adjoint().matmul(b), b.adjoint().matmul(a)) {
                (Ok(x), Ok(y)) => x.plus(&y).expect("same shape"),
                _ => return false,
            };
            let ok = if i == j {
                s == GaussMatrix::identity(a.dim()).scale(num_complex::Complex::new(2, 0))
            } else {
                s.is_zero()
            };
            if !ok {
                return false;
            }
        }
    }
    true
}

/// How the search explored candidate conditioned sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Every single-level conditioned set was tried in every refined group.
    Exhaustive,
    /// At least one group was too large and a greedy peeling order was used.
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchResult {
    pub node: DecodeNode,
    pub cost: Cost,
    pub mode: SearchMode,
    pub evaluations: u64,
    pub budget_exhausted: bool,
}

/// Largest number of encoding units for which all conditioned subsets are tried.
pub const EXHAUSTIVE_UNITS: usize = 16;
/// Default bound on candidate evaluations.
pub const DEFAULT_BUDGET: u64 = 4_000_000;
const KEEP: usize = 4;
const MAX_DEPTH: usize = 3;

#[derive(Clone, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn empty(n: usize) -> Bits {
        Bits(vec![0; n.div_ceil(64).max(1)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
}

struct Searcher<'a> {
    units: Vec<Vec<usize>>,
    adj: Vec<Bits>,
    budget: u64,
    evaluations: u64,
    greedy_used: bool,
    exhausted: bool,
    _d: &'a Design,
}

impl<'a> Searcher<'a> {
    fn new(d: &'a Design, budget: u64) -> Searcher<'a> {
        let units = d.encoding_groups();
        let v = d.vectors();
        let n = units.len();
        let mut adj = vec![Bits::empty(n); n];
        for a in 0..n {
            for b in a + 1..n {
                let hit = units[a].iter().any(|&x| units[b].iter().any(|&y| conflict(&v[x], &v[y])));
                if hit {
                    adj[a].set(b);
                    adj[b].set(a);
                }
            }
        }
        Searcher { units, adj, budget, evaluations: 0, greedy_used: false, exhausted: false, _d: d }
    }

    fn size(&self, set: &[usize]) -> u32 {
        set.iter().map(|&u| self.units[u].len() as u32).sum()
    }

    fn symbols(&self, set: &[usize]) -> Vec<usize> {
        let mut s: Vec<usize> = set.iter().flat_map(|&u| self.units[u].iter().copied()).collect();
        s.sort_unstable();
        s
    }

    fn comps(&self, rest: &[usize]) -> Vec<Vec<usize>> {
        let n = self.units.len();
        let mut in_rest = Bits::empty(n);
        for &u in rest {
            in_rest.set(u);
        }
        let mut seen = Bits::empty(n);
        let mut out = vec![];
        for &s in rest {
            if seen.get(s) {
                continue;
            }
            let mut comp = vec![s];
            seen.set(s);
            let mut k = 0;
            while k < comp.len() {
                let u = comp[k];
                k += 1;
                for (w, &word) in self.adj[u].0.iter().enumerate() {
                    let mut x = word & in_rest.0[w] & !seen.0[w];
                    while x != 0 {
                        let b = x.trailing_zeros() as usize;
                        x &= x - 1;
                        let t = w * 64 + b;
                        seen.set(t);
                        comp.push(t);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    fn leaf(&self, cell: &[usize]) -> (Cost, DecodeNode) {
        (Cost::monomial(self.size(cell), 1), DecodeNode::Leaf(self.symbols(cell)))
    }

    /// Single-level cost of conditioning `cond` inside `cell`, if the rest splits.
    fn one_level(&mut self, cell: &[usize], cond: &[usize]) -> Option<(Cost, Vec<Vec<usize>>)> {
        self.evaluations += 1;
        let mut mark = Bits::empty(self.units.len());
        for &u in cond {
            mark.set(u);
        }
        let rest: Vec<usize> = cell.iter().copied().filter(|&u| !mark.get(u)).collect();
        let comps = self.comps(&rest);
        if comps.len() < 2 {
            return None;
        }
        let cost = comps
            .iter()
            .fold(Cost::default(), |acc, c| acc.plus(&Cost::monomial(self.size(c), 1)))
            .shifted(self.size(cond));
        Some((cost, comps))
    }

    fn out_of_budget(&mut self) -> bool {
        if self.evaluations >= self.budget {
            self.exhausted = true;
        }
        self.exhausted
    }

    fn candidates(&mut self, cell: &[usize]) -> Vec<(Cost, Vec<usize>, Vec<Vec<usize>>)> {
        let mut found: Vec<(Cost, Vec<usize>, Vec<Vec<usize>>)> = vec![];
        let keep = |found: &mut Vec<(Cost, Vec<usize>, Vec<Vec<usize>>)>, c: Cost, cond: Vec<usize>, comps| {
            found.push((c, cond, comps));
            found.sort_by(|a, b| a.0.cmp(&b.0));
            found.truncate(KEEP);
        };
        let n = cell.len();
        if n <= EXHAUSTIVE_UNITS {
            for mask in 1u32..(1u32 << n) - 1 {
                if self.out_of_budget() {
                    break;
                }
                let cond: Vec<usize> = (0..n).filter(|b| mask >> b & 1 == 1).map(|b| cell[b]).collect();
                if let Some((c, comps)) = self.one_level(cell, &cond) {
                    if found.len() < KEEP || c < found[found.len() - 1].0 {
                        keep(&mut found, c, cond, comps);
                    }
                }
            }
        } else {
            self.greedy_used = true;
            let mut cond: Vec<usize> = vec![];
            let mut rest: Vec<usize> = cell.to_vec();
            while rest.len() > 1 && !self.out_of_budget() {
                let mut best: Option<(Cost, usize, usize)> = None;
                for (pos, &u) in rest.iter().enumerate() {
                    let mut trial = cond.clone();
                    trial.push(u);
                    let c = match self.one_level(cell, &trial) {
                        Some((c, _)) => c,
                        None => Cost::monomial(self.size(cell), 1).plus(&Cost::monomial(0, 1)),
                    };
                    let degree = rest.iter().filter(|&&w| self.adj[u].get(w)).count();
                    let better = match &best {
                        None => true,
                        Some((bc, bd, _)) => c < *bc || (c == *bc && degree > *bd),
                    };
                    if better {
                        best = Some((c, degree, pos));
                    }
                }
                let (_, _, pos) = best.expect("rest is non-empty");
                cond.push(rest.remove(pos));
                let mut sorted = cond.clone();
                sorted.sort_unstable();
                if let Some((c, comps)) = self.one_level(cell, &sorted) {
                    if found.len() < KEEP || c < found[found.len() - 1].0 {
                        keep(&mut found, c, sorted, comps);
                    }
                }
            }
        }
        found
    }

    fn refine(&mut self, cell: &[usize], depth: usize) -> (Cost, DecodeNode) {
        let mut best = self.leaf(cell);
        if cell.len() < 2 || depth == 0 {
            return best;
        }
        for (_, cond, comps) in self.candidates(cell) {
            let children: Vec<(Cost, DecodeNode)> = comps.iter().map(|c| self.refine(c, depth - 1)).collect();
            let cost = children.iter().fold(Cost::default(), |acc, (c, _)| acc.plus(c)).shifted(self.size(&cond));
            if cost < best.0 {
                let node = DecodeNode::Split {
                    conditioned: self.symbols(&cond),
                    groups: children.into_iter().map(|(_, n)| n).collect(),
                };
                best = (cost, node);
            }
        }
        best
    }
}

/// Searches for a cheap decoding tree. Conditioned sets are unions of encoding groups.
/// Within each group of the finest partition, all single-level conditioned sets are
/// tried when the group has at most [`EXHAUSTIVE_UNITS`] encoding units, otherwise a
/// greedy peeling order is used; the best few are refined recursively. The result is
/// the best tree found, which is not claimed to be optimal.
pub fn fd_search(d: &Design, budget: u64) -> SearchResult {
    let mut s = Searcher::new(d, budget);
    let all: Vec<usize> = (0..s.units.len()).collect();
    let cells = s.comps(&all);
    let mut parts: Vec<(Cost, DecodeNode)> = cells.iter().map(|c| s.refine(c, MAX_DEPTH)).collect();
    let (cost, node) = if parts.len() == 1 {
        parts.remove(0)
    } else {
        let cost = parts.iter().fold(Cost::default(), |acc, (c, _)| acc.plus(c));
        (cost, DecodeNode::groups(parts.into_iter().map(|(_, n)| n).collect()))
    };
    SearchResult {
        node: node.canonical(),
        cost,
        mode: if s.greedy_used { SearchMode::Greedy } else { SearchMode::Exhaustive },
        evaluations: s.evaluations,
        budget_exhausted: s.exhausted,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostSummary {
    pub regime: Regime,
    pub multiplier: u64,
    /// Leading exponent of `M`, as a fraction.
    pub exponent: String,
    pub expression: String,
    /// One-based.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub pam_symbols: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CostSummary {
    pub fn from_complexity(c: &Complexity) -> CostSummary {
        CostSummary {
            regime: c.regime,
            multiplier: c.cost.leading_multiplier(),
            exponent: c.cost.leading_exponent().to_string(),
            expression: c.cost.to_string(),
            pam_symbols: c.pam_symbols.iter().map(|i| i + 1).collect(),
            note: c.note.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchSummary {
    pub mode: SearchMode,
    pub evaluations: u64,
    pub budget_exhausted: bool,
    pub expression: String,
}

/// Everything the analyzer reports about a design. Indices are one-based.
#[derive(Debug, Clone, Serialize)]
pub struct DecodabilityReport {
    pub name: String,
    pub m: usize,
    pub k: usize,
    pub rate: String,
    /// Whether the design's own groups are pairwise HR-orthogonal.
    pub groups_valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub groups_witness: Option<(usize, usize)>,
    pub finest_partition: Vec<Vec<usize>>,
    /// Number of groups in the finest partition.
    pub multigroup: usize,
    /// Some split in the reported structure conditions on a non-empty set.
    pub fast_decodable: bool,
    /// Multigroup with at least one group that is itself fast-decodable.
    pub fast_group_decodable: bool,
    pub structure_source: StructureSource,
    pub structure: NodeFile,
    pub arbitrary: CostSummary,
    pub reduced: CostSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub declared: Option<CostSummary>,
    pub search: SearchSummary,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip)]
    pub node: DecodeNode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureSource {
    Declared,
    Search,
}

/// Full analysis: finest partition, the better of the declared and searched decoding
/// trees, and its cost in both regimes.
pub fn analyze(d: &Design, budget: u64) -> DecodabilityReport {
    let mut notes = vec![];
    let fine = finest_partition(d);
    let search = fd_search(d, budget);
    if search.budget_exhausted {
        notes.push(format!("search budget of {budget} evaluations exhausted; best tree so far reported"));
    }
    let mut chosen = (StructureSource::Search, search.node.clone());
    let mut declared = None;
    if let Some(node) = d.structure() {
        match check_structure(d, node) {
            Ok(()) => {
                let c = complexity(d, node, Regime::Arbitrary);
                if c.cost <= search.cost {
                    chosen = (StructureSource::Declared, node.clone());
                } else {
                    notes.push(format!("search found {} below the declared structure's {}", search.cost, c.cost));
                }
                declared = Some(CostSummary::from_complexity(&c));
            }
            Err(e) => notes.push(format!("declared structure rejected: {e}")),
        }
    }
    let node = chosen.1;
    let arbitrary = complexity(d, &node, Regime::Arbitrary);
    let reduced = complexity(d, &node, Regime::Reduced);
    let fgd = fine.len() > 1
        && match &node {
            DecodeNode::Split { conditioned, groups } if conditioned.is_empty() => groups.iter().any(|g| g.has_conditioning()),
            _ => false,
        };
    let validity = d.validate_g_group();
    DecodabilityReport {
        name: d.name().to_string(),
        m: d.m(),
        k: d.k(),
        rate: d.rate().to_string(),
        groups_valid: validity.is_valid(),
        groups_witness: match validity {
            crate::design::GroupValidity::Invalid { first, second } => Some((first + 1, second + 1)),
            _ => None,
        },
        multigroup: fine.len(),
        finest_partition: fine.iter().map(|g| g.iter().map(|i| i + 1).collect()).collect(),
        fast_decodable: node.has_conditioning(),
        fast_group_decodable: fgd,
        structure_source: chosen.0,
        structure: NodeFile::from_node(&node),
        arbitrary: CostSummary::from_complexity(&arbitrary),
        reduced: CostSummary::from_complexity(&reduced),
        declared,
        search: SearchSummary {
            mode: search.mode,
            evaluations: search.evaluations,
            budget_exhausted: search.budget_exhausted,
            expression: search.cost.to_string(),
        },
        notes,
        node,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_arithmetic_and_rendering() {
        let c = Cost::monomial(10, 3).plus(&Cost::monomial(8, 1));
        assert_eq!(c.to_string(), "3M^5 + M^4");
        assert_eq!(c.leading_exponent(), Rational64::new(5, 1));
        assert_eq!(Cost::monomial(3, 2).to_string(), "2M^1.5");
        assert_eq!(Cost::monomial(2, 4).to_string(), "4M");
        assert_eq!(c.eval_count(4), Some(3 * 1024 + 256));
        assert_eq!(Cost::monomial(3, 1).eval_count(2), None);
        assert_eq!(Cost::monomial(3, 1).eval_count(16), Some(64));
    }

    #[test]
    fn cost_order() {
        let a = Cost::monomial(10, 3);
        let b = Cost::monomial(10, 5);
        let c = Cost::monomial(11, 1);
        assert!(a < b && b < c);
        assert!(a < a.plus(&Cost::monomial(0, 1)));
    }

    #[test]
    fn tree_order_and_zero_pairs() {
        let t = DecodeNode::Split {
            conditioned: vec![4],
            groups: vec![DecodeNode::Leaf(vec![0, 1]), DecodeNode::Leaf(vec![2, 3])],
        };
        assert_eq!(t.column_order(), vec![0, 1, 2, 3, 4]);
        assert_eq!(t.zero_pairs(), vec![(0, 2), (0, 3), (1, 2), (1, 3)]);
        assert_eq!(tree_cost(&t, &|_| false), Cost::monomial(3, 2));
    }
}
