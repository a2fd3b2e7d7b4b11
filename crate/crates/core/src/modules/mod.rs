//! Concrete gl_N modules: indexed basis, weights, and sparse matrices for
//! every generator `e_{a,b}`. Generator indices are zero-based throughout.

mod sparse;
mod tensor;
mod verma;

use std::fmt;
use std::sync::Arc;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{Rat, RatMatrix};

pub use sparse::SparseMat;
pub use tensor::TensorModule;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModuleError {
    #[error("rank must be at least 1")]
    ZeroRank,
    #[error("highest weight has {got} components, expected {expected}")]
    WeightLength { expected: usize, got: usize },
    #[error("tensor factors have mismatched ranks {0} and {1}")]
    RankMismatch(usize, usize),
    #[error("tensor product needs at least one factor")]
    NoFactors,
    #[error("invalid module descriptor `{0}`")]
    InvalidDescriptor(String),
}

/// Eigenvalues of `e_{1,1}, ..., e_{N,N}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Weight(pub Vec<i64>);

impl Weight {
    pub fn zero(n: usize) -> Self {
        Weight(vec![0; n])
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn add(&self, other: &Weight) -> Weight {
        assert_eq!(self.rank(), other.rank(), "weight rank mismatch");
        Weight(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Number of simple lowerings separating `self` from `top`:
    /// `sum_i sum_{j<=i} (top - self)_j` over `i < N - 1`.
    pub fn height_below(&self, top: &Weight) -> i64 {
        let mut partial = 0;
        let mut h = 0;
        for j in 0..self.rank().saturating_sub(1) {
            partial += top.0[j] - self.0[j];
            h += partial;
        }
        h
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Serializable module description, e.g. `{"kind": "sym", "N": 2, "k": 2}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModuleDescriptor {
    Vector {
        #[serde(rename = "N")]
        n: usize,
    },
    Sym {
        #[serde(rename = "N")]
        n: usize,
        k: usize,
    },
    Verma {
        #[serde(rename = "N")]
        n: usize,
        hw: Vec<i64>,
        depth: usize,
    },
}

impl ModuleDescriptor {
    pub fn rank(&self) -> usize {
        match self {
            ModuleDescriptor::Vector { n }
            | ModuleDescriptor::Sym { n, .. }
            | ModuleDescriptor::Verma { n, .. } => *n,
        }
    }

    /// Short form used on the command line: `vector`, `sym:K`,
    /// `verma:L1,...,LN:DEPTH`.
    pub fn parse(n: usize, s: &str) -> Result<Self, ModuleError> {
        let bad = || ModuleError::InvalidDescriptor(s.to_string());
        let mut parts = s.split(':');
        let d = match parts.next().ok_or_else(bad)? {
            "vector" => ModuleDescriptor::Vector { n },
            "sym" => {
                let k = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                ModuleDescriptor::Sym { n, k }
            }
            "verma" => {
                let hw = parts
                    .next()
                    .ok_or_else(bad)?
                    .split(',')
                    .map(|t| t.trim().parse::<i64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| bad())?;
                let depth = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                ModuleDescriptor::Verma { n, hw, depth }
            }
            _ => return Err(bad()),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(d)
    }

    pub fn build(&self) -> Result<ModuleRealization, ModuleError> {
        match self {
            ModuleDescriptor::Vector { n } => vector_module(*n),
            ModuleDescriptor::Sym { n, k } => symmetric_power_module(*n, *k),
            ModuleDescriptor::Verma { n, hw, depth } => truncated_verma_module(*n, hw, *depth),
        }
    }
}

impl fmt::Display for ModuleDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModuleDescriptor::Vector { .. } => write!(f, "vector"),
            ModuleDescriptor::Sym { k, .. } => write!(f, "sym:{k}"),
            ModuleDescriptor::Verma { hw, depth, .. } => {
                let hw: Vec<String> = hw.iter().map(i64::to_string).collect();
                write!(f, "verma:{}:{depth}", hw.join(","))
            }
        }
    }
}

/// A gl_N module with explicit basis. `actions[a * N + b]` is the matrix of
/// `e_{a,b}`; columns are source basis vectors.
#[derive(Clone, Debug)]
pub struct ModuleRealization {
    descriptor: ModuleDescriptor,
    rank: usize,
    weights: Vec<Weight>,
    heights: Vec<usize>,
    actions: Vec<SparseMat>,
    hw_index: usize,
    truncation: Option<usize>,
}

impl ModuleRealization {
    fn assemble(
        descriptor: ModuleDescriptor,
        weights: Vec<Weight>,
        actions: Vec<SparseMat>,
        truncation: Option<usize>,
    ) -> Self {
        let rank = descriptor.rank();
        let top = weights[0].clone();
        let heights = weights
            .iter()
            .map(|w| usize::try_from(w.height_below(&top)).expect("basis above the top weight"))
            .collect();
        ModuleRealization {
            descriptor,
            rank,
            weights,
            heights,
            actions,
            hw_index: 0,
            truncation,
        }
    }

    pub fn descriptor(&self) -> &ModuleDescriptor {
        &self.descriptor
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weight_of(&self, i: usize) -> &Weight {
        &self.weights[i]
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }

    pub fn highest_weight(&self) -> &Weight {
        &self.weights[self.hw_index]
    }

    /// Height of basis vector `i` below the highest weight.
    pub fn height_of(&self, i: usize) -> usize {
        self.heights[i]
    }

    pub fn hw_index(&self) -> usize {
        self.hw_index
    }

    /// PBW depth bound for truncated Verma modules; `None` if exact.
    pub fn truncation(&self) -> Option<usize> {
        self.truncation
    }

    pub fn action(&self, a: usize, b: usize) -> &SparseMat {
        &self.actions[a * self.rank + b]
    }

    pub fn action_dense(&self, a: usize, b: usize) -> RatMatrix {
        self.action(a, b).to_dense()
    }
}

pub fn vector_module(n: usize) -> Result<ModuleRealization, ModuleError> {
    if n == 0 {
        return Err(ModuleError::ZeroRank);
    }
    let weights = (0..n)
        .map(|i| {
            let mut w = vec![0; n];
            w[i] = 1;
            Weight(w)
        })
        .collect();
    let mut actions = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            actions.push(SparseMat::from_triplets(n, n, [(a, b, Rat::from_integer(1.into()))]));
        }
    }
    Ok(ModuleRealization::assemble(
        ModuleDescriptor::Vector { n },
        weights,
        actions,
        None,
    ))
}

/// Multi-indices with `sum = k`, lexicographically descending so that
/// `(k, 0, ..., 0)` comes first.
fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        return vec![vec![k]];
    }
    let mut out = Vec::new();
    for first in (0..=k).rev() {
        for mut rest in compositions(n - 1, k - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Degree-`k` polynomials in `N` variables; `e_{a,b}` acts as `x_a d/dx_b`.
pub fn symmetric_power_module(n: usize, k: usize) -> Result<ModuleRealization, ModuleError> {
    if n == 0 {
        return Err(ModuleError::ZeroRank);
    }
    let basis = compositions(n, k);
    let index: std::collections::HashMap<Vec<usize>, usize> =
        basis.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
    let dim = basis.len();
    let weights = basis
        .iter()
        .map(|m| Weight(m.iter().map(|&v| v as i64).collect()))
        .collect();
    let mut actions = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let trips = basis.iter().enumerate().filter_map(|(j, m)| {
                if m[b] == 0 {
                    return None;
                }
                let mut t = m.clone();
                t[b] -= 1;
                t[a] += 1;
                Some((index[&t], j, Rat::from_integer((m[b] as i64).into())))
            });
            actions.push(SparseMat::from_triplets(dim, dim, trips));
        }
    }
    Ok(ModuleRealization::assemble(
        ModuleDescriptor::Sym { n, k },
        weights,
        actions,
        None,
    ))
}

fn exponent_vectors(len: usize, total: u32) -> Vec<Vec<u32>> {
    if len == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in exponent_vectors(len - 1, total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Verma module with integer highest weight `hw`, truncated to PBW monomials
/// with at most `depth` lowering factors. Components of a generator action
/// landing beyond the cut are dropped.
pub fn truncated_verma_module(
    n: usize,
    hw: &[i64],
    depth: usize,
) -> Result<ModuleRealization, ModuleError> {
    if n == 0 {
        return Err(ModuleError::ZeroRank);
    }
    if hw.len() != n {
        return Err(ModuleError::WeightLength {
            expected: n,
            got: hw.len(),
        });
    }
    let mut alg = verma::PbwAlgebra::new(hw.to_vec());
    let nroots = alg.roots().len();
    let basis: Vec<Vec<u32>> = (0..=depth as u32)
        .flat_map(|t| exponent_vectors(nroots, t))
        .collect();
    let index: std::collections::HashMap<Vec<u32>, usize> =
        basis.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
    let dim = basis.len();
    let weights = basis.iter().map(|m| Weight(alg.weight(m))).collect();
    let mut actions = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let mut trips = Vec::new();
            for (j, m) in basis.iter().enumerate() {
                for (img, c) in alg.act(a, b, m) {
                    if let Some(&i) = index.get(&img) {
                        trips.push((i, j, c));
                    }
                }
            }
            actions.push(SparseMat::from_triplets(dim, dim, trips));
        }
    }
    Ok(ModuleRealization::assemble(
        ModuleDescriptor::Verma {
            n,
            hw: hw.to_vec(),
            depth,
        },
        weights,
        actions,
        Some(depth),
    ))
}

/// Anything carrying gl_N generator matrices: a single module or a tensor
/// product with the coproduct action.
pub trait GlAction {
    fn rank(&self) -> usize;
    fn dim(&self) -> usize;
    fn generator(&self, a: usize, b: usize) -> SparseMat;
    /// Height of basis vector `i` below the top weight.
    fn height(&self, i: usize) -> usize;
}

impl GlAction for ModuleRealization {
    fn rank(&self) -> usize {
        self.rank
    }
    fn dim(&self) -> usize {
        self.dim()
    }
    fn generator(&self, a: usize, b: usize) -> SparseMat {
        self.action(a, b).clone()
    }
    fn height(&self, i: usize) -> usize {
        self.heights[i]
    }
}

/// Largest absolute entry over all `N^4` residuals
/// `[e_ab, e_cd] - δ_bc e_ad + δ_ad e_cb`, restricted to source basis vectors
/// of height at most `max_height` when given.
pub fn check_bracket<M: GlAction + ?Sized>(m: &M, max_height: Option<usize>) -> Rat {
    let n = m.rank();
    let gens: Vec<SparseMat> = (0..n * n).map(|k| m.generator(k / n, k % n)).collect();
    let g = |a: usize, b: usize| &gens[a * n + b];
    let cols: Vec<bool> = (0..m.dim())
        .map(|i| max_height.is_none_or(|h| m.height(i) <= h))
        .collect();
    let mut worst = Rat::zero();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut r = g(a, b).commutator(g(c, d));
                    if b == c {
                        r = r.sub(g(a, d));
                    }
                    if a == d {
                        r = r.add(g(c, b));
                    }
                    for (_, j, v) in r.triplets() {
                        if cols[j] && v.abs() > worst {
                            worst = v.abs();
                        }
                    }
                }
            }
        }
    }
    worst
}

pub fn build_shared(desc: &ModuleDescriptor) -> Result<Arc<ModuleRealization>, ModuleError> {
    desc.build().map(Arc::new)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::int;

    fn dense(rows: &[&[i64]]) -> RatMatrix {
        RatMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect())
    }

    #[test]
    fn vector_module_units() {
        let v = vector_module(2).unwrap();
        assert_eq!(v.action_dense(0, 1), dense(&[&[0, 1], &[0, 0]]));
        assert_eq!(v.action_dense(0, 0), dense(&[&[1, 0], &[0, 0]]));
        let v3 = vector_module(3).unwrap();
        assert_eq!(v3.hw_index(), 0);
        assert_eq!(v3.highest_weight(), &Weight(vec![1, 0, 0]));
    }

    #[test]
    fn symmetric_power_differentiation_rule() {
        let s = symmetric_power_module(2, 2).unwrap();
        // basis: (2,0), (1,1), (0,2)
        assert_eq!(s.weight_of(0), &Weight(vec![2, 0]));
        assert_eq!(s.weight_of(1), &Weight(vec![1, 1]));
        let e21 = s.action(1, 0);
        assert_eq!(e21.get(1, 0), int(2));
        assert_eq!(s.action(0, 0).get(1, 1), int(1));
    }

    #[test]
    fn sym1_is_vector() {
        let s = symmetric_power_module(2, 1).unwrap();
        let v = vector_module(2).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert_eq!(s.action_dense(a, b), v.action_dense(a, b));
            }
        }
    }

    #[test]
    fn verma_examples() {
        let m = truncated_verma_module(2, &[3, 0], 0).unwrap();
        assert_eq!(m.dim(), 1);
        assert_eq!(m.action(0, 0).get(0, 0), int(3));

        let m = truncated_verma_module(2, &[3, 0], 2).unwrap();
        // basis: v, f v, f^2 v
        assert_eq!(m.action(0, 1).get(0, 1), int(3));

        let m = truncated_verma_module(3, &[2, 1, 0], 1).unwrap();
        assert_eq!(m.dim(), 4);
    }

    #[test]
    fn bracket_residuals() {
        assert!(check_bracket(&vector_module(3).unwrap(), None).is_zero());
        assert!(check_bracket(&symmetric_power_module(3, 2).unwrap(), None).is_zero());
        let m = truncated_verma_module(2, &[5, 1], 4).unwrap();
        assert!(check_bracket(&m, Some(3)).is_zero());
        // Λ1 - Λ2 = 4 makes f^5 v singular, so this cut happens to be exact.
        assert!(check_bracket(&m, None).is_zero());
        // For (3, 1) the cut at depth 4 is visible without the restriction.
        let m = truncated_verma_module(2, &[3, 1], 4).unwrap();
        assert!(check_bracket(&m, Some(3)).is_zero());
        assert!(!check_bracket(&m, None).is_zero());
    }

    #[test]
    fn gl3_verma_bracket_on_safe_part() {
        let m = truncated_verma_module(3, &[2, 0, -1], 3).unwrap();
        assert!(check_bracket(&m, Some(2)).is_zero());
    }

    #[test]
    fn descriptor_parse_and_json() {
        let d = ModuleDescriptor::parse(2, "verma:3,1:4").unwrap();
        assert_eq!(
            d,
            ModuleDescriptor::Verma {
                n: 2,
                hw: vec![3, 1],
                depth: 4
            }
        );
        assert!(ModuleDescriptor::parse(2, "spinor").is_err());
        let json = serde_json::to_string(&ModuleDescriptor::Sym { n: 2, k: 2 }).unwrap();
        assert_eq!(json, r#"{"kind":"sym","N":2,"k":2}"#);
        let back: ModuleDescriptor = serde_json::from_str(r#"{"kind":"vector","N":3}"#).unwrap();
        assert_eq!(back, ModuleDescriptor::Vector { n: 3 });
    }
}
