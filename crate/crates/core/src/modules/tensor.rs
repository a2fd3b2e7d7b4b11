use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use num_traits::Zero;

use super::{GlAction, ModuleDescriptor, ModuleError, ModuleRealization, SparseMat, Weight};
use crate::exact::{Rat, RatMatrix};

/// `V_1 ⊗ ... ⊗ V_n` with the lexicographic tuple basis (first factor is
/// the slowest index).
#[derive(Debug)]
pub struct TensorModule {
    factors: Vec<Arc<ModuleRealization>>,
    rank: usize,
    dims: Vec<usize>,
    strides: Vec<usize>,
    dim: usize,
    weights: Vec<Weight>,
    heights: Vec<usize>,
    blocks: BTreeMap<Weight, Vec<usize>>,
    factor_actions: Vec<OnceLock<SparseMat>>,
    global_actions: Vec<OnceLock<SparseMat>>,
}

impl TensorModule {
    pub fn new(factors: Vec<Arc<ModuleRealization>>) -> Result<Self, ModuleError> {
        let first = factors.first().ok_or(ModuleError::NoFactors)?;
        let rank = first.rank();
        if let Some(f) = factors.iter().find(|f| f.rank() != rank) {
            return Err(ModuleError::RankMismatch(rank, f.rank()));
        }
        let dims: Vec<usize> = factors.iter().map(|f| f.dim()).collect();
        let mut strides = vec![1; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        let dim = dims.iter().product();
        let mut weights = Vec::with_capacity(dim);
        let mut heights = Vec::with_capacity(dim);
        let mut blocks: BTreeMap<Weight, Vec<usize>> = BTreeMap::new();
        for idx in 0..dim {
            let mut w = Weight::zero(rank);
            let mut h = 0;
            for (i, f) in factors.iter().enumerate() {
                let k = (idx / strides[i]) % dims[i];
                w = w.add(f.weight_of(k));
                h += f.height_of(k);
            }
            blocks.entry(w.clone()).or_default().push(idx);
            weights.push(w);
            heights.push(h);
        }
        let n = factors.len();
        Ok(TensorModule {
            factors,
            rank,
            dims,
            strides,
            dim,
            weights,
            heights,
            blocks,
            factor_actions: (0..n * rank * rank).map(|_| OnceLock::new()).collect(),
            global_actions: (0..rank * rank).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn from_descriptors(descs: &[ModuleDescriptor]) -> Result<Self, ModuleError> {
        let factors = descs
            .iter()
            .map(|d| d.build().map(Arc::new))
            .collect::<Result<Vec<_>, _>>()?;
        TensorModule::new(factors)
    }

    pub fn factors(&self) -> &[Arc<ModuleRealization>] {
        &self.factors
    }

    pub fn factor(&self, i: usize) -> &ModuleRealization {
        &self.factors[i]
    }

    pub fn descriptors(&self) -> Vec<ModuleDescriptor> {
        self.factors.iter().map(|f| f.descriptor().clone()).collect()
    }

    pub fn n_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Factor basis indices of tensor basis vector `idx`.
    pub fn tuple(&self, idx: usize) -> Vec<usize> {
        (0..self.dims.len())
            .map(|i| (idx / self.strides[i]) % self.dims[i])
            .collect()
    }

    pub fn index_of(&self, tuple: &[usize]) -> usize {
        tuple.iter().zip(&self.strides).map(|(k, s)| k * s).sum()
    }

    pub fn weight_of(&self, idx: usize) -> &Weight {
        &self.weights[idx]
    }

    /// Sum of factor heights of basis vector `idx`.
    pub fn height_of(&self, idx: usize) -> usize {
        self.heights[idx]
    }

    pub fn blocks(&self) -> &BTreeMap<Weight, Vec<usize>> {
        &self.blocks
    }

    /// Smallest truncation depth among the factors, if any is truncated.
    pub fn truncation(&self) -> Option<usize> {
        self.factors.iter().filter_map(|f| f.truncation()).min()
    }

    /// Basis vectors on which identities are claimed: all of them for exact
    /// modules, otherwise those of total height at most `depth - margin`.
    pub fn safe_indices(&self, margin: usize) -> Option<Vec<usize>> {
        let d = self.truncation()?;
        let limit = d.checked_sub(margin);
        Some(
            (0..self.dim)
                .filter(|&i| limit.is_some_and(|l| self.heights[i] <= l))
                .collect(),
        )
    }

    /// `e_{a,b}` acting in tensor slot `i`.
    pub fn factor_action(&self, i: usize, a: usize, b: usize) -> &SparseMat {
        let k = (i * self.rank + a) * self.rank + b;
        self.factor_actions[k].get_or_init(|| self.embed_single_sparse(i, self.factors[i].action(a, b)))
    }

    /// `e_{a,b}` acting as `sum_i e_{a,b}^{(i)}`.
    pub fn global_action(&self, a: usize, b: usize) -> &SparseMat {
        self.global_actions[a * self.rank + b].get_or_init(|| {
            let mut acc = SparseMat::zeros(self.dim, self.dim);
            for i in 0..self.n_factors() {
                acc.add_scaled(&Rat::from_integer(1.into()), self.factor_action(i, a, b));
            }
            acc
        })
    }

    fn embed_single_sparse(&self, i: usize, op: &SparseMat) -> SparseMat {
        let mut trips = Vec::new();
        for col in 0..self.dim {
            let t = self.tuple(col);
            for (row_i, v) in column_entries(op, t[i]) {
                let row = col - t[i] * self.strides[i] + row_i * self.strides[i];
                trips.push((row, col, v));
            }
        }
        SparseMat::from_triplets(self.dim, self.dim, trips)
    }

    /// Embed an operator on `V_i ⊗ V_j` (`i < j`, pair basis in the same
    /// lexicographic convention) as `op^{(i,j)}`.
    pub fn embed_pair(&self, i: usize, j: usize, op: &RatMatrix) -> RatMatrix {
        assert!(i < j && j < self.n_factors(), "pair slots must satisfy i < j < n");
        let (di, dj) = (self.dims[i], self.dims[j]);
        assert_eq!(op.rows(), di * dj, "pair operator has wrong size");
        let mut out = RatMatrix::zeros(self.dim, self.dim);
        for row in 0..self.dim {
            let t = self.tuple(row);
            let p = t[i] * dj + t[j];
            let base = row - t[i] * self.strides[i] - t[j] * self.strides[j];
            for q in 0..di * dj {
                let v = &op[(p, q)];
                if v.is_zero() {
                    continue;
                }
                let col = base + (q / dj) * self.strides[i] + (q % dj) * self.strides[j];
                out[(row, col)] = v.clone();
            }
        }
        out
    }

    /// Diagonal operator with entry `f(tuple)` at each basis vector.
    pub fn diagonal(&self, mut f: impl FnMut(&[usize]) -> Rat) -> RatMatrix {
        RatMatrix::diagonal((0..self.dim).map(|i| f(&self.tuple(i))).collect())
    }

    /// Permutation `P: V_1 ⊗ V_2 → V_2 ⊗ V_1` for a two-factor product.
    pub fn swap_two(&self) -> RatMatrix {
        assert_eq!(self.n_factors(), 2, "swap needs exactly two factors");
        let (d1, d2) = (self.dims[0], self.dims[1]);
        let mut p = RatMatrix::zeros(self.dim, self.dim);
        for a in 0..d1 {
            for b in 0..d2 {
                p[(b * d1 + a, a * d2 + b)] = Rat::from_integer(1.into());
            }
        }
        p
    }
}

fn column_entries(op: &SparseMat, col: usize) -> Vec<(usize, Rat)> {
    (0..op.rows())
        .filter_map(|r| {
            let v = op.get(r, col);
            (!v.is_zero()).then_some((r, v))
        })
        .collect()
}

impl GlAction for TensorModule {
    fn rank(&self) -> usize {
        self.rank
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn generator(&self, a: usize, b: usize) -> SparseMat {
        self.global_action(a, b).clone()
    }
    fn height(&self, i: usize) -> usize {
        self.heights[i]
    }
}
