//! Rational R-matrices `R_{V1,V2}(x)` solved blockwise over `Q(x)` from
//! the normalization, coproduct-commutation, and spectral intertwining
//! relations.

mod cache;
mod yangian;

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::exact::{
    determinant, rat_string, solve_affine_system, FieldError, FieldMatrix, Poly, Rat, RatFunc,
    RatMatrix, Solution,
};
use crate::modules::{ModuleDescriptor, ModuleError, ModuleRealization, TensorModule, Weight};

pub use cache::RMatrixCache;
pub use yangian::{
    check_intertwiner, check_ybe, check_yangian_relation, yangian_t, yangian_t_generic,
};
pub(crate) use yangian::masked_max;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RMatrixError {
    #[error("weight block {weight:?} is not uniquely determined ({})",
        match .nullity { Some(k) => format!("nullity {k}"), None => "inconsistent".to_string() })]
    NonGenericModule {
        weight: Weight,
        nullity: Option<usize>,
    },
    #[error("R-matrix block {weight:?} entry ({row}, {col}) has a pole at x = {}", rat_string(.at))]
    Pole {
        weight: Weight,
        row: usize,
        col: usize,
        at: Rat,
    },
    #[error("R-matrix block {weight:?} is singular at x = {}", rat_string(.at))]
    Singular { weight: Weight, at: Rat },
    #[error("spectral parameter coincides with an evaluation point")]
    Coincidence,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Module(#[from] ModuleError),
}

impl RMatrixError {
    /// Errors caused by an unlucky sample point rather than by the inputs.
    pub fn is_resample(&self) -> bool {
        matches!(
            self,
            RMatrixError::Pole { .. }
                | RMatrixError::Singular { .. }
                | RMatrixError::Coincidence
                | RMatrixError::Field(FieldError::Pole { .. })
                | RMatrixError::Field(FieldError::Singular { .. })
        )
    }
}

/// One weight block of an R-matrix.
#[derive(Debug, Clone)]
pub struct RBlock {
    pub weight: Weight,
    /// Pair basis indices of the block, ascending.
    pub indices: Vec<usize>,
    /// Height below the top weight of `V1 ⊗ V2`.
    pub height: usize,
    pub matrix: FieldMatrix<RatFunc>,
    pub det: RatFunc,
    /// `false` for blocks beyond a truncation cut; these hold the identity
    /// and carry no claim.
    pub solved: bool,
}

#[derive(Debug, Clone)]
pub struct RMatrix {
    v1: ModuleDescriptor,
    v2: ModuleDescriptor,
    dim: usize,
    blocks: Vec<RBlock>,
    /// Pair basis index → (block, position in block).
    locate: Vec<(usize, usize)>,
}

/// Relation `R X = Y R` with `X = X0 + x X1`, `Y = Y0 + x Y1`.
struct Relation {
    x0: RatMatrix,
    x1: Option<RatMatrix>,
    y0: RatMatrix,
    y1: Option<RatMatrix>,
}

fn linear_entry(c0: &Rat, c1: Option<&Rat>) -> RatFunc {
    match c1 {
        Some(c1) if !c1.is_zero() => {
            RatFunc::from_poly(Poly::from_coeffs(vec![c0.clone(), c1.clone()]))
        }
        _ => RatFunc::constant(c0.clone()),
    }
}

impl Relation {
    fn x(&self, i: usize, j: usize) -> RatFunc {
        linear_entry(&self.x0[(i, j)], self.x1.as_ref().map(|m| &m[(i, j)]))
    }
    fn y(&self, i: usize, j: usize) -> RatFunc {
        linear_entry(&self.y0[(i, j)], self.y1.as_ref().map(|m| &m[(i, j)]))
    }
}

fn relations(pair: &TensorModule) -> Vec<Relation> {
    let n = pair.rank();
    let mut out = Vec::with_capacity(2 * n * n);
    for a in 0..n {
        for b in 0..n {
            let delta = pair.global_action(a, b).to_dense();
            out.push(Relation {
                x0: delta.clone(),
                x1: None,
                y0: delta,
                y1: None,
            });
        }
    }
    for a in 0..n {
        for b in 0..n {
            let second = pair.factor_action(1, a, b).to_dense();
            let mut left = crate::modules::SparseMat::zeros(pair.dim(), pair.dim());
            let mut right = left.clone();
            for c in 0..n {
                left = left.add(&pair.factor_action(0, a, c).mul(pair.factor_action(1, c, b)));
                right = right.add(&pair.factor_action(0, c, b).mul(pair.factor_action(1, a, c)));
            }
            out.push(Relation {
                x0: left.to_dense().scale(&-Rat::one()),
                x1: Some(second.clone()),
                y0: right.to_dense().scale(&-Rat::one()),
                y1: Some(second),
            });
        }
    }
    out
}

/// Solve for `R_{V1,V2}(x)`, block by block in order of increasing height
/// below the top weight, requiring a unique solution on every block.
pub fn compute_rmatrix(
    v1: &Arc<ModuleRealization>,
    v2: &Arc<ModuleRealization>,
) -> Result<RMatrix, RMatrixError> {
    let pair = TensorModule::new(vec![v1.clone(), v2.clone()])?;
    let dim = pair.dim();
    let top = v1.highest_weight().add(v2.highest_weight());
    let top_index = pair.index_of(&[v1.hw_index(), v2.hw_index()]);
    let cut = pair.truncation();

    let mut blocks: Vec<RBlock> = pair
        .blocks()
        .iter()
        .map(|(w, idx)| {
            let height = usize::try_from(w.height_below(&top)).expect("weight above top");
            RBlock {
                weight: w.clone(),
                indices: idx.clone(),
                height,
                matrix: FieldMatrix::identity(idx.len()),
                det: RatFunc::one(),
                solved: false,
            }
        })
        .collect();
    blocks.sort_by(|a, b| a.height.cmp(&b.height).then_with(|| b.weight.cmp(&a.weight)));
    let mut locate = vec![(0, 0); dim];
    for (bi, blk) in blocks.iter().enumerate() {
        for (pos, &i) in blk.indices.iter().enumerate() {
            locate[i] = (bi, pos);
        }
    }

    let rels = relations(&pair);
    let max_height = blocks.last().map_or(0, |b| b.height);
    for h in 0..=max_height {
        if cut.is_some_and(|d| h > d) {
            break;
        }
        let layer: Vec<usize> = (0..blocks.len()).filter(|&b| blocks[b].height == h).collect();
        let solved: Vec<(usize, FieldMatrix<RatFunc>)> = layer
            .par_iter()
            .map(|&bi| {
                solve_block(&blocks, &locate, &rels, bi, top_index).map(|m| (bi, m))
            })
            .collect::<Result<_, _>>()?;
        for (bi, m) in solved {
            blocks[bi].det = determinant(&m);
            blocks[bi].matrix = m;
            blocks[bi].solved = true;
        }
    }

    Ok(RMatrix {
        v1: v1.descriptor().clone(),
        v2: v2.descriptor().clone(),
        dim,
        blocks,
        locate,
    })
}

fn solve_block(
    blocks: &[RBlock],
    locate: &[(usize, usize)],
    rels: &[Relation],
    bi: usize,
    top_index: usize,
) -> Result<FieldMatrix<RatFunc>, RMatrixError> {
    let blk = &blocks[bi];
    let s = blk.indices.len();
    let nunk = s * s;
    let usable = |b: usize| b == bi || blocks[b].solved;
    let known = |r: usize, c: usize| -> RatFunc {
        let (b, p) = locate[r];
        let (b2, q) = locate[c];
        if b != b2 {
            RatFunc::zero()
        } else {
            blocks[b].matrix[(p, q)].clone()
        }
    };

    let mut rows: Vec<Vec<RatFunc>> = Vec::new();
    let mut rhs: Vec<RatFunc> = Vec::new();
    if blk.indices.contains(&top_index) {
        let p = locate[top_index].1;
        let mut row = vec![RatFunc::zero(); nunk];
        row[p * s + p] = RatFunc::one();
        rows.push(row);
        rhs.push(RatFunc::one());
    }

    let dim = locate.len();
    for rel in rels {
        for r in 0..dim {
            let br = locate[r].0;
            if !usable(br) {
                continue;
            }
            for c in 0..dim {
                let bc = locate[c].0;
                if !usable(bc) || (br != bi && bc != bi) {
                    continue;
                }
                let mut row = vec![RatFunc::zero(); nunk];
                let mut b = RatFunc::zero();
                // sum_k R[r,k] X[k,c]
                for (pos, &k) in blocks[br].indices.iter().enumerate() {
                    let xv = rel.x(k, c);
                    if xv.is_zero() {
                        continue;
                    }
                    if br == bi {
                        let slot = &mut row[locate[r].1 * s + pos];
                        *slot = &*slot + &xv;
                    } else {
                        b = &b - &(&known(r, k) * &xv);
                    }
                }
                // - sum_k Y[r,k] R[k,c]
                for (pos, &k) in blocks[bc].indices.iter().enumerate() {
                    let yv = rel.y(r, k);
                    if yv.is_zero() {
                        continue;
                    }
                    if bc == bi {
                        let slot = &mut row[pos * s + locate[c].1];
                        *slot = &*slot - &yv;
                    } else {
                        b = &b + &(&yv * &known(k, c));
                    }
                }
                if row.iter().all(Zero::is_zero) && b.is_zero() {
                    continue;
                }
                rows.push(row);
                rhs.push(b);
            }
        }
    }

    let a = FieldMatrix::from_rows(rows);
    let a = if a.rows() == 0 {
        FieldMatrix::zeros(0, nunk)
    } else {
        a
    };
    match solve_affine_system(&a, &rhs)? {
        Solution::Unique(x) => Ok(FieldMatrix::from_fn(s, s, |i, j| x[i * s + j].clone())),
        Solution::Underdetermined { nullity, .. } => Err(RMatrixError::NonGenericModule {
            weight: blk.weight.clone(),
            nullity: Some(nullity),
        }),
        Solution::Inconsistent => Err(RMatrixError::NonGenericModule {
            weight: blk.weight.clone(),
            nullity: None,
        }),
    }
}

impl RMatrix {
    pub fn v1(&self) -> &ModuleDescriptor {
        &self.v1
    }

    pub fn v2(&self) -> &ModuleDescriptor {
        &self.v2
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[RBlock] {
        &self.blocks
    }

    pub fn block(&self, w: &Weight) -> Option<&RBlock> {
        self.blocks.iter().find(|b| &b.weight == w)
    }

    /// Full symbolic matrix on `V1 ⊗ V2`.
    pub fn symbolic(&self) -> FieldMatrix<RatFunc> {
        let mut m = FieldMatrix::zeros(self.dim, self.dim);
        for blk in &self.blocks {
            for (p, &i) in blk.indices.iter().enumerate() {
                for (q, &j) in blk.indices.iter().enumerate() {
                    m[(i, j)] = blk.matrix[(p, q)].clone();
                }
            }
        }
        m
    }

    /// Evaluate at `x0`, checking every solved block for poles.
    pub fn evaluate(&self, x0: &Rat) -> Result<RatMatrix, RMatrixError> {
        let mut m = RatMatrix::zeros(self.dim, self.dim);
        for blk in &self.blocks {
            for (p, &i) in blk.indices.iter().enumerate() {
                for (q, &j) in blk.indices.iter().enumerate() {
                    m[(i, j)] = blk.matrix[(p, q)].eval(x0).map_err(|_| RMatrixError::Pole {
                        weight: blk.weight.clone(),
                        row: p,
                        col: q,
                        at: x0.clone(),
                    })?;
                }
            }
        }
        Ok(m)
    }

    /// Evaluate and additionally require every solved block to be invertible.
    pub fn evaluate_invertible(&self, x0: &Rat) -> Result<RatMatrix, RMatrixError> {
        let m = self.evaluate(x0)?;
        for blk in self.blocks.iter().filter(|b| b.solved) {
            let singular = match blk.det.eval(x0) {
                Ok(d) => d.is_zero(),
                Err(_) => {
                    // Determinant has a pole where entries do not: recompute.
                    let sub = m.submatrix(&blk.indices, &blk.indices);
                    determinant(&sub).is_zero()
                }
            };
            if singular {
                return Err(RMatrixError::Singular {
                    weight: blk.weight.clone(),
                    at: x0.clone(),
                });
            }
        }
        Ok(m)
    }

    /// Inverse at `x0`, computed blockwise.
    pub fn evaluate_inverse(&self, x0: &Rat) -> Result<RatMatrix, RMatrixError> {
        let m = self.evaluate_invertible(x0)?;
        let mut inv = RatMatrix::zeros(self.dim, self.dim);
        for blk in &self.blocks {
            let sub = m.submatrix(&blk.indices, &blk.indices);
            let sub_inv = crate::exact::mat_inverse(&sub)?;
            for (p, &i) in blk.indices.iter().enumerate() {
                for (q, &j) in blk.indices.iter().enumerate() {
                    inv[(i, j)] = sub_inv[(p, q)].clone();
                }
            }
        }
        Ok(inv)
    }

    /// Whether `x0` avoids all poles and singular points of solved blocks.
    pub fn is_regular_at(&self, x0: &Rat) -> bool {
        self.evaluate_invertible(x0).is_ok()
    }

    /// Rational roots of all entry denominators of solved blocks.
    pub fn poles(&self) -> Vec<Rat> {
        let mut dens: Vec<Poly> = Vec::new();
        for blk in self.blocks.iter().filter(|b| b.solved) {
            for (_, _, v) in blk.matrix.entries() {
                if !v.den().is_constant() && !dens.contains(v.den()) {
                    dens.push(v.den().clone());
                }
            }
        }
        let mut roots: Vec<Rat> = dens.iter().flat_map(Poly::rational_roots).collect();
        roots.sort();
        roots.dedup();
        roots
    }

    /// Distinct entry denominators that have no rational roots, as strings.
    pub fn irrational_pole_factors(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for blk in self.blocks.iter().filter(|b| b.solved) {
            for (_, _, v) in blk.matrix.entries() {
                let d = v.den();
                if !d.is_constant() && d.rational_roots().len() < d.degree().unwrap_or(0) {
                    let s = d.to_string();
                    if !out.contains(&s) {
                        out.push(s);
                    }
                }
            }
        }
        out
    }

    /// Exact JSON form. Coefficients are `"num/den"` strings in ascending
    /// degree order.
    pub fn to_json(&self) -> Value {
        let poly = |p: &Poly| -> Value {
            Value::Array(p.coeffs().iter().map(|c| Value::String(rat_string(c))).collect())
        };
        let blocks: Vec<Value> = self
            .blocks
            .iter()
            .map(|blk| {
                let s = blk.indices.len();
                let entries: Vec<Value> = (0..s)
                    .map(|p| {
                        Value::Array(
                            (0..s)
                                .map(|q| {
                                    let v = &blk.matrix[(p, q)];
                                    json!({"num": poly(v.num()), "den": poly(v.den())})
                                })
                                .collect(),
                        )
                    })
                    .collect();
                json!({
                    "weight": blk.weight.0,
                    "basis": blk.indices,
                    "height": blk.height,
                    "solved": blk.solved,
                    "entries": entries,
                })
            })
            .collect();
        json!({
            "v1": self.v1,
            "v2": self.v2,
            "dim": self.dim,
            "blocks": blocks,
            "poles": self.poles().iter().map(rat_string).collect::<Vec<_>>(),
        })
    }
}

/// Evaluate `R` at `x0`; a pole names the offending block and entry.
pub fn evaluate_rmatrix(r: &RMatrix, x0: &Rat) -> Result<RatMatrix, RMatrixError> {
    r.evaluate(x0)
}

/// Check `R X = Y R` for every relation on all solved blocks. Returns the
/// number of violated entries (zero for a correct R-matrix).
pub fn relation_violations(r: &RMatrix, v1: &Arc<ModuleRealization>, v2: &Arc<ModuleRealization>) -> usize {
    let pair = TensorModule::new(vec![v1.clone(), v2.clone()]).expect("same rank");
    let rm = r.symbolic();
    let solved: HashMap<usize, bool> = r
        .locate
        .iter()
        .enumerate()
        .map(|(i, &(b, _))| (i, r.blocks[b].solved))
        .collect();
    let mut bad = 0;
    for rel in relations(&pair) {
        let xm = FieldMatrix::from_fn(r.dim, r.dim, |i, j| rel.x(i, j));
        let ym = FieldMatrix::from_fn(r.dim, r.dim, |i, j| rel.y(i, j));
        let res = rm.mul(&xm).sub(&ym.mul(&rm));
        for (i, j, v) in res.entries() {
            if solved[&i] && solved[&j] && !v.is_zero() {
                bad += 1;
            }
        }
    }
    bad
}
