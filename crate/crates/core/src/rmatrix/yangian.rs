//! Yangian action on tensor products of evaluation modules and the exact
//! identity checks built on it.

use std::sync::Arc;

use num_traits::Zero;

use super::{RMatrixCache, RMatrixError};
use crate::exact::{rat_abs, Field, FieldMatrix, Rat, RatMatrix};
use crate::modules::{ModuleRealization, TensorModule};

/// Table of `T_{a,b}(u)` on `V_1(x_1) ⊗ ... ⊗ V_n(x_n)`, indexed `a * N + b`.
///
/// Single factor: `T_{a,b}(u) = δ_{ab} + e_{b,a} / (u - x)`. Products use
/// `T_{a,b} = sum_c T_{c,b} ⊗ T_{a,c}`.
pub fn yangian_t_generic<F: Field>(
    factors: &[Arc<ModuleRealization>],
    points: &[Rat],
    u: &F,
) -> Result<Vec<FieldMatrix<F>>, RMatrixError> {
    assert_eq!(factors.len(), points.len(), "one evaluation point per factor");
    let Some(first) = factors.first() else {
        return Err(crate::modules::ModuleError::NoFactors.into());
    };
    let n = first.rank();
    let mut acc: Option<Vec<FieldMatrix<F>>> = None;
    for (f, x) in factors.iter().zip(points).rev() {
        if f.rank() != n {
            return Err(crate::modules::ModuleError::RankMismatch(n, f.rank()).into());
        }
        let shifted = u.clone() - F::from_rat(x);
        if shifted.is_zero() {
            return Err(RMatrixError::Coincidence);
        }
        let inv = F::one() / shifted;
        let local: Vec<FieldMatrix<F>> = (0..n * n)
            .map(|k| {
                let (a, b) = (k / n, k % n);
                let e = f.action_dense(b, a).map(|v| F::from_rat(v));
                let mut m = e.scale(&inv);
                if a == b {
                    m = m.add(&FieldMatrix::identity(f.dim()));
                }
                m
            })
            .collect();
        acc = Some(match acc {
            None => local,
            Some(rest) => (0..n * n)
                .map(|k| {
                    let (a, b) = (k / n, k % n);
                    let mut sum: Option<FieldMatrix<F>> = None;
                    for c in 0..n {
                        let term = local[c * n + b].kron(&rest[a * n + c]);
                        sum = Some(match sum {
                            None => term,
                            Some(s) => s.add(&term),
                        });
                    }
                    sum.expect("rank is positive")
                })
                .collect(),
        });
    }
    Ok(acc.expect("at least one factor"))
}

/// `T_{a,b}(u)` for a rational spectral parameter.
pub fn yangian_t(
    factors: &[Arc<ModuleRealization>],
    points: &[Rat],
    u: &Rat,
    a: usize,
    b: usize,
) -> Result<RatMatrix, RMatrixError> {
    let n = factors.first().map_or(0, |f| f.rank());
    let mut table = yangian_t_generic(factors, points, u)?;
    Ok(table.swap_remove(a * n + b))
}

/// Largest entry in absolute value, optionally restricted to the rows and
/// columns in `mask`.
pub(crate) fn masked_max(m: &RatMatrix, mask: Option<&[usize]>) -> Rat {
    match mask {
        None => m.max_abs(),
        Some(idx) => {
            let mut best = Rat::zero();
            for &i in idx {
                for &j in idx {
                    let v = rat_abs(&m[(i, j)]);
                    if v > best {
                        best = v;
                    }
                }
            }
            best
        }
    }
}

/// Max residual of
/// `(u - v) [T_{ab}(u), T_{cd}(v)] - (T_{cb}(v) T_{ad}(u) - T_{cb}(u) T_{ad}(v))`
/// over all index quadruples.
pub fn check_yangian_relation(
    factors: &[Arc<ModuleRealization>],
    points: &[Rat],
    u: &Rat,
    v: &Rat,
    mask: Option<&[usize]>,
) -> Result<Rat, RMatrixError> {
    if u == v {
        return Err(RMatrixError::Coincidence);
    }
    let n = factors.first().map_or(0, |f| f.rank());
    let tu = yangian_t_generic(factors, points, u)?;
    let tv = yangian_t_generic(factors, points, v)?;
    let uv = u - v;
    let mut worst = Rat::zero();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let lhs = tu[a * n + b].commutator(&tv[c * n + d]).scale(&uv);
                    let rhs = tv[c * n + b]
                        .mul(&tu[a * n + d])
                        .sub(&tu[c * n + b].mul(&tv[a * n + d]));
                    let r = masked_max(&lhs.sub(&rhs), mask);
                    if r > worst {
                        worst = r;
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// Max residual of `P R(x - y) T(u) - T'(u) P R(x - y)`, where `T` acts on
/// `V1(x) ⊗ V2(y)` and `T'` on `V2(y) ⊗ V1(x)`.
pub fn check_intertwiner(
    cache: &RMatrixCache,
    v1: &Arc<ModuleRealization>,
    v2: &Arc<ModuleRealization>,
    x: &Rat,
    y: &Rat,
    u: &Rat,
    mask: Option<&[usize]>,
) -> Result<Rat, RMatrixError> {
    let r = cache.get(v1, v2)?;
    let pair = TensorModule::new(vec![v1.clone(), v2.clone()])?;
    let pr = pair.swap_two().mul(&r.evaluate(&(x - y))?);
    let n = v1.rank();
    let t12 = yangian_t_generic(&[v1.clone(), v2.clone()], &[x.clone(), y.clone()], u)?;
    let t21 = yangian_t_generic(&[v2.clone(), v1.clone()], &[y.clone(), x.clone()], u)?;
    // The mask refers to V1 ⊗ V2; carry it to V2 ⊗ V1 for the target side.
    let (d1, d2) = (v1.dim(), v2.dim());
    let swapped: Option<Vec<usize>> =
        mask.map(|m| m.iter().map(|&i| (i % d2) * d1 + i / d2).collect());
    let mut worst = Rat::zero();
    for k in 0..n * n {
        let res = pr.mul(&t12[k]).sub(&t21[k].mul(&pr));
        let r = match (mask, &swapped) {
            (Some(src), Some(dst)) => {
                let mut best = Rat::zero();
                for &i in dst {
                    for &j in src {
                        let v = rat_abs(&res[(i, j)]);
                        if v > best {
                            best = v;
                        }
                    }
                }
                best
            }
            _ => res.max_abs(),
        };
        if r > worst {
            worst = r;
        }
    }
    Ok(worst)
}

/// Max residual of `R12(x - y) R13(x) R23(y) - R23(y) R13(x) R12(x - y)` on
/// `V1 ⊗ V2 ⊗ V3`.
pub fn check_ybe(
    cache: &RMatrixCache,
    triple: &[Arc<ModuleRealization>; 3],
    x: &Rat,
    y: &Rat,
    mask: Option<&[usize]>,
) -> Result<Rat, RMatrixError> {
    let t = TensorModule::new(triple.to_vec())?;
    let r12 = cache.get(&triple[0], &triple[1])?.evaluate(&(x - y))?;
    let r13 = cache.get(&triple[0], &triple[2])?.evaluate(x)?;
    let r23 = cache.get(&triple[1], &triple[2])?.evaluate(y)?;
    let r12 = t.embed_pair(0, 1, &r12);
    let r13 = t.embed_pair(0, 2, &r13);
    let r23 = t.embed_pair(1, 2, &r23);
    let lhs = r12.mul(&r13).mul(&r23);
    let rhs = r23.mul(&r13).mul(&r12);
    Ok(masked_max(&lhs.sub(&rhs), mask))
}
