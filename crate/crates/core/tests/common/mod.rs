#![allow(dead_code)]

use num_traits::{One, Zero};
use qkz_core::exact::{solve_affine_system, FieldMatrix, RatFunc, RatMatrix, Solution};
use qkz_core::modules::ModuleRealization;

pub fn lift(m: &RatMatrix) -> FieldMatrix<RatFunc> {
    m.map(|v| RatFunc::constant(v.clone()))
}

/// Solve the three defining relations on the whole space with `dim^2`
/// unknowns, using plain Kronecker products of the factor actions.
pub fn whole_space_oracle(v1: &ModuleRealization, v2: &ModuleRealization) -> FieldMatrix<RatFunc> {
    let n = v1.rank();
    let (d1, d2) = (v1.dim(), v2.dim());
    let dim = d1 * d2;
    let i1 = RatMatrix::identity(d1);
    let i2 = RatMatrix::identity(d2);
    let x = RatFunc::x();
    let mut rels: Vec<(FieldMatrix<RatFunc>, FieldMatrix<RatFunc>)> = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let delta = v1.action_dense(a, b).kron(&i2).add(&i1.kron(&v2.action_dense(a, b)));
            rels.push((lift(&delta), lift(&delta)));
            let second = lift(&i1.kron(&v2.action_dense(a, b))).scale(&x);
            let mut left = RatMatrix::zeros(dim, dim);
            let mut right = RatMatrix::zeros(dim, dim);
            for c in 0..n {
                left = left.add(&v1.action_dense(a, c).kron(&v2.action_dense(c, b)));
                right = right.add(&v1.action_dense(c, b).kron(&v2.action_dense(a, c)));
            }
            rels.push((second.sub(&lift(&left)), second.sub(&lift(&right))));
        }
    }
    let unk = |i: usize, j: usize| i * dim + j;
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    let mut norm = vec![RatFunc::zero(); dim * dim];
    norm[unk(0, 0)] = RatFunc::one();
    rows.push(norm);
    rhs.push(RatFunc::one());
    for (xm, ym) in &rels {
        for r in 0..dim {
            for s in 0..dim {
                let mut row = vec![RatFunc::zero(); dim * dim];
                for k in 0..dim {
                    row[unk(r, k)] = &row[unk(r, k)] + &xm[(k, s)];
                    row[unk(k, s)] = &row[unk(k, s)] - &ym[(r, k)];
                }
                if row.iter().any(|v| !v.is_zero()) {
                    rows.push(row);
                    rhs.push(RatFunc::zero());
                }
            }
        }
    }
    let sol = solve_affine_system(&FieldMatrix::from_rows(rows), &rhs).unwrap();
    let Solution::Unique(v) = sol else {
        panic!("whole-space system is not uniquely solvable: {sol:?}");
    };
    FieldMatrix::from_fn(dim, dim, |i, j| v[unk(i, j)].clone())
}
