//! Exact linear solves. Forward elimination is fraction-free: a row update is
//! `pivot * row - row[col] * pivot_row`, followed by division by the row's
//! content, so entries stay coprime ring elements and degrees stay bounded.

use num_traits::Zero;

use super::{Field, FieldError, FieldMatrix};

pub const DEFAULT_DEGREE_CAP: usize = 64;

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Abort when an intermediate entry exceeds this polynomial degree.
    pub degree_cap: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            degree_cap: DEFAULT_DEGREE_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Solution<F> {
    Unique(Vec<F>),
    /// A particular solution (free variables set to zero) and the nullity.
    Underdetermined { particular: Vec<F>, nullity: usize },
    Inconsistent,
}

impl<F> Solution<F> {
    pub fn unique(self) -> Option<Vec<F>> {
        match self {
            Solution::Unique(x) => Some(x),
            _ => None,
        }
    }
}

pub fn solve_affine_system<F: Field>(
    a: &FieldMatrix<F>,
    b: &[F],
) -> Result<Solution<F>, FieldError> {
    solve_affine_system_with(a, b, SolveOptions::default())
}

pub fn solve_affine_system_with<F: Field>(
    a: &FieldMatrix<F>,
    b: &[F],
    opts: SolveOptions,
) -> Result<Solution<F>, FieldError> {
    if a.rows() != b.len() {
        return Err(FieldError::DimensionMismatch(format!(
            "{}x{} system with right-hand side of length {}",
            a.rows(),
            a.cols(),
            b.len()
        )));
    }
    let n = a.cols();
    let mut rows: Vec<Vec<F>> = (0..a.rows())
        .filter_map(|i| {
            let mut r = a.row(i).to_vec();
            r.push(b[i].clone());
            if r.iter().all(Zero::is_zero) {
                return None;
            }
            F::make_row_primitive(&mut r);
            Some(r)
        })
        .collect();

    let mut pivots: Vec<usize> = Vec::new();
    for col in 0..n {
        let rank = pivots.len();
        let best = (rank..rows.len())
            .filter(|&r| !rows[r][col].is_zero())
            .min_by_key(|&r| {
                let row = &rows[r];
                (row[col].complexity(), row.iter().filter(|v| !v.is_zero()).count())
            });
        let Some(best) = best else { continue };
        rows.swap(rank, best);
        let (head, tail) = rows.split_at_mut(rank + 1);
        let piv_row = &head[rank];
        let piv = &piv_row[col];
        let mut emptied = false;
        for row in tail.iter_mut() {
            if row[col].is_zero() {
                continue;
            }
            let factor = std::mem::replace(&mut row[col], F::zero());
            for j in col + 1..=n {
                let lhs = if row[j].is_zero() {
                    F::zero()
                } else {
                    piv.clone() * row[j].clone()
                };
                row[j] = if piv_row[j].is_zero() {
                    lhs
                } else {
                    lhs - factor.clone() * piv_row[j].clone()
                };
            }
            if row.iter().all(Zero::is_zero) {
                emptied = true;
                continue;
            }
            if row[..n].iter().all(Zero::is_zero) {
                return Ok(Solution::Inconsistent);
            }
            F::make_row_primitive(row);
            if let Some(deg) = row.iter().map(Field::degree).max() {
                if deg > opts.degree_cap {
                    return Err(FieldError::DegreeCap {
                        degree: deg,
                        cap: opts.degree_cap,
                    });
                }
            }
        }
        if emptied {
            let mut k = 0;
            rows.retain(|r| {
                k += 1;
                k <= rank + 1 || r.iter().any(|v| !v.is_zero())
            });
        }
        pivots.push(col);
    }
    let rank = pivots.len();
    if rows[rank..].iter().any(|r| !r[n].is_zero()) {
        return Ok(Solution::Inconsistent);
    }

    let mut x = vec![F::zero(); n];
    for (k, &pc) in pivots.iter().enumerate().rev() {
        let row = &rows[k];
        let mut s = row[n].clone();
        for j in pc + 1..n {
            if !row[j].is_zero() && !x[j].is_zero() {
                s = s - row[j].clone() * x[j].clone();
            }
        }
        x[pc] = s / row[pc].clone();
    }

    let check = a.mul_vec(&x);
    assert!(
        check.iter().zip(b).all(|(l, r)| l == r),
        "back-substitution check failed"
    );
    if rank == n {
        Ok(Solution::Unique(x))
    } else {
        Ok(Solution::Underdetermined {
            particular: x,
            nullity: n - rank,
        })
    }
}

/// Gauss-Jordan inverse; the result is checked against the identity.
pub fn mat_inverse<F: Field>(a: &FieldMatrix<F>) -> Result<FieldMatrix<F>, FieldError> {
    if !a.is_square() {
        return Err(FieldError::DimensionMismatch(format!(
            "cannot invert a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let mut rows: Vec<Vec<F>> = (0..n)
        .map(|i| {
            let mut r = a.row(i).to_vec();
            r.extend((0..n).map(|j| if i == j { F::one() } else { F::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let best = (col..n)
            .filter(|&r| !rows[r][col].is_zero())
            .min_by_key(|&r| rows[r][col].complexity())
            .ok_or(FieldError::Singular { column: col })?;
        rows.swap(col, best);
        let inv = F::one() / rows[col][col].clone();
        for v in rows[col].iter_mut() {
            if !v.is_zero() {
                *v = inv.clone() * v.clone();
            }
        }
        let piv_row = rows[col].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r == col || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for (v, p) in row.iter_mut().zip(&piv_row) {
                if !p.is_zero() {
                    *v = v.clone() - factor.clone() * p.clone();
                }
            }
        }
    }
    let inv = FieldMatrix::from_fn(n, n, |i, j| rows[i][n + j].clone());
    assert!(
        a.mul(&inv) == FieldMatrix::identity(n),
        "inverse check failed"
    );
    Ok(inv)
}

pub fn determinant<F: Field>(a: &FieldMatrix<F>) -> F {
    assert!(a.is_square(), "determinant of a non-square matrix");
    let n = a.rows();
    let mut rows: Vec<Vec<F>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut det = F::one();
    for col in 0..n {
        let Some(best) = (col..n).find(|&r| !rows[r][col].is_zero()) else {
            return F::zero();
        };
        if best != col {
            rows.swap(col, best);
            det = -det;
        }
        let piv = rows[col][col].clone();
        det = det * piv.clone();
        let piv_row = rows[col].clone();
        for row in rows.iter_mut().skip(col + 1) {
            if row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone() / piv.clone();
            for j in col..n {
                if !piv_row[j].is_zero() {
                    row[j] = row[j].clone() - factor.clone() * piv_row[j].clone();
                }
            }
        }
    }
    det
}
