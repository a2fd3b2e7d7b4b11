use std::ops::{Index, IndexMut};

use num_traits::{Signed, Zero};

use super::{Field, Rat};

/// Dense row-major matrix over a [`Field`].
#[derive(Clone, PartialEq, Debug)]
pub struct FieldMatrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

pub type RatMatrix = FieldMatrix<Rat>;

impl<F: Field> FieldMatrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        FieldMatrix {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = F::one();
        }
        m
    }

    pub fn diagonal(diag: Vec<F>) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, d) in diag.into_iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<F>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        FieldMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        FieldMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &F)> {
        let cols = self.cols;
        self.data
            .iter()
            .enumerate()
            .map(move |(k, v)| (k / cols, k % cols, v))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn map<G: Field>(&self, f: impl FnMut(&F) -> G) -> FieldMatrix<G> {
        FieldMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn try_map<G: Field, E>(
        &self,
        f: impl FnMut(&F) -> Result<G, E>,
    ) -> Result<FieldMatrix<G>, E> {
        Ok(FieldMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect::<Result<_, E>>()?,
        })
    }

    /// Product; panics on a dimension mismatch. Zero entries of the left
    /// factor are skipped, which matters for the sparse operators built here.
    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = &rhs.data[k * rhs.cols + j];
                    if !b.is_zero() {
                        let cur = std::mem::replace(&mut out.data[i * rhs.cols + j], F::zero());
                        out.data[i * rhs.cols + j] = cur + a.clone() * b.clone();
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[F]) -> Vec<F> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .fold(F::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a.clone() + b.clone())
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a.clone() - b.clone())
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(&F, &F) -> F) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        FieldMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| f(a, b)).collect(),
        }
    }

    /// `self += c * rhs`
    pub fn add_scaled(&mut self, c: &F, rhs: &Self) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        if c.is_zero() {
            return;
        }
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            if !b.is_zero() {
                let cur = std::mem::replace(a, F::zero());
                *a = cur + c.clone() * b.clone();
            }
        }
    }

    pub fn scale(&self, c: &F) -> Self {
        self.map(|a| c.clone() * a.clone())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    /// `self * rhs - rhs * self`
    pub fn commutator(&self, rhs: &Self) -> Self {
        self.mul(rhs).sub(&rhs.mul(self))
    }

    /// Kronecker product `self ⊗ rhs` (left factor is the slow index).
    pub fn kron(&self, rhs: &Self) -> Self {
        Self::from_fn(self.rows * rhs.rows, self.cols * rhs.cols, |i, j| {
            let a = &self[(i / rhs.rows, j / rhs.cols)];
            if a.is_zero() {
                return F::zero();
            }
            a.clone() * rhs[(i % rhs.rows, j % rhs.cols)].clone()
        })
    }

    pub fn submatrix(&self, row_idx: &[usize], col_idx: &[usize]) -> Self {
        Self::from_fn(row_idx.len(), col_idx.len(), |i, j| {
            self[(row_idx[i], col_idx[j])].clone()
        })
    }

    pub fn trace(&self) -> F {
        (0..self.rows.min(self.cols)).fold(F::zero(), |acc, i| acc + self[(i, i)].clone())
    }
}

impl FieldMatrix<Rat> {
    /// Largest absolute entry (zero for the empty matrix).
    pub fn max_abs(&self) -> Rat {
        self.data
            .iter()
            .map(Signed::abs)
            .max()
            .unwrap_or_else(Rat::zero)
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(super::rat_to_f64).collect())
            .collect()
    }
}

impl<F> Index<(usize, usize)> for FieldMatrix<F> {
    type Output = F;
    fn index(&self, (i, j): (usize, usize)) -> &F {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl<F> IndexMut<(usize, usize)> for FieldMatrix<F> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut F {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::int;

    fn m(rows: &[&[i64]]) -> RatMatrix {
        FieldMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect())
    }

    #[test]
    fn product_and_kron() {
        let a = m(&[&[1, 2], &[3, 4]]);
        let b = m(&[&[0, 1], &[1, 0]]);
        assert_eq!(a.mul(&b), m(&[&[2, 1], &[4, 3]]));
        let k = RatMatrix::identity(2).kron(&b);
        assert_eq!(k[(0, 1)], int(1));
        assert_eq!(k[(2, 3)], int(1));
        assert_eq!(k[(0, 3)], int(0));
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn product_checks_dimensions() {
        let _ = m(&[&[1, 2]]).mul(&m(&[&[1, 2]]));
    }

    #[test]
    fn max_abs_and_trace() {
        let a = m(&[&[1, -7], &[3, 4]]);
        assert_eq!(a.max_abs(), int(7));
        assert_eq!(a.trace(), int(5));
    }
}
