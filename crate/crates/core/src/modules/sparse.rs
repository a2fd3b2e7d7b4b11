use num_traits::Zero;

use crate::exact::{Rat, RatMatrix};

/// Sparse square-or-rectangular matrix over `Q`, stored as per-row
/// coordinate lists sorted by column.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMat {
    rows: usize,
    cols: usize,
    row_entries: Vec<Vec<(usize, Rat)>>,
}

impl SparseMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMat {
            rows,
            cols,
            row_entries: vec![Vec::new(); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseMat {
            rows: n,
            cols: n,
            row_entries: (0..n).map(|i| vec![(i, Rat::from_integer(1.into()))]).collect(),
        }
    }

    /// Duplicate coordinates are summed; explicit zeros are dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, Rat)>,
    ) -> Self {
        let mut m = SparseMat::zeros(rows, cols);
        for (i, j, v) in triplets {
            m.add_at(i, j, v);
        }
        m
    }

    fn add_at(&mut self, i: usize, j: usize, v: Rat) {
        assert!(i < self.rows && j < self.cols, "sparse index out of bounds");
        if v.is_zero() {
            return;
        }
        let row = &mut self.row_entries[i];
        match row.binary_search_by_key(&j, |(c, _)| *c) {
            Ok(pos) => {
                row[pos].1 += v;
                if row[pos].1.is_zero() {
                    row.remove(pos);
                }
            }
            Err(pos) => row.insert(pos, (j, v)),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[(usize, Rat)] {
        &self.row_entries[i]
    }

    pub fn get(&self, i: usize, j: usize) -> Rat {
        self.row_entries[i]
            .binary_search_by_key(&j, |(c, _)| *c)
            .map(|pos| self.row_entries[i][pos].1.clone())
            .unwrap_or_else(|_| Rat::zero())
    }

    pub fn nnz(&self) -> usize {
        self.row_entries.iter().map(Vec::len).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.nnz() == 0
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, &Rat)> {
        self.row_entries
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |(j, v)| (i, *j, v)))
    }

    pub fn to_dense(&self) -> RatMatrix {
        let mut m = RatMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v.clone();
        }
        m
    }

    pub fn mul(&self, rhs: &SparseMat) -> SparseMat {
        assert_eq!(self.cols, rhs.rows, "sparse product dimension mismatch");
        let mut out = SparseMat::zeros(self.rows, rhs.cols);
        for (i, row) in self.row_entries.iter().enumerate() {
            for (k, a) in row {
                for (j, b) in &rhs.row_entries[*k] {
                    out.add_at(i, *j, a * b);
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &SparseMat) -> SparseMat {
        let mut out = self.clone();
        out.add_scaled(&Rat::from_integer(1.into()), rhs);
        out
    }

    pub fn sub(&self, rhs: &SparseMat) -> SparseMat {
        let mut out = self.clone();
        out.add_scaled(&Rat::from_integer((-1).into()), rhs);
        out
    }

    /// `self += c * rhs`
    pub fn add_scaled(&mut self, c: &Rat, rhs: &SparseMat) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        if c.is_zero() {
            return;
        }
        for (i, j, v) in rhs.triplets() {
            self.add_at(i, j, c * v);
        }
    }

    pub fn scale(&self, c: &Rat) -> SparseMat {
        let mut out = SparseMat::zeros(self.rows, self.cols);
        out.add_scaled(c, self);
        out
    }

    /// `self * rhs - rhs * self`
    pub fn commutator(&self, rhs: &SparseMat) -> SparseMat {
        self.mul(rhs).sub(&rhs.mul(self))
    }

    pub fn max_abs(&self) -> Rat {
        self.triplets()
            .map(|(_, _, v)| num_traits::Signed::abs(v))
            .max()
            .unwrap_or_else(Rat::zero)
    }
}
