//! The qKZ operators `K_m(z; λ)`, the dynamical operators `L_a(z; λ)`, their
//! λ-derivatives, and matrix residuals for the identities relating them.

mod residuals;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::exact::{rat_string, rat_to_f64, Rat, RatMatrix};
use crate::modules::{ModuleDescriptor, ModuleError, SparseMat, TensorModule};
use crate::rmatrix::{RMatrix, RMatrixCache, RMatrixError};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OperatorError {
    #[error("point has {got} z coordinates, expected {expected}")]
    ZLength { expected: usize, got: usize },
    #[error("point has {got} λ coordinates, expected {expected}")]
    LambdaLength { expected: usize, got: usize },
    #[error("λ_{0} is zero")]
    ZeroLambda(usize),
    #[error("λ_{0} and λ_{1} coincide")]
    CoincidentLambda(usize, usize),
    #[error("p is zero")]
    ZeroP,
    #[error("index {index} out of range 1..={bound}")]
    IndexOutOfRange { index: usize, bound: usize },
    #[error("not a permutation of 1..={0}")]
    InvalidPermutation(usize),
    #[error(transparent)]
    RMatrix(#[from] RMatrixError),
    #[error(transparent)]
    Module(#[from] ModuleError),
}

impl OperatorError {
    /// Errors caused by the sample point landing on a degeneracy.
    pub fn is_resample(&self) -> bool {
        match self {
            OperatorError::RMatrix(e) => e.is_resample(),
            OperatorError::ZeroLambda(_)
            | OperatorError::CoincidentLambda(..)
            | OperatorError::ZeroP => true,
            _ => false,
        }
    }
}

/// Point `(z_1..z_n; λ_1..λ_N; p)`. Indices in the API are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPoint {
    pub z: Vec<Rat>,
    pub lambda: Vec<Rat>,
    pub p: Rat,
}

impl EvalPoint {
    pub fn new(z: Vec<Rat>, lambda: Vec<Rat>, p: Rat) -> Self {
        EvalPoint { z, lambda, p }
    }

    pub fn validate(&self, n: usize, rank: usize) -> Result<(), OperatorError> {
        if self.z.len() != n {
            return Err(OperatorError::ZLength {
                expected: n,
                got: self.z.len(),
            });
        }
        if self.lambda.len() != rank {
            return Err(OperatorError::LambdaLength {
                expected: rank,
                got: self.lambda.len(),
            });
        }
        if self.p.is_zero() {
            return Err(OperatorError::ZeroP);
        }
        for (a, la) in self.lambda.iter().enumerate() {
            if la.is_zero() {
                return Err(OperatorError::ZeroLambda(a));
            }
            if let Some(b) = (0..a).find(|&b| &self.lambda[b] == la) {
                return Err(OperatorError::CoincidentLambda(b, a));
            }
        }
        Ok(())
    }

    /// The point with `z_i` replaced by `z_i + p`.
    pub fn shifted(&self, i: usize) -> EvalPoint {
        let mut out = self.clone();
        out.z[i] = &out.z[i] + &self.p;
        out
    }

    pub fn to_json(&self) -> Value {
        json!({
            "z": self.z.iter().map(rat_string).collect::<Vec<_>>(),
            "lambda": self.lambda.iter().map(rat_string).collect::<Vec<_>>(),
            "p": rat_string(&self.p),
        })
    }
}

/// Permutation `w` of `0..N`, acting by `e_{c,d} → e_{w(c),w(d)}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeylElement(Vec<usize>);

impl WeylElement {
    pub fn new(images: Vec<usize>) -> Result<Self, OperatorError> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(OperatorError::InvalidPermutation(n));
            }
            seen[i] = true;
        }
        Ok(WeylElement(images))
    }

    pub fn identity(n: usize) -> Self {
        WeylElement((0..n).collect())
    }

    pub fn apply(&self, a: usize) -> usize {
        self.0[a]
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    /// All `N!` elements in lexicographic order.
    pub fn all(n: usize) -> Vec<WeylElement> {
        use itertools::Itertools;
        (0..n).permutations(n).map(WeylElement).collect()
    }
}

impl fmt::Display for WeylElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one_based: Vec<String> = self.0.iter().map(|i| (i + 1).to_string()).collect();
        write!(f, "[{}]", one_based.join(","))
    }
}

/// The four terms of `L_a`, in the order they appear in its definition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LTerm {
    /// `(e_{a,a})^2 / 2`
    Quadratic,
    /// `- sum_i z_i e^{(i)}_{a,a}`
    Shift,
    /// `- sum_b sum_{i<j} e^{(i)}_{a,b} e^{(j)}_{b,a}`
    Exchange,
    /// `- sum_{b≠a} λ_b/(λ_a-λ_b) (e_{a,b} e_{b,a} - e_{a,a})`
    Dynamical,
}

/// Test hook: flip the sign of one term of `L_index` (0-based) everywhere
/// `L` and its derivatives are built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LMutation {
    pub term: LTerm,
    pub index: usize,
}

/// A built operator together with what it is and where it was evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub descriptors: Vec<ModuleDescriptor>,
    pub formula: String,
    pub point: EvalPoint,
    pub matrix: RatMatrix,
}

impl OperatorMatrix {
    pub fn to_json(&self) -> Value {
        let rows: Vec<Vec<String>> = (0..self.matrix.rows())
            .map(|i| self.matrix.row(i).iter().map(rat_string).collect())
            .collect();
        json!({
            "formula": self.formula,
            "point": self.point.to_json(),
            "modules": self.descriptors,
            "matrix": rows,
        })
    }
}

/// Matrices from which `L_a` is assembled; see [`LTerm`].
#[derive(Debug, Clone)]
struct LPieces {
    quadratic: SparseMat,
    shift: Vec<SparseMat>,
    exchange: SparseMat,
    /// `(b, e_{a,b} e_{b,a} - e_{a,a})` for `b ≠ a`
    dynamical: Vec<(usize, SparseMat)>,
}

#[derive(Debug, Clone)]
struct LPiecesF64 {
    quadratic: DMatrix<f64>,
    shift: Vec<DMatrix<f64>>,
    exchange: DMatrix<f64>,
    dynamical: Vec<(usize, DMatrix<f64>)>,
}

fn to_f64(m: &SparseMat) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.rows(), m.cols());
    for (i, j, v) in m.triplets() {
        out[(i, j)] = rat_to_f64(v);
    }
    out
}

/// Factors of `K_m = A^{-1} Λ B`.
#[derive(Debug, Clone)]
pub struct KFactors {
    pub prefix_inverse: RatMatrix,
    pub lambda_power: RatMatrix,
    pub suffix: RatMatrix,
}

impl KFactors {
    pub fn product(&self) -> RatMatrix {
        self.prefix_inverse.mul(&self.lambda_power).mul(&self.suffix)
    }
}

/// Operator builder for one tensor product `V_1 ⊗ ... ⊗ V_n`.
pub struct Operators {
    tensor: Arc<TensorModule>,
    rmats: HashMap<(usize, usize), Arc<RMatrix>>,
    mutation: Option<LMutation>,
    pieces: Vec<OnceLock<LPieces>>,
    pieces_f64: Vec<OnceLock<LPiecesF64>>,
}

impl Operators {
    pub fn new(tensor: Arc<TensorModule>, cache: &RMatrixCache) -> Result<Self, OperatorError> {
        let n = tensor.n_factors();
        let mut rmats = HashMap::new();
        for i in 0..n {
            for j in i + 1..n {
                let r = cache.get(&tensor.factors()[i], &tensor.factors()[j])?;
                rmats.insert((i, j), r);
            }
        }
        let rank = tensor.rank();
        Ok(Operators {
            tensor,
            rmats,
            mutation: None,
            pieces: (0..rank).map(|_| OnceLock::new()).collect(),
            pieces_f64: (0..rank).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn from_descriptors(
        descs: &[ModuleDescriptor],
        cache: &RMatrixCache,
    ) -> Result<Self, OperatorError> {
        Operators::new(Arc::new(TensorModule::from_descriptors(descs)?), cache)
    }

    pub fn with_mutation(mut self, mutation: Option<LMutation>) -> Self {
        self.mutation = mutation;
        self
    }

    pub fn mutation(&self) -> Option<LMutation> {
        self.mutation
    }

    pub fn tensor(&self) -> &TensorModule {
        &self.tensor
    }

    pub fn rank(&self) -> usize {
        self.tensor.rank()
    }

    pub fn n_factors(&self) -> usize {
        self.tensor.n_factors()
    }

    pub fn dim(&self) -> usize {
        self.tensor.dim()
    }

    pub fn rmatrix(&self, i: usize, j: usize) -> &RMatrix {
        &self.rmats[&(i, j)]
    }

    fn check_index(&self, index: usize, bound: usize) -> Result<(), OperatorError> {
        if index >= bound {
            return Err(OperatorError::IndexOutOfRange { index, bound });
        }
        Ok(())
    }

    fn wrap(&self, formula: String, pt: &EvalPoint, matrix: RatMatrix) -> OperatorMatrix {
        OperatorMatrix {
            descriptors: self.tensor.descriptors(),
            formula,
            point: pt.clone(),
            matrix,
        }
    }

    /// `-1` if the mutation hook flips `term` of `L_a`, else `1`.
    fn sign(&self, a: usize, term: LTerm) -> Rat {
        match self.mutation {
            Some(m) if m.index == a && m.term == term => -Rat::one(),
            _ => Rat::one(),
        }
    }

    fn embedded_r(&self, i: usize, j: usize, x: &Rat) -> Result<RatMatrix, OperatorError> {
        let r = self.rmats[&(i, j)].evaluate_invertible(x)?;
        Ok(self.tensor.embed_pair(i, j, &r))
    }

    fn embedded_r_inverse(&self, i: usize, j: usize, x: &Rat) -> Result<RatMatrix, OperatorError> {
        let r = self.rmats[&(i, j)].evaluate_inverse(x)?;
        Ok(self.tensor.embed_pair(i, j, &r))
    }

    /// `∏_a λ_a^{e^{(m)}_{a,a}}`, diagonal in the tensor basis.
    pub fn lambda_power(&self, m: usize, lambda: &[Rat]) -> RatMatrix {
        let f = self.tensor.factor(m);
        self.tensor.diagonal(|t| {
            let w = f.weight_of(t[m]);
            lambda
                .iter()
                .zip(&w.0)
                .fold(Rat::one(), |acc, (la, &e)| {
                    let e = i32::try_from(e).expect("weight exponent fits in i32");
                    acc * la.pow(e)
                })
        })
    }

    pub fn k_factors(&self, m: usize, pt: &EvalPoint) -> Result<KFactors, OperatorError> {
        let n = self.n_factors();
        self.check_index(m, n)?;
        pt.validate(n, self.rank())?;
        let dim = self.dim();
        let mut prefix_inverse = RatMatrix::identity(dim);
        // (R^{(0,m)} ... R^{(m-1,m)})^{-1} = R^{(m-1,m)}^{-1} ... R^{(0,m)}^{-1}
        for i in (0..m).rev() {
            let x = &(&pt.z[i] - &pt.z[m]) - &pt.p;
            prefix_inverse = prefix_inverse.mul(&self.embedded_r_inverse(i, m, &x)?);
        }
        let mut suffix = RatMatrix::identity(dim);
        for j in (m + 1..n).rev() {
            let x = &pt.z[m] - &pt.z[j];
            suffix = suffix.mul(&self.embedded_r(m, j, &x)?);
        }
        Ok(KFactors {
            prefix_inverse,
            lambda_power: self.lambda_power(m, &pt.lambda),
            suffix,
        })
    }

    pub fn build_k(&self, m: usize, pt: &EvalPoint) -> Result<OperatorMatrix, OperatorError> {
        let k = self.k_factors(m, pt)?.product();
        Ok(self.wrap(format!("K_{}", m + 1), pt, k))
    }

    /// Pieces of the `L_a` formula with generators relabeled by `w`.
    fn pieces_for(&self, a: usize, w: &WeylElement) -> LPieces {
        let t = &self.tensor;
        let n = t.n_factors();
        let rank = t.rank();
        let g = |c: usize, d: usize| t.global_action(w.apply(c), w.apply(d));
        let f = |i: usize, c: usize, d: usize| t.factor_action(i, w.apply(c), w.apply(d));
        let half = Rat::new(1.into(), 2.into());
        let quadratic = g(a, a).mul(g(a, a)).scale(&half);
        let shift = (0..n).map(|i| f(i, a, a).clone()).collect();
        let mut exchange = SparseMat::zeros(t.dim(), t.dim());
        for b in 0..rank {
            for i in 0..n {
                for j in i + 1..n {
                    exchange = exchange.add(&f(i, a, b).mul(f(j, b, a)));
                }
            }
        }
        let dynamical = (0..rank)
            .filter(|&b| b != a)
            .map(|b| (b, g(a, b).mul(g(b, a)).sub(g(a, a))))
            .collect();
        LPieces {
            quadratic,
            shift,
            exchange,
            dynamical,
        }
    }

    fn pieces(&self, a: usize) -> &LPieces {
        self.pieces[a].get_or_init(|| self.pieces_for(a, &WeylElement::identity(self.rank())))
    }

    fn pieces_f64(&self, a: usize) -> &LPiecesF64 {
        self.pieces_f64[a].get_or_init(|| {
            let p = self.pieces(a);
            LPiecesF64 {
                quadratic: to_f64(&p.quadratic),
                shift: p.shift.iter().map(to_f64).collect(),
                exchange: to_f64(&p.exchange),
                dynamical: p.dynamical.iter().map(|(b, m)| (*b, to_f64(m))).collect(),
            }
        })
    }

    /// Assemble `L_a` from `pieces` with coordinates `mu` (λ, possibly permuted).
    fn assemble(&self, a: usize, pieces: &LPieces, z: &[Rat], mu: &[Rat]) -> RatMatrix {
        let mut acc = pieces.quadratic.scale(&self.sign(a, LTerm::Quadratic));
        let s_shift = -self.sign(a, LTerm::Shift);
        for (zi, e) in z.iter().zip(&pieces.shift) {
            acc.add_scaled(&(&s_shift * zi), e);
        }
        acc.add_scaled(&-self.sign(a, LTerm::Exchange), &pieces.exchange);
        let s_dyn = -self.sign(a, LTerm::Dynamical);
        for (b, c) in &pieces.dynamical {
            let coef = &mu[*b] / &(&mu[a] - &mu[*b]);
            acc.add_scaled(&(&s_dyn * &coef), c);
        }
        acc.to_dense()
    }

    pub fn build_l(&self, a: usize, pt: &EvalPoint) -> Result<OperatorMatrix, OperatorError> {
        self.check_index(a, self.rank())?;
        pt.validate(self.n_factors(), self.rank())?;
        let m = self.assemble(a, self.pieces(a), &pt.z, &pt.lambda);
        Ok(self.wrap(format!("L_{}", a + 1), pt, m))
    }

    /// `∂L_a/∂λ_c` from the closed forms.
    pub fn build_l_lambda_derivative(
        &self,
        c: usize,
        a: usize,
        pt: &EvalPoint,
    ) -> Result<OperatorMatrix, OperatorError> {
        self.check_index(a, self.rank())?;
        self.check_index(c, self.rank())?;
        pt.validate(self.n_factors(), self.rank())?;
        let la = &pt.lambda;
        let s = self.sign(a, LTerm::Dynamical);
        let mut acc = SparseMat::zeros(self.dim(), self.dim());
        for (b, m) in &self.pieces(a).dynamical {
            let d = &la[a] - &la[*b];
            let d2 = &d * &d;
            if c == a {
                acc.add_scaled(&(&s * &(&la[*b] / &d2)), m);
            } else if c == *b {
                acc.add_scaled(&-(&s * &(&la[a] / &d2)), m);
            }
        }
        Ok(self.wrap(format!("dL_{}/dlambda_{}", a + 1, c + 1), pt, acc.to_dense()))
    }

    /// The `L_a` formula with `e_{c,d} → e_{w(c),w(d)}` and
    /// `λ → (λ_{w(1)}, ..., λ_{w(N)})`.
    pub fn build_l_weyl(
        &self,
        w: &WeylElement,
        a: usize,
        pt: &EvalPoint,
    ) -> Result<OperatorMatrix, OperatorError> {
        let rank = self.rank();
        if w.images().len() != rank {
            return Err(OperatorError::InvalidPermutation(rank));
        }
        self.check_index(a, rank)?;
        pt.validate(self.n_factors(), rank)?;
        let mu: Vec<Rat> = (0..rank).map(|b| pt.lambda[w.apply(b)].clone()).collect();
        let pieces = self.pieces_for(a, w);
        let m = self.assemble(a, &pieces, &pt.z, &mu);
        Ok(self.wrap(format!("w{w} L_{}", a + 1), pt, m))
    }

    /// Float `L_a(z; λ)`, assembled from the exact pieces.
    pub fn build_l_f64(&self, a: usize, z: &[f64], lambda: &[f64]) -> DMatrix<f64> {
        let p = self.pieces_f64(a);
        let sign = |t| rat_to_f64(&self.sign(a, t));
        let mut acc = &p.quadratic * sign(LTerm::Quadratic);
        for (zi, e) in z.iter().zip(&p.shift) {
            acc -= e * (zi * sign(LTerm::Shift));
        }
        acc -= &p.exchange * sign(LTerm::Exchange);
        for (b, m) in &p.dynamical {
            acc -= m * (sign(LTerm::Dynamical) * lambda[*b] / (lambda[a] - lambda[*b]));
        }
        acc
    }

    /// Float `∂L_a/∂λ_c` from the closed forms.
    pub fn build_l_lambda_derivative_f64(&self, c: usize, a: usize, lambda: &[f64]) -> DMatrix<f64> {
        let p = self.pieces_f64(a);
        let s = rat_to_f64(&self.sign(a, LTerm::Dynamical));
        let mut acc = DMatrix::zeros(self.dim(), self.dim());
        for (b, m) in &p.dynamical {
            let d = lambda[a] - lambda[*b];
            if c == a {
                acc += m * (s * lambda[*b] / (d * d));
            } else if c == *b {
                acc -= m * (s * lambda[a] / (d * d));
            }
        }
        acc
    }

    /// Whether `m` has no entries between distinct weight blocks.
    pub fn preserves_weight_blocks(&self, m: &RatMatrix) -> bool {
        m.entries()
            .all(|(i, j, v)| v.is_zero() || self.tensor.weight_of(i) == self.tensor.weight_of(j))
    }
}
