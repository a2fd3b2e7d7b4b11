use super::{EvalPoint, LTerm, OperatorError, Operators, WeylElement};
use crate::exact::RatMatrix;
use crate::modules::SparseMat;

impl Operators {
    /// `K_l(z + p ε_m) K_m(z) - K_m(z + p ε_l) K_l(z)`
    pub fn qkz_commutation_residual(
        &self,
        l: usize,
        m: usize,
        pt: &EvalPoint,
    ) -> Result<RatMatrix, OperatorError> {
        let lhs = self
            .build_k(l, &pt.shifted(m))?
            .matrix
            .mul(&self.build_k(m, pt)?.matrix);
        let rhs = self
            .build_k(m, &pt.shifted(l))?
            .matrix
            .mul(&self.build_k(l, pt)?.matrix);
        Ok(lhs.sub(&rhs))
    }

    /// `[L_a, L_b] + p λ_a ∂L_b/∂λ_a - p λ_b ∂L_a/∂λ_b`
    pub fn dyn_commutation_residual(
        &self,
        a: usize,
        b: usize,
        pt: &EvalPoint,
    ) -> Result<RatMatrix, OperatorError> {
        let la = self.build_l(a, pt)?.matrix;
        let lb = self.build_l(b, pt)?.matrix;
        let db_a = self.build_l_lambda_derivative(a, b, pt)?.matrix;
        let da_b = self.build_l_lambda_derivative(b, a, pt)?.matrix;
        let mut res = la.commutator(&lb);
        res.add_scaled(&(&pt.p * &pt.lambda[a]), &db_a);
        res.add_scaled(&-(&pt.p * &pt.lambda[b]), &da_b);
        Ok(res)
    }

    /// `L_a(z + p ε_i) K_i + p λ_a ∂_{λ_a} K_i - K_i L_a(z)`, with the
    /// shifted `L_a` built at the shifted point and
    /// `λ_a ∂_{λ_a} K_i = A^{-1} e^{(i)}_{a,a} Λ B`.
    pub fn compatibility_residual(
        &self,
        i: usize,
        a: usize,
        pt: &EvalPoint,
    ) -> Result<RatMatrix, OperatorError> {
        let kf = self.k_factors(i, pt)?;
        let k = kf.product();
        let l_shift = self.build_l(a, &pt.shifted(i))?.matrix;
        let l = self.build_l(a, pt)?.matrix;
        let eaa = self.tensor().factor_action(i, a, a).to_dense();
        let dk = kf.prefix_inverse.mul(&eaa).mul(&kf.lambda_power).mul(&kf.suffix);
        let mut res = l_shift.mul(&k);
        res.add_scaled(&pt.p, &dk);
        Ok(res.sub(&k.mul(&l)))
    }

    /// `[K_1, L_a]`
    pub fn k1_commutator_residual(&self, a: usize, pt: &EvalPoint) -> Result<RatMatrix, OperatorError> {
        let k = self.build_k(0, pt)?.matrix;
        let l = self.build_l(a, pt)?.matrix;
        Ok(k.commutator(&l))
    }

    /// `L_a(z + p ε_i) - (L_a(z) - p e^{(i)}_{a,a})`, zero unless the shift
    /// term is mutated.
    pub fn shift_identity_residual(
        &self,
        i: usize,
        a: usize,
        pt: &EvalPoint,
    ) -> Result<RatMatrix, OperatorError> {
        let shifted = self.build_l(a, &pt.shifted(i))?.matrix;
        let mut expect = self.build_l(a, pt)?.matrix;
        expect.add_scaled(&-pt.p.clone(), &self.tensor().factor_action(i, a, a).to_dense());
        Ok(shifted.sub(&expect))
    }

    /// `L_a` regrouped around `z_1`:
    /// `e_aa^2/2 - dyn - z_1 e_aa + sum_{i≥2} (z_1 - z_i) e^{(i)}_aa - exchange`,
    /// minus `L_a` as built.
    pub fn rewritten_l_residual(&self, a: usize, pt: &EvalPoint) -> Result<RatMatrix, OperatorError> {
        let l = self.build_l(a, pt)?.matrix;
        let t = self.tensor();
        let s_shift = self.sign(a, LTerm::Shift);
        let mut acc = self.dynamic_core(a, pt);
        acc.add_scaled(&-(&s_shift * &pt.z[0]), t.global_action(a, a));
        for i in 1..self.n_factors() {
            acc.add_scaled(&(&s_shift * &(&pt.z[0] - &pt.z[i])), t.factor_action(i, a, a));
        }
        acc.add_scaled(&-self.sign(a, LTerm::Exchange), &self.pieces(a).exchange);
        Ok(acc.to_dense().sub(&l))
    }

    /// `K_1 L_a - ( -z_1 e_aa K_1 + Λ^{(1)} M R^{(1,n)} ... R^{(1,2)} )`,
    /// where `M` is the regrouped operator with the exchange terms through
    /// slot 1 reversed.
    pub fn k1_final_identity_residual(
        &self,
        a: usize,
        pt: &EvalPoint,
    ) -> Result<RatMatrix, OperatorError> {
        let t = self.tensor();
        let n = self.n_factors();
        let rank = self.rank();
        let kf = self.k_factors(0, pt)?;
        let k = kf.product();
        let l = self.build_l(a, pt)?.matrix;
        let s_shift = self.sign(a, LTerm::Shift);
        let s_ex = self.sign(a, LTerm::Exchange);

        let mut m = self.dynamic_core(a, pt);
        for i in 1..n {
            m.add_scaled(&(&s_shift * &(&pt.z[0] - &pt.z[i])), t.factor_action(i, a, a));
        }
        let mut ex = SparseMat::zeros(t.dim(), t.dim());
        for b in 0..rank {
            for j in 1..n {
                ex = ex.add(&t.factor_action(0, b, a).mul(t.factor_action(j, a, b)));
            }
            for i in 1..n {
                for j in i + 1..n {
                    ex = ex.add(&t.factor_action(i, a, b).mul(t.factor_action(j, b, a)));
                }
            }
        }
        m.add_scaled(&-s_ex, &ex);
        let rhs_main = kf.lambda_power.mul(&m.to_dense()).mul(&kf.suffix);
        let first = t
            .global_action(a, a)
            .to_dense()
            .mul(&k)
            .scale(&-(&s_shift * &pt.z[0]));
        Ok(k.mul(&l).sub(&first.add(&rhs_main)))
    }

    /// `±e_aa^2/2 ∓ sum_{b≠a} λ_b/(λ_a-λ_b) (e_ab e_ba - e_aa)` with the
    /// mutation signs applied.
    fn dynamic_core(&self, a: usize, pt: &EvalPoint) -> SparseMat {
        let p = self.pieces(a);
        let mut acc = p.quadratic.scale(&self.sign(a, LTerm::Quadratic));
        let s_dyn = -self.sign(a, LTerm::Dynamical);
        let la = &pt.lambda;
        for (b, c) in &p.dynamical {
            acc.add_scaled(&(&s_dyn * &(&la[*b] / &(&la[a] - &la[*b]))), c);
        }
        acc
    }

    /// `build_l_weyl(w, a) - build_l(w(a))`
    pub fn weyl_residual(
        &self,
        w: &WeylElement,
        a: usize,
        pt: &EvalPoint,
    ) -> Result<RatMatrix, OperatorError> {
        let lhs = self.build_l_weyl(w, a, pt)?.matrix;
        let rhs = self.build_l(w.apply(a), pt)?.matrix;
        Ok(lhs.sub(&rhs))
    }

    /// `[Λ^{(1..n)}, L_a]` with `Λ = ∏_c λ_c^{e_{c,c}}` on the whole tensor
    /// product; zero because `L_a` preserves weights.
    pub fn lambda_power_commutator(&self, a: usize, pt: &EvalPoint) -> Result<RatMatrix, OperatorError> {
        let l = self.build_l(a, pt)?.matrix;
        let mut lam = RatMatrix::identity(self.dim());
        for m in 0..self.n_factors() {
            lam = lam.mul(&self.lambda_power(m, &pt.lambda));
        }
        Ok(lam.commutator(&l))
    }
}
