use num_traits::Zero;
use qkz_core::exact::{int, rat, FieldMatrix, Rat, RatMatrix};
use qkz_core::modules::{ModuleDescriptor, TensorModule};
use qkz_core::operators::{EvalPoint, LMutation, LTerm, OperatorError, Operators, WeylElement};
use qkz_core::rmatrix::{RMatrixCache, RMatrixError};

fn ops(n: usize, factors: &[&str]) -> Operators {
    let descs: Vec<ModuleDescriptor> = factors
        .iter()
        .map(|s| ModuleDescriptor::parse(n, s).unwrap())
        .collect();
    Operators::from_descriptors(&descs, &RMatrixCache::new()).unwrap()
}

fn m(rows: &[&[Rat]]) -> RatMatrix {
    FieldMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect())
}

fn diag(d: &[Rat]) -> RatMatrix {
    RatMatrix::diagonal(d.to_vec())
}

fn pt(z: &[Rat], l: &[Rat], p: Rat) -> EvalPoint {
    EvalPoint::new(z.to_vec(), l.to_vec(), p)
}

/// Permutation of `V ⊗ V` for the 2-dimensional vector module.
fn swap4() -> RatMatrix {
    let mut p = RatMatrix::zeros(4, 4);
    for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
        p[(i, j)] = int(1);
    }
    p
}

#[test]
fn gl1_k_and_l_are_scalars() {
    let o = ops(1, &["vector", "sym:3"]);
    let x = pt(&[rat(1, 2), int(4)], &[rat(5, 3)], int(2));
    assert_eq!(o.build_k(0, &x).unwrap().matrix, diag(&[rat(5, 3)]));
    assert_eq!(o.build_k(1, &x).unwrap().matrix, diag(&[rat(125, 27)]));
    // (1 + 3)^2 / 2 - z1 * 1 - z2 * 3 - 1 * 3
    let l = o.build_l(0, &x).unwrap().matrix;
    assert_eq!(l, diag(&[int(8) - rat(1, 2) - int(12) - int(3)]));
    assert!(o.build_l_lambda_derivative(0, 0, &x).unwrap().matrix.is_zero());

    let o = ops(1, &["vector", "vector"]);
    let x = pt(&[int(3), int(-2)], &[int(7)], int(1));
    assert_eq!(o.build_l(0, &x).unwrap().matrix, diag(&[int(1) - int(3) + int(2)]));
}

#[test]
fn single_factor_k_is_lambda_power() {
    let o = ops(2, &["sym:2"]);
    let x = pt(&[int(1)], &[int(2), int(3)], int(1));
    // weights (2,0), (1,1), (0,2)
    assert_eq!(o.build_k(0, &x).unwrap().matrix, diag(&[int(4), int(6), int(9)]));
}

#[test]
fn gl2_vector_pair_k_oracles() {
    let o = ops(2, &["vector", "vector"]);
    let p = swap4();
    let i4 = RatMatrix::identity(4);

    let x = pt(&[int(0), int(1)], &[int(2), int(3)], int(1));
    // K_2 = R(-2)^{-1} Λ^{(2)}, R(-2) = 2 - P
    let k2 = i4.scale(&int(2)).add(&p).scale(&rat(1, 3)).mul(&diag(&[int(2), int(3), int(2), int(3)]));
    assert_eq!(o.build_k(1, &x).unwrap().matrix, k2);
    match o.build_k(0, &x).unwrap_err() {
        OperatorError::RMatrix(RMatrixError::Pole { at, .. }) => assert_eq!(at, int(-1)),
        e => panic!("unexpected {e}"),
    }

    let x = pt(&[int(0), int(2)], &[int(2), int(3)], int(1));
    let k1 = diag(&[int(2), int(2), int(3), int(3)]).mul(&i4.scale(&int(2)).sub(&p));
    assert_eq!(o.build_k(0, &x).unwrap().matrix, k1);
}

#[test]
fn gl2_l_oracles() {
    let e11 = m(&[&[int(1), int(0)], &[int(0), int(0)]]);
    let e12 = m(&[&[int(0), int(1)], &[int(0), int(0)]]);
    let e21 = m(&[&[int(0), int(0)], &[int(1), int(0)]]);
    let x = pt(&[int(0)], &[int(2), int(1)], int(1));
    let o = ops(2, &["vector"]);
    // e11^2/2 - 0 - 1/(2-1) (e12 e21 - e11)
    let c = e12.mul(&e21).sub(&e11);
    let expect = e11.mul(&e11).scale(&rat(1, 2)).sub(&c);
    assert_eq!(o.build_l(0, &x).unwrap().matrix, expect);
    assert_eq!(o.build_l(0, &x).unwrap().matrix, diag(&[rat(1, 2), int(0)]));
    assert_eq!(
        o.build_l_lambda_derivative(1, 0, &x).unwrap().matrix,
        c.scale(&int(-2))
    );

    let o = ops(2, &["sym:2"]);
    assert_eq!(o.build_l(0, &x).unwrap().matrix, diag(&[int(2), rat(-1, 2), int(0)]));
    let d12 = o.build_l_lambda_derivative(1, 0, &x).unwrap().matrix;
    let d21 = o.build_l_lambda_derivative(0, 1, &x).unwrap().matrix;
    assert_eq!(d12, diag(&[int(0), int(-2), int(0)]));
    assert_eq!(d21, diag(&[int(0), int(-1), int(0)]));
    assert_ne!(d12, d21);
}

#[test]
fn weyl_relabeling_oracle() {
    let o = ops(2, &["vector"]);
    let x = pt(&[int(0)], &[int(2), int(1)], int(1));
    let w = WeylElement::new(vec![1, 0]).unwrap();
    // e22^2/2 - z1 e22 - λ1/(λ2-λ1) (e21 e12 - e22) = diag(0, 1/2)
    assert_eq!(o.build_l_weyl(&w, 0, &x).unwrap().matrix, diag(&[int(0), rat(1, 2)]));
    assert!(o.weyl_residual(&w, 0, &x).unwrap().is_zero());
    let id = WeylElement::identity(2);
    assert_eq!(
        o.build_l_weyl(&id, 1, &x).unwrap().matrix,
        o.build_l(1, &x).unwrap().matrix
    );
    assert!(WeylElement::new(vec![0, 0]).is_err());
    assert_eq!(WeylElement::all(3).len(), 6);
}

#[test]
fn point_guards() {
    let o = ops(2, &["vector", "vector"]);
    let bad = pt(&[int(0), int(3)], &[int(2), int(2)], int(1));
    assert_eq!(o.build_l(0, &bad).unwrap_err(), OperatorError::CoincidentLambda(0, 1));
    let bad = pt(&[int(0), int(3)], &[int(0), int(2)], int(1));
    assert_eq!(o.build_l(0, &bad).unwrap_err(), OperatorError::ZeroLambda(0));
    let bad = pt(&[int(0), int(3)], &[int(1), int(2)], int(0));
    assert_eq!(o.build_k(0, &bad).unwrap_err(), OperatorError::ZeroP);
    let bad = pt(&[int(0)], &[int(1), int(2)], int(1));
    assert!(matches!(o.build_k(0, &bad).unwrap_err(), OperatorError::ZLength { .. }));
}

fn generic(n: usize, rank: usize) -> EvalPoint {
    let z = [rat(3, 7), rat(-11, 5), rat(17, 4), rat(2, 9)];
    let l = [rat(5, 2), rat(-4, 3), rat(9, 7)];
    pt(&z[..n], &l[..rank], rat(13, 6))
}

#[test]
fn residuals_vanish_on_gl2_products() {
    let o = ops(2, &["vector", "vector", "vector"]);
    let x = generic(3, 2);
    for l in 0..3 {
        for m in 0..3 {
            assert!(o.qkz_commutation_residual(l, m, &x).unwrap().is_zero(), "qkz {l} {m}");
        }
    }
    let o = ops(2, &["vector", "sym:2"]);
    let x = generic(2, 2);
    for a in 0..2 {
        for b in 0..2 {
            assert!(o.dyn_commutation_residual(a, b, &x).unwrap().is_zero());
        }
        for i in 0..2 {
            assert!(o.compatibility_residual(i, a, &x).unwrap().is_zero(), "compat {i} {a}");
            assert!(o.shift_identity_residual(i, a, &x).unwrap().is_zero());
        }
        assert!(o.k1_commutator_residual(a, &x).unwrap().is_zero());
        assert!(o.k1_final_identity_residual(a, &x).unwrap().is_zero());
        assert!(o.rewritten_l_residual(a, &x).unwrap().is_zero());
        assert!(o.lambda_power_commutator(a, &x).unwrap().is_zero());
        assert!(o.preserves_weight_blocks(&o.build_l(a, &x).unwrap().matrix));
    }
    for m in 0..2 {
        assert!(o.preserves_weight_blocks(&o.build_k(m, &x).unwrap().matrix));
    }
}

#[test]
fn residuals_vanish_on_gl3() {
    let o = ops(3, &["vector", "vector"]);
    let x = generic(2, 3);
    for w in WeylElement::all(3) {
        for a in 0..3 {
            assert!(o.weyl_residual(&w, a, &x).unwrap().is_zero(), "weyl {w} {a}");
        }
    }
    for a in 0..3 {
        for b in 0..3 {
            assert!(o.dyn_commutation_residual(a, b, &x).unwrap().is_zero());
        }
        for i in 0..2 {
            assert!(o.compatibility_residual(i, a, &x).unwrap().is_zero());
        }
    }
}

#[test]
fn every_single_term_mutation_is_detected() {
    let x = generic(2, 2);
    for term in [LTerm::Quadratic, LTerm::Shift, LTerm::Exchange, LTerm::Dynamical] {
        for index in 0..2 {
            let o = ops(2, &["vector", "sym:2"]).with_mutation(Some(LMutation { term, index }));
            let mut flat = false;
            let mut compat = false;
            let mut weyl = false;
            for a in 0..2 {
                for b in 0..2 {
                    flat |= !o.dyn_commutation_residual(a, b, &x).unwrap().is_zero();
                }
                for i in 0..2 {
                    compat |= !o.compatibility_residual(i, a, &x).unwrap().is_zero();
                }
                for w in WeylElement::all(2) {
                    weyl |= !o.weyl_residual(&w, a, &x).unwrap().is_zero();
                }
            }
            assert!(flat || compat || weyl, "{term:?} on L_{index} undetected");
        }
    }
}

#[test]
fn float_l_matches_exact() {
    let o = ops(2, &["vector", "sym:2"]);
    let x = generic(2, 2);
    let zf: Vec<f64> = x.z.iter().map(qkz_core::exact::rat_to_f64).collect();
    let lf: Vec<f64> = x.lambda.iter().map(qkz_core::exact::rat_to_f64).collect();
    for a in 0..2 {
        let exact = o.build_l(a, &x).unwrap().matrix.to_f64_rows();
        let float = o.build_l_f64(a, &zf, &lf);
        for (i, row) in exact.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert!((v - float[(i, j)]).abs() < 1e-12);
            }
        }
        for c in 0..2 {
            let exact = o.build_l_lambda_derivative(c, a, &x).unwrap().matrix.to_f64_rows();
            let float = o.build_l_lambda_derivative_f64(c, a, &lf);
            for (i, row) in exact.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    assert!((v - float[(i, j)]).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn truncated_verma_residuals_vanish_on_safe_blocks() {
    let o = ops(2, &["verma:3,1:4", "vector"]);
    let t: &TensorModule = o.tensor();
    let safe = t.safe_indices(2).unwrap();
    assert!(!safe.is_empty());
    let x = generic(2, 2);
    let restricted = |r: RatMatrix| {
        safe.iter()
            .all(|&i| safe.iter().all(|&j| r[(i, j)].is_zero()))
    };
    for a in 0..2 {
        for b in 0..2 {
            assert!(restricted(o.dyn_commutation_residual(a, b, &x).unwrap()));
        }
        for i in 0..2 {
            assert!(restricted(o.compatibility_residual(i, a, &x).unwrap()), "compat {i} {a}");
        }
        for w in WeylElement::all(2) {
            assert!(restricted(o.weyl_residual(&w, a, &x).unwrap()));
        }
    }
    let mut visible = false;
    for l in 0..2 {
        for m in 0..2 {
            let r = o.qkz_commutation_residual(l, m, &x).unwrap();
            visible |= !r.is_zero();
            assert!(restricted(r));
        }
    }
    for a in 0..2 {
        for b in 0..2 {
            visible |= !o.dyn_commutation_residual(a, b, &x).unwrap().is_zero();
        }
    }
    assert!(visible, "the truncation cut should show outside the safe blocks");
}

#[test]
fn operator_json_has_provenance() {
    let o = ops(2, &["vector"]);
    let x = pt(&[int(0)], &[int(2), int(1)], int(1));
    let j = o.build_l(0, &x).unwrap().to_json();
    assert_eq!(j["formula"], "L_1");
    assert_eq!(j["matrix"][0][0], "1/2");
    assert_eq!(j["point"]["lambda"], serde_json::json!(["2/1", "1/1"]));
}
