mod common;

use std::sync::Arc;

use num_traits::{One, Zero};
use qkz_core::exact::{
    int, rat, FieldMatrix, RatFunc, RatMatrix,
};
use qkz_core::modules::{ModuleDescriptor, ModuleRealization, TensorModule, Weight};
use qkz_core::rmatrix::{
    check_intertwiner, check_yangian_relation, check_ybe, compute_rmatrix, relation_violations,
    yangian_t_generic, RMatrixCache, RMatrixError,
};

fn module(n: usize, s: &str) -> Arc<ModuleRealization> {
    Arc::new(ModuleDescriptor::parse(n, s).unwrap().build().unwrap())
}

use common::{lift, whole_space_oracle};

#[test]
fn vector_square_is_yang_matrix() {
    // R(x) = (x + P) / (x + 1)
    for n in [2, 3] {
        let v = module(n, "vector");
        let r = compute_rmatrix(&v, &v).unwrap();
        let pair = TensorModule::new(vec![v.clone(), v.clone()]).unwrap();
        let p = lift(&pair.swap_two());
        let x = RatFunc::x();
        let expect = FieldMatrix::identity(n * n)
            .scale(&x)
            .add(&p)
            .scale(&(&x + &RatFunc::one()).inv().unwrap());
        assert_eq!(r.symbolic(), expect);
        assert_eq!(r.poles(), vec![int(-1)]);
    }
}

#[test]
fn blockwise_matches_whole_space_oracle() {
    let cases = [
        (2, "vector", "vector"),
        (2, "vector", "sym:2"),
        (2, "sym:2", "vector"),
        (2, "sym:2", "sym:2"),
        (3, "vector", "vector"),
    ];
    for (n, a, b) in cases {
        let v1 = module(n, a);
        let v2 = module(n, b);
        let r = compute_rmatrix(&v1, &v2).unwrap();
        assert!(r.blocks().iter().all(|b| b.solved));
        assert_eq!(r.symbolic(), whole_space_oracle(&v1, &v2), "{a} x {b} on gl_{n}");
        assert_eq!(relation_violations(&r, &v1, &v2), 0);
    }
}

#[test]
fn unitarity() {
    // P R_{21}(-x) P R_{12}(x) = 1
    let v1 = module(2, "vector");
    let v2 = module(2, "sym:2");
    let r12 = compute_rmatrix(&v1, &v2).unwrap();
    let r21 = compute_rmatrix(&v2, &v1).unwrap();
    let p12 = TensorModule::new(vec![v1.clone(), v2.clone()]).unwrap().swap_two();
    let p21 = TensorModule::new(vec![v2.clone(), v1.clone()]).unwrap().swap_two();
    for x in [rat(1, 3), int(5), rat(-7, 2)] {
        let lhs = p21
            .mul(&r21.evaluate(&-x.clone()).unwrap())
            .mul(&p12)
            .mul(&r12.evaluate(&x).unwrap());
        assert_eq!(lhs, RatMatrix::identity(6));
    }
}

#[test]
fn yang_baxter_exact() {
    let cache = RMatrixCache::new();
    let triples = [
        (2, ["vector", "vector", "vector"]),
        (2, ["vector", "sym:2", "vector"]),
        (2, ["sym:2", "vector", "sym:2"]),
        (3, ["vector", "vector", "vector"]),
    ];
    for (n, t) in triples {
        let triple = [module(n, t[0]), module(n, t[1]), module(n, t[2])];
        for (x, y) in [(rat(2, 3), rat(-5, 7)), (int(4), rat(1, 9))] {
            let res = check_ybe(&cache, &triple, &x, &y, None).unwrap();
            assert!(res.is_zero(), "{t:?}");
        }
    }
}

#[test]
fn yangian_relation_and_intertwiner_exact() {
    let cache = RMatrixCache::new();
    let v1 = module(2, "vector");
    let v2 = module(2, "sym:2");
    let pts = [rat(1, 2), rat(-3, 4)];
    let res = check_yangian_relation(
        &[v1.clone(), v2.clone()],
        &pts,
        &rat(7, 3),
        &rat(-2, 5),
        None,
    )
    .unwrap();
    assert!(res.is_zero());
    let res = check_intertwiner(&cache, &v1, &v2, &pts[0], &pts[1], &rat(11, 6), None).unwrap();
    assert!(res.is_zero());
    let v3 = module(3, "vector");
    let res =
        check_intertwiner(&cache, &v3, &v3, &int(2), &rat(1, 3), &rat(-4, 5), None).unwrap();
    assert!(res.is_zero());
}

#[test]
fn intertwiner_fails_for_wrong_argument() {
    // Evaluating R at y - x instead of x - y must break the intertwining.
    let v = module(2, "vector");
    let r = compute_rmatrix(&v, &v).unwrap();
    let pair = TensorModule::new(vec![v.clone(), v.clone()]).unwrap();
    let (x, y, u) = (int(3), int(1), rat(1, 2));
    let pr = pair.swap_two().mul(&r.evaluate(&(&y - &x)).unwrap());
    let t = yangian_t_generic(&[v.clone(), v.clone()], &[x.clone(), y.clone()], &u).unwrap();
    let t2 = yangian_t_generic(&[v.clone(), v.clone()], &[y, x], &u).unwrap();
    let worst = (0..4)
        .map(|k| pr.mul(&t[k]).sub(&t2[k].mul(&pr)).max_abs())
        .max()
        .unwrap();
    assert!(!worst.is_zero());
}

#[test]
fn leading_coefficient_at_infinity_is_global_action() {
    let v1 = module(2, "vector");
    let v2 = module(2, "sym:2");
    let pair = TensorModule::new(vec![v1.clone(), v2.clone()]).unwrap();
    let u = RatFunc::x();
    let table = yangian_t_generic(&[v1, v2], &[rat(1, 2), int(-2)], &u).unwrap();
    for a in 0..2 {
        for b in 0..2 {
            let t = &table[a * 2 + b];
            let e = pair.global_action(b, a).to_dense();
            for (i, j, v) in t.entries() {
                let expect_const = if a == b && i == j { int(1) } else { int(0) };
                // T = const + residue / u + O(u^-2)
                let shifted = v - &RatFunc::constant(expect_const);
                assert_eq!(shifted.residue_at_infinity().unwrap(), e[(i, j)].clone());
            }
        }
    }
}

#[test]
fn pole_names_block() {
    let v = module(2, "vector");
    let r = compute_rmatrix(&v, &v).unwrap();
    match r.evaluate(&int(-1)).unwrap_err() {
        RMatrixError::Pole { weight, at, .. } => {
            assert_eq!(at, int(-1));
            assert!(r.block(&weight).is_some());
        }
        e => panic!("unexpected error {e}"),
    }
    assert!(r.evaluate(&int(1)).is_ok());
    assert!(!r.is_regular_at(&int(1)), "R(1) = (1 + P)/2 is singular on the antisymmetric part");
}

#[test]
fn truncated_verma_solves_complete_blocks() {
    let m = module(2, "verma:3,1:4");
    let v = module(2, "vector");
    let r = compute_rmatrix(&m, &v).unwrap();
    for b in r.blocks() {
        assert_eq!(b.solved, b.height <= 4, "{:?}", b.weight);
    }
    assert_eq!(relation_violations(&r, &m, &v), 0);
    let top = r.block(&Weight(vec![4, 1])).unwrap();
    assert_eq!(top.matrix[(0, 0)], RatFunc::one());

    let cache = RMatrixCache::new();
    let triple = [m.clone(), v.clone(), v.clone()];
    let t = TensorModule::new(triple.to_vec()).unwrap();
    let safe = t.safe_indices(2).unwrap();
    let res = check_ybe(&cache, &triple, &rat(5, 3), &rat(-1, 2), Some(&safe)).unwrap();
    assert!(res.is_zero());
}

#[test]
fn json_export_round_trips_entries() {
    let v = module(2, "vector");
    let r = compute_rmatrix(&v, &v).unwrap();
    let j = r.to_json();
    assert_eq!(j["poles"], serde_json::json!(["-1/1"]));
    let blocks = j["blocks"].as_array().unwrap();
    assert_eq!(blocks.len(), 3);
    let mid = blocks.iter().find(|b| b["weight"] == serde_json::json!([1, 1])).unwrap();
    // x / (x + 1) on the diagonal of the two-dimensional block
    assert_eq!(mid["entries"][0][0]["num"], serde_json::json!(["0/1", "1/1"]));
    assert_eq!(mid["entries"][0][0]["den"], serde_json::json!(["1/1", "1/1"]));
}

#[test]
fn cache_computes_once() {
    let cache = RMatrixCache::new();
    let v = module(2, "vector");
    let a = cache.get(&v, &v).unwrap();
    let b = cache.get(&v, &v).unwrap();
    assert!(Arc::ptr_eq(&a, &b));
    assert_eq!(cache.len(), 1);
}

