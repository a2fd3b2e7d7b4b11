use qkz_core::harness::{parse_config, run_suite, sample_generic_point, Residual, SuiteConfig, SuiteKind};
use qkz_core::modules::ModuleDescriptor;
use qkz_core::operators::{LMutation, LTerm, Operators};
use qkz_core::rmatrix::RMatrixCache;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn descs(n: usize, f: &[&str]) -> Vec<ModuleDescriptor> {
    f.iter().map(|s| ModuleDescriptor::parse(n, s).unwrap()).collect()
}

#[test]
fn seeded_points_are_reproducible() {
    let cfg = SuiteConfig::new(descs(2, &["vector", "vector"]));
    let ops = Operators::from_descriptors(&cfg.factors, &RMatrixCache::new()).unwrap();
    let draw = || {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        (0..5)
            .map(|_| sample_generic_point(&cfg, &ops, &mut rng).unwrap().0)
            .collect::<Vec<_>>()
    };
    assert_eq!(draw(), draw());
}

#[test]
fn sampled_points_avoid_r_poles() {
    let cfg = SuiteConfig::new(descs(2, &["vector", "vector"])).with_samples(1);
    let ops = Operators::from_descriptors(&cfg.factors, &RMatrixCache::new()).unwrap();
    let poles = ops.rmatrix(0, 1).poles();
    assert!(!poles.is_empty());
    // a tiny bound makes pole hits frequent
    let cfg = SuiteConfig { bound: 2, ..cfg };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut rejected = 0;
    for _ in 0..200 {
        let (pt, rej) = sample_generic_point(&cfg, &ops, &mut rng).unwrap();
        rejected += rej.values().sum::<usize>();
        for k in -2..=1 {
            let x = &pt.z[0] - &pt.z[1] + &pt.p * qkz_core::exact::int(k);
            assert!(!poles.contains(&x), "{pt:?}");
        }
    }
    assert!(rejected > 0);
}

#[test]
fn gl1_single_factor_point() {
    let cfg = SuiteConfig::new(descs(1, &["vector"]));
    let ops = Operators::from_descriptors(&cfg.factors, &RMatrixCache::new()).unwrap();
    let (pt, _) = sample_generic_point(&cfg, &ops, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert_eq!((pt.z.len(), pt.lambda.len()), (1, 1));
    assert!(pt.lambda[0] != qkz_core::exact::int(0));
}

#[test]
fn zero_suites_give_an_empty_passing_report() {
    let cfg = SuiteConfig::new(descs(2, &["vector"])).with_suites(&[]);
    let rep = run_suite(&cfg, false).unwrap();
    assert!(rep.pass && rep.suites.is_empty());
    let v = rep.to_json();
    assert_eq!(v["suites"].as_array().unwrap().len(), 0);
    assert_eq!(v["pass"], true);
}

#[test]
fn gl1_full_suite_is_exactly_zero() {
    let cfg = SuiteConfig::new(descs(1, &["vector", "sym:2", "sym:3"])).with_samples(3);
    let rep = run_suite(&cfg, false).unwrap();
    assert_eq!(rep.suites.len(), SuiteKind::ALL.len());
    for s in &rep.suites {
        assert!(s.pass, "{}", s.kind.name());
        for x in &s.samples {
            if let Residual::Exact(r) = &x.residual {
                assert_eq!(*r, qkz_core::exact::int(0));
            }
        }
    }
}

#[test]
fn gl2_vector_sym2_all_suites_pass() {
    let cfg = SuiteConfig::new(descs(2, &["vector", "sym:2"])).with_seed(7);
    let rep = run_suite(&cfg, false).unwrap();
    assert!(rep.pass, "{}", rep.summary());
    for s in &rep.suites {
        let expect = if s.kind == SuiteKind::Bracket { 1 } else { 10 };
        assert_eq!(s.samples.len(), expect);
    }
    let flat = rep.suites.iter().find(|s| s.kind == SuiteKind::Flat).unwrap();
    assert!(flat.fd_validation.as_ref().unwrap().pass);
}

#[test]
fn report_is_reproducible_bit_for_bit() {
    let cfg = SuiteConfig::new(descs(2, &["vector", "vector"]))
        .with_samples(3)
        .with_seed(42);
    let a = serde_json::to_string(&run_suite(&cfg, false).unwrap().to_json()).unwrap();
    let b = serde_json::to_string(&run_suite(&cfg, false).unwrap().to_json()).unwrap();
    assert_eq!(a, b);
    let other = cfg.clone().with_seed(43);
    let c = serde_json::to_string(&run_suite(&other, false).unwrap().to_json()).unwrap();
    assert_ne!(a, c);
}

#[test]
fn report_schema() {
    let cfg = SuiteConfig::new(descs(2, &["vector", "vector"]))
        .with_suites(&[SuiteKind::Qkz, SuiteKind::Flow])
        .with_samples(2)
        .with_seed(5);
    let v = run_suite(&cfg, true).unwrap().to_json();
    for key in ["config", "suites", "pass", "seed", "elapsed_ms"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["seed"], 5);
    let qkz = &v["suites"][0];
    assert_eq!(qkz["name"], "qkz");
    let s0 = &qkz["samples"][0];
    assert_eq!(s0["residual"], "0/1");
    assert!(s0["point"]["z"].is_array() && s0["pass"] == true);
    let flow = &v["suites"][1];
    assert_eq!(flow["name"], "flow");
    assert!(flow["samples"][0]["residual"].as_f64().unwrap() < 1e-6);
}

#[test]
fn mutated_l_fails_flat_and_compatibility() {
    let mut cfg = SuiteConfig::new(descs(2, &["vector", "sym:2"]))
        .with_suites(&[SuiteKind::Qkz, SuiteKind::Flat, SuiteKind::Compatibility])
        .with_samples(2);
    cfg.mutation = Some(LMutation {
        term: LTerm::Exchange,
        index: 0,
    });
    let rep = run_suite(&cfg, false).unwrap();
    assert!(!rep.pass);
    let status = |k: SuiteKind| rep.suites.iter().find(|s| s.kind == k).unwrap().pass;
    assert!(status(SuiteKind::Qkz));
    assert!(!status(SuiteKind::Flat));
    assert!(!status(SuiteKind::Compatibility));
}

#[test]
fn truncated_verma_family_passes_on_safe_blocks() {
    let cfg = SuiteConfig::new(descs(2, &["verma:3,1:4", "vector"])).with_samples(2);
    let rep = run_suite(&cfg, false).unwrap();
    assert!(rep.pass, "{}", rep.summary());
}

#[test]
fn config_errors_name_the_offending_key() {
    let e = parse_config(r#"{"factors": [{"kind": "vector", "N": 2}], "sampels": 3}"#).unwrap_err();
    assert!(e.message.contains("sampels"), "{e}");
    let e = parse_config(r#"[{"factors": [{"kind": "vector", "N": 2}]}, {"factors": [], "samples": 0}]"#).unwrap_err();
    assert_eq!(e.path, "[1].factors");
    let e = parse_config(r#"{"factors": [{"kind": "vector", "N": 2}], "bound": "x"}"#).unwrap_err();
    assert_eq!(e.path, "bound");
    let e = parse_config(r#"{"factors": [{"kind": "vector", "N": 2}], "samples": 0}"#).unwrap_err();
    assert_eq!(e.path, "samples");
    let ok = parse_config(r#"{"factors": [{"kind": "vector", "N": 2}], "mutation": {"term": "shift", "index": 1}}"#).unwrap();
    assert_eq!(ok[0].samples, 10);
}
