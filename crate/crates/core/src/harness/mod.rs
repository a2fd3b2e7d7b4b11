//! Seeded verification runs: generic sample points, residual suites and
//! JSON reports.

mod config;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DVector;
use num_traits::{Signed, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::exact::{rat, rat_string, rat_to_f64, Rat, RatMatrix};
use crate::flow::{commuting_square_defect, validate_lambda_derivatives, FdReport, FlowError, FlowState};
use crate::modules::{check_bracket, ModuleError, ModuleRealization, TensorModule};
use crate::operators::{EvalPoint, OperatorError, Operators, WeylElement};
use crate::rmatrix::{check_intertwiner, check_yangian_relation, check_ybe, masked_max, RMatrixCache, RMatrixError};

pub use config::{default_matrix, parse_config, ConfigError, FlowSettings, SuiteConfig, SuiteKind};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum HarnessError {
    #[error("{family}: {source}")]
    Module {
        family: String,
        #[source]
        source: ModuleError,
    },
    #[error("{family}: {source}")]
    Operator {
        family: String,
        #[source]
        source: Box<OperatorError>,
    },
    #[error("{family}, suite {suite}, sample {sample}: {source}")]
    Evaluation {
        family: String,
        suite: &'static str,
        sample: usize,
        #[source]
        source: Box<OperatorError>,
    },
    #[error("{family}, suite {suite}, sample {sample}: flow failed: {source}")]
    Flow {
        family: String,
        suite: &'static str,
        sample: usize,
        #[source]
        source: Box<FlowError>,
    },
    #[error(
        "{family}, suite {suite}, sample {sample}: rejection budget of {budget} draws exhausted; \
         most frequent rejection: {dominant}"
    )]
    RejectionBudget {
        family: String,
        suite: &'static str,
        sample: usize,
        budget: usize,
        dominant: String,
    },
}

/// A residual value: exact for the algebraic suites, a float defect for the
/// flow suite.
#[derive(Debug, Clone, PartialEq)]
pub enum Residual {
    Exact(Rat),
    Float(f64),
}

impl Residual {
    fn to_json(&self) -> Value {
        match self {
            Residual::Exact(r) => Value::String(rat_string(r)),
            Residual::Float(x) => json!(x),
        }
    }
}

/// A sample point. `extra` holds the suite's additional spectral parameters
/// (`u`, `v`, `x`, `y`).
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoint {
    pub point: EvalPoint,
    pub extra: BTreeMap<&'static str, Rat>,
}

impl SamplePoint {
    fn to_json(&self) -> Value {
        let mut v = self.point.to_json();
        for (k, x) in &self.extra {
            v[*k] = Value::String(rat_string(x));
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleReport {
    pub index: usize,
    pub point: Option<SamplePoint>,
    pub residual: Residual,
    /// Largest residual per identity checked at this sample.
    pub checks: BTreeMap<String, Residual>,
    pub pass: bool,
    pub rejected: BTreeMap<&'static str, usize>,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub family: String,
    pub kind: SuiteKind,
    pub samples: Vec<SampleReport>,
    pub fd_validation: Option<FdReport>,
    pub pass: bool,
}

impl SuiteReport {
    pub fn rejected(&self) -> usize {
        self.samples.iter().flat_map(|s| s.rejected.values()).sum()
    }

    pub fn to_json(&self) -> Value {
        let mut reasons: BTreeMap<&str, usize> = BTreeMap::new();
        for s in &self.samples {
            for (k, v) in &s.rejected {
                *reasons.entry(k).or_default() += v;
            }
        }
        let samples: Vec<Value> = self
            .samples
            .iter()
            .map(|s| {
                json!({
                    "index": s.index,
                    "point": s.point.as_ref().map_or(Value::Null, SamplePoint::to_json),
                    "residual": s.residual.to_json(),
                    "checks": s.checks.iter().map(|(k, r)| (k.clone(), r.to_json())).collect::<serde_json::Map<_, _>>(),
                    "pass": s.pass,
                    "rejected": s.rejected.values().sum::<usize>(),
                })
            })
            .collect();
        let mut v = json!({
            "name": self.kind.name(),
            "family": self.family,
            "samples": samples,
            "pass": self.pass,
            "rejected": self.rejected(),
            "rejection_reasons": reasons,
        });
        if let Some(fd) = &self.fd_validation {
            v["fd_validation"] = fd_json(fd);
        }
        v
    }
}

fn fd_json(fd: &FdReport) -> Value {
    let worst = fd.checks.iter().map(|c| c.errors[1]).fold(0.0, f64::max);
    let orders: Vec<f64> = fd.checks.iter().filter_map(|c| c.order).collect();
    json!({
        "pass": fd.pass,
        "max_rel_error_h1e-5": worst,
        "orders": orders,
    })
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub configs: Vec<SuiteConfig>,
    pub suites: Vec<SuiteReport>,
    pub pass: bool,
    pub elapsed_ms: Option<u128>,
}

impl VerificationReport {
    pub fn seed(&self) -> u64 {
        self.configs.first().map_or(0, |c| c.seed)
    }

    /// Report JSON with sorted keys. `elapsed_ms` is 0 when timing is off.
    pub fn to_json(&self) -> Value {
        let config = match self.configs.as_slice() {
            [one] => serde_json::to_value(one).expect("config serializes"),
            many => serde_json::to_value(many).expect("config serializes"),
        };
        json!({
            "config": config,
            "suites": self.suites.iter().map(SuiteReport::to_json).collect::<Vec<_>>(),
            "pass": self.pass,
            "seed": self.seed(),
            "elapsed_ms": self.elapsed_ms.unwrap_or(0),
        })
    }

    /// One line per suite.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for s in &self.suites {
            let worst = s
                .samples
                .iter()
                .map(|x| x.residual.clone())
                .reduce(|a, b| match (&a, &b) {
                    (Residual::Exact(x), Residual::Exact(y)) if y > x => b,
                    (Residual::Float(x), Residual::Float(y)) if y > x => b,
                    _ => a,
                })
                .map_or_else(
                    || "-".to_string(),
                    |r| match r {
                        Residual::Exact(r) => rat_string(&r),
                        Residual::Float(f) => format!("{f:.3e}"),
                    },
                );
            out.push_str(&format!(
                "{:<4} {:<32} {:<14} samples={:<3} rejected={:<4} worst={}\n",
                if s.pass { "ok" } else { "FAIL" },
                s.family,
                s.kind.name(),
                s.samples.len(),
                s.rejected(),
                worst
            ));
        }
        out.push_str(if self.pass { "overall: pass\n" } else { "overall: FAIL\n" });
        out
    }
}

/// Run one configuration. Timing is recorded unless `timing` is false.
pub fn run_suite(cfg: &SuiteConfig, timing: bool) -> Result<VerificationReport, HarnessError> {
    run_matrix(std::slice::from_ref(cfg), timing)
}

/// Run several configurations into one report. Suites are reported in
/// configuration order, then suite order; samples by index.
pub fn run_matrix(cfgs: &[SuiteConfig], timing: bool) -> Result<VerificationReport, HarnessError> {
    let start = Instant::now();
    let cache = RMatrixCache::new();
    let mut suites = Vec::new();
    for (position, cfg) in cfgs.iter().enumerate() {
        suites.extend(run_family(cfg, position, &cache)?);
    }
    let pass = suites.iter().all(|s| s.pass);
    Ok(VerificationReport {
        configs: cfgs.to_vec(),
        suites,
        pass,
        elapsed_ms: timing.then(|| start.elapsed().as_millis()),
    })
}

struct Family<'a> {
    cfg: &'a SuiteConfig,
    /// Index of the configuration in the run, mixed into the sample streams.
    position: usize,
    label: String,
    ops: Operators,
    cache: &'a RMatrixCache,
    mask: Option<Vec<usize>>,
}

fn run_family(cfg: &SuiteConfig, position: usize, cache: &RMatrixCache) -> Result<Vec<SuiteReport>, HarnessError> {
    let label = cfg.label();
    if cfg.suites.is_empty() {
        return Ok(Vec::new());
    }
    let tensor = TensorModule::from_descriptors(&cfg.factors).map_err(|source| HarnessError::Module {
        family: label.clone(),
        source,
    })?;
    let ops = Operators::new(Arc::new(tensor), cache)
        .map_err(|source| HarnessError::Operator {
            family: label.clone(),
            source: Box::new(source),
        })?
        .with_mutation(cfg.mutation);
    let mask = ops.tensor().safe_indices(cfg.depth_margin);
    let fam = Family {
        cfg,
        position,
        label,
        ops,
        cache,
        mask,
    };
    let mut kinds = cfg.suites.clone();
    kinds.sort();
    kinds.dedup();
    kinds.par_iter().map(|&k| fam.run(k)).collect()
}

/// Draw a rational `n/d` with `|n| ≤ bound`, `1 ≤ d ≤ bound`.
fn draw_rat(rng: &mut ChaCha8Rng, bound: u32) -> Rat {
    let b = i64::from(bound);
    rat(rng.gen_range(-b..=b), rng.gen_range(1..=b))
}

fn quarter(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Rat {
    rat(rng.gen_range(lo..=hi), 4)
}

fn sample_rng(seed: u64, family: usize, kind: SuiteKind, sample: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((family as u64) << 40) | ((kind as u64) << 32) | sample as u64);
    rng
}

type Reject = &'static str;

/// Degeneracies of the base point `(z, λ, p)`, including R-matrix poles at
/// all arguments `z_i - z_j + k p`, `k ∈ {-2, -1, 0, 1}`, reached by the
/// operators and their shifts.
fn base_rejection(ops: &Operators, pt: &EvalPoint) -> Option<Reject> {
    if pt.p.is_zero() {
        return Some("p = 0");
    }
    for (i, zi) in pt.z.iter().enumerate() {
        if pt.z[..i].contains(zi) {
            return Some("coincident z");
        }
    }
    for (a, la) in pt.lambda.iter().enumerate() {
        if la.is_zero() {
            return Some("λ = 0");
        }
        if pt.lambda[..a].contains(la) {
            return Some("coincident λ");
        }
    }
    let n = ops.n_factors();
    for i in 0..n {
        for j in i + 1..n {
            let r = ops.rmatrix(i, j);
            for k in -2..=1 {
                let x = &pt.z[i] - &pt.z[j] + &pt.p * Rat::from_integer(k.into());
                if !r.is_regular_at(&x) {
                    return Some("R-matrix pole");
                }
            }
        }
    }
    None
}

/// Draw a generic exact point for the operator suites: distinct `z`,
/// distinct nonzero `λ`, nonzero `p`, and no R-matrix poles at the needed
/// arguments. Returns the point and the rejection counts.
pub fn sample_generic_point(
    cfg: &SuiteConfig,
    ops: &Operators,
    rng: &mut ChaCha8Rng,
) -> Result<(EvalPoint, BTreeMap<&'static str, usize>), String> {
    let mut rejected = BTreeMap::new();
    for _ in 0..cfg.rejection_budget {
        let pt = draw_point(ops, rng, cfg.bound);
        match base_rejection(ops, &pt) {
            None => return Ok((pt, rejected)),
            Some(r) => *rejected.entry(r).or_insert(0) += 1,
        }
    }
    Err(dominant(&rejected))
}

fn draw_point(ops: &Operators, rng: &mut ChaCha8Rng, bound: u32) -> EvalPoint {
    let z = (0..ops.n_factors()).map(|_| draw_rat(rng, bound)).collect();
    let lambda = (0..ops.rank()).map(|_| draw_rat(rng, bound)).collect();
    let p = draw_rat(rng, bound);
    EvalPoint::new(z, lambda, p)
}

fn dominant(rejected: &BTreeMap<&'static str, usize>) -> String {
    rejected
        .iter()
        .max_by_key(|&(_, n)| *n)
        .map_or_else(|| "none".to_string(), |(r, n)| format!("{r} ({n} draws)"))
}

/// Outcome of one attempt at a sample.
enum Attempt {
    Done {
        point: Option<SamplePoint>,
        checks: BTreeMap<String, Residual>,
    },
    Reject(Reject),
}

fn exact_max(checks: &mut BTreeMap<String, Residual>, name: &str, value: Rat) {
    let e = checks.entry(name.to_string()).or_insert(Residual::Exact(Rat::zero()));
    if let Residual::Exact(r) = e {
        if value > *r {
            *r = value;
        }
    }
}

fn rmat_reject(e: &RMatrixError) -> Reject {
    match e {
        RMatrixError::Coincidence => "coincident spectral parameters",
        _ => "R-matrix pole",
    }
}

fn op_reject(e: &OperatorError) -> Reject {
    match e {
        OperatorError::RMatrix(r) => rmat_reject(r),
        OperatorError::ZeroLambda(_) => "λ = 0",
        OperatorError::CoincidentLambda(..) => "coincident λ",
        OperatorError::ZeroP => "p = 0",
        _ => "degenerate point",
    }
}

impl Family<'_> {
    fn mask(&self) -> Option<&[usize]> {
        self.mask.as_deref()
    }

    fn masked(&self, m: &RatMatrix) -> Rat {
        masked_max(m, self.mask())
    }

    fn run(&self, kind: SuiteKind) -> Result<SuiteReport, HarnessError> {
        let samples = if kind == SuiteKind::Bracket { 1 } else { self.cfg.samples };
        let fd_validation = matches!(kind, SuiteKind::Flat | SuiteKind::Compatibility).then(|| self.fd_check());
        let samples: Vec<SampleReport> = (0..samples)
            .into_par_iter()
            .map(|s| self.run_sample(kind, s))
            .collect::<Result<_, _>>()?;
        let pass = samples.iter().all(|s| s.pass) && fd_validation.as_ref().is_none_or(|f| f.pass);
        Ok(SuiteReport {
            family: self.label.clone(),
            kind,
            samples,
            fd_validation,
            pass,
        })
    }

    /// Finite-difference validation of the λ-derivative closed forms at a
    /// fixed float point.
    fn fd_check(&self) -> FdReport {
        let z: Vec<f64> = (0..self.ops.n_factors()).map(|i| 0.4 - 0.55 * i as f64).collect();
        let lambda: Vec<f64> = (0..self.ops.rank()).map(|c| 0.8 + 0.65 * c as f64).collect();
        validate_lambda_derivatives(&self.ops, &z, &lambda)
    }

    fn run_sample(&self, kind: SuiteKind, index: usize) -> Result<SampleReport, HarnessError> {
        let mut rng = sample_rng(self.cfg.seed, self.position, kind, index);
        let mut rejected: BTreeMap<&'static str, usize> = BTreeMap::new();
        for _ in 0..self.cfg.rejection_budget {
            match self.attempt(kind, &mut rng, index)? {
                Attempt::Reject(r) => *rejected.entry(r).or_insert(0) += 1,
                Attempt::Done { point, checks } => {
                    let (residual, pass) = self.verdict(&checks);
                    return Ok(SampleReport {
                        index,
                        point,
                        residual,
                        checks,
                        pass,
                        rejected,
                    });
                }
            }
        }
        Err(HarnessError::RejectionBudget {
            family: self.label.clone(),
            suite: kind.name(),
            sample: index,
            budget: self.cfg.rejection_budget,
            dominant: dominant(&rejected),
        })
    }

    fn verdict(&self, checks: &BTreeMap<String, Residual>) -> (Residual, bool) {
        let mut exact = Rat::zero();
        let mut float: Option<f64> = None;
        for r in checks.values() {
            match r {
                Residual::Exact(x) => {
                    if *x > exact {
                        exact = x.clone();
                    }
                }
                Residual::Float(x) => float = Some(float.map_or(*x, |f: f64| f.max(*x))),
            }
        }
        match float {
            Some(f) => (Residual::Float(f), f < self.cfg.flow.max_defect && exact.is_zero()),
            None => {
                let pass = exact.is_zero();
                (Residual::Exact(exact), pass)
            }
        }
    }

    fn attempt(&self, kind: SuiteKind, rng: &mut ChaCha8Rng, index: usize) -> Result<Attempt, HarnessError> {
        let eval_err = |source: OperatorError| HarnessError::Evaluation {
            family: self.label.clone(),
            suite: kind.name(),
            sample: index,
            source: Box::new(source),
        };
        let out = match kind {
            SuiteKind::Bracket => Ok(self.bracket()),
            SuiteKind::Yangian => self.yangian(rng).map_err(OperatorError::from),
            SuiteKind::Ybe => self.ybe(rng).map_err(OperatorError::from),
            SuiteKind::Intertwiner => self.intertwiner(rng).map_err(OperatorError::from),
            SuiteKind::Qkz | SuiteKind::Flat | SuiteKind::Compatibility | SuiteKind::Weyl => {
                self.operator_suite(kind, rng)
            }
            SuiteKind::Flow => return self.flow(rng, index),
        };
        match out {
            Ok(a) => Ok(a),
            Err(e) if e.is_resample() => Ok(Attempt::Reject(op_reject(&e))),
            Err(e) => Err(eval_err(e)),
        }
    }

    fn bracket(&self) -> Attempt {
        let mut checks = BTreeMap::new();
        for (i, f) in self.ops.tensor().factors().iter().enumerate() {
            let limit = f.truncation().map(|d| d.saturating_sub(self.cfg.depth_margin));
            exact_max(&mut checks, &format!("bracket[{}]", i + 1), check_bracket(&**f, limit));
        }
        Attempt::Done { point: None, checks }
    }

    fn yangian(&self, rng: &mut ChaCha8Rng) -> Result<Attempt, RMatrixError> {
        let z: Vec<Rat> = (0..self.ops.n_factors()).map(|_| draw_rat(rng, self.cfg.bound)).collect();
        let u = draw_rat(rng, self.cfg.bound);
        let v = draw_rat(rng, self.cfg.bound);
        if u == v {
            return Ok(Attempt::Reject("coincident spectral parameters"));
        }
        if z.contains(&u) || z.contains(&v) {
            return Ok(Attempt::Reject("spectral parameter at an evaluation point"));
        }
        let mut checks = BTreeMap::new();
        let r = check_yangian_relation(self.ops.tensor().factors(), &z, &u, &v, self.mask())?;
        exact_max(&mut checks, "yangian_relation", r);
        let point = SamplePoint {
            point: EvalPoint::new(z, Vec::new(), Rat::zero()),
            extra: BTreeMap::from([("u", u), ("v", v)]),
        };
        Ok(Attempt::Done {
            point: Some(point),
            checks,
        })
    }

    /// The first three factors, repeated cyclically when there are fewer.
    fn triple(&self) -> [Arc<ModuleRealization>; 3] {
        let f = self.ops.tensor().factors();
        [f[0].clone(), f[1 % f.len()].clone(), f[2 % f.len()].clone()]
    }

    fn ybe(&self, rng: &mut ChaCha8Rng) -> Result<Attempt, RMatrixError> {
        let x = draw_rat(rng, self.cfg.bound);
        let y = draw_rat(rng, self.cfg.bound);
        let triple = self.triple();
        let pairs = [(0, 1, &x - &y), (0, 2, x.clone()), (1, 2, y.clone())];
        for (i, j, arg) in &pairs {
            if !self.cache.get(&triple[*i], &triple[*j])?.is_regular_at(arg) {
                return Ok(Attempt::Reject("R-matrix pole"));
            }
        }
        let t = TensorModule::new(triple.to_vec())?;
        let mask = t.safe_indices(self.cfg.depth_margin);
        let mut checks = BTreeMap::new();
        exact_max(&mut checks, "ybe", check_ybe(self.cache, &triple, &x, &y, mask.as_deref())?);
        let point = SamplePoint {
            point: EvalPoint::new(Vec::new(), Vec::new(), Rat::zero()),
            extra: BTreeMap::from([("x", x), ("y", y)]),
        };
        Ok(Attempt::Done {
            point: Some(point),
            checks,
        })
    }

    fn intertwiner(&self, rng: &mut ChaCha8Rng) -> Result<Attempt, RMatrixError> {
        let factors = self.ops.tensor().factors();
        let x = draw_rat(rng, self.cfg.bound);
        let y = draw_rat(rng, self.cfg.bound);
        let u = draw_rat(rng, self.cfg.bound);
        if u == x || u == y {
            return Ok(Attempt::Reject("spectral parameter at an evaluation point"));
        }
        let mut checks = BTreeMap::new();
        let n = factors.len();
        let pairs: Vec<(usize, usize)> = if n == 1 {
            vec![(0, 0)]
        } else {
            (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect()
        };
        for (i, j) in pairs {
            let (v1, v2) = (&factors[i], &factors[j]);
            if !self.cache.get(v1, v2)?.is_regular_at(&(&x - &y)) {
                return Ok(Attempt::Reject("R-matrix pole"));
            }
            let pair = TensorModule::new(vec![v1.clone(), v2.clone()])?;
            let mask = pair.safe_indices(self.cfg.depth_margin);
            let r = check_intertwiner(self.cache, v1, v2, &x, &y, &u, mask.as_deref())?;
            exact_max(&mut checks, &format!("intertwiner({},{})", i + 1, j + 1), r);
        }
        let point = SamplePoint {
            point: EvalPoint::new(Vec::new(), Vec::new(), Rat::zero()),
            extra: BTreeMap::from([("u", u), ("x", x), ("y", y)]),
        };
        Ok(Attempt::Done {
            point: Some(point),
            checks,
        })
    }

    fn operator_suite(&self, kind: SuiteKind, rng: &mut ChaCha8Rng) -> Result<Attempt, OperatorError> {
        let ops = &self.ops;
        let pt = draw_point(ops, rng, self.cfg.bound);
        if let Some(r) = base_rejection(ops, &pt) {
            return Ok(Attempt::Reject(r));
        }
        let n = ops.n_factors();
        let rank = ops.rank();
        let mut checks = BTreeMap::new();
        match kind {
            SuiteKind::Qkz => {
                for l in 0..n {
                    for m in l + 1..n {
                        exact_max(&mut checks, "qkz_commutation", self.masked(&ops.qkz_commutation_residual(l, m, &pt)?));
                    }
                }
            }
            SuiteKind::Flat => {
                for a in 0..rank {
                    for b in a + 1..rank {
                        exact_max(&mut checks, "dyn_commutation", self.masked(&ops.dyn_commutation_residual(a, b, &pt)?));
                    }
                }
            }
            SuiteKind::Compatibility => {
                for a in 0..rank {
                    for i in 0..n {
                        exact_max(&mut checks, "compatibility", self.masked(&ops.compatibility_residual(i, a, &pt)?));
                    }
                    exact_max(&mut checks, "k1_commutator", self.masked(&ops.k1_commutator_residual(a, &pt)?));
                    exact_max(&mut checks, "k1_final_identity", self.masked(&ops.k1_final_identity_residual(a, &pt)?));
                    exact_max(&mut checks, "rewritten_l", self.masked(&ops.rewritten_l_residual(a, &pt)?));
                }
            }
            SuiteKind::Weyl => {
                for w in WeylElement::all(rank) {
                    for a in 0..rank {
                        exact_max(&mut checks, "weyl", self.masked(&ops.weyl_residual(&w, a, &pt)?));
                    }
                }
            }
            _ => unreachable!("not an operator suite"),
        }
        Ok(Attempt::Done {
            point: Some(SamplePoint {
                point: pt,
                extra: BTreeMap::new(),
            }),
            checks,
        })
    }

    /// Commuting square of `K_i` and the flow in `λ_a`, with `i = s mod n`
    /// and `a = s mod N`. Points lie on a quarter-integer grid so that the
    /// float and exact points coincide and the flow stays non-stiff.
    fn flow(&self, rng: &mut ChaCha8Rng, index: usize) -> Result<Attempt, HarnessError> {
        let ops = &self.ops;
        let (n, rank) = (ops.n_factors(), ops.rank());
        let (i, a) = (index % n, index % rank);
        let z: Vec<Rat> = (0..n).map(|_| quarter(rng, -8, 8)).collect();
        let lambda: Vec<Rat> = (0..rank).map(|_| quarter(rng, 1, 16)).collect();
        let p = quarter(rng, 2, 8);
        let step = quarter(rng, 1, 4);
        let up = rng.gen_bool(0.5);
        let pt = EvalPoint::new(z, lambda, p);
        if let Some(r) = base_rejection(ops, &pt) {
            return Ok(Attempt::Reject(r));
        }
        let target = if up { &pt.lambda[a] + &step } else { &pt.lambda[a] - &step };
        let (lo, hi) = if up { (&pt.lambda[a], &target) } else { (&target, &pt.lambda[a]) };
        let crosses = !lo.is_positive()
            || pt
                .lambda
                .iter()
                .enumerate()
                .any(|(b, l)| b != a && lo <= l && l <= hi);
        if crosses {
            return Ok(Attempt::Reject("flow segment crosses a pole"));
        }
        let u: Vec<f64> = (0..ops.dim())
            .map(|k| {
                let x: f64 = rng.gen_range(-1.0..1.0);
                if self.mask().is_none_or(|m| m.contains(&k)) {
                    x
                } else {
                    0.0
                }
            })
            .collect();
        let state = FlowState {
            u: DVector::from_vec(u),
            z: pt.z.iter().map(rat_to_f64).collect(),
            lambda: pt.lambda.iter().map(rat_to_f64).collect(),
            p: rat_to_f64(&pt.p),
        };
        let defect = match commuting_square_defect(ops, i, a, rat_to_f64(&target), &state, self.cfg.flow.tol, None) {
            Ok(d) => d,
            Err(FlowError::PoleCrossing { .. }) => return Ok(Attempt::Reject("flow segment crosses a pole")),
            Err(FlowError::Operator(e)) if e.is_resample() => return Ok(Attempt::Reject(op_reject(&e))),
            Err(source) => {
                return Err(HarnessError::Flow {
                    family: self.label.clone(),
                    suite: SuiteKind::Flow.name(),
                    sample: index,
                    source: Box::new(source),
                })
            }
        };
        let mut extra = BTreeMap::from([("lambda_target", target)]);
        extra.insert("i", Rat::from_integer((i as i64 + 1).into()));
        extra.insert("a", Rat::from_integer((a as i64 + 1).into()));
        let checks = BTreeMap::from([("commuting_square".to_string(), Residual::Float(defect))]);
        Ok(Attempt::Done {
            point: Some(SamplePoint { point: pt, extra }),
            checks,
        })
    }
}
