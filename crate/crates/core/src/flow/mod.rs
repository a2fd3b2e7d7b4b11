//! Float transport along the dynamical flow `(p λ_a ∂_{λ_a} + L_a) U = 0`
//! and the difference steps `U(z + p ε_i) = K_i U`.

mod fd;

use std::io::Write;

use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

use crate::exact::{rat_from_f64, RatMatrix};
use crate::operators::{EvalPoint, OperatorError, Operators};

pub use fd::{validate_lambda_derivatives, FdCheck, FdReport, FD_STEPS};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FlowError {
    #[error("segment λ_{} from {from} to {to} crosses the pole at {pole}", .a + 1)]
    PoleCrossing { a: usize, from: f64, to: f64, pole: f64 },
    #[error("step size underflow at λ = {at}")]
    StepUnderflow { at: f64 },
    #[error("solution norm is not finite at λ = {at}")]
    Divergence { at: f64 },
    #[error("state value {0} cannot be converted to an exact rational")]
    NotFinite(f64),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub u: DVector<f64>,
    pub z: Vec<f64>,
    pub lambda: Vec<f64>,
    pub p: f64,
}

impl FlowState {
    pub fn norm(&self) -> f64 {
        self.u.norm()
    }
}

/// One trajectory log line.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRecord {
    pub leg: String,
    pub step: usize,
    pub z: Vec<f64>,
    pub lambda: Vec<f64>,
    pub norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub defect: Option<f64>,
}

#[derive(Debug, Default, Clone)]
pub struct TrajectoryLog {
    pub records: Vec<TrajectoryRecord>,
}

impl TrajectoryLog {
    fn push(&mut self, leg: &str, step: usize, s: &FlowState, defect: Option<f64>) {
        self.records.push(TrajectoryRecord {
            leg: leg.to_string(),
            step,
            z: s.z.clone(),
            lambda: s.lambda.clone(),
            norm: s.norm(),
            defect,
        });
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

const MAX_STEPS: usize = 1_000_000;

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn check_segment(a: usize, lambda: &[f64], target: f64) -> Result<(), FlowError> {
    let from = lambda[a];
    let (lo, hi) = if from <= target { (from, target) } else { (target, from) };
    let poles = std::iter::once(0.0).chain(
        lambda
            .iter()
            .enumerate()
            .filter(|&(b, _)| b != a)
            .map(|(_, &l)| l),
    );
    for pole in poles {
        if lo <= pole && pole <= hi {
            return Err(FlowError::PoleCrossing {
                a,
                from,
                to: target,
                pole,
            });
        }
    }
    Ok(())
}

/// Integrate `dU/dλ_a = -(p λ_a)^{-1} L_a(z; λ) U` from the state's `λ_a`
/// to `lambda_target` with local error tolerance `tol`.
pub fn propagate_flow(
    ops: &Operators,
    a: usize,
    lambda_target: f64,
    state: &FlowState,
    tol: f64,
    mut log: Option<&mut TrajectoryLog>,
) -> Result<FlowState, FlowError> {
    check_segment(a, &state.lambda, lambda_target)?;
    let mut s = state.clone();
    let t_end = lambda_target;
    let mut t = s.lambda[a];
    if t == t_end {
        return Ok(s);
    }
    let rhs = |t: f64, u: &DVector<f64>, lam: &mut Vec<f64>| -> DVector<f64> {
        lam[a] = t;
        let l = ops.build_l_f64(a, &state.z, lam);
        (l * u) * (-1.0 / (state.p * t))
    };
    let dir = (t_end - t).signum();
    let mut h = (t_end - t) / 100.0;
    let mut lam = s.lambda.clone();
    let mut k: Vec<DVector<f64>> = Vec::with_capacity(7);
    let mut steps = 0;
    if let Some(l) = log.as_deref_mut() {
        l.push("flow", 0, &s, None);
    }
    while (t_end - t) * dir > 0.0 {
        if steps >= MAX_STEPS {
            return Err(FlowError::StepUnderflow { at: t });
        }
        if (t + h - t_end) * dir > 0.0 {
            h = t_end - t;
        }
        k.clear();
        for stage in 0..7 {
            let mut y = s.u.clone();
            for (j, kj) in k.iter().enumerate() {
                if A[stage][j] != 0.0 {
                    y += kj * (h * A[stage][j]);
                }
            }
            k.push(rhs(t + C[stage] * h, &y, &mut lam));
        }
        let mut y5 = s.u.clone();
        let mut err = DVector::zeros(s.u.len());
        for (j, kj) in k.iter().enumerate() {
            y5 += kj * (h * B5[j]);
            err += kj * (h * (B5[j] - B4[j]));
        }
        let scale = tol * (1.0 + s.u.amax().max(y5.amax()));
        let e = err.amax() / scale;
        if !e.is_finite() || !y5.amax().is_finite() {
            return Err(FlowError::Divergence { at: t });
        }
        if e <= 1.0 {
            t += h;
            s.u = y5;
            steps += 1;
            s.lambda[a] = t;
            if let Some(l) = log.as_deref_mut() {
                l.push("flow", steps, &s, None);
            }
        }
        let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            return Err(FlowError::StepUnderflow { at: t });
        }
    }
    s.lambda[a] = t_end;
    Ok(s)
}

fn exact_point(state: &FlowState) -> Result<EvalPoint, FlowError> {
    let conv = |x: f64| rat_from_f64(x).ok_or(FlowError::NotFinite(x));
    Ok(EvalPoint::new(
        state.z.iter().map(|&x| conv(x)).collect::<Result<_, _>>()?,
        state.lambda.iter().map(|&x| conv(x)).collect::<Result<_, _>>()?,
        conv(state.p)?,
    ))
}

fn to_f64_matrix(m: &RatMatrix) -> nalgebra::DMatrix<f64> {
    let rows = m.to_f64_rows();
    nalgebra::DMatrix::from_fn(m.rows(), m.cols(), |i, j| rows[i][j])
}

/// `K_i(z; λ)` evaluated exactly at the state's point, converted to floats.
pub fn k_matrix_f64(ops: &Operators, i: usize, state: &FlowState) -> Result<nalgebra::DMatrix<f64>, FlowError> {
    let pt = exact_point(state)?;
    Ok(to_f64_matrix(&ops.build_k(i, &pt)?.matrix))
}

/// `U ← K_i(z; λ) U`, `z_i ← z_i + p`.
pub fn propagate_shift(ops: &Operators, i: usize, state: &FlowState) -> Result<FlowState, FlowError> {
    let k = k_matrix_f64(ops, i, state)?;
    let mut s = state.clone();
    s.u = k * &state.u;
    s.z[i] += state.p;
    Ok(s)
}

/// `|A - B| / |B|` for `A` = shift then flow and `B` = flow then shift.
pub fn commuting_square_defect(
    ops: &Operators,
    i: usize,
    a: usize,
    lambda_target: f64,
    state: &FlowState,
    tol: f64,
    mut log: Option<&mut TrajectoryLog>,
) -> Result<f64, FlowError> {
    let shifted = propagate_shift(ops, i, state)?;
    if let Some(l) = log.as_deref_mut() {
        l.push("shift", 0, &shifted, None);
    }
    let path_a = propagate_flow(ops, a, lambda_target, &shifted, tol, log.as_deref_mut())?;
    let flowed = propagate_flow(ops, a, lambda_target, state, tol, log.as_deref_mut())?;
    let path_b = propagate_shift(ops, i, &flowed)?;
    let defect = (&path_a.u - &path_b.u).norm() / path_b.u.norm();
    if let Some(l) = log {
        l.push("shift", 1, &path_b, Some(defect));
    }
    Ok(defect)
}
