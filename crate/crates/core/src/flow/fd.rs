//! Central finite-difference check of the closed-form λ-derivatives of `L_a`.

use serde::Serialize;

use crate::operators::Operators;

pub const FD_STEPS: [f64; 3] = [1e-4, 1e-5, 1e-6];

/// Agreement required at `h = 1e-5`.
const REL_TOL: f64 = 1e-6;
/// Errors below this are roundoff, and give no order information.
const ORDER_FLOOR: f64 = 1e-11;

#[derive(Debug, Clone, Serialize)]
pub struct FdCheck {
    /// 0-based operator index `a` and derivative index `c`.
    pub a: usize,
    pub c: usize,
    /// Relative max-abs error at each step of [`FD_STEPS`].
    pub errors: Vec<f64>,
    /// `log10(err(1e-4) / err(1e-5))`, if the error is above roundoff.
    pub order: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FdReport {
    pub checks: Vec<FdCheck>,
    pub pass: bool,
}

/// Compare `∂L_a/∂λ_c` against `(L_a(λ + h ε_c) - L_a(λ - h ε_c)) / 2h` for
/// all `a, c`.
pub fn validate_lambda_derivatives(ops: &Operators, z: &[f64], lambda: &[f64]) -> FdReport {
    let rank = ops.rank();
    let mut checks = Vec::new();
    for a in 0..rank {
        for c in 0..rank {
            let exact = ops.build_l_lambda_derivative_f64(c, a, lambda);
            let scale = exact.amax().max(1.0);
            let errors: Vec<f64> = FD_STEPS
                .iter()
                .map(|&h| {
                    let mut up = lambda.to_vec();
                    let mut down = lambda.to_vec();
                    up[c] += h;
                    down[c] -= h;
                    let fd = (ops.build_l_f64(a, z, &up) - ops.build_l_f64(a, z, &down)) / (2.0 * h);
                    (fd - &exact).amax() / scale
                })
                .collect();
            let order = (errors[0] > ORDER_FLOOR).then(|| (errors[0] / errors[1]).log10());
            let pass = errors[1] <= REL_TOL && order.is_none_or(|o| (1.5..=2.5).contains(&o));
            checks.push(FdCheck {
                a,
                c,
                errors,
                order,
                pass,
            });
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    FdReport { checks, pass }
}
