use nalgebra::DVector;
use serde::Serialize;

use super::LaplaceEvaluator;
use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 200;
pub const DIVERGENCE_RADIUS: f64 = 1e6;
pub const GRADIENT_TOL: f64 = 1e-10;

/// `Λ*(x)` and its maximizer `ξ` (so that `∇Λ(ξ) = x`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LegendrePoint {
    pub value: f64,
    pub argmax: DVector<f64>,
    pub iterations: usize,
    /// `|∇Λ(argmax) - x|` at exit.
    pub residual: f64,
}

/// Damped Newton on `ξ ↦ ξ·x - Λ(ξ)` from `ξ = 0`: full steps are halved
/// until the objective does not decrease and the iterate stays in the
/// finiteness domain.
pub(crate) fn legendre(ev: &LaplaceEvaluator, x: &DVector<f64>) -> Result<LegendrePoint> {
    Error::check_dim(ev.dim(), x.len())?;
    let tol = GRADIENT_TOL * x.norm().max(1.0);
    let mut xi = DVector::zeros(x.len());
    let mut f = -ev.value(&xi)?;
    let mut polished = 0;
    for it in 0..MAX_ITERATIONS {
        let (_, g) = ev.value_and_grad(&xi)?;
        let r = x - &g;
        let res = r.norm();
        if res < tol {
            polished += 1;
            if polished > 2 || res == 0.0 {
                return Ok(LegendrePoint {
                    value: f,
                    argmax: xi,
                    iterations: it,
                    residual: res,
                });
            }
        }
        let h = ev.hess(&xi)?;
        let step = h.solve(&r);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = &xi + &step * t;
            if ev.domain_contains(&cand) {
                // an overshoot may leave the window a truncated quadrature
                // resolves; treat it like leaving the domain
                let (fc, gc) = match ev.value_and_grad(&cand) {
                    Ok((v, g)) => (cand.dot(x) - v, g),
                    Err(Error::QuadratureTruncation { .. }) => {
                        t *= 0.5;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                // near the optimum the objective gain drops below rounding,
                // so a decreasing residual decides instead
                let res_c = (x - &gc).norm();
                let gain = fc - f;
                let slack = 1e-12 * f.abs().max(1.0);
                if gain > slack || (gain >= -slack && res_c < res) {
                    xi = cand;
                    f = fc;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if xi.norm() > DIVERGENCE_RADIUS {
            return Err(Error::Divergence(DIVERGENCE_RADIUS));
        }
        if !accepted {
            if res < tol {
                return Ok(LegendrePoint {
                    value: f,
                    argmax: xi,
                    iterations: it,
                    residual: res,
                });
            }
            return Err(Error::NoConvergence(it + 1));
        }
    }
    Err(Error::NoConvergence(MAX_ITERATIONS))
}
