//! Sectional curvature of a metric given pointwise, by finite differences.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const CURVATURE_STEP: f64 = 1e-3;

/// Sectional curvature of `span(u, v)` at `p` for the metric `g`, with
/// metric derivatives by central differences of step [`CURVATURE_STEP`].
///
/// Uses `R_abcd = ½(∂_b∂_c g_ad + ∂_a∂_d g_bc - ∂_a∂_c g_bd - ∂_b∂_d g_ac)
/// + g^pq (Γ_p,bc Γ_q,ad - Γ_p,bd Γ_q,ac)` with Christoffel symbols of the
/// first kind and `K = R(u,v,u,v) / (|u|²|v|² - ⟨u,v⟩²)`.
pub fn sectional_curvature(
    g: impl Fn(&DVector<f64>) -> Result<DMatrix<f64>>,
    p: &DVector<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<f64> {
    let n = p.len();
    Error::check_dim(n, u.len())?;
    Error::check_dim(n, v.len())?;
    let h = CURVATURE_STEP;
    let at = |shifts: &[(usize, f64)]| {
        let mut q = p.clone();
        for &(i, s) in shifts {
            q[i] += s * h;
        }
        g(&q)
    };
    let g0 = at(&[])?;
    let mut plus = Vec::with_capacity(n);
    let mut minus = Vec::with_capacity(n);
    for k in 0..n {
        plus.push(at(&[(k, 1.0)])?);
        minus.push(at(&[(k, -1.0)])?);
    }
    // d1[k] = ∂_k g
    let d1: Vec<DMatrix<f64>> = (0..n).map(|k| (&plus[k] - &minus[k]) / (2.0 * h)).collect();
    // d2[k][l] = ∂_k ∂_l g
    let mut d2 = vec![vec![DMatrix::zeros(n, n); n]; n];
    for k in 0..n {
        d2[k][k] = (&plus[k] - &g0 * 2.0 + &minus[k]) / (h * h);
        for l in 0..k {
            let pp = at(&[(k, 1.0), (l, 1.0)])?;
            let pm = at(&[(k, 1.0), (l, -1.0)])?;
            let mp = at(&[(k, -1.0), (l, 1.0)])?;
            let mm = at(&[(k, -1.0), (l, -1.0)])?;
            let m = (pp - pm - mp + mm) / (4.0 * h * h);
            d2[k][l] = m.clone();
            d2[l][k] = m;
        }
    }
    let ginv = g0
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("metric at the probe point".into()))?;
    // gamma[p][b][c] = Γ_p,bc = ½(∂_b g_pc + ∂_c g_pb - ∂_p g_bc)
    let gamma = |pp: usize, b: usize, c: usize| 0.5 * (d1[b][(pp, c)] + d1[c][(pp, b)] - d1[pp][(b, c)]);
    let riemann = |a: usize, b: usize, c: usize, d: usize| {
        let mut r = 0.5 * (d2[b][c][(a, d)] + d2[a][d][(b, c)] - d2[a][c][(b, d)] - d2[b][d][(a, c)]);
        for pp in 0..n {
            for q in 0..n {
                r += ginv[(pp, q)] * (gamma(pp, b, c) * gamma(q, a, d) - gamma(pp, b, d) * gamma(q, a, c));
            }
        }
        r
    };
    let mut num = 0.0;
    for a in 0..n {
        for b in 0..n {
            if u[a] == 0.0 && v[a] == 0.0 || u[b] == 0.0 && v[b] == 0.0 {
                continue;
            }
            for c in 0..n {
                for d in 0..n {
                    let w = u[a] * v[b] * u[c] * v[d];
                    if w != 0.0 {
                        num += riemann(a, b, c, d) * w;
                    }
                }
            }
        }
    }
    let guu = u.dot(&(&g0 * u));
    let gvv = v.dot(&(&g0 * v));
    let guv = u.dot(&(&g0 * v));
    let area = guu * gvv - guv * guv;
    if area <= 0.0 {
        return Err(Error::InvalidArgument("plane vectors are linearly dependent".into()));
    }
    Ok(num / area)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    /// Round sphere in stereographic coordinates: `4/(1+|x|²)² δ`.
    fn sphere(x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = x.len();
        Ok(DMatrix::identity(n, n) * (4.0 / (1.0 + x.norm_squared()).powi(2)))
    }

    /// Upper half plane: `δ / y²`.
    fn hyperbolic(x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(DMatrix::identity(2, 2) / (x[1] * x[1]))
    }

    #[test]
    fn constant_curvature_models() {
        let e1 = dvector![1.0, 0.0];
        let e2 = dvector![0.0, 1.0];
        for p in [dvector![0.0, 0.0], dvector![0.3, -0.5], dvector![1.2, 0.7]] {
            let k = sectional_curvature(sphere, &p, &e1, &e2).unwrap();
            assert!((k - 1.0).abs() < 1e-5, "{k}");
        }
        let k = sectional_curvature(sphere, &dvector![0.2, 0.1, -0.4], &dvector![1.0, 1.0, 0.0], &dvector![0.0, 1.0, 2.0]).unwrap();
        assert!((k - 1.0).abs() < 1e-5, "{k}");
        for p in [dvector![0.0, 1.0], dvector![2.0, 0.5]] {
            let k = sectional_curvature(hyperbolic, &p, &e1, &dvector![1.0, 3.0]).unwrap();
            assert!((k + 1.0).abs() < 1e-4, "{k}");
        }
    }

    #[test]
    fn flat_metric_in_curvilinear_coordinates() {
        // the Euclidean plane in polar coordinates (r, θ): diag(1, r²)
        let polar = |x: &DVector<f64>| Ok(DMatrix::from_diagonal(&dvector![1.0, x[0] * x[0]]));
        let k = sectional_curvature(polar, &dvector![1.3, 0.4], &dvector![1.0, 0.0], &dvector![0.0, 1.0]).unwrap();
        assert!(k.abs() < 1e-6, "{k}");
    }
}
