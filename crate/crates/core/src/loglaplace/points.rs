//! Weighted point sets. Quadrature rules and Monte Carlo samples share one
//! evaluation kernel: `Λ(ζ) = log Σ wⱼ e^{ζ·xⱼ} - log Σ wⱼ` with the tilted
//! mean and covariance as gradient and Hessian.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::Result;
use crate::measures::Polytope;
use crate::quadrature::GaussLegendre;

const CHUNK: usize = 16_384;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Order {
    Value,
    Gradient,
    Hessian,
}

/// Derivatives of `Λ` at one point with optional standard errors.
#[derive(Debug, Clone)]
pub(crate) struct Cumulants {
    pub value: f64,
    pub value_se: f64,
    pub grad: DVector<f64>,
    pub grad_se: Option<DVector<f64>>,
    pub hess: DMatrix<f64>,
    pub hess_se: Option<DMatrix<f64>>,
}

impl Cumulants {
    pub(crate) fn exact(value: f64, grad: DVector<f64>, hess: DMatrix<f64>) -> Self {
        Self {
            value,
            value_se: 0.0,
            grad,
            grad_se: None,
            hess,
            hess_se: None,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct PointSet {
    dim: usize,
    points: Vec<f64>,
    log_weights: Vec<f64>,
    log_mass: f64,
}

impl PointSet {
    pub(crate) fn new(dim: usize, points: Vec<f64>, log_weights: Vec<f64>) -> Self {
        debug_assert_eq!(points.len(), dim * log_weights.len());
        let mut set = Self {
            dim,
            points,
            log_weights,
            log_mass: 0.0,
        };
        set.renormalize();
        set
    }

    /// Recomputes the log mass through the same reduction `eval` uses, so that
    /// `Λ(0) = 0` holds exactly.
    fn renormalize(&mut self) {
        self.log_mass = 0.0;
        self.log_mass = self.eval(&vec![0.0; self.dim], Order::Value, false).value;
    }

    /// Equal weights, as for i.i.d. samples.
    pub(crate) fn uniform(dim: usize, points: Vec<f64>) -> Self {
        let n = points.len() / dim;
        Self::new(dim, points, vec![0.0; n])
    }

    pub(crate) fn len(&self) -> usize {
        self.log_weights.len()
    }

    fn exponent(&self, j: usize, zeta: &[f64]) -> f64 {
        let x = &self.points[j * self.dim..(j + 1) * self.dim];
        self.log_weights[j] + x.iter().zip(zeta).map(|(a, b)| a * b).sum::<f64>()
    }

    fn ranges(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        (0..n.div_ceil(CHUNK))
            .map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(n)))
            .collect()
    }

    /// Chunked map with a fixed chunk layout and an in-order reduction, so
    /// results do not depend on the thread count.
    fn chunked<T: Send>(&self, f: impl Fn(usize, usize) -> T + Sync) -> Vec<T> {
        let ranges = self.ranges();
        if ranges.len() <= 1 {
            ranges.into_iter().map(|(a, b)| f(a, b)).collect()
        } else {
            ranges.into_par_iter().map(|(a, b)| f(a, b)).collect()
        }
    }

    /// Cumulants of the point set tilted by `zeta`. Standard errors use the
    /// delta method for self-normalized weights and are only meaningful for
    /// i.i.d. samples.
    pub(crate) fn eval(&self, zeta: &[f64], order: Order, with_se: bool) -> Cumulants {
        let d = self.dim;
        let m = self
            .chunked(|a, b| (a..b).map(|j| self.exponent(j, zeta)).fold(f64::NEG_INFINITY, f64::max))
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        let first: Vec<(f64, Vec<f64>)> = self.chunked(|a, b| {
            let mut s = 0.0;
            let mut sx = vec![0.0; if order >= Order::Gradient { d } else { 0 }];
            for j in a..b {
                let w = (self.exponent(j, zeta) - m).exp();
                s += w;
                if !sx.is_empty() {
                    let x = &self.points[j * d..(j + 1) * d];
                    for (acc, xi) in sx.iter_mut().zip(x) {
                        *acc += w * xi;
                    }
                }
            }
            (s, sx)
        });
        let mut s = 0.0;
        let mut sx = vec![0.0; if order >= Order::Gradient { d } else { 0 }];
        for (ps, psx) in first {
            s += ps;
            for (acc, v) in sx.iter_mut().zip(psx) {
                *acc += v;
            }
        }
        let value = m + s.ln() - self.log_mass;
        let mean = DVector::from_iterator(sx.len(), sx.iter().map(|v| v / s));

        let need_second = order == Order::Hessian || with_se;
        let mut hess = DMatrix::zeros(0, 0);
        let mut value_se = 0.0;
        let mut grad_se = None;
        let mut hess_se = None;
        if need_second {
            let mean_ref = if mean.len() == d { mean.as_slice().to_vec() } else { vec![0.0; d] };
            let want_hess = order == Order::Hessian;
            // (Σp d dᵗ, Σp², Σp² d², Σp² d dᵗ, Σp² (d dᵗ)²) with d = x - mean
            type Acc = (Vec<f64>, f64, Vec<f64>, Vec<f64>, Vec<f64>);
            let parts: Vec<Acc> = self.chunked(|a, b| {
                let mut c = vec![0.0; if want_hess { d * d } else { 0 }];
                let mut p2 = 0.0;
                let mut g2 = vec![0.0; if with_se { d } else { 0 }];
                let mut h2 = vec![0.0; if with_se && want_hess { d * d } else { 0 }];
                let mut h4 = vec![0.0; if with_se && want_hess { d * d } else { 0 }];
                let mut dev = vec![0.0; d];
                for j in a..b {
                    let p = (self.exponent(j, zeta) - m).exp() / s;
                    let x = &self.points[j * d..(j + 1) * d];
                    for k in 0..d {
                        dev[k] = x[k] - mean_ref[k];
                    }
                    if want_hess {
                        for r in 0..d {
                            for q in 0..=r {
                                c[r * d + q] += p * dev[r] * dev[q];
                            }
                        }
                    }
                    if with_se {
                        let pp = p * p;
                        p2 += pp;
                        for k in 0..d {
                            g2[k] += pp * dev[k] * dev[k];
                        }
                        if want_hess {
                            for r in 0..d {
                                for q in 0..=r {
                                    let prod = dev[r] * dev[q];
                                    h2[r * d + q] += pp * prod;
                                    h4[r * d + q] += pp * prod * prod;
                                }
                            }
                        }
                    }
                }
                (c, p2, g2, h2, h4)
            });
            let mut acc: Acc = (
                vec![0.0; if want_hess { d * d } else { 0 }],
                0.0,
                vec![0.0; if with_se { d } else { 0 }],
                vec![0.0; if with_se && want_hess { d * d } else { 0 }],
                vec![0.0; if with_se && want_hess { d * d } else { 0 }],
            );
            for part in parts {
                for (a, b) in acc.0.iter_mut().zip(part.0) {
                    *a += b;
                }
                acc.1 += part.1;
                for (a, b) in acc.2.iter_mut().zip(part.2) {
                    *a += b;
                }
                for (a, b) in acc.3.iter_mut().zip(part.3) {
                    *a += b;
                }
                for (a, b) in acc.4.iter_mut().zip(part.4) {
                    *a += b;
                }
            }
            if want_hess {
                hess = DMatrix::from_fn(d, d, |r, q| {
                    let (r, q) = if q <= r { (r, q) } else { (q, r) };
                    acc.0[r * d + q]
                });
            }
            if with_se {
                let n = self.len() as f64;
                value_se = ((n * acc.1 - 1.0).max(0.0) / n).sqrt();
                if order >= Order::Gradient {
                    grad_se = Some(DVector::from_iterator(d, acc.2.iter().map(|v| v.sqrt())));
                }
                if want_hess {
                    hess_se = Some(DMatrix::from_fn(d, d, |r, q| {
                        let (r, q) = if q <= r { (r, q) } else { (q, r) };
                        let c = acc.0[r * d + q];
                        let k = r * d + q;
                        (acc.4[k] - 2.0 * c * acc.3[k] + c * c * acc.1).max(0.0).sqrt()
                    }));
                }
            }
        }
        Cumulants {
            value,
            value_se,
            grad: mean,
            grad_se,
            hess,
            hess_se,
        }
    }

    /// Applies `x ↦ a·x + b` to every point.
    pub(crate) fn map_points(&mut self, a: &DMatrix<f64>, b: &DVector<f64>) {
        let d = self.dim;
        let mut y = vec![0.0; d];
        for chunk in self.points.chunks_exact_mut(d) {
            for i in 0..d {
                y[i] = b[i] + (0..d).map(|j| a[(i, j)] * chunk[j]).sum::<f64>();
            }
            chunk.copy_from_slice(&y);
        }
    }

    /// Multiplies the weights by `e^{τ·x}`.
    pub(crate) fn absorb_tilt(&mut self, tau: &DVector<f64>) {
        for j in 0..self.len() {
            let x = &self.points[j * self.dim..(j + 1) * self.dim];
            self.log_weights[j] += x.iter().zip(tau.iter()).map(|(a, b)| a * b).sum::<f64>();
        }
        self.renormalize();
    }
}

/// A one-dimensional rule for one coordinate of a product measure, possibly
/// truncated to a finite window.
#[derive(Debug, Clone)]
pub(crate) struct AxisRule {
    set: PointSet,
    /// `log` of the bare Gauss–Legendre weights, to recover density values.
    log_gl: Vec<f64>,
    truncated: [bool; 2],
}

impl AxisRule {
    /// Rule on `[lo, hi]` for the log-density `log_density`, with flags for
    /// which ends cut off a tail.
    pub(crate) fn new(
        points: usize,
        lo: f64,
        hi: f64,
        log_density: impl Fn(f64) -> f64,
        truncated: [bool; 2],
    ) -> Self {
        let rule = GaussLegendre::cached(points);
        let mut xs = Vec::with_capacity(points);
        let mut lw = Vec::with_capacity(points);
        let mut gl = Vec::with_capacity(points);
        for (x, w) in rule.on_interval(lo, hi) {
            xs.push(x);
            lw.push(w.ln() + log_density(x));
            gl.push(w.ln());
        }
        Self {
            set: PointSet::new(1, xs, lw),
            log_gl: gl,
            truncated,
        }
    }

    pub(crate) fn absorb_tilt(&mut self, tau: f64) {
        self.set.absorb_tilt(&DVector::from_element(1, tau));
    }

    /// `(λ, λ', λ'', truncation estimate)` at `z`. The estimate is the tilted
    /// density at a cut end divided by the decay rate there, i.e. the mass of
    /// an exponential tail continuing the rule.
    pub(crate) fn eval(&self, z: f64, order: Order) -> (f64, f64, f64, f64) {
        let c = self.set.eval(&[z], order, false);
        let n = self.set.len();
        let log_f = |j: usize| self.set.exponent(j, &[z]) - self.log_gl[j] - self.set.log_mass - c.value;
        let mut tail: f64 = 0.0;
        for (side, &cut) in self.truncated.iter().enumerate() {
            if !cut {
                continue;
            }
            let (j, k) = if side == 0 { (0, 1) } else { (n - 1, n - 2) };
            let fj = log_f(j);
            let slope = ((fj - log_f(k)) / (self.set.points[j] - self.set.points[k])).abs();
            tail = tail.max((fj.exp() / slope.clamp(1e-12, 1.0)).min(1.0));
        }
        let g = if order >= Order::Gradient { c.grad[0] } else { 0.0 };
        let h = if order == Order::Hessian { c.hess[(0, 0)] } else { 0.0 };
        (c.value, g, h, tail)
    }
}

/// Nested Gauss–Legendre over a polytope: the first coordinate is split at
/// the vertex coordinates so every piece has a polynomial section measure,
/// and each node recurses into the section.
pub(crate) fn polytope_rule(poly: &Polytope, points: usize) -> Result<PointSet> {
    let dim = poly.dim();
    let rule = GaussLegendre::cached(points);
    let mut pts = Vec::new();
    let mut lw = Vec::new();
    let mut prefix = Vec::with_capacity(dim);
    fn rec(
        section: &Polytope,
        rule: &GaussLegendre,
        prefix: &mut Vec<f64>,
        log_w: f64,
        pts: &mut Vec<f64>,
        lw: &mut Vec<f64>,
    ) {
        let breaks = section.first_coordinate_breaks();
        if breaks.len() < 2 {
            return;
        }
        let span = breaks[breaks.len() - 1] - breaks[0];
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b - a <= 1e-14 * span.max(1.0) {
                continue;
            }
            for (x, w) in rule.on_interval(a, b) {
                prefix.push(x);
                if section.dim() == 1 {
                    pts.extend_from_slice(prefix);
                    lw.push(log_w + w.ln());
                } else {
                    rec(&section.section(&[x]), rule, prefix, log_w + w.ln(), pts, lw);
                }
                prefix.pop();
            }
        }
    }
    rec(poly, &rule, &mut prefix, 0.0, &mut pts, &mut lw);
    if lw.is_empty() {
        return Err(crate::error::Error::EmptyInterior);
    }
    Ok(PointSet::new(dim, pts, lw))
}

/// Radial reduction for the uniform ball: with `t = sin θ` the law of `⟨x, ξ̂⟩/r`
/// has density `∝ cosⁿθ dθ` on `[-π/2, π/2]`, so `Λ(ξ) = φ(r|ξ|)` for a
/// one-dimensional `φ`.
#[derive(Debug, Clone)]
pub(crate) struct RadialRule {
    dim: usize,
    radius: f64,
    profile: PointSet,
}

impl RadialRule {
    pub(crate) fn new(dim: usize, radius: f64, points: usize) -> Self {
        let rule = GaussLegendre::cached(points);
        let half_pi = std::f64::consts::FRAC_PI_2;
        let mut ts = Vec::with_capacity(points);
        let mut lw = Vec::with_capacity(points);
        for (theta, w) in rule.on_interval(-half_pi, half_pi) {
            ts.push(theta.sin());
            lw.push(w.ln() + dim as f64 * theta.cos().ln());
        }
        Self {
            dim,
            radius,
            profile: PointSet::new(1, ts, lw),
        }
    }

    pub(crate) fn eval(&self, zeta: &DVector<f64>, order: Order) -> Cumulants {
        let n = self.dim;
        let r = self.radius;
        let norm = zeta.norm();
        let s = r * norm;
        let c = self.profile.eval(&[s], Order::Hessian, false);
        let (phi, m1, var) = (c.value, c.grad[0], c.hess[(0, 0)]);
        if order == Order::Value {
            return Cumulants::exact(phi, DVector::zeros(0), DMatrix::zeros(0, 0));
        }
        let unit = if norm > 0.0 { zeta / norm } else { DVector::zeros(n) };
        let grad = &unit * (r * m1);
        if order == Order::Gradient {
            return Cumulants::exact(phi, grad, DMatrix::zeros(0, 0));
        }
        // m1/s is evaluated directly: m1 vanishes exactly at s = 0 by symmetry
        // of the nodes, so the ratio keeps full relative accuracy.
        let transverse = if s > 1e-8 { m1 / s } else { var };
        let outer = &unit * unit.transpose();
        let hess = (&outer * var + (DMatrix::identity(n, n) - &outer) * transverse) * (r * r);
        Cumulants::exact(phi, grad, hess)
    }
}
