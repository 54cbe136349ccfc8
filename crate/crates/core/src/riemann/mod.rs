//! The Riemannian package `(ℝⁿ, ∇²Λ, Ψ, 0)` of a measure, its dual on the
//! interior `K` of the support hull, path lengths, distance bounds and
//! curvature probes.

mod curvature;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SpdMatrix;
use crate::loglaplace::{Backend, LaplaceEvaluator};
use crate::measures::{AffineMap, MeasureSpec};
use crate::quadrature::GaussLegendre;
use crate::rng::stream;

pub use curvature::{sectional_curvature, CURVATURE_STEP};

/// Central-difference step for `∇Ψ`.
pub const PSI_STEP: f64 = 1e-4;
/// Central-difference step for the argmax map of `Λ*`.
pub const DUAL_STEP: f64 = 1e-5;

/// Which of the two isomorphic packages is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `(ℝⁿ, ∇²Λ, Ψ, 0)` with `Ψ(ξ) = log det ∇²Λ(ξ)/det ∇²Λ(0)`.
    Primal,
    /// `(K, ∇²Λ*, Φ, b(μ))` with `Φ(x) = log det ∇²Λ*(b)/det ∇²Λ*(x)`.
    Dual,
}

/// A polyline of at least two nodes, consecutive nodes distinct.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    nodes: Vec<DVector<f64>>,
}

impl Curve {
    pub fn new(nodes: Vec<DVector<f64>>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidArgument("a curve needs at least two nodes".into()));
        }
        let n = nodes[0].len();
        for w in nodes.windows(2) {
            Error::check_dim(n, w[1].len())?;
            if w[0] == w[1] {
                return Err(Error::InvalidArgument("consecutive curve nodes coincide".into()));
            }
        }
        Ok(Self { nodes })
    }

    pub fn segment(a: &DVector<f64>, b: &DVector<f64>) -> Result<Self> {
        Self::new(vec![a.clone(), b.clone()])
    }

    pub fn nodes(&self) -> &[DVector<f64>] {
        &self.nodes
    }

    /// `self` followed by `other`; the junction node must match.
    pub fn concat(&self, other: &Curve) -> Result<Self> {
        if self.nodes.last() != other.nodes.first() {
            return Err(Error::InvalidArgument("curves do not meet".into()));
        }
        let mut nodes = self.nodes.clone();
        nodes.extend(other.nodes[1..].iter().cloned());
        Curve::new(nodes)
    }
}

#[derive(Debug, Clone)]
pub struct RiemannianPackage {
    evaluator: LaplaceEvaluator,
    base_point: DVector<f64>,
    side: Side,
    base_log_det: f64,
}

impl RiemannianPackage {
    /// Package with the default base point: `0` on the primal side, the
    /// barycenter `∇Λ(0)` on the dual side.
    pub fn new(evaluator: LaplaceEvaluator, side: Side) -> Result<Self> {
        let n = evaluator.dim();
        let base = match side {
            Side::Primal => DVector::zeros(n),
            Side::Dual => evaluator.grad(&DVector::zeros(n))?,
        };
        Self::with_base_point(evaluator, side, base)
    }

    pub fn primal(evaluator: LaplaceEvaluator) -> Result<Self> {
        Self::new(evaluator, Side::Primal)
    }

    pub fn dual(evaluator: LaplaceEvaluator) -> Result<Self> {
        Self::new(evaluator, Side::Dual)
    }

    pub fn with_base_point(evaluator: LaplaceEvaluator, side: Side, base_point: DVector<f64>) -> Result<Self> {
        Error::check_dim(evaluator.dim(), base_point.len())?;
        let mut pkg = Self {
            evaluator,
            base_point,
            side,
            base_log_det: 0.0,
        };
        pkg.base_log_det = pkg.metric_matrix(&pkg.base_point.clone())?.log_det();
        Ok(pkg)
    }

    pub fn evaluator(&self) -> &LaplaceEvaluator {
        &self.evaluator
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn base_point(&self) -> &DVector<f64> {
        &self.base_point
    }

    pub fn dim(&self) -> usize {
        self.evaluator.dim()
    }

    /// `∇²Λ*(x) = D[∇Λ*](x)` by central differences of the Legendre argmax.
    fn dual_hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = DVector::zeros(n);
            e[j] = DUAL_STEP;
            let plus = self.evaluator.legendre(&(x + &e))?.argmax;
            let minus = self.evaluator.legendre(&(x - &e))?.argmax;
            m.set_column(j, &((plus - minus) / (2.0 * DUAL_STEP)));
        }
        Ok((&m + m.transpose()) * 0.5)
    }

    /// The metric tensor at `p` (a tilt on the primal side, a point of `K`
    /// on the dual side).
    pub fn metric_matrix(&self, p: &DVector<f64>) -> Result<SpdMatrix> {
        match self.side {
            Side::Primal => self.evaluator.hess(p),
            Side::Dual => SpdMatrix::from_symmetric(self.dual_hessian(p)?),
        }
    }

    /// `g(p)(u, v)`.
    pub fn metric(&self, p: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        Error::check_dim(self.dim(), u.len())?;
        Error::check_dim(self.dim(), v.len())?;
        Ok(self.metric_matrix(p)?.bilinear(u, v))
    }

    /// `Ψ(ξ) = log det ∇²Λ(ξ) - log det ∇²Λ(base)` on the primal side and
    /// `Φ(x) = log det ∇²Λ*(base) - log det ∇²Λ*(x)` on the dual side, so
    /// that `Φ(∇Λ(ξ)) = Ψ(ξ)`.
    pub fn psi(&self, p: &DVector<f64>) -> Result<f64> {
        let ld = self.metric_matrix(p)?.log_det();
        Ok(match self.side {
            Side::Primal => ld - self.base_log_det,
            Side::Dual => self.base_log_det - ld,
        })
    }

    fn require_deterministic(&self, what: &str) -> Result<()> {
        if self.evaluator.is_deterministic() {
            Ok(())
        } else {
            Err(Error::BackendUnavailable(format!(
                "{what} differentiates numerically and needs a deterministic backend"
            )))
        }
    }

    fn in_domain(&self, p: &DVector<f64>) -> bool {
        match self.side {
            Side::Primal => self.evaluator.domain_contains(p),
            Side::Dual => true,
        }
    }

    /// `∇Ψ(p)` by central differences with step [`PSI_STEP`].
    pub fn grad_psi(&self, p: &DVector<f64>) -> Result<DVector<f64>> {
        self.require_deterministic("grad_psi")?;
        let n = self.dim();
        let mut g = DVector::zeros(n);
        for i in 0..n {
            let mut e = DVector::zeros(n);
            e[i] = PSI_STEP;
            let (a, b) = (p + &e, p - &e);
            if !self.in_domain(&a) || !self.in_domain(&b) {
                return Err(Error::OutsideDomain(
                    "finite-difference stencil crosses the domain boundary".into(),
                ));
            }
            g[i] = (self.psi(&a)? - self.psi(&b)?) / (2.0 * PSI_STEP);
        }
        Ok(g)
    }

    /// `|∇_g Ψ|_g = √(∇Ψᵗ G⁻¹ ∇Ψ)`.
    pub fn grad_psi_metric_norm(&self, p: &DVector<f64>) -> Result<f64> {
        let g = self.grad_psi(p)?;
        let m = self.metric_matrix(p)?;
        Ok(g.dot(&m.solve(&g)).max(0.0).sqrt())
    }

    /// Riemannian length of a polyline, 16-point Gauss–Legendre per segment.
    pub fn path_length(&self, curve: &Curve) -> Result<f64> {
        Error::check_dim(self.dim(), curve.nodes[0].len())?;
        let rule = GaussLegendre::cached(16);
        let mut total = 0.0;
        for w in curve.nodes.windows(2) {
            let d = &w[1] - &w[0];
            for (t, wt) in rule.on_interval(0.0, 1.0) {
                let p = &w[0] + &d * t;
                total += wt * self.metric_matrix(&p)?.bilinear(&d, &d).max(0.0).sqrt();
            }
        }
        Ok(total)
    }

    /// `√(Λ(2ξ-η) - Λ(η) - 2∇Λ(η)·(ξ-η))`, an upper bound for the distance
    /// from `η` to `ξ` (primal side).
    pub fn distance_upper_bound(&self, xi: &DVector<f64>, eta: &DVector<f64>) -> Result<f64> {
        if self.side == Side::Dual {
            return Err(Error::Unsupported("distance bound is stated on the primal side".into()));
        }
        let far = xi * 2.0 - eta;
        let a = self.evaluator.value(&far)?;
        let (b, g) = self.evaluator.value_and_grad(eta)?;
        Ok((a - b - 2.0 * g.dot(&(xi - eta))).max(0.0).sqrt())
    }

    /// Max-entry difference between `[∇²Λ(ξ)]⁻¹` and `∇²Λ*(∇Λ(ξ))`, the
    /// latter by differentiating the Legendre argmax map.
    pub fn dual_duality_check(&self, xi: &DVector<f64>) -> Result<f64> {
        self.require_deterministic("dual_duality_check")?;
        let inv = self.evaluator.hess(xi)?.inverse();
        let x = self.evaluator.grad(xi)?;
        let dual = self.dual_hessian(&x)?;
        Ok((inv - dual).amax())
    }

    /// Package of the tilted measure `μ_{ξ₁}` (primal side, base point 0).
    pub fn recenter(&self, xi1: &DVector<f64>) -> Result<RiemannianPackage> {
        if self.side == Side::Dual {
            return Err(Error::Unsupported("recentering acts on the primal side".into()));
        }
        RiemannianPackage::primal(self.evaluator.tilted(xi1)?)
    }

    /// Sectional curvature of the plane `span(u, v)` at `p`.
    pub fn curvature_probe(&self, p: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        self.require_deterministic("curvature_probe")?;
        if self.dim() < 2 {
            return Err(Error::InvalidArgument("curvature needs dim >= 2".into()));
        }
        let n = self.dim();
        let h = CURVATURE_STEP;
        for i in 0..n {
            for s in [-2.0, 2.0] {
                let mut q = p.clone();
                q[i] += s * h;
                if !self.in_domain(&q) {
                    return Err(Error::OutsideDomain(
                        "curvature stencil crosses the domain boundary".into(),
                    ));
                }
            }
        }
        sectional_curvature(|q| Ok(self.metric_matrix(q)?.into_matrix()), p, u, v)
    }

    /// Primal `Ψ(ξ)` against dual `Φ(∇Λ(ξ))`; returns `(Ψ, Φ)`.
    pub fn primal_dual_psi(&self, xi: &DVector<f64>) -> Result<(f64, f64)> {
        let primal = RiemannianPackage::primal(self.evaluator.clone())?;
        let dual = RiemannianPackage::dual(self.evaluator.clone())?;
        let x = self.evaluator.grad(xi)?;
        Ok((primal.psi(xi)?, dual.psi(&x)?))
    }
}

/// Residuals of the affine invariance of the package.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvarianceResidual {
    /// `max |g_ν(ξ)(u,v) - g_μ(Aᵗξ)(Aᵗu,Aᵗv)|`.
    pub metric: f64,
    /// `max |Ψ_ν(ξ) - Ψ_μ(Aᵗξ)|`.
    pub psi: f64,
    pub trials: usize,
}

impl InvarianceResidual {
    pub fn max(&self) -> f64 {
        self.metric.max(self.psi)
    }
}

fn best_backend(spec: &MeasureSpec) -> Backend {
    if LaplaceEvaluator::new(spec, Backend::ClosedForm).is_ok() {
        Backend::ClosedForm
    } else {
        Backend::quadrature()
    }
}

/// Compares the packages of `μ` and `ν = T_*μ` at `trials` random points.
/// Closed forms are used where available, quadrature otherwise.
pub fn affine_invariance_check(
    mu: &MeasureSpec,
    t: &AffineMap,
    trials: usize,
    seed: u64,
) -> Result<InvarianceResidual> {
    Error::check_dim(mu.dim(), t.dim())?;
    let nu = MeasureSpec::affine_image(mu, t.clone())?;
    let ev_mu = LaplaceEvaluator::new(mu, best_backend(mu))?;
    let ev_nu = LaplaceEvaluator::new(&nu, best_backend(&nu))?;
    let pm = RiemannianPackage::primal(ev_mu)?;
    let pn = RiemannianPackage::primal(ev_nu)?;
    let a = t.linear_part();
    let a_inv_t = a.transpose().try_inverse().ok_or_else(|| Error::Singular("affine map".into()))?;
    let mut rng = stream(seed);
    let n = mu.dim();
    let mut out = InvarianceResidual {
        metric: 0.0,
        psi: 0.0,
        trials,
    };
    for _ in 0..trials {
        let zeta = pm.evaluator.random_point(&mut rng, 1.0);
        let xi = &a_inv_t * &zeta;
        let u: DVector<f64> = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let v: DVector<f64> = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let lhs = pn.metric(&xi, &u, &v)?;
        let rhs = pm.metric(&zeta, &t.pullback(&u), &t.pullback(&v))?;
        out.metric = out.metric.max((lhs - rhs).abs());
        out.psi = out.psi.max((pn.psi(&xi)? - pm.psi(&zeta)?).abs());
    }
    Ok(out)
}
