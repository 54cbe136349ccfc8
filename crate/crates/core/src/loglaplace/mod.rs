//! The logarithmic Laplace transform `Λ(ξ) = log ∫ e^{ξ·x} dμ(x)`, its
//! gradient (barycenter of the tilt) and Hessian (covariance of the tilt),
//! the Legendre transform `Λ*`, and tilted measures.

mod closed;
mod legendre;
mod points;
mod tilt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::Estimate;
use crate::linalg::SpdMatrix;
use crate::measures::{AffineMap, Kind, MeasureSpec, SamplerConfig, EXP_TILT_CAP};

use closed::ClosedKind;
use points::{AxisRule, Cumulants, Order, PointSet, RadialRule};

pub use legendre::LegendrePoint;
pub use tilt::{tilt, TiltedMeasure};

/// Largest admissible truncation-error estimate for the quadrature backend.
pub const TRUNCATION_TOL: f64 = 1e-8;

/// Default Monte Carlo worker count.
pub const DEFAULT_WORKERS: usize = 4;

/// How `Λ` is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BackendDoc", into = "BackendDoc")]
pub enum Backend {
    ClosedForm,
    /// Gauss–Legendre rules. `None` fields take dimension-dependent defaults.
    Quadrature {
        points_per_axis: Option<usize>,
        truncation_radius: Option<f64>,
    },
    /// Importance reweighting of `count` draws from the sampler.
    MonteCarlo {
        count: usize,
        seed: u64,
        workers: Option<usize>,
    },
}

/// JSON form: `{"type": "closed_form" | "quadrature" | "monte_carlo", ..}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BackendDoc {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    points_per_axis: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    truncation_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    workers: Option<usize>,
}

impl TryFrom<BackendDoc> for Backend {
    type Error = String;

    fn try_from(d: BackendDoc) -> std::result::Result<Self, String> {
        let quad = d.points_per_axis.is_some() || d.truncation_radius.is_some();
        let mc = d.count.is_some() || d.seed.is_some() || d.workers.is_some();
        let stray = |ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(format!("fields given that do not apply to backend `{}`", d.kind))
            }
        };
        match d.kind.as_str() {
            "closed_form" => {
                stray(!quad && !mc)?;
                Ok(Backend::ClosedForm)
            }
            "quadrature" => {
                stray(!mc)?;
                Ok(Backend::Quadrature {
                    points_per_axis: d.points_per_axis,
                    truncation_radius: d.truncation_radius,
                })
            }
            "monte_carlo" => {
                stray(!quad)?;
                Ok(Backend::MonteCarlo {
                    count: d.count.ok_or("monte_carlo backend requires `count`")?,
                    seed: d.seed.ok_or("monte_carlo backend requires `seed`")?,
                    workers: d.workers,
                })
            }
            other => Err(format!("unknown backend type `{other}`")),
        }
    }
}

impl From<Backend> for BackendDoc {
    fn from(b: Backend) -> Self {
        let mut d = BackendDoc {
            kind: b.name().to_string(),
            points_per_axis: None,
            truncation_radius: None,
            count: None,
            seed: None,
            workers: None,
        };
        match b {
            Backend::ClosedForm => {}
            Backend::Quadrature {
                points_per_axis,
                truncation_radius,
            } => {
                d.points_per_axis = points_per_axis;
                d.truncation_radius = truncation_radius;
            }
            Backend::MonteCarlo { count, seed, workers } => {
                d.count = Some(count);
                d.seed = Some(seed);
                d.workers = workers;
            }
        }
        d
    }
}

impl Backend {
    pub fn quadrature() -> Self {
        Backend::Quadrature {
            points_per_axis: None,
            truncation_radius: None,
        }
    }

    pub fn monte_carlo(count: usize, seed: u64) -> Self {
        Backend::MonteCarlo {
            count,
            seed,
            workers: None,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        !matches!(self, Backend::MonteCarlo { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Backend::ClosedForm => "closed_form",
            Backend::Quadrature { .. } => "quadrature",
            Backend::MonteCarlo { .. } => "monte_carlo",
        }
    }
}

/// Default Gauss–Legendre nodes per axis by dimension.
pub fn default_points_per_axis(dim: usize) -> usize {
    match dim {
        1 => 200,
        2 => 120,
        _ => 48,
    }
}

/// `Λ`, `∇Λ` and `∇²Λ` at one point. Standard errors are present for the
/// Monte Carlo backend only.
#[derive(Debug, Clone)]
pub struct LaplaceJet {
    pub value: Estimate,
    pub grad: DVector<f64>,
    pub grad_se: Option<DVector<f64>>,
    pub hess: DMatrix<f64>,
    pub hess_se: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone)]
enum Model {
    Closed(ClosedKind),
    Axes(Vec<AxisRule>),
    Points(PointSet),
    Radial(RadialRule),
}

/// An immutable evaluator of `Λ` for one (possibly tilted) measure.
#[derive(Debug, Clone)]
pub struct LaplaceEvaluator {
    measure: TiltedMeasure,
    backend: Backend,
    model: Model,
    /// Affine decoration applied on top of `model` (not used for point sets,
    /// whose points are already mapped).
    map: Option<AffineMap>,
    /// Core-coordinate tilt `τ` and `Λ₀(τ)` for models that evaluate the
    /// untilted core (shift formula `Λ(ζ) = Λ₀(ζ+τ) - Λ₀(τ)`).
    shift: Option<(DVector<f64>, f64)>,
    dim: usize,
}

fn unavailable(backend: &str, what: &str) -> Error {
    Error::BackendUnavailable(format!("{backend} backend is not available for {what}"))
}

impl LaplaceEvaluator {
    pub fn new(spec: &MeasureSpec, backend: Backend) -> Result<Self> {
        Self::for_tilted(&TiltedMeasure::try_from(spec.clone())?, backend)
    }

    /// Evaluator of `Λ_{μ_ξ}` for a tilted measure. The closed form covers
    /// tilts of the Gaussian and the exponential product (which stay in the
    /// zoo) and of the cube (by the shift formula).
    pub fn for_tilted(measure: &TiltedMeasure, backend: Backend) -> Result<Self> {
        let dim = measure.dim();
        let (core, outer) = measure.base().core();
        let tau = measure.core_tilt();
        let tilted = !measure.is_untilted();
        let mut map = outer.cloned();
        let mut shift = None;
        let model = match &backend {
            Backend::ClosedForm => {
                if tilted {
                    if let Some(spec) = measure.as_spec() {
                        let mut ev = Self::new(&spec, backend.clone())?;
                        ev.measure = measure.clone();
                        return Ok(ev);
                    }
                }
                let kind = match core.kind() {
                    Kind::GaussianStd => ClosedKind::Gaussian,
                    Kind::ProductExponential => ClosedKind::ProductExponential,
                    Kind::UniformCube { half_width } => ClosedKind::Cube {
                        half_width: *half_width,
                    },
                    other => return Err(unavailable("closed_form", other.name())),
                };
                if tilted {
                    let v = (0..dim).map(|i| kind.coordinate(tau[i]).0).sum();
                    shift = Some((tau.clone(), v));
                }
                Model::Closed(kind)
            }
            Backend::Quadrature {
                points_per_axis,
                truncation_radius,
            } => {
                if dim > 3 {
                    return Err(Error::BackendUnavailable(format!(
                        "quadrature backend requires dim <= 3, got {dim}"
                    )));
                }
                let ppa = points_per_axis.unwrap_or_else(|| default_points_per_axis(dim));
                if ppa < 2 {
                    return Err(Error::InvalidArgument("points_per_axis must be at least 2".into()));
                }
                if let Some(r) = truncation_radius {
                    if !(r.is_finite() && *r > 0.0) {
                        return Err(Error::InvalidArgument("truncation_radius must be positive".into()));
                    }
                }
                match core.kind() {
                    Kind::GaussianStd => {
                        let r = truncation_radius.unwrap_or(12.0);
                        Model::Axes(
                            (0..dim)
                                .map(|i| {
                                    let mut a = AxisRule::new(ppa, -r, r, |x| -0.5 * x * x, [true, true]);
                                    a.absorb_tilt(tau[i]);
                                    a
                                })
                                .collect(),
                        )
                    }
                    Kind::ProductExponential => {
                        let r = truncation_radius.unwrap_or(60.0);
                        Model::Axes(
                            (0..dim)
                                .map(|i| {
                                    let mut a = AxisRule::new(ppa, -1.0, r - 1.0, |x| -(x + 1.0), [false, true]);
                                    a.absorb_tilt(tau[i]);
                                    a
                                })
                                .collect(),
                        )
                    }
                    Kind::UniformCube { half_width: w } => Model::Axes(
                        (0..dim)
                            .map(|i| {
                                let mut a = AxisRule::new(ppa, -w, *w, |_| 0.0, [false, false]);
                                a.absorb_tilt(tau[i]);
                                a
                            })
                            .collect(),
                    ),
                    Kind::UniformBall { radius } => {
                        let rule = RadialRule::new(dim, *radius, ppa.max(256));
                        if tilted {
                            let v = rule.eval(&tau, Order::Value).value;
                            shift = Some((tau.clone(), v));
                        }
                        Model::Radial(rule)
                    }
                    _ => {
                        let poly = core
                            .body()
                            .and_then(|b| b.to_polytope(dim))
                            .ok_or_else(|| unavailable("quadrature", core.name()))?;
                        let mut set = points::polytope_rule(&poly, ppa)?;
                        if tilted {
                            set.absorb_tilt(&tau);
                        }
                        if let Some(m) = map.take() {
                            set.map_points(m.linear_part(), m.shift());
                        }
                        Model::Points(set)
                    }
                }
            }
            Backend::MonteCarlo { count, seed, workers } => {
                if *count < 2 {
                    return Err(Error::InvalidArgument("monte_carlo count must be at least 2".into()));
                }
                let xi = measure.tilt();
                let flat = crate::measures::sampling::sample_parallel_flat(
                    measure.base(),
                    tilted.then_some(&xi),
                    *seed,
                    *count,
                    workers.unwrap_or(DEFAULT_WORKERS).max(1),
                    &SamplerConfig::default(),
                )?;
                map = None;
                Model::Points(PointSet::uniform(dim, flat))
            }
        };
        Ok(Self {
            measure: measure.clone(),
            backend,
            model,
            map,
            shift,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    /// The untilted base measure.
    pub fn measure(&self) -> &MeasureSpec {
        self.measure.base()
    }

    pub fn tilted_measure(&self) -> &TiltedMeasure {
        &self.measure
    }

    pub fn is_deterministic(&self) -> bool {
        self.backend.is_deterministic()
    }

    fn mc(&self) -> Option<(u64, u64)> {
        match self.backend {
            Backend::MonteCarlo { count, seed, .. } => Some((count as u64, seed)),
            _ => None,
        }
    }

    /// Whether `Λ(ξ)` is finite for the evaluated (tilted) measure.
    pub fn domain_contains(&self, xi: &DVector<f64>) -> bool {
        xi.len() == self.dim && self.measure.base().laplace_domain_contains(&(self.measure.tilt() + xi))
    }

    fn check(&self, xi: &DVector<f64>) -> Result<()> {
        Error::check_dim(self.dim, xi.len())?;
        if xi.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("tilt has non-finite entries".into()));
        }
        if !self.domain_contains(xi) {
            let cap = if matches!(self.measure.base().core().0.kind(), Kind::ProductExponential) {
                format!(" (exponential coordinates are capped at {EXP_TILT_CAP})")
            } else {
                String::new()
            };
            return Err(Error::OutsideDomain(format!(
                "Λ is infinite at ξ = {:?}{cap}",
                xi.as_slice()
            )));
        }
        Ok(())
    }

    fn cumulants(&self, xi: &DVector<f64>, order: Order) -> Result<Cumulants> {
        self.check(xi)?;
        let zeta = match &self.map {
            Some(m) => m.pullback(xi),
            None => xi.clone(),
        };
        let n = self.dim;
        let mut c = match &self.model {
            Model::Points(set) => set.eval(zeta.as_slice(), order, self.mc().is_some()),
            Model::Closed(kind) => {
                let z = match &self.shift {
                    Some((tau, _)) => &zeta + tau,
                    None => zeta.clone(),
                };
                let mut v = 0.0;
                let mut g = DVector::zeros(n);
                let mut h = DMatrix::zeros(n, n);
                for i in 0..n {
                    let (a, b, d) = kind.coordinate(z[i]);
                    v += a;
                    g[i] = b;
                    h[(i, i)] = d;
                }
                if let Some((_, v0)) = &self.shift {
                    v -= v0;
                }
                Cumulants::exact(v, g, h)
            }
            Model::Axes(rules) => {
                let mut v = 0.0;
                let mut g = DVector::zeros(n);
                let mut h = DMatrix::zeros(n, n);
                let mut tail: f64 = 0.0;
                for (i, rule) in rules.iter().enumerate() {
                    let (a, b, d, t) = rule.eval(zeta[i], order);
                    v += a;
                    g[i] = b;
                    h[(i, i)] = d;
                    tail = tail.max(t);
                }
                if tail > TRUNCATION_TOL {
                    return Err(Error::QuadratureTruncation {
                        estimate: tail,
                        tolerance: TRUNCATION_TOL,
                    });
                }
                Cumulants::exact(v, g, h)
            }
            Model::Radial(rule) => {
                let z = match &self.shift {
                    Some((tau, _)) => &zeta + tau,
                    None => zeta.clone(),
                };
                let mut c = rule.eval(&z, order);
                if let Some((_, v0)) = &self.shift {
                    c.value -= v0;
                }
                c
            }
        };
        if let Some(m) = &self.map {
            let a = m.linear_part();
            let b = m.shift();
            c.value += xi.dot(b);
            if order >= Order::Gradient {
                c.grad = a * &c.grad + b;
            }
            if order == Order::Hessian {
                c.hess = a * &c.hess * a.transpose();
            }
        }
        if order == Order::Hessian {
            c.hess = (&c.hess + c.hess.transpose()) * 0.5;
        }
        Ok(c)
    }

    fn estimate(&self, value: f64, se: f64) -> Estimate {
        match self.mc() {
            Some((count, seed)) => Estimate::stochastic(value, se, count, seed),
            None => Estimate::exact(value),
        }
    }

    /// `Λ(ξ)`.
    pub fn log_laplace(&self, xi: &DVector<f64>) -> Result<Estimate> {
        let c = self.cumulants(xi, Order::Value)?;
        Ok(self.estimate(c.value, c.value_se))
    }

    /// `Λ(ξ)` as a plain number.
    pub fn value(&self, xi: &DVector<f64>) -> Result<f64> {
        Ok(self.cumulants(xi, Order::Value)?.value)
    }

    /// `∇Λ(ξ)`, the barycenter of the tilt by `ξ`.
    pub fn grad(&self, xi: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.cumulants(xi, Order::Gradient)?.grad)
    }

    /// `∇²Λ(ξ)`, the covariance of the tilt by `ξ`.
    pub fn hess(&self, xi: &DVector<f64>) -> Result<SpdMatrix> {
        let c = self.cumulants(xi, Order::Hessian)?;
        SpdMatrix::from_symmetric(c.hess).map_err(|e| match (e, self.mc()) {
            (Error::NotPositiveDefinite(_), Some((count, _))) => Error::NotPositiveDefinite(format!(
                "Monte Carlo Hessian is not positive definite with {count} samples; increase the count"
            )),
            (e, _) => e,
        })
    }

    /// Value, gradient and Hessian in one pass, with standard errors for the
    /// Monte Carlo backend.
    pub fn jet(&self, xi: &DVector<f64>) -> Result<LaplaceJet> {
        let c = self.cumulants(xi, Order::Hessian)?;
        Ok(LaplaceJet {
            value: self.estimate(c.value, c.value_se),
            grad: c.grad,
            grad_se: c.grad_se,
            hess: c.hess,
            hess_se: c.hess_se,
        })
    }

    /// `(Λ, ∇Λ)` without the Hessian.
    pub fn value_and_grad(&self, xi: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let c = self.cumulants(xi, Order::Gradient)?;
        Ok((c.value, c.grad))
    }

    /// Evaluator of the tilted measure `μ_{ξ₁}` with the same backend
    /// settings (a Monte Carlo backend draws from the tilted sampler).
    pub fn tilted(&self, xi1: &DVector<f64>) -> Result<LaplaceEvaluator> {
        self.check(xi1)?;
        LaplaceEvaluator::for_tilted(&self.measure.tilted(xi1)?, self.backend.clone())
    }

    /// `Λ*(x) = sup_ξ [ξ·x - Λ(ξ)]` by damped Newton from `ξ = 0`.
    pub fn legendre(&self, x: &DVector<f64>) -> Result<LegendrePoint> {
        legendre::legendre(self, x)
    }

    /// A random point of the finiteness domain: uniform in a box of half
    /// width `radius` in the core coordinates, with exponential coordinates
    /// kept at most 1/2.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R, radius: f64) -> DVector<f64> {
        let (core, outer) = self.measure.base().core();
        let tau = self.measure.core_tilt();
        let exp = matches!(core.kind(), Kind::ProductExponential);
        let zeta = DVector::from_fn(self.dim, |i, _| {
            let hi = if exp { radius.min(0.5 - tau[i]) } else { radius };
            let lo = -radius;
            lo + (hi - lo).max(0.0) * rng.random::<f64>()
        });
        match outer {
            Some(m) => {
                let inv_t = m.linear_part().transpose().try_inverse().expect("invertible");
                inv_t * zeta
            }
            None => zeta,
        }
    }
}

/// `Λ(ξ)` (free-function form).
pub fn log_laplace(ev: &LaplaceEvaluator, xi: &DVector<f64>) -> Result<Estimate> {
    ev.log_laplace(xi)
}

/// `∇Λ(ξ)`.
pub fn grad_log_laplace(ev: &LaplaceEvaluator, xi: &DVector<f64>) -> Result<DVector<f64>> {
    ev.grad(xi)
}

/// `∇²Λ(ξ)`.
pub fn hess_log_laplace(ev: &LaplaceEvaluator, xi: &DVector<f64>) -> Result<SpdMatrix> {
    ev.hess(xi)
}

/// `(Λ*(x), argmax)`.
pub fn legendre(ev: &LaplaceEvaluator, x: &DVector<f64>) -> Result<LegendrePoint> {
    ev.legendre(x)
}

/// Residual of the tilt shift identity `Λ_{μ_{ξ₁}}(ξ) = Λ_μ(ξ+ξ₁) - Λ_μ(ξ₁)`,
/// the left side from the tilted measure's own evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftResidual {
    pub residual: f64,
    /// Combined standard error of both sides (zero when deterministic).
    pub std_error: f64,
}

impl ShiftResidual {
    /// `< 1e-8` for deterministic backends, `< 5` standard errors otherwise.
    pub fn passes(&self) -> bool {
        if self.std_error == 0.0 {
            self.residual < 1e-8
        } else {
            self.residual < 5.0 * self.std_error
        }
    }
}

pub fn tilt_shift_identity_check(
    ev: &LaplaceEvaluator,
    xi1: &DVector<f64>,
    xi: &DVector<f64>,
) -> Result<ShiftResidual> {
    let lhs = ev.tilted(xi1)?.log_laplace(xi)?;
    let a = ev.log_laplace(&(xi + xi1))?;
    let b = ev.log_laplace(xi1)?;
    Ok(ShiftResidual {
        residual: (lhs.value - (a.value - b.value)).abs(),
        std_error: (lhs.std_error.powi(2) + a.std_error.powi(2) + b.std_error.powi(2)).sqrt(),
    })
}

/// `max |∇²Λ_{μ_{ξ₁}}(ξ) - ∇²Λ_μ(ξ+ξ₁)|`, the left side from the tilted
/// measure's own evaluator.
pub fn tilt_hessian_shift_check(
    ev: &LaplaceEvaluator,
    xi1: &DVector<f64>,
    xi: &DVector<f64>,
) -> Result<f64> {
    let lhs = ev.tilted(xi1)?.hess(xi)?;
    let rhs = ev.hess(&(xi + xi1))?;
    Ok(lhs.max_abs_diff(rhs.as_matrix()))
}
