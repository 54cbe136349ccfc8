//! The measure zoo: log-concave measures with known normalizers, closed-form
//! moments and exact samplers, plus affine decorations.

mod geometry;
pub(crate) mod sampling;
mod serde_doc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{batch_means, Estimate};
use crate::linalg::SpdMatrix;
use crate::lp::{self, LpOutcome};

pub use geometry::{Body, Polytope};
pub use sampling::{truncated_exponential, SamplerConfig};

/// Largest admissible tilt coordinate for the exponential product; the
/// Laplace transform blows up at 1.
pub const EXP_TILT_CAP: f64 = 1.0 - 1e-6;

/// An invertible affine map `x ↦ linear·x + shift`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    linear: DMatrix<f64>,
    shift: DVector<f64>,
}

impl AffineMap {
    pub fn new(linear: DMatrix<f64>, shift: DVector<f64>) -> Result<Self> {
        if !linear.is_square() {
            return Err(Error::InvalidMeasure("affine linear part must be square".into()));
        }
        Error::check_dim(linear.nrows(), shift.len())?;
        if linear.iter().chain(shift.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidMeasure("affine map has non-finite entries".into()));
        }
        let det = linear.determinant();
        if det == 0.0 || !det.is_finite() || linear.clone().try_inverse().is_none() {
            return Err(Error::InvalidMeasure("affine map is not invertible".into()));
        }
        Ok(Self { linear, shift })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            linear: DMatrix::identity(n, n),
            shift: DVector::zeros(n),
        }
    }

    pub fn linear(linear: DMatrix<f64>) -> Result<Self> {
        let n = linear.nrows();
        Self::new(linear, DVector::zeros(n))
    }

    pub fn translation(shift: DVector<f64>) -> Self {
        Self {
            linear: DMatrix::identity(shift.len(), shift.len()),
            shift,
        }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn linear_part(&self) -> &DMatrix<f64> {
        &self.linear
    }

    pub fn shift(&self) -> &DVector<f64> {
        &self.shift
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.linear * x + &self.shift
    }

    pub fn det(&self) -> f64 {
        self.linear.determinant()
    }

    pub fn inverse(&self) -> AffineMap {
        let inv = self.linear.clone().try_inverse().expect("checked invertible");
        let shift = -(&inv * &self.shift);
        AffineMap { linear: inv, shift }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        AffineMap {
            linear: &self.linear * &inner.linear,
            shift: &self.linear * &inner.shift + &self.shift,
        }
    }

    /// Maps a covector through the transpose: `ξ ↦ Aᵗξ`.
    pub fn pullback(&self, xi: &DVector<f64>) -> DVector<f64> {
        self.linear.tr_mul(xi)
    }
}

/// One constraint `normal·x ≤ offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Kind {
    GaussianStd,
    UniformCube { half_width: f64 },
    UniformBall { radius: f64 },
    /// Uniform on `{x ≥ 0, Σxᵢ ≤ 1}`.
    UniformSimplex,
    /// Uniform on `{Σ|xᵢ| ≤ 1}`.
    UniformCrosspolytope,
    /// Coordinates i.i.d. with density `t ↦ e^{-(t+1)}` on `t ≥ -1`.
    ProductExponential,
    UniformPolytope { halfspaces: Vec<Halfspace> },
    /// Push-forward of `base` under `map`. `base` is never itself an affine
    /// image; nested decorations are composed at construction.
    AffineImage { base: Box<MeasureSpec>, map: AffineMap },
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::GaussianStd => "gaussian_std",
            Kind::UniformCube { .. } => "uniform_cube",
            Kind::UniformBall { .. } => "uniform_ball",
            Kind::UniformSimplex => "uniform_simplex",
            Kind::UniformCrosspolytope => "uniform_crosspolytope",
            Kind::ProductExponential => "product_exponential",
            Kind::UniformPolytope { .. } => "uniform_polytope",
            Kind::AffineImage { base, .. } => base.kind.name(),
        }
    }
}

/// Symbolic description of a log-concave probability measure on `ℝⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "serde_doc::SpecDoc", into = "serde_doc::SpecDoc")]
pub struct MeasureSpec {
    kind: Kind,
    dim: usize,
}

/// Value of `log_density`, with a flag for kinds whose normalizer is not
/// known in closed form (the value is then a log-indicator).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDensity {
    pub value: f64,
    pub normalized: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentSource {
    ClosedForm,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub barycenter: DVector<f64>,
    pub covariance: SpdMatrix,
    pub source: MomentSource,
    /// Per-entry standard errors (Monte Carlo only).
    pub barycenter_se: Option<DVector<f64>>,
    pub covariance_se: Option<DMatrix<f64>>,
    pub count: u64,
    pub seed: u64,
}

impl Moments {
    fn closed(barycenter: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        Ok(Self {
            barycenter,
            covariance: SpdMatrix::from_symmetric(covariance)?,
            source: MomentSource::ClosedForm,
            barycenter_se: None,
            covariance_se: None,
            count: 0,
            seed: 0,
        })
    }

    pub fn barycenter_estimate(&self, i: usize) -> Estimate {
        let v = self.barycenter[i];
        match &self.barycenter_se {
            Some(se) => Estimate::stochastic(v, se[i], self.count, self.seed),
            None => Estimate::exact(v),
        }
    }

    pub fn covariance_estimate(&self, i: usize, j: usize) -> Estimate {
        let v = self.covariance.as_matrix()[(i, j)];
        match &self.covariance_se {
            Some(se) => Estimate::stochastic(v, se[(i, j)], self.count, self.seed),
            None => Estimate::exact(v),
        }
    }

    /// Whether the moments are `(0, Id)`: within `tol` for closed forms,
    /// within 5 standard errors (plus rounding) for Monte Carlo.
    pub fn is_isotropic(&self, tol: f64) -> bool {
        let n = self.barycenter.len();
        let id = DMatrix::<f64>::identity(n, n);
        let cov = self.covariance.as_matrix();
        match (&self.barycenter_se, &self.covariance_se) {
            (Some(bse), Some(cse)) => {
                (0..n).all(|i| self.barycenter[i].abs() <= 5.0 * bse[i] + tol)
                    && (0..n).all(|i| {
                        (0..n).all(|j| (cov[(i, j)] - id[(i, j)]).abs() <= 5.0 * cse[(i, j)] + tol)
                    })
            }
            _ => self.barycenter.amax() <= tol && (cov - id).amax() <= tol,
        }
    }
}

/// Configuration of the Monte Carlo moment fallback.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentConfig {
    pub count: usize,
    pub seed: u64,
    pub workers: usize,
    pub sampler: SamplerConfig,
}

impl Default for MomentConfig {
    fn default() -> Self {
        Self {
            count: 200_000,
            seed: 0x5eed,
            workers: 4,
            sampler: SamplerConfig::default(),
        }
    }
}

impl MeasureSpec {
    pub fn gaussian(dim: usize) -> Result<Self> {
        Self::build(Kind::GaussianStd, dim)
    }

    pub fn cube(dim: usize, half_width: f64) -> Result<Self> {
        Self::build(Kind::UniformCube { half_width }, dim)
    }

    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        Self::build(Kind::UniformBall { radius }, dim)
    }

    pub fn simplex(dim: usize) -> Result<Self> {
        Self::build(Kind::UniformSimplex, dim)
    }

    pub fn crosspolytope(dim: usize) -> Result<Self> {
        Self::build(Kind::UniformCrosspolytope, dim)
    }

    pub fn product_exponential(dim: usize) -> Result<Self> {
        Self::build(Kind::ProductExponential, dim)
    }

    /// Uniform measure on `{x : normalᵢ·x ≤ offsetᵢ}`. Boundedness and a
    /// nonempty interior are checked by linear programming.
    pub fn polytope(dim: usize, halfspaces: Vec<Halfspace>) -> Result<Self> {
        Self::build(Kind::UniformPolytope { halfspaces }, dim)
    }

    /// Push-forward of `base` under `map`, composing with any existing
    /// decoration of `base`.
    pub fn affine_image(base: &MeasureSpec, map: AffineMap) -> Result<Self> {
        Error::check_dim(base.dim, map.dim())?;
        match &base.kind {
            Kind::AffineImage { base: inner, map: m } => Self::build(
                Kind::AffineImage {
                    base: inner.clone(),
                    map: map.compose(m),
                },
                base.dim,
            ),
            _ => Self::build(
                Kind::AffineImage {
                    base: Box::new(base.clone()),
                    map,
                },
                base.dim,
            ),
        }
    }

    fn build(kind: Kind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMeasure("dim must be at least 1".into()));
        }
        match &kind {
            Kind::UniformCube { half_width: w } if !(w.is_finite() && *w > 0.0) => {
                return Err(Error::InvalidMeasure(format!("half_width must be positive, got {w}")));
            }
            Kind::UniformBall { radius: r } if !(r.is_finite() && *r > 0.0) => {
                return Err(Error::InvalidMeasure(format!("radius must be positive, got {r}")));
            }
            Kind::UniformPolytope { halfspaces } => {
                for h in halfspaces {
                    Error::check_dim(dim, h.normal.len())?;
                    if h.normal.iter().any(|v| !v.is_finite()) || !h.offset.is_finite() {
                        return Err(Error::InvalidMeasure("non-finite halfspace".into()));
                    }
                }
                Polytope::from_halfspaces(dim, halfspaces).validate()?;
            }
            Kind::AffineImage { map, .. } => Error::check_dim(dim, map.dim())?,
            _ => {}
        }
        Ok(Self { kind, dim })
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    /// Same measure family in another dimension. Fails for polytopes and
    /// affine images, whose parameters are tied to the dimension.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        if dim == self.dim {
            return Ok(self.clone());
        }
        match &self.kind {
            Kind::UniformPolytope { .. } | Kind::AffineImage { .. } => Err(Error::InvalidArgument(
                format!("cannot change the dimension of a {} with explicit geometry", self.name()),
            )),
            kind => Self::build(kind.clone(), dim),
        }
    }

    /// The undecorated measure and the affine decoration, if any.
    pub fn core(&self) -> (&MeasureSpec, Option<&AffineMap>) {
        match &self.kind {
            Kind::AffineImage { base, map } => (base, Some(map)),
            _ => (self, None),
        }
    }

    pub fn is_compact(&self) -> bool {
        !matches!(
            self.core().0.kind,
            Kind::GaussianStd | Kind::ProductExponential
        )
    }

    /// Product measures (up to linear images, which are isometries of the
    /// induced Hessian metric).
    pub fn is_product(&self) -> bool {
        matches!(
            self.core().0.kind,
            Kind::GaussianStd | Kind::ProductExponential | Kind::UniformCube { .. }
        )
    }

    /// Centrally symmetric about the origin, as far as the kind tells.
    pub fn is_even(&self) -> bool {
        let (core, map) = self.core();
        let core_even = matches!(
            core.kind,
            Kind::GaussianStd
                | Kind::UniformCube { .. }
                | Kind::UniformBall { .. }
                | Kind::UniformCrosspolytope
        );
        core_even && map.is_none_or(|m| m.shift().iter().all(|&s| s == 0.0))
    }

    /// Whether `ξ` lies in the finiteness domain of `Λ`.
    pub fn laplace_domain_contains(&self, xi: &DVector<f64>) -> bool {
        match &self.kind {
            Kind::ProductExponential => xi.iter().all(|&v| v <= EXP_TILT_CAP),
            Kind::AffineImage { base, map } => base.laplace_domain_contains(&map.pullback(xi)),
            _ => xi.iter().all(|v| v.is_finite()),
        }
    }

    pub(crate) fn check_domain(&self, xi: &DVector<f64>) -> Result<()> {
        Error::check_dim(self.dim, xi.len())?;
        if self.laplace_domain_contains(xi) {
            Ok(())
        } else {
            Err(Error::OutsideDomain(format!(
                "{} requires Aᵗξ with every coordinate ≤ 1 - 1e-6",
                self.name()
            )))
        }
    }

    /// Convex body carrying the measure, for compactly supported kinds
    /// (before any affine decoration).
    pub fn body(&self) -> Option<Body> {
        match &self.kind {
            Kind::UniformCube { half_width } => Some(Body::Cube { half_width: *half_width }),
            Kind::UniformBall { radius } => Some(Body::Ball { radius: *radius }),
            Kind::UniformSimplex => Some(Body::Polytope(Polytope::simplex(self.dim))),
            Kind::UniformCrosspolytope => Some(Body::Crosspolytope),
            Kind::UniformPolytope { halfspaces } => {
                Some(Body::Polytope(Polytope::from_halfspaces(self.dim, halfspaces)))
            }
            _ => None,
        }
    }

    /// Log of the density at `x`; `-∞` outside the support.
    pub fn log_density(&self, x: &DVector<f64>) -> Result<LogDensity> {
        Error::check_dim(self.dim, x.len())?;
        let n = self.dim as f64;
        let normalized = |value| LogDensity { value, normalized: true };
        let inside = |ok: bool, v: f64| if ok { v } else { f64::NEG_INFINITY };
        Ok(match &self.kind {
            Kind::GaussianStd => {
                normalized(-0.5 * x.norm_squared() - 0.5 * n * (2.0 * std::f64::consts::PI).ln())
            }
            Kind::ProductExponential => normalized(inside(
                x.iter().all(|&t| t >= -1.0),
                -x.iter().map(|t| t + 1.0).sum::<f64>(),
            )),
            Kind::UniformCube { .. }
            | Kind::UniformBall { .. }
            | Kind::UniformSimplex
            | Kind::UniformCrosspolytope => {
                let body = self.body().expect("compact kind");
                normalized(inside(body.contains(x), -self.support_volume()?.ln()))
            }
            Kind::UniformPolytope { .. } => LogDensity {
                value: inside(self.body().expect("polytope").contains(x), 0.0),
                normalized: false,
            },
            Kind::AffineImage { base, map } => {
                let y = map.inverse().apply(x);
                let inner = base.log_density(&y)?;
                LogDensity {
                    value: inner.value - map.det().abs().ln(),
                    normalized: inner.normalized,
                }
            }
        })
    }

    /// Lebesgue volume of the support, where known in closed form.
    pub fn support_volume(&self) -> Result<f64> {
        let n = self.dim;
        Ok(match &self.kind {
            Kind::UniformCube { half_width } => (2.0 * half_width).powi(n as i32),
            Kind::UniformBall { radius } => unit_ball_volume(n) * radius.powi(n as i32),
            Kind::UniformSimplex => (-ln_factorial(n)).exp(),
            Kind::UniformCrosspolytope => (n as f64 * 2f64.ln() - ln_factorial(n)).exp(),
            Kind::AffineImage { base, map } => base.support_volume()? * map.det().abs(),
            Kind::GaussianStd | Kind::ProductExponential => {
                return Err(Error::Unsupported(format!(
                    "{} has unbounded support",
                    self.name()
                )))
            }
            Kind::UniformPolytope { .. } => {
                return Err(Error::Unsupported(
                    "uniform_polytope volume has no closed form".into(),
                ))
            }
        })
    }

    /// Barycenter and covariance; closed form for every kind except
    /// `uniform_polytope`, which falls back to Monte Carlo with the default
    /// [`MomentConfig`].
    pub fn moments(&self) -> Result<Moments> {
        self.moments_with(&MomentConfig::default())
    }

    pub fn moments_with(&self, cfg: &MomentConfig) -> Result<Moments> {
        let n = self.dim;
        let nf = n as f64;
        let id = DMatrix::<f64>::identity(n, n);
        match &self.kind {
            Kind::GaussianStd | Kind::ProductExponential => Moments::closed(DVector::zeros(n), id),
            Kind::UniformCube { half_width } => {
                Moments::closed(DVector::zeros(n), id * (half_width * half_width / 3.0))
            }
            Kind::UniformBall { radius } => {
                Moments::closed(DVector::zeros(n), id * (radius * radius / (nf + 2.0)))
            }
            Kind::UniformSimplex => {
                // first n coordinates of a flat Dirichlet with n+1 parts
                let a0 = nf + 1.0;
                let denom = a0 * a0 * (a0 + 1.0);
                let cov = DMatrix::from_fn(n, n, |i, j| if i == j { nf / denom } else { -1.0 / denom });
                Moments::closed(DVector::from_element(n, 1.0 / a0), cov)
            }
            Kind::UniformCrosspolytope => Moments::closed(
                DVector::zeros(n),
                id * (2.0 / ((nf + 1.0) * (nf + 2.0))),
            ),
            Kind::UniformPolytope { .. } => self.monte_carlo_moments(cfg),
            Kind::AffineImage { base, map } => {
                let inner = base.moments_with(cfg)?;
                let a = map.linear_part();
                let cov = a * inner.covariance.as_matrix() * a.transpose();
                let abs_a = a.abs();
                Ok(Moments {
                    barycenter: map.apply(&inner.barycenter),
                    covariance: SpdMatrix::from_symmetric(cov)?,
                    source: inner.source,
                    // crude linear propagation; polytope images only
                    barycenter_se: inner.barycenter_se.as_ref().map(|se| &abs_a * se),
                    covariance_se: inner
                        .covariance_se
                        .as_ref()
                        .map(|se| &abs_a * se * abs_a.transpose()),
                    count: inner.count,
                    seed: inner.seed,
                })
            }
        }
    }

    fn monte_carlo_moments(&self, cfg: &MomentConfig) -> Result<Moments> {
        let n = self.dim;
        let data = self.sample_parallel(cfg.seed, cfg.count, cfg.workers, &cfg.sampler)?;
        let rows = data.len() / n;
        let coord = |k: usize| -> Vec<f64> { (0..rows).map(|r| data[r * n + k]).collect() };
        let mut mean = DVector::zeros(n);
        let mut mean_se = DVector::zeros(n);
        for k in 0..n {
            let (m, se) = batch_means(&coord(k), 50);
            mean[k] = m;
            mean_se[k] = se;
        }
        let mut cov = DMatrix::zeros(n, n);
        let mut cov_se = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let prod: Vec<f64> = (0..rows)
                    .map(|r| (data[r * n + i] - mean[i]) * (data[r * n + j] - mean[j]))
                    .collect();
                let (m, se) = batch_means(&prod, 50);
                cov[(i, j)] = m;
                cov[(j, i)] = m;
                cov_se[(i, j)] = se;
                cov_se[(j, i)] = se;
            }
        }
        Ok(Moments {
            barycenter: mean,
            covariance: SpdMatrix::from_symmetric(cov)?,
            source: MomentSource::MonteCarlo,
            barycenter_se: Some(mean_se),
            covariance_se: Some(cov_se),
            count: rows as u64,
            seed: cfg.seed,
        })
    }

    /// The whitening map `T(x) = C^{-1/2}(x - b)` and the push-forward
    /// `T_*(self)`, which is isotropic.
    /// Fails with `NotIsotropic` unless the barycenter is 0 and the
    /// covariance is the identity within `tol` entrywise; Monte Carlo moments
    /// get five standard errors of extra slack.
    pub fn check_isotropic(&self, tol: f64) -> Result<()> {
        let m = self.moments()?;
        let n = self.dim;
        let cov = m.covariance.as_matrix();
        let slack = |se: Option<f64>| tol + 5.0 * se.unwrap_or(0.0);
        for i in 0..n {
            let b = m.barycenter[i].abs();
            if b > slack(m.barycenter_se.as_ref().map(|s| s[i])) {
                return Err(Error::NotIsotropic(format!(
                    "{}: barycenter coordinate {i} is {b:.3e}",
                    self.name()
                )));
            }
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                let off = (cov[(i, j)] - target).abs();
                if off > slack(m.covariance_se.as_ref().map(|s| s[(i, j)])) {
                    return Err(Error::NotIsotropic(format!(
                        "{}: covariance entry ({i},{j}) is off by {off:.3e}",
                        self.name()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn isotropize(&self) -> Result<(AffineMap, MeasureSpec)> {
        self.isotropize_with(&MomentConfig::default())
    }

    pub fn isotropize_with(&self, cfg: &MomentConfig) -> Result<(AffineMap, MeasureSpec)> {
        let m = self.moments_with(cfg)?;
        if let Some(se) = &m.covariance_se {
            let c = m.covariance.as_matrix();
            let n = self.dim;
            let worst = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| se[(i, j)] / (c[(i, i)] * c[(j, j)]).sqrt())
                .fold(0.0, f64::max);
            if worst >= 1e-2 {
                return Err(Error::InvalidArgument(format!(
                    "covariance relative standard error {worst:.3e} is not below 1e-2"
                )));
            }
        }
        let cond = m.covariance.condition_number();
        if !(cond <= 1e12) {
            return Err(Error::Singular(format!("covariance condition number {cond:e}")));
        }
        let w = m.covariance.inv_sqrt();
        let shift = -(&w * &m.barycenter);
        let map = AffineMap::new(w, shift)?;
        let image = MeasureSpec::affine_image(self, map.clone())?;
        Ok((map, image))
    }
}

/// `Vol(B₂ⁿ) = π^{n/2} / Γ(n/2 + 1)`.
pub fn unit_ball_volume(n: usize) -> f64 {
    (0.5 * n as f64 * std::f64::consts::PI.ln() - ln_gamma_half_integer(n + 2)).exp()
}

/// `ln Γ(m/2)` for a positive integer `m`.
pub(crate) fn ln_gamma_half_integer(m: usize) -> f64 {
    assert!(m >= 1);
    // Γ(1) = 1, Γ(1/2) = √π, Γ(x + 1) = x Γ(x)
    let (mut acc, mut x) = if m % 2 == 0 {
        (0.0, 1.0)
    } else {
        (0.5 * std::f64::consts::PI.ln(), 0.5)
    };
    let target = m as f64 / 2.0;
    while x < target {
        acc += x.ln();
        x += 1.0;
    }
    acc
}

pub(crate) fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Chebyshev center and inradius of `{x : a x ≤ b}` by linear programming.
pub(crate) fn chebyshev_center(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let (m, n) = a.shape();
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut r: Vec<f64> = a.row(i).iter().copied().collect();
            r.push(a.row(i).norm());
            r
        })
        .collect();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    // r is a free variable in `lp::maximize`; keep it nonnegative explicitly
    let mut rows = rows;
    let mut rhs: Vec<f64> = b.iter().copied().collect();
    let mut nonneg = vec![0.0; n + 1];
    nonneg[n] = -1.0;
    rows.push(nonneg);
    rhs.push(0.0);
    match lp::maximize(&c, &rows, &rhs) {
        LpOutcome::Optimal { x, .. } => Ok((DVector::from_column_slice(&x[..n]), x[n])),
        LpOutcome::Unbounded => Err(Error::UnboundedPolytope),
        LpOutcome::Infeasible => Err(Error::EmptyInterior),
    }
}

#[cfg(test)]
mod tests;
