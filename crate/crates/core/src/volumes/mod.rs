//! The volume identity `∫ det ∇²Λ = Vol(K)`, the volume radius, and the
//! sublevel sets `K_t = {ξ : Λ(2ξ) ≤ t²}`.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::Estimate;
use crate::loglaplace::{Backend, LaplaceEvaluator};
use crate::measures::{unit_ball_volume, AffineMap, Body, MeasureSpec, Polytope};
use crate::quadrature::GaussLegendre;
use crate::riemann::RiemannianPackage;
use crate::rng;

/// Default truncation radius is this over the inradius of the support.
pub const TRUNCATION_SCALE: f64 = 50.0;
/// Grid nodes with `max |ξ_i| ≥ SHELL_FRACTION · R` form the boundary shell.
pub const SHELL_FRACTION: f64 = 0.9;
/// Rejection sampling below this acceptance rate is refused.
pub const MIN_ACCEPTANCE: f64 = 1e-4;
/// Largest dimension for the Gromov grid.
pub const MAX_GRID_DIM: usize = 3;
/// Largest dimension for rejection sampling of `K_t`.
pub const MAX_REJECTION_DIM: usize = 8;

/// Nodes per axis when none is given.
pub fn default_grid(dim: usize) -> usize {
    match dim {
        1 => 4000,
        2 => 200,
        _ => 48,
    }
}

/// `Vol_n` of the support in closed form.
pub fn volume_exact(spec: &MeasureSpec) -> Result<f64> {
    spec.support_volume()
}

/// `(V / Vol(B₂ⁿ))^{1/n}`.
pub fn vrad(volume: f64, dim: usize) -> Result<f64> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    if !(volume > 0.0 && volume.is_finite()) {
        return Err(Error::InvalidArgument(format!("volume must be positive, got {volume}")));
    }
    Ok((volume / unit_ball_volume(dim)).powf(1.0 / dim as f64))
}

fn transform_polytope(poly: &Polytope, map: &AffineMap) -> Result<Polytope> {
    let inv = map
        .linear_part()
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("affine map".into()))?;
    let a = poly.matrix() * inv;
    let b = poly.offsets() + &a * map.shift();
    Ok(Polytope::new(a, b))
}

/// Radius of the largest Euclidean ball inside the support.
pub fn inradius(spec: &MeasureSpec) -> Result<f64> {
    let (core, map) = spec.core();
    let body = core
        .body()
        .ok_or_else(|| Error::Unsupported(format!("{} has unbounded support", spec.name())))?;
    if let Body::Ball { radius } = body {
        let s = match map {
            Some(m) => m.linear_part().singular_values().min(),
            None => 1.0,
        };
        return Ok(radius * s);
    }
    let poly = body.to_polytope(spec.dim()).expect("polytope body");
    let poly = match map {
        Some(m) => transform_polytope(&poly, m)?,
        None => poly,
    };
    Ok(poly.chebyshev_center()?.1)
}

/// `TRUNCATION_SCALE / inradius`.
pub fn default_truncation_radius(spec: &MeasureSpec) -> Result<f64> {
    Ok(TRUNCATION_SCALE / inradius(spec)?)
}

/// Result of the grid integral of `det ∇²Λ`.
#[derive(Debug, Clone, Serialize)]
pub struct VolumeReport {
    pub measure: String,
    pub dim: usize,
    pub backend: Backend,
    pub exact_volume: Option<f64>,
    /// Extrapolated to infinite radius; `std_error` is zero (deterministic).
    pub gromov_estimate: Estimate,
    /// Integral over `[-R, R]ⁿ`.
    pub raw_integral: f64,
    /// Integral over `[-R/2, R/2]ⁿ`.
    pub half_radius_integral: f64,
    pub truncation_radius: f64,
    pub grid: usize,
    /// Mean of `det ∇²Λ` over the shell nodes.
    pub shell_mean: f64,
    /// Share of the raw integral carried by the shell.
    pub shell_mass: f64,
}

impl VolumeReport {
    pub fn relative_error(&self) -> Option<f64> {
        self.exact_volume
            .map(|v| (self.gromov_estimate.value - v).abs() / v)
    }
}

/// One axis of the grid: Gauss–Legendre in `s` under `ξ = c sinh s`, which
/// packs nodes near the origin and thins them where `det ∇²Λ` decays.
fn graded_axis(radius: f64, scale: f64, grid: usize) -> Vec<(f64, f64)> {
    let s_max = (radius / scale).asinh();
    GaussLegendre::cached(grid)
        .on_interval(-s_max, s_max)
        .map(|(s, w)| (scale * s.sinh(), w * scale * s.cosh()))
        .collect()
}

#[derive(Debug, Default, Clone, Copy)]
struct GridSums {
    integral: f64,
    shell_integral: f64,
    shell_sum: f64,
    shell_count: usize,
}

fn grid_integral(ev: &LaplaceEvaluator, axis: &[(f64, f64)], radius: f64) -> Result<GridSums> {
    let n = ev.dim();
    let m = axis.len();
    let inner = m.pow(n as u32 - 1);
    let rows: Vec<GridSums> = (0..m)
        .into_par_iter()
        .map(|i0| {
            let mut sums = GridSums::default();
            let mut xi = DVector::zeros(n);
            for flat in 0..inner {
                let mut rest = flat;
                let mut weight = axis[i0].1;
                xi[0] = axis[i0].0;
                for k in 1..n {
                    let (x, w) = axis[rest % m];
                    rest /= m;
                    xi[k] = x;
                    weight *= w;
                }
                let det = ev.hess(&xi)?.det();
                sums.integral += weight * det;
                if xi.amax() >= SHELL_FRACTION * radius {
                    sums.shell_integral += weight * det;
                    sums.shell_sum += det;
                    sums.shell_count += 1;
                }
            }
            Ok(sums)
        })
        .collect::<Result<_>>()?;
    Ok(rows.iter().fold(GridSums::default(), |acc, r| GridSums {
        integral: acc.integral + r.integral,
        shell_integral: acc.shell_integral + r.shell_integral,
        shell_sum: acc.shell_sum + r.shell_sum,
        shell_count: acc.shell_count + r.shell_count,
    }))
}

/// `∫ det ∇²Λ(ξ) dξ` on a tensor grid over `[-R, R]ⁿ`, for a compactly
/// supported measure and a deterministic backend.
///
/// The integrand decays like `|ξ|^{-(n+1)}`, so the truncated integral
/// misses `O(1/R)`. The estimate is the Richardson combination
/// `2 I(R) - I(R/2)`; both integrals are reported alongside it.
pub fn gromov_volume(ev: &LaplaceEvaluator, truncation_radius: f64, grid: usize) -> Result<VolumeReport> {
    let spec = ev.measure();
    let n = ev.dim();
    if n > MAX_GRID_DIM {
        return Err(Error::Unsupported(format!(
            "volume grid supports dim <= {MAX_GRID_DIM}, got {n}"
        )));
    }
    if !spec.is_compact() {
        return Err(Error::Unsupported(format!(
            "{} has unbounded support; the volume identity needs a compact body",
            spec.name()
        )));
    }
    if !ev.is_deterministic() {
        return Err(Error::BackendUnavailable(
            "the volume grid needs a deterministic backend".into(),
        ));
    }
    if !(truncation_radius > 0.0 && truncation_radius.is_finite()) || grid < 2 {
        return Err(Error::InvalidArgument(format!(
            "need a positive radius and at least 2 nodes, got R = {truncation_radius}, grid = {grid}"
        )));
    }
    let scale = 1.0 / inradius(spec)?;
    let full = grid_integral(ev, &graded_axis(truncation_radius, scale, grid), truncation_radius)?;
    let half_r = 0.5 * truncation_radius;
    let half = grid_integral(ev, &graded_axis(half_r, scale, grid), half_r)?;
    let value = 2.0 * full.integral - half.integral;
    Ok(VolumeReport {
        measure: spec.name().to_string(),
        dim: n,
        backend: ev.backend().clone(),
        exact_volume: volume_exact(spec).ok(),
        gromov_estimate: Estimate::exact(value),
        raw_integral: full.integral,
        half_radius_integral: half.integral,
        truncation_radius,
        grid,
        shell_mean: if full.shell_count > 0 {
            full.shell_sum / full.shell_count as f64
        } else {
            0.0
        },
        shell_mass: full.shell_integral / full.integral,
    })
}

/// Whether `Λ(2ξ) ≤ t²`. A tilt outside the finiteness domain is outside.
pub fn kt_contains(ev: &LaplaceEvaluator, xi: &DVector<f64>, t: f64) -> Result<bool> {
    Error::check_dim(ev.dim(), xi.len())?;
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("t must be nonnegative, got {t}")));
    }
    let far = xi * 2.0;
    if !ev.domain_contains(&far) {
        return Ok(false);
    }
    match ev.value(&far) {
        Ok(v) => Ok(v <= t * t),
        Err(Error::OutsideDomain(_) | Error::Divergence(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Largest `s` with `s θ ∈ K_t` (`K_t` is convex and contains 0).
pub fn kt_radial_extent(ev: &LaplaceEvaluator, theta: &DVector<f64>, t: f64) -> Result<f64> {
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut doublings = 0;
    while kt_contains(ev, &(theta * hi), t)? {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::Divergence(hi));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if kt_contains(ev, &(theta * mid), t)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

fn unit_directions(n: usize, random: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut out = Vec::with_capacity(2 * n + random);
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut e = DVector::zeros(n);
            e[i] = s;
            out.push(e);
        }
    }
    let mut rng = rng::stream(seed);
    while out.len() < 2 * n + random {
        let v: DVector<f64> = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let norm = v.norm();
        if norm > 1e-12 {
            out.push(v / norm);
        }
    }
    out
}

/// Half width of a cube around `K_t`: 1.5 times the largest coordinate
/// extent over the coordinate directions and 64 random ones.
pub fn kt_bounding_radius(ev: &LaplaceEvaluator, t: f64, seed: u64) -> Result<f64> {
    let mut reach: f64 = 0.0;
    for theta in unit_directions(ev.dim(), 64, seed) {
        reach = reach.max(kt_radial_extent(ev, &theta, t)? * theta.amax());
    }
    Ok(1.5 * reach)
}

/// Rejection-sampling estimate of `Vol(K_t)`.
#[derive(Debug, Clone, Serialize)]
pub struct KtVolumeReport {
    pub measure: String,
    pub dim: usize,
    pub t: f64,
    /// The volume lemma argues with integer `t`; real `t` is evaluated as is.
    pub t_is_integer: bool,
    pub bounding_radius: f64,
    pub accepted: u64,
    pub acceptance_rate: f64,
    pub volume: Estimate,
    /// `Vol(K_t)^{1/n}`.
    pub volume_root: f64,
    /// `Vol(K_t)^{1/n} / (t/√n)`.
    pub ratio_to_t_over_sqrt_n: f64,
    /// Some accepted point came within 2% of the cube boundary.
    pub touches_box: bool,
    pub workers: usize,
}

/// `Vol(K_t)` by uniform sampling in `[-R, R]ⁿ`, one random substream per
/// worker. With no `bounding_radius`, [`kt_bounding_radius`] picks one.
pub fn kt_volume(
    ev: &LaplaceEvaluator,
    t: f64,
    count: usize,
    bounding_radius: Option<f64>,
    seed: u64,
    workers: usize,
) -> Result<KtVolumeReport> {
    let n = ev.dim();
    if n > MAX_REJECTION_DIM {
        return Err(Error::Unsupported(format!(
            "rejection sampling supports dim <= {MAX_REJECTION_DIM}, got {n}"
        )));
    }
    if count == 0 {
        return Err(Error::InvalidArgument("count must be positive".into()));
    }
    let radius = match bounding_radius {
        Some(r) => r,
        None => kt_bounding_radius(ev, t, seed)?,
    };
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!("bounding radius must be positive, got {radius}")));
    }
    let workers = workers.max(1);
    let edge = 0.98 * radius;
    let parts: Vec<(u64, bool)> = rng::split_counts(count, workers)
        .into_par_iter()
        .enumerate()
        .map(|(w, m)| {
            let mut rng = rng::substream(seed, w as u64);
            let mut hits = 0u64;
            let mut touch = false;
            for _ in 0..m {
                let xi = DVector::from_fn(n, |_, _| rng.random_range(-radius..radius));
                if kt_contains(ev, &xi, t)? {
                    hits += 1;
                    touch |= xi.amax() >= edge;
                }
            }
            Ok((hits, touch))
        })
        .collect::<Result<_>>()?;
    let accepted: u64 = parts.iter().map(|p| p.0).sum();
    let touches_box = parts.iter().any(|p| p.1);
    let p = accepted as f64 / count as f64;
    if p < MIN_ACCEPTANCE {
        return Err(Error::LowAcceptance(p));
    }
    let box_volume = (2.0 * radius).powi(n as i32);
    let volume = Estimate::stochastic(
        box_volume * p,
        box_volume * (p * (1.0 - p) / count as f64).sqrt(),
        count as u64,
        seed,
    );
    let volume_root = volume.value.powf(1.0 / n as f64);
    Ok(KtVolumeReport {
        measure: ev.measure().name().to_string(),
        dim: n,
        t,
        t_is_integer: t.fract() == 0.0,
        bounding_radius: radius,
        accepted,
        acceptance_rate: p,
        volume,
        volume_root,
        ratio_to_t_over_sqrt_n: volume_root / (t / (n as f64).sqrt()),
        touches_box,
        workers,
    })
}

/// Sampling plan for [`lemma35_chain`].
#[derive(Debug, Clone, Serialize)]
pub struct ChainOptions {
    /// Random directions on top of the `2n` coordinate ones.
    pub directions: usize,
    /// Nodes per segment `0 → ρ(θ)θ` when estimating `σ̂`.
    pub segment_nodes: usize,
    /// Fractions of the radial extent at which `K_t` is sampled.
    pub fractions: Vec<f64>,
    /// Relative slack on the bound of (a).
    pub margin: f64,
    pub seed: u64,
}

impl Default for ChainOptions {
    fn default() -> Self {
        Self {
            directions: 64,
            segment_nodes: 8,
            fractions: vec![0.25, 0.5, 0.75, 1.0],
            margin: 1e-3,
            seed: 0,
        }
    }
}

/// The three quantities of the volume lower bound, measured.
#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    pub measure: String,
    pub dim: usize,
    pub backend: Backend,
    /// `|∇_gΨ(0)|_g / √n`, which is `|E X|X|²| / √n`.
    pub base_point_sigma: f64,
    /// Largest `|∇_gΨ|_g / √n` seen on segments inside `K_{√n}`.
    pub sigma_local: f64,
    /// `max(1, sigma_local)`; every tilt contributes an isotropic
    /// log-concave witness, and the functional is at least 1.
    pub sigma_hat: f64,
    /// `max(√n / σ̂, 1)`, not rounded.
    pub t: f64,
    pub t_is_integer: bool,
    pub samples: usize,
    /// (a) `max [Ψ(0) - Ψ(ξ)] / d̂(0, ξ)` over the samples.
    pub max_ratio: f64,
    /// `√n σ̂ (1 + margin)`.
    pub ratio_bound: f64,
    pub ratio_holds: bool,
    /// (b) `min det ∇²Λ(ξ)` over the samples.
    pub min_det: f64,
    /// `-log(min_det) / n`, the exponent `C` in `det ≥ e^{-Cn}`.
    pub det_exponent: f64,
    pub volume: f64,
    /// (c) `Vol(K)^{1/n} σ̂`.
    pub volume_constant: f64,
}

/// Measures the chain `Ψ(0) - Ψ(ξ) ≤ √n σ d(0, ξ)`, `det ∇²Λ ≥ e^{-Cn}` on
/// `K_t` and `Vol(K)^{1/n} ≥ c/σ` for an even isotropic measure with
/// compact support in dimension at most 3.
pub fn lemma35_chain(spec: &MeasureSpec, backend: Backend, opts: &ChainOptions) -> Result<ChainReport> {
    let n = spec.dim();
    if n > MAX_GRID_DIM {
        return Err(Error::Unsupported(format!("chain supports dim <= {MAX_GRID_DIM}, got {n}")));
    }
    if !spec.is_compact() {
        return Err(Error::Unsupported(format!("{} has unbounded support", spec.name())));
    }
    if !spec.is_even() {
        return Err(Error::InvalidArgument(format!("{} is not even", spec.name())));
    }
    spec.check_isotropic(1e-8)?;
    let volume = volume_exact(spec)?;
    let ev = LaplaceEvaluator::new(spec, backend.clone())?;
    let pkg = RiemannianPackage::primal(ev.clone())?;
    let root_n = (n as f64).sqrt();
    let dirs = unit_directions(n, opts.directions, opts.seed);

    let base_point_sigma = pkg.grad_psi_metric_norm(&DVector::zeros(n))? / root_n;
    let mut sigma_local = base_point_sigma;
    let k = opts.segment_nodes.max(1);
    for theta in &dirs {
        let rho = kt_radial_extent(&ev, theta, root_n)?;
        for j in 1..=k {
            let p = theta * (rho * j as f64 / k as f64);
            sigma_local = sigma_local.max(pkg.grad_psi_metric_norm(&p)? / root_n);
        }
    }
    let sigma_hat = sigma_local.max(1.0);
    let t = (root_n / sigma_hat).max(1.0);

    let mut max_ratio = f64::NEG_INFINITY;
    let mut min_det = f64::INFINITY;
    let mut samples = 0;
    let zero = DVector::zeros(n);
    for theta in &dirs {
        let rho = kt_radial_extent(&ev, theta, t)?;
        for &f in &opts.fractions {
            let xi = theta * (rho * f);
            let d = pkg.distance_upper_bound(&xi, &zero)?;
            min_det = min_det.min(ev.hess(&xi)?.det());
            samples += 1;
            if d > 0.0 {
                max_ratio = max_ratio.max(-pkg.psi(&xi)? / d);
            }
        }
    }
    let ratio_bound = root_n * sigma_hat * (1.0 + opts.margin);
    let volume_root = volume.powf(1.0 / n as f64);
    Ok(ChainReport {
        measure: spec.name().to_string(),
        dim: n,
        backend,
        base_point_sigma,
        sigma_local,
        sigma_hat,
        t,
        t_is_integer: t.fract() == 0.0,
        samples,
        max_ratio,
        ratio_bound,
        ratio_holds: max_ratio <= ratio_bound,
        min_det,
        det_exponent: -min_det.ln() / n as f64,
        volume,
        volume_constant: volume_root * sigma_hat,
    })
}

#[cfg(test)]
mod tests;
