//! Thin-shell functionals of an isotropic measure, the third-moment vector
//! `v = E X|X|²` behind `σ̲`, and the isotropic constant `L_f = f(0)^{1/n}`.
//!
//! Every functional here is per measure; the suprema over all log-concave
//! measures are not computable and nothing below claims to estimate them.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::Estimate;
use crate::harmonics::{third_moment, MomentMethod, ISOTROPY_TOL};
use crate::measures::{sampling, Kind, MeasureSpec};

/// Default `C` of the tail functional `E|X|⁴ 1{|X| > C√n}`.
pub const DEFAULT_TAIL_C: f64 = 3.0;

/// Streaming sums over one worker's draws.
#[derive(Debug, Clone)]
struct ShellAcc {
    count: u64,
    radius: [f64; 2],
    quad: [f64; 2],
    tail: [f64; 2],
    /// `Σ X|X|²` and `Σ (X|X|²)(X|X|²)ᵗ`.
    y: DVector<f64>,
    yy: DMatrix<f64>,
    /// `Σ X(|X|² - n)` and its outer products.
    z: DVector<f64>,
    zz: DMatrix<f64>,
}

impl ShellAcc {
    fn new(n: usize) -> Self {
        Self {
            count: 0,
            radius: [0.0; 2],
            quad: [0.0; 2],
            tail: [0.0; 2],
            y: DVector::zeros(n),
            yy: DMatrix::zeros(n, n),
            z: DVector::zeros(n),
            zz: DMatrix::zeros(n, n),
        }
    }

    fn push(&mut self, x: &[f64], tail_c: f64) {
        let n = x.len();
        let nf = n as f64;
        let r2: f64 = x.iter().map(|t| t * t).sum();
        let r = r2.sqrt();
        let add = |s: &mut [f64; 2], v: f64| {
            s[0] += v;
            s[1] += v * v;
        };
        self.count += 1;
        add(&mut self.radius, (r - nf.sqrt()).powi(2));
        add(&mut self.quad, (r2 - nf).powi(2) / nf);
        add(&mut self.tail, if r > tail_c * nf.sqrt() { r2 * r2 } else { 0.0 });
        for i in 0..n {
            let yi = x[i] * r2;
            let zi = x[i] * (r2 - nf);
            self.y[i] += yi;
            self.z[i] += zi;
            for j in 0..=i {
                self.yy[(i, j)] += yi * x[j] * r2;
                self.zz[(i, j)] += zi * x[j] * (r2 - nf);
            }
        }
    }

    fn merge(mut self, other: &Self) -> Self {
        self.count += other.count;
        for (a, b) in [
            (&mut self.radius, &other.radius),
            (&mut self.quad, &other.quad),
            (&mut self.tail, &other.tail),
        ] {
            a[0] += b[0];
            a[1] += b[1];
        }
        self.y += &other.y;
        self.yy += &other.yy;
        self.z += &other.z;
        self.zz += &other.zz;
        self
    }
}

fn scalar(s: &[f64; 2], count: u64, seed: u64) -> Estimate {
    let m = count as f64;
    let mean = s[0] / m;
    let var = ((s[1] / m - mean * mean) * m / (m - 1.0).max(1.0)).max(0.0);
    Estimate::stochastic(mean, (var / m).sqrt(), count, seed)
}

/// Mean vector and covariance of the mean from raw sums (lower triangle of
/// `outer` filled).
fn vector_mean(sum: &DVector<f64>, outer: &DMatrix<f64>, count: u64) -> (DVector<f64>, DMatrix<f64>) {
    let m = count as f64;
    let mean = sum / m;
    let n = mean.len();
    let cov = DMatrix::from_fn(n, n, |i, j| {
        let (a, b) = if i >= j { (i, j) } else { (j, i) };
        (outer[(a, b)] / m - mean[a] * mean[b]) * m / (m - 1.0).max(1.0) / m
    });
    (mean, cov)
}

/// Result of one sampling pass.
#[derive(Debug, Clone, Serialize)]
pub struct ShellStats {
    pub measure: String,
    pub dim: usize,
    pub count: u64,
    pub seed: u64,
    /// `E(|X| - √n)²`.
    pub var_radius: Estimate,
    /// `(1/n) E(|X|² - n)²`.
    pub quad_functional: Estimate,
    /// `E X|X|²`.
    pub v_vector: Vec<f64>,
    pub v_vector_se: Vec<f64>,
    /// `E X|X|²` in closed form, for linear images of product laws.
    pub v_closed_form: Option<Vec<f64>>,
    /// `|v| / √n`.
    pub sigma_underline: Estimate,
    /// `E|X|⁴ 1{|X| > C√n}`.
    pub tail_fourth: Estimate,
    pub tail_c: f64,
    pub isotropic_constant: Option<f64>,
    #[serde(skip)]
    v_cov: DMatrix<f64>,
    #[serde(skip)]
    z_mean: DVector<f64>,
    #[serde(skip)]
    z_cov: DMatrix<f64>,
}

/// `E(X·θ)|X|²` with its standard error, next to the bound `|v|` it never
/// exceeds for `|θ| = 1`.
#[derive(Debug, Clone, Serialize)]
pub struct Directional {
    pub theta: Vec<f64>,
    pub value: Estimate,
    pub sup_bound: Estimate,
    /// `θ·v` from the closed-form `v`, when available.
    pub closed_form: Option<f64>,
}

/// One side of `|E(X·θ)(|X|² - n)| ≤ √(E(X·θ)² E(|X|² - n)²)`; for an
/// isotropic `X` and unit `θ` the right side is `√(n · quad_functional)`.
#[derive(Debug, Clone, Serialize)]
pub struct CauchySchwarz {
    pub theta: Vec<f64>,
    pub lhs: Estimate,
    pub rhs: Estimate,
}

impl ShellStats {
    /// The directional functional for a unit `θ`.
    pub fn directional(&self, theta: &DVector<f64>) -> Result<Directional> {
        let theta = unit(theta, self.dim)?;
        let v = DVector::from_column_slice(&self.v_vector);
        let value = theta.dot(&v);
        let se = theta.dot(&(&self.v_cov * &theta)).max(0.0).sqrt();
        Ok(Directional {
            theta: theta.iter().copied().collect(),
            value: Estimate::stochastic(value, se, self.count, self.seed),
            sup_bound: Estimate::stochastic(
                self.sigma_underline.value * (self.dim as f64).sqrt(),
                self.sigma_underline.std_error * (self.dim as f64).sqrt(),
                self.count,
                self.seed,
            ),
            closed_form: self
                .v_closed_form
                .as_ref()
                .map(|c| theta.dot(&DVector::from_column_slice(c))),
        })
    }

    pub fn cauchy_schwarz(&self, theta: &DVector<f64>) -> Result<CauchySchwarz> {
        let theta = unit(theta, self.dim)?;
        let value = theta.dot(&self.z_mean).abs();
        let se = theta.dot(&(&self.z_cov * &theta)).max(0.0).sqrt();
        let n = self.dim as f64;
        let q = self.quad_functional;
        let rhs = (n * q.value).sqrt();
        // d√(nq)/dq = n / (2√(nq))
        let rhs_se = if rhs > 0.0 { n * q.std_error / (2.0 * rhs) } else { 0.0 };
        Ok(CauchySchwarz {
            theta: theta.iter().copied().collect(),
            lhs: Estimate::stochastic(value, se, self.count, self.seed),
            rhs: Estimate::stochastic(rhs, rhs_se, self.count, self.seed),
        })
    }

    /// The left inequality `E(|X| - √n)² ≤ (1/n)E(|X|² - n)²` up to five
    /// combined standard errors.
    pub fn left_inequality_holds(&self) -> bool {
        let (a, b) = (self.var_radius, self.quad_functional);
        a.value <= b.value + 5.0 * (a.std_error.powi(2) + b.std_error.powi(2)).sqrt()
    }

    pub fn csv_row(&self) -> ShellCsvRow {
        ShellCsvRow {
            measure: self.measure.clone(),
            dim: self.dim,
            count: self.count,
            seed: self.seed,
            var_radius: self.var_radius.value,
            var_radius_se: self.var_radius.std_error,
            quad: self.quad_functional.value,
            quad_se: self.quad_functional.std_error,
            sigma_u: self.sigma_underline.value,
            sigma_u_se: self.sigma_underline.std_error,
            v_norm: DVector::from_column_slice(&self.v_vector).norm(),
            lf: self.isotropic_constant,
            tail4: self.tail_fourth.value,
            tail_c: self.tail_c,
        }
    }
}

/// One CSV line per `(measure, dim, seed)`.
#[derive(Debug, Clone, Serialize)]
pub struct ShellCsvRow {
    pub measure: String,
    pub dim: usize,
    pub count: u64,
    pub seed: u64,
    pub var_radius: f64,
    pub var_radius_se: f64,
    pub quad: f64,
    pub quad_se: f64,
    pub sigma_u: f64,
    pub sigma_u_se: f64,
    pub v_norm: f64,
    #[serde(rename = "Lf")]
    pub lf: Option<f64>,
    pub tail4: f64,
    #[serde(rename = "tail_C")]
    pub tail_c: f64,
}

pub fn write_csv(rows: &[ShellStats], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r.csv_row())?;
    }
    w.flush()?;
    Ok(())
}

fn unit(theta: &DVector<f64>, dim: usize) -> Result<DVector<f64>> {
    Error::check_dim(dim, theta.len())?;
    if (theta.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "direction must have unit length, got |θ| = {}",
            theta.norm()
        )));
    }
    Ok(theta.clone())
}

/// All shell functionals from one pass of `count` draws, split over
/// `workers` seeded substreams.
pub fn shell_stats(spec: &MeasureSpec, count: usize, seed: u64, tail_c: f64, workers: usize) -> Result<ShellStats> {
    spec.check_isotropic(ISOTROPY_TOL)?;
    if count < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let n = spec.dim();
    let parts = sampling::fold_parallel(spec, seed, count, workers, || ShellAcc::new(n), |acc, x| acc.push(x, tail_c))?;
    let acc = parts.iter().skip(1).fold(parts[0].clone(), |a, b| a.merge(b));
    let (v, v_cov) = vector_mean(&acc.y, &acc.yy, acc.count);
    let (z_mean, z_cov) = vector_mean(&acc.z, &acc.zz, acc.count);
    let v_norm = v.norm();
    let v_se = if v_norm > 0.0 {
        let u = &v / v_norm;
        u.dot(&(&v_cov * &u)).max(0.0).sqrt()
    } else {
        v_cov.trace().max(0.0).sqrt()
    };
    let root_n = (n as f64).sqrt();
    let v_closed_form = third_moment(spec, MomentMethod::ClosedForm)
        .ok()
        .map(|t| t.v().iter().copied().collect());
    Ok(ShellStats {
        measure: spec.name().to_string(),
        dim: n,
        count: acc.count,
        seed,
        var_radius: scalar(&acc.radius, acc.count, seed),
        quad_functional: scalar(&acc.quad, acc.count, seed),
        v_vector: v.iter().copied().collect(),
        v_vector_se: (0..n).map(|i| v_cov[(i, i)].max(0.0).sqrt()).collect(),
        v_closed_form,
        sigma_underline: Estimate::stochastic(v_norm / root_n, v_se / root_n, acc.count, seed),
        tail_fourth: scalar(&acc.tail, acc.count, seed),
        tail_c,
        isotropic_constant: isotropic_constant(spec).ok(),
        v_cov,
        z_mean,
        z_cov,
    })
}

/// `E(X·θ)|X|²` for a unit `θ`, with the `|v|` bound.
pub fn sigma_underline_directional(
    spec: &MeasureSpec,
    theta: &DVector<f64>,
    count: usize,
    seed: u64,
    workers: usize,
) -> Result<Directional> {
    unit(theta, spec.dim())?;
    shell_stats(spec, count, seed, DEFAULT_TAIL_C, workers)?.directional(theta)
}

/// `|v| / √n` in closed form for linear images of product laws.
pub fn sigma_underline_closed(spec: &MeasureSpec) -> Result<f64> {
    let v = third_moment(spec, MomentMethod::ClosedForm)?.v();
    Ok(v.norm() / (spec.dim() as f64).sqrt())
}

/// `f(0)^{1/n}` of the isotropic normalization of `spec`.
pub fn isotropic_constant(spec: &MeasureSpec) -> Result<f64> {
    let iso = match spec.check_isotropic(ISOTROPY_TOL) {
        Ok(()) => spec.clone(),
        Err(_) => spec.isotropize()?.1,
    };
    if matches!(iso.core().0.kind(), Kind::UniformPolytope { .. }) {
        return Err(Error::Unsupported(
            "uniform_polytope has no closed-form volume, so f(0) is unknown".into(),
        ));
    }
    let n = iso.dim();
    let ld = iso.log_density(&DVector::zeros(n))?;
    if !ld.value.is_finite() {
        return Err(Error::InvalidMeasure("density vanishes at the barycenter".into()));
    }
    Ok((ld.value / n as f64).exp())
}

#[cfg(test)]
mod tests;
