//! The cubic `F(θ) = E(X·θ)³` of an isotropic vector, its Laplacian
//! `ΔF(θ) = 6 E(X·θ)|X|²`, the harmonic decomposition of `F`, and the lower
//! bound `∫ F² dσ ≥ 36 |v|² / (n (2n+4)²)` with `v = E X|X|²`.

mod poly;

use nalgebra::DVector;
use num_rational::BigRational;
use num_traits::Zero;
use rand_distr::{Distribution, StandardNormal};
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{sampling, Kind, MeasureSpec};
use crate::rng;

pub use poly::{rational, sphere_moment, to_f64, SpherePolynomial};

/// Tolerance of the isotropy precondition.
pub const ISOTROPY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum TensorSource {
    ClosedForm,
    MonteCarlo { count: u64, seed: u64 },
}

/// How to obtain a third-moment tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentMethod {
    ClosedForm,
    MonteCarlo { count: usize, seed: u64, workers: usize },
}

/// Symmetric `T_ijk = E X_i X_j X_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThirdMomentTensor {
    dim: usize,
    entries: Vec<f64>,
    std_errors: Option<Vec<f64>>,
    /// Standard errors of `v = E X|X|²` estimated directly (Monte Carlo).
    v_std_errors: Option<Vec<f64>>,
    source: TensorSource,
}

/// Index triples `i ≤ j ≤ k`.
fn sorted_triples(n: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                out.push([i, j, k]);
            }
        }
    }
    out
}

/// Number of distinct orderings of a sorted triple.
fn multiplicity([i, j, k]: [usize; 3]) -> u64 {
    match (i == j, j == k) {
        (true, true) => 1,
        (false, false) => 6,
        _ => 3,
    }
}

impl ThirdMomentTensor {
    /// Builds the tensor from its values on sorted triples.
    pub fn from_fn(dim: usize, source: TensorSource, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut entries = vec![0.0; dim * dim * dim];
        for [i, j, k] in sorted_triples(dim) {
            let v = f(i, j, k);
            for [a, b, c] in [[i, j, k], [i, k, j], [j, i, k], [j, k, i], [k, i, j], [k, j, i]] {
                entries[(a * dim + b) * dim + c] = v;
            }
        }
        Self { dim, entries, std_errors: None, v_std_errors: None, source }
    }

    /// Symmetrizes an arbitrary `n³` array (row-major `T[i][j][k]`).
    pub fn symmetrized(dim: usize, raw: &[f64]) -> Result<Self> {
        Error::check_dim(dim * dim * dim, raw.len())?;
        let at = |a: usize, b: usize, c: usize| raw[(a * dim + b) * dim + c];
        Ok(Self::from_fn(dim, TensorSource::ClosedForm, |i, j, k| {
            (at(i, j, k) + at(i, k, j) + at(j, i, k) + at(j, k, i) + at(k, i, j) + at(k, j, i)) / 6.0
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source(&self) -> TensorSource {
        self.source
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.entries[(i * self.dim + j) * self.dim + k]
    }

    pub fn std_error(&self, i: usize, j: usize, k: usize) -> Option<f64> {
        self.std_errors.as_ref().map(|s| s[(i * self.dim + j) * self.dim + k])
    }

    pub fn v_std_errors(&self) -> Option<&[f64]> {
        self.v_std_errors.as_deref()
    }

    /// `F(θ) = Σ T_ijk θ_i θ_j θ_k`.
    pub fn f_eval(&self, theta: &DVector<f64>) -> Result<f64> {
        Error::check_dim(self.dim, theta.len())?;
        let n = self.dim;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let tij = theta[i] * theta[j];
                for k in 0..n {
                    total += self.get(i, j, k) * tij * theta[k];
                }
            }
        }
        Ok(total)
    }

    /// `v_k = Σ_i T_iik = E X_k |X|²`.
    pub fn v(&self) -> DVector<f64> {
        DVector::from_fn(self.dim, |k, _| (0..self.dim).map(|i| self.get(i, i, k)).sum())
    }

    /// `w = 6v`, so that `ΔF(θ) = w·θ`.
    pub fn laplacian_vector(&self) -> DVector<f64> {
        self.v() * 6.0
    }

    /// `F` as an exact polynomial in the rational values of the entries.
    pub fn polynomial(&self) -> Result<SpherePolynomial> {
        let n = self.dim;
        let mut p = SpherePolynomial::zero(n, 3);
        for t in sorted_triples(n) {
            let c = self.get(t[0], t[1], t[2]);
            if c == 0.0 {
                continue;
            }
            let mut alpha = vec![0u32; n];
            for &i in &t {
                alpha[i] += 1;
            }
            let m = BigRational::from_integer(multiplicity(t).into());
            p = p.add(&SpherePolynomial::monomial(alpha, rational(c)? * m))?;
        }
        Ok(p)
    }

    /// Exact `v` from the rational values of the entries.
    pub fn v_exact(&self) -> Result<Vec<BigRational>> {
        (0..self.dim)
            .map(|k| {
                (0..self.dim).try_fold(BigRational::zero(), |acc, i| Ok(acc + rational(self.get(i, i, k))?))
            })
            .collect()
    }
}

impl Serialize for ThirdMomentTensor {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let triples = sorted_triples(self.dim);
        let entries: Vec<(usize, usize, usize, f64)> =
            triples.iter().map(|&[i, j, k]| (i, j, k, self.get(i, j, k))).collect();
        let std_errors: Option<Vec<(usize, usize, usize, f64)>> = self.std_errors.as_ref().map(|_| {
            triples
                .iter()
                .map(|&[i, j, k]| (i, j, k, self.std_error(i, j, k).unwrap_or(0.0)))
                .collect()
        });
        let mut st = s.serialize_struct("ThirdMomentTensor", 4)?;
        st.serialize_field("dim", &self.dim)?;
        st.serialize_field("source", &self.source)?;
        st.serialize_field("entries", &entries)?;
        st.serialize_field("std_errors", &std_errors)?;
        st.end()
    }
}

/// Third central moment of one coordinate of a product core kind.
fn coordinate_skewness(kind: &Kind) -> Option<f64> {
    match kind {
        Kind::GaussianStd | Kind::UniformCube { .. } => Some(0.0),
        Kind::ProductExponential => Some(2.0),
        _ => None,
    }
}

/// `E X_i X_j X_k` for an isotropic measure: in closed form for linear
/// images `X = AY` of product laws (`T_abc = Σ_i A_ai A_bi A_ci κ_i` with
/// `κ_i` the third moment of `Y_i`), by Monte Carlo otherwise.
pub fn third_moment(spec: &MeasureSpec, method: MomentMethod) -> Result<ThirdMomentTensor> {
    spec.check_isotropic(ISOTROPY_TOL)?;
    match method {
        MomentMethod::ClosedForm => closed_third_moment(spec),
        MomentMethod::MonteCarlo { count, seed, workers } => mc_third_moment(spec, count, seed, workers),
    }
}

fn closed_third_moment(spec: &MeasureSpec) -> Result<ThirdMomentTensor> {
    let (core, map) = spec.core();
    let kappa = coordinate_skewness(core.kind()).ok_or_else(|| {
        Error::Unsupported(format!("{} has no closed-form third moments", spec.name()))
    })?;
    let n = spec.dim();
    if kappa == 0.0 {
        return Ok(ThirdMomentTensor::from_fn(n, TensorSource::ClosedForm, |_, _, _| 0.0));
    }
    Ok(match map {
        None => ThirdMomentTensor::from_fn(n, TensorSource::ClosedForm, |i, j, k| {
            if i == j && j == k {
                kappa
            } else {
                0.0
            }
        }),
        Some(m) => {
            let a = m.linear_part();
            ThirdMomentTensor::from_fn(n, TensorSource::ClosedForm, |i, j, k| {
                (0..n).map(|l| a[(i, l)] * a[(j, l)] * a[(k, l)] * kappa).sum()
            })
        }
    })
}

struct TensorAcc {
    count: u64,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    v_sum: Vec<f64>,
    v_sum_sq: Vec<f64>,
}

fn mc_third_moment(spec: &MeasureSpec, count: usize, seed: u64, workers: usize) -> Result<ThirdMomentTensor> {
    let n = spec.dim();
    let triples = sorted_triples(n);
    let m = triples.len();
    let parts = sampling::fold_parallel(
        spec,
        seed,
        count,
        workers,
        || TensorAcc {
            count: 0,
            sum: vec![0.0; m],
            sum_sq: vec![0.0; m],
            v_sum: vec![0.0; n],
            v_sum_sq: vec![0.0; n],
        },
        |acc, x| {
            acc.count += 1;
            for (slot, &[i, j, k]) in triples.iter().enumerate() {
                let p = x[i] * x[j] * x[k];
                acc.sum[slot] += p;
                acc.sum_sq[slot] += p * p;
            }
            let r2: f64 = x.iter().map(|t| t * t).sum();
            for k in 0..n {
                let y = x[k] * r2;
                acc.v_sum[k] += y;
                acc.v_sum_sq[k] += y * y;
            }
        },
    )?;
    let total = count as f64;
    let merge = |get: &dyn Fn(&TensorAcc) -> &Vec<f64>, len: usize| {
        let mut out = vec![0.0; len];
        for p in &parts {
            for (o, v) in out.iter_mut().zip(get(p)) {
                *o += v;
            }
        }
        out
    };
    let sum = merge(&|p| &p.sum, m);
    let sum_sq = merge(&|p| &p.sum_sq, m);
    let v_sum = merge(&|p| &p.v_sum, n);
    let v_sum_sq = merge(&|p| &p.v_sum_sq, n);
    let se = |s: f64, ss: f64| {
        let mean = s / total;
        ((ss / total - mean * mean).max(0.0) / (total - 1.0).max(1.0)).sqrt()
    };
    let index = |i: usize, j: usize, k: usize| {
        let mut t = [i, j, k];
        t.sort_unstable();
        triples.iter().position(|x| *x == t).expect("sorted triple")
    };
    let source = TensorSource::MonteCarlo { count: count as u64, seed };
    let mut tensor = ThirdMomentTensor::from_fn(n, source, |i, j, k| sum[index(i, j, k)] / total);
    let ses = ThirdMomentTensor::from_fn(n, source, |i, j, k| {
        let s = index(i, j, k);
        se(sum[s], sum_sq[s])
    });
    tensor.std_errors = Some(ses.entries);
    tensor.v_std_errors = Some((0..n).map(|k| se(v_sum[k], v_sum_sq[k])).collect());
    Ok(tensor)
}

/// `F - (6/(2n+4)) |θ|² (θ·v)`, harmonic by construction.
pub fn harmonic_part(t: &ThirdMomentTensor) -> Result<SpherePolynomial> {
    let f = t.polynomial()?;
    f.sub(&radial_part(t)?)
}

/// `(6/(2n+4)) |θ|² (θ·v)`.
pub fn radial_part(t: &ThirdMomentTensor) -> Result<SpherePolynomial> {
    let n = t.dim();
    let c = BigRational::new(6.into(), (2 * n as i64 + 4).into());
    let v = t.v_exact()?;
    Ok(SpherePolynomial::norm_squared(n)
        .mul(&SpherePolynomial::linear(&v))?
        .scale(&c))
}

/// Exact `∫ P dσ`.
pub fn sphere_integral_poly(p: &SpherePolynomial) -> BigRational {
    p.sphere_integral()
}

/// Both sides of `∫ F² dσ ≥ 36 |v|² / (n (2n+4)²)`.
#[derive(Debug, Clone, Serialize)]
pub struct SphereBoundReport {
    pub dim: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; absent when `v = 0`.
    pub ratio: Option<f64>,
    pub margin: f64,
    pub lhs_exact: String,
    pub rhs_exact: String,
    /// Exact comparison of the rational values.
    pub holds: bool,
}

pub fn prop37_check(t: &ThirdMomentTensor) -> Result<SphereBoundReport> {
    let n = t.dim();
    let f = t.polynomial()?;
    let lhs = f.mul(&f)?.sphere_integral();
    let v = t.v_exact()?;
    let v2 = v.iter().fold(BigRational::zero(), |acc, x| acc + x * x);
    let den = BigRational::from_integer((n as i64 * (2 * n as i64 + 4).pow(2)).into());
    let rhs = BigRational::from_integer(36.into()) * v2 / den;
    let (lf, rf) = (to_f64(&lhs), to_f64(&rhs));
    Ok(SphereBoundReport {
        dim: n,
        lhs: lf,
        rhs: rf,
        ratio: (!rhs.is_zero()).then(|| to_f64(&(&lhs / &rhs))),
        margin: to_f64(&(&lhs - &rhs)),
        lhs_exact: lhs.to_string(),
        rhs_exact: rhs.to_string(),
        holds: lhs >= rhs,
    })
}

/// Exact pieces of `∫F² = ∫H² + 2∫H·R + ∫R²` for `F = H + R`, `R` the
/// radial part.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub total: BigRational,
    pub harmonic: BigRational,
    pub cross: BigRational,
    pub radial: BigRational,
}

pub fn decomposition(t: &ThirdMomentTensor) -> Result<Decomposition> {
    let f = t.polynomial()?;
    let r = radial_part(t)?;
    let h = f.sub(&r)?;
    Ok(Decomposition {
        total: f.mul(&f)?.sphere_integral(),
        harmonic: h.mul(&h)?.sphere_integral(),
        cross: h.mul(&r)?.sphere_integral(),
        radial: r.mul(&r)?.sphere_integral(),
    })
}

/// Quantiles of `|F(θ)|` and `n|F(θ)|` for `θ` uniform on the sphere.
#[derive(Debug, Clone, Serialize)]
pub struct CubicQuantiles {
    pub dim: usize,
    pub samples: usize,
    pub seed: u64,
    pub levels: Vec<f64>,
    pub abs_f: Vec<f64>,
    pub n_abs_f: Vec<f64>,
}

pub fn cubic_quantiles(t: &ThirdMomentTensor, samples: usize, seed: u64) -> Result<CubicQuantiles> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one direction".into()));
    }
    let n = t.dim();
    let mut rng = rng::stream(seed);
    let mut values = Vec::with_capacity(samples);
    while values.len() < samples {
        let g: DVector<f64> = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let norm = g.norm();
        if norm > 1e-12 {
            values.push(t.f_eval(&(g / norm))?.abs());
        }
    }
    values.sort_by(f64::total_cmp);
    let levels = vec![0.5, 0.9, 0.99];
    let abs_f: Vec<f64> = levels
        .iter()
        .map(|q| values[((q * samples as f64).ceil() as usize).clamp(1, samples) - 1])
        .collect();
    let n_abs_f = abs_f.iter().map(|v| v * n as f64).collect();
    Ok(CubicQuantiles { dim: n, samples, seed, levels, abs_f, n_abs_f })
}

#[cfg(test)]
mod tests;
