//! Homogeneous polynomials with exact rational coefficients, and their
//! integrals against the uniform probability measure on the sphere.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};

/// `Σ_α c_α θ^α` with every `|α|` equal to `degree`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePolynomial {
    dim: usize,
    degree: u32,
    terms: BTreeMap<Vec<u32>, BigRational>,
}

/// Exact rational value of a finite float.
pub fn rational(x: f64) -> Result<BigRational> {
    BigRational::from_float(x)
        .ok_or_else(|| Error::InvalidArgument(format!("{x} is not a finite number")))
}

pub fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

fn int(k: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(k))
}

impl SpherePolynomial {
    pub fn zero(dim: usize, degree: u32) -> Self {
        Self { dim, degree, terms: BTreeMap::new() }
    }

    /// `c θ^α`.
    pub fn monomial(alpha: Vec<u32>, c: BigRational) -> Self {
        let degree = alpha.iter().sum();
        let mut p = Self::zero(alpha.len(), degree);
        p.add_term(alpha, c);
        p
    }

    /// `θ · v`.
    pub fn linear(v: &[BigRational]) -> Self {
        let n = v.len();
        let mut p = Self::zero(n, 1);
        for (i, c) in v.iter().enumerate() {
            let mut a = vec![0; n];
            a[i] = 1;
            p.add_term(a, c.clone());
        }
        p
    }

    /// `|θ|²`.
    pub fn norm_squared(dim: usize) -> Self {
        let mut p = Self::zero(dim, 2);
        for i in 0..dim {
            let mut a = vec![0; dim];
            a[i] = 2;
            p.add_term(a, BigRational::one());
        }
        p
    }

    fn add_term(&mut self, alpha: Vec<u32>, c: BigRational) {
        debug_assert_eq!(alpha.iter().sum::<u32>(), self.degree);
        if c.is_zero() {
            return;
        }
        match self.terms.entry(alpha) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &BigRational)> {
        self.terms.iter().map(|(a, c)| (a.as_slice(), c))
    }

    pub fn coefficient(&self, alpha: &[u32]) -> BigRational {
        self.terms.get(alpha).cloned().unwrap_or_else(BigRational::zero)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        Error::check_dim(self.dim, other.dim)?;
        if self.degree != other.degree && !self.is_zero() && !other.is_zero() {
            return Err(Error::InvalidArgument(format!(
                "degrees differ: {} and {}",
                self.degree, other.degree
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        if out.is_zero() {
            out.degree = other.degree;
        }
        for (a, c) in &other.terms {
            out.add_term(a.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        let mut out = Self::zero(self.dim, self.degree);
        for (a, c) in &self.terms {
            out.add_term(a.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        Error::check_dim(self.dim, other.dim)?;
        let mut out = Self::zero(self.dim, self.degree + other.degree);
        for (a, c) in &self.terms {
            for (b, d) in &other.terms {
                let ab = a.iter().zip(b).map(|(x, y)| x + y).collect();
                out.add_term(ab, c * d);
            }
        }
        Ok(out)
    }

    /// `Σ_i ∂²/∂θ_i²`.
    pub fn laplacian(&self) -> Self {
        let mut out = Self::zero(self.dim, self.degree.saturating_sub(2));
        for (a, c) in &self.terms {
            for i in 0..self.dim {
                if a[i] >= 2 {
                    let mut b = a.clone();
                    b[i] -= 2;
                    out.add_term(b, c * int(u64::from(a[i]) * u64::from(a[i] - 1)));
                }
            }
        }
        out
    }

    pub fn eval(&self, theta: &[f64]) -> Result<f64> {
        Error::check_dim(self.dim, theta.len())?;
        Ok(self
            .terms
            .iter()
            .map(|(a, c)| {
                to_f64(c)
                    * a.iter()
                        .zip(theta)
                        .map(|(&e, &t)| t.powi(e as i32))
                        .product::<f64>()
            })
            .sum())
    }

    /// `∫ P dσ` over the unit sphere, `σ` the uniform probability measure.
    pub fn sphere_integral(&self) -> BigRational {
        let mut total = BigRational::zero();
        for (a, c) in &self.terms {
            if let Some(m) = sphere_moment(self.dim, a) {
                total += c * m;
            }
        }
        total
    }
}

/// `∫ θ^α dσ = Π (α_i - 1)!! / Π_{j<|α|/2} (n + 2j)` when every `α_i` is
/// even, and 0 otherwise (`None`).
pub fn sphere_moment(dim: usize, alpha: &[u32]) -> Option<BigRational> {
    if alpha.iter().any(|a| a % 2 == 1) {
        return None;
    }
    let mut num = BigInt::one();
    for &a in alpha {
        let mut k = i64::from(a) - 1;
        while k > 1 {
            num *= k;
            k -= 2;
        }
    }
    let half: u32 = alpha.iter().sum::<u32>() / 2;
    let mut den = BigInt::one();
    for j in 0..half {
        den *= dim as u64 + 2 * u64::from(j);
    }
    Some(BigRational::new(num, den))
}

impl Serialize for SpherePolynomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let terms: Vec<(Vec<u32>, String, f64)> = self
            .terms
            .iter()
            .map(|(a, c)| (a.clone(), c.to_string(), to_f64(c)))
            .collect();
        let mut st = s.serialize_struct("SpherePolynomial", 3)?;
        st.serialize_field("dim", &self.dim)?;
        st.serialize_field("degree", &self.degree)?;
        st.serialize_field("terms", &terms)?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn low_order_sphere_moments() {
        for n in 1..6 {
            let mut a = vec![0; n];
            a[0] = 2;
            assert_eq!(sphere_moment(n, &a).unwrap(), q(1, n as i64));
        }
        assert_eq!(sphere_moment(2, &[6, 0]).unwrap(), q(5, 16));
        assert_eq!(sphere_moment(3, &[2, 2, 0]).unwrap(), q(1, 15));
        assert!(sphere_moment(3, &[1, 1, 0]).is_none());
    }

    #[test]
    fn circle_moments_match_trig_integrals() {
        // (1/2π) ∫ cos^a sin^b over the circle, by a fine midpoint rule
        for (a, b) in [(4u32, 2u32), (2, 2), (6, 0), (4, 4)] {
            let m = 20000;
            let h = 2.0 * std::f64::consts::PI / m as f64;
            let num: f64 = (0..m)
                .map(|k| {
                    let t = (k as f64 + 0.5) * h;
                    t.cos().powi(a as i32) * t.sin().powi(b as i32)
                })
                .sum::<f64>()
                / m as f64;
            let exact = to_f64(&sphere_moment(2, &[a, b]).unwrap());
            assert!((num - exact).abs() < 1e-12, "{a},{b}: {num} vs {exact}");
        }
    }

    #[test]
    fn laplacian_of_norm_power() {
        // Δ|θ|⁴ = (2·2)(n + 2·2 - 2)|θ|² = 4(n+2)|θ|²
        let n = 3;
        let r2 = SpherePolynomial::norm_squared(n);
        let r4 = r2.mul(&r2).unwrap();
        assert_eq!(r4.laplacian(), r2.scale(&int(4 * (n as u64 + 2))));
    }

    #[test]
    fn arithmetic_cancels() {
        let p = SpherePolynomial::linear(&[q(1, 2), q(-3, 1)]);
        assert!(p.sub(&p).unwrap().is_zero());
        assert_eq!(p.eval(&[2.0, 1.0]).unwrap(), -2.0);
    }
}
