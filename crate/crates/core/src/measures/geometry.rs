use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lp::{self, LpOutcome};

/// Polytope `{x : a x ≤ b}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

/// Compact convex supports of the uniform kinds.
#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Cube { half_width: f64 },
    Ball { radius: f64 },
    Crosspolytope,
    Polytope(Polytope),
}

impl Body {
    pub fn contains(&self, x: &DVector<f64>) -> bool {
        match self {
            Body::Cube { half_width } => x.iter().all(|v| v.abs() <= *half_width),
            Body::Ball { radius } => x.norm() <= *radius,
            Body::Crosspolytope => x.iter().map(|v| v.abs()).sum::<f64>() <= 1.0,
            Body::Polytope(p) => p.contains(x),
        }
    }

    /// Parameter interval `[lo, hi]` of `{t : p + t u ∈ body}`; `p` must lie
    /// inside the body.
    pub fn chord(&self, p: &DVector<f64>, u: &DVector<f64>) -> (f64, f64) {
        match self {
            Body::Cube { half_width: w } => {
                let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
                for (pi, ui) in p.iter().zip(u.iter()) {
                    if *ui != 0.0 {
                        let t1 = (-w - pi) / ui;
                        let t2 = (w - pi) / ui;
                        lo = lo.max(t1.min(t2));
                        hi = hi.min(t1.max(t2));
                    }
                }
                (lo, hi)
            }
            Body::Ball { radius } => {
                let pu = p.dot(u);
                let uu = u.norm_squared();
                let c = p.norm_squared() - radius * radius;
                let disc = (pu * pu - uu * c).max(0.0).sqrt();
                ((-pu - disc) / uu, (-pu + disc) / uu)
            }
            Body::Crosspolytope => {
                let hi = l1_exit(p, u);
                let neg: DVector<f64> = -u;
                let lo = -l1_exit(p, &neg);
                (lo, hi)
            }
            Body::Polytope(poly) => poly.chord(p, u),
        }
    }

    /// A point deep inside the body, used to start hit-and-run chains.
    pub fn interior_point(&self, dim: usize) -> Result<DVector<f64>> {
        match self {
            Body::Polytope(p) => Ok(p.chebyshev_center()?.0),
            _ => Ok(DVector::zeros(dim)),
        }
    }

    /// Halfspace description, for the quadrature backend in low dimension.
    pub fn to_polytope(&self, dim: usize) -> Option<Polytope> {
        match self {
            Body::Cube { half_width } => Some(Polytope::cube(dim, *half_width)),
            Body::Crosspolytope => Some(Polytope::crosspolytope(dim)),
            Body::Polytope(p) => Some(p.clone()),
            Body::Ball { .. } => None,
        }
    }
}

/// Largest `t ≥ 0` with `|p + t u|₁ ≤ 1`, for `p` inside the cross-polytope.
fn l1_exit(p: &DVector<f64>, u: &DVector<f64>) -> f64 {
    let mut breaks: Vec<f64> = p
        .iter()
        .zip(u.iter())
        .filter(|(_, &ui)| ui != 0.0)
        .map(|(pi, ui)| -pi / ui)
        .filter(|&t| t > 0.0)
        .collect();
    breaks.sort_by(f64::total_cmp);
    let g = |t: f64| p.iter().zip(u.iter()).map(|(a, b)| (a + t * b).abs()).sum::<f64>();
    let mut t0 = 0.0;
    let mut g0 = g(0.0);
    for &t1 in breaks.iter().chain(std::iter::once(&f64::INFINITY)) {
        // on (t0, t1) g is linear with slope s
        let mid = if t1.is_finite() { 0.5 * (t0 + t1) } else { t0 + 1.0 };
        let s: f64 = p
            .iter()
            .zip(u.iter())
            .map(|(a, b)| (a + mid * b).signum() * b)
            .sum();
        if s > 0.0 {
            let t_exit = t0 + (1.0 - g0) / s;
            if t_exit <= t1 {
                return t_exit.max(t0);
            }
        }
        if !t1.is_finite() {
            break;
        }
        g0 = g(t1);
        t0 = t1;
    }
    f64::INFINITY
}

impl Polytope {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Self {
        Self { a, b }
    }

    pub fn from_halfspaces(dim: usize, hs: &[super::Halfspace]) -> Self {
        let a = DMatrix::from_fn(hs.len(), dim, |i, j| hs[i].normal[j]);
        let b = DVector::from_iterator(hs.len(), hs.iter().map(|h| h.offset));
        Self { a, b }
    }

    pub fn cube(n: usize, w: f64) -> Self {
        let mut a = DMatrix::zeros(2 * n, n);
        for j in 0..n {
            a[(2 * j, j)] = 1.0;
            a[(2 * j + 1, j)] = -1.0;
        }
        Self { a, b: DVector::from_element(2 * n, w) }
    }

    /// `{x ≥ 0, Σ xᵢ ≤ 1}`.
    pub fn simplex(n: usize) -> Self {
        let mut a = DMatrix::zeros(n + 1, n);
        for j in 0..n {
            a[(j, j)] = -1.0;
            a[(n, j)] = 1.0;
        }
        let mut b = DVector::zeros(n + 1);
        b[n] = 1.0;
        Self { a, b }
    }

    /// `{Σ |xᵢ| ≤ 1}` as `2ⁿ` halfspaces; only sensible in low dimension.
    pub fn crosspolytope(n: usize) -> Self {
        let m = 1usize << n;
        let a = DMatrix::from_fn(m, n, |i, j| if (i >> j) & 1 == 1 { -1.0 } else { 1.0 });
        Self { a, b: DVector::from_element(m, 1.0) }
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn offsets(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        (&self.a * x - &self.b).iter().all(|&v| v <= 0.0)
    }

    pub fn chord(&self, p: &DVector<f64>, u: &DVector<f64>) -> (f64, f64) {
        let ap = &self.a * p;
        let au = &self.a * u;
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..self.rows() {
            let slack = self.b[i] - ap[i];
            if au[i] > 0.0 {
                hi = hi.min(slack / au[i]);
            } else if au[i] < 0.0 {
                lo = lo.max(slack / au[i]);
            }
        }
        (lo.min(0.0), hi.max(0.0))
    }

    /// Checks boundedness and a nonempty interior.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        let rows: Vec<Vec<f64>> = (0..self.rows())
            .map(|i| self.a.row(i).iter().copied().collect())
            .collect();
        let rhs: Vec<f64> = self.b.iter().copied().collect();
        for j in 0..n {
            for sign in [1.0, -1.0] {
                let mut c = vec![0.0; n];
                c[j] = sign;
                match lp::maximize(&c, &rows, &rhs) {
                    LpOutcome::Optimal { .. } => {}
                    LpOutcome::Unbounded => return Err(Error::UnboundedPolytope),
                    LpOutcome::Infeasible => return Err(Error::EmptyInterior),
                }
            }
        }
        let (_, r) = self.chebyshev_center()?;
        if r <= 1e-12 {
            return Err(Error::EmptyInterior);
        }
        Ok(())
    }

    pub fn chebyshev_center(&self) -> Result<(DVector<f64>, f64)> {
        super::chebyshev_center(&self.a, &self.b)
    }

    /// Vertices by brute-force enumeration of `dim`-subsets of constraints.
    pub fn vertices(&self) -> Vec<DVector<f64>> {
        let n = self.dim();
        let m = self.rows();
        let scale = self.b.amax().max(1.0);
        let mut out: Vec<DVector<f64>> = Vec::new();
        for subset in combinations(m, n) {
            let a = DMatrix::from_fn(n, n, |i, j| self.a[(subset[i], j)]);
            let b = DVector::from_fn(n, |i, _| self.b[subset[i]]);
            let Some(x) = a.lu().solve(&b) else { continue };
            if x.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let feasible = (&self.a * &x - &self.b).iter().all(|&v| v <= 1e-9 * scale);
            if feasible && !out.iter().any(|y| (y - &x).amax() <= 1e-9 * scale) {
                out.push(x);
            }
        }
        out
    }

    /// Section `{y : (prefix, y) ∈ P}` in the remaining coordinates.
    pub fn section(&self, prefix: &[f64]) -> Polytope {
        let k = prefix.len();
        let n = self.dim();
        let a = self.a.columns(k, n - k).into_owned();
        let b = DVector::from_fn(self.rows(), |i, _| {
            self.b[i] - (0..k).map(|j| self.a[(i, j)] * prefix[j]).sum::<f64>()
        });
        Polytope { a, b }
    }

    /// Range of the first coordinate and the sorted first coordinates of all
    /// vertices (the kinks of any section-volume integrand).
    pub fn first_coordinate_breaks(&self) -> Vec<f64> {
        let mut xs: Vec<f64> = if self.dim() == 1 {
            let (lo, hi) = self.interval();
            if lo < hi {
                vec![lo, hi]
            } else {
                vec![]
            }
        } else {
            self.vertices().iter().map(|v| v[0]).collect()
        };
        xs.sort_by(f64::total_cmp);
        let span = xs.last().copied().unwrap_or(0.0) - xs.first().copied().unwrap_or(0.0);
        xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * span.max(1.0));
        xs
    }

    /// For a one-dimensional polytope, its interval.
    fn interval(&self) -> (f64, f64) {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..self.rows() {
            let a = self.a[(i, 0)];
            if a > 0.0 {
                hi = hi.min(self.b[i] / a);
            } else if a < 0.0 {
                lo = lo.max(self.b[i] / a);
            } else if self.b[i] < 0.0 {
                return (0.0, 0.0);
            }
        }
        (lo, hi)
    }
}

fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    rec(0, m, k, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn chords_of_basic_bodies() {
        let p = DVector::from_vec(vec![0.0, 0.0]);
        let u = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(Body::Cube { half_width: 2.0 }.chord(&p, &u), (-2.0, 2.0));
        let (lo, hi) = Body::Ball { radius: 1.0 }.chord(&p, &u);
        assert_abs_diff_eq!(lo, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hi, 1.0, epsilon = 1e-15);
        let d = DVector::from_vec(vec![1.0, 1.0]).normalize();
        let (lo, hi) = Body::Crosspolytope.chord(&p, &d);
        assert_abs_diff_eq!(hi, 0.5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(lo, -(0.5f64.sqrt()), epsilon = 1e-12);
        let (lo2, hi2) = Body::Polytope(Polytope::crosspolytope(2)).chord(&p, &d);
        assert_abs_diff_eq!(lo, lo2, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, hi2, epsilon = 1e-12);
    }

    #[test]
    fn crosspolytope_chord_off_center() {
        let p = DVector::from_vec(vec![0.3, -0.2, 0.1]);
        let u = DVector::from_vec(vec![0.2, 0.9, -0.4]).normalize();
        let (lo, hi) = Body::Crosspolytope.chord(&p, &u);
        let (lo2, hi2) = Polytope::crosspolytope(3).chord(&p, &u);
        assert_abs_diff_eq!(lo, lo2, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, hi2, epsilon = 1e-12);
    }

    #[test]
    fn simplex_vertices_and_center() {
        let s = Polytope::simplex(2);
        assert_eq!(s.vertices().len(), 3);
        let (c, r) = s.chebyshev_center().unwrap();
        let r_exact = 1.0 / (2.0 + 2f64.sqrt());
        assert_abs_diff_eq!(r, r_exact, epsilon = 1e-9);
        assert_abs_diff_eq!(c[0], r_exact, epsilon = 1e-9);
        assert_eq!(Polytope::crosspolytope(3).vertices().len(), 6);
    }

    #[test]
    fn validation_catches_bad_polytopes() {
        // half-plane x ≤ 1 is unbounded
        let p = Polytope::new(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), DVector::from_vec(vec![1.0]));
        assert!(matches!(p.validate(), Err(Error::UnboundedPolytope)));
        // x ≤ 0 and x ≥ 1 is empty
        let p = Polytope::new(
            DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]),
            DVector::from_vec(vec![0.0, -1.0, 1.0, 1.0]),
        );
        assert!(matches!(p.validate(), Err(Error::EmptyInterior)));
        assert!(Polytope::cube(3, 1.0).validate().is_ok());
    }
}
