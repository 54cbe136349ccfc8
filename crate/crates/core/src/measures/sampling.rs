use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;

use super::{Body, Kind, MeasureSpec};
use crate::error::{Error, Result};
use crate::rng::{split_counts, substream};

/// Hit-and-run settings for kinds without an exact sampler.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SamplerConfig {
    /// Steps discarded before the first retained sample (default `100·dim`).
    pub burn_in: Option<usize>,
    /// Steps per retained sample (default `10·dim`).
    pub thinning: Option<usize>,
}

impl SamplerConfig {
    fn burn_in(&self, dim: usize) -> usize {
        self.burn_in.unwrap_or(100 * dim)
    }

    fn thinning(&self, dim: usize) -> usize {
        self.thinning.unwrap_or(10 * dim).max(1)
    }
}

/// Draws from the density `∝ e^{rate·t}` on `[lo, hi]` by inverting the CDF
/// in the log domain, so `|rate|·(hi - lo)` may be arbitrarily large.
pub fn truncated_exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64, lo: f64, hi: f64) -> f64 {
    let len = hi - lo;
    let u: f64 = rng.random();
    let c = rate * len;
    if c.abs() < 1e-12 || len <= 0.0 {
        return lo + u * len;
    }
    let t = if rate > 0.0 {
        hi + (-(1.0 - u) * -(-c).exp_m1()).ln_1p() / rate
    } else {
        lo + (-(1.0 - u) * -c.exp_m1()).ln_1p() / rate
    };
    t.clamp(lo, hi)
}

fn unit_direction<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    loop {
        let d: DVector<f64> = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        let norm = d.norm();
        if norm > 1e-12 {
            return d / norm;
        }
    }
}

/// Hit-and-run on a convex body targeting the uniform law, or the law with
/// density `∝ e^{tilt·x}` when a tilt is given.
fn hit_and_run<R: Rng + ?Sized>(
    body: &Body,
    dim: usize,
    tilt: Option<&DVector<f64>>,
    rng: &mut R,
    count: usize,
    cfg: &SamplerConfig,
    out: &mut Vec<f64>,
) -> Result<()> {
    let mut x = body.interior_point(dim)?;
    let step = |x: &mut DVector<f64>, rng: &mut R| {
        let u = unit_direction(rng, dim);
        let (lo, hi) = body.chord(x, &u);
        let rate = tilt.map_or(0.0, |t| t.dot(&u));
        let t = truncated_exponential(rng, rate, lo, hi);
        x.axpy(t, &u, 1.0);
    };
    for _ in 0..cfg.burn_in(dim) {
        step(&mut x, rng);
    }
    let thin = cfg.thinning(dim);
    for _ in 0..count {
        for _ in 0..thin {
            step(&mut x, rng);
        }
        out.extend(x.iter());
    }
    Ok(())
}

/// Samples the undecorated `spec` (tilted by `tilt` if given) into the flat
/// buffer `out`, `dim` values per draw.
pub(crate) fn sample_core_into<R: Rng + ?Sized>(
    spec: &MeasureSpec,
    tilt: Option<&DVector<f64>>,
    rng: &mut R,
    count: usize,
    cfg: &SamplerConfig,
    out: &mut Vec<f64>,
) -> Result<()> {
    let n = spec.dim;
    let tilt = tilt.filter(|t| t.iter().any(|&v| v != 0.0));
    out.reserve(count * n);
    match (&spec.kind, tilt) {
        (Kind::GaussianStd, t) => {
            for _ in 0..count {
                for k in 0..n {
                    let z: f64 = StandardNormal.sample(rng);
                    out.push(z + t.map_or(0.0, |t| t[k]));
                }
            }
        }
        (Kind::ProductExponential, t) => {
            for _ in 0..count {
                for k in 0..n {
                    let rate = 1.0 - t.map_or(0.0, |t| t[k]);
                    let e: f64 = Exp1.sample(rng);
                    out.push(e / rate - 1.0);
                }
            }
        }
        (Kind::UniformCube { half_width: w }, t) => {
            for _ in 0..count {
                for k in 0..n {
                    let rate = t.map_or(0.0, |t| t[k]);
                    out.push(truncated_exponential(rng, rate, -w, *w));
                }
            }
        }
        (Kind::UniformBall { radius }, None) => {
            for _ in 0..count {
                let d = unit_direction(rng, n);
                let u: f64 = rng.random();
                let r = radius * u.powf(1.0 / n as f64);
                out.extend(d.iter().map(|v| v * r));
            }
        }
        (Kind::UniformSimplex | Kind::UniformCrosspolytope, None) => {
            let signed = matches!(spec.kind, Kind::UniformCrosspolytope);
            let mut e = vec![0.0; n + 1];
            for _ in 0..count {
                for v in e.iter_mut() {
                    *v = Exp1.sample(rng);
                }
                let total: f64 = e.iter().sum();
                for v in &e[..n] {
                    let s = if signed && rng.random::<bool>() { -1.0 } else { 1.0 };
                    out.push(s * v / total);
                }
            }
        }
        (Kind::AffineImage { .. }, _) => {
            return Err(Error::InvalidArgument(
                "sample_core_into expects an undecorated measure".into(),
            ))
        }
        (_, t) => {
            let body = spec.body().expect("compact kind");
            hit_and_run(&body, n, t, rng, count, cfg, out)?;
        }
    }
    Ok(())
}

/// Samples `spec` (tilted by `xi` if given) into a flat buffer, applying the
/// affine decoration. A tilt of `T_*μ` by `ξ` is `T_*` of `μ` tilted by `Aᵗξ`.
pub(crate) fn sample_flat<R: Rng + ?Sized>(
    spec: &MeasureSpec,
    xi: Option<&DVector<f64>>,
    rng: &mut R,
    count: usize,
    cfg: &SamplerConfig,
) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    if let Some(xi) = xi {
        spec.check_domain(xi)?;
    }
    let n = spec.dim;
    let (core, map) = spec.core();
    let core_tilt = match (map, xi) {
        (Some(m), Some(xi)) => Some(m.pullback(xi)),
        (_, xi) => xi.cloned(),
    };
    let mut out = Vec::with_capacity(count * n);
    sample_core_into(core, core_tilt.as_ref(), rng, count, cfg, &mut out)?;
    if let Some(m) = map {
        let a = m.linear_part();
        let b = m.shift();
        let mut y = vec![0.0; n];
        for chunk in out.chunks_exact_mut(n) {
            for i in 0..n {
                y[i] = b[i] + (0..n).map(|j| a[(i, j)] * chunk[j]).sum::<f64>();
            }
            chunk.copy_from_slice(&y);
        }
    }
    Ok(out)
}

/// Parallel flat sampling: worker `w` uses substream `w` of `seed`; the
/// output is the concatenation in worker order.
pub(crate) fn sample_parallel_flat(
    spec: &MeasureSpec,
    xi: Option<&DVector<f64>>,
    seed: u64,
    count: usize,
    workers: usize,
    cfg: &SamplerConfig,
) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let parts: Vec<Result<Vec<f64>>> = split_counts(count, workers)
        .into_par_iter()
        .enumerate()
        .map(|(w, c)| {
            if c == 0 {
                return Ok(Vec::new());
            }
            let mut rng = substream(seed, w as u64);
            sample_flat(spec, xi, &mut rng, c, cfg)
        })
        .collect();
    let mut out = Vec::with_capacity(count * spec.dim);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Samples per call of [`sample_flat`] when streaming.
const STREAM_BATCH: usize = 8192;

/// Streams `count` draws through per-worker accumulators without holding
/// them all: worker `w` uses substream `w` of `seed` and folds each draw
/// (a slice of length `dim`) into its own accumulator. Accumulators come
/// back in worker order so the caller can merge deterministically.
pub(crate) fn fold_parallel<A, I, F>(
    spec: &MeasureSpec,
    seed: u64,
    count: usize,
    workers: usize,
    init: I,
    visit: F,
) -> Result<Vec<A>>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, &[f64]) + Sync,
{
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let cfg = SamplerConfig::default();
    split_counts(count, workers)
        .into_par_iter()
        .enumerate()
        .map(|(w, c)| {
            let mut acc = init();
            let mut rng = substream(seed, w as u64);
            let mut left = c;
            while left > 0 {
                let batch = left.min(STREAM_BATCH);
                let flat = sample_flat(spec, None, &mut rng, batch, &cfg)?;
                for x in flat.chunks_exact(spec.dim) {
                    visit(&mut acc, x);
                }
                left -= batch;
            }
            Ok(acc)
        })
        .collect()
}

impl MeasureSpec {
    /// `count` i.i.d. draws (hit-and-run for `uniform_polytope`).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Result<Vec<DVector<f64>>> {
        self.sample_with(rng, count, &SamplerConfig::default())
    }

    pub fn sample_with<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        count: usize,
        cfg: &SamplerConfig,
    ) -> Result<Vec<DVector<f64>>> {
        let flat = sample_flat(self, None, rng, count, cfg)?;
        Ok(flat
            .chunks_exact(self.dim)
            .map(DVector::from_column_slice)
            .collect())
    }

    /// Parallel sampling into a flat row-major buffer of `count · dim` values.
    pub fn sample_parallel(
        &self,
        seed: u64,
        count: usize,
        workers: usize,
        cfg: &SamplerConfig,
    ) -> Result<Vec<f64>> {
        sample_parallel_flat(self, None, seed, count, workers, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn truncated_exponential_stays_in_range_for_huge_rates() {
        let mut rng = stream(1);
        for rate in [-1e6, -800.0, -1.0, 0.0, 1e-14, 3.0, 900.0, 1e6] {
            for _ in 0..200 {
                let t = truncated_exponential(&mut rng, rate, -1.5, 2.0);
                assert!((-1.5..=2.0).contains(&t), "rate {rate} gave {t}");
                assert!(t.is_finite());
            }
        }
    }

    #[test]
    fn truncated_exponential_mean_matches_closed_form() {
        let mut rng = stream(2);
        let (rate, lo, hi) = (2.0, -1.0, 1.0);
        let n = 200_000;
        let mean = (0..n)
            .map(|_| truncated_exponential(&mut rng, rate, lo, hi))
            .sum::<f64>()
            / n as f64;
        // mean of a truncated exponential on [-1, 1]: coth(λ) - 1/λ
        let exact = 1.0 / rate.tanh() - 1.0 / rate;
        assert!((mean - exact).abs() < 5.0 * 0.6 / (n as f64).sqrt(), "{mean} vs {exact}");
    }

    #[test]
    fn parallel_sampling_is_a_function_of_seed_and_workers() {
        let spec = MeasureSpec::polytope(2, super::super::tests::triangle()).unwrap();
        let cfg = SamplerConfig::default();
        let a = spec.sample_parallel(11, 1000, 3, &cfg).unwrap();
        let b = spec.sample_parallel(11, 1000, 3, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2000);
        let c = spec.sample_parallel(11, 1000, 2, &cfg).unwrap();
        assert_ne!(a, c);
    }
}
