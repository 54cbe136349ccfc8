use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{sampling, AffineMap, Kind, MeasureSpec, SamplerConfig};

/// The probability measure `μ_ξ` with density `∝ e^{ξ·x}` relative to `base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltedMeasure {
    base: MeasureSpec,
    tilt: Vec<f64>,
}

/// Tilts `spec` by `xi`.
pub fn tilt(spec: &MeasureSpec, xi: &DVector<f64>) -> Result<TiltedMeasure> {
    TiltedMeasure::new(spec.clone(), xi.clone())
}

impl TiltedMeasure {
    pub fn new(base: MeasureSpec, tilt: DVector<f64>) -> Result<Self> {
        base.check_domain(&tilt)?;
        Ok(Self {
            base,
            tilt: tilt.iter().copied().collect(),
        })
    }

    pub fn base(&self) -> &MeasureSpec {
        &self.base
    }

    pub fn tilt(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.tilt)
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn is_untilted(&self) -> bool {
        self.tilt.iter().all(|&v| v == 0.0)
    }

    /// Tilting again composes: `(μ_ξ₁)_ξ = μ_{ξ₁+ξ}`.
    pub fn tilted(&self, xi: &DVector<f64>) -> Result<TiltedMeasure> {
        TiltedMeasure::new(self.base.clone(), self.tilt() + xi)
    }

    /// The tilt `Aᵗξ` seen by the undecorated core of the base.
    pub(crate) fn core_tilt(&self) -> DVector<f64> {
        match self.base.core().1 {
            Some(m) => m.pullback(&self.tilt()),
            None => self.tilt(),
        }
    }

    /// The tilted measure as a zoo member when the zoo is closed under this
    /// tilt: a tilted Gaussian is a translate and a tilted exponential product
    /// is a rescaled one.
    pub fn as_spec(&self) -> Option<MeasureSpec> {
        if self.is_untilted() {
            return Some(self.base.clone());
        }
        let (core, outer) = self.base.core();
        let tau = self.core_tilt();
        let n = core.dim();
        let inner = match core.kind() {
            Kind::GaussianStd => AffineMap::translation(tau),
            Kind::ProductExponential => {
                // rate 1-τ on t ≥ -1: t = (s + 1)/(1-τ) - 1 with s standard
                let scale = tau.map(|t| 1.0 / (1.0 - t));
                let shift = DVector::from_fn(n, |i, _| scale[i] - 1.0);
                AffineMap::new(DMatrix::from_diagonal(&scale), shift).ok()?
            }
            _ => return None,
        };
        let map = match outer {
            Some(o) => o.compose(&inner),
            None => inner,
        };
        MeasureSpec::affine_image(core, map).ok()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Result<Vec<DVector<f64>>> {
        self.sample_with(rng, count, &SamplerConfig::default())
    }

    /// Exact inverse-CDF draws for the product kinds, hit-and-run with exact
    /// tilted chord steps for bodies.
    pub fn sample_with<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        count: usize,
        cfg: &SamplerConfig,
    ) -> Result<Vec<DVector<f64>>> {
        let n = self.dim();
        let flat = sampling::sample_flat(&self.base, Some(&self.tilt()), rng, count, cfg)?;
        Ok(flat.chunks_exact(n).map(DVector::from_column_slice).collect())
    }

    /// Parallel draws into a flat row-major buffer.
    pub fn sample_parallel(
        &self,
        seed: u64,
        count: usize,
        workers: usize,
        cfg: &SamplerConfig,
    ) -> Result<Vec<f64>> {
        sampling::sample_parallel_flat(&self.base, Some(&self.tilt()), seed, count, workers, cfg)
    }
}

impl TryFrom<MeasureSpec> for TiltedMeasure {
    type Error = Error;

    fn try_from(spec: MeasureSpec) -> Result<Self> {
        let n = spec.dim();
        TiltedMeasure::new(spec, DVector::zeros(n))
    }
}
