//! Numerical laboratory for the Riemannian structure that a log-concave
//! measure induces through its logarithmic Laplace transform.
//!
//! The crate is organised bottom-up:
//!
//! * [`measures`] – a zoo of log-concave measures with exact samplers and
//!   closed-form moments,
//! * [`loglaplace`] – the logarithmic Laplace transform `Λ`, its derivatives,
//!   its Legendre transform and the tilted measures, with closed-form,
//!   quadrature and Monte Carlo backends,
//! * [`riemann`] – the Hessian metric `∇²Λ`, the potential `Ψ`, path lengths,
//!   distance bounds and curvature probes,
//! * [`volumes`] – the volume identity `∫ det ∇²Λ = Vol(K)` and the sublevel
//!   sets `K_t`,
//! * [`shell`] – thin-shell functionals and the isotropic constant,
//! * [`harmonics`] – third-moment tensors and exact sphere integrals,
//! * [`cli`] – the reproducible experiment runner behind the `hgl` binary.

pub mod cli;
pub mod error;
pub mod estimate;
pub mod harmonics;
pub mod linalg;
pub mod loglaplace;
pub mod lp;
pub mod measures;
pub mod quadrature;
pub mod riemann;
pub mod rng;
pub mod shell;
pub mod volumes;

pub use error::{Error, Result};
pub use linalg::SpdMatrix;
pub use estimate::Estimate;
pub use loglaplace::{Backend, LaplaceEvaluator, TiltedMeasure};
pub use measures::{AffineMap, Kind, MeasureSpec};
pub use riemann::{Curve, RiemannianPackage, Side};
