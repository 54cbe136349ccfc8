//! Closed-form `Λ` for the product kinds.

/// `log(sinh x / x)`, continuous at 0.
pub(crate) fn log_sinhc(x: f64) -> f64 {
    let a = x.abs();
    if a < 0.1 {
        let x2 = x * x;
        x2 * (1.0 / 6.0 + x2 * (-1.0 / 180.0 + x2 * (1.0 / 2835.0 + x2 * (-1.0 / 37800.0 + x2 / 467775.0))))
    } else {
        a - std::f64::consts::LN_2 + (-(-2.0 * a).exp()).ln_1p() - a.ln()
    }
}

/// Langevin function `coth x - 1/x`, the mean of the tilted uniform law on
/// `[-1, 1]`.
pub(crate) fn langevin(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let x2 = x * x;
        x * (1.0 / 3.0 + x2 * (-1.0 / 45.0 + x2 * (2.0 / 945.0 + x2 * (-1.0 / 4725.0 + x2 * 2.0 / 93555.0))))
    } else {
        1.0 / x.tanh() - 1.0 / x
    }
}

/// Derivative of [`langevin`]: `1/x² - 1/sinh² x`.
pub(crate) fn langevin_prime(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let x2 = x * x;
        1.0 / 3.0 + x2 * (-1.0 / 15.0 + x2 * (2.0 / 189.0 + x2 * (-1.0 / 675.0 + x2 * 2.0 / 10395.0)))
    } else {
        let s = x.sinh();
        1.0 / (x * x) - 1.0 / (s * s)
    }
}

/// Per-coordinate closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum ClosedKind {
    /// `Λ(ξ) = |ξ|²/2`.
    Gaussian,
    /// `Λ(ξ) = Σ -ξᵢ - log(1 - ξᵢ)`.
    ProductExponential,
    /// `Λ(ξ) = Σ log(sinh(wξᵢ)/(wξᵢ))`.
    Cube { half_width: f64 },
}

impl ClosedKind {
    /// `(λ, λ', λ'')` of the one-dimensional factor at `z`.
    pub(crate) fn coordinate(&self, z: f64) -> (f64, f64, f64) {
        match *self {
            ClosedKind::Gaussian => (0.5 * z * z, z, 1.0),
            ClosedKind::ProductExponential => {
                let q = 1.0 - z;
                (-z - (-z).ln_1p(), z / q, 1.0 / (q * q))
            }
            ClosedKind::Cube { half_width: w } => {
                let x = w * z;
                (log_sinhc(x), w * langevin(x), w * w * langevin_prime(x))
            }
        }
    }
}
