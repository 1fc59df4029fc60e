//! Scale-`tau` Fourier transform of sequences on the grid `tau Z`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::periodic_trapezoid;

/// Minimum node count for the inverse transform.
pub const MIN_QUAD_NODES: usize = 256;

/// Finitely supported sequence `u(k tau)`, `k = k_min .. k_min + values.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    tau: f64,
    k_min: i64,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(tau: f64, k_min: i64, values: Vec<Complex64>) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "tau",
                reason: format!("grid step must be positive, got {tau}"),
            });
        }
        Ok(Self { tau, k_min, values })
    }

    /// Kronecker sequence with value 1 at `k`.
    pub fn delta(tau: f64, k: i64) -> Result<Self> {
        Self::new(tau, k, vec![Complex64::new(1.0, 0.0)])
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn k_min(&self) -> i64 {
        self.k_min
    }

    /// Last index of the support, or `k_min - 1` when empty.
    pub fn k_max(&self) -> i64 {
        self.k_min + self.values.len() as i64 - 1
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn support_len(&self) -> usize {
        self.values.len()
    }

    pub fn at(&self, k: i64) -> Complex64 {
        let i = k - self.k_min;
        if i >= 0 && (i as usize) < self.values.len() {
            self.values[i as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn nyquist(&self) -> f64 {
        PI / self.tau
    }
}

/// `tau sum_k u(k tau) exp(-i mu k tau)` for `|mu| < pi / tau`.
pub fn dft(u: &GridFunction, mu: f64) -> Result<Complex64> {
    let limit = u.nyquist();
    if !(mu.abs() < limit) {
        return Err(Error::NyquistViolation { freq: mu, limit });
    }
    Ok(dft_unchecked(u, mu))
}

fn dft_unchecked(u: &GridFunction, mu: f64) -> Complex64 {
    let theta = mu * u.tau;
    let sum: Complex64 = u
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| v * Complex64::cis(-theta * (u.k_min + i as i64) as f64))
        .sum();
    sum * u.tau
}

/// Default node count: eight per support point, at least [`MIN_QUAD_NODES`].
pub fn default_quad_nodes(support_len: usize) -> usize {
    (8 * support_len).max(MIN_QUAD_NODES)
}

/// `(1/2pi) int_{-pi/tau}^{pi/tau} v(mu) exp(i mu k tau) dmu` by the periodic trapezoid rule.
pub fn idft(v: impl Fn(f64) -> Complex64, tau: f64, k: i64, quad_nodes: usize) -> Complex64 {
    let nyq = PI / tau;
    let kt = k as f64 * tau;
    let sum: Complex64 = periodic_trapezoid(-nyq, 2.0 * nyq, quad_nodes.max(1))
        .into_iter()
        .map(|(mu, w)| v(mu) * Complex64::cis(mu * kt) * w)
        .sum();
    sum / (2.0 * PI)
}

/// Both sides of `(1/2pi) int |F u|^2 = tau sum |u|^2`.
pub fn parseval_check(u: &GridFunction, quad_nodes: usize) -> (f64, f64) {
    let nyq = u.nyquist();
    let lhs: f64 = periodic_trapezoid(-nyq, 2.0 * nyq, quad_nodes.max(1))
        .into_iter()
        .map(|(mu, w)| dft_unchecked(u, mu).norm_sqr() * w)
        .sum::<f64>()
        / (2.0 * PI);
    let rhs = u.tau * u.values.iter().map(|v| v.norm_sqr()).sum::<f64>();
    (lhs, rhs)
}
