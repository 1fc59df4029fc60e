//! Wave packets on the circle concentrated at frequency `delta / tau`, used to
//! show that observability fails below the critical time.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::Cutoff;
use crate::quadrature::{GaussLegendre, PANEL_ORDER};
use crate::spectral::{ModeLabel, Spectrum, State};

/// Smooth profile supported in `(-1, 1)` with unit `L^2` norm.
///
/// A Gaussian of width `sigma` times a plateau cutoff on `[-1/2, 1/2]`. The
/// Gaussian keeps the Fourier tail of the profile small, so the packet
/// localizes in space at the rate the construction predicts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketProfile {
    sigma: f64,
    cutoff: Cutoff,
    scale: f64,
}

impl PacketProfile {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidParameter {
                name: "sigma",
                reason: format!("must be positive, got {sigma}"),
            });
        }
        let mut p = Self {
            sigma,
            cutoff: Cutoff::new(0.5, 1.0)?,
            scale: 1.0,
        };
        let rule = GaussLegendre::new(PANEL_ORDER);
        let mass: f64 = rule
            .composite(-1.0, 1.0, 64)
            .into_iter()
            .map(|(x, w)| p.eval(x).powi(2) * w)
            .sum();
        p.scale = 1.0 / mass.sqrt();
        Ok(p)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.scale * (-0.5 * (x / self.sigma).powi(2)).exp() * self.cutoff.eval(x)
    }
}

impl Default for PacketProfile {
    fn default() -> Self {
        Self::new(0.2).expect("positive width")
    }
}

/// Smallest truncation `N` whose modes `|j| <= N` hold the packet.
pub fn packet_truncation(tau: f64, delta: f64) -> i64 {
    ((delta / tau + 1.0 / tau.sqrt()) / (2.0 * PI)).ceil() as i64 + 1
}

/// `a_j = tau^(1/4) chi(sqrt(tau) 2 pi j - delta / sqrt(tau)) exp(-2 i pi j x0)` on a transport spectrum.
pub fn sharpness_packet(
    spectrum: &Arc<Spectrum>,
    tau: f64,
    delta: f64,
    x0: f64,
    profile: &PacketProfile,
) -> Result<State> {
    if !(x0 > 0.0 && x0 < 1.0) {
        return Err(Error::InvalidParameter {
            name: "x0",
            reason: format!("concentration point must lie in (0, 1), got {x0}"),
        });
    }
    if !(tau > 0.0 && delta > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tau",
            reason: format!("need tau > 0 and delta > 0, got {tau}, {delta}"),
        });
    }
    let mut available = i64::MAX;
    let mut js = Vec::with_capacity(spectrum.len());
    for label in spectrum.labels() {
        match label {
            ModeLabel::Fourier(j) => js.push(*j),
            other => {
                return Err(Error::InvalidParameter {
                    name: "spectrum",
                    reason: format!("packet lives on Fourier modes, found {other:?}"),
                })
            }
        }
    }
    if let Some(max) = js.iter().map(|j| j.abs()).max() {
        available = available.min(max);
    }
    let required = packet_truncation(tau, delta);
    if available < required {
        return Err(Error::TruncationTooSmall {
            required,
            available,
        });
    }
    let st = tau.sqrt();
    let amp = tau.powf(0.25);
    let coeffs = js
        .iter()
        .map(|&j| {
            let x = st * 2.0 * PI * j as f64 - delta / st;
            let v = profile.eval(x);
            if v == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::cis(-2.0 * PI * j as f64 * x0) * (amp * v)
            }
        })
        .collect();
    State::new(Arc::clone(spectrum), coeffs)
}

/// `int |y(x)|^2 dx` over the part of the circle at geodesic distance `> radius` from `x0`,
/// with `y(x) = sum_j a_j exp(2 i pi j x)`, by the midpoint rule on `grid` cells.
pub fn packet_outside_mass(state: &State, x0: f64, radius: f64, grid: usize) -> Result<f64> {
    let terms: Vec<(f64, Complex64)> = state
        .spectrum()
        .labels()
        .iter()
        .zip(state.coeffs())
        .filter(|(_, c)| c.norm_sqr() > 0.0)
        .map(|(label, c)| match label {
            ModeLabel::Fourier(j) => Ok((2.0 * PI * *j as f64, *c)),
            other => Err(Error::InvalidParameter {
                name: "state",
                reason: format!("outside mass needs Fourier modes, found {other:?}"),
            }),
        })
        .collect::<Result<_>>()?;
    let h = 1.0 / grid as f64;
    let mass = (0..grid)
        .map(|i| {
            let x = (i as f64 + 0.5) * h;
            let d = (x - x0).rem_euclid(1.0);
            if d.min(1.0 - d) <= radius {
                return 0.0;
            }
            let y: Complex64 = terms.iter().map(|(w, c)| c * Complex64::cis(w * x)).sum();
            y.norm_sqr() * h
        })
        .sum();
    Ok(mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{make_transport_spectrum, FilterBand};

    #[test]
    fn profile_is_normalized_and_supported() {
        let p = PacketProfile::default();
        let rule = GaussLegendre::new(PANEL_ORDER);
        let m: f64 = rule
            .composite(-1.0, 1.0, 128)
            .into_iter()
            .map(|(x, w)| p.eval(x).powi(2) * w)
            .sum();
        assert!((m - 1.0).abs() < 1e-12);
        assert_eq!(p.eval(1.0), 0.0);
        assert_eq!(p.eval(-1.2), 0.0);
    }

    #[test]
    fn packet_norm_tends_to_inverse_two_pi() {
        let p = PacketProfile::default();
        let tau = 1e-3;
        let spec = Arc::new(make_transport_spectrum(packet_truncation(tau, 1.0)).unwrap());
        let y = sharpness_packet(&spec, tau, 1.0, 0.5, &p).unwrap();
        let ratio = y.norm().powi(2) * 2.0 * PI;
        assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn packet_sits_in_the_band() {
        let p = PacketProfile::default();
        let tau = 1e-4;
        let spec = Arc::new(make_transport_spectrum(packet_truncation(tau, 1.0)).unwrap());
        let y = sharpness_packet(&spec, tau, 1.0, 0.3, &p).unwrap();
        let band = FilterBand::new(0.8 / tau, 1.2 / tau).unwrap();
        let inside = crate::spectral::filter(&y, &band);
        assert!(y.sub(&inside).unwrap().norm() == 0.0);
    }

    #[test]
    fn truncation_too_small() {
        let p = PacketProfile::default();
        let spec = Arc::new(make_transport_spectrum(10).unwrap());
        assert!(matches!(
            sharpness_packet(&spec, 1e-3, 1.0, 0.5, &p),
            Err(Error::TruncationTooSmall { .. })
        ));
    }

    #[test]
    fn outside_mass_is_small_part() {
        let p = PacketProfile::default();
        let tau = 1e-4;
        let spec = Arc::new(make_transport_spectrum(packet_truncation(tau, 1.0)).unwrap());
        let y = sharpness_packet(&spec, tau, 1.0, 0.5, &p).unwrap();
        let total = packet_outside_mass(&y, 0.5, 0.0, 4000).unwrap();
        assert!((total - y.norm().powi(2)).abs() < 1e-10);
        let out = packet_outside_mass(&y, 0.5, 0.3, 4000).unwrap();
        assert!(out < 0.1 * total);
    }
}
