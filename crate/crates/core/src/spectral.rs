//! Diagonalized conservative systems: spectra, states on the eigenbasis,
//! filtered classes and exact continuous/discrete propagation.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::schemes::Scheme;

/// Tag attached to each eigenmode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModeLabel {
    /// Fourier index `j` of `exp(2 i j pi x)` on the circle.
    Fourier(i64),
    /// Wave mode `sqrt(2) sin(j pi x)` on the branch `exp(+- i j pi t)`.
    Wave { j: u64, branch: Branch },
    /// Plain position in a user supplied frequency list.
    Index(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    Plus,
    Minus,
}

/// Purely imaginary spectrum `i mu_j` of a skew-adjoint operator, truncated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    frequencies: Vec<f64>,
    labels: Vec<ModeLabel>,
}

impl Spectrum {
    pub fn new(frequencies: Vec<f64>, labels: Vec<ModeLabel>) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(Error::InvalidParameter {
                name: "frequencies",
                reason: "spectrum must hold at least one mode".into(),
            });
        }
        if frequencies.len() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: frequencies.len(),
                found: labels.len(),
            });
        }
        if let Some(bad) = frequencies.iter().find(|m| !m.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "frequencies",
                reason: format!("non-finite frequency {bad}"),
            });
        }
        if let Some(w) = frequencies.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter {
                name: "frequencies",
                reason: format!(
                    "frequencies must be strictly increasing (mode {} = {} then {})",
                    w,
                    frequencies[w],
                    frequencies[w + 1]
                ),
            });
        }
        Ok(Self {
            frequencies,
            labels,
        })
    }

    /// Spectrum from an arbitrary increasing frequency list, labelled by position.
    pub fn from_frequencies(frequencies: Vec<f64>) -> Result<Self> {
        let labels = (0..frequencies.len()).map(ModeLabel::Index).collect();
        Self::new(frequencies, labels)
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn labels(&self) -> &[ModeLabel] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Indices of the modes kept by `band`.
    pub fn band_indices(&self, band: &FilterBand) -> Vec<usize> {
        self.frequencies
            .iter()
            .enumerate()
            .filter(|(_, m)| band.contains(**m))
            .map(|(i, _)| i)
            .collect()
    }

    /// Largest `|mu_j|`.
    pub fn max_abs_frequency(&self) -> f64 {
        self.frequencies.iter().fold(0.0, |acc, m| acc.max(m.abs()))
    }
}

/// Transport on the unit circle: `mu_j = 2 pi j`, `j = -N..=N`.
pub fn make_transport_spectrum(n: i64) -> Result<Spectrum> {
    if n < 1 {
        return Err(Error::InvalidParameter {
            name: "N",
            reason: format!("truncation level must be >= 1, got {n}"),
        });
    }
    let (frequencies, labels) = (-n..=n)
        .map(|j| (2.0 * PI * j as f64, ModeLabel::Fourier(j)))
        .unzip();
    Spectrum::new(frequencies, labels)
}

/// Dirichlet wave equation on `(0,1)`: `mu = +- j pi`, `j = 1..=N`, ordered increasingly.
pub fn make_wave_spectrum(n: u64) -> Result<Spectrum> {
    if n < 1 {
        return Err(Error::InvalidParameter {
            name: "N",
            reason: "truncation level must be >= 1, got 0".into(),
        });
    }
    let minus = (1..=n).rev().map(|j| {
        (
            -(j as f64) * PI,
            ModeLabel::Wave {
                j,
                branch: Branch::Minus,
            },
        )
    });
    let plus = (1..=n).map(|j| {
        (
            j as f64 * PI,
            ModeLabel::Wave {
                j,
                branch: Branch::Plus,
            },
        )
    });
    let (frequencies, labels) = minus.chain(plus).unzip();
    Spectrum::new(frequencies, labels)
}

/// Frequency band `lo < |mu| <= hi`.
///
/// `lo = 0` selects the whole filtered class `|mu| <= hi`, zero frequency included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterBand {
    pub lo: f64,
    pub hi: f64,
}

impl FilterBand {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "band",
                reason: format!("need 0 <= lo < hi, got lo = {lo}, hi = {hi}"),
            });
        }
        Ok(Self { lo, hi })
    }

    /// The filtered class `|mu| <= hi`.
    pub fn up_to(hi: f64) -> Result<Self> {
        Self::new(0.0, hi)
    }

    pub fn contains(&self, mu: f64) -> bool {
        let a = mu.abs();
        a <= self.hi && (self.lo == 0.0 || a > self.lo)
    }
}

/// Coefficients on the orthonormal eigenbasis of a [`Spectrum`].
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    spectrum: Arc<Spectrum>,
    coeffs: Vec<Complex64>,
}

impl State {
    pub fn new(spectrum: Arc<Spectrum>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != spectrum.len() {
            return Err(Error::LengthMismatch {
                expected: spectrum.len(),
                found: coeffs.len(),
            });
        }
        Ok(Self { spectrum, coeffs })
    }

    pub fn zeros(spectrum: Arc<Spectrum>) -> Self {
        let n = spectrum.len();
        Self {
            spectrum,
            coeffs: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Single normalized eigenmode.
    pub fn mode(spectrum: Arc<Spectrum>, index: usize) -> Result<Self> {
        if index >= spectrum.len() {
            return Err(Error::InvalidParameter {
                name: "index",
                reason: format!("mode {index} out of range for {} modes", spectrum.len()),
            });
        }
        let mut s = Self::zeros(spectrum);
        s.coeffs[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// Random coefficients, uniform in the unit square, on the modes of `band`.
    pub fn random_in_band<R: Rng + ?Sized>(
        spectrum: Arc<Spectrum>,
        band: &FilterBand,
        rng: &mut R,
    ) -> Self {
        let coeffs = spectrum
            .frequencies()
            .iter()
            .map(|&m| {
                if band.contains(m) {
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Self { spectrum, coeffs }
    }

    pub fn spectrum(&self) -> &Arc<Spectrum> {
        &self.spectrum
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// X-norm, `sqrt(sum |a_j|^2)`.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        self.map_coeffs(|_, c| c * factor)
    }

    pub fn add(&self, other: &State) -> Result<Self> {
        self.check_same_spectrum(other)?;
        Ok(self.map_coeffs(|i, c| c + other.coeffs[i]))
    }

    pub fn sub(&self, other: &State) -> Result<Self> {
        self.check_same_spectrum(other)?;
        Ok(self.map_coeffs(|i, c| c - other.coeffs[i]))
    }

    /// `||self - other|| / ||other||`, or the absolute distance when `other` vanishes.
    pub fn relative_distance(&self, other: &State) -> Result<f64> {
        let diff = self.sub(other)?.norm();
        let scale = other.norm();
        Ok(if scale > 0.0 { diff / scale } else { diff })
    }

    fn check_same_spectrum(&self, other: &State) -> Result<()> {
        if Arc::ptr_eq(&self.spectrum, &other.spectrum) || self.spectrum == other.spectrum {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: "state",
                reason: "states live on different spectra".into(),
            })
        }
    }

    fn map_coeffs(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        Self {
            spectrum: Arc::clone(&self.spectrum),
            coeffs: self.coeffs.iter().enumerate().map(|(i, &c)| f(i, c)).collect(),
        }
    }
}

/// Zeroes every mode outside `band`.
pub fn filter(state: &State, band: &FilterBand) -> State {
    let freqs = state.spectrum.frequencies();
    state.map_coeffs(|i, c| {
        if band.contains(freqs[i]) {
            c
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Exact flow `a_j -> a_j exp(i mu_j t)`.
pub fn evolve_continuous(state: &State, t: f64) -> State {
    let freqs = state.spectrum.frequencies();
    state.map_coeffs(|i, c| c * Complex64::cis(freqs[i] * t))
}

/// `k` steps of the conservative scheme, `a_j -> a_j exp(i f(mu_j tau) k)`.
pub fn evolve_discrete(state: &State, k: i64, scheme: &Scheme, tau: f64) -> Result<State> {
    let phases = discrete_phases(state, scheme, tau)?;
    let kf = k as f64;
    Ok(state.map_coeffs(|i, c| match phases[i] {
        Some(p) => c * Complex64::cis(p * kf),
        None => c,
    }))
}

/// One-step phases `f(mu_j tau)` of the nonzero modes; `None` for vanishing coefficients.
pub(crate) fn discrete_phases(state: &State, scheme: &Scheme, tau: f64) -> Result<Vec<Option<f64>>> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tau",
            reason: format!("time step must be positive, got {tau}"),
        });
    }
    let radius = scheme.radius();
    state
        .coeffs
        .iter()
        .zip(state.spectrum.frequencies())
        .enumerate()
        .map(|(i, (c, &mu))| {
            if c.norm_sqr() == 0.0 {
                return Ok(None);
            }
            let alpha = mu * tau;
            if alpha.abs() >= radius {
                return Err(Error::FrequencyOutOfSchemeDomain {
                    mode: i,
                    alpha: alpha.abs(),
                    radius,
                });
            }
            Ok(Some(scheme.f(alpha)?))
        })
        .collect()
}

/// `sqrt(sum |a_j|^2 (1 + mu_j^2)^r)`.
pub fn norm_r(state: &State, r: f64) -> f64 {
    state
        .coeffs
        .iter()
        .zip(state.spectrum.frequencies())
        .map(|(c, mu)| c.norm_sqr() * (1.0 + mu * mu).powf(r))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::Scheme;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn transport_spectrum_n1() {
        let s = make_transport_spectrum(1).unwrap();
        assert_eq!(s.frequencies(), &[-2.0 * PI, 0.0, 2.0 * PI]);
        assert_eq!(s.labels()[2], ModeLabel::Fourier(1));
    }

    #[test]
    fn transport_spectrum_rejects_zero() {
        assert!(matches!(
            make_transport_spectrum(0),
            Err(Error::InvalidParameter { name: "N", .. })
        ));
    }

    #[test]
    fn transport_spectrum_n3_increasing() {
        let s = make_transport_spectrum(3).unwrap();
        assert_eq!(s.len(), 7);
        assert!(s.frequencies().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn wave_spectrum_n2() {
        let s = make_wave_spectrum(2).unwrap();
        assert_eq!(s.frequencies(), &[-2.0 * PI, -PI, PI, 2.0 * PI]);
        assert_eq!(
            s.labels()[0],
            ModeLabel::Wave {
                j: 2,
                branch: Branch::Minus
            }
        );
        let one = make_wave_spectrum(1).unwrap();
        assert_eq!(one.frequencies(), &[-PI, PI]);
    }

    #[test]
    fn wave_spectrum_is_symmetric() {
        let s = make_wave_spectrum(9).unwrap();
        let f = s.frequencies();
        for i in 0..f.len() {
            assert_eq!(f[i], -f[f.len() - 1 - i]);
        }
    }

    #[test]
    fn spectrum_rejects_unsorted() {
        assert!(Spectrum::from_frequencies(vec![0.0, 0.0]).is_err());
        assert!(Spectrum::from_frequencies(vec![]).is_err());
    }

    #[test]
    fn band_validation() {
        assert!(FilterBand::new(1.0, 1.0).is_err());
        assert!(FilterBand::new(-1.0, 1.0).is_err());
        assert!(FilterBand::new(0.0, 1.0).is_ok());
    }

    #[test]
    fn filter_keeps_zero_and_two_pi_below_seven() {
        let spec = Arc::new(Spectrum::from_frequencies(vec![0.0, 2.0 * PI, 4.0 * PI, 6.0 * PI]).unwrap());
        let s = State::new(spec, vec![c(1.0, 0.0); 4]).unwrap();
        let out = filter(&s, &FilterBand::new(0.0, 7.0).unwrap());
        assert_eq!(
            out.coeffs(),
            &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]
        );
    }

    #[test]
    fn filter_full_band_is_identity() {
        let spec = Arc::new(make_transport_spectrum(4).unwrap());
        let s = State::new(spec, (0..9).map(|i| c(i as f64, -1.0)).collect()).unwrap();
        assert_eq!(filter(&s, &FilterBand::new(0.0, 100.0).unwrap()), s);
    }

    #[test]
    fn filter_lower_edge_is_exclusive() {
        let spec = Arc::new(make_transport_spectrum(2).unwrap());
        let idx = spec.frequencies().iter().position(|&m| m == 2.0 * PI).unwrap();
        let s = State::mode(spec, idx).unwrap();
        let out = filter(&s, &FilterBand::new(2.0 * PI, 4.0 * PI).unwrap());
        assert_eq!(out.norm(), 0.0);
    }

    #[test]
    fn continuous_identity_and_periodicity() {
        let spec = Arc::new(make_transport_spectrum(1).unwrap());
        let s = State::new(Arc::clone(&spec), vec![c(1.0, 2.0), c(0.5, 0.0), c(-1.0, 1.0)]).unwrap();
        assert_eq!(evolve_continuous(&s, 0.0), s);
        let single = State::mode(spec, 2).unwrap();
        let out = evolve_continuous(&single, 1.0);
        assert!((out.coeffs()[2] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn discrete_midpoint_quarter_turn() {
        let spec = Arc::new(Spectrum::from_frequencies(vec![2.0]).unwrap());
        let s = State::mode(spec, 0).unwrap();
        let out = evolve_discrete(&s, 1, &Scheme::midpoint(), 1.0).unwrap();
        assert!((out.coeffs()[0] - c(0.0, 1.0)).norm() < 1e-15);
        assert_eq!(evolve_discrete(&s, 0, &Scheme::midpoint(), 1.0).unwrap(), s);
    }

    #[test]
    fn discrete_rejects_modes_outside_domain() {
        let spec = Arc::new(Spectrum::from_frequencies(vec![1.0, 4.0]).unwrap());
        let s = State::new(Arc::clone(&spec), vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let err = evolve_discrete(&s, 3, &Scheme::gauss4(), 1.0).unwrap_err();
        assert!(matches!(err, Error::FrequencyOutOfSchemeDomain { mode: 1, .. }));
        // zero coefficients outside the domain are ignored
        let ok = State::new(spec, vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(evolve_discrete(&ok, 3, &Scheme::gauss4(), 1.0).is_ok());
    }

    #[test]
    fn norm_r_cases() {
        let spec = Arc::new(Spectrum::from_frequencies(vec![0.0]).unwrap());
        let s = State::new(spec, vec![c(3.0, 0.0)]).unwrap();
        for r in [-2.0, 0.0, 0.5, 3.0] {
            assert!((norm_r(&s, r) - 3.0).abs() < 1e-15);
        }
        let spec = Arc::new(make_transport_spectrum(2).unwrap());
        let s = State::new(Arc::clone(&spec), (0..5).map(|i| c(1.0, i as f64)).collect()).unwrap();
        assert!((norm_r(&s, 0.0) - s.norm()).abs() < 1e-15);
    }

    #[test]
    fn norm_r_negative_one_on_two_pi() {
        let spec = Arc::new(Spectrum::from_frequencies(vec![2.0 * PI]).unwrap());
        let s = State::mode(spec, 0).unwrap();
        // 1/sqrt(1 + 4 pi^2), evaluated with 50 digits
        let expected = 0.157_176_725_477_589_84;
        assert!((norm_r(&s, -1.0) - expected).abs() < 1e-16);
    }
}
