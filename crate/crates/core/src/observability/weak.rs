//! Point observation of the string `y_tt = y_xx` on `(0, 1)` at an interior
//! point `x0`, which only controls a weakened norm.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{discrete_gramian, hermitian_extremes, point_obs_wave};
use crate::error::{Error, Result};
use crate::schemes::Scheme;
use crate::spectral::{make_wave_spectrum, Branch, FilterBand, ModeLabel, Spectrum, State};

/// `|sin(j pi x0)|` below this counts as a vanishing observation.
pub const DEGENERATE_SIN: f64 = 1e-12;

/// `sin(j pi x0)`, reduced through the nearest integer to `j x0` so large `j` keep accuracy.
pub fn sin_j_pi_x(j: u64, x0: f64) -> f64 {
    let y = j as f64 * x0;
    let n = y.round();
    let s = (std::f64::consts::PI * (y - n)).sin();
    if (n as i64) % 2 == 0 {
        s
    } else {
        -s
    }
}

fn wave_label(label: &ModeLabel) -> Result<(u64, Branch)> {
    match label {
        ModeLabel::Wave { j, branch } => Ok((*j, *branch)),
        other => Err(Error::InvalidParameter {
            name: "spectrum",
            reason: format!("expected wave modes, found {other:?}"),
        }),
    }
}

/// Builds the branch coefficients of the solution with `y(0) = sum alpha_j sqrt(2) sin(j pi x)`
/// and `y_t(0) = sum beta_j sqrt(2) sin(j pi x)`; `alpha[j-1]`, `beta[j-1]`.
pub fn wave_state(spectrum: &Arc<Spectrum>, alpha: &[Complex64], beta: &[Complex64]) -> Result<State> {
    if alpha.len() != beta.len() {
        return Err(Error::LengthMismatch {
            expected: alpha.len(),
            found: beta.len(),
        });
    }
    let r2 = std::f64::consts::SQRT_2;
    let coeffs = spectrum
        .labels()
        .iter()
        .map(|label| {
            let (j, branch) = wave_label(label)?;
            let i = (j - 1) as usize;
            let (a, b) = match (alpha.get(i), beta.get(i)) {
                (Some(a), Some(b)) => (*a, *b),
                _ => return Ok(Complex64::new(0.0, 0.0)),
            };
            let v = b / (j as f64 * std::f64::consts::PI) * Complex64::i();
            Ok(match branch {
                Branch::Plus => (a - v) / r2,
                Branch::Minus => (a + v) / r2,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    State::new(Arc::clone(spectrum), coeffs)
}

/// Inverse of [`wave_state`]: `(alpha_j, beta_j)` for `j = 1..=N`.
pub fn wave_data(state: &State) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for (label, c) in state.spectrum().labels().iter().zip(state.coeffs()) {
        let (j, branch) = wave_label(label)?;
        let slot = match branch {
            Branch::Plus => &mut plus,
            Branch::Minus => &mut minus,
        };
        let i = (j - 1) as usize;
        if slot.len() <= i {
            slot.resize(i + 1, Complex64::new(0.0, 0.0));
        }
        slot[i] = *c;
    }
    let n = plus.len().max(minus.len());
    plus.resize(n, Complex64::new(0.0, 0.0));
    minus.resize(n, Complex64::new(0.0, 0.0));
    let r2 = std::f64::consts::SQRT_2;
    let alpha = (0..n).map(|i| (plus[i] + minus[i]) / r2).collect();
    let beta = (0..n)
        .map(|i| {
            let jpi = (i + 1) as f64 * std::f64::consts::PI;
            (plus[i] - minus[i]) * Complex64::i() / r2 * jpi
        })
        .collect();
    Ok((alpha, beta))
}

/// `||Y||_*^2 = sum (|alpha_j|^2 + |beta_j|^2 / (j pi)^2) sin^2(j pi x0)`, square-rooted.
pub fn weak_star_norm(state: &State, x0: f64) -> Result<f64> {
    let mut sum = 0.0;
    for (label, c) in state.spectrum().labels().iter().zip(state.coeffs()) {
        let (j, _) = wave_label(label)?;
        sum += c.norm_sqr() * sin_j_pi_x(j, x0).powi(2);
    }
    Ok(sum.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiouvilleReport {
    pub x0: f64,
    pub r: f64,
    pub j_max: u64,
    pub passed: bool,
    /// smallest `C` with `(1 + (j pi)^2)^(r/2) <= C sin^2(j pi x0)` for `j <= J`
    pub best_constant: f64,
    /// the same constant over `j <= ceil(J / 10)`
    pub constant_at_tenth: f64,
    /// `1 / best_constant`
    pub min_margin: f64,
    pub first_failure: Option<u64>,
}

/// Checks `(1 + (j pi)^2)^(r/2) <= C sin^2(j pi x0)` for `j = 1..=J`.
///
/// Passes when no `sin(j pi x0)` vanishes and the best constant grows by less
/// than a factor 2 from `ceil(J/10)` to `J`, a numerical proxy for boundedness.
pub fn liouville_check(x0: f64, r: f64, j_max: u64) -> Result<LiouvilleReport> {
    if j_max == 0 {
        return Err(Error::InvalidParameter {
            name: "J",
            reason: "need J >= 1".into(),
        });
    }
    let tenth = j_max.div_ceil(10);
    let mut best: f64 = 0.0;
    let mut at_tenth = 0.0;
    let mut first_failure = None;
    for j in 1..=j_max {
        let s = sin_j_pi_x(j, x0);
        if s.abs() < DEGENERATE_SIN {
            first_failure = Some(j);
            best = f64::INFINITY;
            break;
        }
        let jp = j as f64 * std::f64::consts::PI;
        best = best.max((1.0 + jp * jp).powf(0.5 * r) / (s * s));
        if j == tenth {
            at_tenth = best;
        }
    }
    if first_failure.is_some() && at_tenth == 0.0 {
        at_tenth = f64::INFINITY;
    }
    let passed = first_failure.is_none() && best.is_finite() && best < 2.0 * at_tenth;
    Ok(LiouvilleReport {
        x0,
        r,
        j_max,
        passed,
        best_constant: best,
        constant_at_tenth: at_tenth,
        min_margin: 1.0 / best,
        first_failure,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakSweepRow {
    pub tau: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub delta: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub modes: usize,
}

/// Generalized Gramian eigenvalues `G v = lambda S v`, `S` the weak-norm weights,
/// for the midpoint (Newmark `beta = 1/4`) discretization of the string.
pub fn weak_obs_sweep(x0: f64, delta: f64, t_final: f64, taus: &[f64]) -> Result<Vec<WeakSweepRow>> {
    let scheme = Scheme::newmark(0.25)?;
    taus.par_iter()
        .map(|&tau| {
            let n = (delta / (std::f64::consts::PI * tau)).floor() as u64 + 1;
            let spectrum = make_wave_spectrum(n)?;
            let obs = point_obs_wave(&spectrum, x0)?;
            let band = FilterBand::up_to(delta / tau)?;
            let g = discrete_gramian(&spectrum, &obs, &scheme, tau, t_final, &band)?;
            let weights: Vec<f64> = g
                .modes
                .iter()
                .map(|&i| {
                    let b = obs.values()[i].norm();
                    if b < DEGENERATE_SIN {
                        let (j, _) = wave_label(&spectrum.labels()[i])?;
                        Err(Error::DegenerateSeminorm { j, value: b * b })
                    } else {
                        Ok(1.0 / b)
                    }
                })
                .collect::<Result<_>>()?;
            let n = weights.len();
            let scaled = nalgebra::DMatrix::from_fn(n, n, |r, c| g.matrix[(r, c)] * (weights[r] * weights[c]));
            let (lambda_min, lambda_max) = hermitian_extremes(&scaled)?;
            Ok(WeakSweepRow {
                tau,
                t_final,
                delta,
                lambda_min,
                lambda_max,
                modes: n,
            })
        })
        .collect()
}

/// Range of `1 + (beta - 1/4) alpha^2` over `|alpha| <= delta`: the per-mode ratio
/// between the stiffness weights of the two Newmark formulations.
pub fn formulation_weight_ratio(beta: f64, delta: f64) -> Result<(f64, f64)> {
    let scheme = Scheme::newmark(beta)?;
    if !(delta >= 0.0) || delta >= scheme.radius() {
        return Err(Error::BandExceedsScheme {
            delta,
            radius: scheme.radius(),
        });
    }
    let edge = 1.0 + (beta - 0.25) * delta * delta;
    Ok((edge.min(1.0), edge.max(1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sin_reduction_matches_direct() {
        for j in [1u64, 2, 7, 40] {
            let x = 0.37;
            let direct = (j as f64 * std::f64::consts::PI * x).sin();
            assert!((sin_j_pi_x(j, x) - direct).abs() < 1e-13);
        }
        assert!(sin_j_pi_x(3, 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn branch_maps_round_trip() {
        let spec = Arc::new(make_wave_spectrum(4).unwrap());
        let alpha: Vec<_> = (0..4).map(|i| Complex64::new(i as f64 + 1.0, -0.5)).collect();
        let beta: Vec<_> = (0..4).map(|i| Complex64::new(0.3, 2.0 * i as f64)).collect();
        let s = wave_state(&spec, &alpha, &beta).unwrap();
        let (a2, b2) = wave_data(&s).unwrap();
        for i in 0..4 {
            assert!((a2[i] - alpha[i]).norm() < 1e-13);
            assert!((b2[i] - beta[i]).norm() < 1e-12);
        }
        let x0 = 0.29;
        let direct: f64 = (0..4)
            .map(|i| {
                let jp = (i + 1) as f64 * std::f64::consts::PI;
                (alpha[i].norm_sqr() + beta[i].norm_sqr() / (jp * jp)) * sin_j_pi_x(i as u64 + 1, x0).powi(2)
            })
            .sum();
        assert!((weak_star_norm(&s, x0).unwrap().powi(2) - direct).abs() < 1e-12);
    }

    #[test]
    fn star_norm_degenerates_on_even_modes_at_half() {
        let spec = Arc::new(make_wave_spectrum(4).unwrap());
        let z = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let s = wave_state(&spec, &[z, one, z, one], &[z, one, z, z]).unwrap();
        assert!(weak_star_norm(&s, 0.5).unwrap() < 1e-15);
        assert!(weak_star_norm(&s, 2f64.sqrt() - 1.0).unwrap() > 0.1);
    }

    #[test]
    fn liouville_cases() {
        let x0 = 2f64.sqrt() - 1.0;
        let r = liouville_check(x0, -2.0, 10_000).unwrap();
        assert!(r.passed, "{r:?}");
        let rational = liouville_check(1.0 / 3.0, -2.0, 100).unwrap();
        assert!(!rational.passed);
        assert_eq!(rational.first_failure, Some(3));
        let flat = liouville_check(x0, 0.0, 10_000).unwrap();
        assert!(!flat.passed, "{flat:?}");
    }

    #[test]
    fn rational_point_refuses_weak_sweep() {
        let err = weak_obs_sweep(0.5, 1.0, 2.6, &[0.05]).unwrap_err();
        assert!(matches!(err, Error::DegenerateSeminorm { j, .. } if j % 2 == 0));
    }

    #[test]
    fn weight_ratio() {
        let (lo, hi) = formulation_weight_ratio(0.25, 3.0).unwrap();
        assert_eq!((lo, hi), (1.0, 1.0));
        let (lo, hi) = formulation_weight_ratio(0.0, 1.0).unwrap();
        assert!((lo - 0.75).abs() < 1e-15 && hi == 1.0);
        assert!(formulation_weight_ratio(0.0, 2.0).is_err());
    }
}
