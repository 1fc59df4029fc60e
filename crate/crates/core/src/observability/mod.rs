//! Observability and admissibility constants as extremal eigenvalues of
//! Gramians on filtered mode sets.
//!
//! For a state `a` on the band and observation values `b_j`, the observed
//! energy is the Hermitian form `a* G a`. The continuous Gramian integrates
//! over `t in (0, T)`; the discrete one sums over `k tau in [0, T)`.

pub mod packet;
pub mod weak;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::schemes::Scheme;
use crate::spectral::{FilterBand, ModeLabel, Spectrum};

pub use packet::{packet_outside_mass, sharpness_packet, PacketProfile};
pub use weak::{
    formulation_weight_ratio, liouville_check, weak_obs_sweep, weak_star_norm, LiouvilleReport,
    WeakSweepRow,
};

/// Per-mode observation values `b_j = B Phi_j` into a scalar observation space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservationOperator {
    values: Vec<Complex64>,
    order: u32,
    constant: f64,
}

impl ObservationOperator {
    /// Takes the best constant `C_p = max_j |b_j| / sqrt(mu_j^(2p) + 1)`.
    pub fn new(spectrum: &Spectrum, values: Vec<Complex64>, order: u32) -> Result<Self> {
        if values.len() != spectrum.len() {
            return Err(Error::LengthMismatch {
                expected: spectrum.len(),
                found: values.len(),
            });
        }
        let constant = values
            .iter()
            .zip(spectrum.frequencies())
            .map(|(b, mu)| b.norm() / growth(*mu, order))
            .fold(0.0, f64::max);
        Ok(Self {
            values,
            order,
            constant,
        })
    }

    /// Uses a given `C_p` and checks `|b_j|^2 <= C_p^2 (mu_j^(2p) + 1)` on every mode.
    pub fn with_constant(spectrum: &Spectrum, values: Vec<Complex64>, order: u32, constant: f64) -> Result<Self> {
        let op = Self::new(spectrum, values, order)?;
        for (i, (b, mu)) in op.values.iter().zip(spectrum.frequencies()).enumerate() {
            let bound = constant * growth(*mu, order);
            if b.norm() > bound * (1.0 + 1e-12) {
                return Err(Error::ObservationUnbounded {
                    mode: i,
                    value: b.norm(),
                    bound,
                });
            }
        }
        Ok(Self { constant, ..op })
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }
}

fn growth(mu: f64, order: u32) -> f64 {
    (mu.abs().powi(2 * order as i32) + 1.0).sqrt()
}

/// Point observation `y(t, 0)` on the circle: every Fourier mode observes 1.
pub fn point_obs_transport(spectrum: &Spectrum) -> ObservationOperator {
    ObservationOperator::new(spectrum, vec![Complex64::new(1.0, 0.0); spectrum.len()], 1)
        .expect("one value per mode")
}

/// Point observation `y(t, x0)` of the string on `(0, 1)`.
///
/// With modes `sqrt(2) sin(j pi x)` and branch coefficients
/// `c_pm = (alpha_j -+ i beta_j / (j pi)) / sqrt(2)`, both branches of mode `j`
/// observe `sin(j pi x0)`.
pub fn point_obs_wave(spectrum: &Spectrum, x0: f64) -> Result<ObservationOperator> {
    if !(x0 > 0.0 && x0 < 1.0) {
        return Err(Error::InvalidParameter {
            name: "x0",
            reason: format!("observation point must lie in (0, 1), got {x0}"),
        });
    }
    let values = spectrum
        .labels()
        .iter()
        .map(|label| match label {
            ModeLabel::Wave { j, .. } => Ok(Complex64::new(weak::sin_j_pi_x(*j, x0), 0.0)),
            other => Err(Error::InvalidParameter {
                name: "spectrum",
                reason: format!("wave observation needs wave modes, found {other:?}"),
            }),
        })
        .collect::<Result<Vec<_>>>()?;
    ObservationOperator::new(spectrum, values, 1)
}

/// Time model behind a Gramian.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TimeModel {
    Continuous,
    Discrete {
        scheme: String,
        tau: f64,
        k_start: i64,
        steps: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramianResult {
    pub matrix: DMatrix<Complex64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// spectrum indices of the rows, in order
    pub modes: Vec<usize>,
    pub t_final: f64,
    pub band: FilterBand,
    pub time: TimeModel,
}

impl GramianResult {
    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    /// Best observability constant `1 / lambda_min`.
    pub fn c_obs(&self) -> f64 {
        1.0 / self.lambda_min
    }

    /// Best admissibility constant `lambda_max`.
    pub fn admissibility(&self) -> f64 {
        self.lambda_max
    }

    /// Largest `|G - G*|` entry.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Observed energy `a* G a` of band coefficients `a`.
    pub fn quadratic_form(&self, a: &[Complex64]) -> f64 {
        let v = DVector::from_column_slice(a);
        (v.adjoint() * &self.matrix * &v)[(0, 0)].re
    }
}

/// Extremal eigenvalues of a Hermitian matrix.
pub fn hermitian_extremes(m: &DMatrix<Complex64>) -> Result<(f64, f64)> {
    if m.nrows() == 0 {
        return Err(Error::EmptyBand);
    }
    let eig = m.clone().symmetric_eigenvalues();
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Eigensolve(format!("non-finite eigenvalues in [{lo}, {hi}]")));
    }
    Ok((lo, hi))
}

/// Unit eigenvector of the smallest eigenvalue.
pub fn min_eigenvector(m: &DMatrix<Complex64>) -> Result<(f64, DVector<Complex64>)> {
    if m.nrows() == 0 {
        return Err(Error::EmptyBand);
    }
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let (i, lambda) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
    Ok((lambda, eig.eigenvectors.column(i).into_owned()))
}

fn band_modes(spectrum: &Spectrum, band: &FilterBand) -> Result<Vec<usize>> {
    let modes = spectrum.band_indices(band);
    if modes.is_empty() {
        Err(Error::EmptyBand)
    } else {
        Ok(modes)
    }
}

fn assemble(
    modes: &[usize],
    b: &[Complex64],
    entry: impl Fn(usize, usize) -> Complex64 + Sync,
) -> DMatrix<Complex64> {
    let n = modes.len();
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|r| {
            (0..n)
                .map(|c| {
                    if c < r {
                        Complex64::new(0.0, 0.0)
                    } else {
                        b[modes[r]].conj() * b[modes[c]] * entry(r, c)
                    }
                })
                .collect()
        })
        .collect();
    let mut m = DMatrix::from_fn(n, n, |r, c| rows[r][c]);
    // fill the lower triangle from the upper so the matrix is Hermitian to the bit
    for r in 0..n {
        m[(r, r)] = Complex64::new(m[(r, r)].re, 0.0);
        for c in 0..r {
            m[(r, c)] = m[(c, r)].conj();
        }
    }
    m
}

/// `int_0^T exp(i d t) dt`.
fn continuous_kernel(d: f64, t_final: f64) -> Complex64 {
    let x = 0.5 * d * t_final;
    let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
    Complex64::cis(x) * (t_final * sinc)
}

/// `sum_{k=k0}^{k0+K-1} exp(i theta k)`.
fn geometric_sum(theta: f64, k0: i64, count: usize) -> Complex64 {
    let kf = count as f64;
    let half = 0.5 * theta;
    let ratio = if half.sin() == 0.0 {
        kf
    } else {
        (half * kf).sin() / half.sin()
    };
    Complex64::cis(theta * (k0 as f64 + 0.5 * (kf - 1.0))) * ratio
}

/// `G_jl = conj(b_j) b_l int_0^T exp(i (mu_l - mu_j) t) dt` on the band.
pub fn continuous_gramian(
    spectrum: &Spectrum,
    obs: &ObservationOperator,
    band: &FilterBand,
    t_final: f64,
) -> Result<GramianResult> {
    check_time(t_final)?;
    check_obs(spectrum, obs)?;
    let modes = band_modes(spectrum, band)?;
    let mu = spectrum.frequencies();
    let matrix = assemble(&modes, obs.values(), |r, c| {
        continuous_kernel(mu[modes[c]] - mu[modes[r]], t_final)
    });
    let (lambda_min, lambda_max) = hermitian_extremes(&matrix)?;
    Ok(GramianResult {
        matrix,
        lambda_min,
        lambda_max,
        modes,
        t_final,
        band: *band,
        time: TimeModel::Continuous,
    })
}

/// Number of steps with `k tau in [0, T)`.
pub fn step_count(tau: f64, t_final: f64) -> usize {
    // the tolerance keeps T = K tau from picking up a spurious extra step
    ((t_final / tau) - 1e-9).ceil().max(0.0) as usize
}

/// Discrete Gramian over `k tau in [0, T)`.
pub fn discrete_gramian(
    spectrum: &Spectrum,
    obs: &ObservationOperator,
    scheme: &Scheme,
    tau: f64,
    t_final: f64,
    band: &FilterBand,
) -> Result<GramianResult> {
    check_time(t_final)?;
    let steps = step_count(tau, t_final);
    let mut g = discrete_gramian_window(spectrum, obs, scheme, tau, 0, steps, band)?;
    g.t_final = t_final;
    Ok(g)
}

/// Discrete Gramian `tau sum_{k=k_start}^{k_start+steps-1}`.
pub fn discrete_gramian_window(
    spectrum: &Spectrum,
    obs: &ObservationOperator,
    scheme: &Scheme,
    tau: f64,
    k_start: i64,
    steps: usize,
    band: &FilterBand,
) -> Result<GramianResult> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tau",
            reason: format!("time step must be positive, got {tau}"),
        });
    }
    if steps == 0 {
        return Err(Error::InvalidParameter {
            name: "T",
            reason: "observation window holds no time step".into(),
        });
    }
    check_obs(spectrum, obs)?;
    let modes = band_modes(spectrum, band)?;
    let mu = spectrum.frequencies();
    let reach = modes.iter().map(|&i| mu[i].abs()).fold(0.0, f64::max) * tau;
    if reach >= scheme.radius() {
        return Err(Error::BandExceedsScheme {
            delta: reach,
            radius: scheme.radius(),
        });
    }
    let phases: Vec<f64> = modes
        .iter()
        .map(|&i| scheme.f(mu[i] * tau))
        .collect::<Result<_>>()?;
    let matrix = assemble(&modes, obs.values(), |r, c| {
        geometric_sum(phases[c] - phases[r], k_start, steps) * tau
    });
    let (lambda_min, lambda_max) = hermitian_extremes(&matrix)?;
    Ok(GramianResult {
        matrix,
        lambda_min,
        lambda_max,
        modes,
        t_final: steps as f64 * tau,
        band: *band,
        time: TimeModel::Discrete {
            scheme: scheme.name().to_owned(),
            tau,
            k_start,
            steps,
        },
    })
}

fn check_time(t_final: f64) -> Result<()> {
    if t_final > 0.0 && t_final.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "T",
            reason: format!("observation time must be positive, got {t_final}"),
        })
    }
}

fn check_obs(spectrum: &Spectrum, obs: &ObservationOperator) -> Result<()> {
    if obs.values().len() == spectrum.len() {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            expected: spectrum.len(),
            found: obs.values().len(),
        })
    }
}

/// One row of a uniformity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub tau: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub delta: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    #[serde(rename = "C_obs")]
    pub c_obs: f64,
    pub modes: usize,
}

/// A system at one time step: its spectrum and observation.
pub type ObservedSystem = (Arc<Spectrum>, ObservationOperator);

/// Discrete Gramian extremes on the band `(0, delta / tau]` for each `tau`.
///
/// `family` builds the (possibly `tau` dependent) system; rows come back in
/// ladder order whatever the thread count.
pub fn uniformity_sweep<F>(family: F, scheme: &Scheme, delta: f64, t_final: f64, taus: &[f64]) -> Result<Vec<SweepRow>>
where
    F: Fn(f64) -> Result<ObservedSystem> + Sync,
{
    taus.par_iter()
        .map(|&tau| {
            let (spectrum, obs) = family(tau)?;
            let band = FilterBand::up_to(delta / tau)?;
            let g = discrete_gramian(&spectrum, &obs, scheme, tau, t_final, &band)?;
            Ok(SweepRow {
                tau,
                t_final,
                delta,
                lambda_min: g.lambda_min,
                lambda_max: g.lambda_max,
                c_obs: g.c_obs(),
                modes: g.mode_count(),
            })
        })
        .collect()
}

/// Transport on the circle with point observation, truncated to hold the band `delta / tau`.
pub fn transport_family(delta: f64) -> impl Fn(f64) -> Result<ObservedSystem> + Sync {
    move |tau| {
        let n = (delta / (2.0 * std::f64::consts::PI * tau)).ceil() as i64 + 1;
        let spectrum = Arc::new(crate::spectral::make_transport_spectrum(n)?);
        let obs = point_obs_transport(&spectrum);
        Ok((spectrum, obs))
    }
}

/// Frame bounds of `tau sum_{k tau in [0,T)} |sum_j a_j exp(i f(mu_j tau) k)|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InghamBounds {
    pub tau: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub c_lower: f64,
    pub c_upper: f64,
    pub modes: usize,
}

/// Discrete Ingham frame bounds for gapped frequencies with `|mu_j| tau <= delta`.
pub fn ingham_bounds(
    frequencies: &[f64],
    gap: f64,
    scheme: &Scheme,
    tau: f64,
    delta: f64,
    t_final: f64,
) -> Result<InghamBounds> {
    if !(gap > 0.0) {
        return Err(Error::InvalidParameter {
            name: "gap",
            reason: format!("must be positive, got {gap}"),
        });
    }
    for (i, w) in frequencies.windows(2).enumerate() {
        let found = w[1] - w[0];
        if found < gap * (1.0 - 1e-12) {
            return Err(Error::GapViolated {
                index: i,
                next: i + 1,
                found,
                gap,
            });
        }
    }
    for (i, mu) in frequencies.iter().enumerate() {
        let alpha = (mu * tau).abs();
        if alpha > delta * (1.0 + 1e-12) {
            return Err(Error::UnfilteredInput { mode: i, alpha, delta });
        }
    }
    let spectrum = Spectrum::from_frequencies(frequencies.to_vec())?;
    let ones = ObservationOperator::new(&spectrum, vec![Complex64::new(1.0, 0.0); spectrum.len()], 0)?;
    let hi = frequencies.iter().map(|m| m.abs()).fold(0.0, f64::max);
    let band = FilterBand::up_to(hi.max(f64::MIN_POSITIVE))?;
    let g = discrete_gramian(&spectrum, &ones, scheme, tau, t_final, &band)?;
    Ok(InghamBounds {
        tau,
        t_final,
        c_lower: g.lambda_min,
        c_upper: g.lambda_max,
        modes: g.mode_count(),
    })
}

/// `mu_j = 2 pi j` restricted to `|mu_j| tau <= delta`.
pub fn integer_lattice_frequencies(tau: f64, delta: f64) -> Vec<f64> {
    let jmax = (delta / (2.0 * std::f64::consts::PI * tau) * (1.0 + 1e-12)).floor() as i64;
    (-jmax..=jmax)
        .map(|j| 2.0 * std::f64::consts::PI * j as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{make_transport_spectrum, make_wave_spectrum};
    use std::f64::consts::PI;

    fn transport(n: i64) -> (Spectrum, ObservationOperator) {
        let s = make_transport_spectrum(n).unwrap();
        let b = point_obs_transport(&s);
        (s, b)
    }

    fn identity_defect(m: &DMatrix<Complex64>, scale: f64) -> f64 {
        let n = m.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { scale } else { 0.0 };
                worst = worst.max((m[(i, j)] - Complex64::new(want, 0.0)).norm());
            }
        }
        worst
    }

    #[test]
    fn transport_observation_is_certified() {
        let (s, b) = transport(5);
        assert!(b.values().iter().all(|v| *v == Complex64::new(1.0, 0.0)));
        assert_eq!(b.order(), 1);
        assert!((b.constant() - 1.0).abs() < 1e-15); // mu = 0 attains the max
        assert!(ObservationOperator::with_constant(&s, b.values().to_vec(), 1, 1.0).is_ok());
        assert!(matches!(
            ObservationOperator::with_constant(&s, b.values().to_vec(), 1, 0.5),
            Err(Error::ObservationUnbounded { .. })
        ));
    }

    #[test]
    fn wave_observation_values() {
        let s = make_wave_spectrum(6).unwrap();
        let b = point_obs_wave(&s, 0.5).unwrap();
        for (label, v) in s.labels().iter().zip(b.values()) {
            if let ModeLabel::Wave { j, .. } = label {
                if j % 2 == 0 {
                    assert!(v.norm() < 1e-15);
                }
            }
        }
        let b = point_obs_wave(&s, 2f64.sqrt() - 1.0).unwrap();
        assert!(b.values().iter().all(|v| v.norm() > 1e-3));
        // branch symmetry: the spectrum lists -N..-1 then 1..N
        let n = s.len();
        for i in 0..n / 2 {
            assert_eq!(b.values()[i].norm(), b.values()[n - 1 - i].norm());
        }
        assert!(point_obs_wave(&s, 1.0).is_err());
        let t = make_transport_spectrum(2).unwrap();
        assert!(point_obs_wave(&t, 0.3).is_err());
    }

    #[test]
    fn continuous_transport_periods() {
        let (s, b) = transport(6);
        let band = FilterBand::up_to(100.0).unwrap();
        let g1 = continuous_gramian(&s, &b, &band, 1.0).unwrap();
        assert!(identity_defect(&g1.matrix, 1.0) < 1e-12);
        assert!((g1.lambda_min - 1.0).abs() < 1e-12 && (g1.lambda_max - 1.0).abs() < 1e-12);
        let g2 = continuous_gramian(&s, &b, &band, 2.0).unwrap();
        assert!(identity_defect(&g2.matrix, 2.0) < 1e-12);
        let gh = continuous_gramian(&s, &b, &band, 0.5).unwrap();
        assert!(gh.lambda_min < 1.0);
        assert!(gh.hermitian_defect() == 0.0);
    }

    #[test]
    fn empty_band_rejected() {
        let (s, b) = transport(2);
        let band = FilterBand::new(100.0, 200.0).unwrap();
        assert!(matches!(continuous_gramian(&s, &b, &band, 1.0), Err(Error::EmptyBand)));
    }

    #[test]
    fn exact_phase_full_period_is_identity() {
        for k in [8usize, 25, 64] {
            let tau = 1.0 / k as f64;
            let (s, b) = transport(((k as i64) - 1) / 2);
            let band = FilterBand::up_to(PI / tau * 0.999).unwrap();
            let g = discrete_gramian(&s, &b, &Scheme::exact_phase(), tau, 1.0, &band).unwrap();
            assert!(identity_defect(&g.matrix, 1.0) < 1e-12, "K = {k}");
            assert!(matches!(g.time, TimeModel::Discrete { steps, .. } if steps == k));
        }
    }

    #[test]
    fn discrete_band_must_fit_scheme() {
        let (s, b) = transport(10);
        let band = FilterBand::up_to(70.0).unwrap();
        let err = discrete_gramian(&s, &b, &Scheme::gauss4(), 0.1, 1.0, &band).unwrap_err();
        assert!(matches!(err, Error::BandExceedsScheme { .. }));
    }

    #[test]
    fn geometric_sum_matches_loop() {
        for (theta, k0, count) in [(0.3, 0, 17usize), (-1.1, 5, 9), (0.0, -3, 4), (2.9, 2, 31)] {
            let direct: Complex64 = (0..count as i64)
                .map(|k| Complex64::cis(theta * (k0 + k) as f64))
                .sum();
            assert!((geometric_sum(theta, k0, count) - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn step_count_convention() {
        assert_eq!(step_count(0.1, 1.0), 10);
        assert_eq!(step_count(0.3, 1.0), 4);
        assert_eq!(step_count(0.05, 2.4), 48);
    }

    #[test]
    fn ingham_gap_and_exact_phase() {
        let freqs = [0.0, 1.0, 5.0];
        assert!(matches!(
            ingham_bounds(&freqs, 2.0, &Scheme::midpoint(), 0.01, 1.0, 1.5),
            Err(Error::GapViolated { index: 0, .. })
        ));
        let k = 32;
        let tau = 1.0 / k as f64;
        let freqs = integer_lattice_frequencies(tau, 3.0);
        let r = ingham_bounds(&freqs, 2.0 * PI, &Scheme::exact_phase(), tau, 3.0, 1.0).unwrap();
        assert!((r.c_lower - 1.0).abs() < 1e-12 && (r.c_upper - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_rows_follow_ladder() {
        let taus = [0.05, 0.025];
        let rows = uniformity_sweep(transport_family(1.0), &Scheme::midpoint(), 1.0, 2.0, &taus).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].tau, 0.05);
        assert!(rows.iter().all(|r| r.lambda_min <= r.lambda_max && r.c_obs > 0.0));
    }
}
