//! Forward kernel `rho_tau` and reverse kernel `q_tau` linking the exact flow
//! to a conservative scheme, with the representation formulas built on them.
//!
//! Both kernels are evaluated in the rescaled variable `alpha = mu tau`:
//!
//! ```text
//! rho(t, s) = 1/(2 pi tau) int exp(i (alpha s - g(alpha) t) / tau) chi(alpha) dalpha,  |alpha| <= f(delta + eps)
//! q(t, s)   = 1/(2 pi tau) int exp(i (f(alpha) s - alpha t) / tau) chi(alpha) dalpha,  |alpha| <= delta + eps
//! ```

pub mod cutoff;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub use cutoff::Cutoff;

use crate::error::{Error, Result};
use crate::quadrature::{trapezoid, GaussLegendre, PANEL_ORDER};
use crate::schemes::{band_inf_sup_fprime, inverse_g, FPrimeRange, Scheme};
use crate::spectral::State;

/// Default truncation margin, in multiples of `eps`, around the group-velocity cone.
pub const DEFAULT_WINDOW_MARGIN: f64 = 5.0;

/// Lower bound on the number of Gauss-Legendre panels per kernel integral.
pub const MIN_PANELS: usize = 64;

/// Which of the two kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KernelKind {
    Rho,
    Q,
}

/// Everything needed to evaluate the kernels at one time step.
#[derive(Debug, Clone)]
pub struct KernelConfig {
    scheme: Scheme,
    tau: f64,
    delta: f64,
    eps: f64,
    band_lo: Option<f64>,
    /// cutoff in the discrete variable `f(alpha)`, plateau `f(delta)`
    chi_rho: Cutoff,
    /// cutoff in `alpha`, plateau `delta`
    chi_q: Cutoff,
    fprime: FPrimeRange,
    window_margin: f64,
}

impl KernelConfig {
    pub fn new(scheme: Scheme, tau: f64, delta: f64, eps: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "tau",
                reason: format!("time step must be positive, got {tau}"),
            });
        }
        if !(delta > 0.0) {
            return Err(Error::InvalidParameter {
                name: "delta",
                reason: format!("filter radius must be positive, got {delta}"),
            });
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter {
                name: "eps",
                reason: format!("cutoff margin must be positive, got {eps}"),
            });
        }
        let outer = delta + eps;
        if outer >= scheme.radius() {
            return Err(Error::BandExceedsScheme {
                delta: outer,
                radius: scheme.radius(),
            });
        }
        let a = scheme.f(delta)?;
        let b = scheme.f(outer)?;
        if !(b < PI) {
            return Err(Error::InvalidParameter {
                name: "eps",
                reason: format!(
                    "f(delta + eps) = {b} is not below pi; violates the range hypothesis f: (-R,R) -> (-pi,pi)"
                ),
            });
        }
        let fprime = band_inf_sup_fprime(&scheme, outer)?;
        if !(fprime.inf > 0.0) {
            return Err(Error::InvalidParameter {
                name: "scheme",
                reason: format!(
                    "inf f' = {} on |alpha| <= {outer}; violates the monotonicity hypothesis inf f' > 0",
                    fprime.inf
                ),
            });
        }
        Ok(Self {
            chi_rho: Cutoff::new(a, b)?,
            chi_q: Cutoff::new(delta, outer)?,
            scheme,
            tau,
            delta,
            eps,
            band_lo: None,
            fprime,
            window_margin: DEFAULT_WINDOW_MARGIN,
        })
    }

    /// Restricts both cutoffs to the band `delta1 < |alpha| <= delta`; they rise
    /// from 0 at `delta1 - eps1` to 1 at `delta1`.
    pub fn with_band(mut self, delta1: f64, eps1: f64) -> Result<Self> {
        if !(eps1 > 0.0 && delta1 - eps1 >= 0.0 && delta1 < self.delta) {
            return Err(Error::InvalidParameter {
                name: "band",
                reason: format!(
                    "need 0 <= delta1 - eps1 < delta1 < delta, got delta1 = {delta1}, eps1 = {eps1}"
                ),
            });
        }
        let s = &self.scheme;
        self.chi_q = Cutoff::band(delta1 - eps1, delta1, self.delta, self.delta + self.eps)?;
        self.chi_rho = Cutoff::band(
            s.f(delta1 - eps1)?,
            s.f(delta1)?,
            self.chi_rho.plateau(),
            self.chi_rho.support(),
        )?;
        self.band_lo = Some(delta1);
        Ok(self)
    }

    /// Truncation margin in multiples of `eps`.
    pub fn with_window_margin(mut self, margin: f64) -> Result<Self> {
        if !(margin > 0.0) {
            return Err(Error::InvalidParameter {
                name: "window_margin",
                reason: format!("must be positive, got {margin}"),
            });
        }
        self.window_margin = margin;
        Ok(self)
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn chi_rho(&self) -> &Cutoff {
        &self.chi_rho
    }

    pub fn chi_q(&self) -> &Cutoff {
        &self.chi_q
    }

    /// `f'` extremes on the cutoff support `|alpha| <= delta + eps`.
    pub fn fprime(&self) -> FPrimeRange {
        self.fprime
    }

    pub fn window_margin(&self) -> f64 {
        self.window_margin
    }

    fn margin(&self) -> f64 {
        self.window_margin * self.eps
    }

    fn rho_panels(&self, s_abs: f64, t_abs: f64) -> usize {
        let p = 4.0 * (s_abs + t_abs / self.fprime.inf) / (PI * self.tau);
        (p.ceil() as usize).max(MIN_PANELS)
    }

    fn q_panels(&self, s_abs: f64, t_abs: f64) -> usize {
        let p = 4.0 * (s_abs * self.fprime.sup + t_abs) / (PI * self.tau);
        (p.ceil() as usize).max(MIN_PANELS)
    }

    /// Checks that every nonzero mode lies in the class the cutoffs were built for.
    pub fn check_filtered(&self, y0: &State) -> Result<()> {
        let tol = 1e-12 * self.delta;
        for (i, (c, mu)) in y0
            .coeffs()
            .iter()
            .zip(y0.spectrum().frequencies())
            .enumerate()
        {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let alpha = (mu * self.tau).abs();
            let below = self.band_lo.is_some_and(|lo| alpha <= lo);
            if alpha > self.delta + tol || below {
                return Err(Error::UnfilteredInput {
                    mode: i,
                    alpha,
                    delta: self.delta,
                });
            }
        }
        Ok(())
    }
}

/// Quadrature nodes for `sum_i w_i exp(i (a_i s - b_i t) / tau) / (2 pi tau)`.
struct NodeSet {
    a: Vec<f64>,
    b: Vec<f64>,
    w: Vec<f64>,
}

impl NodeSet {
    fn rho(cfg: &KernelConfig, panels: usize) -> Result<Self> {
        let support = cfg.chi_rho.support();
        let outer = cfg.delta + cfg.eps;
        let rule = GaussLegendre::new(PANEL_ORDER);
        let mut set = Self::with_capacity(panels * PANEL_ORDER);
        for (alpha, w) in rule.composite(-support, support, panels) {
            let chi = cfg.chi_rho.eval(alpha);
            if chi == 0.0 {
                continue;
            }
            set.a.push(alpha);
            set.b.push(inverse_g(&cfg.scheme, alpha, outer)?);
            set.w.push(w * chi);
        }
        Ok(set)
    }

    fn q(cfg: &KernelConfig, panels: usize) -> Result<Self> {
        let support = cfg.chi_q.support();
        let rule = GaussLegendre::new(PANEL_ORDER);
        let mut set = Self::with_capacity(panels * PANEL_ORDER);
        for (alpha, w) in rule.composite(-support, support, panels) {
            let chi = cfg.chi_q.eval(alpha);
            if chi == 0.0 {
                continue;
            }
            set.a.push(cfg.scheme.f(alpha)?);
            set.b.push(alpha);
            set.w.push(w * chi);
        }
        Ok(set)
    }

    fn for_kind(cfg: &KernelConfig, kind: KernelKind, s_abs: f64, t_abs: f64) -> Result<Self> {
        match kind {
            KernelKind::Rho => Self::rho(cfg, cfg.rho_panels(s_abs, t_abs)),
            KernelKind::Q => Self::q(cfg, cfg.q_panels(s_abs, t_abs)),
        }
    }

    fn with_capacity(n: usize) -> Self {
        Self {
            a: Vec::with_capacity(n),
            b: Vec::with_capacity(n),
            w: Vec::with_capacity(n),
        }
    }

    fn eval(&self, tau: f64, t: f64, s: f64) -> Complex64 {
        let sum: Complex64 = (0..self.w.len())
            .map(|i| Complex64::cis((self.a[i] * s - self.b[i] * t) / tau) * self.w[i])
            .sum();
        sum / (2.0 * PI * tau)
    }

    /// Kernel at fixed `t` for every `s = k tau`, `k` in `ks`.
    fn along_s(&self, tau: f64, t: f64, ks: &[i64]) -> Vec<Complex64> {
        let h: Vec<Complex64> = (0..self.w.len())
            .map(|i| Complex64::cis(-self.b[i] * t / tau) * self.w[i])
            .collect();
        let norm = 1.0 / (2.0 * PI * tau);
        ks.par_iter()
            .map(|&k| {
                let kf = k as f64;
                let sum: Complex64 = h
                    .iter()
                    .zip(&self.a)
                    .map(|(h, a)| h * Complex64::cis(a * kf))
                    .sum();
                sum * norm
            })
            .collect()
    }

    /// Kernel at fixed `s` for every `t` in `ts`.
    fn along_t(&self, tau: f64, s: f64, ts: &[f64]) -> Vec<Complex64> {
        let h: Vec<Complex64> = (0..self.w.len())
            .map(|i| Complex64::cis(self.a[i] * s / tau) * self.w[i])
            .collect();
        let norm = 1.0 / (2.0 * PI * tau);
        ts.par_iter()
            .map(|&t| {
                let sum: Complex64 = h
                    .iter()
                    .zip(&self.b)
                    .map(|(h, b)| h * Complex64::cis(-b * t / tau))
                    .sum();
                sum * norm
            })
            .collect()
    }
}

/// Forward kernel `rho_tau(t, s)`.
pub fn rho(cfg: &KernelConfig, t: f64, s: f64) -> Result<Complex64> {
    Ok(NodeSet::for_kind(cfg, KernelKind::Rho, s.abs(), t.abs())?.eval(cfg.tau, t, s))
}

/// Reverse kernel `q_tau(t, s)`.
pub fn q(cfg: &KernelConfig, t: f64, s: f64) -> Result<Complex64> {
    Ok(NodeSet::for_kind(cfg, KernelKind::Q, s.abs(), t.abs())?.eval(cfg.tau, t, s))
}

pub fn kernel(cfg: &KernelConfig, kind: KernelKind, t: f64, s: f64) -> Result<Complex64> {
    match kind {
        KernelKind::Rho => rho(cfg, t, s),
        KernelKind::Q => q(cfg, t, s),
    }
}

/// `rho(t, k tau)` for each `k`, sharing one node set.
pub fn rho_on_grid(cfg: &KernelConfig, t: f64, ks: &[i64]) -> Result<Vec<Complex64>> {
    let s_max = ks.iter().map(|k| (*k as f64 * cfg.tau).abs()).fold(0.0, f64::max);
    Ok(NodeSet::rho(cfg, cfg.rho_panels(s_max, t.abs()))?.along_s(cfg.tau, t, ks))
}

/// `q(t, s)` for each `t`, sharing one node set.
pub fn q_on_grid(cfg: &KernelConfig, s: f64, ts: &[f64]) -> Result<Vec<Complex64>> {
    let t_max = ts.iter().map(|t| t.abs()).fold(0.0, f64::max);
    Ok(NodeSet::q(cfg, cfg.q_panels(s.abs(), t_max))?.along_t(cfg.tau, s, ts))
}

/// Forward kernel without cutoff at `t = 0`: `1/(2 pi tau) int_{-pi}^{pi} exp(i alpha s / tau) dalpha`.
///
/// Only the time origin is evaluated; for `t != 0` the phase `g(alpha) t` is unbounded at
/// the ends of the Nyquist cell.
pub fn rho_without_cutoff_at_origin(tau: f64, s: f64) -> Complex64 {
    let rule = GaussLegendre::new(PANEL_ORDER);
    let panels = ((4.0 * s.abs() / tau).ceil() as usize).max(MIN_PANELS);
    let sum: Complex64 = rule
        .composite(-PI, PI, panels)
        .into_iter()
        .map(|(a, w)| Complex64::cis(a * s / tau) * w)
        .sum();
    sum / (2.0 * PI * tau)
}

/// Outcome of a truncated representation formula.
#[derive(Debug, Clone)]
pub struct ForwardReport {
    pub state: State,
    pub k_min: i64,
    pub k_max: i64,
    pub panels: usize,
    /// estimated relative error from the kernel quadrature
    pub quadrature_error: f64,
    /// estimated relative error from truncating the sum
    pub truncation_tail: f64,
}

#[derive(Debug, Clone)]
pub struct ReverseReport {
    pub state: State,
    pub t_lo: f64,
    pub t_hi: f64,
    pub t_nodes: usize,
    pub panels: usize,
    pub quadrature_error: f64,
    pub truncation_tail: f64,
}

/// `s`-interval where `rho(t, .)` concentrates: `t / f'` over the cutoff support.
fn forward_core(cfg: &KernelConfig, t: f64) -> (f64, f64) {
    let (x, y) = (t / cfg.fprime.sup, t / cfg.fprime.inf);
    (x.min(y), x.max(y))
}

/// `t`-interval where `q(., s)` concentrates: `s f'` over the cutoff support.
fn reverse_core(cfg: &KernelConfig, s: f64) -> (f64, f64) {
    let (x, y) = (s * cfg.fprime.inf, s * cfg.fprime.sup);
    (x.min(y), x.max(y))
}

/// `y(t) = tau sum_k rho(t, k tau) y^k` with `y^k` the scheme trajectory of `y0`.
pub fn transmute_forward(cfg: &KernelConfig, y0: &State, t: f64) -> Result<ForwardReport> {
    cfg.check_filtered(y0)?;
    let tau = cfg.tau;
    let m = cfg.margin();
    let (c_lo, c_hi) = forward_core(cfg, t);
    let k_min = ((c_lo - m) / tau).floor() as i64;
    let k_max = ((c_hi + m) / tau).ceil() as i64;
    let ks: Vec<i64> = (k_min..=k_max).collect();
    let s_max = (k_min.abs().max(k_max.abs()) as f64) * tau;
    let panels = cfg.rho_panels(s_max, t.abs());
    let nodes = NodeSet::rho(cfg, panels)?;
    let values = nodes.along_s(tau, t, &ks);

    let phases = crate::spectral::discrete_phases(y0, &cfg.scheme, tau)?;
    let coeffs: Vec<Complex64> = y0
        .coeffs()
        .iter()
        .zip(&phases)
        .map(|(c, phase)| match phase {
            None => Complex64::new(0.0, 0.0),
            Some(p) => {
                let sum: Complex64 = ks
                    .iter()
                    .zip(&values)
                    .map(|(&k, r)| r * Complex64::cis(p * k as f64))
                    .sum();
                c * sum * tau
            }
        })
        .collect();

    let refined = NodeSet::rho(cfg, 2 * panels)?;
    let probes = [k_min, (k_min + k_max) / 2, k_max];
    let quad_diff = probes
        .iter()
        .map(|&k| {
            let s = k as f64 * tau;
            (nodes.eval(tau, t, s) - refined.eval(tau, t, s)).norm()
        })
        .fold(0.0, f64::max);
    let positions: Vec<f64> = ks.iter().map(|&k| k as f64 * tau).collect();
    let magnitudes: Vec<f64> = values.iter().map(|v| v.norm()).collect();
    Ok(ForwardReport {
        state: State::new(Arc::clone(y0.spectrum()), coeffs)?,
        k_min,
        k_max,
        panels,
        quadrature_error: quad_diff * tau * ks.len() as f64,
        truncation_tail: tail_estimate(&positions, &magnitudes, c_lo, c_hi, m),
    })
}

/// `y^k = int q(t, k tau) y(t) dt` with `y(t)` the exact trajectory of `y0`.
pub fn transmute_reverse(cfg: &KernelConfig, y0: &State, k: i64) -> Result<ReverseReport> {
    cfg.check_filtered(y0)?;
    let tau = cfg.tau;
    let s = k as f64 * tau;
    let m = cfg.margin();
    let (c_lo, c_hi) = reverse_core(cfg, s);
    let (t_lo, t_hi) = (c_lo - m, c_hi + m);
    // q(., s) y(.) is band-limited to (2 delta + eps) / tau; sample well below Nyquist
    let step = PI * tau / (2.0 * cfg.delta + cfg.eps) / 2.0;
    let grid = trapezoid(t_lo, t_hi, step);
    let ts: Vec<f64> = grid.iter().map(|p| p.0).collect();
    let t_max = t_lo.abs().max(t_hi.abs());
    let panels = cfg.q_panels(s.abs(), t_max);
    let nodes = NodeSet::q(cfg, panels)?;
    let values = nodes.along_t(tau, s, &ts);

    let freqs = y0.spectrum().frequencies();
    let coeffs: Vec<Complex64> = y0
        .coeffs()
        .iter()
        .zip(freqs)
        .map(|(c, &mu)| {
            if c.norm_sqr() == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let sum: Complex64 = grid
                .iter()
                .zip(&values)
                .map(|(&(t, w), qv)| qv * Complex64::cis(mu * t) * w)
                .sum();
            c * sum
        })
        .collect();

    let refined = NodeSet::q(cfg, 2 * panels)?;
    let probes = [t_lo, 0.5 * (c_lo + c_hi), t_hi];
    let quad_diff = probes
        .iter()
        .map(|&t| (nodes.eval(tau, t, s) - refined.eval(tau, t, s)).norm())
        .fold(0.0, f64::max);
    let magnitudes: Vec<f64> = values.iter().map(|v| v.norm()).collect();
    Ok(ReverseReport {
        state: State::new(Arc::clone(y0.spectrum()), coeffs)?,
        t_lo,
        t_hi,
        t_nodes: ts.len(),
        panels,
        quadrature_error: quad_diff * (t_hi - t_lo),
        truncation_tail: tail_estimate(&ts, &magnitudes, c_lo, c_hi, m),
    })
}

/// Tail of `int |v|` outside `[core_lo - margin, core_hi + margin]`, assuming
/// `|v| <= C / d^4` in the distance `d` to the core and fitting `C` on the
/// outermost fifth of the margin. Includes a safety factor of 2.
fn tail_estimate(positions: &[f64], magnitudes: &[f64], core_lo: f64, core_hi: f64, margin: f64) -> f64 {
    let fit = |side: f64| {
        positions
            .iter()
            .zip(magnitudes)
            .filter_map(|(&x, &v)| {
                let d = if side > 0.0 { x - core_hi } else { core_lo - x };
                (d >= 0.8 * margin).then(|| v * d.powi(4))
            })
            .fold(0.0, f64::max)
    };
    let per_side = |c: f64| c / (3.0 * margin.powi(3));
    2.0 * (per_side(fit(1.0)) + per_side(fit(-1.0)))
}

/// Whether `(t, s)` is off the group-velocity cone by at least `eps`.
pub fn off_cone(kind: KernelKind, fprime: FPrimeRange, eps: f64, t: f64, s: f64) -> bool {
    match kind {
        KernelKind::Rho => t + eps < s * fprime.inf || s * fprime.sup < t - eps,
        KernelKind::Q => t > s * fprime.sup + eps || t < s * fprime.inf - eps,
    }
}

/// Inputs of a localization measurement.
#[derive(Debug, Clone)]
pub struct DecaySetup {
    pub scheme: Scheme,
    pub delta: f64,
    pub eps: f64,
    pub kind: KernelKind,
    pub t: f64,
    pub s: f64,
    pub taus: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayProfile {
    pub kind: KernelKind,
    pub t: f64,
    pub s: f64,
    pub taus: Vec<f64>,
    pub values: Vec<f64>,
    /// per-`tau` rounding floor; values below are excluded from the fit
    pub floors: Vec<f64>,
    pub points_used: usize,
    /// least-squares slope of `log |kernel|` against `log tau`
    pub slope: Option<f64>,
}

/// Measures `|kernel(t, s)|` along a ladder of time steps at an off-cone point.
pub fn decay_profile(setup: &DecaySetup) -> Result<DecayProfile> {
    let fprime = band_inf_sup_fprime(&setup.scheme, setup.delta + setup.eps)?;
    if !off_cone(setup.kind, fprime, setup.eps, setup.t, setup.s) {
        return Err(Error::InsideCone {
            t: setup.t,
            s: setup.s,
        });
    }
    let rows: Vec<(f64, f64)> = setup
        .taus
        .iter()
        .map(|&tau| {
            let cfg = KernelConfig::new(setup.scheme.clone(), tau, setup.delta, setup.eps)?;
            let v = kernel(&cfg, setup.kind, setup.t, setup.s)?.norm();
            let support = match setup.kind {
                KernelKind::Rho => cfg.chi_rho.support(),
                KernelKind::Q => cfg.chi_q.support(),
            };
            // sum of O(1/tau) terms: relative rounding around 1e-12 of the integrand mass
            let floor = 1e-12 * support / (PI * tau);
            Ok((v, floor))
        })
        .collect::<Result<_>>()?;
    let (values, floors): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    let pts: Vec<(f64, f64)> = setup
        .taus
        .iter()
        .zip(values.iter().zip(&floors))
        .filter(|(_, (v, fl))| *v > *fl)
        .map(|(tau, (v, _))| (tau.ln(), v.ln()))
        .collect();
    let slope = least_squares_slope(&pts);
    Ok(DecayProfile {
        kind: setup.kind,
        t: setup.t,
        s: setup.s,
        taus: setup.taus.clone(),
        values,
        floors,
        points_used: pts.len(),
        slope,
    })
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Monte-Carlo lower estimates of `||I_tau||` and `||J_tau||` against their bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatorNormReport {
    pub trials: usize,
    pub seed: u64,
    pub forward_measured: f64,
    pub forward_bound: f64,
    pub reverse_measured: f64,
    pub reverse_bound: f64,
}

impl OperatorNormReport {
    pub fn within_bounds(&self, rel_tol: f64) -> bool {
        self.forward_measured <= self.forward_bound * (1.0 + rel_tol)
            && self.reverse_measured <= self.reverse_bound * (1.0 + rel_tol)
    }
}

/// Length of the random inputs, in grid points or cells.
const NORM_INPUT_LEN: usize = 24;

/// Applies `I_tau` (sequence to function) and `J_tau` (function to sequence) to
/// random inputs and records the largest amplification seen.
///
/// `I_tau w(t) = tau sum_k rho(t, k tau) w_k` is measured in `L^2(R)` against
/// `tau sum |w_k|^2`; `(J_tau v)_k = int q(t, k tau) v(t) dt` in the weighted
/// sequence norm against `||v||_{L^2}`. Both outputs are truncated, so the
/// estimates are from below.
pub fn operator_norm_check(cfg: &KernelConfig, trials: usize, seed: u64) -> Result<OperatorNormReport> {
    let tau = cfg.tau;
    let m = cfg.margin();
    let fp = cfg.fprime;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // forward: w on k = 0..K-1, output sampled on t where it is not negligible
    let kk = NORM_INPUT_LEN;
    let s_span = kk as f64 * tau;
    let (t_lo, t_hi) = (-m, s_span * fp.sup + m);
    let rho_nodes = NodeSet::rho(cfg, cfg.rho_panels(s_span, t_lo.abs().max(t_hi)))?;
    // I_tau w is band-limited to |omega| <= f(delta + eps) g-range / tau
    let t_grid = trapezoid(t_lo, t_hi, PI * tau / (cfg.delta + cfg.eps) / 4.0);

    // reverse: piecewise constant v on [0, L)
    let cell = 0.5 * tau;
    let len = NORM_INPUT_LEN as f64 * cell;
    let (k_lo, k_hi) = (
        ((-m) / (tau * fp.sup)).floor() as i64,
        ((len + m) / (tau * fp.inf)).ceil() as i64,
    );
    let ks: Vec<i64> = (k_lo..=k_hi).collect();
    let q_nodes = NodeSet::q(cfg, cfg.q_panels(k_hi.abs().max(k_lo.abs()) as f64 * tau, len))?;

    let inputs: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..trials)
        .map(|_| {
            let mut draw = |n| -> Vec<Complex64> {
                (0..n)
                    .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect()
            };
            (draw(kk), draw(NORM_INPUT_LEN))
        })
        .collect();

    let ratios: Vec<(f64, f64)> = inputs
        .par_iter()
        .map(|(w, v)| {
            let fwd = forward_ratio(&rho_nodes, tau, w, &t_grid);
            let rev = reverse_ratio(&q_nodes, tau, v, cell, &ks);
            (fwd, rev)
        })
        .collect();
    let forward_measured = ratios.iter().map(|r| r.0).fold(0.0, f64::max);
    let reverse_measured = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    let chi_sup = cfg.chi_rho.sup_norm().max(cfg.chi_q.sup_norm());
    Ok(OperatorNormReport {
        trials,
        seed,
        forward_measured,
        forward_bound: chi_sup * fp.sup.sqrt(),
        reverse_measured,
        reverse_bound: chi_sup / fp.inf.sqrt(),
    })
}

fn forward_ratio(nodes: &NodeSet, tau: f64, w: &[Complex64], t_grid: &[(f64, f64)]) -> f64 {
    // W(alpha) = tau sum_k w_k exp(i alpha k) at each node, folded into the weights
    let h: Vec<Complex64> = (0..nodes.w.len())
        .map(|i| {
            let big_w: Complex64 = w
                .iter()
                .enumerate()
                .map(|(k, wk)| wk * Complex64::cis(nodes.a[i] * k as f64))
                .sum();
            big_w * tau * nodes.w[i]
        })
        .collect();
    let norm = 1.0 / (2.0 * PI * tau);
    let out: f64 = t_grid
        .iter()
        .map(|&(t, wt)| {
            let v: Complex64 = h
                .iter()
                .zip(&nodes.b)
                .map(|(h, b)| h * Complex64::cis(-b * t / tau))
                .sum();
            (v * norm).norm_sqr() * wt
        })
        .sum();
    let input = tau * w.iter().map(|c| c.norm_sqr()).sum::<f64>();
    (out / input).sqrt()
}

fn reverse_ratio(nodes: &NodeSet, tau: f64, v: &[Complex64], cell: f64, ks: &[i64]) -> f64 {
    // V(mu) = int exp(-i mu t) v(t) dt for the step function, at mu = alpha / tau
    let h: Vec<Complex64> = (0..nodes.w.len())
        .map(|i| {
            let mu = nodes.b[i] / tau;
            let cell_transform = if mu.abs() * cell < 1e-8 {
                Complex64::new(cell, 0.0)
            } else {
                (Complex64::new(1.0, 0.0) - Complex64::cis(-mu * cell)) / Complex64::new(0.0, mu)
            };
            let big_v: Complex64 = v
                .iter()
                .enumerate()
                .map(|(m, vm)| vm * Complex64::cis(-mu * m as f64 * cell))
                .sum();
            big_v * cell_transform * nodes.w[i]
        })
        .collect();
    let norm = 1.0 / (2.0 * PI * tau);
    let out: f64 = ks
        .iter()
        .map(|&k| {
            let j: Complex64 = h
                .iter()
                .zip(&nodes.a)
                .map(|(h, a)| h * Complex64::cis(a * k as f64))
                .sum();
            (j * norm).norm_sqr()
        })
        .sum::<f64>()
        * tau;
    let input = cell * v.iter().map(|c| c.norm_sqr()).sum::<f64>();
    (out / input).sqrt()
}

/// One plotted kernel value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelSample {
    pub t: f64,
    pub s: f64,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
}

/// Evaluates the kernel at each `(t, s)`, in input order.
pub fn evaluate_points(cfg: &KernelConfig, kind: KernelKind, points: &[(f64, f64)]) -> Result<Vec<KernelSample>> {
    points
        .par_iter()
        .map(|&(t, s)| {
            let v = kernel(cfg, kind, t, s)?;
            Ok(KernelSample {
                t,
                s,
                re: v.re,
                im: v.im,
                abs: v.norm(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dft::{dft, GridFunction};
    use crate::spectral::{evolve_continuous, evolve_discrete, make_transport_spectrum, FilterBand};

    fn midpoint_cfg(tau: f64) -> KernelConfig {
        KernelConfig::new(Scheme::midpoint(), tau, 1.0, 0.5).unwrap()
    }

    #[test]
    fn config_rejects_band_beyond_radius() {
        let err = KernelConfig::new(Scheme::gauss4(), 0.01, 3.0, 0.5).unwrap_err();
        assert!(matches!(err, Error::BandExceedsScheme { .. }));
        assert!(err.to_string().contains("range hypothesis"));
    }

    #[test]
    fn unit_cutoff_gives_dirichlet_delta() {
        let tau = 0.1;
        for k in -4..=4 {
            let v = rho_without_cutoff_at_origin(tau, k as f64 * tau);
            let expected = if k == 0 { 1.0 / tau } else { 0.0 };
            assert!((v - Complex64::new(expected, 0.0)).norm() < 1e-10, "k = {k}");
        }
    }

    #[test]
    fn rho_is_real_and_point_symmetric() {
        let cfg = midpoint_cfg(0.05);
        for (t, s) in [(0.3, 0.2), (1.0, -0.7), (0.0, 0.4)] {
            let a = rho(&cfg, t, s).unwrap();
            let b = rho(&cfg, -t, -s).unwrap();
            assert!((a - b.conj()).norm() < 1e-10 * a.norm().max(1.0));
            assert!(a.im.abs() < 1e-10 * a.norm().max(1.0));
        }
    }

    #[test]
    fn q_point_symmetry() {
        let cfg = midpoint_cfg(0.05);
        for (t, s) in [(0.3, 0.2), (1.0, -0.7)] {
            let a = q(&cfg, t, s).unwrap();
            let b = q(&cfg, -t, -s).unwrap();
            assert!((a - b.conj()).norm() < 1e-10 * a.norm().max(1.0));
        }
    }

    #[test]
    fn exact_phase_q_is_translation_invariant() {
        let cfg = KernelConfig::new(Scheme::exact_phase(), 0.05, 1.0, 0.5).unwrap();
        let base = q(&cfg, 0.3, 0.5).unwrap();
        for shift in [-0.4, 0.25, 1.1] {
            let v = q(&cfg, 0.3 + shift, 0.5 + shift).unwrap();
            assert!((v - base).norm() < 1e-10 * base.norm());
        }
    }

    #[test]
    fn spectral_multiplier_at_a_few_frequencies() {
        let cfg = midpoint_cfg(0.01);
        let t = 0.3;
        let m = cfg.margin();
        let (lo, hi) = forward_core(&cfg, t);
        let ks: Vec<i64> =
            (((lo - 4.0 * m) / cfg.tau).floor() as i64..=((hi + 4.0 * m) / cfg.tau).ceil() as i64).collect();
        let values = rho_on_grid(&cfg, t, &ks).unwrap();
        let u = GridFunction::new(cfg.tau, ks[0], values).unwrap();
        for alpha in [-1.2, -0.5, 0.0, 0.9, 1.25] {
            let mu = alpha / cfg.tau;
            let got = dft(&u, mu).unwrap();
            let g = inverse_g(cfg.scheme(), alpha, 1.5).unwrap();
            let want = Complex64::cis(-g * t / cfg.tau) * cfg.chi_rho().eval(alpha);
            assert!((got - want).norm() < 1e-8, "alpha = {alpha}: {got} vs {want}");
        }
    }

    #[test]
    fn forward_reproduces_exact_flow() {
        let spec = Arc::new(make_transport_spectrum(8).unwrap());
        let cfg = midpoint_cfg(0.01);
        let y0 = State::mode(Arc::clone(&spec), 9).unwrap(); // mu = 2 pi
        let out = transmute_forward(&cfg, &y0, 0.7).unwrap();
        let exact = evolve_continuous(&y0, 0.7);
        assert!(out.state.relative_distance(&exact).unwrap() < 1e-6);
        let zero = transmute_forward(&cfg, &y0, 0.0).unwrap();
        assert!(zero.state.relative_distance(&y0).unwrap() < 1e-6);
        // widening the window moves the result by less than the reported tail
        let wide = transmute_forward(&cfg.clone().with_window_margin(10.0).unwrap(), &y0, 0.7).unwrap();
        let moved = wide.state.relative_distance(&out.state).unwrap();
        assert!(moved < out.truncation_tail, "{moved} vs {}", out.truncation_tail);
    }

    #[test]
    fn forward_rejects_unfiltered() {
        let spec = Arc::new(make_transport_spectrum(30).unwrap());
        let cfg = midpoint_cfg(0.01);
        let y0 = State::mode(spec, 60).unwrap(); // mu = 2 pi 30, mu tau > 1
        assert!(matches!(
            transmute_forward(&cfg, &y0, 0.5),
            Err(Error::UnfilteredInput { .. })
        ));
    }

    #[test]
    fn reverse_reproduces_scheme() {
        let spec = Arc::new(make_transport_spectrum(8).unwrap());
        let cfg = midpoint_cfg(0.01);
        let y0 = State::mode(Arc::clone(&spec), 9).unwrap();
        let out = transmute_reverse(&cfg, &y0, 50).unwrap();
        let exact = evolve_discrete(&y0, 50, cfg.scheme(), 0.01).unwrap();
        assert!(out.state.relative_distance(&exact).unwrap() < 1e-6);
        let zero = transmute_reverse(&cfg, &y0, 0).unwrap();
        assert!(zero.state.relative_distance(&y0).unwrap() < 1e-6);
    }

    #[test]
    fn band_variant_reverse() {
        let tau = 0.01;
        let spec = Arc::new(make_transport_spectrum(15).unwrap());
        let cfg = midpoint_cfg(tau).with_band(0.5, 0.4).unwrap();
        let band = FilterBand::new(0.5 / tau, 1.0 / tau).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y0 = State::random_in_band(Arc::clone(&spec), &band, &mut rng);
        assert!(y0.norm() > 0.0);
        let out = transmute_reverse(&cfg, &y0, 30).unwrap();
        let exact = evolve_discrete(&y0, 30, cfg.scheme(), tau).unwrap();
        assert!(out.state.relative_distance(&exact).unwrap() < 1e-6);
        // low modes are outside the band class
        let low = State::mode(spec, 15).unwrap();
        assert!(transmute_reverse(&cfg, &low, 3).is_err());
    }

    #[test]
    fn cone_membership() {
        let fp = band_inf_sup_fprime(&Scheme::midpoint(), 1.5).unwrap();
        assert!(off_cone(KernelKind::Rho, fp, 0.5, 0.2, 2.0));
        assert!(!off_cone(KernelKind::Rho, fp, 0.5, 1.0, 1.0));
        assert!(off_cone(KernelKind::Q, fp, 0.5, 2.0, 0.2));
        let setup = DecaySetup {
            scheme: Scheme::midpoint(),
            delta: 1.0,
            eps: 0.5,
            kind: KernelKind::Rho,
            t: 1.0,
            s: 1.0,
            taus: vec![0.02, 0.01],
        };
        assert!(matches!(decay_profile(&setup), Err(Error::InsideCone { .. })));
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = [1.0f64, 2.0, 4.0].iter().map(|x| (x.ln(), 3.0 * x.ln() + 1.0)).collect();
        assert!((least_squares_slope(&pts).unwrap() - 3.0).abs() < 1e-12);
        assert!(least_squares_slope(&pts[..1]).is_none());
    }

    #[test]
    fn norm_bounds_closed_form() {
        let cfg = midpoint_cfg(0.05);
        let r = operator_norm_check(&cfg, 3, 7).unwrap();
        assert!((r.forward_bound - 1.0).abs() < 1e-12);
        assert!((r.reverse_bound - 1.25).abs() < 1e-10);
        assert!(r.within_bounds(1e-6), "{r:?}");
        assert!(r.forward_measured > 0.1 && r.reverse_measured > 0.1);
    }
}
