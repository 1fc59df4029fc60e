//! Dispersion functions of conservative time-discretizations.
//!
//! A scheme advances the eigenmode `exp(i mu t)` by the phase `f(mu tau)` per
//! step instead of `mu tau`. Everything downstream only needs `f` on its
//! domain `(-R, R)`, its first two derivatives and the inverse `g`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Default sample count for extremal searches over a band.
pub const DEFAULT_SAMPLES: usize = 4096;

/// Step used for finite-difference derivatives of user supplied schemes.
pub const FD_STEP: f64 = 1e-6;

/// Step for the second difference; at `FD_STEP` the rounding error would be O(1).
const FD_STEP_SECOND: f64 = 1e-4;

type PhaseFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Midpoint,
    Gauss4,
    Newmark { beta: f64 },
    ExactPhase,
    Custom(PhaseFn),
}

/// A dispersion function `f: (-R, R) -> (-pi, pi)` with derivatives.
#[derive(Clone)]
pub struct Scheme {
    name: String,
    radius: f64,
    kind: Kind,
}

impl fmt::Debug for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scheme")
            .field("name", &self.name)
            .field("radius", &self.radius)
            .finish()
    }
}

impl Scheme {
    /// Implicit midpoint rule, `f(a) = 2 atan(a/2)`, `R = inf`.
    pub fn midpoint() -> Self {
        Self {
            name: "midpoint".into(),
            radius: f64::INFINITY,
            kind: Kind::Midpoint,
        }
    }

    /// Fourth order Gauss collocation, `f(a) = 2 atan(6a / (12 - a^2))`, `R = 2 sqrt(3)`.
    pub fn gauss4() -> Self {
        Self {
            name: "gauss4".into(),
            radius: 2.0 * 3f64.sqrt(),
            kind: Kind::Gauss4,
        }
    }

    /// Newmark scheme in its midpoint reformulation,
    /// `f(a) = 2 atan((a/2) / sqrt(1 + (beta - 1/4) a^2))`.
    ///
    /// For `beta < 1/4` the square root vanishes at `a = 2 / sqrt(1 - 4 beta)`,
    /// where `f` reaches `pi`; that point is taken as the domain radius.
    pub fn newmark(beta: f64) -> Result<Self> {
        if !(0.0..=0.25).contains(&beta) {
            return Err(Error::BetaOutOfRange(beta));
        }
        let radius = if beta == 0.25 {
            f64::INFINITY
        } else {
            2.0 / (1.0 - 4.0 * beta).sqrt()
        };
        Ok(Self {
            name: format!("newmark:{beta}"),
            radius,
            kind: Kind::Newmark { beta },
        })
    }

    /// The exact propagator restricted to the Nyquist cell, `f(a) = a`, `R = pi`.
    pub fn exact_phase() -> Self {
        Self {
            name: "exact".into(),
            radius: PI,
            kind: Kind::ExactPhase,
        }
    }

    /// User scheme given by `f` alone; derivatives come from central differences.
    pub fn custom(
        name: impl Into<String>,
        radius: f64,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter {
                name: "radius",
                reason: format!("domain radius must be positive, got {radius}"),
            });
        }
        Ok(Self {
            name: name.into(),
            radius,
            kind: Kind::Custom(Arc::new(f)),
        })
    }

    /// Parses `midpoint`, `gauss4`, `exact` or `newmark:<beta>`.
    pub fn from_name(name: &str) -> Result<Self> {
        match name.trim() {
            "midpoint" => Ok(Self::midpoint()),
            "gauss4" => Ok(Self::gauss4()),
            "exact" => Ok(Self::exact_phase()),
            other => match other.strip_prefix("newmark:") {
                Some(beta) => {
                    let beta: f64 = beta.trim().parse().map_err(|_| Error::InvalidParameter {
                        name: "scheme",
                        reason: format!("cannot parse Newmark beta from `{beta}`"),
                    })?;
                    Self::newmark(beta)
                }
                None => Err(Error::InvalidParameter {
                    name: "scheme",
                    reason: format!(
                        "unknown scheme `{other}` (expected midpoint | gauss4 | exact | newmark:<beta>)"
                    ),
                }),
            },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Domain radius `R` in units of `alpha = mu tau`.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn has_closed_form_derivatives(&self) -> bool {
        !matches!(self.kind, Kind::Custom(_))
    }

    fn check(&self, alpha: f64) -> Result<()> {
        if alpha.abs() < self.radius {
            Ok(())
        } else {
            Err(Error::OutsideDomain {
                alpha,
                radius: self.radius,
            })
        }
    }

    pub fn f(&self, alpha: f64) -> Result<f64> {
        self.check(alpha)?;
        Ok(self.f_raw(alpha))
    }

    pub fn f_prime(&self, alpha: f64) -> Result<f64> {
        self.check(alpha)?;
        Ok(self.f_prime_raw(alpha))
    }

    pub fn f_second(&self, alpha: f64) -> Result<f64> {
        self.check(alpha)?;
        Ok(self.f_second_raw(alpha))
    }

    fn f_raw(&self, a: f64) -> f64 {
        match &self.kind {
            Kind::Midpoint => 2.0 * (0.5 * a).atan(),
            // atan2 keeps the branch continuous up to |a| -> R where 12 - a^2 -> 0+
            Kind::Gauss4 => 2.0 * (6.0 * a).atan2(12.0 - a * a),
            Kind::Newmark { beta } => {
                let root = (1.0 + (beta - 0.25) * a * a).sqrt();
                2.0 * (0.5 * a).atan2(root)
            }
            Kind::ExactPhase => a,
            Kind::Custom(f) => f(a),
        }
    }

    fn f_prime_raw(&self, a: f64) -> f64 {
        let a2 = a * a;
        match &self.kind {
            Kind::Midpoint => 1.0 / (1.0 + 0.25 * a2),
            Kind::Gauss4 => 12.0 * (12.0 + a2) / (a2 * a2 + 12.0 * a2 + 144.0),
            Kind::Newmark { beta } => {
                1.0 / ((1.0 + (beta - 0.25) * a2).sqrt() * (1.0 + beta * a2))
            }
            Kind::ExactPhase => 1.0,
            Kind::Custom(f) => {
                let h = FD_STEP;
                (f(a + h) - f(a - h)) / (2.0 * h)
            }
        }
    }

    fn f_second_raw(&self, a: f64) -> f64 {
        let a2 = a * a;
        match &self.kind {
            Kind::Midpoint => {
                let d = 1.0 + 0.25 * a2;
                -0.5 * a / (d * d)
            }
            Kind::Gauss4 => {
                let num = 144.0 + 12.0 * a2;
                let den = a2 * a2 + 12.0 * a2 + 144.0;
                (24.0 * a * den - num * (4.0 * a2 * a + 24.0 * a)) / (den * den)
            }
            Kind::Newmark { beta } => {
                let c = beta - 0.25;
                let s = 1.0 + c * a2;
                let p = 1.0 + beta * a2;
                -c * a / (s.powf(1.5) * p) - 2.0 * beta * a / (s.sqrt() * p * p)
            }
            Kind::ExactPhase => 0.0,
            Kind::Custom(f) => {
                let h = FD_STEP_SECOND;
                (f(a + h) - 2.0 * f(a) + f(a - h)) / (h * h)
            }
        }
    }
}

/// `g = f^{-1}` on `[-f(delta), f(delta)]`.
///
/// Newton iteration safeguarded by bisection on `[-delta, delta]`; `f` is
/// strictly increasing there, so the bracket never loses the root.
pub fn inverse_g(scheme: &Scheme, y: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) || delta >= scheme.radius() {
        return Err(Error::BandExceedsScheme {
            delta,
            radius: scheme.radius(),
        });
    }
    let limit = scheme.f_raw(delta);
    if y.abs() > limit * (1.0 + 4.0 * f64::EPSILON) {
        return Err(Error::TargetOutOfRange { y, limit });
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (-delta, delta);
    let mut x = y.clamp(lo, hi);
    for _ in 0..200 {
        let r = scheme.f_raw(x) - y;
        if r == 0.0 {
            return Ok(x);
        }
        if r > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = scheme.f_prime_raw(x);
        let mut next = x - r / d;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-16 * x.abs().max(1.0) {
            return Ok(next);
        }
        x = next;
        if hi - lo <= 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    Ok(x)
}

/// Extremal values of `f'` on `[-delta, delta]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FPrimeRange {
    pub inf: f64,
    pub sup: f64,
    pub argmin: f64,
    pub argmax: f64,
}

/// `inf` and `sup` of `f'` on `[-delta, delta]` by dense sampling and golden-section refinement.
pub fn band_inf_sup_fprime(scheme: &Scheme, delta: f64) -> Result<FPrimeRange> {
    band_inf_sup_fprime_with(scheme, delta, DEFAULT_SAMPLES)
}

pub fn band_inf_sup_fprime_with(scheme: &Scheme, delta: f64, samples: usize) -> Result<FPrimeRange> {
    if !(delta >= 0.0) || delta >= scheme.radius() {
        return Err(Error::BandExceedsScheme {
            delta,
            radius: scheme.radius(),
        });
    }
    if delta == 0.0 {
        let v = scheme.f_prime_raw(0.0);
        return Ok(FPrimeRange {
            inf: v,
            sup: v,
            argmin: 0.0,
            argmax: 0.0,
        });
    }
    let n = samples.max(16);
    let h = 2.0 * delta / n as f64;
    let grid: Vec<f64> = (0..=n).map(|i| -delta + i as f64 * h).collect();
    let vals: Vec<f64> = grid.iter().map(|&a| scheme.f_prime_raw(a)).collect();
    let imin = argbest(&vals, |a, b| a < b);
    let imax = argbest(&vals, |a, b| a > b);
    let refine = |i: usize, sign: f64| {
        let lo = grid[i.saturating_sub(1)];
        let hi = grid[(i + 1).min(n)];
        let (a, v) = golden_section(|x| sign * scheme.f_prime_raw(x), lo, hi, 1e-12);
        let v = sign * v;
        // keep the sample if refinement did not improve it
        if sign * v <= sign * vals[i] {
            (a, v)
        } else {
            (grid[i], vals[i])
        }
    };
    let (argmin, inf) = refine(imin, 1.0);
    let (argmax, sup) = refine(imax, -1.0);
    Ok(FPrimeRange {
        inf,
        sup,
        argmin,
        argmax,
    })
}

fn argbest(vals: &[f64], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = 0;
    for (i, &v) in vals.iter().enumerate() {
        if better(v, vals[best]) {
            best = i;
        }
    }
    best
}

/// Minimizes `phi` on `[lo, hi]`; returns `(argmin, min)`.
fn golden_section(phi: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = phi(x1);
    let mut f2 = phi(x2);
    while hi - lo > tol {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = phi(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = phi(x2);
        }
    }
    let candidates = [(lo, phi(lo)), (hi, phi(hi)), (x1, f1), (x2, f2)];
    candidates
        .into_iter()
        .fold((x1, f1), |best, c| if c.1 < best.1 { c } else { best })
}

/// Critical observation time `T0 / inf_{|a| <= delta} f'(a)`.
pub fn uniform_time_threshold(scheme: &Scheme, delta: f64, t0: f64) -> Result<f64> {
    if !(t0 > 0.0) {
        return Err(Error::InvalidParameter {
            name: "T0",
            reason: format!("continuous observation time must be positive, got {t0}"),
        });
    }
    Ok(t0 / band_inf_sup_fprime(scheme, delta)?.inf)
}

/// One hypothesis check with its worst sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub worst_alpha: f64,
    pub worst_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub scheme: String,
    pub radius: f64,
    pub delta: f64,
    pub samples: usize,
    pub checks: Vec<CheckOutcome>,
    pub notes: Vec<String>,
}

impl HypothesisReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const CHECK_DOMAIN: &str = "domain";
pub const CHECK_CONSISTENCY: &str = "consistency";
pub const CHECK_ODD: &str = "odd";
pub const CHECK_RANGE: &str = "range";
pub const CHECK_MONOTONE: &str = "monotone";

/// Runs the consistency, oddness, range and monotonicity checks on `[-delta, delta]`.
///
/// Samples a uniform grid of `samples + 1` points plus as many seeded random
/// points. Failures are recorded with the witnessing `alpha`; a range failure
/// is located to the crossing point `|f(alpha)| = pi` by bisection.
pub fn certify(scheme: &Scheme, delta: f64, samples: usize) -> HypothesisReport {
    let samples = samples.max(16);
    let radius = scheme.radius();
    let mut report = HypothesisReport {
        scheme: scheme.name().to_owned(),
        radius,
        delta,
        samples,
        checks: Vec::new(),
        notes: Vec::new(),
    };
    if let Kind::Newmark { beta } = scheme.kind {
        if beta < 0.25 {
            report.notes.push(format!(
                "R = 2/sqrt(1 - 4 beta) = {radius} is the natural domain of the closed form"
            ));
        }
    }
    if !scheme.has_closed_form_derivatives() {
        report
            .notes
            .push(format!("derivatives by central differences, h = {FD_STEP}"));
    }

    let in_domain = delta > 0.0 && delta < radius;
    report.checks.push(CheckOutcome {
        name: CHECK_DOMAIN,
        passed: in_domain,
        worst_alpha: delta,
        worst_value: radius,
    });
    if !in_domain {
        return report;
    }

    let f0 = scheme.f_raw(0.0);
    let fp0 = scheme.f_prime_raw(0.0);
    let consistency_err = f0.abs().max((fp0 - 1.0).abs());
    report.checks.push(CheckOutcome {
        name: CHECK_CONSISTENCY,
        passed: consistency_err <= 1e-10,
        worst_alpha: 0.0,
        worst_value: consistency_err,
    });

    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_F00D);
    let mut points: Vec<f64> = (0..=samples)
        .map(|i| -delta + 2.0 * delta * i as f64 / samples as f64)
        .collect();
    points.extend((0..samples).map(|_| rng.random_range(-delta..=delta)));

    let (odd_alpha, odd_err) = points
        .iter()
        .map(|&a| (a, (scheme.f_raw(a) + scheme.f_raw(-a)).abs()))
        .fold((0.0, 0.0), |best, c| if c.1 > best.1 { c } else { best });
    report.checks.push(CheckOutcome {
        name: CHECK_ODD,
        passed: odd_err <= 1e-12,
        worst_alpha: odd_alpha,
        worst_value: odd_err,
    });

    report.checks.push(range_check(scheme, delta, samples));

    let monotone = band_inf_sup_fprime_with(scheme, delta, samples)
        .expect("delta checked against the domain above");
    report.checks.push(CheckOutcome {
        name: CHECK_MONOTONE,
        passed: monotone.inf > 0.0,
        worst_alpha: monotone.argmin,
        worst_value: monotone.inf,
    });
    report
}

fn range_check(scheme: &Scheme, delta: f64, samples: usize) -> CheckOutcome {
    // sweep outward from 0 on both sides so the first violation brackets the crossing
    let step = delta / samples as f64;
    let mut worst = (0.0, 0.0);
    for sign in [1.0, -1.0] {
        let mut prev = 0.0;
        for i in 1..=samples {
            let a = sign * step * i as f64;
            let v = scheme.f_raw(a);
            if !(v.abs() < PI) {
                let crossing = bisect_crossing(scheme, prev, a);
                return CheckOutcome {
                    name: CHECK_RANGE,
                    passed: false,
                    worst_alpha: crossing,
                    worst_value: scheme.f_raw(crossing),
                };
            }
            if v.abs() > worst.1 {
                worst = (a, v.abs());
            }
            prev = a;
        }
    }
    CheckOutcome {
        name: CHECK_RANGE,
        passed: true,
        worst_alpha: worst.0,
        worst_value: worst.1,
    }
}

/// Smallest `|alpha|` between `inside` and `outside` where `|f| >= pi`.
fn bisect_crossing(scheme: &Scheme, mut inside: f64, mut outside: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (inside + outside);
        if mid == inside || mid == outside {
            break;
        }
        if scheme.f_raw(mid).abs() < PI {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    outside
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_values() {
        let m = Scheme::midpoint();
        assert_eq!(m.f(0.0).unwrap(), 0.0);
        assert!((m.f_prime(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((m.f(2.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((m.f_prime(2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(m.radius().is_infinite());
    }

    #[test]
    fn gauss4_values() {
        let g = Scheme::gauss4();
        assert_eq!(g.f(0.0).unwrap(), 0.0);
        // 2 atan(1.5) to 20 digits (mpmath)
        assert!((g.f(2.0).unwrap() - 1.965_587_446_494_658).abs() < 1e-15);
        let near = g.radius() * (1.0 - 1e-9);
        assert!(PI - g.f(near).unwrap() < 1e-6);
        assert!(matches!(g.f(3.5), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn newmark_quarter_is_midpoint() {
        let n = Scheme::newmark(0.25).unwrap();
        let m = Scheme::midpoint();
        for a in [-7.0, -1.3, 0.0, 0.4, 2.0, 11.0] {
            assert!((n.f(a).unwrap() - m.f(a).unwrap()).abs() < 1e-15);
            assert!((n.f_prime(a).unwrap() - m.f_prime(a).unwrap()).abs() < 1e-15);
        }
        assert!(n.radius().is_infinite());
    }

    #[test]
    fn newmark_zero_radius_two() {
        let n = Scheme::newmark(0.0).unwrap();
        assert!((n.radius() - 2.0).abs() < 1e-15);
        assert_eq!(n.f(0.0).unwrap(), 0.0);
        for beta in [0.0, 0.05, 0.1, 0.2] {
            assert_eq!(Scheme::newmark(beta).unwrap().f(0.0).unwrap(), 0.0);
        }
        assert!(matches!(Scheme::newmark(0.3), Err(Error::BetaOutOfRange(_))));
        assert!(matches!(Scheme::newmark(-0.1), Err(Error::BetaOutOfRange(_))));
    }

    #[test]
    fn closed_form_derivatives_match_differences() {
        for s in [
            Scheme::midpoint(),
            Scheme::gauss4(),
            Scheme::newmark(0.0).unwrap(),
            Scheme::newmark(0.1).unwrap(),
        ] {
            for a in [-1.5, -0.3, 0.0, 0.7, 1.6] {
                let h = 1e-5;
                let fd1 = (s.f(a + h).unwrap() - s.f(a - h).unwrap()) / (2.0 * h);
                let fd2 = (s.f_prime(a + h).unwrap() - s.f_prime(a - h).unwrap()) / (2.0 * h);
                assert!((fd1 - s.f_prime(a).unwrap()).abs() < 1e-8, "{} f' at {a}", s.name());
                assert!((fd2 - s.f_second(a).unwrap()).abs() < 1e-7, "{} f'' at {a}", s.name());
            }
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!(Scheme::from_name("midpoint").unwrap().name(), "midpoint");
        assert_eq!(Scheme::from_name("gauss4").unwrap().name(), "gauss4");
        assert!((Scheme::from_name("newmark:0.2").unwrap().radius() - 2.0 / 0.2f64.sqrt()).abs() < 1e-12);
        assert!(Scheme::from_name("newmark:x").is_err());
        assert!(Scheme::from_name("euler").is_err());
    }

    #[test]
    fn inverse_examples() {
        let m = Scheme::midpoint();
        assert_eq!(inverse_g(&m, 0.0, 3.0).unwrap(), 0.0);
        assert!((inverse_g(&m, PI / 2.0, 3.0).unwrap() - 2.0).abs() < 1e-14);
        for s in [Scheme::midpoint(), Scheme::gauss4(), Scheme::newmark(0.2).unwrap()] {
            let y = s.f(1.3).unwrap();
            assert!((inverse_g(&s, y, 2.0).unwrap() - 1.3).abs() < 1e-12, "{}", s.name());
        }
    }

    #[test]
    fn inverse_rejects_out_of_range() {
        let m = Scheme::midpoint();
        assert!(matches!(
            inverse_g(&m, 2.0, 1.0),
            Err(Error::TargetOutOfRange { .. })
        ));
        assert!(matches!(
            inverse_g(&Scheme::gauss4(), 0.1, 4.0),
            Err(Error::BandExceedsScheme { .. })
        ));
    }

    #[test]
    fn fprime_range_midpoint() {
        let m = Scheme::midpoint();
        let r = band_inf_sup_fprime(&m, 1.0).unwrap();
        assert!((r.inf - 0.8).abs() < 1e-12);
        assert!((r.sup - 1.0).abs() < 1e-12);
        let r2 = band_inf_sup_fprime(&m, 2.0).unwrap();
        assert!((r2.inf - 0.5).abs() < 1e-12);
        for d in [0.3, 1.0, 2.5, 5.0] {
            let r = band_inf_sup_fprime(&m, d).unwrap();
            assert!((r.inf * (1.0 + d * d / 4.0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fprime_range_gauss4_matches_endpoint() {
        let g = Scheme::gauss4();
        let r = band_inf_sup_fprime(&g, 1.0).unwrap();
        assert!((r.inf - g.f_prime(1.0).unwrap()).abs() < 1e-12);
        assert!((r.sup - 1.0).abs() < 1e-12);
        assert!(band_inf_sup_fprime(&g, 3.5).is_err());
    }

    #[test]
    fn fprime_range_newmark_zero_is_increasing() {
        // f'(a) = 1/sqrt(1 - a^2/4) grows away from 0
        let n = Scheme::newmark(0.0).unwrap();
        let r = band_inf_sup_fprime(&n, 1.0).unwrap();
        assert!((r.inf - 1.0).abs() < 1e-12);
        assert!((r.sup - 1.0 / 0.75f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn thresholds() {
        let m = Scheme::midpoint();
        assert!((uniform_time_threshold(&m, 2.0, 2.0).unwrap() - 4.0).abs() < 1e-12);
        assert!((uniform_time_threshold(&m, 1.0, 1.0).unwrap() - 1.25).abs() < 1e-12);
        assert!((uniform_time_threshold(&m, 1e-4, 1.0).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn certify_midpoint_and_gauss4() {
        let r = certify(&Scheme::midpoint(), 3.0, 2048);
        assert!(r.all_passed(), "{r:?}");
        let r = certify(&Scheme::gauss4(), 3.4, 2048);
        assert!(r.all_passed(), "{r:?}");
    }

    #[test]
    fn certify_identity_fails_range_at_pi() {
        let id = Scheme::custom("identity", f64::INFINITY, |a| a).unwrap();
        let r = certify(&id, 4.0, 2048);
        let range = r.check(CHECK_RANGE).unwrap();
        assert!(!range.passed);
        assert!((range.worst_alpha.abs() - PI).abs() < 1e-12);
        assert!(r.check(CHECK_CONSISTENCY).unwrap().passed);
    }

    #[test]
    fn certify_records_domain_failure() {
        let r = certify(&Scheme::gauss4(), 4.0, 128);
        assert!(!r.all_passed());
        assert!(!r.check(CHECK_DOMAIN).unwrap().passed);
    }
}
