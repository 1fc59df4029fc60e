use serde::Serialize;

use crate::error::{Error, Result};

/// `exp(-1/x)` for `x > 0`, else 0.
fn bump_edge(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth step: 0 for `x <= 0`, 1 for `x >= 1`.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = bump_edge(x);
        a / (a + bump_edge(1.0 - x))
    }
}

/// Even plateau function: 1 on `inner_one <= |a| <= plateau`, 0 for `|a| >= support`
/// and, when an inner edge is set, 0 for `|a| <= inner_zero`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cutoff {
    plateau: f64,
    support: f64,
    inner: Option<(f64, f64)>,
}

impl Cutoff {
    pub fn new(plateau: f64, support: f64) -> Result<Self> {
        if !(plateau > 0.0 && support > plateau && support.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "cutoff",
                reason: format!("need 0 < plateau < support, got {plateau}, {support}"),
            });
        }
        Ok(Self {
            plateau,
            support,
            inner: None,
        })
    }

    /// Band version vanishing near the origin: rises on `[inner_zero, inner_one]`.
    pub fn band(inner_zero: f64, inner_one: f64, plateau: f64, support: f64) -> Result<Self> {
        let mut c = Self::new(plateau, support)?;
        if !(inner_zero >= 0.0 && inner_one > inner_zero && inner_one < plateau) {
            return Err(Error::InvalidParameter {
                name: "cutoff",
                reason: format!(
                    "need 0 <= inner_zero < inner_one < plateau, got {inner_zero}, {inner_one}, {plateau}"
                ),
            });
        }
        c.inner = Some((inner_zero, inner_one));
        Ok(c)
    }

    pub fn plateau(&self) -> f64 {
        self.plateau
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    pub fn inner(&self) -> Option<(f64, f64)> {
        self.inner
    }

    /// Always 1: the plateau is attained.
    pub fn sup_norm(&self) -> f64 {
        1.0
    }

    pub fn eval(&self, alpha: f64) -> f64 {
        let a = alpha.abs();
        let outer = smooth_step((self.support - a) / (self.support - self.plateau));
        match self.inner {
            Some((z, o)) => outer * smooth_step((a - z) / (o - z)),
            None => outer,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_plateau_and_exterior() {
        let c = Cutoff::new(1.0, 1.5).unwrap();
        for a in [0.0, 0.3, -0.99, 1.0, -1.0] {
            assert_eq!(c.eval(a), 1.0);
        }
        for a in [1.5, -1.5, 2.0, 100.0] {
            assert_eq!(c.eval(a), 0.0);
        }
        let mid = c.eval(1.25);
        assert!((mid - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bounded_and_even() {
        let c = Cutoff::new(0.7, 2.0).unwrap();
        for i in 0..=400 {
            let a = -2.5 + 5.0 * i as f64 / 400.0;
            let v = c.eval(a);
            assert!((0.0..=1.0).contains(&v));
            assert_eq!(v, c.eval(-a));
        }
    }

    #[test]
    fn transition_derivatives_bounded() {
        let c = Cutoff::new(1.0, 1.5).unwrap();
        let h = 1e-3;
        let mut worst: f64 = 0.0;
        for i in 0..=500 {
            let a = 1.0 + 0.5 * i as f64 / 500.0;
            // fourth central difference
            let d4 = (c.eval(a + 2.0 * h) - 4.0 * c.eval(a + h) + 6.0 * c.eval(a)
                - 4.0 * c.eval(a - h)
                + c.eval(a - 2.0 * h))
                / h.powi(4);
            worst = worst.max(d4.abs());
        }
        assert!(worst.is_finite() && worst < 1e5, "{worst}");
    }

    #[test]
    fn band_cutoff_vanishes_inside() {
        let c = Cutoff::band(0.2, 0.4, 1.0, 1.5).unwrap();
        assert_eq!(c.eval(0.0), 0.0);
        assert_eq!(c.eval(0.2), 0.0);
        assert_eq!(c.eval(0.4), 1.0);
        assert_eq!(c.eval(-0.7), 1.0);
        assert!(Cutoff::band(0.4, 0.2, 1.0, 1.5).is_err());
        assert!(Cutoff::new(1.0, 1.0).is_err());
    }
}
