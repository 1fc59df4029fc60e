//! Fixed quadrature rules used by the kernel and Fourier modules.
//!
//! Kernel integrals are smooth, compactly supported and oscillatory, so a
//! composite Gauss-Legendre rule with a panel count tied to the phase
//! derivative is enough. Periodic integrands over a full Nyquist cell use the
//! composite trapezoid rule, which is spectrally accurate there.

use std::f64::consts::PI;

/// Nodes per Gauss-Legendre panel.
pub const PANEL_ORDER: usize = 16;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the `n`-point rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Node/weight pairs of the composite rule with `panels` equal panels on `[lo, hi]`.
    pub fn composite(&self, lo: f64, hi: f64, panels: usize) -> Vec<(f64, f64)> {
        let panels = panels.max(1);
        let width = (hi - lo) / panels as f64;
        let half = 0.5 * width;
        let mut out = Vec::with_capacity(panels * self.nodes.len());
        for p in 0..panels {
            let center = lo + (p as f64 + 0.5) * width;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                out.push((center + half * x, half * w));
            }
        }
        out
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Midpoint-shifted trapezoid nodes on a periodic cell `[lo, lo + period)`.
///
/// For a periodic integrand the composite trapezoid rule reduces to an equal
/// weight sum; the nodes avoid the cell endpoints.
pub fn periodic_trapezoid(lo: f64, period: f64, nodes: usize) -> Vec<(f64, f64)> {
    let h = period / nodes as f64;
    (0..nodes).map(|i| (lo + (i as f64 + 0.5) * h, h)).collect()
}

/// Composite trapezoid nodes on `[lo, hi]` with spacing at most `max_step`.
pub fn trapezoid(lo: f64, hi: f64, max_step: f64) -> Vec<(f64, f64)> {
    let intervals = (((hi - lo) / max_step).ceil() as usize).max(1);
    let h = (hi - lo) / intervals as f64;
    (0..=intervals)
        .map(|i| {
            let w = if i == 0 || i == intervals { 0.5 * h } else { h };
            (lo + i as f64 * h, w)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(PANEL_ORDER);
        // degree 2n-1 = 31 is exact
        let s: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| w * x.powi(30))
            .sum();
        assert!((s - 2.0 / 31.0).abs() < 1e-14);
        let total: f64 = rule.weights.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn odd_order_has_center_node() {
        let rule = GaussLegendre::new(5);
        assert_eq!(rule.nodes[2], 0.0);
        assert!((rule.weights[2] - 128.0 / 225.0).abs() < 1e-14);
    }

    #[test]
    fn composite_rule_handles_oscillation() {
        let rule = GaussLegendre::new(PANEL_ORDER);
        let pts = rule.composite(0.0, 10.0, 20);
        let s: f64 = pts.iter().map(|(x, w)| w * (7.0 * x).cos()).sum();
        assert!((s - (70.0f64).sin() / 7.0).abs() < 1e-13);
    }

    #[test]
    fn periodic_trapezoid_is_exact_for_trig_polynomials() {
        let pts = periodic_trapezoid(-PI, 2.0 * PI, 16);
        let s: f64 = pts.iter().map(|(x, w)| w * (3.0 * x).cos().powi(2)).sum();
        assert!((s - PI).abs() < 1e-13);
    }
}
