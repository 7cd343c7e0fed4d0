//! Quadrature plumbing shared by the model checks and the ergodic predictor.
//!
//! Node generation comes from `gauss-quad`.

use gauss_quad::{GaussHermite, GaussLegendre};

/// Points per Gauss–Legendre panel.
pub const PANEL_ORDER: usize = 16;

/// Log-weight drop below the peak at which an integrand is treated as zero
/// (e^-46 ≈ 1e-20).
pub const LOG_CUTOFF: f64 = 46.0;

/// Hard limit on the reaction-coordinate domain; matches the default
/// divergence cut of the dynamics.
pub const X_CAP: f64 = 1.0e3;

#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Composite Gauss–Legendre rule on `[a, b]` with `panels` equal panels.
pub fn composite_legendre(a: f64, b: f64, panels: usize) -> Rule {
    let base = GaussLegendre::new(PANEL_ORDER).expect("order >= 2");
    let pairs = base.as_node_weight_pairs();
    let width = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * PANEL_ORDER);
    let mut weights = Vec::with_capacity(panels * PANEL_ORDER);
    for k in 0..panels {
        let lo = a + k as f64 * width;
        let mid = lo + 0.5 * width;
        for &(t, w) in pairs {
            nodes.push(mid + 0.5 * width * t);
            weights.push(0.5 * width * w);
        }
    }
    Rule { nodes, weights }
}

/// Composite rule on `[a, b]` whose panels start at width `h` next to `a`
/// and double until they reach `(b − a)/4`; each panel is then split into
/// `split` equal pieces. Resolves integrands with a boundary layer of width
/// `h` at `a`.
pub fn graded_legendre(a: f64, b: f64, h: f64, split: usize) -> Rule {
    let cap = (b - a) / 4.0;
    let mut width = h.clamp(f64::MIN_POSITIVE, cap);
    let mut edges = vec![a];
    let mut at = a;
    while at < b {
        let next = (at + width).min(b);
        // Avoid a sliver at the end.
        let next = if b - next < 0.5 * width { b } else { next };
        edges.push(next);
        at = next;
        width = (2.0 * width).min(cap);
    }
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for pair in edges.windows(2) {
        let piece = composite_legendre(pair[0], pair[1], split);
        nodes.extend(piece.nodes);
        weights.extend(piece.weights);
    }
    Rule { nodes, weights }
}

/// Gauss–Hermite rule for ∫ e^{-y²} f(y) dy.
pub fn hermite(n: usize) -> Rule {
    let gh = GaussHermite::new(n).expect("order >= 2");
    let (nodes, weights) = gh.as_node_weight_pairs().iter().copied().unzip();
    Rule { nodes, weights }
}

/// Interval outside which `log_weight` lies more than [`LOG_CUTOFF`] below
/// its maximum. The second element reports whether the interval was clipped
/// by [`X_CAP`], i.e. whether the weight fails to decay inside the cap.
pub fn significant_interval(log_weight: impl Fn(f64) -> f64) -> ((f64, f64), bool) {
    const STEP: f64 = 0.05;
    let n = (2.0 * X_CAP / STEP).round() as usize;
    let at = |k: usize| -X_CAP + k as f64 * STEP;
    let values: Vec<f64> = (0..=n).map(|k| log_weight(at(k))).collect();
    let peak = values
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    let keep = |v: f64| v.is_finite() && v > peak - LOG_CUTOFF;
    let first = values.iter().position(|&v| keep(v)).unwrap_or(0);
    let last = values.iter().rposition(|&v| keep(v)).unwrap_or(n);
    let clipped = first == 0 || last == n;
    let lo = at(first.saturating_sub(1));
    let hi = at((last + 1).min(n));
    ((lo, hi), clipped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn composite_rule_is_exact_for_polynomials() {
        let rule = composite_legendre(-1.0, 3.0, 4);
        let value = rule.integrate(|x| x.powi(5) - 2.0 * x);
        let exact = (3f64.powi(6) - 1.0) / 6.0 - (9.0 - 1.0);
        assert_relative_eq!(value, exact, max_relative = 1e-13);
    }

    #[test]
    fn hermite_second_moment() {
        let rule = hermite(20);
        let value = rule.integrate(|y| y * y);
        assert_relative_eq!(value, std::f64::consts::PI.sqrt() / 2.0, max_relative = 1e-13);
    }

    #[test]
    fn interval_brackets_a_gaussian() {
        let ((lo, hi), clipped) = significant_interval(|x| -0.5 * (x - 2.0) * (x - 2.0));
        assert!(!clipped);
        let half = (2.0 * LOG_CUTOFF).sqrt();
        assert!((lo - (2.0 - half)).abs() < 0.1);
        assert!((hi - (2.0 + half)).abs() < 0.1);
    }

    #[test]
    fn flat_weight_is_reported_as_clipped() {
        let (_, clipped) = significant_interval(|_| 0.0);
        assert!(clipped);
    }
}
