//! Long-time limits of `C_Iz` from classical ergodic theory, evaluated by
//! deterministic quadrature.
//!
//! Every bath average is a ratio of integrals against `e^{−βU_RC}`; the
//! secondary bath cancels. Hyperbolic functions are carried in scaled form
//! `sh(y) = e^{−y} sinh y`, `ch(y) = e^{−y} cosh y` with the exponent moved
//! into a per-node log weight, so no intermediate overflows.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mapping::{radial_moment, Method, MomentKind, RadialLaw};
use crate::models::{EnergySplit, ModelKind, TwoLevelModel};
use crate::quadrature::{self, Rule};

/// Default bound on the quadrature error of a prediction.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Below this argument the removable singularities use their series.
const SERIES_SWITCH: f64 = 1e-2;

/// Target panel width of the reaction-coordinate grid.
const PANEL_WIDTH: f64 = 1.0;
const MAX_PANELS: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictionResult {
    pub value: f64,
    pub abs_err: f64,
    /// `None` for the exact quantum–classical benchmark.
    pub method: Option<Method>,
    pub model: TwoLevelModel,
    pub beta: f64,
    /// False if the Boltzmann weight does not decay inside the domain cap;
    /// the value is then the limit on the capped domain.
    pub normalizable: bool,
    /// High- and low-temperature radial factors of mean-field methods.
    pub limit_factors: Option<(f64, f64)>,
}

#[inline]
fn sh(y: f64) -> f64 {
    -0.5 * (-2.0 * y).exp_m1()
}

#[inline]
fn ch(y: f64) -> f64 {
    0.5 * (1.0 + (-2.0 * y).exp())
}

/// Reaction-coordinate quadrature nodes with their energy splits.
#[derive(Debug, Clone)]
pub struct BathGrid {
    pub x: Vec<f64>,
    log_w: Vec<f64>,
    split: Vec<EnergySplit>,
    pub domain: (f64, f64),
    pub clipped: bool,
    panels: usize,
    beta: f64,
}

impl BathGrid {
    /// Grid covering the significant region of `e^{−β(U − cV_z)}` for every
    /// `c` in `gap_multiples`.
    pub fn new(model: &TwoLevelModel, beta: f64, gap_multiples: &[f64]) -> Self {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut clipped = false;
        for &c in gap_multiples {
            let ((a, b), clip) =
                quadrature::significant_interval(|x| -beta * model.energy_split(x).shifted(c));
            lo = lo.min(a);
            hi = hi.max(b);
            clipped |= clip;
        }
        let panels = (((hi - lo) / PANEL_WIDTH).ceil() as usize).clamp(16, MAX_PANELS);
        Self::on(model, beta, (lo, hi), panels, clipped)
    }

    fn on(model: &TwoLevelModel, beta: f64, domain: (f64, f64), panels: usize, clipped: bool) -> Self {
        let rule = quadrature::composite_legendre(domain.0, domain.1, panels);
        BathGrid {
            log_w: rule.weights.iter().map(|w| w.ln()).collect(),
            split: rule.nodes.iter().map(|&x| model.energy_split(x)).collect(),
            x: rule.nodes,
            domain,
            clipped,
            panels,
            beta,
        }
    }

    /// Largest `V_z` on the grid.
    pub fn v_max(&self) -> f64 {
        self.split.iter().map(EnergySplit::v_z).fold(0.0, f64::max)
    }

    /// Same interval with twice the panels.
    pub fn refined(&self, model: &TwoLevelModel) -> Self {
        Self::on(model, self.beta, self.domain, 2 * self.panels, self.clipped)
    }

    /// Scaled sum `Σ w e^{−β(U − cV_z)} f` as `(max exponent, sum)`, where
    /// `term` maps `βV_z` to `(c, f)`.
    fn scaled_sum(&self, term: impl Fn(f64) -> (f64, f64)) -> (f64, f64) {
        // Streaming log-sum-exp: `sum` is relative to the running maximum.
        let mut top = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for (lw, sp) in self.log_w.iter().zip(&self.split) {
            let (c, f) = term(self.beta * sp.v_z());
            if f == 0.0 {
                continue;
            }
            let e = lw - self.beta * sp.shifted(c);
            if e > top {
                sum = sum * (top - e).exp() + f;
                top = e;
            } else {
                sum += f * (e - top).exp();
            }
        }
        if !top.is_finite() {
            return (0.0, 0.0);
        }
        (top, sum)
    }

    fn ratio(&self, num: impl Fn(f64) -> (f64, f64), den: impl Fn(f64) -> (f64, f64)) -> f64 {
        let (mn, sn) = self.scaled_sum(num);
        let (md, sd) = self.scaled_sum(den);
        if sn == 0.0 {
            return 0.0;
        }
        (mn - md).exp() * sn / sd
    }
}

/// `⟨f⟩_b` against `e^{−βU_RC}`. Gauss–Hermite for the harmonic model,
/// composite Gauss–Legendre otherwise; both checked by refinement.
pub fn bath_average(model: &TwoLevelModel, beta: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    let tolerance = 1e-10;
    let estimate = |rule: &Rule, norm: &dyn Fn(f64) -> f64| -> f64 {
        let z: f64 = rule.nodes.iter().zip(&rule.weights).map(|(&x, &w)| w * norm(x)).sum();
        let s: f64 = rule.nodes.iter().zip(&rule.weights).map(|(&x, &w)| w * norm(x) * f(x)).sum();
        s / z
    };
    let (coarse, fine) = match model.kind {
        ModelKind::SpinBoson => {
            let scale = (2.0 / beta).sqrt() / model.omega;
            let map = |rule: Rule| Rule {
                nodes: rule.nodes.iter().map(|y| y * scale).collect(),
                weights: rule.weights,
            };
            let one = |_: f64| 1.0;
            (estimate(&map(quadrature::hermite(64)), &one), estimate(&map(quadrature::hermite(128)), &one))
        }
        ModelKind::Anharmonic => {
            let ((lo, hi), _) = quadrature::significant_interval(|x| -beta * model.u_rc(x).0);
            let u_min = (0..=1000)
                .map(|k| model.u_rc(lo + (hi - lo) * k as f64 / 1000.0).0)
                .fold(f64::INFINITY, f64::min);
            let norm = |x: f64| (-beta * (model.u_rc(x).0 - u_min)).exp();
            let panels = (((hi - lo) / PANEL_WIDTH).ceil() as usize).clamp(16, MAX_PANELS);
            (
                estimate(&quadrature::composite_legendre(lo, hi, panels), &norm),
                estimate(&quadrature::composite_legendre(lo, hi, 2 * panels), &norm),
            )
        }
    };
    let err = (fine - coarse).abs();
    if !fine.is_finite() || err > tolerance * fine.abs().max(1.0) {
        return Err(Error::QuadratureNotConverged {
            what: "bath average",
            estimate: err,
            tolerance,
        });
    }
    Ok(fine)
}

fn finish(
    coarse: f64,
    fine: f64,
    tolerance: f64,
    what: &'static str,
    method: Option<Method>,
    model: &TwoLevelModel,
    beta: f64,
    clipped: bool,
) -> Result<PredictionResult> {
    let abs_err = 2.0 * (fine - coarse).abs() + 4.0 * f64::EPSILON * fine.abs();
    if !fine.is_finite() || abs_err > tolerance {
        return Err(Error::QuadratureNotConverged {
            what,
            estimate: abs_err,
            tolerance,
        });
    }
    let limit_factors = match method {
        Some(m) if m.is_mean_field() => Some((
            radial_moment(&m.spec(), MomentKind::HighT)?,
            radial_moment(&m.spec(), MomentKind::LowT)?,
        )),
        _ => None,
    };
    Ok(PredictionResult {
        value: fine,
        abs_err,
        method,
        model: *model,
        beta,
        normalizable: !clipped,
        limit_factors,
    })
}

fn validate(model: &TwoLevelModel, beta: f64) -> Result<()> {
    model.validate()?;
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::invalid("beta", format!("must be > 0, got {beta}")));
    }
    Ok(())
}

fn exact_value(grid: &BathGrid) -> f64 {
    // −⟨sinh a⟩/⟨cosh a⟩ with a = βV_z.
    -grid.ratio(|a| (1.0, sh(a)), |a| (1.0, ch(a)))
}

/// Quantum–classical benchmark `−⟨sinh βV_z⟩_b / ⟨cosh βV_z⟩_b`.
pub fn predict_exact_qc(model: &TwoLevelModel, beta: f64) -> Result<PredictionResult> {
    validate(model, beta)?;
    let grid = BathGrid::new(model, beta, &[-1.0, 0.0, 1.0]);
    let coarse = exact_value(&grid);
    let fine = exact_value(&grid.refined(model));
    finish(coarse, fine, DEFAULT_TOLERANCE, "exact long-time limit", None, model, beta, grid.clipped)
}

/// `(∫ e^{−βU} e^{−βV_z}, ∫ e^{−βU} e^{+βV_z})` up to a common factor.
fn mash_hemispheres(grid: &BathGrid) -> (f64, f64) {
    let (m_up, s_up) = grid.scaled_sum(|_| (-1.0, 1.0));
    let (m_lo, s_lo) = grid.scaled_sum(|_| (1.0, 1.0));
    let top = m_up.max(m_lo);
    (s_up * (m_up - top).exp(), s_lo * (m_lo - top).exp())
}

/// Equilibrium MASH spin density on `S_z ∈ [−1, 1]`; piecewise constant
/// with `ρ(±) = ⟨e^{∓βV_z}⟩_b / (2⟨cosh βV_z⟩_b)`.
pub fn mash_equilibrium_density(model: &TwoLevelModel, beta: f64, s_z: f64) -> Result<f64> {
    let (upper, lower) = mash_hemisphere_masses(model, beta)?;
    Ok(if s_z >= 0.0 { upper } else { lower })
}

/// Probability masses of the upper and lower hemispheres.
pub fn mash_hemisphere_masses(model: &TwoLevelModel, beta: f64) -> Result<(f64, f64)> {
    validate(model, beta)?;
    let grid = BathGrid::new(model, beta, &[-1.0, 0.0, 1.0]);
    let (up, lo) = mash_hemispheres(&grid);
    Ok((up / (up + lo), lo / (up + lo)))
}

fn mash_value(grid: &BathGrid) -> f64 {
    let (up, lo) = mash_hemispheres(grid);
    // ∫ sgn(S_z) ρ dS_z with ρ(±) = e_∓ / (e₊ + e₋) per unit length.
    (up - lo) / (up + lo)
}

pub fn predict_mash(model: &TwoLevelModel, beta: f64) -> Result<PredictionResult> {
    validate(model, beta)?;
    let grid = BathGrid::new(model, beta, &[-1.0, 0.0, 1.0]);
    let coarse = mash_value(&grid);
    let fine = mash_value(&grid.refined(model));
    finish(coarse, fine, DEFAULT_TOLERANCE, "MASH long-time limit", Some(Method::Mash), model, beta, grid.clipped)
}

fn check_inverted(method: Method, model: &TwoLevelModel, r_max: f64) -> Result<()> {
    if model.kind == ModelKind::Anharmonic && model.alpha > 0.0 && model.alpha * r_max >= 1.0 {
        return Err(Error::InvertedPotential {
            method,
            alpha_r_max: model.alpha * r_max,
        });
    }
    Ok(())
}

/// `⟨rS_z⟩` on the shell of radius `r`: `−r ⟨(a cosh a − sinh a)/a²⟩ / ⟨sinh a / a⟩`
/// with `a = βrV_z`.
fn meanfield_shell(grid: &BathGrid, r: f64) -> f64 {
    let bracket = |v: f64| {
        let a = r * v;
        if a < SERIES_SWITCH {
            let a2 = a * a;
            (0.0, a * (1.0 / 3.0 + a2 * (1.0 / 30.0 + a2 / 840.0)))
        } else {
            (r, (a * ch(a) - sh(a)) / (a * a))
        }
    };
    let z = |v: f64| {
        let a = r * v;
        if a < SERIES_SWITCH {
            let a2 = a * a;
            (0.0, 1.0 + a2 * (1.0 / 6.0 + a2 / 120.0))
        } else {
            (r, sh(a) / a)
        }
    };
    -r * grid.ratio(bracket, z)
}

/// Radial rule graded towards the inner edge, where shells with
/// `βrV_z ≲ 1` vary on the scale `1/(βV_z)`.
fn radial_rule(law: &RadialLaw, beta_v_max: f64, split: usize) -> Rule {
    let (a, b) = law.support();
    quadrature::graded_legendre(a, b, 0.5 / beta_v_max.max(1e-300), split)
}

fn meanfield_value(method: Method, grid: &BathGrid, split: usize) -> f64 {
    let spec = method.spec();
    match spec.radial_law {
        RadialLaw::PointMass(r0) => spec.identity_rep.eval(r0, 0.0) * meanfield_shell(grid, r0),
        law => {
            let rule = radial_rule(&law, grid.beta * grid.v_max(), split);
            rule.nodes
                .par_iter()
                .zip(&rule.weights)
                .map(|(&r, &w)| w * spec.radial_weight(r).unwrap_or(0.0) * meanfield_shell(grid, r))
                .sum()
        }
    }
}

/// Long-time limit of a mean-field method (any Table-1 radial law).
pub fn predict_meanfield(method: Method, model: &TwoLevelModel, beta: f64) -> Result<PredictionResult> {
    validate(model, beta)?;
    if !method.is_mean_field() {
        return Err(Error::UnsupportedMethod(method));
    }
    let spec = method.spec();
    check_inverted(method, model, spec.r_max)?;
    let c_max = spec.radial_law.support().1;
    let cs: Vec<f64> = (0..=4).map(|k| c_max * k as f64 / 4.0).collect();
    let grid = BathGrid::new(model, beta, &cs);
    let coarse = meanfield_value(method, &grid, 1);
    let fine = meanfield_value(method, &grid.refined(model), 2);
    finish(coarse, fine, DEFAULT_TOLERANCE, "mean-field long-time limit", Some(method), model, beta, grid.clipped)
}

fn sqc_value(grid: &BathGrid, split: usize) -> f64 {
    let rule = quadrature::graded_legendre(1.0, 2.0, 0.5 / (grid.beta * grid.v_max()), split);
    let mut numerator = 0.0;
    let mut normalization = 0.0;
    for (&r, &w) in rule.nodes.iter().zip(&rule.weights) {
        // With b = βV_z, c = β(r−1)V_z, a = b + c = βrV_z.
        let z = |v: f64| {
            let a = r * v;
            (r, sh(a) / a)
        };
        let pops = |v: f64, upper: bool| {
            let (b, c) = (v, (r - 1.0) * v);
            let a = b + c;
            let first = if upper { sh(b) } else { ch(b) };
            (r, first * sh(c) / a)
        };
        numerator -= w * (r - 1.0) * grid.ratio(|v| pops(v, true), z);
        normalization += w * (r - 1.0) * grid.ratio(|v| pops(v, false), z);
    }
    numerator / normalization
}

/// Long-time limit of SQC, the ratio of the windowed population difference
/// to the windowed identity.
pub fn predict_sqc(model: &TwoLevelModel, beta: f64) -> Result<PredictionResult> {
    validate(model, beta)?;
    check_inverted(Method::Sqc, model, 2.0)?;
    let grid = BathGrid::new(model, beta, &[0.0, 1.0, 1.5, 2.0]);
    let coarse = sqc_value(&grid, 1);
    let fine = sqc_value(&grid.refined(model), 2);
    finish(coarse, fine, DEFAULT_TOLERANCE, "SQC long-time limit", Some(Method::Sqc), model, beta, grid.clipped)
}

/// Prediction for a method, or the exact benchmark for `None`.
pub fn predict(method: Option<Method>, model: &TwoLevelModel, beta: f64) -> Result<PredictionResult> {
    match method {
        None => predict_exact_qc(model, beta),
        Some(Method::Mash) => predict_mash(model, beta),
        Some(Method::Sqc) => predict_sqc(model, beta),
        Some(m) => predict_meanfield(m, model, beta),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Limit {
    HighT,
    LowT,
    /// Vanishing electron–nuclear coupling at a given `βV_z⁽⁰⁾`.
    WeakCoupling { beta_v0: f64 },
}

/// Langevin function `coth y − 1/y`.
fn langevin(y: f64) -> f64 {
    if y.abs() < SERIES_SWITCH {
        let y2 = y * y;
        y * (1.0 / 3.0 - y2 * (1.0 / 45.0 - y2 * 2.0 / 945.0))
    } else {
        1.0 / y.tanh() - 1.0 / y
    }
}

/// Ratio of a method's limiting long-time value to the exact one.
///
/// High- and low-temperature factors are radial moments; SQC and MASH are
/// exact there and return [`Error::NotApplicable`]. The weak-coupling
/// ratio is `∫ g I r L(βrV₀) dr / tanh(βV₀)` with `L` the Langevin function.
pub fn limit_factor(method: Method, limit: Limit) -> Result<f64> {
    match limit {
        Limit::HighT | Limit::LowT => {
            if !method.is_mean_field() {
                return Err(Error::NotApplicable(method));
            }
            let kind = if limit == Limit::HighT { MomentKind::HighT } else { MomentKind::LowT };
            radial_moment(&method.spec(), kind)
        }
        Limit::WeakCoupling { beta_v0 } => {
            if !(beta_v0.is_finite() && beta_v0 > 0.0) {
                return Err(Error::invalid("beta_v0", "must be > 0"));
            }
            if !method.is_mean_field() {
                return Ok(1.0);
            }
            let spec = method.spec();
            let exact = beta_v0.tanh();
            let shell = |r: f64| r * langevin(beta_v0 * r);
            let value = match spec.radial_law {
                RadialLaw::PointMass(r0) => spec.identity_rep.eval(r0, 0.0) * shell(r0),
                law => {
                    let f = |r: f64| spec.radial_weight(r).unwrap_or(0.0) * shell(r);
                    let coarse = radial_rule(&law, beta_v0, 1).integrate(f);
                    let fine = radial_rule(&law, beta_v0, 2).integrate(f);
                    if (fine - coarse).abs() > 1e-10 * fine.abs().max(1.0) {
                        return Err(Error::QuadratureNotConverged {
                            what: "weak-coupling factor",
                            estimate: (fine - coarse).abs(),
                            tolerance: 1e-10,
                        });
                    }
                    fine
                }
            };
            Ok(value / exact)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const BETA: f64 = 0.3;

    fn sb(eps: f64) -> TwoLevelModel {
        TwoLevelModel::spin_boson(1.0, eps, 1.0, 1.0)
    }

    fn uncoupled(eps: f64) -> TwoLevelModel {
        TwoLevelModel::spin_boson(1.0, eps, 0.0, 1.0)
    }

    fn anharmonic(alpha: f64) -> TwoLevelModel {
        TwoLevelModel::anharmonic(1.0, alpha, 1.0, 5.0)
    }

    #[test]
    fn bath_average_examples() {
        assert_relative_eq!(bath_average(&sb(0.0), BETA, |_| 1.0).unwrap(), 1.0, max_relative = 1e-14);
        assert!(bath_average(&sb(0.0), BETA, |x| x).unwrap().abs() < 1e-13);
        assert_relative_eq!(bath_average(&sb(0.0), BETA, |x| x * x).unwrap(), 1.0 / BETA, max_relative = 1e-12);
        // Same moment through the composite rule used for anharmonic weights.
        let grid = BathGrid::new(&sb(0.0), BETA, &[0.0]);
        let m2 = grid.ratio(|_| (0.0, 1.0), |_| (0.0, 1.0));
        assert_relative_eq!(m2, 1.0, max_relative = 1e-14);
        let a = anharmonic(0.5);
        assert_relative_eq!(bath_average(&a, BETA, |_| 1.0).unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn exact_uncoupled_is_tanh() {
        for eps in [0.0, 0.7, 3.0] {
            let v0 = (1.0f64 + eps * eps).sqrt();
            let p = predict_exact_qc(&uncoupled(eps), BETA).unwrap();
            assert_relative_eq!(p.value, -(BETA * v0).tanh(), max_relative = 1e-12);
        }
        let p = predict_exact_qc(&uncoupled(0.0), BETA).unwrap();
        assert!((p.value + 0.291313).abs() < 1e-6);
    }

    #[test]
    fn exact_limits() {
        let hot = predict_exact_qc(&sb(0.0), 1e-4).unwrap().value;
        assert!(hot < 0.0 && hot > -1e-2);
        let far = predict_exact_qc(&sb(200.0), BETA).unwrap();
        assert!(far.value < -0.999_999);
        assert!(far.value >= -1.0);
    }

    #[test]
    fn mash_matches_exact_and_density_is_normalized() {
        for model in [sb(0.0), sb(2.0), sb(20.0), anharmonic(0.3), anharmonic(1.0)] {
            let exact = predict_exact_qc(&model, BETA).unwrap();
            let mash = predict_mash(&model, BETA).unwrap();
            assert!((exact.value - mash.value).abs() < 1e-12);
            let (up, lo) = mash_hemisphere_masses(&model, BETA).unwrap();
            assert_relative_eq!(up + lo, 1.0, max_relative = 1e-14);
            assert_relative_eq!(lo, 0.5 * (1.0 - exact.value), max_relative = 1e-12);
            assert_eq!(mash_equilibrium_density(&model, BETA, 0.4).unwrap(), up);
        }
        assert!(!predict_mash(&anharmonic(1.0), BETA).unwrap().normalizable);
        assert!(predict_mash(&anharmonic(0.5), BETA).unwrap().normalizable);
    }

    #[test]
    fn ehrenfest_high_temperature_factor() {
        let beta = 0.003;
        let exact = predict_exact_qc(&sb(0.0), beta).unwrap().value;
        let mf = predict_meanfield(Method::Ehrenfest, &sb(0.0), beta).unwrap().value;
        assert!((mf / exact - 1.0 / 3.0).abs() < 0.01 / 3.0);
    }

    #[test]
    fn spin_mapping_low_temperature_factor() {
        let model = uncoupled(10.0);
        let exact = predict_exact_qc(&model, 10.0).unwrap().value;
        let mf = predict_meanfield(Method::SpinMapping, &model, 10.0).unwrap().value;
        assert!((mf / exact - 3f64.sqrt()).abs() < 0.01 * 3f64.sqrt());
    }

    #[test]
    fn single_wigner_is_exact_in_both_limits() {
        let hot = [predict_exact_qc(&sb(0.0), 0.003), predict_meanfield(Method::SingleWigner, &sb(0.0), 0.003)];
        assert!((hot[1].as_ref().unwrap().value / hot[0].as_ref().unwrap().value - 1.0).abs() < 0.01);
        let model = uncoupled(10.0);
        let cold = predict_meanfield(Method::SingleWigner, &model, 5.0).unwrap().value;
        let exact = predict_exact_qc(&model, 5.0).unwrap().value;
        assert!((cold / exact - 1.0).abs() < 0.01);
    }

    #[test]
    fn meanfield_uncoupled_matches_langevin_closed_form() {
        // α = 0: ⟨rS_z⟩ = −r L(βrV₀) exactly.
        let model = uncoupled(1.5);
        let v0 = (1.0f64 + 2.25).sqrt();
        for m in [Method::Ehrenfest, Method::SpinMapping, Method::SingleWigner, Method::DoubleSeo] {
            let p = predict_meanfield(m, &model, BETA).unwrap().value;
            let ratio = limit_factor(m, Limit::WeakCoupling { beta_v0: BETA * v0 }).unwrap();
            assert_relative_eq!(p, -ratio * (BETA * v0).tanh(), max_relative = 1e-10);
        }
    }

    #[test]
    fn sqc_limits() {
        let model = uncoupled(1.0);
        let v0 = 2f64.sqrt();
        let p = predict_sqc(&model, BETA).unwrap();
        assert_relative_eq!(p.value, -(BETA * v0).tanh(), max_relative = 1e-10);
        let beta = 1e-3;
        let hot = predict_sqc(&sb(0.0), beta).unwrap().value;
        let exact = predict_exact_qc(&sb(0.0), beta).unwrap().value;
        assert!((hot / exact - 1.0).abs() < 0.01);
        let cold = predict_sqc(&sb(3.0), 20.0).unwrap().value;
        assert!((cold + 1.0).abs() < 1e-6);
    }

    #[test]
    fn weak_coupling_factor_for_ehrenfest() {
        let f = limit_factor(Method::Ehrenfest, Limit::WeakCoupling { beta_v0: 1.0 }).unwrap();
        let expected = (1.0 / 1f64.tanh() - 1.0) / 1f64.tanh();
        assert_relative_eq!(f, expected, max_relative = 1e-14);
        assert!((f - 0.41103).abs() < 1e-5);
        assert_eq!(limit_factor(Method::Sqc, Limit::WeakCoupling { beta_v0: 1.0 }).unwrap(), 1.0);
        assert_eq!(limit_factor(Method::Mash, Limit::HighT), Err(Error::NotApplicable(Method::Mash)));
    }

    #[test]
    fn inverted_potentials_are_rejected() {
        assert!(matches!(
            predict_meanfield(Method::SpinMapping, &anharmonic(0.6), BETA),
            Err(Error::InvertedPotential { .. })
        ));
        assert!(predict_meanfield(Method::SpinMapping, &anharmonic(0.5), BETA).is_ok());
        assert!(matches!(
            predict_meanfield(Method::SingleUnity, &anharmonic(0.05), BETA),
            Err(Error::InvertedPotential { .. })
        ));
        assert!(predict_sqc(&anharmonic(0.4), BETA).is_ok());
        assert!(predict_sqc(&anharmonic(0.5), BETA).is_err());
    }

    #[test]
    fn refinement_changes_less_than_reported_error() {
        let model = sb(2.0);
        for m in [None, Some(Method::Ehrenfest), Some(Method::SingleUnity), Some(Method::Sqc)] {
            let p = predict(m, &model, BETA).unwrap();
            let cs: &[f64] = match m {
                None => &[-1.0, 0.0, 1.0],
                Some(Method::Ehrenfest) => &[0.0, 0.25, 0.5, 0.75, 1.0],
                Some(Method::Sqc) => &[0.0, 1.0, 1.5, 2.0],
                _ => &[0.0, 5.0, 10.0, 15.0, 20.0],
            };
            let grid = BathGrid::new(&model, BETA, cs);
            let coarse = match m {
                None => exact_value(&grid),
                Some(Method::Sqc) => sqc_value(&grid, 1),
                Some(mm) => meanfield_value(mm, &grid, 1),
            };
            assert!((coarse - p.value).abs() < p.abs_err, "{m:?}");
        }
    }

    #[test]
    fn adiabatic_value_is_even_in_bias() {
        for eps in [0.5, 2.0, 7.0] {
            for m in [None, Some(Method::Ehrenfest), Some(Method::Sqc), Some(Method::SingleWigner)] {
                let plus = predict(m, &sb(eps), BETA).unwrap().value;
                let minus = predict(m, &sb(-eps), BETA).unwrap().value;
                assert!((plus - minus).abs() < 1e-10, "{m:?} at {eps}");
            }
        }
    }

    #[test]
    fn exact_decreases_with_bias() {
        let mut prev = 0.0;
        for k in 0..=20 {
            let v = predict_exact_qc(&sb(k as f64), BETA).unwrap().value;
            assert!(v < prev);
            prev = v;
        }
        assert!(prev > -1.0 && prev < -0.99);
    }
}
