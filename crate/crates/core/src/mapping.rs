//! Electronic phase-space representations for a two-level subsystem.
//!
//! Mapping variables are stored as complex amplitudes `c_k = (X_k + iP_k)/√2`.
//! Radius and spin vector follow from them by
//! `r = |c₊|² + |c₋|²`, `r S_x = 2 Re(c₊* c₋)`, `r S_y = 2 Im(c₊* c₋)`,
//! `r S_z = |c₊|² − |c₋|²`.
//!
//! Every method is described by a radial law `g(r) = r ρ₀(r)` and an identity
//! representation `I(r, S_z)`. Correlation functions are normalised so that
//! `C_Iz = ∫ dr g(r) I(r) ⟨B⟩_sphere`, which makes the exact result equal to
//! the equilibrium adiabatic population difference.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::adiabatic_eigenvectors;
use crate::quadrature;

/// Trace of the electronic identity; multiplies phase-space averages so that
/// `C_Iz` is a population difference.
pub const ELECTRONIC_TRACE: f64 = 2.0;

/// Radii below this are treated as an empty mapping state.
pub const ZERO_NORM: f64 = 1e-14;

/// Upper limit of radial integration for the exponential families.
pub const EXPONENTIAL_R_CUT: f64 = 20.0;

/// Heaviside step with `h(0) = 1`.
#[inline]
pub fn heaviside(y: f64) -> f64 {
    if y >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Sign with `sgn(0) = +1`.
#[inline]
pub fn sign(y: f64) -> f64 {
    if y >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinState {
    pub r: f64,
    /// Unit spin vector in the adiabatic frame.
    pub s: [f64; 3],
}

impl SpinState {
    /// Builds a state, renormalising `s` to unit length.
    pub fn new(r: f64, s: [f64; 3]) -> Result<Self> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::invalid("r", format!("must be finite and >= 0, got {r}")));
        }
        let n = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::ZeroNorm);
        }
        Ok(SpinState {
            r,
            s: [s[0] / n, s[1] / n, s[2] / n],
        })
    }

    /// Unit spin vector from its polar cosine and azimuth.
    pub fn from_angles(r: f64, s_z: f64, phi: f64) -> Self {
        let s_z = s_z.clamp(-1.0, 1.0);
        let rho = (1.0 - s_z * s_z).max(0.0).sqrt();
        let (sin, cos) = phi.sin_cos();
        SpinState {
            r,
            s: [rho * cos, rho * sin, s_z],
        }
    }

    #[inline]
    pub fn s_z(&self) -> f64 {
        self.s[2]
    }

    pub fn norm_error(&self) -> f64 {
        ((self.s[0] * self.s[0] + self.s[1] * self.s[1] + self.s[2] * self.s[2]).sqrt() - 1.0).abs()
    }

    /// Adiabatic amplitudes `(c₊, c₋)` with `c₊` real and non-negative.
    pub fn adiabatic_amplitudes(&self) -> [Complex64; 2] {
        let up = (0.5 * self.r * (1.0 + self.s[2])).max(0.0).sqrt();
        let lo = (0.5 * self.r * (1.0 - self.s[2])).max(0.0).sqrt();
        let phi = self.s[1].atan2(self.s[0]);
        [Complex64::new(up, 0.0), Complex64::from_polar(lo, phi)]
    }

    pub fn from_adiabatic_amplitudes(c: [Complex64; 2]) -> Result<Self> {
        let (s, r) = bloch(c);
        if r < ZERO_NORM {
            return Err(Error::ZeroNorm);
        }
        Ok(SpinState {
            r,
            s: [s[0] / r, s[1] / r, s[2] / r],
        })
    }
}

/// Unnormalised Bloch vector `r·S` and radius of an amplitude pair.
#[inline]
pub fn bloch(c: [Complex64; 2]) -> ([f64; 3], f64) {
    let cross = c[0].conj() * c[1];
    let n0 = c[0].norm_sqr();
    let n1 = c[1].norm_sqr();
    ([2.0 * cross.re, 2.0 * cross.im, n0 - n1], n0 + n1)
}

/// Converts Cartesian mapping variables of the upper and lower adiabatic
/// states to radius and spin vector.
pub fn cart_to_spherical(x_plus: f64, p_plus: f64, x_minus: f64, p_minus: f64) -> Result<SpinState> {
    let c = [
        Complex64::new(x_plus, p_plus) / SQRT_2,
        Complex64::new(x_minus, p_minus) / SQRT_2,
    ];
    SpinState::from_adiabatic_amplitudes(c)
}

/// Cartesian variables `(X₊, P₊, X₋, P₋)` with the cyclic phase fixed by
/// `P₊ = 0`.
pub fn spherical_to_cart(state: &SpinState) -> [f64; 4] {
    let [up, lo] = state.adiabatic_amplitudes();
    [SQRT_2 * up.re, SQRT_2 * up.im, SQRT_2 * lo.re, SQRT_2 * lo.im]
}

/// Diabatic amplitudes from adiabatic ones for the matrix `Δσ_x + κσ_z`.
#[inline]
pub fn adiabatic_to_diabatic(c: [Complex64; 2], delta: f64, kappa: f64) -> [Complex64; 2] {
    let (up, lo) = adiabatic_eigenvectors(delta, kappa);
    [
        c[0] * up[0] + c[1] * lo[0],
        c[0] * up[1] + c[1] * lo[1],
    ]
}

/// Adiabatic amplitudes from diabatic ones; inverse of
/// [`adiabatic_to_diabatic`].
#[inline]
pub fn diabatic_to_adiabatic(c: [Complex64; 2], delta: f64, kappa: f64) -> [Complex64; 2] {
    let (up, lo) = adiabatic_eigenvectors(delta, kappa);
    [
        c[0] * up[0] + c[1] * up[1],
        c[0] * lo[0] + c[1] * lo[1],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ehrenfest,
    SpinMapping,
    SpinPldm,
    MmstFocused,
    SingleWigner,
    DoubleSeo,
    SingleSeo,
    DoubleUnity,
    SingleUnity,
    Sqc,
    Mash,
}

impl Method {
    pub const ALL: [Method; 11] = [
        Method::Mash,
        Method::Sqc,
        Method::Ehrenfest,
        Method::SpinMapping,
        Method::SpinPldm,
        Method::MmstFocused,
        Method::SingleWigner,
        Method::DoubleSeo,
        Method::SingleSeo,
        Method::DoubleUnity,
        Method::SingleUnity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ehrenfest => "ehrenfest",
            Method::SpinMapping => "spin-mapping",
            Method::SpinPldm => "spin-pldm",
            Method::MmstFocused => "mmst-focused",
            Method::SingleWigner => "single-wigner",
            Method::DoubleSeo => "double-seo",
            Method::SingleSeo => "single-seo",
            Method::DoubleUnity => "double-unity",
            Method::SingleUnity => "single-unity",
            Method::Sqc => "sqc",
            Method::Mash => "mash",
        }
    }

    pub fn spec(self) -> MethodSpec {
        use IdentityRep::*;
        use RadialLaw::*;
        let (radial_law, identity_rep) = match self {
            Method::Ehrenfest => (PointMass(1.0), Unity),
            Method::SpinMapping => (PointMass(3f64.sqrt()), Unity),
            Method::MmstFocused => (PointMass(2.0), Unity),
            Method::SpinPldm => (
                TruncatedLinear {
                    r_max: 3f64.sqrt(),
                    mass: 2.0,
                },
                Unity,
            ),
            Method::SingleWigner => (Exponential { power: 1 }, Shifted(1.0)),
            Method::SingleSeo => (Exponential { power: 1 }, Shifted(0.5)),
            Method::SingleUnity => (Exponential { power: 1 }, Unity),
            Method::DoubleSeo => (Exponential { power: 2 }, Shifted(0.5)),
            Method::DoubleUnity => (Exponential { power: 2 }, Unity),
            Method::Sqc => (Flat { r_max: 2.0 }, SqcWindow),
            Method::Mash => (UnitSphere, Unity),
        };
        let force_rule = match self {
            Method::Mash => ForceRule::MashWindowed,
            _ => ForceRule::MeanField,
        };
        MethodSpec {
            method: self,
            radial_law,
            identity_rep,
            r_max: radial_law.r_max(),
            force_rule,
        }
    }

    pub fn is_mean_field(self) -> bool {
        !matches!(self, Method::Sqc | Method::Mash)
    }

    /// Whether trajectories can be propagated (spin-PLDM needs two sets of
    /// mapping variables and is predictor-only).
    pub fn has_dynamics(self) -> bool {
        self != Method::SpinPldm
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| {
                let names: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::invalid("method", format!("unknown method `{s}`; expected one of {}", names.join(", ")))
            })
    }
}

/// Radial density `g(r)` for two states. Masses are `∫ g dr`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialLaw {
    /// `δ(r − r₀)`.
    PointMass(f64),
    /// `g ∝ r` on `[0, r_max]`.
    TruncatedLinear { r_max: f64, mass: f64 },
    /// `½ r φ(r)^power` with `φ(r) = 16 e^{−2r}`.
    Exponential { power: u8 },
    /// `h(r_max − r)`.
    Flat { r_max: f64 },
    /// Unit sphere, `r ≡ 1`, angular weight `2|S_z|`.
    UnitSphere,
}

impl RadialLaw {
    pub fn r_max(&self) -> f64 {
        match *self {
            RadialLaw::PointMass(r0) => r0,
            RadialLaw::TruncatedLinear { r_max, .. } | RadialLaw::Flat { r_max } => r_max,
            RadialLaw::Exponential { .. } => f64::INFINITY,
            RadialLaw::UnitSphere => 1.0,
        }
    }

    pub fn mass(&self) -> f64 {
        match *self {
            RadialLaw::PointMass(_) | RadialLaw::UnitSphere => 1.0,
            RadialLaw::TruncatedLinear { mass, .. } => mass,
            RadialLaw::Exponential { power } => {
                let rate = 2.0 * power as f64;
                0.5 * 16f64.powi(power as i32) / (rate * rate)
            }
            RadialLaw::Flat { r_max } => r_max,
        }
    }

    /// Density `g(r)` of the continuous laws; point masses return `None`.
    pub fn density(&self, r: f64) -> Option<f64> {
        match *self {
            RadialLaw::PointMass(_) | RadialLaw::UnitSphere => None,
            RadialLaw::TruncatedLinear { r_max, mass } => {
                Some(if (0.0..=r_max).contains(&r) { 2.0 * mass * r / (r_max * r_max) } else { 0.0 })
            }
            RadialLaw::Exponential { power } => {
                let p = power as i32;
                Some(if r >= 0.0 { 0.5 * r * 16f64.powi(p) * (-2.0 * p as f64 * r).exp() } else { 0.0 })
            }
            RadialLaw::Flat { r_max } => Some(heaviside(r_max - r) * heaviside(r)),
        }
    }

    /// Integration interval for continuous laws.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            RadialLaw::Exponential { .. } => (0.0, EXPONENTIAL_R_CUT),
            other => (0.0, other.r_max()),
        }
    }

    /// Draws `r` from the normalised law `g / mass`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            RadialLaw::PointMass(r0) => r0,
            RadialLaw::UnitSphere => 1.0,
            RadialLaw::TruncatedLinear { r_max, .. } => r_max * rng.gen::<f64>().sqrt(),
            RadialLaw::Exponential { power } => {
                let rate = 2.0 * power as f64;
                Gamma::new(2.0, 1.0 / rate)
                    .expect("positive shape and scale")
                    .sample(rng)
            }
            RadialLaw::Flat { r_max } => r_max * rng.gen::<f64>(),
        }
    }
}

/// Phase-space representation of the electronic identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IdentityRep {
    Unity,
    /// `r − shift` (Wigner: 1, SEO: ½).
    Shifted(f64),
    /// `h(|r S_z| − 2 + r)·h(2 − r)`.
    SqcWindow,
}

impl IdentityRep {
    #[inline]
    pub fn eval(&self, r: f64, s_z: f64) -> f64 {
        match *self {
            IdentityRep::Unity => 1.0,
            IdentityRep::Shifted(shift) => r - shift,
            IdentityRep::SqcWindow => sqc_identity_value(r, s_z),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ForceRule {
    MeanField,
    MashWindowed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodSpec {
    pub method: Method,
    pub radial_law: RadialLaw,
    pub identity_rep: IdentityRep,
    pub r_max: f64,
    pub force_rule: ForceRule,
}

impl MethodSpec {
    /// `g(r)·I(r)` for laws whose identity does not depend on `S_z`.
    pub fn radial_weight(&self, r: f64) -> Option<f64> {
        let g = self.radial_law.density(r)?;
        Some(g * self.identity_rep.eval(r, 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialOperator {
    /// `A = ½ I_s`.
    HalfIdentity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialSample {
    pub state: SpinState,
    pub weight: f64,
}

/// Draws an initial mapping state and its weight `A(Γ)·mass(g)`.
pub fn sample_initial<R: Rng + ?Sized>(
    spec: &MethodSpec,
    _observable: InitialOperator,
    rng: &mut R,
) -> Result<InitialSample> {
    if !spec.method.has_dynamics() {
        return Err(Error::UnsupportedMethod(spec.method));
    }
    let r = spec.radial_law.sample(rng);
    let s_z = 2.0 * rng.gen::<f64>() - 1.0;
    let phi = 2.0 * PI * rng.gen::<f64>();
    let state = SpinState::from_angles(r, s_z, phi);
    let weight = match spec.force_rule {
        ForceRule::MashWindowed => s_z.abs(),
        ForceRule::MeanField => 0.5 * spec.identity_rep.eval(r, s_z) * spec.radial_law.mass(),
    };
    Ok(InitialSample { state, weight })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Upper,
    Lower,
}

#[inline]
fn sqc_window_value(r: f64, s_z: f64, which: Window) -> f64 {
    let side = match which {
        Window::Upper => 1.0,
        Window::Lower => -1.0,
    };
    heaviside(0.5 * r * (1.0 + side * s_z) - 1.0) * heaviside(2.0 - r)
}

#[inline]
pub(crate) fn sqc_identity_value(r: f64, s_z: f64) -> f64 {
    heaviside((r * s_z).abs() - 2.0 + r) * heaviside(2.0 - r)
}

/// Triangular SQC window in spherical form.
pub fn sqc_window(state: &SpinState, which: Window) -> f64 {
    sqc_window_value(state.r, state.s_z(), which)
}

/// SQC identity window; the union of the two population windows.
pub fn sqc_identity_window(state: &SpinState) -> f64 {
    sqc_identity_value(state.r, state.s_z())
}

/// Phase-space representation of `σ_z` in the adiabatic basis.
#[inline]
pub fn observable_value(method: Method, r: f64, s_z: f64) -> f64 {
    match method {
        Method::Mash => sign(s_z),
        Method::Sqc => sign(s_z) * sqc_identity_value(r, s_z),
        _ => r * s_z,
    }
}

pub fn observable_sigma_z_ad(spec: &MethodSpec, state: &SpinState) -> f64 {
    observable_value(spec.method, state.r, state.s_z())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MomentKind {
    HighT,
    LowT,
}

/// Radial moments controlling the high- and low-temperature limits of
/// mean-field methods: `⅓∫ r² g I dr` and `∫ r g I dr`.
pub fn radial_moment(spec: &MethodSpec, kind: MomentKind) -> Result<f64> {
    if !spec.method.is_mean_field() {
        return Err(Error::UnsupportedMethod(spec.method));
    }
    let (power, prefactor) = match kind {
        MomentKind::HighT => (2, 1.0 / 3.0),
        MomentKind::LowT => (1, 1.0),
    };
    if let RadialLaw::PointMass(r0) = spec.radial_law {
        return Ok(prefactor * r0.powi(power) * spec.identity_rep.eval(r0, 0.0));
    }
    let (a, b) = spec.radial_law.support();
    let f = |r: f64| r.powi(power) * spec.radial_weight(r).unwrap_or(0.0);
    let coarse = quadrature::composite_legendre(a, b, 32).integrate(f);
    let fine = quadrature::composite_legendre(a, b, 64).integrate(f);
    let tolerance = 1e-12 * fine.abs().max(1.0);
    if (fine - coarse).abs() > tolerance {
        return Err(Error::QuadratureNotConverged {
            what: "radial moment",
            estimate: (fine - coarse).abs(),
            tolerance,
        });
    }
    Ok(prefactor * fine)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn state(r: f64, s_z: f64) -> SpinState {
        SpinState::from_angles(r, s_z, 0.3)
    }

    #[test]
    fn pure_upper_state() {
        let s = cart_to_spherical(SQRT_2, 0.0, 0.0, 0.0).unwrap();
        assert_relative_eq!(s.r, 1.0);
        assert_relative_eq!(s.s_z(), 1.0);
    }

    #[test]
    fn equal_real_superposition() {
        let s = cart_to_spherical(1.0, 0.0, 1.0, 0.0).unwrap();
        assert_relative_eq!(s.r, 1.0);
        assert_relative_eq!(s.s[0], 1.0);
        assert!(s.s[1].abs() < 1e-15 && s.s[2].abs() < 1e-15);
    }

    #[test]
    fn zero_vector_is_rejected() {
        assert_eq!(cart_to_spherical(0.0, 0.0, 0.0, 0.0), Err(Error::ZeroNorm));
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            assert_eq!(m.to_string(), m.name());
        }
        assert_eq!("Single_Wigner".parse::<Method>().unwrap(), Method::SingleWigner);
        assert!("pldm".parse::<Method>().is_err());
    }

    #[test]
    fn support_limits() {
        let expected = [
            (Method::Ehrenfest, 1.0),
            (Method::SpinMapping, 3f64.sqrt()),
            (Method::SpinPldm, 3f64.sqrt()),
            (Method::MmstFocused, 2.0),
            (Method::Sqc, 2.0),
            (Method::Mash, 1.0),
        ];
        for (m, r) in expected {
            assert_relative_eq!(m.spec().r_max, r);
        }
        for m in [Method::SingleWigner, Method::DoubleSeo, Method::SingleSeo, Method::DoubleUnity, Method::SingleUnity] {
            assert!(m.spec().r_max.is_infinite());
        }
    }

    #[test]
    fn radial_masses_match_quadrature() {
        for m in Method::ALL {
            let law = m.spec().radial_law;
            if law.density(0.5).is_none() {
                continue;
            }
            let (a, b) = law.support();
            let q = quadrature::composite_legendre(a, b, 64).integrate(|r| law.density(r).unwrap());
            assert_relative_eq!(q, law.mass(), max_relative = 1e-8);
        }
    }

    #[test]
    fn ehrenfest_sampling_is_deterministic_in_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = Method::Ehrenfest.spec();
        for _ in 0..100 {
            let s = sample_initial(&spec, InitialOperator::HalfIdentity, &mut rng).unwrap();
            assert_eq!(s.state.r, 1.0);
            assert_eq!(s.weight, 0.5);
        }
        let s = sample_initial(&Method::SpinMapping.spec(), InitialOperator::HalfIdentity, &mut rng).unwrap();
        assert_relative_eq!(s.state.r, 3f64.sqrt());
    }

    #[test]
    fn pldm_has_no_sampler() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = sample_initial(&Method::SpinPldm.spec(), InitialOperator::HalfIdentity, &mut rng);
        assert_eq!(err, Err(Error::UnsupportedMethod(Method::SpinPldm)));
    }

    #[test]
    fn mash_mean_weight_is_one_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let spec = Method::Mash.spec();
        let n = 1_000_000;
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..n {
            let w = sample_initial(&spec, InitialOperator::HalfIdentity, &mut rng).unwrap().weight;
            sum += w;
            sum2 += w * w;
        }
        let mean = sum / n as f64;
        let stderr = ((sum2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * stderr, "mean {mean} stderr {stderr}");
    }

    #[test]
    fn sampled_radial_moments_match_analytic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in [Method::SpinPldm, Method::SingleWigner, Method::DoubleSeo, Method::Sqc] {
            let law = m.spec().radial_law;
            let (a, b) = law.support();
            let rule = quadrature::composite_legendre(a, b, 64);
            let mass = law.mass();
            let m1 = rule.integrate(|r| r * law.density(r).unwrap()) / mass;
            let m2 = rule.integrate(|r| r * r * law.density(r).unwrap()) / mass;
            let m4 = rule.integrate(|r| r.powi(4) * law.density(r).unwrap()) / mass;
            let n = 1_000_000;
            let draws: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
            let e1 = draws.iter().sum::<f64>() / n as f64;
            let e2 = draws.iter().map(|r| r * r).sum::<f64>() / n as f64;
            let se1 = ((m2 - m1 * m1) / n as f64).sqrt();
            let se2 = ((m4 - m2 * m2) / n as f64).sqrt();
            assert!((e1 - m1).abs() < 3.0 * se1, "{m}: first moment {e1} vs {m1}");
            assert!((e2 - m2).abs() < 3.0 * se2, "{m}: second moment {e2} vs {m2}");
        }
    }

    #[test]
    fn sqc_window_examples() {
        assert_eq!(sqc_window(&state(2.0, 0.9), Window::Upper), 1.0);
        assert_eq!(sqc_window(&state(1.5, 0.0), Window::Upper), 0.0);
        assert_eq!(sqc_window(&state(1.5, 0.0), Window::Lower), 0.0);
        for s_z in [-0.99, -0.4, -1e-6, 1e-6, 0.3, 1.0] {
            let s = state(2.0, s_z);
            assert_eq!(sqc_window(&s, Window::Upper), heaviside(s_z));
            assert_eq!(sqc_identity_window(&s), 1.0);
        }
        assert_eq!(sqc_identity_window(&state(0.5, 0.7)), 0.0);
    }

    #[test]
    fn observable_examples() {
        assert_eq!(observable_sigma_z_ad(&Method::Mash.spec(), &state(1.0, -0.3)), -1.0);
        assert_eq!(observable_sigma_z_ad(&Method::Sqc.spec(), &state(1.2, 0.5)), 0.0);
        assert_relative_eq!(observable_sigma_z_ad(&Method::Ehrenfest.spec(), &state(1.0, 0.5)), 0.5);
    }

    #[test]
    fn table_radial_moments() {
        let high = [
            (Method::Ehrenfest, 1.0 / 3.0),
            (Method::SpinMapping, 1.0),
            (Method::SpinPldm, 1.0),
            (Method::MmstFocused, 4.0 / 3.0),
            (Method::SingleWigner, 1.0),
            (Method::DoubleSeo, 0.5),
            (Method::SingleSeo, 1.5),
            (Method::DoubleUnity, 1.0),
            (Method::SingleUnity, 1.0),
        ];
        let low = [
            (Method::Ehrenfest, 1.0),
            (Method::SpinMapping, 3f64.sqrt()),
            (Method::SpinPldm, 4.0 * 3f64.sqrt() / 3.0),
            (Method::MmstFocused, 2.0),
            (Method::SingleWigner, 1.0),
            (Method::DoubleSeo, 1.0),
            (Method::SingleSeo, 2.0),
            (Method::DoubleUnity, 4.0),
            (Method::SingleUnity, 2.0),
        ];
        for (m, v) in high {
            assert_relative_eq!(radial_moment(&m.spec(), MomentKind::HighT).unwrap(), v, max_relative = 1e-10);
        }
        for (m, v) in low {
            assert_relative_eq!(radial_moment(&m.spec(), MomentKind::LowT).unwrap(), v, max_relative = 1e-10);
        }
        assert!(radial_moment(&Method::Mash.spec(), MomentKind::HighT).is_err());
    }

    #[test]
    fn frame_change_round_trip() {
        let c = [Complex64::new(0.3, -0.2), Complex64::new(-0.7, 0.4)];
        let back = adiabatic_to_diabatic(diabatic_to_adiabatic(c, 0.8, -1.7), 0.8, -1.7);
        for k in 0..2 {
            assert!((back[k] - c[k]).norm() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn spin_vector_is_unit(x1 in -3.0..3.0f64, p1 in -3.0..3.0f64, x2 in -3.0..3.0f64, p2 in -3.0..3.0f64) {
            prop_assume!(x1 * x1 + p1 * p1 + x2 * x2 + p2 * p2 > 1e-6);
            let s = cart_to_spherical(x1, p1, x2, p2).unwrap();
            prop_assert!(s.norm_error() < 1e-10);
            let r = 0.5 * (x1 * x1 + p1 * p1 + x2 * x2 + p2 * p2);
            prop_assert!((s.r - r).abs() < 1e-12 * r.max(1.0));
            // Direct evaluation of the spin components.
            let sz = 0.5 * (x1 * x1 + p1 * p1 - x2 * x2 - p2 * p2) / r;
            let sx = (x1 * x2 + p1 * p2) / r;
            let sy = (x1 * p2 - p1 * x2) / r;
            prop_assert!((s.s[0] - sx).abs() < 1e-12);
            prop_assert!((s.s[1] - sy).abs() < 1e-12);
            prop_assert!((s.s[2] - sz).abs() < 1e-12);
        }

        #[test]
        fn spherical_cartesian_round_trip(r in 0.01..5.0f64, s_z in -1.0..1.0f64, phi in -3.1..3.1f64) {
            let s = SpinState::from_angles(r, s_z, phi);
            let [a, b, c, d] = spherical_to_cart(&s);
            let t = cart_to_spherical(a, b, c, d).unwrap();
            prop_assert!((t.r - r).abs() < 1e-12 * r.max(1.0));
            for k in 0..3 {
                prop_assert!((t.s[k] - s.s[k]).abs() < 1e-10);
            }
        }

        #[test]
        fn windows_partition_identity(r in 0.0..2.0f64, s_z in -1.0..1.0f64) {
            let s = state(r, s_z);
            let up = sqc_window(&s, Window::Upper);
            let lo = sqc_window(&s, Window::Lower);
            prop_assert_eq!(up * lo, 0.0);
            prop_assert_eq!(up + lo, sqc_identity_window(&s));
            let b = observable_sigma_z_ad(&Method::Sqc.spec(), &s);
            prop_assert!(b == -1.0 || b == 0.0 || b == 1.0);
            prop_assert_eq!(b, up - lo);
        }

        #[test]
        fn mash_observable_is_a_sign(s_z in -1.0..1.0f64) {
            let b = observable_sigma_z_ad(&Method::Mash.spec(), &state(1.0, s_z));
            prop_assert!(b == -1.0 || b == 1.0);
        }
    }
}
