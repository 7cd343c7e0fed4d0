//! Trajectory propagation for mean-field mapping dynamics and MASH.
//!
//! Both integrators use one symmetric splitting of a step `h`:
//!
//! ```text
//! P(h/2) · H(h/2) · O(h) · H(h/2) · P(h/2)
//! ```
//!
//! or its triple-jump composition ([`Scheme::TripleJump`]).
//!
//! `H` is the exact flow of `p²/2 + ½ω²x²` for the harmonic part of U_RC,
//! `O` is the exact Ornstein–Uhlenbeck momentum update and `P` is the exact
//! flow of the remaining potential with `x` frozen. For mean-field methods
//! `P` rotates the diabatic amplitudes under `V(x)` and applies the
//! time-integrated force of the rotating spin; for MASH it rotates the
//! amplitudes and kicks with the active-surface force. With `η = 0` the
//! mean-field scheme is symplectic.
//!
//! Electronic amplitudes are always held in the diabatic basis. Adiabatic
//! quantities are projections through the eigenvectors at the current `x`,
//! which is equivalent to propagating `ċ_± = −iV_± c_± ∓ ẋ d c_∓`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::mapping::{self, bloch, sign, ForceRule, SpinState};
use crate::models::{BathSpec, TwoLevelModel, DEGENERACY_GUARD};

/// Total energy above which a trajectory is flagged as diverged.
pub const ENERGY_CUT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Running,
    Diverged,
}

/// Composition of the symmetric splitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Single symmetric step; second order.
    #[default]
    Strang,
    /// Triple-jump composition of three symmetric steps with the thermostat
    /// applied once in the centre; fourth order when `η = 0`.
    TripleJump,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_max: f64,
    pub divergence_cut: f64,
    pub record_stride: usize,
    pub scheme: Scheme,
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_max: f64) -> Self {
        IntegratorConfig {
            dt,
            t_max,
            divergence_cut: 1e3,
            record_stride: 1,
            scheme: Scheme::Strang,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return Err(Error::invalid("tmax", format!("must be >= 0, got {}", self.t_max)));
        }
        if !(self.divergence_cut > 0.0) {
            return Err(Error::invalid("divergence_cut", "must be > 0"));
        }
        if self.record_stride == 0 {
            return Err(Error::invalid("record_stride", "must be >= 1"));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }
}

/// Model quantities at one frozen position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramePoint {
    pub x: f64,
    pub u: f64,
    /// Derivative of `U_RC − ½ω²x²`.
    pub du_rest: f64,
    pub delta: f64,
    pub kappa: f64,
    pub ddelta: f64,
    pub dkappa: f64,
    pub v_z: f64,
    pub dv_z: f64,
    pub inv_v_z: f64,
    /// Unit vector along `(Δ, 0, κ)`, stored as its x and z components.
    pub n_x: f64,
    pub n_z: f64,
}

impl FramePoint {
    #[inline]
    pub fn at(model: &TwoLevelModel, x: f64) -> Self {
        let d = model.eval_diabatic(x);
        let w = model.reference_frequency();
        let v_z = d.half_gap().max(DEGENERACY_GUARD);
        let inv = 1.0 / v_z;
        FramePoint {
            x,
            u: d.u,
            du_rest: d.du - w * w * x,
            delta: d.delta,
            kappa: d.kappa,
            ddelta: d.ddelta,
            dkappa: d.dkappa,
            v_z,
            dv_z: (d.delta * d.ddelta + d.kappa * d.dkappa) * inv,
            inv_v_z: inv,
            n_x: d.delta * inv,
            n_z: d.kappa * inv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryState {
    /// Diabatic mapping amplitudes `(X_k + iP_k)/√2`.
    pub c: [Complex64; 2],
    pub xc: f64,
    pub pc: f64,
    /// Active adiabat for MASH: +1 upper, −1 lower. Unused by mean-field.
    pub active: f64,
    pub t: f64,
    pub status: Status,
    point: FramePoint,
}

impl TrajectoryState {
    /// Places an adiabatic spin state at `(x, p)`. The MASH active surface is
    /// set to `sgn(S_z)`.
    pub fn new(model: &TwoLevelModel, spin: &SpinState, x: f64, p: f64) -> Self {
        let point = FramePoint::at(model, x);
        let c_ad = spin.adiabatic_amplitudes();
        TrajectoryState {
            c: mapping::adiabatic_to_diabatic(c_ad, point.delta, point.kappa),
            xc: x,
            pc: p,
            active: sign(spin.s_z()),
            t: 0.0,
            status: Status::Running,
            point,
        }
    }

    pub fn point(&self) -> &FramePoint {
        &self.point
    }

    /// Diabatic Bloch vector `r·S` and radius.
    #[inline]
    pub fn bloch(&self) -> ([f64; 3], f64) {
        bloch(self.c)
    }

    #[inline]
    pub fn radius(&self) -> f64 {
        self.c[0].norm_sqr() + self.c[1].norm_sqr()
    }

    /// `r·S_z^ad`.
    #[inline]
    pub fn r_s_z_ad(&self) -> f64 {
        let (s, _) = self.bloch();
        self.point.n_x * s[0] + self.point.n_z * s[2]
    }

    /// Radius and `S_z^ad`.
    #[inline]
    pub fn radius_and_s_z(&self) -> (f64, f64) {
        let (s, r) = self.bloch();
        (r, (self.point.n_x * s[0] + self.point.n_z * s[2]) / r)
    }

    pub fn adiabatic_amplitudes(&self) -> [Complex64; 2] {
        mapping::diabatic_to_adiabatic(self.c, self.point.delta, self.point.kappa)
    }

    pub fn spin(&self) -> Result<SpinState> {
        SpinState::from_adiabatic_amplitudes(self.adiabatic_amplitudes())
    }
}

/// Draws `(x, p)` from the initial Gaussian nuclear distribution.
pub fn sample_nuclear<R: Rng + ?Sized>(bath: &BathSpec, rng: &mut R) -> (f64, f64) {
    let zx: f64 = rng.sample(StandardNormal);
    let zp: f64 = rng.sample(StandardNormal);
    let std_x = 1.0 / (bath.beta.sqrt() * bath.omega0);
    let std_p = 1.0 / bath.beta.sqrt();
    (std_x * zx, std_p * zp)
}

pub fn conserved_energy(s: &TrajectoryState, rule: ForceRule) -> f64 {
    let pt = &s.point;
    let kinetic = 0.5 * s.pc * s.pc;
    match rule {
        ForceRule::MeanField => {
            let (b, _) = s.bloch();
            kinetic + pt.u + pt.delta * b[0] + pt.kappa * b[2]
        }
        ForceRule::MashWindowed => {
            let (_, s_z) = s.radius_and_s_z();
            kinetic + pt.u + pt.v_z * sign(s_z)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HopOutcome {
    Hopped,
    Frustrated,
}

/// Resolves a mismatch between the active surface and `sgn(S_z^ad)`.
///
/// Energy is conserved exactly using the gap at the current position. A
/// frustrated hop reverses `p` and reflects `S_z^ad` through the equator by
/// exchanging `|c₊|` and `|c₋|`, leaving `S_x`, `S_y` unchanged.
pub fn attempt_hop(s: &mut TrajectoryState) -> Result<HopOutcome> {
    let (_, s_z) = s.radius_and_s_z();
    let target = sign(s_z);
    if target == s.active {
        return Err(Error::InconsistentState);
    }
    let delta_e = 2.0 * s.point.v_z * target;
    let kinetic = 0.5 * s.pc * s.pc;
    if kinetic >= delta_e {
        s.pc = sign(s.pc) * (s.pc * s.pc - 2.0 * delta_e).max(0.0).sqrt();
        s.active = target;
        Ok(HopOutcome::Hopped)
    } else {
        s.pc = -s.pc;
        let [up, lo] = s.adiabatic_amplitudes();
        let (m_up, m_lo) = (up.norm(), lo.norm());
        let swapped = [
            Complex64::from_polar(m_lo, up.arg()),
            Complex64::from_polar(m_up, lo.arg()),
        ];
        s.c = mapping::adiabatic_to_diabatic(swapped, s.point.delta, s.point.kappa);
        // An exact equatorial state reflects onto itself; nudge it to the
        // active hemisphere.
        if sign(s.radius_and_s_z().1) != s.active {
            let [up, lo] = s.adiabatic_amplitudes();
            let nudge = if s.active > 0.0 { [up * (1.0 + 1e-12), lo] } else { [up, lo * (1.0 + 1e-12)] };
            s.c = mapping::adiabatic_to_diabatic(nudge, s.point.delta, s.point.kappa);
        }
        Ok(HopOutcome::Frustrated)
    }
}

/// Exact flow of `p²/2 + ½ω²x²` for a fixed time.
#[derive(Debug, Clone, Copy)]
struct HarmonicFlow {
    cos: f64,
    /// `sin(ωτ)/ω` and `ω sin(ωτ)`.
    sin_over_w: f64,
    w_sin: f64,
}

impl HarmonicFlow {
    fn new(omega: f64, tau: f64) -> Self {
        let (sin, cos) = (omega * tau).sin_cos();
        HarmonicFlow {
            cos,
            sin_over_w: sin / omega,
            w_sin: omega * sin,
        }
    }

    #[inline]
    fn apply(&self, s: &mut TrajectoryState) {
        let (x, p) = (s.xc, s.pc);
        s.xc = x * self.cos + p * self.sin_over_w;
        s.pc = p * self.cos - x * self.w_sin;
    }
}

/// Triple-jump weights of the fourth-order symmetric composition.
const YOSHIDA_OUTER: f64 = 1.351_207_191_959_657_8;
const YOSHIDA_INNER: f64 = -1.702_414_383_919_315_5;

/// Precomputed step constants for one (model, bath, dt) combination.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub model: TwoLevelModel,
    pub bath: BathSpec,
    pub cfg: IntegratorConfig,
    /// Strang: `H(h/2)` around the thermostat.
    half: HarmonicFlow,
    /// Triple jump: `H(w₁h)` outer and `H(w₀h/2)` around the thermostat.
    outer: HarmonicFlow,
    inner: HarmonicFlow,
    ou_decay: f64,
    ou_noise: f64,
}

impl Propagator {
    pub fn new(model: TwoLevelModel, bath: BathSpec, cfg: IntegratorConfig) -> Result<Self> {
        model.validate()?;
        bath.validate()?;
        cfg.validate()?;
        if model.delta == 0.0 {
            return Err(Error::invalid("delta", "dynamics requires a nonzero diabatic coupling"));
        }
        let w = model.reference_frequency();
        let h = cfg.dt;
        let ou_decay = (-bath.eta * h).exp();
        let ou_noise = ((1.0 - ou_decay * ou_decay) / bath.beta).sqrt();
        Ok(Propagator {
            model,
            bath,
            cfg,
            half: HarmonicFlow::new(w, 0.5 * h),
            outer: HarmonicFlow::new(w, YOSHIDA_OUTER * h),
            inner: HarmonicFlow::new(w, 0.5 * YOSHIDA_INNER * h),
            ou_decay,
            ou_noise,
        })
    }

    pub fn state(&self, spin: &SpinState, x: f64, p: f64) -> TrajectoryState {
        TrajectoryState::new(&self.model, spin, x, p)
    }

    /// One step of the configured splitting with `potential` as the
    /// frozen-`x` flow. Adjacent frozen flows at the same `x` are merged.
    #[inline]
    fn split_step<R: Rng + ?Sized>(
        &self,
        s: &mut TrajectoryState,
        rng: &mut R,
        potential: fn(&mut TrajectoryState, f64),
    ) {
        let h = self.cfg.dt;
        match self.cfg.scheme {
            Scheme::Strang => {
                potential(s, 0.5 * h);
                self.half.apply(s);
                self.thermostat(s, rng);
                self.half.apply(s);
                s.point = FramePoint::at(&self.model, s.xc);
                potential(s, 0.5 * h);
            }
            Scheme::TripleJump => {
                let edge = 0.5 * YOSHIDA_OUTER * h;
                let join = 0.5 * (YOSHIDA_OUTER + YOSHIDA_INNER) * h;
                potential(s, edge);
                self.outer.apply(s);
                s.point = FramePoint::at(&self.model, s.xc);
                potential(s, join);
                self.inner.apply(s);
                self.thermostat(s, rng);
                self.inner.apply(s);
                s.point = FramePoint::at(&self.model, s.xc);
                potential(s, join);
                self.outer.apply(s);
                s.point = FramePoint::at(&self.model, s.xc);
                potential(s, edge);
            }
        }
        s.t += h;
    }

    #[inline]
    fn thermostat<R: Rng + ?Sized>(&self, s: &mut TrajectoryState, rng: &mut R) {
        if self.bath.eta > 0.0 {
            let xi: f64 = rng.sample(StandardNormal);
            s.pc = self.ou_decay * s.pc + self.ou_noise * xi;
        }
    }

    /// Exact frozen-`x` flow of the mean-field potential for time `tau`.
    #[inline]
    fn meanfield_potential(s: &mut TrajectoryState, tau: f64) {
        let pt = s.point;
        let (b, _) = bloch(s.c);
        let phi = pt.v_z * tau;
        let inv_omega = 0.5 * pt.inv_v_z;
        let (sin_phi, cos_phi) = sin_cos(phi);
        let sin_2phi = 2.0 * sin_phi * cos_phi;
        let par = pt.n_x * b[0] + pt.n_z * b[2];
        // ∫₀^τ S dt = τ S∥ + sin(2φ)/ω · S⊥ + 2 sin²φ/ω · (n × S).
        let a_perp = sin_2phi * inv_omega;
        let a_cross = 2.0 * sin_phi * sin_phi * inv_omega;
        let cross_x = -pt.n_z * b[1];
        let cross_z = pt.n_x * b[1];
        let int_x = tau * par * pt.n_x + a_perp * (b[0] - par * pt.n_x) + a_cross * cross_x;
        let int_z = tau * par * pt.n_z + a_perp * (b[2] - par * pt.n_z) + a_cross * cross_z;
        s.pc -= tau * pt.du_rest + pt.ddelta * int_x + pt.dkappa * int_z;
        rotate(&mut s.c, &pt, cos_phi, sin_phi);
    }

    /// Frozen-`x` MASH potential step: electronic rotation and a kick on the
    /// active adiabat. `S_z^ad` is invariant under the rotation.
    #[inline]
    fn mash_potential(s: &mut TrajectoryState, tau: f64) {
        let pt = s.point;
        let (sin_phi, cos_phi) = sin_cos(pt.v_z * tau);
        s.pc -= tau * (pt.du_rest + s.active * pt.dv_z);
        rotate(&mut s.c, &pt, cos_phi, sin_phi);
    }

    #[inline]
    fn check_divergence(&self, s: &mut TrajectoryState, rule: ForceRule) {
        let energy = conserved_energy(s, rule);
        if !(s.xc.abs() <= self.cfg.divergence_cut && energy.abs() <= ENERGY_CUT && s.pc.is_finite()) {
            s.status = Status::Diverged;
        }
    }

    pub fn step_meanfield<R: Rng + ?Sized>(&self, s: &mut TrajectoryState, rng: &mut R) {
        if s.status != Status::Running {
            return;
        }
        self.split_step(s, rng, Self::meanfield_potential);
        self.check_divergence(s, ForceRule::MeanField);
    }

    pub fn step_mash<R: Rng + ?Sized>(&self, s: &mut TrajectoryState, rng: &mut R) -> Option<HopOutcome> {
        if s.status != Status::Running {
            return None;
        }
        self.split_step(s, rng, Self::mash_potential);
        let (_, s_z) = s.radius_and_s_z();
        let outcome = if sign(s_z) != s.active {
            attempt_hop(s).ok()
        } else {
            None
        };
        self.check_divergence(s, ForceRule::MashWindowed);
        outcome
    }

    #[inline]
    pub fn step<R: Rng + ?Sized>(&self, rule: ForceRule, s: &mut TrajectoryState, rng: &mut R) {
        match rule {
            ForceRule::MeanField => self.step_meanfield(s, rng),
            ForceRule::MashWindowed => {
                self.step_mash(s, rng);
            }
        }
    }
}

/// `sin_cos` with a Taylor branch for the small rotation angles of one step.
#[inline]
fn sin_cos(phi: f64) -> (f64, f64) {
    // Truncation error below φ¹⁴/14! < 1e-25 on the Taylor branch.
    const S: [f64; 6] = [
        -1.0 / 6.0,
        1.0 / 120.0,
        -1.0 / 5040.0,
        1.0 / 362_880.0,
        -1.0 / 39_916_800.0,
        1.0 / 6_227_020_800.0,
    ];
    const C: [f64; 6] = [
        -0.5,
        1.0 / 24.0,
        -1.0 / 720.0,
        1.0 / 40_320.0,
        -1.0 / 3_628_800.0,
        1.0 / 479_001_600.0,
    ];
    if phi.abs() < 0.1 {
        let p2 = phi * phi;
        let s = phi + phi * p2 * (S[0] + p2 * (S[1] + p2 * (S[2] + p2 * (S[3] + p2 * (S[4] + p2 * S[5])))));
        let c = 1.0 + p2 * (C[0] + p2 * (C[1] + p2 * (C[2] + p2 * (C[3] + p2 * (C[4] + p2 * C[5])))));
        (s, c)
    } else {
        phi.sin_cos()
    }
}

/// Applies `exp(−i V_z τ n·σ)` given `cos φ` and `sin φ` with `φ = V_z τ`.
#[inline]
fn rotate(c: &mut [Complex64; 2], pt: &FramePoint, cos_phi: f64, sin_phi: f64) {
    let [c1, c2] = *c;
    let mix1 = c2 * pt.n_x + c1 * pt.n_z;
    let mix2 = c1 * pt.n_x - c2 * pt.n_z;
    let mi = Complex64::new(0.0, -sin_phi);
    c[0] = c1 * cos_phi + mi * mix1;
    c[1] = c2 * cos_phi + mi * mix2;
}
