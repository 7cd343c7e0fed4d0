//! Benchmark two-level Hamiltonians on a single reaction coordinate.
//!
//! Reduced units throughout: mass m = 1 and ħ = 1. The state-dependent
//! potential is `V(x) = Δ(x) σ_x + κ(x) σ_z`, so the adiabatic half-gap is
//! `V_z = sqrt(Δ² + κ²)` and the adiabats are `V_± = U ± V_z`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Below this half-gap the adiabatic frame is treated as undefined.
pub const DEGENERACY_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    SpinBoson,
    Anharmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelModel {
    pub kind: ModelKind,
    /// Diabatic coupling Δ.
    pub delta: f64,
    /// Energy bias ε (spin–boson only).
    pub epsilon: f64,
    /// Electron–nuclear coupling strength α.
    pub alpha: f64,
    /// Reaction-coordinate frequency Ω.
    pub omega: f64,
    /// Position x̄ of the exponential wall (anharmonic only).
    pub xbar: f64,
}

/// Diabatic quantities and their first derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diabatic {
    pub u: f64,
    pub du: f64,
    pub delta: f64,
    pub ddelta: f64,
    pub kappa: f64,
    pub dkappa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySplit {
    pub base: f64,
    pub kappa_abs: f64,
    pub excess: f64,
}

impl EnergySplit {
    pub fn v_z(&self) -> f64 {
        self.kappa_abs + self.excess
    }

    /// `U_RC − c V_z`.
    pub fn shifted(&self, c: f64) -> f64 {
        let lean = 1.0 - c;
        let k = if lean == 0.0 { 0.0 } else { lean * self.kappa_abs };
        self.base + k - c * self.excess
    }
}

impl Diabatic {
    pub fn half_gap(&self) -> f64 {
        (self.delta * self.delta + self.kappa * self.kappa).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiabaticFrame {
    pub v_z_ad: f64,
    pub dv_z_ad: f64,
    /// Nonadiabatic coupling ⟨ψ₊|∂ₓψ₋⟩ with both eigenvectors phase-fixed
    /// to a positive first component.
    pub d_nac: f64,
    pub v_plus: f64,
    pub v_minus: f64,
    pub du: f64,
}

/// Secondary-bath parameters: inverse temperature, Ohmic friction and the
/// width of the initial Gaussian nuclear distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub beta: f64,
    pub eta: f64,
    pub omega0: f64,
}

impl BathSpec {
    pub fn new(beta: f64, eta: f64, omega0: f64) -> Result<Self> {
        let bath = BathSpec { beta, eta, omega0 };
        bath.validate()?;
        Ok(bath)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::invalid("beta", format!("must be > 0, got {}", self.beta)));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::invalid("eta", format!("must be >= 0, got {}", self.eta)));
        }
        if !(self.omega0.is_finite() && self.omega0 > 0.0) {
            return Err(Error::invalid("omega", format!("must be > 0, got {}", self.omega0)));
        }
        Ok(())
    }
}

impl TwoLevelModel {
    pub fn spin_boson(delta: f64, epsilon: f64, alpha: f64, omega: f64) -> Self {
        TwoLevelModel {
            kind: ModelKind::SpinBoson,
            delta,
            epsilon,
            alpha,
            omega,
            xbar: 0.0,
        }
    }

    pub fn anharmonic(delta: f64, alpha: f64, omega: f64, xbar: f64) -> Self {
        TwoLevelModel {
            kind: ModelKind::Anharmonic,
            delta,
            epsilon: 0.0,
            alpha,
            omega,
            xbar,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("delta", self.delta),
            ("eps", self.epsilon),
            ("alpha", self.alpha),
            ("omega", self.omega),
            ("xbar", self.xbar),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::invalid(name, format!("must be finite, got {v}")));
            }
        }
        if self.omega <= 0.0 {
            return Err(Error::invalid("omega", "must be > 0"));
        }
        if self.kind == ModelKind::Anharmonic && !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid(
                "alpha",
                format!("anharmonic model requires 0 <= alpha <= 1, got {}", self.alpha),
            ));
        }
        Ok(())
    }

    /// State-independent potential U_RC and its derivative.
    #[inline]
    pub fn u_rc(&self, x: f64) -> (f64, f64) {
        let w2 = self.omega * self.omega;
        match self.kind {
            ModelKind::SpinBoson => (0.5 * w2 * x * x, w2 * x),
            ModelKind::Anharmonic => {
                let wall = (-self.omega * (x - self.xbar)).exp();
                (
                    0.5 * (0.5 * w2 * x * x + wall),
                    0.5 * (w2 * x - self.omega * wall),
                )
            }
        }
    }

    /// Frequency of the purely harmonic part of U_RC; the remainder
    /// `U_RC − ½ω²x²` is bounded on the right and contains the wall.
    pub fn reference_frequency(&self) -> f64 {
        match self.kind {
            ModelKind::SpinBoson => self.omega,
            ModelKind::Anharmonic => self.omega * std::f64::consts::FRAC_1_SQRT_2,
        }
    }

    #[inline]
    pub fn eval_diabatic(&self, x: f64) -> Diabatic {
        let w2 = self.omega * self.omega;
        match self.kind {
            ModelKind::SpinBoson => Diabatic {
                u: 0.5 * w2 * x * x,
                du: w2 * x,
                delta: self.delta,
                ddelta: 0.0,
                kappa: self.epsilon + self.alpha * x,
                dkappa: self.alpha,
            },
            ModelKind::Anharmonic => {
                let wall = (-self.omega * (x - self.xbar)).exp();
                let harm = 0.5 * w2 * x * x;
                let a = 0.5 * self.alpha;
                Diabatic {
                    u: 0.5 * (harm + wall),
                    du: 0.5 * (w2 * x - self.omega * wall),
                    delta: self.delta,
                    ddelta: 0.0,
                    kappa: a * (harm - wall),
                    dkappa: a * (w2 * x + self.omega * wall),
                }
            }
        }
    }

    /// `U_RC − |κ|`, `|κ|` and `V_z − |κ|`, each free of cancellation so
    /// that `U_RC − cV_z` stays accurate where the wall term is huge.
    pub fn energy_split(&self, x: f64) -> EnergySplit {
        let d = self.eval_diabatic(x);
        let k = d.kappa.abs();
        let base = match self.kind {
            ModelKind::SpinBoson => d.u - k,
            ModelKind::Anharmonic => {
                let harm = 0.5 * self.omega * self.omega * x * x;
                let wall = (-self.omega * (x - self.xbar)).exp();
                let (big, small) = if wall >= harm { (wall, harm) } else { (harm, wall) };
                let lean = 1.0 - self.alpha;
                0.5 * (if lean == 0.0 { 0.0 } else { lean * big } + (1.0 + self.alpha) * small)
            }
        };
        let v = self.delta.hypot(d.kappa);
        EnergySplit {
            base,
            kappa_abs: k,
            excess: self.delta * self.delta / (v + k),
        }
    }

    pub fn eval_adiabatic(&self, x: f64) -> Result<AdiabaticFrame> {
        let d = self.eval_diabatic(x);
        let v_z = d.half_gap();
        if v_z < DEGENERACY_GUARD {
            return Err(Error::DegenerateGap { x, v_z });
        }
        let gap2 = v_z * v_z;
        Ok(AdiabaticFrame {
            v_z_ad: v_z,
            dv_z_ad: (d.delta * d.ddelta + d.kappa * d.dkappa) / v_z,
            d_nac: (d.ddelta * d.kappa - d.delta * d.dkappa) / (2.0 * gap2),
            v_plus: d.u + v_z,
            v_minus: d.u - v_z,
            du: d.du,
        })
    }

    /// Coefficient of the exponential wall in the lower (`-`) and upper
    /// (`+`) diabats, `(1 ∓ α)/2` (anharmonic model).
    pub fn wall_coefficients(&self) -> (f64, f64) {
        (0.5 * (1.0 - self.alpha), 0.5 * (1.0 + self.alpha))
    }
}

/// Phase-fixed adiabatic eigenvectors `(ψ₊, ψ₋)` of `Δσ_x + κσ_z`.
///
/// Both vectors have a non-negative first component for Δ > 0.
#[inline]
pub fn adiabatic_eigenvectors(delta: f64, kappa: f64) -> ([f64; 2], [f64; 2]) {
    let half = 0.5 * delta.atan2(kappa);
    let (s, c) = half.sin_cos();
    ([c, s], [s, -c])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionCheck {
    pub z_diabatic: f64,
    pub z_kinematic: f64,
    pub rel_diff: f64,
}

/// 2×2 real matrix exponential by scaling and squaring of a Taylor series.
fn expm2(m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let norm = m.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scale = 0.5f64.powi(squarings as i32);
    let a = [[m[0][0] * scale, m[0][1] * scale], [m[1][0] * scale, m[1][1] * scale]];
    let mul = |p: [[f64; 2]; 2], q: [[f64; 2]; 2]| {
        [
            [
                p[0][0] * q[0][0] + p[0][1] * q[1][0],
                p[0][0] * q[0][1] + p[0][1] * q[1][1],
            ],
            [
                p[1][0] * q[0][0] + p[1][1] * q[1][0],
                p[1][0] * q[0][1] + p[1][1] * q[1][1],
            ],
        ]
    };
    let mut sum = [[1.0, 0.0], [0.0, 1.0]];
    let mut term = sum;
    for k in 1..=20 {
        term = mul(term, a);
        let inv = 1.0 / k as f64;
        term = [[term[0][0] * inv, term[0][1] * inv], [term[1][0] * inv, term[1][1] * inv]];
        for i in 0..2 {
            for j in 0..2 {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        sum = mul(sum, sum);
    }
    sum
}

/// Compares the configurational quantum–classical partition function built
/// from the diabatic matrix exponential against the kinematic (adiabatic
/// eigenvalue) form. The common momentum factor is omitted.
pub fn partition_consistency(
    model: &TwoLevelModel,
    beta: f64,
    x_domain: (f64, f64),
) -> Result<PartitionCheck> {
    let (a, b) = x_domain;
    let diabatic = |x: f64| {
        let d = model.eval_diabatic(x);
        let m = [
            [-beta * d.kappa, -beta * d.delta],
            [-beta * d.delta, beta * d.kappa],
        ];
        let e = expm2(m);
        (-beta * d.u).exp() * (e[0][0] + e[1][1])
    };
    let kinematic = |x: f64| {
        let d = model.eval_diabatic(x);
        let v = d.half_gap();
        (-beta * d.u).exp() * ((-beta * v).exp() + (beta * v).exp())
    };
    let refine = |f: &dyn Fn(f64) -> f64, what: &'static str| -> Result<f64> {
        let coarse = quadrature::composite_legendre(a, b, 64).integrate(f);
        let fine = quadrature::composite_legendre(a, b, 128).integrate(f);
        let tolerance = 1e-12 * fine.abs();
        if !fine.is_finite() || (fine - coarse).abs() > tolerance {
            return Err(Error::QuadratureNotConverged {
                what,
                estimate: (fine - coarse).abs(),
                tolerance,
            });
        }
        Ok(fine)
    };
    let z_d = refine(&diabatic, "diabatic partition function")?;
    let z_k = refine(&kinematic, "kinematic partition function")?;
    Ok(PartitionCheck {
        z_diabatic: z_d,
        z_kinematic: z_k,
        rel_diff: (z_d - z_k).abs() / z_k.abs(),
    })
}
