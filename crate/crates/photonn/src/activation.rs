//! Electro-optic nonlinear activation function.
//!
//! The device taps a fraction `alpha` of an input signal's power, detects it,
//! amplifies the photocurrent into a voltage, and drives a phase modulator in
//! one arm of an interferometer through which the remaining fraction of the
//! signal passes. The result is an intensity modulation controlled by the
//! input power itself:
//!
//! `f(z) = i·√(1−α)·exp(−i[g·|z|²/2 + φ_b/2])·cos(g·|z|²/2 + φ_b/2)·z`
//!
//! where `g` (radians per watt) is the phase gain of the feedforward path and
//! `φ_b` is a static bias phase. Varying `φ_b` reprograms the activation
//! between ReLU-like, clamp-like, and intermediate responses.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Errors produced by activation configuration and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum ActivationError {
    /// Tap ratio must lie strictly inside (0, 1).
    #[error("tap ratio alpha = {0} outside (0, 1)")]
    InvalidAlpha(f64),
    /// Phase gain must be non-negative (strictly positive for thresholds).
    #[error("phase gain g_phi = {0} is invalid here")]
    InvalidGain(f64),
    /// A physical receiver parameter must be strictly positive.
    #[error("non-positive physical parameter {name} = {value}")]
    NonPositive { name: &'static str, value: f64 },
    /// Supplied (g_phi, phi_b) disagree with the physical quadruple.
    #[error("g_phi/phi_b inconsistent with physical parameters: {0}")]
    InconsistentPhysical(String),
    /// Input power must be non-negative.
    #[error("negative input power {0}")]
    NegativePower(f64),
}

/// Receiver-chain parameters from which the phase gain and bias phase derive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Transimpedance gain, V/A.
    #[serde(rename = "G")]
    pub g: f64,
    /// Photodetector responsivity, A/W.
    #[serde(rename = "R")]
    pub r: f64,
    /// Modulator half-wave voltage, V.
    #[serde(rename = "V_pi")]
    pub v_pi: f64,
    /// Static bias voltage, V.
    #[serde(rename = "V_b")]
    pub v_b: f64,
}

/// Phase gain of the electro-optic feedforward path:
/// `g_phi = π·α·G·R/V_π`, radians per watt of input power.
pub fn phase_gain(alpha: f64, g: f64, r: f64, v_pi: f64) -> Result<f64, ActivationError> {
    if !(0.0..1.0).contains(&alpha) || alpha == 0.0 {
        return Err(ActivationError::InvalidAlpha(alpha));
    }
    for (name, value) in [("G", g), ("R", r), ("V_pi", v_pi)] {
        if !(value > 0.0) {
            return Err(ActivationError::NonPositive { name, value });
        }
    }
    Ok(PI * alpha * g * r / v_pi)
}

/// Bias phase contributed by the static bias voltage: `φ_b = π·V_b/V_π`.
pub fn bias_phase(v_b: f64, v_pi: f64) -> Result<f64, ActivationError> {
    if !(v_pi > 0.0) {
        return Err(ActivationError::NonPositive {
            name: "V_pi",
            value: v_pi,
        });
    }
    Ok(PI * v_b / v_pi)
}

/// Configuration of one electro-optic activation: tap ratio, phase gain, and
/// bias phase, optionally tied to the physical receiver parameters they
/// derive from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EoActivationRepr", into = "EoActivationRepr")]
pub struct EoActivation {
    alpha: f64,
    g_phi: f64,
    phi_b: f64,
    physical: Option<PhysicalParams>,
}

impl EoActivation {
    /// Creates a configuration from the three simulation-level parameters.
    pub fn new(alpha: f64, g_phi: f64, phi_b: f64) -> Result<Self, ActivationError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(ActivationError::InvalidAlpha(alpha));
        }
        if !(g_phi >= 0.0) || !g_phi.is_finite() {
            return Err(ActivationError::InvalidGain(g_phi));
        }
        Ok(Self {
            alpha,
            g_phi,
            phi_b,
            physical: None,
        })
    }

    /// Creates a configuration from physical receiver parameters, deriving
    /// `g_phi` and `phi_b`.
    pub fn from_physical(alpha: f64, p: PhysicalParams) -> Result<Self, ActivationError> {
        let g_phi = phase_gain(alpha, p.g, p.r, p.v_pi)?;
        let phi_b = bias_phase(p.v_b, p.v_pi)?;
        Ok(Self {
            alpha,
            g_phi,
            phi_b,
            physical: Some(p),
        })
    }

    /// Tap ratio α ∈ (0, 1).
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Phase gain g_phi, radians per watt.
    pub fn g_phi(&self) -> f64 {
        self.g_phi
    }

    /// Bias phase φ_b, radians.
    pub fn phi_b(&self) -> f64 {
        self.phi_b
    }

    /// Physical receiver parameters, if the config was derived from them.
    pub fn physical(&self) -> Option<PhysicalParams> {
        self.physical
    }

    /// Returns a copy with a different phase gain (used when the gain itself
    /// is trained). Drops the physical quadruple, which no longer applies.
    pub fn with_g_phi(&self, g_phi: f64) -> Result<Self, ActivationError> {
        Self::new(self.alpha, g_phi, self.phi_b)
    }

    /// Total self-induced phase shift for input field `z`:
    /// `Δφ = φ_b + g_phi·|z|²`.
    pub fn self_phase(&self, z: Complex64) -> f64 {
        self.phi_b + self.g_phi * z.norm_sqr()
    }

    /// Applies the activation to one field amplitude.
    pub fn apply(&self, z: Complex64) -> Complex64 {
        let u = 0.5 * (self.g_phi * z.norm_sqr() + self.phi_b);
        let envelope = Complex64::i()
            * (1.0 - self.alpha).sqrt()
            * Complex64::from_polar(1.0, -u)
            * u.cos();
        envelope * z
    }

    /// Applies the activation elementwise to a field vector.
    pub fn apply_vec(&self, z: &[Complex64]) -> Vec<Complex64> {
        z.iter().map(|&zi| self.apply(zi)).collect()
    }

    /// Power transmission at input power `p_in`:
    /// `T = (1−α)·cos²(g_phi·p_in/2 + φ_b/2) = |f(z)|²/|z|²` for `|z|² = p_in`.
    pub fn power_transmission(&self, p_in: f64) -> Result<f64, ActivationError> {
        if p_in < 0.0 {
            return Err(ActivationError::NegativePower(p_in));
        }
        let u = 0.5 * (self.g_phi * p_in + self.phi_b);
        Ok((1.0 - self.alpha) * u.cos() * u.cos())
    }

    /// Activation threshold: the input power at which the power transmission
    /// has changed by 0.5 (in absolute terms, including the 1−α prefactor)
    /// relative to its zero-power value.
    ///
    /// Solves `|T(Δφ) − T(0)| = 0.5` for the smallest nonlinear phase
    /// `Δφ* > 0`, where `T(Δφ) = (1−α)·cos²((φ_b + Δφ)/2)`, by bracketed
    /// bisection. When the response is too shallow to ever change by 0.5,
    /// the smallest `Δφ` maximizing the change is used instead. Returns
    /// `(p_th, z_norm)` with `p_th = Δφ*/g_phi` in watts and
    /// `z_norm = √(Δφ*/π)` the dimensionless input amplitude
    /// `|z|·√(g_phi/π)` at threshold.
    pub fn threshold(&self) -> Result<(f64, f64), ActivationError> {
        if !(self.g_phi > 0.0) {
            return Err(ActivationError::InvalidGain(self.g_phi));
        }
        let t_at = |dphi: f64| {
            let u = 0.5 * (self.phi_b + dphi);
            (1.0 - self.alpha) * u.cos() * u.cos()
        };
        let t0 = t_at(0.0);
        let change = |dphi: f64| (t_at(dphi) - t0).abs();

        // The transmission is 2π-periodic in Δφ; a dense scan of one period
        // locates either the first 0.5-crossing bracket or the first maximum.
        const SAMPLES: usize = 4096;
        let step = std::f64::consts::TAU / SAMPLES as f64;
        let mut crossing: Option<(f64, f64)> = None;
        for i in 1..=SAMPLES {
            let x = i as f64 * step;
            if change(x) >= 0.5 {
                crossing = Some(((i - 1) as f64 * step, x));
                break;
            }
        }

        let dphi_star = match crossing {
            Some((mut lo, mut hi)) => {
                // Bisection on change(Δφ) − 0.5 over the bracketing interval.
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if change(mid) >= 0.5 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                    if hi - lo < 1e-14 {
                        break;
                    }
                }
                0.5 * (lo + hi)
            }
            None => {
                // Shallow response: find the first local maximum of the
                // change and refine it by golden-section search.
                let mut best_i = 1;
                let mut best = change(step);
                for i in 2..=SAMPLES {
                    let c = change(i as f64 * step);
                    if c > best + 1e-15 {
                        best = c;
                        best_i = i;
                    }
                }
                let lo = (best_i.saturating_sub(1)) as f64 * step;
                let hi = (best_i + 1) as f64 * step;
                golden_max(change, lo, hi)
            }
        };
        Ok((dphi_star / self.g_phi, (dphi_star / PI).sqrt()))
    }

    /// Exact derivatives of the activation at `z`, treating `z` and its
    /// conjugate as independent variables (Wirtinger convention), plus the
    /// partial derivative with respect to the phase gain.
    ///
    /// Because `f` depends on `|z|² = z·z̄`, it is not holomorphic; a real
    /// directional derivative along `h` reconstructs as
    /// `df = df_dz·h + df_dzbar·conj(h)`.
    pub fn wirtinger(&self, z: Complex64) -> WirtingerDerivs {
        let g = self.g_phi;
        let p = z.norm_sqr();
        let u = 0.5 * (g * p + self.phi_b);
        let root = (1.0 - self.alpha).sqrt();
        let phase = Complex64::from_polar(1.0, -u);
        // Writing f = i·root·e^{−iu}·cos(u)·z with u = (g·z·z̄ + φ_b)/2:
        //   ∂u/∂z = g·z̄/2,  ∂u/∂z̄ = g·z/2,  ∂u/∂g = |z|²/2
        // and d/du [e^{−iu}·cos(u)] = −e^{−iu}·(i·cos u + sin u).
        let i = Complex64::i();
        let envelope = i * root * phase * u.cos();
        let d_env_du = -(i * root * phase) * (i * u.cos() + u.sin());
        WirtingerDerivs {
            df_dz: envelope + d_env_du * (0.5 * g * z.conj()) * z,
            df_dzbar: d_env_du * (0.5 * g * z) * z,
            df_dgphi: d_env_du * (0.5 * p) * z,
        }
    }
}

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..200 {
        if fa > fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Wirtinger derivatives of the activation at a point.
#[derive(Debug, Clone, Copy)]
pub struct WirtingerDerivs {
    /// ∂f/∂z.
    pub df_dz: Complex64,
    /// ∂f/∂z̄.
    pub df_dzbar: Complex64,
    /// ∂f/∂g_phi.
    pub df_dgphi: Complex64,
}

/// Serialized layout: `{"alpha": f, "g_phi": f, "phi_b": f}` with an optional
/// `"physical": {"G": f, "R": f, "V_pi": f, "V_b": f}` block; radians and SI
/// units throughout.
#[derive(Serialize, Deserialize)]
struct EoActivationRepr {
    alpha: f64,
    g_phi: f64,
    phi_b: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    physical: Option<PhysicalParams>,
}

impl From<EoActivation> for EoActivationRepr {
    fn from(c: EoActivation) -> Self {
        Self {
            alpha: c.alpha,
            g_phi: c.g_phi,
            phi_b: c.phi_b,
            physical: c.physical,
        }
    }
}

impl TryFrom<EoActivationRepr> for EoActivation {
    type Error = ActivationError;

    fn try_from(r: EoActivationRepr) -> Result<Self, ActivationError> {
        let mut cfg = EoActivation::new(r.alpha, r.g_phi, r.phi_b)?;
        if let Some(p) = r.physical {
            let expect_g = phase_gain(r.alpha, p.g, p.r, p.v_pi)?;
            let expect_b = bias_phase(p.v_b, p.v_pi)?;
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
            if rel(r.g_phi, expect_g) > 1e-12 {
                return Err(ActivationError::InconsistentPhysical(format!(
                    "g_phi = {} but physical parameters imply {expect_g}",
                    r.g_phi
                )));
            }
            if (r.phi_b - expect_b).abs() > 1e-12 * expect_b.abs().max(1.0) {
                return Err(ActivationError::InconsistentPhysical(format!(
                    "phi_b = {} but physical parameters imply {expect_b}",
                    r.phi_b
                )));
            }
            cfg.physical = Some(p);
        }
        Ok(cfg)
    }
}
