//! Hardware figure-of-merit model: power, latency, footprint, speed, and
//! energy efficiency of a mesh-plus-activation optical network, constant
//! activation-threshold contours over the gain/V_π plane, and the Kerr-effect
//! comparison figure of merit.

use crate::activation::{ActivationError, EoActivation, PhysicalParams};
use serde::{Deserialize, Serialize};

/// Speed of light in vacuum, m/s.
pub const C0: f64 = 2.998e8;

/// Cap on the activation delay-line length used for footprint accounting, m.
/// The delay line is assumed laid out straight but no longer than 1 cm.
pub const MAX_DELAY_LINE_M: f64 = 0.01;

/// Errors from the figure-of-merit model.
#[derive(Debug, thiserror::Error)]
pub enum PerfError {
    #[error("hardware parameter {name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("hardware parameter {name} must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("network dimensions must satisfy N ≥ 1 and L ≥ 1, got N={n}, L={layers}")]
    BadDimensions { n: usize, layers: usize },
    #[error(transparent)]
    Activation(#[from] ActivationError),
    #[error("contour range is empty or inverted")]
    BadRange,
}

/// Physical hardware assumptions for the figure-of-merit model.
///
/// Units: rates in Hz, powers in W, delays in s, lengths in m, areas in m²,
/// `responsivity` in A/W, `gain` in V/A, `v_pi` in V, `v_pi_l` in V·m,
/// `n2` in m²/W.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareParams {
    /// Modulator and detector rate (Hz).
    pub mod_det_rate: f64,
    /// Photodetector responsivity R (A/W).
    pub responsivity: f64,
    /// Optical-to-electrical circuit power per activation (W).
    pub oe_power: f64,
    /// Optical-to-electrical circuit group delay τ_oe (s).
    pub tau_oe: f64,
    /// Phase modulator RC delay τ_rc (s).
    pub tau_rc: f64,
    /// Nonlinear signal-conditioner delay τ_nl (s); zero when no conditioner
    /// is used.
    pub tau_nl: f64,
    /// Mesh MZI length D_MZI (m).
    pub d_mzi: f64,
    /// Mesh MZI height H_MZI (m).
    pub h_mzi: f64,
    /// Waveguide effective index.
    pub n_eff: f64,
    /// Modulator V_π (V).
    pub v_pi: f64,
    /// Activation tap fraction α.
    pub alpha: f64,
    /// Transimpedance amplifier gain G (V/A).
    pub gain: f64,
    /// Modulator efficiency V_π·L (V·m).
    pub v_pi_l: f64,
    /// Nonlinear refractive index n₂ (m²/W).
    pub n2: f64,
    /// Waveguide mode area A (m²).
    pub mode_area: f64,
    /// Vacuum wavelength λ₀ (m).
    pub lambda0: f64,
}

impl Default for HardwareParams {
    /// Baseline assumptions: 10 GHz transduction, 1 A/W detectors, 100 mW
    /// per activation circuit, 100 ps + 20 ps electrical delays with no
    /// nonlinear conditioner, 100 µm × 60 µm MZIs at n_eff = 3.5, a 10 V
    /// modulator driven by a gain of 5×10⁵ V/A (α·G·R = 5×10⁴ V/W, 57 dBΩ),
    /// V_π·L = 20 V·mm, and silicon nonlinearity (n₂ = 4.5×10⁻¹⁸ m²/W,
    /// A = 0.05 µm², λ₀ = 1.55 µm).
    fn default() -> Self {
        Self {
            mod_det_rate: 1e10,
            responsivity: 1.0,
            oe_power: 0.1,
            tau_oe: 100e-12,
            tau_rc: 20e-12,
            tau_nl: 0.0,
            d_mzi: 100e-6,
            h_mzi: 60e-6,
            n_eff: 3.5,
            v_pi: 10.0,
            alpha: 0.1,
            gain: 5e5,
            v_pi_l: 0.02,
            n2: 4.5e-18,
            mode_area: 0.05e-12,
            lambda0: 1.55e-6,
        }
    }
}

impl HardwareParams {
    /// Validates the parameter set: every quantity must be positive, except
    /// the three delay terms which may be zero (a system without a nonlinear
    /// electrical conditioner has τ_nl = 0).
    pub fn validate(&self) -> Result<(), PerfError> {
        let positive = [
            ("mod_det_rate", self.mod_det_rate),
            ("responsivity", self.responsivity),
            ("oe_power", self.oe_power),
            ("d_mzi", self.d_mzi),
            ("h_mzi", self.h_mzi),
            ("n_eff", self.n_eff),
            ("v_pi", self.v_pi),
            ("alpha", self.alpha),
            ("gain", self.gain),
            ("v_pi_l", self.v_pi_l),
            ("n2", self.n2),
            ("mode_area", self.mode_area),
            ("lambda0", self.lambda0),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(PerfError::NonPositive { name, value });
            }
        }
        let non_negative = [
            ("tau_oe", self.tau_oe),
            ("tau_rc", self.tau_rc),
            ("tau_nl", self.tau_nl),
        ];
        for (name, value) in non_negative {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(PerfError::Negative { name, value });
            }
        }
        Ok(())
    }

    /// Total electrical group delay per activation stage (s).
    pub fn activation_delay(&self) -> f64 {
        self.tau_oe + self.tau_nl + self.tau_rc
    }
}

/// A quantity split into its interferometer-mesh and activation-function
/// contributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Contribution {
    pub mesh: f64,
    pub activation: f64,
}

impl Contribution {
    pub fn total(&self) -> f64 {
        self.mesh + self.activation
    }
}

/// Per-network figures of merit for an N-port, L-layer system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerfReport {
    pub n: usize,
    pub layers: usize,
    /// Electrical power (W): the mesh phase shifters are assumed to consume
    /// none, each activation circuit 100 mW-class.
    pub power_w: Contribution,
    /// Optical propagation latency (s): mesh transit plus delay-line
    /// matching of the activation electronics.
    pub latency_s: Contribution,
    /// Chip area (m²).
    pub footprint_m2: Contribution,
    /// Multiply-accumulate throughput (MAC/s).
    pub speed_mac_per_s: f64,
    /// Energy per MAC (J): total power over throughput.
    pub efficiency_j_per_mac: f64,
}

/// Computes all figures of merit:
///
/// - power = L·N·P_oe (mesh contribution zero);
/// - latency = L·N·D_MZI·n_eff/c₀ + L·(τ_oe + τ_nl + τ_rc);
/// - footprint = L·N²·(D_MZI·H_MZI) + L·N·A_f with the activation area
///   A_f = D_f·H_MZI, D_f the delay-matched waveguide length capped at 1 cm;
/// - speed = N²·L·rate;
/// - efficiency = power / speed.
pub fn perf_report(n: usize, layers: usize, hw: &HardwareParams) -> Result<PerfReport, PerfError> {
    hw.validate()?;
    if n == 0 || layers == 0 {
        return Err(PerfError::BadDimensions { n, layers });
    }
    let (nf, lf) = (n as f64, layers as f64);
    let power = Contribution {
        mesh: 0.0,
        activation: lf * nf * hw.oe_power,
    };
    let latency = Contribution {
        mesh: lf * nf * hw.d_mzi * hw.n_eff / C0,
        activation: lf * hw.activation_delay(),
    };
    let delay_line = (hw.activation_delay() * C0 / hw.n_eff).min(MAX_DELAY_LINE_M);
    let footprint = Contribution {
        mesh: lf * nf * nf * hw.d_mzi * hw.h_mzi,
        activation: lf * nf * delay_line * hw.h_mzi,
    };
    let speed = nf * nf * lf * hw.mod_det_rate;
    Ok(PerfReport {
        n,
        layers,
        power_w: power,
        latency_s: latency,
        footprint_m2: footprint,
        speed_mac_per_s: speed,
        efficiency_j_per_mac: power.total() / speed,
    })
}

/// One sample of a constant-threshold contour: the gain required at `v_pi`,
/// or `None` when the target threshold is unreachable within the gain range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourSample {
    pub v_pi: f64,
    pub gain: Option<f64>,
}

/// For each modulator V_π, finds the gain G at which the activation
/// threshold power equals `target_p_th` (at bias φ_b = π, the most
/// conservative setting), by bisecting the threshold computed from the
/// physically-parameterized activation. Unreachable targets yield `None`.
pub fn threshold_contour(
    hw: &HardwareParams,
    gain_range: (f64, f64),
    v_pi_values: &[f64],
    target_p_th: f64,
) -> Result<Vec<ContourSample>, PerfError> {
    hw.validate()?;
    let (g_lo, g_hi) = gain_range;
    if !(g_lo > 0.0) || !(g_hi > g_lo) || !(target_p_th > 0.0) {
        return Err(PerfError::BadRange);
    }
    let p_th_at = |gain: f64, v_pi: f64| -> Result<f64, PerfError> {
        let act = EoActivation::from_physical(
            hw.alpha,
            PhysicalParams {
                g: gain,
                r: hw.responsivity,
                v_pi,
                v_b: v_pi, // φ_b = π·V_b/V_π = π
            },
        )?;
        Ok(act.threshold()?.0)
    };
    let mut samples = Vec::with_capacity(v_pi_values.len());
    for &v_pi in v_pi_values {
        if !(v_pi > 0.0) {
            return Err(PerfError::BadRange);
        }
        // The threshold power decreases monotonically with gain.
        let (p_at_lo, p_at_hi) = (p_th_at(g_lo, v_pi)?, p_th_at(g_hi, v_pi)?);
        if target_p_th > p_at_lo || target_p_th < p_at_hi {
            samples.push(ContourSample { v_pi, gain: None });
            continue;
        }
        let (mut lo, mut hi) = (g_lo, g_hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if p_th_at(mid, v_pi)? > target_p_th {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi - lo) / hi < 1e-12 {
                break;
            }
        }
        samples.push(ContourSample {
            v_pi,
            gain: Some(0.5 * (lo + hi)),
        })
    }
    Ok(samples)
}

/// Kerr-effect nonlinear figure of merit Γ_Kerr = (2π/λ₀)·n₂/A, in (W·m)⁻¹.
pub fn gamma_kerr(hw: &HardwareParams) -> Result<f64, PerfError> {
    hw.validate()?;
    Ok((2.0 * std::f64::consts::PI / hw.lambda0) * hw.n2 / hw.mode_area)
}

/// Electro-optic equivalent figure of merit Γ_EO = π·α·R·G/(V_π·L), in
/// (W·m)⁻¹; the modulator efficiency `v_pi_l` carries the V_π·L product.
pub fn gamma_eo(hw: &HardwareParams) -> Result<f64, PerfError> {
    hw.validate()?;
    Ok(std::f64::consts::PI * hw.alpha * hw.responsivity * hw.gain / hw.v_pi_l)
}

/// Transimpedance gain expressed in dBΩ: 10·log₁₀(G / 1 Ω).
pub fn gain_db_ohm(gain: f64) -> f64 {
    10.0 * gain.log10()
}

/// Inverse of [`gain_db_ohm`].
pub fn gain_from_db_ohm(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
