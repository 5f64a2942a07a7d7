//! Simulator and trainer for feedforward optical neural networks.
//!
//! The crate models networks built from two photonic primitives:
//!
//! * [`mesh`] — N×N unitary linear layers realized as rectangular meshes of
//!   Mach-Zehnder interferometers (MZIs), parameterized entirely by phase
//!   shifter settings.
//! * [`activation`] — an electro-optic nonlinearity that taps a fraction of
//!   each signal's power, detects it, and uses the resulting voltage to
//!   intensity-modulate the remaining light.
//!
//! [`network`] composes the two into a feedforward model, [`training`]
//! provides exact complex-valued (Wirtinger) gradients and an Adam trainer,
//! [`data`] generates the XOR and MNIST Fourier-feature benchmark datasets,
//! and [`perf`] estimates power, latency, footprint, and throughput of a
//! hardware realization.

pub mod activation;
pub mod data;
pub mod mesh;
pub mod network;
pub mod perf;
pub mod training;

/// Complex field amplitude. Total optical power of a signal vector is its
/// squared L2 norm.
pub type Complex64 = num_complex::Complex64;

/// A vector of complex field amplitudes (one entry per waveguide port).
pub type ComplexVec = Vec<Complex64>;

/// Squared L2 norm of a field vector, i.e. its total optical power.
pub fn total_power(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

/// L2 norm of a field vector.
pub fn l2_norm(x: &[Complex64]) -> f64 {
    total_power(x).sqrt()
}
