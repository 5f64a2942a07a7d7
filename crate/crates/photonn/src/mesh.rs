//! Unitary linear layers built from rectangular meshes of Mach-Zehnder
//! interferometers (MZIs).
//!
//! Each MZI is a two-port device whose 2×2 unitary transfer matrix is set by
//! an internal phase `theta` and an external phase `phi`. Arranging
//! N(N−1)/2 MZIs in a rectangular tiling and appending one output phase
//! shifter per port yields an arbitrary N×N unitary with N² real parameters.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Errors produced by mesh construction and application.
#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    /// Input vector length does not match the mesh dimension.
    #[error("dimension mismatch: mesh expects {expected}, input has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// Parameters do not tile the rectangular layout exactly.
    #[error("invalid mesh layout: {0}")]
    InvalidLayout(String),
    /// A phase value is NaN or infinite.
    #[error("non-finite phase value")]
    NonFinitePhase,
    /// The matrix handed to [`MeshParams::from_unitary`] is not unitary.
    #[error("not a unitary matrix: {0}")]
    NotUnitary(String),
}

/// The two phase-shifter settings of a single MZI, in radians.
///
/// Both phases are canonicalized into `[0, 2π)` on construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MziPhases {
    theta: f64,
    phi: f64,
}

impl MziPhases {
    /// Creates a phase pair, reducing both angles modulo 2π.
    pub fn new(theta: f64, phi: f64) -> Result<Self, MeshError> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(MeshError::NonFinitePhase);
        }
        Ok(Self {
            theta: theta.rem_euclid(TAU),
            phi: phi.rem_euclid(TAU),
        })
    }

    /// Internal phase θ in `[0, 2π)`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// External phase φ in `[0, 2π)`.
    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// One MZI placement in the rectangular tiling: it couples ports `row` and
/// `row + 1` within vertical column `col`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mzi {
    /// Column index, `0..n`.
    pub col: usize,
    /// Top port of the coupled pair, `0..n-1`.
    pub row: usize,
    /// Phase settings.
    pub phases: MziPhases,
}

/// 2×2 unitary transfer matrix of one MZI: `U = B·P(θ)·B·P(φ)` with
/// `B = (1/√2)[[1, i], [i, 1]]` and `P(ξ) = diag(e^{iξ}, 1)`.
///
/// Closed form: `U = i·e^{iθ/2}·[[e^{iφ}·sin(θ/2), cos(θ/2)],
/// [e^{iφ}·cos(θ/2), −sin(θ/2)]]`.
pub fn mzi_transfer_matrix(p: MziPhases) -> [[Complex64; 2]; 2] {
    let half = 0.5 * p.theta;
    let (s, c) = (half.sin(), half.cos());
    let pref = Complex64::i() * Complex64::from_polar(1.0, half);
    let ephi = Complex64::from_polar(1.0, p.phi);
    [
        [pref * ephi * s, pref * c],
        [pref * ephi * c, -pref * s],
    ]
}

/// Rectangular (Clements-style) tiling for dimension `n`: column `c` holds
/// MZIs at top rows `c % 2, c % 2 + 2, …` up to `n − 2`. Returns `(col, row)`
/// placements in column-major order; `n` columns hold `n(n−1)/2` MZIs total.
pub fn rectangular_layout(n: usize) -> Vec<(usize, usize)> {
    let mut slots = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for col in 0..n {
        let mut row = col % 2;
        while row + 1 < n {
            slots.push((col, row));
            row += 2;
        }
    }
    slots
}

/// Phase-shifter settings parameterizing one N×N unitary: `n(n−1)/2` MZIs in
/// the rectangular tiling plus `n` output phases (N² real parameters).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeshParamsRepr", into = "MeshParamsRepr")]
pub struct MeshParams {
    n: usize,
    mzis: Vec<Mzi>,
    output_phases: Vec<f64>,
}

impl MeshParams {
    /// Builds mesh parameters from per-slot phases (ordered as
    /// [`rectangular_layout`]) and per-port output phases.
    pub fn new(
        n: usize,
        phases: Vec<MziPhases>,
        output_phases: Vec<f64>,
    ) -> Result<Self, MeshError> {
        let layout = rectangular_layout(n);
        if phases.len() != layout.len() {
            return Err(MeshError::InvalidLayout(format!(
                "expected {} MZIs for n = {n}, got {}",
                layout.len(),
                phases.len()
            )));
        }
        let mzis = layout
            .into_iter()
            .zip(phases)
            .map(|((col, row), phases)| Mzi { col, row, phases })
            .collect();
        Self::from_parts(n, mzis, output_phases)
    }

    /// Builds mesh parameters from explicit placements, validating that they
    /// tile the rectangular layout exactly.
    pub fn from_parts(
        n: usize,
        mut mzis: Vec<Mzi>,
        output_phases: Vec<f64>,
    ) -> Result<Self, MeshError> {
        if n == 0 {
            return Err(MeshError::InvalidLayout("dimension must be ≥ 1".into()));
        }
        if output_phases.len() != n {
            return Err(MeshError::InvalidLayout(format!(
                "expected {n} output phases, got {}",
                output_phases.len()
            )));
        }
        if output_phases.iter().any(|p| !p.is_finite()) {
            return Err(MeshError::NonFinitePhase);
        }
        mzis.sort_by_key(|m| (m.col, m.row));
        let placements: Vec<(usize, usize)> = mzis.iter().map(|m| (m.col, m.row)).collect();
        if placements != rectangular_layout(n) {
            return Err(MeshError::InvalidLayout(format!(
                "placements do not tile the rectangular {n}×{n} pattern"
            )));
        }
        let output_phases = output_phases.iter().map(|p| p.rem_euclid(TAU)).collect();
        Ok(Self {
            n,
            mzis,
            output_phases,
        })
    }

    /// Draws all phases i.i.d. uniform on `[0, 2π)` from a deterministic
    /// seeded generator; the same seed always yields identical parameters.
    pub fn random(n: usize, rng: &mut impl rand::Rng) -> Self {
        let layout = rectangular_layout(n);
        let mzis = layout
            .into_iter()
            .map(|(col, row)| Mzi {
                col,
                row,
                phases: MziPhases {
                    theta: rng.random_range(0.0..TAU),
                    phi: rng.random_range(0.0..TAU),
                },
            })
            .collect();
        let output_phases = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
        Self {
            n,
            mzis,
            output_phases,
        }
    }

    /// Mesh dimension N.
    pub fn n(&self) -> usize {
        self.n
    }

    /// MZI placements in column-major order.
    pub fn mzis(&self) -> &[Mzi] {
        &self.mzis
    }

    /// Output phase shifter settings, one per port.
    pub fn output_phases(&self) -> &[f64] {
        &self.output_phases
    }

    /// Total number of real parameters: N².
    pub fn parameter_count(&self) -> usize {
        2 * self.mzis.len() + self.output_phases.len()
    }

    /// Replaces the phases of the MZI at `index` (column-major order).
    pub fn set_mzi_phases(&mut self, index: usize, phases: MziPhases) {
        self.mzis[index].phases = phases;
    }

    /// Replaces the output phase of `port`, reducing modulo 2π.
    pub fn set_output_phase(&mut self, port: usize, phase: f64) {
        self.output_phases[port] = phase.rem_euclid(TAU);
    }

    /// Applies the mesh to a field vector by streaming 2×2 blocks column by
    /// column (O(N²) work, no dense matrix), then applying output phases.
    /// The L2 norm of the input is preserved.
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>, MeshError> {
        if x.len() != self.n {
            return Err(MeshError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut out = x.to_vec();
        self.apply_in_place(&mut out);
        Ok(out)
    }

    /// In-place variant of [`MeshParams::apply`] for preallocated buffers.
    /// The slice length must equal the mesh dimension.
    pub fn apply_in_place(&self, x: &mut [Complex64]) {
        assert_eq!(x.len(), self.n, "mesh dimension mismatch");
        for mzi in &self.mzis {
            let u = mzi_transfer_matrix(mzi.phases);
            let (a, b) = (x[mzi.row], x[mzi.row + 1]);
            x[mzi.row] = u[0][0] * a + u[0][1] * b;
            x[mzi.row + 1] = u[1][0] * a + u[1][1] * b;
        }
        for (xi, phase) in x.iter_mut().zip(&self.output_phases) {
            *xi *= Complex64::from_polar(1.0, *phase);
        }
    }

    /// Materializes the dense N×N unitary as the product of per-column
    /// block-diagonal embeddings times the output phase diagonal.
    ///
    /// This route is independent of [`MeshParams::apply`]: it forms each
    /// column's block-diagonal matrix explicitly and accumulates dense
    /// matrix products, which makes it a cross-check for the streaming path.
    pub fn unitary(&self) -> Array2<Complex64> {
        let n = self.n;
        let mut acc = Array2::<Complex64>::eye(n);
        let mut col_start = 0;
        while col_start < self.mzis.len() {
            let col = self.mzis[col_start].col;
            let mut col_end = col_start;
            while col_end < self.mzis.len() && self.mzis[col_end].col == col {
                col_end += 1;
            }
            let mut block = Array2::<Complex64>::eye(n);
            for mzi in &self.mzis[col_start..col_end] {
                let u = mzi_transfer_matrix(mzi.phases);
                block[[mzi.row, mzi.row]] = u[0][0];
                block[[mzi.row, mzi.row + 1]] = u[0][1];
                block[[mzi.row + 1, mzi.row]] = u[1][0];
                block[[mzi.row + 1, mzi.row + 1]] = u[1][1];
            }
            acc = block.dot(&acc);
            col_start = col_end;
        }
        let mut diag = Array2::<Complex64>::zeros((n, n));
        for (j, phase) in self.output_phases.iter().enumerate() {
            diag[[j, j]] = Complex64::from_polar(1.0, *phase);
        }
        diag.dot(&acc)
    }

    /// Programs an arbitrary N×N unitary onto the rectangular mesh
    /// (Clements-style decomposition), returning phase settings whose
    /// [`MeshParams::unitary`] reproduces `target` to numerical precision.
    ///
    /// A working copy has its strict lower triangle nulled one anti-diagonal
    /// at a time, alternating between column mixes (factors absorbed on the
    /// input side) and row mixes (factors absorbed on the output side). The
    /// residual diagonal is then commuted through the output-side factors —
    /// which changes only their external phases — and the factors are packed
    /// onto the rectangular tiling.
    pub fn from_unitary(target: &Array2<Complex64>) -> Result<Self, MeshError> {
        let (rows, cols) = target.dim();
        if rows != cols || rows == 0 {
            return Err(MeshError::NotUnitary(format!(
                "expected a nonempty square matrix, got {rows}×{cols}"
            )));
        }
        let n = rows;
        let mut max_dev = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += target[[k, i]].conj() * target[[k, j]];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                max_dev = max_dev.max((acc - expect).norm());
            }
        }
        if max_dev > 1e-8 {
            return Err(MeshError::NotUnitary(format!(
                "U†U deviates from identity by {max_dev:.2e}"
            )));
        }

        // Null the strict lower triangle, walking anti-diagonals outward
        // from the bottom-left corner. Even anti-diagonals walk up and mix
        // columns (c, c+1); odd ones walk down and mix rows (r−1, r).
        let mut v = target.clone();
        // (top port, theta, phi) in application order.
        let mut right_ops: Vec<(usize, f64, f64)> = Vec::new();
        let mut left_ops: Vec<(usize, f64, f64)> = Vec::new();
        for d in 0..n.saturating_sub(1) {
            let js: Vec<usize> = if d % 2 == 0 {
                (0..=d).collect()
            } else {
                (0..=d).rev().collect()
            };
            for j in js {
                let (r, c) = (n - 1 - j, d - j);
                if d % 2 == 0 {
                    // Zero v[r][c] by right-multiplying the adjoint of a
                    // block on ports (c, c+1): e^{−iφ}·sin(θ/2)·a +
                    // cos(θ/2)·b = 0 with a = v[r][c], b = v[r][c+1].
                    let (a, b) = (v[[r, c]], v[[r, c + 1]]);
                    let theta = 2.0 * b.norm().atan2(a.norm());
                    let phi = a.arg() - (-b).arg();
                    let u = mzi_transfer_matrix(MziPhases::new(theta, phi)?);
                    for i in 0..n {
                        let (x0, x1) = (v[[i, c]], v[[i, c + 1]]);
                        v[[i, c]] = x0 * u[0][0].conj() + x1 * u[0][1].conj();
                        v[[i, c + 1]] = x0 * u[1][0].conj() + x1 * u[1][1].conj();
                    }
                    right_ops.push((c, theta, phi));
                } else {
                    // Zero v[r][c] by left-multiplying a block on ports
                    // (r−1, r): e^{iφ}·cos(θ/2)·a − sin(θ/2)·b = 0 with
                    // a = v[r−1][c], b = v[r][c].
                    let (a, b) = (v[[r - 1, c]], v[[r, c]]);
                    let theta = 2.0 * a.norm().atan2(b.norm());
                    let phi = b.arg() - a.arg();
                    let u = mzi_transfer_matrix(MziPhases::new(theta, phi)?);
                    for i in 0..n {
                        let (x0, x1) = (v[[r - 1, i]], v[[r, i]]);
                        v[[r - 1, i]] = u[0][0] * x0 + u[0][1] * x1;
                        v[[r, i]] = u[1][0] * x0 + u[1][1] * x1;
                    }
                    left_ops.push((r - 1, theta, phi));
                }
            }
        }

        // v is now diagonal: target = L₁†···Lp† · diag · Rq···R₁ with the
        // L† factors on the output side. Move the diagonal left through
        // them using the identity
        //   T†(θ, φ)·diag(d₁, d₂) = diag(−e^{−i(θ+φ)}·d₂, −e^{−iθ}·d₂)·T(θ, arg(d₁/d₂)),
        // which keeps θ (hence the tiling slot) and changes only φ.
        let mut diag: Vec<Complex64> = (0..n).map(|i| v[[i, i]] / v[[i, i]].norm()).collect();
        let mut out_side: Vec<(usize, f64, f64)> = Vec::with_capacity(left_ops.len());
        for &(pair, theta, phi) in left_ops.iter().rev() {
            let phi_new = (diag[pair] * diag[pair + 1].conj()).arg();
            let e1 = -Complex64::from_polar(1.0, -(theta + phi)) * diag[pair + 1];
            let e2 = -Complex64::from_polar(1.0, -theta) * diag[pair + 1];
            diag[pair] = e1;
            diag[pair + 1] = e2;
            out_side.push((pair, theta, phi_new));
        }
        out_side.reverse();

        // Full factor sequence, output side first; pack onto mesh columns by
        // processing input-side factors first and giving each factor the
        // smallest parity-matching column above every overlapping factor
        // already placed.
        let mut seq = out_side;
        seq.extend(right_ops.into_iter().rev());
        let mut maxcol: Vec<isize> = vec![-1; n];
        let mut mzis: Vec<Mzi> = Vec::with_capacity(seq.len());
        for &(pair, theta, phi) in seq.iter().rev() {
            let mut col = (maxcol[pair].max(maxcol[pair + 1]) + 1) as usize;
            if col % 2 != pair % 2 {
                col += 1;
            }
            maxcol[pair] = col as isize;
            maxcol[pair + 1] = col as isize;
            mzis.push(Mzi {
                col,
                row: pair,
                phases: MziPhases::new(theta, phi)?,
            });
        }
        let output_phases: Vec<f64> = diag.iter().map(|d| d.arg()).collect();
        // from_parts re-validates that the packed factors tile the layout.
        Self::from_parts(n, mzis, output_phases)
    }

    /// Draws mesh parameters whose unitary is Haar-distributed over U(N):
    /// a complex Gaussian matrix is orthonormalized column by column
    /// (equivalent to QR with a real-positive R diagonal, which maps the
    /// Gaussian ensemble onto the Haar measure) and the result is programmed
    /// onto the mesh via [`MeshParams::from_unitary`].
    ///
    /// Unlike phases drawn i.i.d. uniformly — under which transmission
    /// concentrates near the diagonal and far port pairs are effectively
    /// disconnected — every entry of a Haar unitary has expected power 1/N,
    /// so all ports mix. This makes it the preferred training
    /// initialization.
    pub fn random_haar(n: usize, rng: &mut impl rand::Rng) -> Result<Self, MeshError> {
        let mut g = Array2::<Complex64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                g[[i, j]] = Complex64::new(
                    rng.sample(rand_distr::StandardNormal),
                    rng.sample(rand_distr::StandardNormal),
                );
            }
        }
        for j in 0..n {
            for k in 0..j {
                let mut proj = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    proj += g[[i, k]].conj() * g[[i, j]];
                }
                for i in 0..n {
                    let q = g[[i, k]];
                    g[[i, j]] -= proj * q;
                }
            }
            let norm = (0..n).map(|i| g[[i, j]].norm_sqr()).sum::<f64>().sqrt();
            for i in 0..n {
                g[[i, j]] /= norm;
            }
        }
        Self::from_unitary(&g)
    }
}

/// Elementwise derivatives of the MZI transfer matrix with respect to its
/// two phases, `(∂U/∂θ, ∂U/∂φ)`, used by reverse-mode gradient computation.
///
/// With `U = P·[[e·s, c], [e·c, −s]]`, `P = i·e^{iθ/2}`, `e = e^{iφ}`,
/// `s = sin(θ/2)`, `c = cos(θ/2)`:
/// `∂U/∂θ = (i/2)·U + (P/2)·[[e·c, −s], [−e·s, −c]]` and
/// `∂U/∂φ = P·[[i·e·s, 0], [i·e·c, 0]]`.
pub fn mzi_transfer_derivatives(
    p: MziPhases,
) -> ([[Complex64; 2]; 2], [[Complex64; 2]; 2]) {
    let half = 0.5 * p.theta;
    let (s, c) = (half.sin(), half.cos());
    let pref = Complex64::i() * Complex64::from_polar(1.0, half);
    let ephi = Complex64::from_polar(1.0, p.phi);
    let u = mzi_transfer_matrix(p);
    let half_i = Complex64::new(0.0, 0.5);
    let d_theta = [
        [
            half_i * u[0][0] + 0.5 * pref * ephi * c,
            half_i * u[0][1] - 0.5 * pref * s,
        ],
        [
            half_i * u[1][0] - 0.5 * pref * ephi * s,
            half_i * u[1][1] - 0.5 * pref * c,
        ],
    ];
    let zero = Complex64::new(0.0, 0.0);
    let d_phi = [
        [Complex64::i() * pref * ephi * s, zero],
        [Complex64::i() * pref * ephi * c, zero],
    ];
    (d_theta, d_phi)
}

impl MeshParams {
    /// Streams the mesh forward while recording each MZI's input pair, and
    /// returns those pairs (in MZI order) together with the state just
    /// before the output phase shifters. Reverse-mode gradient computation
    /// replays the blocks backwards from this record.
    pub(crate) fn apply_with_block_inputs(
        &self,
        x: &[Complex64],
    ) -> Result<(Vec<(Complex64, Complex64)>, Vec<Complex64>), MeshError> {
        if x.len() != self.n {
            return Err(MeshError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut state = x.to_vec();
        let mut block_inputs = Vec::with_capacity(self.mzis.len());
        for mzi in &self.mzis {
            let u = mzi_transfer_matrix(mzi.phases);
            let (a, b) = (state[mzi.row], state[mzi.row + 1]);
            block_inputs.push((a, b));
            state[mzi.row] = u[0][0] * a + u[0][1] * b;
            state[mzi.row + 1] = u[1][0] * a + u[1][1] * b;
        }
        Ok((block_inputs, state))
    }
}

/// Serialized layout: `{"n": int, "mzis": [[col, row, theta, phi], ...],
/// "output_phases": [float, ...]}`, phases in radians.
#[derive(Serialize, Deserialize)]
struct MeshParamsRepr {
    n: usize,
    mzis: Vec<(usize, usize, f64, f64)>,
    output_phases: Vec<f64>,
}

impl From<MeshParams> for MeshParamsRepr {
    fn from(m: MeshParams) -> Self {
        Self {
            n: m.n,
            mzis: m
                .mzis
                .iter()
                .map(|z| (z.col, z.row, z.phases.theta, z.phases.phi))
                .collect(),
            output_phases: m.output_phases,
        }
    }
}

impl TryFrom<MeshParamsRepr> for MeshParams {
    type Error = MeshError;

    fn try_from(r: MeshParamsRepr) -> Result<Self, MeshError> {
        let mzis = r
            .mzis
            .into_iter()
            .map(|(col, row, theta, phi)| {
                Ok(Mzi {
                    col,
                    row,
                    phases: MziPhases::new(theta, phi)?,
                })
            })
            .collect::<Result<Vec<_>, MeshError>>()?;
        Self::from_parts(r.n, mzis, r.output_phases)
    }
}
