//! Minimal complex linear algebra, gate set, and channel application shared
//! by the model, simulator, estimator, and mitigation layers.

mod density;
mod mat2;

pub use density::{bloch_from_density, density_from_bloch, BlochVector, DensityMatrix};
pub use mat2::{Mat2, C};

use thiserror::Error;

/// Dense simulation is refused above this qubit count.
pub const MAX_QUBITS: usize = 12;

/// Shared numerical tolerances. Kept in one place so invariants and their
/// tests agree on the thresholds.
pub mod tol {
    /// Hermiticity / trace / completeness checks on density matrices and POVMs.
    pub const CHANNEL: f64 = 1e-9;
    /// Exact-algebra identities (unitarity, POVM construction, round trips).
    pub const EXACT: f64 = 1e-12;
    /// Smallest admissible eigenvalue of a density matrix.
    pub const EIGEN_FLOOR: f64 = -1e-8;
    /// Slack admitted at parameter-bound edges (exactly projective fixtures).
    pub const BOUND: f64 = 1e-10;
    /// Bloch-vector norm slack.
    pub const BLOCH_NORM: f64 = 1e-9;
}

#[derive(Debug, Error, PartialEq)]
pub enum QcoreError {
    #[error("gate targets invalid for {dim}-dimensional state: {targets:?}")]
    InvalidTarget { dim: usize, targets: Vec<usize> },
    #[error("Kraus set is not a valid channel: sum K^dag K deviates from identity by {deviation:.3e}")]
    InvalidChannel { deviation: f64 },
    #[error("Bloch vector norm {norm} exceeds 1")]
    NonPhysicalState { norm: f64 },
    #[error("{requested} qubits requested; dense simulation is capped at {MAX_QUBITS}")]
    UnsupportedSize { requested: usize },
    #[error("outcome has probability {prob:.3e}; post-measurement state undefined")]
    ImpossibleOutcome { prob: f64 },
}

/// Single- and two-qubit gates used by the characterization circuits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    X,
    H,
    /// sqrt(X); prepares the +1 eigenstate of sigma_y from |0>.
    Sx,
    Rz(f64),
    Rx(f64),
    /// Controlled-X; control and target are supplied at application time.
    Cnot,
}

impl Gate {
    /// 2x2 matrix of a single-qubit gate. Panics on `Cnot`, which has no
    /// single-qubit matrix; `DensityMatrix::apply` handles it structurally.
    pub fn matrix(&self) -> Mat2 {
        use num_complex::Complex;
        let i = C::new(0.0, 1.0);
        match *self {
            Gate::X => Mat2::new([
                [C::new(0.0, 0.0), C::new(1.0, 0.0)],
                [C::new(1.0, 0.0), C::new(0.0, 0.0)],
            ]),
            Gate::H => {
                let s = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                Mat2::new([[s, s], [s, -s]])
            }
            Gate::Sx => {
                let a = C::new(0.5, 0.5);
                let b = C::new(0.5, -0.5);
                Mat2::new([[a, b], [b, a]])
            }
            Gate::Rz(theta) => {
                let h = theta / 2.0;
                Mat2::new([
                    [(-i * h).exp(), C::new(0.0, 0.0)],
                    [C::new(0.0, 0.0), (i * h).exp()],
                ])
            }
            Gate::Rx(theta) => {
                let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
                Mat2::new([
                    [C::new(c, 0.0), Complex::new(0.0, -s)],
                    [C::new(0.0, -s), C::new(c, 0.0)],
                ])
            }
            Gate::Cnot => panic!("CNOT has no single-qubit matrix"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_qubit_gates_are_unitary() {
        for g in [Gate::X, Gate::H, Gate::Sx, Gate::Rz(0.37), Gate::Rx(-1.2)] {
            let u = g.matrix();
            let p = u.adjoint().mul(&u);
            assert!(p.distance(&Mat2::identity()) < tol::EXACT, "{g:?}");
        }
    }

    #[test]
    fn sx_squared_is_x_up_to_phase() {
        let sx = Gate::Sx.matrix();
        let xx = sx.mul(&sx);
        // global phase: compare |entries|
        let x = Gate::X.matrix();
        for r in 0..2 {
            for c in 0..2 {
                assert!((xx.get(r, c).norm() - x.get(r, c).norm()).abs() < tol::EXACT);
            }
        }
    }
}
