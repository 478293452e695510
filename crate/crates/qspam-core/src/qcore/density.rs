use super::mat2::{Mat2, C};
use super::{tol, Gate, QcoreError, MAX_QUBITS};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Bloch vector of a single-qubit state; houses the SP parameters
/// (alpha_x, alpha_y, alpha_z).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, QcoreError> {
        let v = Self { x, y, z };
        let norm = v.norm();
        if norm * norm > 1.0 + tol::BLOCH_NORM {
            return Err(QcoreError::NonPhysicalState { norm });
        }
        Ok(v)
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// rho = (1 + x sx + y sy + z sz) / 2 for a single qubit.
pub fn density_from_bloch(v: &BlochVector) -> Mat2 {
    let h = 0.5;
    Mat2::new([
        [C::new(h * (1.0 + v.z), 0.0), C::new(h * v.x, -h * v.y)],
        [C::new(h * v.x, h * v.y), C::new(h * (1.0 - v.z), 0.0)],
    ])
}

pub fn bloch_from_density(rho: &Mat2) -> BlochVector {
    BlochVector {
        x: 2.0 * rho.get(1, 0).re,
        y: 2.0 * rho.get(1, 0).im,
        z: (rho.get(0, 0) - rho.get(1, 1)).re,
    }
}

/// Dense N-qubit density matrix, row-major over 2^N x 2^N.
///
/// Byte-order contract: qubit 0 is the leftmost character of a readout
/// bitstring, i.e. qubit q maps to bit (N-1-q) of a basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    dim: usize,
    data: Vec<C>,
}

impl DensityMatrix {
    pub fn ground(n: usize) -> Result<Self, QcoreError> {
        if n == 0 || n > MAX_QUBITS {
            return Err(QcoreError::UnsupportedSize { requested: n });
        }
        let dim = 1 << n;
        let mut data = vec![C::new(0.0, 0.0); dim * dim];
        data[0] = C::new(1.0, 0.0);
        Ok(Self { n, dim, data })
    }

    pub fn from_mat2(m: Mat2) -> Self {
        Self {
            n: 1,
            dim: 2,
            data: vec![m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1)],
        }
    }

    /// Tensor product of per-qubit states, qubit 0 first (leftmost).
    pub fn product(states: &[Mat2]) -> Result<Self, QcoreError> {
        let n = states.len();
        if n == 0 || n > MAX_QUBITS {
            return Err(QcoreError::UnsupportedSize { requested: n });
        }
        let dim = 1 << n;
        let mut data = vec![C::new(0.0, 0.0); dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                let mut v = C::new(1.0, 0.0);
                for q in 0..n {
                    let bit = n - 1 - q;
                    v *= states[q].get((r >> bit) & 1, (c >> bit) & 1);
                }
                data[r * dim + c] = v;
            }
        }
        Ok(Self { n, dim, data })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> C {
        self.data[r * self.dim + c]
    }

    pub fn to_mat2(&self) -> Mat2 {
        assert_eq!(self.n, 1);
        Mat2::new([[self.get(0, 0), self.get(0, 1)], [self.get(1, 0), self.get(1, 1)]])
    }

    pub fn trace(&self) -> C {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn diagonal_probs(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i).re).collect()
    }

    fn mask(&self, q: usize) -> Result<usize, QcoreError> {
        if q >= self.n {
            return Err(QcoreError::InvalidTarget { dim: self.dim, targets: vec![q] });
        }
        Ok(1 << (self.n - 1 - q))
    }

    /// In-place rho -> K rho K^dag for a single-qubit operator on `q`.
    /// No trace normalization; callers decide whether K is unitary.
    fn conjugate_1q(&mut self, k: &Mat2, q: usize) -> Result<(), QcoreError> {
        let mask = self.mask(q)?;
        let (k00, k01, k10, k11) = (k.get(0, 0), k.get(0, 1), k.get(1, 0), k.get(1, 1));
        // left multiply: rows
        for i0 in 0..self.dim {
            if i0 & mask != 0 {
                continue;
            }
            let i1 = i0 | mask;
            for j in 0..self.dim {
                let a = self.data[i0 * self.dim + j];
                let b = self.data[i1 * self.dim + j];
                self.data[i0 * self.dim + j] = k00 * a + k01 * b;
                self.data[i1 * self.dim + j] = k10 * a + k11 * b;
            }
        }
        // right multiply by K^dag: columns
        for j0 in 0..self.dim {
            if j0 & mask != 0 {
                continue;
            }
            let j1 = j0 | mask;
            for i in 0..self.dim {
                let a = self.data[i * self.dim + j0];
                let b = self.data[i * self.dim + j1];
                self.data[i * self.dim + j0] = a * k00.conj() + b * k01.conj();
                self.data[i * self.dim + j1] = a * k10.conj() + b * k11.conj();
            }
        }
        Ok(())
    }

    fn apply_cnot(&self, control: usize, target: usize) -> Result<Self, QcoreError> {
        if control == target || control >= self.n || target >= self.n {
            return Err(QcoreError::InvalidTarget {
                dim: self.dim,
                targets: vec![control, target],
            });
        }
        let (cm, tm) = (self.mask(control)?, self.mask(target)?);
        let perm = |i: usize| if i & cm != 0 { i ^ tm } else { i };
        let mut out = vec![C::new(0.0, 0.0); self.dim * self.dim];
        for r in 0..self.dim {
            let pr = perm(r);
            for c in 0..self.dim {
                out[pr * self.dim + perm(c)] = self.data[r * self.dim + c];
            }
        }
        Ok(Self { n: self.n, dim: self.dim, data: out })
    }

    /// rho -> U rho U^dag. Single-qubit gates take one target; CNOT takes
    /// [control, target].
    pub fn apply_unitary(&self, gate: &Gate, targets: &[usize]) -> Result<Self, QcoreError> {
        match gate {
            Gate::Cnot => {
                if targets.len() != 2 {
                    return Err(QcoreError::InvalidTarget {
                        dim: self.dim,
                        targets: targets.to_vec(),
                    });
                }
                self.apply_cnot(targets[0], targets[1])
            }
            g => {
                if targets.len() != 1 {
                    return Err(QcoreError::InvalidTarget {
                        dim: self.dim,
                        targets: targets.to_vec(),
                    });
                }
                let mut out = self.clone();
                out.conjugate_1q(&g.matrix(), targets[0])?;
                Ok(out)
            }
        }
    }

    /// Channel mode: rho -> sum_k K_k rho K_k^dag on qubit `target`.
    /// Validates completeness and re-symmetrizes to damp fp drift.
    pub fn apply_channel(&self, ops: &[Mat2], target: usize) -> Result<Self, QcoreError> {
        let mut sum = Mat2::zero();
        for k in ops {
            sum = sum.add(&k.adjoint().mul(k));
        }
        let deviation = sum.distance(&Mat2::identity());
        if deviation > tol::CHANNEL {
            return Err(QcoreError::InvalidChannel { deviation });
        }
        let mut acc: Option<DensityMatrix> = None;
        for k in ops {
            let mut branch = self.clone();
            branch.conjugate_1q(k, target)?;
            acc = Some(match acc {
                None => branch,
                Some(mut a) => {
                    for (x, y) in a.data.iter_mut().zip(branch.data.iter()) {
                        *x += *y;
                    }
                    a
                }
            });
        }
        let mut out = acc.expect("non-empty Kraus set");
        out.hermitize();
        Ok(out)
    }

    /// Selective mode: unnormalized K rho K^dag for one branch; trace <= 1.
    pub fn apply_kraus_branch(&self, k: &Mat2, target: usize) -> Result<Self, QcoreError> {
        let mut out = self.clone();
        out.conjugate_1q(k, target)?;
        Ok(out)
    }

    /// rho <- (rho + rho^dag) / 2.
    pub fn hermitize(&mut self) {
        for r in 0..self.dim {
            for c in (r + 1)..self.dim {
                let a = self.data[r * self.dim + c];
                let b = self.data[c * self.dim + r];
                let avg = (a + b.conj()) * 0.5;
                self.data[r * self.dim + c] = avg;
                self.data[c * self.dim + r] = avg.conj();
            }
        }
        for r in 0..self.dim {
            let d = self.data[r * self.dim + r];
            self.data[r * self.dim + r] = C::new(d.re, 0.0);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for z in self.data.iter_mut() {
            *z *= s;
        }
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let mut d: f64 = 0.0;
        for r in 0..self.dim {
            for c in 0..self.dim {
                d = d.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        d
    }

    /// Eigenvalues (ascending) of the Hermitian part; used by invariants.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = DMatrix::from_fn(self.dim, self.dim, |r, c| self.get(r, c));
        let mut ev: Vec<f64> = m
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    pub fn is_valid_density(&self) -> bool {
        self.hermiticity_deviation() < tol::CHANNEL
            && (self.trace().re - 1.0).abs() < tol::CHANNEL
            && self.trace().im.abs() < tol::CHANNEL
            && self.eigenvalues().first().copied().unwrap_or(0.0) > tol::EIGEN_FLOOR
    }
}
