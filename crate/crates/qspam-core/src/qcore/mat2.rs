use num_complex::Complex;

/// Complex scalar used throughout.
pub type C = Complex<f64>;

/// Row-major 2x2 complex matrix. Houses Kraus operators, POVM elements, and
/// single-qubit gate matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    m: [[C; 2]; 2],
}

impl Mat2 {
    pub fn new(m: [[C; 2]; 2]) -> Self {
        Self { m }
    }

    pub fn zero() -> Self {
        Self::new([[C::new(0.0, 0.0); 2]; 2])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        m.m[0][0] = C::new(1.0, 0.0);
        m.m[1][1] = C::new(1.0, 0.0);
        m
    }

    pub fn diag(a: C, d: C) -> Self {
        let mut m = Self::zero();
        m.m[0][0] = a;
        m.m[1][1] = d;
        m
    }

    pub fn get(&self, row: usize, col: usize) -> C {
        self.m[row][col]
    }

    pub fn adjoint(&self) -> Self {
        Self::new([
            [self.m[0][0].conj(), self.m[1][0].conj()],
            [self.m[0][1].conj(), self.m[1][1].conj()],
        ])
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = Self::zero();
        for r in 0..2 {
            for c in 0..2 {
                out.m[r][c] = self.m[r][0] * rhs.m[0][c] + self.m[r][1] * rhs.m[1][c];
            }
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut out = *self;
        for r in 0..2 {
            for c in 0..2 {
                out.m[r][c] += rhs.m[r][c];
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        for r in 0..2 {
            for c in 0..2 {
                out.m[r][c] *= s;
            }
        }
        out
    }

    pub fn trace(&self) -> C {
        self.m[0][0] + self.m[1][1]
    }

    /// Max-entry distance, used for tolerance checks.
    pub fn distance(&self, rhs: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                d = d.max((self.m[r][c] - rhs.m[r][c]).norm());
            }
        }
        d
    }

    pub fn is_finite(&self) -> bool {
        self.m
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Conjugation U . rho . U^dag.
    pub fn conj_by(&self, u: &Self) -> Self {
        u.mul(self).mul(&u.adjoint())
    }
}
