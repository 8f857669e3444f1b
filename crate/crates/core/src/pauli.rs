//! 2×2 matrix algebra in the Pauli basis.
//!
//! A matrix `a = a0 σ0 + a⃗·σ⃗` is stored by its four complex components. The
//! product rule
//!
//! ```text
//! ab = (a0 b0 + a⃗·b⃗) σ0 + (a0 b⃗ + b0 a⃗ + i a⃗×b⃗)·σ⃗
//! ```
//!
//! is the only primitive; commutators, traces and the closed-form exponential
//! and logarithm of Hermitian matrices are built on top of it.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Below this spin-vector length `sinh(r)/r` is evaluated by its Taylor series.
const SINHC_SERIES_BELOW: f64 = 1e-6;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// A 2×2 complex matrix written as `c0 σ0 + c1 σ1 + c2 σ2 + c3 σ3`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct PauliCoefficients {
    pub c0: C64,
    pub cvec: [C64; 3],
}

impl PauliCoefficients {
    pub const IDENTITY: Self = Self {
        c0: C64 { re: 1.0, im: 0.0 },
        cvec: [C64 { re: 0.0, im: 0.0 }; 3],
    };

    pub fn new(c0: C64, cvec: [C64; 3]) -> Self {
        Self { c0, cvec }
    }

    /// Hermitian matrix from real components.
    pub fn real(c0: f64, cvec: [f64; 3]) -> Self {
        Self {
            c0: C64::new(c0, 0.0),
            cvec: cvec.map(|c| C64::new(c, 0.0)),
        }
    }

    /// The Pauli matrix σ_k, k = 0..=3.
    pub fn sigma(k: usize) -> Self {
        assert!(k < 4, "Pauli index {k} out of range");
        let mut out = Self::default();
        if k == 0 {
            out.c0 = C64::new(1.0, 0.0);
        } else {
            out.cvec[k - 1] = C64::new(1.0, 0.0);
        }
        out
    }

    /// Components are real iff the matrix is Hermitian.
    pub fn is_hermitian(&self) -> bool {
        self.c0.im == 0.0 && self.cvec.iter().all(|c| c.im == 0.0)
    }

    /// Real parts of `(c0, c1, c2, c3)`.
    pub fn real_parts(&self) -> (f64, [f64; 3]) {
        (self.c0.re, self.cvec.map(|c| c.re))
    }

    pub fn product(&self, other: &Self) -> Self {
        let (a0, a) = (self.c0, &self.cvec);
        let (b0, b) = (other.c0, &other.cvec);
        let cross = cross(a, b);
        let mut cvec = [C64::default(); 3];
        for k in 0..3 {
            cvec[k] = a0 * b[k] + b0 * a[k] + I * cross[k];
        }
        Self {
            c0: a0 * b0 + dot(a, b),
            cvec,
        }
    }

    /// `ab − ba`, which reduces to `(0, 2i a⃗×b⃗)`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.product(other) - other.product(self)
    }

    pub fn trace(&self) -> C64 {
        2.0 * self.c0
    }

    /// Explicit matrix `[[m00, m01], [m10, m11]]`.
    pub fn to_matrix(&self) -> [[C64; 2]; 2] {
        let [c1, c2, c3] = self.cvec;
        [
            [self.c0 + c3, c1 - I * c2],
            [c1 + I * c2, self.c0 - c3],
        ]
    }

    pub fn from_matrix(m: &[[C64; 2]; 2]) -> Self {
        Self {
            c0: 0.5 * (m[0][0] + m[1][1]),
            cvec: [
                0.5 * (m[0][1] + m[1][0]),
                0.5 * I * (m[0][1] - m[1][0]),
                0.5 * (m[0][0] - m[1][1]),
            ],
        }
    }

    /// Matrix exponential of a Hermitian matrix:
    /// `e^{a0} (cosh r, sinh(r)/r · a⃗)` with `r = |a⃗|`.
    pub fn exp(&self) -> Result<Self> {
        if !self.is_hermitian() {
            return Err(Error::NotHermitian);
        }
        let (a0, a) = self.real_parts();
        let r = norm3(&a);
        let sinhc = if r < SINHC_SERIES_BELOW {
            let r2 = r * r;
            1.0 + r2 / 6.0 + r2 * r2 / 120.0
        } else {
            r.sinh() / r
        };
        let scale = a0.exp();
        Ok(Self::real(scale * r.cosh(), a.map(|c| scale * sinhc * c)))
    }

    /// Hermitian logarithm of a mixed-state density matrix.
    pub fn log(n: &PhysicalDensity) -> Result<Self> {
        let r = norm3(&n.nvec);
        if n.n0 <= 0.0 || r >= n.n0 {
            return Err(Error::NonPhysical {
                n0: n.n0,
                spin: r,
                reason: "logarithm requires n0 > 0 and |n⃗| < n0",
            });
        }
        if r == 0.0 {
            return Ok(Self::real(n.n0.ln(), [0.0; 3]));
        }
        let (plus, minus) = (n.n0 + r, n.n0 - r);
        let a0 = 0.5 * (plus * minus).ln();
        // atanh(r/n0) = ½ log(λ₊/λ₋), better conditioned near r → 0
        let half_log_ratio = (r / n.n0).atanh();
        Ok(Self::real(a0, n.nvec.map(|c| c / r * half_log_ratio)))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c0.norm_sqr() + self.cvec.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }
}

impl Mul for PauliCoefficients {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.product(&rhs)
    }
}

impl Add for PauliCoefficients {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut cvec = self.cvec;
        for (c, r) in cvec.iter_mut().zip(rhs.cvec) {
            *c += r;
        }
        Self {
            c0: self.c0 + rhs.c0,
            cvec,
        }
    }
}

impl Sub for PauliCoefficients {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for PauliCoefficients {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            c0: -self.c0,
            cvec: self.cvec.map(|c| -c),
        }
    }
}

impl Mul<C64> for PauliCoefficients {
    type Output = Self;
    fn mul(self, rhs: C64) -> Self {
        Self {
            c0: self.c0 * rhs,
            cvec: self.cvec.map(|c| c * rhs),
        }
    }
}

/// Charge and spin density at one point: `n0 σ0 + n⃗·σ⃗`.
///
/// A physical state satisfies `n0 ≥ 0` and `|n⃗| ≤ n0`; equality is a pure
/// state, strict inequality a mixed one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalDensity {
    pub n0: f64,
    pub nvec: [f64; 3],
}

impl PhysicalDensity {
    pub fn new(n0: f64, nvec: [f64; 3]) -> Result<Self> {
        let d = Self { n0, nvec };
        if !(n0 >= 0.0) || d.spin_norm() > n0 || nvec.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonPhysical {
                n0,
                spin: d.spin_norm(),
                reason: "need n0 ≥ 0 and |n⃗| ≤ n0",
            });
        }
        Ok(d)
    }

    pub fn spin_norm(&self) -> f64 {
        norm3(&self.nvec)
    }

    pub fn is_pure(&self) -> bool {
        self.spin_norm() == self.n0
    }

    pub fn is_mixed(&self) -> bool {
        self.spin_norm() < self.n0
    }

    pub fn to_pauli(&self) -> PauliCoefficients {
        PauliCoefficients::real(self.n0, self.nvec)
    }
}

pub fn dot<T>(a: &[T; 3], b: &[T; 3]) -> T
where
    T: Copy + Mul<Output = T> + Add<Output = T>,
{
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross<T>(a: &[T; 3], b: &[T; 3]) -> [T; 3]
where
    T: Copy + Mul<Output = T> + Sub<Output = T>,
{
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm3(a: &[f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}
