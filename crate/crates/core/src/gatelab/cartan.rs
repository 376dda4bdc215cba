use std::f64::consts::FRAC_PI_4;
use std::f64::consts::FRAC_PI_2;

use crate::linalg::{self, Mat4, ONE, ZERO};

/// Nonlocal coordinates of a two-qubit gate,
/// `Λ(c) = exp(i c_x XX) exp(i c_y YY) exp(i c_z ZZ)`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct CartanCoordinates {
    pub cx: f64,
    pub cy: f64,
    pub cz: f64,
}

impl CartanCoordinates {
    pub const fn new(cx: f64, cy: f64, cz: f64) -> Self {
        Self { cx, cy, cz }
    }

    pub const IDENTITY: Self = Self::new(0.0, 0.0, 0.0);
    pub const SWAP: Self = Self::new(FRAC_PI_4, FRAC_PI_4, FRAC_PI_4);
    pub const ISWAP: Self = Self::new(FRAC_PI_4, FRAC_PI_4, 0.0);
    pub const CZ: Self = Self::new(FRAC_PI_4, 0.0, 0.0);

    pub fn as_array(&self) -> [f64; 3] {
        [self.cx, self.cy, self.cz]
    }

    pub fn from_slice(c: &[f64]) -> Self {
        Self::new(c[0], c[1], c[2])
    }

    /// Representative in `π/4 ≥ c_x ≥ c_y ≥ c_z ≥ 0`. Mirror images (sign of
    /// `c_z`) are identified, which leaves purities and transfer matrices
    /// unchanged.
    pub fn canonical(&self) -> Self {
        let mut c = self.as_array().map(|x| {
            let r = x.rem_euclid(FRAC_PI_2);
            if r > FRAC_PI_4 {
                FRAC_PI_2 - r
            } else {
                r
            }
        });
        c.sort_by(|a, b| b.total_cmp(a));
        Self::new(c[0], c[1], c[2])
    }

    pub fn unitary(&self) -> Mat4 {
        cartan_unitary(self)
    }
}

/// The three generators commute and square to one, so each factor is
/// `cos c + i sin c · PP`.
pub fn cartan_unitary(c: &CartanCoordinates) -> Mat4 {
    let mut u = linalg::identity4();
    for (idx, angle) in [(5usize, c.cx), (10, c.cy), (15, c.cz)] {
        let pp = linalg::pauli2(idx);
        let mut f = [[ZERO; 4]; 4];
        let (s, co) = angle.sin_cos();
        for r in 0..4 {
            for col in 0..4 {
                let id = if r == col { ONE } else { ZERO };
                f[r][col] = id * co + linalg::I * s * pp[r][col];
            }
        }
        u = linalg::mul4(&u, &f);
    }
    u
}
