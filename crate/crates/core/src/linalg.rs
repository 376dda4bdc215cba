//! Fixed-size complex matrices for one- and two-qubit operators.
//!
//! Two-qubit basis states are ordered `|b1 b2>` with index `2*b1 + b2`, so the
//! first tensor factor acts on the lower-numbered qubit of a pair.

use num_complex::Complex64 as C64;

pub type Mat2 = [[C64; 2]; 2];
pub type Mat4 = [[C64; 4]; 4];

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn identity4() -> Mat4 {
    let mut m = [[ZERO; 4]; 4];
    for (k, row) in m.iter_mut().enumerate() {
        row[k] = ONE;
    }
    m
}

pub fn identity2() -> Mat2 {
    [[ONE, ZERO], [ZERO, ONE]]
}

/// Single-qubit Pauli by index: 0 = I, 1 = X, 2 = Y, 3 = Z.
pub fn pauli(idx: usize) -> Mat2 {
    match idx {
        0 => identity2(),
        1 => [[ZERO, ONE], [ONE, ZERO]],
        2 => [[ZERO, -I], [I, ZERO]],
        3 => [[ONE, ZERO], [ZERO, -ONE]],
        _ => panic!("pauli index {idx} out of range"),
    }
}

pub fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut m = [[ZERO; 4]; 4];
    for r1 in 0..2 {
        for c1 in 0..2 {
            for r2 in 0..2 {
                for c2 in 0..2 {
                    m[2 * r1 + r2][2 * c1 + c2] = a[r1][c1] * b[r2][c2];
                }
            }
        }
    }
    m
}

/// Two-qubit Pauli `P_a ⊗ P_b`, indexed `4*a + b`.
pub fn pauli2(idx: usize) -> Mat4 {
    kron(&pauli(idx / 4), &pauli(idx % 4))
}

pub fn mul4(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut m = [[ZERO; 4]; 4];
    for r in 0..4 {
        for k in 0..4 {
            let x = a[r][k];
            if x == ZERO {
                continue;
            }
            for c in 0..4 {
                m[r][c] += x * b[k][c];
            }
        }
    }
    m
}

pub fn mul2(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut m = [[ZERO; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            m[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    m
}

pub fn dagger4(a: &Mat4) -> Mat4 {
    let mut m = [[ZERO; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            m[r][c] = a[c][r].conj();
        }
    }
    m
}

pub fn dagger2(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

pub fn trace4(a: &Mat4) -> C64 {
    (0..4).map(|k| a[k][k]).sum()
}

/// Frobenius norm of `U U^dag - 1`.
pub fn unitarity_deviation(u: &Mat4) -> f64 {
    let p = mul4(u, &dagger4(u));
    let mut acc = 0.0;
    for r in 0..4 {
        for c in 0..4 {
            let target = if r == c { ONE } else { ZERO };
            acc += (p[r][c] - target).norm_sqr();
        }
    }
    acc.sqrt()
}

pub fn swap() -> Mat4 {
    let mut m = [[ZERO; 4]; 4];
    m[0][0] = ONE;
    m[1][2] = ONE;
    m[2][1] = ONE;
    m[3][3] = ONE;
    m
}

pub fn iswap() -> Mat4 {
    let mut m = [[ZERO; 4]; 4];
    m[0][0] = ONE;
    m[1][2] = I;
    m[2][1] = I;
    m[3][3] = ONE;
    m
}

pub fn cz() -> Mat4 {
    let mut m = identity4();
    m[3][3] = -ONE;
    m
}

/// Entrywise distance after removing the best global phase.
pub fn phase_distance(a: &Mat4, b: &Mat4) -> f64 {
    let overlap: C64 = (0..4)
        .flat_map(|r| (0..4).map(move |c| (r, c)))
        .map(|(r, c)| b[r][c].conj() * a[r][c])
        .sum();
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { ONE };
    let mut worst: f64 = 0.0;
    for r in 0..4 {
        for c in 0..4 {
            worst = worst.max((a[r][c] - phase * b[r][c]).norm());
        }
    }
    worst
}
