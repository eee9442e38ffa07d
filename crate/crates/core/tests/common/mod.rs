//! Independent amplitude oracles.
//!
//! Everything here works on plain `Vec<Complex>` vectors and row-major
//! matrices with its own arithmetic; nothing goes through the engine or the
//! `qcore` operations it checks.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use handshake_core::qcore::Complex;
use rand::Rng;

pub type Vector = Vec<Complex>;
/// Row-major square matrix.
pub type Matrix = Vec<Vec<Complex>>;

pub fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

pub fn dot(a: &[Complex], b: &[Complex]) -> Complex {
    let mut acc = c(0.0, 0.0);
    for k in 0..a.len() {
        acc += a[k].conj() * b[k];
    }
    acc
}

pub fn norm_sqr(a: &[Complex]) -> f64 {
    a.iter().map(|z| z.re * z.re + z.im * z.im).sum()
}

pub fn matvec(m: &Matrix, v: &[Complex]) -> Vector {
    m.iter()
        .map(|row| {
            let mut acc = c(0.0, 0.0);
            for k in 0..v.len() {
                acc += row[k] * v[k];
            }
            acc
        })
        .collect()
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut acc = c(0.0, 0.0);
                    for k in 0..n {
                        acc += a[i][k] * b[k][j];
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (na, nb) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0, 0.0); na * nb]; na * nb];
    for i in 0..na {
        for j in 0..na {
            for k in 0..nb {
                for l in 0..nb {
                    out[i * nb + k][j * nb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn identity(n: usize) -> Matrix {
    (0..n)
        .map(|i| (0..n).map(|j| c(if i == j { 1.0 } else { 0.0 }, 0.0)).collect())
        .collect()
}

pub fn hadamard() -> Matrix {
    let h = FRAC_1_SQRT_2;
    vec![vec![c(h, 0.0), c(h, 0.0)], vec![c(h, 0.0), c(-h, 0.0)]]
}

/// `⟨ψ|P|ψ⟩` for a diagonal 0/1 projector given by its support indices.
pub fn support_weight(psi: &[Complex], support: &[usize]) -> f64 {
    support.iter().map(|&i| psi[i].norm_sqr()).sum()
}

pub fn random_state<R: Rng>(rng: &mut R, dim: usize) -> Vector {
    let v: Vector = (0..dim)
        .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let n = norm_sqr(&v).sqrt();
    v.into_iter().map(|z| z / n).collect()
}

/// Random orthonormal basis by Gram-Schmidt on random complex vectors.
pub fn random_basis<R: Rng>(rng: &mut R, dim: usize) -> Vec<Vector> {
    let mut basis: Vec<Vector> = Vec::with_capacity(dim);
    while basis.len() < dim {
        let mut v = random_state(rng, dim);
        for b in &basis {
            let overlap = dot(b, &v);
            for k in 0..dim {
                v[k] -= overlap * b[k];
            }
        }
        let n = norm_sqr(&v).sqrt();
        if n < 1e-6 {
            continue;
        }
        basis.push(v.into_iter().map(|z| z / n).collect());
    }
    basis
}

/// Born weights `|⟨φᵢ|ψ⟩|²`.
pub fn born_weights(basis: &[Vector], psi: &[Complex]) -> Vec<f64> {
    basis.iter().map(|phi| dot(phi, psi).norm_sqr()).collect()
}

/// Singlet joint weights at analysis angles `a`, `b` in the x–z plane,
/// from `⟨ab|Ψ⁻⟩` with explicit spinors.
pub fn singlet_weights(a: f64, b: f64) -> BTreeMap<String, f64> {
    let spinor = |theta: f64, up: bool| -> [f64; 2] {
        let (s, co) = (theta / 2.0).sin_cos();
        if up {
            [co, s]
        } else {
            [-s, co]
        }
    };
    // singlet amplitudes on ++, +-, -+, --
    let psi = [0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0];
    let mut out = BTreeMap::new();
    for (ua, sa) in [(true, '+'), (false, '-')] {
        for (ub, sb) in [(true, '+'), (false, '-')] {
            let (ea, eb) = (spinor(a, ua), spinor(b, ub));
            let amp = ea[0] * eb[0] * psi[0]
                + ea[0] * eb[1] * psi[1]
                + ea[1] * eb[0] * psi[2]
                + ea[1] * eb[1] * psi[3];
            out.insert(format!("{sa}{sb}"), amp * amp);
        }
    }
    out
}

/// Elitzur-Vaidman interferometer fed at the lower port (index 1), beam
/// splitter `[[1, i], [i, 1]]/√2`, obstacle on the lower arm.
pub fn elitzur_vaidman_oracle(obstacle: bool) -> BTreeMap<String, f64> {
    let h = FRAC_1_SQRT_2;
    let bs: Matrix = vec![vec![c(h, 0.0), c(0.0, h)], vec![c(0.0, h), c(h, 0.0)]];
    let input = vec![c(0.0, 0.0), c(1.0, 0.0)];
    let mid = matvec(&bs, &input);
    let mut out = BTreeMap::new();
    if obstacle {
        let p_obstacle = mid[1].norm_sqr();
        // project out the lower arm, renormalize, propagate
        let survive = 1.0 - p_obstacle;
        let residual = vec![mid[0] / survive.sqrt(), c(0.0, 0.0)];
        let end = matvec(&bs, &residual);
        out.insert("obstacle".to_string(), p_obstacle);
        out.insert("bright".to_string(), survive * end[0].norm_sqr());
        out.insert("dark".to_string(), survive * end[1].norm_sqr());
    } else {
        let end = matvec(&bs, &mid);
        out.insert("bright".to_string(), end[0].norm_sqr());
        out.insert("dark".to_string(), end[1].norm_sqr());
    }
    out
}

/// Deutsch circuit on `|0⟩|1⟩`: probability the first qubit reads 0 and 1.
pub fn deutsch_oracle(f: impl Fn(usize) -> usize) -> BTreeMap<String, f64> {
    let mut uf = vec![vec![c(0.0, 0.0); 4]; 4];
    for x in 0..2 {
        for y in 0..2 {
            uf[2 * x + (y ^ f(x))][2 * x + y] = c(1.0, 0.0);
        }
    }
    let h = hadamard();
    let circuit = matmul(&kron(&h, &identity(2)), &matmul(&uf, &kron(&h, &h)));
    let input = vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
    let out = matvec(&circuit, &input);
    BTreeMap::from([
        ("0".to_string(), support_weight(&out, &[0, 1])),
        ("1".to_string(), support_weight(&out, &[2, 3])),
    ])
}
