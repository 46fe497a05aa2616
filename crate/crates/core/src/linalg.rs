//! Small dense complex helpers on top of `ndarray`.

use ndarray::{Array1, Array2, Zip};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Matrix = Array2<C64>;
pub type Vector = Array1<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn eye(n: usize) -> Matrix {
    Array2::from_diag_elem(n, ONE)
}

/// Conjugate transpose.
pub fn dagger(m: &Matrix) -> Matrix {
    m.t().mapv(|z| z.conj())
}

/// |x⟩⟨y|
pub fn outer(x: &Vector, y: &Vector) -> Matrix {
    let mut m = Matrix::zeros((x.len(), y.len()));
    for (i, xi) in x.iter().enumerate() {
        for (j, yj) in y.iter().enumerate() {
            m[[i, j]] = xi * yj.conj();
        }
    }
    m
}

/// ⟨x|y⟩, conjugate-linear in the first argument.
pub fn inner(x: &Vector, y: &Vector) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(x: &Vector) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Matrix::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    let mut worst = 0.0f64;
    Zip::from(a).and(b).for_each(|x, y| worst = worst.max((x - y).norm()));
    worst
}

pub fn max_abs(a: &Matrix) -> f64 {
    a.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub fn trace(a: &Matrix) -> C64 {
    a.diag().iter().sum()
}

pub fn commutator(a: &Matrix, b: &Matrix) -> Matrix {
    a.dot(b) - b.dot(a)
}

/// max |(U†U − I)_ij|
pub fn unitarity_deviation(m: &Matrix) -> f64 {
    let n = m.ncols();
    max_abs_diff(&dagger(m).dot(m), &eye(n))
}

/// max |H − H†|
pub fn hermiticity_deviation(h: &Matrix) -> f64 {
    max_abs_diff(h, &dagger(h))
}

/// Nearest unitary (polar factor) by Newton–Schulz iteration.
///
/// Converges quadratically when `m` is already close to unitary, which is the
/// only situation it is used in.
pub fn polar_unitary(m: &Matrix) -> Matrix {
    let n = m.ncols();
    let three = eye(n).mapv(|z| z * 3.0);
    let mut x = m.clone();
    for _ in 0..50 {
        let xhx = dagger(&x).dot(&x);
        let next = x.dot(&(&three - &xhx)).mapv(|z| z * 0.5);
        let delta = max_abs_diff(&next, &x);
        x = next;
        if delta < 1e-15 {
            break;
        }
    }
    x
}
