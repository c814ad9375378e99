//! Complex vector/matrix aliases and a few helpers shared across modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

#[inline]
pub fn cis(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let w = theta.rem_euclid(tau);
    if w >= tau {
        0.0
    } else {
        w
    }
}

pub fn norm_sqr(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `conj(a) a^T`, the Hermitian matrix `Q` with `|a^T x|^2 = x^H Q x`.
pub fn outer_conj(a: &CVector) -> CMatrix {
    let n = a.len();
    CMatrix::from_fn(n, n, |i, j| a[i].conj() * a[j])
}

/// Real trace of `Q X` for Hermitian `Q` and `X`.
pub fn trace_product(q: &CMatrix, x: &CMatrix) -> f64 {
    let n = q.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (q[(i, j)] * x[(j, i)]).re;
        }
    }
    acc
}

/// Largest eigenpair of a Hermitian matrix.
pub fn principal_eigen(x: &CMatrix) -> (f64, CVector) {
    let eig = nalgebra::linalg::SymmetricEigen::new(x.clone());
    let (idx, val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        });
    (val, eig.eigenvectors.column(idx).into_owned())
}

pub fn min_eigenvalue(x: &CMatrix) -> f64 {
    let eig = nalgebra::linalg::SymmetricEigen::new(x.clone());
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Serde adapters that write complex numbers as `[re, im]` pairs.
pub mod serde_complex {
    use super::{CMatrix, CVector};
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    fn pairs(v: &CVector) -> Vec<[f64; 2]> {
        v.iter().map(|z| [z.re, z.im]).collect()
    }

    fn unpairs(p: Vec<[f64; 2]>) -> CVector {
        CVector::from_iterator(p.len(), p.into_iter().map(|[re, im]| Complex64::new(re, im)))
    }

    pub mod vecs {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[CVector], s: S) -> Result<S::Ok, S::Error> {
            v.iter().map(pairs).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CVector>, D::Error> {
            let raw: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
            Ok(raw.into_iter().map(unpairs).collect())
        }
    }

    pub mod matrix {
        use super::*;

        pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
            let rows: Vec<Vec<[f64; 2]>> = m
                .row_iter()
                .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
                .collect();
            (m.ncols(), rows).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
            let (ncols, rows): (usize, Vec<Vec<[f64; 2]>>) = Deserialize::deserialize(d)?;
            let nrows = rows.len();
            let flat: Vec<Complex64> = rows
                .into_iter()
                .flatten()
                .map(|[re, im]| Complex64::new(re, im))
                .collect();
            if flat.len() != nrows * ncols {
                return Err(serde::de::Error::custom("ragged complex matrix"));
            }
            Ok(CMatrix::from_row_slice(nrows, ncols, &flat))
        }
    }
}
