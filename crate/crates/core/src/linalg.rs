//! Small dense linear algebra over jets.

use crate::error::{GeomError, Result};
use crate::jets::{Jet, C64};

/// Frames with a larger ∞-norm condition number are treated as singular.
pub const COND_LIMIT: f64 = 1e8;

/// ∞-norm of a complex matrix.
pub fn norm_inf(m: &[Vec<C64>]) -> f64 {
    m.iter()
        .map(|row| row.iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse of a square jet matrix by Gauss–Jordan elimination with partial
/// pivoting on base-point values. Returns the inverse and the ∞-norm
/// condition number of the base-point matrix.
pub fn invert(m: &[Vec<Jet>]) -> Result<(Vec<Vec<Jet>>, f64)> {
    let n = m.len();
    let (nvars, order) = (m[0][0].nvars(), m[0][0].order());
    let values: Vec<Vec<C64>> = m
        .iter()
        .map(|r| r.iter().map(Jet::value).collect())
        .collect();
    let mut a: Vec<Vec<Jet>> = m.to_vec();
    let mut inv: Vec<Vec<Jet>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| Jet::real(nvars, order, if i == j { 1.0 } else { 0.0 }))
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| {
                a[x][col]
                    .value()
                    .norm()
                    .total_cmp(&a[y][col].value().norm())
            })
            .unwrap_or(col);
        if a[pivot][col].value().norm() == 0.0 {
            return Err(GeomError::SingularFrame {
                cond: f64::INFINITY,
            });
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let r = a[col][col].recip()?;
        for k in 0..n {
            a[col][k] = &a[col][k] * &r;
            inv[col][k] = &inv[col][k] * &r;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row][col].clone();
            if f.norm_inf() == 0.0 {
                continue;
            }
            for k in 0..n {
                let t = &f * &a[col][k];
                a[row][k] -= &t;
                let t = &f * &inv[col][k];
                inv[row][k] -= &t;
            }
        }
    }
    let inv_values: Vec<Vec<C64>> = inv
        .iter()
        .map(|r| r.iter().map(Jet::value).collect())
        .collect();
    let cond = norm_inf(&values) * norm_inf(&inv_values);
    Ok((inv, cond))
}
