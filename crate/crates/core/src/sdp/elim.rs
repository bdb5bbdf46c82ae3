//! Elimination of linear equality constraints.
//!
//! The equalities `E y = e` are brought to reduced row-echelon form with
//! complete pivoting, which yields the affine parameterization
//! `y = y0 + N z` of their solution set (free variables become `z`).

use nalgebra::DMatrix;

use super::LinearEquality;

pub(super) struct AffineParam {
    pub y0: Vec<f64>,
    /// `num_vars x num_free`
    pub basis: DMatrix<f64>,
}

pub(super) enum Elimination {
    Param(AffineParam),
    Inconsistent { residual: f64 },
}

pub(super) fn eliminate(num_vars: usize, equalities: &[LinearEquality]) -> Elimination {
    let m = equalities.len();
    let width = num_vars + 1;
    let mut a = vec![0.0; m * width];
    for (k, eq) in equalities.iter().enumerate() {
        for &(v, c) in &eq.coeffs {
            a[k * width + v] += c;
        }
        a[k * width + num_vars] = eq.rhs;
    }
    let scale = a
        .chunks(width)
        .flat_map(|row| row[..num_vars].iter())
        .fold(1.0f64, |acc, v| acc.max(v.abs()));
    let rhs_scale = equalities.iter().fold(1.0f64, |acc, eq| acc.max(eq.rhs.abs()));
    let pivot_tol = 1e-11 * scale;

    let mut is_pivot = vec![false; num_vars];
    let mut pivots: Vec<usize> = Vec::new();
    for k in 0..m {
        let mut best = (0.0, 0, 0);
        for i in k..m {
            let row = &a[i * width..i * width + num_vars];
            for (j, &v) in row.iter().enumerate() {
                if !is_pivot[j] && v.abs() > best.0 {
                    best = (v.abs(), i, j);
                }
            }
        }
        let (mag, pi, pj) = best;
        if mag <= pivot_tol {
            break;
        }
        if pi != k {
            for c in 0..width {
                a.swap(k * width + c, pi * width + c);
            }
        }
        let inv = 1.0 / a[k * width + pj];
        for c in 0..width {
            a[k * width + c] *= inv;
        }
        a[k * width + pj] = 1.0;
        let pivot_row: Vec<f64> = a[k * width..(k + 1) * width].to_vec();
        for i in 0..m {
            if i == k {
                continue;
            }
            let f = a[i * width + pj];
            if f == 0.0 {
                continue;
            }
            let row = &mut a[i * width..(i + 1) * width];
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                *x -= f * p;
            }
            row[pj] = 0.0;
        }
        is_pivot[pj] = true;
        pivots.push(pj);
    }

    let rank = pivots.len();
    let residual = (rank..m)
        .map(|i| a[i * width + num_vars].abs())
        .fold(0.0, f64::max);
    if residual > 1e-9 * rhs_scale {
        return Elimination::Inconsistent { residual };
    }

    let free: Vec<usize> = (0..num_vars).filter(|&j| !is_pivot[j]).collect();
    let mut basis = DMatrix::zeros(num_vars, free.len());
    for (col, &j) in free.iter().enumerate() {
        basis[(j, col)] = 1.0;
    }
    let mut y0 = vec![0.0; num_vars];
    for (k, &p) in pivots.iter().enumerate() {
        let row = &a[k * width..(k + 1) * width];
        y0[p] = row[num_vars];
        for (col, &j) in free.iter().enumerate() {
            basis[(p, col)] = -row[j];
        }
    }
    Elimination::Param(AffineParam { y0, basis })
}
