//! Small dense linear algebra on top of nalgebra.

use nalgebra::{DMatrix, DVector};

pub fn det(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    if n == 0 {
        return 1.0;
    }
    DMatrix::from_fn(n, n, |i, j| rows[i][j]).determinant()
}

/// Generalized cross product of `n - 1` vectors in `R^n`.
///
/// The result `w` satisfies `<w, v> = det[rows; v]` for every `v`, so it is
/// orthogonal to each row and vanishes exactly when the rows are dependent.
pub fn wedge(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len() + 1;
    (0..n)
        .map(|k| {
            let minor: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| r.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &v)| v).collect())
                .collect();
            let sign = if (n - 1 + k) % 2 == 0 { 1.0 } else { -1.0 };
            sign * det(&minor)
        })
        .collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `a x = b` by LU; `None` when `a` is singular.
pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    m.lu().solve(&DVector::from_column_slice(b)).map(|x| x.as_slice().to_vec())
}

/// Least-squares solution of the overdetermined system `a x ≈ b` via SVD,
/// together with the residual norm `|a x - b|`.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    if a.ncols() == 0 {
        return (DVector::zeros(0), b.norm());
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * 1e-13 * a.nrows().max(a.ncols()) as f64;
    let x = svd.solve(b, eps).unwrap_or_else(|_| DVector::zeros(a.ncols()));
    let r = (a * &x - b).norm();
    (x, r)
}

/// Singular values in descending order.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Number of singular values above `rel_tol` times the largest.
pub fn numerical_rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    let s = singular_values(a);
    match s.first() {
        Some(&smax) if smax > 0.0 => s.iter().filter(|&&v| v > rel_tol * smax).count(),
        _ => 0,
    }
}

/// Solves `(AᵀA + ridge·I) x = Aᵀb` where `ridge = ridge_rel · max(1, max diag AᵀA)`.
pub fn ridge_normal_equations(a: &DMatrix<f64>, b: &DVector<f64>, ridge_rel: f64) -> DVector<f64> {
    let mut ata = a.transpose() * a;
    let atb = a.transpose() * b;
    let scale = (0..ata.nrows()).map(|i| ata[(i, i)]).fold(1.0f64, f64::max);
    for i in 0..ata.nrows() {
        ata[(i, i)] += ridge_rel * scale;
    }
    ata.clone()
        .cholesky()
        .map(|c| c.solve(&atb))
        .or_else(|| ata.lu().solve(&atb))
        .unwrap_or_else(|| DVector::zeros(a.ncols()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn wedge_is_cross_product_in_three_dimensions() {
        let a = vec![1.0, 2.0, 3.0];
        let b = vec![-1.0, 0.5, 2.0];
        let w = wedge(&[a.clone(), b.clone()]);
        let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
        for k in 0..3 {
            assert_relative_eq!(w[k], cross[k], epsilon = 1e-14);
        }
    }

    #[test]
    fn wedge_orthogonal_in_higher_dimensions() {
        let rows = vec![
            vec![1.0, 0.3, -0.2, 0.5, 0.1],
            vec![0.0, 1.0, 0.7, -0.4, 0.2],
            vec![0.2, -0.1, 1.0, 0.0, 0.9],
            vec![0.5, 0.5, 0.5, 1.0, -0.3],
        ];
        let w = wedge(&rows);
        for r in &rows {
            assert!(dot(r, &w).abs() < 1e-13);
        }
        assert!(norm(&w) > 0.1);
    }

    #[test]
    fn rank_and_lstsq() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert_eq!(numerical_rank(&a, 1e-10), 1);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let (_, r) = lstsq(&a, &b);
        assert!(r < 1e-12);
        let x = ridge_normal_equations(&DMatrix::identity(2, 2), &DVector::from_vec(vec![1.0, 0.0]), 1e-12);
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-10);
    }
}
