//! Small dense helpers: 3x3 solves and polynomial least squares.

/// Solve `m x = rhs` by Gaussian elimination with partial pivoting.
pub(crate) fn solve_dense<const N: usize>(mut m: [[f64; N]; N], mut rhs: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let piv = (col..N).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col] == 0.0 || !m[piv][col].is_finite() {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..N {
            let f = m[row][col] / m[col][col];
            for c in col..N {
                m[row][c] -= f * m[col][c];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let mut acc = rhs[row];
        for c in row + 1..N {
            acc -= m[row][c] * x[c];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

/// Least-squares coefficients of `y ~ sum_j c_j * basis_j(x)` via normal equations.
pub(crate) fn least_squares<const N: usize>(
    xs: &[f64],
    ys: &[f64],
    basis: impl Fn(f64) -> [f64; N],
) -> Option<[f64; N]> {
    let mut ata = [[0.0; N]; N];
    let mut aty = [0.0; N];
    for (&x, &y) in xs.iter().zip(ys) {
        let row = basis(x);
        for i in 0..N {
            aty[i] += row[i] * y;
            for j in 0..N {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    solve_dense(ata, aty)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_solve() {
        let x = solve_dense([[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]], [3.0, 5.0, 5.0]).unwrap();
        for (a, b) in x.iter().zip([1.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(solve_dense([[1.0, 2.0], [2.0, 4.0]], [1.0, 2.0]).is_none());
    }

    #[test]
    fn quadratic_fit_is_exact_on_quadratics() {
        let xs = [0.0, 1.0, 2.0, 3.5];
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 - 2.0 * x + 0.5 * x * x).collect();
        let c = least_squares(&xs, &ys, |x| [1.0, x, x * x]).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-12 && (c[1] + 2.0).abs() < 1e-12 && (c[2] - 0.5).abs() < 1e-12);
    }
}
