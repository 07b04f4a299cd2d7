#![allow(dead_code)]

use rand::Rng;
use sbcode::numerics::Matrix;
use sbcode::seeding;

/// Least squares through the normal equations on the nonzero columns, solved by
/// Gaussian elimination with partial pivoting. `None` when those columns are
/// rank deficient.
pub fn normal_equations_oracle(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let live: Vec<usize> = (0..a.cols()).filter(|&j| !a.column_is_zero(j)).collect();
    let n = live.len();
    let mut x = vec![0.0; a.cols()];
    if n == 0 {
        return Some(x);
    }
    // augmented [AᵀA | Aᵀb]
    let mut m = vec![vec![0.0; n + 1]; n];
    for (r, &jr) in live.iter().enumerate() {
        for (c, &jc) in live.iter().enumerate() {
            m[r][c] = (0..a.rows()).map(|i| a.get(i, jr) * a.get(i, jc)).sum();
        }
        m[r][n] = (0..a.rows()).map(|i| a.get(i, jr) * b[i]).sum();
    }
    let scale = m.iter().flat_map(|row| row[..n].iter()).fold(0.0f64, |s, v| s.max(v.abs()));
    for col in 0..n {
        let piv = (col..n).max_by(|&p, &q| m[p][col].abs().total_cmp(&m[q][col].abs()))?;
        if m[piv][col].abs() <= 1e-10 * scale {
            return None;
        }
        m.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = m[row][col] / m[col][col];
                for c in col..=n {
                    m[row][c] -= f * m[col][c];
                }
            }
        }
    }
    for (r, &j) in live.iter().enumerate() {
        x[j] = m[r][n] / m[r][r];
    }
    Some(x)
}

/// `Aᵀ(Ax − b)`.
pub fn normal_residual(a: &Matrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.mul_vec(x).unwrap();
    let r: Vec<f64> = ax.iter().zip(b).map(|(u, v)| u - v).collect();
    a.tr_mul_vec(&r).unwrap()
}

/// A small tall instance whose nonzero columns have full column rank, with a
/// few columns zeroed out.
pub fn full_rank_instance(seed: u64) -> (Matrix, Vec<f64>, Vec<usize>) {
    let mut rng = seeding::rng(seed);
    let n = rng.random_range(1..=6);
    let m = rng.random_range(n..=n + 5);
    let zeroed: Vec<usize> = (0..n).filter(|_| rng.random::<f64>() < 0.25).collect();
    let a = Matrix::from_fn(m, n, |_, j| {
        if zeroed.contains(&j) {
            0.0
        } else {
            rng.random_range(-2.0..2.0)
        }
    });
    let b = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
    (a, b, zeroed)
}

/// A random binary matrix, typically rank deficient.
pub fn binary_instance(seed: u64) -> (Matrix, Vec<f64>) {
    let mut rng = seeding::rng(seed);
    let m = rng.random_range(1..=8);
    let n = rng.random_range(1..=8);
    let density = rng.random_range(0.1..0.9);
    let a = Matrix::from_fn(m, n, |_, _| if rng.random::<f64>() < density { 1.0 } else { 0.0 });
    (a, vec![1.0; m])
}
