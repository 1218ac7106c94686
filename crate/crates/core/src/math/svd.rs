use super::Matrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;
const REL_TOL: f64 = 1e-12;

/// Singular values of `m`, descending.
///
/// Computed as square roots of the eigenvalues of the smaller Gram matrix
/// (`mᵀm` or `mmᵀ`), diagonalized with cyclic Jacobi rotations until the
/// off-diagonal Frobenius norm drops below `1e-12 × trace`.
pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::Empty("matrix for singular values"));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("matrix for singular values"));
    }
    let mut gram = gram_of_smaller_side(m);
    let mut eig = symmetric_eigenvalues(&mut gram);
    eig.sort_by(|a, b| b.total_cmp(a));
    Ok(eig.into_iter().map(|l| l.max(0.0).sqrt()).collect())
}

/// `mᵀm` when `cols <= rows`, otherwise `mmᵀ`.
fn gram_of_smaller_side(m: &Matrix) -> Matrix {
    let (rows, cols) = m.shape();
    if cols <= rows {
        let mut g = Matrix::zeros(cols, cols);
        for r in m.row_iter() {
            for i in 0..cols {
                let ri = r[i];
                if ri == 0.0 {
                    continue;
                }
                for j in i..cols {
                    g[(i, j)] += ri * r[j];
                }
            }
        }
        symmetrize_upper(&mut g);
        g
    } else {
        let mut g = Matrix::zeros(rows, rows);
        for i in 0..rows {
            for j in i..rows {
                g[(i, j)] = super::dot(m.row(i), m.row(j));
            }
        }
        symmetrize_upper(&mut g);
        g
    }
}

fn symmetrize_upper(g: &mut Matrix) {
    let n = g.rows();
    for i in 0..n {
        for j in 0..i {
            g[(i, j)] = g[(j, i)];
        }
    }
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi; `a` is destroyed.
///
/// Each sweep visits every off-diagonal pair once in round-robin order:
/// the `n − 1` rounds of a sweep each rotate `n / 2` disjoint pairs, so a
/// round is applied as one pass over the rows (`A ← Rᵀ A`) and one pass
/// within each row (`A ← A R`), both cache-friendly. After the first sweeps,
/// off-diagonal entries too small to change either diagonal entry in
/// floating point are zeroed without a rotation.
pub(crate) fn symmetric_eigenvalues(a: &mut Matrix) -> Vec<f64> {
    let n = a.rows();
    let trace: f64 = (0..n).map(|i| a[(i, i)].abs()).sum();
    let tol = REL_TOL * trace;
    // round-robin schedule over an even number of slots; slot `n` is a bye
    let slots = n + n % 2;
    let mut ring: Vec<usize> = (0..slots).collect();
    let mut rots: Vec<(usize, usize, f64, f64)> = Vec::with_capacity(slots / 2);
    let mut tmp_p = vec![0.0; n];
    for sweep in 0..MAX_SWEEPS {
        if off_diagonal_norm(a) <= tol {
            break;
        }
        for _round in 1..slots {
            rots.clear();
            for i in 0..slots / 2 {
                let (x, y) = (ring[i], ring[slots - 1 - i]);
                if x >= n || y >= n {
                    continue;
                }
                let (p, q) = (x.min(y), x.max(y));
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[(p, p)], a[(q, q)]);
                let g = 100.0 * apq.abs();
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                rots.push((p, q, c, t * c));
            }
            // rows: A ← Rᵀ A
            for &(p, q, c, s) in &rots {
                tmp_p.copy_from_slice(a.row(p));
                let data = a.as_mut_slice();
                let (head, tail) = data.split_at_mut(q * n);
                let rp = &mut head[p * n..p * n + n];
                let rq = &mut tail[..n];
                for k in 0..n {
                    let (x, y) = (tmp_p[k], rq[k]);
                    rp[k] = c * x - s * y;
                    rq[k] = s * x + c * y;
                }
            }
            // columns: A ← A R
            for k in 0..n {
                let row = a.row_mut(k);
                for &(p, q, c, s) in &rots {
                    let (x, y) = (row[p], row[q]);
                    row[p] = c * x - s * y;
                    row[q] = s * x + c * y;
                }
            }
            for &(p, q, _, _) in &rots {
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
            }
            ring[1..].rotate_right(1);
        }
    }
    (0..n).map(|i| a[(i, i)]).collect()
}
