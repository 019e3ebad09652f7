//! Minimum-norm least squares via one-sided Jacobi SVD.
//!
//! Regressor matrices here are tall and narrow (thousands of rows, rarely
//! more than a few dozen columns) and frequently contain exactly duplicate
//! or collinear columns. One-sided Jacobi orthogonalization handles exact
//! rank deficiency cleanly: a duplicated column rotates to an exactly zero
//! column, whose singular value is truncated by the solve.

/// Thin SVD A = U S V^T computed by one-sided Jacobi rotations. Columns of
/// `scaled_u` hold u_i * s_i, so no division by small values ever happens
/// during the factorization itself.
#[derive(Debug, Clone)]
pub struct JacobiSvd {
    rows: usize,
    cols: usize,
    scaled_u: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    singular_values: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl JacobiSvd {
    /// Factorizes the matrix given by its columns (all of equal length).
    pub fn new(mut columns: Vec<Vec<f64>>) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        debug_assert!(columns.iter().all(|c| c.len() == rows));
        let mut v: Vec<Vec<f64>> = (0..cols)
            .map(|i| {
                let mut e = vec![0.0; cols];
                e[i] = 1.0;
                e
            })
            .collect();
        // sweep until every column pair is numerically orthogonal
        let tol = 1e-14;
        for _ in 0..60 {
            let mut rotated = false;
            for i in 0..cols {
                for j in (i + 1)..cols {
                    let alpha = dot(&columns[i], &columns[i]);
                    let beta = dot(&columns[j], &columns[j]);
                    let gamma = dot(&columns[i], &columns[j]);
                    if !(alpha.is_finite() && beta.is_finite() && gamma.is_finite()) {
                        continue; // overflowed pair; the caller rejects the factorization
                    }
                    if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = if zeta == 0.0 {
                        1.0
                    } else {
                        zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    let (ci, cj) = two_mut(&mut columns, i, j);
                    rotate(ci, cj, c, s);
                    let (vi, vj) = two_mut(&mut v, i, j);
                    rotate(vi, vj, c, s);
                }
            }
            if !rotated {
                break;
            }
        }
        let mut singular_values: Vec<f64> = columns.iter().map(|c| dot(c, c).sqrt()).collect();
        // order singular values descending, carrying columns along
        let mut order: Vec<usize> = (0..cols).collect();
        order.sort_by(|&a, &b| singular_values[b].total_cmp(&singular_values[a]));
        let scaled_u: Vec<Vec<f64>> = order.iter().map(|&i| columns[i].clone()).collect();
        let v: Vec<Vec<f64>> = order.iter().map(|&i| v[i].clone()).collect();
        singular_values = order.iter().map(|&i| singular_values[i]).collect();
        Self {
            rows,
            cols,
            scaled_u,
            v,
            singular_values,
        }
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// False when column norms overflowed during the factorization.
    pub fn is_finite(&self) -> bool {
        self.singular_values.iter().all(|s| s.is_finite())
    }

    /// Default truncation threshold: machine epsilon scaled by the largest
    /// singular value and the larger matrix dimension.
    pub fn default_eps(&self) -> f64 {
        let smax = self.singular_values.first().copied().unwrap_or(0.0);
        f64::EPSILON * smax * self.rows.max(self.cols) as f64
    }

    /// Number of singular values above `eps`.
    pub fn rank(&self, eps: f64) -> usize {
        self.singular_values.iter().filter(|&&s| s > eps).count()
    }

    /// Minimum-norm least-squares solution of A x = b, truncating singular
    /// values at `eps`: x = V S^+ U^T b.
    pub fn solve_min_norm(&self, b: &[f64], eps: f64) -> Vec<f64> {
        debug_assert_eq!(b.len(), self.rows);
        let mut x = vec![0.0; self.cols];
        for i in 0..self.cols {
            let s = self.singular_values[i];
            if s <= eps {
                continue;
            }
            // u_i^T b = (scaled_u_i^T b) / s; coefficient = u_i^T b / s
            let w = dot(&self.scaled_u[i], b) / (s * s);
            for (xk, vk) in x.iter_mut().zip(&self.v[i]) {
                *xk += w * vk;
            }
        }
        x
    }

    /// Diagonal of (A^T A)^+ = V S^-2 V^T, the unscaled coefficient
    /// covariance of a least-squares fit.
    pub fn normal_inverse_diagonal(&self, eps: f64) -> Vec<f64> {
        let mut d = vec![0.0; self.cols];
        for i in 0..self.cols {
            let s = self.singular_values[i];
            if s <= eps {
                continue;
            }
            for (dk, vk) in d.iter_mut().zip(&self.v[i]) {
                *dk += vk * vk / (s * s);
            }
        }
        d
    }
}

fn rotate(a: &mut [f64], b: &mut [f64], c: f64, s: f64) {
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let t = c * *x - s * *y;
        *y = s * *x + c * *y;
        *x = t;
    }
}

fn two_mut<T>(v: &mut [T], i: usize, j: usize) -> (&mut T, &mut T) {
    debug_assert!(i < j);
    let (a, b) = v.split_at_mut(j);
    (&mut a[i], &mut b[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matvec(cols: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        let rows = cols[0].len();
        let mut out = vec![0.0; rows];
        for (c, xi) in cols.iter().zip(x) {
            for (o, v) in out.iter_mut().zip(c) {
                *o += v * xi;
            }
        }
        out
    }

    #[test]
    fn exact_duplicate_columns_get_split_minimum_norm() {
        let col: Vec<f64> = (0..50).map(|k| (k as f64 * 0.37).sin() + 0.4).collect();
        let b: Vec<f64> = (0..50).map(|k| (k as f64 * 0.21).cos()).collect();
        let svd1 = JacobiSvd::new(vec![col.clone()]);
        let svd2 = JacobiSvd::new(vec![col.clone(), col.clone()]);
        let eps = svd2.default_eps();
        assert_eq!(svd2.rank(eps), 1);
        let x1 = svd1.solve_min_norm(&b, svd1.default_eps());
        let x2 = svd2.solve_min_norm(&b, eps);
        assert!((x2[0] - x2[1]).abs() < 1e-12);
        assert!((x2[0] + x2[1] - x1[0]).abs() < 1e-12, "{x2:?} vs {x1:?}");
        // frobenius consistency: sum of squared singular values
        let fro2: f64 = col.iter().map(|v| 2.0 * v * v).sum();
        let s2: f64 = svd2.singular_values().iter().map(|s| s * s).sum();
        assert!((fro2 - s2).abs() < 1e-9 * fro2);
    }

    #[test]
    fn solves_known_overdetermined_system() {
        // b is exactly in the column span
        let c1: Vec<f64> = (0..30).map(|k| 1.0 + (k as f64) * 0.1).collect();
        let c2: Vec<f64> = (0..30).map(|k| ((k * k) as f64 * 0.01).sin()).collect();
        let truth = [2.5, -1.25];
        let b = matvec(&[c1.clone(), c2.clone()], &truth);
        let svd = JacobiSvd::new(vec![c1, c2]);
        let x = svd.solve_min_norm(&b, svd.default_eps());
        assert!((x[0] - truth[0]).abs() < 1e-10);
        assert!((x[1] - truth[1]).abs() < 1e-10);
    }

    #[test]
    fn matches_reference_svd_on_random_well_conditioned_problems() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..25 {
            let rows = rng.random_range(10..120);
            let cols = rng.random_range(1..8.min(rows));
            let columns: Vec<Vec<f64>> = (0..cols)
                .map(|_| (0..rows).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let b: Vec<f64> = (0..rows).map(|_| rng.random_range(-2.0..2.0)).collect();
            let svd = JacobiSvd::new(columns.clone());
            let x = svd.solve_min_norm(&b, svd.default_eps());

            let phi = nalgebra::DMatrix::from_fn(rows, cols, |r, c| columns[c][r]);
            let bb = nalgebra::DVector::from_vec(b.clone());
            let reference = phi
                .clone()
                .svd(true, true)
                .solve(&bb, 1e-12)
                .expect("reference solve");
            for (mine, theirs) in x.iter().zip(reference.iter()) {
                assert!(
                    (mine - theirs).abs() < 1e-8 * theirs.abs().max(1.0),
                    "{mine} vs {theirs}"
                );
            }
            // singular values against the reference, descending
            let their_s = phi.svd(false, false).singular_values;
            for (a, b) in svd.singular_values().iter().zip(their_s.iter()) {
                assert!((a - b).abs() < 1e-9 * b.max(1.0));
            }
        }
    }

    #[test]
    fn residual_is_orthogonal_to_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let rows = 200;
        let columns: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..rows).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let b: Vec<f64> = (0..rows).map(|_| rng.random_range(-1.0..1.0)).collect();
        let svd = JacobiSvd::new(columns.clone());
        let x = svd.solve_min_norm(&b, svd.default_eps());
        let ax = matvec(&columns, &x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        for c in &columns {
            assert!(dot(c, &r).abs() < 1e-10 * rows as f64);
        }
    }
}
