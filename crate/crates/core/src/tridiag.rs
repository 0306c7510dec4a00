//! Tridiagonal solves with a cached Thomas factorization.

/// LU factors of a fixed tridiagonal matrix, reusable for any right-hand side.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    lower: Vec<f64>,
    cprime: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl Tridiagonal {
    /// `lower[0]` and `upper[n-1]` are ignored.
    pub fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Self {
        let n = diag.len();
        assert!(lower.len() == n && upper.len() == n && n > 0);
        let mut cprime = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        let mut prev_c = 0.0;
        for i in 0..n {
            let l = if i == 0 { 0.0 } else { lower[i] };
            let pivot = diag[i] - l * prev_c;
            debug_assert!(pivot.abs() > 1e-300, "singular tridiagonal system");
            inv_pivot[i] = 1.0 / pivot;
            cprime[i] = if i + 1 < n { upper[i] / pivot } else { 0.0 };
            prev_c = cprime[i];
        }
        let mut lower = lower.to_vec();
        lower[0] = 0.0;
        Self { lower, cprime, inv_pivot }
    }

    /// Constant-coefficient matrix `tridiag(off, diag, off)` of size `n`.
    pub fn constant(n: usize, off: f64, diag: f64) -> Self {
        Self::new(&vec![off; n], &vec![diag; n], &vec![off; n])
    }

    pub fn len(&self) -> usize {
        self.cprime.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cprime.is_empty()
    }

    pub fn solve_in_place(&self, d: &mut [f64]) {
        let n = self.len();
        assert_eq!(d.len(), n);
        d[0] *= self.inv_pivot[0];
        for i in 1..n {
            d[i] = (d[i] - self.lower[i] * d[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            d[i] -= self.cprime[i] * d[i + 1];
        }
    }

    /// Solve for many right-hand sides at once. `rows[i]` holds the `i`-th
    /// equation for every system; all rows share one width.
    pub fn solve_batched(&self, rows: &mut [&mut [f64]]) {
        let n = self.len();
        assert_eq!(rows.len(), n);
        for v in rows[0].iter_mut() {
            *v *= self.inv_pivot[0];
        }
        for i in 1..n {
            let (before, after) = rows.split_at_mut(i);
            let prev = &before[i - 1];
            let cur = &mut after[0];
            let (l, p) = (self.lower[i], self.inv_pivot[i]);
            for (c, &q) in cur.iter_mut().zip(prev.iter()) {
                *c = (*c - l * q) * p;
            }
        }
        for i in (0..n - 1).rev() {
            let (before, after) = rows.split_at_mut(i + 1);
            let next = &after[0];
            let cur = &mut before[i];
            let c = self.cprime[i];
            for (x, &q) in cur.iter_mut().zip(next.iter()) {
                *x -= c * q;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matvec(l: &[f64], d: &[f64], u: &[f64], x: &[f64]) -> Vec<f64> {
        let n = d.len();
        (0..n)
            .map(|i| {
                let mut s = d[i] * x[i];
                if i > 0 {
                    s += l[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += u[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    #[test]
    fn solves_nonsymmetric_system() {
        let n = 17;
        let l: Vec<f64> = (0..n).map(|i| -0.3 - 0.01 * i as f64).collect();
        let d: Vec<f64> = (0..n).map(|i| 2.0 + 0.1 * i as f64).collect();
        let u: Vec<f64> = (0..n).map(|i| -0.7 + 0.02 * i as f64).collect();
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut b = matvec(&l, &d, &u, &x);
        let t = Tridiagonal::new(&l, &d, &u);
        t.solve_in_place(&mut b);
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).abs() < 1e-13);
        }
    }

    #[test]
    fn batched_matches_single() {
        let n = 9;
        let t = Tridiagonal::constant(n, -1.0, 3.0);
        let cols = 4;
        let mut data: Vec<Vec<f64>> = (0..n).map(|i| (0..cols).map(|c| (i * cols + c) as f64).collect()).collect();
        let mut singles: Vec<Vec<f64>> = (0..cols).map(|c| (0..n).map(|i| data[i][c]).collect()).collect();
        for s in singles.iter_mut() {
            t.solve_in_place(s);
        }
        let mut rows: Vec<&mut [f64]> = data.iter_mut().map(|r| r.as_mut_slice()).collect();
        t.solve_batched(&mut rows);
        for c in 0..cols {
            for i in 0..n {
                assert!((data[i][c] - singles[c][i]).abs() < 1e-14);
            }
        }
    }
}
