//! Banded Cholesky factorization and a Jacobi eigensolver for small dense
//! symmetric matrices. Support machinery for the 2D staircase eigensolver.

/// Symmetric positive-definite banded matrix in lower-band storage:
/// `data[i * (bw + 1) + k]` holds A[i, i - bw + k] for k = 0..=bw.
pub struct BandedSpd {
    n: usize,
    bw: usize,
    data: Vec<f64>,
    factored: bool,
}

impl BandedSpd {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandedSpd { n, bw, data: vec![0.0; n * (bw + 1)], factored: false }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (self.bw - (i - j))
    }

    /// Set A[i, j] (and symmetrically A[j, i]); |i - j| must be within band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let at = self.idx(hi, lo);
        self.data[at] = v;
    }

    #[allow(dead_code)] // exercised by tests
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        if hi - lo > self.bw {
            return 0.0;
        }
        self.data[self.idx(hi, lo)]
    }

    /// y = A x for the (unfactored) matrix.
    #[allow(dead_code)] // exercised by tests
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert!(!self.factored, "matrix already overwritten by its factor");
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.bw);
            let mut acc = 0.0;
            for j in j0..=i {
                acc += self.get(i, j) * x[j];
            }
            for j in i + 1..(i + self.bw + 1).min(self.n) {
                acc += self.get(j, i) * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// In-place banded Cholesky A = L Lᵀ. Returns false if a pivot fails.
    pub fn cholesky(&mut self) -> bool {
        assert!(!self.factored);
        for j in 0..self.n {
            let j0 = j.saturating_sub(self.bw);
            let mut d = self.data[self.idx(j, j)];
            for k in j0..j {
                let l = self.data[self.idx(j, k)];
                d -= l * l;
            }
            if d <= 0.0 {
                return false;
            }
            let d = d.sqrt();
            let jj = self.idx(j, j);
            self.data[jj] = d;
            let imax = (j + self.bw + 1).min(self.n);
            for i in j + 1..imax {
                let k0 = i.saturating_sub(self.bw).max(j0);
                let mut v = self.data[self.idx(i, j)];
                for k in k0..j {
                    v -= self.data[self.idx(i, k)] * self.data[self.idx(j, k)];
                }
                let ij = self.idx(i, j);
                self.data[ij] = v / d;
            }
        }
        self.factored = true;
        true
    }

    /// Solve A x = b given the Cholesky factor.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert!(self.factored, "call cholesky() first");
        let mut y = b.to_vec();
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.bw);
            let mut v = y[i];
            for j in j0..i {
                v -= self.data[self.idx(i, j)] * y[j];
            }
            y[i] = v / self.data[self.idx(i, i)];
        }
        for i in (0..self.n).rev() {
            let imax = (i + self.bw + 1).min(self.n);
            let mut v = y[i];
            for j in i + 1..imax {
                v -= self.data[self.idx(j, i)] * y[j];
            }
            y[i] = v / self.data[self.idx(i, i)];
        }
        y
    }
}

/// Eigen-decomposition of a small dense symmetric matrix by cyclic Jacobi
/// rotations. Returns (eigenvalues ascending, eigenvectors as columns).
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                off += m[i][j] * m[i][j];
            }
        }
        if off.sqrt() < 1e-14 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i][i].partial_cmp(&m[j][j]).unwrap());
    let evals: Vec<f64> = order.iter().map(|&i| m[i][i]).collect();
    let evecs: Vec<Vec<f64>> = order
        .iter()
        .map(|&col| (0..n).map(|row| v[row][col]).collect())
        .collect();
    (evals, evecs)
}
