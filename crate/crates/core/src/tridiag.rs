//! Symmetric tridiagonal eigensolver: Sturm bisection for eigenvalues,
//! inverse iteration for eigenvectors.
//!
//! Used both by the Golub–Welsch quadrature construction (small Jacobi
//! matrices) and by the one-dimensional divergence-form eigensolver
//! (matrices with a few thousand rows, lowest K modes).

/// Pivot guard for the LDLᵀ Sturm sequence; keeps the recurrence finite
/// when a pivot lands on zero.
const STURM_PIVOT_GUARD: f64 = 1e-300;

#[derive(Debug, Clone)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    /// Sub/super-diagonal, length `diag.len() - 1`.
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len(), "off-diagonal length mismatch");
        SymTridiag { diag, off }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues strictly less than `lambda` (negative LDLᵀ pivots).
    pub fn sturm_count(&self, lambda: f64) -> usize {
        let n = self.n();
        let mut count = 0usize;
        let mut q = self.diag[0] - lambda;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let q_safe = if q.abs() < STURM_PIVOT_GUARD {
                if q >= 0.0 {
                    STURM_PIVOT_GUARD
                } else {
                    -STURM_PIVOT_GUARD
                }
            } else {
                q
            };
            q = (self.diag[i] - lambda) - self.off[i - 1] * self.off[i - 1] / q_safe;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.n();
        let mut lo = f64::MAX;
        let mut hi = f64::MIN;
        for i in 0..n {
            let e_left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let e_right = if i < n - 1 { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - e_left - e_right);
            hi = hi.max(self.diag[i] + e_left + e_right);
        }
        (lo - 1.0, hi + 1.0)
    }

    /// The `k` smallest eigenvalues by bisection on the Sturm count.
    pub fn lowest_eigenvalues(&self, k: usize) -> Vec<f64> {
        let k = k.min(self.n());
        let (lo0, hi0) = self.gershgorin();
        let mut out = Vec::with_capacity(k);
        for j in 0..k {
            let (mut a, mut b) = (lo0, hi0);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if b - a < 2.0 * f64::EPSILON * mid.abs().max(1.0) {
                    break;
                }
                if self.sturm_count(mid) <= j {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            out.push(0.5 * (a + b));
        }
        out
    }

    /// Eigenvector by inverse iteration at the (converged) eigenvalue
    /// estimate, with Gram–Schmidt against `orth` for clustered modes.
    /// Returns a unit-norm vector.
    pub fn eigenvector(&self, lambda: f64, orth: &[&[f64]]) -> Vec<f64> {
        let n = self.n();
        // Deterministic seed vector with no special symmetry.
        let mut v: Vec<f64> = (0..n)
            .map(|i| {
                let t = (i as f64 + 1.0) * 0.754_877_666_246_692_8; // frac of golden-ish
                (t - t.floor()) - 0.5 + 1e-3
            })
            .collect();
        normalize(&mut v);
        for _ in 0..6 {
            let mut w = solve_shifted(&self.diag, &self.off, lambda, &v);
            for o in orth {
                let dot: f64 = w.iter().zip(o.iter()).map(|(a, b)| a * b).sum();
                for (wi, oi) in w.iter_mut().zip(o.iter()) {
                    *wi -= dot * oi;
                }
            }
            normalize(&mut w);
            let delta: f64 = w
                .iter()
                .zip(v.iter())
                .map(|(a, b)| (a.abs() - b.abs()).abs())
                .fold(0.0, f64::max);
            v = w;
            if delta < 1e-14 {
                break;
            }
        }
        v
    }

    /// Lowest `k` eigenpairs. Vectors are unit-norm in the Euclidean inner
    /// product; a final Gram–Schmidt pass enforces mutual orthogonality to
    /// machine precision (inverse iteration alone leaves O(shift/gap)
    /// cross-talk).
    pub fn lowest_eigenpairs(&self, k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
        let evals = self.lowest_eigenvalues(k);
        let scale = evals.last().map(|v| v.abs()).unwrap_or(1.0).max(1.0);
        let mut vecs: Vec<Vec<f64>> = Vec::with_capacity(evals.len());
        for (j, &lam) in evals.iter().enumerate() {
            // orthogonalize only against close-by eigenvectors
            let close: Vec<&[f64]> = (0..j)
                .filter(|&i| (evals[i] - lam).abs() < 1e-8 * scale)
                .map(|i| vecs[i].as_slice())
                .collect();
            // tiny shift off the exact eigenvalue keeps the solve bounded
            let shifted = lam + 1e-13 * scale;
            vecs.push(self.eigenvector(shifted, &close));
        }
        for j in 0..vecs.len() {
            for i in 0..j {
                let dot: f64 = vecs[j].iter().zip(&vecs[i]).map(|(a, b)| a * b).sum();
                let (head, tail) = vecs.split_at_mut(j);
                for (x, y) in tail[0].iter_mut().zip(&head[i]) {
                    *x -= dot * y;
                }
            }
            normalize(&mut vecs[j]);
        }
        (evals, vecs)
    }
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

/// Solve (T - shift·I) x = rhs for tridiagonal T by Gaussian elimination
/// with partial pivoting (fill-in limited to a second superdiagonal).
pub fn solve_shifted(diag: &[f64], off: &[f64], shift: f64, rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let safe = |v: f64| {
        if v.abs() < STURM_PIVOT_GUARD {
            STURM_PIVOT_GUARD.copysign(v)
        } else {
            v
        }
    };
    if n == 1 {
        return vec![rhs[0] / safe(diag[0] - shift)];
    }
    let mut dl = vec![0.0; n]; // subdiagonal entering row i
    let mut d: Vec<f64> = diag.iter().map(|v| v - shift).collect();
    let mut du = vec![0.0; n]; // first superdiagonal
    let mut du2 = vec![0.0; n]; // second superdiagonal (pivot fill-in)
    let mut x = rhs.to_vec();
    for i in 0..n - 1 {
        dl[i + 1] = off[i];
        du[i] = off[i];
    }
    for i in 0..n - 1 {
        if d[i].abs() >= dl[i + 1].abs() {
            let m = dl[i + 1] / safe(d[i]);
            d[i + 1] -= m * du[i];
            du[i + 1] -= m * du2[i];
            x[i + 1] -= m * x[i];
        } else {
            // swap rows i and i+1, then eliminate
            let m = d[i] / dl[i + 1];
            let (ri_d, ri_du) = (d[i + 1], du[i + 1]);
            d[i] = dl[i + 1];
            let old_du_i = du[i];
            du[i] = ri_d;
            du2[i] = ri_du;
            d[i + 1] = old_du_i - m * ri_d;
            du[i + 1] = -m * ri_du;
            x.swap(i, i + 1);
            x[i + 1] -= m * x[i];
        }
    }
    let mut out = vec![0.0; n];
    out[n - 1] = x[n - 1] / safe(d[n - 1]);
    if n >= 2 {
        out[n - 2] = (x[n - 2] - du[n - 2] * out[n - 1]) / safe(d[n - 2]);
    }
    for i in (0..n.saturating_sub(2)).rev() {
        out[i] = (x[i] - du[i] * out[i + 1] - du2[i] * out[i + 2]) / safe(d[i]);
    }
    out
}
