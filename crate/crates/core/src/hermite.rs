//! Probabilists' Hermite polynomials He_k.
//!
//! He_0 = 1, He_1 = x, He_{k+1} = x·He_k - k·He_{k-1}. These diagonalize the
//! Ornstein–Uhlenbeck operator (L He_k = k He_k) and the odd-index family
//! gives the analytic Dirichlet eigenbasis of the half-line.

/// He_k(x) by the three-term recurrence.
pub fn hermite_he(k: usize, x: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for j in 1..k {
                let next = x * cur - j as f64 * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// He_k'(x) = k · He_{k-1}(x).
pub fn hermite_he_prime(k: usize, x: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * hermite_he(k - 1, x)
    }
}

/// ‖He_k‖²_{L²(ℝ,γ)} = k!.
pub fn hermite_norm_sq(k: usize) -> f64 {
    libm::tgamma(k as f64 + 1.0)
}
