//! Tiny dense solvers for the low-dimensional systems the tests and scores
//! need; matrices here are at most a few dozen rows.

/// Cholesky factorization of a symmetric positive-definite matrix, in place
/// (lower triangle). Returns false when a pivot is not positive within
/// tolerance.
fn cholesky(a: &mut [f64], k: usize) -> bool {
    for i in 0..k {
        for j in 0..=i {
            let mut s = a[i * k + j];
            for l in 0..j {
                s -= a[i * k + l] * a[j * k + l];
            }
            if i == j {
                if s <= 1e-300 {
                    return false;
                }
                a[i * k + i] = s.sqrt();
            } else {
                a[i * k + j] = s / a[j * k + j];
            }
        }
    }
    true
}

/// Solves `a x = b` for symmetric positive-definite `a` (row-major k x k).
/// Falls back to two fixed jitter levels on numerically non-PD input;
/// returns `None` if even the jittered system fails.
pub(crate) fn solve_spd(a: &[f64], b: &[f64], k: usize) -> Option<Vec<f64>> {
    for jitter in [0.0, 1e-10, 1e-6] {
        let mut l = a.to_vec();
        for i in 0..k {
            l[i * k + i] += jitter;
        }
        if !cholesky(&mut l, k) {
            continue;
        }
        // Forward then backward substitution.
        let mut x = b.to_vec();
        for i in 0..k {
            for j in 0..i {
                x[i] -= l[i * k + j] * x[j];
            }
            x[i] /= l[i * k + i];
        }
        for i in (0..k).rev() {
            for j in (i + 1)..k {
                x[i] -= l[j * k + i] * x[j];
            }
            x[i] /= l[i * k + i];
        }
        return Some(x);
    }
    None
}
