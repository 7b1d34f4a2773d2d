//! Dense symmetric eigenvalues: Householder tridiagonalization followed by
//! implicit-shift QL. Values only, no eigenvectors; O(n^3) with a plain
//! row-major matrix, which is all the grid oracle needs (n <= 4000).

/// Eigenvalues of a symmetric matrix (row-major, n x n), ascending.
pub(crate) fn symmetric_eigenvalues(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Vec::new();
    }
    let (mut diag, mut off) = tridiagonalize(&mut a, n);
    ql_implicit(&mut diag, &mut off);
    diag.sort_by(|x, y| x.partial_cmp(y).unwrap());
    diag
}

/// Reduces the symmetric matrix to tridiagonal form by Householder
/// reflections, returning (diagonal, subdiagonal); `off[i]` couples rows
/// i and i+1.
fn tridiagonalize(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut off = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut u = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let x0 = a[(k + 1) * n + k];
        let mut tail2 = 0.0;
        for i in k + 2..n {
            tail2 += a[i * n + k] * a[i * n + k];
        }
        if tail2 == 0.0 {
            off[k] = x0;
            continue;
        }
        let norm = (x0 * x0 + tail2).sqrt();
        // Sign choice avoids cancellation in the pivot of v.
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        for i in k + 1..n {
            v[i] = a[i * n + k];
        }
        v[k + 1] -= alpha;
        let vnorm2: f64 = (k + 1..n).map(|i| v[i] * v[i]).sum();
        let beta = 2.0 / vnorm2;
        // p = beta * B v over the trailing block B = a[k+1.., k+1..].
        for i in k + 1..n {
            let row = &a[i * n..i * n + n];
            let mut s = 0.0;
            for j in k + 1..n {
                s += row[j] * v[j];
            }
            u[i] = beta * s;
        }
        let vdotp: f64 = (k + 1..n).map(|i| v[i] * u[i]).sum();
        let kappa = 0.5 * beta * vdotp;
        for i in k + 1..n {
            u[i] -= kappa * v[i];
        }
        // B := B - v u^T - u v^T
        for i in k + 1..n {
            for j in k + 1..=i {
                let upd = v[i] * u[j] + u[i] * v[j];
                a[i * n + j] -= upd;
                a[j * n + i] = a[i * n + j];
            }
        }
        off[k] = alpha;
    }
    if n >= 2 {
        off[n - 2] = a[(n - 1) * n + (n - 2)];
    }
    let diag = (0..n).map(|i| a[i * n + i]).collect();
    (diag, off)
}

/// Implicit-shift QL on the tridiagonal (diag, off); off[n-1] is scratch.
fn ql_implicit(diag: &mut [f64], off: &mut [f64]) {
    let n = diag.len();
    off[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 50, "QL failed to converge");
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(if g == 0.0 { 1.0 } else { g }));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_by_two() {
        let a = vec![0.5, 0.5, 0.5, 2.5];
        let ev = symmetric_eigenvalues(a, 2);
        let root = 5.0f64.sqrt();
        assert_relative_eq!(ev[0], (3.0 - root) / 2.0, max_relative = 1e-14);
        assert_relative_eq!(ev[1], (3.0 + root) / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn tridiagonal_toeplitz() {
        // Eigenvalues 2 - sqrt(2), 2, 2 + sqrt(2).
        let a = vec![2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0];
        let ev = symmetric_eigenvalues(a, 3);
        let root = 2.0f64.sqrt();
        assert_relative_eq!(ev[0], 2.0 - root, max_relative = 1e-13);
        assert_relative_eq!(ev[1], 2.0, max_relative = 1e-13);
        assert_relative_eq!(ev[2], 2.0 + root, max_relative = 1e-13);
    }

    #[test]
    fn diagonal_passthrough() {
        let mut a = vec![0.0; 16];
        for (i, val) in [4.0, -1.0, 2.5, 0.25].iter().enumerate() {
            a[i * 4 + i] = *val;
        }
        let ev = symmetric_eigenvalues(a, 4);
        assert_eq!(ev, vec![-1.0, 0.25, 2.5, 4.0]);
    }

    #[test]
    fn trace_and_frobenius_invariants() {
        // Deterministic pseudo-random symmetric matrix.
        let n = 40;
        let mut state = 12345u64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let x = next();
                a[i * n + j] = x;
                a[j * n + i] = x;
            }
        }
        let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
        let frob2: f64 = a.iter().map(|x| x * x).sum();
        let ev = symmetric_eigenvalues(a, n);
        let ev_sum: f64 = ev.iter().sum();
        let ev_sq: f64 = ev.iter().map(|x| x * x).sum();
        assert_relative_eq!(ev_sum, trace, max_relative = 1e-10, epsilon = 1e-10);
        assert_relative_eq!(ev_sq, frob2, max_relative = 1e-10);
    }

    #[test]
    fn single_element() {
        assert_eq!(symmetric_eigenvalues(vec![7.5], 1), vec![7.5]);
    }
}
