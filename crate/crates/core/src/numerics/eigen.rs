use super::{norm, CMatrix, C64};

/// Eigenvalues of a Hermitian matrix, ascending.
///
/// The matrix is embedded as the real symmetric `[[Re, −Im], [Im, Re]]`,
/// whose spectrum is that of the input with every eigenvalue doubled, and
/// diagonalized with cyclic Jacobi sweeps.
pub fn hermitian_eigenvalues(h: &CMatrix) -> Vec<f64> {
    assert!(h.is_square(), "eigenvalues need a square matrix");
    let n = h.rows();
    let dim = 2 * n;
    let mut a = vec![0.0f64; dim * dim];
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            a[i * dim + j] = z.re;
            a[(i + n) * dim + (j + n)] = z.re;
            a[i * dim + (j + n)] = -z.im;
            a[(i + n) * dim + j] = z.im;
        }
    }
    jacobi_symmetric(&mut a, dim);
    let mut ev: Vec<f64> = (0..dim).map(|i| a[i * dim + i]).collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev.into_iter().step_by(2).collect()
}

fn jacobi_symmetric(a: &mut [f64], n: usize) {
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        let diag: f64 = (0..n).map(|i| a[i * n + i] * a[i * n + i]).sum();
        if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) {
            return;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
}

/// Spectral radius estimate by power iteration, taken as the geometric-mean
/// growth rate of `‖Xᵏv‖` after a burn-in so that complex or sign-alternating
/// dominant pairs do not stall the estimate.
pub fn spectral_radius(x: &CMatrix) -> f64 {
    assert!(x.is_square());
    let n = x.rows();
    const BURN_IN: usize = 30;
    const ITERS: usize = 300;
    let mut v: Vec<C64> = (0..n)
        .map(|i| C64::new(1.0 + 0.1 * i as f64, 0.05 * (i as f64).sin()))
        .collect();
    let mut log_growth = 0.0;
    for it in 0..ITERS {
        let w = x.mul_vec(&v);
        let nw = norm(&w);
        let nv = norm(&v);
        if nw == 0.0 || !nw.is_finite() {
            return if nw == 0.0 { 0.0 } else { f64::INFINITY };
        }
        if it >= BURN_IN {
            log_growth += (nw / nv).ln();
        }
        v = w.into_iter().map(|z| z / nw).collect();
    }
    (log_growth / (ITERS - BURN_IN) as f64).exp()
}
