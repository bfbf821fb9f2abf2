//! Eigendecomposition of real symmetric matrices by cyclic Jacobi rotation.
//!
//! H0 is real symmetric in the Fock basis, and its spectral factorization
//! H0 = Q Λ Qᵀ is what lets the integrator apply exp(−i·dt·H0/β) exactly
//! instead of fighting the O(β²N²) spectral radius with tiny explicit
//! steps. The decomposition is computed once per operator set; accuracy,
//! not speed, is what matters here.

/// Eigenvalues (ascending) and orthonormal eigenvectors of a real
/// symmetric matrix. `q` is row-major with eigenvectors as columns:
/// `q[i * n + k]` is component i of eigenvector k. `qt` caches the
/// transpose so both rotation directions stream rows contiguously.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub n: usize,
    pub values: Vec<f64>,
    pub q: Vec<f64>,
    pub qt: Vec<f64>,
}

/// Cyclic Jacobi with the standard stable rotation choice. Converges
/// quadratically once off-diagonal mass is small; 50 sweeps is far beyond
/// what any H0 needs.
pub fn symmetric_eigen(matrix: &[f64], n: usize) -> SymmetricEigen {
    assert_eq!(matrix.len(), n * n, "matrix must be n x n");
    let mut a = matrix.to_vec();
    let mut v = vec![0.0f64; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-15 * frob.max(f64::MIN_POSITIVE);

    for _sweep in 0..50 {
        let off: f64 = {
            let mut s = 0.0;
            for p in 0..n {
                for q in p + 1..n {
                    s += a[p * n + q] * a[p * n + q];
                }
            }
            (2.0 * s).sqrt()
        };
        if off <= tol {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for i in 0..n {
                    let aip = a[i * n + p];
                    let aiq = a[i * n + q];
                    a[i * n + p] = c * aip - s * aiq;
                    a[i * n + q] = s * aip + c * aiq;
                }
                for j in 0..n {
                    let apj = a[p * n + j];
                    let aqj = a[q * n + j];
                    a[p * n + j] = c * apj - s * aqj;
                    a[q * n + j] = s * apj + c * aqj;
                }
                for i in 0..n {
                    let vip = v[i * n + p];
                    let viq = v[i * n + q];
                    v[i * n + p] = c * vip - s * viq;
                    v[i * n + q] = s * vip + c * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].partial_cmp(&a[j * n + j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&k| a[k * n + k]).collect();
    let mut q = vec![0.0f64; n * n];
    for (new_k, &old_k) in order.iter().enumerate() {
        for i in 0..n {
            q[i * n + new_k] = v[i * n + old_k];
        }
    }
    let mut qt = vec![0.0f64; n * n];
    for i in 0..n {
        for k in 0..n {
            qt[k * n + i] = q[i * n + k];
        }
    }
    SymmetricEigen { n, values, q, qt }
}
