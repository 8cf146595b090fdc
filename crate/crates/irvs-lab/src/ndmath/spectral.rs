use super::matrix::{norm2, Matrix};

const SIGMA_FLOOR: f64 = 1e-12;

/// Power-iteration estimate of the top singular value.
///
/// Returns the weight scaled by 1/sigma, the updated left iteration
/// vector (unit norm), and the sigma estimate. A zero matrix floors
/// sigma at 1e-12 and returns the zero matrix unchanged.
pub fn spectral_normalize(weight: &Matrix, u: &[f64], iters: usize) -> (Matrix, Vec<f64>, f64) {
    assert!(iters >= 1, "spectral_normalize requires iters >= 1");
    assert_eq!(u.len(), weight.rows());
    let mut u = u.to_vec();
    let un = norm2(&u);
    if un > 0.0 {
        for x in &mut u {
            *x /= un;
        }
    } else {
        // degenerate input vector, restart from a fixed direction
        u.fill(0.0);
        u[0] = 1.0;
    }
    let mut v = vec![0.0; weight.cols()];
    let mut wu = vec![0.0; weight.rows()];
    let mut sigma = SIGMA_FLOOR;
    for _ in 0..iters {
        weight.matvec_t_into(&u, &mut v);
        let vn = norm2(&v);
        if vn <= SIGMA_FLOOR {
            // (near-)zero matrix: keep u as is, sigma floored
            let mut scaled = weight.clone();
            scaled.scale(1.0 / SIGMA_FLOOR);
            return (scaled, u, SIGMA_FLOOR);
        }
        for x in &mut v {
            *x /= vn;
        }
        weight.matvec_into(&v, &mut wu);
        let wn = norm2(&wu);
        if wn <= SIGMA_FLOOR {
            let mut scaled = weight.clone();
            scaled.scale(1.0 / SIGMA_FLOOR);
            return (scaled, u, SIGMA_FLOOR);
        }
        for (ui, &w) in u.iter_mut().zip(&wu) {
            *ui = w / wn;
        }
        sigma = wn.max(SIGMA_FLOOR);
    }
    let mut scaled = weight.clone();
    scaled.scale(1.0 / sigma);
    (scaled, u, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndmath::Matrix;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_unchanged() {
        let m = Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let (scaled, u, sigma) = spectral_normalize(&m, &[1.0, 0.3], 20);
        assert_abs_diff_eq!(sigma, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(scaled.get(0, 0), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(norm2(&u), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn diagonal_scaling() {
        // oracle: exact SVD of a diagonal matrix is its diagonal
        let m = Matrix::from_vec(2, 2, vec![2.0, 0.0, 0.0, 1.0]).unwrap();
        let (scaled, _, sigma) = spectral_normalize(&m, &[0.9, 0.5], 100);
        assert_abs_diff_eq!(sigma, 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(scaled.get(0, 0), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(scaled.get(1, 1), 0.5, epsilon = 1e-9);
    }

    #[test]
    fn zero_matrix_floored() {
        let m = Matrix::zeros(3, 3);
        let (scaled, _, sigma) = spectral_normalize(&m, &[1.0, 0.0, 0.0], 5);
        assert_eq!(sigma, 1e-12);
        assert!(scaled.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn random_matrix_matches_svd_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let m = Matrix::from_fn(8, 8, |_, _| rng.gen_range(-1.0..1.0));
        let (_, _, sigma) = spectral_normalize(&m, &vec![1.0; 8], 200);
        let oracle = top_singular_value_oracle(&m);
        assert!(
            (sigma - oracle).abs() < 1e-3,
            "sigma {sigma} vs oracle {oracle}"
        );
    }

    /// Independent route: power iteration on the Gram matrix W^T W with
    /// explicit matrix products and eigenvalue extraction.
    fn top_singular_value_oracle(m: &Matrix) -> f64 {
        let n = m.cols();
        let mut gram = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for r in 0..m.rows() {
                    s += m.get(r, i) * m.get(r, j);
                }
                gram[i][j] = s;
            }
        }
        let mut x = vec![1.0; n];
        for _ in 0..10_000 {
            let mut y = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    y[i] += gram[i][j] * x[j];
                }
            }
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            for v in &mut y {
                *v /= norm;
            }
            x = y;
        }
        let mut lambda = 0.0;
        for i in 0..n {
            let mut yi = 0.0;
            for j in 0..n {
                yi += gram[i][j] * x[j];
            }
            lambda += x[i] * yi;
        }
        lambda.sqrt()
    }
}
