//! Small shared numerics: Gram-matrix PCA and modified Gram-Schmidt.

use nalgebra::{DMatrix, SymmetricEigen};

/// PCA over deviation vectors via the N x N Gram matrix. Returns orthonormal
/// modes (unit vectors in the data space) and their variances, sorted by
/// decreasing variance, keeping the smallest prefix whose cumulative variance
/// reaches `retain` of the total.
pub(crate) fn pca_retained(deviations: &[Vec<f64>], retain: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = deviations.len();
    if n < 2 {
        return (Vec::new(), Vec::new());
    }
    let dim = deviations[0].len();
    let denom = (n - 1) as f64;
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let d: f64 = deviations[i]
                .iter()
                .zip(&deviations[j])
                .map(|(a, b)| a * b)
                .sum();
            gram[(i, j)] = d / denom;
            gram[(j, i)] = d / denom;
        }
    }
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let total: f64 = eig.eigenvalues.iter().filter(|&&v| v > 0.0).sum();
    if total < 1e-18 {
        return (Vec::new(), Vec::new());
    }

    let mut modes = Vec::new();
    let mut variances = Vec::new();
    let mut cum = 0.0;
    for &idx in &order {
        let lambda = eig.eigenvalues[idx];
        if lambda <= 1e-12 * eig.eigenvalues[order[0]] || lambda <= 0.0 {
            break;
        }
        let coeffs = eig.eigenvectors.column(idx);
        let mut mode = vec![0.0f64; dim];
        for (i, dev) in deviations.iter().enumerate() {
            let c = coeffs[i];
            for (m, &v) in mode.iter_mut().zip(dev) {
                *m += c * v;
            }
        }
        let norm: f64 = mode.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            break;
        }
        for v in &mut mode {
            *v /= norm;
        }
        modes.push(mode);
        variances.push(lambda);
        cum += lambda;
        if cum >= retain * total {
            break;
        }
    }
    (modes, variances)
}

/// Modified Gram-Schmidt of `vecs` against `fixed` (assumed orthonormal) and
/// each other. Returns the surviving orthonormal vectors and their original
/// indices; vectors whose residual norm falls below `drop_tol` are dropped.
pub(crate) fn orthonormalize_against(
    fixed: &[&[f64]],
    vecs: &[Vec<f64>],
    drop_tol: f64,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    for (i, v) in vecs.iter().enumerate() {
        let mut w = v.clone();
        for f in fixed {
            let d: f64 = w.iter().zip(*f).map(|(a, b)| a * b).sum();
            for (wv, fv) in w.iter_mut().zip(*f) {
                *wv -= d * fv;
            }
        }
        for f in &out {
            let d: f64 = w.iter().zip(f).map(|(a, b)| a * b).sum();
            for (wv, fv) in w.iter_mut().zip(f) {
                *wv -= d * fv;
            }
        }
        let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm >= drop_tol {
            for x in &mut w {
                *x /= norm;
            }
            out.push(w);
            kept.push(i);
        }
    }
    (out, kept)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pca_recovers_single_direction() {
        let dir = [3.0f64, 4.0, 0.0];
        let norm = 5.0;
        let devs: Vec<Vec<f64>> = [-2.0, -1.0, 1.0, 2.0]
            .iter()
            .map(|&t| dir.iter().map(|&d| t * d).collect())
            .collect();
        let (modes, vars) = pca_retained(&devs, 0.95);
        assert_eq!(modes.len(), 1);
        let cos: f64 = modes[0]
            .iter()
            .zip(&dir)
            .map(|(a, b)| a * b / norm)
            .sum();
        assert!(cos.abs() > 0.999);
        // Variance of t * 25 over {-2,-1,1,2} with N-1 denominator: 25*10/3.
        assert!((vars[0] - 250.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn pca_zero_deviation_gives_no_modes() {
        let devs = vec![vec![0.0; 6]; 4];
        let (modes, vars) = pca_retained(&devs, 0.95);
        assert!(modes.is_empty());
        assert!(vars.is_empty());
    }

    #[test]
    fn pca_reconstruction_residual_equals_discarded_variance() {
        // Deterministic pseudo-random deviations, centered.
        let n = 6;
        let dim = 10;
        let mut devs: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..dim)
                    .map(|j| (((i * 31 + j * 17 + 5) % 97) as f64 / 97.0) - 0.5)
                    .collect()
            })
            .collect();
        let mean: Vec<f64> = (0..dim)
            .map(|j| devs.iter().map(|d| d[j]).sum::<f64>() / n as f64)
            .collect();
        for d in &mut devs {
            for (v, m) in d.iter_mut().zip(&mean) {
                *v -= m;
            }
        }
        let retain = 0.7;
        let (modes, vars) = pca_retained(&devs, retain);
        let (all_modes, all_vars) = pca_retained(&devs, 1.0);
        assert!(modes.len() < all_modes.len());
        let discarded: f64 = all_vars.iter().skip(vars.len()).sum();
        let mut residual_total = 0.0;
        for d in &devs {
            let mut r = d.clone();
            for m in &modes {
                let c = dot(m, d);
                for (rv, mv) in r.iter_mut().zip(m) {
                    *rv -= c * mv;
                }
            }
            residual_total += dot(&r, &r);
        }
        // Total residual energy = discarded eigenvalue mass * (N - 1).
        let want = discarded * (n - 1) as f64;
        assert!(
            (residual_total - want).abs() < 1e-9 * want.max(1.0),
            "residual {residual_total} vs discarded {want}"
        );
    }

    #[test]
    fn orthonormalize_drops_dependent() {
        let fixed_vec = vec![1.0, 0.0, 0.0];
        let fixed: Vec<&[f64]> = vec![&fixed_vec];
        let vecs = vec![
            vec![2.0, 0.0, 0.0],     // inside the fixed span
            vec![1.0, 1.0, 0.0],     // residual (0,1,0)
            vec![0.0, 0.5, 0.5],     // residual (0,0,..)
        ];
        let (out, kept) = orthonormalize_against(&fixed, &vecs, 1e-8);
        assert_eq!(kept, vec![1, 2]);
        assert!((dot(&out[0], &out[1])).abs() < 1e-12);
        for v in &out {
            assert!((dot(v, v) - 1.0).abs() < 1e-12);
            assert!(dot(v, &fixed_vec).abs() < 1e-12);
        }
    }
}
