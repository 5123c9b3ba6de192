//! Dense symmetric factorizations for the interior point solver.

/// Block width of the right-looking Cholesky.
const BLOCK: usize = 64;

/// In-place Cholesky `A = L Lᵀ` of a row-major `n × n` symmetric matrix.
/// Only the lower triangle is read; on success it holds `L`. Returns the
/// index of the first non-positive pivot on failure.
pub fn cholesky_in_place(a: &mut [f64], n: usize) -> Result<(), usize> {
    assert_eq!(a.len(), n * n);
    let mut k0 = 0;
    while k0 < n {
        let k1 = (k0 + BLOCK).min(n);
        // diagonal block
        for j in k0..k1 {
            let mut d = a[j * n + j];
            for t in k0..j {
                d -= a[j * n + t] * a[j * n + t];
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(j);
            }
            let d = d.sqrt();
            a[j * n + j] = d;
            for i in (j + 1)..k1 {
                let mut s = a[i * n + j];
                for t in k0..j {
                    s -= a[i * n + t] * a[j * n + t];
                }
                a[i * n + j] = s / d;
            }
        }
        // panel below the diagonal block
        for i in k1..n {
            for j in k0..k1 {
                let mut s = a[i * n + j];
                for t in k0..j {
                    s -= a[i * n + t] * a[j * n + t];
                }
                a[i * n + j] = s / a[j * n + j];
            }
        }
        // trailing update A22 -= L21 L21ᵀ
        let m = n - k1;
        if m > 0 {
            let kb = k1 - k0;
            let ptr = a.as_mut_ptr();
            // SAFETY: L21 occupies columns k0..k1 of rows k1..n and A22 occupies
            // columns k1..n of the same rows, so the read and write regions are
            // disjoint; all offsets stay inside the n × n buffer.
            unsafe {
                let l21 = ptr.add(k1 * n + k0) as *const f64;
                let c = ptr.add(k1 * n + k1);
                matrixmultiply::dgemm(m, kb, m, -1.0, l21, n as isize, 1, l21, 1, n as isize, 1.0, c, n as isize, 1);
            }
        }
        k0 = k1;
    }
    Ok(())
}

/// Solves `L Lᵀ x = b` in place given the factor from [`cholesky_in_place`].
pub fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        let row = &l[i * n..i * n + i];
        for (t, v) in row.iter().enumerate() {
            s -= v * b[t];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for t in (i + 1)..n {
            s -= l[t * n + i] * b[t];
        }
        b[i] = s / l[i * n + i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn blocked_factor_solves_spd_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &n in &[1usize, 7, 64, 150] {
            let g: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut a = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    let mut s = if i == j { n as f64 } else { 0.0 };
                    for k in 0..n {
                        s += g[i * n + k] * g[j * n + k];
                    }
                    a[i * n + j] = s;
                }
            }
            let x: Vec<f64> = (0..n).map(|i| i as f64 - 3.0).collect();
            let mut b: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum()).collect();
            let mut l = a.clone();
            cholesky_in_place(&mut l, n).unwrap();
            cholesky_solve(&l, n, &mut b);
            for i in 0..n {
                assert!((b[i] - x[i]).abs() < 1e-8, "n={n} i={i}");
            }
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let mut a = vec![1.0, 2.0, 2.0, 1.0];
        assert_eq!(cholesky_in_place(&mut a, 2), Err(1));
    }
}
