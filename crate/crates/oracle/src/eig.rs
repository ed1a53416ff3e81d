//! Eigenvalues of small dense complex matrices: Householder reduction to
//! Hessenberg form followed by the shifted QR iteration (Wilkinson shifts,
//! values only). Used for the stability spectrum of the densified
//! superoperator at small M.

use crate::C64;

/// Eigenvalues of a general complex `n x n` matrix (row-major), unordered.
pub fn eigenvalues(a: &[C64], n: usize) -> Vec<C64> {
    assert_eq!(a.len(), n * n);
    let mut h = a.to_vec();
    hessenberg(&mut h, n);
    let mut eigs = Vec::with_capacity(n);
    let mut hi = n; // active block is 0..hi
    let mut iter_guard = 0usize;
    while hi > 0 {
        if hi == 1 {
            eigs.push(h[0]);
            break;
        }
        // deflate converged subdiagonals
        let mut lo = hi - 1;
        while lo > 0 {
            let off = h[lo * n + lo - 1].norm();
            let scale = h[(lo - 1) * n + lo - 1].norm() + h[lo * n + lo].norm();
            if off <= 1e-15 * scale.max(1e-300) {
                h[lo * n + lo - 1] = C64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if h[(hi - 1) * n + hi - 2].norm() <= 1e-15 * (h[(hi - 1) * n + hi - 1].norm() + h[(hi - 2) * n + hi - 2].norm()).max(1e-300) {
            eigs.push(h[(hi - 1) * n + hi - 1]);
            hi -= 1;
            continue;
        }
        iter_guard += 1;
        assert!(iter_guard < 200 * n, "QR iteration stalled");
        // Wilkinson shift from the trailing 2x2 of the active block
        let (p, q) = (hi - 2, hi - 1);
        let (a11, a12, a21, a22) = (h[p * n + p], h[p * n + q], h[q * n + p], h[q * n + q]);
        let tr = a11 + a22;
        let det = a11 * a22 - a12 * a21;
        let disc = (tr * tr - 4.0 * det).sqrt();
        let l1 = 0.5 * (tr + disc);
        let l2 = 0.5 * (tr - disc);
        let shift = if (l1 - a22).norm() < (l2 - a22).norm() { l1 } else { l2 };
        qr_step(&mut h, n, lo, hi, shift);
    }
    eigs
}

fn hessenberg(h: &mut [C64], n: usize) {
    for k in 0..n.saturating_sub(2) {
        // Householder vector for column k below the subdiagonal
        let mut norm2 = 0.0;
        for i in (k + 1)..n {
            norm2 += h[i * n + k].norm_sqr();
        }
        if norm2 <= 1e-300 {
            continue;
        }
        let x0 = h[(k + 1) * n + k];
        let alpha = if x0.norm() > 0.0 {
            -(x0 / x0.norm()) * norm2.sqrt()
        } else {
            C64::new(-norm2.sqrt(), 0.0)
        };
        let mut v: Vec<C64> = vec![C64::new(0.0, 0.0); n];
        v[k + 1] = x0 - alpha;
        for i in (k + 2)..n {
            v[i] = h[i * n + k];
        }
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 <= 1e-300 {
            continue;
        }
        // H <- (I - 2 v v^H / |v|^2) H (I - 2 v v^H / |v|^2)
        for col in 0..n {
            let mut dot = C64::new(0.0, 0.0);
            for i in (k + 1)..n {
                dot += v[i].conj() * h[i * n + col];
            }
            let f = 2.0 * dot / vnorm2;
            for i in (k + 1)..n {
                let sub = v[i] * f;
                h[i * n + col] -= sub;
            }
        }
        for row in 0..n {
            let mut dot = C64::new(0.0, 0.0);
            for i in (k + 1)..n {
                dot += h[row * n + i] * v[i];
            }
            let f = 2.0 * dot / vnorm2;
            for i in (k + 1)..n {
                let sub = f * v[i].conj();
                h[row * n + i] -= sub;
            }
        }
    }
}

/// One implicit single-shift QR sweep on the Hessenberg block `lo..hi` via
/// Givens rotations.
fn qr_step(h: &mut [C64], n: usize, lo: usize, hi: usize, shift: C64) {
    let m = hi - lo;
    if m < 2 {
        return;
    }
    let mut rotations: Vec<(C64, C64)> = Vec::with_capacity(m - 1);
    for i in lo..hi {
        h[i * n + i] -= shift;
    }
    // QR factorization of the shifted block
    for i in lo..(hi - 1) {
        let a = h[i * n + i];
        let b = h[(i + 1) * n + i];
        let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (c, s) = if r <= 1e-300 {
            (C64::new(1.0, 0.0), C64::new(0.0, 0.0))
        } else {
            (a.conj() / r, b.conj() / r)
        };
        rotations.push((c, s));
        for col in i..n {
            let x = h[i * n + col];
            let y = h[(i + 1) * n + col];
            h[i * n + col] = c * x + s * y;
            h[(i + 1) * n + col] = -s.conj() * x + c.conj() * y;
        }
    }
    // RQ: apply the adjoint rotations on the right
    for (idx, &(c, s)) in rotations.iter().enumerate() {
        let i = lo + idx;
        for row in 0..=(i + 1).min(hi - 1) {
            let x = h[row * n + i];
            let y = h[row * n + i + 1];
            h[row * n + i] = x * c.conj() + y * s.conj();
            h[row * n + i + 1] = -x * s + y * c;
        }
    }
    for i in lo..hi {
        h[i * n + i] += shift;
    }
}

/// Attempts a Cholesky factorization of the Hermitian matrix `a + shift*I`;
/// success certifies `min eigenvalue >= -shift` up to roundoff.
pub fn is_positive_semidefinite(a: &[C64], n: usize, shift: f64) -> bool {
    let mut m = a.to_vec();
    for i in 0..n {
        m[i * n + i] += C64::new(shift, 0.0);
    }
    for k in 0..n {
        let mut d = m[k * n + k].re;
        for j in 0..k {
            d -= m[k * n + j].norm_sqr();
        }
        if d < 0.0 {
            return false;
        }
        let d = d.sqrt();
        if d <= 0.0 {
            // zero pivot: remaining column must vanish too
            for i in (k + 1)..n {
                let mut acc = m[i * n + k];
                for j in 0..k {
                    acc -= m[i * n + j] * m[k * n + j].conj();
                }
                if acc.norm() > 1e-12 {
                    return false;
                }
                m[i * n + k] = C64::new(0.0, 0.0);
            }
            m[k * n + k] = C64::new(0.0, 0.0);
            continue;
        }
        m[k * n + k] = C64::new(d, 0.0);
        for i in (k + 1)..n {
            let mut acc = m[i * n + k];
            for j in 0..k {
                acc -= m[i * n + j] * m[k * n + j].conj();
            }
            m[i * n + k] = acc / d;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn diagonal_matrix() {
        let a = [c(1.0, 2.0), c(0.0, 0.0), c(0.0, 0.0), c(-3.0, 0.5)];
        let mut e = eigenvalues(&a, 2);
        e.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap());
        assert!((e[0] - c(-3.0, 0.5)).norm() < 1e-12);
        assert!((e[1] - c(1.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn known_complex_matrix() {
        // [[0, 1], [-1, 0]] has eigenvalues +-i
        let a = [c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)];
        let mut e = eigenvalues(&a, 2);
        e.sort_by(|x, y| x.im.partial_cmp(&y.im).unwrap());
        assert!((e[0] - c(0.0, -1.0)).norm() < 1e-10);
        assert!((e[1] - c(0.0, 1.0)).norm() < 1e-10);
    }

    #[test]
    fn random_matrix_trace_and_det_consistency() {
        use rand::rngs::SmallRng;
        use rand::{Rng, SeedableRng};
        let mut rng = SmallRng::seed_from_u64(5);
        for n in [3usize, 5, 8] {
            let a: Vec<C64> = (0..n * n)
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let e = eigenvalues(&a, n);
            assert_eq!(e.len(), n);
            let tr_a: C64 = (0..n).map(|i| a[i * n + i]).sum();
            let tr_e: C64 = e.iter().sum();
            assert!((tr_a - tr_e).norm() < 1e-9, "trace mismatch at n={n}");
        }
    }

    #[test]
    fn psd_check() {
        // [[2, i], [-i, 2]] is Hermitian PSD (eigs 1, 3)
        let a = [c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)];
        assert!(is_positive_semidefinite(&a, 2, 0.0));
        // [[1, 2i], [-2i, 1]] has eigenvalue -1
        let b = [c(1.0, 0.0), c(0.0, 2.0), c(0.0, -2.0), c(1.0, 0.0)];
        assert!(!is_positive_semidefinite(&b, 2, 1e-10));
        assert!(is_positive_semidefinite(&b, 2, 1.0 + 1e-9));
    }
}
