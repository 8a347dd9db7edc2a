//! Dense nonsymmetric eigenvalue solver: balancing, Householder reduction to
//! upper Hessenberg form and the Francis double-shift QR iteration.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Row-major square matrix used internally by the QR iteration.
#[derive(Debug, Clone)]
pub struct Square {
    n: usize,
    data: Vec<f64>,
}

impl Square {
    pub fn from_dmatrix(a: &DMatrix<f64>) -> Self {
        let n = a.nrows();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = a[(i, j)];
            }
        }
        Square { n, data }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn norm1(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.at(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Eigenvalues together with the balanced Hessenberg matrix they came from.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub eigenvalues: Vec<Complex64>,
    /// Upper Hessenberg matrix similar to the input (after balancing).
    pub hessenberg: Square,
    pub iterations: usize,
}

/// Parlett–Reinsch balancing by powers of two. Similarity transform, so the
/// spectrum is unchanged.
pub fn balance(a: &mut Square) {
    const RADIX: f64 = 2.0;
    let n = a.n;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a.at(j, i).abs();
                    r += a.at(i, j).abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    *a.at_mut(i, j) *= inv;
                }
                for j in 0..n {
                    *a.at_mut(j, i) *= f;
                }
            }
        }
    }
}

/// Householder reduction to upper Hessenberg form, in place.
pub fn hessenberg(a: &mut Square) {
    let n = a.n;
    if n < 3 {
        return;
    }
    let mut v = vec![0.0; n];
    let mut s = vec![0.0; n];
    for k in 0..n - 2 {
        let m = n - k - 1;
        let scale: f64 = (k + 1..n).map(|i| a.at(i, k).abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut norm2 = 0.0;
        for i in 0..m {
            v[i] = a.at(k + 1 + i, k) / scale;
            norm2 += v[i] * v[i];
        }
        let norm = norm2.sqrt();
        let alpha = if v[0] > 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vtv: f64 = v[..m].iter().map(|x| x * x).sum();
        if vtv == 0.0 {
            continue;
        }
        let beta = 2.0 / vtv;

        // left: rows k+1.., columns k..
        s[k..n].iter_mut().for_each(|x| *x = 0.0);
        for i in 0..m {
            let row = (k + 1 + i) * n;
            let vi = v[i];
            for j in k..n {
                s[j] += vi * a.data[row + j];
            }
        }
        for i in 0..m {
            let row = (k + 1 + i) * n;
            let f = beta * v[i];
            for j in k..n {
                a.data[row + j] -= f * s[j];
            }
        }
        // right: all rows, columns k+1..
        for i in 0..n {
            let row = i * n + k + 1;
            let dot: f64 = (0..m).map(|c| a.data[row + c] * v[c]).sum();
            let f = beta * dot;
            for c in 0..m {
                a.data[row + c] -= f * v[c];
            }
        }
        *a.at_mut(k + 1, k) = alpha * scale;
        for i in k + 2..n {
            *a.at_mut(i, k) = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix. Destroys `a`.
/// The total number of iterations is capped at `100 * n`.
pub fn hqr(a: &mut Square) -> Result<(Vec<Complex64>, usize)> {
    let n = a.n;
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    if n == 0 {
        return Ok((Vec::new(), 0));
    }
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a.at(i, j).abs();
        }
    }
    let cap = 100 * n.max(1);
    let mut total = 0usize;
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            // look for a single small subdiagonal element
            let mut l = nu;
            while l >= 1 {
                let mut s = a.at(l - 1, l - 1).abs() + a.at(l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a.at(l, l - 1).abs() + s == s {
                    *a.at_mut(l, l - 1) = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a.at(nu, nu);
            if l == nu {
                wr[nu] = x + t;
                wi[nu] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = a.at(nu - 1, nu - 1);
            let mut w = a.at(nu, nu - 1) * a.at(nu - 1, nu);
            if l == nu - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    let z = p + sign(z, p);
                    wr[nu - 1] = x + z;
                    wr[nu] = if z != 0.0 { x - w / z } else { x + z };
                    wi[nu - 1] = 0.0;
                    wi[nu] = 0.0;
                } else {
                    wr[nu - 1] = x + p;
                    wr[nu] = x + p;
                    wi[nu - 1] = -z;
                    wi[nu] = z;
                }
                nn -= 2;
                break;
            }
            if total >= cap || its >= 60 {
                return Err(Error::NoConvergence(format!(
                    "QR iteration stalled with {} of {n} eigenvalues unresolved after {total} iterations",
                    nu + 1
                )));
            }
            if its == 10 || its == 20 || its == 40 {
                // exceptional shift
                t += x;
                for i in 0..=nu {
                    *a.at_mut(i, i) -= x;
                }
                let s = a.at(nu, nu - 1).abs() + a.at(nu - 1, nu - 2).abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            total += 1;

            // form the shift and look for two consecutive small subdiagonal elements
            let mut m = nu - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a.at(m, m);
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a.at(m + 1, m) + a.at(m, m + 1);
                q = a.at(m + 1, m + 1) - z - rr - ss;
                r = a.at(m + 2, m + 1);
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a.at(m, m - 1).abs() * (q.abs() + r.abs());
                let v = p.abs() * (a.at(m - 1, m - 1).abs() + z.abs() + a.at(m + 1, m + 1).abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nu {
                *a.at_mut(i, i - 2) = 0.0;
                if i != m + 2 {
                    *a.at_mut(i, i - 3) = 0.0;
                }
            }

            // double QR step on rows l..=nu and columns m..=nu
            let mut k = m;
            while k < nu {
                if k != m {
                    p = a.at(k, k - 1);
                    q = a.at(k + 1, k - 1);
                    r = if k != nu - 1 { a.at(k + 2, k - 1) } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            *a.at_mut(k, k - 1) = -a.at(k, k - 1);
                        }
                    } else {
                        *a.at_mut(k, k - 1) = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        let mut pp = a.at(k, j) + q * a.at(k + 1, j);
                        if k != nu - 1 {
                            pp += r * a.at(k + 2, j);
                            *a.at_mut(k + 2, j) -= pp * z;
                        }
                        *a.at_mut(k + 1, j) -= pp * y;
                        *a.at_mut(k, j) -= pp * x;
                    }
                    let mmin = if nu < k + 3 { nu } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x * a.at(i, k) + y * a.at(i, k + 1);
                        if k != nu - 1 {
                            pp += z * a.at(i, k + 2);
                            *a.at_mut(i, k + 2) -= pp * r;
                        }
                        *a.at_mut(i, k + 1) -= pp * q;
                        *a.at_mut(i, k) -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    let eigenvalues = wr.into_iter().zip(wi).map(|(re, im)| Complex64::new(re, im)).collect();
    Ok((eigenvalues, total))
}

/// All eigenvalues of a real square matrix.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<EigenSolution> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "matrix is {}x{}, not square",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Precondition("matrix has non-finite entries".into()));
    }
    let mut work = Square::from_dmatrix(a);
    balance(&mut work);
    hessenberg(&mut work);
    let hess = work.clone();
    let (eigenvalues, iterations) = hqr(&mut work)?;
    Ok(EigenSolution {
        eigenvalues,
        hessenberg: hess,
        iterations,
    })
}

/// Inverse iteration on an upper Hessenberg matrix for an approximate
/// eigenvalue. Returns the unit eigenvector estimate and the relative
/// residual `‖H x - λ x‖ / ‖H‖₁`.
pub fn hessenberg_residual(h: &Square, lambda: Complex64) -> Result<(Vec<Complex64>, f64)> {
    let n = h.n;
    let hnorm = h.norm1().max(f64::MIN_POSITIVE);
    // nudge the shift off the exact eigenvalue so the factorization stays finite
    let shift = lambda + Complex64::new(1.0, 1.0) * (hnorm * 1e-13);
    let lu = HessenbergLu::factor(h, shift)?;
    let mut x = vec![Complex64::new(1.0, 0.0); n];
    for _ in 0..3 {
        lu.solve(&mut x);
        let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::NoConvergence(
                "inverse iteration produced a non-finite vector".into(),
            ));
        }
        x.iter_mut().for_each(|z| *z /= norm);
    }
    let mut res = 0.0;
    for i in 0..n {
        let mut acc = -lambda * x[i];
        for j in i.saturating_sub(1)..n {
            acc += h.at(i, j) * x[j];
        }
        res += acc.norm_sqr();
    }
    Ok((x, res.sqrt() / hnorm))
}

/// LU factorization of `H - shift I` for Hessenberg `H`, pivoting between
/// adjacent rows only.
struct HessenbergLu {
    n: usize,
    u: Vec<Complex64>,
    mult: Vec<Complex64>,
    swapped: Vec<bool>,
}

impl HessenbergLu {
    fn factor(h: &Square, shift: Complex64) -> Result<Self> {
        let n = h.n;
        let mut u = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in i.saturating_sub(1)..n {
                u[i * n + j] = Complex64::new(h.at(i, j), 0.0);
            }
            u[i * n + i] -= shift;
        }
        let mut mult = vec![Complex64::new(0.0, 0.0); n];
        let mut swapped = vec![false; n];
        let tiny = f64::EPSILON * h.norm1().max(1.0);
        for k in 0..n.saturating_sub(1) {
            if u[(k + 1) * n + k].norm() > u[k * n + k].norm() {
                for j in k..n {
                    u.swap(k * n + j, (k + 1) * n + j);
                }
                swapped[k] = true;
            }
            if u[k * n + k].norm() == 0.0 {
                u[k * n + k] = Complex64::new(tiny, 0.0);
            }
            let m = u[(k + 1) * n + k] / u[k * n + k];
            mult[k] = m;
            u[(k + 1) * n + k] = Complex64::new(0.0, 0.0);
            for j in k + 1..n {
                let ukj = u[k * n + j];
                u[(k + 1) * n + j] -= m * ukj;
            }
        }
        if n > 0 && u[(n - 1) * n + n - 1].norm() == 0.0 {
            u[(n - 1) * n + n - 1] = Complex64::new(tiny, 0.0);
        }
        Ok(HessenbergLu { n, u, mult, swapped })
    }

    fn solve(&self, b: &mut [Complex64]) {
        let n = self.n;
        for k in 0..n.saturating_sub(1) {
            if self.swapped[k] {
                b.swap(k, k + 1);
            }
            let bk = b[k];
            b[k + 1] -= self.mult[k] * bk;
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..n {
                acc -= self.u[i * n + j] * b[j];
            }
            b[i] = acc / self.u[i * n + i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        v
    }

    #[test]
    fn rotation_generator() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let eig = sorted(eigenvalues(&a).unwrap().eigenvalues);
        assert!((eig[0] - Complex64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((eig[1] - Complex64::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn triangular_matrix_returns_diagonal() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 5.0, -2.0, 0.0, 3.0, 7.0, 0.0, 0.0, -4.0]);
        let eig = sorted(eigenvalues(&a).unwrap().eigenvalues);
        let expect = [-4.0, 1.0, 3.0];
        for (z, e) in eig.iter().zip(expect) {
            assert!((z - Complex64::new(e, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn companion_matrix_roots() {
        // x^4 - 10x^3 + 35x^2 - 50x + 24 = (x-1)(x-2)(x-3)(x-4)
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[
                10.0, -35.0, 50.0, -24.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0,
            ],
        );
        let eig = sorted(eigenvalues(&a).unwrap().eigenvalues);
        for (k, z) in eig.iter().enumerate() {
            assert!((z - Complex64::new(k as f64 + 1.0, 0.0)).norm() < 1e-10, "{z}");
        }
    }

    #[test]
    fn trace_and_residuals_on_random_matrix() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 60;
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let sol = eigenvalues(&a).unwrap();
        let trace: Complex64 = sol.eigenvalues.iter().sum();
        assert!((trace.re - a.trace()).abs() < 1e-10);
        assert!(trace.im.abs() < 1e-10);
        for z in sol.eigenvalues.iter().take(10) {
            let (_, res) = hessenberg_residual(&sol.hessenberg, *z).unwrap();
            assert!(res < 1e-10, "residual {res}");
        }
    }

    #[test]
    fn empty_and_scalar() {
        let a = DMatrix::<f64>::zeros(0, 0);
        assert!(eigenvalues(&a).unwrap().eigenvalues.is_empty());
        let b = DMatrix::from_element(1, 1, -3.5);
        assert_eq!(eigenvalues(&b).unwrap().eigenvalues, vec![Complex64::new(-3.5, 0.0)]);
    }
}
