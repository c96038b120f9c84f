//! Eigenproblem of the complex symmetric tridiagonal inverse Hamiltonian.
//!
//! Eigenvalues come from an implicit QL sweep with complex orthogonal
//! rotations (`c^2 + s^2 = 1`, no conjugation), which keeps the complex
//! symmetric structure. Eigenvectors come from a twisted factorization: the
//! vector is assembled from ratios of the forward and backward pivots,
//! which preserves the relative accuracy of exponentially small tails. The
//! decay rate is then read off the boundary amplitudes through the exact
//! identity `Im(1/omega) = (|z_1|^2 + |z_N|^2) / gamma`.

use num_complex::Complex64;

const MAX_QL_ITERATIONS: usize = 60;

/// `|re| + |im|`, a cheap norm for tolerances and pivot tests.
fn l1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Principal square root without the polar round trip.
fn csqrt(z: Complex64) -> Complex64 {
    if z.im == 0.0 {
        return if z.re >= 0.0 {
            Complex64::new(z.re.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (-z.re).sqrt())
        };
    }
    let m = (z.re * z.re + z.im * z.im).sqrt();
    let t = (0.5 * (m + z.re.abs())).sqrt();
    if z.re >= 0.0 {
        Complex64::new(t, 0.5 * z.im / t)
    } else {
        Complex64::new(0.5 * z.im.abs() / t, t.copysign(z.im))
    }
}

fn csqrt_pythag(f: Complex64, g: Complex64) -> Complex64 {
    csqrt(f * f + g * g)
}

fn ln_abs(z: Complex64) -> f64 {
    let q = z.norm_sqr();
    if q > 1e-300 && q < 1e300 {
        0.5 * q.ln()
    } else {
        z.norm().ln()
    }
}

/// All eigenvalues of the symmetric tridiagonal matrix (`diag`, `offdiag`).
pub(crate) fn ql_eigenvalues(diag: &[Complex64], offdiag: &[Complex64]) -> Result<Vec<Complex64>, String> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = offdiag.to_vec();
    e.push(Complex64::new(0.0, 0.0));
    if n <= 1 {
        return Ok(d);
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = l1(d[m]) + l1(d[m + 1]);
                if l1(e[m]) <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERATIONS {
                return Err(format!("QL sweep did not converge for eigenvalue {l}"));
            }
            let mut g = (d[l + 1] - d[l]) / (e[l] * 2.0);
            let mut r = csqrt_pythag(g, Complex64::new(1.0, 0.0));
            if (g + r).norm_sqr() < (g - r).norm_sqr() {
                r = -r;
            }
            g = d[m] - d[l] + e[l] / (g + r);
            let mut s = Complex64::new(1.0, 0.0);
            let mut c = Complex64::new(1.0, 0.0);
            let mut p = Complex64::new(0.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = csqrt_pythag(f, g);
                e[i + 1] = r;
                let scale = l1(f) + l1(g);
                if scale == 0.0 {
                    d[i + 1] -= p;
                    e[m] = Complex64::new(0.0, 0.0);
                    deflated = true;
                    break;
                }
                if l1(r) < 1e-12 * scale {
                    return Err("complex orthogonal rotation broke down".into());
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + c * b * 2.0;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = Complex64::new(0.0, 0.0);
        }
    }
    if d.iter().any(|z| !z.is_finite()) {
        return Err("non-finite eigenvalue".into());
    }
    Ok(d)
}

/// Replaces pivots below `floor` so an exactly singular leading block does
/// not overflow the ratio products.
fn guard(x: Complex64, floor: f64) -> Complex64 {
    if l1(x) < floor {
        Complex64::new(floor, 0.0)
    } else {
        x
    }
}

struct Twisted {
    twist_pivot: Complex64,
    z: Vec<Complex64>,
    ln_abs_first: f64,
    ln_abs_last: f64,
}

fn twisted(diag: &[Complex64], offdiag: &[Complex64], lambda: Complex64) -> Twisted {
    let n = diag.len();
    if n == 1 {
        return Twisted {
            twist_pivot: diag[0] - lambda,
            z: vec![Complex64::new(1.0, 0.0)],
            ln_abs_first: 0.0,
            ln_abs_last: 0.0,
        };
    }
    let scale = diag
        .iter()
        .zip(offdiag.iter().chain(std::iter::once(&Complex64::new(0.0, 0.0))))
        .fold(l1(lambda), |m, (d, e)| m.max(l1(*d) + 2.0 * l1(*e)));
    let floor = f64::EPSILON * scale;
    let mut fwd = vec![Complex64::new(0.0, 0.0); n];
    let mut bwd = vec![Complex64::new(0.0, 0.0); n];
    fwd[0] = diag[0] - lambda;
    for i in 1..n {
        fwd[i] = (diag[i] - lambda) - offdiag[i - 1] * offdiag[i - 1] / guard(fwd[i - 1], floor);
    }
    bwd[n - 1] = diag[n - 1] - lambda;
    for i in (0..n - 1).rev() {
        bwd[i] = (diag[i] - lambda) - offdiag[i] * offdiag[i] / guard(bwd[i + 1], floor);
    }
    let mut twist = 0;
    let mut best = f64::INFINITY;
    let mut twist_pivot = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let g = fwd[k] + bwd[k] - (diag[k] - lambda);
        if g.norm_sqr() < best {
            best = g.norm_sqr();
            twist = k;
            twist_pivot = g;
        }
    }
    let mut z = vec![Complex64::new(0.0, 0.0); n];
    z[twist] = Complex64::new(1.0, 0.0);
    let mut ln_abs_first = 0.0;
    for i in (0..twist).rev() {
        let ratio = -offdiag[i] / guard(fwd[i], floor);
        z[i] = ratio * z[i + 1];
        ln_abs_first += ln_abs(ratio);
    }
    let mut ln_abs_last = 0.0;
    for i in twist + 1..n {
        let ratio = -offdiag[i - 1] / guard(bwd[i], floor);
        z[i] = ratio * z[i - 1];
        ln_abs_last += ln_abs(ratio);
    }
    Twisted {
        twist_pivot,
        z,
        ln_abs_first,
        ln_abs_last,
    }
}

/// Refined eigenpair of the inverse Hamiltonian.
pub(crate) struct InversePair {
    /// Eigenvalue of `H_eff^{-1}` with its imaginary part taken from the
    /// boundary identity.
    pub lambda: Complex64,
    /// `ln Im(lambda)`; finite even when `Im(lambda)` underflows.
    pub ln_im_lambda: f64,
    /// Unit-norm eigenvector.
    pub vector: Vec<Complex64>,
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

pub(crate) fn refine_pair(diag: &[Complex64], offdiag: &[Complex64], gamma: f64, lambda0: Complex64) -> InversePair {
    let mut lambda = lambda0;
    let scale = lambda0.norm().max(1.0);
    let mut tw = twisted(diag, offdiag, lambda);
    for _ in 0..3 {
        let ztz: Complex64 = tw.z.iter().map(|v| v * v).sum();
        let zhz: f64 = tw.z.iter().map(|v| v.norm_sqr()).sum();
        if ztz.norm() < 1e-8 * zhz {
            break;
        }
        let delta = tw.twist_pivot / ztz;
        if !delta.is_finite() || delta.norm() > 1e-6 * scale {
            break;
        }
        lambda += delta;
        tw = twisted(diag, offdiag, lambda);
        if delta.norm() <= 4.0 * f64::EPSILON * scale {
            break;
        }
    }
    let norm_sq: f64 = tw.z.iter().map(|v| v.norm_sqr()).sum();
    let ln_norm = 0.5 * norm_sq.ln();
    let inv_norm = 1.0 / norm_sq.sqrt();
    let vector: Vec<Complex64> = tw.z.iter().map(|v| v * inv_norm).collect();
    let first = 2.0 * (tw.ln_abs_first - ln_norm);
    let last = 2.0 * (tw.ln_abs_last - ln_norm);
    let ln_pop = if diag.len() == 1 {
        std::f64::consts::LN_2 + first
    } else {
        log_add_exp(first, last)
    };
    let ln_im_lambda = ln_pop - gamma.ln();
    InversePair {
        lambda: Complex64::new(lambda.re, ln_im_lambda.exp()),
        ln_im_lambda,
        vector,
    }
}
