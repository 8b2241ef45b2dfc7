//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

use ordinal_ts::numerics::Matrix;

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 60)
}

/// Integral over `[a, b]`, split at the kink/peak `c` when it lies inside.
pub fn integrate_split<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, c: f64, tol: f64) -> f64 {
    if c > a && c < b {
        simpson(f, a, c, tol) + simpson(f, c, b, tol)
    } else {
        simpson(f, a, b, tol)
    }
}

pub fn gaussian_pdf(y: f64, mu: f64, s: f64) -> f64 {
    let z = (y - mu) / s;
    (-0.5 * z * z).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
}

/// Student-t with ν = 5: normalizing constant 8 / (3π√5).
pub fn student5_pdf(y: f64, mu: f64, s: f64) -> f64 {
    let z = (y - mu) / s;
    let c = 8.0 / (3.0 * std::f64::consts::PI * 5f64.sqrt());
    c * (1.0 + z * z / 5.0).powf(-3.0) / s
}

pub fn laplace_pdf(y: f64, mu: f64, lambda: f64) -> f64 {
    (-(y - mu).abs() / lambda).exp() / (2.0 * lambda)
}

/// Normwise relative error `max|a − b| / max|b|`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let den = b.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Central differences of `f` at `x`.
pub fn fd_grad<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = xp[i];
            xp[i] = orig + h;
            let up = f(&xp);
            xp[i] = orig - h;
            let dn = f(&xp);
            xp[i] = orig;
            (up - dn) / (2.0 * h)
        })
        .collect()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

pub fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

/// Stable `softmax(βᵀx)` for row-major β (d×K), written independently.
pub fn probs(x: &[f64], beta: &[f64], k: usize) -> Vec<f64> {
    let d = x.len();
    let z: Vec<f64> = (0..k)
        .map(|c| (0..d).map(|i| x[i] * beta[i * k + c]).sum())
        .collect();
    let mx = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - mx).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// `−log softmax(βᵀx)_y` via log-sum-exp.
pub fn ce_loss(x: &[f64], y: usize, beta: &[f64], k: usize) -> f64 {
    let d = x.len();
    let z: Vec<f64> = (0..k)
        .map(|c| (0..d).map(|i| x[i] * beta[i * k + c]).sum())
        .collect();
    let mx = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = mx + z.iter().map(|v| (v - mx).exp()).sum::<f64>().ln();
    lse - z[y]
}

/// Weighted, L2-regularized softmax regression, fitted by Newton's method or
/// by plain gradient descent. Both minimize `(1/n)Σ L(zᵢ) + (λ/2)‖β‖² + ε L(z_extra)`.
pub struct SoftmaxRefit<'a> {
    pub xs: &'a [Vec<f64>],
    pub ys: &'a [usize],
    pub k: usize,
    pub lambda: f64,
}

impl SoftmaxRefit<'_> {
    fn accumulate(
        &self,
        x: &[f64],
        y: usize,
        beta: &[f64],
        w: f64,
        g: &mut DVector<f64>,
        h: &mut DMatrix<f64>,
    ) {
        let k = self.k;
        let d = x.len();
        let s = probs(x, beta, k);
        for i in 0..d {
            for c in 0..k {
                let e = if c == y { 1.0 } else { 0.0 };
                g[i * k + c] += w * x[i] * (s[c] - e);
            }
        }
        for i in 0..d {
            for j in 0..d {
                for a in 0..k {
                    for b in 0..k {
                        let p = if a == b { s[a] } else { 0.0 } - s[a] * s[b];
                        h[(i * k + a, j * k + b)] += w * x[i] * x[j] * p;
                    }
                }
            }
        }
    }

    /// Gradient and Hessian of the objective.
    pub fn derivatives(
        &self,
        beta: &[f64],
        extra: Option<(&[f64], usize, f64)>,
    ) -> (DVector<f64>, DMatrix<f64>) {
        let n = beta.len();
        let mut g = DVector::zeros(n);
        let mut h = DMatrix::zeros(n, n);
        let w = 1.0 / self.xs.len() as f64;
        for (x, &y) in self.xs.iter().zip(self.ys) {
            self.accumulate(x, y, beta, w, &mut g, &mut h);
        }
        if let Some((x, y, eps)) = extra {
            self.accumulate(x, y, beta, eps, &mut g, &mut h);
        }
        for i in 0..n {
            g[i] += self.lambda * beta[i];
            h[(i, i)] += self.lambda;
        }
        (g, h)
    }

    pub fn fit(&self, start: &[f64], extra: Option<(&[f64], usize, f64)>) -> Vec<f64> {
        let mut beta = start.to_vec();
        for _ in 0..100 {
            let (g, h) = self.derivatives(&beta, extra);
            if g.norm() < 1e-14 {
                break;
            }
            let step = h.lu().solve(&g).expect("regularized Hessian is invertible");
            for (b, s) in beta.iter_mut().zip(step.iter()) {
                *b -= s;
            }
        }
        beta
    }

    /// Gradient descent with step `1/L`, where `L` bounds the Hessian norm
    /// because the softmax covariance never exceeds 1/2.
    pub fn fit_gd(&self, start: &[f64], extra: Option<(&[f64], usize, f64)>, tol: f64) -> Vec<f64> {
        let sq = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let mean_sq = self.xs.iter().map(|x| sq(x)).sum::<f64>() / self.xs.len() as f64;
        let extra_sq = extra.map_or(0.0, |(x, _, e)| e.abs() * sq(x));
        let step = 1.0 / (self.lambda + 0.5 * (mean_sq + extra_sq));
        let mut beta = start.to_vec();
        for _ in 0..1_000_000 {
            let (g, _) = self.derivatives(&beta, extra);
            if g.norm() < tol {
                return beta;
            }
            for (b, gi) in beta.iter_mut().zip(g.iter()) {
                *b -= step * gi;
            }
        }
        panic!("gradient descent did not reach tolerance {tol}");
    }
}
