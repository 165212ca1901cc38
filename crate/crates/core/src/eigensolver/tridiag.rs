//! Eigenpairs of the small symmetric tridiagonal matrices produced by Lanczos.
//!
//! `alpha` is the diagonal (length n) and `beta` the off-diagonal (length n-1).

/// Number of eigenvalues strictly below `x` (Sturm sequence count).
fn count_below(alpha: &[f64], beta: &[f64], x: f64, pivmin: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..alpha.len() {
        let coupling = if i == 0 { 0.0 } else { beta[i - 1] * beta[i - 1] / d };
        d = alpha[i] - x - coupling;
        if d.abs() < pivmin {
            d = -pivmin;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn gershgorin(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let n = alpha.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let left = if i > 0 { beta[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { beta[i].abs() } else { 0.0 };
        lo = lo.min(alpha[i] - left - right);
        hi = hi.max(alpha[i] + left + right);
    }
    (lo, hi)
}

/// The `k`-th smallest eigenvalue (0-based) by bisection.
pub(crate) fn eigenvalue(alpha: &[f64], beta: &[f64], k: usize) -> f64 {
    debug_assert!(k < alpha.len());
    if alpha.len() == 1 {
        return alpha[0];
    }
    let (mut lo, mut hi) = gershgorin(alpha, beta);
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    let pivmin = f64::MIN_POSITIVE.max(scale * f64::EPSILON * f64::EPSILON);
    let pad = 2.0 * f64::EPSILON * scale + pivmin;
    lo -= pad;
    hi += pad;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(alpha, beta, mid, pivmin) > k {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 2.0 * f64::EPSILON * (lo.abs() + hi.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Unit eigenvector for an (accurate) eigenvalue `theta`, by inverse iteration
/// with a partially pivoted tridiagonal LU.
pub(crate) fn eigenvector(alpha: &[f64], beta: &[f64], theta: f64) -> Vec<f64> {
    let n = alpha.len();
    if n == 1 {
        return vec![1.0];
    }
    let lu = ShiftedLu::new(alpha, beta, theta);
    let mut x = vec![1.0; n];
    // a deterministic, non-special start vector
    for (i, v) in x.iter_mut().enumerate() {
        *v += 1e-3 * ((i * 7919) % 101) as f64;
    }
    for _ in 0..3 {
        lu.solve(&mut x);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            break;
        }
        x.iter_mut().for_each(|v| *v /= norm);
    }
    x
}

struct ShiftedLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn new(alpha: &[f64], beta: &[f64], shift: f64) -> Self {
        let n = alpha.len();
        let mut dl = beta.to_vec();
        let mut du = beta.to_vec();
        let mut d: Vec<f64> = alpha.iter().map(|a| a - shift).collect();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];

        let norm = alpha
            .iter()
            .map(|a| a.abs())
            .chain(beta.iter().map(|b| b.abs()))
            .fold(0.0f64, f64::max)
            .max(f64::MIN_POSITIVE);
        let tiny = norm * f64::EPSILON;

        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        for v in d.iter_mut() {
            if v.abs() < tiny {
                *v = if *v < 0.0 { -tiny } else { tiny };
            }
        }
        Self { dl, d, du, du2, swapped }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                let temp = b[i] - self.dl[i] * b[i + 1];
                b[i] = b[i + 1];
                b[i + 1] = temp;
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}
