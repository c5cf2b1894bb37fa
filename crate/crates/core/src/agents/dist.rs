//! Diagonal Gaussian and tanh-squashed Gaussian densities.

use crate::math::{self, LN_2PI};

/// `log N(a; mu, exp(log_std)^2)` summed over dimensions.
pub fn gaussian_log_prob(a: &[f64], mu: &[f64], log_std: &[f64]) -> f64 {
    a.iter()
        .zip(mu)
        .zip(log_std)
        .map(|((&a, &m), &ls)| {
            let z = (a - m) / math::exp(ls);
            -0.5 * z * z - ls - 0.5 * LN_2PI
        })
        .sum()
}

/// Partial derivatives of [`gaussian_log_prob`] with respect to `mu` and
/// `log_std`, scaled by `weight` and accumulated.
pub fn gaussian_log_prob_grad(a: &[f64], mu: &[f64], log_std: &[f64], weight: f64, d_mu: &mut [f64], d_log_std: &mut [f64]) {
    for j in 0..a.len() {
        let sigma = math::exp(log_std[j]);
        let z = (a[j] - mu[j]) / sigma;
        d_mu[j] += weight * z / sigma;
        d_log_std[j] += weight * (z * z - 1.0);
    }
}

/// `ln(1 - tanh(u)^2)`, stable for large `|u|`.
pub fn log_one_minus_tanh_sq(u: f64) -> f64 {
    2.0 * (core::f64::consts::LN_2 - u - math::softplus(-2.0 * u))
}

/// Log-density of `a = limit tanh(u)` where `u ~ N(mu, sigma^2)`, given the
/// pre-squash sample `u`.
pub fn squashed_log_prob(u: &[f64], mu: &[f64], log_std: &[f64], limit: f64) -> f64 {
    let base = gaussian_log_prob(u, mu, log_std);
    let jac: f64 = u.iter().map(|&x| log_one_minus_tanh_sq(x) + math::ln(limit)).sum();
    base - jac
}

/// Pre-squash value for an action strictly inside `(-limit, limit)`.
pub fn unsquash(a: f64, limit: f64) -> f64 {
    let y = (a / limit).clamp(-1.0 + 1e-12, 1.0 - 1e-12);
    0.5 * (math::log1p(y) - math::log1p(-y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_normal_at_zero() {
        let lp = gaussian_log_prob(&[0.0], &[0.0], &[0.0]);
        assert!((lp - -0.918_938_533_204_672_8).abs() < 1e-15);
    }

    #[test]
    fn gaussian_gradients_match_differences() {
        let a = [0.3, -1.2];
        let mu = [0.1, 0.4];
        let ls = [-0.5, 0.2];
        let mut dm = [0.0; 2];
        let mut dl = [0.0; 2];
        gaussian_log_prob_grad(&a, &mu, &ls, 1.0, &mut dm, &mut dl);
        let h = 1e-6;
        for j in 0..2 {
            let mut p = mu;
            p[j] += h;
            let mut m = mu;
            m[j] -= h;
            let fd = (gaussian_log_prob(&a, &p, &ls) - gaussian_log_prob(&a, &m, &ls)) / (2.0 * h);
            assert!((fd - dm[j]).abs() < 1e-7);
            let mut p = ls;
            p[j] += h;
            let mut m = ls;
            m[j] -= h;
            let fd = (gaussian_log_prob(&a, &mu, &p) - gaussian_log_prob(&a, &mu, &m)) / (2.0 * h);
            assert!((fd - dl[j]).abs() < 1e-7);
        }
    }

    #[test]
    fn stable_tanh_jacobian() {
        for u in [-3.0, -0.5, 0.0, 0.7, 2.5] {
            let t = math::tanh(u);
            assert!((log_one_minus_tanh_sq(u) - math::ln(1.0 - t * t)).abs() < 1e-12);
        }
        assert!(log_one_minus_tanh_sq(400.0).is_finite());
    }

    #[test]
    fn squashed_density_integrates_to_the_normal_cdf() {
        // P(a <= x) = Phi((atanh(x / L) - mu) / sigma); integrate the density
        // of `a` with composite Simpson on [-L + eps, x].
        let (mu, ls, limit) = (0.3, -0.4, 2.0);
        let sigma = math::exp(ls);
        let density = |a: f64| {
            let u = unsquash(a, limit);
            math::exp(squashed_log_prob(&[u], &[mu], &[ls], limit))
        };
        let cdf = |z: f64| 0.5 * (1.0 + libm::erf(z / core::f64::consts::SQRT_2));
        for x in [-1.5, -0.5, 0.0, 0.8, 1.6] {
            let lo = -limit + 1e-9;
            let n = 20_000;
            let h = (x - lo) / n as f64;
            let mut s = density(lo) + density(x);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * density(lo + i as f64 * h);
            }
            let integral = s * h / 3.0;
            let exact = cdf((unsquash(x, limit) - mu) / sigma);
            assert!((integral - exact).abs() < 1e-4, "x={x}: {integral} vs {exact}");
        }
    }
}
