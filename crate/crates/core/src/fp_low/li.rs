//! Geometric-mean estimator of `||x||_p^p` from three p-stable projections.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

/// `theta_p = ((2/pi) Gamma(p/3) Gamma(2/3) sin(pi p / 6))^3`, the value of
/// `E[|X1 X2 X3|^{p/3}]` for i.i.d. standard p-stable `X_j`.
pub fn li_normalizer(p: f64) -> f64 {
    (2.0 / PI * gamma(p / 3.0) * gamma(2.0 / 3.0) * (PI * p / 6.0).sin()).powi(3)
}

/// `(|d1 d2 d3|)^{p/3} / theta_p`.
pub fn li_estimate(d1: f64, d2: f64, d3: f64, p: f64) -> f64 {
    li_from_normalizer([d1, d2, d3], p, li_normalizer(p))
}

#[inline]
pub(crate) fn li_from_normalizer(dots: [f64; 3], p: f64, theta: f64) -> f64 {
    (dots[0] * dots[1] * dots[2]).abs().powf(p / 3.0) / theta
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `E|X|^l` for a symmetric variable with characteristic function
    /// `exp(-|t|^p)`, from `E|X|^l = c_l * int_0^inf (1 - phi(t)) t^{-1-l} dt`
    /// with `c_l = (2/pi) Gamma(1+l) sin(pi l / 2)`, integrated on a log grid.
    fn abs_moment_by_quadrature(p: f64, l: f64) -> f64 {
        let h = 1e-3;
        let mut total = 0.0;
        let mut u = -80.0;
        while u < 400.0 {
            let t = f64::exp(u);
            total += (-(-t.powf(p)).exp_m1()) * (-l * u).exp() * h;
            u += h;
        }
        2.0 / PI * gamma(1.0 + l) * (PI * l / 2.0).sin() * total
    }

    #[test]
    fn unit_normalizer_closed_form() {
        let expect = 8.0 / (3.0 * 3f64.sqrt());
        assert!((li_normalizer(1.0) - expect).abs() < 1e-9);
        assert!((li_estimate(1.0, 1.0, 1.0, 1.0) - 0.649_519_052_8).abs() < 1e-9);
    }

    #[test]
    fn zero_dot_gives_zero() {
        assert_eq!(li_estimate(0.0, 5.0, -2.0, 1.2), 0.0);
    }

    #[test]
    fn normalizer_matches_quadrature() {
        for p in [0.5, 1.0, 1.5] {
            let m = abs_moment_by_quadrature(p, p / 3.0);
            let theta = li_normalizer(p);
            assert!((m.powi(3) / theta - 1.0).abs() < 0.01, "p = {p}: {} vs {theta}", m.powi(3));
        }
    }
}
