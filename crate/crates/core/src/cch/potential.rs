//! Truncated double-well potential and its convex/concave splitting.

/// `F(u)`: `u²/4` below 0, `u²(1−u)²/4` on `[0, 1]`, `(u−1)²/4` above 1.
pub fn potential_f(u: f64) -> f64 {
    if u < 0.0 {
        0.25 * u * u
    } else if u <= 1.0 {
        0.25 * u * u * (1.0 - u) * (1.0 - u)
    } else {
        0.25 * (u - 1.0) * (u - 1.0)
    }
}

/// Convex part `F_i(u) = 3u²/8`.
pub fn potential_fi(u: f64) -> f64 {
    0.375 * u * u
}

/// Concave part `F_e = F − F_i`.
pub fn potential_fe(u: f64) -> f64 {
    if u < 0.0 {
        -0.125 * u * u
    } else if u <= 1.0 {
        0.25 * (u.powi(4) - 2.0 * u.powi(3) - 0.5 * u * u)
    } else {
        0.25 * (1.0 - 2.0 * u - 0.5 * u * u)
    }
}

/// `F'(u)`.
pub fn potential_df(u: f64) -> f64 {
    if u < 0.0 {
        0.5 * u
    } else if u <= 1.0 {
        0.5 * u * (1.0 - u) * (1.0 - 2.0 * u)
    } else {
        0.5 * (u - 1.0)
    }
}

/// `F_e'(u)`.
pub fn potential_dfe(u: f64) -> f64 {
    if u < 0.0 {
        -0.25 * u
    } else if u <= 1.0 {
        0.25 * (4.0 * u.powi(3) - 6.0 * u * u - u)
    } else {
        -0.25 * (u + 2.0)
    }
}

/// Split derivative `f(u_new, u_old) = F_i'(u_new) + F_e'(u_old)`.
pub fn splitting_f(u_new: f64, u_old: f64) -> f64 {
    0.75 * u_new + potential_dfe(u_old)
}

/// `∂f/∂u_new`, constant because `F_i` is quadratic.
pub const SPLITTING_F_DNEW: f64 = 0.75;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialEval {
    pub f: f64,
    pub f_i: f64,
    pub f_e: f64,
    pub split: f64,
}

impl PotentialEval {
    pub fn at(u_new: f64, u_old: f64) -> Self {
        Self {
            f: potential_f(u_new),
            f_i: potential_fi(u_new),
            f_e: potential_fe(u_new),
            split: splitting_f(u_new, u_old),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn potential_examples() {
        assert_eq!(potential_f(0.0), 0.0);
        assert_eq!(potential_f(1.0), 0.0);
        assert_eq!(potential_f(0.5), 0.015625);
        assert_eq!(potential_f(-1.0), 0.25);
        assert_eq!(potential_f(2.0), 0.25);
    }

    #[test]
    fn splitting_examples() {
        assert_eq!(splitting_f(0.5, 0.5), 0.0);
        assert_eq!(splitting_f(1.0, 1.0), 0.0);
        for &u in &[-3.0, 0.2, 1.7] {
            assert_eq!(splitting_f(u, 0.0), 0.75 * u);
        }
    }

    #[test]
    fn c1_across_breakpoints() {
        let h = 1e-7;
        for &b in &[0.0, 1.0] {
            let left = (potential_f(b) - potential_f(b - h)) / h;
            let right = (potential_f(b + h) - potential_f(b)) / h;
            assert!((left - right).abs() < 1e-6, "kink at {b}");
            assert!((potential_df(b) - left).abs() < 1e-6);
            let left = (potential_fe(b) - potential_fe(b - h)) / h;
            let right = (potential_fe(b + h) - potential_fe(b)) / h;
            assert!((left - right).abs() < 1e-6);
        }
    }

    #[test]
    fn fi_convex_fe_concave() {
        let grid: Vec<f64> = (0..=400).map(|i| -1.0 + i as f64 * 0.0075).collect();
        for w in grid.windows(3) {
            let second = |g: fn(f64) -> f64| g(w[0]) - 2.0 * g(w[1]) + g(w[2]);
            assert!(second(potential_fi) > 0.0);
            assert!(second(potential_fe) <= 1e-15);
        }
    }

    proptest! {
        #[test]
        fn split_sums_and_nonnegative(u in -5.0f64..5.0, old in -5.0f64..5.0) {
            let p = PotentialEval::at(u, old);
            prop_assert!((p.f_i + p.f_e - p.f).abs() <= 1e-14 * (1.0 + p.f_i.abs()));
            prop_assert!(p.f >= 0.0);
            let h = 1e-6;
            let fd = (potential_fe(u + h) - potential_fe(u - h)) / (2.0 * h);
            prop_assert!((fd - potential_dfe(u)).abs() < 1e-6 * (1.0 + u.abs().powi(3)));
            let fd = (potential_f(u + h) - potential_f(u - h)) / (2.0 * h);
            prop_assert!((fd - potential_df(u)).abs() < 1e-6 * (1.0 + u.abs().powi(3)));
            prop_assert_eq!(p.split, 0.75 * u + potential_dfe(old));
        }
    }
}
