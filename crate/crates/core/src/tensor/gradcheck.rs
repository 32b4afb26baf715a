//! Central finite-difference gradient checking.

/// Perturbation used for central differences.
pub const FD_EPS: f64 = 1e-3;
/// Maximum accepted relative error between analytic and numeric gradients.
pub const FD_REL_TOL: f64 = 1e-4;
/// Denominator floor so that gradients that are zero on both routes compare equal.
pub const FD_FLOOR: f64 = 1e-8;
/// Components below this fraction of the gradient's largest entry are judged
/// relative to that fraction, since central differences carry an O(ε²)
/// truncation error that swamps near-zero entries.
pub const FD_SCALE_FRACTION: f64 = 1e-2;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    scaled_error(analytic, numeric, 0.0)
}

fn scaled_error(analytic: f64, numeric: f64, scale: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(scale).max(FD_FLOOR)
}

/// `(f(x + εe_i) - f(x - εe_i)) / 2ε` for every coordinate.
pub fn numeric_gradient(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], eps: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + eps;
            let up = f(&probe);
            probe[i] = x[i] - eps;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * eps)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl GradCheck {
    pub fn passed(&self) -> bool {
        self.max_rel_error < FD_REL_TOL
    }
}

/// Compares an analytic gradient against central differences of `f`.
pub fn compare(analytic: &[f64], numeric: &[f64]) -> GradCheck {
    assert_eq!(analytic.len(), numeric.len(), "gradient lengths differ");
    let mut worst = GradCheck {
        max_rel_error: 0.0,
        worst_index: 0,
        analytic: analytic.first().copied().unwrap_or(0.0),
        numeric: numeric.first().copied().unwrap_or(0.0),
    };
    let largest = analytic.iter().chain(numeric).fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = FD_SCALE_FRACTION * largest;
    for (i, (&a, &n)) in analytic.iter().zip(numeric).enumerate() {
        let e = scaled_error(a, n, scale);
        if e > worst.max_rel_error {
            worst = GradCheck {
                max_rel_error: e,
                worst_index: i,
                analytic: a,
                numeric: n,
            };
        }
    }
    worst
}

/// Checks `grad_fn` (value and gradient at a point) against central differences.
pub fn check(mut grad_fn: impl FnMut(&[f64]) -> (f64, Vec<f64>), x: &[f64]) -> GradCheck {
    let (_, analytic) = grad_fn(x);
    let numeric = numeric_gradient(|p| grad_fn(p).0, x, FD_EPS);
    compare(&analytic, &numeric)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_passes() {
        let r = check(|x| (x[0].powi(3) + x[1] * x[0], vec![3.0 * x[0] * x[0] + x[1], x[0]]), &[1.3, -0.7]);
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn small_entries_judged_against_gradient_scale() {
        // 1e-8 off on a 1e-5 entry next to a unit entry is truncation noise.
        assert!(compare(&[1.0, 1e-5], &[1.0, 1.001e-5]).passed());
        // The same absolute miss on a gradient of that scale is not.
        assert!(!compare(&[1e-5], &[1.1e-5]).passed());
    }

    #[test]
    fn wrong_gradient_fails() {
        let r = check(|x| (x[0] * x[0], vec![x[0]]), &[2.0]);
        assert!(!r.passed());
    }
}
