use crate::scalar::Scalar;

/// Outcome of comparing analytic gradients with central differences.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheck<T> {
    /// `max_i |analytic_i - central_i| / (1 + |central_i|)`; NaN if either
    /// side produced NaN.
    pub max_rel_error: T,
    /// Coordinate where the maximum was attained.
    pub worst_index: usize,
}

impl<T: Scalar> GradCheck<T> {
    pub fn passes(&self, tol: T) -> bool {
        self.max_rel_error < tol
    }
}

/// Compares `analytic` against `(f(p + h e_i) - f(p - h e_i)) / 2h` for every
/// coordinate `i` of `params`.
pub fn finite_diff_check<T, F>(mut f: F, params: &[T], analytic: &[T], h: T) -> GradCheck<T>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    assert_eq!(params.len(), analytic.len(), "one analytic entry per parameter");
    assert!(h > T::zero(), "step must be positive");
    let mut point = params.to_vec();
    let mut worst = GradCheck {
        max_rel_error: T::zero(),
        worst_index: 0,
    };
    let two_h = h + h;
    for i in 0..point.len() {
        let orig = point[i];
        point[i] = orig + h;
        let up = f(&point);
        point[i] = orig - h;
        let down = f(&point);
        point[i] = orig;

        let central = (up - down) / two_h;
        let err = (analytic[i] - central).abs() / (T::one() + central.abs());
        if err.is_nan() {
            return GradCheck {
                max_rel_error: T::nan(),
                worst_index: i,
            };
        }
        if err > worst.max_rel_error {
            worst = GradCheck {
                max_rel_error: err,
                worst_index: i,
            };
        }
    }
    worst
}
