//! Bounded one-dimensional minimization.
//!
//! A uniform grid scan locates the best basin, then a Newton iteration on the
//! derivative refines it inside the bracketing grid cell. Newton steps that
//! leave the bracket, or that are taken where the curvature is not positive,
//! are replaced by bisection on the sign of the derivative. The result is
//! never worse than the best grid sample.

/// Outcome of [`minimize_on_interval`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMinimum {
    pub x: f64,
    pub value: f64,
    /// Newton/bisection iterations spent in the refinement stage.
    pub iterations: usize,
}

const MAX_REFINE_ITERS: usize = 200;

/// Minimizes `objective` over `[lo, hi]`.
///
/// `objective(x)` returns `(f, f', f'')`. `grid` is the number of grid cells
/// of the initial scan and must be at least 2.
pub fn minimize_on_interval<F>(objective: F, lo: f64, hi: f64, grid: usize) -> ScalarMinimum
where
    F: Fn(f64) -> (f64, f64, f64),
{
    debug_assert!(lo < hi && grid >= 2);
    let step = (hi - lo) / grid as f64;
    let at = |i: usize| if i == grid { hi } else { lo + step * i as f64 };

    let mut best_i = 0;
    let mut best_f = f64::INFINITY;
    for i in 0..=grid {
        let (f, _, _) = objective(at(i));
        if f < best_f {
            best_f = f;
            best_i = i;
        }
    }
    let grid_best = ScalarMinimum { x: at(best_i), value: best_f, iterations: 0 };

    let mut a = at(best_i.saturating_sub(1));
    let mut b = at((best_i + 1).min(grid));
    let (_, ga, _) = objective(a);
    let (_, gb, _) = objective(b);
    if !(ga < 0.0 && gb > 0.0) {
        // No interior stationary point in the cell; the grid sample stands.
        return grid_best;
    }

    let mut x = grid_best.x;
    let mut iterations = 0;
    while iterations < MAX_REFINE_ITERS {
        iterations += 1;
        let (_, g, h) = objective(x);
        if g == 0.0 {
            break;
        }
        if g < 0.0 {
            a = x;
        } else {
            b = x;
        }
        let newton = x - g / h;
        let next = if h > 0.0 && newton > a && newton < b { newton } else { 0.5 * (a + b) };
        let moved = (next - x).abs();
        x = next;
        if moved <= 4.0 * f64::EPSILON * x.abs().max(1.0) || b - a <= f64::EPSILON * x.abs().max(1.0) {
            break;
        }
    }

    let (value, _, _) = objective(x);
    if value <= grid_best.value {
        ScalarMinimum { x, value, iterations }
    } else {
        ScalarMinimum { iterations, ..grid_best }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_interior_minimum() {
        let m = minimize_on_interval(|x| ((x - 0.3).powi(2), 2.0 * (x - 0.3), 2.0), 0.0, 1.0, 10);
        assert!((m.x - 0.3).abs() < 1e-14);
    }

    #[test]
    fn boundary_minimum_returns_endpoint() {
        let m = minimize_on_interval(|x| (x, 1.0, 0.0), 0.0, 1.0, 16);
        assert_eq!(m.x, 0.0);
    }

    #[test]
    fn nonconvex_cell_falls_back_to_bisection() {
        // f = x^4 - x^2 has minima at +-1/sqrt(2); curvature is negative near 0.
        let f = |x: f64| (x.powi(4) - x * x, 4.0 * x.powi(3) - 2.0 * x, 12.0 * x * x - 2.0);
        let m = minimize_on_interval(f, 0.05, 2.0, 3);
        assert!((m.x - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12, "{m:?}");
    }
}
