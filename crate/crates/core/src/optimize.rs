//! Derivative-free minimization (Nelder-Mead simplex).

use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions<T> {
    pub max_iters: usize,
    /// Converged when the spread of objective values across the simplex
    /// falls below `f_tol * (|f_best| + 1)`.
    pub f_tol: T,
}

impl<T: Real> Default for NelderMeadOptions<T> {
    fn default() -> Self {
        NelderMeadOptions {
            max_iters: 2000,
            f_tol: T::lit(1e-10),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum<T> {
    pub x: Vec<T>,
    pub f: T,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimize `f` starting from `x0`, with an axis-aligned initial simplex of
/// edge lengths `steps`. Non-finite objective values count as +inf, so the
/// objective may reject infeasible points by returning NaN or infinity.
pub fn nelder_mead<T, F>(f: F, x0: &[T], steps: &[T], opts: &NelderMeadOptions<T>) -> Minimum<T>
where
    T: Real,
    F: Fn(&[T]) -> T,
{
    let dim = x0.len();
    assert_eq!(steps.len(), dim, "one step per coordinate");
    let mut evaluations = 0usize;
    let mut eval = |x: &[T]| {
        evaluations += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            T::infinity()
        }
    };

    let mut simplex: Vec<(Vec<T>, T)> = Vec::with_capacity(dim + 1);
    let fx0 = eval(x0);
    simplex.push((x0.to_vec(), fx0));
    for i in 0..dim {
        let mut x = x0.to_vec();
        x[i] = x[i] + steps[i];
        let fx = eval(&x);
        simplex.push((x, fx));
    }

    let (alpha, gamma, rho, shrink) = (T::one(), T::lit(2.0), T::lit(0.5), T::lit(0.5));
    let mut iterations = 0;
    let mut converged = false;
    let dim_t = T::from_usize_lossy(dim);

    while iterations < opts.max_iters {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        if has_converged(&simplex, opts) {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![T::zero(); dim];
        for (x, _) in &simplex[..dim] {
            for (c, &xi) in centroid.iter_mut().zip(x) {
                *c = *c + xi / dim_t;
            }
        }
        let worst = simplex[dim].clone();
        let along = |t: T| -> Vec<T> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(&c, &w)| c + t * (c - w))
                .collect()
        };

        let xr = along(alpha);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(gamma);
            let fe = eval(&xe);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
            continue;
        }
        // contraction: outside if the reflection improved on the worst
        let (xc, fc) = if fr < worst.1 {
            let xc = along(alpha * rho);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < worst.1.min(fr) {
            simplex[dim] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x: Vec<T> = best
                .iter()
                .zip(&vertex.0)
                .map(|(&b, &v)| b + shrink * (v - b))
                .collect();
            let fx = eval(&x);
            *vertex = (x, fx);
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    let (x, fx) = simplex.swap_remove(0);
    Minimum {
        x,
        f: fx,
        iterations,
        evaluations,
        converged: converged && fx.is_finite(),
    }
}

fn has_converged<T: Real>(simplex: &[(Vec<T>, T)], opts: &NelderMeadOptions<T>) -> bool {
    let best = simplex[0].1;
    let worst = simplex[simplex.len() - 1].1;
    best.is_finite() && worst.is_finite() && worst - best <= opts.f_tol * (best.abs() + T::one())
}
