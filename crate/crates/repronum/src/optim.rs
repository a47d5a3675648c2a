//! Minimal Nelder-Mead simplex minimizer for low-dimensional,
//! derivative-free curve fitting.

use crate::numeric::Real;

pub struct NelderMeadResult<F> {
    pub x: Vec<F>,
    pub fx: F,
    pub evals: usize,
    pub converged: bool,
}

/// Minimize `f` starting from `x0` with an axis-aligned initial simplex
/// of edge `step`. Stops when the simplex diameter drops below `tol` or
/// after `max_evals` objective evaluations.
pub fn nelder_mead<F: Real>(
    mut f: impl FnMut(&[F]) -> F,
    x0: &[F],
    step: F,
    tol: F,
    max_evals: usize,
) -> NelderMeadResult<F> {
    let n = x0.len();
    let (alpha, gamma, rho, sigma) = (
        F::one(),
        F::from_f64_lossy(2.0),
        F::from_f64_lossy(0.5),
        F::from_f64_lossy(0.5),
    );

    let mut evals = 0usize;
    let eval = |f: &mut dyn FnMut(&[F]) -> F, x: &[F], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            F::infinity()
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<F>, F)> = Vec::with_capacity(n + 1);
    let fx0 = eval(&mut f, x0, &mut evals);
    simplex.push((x0.to_vec(), fx0));
    for d in 0..n {
        let mut x = x0.to_vec();
        x[d] = x[d] + step;
        let fx = eval(&mut f, &x, &mut evals);
        simplex.push((x, fx));
    }

    loop {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));

        let diameter = simplex
            .iter()
            .skip(1)
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(&a, &b)| (a - b).abs())
                    .fold(F::zero(), F::max)
            })
            .fold(F::zero(), F::max);
        if diameter < tol || evals >= max_evals {
            return NelderMeadResult {
                x: simplex[0].0.clone(),
                fx: simplex[0].1,
                evals,
                converged: diameter < tol,
            };
        }

        // centroid of all but the worst vertex
        let mut centroid = vec![F::zero(); n];
        for (x, _) in simplex.iter().take(n) {
            for (c, &xi) in centroid.iter_mut().zip(x) {
                *c = *c + xi;
            }
        }
        let n_f = F::from_usize_lossy(n);
        for c in &mut centroid {
            *c = *c / n_f;
        }

        let worst = simplex[n].0.clone();
        let blend = |a: F, b: F, w: F| a + w * (a - b);
        let reflected: Vec<F> = centroid
            .iter()
            .zip(&worst)
            .map(|(&c, &w)| blend(c, w, alpha))
            .collect();
        let fr = eval(&mut f, &reflected, &mut evals);

        if fr < simplex[0].1 {
            let expanded: Vec<F> = centroid
                .iter()
                .zip(&worst)
                .map(|(&c, &w)| blend(c, w, gamma))
                .collect();
            let fe = eval(&mut f, &expanded, &mut evals);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let contracted: Vec<F> = centroid
                .iter()
                .zip(&worst)
                .map(|(&c, &w)| c - rho * (c - w))
                .collect();
            let fc = eval(&mut f, &contracted, &mut evals);
            if fc < simplex[n].1 {
                simplex[n] = (contracted, fc);
            } else {
                // shrink toward the best vertex
                let best = simplex[0].0.clone();
                for (x, fx) in simplex.iter_mut().skip(1) {
                    for (xi, &bi) in x.iter_mut().zip(&best) {
                        *xi = bi + sigma * (*xi - bi);
                    }
                    *fx = eval(&mut f, x, &mut evals);
                }
            }
        }
    }
}
