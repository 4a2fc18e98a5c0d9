//! Derivative-free local refinement.

/// Outcome of a local minimization.
#[derive(Debug, Clone)]
pub struct LocalMin {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: u64,
}

/// Nelder-Mead downhill simplex with standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
///
/// Stops after `max_iter` iterations or once the spread of simplex values
/// falls below `ftol`. The returned value is never worse than `f(x0)`.
pub fn nelder_mead<F>(f: &F, x0: &[f64], step: f64, max_iter: usize, ftol: f64) -> LocalMin
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let n = x0.len();
    let mut evaluations = 0u64;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        f(x)
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = eval(&x);
        simplex.push((x, v));
    }

    let mut centroid = vec![0.0; n];
    let point = |c: &[f64], w: &[f64], t: f64| -> Vec<f64> {
        c.iter().zip(w).map(|(ci, wi)| ci + t * (wi - ci)).collect()
    };

    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[n].1);
        if (worst - best).abs() <= ftol {
            break;
        }
        centroid.iter_mut().for_each(|c| *c = 0.0);
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }

        let reflected = point(&centroid, &simplex[n].0, -1.0);
        let fr = eval(&reflected);
        if fr < simplex[0].1 {
            let expanded = point(&centroid, &simplex[n].0, -2.0);
            let fe = eval(&expanded);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr < simplex[n].1 {
            let c = point(&centroid, &simplex[n].0, -0.5);
            let v = eval(&c);
            (c, v)
        } else {
            let c = point(&centroid, &simplex[n].0, 0.5);
            let v = eval(&c);
            (c, v)
        };
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (contracted, fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for entry in simplex.iter_mut().skip(1) {
            let x = point(&anchor, &entry.0, 0.5);
            let v = eval(&x);
            *entry = (x, v);
        }
    }

    let (x, value) = simplex
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("simplex is non-empty");
    LocalMin {
        x,
        value,
        evaluations,
    }
}

/// Repeated Nelder-Mead rounds from the incumbent with a shrinking initial step.
///
/// Each round restarts the simplex around the best point found so far, which
/// recovers from the premature collapse plain Nelder-Mead is prone to.
pub fn refine<F>(f: &F, x0: &[f64], step: f64, iterations: usize, ftol: f64) -> LocalMin
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let mut best = LocalMin {
        x: x0.to_vec(),
        value: f(x0),
        evaluations: 1,
    };
    let mut step = step;
    let rounds = 6;
    for _ in 0..rounds {
        let r = nelder_mead(f, &best.x, step, iterations, ftol * 1e-3);
        let evaluations = best.evaluations + r.evaluations;
        let gain = best.value - r.value;
        if r.value < best.value {
            best = LocalMin { evaluations, ..r };
        } else {
            best.evaluations = evaluations;
        }
        if gain.abs() <= ftol {
            step *= 0.25;
            if step < 1e-9 {
                break;
            }
        }
    }
    best
}
