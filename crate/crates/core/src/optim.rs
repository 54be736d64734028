//! Derivative-free simplex (Nelder-Mead) minimization.
//!
//! Small hand-rolled implementation tuned for the low-dimensional,
//! non-smooth objectives produced by the measurement-basis search: the
//! global-discord landscape has kinks where the optimal projector branch
//! changes, so gradient methods are a poor fit.

/// Standard reflection/expansion/contraction/shrink coefficients.
const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    /// Convergence threshold on the spread of objective values across the
    /// simplex (absolute, in the objective's units).
    pub f_tol: f64,
    pub max_iterations: usize,
    /// Initial displacement added to each coordinate to form the simplex.
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            f_tol: 1e-9,
            max_iterations: 600,
            initial_step: 0.35,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    pub fn_evals: usize,
}

/// Minimizes `f` starting from `x0`.
///
/// Deterministic for a given starting point; ties in vertex ordering are
/// broken by insertion order.
pub fn minimize_simplex(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    opts: &SimplexOptions,
) -> SimplexResult {
    let n = x0.len();
    assert!(n > 0, "empty parameter vector");
    let mut evals = 0usize;
    let mut eval = |x: &[f64]| {
        evals += 1;
        f(x)
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.initial_step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();

    let mut iterations = 0usize;
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let (best, second_worst, worst) = (order[0], order[n - 1], order[n]);

        if values[worst] - values[best] <= opts.f_tol {
            converged = true;
            break;
        }

        // Centroid of all vertices except the worst.
        let mut centroid = vec![0.0; n];
        for (k, vertex) in simplex.iter().enumerate() {
            if k == worst {
                continue;
            }
            for (c, &x) in centroid.iter_mut().zip(vertex) {
                *c += x / n as f64;
            }
        }

        let blend = |a: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(&c, &w)| c + a * (c - w))
                .collect()
        };

        let reflected = blend(REFLECT);
        let f_reflected = eval(&reflected);
        if f_reflected < values[best] {
            let expanded = blend(EXPAND);
            let f_expanded = eval(&expanded);
            if f_expanded < f_reflected {
                simplex[worst] = expanded;
                values[worst] = f_expanded;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_reflected;
            }
            continue;
        }
        if f_reflected < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = f_reflected;
            continue;
        }

        let contracted = if f_reflected < values[worst] {
            blend(CONTRACT)
        } else {
            blend(-CONTRACT)
        };
        let f_contracted = eval(&contracted);
        if f_contracted < values[worst].min(f_reflected) {
            simplex[worst] = contracted;
            values[worst] = f_contracted;
            continue;
        }

        // Shrink everything toward the best vertex.
        let anchor = simplex[best].clone();
        for k in 0..=n {
            if k == best {
                continue;
            }
            for (x, &a) in simplex[k].iter_mut().zip(&anchor) {
                *x = a + SHRINK * (*x - a);
            }
            values[k] = eval(&simplex[k]);
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("non-empty simplex");
    SimplexResult {
        x: simplex[best].clone(),
        value: values[best],
        converged,
        iterations,
        fn_evals: evals,
    }
}
