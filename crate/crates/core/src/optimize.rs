//! Derivative-free Nelder–Mead simplex minimization.

/// Termination and restart settings.
#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Stop when `f(worst) − f(best)` across the simplex falls below this.
    pub f_tolerance: f64,
    /// Also require every vertex within `x_tolerance·(1 + |x|)` of the best
    /// one, so a simplex straddling a minimum with equal values keeps going.
    pub x_tolerance: f64,
    /// Iteration cap per run (a restart gets a fresh budget).
    pub max_iterations: usize,
    /// Number of restarts from a freshly built simplex around the best point
    /// when a run stalls.
    pub restarts: usize,
    /// Relative size of the initial simplex edges.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            f_tolerance: 1e-10,
            x_tolerance: 1e-6,
            max_iterations: 2000,
            restarts: 1,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

// Standard coefficients: reflection, expansion, contraction, shrink.
const ALPHA: f64 = 1.0;
const GAMMA: f64 = 2.0;
const RHO: f64 = 0.5;
const SIGMA: f64 = 0.5;

fn initial_simplex(x0: &[f64], step: f64) -> Vec<Vec<f64>> {
    let mut simplex = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut v = x0.to_vec();
        v[i] += if v[i] != 0.0 { step * v[i].abs() } else { step };
        simplex.push(v);
    }
    simplex
}

struct Run {
    best: Vec<f64>,
    f: f64,
    iterations: usize,
    evaluations: usize,
    converged: bool,
}

fn run<F: FnMut(&[f64]) -> f64>(f: &mut F, x0: &[f64], opts: &NelderMeadOptions) -> Run {
    let n = x0.len();
    let mut simplex = initial_simplex(x0, opts.initial_step);
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut evaluations = values.len();
    let mut iterations = 0;
    let mut converged = false;

    let mut order: Vec<usize> = (0..=n).collect();
    while iterations < opts.max_iterations {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let (best, worst, second) = (order[0], order[n], order[n - 1]);
        let collapsed = order[1..].iter().all(|&i| {
            (0..n)
                .all(|d| (simplex[i][d] - simplex[best][d]).abs() <= opts.x_tolerance * (1.0 + simplex[best][d].abs()))
        });
        if (values[worst] - values[best]).abs() < opts.f_tolerance && collapsed {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|d| order[..n].iter().map(|&i| simplex[i][d]).sum::<f64>() / n as f64)
            .collect();
        let along = |coef: f64| -> Vec<f64> {
            (0..n)
                .map(|d| centroid[d] + coef * (simplex[worst][d] - centroid[d]))
                .collect()
        };

        let reflected = along(-ALPHA);
        let fr = f(&reflected);
        evaluations += 1;
        if fr < values[best] {
            let expanded = along(-GAMMA);
            let fe = f(&expanded);
            evaluations += 1;
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second] {
            simplex[worst] = reflected;
            values[worst] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[worst] {
            let c = along(-RHO);
            let fc = f(&c);
            (c, fc)
        } else {
            let c = along(RHO);
            let fc = f(&c);
            (c, fc)
        };
        evaluations += 1;
        if fc < values[worst].min(fr) {
            simplex[worst] = contracted;
            values[worst] = fc;
            continue;
        }
        let anchor = simplex[best].clone();
        for &i in &order[1..] {
            for d in 0..n {
                simplex[i][d] = anchor[d] + SIGMA * (simplex[i][d] - anchor[d]);
            }
            values[i] = f(&simplex[i]);
            evaluations += 1;
        }
    }

    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    Run {
        best: simplex[best].clone(),
        f: values[best],
        iterations,
        evaluations,
        converged,
    }
}

/// Minimizes `f` starting from `x0`. A run that hits the iteration cap is
/// restarted (up to `opts.restarts` times) from a new simplex built around the
/// best point found so far.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    assert!(!x0.is_empty(), "at least one parameter");
    let mut r = run(&mut f, x0, opts);
    let mut iterations = r.iterations;
    let mut evaluations = r.evaluations;
    let mut restarts_left = opts.restarts;
    while !r.converged && restarts_left > 0 {
        restarts_left -= 1;
        let again = run(&mut f, &r.best, opts);
        iterations += again.iterations;
        evaluations += again.evaluations;
        if again.f <= r.f || again.converged {
            r = again;
        }
    }
    Minimum {
        x: r.best,
        f: r.f,
        iterations,
        evaluations,
        converged: r.converged,
    }
}
