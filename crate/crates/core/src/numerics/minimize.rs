//! Nelder–Mead simplex search with deterministic restarts.

use std::cmp::Ordering;

use super::{NumericsError, Result, DEFAULT_PARAM_TOL};

#[derive(Debug, Clone)]
pub struct MinimizeOptions {
    /// Convergence threshold on the simplex spread (max-norm distance of
    /// every vertex from the best one).
    pub tol: f64,
    pub max_evals: usize,
    /// Additional runs after the first, each re-inflating the simplex at
    /// the incumbent.
    pub restarts: usize,
    pub record_history: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_PARAM_TOL, max_evals: 20_000, restarts: 2, record_history: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best_params: Vec<f64>,
    pub best_cost: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub simplex_spread: f64,
    /// Every evaluated point with a finite cost, when requested.
    pub history: Vec<(Vec<f64>, f64)>,
}

#[derive(Clone)]
struct Vertex {
    x: Vec<f64>,
    f: f64,
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

fn vertex_cmp(a: &Vertex, b: &Vertex) -> Ordering {
    a.f.total_cmp(&b.f).then_with(|| lex_cmp(&a.x, &b.x))
}

struct Counter<'a, F> {
    objective: &'a F,
    evals: usize,
    max_evals: usize,
    history: Option<Vec<(Vec<f64>, f64)>>,
}

impl<F: Fn(&[f64]) -> f64> Counter<'_, F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.objective)(x);
        if v.is_finite() {
            if let Some(h) = self.history.as_mut() {
                h.push((x.to_vec(), v));
            }
            v
        } else {
            f64::INFINITY
        }
    }

    fn exhausted(&self) -> bool {
        self.evals >= self.max_evals
    }
}

/// Minimize `objective` starting from `initial`, with initial simplex edge
/// lengths `scale`. Non-finite objective values are treated as `+inf`, so
/// infeasible regions can be encoded by returning NaN or infinity.
///
/// The search is deterministic: identical inputs give identical results.
pub fn minimize<F>(objective: F, initial: &[f64], scale: &[f64], opts: &MinimizeOptions) -> Result<OptimizationResult>
where
    F: Fn(&[f64]) -> f64,
{
    let n = initial.len();
    if n == 0 || scale.len() != n || scale.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(NumericsError::InvalidScale);
    }
    let mut counter = Counter {
        objective: &objective,
        evals: 0,
        max_evals: opts.max_evals.max(n + 2),
        history: opts.record_history.then(Vec::new),
    };

    let mut best = Vertex { x: initial.to_vec(), f: counter.eval(initial) };
    if !best.f.is_finite() {
        let mut samples = vec![initial.to_vec()];
        for (i, s) in scale.iter().enumerate() {
            let mut x = initial.to_vec();
            x[i] += s;
            let f = counter.eval(&x);
            if f.is_finite() && (!best.f.is_finite() || f < best.f) {
                best = Vertex { x: x.clone(), f };
            }
            samples.push(x);
        }
        if !best.f.is_finite() {
            return Err(NumericsError::ObjectiveNowhereFinite { samples });
        }
    }

    let mut converged = false;
    let mut spread = f64::INFINITY;
    for run in 0..=opts.restarts {
        // alternate the inflation direction so restarts probe both sides
        let sign = if run % 2 == 0 { 1.0 } else { -1.0 };
        let (v, sp, conv) = nelder_mead(&mut counter, &best, scale, sign, opts.tol);
        let improved = vertex_cmp(&v, &best) == Ordering::Less;
        let gain = best.f - v.f;
        if improved {
            best = v;
        }
        spread = sp;
        converged = conv;
        if counter.exhausted() {
            converged = false;
            break;
        }
        if run > 0 && !(gain > 1e-15 * best.f.abs().max(1e-300)) {
            break;
        }
    }

    Ok(OptimizationResult {
        best_params: best.x,
        best_cost: best.f,
        evaluations: counter.evals,
        converged,
        simplex_spread: spread,
        history: counter.history.unwrap_or_default(),
    })
}

fn nelder_mead<F: Fn(&[f64]) -> f64>(
    counter: &mut Counter<'_, F>,
    start: &Vertex,
    scale: &[f64],
    sign: f64,
    tol: f64,
) -> (Vertex, f64, bool) {
    let n = start.x.len();
    let nf = n as f64;
    // dimension-adapted coefficients (reduce to 1, 2, 1/2, 1/2 for n = 2)
    let alpha = 1.0;
    let gamma = 1.0 + 2.0 / nf;
    let rho = 0.75 - 1.0 / (2.0 * nf);
    let sigma = 1.0 - 1.0 / nf;

    let mut simplex = vec![start.clone()];
    for i in 0..n {
        let mut x = start.x.clone();
        x[i] += sign * scale[i];
        let f = counter.eval(&x);
        simplex.push(Vertex { x, f });
    }

    let spread_of = |s: &[Vertex]| -> f64 {
        s[1..]
            .iter()
            .map(|v| v.x.iter().zip(&s[0].x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    };

    loop {
        simplex.sort_by(vertex_cmp);
        let spread = spread_of(&simplex);
        if spread <= tol {
            return (simplex[0].clone(), spread, true);
        }
        if counter.exhausted() {
            return (simplex[0].clone(), spread, false);
        }

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(&v.x) {
                *c += x / nf;
            }
        }
        let along = |t: f64, worst: &[f64]| -> Vec<f64> {
            centroid.iter().zip(worst).map(|(c, w)| c + t * (c - w)).collect()
        };
        let worst = simplex[n].x.clone();
        let f_best = simplex[0].f;
        let f_second = simplex[n - 1].f;
        let f_worst = simplex[n].f;

        let xr = along(alpha, &worst);
        let fr = counter.eval(&xr);
        if fr < f_best {
            let xe = along(alpha * gamma, &worst);
            let fe = counter.eval(&xe);
            simplex[n] = if fe < fr { Vertex { x: xe, f: fe } } else { Vertex { x: xr, f: fr } };
            continue;
        }
        if fr < f_second {
            simplex[n] = Vertex { x: xr, f: fr };
            continue;
        }
        let (xc, fc, accept) = if fr < f_worst {
            let xc = along(alpha * rho, &worst);
            let fc = counter.eval(&xc);
            let ok = fc <= fr;
            (xc, fc, ok)
        } else {
            let xc = along(-rho, &worst);
            let fc = counter.eval(&xc);
            let ok = fc < f_worst;
            (xc, fc, ok)
        };
        if accept {
            simplex[n] = Vertex { x: xc, f: fc };
            continue;
        }
        let best_x = simplex[0].x.clone();
        for v in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = best_x.iter().zip(&v.x).map(|(b, x)| b + sigma * (x - b)).collect();
            let f = counter.eval(&x);
            *v = Vertex { x, f };
        }
    }
}
