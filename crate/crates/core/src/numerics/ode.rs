//! Dormand–Prince 5(4) integrator with PI step control and continuous output.

use super::{NumericsError, Result, DEFAULT_ODE_REL_TOL};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];

// fifth-order solution minus embedded fourth-order solution
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const PI_BETA: f64 = 0.04;

#[derive(Debug, Clone)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Interior times where the vector field may be discontinuous. Each one
    /// becomes a mandatory step boundary and the field is only ever sampled
    /// strictly inside the interval between two consecutive boundaries.
    pub breakpoints: Vec<f64>,
    pub max_steps: usize,
    pub max_step: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rel_tol: DEFAULT_ODE_REL_TOL,
            abs_tol: 1e-12,
            breakpoints: Vec::new(),
            max_steps: 1_000_000,
            max_step: None,
        }
    }
}

impl OdeOptions {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self { rel_tol, abs_tol, ..Self::default() }
    }

    pub fn breakpoints(mut self, breakpoints: impl IntoIterator<Item = f64>) -> Self {
        self.breakpoints = breakpoints.into_iter().collect();
        self
    }
}

#[derive(Debug, Clone)]
struct DenseSegment {
    // y0, y1 - y0, h f0 - (y1 - y0), (y1 - y0) - h f1 - cont[2], h Σ d_i k_i
    cont: [Vec<f64>; 5],
}

/// Accepted steps of an integration, with the continuous extension of every
/// step so the solution can be recovered anywhere in the span.
#[derive(Debug, Clone)]
pub struct OdeTrajectory {
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    dense: Vec<DenseSegment>,
}

impl OdeTrajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn span(&self) -> (f64, f64) {
        (self.times[0], self.times[self.times.len() - 1])
    }

    pub fn final_state(&self) -> &[f64] {
        &self.states[self.states.len() - 1]
    }

    /// State at `t` from the fourth-order continuous extension of the step
    /// containing `t`. Returns `None` outside the span.
    pub fn interpolate(&self, t: f64) -> Option<Vec<f64>> {
        let (t0, t1) = self.span();
        if !(t0..=t1).contains(&t) {
            return None;
        }
        let idx = match self.times.binary_search_by(|probe| probe.total_cmp(&t)) {
            Ok(i) => return Some(self.states[i].clone()),
            Err(i) => i - 1,
        };
        let h = self.times[idx + 1] - self.times[idx];
        let s = (t - self.times[idx]) / h;
        let s1 = 1.0 - s;
        let c = &self.dense[idx].cont;
        Some(
            (0..self.dim())
                .map(|i| c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * c[4][i]))))
                .collect(),
        )
    }
}

/// Integrate `dy/dt = rhs(t, y)` from `y0` over `span` with local error
/// control at (`opts.rel_tol`, `opts.abs_tol`).
///
/// The returned trajectory starts and ends exactly at the span endpoints.
pub fn integrate_adaptive<F>(rhs: F, y0: &[f64], span: (f64, f64), opts: &OdeOptions) -> Result<OdeTrajectory>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let (t0, t1) = span;
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(NumericsError::InvalidSpan { t0, t1 });
    }
    if !(opts.rel_tol > 0.0 && opts.abs_tol > 0.0) {
        return Err(NumericsError::InvalidTolerance { rel: opts.rel_tol, abs: opts.abs_tol });
    }
    if y0.is_empty() || y0.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::InvalidInitialState);
    }

    let mut bounds: Vec<f64> = opts.breakpoints.iter().copied().filter(|&b| b > t0 && b < t1).collect();
    bounds.sort_by(f64::total_cmp);
    bounds.dedup();
    bounds.insert(0, t0);
    bounds.push(t1);

    let n = y0.len();
    let mut traj = OdeTrajectory { times: vec![t0], states: vec![y0.to_vec()], dense: Vec::new() };
    let mut stepper = Stepper::new(n);
    let mut y = y0.to_vec();
    let mut h_guess: Option<f64> = None;
    let mut total_steps = 0usize;

    for seg in bounds.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        // sample strictly inside the segment so one-sided limits are used at jumps
        let lo = if a == t0 { a } else { a.next_up() };
        let hi = if b == t1 { b } else { b.next_down() };
        let eval = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
            let te = t.clamp(lo, hi);
            rhs(te, y, dy);
            if dy.iter().any(|v| !v.is_finite()) {
                return Err(NumericsError::NonFiniteRhs { t: te });
            }
            Ok(())
        };

        let mut t = a;
        eval(t, &y, &mut stepper.k[0])?;
        let mut h = match h_guess {
            Some(h) => h.min(b - a),
            None => initial_step(&eval, t, &y, &stepper.k[0], b - a, opts)?,
        };
        if let Some(hmax) = opts.max_step {
            h = h.min(hmax);
        }
        let mut fac_old = 1e-4_f64;

        while t < b {
            total_steps += 1;
            if total_steps > opts.max_steps {
                return Err(NumericsError::StepSizeUnderflow { t, h });
            }
            let mut last = false;
            if t + h >= b || (b - (t + h)) < 1e-12 * h {
                h = b - t;
                last = true;
            }
            if h <= 16.0 * f64::EPSILON * t.abs().max(1e-300) || h <= 0.0 {
                return Err(NumericsError::StepSizeUnderflow { t, h });
            }

            let err = stepper.attempt(&eval, t, &y, h, opts)?;
            if err <= 1.0 {
                let fac = (err.max(1e-10).powf(0.2 - PI_BETA * 0.75) * fac_old.powf(-PI_BETA) / SAFETY)
                    .clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                fac_old = err.max(1e-4);
                let t_new = if last { b } else { t + h };
                traj.dense.push(stepper.dense_segment(&y, h));
                y.copy_from_slice(&stepper.y_new);
                stepper.k[0] = stepper.k[6].clone();
                traj.times.push(t_new);
                traj.states.push(y.clone());
                t = t_new;
                let mut h_next = h / fac;
                if let Some(hmax) = opts.max_step {
                    h_next = h_next.min(hmax);
                }
                if !last {
                    h = h_next;
                }
                h_guess = Some(h_next);
            } else {
                let fac = (err.powf(0.2 - PI_BETA * 0.75) / SAFETY).min(1.0 / FAC_MIN);
                h /= fac;
            }
        }
    }
    Ok(traj)
}

struct Stepper {
    k: [Vec<f64>; 7],
    y_stage: Vec<f64>,
    y_new: Vec<f64>,
}

impl Stepper {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            y_stage: vec![0.0; n],
            y_new: vec![0.0; n],
        }
    }

    /// One trial step from (t, y) with k[0] = f(t, y) already set. Returns
    /// the scaled error norm; the fifth-order result is left in `y_new` and
    /// f(t + h, y_new) in `k[6]`.
    fn attempt<G>(&mut self, eval: &G, t: f64, y: &[f64], h: f64, opts: &OdeOptions) -> Result<f64>
    where
        G: Fn(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let n = y.len();
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, a) in A[s].iter().enumerate().take(s) {
                    acc += a * self.k[j][i];
                }
                self.y_stage[i] = y[i] + h * acc;
            }
            eval(t + C[s] * h, &self.y_stage, &mut self.k[s])?;
        }
        // stage 7 (FSAL) was evaluated at the fifth-order solution
        self.y_new.copy_from_slice(&self.y_stage);

        let mut sum = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (s, es) in E.iter().enumerate() {
                e += es * self.k[s][i];
            }
            let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(self.y_new[i].abs());
            sum += (h * e / sc).powi(2);
        }
        Ok((sum / n as f64).sqrt())
    }

    fn dense_segment(&self, y: &[f64], h: f64) -> DenseSegment {
        let n = y.len();
        let mut cont: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
        for i in 0..n {
            let dy = self.y_new[i] - y[i];
            let bspl = h * self.k[0][i] - dy;
            cont[0][i] = y[i];
            cont[1][i] = dy;
            cont[2][i] = bspl;
            cont[3][i] = dy - h * self.k[6][i] - bspl;
            let mut acc = 0.0;
            for (s, ds) in D.iter().enumerate() {
                acc += ds * self.k[s][i];
            }
            cont[4][i] = h * acc;
        }
        DenseSegment { cont }
    }
}

fn initial_step<G>(eval: &G, t: f64, y: &[f64], f0: &[f64], len: f64, opts: &OdeOptions) -> Result<f64>
where
    G: Fn(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len() as f64;
    let sc = |v: f64| opts.abs_tol + opts.rel_tol * v.abs();
    let d0 = (y.iter().map(|v| (v / sc(*v)).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0.iter().zip(y).map(|(f, v)| (f / sc(*v)).powi(2)).sum::<f64>() / n).sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(len);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(v, f)| v + h0 * f).collect();
    let mut f1 = vec![0.0; y.len()];
    eval(t + h0, &y1, &mut f1)?;
    let d2 = (f1.iter().zip(f0).zip(y).map(|((a, b), v)| ((a - b) / sc(*v)).powi(2)).sum::<f64>() / n).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(len))
}
