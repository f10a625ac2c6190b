//! Dissipative spin-1/2 rotation under strong transverse relaxation.
//!
//! Time is measured in units of `1/R`. With `S = r(sinθ cosφ, sinθ sinφ, cosθ)`,
//! `a = ln r` and the field kept parallel to the transverse spin (`φ`
//! constant), the Bloch equations reduce to
//!
//! ```text
//! ȧ = −sin²θ,    θ̇ = B − sinθ cosθ,
//! ```
//!
//! and the cost is `E = ∫ B²/2 dt`. Designs either prescribe `θ(t)` and read
//! off `B`, or follow the energy-optimal trajectory with the constant
//! costate `p₁` fixed by the target radius.

use std::f64::consts::PI;

use crate::ansatz::{fit_constrained_polynomial, make_tanh_tan, BoundaryCondition, Polynomial, ShapeFunction};
use crate::numerics::{
    find_root, integrate_adaptive, minimize, quadrature, MinimizeOptions, OdeOptions, OdeTrajectory, OptimizationResult,
};
use crate::{linspace, Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-3;

const FUNCTIONAL_REL_TOL: f64 = 1e-12;
const ROOT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinSpec {
    /// Target polar angle, radians.
    pub theta_f: f64,
    /// Target spin length.
    pub r_f: f64,
    /// Angular offset keeping the optimal trajectory off the poles.
    pub epsilon: f64,
    /// Final time in units of `1/R`; the optimal-control time when absent.
    pub t_f: Option<f64>,
}

impl SpinSpec {
    pub fn new(theta_f: f64, r_f: f64) -> Result<Self> {
        let s = Self { theta_f, r_f, epsilon: DEFAULT_EPSILON, t_f: None };
        s.validate()?;
        Ok(s)
    }

    pub fn with_final_time(self, t_f: f64) -> Self {
        Self { t_f: Some(t_f), ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta_f > 0.0 && self.theta_f <= PI) {
            return Err(Error::InvalidSpec(format!("theta_f must lie in (0, π], got {}", self.theta_f)));
        }
        if !(self.r_f > 0.0 && self.r_f < 1.0) {
            return Err(Error::InvalidSpec(format!("r_f must lie in (0, 1), got {}", self.r_f)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.1) {
            return Err(Error::InvalidSpec(format!("epsilon must lie in (0, 0.1), got {}", self.epsilon)));
        }
        if let Some(t) = self.t_f {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidSpec(format!("t_f must be positive and finite, got {t}")));
            }
        }
        Ok(())
    }

    pub fn log_radius(&self) -> f64 {
        self.r_f.ln()
    }

    /// The given final time, or the optimal-control one.
    pub fn final_time(&self) -> Result<f64> {
        match self.t_f {
            Some(t) => Ok(t),
            None => oct_final_time(self),
        }
    }

    /// Last angle reached by the optimal trajectory.
    pub fn oct_final_angle(&self) -> f64 {
        self.theta_f.min(PI - self.epsilon)
    }
}

/// `r(θ) = (cosθ + √(2p₁ + cos²θ)) / (1 + √(2p₁ + 1))` along the optimal
/// trajectory.
pub fn oct_radius(theta: f64, p1: f64) -> f64 {
    let c = theta.cos();
    (c + (2.0 * p1 + c * c).sqrt()) / (1.0 + (2.0 * p1 + 1.0).sqrt())
}

/// Optimal field `p₂(θ) = (√(2p₁ + cos²θ) + cosθ) sinθ`.
pub fn oct_field(theta: f64, p1: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    ((2.0 * p1 + c * c).sqrt() + c) * s
}

/// `θ̇ = sinθ √(cos²θ + 2p₁)` along the optimal trajectory.
pub fn oct_angular_velocity(theta: f64, p1: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    s * (c * c + 2.0 * p1).sqrt()
}

/// Costate `p₁` with `oct_radius(theta_f, p₁) = r_f`.
///
/// Solving the radius relation for `A = √(2p₁ + 1)` gives
/// `A = (1 + r² − 2rc)/(1 − r²)` with `c = cos θ_f`, hence
/// `p₁ = 2r(r − c)(1 − rc)/(1 − r²)²`. Targets with `r_f ≤ max(c, 0)`
/// cannot be reached.
pub fn solve_p1(theta_f: f64, r_f: f64) -> Result<f64> {
    let c = theta_f.cos();
    let rmin = c.max(0.0);
    if !(r_f > rmin && r_f < 1.0) {
        return Err(Error::Unreachable { target: r_f, rmin, rmax: 1.0 });
    }
    let d = 1.0 - r_f * r_f;
    Ok(2.0 * r_f * (r_f - c) * (1.0 - r_f * c) / (d * d))
}

/// Optimal-control duration `∫ dθ/θ̇` from `ε` to the final angle.
pub fn oct_final_time(spec: &SpinSpec) -> Result<f64> {
    spec.validate()?;
    let p1 = solve_p1(spec.theta_f, spec.r_f)?;
    let upper = spec.oct_final_angle();
    if upper <= spec.epsilon {
        return Err(Error::InvalidSpec(format!("theta_f = {} does not exceed epsilon", spec.theta_f)));
    }
    Ok(quadrature(|th| 1.0 / oct_angular_velocity(th, p1), spec.epsilon, upper, FUNCTIONAL_REL_TOL)?)
}

fn is_close(x: f64, y: f64) -> bool {
    (x - y).abs() <= 1e-12 * y.abs()
}

/// Closed-form optimal duration for `θ_f ∈ {π/2, π}`.
pub fn oct_final_time_closed_form(spec: &SpinSpec) -> Option<f64> {
    let (r, eps) = (spec.r_f, spec.epsilon);
    if is_close(spec.theta_f, PI / 2.0) {
        let r2 = r * r;
        Some((1.0 - r2) / (1.0 + r2) * (((1.0 + r2) / r).ln() - eps.ln()))
    } else if is_close(spec.theta_f, PI) {
        Some((1.0 - r) / (1.0 + r) * (((1.0 + r) * (1.0 + r) / r).ln() - 2.0 * eps.ln()))
    } else {
        None
    }
}

/// Optimal energy `∫ p₂²/2 dt = ∫₀^{θ_f} sinθ (q + cosθ)²/(2q) dθ` with
/// `q = √(2p₁ + cos²θ)`. The integrand is regular at the poles, so no
/// offset is applied.
pub fn oct_energy(spec: &SpinSpec) -> Result<f64> {
    spec.validate()?;
    let p1 = solve_p1(spec.theta_f, spec.r_f)?;
    let integrand = |th: f64| {
        let (s, c) = th.sin_cos();
        let q = (2.0 * p1 + c * c).sqrt();
        s * (q + c) * (q + c) / (2.0 * q)
    };
    Ok(quadrature(integrand, 0.0, spec.theta_f, FUNCTIONAL_REL_TOL)?)
}

/// Closed-form optimal energy for `θ_f ∈ {π/2, π}`.
pub fn oct_energy_closed_form(spec: &SpinSpec) -> Option<f64> {
    let r = spec.r_f;
    if is_close(spec.theta_f, PI / 2.0) {
        Some(1.0 / (1.0 - r * r))
    } else if is_close(spec.theta_f, PI) {
        Some((1.0 + r) / (1.0 - r))
    } else {
        None
    }
}

/// `B(t) = θ̇ + sinθ cosθ` for a prescribed angle.
pub fn field_from_theta(shape: &ShapeFunction) -> impl Fn(f64) -> f64 + '_ {
    move |t| {
        let d = shape.eval_unchecked(t);
        d.d1 + d.value.sin() * d.value.cos()
    }
}

/// `a(t_f) = −∫₀^{t_f} sin²θ dt`.
pub fn final_log_radius(shape: &ShapeFunction, tf: f64) -> Result<f64> {
    let g = |t: f64| shape.eval_unchecked(t).value.sin().powi(2);
    Ok(-quadrature(g, 0.0, tf, FUNCTIONAL_REL_TOL)?)
}

/// `E = ∫₀^{t_f} B²/2 dt`.
pub fn energy_functional(shape: &ShapeFunction, tf: f64) -> Result<f64> {
    let b = field_from_theta(shape);
    Ok(quadrature(|t| 0.5 * b(t).powi(2), 0.0, tf, FUNCTIONAL_REL_TOL)?)
}

/// Inverse-engineering families for `θ(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpinFamily {
    /// `θ = a₁t − (a₁t_f − θ_f)t²/t_f²`.
    Quadratic,
    /// `θ = a₁t + a₂t² + a₃t³` with `a₃` given and `a₂` fixed by `θ(t_f)`.
    Cubic { a3: f64 },
    /// Ninth-order flip, flat to second order at both ends and through
    /// `θ_f/2` at mid-time.
    NinthFlip,
    /// `θ_f/2 + (θ_f/2)·tanh(a₁ tan(π/(a₅t_f)(t − t_f/2)))`; `a₅` is optimized
    /// when not given.
    TanhFlip { width: Option<f64> },
}

impl SpinFamily {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Quadratic => "p2",
            Self::Cubic { .. } => "p3",
            Self::NinthFlip => "p9",
            Self::TanhFlip { .. } => "tanh",
        }
    }

    /// Scan grid for the parameter that is solved for the target radius.
    fn radius_grid(&self) -> Vec<f64> {
        match self {
            Self::Quadratic | Self::Cubic { .. } => linspace(-5.0, 5.0, 201),
            Self::NinthFlip => linspace(-1000.0, 3000.0, 81),
            Self::TanhFlip { .. } => linspace(0.05, 20.0, 400),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpinMethod {
    Oct,
    Ansatz(SpinFamily),
}

impl SpinMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Oct => "oct",
            Self::Ansatz(f) => f.tag(),
        }
    }
}

pub fn quadratic_shape(theta_f: f64, tf: f64, a1: f64) -> Result<ShapeFunction> {
    let conds = [BoundaryCondition::new(0, 0.0, 0.0), BoundaryCondition::new(0, tf, theta_f)];
    Ok(fit_constrained_polynomial(2, &conds, &[(1, a1 * tf)].into(), tf)?)
}

pub fn cubic_shape(theta_f: f64, tf: f64, a1: f64, a3: f64) -> Result<ShapeFunction> {
    let conds = [BoundaryCondition::new(0, 0.0, 0.0), BoundaryCondition::new(0, tf, theta_f)];
    Ok(fit_constrained_polynomial(3, &conds, &[(1, a1 * tf), (3, a3 * tf.powi(3))].into(), tf)?)
}

/// `θ_f(10τ³ − 15τ⁴ + 6τ⁵) + τ³(1 − τ)³(τ − ½)(c₀ + c₁h + c₂h²)` with
/// `h = τ − ½`. Every member meets the seven flip conditions; `c` spans the
/// remaining three degrees of freedom.
pub fn ninth_flip_shape(theta_f: f64, tf: f64, c: [f64; 3]) -> Result<ShapeFunction> {
    let mul = |a: &[f64], b: &[f64]| {
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    };
    let cube = [0.0, 0.0, 0.0, 1.0];
    let one_minus_cube = [1.0, -3.0, 3.0, -1.0];
    let h = [-0.5, 1.0];
    let quad = [c[0] - 0.5 * c[1] + 0.25 * c[2], c[1] - c[2], c[2]];
    let bump = mul(&mul(&mul(&cube, &one_minus_cube), &h), &quad);
    let mut coeffs = vec![0.0, 0.0, 0.0, 10.0 * theta_f, -15.0 * theta_f, 6.0 * theta_f];
    coeffs.resize(bump.len(), 0.0);
    for (a, b) in coeffs.iter_mut().zip(&bump) {
        *a += b;
    }
    Ok(ShapeFunction::Polynomial(Polynomial::new(coeffs, tf)?))
}

pub fn tanh_flip_shape(theta_f: f64, tf: f64, a1: f64, width: f64) -> Result<ShapeFunction> {
    Ok(make_tanh_tan(0.5 * theta_f, 0.5 * theta_f, a1, width, tf)?)
}

const DEFAULT_TANH_WIDTH: f64 = 1.1;

/// Largest `θ(0)` accepted when the tanh width is optimized. Wide shapes
/// start visibly off the pole and would otherwise buy energy with a
/// violated boundary condition.
pub const TANH_MAX_ENDPOINT_MISS: f64 = 1e-6;

/// Member of `family`. `params` lists the solved parameter first: `[a₁]`
/// for the polynomials, `[c₀, c₁, c₂]` for the ninth-order flip,
/// `[a₁, a₅]` for tanh.
pub fn family_shape(family: SpinFamily, theta_f: f64, tf: f64, params: &[f64]) -> Result<ShapeFunction> {
    let need = match family {
        SpinFamily::Quadratic | SpinFamily::Cubic { .. } => 1,
        SpinFamily::NinthFlip => 3,
        SpinFamily::TanhFlip { .. } => 2,
    };
    if params.len() != need {
        return Err(Error::InvalidSpec(format!(
            "family {} takes {need} parameters, got {}",
            family.tag(),
            params.len()
        )));
    }
    match family {
        SpinFamily::Quadratic => quadratic_shape(theta_f, tf, params[0]),
        SpinFamily::Cubic { a3 } => cubic_shape(theta_f, tf, params[0], a3),
        SpinFamily::NinthFlip => ninth_flip_shape(theta_f, tf, [params[0], params[1], params[2]]),
        SpinFamily::TanhFlip { .. } => tanh_flip_shape(theta_f, tf, params[0], params[1]),
    }
}

/// Prescribed angle, or the optimal trajectory integrated from `θ = ε`.
#[derive(Debug, Clone)]
pub enum ThetaPath {
    Shape(ShapeFunction),
    /// State `[θ, a]` with `a(0) = 0`.
    Oct { p1: f64, trajectory: OdeTrajectory },
}

#[derive(Debug, Clone)]
pub struct SpinProtocol {
    pub method: SpinMethod,
    /// Target with `t_f` filled in.
    pub spec: SpinSpec,
    pub theta: ThetaPath,
    /// Family parameters, solved one first; empty for the optimal protocol.
    pub params: Vec<f64>,
    pub energy: f64,
    pub final_log_radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinSample {
    pub t: f64,
    pub theta: f64,
    pub b: f64,
    pub a: f64,
}

impl SpinProtocol {
    pub fn tf(&self) -> f64 {
        self.spec.t_f.expect("protocol specs carry t_f")
    }

    /// `(θ, θ̇)` at `t`.
    pub fn angle(&self, t: f64) -> (f64, f64) {
        match &self.theta {
            ThetaPath::Shape(s) => {
                let d = s.eval_unchecked(t);
                (d.value, d.d1)
            }
            ThetaPath::Oct { p1, trajectory } => {
                let th = oct_state(trajectory, t)[0];
                (th, oct_angular_velocity(th, *p1))
            }
        }
    }

    pub fn field(&self, t: f64) -> f64 {
        match &self.theta {
            ThetaPath::Shape(s) => field_from_theta(s)(t),
            ThetaPath::Oct { p1, trajectory } => oct_field(oct_state(trajectory, t)[0], *p1),
        }
    }

    /// `θ̇ − B + sinθ cosθ`.
    pub fn field_residual(&self, t: f64) -> f64 {
        let (th, dth) = self.angle(t);
        dth - self.field(t) + th.sin() * th.cos()
    }

    pub fn final_radius(&self) -> f64 {
        self.final_log_radius.exp()
    }

    /// Energy relative to the optimal protocol for the same target.
    pub fn energy_ratio(&self) -> Result<f64> {
        Ok(self.energy / oct_energy(&self.spec)?)
    }

    /// Uniform samples of `θ`, `B` and `a = ln r`.
    pub fn sample(&self, points: usize) -> Result<Vec<SpinSample>> {
        let tf = self.tf();
        let grid = linspace(0.0, tf, points.max(2));
        let log_radius: Box<dyn Fn(f64) -> f64 + '_> = match &self.theta {
            ThetaPath::Oct { trajectory, .. } => Box::new(move |t| oct_state(trajectory, t)[1]),
            ThetaPath::Shape(s) => {
                let rhs = |t: f64, _: &[f64], dy: &mut [f64]| dy[0] = -s.eval_unchecked(t).value.sin().powi(2);
                let traj = integrate_adaptive(rhs, &[0.0], (0.0, tf), &OdeOptions::default())?;
                Box::new(move |t| traj.interpolate(t).map_or(f64::NAN, |y| y[0]))
            }
        };
        Ok(grid
            .into_iter()
            .map(|t| SpinSample { t, theta: self.angle(t).0, b: self.field(t), a: log_radius(t) })
            .collect())
    }
}

fn oct_state(trajectory: &OdeTrajectory, t: f64) -> Vec<f64> {
    let (t0, t1) = trajectory.span();
    trajectory.interpolate(t.clamp(t0, t1)).expect("clamped into span")
}

/// Energy-optimal protocol: `θ` follows `θ̇ = sinθ√(cos²θ + 2p₁)` from `ε`
/// and reaches the final angle at the optimal time.
pub fn oct_protocol(spec: &SpinSpec) -> Result<SpinProtocol> {
    spec.validate()?;
    let p1 = solve_p1(spec.theta_f, spec.r_f)?;
    let tf = oct_final_time(spec)?;
    let rhs = |_: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = oct_angular_velocity(y[0], p1);
        dy[1] = -y[0].sin().powi(2);
    };
    let trajectory = integrate_adaptive(rhs, &[spec.epsilon, 0.0], (0.0, tf), &OdeOptions::with_tolerances(1e-12, 1e-14))?;
    let final_log_radius = trajectory.final_state()[1];
    Ok(SpinProtocol {
        method: SpinMethod::Oct,
        spec: spec.with_final_time(tf),
        theta: ThetaPath::Oct { p1, trajectory },
        params: vec![],
        energy: oct_energy(spec)?,
        final_log_radius,
    })
}

/// Protocol for one family member, without any radius constraint.
pub fn ansatz_protocol(spec: &SpinSpec, family: SpinFamily, params: &[f64]) -> Result<SpinProtocol> {
    spec.validate()?;
    let tf = spec.final_time()?;
    let shape = family_shape(family, spec.theta_f, tf, params)?;
    let energy = energy_functional(&shape, tf)?;
    let final_log_radius = final_log_radius(&shape, tf)?;
    Ok(SpinProtocol {
        method: SpinMethod::Ansatz(family),
        spec: spec.with_final_time(tf),
        theta: ThetaPath::Shape(shape),
        params: params.to_vec(),
        energy,
        final_log_radius,
    })
}

/// Extreme final radii reachable by `family` at fixed `t_f` when its solved
/// parameter is scanned (other parameters at their defaults: `c₁ = c₂ = 0`,
/// `a₅` given or 1.1).
pub fn reachable_range(spec: &SpinSpec, family: SpinFamily) -> Result<(f64, f64)> {
    spec.validate()?;
    let tf = spec.final_time()?;
    let radius = |x: f64| -> f64 {
        family_shape(family, spec.theta_f, tf, &full_params(family, x, &[]))
            .and_then(|s| final_log_radius(&s, tf))
            .map_or(f64::NAN, f64::exp)
    };
    let grid = family.radius_grid();
    let values: Vec<f64> = grid.iter().map(|&x| radius(x)).collect();
    let step = grid[1] - grid[0];
    let refine = |sign: f64| -> Result<f64> {
        let (i, _) = values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .min_by(|a, b| (sign * a.1).total_cmp(&(sign * b.1)))
            .ok_or_else(|| Error::Domain(format!("family {} is nowhere defined on its scan", family.tag())))?;
        let opts = MinimizeOptions { tol: 1e-12, restarts: 1, ..MinimizeOptions::default() };
        let r = minimize(|x: &[f64]| sign * radius(x[0]), &[grid[i]], &[0.5 * step], &opts)?;
        Ok(sign * r.best_cost)
    };
    Ok((refine(1.0)?, refine(-1.0)?))
}

/// Full parameter vector from the solved value and the outer ones.
fn full_params(family: SpinFamily, solved: f64, outer: &[f64]) -> Vec<f64> {
    match family {
        SpinFamily::Quadratic | SpinFamily::Cubic { .. } => vec![solved],
        SpinFamily::NinthFlip => vec![solved, outer.first().copied().unwrap_or(0.0), outer.get(1).copied().unwrap_or(0.0)],
        SpinFamily::TanhFlip { width } => {
            vec![solved, outer.first().copied().or(width).unwrap_or(DEFAULT_TANH_WIDTH)]
        }
    }
}

/// Lowest-energy member meeting the target radius with the outer parameters
/// held fixed, as `(energy, solved value)`; `None` when the scan finds no
/// sign change of the radius residual.
fn constrained_minimum(spec: &SpinSpec, family: SpinFamily, tf: f64, outer: &[f64]) -> Option<(f64, f64)> {
    let target = spec.log_radius();
    let check_start = matches!(family, SpinFamily::TanhFlip { width: None });
    let shape = |x: f64| {
        family_shape(family, spec.theta_f, tf, &full_params(family, x, outer))
            .ok()
            .filter(|s| !check_start || s.eval_unchecked(0.0).value <= TANH_MAX_ENDPOINT_MISS)
    };
    let residual = |x: f64| shape(x).and_then(|s| final_log_radius(&s, tf).ok()).map_or(f64::NAN, |a| a - target);
    let grid = family.radius_grid();
    let values: Vec<f64> = grid.iter().map(|&x| residual(x)).collect();
    let mut best: Option<(f64, f64)> = None;
    for (w, v) in grid.windows(2).zip(values.windows(2)) {
        if !(v[0].is_finite() && v[1].is_finite()) || v[0].signum() == v[1].signum() {
            continue;
        }
        let Ok(x) = find_root(residual, (w[0], w[1]), ROOT_TOL) else { continue };
        let Some(e) = shape(x).and_then(|s| energy_functional(&s, tf).ok()) else { continue };
        if best.map_or(true, |(b, _)| e < b) {
            best = Some((e, x));
        }
    }
    best
}

/// Minimum-energy family member reaching `(θ_f, r_f)` at `t_f` (the optimal
/// time when the spec leaves it open). One parameter is solved from the
/// radius constraint for every trial of the others; when several solutions
/// exist the lowest-energy one is taken.
pub fn optimize_ansatz(spec: &SpinSpec, family: SpinFamily) -> Result<(OptimizationResult, SpinProtocol)> {
    spec.validate()?;
    let tf = spec.final_time()?;
    let spec_t = spec.with_final_time(tf);
    let unreachable = || -> Error {
        match reachable_range(&spec_t, family) {
            Ok((rmin, rmax)) => Error::Unreachable { target: spec.r_f, rmin, rmax },
            Err(e) => e,
        }
    };
    let cost = |outer: &[f64]| constrained_minimum(&spec_t, family, tf, outer).map_or(f64::INFINITY, |(e, _)| e);
    let (result, outer) = match family {
        SpinFamily::Quadratic | SpinFamily::Cubic { .. } | SpinFamily::TanhFlip { width: Some(_) } => {
            let e = cost(&[]);
            let r = OptimizationResult {
                best_params: vec![],
                best_cost: e,
                evaluations: 1,
                converged: e.is_finite(),
                simplex_spread: 0.0,
                history: vec![],
            };
            (r, vec![])
        }
        SpinFamily::NinthFlip => {
            // symmetric start: scan c₂ with c₁ = 0 for the best feasible point
            let start = linspace(-8000.0, 0.0, 17)
                .into_iter()
                .map(|c2| (cost(&[0.0, c2]), c2))
                .filter(|(e, _)| e.is_finite())
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .ok_or_else(unreachable)?;
            let opts = MinimizeOptions { tol: 1e-10, max_evals: 2000, restarts: 2, record_history: false };
            let r = minimize(cost, &[0.0, start.1], &[100.0, 500.0], &opts)?;
            let outer = r.best_params.clone();
            (r, outer)
        }
        SpinFamily::TanhFlip { width: None } => {
            let width_cost = |w: &[f64]| if w[0] > 1.0 { cost(w) } else { f64::INFINITY };
            let opts = MinimizeOptions { tol: 1e-10, max_evals: 2000, restarts: 2, record_history: false };
            let r = minimize(width_cost, &[DEFAULT_TANH_WIDTH], &[0.1], &opts)?;
            let outer = r.best_params.clone();
            (r, outer)
        }
    };
    let (_, solved) = constrained_minimum(&spec_t, family, tf, &outer).ok_or_else(unreachable)?;
    let protocol = ansatz_protocol(&spec_t, family, &full_params(family, solved, &outer))?;
    let result = OptimizationResult { best_params: protocol.params.clone(), best_cost: protocol.energy, ..result };
    Ok((result, protocol))
}

/// Forward Bloch-equation check of a protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinClosure {
    /// `|θ(t_f) − θ_design(t_f)|` from the Cartesian run.
    pub theta_error: f64,
    /// `|r(t_f) − exp(a_design(t_f))|`.
    pub radius_error: f64,
    /// `|r(t_f) − r_f|` against the spec target.
    pub target_radius_error: f64,
    pub phi_drift: f64,
    pub max_field_residual: f64,
    /// Largest mismatch of `(r, θ)` between the Cartesian and spherical
    /// equations integrated under the same field.
    pub spherical_cartesian_gap: f64,
    /// Largest `|θ_cartesian(t) − θ_design(t)|`.
    pub max_theta_gap: f64,
    /// `(S_x, S_y, S_z)` at `t_f`.
    pub final_spin: [f64; 3],
}

/// Integrate the Cartesian Bloch equations (`R = 1`, no longitudinal
/// relaxation) together with the spherical ones under the protocol field.
///
/// The transverse field is `(B sinφ, −B cosφ)` with `φ = phi0`, which keeps
/// the spin in the plane of azimuth `φ`. Shapes start at the pole, the
/// optimal protocol at `θ = ε`.
pub fn verify_spin(p: &SpinProtocol, rel_tol: f64, samples: usize, phi0: f64) -> Result<SpinClosure> {
    let tf = p.tf();
    let (sp, cp) = phi0.sin_cos();
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let b = p.field(t);
        let (bx, by) = (b * sp, -b * cp);
        dy[0] = -y[0] - by * y[2];
        dy[1] = -y[1] + bx * y[2];
        dy[2] = by * y[0] - bx * y[1];
        let (s, c) = y[4].sin_cos();
        dy[3] = -s * s;
        dy[4] = b - s * c;
    };
    let th0 = p.angle(0.0).0;
    let y0 = [th0.sin() * cp, th0.sin() * sp, th0.cos(), 0.0, th0];
    let traj = integrate_adaptive(rhs, &y0, (0.0, tf), &OdeOptions::with_tolerances(rel_tol, rel_tol * 1e-2))?;

    // signed polar angle and azimuth drift within the plane of azimuth φ₀
    let polar = |y: &[f64]| -> (f64, f64, f64) {
        let inplane = y[0] * cp + y[1] * sp;
        let outplane = y[1] * cp - y[0] * sp;
        let drift = if inplane.abs() > 1e-9 { (outplane / inplane).atan() } else { 0.0 };
        (y[0].hypot(y[1]).hypot(y[2]), inplane.atan2(y[2]), drift)
    };
    let (mut phi_drift, mut gap, mut theta_gap, mut residual) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for t in linspace(0.0, tf, samples.max(2)) {
        let y = oct_state(&traj, t);
        let (r, th, drift) = polar(&y);
        phi_drift = phi_drift.max(drift.abs());
        gap = gap.max((r - y[3].exp()).abs()).max((th - y[4]).abs());
        theta_gap = theta_gap.max((th - p.angle(t).0).abs());
        residual = residual.max(p.field_residual(t).abs());
    }
    let (r, th, _) = polar(traj.final_state());
    Ok(SpinClosure {
        theta_error: (th - p.angle(tf).0).abs(),
        radius_error: (r - p.final_radius()).abs(),
        target_radius_error: (r - p.spec.r_f).abs(),
        phi_drift,
        max_field_residual: residual,
        spherical_cartesian_gap: gap,
        max_theta_gap: theta_gap,
        final_spin: [traj.final_state()[0], traj.final_state()[1], traj.final_state()[2]],
    })
}

/// Consistency of the optimal-control solution along its own canonical
/// flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OctConsistency {
    /// Largest `|exp(a(t)) − r(θ(t))|` with `a` integrated from `ȧ = −sin²θ`.
    pub radius_gap: f64,
    /// Largest `|H_c|` with `u = p₂`.
    pub max_hamiltonian: f64,
    /// Largest gap between the integrated costate `p₂` and its closed form.
    pub costate_gap: f64,
}

/// Integrate state and costate `(θ, a, p₂)` with `u = p₂`,
/// `ṗ₂ = p₁ sin2θ + p₂ cos2θ`, starting on the optimal manifold at `θ = ε`.
pub fn oct_consistency(spec: &SpinSpec, rel_tol: f64, samples: usize) -> Result<OctConsistency> {
    let p1 = solve_p1(spec.theta_f, spec.r_f)?;
    let tf = oct_final_time(spec)?;
    let rhs = |_: f64, y: &[f64], dy: &mut [f64]| {
        let (s, c) = y[0].sin_cos();
        dy[0] = y[2] - s * c;
        dy[1] = -s * s;
        dy[2] = p1 * (2.0 * y[0]).sin() + y[2] * (2.0 * y[0]).cos();
    };
    let eps = spec.epsilon;
    let y0 = [eps, oct_radius(eps, p1).ln(), oct_field(eps, p1)];
    let traj = integrate_adaptive(rhs, &y0, (0.0, tf), &OdeOptions::with_tolerances(rel_tol, rel_tol * 1e-2))?;
    let mut out = OctConsistency { radius_gap: 0.0, max_hamiltonian: 0.0, costate_gap: 0.0 };
    for t in linspace(0.0, tf, samples.max(2)) {
        let y = oct_state(&traj, t);
        let (s, c) = y[0].sin_cos();
        let u = y[2];
        let h = -0.5 * u * u - p1 * s * s + y[2] * (u - s * c);
        out.radius_gap = out.radius_gap.max((y[1].exp() - oct_radius(y[0], p1)).abs());
        out.max_hamiltonian = out.max_hamiltonian.max(h.abs());
        out.costate_gap = out.costate_gap.max((y[2] - oct_field(y[0], p1)).abs());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p1_closed_forms() {
        let r = (-2.0f64).exp();
        let p = solve_p1(PI / 2.0, r).unwrap();
        assert!((p - 2.0 * r * r / (1.0 - r * r).powi(2)).abs() < 1e-15);
        assert!((oct_radius(PI / 2.0, p) - r).abs() < 1e-14);
        assert!((solve_p1(PI, 0.6).unwrap() - 7.5).abs() < 1e-13);
        assert!((solve_p1(PI / 2.0, 0.6).unwrap() - 0.72 / 0.4096).abs() < 1e-13);
        let p = solve_p1(1.0, 0.7).unwrap();
        assert!((oct_radius(1.0, p) - 0.7).abs() < 1e-14);
        assert!(matches!(solve_p1(0.5, 0.8), Err(Error::Unreachable { .. })));
    }

    #[test]
    fn shapes_meet_flip_conditions() {
        let tf = 3.8;
        let s = ninth_flip_shape(PI, tf, [400.0, 30.0, -4000.0]).unwrap();
        for (t, v) in [(0.0, 0.0), (tf / 2.0, PI / 2.0), (tf, PI)] {
            assert!((s.evaluate(t).unwrap().value - v).abs() < 1e-11);
        }
        for t in [0.0, tf] {
            let d = s.evaluate(t).unwrap();
            assert!(d.d1.abs() < 1e-10 && d.d2.abs() < 1e-9);
        }
        let q = quadratic_shape(PI / 2.0, tf, 0.3).unwrap();
        assert!((field_from_theta(&q)(0.0) - 0.3).abs() < 1e-14);
        assert!((q.evaluate(tf).unwrap().value - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn stationary_angle_field() {
        let c = ShapeFunction::Polynomial(Polynomial::new(vec![0.4], 2.0).unwrap());
        assert!((field_from_theta(&c)(1.0) - 0.4f64.sin() * 0.4f64.cos()).abs() < 1e-15);
        let flat = ShapeFunction::Polynomial(Polynomial::new(vec![PI / 2.0], 2.0).unwrap());
        assert!((final_log_radius(&flat, 2.0).unwrap() + 2.0).abs() < 1e-12);
        let pole = ShapeFunction::Polynomial(Polynomial::new(vec![0.0], 2.0).unwrap());
        assert_eq!(final_log_radius(&pole, 2.0).unwrap(), 0.0);
        assert_eq!(energy_functional(&pole, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn oct_times_and_energies() {
        let spec = SpinSpec::new(PI / 2.0, (-2.0f64).exp()).unwrap();
        let tf = oct_final_time(&spec).unwrap();
        assert!((tf - oct_final_time_closed_form(&spec).unwrap()).abs() < 1e-6);
        assert!((oct_energy(&spec).unwrap() - oct_energy_closed_form(&spec).unwrap()).abs() < 1e-9);
        let flip = SpinSpec::new(PI, 0.6).unwrap();
        assert!((oct_energy(&flip).unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn oct_protocol_field_is_consistent() {
        let spec = SpinSpec::new(PI / 2.0, 0.6).unwrap();
        let p = oct_protocol(&spec).unwrap();
        for t in linspace(0.0, p.tf(), 21) {
            assert!(p.field_residual(t).abs() < 1e-12);
        }
        assert!((p.angle(p.tf()).0 - PI / 2.0).abs() < 1e-7);
        assert!((p.final_log_radius - (0.6f64.ln() - oct_radius(spec.epsilon, p1_of(&p)).ln())).abs() < 1e-8);
    }

    fn p1_of(p: &SpinProtocol) -> f64 {
        match &p.theta {
            ThetaPath::Oct { p1, .. } => *p1,
            ThetaPath::Shape(_) => unreachable!(),
        }
    }

    #[test]
    fn pole_is_an_equilibrium() {
        let spec = SpinSpec::new(PI / 2.0, 0.5).unwrap().with_final_time(2.0);
        let mut p = ansatz_protocol(&spec, SpinFamily::Quadratic, &[0.0]).unwrap();
        p.theta = ThetaPath::Shape(ShapeFunction::Polynomial(Polynomial::new(vec![0.0], 2.0).unwrap()));
        p.final_log_radius = 0.0;
        let c = verify_spin(&p, 1e-10, 11, 0.0).unwrap();
        assert!(c.theta_error < 1e-15 && c.radius_error < 1e-15);
    }
}
