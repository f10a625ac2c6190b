//! Fast transport of a particle in a moving harmonic trap.
//!
//! The mass follows `ẍ = −ω₀²(x − x₀)`. Designs fix `x(t)` and read off the
//! trap center `x₀ = x + ẍ/ω₀²`. Energies are the time-averaged potential
//! `Ē_p = (1/t_f)∫½mω₀²(x − x₀)² dt`, reported in joules, in units of
//! `ε = mω₀²d²/2`, and as a ratio to the energy-optimal value
//! `6md²/(ω₀²t_f⁴)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::ansatz::{
    fit_constrained_polynomial, fit_constrained_polynomial_in, make_tanh_tan, Basis, Polynomial, BoundaryCondition, Derivs,
    ShapeFunction,
};
use crate::numerics::{
    gauss_legendre, integrate_adaptive, minimize, quadrature_with_breaks, MinimizeOptions, OdeOptions, OptimizationResult,
    DEFAULT_QUAD_REL_TOL,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportSpec {
    /// Trap angular frequency, rad/s.
    pub omega0: f64,
    /// Transport distance, m.
    pub d: f64,
    /// Duration, s.
    pub tf: f64,
    /// Particle mass, kg.
    pub mass: f64,
    /// Bound on `|x − x₀|` for the time-optimal protocol, m.
    pub delta_bound: Option<f64>,
}

impl Default for TransportSpec {
    fn default() -> Self {
        Self { omega0: 2.0 * PI * 50.0, d: 1.0, tf: 0.022, mass: 1.0, delta_bound: None }
    }
}

impl TransportSpec {
    pub fn validate(&self) -> Result<()> {
        let fields = [("omega0", self.omega0), ("d", self.d), ("tf", self.tf), ("mass", self.mass)];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidSpec(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(delta) = self.delta_bound {
            if !(delta > 0.0 && delta.is_finite()) {
                return Err(Error::InvalidSpec(format!("delta must be positive, got {delta}")));
            }
        }
        Ok(())
    }

    /// `ε = mω₀²d²/2`.
    pub fn energy_unit(&self) -> f64 {
        0.5 * self.mass * self.omega0 * self.omega0 * self.d * self.d
    }

    /// Energy-optimal time-averaged potential `6md²/(ω₀²t_f⁴)`.
    pub fn oct_mean_potential(&self) -> f64 {
        6.0 * self.mass * self.d * self.d / (self.omega0 * self.omega0 * self.tf.powi(4))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransportMethod {
    Polynomial(usize),
    Hyperbolic,
    OctEnergy,
    TimeOptimal,
}

impl TransportMethod {
    pub fn tag(self) -> String {
        match self {
            Self::Polynomial(n) => format!("P{n}"),
            Self::Hyperbolic => "hyperbolic".into(),
            Self::OctEnergy => "oct-energy".into(),
            Self::TimeOptimal => "time-optimal".into(),
        }
    }
}

/// Mass trajectory `x(t)` in metres on `[0, t_f]`.
#[derive(Debug, Clone, PartialEq)]
pub enum MassTrajectory {
    Shape(ShapeFunction),
    /// Constant acceleration `±accel`, switching at `t1`.
    BangBang { accel: f64, t1: f64, tf: f64, d: f64 },
}

impl MassTrajectory {
    pub fn eval(&self, t: f64) -> Derivs {
        match *self {
            Self::Shape(ref s) => s.eval_unchecked(t),
            Self::BangBang { accel, t1, tf, d } => {
                if t < t1 {
                    Derivs { value: 0.5 * accel * t * t, d1: accel * t, d2: accel }
                } else {
                    let r = tf - t;
                    Derivs { value: d - 0.5 * accel * r * r, d1: accel * r, d2: -accel }
                }
            }
        }
    }

    fn breakpoints(&self, tf: f64) -> Vec<f64> {
        match *self {
            Self::BangBang { t1, .. } => vec![0.0, t1, tf],
            Self::Shape(_) => vec![0.0, tf],
        }
    }
}

/// Sudden displacement of the trap center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapJump {
    pub time: f64,
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportProtocol {
    pub method: TransportMethod,
    pub spec: TransportSpec,
    pub mass: MassTrajectory,
    /// `Ē_p` in joules.
    pub mean_potential: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportSample {
    pub t: f64,
    pub x: f64,
    pub x0: f64,
    pub u: f64,
    pub potential: f64,
}

impl TransportProtocol {
    pub fn tf(&self) -> f64 {
        self.spec.tf
    }

    /// Trap center on `[0, t_f]`; at the ends this is the one-sided limit
    /// from inside the interval.
    pub fn trap(&self, t: f64) -> f64 {
        trap_from_mass(&self.mass, self.spec.omega0, t)
    }

    /// Newton residual `|ẍ + ω₀²(x − x₀)|`.
    pub fn newton_residual(&self, t: f64) -> f64 {
        let m = self.mass.eval(t);
        let w2 = self.spec.omega0 * self.spec.omega0;
        (m.d2 + w2 * (m.value - self.trap(t))).abs()
    }

    /// `Ē_p/ε`.
    pub fn normalized_potential(&self) -> f64 {
        self.mean_potential / self.spec.energy_unit()
    }

    /// `Ē_p` relative to the energy-optimal protocol.
    pub fn ratio(&self) -> f64 {
        self.mean_potential / self.spec.oct_mean_potential()
    }

    /// Trap jumps at the ends, where the trap rests at 0 before and at `d`
    /// after the protocol.
    pub fn jumps(&self) -> Vec<TrapJump> {
        let tf = self.spec.tf;
        let scale = self.spec.d * 1e-12;
        let mut out = Vec::new();
        let start = self.trap(0.0);
        if start.abs() > scale {
            out.push(TrapJump { time: 0.0, before: 0.0, after: start });
        }
        let end = self.trap(tf);
        if (end - self.spec.d).abs() > scale {
            out.push(TrapJump { time: tf, before: end, after: self.spec.d });
        }
        out
    }

    /// Uniform samples; a trap jump adds a second row at the same time so
    /// that both sides of the discontinuity are present.
    pub fn sample(&self, points: usize) -> Vec<TransportSample> {
        let w2 = self.spec.omega0 * self.spec.omega0;
        let row = |t: f64, x0: f64| {
            let x = self.mass.eval(t).value;
            let u = x - x0;
            TransportSample { t, x, x0, u, potential: 0.5 * self.spec.mass * w2 * u * u }
        };
        let jumps = self.jumps();
        let mut out = Vec::with_capacity(points + 2);
        for t in crate::linspace(0.0, self.spec.tf, points) {
            match jumps.iter().find(|j| j.time == t) {
                Some(j) => {
                    out.push(row(t, j.before));
                    out.push(row(t, j.after));
                }
                None => out.push(row(t, self.trap(t))),
            }
        }
        out
    }
}

/// `x₀ = x + ẍ/ω₀²`.
pub fn trap_from_mass(mass: &MassTrajectory, omega0: f64, t: f64) -> f64 {
    let m = mass.eval(t);
    m.value + m.d2 / (omega0 * omega0)
}

/// `Ē_p = (1/t_f)∫½ m ẍ²/ω₀² dt` in joules.
pub fn mean_potential(mass: &MassTrajectory, spec: &TransportSpec) -> Result<f64> {
    let w2 = spec.omega0 * spec.omega0;
    let integrand = |t: f64| {
        let a = mass.eval(t).d2;
        0.5 * spec.mass * a * a / w2
    };
    if let MassTrajectory::Shape(ShapeFunction::Polynomial(p)) = mass {
        // polynomial integrand: a Gauss rule of matching size is exact
        let half = 0.5 * spec.tf;
        let sum: f64 = gauss_legendre(p.degree().max(2))
            .into_iter()
            .map(|(x, w)| w * integrand(half * (x + 1.0)))
            .sum();
        return Ok(sum * half / spec.tf);
    }
    let breaks = mass.breakpoints(spec.tf);
    Ok(quadrature_with_breaks(integrand, &breaks, DEFAULT_QUAD_REL_TOL)? / spec.tf)
}

fn protocol(method: TransportMethod, spec: &TransportSpec, mass: MassTrajectory) -> Result<TransportProtocol> {
    spec.validate()?;
    let mean_potential = mean_potential(&mass, spec)?;
    Ok(TransportProtocol { method, spec: *spec, mass, mean_potential })
}

fn rest_conditions(spec: &TransportSpec) -> Vec<BoundaryCondition> {
    vec![
        BoundaryCondition::new(0, 0.0, 0.0),
        BoundaryCondition::new(1, 0.0, 0.0),
        BoundaryCondition::new(2, 0.0, 0.0),
        BoundaryCondition::new(0, spec.tf, spec.d),
        BoundaryCondition::new(1, spec.tf, 0.0),
        BoundaryCondition::new(2, spec.tf, 0.0),
    ]
}

/// Polynomial of `degree` under the six rest-to-rest conditions; `free`
/// holds the monomial coefficients `3..=degree−3` in units of `d`.
pub fn polynomial_shape(spec: &TransportSpec, degree: usize, free: &[f64]) -> Result<ShapeFunction> {
    if degree < 5 || free.len() != degree - 5 {
        return Err(Error::InvalidSpec(format!(
            "degree {degree} needs {} free coefficients, got {}",
            degree.saturating_sub(5),
            free.len()
        )));
    }
    let map: BTreeMap<usize, f64> = free.iter().enumerate().map(|(i, &v)| (i + 3, v * spec.d)).collect();
    Ok(fit_constrained_polynomial(degree, &rest_conditions(spec), &map, spec.tf)?)
}

pub fn polynomial_protocol(spec: &TransportSpec, degree: usize, free: &[f64]) -> Result<TransportProtocol> {
    let shape = polynomial_shape(spec, degree, free)?;
    protocol(TransportMethod::Polynomial(degree), spec, MassTrajectory::Shape(shape))
}

/// Septic `Ē_p` as a closed-form quadratic in `(a3, a4)`, joules.
pub fn septic_energy_closed_form(a3: f64, a4: f64, spec: &TransportSpec) -> f64 {
    let (p, q) = (a3 - 21.0, a4 + 70.0);
    let bracket = 7.0 + 16.0 / 77.0 * p * p + 4.0 / 385.0 * q * q + p * q / 11.0;
    bracket * spec.mass * spec.d * spec.d / (spec.omega0 * spec.omega0 * spec.tf.powi(4))
}

/// Energy-optimal cubic `x = d τ²(3 − 2τ)`.
pub fn energy_optimal_protocol(spec: &TransportSpec) -> Result<TransportProtocol> {
    spec.validate()?;
    let poly = fit_constrained_polynomial(
        3,
        &[
            BoundaryCondition::new(0, 0.0, 0.0),
            BoundaryCondition::new(1, 0.0, 0.0),
            BoundaryCondition::new(0, spec.tf, spec.d),
            BoundaryCondition::new(1, spec.tf, 0.0),
        ],
        &BTreeMap::new(),
        spec.tf,
    )?;
    protocol(TransportMethod::OctEnergy, spec, MassTrajectory::Shape(poly))
}

/// Time-optimal protocol for `|x − x₀| ≤ δ`. The duration is set by `δ`:
/// `t_f = (2/ω₀)√(d/δ)`, switching at `t_f/2`. Returns `(protocol, t1, tf)`.
pub fn time_optimal_protocol(spec: &TransportSpec) -> Result<(TransportProtocol, f64, f64)> {
    let delta = spec
        .delta_bound
        .ok_or_else(|| Error::InvalidSpec("time-optimal transport needs a displacement bound delta".into()))?;
    let tf = 2.0 / spec.omega0 * (spec.d / delta).sqrt();
    let spec = TransportSpec { tf, ..*spec };
    spec.validate()?;
    let mass = MassTrajectory::BangBang { accel: spec.omega0 * spec.omega0 * delta, t1: 0.5 * tf, tf, d: spec.d };
    let p = protocol(TransportMethod::TimeOptimal, &spec, mass)?;
    Ok((p, 0.5 * tf, tf))
}

/// `∫₀¹ p''(τ)² dτ`, exact up to rounding.
fn curvature_integral(p: &Polynomial) -> f64 {
    gauss_legendre(p.degree().max(2))
        .into_iter()
        .map(|(x, w)| 0.5 * w * p.eval_normalized(0.5 * (x + 1.0)).2.powi(2))
        .sum()
}

fn as_polynomial(shape: &ShapeFunction) -> &Polynomial {
    match shape {
        ShapeFunction::Polynomial(p) => p,
        ShapeFunction::TanhTan(_) => unreachable!("polynomial fit returned a non-polynomial"),
    }
}

/// Rest-to-rest polynomial of `degree` in the shifted Legendre basis with
/// coefficients `6..=degree` fixed to `free` (units of `d`).
fn legendre_shape(spec: &TransportSpec, degree: usize, free: &[f64]) -> Result<ShapeFunction> {
    let map: BTreeMap<usize, f64> = free.iter().enumerate().map(|(i, &v)| (i + 6, v * spec.d)).collect();
    Ok(fit_constrained_polynomial_in(Basis::Legendre, degree, &rest_conditions(spec), &map, spec.tf)?)
}

/// Minimize the time-averaged potential over polynomials of `degree`.
///
/// The search runs over the shifted Legendre coefficients `6..=degree`,
/// the lower six being fixed by the boundary conditions. Monomial
/// coefficients of high-degree optima reach 1e9 and cancel badly, so the
/// returned shape stays in the Legendre basis. Degrees above 7 start from
/// the septic optimum.
pub fn optimize_polynomial(spec: &TransportSpec, degree: usize) -> Result<(OptimizationResult, TransportProtocol)> {
    spec.validate()?;
    if degree < 5 {
        return Err(Error::InvalidSpec(format!("polynomial degree must be at least 5, got {degree}")));
    }
    let nfree = degree - 5;
    let unit = TransportSpec { d: 1.0, tf: 1.0, ..*spec };
    let cost = |theta: &[f64]| -> f64 {
        match legendre_shape(&unit, degree, theta) {
            Ok(s) => curvature_integral(as_polynomial(&s)) / 12.0,
            Err(_) => f64::NAN,
        }
    };
    let result = if nfree == 0 {
        OptimizationResult {
            best_params: vec![],
            best_cost: cost(&[]),
            evaluations: 1,
            converged: true,
            simplex_spread: 0.0,
            history: vec![],
        }
    } else {
        let mut start = vec![0.0; nfree];
        if nfree > 2 {
            let septic = polynomial_shape(&unit, 7, &[21.0, -70.0])?;
            let l = as_polynomial(&septic).to_basis(Basis::Legendre);
            start[..2].copy_from_slice(&l.coefficients()[6..8]);
        }
        let opts = MinimizeOptions { tol: 1e-12, max_evals: 400_000, restarts: 8, record_history: false };
        minimize(cost, &start, &vec![0.05; nfree], &opts)?
    };
    let shape = legendre_shape(spec, degree, &result.best_params)?;
    let p = protocol(TransportMethod::Polynomial(degree), spec, MassTrajectory::Shape(shape))?;
    Ok((result, p))
}

/// Largest endpoint miss of the hyperbolic shape, in units of `d`.
pub fn hyperbolic_endpoint_mismatch(a1: f64, a2: f64) -> f64 {
    0.5 - 0.5 * (a1 * (PI / (2.0 * a2)).tan()).tanh()
}

pub fn hyperbolic_shape(spec: &TransportSpec, a1: f64, a2: f64) -> Result<ShapeFunction> {
    Ok(make_tanh_tan(0.5 * spec.d, 0.5 * spec.d, a1, a2, spec.tf)?)
}

pub fn hyperbolic_protocol(spec: &TransportSpec, a1: f64, a2: f64) -> Result<TransportProtocol> {
    let shape = hyperbolic_shape(spec, a1, a2)?;
    protocol(TransportMethod::Hyperbolic, spec, MassTrajectory::Shape(shape))
}

/// Endpoint mismatch accepted by the hyperbolic search, in units of `d`.
pub const HYPERBOLIC_MAX_MISMATCH: f64 = 1e-3;

/// Minimize the energy ratio of the hyperbolic shape over
/// `a1 ∈ (0, 5]`, `a2 ∈ (1, 3]`, keeping the endpoint mismatch within
/// [`HYPERBOLIC_MAX_MISMATCH`].
pub fn optimize_hyperbolic(spec: &TransportSpec) -> Result<(OptimizationResult, TransportProtocol)> {
    spec.validate()?;
    let unit = TransportSpec { d: 1.0, tf: 1.0, omega0: 1.0, mass: 1.0, delta_bound: None };
    let cost = |p: &[f64]| -> f64 {
        let (a1, a2) = (p[0], p[1]);
        if !(a1 > 0.0 && a1 <= 5.0 && a2 > 1.0 && a2 <= 3.0) {
            return f64::NAN;
        }
        if hyperbolic_endpoint_mismatch(a1, a2) > HYPERBOLIC_MAX_MISMATCH {
            return f64::NAN;
        }
        hyperbolic_shape(&unit, a1, a2)
            .map(MassTrajectory::Shape)
            .and_then(|m| mean_potential(&m, &unit))
            .map_or(f64::NAN, |e| e / unit.oct_mean_potential())
    };
    let opts = MinimizeOptions { tol: 1e-8, ..Default::default() };
    let result = minimize(cost, &[3.0, 1.5], &[0.5, 0.1], &opts)?;
    let p = hyperbolic_protocol(spec, result.best_params[0], result.best_params[1])?;
    Ok((result, p))
}

/// Forward check: integrates the Newton equation under the protocol's trap
/// from rest at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportClosure {
    /// `½m[ẋ(t_f)² + ω₀²(x(t_f) − d)²] / ε`.
    pub excitation: f64,
    pub final_position_error: f64,
    pub final_velocity_error: f64,
    /// Largest Newton residual over interior samples, in units of `ω₀²d`.
    pub max_newton_residual: f64,
    /// Largest `|x_integrated − x_design|/d` over interior samples.
    pub max_trajectory_gap: f64,
}

pub fn verify_transport(p: &TransportProtocol, rel_tol: f64, samples: usize) -> Result<TransportClosure> {
    let spec = &p.spec;
    let w = spec.omega0 * spec.tf;
    // normalized variables X = x/d, τ = t/t_f
    let rhs = |tau: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = -w * w * (y[0] - p.trap(tau * spec.tf) / spec.d);
    };
    let breaks: Vec<f64> = p.mass.breakpoints(spec.tf).iter().map(|t| t / spec.tf).collect();
    let opts = OdeOptions::with_tolerances(rel_tol, rel_tol * 1e-2).breakpoints(breaks);
    let traj = integrate_adaptive(rhs, &[0.0, 0.0], (0.0, 1.0), &opts)?;
    let y = traj.final_state();
    let (dx, dv) = (y[0] - 1.0, y[1] / w);

    let mut residual: f64 = 0.0;
    let mut gap: f64 = 0.0;
    let grid = crate::linspace(0.0, 1.0, samples);
    for &tau in &grid[1..grid.len() - 1] {
        let t = tau * spec.tf;
        residual = residual.max(p.newton_residual(t) / (spec.omega0 * spec.omega0 * spec.d));
        if let Some(s) = traj.interpolate(tau) {
            gap = gap.max((s[0] - p.mass.eval(t).value / spec.d).abs());
        }
    }
    Ok(TransportClosure {
        excitation: dv * dv + dx * dx,
        final_position_error: dx.abs(),
        final_velocity_error: dv.abs(),
        max_newton_residual: residual,
        max_trajectory_gap: gap,
    })
}
