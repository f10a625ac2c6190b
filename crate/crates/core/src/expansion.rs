//! Fast frictionless expansion of a harmonic trap.
//!
//! Time is normalized as `s = ω₀ t`, the control as `u = ω²(s)/ω₀²`, and
//! energies are reported in units of `ε = ħω₀/4`. The scaling factor obeys
//! the Ermakov equation `b'' + u b = 1/b³` with `b(0) = 1`, `b(s_f) = γ`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::ansatz::{fit_constrained_polynomial, BoundaryCondition, Derivs, ShapeFunction};
use crate::numerics::{
    integrate_adaptive, minimize, quadrature, quadrature_with_breaks, MinimizeOptions, OdeOptions, OptimizationResult,
    DEFAULT_QUAD_REL_TOL,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionSpec {
    /// `γ = √(ω₀/ω_f) > 1`.
    pub gamma: f64,
    /// Normalized final time `s_f = ω₀ t_f`.
    pub sf: f64,
    /// Bound on `|u|` for the bang-bang family.
    pub control_bound: f64,
}

impl ExpansionSpec {
    pub fn new(gamma: f64, sf: f64) -> Result<Self> {
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(Error::InvalidSpec(format!("gamma must exceed 1, got {gamma}")));
        }
        if !(sf > 0.0 && sf.is_finite()) {
            return Err(Error::InvalidSpec(format!("sf must be positive, got {sf}")));
        }
        Ok(Self { gamma, sf, control_bound: 1.0 })
    }

    /// Spec from the frequency ratio `ω_f²/ω₀²`, so `γ = (ω₀²/ω_f²)^{1/4}`.
    pub fn from_frequency_ratio(omega_f_sq_ratio: f64, sf: f64) -> Result<Self> {
        if !(omega_f_sq_ratio > 0.0 && omega_f_sq_ratio < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "omega_f^2/omega_0^2 must lie in (0, 1), got {omega_f_sq_ratio}"
            )));
        }
        Self::new(omega_f_sq_ratio.powf(-0.25), sf)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExpansionMethod {
    QuinticIe,
    CubicIe,
    BangBang3,
    BangBang2,
    OctEnergy,
}

impl ExpansionMethod {
    pub fn tag(self) -> &'static str {
        match self {
            Self::QuinticIe => "quintic-IE",
            Self::CubicIe => "cubic-IE",
            Self::BangBang3 => "bang-bang-3",
            Self::BangBang2 => "bang-bang-2",
            Self::OctEnergy => "oct-energy",
        }
    }
}

/// Closed-form three-jump solution: `u = −w1²` on `(0, s1)`, `u = w2²` on
/// `(s1, s_f)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BangBang {
    pub w1: f64,
    pub w2: f64,
    pub gamma: f64,
    pub s1: f64,
    pub sf: f64,
}

impl BangBang {
    fn first_coeff(&self) -> f64 {
        (self.w1 * self.w1 + 1.0) / (self.w1 * self.w1)
    }

    fn second_coeff(&self) -> f64 {
        let (g2, w22) = (self.gamma * self.gamma, self.w2 * self.w2);
        (1.0 - g2 * g2 * w22) / (g2 * w22)
    }

    /// `b²` and its first two derivatives.
    fn square(&self, s: f64) -> (f64, f64, f64) {
        if s < self.s1 {
            let (k, w) = (self.first_coeff(), self.w1);
            let x = 2.0 * w * s;
            (1.0 + 0.5 * k * (x.cosh() - 1.0), k * w * x.sinh(), 2.0 * k * w * w * x.cosh())
        } else {
            let (l, w) = (self.second_coeff(), self.w2);
            let x = 2.0 * w * (self.sf - s);
            let g2 = self.gamma * self.gamma;
            (g2 + 0.5 * l * (1.0 - x.cos()), -l * w * x.sin(), 2.0 * l * w * w * x.cos())
        }
    }

    pub fn control(&self, s: f64) -> f64 {
        if s < self.s1 {
            -self.w1 * self.w1
        } else {
            self.w2 * self.w2
        }
    }
}

/// Energy-optimal profile `b(τ) = √(Aτ² + 2Bτ + 1)`, `A = B² − s_f²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyOptimalProfile {
    pub a: f64,
    pub b: f64,
    pub sf: f64,
}

impl EnergyOptimalProfile {
    fn square(&self, s: f64) -> (f64, f64, f64) {
        let tau = s / self.sf;
        let y = self.a * tau * tau + 2.0 * self.b * tau + 1.0;
        let y1 = (2.0 * self.a * tau + 2.0 * self.b) / self.sf;
        let y2 = 2.0 * self.a / (self.sf * self.sf);
        (y, y1, y2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScalingProfile {
    Shape(ShapeFunction),
    BangBang(BangBang),
    EnergyOptimal(EnergyOptimalProfile),
}

fn from_square((y, y1, y2): (f64, f64, f64)) -> Derivs {
    let b = y.sqrt();
    let d1 = y1 / (2.0 * b);
    Derivs { value: b, d1, d2: (y2 - 2.0 * d1 * d1) / (2.0 * b) }
}

impl ScalingProfile {
    /// `b`, `b'`, `b''` at `s`, one-sided from the right at a switching time.
    pub fn scaling(&self, s: f64) -> Derivs {
        match self {
            Self::Shape(shape) => shape.eval_unchecked(s),
            Self::BangBang(bb) => from_square(bb.square(s)),
            Self::EnergyOptimal(p) => from_square(p.square(s)),
        }
    }

    /// Control `u(s)`; Ermakov inversion `1/b⁴ − b''/b` for smooth profiles.
    pub fn control(&self, s: f64) -> f64 {
        match self {
            Self::BangBang(bb) => bb.control(s),
            _ => {
                let d = self.scaling(s);
                1.0 / d.value.powi(4) - d.d2 / d.value
            }
        }
    }
}

/// Ermakov inversion of a scaling shape, validated to stay positive.
#[derive(Debug, Clone)]
pub struct ScalingControl {
    shape: ShapeFunction,
}

impl ScalingControl {
    pub fn control(&self, s: f64) -> f64 {
        let d = self.shape.eval_unchecked(s);
        1.0 / d.value.powi(4) - d.d2 / d.value
    }
}

const POSITIVITY_SAMPLES: usize = 2001;

fn first_non_positive(shape: &ShapeFunction) -> Option<f64> {
    crate::linspace(0.0, shape.span(), POSITIVITY_SAMPLES)
        .into_iter()
        .find(|&s| !(shape.eval_unchecked(s).value > 0.0))
}

pub fn control_from_scaling(shape: &ShapeFunction) -> Result<ScalingControl> {
    if let Some(s) = first_non_positive(shape) {
        return Err(Error::NonPositiveScaling(s));
    }
    Ok(ScalingControl { shape: shape.clone() })
}

fn energy_density(d: Derivs) -> f64 {
    d.d1 * d.d1 + 1.0 / (d.value * d.value)
}

/// `(1/s_f)∫₀^{s_f}(b'² + 1/b²) ds` in units of `ε`.
pub fn mean_energy(shape: &ShapeFunction, rel_tol: f64) -> Result<f64> {
    if let Some(s) = first_non_positive(shape) {
        return Err(Error::NonPositiveScaling(s));
    }
    let sf = shape.span();
    Ok(quadrature(|s| energy_density(shape.eval_unchecked(s)), 0.0, sf, rel_tol)? / sf)
}

fn profile_mean_energy(profile: &ScalingProfile, breaks: &[f64], rel_tol: f64) -> Result<f64> {
    let sf = *breaks.last().expect("non-empty breaks");
    Ok(quadrature_with_breaks(|s| energy_density(profile.scaling(s)), breaks, rel_tol)? / sf)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionProtocol {
    pub method: ExpansionMethod,
    pub gamma: f64,
    pub sf: f64,
    pub profile: ScalingProfile,
    /// `Ē_p/ε`.
    pub mean_energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionSample {
    pub s: f64,
    pub b: f64,
    pub bprime: f64,
    pub u: f64,
    pub energy_density: f64,
}

impl ExpansionProtocol {
    /// Interior control discontinuities, with both ends of the span.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.profile {
            ScalingProfile::BangBang(bb) if bb.s1 > 0.0 && bb.s1 < bb.sf => vec![0.0, bb.s1, bb.sf],
            _ => vec![0.0, self.sf],
        }
    }

    pub fn scaling(&self, s: f64) -> Derivs {
        self.profile.scaling(s)
    }

    pub fn control(&self, s: f64) -> f64 {
        self.profile.control(s)
    }

    pub fn sample(&self, points: usize) -> Vec<ExpansionSample> {
        crate::linspace(0.0, self.sf, points)
            .into_iter()
            .map(|s| {
                let d = self.scaling(s);
                ExpansionSample { s, b: d.value, bprime: d.d1, u: self.control(s), energy_density: energy_density(d) }
            })
            .collect()
    }
}

fn shape_protocol(method: ExpansionMethod, spec: &ExpansionSpec, shape: ShapeFunction) -> Result<ExpansionProtocol> {
    let mean_energy = mean_energy(&shape, DEFAULT_QUAD_REL_TOL)?;
    Ok(ExpansionProtocol {
        method,
        gamma: spec.gamma,
        sf: spec.sf,
        profile: ScalingProfile::Shape(shape),
        mean_energy,
    })
}

fn rest_conditions(spec: &ExpansionSpec) -> Vec<BoundaryCondition> {
    vec![
        BoundaryCondition::new(0, 0.0, 1.0),
        BoundaryCondition::new(1, 0.0, 0.0),
        BoundaryCondition::new(2, 0.0, 0.0),
        BoundaryCondition::new(0, spec.sf, spec.gamma),
        BoundaryCondition::new(1, spec.sf, 0.0),
        BoundaryCondition::new(2, spec.sf, 0.0),
    ]
}

/// Quintic with `b, b', b''` fixed at both ends.
pub fn quintic_protocol(spec: &ExpansionSpec) -> Result<ExpansionProtocol> {
    let shape = fit_constrained_polynomial(5, &rest_conditions(spec), &BTreeMap::new(), spec.sf)?;
    shape_protocol(ExpansionMethod::QuinticIe, spec, shape)
}

/// Cubic `Σ aₙτⁿ` with `b(0) = 1`, `b(s_f) = γ` and free `(a2, a3)`.
pub fn cubic_shape(spec: &ExpansionSpec, a2: f64, a3: f64) -> Result<ShapeFunction> {
    let conds = [BoundaryCondition::new(0, 0.0, 1.0), BoundaryCondition::new(0, spec.sf, spec.gamma)];
    Ok(fit_constrained_polynomial(3, &conds, &BTreeMap::from([(2, a2), (3, a3)]), spec.sf)?)
}

pub fn cubic_protocol(spec: &ExpansionSpec, a2: f64, a3: f64) -> Result<ExpansionProtocol> {
    shape_protocol(ExpansionMethod::CubicIe, spec, cubic_shape(spec, a2, a3)?)
}

/// Switching time and final time of the three-jump protocol with
/// normalized frequencies `w1 = ω₁/ω₀`, `w2 = ω₂/ω₀`.
pub fn bang_bang_times(w1: f64, w2: f64, gamma: f64) -> Result<(f64, f64)> {
    if !(gamma > 1.0 && gamma.is_finite()) {
        return Err(Error::InvalidSpec(format!("gamma must exceed 1, got {gamma}")));
    }
    if !(w1 > 0.0 && w1.is_finite()) {
        return Err(Error::InvalidSpec(format!("w1 must be positive, got {w1}")));
    }
    // tolerate the rounding of w2 = 1/γ computed by the caller
    let lower = 1.0 / gamma;
    if !(w2 >= lower * (1.0 - 4.0 * f64::EPSILON) && w2 <= 1.0) {
        return Err(Error::Domain(format!("w2 = {w2} outside [1/gamma, 1] = [{lower}, 1]")));
    }
    let (g2, w12, w22) = (gamma * gamma, w1 * w1, w2 * w2);
    let arg1 = (w12 * (g2 - 1.0) * (g2 * w22 - 1.0) / (g2 * (w12 + 1.0) * (w22 + w12))).max(0.0);
    let s1 = arg1.sqrt().asinh() / w1;
    let arg2 = w22 * (g2 - 1.0) * (g2 * w12 + 1.0) / ((w12 + w22) * (g2 * g2 * w22 - 1.0));
    let sf = s1 + arg2.clamp(0.0, 1.0).sqrt().asin() / w2;
    Ok((s1, sf))
}

/// Shortest time over the admissible family, reached at `w1 = w2 = 1`.
pub fn minimal_bang_bang_time(gamma: f64) -> f64 {
    PI / 4.0 + gamma.ln()
}

pub fn bang_bang_protocol(w1: f64, w2: f64, gamma: f64, control_bound: f64) -> Result<ExpansionProtocol> {
    if w1 * w1 > control_bound * (1.0 + 1e-12) || w2 * w2 > control_bound * (1.0 + 1e-12) {
        return Err(Error::InvalidSpec(format!(
            "bang-bang levels ({w1}², {w2}²) exceed the control bound {control_bound}"
        )));
    }
    let (s1, sf) = bang_bang_times(w1, w2, gamma)?;
    let two_jump = s1 == 0.0;
    let bb = BangBang { w1, w2, gamma, s1, sf };
    let profile = ScalingProfile::BangBang(bb);
    let breaks = if two_jump { vec![0.0, sf] } else { vec![0.0, s1, sf] };
    let mean_energy = profile_mean_energy(&profile, &breaks, DEFAULT_QUAD_REL_TOL)?;
    Ok(ExpansionProtocol {
        method: if two_jump { ExpansionMethod::BangBang2 } else { ExpansionMethod::BangBang3 },
        gamma,
        sf,
        profile,
        mean_energy,
    })
}

/// Two-jump limit `w2 = 1/γ`, lasting `s_f = πγ/2`.
pub fn two_jump_protocol(gamma: f64) -> Result<ExpansionProtocol> {
    bang_bang_protocol(1.0, 1.0 / gamma, gamma, 1.0)
}

/// Closed-form mean energy of the two-jump protocol, `½(1 + 1/γ²)`.
pub fn two_jump_mean_energy(gamma: f64) -> f64 {
    0.5 * (1.0 + 1.0 / (gamma * gamma))
}

/// Closed-form lower bound on `Ē_p/ε` for unbounded control, with the
/// optimal scaling profile.
pub fn oct_energy_bound(spec: &ExpansionSpec) -> Result<(f64, EnergyOptimalProfile)> {
    let (g, sf) = (spec.gamma, spec.sf);
    let b = -1.0 + (sf * sf + g * g).sqrt();
    let arg1 = (b * b + b - sf * sf) / sf;
    let arg2 = b / sf;
    if arg1.abs() >= 1.0 || arg2.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "energy bound needs |(B²+B−s_f²)/s_f| < 1 and |B/s_f| < 1; got {arg1} and {arg2} (gamma {g}, sf {sf})"
        )));
    }
    let bound = arg2 * arg2 - 1.0 - 2.0 / sf * arg1.atanh() + 2.0 / sf * arg2.atanh();
    Ok((bound, EnergyOptimalProfile { a: b * b - sf * sf, b, sf }))
}

pub fn oct_energy_protocol(spec: &ExpansionSpec) -> Result<ExpansionProtocol> {
    let (bound, profile) = oct_energy_bound(spec)?;
    Ok(ExpansionProtocol {
        method: ExpansionMethod::OctEnergy,
        gamma: spec.gamma,
        sf: spec.sf,
        profile: ScalingProfile::EnergyOptimal(profile),
        mean_energy: bound,
    })
}

/// What the cubic's free parameters are tuned for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CubicObjective {
    /// Least-squares distance `∫₀¹(b − b_opt)² dτ` to the energy-optimal
    /// profile; this matches the tabulated optima.
    #[default]
    OctTrajectoryFit,
    /// Mean energy itself.
    MeanEnergy,
}

const FIT_REL_TOL: f64 = 1e-12;

pub fn optimize_cubic(spec: &ExpansionSpec, objective: CubicObjective) -> Result<(OptimizationResult, ExpansionProtocol)> {
    let target = match objective {
        CubicObjective::OctTrajectoryFit => Some(oct_energy_bound(spec)?.1),
        CubicObjective::MeanEnergy => None,
    };
    let cost = |p: &[f64]| -> f64 {
        let Ok(shape) = cubic_shape(spec, p[0], p[1]) else { return f64::NAN };
        match &target {
            Some(opt) => {
                if first_non_positive(&shape).is_some() {
                    return f64::NAN;
                }
                let prof = ScalingProfile::EnergyOptimal(*opt);
                let gap = |s: f64| (shape.eval_unchecked(s).value - prof.scaling(s).value).powi(2);
                quadrature(gap, 0.0, spec.sf, FIT_REL_TOL).map_or(f64::NAN, |v| v / spec.sf)
            }
            None => mean_energy(&shape, FIT_REL_TOL).unwrap_or(f64::NAN),
        }
    };
    let opts = MinimizeOptions { tol: 1e-10, ..Default::default() };
    let result = minimize(cost, &[0.0, 0.0], &[1.0, 0.5], &opts)?;
    let protocol = cubic_protocol(spec, result.best_params[0], result.best_params[1])?;
    Ok((result, protocol))
}

/// Forward check of a protocol against the Ermakov equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionClosure {
    pub final_b_error: f64,
    pub final_bprime_error: f64,
    /// Largest `|b'' + u b − 1/b³|` of the analytic profile on the sample grid.
    pub max_ermakov_residual: f64,
    /// Largest `|b_integrated − b_profile|` on the sample grid.
    pub max_trajectory_gap: f64,
    /// `b'` jumps at the two ends, nonzero only for the impulsive
    /// energy-optimal profile.
    pub impulses: (f64, f64),
}

pub fn verify_expansion(protocol: &ExpansionProtocol, rel_tol: f64, samples: usize) -> Result<ExpansionClosure> {
    let breaks = protocol.breakpoints();
    let start = protocol.scaling(0.0);
    let end = protocol.scaling(protocol.sf);
    let rhs = |s: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = -protocol.control(s) * y[0] + 1.0 / y[0].powi(3);
    };
    let opts = OdeOptions::with_tolerances(rel_tol, rel_tol * 1e-2).breakpoints(breaks.iter().copied());
    let traj = integrate_adaptive(rhs, &[1.0, start.d1], (0.0, protocol.sf), &opts)?;
    let last = traj.final_state();

    let mut residual: f64 = 0.0;
    let mut gap: f64 = 0.0;
    let grid = crate::linspace(0.0, protocol.sf, samples);
    for &s in &grid[1..grid.len() - 1] {
        let d = protocol.scaling(s);
        let r = d.d2 + protocol.control(s) * d.value - d.value.powi(-3);
        residual = residual.max(r.abs());
        if let Some(y) = traj.interpolate(s) {
            gap = gap.max((y[0] - d.value).abs());
        }
    }
    Ok(ExpansionClosure {
        final_b_error: (last[0] - protocol.gamma).abs(),
        final_bprime_error: (last[1] - end.d1).abs(),
        max_ermakov_residual: residual,
        max_trajectory_gap: gap,
        impulses: (start.d1, -end.d1),
    })
}

/// Largest drift of `b'² + u b² + 1/b²` along the integrated trajectory,
/// per constant-control interval.
pub fn ermakov_invariant_drift(protocol: &ExpansionProtocol, rel_tol: f64) -> Result<f64> {
    let ScalingProfile::BangBang(bb) = &protocol.profile else {
        return Err(Error::InvalidSpec("invariant drift is defined for piecewise-constant controls".into()));
    };
    let breaks = protocol.breakpoints();
    let rhs = |s: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = -bb.control(s) * y[0] + 1.0 / y[0].powi(3);
    };
    let opts = OdeOptions::with_tolerances(rel_tol, rel_tol * 1e-2).breakpoints(breaks.iter().copied());
    let traj = integrate_adaptive(rhs, &[1.0, 0.0], (0.0, protocol.sf), &opts)?;
    let mut drift: f64 = 0.0;
    for w in breaks.windows(2) {
        let u = bb.control(0.5 * (w[0] + w[1]));
        let inv = |y: &[f64]| y[1] * y[1] + u * y[0] * y[0] + 1.0 / (y[0] * y[0]);
        let mut reference = None;
        for (t, y) in traj.times().iter().zip(traj.states()) {
            if *t >= w[0] && *t <= w[1] {
                let v = inv(y);
                let r = *reference.get_or_insert(v);
                drift = drift.max((v - r).abs());
            }
        }
    }
    Ok(drift)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gamma() -> f64 {
        5f64.powf(0.25)
    }

    #[test]
    fn bang_bang_profile_solves_ermakov() {
        let p = bang_bang_protocol(1.0, 0.8, gamma(), 1.0).unwrap();
        let s1 = p.breakpoints()[1];
        for s in crate::linspace(0.0, p.sf, 41) {
            if (s - s1).abs() < 1e-9 {
                continue;
            }
            let d = p.scaling(s);
            let r = d.d2 + p.control(s) * d.value - d.value.powi(-3);
            assert!(r.abs() < 1e-12, "s = {s}: residual {r}");
        }
    }

    #[test]
    fn static_trap_has_unit_energy() {
        let spec = ExpansionSpec::new(1.5, 2.0).unwrap();
        let flat = fit_constrained_polynomial(0, &[], &BTreeMap::from([(0, 1.0)]), spec.sf).unwrap();
        assert!((mean_energy(&flat, 1e-12).unwrap() - 1.0).abs() < 1e-14);
        let c = control_from_scaling(&flat).unwrap();
        assert!((c.control(0.7) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quintic_starts_from_unit_control() {
        let spec = ExpansionSpec::new(gamma(), 4.0).unwrap();
        let p = quintic_protocol(&spec).unwrap();
        assert!((p.control(0.0) - 1.0).abs() < 1e-12);
        let (bound, _) = oct_energy_bound(&spec).unwrap();
        assert!(p.mean_energy > bound);
    }

    #[test]
    fn switching_time_formulas() {
        let g = gamma();
        let (s1, sf) = bang_bang_times(1.0, 1.0, g).unwrap();
        assert!(s1 > 0.0);
        assert!((sf - (PI / 4.0 + 0.5 * 5f64.sqrt().ln())).abs() < 1e-10);
        assert!((minimal_bang_bang_time(g) - sf).abs() < 1e-10);
        let (s1, sf) = bang_bang_times(0.7, 1.0 / g, g).unwrap();
        assert_eq!(s1, 0.0);
        assert!((sf - PI * g / 2.0).abs() < 1e-10);
        assert!(bang_bang_times(1.0, 0.5, g).is_err());
    }

    #[test]
    fn bang_bang_is_continuous_at_switch() {
        let p = bang_bang_protocol(0.6, 0.8, gamma(), 1.0).unwrap();
        let ScalingProfile::BangBang(bb) = p.profile else { unreachable!() };
        let left = from_square(BangBang { s1: f64::INFINITY, ..bb }.square(bb.s1));
        let right = p.scaling(bb.s1);
        assert!((left.value - right.value).abs() < 1e-9);
        assert!((left.d1 - right.d1).abs() < 1e-9);
        assert!((p.scaling(0.0).value - 1.0).abs() < 1e-12);
        assert!((p.scaling(p.sf).value - gamma()).abs() < 1e-12);
    }

    #[test]
    fn two_jump_profile_and_energy() {
        let g = gamma();
        let p = two_jump_protocol(g).unwrap();
        for tau in [0.1, 0.4, 0.9] {
            let want = (g * g + (1.0 - g * g) * (PI * (1.0 - tau) / 2.0).sin().powi(2)).sqrt();
            assert!((p.scaling(tau * p.sf).value - want).abs() < 1e-12);
        }
        assert!((p.control(1.0) - 1.0 / (g * g)).abs() < 1e-15);
        assert!((p.mean_energy - two_jump_mean_energy(g)).abs() < 1e-9);
    }

    #[test]
    fn bound_matches_quadrature() {
        let spec = ExpansionSpec::new(gamma(), 4.0).unwrap();
        let p = oct_energy_protocol(&spec).unwrap();
        let q = profile_mean_energy(&p.profile, &[0.0, spec.sf], 1e-12).unwrap();
        assert!((q - p.mean_energy).abs() < 1e-8);
        assert!((p.scaling(spec.sf).value - gamma()).abs() < 1e-12);
    }

    #[test]
    fn bound_domain_rejection() {
        let spec = ExpansionSpec::new(10.0, 0.1).unwrap();
        assert!(matches!(oct_energy_bound(&spec), Err(Error::Domain(_))));
    }

    #[test]
    fn negative_scaling_rejected() {
        let spec = ExpansionSpec::new(1.2, 1.0).unwrap();
        let shape = cubic_shape(&spec, 10.0, 0.0).unwrap();
        assert!(matches!(control_from_scaling(&shape), Err(Error::NonPositiveScaling(_))));
    }

    #[test]
    fn static_trap_stays_put() {
        let rhs = |_s: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0] + 1.0 / y[0].powi(3);
        };
        let t = integrate_adaptive(rhs, &[1.0, 0.0], (0.0, 5.0), &OdeOptions::default()).unwrap();
        assert!(t.states().iter().all(|y| (y[0] - 1.0).abs() < 1e-14 && y[1].abs() < 1e-14));
    }
}
