use std::f64::consts::PI;

use serde::Serialize;
use serde_json::json;
use sta_core::ansatz::ShapeFunction;
use sta_core::expansion::{
    bang_bang_protocol, oct_energy_bound, oct_energy_protocol, optimize_cubic, quintic_protocol, two_jump_protocol,
    verify_expansion, CubicObjective, ExpansionSpec, ScalingProfile,
};
use sta_core::spin::{
    oct_energy, oct_protocol, optimize_ansatz, verify_spin, SpinFamily, SpinSpec, ThetaPath, DEFAULT_EPSILON,
};
use sta_core::transport::{
    energy_optimal_protocol, hyperbolic_endpoint_mismatch, hyperbolic_protocol, optimize_hyperbolic,
    optimize_polynomial, polynomial_protocol, time_optimal_protocol, verify_transport, MassTrajectory,
    TransportProtocol, TransportSpec,
};

use crate::args::{
    ExpansionArgs, ExpansionMethodArg, ObjectiveArg, SpinArgs, SpinCaseArg, SpinMethodArg, TransportArgs,
    TransportMethodArg,
};
use crate::output::{usage, CliResult, Ctx, Outcome, Table, CHECK_SAMPLES};

/// Flag spelling of a value enum.
pub fn kebab<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

fn finite(name: &str, v: f64) -> CliResult<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        usage(format!("--{name} must be a finite number, got {v}"))
    }
}

pub fn expansion(args: &ExpansionArgs, ctx: &Ctx) -> CliResult<Outcome> {
    let method = args.method.unwrap_or(ExpansionMethodArg::Quintic);
    let gamma = match (args.gamma_sq, args.omega_f_sq_ratio) {
        (Some(_), Some(_)) => return usage("--gamma-sq and --omega-f-sq-ratio are alternatives; give one"),
        (Some(g2), None) => {
            if !(finite("gamma-sq", g2)? > 1.0) {
                return usage(format!("--gamma-sq must exceed 1, got {g2}"));
            }
            g2.sqrt()
        }
        (None, Some(r)) => ExpansionSpec::from_frequency_ratio(finite("omega-f-sq-ratio", r)?, 1.0)?.gamma,
        (None, None) => 5f64.powf(0.25),
    };
    let bang = matches!(method, ExpansionMethodArg::Bang3 | ExpansionMethodArg::Bang2);
    if bang && args.sf.is_some() {
        return usage("--sf is set by the frequencies for bang3 and bang2");
    }
    if method != ExpansionMethodArg::Bang3 && (args.w1.is_some() || args.w2.is_some()) {
        return usage("--w1 and --w2 apply to bang3 only");
    }
    if method != ExpansionMethodArg::CubicOpt && args.objective.is_some() {
        return usage("--objective applies to cubic-opt only");
    }
    let sf = finite("sf", args.sf.unwrap_or(4.0))?;
    let (w1, w2) = (args.w1.unwrap_or(1.0), args.w2.unwrap_or(1.0));
    let objective = args.objective.unwrap_or(ObjectiveArg::Fit);

    let mut spec = json!({ "method": kebab(&method), "gamma": gamma });
    match method {
        ExpansionMethodArg::Bang3 => {
            spec["w1"] = json!(w1);
            spec["w2"] = json!(w2);
        }
        ExpansionMethodArg::Bang2 => {}
        ExpansionMethodArg::CubicOpt => {
            spec["sf"] = json!(sf);
            spec["objective"] = json!(kebab(&objective));
        }
        _ => spec["sf"] = json!(sf),
    }
    echo_ctx(&mut spec, ctx);

    let mut extra = Vec::new();
    let p = match method {
        ExpansionMethodArg::Quintic => quintic_protocol(&ExpansionSpec::new(gamma, sf)?)?,
        ExpansionMethodArg::CubicOpt => {
            let obj = match objective {
                ObjectiveArg::Fit => CubicObjective::OctTrajectoryFit,
                ObjectiveArg::Energy => CubicObjective::MeanEnergy,
            };
            let (r, p) = optimize_cubic(&ExpansionSpec::new(gamma, sf)?, obj)?;
            extra.push(("a2", r.best_params[0]));
            extra.push(("a3", r.best_params[1]));
            p
        }
        ExpansionMethodArg::Bang3 => {
            let p = bang_bang_protocol(finite("w1", w1)?, finite("w2", w2)?, gamma, 1.0)?;
            extra.push(("w1", w1));
            extra.push(("w2", w2));
            p
        }
        ExpansionMethodArg::Bang2 => two_jump_protocol(gamma)?,
        ExpansionMethodArg::OctEnergy => oct_energy_protocol(&ExpansionSpec::new(gamma, sf)?)?,
    };
    if let ScalingProfile::BangBang(bb) = &p.profile {
        extra.push(("s1", bb.s1));
    }

    let mut out = Outcome::new(format!("expansion-{}", kebab(&method)), p.method.tag(), spec);
    out.put("gamma", gamma);
    out.put("sf", p.sf);
    out.put("mean_energy", p.mean_energy);
    for (k, v) in extra {
        out.put(k, v);
    }
    if let Ok((bound, _)) = ExpansionSpec::new(gamma, p.sf).and_then(|s| oct_energy_bound(&s)) {
        out.put("energy_bound", bound);
        out.put("energy_ratio", p.mean_energy / bound);
    }
    if ctx.design_only {
        return Ok(out);
    }
    let c = verify_expansion(&p, ctx.rel_tol, CHECK_SAMPLES)?;
    out.put("final_b_error", c.final_b_error);
    out.put("final_bprime_error", c.final_bprime_error);
    out.put("max_ermakov_residual", c.max_ermakov_residual);
    out.put("max_trajectory_gap", c.max_trajectory_gap);
    out.put("impulse_start", c.impulses.0);
    out.put("impulse_end", c.impulses.1);
    out.table = Some(Table {
        headers: vec!["s", "b", "bprime", "u", "energy_density"],
        rows: p.sample(ctx.points).iter().map(|r| vec![r.s, r.b, r.bprime, r.u, r.energy_density]).collect(),
    });
    Ok(out)
}

pub fn transport(args: &TransportArgs, ctx: &Ctx) -> CliResult<Outcome> {
    let method = args.method.unwrap_or(TransportMethodArg::P5);
    let omega0 = finite("omega0", args.omega0.unwrap_or(2.0 * PI * 50.0))?;
    let d = finite("d", args.d.unwrap_or(1.0))?;
    let mass = finite("mass", args.mass.unwrap_or(1.0))?;
    let time_optimal = method == TransportMethodArg::TimeOptimal;
    if !time_optimal && args.delta.is_some() {
        return usage("--delta applies to time-optimal only");
    }
    if time_optimal && args.delta.is_some() && args.tf.is_some() {
        return usage("time-optimal takes --delta or --tf, not both; each fixes the other");
    }
    if method != TransportMethodArg::Hyp && (args.a1.is_some() || args.a2.is_some()) {
        return usage("--a1 and --a2 apply to hyp only");
    }
    if args.a1.is_some() != args.a2.is_some() {
        return usage("hyp takes both --a1 and --a2, or neither to optimize them");
    }
    let tf = finite("tf", args.tf.unwrap_or(0.022))?;
    let delta = match (time_optimal, args.delta) {
        (true, Some(v)) => Some(finite("delta", v)?),
        // the bound whose minimal duration is the requested tf
        (true, None) => Some(4.0 * d / (omega0 * omega0 * tf * tf)),
        (false, _) => None,
    };
    let spec = TransportSpec { omega0, d, tf, mass, delta_bound: delta };
    spec.validate()?;

    let mut echo = json!({ "method": kebab(&method), "omega0": omega0, "d": d, "mass": mass });
    match args.delta {
        Some(v) => echo["delta"] = json!(v),
        None => echo["tf"] = json!(tf),
    }
    if let (Some(a1), Some(a2)) = (args.a1, args.a2) {
        echo["a1"] = json!(a1);
        echo["a2"] = json!(a2);
    }
    echo_ctx(&mut echo, ctx);

    let mut extra = Vec::new();
    let p = match method {
        TransportMethodArg::P5 => polynomial_protocol(&spec, 5, &[])?,
        TransportMethodArg::P7Opt | TransportMethodArg::P19 => {
            let degree = if method == TransportMethodArg::P19 { 19 } else { 7 };
            let (_, p) = optimize_polynomial(&spec, degree)?;
            if degree == 7 {
                if let MassTrajectory::Shape(ShapeFunction::Polynomial(poly)) = &p.mass {
                    let m = poly.monomial_coefficients();
                    extra.push(("a3", m[3] / d));
                    extra.push(("a4", m[4] / d));
                }
            }
            p
        }
        TransportMethodArg::Hyp => {
            let (a1, a2, p) = match (args.a1, args.a2) {
                (Some(a1), Some(a2)) => (a1, a2, hyperbolic_protocol(&spec, finite("a1", a1)?, finite("a2", a2)?)?),
                _ => {
                    let (r, p) = optimize_hyperbolic(&spec)?;
                    (r.best_params[0], r.best_params[1], p)
                }
            };
            extra.push(("a1", a1));
            extra.push(("a2", a2));
            extra.push(("endpoint_mismatch", hyperbolic_endpoint_mismatch(a1, a2)));
            p
        }
        TransportMethodArg::OctEnergy => energy_optimal_protocol(&spec)?,
        TransportMethodArg::TimeOptimal => {
            let (p, t1, _) = time_optimal_protocol(&spec)?;
            extra.push(("delta", delta.unwrap_or_default()));
            extra.push(("t1", t1));
            p
        }
    };

    let mut out = Outcome::new(format!("transport-{}", kebab(&method)), &p.method.tag(), echo);
    out.put("tf", p.tf());
    out.put("mean_potential", p.mean_potential);
    out.put("normalized_potential", p.normalized_potential());
    out.put("oct_normalized_potential", p.spec.oct_mean_potential() / p.spec.energy_unit());
    out.put("ratio", p.ratio());
    for (k, v) in extra {
        out.put(k, v);
    }
    put_jumps(&mut out, &p);
    if ctx.design_only {
        return Ok(out);
    }
    let c = verify_transport(&p, ctx.rel_tol, CHECK_SAMPLES)?;
    out.put("excitation", c.excitation);
    out.put("final_position_error", c.final_position_error);
    out.put("final_velocity_error", c.final_velocity_error);
    out.put("max_newton_residual", c.max_newton_residual);
    out.put("max_trajectory_gap", c.max_trajectory_gap);
    out.table = Some(Table {
        headers: vec!["t", "x", "x0", "u", "Ep"],
        rows: p.sample(ctx.points).iter().map(|r| vec![r.t, r.x, r.x0, r.u, r.potential]).collect(),
    });
    Ok(out)
}

/// Trap jumps at the ends, in units of `d`.
fn put_jumps(out: &mut Outcome, p: &TransportProtocol) {
    let (mut start, mut end) = (0.0, 0.0);
    for j in p.jumps() {
        let size = (j.after - j.before) / p.spec.d;
        if j.time == 0.0 {
            start = size;
        } else {
            end = size;
        }
    }
    out.put("trap_jump_start", start);
    out.put("trap_jump_end", end);
}

pub fn spin(args: &SpinArgs, ctx: &Ctx) -> CliResult<Outcome> {
    let case = args.case.unwrap_or(SpinCaseArg::Pi2);
    let method = args.method.unwrap_or(SpinMethodArg::Oct);
    let Some(rf) = args.rf else {
        return usage("spin needs a target length --rf in (0, 1)");
    };
    if method != SpinMethodArg::P3 && args.a3.is_some() {
        return usage("--a3 applies to p3 only");
    }
    if method != SpinMethodArg::Tanh && args.a5.is_some() {
        return usage("--a5 applies to tanh only");
    }
    if method == SpinMethodArg::Oct && args.tf.is_some() {
        return usage("oct sets its own final time; drop --tf");
    }
    let theta_f = match case {
        SpinCaseArg::Pi2 => PI / 2.0,
        SpinCaseArg::Flip => PI,
    };
    let spec = SpinSpec { theta_f, r_f: finite("rf", rf)?, epsilon: args.epsilon.unwrap_or(DEFAULT_EPSILON), t_f: args.tf };
    spec.validate()?;

    let mut echo = json!({ "case": kebab(&case), "method": kebab(&method), "rf": rf, "epsilon": spec.epsilon });
    if let Some(tf) = args.tf {
        echo["tf"] = json!(tf);
    }
    let family = match method {
        SpinMethodArg::Oct => None,
        SpinMethodArg::P2 => Some(SpinFamily::Quadratic),
        SpinMethodArg::P3 => {
            let a3 = finite("a3", args.a3.unwrap_or(0.1))?;
            echo["a3"] = json!(a3);
            Some(SpinFamily::Cubic { a3 })
        }
        SpinMethodArg::P9 => Some(SpinFamily::NinthFlip),
        SpinMethodArg::Tanh => {
            if let Some(a5) = args.a5 {
                echo["a5"] = json!(finite("a5", a5)?);
            }
            Some(SpinFamily::TanhFlip { width: args.a5 })
        }
    };
    echo_ctx(&mut echo, ctx);

    let p = match family {
        None => oct_protocol(&spec)?,
        Some(f) => optimize_ansatz(&spec, f)?.1,
    };
    let names: &[&str] = match method {
        SpinMethodArg::Oct => &[],
        SpinMethodArg::P2 | SpinMethodArg::P3 => &["a1"],
        SpinMethodArg::P9 => &["c0", "c1", "c2"],
        SpinMethodArg::Tanh => &["a1", "a5"],
    };

    let energy_oct = oct_energy(&spec)?;
    let mut out = Outcome::new(format!("spin-{}-{}", kebab(&case), kebab(&method)), p.method.tag(), echo);
    out.put("theta_f", theta_f);
    out.put("r_f", rf);
    out.put("tf", p.tf());
    out.put("energy", p.energy);
    out.put("energy_oct", energy_oct);
    out.put("energy_ratio", p.energy / energy_oct);
    out.put("final_radius", p.final_radius());
    for (k, v) in names.iter().zip(&p.params) {
        out.put(k, *v);
    }
    if let ThetaPath::Oct { p1, .. } = &p.theta {
        out.put("p1", *p1);
    }
    if ctx.design_only {
        return Ok(out);
    }
    let c = verify_spin(&p, ctx.rel_tol, CHECK_SAMPLES, 0.0)?;
    out.put("theta_error", c.theta_error);
    out.put("radius_error", c.radius_error);
    out.put("target_radius_error", c.target_radius_error);
    out.put("max_field_residual", c.max_field_residual);
    out.put("phi_drift", c.phi_drift);
    let rows = p
        .sample(ctx.points)?
        .iter()
        .map(|s| {
            let r = s.a.exp();
            vec![s.t, s.theta, s.b, s.a, r, r * s.theta.sin(), 0.0, r * s.theta.cos()]
        })
        .collect();
    out.table = Some(Table { headers: vec!["t", "theta", "B", "a", "r", "Sx", "Sy", "Sz"], rows });
    Ok(out)
}

fn echo_ctx(spec: &mut serde_json::Value, ctx: &Ctx) {
    if !ctx.design_only {
        spec["points"] = json!(ctx.points);
        spec["relTol"] = json!(ctx.rel_tol);
    }
}
