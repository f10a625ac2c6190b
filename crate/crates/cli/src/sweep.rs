use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::args::{ExpansionArgs, SpinArgs, SweepArgs, SystemArg, TransportArgs};
use crate::config::{from_map, Config};
use crate::output::{fmt_real, usage, CliError, CliResult, Ctx, Outcome};
use crate::run;

struct Axis {
    name: String,
    values: Vec<f64>,
}

fn parse_axis(text: &str) -> CliResult<Axis> {
    let bad = || usage(format!("axis {text:?} is not NAME=FROM:TO:N"));
    let Some((name, range)) = text.split_once('=') else { return bad() };
    let parts: Vec<&str> = range.split(':').collect();
    let [from, to, n] = parts[..] else { return bad() };
    let (Ok(from), Ok(to), Ok(n)) = (from.parse::<f64>(), to.parse::<f64>(), n.parse::<usize>()) else {
        return bad();
    };
    if name.is_empty() || name == "method" || n == 0 || !from.is_finite() || !to.is_finite() {
        return bad();
    }
    let values = if n == 1 { vec![from] } else { sta_core::linspace(from, to, n) };
    Ok(Axis { name: name.to_string(), values })
}

fn parse_value(text: &str) -> Value {
    text.parse::<f64>().map_or_else(|_| json!(text), |v| json!(v))
}

fn run_point(system: SystemArg, settings: Map<String, Value>, ctx: &Ctx) -> CliResult<Outcome> {
    match system {
        SystemArg::Expansion => run::expansion(&from_map::<ExpansionArgs>(settings)?, ctx),
        SystemArg::Transport => run::transport(&from_map::<TransportArgs>(settings)?, ctx),
        SystemArg::Spin => run::spin(&from_map::<SpinArgs>(settings)?, ctx),
    }
}

/// Runs every grid point and method in a fixed order (x outer, then y,
/// then methods) and writes one CSV. A failing point gets an empty value
/// and its diagnostic; settings that no point could accept fail the sweep.
pub fn sweep(args: &SweepArgs, config: &Config, ctx: &Ctx, dir: &Path) -> CliResult<Outcome> {
    let Some(system) = args.system else { return usage("sweep needs --system") };
    let Some(x) = args.x.as_deref() else { return usage("sweep needs an --x axis") };
    let x = parse_axis(x)?;
    let y = args.y.as_deref().map(parse_axis).transpose()?;
    if y.as_ref().is_some_and(|y| y.name == x.name) {
        return usage("the two axes must differ");
    }
    let methods: Vec<String> = match args.methods.as_deref() {
        Some(m) => m.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
        None => vec![],
    };
    let scalar = args.scalar.clone().unwrap_or_else(|| {
        match system {
            SystemArg::Expansion => "mean_energy",
            SystemArg::Transport => "normalized_potential",
            SystemArg::Spin => "energy",
        }
        .to_string()
    });

    let mut base = config.section(system.name());
    for kv in args.set.iter().flatten() {
        let Some((k, v)) = kv.split_once('=') else { return usage(format!("--set {kv:?} is not KEY=VALUE")) };
        base.insert(k.to_string(), parse_value(v));
    }
    let default_method = match base.get("method").and_then(Value::as_str) {
        Some(m) => m.to_string(),
        None => match system {
            SystemArg::Expansion => "quintic",
            SystemArg::Transport => "p5",
            SystemArg::Spin => "oct",
        }
        .to_string(),
    };
    let method_list: Vec<&str> =
        if methods.is_empty() { vec![default_method.as_str()] } else { methods.iter().map(String::as_str).collect() };
    let ys: Vec<Option<f64>> = match &y {
        Some(a) => a.values.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let settings = |xv: f64, yv: Option<f64>, m: &str| {
        let mut s = base.clone();
        s.insert(x.name.clone(), json!(xv));
        if let (Some(a), Some(v)) = (&y, yv) {
            s.insert(a.name.clone(), json!(v));
        }
        s.insert("method".into(), json!(m));
        s
    };

    let design = Ctx { design_only: true, ..*ctx };
    let checked = Ctx { design_only: false, points: 2, ..*ctx };
    let mut rows = Vec::new();
    let mut failures = 0usize;
    for &xv in &x.values {
        for &yv in &ys {
            for &m in &method_list {
                let s = settings(xv, yv, m);
                let result = match run_point(system, s.clone(), &design) {
                    Ok(o) if !o.scalars.contains_key(&scalar) => run_point(system, s, &checked),
                    r => r,
                };
                let (value, error) = match result {
                    Ok(o) => match o.scalars.get(&scalar) {
                        Some(v) => (fmt_real(*v), String::new()),
                        None => (String::new(), format!("no scalar {scalar:?} for this method")),
                    },
                    // a malformed setting is the caller's mistake, not a point failure
                    Err(CliError::Usage(msg)) if msg.starts_with("bad setting") => return Err(CliError::Usage(msg)),
                    Err(e) => (String::new(), e.to_string()),
                };
                if !error.is_empty() {
                    failures += 1;
                }
                let mut row = vec![fmt_real(xv)];
                if let Some(v) = yv {
                    row.push(fmt_real(v));
                }
                row.push(m.to_string());
                row.extend([value, error]);
                rows.push(row);
            }
        }
    }

    let stem = format!("sweep-{}", system.name());
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join(format!("{stem}.csv")))?;
    let mut header = vec![x.name.clone()];
    if let Some(a) = &y {
        header.push(a.name.clone());
    }
    header.extend(["method".to_string(), scalar.clone(), "error".to_string()]);
    w.write_record(&header)?;
    for r in &rows {
        w.write_record(r)?;
    }
    w.flush()?;

    let spec = json!({
        "system": system.name(),
        "x": args.x,
        "y": args.y,
        "methods": method_list,
        "scalar": scalar,
        "settings": base,
        "relTol": ctx.rel_tol,
    });
    let mut out = Outcome::new(stem, "sweep", spec);
    out.put("rows", rows.len() as f64);
    out.put("failures", failures as f64);
    Ok(out)
}
