use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde_json::{json, Value};

use loopspec::collapsed::{self, ExpansionRow};
use loopspec::curve::{self, CurveFile, TangentField};
use loopspec::eigensolver::e0_of_curve;
use loopspec::ellipse;
use loopspec::gegenbauer;
use loopspec::probe::{self, ProbeConfig};
use loopspec::{Error, Result};

use crate::Command;

/// File that receives violating probe records when no `--out` is given.
pub const VIOLATION_FILE: &str = "probe-violations.jsonl";

#[derive(Debug, Clone)]
pub struct FloatList(pub Vec<f64>);

#[derive(Debug, Clone)]
pub struct UsizeList(pub Vec<usize>);

#[derive(Debug, Clone)]
pub struct SeedList(pub Vec<u64>);

pub fn parse_list(s: &str) -> std::result::Result<FloatList, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(FloatList)
}

pub fn parse_usize_list(s: &str) -> std::result::Result<UsizeList, String> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("'{t}': {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(UsizeList)
}

pub fn parse_seeds(s: &str) -> std::result::Result<SeedList, String> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.parse().map_err(|e| format!("'{a}': {e}"))?;
            let b: u64 = b.parse().map_err(|e| format!("'{b}': {e}"))?;
            if b <= a {
                return Err(format!("empty seed range {part}"));
            }
            out.extend(a..b);
        } else {
            out.push(part.parse().map_err(|e| format!("'{part}': {e}"))?);
        }
    }
    Ok(SeedList(out))
}

pub fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let v = parse_list(s)?.0;
    match v[..] {
        [a, b] => Ok((a, b)),
        _ => Err(format!("expected two numbers 'a,b', got '{s}'")),
    }
}

pub struct Outcome {
    pub value: Value,
    /// Records to append when `--out` is given.
    pub json_lines: Option<String>,
    pub violation: bool,
}

impl From<Value> for Outcome {
    fn from(value: Value) -> Self {
        Outcome {
            value,
            json_lines: None,
            violation: false,
        }
    }
}

pub fn dispatch(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::E0(a) => e0(a.curve.as_deref(), a.family, a.modes).map(Into::into),
        Command::Identity(a) => identity(a.alpha, a.beta).map(Into::into),
        Command::Eta(a) => eta(a.axes.alpha, a.axes.beta, a.modes).map(Into::into),
        Command::Asymptotics(a) => asymptotics(&a.betas.0).map(Into::into),
        Command::Collapsed(a) => collapsed_spectrum(a.axes.alpha, a.axes.beta, a.neigs, a.basis).map(Into::into),
        Command::Lemma4(a) => lemma4(a.order, &a.mus.0, a.alpha, a.direction).map(Into::into),
        Command::Gegenbauer(a) => gegenbauer_table(a.g, a.nmax, &a.basis.0).map(Into::into),
        Command::Probe(a) => {
            let cfg = ProbeConfig {
                modes: a.modes,
                amplitude: a.amplitude,
                max_evaluations: a.max_evals,
                restarts: a.restarts,
                initial_step: a.initial_step,
                min_step: a.min_step,
                ..ProbeConfig::default()
            };
            run_probes(&a.seeds.0, &cfg)
        }
        Command::Theorem1(a) => theorem1(a.axes.alpha, a.axes.beta, &a.direction, &a.mus.0).map(Into::into),
    }
}

fn load_curve(path: &Path) -> Result<TangentField> {
    let text = std::fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => curve::read_curve_json(&text),
        Some("csv") => curve::read_curve_csv(&text),
        _ => Err(Error::InvalidInput(format!(
            "{}: curve files must end in .json or .csv",
            path.display()
        ))),
    }
}

fn e0(path: Option<&Path>, family: Option<(f64, f64)>, modes: Option<usize>) -> Result<Value> {
    let (source, field) = match (path, family) {
        (Some(p), _) => {
            let u = load_curve(p)?;
            let u = match modes {
                Some(n) => CurveFile::from_field(&u, n).to_field()?,
                None => u,
            };
            (p.display().to_string(), u)
        }
        (None, Some((a, b))) => {
            let u = match modes {
                Some(n) => curve::family_f_on_grid(a, b, &Matrix3::identity(), curve::grid_size(n))?,
                None => curve::family_f(a, b, &Matrix3::identity())?,
            };
            (format!("family {a},{b}"), u)
        }
        (None, None) => return Err(Error::InvalidInput("give --curve or --family".into())),
    };
    let gs = e0_of_curve(&field)?;
    Ok(json!({
        "source": source,
        "e0": gs.e0,
        "residual": gs.residual,
        "grid_size": field.grid_size(),
        "closure_defect": field.closure_defect().norm(),
        "unit_defect": field.unit_defect(),
    }))
}

fn identity(alpha: f64, beta: f64) -> Result<Value> {
    let i = ellipse::i_integrals(alpha, beta)?;
    let lhs = alpha * alpha * i.i1;
    let rhs = beta * beta * i.i2;
    let closed = ellipse::closed_form_i(alpha, beta).ok();
    Ok(json!({
        "alpha": alpha,
        "beta": beta,
        "I1": i.i1,
        "I2": i.i2,
        "I3": i.i3,
        "alpha2_I1": lhs,
        "beta2_I2": rhs,
        "relative_gap": (lhs - rhs).abs() / lhs.abs(),
        "closed_form_I1": closed.map(|c| c.0),
        "closed_form_I2": closed.map(|c| c.1),
    }))
}

fn eta(alpha: f64, beta: f64, modes: Option<usize>) -> Result<Value> {
    let cutoff = modes.unwrap_or_else(|| ellipse::auto_mode_cutoff(alpha, beta));
    let r = ellipse::d_matrix_eta(alpha, beta, cutoff)?;
    Ok(serde_json::to_value(r)?)
}

fn asymptotics(betas: &[f64]) -> Result<Value> {
    let rows = ellipse::beta_asymptotics(betas)?;
    let rows: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "beta": r.beta,
                "I1": r.i1,
                "I2": r.i2,
                "I3": r.i3,
                "A0_11": r.a0[0],
                "A0_22": r.a0[1],
                "A0_33": r.a0[2],
                "eta": r.eta,
                "I1_over_b2logb": r.ratio1,
                "I2_over_logb": r.ratio2,
                "I3_over_logb": r.ratio3,
            })
        })
        .collect();
    Ok(json!({ "alpha": 1.0, "rows": rows }))
}

fn collapsed_spectrum(alpha: f64, beta: f64, neigs: usize, basis: usize) -> Result<Value> {
    if neigs == 0 {
        return Err(Error::OutOfRange("--neigs must be positive".into()));
    }
    let r = collapsed::constrained_spectrum(alpha, beta, neigs, basis)?;
    let rows: Vec<Value> = r
        .eta_values
        .iter()
        .enumerate()
        .map(|(n, e)| json!({ "n": n, "eta": e }))
        .collect();
    Ok(json!({
        "alpha": alpha,
        "beta": beta,
        "basis_per_interval": r.basis_per_interval,
        "g_right": r.coupling.0,
        "g_left": r.coupling.1,
        "w0_check": r.w0_check,
        "w0_correlation": r.w0_correlation,
        "lambda0_galerkin": r.lambda_bounds.0,
        "lambda1_galerkin": r.lambda_bounds.1,
        "lambda0_exact": r.lambda_exact.0,
        "lambda1_exact": r.lambda_exact.1,
        "rows": rows,
    }))
}

fn expansion_rows(direction: usize, rows: Vec<ExpansionRow>) -> Vec<Value> {
    rows.into_iter()
        .map(|r| {
            json!({
                "direction": direction,
                "component": r.component,
                "mu": r.mu,
                "direct": r.direct,
                "predicted": r.predicted,
                "residual": r.residual,
                "residual_over_power": r.residual_over_power,
            })
        })
        .collect()
}

fn lemma4(order: u8, mus: &[f64], alpha: f64, direction: Option<u8>) -> Result<Value> {
    let pick = |k: usize| direction.is_none_or(|d| d as usize == k + 1);
    let mut rows = Vec::new();
    if order == 1 {
        for (k, d) in collapsed::first_order_directions().iter().enumerate().filter(|(k, _)| pick(*k)) {
            rows.extend(expansion_rows(k + 1, collapsed::lemma41_check(alpha, d, mus)?));
        }
    } else {
        for (k, (x1, x2)) in collapsed::second_order_directions().iter().enumerate().filter(|(k, _)| pick(*k)) {
            rows.extend(expansion_rows(k + 1, collapsed::lemma42_check(alpha, x1, x2, mus)?));
        }
    }
    Ok(json!({ "order": order, "alpha": alpha, "rows": rows }))
}

fn gegenbauer_table(g: f64, nmax: usize, basis: &[usize]) -> Result<Value> {
    let a = gegenbauer::exponent_a(g)?;
    if nmax > gegenbauer::MAX_DEGREE {
        return Err(Error::OutOfRange(format!("--nmax {nmax} exceeds {}", gegenbauer::MAX_DEGREE)));
    }
    let rows = gegenbauer::spectrum_table(g, nmax, basis)?;
    Ok(json!({ "g": g, "a": a, "rows": serde_json::to_value(rows)? }))
}

fn run_probes(seeds: &[u64], cfg: &ProbeConfig) -> Result<Outcome> {
    if seeds.is_empty() {
        return Err(Error::InvalidInput("no seeds given".into()));
    }
    let records = probe::probe_battery(seeds, cfg)?;
    let mut lines = String::new();
    let mut violating = String::new();
    for r in &records {
        let line = serde_json::to_string(&crate::render::round_json(serde_json::to_value(r)?))?;
        lines.push_str(&line);
        lines.push('\n');
        if r.violation_flag {
            violating.push_str(&line);
            violating.push('\n');
        }
    }
    let violation = !violating.is_empty();
    let rows: Vec<Value> = records
        .iter()
        .map(|r| {
            json!({
                "seed": r.seed,
                "start_e0": r.start_e0,
                "best_e0": r.best_e0,
                "evaluations": r.evaluations,
                "accepted_steps": r.accepted_steps,
                "family_distance": r.family.distance,
                "violation": r.violation_flag,
            })
        })
        .collect();
    let min = records.iter().map(|r| r.best_e0).fold(f64::INFINITY, f64::min);
    Ok(Outcome {
        value: json!({
            "probes": records.len(),
            "min_best_e0": min,
            "violations": records.iter().filter(|r| r.violation_flag).count(),
            "rows": rows,
        }),
        json_lines: Some(lines),
        violation,
    })
    .inspect(|o| {
        if o.violation {
            persist_violations(&violating);
        }
    })
}

fn persist_violations(lines: &str) {
    use std::io::Write;
    let written = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(VIOLATION_FILE)
        .and_then(|mut f| f.write_all(lines.as_bytes()));
    match written {
        Ok(()) => eprintln!("violating records appended to {VIOLATION_FILE}"),
        Err(e) => eprintln!("could not persist violating records: {e}"),
    }
}

fn direction(base: &TangentField, alpha: f64, beta: f64, spec: &str) -> Result<Vec<Vector3<f64>>> {
    let m = base.grid_size();
    let raw = match spec {
        "family" => return Ok(probe::family_direction(alpha, beta, m)),
        "out-of-plane" => base
            .s_grid()
            .iter()
            .map(|s| Vector3::new(0.0, 0.0, (2.0 * s).cos()))
            .collect::<Vec<_>>(),
        other => {
            let seed = other
                .strip_prefix("random:")
                .and_then(|s| s.parse::<u64>().ok())
                .ok_or_else(|| Error::InvalidInput(format!("unknown direction '{other}'")))?;
            return probe::random_direction(base, seed, 4);
        }
    };
    probe::admissible_direction(base, &raw)
}

fn theorem1(alpha: f64, beta: f64, spec: &str, mus: &[f64]) -> Result<Value> {
    let base = curve::family_f(alpha, beta, &Matrix3::identity())?;
    let u1 = direction(&base, alpha, beta, spec)?;
    let scan = probe::theorem1_scan_on(&base, alpha, beta, &u1, mus)?;
    let rows: Vec<Value> = scan.points.iter().map(|p| json!({ "mu": p.mu, "e0": p.e0 })).collect();
    Ok(json!({
        "alpha": alpha,
        "beta": beta,
        "direction": spec,
        "q": scan.q,
        "odd": scan.odd,
        "quartic": scan.quartic,
        "fit_residual": scan.fit_residual,
        "min_excess": scan.min_excess,
        "rows": rows,
    }))
}
