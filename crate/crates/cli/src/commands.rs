//! One function per command. Each returns its CSV table, a JSON report and
//! the list of invariant violations it observed.

use hillgap::basic_equation::{n_star, s_matrix};
use hillgap::config::{cosine_coefficients, PotentialConfig};
use hillgap::gaps::{asymptotics_report, spectral_triples};
use hillgap::inverse_map::{ball_radius, coefficients_of, contraction_probe, phi_tail, reconstruct, TailImage};
use hillgap::perturb::{en_taylor_estimates, radius_report};
use hillgap::potential::PotentialSpec;
use hillgap::riesz::{deviation_records, summarize};
use hillgap::spectrum::{spectrum_csv, spectrum_table, Method, SpectrumSolver};
use hillgap::weights::{make_weight, oscillating_preset, Weight, WeightSpec};
use hillgap::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{Command, MethodChoice, RunConfig};
use crate::CliError;

/// Raw text of every file the run reads.
#[derive(Debug, Default)]
pub struct Inputs {
    pub potential: Option<String>,
    pub weight: Option<String>,
    pub target: Option<String>,
}

pub struct Outcome {
    pub csv: String,
    pub report: Value,
    pub violations: Vec<String>,
}

const AGREEMENT_TOL: f64 = 1e-6;
const SYMMETRY_TOL: f64 = 1e-10;

fn potential(inputs: &Inputs) -> Result<PotentialSpec, CliError> {
    let text = inputs.potential.as_deref().ok_or_else(|| CliError::Config("no potential given".into()))?;
    Ok(PotentialConfig::from_json(text)?.build()?)
}

fn weight(inputs: &Inputs, range: usize) -> Result<Weight, CliError> {
    match &inputs.weight {
        Some(text) => Ok(hillgap::config::weight_from_json(text, range)?),
        None => Ok(Weight::unit(range)),
    }
}

fn cplx(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn run(cfg: &RunConfig, inputs: &Inputs) -> Result<Outcome, CliError> {
    match cfg.command {
        Command::Spectrum => spectrum(cfg, inputs),
        Command::Gaps => gaps(cfg, inputs),
        Command::Reconstruct => reconstruct_cmd(cfg, inputs),
        Command::Riesz => riesz(cfg, inputs),
        Command::Perturb => perturb(cfg, inputs),
        Command::Weights => weights(cfg, inputs),
    }
}

fn spectrum(cfg: &RunConfig, inputs: &Inputs) -> Result<Outcome, CliError> {
    let p = potential(inputs)?;
    let methods: Vec<Method> = match cfg.method {
        MethodChoice::Basic => vec![Method::Basic],
        MethodChoice::Matrix => vec![Method::Matrix],
        MethodChoice::Shoot => vec![Method::Shoot],
        MethodChoice::All => Method::ALL.to_vec(),
    };
    let solver = SpectrumSolver::new(&p, cfg.cutoff);
    let rows = spectrum_table(&solver, cfg.n_range.0..=cfg.n_range.1, &methods)?;
    let mut violations = Vec::new();
    if methods.len() > 1 {
        for r in rows.iter().filter(|r| r.discrepancy > AGREEMENT_TOL) {
            violations.push(format!("n = {}: methods disagree by {:.3e}", r.n, r.discrepancy));
        }
    }
    // symmetry of the reduced matrix at seeded probe points
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut probes = Vec::new();
    for n in cfg.n_range.0..=cfg.n_range.1 {
        let r = n as f64 / 4.0;
        for j in 0..cfg.probes {
            let z = if p.is_real() && j % 2 == 0 {
                C64::new(rng.gen_range(-r..r), 0.0)
            } else {
                C64::from_polar(r * rng.gen::<f64>().sqrt(), rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
            };
            let Ok(s) = s_matrix(&p, n, z, cfg.cutoff) else { continue };
            let scale = [s.s11, s.s12, s.s21, s.s22].iter().map(|x| x.norm()).fold(1.0, f64::max);
            let diag = (s.s11 - s.s22).norm() / scale;
            let conj = if p.is_real() && z.im == 0.0 { (s.s12 - s.s21.conj()).norm() / scale } else { 0.0 };
            if diag > SYMMETRY_TOL || conj > SYMMETRY_TOL {
                violations.push(format!("n = {n}, z = {z}: reduced matrix symmetry defect {:.3e}", diag.max(conj)));
            }
            probes.push(json!({"n": n, "z": cplx(z), "diag_defect": diag, "conj_defect": conj}));
        }
    }
    let report = json!({
        "rows": rows.iter().map(|r| json!({"n": r.n, "discrepancy": r.discrepancy})).collect::<Vec<_>>(),
        "symmetry_probes": probes,
    });
    Ok(Outcome { csv: spectrum_csv(&rows), report, violations })
}

fn gaps(cfg: &RunConfig, inputs: &Inputs) -> Result<Outcome, CliError> {
    let p = potential(inputs)?;
    let range = (cfg.n_range.1 as usize).max(p.support() as usize / 2);
    let w = weight(inputs, range)?;
    let records = spectral_triples(&p, cfg.n_range.0..=cfg.n_range.1, cfg.cutoff)?;
    let rep = asymptotics_report(records, &w, &p)?;
    let report = json!({
        "lhs_sum": rep.lhs_sum,
        "norm_sq": rep.rhs_bound_terms.0,
        "norm_4": rep.rhs_bound_terms.1,
        "measured_c1": rep.measured_c1(),
        "summands_nonincreasing_after_6": rep.summands_nonincreasing_after(6),
        "ratio_table": rep.ratio_table,
    });
    let violations = rep.violations.iter().map(|v| format!("n = {}: {}", v.n, v.what)).collect();
    Ok(Outcome { csv: rep.to_csv(), report, violations })
}

fn reconstruct_cmd(cfg: &RunConfig, inputs: &Inputs) -> Result<Outcome, CliError> {
    let n_max = (cfg.cutoff / 4) as u64;
    let w = weight(inputs, n_max as usize)?;
    let original = inputs.potential.as_ref().map(|_| potential(inputs)).transpose()?;
    let target = match (&inputs.target, &original) {
        (Some(text), _) => TailImage::from_json(text)?,
        (None, Some(p)) => phi_tail(p, cfg.n_head, n_max, cfg.cutoff)?,
        (None, None) => return Err(CliError::Config("reconstruct needs a target or a potential".into())),
    };
    let rec = reconstruct(&target, &w, cfg.cutoff, cfg.max_iter, cfg.tol)?;
    let mut violations = Vec::new();
    let mut report = json!({
        "N": target.n_head,
        "n_max": target.n_max(),
        "iterations": rec.iterations,
        "residuals": rec.residuals,
        "final_residual": rec.final_residual(),
        "decay_ratio": rec.decay_ratio,
        "ball_radius": ball_radius(target.n_head),
        "coefficients": rec.coefficients.iter().map(|(k, c)| json!({"k": k, "value": cplx(*c)})).collect::<Vec<_>>(),
    });
    if let Some(p) = &original {
        let truth = coefficients_of(p, target.n_max());
        let err = truth
            .iter()
            .map(|(k, c)| (rec.coefficients.get(k).copied().unwrap_or_default() - c).norm())
            .fold(0.0, f64::max);
        if err > 1e-8 {
            violations.push(format!("round trip misses the potential by {err:.3e}"));
        }
        let ns = n_star(p, cfg.cutoff).ok();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut ratios = Vec::new();
        for _ in 0..cfg.probes.min(4) {
            let t: f64 = rng.gen_range(0.5..0.95);
            ratios.push(json!({"scale": t, "ratio": contraction_probe(p, &p.scaled(t), target.n_head, &w, cfg.cutoff)?}));
        }
        report["round_trip_error"] = json!(err);
        report["n_star"] = json!(ns);
        report["contraction_panel"] = json!(ratios);
    }
    report["target"] = serde_json::to_value(&target).map_err(|e| CliError::Compute(e.to_string()))?;
    let csv = std::iter::once("k,re,im".to_string())
        .chain(rec.coefficients.iter().map(|(k, c)| format!("{k},{:.16e},{:.16e}", c.re, c.im)))
        .collect::<Vec<_>>()
        .join("\n")
        + "\n";
    Ok(Outcome { csv, report, violations })
}

fn riesz(cfg: &RunConfig, inputs: &Inputs) -> Result<Outcome, CliError> {
    let p = potential(inputs)?;
    let records = deviation_records(&p, cfg.n_range.0..=cfg.n_range.1, cfg.bc.into(), cfg.cutoff, cfg.nodes)?;
    let mut violations = Vec::new();
    for d in &records {
        if !d.is_projection(1e-8) {
            violations.push(format!("n = {}: trace {} and idempotency defect {:.3e}", d.n, d.trace, d.idempotency_defect));
        }
        if d.l2_opnorm > d.l1_linf_proxy * (1.0 + 1e-12) {
            violations.push(format!("n = {}: operator norm exceeds the entry sum", d.n));
        }
    }
    let scan = summarize(&records);
    let report = json!({
        "slope": scan.slope,
        "strictly_decreasing": scan.strictly_decreasing,
        "records": records.iter().map(|d| json!({
            "n": d.n,
            "trace": cplx(d.trace),
            "idempotency_defect": d.idempotency_defect,
            "last_change": d.last_change,
        })).collect::<Vec<_>>(),
    });
    Ok(Outcome { csv: scan.to_csv(), report, violations })
}

fn perturb(cfg: &RunConfig, inputs: &Inputs) -> Result<Outcome, CliError> {
    let p = potential(inputs)?;
    let vk = cosine_coefficients(&p)?;
    let rep = radius_report(&vk, cfg.n_range.0..=cfg.n_range.1);
    let mut violations: Vec<String> = rep.lower_bound_failures().iter().map(|n| format!("n = {n}: lower bound on |a2| fails")).collect();
    let mut checks = Vec::new();
    for r in rep.records.iter().filter(|r| r.n <= 6) {
        let (d1, d2) = en_taylor_estimates(&vk, r.n, 0.01)?;
        let e1 = (d1 - r.a1).abs();
        let e2 = if r.a2 != 0.0 { ((d2 - r.a2) / r.a2).abs() } else { d2.abs() };
        if e1 > 1e-7 || e2 > 1e-5 {
            violations.push(format!("n = {}: finite differences disagree (a1 {e1:.3e}, a2 {e2:.3e})", r.n));
        }
        checks.push(json!({"n": r.n, "fd_a1": d1, "fd_a2": d2, "a1_error": e1, "a2_rel_error": e2}));
    }
    let report = json!({"slope": rep.slope, "records": rep.records, "finite_difference_checks": checks});
    Ok(Outcome { csv: rep.to_csv(), report, violations })
}

fn weights(cfg: &RunConfig, inputs: &Inputs) -> Result<Outcome, CliError> {
    let text = inputs.weight.as_deref().ok_or_else(|| CliError::Config("no weight given".into()))?;
    let spec: WeightSpec = serde_json::from_str(text).map_err(|e| CliError::Config(format!("weight: {e}")))?;
    let range = cfg.cutoff;
    let (w, g, breakpoints) = match &spec {
        WeightSpec::Oscillating { preset, alpha, beta } => {
            let o = oscillating_preset(*preset, alpha.unwrap_or(0.0), beta.unwrap_or(1.0), range)?;
            (o.weight, Some(o.g), o.breakpoints)
        }
        _ => (make_weight(&spec, range)?, None, Vec::new()),
    };
    let mut csv = String::from(if g.is_some() { "k,Omega,g\n" } else { "k,Omega\n" });
    for k in 0..=w.range() {
        let omega = w.value(k as i64);
        match &g {
            Some(g) => csv.push_str(&format!("{k},{omega:.16e},{:.16e}\n", g[k])),
            None => csv.push_str(&format!("{k},{omega:.16e}\n")),
        }
    }
    let report = json!({
        "kind": w.kind(),
        "range": w.range(),
        "breakpoints": breakpoints,
        "submultiplicativity_violation": w.submultiplicativity_violation(64.min(range as i64)),
    });
    let violations = w
        .submultiplicativity_violation(64.min(range as i64))
        .map(|(m, n)| format!("omega not submultiplicative at ({m}, {n})"))
        .into_iter()
        .collect();
    Ok(Outcome { csv, report, violations })
}
