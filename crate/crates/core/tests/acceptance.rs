//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::f64::consts::{FRAC_2_PI, SQRT_2};
use std::process::ExitCode;
use std::time::Instant;

use hillgap::basic_equation::{n_star, s_matrix, solve_disc_pair};
use hillgap::gaps::{asymptotics_report, spectral_triples, ENVELOPE, ENVELOPE_FLOOR};
use hillgap::inverse_map::{coefficients_of, contraction_probe, phi_tail, reconstruct};
use hillgap::matrix_op::{assemble_matrix, Bc};
use hillgap::perturb::{a1_coefficient, a2_coefficient, en_taylor_estimates, radius_report};
use hillgap::potential::PotentialSpec;
use hillgap::riesz::{deviation_scan, first_order_deviation, projection_deviation, BcFamily};
use hillgap::shooting::{kronig_penney_pair, Shooter};
use hillgap::spectrum::{spectrum_table, Method, SpectrumSolver};
use hillgap::weights::{make_weight, Weight, WeightSpec};
use hillgap::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const ZERO: C64 = C64::new(0.0, 0.0);

fn mathieu() -> PotentialSpec {
    PotentialSpec::from_cosine(0.0, &[SQRT_2]).unwrap()
}

fn two_mode() -> PotentialSpec {
    PotentialSpec::from_cosine(0.0, &[SQRT_2, 1.0 / SQRT_2]).unwrap()
}

fn complex_potential() -> PotentialSpec {
    PotentialSpec::from_v(ZERO, [(2, C64::new(1.0, 0.0)), (-2, C64::new(0.5, 0.3)), (4, C64::new(0.0, 0.5))], false).unwrap()
}

fn gasymov() -> PotentialSpec {
    PotentialSpec::from_v(ZERO, [(2, C64::new(1.0, 0.0))], false).unwrap()
}

fn comb() -> PotentialSpec {
    PotentialSpec::delta_comb(1.0, 256).unwrap()
}

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    format!("error: {err}")
}

fn free_operator() -> Outcome {
    let solver = SpectrumSolver::new(&PotentialSpec::zero(), 64);
    let rows = spectrum_table(&solver, 1..=16, &Method::ALL).map_err(e)?;
    let mut worst = 0.0f64;
    for row in &rows {
        let n2 = (row.n * row.n) as f64;
        for (_, t) in &row.triples {
            let errs = [(t.lambda_plus - n2).norm(), (t.lambda_minus - n2).norm(), (t.mu - n2).norm(), t.gamma, t.delta, t.big_delta];
            worst = errs.iter().fold(worst, |a, &b| a.max(b));
        }
    }
    let mut nonzero = 0;
    for n in 1..=16 {
        for bc in [Bc::periodic_for(n), Bc::Dir] {
            let d = projection_deviation(&PotentialSpec::zero(), n, bc, 64, 16).map_err(e)?;
            nonzero += d.b.as_slice().iter().filter(|z| **z != ZERO).count();
        }
    }
    check(worst <= 1e-10 && nonzero == 0, format!("max eigenvalue/gap error {worst:.2e}, nonzero deviation entries {nonzero}"))
}

fn triple_oracle() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    let mut from = Vec::new();
    for p in [mathieu(), two_mode()] {
        let ns = n_star(&p, 64).map_err(e)?;
        from.push(ns);
        let rows = spectrum_table(&SpectrumSolver::new(&p, 64), ns..=12, &Method::ALL).map_err(e)?;
        for r in &rows {
            worst.0 = worst.0.max(r.discrepancy);
            worst.1 = worst.1.max(r.disagreement(Method::Basic, Method::Matrix).unwrap());
        }
    }
    check(
        worst.0 <= 1e-6 && worst.1 <= 1e-8,
        format!("from n_star {from:?}: pairwise {:.2e}, basic vs matrix {:.2e}", worst.0, worst.1),
    )
}

fn symmetry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut probes = 0;
    for p in [mathieu(), two_mode(), complex_potential(), gasymov(), comb()] {
        for j in 0..50 {
            let n: u64 = rng.gen_range(2..=12);
            let r = n as f64 / 4.0;
            let z = if p.is_real() && j % 2 == 0 {
                C64::new(rng.gen_range(-r..r), 0.0)
            } else {
                C64::from_polar(r * rng.gen::<f64>().sqrt(), rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
            };
            let s = s_matrix(&p, n, z, 64).map_err(e)?;
            let mut d = (s.s11 - s.s22).norm();
            if p.is_real() && z.im == 0.0 {
                d = d.max((s.s12 - s.s21.conj()).norm());
            }
            worst = worst.max(d);
            probes += 1;
        }
    }
    check(worst <= 1e-10, format!("{probes} probes, max defect {worst:.2e}"))
}

fn zero_gap() -> Outcome {
    let p = gasymov();
    let ns = n_star(&p, 64).map_err(e)?;
    let mut worst = 0.0f64;
    let mut uncertified = Vec::new();
    for n in ns..=10 {
        let pair = solve_disc_pair(&p, n, 64).map_err(e)?;
        worst = worst.max(pair.gamma());
        let count = assemble_matrix(&p, Bc::periodic_for(n), 64)
            .map_err(e)?
            .winding_count(C64::new((n * n) as f64, 0.0), n as f64 / 4.0)
            .map_err(e)?;
        if !pair.degenerate || count != 2 {
            uncertified.push(n);
        }
    }
    check(
        worst <= 1e-8 && uncertified.is_empty(),
        format!("n in {ns}..=10: max gap {worst:.2e}, uncertified {uncertified:?}"),
    )
}

fn envelope() -> Outcome {
    let mut bad = Vec::new();
    let mut tested = 0;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for (name, p) in [("mathieu", mathieu()), ("two-mode", two_mode()), ("complex", complex_potential()), ("comb", comb())] {
        let ns = n_star(&p, 64).map_err(e)?.max(4);
        for rec in spectral_triples(&p, ns..=12, 64).map_err(e)? {
            let c = rec.coupling();
            if c <= ENVELOPE_FLOOR {
                continue;
            }
            tested += 1;
            let ratio = rec.triple.big_delta / c;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
            if !(ENVELOPE.0..=ENVELOPE.1).contains(&ratio) {
                bad.push(format!("{name} n = {}: {ratio:.3e}", rec.triple.n));
            }
        }
    }
    check(bad.is_empty() && tested > 0, format!("{tested} indices, ratios in [{lo:.3}, {hi:.3}] {bad:?}"))
}

fn gap_sum() -> Outcome {
    let w = make_weight(&WeightSpec::Power { a: 1.0 }, 64).map_err(e)?;
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, p) in [("mathieu", mathieu()), ("two-mode", two_mode()), ("complex", complex_potential())] {
        let ns = n_star(&p, 64).map_err(e)?;
        let rep = asymptotics_report(spectral_triples(&p, ns..=16, 64).map_err(e)?, &w, &p).map_err(e)?;
        let mono = rep.summands_nonincreasing_after(6);
        ok &= rep.lhs_sum.is_finite() && mono;
        notes.push(format!("{name}: lhs {:.4e}, C1 {:.3e}, monotone {mono}", rep.lhs_sum, rep.measured_c1().unwrap_or(0.0)));
    }
    check(ok, notes.join("; "))
}

fn perturbation() -> Outcome {
    let vk = [1.0];
    let a21 = a2_coefficient(&vk, 1, 64);
    let a22 = a2_coefficient(&vk, 2, 64);
    let mut ok = (a21 + 1.0 / 16.0).abs() < 1e-14 && (a22 + 1.0 / 24.0).abs() < 1e-14;
    let (mut fd2, mut fd1) = (0.0f64, 0.0f64);
    for n in 1..=4 {
        let (d1, d2) = en_taylor_estimates(&vk, n, 0.01).map_err(e)?;
        let a2 = a2_coefficient(&vk, n, 64);
        fd1 = fd1.max((d1 - a1_coefficient(&vk, n)).abs());
        fd2 = fd2.max(((d2 - a2) / a2).abs());
    }
    ok &= fd1 <= 1e-7 && fd2 <= 1e-5;
    let family: Vec<f64> = (1..=20).map(|k| 0.05 / k as f64).collect();
    let rep = radius_report(&family, 1..=80);
    let checked = rep.records.iter().filter(|r| r.hypothesis_holds).count();
    let failures = rep.lower_bound_failures();
    ok &= checked > 0 && failures.is_empty();
    check(
        ok,
        format!(
            "a2(1) = {a21:.6}, a2(2) = {a22:.6}, a1 err {fd1:.1e}, a2 rel err {fd2:.1e}, lower bound on {checked} indices, failures {failures:?}"
        ),
    )
}

fn riesz_decay() -> Outcome {
    let smooth = deviation_scan(&mathieu(), 4..=20, BcFamily::Periodic, Some(80)).map_err(e)?;
    let slope = smooth.slope.unwrap_or(0.0);
    let singular = deviation_scan(&PotentialSpec::delta_comb(1.0, 384).map_err(e)?, 6..=24, BcFamily::Periodic, Some(96)).map_err(e)?;
    let p = mathieu();
    let t = 1e-3;
    let mut fo = 0.0f64;
    for (n, bc) in [(4, Bc::PerPlus), (5, Bc::PerMinus), (4, Bc::Dir)] {
        let up = projection_deviation(&p.scaled(t), n, bc, 48, 64).map_err(e)?.b;
        let down = projection_deviation(&p.scaled(-t), n, bc, 48, 64).map_err(e)?.b;
        let fd = up.sub(&down).scale(C64::new(0.5 / t, 0.0));
        fo = fo.max(fd.sub(&first_order_deviation(&p, n, bc, 48).map_err(e)?).max_abs());
    }
    check(
        smooth.strictly_decreasing && slope <= -0.8 && singular.strictly_decreasing && fo <= 1e-6,
        format!(
            "smooth: decreasing {}, slope {slope:.3}; comb: decreasing {}, slope {:.3}; first-order err {fo:.1e}",
            smooth.strictly_decreasing,
            singular.strictly_decreasing,
            singular.slope.unwrap_or(0.0)
        ),
    )
}

fn round_trip() -> Outcome {
    let w = Weight::unit(16);
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, p) in [("two-mode", two_mode()), ("complex", complex_potential())] {
        // smallest head that contracts; it must leave modes of v in the tail
        let top = p.support() / 2;
        let mut chosen = None;
        for n_head in 1..top {
            let ratio = contraction_probe(&p, &p.scaled(0.9), n_head, &w, 64).map_err(e)?;
            if ratio <= 0.5 {
                chosen = Some((n_head, ratio));
                break;
            }
        }
        let Some((n_head, ratio)) = chosen else {
            ok = false;
            notes.push(format!("{name}: no head size below {top} contracts"));
            continue;
        };
        let rec = reconstruct(&phi_tail(&p, n_head, 16, 64).map_err(e)?, &w, 64, 50, 1e-10).map_err(e)?;
        let err = coefficients_of(&p, 16)
            .iter()
            .map(|(k, c)| (rec.coefficients.get(k).copied().unwrap_or(ZERO) - c).norm())
            .fold(0.0, f64::max);
        ok &= err <= 1e-8;
        notes.push(format!("{name} N = {n_head}: contraction {ratio:.3}, {} iterations, error {err:.1e}", rec.iterations));
    }
    check(ok, notes.join("; "))
}

fn singular_oracle() -> Outcome {
    let p = PotentialSpec::delta_comb(1.0, 200).map_err(e)?;
    let shooter = Shooter::new(&p);
    let mut worst = 0.0f64;
    for n in 1..=20 {
        let got = shooter.locate(Bc::periodic_for(n), n).map_err(e)?;
        let (plus, minus) = kronig_penney_pair(1.0, n);
        worst = worst.max((got.roots[0] - plus).norm()).max((got.roots[1] - minus).norm());
    }
    let pair = solve_disc_pair(&p, 20, 80).map_err(e)?;
    let rel = (pair.gamma() - FRAC_2_PI).abs() / FRAC_2_PI;
    check(worst <= 1e-3 && rel <= 0.05, format!("max deviation from discriminant roots {worst:.2e}; gap at n = 20 off 2/pi by {:.2}%", 100.0 * rel))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("free operator exactness", free_operator),
        ("three-method agreement", triple_oracle),
        ("reduced matrix symmetry", symmetry),
        ("zero gaps with certified double roots", zero_gap),
        ("gap envelope", envelope),
        ("weighted gap sum", gap_sum),
        ("perturbation coefficients", perturbation),
        ("projection deviation decay", riesz_decay),
        ("reconstruction round trip", round_trip),
        ("delta comb oracle", singular_oracle),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("[PASS] {:>2} {name}: {msg} ({secs:.1}s)", i + 1),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {msg} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
