//! Gap sequences over a range of indices and the inequalities that tie
//! them to the couplings `beta+-` and to weighted norms of the potential.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basic_equation::{s_matrix, solve_disc_pair, SMatrix, SpectralTriple};
use crate::error::{Error, Result};
use crate::matrix_op::Bc;
use crate::potential::PotentialSpec;
use crate::shooting::Shooter;
use crate::weights::{weighted_seq_norm, Weight};

/// Lower and upper factors of the envelope
/// `gamma + |mu - lambda+|` vs `|beta-(z*)| + |beta+(z*)|`.
pub const ENVELOPE: (f64, f64) = (1.0 / 72.0, 58.0);
/// Band for `gamma / (|beta-| + |beta+|)` at the largest index of a real potential.
pub const REAL_RATIO_BAND: (f64, f64) = (0.75, 1.25);
/// Ratios are reported only above this coupling size.
pub const RATIO_FLOOR: f64 = 1e-12;
/// Envelope violations are flagged only above this coupling size.
pub const ENVELOPE_FLOOR: f64 = 1e-10;

/// A triple together with the reduced matrix at `z*`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapRecord {
    pub triple: SpectralTriple,
    pub s_star: SMatrix,
}

impl GapRecord {
    /// `|beta-(z*)| + |beta+(z*)|`.
    pub fn coupling(&self) -> f64 {
        self.s_star.beta_minus().norm() + self.s_star.beta_plus().norm()
    }
}

/// Periodic pairs from the basic equation and `mu` from shooting.
pub fn spectral_triples(p: &PotentialSpec, ns: RangeInclusive<u64>, cutoff: usize) -> Result<Vec<GapRecord>> {
    if *ns.end() as usize > cutoff / 4 {
        return Err(Error::InvalidParams(format!("indices up to {} need a cutoff of at least {}", ns.end(), 4 * ns.end())));
    }
    let shooter = Shooter::new(p);
    ns.collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| {
            let pair = solve_disc_pair(p, n, cutoff)?;
            let mu = shooter.locate(Bc::Dir, n)?.roots[0];
            let triple = SpectralTriple::new(n, pair.lambda_plus, pair.lambda_minus, mu);
            let s_star = s_matrix(p, n, triple.z_star, cutoff)?;
            Ok(GapRecord { triple, s_star })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub n: u64,
    /// `gamma / (|beta-| + |beta+|)`.
    pub gap_ratio: f64,
    /// `(gamma + |mu - lambda+|) / (|beta-| + |beta+|)`.
    pub envelope_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub n: u64,
    pub what: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub records: Vec<GapRecord>,
    pub weight: Weight,
    /// `sum gamma_n^2 Omega(n)^2`.
    pub lhs_sum: f64,
    /// `(|v|_Omega^2, |v|_Omega^4)`.
    pub rhs_bound_terms: (f64, f64),
    /// Summands `gamma_n^2 Omega(n)^2` in index order.
    pub summands: Vec<(u64, f64)>,
    pub ratio_table: Vec<RatioRow>,
    pub violations: Vec<Violation>,
}

impl GapReport {
    /// Smallest `C1` with `lhs <= C1 |v|^4 + 4 |v|^2`; zero when the linear
    /// term already dominates.
    pub fn measured_c1(&self) -> Option<f64> {
        let (n2, n4) = self.rhs_bound_terms;
        (n4 > 0.0).then(|| ((self.lhs_sum - 4.0 * n2) / n4).max(0.0))
    }

    /// Summands beyond `from` never increase.
    pub fn summands_nonincreasing_after(&self, from: u64) -> bool {
        let tail: Vec<f64> = self.summands.iter().filter(|(n, _)| *n > from).map(|s| s.1).collect();
        tail.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "n,lam_plus_re,lam_plus_im,lam_minus_re,lam_minus_im,mu_re,mu_im,gamma,delta,Delta,beta_plus_abs,beta_minus_abs,ratio_441\n",
        );
        for r in &self.records {
            let t = &r.triple;
            let ratio = self
                .ratio_table
                .iter()
                .find(|x| x.n == t.n)
                .map_or(String::new(), |x| format!("{:.16e}", x.envelope_ratio));
            let _ = writeln!(
                s,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                t.n,
                t.lambda_plus.re,
                t.lambda_plus.im,
                t.lambda_minus.re,
                t.lambda_minus.im,
                t.mu.re,
                t.mu.im,
                t.gamma,
                t.delta,
                t.big_delta,
                r.s_star.beta_plus().norm(),
                r.s_star.beta_minus().norm(),
                ratio
            );
        }
        s
    }
}

/// Weighted sums and ratio checks over precomputed records.
pub fn asymptotics_report(records: Vec<GapRecord>, w: &Weight, p: &PotentialSpec) -> Result<GapReport> {
    let top = records.iter().map(|r| r.triple.n).max().unwrap_or(0).max(p.support() / 2);
    if (w.range() as u64) < top {
        return Err(Error::InvalidParams(format!("weight table ends at {}, need {top}", w.range())));
    }
    let summands: Vec<(u64, f64)> =
        records.iter().map(|r| (r.triple.n, (r.triple.gamma * w.value(r.triple.n as i64)).powi(2))).collect();
    let lhs_sum = summands.iter().map(|s| s.1).sum();
    let norm2 = weighted_seq_norm(p.vk_coeffs(), w).powi(2);

    let mut violations = Vec::new();
    let mut ratio_table = Vec::new();
    for r in &records {
        let t = &r.triple;
        let c = r.coupling();
        if c > RATIO_FLOOR {
            let envelope_ratio = (t.gamma + (t.mu - t.lambda_plus).norm()) / c;
            ratio_table.push(RatioRow { n: t.n, gap_ratio: t.gamma / c, envelope_ratio });
            if c > ENVELOPE_FLOOR && !(ENVELOPE.0..=ENVELOPE.1).contains(&envelope_ratio) {
                violations.push(Violation { n: t.n, what: format!("envelope ratio {envelope_ratio:.6e}") });
            }
        }
        if p.is_real() {
            let im = [t.lambda_plus, t.lambda_minus, t.mu].iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            if im > 1e-9 {
                violations.push(Violation { n: t.n, what: format!("imaginary part {im:.3e} for a real potential") });
            }
        }
    }
    if p.is_real() {
        if let Some(last) = ratio_table.iter().max_by_key(|r| r.n) {
            if !(REAL_RATIO_BAND.0..=REAL_RATIO_BAND.1).contains(&last.gap_ratio) {
                violations.push(Violation { n: last.n, what: format!("gap ratio {:.6e} at the largest index", last.gap_ratio) });
            }
        }
    }
    Ok(GapReport {
        records,
        weight: w.clone(),
        lhs_sum,
        rhs_bound_terms: (norm2, norm2 * norm2),
        summands,
        ratio_table,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{make_weight, WeightSpec};

    fn two_cos() -> PotentialSpec {
        PotentialSpec::from_cosine(0.0, &[std::f64::consts::SQRT_2]).unwrap()
    }

    #[test]
    fn zero_potential_report_is_empty() {
        let p = PotentialSpec::zero();
        let recs = spectral_triples(&p, 1..=8, 64).unwrap();
        assert!(recs.iter().all(|r| r.triple.gamma == 0.0 && r.triple.delta < 1e-10 && r.triple.big_delta < 1e-10));
        let rep = asymptotics_report(recs, &Weight::unit(16), &p).unwrap();
        assert_eq!(rep.lhs_sum, 0.0);
        assert!(rep.ratio_table.is_empty() && rep.violations.is_empty());
    }

    #[test]
    fn mathieu_gaps_and_ratios() {
        let p = two_cos();
        let recs = spectral_triples(&p, 2..=10, 64).unwrap();
        let gammas: Vec<f64> = recs.iter().map(|r| r.triple.gamma).collect();
        assert!(gammas.windows(2).take(6).all(|w| w[1] < w[0]), "{gammas:?}");
        let w = make_weight(&WeightSpec::Power { a: -1.0 }, 16).unwrap();
        let rep = asymptotics_report(recs, &w, &p).unwrap();
        assert!(rep.violations.is_empty(), "{:?}", rep.violations);
        for r in rep.ratio_table.iter().filter(|r| r.n >= 4) {
            assert!((0.75..=1.25).contains(&r.gap_ratio), "{r:?}");
        }
        assert!(rep.lhs_sum > 0.0 && rep.measured_c1().is_some());
        assert_eq!(rep.to_csv().lines().count(), 10);
    }
}
