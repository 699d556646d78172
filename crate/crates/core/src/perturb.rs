//! Second-order perturbation theory for Dirichlet eigenvalues of
//! `-y'' + z v y` with a real cosine potential
//! `v = sum_k v_k sqrt(2) cos 2kx`, and the radius bounds it implies.

use std::f64::consts::SQRT_2;
use std::fmt::Write as _;
use std::ops::RangeInclusive;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::loglog_slope;
use crate::matrix_op::{assemble_matrix, Bc};
use crate::potential::PotentialSpec;
use crate::shooting::Shooter;

/// `v_k` for `k >= 1` from a table holding `v_1, v_2, ...`; zero elsewhere.
fn coeff(vk: &[f64], k: i64) -> f64 {
    if k >= 1 {
        vk.get(k as usize - 1).copied().unwrap_or(0.0)
    } else {
        0.0
    }
}

fn l2_norm(vk: &[f64]) -> f64 {
    vk.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Linear Taylor coefficient of `E_n(z)`.
pub fn a1_coefficient(vk: &[f64], n: u64) -> f64 {
    let v = coeff(vk, n as i64);
    if v == 0.0 {
        0.0
    } else {
        -v / SQRT_2
    }
}

/// Quadratic Taylor coefficient of `E_n(z) = n^2 + a1 z + a2 z^2`. The sum
/// over `p >= 1` runs to `max(cutoff, 8 max(n, len))`.
pub fn a2_coefficient(vk: &[f64], n: u64, cutoff: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let top = cutoff.max(8 * (n as usize).max(vk.len())) as i64;
    let sum: f64 = if n.is_multiple_of(2) {
        let m = (n / 2) as i64;
        (1..=top)
            .filter(|&p| p != m)
            .map(|p| (coeff(vk, (p - m).abs()) - coeff(vk, p + m)).powi(2) / (m * m - p * p) as f64)
            .sum()
    } else {
        let m = n.div_ceil(2) as i64;
        (1..=top)
            .filter(|&p| p != m)
            .map(|p| (coeff(vk, (p - m).abs()) - coeff(vk, p + m - 1)).powi(2) / ((m - p) * (m + p - 1)) as f64)
            .sum()
    };
    sum / 8.0
}

fn scaled_potential(vk: &[f64], z: f64) -> Result<PotentialSpec> {
    let scaled: Vec<f64> = vk.iter().map(|v| v * z).collect();
    PotentialSpec::from_cosine(0.0, &scaled)
}

/// The Dirichlet eigenvalue `E_n(z)` of `-y'' + z v y` for each `z`, by
/// shooting. Each `z` must leave exactly one matrix eigenvalue in
/// `|lambda - n^2| < max(n/4, 1/4)`.
pub fn en_curve(vk: &[f64], n: u64, zs: &[f64]) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParams("Dirichlet eigenvalues are indexed from 1".into()));
    }
    let cutoff = (8 * (n as usize).max(vk.len())).max(64);
    let center = C64::new((n * n) as f64, 0.0);
    let radius = (n as f64 / 4.0).max(0.25);
    zs.par_iter()
        .map(|&z| {
            let p = scaled_potential(vk, z)?;
            let count = assemble_matrix(&p, Bc::Dir, cutoff)?.winding_count(center, radius)?;
            if count != 1 {
                return Err(Error::HypothesisViolation(format!(
                    "at z = {z} the disc around {} holds {count} Dirichlet eigenvalues",
                    n * n
                )));
            }
            if z == 0.0 {
                return Ok((n * n) as f64);
            }
            let located = Shooter::new(&p).locate(Bc::Dir, n)?;
            Ok(located.roots[0].re)
        })
        .collect()
}

/// Finite-difference estimates `(E'(0), E''(0) / 2)` from `E_n` at
/// `0, +-h, +-h/2`. The first derivative is Richardson-extrapolated.
pub fn en_taylor_estimates(vk: &[f64], n: u64, h: f64) -> Result<(f64, f64)> {
    let e = en_curve(vk, n, &[-h, -h / 2.0, 0.0, h / 2.0, h])?;
    let d_coarse = (e[4] - e[0]) / (2.0 * h);
    let d_fine = (e[3] - e[1]) / h;
    let first = (4.0 * d_fine - d_coarse) / 3.0;
    let second = (e[4] - 2.0 * e[2] + e[0]) / (h * h) / 2.0;
    Ok((first, second))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationRecord {
    pub n: u64,
    pub a1: f64,
    pub a2: f64,
    /// `sum |v_k|`.
    pub sigma: f64,
    /// `sqrt(2) sigma / |a2|`; `None` when `a2 = 0`.
    pub radius_upper: Option<f64>,
    /// `max k |v_k|` over `k > n/2`, the smallest admissible decay constant
    /// for the modes that enter the lower bound at this `n`.
    pub delta_cap: f64,
    /// The decay hypothesis `delta_cap <= |v| / 15`.
    pub hypothesis_holds: bool,
    /// `|a2| 32 n^2 / |v|^2 >= 1`.
    pub lower_bound_holds: bool,
}

pub fn perturbation_record(vk: &[f64], n: u64) -> PerturbationRecord {
    let a2 = a2_coefficient(vk, n, 0);
    let sigma: f64 = vk.iter().map(|v| v.abs()).sum();
    let norm = l2_norm(vk);
    let delta_cap = vk
        .iter()
        .enumerate()
        .map(|(i, v)| (i as u64 + 1, v.abs()))
        .filter(|&(k, _)| 2 * k > n)
        .map(|(k, v)| k as f64 * v)
        .fold(0.0, f64::max);
    let nf = n as f64;
    PerturbationRecord {
        n,
        a1: a1_coefficient(vk, n),
        a2,
        sigma,
        radius_upper: (a2 != 0.0).then(|| SQRT_2 * sigma / a2.abs()),
        delta_cap,
        hypothesis_holds: norm > 0.0 && delta_cap <= norm / 15.0,
        lower_bound_holds: norm > 0.0 && a2.abs() * 32.0 * nf * nf >= norm * norm,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusReport {
    pub records: Vec<PerturbationRecord>,
    /// Least-squares slope of `ln radius_upper` against `ln n`.
    pub slope: Option<f64>,
}

impl RadiusReport {
    /// Lower-bound failures among the records where the hypothesis holds.
    pub fn lower_bound_failures(&self) -> Vec<u64> {
        self.records.iter().filter(|r| r.hypothesis_holds && !r.lower_bound_holds).map(|r| r.n).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,a1,a2,radius_upper,s36_ok\n");
        for r in &self.records {
            let radius = r.radius_upper.map_or("inf".to_string(), |x| format!("{x:.16e}"));
            let ok = if r.hypothesis_holds { r.lower_bound_holds.to_string() } else { "na".to_string() };
            let _ = writeln!(s, "{},{:.16e},{:.16e},{},{}", r.n, r.a1, r.a2, radius, ok);
        }
        s
    }
}

pub fn radius_report(vk: &[f64], ns: RangeInclusive<u64>) -> RadiusReport {
    let records: Vec<PerturbationRecord> = ns.map(|n| perturbation_record(vk, n)).collect();
    let slope = loglog_slope(records.iter().filter_map(|r| Some((r.n as f64, r.radius_upper?))));
    RadiusReport { records, slope }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_coefficients() {
        assert_eq!(a2_coefficient(&[], 3, 64), 0.0);
        assert!((a2_coefficient(&[1.0], 1, 64) + 1.0 / 16.0).abs() < 1e-15);
        assert!((a2_coefficient(&[1.0], 2, 64) + 1.0 / 24.0).abs() < 1e-15);
        assert!((a1_coefficient(&[1.0], 1) + 1.0 / SQRT_2).abs() < 1e-15);
        assert_eq!(a1_coefficient(&[1.0], 2), 0.0);
    }

    #[test]
    fn cutoff_doubling_is_stable() {
        let vk = [0.3, -0.2, 0.1, 0.05];
        for n in 1..12 {
            let a = a2_coefficient(&vk, n, 0);
            let b = a2_coefficient(&vk, n, 2 * 8 * 12);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn finite_differences_match() {
        for n in 1..=3 {
            let (d1, d2) = en_taylor_estimates(&[1.0], n, 0.01).unwrap();
            let a2 = a2_coefficient(&[1.0], n, 0);
            assert!((d1 - a1_coefficient(&[1.0], n)).abs() < 1e-7, "{n}: {d1}");
            assert!(((d2 - a2) / a2).abs() < 1e-5, "{n}: {d2} vs {a2}");
        }
        assert_eq!(en_curve(&[1.0], 2, &[0.0]).unwrap(), vec![4.0]);
    }

    #[test]
    fn radius_upper_for_single_mode() {
        let r = perturbation_record(&[1.0], 1);
        assert!((r.radius_upper.unwrap() - 16.0 * SQRT_2).abs() < 1e-12);
        let z = radius_report(&[], 1..=3);
        assert!(z.records.iter().all(|r| r.a2 == 0.0 && r.radius_upper.is_none()));
    }

    #[test]
    fn decaying_family_satisfies_lower_bound() {
        let vk: Vec<f64> = (1..=20).map(|k| 0.05 / k as f64).collect();
        let rep = radius_report(&vk, 1..=80);
        assert!(rep.records.iter().filter(|r| r.n > 40).all(|r| r.hypothesis_holds));
        assert!(rep.lower_bound_failures().is_empty());
        let tail = radius_report(&vk, 42..=80);
        assert!((tail.slope.unwrap() - 2.0).abs() < 0.1, "{:?}", tail.slope);
    }
}
