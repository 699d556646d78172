//! The map that keeps the low Fourier coefficients of a potential and
//! replaces the high ones by the couplings `beta+-_n(z*_n)`, and its inversion
//! by fixed-point iteration.
//!
//! Coefficients are indexed by `k` with `v_k = V(2k)`, so `v = sum_k v_k e^{2ikx}`.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basic_equation::{s_matrix, solve_disc_pair};
use crate::error::{Error, Result};
use crate::potential::PotentialSpec;
use crate::weights::{weighted_seq_norm, Weight};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadEntry {
    pub n: u64,
    /// `v_{-n}`.
    pub vm: C64,
    /// `v_n`.
    pub vp: C64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEntry {
    pub n: u64,
    /// `beta-_n(z*_n)`.
    pub bm: C64,
    /// `beta+_n(z*_n)`.
    pub bp: C64,
    /// Truncation residual bound of the reduced matrix at `z*_n`.
    #[serde(default)]
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailImage {
    #[serde(rename = "N")]
    pub n_head: u64,
    pub head: Vec<HeadEntry>,
    pub tail: Vec<TailEntry>,
    /// The image of a real potential.
    #[serde(default)]
    pub real: bool,
}

impl TailImage {
    pub fn n_max(&self) -> u64 {
        self.tail.last().map_or(self.n_head, |t| t.n)
    }

    /// All coefficients `k -> value`, `1 <= |k| <= n_max`.
    pub fn coefficients(&self) -> BTreeMap<i64, C64> {
        let mut c = BTreeMap::new();
        for h in &self.head {
            c.insert(-(h.n as i64), h.vm);
            c.insert(h.n as i64, h.vp);
        }
        for t in &self.tail {
            c.insert(-(t.n as i64), t.bm);
            c.insert(t.n as i64, t.bp);
        }
        c
    }

    /// The image with the tail couplings set to zero.
    pub fn head_only(&self) -> BTreeMap<i64, C64> {
        let mut c = self.coefficients();
        for t in &self.tail {
            c.insert(-(t.n as i64), ZERO);
            c.insert(t.n as i64, ZERO);
        }
        c
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }

    pub fn from_json(s: &str) -> Result<TailImage> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("tail image: {e}")))
    }
}

/// Coefficient table `k -> v_k` of a potential for `1 <= |k| <= n_max`.
pub fn coefficients_of(p: &PotentialSpec, n_max: u64) -> BTreeMap<i64, C64> {
    let n = n_max as i64;
    (-n..=n).filter(|&k| k != 0).map(|k| (k, p.vk(k))).collect()
}

/// Potential with the given `v_k` and zero mean.
pub fn potential_from(coeffs: &BTreeMap<i64, C64>, real: bool) -> Result<PotentialSpec> {
    let v = coeffs.iter().filter(|(_, c)| **c != ZERO).map(|(&k, &c)| (2 * k, c));
    if real {
        // symmetrize away rounding so the conjugacy check passes
        let sym: Vec<(i64, C64)> = coeffs
            .iter()
            .filter(|(&k, _)| k > 0)
            .flat_map(|(&k, &c)| {
                let mirror = coeffs.get(&-k).copied().unwrap_or(ZERO);
                let avg = (c + mirror.conj()) * 0.5;
                [(2 * k, avg), (-2 * k, avg.conj())]
            })
            .filter(|(_, c)| *c != ZERO)
            .collect();
        return PotentialSpec::from_v(ZERO, sym, true);
    }
    PotentialSpec::from_v(ZERO, v, false)
}

pub fn coefficient_norm(c: &BTreeMap<i64, C64>, w: &Weight) -> f64 {
    weighted_seq_norm(c.iter().map(|(&k, &v)| (k, v)), w)
}

fn difference(a: &BTreeMap<i64, C64>, b: &BTreeMap<i64, C64>) -> BTreeMap<i64, C64> {
    let mut d = a.clone();
    for (k, v) in b {
        *d.entry(*k).or_insert(ZERO) -= v;
    }
    d
}

fn check_inputs(p: &PotentialSpec, n_head: u64, n_max: u64, cutoff: usize) -> Result<()> {
    if p.v0() != ZERO {
        return Err(Error::HypothesisViolation("the tail map acts on zero-mean potentials".into()));
    }
    if n_head == 0 || n_max < n_head {
        return Err(Error::InvalidParams(format!("need 1 <= N <= n_max (N = {n_head}, n_max = {n_max})")));
    }
    if n_max as usize > cutoff / 4 {
        return Err(Error::InvalidParams(format!("n_max = {n_max} exceeds cutoff / 4 = {}", cutoff / 4)));
    }
    if p.support() > 2 * n_max {
        return Err(Error::InvalidParams(format!("potential support {} exceeds 2 n_max", p.support())));
    }
    Ok(())
}

/// The image: exact coefficients up to `N`, couplings at `z*_n` above it.
pub fn phi_tail(p: &PotentialSpec, n_head: u64, n_max: u64, cutoff: usize) -> Result<TailImage> {
    check_inputs(p, n_head, n_max, cutoff)?;
    let head = (1..=n_head)
        .map(|n| HeadEntry { n, vm: p.vk(-(n as i64)), vp: p.vk(n as i64) })
        .collect();
    let tail = (n_head + 1..=n_max)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| {
            if p.is_zero() {
                return Ok(TailEntry { n, bm: ZERO, bp: ZERO, residual: 0.0 });
            }
            let pair = solve_disc_pair(p, n, cutoff)?;
            let s = s_matrix(p, n, pair.z_star(), cutoff)?;
            Ok(TailEntry { n, bm: s.beta_minus(), bp: s.beta_plus(), residual: s.residual_bound })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TailImage { n_head, head, tail, real: p.is_real() })
}

/// `Phi_N(v) = A_N(v) - v` as a coefficient table.
pub fn phi_coefficients(p: &PotentialSpec, n_head: u64, n_max: u64, cutoff: usize) -> Result<BTreeMap<i64, C64>> {
    let image = phi_tail(p, n_head, n_max, cutoff)?;
    Ok(difference(&image.coefficients(), &coefficients_of(p, n_max)))
}

/// `|Phi_N(v1) - Phi_N(v2)|_Omega / |v1 - v2|_Omega` with `n_max = cutoff / 4`.
pub fn contraction_probe(p1: &PotentialSpec, p2: &PotentialSpec, n_head: u64, w: &Weight, cutoff: usize) -> Result<f64> {
    let n_max = (cutoff / 4) as u64;
    let dv = coefficient_norm(&difference(&coefficients_of(p1, n_max), &coefficients_of(p2, n_max)), w);
    if dv == 0.0 {
        return Err(Error::DivisionByZero("contraction probe of identical potentials".into()));
    }
    let (f1, f2) = rayon::join(
        || phi_coefficients(p1, n_head, n_max, cutoff),
        || phi_coefficients(p2, n_head, n_max, cutoff),
    );
    Ok(coefficient_norm(&difference(&f1?, &f2?), w) / dv)
}

/// Radius of the ball on which the map is expected to contract, with the
/// slowly growing auxiliary weight replaced by 1.
pub fn ball_radius(n_head: u64) -> f64 {
    (1.0 + 1.0 / (n_head as f64).sqrt()).powf(-0.25)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub potential: PotentialSpec,
    pub coefficients: BTreeMap<i64, C64>,
    pub iterations: usize,
    /// `|A_N(v_j) - target|_Omega` per iteration.
    pub residuals: Vec<f64>,
    /// Largest ratio of consecutive residuals.
    pub decay_ratio: Option<f64>,
}

impl Reconstruction {
    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(0.0)
    }
}

/// Solve `A_N(v) = target` by `v <- target - Phi_N(v)` starting from the
/// head of the target. Stops once the residual is below `tol`.
pub fn reconstruct(target: &TailImage, w: &Weight, cutoff: usize, max_iter: usize, tol: f64) -> Result<Reconstruction> {
    let n_head = target.n_head;
    let n_max = target.n_max();
    let u = target.coefficients();
    let mut v = target.head_only();
    let mut residuals: Vec<f64> = Vec::new();
    let mut stalled = 0;
    for it in 1..=max_iter {
        let p = potential_from(&v, target.real)?;
        let image = phi_tail(&p, n_head, n_max, cutoff)?;
        let r = difference(&image.coefficients(), &u);
        let res = coefficient_norm(&r, w);
        if let Some(&prev) = residuals.last() {
            stalled = if res >= prev { stalled + 1 } else { 0 };
        }
        residuals.push(res);
        if res < tol {
            let decay_ratio = residuals
                .windows(2)
                .filter(|x| x[0] > 0.0)
                .map(|x| x[1] / x[0])
                .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
            return Ok(Reconstruction { potential: p, coefficients: v, iterations: it, residuals, decay_ratio });
        }
        if stalled >= 5 {
            return Err(Error::NoConvergence { iterations: it });
        }
        // v - (A_N(v) - u) = u - Phi_N(v)
        v = difference(&v, &r);
    }
    Err(Error::NoConvergence { iterations: max_iter })
}
