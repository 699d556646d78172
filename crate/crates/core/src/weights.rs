//! Weight sequences `Omega(k)` for the weighted Sobolev scales, stored as
//! tables over `|k| <= range`.

use std::f64::consts::E;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Power,
    Gevrey,
    RatioForm,
    Oscillating,
    CustomTable,
}

/// Closed-form submultiplicative `omega` for ratio-form weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum OmegaSpec {
    /// `omega = 1`.
    Unit,
    /// `(1 + |m|)^a`, `a >= 0`.
    Power { a: f64 },
    /// `exp(c |m|^b)`, `0 < b < 1`, `c > 0`.
    Gevrey { b: f64, c: f64 },
    /// Values at `|m| = 0, 1, ...`.
    Table { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    /// `|k|^a`.
    Power { a: f64 },
    /// `|k|^s exp(c |k|^b)`.
    Gevrey {
        #[serde(default)]
        s: f64,
        b: f64,
        c: f64,
    },
    /// `omega(k) / |k|`.
    RatioForm { omega: OmegaSpec },
    /// Concave interpolation between two presets, see [`construct_oscillating_weight`].
    Oscillating {
        preset: OscillatingPreset,
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default)]
        beta: Option<f64>,
    },
    /// Values at `|k| = 0, 1, ...`.
    CustomTable { values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OscillatingPreset {
    /// `a = (alpha+1) log(x+e)`, `b = (beta+1) log(x+e)`.
    Example1,
    /// `a = log log(x+e)`, `b = x / log(x+e)`.
    Example2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    kind: WeightKind,
    values: Vec<f64>,
    omega: Option<Vec<f64>>,
}

impl Weight {
    /// `Omega = 1`.
    pub fn unit(range: usize) -> Weight {
        Weight { kind: WeightKind::Power, values: vec![1.0; range + 1], omega: None }
    }

    pub fn from_table(values: Vec<f64>) -> Result<Weight> {
        if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidParams("weight table must be nonempty, finite and positive".into()));
        }
        Ok(Weight { kind: WeightKind::CustomTable, values, omega: None })
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    /// Largest `|k|` in the table.
    pub fn range(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, k: i64) -> Option<f64> {
        self.values.get(k.unsigned_abs() as usize).copied()
    }

    /// `Omega(k)`. Panics outside the declared range.
    pub fn value(&self, k: i64) -> f64 {
        self.get(k).unwrap_or_else(|| panic!("weight queried at {k}, range is {}", self.range()))
    }

    /// Underlying `omega` table for ratio-form weights.
    pub fn omega(&self) -> Option<&[f64]> {
        self.omega.as_deref()
    }

    /// Check `omega(m+n) <= omega(m) omega(n) (1 + 1e-12)` for `|m|, |n| <= bound`
    /// (pairs with `|m+n|` outside the table are skipped). Returns the
    /// first offending pair.
    pub fn submultiplicativity_violation(&self, bound: i64) -> Option<(i64, i64)> {
        let om = self.omega.as_ref()?;
        let at = |k: i64| om.get(k.unsigned_abs() as usize).copied();
        for m in -bound..=bound {
            for n in -bound..=bound {
                if let (Some(a), Some(b), Some(s)) = (at(m), at(n), at(m + n)) {
                    if s > a * b * (1.0 + 1e-12) {
                        return Some((m, n));
                    }
                }
            }
        }
        None
    }
}

fn table(range: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    std::iter::once(1.0).chain((1..=range).map(|k| f(k as f64))).collect()
}

fn omega_table(spec: &OmegaSpec, len: usize) -> Result<Vec<f64>> {
    let t: Vec<f64> = match spec {
        OmegaSpec::Unit => vec![1.0; len],
        OmegaSpec::Power { a } => {
            if !(*a >= 0.0) {
                return Err(Error::InvalidParams(format!("omega power exponent {a} must be >= 0")));
            }
            (0..len).map(|k| (1.0 + k as f64).powf(*a)).collect()
        }
        OmegaSpec::Gevrey { b, c } => {
            if !(*b > 0.0 && *b < 1.0 && *c > 0.0) {
                return Err(Error::InvalidParams(format!("omega gevrey needs 0 < b < 1, c > 0 (b = {b}, c = {c})")));
            }
            (0..len).map(|k| (c * (k as f64).powf(*b)).exp()).collect()
        }
        OmegaSpec::Table { values } => {
            if values.len() < len {
                return Err(Error::InvalidParams(format!("omega table has {} entries, need {len}", values.len())));
            }
            values[..len].to_vec()
        }
    };
    if t.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidParams("omega must be finite and positive".into()));
    }
    Ok(t)
}

/// Build a weight table over `|k| <= range`.
pub fn make_weight(spec: &WeightSpec, range: usize) -> Result<Weight> {
    match spec {
        WeightSpec::Power { a } => {
            if !(*a >= -1.0) || !a.is_finite() {
                return Err(Error::InvalidParams(format!("power exponent {a} must be >= -1")));
            }
            Ok(Weight { kind: WeightKind::Power, values: table(range, |k| k.powf(*a)), omega: None })
        }
        WeightSpec::Gevrey { s, b, c } => {
            if !(*b > 0.0 && *b < 1.0) || !(*c > 0.0) || !s.is_finite() {
                return Err(Error::InvalidParams(format!("gevrey needs 0 < b < 1, c > 0 (b = {b}, c = {c})")));
            }
            Ok(Weight { kind: WeightKind::Gevrey, values: table(range, |k| k.powf(*s) * (c * k.powf(*b)).exp()), omega: None })
        }
        WeightSpec::RatioForm { omega } => {
            let om = omega_table(omega, range + 1)?;
            let values = std::iter::once(1.0).chain((1..=range).map(|k| om[k] / k as f64)).collect();
            let w = Weight { kind: WeightKind::RatioForm, values, omega: Some(om) };
            if let Some((m, n)) = w.submultiplicativity_violation(64) {
                return Err(Error::InvalidParams(format!("omega is not submultiplicative at ({m}, {n})")));
            }
            Ok(w)
        }
        WeightSpec::Oscillating { preset, alpha, beta } => {
            Ok(oscillating_preset(*preset, alpha.unwrap_or(0.0), beta.unwrap_or(1.0), range)?.weight)
        }
        WeightSpec::CustomTable { values } => {
            if values.len() < range + 1 {
                return Err(Error::InvalidParams(format!("custom table has {} entries, need {}", values.len(), range + 1)));
            }
            Weight::from_table(values[..=range].to_vec())
        }
    }
}

/// `(sum_k |x_k|^2 Omega(k)^2)^{1/2}`.
pub fn weighted_seq_norm<I>(x: I, w: &Weight) -> f64
where
    I: IntoIterator<Item = (i64, C64)>,
{
    x.into_iter().map(|(k, v)| v.norm_sqr() * w.value(k).powi(2)).sum::<f64>().sqrt()
}

/// Concave `g` squeezed between `a` and `b`, its integer table and the
/// weight `G(m) = exp(g(|m|)) / |m|`.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatingWeight {
    pub weight: Weight,
    /// `g(k)` for `k = 0..=range`.
    pub g: Vec<f64>,
    /// `c_1, c_2, ...`: `g` touches `b` at odd and `a` at even positions
    /// (1-based), and is linear between consecutive odd ones.
    pub breakpoints: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    start: f64,
    end: f64,
    y0: f64,
    slope: f64,
}

fn deriv(f: &dyn Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-5 * (1.0 + x.abs());
    let lo = (x - h).max(0.0);
    (f(x + h) - f(lo)) / (x + h - lo)
}

fn bisect(mut lo: f64, mut hi: f64, tol: f64, mut pred_hi: impl FnMut(f64) -> bool) -> f64 {
    // invariant: pred_hi(hi) is true, pred_hi(lo) is false
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pred_hi(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn check_hypotheses(a: &dyn Fn(f64) -> f64, b: &dyn Fn(f64) -> f64, range: usize) -> Result<()> {
    if range < 2 {
        return Err(Error::InvalidParams("oscillating weight needs range >= 2".into()));
    }
    for (name, f) in [("a", a), ("b", b)] {
        let vals: Vec<f64> = (0..=range).map(|k| f(k as f64)).collect();
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::HypothesisViolation(format!("{name} is not finite on [0, {range}]")));
        }
        for k in 0..range {
            if vals[k + 1] - vals[k] <= 0.0 {
                return Err(Error::HypothesisViolation(format!("{name} is not increasing at {k}")));
            }
        }
        for k in 1..range {
            let d2 = vals[k + 1] - 2.0 * vals[k] + vals[k - 1];
            if d2 >= 1e-12 * vals[k].abs().max(1.0) {
                return Err(Error::HypothesisViolation(format!("{name} is not concave at {k}")));
            }
        }
    }
    for k in 0..=range {
        let x = k as f64;
        if a(x) > b(x) {
            return Err(Error::HypothesisViolation(format!("a exceeds b at {k}")));
        }
    }
    Ok(())
}

/// Build a concave `g` with `a <= g <= b` that alternately touches `b` and
/// `a`. On `[0, c_1]` `g = b`; from each `c_{2p-1}` the line of smallest slope
/// that stays above `a` (found by bisection against `a` sampled on a 1/16
/// grid) is followed until it meets `b` again. When the tangency or the
/// return to `b` would lie beyond `range`, the construction stops with `g = b`
/// or with the last line respectively.
pub fn construct_oscillating_weight(
    a: &dyn Fn(f64) -> f64,
    b: &dyn Fn(f64) -> f64,
    range: usize,
) -> Result<OscillatingWeight> {
    check_hypotheses(a, b, range)?;
    let xmax = range as f64;
    let degenerate = (0..=range).all(|k| (b(k as f64) - a(k as f64)).abs() <= 1e-12);
    let mut segments: Vec<Segment> = Vec::new();
    let mut breakpoints = Vec::new();
    let mut tail_is_line = false;

    if !degenerate {
        let grid: Vec<f64> = (0..=16 * range).map(|j| j as f64 / 16.0).collect();
        let cond = |x: f64| deriv(a, x) <= 0.5 && deriv(b, x) <= 0.5 && b(x) - a(x) >= 1.0;
        let last_bad = grid.iter().rposition(|&x| !cond(x));
        let c1 = match last_bad {
            None => Some(0.0),
            Some(j) if j + 1 < grid.len() => Some(bisect(grid[j], grid[j + 1], 1e-12, cond)),
            Some(_) => None,
        };
        if let Some(c1) = c1 {
            breakpoints.push(c1);
            let mut c = c1;
            let mut y0 = b(c1);
            for _ in 0..10_000 {
                let samples: Vec<f64> =
                    std::iter::once(c).chain(grid.iter().copied().filter(|&x| x > c)).collect();
                let line = |m: f64, x: f64| y0 + m * (x - c);
                let min_gap = |m: f64| samples.iter().map(|&x| line(m, x) - a(x)).fold(f64::INFINITY, f64::min);
                if min_gap(0.0) >= 0.0 {
                    break;
                }
                let mut m_hi = deriv(b, c).max(1e-12);
                while min_gap(m_hi) < 0.0 {
                    m_hi *= 2.0;
                }
                let m = bisect(0.0, m_hi, 1e-10, |m| min_gap(m) >= 0.0);
                let (imin, _) = samples
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| (i, line(m, x) - a(x)))
                    .fold((0, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
                if imin + 1 >= samples.len() {
                    // tangency only at the right end of the range
                    break;
                }
                let tangency = golden_min(
                    samples[imin.saturating_sub(1)],
                    samples[imin + 1],
                    |x| line(m, x) - a(x),
                );
                let cross = samples.iter().position(|&x| x > tangency && line(m, x) - b(x) >= 0.0);
                breakpoints.push(tangency);
                match cross {
                    Some(i) => {
                        let lo = samples[i - 1].max(tangency);
                        let next = bisect(lo, samples[i], 1e-12, |x| line(m, x) - b(x) >= 0.0);
                        segments.push(Segment { start: c, end: next, y0, slope: m });
                        breakpoints.push(next);
                        y0 = line(m, next);
                        c = next;
                    }
                    None => {
                        segments.push(Segment { start: c, end: xmax, y0, slope: m });
                        tail_is_line = true;
                        break;
                    }
                }
            }
        }
    }

    let g_at = |x: f64| -> f64 {
        if degenerate {
            return a(x);
        }
        if segments.first().is_none_or(|s| x < s.start) {
            return b(x);
        }
        for s in &segments {
            if x >= s.start && x <= s.end {
                return s.y0 + s.slope * (x - s.start);
            }
        }
        if tail_is_line {
            let s = segments.last().expect("line tail has a segment");
            return s.y0 + s.slope * (x - s.start);
        }
        b(x)
    };
    let g: Vec<f64> = (0..=range).map(|k| g_at(k as f64)).collect();

    for k in 0..=range {
        let x = k as f64;
        let tol = 1e-9 * b(x).abs().max(1.0);
        if g[k] < a(x) - tol || g[k] > b(x) + tol {
            return Err(Error::HypothesisViolation(format!("sandwich a <= g <= b fails at {k}")));
        }
    }
    for k in 1..range {
        if g[k + 1] - g[k] > g[k] - g[k - 1] + 1e-9 {
            return Err(Error::HypothesisViolation(format!("g is not concave at {k}")));
        }
    }
    let values = std::iter::once(1.0).chain((1..=range).map(|k| g[k].exp() / k as f64)).collect();
    Ok(OscillatingWeight { weight: Weight { kind: WeightKind::Oscillating, values, omega: None }, g, breakpoints })
}

fn golden_min(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    while hi - lo > 1e-12 * (1.0 + hi.abs()) {
        let x1 = hi - r * (hi - lo);
        let x2 = lo + r * (hi - lo);
        if f(x1) <= f(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    0.5 * (lo + hi)
}

/// The two worked constructions: nested Sobolev bounds (`Example1`, needs
/// `-1 < alpha < beta`) and the log-log / linear-over-log pair (`Example2`).
pub fn oscillating_preset(preset: OscillatingPreset, alpha: f64, beta: f64, range: usize) -> Result<OscillatingWeight> {
    match preset {
        OscillatingPreset::Example1 => {
            if !(alpha > -1.0 && alpha < beta) {
                return Err(Error::InvalidParams(format!("example1 needs -1 < alpha < beta (got {alpha}, {beta})")));
            }
            let a = move |x: f64| (alpha + 1.0) * (x + E).ln();
            let b = move |x: f64| (beta + 1.0) * (x + E).ln();
            construct_oscillating_weight(&a, &b, range)
        }
        OscillatingPreset::Example2 => {
            let a = |x: f64| (x + E).ln().ln();
            let b = |x: f64| x / (x + E).ln();
            construct_oscillating_weight(&a, &b, range)
        }
    }
}
