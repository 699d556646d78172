//! The reduced 2x2 problem near `n^2`.
//!
//! With `lambda = n^2 + z`, split the Fourier modes of the periodic (or
//! antiperiodic) problem into `{-n, n}` and the rest. Eliminating the rest
//! gives a 2x2 matrix `S(z)` and the eigenvalues near `n^2` are the roots of
//! `det(S(z) - z) = 0`. The elimination is done exactly at truncation level by
//! solving `(1 - T) x = K V e` with `T = K V K`, `K = diag((lambda - j^2)^{-1/2})`.
//!
//! The constant part `v0` is kept inside `V` (as `V(0)`), so `z` is the
//! full offset from `n^2`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{winding_by_phase, CMatrix, Lu};
use crate::matrix_op::{assemble_matrix, Bc};
use crate::potential::PotentialSpec;
use crate::shooting::label_pair;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// `sqrt(r) e^{i phi/2}` for `z = r e^{i phi}`, `-pi <= phi < pi`: negative
/// reals map to `-i sqrt(r)` regardless of the sign of the zero imaginary part.
pub fn branch_sqrt(z: C64) -> C64 {
    if z.im == 0.0 && z.re < 0.0 {
        C64::new(0.0, -(-z.re).sqrt())
    } else {
        z.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesMode {
    LinearSolve,
    /// Keep `T^0 .. T^order` of the Neumann series.
    Neumann(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    pub cutoff: usize,
    pub series_mode: SeriesMode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SMatrix {
    pub n: u64,
    pub z: C64,
    pub s11: C64,
    pub s12: C64,
    pub s21: C64,
    pub s22: C64,
    pub t_hs_norm: f64,
    pub truncation: Truncation,
    pub residual_bound: f64,
}

impl SMatrix {
    pub fn alpha(&self) -> C64 {
        self.s11
    }

    /// `S^{21}`, the coupling that starts at `V(2n)`.
    pub fn beta_plus(&self) -> C64 {
        self.s21
    }

    /// `S^{12}`, starting at `V(-2n)`.
    pub fn beta_minus(&self) -> C64 {
        self.s12
    }

    /// `det(S - z)`.
    pub fn characteristic(&self) -> C64 {
        (self.s11 - self.z) * (self.s22 - self.z) - self.s12 * self.s21
    }

    pub fn is_valid(&self) -> bool {
        self.t_hs_norm < 1.0
    }
}

/// Truncated `T` on the modes `j = n mod 2`, `|j| <= K`, `j != +-n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TMatrix {
    pub index: Vec<i64>,
    pub matrix: CMatrix,
    pub hs_norm: f64,
}

/// Precomputed coupling data for one `(p, n, K)`.
#[derive(Debug, Clone)]
pub struct Reduction {
    n: u64,
    cutoff: usize,
    index: Vec<i64>,
    v_inner: CMatrix,
    /// `V(j + n)`, `V(j - n)`: columns of `V` at `-n` and `n`.
    col_minus: Vec<C64>,
    col_plus: Vec<C64>,
    /// `V(-n - j)`, `V(n - j)`: rows of `V` at `-n` and `n`.
    row_minus: Vec<C64>,
    row_plus: Vec<C64>,
    v0: C64,
    v_m2n: C64,
    v_2n: C64,
}

impl Reduction {
    pub fn new(p: &PotentialSpec, n: u64, cutoff: usize) -> Result<Reduction> {
        if n == 0 {
            return Err(Error::InvalidParams("the reduction needs n >= 1".into()));
        }
        if (n as usize) >= cutoff {
            return Err(Error::CutoffTooSmall { k: cutoff, min: n as usize + 1 });
        }
        let ni = n as i64;
        let k = cutoff as i64;
        let index: Vec<i64> = (-k..=k).filter(|j| (j - ni).rem_euclid(2) == 0 && j.abs() != ni).collect();
        let m = index.len();
        let v_inner = CMatrix::from_fn(m, m, |a, b| p.v_even(index[a] - index[b]));
        Ok(Reduction {
            n,
            cutoff,
            col_minus: index.iter().map(|&j| p.v_even(j + ni)).collect(),
            col_plus: index.iter().map(|&j| p.v_even(j - ni)).collect(),
            row_minus: index.iter().map(|&j| p.v_even(-ni - j)).collect(),
            row_plus: index.iter().map(|&j| p.v_even(ni - j)).collect(),
            index,
            v_inner,
            v0: p.v0(),
            v_m2n: p.v_even(-2 * ni),
            v_2n: p.v_even(2 * ni),
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    fn kdiag(&self, z: C64) -> Vec<C64> {
        let lambda = C64::new((self.n * self.n) as f64, 0.0) + z;
        self.index.iter().map(|&j| 1.0 / branch_sqrt(lambda - (j * j) as f64)).collect()
    }

    pub fn t_matrix(&self, z: C64) -> TMatrix {
        let kd = self.kdiag(z);
        let m = self.index.len();
        let matrix = CMatrix::from_fn(m, m, |a, b| self.v_inner[(a, b)] * kd[a] * kd[b]);
        let hs_norm = matrix.frobenius_norm();
        TMatrix { index: self.index.clone(), matrix, hs_norm }
    }

    pub fn t_hs_norm(&self, z: C64) -> f64 {
        let kd = self.kdiag(z);
        let m = self.index.len();
        let mut s = 0.0;
        for a in 0..m {
            for b in 0..m {
                s += (self.v_inner[(a, b)] * kd[a] * kd[b]).norm_sqr();
            }
        }
        s.sqrt()
    }

    pub fn s_matrix(&self, z: C64, mode: SeriesMode) -> Result<SMatrix> {
        let kd = self.kdiag(z);
        let t = self.t_matrix(z);
        if t.hs_norm > 0.9 {
            return Err(Error::TNormTooLarge { n: self.n, norm: t.hs_norm });
        }
        let m = self.index.len();
        let b1: Vec<C64> = self.col_minus.iter().zip(&kd).map(|(v, k)| v * k).collect();
        let b2: Vec<C64> = self.col_plus.iter().zip(&kd).map(|(v, k)| v * k).collect();
        let one_minus_t = CMatrix::from_fn(m, m, |a, b| if a == b { 1.0 - t.matrix[(a, b)] } else { -t.matrix[(a, b)] });
        let (x1, x2, residual_bound) = match mode {
            SeriesMode::LinearSolve => {
                let lu = Lu::factor(&one_minus_t);
                let x1 = lu.solve(&b1)?;
                let x2 = lu.solve(&b2)?;
                let res = |x: &[C64], b: &[C64]| -> f64 {
                    let ax = one_minus_t.matvec(x);
                    ax.iter().zip(b).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
                };
                let r = res(&x1, &b1).max(res(&x2, &b2));
                let left = norm2(&self.row_minus, &kd).max(norm2(&self.row_plus, &kd));
                (x1, x2, left * r / (1.0 - t.hs_norm))
            }
            SeriesMode::Neumann(order) => {
                let sum = |b: &[C64]| -> Vec<C64> {
                    let mut acc = b.to_vec();
                    let mut term = b.to_vec();
                    for _ in 0..order {
                        term = t.matrix.matvec(&term);
                        for (a, x) in acc.iter_mut().zip(&term) {
                            *a += x;
                        }
                    }
                    acc
                };
                let bnorm = vnorm(&b1).max(vnorm(&b2));
                let bound = t.hs_norm.powi(order as i32 + 1) / (1.0 - t.hs_norm) * bnorm * bnorm;
                (sum(&b1), sum(&b2), bound)
            }
        };
        let pair = |row: &[C64], x: &[C64]| -> C64 { row.iter().zip(&kd).zip(x).map(|((v, k), x)| v * k * x).sum() };
        Ok(SMatrix {
            n: self.n,
            z,
            s11: self.v0 + pair(&self.row_minus, &x1),
            s12: self.v_m2n + pair(&self.row_minus, &x2),
            s21: self.v_2n + pair(&self.row_plus, &x1),
            s22: self.v0 + pair(&self.row_plus, &x2),
            t_hs_norm: t.hs_norm,
            truncation: Truncation { cutoff: self.cutoff, series_mode: mode },
            residual_bound,
        })
    }

    fn s(&self, z: C64) -> Result<SMatrix> {
        self.s_matrix(z, SeriesMode::LinearSolve)
    }

    /// Winding number of `det(S(z) - z)` around `|z - center| = radius`.
    pub fn winding(&self, center: C64, radius: f64) -> Result<i64> {
        let mut failure = None;
        let w = winding_by_phase(
            |z| match self.s(z) {
                Ok(s) => {
                    let h = s.characteristic();
                    (h != ZERO).then(|| h.arg())
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    None
                }
            },
            center,
            radius,
            128,
            1 << 13,
        );
        match (w, failure) {
            (_, Some(e)) => Err(e),
            (w, None) => w,
        }
    }
}

fn vnorm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn norm2(v: &[C64], k: &[C64]) -> f64 {
    v.iter().zip(k).map(|(a, b)| (a * b).norm_sqr()).sum::<f64>().sqrt()
}

pub fn build_t(p: &PotentialSpec, n: u64, z: C64, cutoff: usize) -> Result<TMatrix> {
    Ok(Reduction::new(p, n, cutoff)?.t_matrix(z))
}

pub fn s_matrix(p: &PotentialSpec, n: u64, z: C64, cutoff: usize) -> Result<SMatrix> {
    Reduction::new(p, n, cutoff)?.s_matrix(z, SeriesMode::LinearSolve)
}

/// Roots of the basic equation near `n^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscPair {
    pub n: u64,
    pub lambda_plus: C64,
    pub lambda_minus: C64,
    pub s_plus: SMatrix,
    pub s_minus: SMatrix,
    /// The two roots coincide to relative `1e-13`.
    pub degenerate: bool,
    /// 2 when a double root also has `|beta+| + |beta-| < 1e-9`.
    pub geometric_multiplicity: usize,
    /// Radius of the `z`-disc that was searched.
    pub radius: f64,
}

impl DiscPair {
    pub fn gamma(&self) -> f64 {
        (self.lambda_plus - self.lambda_minus).norm()
    }

    pub fn z_star(&self) -> C64 {
        (self.lambda_plus + self.lambda_minus) * 0.5 - (self.n * self.n) as f64
    }
}

const ROOT_TOL: f64 = 1e-10;

/// Search radii in `z`: the disc `|z| < n/4`, then a wider one reaching
/// halfway to the nearest free level of the same periodicity.
pub(crate) fn search_radii(n: u64) -> [f64; 2] {
    let narrow = n as f64 / 4.0;
    let wide = if n == 1 { 4.0 } else { 2.0 * n as f64 - 2.0 };
    [narrow, wide.max(narrow)]
}

pub fn solve_disc_pair(p: &PotentialSpec, n: u64, cutoff: usize) -> Result<DiscPair> {
    let red = Reduction::new(p, n, cutoff)?;
    let [narrow, wide] = search_radii(n);
    match solve_in_disc(&red, p, narrow) {
        Err(e @ (Error::NoRootInDisc { .. } | Error::RootCountMismatch { .. } | Error::TNormTooLarge { .. }))
            if wide > narrow =>
        {
            solve_in_disc(&red, p, wide).map_err(|_| e)
        }
        r => r,
    }
}

fn solve_in_disc(red: &Reduction, p: &PotentialSpec, radius: f64) -> Result<DiscPair> {
    let n = red.n;
    let center = C64::new((n * n) as f64, 0.0);
    let op = assemble_matrix(p, Bc::periodic_for(n), red.cutoff)?;
    let count = op.winding_count(center, radius)?;
    if count == 0 {
        return Err(Error::NoRootInDisc { n });
    }
    if count != 2 {
        return Err(Error::RootCountMismatch { n, found: 0, winding: count });
    }
    let s0 = red.s(ZERO)?;
    let root0 = (s0.s12 * s0.s21).sqrt();
    let seeds = [s0.alpha() + root0, s0.alpha() - root0];
    let mut roots: Vec<C64> = Vec::with_capacity(2);
    for (&seed, branch) in seeds.iter().zip([root0, -root0]) {
        let found = fixed_point(red, seed, branch, radius)
            .filter(|z| roots.iter().all(|r| !same_root(*r, *z)) || root0.norm() < 1e-9)
            .or_else(|| newton_deflated(red, seed, radius, &roots))
            .or_else(|| muller_deflated(red, seed, radius, &roots));
        match found {
            Some(z) => roots.push(z),
            None => break,
        }
    }
    if roots.len() < 2 {
        return Err(if roots.is_empty() { Error::NoRootInDisc { n } } else { Error::RootCountMismatch { n, found: 1, winding: count } });
    }
    let degenerate = same_root(roots[0], roots[1]);
    let (zp, zm) = if degenerate {
        let mid = (roots[0] + roots[1]) * 0.5;
        if red.winding(mid, (1e-4f64).min(radius / 2.0))? != 2 {
            return Err(Error::RootCountMismatch { n, found: 2, winding: count });
        }
        (mid, mid)
    } else {
        let (a, b) = label_pair(roots[0], roots[1]);
        (a, b)
    };
    let s_plus = red.s(zp)?;
    let s_minus = red.s(zm)?;
    let geometric_multiplicity =
        if degenerate && s_plus.beta_plus().norm() + s_plus.beta_minus().norm() < 1e-9 { 2 } else { 1 };
    Ok(DiscPair {
        n,
        lambda_plus: center + zp,
        lambda_minus: center + zm,
        s_plus,
        s_minus,
        degenerate,
        geometric_multiplicity,
        radius,
    })
}

/// Roots closer than this (relative to `1 + |z|`) are one double root. The
/// fixed-point iteration resolves simple roots far more finely, so genuine
/// gaps of smooth potentials survive down to about `1e-13`.
const DEGENERATE_TOL: f64 = 1e-13;

fn same_root(a: C64, b: C64) -> bool {
    (a - b).norm() <= DEGENERATE_TOL * (1.0 + a.norm().max(b.norm()))
}

/// `z <- alpha(z) + r(z)`, `r = sqrt(beta+ beta-)`, with the branch of `r`
/// followed continuously from `branch` (the seed's square root).
fn fixed_point(red: &Reduction, seed: C64, branch: C64, radius: f64) -> Option<C64> {
    let follow = |s: &SMatrix, prev: C64| {
        let r = (s.s12 * s.s21).sqrt();
        if (r - prev).norm() > (r + prev).norm() {
            -r
        } else {
            r
        }
    };
    let mut z = seed;
    let mut r_prev = branch;
    for _ in 0..200 {
        if z.norm() >= radius {
            return None;
        }
        let s = red.s(z).ok()?;
        r_prev = follow(&s, r_prev);
        let next = s.alpha() + r_prev;
        let step = (next - z).norm();
        z = next;
        if step <= 1e-15 * z.norm().max(1.0) || step < 1e-14 {
            break;
        }
    }
    let s = red.s(z).ok()?;
    let r = follow(&s, r_prev);
    ((z - s.alpha() - r).norm() < ROOT_TOL && z.norm() < radius).then_some(z)
}

fn deflated_h(red: &Reduction, z: C64, found: &[C64]) -> Option<C64> {
    let mut h = red.s(z).ok()?.characteristic();
    for r in found {
        h /= z - r;
    }
    Some(h)
}

fn newton_deflated(red: &Reduction, seed: C64, radius: f64, found: &[C64]) -> Option<C64> {
    let mut z = seed;
    for _ in 0..100 {
        let h = deflated_h(red, z, found)?;
        let e = 1e-6 * (1.0 + z.norm());
        let d = (deflated_h(red, z + e, found)? - deflated_h(red, z - e, found)?) / (2.0 * e);
        if d.norm() == 0.0 {
            return None;
        }
        let mut step = h / d;
        if step.norm() > radius / 4.0 {
            step *= radius / 4.0 / step.norm();
        }
        z -= step;
        if z.norm() >= radius {
            return None;
        }
        if step.norm() < 1e-14 * (1.0 + z.norm()) {
            break;
        }
    }
    (red.s(z).ok()?.characteristic().norm() < ROOT_TOL).then_some(z)
}

fn muller_deflated(red: &Reduction, seed: C64, radius: f64, found: &[C64]) -> Option<C64> {
    let h0 = radius / 16.0;
    let mut x = [seed - h0, seed + h0, seed];
    let mut f = [deflated_h(red, x[0], found)?, deflated_h(red, x[1], found)?, deflated_h(red, x[2], found)?];
    for _ in 0..100 {
        let (h1, h2) = (x[1] - x[0], x[2] - x[1]);
        let (d1, d2) = ((f[1] - f[0]) / h1, (f[2] - f[1]) / h2);
        let a = (d2 - d1) / (h2 + h1);
        let b = a * h2 + d2;
        let disc = (b * b - 4.0 * a * f[2]).sqrt();
        let den = if (b + disc).norm() > (b - disc).norm() { b + disc } else { b - disc };
        if den.norm() == 0.0 {
            return None;
        }
        let step = -2.0 * f[2] / den;
        let xn = x[2] + step;
        if xn.norm() >= radius || !xn.re.is_finite() {
            return None;
        }
        x = [x[1], x[2], xn];
        f = [f[1], f[2], deflated_h(red, xn, found)?];
        if step.norm() < 1e-14 * (1.0 + xn.norm()) {
            break;
        }
    }
    (red.s(x[2]).ok()?.characteristic().norm() < ROOT_TOL).then_some(x[2])
}

/// Smallest `n` from which the reduction is trusted: `||T(n, z)||_HS <= 1/2`
/// at `z = 0` and at 8 points of `|z| = n/4`, and exactly two eigenvalues in
/// the disc. The next two indices must pass as well.
pub fn n_star(p: &PotentialSpec, cutoff: usize) -> Result<u64> {
    let limit = (cutoff / 2) as u64;
    let passes = |n: u64| -> Result<bool> {
        let red = Reduction::new(p, n, cutoff)?;
        let r = n as f64 / 4.0;
        let probes = std::iter::once(ZERO).chain((0..8).map(|j| C64::from_polar(r, j as f64 * std::f64::consts::PI / 4.0)));
        for z in probes {
            if red.t_hs_norm(z) > 0.5 {
                return Ok(false);
            }
        }
        let op = assemble_matrix(p, Bc::periodic_for(n), cutoff)?;
        Ok(matches!(op.winding_count(C64::new((n * n) as f64, 0.0), r), Ok(2)))
    };
    let mut n = 1;
    while n <= limit {
        let mut failed = None;
        for m in n..=(n + 2).min(limit) {
            if !passes(m)? {
                failed = Some(m);
                break;
            }
        }
        match failed {
            Some(m) => n = m + 1,
            None => return Ok(n),
        }
    }
    Err(Error::NotReached { limit })
}

/// Per-index record of the periodic pair and the Dirichlet eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralTriple {
    pub n: u64,
    pub lambda_plus: C64,
    pub lambda_minus: C64,
    pub mu: C64,
    pub gamma: f64,
    pub delta: f64,
    #[serde(rename = "Delta")]
    pub big_delta: f64,
    pub z_star: C64,
}

impl SpectralTriple {
    /// Applies the `+`/`-` labeling and derives the gap quantities.
    pub fn new(n: u64, a: C64, b: C64, mu: C64) -> SpectralTriple {
        let (lp, lm) = label_pair(a, b);
        let mid = (lp + lm) * 0.5;
        let gamma = (lp - lm).norm();
        SpectralTriple {
            n,
            lambda_plus: lp,
            lambda_minus: lm,
            mu,
            gamma,
            delta: (mu - mid).norm(),
            big_delta: gamma + (lp - mu).norm(),
            z_star: mid - (n * n) as f64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cos() -> PotentialSpec {
        PotentialSpec::from_q(ZERO, [(2, C64::new(0.0, -0.5)), (-2, C64::new(0.0, 0.5))], true).unwrap()
    }

    #[test]
    fn branch_rule() {
        assert_eq!(branch_sqrt(C64::new(-4.0, 0.0)), C64::new(0.0, -2.0));
        assert_eq!(branch_sqrt(C64::new(-4.0, -0.0)), C64::new(0.0, -2.0));
        assert_eq!(branch_sqrt(C64::new(9.0, 0.0)), C64::new(3.0, 0.0));
        let z = branch_sqrt(C64::new(-1.0, 1e-300));
        assert!(z.re >= 0.0);
    }

    #[test]
    fn zero_potential_is_trivial() {
        let t = build_t(&PotentialSpec::zero(), 3, ZERO, 32).unwrap();
        assert_eq!(t.hs_norm, 0.0);
        let s = s_matrix(&PotentialSpec::zero(), 3, C64::new(0.1, 0.0), 32).unwrap();
        assert_eq!([s.s11, s.s12, s.s21, s.s22], [ZERO; 4]);
        let pair = solve_disc_pair(&PotentialSpec::zero(), 5, 64).unwrap();
        assert!(pair.degenerate);
        assert_eq!(pair.lambda_plus, C64::new(25.0, 0.0));
        assert_eq!(pair.lambda_minus, C64::new(25.0, 0.0));
        assert_eq!(pair.geometric_multiplicity, 2);
        assert_eq!(n_star(&PotentialSpec::zero(), 64).unwrap(), 1);
    }

    #[test]
    fn first_order_correction_matches_brute_force() {
        let p = two_cos();
        let k = 64;
        let s1 = Reduction::new(&p, 1, k).unwrap().s_matrix(ZERO, SeriesMode::Neumann(0)).unwrap();
        let brute: C64 = (-(k as i64)..=k as i64)
            .filter(|j| j.rem_euclid(2) == 1 && j.abs() != 1)
            .map(|j| p.v_even(-1 - j) * p.v_even(j - 1) / (1.0 - (j * j) as f64))
            .sum();
        assert!((s1.s12 - p.v_even(-2) - brute).norm() < 1e-15);
        assert!((s1.s21 - p.v_even(2) - brute.conj()).norm() < 1e-15);
        // linear solve against the first-order series: corrections are small
        let s = s_matrix(&p, 1, ZERO, k).unwrap();
        assert!((s.s12 - 1.0).norm() < 0.1);
        assert!((s.s21 - s.s12.conj()).norm() < 1e-12);
    }

    #[test]
    fn neumann_converges_to_linear_solve() {
        let p = PotentialSpec::from_cosine(0.0, &[1.0, 0.5]).unwrap();
        let red = Reduction::new(&p, 4, 64).unwrap();
        let z = C64::new(0.3, -0.2);
        let exact = red.s_matrix(z, SeriesMode::LinearSolve).unwrap();
        let approx = red.s_matrix(z, SeriesMode::Neumann(40)).unwrap();
        assert!((exact.s11 - approx.s11).norm() < 1e-12);
        assert!((exact.s21 - approx.s21).norm() < 1e-12);
        let low = red.s_matrix(z, SeriesMode::Neumann(2)).unwrap();
        assert!((exact.s11 - low.s11).norm() <= low.residual_bound);
    }

    #[test]
    fn symmetry_of_s() {
        let p = PotentialSpec::from_cosine(0.2, &[1.0, -0.4, 0.3]).unwrap();
        let s = s_matrix(&p, 5, C64::new(0.4, 0.0), 64).unwrap();
        assert!((s.s11 - s.s22).norm() < 1e-12);
        assert!((s.s12 - s.s21.conj()).norm() < 1e-12);
        let c = s_matrix(&p, 5, C64::new(0.4, 0.7), 64).unwrap();
        assert!((c.s11 - c.s22).norm() < 1e-12);
    }

    #[test]
    fn mathieu_pairs_match_dense_oracle() {
        let p = two_cos();
        for n in 1..=6u64 {
            let pair = solve_disc_pair(&p, n, 64).unwrap();
            let op = assemble_matrix(&p, Bc::periodic_for(n), 64).unwrap();
            let eig = op.eigenvalues().unwrap();
            for l in [pair.lambda_plus, pair.lambda_minus] {
                let best = eig.iter().map(|e| (e - l).norm()).fold(f64::INFINITY, f64::min);
                assert!(best < 1e-8 * l.norm().max(1.0), "n = {n}: {l} off by {best}");
            }
        }
    }

    #[test]
    fn gasymov_roots_are_double() {
        let p = PotentialSpec::from_q(ZERO, [(2, C64::new(0.0, -0.5))], false).unwrap();
        let ns = n_star(&p, 64).unwrap();
        for n in ns..=10 {
            let pair = solve_disc_pair(&p, n, 64).unwrap();
            assert!(pair.gamma() <= 1e-8, "n = {n}");
            assert!(pair.degenerate);
        }
    }

    #[test]
    fn n_star_grows_with_scale() {
        let p = two_cos();
        let a = n_star(&p, 64).unwrap();
        let b = n_star(&p.scaled(10.0), 64).unwrap();
        assert!(a <= 4, "n_star = {a}");
        assert!(b > a);
    }

    #[test]
    fn triple_labels_and_deltas() {
        let t = SpectralTriple::new(2, C64::new(3.9, 0.0), C64::new(4.4, 0.0), C64::new(3.9, 0.0));
        assert_eq!(t.lambda_plus, C64::new(4.4, 0.0));
        assert!((t.gamma - 0.5).abs() < 1e-15);
        assert!((t.big_delta - 1.0).abs() < 1e-15);
        assert!(t.big_delta >= t.gamma);
    }
}
