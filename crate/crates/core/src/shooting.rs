//! Shooting oracle for the quasi-derivative system
//! `y' = Q y + u`, `u' = (v0 - lambda - Q^2) y - Q u` on `[0, pi]`.
//!
//! `Q` enters only through its truncated Fourier sum, so the system has
//! smooth coefficients even for singular `v`. The monodromy is integrated with
//! fixed-step RK4 plus one Richardson extrapolation, doubling the step count
//! until the extrapolated matrix stops moving. The first two
//! `lambda`-derivatives come from the variational equations.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::matrix_op::Bc;
use crate::potential::PotentialSpec;

type M2 = [C64; 4];

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const I2: M2 = [ONE, ZERO, ZERO, ONE];

#[inline]
fn mul(a: &M2, b: &M2) -> M2 {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

#[inline]
fn axpy(x: &M2, s: C64, y: &M2) -> M2 {
    [x[0] + s * y[0], x[1] + s * y[1], x[2] + s * y[2], x[3] + s * y[3]]
}

/// `d/dlambda` of the coefficient matrix is `[[0,0],[-1,0]]`.
#[inline]
fn dlam(x: &M2) -> M2 {
    [ZERO, ZERO, -x[0], -x[1]]
}

fn comb(a: &M2, b: &M2, wa: f64, wb: f64) -> M2 {
    [a[0] * wa + b[0] * wb, a[1] * wa + b[1] * wb, a[2] * wa + b[2] * wb, a[3] * wa + b[3] * wb]
}

fn to_rows(m: &M2) -> [[C64; 2]; 2] {
    [[m[0], m[1]], [m[2], m[3]]]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootOptions {
    /// Smallest RK4 step count (at least 256).
    pub min_steps: usize,
    /// Relative change of the extrapolated monodromy accepted as converged.
    pub tol: f64,
    /// Step count beyond which integration gives up.
    pub max_steps: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions { min_steps: 256, tol: 1e-12, max_steps: 1 << 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonodromyResult {
    pub lambda: C64,
    /// Maps `(y(0), u(0))` to `(y(pi), u(pi))`.
    pub m: [[C64; 2]; 2],
    /// `y(pi)` of the solution with `y(0) = 0`, `u(0) = 1`.
    pub y2_pi: C64,
    /// `dM/dlambda`.
    pub dm: [[C64; 2]; 2],
    /// `d^2 M / dlambda^2`.
    pub d2m: [[C64; 2]; 2],
    /// RK4 steps of the finest pass.
    pub steps: usize,
}

impl MonodromyResult {
    /// The Lyapunov function `tr M`.
    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }
}

const BASE_STEPS: usize = 256;
const LEVELS: usize = 16;

/// Reusable integrator for one potential: caches `Q` on the RK grids.
#[derive(Debug)]
pub struct Shooter {
    p: PotentialSpec,
    opts: ShootOptions,
    qpos: Vec<C64>,
    qneg: Vec<C64>,
    grids: Vec<OnceLock<Vec<C64>>>,
}

impl Shooter {
    pub fn new(p: &PotentialSpec) -> Shooter {
        Self::with_options(p, ShootOptions::default())
    }

    pub fn with_options(p: &PotentialSpec, opts: ShootOptions) -> Shooter {
        let half = (p.support() / 2) as usize;
        let qpos = (1..=half as i64).map(|k| p.q(2 * k)).collect();
        let qneg = (1..=half as i64).map(|k| p.q(-2 * k)).collect();
        Shooter { p: p.clone(), opts, qpos, qneg, grids: (0..LEVELS).map(|_| OnceLock::new()).collect() }
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.p
    }

    fn q_at(&self, x: f64) -> C64 {
        let w = C64::from_polar(1.0, 2.0 * x);
        let wc = w.conj();
        let (mut pw, mut pwc) = (ONE, ONE);
        let mut s = ZERO;
        for (qp, qn) in self.qpos.iter().zip(&self.qneg) {
            pw *= w;
            pwc *= wc;
            s += qp * pw + qn * pwc;
        }
        if self.p.is_real() {
            C64::new(s.re, 0.0)
        } else {
            s
        }
    }

    /// `Q` at `x_i = i pi / (2N)`, `i = 0..=2N`, for `N = 256 * 2^level`.
    fn grid(&self, level: usize) -> &[C64] {
        self.grids[level].get_or_init(|| {
            let n = BASE_STEPS << level;
            let h = PI / (2 * n) as f64;
            (0..=2 * n).map(|i| self.q_at(i as f64 * h)).collect()
        })
    }

    fn integrate(&self, lambda: C64, level: usize) -> (M2, M2, M2) {
        let n = BASE_STEPS << level;
        let q = self.grid(level);
        let h = PI / n as f64;
        let c = self.p.v0() - lambda;
        let coef = |qv: C64| -> M2 { [qv, ONE, c - qv * qv, -qv] };
        let (mut y, mut y1, mut y2) = (I2, [ZERO; 4], [ZERO; 4]);
        let hc = C64::new(h, 0.0);
        let half = C64::new(0.5 * h, 0.0);
        for i in 0..n {
            let a0 = coef(q[2 * i]);
            let ah = coef(q[2 * i + 1]);
            let a1 = coef(q[2 * i + 2]);
            let f = |a: &M2, y: &M2, y1: &M2, y2: &M2| -> (M2, M2, M2) {
                let d0 = mul(a, y);
                let d1 = axpy(&mul(a, y1), ONE, &dlam(y));
                let d2 = axpy(&mul(a, y2), C64::new(2.0, 0.0), &dlam(y1));
                (d0, d1, d2)
            };
            let (k10, k11, k12) = f(&a0, &y, &y1, &y2);
            let (k20, k21, k22) = f(&ah, &axpy(&y, half, &k10), &axpy(&y1, half, &k11), &axpy(&y2, half, &k12));
            let (k30, k31, k32) = f(&ah, &axpy(&y, half, &k20), &axpy(&y1, half, &k21), &axpy(&y2, half, &k22));
            let (k40, k41, k42) = f(&a1, &axpy(&y, hc, &k30), &axpy(&y1, hc, &k31), &axpy(&y2, hc, &k32));
            let step = |y: &M2, a: &M2, b: &M2, cc: &M2, d: &M2| -> M2 {
                let mut out = *y;
                for j in 0..4 {
                    out[j] += (a[j] + 2.0 * b[j] + 2.0 * cc[j] + d[j]) * (h / 6.0);
                }
                out
            };
            y = step(&y, &k10, &k20, &k30, &k40);
            y1 = step(&y1, &k11, &k21, &k31, &k41);
            y2 = step(&y2, &k12, &k22, &k32, &k42);
        }
        (y, y1, y2)
    }

    fn start_level(&self, lambda: C64) -> usize {
        let freq = self.p.support() as f64 + lambda.norm().sqrt() + self.p.v0().norm().sqrt() + 1.0;
        let mut level = 0;
        while (BASE_STEPS << level) < self.opts.min_steps || PI / (BASE_STEPS << level) as f64 * freq > 1.0 {
            level += 1;
        }
        level
    }

    pub fn monodromy(&self, lambda: C64) -> Result<MonodromyResult> {
        let mut level = self.start_level(lambda);
        let max_level = (0..LEVELS).take_while(|&l| (BASE_STEPS << l) <= self.opts.max_steps).last().unwrap_or(0);
        if level + 2 > max_level {
            return Err(Error::StepConvergenceFailure { steps: BASE_STEPS << level });
        }
        let extrapolate = |a: &(M2, M2, M2), b: &(M2, M2, M2)| -> (M2, M2, M2) {
            let w = (16.0 / 15.0, -1.0 / 15.0);
            (comb(&b.0, &a.0, w.0, w.1), comb(&b.1, &a.1, w.0, w.1), comb(&b.2, &a.2, w.0, w.1))
        };
        let mut coarse = self.integrate(lambda, level);
        let mut fine = self.integrate(lambda, level + 1);
        let mut prev = extrapolate(&coarse, &fine);
        level += 1;
        while level < max_level {
            coarse = fine;
            fine = self.integrate(lambda, level + 1);
            let next = extrapolate(&coarse, &fine);
            level += 1;
            let scale = next.0.iter().map(|z| z.norm()).fold(1.0, f64::max);
            let change = next.0.iter().zip(&prev.0).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            if change <= self.opts.tol * scale {
                return Ok(MonodromyResult {
                    lambda,
                    m: to_rows(&next.0),
                    y2_pi: next.0[1],
                    dm: to_rows(&next.1),
                    d2m: to_rows(&next.2),
                    steps: BASE_STEPS << level,
                });
            }
            prev = next;
        }
        Err(Error::StepConvergenceFailure { steps: BASE_STEPS << max_level })
    }

    /// Eigenvalues of `bc` in the disc `|lambda - n^2| < n/4`. If the search
    /// fails there (small `n`, strong potential) it is repeated on the disc
    /// reaching halfway to the nearest other free eigenvalue of the same
    /// boundary condition.
    pub fn locate(&self, bc: Bc, n: u64) -> Result<LocatedEigenvalues> {
        if bc.is_periodic() && Bc::periodic_for(n) != bc {
            return Err(Error::InvalidParams(format!("{bc:?} has no eigenvalue pair near n^2 for n = {n}")));
        }
        let center = C64::new((n * n) as f64, 0.0);
        let narrow = (n as f64 / 4.0).max(0.25);
        let nf = n as f64;
        let wide = match (bc, n) {
            (Bc::Dir, 1) => 1.5,
            (Bc::Dir, _) => nf - 0.5,
            (_, 1) => 4.0,
            _ => 2.0 * nf - 2.0,
        }
        .max(narrow);
        let attempt = |radius: f64| -> Result<LocatedEigenvalues> {
            match bc {
                Bc::Dir => Ok(LocatedEigenvalues { roots: vec![self.dirichlet(center, radius)?], double_root: false }),
                _ => self.periodic_pair(n, center, radius),
            }
        };
        match attempt(narrow) {
            Err(e) if wide > narrow => attempt(wide).map_err(|_| e),
            r => r,
        }
    }

    fn dirichlet(&self, center: C64, radius: f64) -> Result<C64> {
        let f = |l: C64| -> Result<(C64, C64)> {
            let r = self.monodromy(l)?;
            Ok((r.y2_pi, r.dm[0][1]))
        };
        let seed = center + self.p.v0();
        let seed = if (seed - center).norm() < radius { seed } else { center };
        let root = match newton(&f, seed, center, radius) {
            Ok(r) => r,
            Err(_) => muller(&|l| Ok(f(l)?.0), center, radius)?,
        };
        Ok(root)
    }

    fn periodic_pair(&self, n: u64, center: C64, radius: f64) -> Result<LocatedEigenvalues> {
        let target = if n.is_multiple_of(2) { 2.0 } else { -2.0 };
        let eval = |l: C64| -> Result<(C64, C64, C64, f64)> {
            let r = self.monodromy(l)?;
            let scale = r.m.iter().flatten().map(|z| z.norm()).fold(1.0, f64::max);
            Ok((r.trace() - target, r.dm[0][0] + r.dm[1][1], r.d2m[0][0] + r.d2m[1][1], scale))
        };
        // critical point of the trace between the two roots
        let mut c = center + self.p.v0();
        if (c - center).norm() >= radius {
            c = center;
        }
        for _ in 0..60 {
            let (_, d1, d2, _) = eval(c)?;
            if d2.norm() == 0.0 {
                break;
            }
            let mut step = d1 / d2;
            if step.norm() > radius / 8.0 {
                step *= radius / 8.0 / step.norm();
            }
            c -= step;
            if (c - center).norm() >= radius {
                return self.periodic_pair_muller(center, radius, &eval);
            }
            if step.norm() <= 1e-14 * c.norm().max(1.0) {
                break;
            }
        }
        let (f0, _, f2, scale) = eval(c)?;
        let noise = 100.0 * self.opts.tol * scale;
        if f0.norm() <= noise {
            return Ok(LocatedEigenvalues { roots: vec![c, c], double_root: true });
        }
        let half_gap = (-2.0 * f0 / f2).sqrt();
        let fd = |l: C64| -> Result<(C64, C64)> {
            let (f, d, _, _) = eval(l)?;
            Ok((f, d))
        };
        let mut roots = Vec::with_capacity(2);
        for seed in [c + half_gap, c - half_gap] {
            roots.push(polish(&fd, seed, center, radius)?);
        }
        if (roots[0] - roots[1]).norm() <= 1e-9 * c.norm().max(1.0) {
            return Ok(LocatedEigenvalues { roots: vec![c, c], double_root: true });
        }
        let (plus, minus) = label_pair(roots[0], roots[1]);
        Ok(LocatedEigenvalues { roots: vec![plus, minus], double_root: false })
    }

    fn periodic_pair_muller(
        &self,
        center: C64,
        radius: f64,
        eval: &dyn Fn(C64) -> Result<(C64, C64, C64, f64)>,
    ) -> Result<LocatedEigenvalues> {
        let f = |l: C64| Ok(eval(l)?.0);
        let r1 = muller(&f, center, radius)?;
        // deflate the first root
        let g = |l: C64| Ok(eval(l)?.0 / (l - r1));
        let r2 = muller(&g, center + radius / 3.0, radius)?;
        let (plus, minus) = label_pair(r1, r2);
        Ok(LocatedEigenvalues { roots: vec![plus, minus], double_root: false })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocatedEigenvalues {
    /// Repeated by multiplicity; for a pair the `+` eigenvalue comes first.
    pub roots: Vec<C64>,
    /// The pair could not be separated and is reported as one double root.
    pub double_root: bool,
}

/// `(plus, minus)`: larger real part first, ties broken by the imaginary part.
pub fn label_pair(a: C64, b: C64) -> (C64, C64) {
    if a.re > b.re || (a.re == b.re && a.im >= b.im) {
        (a, b)
    } else {
        (b, a)
    }
}

const ROOT_TOL: f64 = 1e-10;

fn newton(f: &dyn Fn(C64) -> Result<(C64, C64)>, seed: C64, center: C64, radius: f64) -> Result<C64> {
    let mut x = seed;
    for _ in 0..60 {
        let (fx, dx) = f(x)?;
        if dx.norm() == 0.0 {
            break;
        }
        let step = fx / dx;
        x -= step;
        if (x - center).norm() >= radius {
            break;
        }
        if step.norm() <= 1e-15 * x.norm().max(1.0) {
            if f(x)?.0.norm() < ROOT_TOL {
                return Ok(x);
            }
            break;
        }
    }
    let fx = f(x)?.0;
    if (x - center).norm() < radius && fx.norm() < ROOT_TOL {
        Ok(x)
    } else {
        Err(Error::RootNotFound(format!("Newton from {seed} ended at {x} with |f| = {:.3e}", fx.norm())))
    }
}

/// Newton that only accepts steps reducing `|f|`; tolerates a near-double root.
fn polish(f: &dyn Fn(C64) -> Result<(C64, C64)>, seed: C64, center: C64, radius: f64) -> Result<C64> {
    let mut x = seed;
    let (mut fx, mut dx) = f(x)?;
    for _ in 0..60 {
        if dx.norm() == 0.0 {
            break;
        }
        let step = fx / dx;
        let cand = x - step;
        if (cand - center).norm() >= radius {
            break;
        }
        let (fc, dc) = f(cand)?;
        if fc.norm() >= fx.norm() {
            break;
        }
        x = cand;
        fx = fc;
        dx = dc;
        if step.norm() <= 1e-15 * x.norm().max(1.0) {
            break;
        }
    }
    if fx.norm() < ROOT_TOL {
        Ok(x)
    } else {
        match muller(&|l| Ok(f(l)?.0), x, radius) {
            Ok(r) if (r - center).norm() < radius => Ok(r),
            _ => Err(Error::RootNotFound(format!("no root near {seed}, best |f| = {:.3e}", fx.norm()))),
        }
    }
}

fn muller(f: &dyn Fn(C64) -> Result<C64>, around: C64, radius: f64) -> Result<C64> {
    let h0 = radius / 8.0;
    let mut x = [around - h0, around + h0, around];
    let mut fx = [f(x[0])?, f(x[1])?, f(x[2])?];
    for _ in 0..100 {
        let (h1, h2) = (x[1] - x[0], x[2] - x[1]);
        let (d1, d2) = ((fx[1] - fx[0]) / h1, (fx[2] - fx[1]) / h2);
        let a = (d2 - d1) / (h2 + h1);
        let b = a * h2 + d2;
        let disc = (b * b - 4.0 * a * fx[2]).sqrt();
        let den = if (b + disc).norm() > (b - disc).norm() { b + disc } else { b - disc };
        let step = if den.norm() == 0.0 { C64::new(h0, 0.0) } else { -2.0 * fx[2] / den };
        let xn = x[2] + step;
        let fnew = f(xn)?;
        x = [x[1], x[2], xn];
        fx = [fx[1], fx[2], fnew];
        if fnew.norm() < ROOT_TOL && step.norm() < 1e-12 * xn.norm().max(1.0) {
            return Ok(xn);
        }
        if !xn.re.is_finite() || (xn - around).norm() > 4.0 * radius {
            break;
        }
    }
    if fx[2].norm() < ROOT_TOL {
        Ok(x[2])
    } else {
        Err(Error::RootNotFound(format!("Muller near {around} stalled at |f| = {:.3e}", fx[2].norm())))
    }
}

/// One-shot monodromy with a given minimal step count.
pub fn monodromy(p: &PotentialSpec, lambda: C64, steps: usize) -> Result<MonodromyResult> {
    if steps < 256 {
        return Err(Error::InvalidParams(format!("at least 256 steps required, got {steps}")));
    }
    Shooter::with_options(p, ShootOptions { min_steps: steps, ..ShootOptions::default() }).monodromy(lambda)
}

pub fn locate_bc_eigenvalues(p: &PotentialSpec, bc: Bc, n: u64) -> Result<LocatedEigenvalues> {
    Shooter::new(p).locate(bc, n)
}

/// Kronig-Penney discriminant `2 cos(s pi) + alpha sin(s pi)/s`, `s = sqrt(lambda)`,
/// for `alpha` times the delta comb.
pub fn kronig_penney_trace(alpha: f64, lambda: f64) -> f64 {
    let s = lambda.sqrt();
    2.0 * (s * PI).cos() + alpha * (s * PI).sin() / s
}

/// Roots of the Kronig-Penney discriminant equal to `+-2` near `n^2` (the
/// pair `(plus, minus)`), by bisection on the real line.
pub fn kronig_penney_pair(alpha: f64, n: u64) -> (f64, f64) {
    let target = if n.is_multiple_of(2) { 2.0 } else { -2.0 };
    let f = |l: f64| kronig_penney_trace(alpha, l) - target;
    let n2 = (n * n) as f64;
    // one root sits at n^2 (sin(n x) misses the deltas); the other is found by a
    // sign change on the side where alpha pushes it
    let dir = alpha.signum();
    let mut a = n2 + dir * 1e-9;
    let mut b = n2 + dir * (n as f64).max(1.0);
    while f(a).signum() == f(b).signum() {
        b = n2 + (b - n2) * 0.5;
        if (b - n2).abs() < 1e-9 {
            return (n2, n2);
        }
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(m).signum() == f(a).signum() {
            a = m;
        } else {
            b = m;
        }
    }
    let other = 0.5 * (a + b);
    if other > n2 {
        (other, n2)
    } else {
        (n2, other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cos() -> PotentialSpec {
        PotentialSpec::from_q(ZERO, [(2, C64::new(0.0, -0.5)), (-2, C64::new(0.0, 0.5))], true).unwrap()
    }

    #[test]
    fn free_discriminant() {
        let s = Shooter::new(&PotentialSpec::zero());
        for l in [0.3, 2.0, 4.0, 9.7, 30.0] {
            let r = s.monodromy(C64::new(l, 0.0)).unwrap();
            let want = 2.0 * (l.sqrt() * PI).cos();
            assert!((r.trace() - want).norm() < 1e-9, "lambda = {l}");
            assert!((r.det() - 1.0).norm() < 1e-8);
        }
        let r = s.monodromy(C64::new(2.0, 0.0)).unwrap();
        assert!((r.trace().re - (-0.532_510_684_08)).abs() < 1e-10);
    }

    #[test]
    fn variational_derivative_matches_difference() {
        let s = Shooter::new(&two_cos());
        let l = C64::new(3.3, 0.2);
        let h = 1e-5;
        let r = s.monodromy(l).unwrap();
        let rp = s.monodromy(l + h).unwrap();
        let rm = s.monodromy(l - h).unwrap();
        let fd = (rp.trace() - rm.trace()) / (2.0 * h);
        assert!((fd - (r.dm[0][0] + r.dm[1][1])).norm() < 1e-7);
        let fd2 = (rp.trace() - 2.0 * r.trace() + rm.trace()) / (h * h);
        assert!((fd2 - (r.d2m[0][0] + r.d2m[1][1])).norm() < 1e-3);
    }

    #[test]
    fn kronig_penney_discriminant() {
        let p = PotentialSpec::delta_comb(1.0, 200).unwrap();
        let r = monodromy(&p, C64::new(9.3, 0.0), 256).unwrap();
        assert!((r.trace().re - kronig_penney_trace(1.0, 9.3)).abs() < 1e-2);
        assert!((r.det() - 1.0).norm() < 1e-8);
    }

    #[test]
    fn free_double_roots() {
        let e = locate_bc_eigenvalues(&PotentialSpec::zero(), Bc::PerPlus, 4).unwrap();
        assert!(e.double_root);
        assert!(e.roots.iter().all(|r| (r - 16.0).norm() < 1e-10));
        let d = locate_bc_eigenvalues(&PotentialSpec::zero(), Bc::Dir, 3).unwrap();
        assert!((d.roots[0] - 9.0).norm() < 1e-10);
    }

    #[test]
    fn mathieu_values() {
        let p = two_cos();
        let e = locate_bc_eigenvalues(&p, Bc::PerMinus, 1).unwrap();
        assert!((e.roots[0].re - 1.859_108_072_514).abs() < 1e-8);
        assert!((e.roots[1].re - (-0.110_248_816_992)).abs() < 1e-8);
        let d = locate_bc_eigenvalues(&p, Bc::Dir, 2).unwrap();
        assert!((d.roots[0].re - 3.917_024_773_4).abs() < 1e-8);
        let d1 = locate_bc_eigenvalues(&p, Bc::Dir, 1).unwrap();
        assert!((d1.roots[0].re - (-0.110_248_816_992)).abs() < 1e-8);
    }

    #[test]
    fn labeling_rule() {
        let (p, m) = label_pair(C64::new(1.0, -1.0), C64::new(1.0, 2.0));
        assert_eq!((p, m), (C64::new(1.0, 2.0), C64::new(1.0, -1.0)));
        let (p, _) = label_pair(C64::new(0.0, 5.0), C64::new(0.5, 0.0));
        assert_eq!(p, C64::new(0.5, 0.0));
    }

    #[test]
    fn kronig_penney_pair_roots() {
        let (plus, minus) = kronig_penney_pair(1.0, 3);
        assert!((minus - 9.0).abs() < 1e-12);
        assert!((kronig_penney_trace(1.0, plus) + 2.0).abs() < 1e-10 && plus > 9.0);
    }
}
