//! Riesz projections onto the eigenvalues near `n^2` by contour quadrature,
//! and their deviation from the free coordinate projections.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::ops::RangeInclusive;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{loglog_slope, strictly_decreasing};
use crate::linalg::{CMatrix, Lu};
use crate::matrix_op::{assemble_matrix, default_cutoff, Bc, TruncatedOperator};
use crate::potential::PotentialSpec;

/// Proxy change below which node doubling stops.
const PROXY_TOL: f64 = 1e-9;
const MAX_NODES: usize = 1 << 14;

/// Boundary condition family for scans over `n`: periodic picks `Per+` or
/// `Per-` by the parity of `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcFamily {
    Periodic,
    Dir,
}

impl BcFamily {
    pub fn bc_for(self, n: u64) -> Bc {
        match self {
            BcFamily::Periodic => Bc::periodic_for(n),
            BcFamily::Dir => Bc::Dir,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionDeviation {
    pub n: u64,
    pub bc: Bc,
    /// `P_n - P_n^0` on the truncated index set.
    pub b: CMatrix,
    /// `D^2 sum |B_km|`, with `D^2 = 1` for exponentials and 2 for sines.
    pub l1_linf_proxy: f64,
    pub l2_opnorm: f64,
    pub quadrature_nodes: usize,
    /// Proxy change at the last node doubling.
    pub last_change: f64,
    pub trace: C64,
    /// `max |(P^2 - P)_km|`.
    pub idempotency_defect: f64,
}

impl ProjectionDeviation {
    /// Trace equals the free rank and `P` is idempotent, both to `tol`.
    pub fn is_projection(&self, tol: f64) -> bool {
        (self.trace - self.bc.free_multiplicity() as f64).norm() <= tol && self.idempotency_defect <= tol
    }
}

fn basis_constant(bc: Bc) -> f64 {
    if bc.is_periodic() {
        1.0
    } else {
        2.0
    }
}

/// `M - diag(k^2)`: the potential part of the truncated operator.
fn potential_part(op: &TruncatedOperator) -> CMatrix {
    let mut v = op.matrix().clone();
    for (i, &k) in op.index_set().iter().enumerate() {
        v[(i, i)] -= (k * k) as f64;
    }
    v
}

fn free_projection(op: &TruncatedOperator, n: u64) -> CMatrix {
    let dim = op.index_set().len();
    let mut p0 = CMatrix::zeros(dim, dim);
    for (i, &k) in op.index_set().iter().enumerate() {
        if k.unsigned_abs() == n {
            p0[(i, i)] = C64::new(1.0, 0.0);
        }
    }
    p0
}

/// Contribution of one node: `R(z) V R0(z)` times `(z - n^2)`, the factor
/// that turns the mean over equispaced angles into the contour integral.
fn node_term(op: &TruncatedOperator, v: &CMatrix, n: u64, theta: f64) -> Result<CMatrix> {
    let nf = n as f64;
    let w = C64::from_polar(nf, theta);
    let z = C64::new(nf * nf, 0.0) + w;
    let r = Lu::factor(&op.matrix().shifted_neg(z)).inverse()?;
    let idx = op.index_set();
    let vr0 = CMatrix::from_fn(v.rows(), v.cols(), |i, j| v[(i, j)] / (z - (idx[j] * idx[j]) as f64));
    Ok(r.matmul(&vr0).scale(w))
}

fn node_sum(op: &TruncatedOperator, v: &CMatrix, n: u64, thetas: &[f64]) -> Result<CMatrix> {
    let dim = v.rows();
    // summed in node order so the result does not depend on the thread count
    let terms = thetas.par_iter().map(|&t| node_term(op, v, n, t)).collect::<Result<Vec<_>>>()?;
    Ok(terms.iter().fold(CMatrix::zeros(dim, dim), |acc, t| acc.add(t)))
}

/// Reject contours passing within `1e-4 n` of an eigenvalue.
fn check_clearance(op: &TruncatedOperator, n: u64) -> Result<()> {
    let nf = n as f64;
    let center = C64::new(nf * nf, 0.0);
    for l in op.eigenvalues()? {
        if ((l - center).norm() - nf).abs() < 1e-4 * nf {
            return Err(Error::EigenvalueOnContour { n2: nf * nf });
        }
    }
    Ok(())
}

/// `P_n - P_n^0` by the trapezoid rule on `|z - n^2| = n`, starting from
/// `nodes` nodes and doubling until the proxy settles.
pub fn projection_deviation(p: &PotentialSpec, n: u64, bc: Bc, cutoff: usize, nodes: usize) -> Result<ProjectionDeviation> {
    if n == 0 {
        return Err(Error::InvalidParams("projection index must be at least 1".into()));
    }
    if bc.is_periodic() && Bc::periodic_for(n) != bc {
        return Err(Error::InvalidParams(format!("{bc:?} has no free eigenvalue at n^2 for n = {n}")));
    }
    let op = assemble_matrix(p, bc, cutoff)?;
    check_clearance(&op, n)?;
    let v = potential_part(&op);
    let d2 = basis_constant(bc);

    let mut count = nodes.max(4);
    let thetas: Vec<f64> = (0..count).map(|j| 2.0 * PI * j as f64 / count as f64).collect();
    let mut sum = node_sum(&op, &v, n, &thetas)?;
    let mut b = sum.scale(C64::new(1.0 / count as f64, 0.0));
    let mut proxy = d2 * b.entry_l1();
    loop {
        if 2 * count > MAX_NODES {
            return Err(Error::QuadratureStall { nodes: count });
        }
        // the new nodes interleave the old ones
        let fresh: Vec<f64> = (0..count).map(|j| PI * (2 * j + 1) as f64 / count as f64).collect();
        sum = sum.add(&node_sum(&op, &v, n, &fresh)?);
        count *= 2;
        b = sum.scale(C64::new(1.0 / count as f64, 0.0));
        let next = d2 * b.entry_l1();
        let change = (next - proxy).abs();
        proxy = next;
        if change < PROXY_TOL {
            let proj = free_projection(&op, n).add(&b);
            let idempotency_defect = proj.matmul(&proj).sub(&proj).max_abs();
            let l2_opnorm = b.spectral_norm()?;
            return Ok(ProjectionDeviation {
                n,
                bc,
                trace: proj.trace(),
                idempotency_defect,
                l1_linf_proxy: proxy,
                l2_opnorm,
                quadrature_nodes: count,
                last_change: change,
                b,
            });
        }
    }
}

/// First-order term of `P_n - P_n^0` in the potential: the residue at `n^2`
/// of `R0 V R0`. Nonzero only on the rows and columns of the free modes.
pub fn first_order_deviation(p: &PotentialSpec, n: u64, bc: Bc, cutoff: usize) -> Result<CMatrix> {
    let op = assemble_matrix(p, bc, cutoff)?;
    let v = potential_part(&op);
    let idx = op.index_set();
    let n2 = (n * n) as f64;
    let free = |k: i64| k.unsigned_abs() == n;
    Ok(CMatrix::from_fn(v.rows(), v.cols(), |i, j| {
        let (k, m) = (idx[i], idx[j]);
        match (free(k), free(m)) {
            (true, false) => v[(i, j)] / (n2 - (m * m) as f64),
            (false, true) => v[(i, j)] / (n2 - (k * k) as f64),
            _ => C64::new(0.0, 0.0),
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationRow {
    pub n: u64,
    pub proxy: f64,
    pub opnorm: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationScan {
    pub rows: Vec<DeviationRow>,
    /// Least-squares slope of `ln proxy` against `ln n`.
    pub slope: Option<f64>,
    pub strictly_decreasing: bool,
}

impl DeviationScan {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,proxy,opnorm,nodes\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{:.16e},{:.16e},{}", r.n, r.proxy, r.opnorm, r.nodes);
        }
        s
    }
}

/// Full deviation records over `ns`, computed in parallel and ordered by `n`.
pub fn deviation_records(
    p: &PotentialSpec,
    ns: RangeInclusive<u64>,
    family: BcFamily,
    cutoff: usize,
    nodes: usize,
) -> Result<Vec<ProjectionDeviation>> {
    ns.collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| projection_deviation(p, n, family.bc_for(n), cutoff, nodes))
        .collect()
}

/// Scan summary over `ns`. Records whose projection fails the trace or
/// idempotency check at `1e-8` are reported as errors.
pub fn deviation_scan(
    p: &PotentialSpec,
    ns: RangeInclusive<u64>,
    family: BcFamily,
    cutoff: Option<usize>,
) -> Result<DeviationScan> {
    let k = cutoff.unwrap_or_else(|| default_cutoff(*ns.end()));
    let records = deviation_records(p, ns, family, k, 64)?;
    if let Some(d) = records.iter().find(|d| !d.is_projection(1e-8)) {
        return Err(Error::ConvergenceFailure(format!(
            "quadrature at n = {} is not a projection of the free rank (trace {}, defect {:.3e})",
            d.n, d.trace, d.idempotency_defect
        )));
    }
    Ok(summarize(&records))
}

pub fn summarize(records: &[ProjectionDeviation]) -> DeviationScan {
    let rows: Vec<DeviationRow> = records
        .iter()
        .map(|d| DeviationRow { n: d.n, proxy: d.l1_linf_proxy, opnorm: d.l2_opnorm, nodes: d.quadrature_nodes })
        .collect();
    DeviationScan {
        slope: loglog_slope(rows.iter().map(|r| (r.n as f64, r.proxy))),
        strictly_decreasing: strictly_decreasing(rows.iter().map(|r| r.proxy)),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cos() -> PotentialSpec {
        PotentialSpec::from_cosine(0.0, &[std::f64::consts::SQRT_2]).unwrap()
    }

    #[test]
    fn zero_potential_has_no_deviation() {
        for (n, bc) in [(3, Bc::PerMinus), (4, Bc::PerPlus), (5, Bc::Dir)] {
            let d = projection_deviation(&PotentialSpec::zero(), n, bc, 32, 16).unwrap();
            assert!(d.b.as_slice().iter().all(|z| *z == C64::new(0.0, 0.0)));
            assert_eq!(d.l1_linf_proxy, 0.0);
            assert!(d.is_projection(1e-12));
        }
    }

    #[test]
    fn mathieu_projection_is_rank_two() {
        let d = projection_deviation(&two_cos(), 4, Bc::PerPlus, 64, 64).unwrap();
        assert!(d.is_projection(1e-8), "{d:?}");
        assert!(d.l2_opnorm <= d.l1_linf_proxy);
        assert!(d.last_change < 1e-9);
        let dir = projection_deviation(&two_cos(), 3, Bc::Dir, 64, 64).unwrap();
        assert!(dir.is_projection(1e-8));
    }

    #[test]
    fn first_order_matches_scale_derivative() {
        let p = PotentialSpec::from_cosine(0.0, &[1.0, 0.5]).unwrap();
        for (n, bc) in [(4, Bc::PerPlus), (5, Bc::PerMinus), (4, Bc::Dir)] {
            let t = 1e-2;
            let up = projection_deviation(&p.scaled(t), n, bc, 48, 64).unwrap().b;
            let down = projection_deviation(&p.scaled(-t), n, bc, 48, 64).unwrap().b;
            let fd = up.sub(&down).scale(C64::new(0.5 / t, 0.0));
            let exact = first_order_deviation(&p, n, bc, 48).unwrap();
            assert!(fd.sub(&exact).max_abs() < 1e-6, "{n} {bc:?}: {}", fd.sub(&exact).max_abs());
        }
    }

    #[test]
    fn first_order_entries_on_free_rows() {
        let p = two_cos();
        let b1 = first_order_deviation(&p, 4, Bc::PerPlus, 16).unwrap();
        let op = assemble_matrix(&p, Bc::PerPlus, 16).unwrap();
        let (i4, i6) = (op.position(4).unwrap(), op.position(6).unwrap());
        // V(4 - 6) / (16 - 36)
        assert!((b1[(i4, i6)] - 1.0 / -20.0).norm() < 1e-15);
        assert!((b1[(i6, i4)] - 1.0 / -20.0).norm() < 1e-15);
        assert_eq!(b1[(i4, i4)], C64::new(0.0, 0.0));
    }

    #[test]
    fn contour_through_an_eigenvalue_is_rejected() {
        // a constant shift of 2 puts the eigenvalue 2 on |z - 4| = 2
        let p = PotentialSpec::from_cosine(2.0, &[]).unwrap();
        let d = projection_deviation(&p, 2, Bc::PerPlus, 16, 16);
        assert_eq!(d.unwrap_err(), Error::EigenvalueOnContour { n2: 4.0 });
    }

    #[test]
    fn small_scan_decreases() {
        let s = deviation_scan(&two_cos(), 4..=8, BcFamily::Periodic, Some(64)).unwrap();
        assert!(s.strictly_decreasing);
        assert!(s.slope.unwrap() < -0.8);
        assert_eq!(s.to_csv().lines().count(), 6);
    }
}
