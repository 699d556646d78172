//! Truncated Fourier matrices of the periodic, antiperiodic and Dirichlet
//! operators, and a dense eigenvalue oracle.

use std::f64::consts::SQRT_2;
use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, winding_by_phase, CMatrix, Lu};
use crate::potential::PotentialSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bc {
    /// Periodic: modes `e^{ikx}`, `k` even.
    PerPlus,
    /// Antiperiodic: `k` odd.
    PerMinus,
    /// Dirichlet: `sqrt(2) sin kx`, `k >= 1`.
    Dir,
}

impl Bc {
    /// The periodic boundary condition whose spectrum clusters near `n^2`.
    pub fn periodic_for(n: u64) -> Bc {
        if n.is_multiple_of(2) {
            Bc::PerPlus
        } else {
            Bc::PerMinus
        }
    }

    pub fn is_periodic(self) -> bool {
        !matches!(self, Bc::Dir)
    }

    /// Eigenvalues of the free operator near `n^2`.
    pub fn free_multiplicity(self) -> usize {
        if self.is_periodic() {
            2
        } else {
            1
        }
    }

    /// Mode indices kept at cutoff `k`.
    pub fn index_set(self, k: usize) -> Vec<i64> {
        let k = k as i64;
        match self {
            Bc::PerPlus => (-k..=k).filter(|j| j.rem_euclid(2) == 0).collect(),
            Bc::PerMinus => (-k..=k).filter(|j| j.rem_euclid(2) == 1).collect(),
            Bc::Dir => (1..=k).collect(),
        }
    }
}

pub const MIN_CUTOFF: usize = 8;

/// Cutoff used when the caller does not choose one.
pub fn default_cutoff(n_max: u64) -> usize {
    (4 * n_max as usize).max(64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    bc: Bc,
    cutoff: usize,
    index: Vec<i64>,
    matrix: CMatrix,
}

/// `V(k-m)` between exponential modes, with `V(0) = v0`.
pub(crate) fn exp_entry(p: &PotentialSpec, k: i64, m: i64) -> C64 {
    p.v_even(k - m)
}

/// Sine-basis table `Vs(j) = j qs(j)` for `j = 0..=jmax`.
pub(crate) fn sine_v_table(p: &PotentialSpec, jmax: usize) -> Vec<C64> {
    (0..=jmax as u64).map(|j| p.sine_v(j)).collect()
}

/// Dirichlet matrix entry, excluding the `k^2` term, from a sine table.
pub(crate) fn dir_entry(p: &PotentialSpec, vs: &[C64], k: i64, m: i64) -> C64 {
    let coupling = (vs[(k - m).unsigned_abs() as usize] - vs[(k + m) as usize]) / SQRT_2;
    if k == m {
        coupling + p.v0()
    } else {
        coupling
    }
}

pub fn assemble_matrix(p: &PotentialSpec, bc: Bc, cutoff: usize) -> Result<TruncatedOperator> {
    if cutoff < MIN_CUTOFF {
        return Err(Error::CutoffTooSmall { k: cutoff, min: MIN_CUTOFF });
    }
    let index = bc.index_set(cutoff);
    let n = index.len();
    let matrix = match bc {
        Bc::PerPlus | Bc::PerMinus => CMatrix::from_fn(n, n, |i, j| {
            let (k, m) = (index[i], index[j]);
            let d = if i == j { C64::new((k * k) as f64, 0.0) } else { C64::new(0.0, 0.0) };
            d + exp_entry(p, k, m)
        }),
        Bc::Dir => {
            let vs = sine_v_table(p, 2 * cutoff);
            CMatrix::from_fn(n, n, |i, j| {
                let (k, m) = (index[i], index[j]);
                let d = if i == j { C64::new((k * k) as f64, 0.0) } else { C64::new(0.0, 0.0) };
                d + dir_entry(p, &vs, k, m)
            })
        }
    };
    Ok(TruncatedOperator { bc, cutoff, index, matrix })
}

/// Eigenvalues within this relative distance are merged into one entry.
const CLUSTER_TOL: f64 = 1e-10;

impl TruncatedOperator {
    pub fn bc(&self) -> Bc {
        self.bc
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn index_set(&self) -> &[i64] {
        &self.index
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Position of mode `k` in the index set.
    pub fn position(&self, k: i64) -> Option<usize> {
        self.index.iter().position(|&j| j == k)
    }

    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        eigenvalues(&self.matrix)
    }

    /// Argument-principle count of eigenvalues inside `|lambda - center| = radius`.
    pub fn winding_count(&self, center: C64, radius: f64) -> Result<i64> {
        winding_by_phase(
            |z| Lu::factor(&self.matrix.shifted_neg(z)).log_det().map(|l| l.im),
            center,
            radius,
            128,
            1 << 14,
        )
    }

    /// Eigenvalues inside the disc with algebraic multiplicities. The
    /// multiplicities are checked against the winding number of
    /// `det(lambda - M)` on the boundary.
    pub fn eigs_in_disc(&self, center: C64, radius: f64) -> Result<Vec<(C64, usize)>> {
        let eig = self.eigenvalues()?;
        self.eigs_in_disc_from(&eig, center, radius)
    }

    pub(crate) fn eigs_in_disc_from(&self, eig: &[C64], center: C64, radius: f64) -> Result<Vec<(C64, usize)>> {
        const ATTEMPTS: usize = 3;
        for attempt in 0..=ATTEMPTS {
            let r = radius * (1.0 - 0.01 * attempt as f64);
            if eig.iter().any(|l| ((l - center).norm() - r).abs() < 1e-6) {
                continue;
            }
            let mut inside: Vec<C64> = eig.iter().copied().filter(|l| (l - center).norm() < r).collect();
            inside.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
            let mut clusters: Vec<(C64, usize)> = Vec::new();
            for l in inside {
                match clusters.iter_mut().find(|(c, _)| (c - l).norm() <= CLUSTER_TOL * c.norm().max(1.0)) {
                    Some((c, m)) => {
                        *c = (*c * *m as f64 + l) / (*m + 1) as f64;
                        *m += 1;
                    }
                    None => clusters.push((l, 1)),
                }
            }
            let total: usize = clusters.iter().map(|c| c.1).sum();
            let winding = self.winding_count(center, r)?;
            if winding != total as i64 {
                return Err(Error::ConvergenceFailure(format!(
                    "eigensolver finds {total} eigenvalues in the disc, winding number is {winding}"
                )));
            }
            return Ok(clusters);
        }
        Err(Error::BoundaryEigenvalue { attempts: ATTEMPTS })
    }

    /// The eigenvalues near `n^2` (in `|lambda - n^2| < n/4`, or the whole
    /// disc of radius 1/4 for `n = 0`), repeated by multiplicity and sorted
    /// so that the first has the larger real part.
    pub fn cluster_near(&self, n: u64) -> Result<Vec<C64>> {
        let center = C64::new((n * n) as f64, 0.0);
        let radius = (n as f64 / 4.0).max(0.25);
        let mut out: Vec<C64> = self
            .eigs_in_disc(center, radius)?
            .into_iter()
            .flat_map(|(l, m)| std::iter::repeat_n(l, m))
            .collect();
        out.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
        Ok(out)
    }

    /// Row-major CSV, each entry written as `re,im`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for i in 0..self.matrix.rows() {
            let row: Vec<String> = self.matrix.row(i).iter().map(|z| format!("{:.16e},{:.16e}", z.re, z.im)).collect();
            let _ = writeln!(s, "{}", row.join(","));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialSpec;

    fn two_cos() -> PotentialSpec {
        PotentialSpec::from_q(C64::new(0.0, 0.0), [(2, C64::new(0.0, -0.5)), (-2, C64::new(0.0, 0.5))], true).unwrap()
    }

    #[test]
    fn free_periodic_matrix_is_diagonal() {
        let op = assemble_matrix(&PotentialSpec::zero(), Bc::PerPlus, 8).unwrap();
        let want = [64.0, 36.0, 16.0, 4.0, 0.0, 4.0, 16.0, 36.0, 64.0];
        for i in 0..9 {
            for j in 0..9 {
                let e = if i == j { want[i] } else { 0.0 };
                assert_eq!(op.matrix()[(i, j)], C64::new(e, 0.0));
            }
        }
        assert_eq!(assemble_matrix(&PotentialSpec::zero(), Bc::PerPlus, 4), Err(Error::CutoffTooSmall { k: 4, min: 8 }));
    }

    #[test]
    fn two_cos_is_pentadiagonal() {
        let op = assemble_matrix(&two_cos(), Bc::PerPlus, 8).unwrap();
        let m = op.matrix();
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                let want = if i.abs_diff(j) == 1 { 1.0 } else if i == j { (op.index_set()[i].pow(2)) as f64 } else { 0.0 };
                assert!((m[(i, j)] - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn two_cos_dirichlet_entries() {
        let op = assemble_matrix(&two_cos(), Bc::Dir, 8).unwrap();
        let m = op.matrix();
        // <2cos2x sin kx, sin mx> in the normalized basis
        assert!((m[(0, 0)] - C64::new(0.0, 0.0)).norm() < 1e-14);
        assert!((m[(0, 2)] - 1.0).norm() < 1e-14);
        assert!((m[(1, 1)] - 4.0).norm() < 1e-14);
        assert!((m[(1, 3)] - 1.0).norm() < 1e-14);
        assert!(m[(0, 1)].norm() < 1e-14);
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                assert!((m[(i, j)] - m[(j, i)]).norm() < 1e-14 && m[(i, j)].im.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn free_double_eigenvalue() {
        let op = assemble_matrix(&PotentialSpec::zero(), Bc::PerPlus, 16).unwrap();
        let e = op.eigs_in_disc(C64::new(16.0, 0.0), 1.0).unwrap();
        assert_eq!(e, vec![(C64::new(16.0, 0.0), 2)]);
    }

    #[test]
    fn mathieu_antiperiodic_pair() {
        // Mathieu characteristic values a1, b1 at q = 1
        let op = assemble_matrix(&two_cos(), Bc::PerMinus, 64).unwrap();
        let e = op.eigs_in_disc(C64::new(1.0, 0.0), 1.25).unwrap();
        assert_eq!(e.len(), 2);
        assert!((e[0].0.re - (-0.110_248_816_992)).abs() < 1e-9);
        assert!((e[1].0.re - 1.859_108_072_514).abs() < 1e-9);
        let d = assemble_matrix(&two_cos(), Bc::Dir, 64).unwrap();
        let mu = d.eigs_in_disc(C64::new(4.0, 0.0), 1.0).unwrap();
        assert_eq!(mu.len(), 1);
        assert!((mu[0].0.re - 3.917_024_773_4).abs() < 1e-8);
    }

    #[test]
    fn csv_shape() {
        let op = assemble_matrix(&two_cos(), Bc::Dir, 8).unwrap();
        let csv = op.to_csv();
        assert_eq!(csv.lines().count(), 8);
        assert!(csv.lines().all(|l| l.split(',').count() == 16));
    }
}
