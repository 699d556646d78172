//! The three independent eigenvalue methods behind one interface, and
//! per-index comparison tables.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basic_equation::{solve_disc_pair, SpectralTriple};
use crate::error::{Error, Result};
use crate::matrix_op::{assemble_matrix, Bc, TruncatedOperator};
use crate::potential::PotentialSpec;
use crate::shooting::Shooter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Periodic pair from the reduced 2x2 equation, `mu` by shooting.
    Basic,
    /// Dense eigenvalues of the truncated Fourier matrices.
    Matrix,
    /// Roots of the monodromy discriminant and of `y2(pi)`.
    Shoot,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Basic, Method::Matrix, Method::Shoot];

    pub fn name(self) -> &'static str {
        match self {
            Method::Basic => "basic",
            Method::Matrix => "matrix",
            Method::Shoot => "shoot",
        }
    }
}

/// Matrix eigenvalues near `n^2`, first in `|lambda - n^2| < max(n/4, 1/4)`
/// and, when that disc does not hold the expected count, in a disc reaching
/// halfway to the neighbouring free levels.
pub fn matrix_cluster(op: &TruncatedOperator, n: u64) -> Result<Vec<C64>> {
    let bc = op.bc();
    let expected = bc.free_multiplicity();
    let nf = n as f64;
    let narrow = (nf / 4.0).max(0.25);
    let wide = match (bc, n) {
        (Bc::Dir, 1) => 1.5,
        (Bc::Dir, _) => nf - 0.5,
        (_, 1) => 4.0,
        _ => 2.0 * nf - 2.0,
    };
    let center = C64::new(nf * nf, 0.0);
    let mut last = 0;
    for radius in [narrow, wide.max(narrow)] {
        let mut out: Vec<C64> = op
            .eigs_in_disc(center, radius)?
            .into_iter()
            .flat_map(|(l, m)| std::iter::repeat_n(l, m))
            .collect();
        if out.len() == expected {
            out.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
            return Ok(out);
        }
        last = out.len();
    }
    Err(Error::RootCountMismatch { n, found: last, winding: last as i64 })
}

/// Solver state shared across indices for one potential.
#[derive(Debug)]
pub struct SpectrumSolver {
    p: PotentialSpec,
    cutoff: usize,
    shooter: Shooter,
}

impl SpectrumSolver {
    pub fn new(p: &PotentialSpec, cutoff: usize) -> SpectrumSolver {
        SpectrumSolver { p: p.clone(), cutoff, shooter: Shooter::new(p) }
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.p
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn shooter(&self) -> &Shooter {
        &self.shooter
    }

    pub fn mu_by_shooting(&self, n: u64) -> Result<C64> {
        Ok(self.shooter.locate(Bc::Dir, n)?.roots[0])
    }

    pub fn triple(&self, n: u64, method: Method) -> Result<SpectralTriple> {
        let (a, b, mu) = match method {
            Method::Basic => {
                let pair = solve_disc_pair(&self.p, n, self.cutoff)?;
                (pair.lambda_plus, pair.lambda_minus, self.mu_by_shooting(n)?)
            }
            Method::Matrix => {
                let per = matrix_cluster(&assemble_matrix(&self.p, Bc::periodic_for(n), self.cutoff)?, n)?;
                let dir = matrix_cluster(&assemble_matrix(&self.p, Bc::Dir, self.cutoff)?, n)?;
                (per[0], per[1], dir[0])
            }
            Method::Shoot => {
                let per = self.shooter.locate(Bc::periodic_for(n), n)?;
                (per.roots[0], per.roots[1], self.mu_by_shooting(n)?)
            }
        };
        Ok(SpectralTriple::new(n, a, b, mu))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub n: u64,
    pub triples: Vec<(Method, SpectralTriple)>,
    /// Largest pairwise difference of `lambda+`, `lambda-` and `mu` across
    /// the methods, relative to `max(1, n^2)`.
    pub discrepancy: f64,
}

impl SpectrumRow {
    pub fn get(&self, method: Method) -> Option<&SpectralTriple> {
        self.triples.iter().find(|(m, _)| *m == method).map(|(_, t)| t)
    }

    /// Relative disagreement between two methods on `lambda+-` and `mu`.
    pub fn disagreement(&self, a: Method, b: Method) -> Option<f64> {
        let (x, y) = (self.get(a)?, self.get(b)?);
        let scale = ((self.n * self.n) as f64).max(1.0);
        let d = [(x.lambda_plus - y.lambda_plus), (x.lambda_minus - y.lambda_minus), (x.mu - y.mu)]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        Some(d / scale)
    }
}

/// One row per `n`, each method evaluated independently.
pub fn spectrum_table(solver: &SpectrumSolver, ns: RangeInclusive<u64>, methods: &[Method]) -> Result<Vec<SpectrumRow>> {
    ns.collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| {
            let triples = methods
                .iter()
                .map(|&m| Ok((m, solver.triple(n, m)?)))
                .collect::<Result<Vec<_>>>()?;
            let mut row = SpectrumRow { n, triples, discrepancy: 0.0 };
            for (i, &a) in methods.iter().enumerate() {
                for &b in &methods[i + 1..] {
                    row.discrepancy = row.discrepancy.max(row.disagreement(a, b).unwrap_or(0.0));
                }
            }
            Ok(row)
        })
        .collect()
}

pub fn spectrum_csv(rows: &[SpectrumRow]) -> String {
    let mut s = String::from("n,method,lam_plus_re,lam_plus_im,lam_minus_re,lam_minus_im,mu_re,mu_im,discrepancy\n");
    for r in rows {
        for (m, t) in &r.triples {
            let _ = writeln!(
                s,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.n,
                m.name(),
                t.lambda_plus.re,
                t.lambda_plus.im,
                t.lambda_minus.re,
                t.lambda_minus.im,
                t.mu.re,
                t.mu.im,
                r.discrepancy
            );
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_operator_by_all_methods() {
        let solver = SpectrumSolver::new(&PotentialSpec::zero(), 64);
        let rows = spectrum_table(&solver, 1..=4, &Method::ALL).unwrap();
        for r in &rows {
            let n2 = (r.n * r.n) as f64;
            for (_, t) in &r.triples {
                assert!((t.lambda_plus - n2).norm() < 1e-10 && (t.mu - n2).norm() < 1e-10);
                assert!(t.gamma < 1e-10 && t.big_delta < 1e-10);
            }
            assert!(r.discrepancy < 1e-12);
        }
        assert_eq!(spectrum_csv(&rows).lines().count(), 13);
    }

    #[test]
    fn mathieu_methods_agree() {
        let p = PotentialSpec::from_cosine(0.0, &[std::f64::consts::SQRT_2]).unwrap();
        let solver = SpectrumSolver::new(&p, 64);
        let rows = spectrum_table(&solver, 1..=5, &Method::ALL).unwrap();
        for r in &rows {
            assert!(r.disagreement(Method::Basic, Method::Matrix).unwrap() < 1e-8, "{r:?}");
            assert!(r.discrepancy < 1e-6, "{r:?}");
        }
        let t = rows[0].get(Method::Matrix).unwrap();
        assert!((t.lambda_minus.re + 0.110_248_816_992).abs() < 1e-9);
    }
}
