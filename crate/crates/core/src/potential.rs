//! Singular periodic potentials `v = v0 + Q'` with `Q` in L^2 and zero mean.
//!
//! The exponential coefficients `q(m)` (even `m`) are stored; everything else
//! (the distributional coefficients `V(m) = i m q(m)`, the sine coefficients,
//! tail energies) is derived from them.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    v0: C64,
    coeffs: BTreeMap<i64, C64>,
    real: bool,
}

/// Which construction `build_potential` uses.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    /// Raw exponential coefficients of `Q`.
    ExpQ { v0: C64, coeffs: Vec<(i64, C64)>, real: bool },
    /// `v(x) = v0 + sum_k v_k sqrt(2) cos 2kx`; `vk[0]` is `v_1`.
    CosV { v0: f64, vk: Vec<f64> },
    /// `alpha` times the pi-periodic delta comb, truncated at `|m| <= support`.
    DeltaComb { alpha: f64, support: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Exponential,
    Sine,
}

pub fn build_potential(kind: PotentialKind) -> Result<PotentialSpec> {
    match kind {
        PotentialKind::ExpQ { v0, coeffs, real } => PotentialSpec::from_q(v0, coeffs, real),
        PotentialKind::CosV { v0, vk } => PotentialSpec::from_cosine(v0, &vk),
        PotentialKind::DeltaComb { alpha, support } => PotentialSpec::delta_comb(alpha, support),
    }
}

fn check_hermitian(v0: C64, coeffs: &BTreeMap<i64, C64>) -> Result<()> {
    if v0.im.abs() > 1e-14 * v0.re.abs().max(1.0) {
        return Err(Error::ConjugacyViolation { m: 0 });
    }
    for (&m, &q) in coeffs {
        let partner = coeffs.get(&-m).copied().unwrap_or(ZERO);
        if (partner - q.conj()).norm() > 1e-12 * q.norm().max(1.0) {
            return Err(Error::ConjugacyViolation { m });
        }
    }
    Ok(())
}

impl PotentialSpec {
    pub fn zero() -> Self {
        PotentialSpec { v0: ZERO, coeffs: BTreeMap::new(), real: true }
    }

    /// From exponential coefficients of `Q`. Exact zeros are dropped.
    pub fn from_q(v0: C64, coeffs: impl IntoIterator<Item = (i64, C64)>, real: bool) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (m, q) in coeffs {
            if m == 0 {
                return Err(Error::ZeroMeanViolation(format!("{q}")));
            }
            if m % 2 != 0 {
                return Err(Error::ParityError { m });
            }
            if q != ZERO {
                *map.entry(m).or_insert(ZERO) += q;
            }
        }
        if real {
            check_hermitian(v0, &map)?;
        }
        Ok(PotentialSpec { v0, coeffs: map, real })
    }

    /// From the distributional coefficients `V(m)` for even `m != 0`.
    pub fn from_v(v0: C64, vcoeffs: impl IntoIterator<Item = (i64, C64)>, real: bool) -> Result<Self> {
        let mut q = Vec::new();
        for (m, v) in vcoeffs {
            if m == 0 {
                return Err(Error::ZeroMeanViolation(format!("{v}")));
            }
            if m % 2 != 0 {
                return Err(Error::ParityError { m });
            }
            q.push((m, v / C64::new(0.0, m as f64)));
        }
        Self::from_q(v0, q, real)
    }

    /// `v(x) = v0 + sum_k vk[k-1] sqrt(2) cos 2kx`.
    pub fn from_cosine(v0: f64, vk: &[f64]) -> Result<Self> {
        if !v0.is_finite() || vk.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("cosine coefficients must be finite reals".into()));
        }
        let mut coeffs = Vec::new();
        for (i, &v) in vk.iter().enumerate() {
            let m = 2 * (i as i64 + 1);
            let vm = C64::new(v / SQRT_2, 0.0);
            coeffs.push((m, vm));
            coeffs.push((-m, vm));
        }
        Self::from_v(C64::new(v0, 0.0), coeffs, true)
    }

    /// `alpha * sum_k delta(x - k pi)`, whose `V(m)` is the constant
    /// `alpha / pi`. Coefficients with `|m| > support` are dropped.
    pub fn delta_comb(alpha: f64, support: u64) -> Result<Self> {
        if !alpha.is_finite() || alpha == 0.0 {
            return Err(Error::InvalidParams("delta comb strength must be a nonzero real".into()));
        }
        let s = support as i64;
        let coeffs = (1..=s / 2).flat_map(|k| {
            let m = 2 * k;
            let q = C64::new(0.0, -alpha / (PI * m as f64));
            [(m, q), (-m, q.conj())]
        });
        Self::from_q(C64::new(alpha / PI, 0.0), coeffs, true)
    }

    pub fn v0(&self) -> C64 {
        self.v0
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn is_zero(&self) -> bool {
        self.v0 == ZERO && self.coeffs.is_empty()
    }

    /// Stored `(m, q(m))` pairs in increasing `m`.
    pub fn q_coeffs(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        self.coeffs.iter().map(|(&m, &q)| (m, q))
    }

    pub fn q(&self, m: i64) -> C64 {
        self.coeffs.get(&m).copied().unwrap_or(ZERO)
    }

    /// Largest `|m|` with a stored coefficient (0 for a constant potential).
    pub fn support(&self) -> u64 {
        self.coeffs.keys().map(|m| m.unsigned_abs()).max().unwrap_or(0)
    }

    /// `V(m) = i m q(m)` for even `m`, with `V(0) = v0`.
    pub fn v(&self, m: i64) -> Result<C64> {
        if m % 2 != 0 {
            return Err(Error::ParityError { m });
        }
        Ok(self.v_even(m))
    }

    /// Same as [`v`](Self::v) but returns 0 for odd `m`, which is what the
    /// operator matrices need: odd differences never couple to even modes.
    pub fn v_even(&self, m: i64) -> C64 {
        if m == 0 {
            self.v0
        } else if m % 2 != 0 {
            ZERO
        } else {
            C64::new(0.0, m as f64) * self.q(m)
        }
    }

    /// `v_k = V(2k)`, the coefficient sequence the gap theory is stated in.
    pub fn vk(&self, k: i64) -> C64 {
        self.v_even(2 * k)
    }

    /// All `(k, v_k)` with `v_k` possibly nonzero, `k != 0`.
    pub fn vk_coeffs(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        self.coeffs.iter().map(|(&m, &q)| (m / 2, C64::new(0.0, m as f64) * q))
    }

    /// Coefficient of `V` in the requested basis: `V(m)` for exponential,
    /// `k * qs(k)` for sine.
    pub fn fourier_coeff_v(&self, index: i64, basis: Basis) -> Result<C64> {
        match basis {
            Basis::Exponential => self.v(index),
            Basis::Sine => {
                if index < 1 {
                    return Err(Error::InvalidParams("sine index must be at least 1".into()));
                }
                Ok(self.sine_v(index as u64))
            }
        }
    }

    /// Sine coefficient of `Q` against `sqrt(2) sin kx` in the inner product
    /// `(1/pi) int_0^pi`.
    pub fn sine_q(&self, k: u64) -> C64 {
        let ki = k as i64;
        if k == 0 {
            return ZERO;
        }
        if k.is_multiple_of(2) {
            C64::new(0.0, 1.0 / SQRT_2) * (self.q(ki) - self.q(-ki))
        } else {
            let kf = k as f64;
            let s: C64 = self.coeffs.iter().map(|(&m, &q)| q * (kf / (kf * kf - (m * m) as f64))).sum();
            s * (2.0 * SQRT_2 / PI)
        }
    }

    /// `k * sine_q(k)`.
    pub fn sine_v(&self, k: u64) -> C64 {
        self.sine_q(k) * k as f64
    }

    pub fn sine_coeffs(&self, k_max: u64) -> SineCoeffs {
        SineCoeffs { table: (1..=k_max).map(|k| (k, self.sine_q(k))).collect() }
    }

    /// `(sum_{|k| >= m} |q(k)|^2)^{1/2}`.
    pub fn tail_energy(&self, m: u64) -> f64 {
        self.coeffs
            .iter()
            .filter(|(k, _)| k.unsigned_abs() >= m)
            .map(|(_, q)| q.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `||q||`, the L^2 norm of `Q` in the normalized inner product.
    pub fn q_norm(&self) -> f64 {
        self.tail_energy(0)
    }

    /// Partial sum `Q(x)`.
    pub fn eval_q(&self, x: f64) -> C64 {
        self.coeffs.iter().map(|(&m, &q)| q * C64::from_polar(1.0, m as f64 * x)).sum()
    }

    /// `t * v`.
    pub fn scaled(&self, t: f64) -> PotentialSpec {
        PotentialSpec {
            v0: self.v0 * t,
            coeffs: self.coeffs.iter().filter(|_| t != 0.0).map(|(&m, &q)| (m, q * t)).collect(),
            real: self.real,
        }
    }

    /// Drop coefficients with `|m| > support`.
    pub fn truncated(&self, support: u64) -> PotentialSpec {
        PotentialSpec {
            v0: self.v0,
            coeffs: self.coeffs.iter().filter(|(m, _)| m.unsigned_abs() <= support).map(|(&m, &q)| (m, q)).collect(),
            real: self.real,
        }
    }
}

/// Sine coefficients `qs(k)` of `Q` on `[0, pi]`, derived from the
/// exponential data.
#[derive(Debug, Clone, PartialEq)]
pub struct SineCoeffs {
    table: BTreeMap<u64, C64>,
}

impl SineCoeffs {
    pub fn get(&self, k: u64) -> C64 {
        self.table.get(&k).copied().unwrap_or(ZERO)
    }

    pub fn k_max(&self) -> u64 {
        self.table.keys().next_back().copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, C64)> + '_ {
        self.table.iter().map(|(&k, &q)| (k, q))
    }

    /// Exponential coefficient `q(m)` recovered from the table.
    ///
    /// The odd-`Q` part comes from the even sine entries and is exact. The
    /// even part is a slowly converging sum over odd `k`; the part beyond the
    /// table is estimated from an `A/k + B/k^3` fit to the last two odd entries,
    /// using `sum_{k odd} 1/(k^2 - m^2) = 0` for even `m != 0`.
    pub fn exp_coeff(&self, m: i64) -> C64 {
        if m == 0 {
            return ZERO;
        }
        let a = m.unsigned_abs();
        let sign = if m > 0 { -1.0 } else { 1.0 };
        let odd_part = C64::new(0.0, sign / SQRT_2) * self.get(a);
        let kmax = self.k_max();
        let last = if kmax % 2 == 1 { kmax } else { kmax.saturating_sub(1) };
        if last < 3 {
            return odd_part;
        }
        let mf = (m * m) as f64;
        let mut head = ZERO;
        let mut partial_pole = 0.0;
        let mut partial_sq = 0.0;
        for k in (1..=last).step_by(2) {
            let kf = k as f64;
            head += self.get(k) * (kf / (kf * kf - mf));
            partial_pole += 1.0 / (kf * kf - mf);
            partial_sq += 1.0 / (kf * kf);
        }
        let (k1, k2) = ((last - 2) as f64, last as f64);
        let (q1, q2) = (self.get(last - 2), self.get(last));
        // q(k) ~ A/k + B/k^3
        let b = (q1 * k1 - q2 * k2) / (1.0 / (k1 * k1) - 1.0 / (k2 * k2));
        let a_coef = q2 * k2 - b / (k2 * k2);
        let tail_pole = -partial_pole;
        let tail_sq = PI * PI / 8.0 - partial_sq;
        // sum 1/(k^2 (k^2 - m^2)) = (1/m^2) sum [1/(k^2 - m^2) - 1/k^2]
        let tail_mixed = (tail_pole - tail_sq) / mf;
        let tail = a_coef * tail_pole + b * tail_mixed;
        odd_part + (head + tail) * (2.0 * SQRT_2 / PI)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_cos() -> PotentialSpec {
        PotentialSpec::from_q(ZERO, [(2, C64::new(0.0, -0.5)), (-2, C64::new(0.0, 0.5))], true).unwrap()
    }

    #[test]
    fn two_cos_has_unit_coefficients() {
        let p = two_cos();
        assert_abs_diff_eq!((p.v(2).unwrap() - 1.0).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((p.v(-2).unwrap() - 1.0).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(p.v(3), Err(Error::ParityError { m: 3 }));
        let c = PotentialSpec::from_cosine(0.0, &[SQRT_2]).unwrap();
        assert!((c.v_even(2) - 1.0).norm() < 1e-15 && (c.v_even(-2) - 1.0).norm() < 1e-15);
    }

    #[test]
    fn zero_mean_and_conjugacy_errors() {
        assert!(matches!(PotentialSpec::from_q(ZERO, [(0, C64::new(1.0, 0.0))], false), Err(Error::ZeroMeanViolation(_))));
        assert_eq!(
            PotentialSpec::from_q(ZERO, [(2, C64::new(1.0, 0.0))], true),
            Err(Error::ConjugacyViolation { m: 2 })
        );
        assert!(PotentialSpec::from_cosine(0.0, &[0.0, 0.0]).unwrap().is_zero());
        assert!(PotentialSpec::delta_comb(0.0, 10).is_err());
    }

    #[test]
    fn delta_comb_is_flat() {
        let p = PotentialSpec::delta_comb(PI, 80).unwrap();
        assert_abs_diff_eq!((p.v(40).unwrap() - 1.0).norm(), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!((p.v(0).unwrap() - 1.0).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(p.v(82).unwrap(), ZERO);
    }

    #[test]
    fn delta_comb_matches_sawtooth_quadrature() {
        // Q is the zero-mean sawtooth alpha (1/2 - x/pi) on (0, pi)
        let alpha = 1.3;
        let p = PotentialSpec::delta_comb(alpha, 40).unwrap();
        let nodes = 20000;
        for m in [2i64, -4, 10] {
            let h = PI / nodes as f64;
            let q: C64 = (0..nodes)
                .map(|j| {
                    let x = (j as f64 + 0.5) * h;
                    C64::from_polar(alpha * (0.5 - x / PI), -(m as f64) * x)
                })
                .sum::<C64>()
                * (h / PI);
            assert!((q - p.q(m)).norm() < 1e-7, "m = {m}");
        }
        // partial sums at pi/2 vanish by symmetry of the sawtooth
        assert!(p.eval_q(PI / 2.0).norm() < 1e-12);
    }

    #[test]
    fn tail_energy_examples() {
        let p = two_cos();
        assert_abs_diff_eq!(p.tail_energy(0), 0.5f64.sqrt(), epsilon = 1e-15);
        assert_eq!(p.tail_energy(3), 0.0);
        let d = PotentialSpec::delta_comb(1.0, 200).unwrap();
        let brute: f64 = (1..=100i64)
            .filter(|k| 2 * k >= 100)
            .map(|k| 2.0 / (PI * 2.0 * k as f64).powi(2))
            .sum::<f64>()
            .sqrt();
        assert_abs_diff_eq!(d.tail_energy(100), brute, epsilon = 1e-15);
        assert_eq!(PotentialSpec::zero().tail_energy(0), 0.0);
    }

    #[test]
    fn sine_coefficients_of_two_cos() {
        let p = two_cos();
        assert_abs_diff_eq!((p.sine_q(2) - 1.0 / SQRT_2).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((p.sine_v(2) - SQRT_2).norm(), 0.0, epsilon = 1e-15);
        assert!(p.sine_q(1).norm() < 1e-15 && p.sine_q(4).norm() < 1e-15);
    }

    #[test]
    fn sine_round_trip_for_odd_q() {
        for p in [two_cos(), PotentialSpec::delta_comb(1.0, 60).unwrap(), PotentialSpec::from_cosine(0.0, &[0.3, -1.2, 0.7]).unwrap()] {
            let s = p.sine_coeffs(4 * p.support().max(1));
            for (m, q) in p.q_coeffs() {
                assert!((s.exp_coeff(m) - q).norm() < 1e-12, "m = {m}");
            }
        }
    }

    #[test]
    fn sine_round_trip_for_general_q() {
        let p = PotentialSpec::from_q(ZERO, [(2, C64::new(0.0, -0.5)), (-4, C64::new(0.25, 0.1))], false).unwrap();
        let s = p.sine_coeffs(1024);
        for (m, q) in p.q_coeffs() {
            assert!((s.exp_coeff(m) - q).norm() < 1e-12, "m = {m}: {}", (s.exp_coeff(m) - q).norm());
        }
    }

    #[test]
    fn real_potentials_have_conjugate_v() {
        let p = PotentialSpec::from_cosine(0.5, &[1.0, -0.3]).unwrap();
        for m in [-4i64, -2, 2, 4] {
            assert!((p.v_even(-m) - p.v_even(m).conj()).norm() < 1e-15);
        }
    }
}
