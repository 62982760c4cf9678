//! Closed-form dark state of the collective jump operator
//! D = cos(theta) S- + sin(theta) S+ in the maximal-spin sector, and the
//! exact steady-state squeezing derived from it.
//!
//! The amplitude recursion fills only even excitation numbers:
//!     c_{2n} = (-1)^n tan^n(theta) (N/2 choose n) (N choose 2n)^{-1/2} c_0
//! evaluated in the log domain so N in the thousands stays finite.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spin::{
    build_jump_operator, build_spin_operators, SpinBasis, SpinOperators, SqueezingResult,
};

type C64 = Complex64;

pub struct SteadyCoefficients {
    n: u32,
    tan_theta: f64,
    /// amplitude at excitation k (i.e. m = -N/2 + k), normalized
    c: Vec<f64>,
}

fn validate_inputs(n: u32, tan_theta: f64) -> Result<()> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "dark-state construction needs even N >= 2, got {n}"
        )));
    }
    if !(0.0..1.0).contains(&tan_theta) {
        return Err(Error::NonNormalizable(tan_theta));
    }
    Ok(())
}

/// ln k! for k = 0..=n
fn ln_factorials(n: usize) -> Vec<f64> {
    let mut table = vec![0.0; n + 1];
    for k in 1..=n {
        table[k] = table[k - 1] + (k as f64).ln();
    }
    table
}

pub fn steady_coefficients(n: u32, tan_theta: f64) -> Result<SteadyCoefficients> {
    validate_inputs(n, tan_theta)?;
    let nn = n as usize;
    let half = nn / 2;
    let lf = ln_factorials(nn);
    let ln_binom = |a: usize, b: usize| lf[a] - lf[b] - lf[a - b];

    // log magnitudes and signs of the unnormalized even amplitudes
    let mut ln_mag = vec![f64::NEG_INFINITY; half + 1];
    ln_mag[0] = 0.0;
    if tan_theta > 0.0 {
        let ln_tan = tan_theta.ln();
        for k in 1..=half {
            ln_mag[k] = k as f64 * ln_tan + ln_binom(half, k) - 0.5 * ln_binom(nn, 2 * k);
        }
    }
    let peak = ln_mag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let norm2: f64 = ln_mag.iter().map(|&l| (2.0 * (l - peak)).exp()).sum();
    let scale = norm2.sqrt();

    let mut c = vec![0.0; nn + 1];
    for k in 0..=half {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        c[2 * k] = sign * ((ln_mag[k] - peak).exp() / scale);
    }
    Ok(SteadyCoefficients { n, tan_theta, c })
}

impl SteadyCoefficients {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn tan_theta(&self) -> f64 {
        self.tan_theta
    }

    /// Amplitude at excitation number k (m = -N/2 + k).
    pub fn coefficient(&self, k: usize) -> f64 {
        self.c[k]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.c
    }

    pub fn state_vector(&self, basis: &SpinBasis) -> Result<DVector<C64>> {
        if basis.n() != self.n || basis.twice_s() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "coefficients are for N={} in the maximal sector, basis has N={}, 2S={}",
                self.n,
                basis.n(),
                basis.twice_s()
            )));
        }
        Ok(DVector::from_iterator(
            self.c.len(),
            self.c.iter().map(|&v| C64::new(v, 0.0)),
        ))
    }
}

/// Max-norm residual ||D psi|| of the candidate dark state, evaluated with
/// independently built spin operators.
pub fn verify_dark_state(coeffs: &SteadyCoefficients) -> Result<f64> {
    let basis = SpinBasis::new(coeffs.n)?;
    let ops = build_spin_operators(&basis);
    let theta = coeffs.tan_theta.atan();
    let d = build_jump_operator(&ops, theta)?;
    let psi = coeffs.state_vector(&basis)?;
    Ok((d * psi).norm())
}

/// Number of (numerically) zero singular values of the jump operator on the
/// maximal-spin sector.
pub fn kernel_dimension(ops: &SpinOperators, theta: f64) -> Result<usize> {
    let d = build_jump_operator(ops, theta)?;
    let svd = d.svd(false, false);
    let smax = svd
        .singular_values
        .iter()
        .fold(0.0f64, |a, &b| a.max(b))
        .max(f64::MIN_POSITIVE);
    Ok(svd
        .singular_values
        .iter()
        .filter(|&&s| s < 1e-10 * smax)
        .count())
}

/// Steady-state squeezing of the dark state through O(N) ladder sums; no
/// (N+1)-dimensional operators are materialized.
pub fn exact_squeezing(n: u32, tan_theta: f64) -> Result<SqueezingResult> {
    let coeffs = steady_coefficients(n, tan_theta)?;
    let s = n as f64 / 2.0;
    let c = &coeffs.c;

    let m_of = |k: usize| -s + k as f64;
    let mut mean_sz = 0.0;
    let mut symmetric = 0.0; // <S+S- + S-S+>
    for (k, &ck) in c.iter().enumerate() {
        if ck == 0.0 {
            continue;
        }
        let p = ck * ck;
        let m = m_of(k);
        mean_sz += p * m;
        symmetric += p * 2.0 * (s * (s + 1.0) - m * m);
    }
    // ladder amplitude S+|s,m> = a_plus(m) |s,m+1>
    let a_plus = |m: f64| (s * (s + 1.0) - m * (m + 1.0)).sqrt();
    let mut double_raise = 0.0; // <S+^2> = <S-^2> for real amplitudes
    for k in 0..c.len().saturating_sub(2) {
        if c[k] == 0.0 || c[k + 2] == 0.0 {
            continue;
        }
        let m = m_of(k);
        double_raise += c[k + 2] * c[k] * a_plus(m) * a_plus(m + 1.0);
    }
    let var_sx = 0.25 * (symmetric + 2.0 * double_raise);

    if mean_sz.abs() < 1e-12 * n as f64 {
        return Err(Error::UndefinedMeanSpin {
            mean_sz,
            eps: 1e-12 * n as f64,
        });
    }
    Ok(SqueezingResult {
        xi2: n as f64 * var_sx / (mean_sz * mean_sz),
        mean_sz,
        var_sx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{squeezing_parameter, StateRef};
    use approx::assert_relative_eq;

    #[test]
    fn theta_zero_is_fully_polarized() {
        let coeffs = steady_coefficients(6, 0.0).unwrap();
        assert_relative_eq!(coeffs.coefficient(0), 1.0);
        assert!(coeffs.coefficients()[1..].iter().all(|&v| v == 0.0));
        let xi2 = exact_squeezing(6, 0.0).unwrap().xi2;
        assert_relative_eq!(xi2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn amplitude_ratios_for_four_spins() {
        let coeffs = steady_coefficients(4, 0.2).unwrap();
        let c = coeffs.coefficients();
        assert_relative_eq!(c[2] / c[0], -0.2 * 2.0 / 6.0f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(c[4] / c[0], 0.04, epsilon = 1e-14);
        assert_eq!(c[1], 0.0);
        assert_eq!(c[3], 0.0);
        let norm2: f64 = c.iter().map(|v| v * v).sum();
        assert_relative_eq!(norm2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn residual_vanishes_across_sizes_and_angles() {
        for &n in &[2u32, 4, 8, 20, 100, 200] {
            for &t in &[0.1, 0.5, 0.9] {
                let coeffs = steady_coefficients(n, t).unwrap();
                let residual = verify_dark_state(&coeffs).unwrap();
                assert!(residual < 1e-10, "N={n}, tan={t}: residual {residual:.3e}");
            }
        }
    }

    #[test]
    fn coherent_state_is_not_dark() {
        let mut coeffs = steady_coefficients(4, 0.2).unwrap();
        coeffs.c = vec![1.0, 0.0, 0.0, 0.0, 0.0];
        assert!(verify_dark_state(&coeffs).unwrap() > 0.1);
    }

    #[test]
    fn squeezing_sums_match_dense_operators() {
        for &(n, t) in &[(4u32, 0.2), (8, 0.5), (12, 0.9)] {
            let coeffs = steady_coefficients(n, t).unwrap();
            let basis = SpinBasis::new(n).unwrap();
            let ops = build_spin_operators(&basis);
            let psi = coeffs.state_vector(&basis).unwrap();
            let dense = squeezing_parameter(StateRef::Pure(&psi), &ops, n).unwrap();
            let fast = exact_squeezing(n, t).unwrap();
            assert_relative_eq!(fast.xi2, dense.xi2, max_relative = 1e-12);
            assert_relative_eq!(fast.mean_sz, dense.mean_sz, max_relative = 1e-12);
        }
    }

    #[test]
    fn frozen_squeezing_values_at_small_angle() {
        for &(n, expected) in &[
            (4u32, 0.686610),
            (8, 0.674782),
            (20, 0.669611),
            (100, 0.667229),
        ] {
            let xi2 = exact_squeezing(n, 0.2).unwrap().xi2;
            assert_relative_eq!(xi2, expected, max_relative = 1e-6);
        }
    }

    #[test]
    fn squeezing_decreases_with_angle_at_n100() {
        let grid: Vec<f64> = (1..=18).map(|k| k as f64 * 0.05).collect();
        let mut last = f64::INFINITY;
        for &t in &grid {
            let xi2 = exact_squeezing(100, t).unwrap().xi2;
            assert!(xi2 < last, "xi2 not decreasing at tan={t}");
            last = xi2;
        }
    }

    #[test]
    fn kernel_is_one_dimensional_for_even_n() {
        for &n in &[4u32, 8] {
            let basis = SpinBasis::new(n).unwrap();
            let ops = build_spin_operators(&basis);
            assert_eq!(kernel_dimension(&ops, 0.2f64.atan()).unwrap(), 1);
        }
        // odd N: no dark state in the maximal sector
        let basis = SpinBasis::new(5).unwrap();
        let ops = build_spin_operators(&basis);
        assert_eq!(kernel_dimension(&ops, 0.2f64.atan()).unwrap(), 0);
    }

    #[test]
    fn rejections() {
        assert!(matches!(
            steady_coefficients(5, 0.2),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            steady_coefficients(4, 1.0),
            Err(Error::NonNormalizable(_))
        ));
        assert!(steady_coefficients(4, -0.1).is_err());
    }

    #[test]
    fn large_n_stays_finite_in_log_domain() {
        let coeffs = steady_coefficients(2000, 0.9).unwrap();
        assert!(coeffs.coefficients().iter().all(|v| v.is_finite()));
        let norm2: f64 = coeffs.coefficients().iter().map(|v| v * v).sum();
        assert_relative_eq!(norm2, 1.0, epsilon = 1e-10);
        let xi2 = exact_squeezing(2000, 0.9).unwrap().xi2;
        assert!(xi2 > 0.0 && xi2 < 0.1);
    }
}
