//! Collective spin operators, Dicke states and the squeezing metric in one
//! (2S+1)-dimensional total-spin sector.
//!
//! Basis ordering is fixed everywhere in this crate: |S, m> with m ascending
//! from -S to +S, so index i holds m = -S + i.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

type C64 = Complex64;

/// One total-spin sector for N particles. S is stored doubled so that
/// half-integer spins stay exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpinBasis {
    n: u32,
    twice_s: u32,
}

impl SpinBasis {
    /// Maximal sector S = N/2.
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("particle count must be positive".into()));
        }
        Ok(SpinBasis { n, twice_s: n })
    }

    /// Sub-maximal sector. 2S must not exceed N and must have the parity of N
    /// (otherwise no such sector exists for N spin-1/2 particles).
    pub fn with_total_spin(n: u32, twice_s: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("particle count must be positive".into()));
        }
        if twice_s > n || (n - twice_s) % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "no sector with 2S = {twice_s} for N = {n}"
            )));
        }
        Ok(SpinBasis { n, twice_s })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn twice_s(&self) -> u32 {
        self.twice_s
    }

    pub fn s(&self) -> f64 {
        self.twice_s as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.twice_s as usize + 1
    }

    /// m value at basis index i, doubled (exact).
    pub fn twice_m(&self, index: usize) -> i64 {
        2 * index as i64 - self.twice_s as i64
    }
}

#[derive(Clone, Debug)]
pub struct SpinOperators {
    pub basis: SpinBasis,
    pub s_plus: DMatrix<C64>,
    pub s_minus: DMatrix<C64>,
    pub s_z: DMatrix<C64>,
}

impl SpinOperators {
    pub fn s_x(&self) -> DMatrix<C64> {
        (&self.s_plus + &self.s_minus) * C64::new(0.5, 0.0)
    }

    pub fn s_x_squared(&self) -> DMatrix<C64> {
        let sx = self.s_x();
        &sx * &sx
    }

    /// S^2 = S+S- + Sz^2 - Sz; constant S(S+1) on the sector, kept as a
    /// matrix for trajectory conservation checks.
    pub fn s_squared(&self) -> DMatrix<C64> {
        &self.s_plus * &self.s_minus + &self.s_z * &self.s_z - &self.s_z
    }
}

/// Ladder and z operators with <S,m+1|S+|S,m> = sqrt(S(S+1) - m(m+1)).
pub fn build_spin_operators(basis: SpinBasis) -> SpinOperators {
    let dim = basis.dim();
    let s = basis.s();
    let mut s_plus = DMatrix::zeros(dim, dim);
    let mut s_z = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let m = basis.twice_m(i) as f64 / 2.0;
        s_z[(i, i)] = C64::new(m, 0.0);
        if i + 1 < dim {
            let amp = (s * (s + 1.0) - m * (m + 1.0)).sqrt();
            s_plus[(i + 1, i)] = C64::new(amp, 0.0);
        }
    }
    let s_minus = s_plus.adjoint();
    SpinOperators {
        basis,
        s_plus,
        s_minus,
        s_z,
    }
}

/// Collective jump operator D- = sin(theta) S+ + cos(theta) S-.
///
/// theta is the Raman mixing angle in radians, 0 <= theta < pi/2.
pub fn build_jump_operator(ops: &SpinOperators, theta: f64) -> Result<DMatrix<C64>> {
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta) {
        return Err(Error::InvalidParameter(format!(
            "mixing angle {theta} outside [0, pi/2)"
        )));
    }
    let (sin_t, cos_t) = (theta.sin(), theta.cos());
    Ok(&ops.s_plus * C64::new(sin_t, 0.0) + &ops.s_minus * C64::new(cos_t, 0.0))
}

/// Mixing angle from tan(theta); rejects the non-normalizable regime.
pub fn theta_from_tan(tan_theta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&tan_theta) {
        return Err(Error::NonNormalizable(tan_theta));
    }
    Ok(tan_theta.atan())
}

/// Basis state |S, m>, m passed doubled so half-integer sectors stay exact.
pub fn dicke_state(basis: SpinBasis, twice_m: i64) -> Result<DVector<C64>> {
    let ts = basis.twice_s() as i64;
    if twice_m < -ts || twice_m > ts || (twice_m + ts) % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "m = {}/2 outside sector with 2S = {ts}",
            twice_m
        )));
    }
    let index = ((twice_m + ts) / 2) as usize;
    let mut v = DVector::zeros(basis.dim());
    v[index] = C64::new(1.0, 0.0);
    Ok(v)
}

/// State handle accepted by expectation-value helpers: a normalized vector or
/// a density matrix.
#[derive(Clone, Copy)]
pub enum StateRef<'a> {
    Pure(&'a DVector<C64>),
    Mixed(&'a DMatrix<C64>),
}

pub fn expectation(op: &DMatrix<C64>, state: StateRef) -> C64 {
    match state {
        StateRef::Pure(psi) => psi.dotc(&(op * psi)),
        StateRef::Mixed(rho) => (op * rho).trace(),
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SqueezingResult {
    pub xi2: f64,
    pub mean_sz: f64,
    pub var_sx: f64,
}

/// Squeezing parameter xi^2 = N <Sx^2> / <Sz>^2 for a state whose mean spin
/// points along z (the only geometry produced by these dynamics).
///
/// Fails with an "undefined mean-spin direction" error when |<Sz>| drops
/// below eps; `squeezing_parameter` uses the default eps = 1e-9 * N.
pub fn squeezing_parameter_with_eps(
    state: StateRef,
    ops: &SpinOperators,
    n: u32,
    eps: f64,
) -> Result<SqueezingResult> {
    let mean_sz = expectation(&ops.s_z, state).re;
    let var_sx = expectation(&ops.s_x_squared(), state).re;
    if mean_sz.abs() < eps {
        return Err(Error::UndefinedMeanSpin {
            mean_sz: mean_sz.abs(),
            eps,
        });
    }
    Ok(SqueezingResult {
        xi2: n as f64 * var_sx / (mean_sz * mean_sz),
        mean_sz,
        var_sx,
    })
}

pub fn squeezing_parameter(state: StateRef, ops: &SpinOperators, n: u32) -> Result<SqueezingResult> {
    squeezing_parameter_with_eps(state, ops, n, 1e-9 * n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn max_abs(m: &DMatrix<C64>) -> f64 {
        m.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn single_spin_half_ladder() {
        let basis = SpinBasis::new(1).unwrap();
        let ops = build_spin_operators(basis);
        // ordering (m=-1/2, m=+1/2): S+ has the single entry <+1/2|S+|-1/2> = 1
        assert_eq!(ops.s_plus[(1, 0)], C64::new(1.0, 0.0));
        assert_eq!(ops.s_plus[(0, 1)], C64::new(0.0, 0.0));
        assert_eq!(ops.s_z[(0, 0)].re, -0.5);
    }

    #[test]
    fn spin_one_ladder_coefficients() {
        let basis = SpinBasis::new(2).unwrap();
        let ops = build_spin_operators(basis);
        let r2 = 2.0_f64.sqrt();
        assert_relative_eq!(ops.s_plus[(1, 0)].re, r2, max_relative = 1e-15);
        assert_relative_eq!(ops.s_plus[(2, 1)].re, r2, max_relative = 1e-15);
    }

    #[test]
    fn commutators_hold_up_to_s_60() {
        for twice_s in [1u32, 2, 3, 7, 40, 120] {
            let basis = SpinBasis::with_total_spin(twice_s, twice_s).unwrap();
            let ops = build_spin_operators(basis);
            let comm_pm = &ops.s_plus * &ops.s_minus - &ops.s_minus * &ops.s_plus;
            let two_sz = &ops.s_z * C64::new(2.0, 0.0);
            assert!(max_abs(&(comm_pm - two_sz)) < 1e-10, "2S = {twice_s}");
            let comm_zp = &ops.s_z * &ops.s_plus - &ops.s_plus * &ops.s_z;
            assert!(max_abs(&(comm_zp - ops.s_plus.clone())) < 1e-10);
            let comm_zm = &ops.s_z * &ops.s_minus - &ops.s_minus * &ops.s_z;
            assert!(max_abs(&(comm_zm + ops.s_minus.clone())) < 1e-10);
        }
    }

    #[test]
    fn jump_operator_limits() {
        let ops = build_spin_operators(SpinBasis::new(4).unwrap());
        let d0 = build_jump_operator(&ops, 0.0).unwrap();
        assert_eq!(max_abs(&(d0 - ops.s_minus.clone())), 0.0);

        let d45 = build_jump_operator(&ops, std::f64::consts::FRAC_PI_4).unwrap();
        let sx_sqrt2 = ops.s_x() * C64::new(2.0_f64.sqrt(), 0.0);
        assert!(max_abs(&(d45 - sx_sqrt2)) < 1e-15);

        assert!(build_jump_operator(&ops, std::f64::consts::FRAC_PI_2).is_err());
    }

    #[test]
    fn jump_gram_positive_semidefinite() {
        let ops = build_spin_operators(SpinBasis::new(6).unwrap());
        for theta in [0.0, 0.3, 0.7, 1.2] {
            let d = build_jump_operator(&ops, theta).unwrap();
            let gram = d.adjoint() * &d;
            assert!(max_abs(&(gram.clone() - gram.adjoint())) < 1e-12);
            let eig = nalgebra::SymmetricEigen::new(gram);
            assert!(eig.eigenvalues.iter().all(|&l| l > -1e-10));
        }
    }

    #[test]
    fn dicke_state_placement_and_range() {
        let basis = SpinBasis::new(4).unwrap(); // S = 2
        let lowest = dicke_state(basis, -4).unwrap();
        assert_eq!(lowest[0], C64::new(1.0, 0.0));
        assert_relative_eq!(lowest.norm(), 1.0);
        let mid = dicke_state(basis, 0).unwrap();
        assert_eq!(mid[2], C64::new(1.0, 0.0));
        assert!(dicke_state(basis, 6).is_err());
        assert!(dicke_state(basis, 1).is_err()); // wrong parity for integer S
    }

    #[test]
    fn coherent_state_sits_at_standard_quantum_limit() {
        for n in [2u32, 4, 9, 20] {
            let basis = SpinBasis::new(n).unwrap();
            let ops = build_spin_operators(basis);
            let psi = dicke_state(basis, -(n as i64)).unwrap();
            let result = squeezing_parameter(StateRef::Pure(&psi), &ops, n).unwrap();
            assert_relative_eq!(result.xi2, 1.0, epsilon = 1e-12);
            assert_relative_eq!(result.mean_sz, -(n as f64) / 2.0, max_relative = 1e-12);
            assert_relative_eq!(result.var_sx, n as f64 / 4.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn undefined_mean_spin_is_signaled() {
        let basis = SpinBasis::new(2).unwrap();
        let ops = build_spin_operators(basis);
        let psi = dicke_state(basis, 0).unwrap(); // <Sz> = 0
        match squeezing_parameter(StateRef::Pure(&psi), &ops, 2) {
            Err(Error::UndefinedMeanSpin { .. }) => {}
            other => panic!("expected undefined mean spin, got {other:?}"),
        }
    }
}
