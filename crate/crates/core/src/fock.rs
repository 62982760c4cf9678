//! Truncated Fock space for the phonon mode and tensor-product composition.
//!
//! Convention used by every composite-space builder in this crate: spin
//! factor on the left, phonon factor on the right.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

type C64 = Complex64;

#[derive(Clone, Copy, Debug)]
pub struct FockBasis {
    pub n_max: u32,
    /// Mode angular frequency, carried for bookkeeping (the dynamics modules
    /// work in frames where it has already been rotated away).
    pub omega0: f64,
}

impl FockBasis {
    pub fn new(n_max: u32, omega0: f64) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidParameter("n_max must be at least 1".into()));
        }
        Ok(FockBasis { n_max, omega0 })
    }

    pub fn dim(&self) -> usize {
        self.n_max as usize + 1
    }
}

/// <n-1|a|n> = sqrt(n). The commutator [a, a+] deviates from the identity
/// only in the truncation corner (n_max, n_max); physics operators are built
/// from a and a+ directly, so the artifact is confined there.
pub fn build_annihilation(basis: FockBasis) -> DMatrix<C64> {
    let dim = basis.dim();
    DMatrix::from_fn(dim, dim, |r, c| {
        if c == r + 1 {
            C64::new((c as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

pub fn number_operator(basis: FockBasis) -> DMatrix<C64> {
    let a = build_annihilation(basis);
    a.adjoint() * a
}

pub fn fock_state(basis: FockBasis, n: u32) -> Result<DVector<C64>> {
    if n > basis.n_max {
        return Err(Error::InvalidParameter(format!(
            "occupation {n} above truncation {}",
            basis.n_max
        )));
    }
    let mut v = DVector::zeros(basis.dim());
    v[n as usize] = C64::new(1.0, 0.0);
    Ok(v)
}

/// Kronecker product with the fixed convention: spin factor left, phonon
/// factor right.
pub fn tensor_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

pub fn tensor_state(a: &DVector<C64>, b: &DVector<C64>) -> DVector<C64> {
    a.kronecker(b)
}

/// Trace out the right (phonon) factor of a density matrix on a
/// dim_left * dim_right composite space.
pub fn partial_trace_right(rho: &DMatrix<C64>, dim_left: usize, dim_right: usize) -> DMatrix<C64> {
    assert_eq!(rho.nrows(), dim_left * dim_right);
    assert_eq!(rho.ncols(), dim_left * dim_right);
    let mut out = DMatrix::zeros(dim_left, dim_left);
    for i in 0..dim_left {
        for j in 0..dim_left {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..dim_right {
                acc += rho[(i * dim_right + k, j * dim_right + k)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Population of the highest retained Fock state, summed over the spin
/// factor. Runs that see this exceed ~1e-6 need a larger n_max.
pub fn top_state_population(rho: &DMatrix<C64>, dim_left: usize, dim_right: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..dim_left {
        let idx = i * dim_right + (dim_right - 1);
        acc += rho[(idx, idx)].re;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn two_level_annihilation() {
        let basis = FockBasis::new(1, 1.0).unwrap();
        let a = build_annihilation(basis);
        assert_eq!(a[(0, 1)], c(1.0));
        assert_eq!(a[(1, 0)], c(0.0));
    }

    #[test]
    fn number_operator_spectrum_exact() {
        let basis = FockBasis::new(3, 1.0).unwrap();
        let n = number_operator(basis);
        for k in 0..4 {
            assert_eq!(n[(k, k)], c(k as f64));
        }
    }

    #[test]
    fn commutator_deviation_confined_to_truncation_corner() {
        let basis = FockBasis::new(5, 1.0).unwrap();
        let a = build_annihilation(basis);
        let comm = &a * a.adjoint() - a.adjoint() * &a;
        let dim = basis.dim();
        for i in 0..dim {
            for j in 0..dim {
                let expect = if i == j {
                    if i == dim - 1 {
                        // corner artifact: a a+ truncates the |n_max+1> path
                        c(-(basis.n_max as f64))
                    } else {
                        c(1.0)
                    }
                } else {
                    c(0.0)
                };
                assert_relative_eq!(comm[(i, j)].re, expect.re, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn fock_state_bounds() {
        let basis = FockBasis::new(2, 1.0).unwrap();
        assert_eq!(fock_state(basis, 0).unwrap()[0], c(1.0));
        assert_eq!(fock_state(basis, 2).unwrap()[2], c(1.0));
        assert!(fock_state(basis, 3).is_err());
    }

    #[test]
    fn tensor_ordering_convention() {
        // operator on the spin factor commutes with operator on the phonon factor
        let s = DMatrix::from_fn(2, 2, |r, cc| C64::new((r * 2 + cc) as f64, 0.0));
        let p = DMatrix::from_fn(3, 3, |r, cc| C64::new(0.0, (r as f64) - (cc as f64)));
        let id_s = DMatrix::identity(2, 2);
        let id_p = DMatrix::identity(3, 3);
        let left = tensor_product(&s, &id_p) * tensor_product(&id_s, &p);
        let right = tensor_product(&id_s, &p) * tensor_product(&s, &id_p);
        let both = tensor_product(&s, &p);
        assert_eq!(left, right);
        assert_eq!(left, both);
        assert_eq!(left.nrows(), 6);
    }

    #[test]
    fn partial_trace_recovers_spin_factor() {
        let rho_s = DMatrix::from_fn(2, 2, |r, cc| {
            C64::new(0.5 - 0.1 * (r as f64 - cc as f64).abs(), 0.05 * (r as f64 - cc as f64))
        });
        let basis = FockBasis::new(2, 1.0).unwrap();
        let vac = fock_state(basis, 0).unwrap();
        let rho_p = &vac * vac.adjoint();
        let rho = tensor_product(&rho_s, &rho_p);
        let back = partial_trace_right(&rho, 2, 3);
        assert!((back - rho_s).iter().map(|v| v.norm()).fold(0.0, f64::max) < 1e-14);
    }
}
