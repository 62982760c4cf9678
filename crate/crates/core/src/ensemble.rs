//! Full 2^N two-level ensemble: collective operators built from local ones,
//! the collective-decay-plus-local-dephasing model, and sector tools
//! (symmetric-subspace isometry, lowest-weight states of given total spin).
//!
//! Qubit ordering: spin j occupies tensor slot j with slot 0 leftmost, so
//! spin j maps to bit (N-1-j) of the basis index; a set bit is the upper
//! level.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lindblad::LindbladModel;
use crate::sparse::SpMat;

type C64 = Complex64;

const ONE: C64 = C64::new(1.0, 0.0);

/// Largest ensemble the 4^N density matrix can reasonably hold.
pub const ENSEMBLE_N_CAP: u32 = 12;

pub struct EnsembleOps {
    pub n: u32,
    pub s_plus: SpMat,
    pub s_minus: SpMat,
    pub s_z: SpMat,
    pub s_x_squared: SpMat,
    pub s_squared: SpMat,
    /// local sigma_z, one per spin
    pub sigma_z: Vec<SpMat>,
}

pub fn build_ensemble_ops(n: u32) -> Result<EnsembleOps> {
    if n == 0 || n > ENSEMBLE_N_CAP {
        return Err(Error::DimensionCap {
            dim: n as usize,
            cap: ENSEMBLE_N_CAP as usize,
            context: "two-level ensemble",
        });
    }
    let dim = 1usize << n;
    let bit_of = |spin: u32| n - 1 - spin;

    let mut sigma_z = Vec::with_capacity(n as usize);
    for j in 0..n {
        let mask = 1usize << bit_of(j);
        let triplets: Vec<(usize, usize, C64)> = (0..dim)
            .map(|idx| {
                let v = if idx & mask != 0 { 1.0 } else { -1.0 };
                (idx, idx, C64::new(v, 0.0))
            })
            .collect();
        sigma_z.push(SpMat::from_triplets(dim, dim, triplets));
    }

    let mut minus_triplets = Vec::with_capacity(dim * n as usize / 2);
    let mut sz_diag = vec![0.0; dim];
    for idx in 0..dim {
        let ups = (idx as u64).count_ones() as f64;
        sz_diag[idx] = ups - n as f64 / 2.0;
        for j in 0..n {
            let mask = 1usize << bit_of(j);
            if idx & mask != 0 {
                // lower spin j: |...1...> -> |...0...>
                minus_triplets.push((idx & !mask, idx, ONE));
            }
        }
    }
    let s_minus = SpMat::from_triplets(dim, dim, minus_triplets);
    let s_plus = s_minus.adjoint();
    let s_z = SpMat::from_triplets(
        dim,
        dim,
        sz_diag
            .iter()
            .enumerate()
            .map(|(i, &v)| (i, i, C64::new(v, 0.0)))
            .collect(),
    );

    let s_x = s_plus.add(&s_minus).scaled(C64::new(0.5, 0.0));
    let s_x_squared = s_x.matmul(&s_x);
    // S^2 = S+S- + Sz^2 - Sz
    let s_squared = s_plus
        .matmul(&s_minus)
        .add(&s_z.matmul(&s_z))
        .add(&s_z.scaled(C64::new(-1.0, 0.0)));

    Ok(EnsembleOps {
        n,
        s_plus,
        s_minus,
        s_z,
        s_x_squared,
        s_squared,
        sigma_z,
    })
}

/// Collective jump on the full 2^N space:
/// D = cos(theta) S- + sin(theta) S+.
pub fn ensemble_jump_operator(ops: &EnsembleOps, theta: f64) -> Result<SpMat> {
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta) {
        return Err(Error::InvalidParameter(format!(
            "mixing angle must lie in [0, pi/2), got {theta}"
        )));
    }
    Ok(ops
        .s_minus
        .scaled(C64::new(theta.cos(), 0.0))
        .add(&ops.s_plus.scaled(C64::new(theta.sin(), 0.0))))
}

/// Collective decay at rate gamma plus local sigma_z dephasing at rate
/// big_gamma on every spin; no Hamiltonian.
pub fn build_dephasing_model(
    n: u32,
    theta: f64,
    gamma: f64,
    big_gamma: f64,
) -> Result<LindbladModel> {
    if gamma < 0.0 || big_gamma < 0.0 {
        return Err(Error::InvalidParameter(
            "rates must be nonnegative".into(),
        ));
    }
    let ops = build_ensemble_ops(n)?;
    let d = ensemble_jump_operator(&ops, theta)?;
    let mut jumps = vec![(d, gamma)];
    if big_gamma > 0.0 {
        for sz in &ops.sigma_z {
            jumps.push((sz.clone(), big_gamma));
        }
    }
    LindbladModel::new_static(None, jumps)
}

pub fn ensemble_observables(ops: &EnsembleOps) -> Vec<(String, SpMat)> {
    vec![
        ("Sz".into(), ops.s_z.clone()),
        ("Sx2".into(), ops.s_x_squared.clone()),
        ("S2".into(), ops.s_squared.clone()),
    ]
}

pub fn total_spin_expectation(rho: &DMatrix<C64>, ops: &EnsembleOps) -> f64 {
    ops.s_squared.expectation(rho).re
}

/// Isometry V from the (N+1)-dimensional maximal-spin sector into the 2^N
/// space: column k spreads excitation number k uniformly over all
/// popcount-k bitstrings.
pub fn symmetric_embedding(n: u32) -> Result<SpMat> {
    if n == 0 || n > ENSEMBLE_N_CAP {
        return Err(Error::DimensionCap {
            dim: n as usize,
            cap: ENSEMBLE_N_CAP as usize,
            context: "two-level ensemble",
        });
    }
    let dim = 1usize << n;
    let mut counts = vec![0usize; n as usize + 1];
    for idx in 0..dim {
        counts[(idx as u64).count_ones() as usize] += 1;
    }
    let mut triplets = Vec::with_capacity(dim);
    for idx in 0..dim {
        let k = (idx as u64).count_ones() as usize;
        triplets.push((idx, k, C64::new(1.0 / (counts[k] as f64).sqrt(), 0.0)));
    }
    Ok(SpMat::from_triplets(dim, n as usize + 1, triplets))
}

/// Lowest-weight state |S, m=-S> for total spin 2S = twice_s, embedded in
/// the 2^N space. Sectors with multiplicity admit many such states; the
/// returned representative is the normalized projection of the first basis
/// vector of the matching excitation block onto the S^2 eigenspace, which is
/// basis-independent and deterministic.
pub fn sector_ground_state(ops: &EnsembleOps, twice_s: u32) -> Result<DVector<C64>> {
    let n = ops.n;
    if twice_s > n || (n - twice_s) % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "total spin 2S={twice_s} unreachable for N={n}"
        )));
    }
    let k = ((n - twice_s) / 2) as usize;
    let dim = 1usize << n;
    let indices: Vec<usize> = (0..dim)
        .filter(|&idx| (idx as u64).count_ones() as usize == k)
        .collect();
    let block_dim = indices.len();
    let pos: HashMap<usize, usize> = indices.iter().enumerate().map(|(p, &i)| (i, p)).collect();

    // restrict S^2 to the fixed-excitation block (Sz commutes with S^2)
    let mut block = DMatrix::<C64>::zeros(block_dim, block_dim);
    for (r, c, v) in ops.s_squared.iter() {
        if let (Some(&pr), Some(&pc)) = (pos.get(&r), pos.get(&c)) {
            block[(pr, pc)] = v;
        }
    }
    let s = twice_s as f64 / 2.0;
    let target = s * (s + 1.0);
    let eig = nalgebra::SymmetricEigen::new(block);

    // projector onto the target eigenspace
    let mut members = Vec::new();
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if (lambda - target).abs() < 1e-6 * target.max(1.0) {
            members.push(i);
        }
    }
    if members.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no S(S+1)={target} eigenvalue in the excitation-{k} block"
        )));
    }
    let mut rep = DVector::<C64>::zeros(block_dim);
    for probe in 0..block_dim {
        // project the probe basis vector onto the eigenspace
        let mut projected = DVector::<C64>::zeros(block_dim);
        for &i in &members {
            let v = eig.eigenvectors.column(i);
            let overlap = v[probe].conj();
            projected.axpy(overlap, &v, ONE);
        }
        if projected.norm() > 1e-6 {
            rep = projected;
            break;
        }
    }
    let norm = rep.norm();
    if norm < 1e-6 {
        return Err(Error::InvalidParameter(
            "failed to extract a sector representative".into(),
        ));
    }
    rep /= C64::new(norm, 0.0);
    // deterministic sign: first significant amplitude positive real
    if let Some(first) = rep.iter().find(|v| v.norm() > 1e-8) {
        let phase = first / C64::new(first.norm(), 0.0);
        rep /= phase;
    }

    let mut full = DVector::<C64>::zeros(dim);
    for (p, &idx) in indices.iter().enumerate() {
        full[idx] = rep[p];
    }
    Ok(full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{build_jump_operator, build_spin_operators, SpinBasis};
    use approx::assert_relative_eq;

    #[test]
    fn two_spin_total_spin_spectrum() {
        let ops = build_ensemble_ops(2).unwrap();
        let dense = ops.s_squared.to_dense();
        let mut eigs: Vec<f64> = dense.symmetric_eigenvalues().iter().copied().collect();
        eigs.sort_by(f64::total_cmp);
        let expected = [0.0, 2.0, 2.0, 2.0];
        for (a, b) in eigs.iter().zip(expected) {
            assert_relative_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn three_spin_sz_spectrum() {
        let ops = build_ensemble_ops(3).unwrap();
        let mut diag: Vec<f64> = (0..8)
            .map(|i| ops.s_z.to_dense()[(i, i)].re)
            .collect();
        diag.sort_by(f64::total_cmp);
        assert_relative_eq!(diag[0], -1.5);
        assert_relative_eq!(diag[7], 1.5);
        assert_eq!(diag.iter().filter(|&&v| (v + 0.5).abs() < 1e-12).count(), 3);
        assert_eq!(diag.iter().filter(|&&v| (v - 0.5).abs() < 1e-12).count(), 3);
    }

    #[test]
    fn collective_equals_sum_of_local() {
        let ops = build_ensemble_ops(4).unwrap();
        let mut sum = SpMat::zeros(16, 16);
        for sz in &ops.sigma_z {
            sum = sum.add(sz);
        }
        let diff = sum.add(&ops.s_z.scaled(C64::new(-2.0, 0.0)));
        assert!(diff.max_abs() < 1e-13);
    }

    #[test]
    fn total_spin_commutes_with_collective_jump() {
        let ops = build_ensemble_ops(6).unwrap();
        let d = ensemble_jump_operator(&ops, 0.3).unwrap();
        let comm = ops
            .s_squared
            .matmul(&d)
            .add(&d.matmul(&ops.s_squared).scaled(C64::new(-1.0, 0.0)));
        assert!(comm.max_abs() < 1e-10);
    }

    #[test]
    fn embedding_is_isometric_and_conjugates_jump() {
        let n = 6;
        let v = symmetric_embedding(n).unwrap();
        let vtv = v.adjoint().matmul(&v).to_dense();
        let id = DMatrix::<C64>::identity(7, 7);
        assert!((vtv - id).iter().all(|x| x.norm() < 1e-12));

        let theta = 0.35;
        let ops_full = build_ensemble_ops(n).unwrap();
        let d_full = ensemble_jump_operator(&ops_full, theta).unwrap();
        let restricted = v.adjoint().matmul(&d_full).matmul(&v).to_dense();

        let basis = SpinBasis::new(n).unwrap();
        let sector_ops = build_spin_operators(&basis);
        let d_sector = build_jump_operator(&sector_ops, theta).unwrap();
        assert!((restricted - d_sector).iter().all(|x| x.norm() < 1e-12));
    }

    #[test]
    fn singlet_state_of_two_spins() {
        let ops = build_ensemble_ops(2).unwrap();
        let v = sector_ground_state(&ops, 0).unwrap();
        // (|01> - |10>)/sqrt(2) up to overall sign
        let s2v = ops.s_squared.mul_vec(&v);
        assert!(s2v.norm() < 1e-10);
        assert_relative_eq!(v.norm(), 1.0, epsilon = 1e-12);
        assert!((v[1].re.abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-10);
        assert!((v[1] + v[2]).norm() < 1e-10);
    }

    #[test]
    fn sector_states_have_expected_quantum_numbers() {
        let ops = build_ensemble_ops(4).unwrap();
        for &twice_s in &[4u32, 2, 0] {
            let v = sector_ground_state(&ops, twice_s).unwrap();
            let s = twice_s as f64 / 2.0;
            let s2 = v.dotc(&ops.s_squared.mul_vec(&v)).re;
            assert_relative_eq!(s2, s * (s + 1.0), epsilon = 1e-9);
            let sz = v.dotc(&ops.s_z.mul_vec(&v)).re;
            assert_relative_eq!(sz, -s, epsilon = 1e-9);
            // lowest weight: S- annihilates it
            assert!(ops.s_minus.mul_vec(&v).norm() < 1e-9);
        }
    }

    #[test]
    fn sector_state_is_deterministic() {
        let ops = build_ensemble_ops(6).unwrap();
        let a = sector_ground_state(&ops, 2).unwrap();
        let b = sector_ground_state(&ops, 2).unwrap();
        assert!((a - b).norm() < 1e-13);
    }

    #[test]
    fn maximally_mixed_two_spins_average_total_spin() {
        let rho = DMatrix::<C64>::identity(4, 4) * C64::new(0.25, 0.0);
        let ops = build_ensemble_ops(2).unwrap();
        assert_relative_eq!(total_spin_expectation(&rho, &ops), 1.5, epsilon = 1e-12);
    }

    #[test]
    fn guard_rejects_oversized_ensembles() {
        assert!(matches!(
            build_ensemble_ops(13),
            Err(Error::DimensionCap { .. })
        ));
        assert!(build_ensemble_ops(0).is_err());
        let ops = build_ensemble_ops(3).unwrap();
        assert!(sector_ground_state(&ops, 2).is_err()); // parity mismatch
        assert!(sector_ground_state(&ops, 5).is_err());
    }
}
