//! Four-level SiV centers coupled to the phonon mode, before adiabatic
//! elimination: interaction-picture Hamiltonian with harmonic time
//! dependence at frequencies {0, +-Delta, +-2 omega_B}, phonon damping, and
//! the machinery to compare against the eliminated spin (x) phonon model.
//!
//! Level order: index 0,1 = lower orbital branch (spin down/up), index
//! 2,3 = upper branch (spin down/up). The {0,1} pair carries the pseudo-spin
//! that gets squeezed.
//!
//! Two state spaces are provided: the full 4^N product space (small N), and
//! the permutation-symmetric occupation space of dimension C(N+3, 3), exact
//! for symmetric initial states and far cheaper; their equivalence is
//! tested at N=2.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{build_annihilation, number_operator, FockBasis};
use crate::lindblad::{evolve, EvolveOptions, LindbladModel, Trajectory};
use crate::sparse::SpMat;

type C64 = Complex64;
type Mat = DMatrix<C64>;

const ONE: C64 = C64::new(1.0, 0.0);

/// Hard cap on the product-space dimension 4^N (n_max+1).
pub const PRODUCT_DIM_CAP: usize = 4096;

#[derive(Clone, Copy, Debug)]
pub struct SiVParams {
    /// orbital splitting (angular frequency)
    pub omega: f64,
    /// Zeeman splitting
    pub omega_b: f64,
    /// drive amplitude on the lower-branch spin-up leg
    pub rabi1: f64,
    /// drive amplitude on the spin-down leg
    pub rabi2: f64,
    /// two-photon detuning
    pub delta: f64,
    /// single-center strain coupling
    pub g: f64,
}

impl SiVParams {
    pub fn new(
        omega: f64,
        omega_b: f64,
        rabi1: f64,
        rabi2: f64,
        delta: f64,
        g: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("omega", omega),
            ("omega_b", omega_b),
            ("rabi2", rabi2),
            ("delta", delta),
            ("g", g),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if rabi1 < 0.0 || !rabi1.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "rabi1 must be nonnegative, got {rabi1}"
            )));
        }
        let p = SiVParams {
            omega,
            omega_b,
            rabi1,
            rabi2,
            delta,
            g,
        };
        let slow = g.max(p.omega_total());
        if delta < 5.0 * slow || omega_b < 5.0 * slow {
            log::warn!(
                "scale hierarchy is weak: delta={delta:.3e}, omega_b={omega_b:.3e} \
                 vs g={g:.3e}, total drive={:.3e}; the eliminated model degrades",
                p.omega_total()
            );
        }
        Ok(p)
    }

    pub fn omega_total(&self) -> f64 {
        self.rabi1.hypot(self.rabi2)
    }

    pub fn tan_theta(&self) -> f64 {
        self.rabi1 / self.rabi2
    }

    pub fn theta(&self) -> f64 {
        self.tan_theta().atan()
    }

    /// Drive frequencies fixed by the common two-photon detuning:
    /// omega_1 = omega + omega_B - Delta, omega_2 = omega - omega_B - Delta.
    pub fn drive_frequencies(&self) -> (f64, f64) {
        (
            self.omega + self.omega_b - self.delta,
            self.omega - self.omega_b - self.delta,
        )
    }

    /// Effective spin-phonon coupling g Omega / Delta.
    pub fn coupling(&self) -> f64 {
        self.g * self.omega_total() / self.delta
    }
}

pub struct SingleSivOps {
    pub j_minus: Mat,
    pub j_plus: Mat,
    pub sigma_minus: Mat,
    pub sigma_plus: Mat,
    pub sigma_z: Mat,
}

fn proj4(bra: usize, ket: usize) -> Mat {
    let mut m = Mat::zeros(4, 4);
    m[(bra, ket)] = ONE;
    m
}

/// The orbital-conserving lowering operator, the pseudo-spin ladder, and
/// sigma_z on one four-level center.
pub fn build_single_siv_ops() -> SingleSivOps {
    let j_minus = proj4(0, 2) + proj4(1, 3);
    let sigma_minus = proj4(0, 1);
    SingleSivOps {
        j_plus: j_minus.adjoint(),
        sigma_plus: sigma_minus.adjoint(),
        sigma_z: proj4(1, 1) - proj4(0, 0),
        j_minus,
        sigma_minus,
    }
}

/// Single-center level Hamiltonian diag(0, omega_B, omega, omega + omega_B).
pub fn level_hamiltonian(omega: f64, omega_b: f64) -> Mat {
    Mat::from_diagonal(&DVector::from_vec(vec![
        C64::new(0.0, 0.0),
        C64::new(omega_b, 0.0),
        C64::new(omega, 0.0),
        C64::new(omega + omega_b, 0.0),
    ]))
}

pub fn product_space_dim(n: u32, n_max: u32) -> usize {
    4usize.pow(n) * (n_max as usize + 1)
}

/// sum_j I (x)..(x) m (x)..(x) I over n four-level slots (slot 0 leftmost).
fn site_sum(n: u32, m: &SpMat) -> SpMat {
    let dim = 4usize.pow(n);
    let mut total = SpMat::zeros(dim, dim);
    for j in 0..n {
        let left = SpMat::identity(4usize.pow(j));
        let right = SpMat::identity(4usize.pow(n - 1 - j));
        total = total.add(&left.kron(m).kron(&right));
    }
    total
}

fn interaction_terms(
    params: &SiVParams,
    spin_part: &dyn Fn(&Mat) -> SpMat,
    a_dag: &SpMat,
    include_fast: bool,
) -> Vec<(SpMat, f64)> {
    let ops = build_single_siv_ops();
    let g = params.g;
    let delta = params.delta;
    let mut terms = Vec::new();
    if include_fast {
        terms.push((
            spin_part(&ops.j_minus).kron(a_dag).scaled(C64::new(g, 0.0)),
            -delta,
        ));
        terms.push((
            spin_part(&proj4(3, 2))
                .kron(a_dag)
                .scaled(C64::new(g * params.rabi1 / delta, 0.0)),
            2.0 * params.omega_b,
        ));
        terms.push((
            spin_part(&proj4(2, 3))
                .kron(a_dag)
                .scaled(C64::new(g * params.rabi2 / delta, 0.0)),
            -2.0 * params.omega_b,
        ));
    }
    let static_op = &ops.sigma_minus * C64::new(params.rabi2, 0.0)
        + &ops.sigma_plus * C64::new(params.rabi1, 0.0);
    terms.push((
        spin_part(&static_op)
            .kron(a_dag)
            .scaled(C64::new(-g / delta, 0.0)),
        0.0,
    ));
    terms
}

/// Harmonic Hamiltonian terms of the interaction-picture model on the full
/// 4^N (x) Fock space; each (op, freq) pair enters as op e^{i freq t} + h.c.
pub fn build_interaction_hamiltonian(
    params: &SiVParams,
    n: u32,
    n_max: u32,
) -> Result<Vec<(SpMat, f64)>> {
    build_product_terms(params, n, n_max, true)
}

fn build_product_terms(
    params: &SiVParams,
    n: u32,
    n_max: u32,
    include_fast: bool,
) -> Result<Vec<(SpMat, f64)>> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one center".into()));
    }
    let dim = product_space_dim(n, n_max);
    if dim > PRODUCT_DIM_CAP {
        return Err(Error::DimensionCap {
            dim,
            cap: PRODUCT_DIM_CAP,
            context: "four-level product space",
        });
    }
    let fock = FockBasis::new(n_max, 1.0)?;
    let a_dag = build_annihilation(&fock).adjoint();
    let spin_part =
        |m: &Mat| -> SpMat { site_sum(n, &SpMat::from_dense(m, 0.0)) };
    Ok(interaction_terms(params, &spin_part, &a_dag, include_fast))
}

/// Interaction-picture model on the product space with phonon loss.
pub fn build_interaction_model(
    params: &SiVParams,
    n: u32,
    kappa: f64,
    n_max: u32,
    include_fast: bool,
) -> Result<LindbladModel> {
    if kappa <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "kappa must be positive, got {kappa}"
        )));
    }
    let terms = build_product_terms(params, n, n_max, include_fast)?;
    let fock = FockBasis::new(n_max, 1.0)?;
    let loss = SpMat::identity(4usize.pow(n)).kron(&build_annihilation(&fock));
    LindbladModel::new_harmonic(terms, vec![(loss, kappa)])
}

/// Pseudo-spin and diagnostic observables on the product space.
pub fn product_observables(n: u32, n_max: u32) -> Result<Vec<(String, SpMat)>> {
    let dim = product_space_dim(n, n_max);
    if dim > PRODUCT_DIM_CAP {
        return Err(Error::DimensionCap {
            dim,
            cap: PRODUCT_DIM_CAP,
            context: "four-level product space",
        });
    }
    let fock = FockBasis::new(n_max, 1.0)?;
    let id_f = SpMat::identity(fock.dim());
    let ops = build_single_siv_ops();
    let half = C64::new(0.5, 0.0);

    let sz = site_sum(n, &SpMat::from_dense(&ops.sigma_z, 0.0)).scaled(half);
    let s_minus = site_sum(n, &SpMat::from_dense(&ops.sigma_minus, 0.0));
    let sx = s_minus.add(&s_minus.adjoint()).scaled(half);
    let sx2 = sx.matmul(&sx);
    let excited = site_sum(n, &SpMat::from_dense(&(proj4(2, 2) + proj4(3, 3)), 0.0));

    let idx = fock.dim() - 1;
    let top = SpMat::from_triplets(fock.dim(), fock.dim(), vec![(idx, idx, ONE)]);
    Ok(vec![
        ("Sz".into(), sz.kron(&id_f)),
        ("Sx".into(), sx.kron(&id_f)),
        ("Sx2".into(), sx2.kron(&id_f)),
        ("P_excited".into(), excited.kron(&id_f)),
        ("n_phonon".into(), SpMat::identity(4usize.pow(n)).kron(&number_operator(&fock))),
        ("p_top".into(), SpMat::identity(4usize.pow(n)).kron(&top)),
    ])
}

/// All centers in the lowest level, phonon vacuum, on the product space.
pub fn product_ground_state(n: u32, n_max: u32) -> DVector<C64> {
    let dim = product_space_dim(n, n_max);
    let mut psi = DVector::zeros(dim);
    psi[0] = ONE;
    psi
}

/// Permutation-symmetric occupation space: states |n1 n2 n3 n4> with
/// n1+n2+n3+n4 = N, dimension C(N+3, 3).
pub struct SymmetricSivSpace {
    pub n: u32,
    occs: Vec<[u8; 4]>,
    index: HashMap<[u8; 4], usize>,
}

pub fn symmetric_siv_space(n: u32) -> Result<SymmetricSivSpace> {
    if n == 0 || n > 120 {
        return Err(Error::InvalidParameter(format!(
            "occupation space supports 1..=120 centers, got {n}"
        )));
    }
    let mut occs = Vec::new();
    for n1 in 0..=n {
        for n2 in 0..=(n - n1) {
            for n3 in 0..=(n - n1 - n2) {
                let n4 = n - n1 - n2 - n3;
                occs.push([n1 as u8, n2 as u8, n3 as u8, n4 as u8]);
            }
        }
    }
    let index = occs
        .iter()
        .enumerate()
        .map(|(i, &o)| (o, i))
        .collect();
    Ok(SymmetricSivSpace { n, occs, index })
}

impl SymmetricSivSpace {
    pub fn dim(&self) -> usize {
        self.occs.len()
    }

    pub fn occupations(&self, idx: usize) -> [u8; 4] {
        self.occs[idx]
    }

    pub fn index_of(&self, occ: [u8; 4]) -> Option<usize> {
        self.index.get(&occ).copied()
    }

    /// Collective transfer operator T_ik = sum_j |i><k|_j on the symmetric
    /// space: matrix element sqrt((n_i + 1) n_k) toward the state with one
    /// center moved from level k to level i. T_ii counts occupation.
    pub fn transfer(&self, to: usize, from: usize) -> SpMat {
        let dim = self.dim();
        let mut triplets = Vec::new();
        if to == from {
            for (idx, occ) in self.occs.iter().enumerate() {
                let v = occ[to] as f64;
                if v != 0.0 {
                    triplets.push((idx, idx, C64::new(v, 0.0)));
                }
            }
        } else {
            for (idx, occ) in self.occs.iter().enumerate() {
                if occ[from] == 0 {
                    continue;
                }
                let mut dst = *occ;
                dst[from] -= 1;
                dst[to] += 1;
                let target = self.index[&dst];
                let amp = ((occ[to] as f64 + 1.0) * occ[from] as f64).sqrt();
                triplets.push((target, idx, C64::new(amp, 0.0)));
            }
        }
        SpMat::from_triplets(dim, dim, triplets)
    }
}

pub struct SymmetricSivModel {
    pub model: LindbladModel,
    pub space: SymmetricSivSpace,
    pub fock_dim: usize,
}

/// Interaction-picture model restricted to the permutation-symmetric
/// subspace, with phonon loss. Exact for symmetric initial states.
pub fn build_symmetric_model(
    params: &SiVParams,
    n: u32,
    kappa: f64,
    n_max: u32,
    include_fast: bool,
) -> Result<SymmetricSivModel> {
    if kappa <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "kappa must be positive, got {kappa}"
        )));
    }
    let space = symmetric_siv_space(n)?;
    let fock = FockBasis::new(n_max, 1.0)?;
    let a = build_annihilation(&fock);
    let a_dag = a.adjoint();
    let g = params.g;
    let delta = params.delta;

    let mut terms = Vec::new();
    if include_fast {
        let j_minus = space.transfer(0, 2).add(&space.transfer(1, 3));
        terms.push((j_minus.kron(&a_dag).scaled(C64::new(g, 0.0)), -delta));
        terms.push((
            space
                .transfer(3, 2)
                .kron(&a_dag)
                .scaled(C64::new(g * params.rabi1 / delta, 0.0)),
            2.0 * params.omega_b,
        ));
        terms.push((
            space
                .transfer(2, 3)
                .kron(&a_dag)
                .scaled(C64::new(g * params.rabi2 / delta, 0.0)),
            -2.0 * params.omega_b,
        ));
    }
    let static_op = space
        .transfer(0, 1)
        .scaled(C64::new(params.rabi2, 0.0))
        .add(&space.transfer(1, 0).scaled(C64::new(params.rabi1, 0.0)));
    terms.push((
        static_op.kron(&a_dag).scaled(C64::new(-g / delta, 0.0)),
        0.0,
    ));

    let loss = SpMat::identity(space.dim()).kron(&a);
    let model = LindbladModel::new_harmonic(terms, vec![(loss, kappa)])?;
    Ok(SymmetricSivModel {
        model,
        space,
        fock_dim: fock.dim(),
    })
}

pub fn symmetric_observables(
    space: &SymmetricSivSpace,
    n_max: u32,
) -> Result<Vec<(String, SpMat)>> {
    let fock = FockBasis::new(n_max, 1.0)?;
    let id_f = SpMat::identity(fock.dim());
    let half = C64::new(0.5, 0.0);

    let sz = space
        .transfer(1, 1)
        .add(&space.transfer(0, 0).scaled(C64::new(-1.0, 0.0)))
        .scaled(half);
    let sx = space
        .transfer(0, 1)
        .add(&space.transfer(1, 0))
        .scaled(half);
    let sx2 = sx.matmul(&sx);
    let excited = space.transfer(2, 2).add(&space.transfer(3, 3));

    let idx = fock.dim() - 1;
    let top = SpMat::from_triplets(fock.dim(), fock.dim(), vec![(idx, idx, ONE)]);
    let id_s = SpMat::identity(space.dim());
    Ok(vec![
        ("Sz".into(), sz.kron(&id_f)),
        ("Sx".into(), sx.kron(&id_f)),
        ("Sx2".into(), sx2.kron(&id_f)),
        ("P_excited".into(), excited.kron(&id_f)),
        ("n_phonon".into(), id_s.kron(&number_operator(&fock))),
        ("p_top".into(), id_s.kron(&top)),
    ])
}

/// All centers in the lowest level, phonon vacuum, on the symmetric space.
pub fn symmetric_ground_state(space: &SymmetricSivSpace, n_max: u32) -> DVector<C64> {
    let fock_dim = n_max as usize + 1;
    let spin_idx = space
        .index_of([space.n as u8, 0, 0, 0])
        .expect("all-ground occupation exists");
    let mut psi = DVector::zeros(space.dim() * fock_dim);
    psi[spin_idx * fock_dim] = ONE;
    psi
}

pub struct ComparisonReport {
    pub times: Vec<f64>,
    pub xi2_full: Vec<f64>,
    pub xi2_effective: Vec<f64>,
    /// max over sampled t>0 of |full - effective| / effective
    pub max_rel_deviation: f64,
    pub final_xi2_full: f64,
    pub final_xi2_effective: f64,
    pub max_excited_population: f64,
}

fn xi2_from_columns(n: u32, traj: &Trajectory) -> Vec<f64> {
    let sz = traj.column("Sz").expect("Sz recorded");
    let sx2 = traj.column("Sx2").expect("Sx2 recorded");
    sz.iter()
        .zip(&sx2)
        .map(|(&z, &x2)| n as f64 * x2 / (z * z))
        .collect()
}

/// Evolve the four-level model (symmetric representation) and the
/// eliminated spin (x) phonon model from the same physical start and compare
/// their pseudo-spin squeezing.
pub fn validate_effective(
    params: &SiVParams,
    n: u32,
    kappa: f64,
    n_max: u32,
    horizon: f64,
    samples: usize,
    opts: &EvolveOptions,
) -> Result<ComparisonReport> {
    if samples < 2 || horizon <= 0.0 {
        return Err(Error::InvalidParameter(
            "need a positive horizon and at least two samples".into(),
        ));
    }
    let times: Vec<f64> = (0..samples)
        .map(|k| horizon * k as f64 / (samples - 1) as f64)
        .collect();

    let full = build_symmetric_model(params, n, kappa, n_max, true)?;
    let obs_full = symmetric_observables(&full.space, n_max)?;
    let psi0 = symmetric_ground_state(&full.space, n_max);
    let rho0 = crate::lindblad::density_from_pure(&psi0);
    let traj_full = evolve(&full.model, &rho0, &times, &obs_full, opts)?;
    crate::lindblad::check_truncation(&traj_full, 1e-6)?;

    let eff = crate::lindblad::build_effective_model(
        n,
        params.theta(),
        params.g,
        params.omega_total(),
        params.delta,
        kappa,
        n_max,
    )?;
    let spin = crate::spin::SpinBasis::new(n)?;
    let fock = FockBasis::new(n_max, 1.0)?;
    let psi_eff = crate::fock::tensor_state(
        &crate::spin::dicke_state(&spin, -(n as i64))?,
        &crate::fock::fock_state(&fock, 0)?,
    );
    let rho0_eff = crate::lindblad::density_from_pure(&psi_eff);
    let obs_eff = crate::lindblad::spin_phonon_observables(n, n_max)?;
    let traj_eff = evolve(&eff.model, &rho0_eff, &times, &obs_eff, opts)?;
    crate::lindblad::check_truncation(&traj_eff, 1e-6)?;

    let xi2_full = xi2_from_columns(n, &traj_full);
    let xi2_effective = xi2_from_columns(n, &traj_eff);
    let max_rel_deviation = xi2_full
        .iter()
        .zip(&xi2_effective)
        .skip(1)
        .map(|(&f, &e)| (f - e).abs() / e.abs())
        .fold(0.0, f64::max);
    let max_excited_population = traj_full
        .column("P_excited")
        .expect("P_excited recorded")
        .iter()
        .copied()
        .fold(0.0, f64::max);

    Ok(ComparisonReport {
        times,
        final_xi2_full: *xi2_full.last().unwrap(),
        final_xi2_effective: *xi2_effective.last().unwrap(),
        xi2_full,
        xi2_effective,
        max_rel_deviation,
        max_excited_population,
    })
}
