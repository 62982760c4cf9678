//! Steady states of time-independent Lindblad models, via the vectorized
//! Liouvillian null space (small dimensions) or long-horizon integration.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lindblad::LindbladModel;
use crate::rk::Dopri5;
use crate::sparse::SpMat;

type C64 = Complex64;
type Mat = DMatrix<C64>;

/// Hilbert-space dimension beyond which the dense dim^2 x dim^2 Liouvillian
/// is refused. 64 keeps the dense matrix at 128 MB.
pub const NULLSPACE_DIM_CAP: usize = 64;

/// Relative singular-value threshold below which a vector counts as null.
pub const NULLSPACE_THRESHOLD: f64 = 1e-10;

/// Dense matrix of the Liouvillian acting on column-stacked states:
/// vec(drho/dt) = L vec(rho). Requires a time-independent model.
pub fn liouvillian_matrix(model: &LindbladModel) -> Result<Mat> {
    if model.is_time_dependent() {
        return Err(Error::InvalidParameter(
            "vectorized Liouvillian requires a time-independent model".into(),
        ));
    }
    let dim = model.dim();
    if dim > NULLSPACE_DIM_CAP {
        return Err(Error::DimensionCap {
            dim,
            cap: NULLSPACE_DIM_CAP,
            context: "vectorized Liouvillian",
        });
    }
    let id = SpMat::identity(dim);
    let mut total = SpMat::zeros(dim * dim, dim * dim);

    // vec(H rho - rho H): (I (x) H - H^T (x) I) vec(rho), times -i
    if let Some(h_dense) = model.hamiltonian_at(0.0) {
        let h = SpMat::from_dense(&h_dense, 0.0);
        let ht = h.transpose();
        let comm = id.kron(&h).add(&ht.kron(&id).scaled(C64::new(-1.0, 0.0)));
        total = total.add(&comm.scaled(C64::new(0.0, -1.0)));
    }

    for jump in &model.jumps {
        if jump.rate == 0.0 {
            continue;
        }
        let l = &jump.op;
        let l_conj = l.conjugate();
        let gram = l.adjoint().matmul(l);
        let gram_t = gram.transpose();
        // 2 L rho L' -> 2 (conj L) (x) L
        let term = l_conj
            .kron(l)
            .scaled(C64::new(2.0, 0.0))
            .add(&id.kron(&gram).scaled(C64::new(-1.0, 0.0)))
            .add(&gram_t.kron(&id).scaled(C64::new(-1.0, 0.0)));
        total = total.add(&term.scaled(C64::new(jump.rate, 0.0)));
    }
    Ok(total.to_dense())
}

fn hermitize_and_normalize(rho: Mat) -> Result<Mat> {
    let herm = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let tr = herm.trace();
    if tr.norm() < 1e-12 {
        return Err(Error::NoSteadyState {
            smallest: tr.norm(),
            threshold: 1e-12,
        });
    }
    // fix the sign/phase so the trace is positive real, then normalize
    Ok(herm / tr)
}

/// Steady state from the SVD null space of the vectorized Liouvillian.
/// Errors if the null space is empty or degenerate.
pub fn steady_state_nullspace(model: &LindbladModel) -> Result<Mat> {
    let dim = model.dim();
    let l = liouvillian_matrix(model)?;
    let svd = l.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sigma_max = svd
        .singular_values
        .iter()
        .fold(0.0f64, |a, &b| a.max(b))
        .max(f64::MIN_POSITIVE);
    let threshold = NULLSPACE_THRESHOLD * sigma_max;
    let null_rows: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s < threshold)
        .map(|(i, _)| i)
        .collect();
    match null_rows.len() {
        0 => {
            let smallest = svd
                .singular_values
                .iter()
                .fold(f64::INFINITY, |a, &b| a.min(b));
            Err(Error::NoSteadyState {
                smallest,
                threshold,
            })
        }
        1 => {
            let row = null_rows[0];
            // rows of V^T are conjugated right-singular vectors
            let vec: DVector<C64> = DVector::from_iterator(
                dim * dim,
                v_t.row(row).iter().map(|v| v.conj()),
            );
            let rho = Mat::from_iterator(dim, dim, vec.iter().copied());
            hermitize_and_normalize(rho)
        }
        count => Err(Error::NonUniqueSteadyState { count }),
    }
}

pub struct LongHorizonOptions {
    /// initial state; maximally mixed when None
    pub rho0: Option<Mat>,
    /// max-norm of drho/dt at which the state counts as steady
    pub residual_threshold: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_rhs_evals: usize,
    /// integration time of the first residual-check chunk
    pub initial_chunk: f64,
}

impl Default for LongHorizonOptions {
    fn default() -> Self {
        LongHorizonOptions {
            rho0: None,
            residual_threshold: 1e-10,
            rtol: 1e-9,
            atol: 1e-12,
            max_rhs_evals: 50_000_000,
            initial_chunk: 1.0,
        }
    }
}

pub struct LongHorizonResult {
    pub rho: Mat,
    pub residual: f64,
    pub t_reached: f64,
    pub rhs_evals: usize,
}

pub fn residual_norm(model: &LindbladModel, rho: &Mat) -> Result<f64> {
    let rhs = model.liouvillian_rhs(rho, 0.0)?;
    Ok(rhs.iter().map(|v| v.norm()).fold(0.0, f64::max))
}

/// Integrate from rho0 in geometrically growing chunks until the residual
/// max-norm of drho/dt drops below the threshold.
pub fn steady_state_longhorizon(
    model: &LindbladModel,
    opts: &LongHorizonOptions,
) -> Result<LongHorizonResult> {
    if model.is_time_dependent() {
        return Err(Error::InvalidParameter(
            "steady-state search requires a time-independent model".into(),
        ));
    }
    let dim = model.dim();
    let mut rho = match &opts.rho0 {
        Some(r) => {
            if r.nrows() != dim || r.ncols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "initial state is {}x{}, model dimension is {dim}",
                    r.nrows(),
                    r.ncols()
                )));
            }
            r.clone()
        }
        None => Mat::identity(dim, dim) / C64::new(dim as f64, 0.0),
    };

    let mut stepper = Dopri5::new(dim, dim, opts.rtol, opts.atol);
    let mut ws = model.workspace();
    let mut t = 0.0;
    let mut chunk = opts.initial_chunk;
    loop {
        {
            let mut f = |t: f64, y: &Mat, dy: &mut Mat| model.rhs_into(t, y, dy, &mut ws);
            match stepper.advance(&mut f, &mut t, &mut rho, t + chunk, opts.max_rhs_evals) {
                Ok(()) => {}
                Err(Error::NotConverged { .. }) => {
                    let residual = residual_norm(model, &rho)?;
                    return Err(Error::NotConverged {
                        t,
                        residual,
                        threshold: opts.residual_threshold,
                    });
                }
                Err(e) => return Err(e),
            }
        }
        // keep the trace pinned over very long horizons
        let tr = rho.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-10 {
            rho /= C64::new(tr.re, 0.0);
            stepper.reset_cache();
        }
        let residual = residual_norm(model, &rho)?;
        if residual < opts.residual_threshold {
            return Ok(LongHorizonResult {
                rho,
                residual,
                t_reached: t,
                rhs_evals: stepper.rhs_evals,
            });
        }
        chunk *= 1.6;
    }
}

pub enum SteadySolver {
    /// null space when the dimension allows it, long-horizon otherwise
    Auto,
    NullSpace,
    LongHorizon(LongHorizonOptions),
}

pub fn steady_state(model: &LindbladModel, solver: SteadySolver) -> Result<Mat> {
    match solver {
        SteadySolver::NullSpace => steady_state_nullspace(model),
        SteadySolver::LongHorizon(opts) => Ok(steady_state_longhorizon(model, &opts)?.rho),
        SteadySolver::Auto => {
            if model.dim() <= NULLSPACE_DIM_CAP && !model.is_time_dependent() {
                match steady_state_nullspace(model) {
                    Ok(rho) => Ok(rho),
                    // degenerate null space: integration from the mixed state
                    // still selects a valid steady state
                    Err(Error::NonUniqueSteadyState { count }) => {
                        log::info!(
                            "null space is {count}-dimensional; falling back to long-horizon integration"
                        );
                        Ok(steady_state_longhorizon(model, &LongHorizonOptions::default())?.rho)
                    }
                    Err(e) => Err(e),
                }
            } else {
                Ok(steady_state_longhorizon(model, &LongHorizonOptions::default())?.rho)
            }
        }
    }
}

/// Overlap <psi| rho |psi> of a density matrix with a pure reference state.
pub fn fidelity_pure(rho: &Mat, psi: &DVector<C64>) -> f64 {
    let norm2 = psi.norm_squared();
    ((psi.adjoint() * rho * psi)[(0, 0)].re / norm2).max(0.0)
}

fn psd_sqrt(m: &Mat) -> Mat {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let sqrt_diag = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| C64::new(l.max(0.0).sqrt(), 0.0)),
    );
    &eig.eigenvectors * Mat::from_diagonal(&sqrt_diag) * eig.eigenvectors.adjoint()
}

/// Uhlmann fidelity (tr sqrt(sqrt(a) b sqrt(a)))^2 between density matrices.
pub fn fidelity(a: &Mat, b: &Mat) -> f64 {
    let sa = psd_sqrt(a);
    let inner = &sa * b * &sa;
    // inner is Hermitian PSD up to round-off
    let herm = (&inner + inner.adjoint()) * C64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(herm);
    let s: f64 = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).sum();
    (s * s).min(1.0)
}
