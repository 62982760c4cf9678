//! Lindblad master equation: model assembly and time evolution.
//!
//! Convention: each jump operator L with rate r contributes
//!     r * (2 L rho L'  -  rho L'L  -  L'L rho)
//! to drho/dt (prime is the adjoint), i.e. rates carry the factor-2
//! normalization used throughout this crate.
//!
//! Time-dependent Hamiltonians are restricted to harmonic form: a sum of
//! terms H_k e^{i nu_k t} + H_k' e^{-i nu_k t}. A term with nu = 0
//! contributes the static pair H_0 + H_0'.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{build_annihilation, number_operator, FockBasis};
use crate::rk::Dopri5;
use crate::sparse::SpMat;
use crate::spin::{build_jump_operator, build_spin_operators, SpinBasis};

type C64 = Complex64;
type Mat = DMatrix<C64>;

const ONE: C64 = C64::new(1.0, 0.0);

pub struct HarmonicTerm {
    pub op: SpMat,
    op_dag: SpMat,
    /// angular frequency nu in op * e^{i nu t}
    pub freq: f64,
}

pub enum Hamiltonian {
    None,
    Static(SpMat),
    Harmonic(Vec<HarmonicTerm>),
}

pub struct Jump {
    pub op: SpMat,
    op_dag: SpMat,
    /// cached L'L
    gram: SpMat,
    pub rate: f64,
}

pub struct LindbladModel {
    dim: usize,
    pub hamiltonian: Hamiltonian,
    pub jumps: Vec<Jump>,
}

fn hermiticity_defect(m: &SpMat) -> f64 {
    let mut defect: f64 = 0.0;
    let dense = m.to_dense();
    for r in 0..dense.nrows() {
        for c in r..dense.ncols() {
            defect = defect.max((dense[(r, c)] - dense[(c, r)].conj()).norm());
        }
    }
    defect
}

impl LindbladModel {
    fn build(dim: usize, hamiltonian: Hamiltonian, jumps: Vec<(SpMat, f64)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("zero-dimensional model".into()));
        }
        let mut js = Vec::with_capacity(jumps.len());
        for (op, rate) in jumps {
            if op.nrows() != dim || op.ncols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "jump operator is {}x{}, model dimension is {dim}",
                    op.nrows(),
                    op.ncols()
                )));
            }
            if !rate.is_finite() || rate < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "jump rate must be finite and nonnegative, got {rate}"
                )));
            }
            let op_dag = op.adjoint();
            let gram = op_dag.matmul(&op);
            js.push(Jump { op, op_dag, gram, rate });
        }
        Ok(LindbladModel { dim, hamiltonian, jumps: js })
    }

    /// Model with a time-independent Hamiltonian (None for pure dissipation).
    pub fn new_static(hamiltonian: Option<SpMat>, jumps: Vec<(SpMat, f64)>) -> Result<Self> {
        let dim = hamiltonian
            .as_ref()
            .map(|h| h.nrows())
            .or_else(|| jumps.first().map(|(op, _)| op.nrows()))
            .ok_or_else(|| Error::InvalidParameter("empty model: no Hamiltonian, no jumps".into()))?;
        let ham = match hamiltonian {
            None => Hamiltonian::None,
            Some(h) => {
                if h.nrows() != dim || h.ncols() != dim {
                    return Err(Error::DimensionMismatch(format!(
                        "Hamiltonian is {}x{}, expected {dim}x{dim}",
                        h.nrows(),
                        h.ncols()
                    )));
                }
                let defect = hermiticity_defect(&h);
                let scale = h.max_abs().max(1.0);
                if defect > 1e-9 * scale {
                    return Err(Error::InvalidParameter(format!(
                        "Hamiltonian is not Hermitian: max defect {defect:.3e}"
                    )));
                }
                Hamiltonian::Static(h)
            }
        };
        Self::build(dim, ham, jumps)
    }

    /// Model with H(t) = sum_k (op_k e^{i f_k t} + op_k' e^{-i f_k t}).
    /// Operators need not be Hermitian; the pairing enforces Hermiticity of
    /// the total.
    pub fn new_harmonic(terms: Vec<(SpMat, f64)>, jumps: Vec<(SpMat, f64)>) -> Result<Self> {
        let dim = terms
            .first()
            .map(|(op, _)| op.nrows())
            .or_else(|| jumps.first().map(|(op, _)| op.nrows()))
            .ok_or_else(|| Error::InvalidParameter("empty model: no Hamiltonian, no jumps".into()))?;
        let mut hs = Vec::with_capacity(terms.len());
        for (op, freq) in terms {
            if op.nrows() != dim || op.ncols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "harmonic term is {}x{}, model dimension is {dim}",
                    op.nrows(),
                    op.ncols()
                )));
            }
            if !freq.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "harmonic frequency must be finite, got {freq}"
                )));
            }
            let op_dag = op.adjoint();
            hs.push(HarmonicTerm { op, op_dag, freq });
        }
        Self::build(dim, Hamiltonian::Harmonic(hs), jumps)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_time_dependent(&self) -> bool {
        match &self.hamiltonian {
            Hamiltonian::Harmonic(terms) => terms.iter().any(|t| t.freq != 0.0),
            _ => false,
        }
    }

    /// Dense H(t); None if the model has no Hamiltonian.
    pub fn hamiltonian_at(&self, t: f64) -> Option<Mat> {
        match &self.hamiltonian {
            Hamiltonian::None => None,
            Hamiltonian::Static(h) => Some(h.to_dense()),
            Hamiltonian::Harmonic(terms) => {
                let dim = self.dim;
                let mut h = Mat::zeros(dim, dim);
                for term in terms {
                    let phase = C64::new(0.0, term.freq * t).exp();
                    for (r, c, v) in term.op.iter() {
                        h[(r, c)] += v * phase;
                    }
                    for (r, c, v) in term.op_dag.iter() {
                        h[(r, c)] += v * phase.conj();
                    }
                }
                Some(h)
            }
        }
    }

    /// drho/dt written into `out` (overwritten). Requires Hermitian rho —
    /// always true for density matrices — which lets the commutator and the
    /// anticommutator halves be completed by conjugate transposition instead
    /// of a second sparse product.
    pub fn rhs_into(&self, t: f64, rho: &Mat, out: &mut Mat, ws: &mut RhsWorkspace) {
        out.fill(C64::new(0.0, 0.0));
        let n = self.dim;

        let have_h = match &self.hamiltonian {
            Hamiltonian::None => false,
            Hamiltonian::Static(h) => {
                ws.m.fill(C64::new(0.0, 0.0));
                h.left_mul_into(ONE, rho, &mut ws.m);
                true
            }
            Hamiltonian::Harmonic(terms) => {
                ws.m.fill(C64::new(0.0, 0.0));
                for term in terms {
                    let phase = C64::new(0.0, term.freq * t).exp();
                    term.op.left_mul_into(phase, rho, &mut ws.m);
                    term.op_dag.left_mul_into(phase.conj(), rho, &mut ws.m);
                }
                !terms.is_empty()
            }
        };
        if have_h {
            // out += -i (M - M') with M = H rho
            let os = out.as_mut_slice();
            let ms = ws.m.as_slice();
            for c in 0..n {
                for r in 0..n {
                    let d = ms[r + c * n] - ms[c + r * n].conj();
                    os[r + c * n] += C64::new(d.im, -d.re);
                }
            }
        }

        for jump in &self.jumps {
            if jump.rate == 0.0 {
                continue;
            }
            // out += 2r (L rho) L'
            ws.x.fill(C64::new(0.0, 0.0));
            jump.op.left_mul_into(ONE, rho, &mut ws.x);
            jump.op_dag
                .right_mul_into(C64::new(2.0 * jump.rate, 0.0), &ws.x, out);
            // out -= r (G rho + (G rho)') with G = L'L
            ws.m.fill(C64::new(0.0, 0.0));
            jump.gram.left_mul_into(ONE, rho, &mut ws.m);
            let os = out.as_mut_slice();
            let ms = ws.m.as_slice();
            for c in 0..n {
                for r in 0..n {
                    let s = ms[r + c * n] + ms[c + r * n].conj();
                    os[r + c * n] -= s * jump.rate;
                }
            }
        }
    }

    /// Allocating convenience wrapper around [`rhs_into`](Self::rhs_into).
    pub fn liouvillian_rhs(&self, rho: &Mat, t: f64) -> Result<Mat> {
        if rho.nrows() != self.dim || rho.ncols() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "state is {}x{}, model dimension is {}",
                rho.nrows(),
                rho.ncols(),
                self.dim
            )));
        }
        let mut out = Mat::zeros(self.dim, self.dim);
        let mut ws = RhsWorkspace::new(self.dim);
        self.rhs_into(t, rho, &mut out, &mut ws);
        Ok(out)
    }

    pub fn workspace(&self) -> RhsWorkspace {
        RhsWorkspace::new(self.dim)
    }
}

pub struct RhsWorkspace {
    m: Mat,
    x: Mat,
}

impl RhsWorkspace {
    fn new(dim: usize) -> Self {
        RhsWorkspace {
            m: Mat::zeros(dim, dim),
            x: Mat::zeros(dim, dim),
        }
    }
}

/// Health metrics of a density matrix.
pub struct DensityCheck {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

pub fn check_density(rho: &Mat) -> DensityCheck {
    let trace_error = (rho.trace() - ONE).norm();
    let mut herm: f64 = 0.0;
    for r in 0..rho.nrows() {
        for c in r..rho.ncols() {
            herm = herm.max((rho[(r, c)] - rho[(c, r)].conj()).norm());
        }
    }
    let sym = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let eigs = sym.symmetric_eigenvalues();
    let min_eigenvalue = eigs.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    DensityCheck {
        trace_error,
        hermiticity_error: herm,
        min_eigenvalue,
    }
}

pub fn density_from_pure(psi: &DVector<C64>) -> Mat {
    let norm = psi.norm();
    let scaled = psi / C64::new(norm, 0.0);
    &scaled * scaled.adjoint()
}

pub struct EvolveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub keep_states: bool,
    /// trace drift beyond which the state is renormalized (and the event
    /// logged)
    pub renorm_threshold: f64,
    pub max_rhs_evals: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            rtol: 1e-8,
            atol: 1e-10,
            keep_states: false,
            renorm_threshold: 1e-8,
            max_rhs_evals: 20_000_000,
        }
    }
}

pub struct Trajectory {
    pub times: Vec<f64>,
    pub names: Vec<String>,
    /// values[k][j] = observable j at sample k
    pub values: Vec<Vec<f64>>,
    pub trace_errors: Vec<f64>,
    pub herm_errors: Vec<f64>,
    pub states: Option<Vec<Mat>>,
    pub final_state: Mat,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub rhs_evals: usize,
    pub renormalizations: usize,
}

impl Trajectory {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.names.iter().position(|n| n == name)?;
        Some(self.values.iter().map(|row| row[j]).collect())
    }
}

/// Integrate the master equation from rho0 through the given sample times
/// (ascending; the first sample is the initial condition) and record real
/// expectation values of the named observables.
pub fn evolve(
    model: &LindbladModel,
    rho0: &Mat,
    times: &[f64],
    observables: &[(String, SpMat)],
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    let dim = model.dim();
    if rho0.nrows() != dim || rho0.ncols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "initial state is {}x{}, model dimension is {dim}",
            rho0.nrows(),
            rho0.ncols()
        )));
    }
    if times.is_empty() {
        return Err(Error::InvalidParameter("no sample times".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "sample times must be strictly increasing".into(),
        ));
    }
    for (name, op) in observables {
        if op.nrows() != dim || op.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "observable {name} is {}x{}, model dimension is {dim}",
                op.nrows(),
                op.ncols()
            )));
        }
    }
    let check0 = check_density(rho0);
    if check0.hermiticity_error > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "initial state is not Hermitian: max defect {:.3e}",
            check0.hermiticity_error
        )));
    }
    if check0.trace_error > 1e-6 {
        return Err(Error::InvalidParameter(format!(
            "initial state trace deviates from 1 by {:.3e}",
            check0.trace_error
        )));
    }

    let mut rho = rho0.clone();
    let mut stepper = Dopri5::new(dim, dim, opts.rtol, opts.atol);
    let mut ws = model.workspace();
    let mut t = times[0];

    let nsamples = times.len();
    let mut values = Vec::with_capacity(nsamples);
    let mut trace_errors = Vec::with_capacity(nsamples);
    let mut herm_errors = Vec::with_capacity(nsamples);
    let mut states = opts.keep_states.then(Vec::new);
    let mut renormalizations = 0usize;

    let mut record = |rho: &mut Mat,
                      stepper: &mut Dopri5,
                      values: &mut Vec<Vec<f64>>,
                      trace_errors: &mut Vec<f64>,
                      herm_errors: &mut Vec<f64>,
                      states: &mut Option<Vec<Mat>>,
                      renormalizations: &mut usize| {
        let tr = rho.trace();
        let trace_err = (tr - ONE).norm();
        let mut herm: f64 = 0.0;
        for r in 0..dim {
            for c in r..dim {
                herm = herm.max((rho[(r, c)] - rho[(c, r)].conj()).norm());
            }
        }
        trace_errors.push(trace_err);
        herm_errors.push(herm);
        if trace_err > opts.renorm_threshold && tr.norm() > 0.0 {
            log::warn!("trace drifted by {trace_err:.3e}; renormalizing");
            *rho /= C64::new(tr.re, 0.0);
            stepper.reset_cache();
            *renormalizations += 1;
        }
        let row: Vec<f64> = observables
            .iter()
            .map(|(_, op)| op.expectation(rho).re)
            .collect();
        values.push(row);
        if let Some(list) = states.as_mut() {
            list.push(rho.clone());
        }
    };

    record(
        &mut rho,
        &mut stepper,
        &mut values,
        &mut trace_errors,
        &mut herm_errors,
        &mut states,
        &mut renormalizations,
    );

    let mut f = |t: f64, y: &Mat, dy: &mut Mat| model.rhs_into(t, y, dy, &mut ws);
    for &target in &times[1..] {
        stepper.advance(&mut f, &mut t, &mut rho, target, opts.max_rhs_evals)?;
        record(
            &mut rho,
            &mut stepper,
            &mut values,
            &mut trace_errors,
            &mut herm_errors,
            &mut states,
            &mut renormalizations,
        );
    }

    Ok(Trajectory {
        times: times.to_vec(),
        names: observables.iter().map(|(n, _)| n.clone()).collect(),
        values,
        trace_errors,
        herm_errors,
        states,
        final_state: rho,
        steps_accepted: stepper.steps_accepted,
        steps_rejected: stepper.steps_rejected,
        rhs_evals: stepper.rhs_evals,
        renormalizations,
    })
}

/// Collective decay rate of the adiabatically eliminated model:
/// gamma = (g Omega / Delta)^2 / kappa.
pub fn collective_rate(g: f64, omega_drive: f64, delta: f64, kappa: f64) -> f64 {
    let coupling = g * omega_drive / delta;
    coupling * coupling / kappa
}

/// Pure collective decay in the maximal-spin sector: jump D = cos(theta) S-
/// minus sin(theta) S+ at the given rate, no Hamiltonian.
pub fn build_collective_model(n: u32, theta: f64, gamma: f64) -> Result<LindbladModel> {
    if gamma <= 0.0 || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "collective rate must be positive, got {gamma}"
        )));
    }
    let basis = SpinBasis::new(n)?;
    let ops = build_spin_operators(&basis);
    let d = build_jump_operator(&ops, theta)?;
    LindbladModel::new_static(None, vec![(SpMat::from_dense(&d, 0.0), gamma)])
}

/// Spin + phonon model before phonon elimination: collective spin coupled to
/// a damped bosonic mode through H = c (D a' + D' a), c = g*Omega/Delta,
/// with phonon loss at rate kappa. Operator ordering is spin (x) phonon.
pub struct SpinPhononModel {
    pub model: LindbladModel,
    pub spin_dim: usize,
    pub fock_dim: usize,
}

pub fn build_effective_model(
    n: u32,
    theta: f64,
    g: f64,
    omega_drive: f64,
    delta: f64,
    kappa: f64,
    n_max: u32,
) -> Result<SpinPhononModel> {
    for (name, v) in [
        ("g", g),
        ("omega_drive", omega_drive),
        ("delta", delta),
        ("kappa", kappa),
    ] {
        if v <= 0.0 || !v.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    let spin = SpinBasis::new(n)?;
    let ops = build_spin_operators(&spin);
    let d = SpMat::from_dense(&build_jump_operator(&ops, theta)?, 0.0);
    let fock = FockBasis::new(n_max, 1.0)?;
    let a = build_annihilation(&fock);
    let a_dag = a.adjoint();
    let id_spin = SpMat::identity(spin.dim());
    let id_fock = SpMat::identity(fock.dim());

    let coupling = g * omega_drive / delta;
    // c (D (x) a' + D' (x) a), assembled as a single Hermitian static matrix
    let h = d
        .kron(&a_dag)
        .add(&d.adjoint().kron(&a))
        .scaled(C64::new(coupling, 0.0));
    let loss = id_spin.kron(&a);
    let model = LindbladModel::new_static(Some(h), vec![(loss, kappa)])?;
    Ok(SpinPhononModel {
        model,
        spin_dim: spin.dim(),
        fock_dim: fock.dim(),
    })
}

/// Standard observable set on a spin (x) phonon space: Sz, Sx^2, S^2 on the
/// spin factor, phonon number, and the population of the highest Fock level
/// (truncation sentinel).
pub fn spin_phonon_observables(n: u32, n_max: u32) -> Result<Vec<(String, SpMat)>> {
    let spin = SpinBasis::new(n)?;
    let ops = build_spin_operators(&spin);
    let fock = FockBasis::new(n_max, 1.0)?;
    let id_fock = SpMat::identity(fock.dim());
    let id_spin = SpMat::identity(spin.dim());

    let sz = SpMat::from_dense(&ops.s_z, 0.0).kron(&id_fock);
    let sx2 = SpMat::from_dense(&ops.s_x_squared(), 0.0).kron(&id_fock);
    let s2 = SpMat::from_dense(&ops.s_squared(), 0.0).kron(&id_fock);
    let num = id_spin.kron(&number_operator(&fock));
    let idx = fock.dim() - 1;
    let top = SpMat::from_triplets(fock.dim(), fock.dim(), vec![(idx, idx, ONE)]);
    let p_top = id_spin.kron(&top);
    Ok(vec![
        ("Sz".into(), sz),
        ("Sx2".into(), sx2),
        ("S2".into(), s2),
        ("n_phonon".into(), num),
        ("p_top".into(), p_top),
    ])
}

/// Observable set on a bare collective-spin space.
pub fn collective_observables(n: u32) -> Result<Vec<(String, SpMat)>> {
    let spin = SpinBasis::new(n)?;
    let ops = build_spin_operators(&spin);
    Ok(vec![
        ("Sz".into(), SpMat::from_dense(&ops.s_z, 0.0)),
        ("Sx2".into(), SpMat::from_dense(&ops.s_x_squared(), 0.0)),
        ("S2".into(), SpMat::from_dense(&ops.s_squared(), 0.0)),
    ])
}

/// Fail if the truncation sentinel column ever exceeds the population limit.
pub fn check_truncation(traj: &Trajectory, limit: f64) -> Result<()> {
    if let Some(col) = traj.column("p_top") {
        let worst = col.iter().copied().fold(0.0, f64::max);
        if worst > limit {
            return Err(Error::TruncationLeak {
                population: worst,
                limit,
            });
        }
    }
    Ok(())
}
