//! Adaptive Dormand-Prince 5(4) stepper for dense complex matrix ODEs.
//!
//! The state is a full matrix (a density matrix in every use here), the
//! error norm is the max over entries of |e_ij| / (atol + rtol*|y_ij|), and
//! the first-same-as-last stage is reused across steps.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

type C64 = Complex64;
type Mat = DMatrix<C64>;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [&[f64]; 6] = [
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    &[
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    ],
    &[
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order weights are row A[5]; error weights are b - b_hat
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

pub struct Dopri5 {
    k: Vec<Mat>,
    y_tmp: Mat,
    y_next: Mat,
    h: f64,
    fsal_ready: bool,
    pub rtol: f64,
    pub atol: f64,
    pub rhs_evals: usize,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

fn lincomb(out: &mut Mat, base: &Mat, h: f64, coefs: &[f64], stages: &[Mat]) {
    out.copy_from(base);
    let os = out.as_mut_slice();
    for (c, stage) in coefs.iter().zip(stages) {
        let hc = h * c;
        if hc == 0.0 {
            continue;
        }
        let ss = stage.as_slice();
        for (o, s) in os.iter_mut().zip(ss) {
            *o += s * hc;
        }
    }
}

impl Dopri5 {
    pub fn new(nrows: usize, ncols: usize, rtol: f64, atol: f64) -> Self {
        Dopri5 {
            k: (0..7).map(|_| Mat::zeros(nrows, ncols)).collect(),
            y_tmp: Mat::zeros(nrows, ncols),
            y_next: Mat::zeros(nrows, ncols),
            h: 0.0,
            fsal_ready: false,
            rtol,
            atol,
            rhs_evals: 0,
            steps_accepted: 0,
            steps_rejected: 0,
        }
    }

    /// Invalidate the cached derivative after an external modification of y
    /// (e.g. trace renormalization).
    pub fn reset_cache(&mut self) {
        self.fsal_ready = false;
    }

    fn initial_step(&self, y: &Mat, f0: &Mat, span: f64) -> f64 {
        let scale = |m: &Mat| {
            m.iter()
                .map(|v| v.norm())
                .fold(0.0, f64::max)
        };
        let d0 = scale(y).max(self.atol);
        let d1 = scale(f0);
        let h0 = if d1 > 1e-12 * d0 { 0.01 * d0 / d1 } else { 1e-6 * span.max(1.0) };
        h0.min(span)
    }

    /// Advance y in place from *t to t_target (forward only), calling
    /// f(t, y, dydt). max_rhs_evals bounds the cumulative work across the
    /// stepper's lifetime.
    pub fn advance<F>(
        &mut self,
        f: &mut F,
        t: &mut f64,
        y: &mut Mat,
        t_target: f64,
        max_rhs_evals: usize,
    ) -> Result<()>
    where
        F: FnMut(f64, &Mat, &mut Mat),
    {
        assert!(t_target >= *t, "backward integration not supported");
        if t_target == *t {
            return Ok(());
        }
        if !self.fsal_ready {
            f(*t, y, &mut self.k[0]);
            self.rhs_evals += 1;
            self.fsal_ready = true;
        }
        if self.h <= 0.0 {
            self.h = self.initial_step(y, &self.k[0], t_target - *t);
        }

        while *t < t_target {
            if self.rhs_evals >= max_rhs_evals {
                return Err(Error::NotConverged {
                    t: *t,
                    residual: f64::NAN,
                    threshold: f64::NAN,
                });
            }
            let h = self.h.min(t_target - *t);
            if h < f64::EPSILON * 1e3 * t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { t: *t, h });
            }

            for stage in 1..=5 {
                let (done, rest) = self.k.split_at_mut(stage);
                lincomb(&mut self.y_tmp, y, h, A[stage - 1], done);
                f(*t + C[stage] * h, &self.y_tmp, &mut rest[0]);
            }
            {
                let (done, rest) = self.k.split_at_mut(6);
                lincomb(&mut self.y_next, y, h, A[5], done);
                f(*t + h, &self.y_next, &mut rest[0]);
            }
            self.rhs_evals += 6;

            // max-norm scaled error estimate
            let mut err: f64 = 0.0;
            {
                let ys = y.as_slice();
                let yn = self.y_next.as_slice();
                let ks: Vec<&[C64]> = self.k.iter().map(|m| m.as_slice()).collect();
                for i in 0..ys.len() {
                    let mut e = C64::new(0.0, 0.0);
                    for (coef, k) in E.iter().zip(&ks) {
                        if *coef != 0.0 {
                            e += k[i] * (h * coef);
                        }
                    }
                    let den = self.atol + self.rtol * ys[i].norm().max(yn[i].norm());
                    err = err.max(e.norm() / den);
                }
            }

            if err <= 1.0 {
                *t += h;
                std::mem::swap(y, &mut self.y_next);
                self.k.swap(0, 6); // first-same-as-last
                self.steps_accepted += 1;
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                self.h = h * factor;
            } else {
                self.steps_rejected += 1;
                self.h = h * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_decay_to_tolerance() {
        // dy/dt = -y, y(0) = 1 (1x1 "matrix")
        let mut stepper = Dopri5::new(1, 1, 1e-10, 1e-12);
        let mut y = Mat::from_element(1, 1, C64::new(1.0, 0.0));
        let mut t = 0.0;
        let mut f = |_t: f64, y: &Mat, dy: &mut Mat| {
            dy.copy_from(y);
            dy.neg_mut();
        };
        stepper.advance(&mut f, &mut t, &mut y, 3.0, 1_000_000).unwrap();
        assert_relative_eq!(y[(0, 0)].re, (-3.0_f64).exp(), max_relative = 1e-8);
        assert!(stepper.steps_accepted > 5);
    }

    #[test]
    fn oscillator_phase_accuracy() {
        // dy/dt = i*w*y: |y| conserved, phase w*t
        let w = 2.5;
        let mut stepper = Dopri5::new(1, 1, 1e-9, 1e-12);
        let mut y = Mat::from_element(1, 1, C64::new(1.0, 0.0));
        let mut t = 0.0;
        let mut f = move |_t: f64, y: &Mat, dy: &mut Mat| {
            dy.copy_from(y);
            dy[(0, 0)] *= C64::new(0.0, w);
        };
        stepper
            .advance(&mut f, &mut t, &mut y, 10.0, 10_000_000)
            .unwrap();
        assert_relative_eq!(y[(0, 0)].norm(), 1.0, max_relative = 1e-7);
        assert_relative_eq!(y[(0, 0)].re, (w * 10.0).cos(), epsilon = 1e-6);
        assert_relative_eq!(y[(0, 0)].im, (w * 10.0).sin(), epsilon = 1e-6);
    }

    #[test]
    fn matrix_state_and_exact_sample_hit() {
        // dY/dt = M Y with M = diag(-1, -2): closed form per entry
        let m = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(-1.0, 0.0),
            C64::new(-2.0, 0.0),
        ]));
        let mut stepper = Dopri5::new(2, 2, 1e-10, 1e-13);
        let mut y = Mat::identity(2, 2);
        let mut t = 0.0;
        let mut f = |_t: f64, y: &Mat, dy: &mut Mat| {
            dy.fill(C64::new(0.0, 0.0));
            dy.gemm(C64::new(1.0, 0.0), &m, y, C64::new(0.0, 0.0));
        };
        for target in [0.25, 0.5, 1.0] {
            stepper.advance(&mut f, &mut t, &mut y, target, 1_000_000).unwrap();
            assert_relative_eq!(t, target);
            assert_relative_eq!(y[(0, 0)].re, (-target).exp(), max_relative = 1e-8);
            assert_relative_eq!(y[(1, 1)].re, (-2.0 * target).exp(), max_relative = 1e-8);
        }
    }

    #[test]
    fn zero_rhs_is_exact() {
        let mut stepper = Dopri5::new(2, 2, 1e-8, 1e-10);
        let mut y = Mat::from_fn(2, 2, |r, c| C64::new(r as f64, c as f64));
        let y0 = y.clone();
        let mut t = 0.0;
        let mut f = |_t: f64, _y: &Mat, dy: &mut Mat| dy.fill(C64::new(0.0, 0.0));
        stepper.advance(&mut f, &mut t, &mut y, 5.0, 1000).unwrap();
        assert_eq!(y, y0);
    }

    #[test]
    fn budget_exhaustion_reports() {
        let mut stepper = Dopri5::new(1, 1, 1e-12, 1e-14);
        let mut y = Mat::from_element(1, 1, C64::new(1.0, 0.0));
        let mut t = 0.0;
        let mut f = |_t: f64, y: &Mat, dy: &mut Mat| {
            dy.copy_from(y);
            dy.neg_mut();
        };
        match stepper.advance(&mut f, &mut t, &mut y, 1e9, 50) {
            Err(Error::NotConverged { .. }) => {}
            other => panic!("expected budget exhaustion, got {other:?}"),
        }
    }
}
