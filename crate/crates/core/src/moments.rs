//! Linearized moment dynamics of the collective model: exponential
//! relaxation of <dSz> and <Sx^2>, the closed-form squeezing approximation,
//! its dephasing-corrected steady values, and the optimal working point.
//!
//! All closed forms here linearize around the fully polarized state, so they
//! hold for tan(theta) below the mean-spin collapse at tan^2 = N/(N+2).

use crate::dark_state::exact_squeezing;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct MomentParams {
    pub n: u32,
    pub tan_theta: f64,
    /// collective decay rate
    pub gamma: f64,
    /// single-spin dephasing rate (0 allowed)
    pub big_gamma: f64,
}

/// cos(2 theta), sin(2 theta), sin^2(theta) from tan(theta) without touching
/// inverse trig.
fn trig(tan_theta: f64) -> (f64, f64, f64) {
    let t2 = tan_theta * tan_theta;
    let denom = 1.0 + t2;
    ((1.0 - t2) / denom, 2.0 * tan_theta / denom, t2 / denom)
}

impl MomentParams {
    pub fn new(n: u32, tan_theta: f64, gamma: f64, big_gamma: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("need at least one spin".into()));
        }
        if !(0.0..1.0).contains(&tan_theta) {
            return Err(Error::NonNormalizable(tan_theta));
        }
        if gamma <= 0.0 || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "collective rate must be positive, got {gamma}"
            )));
        }
        if big_gamma < 0.0 || !big_gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "dephasing rate must be nonnegative, got {big_gamma}"
            )));
        }
        Ok(MomentParams {
            n,
            tan_theta,
            gamma,
            big_gamma,
        })
    }

    /// Cooperativity gamma/Gamma; infinite without dephasing.
    pub fn eta(&self) -> f64 {
        if self.big_gamma == 0.0 {
            f64::INFINITY
        } else {
            self.gamma / self.big_gamma
        }
    }

    /// Relaxation rate of the linearized moments: 2 N gamma cos(2 theta).
    pub fn gamma_eff(&self) -> f64 {
        let (cos2, _, _) = trig(self.tan_theta);
        2.0 * self.n as f64 * self.gamma * cos2
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FixedPoints {
    /// <dSz> = <Sz> + N/2 at stationarity
    pub delta_sz: f64,
    /// <Sx^2> at stationarity (dephasing-corrected when Gamma > 0)
    pub sx2: f64,
    /// <Sz> = delta_sz - N/2
    pub mean_sz: f64,
}

/// Stationary first and second moments. Dephasing leaves <dSz> untouched
/// (the jump operators commute with Sz) and shifts <Sx^2>.
pub fn fixed_points(p: &MomentParams) -> Result<FixedPoints> {
    let n = p.n as f64;
    let (cos2, sin2, sin_sq) = trig(p.tan_theta);
    let delta_sz = sin_sq / cos2;
    let mean_sz = delta_sz - n / 2.0;
    if mean_sz >= 0.0 {
        return Err(Error::UndefinedMeanSpin {
            mean_sz,
            eps: 0.0,
        });
    }
    let sx2 = if p.big_gamma == 0.0 {
        n * (1.0 - sin2) / (4.0 * cos2)
    } else {
        let ne = n * p.eta();
        (n / 4.0) * (ne * (1.0 - sin2) + 4.0) / (ne * cos2 + 4.0)
    };
    Ok(FixedPoints {
        delta_sz,
        sx2,
        mean_sz,
    })
}

pub struct MomentTrajectory {
    pub times: Vec<f64>,
    pub delta_sz: Vec<f64>,
    pub sx2: Vec<f64>,
    /// N <Sx^2> / <Sz>^2 along the path
    pub xi2: Vec<f64>,
}

/// Closed-form exponential relaxation at rate gamma_eff toward the
/// dephasing-free fixed points. Initial values default to the coherent state
/// (0, N/4).
pub fn moment_trajectories(
    p: &MomentParams,
    times: &[f64],
    init: Option<(f64, f64)>,
) -> Result<MomentTrajectory> {
    if p.big_gamma != 0.0 {
        return Err(Error::InvalidParameter(
            "time-dependent moments are only available without dephasing; \
             only the stationary values are known with Gamma > 0"
                .into(),
        ));
    }
    let n = p.n as f64;
    let fp = fixed_points(p)?;
    let rate = p.gamma_eff();
    let (dsz0, sx20) = init.unwrap_or((0.0, n / 4.0));

    let mut delta_sz = Vec::with_capacity(times.len());
    let mut sx2 = Vec::with_capacity(times.len());
    let mut xi2 = Vec::with_capacity(times.len());
    for &t in times {
        let decay = (-rate * t).exp();
        let d = fp.delta_sz + (dsz0 - fp.delta_sz) * decay;
        let x = fp.sx2 + (sx20 - fp.sx2) * decay;
        let mean = d - n / 2.0;
        delta_sz.push(d);
        sx2.push(x);
        xi2.push(n * x / (mean * mean));
    }
    Ok(MomentTrajectory {
        times: times.to_vec(),
        delta_sz,
        sx2,
        xi2,
    })
}

/// Squeezing of the linearized steady state:
/// xi^2 = N^2 (1 - sin(2theta)) cos(2theta) / (N cos(2theta) - 2 sin^2(theta))^2.
pub fn xi2_linearized(n: u32, tan_theta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&tan_theta) {
        return Err(Error::NonNormalizable(tan_theta));
    }
    let nf = n as f64;
    let (cos2, sin2, sin_sq) = trig(tan_theta);
    let denom = nf * cos2 - 2.0 * sin_sq;
    if denom <= 0.0 {
        return Err(Error::UndefinedMeanSpin {
            mean_sz: -denom / (2.0 * cos2),
            eps: 0.0,
        });
    }
    Ok(nf * nf * (1.0 - sin2) * cos2 / (denom * denom))
}

#[derive(Clone, Copy, Debug)]
pub struct DephasingSteady {
    pub delta_sz: f64,
    pub sx2: f64,
    pub xi2: f64,
}

/// Stationary moments and squeezing with single-spin dephasing folded in;
/// reduces to the dephasing-free closed form as N*eta grows.
pub fn steady_moments_dephasing(p: &MomentParams) -> Result<DephasingSteady> {
    let fp = fixed_points(p)?;
    let n = p.n as f64;
    let mean = n / 2.0 - fp.delta_sz;
    Ok(DephasingSteady {
        delta_sz: fp.delta_sz,
        sx2: fp.sx2,
        xi2: n * fp.sx2 / (mean * mean),
    })
}

#[derive(Clone, Copy, Debug)]
pub struct OptimalSqueezing {
    /// the heuristic working point tan^2(theta) = N/(N+10)
    pub tan2_theta_opt: f64,
    /// linearized squeezing evaluated there
    pub xi2_opt: f64,
    /// large-N asymptote 4/N
    pub asymptote: f64,
    /// numerically minimized exact dark-state squeezing (even N only)
    pub exact_min: Option<(f64, f64)>,
}

fn golden_minimize<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: u32) -> (f64, f64) {
    let inv_phi = 0.618_033_988_749_894_9;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    if fc < fd && fc < fx {
        (c, fc)
    } else if fd < fx {
        (d, fd)
    } else {
        (x, fx)
    }
}

/// Working point and squeezing at the heuristic optimum, with the true
/// minimum of the exact dark-state curve attached for comparison.
pub fn optimal_squeezing(n: u32) -> Result<OptimalSqueezing> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least two spins, got {n}"
        )));
    }
    let nf = n as f64;
    let tan2 = nf / (nf + 10.0);
    let xi2_opt = xi2_linearized(n, tan2.sqrt())?;

    let exact_min = if n % 2 == 0 {
        let f = |t: f64| match exact_squeezing(n, t) {
            Ok(r) => r.xi2,
            Err(_) => f64::INFINITY,
        };
        // coarse scan concentrated toward tan = 1, then golden refinement
        let mut best = (0.5, f(0.5));
        for k in 1..=120 {
            let one_minus = 0.5 * (1e-6f64 / 0.5).powf(k as f64 / 120.0);
            let t = 1.0 - one_minus;
            let v = f(t);
            if v < best.1 {
                best = (t, v);
            }
        }
        let lo = (best.0 - 0.02).max(0.0);
        let hi = (best.0 + 0.02).min(1.0 - 1e-9);
        Some(golden_minimize(f, lo, hi, 60))
    } else {
        None
    };

    Ok(OptimalSqueezing {
        tan2_theta_opt: tan2,
        xi2_opt,
        asymptote: 4.0 / nf,
        exact_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn effective_rate_value() {
        let p = MomentParams::new(100, 0.2, 1.0, 0.0).unwrap();
        // cos(2 theta) = (1 - 0.04)/(1 + 0.04)
        assert_relative_eq!(p.gamma_eff(), 200.0 * 0.96 / 1.04, epsilon = 1e-12);
        assert_relative_eq!(p.gamma_eff(), 184.6, epsilon = 0.1);
    }

    #[test]
    fn rate_vanishes_at_equal_mixing() {
        let p = MomentParams::new(10, 0.999999, 1.0, 0.0).unwrap();
        assert!(p.gamma_eff() < 1e-4);
    }

    #[test]
    fn fixed_point_values() {
        let p = MomentParams::new(100, 0.2, 1.0, 0.0).unwrap();
        let fp = fixed_points(&p).unwrap();
        assert_relative_eq!(fp.delta_sz, 0.04 / 0.96, epsilon = 1e-12);
        assert_relative_eq!(fp.delta_sz, 0.0416667, epsilon = 1e-6);
        // theta = 0: no excitation, coherent transverse variance
        let p0 = MomentParams::new(100, 0.0, 1.0, 0.0).unwrap();
        let fp0 = fixed_points(&p0).unwrap();
        assert_relative_eq!(fp0.delta_sz, 0.0);
        assert_relative_eq!(fp0.sx2, 25.0);
    }

    #[test]
    fn trajectories_start_at_defaults_and_relax() {
        let p = MomentParams::new(20, 0.3, 0.5, 0.0).unwrap();
        let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.01).collect();
        let traj = moment_trajectories(&p, &times, None).unwrap();
        assert_relative_eq!(traj.delta_sz[0], 0.0);
        assert_relative_eq!(traj.sx2[0], 5.0);
        let fp = fixed_points(&p).unwrap();
        let last = *traj.delta_sz.last().unwrap();
        assert_relative_eq!(last, fp.delta_sz, max_relative = 1e-3);
        // fixed points are stationary under the closed form
        let stat = moment_trajectories(&p, &[0.0, 1.0], Some((fp.delta_sz, fp.sx2))).unwrap();
        assert_relative_eq!(stat.delta_sz[1], fp.delta_sz, epsilon = 1e-12);
        assert_relative_eq!(stat.sx2[1], fp.sx2, epsilon = 1e-12);
    }

    #[test]
    fn initial_sx2_slope_matches_rate_times_gap() {
        // d<Sx^2>/dt at t=0 from the closed form must equal
        // (N^2 gamma / 2)(2 sin^2 - sin2theta)
        let p = MomentParams::new(12, 0.25, 0.7, 0.0).unwrap();
        let dt = 1e-7;
        let traj = moment_trajectories(&p, &[0.0, dt], None).unwrap();
        let slope = (traj.sx2[1] - traj.sx2[0]) / dt;
        let t2 = 0.25f64 * 0.25;
        let sin_sq = t2 / (1.0 + t2);
        let sin2 = 2.0 * 0.25 / (1.0 + t2);
        let expected = (144.0 * 0.7 / 2.0) * (2.0 * sin_sq - sin2);
        assert_relative_eq!(slope, expected, max_relative = 1e-5);
    }

    #[test]
    fn linearized_squeezing_values() {
        assert_relative_eq!(xi2_linearized(8, 0.0).unwrap(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(xi2_linearized(8, 0.2).unwrap(), 0.681, epsilon = 5e-4);
    }

    #[test]
    fn linearized_tracks_exact_at_small_angle() {
        for &n in &[50u32, 100, 200] {
            let bound = ((n as f64) / (n as f64 + 10.0)).sqrt();
            let mut t = 0.05;
            while t <= bound {
                let lin = xi2_linearized(n, t).unwrap();
                let exact = exact_squeezing(n, t).unwrap().xi2;
                let dev = (lin - exact).abs() / exact;
                assert!(dev < 0.02, "N={n}, tan={t}: deviation {dev:.4}");
                t += 0.05;
            }
        }
    }

    #[test]
    fn dephasing_reduces_to_closed_form_at_large_cooperativity() {
        let n = 100;
        let t = 0.3;
        let lin = xi2_linearized(n, t).unwrap();
        let p = MomentParams::new(n, t, 1.0, 1e-12).unwrap();
        let with_deph = steady_moments_dephasing(&p).unwrap();
        assert_relative_eq!(with_deph.xi2, lin, max_relative = 1e-8);
        let p0 = MomentParams::new(n, t, 1.0, 0.0).unwrap();
        let infinite_eta = steady_moments_dephasing(&p0).unwrap();
        assert_relative_eq!(infinite_eta.xi2, lin, max_relative = 1e-12);
    }

    #[test]
    fn dephasing_never_improves_squeezing() {
        let n = 100;
        let t = 0.5;
        let mut last = steady_moments_dephasing(&MomentParams::new(n, t, 1.0, 0.0).unwrap())
            .unwrap()
            .xi2;
        for &big_gamma in &[1e-4, 1e-3, 1e-2, 1e-1, 1.0] {
            let xi2 = steady_moments_dephasing(&MomentParams::new(n, t, 1.0, big_gamma).unwrap())
                .unwrap()
                .xi2;
            assert!(xi2 >= last - 1e-12);
            last = xi2;
        }
    }

    #[test]
    fn optimum_matches_asymptote_at_large_n() {
        let opt = optimal_squeezing(10_000).unwrap();
        assert_relative_eq!(opt.tan2_theta_opt, 10_000.0 / 10_010.0, epsilon = 1e-12);
        assert!((opt.xi2_opt - 4e-4).abs() / 4e-4 < 0.10);
        let (t_min, xi2_min) = opt.exact_min.unwrap();
        assert!(xi2_min <= opt.xi2_opt * 1.0001);
        assert!(t_min > 0.99);
        // the heuristic sits close to the exact minimum
        assert!((xi2_min - opt.xi2_opt).abs() / xi2_min < 0.3);
    }

    #[test]
    fn optimum_ratio_improves_with_n() {
        let r1000 = {
            let o = optimal_squeezing(1000).unwrap();
            o.xi2_opt * 1000.0 / 4.0
        };
        assert_relative_eq!(r1000, 0.976, epsilon = 2e-3);
        let r10000 = {
            let o = optimal_squeezing(10_000).unwrap();
            o.xi2_opt * 10_000.0 / 4.0
        };
        assert_relative_eq!(r10000, 0.9976, epsilon = 2e-3);
        assert!((r10000 - 1.0).abs() < (r1000 - 1.0).abs());
    }

    #[test]
    fn rejections() {
        assert!(MomentParams::new(0, 0.2, 1.0, 0.0).is_err());
        assert!(MomentParams::new(10, 1.0, 1.0, 0.0).is_err());
        assert!(MomentParams::new(10, 0.2, 0.0, 0.0).is_err());
        assert!(MomentParams::new(10, 0.2, 1.0, -0.5).is_err());
        assert!(xi2_linearized(10, 1.0).is_err());
        // mean spin collapses once N cos(2t) <= 2 sin^2(t)
        let p = MomentParams::new(2, 0.999, 1.0, 0.0);
        assert!(p.is_ok());
        assert!(fixed_points(&p.unwrap()).is_err());
        let p2 = MomentParams::new(10, 0.2, 1.0, 0.1).unwrap();
        assert!(moment_trajectories(&p2, &[0.0], None).is_err());
    }
}
