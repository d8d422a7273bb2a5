//! Radial ground states of `-ΔQ + c_TF Q^{7/3} - Q^{5/3} = -μQ` on R³.
//!
//! The equation is integrated for `u = rQ`, which removes the coordinate
//! singularity: `u'' = r(c_TF Q^{7/3} - Q^{5/3} + μQ)` with `u(0) = 0` and
//! `u'(0) = Q(0)`. The shooting value `Q(0)` is bisected between the two
//! failure modes of a non-ground-state trajectory: crossing zero (too much
//! energy) and turning back up before reaching zero (too little). The
//! bracket starts at the positive root of the Pohozaev primitive
//! `G_μ(y) = -(3/10)c_TF y^{10/3} + (3/8)y^{8/3} - (μ/2)y²` and at the upper
//! zero of `F_μ(y) = -c_TF y^{7/3} + y^{5/3} - μy`.
//!
//! Once the two bracketing trajectories separate, the profile is continued by
//! the exact far-field solution `A e^{-√μ r}/r`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tridiag::SymTridiagonal;

/// Upper end `15/(64 c_TF)` of the window of admissible multipliers.
pub fn mu_star(c_tf: f64) -> f64 {
    15.0 / (64.0 * c_tf)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShootControls {
    /// Step in units of the far-field length `1/√μ`.
    pub step_scale: f64,
    /// Relative separation of the bracketing trajectories that ends the
    /// trusted part of the integration.
    pub match_split: f64,
    /// The sampled profile is extended until `Q < tail_floor·Q(0)`.
    pub tail_floor: f64,
    pub max_bisections: usize,
    /// Smallest outer radius of the returned grid.
    pub r_floor: f64,
    /// Outer radius in units of `1/√μ`.
    pub r_scale: f64,
}

impl Default for ShootControls {
    fn default() -> Self {
        Self {
            step_scale: 4e-3,
            match_split: 1e-6,
            tail_floor: 1e-11,
            max_bisections: 400,
            r_floor: 30.0,
            r_scale: 12.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RadialSolution {
    pub c_tf: f64,
    pub mu: f64,
    /// Uniform grid spacing of `r_grid`.
    pub step: f64,
    pub r_grid: Vec<f64>,
    pub q_values: Vec<f64>,
    /// `Q'(r)` on the same grid.
    pub dq_values: Vec<f64>,
    pub q0: f64,
    /// `4π∫ r² Q² dr`
    pub mass: f64,
    pub energy_j: f64,
    /// `4π∫ r² |Q'|² dr`
    pub gradient_sq: f64,
    pub pohozaev_residual: f64,
    pub decay_rate: f64,
    /// Radius where the integrated profile hands over to the far-field form.
    pub r_match: f64,
}

impl RadialSolution {
    pub fn r_max(&self) -> f64 {
        *self.r_grid.last().unwrap()
    }

    pub fn density(&self) -> Vec<f64> {
        self.q_values.iter().map(|q| q * q).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassCurvePoint {
    pub mu: f64,
    pub mass: f64,
    pub energy_j: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Fate {
    CrossesZero,
    TurnsUp,
    /// Reached the integration limit still decaying.
    Undecided,
}

/// Samples of `u`, `u'` and the running quadratures of one trajectory.
struct Trajectory {
    u: Vec<f64>,
    v: Vec<f64>,
    /// Running integrals `[∫(u'-u/r)², ∫u², ∫r²|Q|^{10/3}, ∫r²|Q|^{8/3}]`.
    acc: Vec<[f64; 4]>,
    /// `(Q, Q′)` on the analytic plateau prefix, exact where `u/r` would round.
    plateau: Vec<(f64, f64)>,
    fate: Fate,
}

/// Radii, `u = rQ` samples, quadrature accumulators and exact plateau values.
type Prefix = (Vec<f64>, Vec<f64>, Vec<[f64; 4]>, Vec<(f64, f64)>);

struct Shooter {
    c_tf: f64,
    mu: f64,
    h: f64,
}

impl Shooter {
    #[inline]
    fn q_of(r: f64, u: f64, q0: f64) -> f64 {
        if r == 0.0 {
            q0
        } else {
            u / r
        }
    }

    /// Right-hand side of the 6-dimensional system (u, v, accumulators).
    #[inline]
    fn rhs(&self, r: f64, y: &[f64; 6], q0: f64) -> [f64; 6] {
        let (u, v) = (y[0], y[1]);
        let q = Self::q_of(r, u, q0);
        let t = q.abs().cbrt();
        let t2 = t * t;
        // signed powers: the odd extension of the nonlinearity
        let q7_3 = q * t2 * t2;
        let q5_3 = q * t2;
        let dv = r * (self.c_tf * q7_3 - q5_3 + self.mu * q);
        let grad = if r == 0.0 { 0.0 } else { v - u / r };
        let r2 = r * r;
        let q2 = q * q;
        [v, dv, grad * grad, u * u, r2 * q2 * t2 * t2, r2 * q2 * t2]
    }

    /// Initial samples for a start at `r = 0` or on the linearized plateau.
    fn prefix(&self, start: &Start) -> Prefix {
        match *start {
            Start::Center { q0 } => (vec![0.0], vec![q0], vec![[0.0; 4]], Vec::new()),
            Start::Plateau {
                y_plus,
                gamma,
                log_eps,
                steps,
            } => {
                let h = self.h;
                let mut u = Vec::with_capacity(steps + 4096);
                let mut v = Vec::with_capacity(steps + 4096);
                let mut integrands: Vec<[f64; 4]> = Vec::with_capacity(steps + 1);
                let mut plateau = Vec::with_capacity(steps + 1);
                for i in 0..=steps {
                    let r = i as f64 * h;
                    let (q, dq) = plateau_profile(r, y_plus, gamma, log_eps);
                    plateau.push((q, dq));
                    u.push(r * q);
                    v.push(q + r * dq);
                    let t2 = q.cbrt().powi(2);
                    let r2q2 = r * r * q * q;
                    integrands.push([(r * dq).powi(2), r2q2, r2q2 * t2 * t2, r2q2 * t2]);
                }
                // cumulative trapezoid, with the Simpson value at the hand-over point
                let mut acc = vec![[0.0; 4]; steps + 1];
                for i in 1..=steps {
                    for k in 0..4 {
                        acc[i][k] =
                            acc[i - 1][k] + 0.5 * h * (integrands[i - 1][k] + integrands[i][k]);
                    }
                }
                for k in 0..4 {
                    let col: Vec<f64> = integrands.iter().map(|row| row[k]).collect();
                    acc[steps][k] = simpson(&col, h);
                }
                (u, v, acc, plateau)
            }
        }
    }

    fn integrate(&self, start: &Start, max_steps: usize) -> Trajectory {
        let h = self.h;
        let q0 = match *start {
            Start::Center { q0 } => q0,
            Start::Plateau { y_plus, .. } => y_plus,
        };
        let (mut u, mut v, mut acc, plateau) = self.prefix(start);
        let first = u.len() - 1;
        let a = acc[first];
        let mut y = [u[first], v[first], a[0], a[1], a[2], a[3]];
        let mut fate = Fate::Undecided;
        for step in first..max_steps.max(first + 1) {
            let r = step as f64 * h;
            let k1 = self.rhs(r, &y, q0);
            let k2 = self.rhs(r + 0.5 * h, &add(&y, &k1, 0.5 * h), q0);
            let k3 = self.rhs(r + 0.5 * h, &add(&y, &k2, 0.5 * h), q0);
            let k4 = self.rhs(r + h, &add(&y, &k3, h), q0);
            for i in 0..6 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            let r_next = r + h;
            u.push(y[0]);
            v.push(y[1]);
            acc.push([y[2], y[3], y[4], y[5]]);
            let q = y[0] / r_next;
            let dq = (y[1] - q) / r_next;
            if q <= 0.0 {
                fate = Fate::CrossesZero;
                break;
            }
            if dq > 0.0 {
                fate = Fate::TurnsUp;
                break;
            }
        }
        Trajectory {
            u,
            v,
            acc,
            plateau,
            fate,
        }
    }
}

/// How a trajectory is initialized.
#[derive(Clone, Copy, Debug)]
enum Start {
    /// Regular center with `Q(0) = q0`.
    Center { q0: f64 },
    /// `Q = y₊ − e^{log_eps} sinh(γr)/(γr)` up to `r = steps·h`.
    Plateau {
        y_plus: f64,
        gamma: f64,
        log_eps: f64,
        steps: usize,
    },
}

/// `ln(sinh(x)/x)` without overflow.
fn ln_sinhc(x: f64) -> f64 {
    if x < 0.1 {
        let x2 = x * x;
        x2 * (1.0 / 6.0 - x2 * (1.0 / 180.0 - x2 / 2835.0))
    } else if x < 20.0 {
        (x.sinh() / x).ln()
    } else {
        x + (-(-2.0 * x).exp()).ln_1p() - std::f64::consts::LN_2 - x.ln()
    }
}

/// Linearized plateau profile and its derivative.
fn plateau_profile(r: f64, y_plus: f64, gamma: f64, log_eps: f64) -> (f64, f64) {
    let x = gamma * r;
    let delta = (log_eps + ln_sinhc(x)).exp();
    // d/dr [sinh(x)/x] / [sinh(x)/x] = γ(coth x − 1/x)
    let ratio = if x < 0.1 {
        let x2 = x * x;
        gamma * x * (1.0 / 3.0 - x2 * (1.0 / 45.0 - 2.0 * x2 / 945.0))
    } else {
        gamma * (1.0 / x.tanh() - 1.0 / x)
    };
    (y_plus - delta, -delta * ratio)
}

/// Smallest `x` with `ln(sinh(x)/x) ≥ target`.
fn solve_ln_sinhc(target: f64) -> f64 {
    let (mut a, mut b) = (0.0, target + (2.0 * target + 2.0).ln() + 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if ln_sinhc(mid) < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    b
}

#[inline]
fn add(y: &[f64; 6], k: &[f64; 6], s: f64) -> [f64; 6] {
    let mut out = *y;
    for i in 0..6 {
        out[i] += s * k[i];
    }
    out
}

/// Positive roots of `G_μ` (lower) and `F_μ` (upper) bracketing `Q(0)`.
pub fn shooting_bracket(mu: f64, c_tf: f64) -> Option<(f64, f64)> {
    // G_μ(y)/y² = -(3/10)c t² + (3/8)t - μ/2 with t = y^{2/3}
    let disc_g = 9.0 / 64.0 - 0.6 * c_tf * mu;
    // F_μ(y)/y = -c t² + t - μ
    let disc_f = 1.0 - 4.0 * c_tf * mu;
    if disc_g <= 0.0 || disc_f <= 0.0 || mu <= 0.0 {
        return None;
    }
    let t_lo = (3.0 / 8.0 - disc_g.sqrt()) / (0.6 * c_tf);
    let t_hi = (1.0 + disc_f.sqrt()) / (2.0 * c_tf);
    Some((t_lo.powf(1.5), t_hi.powf(1.5)))
}

/// Pohozaev primitive `G_μ`.
pub fn pohozaev_primitive(y: f64, mu: f64, c_tf: f64) -> f64 {
    let t2 = y.abs().cbrt().powi(2);
    let y2 = y * y;
    -0.3 * c_tf * y2 * t2 * t2 + 0.375 * y2 * t2 - 0.5 * mu * y2
}

pub fn shoot(mu: f64, c_tf: f64, controls: &ShootControls) -> Result<RadialSolution> {
    if !(c_tf > 0.0) {
        return Err(Error::Domain(format!("c_tf must be positive, got {c_tf}")));
    }
    let ms = mu_star(c_tf);
    if !(mu > 0.0) || mu >= ms {
        return Err(Error::NoSolutionInWindow { mu, mu_star: ms });
    }
    let (y_lo, y_plus) =
        shooting_bracket(mu, c_tf).ok_or(Error::NoSolutionInWindow { mu, mu_star: ms })?;
    let kappa = mu.sqrt();
    let h = controls.step_scale / kappa;
    let shooter = Shooter { c_tf, mu, h };
    // generous cap: plateau solutions near μ* linger before decaying
    let max_steps = ((400.0 / kappa + 2000.0) / h) as usize;
    let r_cap = max_steps as f64 * h;

    // Shooting parameter t = ln(y₊ − Q(0)). Near μ* the ground state sits
    // on a plateau at y₊ and Q(0) is exponentially close to it, so small
    // distances start from the linearized plateau instead of r = 0.
    let t2p = y_plus.cbrt().powi(2);
    let gamma = (7.0 / 3.0 * c_tf * t2p * t2p - 5.0 / 3.0 * t2p + mu).sqrt();
    let log_switch = (1e-7 * y_plus).ln();
    let start_for = |t: f64| -> Start {
        if t >= log_switch {
            Start::Center {
                q0: y_plus - t.exp(),
            }
        } else {
            let x = solve_ln_sinhc(log_switch - t);
            let mut steps = (x / gamma / h).ceil() as usize;
            steps += steps % 2;
            Start::Plateau {
                y_plus,
                gamma,
                log_eps: t,
                steps,
            }
        }
    };
    let mut t_hi = (y_plus - y_lo).ln();
    let mut t_lo = log_switch - gamma * r_cap;

    let mut lo_traj: Option<(Trajectory, f64)> = None;
    let mut hi_traj: Option<Trajectory> = None;
    for _ in 0..controls.max_bisections {
        let mid = 0.5 * (t_lo + t_hi);
        if mid <= t_lo || mid >= t_hi {
            break;
        }
        let traj = shooter.integrate(&start_for(mid), max_steps);
        match traj.fate {
            Fate::CrossesZero => {
                t_lo = mid;
                hi_traj = Some(traj);
            }
            Fate::TurnsUp => {
                t_hi = mid;
                lo_traj = Some((traj, mid));
            }
            Fate::Undecided => {
                t_hi = mid;
                lo_traj = Some((traj, mid));
                break;
            }
        }
    }
    let ((lo_traj, t_star), hi_traj) = match (lo_traj, hi_traj) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::BisectionCollapse {
                q0: y_plus - (0.5 * (t_lo + t_hi)).exp(),
            })
        }
    };
    let q0 = y_plus - t_star.exp();

    // trusted region: until the two bracketing trajectories split
    let common = lo_traj.u.len().min(hi_traj.u.len());
    let mut m = common - 1;
    for i in 1..common {
        let (a, b) = (lo_traj.u[i], hi_traj.u[i]);
        if (a - b).abs() > controls.match_split * a.abs().max(b.abs()) {
            m = i.saturating_sub(1);
            break;
        }
    }
    // never hand over past the turning point of the lower trajectory
    while m > 1 && {
        let r = m as f64 * h;
        let q = lo_traj.u[m] / r;
        (lo_traj.v[m] - q) / r >= 0.0
    } {
        m -= 1;
    }
    let r_match = m as f64 * h;
    let q_match = lo_traj.u[m] / r_match;
    if m < 10 || q_match > 1e-3 * q0 {
        return Err(Error::BisectionCollapse { q0 });
    }

    let r_max = controls
        .r_floor
        .max(controls.r_scale / kappa)
        .max(r_match + (q_match / (controls.tail_floor * q0)).ln().max(0.0) / kappa);
    let n_pts = (r_max / h).ceil() as usize + 1;
    let mut r_grid = Vec::with_capacity(n_pts);
    let mut q_values = Vec::with_capacity(n_pts);
    let mut dq_values = Vec::with_capacity(n_pts);
    for i in 0..n_pts {
        let r = i as f64 * h;
        r_grid.push(r);
        if i == 0 {
            q_values.push(q0);
            dq_values.push(0.0);
        } else if i < lo_traj.plateau.len().min(m + 1) {
            let (q, dq) = lo_traj.plateau[i];
            q_values.push(q);
            dq_values.push(dq);
        } else if i <= m {
            let q = lo_traj.u[i] / r;
            q_values.push(q);
            dq_values.push((lo_traj.v[i] - q) / r);
        } else {
            let q = q_match * (r_match / r) * (-kappa * (r - r_match)).exp();
            q_values.push(q);
            dq_values.push(-q * (kappa + 1.0 / r));
        }
    }

    // quadratures: integrated part from the accumulators, tail by Simpson
    let [grad_in, mass_in, p10_in, p8_in] = lo_traj.acc[m];
    let tail = |f: &dyn Fn(usize) -> f64| simpson(&(m..n_pts).map(f).collect::<Vec<_>>(), h);
    let grad_tail = tail(&|i| (r_grid[i] * dq_values[i]).powi(2));
    let mass_tail = tail(&|i| (r_grid[i] * q_values[i]).powi(2));
    let p10_tail = tail(&|i| r_grid[i].powi(2) * q_values[i].powf(10.0 / 3.0));
    let p8_tail = tail(&|i| r_grid[i].powi(2) * q_values[i].powf(8.0 / 3.0));
    let four_pi = 4.0 * PI;
    let grad = four_pi * (grad_in + grad_tail);
    let mass = four_pi * (mass_in + mass_tail);
    let p10 = four_pi * (p10_in + p10_tail);
    let p8 = four_pi * (p8_in + p8_tail);
    let energy_j = grad + 0.6 * c_tf * p10 - 0.75 * p8;
    let lhs = 0.5 * grad;
    let rhs = 3.0 * (-0.3 * c_tf * p10 + 0.375 * p8 - 0.5 * mu * mass);
    let pohozaev_residual = (lhs - rhs).abs() / lhs.abs().max(rhs.abs());

    let decay_rate = fit_decay_rate(&r_grid[..=m], &q_values[..=m], mu).unwrap_or(f64::NAN);

    Ok(RadialSolution {
        c_tf,
        mu,
        step: h,
        r_grid,
        q_values,
        dq_values,
        q0,
        mass,
        energy_j,
        gradient_sq: grad,
        pohozaev_residual,
        decay_rate,
        r_match,
    })
}

/// Least-squares slope of `-ln(rQ)` over the far field of the integrated
/// profile (`Q/Q(0)` below `1e-4`).
fn fit_decay_rate(r: &[f64], q: &[f64], mu: f64) -> Option<f64> {
    // far field: the nonlinearity is negligible once Q^{2/3} ≪ μ
    let far = |qv: f64| qv > 0.0 && qv.cbrt().powi(2) <= 0.02 * mu;
    let mut pts: Vec<(f64, f64)> = r
        .iter()
        .zip(q)
        .skip(1)
        .filter(|(_, &qv)| far(qv))
        .map(|(&rv, &qv)| (rv, (rv * qv).ln()))
        .collect();
    if pts.len() < 8 {
        let take = (r.len() / 20).max(8).min(r.len().saturating_sub(1));
        pts = r[r.len() - take..]
            .iter()
            .zip(&q[q.len() - take..])
            .filter(|(_, &qv)| qv > 0.0)
            .map(|(&rv, &qv)| (rv, (rv * qv).ln()))
            .collect();
    }
    if pts.len() < 8 {
        return None;
    }
    let (slope, _) = linear_fit(&pts);
    Some(-slope)
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Composite Simpson rule on uniform samples (trapezoid on a trailing odd
/// interval).
pub fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    if n < 2 {
        return 0.0;
    }
    let intervals = n - 1;
    let even = intervals - intervals % 2;
    let mut s = 0.0;
    let mut i = 0;
    while i + 2 <= even {
        s += f[i] + 4.0 * f[i + 1] + f[i + 2];
        i += 2;
    }
    s *= h / 3.0;
    if even < intervals {
        s += 0.5 * h * (f[n - 2] + f[n - 1]);
    }
    s
}

/// Shoots at each `μ`; points are returned sorted by `μ` with failures
/// reported separately instead of aborting the sweep.
/// `count` points in `(0, μ*)`, geometric in `μ` from `5e-4·μ*` to `μ*/2` and
/// geometric in `μ* − μ` from `0.4·μ*` down to `1e-3·μ*`. Both asymptotic
/// regimes of the mass curve are sampled densely.
pub fn mu_grid(c_tf: f64, count: usize) -> Vec<f64> {
    let ms = mu_star(c_tf);
    let low = count / 2;
    let high = count - low;
    let geom = |a: f64, b: f64, i: usize, n: usize| {
        if n <= 1 {
            a
        } else {
            a * (b / a).powf(i as f64 / (n - 1) as f64)
        }
    };
    let mut mus: Vec<f64> = (0..low).map(|i| ms * geom(5e-4, 0.5, i, low)).collect();
    mus.extend((0..high).map(|i| ms * (1.0 - geom(0.4, 1e-3, i, high))));
    mus
}

pub fn mass_curve(
    c_tf: f64,
    mu_list: &[f64],
    controls: &ShootControls,
) -> (Vec<MassCurvePoint>, Vec<(f64, Error)>) {
    let mut mus = mu_list.to_vec();
    mus.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut points = Vec::with_capacity(mus.len());
    let mut failures = Vec::new();
    for mu in mus {
        match shoot(mu, c_tf, controls) {
            Ok(sol) => points.push(MassCurvePoint {
                mu,
                mass: sol.mass,
                energy_j: sol.energy_j,
            }),
            Err(e) => failures.push((mu, e)),
        }
    }
    (points, failures)
}

/// Solution of mass `λ` and whether the bracketing curve was non-monotone.
#[derive(Clone, Debug)]
pub struct MassSolve {
    pub solution: RadialSolution,
    pub monotone: bool,
}

/// Inverts `μ ↦ M(μ)` by bisection. When the sampled curve is not monotone
/// every crossing is refined and the lowest-energy candidate wins.
pub fn solve_for_mass(lambda: f64, c_tf: f64, controls: &ShootControls) -> Result<MassSolve> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!(
            "mass must be positive, got {lambda}"
        )));
    }
    let ms = mu_star(c_tf);
    // geometric in μ near 0 and in μ*-μ near μ*
    let mut mus: Vec<f64> = (1..=16)
        .map(|i| ms * 0.5 * (1e-3f64).powf(1.0 - i as f64 / 16.0))
        .collect();
    mus.extend((0..16).map(|i| ms * (1.0 - 0.5 * (0.01f64).powf(i as f64 / 15.0))));
    mus.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let (curve, _) = mass_curve(c_tf, &mus, controls);
    if curve.is_empty() {
        return Err(Error::MassOutOfReach {
            lambda,
            max_mass: 0.0,
        });
    }
    let monotone = curve.windows(2).all(|w| w[1].mass > w[0].mass);
    let max_mass = curve.iter().map(|p| p.mass).fold(0.0, f64::max);
    let min_mass = curve.iter().map(|p| p.mass).fold(f64::INFINITY, f64::min);

    let mut brackets: Vec<(f64, f64)> = curve
        .windows(2)
        .filter(|w| (w[0].mass - lambda) * (w[1].mass - lambda) <= 0.0)
        .map(|w| (w[0].mu, w[1].mu))
        .collect();
    if brackets.is_empty() {
        if lambda > max_mass {
            return Err(Error::MassOutOfReach { lambda, max_mass });
        }
        if lambda < min_mass {
            // below the first sample: M(μ) → 0 as μ → 0
            brackets.push((curve[0].mu * 1e-3, curve[0].mu));
        }
    }
    if monotone {
        brackets.truncate(1);
    }
    let mut best: Option<RadialSolution> = None;
    for (a, b) in brackets {
        let sol = refine_mass(a, b, lambda, c_tf, controls)?;
        if best.as_ref().is_none_or(|bst| sol.energy_j < bst.energy_j) {
            best = Some(sol);
        }
    }
    let solution = best.ok_or(Error::MassOutOfReach { lambda, max_mass })?;
    Ok(MassSolve { solution, monotone })
}

/// Illinois false position on `ln M(μ) − ln λ` inside `[a, b]`.
fn refine_mass(
    mut a: f64,
    mut b: f64,
    lambda: f64,
    c_tf: f64,
    controls: &ShootControls,
) -> Result<RadialSolution> {
    let target = lambda.ln();
    let eval = |mu: f64| shoot(mu, c_tf, controls).map(|s| (s.mass.ln() - target, s));
    let (mut fa, sa) = eval(a)?;
    let (mut fb, sb) = eval(b)?;
    let mut best = if fa.abs() < fb.abs() { sa } else { sb };
    if fa * fb > 0.0 {
        // bracket below the first sample: M(μ) → 0 as μ → 0
        while fa > 0.0 {
            b = a;
            fb = fa;
            a *= 1e-2;
            fa = eval(a)?.0;
        }
    }
    let mut side = 0i8;
    for _ in 0..200 {
        if (best.mass - lambda).abs() <= 1e-10 * lambda || (b - a) <= 1e-15 * b {
            break;
        }
        let mid = (a * fb - b * fa) / (fb - fa);
        let mid = if mid > a && mid < b {
            mid
        } else {
            0.5 * (a + b)
        };
        let (f, s) = eval(mid)?;
        best = s;
        if (f < 0.0) == (fa < 0.0) {
            a = mid;
            fa = f;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = mid;
            fb = f;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    Ok(best)
}

/// Coulomb self-energy `(1/2)∬ρρ/|x-y|` and attraction `∫ρ/|x|` of a radial
/// density sampled on a uniform grid starting at `r = 0`.
pub fn radial_coulomb(r: &[f64], rho: &[f64]) -> (f64, f64) {
    let n = r.len();
    let h = r[1] - r[0];
    // inner(r) = ∫_0^r s²ρ ds, outer(r) = ∫_r^∞ sρ ds by cumulative trapezoid
    let mut inner = vec![0.0; n];
    for i in 1..n {
        inner[i] = inner[i - 1] + 0.5 * h * (r[i - 1].powi(2) * rho[i - 1] + r[i].powi(2) * rho[i]);
    }
    let mut outer = vec![0.0; n];
    for i in (0..n - 1).rev() {
        outer[i] = outer[i + 1] + 0.5 * h * (r[i] * rho[i] + r[i + 1] * rho[i + 1]);
    }
    let four_pi = 4.0 * PI;
    let integrand: Vec<f64> = (0..n)
        .map(|i| {
            let phi = if i == 0 {
                four_pi * outer[0]
            } else {
                four_pi * (inner[i] / r[i] + outer[i])
            };
            r[i].powi(2) * rho[i] * phi
        })
        .collect();
    let hartree = 0.5 * four_pi * simpson(&integrand, h);
    let attraction = four_pi * outer[0];
    (hartree, attraction)
}

/// `S = (1/2)D(Q², Q²) - z∫Q²/|x|` by Newton's theorem.
pub fn s_lambda(sol: &RadialSolution, z: f64) -> f64 {
    let (hartree, attraction) = radial_coulomb(&sol.r_grid, &sol.density());
    hartree - z * attraction
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Linearization {
    /// `L⁺ = -Δ + (7/3)c_TF Q^{4/3} - (5/3)Q^{2/3} + μ`
    Plus,
    /// `L⁻ = -Δ + c_TF Q^{4/3} - Q^{2/3} + μ`
    Minus,
}

/// Finite-difference matrix of the angular-momentum-`ℓ` sector in `u = rφ`
/// on the interior points of the solution grid, Dirichlet at both ends.
pub fn radial_operator(sol: &RadialSolution, ell: u32, which: Linearization) -> SymTridiagonal {
    let h = sol.step;
    let inv_h2 = 1.0 / (h * h);
    let centrifugal = (ell * (ell + 1)) as f64;
    let n = sol.r_grid.len();
    let (a, b) = match which {
        Linearization::Plus => (7.0 / 3.0, 5.0 / 3.0),
        Linearization::Minus => (1.0, 1.0),
    };
    let diag: Vec<f64> = (1..n - 1)
        .map(|i| {
            let r = sol.r_grid[i];
            let t2 = sol.q_values[i].abs().cbrt().powi(2);
            2.0 * inv_h2 + centrifugal / (r * r) + a * sol.c_tf * t2 * t2 - b * t2 + sol.mu
        })
        .collect();
    let off = vec![-inv_h2; diag.len().saturating_sub(1)];
    SymTridiagonal::new(diag, off)
}

/// Lowest `count` eigenvalues of the chosen radial linearization.
pub fn linearized_spectrum(
    sol: &RadialSolution,
    ell: u32,
    which: Linearization,
    count: usize,
) -> Vec<f64> {
    radial_operator(sol, ell, which).lowest_eigenvalues(count)
}

/// Number of negative eigenvalues of the chosen radial linearization.
pub fn negative_count(sol: &RadialSolution, ell: u32, which: Linearization) -> usize {
    radial_operator(sol, ell, which).count_below(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mu_star_values() {
        assert_eq!(mu_star(1.0), 0.234375);
        assert_eq!(mu_star(2.0), 0.1171875);
        assert!(mu_star(10.0) < mu_star(5.0));
    }

    #[test]
    fn outside_window_is_rejected() {
        let c = ShootControls::default();
        assert!(matches!(
            shoot(0.24, 1.0, &c),
            Err(Error::NoSolutionInWindow { .. })
        ));
        assert!(matches!(
            shoot(-0.1, 1.0, &c),
            Err(Error::NoSolutionInWindow { .. })
        ));
    }

    #[test]
    fn bracket_roots() {
        let (lo, hi) = shooting_bracket(0.1, 1.0).unwrap();
        assert!(pohozaev_primitive(lo, 0.1, 1.0).abs() < 1e-12);
        let f = |y: f64| -y.powf(7.0 / 3.0) + y.powf(5.0 / 3.0) - 0.1 * y;
        assert!(f(hi).abs() < 1e-12);
        assert!(lo < hi);
        assert!(shooting_bracket(0.25, 1.0).is_none());
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        let h = 0.1;
        let f: Vec<f64> = (0..11).map(|i| (i as f64 * h).powi(3)).collect();
        assert!((simpson(&f, h) - 0.25).abs() < 1e-13);
    }

    #[test]
    fn uniform_ball_newton_theorem() {
        let (m, big_r) = (2.0_f64, 1.5_f64);
        let rho0 = m / (4.0 / 3.0 * PI * big_r.powi(3));
        let h = 1e-4;
        let r: Vec<f64> = (0..40_000).map(|i| i as f64 * h).collect();
        // midpoint-smoothed edge keeps the quadrature second order
        let rho: Vec<f64> = r
            .iter()
            .map(|&x| {
                if x < big_r - 0.5 * h {
                    rho0
                } else if x > big_r + 0.5 * h {
                    0.0
                } else {
                    rho0 * (big_r + 0.5 * h - x) / h
                }
            })
            .collect();
        let (hartree, attraction) = radial_coulomb(&r, &rho);
        assert!((hartree - 0.6 * m * m / big_r).abs() < 1e-4 * hartree);
        assert!((attraction - 1.5 * m / big_r).abs() < 1e-4 * attraction);
        let z = 0.7;
        let s = hartree - z * attraction;
        assert!((s - (0.6 * m * m / big_r - 1.5 * z * m / big_r)).abs() < 1e-3);
    }

    #[test]
    fn ln_sinhc_is_continuous_across_branches() {
        for &x in &[0.1, 20.0] {
            let (a, b) = (ln_sinhc(x * (1.0 - 1e-12)), ln_sinhc(x * (1.0 + 1e-12)));
            assert!((a - b).abs() < 1e-9 * b.abs().max(1e-8));
        }
        assert!((ln_sinhc(1.0) - (1.0f64.sinh()).ln()).abs() < 1e-15);
        assert!(ln_sinhc(800.0).is_finite());
    }

    #[test]
    fn solve_ln_sinhc_inverts() {
        for &target in &[1e-3, 0.5, 10.0, 600.0] {
            let x = solve_ln_sinhc(target);
            assert!((ln_sinhc(x) - target).abs() < 1e-9 * target.max(1.0));
        }
    }

    #[test]
    fn plateau_profile_solves_linearized_equation() {
        // δ = ε sinh(γr)/(γr) satisfies δ'' + 2δ'/r = γ²δ
        let (y_plus, gamma, log_eps) = (0.0, 0.3, (1e-9f64).ln());
        let d = |r: f64| y_plus - plateau_profile(r, y_plus, gamma, log_eps).0;
        let (r, h) = (7.0, 1e-3);
        let lap = (d(r + h) - 2.0 * d(r) + d(r - h)) / (h * h) + (d(r + h) - d(r - h)) / (h * r);
        assert!((lap - gamma * gamma * d(r)).abs() < 1e-6 * gamma * gamma * d(r));
        let dq = plateau_profile(r, y_plus, gamma, log_eps).1;
        assert!((dq + (d(r + h) - d(r - h)) / (2.0 * h)).abs() < 1e-6 * dq.abs());
    }

    #[test]
    fn mu_grid_spans_both_ends() {
        let g = mu_grid(1.0, 40);
        let ms = mu_star(1.0);
        assert_eq!(g.len(), 40);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!((g[0] - 5e-4 * ms).abs() < 1e-15);
        assert!((ms - g[39] - 1e-3 * ms).abs() < 1e-12);
    }

    #[test]
    fn shoots_close_to_mu_star() {
        let ms = mu_star(1.0);
        let s = shoot(0.998 * ms, 1.0, &ShootControls::default()).unwrap();
        assert!(s.pohozaev_residual < 1e-6);
        assert!((s.decay_rate / s.mu.sqrt() - 1.0).abs() < 0.02);
        assert!(s.mass > 1e8);
    }
}
