//! Small-scale constrained nonlinear solver: a primal-dual interior-point
//! method with analytic first derivatives, exact (or approximated)
//! Lagrangian Hessians supplied by the problem, and a sparse LU
//! factorization of the KKT system.
//!
//! Problems are stated as
//! ```text
//!     min f(x)   s.t.  g(x) = 0,  h(x) <= 0.
//! ```

use crate::error::{Error, Result};
use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

/// Sparse matrix entry `(row, col, value)`. Duplicate coordinates are summed.
pub type Entry = (usize, usize, f64);

/// A smooth nonlinear program with analytic derivatives.
pub trait Problem {
    fn num_vars(&self) -> usize;
    fn num_eq(&self) -> usize;
    fn num_ineq(&self) -> usize;

    fn objective(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], grad: &mut [f64]);

    fn eq_values(&self, x: &[f64], out: &mut [f64]);
    fn ineq_values(&self, x: &[f64], out: &mut [f64]);

    /// Jacobian of the equality constraints as triplets.
    fn eq_jacobian(&self, x: &[f64], out: &mut Vec<Entry>);
    /// Jacobian of the inequality constraints as triplets.
    fn ineq_jacobian(&self, x: &[f64], out: &mut Vec<Entry>);

    /// Lower triangle (row >= col) of
    /// `obj_scale * grad^2 f + sum lam_eq_i grad^2 g_i + sum lam_ineq_j grad^2 h_j`.
    fn lagrangian_hessian(
        &self,
        x: &[f64],
        obj_scale: f64,
        lam_eq: &[f64],
        lam_ineq: &[f64],
        out: &mut Vec<Entry>,
    );
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Initial barrier parameter; lower it for warm starts near a solution.
    pub mu0: f64,
    /// Print per-iteration diagnostics to stderr.
    pub trace: bool,
}

impl Default for SolveOptions {
    fn default() -> SolveOptions {
        SolveOptions {
            tol: 1e-6,
            max_iter: 1000,
            mu0: 1e-1,
            trace: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub eq_residual: f64,
    pub ineq_violation: f64,
    pub complementarity: f64,
    pub lam_eq: Vec<f64>,
    pub lam_ineq: Vec<f64>,
}

struct Eval {
    obj: f64,
    grad: Vec<f64>,
    g: Vec<f64>,
    h: Vec<f64>,
    jg: Vec<Entry>,
    jh: Vec<Entry>,
}

fn evaluate<P: Problem>(problem: &P, x: &[f64]) -> Eval {
    let mut grad = vec![0.0; problem.num_vars()];
    let mut g = vec![0.0; problem.num_eq()];
    let mut h = vec![0.0; problem.num_ineq()];
    let mut jg = Vec::new();
    let mut jh = Vec::new();
    problem.gradient(x, &mut grad);
    problem.eq_values(x, &mut g);
    problem.ineq_values(x, &mut h);
    problem.eq_jacobian(x, &mut jg);
    problem.ineq_jacobian(x, &mut jh);
    Eval {
        obj: problem.objective(x),
        grad,
        g,
        h,
        jg,
        jh,
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, &x| m.max(x.abs()))
}

/// Solve the problem starting from `x0`.
pub fn solve<P: Problem>(problem: &P, x0: &[f64], opts: &SolveOptions) -> Result<Solution> {
    let nv = problem.num_vars();
    let ng = problem.num_eq();
    let nh = problem.num_ineq();
    assert_eq!(x0.len(), nv);

    let mut x = x0.to_vec();
    let mut ev = evaluate(problem, &x);

    // strictly feasible slack/dual initialization
    let mut s: Vec<f64> = ev.h.iter().map(|&hi| (-hi).max(1e-2)).collect();
    let mut z: Vec<f64> = s.iter().map(|&si| (opts.mu0 / si).clamp(1e-6, 1e4)).collect();
    let mut y = vec![0.0; ng];

    let mut mu = opts.mu0;
    let mu_min = (opts.tol / 100.0).max(1e-9);
    let mut nu = 1.0f64; // merit penalty weight
    let mut delta_last = 0.0;
    let mut best_err = f64::INFINITY;
    let mut stall = 0usize;
    let mut last_alpha = 0.0f64;
    let mut last_alpha_max = 0.0f64;
    let mut prev_obj = f64::INFINITY;
    let mut accept_streak = 0usize;
    let mut diverge_streak = 0usize;

    let dual_residual = |ev: &Eval, y: &[f64], z: &[f64]| -> Vec<f64> {
        let mut r = ev.grad.clone();
        for &(i, j, v) in &ev.jg {
            r[j] += v * y[i];
        }
        for &(i, j, v) in &ev.jh {
            r[j] += v * z[i];
        }
        r
    };

    for iter in 0..opts.max_iter {
        let r_d = dual_residual(&ev, &y, &z);
        let r_h: Vec<f64> = ev.h.iter().zip(&s).map(|(&hi, &si)| hi + si).collect();
        let comp: Vec<f64> = s.iter().zip(&z).map(|(&si, &zi)| si * zi).collect();

        let err_dual = inf_norm(&r_d);
        let err_eq = inf_norm(&ev.g);
        let err_slack = inf_norm(&r_h);
        let err_comp0 = inf_norm(&comp);
        let ineq_violation = ev.h.iter().fold(0.0f64, |m, &hi| m.max(hi));

        // scaled dual tolerance guards against huge multipliers stalling
        let scale = {
            let sum: f64 = y.iter().chain(z.iter()).map(|v| v.abs()).sum();
            (1.0f64).max(sum / (100.0 * (ng + nh).max(1) as f64))
        };
        if err_dual / scale <= opts.tol
            && err_eq <= opts.tol
            && err_slack <= opts.tol
            && err_comp0 <= opts.tol
        {
            return Ok(Solution {
                objective: ev.obj,
                x,
                iterations: iter,
                eq_residual: err_eq,
                ineq_violation: ineq_violation.max(0.0),
                complementarity: err_comp0,
                lam_eq: y,
                lam_ineq: z,
            });
        }

        // acceptable-level termination: duplicate active constraints (e.g.
        // a coast phase collapsing to zero duration) break LICQ and leave
        // the dual residual oscillating while the primal iterate is done;
        // accept after a sustained streak of stagnant, nearly-tight iterates
        let stagnant = (ev.obj - prev_obj).abs() <= 1e-8 * ev.obj.abs().max(1.0);
        prev_obj = ev.obj;
        if stagnant
            && err_dual / scale <= 1e3 * opts.tol
            && err_eq <= 10.0 * opts.tol
            && err_slack <= 10.0 * opts.tol
            && err_comp0 <= 10.0 * opts.tol
        {
            accept_streak += 1;
        } else {
            accept_streak = 0;
        }
        if accept_streak >= 25 {
            return Ok(Solution {
                objective: ev.obj,
                x,
                iterations: iter,
                eq_residual: err_eq,
                ineq_violation: ineq_violation.max(0.0),
                complementarity: err_comp0,
                lam_eq: y,
                lam_ineq: z,
            });
        }

        if opts.trace {
            let imax_rd = (0..nv).max_by(|&a, &b| r_d[a].abs().total_cmp(&r_d[b].abs()));
            let imax_z = (0..nh).max_by(|&a, &b| z[a].total_cmp(&z[b]));
            let imax_y = (0..ng).max_by(|&a, &b| y[a].abs().total_cmp(&y[b].abs()));
            eprintln!(
                "iter {iter}: mu {mu:.2e} dual {err_dual:.2e} eq {err_eq:.2e} slack {err_slack:.2e} comp {err_comp0:.2e} obj {:.6} a {last_alpha:.1e}/{last_alpha_max:.1e} d {delta_last:.1e} | rd@{:?} z@{:?}={:.2e} y@{:?}={:.2e}",
                ev.obj,
                imax_rd,
                imax_z,
                imax_z.map(|i| z[i]).unwrap_or(0.0),
                imax_y,
                imax_y.map(|i| y[i]).unwrap_or(0.0),
            );
        }
        // barrier update when the perturbed KKT conditions are met, or when
        // progress on them stalls (degenerate multipliers can keep the dual
        // residual oscillating without blocking primal convergence)
        let err_comp_mu = comp.iter().fold(0.0f64, |m, &c| m.max((c - mu).abs()));
        let err_mu = (err_dual / scale)
            .max(err_eq)
            .max(err_slack)
            .max(err_comp_mu);
        if err_mu < 0.95 * best_err {
            best_err = err_mu;
            stall = 0;
        } else {
            stall += 1;
        }
        if err_mu <= 10.0 * mu || stall >= 8 {
            mu = mu_min.max((0.2 * mu).min(mu.powf(1.5)));
            best_err = f64::INFINITY;
            stall = 0;
            nu = 1.0; // resize the merit penalty from the refreshed multipliers
            // re-center the bound multipliers for the new barrier problem;
            // without this, degenerate corners leave s*z far from mu and
            // the fraction-to-boundary rule strangles every later step
            for k in 0..nh {
                z[k] = z[k].clamp(mu / (100.0 * s[k]), 100.0 * mu / s[k]).max(1e-12);
            }
            // refresh the equality multipliers by least squares; degenerate
            // constraint gradients let them drift arbitrarily far otherwise
            if ng > 0 {
                let mut r = ev.grad.clone();
                for &(i, j, v) in &ev.jh {
                    r[j] += v * z[i];
                }
                // the damping keeps multipliers of near-degenerate rows bounded
                let mut ata = Mat::zeros(ng, ng);
                for k in 0..ng {
                    ata[(k, k)] = 1e-4;
                }
                for &(i1, j1, v1) in &ev.jg {
                    for &(i2, j2, v2) in &ev.jg {
                        if j1 == j2 {
                            ata[(i1, i2)] += v1 * v2;
                        }
                    }
                }
                let mut rhs = Mat::zeros(ng, 1);
                for &(i, j, v) in &ev.jg {
                    rhs[(i, 0)] -= v * r[j];
                }
                let y_ls = ata.full_piv_lu().solve(&rhs);
                if (0..ng).all(|k| y_ls[(k, 0)].is_finite()) {
                    for k in 0..ng {
                        y[k] = y_ls[(k, 0)];
                    }
                }
            }
        }

        // Lagrangian Hessian
        let mut hess = Vec::new();
        problem.lagrangian_hessian(&x, 1.0, &y, &z, &mut hess);

        // assemble and factor the full primal-dual KKT system
        //   [ W + dI   Jg^T      Jh^T  ] [dx]   [ -r_d        ]
        //   [ Jg       -dc I     0     ] [dy] = [ -g          ]
        //   [ Jh       0         -S/Z  ] [dz]   [ -h - mu/z   ]
        let dim = nv + ng + nh;
        let mut delta_c = 1e-8;
        // a strictly positive primal regularization keeps the system
        // quasi-definite even when the Hessian block is rank deficient
        let mut delta = 1e-8f64.max(delta_last / 3.0);
        let mut step = None;
        for _attempt in 0..16 {
            let mut trips: Vec<Triplet<usize, usize, f64>> =
                Vec::with_capacity(2 * (hess.len() + ev.jg.len() + ev.jh.len()) + dim);
            for &(i, j, v) in &hess {
                trips.push(Triplet::new(i, j, v));
                if i != j {
                    trips.push(Triplet::new(j, i, v));
                }
            }
            for k in 0..nv {
                trips.push(Triplet::new(k, k, delta));
            }
            for &(i, j, v) in &ev.jg {
                trips.push(Triplet::new(nv + i, j, v));
                trips.push(Triplet::new(j, nv + i, v));
            }
            for k in 0..ng {
                trips.push(Triplet::new(nv + k, nv + k, -delta_c));
            }
            for &(i, j, v) in &ev.jh {
                trips.push(Triplet::new(nv + ng + i, j, v));
                trips.push(Triplet::new(j, nv + ng + i, v));
            }
            for k in 0..nh {
                trips.push(Triplet::new(
                    nv + ng + k,
                    nv + ng + k,
                    -(s[k] / z[k].max(1e-12)).max(1e-14),
                ));
            }
            let kkt = SparseColMat::try_new_from_triplets(dim, dim, &trips)
                .map_err(|_| Error::SolverDiverged)?;
            let factor =
                std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| kkt.sp_lu()));
            let Ok(Ok(lu)) = factor else {
                delta *= 100.0;
                delta_c = (delta_c * 100.0).min(1e-2);
                continue;
            };
            let mut rhs = Mat::zeros(dim, 1);
            for k in 0..nv {
                rhs[(k, 0)] = -r_d[k];
            }
            for k in 0..ng {
                rhs[(nv + k, 0)] = -ev.g[k];
            }
            for k in 0..nh {
                rhs[(nv + ng + k, 0)] = -ev.h[k] - mu / z[k].max(1e-12);
            }
            let sol = lu.solve(&rhs);
            let d: Vec<f64> = (0..dim).map(|k| sol[(k, 0)]).collect();
            if d.iter().any(|v| !v.is_finite()) {
                delta *= 10.0;
                // a singular constraint block also yields non-finite
                // solutions without failing the factorization
                delta_c = (delta_c * 100.0).min(1e-2);
                continue;
            }
            // require a descent direction for the merit function unless the
            // step is purely restoring feasibility
            let dx = &d[..nv];
            let grad_dot: f64 = ev.grad.iter().zip(dx).map(|(g, d)| g * d).sum();
            let barrier_dot: f64 = {
                let mut acc = 0.0;
                // ds = -(h+s) - Jh dx
                let mut ds = vec![0.0; nh];
                for k in 0..nh {
                    ds[k] = -r_h[k];
                }
                for &(i, j, v) in &ev.jh {
                    ds[i] -= v * dx[j];
                }
                for k in 0..nh {
                    acc += -mu * ds[k] / s[k];
                }
                acc
            };
            let theta: f64 = ev.g.iter().map(|v| v.abs()).sum::<f64>()
                + r_h.iter().map(|v| v.abs()).sum::<f64>();
            if grad_dot + barrier_dot - nu * theta > 0.0 && delta < 1e6 {
                delta *= 10.0;
                continue;
            }
            // the LU factorization reveals no inertia, so verify positive
            // curvature along the step directly; a non-convex direction can
            // look like descent yet blow past the region the model is valid in
            let curvature = {
                let norm2: f64 = dx.iter().map(|v| v * v).sum();
                let mut q = delta * norm2;
                for &(i, j, v) in &hess {
                    q += v * dx[i] * dx[j] * if i == j { 1.0 } else { 2.0 };
                }
                let mut jh_dx = vec![0.0; nh];
                for &(i, j, v) in &ev.jh {
                    jh_dx[i] += v * dx[j];
                }
                for k in 0..nh {
                    q += (z[k].max(1e-12) / s[k]) * jh_dx[k] * jh_dx[k];
                }
                q - 1e-12 * norm2
            };
            if curvature <= 0.0 && delta < 1e6 {
                delta *= 10.0;
                continue;
            }
            step = Some((d, lu));
            break;
        }
        let (d, lu) = step.ok_or(Error::SolverDiverged)?;
        delta_last = delta;

        let dx = d[..nv].to_vec();
        let mut dy = d[nv..nv + ng].to_vec();
        let mut dz = d[nv + ng..].to_vec();
        let mut ds = vec![0.0; nh];
        for k in 0..nh {
            ds[k] = -r_h[k];
        }
        for &(i, j, v) in &ev.jh {
            ds[i] -= v * dx[j];
        }

        // fraction-to-boundary limits
        let ftb = 0.995;
        let mut alpha_max: f64 = 1.0;
        for k in 0..nh {
            if ds[k] < 0.0 {
                alpha_max = alpha_max.min(-ftb * s[k] / ds[k]);
            }
        }
        let mut alpha_z: f64 = 1.0;
        for k in 0..nh {
            if dz[k] < 0.0 {
                alpha_z = alpha_z.min(-ftb * z[k] / dz[k]);
            }
        }

        // merit penalty keeps pace with the multipliers
        let mult_inf = inf_norm(&y)
            .max(inf_norm(&z))
            .max(inf_norm(&dy))
            .max(inf_norm(&dz));
        // runaway equality multipliers that persist across many iterations
        // while the constraints stay violated mean the iterate is wedged
        // against an inconsistent constraint set and will not recover;
        // transient spikes settle via the multiplier refresh instead
        if inf_norm(&y) > 1e7 && err_eq > 100.0 * opts.tol {
            diverge_streak += 1;
            if diverge_streak >= 15 {
                return Err(Error::SolverDiverged);
            }
        } else {
            diverge_streak = 0;
        }
        nu = nu.max(1.2 * mult_inf + 1.0);

        let theta0: f64 = ev.g.iter().map(|v| v.abs()).sum::<f64>()
            + r_h.iter().map(|v| v.abs()).sum::<f64>();
        let barrier0: f64 = -mu * s.iter().map(|si| si.ln()).sum::<f64>();
        let phi0 = ev.obj + barrier0 + nu * theta0;
        let grad_dot: f64 = ev.grad.iter().zip(&dx).map(|(g, d)| g * d).sum();
        let barrier_dot: f64 = s
            .iter()
            .zip(&ds)
            .map(|(&si, &dsi)| -mu * dsi / si)
            .sum();
        let dir_deriv = grad_dot + barrier_dot - nu * theta0;

        let armijo = |alpha: f64, phi_try: f64| -> bool {
            phi_try <= phi0 + 1e-4 * alpha * dir_deriv.min(0.0)
        };
        let merit = |x_try: &[f64], s_try: &[f64]| -> f64 {
            let mut g_try = vec![0.0; ng];
            let mut h_try = vec![0.0; nh];
            problem.eq_values(x_try, &mut g_try);
            problem.ineq_values(x_try, &mut h_try);
            let theta_try: f64 = g_try.iter().map(|v| v.abs()).sum::<f64>()
                + h_try
                    .iter()
                    .zip(s_try)
                    .map(|(&hi, &si)| (hi + si).abs())
                    .sum::<f64>();
            problem.objective(x_try) - mu * s_try.iter().map(|si| si.ln()).sum::<f64>()
                + nu * theta_try
        };

        let mut alpha = alpha_max;
        let mut accepted = false;
        let mut soc_tried = false;
        for _ in 0..40 {
            let x_try: Vec<f64> = x.iter().zip(&dx).map(|(xi, di)| xi + alpha * di).collect();
            let s_try: Vec<f64> = s.iter().zip(&ds).map(|(si, di)| si + alpha * di).collect();
            if x_try.iter().any(|v| !v.is_finite()) {
                return Err(Error::SolverDiverged);
            }
            if s_try.iter().any(|&v| v <= 0.0) {
                alpha *= 0.5;
                continue;
            }
            let phi_try = merit(&x_try, &s_try);
            if armijo(alpha, phi_try) || alpha < 1e-11 {
                for k in 0..nv {
                    x[k] = x_try[k];
                }
                s = s_try;
                accepted = true;
                break;
            }
            if opts.trace && alpha == alpha_max {
                let f_try = problem.objective(&x_try);
                let b_try: f64 = -mu * s_try.iter().map(|si| si.ln()).sum::<f64>();
                let t_try = (phi_try - f_try - b_try) / nu;
                eprintln!(
                    "  reject a={alpha:.2e}: f {:.3e}->{:.3e} barrier {:.3e}->{:.3e} theta {:.3e}->{:.3e} nu {nu:.2e} dd {dir_deriv:.3e}",
                    ev.obj, f_try, barrier0, b_try, theta0, t_try
                );
            }
            // second-order correction: re-solve against the constraint values
            // at the rejected full step so its curvature does not force a
            // crawl near the solution
            if !soc_tried && alpha == alpha_max && alpha_max > 0.9 {
                soc_tried = true;
                let mut g_try = vec![0.0; ng];
                let mut h_try = vec![0.0; nh];
                problem.eq_values(&x_try, &mut g_try);
                problem.ineq_values(&x_try, &mut h_try);
                let mut jg_dx = vec![0.0; ng];
                for &(i, j, v) in &ev.jg {
                    jg_dx[i] += v * dx[j];
                }
                let mut jh_dx = vec![0.0; nh];
                for &(i, j, v) in &ev.jh {
                    jh_dx[i] += v * dx[j];
                }
                let mut rhs = Mat::zeros(dim, 1);
                for k in 0..nv {
                    rhs[(k, 0)] = -r_d[k];
                }
                for k in 0..ng {
                    rhs[(nv + k, 0)] = -g_try[k] + jg_dx[k];
                }
                for k in 0..nh {
                    rhs[(nv + ng + k, 0)] = -h_try[k] + jh_dx[k] - mu / z[k].max(1e-12);
                }
                let sol = lu.solve(&rhs);
                let d2: Vec<f64> = (0..dim).map(|k| sol[(k, 0)]).collect();
                if d2.iter().all(|v| v.is_finite()) {
                    let px = &d2[..nv];
                    let mut ds2 = vec![0.0; nh];
                    for k in 0..nh {
                        // corrected slack update consistent with h at the
                        // trial point: s2 = -(h_try - Jh dx) - Jh px
                        ds2[k] = -(h_try[k] - jh_dx[k] + s[k]);
                    }
                    for &(i, j, v) in &ev.jh {
                        ds2[i] -= v * px[j];
                    }
                    let mut a2: f64 = 1.0;
                    for k in 0..nh {
                        if ds2[k] < 0.0 {
                            a2 = a2.min(-0.995 * s[k] / ds2[k]);
                        }
                    }
                    let x2: Vec<f64> =
                        x.iter().zip(px).map(|(xi, di)| xi + a2 * di).collect();
                    let s2: Vec<f64> =
                        s.iter().zip(&ds2).map(|(si, di)| si + a2 * di).collect();
                    if x2.iter().all(|v| v.is_finite())
                        && s2.iter().all(|&v| v > 0.0)
                        && armijo(a2, merit(&x2, &s2))
                    {
                        x.copy_from_slice(&x2);
                        s = s2;
                        alpha = a2;
                        dy = d2[nv..nv + ng].to_vec();
                        dz = d2[nv + ng..].to_vec();
                        alpha_z = 1.0;
                        for k in 0..nh {
                            if dz[k] < 0.0 {
                                alpha_z = alpha_z.min(-0.995 * z[k] / dz[k]);
                            }
                        }
                        accepted = true;
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(Error::SolverDiverged);
        }
        last_alpha = alpha;
        last_alpha_max = alpha_max;
        // the merit function does not involve the equality multipliers, so
        // they advance with the dual steplength rather than the primal one
        for k in 0..ng {
            y[k] += alpha.max(alpha_z) * dy[k];
        }
        for k in 0..nh {
            // clip multipliers to a wide band around mu/s to keep the
            // primal-dual Hessian consistent with the barrier problem
            let kappa = 1e10;
            z[k] = (z[k] + alpha_z * dz[k])
                .clamp(mu / (kappa * s[k]), kappa * mu / s[k])
                .max(1e-12);
        }
        ev = evaluate(problem, &x);
        if !ev.obj.is_finite() {
            return Err(Error::SolverDiverged);
        }
    }
    Err(Error::MaxIterations(opts.max_iter))
}

/// Maximum relative error between the analytic constraint Jacobians and
/// central finite differences at `x`.
pub fn jacobian_fd_error<P: Problem + ?Sized>(problem: &P, x: &[f64]) -> f64 {
    let nv = problem.num_vars();
    let ng = problem.num_eq();
    let nh = problem.num_ineq();
    let eps = 1e-6;

    let dense = |entries: &[Entry], rows: usize| -> Vec<f64> {
        let mut m = vec![0.0; rows * nv];
        for &(i, j, v) in entries {
            m[i * nv + j] += v;
        }
        m
    };
    let mut jg = Vec::new();
    let mut jh = Vec::new();
    problem.eq_jacobian(x, &mut jg);
    problem.ineq_jacobian(x, &mut jh);
    let jg = dense(&jg, ng);
    let jh = dense(&jh, nh);

    let mut worst = 0.0f64;
    let mut xp = x.to_vec();
    for j in 0..nv {
        let h = eps * (1.0 + x[j].abs());
        xp[j] = x[j] + h;
        let mut gp = vec![0.0; ng];
        let mut hp = vec![0.0; nh];
        problem.eq_values(&xp, &mut gp);
        problem.ineq_values(&xp, &mut hp);
        xp[j] = x[j] - h;
        let mut gm = vec![0.0; ng];
        let mut hm = vec![0.0; nh];
        problem.eq_values(&xp, &mut gm);
        problem.ineq_values(&xp, &mut hm);
        xp[j] = x[j];
        for i in 0..ng {
            let fd = (gp[i] - gm[i]) / (2.0 * h);
            let denom = 1.0f64.max(fd.abs());
            worst = worst.max((jg[i * nv + j] - fd).abs() / denom);
        }
        for i in 0..nh {
            let fd = (hp[i] - hm[i]) / (2.0 * h);
            let denom = 1.0f64.max(fd.abs());
            worst = worst.max((jh[i * nv + j] - fd).abs() / denom);
        }
    }
    worst
}

/// Maximum relative error between the analytic Lagrangian Hessian and a
/// central finite difference of the Lagrangian gradient.
pub fn hessian_fd_error<P: Problem + ?Sized>(
    problem: &P,
    x: &[f64],
    lam_eq: &[f64],
    lam_ineq: &[f64],
) -> f64 {
    let nv = problem.num_vars();
    let eps = 1e-5;
    let lagr_grad = |x: &[f64]| -> Vec<f64> {
        let mut grad = vec![0.0; nv];
        problem.gradient(x, &mut grad);
        let mut jg = Vec::new();
        let mut jh = Vec::new();
        problem.eq_jacobian(x, &mut jg);
        problem.ineq_jacobian(x, &mut jh);
        for &(i, j, v) in &jg {
            grad[j] += v * lam_eq[i];
        }
        for &(i, j, v) in &jh {
            grad[j] += v * lam_ineq[i];
        }
        grad
    };
    let mut entries = Vec::new();
    problem.lagrangian_hessian(x, 1.0, lam_eq, lam_ineq, &mut entries);
    let mut dense = vec![0.0; nv * nv];
    for &(i, j, v) in &entries {
        dense[i * nv + j] += v;
        if i != j {
            dense[j * nv + i] += v;
        }
    }
    let mut worst = 0.0f64;
    let mut xp = x.to_vec();
    for j in 0..nv {
        let h = eps * (1.0 + x[j].abs());
        xp[j] = x[j] + h;
        let gp = lagr_grad(&xp);
        xp[j] = x[j] - h;
        let gm = lagr_grad(&xp);
        xp[j] = x[j];
        for i in 0..nv {
            let fd = (gp[i] - gm[i]) / (2.0 * h);
            let denom = 1.0f64.max(fd.abs());
            worst = worst.max((dense[i * nv + j] - fd).abs() / denom);
        }
    }
    worst
}
