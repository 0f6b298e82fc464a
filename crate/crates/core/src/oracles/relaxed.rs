use crate::error::{Error, Result};
use crate::problem::{objective, residuals, SharingAllocation};
use crate::scenario::SharingProblem;
use crate::CellId;

use nalgebra::{DMatrix, DVector};

const MAX_ITERS: usize = 50_000;
const PROJECTION_MAX_STEPS: usize = 500;
const PROJECTION_TOL: f64 = 1e-13;
const NEWTON_REGULARIZATION: f64 = 1e-12;
const ARMIJO_C: f64 = 1e-4;
const STALL_ROUNDS: usize = 3;
const MAX_TRIAL_MOVE: f64 = 4.0;

/// Output of [`centralized_relaxed`].
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedSolution {
    pub allocation: SharingAllocation,
    pub objective: f64,
    pub iterations: usize,
    /// Largest constraint violation of the returned point.
    pub infeasibility: f64,
    /// Multiplier estimates used for the certificate.
    pub psi: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Dual function at `(psi, lambda)`; an upper bound on the relaxed optimum.
    pub dual_bound: f64,
    /// `dual_bound − objective`.
    pub duality_gap: f64,
}

/// Flattened variable layout: one slot per `(helper, user)` pair.
struct Layout {
    user_start: Vec<usize>,
    cell: Vec<CellId>,
    sinr: Vec<f64>,
    beta: Vec<f64>,
    cell_vars: Vec<Vec<usize>>,
    base: Vec<f64>,
    scale: Vec<f64>,
    l_a: f64,
    l_t_bar: f64,
}

impl Layout {
    fn new(problem: &SharingProblem) -> Self {
        let mut user_start = vec![0];
        let (mut cell, mut sinr, mut beta) = (Vec::new(), Vec::new(), Vec::new());
        let mut cell_vars = vec![Vec::new(); problem.num_cells()];
        for k in 0..problem.num_users() {
            for &i in problem.ingress_nbhd(k) {
                cell_vars[i].push(cell.len());
                cell.push(i);
                sinr.push(problem.sinr(i, k));
                beta.push(problem.beta(k));
            }
            user_start.push(cell.len());
        }
        let users = 0..problem.num_users();
        Layout {
            base: users.clone().map(|k| 1.0 + problem.scenario().serving_sinr(k)).collect(),
            scale: users.map(|k| problem.weight(k) * problem.beta(k)).collect(),
            user_start,
            cell,
            sinr,
            beta,
            cell_vars,
            l_a: problem.l_a() as f64,
            l_t_bar: problem.l_t_bar(),
        }
    }

    fn num_users(&self) -> usize {
        self.base.len()
    }

    fn user_range(&self, k: usize) -> std::ops::Range<usize> {
        self.user_start[k]..self.user_start[k + 1]
    }

    fn g(&self, x: &[f64], k: usize) -> f64 {
        self.user_range(k).fold(self.base[k], |g, j| g + self.sinr[j] * x[j])
    }

    fn value(&self, x: &[f64]) -> f64 {
        (0..self.num_users()).map(|k| self.scale[k] * self.g(x, k).ln()).sum()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for k in 0..self.num_users() {
            let c = self.scale[k] / self.g(x, k);
            for j in self.user_range(k) {
                out[j] = c * self.sinr[j];
            }
        }
    }

    fn infeasibility(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().fold(0.0f64, |m, &v| m.max(-v).max(v - 1.0));
        for k in 0..self.num_users() {
            let s: f64 = x[self.user_range(k)].iter().sum();
            worst = worst.max(s - self.l_a);
        }
        for vars in &self.cell_vars {
            let s: f64 = vars.iter().map(|&j| self.beta[j] * x[j]).sum();
            worst = worst.max(s - self.l_t_bar);
        }
        worst
    }

    /// Dual function: per-user box-constrained maximum of the Lagrangian plus constants.
    fn dual(&self, psi: &[f64], lambda: &[f64]) -> f64 {
        let mut total = self.l_t_bar * psi.iter().sum::<f64>() + self.l_a * lambda.iter().sum::<f64>();
        let mut items: Vec<(f64, f64)> = Vec::new();
        for k in 0..self.num_users() {
            // Buy SINR from the cheapest helper first; price per unit SINR.
            items.clear();
            items.extend(self.user_range(k).map(|j| {
                let price = self.beta[j] * psi[self.cell[j]] + lambda[k];
                (price / self.sinr[j], self.sinr[j])
            }));
            items.sort_by(|a, b| a.0.total_cmp(&b.0));
            let w = self.scale[k];
            let mut g = self.base[k];
            let mut cost = 0.0;
            for &(unit, s) in &items {
                let amount = if unit <= 0.0 { s } else { (w / unit - g).clamp(0.0, s) };
                if amount <= 0.0 {
                    break;
                }
                g += amount;
                cost += unit * amount;
                if amount < s {
                    break;
                }
            }
            total += w * g.ln() - cost;
        }
        total
    }

    /// A few rounds of coordinate-wise golden-section descent on the dual.
    fn refine_multipliers(&self, psi: &mut [f64], lambda: &mut [f64], rounds: usize) {
        let grad_cap = (0..self.num_users())
            .flat_map(|k| self.user_range(k).map(move |j| (k, j)))
            .map(|(k, j)| self.scale[k] * self.sinr[j] / self.base[k] / self.beta[j])
            .fold(0.0, f64::max);
        for _ in 0..rounds {
            for i in 0..psi.len() {
                if self.cell_vars[i].is_empty() {
                    psi[i] = 0.0;
                    continue;
                }
                let hi = 2.0 * psi[i] + grad_cap;
                psi[i] = golden_min(0.0, hi, |v| {
                    let old = psi[i];
                    psi[i] = v;
                    let d = self.dual(psi, lambda);
                    psi[i] = old;
                    d
                });
            }
            for k in 0..lambda.len() {
                let hi = 2.0 * lambda[k] + grad_cap;
                lambda[k] = golden_min(0.0, hi, |v| {
                    let old = lambda[k];
                    lambda[k] = v;
                    let d = self.dual(psi, lambda);
                    lambda[k] = old;
                    d
                });
            }
        }
    }
}

/// Minimiser of a convex function on `[lo, hi]`, endpoints included.
fn golden_min(lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    [(lo, f(lo)), (mid, f(mid))].into_iter().min_by(|p, q| p.1.total_cmp(&q.1)).unwrap().0
}

/// Euclidean projection onto box ∩ aperture caps ∩ backhaul caps.
///
/// Works on the dual of the projection problem. With one multiplier `μ_k` per
/// user row and `η_i` per cell row, the projected point is
/// `x_j = clip(v_j − μ_k − β_k η_i, 0, 1)` and the dual function is concave and
/// piecewise quadratic in `(μ, η) ≥ 0`. It is maximised by a projected Newton
/// method whose curvature comes from the variables strictly inside the box.
/// Multipliers are kept between calls, so projecting a nearby point again
/// usually takes one or two Newton steps.
struct Projector {
    /// `[μ_0 .. μ_{K−1}, η_0 .. η_{J−1}]`.
    y: Vec<f64>,
    user_of: Vec<usize>,
}

impl Projector {
    fn new(layout: &Layout) -> Self {
        let mut user_of = vec![0; layout.cell.len()];
        for k in 0..layout.num_users() {
            for j in layout.user_range(k) {
                user_of[j] = k;
            }
        }
        Projector { y: vec![0.0; layout.num_users() + layout.cell_vars.len()], user_of }
    }

    fn mu(&self, layout: &Layout) -> &[f64] {
        &self.y[..layout.num_users()]
    }

    fn eta(&self, layout: &Layout) -> &[f64] {
        &self.y[layout.num_users()..]
    }

    fn shifted(&self, layout: &Layout, y: &[f64], v: &[f64], j: usize) -> f64 {
        v[j] - y[self.user_of[j]] - layout.beta[j] * y[layout.num_users() + layout.cell[j]]
    }

    fn point(&self, layout: &Layout, y: &[f64], v: &[f64]) -> Vec<f64> {
        (0..v.len()).map(|j| self.shifted(layout, y, v, j).clamp(0.0, 1.0)).collect()
    }

    /// Row activities `A x − b`, the dual gradient.
    fn residual(&self, layout: &Layout, x: &[f64]) -> Vec<f64> {
        let k_users = layout.num_users();
        let mut r = vec![0.0; self.y.len()];
        for (j, &xj) in x.iter().enumerate() {
            r[self.user_of[j]] += xj;
            r[k_users + layout.cell[j]] += layout.beta[j] * xj;
        }
        r[..k_users].iter_mut().for_each(|v| *v -= layout.l_a);
        r[k_users..].iter_mut().for_each(|v| *v -= layout.l_t_bar);
        r
    }

    fn project(&mut self, layout: &Layout, v: &[f64]) -> Vec<f64> {
        let m = self.y.len();
        let mut r = self.residual(layout, &self.point(layout, &self.y, v));
        for _ in 0..PROJECTION_MAX_STEPS {
            let error = natural_residual(&self.y, &r);
            if error <= PROJECTION_TOL {
                break;
            }
            let newton = self.newton_target(layout, v, &r, error);
            let gradient: Vec<f64> = (0..m).map(|i| (self.y[i] + r[i]).max(0.0)).collect();
            let mut moved = false;
            for target in [newton, gradient] {
                let delta: Vec<f64> = (0..m).map(|i| target[i] - self.y[i]).collect();
                if dot(&r, &delta) <= 0.0 {
                    continue;
                }
                let t = self.exact_line_search(layout, v, &delta);
                if t > 0.0 {
                    for i in 0..m {
                        self.y[i] = (self.y[i] + t * delta[i]).max(0.0);
                    }
                    r = self.residual(layout, &self.point(layout, &self.y, v));
                    moved = true;
                    break;
                }
            }
            if !moved {
                break;
            }
        }
        self.point(layout, &self.y, v)
    }

    /// Projected regularised Newton point for the rows not pinned at zero.
    fn newton_target(&self, layout: &Layout, v: &[f64], r: &[f64], error: f64) -> Vec<f64> {
        let m = self.y.len();
        let k_users = layout.num_users();
        let rows: Vec<usize> = (0..m).filter(|&i| self.y[i] > 0.0 || r[i] > 0.0).collect();
        let mut index = vec![usize::MAX; m];
        for (p, &i) in rows.iter().enumerate() {
            index[i] = p;
        }
        let mut h = DMatrix::<f64>::zeros(rows.len(), rows.len());
        for j in 0..v.len() {
            let z = self.shifted(layout, &self.y, v, j);
            if !(z > 0.0 && z < 1.0) {
                continue;
            }
            let (u, c, b) = (index[self.user_of[j]], index[k_users + layout.cell[j]], layout.beta[j]);
            if u != usize::MAX {
                h[(u, u)] += 1.0;
            }
            if c != usize::MAX {
                h[(c, c)] += b * b;
            }
            if u != usize::MAX && c != usize::MAX {
                h[(u, c)] += b;
                h[(c, u)] += b;
            }
        }
        // Rows without interior variables have no curvature; the shift keeps
        // their step proportional to the residual.
        let shift = error.clamp(NEWTON_REGULARIZATION, 1.0);
        for p in 0..rows.len() {
            h[(p, p)] += shift;
        }
        let g = DVector::from_iterator(rows.len(), rows.iter().map(|&i| r[i]));
        let d = h.cholesky().map_or_else(|| g.clone(), |ch| ch.solve(&g));
        let mut target = self.y.clone();
        for (p, &i) in rows.iter().enumerate() {
            target[i] = (self.y[i] + d[p]).max(0.0);
        }
        target
    }

    /// Step along the arc `max(y + t·delta, 0)` where the dual stops increasing.
    ///
    /// The root of the arc slope is bracketed by doubling and then found by
    /// bisection, without evaluating the cancellation-prone dual value.
    fn exact_line_search(&self, layout: &Layout, v: &[f64], delta: &[f64]) -> f64 {
        // Derivative along the projected arc: clipped rows no longer move.
        let slope = |t: f64| {
            let y: Vec<f64> = self.y.iter().zip(delta).map(|(a, d)| (a + t * d).max(0.0)).collect();
            let r = self.residual(layout, &self.point(layout, &y, v));
            (0..y.len()).filter(|&i| y[i] > 0.0).map(|i| r[i] * delta[i]).sum::<f64>()
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        while slope(hi) > 0.0 {
            if hi > 1e30 {
                return hi;
            }
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // The root of a piecewise-linear slope, refined on the final bracket.
        let (s_lo, s_hi) = (slope(lo), slope(hi));
        if s_lo > s_hi {
            lo + s_lo / (s_lo - s_hi) * (hi - lo)
        } else {
            lo
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Multipliers read off the projection of `x + step·g`, and their dual value.
fn certificate(layout: &Layout, projector: &mut Projector, x: &[f64], g: &[f64], step: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let trial: Vec<f64> = x.iter().zip(g).map(|(a, b)| a + step * b).collect();
    projector.project(layout, &trial);
    let psi: Vec<f64> = projector.eta(layout).iter().map(|v| v / step).collect();
    let lambda: Vec<f64> = projector.mu(layout).iter().map(|v| v / step).collect();
    let bound = layout.dual(&psi, &lambda);
    (psi, lambda, bound)
}

/// `max_i |y_i − max(y_i + r_i, 0)|`: zero exactly at a maximiser over `y ≥ 0`.
fn natural_residual(y: &[f64], r: &[f64]) -> f64 {
    y.iter().zip(r).fold(0.0, |m, (&yi, &ri)| m.max((yi - (yi + ri).max(0.0)).abs()))
}

/// Solves the relaxed problem centrally by projected gradient ascent.
///
/// Each iteration moves towards the projection of a Barzilai–Borwein gradient
/// step, with Armijo backtracking along that direction. Stops once a full step
/// changes the objective by less than `tol` (relative) for a few consecutive
/// iterations while the iterate is feasible within `tol`.
///
/// At a fixed point `x = P(x + s∇f)`, the projection multipliers divided by `s`
/// are KKT multipliers of the problem. They are evaluated in the dual function
/// to give `dual_bound`, so `duality_gap` certifies the returned objective.
pub fn centralized_relaxed(problem: &SharingProblem, tol: f64) -> Result<RelaxedSolution> {
    if !(tol > 0.0) {
        return Err(Error::param("tol", format!("{tol} must be positive")));
    }
    let layout = Layout::new(problem);
    let mut projector = Projector::new(&layout);
    let n = layout.cell.len();
    let mut x = vec![0.0; n];
    let mut f = layout.value(&x);
    let mut g = vec![0.0; n];
    layout.gradient(&x, &mut g);
    let mut step = 1.0;
    let mut quiet = 0;
    let mut iterations = 0;
    let mut converged = n == 0;
    let mut trial = vec![0.0; n];
    let mut g_new = vec![0.0; n];

    while !converged && iterations < MAX_ITERS {
        iterations += 1;
        for j in 0..n {
            trial[j] = x[j] + step * g[j];
        }
        let target = projector.project(&layout, &trial);
        let dir: Vec<f64> = (0..n).map(|j| target[j] - x[j]).collect();
        let slope: f64 = (0..n).map(|j| g[j] * dir[j]).sum();
        let mut t = 1.0;
        let mut accepted = None;
        while t >= 1e-12 {
            let x_new: Vec<f64> = (0..n).map(|j| x[j] + t * dir[j]).collect();
            let f_new = layout.value(&x_new);
            if f_new >= f + ARMIJO_C * t * slope {
                accepted = Some((x_new, f_new));
                break;
            }
            t *= 0.5;
        }
        // No sufficient increase even for tiny steps: the remaining gain is
        // below rounding, so treat the point as stationary.
        let Some((x_new, f_new)) = accepted else {
            converged = layout.infeasibility(&x) < tol;
            break;
        };
        layout.gradient(&x_new, &mut g_new);
        let (mut sx, mut sy) = (0.0, 0.0);
        for j in 0..n {
            let dx = x_new[j] - x[j];
            sx += dx * dx;
            sy -= dx * (g_new[j] - g[j]);
        }
        let rel_change = (f_new - f).abs() / f.abs().max(1e-12);
        // A trial point more than a few box widths away from x only makes the
        // projection harder; cap the step accordingly.
        let g_max = g_new.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let step_cap = MAX_TRIAL_MOVE / g_max;
        step = if sy > 0.0 { (sx / sy).clamp(1e-8, step_cap) } else { (step * 2.0).min(step_cap) };
        x = x_new;
        f = f_new;
        std::mem::swap(&mut g, &mut g_new);
        let settled = rel_change < tol && (t == 1.0 || slope <= tol * f.abs().max(1.0));
        quiet = if settled { quiet + 1 } else { 0 };
        if quiet >= STALL_ROUNDS && layout.infeasibility(&x) < tol {
            let (_, _, bound) = certificate(&layout, &mut projector, &x, &g, step);
            converged = bound - f <= tol * f.abs().max(1.0);
            quiet = 0;
        }
    }
    if !converged {
        return Err(Error::NotConverged { solver: "centralized_relaxed", iterations });
    }

    let (mut psi, mut lambda, mut dual_bound) = certificate(&layout, &mut projector, &x, &g, step);
    if dual_bound - f > tol * f.abs().max(1.0) {
        layout.refine_multipliers(&mut psi, &mut lambda, 3);
        dual_bound = dual_bound.min(layout.dual(&psi, &lambda));
    }

    let mut allocation = SharingAllocation::zeros(problem);
    for k in 0..layout.num_users() {
        for j in layout.user_range(k) {
            allocation.set(layout.cell[j], k, x[j].clamp(0.0, 1.0))?;
        }
    }
    let value = objective(problem, &allocation);
    let r = residuals(problem, &allocation);
    let infeasibility = r.max_egress_violation().max(r.max_ingress_violation()).max(r.box_violation);
    Ok(RelaxedSolution {
        allocation,
        objective: value,
        iterations,
        infeasibility,
        psi,
        lambda,
        dual_bound,
        duality_gap: dual_bound - value,
    })
}
