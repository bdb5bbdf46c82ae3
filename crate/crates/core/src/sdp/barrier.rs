//! Two-phase log-det barrier method.
//!
//! Equalities are eliminated first (`y = y0 + N z`). Phase one minimizes a
//! scalar `s` subject to `F(z) + s I >= 0` until a strictly feasible `z` is
//! found or the barrier bound `s - m/t` certifies that no point reaches
//! `lambda_min >= -feas_tol`. Phase two follows the central path of
//! `t c^T z - log det F(z)` with damped Newton steps until `m/t` is below the
//! gap tolerance. `m` is the sum of block dimensions. Each increase of `t`
//! starts from a point extrapolated along the central path.
//!
//! Iterations are counted as centering passes; Newton steps are capped per
//! pass and reported separately.
//!
//! When phase one reaches a center with `0 <= s < feas_tol` (feasible, but
//! possibly without an interior), phase two runs on the shifted constraint `F(z) + feas_tol I >= 0`;
//! the returned point then satisfies `lambda_min >= -feas_tol`, which is exactly
//! what an `Optimal` status promises.

use nalgebra::{DMatrix, DVector};

use super::elim::{eliminate, Elimination};
use super::{SdpOptions, SdpProblem, SdpSolution, SdpSolver, SdpStatus};
use crate::error::Result;

#[derive(Clone, Debug)]
pub struct BarrierSolver {
    /// Growth factor of the barrier parameter between centering passes.
    pub mu: f64,
    /// Centering stops when half the squared Newton decrement drops below this.
    pub newton_tol: f64,
    /// Consecutive phase-one passes whose line search fails before giving up.
    pub stall_limit: usize,
    /// Newton steps allowed within one centering pass.
    pub max_centering_steps: usize,
}

impl Default for BarrierSolver {
    fn default() -> Self {
        BarrierSolver {
            mu: 4.0,
            newton_tol: 1e-9,
            stall_limit: 8,
            max_centering_steps: 500,
        }
    }
}

struct ReducedBlock {
    dim: usize,
    f0: DMatrix<f64>,
    /// Column `j` is the column-major `dim x dim` coefficient matrix of `z_j`.
    cols: DMatrix<f64>,
}

/// The problem after equality elimination, restricted to directions that
/// touch at least one block.
struct Reduced {
    blocks: Vec<ReducedBlock>,
    c: DVector<f64>,
    y0: Vec<f64>,
    /// `num_vars x k`
    basis: DMatrix<f64>,
    barrier_degree: f64,
}

impl Reduced {
    fn k(&self) -> usize {
        self.c.len()
    }

    fn y(&self, z: &DVector<f64>) -> Vec<f64> {
        let y = DVector::from_column_slice(&self.y0) + &self.basis * z;
        y.iter().copied().collect()
    }
}

/// Barrier function over `w = z` or `w = (z, s)` with a fixed diagonal shift.
struct Barrier<'a> {
    red: &'a Reduced,
    with_s: bool,
    shift: f64,
    cost: DVector<f64>,
}

struct Eval {
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

impl Barrier<'_> {
    fn n(&self) -> usize {
        self.red.k() + usize::from(self.with_s)
    }

    fn slack(&self, b: &ReducedBlock, w: &DVector<f64>) -> DMatrix<f64> {
        let k = self.red.k();
        let lin = &b.cols * w.rows(0, k);
        let mut s = b.f0.clone() + DMatrix::from_column_slice(b.dim, b.dim, lin.as_slice());
        let diag = self.shift + if self.with_s { w[k] } else { 0.0 };
        if diag != 0.0 {
            for i in 0..b.dim {
                s[(i, i)] += diag;
            }
        }
        s
    }

    /// `-log det` part of the barrier at `w`, or `None` outside the domain.
    fn log_barrier(&self, w: &DVector<f64>) -> Option<f64> {
        let mut v = 0.0;
        for b in &self.red.blocks {
            let chol = self.slack(b, w).cholesky()?;
            v -= 2.0 * chol.l_dirty().diagonal().iter().take(b.dim).map(|d| d.ln()).sum::<f64>();
        }
        v.is_finite().then_some(v)
    }

    fn eval(&self, w: &DVector<f64>, t: f64) -> Option<Eval> {
        let k = self.red.k();
        let n = self.n();
        let mut grad = &self.cost * t;
        let mut hess = DMatrix::zeros(n, n);
        for b in &self.red.blocks {
            let d = b.dim;
            let chol = self.slack(b, w).cholesky()?;
            let l = chol.l();
            let linv = l.solve_lower_triangular(&DMatrix::identity(d, d))?;

            // G_j = Linv F_j Linv^T for all j at once: F_1..F_k side by side
            // form a d x (d k) matrix with the same memory layout as `cols`.
            let wide = DMatrix::from_column_slice(d, d * k, b.cols.as_slice());
            let x = &linv * wide;
            let mut xt = DMatrix::zeros(d, d * k);
            for j in 0..k {
                xt.columns_mut(j * d, d)
                    .copy_from(&x.columns(j * d, d).transpose());
            }
            let g = &linv * xt;

            // Half-vectorization with sqrt(2) off-diagonal weights so that
            // <G_i, G_j> is a plain dot product.
            let half = d * (d + 1) / 2;
            let mut gm = DMatrix::zeros(half, n);
            let sqrt2 = std::f64::consts::SQRT_2;
            let mut fill = |col: usize, gj: &DMatrix<f64>, grad: &mut DVector<f64>| {
                let mut r = 0;
                let mut tr = 0.0;
                for c in 0..d {
                    for rr in 0..=c {
                        let v = gj[(rr, c)];
                        gm[(r, col)] = if rr == c { v } else { sqrt2 * v };
                        r += 1;
                    }
                    tr += gj[(c, c)];
                }
                grad[col] -= tr;
            };
            for j in 0..k {
                let gj = g.columns(j * d, d).into_owned();
                fill(j, &gj, &mut grad);
            }
            if self.with_s {
                let sinv = &linv.transpose() * &linv;
                fill(k, &sinv, &mut grad);
            }
            hess += gm.tr_mul(&gm);
        }
        grad.iter().all(|g| g.is_finite()).then_some(Eval { grad, hess })
    }
}

fn solve_newton(hess: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    // Jacobi scaling first: near a face the Hessian spans many orders of
    // magnitude and a regularization sized to its largest entry would
    // swamp the small directions.
    let n = rhs.len();
    let d: DVector<f64> = DVector::from_iterator(
        n,
        (0..n).map(|i| {
            let h = hess[(i, i)];
            if h > 0.0 && h.is_finite() {
                1.0 / h.sqrt()
            } else {
                1.0
            }
        }),
    );
    let mut hs = hess.clone();
    for j in 0..n {
        for i in 0..n {
            hs[(i, j)] *= d[i] * d[j];
        }
    }
    let gs = rhs.component_mul(&d);
    let mut reg = 0.0;
    for _ in 0..8 {
        let mut h = hs.clone();
        for i in 0..n {
            h[(i, i)] += reg;
        }
        if let Some(ch) = h.cholesky() {
            let dir = ch.solve(&gs).component_mul(&d);
            if dir.iter().all(|v| v.is_finite()) {
                return Some(dir);
            }
        }
        reg = if reg == 0.0 { 1e-14 } else { reg * 100.0 };
    }
    None
}

/// Moves a centered point at `t` toward the center at `t_next` along the
/// central-path tangent `-H^-1 c`, backing off until the barrier at
/// `t_next` improves on not moving at all. The path is extrapolated in
/// `1/t`, in which it is close to linear near a face.
fn predict(bar: &Barrier<'_>, w: &mut DVector<f64>, t: f64, t_next: f64) {
    let Some(ev) = bar.eval(w, t) else { return };
    let Some(tangent) = solve_newton(&ev.hess, &-&bar.cost) else {
        return;
    };
    let Some(base) = bar.log_barrier(w) else { return };
    let mut step = t * (1.0 - t / t_next);
    for _ in 0..30 {
        let cand = &*w + &tangent * step;
        if let Some(v) = bar.log_barrier(&cand) {
            if t_next * bar.cost.dot(&(&tangent * step)) + (v - base) < 0.0 {
                *w = cand;
                return;
            }
        }
        step *= 0.5;
    }
}

enum StepOutcome {
    Moved,
    Centered,
    Stuck,
}

fn newton_step(bar: &Barrier<'_>, w: &mut DVector<f64>, t: f64, tol: f64) -> Option<StepOutcome> {
    let ev = bar.eval(w, t)?;
    let dir = solve_newton(&ev.hess, &-&ev.grad)?;
    let slope = ev.grad.dot(&dir);
    let decrement = -slope;
    if decrement / 2.0 <= tol {
        return Some(StepOutcome::Centered);
    }
    // Changes are measured directly: at large `t` the linear term dwarfs
    // the barrier and comparing absolute values loses every digit.
    let base = bar.log_barrier(w)?;
    let lin = t * bar.cost.dot(&dir);
    let scale = 1.0 + w.amax();
    let mut alpha = 1.0;
    while alpha > 1e-14 {
        let cand = &*w + &dir * alpha;
        if let Some(v) = bar.log_barrier(&cand) {
            if alpha * lin + (v - base) <= 0.25 * alpha * slope {
                if alpha * dir.amax() <= 1e-15 * scale {
                    return Some(StepOutcome::Centered);
                }
                *w = cand;
                return Some(StepOutcome::Moved);
            }
        }
        alpha *= 0.5;
    }
    // Roundoff floor: a tiny decrement that cannot be realized is as good as centered.
    if decrement <= 1e-6 * (1.0 + base.abs()) {
        Some(StepOutcome::Centered)
    } else {
        Some(StepOutcome::Stuck)
    }
}

fn reduce(problem: &SdpProblem, y0: Vec<f64>, basis: DMatrix<f64>) -> std::result::Result<Reduced, String> {
    let nf = basis.ncols();
    let mut blocks: Vec<ReducedBlock> = problem
        .blocks
        .iter()
        .map(|blk| {
            let d = blk.dim;
            let mut f0 = blk.constant.to_dense(d);
            let mut cols = DMatrix::zeros(d * d, nf);
            for (&var, f) in &blk.coeffs {
                if y0[var] != 0.0 {
                    f.add_to(&mut f0, y0[var]);
                }
                for j in 0..nf {
                    let nij = basis[(var, j)];
                    if nij == 0.0 {
                        continue;
                    }
                    for &(r, c, v) in &f.entries {
                        cols[(c * d + r, j)] += nij * v;
                        if r != c {
                            cols[(r * d + c, j)] += nij * v;
                        }
                    }
                }
            }
            ReducedBlock { dim: d, f0, cols }
        })
        .collect();

    let c_full = DVector::from_column_slice(&problem.objective);
    let c_red = basis.tr_mul(&c_full);
    let c_scale = c_red.amax().max(1.0);
    let norms: Vec<f64> = (0..nf)
        .map(|j| blocks.iter().map(|b| b.cols.column(j).norm_squared()).sum::<f64>().sqrt())
        .collect();
    let col_scale = norms.iter().fold(0.0f64, |a, &b| a.max(b)).max(1e-300);
    let active: Vec<usize> = (0..nf).filter(|&j| norms[j] > 1e-13 * col_scale).collect();
    for j in 0..nf {
        if !active.contains(&j) && c_red[j].abs() > 1e-12 * c_scale {
            return Err("objective is unbounded along a direction that no block constrains".into());
        }
    }
    for b in &mut blocks {
        b.cols = b.cols.select_columns(active.iter());
    }
    Ok(Reduced {
        barrier_degree: blocks.iter().map(|b| b.dim as f64).sum(),
        blocks,
        c: c_red.select_rows(active.iter()),
        y0,
        basis: basis.select_columns(active.iter()),
    })
}

struct Run<'a> {
    problem: &'a SdpProblem,
    opts: &'a SdpOptions,
    iterations: usize,
    newton_steps: usize,
}

impl Run<'_> {
    fn finish(&self, y: Vec<f64>, status: SdpStatus, detail: impl Into<String>) -> SdpSolution {
        let min_eig = self.problem.min_block_eigenvalue(&y);
        let mut status = status;
        let mut detail = detail.into();
        if status == SdpStatus::Optimal {
            let eq = self.problem.equality_residual(&y);
            if min_eig < -self.opts.feas_tol || eq > self.opts.feas_tol {
                status = SdpStatus::NumericalFailure;
                detail = format!(
                    "final point misses tolerances (lambda_min {min_eig:.3e}, equality residual {eq:.3e})"
                );
            }
        }
        SdpSolution {
            objective_value: self.problem.objective_value(&y),
            y,
            status,
            min_block_eigenvalue: min_eig,
            iterations: self.iterations,
            newton_steps: self.newton_steps,
            detail,
        }
    }

    fn budget_left(&self) -> bool {
        self.iterations < self.opts.max_iters
    }
}

impl SdpSolver for BarrierSolver {
    fn solve(&self, problem: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
        problem.validate()?;
        let mut run = Run {
            problem,
            opts,
            iterations: 0,
            newton_steps: 0,
        };

        let param = match eliminate(problem.num_vars, &problem.equalities) {
            Elimination::Inconsistent { residual } => {
                return Ok(run.finish(
                    vec![0.0; problem.num_vars],
                    SdpStatus::Infeasible,
                    format!("equality constraints are inconsistent (residual {residual:.3e})"),
                ))
            }
            Elimination::Param(p) => p,
        };
        let red = match reduce(problem, param.y0, param.basis) {
            Ok(r) => r,
            Err(msg) => return Ok(run.finish(vec![0.0; problem.num_vars], SdpStatus::NumericalFailure, msg)),
        };
        let k = red.k();
        let m = red.barrier_degree;
        let mut z = DVector::zeros(k);

        let lmin0 = red
            .blocks
            .iter()
            .map(|b| crate::linalg::lambda_min(&b.f0))
            .fold(f64::INFINITY, f64::min);

        if k == 0 {
            let y = red.y(&z);
            let status = if lmin0 >= -opts.feas_tol {
                SdpStatus::Optimal
            } else {
                SdpStatus::Infeasible
            };
            return Ok(run.finish(y, status, "no free variables"));
        }

        // Phase one.
        let mut shift = 0.0;
        if lmin0 <= 0.0 {
            let mut cost = DVector::zeros(k + 1);
            cost[k] = 1.0;
            let bar = Barrier {
                red: &red,
                with_s: true,
                shift: 0.0,
                cost,
            };
            let mut w = DVector::zeros(k + 1);
            w[k] = 1.0 - lmin0;
            let mut t = 1.0 / w[k].max(1.0);
            let mut stalled = 0;
            'phase1: loop {
                if !run.budget_left() {
                    let y = red.y(&w.rows(0, k).into_owned());
                    return Ok(run.finish(y, SdpStatus::MaxIterations, "iteration limit in feasibility phase"));
                }
                run.iterations += 1;
                let mut steps = 0;
                loop {
                    if steps >= self.max_centering_steps {
                        let y = red.y(&w.rows(0, k).into_owned());
                        return Ok(run.finish(y, SdpStatus::MaxIterations, "centering did not converge in feasibility phase"));
                    }
                    let Some(outcome) = newton_step(&bar, &mut w, t, self.newton_tol) else {
                        let y = red.y(&w.rows(0, k).into_owned());
                        return Ok(run.finish(y, SdpStatus::NumericalFailure, "Newton system breakdown in feasibility phase"));
                    };
                    match outcome {
                        StepOutcome::Centered => break,
                        // A failed line search leaves `w` unchanged, so retrying
                        // at the same `t` is pointless.
                        StepOutcome::Stuck => {
                            stalled += 1;
                            break;
                        }
                        StepOutcome::Moved => {
                            run.newton_steps += 1;
                            steps += 1;
                            if w[k] < 0.0 {
                                break 'phase1;
                            }
                            stalled = 0;
                        }
                    }
                }
                if stalled >= self.stall_limit {
                    let y = red.y(&w.rows(0, k).into_owned());
                    return Ok(run.finish(
                        y,
                        SdpStatus::NumericalFailure,
                        format!("feasibility phase stalled at residual {:.3e}", w[k]),
                    ));
                }
                let s = w[k];
                let lower = s - m / t;
                if lower > opts.feas_tol {
                    let y = red.y(&w.rows(0, k).into_owned());
                    return Ok(run.finish(
                        y,
                        SdpStatus::Infeasible,
                        format!("no point reaches lambda_min >= -{:e} (certified bound {lower:.3e})", opts.feas_tol),
                    ));
                }
                if s < opts.feas_tol {
                    shift = opts.feas_tol;
                    break;
                }
                predict(&bar, &mut w, t, t * self.mu);
                t *= self.mu;
            }
            z = w.rows(0, k).into_owned();
        }

        // Phase two.
        let bar = Barrier {
            red: &red,
            with_s: false,
            shift,
            cost: red.c.clone(),
        };
        let c_zero = red.c.amax() <= 1e-14;
        let mut t = if c_zero { 0.0 } else { 1.0 };
        loop {
            if !run.budget_left() {
                return Ok(run.finish(red.y(&z), SdpStatus::MaxIterations, "iteration limit in optimization phase"));
            }
            run.iterations += 1;
            let mut steps = 0;
            loop {
                if steps >= self.max_centering_steps {
                    return Ok(run.finish(red.y(&z), SdpStatus::MaxIterations, "centering did not converge"));
                }
                match newton_step(&bar, &mut z, t, self.newton_tol) {
                    None => {
                        return Ok(run.finish(red.y(&z), SdpStatus::NumericalFailure, "Newton system breakdown"))
                    }
                    Some(StepOutcome::Centered) => break,
                    Some(StepOutcome::Stuck) => {
                        return Ok(run.finish(red.y(&z), SdpStatus::NumericalFailure, "line search failed"))
                    }
                    Some(StepOutcome::Moved) => {
                        run.newton_steps += 1;
                        steps += 1;
                    }
                }
                // A pure centering problem may have an unbounded feasible set.
                if c_zero && steps >= 50 {
                    break;
                }
                if red.c.dot(&z).abs() > 1e12 {
                    return Ok(run.finish(red.y(&z), SdpStatus::NumericalFailure, "objective appears unbounded"));
                }
            }
            if c_zero {
                return Ok(run.finish(red.y(&z), SdpStatus::Optimal, ""));
            }
            let obj = problem.objective_value(&red.y(&z));
            if m / t <= opts.gap_tol * obj.abs().max(1.0) {
                return Ok(run.finish(red.y(&z), SdpStatus::Optimal, ""));
            }
            predict(&bar, &mut z, t, t * self.mu);
            t *= self.mu;
        }
    }
}
