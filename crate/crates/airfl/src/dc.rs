//! Difference-of-convex drivers for the four lifted subproblems of the
//! two-step selection pipeline.
//!
//! A PSD matrix is rank one exactly when its trace equals its spectral norm,
//! so each subproblem carries the penalty `tr(X) - ||X||_2`. The drivers
//! iterate a majorize-minimize scheme: linearize the concave `-||X||_2` term
//! at the current iterate through its subgradient `u1 u1^H` (top
//! eigenvector), solve the resulting convex conic program, and repeat until
//! the penalized objective stalls or the rank-one residual is certified.
//!
//! Each accepted iterate is screened against the surrogate value of its
//! predecessor (which stays feasible, since the constraint set never
//! changes), so the recorded objective trace is nonincreasing even though
//! the inner solver is a first-order method with finite accuracy.

use nalgebra::{DMatrix, DVector};

use crate::aircomp::{Beamformer, PhaseVector};
use crate::channel::{effective_channel, ChannelSet};
use crate::sdp::{
    rank_one_residual, top_eigvec, ConstraintSense, SdpConstraint, SdpProblem, SdpSession,
    SdpSolution, SolveStatus, SolverConfig,
};
use crate::{C64, Error, Result};

/// Penalty ceiling for the rank-one escalation schedule.
const RHO_CAP: f64 = 1e3;
const RHO_GROWTH: f64 = 5.0;
/// Iterations between rank-residual stall checks.
const STALL_WINDOW: usize = 10;

/// Parameters of the majorize-minimize loop.
#[derive(Debug, Clone)]
pub struct DcConfig {
    /// Rank-one penalty weight (escalated up to 1e3 when the residual stalls).
    pub rho: f64,
    /// Stop when the penalized objective decreases by less than this.
    pub epsilon: f64,
    pub max_dc_iters: usize,
    /// Relative rank-one residual `(tr - sigma_1)/tr` required to certify a
    /// solution as rank one.
    pub rank_tol: f64,
}

impl Default for DcConfig {
    fn default() -> Self {
        // The penalty damps the subgradient rotation (per-iteration objective
        // decrease contracts like rho/(1+rho)), so it starts small and the
        // stall logic escalates it only when the rank residual demands it.
        Self { rho: 1.0, epsilon: 1e-3, max_dc_iters: 60, rank_tol: 1e-6 }
    }
}

impl DcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || !(self.epsilon > 0.0) || !(self.rank_tol > 0.0) {
            return Err(Error::Config("dc parameters must be positive".into()));
        }
        if self.rank_tol > 1e-4 {
            return Err(Error::Config("rank_tol must be <= 1e-4".into()));
        }
        if self.max_dc_iters == 0 {
            return Err(Error::Config("max_dc_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// Convergence record of one DC run.
#[derive(Debug, Clone)]
pub struct DcTrace {
    /// Penalized objective at each accepted iterate; nonincreasing within
    /// each constant-penalty segment.
    pub objective_per_iter: Vec<f64>,
    /// Relative rank-one residual at each accepted iterate.
    pub rank_residual_per_iter: Vec<f64>,
    /// Number of convex subproblems solved.
    pub iters_used: usize,
    pub converged: bool,
    /// Trace indices at which the penalty was escalated.
    pub rho_steps: Vec<usize>,
    /// Total inner splitting iterations across all subproblem solves.
    pub inner_iterations: usize,
}

impl DcTrace {
    pub fn final_objective(&self) -> Option<f64> {
        self.objective_per_iter.last().copied()
    }

    pub fn final_rank_residual(&self) -> Option<f64> {
        self.rank_residual_per_iter.last().copied()
    }

    /// CSV rows `iter,objective,rank_residual` for convergence plots.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,objective,rank_residual\n");
        for (i, (obj, res)) in self
            .objective_per_iter
            .iter()
            .zip(self.rank_residual_per_iter.iter())
            .enumerate()
        {
            out.push_str(&format!("{},{:e},{:e}\n", i + 1, obj, res));
        }
        out
    }
}

/// Top eigenpair with the eigenvalue clamped to the PSD range.
fn top_pair(x: &DMatrix<C64>) -> Result<(f64, DVector<C64>)> {
    let (sigma1, u1) = top_eigvec(x)?;
    Ok((sigma1.max(0.0), u1))
}

/// Rank-one factor `w = sqrt(sigma_1) u_1` of a (near) rank-one PSD matrix.
pub fn rank_one_factor(x: &DMatrix<C64>) -> Result<(f64, DVector<C64>)> {
    let (sigma1, u1) = top_pair(x)?;
    Ok((sigma1, u1.map(|z| z * sigma1.sqrt())))
}

/// Extract unit-modulus reflection coefficients from a lifted (N+1)-square
/// matrix: factor, de-rotate by the homogenization entry, renormalize.
pub fn recover_phases(v_lifted: &DMatrix<C64>) -> Result<PhaseVector> {
    let dim = v_lifted.nrows();
    if dim < 2 {
        return Err(Error::Dimension("lifted phase matrix must be at least 2x2".into()));
    }
    let (_, w) = rank_one_factor(v_lifted)?;
    let t = w[dim - 1];
    let rot = if t.norm() > 1e-12 { t.conj() / t.norm() } else { C64::new(1.0, 0.0) };
    let v = DVector::from_fn(dim - 1, |n, _| {
        let z = w[n] * rot;
        if z.norm() > 1e-12 {
            z / z.norm()
        } else {
            C64::new(1.0, 0.0)
        }
    });
    PhaseVector::new(v)
}

fn identity(n: usize) -> DMatrix<C64> {
    DMatrix::from_diagonal_element(n, n, C64::new(1.0, 0.0))
}

fn outer(u: &DVector<C64>) -> DMatrix<C64> {
    let n = u.len();
    DMatrix::from_fn(n, n, |r, c| u[r] * u[c].conj())
}

fn check_selected(channels: &ChannelSet, selected: &[usize]) -> Result<()> {
    if selected.is_empty() {
        return Err(Error::Config("selected set must be nonempty".into()));
    }
    for &i in selected {
        if i >= channels.num_devices() {
            return Err(Error::Config(format!(
                "selected device {i} out of range (K = {})",
                channels.num_devices()
            )));
        }
    }
    Ok(())
}

// --- problem builders --------------------------------------------------------

/// Data of the phase-side constraints: the per-device reflected response
/// `a_i = diag(h_r_i)^H G^H m`, direct term `c_i = m^H h_d_i`, and `||m||^2`.
pub(crate) struct PhaseProblemData {
    pub a: Vec<DVector<C64>>,
    pub c: Vec<C64>,
    pub m_norm_sqr: f64,
}

impl PhaseProblemData {
    pub fn new(channels: &ChannelSet, m: &Beamformer, devices: &[usize]) -> Result<Self> {
        if m.len() != channels.m_antennas {
            return Err(Error::Dimension(format!(
                "beamformer has length {}, channels have {} antennas",
                m.len(),
                channels.m_antennas
            )));
        }
        // G^H m once, then one diagonal scaling per device
        let gh_m = channels.g.adjoint() * m.as_vector();
        let mut a = Vec::with_capacity(devices.len());
        let mut c = Vec::with_capacity(devices.len());
        for &i in devices {
            a.push(DVector::from_fn(channels.n_elements, |n, _| {
                channels.h_r[i][n].conj() * gh_m[n]
            }));
            c.push(m.as_vector().dotc(&channels.h_d[i]));
        }
        Ok(Self { a, c, m_norm_sqr: m.as_vector().norm_squared() })
    }

    /// `|a_i^H v + c_i|^2` for a concrete reflection vector.
    pub fn gain(&self, idx: usize, v: &DVector<C64>) -> f64 {
        (self.a[idx].dotc(v) + self.c[idx]).norm_sqr()
    }

    /// Lifted quadratic-form matrix of device `idx`.
    fn lifted_matrix(&self, idx: usize) -> DMatrix<C64> {
        let n = self.a[idx].len();
        let mut r = DMatrix::from_element(n + 1, n + 1, C64::default());
        for row in 0..n {
            for col in 0..n {
                r[(row, col)] = self.a[idx][row] * self.a[idx][col].conj();
            }
            r[(row, n)] = self.a[idx][row] * self.c[idx];
            r[(n, row)] = r[(row, n)].conj();
        }
        r
    }
}

/// Constraints of the sparsity-inducing beamformer problem:
/// `tr(M) - gamma tr(M H_i) <= x_i` for all devices and `tr(M) >= 1`.
pub(crate) fn sparsity_beamformer_problem(h_eff: &[DVector<C64>], gamma: f64) -> SdpProblem {
    let m_dim = h_eff[0].len();
    let k = h_eff.len();
    let eye = identity(m_dim);
    let mut constraints = Vec::with_capacity(k + 1);
    for (i, h) in h_eff.iter().enumerate() {
        let mut a_matrix = outer(h);
        a_matrix.scale_mut(-gamma);
        a_matrix += &eye;
        let mut a_scalars = DVector::zeros(k);
        a_scalars[i] = -1.0;
        constraints.push(SdpConstraint { a_matrix, a_scalars, rhs: 0.0, sense: ConstraintSense::Le });
    }
    constraints.push(SdpConstraint {
        a_matrix: eye.clone(),
        a_scalars: DVector::zeros(k),
        rhs: 1.0,
        sense: ConstraintSense::Ge,
    });
    SdpProblem {
        dim: m_dim,
        num_scalars: k,
        obj_matrix: DMatrix::from_element(m_dim, m_dim, C64::default()),
        obj_scalars: DVector::from_element(k, 1.0),
        constraints,
    }
}

/// Constraints of the min-norm beamformer problem over a fixed device set:
/// `tr(M H_i) >= 1` for selected devices.
pub(crate) fn feasibility_beamformer_problem(h_sel: &[DVector<C64>]) -> SdpProblem {
    let m_dim = h_sel[0].len();
    let constraints = h_sel
        .iter()
        .map(|h| SdpConstraint {
            a_matrix: outer(h),
            a_scalars: DVector::zeros(0),
            rhs: 1.0,
            sense: ConstraintSense::Ge,
        })
        .collect();
    SdpProblem {
        dim: m_dim,
        num_scalars: 0,
        obj_matrix: identity(m_dim),
        obj_scalars: DVector::zeros(0),
        constraints,
    }
}

/// Phase-side problem with per-device slack targets `x_i`:
/// `||m||^2 - gamma (tr(R_i V) + |c_i|^2) <= x_i`, unit diagonal.
pub(crate) fn sparsity_phases_problem(
    data: &PhaseProblemData,
    x: &DVector<f64>,
    gamma: f64,
) -> SdpProblem {
    let n_lift = data.a[0].len() + 1;
    let mut constraints = Vec::with_capacity(data.a.len() + n_lift);
    for i in 0..data.a.len() {
        let mut a_matrix = data.lifted_matrix(i);
        a_matrix.scale_mut(-gamma);
        constraints.push(SdpConstraint {
            a_matrix,
            a_scalars: DVector::zeros(0),
            rhs: x[i] - data.m_norm_sqr + gamma * data.c[i].norm_sqr(),
            sense: ConstraintSense::Le,
        });
    }
    push_unit_diagonal(&mut constraints, n_lift);
    SdpProblem {
        dim: n_lift,
        num_scalars: 0,
        obj_matrix: identity(n_lift),
        obj_scalars: DVector::zeros(0),
        constraints,
    }
}

/// Phase-side problem over a fixed device set:
/// `tr(R_i V) + |c_i|^2 >= 1`, unit diagonal.
pub(crate) fn feasibility_phases_problem(data: &PhaseProblemData) -> SdpProblem {
    let n_lift = data.a[0].len() + 1;
    let mut constraints = Vec::with_capacity(data.a.len() + n_lift);
    for i in 0..data.a.len() {
        constraints.push(SdpConstraint {
            a_matrix: data.lifted_matrix(i),
            a_scalars: DVector::zeros(0),
            rhs: 1.0 - data.c[i].norm_sqr(),
            sense: ConstraintSense::Ge,
        });
    }
    push_unit_diagonal(&mut constraints, n_lift);
    SdpProblem {
        dim: n_lift,
        num_scalars: 0,
        obj_matrix: identity(n_lift),
        obj_scalars: DVector::zeros(0),
        constraints,
    }
}

fn push_unit_diagonal(constraints: &mut Vec<SdpConstraint>, n_lift: usize) {
    for n in 0..n_lift {
        let mut e = DMatrix::from_element(n_lift, n_lift, C64::default());
        e[(n, n)] = C64::new(1.0, 0.0);
        constraints.push(SdpConstraint {
            a_matrix: e,
            a_scalars: DVector::zeros(0),
            rhs: 1.0,
            sense: ConstraintSense::Eq,
        });
    }
}

// --- shared majorize-minimize loop --------------------------------------------

#[derive(Clone, Copy, PartialEq)]
enum DcKind {
    /// Objective carries the rank penalty on top of a base cost (the
    /// beamformer problems); the loop stops on objective stall.
    Penalized,
    /// Objective is the rank penalty alone (the phase problems); the loop
    /// stops as soon as the residual certifies rank one.
    RankFeasibility,
}

struct DcOutcome {
    solution: SdpSolution,
    trace: DcTrace,
}

/// Objective coefficients as functions of the penalty: the convex part is
/// `eye_coef * tr(X) + scal' x`, the linearized concave part subtracts
/// `sub_weight * <u1 u1^H, X>`.
fn coefficients(kind: DcKind, base_trace: f64, rho: f64) -> (f64, f64) {
    match kind {
        DcKind::Penalized => (base_trace + rho, rho),
        DcKind::RankFeasibility => (1.0, 1.0),
    }
}

#[allow(clippy::too_many_arguments)]
fn dc_loop(
    session: &SdpSession,
    kind: DcKind,
    base_trace: f64,
    obj_scalars: &DVector<f64>,
    init: DMatrix<C64>,
    cfg: &DcConfig,
    solver: &SolverConfig,
    context: &str,
) -> Result<DcOutcome> {
    cfg.validate()?;
    let n = init.nrows();
    let eye = identity(n);

    // Early iterations only need to move the iterate, not certify it, so
    // they run on a reduced splitting budget; once a stop condition fires on
    // an uncertified iterate the loop switches to the full budget and only
    // accepts a certified final solution.
    let journey_iters = solver.max_iters.min((solver.max_iters / 25).max(500));
    let mut full_budget = false;
    // rank-feasibility runs may stall on a degenerate eigenspace (every
    // diagonal entry is pinned, so the first linearizations can be constant
    // on the feasible set); re-anchoring at the unit-modulus rounding of the
    // iterate restarts them from a concrete rank-one direction
    let mut rounding_restarts = 0usize;

    let mut rho = cfg.rho;
    let (mut sigma1, mut u1) = top_pair(&init)?;
    let mut prev: Option<SdpSolution> = None;
    let mut prev_stats = (0.0f64, sigma1, 0.0f64); // (trace, sigma1, scalar cost)
    let mut prev_certified = false;
    let mut warm: Option<crate::sdp::WarmState> =
        Some(session.state_from_matrix(&init, solver.penalty_step));
    let mut trace = DcTrace {
        objective_per_iter: Vec::new(),
        rank_residual_per_iter: Vec::new(),
        iters_used: 0,
        converged: false,
        rho_steps: Vec::new(),
        inner_iterations: 0,
    };

    let dc_objective = |stats: (f64, f64, f64), rho: f64| -> f64 {
        let (tr, s1, scal) = stats;
        let (eye_coef, w) = coefficients(kind, base_trace, rho);
        scal + eye_coef * tr - w * s1
    };

    for t in 1..=cfg.max_dc_iters {
        let (eye_coef, w) = coefficients(kind, base_trace, rho);
        let mut obj = eye.clone();
        obj.scale_mut(eye_coef);
        let sub = outer(&u1);
        let obj = obj - sub.map(|z| z * w);

        let budget = SolverConfig {
            max_iters: if full_budget { solver.max_iters } else { journey_iters },
            ..solver.clone()
        };
        let sol = session.solve_state(&obj, obj_scalars, &budget, warm.as_ref())?;
        trace.iters_used += 1;
        trace.inner_iterations += sol.iterations;
        if sol.status == SolveStatus::InfeasibleCertificate {
            match kind {
                DcKind::Penalized => {
                    return Err(Error::Solver {
                        context: format!("{context}, dc iteration {t}"),
                        message: "subproblem reported an infeasibility certificate".into(),
                    })
                }
                DcKind::RankFeasibility => {
                    // no reflection pattern can satisfy the constraints
                    return Ok(DcOutcome { solution: sol, trace });
                }
            }
        }
        let certified = sol.status == SolveStatus::Optimal;

        let tr: f64 = (0..n).map(|i| sol.x_matrix[(i, i)].re).sum();
        let scal = obj_scalars.dot(&sol.x_scalars);
        // surrogate screening keeps the recorded objective monotone: the
        // previous iterate is feasible for the unchanged constraint set, so
        // an inexact solve that lands above it is discarded
        if prev.is_some() {
            let surrogate = {
                let mut inner = 0.0;
                for r in 0..n {
                    for c in 0..n {
                        inner += (sub[(r, c)].conj() * sol.x_matrix[(r, c)]).re;
                    }
                }
                scal + eye_coef * tr - w * inner
            };
            let baseline = dc_objective(prev_stats, rho);
            if surrogate > baseline + 1e-12 * (1.0 + baseline.abs()) {
                if !full_budget {
                    // possibly an artifact of the reduced budget
                    full_budget = true;
                    continue;
                }
                // no usable progress at this penalty level
                if kind == DcKind::Penalized
                    && rank_one_residual(&prev.as_ref().unwrap().x_matrix, prev_stats.1)
                        > cfg.rank_tol
                    && rho < RHO_CAP
                {
                    rho = (rho * RHO_GROWTH).min(RHO_CAP);
                    trace.rho_steps.push(trace.objective_per_iter.len());
                    continue;
                }
                break;
            }
        }

        let (s1_new, u1_new) = top_pair(&sol.x_matrix)?;
        let rank_res = rank_one_residual(&sol.x_matrix, s1_new);
        let objective = dc_objective((tr, s1_new, scal), rho);
        let prev_objective = trace.objective_per_iter.last().copied();
        trace.objective_per_iter.push(objective);
        trace.rank_residual_per_iter.push(rank_res);

        sigma1 = s1_new;
        u1 = u1_new;
        prev_stats = (tr, sigma1, scal);
        warm = Some(sol.warm.clone());
        prev = Some(sol);
        prev_certified = certified;

        // Rank feasibility closes on the measured rank residual alone (the
        // extracted vector is re-verified by callers in exact arithmetic);
        // the penalized problems report objective values, so their stall
        // exits require a solver-certified iterate.
        let rank_success = kind == DcKind::RankFeasibility && rank_res <= cfg.rank_tol;
        let stalled = prev_objective.is_some_and(|po| po - objective < cfg.epsilon);
        let rank_stuck = t >= STALL_WINDOW
            && rank_res > cfg.rank_tol
            && trace
                .rank_residual_per_iter
                .get(trace.rank_residual_per_iter.len().saturating_sub(STALL_WINDOW))
                .is_some_and(|old| rank_res > 0.5 * old);
        if rank_success {
            trace.converged = true;
            break;
        }
        if stalled || rank_stuck {
            if rank_res > cfg.rank_tol && rho < RHO_CAP && kind == DcKind::Penalized {
                rho = (rho * RHO_GROWTH).min(RHO_CAP);
                trace.rho_steps.push(trace.objective_per_iter.len());
                continue;
            }
            if kind == DcKind::RankFeasibility && rank_res > cfg.rank_tol && rounding_restarts < 2 {
                rounding_restarts += 1;
                let (_, wv) = rank_one_factor(&prev.as_ref().unwrap().x_matrix)?;
                let unit = wv.map(|z| {
                    if z.norm() > 1e-12 {
                        z / z.norm()
                    } else {
                        C64::new(1.0, 0.0)
                    }
                });
                // any unit vector is a valid linearization anchor (the
                // surrogate stays a lower bound on the spectral norm)
                u1 = unit.map(|z| z / (n as f64).sqrt());
                continue;
            }
            if stalled {
                match kind {
                    DcKind::RankFeasibility => {
                        trace.converged = rank_res <= cfg.rank_tol;
                        break;
                    }
                    DcKind::Penalized => {
                        if certified {
                            trace.converged = rank_res <= cfg.rank_tol;
                            break;
                        }
                        full_budget = true;
                        continue;
                    }
                }
            }
        }
        if t == cfg.max_dc_iters {
            let quality = match kind {
                DcKind::Penalized => certified,
                DcKind::RankFeasibility => true,
            };
            trace.converged = quality && rank_res <= cfg.rank_tol;
        }
    }

    let solution = prev.ok_or_else(|| Error::Solver {
        context: context.to_string(),
        message: "no accepted dc iterate".into(),
    })?;
    if kind == DcKind::Penalized && !prev_certified {
        trace.converged = false;
    }
    Ok(DcOutcome { solution, trace })
}

// --- public drivers ------------------------------------------------------------

/// Sparsity-inducing beamformer step: given reflection coefficients, find
/// per-device slack scores `x` (smaller means easier to serve at threshold
/// `gamma`) and the lifted beamformer matrix minimizing
/// `sum_i x_i + rho (tr(M) - ||M||_2)` subject to
/// `tr(M) - gamma tr(M H_i) <= x_i` and `tr(M) >= 1`.
///
/// `gamma` weighs the per-device combined gain: it is the error threshold
/// normalized by the noise-to-power ratio.
pub fn solve_sparsity_beamformer(
    channels: &ChannelSet,
    phases: &PhaseVector,
    gamma: f64,
    cfg: &DcConfig,
    solver: &SolverConfig,
) -> Result<(DVector<f64>, DMatrix<C64>, DcTrace)> {
    if !(gamma > 0.0) {
        return Err(Error::Config("gamma must be positive".into()));
    }
    let h_eff = effective_channel(channels, phases)?;
    let problem = sparsity_beamformer_problem(&h_eff, gamma);
    let session = SdpSession::new(&problem)?;
    let m_dim = channels.m_antennas;
    let init = identity(m_dim).map(|z| z / m_dim as f64);
    let out = dc_loop(
        &session,
        DcKind::Penalized,
        0.0,
        &problem.obj_scalars,
        init,
        cfg,
        solver,
        "sparsity beamformer",
    )?;
    Ok((out.solution.x_scalars.clone(), out.solution.x_matrix.clone(), out.trace))
}

/// Sparsity-inducing phase step: given the beamformer and the slack targets
/// from the beamformer step, drive the lifted reflection matrix toward rank
/// one inside `||m||^2 - gamma (tr(R_i V) + |c_i|^2) <= x_i`.
///
/// When the returned trace has `converged = false`, the extracted phases are
/// best-effort and the caller should keep its previous iterate.
pub fn solve_sparsity_phases(
    channels: &ChannelSet,
    m: &Beamformer,
    x: &DVector<f64>,
    gamma: f64,
    cfg: &DcConfig,
    solver: &SolverConfig,
) -> Result<(PhaseVector, DMatrix<C64>, DcTrace)> {
    if !(gamma > 0.0) {
        return Err(Error::Config("gamma must be positive".into()));
    }
    if channels.n_elements == 0 {
        return Err(Error::Config("phase problem requires at least one element".into()));
    }
    if x.len() != channels.num_devices() {
        return Err(Error::Dimension("slack vector length must match device count".into()));
    }
    let devices: Vec<usize> = (0..channels.num_devices()).collect();
    let data = PhaseProblemData::new(channels, m, &devices)?;
    let problem = sparsity_phases_problem(&data, x, gamma);
    run_phase_dc(&problem, cfg, solver, "sparsity phases")
}

/// Min-norm beamformer step over a fixed device set: minimize
/// `tr(M) + rho (tr(M) - ||M||_2)` subject to `tr(M H_i) >= 1`.
pub fn solve_feasibility_beamformer(
    channels: &ChannelSet,
    phases: &PhaseVector,
    selected: &[usize],
    cfg: &DcConfig,
    solver: &SolverConfig,
) -> Result<(Beamformer, DMatrix<C64>, DcTrace)> {
    check_selected(channels, selected)?;
    let h_eff = effective_channel(channels, phases)?;
    let h_sel: Vec<_> = selected.iter().map(|&i| h_eff[i].clone()).collect();
    let problem = feasibility_beamformer_problem(&h_sel);
    let session = SdpSession::new(&problem)?;
    let m_dim = channels.m_antennas;
    let init = identity(m_dim).map(|z| z / m_dim as f64);
    let out = dc_loop(
        &session,
        DcKind::Penalized,
        1.0,
        &problem.obj_scalars,
        init,
        cfg,
        solver,
        "feasibility beamformer",
    )?;
    let (_, w) = rank_one_factor(&out.solution.x_matrix)?;
    Ok((Beamformer::new(w)?, out.solution.x_matrix.clone(), out.trace))
}

/// Phase step over a fixed device set: drive the lifted reflection matrix to
/// rank one inside `tr(R_i V) + |c_i|^2 >= 1`.
pub fn solve_feasibility_phases(
    channels: &ChannelSet,
    m: &Beamformer,
    selected: &[usize],
    cfg: &DcConfig,
    solver: &SolverConfig,
) -> Result<(PhaseVector, DMatrix<C64>, DcTrace)> {
    check_selected(channels, selected)?;
    if channels.n_elements == 0 {
        return Err(Error::Config("phase problem requires at least one element".into()));
    }
    let data = PhaseProblemData::new(channels, m, selected)?;
    let problem = feasibility_phases_problem(&data);
    run_phase_dc(&problem, cfg, solver, "feasibility phases")
}

fn run_phase_dc(
    problem: &SdpProblem,
    cfg: &DcConfig,
    solver: &SolverConfig,
    context: &str,
) -> Result<(PhaseVector, DMatrix<C64>, DcTrace)> {
    let session = SdpSession::new(problem)?;
    let init = identity(problem.dim);
    let out = dc_loop(
        &session,
        DcKind::RankFeasibility,
        0.0,
        &problem.obj_scalars,
        init,
        cfg,
        solver,
        context,
    )?;
    let phases = recover_phases(&out.solution.x_matrix)?;
    let v_lifted = if out.trace.converged {
        // exact rank-one certificate with unit diagonal, rebuilt from the
        // extracted reflection coefficients
        let (_, w) = rank_one_factor(&out.solution.x_matrix)?;
        let unit = w.map(|z| if z.norm() > 1e-12 { z / z.norm() } else { C64::new(1.0, 0.0) });
        outer(&unit)
    } else {
        out.solution.x_matrix.clone()
    };
    Ok((phases, v_lifted, out.trace))
}
