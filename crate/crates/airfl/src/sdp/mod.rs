//! A self-contained first-order solver for lifted conic subproblems:
//!
//! ```text
//! minimize    <C, X> + c' x
//! subject to  <A_j, X> + a_j' x  {<=, =, >=}  b_j      j = 1..p
//!             X Hermitian PSD (n x n),  x >= 0
//! ```
//!
//! Inequalities gain internal nonnegative slacks, giving the canonical form
//! `minimize c'z  s.t.  Az = b,  z in K` with `K` the product of the PSD
//! cone (in a scaled real parameterization), the nonnegative orthant for the
//! scalar block and the nonnegative orthant for the slacks. The solver is a
//! two-block ADMM: an affine projection step backed by a cached Cholesky
//! factorization of `A A'` (the factorization depends only on the constraint
//! system, so re-solves with a new objective are cheap), a cone projection
//! step, and a dual ascent step with over-relaxation and residual-balancing
//! penalty adaptation. Structural infeasibility is detected through a Farkas
//! certificate built from the drift of the affine-step multipliers.

pub mod eig;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::{C64, Error, Result};

pub use eig::{hermitian_eig, psd_project, rank_one_residual, top_eigvec};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
/// Residuals are evaluated every this many iterations.
const CHECK_EVERY: usize = 10;
/// Penalty adaptation / infeasibility checks happen every this many iterations.
const ADAPT_EVERY: usize = 50;

/// Constraint sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintSense {
    Le,
    Eq,
    Ge,
}

/// One affine constraint `<a_matrix, X> + a_scalars' x  sense  rhs`.
#[derive(Debug, Clone)]
pub struct SdpConstraint {
    pub a_matrix: DMatrix<C64>,
    pub a_scalars: DVector<f64>,
    pub rhs: f64,
    pub sense: ConstraintSense,
}

/// Problem data in the canonical lifted form.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    /// Side of the Hermitian matrix block.
    pub dim: usize,
    /// Number of nonnegative auxiliary scalars.
    pub num_scalars: usize,
    pub obj_matrix: DMatrix<C64>,
    pub obj_scalars: DVector<f64>,
    pub constraints: Vec<SdpConstraint>,
}

fn hermitian_defect(a: &DMatrix<C64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in r..n {
            worst = worst.max((a[(r, c)] - a[(c, r)].conj()).norm());
        }
    }
    worst
}

impl SdpProblem {
    pub fn validate(&self) -> Result<()> {
        let n = self.dim;
        let check_mat = |name: &str, m: &DMatrix<C64>| -> Result<()> {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::Dimension(format!(
                    "{name} is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Numeric(format!("{name} has non-finite entries")));
            }
            if hermitian_defect(m) > 1e-12 * (1.0 + m.norm()) {
                return Err(Error::Config(format!("{name} is not Hermitian")));
            }
            Ok(())
        };
        check_mat("objective matrix", &self.obj_matrix)?;
        if self.obj_scalars.len() != self.num_scalars {
            return Err(Error::Dimension("objective scalar length mismatch".into()));
        }
        for (j, con) in self.constraints.iter().enumerate() {
            check_mat(&format!("constraint {j} matrix"), &con.a_matrix)?;
            if con.a_scalars.len() != self.num_scalars {
                return Err(Error::Dimension(format!(
                    "constraint {j} scalar length mismatch"
                )));
            }
            if !con.rhs.is_finite() {
                return Err(Error::Numeric(format!("constraint {j} rhs not finite")));
            }
        }
        Ok(())
    }

    /// Violation of constraint `j` at `(x_matrix, x_scalars)`; positive means
    /// infeasible by that amount.
    pub fn constraint_violation(&self, j: usize, x_matrix: &DMatrix<C64>, x_scalars: &DVector<f64>) -> f64 {
        let con = &self.constraints[j];
        let mut lhs = 0.0;
        for r in 0..self.dim {
            for c in 0..self.dim {
                lhs += (con.a_matrix[(r, c)].conj() * x_matrix[(r, c)]).re;
            }
        }
        lhs += con.a_scalars.dot(x_scalars);
        match con.sense {
            ConstraintSense::Le => lhs - con.rhs,
            ConstraintSense::Ge => con.rhs - lhs,
            ConstraintSense::Eq => (lhs - con.rhs).abs(),
        }
    }

    /// Largest constraint violation (see [`Self::constraint_violation`]).
    pub fn max_violation(&self, x_matrix: &DMatrix<C64>, x_scalars: &DVector<f64>) -> f64 {
        (0..self.constraints.len())
            .map(|j| self.constraint_violation(j, x_matrix, x_scalars).max(0.0))
            .fold(0.0, f64::max)
    }
}

/// Solver parameters.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub max_iters: usize,
    /// Initial splitting penalty.
    pub penalty_step: f64,
    /// Enable residual-balancing penalty adaptation.
    pub adaptive: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol_abs: 1e-7, tol_rel: 1e-7, max_iters: 50_000, penalty_step: 1.0, adaptive: true }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_abs > 0.0) || !(self.tol_rel > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be >= 1".into()));
        }
        if !(self.penalty_step > 0.0) {
            return Err(Error::Config("penalty_step must be positive".into()));
        }
        Ok(())
    }
}

/// Termination status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    InfeasibleCertificate,
    MaxIters,
}

/// Internal splitting state kept for warm starts.
#[derive(Debug, Clone)]
pub(crate) struct WarmState {
    pub zt: DVector<f64>,
    pub u: DVector<f64>,
    pub sigma: f64,
}

/// Certified solution of an [`SdpProblem`].
#[derive(Debug, Clone)]
pub struct SdpSolution {
    /// Hermitian PSD matrix block (exactly in the cone).
    pub x_matrix: DMatrix<C64>,
    /// Nonnegative scalar block.
    pub x_scalars: DVector<f64>,
    pub objective: f64,
    /// Largest original-units constraint violation, scaled by `1 + |b_j|`.
    pub primal_residual: f64,
    /// `||c + A' y - lambda||_inf / (1 + ||c||_inf)` recomputable from the
    /// returned duals.
    pub dual_residual: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    /// Affine-constraint multipliers, one per constraint, original units.
    pub dual_affine: DVector<f64>,
    /// Cone dual for the matrix block (Hermitian, PSD up to solver accuracy).
    pub dual_cone_matrix: DMatrix<C64>,
    /// Cone dual for the scalar block.
    pub dual_cone_scalars: DVector<f64>,
    pub(crate) warm: WarmState,
}

// --- scaled real parameterization of the Hermitian block --------------------
//
// Coordinates: upper triangle column-major; the diagonal enters as-is and
// each off-diagonal contributes sqrt(2) Re and sqrt(2) Im, making the map an
// isometry between (Hermitian, Frobenius) and R^(n^2).

pub(crate) fn svec_len(n: usize) -> usize {
    n * n
}

pub(crate) fn svec_into(h: &DMatrix<C64>, out: &mut [f64]) {
    let n = h.nrows();
    let mut idx = 0;
    for j in 0..n {
        for i in 0..=j {
            if i == j {
                out[idx] = h[(i, i)].re;
                idx += 1;
            } else {
                out[idx] = SQRT_2 * h[(i, j)].re;
                out[idx + 1] = SQRT_2 * h[(i, j)].im;
                idx += 2;
            }
        }
    }
}

pub(crate) fn unsvec(v: &[f64], n: usize) -> DMatrix<C64> {
    let mut h = DMatrix::from_element(n, n, C64::default());
    let mut idx = 0;
    for j in 0..n {
        for i in 0..=j {
            if i == j {
                h[(i, i)] = C64::new(v[idx], 0.0);
                idx += 1;
            } else {
                let z = C64::new(v[idx] / SQRT_2, v[idx + 1] / SQRT_2);
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
                idx += 2;
            }
        }
    }
    h
}

struct Layout {
    n: usize,
    num_scalars: usize,
    num_slacks: usize,
}

impl Layout {
    fn mat_len(&self) -> usize {
        svec_len(self.n)
    }
    fn total(&self) -> usize {
        self.mat_len() + self.num_scalars + self.num_slacks
    }
}

/// A factorized constraint system that can be re-solved with different
/// objectives (the difference-of-convex loop swaps only the linear term).
pub struct SdpSession {
    layout: Layout,
    /// Row-equilibrated constraint matrix, p x D.
    a: DMatrix<f64>,
    /// Equilibrated right-hand side.
    b: DVector<f64>,
    /// Row scaling factors: scaled row j = row_scale[j] * original row j.
    row_scale: DVector<f64>,
    rhs_orig: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    b_norm: f64,
}

impl SdpSession {
    pub fn new(problem: &SdpProblem) -> Result<Self> {
        problem.validate()?;
        let n = problem.dim;
        let p = problem.constraints.len();
        let num_slacks = problem
            .constraints
            .iter()
            .filter(|c| c.sense != ConstraintSense::Eq)
            .count();
        let layout = Layout { n, num_scalars: problem.num_scalars, num_slacks };
        let d_total = layout.total();

        let mut a = DMatrix::zeros(p, d_total);
        let mut rhs_orig = DVector::zeros(p);
        let mut slack_col = layout.mat_len() + layout.num_scalars;
        let mut row_buf = vec![0.0; layout.mat_len()];
        for (j, con) in problem.constraints.iter().enumerate() {
            svec_into(&con.a_matrix, &mut row_buf);
            for (k, &v) in row_buf.iter().enumerate() {
                a[(j, k)] = v;
            }
            for (k, &v) in con.a_scalars.iter().enumerate() {
                a[(j, layout.mat_len() + k)] = v;
            }
            match con.sense {
                ConstraintSense::Le => {
                    a[(j, slack_col)] = 1.0;
                    slack_col += 1;
                }
                ConstraintSense::Ge => {
                    a[(j, slack_col)] = -1.0;
                    slack_col += 1;
                }
                ConstraintSense::Eq => {}
            }
            rhs_orig[j] = con.rhs;
        }

        // row equilibration
        let mut row_scale = DVector::from_element(p, 1.0);
        let mut b = rhs_orig.clone();
        for j in 0..p {
            let norm = a.row(j).norm();
            let s = 1.0 / norm.max(1e-10);
            row_scale[j] = s;
            for k in 0..d_total {
                a[(j, k)] *= s;
            }
            b[j] *= s;
        }

        // Gram matrix of the constraint system; a tiny ridge guards against
        // duplicated rows.
        let gram = &a * a.transpose();
        let mut ridge = 1e-12 * (gram.trace() / p.max(1) as f64).max(1.0);
        let chol = loop {
            let mut g = gram.clone();
            for j in 0..p {
                g[(j, j)] += ridge;
            }
            match Cholesky::new(g) {
                Some(c) => break c,
                None if ridge < 1e-4 => ridge *= 100.0,
                None => {
                    return Err(Error::Solver {
                        context: "factorization".into(),
                        message: "constraint Gram matrix is singular".into(),
                    })
                }
            }
        };

        let b_norm = b.norm();
        Ok(Self { layout, a, b, row_scale, rhs_orig, chol, b_norm })
    }

    /// Number of affine constraints.
    pub fn num_constraints(&self) -> usize {
        self.a.nrows()
    }

    /// Splitting state seeded from a concrete matrix iterate (zero scalars
    /// and duals), used to start a solve at a meaningful point.
    pub(crate) fn state_from_matrix(&self, seed: &DMatrix<C64>, sigma: f64) -> WarmState {
        let lay = &self.layout;
        let mut zt = DVector::zeros(lay.total());
        let mut buf = vec![0.0; lay.mat_len()];
        svec_into(seed, &mut buf);
        for (k, &v) in buf.iter().enumerate() {
            zt[k] = v;
        }
        WarmState { zt, u: DVector::zeros(lay.total()), sigma }
    }

    /// Solve with the given objective, optionally warm starting from the
    /// internal state of a previous solution of the same constraint system.
    pub fn solve(
        &self,
        obj_matrix: &DMatrix<C64>,
        obj_scalars: &DVector<f64>,
        config: &SolverConfig,
        warm: Option<&SdpSolution>,
    ) -> Result<SdpSolution> {
        self.solve_state(obj_matrix, obj_scalars, config, warm.map(|s| &s.warm))
    }

    pub(crate) fn solve_state(
        &self,
        obj_matrix: &DMatrix<C64>,
        obj_scalars: &DVector<f64>,
        config: &SolverConfig,
        warm: Option<&WarmState>,
    ) -> Result<SdpSolution> {
        config.validate()?;
        let lay = &self.layout;
        let d_total = lay.total();
        let p = self.num_constraints();
        if obj_matrix.nrows() != lay.n || obj_matrix.ncols() != lay.n {
            return Err(Error::Dimension("objective matrix dimension mismatch".into()));
        }
        if obj_scalars.len() != lay.num_scalars {
            return Err(Error::Dimension("objective scalar dimension mismatch".into()));
        }

        let mut c = DVector::zeros(d_total);
        {
            let mut buf = vec![0.0; lay.mat_len()];
            svec_into(obj_matrix, &mut buf);
            for (k, &v) in buf.iter().enumerate() {
                c[k] = v;
            }
            for (k, &v) in obj_scalars.iter().enumerate() {
                c[lay.mat_len() + k] = v;
            }
        }
        let c_inf = c.amax().max(0.0);
        let c_norm = c.norm();

        let mut zt;
        let mut u;
        let mut sigma;
        match warm {
            Some(state) if state.zt.len() == d_total => {
                zt = state.zt.clone();
                u = state.u.clone();
                sigma = state.sigma;
            }
            _ => {
                zt = DVector::zeros(d_total);
                u = DVector::zeros(d_total);
                sigma = config.penalty_step;
            }
        }

        let mut nu = DVector::zeros(p);
        let mut nu_snapshot = nu.clone();
        let mut status = SolveStatus::MaxIters;
        let mut iterations = config.max_iters;
        let mut primal_residual = f64::INFINITY;
        let mut dual_residual = f64::INFINITY;

        let mut w = DVector::zeros(d_total);
        let mut z = DVector::zeros(d_total);
        let mut rhs = DVector::zeros(p);

        for it in 1..=config.max_iters {
            // affine step: minimize c'z + sigma/2 ||z - zt + u||^2 s.t. Az = b
            for k in 0..d_total {
                w[k] = sigma * (zt[k] - u[k]) - c[k];
            }
            rhs.gemv(1.0, &self.a, &w, 0.0);
            rhs.axpy(-sigma, &self.b, 1.0);
            nu = self.chol.solve(&rhs);
            z.gemv_tr(-1.0 / sigma, &self.a, &nu, 0.0);
            z.axpy(1.0 / sigma, &w, 1.0);

            // cone projection of z + u (zt temporarily holds the argument)
            for k in 0..d_total {
                zt[k] = z[k] + u[k];
            }
            // matrix block
            let xm = unsvec(&zt.as_slice()[..lay.mat_len()], lay.n);
            let projected = psd_project(&xm).map_err(|e| Error::Solver {
                context: format!("iteration {it}"),
                message: format!("cone projection failed: {e}"),
            })?;
            {
                let head = &mut zt.as_mut_slice()[..lay.mat_len()];
                let mut buf = vec![0.0; head.len()];
                svec_into(&projected, &mut buf);
                // u <- t - Pi(t), exploiting that zt currently holds t
                for (k, (slot, proj)) in head.iter_mut().zip(buf.iter()).enumerate() {
                    u[k] = *slot - proj;
                    *slot = *proj;
                }
            }
            for k in lay.mat_len()..d_total {
                let t = zt[k];
                let proj = t.max(0.0);
                u[k] = t - proj;
                zt[k] = proj;
            }

            let last = it == config.max_iters;
            if it == 1 || it % CHECK_EVERY == 0 || last {
                // primal: original-units constraint residuals on the cone iterate
                rhs.gemv(1.0, &self.a, &zt, 0.0);
                rhs -= &self.b;
                let mut primal_ok = true;
                let mut pr_report = 0.0f64;
                for j in 0..p {
                    let orig = rhs[j] / self.row_scale[j];
                    let tol = config.tol_abs + config.tol_rel * self.rhs_orig[j].abs();
                    if orig.abs() > tol {
                        primal_ok = false;
                    }
                    pr_report = pr_report.max(orig.abs() / (1.0 + self.rhs_orig[j].abs()));
                }
                // dual: stationarity of the augmented Lagrangian
                w.gemv_tr(1.0, &self.a, &nu, 0.0);
                w += &c;
                w.axpy(sigma, &u, 1.0);
                let dual_inf = w.amax();
                let dual_ok = dual_inf <= config.tol_abs * (1.0 + c_inf);
                primal_residual = pr_report;
                dual_residual = dual_inf / (1.0 + c_inf);

                if primal_ok && dual_ok {
                    status = SolveStatus::Optimal;
                    iterations = it;
                    break;
                }

                if it % ADAPT_EVERY == 0 {
                    if config.adaptive {
                        let pr = rhs.norm() / (1.0 + self.b_norm);
                        // w still holds the stationarity vector
                        let dr = w.norm() / (1.0 + c_norm);
                        if pr > 1e-18 && dr > 1e-18 {
                            let ratio = pr / dr;
                            if !(0.2..=5.0).contains(&ratio) {
                                let step = ratio.sqrt().clamp(0.1, 10.0);
                                let new_sigma = (sigma * step).clamp(1e-6, 1e6);
                                u.scale_mut(sigma / new_sigma);
                                sigma = new_sigma;
                            }
                        }
                    }
                    if !primal_ok && it >= 300 {
                        if let Some(()) = self.infeasibility_certificate(&nu, &nu_snapshot, lay) {
                            status = SolveStatus::InfeasibleCertificate;
                            iterations = it;
                            break;
                        }
                    }
                    nu_snapshot.copy_from(&nu);
                }
            }
        }

        let x_matrix = unsvec(&zt.as_slice()[..lay.mat_len()], lay.n);
        let x_scalars =
            DVector::from_iterator(lay.num_scalars, zt.as_slice()[lay.mat_len()..lay.mat_len() + lay.num_scalars].iter().copied());
        let mut objective = obj_scalars.dot(&x_scalars);
        for r in 0..lay.n {
            for cidx in 0..lay.n {
                objective += (obj_matrix[(r, cidx)].conj() * x_matrix[(r, cidx)]).re;
            }
        }
        let dual_affine = DVector::from_fn(p, |j, _| nu[j] * self.row_scale[j]);
        let lambda_mat = unsvec(
            &u.as_slice()[..lay.mat_len()].iter().map(|v| -sigma * v).collect::<Vec<_>>(),
            lay.n,
        );
        let lambda_scal = DVector::from_fn(lay.num_scalars, |k, _| -sigma * u[lay.mat_len() + k]);

        Ok(SdpSolution {
            x_matrix,
            x_scalars,
            objective,
            primal_residual,
            dual_residual,
            status,
            iterations,
            dual_affine,
            dual_cone_matrix: lambda_mat,
            dual_cone_scalars: lambda_scal,
            warm: WarmState { zt, u, sigma },
        })
    }

    /// Farkas check: a direction `y` with `-A'y` in the dual cone and
    /// `b'y > 0` certifies that `Az = b, z in K` has no solution.
    fn infeasibility_certificate(&self, nu: &DVector<f64>, snapshot: &DVector<f64>, lay: &Layout) -> Option<()> {
        let y_dir = nu - snapshot;
        let y_norm = y_dir.norm();
        if y_norm < 1e-14 {
            return None;
        }
        // normalize so b'y = 1; dividing by a negative value flips the
        // direction into the certificate orientation
        let bty = self.b.dot(&y_dir);
        if bty.abs() <= 1e-9 * y_norm * (1.0 + self.b_norm) {
            return None;
        }
        let y_n = y_dir / bty;
        let mut s_cert = DVector::zeros(lay.total());
        s_cert.gemv_tr(-1.0, &self.a, &y_n, 0.0);
        let scale = s_cert.amax().max(1.0);
        let tol = 1e-7 * scale;
        for k in lay.mat_len()..lay.total() {
            if s_cert[k] < -tol {
                return None;
            }
        }
        let s_mat = unsvec(&s_cert.as_slice()[..lay.mat_len()], lay.n);
        // min eigenvalue via the top eigenvalue of the negated matrix
        let neg = s_mat.map(|z| -z);
        let (top_of_neg, _) = top_eigvec(&neg).ok()?;
        if -top_of_neg < -tol {
            return None;
        }
        Some(())
    }
}

/// One-shot solve. For repeated solves over the same constraints build an
/// [`SdpSession`] once and call [`SdpSession::solve`].
pub fn solve_sdp(
    problem: &SdpProblem,
    config: &SolverConfig,
    warm_start: Option<&SdpSolution>,
) -> Result<SdpSolution> {
    let session = SdpSession::new(problem)?;
    session.solve(&problem.obj_matrix, &problem.obj_scalars, config, warm_start)
}

// --- debug dump --------------------------------------------------------------
//
// Line-oriented text format for cross-solver regression:
//   line 1: "dim <n> scalars <ns> constraints <p>"
//   line 2: "objective"
//   n*n lines "re im" (row-major objective matrix), then ns scalar lines
//   per constraint: "constraint <le|eq|ge> <rhs>" followed by n*n matrix
//   lines and ns scalar lines.

impl SdpProblem {
    pub fn to_dump(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "dim {} scalars {} constraints {}\n",
            self.dim,
            self.num_scalars,
            self.constraints.len()
        ));
        out.push_str("objective\n");
        let push_mat = |out: &mut String, m: &DMatrix<C64>| {
            for r in 0..self.dim {
                for c in 0..self.dim {
                    out.push_str(&format!("{:e} {:e}\n", m[(r, c)].re, m[(r, c)].im));
                }
            }
        };
        push_mat(&mut out, &self.obj_matrix);
        for v in self.obj_scalars.iter() {
            out.push_str(&format!("{v:e}\n"));
        }
        for con in &self.constraints {
            let sense = match con.sense {
                ConstraintSense::Le => "le",
                ConstraintSense::Eq => "eq",
                ConstraintSense::Ge => "ge",
            };
            out.push_str(&format!("constraint {sense} {:e}\n", con.rhs));
            push_mat(&mut out, &con.a_matrix);
            for v in con.a_scalars.iter() {
                out.push_str(&format!("{v:e}\n"));
            }
        }
        out
    }

    pub fn from_dump(text: &str) -> Result<SdpProblem> {
        let mut lines = text.lines().enumerate().peekable();
        let parse_err = |line: usize, message: String| Error::Parse { line: line + 1, message };

        let (hline, header) = lines.next().ok_or_else(|| parse_err(0, "empty dump".into()))?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        let [k0, n, k1, ns, k2, p] = toks[..] else {
            return Err(parse_err(hline, "expected \"dim <n> scalars <ns> constraints <p>\"".into()));
        };
        if k0 != "dim" || k1 != "scalars" || k2 != "constraints" {
            return Err(parse_err(hline, "bad header keywords".into()));
        }
        let n: usize = n.parse().map_err(|e| parse_err(hline, format!("bad dim: {e}")))?;
        let ns: usize = ns.parse().map_err(|e| parse_err(hline, format!("bad scalars: {e}")))?;
        let p: usize = p.parse().map_err(|e| parse_err(hline, format!("bad constraints: {e}")))?;
        if n == 0 || n > 512 || ns > 100_000 || p > 100_000 {
            return Err(parse_err(hline, "dimensions out of range".into()));
        }

        let mut next_content = |expect: &str| -> Result<(usize, String)> {
            for (idx, line) in lines.by_ref() {
                if !line.trim().is_empty() {
                    return Ok((idx, line.to_string()));
                }
            }
            Err(Error::Parse { line: 0, message: format!("unexpected end of dump, expected {expect}") })
        };

        let parse_complex = |idx: usize, line: &str| -> Result<C64> {
            let mut parts = line.split_whitespace();
            let (Some(re), Some(im), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(parse_err(idx, "expected \"re im\"".into()));
            };
            let re: f64 = re.parse().map_err(|e| parse_err(idx, format!("bad real part: {e}")))?;
            let im: f64 = im.parse().map_err(|e| parse_err(idx, format!("bad imag part: {e}")))?;
            if !re.is_finite() || !im.is_finite() {
                return Err(parse_err(idx, "non-finite entry".into()));
            }
            Ok(C64::new(re, im))
        };

        let (oline, otag) = next_content("objective")?;
        if otag.trim() != "objective" {
            return Err(parse_err(oline, "expected \"objective\"".into()));
        }
        let read_matrix = |next: &mut dyn FnMut(&str) -> Result<(usize, String)>| -> Result<DMatrix<C64>> {
            let mut m = DMatrix::from_element(n, n, C64::default());
            for r in 0..n {
                for c in 0..n {
                    let (idx, line) = next("matrix entry")?;
                    m[(r, c)] = parse_complex(idx, &line)?;
                }
            }
            Ok(m)
        };
        let read_scalars = |next: &mut dyn FnMut(&str) -> Result<(usize, String)>| -> Result<DVector<f64>> {
            let mut v = DVector::zeros(ns);
            for k in 0..ns {
                let (idx, line) = next("scalar entry")?;
                v[k] = line
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| parse_err(idx, format!("bad scalar: {e}")))?;
                if !v[k].is_finite() {
                    return Err(parse_err(idx, "non-finite scalar".into()));
                }
            }
            Ok(v)
        };

        let obj_matrix = read_matrix(&mut next_content)?;
        let obj_scalars = read_scalars(&mut next_content)?;

        let mut constraints = Vec::with_capacity(p);
        for _ in 0..p {
            let (idx, line) = next_content("constraint header")?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            let ["constraint", sense, rhs] = toks[..] else {
                return Err(parse_err(idx, "expected \"constraint <sense> <rhs>\"".into()));
            };
            let sense = match sense {
                "le" => ConstraintSense::Le,
                "eq" => ConstraintSense::Eq,
                "ge" => ConstraintSense::Ge,
                other => return Err(parse_err(idx, format!("unknown sense {other:?}"))),
            };
            let rhs: f64 = rhs.parse().map_err(|e| parse_err(idx, format!("bad rhs: {e}")))?;
            if !rhs.is_finite() {
                return Err(parse_err(idx, "non-finite rhs".into()));
            }
            let a_matrix = read_matrix(&mut next_content)?;
            let a_scalars = read_scalars(&mut next_content)?;
            constraints.push(SdpConstraint { a_matrix, a_scalars, rhs, sense });
        }
        if let Some((idx, line)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(parse_err(idx, format!("trailing content: {line:?}")));
        }

        let problem = SdpProblem { dim: n, num_scalars: ns, obj_matrix, obj_scalars, constraints };
        problem.validate()?;
        Ok(problem)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn eye(n: usize) -> DMatrix<C64> {
        DMatrix::from_diagonal_element(n, n, C64::new(1.0, 0.0))
    }

    fn outer(h: &DVector<C64>) -> DMatrix<C64> {
        let n = h.len();
        DMatrix::from_fn(n, n, |r, c| h[r] * h[c].conj())
    }

    fn no_scalars(dim: usize, obj: DMatrix<C64>, constraints: Vec<SdpConstraint>) -> SdpProblem {
        SdpProblem { dim, num_scalars: 0, obj_matrix: obj, obj_scalars: DVector::zeros(0), constraints }
    }

    #[test]
    fn svec_is_a_frobenius_isometry() {
        let mut rng = crate::rng::substream(4, &[1]);
        for _ in 0..20 {
            let raw = DMatrix::from_fn(5, 5, |_, _| {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let a = (&raw + raw.adjoint()).map(|z| z * 0.5);
            let raw2 = DMatrix::from_fn(5, 5, |_, _| {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let b = (&raw2 + raw2.adjoint()).map(|z| z * 0.5);
            let mut va = vec![0.0; svec_len(5)];
            let mut vb = vec![0.0; svec_len(5)];
            svec_into(&a, &mut va);
            svec_into(&b, &mut vb);
            let dot: f64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
            let frob: f64 = a
                .iter()
                .zip(b.iter())
                .map(|(x, y)| (x.conj() * y).re)
                .sum();
            assert_relative_eq!(dot, frob, epsilon = 1e-12);
            let back = unsvec(&va, 5);
            assert!((&a - back).norm() < 1e-14);
        }
    }

    #[test]
    fn minimal_trace_with_floor_is_one() {
        let problem = no_scalars(
            2,
            eye(2),
            vec![SdpConstraint {
                a_matrix: eye(2),
                a_scalars: DVector::zeros(0),
                rhs: 1.0,
                sense: ConstraintSense::Ge,
            }],
        );
        let sol = solve_sdp(&problem, &SolverConfig::default(), None).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_relative_eq!(sol.objective, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn matched_filter_closed_form() {
        // minimize tr(M) s.t. tr(M hh^H) >= 1 has value 1/||h||^2 attained at
        // hh^H / ||h||^4 (Cauchy-Schwarz)
        let h = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0)]);
        let problem = no_scalars(
            2,
            eye(2),
            vec![SdpConstraint {
                a_matrix: outer(&h),
                a_scalars: DVector::zeros(0),
                rhs: 1.0,
                sense: ConstraintSense::Ge,
            }],
        );
        let sol = solve_sdp(&problem, &SolverConfig::default(), None).unwrap();
        assert_relative_eq!(sol.objective, 0.2, max_relative = 1e-5);
        let expect = outer(&h).map(|z| z / 25.0);
        assert!((&sol.x_matrix - expect).norm() < 1e-4);
    }

    #[test]
    fn scalar_block_linear_program() {
        // minimize x0 + 2 x1 s.t. x0 + x1 >= 1, x0 <= 0.4 (matrix block inert)
        let zero = DMatrix::from_element(1, 1, C64::default());
        let problem = SdpProblem {
            dim: 1,
            num_scalars: 2,
            obj_matrix: zero.clone(),
            obj_scalars: DVector::from_vec(vec![1.0, 2.0]),
            constraints: vec![
                SdpConstraint {
                    a_matrix: zero.clone(),
                    a_scalars: DVector::from_vec(vec![1.0, 1.0]),
                    rhs: 1.0,
                    sense: ConstraintSense::Ge,
                },
                SdpConstraint {
                    a_matrix: zero.clone(),
                    a_scalars: DVector::from_vec(vec![1.0, 0.0]),
                    rhs: 0.4,
                    sense: ConstraintSense::Le,
                },
            ],
        };
        let sol = solve_sdp(&problem, &SolverConfig::default(), None).unwrap();
        // optimum x = (0.4, 0.6), objective 1.6
        assert_relative_eq!(sol.objective, 1.6, epsilon = 1e-5);
        assert_relative_eq!(sol.x_scalars[0], 0.4, epsilon = 1e-5);
        assert_relative_eq!(sol.x_scalars[1], 0.6, epsilon = 1e-5);
    }

    #[test]
    fn random_real_instance_matches_grid_oracle() {
        // 2x2 real PSD block, two constraints; brute-force grid over the
        // 3-parameter cone patch (coarse pass plus local refinement at grid
        // step 1e-3)
        let mut rng = crate::rng::substream(9, &[2]);
        let mut sym = |scale: f64| -> DMatrix<C64> {
            let a = rng.gen_range(-scale..scale);
            let b = rng.gen_range(-scale..scale);
            let c = rng.gen_range(-scale..scale);
            DMatrix::from_row_slice(2, 2, &[
                C64::new(a, 0.0),
                C64::new(b, 0.0),
                C64::new(b, 0.0),
                C64::new(c, 0.0),
            ])
        };
        let c_obj = sym(1.0);
        let a1 = sym(1.0);
        let problem = no_scalars(
            2,
            c_obj.clone(),
            vec![
                SdpConstraint {
                    a_matrix: eye(2),
                    a_scalars: DVector::zeros(0),
                    rhs: 1.0,
                    sense: ConstraintSense::Ge,
                },
                SdpConstraint {
                    a_matrix: eye(2),
                    a_scalars: DVector::zeros(0),
                    rhs: 2.0,
                    sense: ConstraintSense::Le,
                },
                SdpConstraint {
                    a_matrix: a1.clone(),
                    a_scalars: DVector::zeros(0),
                    rhs: 0.3,
                    sense: ConstraintSense::Le,
                },
            ],
        );
        let sol = solve_sdp(&problem, &SolverConfig::default(), None).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);

        let value = |a: f64, b: f64, c: f64, m: &DMatrix<C64>| -> f64 {
            m[(0, 0)].re * a + 2.0 * m[(0, 1)].re * b + m[(1, 1)].re * c
        };
        let feasible = |a: f64, b: f64, c: f64| -> bool {
            a >= 0.0
                && c >= 0.0
                && a * c >= b * b
                && a + c >= 1.0
                && a + c <= 2.0
                && value(a, b, c, &a1) <= 0.3
        };
        let mut search = |lo: [f64; 3], hi: [f64; 3], step: f64| -> ([f64; 3], f64) {
            let mut best = ([0.0; 3], f64::INFINITY);
            let counts: Vec<usize> =
                (0..3).map(|i| ((hi[i] - lo[i]) / step).round() as usize + 1).collect();
            for ia in 0..counts[0] {
                let a = lo[0] + ia as f64 * step;
                for ib in 0..counts[1] {
                    let b = lo[1] + ib as f64 * step;
                    for ic in 0..counts[2] {
                        let c = lo[2] + ic as f64 * step;
                        if feasible(a, b, c) {
                            let v = value(a, b, c, &c_obj);
                            if v < best.1 {
                                best = ([a, b, c], v);
                            }
                        }
                    }
                }
            }
            best
        };
        let (coarse, _) = search([0.0, -1.0, 0.0], [2.0, 1.0, 2.0], 0.01);
        let (_, refined) = search(
            [coarse[0] - 0.01, coarse[1] - 0.01, coarse[2] - 0.01],
            [coarse[0] + 0.01, coarse[1] + 0.01, coarse[2] + 0.01],
            1e-3,
        );
        assert!(
            (sol.objective - refined).abs() <= 2e-3,
            "solver {} vs grid {}",
            sol.objective,
            refined
        );
    }

    #[test]
    fn kkt_residuals_recomputable_from_returned_iterates() {
        let h = DVector::from_vec(vec![C64::new(0.6, 0.2), C64::new(-0.3, 1.1), C64::new(0.0, -0.7)]);
        let problem = SdpProblem {
            dim: 3,
            num_scalars: 1,
            obj_matrix: eye(3),
            obj_scalars: DVector::from_vec(vec![0.5]),
            constraints: vec![
                SdpConstraint {
                    a_matrix: outer(&h),
                    a_scalars: DVector::from_vec(vec![1.0]),
                    rhs: 1.0,
                    sense: ConstraintSense::Ge,
                },
                SdpConstraint {
                    a_matrix: eye(3),
                    a_scalars: DVector::from_vec(vec![-1.0]),
                    rhs: 0.8,
                    sense: ConstraintSense::Le,
                },
            ],
        };
        let cfg = SolverConfig::default();
        let sol = solve_sdp(&problem, &cfg, None).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);

        // primal: every constraint within tol_abs + tol_rel |b|
        for j in 0..problem.constraints.len() {
            let viol = problem.constraint_violation(j, &sol.x_matrix, &sol.x_scalars);
            let tol = cfg.tol_abs + cfg.tol_rel * problem.constraints[j].rhs.abs();
            assert!(viol <= tol, "constraint {j} violated by {viol:e}");
        }
        // matrix block in the cone
        let (values, _) = hermitian_eig(&sol.x_matrix).unwrap();
        assert!(values.iter().all(|&l| l >= -cfg.tol_abs));
        assert!(sol.x_scalars.iter().all(|&x| x >= -cfg.tol_abs));

        // stationarity against the returned duals:
        //   C + sum_j y_j A_j - Lambda = 0 (matrix block)
        //   c + sum_j y_j a_j - lambda = 0 (scalar block)
        let mut stat_m = problem.obj_matrix.clone();
        let mut stat_s = problem.obj_scalars.clone();
        for (j, con) in problem.constraints.iter().enumerate() {
            let y = sol.dual_affine[j];
            stat_m += con.a_matrix.map(|z| z * y);
            stat_s += con.a_scalars.map(|v| v * y);
        }
        stat_m -= &sol.dual_cone_matrix;
        stat_s -= &sol.dual_cone_scalars;
        let scale = 1.0 + problem.obj_matrix.norm();
        assert!(stat_m.norm() <= 1e-5 * scale, "matrix stationarity {:e}", stat_m.norm());
        assert!(stat_s.norm() <= 1e-5 * scale, "scalar stationarity {:e}", stat_s.norm());
        // multiplier signs: Ge rows push the objective up, Le rows down
        assert!(sol.dual_affine[0] <= 1e-6);
        assert!(sol.dual_affine[1] >= -1e-6);
        // cone dual is PSD up to tolerance
        let (dual_values, _) = hermitian_eig(&sol.dual_cone_matrix).unwrap();
        assert!(dual_values.iter().all(|&l| l >= -1e-5));
    }

    #[test]
    fn warm_start_never_worsens_iteration_count() {
        let h = DVector::from_vec(vec![C64::new(1.0, 0.5), C64::new(0.2, -0.8)]);
        let problem = no_scalars(
            2,
            eye(2),
            vec![SdpConstraint {
                a_matrix: outer(&h),
                a_scalars: DVector::zeros(0),
                rhs: 1.0,
                sense: ConstraintSense::Ge,
            }],
        );
        let cfg = SolverConfig::default();
        let cold = solve_sdp(&problem, &cfg, None).unwrap();
        let warm = solve_sdp(&problem, &cfg, Some(&cold)).unwrap();
        assert!(
            warm.iterations <= cold.iterations,
            "warm {} vs cold {}",
            warm.iterations,
            cold.iterations
        );
        assert_relative_eq!(warm.objective, cold.objective, max_relative = 1e-5);
    }

    #[test]
    fn structural_infeasibility_is_certified() {
        // tr(X) <= -1 over the PSD cone is infeasible
        let problem = no_scalars(
            2,
            eye(2),
            vec![SdpConstraint {
                a_matrix: eye(2),
                a_scalars: DVector::zeros(0),
                rhs: -1.0,
                sense: ConstraintSense::Le,
            }],
        );
        let sol = solve_sdp(&problem, &SolverConfig::default(), None).unwrap();
        assert_eq!(sol.status, SolveStatus::InfeasibleCertificate);
    }

    #[test]
    fn rejects_non_hermitian_data() {
        let mut bad = eye(2);
        bad[(0, 1)] = C64::new(1.0, 0.0);
        let problem = no_scalars(2, bad, vec![]);
        assert!(matches!(problem.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn dump_roundtrip_and_errors() {
        let h = DVector::from_vec(vec![C64::new(1.0, -0.4), C64::new(0.0, 2.0)]);
        let problem = SdpProblem {
            dim: 2,
            num_scalars: 1,
            obj_matrix: eye(2),
            obj_scalars: DVector::from_vec(vec![3.0]),
            constraints: vec![
                SdpConstraint {
                    a_matrix: outer(&h),
                    a_scalars: DVector::from_vec(vec![-1.5]),
                    rhs: 0.25,
                    sense: ConstraintSense::Le,
                },
                SdpConstraint {
                    a_matrix: eye(2),
                    a_scalars: DVector::from_vec(vec![0.0]),
                    rhs: 1.0,
                    sense: ConstraintSense::Eq,
                },
            ],
        };
        let text = problem.to_dump();
        let back = SdpProblem::from_dump(&text).unwrap();
        assert_eq!(back.dim, 2);
        assert_eq!(back.num_scalars, 1);
        assert_eq!(back.constraints.len(), 2);
        assert!((&back.obj_matrix - &problem.obj_matrix).norm() < 1e-15);
        assert!((&back.constraints[0].a_matrix - &problem.constraints[0].a_matrix).norm() < 1e-15);
        assert_eq!(back.constraints[1].sense, ConstraintSense::Eq);

        assert!(SdpProblem::from_dump("").is_err());
        assert!(SdpProblem::from_dump("dim 2 scalars 0 constraints 0\nobjective\n1 0\n").is_err());
        assert!(SdpProblem::from_dump("dim 0 scalars 0 constraints 0\nobjective\n").is_err());
        let err = SdpProblem::from_dump("dim 1 scalars 0 constraints 0\nobjective\nnan 0\n");
        assert!(matches!(err, Err(Error::Parse { .. })));
    }
}
