//! Two-step device selection.
//!
//! Step one scores devices by how much slack they need at the target error
//! level (an l1-relaxed sparsity pass alternating between the beamformer and
//! the reflection pattern). Step two bisects over priority-ordered prefixes,
//! certifying each probe by alternating min-norm beamformer and phase
//! updates until the achieved aggregation error meets the threshold or the
//! probe objective stalls.
//!
//! All conic subproblems are solved on channels normalized to unit average
//! effective gain; the threshold moves with the normalization and every
//! feasibility verdict is equivalent to the closed-form error check on the
//! original channels. Beamformers are meaningful up to positive scaling, so
//! normalized-world vectors are returned as-is.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::aircomp::{aggregation_mse, AircompInstance, Beamformer, PhaseVector};
use crate::channel::ChannelSet;
use crate::dc::{self, DcConfig, PhaseProblemData};
use crate::rng::{substream, tag};
use crate::sdp::{
    hermitian_eig, rank_one_residual, solve_sdp, SdpProblem, SdpSolution, SolveStatus, SolverConfig,
};
use crate::{C64, Error, Result};

/// Selection scheme: the full alternating DC pipeline or one of the
/// baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Dc,
    Sdr,
    RandomPhase,
    NoIrs,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Dc => "dc",
            Scheme::Sdr => "sdr",
            Scheme::RandomPhase => "random_phase",
            Scheme::NoIrs => "no_irs",
        }
    }

    pub fn all() -> [Scheme; 4] {
        [Scheme::Dc, Scheme::Sdr, Scheme::RandomPhase, Scheme::NoIrs]
    }

    fn uses_surface(&self) -> bool {
        !matches!(self, Scheme::NoIrs)
    }

    fn optimizes_phases(&self) -> bool {
        matches!(self, Scheme::Dc | Scheme::Sdr)
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dc" => Ok(Scheme::Dc),
            "sdr" => Ok(Scheme::Sdr),
            "random_phase" => Ok(Scheme::RandomPhase),
            "no_irs" => Ok(Scheme::NoIrs),
            other => Err(Error::Config(format!(
                "unknown scheme {other:?} (expected dc|sdr|random_phase|no_irs)"
            ))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameters of the selection pipeline.
#[derive(Debug, Clone)]
pub struct SelectionConfig {
    /// Aggregation-error threshold, linear scale.
    pub gamma: f64,
    /// Maximum per-device transmit power, watts.
    pub p0: f64,
    /// Receiver noise power, watts.
    pub sigma2: f64,
    pub dc: DcConfig,
    pub solver: SolverConfig,
    /// Cap on alternation rounds inside each pass / probe.
    pub max_alt_iters: usize,
    pub scheme: Scheme,
    /// Gaussian-randomization candidates for the SDR scheme.
    pub randomization_samples: usize,
    /// Relative slack when comparing an achieved error to `gamma`.
    pub feas_slack: f64,
}

impl SelectionConfig {
    pub fn new(gamma: f64, p0: f64, sigma2: f64, scheme: Scheme) -> Self {
        Self {
            gamma,
            p0,
            sigma2,
            dc: DcConfig::default(),
            solver: SolverConfig::default(),
            max_alt_iters: 6,
            scheme,
            randomization_samples: 50,
            feas_slack: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(Error::Config("gamma must be positive".into()));
        }
        if !(self.p0 > 0.0) || !(self.sigma2 > 0.0) {
            return Err(Error::Config("p0 and sigma2 must be positive".into()));
        }
        if self.randomization_samples == 0 {
            return Err(Error::Config("randomization_samples must be >= 1".into()));
        }
        if self.max_alt_iters == 0 {
            return Err(Error::Config("max_alt_iters must be >= 1".into()));
        }
        self.dc.validate()?;
        self.solver.validate()
    }

    /// Per-device gain weight inside the conic subproblems: the error
    /// threshold normalized by the noise-to-power ratio, adjusted for
    /// channel scaling (effective channels divided by `scale`).
    fn gain_weight(&self, scale: f64) -> f64 {
        self.gamma * self.p0 / self.sigma2 * scale * scale
    }
}

/// Ascending slack scores with their sorting permutation.
#[derive(Debug, Clone)]
pub struct PriorityVector {
    /// Nonnegative per-device slack scores (smaller = easier to serve).
    pub x: DVector<f64>,
    /// Permutation such that `x[order[0]] <= x[order[1]] <= ...`, ties broken
    /// by ascending device index.
    pub order: Vec<usize>,
}

impl PriorityVector {
    pub fn from_scores(x: DVector<f64>) -> Result<Self> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("priority scores must be finite".into()));
        }
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap().then(a.cmp(&b)));
        Ok(Self { x, order })
    }

    /// The `k` highest-priority devices.
    pub fn prefix(&self, k: usize) -> Vec<usize> {
        self.order[..k].to_vec()
    }
}

/// Result of the sparsity-inducing pass.
#[derive(Debug, Clone)]
pub struct SparsityResult {
    pub priorities: PriorityVector,
    pub m0: Beamformer,
    pub v0: PhaseVector,
    /// l1 objective per alternation round, nonincreasing.
    pub objective_per_round: Vec<f64>,
    /// Total DC iterations spent.
    pub dc_iters: usize,
}

/// One bisection probe.
#[derive(Debug, Clone)]
pub struct ProbeRecord {
    pub k: usize,
    pub feasible: bool,
    /// Achieved aggregation error (`inf` when the probe never reached the
    /// threshold).
    pub mse: f64,
    /// Certifying pair, stored for feasible probes.
    pub m: Option<Beamformer>,
    pub phases: Option<PhaseVector>,
    pub dc_iters: usize,
}

/// Final selection: the priority-prefix device set with its certifying
/// beamformer/phases and the achieved error.
#[derive(Debug, Clone)]
pub struct SelectionOutcome {
    pub selected: Vec<usize>,
    pub k_star: usize,
    pub m: Beamformer,
    pub phases: PhaseVector,
    pub achieved_mse: f64,
    pub history: Vec<ProbeRecord>,
    /// DC iterations across both steps.
    pub total_dc_iters: usize,
}

/// Scale channels so the mean effective gain is one; returns the scale `s`
/// (effective channels were divided by `s`).
pub fn normalize_channels(channels: &ChannelSet) -> (ChannelSet, f64) {
    let k = channels.num_devices().max(1);
    let mut acc = 0.0;
    for i in 0..channels.num_devices() {
        acc += channels.h_d[i].norm_squared();
        for n in 0..channels.n_elements {
            acc += channels.g.column(n).norm_squared() * channels.h_r[i][n].norm_sqr();
        }
    }
    let s = (acc / k as f64).sqrt();
    if s <= 0.0 || !s.is_finite() {
        return (channels.clone(), 1.0);
    }
    (channels.scaled(1.0 / s), s)
}

fn random_phases(seed: u64, stream_tag: &[u64], n: usize) -> Result<PhaseVector> {
    let mut rng = substream(seed, stream_tag);
    let theta: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
    PhaseVector::from_phases(&theta)
}

fn working_channels(channels: &ChannelSet, scheme: Scheme) -> ChannelSet {
    if scheme.uses_surface() {
        channels.clone()
    } else {
        channels.without_irs()
    }
}

fn trace_of(m_lift: &DMatrix<C64>) -> f64 {
    (0..m_lift.nrows()).map(|i| m_lift[(i, i)].re).sum()
}

/// Splitting budget for the one-shot relaxed solves of the SDR scheme; the
/// randomization step only needs the solution matrix as a covariance, not a
/// certificate.
fn sdr_solver(cfg: &SelectionConfig) -> SolverConfig {
    SolverConfig {
        max_iters: cfg.solver.max_iters.min((cfg.solver.max_iters / 10).max(2_000)),
        ..cfg.solver.clone()
    }
}

/// Entrywise unit-modulus version of a candidate (zeros become 1).
fn unit_modulus(cand: &DVector<C64>) -> DVector<C64> {
    cand.map(|z| if z.norm() > 1e-12 { z / z.norm() } else { C64::new(1.0, 0.0) })
}

/// Drop the homogenization entry of a lifted vector `[v, t]` and return the
/// entrywise-normalized `v / t`.
fn dehomogenize(lifted: &DVector<C64>) -> DVector<C64> {
    let n = lifted.len() - 1;
    let t = lifted[n];
    let rot = if t.norm() > 1e-12 { t.conj() / t.norm() } else { C64::new(1.0, 0.0) };
    DVector::from_fn(n, |i, _| {
        let z = lifted[i] * rot;
        if z.norm() > 1e-12 {
            z / z.norm()
        } else {
            C64::new(1.0, 0.0)
        }
    })
}

/// Sparsity-inducing pass: alternate the beamformer/slack subproblem and the
/// phase subproblem until the l1 objective stalls, then sort the slacks into
/// a priority order.
pub fn compute_priorities(
    channels: &ChannelSet,
    cfg: &SelectionConfig,
    seed: u64,
) -> Result<SparsityResult> {
    cfg.validate()?;
    channels.validate()?;
    let work = working_channels(channels, cfg.scheme);
    let (scaled, scale) = normalize_channels(&work);
    let gamma_hat = cfg.gain_weight(scale);
    let n = scaled.n_elements;

    let mut v = match cfg.scheme {
        Scheme::NoIrs => PhaseVector::empty(),
        Scheme::RandomPhase => random_phases(seed, &[tag::RANDOM_PHASE_SCHEME], n)?,
        _ => random_phases(seed, &[tag::ALT_INIT], n)?,
    };

    let mut dc_iters = 0;
    let mut objective_per_round = Vec::new();
    let mut best: Option<(DVector<f64>, Beamformer)> = None;

    for round in 1..=cfg.max_alt_iters {
        let (x, m) = match cfg.scheme {
            Scheme::Sdr => {
                let (x, m) = sdr_sparsity_beamformer(&scaled, &v, gamma_hat, cfg, seed)?;
                dc_iters += 1;
                (x, m)
            }
            _ => {
                let (x, m_lift, trace) =
                    dc::solve_sparsity_beamformer(&scaled, &v, gamma_hat, &cfg.dc, &cfg.solver)?;
                dc_iters += trace.iters_used;
                let (_, w) = dc::rank_one_factor(&m_lift)?;
                (x, Beamformer::new(w)?)
            }
        };
        let obj = x.sum();

        // a round that regresses (inexact solve, rejected phase update)
        // terminates the loop instead of degrading the scores
        let improved = match &best {
            Some((x_prev, _)) => obj <= x_prev.sum() + 1e-9 * (1.0 + x_prev.sum()),
            None => true,
        };
        if !improved {
            break;
        }
        let stalled = objective_per_round
            .last()
            .is_some_and(|prev: &f64| prev - obj < cfg.dc.epsilon);
        objective_per_round.push(obj);
        best = Some((x.clone(), m.clone()));
        if stalled || round == cfg.max_alt_iters || !cfg.scheme.optimizes_phases() || n == 0 {
            break;
        }

        match cfg.scheme {
            Scheme::Dc => {
                let (v_new, _, trace) =
                    dc::solve_sparsity_phases(&scaled, &m, &x, gamma_hat, &cfg.dc, &cfg.solver)?;
                dc_iters += trace.iters_used;
                if trace.converged && phase_update_acceptable(&scaled, &m, &x, &v_new, gamma_hat)? {
                    v = v_new;
                }
            }
            Scheme::Sdr => {
                let devices: Vec<usize> = (0..scaled.num_devices()).collect();
                let data = PhaseProblemData::new(&scaled, &m, &devices)?;
                let problem = dc::sparsity_phases_problem(&data, &x, gamma_hat);
                let outcome = sdr_solve(
                    &problem,
                    SdrRecovery::PhaseExtraction,
                    cfg.randomization_samples,
                    seed,
                    &sdr_solver(cfg),
                    |cand| {
                        let v_cand = dehomogenize(cand);
                        let mut worst: f64 = 0.0;
                        for i in 0..data.a.len() {
                            let lhs = data.m_norm_sqr - gamma_hat * data.gain(i, &v_cand);
                            worst = worst.max(lhs - x[i]);
                        }
                        if worst <= 1e-6 * (1.0 + data.m_norm_sqr) {
                            Some((worst, v_cand))
                        } else {
                            None
                        }
                    },
                )?;
                dc_iters += 1;
                if let Some(vec) = outcome.vector {
                    v = PhaseVector::new(vec)?;
                }
            }
            _ => unreachable!("phase update only runs for phase-optimizing schemes"),
        }
    }

    let (x, m0) = best.expect("at least one alternation round runs");
    Ok(SparsityResult {
        priorities: PriorityVector::from_scores(x)?,
        m0,
        v0: v,
        objective_per_round,
        dc_iters,
    })
}

/// True when the constraints under the new phases need no more total slack
/// than the current scores, so accepting the update cannot push the l1
/// objective up in the next round.
fn phase_update_acceptable(
    scaled: &ChannelSet,
    m: &Beamformer,
    x: &DVector<f64>,
    v_new: &PhaseVector,
    gamma_hat: f64,
) -> Result<bool> {
    let devices: Vec<usize> = (0..scaled.num_devices()).collect();
    let data = PhaseProblemData::new(scaled, m, &devices)?;
    let mut implied = 0.0;
    for i in 0..devices.len() {
        implied += (data.m_norm_sqr - gamma_hat * data.gain(i, v_new.as_vector())).max(0.0);
    }
    Ok(implied <= x.sum() + 1e-9 * (1.0 + x.sum()))
}

/// Bisection over priority prefixes: probe the full set first, then halve.
/// Each probe alternates beamformer and phase updates, declaring success as
/// soon as the closed-form error meets the threshold and failure when the
/// probe objective stalls.
pub fn detect_max_feasible(
    channels: &ChannelSet,
    priorities: &PriorityVector,
    cfg: &SelectionConfig,
    seed: u64,
) -> Result<SelectionOutcome> {
    cfg.validate()?;
    channels.validate()?;
    if priorities.order.len() != channels.num_devices() {
        return Err(Error::Dimension(
            "priority vector does not match device count".into(),
        ));
    }
    let work = working_channels(channels, cfg.scheme);
    let (scaled, scale) = normalize_channels(&work);
    let threshold = cfg.gamma * (1.0 + cfg.feas_slack);
    // noise power rescaled so the error computed on normalized channels
    // equals the error on the original ones
    let sigma2_hat = cfg.sigma2 / (scale * scale);
    let k_total = channels.num_devices();

    let mut n_low = 0usize;
    let mut n_up = k_total;
    let mut k = k_total;
    let mut history: Vec<ProbeRecord> = Vec::new();
    let mut total_dc_iters = 0usize;
    let mut best: Option<(Beamformer, PhaseVector, f64)> = None;
    let mut last_pair: Option<(Beamformer, PhaseVector)> = None;

    loop {
        let sel = priorities.prefix(k);
        let mut v = match cfg.scheme {
            Scheme::NoIrs => PhaseVector::empty(),
            Scheme::RandomPhase => {
                random_phases(seed, &[tag::RANDOM_PHASE_SCHEME], scaled.n_elements)?
            }
            _ => random_phases(seed, &[tag::PROBE_INIT, k as u64], scaled.n_elements)?,
        };
        let mut probe_dc = 0usize;
        let mut feasible = false;
        let mut probe_mse = f64::INFINITY;
        let mut prev_obj: Option<f64> = None;
        let mut probe_pair: Option<(Beamformer, PhaseVector)> = None;

        for _round in 1..=cfg.max_alt_iters {
            let (m, obj) = match cfg.scheme {
                Scheme::Sdr => {
                    let (m, obj) = sdr_feasibility_beamformer(&scaled, &v, &sel, cfg, seed)?;
                    probe_dc += 1;
                    (m, obj)
                }
                _ => {
                    let (m, m_lift, trace) =
                        dc::solve_feasibility_beamformer(&scaled, &v, &sel, &cfg.dc, &cfg.solver)?;
                    probe_dc += trace.iters_used;
                    (m, trace_of(&m_lift))
                }
            };
            let instance = AircompInstance::new(scaled.clone(), sel.clone(), cfg.p0, sigma2_hat)?;
            let report = aggregation_mse(&instance, &m, &v)?;
            probe_mse = report.mse;
            probe_pair = Some((m.clone(), v.clone()));
            last_pair = probe_pair.clone();
            if !report.degenerate && report.mse <= threshold {
                feasible = true;
                best = Some((m, v.clone(), report.mse));
                break;
            }
            if let Some(po) = prev_obj {
                if po - obj < cfg.dc.epsilon {
                    break;
                }
            }
            prev_obj = Some(obj);
            if !cfg.scheme.optimizes_phases() || scaled.n_elements == 0 {
                break;
            }

            match cfg.scheme {
                Scheme::Dc => {
                    let (v_new, _, trace) =
                        dc::solve_feasibility_phases(&scaled, &m, &sel, &cfg.dc, &cfg.solver)?;
                    probe_dc += trace.iters_used;
                    if trace.converged {
                        v = v_new;
                    }
                    // otherwise keep the current phases; the stalled
                    // objective closes the probe next round
                }
                Scheme::Sdr => {
                    let data = PhaseProblemData::new(&scaled, &m, &sel)?;
                    let problem = dc::feasibility_phases_problem(&data);
                    let outcome = sdr_solve(
                        &problem,
                        SdrRecovery::PhaseExtraction,
                        cfg.randomization_samples,
                        seed,
                        &sdr_solver(cfg),
                        |cand| {
                            let v_cand = dehomogenize(cand);
                            let min_gain = (0..data.a.len())
                                .map(|i| data.gain(i, &v_cand))
                                .fold(f64::INFINITY, f64::min);
                            if min_gain >= 1.0 - 1e-9 {
                                Some((-min_gain, v_cand))
                            } else {
                                None
                            }
                        },
                    )?;
                    probe_dc += 1;
                    match outcome.vector {
                        Some(vec) => v = PhaseVector::new(vec)?,
                        // no feasible randomization: the probe counts as
                        // infeasible
                        None => break,
                    }
                }
                _ => unreachable!(),
            }
        }

        total_dc_iters += probe_dc;
        let (rec_m, rec_v) = if feasible {
            match &probe_pair {
                Some((m, v)) => (Some(m.clone()), Some(v.clone())),
                None => (None, None),
            }
        } else {
            (None, None)
        };
        history.push(ProbeRecord {
            k,
            feasible,
            mse: probe_mse,
            m: rec_m,
            phases: rec_v,
            dc_iters: probe_dc,
        });
        if feasible {
            n_low = k;
        } else {
            n_up = k;
        }
        if n_up - n_low <= 1 {
            break;
        }
        k = (n_low + n_up) / 2;
        if k == 0 {
            break;
        }
    }

    let k_star = n_low;
    let (m, phases, achieved_mse) = match best {
        Some((m, v, mse)) => (m, v, mse),
        None => {
            let (m, v) = last_pair.expect("bisection probes at least once");
            (m, v, f64::INFINITY)
        }
    };
    Ok(SelectionOutcome {
        selected: priorities.prefix(k_star),
        k_star,
        m,
        phases,
        achieved_mse,
        history,
        total_dc_iters,
    })
}

/// Full pipeline: priorities, then maximum feasible prefix.
pub fn select_devices(
    channels: &ChannelSet,
    cfg: &SelectionConfig,
    seed: u64,
) -> Result<SelectionOutcome> {
    let sparsity = compute_priorities(channels, cfg, seed)?;
    let mut outcome = detect_max_feasible(channels, &sparsity.priorities, cfg, seed)?;
    outcome.total_dc_iters += sparsity.dc_iters;
    Ok(outcome)
}

// --- semidefinite relaxation with Gaussian randomization ----------------------

/// How candidate vectors are conditioned before evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdrRecovery {
    /// Candidates re-entered as unit-modulus vectors (phase problems).
    PhaseExtraction,
    /// Candidates passed through raw; the evaluation closure applies its own
    /// scaling (beamformer problems).
    Scaling,
}

/// Outcome of [`sdr_solve`].
pub struct SdrOutcome {
    pub solution: SdpSolution,
    /// Best feasible recovered vector, `None` when no candidate passed the
    /// feasibility evaluation.
    pub vector: Option<DVector<C64>>,
    /// Score of the best candidate (lower is better).
    pub score: f64,
    /// True when the relaxed solution was already rank one and its factor
    /// passed evaluation directly.
    pub rank_one_direct: bool,
}

/// Solve the rank-relaxed problem once and recover a vector by Gaussian
/// randomization.
///
/// Candidates are drawn with covariance equal to the solution matrix,
/// conditioned per `recovery`, and ranked by the evaluation closure, which
/// returns `None` for infeasible candidates and otherwise the score (lower
/// wins) together with the finalized vector. When the relaxed solution is
/// rank one its factor is used directly and no sampling happens.
pub fn sdr_solve(
    problem: &SdpProblem,
    recovery: SdrRecovery,
    randomization_samples: usize,
    seed: u64,
    solver: &SolverConfig,
    evaluate: impl Fn(&DVector<C64>) -> Option<(f64, DVector<C64>)>,
) -> Result<SdrOutcome> {
    if randomization_samples == 0 {
        return Err(Error::Config("randomization_samples must be >= 1".into()));
    }
    let solution = solve_sdp(problem, solver, None)?;
    if solution.status == SolveStatus::InfeasibleCertificate {
        return Ok(SdrOutcome {
            solution,
            vector: None,
            score: f64::INFINITY,
            rank_one_direct: false,
        });
    }
    let (sigma1, _) = crate::sdp::top_eigvec(&solution.x_matrix)?;
    let rank_res = rank_one_residual(&solution.x_matrix, sigma1);

    let (_, w) = dc::rank_one_factor(&solution.x_matrix)?;
    let mut best = evaluate(&condition_candidate(&w, recovery));
    let rank_one_direct = rank_res <= 1e-6 && best.is_some();

    if !rank_one_direct {
        let (values, vectors) = hermitian_eig(&solution.x_matrix)?;
        let n = problem.dim;
        let mut rng = substream(seed, &[tag::RANDOMIZATION]);
        for _ in 0..randomization_samples {
            let mut cand = DVector::from_element(n, C64::default());
            for (kth, &lambda) in values.iter().enumerate() {
                if lambda > 0.0 {
                    let g = gaussian_complex(&mut rng);
                    let coef = g * lambda.sqrt();
                    cand.axpy(coef, &vectors.column(kth).clone_owned(), C64::new(1.0, 0.0));
                }
            }
            if let Some((score, vec)) = evaluate(&condition_candidate(&cand, recovery)) {
                if best.as_ref().map_or(true, |(s, _)| score < *s) {
                    best = Some((score, vec));
                }
            }
        }
    }

    match best {
        Some((score, vector)) => Ok(SdrOutcome {
            solution,
            vector: Some(vector),
            score,
            rank_one_direct,
        }),
        None => Ok(SdrOutcome {
            solution,
            vector: None,
            score: f64::INFINITY,
            rank_one_direct: false,
        }),
    }
}

fn gaussian_complex<R: Rng>(rng: &mut R) -> C64 {
    use rand_distr::StandardNormal;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn condition_candidate(cand: &DVector<C64>, recovery: SdrRecovery) -> DVector<C64> {
    match recovery {
        SdrRecovery::PhaseExtraction => unit_modulus(cand),
        SdrRecovery::Scaling => cand.clone(),
    }
}

/// Relaxed sparsity beamformer: one conic solve; slacks come straight from
/// the solution, the beamformer from the best randomization candidate
/// (normalized to unit trace, ranked by implied total slack).
fn sdr_sparsity_beamformer(
    scaled: &ChannelSet,
    v: &PhaseVector,
    gamma_hat: f64,
    cfg: &SelectionConfig,
    seed: u64,
) -> Result<(DVector<f64>, Beamformer)> {
    let h_eff = crate::channel::effective_channel(scaled, v)?;
    let problem = dc::sparsity_beamformer_problem(&h_eff, gamma_hat);
    let outcome = sdr_solve(
        &problem,
        SdrRecovery::Scaling,
        cfg.randomization_samples,
        seed,
        &sdr_solver(cfg),
        |cand| {
            let norm = cand.norm();
            if norm <= 1e-12 {
                return None;
            }
            let m = cand.map(|z| z / norm);
            let mut implied = 0.0;
            for h in &h_eff {
                let gain = m.dotc(h).norm_sqr();
                implied += (1.0 - gamma_hat * gain).max(0.0);
            }
            Some((implied, m))
        },
    )?;
    let vec = outcome.vector.ok_or_else(|| Error::Solver {
        context: "sdr sparsity beamformer".into(),
        message: "no usable randomization candidate".into(),
    })?;
    Ok((outcome.solution.x_scalars.clone(), Beamformer::new(vec)?))
}

/// Relaxed min-norm beamformer with minimal uniform scaling onto the gain
/// constraints; returns the recovered beamformer and its squared norm.
fn sdr_feasibility_beamformer(
    scaled: &ChannelSet,
    v: &PhaseVector,
    sel: &[usize],
    cfg: &SelectionConfig,
    seed: u64,
) -> Result<(Beamformer, f64)> {
    let h_eff = crate::channel::effective_channel(scaled, v)?;
    let h_sel: Vec<DVector<C64>> = sel.iter().map(|&i| h_eff[i].clone()).collect();
    let problem = dc::feasibility_beamformer_problem(&h_sel);
    let outcome = sdr_solve(
        &problem,
        SdrRecovery::Scaling,
        cfg.randomization_samples,
        seed,
        &sdr_solver(cfg),
        |cand| {
            let min_gain = h_sel
                .iter()
                .map(|h| cand.dotc(h).norm_sqr())
                .fold(f64::INFINITY, f64::min);
            if min_gain <= 1e-18 {
                return None;
            }
            let c = (1.0 / min_gain).sqrt();
            let m = cand.map(|z| z * c);
            Some((m.norm_squared(), m))
        },
    )?;
    match outcome.vector {
        Some(vec) => {
            let obj = vec.norm_squared();
            Ok((Beamformer::new(vec)?, obj))
        }
        None => Err(Error::Solver {
            context: "sdr feasibility beamformer".into(),
            message: "no feasible randomization candidate".into(),
        }),
    }
}
