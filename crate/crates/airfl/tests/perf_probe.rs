// scratch timing probe, removed before ship
use airfl::channel::{sample_channels, FadingConfig, Geometry};
use airfl::dc::{self, DcConfig};
use airfl::select::{normalize_channels, SelectionConfig, Scheme};
use airfl::sdp::SolverConfig;
use airfl::aircomp::PhaseVector;
use std::time::Instant;

#[test]
#[ignore]
fn probe_tight_phase() {
    use airfl::dc::PhaseProblemDataProbe;
    let _ = PhaseProblemDataProbe; // placeholder
}

#[test]
#[ignore]
fn probe_subproblem_timing() {
    let geo = Geometry::default_deployment(10);
    let ch = sample_channels(&geo, &FadingConfig::default(), 8, 16, 0).unwrap();
    let (scaled, scale) = normalize_channels(&ch);
    let cfg = SelectionConfig::new(1e-2, 0.1, 1e-12, Scheme::Dc);
    let gamma_hat = 1e-2 * 0.1 / 1e-12 * scale * scale;
    eprintln!("gamma_hat = {gamma_hat:.3}");
    let mut dcc = DcConfig::default();
    if let Some(it) = std::env::var("AIRFL_DC_ITERS").ok().and_then(|v| v.parse().ok()) { dcc.max_dc_iters = it; }
    let mut solver = SolverConfig::default();
    if let Some(cap) = std::env::var("AIRFL_MAXIT_CAP").ok().and_then(|v| v.parse().ok()) { solver.max_iters = cap; }

    let mut rng_phases: Vec<f64> = (0..16).map(|i| i as f64 * 0.3).collect();
    rng_phases[3] = 1.0;
    let v = PhaseVector::from_phases(&rng_phases).unwrap();

    let t0 = Instant::now();
    let (x, _mlift, tr) = dc::solve_sparsity_beamformer(&scaled, &v, gamma_hat, &dcc, &solver).unwrap();
    eprintln!("p11: {:?} dc_iters={} inner={} conv={} x_sum={:.4}", t0.elapsed(), tr.iters_used, tr.inner_iterations, tr.converged, x.sum());

    let (_, w) = dc::rank_one_factor(&_mlift).unwrap();
    let m = airfl::aircomp::Beamformer::new(w).unwrap();
    let infl: f64 = std::env::var("AIRFL_XINFL").ok().and_then(|v| v.parse().ok()).unwrap_or(0.0);
    let m_norm2 = m.as_vector().norm_squared();
    let x_inf = x.add_scalar(infl * (1.0 + m_norm2));
    let t0 = Instant::now();
    let (v2, _vlift, tr2) = dc::solve_sparsity_phases(&scaled, &m, &x_inf, gamma_hat, &dcc, &solver).unwrap();
    eprintln!("p12: {:?} dc_iters={} inner={} conv={} rank_res={:.2e}", t0.elapsed(), tr2.iters_used, tr2.inner_iterations, tr2.converged, tr2.final_rank_residual().unwrap_or(f64::NAN));

    let t0 = Instant::now();
    let (_m2, _, tr3) = dc::solve_feasibility_beamformer(&scaled, &v2, &[0,1,2,3,4], &dcc, &solver).unwrap();
    eprintln!("p21: {:?} dc_iters={} inner={} conv={}", t0.elapsed(), tr3.iters_used, tr3.inner_iterations, tr3.converged);
    eprintln!("p21 obj: {:?}", &tr3.objective_per_iter);
    eprintln!("p21 rank: {:?}", tr3.rank_residual_per_iter.iter().map(|r| format!("{r:.1e}")).collect::<Vec<_>>());
    eprintln!("p21 rho_steps: {:?}", tr3.rho_steps);

    let t0 = Instant::now();
    let (_v3, _, tr4) = dc::solve_feasibility_phases(&scaled, &_m2, &[0,1,2,3,4], &dcc, &solver).unwrap();
    eprintln!("p22: {:?} dc_iters={} inner={} conv={} rank_res={:.2e}", t0.elapsed(), tr4.iters_used, tr4.inner_iterations, tr4.converged, tr4.final_rank_residual().unwrap_or(f64::NAN));
    let _ = cfg;
}
