use super::*;
use crate::qubo::{Exhaustive, SaParams, SimulatedAnnealing, SolveResult};
use nalgebra::{dmatrix, dvector};
use proptest::prelude::*;
use rand::Rng;

fn random_qp(d: usize, convex: bool, rng: &mut impl Rng) -> QuadraticProgram {
    let b = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    let a = if convex { &b * b.transpose() + DMatrix::identity(d, d) * 0.05 } else { b };
    let lin = DVector::from_fn(d, |_, _| rng.random_range(-3.0..3.0));
    QuadraticProgram::new(a, lin, rng.random_range(-1.0..1.0)).unwrap()
}

fn random_r(n: usize, d: usize, rng: &mut impl Rng) -> UpdateMatrix {
    UpdateMatrix(DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.5..1.5)))
}

fn all_codes(n: usize) -> impl Iterator<Item = Vec<u8>> {
    (0..(1u64 << n)).map(move |c| crate::qubo::bits_from_code(c, n))
}

/// Claims every instance is solved by `z = 1ⁿ` at energy +1.
struct PositiveSolver;

impl QuboSolver for PositiveSolver {
    fn solve(&self, q: &QuboInstance, _seed: u64) -> Result<SolveResult> {
        Ok(SolveResult { z: vec![1; q.num_vars()], energy: 1.0, solver_id: "positive", num_evaluations: 0 })
    }

    fn id(&self) -> &'static str {
        "positive"
    }
}

fn assert_faithful(qp: &QuadraticProgram, w: &DVector<f64>, r: &UpdateMatrix) {
    let q = build_qubo(qp, w, r).unwrap();
    let base = qp.loss(w).unwrap();
    for z in all_codes(r.rows()) {
        let want = qp.loss(&(w + r.step(&z).unwrap())).unwrap() - base;
        let got = q.energy(&z).unwrap();
        assert!((want - got).abs() <= 1e-9 * (1.0 + base.abs()), "z={z:?}: {got} vs {want}");
    }
}

#[test]
fn zero_update_matrix_gives_zero_qubo() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let qp = random_qp(3, true, &mut rng);
    let w = dvector![1.0, -2.0, 0.5];
    let q = build_qubo(&qp, &w, &UpdateMatrix(DMatrix::zeros(4, 3))).unwrap();
    assert!(q.to_matrix().iter().all(|&v| v == 0.0));
}

#[test]
fn one_dimensional_hand_example() {
    let qp = QuadraticProgram::new(dmatrix![1.0], dvector![0.0], 0.0).unwrap();
    let r = UpdateMatrix(dmatrix![1.0; 1.0]);
    let q = build_qubo(&qp, &dvector![0.0], &r).unwrap();
    assert_eq!(q.to_matrix(), dmatrix![1.0, 1.0; 1.0, 1.0]);
    assert_eq!(q.energy(&[1, 1]).unwrap(), 4.0);
    assert_eq!(qp.loss(&dvector![2.0]).unwrap(), 4.0);
}

#[test]
fn qubo_energy_is_loss_change_for_all_assignments() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let qp = random_qp(3, false, &mut rng);
    let w = DVector::from_fn(3, |_, _| rng.random_range(-5.0..5.0));
    assert_faithful(&qp, &w, &random_r(6, 3, &mut rng));
}

#[test]
fn build_qubo_checks_dimensions() {
    let qp = QuadraticProgram::new(DMatrix::identity(2, 2), dvector![0.0, 0.0], 0.0).unwrap();
    assert!(build_qubo(&qp, &dvector![0.0], &UpdateMatrix(DMatrix::zeros(2, 2))).is_err());
    assert!(build_qubo(&qp, &dvector![0.0, 0.0], &UpdateMatrix(DMatrix::zeros(2, 3))).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn qubo_faithfulness(d in 1usize..=6, n in 1usize..=10, convex in any::<bool>(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let qp = random_qp(d, convex, &mut rng);
        let w = DVector::from_fn(d, |_, _| rng.random_range(-5.0..5.0));
        assert_faithful(&qp, &w, &random_r(n, d, &mut rng));
    }
}

#[test]
fn guard_rejects_positive_energy() {
    let qp = QuadraticProgram::new(DMatrix::identity(2, 2), dvector![0.0, 0.0], 0.0).unwrap();
    let state = OptimizerState::new(dvector![3.0, 4.0], 1.0, 3).unwrap();
    let sampler = RowSampler::for_target_step(1.0, 4, 2).unwrap();
    let (next, record) = step(&qp, &state, &sampler, &PositiveSolver, 5).unwrap();
    assert_eq!(next.w, state.w);
    assert_eq!(record.step_norm, 0.0);
    assert!(record.rejected);
    assert_eq!(record.qubo_energy, 1.0);
    assert_eq!(next.step_window().collect::<Vec<_>>(), vec![0.0]);
}

#[test]
fn exhaustive_step_picks_best_subset() {
    let qp = QuadraticProgram::new(dmatrix![1.0], dvector![0.0], 0.0).unwrap();
    let state = OptimizerState::new(dvector![10.0], 1.0, 1).unwrap();
    let r = UpdateMatrix(dmatrix![-10.0; 3.0]);
    let (next, record) = step_with(&qp, &state, &r, &Exhaustive::default(), 0).unwrap();
    assert_eq!(next.w, dvector![0.0]);
    assert_eq!(record.loss, 0.0);
    assert_eq!(record.qubo_energy, -100.0);
    assert_eq!(record.step_norm, 10.0);
}

#[test]
fn exhaustive_steps_never_increase_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for convex in [true, false] {
        let qp = random_qp(4, convex, &mut rng);
        let mut state = OptimizerState::new(DVector::from_element(4, 1.0), 0.5, 1).unwrap();
        let sampler = RowSampler::for_target_step(0.5, 6, 4).unwrap();
        for seed in 0..50 {
            let before = qp.loss(&state.w).unwrap();
            let (next, record) = step(&qp, &state, &sampler, &Exhaustive::default(), seed).unwrap();
            assert!(record.loss <= before);
            state = next;
        }
    }
}

#[test]
fn zero_budget_returns_start() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let qp = random_qp(3, true, &mut rng);
    let w0 = dvector![1.0, 2.0, 3.0];
    let (w, traj) = run_fixed(&qp, &w0, 1.0, 4, &Exhaustive::default(), &StoppingRule::iterations(0), 1).unwrap();
    assert_eq!(w, w0);
    assert!(traj.records.is_empty());
    assert_eq!(traj.final_loss(), qp.loss(&w0).unwrap());
}

#[test]
fn fixed_run_is_monotone_and_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let qp = random_qp(5, true, &mut rng);
    let w0 = DVector::zeros(5);
    let stop = StoppingRule::iterations(60);
    let (w, traj) = run_fixed(&qp, &w0, 0.5, 8, &Exhaustive::default(), &stop, 9).unwrap();
    let losses: Vec<f64> = traj.losses().collect();
    assert!(losses.windows(2).all(|p| p[1] <= p[0]));
    assert!(traj.final_loss() <= traj.initial_loss);
    assert_eq!(traj.records.len(), 60);
    assert_eq!(traj.iterates().last().unwrap(), &w);

    let (w2, traj2) = run_fixed(&qp, &w0, 0.5, 8, &Exhaustive::default(), &stop, 9).unwrap();
    assert_eq!(w, w2);
    assert_eq!(traj, traj2);
}

#[test]
fn loss_threshold_stops_early() {
    let qp = QuadraticProgram::new(DMatrix::identity(2, 2), dvector![0.0, 0.0], 0.0).unwrap();
    let stop = StoppingRule { max_iterations: Some(10_000), loss_threshold: Some(1.0), max_wall_clock: None };
    let (w, traj) = run_fixed(&qp, &dvector![10.0, 10.0], 1.0, 8, &Exhaustive::default(), &stop, 2).unwrap();
    assert!(qp.loss(&w).unwrap() <= 1.0);
    assert!(traj.records.len() < 10_000);
    assert!(StoppingRule::default().validate().is_err());
}

#[test]
fn adaptive_uses_unit_sigma_until_window_fills() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let qp = random_qp(4, true, &mut rng);
    let w0 = DVector::from_element(4, 20.0);
    let window = 5;
    let (_, traj) = run_adaptive(&qp, &w0, 8, window, &Exhaustive::default(), &StoppingRule::iterations(40), 3).unwrap();
    // iterations t = 0..=T sample with σ = 1
    for r in &traj.records[..=window] {
        assert_eq!(r.sigma, 1.0);
    }
    for (i, r) in traj.records.iter().enumerate().skip(window + 1) {
        let want = traj.records[i - window..i].iter().map(|r| r.step_norm).sum::<f64>() / window as f64;
        assert!((r.sigma - want.max(SIGMA_MIN)).abs() <= 1e-12 * want.max(1.0));
    }
}

#[test]
fn adaptive_sigma_floors_when_all_steps_rejected() {
    let qp = QuadraticProgram::new(DMatrix::identity(2, 2), dvector![0.0, 0.0], 0.0).unwrap();
    let (w, traj) = run_adaptive(&qp, &dvector![1.0, 1.0], 4, 3, &PositiveSolver, &StoppingRule::iterations(8), 0).unwrap();
    assert_eq!(w, dvector![1.0, 1.0]);
    assert_eq!(traj.records[4].sigma, SIGMA_MIN);
    assert_eq!(traj.records[7].sigma, SIGMA_MIN);
}

#[test]
fn invalid_configuration_is_rejected() {
    let qp = QuadraticProgram::new(DMatrix::identity(2, 2), dvector![0.0, 0.0], 0.0).unwrap();
    let solver = Exhaustive::default();
    let stop = StoppingRule::iterations(3);
    let w0 = dvector![0.0, 0.0];
    assert!(run_fixed(&qp, &w0, 0.0, 4, &solver, &stop, 0).is_err());
    assert!(run_fixed(&qp, &w0, 1.0, 0, &solver, &stop, 0).is_err());
    assert!(run_adaptive(&qp, &w0, 4, 0, &solver, &stop, 0).is_err());
    assert!(run_fixed(&qp, &dvector![0.0], 1.0, 4, &solver, &stop, 0).is_err());
}

#[test]
fn exhaustive_dominates_annealing_per_seed() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sa = SimulatedAnnealing::new(SaParams { reads: 10, sweeps: 100, temperatures: None }).unwrap();
    for seed in 0..4 {
        let qp = random_qp(4, true, &mut rng);
        let w0 = DVector::from_element(4, 5.0);
        let stop = StoppingRule::iterations(40);
        let (_, exact) = run_fixed(&qp, &w0, 0.5, 8, &Exhaustive::default(), &stop, seed).unwrap();
        let (_, approx) = run_fixed(&qp, &w0, 0.5, 8, &sa, &stop, seed).unwrap();
        assert!(exact.final_loss() <= approx.final_loss() + 1e-12);
    }
}

#[test]
fn diagnostics_at_optimum_report_zero_gap() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let qp = random_qp(3, true, &mut rng);
    let w_star = qp.stationary_point().unwrap();
    let (_, traj) = run_fixed(&qp, &w_star, 1.0, 6, &Exhaustive::default(), &StoppingRule::iterations(20), 1).unwrap();
    let rows = convergence_diagnostics(&qp, &traj, &w_star).unwrap();
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().all(|r| r.gap.abs() <= 1e-12));
}

#[test]
fn diagnostics_gap_is_non_increasing() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let qp = random_qp(4, true, &mut rng);
    let w_star = qp.stationary_point().unwrap();
    let (_, traj) = run_fixed(&qp, &DVector::zeros(4), 0.3, 8, &Exhaustive::default(), &StoppingRule::iterations(50), 4).unwrap();
    let rows = convergence_diagnostics(&qp, &traj, &w_star).unwrap();
    assert!(rows.windows(2).all(|p| p[1].gap <= p[0].gap));
    assert!(rows.iter().all(|r| r.gap >= -1e-9 && r.bound.is_finite() && r.bound_half_squared.is_finite()));
}

#[test]
fn diagnostics_refuse_indefinite_programs() {
    let qp = QuadraticProgram::new(dmatrix![1.0, 0.0; 0.0, -1.0], dvector![0.0, 0.0], 0.0).unwrap();
    let (_, traj) = run_fixed(&qp, &dvector![0.0, 0.0], 1.0, 4, &Exhaustive::default(), &StoppingRule::iterations(2), 0).unwrap();
    let err = convergence_diagnostics(&qp, &traj, &dvector![0.0, 0.0]).unwrap_err();
    assert!(matches!(err, Error::NotConvex { .. }));
}
