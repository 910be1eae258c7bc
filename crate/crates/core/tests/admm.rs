use ftt_core::admm::{
    admm_iterate, solve_admm, AdmmConfig, AdmmState, BlockProblem, CouplingKind, CouplingSpec, FnObjective,
    InstancePath, PassengerVehicleInstance, SeparableQuadratic, SimplexGroup,
};
use ftt_core::VolumeDelay;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn scalar(center: f64) -> BlockProblem {
    BlockProblem::new(Box::new(SeparableQuadratic::new(vec![1.0], vec![center])), 1, vec![0])
}

fn equality(c: f64, d: f64, b: f64) -> CouplingSpec {
    CouplingSpec {
        c: DMatrix::from_element(1, 1, c),
        d: DMatrix::from_element(1, 1, d),
        b: vec![b],
        kind: CouplingKind::Equality,
    }
}

fn passenger_toy(demand: f64, omega: f64) -> PassengerVehicleInstance {
    PassengerVehicleInstance {
        omega: vec![omega],
        demand: vec![demand],
        paths: vec![InstancePath { od: 0, links: vec![0] }],
        passenger_link_time: vec![VolumeDelay::constant(1.0)],
        vehicle_cost: vec![1.0],
    }
}

#[test]
fn scalar_consensus_within_iteration_budget() {
    let res = solve_admm(&scalar(3.0), &scalar(1.0), &equality(1.0, -1.0, 0.0), &AdmmConfig::default()).unwrap();
    assert!(res.converged);
    assert!(res.iterations() <= 500);
    assert!((res.state.x[0] - 2.0).abs() <= 1e-5 && (res.state.z[0] - 2.0).abs() <= 1e-5);
}

#[test]
fn fixed_point_does_not_depend_on_rho() {
    let points: Vec<(f64, f64)> = [0.5, 1.0, 5.0]
        .iter()
        .map(|&rho| {
            let cfg = AdmmConfig {
                rho,
                tol_primal: 1e-9,
                tol_dual: 1e-9,
                max_iterations: 5000,
                ..AdmmConfig::default()
            };
            let res = solve_admm(&scalar(3.0), &scalar(1.0), &equality(1.0, -1.0, 0.0), &cfg).unwrap();
            assert!(res.converged, "rho {rho}");
            (res.state.x[0], res.state.z[0])
        })
        .collect();
    for p in &points[1..] {
        assert!((p.0 - points[0].0).abs() <= 1e-6 && (p.1 - points[0].1).abs() <= 1e-6);
    }
}

#[test]
fn offset_coupling_hits_the_bound() {
    // Oracle: grid over the feasible line x = z + 4 with z ≥ 0.
    let (z_best, _) = (0..=400_000)
        .map(|i| i as f64 * 1e-5)
        .map(|z| (z, (z + 4.0 - 3.0).powi(2) + (z - 1.0).powi(2)))
        .fold((0.0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
    let cfg = AdmmConfig {
        max_iterations: 5000,
        ..AdmmConfig::default()
    };
    let res = solve_admm(&scalar(3.0), &scalar(1.0), &equality(1.0, -1.0, 4.0), &cfg).unwrap();
    assert!(res.converged);
    assert!((res.state.z[0] - z_best).abs() <= 1e-4);
    assert!((res.state.x[0] - 4.0).abs() <= 1e-4 && res.state.z[0].abs() <= 1e-4);
}

#[test]
fn infeasible_coupling_is_reported() {
    let fixed = |c| {
        BlockProblem::new(Box::new(SeparableQuadratic::new(vec![1.0], vec![c])), 1, vec![0])
            .with_simplex_groups(vec![SimplexGroup {
                indices: vec![0],
                total: 1.0,
            }])
    };
    let cfg = AdmmConfig {
        max_iterations: 200,
        ..AdmmConfig::default()
    };
    let res = solve_admm(&fixed(0.0), &fixed(0.0), &equality(1.0, -1.0, 1.0), &cfg).unwrap();
    assert!(!res.converged);
    let norms: Vec<f64> = res.trace.iter().map(|r| r.lambda_norm).collect();
    assert!(norms.windows(2).all(|w| w[1] > w[0]));
    assert!(norms.last().unwrap() > &100.0);
}

#[test]
fn non_shared_coordinates_never_feel_the_coupling() {
    let zero = FnObjective::new(|_: &[f64]| 0.0, |_: &[f64], g: &mut [f64]| g.fill(0.0));
    let block1 = BlockProblem::new(Box::new(zero), 3, vec![1]).with_lower_bounds(vec![-5.0; 3]);
    let block2 = scalar(2.0);
    let coupling = equality(1.0, -1.0, 0.0);
    let mut state = AdmmState::initial(&block1, &block2, &coupling, 1.0);
    state.x = vec![0.25, 0.0, -0.5];
    state.lambda = vec![3.0];
    for _ in 0..10 {
        admm_iterate(&mut state, &block1, &block2, &coupling).unwrap();
    }
    assert_eq!((state.x[0], state.x[2]), (0.25, -0.5));
    assert!(state.x[1] != 0.0);
}

#[test]
fn passenger_vehicle_toy() {
    let problem = passenger_toy(40.0, 20.0).build().unwrap();
    let cfg = AdmmConfig {
        max_iterations: 5000,
        ..AdmmConfig::default()
    };
    let res = solve_admm(&problem.passenger, &problem.vehicle, &problem.coupling, &cfg).unwrap();
    assert!(res.converged);
    assert!((res.state.z[0] - 2.0).abs() <= 1e-3, "{:?}", res.state);
    let slack = res.state.slack.as_ref().unwrap();
    for (s, l) in slack.iter().zip(&res.state.lambda) {
        assert!(s.min(*l).abs() <= 1e-5, "s={s} λ={l}");
    }
}

#[test]
fn huge_occupancy_decouples_the_blocks() {
    let problem = passenger_toy(40.0, 1e9).build().unwrap();
    let res = solve_admm(&problem.passenger, &problem.vehicle, &problem.coupling, &AdmmConfig::default()).unwrap();
    assert!((res.state.x[0] - 40.0).abs() <= 1e-9);
    assert!(res.state.z[0].abs() <= 1e-6);
}

/// Projected gradient with backtracking on `x ≥ lower`.
fn projected_gradient(f: impl Fn(&[f64]) -> f64, grad: impl Fn(&[f64]) -> Vec<f64>, lower: &[f64]) -> Vec<f64> {
    let mut x: Vec<f64> = lower.iter().map(|l| l.max(0.0)).collect();
    let mut step = 1.0;
    for _ in 0..100_000 {
        let g = grad(&x);
        let fx = f(&x);
        loop {
            let trial: Vec<f64> = x.iter().zip(&g).zip(lower).map(|((x, g), l)| (x - step * g).max(*l)).collect();
            let d2: f64 = trial.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
            let lin: f64 = trial.iter().zip(&x).zip(&g).map(|((a, b), g)| g * (a - b)).sum();
            if f(&trial) <= fx + lin + d2 / (2.0 * step) + 1e-15 {
                let done = d2.sqrt() / step <= 1e-11;
                x = trial;
                step *= 2.0;
                if done {
                    return x;
                }
                break;
            }
            step *= 0.5;
        }
    }
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dual_step_equals_rho_times_residual(
        c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, b in -3.0f64..3.0, rho in 0.1f64..5.0,
        kind in prop_oneof![Just(CouplingKind::Equality), Just(CouplingKind::InequalityLeq)],
    ) {
        let block1 = scalar(c1);
        let block2 = scalar(c2);
        let coupling = CouplingSpec { kind, ..equality(1.0, -2.0, b) };
        let mut state = AdmmState::initial(&block1, &block2, &coupling, rho);
        for _ in 0..20 {
            let before = state.lambda.clone();
            let report = admm_iterate(&mut state, &block1, &block2, &coupling).unwrap();
            for ((after, prev), r) in state.lambda.iter().zip(&before).zip(&report.primal_vector) {
                prop_assert!((after - prev - rho * r).abs() <= 1e-12 * (1.0 + after.abs()));
            }
            prop_assert!(report.primal_residual >= 0.0 && report.dual_residual >= 0.0);
        }
    }

    #[test]
    fn matches_the_monolithic_solution(
        w1 in proptest::collection::vec(0.5f64..3.0, 3),
        c1 in proptest::collection::vec(-2.0f64..4.0, 3),
        w2 in proptest::collection::vec(0.5f64..3.0, 2),
        c2 in proptest::collection::vec(-2.0f64..4.0, 2),
        m in proptest::collection::vec(-1.0f64..1.0, 4),
    ) {
        // x ∈ R³ (x ≥ 0, coordinates 0 and 2 shared), z ∈ R² free, coupling C x_S − z = 0.
        let c = DMatrix::from_row_slice(2, 2, &m) + DMatrix::identity(2, 2) * 1.5;
        let block1 = BlockProblem::new(Box::new(SeparableQuadratic::new(w1.clone(), c1.clone())), 3, vec![0, 2]);
        let block2 = BlockProblem::new(Box::new(SeparableQuadratic::new(w2.clone(), c2.clone())), 2, vec![0, 1])
            .with_lower_bounds(vec![f64::NEG_INFINITY; 2]);
        let coupling = CouplingSpec { c: c.clone(), d: -DMatrix::identity(2, 2), b: vec![0.0; 2], kind: CouplingKind::Equality };
        let cfg = AdmmConfig { max_iterations: 20_000, tol_primal: 1e-8, tol_dual: 1e-8, ..AdmmConfig::default() };
        let res = solve_admm(&block1, &block2, &coupling, &cfg).unwrap();
        prop_assert!(res.converged);

        let q1 = SeparableQuadratic::new(w1.clone(), c1.clone());
        let q2 = SeparableQuadratic::new(w2.clone(), c2.clone());
        use ftt_core::admm::BlockObjective;
        let zs = |x: &[f64]| (c.clone() * DVector::from_column_slice(&[x[0], x[2]])).iter().copied().collect::<Vec<f64>>();
        let joint = |x: &[f64]| q1.value(x) + q2.value(&zs(x));
        let joint_grad = |x: &[f64]| {
            let mut g = vec![0.0; 3];
            q1.gradient(x, &mut g);
            let mut gz = vec![0.0; 2];
            q2.gradient(&zs(x), &mut gz);
            let back = c.transpose() * DVector::from_column_slice(&gz);
            g[0] += back[0];
            g[2] += back[1];
            g
        };
        let x_star = projected_gradient(joint, joint_grad, &[0.0; 3]);
        let reference = joint(&x_star);
        let found = q1.value(&res.state.x) + q2.value(&res.state.z);
        prop_assert!((found - reference).abs() <= 1e-3 * reference.abs().max(1e-9), "{found} vs {reference}");
    }
}
