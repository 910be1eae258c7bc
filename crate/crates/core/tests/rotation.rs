use ftt_core::rotation::{
    day_flows, evaluate_rotation, evaluate_schedule, pareto_check, poa, simulate_schedule, RotationSchedule,
};
use proptest::prelude::*;

fn grid() -> impl Iterator<Item = (f64, f64)> {
    (1..=20).flat_map(|k| [1.0, 2.0, 3.0, 4.0].map(move |beta| (k as f64 * 0.05, beta)))
}

#[test]
fn pareto_improvement_on_the_grid() {
    for (p, beta) in grid() {
        let out = evaluate_rotation(p, beta).unwrap();
        assert!(out.delta > 0.0, "p={p} β={beta}");
        assert!(out.t_part < 1.0 && out.t_nonpart < 1.0, "p={p} β={beta}");
        assert!(pareto_check(p, beta).unwrap().improves);
    }
}

#[test]
fn closed_forms_reconcile_with_simulation() {
    for (p, beta) in grid() {
        let closed = evaluate_rotation(p, beta).unwrap();
        let sim = simulate_schedule(&RotationSchedule::alternating(p, 2).unwrap(), beta).unwrap();
        let microsim = p / 2.0 + (1.0 - p / 2.0).powf(beta + 1.0);
        assert!((sim.system_cost - microsim).abs() <= 1e-12);
        assert!((closed.system_cost - sim.system_cost).abs() <= 1e-12);
        assert!((closed.t_part - sim.t_part).abs() <= 1e-12);
        assert!((closed.t_nonpart - sim.t_nonpart).abs() <= 1e-12);
        let identity = p * closed.t_part + (1.0 - p) * closed.t_nonpart;
        assert!((identity - closed.system_cost).abs() <= 1e-12);
    }
}

#[test]
fn first_order_behaviour_for_small_participation() {
    // Fit K from the data, then check it bounds every point.
    for beta in [1.0, 2.0, 3.0, 4.0] {
        let points: Vec<(f64, f64)> = (1..=40)
            .map(|k| k as f64 * 0.005)
            .map(|p| (p, evaluate_rotation(p, beta).unwrap()))
            .map(|(p, out)| (p, (out.delta - out.delta_approx).abs()))
            .collect();
        let k = points.iter().map(|(p, e)| e / (p * p)).fold(0.0, f64::max);
        assert!(k <= beta * (beta + 1.0) / 8.0 + 1e-9, "β={beta}: K={k}");
        for (p, e) in points {
            assert!(e <= k * p * p + 1e-15);
        }
    }
}

#[test]
fn delta_grows_with_beta() {
    for k in 1..=20 {
        let p = k as f64 * 0.05;
        let deltas: Vec<f64> = [1.0, 2.0, 3.0, 4.0]
            .iter()
            .map(|&b| evaluate_rotation(p, b).unwrap().delta)
            .collect();
        assert!(deltas.windows(2).all(|w| w[1] >= w[0]));
    }
}

#[test]
fn reference_points() {
    let zero = evaluate_rotation(0.0, 1.0).unwrap();
    assert_eq!((zero.delta, zero.t_nonpart, zero.system_cost), (0.0, 1.0, 1.0));
    assert!((poa(0.0, 1.0).unwrap() - 4.0 / 3.0).abs() <= 1e-12);
    assert!((poa(1.0, 1.0).unwrap() - 1.0).abs() <= 1e-12);
    let tenth = evaluate_rotation(0.1, 1.0).unwrap();
    assert!((tenth.system_cost - 0.9525).abs() <= 1e-12);
    assert!((tenth.delta - 0.0475).abs() <= 1e-12);
    let half = evaluate_rotation(0.5, 1.0).unwrap();
    assert!((half.t_part - 0.875).abs() <= 1e-12 && (half.t_nonpart - 0.75).abs() <= 1e-12);
    assert!(!pareto_check(0.0, 1.0).unwrap().improves);
}

#[test]
fn alternating_schedule_loads_the_network_evenly() {
    for p in [0.1, 0.4, 1.0] {
        let schedule = RotationSchedule::alternating(p, 2).unwrap();
        let shares = schedule.shares().to_vec();
        let so = shares.iter().map(|&s| vec![s, 0.0]).collect::<Vec<_>>();
        let ue = shares.iter().map(|&s| vec![0.0, s]).collect::<Vec<_>>();
        let flows = day_flows(schedule.matrix(), &so, &ue).unwrap();
        assert!((flows[0][0] - p / 2.0).abs() <= 1e-15);
        assert_eq!(flows[0], flows[1]);
        let sim = simulate_schedule(&schedule, 2.0).unwrap();
        assert!((sim.route_flows[0].1 - (1.0 - p / 2.0)).abs() <= 1e-15);
        assert_eq!(sim.route_flows[0], sim.route_flows[1]);
    }
}

proptest! {
    #[test]
    fn system_cost_identity_for_any_schedule(
        rows in proptest::collection::vec(proptest::collection::vec(0u8..=1, 3), 1..4),
        raw in proptest::collection::vec(0.0f64..1.0, 4),
        beta in 1.0f64..5.0,
    ) {
        let groups = rows.len();
        let total: f64 = raw[..groups].iter().sum::<f64>() + 1e-3;
        let scale = raw[3].max(0.05) / total;
        let shares: Vec<f64> = raw[..groups].iter().map(|s| s * scale).collect();
        let schedule = RotationSchedule::new(rows, shares).unwrap();
        let out = evaluate_schedule(&schedule, beta).unwrap();
        let identity = out.p * out.t_part + (1.0 - out.p) * out.t_nonpart;
        prop_assert!((identity - out.system_cost).abs() <= 1e-12);
        prop_assert!(out.cube.iter().flatten().all(|c| c.travel_time >= 0.0));
    }
}
