mod common;

use ftt_core::rotation::{pigou_so, pigou_ue, PigouInstance};
use ftt_core::solvers::{
    beckmann_objective, solve_so, solve_so_frank_wolfe, solve_ue_frank_wolfe, solve_ue_gradient_projection,
    SolverConfig,
};

fn grid_minimum(f: impl Fn(f64) -> f64) -> (f64, f64) {
    (0..=1_000_000)
        .map(|i| i as f64 * 1e-6)
        .map(|x| (x, f(x)))
        .fold((0.0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

fn tight() -> SolverConfig {
    SolverConfig {
        gap_tolerance: 1e-10,
        max_iterations: 1000,
        ..SolverConfig::default()
    }
}

#[test]
fn pigou_equilibrium_and_optimum() {
    for beta in [1.0, 2.0] {
        let instance = PigouInstance::new(beta).unwrap();
        let (net, inc, perf) = instance.assignment_problem().unwrap();
        let ue = solve_ue_gradient_projection(&net, &inc, &perf, &tight()).unwrap();
        assert!((ue.mean_time() - 1.0).abs() <= 1e-6);
        assert!((ue.flows.link[1] - 1.0).abs() <= 1e-6);

        let so = solve_so(&net, &inc, &perf, &tight()).unwrap();
        let (x_grid, cost_grid) = grid_minimum(|x| instance.system_cost(x));
        assert!((so.mean_time() - cost_grid).abs() <= 1e-6, "β={beta}");
        assert!((so.flows.link[1] - x_grid).abs() <= 1e-4, "β={beta}");
        let closed = pigou_so(&instance);
        assert!((closed.mean_cost - cost_grid).abs() <= 1e-10);
        assert!((closed.flow_b - x_grid).abs() <= 1e-6);
    }
}

#[test]
fn pigou_reference_values() {
    let one = PigouInstance::new(1.0).unwrap();
    assert_eq!(pigou_ue(&one).mean_cost, 1.0);
    assert!((pigou_so(&one).mean_cost - 0.75).abs() <= 1e-12);
    let two = PigouInstance::new(2.0).unwrap();
    assert!((pigou_so(&two).flow_b - 0.5774).abs() <= 1e-4);
    assert!((pigou_so(&two).mean_cost - 0.6151).abs() <= 1e-4);
    assert!((1.0 / pigou_so(&two).mean_cost - 1.6258).abs() <= 1e-4);
    let costs: Vec<f64> = (1..=16)
        .map(|b| pigou_so(&PigouInstance::new(b as f64).unwrap()).mean_cost)
        .collect();
    assert!(costs.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn pigou_frank_wolfe_matches() {
    let instance = PigouInstance::new(1.0).unwrap();
    let (net, _, perf) = instance.assignment_problem().unwrap();
    let cfg = SolverConfig {
        gap_tolerance: 1e-5,
        ..SolverConfig::default()
    };
    let ue = solve_ue_frank_wolfe(&net, &perf, &cfg).unwrap();
    assert!(ue.converged && ue.final_gap() <= 1e-5 && ue.iterations <= 1000);
    let so = solve_so_frank_wolfe(&net, &perf, &cfg).unwrap();
    assert!((so.mean_time() - 0.75).abs() <= 1e-6);
}

#[test]
fn frank_wolfe_objective_is_bounded_by_its_gap() {
    for seed in 0..20 {
        let (net, _, inc) = common::assignment_instance(seed);
        let perf = net.performance();
        let gp = solve_ue_gradient_projection(&net, &inc, &perf, &tight()).unwrap();
        let fw_cfg = SolverConfig {
            gap_tolerance: 1e-5,
            max_iterations: 200_000,
            ..SolverConfig::default()
        };
        let fw = solve_ue_frank_wolfe(&net, &perf, &fw_cfg).unwrap();
        assert!(gp.converged && fw.converged, "seed {seed}");
        let gp_obj = beckmann_objective(&gp.flows.link, &perf).unwrap();
        let fw_obj = beckmann_objective(&fw.flows.link, &perf).unwrap();
        let slack = 1e-12 * gp_obj.abs().max(1.0);
        // Convexity: the objective excess over the optimum is at most the absolute gap.
        assert!(fw_obj - gp_obj <= fw.final_gap() * fw.total_system_time() + slack, "seed {seed}");
        assert!(gp_obj - fw_obj <= gp.final_gap() * gp.total_system_time() + slack, "seed {seed}");
    }
}

#[test]
fn system_optimum_never_worse_than_equilibrium() {
    for seed in 0..40 {
        let (net, _, inc) = common::assignment_instance(seed);
        let perf = net.performance();
        let ue = solve_ue_gradient_projection(&net, &inc, &perf, &tight()).unwrap();
        let so = solve_so(&net, &inc, &perf, &tight()).unwrap();
        assert!(so.total_system_time() <= ue.total_system_time() + 1e-9, "seed {seed}");
    }
}

#[test]
fn path_flows_stay_feasible() {
    for seed in 0..20 {
        let (net, paths, inc) = common::assignment_instance(seed);
        let perf = net.performance();
        let res = solve_ue_gradient_projection(&net, &inc, &perf, &tight()).unwrap();
        assert!(res.flows.path.iter().all(|&f| f >= 0.0));
        for (od, pair) in net.od_pairs().iter().enumerate() {
            let total: f64 = paths.paths_for_od(od).iter().map(|&p| res.flows.path[p]).sum();
            assert!((total - pair.demand).abs() <= 1e-9 * pair.demand);
        }
    }
}

#[test]
fn frank_wolfe_objective_is_monotone() {
    for seed in 0..10 {
        let (net, _, _) = common::assignment_instance(seed);
        let perf = net.performance();
        let cfg = SolverConfig {
            gap_tolerance: 1e-4,
            max_iterations: 5000,
            ..SolverConfig::default()
        };
        let res = solve_ue_frank_wolfe(&net, &perf, &cfg).unwrap();
        for w in res.objective_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * w[0].abs(), "seed {seed}");
        }
        let last = beckmann_objective(&res.flows.link, &perf).unwrap();
        assert!((last - res.objective_history.last().unwrap()).abs() <= 1e-12 * last.abs());
    }
}
