//! Multi-day route rotation on the two-route Pigou network.
//!
//! Route `a` has constant time 1, route `b` has time `x^β` where `x` is its
//! flow; total demand is 1. A rotation schedule `R` (groups × days) sends
//! group `i` to its system-optimal role on day `d` when `R[i][d] = 1` (route
//! `a` in the half-split rotation) and to its equilibrium role otherwise
//! (route `b`). Users outside every group never rotate.

use serde::Serialize;
use thiserror::Error;

use crate::network::{IncidenceSet, Link, Network, NetworkError, Node, OdPair, PathSet};
use crate::propagate::{LinkPerformance, VolumeDelay};

#[derive(Debug, Error)]
pub enum RotationError {
    #[error("{name} = {value} is out of range ({expected})")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("schedule entry ({group}, {day}) = {value} is not 0 or 1")]
    NonBinarySchedule { group: usize, day: usize, value: u8 },
    #[error(transparent)]
    Network(#[from] NetworkError),
}

fn check_beta(beta: f64) -> Result<(), RotationError> {
    if beta.is_finite() && beta >= 1.0 {
        Ok(())
    } else {
        Err(RotationError::OutOfRange {
            name: "beta",
            value: beta,
            expected: "finite and >= 1",
        })
    }
}

fn check_participation(p: f64) -> Result<(), RotationError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(RotationError::OutOfRange {
            name: "p",
            value: p,
            expected: "0 <= p <= 1",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Route {
    A,
    B,
}

impl Route {
    pub fn label(self) -> &'static str {
        match self {
            Route::A => "a",
            Route::B => "b",
        }
    }
}

/// Route flows and the demand-weighted mean travel time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PigouAssignment {
    pub flow_a: f64,
    pub flow_b: f64,
    pub mean_cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PigouInstance {
    beta: f64,
}

impl PigouInstance {
    pub fn new(beta: f64) -> Result<Self, RotationError> {
        check_beta(beta)?;
        Ok(Self { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Total travel time when `x` units use route `b`.
    pub fn system_cost(&self, x: f64) -> f64 {
        (1.0 - x) + x.powf(self.beta + 1.0)
    }

    /// The instance as a two-node network with one OD pair of demand 1 and
    /// two single-link paths, plus its link performance. The BPR fields on the
    /// links are placeholders; the returned performance carries the real
    /// cost functions.
    pub fn assignment_problem(&self) -> Result<(Network, IncidenceSet, LinkPerformance), RotationError> {
        let link = |id| Link {
            link_id: id,
            from_node: 1,
            to_node: 2,
            free_flow_time: 1.0,
            capacity: 1.0,
            bpr_alpha: 0.0,
            bpr_beta: 1.0,
        };
        let network = Network::new(
            vec![Node::new(1), Node::new(2)],
            vec![link(1), link(2)],
            vec![OdPair {
                origin: 1,
                destination: 2,
                demand: 1.0,
            }],
        )?;
        let paths = PathSet::from_sequences(1, vec![(0, vec![0]), (0, vec![1])])?;
        let incidence = IncidenceSet::uniform(&paths, 2)?;
        let performance = LinkPerformance::new(vec![
            VolumeDelay::constant(1.0),
            VolumeDelay::Power {
                offset: 0.0,
                coefficient: 1.0,
                exponent: self.beta,
            },
        ])
        .expect("valid Pigou cost functions");
        Ok((network, incidence, performance))
    }
}

/// Equilibrium: everyone on route `b`, mean cost 1.
pub fn pigou_ue(instance: &PigouInstance) -> PigouAssignment {
    PigouAssignment {
        flow_a: 0.0,
        flow_b: 1.0,
        mean_cost: instance.system_cost(1.0),
    }
}

/// System optimum: `x* = (β+1)^{-1/β}` on route `b`.
pub fn pigou_so(instance: &PigouInstance) -> PigouAssignment {
    let x = (instance.beta + 1.0).powf(-1.0 / instance.beta);
    PigouAssignment {
        flow_a: 1.0 - x,
        flow_b: x,
        mean_cost: instance.system_cost(x),
    }
}

/// Binary group-by-day schedule with per-group demand shares.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationSchedule {
    matrix: Vec<Vec<u8>>,
    shares: Vec<f64>,
}

impl RotationSchedule {
    pub fn new(matrix: Vec<Vec<u8>>, shares: Vec<f64>) -> Result<Self, RotationError> {
        if matrix.len() != shares.len() {
            return Err(RotationError::DimensionMismatch {
                what: "group shares",
                expected: matrix.len(),
                found: shares.len(),
            });
        }
        let days = matrix.first().map_or(0, Vec::len);
        for (group, row) in matrix.iter().enumerate() {
            if row.len() != days {
                return Err(RotationError::DimensionMismatch {
                    what: "schedule days",
                    expected: days,
                    found: row.len(),
                });
            }
            if let Some((day, &value)) = row.iter().enumerate().find(|(_, v)| **v > 1) {
                return Err(RotationError::NonBinarySchedule { group, day, value });
            }
        }
        if let Some(&value) = shares.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(RotationError::OutOfRange {
                name: "group share",
                value,
                expected: ">= 0",
            });
        }
        let total: f64 = shares.iter().sum();
        if total > 1.0 + 1e-12 {
            return Err(RotationError::OutOfRange {
                name: "participation",
                value: total,
                expected: "sum of shares <= 1",
            });
        }
        Ok(Self { matrix, shares })
    }

    /// Two equal groups alternating over `days` days, starting with group 1
    /// on its system-optimal role.
    pub fn alternating(p: f64, days: usize) -> Result<Self, RotationError> {
        check_participation(p)?;
        let row = |start: u8| (0..days).map(|d| if d % 2 == 0 { start } else { 1 - start }).collect();
        Self::new(vec![row(1), row(0)], vec![p / 2.0, p / 2.0])
    }

    pub fn matrix(&self) -> &[Vec<u8>] {
        &self.matrix
    }

    pub fn shares(&self) -> &[f64] {
        &self.shares
    }

    pub fn n_groups(&self) -> usize {
        self.matrix.len()
    }

    pub fn n_days(&self) -> usize {
        self.matrix.first().map_or(0, Vec::len)
    }

    /// Total participating share `p`.
    pub fn participation(&self) -> f64 {
        self.shares.iter().sum::<f64>().min(1.0)
    }
}

/// `x^(d) = Σ_i (R[i][d] · x_so[i] + (1 − R[i][d]) · x_ue[i])` for every day.
pub fn day_flows(
    schedule: &[Vec<u8>],
    so_flows: &[Vec<f64>],
    ue_flows: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>, RotationError> {
    let groups = schedule.len();
    for (what, v) in [("SO group flows", so_flows), ("UE group flows", ue_flows)] {
        if v.len() != groups {
            return Err(RotationError::DimensionMismatch {
                what,
                expected: groups,
                found: v.len(),
            });
        }
    }
    let width = so_flows.first().map_or(0, Vec::len);
    if let Some(bad) = so_flows.iter().chain(ue_flows).find(|v| v.len() != width) {
        return Err(RotationError::DimensionMismatch {
            what: "group flow vector",
            expected: width,
            found: bad.len(),
        });
    }
    let days = schedule.first().map_or(0, Vec::len);
    let mut out = vec![vec![0.0; width]; days];
    for (i, row) in schedule.iter().enumerate() {
        if row.len() != days {
            return Err(RotationError::DimensionMismatch {
                what: "schedule days",
                expected: days,
                found: row.len(),
            });
        }
        for (d, &r) in row.iter().enumerate() {
            let source = if r == 1 { &so_flows[i] } else { &ue_flows[i] };
            for (acc, x) in out[d].iter_mut().zip(source) {
                *acc += x;
            }
        }
    }
    Ok(out)
}

/// One cell of the group × day outcome cube.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupDay {
    pub route: Route,
    /// Total flow on the chosen route that day.
    pub route_flow: f64,
    pub travel_time: f64,
}

/// Day-by-day microsimulation of a schedule on the Pigou network.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Simulation {
    /// `cube[d][i]`; the last group is the non-participants.
    pub cube: Vec<Vec<GroupDay>>,
    /// Route `(a, b)` flows per day.
    pub route_flows: Vec<(f64, f64)>,
    /// Day-averaged travel time per group, non-participants last.
    pub group_times: Vec<f64>,
    pub t_part: f64,
    pub t_nonpart: f64,
    /// Day-averaged total travel time.
    pub system_cost: f64,
}

/// Simulates every day of `schedule`: groups on their system-optimal role
/// take route `a`, all others route `b`; times follow from the route flows.
pub fn simulate_schedule(schedule: &RotationSchedule, beta: f64) -> Result<Simulation, RotationError> {
    check_beta(beta)?;
    let days = schedule.n_days();
    if days == 0 {
        return Err(RotationError::DimensionMismatch {
            what: "schedule days",
            expected: 1,
            found: 0,
        });
    }
    let p = schedule.participation();
    let groups = schedule.n_groups();
    let mut so_flows: Vec<Vec<f64>> = schedule.shares().iter().map(|&s| vec![s, 0.0]).collect();
    let mut ue_flows: Vec<Vec<f64>> = schedule.shares().iter().map(|&s| vec![0.0, s]).collect();
    so_flows.push(vec![0.0, 1.0 - p]);
    ue_flows.push(vec![0.0, 1.0 - p]);
    let mut matrix = schedule.matrix().to_vec();
    matrix.push(vec![0; days]);
    let flows = day_flows(&matrix, &so_flows, &ue_flows)?;

    let mut cube = Vec::with_capacity(days);
    let mut route_flows = Vec::with_capacity(days);
    let mut group_totals = vec![0.0; groups + 1];
    let mut system_total = 0.0;
    for (d, day) in flows.iter().enumerate() {
        let (fa, fb) = (day[0], day[1]);
        let (ta, tb) = (1.0, fb.powf(beta));
        route_flows.push((fa, fb));
        system_total += fa * ta + fb * tb;
        let row: Vec<GroupDay> = matrix
            .iter()
            .map(|r| {
                if r[d] == 1 {
                    GroupDay {
                        route: Route::A,
                        route_flow: fa,
                        travel_time: ta,
                    }
                } else {
                    GroupDay {
                        route: Route::B,
                        route_flow: fb,
                        travel_time: tb,
                    }
                }
            })
            .collect();
        for (acc, cell) in group_totals.iter_mut().zip(&row) {
            *acc += cell.travel_time;
        }
        cube.push(row);
    }
    let group_times: Vec<f64> = group_totals.iter().map(|t| t / days as f64).collect();
    let shares = schedule.shares();
    let t_part = if p > 0.0 {
        shares.iter().zip(&group_times).map(|(s, t)| s * t).sum::<f64>() / p
    } else if groups > 0 {
        group_times[..groups].iter().sum::<f64>() / groups as f64
    } else {
        f64::NAN
    };
    Ok(Simulation {
        cube,
        route_flows,
        t_nonpart: group_times[groups],
        group_times,
        t_part,
        system_cost: system_total / days as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotationOutcome {
    pub p: f64,
    pub beta: f64,
    /// `cube[d][i]` over P1, P2, NP.
    pub cube: Vec<Vec<GroupDay>>,
    pub t_part: f64,
    pub t_nonpart: f64,
    pub system_cost: f64,
    /// Improvement over equilibrium, `1 − system_cost`.
    pub delta: f64,
    /// First-order estimate `βp/2`.
    pub delta_approx: f64,
    pub poa: f64,
}

/// Closed-form outcome of the two-day half-split rotation at participation
/// `p`, with the outcome cube from simulating that schedule.
pub fn evaluate_rotation(p: f64, beta: f64) -> Result<RotationOutcome, RotationError> {
    check_participation(p)?;
    check_beta(beta)?;
    let sim = simulate_schedule(&RotationSchedule::alternating(p, 2)?, beta)?;
    let congested = (1.0 - p / 2.0).powf(beta);
    let system_cost = p / 2.0 + (1.0 - p / 2.0).powf(beta + 1.0);
    Ok(RotationOutcome {
        p,
        beta,
        cube: sim.cube,
        t_part: (1.0 + congested) / 2.0,
        t_nonpart: congested,
        system_cost,
        delta: 1.0 - system_cost,
        delta_approx: beta * p / 2.0,
        poa: system_cost / pigou_so(&PigouInstance { beta }).mean_cost,
    })
}

/// Outcome of an arbitrary schedule, every figure taken from simulation.
pub fn evaluate_schedule(schedule: &RotationSchedule, beta: f64) -> Result<RotationOutcome, RotationError> {
    let sim = simulate_schedule(schedule, beta)?;
    let p = schedule.participation();
    Ok(RotationOutcome {
        p,
        beta,
        cube: sim.cube,
        t_part: sim.t_part,
        t_nonpart: sim.t_nonpart,
        system_cost: sim.system_cost,
        delta: 1.0 - sim.system_cost,
        delta_approx: beta * p / 2.0,
        poa: sim.system_cost / pigou_so(&PigouInstance { beta }).mean_cost,
    })
}

/// Rotated system cost over the system-optimal cost.
pub fn poa(p: f64, beta: f64) -> Result<f64, RotationError> {
    Ok(evaluate_rotation(p, beta)?.poa)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParetoCheck {
    /// Both participants and non-participants strictly beat equilibrium.
    pub improves: bool,
    /// `1 − max(t̄_P, t̄_NP)`.
    pub margin: f64,
}

pub fn pareto_check(p: f64, beta: f64) -> Result<ParetoCheck, RotationError> {
    let outcome = evaluate_rotation(p, beta)?;
    Ok(ParetoCheck {
        improves: outcome.t_part < 1.0 && outcome.t_nonpart < 1.0,
        margin: 1.0 - outcome.t_part.max(outcome.t_nonpart),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_values() {
        let one = PigouInstance::new(1.0).unwrap();
        assert_eq!(pigou_ue(&one).mean_cost, 1.0);
        assert_eq!(pigou_ue(&PigouInstance::new(4.0).unwrap()).mean_cost, 1.0);
        let so = pigou_so(&one);
        assert_eq!(so.flow_b, 0.5);
        assert_eq!(so.mean_cost, 0.75);
        assert!((poa(0.0, 1.0).unwrap() - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn participation_examples() {
        let none = evaluate_rotation(0.0, 2.0).unwrap();
        assert_eq!((none.delta, none.t_nonpart, none.system_cost), (0.0, 1.0, 1.0));
        assert_eq!(evaluate_rotation(1.0, 1.0).unwrap().system_cost, 0.75);
        let small = evaluate_rotation(0.1, 1.0).unwrap();
        assert!((small.system_cost - 0.9525).abs() < 1e-12);
        assert!((small.delta - 0.0475).abs() < 1e-12);
        assert!((small.delta_approx - 0.05).abs() < 1e-15);
        assert!((poa(1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cube_day_one() {
        let out = evaluate_rotation(0.3, 2.0).unwrap();
        let day1 = &out.cube[0];
        assert_eq!(day1[0].route, Route::A);
        assert!((day1[0].route_flow - 0.15).abs() < 1e-15);
        assert_eq!(day1[1].route, Route::B);
        assert!((day1[1].route_flow - 0.85).abs() < 1e-15);
        assert!((day1[2].travel_time - 0.85f64.powi(2)).abs() < 1e-15);
        assert_eq!(out.cube[1][0].route, Route::B);
        assert_eq!(out.cube[1][1].route, Route::A);
    }

    #[test]
    fn pareto_examples() {
        let half = evaluate_rotation(0.5, 1.0).unwrap();
        assert_eq!((half.t_part, half.t_nonpart), (0.875, 0.75));
        let check = pareto_check(0.5, 1.0).unwrap();
        assert!(check.improves);
        assert_eq!(check.margin, 0.125);
        assert!(!pareto_check(0.0, 1.0).unwrap().improves);
    }

    #[test]
    fn day_flow_extremes() {
        let so = vec![vec![1.0, 0.0], vec![0.5, 0.5]];
        let ue = vec![vec![0.0, 1.0], vec![0.0, 1.0]];
        let zeros = day_flows(&[vec![0, 0], vec![0, 0]], &so, &ue).unwrap();
        assert!(zeros.iter().all(|d| d == &vec![0.0, 2.0]));
        let ones = day_flows(&[vec![1, 1], vec![1, 1]], &so, &ue).unwrap();
        assert!(ones.iter().all(|d| d == &vec![1.5, 0.5]));
        assert!(matches!(
            day_flows(&[vec![1]], &so, &ue),
            Err(RotationError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn input_validation() {
        assert!(PigouInstance::new(0.5).is_err());
        assert!(evaluate_rotation(1.5, 1.0).is_err());
        assert!(evaluate_rotation(0.5, f64::NAN).is_err());
        assert!(matches!(
            RotationSchedule::new(vec![vec![2]], vec![0.5]),
            Err(RotationError::NonBinarySchedule { .. })
        ));
        assert!(RotationSchedule::new(vec![vec![1], vec![0]], vec![0.7, 0.7]).is_err());
    }
}
