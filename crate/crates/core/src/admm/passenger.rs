//! Passenger–vehicle capacity coupling: passenger link flows may not exceed
//! occupancy times vehicle link flows.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{
    AdmmError, BlockProblem, CouplingKind, CouplingSpec, Linear, PassengerTravelTime, SimplexGroup,
};
use crate::network::{IncidenceSet, PathSet};
use crate::propagate::{LinkPerformance, VolumeDelay};

/// The two blocks and their coupling.
#[derive(Debug)]
pub struct PassengerVehicleProblem {
    /// Variables: passenger path flows, one simplex group per OD.
    pub passenger: BlockProblem,
    /// Variables: vehicle link flows, nonnegative.
    pub vehicle: BlockProblem,
    /// `Aᵀ x − diag(ω) z ≤ 0`.
    pub coupling: CouplingSpec,
}

/// Builds the passenger block (total passenger travel time over path flows
/// that meet each OD's demand), the vehicle block (`Σ_ℓ c_ℓ z_ℓ`) and the
/// capacity coupling `Aᵀ x ≤ ω ⊙ z`.
pub fn passenger_vehicle_instance(
    omega: &[f64],
    incidence: &IncidenceSet,
    demand: &[f64],
    performance: &LinkPerformance,
    vehicle_cost: &[f64],
) -> Result<PassengerVehicleProblem, AdmmError> {
    let n_links = incidence.n_links();
    for (what, expected, found) in [
        ("occupancy", n_links, omega.len()),
        ("vehicle costs", n_links, vehicle_cost.len()),
        ("passenger link performance", n_links, performance.len()),
        ("OD demand", incidence.n_od(), demand.len()),
    ] {
        if expected != found {
            return Err(AdmmError::DimensionMismatch { what, expected, found });
        }
    }
    if let Some(&w) = omega.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(AdmmError::InvalidParameter {
            name: "occupancy",
            value: w,
        });
    }
    if let Some(&d) = demand.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
        return Err(AdmmError::InvalidParameter {
            name: "demand",
            value: d,
        });
    }
    if let Some(od) = (0..demand.len()).find(|&od| demand[od] > 0.0 && incidence.od_paths(od).is_empty()) {
        return Err(AdmmError::InvalidInstance(format!("OD {od} has demand but no path")));
    }

    let n_paths = incidence.n_paths();
    let groups = (0..incidence.n_od())
        .filter(|&od| !incidence.od_paths(od).is_empty())
        .map(|od| SimplexGroup {
            indices: incidence.od_paths(od).to_vec(),
            total: demand[od],
        })
        .collect();
    let passenger = BlockProblem::new(
        Box::new(PassengerTravelTime {
            incidence: incidence.a().clone(),
            performance: performance.clone(),
        }),
        n_paths,
        (0..n_paths).collect(),
    )
    .with_simplex_groups(groups);
    let vehicle = BlockProblem::new(
        Box::new(Linear {
            costs: vehicle_cost.to_vec(),
        }),
        n_links,
        (0..n_links).collect(),
    );
    let coupling = CouplingSpec {
        c: incidence.a().to_dense().transpose(),
        d: -DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(omega)),
        b: vec![0.0; n_links],
        kind: CouplingKind::InequalityLeq,
    };
    Ok(PassengerVehicleProblem {
        passenger,
        vehicle,
        coupling,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstancePath {
    pub od: usize,
    /// Link positions in traversal order.
    pub links: Vec<usize>,
}

/// File form of a passenger–vehicle instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PassengerVehicleInstance {
    pub omega: Vec<f64>,
    pub demand: Vec<f64>,
    pub paths: Vec<InstancePath>,
    /// Passenger link time functions, one per link.
    pub passenger_link_time: Vec<VolumeDelay>,
    pub vehicle_cost: Vec<f64>,
}

impl PassengerVehicleInstance {
    pub fn build(&self) -> Result<PassengerVehicleProblem, AdmmError> {
        let invalid = |e: crate::network::NetworkError| AdmmError::InvalidInstance(e.to_string());
        let paths = PathSet::from_sequences(
            self.demand.len(),
            self.paths.iter().map(|p| (p.od, p.links.clone())).collect(),
        )
        .map_err(invalid)?;
        if let Some(&l) = self.paths.iter().flat_map(|p| &p.links).find(|&&l| l >= self.omega.len()) {
            return Err(AdmmError::DimensionMismatch {
                what: "link position in path",
                expected: self.omega.len(),
                found: l,
            });
        }
        let incidence = IncidenceSet::uniform(&paths, self.omega.len()).map_err(invalid)?;
        let performance = LinkPerformance::new(self.passenger_link_time.clone())
            .map_err(|e| AdmmError::InvalidInstance(e.to_string()))?;
        passenger_vehicle_instance(&self.omega, &incidence, &self.demand, &performance, &self.vehicle_cost)
    }
}
