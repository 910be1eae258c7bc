//! Path-to-link incidence `A` (|P|x|L|), OD-to-path choice matrix `B`
//! (|OD|x|P|) and the binary OD-to-path indicator.

use super::{NetworkError, PathSet, SparseBinaryMatrix, SparseMatrix};

const ROW_SUM_TOL: f64 = 1e-12;

/// `A[p, l] = 1` iff link position `l` lies on path `p`.
pub fn build_incidence(
    path_set: &PathSet,
    n_links: usize,
) -> Result<SparseBinaryMatrix, NetworkError> {
    let positions: Vec<(usize, usize)> = path_set
        .paths()
        .iter()
        .flat_map(|p| p.link_sequence.iter().map(move |&l| (p.path_id, l)))
        .collect();
    SparseBinaryMatrix::from_positions(path_set.len(), n_links, &positions)
}

/// Choice matrix `B` from per-path probabilities, plus its support indicator.
///
/// The indicator marks every path of an OD, including paths with zero
/// probability; `B` stores only the nonzero probabilities.
pub fn build_choice_matrix(
    path_set: &PathSet,
    probabilities: &[f64],
) -> Result<(SparseMatrix, SparseBinaryMatrix), NetworkError> {
    if probabilities.len() != path_set.len() {
        return Err(NetworkError::DimensionMismatch {
            what: "path probabilities",
            expected: path_set.len(),
            found: probabilities.len(),
        });
    }
    let mut triplets = Vec::new();
    let mut support = Vec::new();
    for od in 0..path_set.n_od() {
        let mut sum = 0.0;
        for &p in path_set.paths_for_od(od) {
            let prob = probabilities[p];
            if !(prob.is_finite() && prob >= 0.0) {
                return Err(NetworkError::NegativeProbability {
                    path: p,
                    value: prob,
                });
            }
            sum += prob;
            support.push((od, p));
            if prob != 0.0 {
                triplets.push((od, p, prob));
            }
        }
        if !path_set.paths_for_od(od).is_empty() && (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(NetworkError::RowSumViolation { od, sum });
        }
    }
    let n_od = path_set.n_od();
    let b = SparseMatrix::from_triplets(n_od, path_set.len(), &triplets)?;
    let indicator = SparseBinaryMatrix::from_positions(n_od, path_set.len(), &support)?;
    Ok((b, indicator))
}

/// The three mapping matrices with their cross-invariants checked.
#[derive(Debug, Clone)]
pub struct IncidenceSet {
    a: SparseBinaryMatrix,
    b: SparseMatrix,
    b_indicator: SparseBinaryMatrix,
    path_od: Vec<usize>,
    od_paths: Vec<Vec<usize>>,
}

impl IncidenceSet {
    /// Validates shapes, that each path serves exactly one OD, that `B` is
    /// supported inside the indicator, and that `B` rows with any path sum to one.
    pub fn new(
        a: SparseBinaryMatrix,
        b: SparseMatrix,
        b_indicator: SparseBinaryMatrix,
    ) -> Result<Self, NetworkError> {
        let n_paths = a.n_rows();
        if b.n_cols() != n_paths {
            return Err(NetworkError::DimensionMismatch {
                what: "B columns vs A rows",
                expected: n_paths,
                found: b.n_cols(),
            });
        }
        if b_indicator.n_cols() != n_paths || b_indicator.n_rows() != b.n_rows() {
            return Err(NetworkError::InconsistentIncidence(format!(
                "indicator is {}x{}, B is {}x{}",
                b_indicator.n_rows(),
                b_indicator.n_cols(),
                b.n_rows(),
                b.n_cols()
            )));
        }

        let n_od = b.n_rows();
        let mut path_od = vec![usize::MAX; n_paths];
        let mut od_paths = vec![Vec::new(); n_od];
        for od in 0..n_od {
            for p in b_indicator.row_support(od) {
                if path_od[p] != usize::MAX {
                    return Err(NetworkError::InconsistentIncidence(format!(
                        "path {p} serves OD {} and OD {od}",
                        path_od[p]
                    )));
                }
                path_od[p] = od;
                od_paths[od].push(p);
            }
        }
        if let Some(p) = path_od.iter().position(|&od| od == usize::MAX) {
            return Err(NetworkError::InconsistentIncidence(format!(
                "path {p} serves no OD"
            )));
        }

        for od in 0..n_od {
            for (p, v) in b.row(od) {
                if path_od[p] != od {
                    return Err(NetworkError::InconsistentIncidence(format!(
                        "B[{od}, {p}] = {v} outside the indicator support"
                    )));
                }
                if v < 0.0 {
                    return Err(NetworkError::NegativeProbability { path: p, value: v });
                }
            }
            let sum = b.row_sum(od);
            if !od_paths[od].is_empty() && (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(NetworkError::RowSumViolation { od, sum });
            }
        }

        Ok(Self {
            a,
            b,
            b_indicator,
            path_od,
            od_paths,
        })
    }

    /// Builds all three matrices from a path set and per-path probabilities.
    pub fn from_paths(
        path_set: &PathSet,
        n_links: usize,
        probabilities: &[f64],
    ) -> Result<Self, NetworkError> {
        let a = build_incidence(path_set, n_links)?;
        let (b, indicator) = build_choice_matrix(path_set, probabilities)?;
        Self::new(a, b, indicator)
    }

    /// Equal split over each OD's paths.
    pub fn uniform(path_set: &PathSet, n_links: usize) -> Result<Self, NetworkError> {
        let mut probabilities = vec![0.0; path_set.len()];
        for od in 0..path_set.n_od() {
            let members = path_set.paths_for_od(od);
            for &p in members {
                probabilities[p] = 1.0 / members.len() as f64;
            }
        }
        // 1/n summed n times can miss 1 by an ulp or two; renormalise the last entry.
        for od in 0..path_set.n_od() {
            if let Some((&last, rest)) = path_set.paths_for_od(od).split_last() {
                probabilities[last] = 1.0 - rest.iter().map(|&p| probabilities[p]).sum::<f64>();
            }
        }
        Self::from_paths(path_set, n_links, &probabilities)
    }

    /// Same path structure with a different choice matrix.
    pub fn with_choice(&self, b: SparseMatrix) -> Result<Self, NetworkError> {
        Self::new(self.a.clone(), b, self.b_indicator.clone())
    }

    /// Choice matrix of realized proportions `f_p / f_od`; ODs without flow
    /// get an equal split.
    pub fn proportional_choice(&self, path_flows: &[f64]) -> Result<SparseMatrix, NetworkError> {
        if path_flows.len() != self.n_paths() {
            return Err(NetworkError::DimensionMismatch {
                what: "path flows",
                expected: self.n_paths(),
                found: path_flows.len(),
            });
        }
        let mut triplets = Vec::new();
        for (od, members) in self.od_paths.iter().enumerate() {
            let total: f64 = members.iter().map(|&p| path_flows[p]).sum();
            if total > 0.0 {
                let mut acc = 0.0;
                for (k, &p) in members.iter().enumerate() {
                    let share = if k + 1 == members.len() {
                        1.0 - acc
                    } else {
                        path_flows[p] / total
                    };
                    acc += share;
                    if share != 0.0 {
                        triplets.push((od, p, share.max(0.0)));
                    }
                }
            } else if let Some((&last, rest)) = members.split_last() {
                let share = 1.0 / members.len() as f64;
                for &p in rest {
                    triplets.push((od, p, share));
                }
                triplets.push((od, last, 1.0 - share * rest.len() as f64));
            }
        }
        SparseMatrix::from_triplets(self.n_od(), self.n_paths(), &triplets)
    }

    pub fn a(&self) -> &SparseBinaryMatrix {
        &self.a
    }

    pub fn b(&self) -> &SparseMatrix {
        &self.b
    }

    pub fn b_indicator(&self) -> &SparseBinaryMatrix {
        &self.b_indicator
    }

    pub fn n_paths(&self) -> usize {
        self.a.n_rows()
    }

    pub fn n_links(&self) -> usize {
        self.a.n_cols()
    }

    pub fn n_od(&self) -> usize {
        self.b.n_rows()
    }

    /// OD served by path `p`.
    pub fn path_od(&self, p: usize) -> usize {
        self.path_od[p]
    }

    /// Paths serving OD `od`, ascending.
    pub fn od_paths(&self, od: usize) -> &[usize] {
        &self.od_paths[od]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_od() -> PathSet {
        PathSet::from_sequences(2, vec![(0, vec![0]), (1, vec![0, 1]), (1, vec![2])]).unwrap()
    }

    #[test]
    fn row_sum_violation() {
        let ps = PathSet::from_sequences(1, vec![(0, vec![0]), (0, vec![1])]).unwrap();
        let err = build_choice_matrix(&ps, &[0.5, 0.6]).unwrap_err();
        assert!(matches!(err, NetworkError::RowSumViolation { od: 0, .. }));
    }

    #[test]
    fn one_path_per_od_is_one_hot() {
        let ps = PathSet::from_sequences(2, vec![(0, vec![0]), (1, vec![1])]).unwrap();
        let (b, ind) = build_choice_matrix(&ps, &[1.0, 1.0]).unwrap();
        assert_eq!(b.to_dense(), ind.to_dense());
        assert_eq!(b.get(0, 0), 1.0);
        assert_eq!(b.get(1, 1), 1.0);
        assert_eq!(b.get(0, 1), 0.0);
    }

    #[test]
    fn zero_probability_kept_in_indicator_only() {
        let ps = two_od();
        let set = IncidenceSet::from_paths(&ps, 3, &[1.0, 0.0, 1.0]).unwrap();
        assert_eq!(set.b().nnz(), 2);
        assert_eq!(set.b_indicator().nnz(), 3);
        assert_eq!(set.od_paths(1), &[1, 2]);
        assert_eq!(set.path_od(2), 1);
    }

    #[test]
    fn support_outside_indicator_rejected() {
        let ps = two_od();
        let set = IncidenceSet::uniform(&ps, 3).unwrap();
        let bad = SparseMatrix::from_triplets(2, 3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        assert!(matches!(
            set.with_choice(bad),
            Err(NetworkError::InconsistentIncidence(_))
        ));
    }

    #[test]
    fn proportional_choice_matches_flows() {
        let ps = two_od();
        let set = IncidenceSet::uniform(&ps, 3).unwrap();
        let b = set.proportional_choice(&[5.0, 1.0, 3.0]).unwrap();
        assert_eq!(b.get(0, 0), 1.0);
        assert!((b.get(1, 1) - 0.25).abs() < 1e-15);
        assert!((b.get(1, 2) - 0.75).abs() < 1e-15);
        set.with_choice(b).unwrap();
    }

    #[test]
    fn empty_path_set_incidence() {
        let ps = PathSet::from_sequences(0, vec![]).unwrap();
        let a = build_incidence(&ps, 4).unwrap();
        assert_eq!((a.n_rows(), a.n_cols()), (0, 4));
    }
}
