//! Smooth block objectives.

use crate::network::SparseBinaryMatrix;
use crate::propagate::LinkPerformance;

/// A smooth convex function of a block's full variable vector.
pub trait BlockObjective {
    fn value(&self, x: &[f64]) -> f64;
    /// Writes `∇f(x)` into `grad`.
    fn gradient(&self, x: &[f64], grad: &mut [f64]);
}

/// `Σ_i w_i (x_i − c_i)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableQuadratic {
    pub weights: Vec<f64>,
    pub centers: Vec<f64>,
}

impl SeparableQuadratic {
    pub fn new(weights: Vec<f64>, centers: Vec<f64>) -> Self {
        assert_eq!(weights.len(), centers.len(), "weights and centers differ in length");
        Self { weights, centers }
    }
}

impl BlockObjective for SeparableQuadratic {
    fn value(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.weights)
            .zip(&self.centers)
            .map(|((x, w), c)| w * (x - c) * (x - c))
            .sum()
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        for (((g, x), w), c) in grad.iter_mut().zip(x).zip(&self.weights).zip(&self.centers) {
            *g = 2.0 * w * (x - c);
        }
    }
}

/// `cᵀx`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub costs: Vec<f64>,
}

impl BlockObjective for Linear {
    fn value(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.costs).map(|(x, c)| x * c).sum()
    }

    fn gradient(&self, _x: &[f64], grad: &mut [f64]) {
        grad.copy_from_slice(&self.costs);
    }
}

/// Total passenger travel time `Σ_p f_p t_p = Σ_ℓ f_ℓ t_ℓ(f_ℓ)` over path
/// flows `x`, with `f_L = Aᵀ x`. Its gradient is `A (t + f t')`.
#[derive(Debug, Clone)]
pub struct PassengerTravelTime {
    pub incidence: SparseBinaryMatrix,
    pub performance: LinkPerformance,
}

impl BlockObjective for PassengerTravelTime {
    fn value(&self, x: &[f64]) -> f64 {
        let flows = self.incidence.tmul_vec(x);
        let times = self.performance.times(&flows);
        flows.iter().zip(&times).map(|(f, t)| f * t).sum()
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        let flows = self.incidence.tmul_vec(x);
        let marginal = self.performance.marginal().times(&flows);
        grad.copy_from_slice(&self.incidence.mul_vec(&marginal));
    }
}

/// Objective from a value closure and a gradient closure.
pub struct FnObjective<F, G> {
    value: F,
    gradient: G,
}

impl<F, G> FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64], &mut [f64]),
{
    pub fn new(value: F, gradient: G) -> Self {
        Self { value, gradient }
    }
}

impl<F, G> BlockObjective for FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64], &mut [f64]),
{
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        (self.gradient)(x, grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_value_and_gradient() {
        let q = SeparableQuadratic::new(vec![1.0, 2.0], vec![3.0, -1.0]);
        assert_eq!(q.value(&[1.0, 0.0]), 4.0 + 2.0);
        let mut g = [0.0; 2];
        q.gradient(&[1.0, 0.0], &mut g);
        assert_eq!(g, [-4.0, 4.0]);
    }

    #[test]
    fn passenger_gradient_matches_finite_difference() {
        let a = SparseBinaryMatrix::from_positions(2, 2, &[(0, 0), (1, 0), (1, 1)]).unwrap();
        let perf = LinkPerformance::bpr(&[1.0, 2.0], &[2.0, 3.0], &[0.15, 0.2], &[4.0, 2.0]).unwrap();
        let obj = PassengerTravelTime {
            incidence: a,
            performance: perf,
        };
        let x = [1.5, 2.5];
        let mut g = [0.0; 2];
        obj.gradient(&x, &mut g);
        for i in 0..2 {
            let h = 1e-5;
            let mut up = x;
            let mut down = x;
            up[i] += h;
            down[i] -= h;
            let fd = (obj.value(&up) - obj.value(&down)) / (2.0 * h);
            assert!((fd - g[i]).abs() / g[i].abs() < 1e-8);
        }
    }
}
