//! Coded gradient descent on a synthetic least-squares problem.
//!
//! Data point `i` contributes `ℓ_i(x) = ½(a_iᵀx − b_i)²`. Each step draws a
//! fresh straggler set, decodes it, and moves along `f̂ = Σ_j v_j y_j`. The
//! coded run is compared against summing the raw gradients of the same
//! surviving indices and against the full gradient.

use rand::Rng;
use serde::Serialize;

use crate::codes::{construct_sbc, CodeSpec};
use crate::decoding::{decode, node_outputs, DecoderKind};
use crate::error::{Error, Result};
use crate::experiments::nonstragglers_for;
use crate::numerics::{norm_sq, Matrix};
use crate::seeding::{self, stream};
use crate::stragglers::sample_random_nonstragglers;

/// A trajectory whose objective passes this value is frozen and flagged.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub a: Matrix,
    pub b: Vec<f64>,
}

impl LeastSquares {
    /// `k` rows of width `dim` with entries uniform in `[−1, 1]`, and
    /// `b = A·x* + noise` for a random planted `x*`.
    pub fn synthetic(k: usize, dim: usize, seed: u64) -> Result<Self> {
        if k == 0 || dim == 0 {
            return Err(Error::invalid("problem needs k >= 1 and dim >= 1"));
        }
        let mut rng = seeding::rng(seed);
        let a = Matrix::from_fn(k, dim, |_, _| rng.random_range(-1.0..1.0));
        let x_star: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let clean = a.mul_vec(&x_star)?;
        let b = clean.iter().map(|y| y + 0.1 * rng.random_range(-1.0..1.0)).collect();
        Ok(LeastSquares { a, b })
    }

    pub fn k(&self) -> usize {
        self.a.rows()
    }

    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    /// `Σ_i ℓ_i(x)`.
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        let ax = self.a.mul_vec(x)?;
        Ok(0.5 * ax.iter().zip(&self.b).map(|(y, b)| (y - b) * (y - b)).sum::<f64>())
    }

    /// Per-point gradients as rows of a `k × dim` matrix.
    pub fn gradients(&self, x: &[f64]) -> Result<Matrix> {
        let ax = self.a.mul_vec(x)?;
        let resid: Vec<f64> = ax.iter().zip(&self.b).map(|(y, b)| y - b).collect();
        Ok(Matrix::from_fn(self.k(), self.dim(), |i, j| resid[i] * self.a.get(i, j)))
    }

    /// `1/‖A‖_F²`, a step size that is always stable for the full gradient.
    pub fn step_size(&self) -> f64 {
        1.0 / norm_sq(self.a.as_slice())
    }
}

/// `f̂ = Σ_j v_j·y_j` where `y_j` are node outputs (`k × dim`).
pub fn coded_gradient(outputs: &Matrix, v: &[f64]) -> Result<Vec<f64>> {
    outputs.tr_mul_vec(v)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub objective: Vec<f64>,
    pub diverged: bool,
}

impl Trajectory {
    pub fn final_objective(&self) -> f64 {
        *self.objective.last().expect("trajectory includes the starting point")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GdDemoReport {
    pub spec: CodeSpec,
    pub decoder: DecoderKind,
    pub epsilon: f64,
    pub r: usize,
    pub steps: usize,
    pub step_size: f64,
    pub seed: u64,
    pub coded: Trajectory,
    pub uncoded: Trajectory,
    pub full: Trajectory,
}

fn advance(x: &mut [f64], dir: &[f64], eta: f64) {
    for (xi, d) in x.iter_mut().zip(dir) {
        *xi -= eta * d;
    }
}

struct Runner {
    x: Vec<f64>,
    traj: Trajectory,
}

impl Runner {
    fn new(problem: &LeastSquares) -> Result<Self> {
        let x = vec![0.0; problem.dim()];
        let f0 = problem.objective(&x)?;
        Ok(Runner {
            x,
            traj: Trajectory {
                objective: vec![f0],
                diverged: false,
            },
        })
    }

    fn step(&mut self, problem: &LeastSquares, dir: &[f64], eta: f64) -> Result<()> {
        if !self.traj.diverged {
            advance(&mut self.x, dir, eta);
        }
        let f = if self.traj.diverged {
            self.traj.final_objective()
        } else {
            problem.objective(&self.x)?
        };
        if !f.is_finite() || f > DIVERGENCE_LIMIT {
            self.traj.diverged = true;
        }
        self.traj.objective.push(f);
        Ok(())
    }
}

/// Runs `steps` iterations of coded, uncoded and full gradient descent from 0.
pub fn run_gd_demo(
    spec: &CodeSpec,
    decoder: DecoderKind,
    epsilon: f64,
    steps: usize,
    dim: usize,
    seed: u64,
) -> Result<GdDemoReport> {
    spec.validate()?;
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::invalid(format!("epsilon={epsilon} outside [0, 1)")));
    }
    let r = nonstragglers_for(spec.k, epsilon);
    if r == 0 {
        return Err(Error::invalid(format!("epsilon={epsilon} leaves no non-stragglers")));
    }
    let problem = LeastSquares::synthetic(spec.k, dim, seeding::derive(seed, stream::PROBLEM))?;
    let g = construct_sbc(*spec, seeding::derive(seed, stream::MATRIX))?;
    let eta = problem.step_size();

    let mut coded = Runner::new(&problem)?;
    let mut uncoded = Runner::new(&problem)?;
    let mut full = Runner::new(&problem)?;
    for step in 0..steps {
        let step_seed = seeding::derive(seed, 1000 + step as u64);
        let t = sample_random_nonstragglers(spec.k, r, seeding::derive(step_seed, stream::STRAGGLERS))?;

        let grads = problem.gradients(&coded.x)?;
        let v = decode(decoder, &g, &t, seeding::derive(step_seed, stream::DECODE))?;
        let dir = coded_gradient(&node_outputs(&g, &grads)?, &v.v)?;
        coded.step(&problem, &dir, eta)?;

        let grads = problem.gradients(&uncoded.x)?;
        let mut mask = vec![0.0; spec.k];
        for &i in t.indices() {
            mask[i] = 1.0;
        }
        let dir = grads.tr_mul_vec(&mask)?;
        uncoded.step(&problem, &dir, eta)?;

        let grads = problem.gradients(&full.x)?;
        let dir = grads.tr_mul_vec(&vec![1.0; spec.k])?;
        full.step(&problem, &dir, eta)?;
    }
    Ok(GdDemoReport {
        spec: *spec,
        decoder,
        epsilon,
        r,
        steps,
        step_size: eta,
        seed,
        coded: coded.traj,
        uncoded: uncoded.traj,
        full: full.traj,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradients_match_finite_differences() {
        let prob = LeastSquares::synthetic(6, 3, 1).unwrap();
        let x = vec![0.3, -0.2, 0.5];
        let grads = prob.gradients(&x).unwrap();
        let total = grads.tr_mul_vec(&[1.0; 6]).unwrap();
        let h = 1e-6;
        for j in 0..3 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let fd = (prob.objective(&xp).unwrap() - prob.objective(&xm).unwrap()) / (2.0 * h);
            assert!((fd - total[j]).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_decoder_output_is_zero() {
        let spec = CodeSpec::frc(6, 2).unwrap();
        let g = construct_sbc(spec, 0).unwrap();
        let prob = LeastSquares::synthetic(6, 2, 2).unwrap();
        let y = node_outputs(&g, &prob.gradients(&[1.0, 1.0]).unwrap()).unwrap();
        assert_eq!(coded_gradient(&y, &[0.0; 6]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn frc_without_stragglers_matches_full_gradient() {
        let spec = CodeSpec::frc(10, 2).unwrap();
        let rep = run_gd_demo(&spec, DecoderKind::Optimal, 0.0, 20, 3, 5).unwrap();
        for (a, b) in rep.coded.objective.iter().zip(&rep.full.objective) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn full_gradient_descends() {
        let spec = CodeSpec::sbc(20, 5, 0.9, 0.05).unwrap();
        let rep = run_gd_demo(&spec, DecoderKind::StochasticBlock, 0.2, 50, 4, 3).unwrap();
        assert_eq!(rep.full.objective.len(), 51);
        assert!(rep.full.final_objective() < rep.full.objective[0]);
        assert!(!rep.full.diverged);
    }
}
