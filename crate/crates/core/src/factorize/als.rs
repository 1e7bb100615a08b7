//! Multi-start alternating least squares for `min ||target - p(f_1, .., f_r)||`.
//!
//! Each slot update is an exact linear least-squares solve with the other
//! slots held fixed. An update is kept only if it does not increase the
//! residual, so the per-sweep residual history of every start is
//! non-increasing.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{c64, least_squares_solve, ComplexVector};
use crate::product::GeneralProduct;
use crate::random::{stream_rng, unit_vector};
use crate::state::StateVector;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlsConfig {
    pub starts: usize,
    pub max_sweeps: usize,
    /// Minimum relative residual improvement per sweep before a start stops.
    pub stall_tol: f64,
    pub seed: u64,
}

impl Default for AlsConfig {
    fn default() -> Self {
        Self {
            starts: 16,
            max_sweeps: 500,
            stall_tol: 1e-12,
            seed: 0,
        }
    }
}

impl AlsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 || self.max_sweeps == 0 {
            return Err(Error::InvalidConfig("starts and max_sweeps must be >= 1".into()));
        }
        if !(self.stall_tol > 0.0 && self.stall_tol.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "stall_tol must be positive, got {}",
                self.stall_tol
            )));
        }
        Ok(())
    }
}

/// Residual history of one start; entry 0 is the residual of the random
/// initialization, entry `k` the residual after sweep `k`.
#[derive(Clone, Debug)]
pub struct StartTrace {
    pub start: usize,
    pub residuals: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct AlsFit {
    /// `||target - p(factors)|| / ||target||` for the reported factors.
    pub relative_residual: f64,
    pub factors: Vec<StateVector>,
    pub best_start: usize,
    pub starts_used: usize,
    /// Sweeps summed over all starts.
    pub sweeps_used: usize,
    pub traces: Vec<StartTrace>,
}

struct StartResult {
    factors: Vec<ComplexVector>,
    residual: f64,
    trace: StartTrace,
}

pub fn als_fit(p: &GeneralProduct, target: &StateVector, cfg: &AlsConfig) -> Result<AlsFit> {
    cfg.validate()?;
    if target.dim() != p.output_dim() {
        return Err(Error::DimensionMismatch(format!(
            "target has dim {}, product outputs {}",
            target.dim(),
            p.output_dim()
        )));
    }
    if target.is_zero() {
        return Err(Error::ZeroTarget);
    }

    // starts are independent; collect keeps start order
    let results: Vec<StartResult> = (0..cfg.starts)
        .into_par_iter()
        .map(|start| run_start(p, target.amplitudes(), cfg, start))
        .collect::<Result<_>>()?;

    let best = results
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.residual.total_cmp(&b.residual).then(i.cmp(j)))
        .map(|(i, _)| i)
        .expect("at least one start");

    let sweeps_used = results.iter().map(|r| r.trace.residuals.len() - 1).sum();
    let factors = results[best]
        .factors
        .iter()
        .map(|f| StateVector::from_vector(f.clone()))
        .collect::<Result<Vec<_>>>()?;
    let relative_residual = results[best].residual;
    let traces = results.into_iter().map(|r| r.trace).collect();
    Ok(AlsFit {
        relative_residual,
        factors,
        best_start: best,
        starts_used: cfg.starts,
        sweeps_used,
        traces,
    })
}

fn relative_residual(p: &GeneralProduct, factors: &[ComplexVector], target: &ComplexVector) -> f64 {
    let refs: Vec<&ComplexVector> = factors.iter().collect();
    (target - p.apply_unchecked(&refs)).norm() / target.norm()
}

fn run_start(
    p: &GeneralProduct,
    target: &ComplexVector,
    cfg: &AlsConfig,
    start: usize,
) -> Result<StartResult> {
    let mut rng = stream_rng(cfg.seed, start as u64);
    let mut factors: Vec<ComplexVector> = p
        .input_dims()
        .iter()
        .map(|&d| unit_vector(&mut rng, d))
        .collect();
    let mut residual = relative_residual(p, &factors, target);
    let mut history = vec![residual];

    for _ in 0..cfg.max_sweeps {
        let before = residual;
        for slot in 0..p.arity() {
            let mut candidate = factors.clone();
            // slot is re-solved from scratch, so the other slots' scale can be dropped
            for (t, f) in candidate.iter_mut().enumerate() {
                let n = f.norm();
                if t != slot && n > 0.0 {
                    f.unscale_mut(n);
                }
            }
            let design = p.slot_design_matrix(slot, &candidate);
            candidate[slot] = least_squares_solve(&design, target)?;
            let r = relative_residual(p, &candidate, target);
            if r <= residual {
                factors = candidate;
                residual = r;
            }
        }
        history.push(residual);
        if residual == 0.0 || before - residual <= cfg.stall_tol * before {
            break;
        }
    }

    fix_gauge(&mut factors);
    let residual = relative_residual(p, &factors, target);
    Ok(StartResult {
        factors,
        residual,
        trace: StartTrace {
            start,
            residuals: history,
        },
    })
}

fn largest_entry(v: &ComplexVector) -> Option<(usize, Complex64)> {
    let (idx, z) = v
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, Complex64)>, (i, &z)| match best {
            Some((_, b)) if b.norm() >= z.norm() => best,
            _ => Some((i, z)),
        })?;
    (z.norm() > 0.0).then_some((idx, z))
}

/// Slots 2..r get unit norm, slots 3..r get a non-negative largest entry,
/// and slot 1's largest entry is made real non-negative with the opposite
/// phase moved into slot 2. The product is unchanged up to rounding.
pub fn fix_gauge(factors: &mut [ComplexVector]) {
    let r = factors.len();
    for s in 1..r {
        let n = factors[s].norm();
        if n > 0.0 {
            factors[s].unscale_mut(n);
            factors[0].scale_mut(n);
        }
    }
    for s in 2..r {
        if let Some((_, z)) = largest_entry(&factors[s]) {
            let phase = z / z.norm();
            factors[s].apply(|x| *x *= phase.conj());
            factors[0].apply(|x| *x *= phase);
        }
    }
    if let Some((idx, z)) = largest_entry(&factors[0]) {
        let phase = z / z.norm();
        factors[0].apply(|x| *x *= phase.conj());
        factors[0][idx] = c64(z.norm(), 0.0);
        if r > 1 {
            factors[1].apply(|x| *x *= phase);
        }
    }
}
