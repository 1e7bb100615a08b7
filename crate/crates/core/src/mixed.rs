//! Mixtures of product states and the PPT witness transported through the
//! universal map.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{
    c64, hermitian_eigenvalues, is_hermitian, kron_all, partial_transpose, pseudo_inverse, svd,
    ComplexMatrix, ComplexVector,
};
use crate::product::GeneralProduct;
use crate::random::{gaussian_vector, unit_vector};
use crate::state::StateVector;

const WEIGHT_SUM_TOL: f64 = 1e-12;
const DENSITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleItem {
    #[serde(rename = "p")]
    pub weight: f64,
    pub factors: Vec<StateVector>,
}

/// Finite mixture of factor tuples with positive weights summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnsembleFile", into = "EnsembleFile")]
pub struct Ensemble {
    items: Vec<EnsembleItem>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleFile {
    pub items: Vec<EnsembleItem>,
}

impl TryFrom<EnsembleFile> for Ensemble {
    type Error = Error;

    fn try_from(file: EnsembleFile) -> Result<Self> {
        Ensemble::new(file.items)
    }
}

impl From<Ensemble> for EnsembleFile {
    fn from(e: Ensemble) -> Self {
        EnsembleFile { items: e.items }
    }
}

impl Ensemble {
    pub fn new(items: Vec<EnsembleItem>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidEnsemble("no items".into()));
        }
        for (n, item) in items.iter().enumerate() {
            if !(item.weight > 0.0 && item.weight.is_finite()) {
                return Err(Error::InvalidEnsemble(format!(
                    "item {n}: weight {} is not positive",
                    item.weight
                )));
            }
        }
        let total: f64 = items.iter().map(|i| i.weight).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidEnsemble(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[EnsembleItem] {
        &self.items
    }

    /// `n_items` random factor tuples with random weights.
    pub fn random<R: Rng + ?Sized>(p: &GeneralProduct, rng: &mut R, n_items: usize) -> Result<Self> {
        let raw: Vec<f64> = (0..n_items).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let mut items = Vec::with_capacity(n_items);
        for w in raw {
            let factors = p
                .input_dims()
                .iter()
                .map(|&d| StateVector::from_vector(unit_vector(rng, d)))
                .collect::<Result<Vec<_>>>()?;
            items.push(EnsembleItem {
                weight: w / total,
                factors,
            });
        }
        // absorb rounding of the normalization into the last weight
        let sum: f64 = items.iter().map(|i| i.weight).sum();
        if let Some(last) = items.last_mut() {
            last.weight += 1.0 - sum;
        }
        Ensemble::new(items)
    }
}

/// Hermitian positive semidefinite operator with unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidDensity(format!(
                "not square: {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if !is_hermitian(&matrix, DENSITY_TOL) {
            return Err(Error::InvalidDensity("not Hermitian".into()));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > DENSITY_TOL || trace.im.abs() > DENSITY_TOL {
            return Err(Error::InvalidDensity(format!("trace is {trace}, not 1")));
        }
        let min = hermitian_eigenvalues(&matrix)?[0];
        if min < -DENSITY_TOL {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { matrix })
    }

    pub fn pure(state: &StateVector) -> Result<Self> {
        if state.is_zero() {
            return Err(Error::InvalidDensity("zero state".into()));
        }
        let v = state.normalized().into_vector();
        Self::new(&v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(&self.matrix)
    }
}

fn product_vector(p: &GeneralProduct, item: &EnsembleItem, n: usize) -> Result<ComplexVector> {
    let v = p.apply(&item.factors)?;
    if v.norm() == 0.0 {
        return Err(Error::ZeroProductVector(n));
    }
    Ok(v.into_vector())
}

/// `sum_i p_i |v_i><v_i| / <v_i|v_i>` with `v_i` the product of item `i`.
pub fn ensemble_to_density(p: &GeneralProduct, e: &Ensemble) -> Result<DensityMatrix> {
    let dim = p.output_dim();
    let mut rho = ComplexMatrix::zeros(dim, dim);
    for (n, item) in e.items.iter().enumerate() {
        let v = product_vector(p, item, n)?;
        let v = v.unscale(v.norm());
        rho += (&v * v.adjoint()) * c64(item.weight, 0.0);
    }
    DensityMatrix::new(rho)
}

#[derive(Clone, Debug)]
pub struct SeparableCompanion {
    /// `sum_i p_i |g_i><g_i|` with `g_i = f_1 (x) .. (x) f_r / ||p(f_1..f_r)||`;
    /// separable and positive, trace generally not 1.
    pub sigma_prime: ComplexMatrix,
    /// `||rho - L sigma' L^dagger||_F` for `rho = ensemble_to_density(p, e)`.
    pub check: f64,
}

pub fn separable_companion(p: &GeneralProduct, e: &Ensemble) -> Result<SeparableCompanion> {
    let domain = p.domain_dim();
    let mut sigma = ComplexMatrix::zeros(domain, domain);
    for (n, item) in e.items.iter().enumerate() {
        let scale = product_vector(p, item, n)?.norm();
        let g = kron_all(item.factors.iter().map(StateVector::amplitudes)).unscale(scale);
        sigma += (&g * g.adjoint()) * c64(item.weight, 0.0);
    }
    let rho = ensemble_to_density(p, e)?;
    let l = p.universal_map().into_matrix();
    let check = (rho.matrix() - &l * &sigma * l.adjoint()).norm();
    Ok(SeparableCompanion {
        sigma_prime: sigma,
        check,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum WitnessVerdict {
    QuantumCorrelated,
    Undetected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessOutcome {
    pub verdict: WitnessVerdict,
    pub reason: String,
    /// PPT is necessary and sufficient for separability when `d1 * d2 <= 6`.
    pub conclusive: bool,
    pub dims: [usize; 2],
    pub range_residual: f64,
    pub preimage_min_eigenvalue: Option<f64>,
    pub partial_transpose_min_eigenvalue: Option<f64>,
    /// Negativity threshold actually used: `rel_tol * cond(L)^2`.
    pub threshold: f64,
}

/// Pulls `rho` back through an injective bilinear universal map and applies
/// the PPT test to the unique preimage operator `L^+ rho L^+dagger`.
pub fn ppt_witness(p: &GeneralProduct, rho: &DensityMatrix, rel_tol: f64) -> Result<WitnessOutcome> {
    if p.arity() != 2 {
        return Err(Error::InvalidProduct(format!(
            "PPT witness needs a bilinear product, got arity {}",
            p.arity()
        )));
    }
    if rho.dim() != p.output_dim() {
        return Err(Error::DimensionMismatch(format!(
            "density matrix has dim {}, product outputs {}",
            rho.dim(),
            p.output_dim()
        )));
    }
    let domain = p.domain_dim();
    let rank = p.universal_rank(rel_tol)?;
    if rank < domain {
        return Err(Error::NonInjective { rank, domain });
    }
    let dims = [p.input_dims()[0], p.input_dims()[1]];
    let conclusive = dims[0] * dims[1] <= 6;

    let l = p.universal_map().into_matrix();
    let sv = svd(&l)?;
    let cond = sv.s_max() / sv.singular_values[domain - 1];
    // rounding in L^+ rho L^+dagger grows with cond(L)^2
    let threshold = rel_tol * cond * cond;

    let l_pinv = pseudo_inverse(&l, rel_tol)?;
    let sigma = &l_pinv * rho.matrix() * l_pinv.adjoint();
    let range_residual = (&l * &sigma * l.adjoint() - rho.matrix()).norm() / rho.matrix().norm();
    let mut outcome = WitnessOutcome {
        verdict: WitnessVerdict::QuantumCorrelated,
        reason: String::new(),
        conclusive,
        dims,
        range_residual,
        preimage_min_eigenvalue: None,
        partial_transpose_min_eigenvalue: None,
        threshold,
    };
    if range_residual > threshold {
        outcome.reason = "state is not supported on the range of the universal map".into();
        return Ok(outcome);
    }
    let sigma = (&sigma + sigma.adjoint()) * c64(0.5, 0.0);
    let trace = sigma.trace().re;
    let sigma = sigma.unscale(trace);
    let min_pre = hermitian_eigenvalues(&sigma)?[0];
    outcome.preimage_min_eigenvalue = Some(min_pre);
    if min_pre < -threshold {
        outcome.reason = "preimage operator is not positive".into();
        return Ok(outcome);
    }
    let pt = partial_transpose(&sigma, dims[0], dims[1])?;
    let min_pt = hermitian_eigenvalues(&pt)?[0];
    outcome.partial_transpose_min_eigenvalue = Some(min_pt);
    if min_pt < -threshold {
        outcome.reason = "partial transpose of the preimage has a negative eigenvalue".into();
        return Ok(outcome);
    }
    outcome.verdict = WitnessVerdict::Undetected;
    outcome.reason = if conclusive {
        "preimage is PPT, hence separable".into()
    } else {
        "preimage is PPT; PPT is not conclusive in these dimensions".into()
    };
    Ok(outcome)
}

/// Random mixture of states that factorize across one of the bipartitions
/// `AB|C`, `BC|A` or `CA|B` of a trilinear product (test-data generator).
pub fn sample_biseparable<R: Rng + ?Sized>(
    p: &GeneralProduct,
    rng: &mut R,
    n_items: usize,
) -> Result<DensityMatrix> {
    if p.arity() != 3 {
        return Err(Error::InvalidProduct(format!(
            "biseparable sampling needs arity 3, got {}",
            p.arity()
        )));
    }
    if n_items == 0 {
        return Err(Error::InvalidEnsemble("no items".into()));
    }
    let [da, db, dc] = [p.input_dims()[0], p.input_dims()[1], p.input_dims()[2]];
    let l = p.universal_map().into_matrix();
    let dim = p.output_dim();
    let mut rho = ComplexMatrix::zeros(dim, dim);
    let mut total = 0.0;
    let mut added = 0;
    while added < n_items {
        let x = match rng.random_range(0..3) {
            0 => kron_all([&gaussian_vector(rng, da * db), &gaussian_vector(rng, dc)]),
            1 => kron_all([&gaussian_vector(rng, da), &gaussian_vector(rng, db * dc)]),
            _ => {
                let ca = gaussian_vector(rng, dc * da);
                let b = gaussian_vector(rng, db);
                ComplexVector::from_fn(da * db * dc, |flat, _| {
                    let (a, rest) = (flat / (db * dc), flat % (db * dc));
                    let (bi, c) = (rest / dc, rest % dc);
                    ca[c * da + a] * b[bi]
                })
            }
        };
        let v = &l * x;
        let n = v.norm();
        if n == 0.0 {
            continue;
        }
        let v = v.unscale(n);
        let w: f64 = rng.random_range(0.05..1.0);
        rho += (&v * v.adjoint()) * c64(w, 0.0);
        total += w;
        added += 1;
    }
    DensityMatrix::new(rho.unscale(total))
}
