//! Exact tests that either prove a target is not a product state or
//! exhibit factors for it.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{c64, solve_with_svd, svd, ComplexMatrix, ComplexVector};
use crate::product::{GeneralProduct, ProductFamily};
use crate::state::StateVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CertificateOutcome {
    Factorizable,
    CertifiedEntangled,
    Abstain,
}

/// One entry of a report's certificate trail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub name: String,
    pub outcome: CertificateOutcome,
    pub detail: String,
    pub evidence: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<StateVector>>,
}

#[derive(Clone, Debug)]
pub struct SchmidtResult {
    /// Normalized singular values, non-increasing, squares summing to 1.
    pub coefficients: Vec<f64>,
    pub rank: usize,
    pub left: Vec<StateVector>,
    pub right: Vec<StateVector>,
}

/// Schmidt decomposition of `v` viewed as a `dim_a x dim_b` matrix in
/// Kronecker order: `v = sum_k c_k left_k (x) right_k`.
pub fn schmidt_decompose(v: &StateVector, dim_a: usize, dim_b: usize, rel_tol: f64) -> Result<SchmidtResult> {
    if v.dim() != dim_a * dim_b {
        return Err(Error::DimensionMismatch(format!(
            "state of dim {} cannot be split as {dim_a} x {dim_b}",
            v.dim()
        )));
    }
    if v.is_zero() {
        return Err(Error::ZeroTarget);
    }
    let m = ComplexMatrix::from_fn(dim_a, dim_b, |i, j| v[i * dim_b + j]);
    let dec = svd(&m)?;
    let rank = dec.rank(rel_tol);
    let total = dec.singular_values.iter().map(|s| s * s).sum::<f64>().sqrt();
    let coefficients = dec.singular_values.iter().map(|s| s / total).collect();
    let left = dec
        .u
        .column_iter()
        .map(|c| StateVector::from_vector(c.into_owned()))
        .collect::<Result<_>>()?;
    let right = dec
        .v
        .column_iter()
        .map(|c| StateVector::from_vector(c.map(|z| z.conj())))
        .collect::<Result<_>>()?;
    Ok(SchmidtResult {
        coefficients,
        rank,
        left,
        right,
    })
}

#[derive(Clone, Debug)]
pub struct PreimageAnalysis {
    pub outcome: CertificateOutcome,
    /// `||L x - target|| / ||target||` for the minimum-norm preimage `x`.
    pub range_residual: f64,
    pub map_rank: usize,
    pub domain_dim: usize,
    pub preimage: ComplexVector,
    pub schmidt: Option<SchmidtResult>,
    pub factors: Option<Vec<StateVector>>,
}

impl PreimageAnalysis {
    pub fn certificate(&self) -> Certificate {
        let mut evidence = BTreeMap::new();
        evidence.insert("range_residual".to_string(), self.range_residual);
        evidence.insert("map_rank".to_string(), self.map_rank as f64);
        evidence.insert("nullity".to_string(), (self.domain_dim - self.map_rank) as f64);
        let detail = match (&self.outcome, &self.schmidt) {
            (CertificateOutcome::CertifiedEntangled, None) => "target is not in the range of the universal map".to_string(),
            (CertificateOutcome::Abstain, _) => {
                "universal map has a nontrivial nullspace; preimage test undecided".to_string()
            }
            (_, Some(s)) => {
                evidence.insert("schmidt_rank".to_string(), s.rank as f64);
                for (k, c) in s.coefficients.iter().enumerate() {
                    evidence.insert(format!("schmidt_coefficient_{k}"), *c);
                }
                format!("unique preimage has Schmidt rank {}", s.rank)
            }
            (CertificateOutcome::Factorizable, None) => String::new(),
        };
        Certificate {
            name: "preimage".into(),
            outcome: self.outcome,
            detail,
            evidence,
            factors: self.factors.clone(),
        }
    }
}

/// Range membership of the target under the universal map, followed by a
/// Schmidt-rank test of the preimage when the map is injective and bilinear.
pub fn preimage_analysis(p: &GeneralProduct, target: &StateVector, rel_tol: f64) -> Result<PreimageAnalysis> {
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
    let t = target.amplitudes();
    let map = p.compressed_universal_map();
    let dec = svd(&map.matrix)?;
    let rank = dec.rank(rel_tol);
    let x_active = solve_with_svd(&dec, t, rel_tol);
    let range_residual = (&map.matrix * &x_active - t).norm() / t.norm();
    let preimage = map.scatter(&x_active);
    let domain_dim = p.domain_dim();

    let mut analysis = PreimageAnalysis {
        outcome: CertificateOutcome::Abstain,
        range_residual,
        map_rank: rank,
        domain_dim,
        preimage,
        schmidt: None,
        factors: None,
    };
    if range_residual > rel_tol {
        analysis.outcome = CertificateOutcome::CertifiedEntangled;
        return Ok(analysis);
    }
    let injective = map.columns.len() == domain_dim && rank == domain_dim;
    if injective && p.arity() == 2 {
        let (da, db) = (p.input_dims()[0], p.input_dims()[1]);
        let x = StateVector::from_vector(analysis.preimage.clone())?;
        let schmidt = schmidt_decompose(&x, da, db, rel_tol)?;
        if schmidt.rank == 1 {
            let scale = x.norm() * schmidt.coefficients[0];
            let a = schmidt.left[0].amplitudes().scale(scale);
            analysis.factors = Some(vec![StateVector::from_vector(a)?, schmidt.right[0].clone()]);
            analysis.outcome = CertificateOutcome::Factorizable;
        } else {
            analysis.outcome = CertificateOutcome::CertifiedEntangled;
        }
        analysis.schmidt = Some(schmidt);
    }
    Ok(analysis)
}

#[derive(Clone, Debug)]
pub struct SymmetricRankCertificate {
    pub outcome: CertificateOutcome,
    pub rank: usize,
    pub singular_values: Vec<f64>,
    /// Exact relative distance to the nearest symmetrized outer product,
    /// `sqrt(sum_{k>2} s_k^2) / ||S||_F`.
    pub best_relative_residual: f64,
    pub factors: Option<Vec<StateVector>>,
    /// Relative residual of the constructed factors, when present.
    pub construction_residual: Option<f64>,
}

impl SymmetricRankCertificate {
    pub fn certificate(&self) -> Certificate {
        let mut evidence = BTreeMap::new();
        evidence.insert("rank".to_string(), self.rank as f64);
        evidence.insert("best_relative_residual".to_string(), self.best_relative_residual);
        for (k, s) in self.singular_values.iter().enumerate() {
            evidence.insert(format!("singular_value_{k}"), *s);
        }
        if let Some(r) = self.construction_residual {
            evidence.insert("construction_residual".to_string(), r);
        }
        let detail = if self.rank > 2 {
            format!("symmetric matrix has rank {} > 2", self.rank)
        } else {
            format!("symmetric matrix has rank {} <= 2", self.rank)
        };
        Certificate {
            name: "symmetric_rank".into(),
            outcome: self.outcome,
            detail,
            evidence,
            factors: self.factors.clone(),
        }
    }
}

pub(crate) fn photon_matrix(p: &GeneralProduct, target: &StateVector) -> Result<ComplexMatrix> {
    let Some(ProductFamily::SymmetricPhoton { modes }) = p.family() else {
        return Err(Error::WrongFamily {
            expected: "symmetric_photon",
        });
    };
    if target.dim() != modes * modes {
        return Err(Error::DimensionMismatch(format!(
            "target has dim {}, expected {}",
            target.dim(),
            modes * modes
        )));
    }
    Ok(ComplexMatrix::from_fn(modes, modes, |m, n| target[m * modes + n]))
}

pub(crate) fn asymmetry(s: &ComplexMatrix) -> f64 {
    (s - s.transpose()).iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// Products of the two-photon builtin are exactly the matrices
/// `alpha beta^T + beta alpha^T`, i.e. complex-symmetric matrices of rank <= 2.
///
/// Converse: a symmetric `S` of rank <= 2 splits as `x x^T + y y^T`
/// (two symmetric rank-one reduction steps), and `alpha = (x + i y)/sqrt 2`,
/// `beta = (x - i y)/sqrt 2` give `alpha beta^T + beta alpha^T = S`.
pub fn symmetric_rank_certificate(
    p: &GeneralProduct,
    target: &StateVector,
    rel_tol: f64,
) -> Result<SymmetricRankCertificate> {
    let s = photon_matrix(p, target)?;
    let scale = s.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    let asym = asymmetry(&s);
    if asym > 1e-10 * scale.max(1.0) {
        return Err(Error::AsymmetricTarget(asym));
    }
    if target.is_zero() {
        return Err(Error::ZeroTarget);
    }
    let dec = svd(&s)?;
    let rank = dec.rank(rel_tol);
    let total: f64 = dec.singular_values.iter().map(|x| x * x).sum();
    let tail: f64 = dec.singular_values.iter().skip(2).map(|x| x * x).sum();
    let best_relative_residual = (tail / total).sqrt();

    let mut cert = SymmetricRankCertificate {
        outcome: CertificateOutcome::CertifiedEntangled,
        rank,
        singular_values: dec.singular_values.clone(),
        best_relative_residual,
        factors: None,
        construction_residual: None,
    };
    if rank > 2 {
        return Ok(cert);
    }

    // best rank-<=2 approximation, symmetrized against rounding
    let mut s2 = ComplexMatrix::zeros(s.nrows(), s.ncols());
    for k in 0..rank {
        s2 += dec.u.column(k) * dec.v.column(k).adjoint() * c64(dec.singular_values[k], 0.0);
    }
    let s2 = (&s2 + s2.transpose()) * c64(0.5, 0.0);
    let (x, rest) = symmetric_rank_one_step(&s2).unwrap_or_else(|| (ComplexVector::zeros(s.nrows()), s2.clone()));
    let y = if rest.norm() <= rel_tol * s2.norm() {
        ComplexVector::zeros(s.nrows())
    } else {
        symmetric_rank_one_step(&rest).map_or_else(|| ComplexVector::zeros(s.nrows()), |(y, _)| y)
    };
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let i = c64(0.0, 1.0);
    let alpha = (&x + &y * i) * c64(h, 0.0);
    let beta = (&x - &y * i) * c64(h, 0.0);
    let factors = vec![StateVector::from_vector(alpha)?, StateVector::from_vector(beta)?];
    let reproduced = p.apply(&factors)?;
    let residual = (target.amplitudes() - reproduced.amplitudes()).norm() / target.norm();
    cert.outcome = CertificateOutcome::Factorizable;
    cert.factors = Some(factors);
    cert.construction_residual = Some(residual);
    Ok(cert)
}

/// Finds `x` with `S - x x^T` of rank one less than `S` (symmetric
/// Wedderburn reduction through a vector `w` with `w^T S w != 0`).
fn symmetric_rank_one_step(s: &ComplexMatrix) -> Option<(ComplexVector, ComplexMatrix)> {
    let n = s.nrows();
    let mut best: Option<(f64, ComplexVector, Complex64)> = None;
    let mut consider = |w: ComplexVector| {
        let c = (w.transpose() * s * &w)[(0, 0)];
        if best.as_ref().is_none_or(|(b, _, _)| c.norm() > *b) {
            best = Some((c.norm(), w, c));
        }
    };
    for i in 0..n {
        let mut w = ComplexVector::zeros(n);
        w[i] = c64(1.0, 0.0);
        consider(w);
    }
    for i in 0..n {
        for j in i + 1..n {
            let mut w = ComplexVector::zeros(n);
            w[i] = c64(1.0, 0.0);
            w[j] = c64(1.0, 0.0);
            consider(w);
        }
    }
    let (mag, w, c) = best?;
    if mag == 0.0 {
        return None;
    }
    let x = (s * w) / c.sqrt();
    let rest = s - &x * x.transpose();
    Some((x, rest))
}

#[derive(Clone, Debug)]
pub struct SubspaceProjection {
    pub outcome: CertificateOutcome,
    /// Exact distance to the product set divided by `||target||`.
    pub relative_residual: f64,
    pub factors: Vec<StateVector>,
}

impl SubspaceProjection {
    pub fn certificate(&self) -> Certificate {
        let mut evidence = BTreeMap::new();
        evidence.insert("exact_relative_residual".to_string(), self.relative_residual);
        Certificate {
            name: "subspace_projection".into(),
            outcome: self.outcome,
            detail: "product set is a linear subspace; distance is the orthogonal projection residual".into(),
            evidence,
            factors: Some(self.factors.clone()),
        }
    }
}

/// The trilinear builtin's product set is the subspace
/// `{(sum_n p_n, p_0, .., p_{N-1})}`, whose orthogonal complement is spanned
/// by `(1, -1, .., -1)`; the squared distance of a target
/// `(t_-, t_0, .., t_{N-1})` is `|t_- - sum t_n|^2 / (N + 1)`.
pub fn subspace_projection_residual(p: &GeneralProduct, target: &StateVector, tol_fact: f64) -> Result<SubspaceProjection> {
    let Some(ProductFamily::TrilinearGeometric { terms }) = p.family() else {
        return Err(Error::WrongFamily {
            expected: "trilinear_geometric",
        });
    };
    if target.dim() != terms + 1 {
        return Err(Error::DimensionMismatch(format!(
            "target has dim {}, expected {}",
            target.dim(),
            terms + 1
        )));
    }
    if target.is_zero() {
        return Err(Error::ZeroTarget);
    }
    let t = target.amplitudes();
    let tail: Complex64 = t.iter().skip(1).sum();
    let gap = t[0] - tail;
    let n1 = (terms + 1) as f64;
    let relative_residual = gap.norm() / n1.sqrt() / t.norm();

    let shift = gap / n1;
    let a = ComplexVector::from_fn(terms, |n, _| t[n + 1] + shift);
    let ones = ComplexVector::from_element(terms, c64(1.0, 0.0));
    let factors = vec![
        StateVector::from_vector(a)?,
        StateVector::from_vector(ones.clone())?,
        StateVector::from_vector(ones)?,
    ];
    let outcome = if relative_residual <= tol_fact {
        CertificateOutcome::Factorizable
    } else {
        CertificateOutcome::CertifiedEntangled
    };
    Ok(SubspaceProjection {
        outcome,
        relative_residual,
        factors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::product::{integer_multiplication, symmetric_photon, tensor, trilinear_geometric, wedge};

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn schmidt_examples() {
        let a = StateVector::from_real(&[1.0, 2.0]).unwrap();
        let b = StateVector::from_real(&[0.5, -1.0, 3.0]).unwrap();
        let prod = tensor(2, 3).unwrap().apply(&[a, b]).unwrap();
        assert_eq!(schmidt_decompose(&prod, 2, 3, 1e-10).unwrap().rank, 1);

        let bell = StateVector::from_real(&[H, 0.0, 0.0, H]).unwrap();
        let s = schmidt_decompose(&bell, 2, 2, 1e-10).unwrap();
        assert_eq!(s.rank, 2);
        for c in &s.coefficients {
            assert!((c - H).abs() < 1e-12);
        }

        let r5 = 5f64.sqrt();
        let v = StateVector::from_real(&[2.0 / r5, 0.0, 0.0, 1.0 / r5]).unwrap();
        let s = schmidt_decompose(&v, 2, 2, 1e-10).unwrap();
        assert!((s.coefficients[0] - 2.0 / r5).abs() < 1e-12);
        assert!((s.coefficients[1] - 1.0 / r5).abs() < 1e-12);
        assert!(schmidt_decompose(&v, 2, 3, 1e-10).is_err());
    }

    #[test]
    fn schmidt_terms_rebuild_the_state() {
        let v = StateVector::new(vec![c64(0.3, 1.0), c64(-2.0, 0.1), c64(0.0, 0.7), c64(1.1, -0.4), c64(0.2, 0.2), c64(-1.0, 0.0)]).unwrap();
        let s = schmidt_decompose(&v, 3, 2, 1e-10).unwrap();
        let mut rebuilt = ComplexVector::zeros(6);
        for k in 0..s.coefficients.len() {
            let term = crate::kernel::kron_vec(s.left[k].amplitudes(), s.right[k].amplitudes());
            rebuilt += term * c64(s.coefficients[k] * v.norm(), 0.0);
        }
        assert!((rebuilt - v.amplitudes()).norm() < 1e-12);
    }

    #[test]
    fn prime_basis_state_is_out_of_range() {
        let p = integer_multiplication(100).unwrap();
        let target = StateVector::basis(99, 13 - 2).unwrap();
        let a = preimage_analysis(&p, &target, 1e-10).unwrap();
        assert_eq!(a.outcome, CertificateOutcome::CertifiedEntangled);
        assert!((a.range_residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bell_preimage_under_tensor() {
        let bell = StateVector::from_real(&[H, 0.0, 0.0, H]).unwrap();
        let a = preimage_analysis(&tensor(2, 2).unwrap(), &bell, 1e-10).unwrap();
        assert_eq!(a.outcome, CertificateOutcome::CertifiedEntangled);
        assert_eq!(a.schmidt.unwrap().rank, 2);

        let prod = StateVector::from_real(&[1.0, 2.0, -1.0, -2.0]).unwrap();
        let a = preimage_analysis(&tensor(2, 2).unwrap(), &prod, 1e-10).unwrap();
        assert_eq!(a.outcome, CertificateOutcome::Factorizable);
        let f = a.factors.unwrap();
        let back = tensor(2, 2).unwrap().apply(&f).unwrap();
        assert!((back.amplitudes() - prod.amplitudes()).norm() < 1e-12);
    }

    #[test]
    fn wedge_targets_in_range_abstain() {
        let singlet = StateVector::from_real(&[0.0, H, -H, 0.0]).unwrap();
        let a = preimage_analysis(&wedge(2).unwrap(), &singlet, 1e-10).unwrap();
        assert_eq!(a.outcome, CertificateOutcome::Abstain);
        assert_eq!(a.domain_dim - a.map_rank, 3);

        let sym = StateVector::from_real(&[0.0, 1.0, 1.0, 0.0]).unwrap();
        let a = preimage_analysis(&wedge(2).unwrap(), &sym, 1e-10).unwrap();
        assert_eq!(a.outcome, CertificateOutcome::CertifiedEntangled);
    }

    fn photon_target() -> StateVector {
        let mut v = vec![0.0; 16];
        for (m, n) in [(0, 2), (2, 0), (1, 3), (3, 1)] {
            v[m * 4 + n] = 1.0;
        }
        StateVector::from_real(&v).unwrap()
    }

    #[test]
    fn photon_target_has_rank_four() {
        let p = symmetric_photon(4).unwrap();
        let c = symmetric_rank_certificate(&p, &photon_target(), 1e-10).unwrap();
        assert_eq!(c.rank, 4);
        assert_eq!(c.outcome, CertificateOutcome::CertifiedEntangled);
        assert!((c.best_relative_residual - H).abs() < 1e-12);
    }

    #[test]
    fn photon_products_are_reconstructed() {
        let p = symmetric_photon(4).unwrap();
        let alpha = StateVector::new(vec![c64(1.0, 0.5), c64(0.0, -1.0), c64(2.0, 0.0), c64(-0.3, 0.3)]).unwrap();
        let beta = StateVector::new(vec![c64(0.2, 0.0), c64(1.0, 1.0), c64(0.0, 0.0), c64(-1.0, 0.5)]).unwrap();
        let t = p.apply(&[alpha.clone(), beta]).unwrap();
        let c = symmetric_rank_certificate(&p, &t, 1e-10).unwrap();
        assert_eq!(c.outcome, CertificateOutcome::Factorizable);
        assert!(c.construction_residual.unwrap() < 1e-12);

        // rank one: alpha = beta
        let t = p.apply(&[alpha.clone(), alpha]).unwrap();
        let c = symmetric_rank_certificate(&p, &t, 1e-10).unwrap();
        assert_eq!(c.rank, 1);
        assert!(c.construction_residual.unwrap() < 1e-12);
    }

    #[test]
    fn photon_certificate_errors() {
        let p = symmetric_photon(4).unwrap();
        let asym = StateVector::basis(16, 1).unwrap();
        assert!(matches!(symmetric_rank_certificate(&p, &asym, 1e-10), Err(Error::AsymmetricTarget(_))));
        assert!(matches!(
            symmetric_rank_certificate(&wedge(4).unwrap(), &photon_target(), 1e-10),
            Err(Error::WrongFamily { .. })
        ));
    }

    fn geometric(q: f64, terms: usize) -> StateVector {
        StateVector::from_real(&(0..=terms).map(|n| q.powi(n as i32)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn trilinear_projection() {
        let p = trilinear_geometric(16).unwrap();
        let half = subspace_projection_residual(&p, &geometric(0.5, 16), 1e-5).unwrap();
        assert_eq!(half.outcome, CertificateOutcome::Factorizable);
        assert!(half.relative_residual < 1e-5);
        let f = p.apply(&half.factors).unwrap();
        let direct = (f.amplitudes() - geometric(0.5, 16).amplitudes()).norm() / geometric(0.5, 16).norm();
        assert!((direct - half.relative_residual).abs() < 1e-15);

        let hi = subspace_projection_residual(&p, &geometric(0.8, 16), 1e-5).unwrap();
        assert_eq!(hi.outcome, CertificateOutcome::CertifiedEntangled);
        assert!((hi.relative_residual - 0.4203).abs() < 1e-3);

        // already in the subspace
        let inside = StateVector::from_real(&[6.0, 1.0, 2.0, 3.0]).unwrap();
        let r = subspace_projection_residual(&trilinear_geometric(3).unwrap(), &inside, 1e-8).unwrap();
        assert_eq!(r.relative_residual, 0.0);

        assert!(subspace_projection_residual(&wedge(2).unwrap(), &inside, 1e-8).is_err());
    }
}
