//! Deciding whether a target is a product state of a given product.
//!
//! Exact certificates either prove the target lies outside the product set or
//! exhibit factors; ALS supplies an upper bound on the distance to the set.
//! [`classify`] merges both into a [`FactorizationReport`].

mod als;
mod certificates;

use serde::{Deserialize, Serialize};

pub use als::{als_fit, fix_gauge, AlsConfig, AlsFit, StartTrace};
pub use certificates::{
    preimage_analysis, schmidt_decompose, subspace_projection_residual, symmetric_rank_certificate,
    Certificate, CertificateOutcome, PreimageAnalysis, SchmidtResult, SubspaceProjection,
    SymmetricRankCertificate,
};

use crate::error::{Error, Result};
use crate::kernel::DEFAULT_REL_TOL;
use crate::product::{GeneralProduct, ProductFamily};
use crate::state::StateVector;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative residual at or below which a target counts as factorizable.
    pub tol_fact: f64,
    /// Relative ALS residual at or above which an uncertified target counts
    /// as numerically entangled.
    pub tol_ent: f64,
    /// Relative singular-value cutoff for ranks and range tests.
    pub rank_rel_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_fact: 1e-8,
            tol_ent: 1e-3,
            rank_rel_tol: DEFAULT_REL_TOL,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tol_fact > 0.0
            && self.tol_fact < self.tol_ent
            && self.rank_rel_tol > 0.0
            && self.rank_rel_tol < 1.0
            && self.tol_ent.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "need 0 < tol_fact < tol_ent and 0 < rank_rel_tol < 1, got {self:?}"
            )))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Factorizable,
    CertifiedEntangled,
    NumericallyEntangled,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub verdict: Verdict,
    /// Smallest `||target - p(factors)|| / ||target||` over ALS and any
    /// certificate that exhibits factors; `factors` attain it.
    pub relative_residual: f64,
    pub factors: Vec<StateVector>,
    pub certificates: Vec<Certificate>,
    pub starts_used: usize,
    pub sweeps_used: usize,
}

impl FactorizationReport {
    pub fn certificate(&self, name: &str) -> Option<&Certificate> {
        self.certificates.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub product: String,
    pub als: AlsConfig,
    pub tolerances: Tolerances,
}

/// JSON document written for a factorization run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub tool_version: String,
    pub config: ConfigEcho,
    #[serde(flatten)]
    pub report: FactorizationReport,
}

impl ReportDocument {
    pub fn new(p: &GeneralProduct, als: AlsConfig, tolerances: Tolerances, report: FactorizationReport) -> Self {
        Self {
            tool_version: crate::VERSION.to_string(),
            config: ConfigEcho {
                product: p.to_string(),
                als,
                tolerances,
            },
            report,
        }
    }
}

fn relative_residual(p: &GeneralProduct, factors: &[StateVector], target: &StateVector) -> Result<f64> {
    let out = p.apply(factors)?;
    Ok((target.amplitudes() - out.amplitudes()).norm() / target.norm())
}

/// Runs the family-specific certificates, the preimage test and ALS.
///
/// Verdict order: factors within `tol_fact` (from any source) give
/// FACTORIZABLE; otherwise a proven infeasibility gives CERTIFIED_ENTANGLED;
/// otherwise the ALS residual is compared with `tol_ent`.
pub fn classify(
    p: &GeneralProduct,
    target: &StateVector,
    cfg: &AlsConfig,
    tol: &Tolerances,
) -> Result<FactorizationReport> {
    tol.validate()?;
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

    let mut certs = Vec::new();
    match p.family() {
        Some(ProductFamily::SymmetricPhoton { .. }) => {
            // an asymmetric target is outside the range; the preimage test covers it
            match symmetric_rank_certificate(p, target, tol.rank_rel_tol) {
                Ok(c) => certs.push(c.certificate()),
                Err(Error::AsymmetricTarget(_)) => {}
                Err(e) => return Err(e),
            }
        }
        Some(ProductFamily::TrilinearGeometric { .. }) => {
            certs.push(subspace_projection_residual(p, target, tol.tol_fact)?.certificate());
        }
        _ => {}
    }
    certs.push(preimage_analysis(p, target, tol.rank_rel_tol)?.certificate());

    let fit = als_fit(p, target, cfg)?;
    let mut residual = fit.relative_residual;
    let mut factors = fit.factors;
    for c in &certs {
        if let Some(f) = &c.factors {
            let r = relative_residual(p, f, target)?;
            if r < residual {
                residual = r;
                factors = f.clone();
            }
        }
    }

    let proven = certs
        .iter()
        .any(|c| c.outcome == CertificateOutcome::CertifiedEntangled);
    let verdict = if residual <= tol.tol_fact {
        Verdict::Factorizable
    } else if proven {
        Verdict::CertifiedEntangled
    } else if fit.relative_residual >= tol.tol_ent {
        Verdict::NumericallyEntangled
    } else {
        Verdict::Inconclusive
    };

    Ok(FactorizationReport {
        verdict,
        relative_residual: residual,
        factors,
        certificates: certs,
        starts_used: fit.starts_used,
        sweeps_used: fit.sweeps_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::product::{integer_multiplication, tensor, wedge};

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn singlet() -> StateVector {
        StateVector::from_real(&[0.0, H, -H, 0.0]).unwrap()
    }

    #[test]
    fn singlet_under_wedge_and_tensor() {
        let cfg = AlsConfig::default();
        let tol = Tolerances::default();
        let w = classify(&wedge(2).unwrap(), &singlet(), &cfg, &tol).unwrap();
        assert_eq!(w.verdict, Verdict::Factorizable);
        let t = classify(&tensor(2, 2).unwrap(), &singlet(), &cfg, &tol).unwrap();
        assert_eq!(t.verdict, Verdict::CertifiedEntangled);
        assert_eq!(t.certificate("preimage").unwrap().evidence["schmidt_rank"], 2.0);
    }

    #[test]
    fn prime_is_certified_by_range() {
        let p = integer_multiplication(100).unwrap();
        let r = classify(&p, &StateVector::basis(99, 11).unwrap(), &AlsConfig::default(), &Tolerances::default()).unwrap();
        assert_eq!(r.verdict, Verdict::CertifiedEntangled);
        let c = r.certificate("preimage").unwrap();
        assert_eq!(c.outcome, CertificateOutcome::CertifiedEntangled);
        assert!(c.evidence["range_residual"] > 0.99);
    }

    #[test]
    fn uncertified_large_residual_is_numerical() {
        // e0^e1 + e2^e3 is not decomposable; nearest decomposable drops one term
        let p = wedge(4).unwrap();
        let mut v = vec![0.0; 16];
        v[1] = 1.0;
        v[4] = -1.0;
        v[2 * 4 + 3] = 1.0;
        v[3 * 4 + 2] = -1.0;
        let r = classify(&p, &StateVector::from_real(&v).unwrap(), &AlsConfig::default(), &Tolerances::default()).unwrap();
        assert_eq!(r.verdict, Verdict::NumericallyEntangled);
        assert!((r.relative_residual - H).abs() < 1e-6);
    }

    #[test]
    fn bad_tolerances_are_rejected() {
        let tol = Tolerances {
            tol_fact: 1e-2,
            tol_ent: 1e-3,
            ..Tolerances::default()
        };
        assert!(classify(&wedge(2).unwrap(), &singlet(), &AlsConfig::default(), &tol).is_err());
    }
}
