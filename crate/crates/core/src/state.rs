use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{c64, ComplexVector};

/// Complex amplitude vector over an indexed basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateFile", into = "StateFile")]
pub struct StateVector {
    amplitudes: ComplexVector,
    label: Option<String>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        Self::from_vector(ComplexVector::from_vec(amplitudes))
    }

    pub fn from_vector(amplitudes: ComplexVector) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::DimensionMismatch("state vector must have dim >= 1".into()));
        }
        if !amplitudes.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite("state amplitudes"));
        }
        Ok(Self {
            amplitudes,
            label: None,
        })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&x| c64(x, 0.0)).collect())
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::DimensionMismatch(format!(
                "basis index {index} out of range for dim {dim}"
            )));
        }
        let mut v = ComplexVector::zeros(dim);
        v[index] = c64(1.0, 0.0);
        Self::from_vector(v)
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::from_vector(ComplexVector::zeros(dim))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    pub fn into_vector(self) -> ComplexVector {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn is_zero(&self) -> bool {
        self.amplitudes.iter().all(|z| *z == Complex64::new(0.0, 0.0))
    }

    /// Unit-norm copy; the zero vector is returned unchanged.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        Self {
            amplitudes: self.amplitudes.unscale(n),
            label: self.label.clone(),
        }
    }
}

impl std::ops::Index<usize> for StateVector {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.amplitudes[i]
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, z) in self.amplitudes.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{z}")?;
        }
        write!(f, "]")
    }
}

/// On-disk layout: `{"dim": n, "amplitudes": [[re, im], ...], "label": "..."}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub dim: usize,
    pub amplitudes: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl TryFrom<StateFile> for StateVector {
    type Error = Error;

    fn try_from(file: StateFile) -> Result<Self> {
        if file.amplitudes.len() != file.dim {
            return Err(Error::DimensionMismatch(format!(
                "field `amplitudes` has {} entries but `dim` is {}",
                file.amplitudes.len(),
                file.dim
            )));
        }
        let state = StateVector::new(file.amplitudes.iter().map(|&[re, im]| c64(re, im)).collect())?;
        Ok(match file.label {
            Some(label) => state.with_label(label),
            None => state,
        })
    }
}

impl From<StateVector> for StateFile {
    fn from(state: StateVector) -> Self {
        StateFile {
            dim: state.dim(),
            amplitudes: state.amplitudes.iter().map(|z| [z.re, z.im]).collect(),
            label: state.label,
        }
    }
}
