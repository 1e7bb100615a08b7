//! General multilinear products stored as sparse structural tensors.
//!
//! A product of arity `r` is the coefficient tensor `L[k][i_1]..[i_r]`;
//! applying it to factors `f_1..f_r` gives
//! `out_k = sum L[k][i_1..i_r] * f_1[i_1] * .. * f_r[i_r]`.
//! The same coefficients, laid out with columns in Kronecker order (first
//! factor slowest), form the universal map: the unique linear operator that
//! sends `f_1 (x) .. (x) f_r` to the product vector.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{c64, numerical_rank, ComplexMatrix, ComplexVector};
use crate::state::StateVector;

#[derive(Clone, Debug, PartialEq)]
pub struct ProductEntry {
    pub out: usize,
    pub inputs: Vec<usize>,
    pub coeff: Complex64,
}

impl ProductEntry {
    pub fn new(out: usize, inputs: Vec<usize>, coeff: Complex64) -> Self {
        Self { out, inputs, coeff }
    }
}

/// Builtin product families that have dedicated exact certificates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum ProductFamily {
    Tensor { dim_a: usize, dim_b: usize },
    Wedge { dim: usize },
    SymmetricPhoton { modes: usize },
    TrilinearGeometric { terms: usize },
    IntegerMultiplication { n_max: usize },
}

impl fmt::Display for ProductFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ProductFamily::Tensor { dim_a, dim_b } => write!(f, "tensor({dim_a},{dim_b})"),
            ProductFamily::Wedge { dim } => write!(f, "wedge({dim})"),
            ProductFamily::SymmetricPhoton { modes } => write!(f, "symmetric_photon({modes})"),
            ProductFamily::TrilinearGeometric { terms } => write!(f, "trilinear_geometric({terms})"),
            ProductFamily::IntegerMultiplication { n_max } => {
                write!(f, "integer_multiplication({n_max})")
            }
        }
    }
}

impl ProductFamily {
    pub fn build(self) -> Result<GeneralProduct> {
        match self {
            ProductFamily::Tensor { dim_a, dim_b } => tensor(dim_a, dim_b),
            ProductFamily::Wedge { dim } => wedge(dim),
            ProductFamily::SymmetricPhoton { modes } => symmetric_photon(modes),
            ProductFamily::TrilinearGeometric { terms } => trilinear_geometric(terms),
            ProductFamily::IntegerMultiplication { n_max } => integer_multiplication(n_max),
        }
    }

    /// Parses `NAME(arg,...)`, e.g. `wedge(2)` or `tensor(2,3)`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || Error::InvalidProduct(format!("malformed builtin `{spec}`"));
        let open = spec.find('(').ok_or_else(bad)?;
        let name = &spec[..open];
        let rest = spec[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        if name.is_empty() || !name.bytes().all(|b| b.is_ascii_lowercase() || b == b'_') {
            return Err(bad());
        }
        let args = rest
            .split(',')
            .map(|a| {
                let a = a.trim();
                if a.is_empty() || !a.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(bad());
                }
                a.parse::<usize>().map_err(|_| bad())
            })
            .collect::<Result<Vec<_>>>()?;
        let arity_err = |n: usize| {
            Error::InvalidProduct(format!("builtin `{name}` takes {n} argument(s), got {}", args.len()))
        };
        match name {
            "tensor" => match args[..] {
                [dim_a, dim_b] => Ok(ProductFamily::Tensor { dim_a, dim_b }),
                _ => Err(arity_err(2)),
            },
            "wedge" => match args[..] {
                [dim] => Ok(ProductFamily::Wedge { dim }),
                _ => Err(arity_err(1)),
            },
            "symmetric_photon" => match args[..] {
                [modes] => Ok(ProductFamily::SymmetricPhoton { modes }),
                _ => Err(arity_err(1)),
            },
            "trilinear_geometric" => match args[..] {
                [terms] => Ok(ProductFamily::TrilinearGeometric { terms }),
                _ => Err(arity_err(1)),
            },
            "integer_multiplication" => match args[..] {
                [n_max] => Ok(ProductFamily::IntegerMultiplication { n_max }),
                _ => Err(arity_err(1)),
            },
            _ => Err(Error::InvalidProduct(format!("unknown builtin product `{name}`"))),
        }
    }
}

/// An arity-`r` multilinear product; immutable once built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProductFile", into = "ProductFile")]
pub struct GeneralProduct {
    name: Option<String>,
    input_dims: Vec<usize>,
    output_dim: usize,
    // sorted by (out, inputs), keys unique
    entries: Vec<ProductEntry>,
    family: Option<ProductFamily>,
}

impl GeneralProduct {
    pub fn from_entries(
        arity: usize,
        input_dims: Vec<usize>,
        output_dim: usize,
        entries: Vec<ProductEntry>,
    ) -> Result<Self> {
        let mut p = Self::validated(arity, input_dims, output_dim, entries)?;
        p.family = recognize_family(&p);
        Ok(p)
    }

    fn validated(
        arity: usize,
        input_dims: Vec<usize>,
        output_dim: usize,
        mut entries: Vec<ProductEntry>,
    ) -> Result<Self> {
        if arity < 2 {
            return Err(Error::InvalidProduct(format!("arity must be >= 2, got {arity}")));
        }
        if input_dims.len() != arity {
            return Err(Error::InvalidProduct(format!(
                "arity {arity} but {} input dims",
                input_dims.len()
            )));
        }
        if output_dim == 0 || input_dims.contains(&0) {
            return Err(Error::InvalidProduct("dimensions must be positive".into()));
        }
        let mut seen = BTreeSet::new();
        for (n, e) in entries.iter().enumerate() {
            if e.out >= output_dim {
                return Err(Error::InvalidProduct(format!(
                    "entry {n}: out index {} >= output_dim {output_dim}",
                    e.out
                )));
            }
            if e.inputs.len() != arity {
                return Err(Error::InvalidProduct(format!(
                    "entry {n}: {} input indices for arity {arity}",
                    e.inputs.len()
                )));
            }
            for (slot, (&i, &d)) in e.inputs.iter().zip(&input_dims).enumerate() {
                if i >= d {
                    return Err(Error::InvalidProduct(format!(
                        "entry {n}: input index {i} in slot {slot} >= dim {d}"
                    )));
                }
            }
            if !(e.coeff.re.is_finite() && e.coeff.im.is_finite()) {
                return Err(Error::NonFinite("product coefficient"));
            }
            if !seen.insert((e.out, e.inputs.clone())) {
                return Err(Error::InvalidProduct(format!(
                    "entry {n}: duplicate key (out {}, in {:?})",
                    e.out, e.inputs
                )));
            }
        }
        if !entries.iter().any(|e| e.coeff != c64(0.0, 0.0)) {
            return Err(Error::InvalidProduct("product has no nonzero entry".into()));
        }
        entries.sort_by(|a, b| (a.out, &a.inputs).cmp(&(b.out, &b.inputs)));
        Ok(Self {
            name: None,
            input_dims,
            output_dim,
            entries,
            family: None,
        })
    }

    /// Product whose universal map is exactly `matrix` (columns in Kronecker order).
    pub fn from_universal_matrix(matrix: &ComplexMatrix, input_dims: Vec<usize>) -> Result<Self> {
        let domain: usize = input_dims.iter().product();
        if matrix.ncols() != domain {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} columns, input dims {:?} need {domain}",
                matrix.ncols(),
                input_dims
            )));
        }
        let mut entries = Vec::new();
        for col in 0..domain {
            let inputs = unflatten(col, &input_dims);
            for row in 0..matrix.nrows() {
                let z = matrix[(row, col)];
                if z != c64(0.0, 0.0) {
                    entries.push(ProductEntry::new(row, inputs.clone(), z));
                }
            }
        }
        Self::from_entries(input_dims.len(), input_dims, matrix.nrows(), entries)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn arity(&self) -> usize {
        self.input_dims.len()
    }

    pub fn input_dims(&self) -> &[usize] {
        &self.input_dims
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    /// Dimension of the tensor-product space the universal map acts on.
    pub fn domain_dim(&self) -> usize {
        self.input_dims.iter().product()
    }

    pub fn entries(&self) -> &[ProductEntry] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn family(&self) -> Option<ProductFamily> {
        self.family
    }

    fn check_factor_dims<'a>(&self, dims: impl ExactSizeIterator<Item = usize> + 'a) -> Result<()> {
        if dims.len() != self.arity() {
            return Err(Error::DimensionMismatch(format!(
                "product of arity {} given {} factors",
                self.arity(),
                dims.len()
            )));
        }
        for (slot, (d, &expected)) in dims.zip(&self.input_dims).enumerate() {
            if d != expected {
                return Err(Error::DimensionMismatch(format!(
                    "factor {slot} has dim {d}, product expects {expected}"
                )));
            }
        }
        Ok(())
    }

    pub fn apply(&self, factors: &[StateVector]) -> Result<StateVector> {
        self.check_factor_dims(factors.iter().map(StateVector::dim))?;
        let raw: Vec<&ComplexVector> = factors.iter().map(StateVector::amplitudes).collect();
        StateVector::from_vector(self.apply_unchecked(&raw))
    }

    pub fn apply_vectors(&self, factors: &[ComplexVector]) -> Result<ComplexVector> {
        self.check_factor_dims(factors.iter().map(|f| f.len()))?;
        let raw: Vec<&ComplexVector> = factors.iter().collect();
        Ok(self.apply_unchecked(&raw))
    }

    pub(crate) fn apply_unchecked(&self, factors: &[&ComplexVector]) -> ComplexVector {
        let mut out = ComplexVector::zeros(self.output_dim);
        for e in &self.entries {
            let mut term = e.coeff;
            for (f, &i) in factors.iter().zip(&e.inputs) {
                term *= f[i];
            }
            out[e.out] += term;
        }
        out
    }

    /// Linear map of slot `slot` with every other slot held at `factors`:
    /// column `j` is the product with `e_j` placed in that slot.
    pub fn slot_design_matrix(&self, slot: usize, factors: &[ComplexVector]) -> ComplexMatrix {
        let mut a = ComplexMatrix::zeros(self.output_dim, self.input_dims[slot]);
        for e in &self.entries {
            let mut term = e.coeff;
            for (t, (f, &i)) in factors.iter().zip(&e.inputs).enumerate() {
                if t != slot {
                    term *= f[i];
                }
            }
            a[(e.out, e.inputs[slot])] += term;
        }
        a
    }

    pub fn universal_map(&self) -> UniversalMap<'_> {
        let mut m = ComplexMatrix::zeros(self.output_dim, self.domain_dim());
        for e in &self.entries {
            m[(e.out, flatten(&e.inputs, &self.input_dims))] += e.coeff;
        }
        UniversalMap {
            matrix: m,
            product: self,
        }
    }

    /// Universal map restricted to its structurally nonzero columns.
    pub fn compressed_universal_map(&self) -> CompressedMap {
        let cols: BTreeSet<usize> = self
            .entries
            .iter()
            .filter(|e| e.coeff != c64(0.0, 0.0))
            .map(|e| flatten(&e.inputs, &self.input_dims))
            .collect();
        let columns: Vec<usize> = cols.into_iter().collect();
        let position: BTreeMap<usize, usize> =
            columns.iter().enumerate().map(|(pos, &c)| (c, pos)).collect();
        let mut m = ComplexMatrix::zeros(self.output_dim, columns.len());
        for e in &self.entries {
            if let Some(&pos) = position.get(&flatten(&e.inputs, &self.input_dims)) {
                m[(e.out, pos)] += e.coeff;
            }
        }
        CompressedMap {
            columns,
            domain_dim: self.domain_dim(),
            matrix: m,
        }
    }

    /// Numerical rank of the universal map.
    pub fn universal_rank(&self, rel_tol: f64) -> Result<usize> {
        numerical_rank(&self.compressed_universal_map().matrix, rel_tol)
    }

    pub fn is_injective(&self, rel_tol: f64) -> Result<bool> {
        if self.output_dim < self.domain_dim() {
            return Ok(false);
        }
        Ok(self.universal_rank(rel_tol)? == self.domain_dim())
    }

    /// Product `p'` with `p'(f_1..f_r) = p(T_1 f_1, .., T_r f_r)`.
    pub fn compose_with_factor_maps(&self, maps: &[ComplexMatrix]) -> Result<GeneralProduct> {
        if maps.len() != self.arity() {
            return Err(Error::DimensionMismatch(format!(
                "{} factor maps for a product of arity {}",
                maps.len(),
                self.arity()
            )));
        }
        for (slot, (t, &d)) in maps.iter().zip(&self.input_dims).enumerate() {
            if t.shape() != (d, d) {
                return Err(Error::DimensionMismatch(format!(
                    "factor map {slot} is {}x{}, expected {d}x{d}",
                    t.nrows(),
                    t.ncols()
                )));
            }
        }
        // nonzero (column, value) pairs of each row of each map
        let rows: Vec<Vec<Vec<(usize, Complex64)>>> = maps
            .iter()
            .map(|t| {
                (0..t.nrows())
                    .map(|i| {
                        (0..t.ncols())
                            .filter(|&j| t[(i, j)] != c64(0.0, 0.0))
                            .map(|j| (j, t[(i, j)]))
                            .collect()
                    })
                    .collect()
            })
            .collect();

        let mut acc: BTreeMap<(usize, Vec<usize>), Complex64> = BTreeMap::new();
        for e in &self.entries {
            let choices: Vec<&[(usize, Complex64)]> = e
                .inputs
                .iter()
                .enumerate()
                .map(|(slot, &i)| rows[slot][i].as_slice())
                .collect();
            if choices.iter().any(|c| c.is_empty()) {
                continue;
            }
            let mut cursor = vec![0usize; choices.len()];
            loop {
                let mut coeff = e.coeff;
                let mut js = Vec::with_capacity(cursor.len());
                for (c, &k) in choices.iter().zip(&cursor) {
                    let (j, t) = c[k];
                    coeff *= t;
                    js.push(j);
                }
                *acc.entry((e.out, js)).or_insert(c64(0.0, 0.0)) += coeff;
                if !advance(&mut cursor, &choices) {
                    break;
                }
            }
        }
        let entries: Vec<ProductEntry> = acc
            .into_iter()
            .filter(|(_, z)| *z != c64(0.0, 0.0))
            .map(|((out, inputs), coeff)| ProductEntry::new(out, inputs, coeff))
            .collect();
        if entries.is_empty() {
            return Err(Error::InvalidProduct(
                "factor maps annihilate every coefficient of the product".into(),
            ));
        }
        let p = GeneralProduct::from_entries(self.arity(), self.input_dims.clone(), self.output_dim, entries)?;
        Ok(match &self.name {
            Some(n) => p.with_name(format!("{n} with factor maps")),
            None => p,
        })
    }

    /// Merges contiguous runs of slots into single slots; `block_sizes`
    /// lists how many consecutive original slots each new slot covers.
    pub fn group_legs(&self, block_sizes: &[usize]) -> Result<GeneralProduct> {
        if block_sizes.contains(&0) {
            return Err(Error::InvalidPartition("empty block".into()));
        }
        if block_sizes.iter().sum::<usize>() != self.arity() {
            return Err(Error::InvalidPartition(format!(
                "blocks {block_sizes:?} do not cover {} slots",
                self.arity()
            )));
        }
        if block_sizes.len() < 2 {
            return Err(Error::InvalidPartition("need at least two blocks".into()));
        }
        let mut ranges = Vec::with_capacity(block_sizes.len());
        let mut start = 0;
        for &b in block_sizes {
            ranges.push(start..start + b);
            start += b;
        }
        let dims: Vec<usize> = ranges
            .iter()
            .map(|r| self.input_dims[r.clone()].iter().product())
            .collect();
        let entries = self
            .entries
            .iter()
            .map(|e| {
                let inputs = ranges
                    .iter()
                    .map(|r| flatten(&e.inputs[r.clone()], &self.input_dims[r.clone()]))
                    .collect();
                ProductEntry::new(e.out, inputs, e.coeff)
            })
            .collect();
        let p = GeneralProduct::from_entries(block_sizes.len(), dims, self.output_dim, entries)?;
        Ok(match &self.name {
            Some(n) => p.with_name(format!("{n} grouped {block_sizes:?}")),
            None => p,
        })
    }
}

fn advance(cursor: &mut [usize], choices: &[&[(usize, Complex64)]]) -> bool {
    for pos in (0..cursor.len()).rev() {
        cursor[pos] += 1;
        if cursor[pos] < choices[pos].len() {
            return true;
        }
        cursor[pos] = 0;
    }
    false
}

/// Kronecker (first index slowest) flattening of a multi-index.
pub fn flatten(indices: &[usize], dims: &[usize]) -> usize {
    indices.iter().zip(dims).fold(0, |acc, (&i, &d)| acc * d + i)
}

pub fn unflatten(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (slot, &d) in dims.iter().enumerate().rev() {
        out[slot] = flat % d;
        flat /= d;
    }
    out
}

/// Dense matrix of the universal map `L` with `L (f_1 (x) .. (x) f_r) = p(f_1, .., f_r)`.
#[derive(Clone, Debug)]
pub struct UniversalMap<'a> {
    matrix: ComplexMatrix,
    product: &'a GeneralProduct,
}

impl<'a> UniversalMap<'a> {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn product(&self) -> &'a GeneralProduct {
        self.product
    }
}

/// Universal map with its all-zero columns removed; `columns[j]` is the
/// Kronecker index of compressed column `j`.
#[derive(Clone, Debug)]
pub struct CompressedMap {
    pub columns: Vec<usize>,
    pub domain_dim: usize,
    pub matrix: ComplexMatrix,
}

impl CompressedMap {
    pub fn scatter(&self, compressed: &ComplexVector) -> ComplexVector {
        let mut x = ComplexVector::zeros(self.domain_dim);
        for (&col, &z) in self.columns.iter().zip(compressed.iter()) {
            x[col] = z;
        }
        x
    }
}

impl fmt::Display for GeneralProduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.name, self.family) {
            (Some(n), _) => write!(f, "{n}"),
            (None, Some(fam)) => write!(f, "{fam}"),
            (None, None) => write!(f, "product{:?}->{}", self.input_dims, self.output_dim),
        }
    }
}

fn builtin(family: ProductFamily, input_dims: Vec<usize>, output_dim: usize, entries: Vec<ProductEntry>) -> Result<GeneralProduct> {
    let mut p = GeneralProduct::validated(input_dims.len(), input_dims, output_dim, entries)?;
    p.family = Some(family);
    p.name = Some(family.to_string());
    Ok(p)
}

fn one() -> Complex64 {
    c64(1.0, 0.0)
}

fn require(cond: bool, what: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidSize(what()))
    }
}

/// `a (x) b` on `C^dim_a (x) C^dim_b`; the universal map is the identity.
pub fn tensor(dim_a: usize, dim_b: usize) -> Result<GeneralProduct> {
    require(dim_a >= 1 && dim_b >= 1, || format!("tensor({dim_a},{dim_b}): dims must be >= 1"))?;
    let mut entries = Vec::with_capacity(dim_a * dim_b);
    for i in 0..dim_a {
        for j in 0..dim_b {
            entries.push(ProductEntry::new(i * dim_b + j, vec![i, j], one()));
        }
    }
    builtin(ProductFamily::Tensor { dim_a, dim_b }, vec![dim_a, dim_b], dim_a * dim_b, entries)
}

/// Exterior product `a (x) b - b (x) a`, kept in the full `dim^2` space.
pub fn wedge(dim: usize) -> Result<GeneralProduct> {
    require(dim >= 2, || format!("wedge({dim}): dim must be >= 2"))?;
    let mut entries = Vec::new();
    for i in 0..dim {
        for j in 0..dim {
            if i != j {
                entries.push(ProductEntry::new(i * dim + j, vec![i, j], one()));
                entries.push(ProductEntry::new(j * dim + i, vec![i, j], -one()));
            }
        }
    }
    builtin(ProductFamily::Wedge { dim }, vec![dim, dim], dim * dim, entries)
}

/// Two single photons over `modes` modes, in the `modes x modes` matrix
/// picture: slot `(m, n)` holds `alpha_m beta_n + alpha_n beta_m`.
///
/// A Fock state `|1_m 1_n>` (m < n) corresponds to unit entries at `(m, n)`
/// and `(n, m)`; a doubly occupied mode `|2_m>` to the value 2 at `(m, m)`.
pub fn symmetric_photon(modes: usize) -> Result<GeneralProduct> {
    require(modes >= 2, || format!("symmetric_photon({modes}): modes must be >= 2"))?;
    let mut acc: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
    for m in 0..modes {
        for n in 0..modes {
            *acc.entry((m * modes + n, m, n)).or_default() += 1.0;
            *acc.entry((n * modes + m, m, n)).or_default() += 1.0;
        }
    }
    let entries = acc
        .into_iter()
        .map(|((out, m, n), c)| ProductEntry::new(out, vec![m, n], c64(c, 0.0)))
        .collect();
    builtin(ProductFamily::SymmetricPhoton { modes }, vec![modes, modes], modes * modes, entries)
}

/// Trilinear product truncated to `terms` components per factor:
/// slot 0 holds `sum_n a_n b_n c_n`, slot `n + 1` holds `a_n b_n c_n`.
pub fn trilinear_geometric(terms: usize) -> Result<GeneralProduct> {
    require(terms >= 1, || format!("trilinear_geometric({terms}): terms must be >= 1"))?;
    let mut entries = Vec::with_capacity(2 * terms);
    for n in 0..terms {
        entries.push(ProductEntry::new(0, vec![n, n, n], one()));
        entries.push(ProductEntry::new(n + 1, vec![n, n, n], one()));
    }
    builtin(
        ProductFamily::TrilinearGeometric { terms },
        vec![terms; 3],
        terms + 1,
        entries,
    )
}

/// `|m> o |n> = |m n>` on the basis `|2>, .., |n_max>` (index = label - 2);
/// products beyond `n_max` are dropped.
pub fn integer_multiplication(n_max: usize) -> Result<GeneralProduct> {
    require(n_max >= 4, || format!("integer_multiplication({n_max}): n_max must be >= 4"))?;
    let dim = n_max - 1;
    let mut entries = Vec::new();
    for m in 2..=n_max / 2 {
        for n in 2..=n_max / m {
            entries.push(ProductEntry::new(m * n - 2, vec![m - 2, n - 2], one()));
        }
    }
    builtin(ProductFamily::IntegerMultiplication { n_max }, vec![dim, dim], dim, entries)
}

/// Basis label of index `i` in the integer-multiplication product.
pub fn integer_label(index: usize) -> usize {
    index + 2
}

fn recognize_family(p: &GeneralProduct) -> Option<ProductFamily> {
    let dims = p.input_dims();
    let candidate = match *dims {
        [a, b] if p.output_dim == a * b && a == b => {
            // tensor, wedge and photon share this shape; try each
            for fam in [
                ProductFamily::Tensor { dim_a: a, dim_b: b },
                ProductFamily::Wedge { dim: a },
                ProductFamily::SymmetricPhoton { modes: a },
            ] {
                if fam.build().is_ok_and(|q| q.entries == p.entries) {
                    return Some(fam);
                }
            }
            return None;
        }
        [a, b] if p.output_dim == a * b => ProductFamily::Tensor { dim_a: a, dim_b: b },
        [a, b] if a == b && p.output_dim == a => ProductFamily::IntegerMultiplication { n_max: a + 1 },
        [a, b, c] if a == b && b == c && p.output_dim == a + 1 => {
            ProductFamily::TrilinearGeometric { terms: a }
        }
        _ => return None,
    };
    candidate
        .build()
        .ok()
        .filter(|q| q.entries == p.entries)
        .map(|_| candidate)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryFile {
    pub out: usize,
    #[serde(rename = "in")]
    pub inputs: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

/// On-disk product layout; indices are 0-based.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub arity: usize,
    pub input_dims: Vec<usize>,
    pub output_dim: usize,
    pub entries: Vec<EntryFile>,
}

impl TryFrom<ProductFile> for GeneralProduct {
    type Error = Error;

    fn try_from(file: ProductFile) -> Result<Self> {
        let entries = file
            .entries
            .into_iter()
            .map(|e| ProductEntry::new(e.out, e.inputs, c64(e.re, e.im)))
            .collect();
        let p = GeneralProduct::from_entries(file.arity, file.input_dims, file.output_dim, entries)?;
        Ok(match file.name {
            Some(n) => p.with_name(n),
            None => p,
        })
    }
}

impl From<GeneralProduct> for ProductFile {
    fn from(p: GeneralProduct) -> Self {
        ProductFile {
            name: p.name,
            arity: p.input_dims.len(),
            input_dims: p.input_dims,
            output_dim: p.output_dim,
            entries: p
                .entries
                .into_iter()
                .map(|e| EntryFile {
                    out: e.out,
                    inputs: e.inputs,
                    re: e.coeff.re,
                    im: e.coeff.im,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(dim: usize, i: usize) -> StateVector {
        StateVector::basis(dim, i).unwrap()
    }

    fn real_state(v: &[f64]) -> StateVector {
        StateVector::from_real(v).unwrap()
    }

    #[test]
    fn tensor_follows_kronecker_convention() {
        let p = tensor(2, 2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let out = p.apply(&[basis(2, i), basis(2, j)]).unwrap();
                assert_eq!(out, basis(4, 2 * i + j));
            }
        }
        assert_eq!(*p.universal_map().matrix(), ComplexMatrix::identity(4, 4));
    }

    #[test]
    fn wedge_of_basis_pair() {
        let p = wedge(2).unwrap();
        let out = p.apply(&[basis(2, 0), basis(2, 1)]).unwrap();
        assert_eq!(out, real_state(&[0.0, 1.0, -1.0, 0.0]));
    }

    #[test]
    fn wedge_universal_map_is_identity_minus_swap() {
        let p = wedge(2).unwrap();
        let mut expected = ComplexMatrix::identity(4, 4);
        // SWAP exchanges |01> and |10>, fixes |00>, |11>
        expected[(0, 0)] = c64(0.0, 0.0);
        expected[(3, 3)] = c64(0.0, 0.0);
        expected[(1, 2)] = -one();
        expected[(2, 1)] = -one();
        assert_eq!(*p.universal_map().matrix(), expected);
    }

    #[test]
    fn integer_product_multiplies_labels() {
        let p = integer_multiplication(12).unwrap();
        let two = basis(11, 0);
        let three = basis(11, 1);
        assert_eq!(p.apply(&[two, three]).unwrap(), basis(11, 6 - 2));

        let uniform = real_state(&[1.0; 11]);
        let out = p.apply(&[uniform.clone(), uniform]).unwrap();
        assert_eq!(out[12 - 2], c64(4.0, 0.0));
    }

    #[test]
    fn zero_factor_gives_zero() {
        for p in [tensor(2, 3).unwrap(), wedge(3).unwrap(), symmetric_photon(3).unwrap()] {
            let b = real_state(&vec![1.0; p.input_dims()[1]]);
            let z = StateVector::zeros(p.input_dims()[0]).unwrap();
            assert!(p.apply(&[z, b]).unwrap().is_zero());
        }
    }

    #[test]
    fn photon_basis_pair_is_symmetric_matrix() {
        let p = symmetric_photon(4).unwrap();
        // modes 1 and 3 in 1-based labels
        let out = p.apply(&[basis(4, 0), basis(4, 2)]).unwrap();
        let mut expected = vec![0.0; 16];
        expected[2] = 1.0;
        expected[2 * 4] = 1.0;
        assert_eq!(out, real_state(&expected));
    }

    #[test]
    fn trilinear_expansion() {
        let p = trilinear_geometric(2).unwrap();
        let (a, b, c) = ([2.0, 3.0], [5.0, 7.0], [11.0, 13.0]);
        let out = p
            .apply(&[real_state(&a), real_state(&b), real_state(&c)])
            .unwrap();
        let p0 = a[0] * b[0] * c[0];
        let p1 = a[1] * b[1] * c[1];
        assert_eq!(out, real_state(&[p0 + p1, p0, p1]));
    }

    #[test]
    fn validation_errors() {
        let dup = vec![
            ProductEntry::new(0, vec![0, 0], one()),
            ProductEntry::new(0, vec![0, 0], one()),
        ];
        assert!(matches!(
            GeneralProduct::from_entries(2, vec![1, 1], 1, dup),
            Err(Error::InvalidProduct(_))
        ));
        let oob = vec![ProductEntry::new(0, vec![0, 2], one())];
        assert!(GeneralProduct::from_entries(2, vec![2, 2], 1, oob).is_err());
        assert!(GeneralProduct::from_entries(2, vec![2, 2], 1, vec![]).is_err());
        let zero = vec![ProductEntry::new(0, vec![0, 0], c64(0.0, 0.0))];
        assert!(GeneralProduct::from_entries(2, vec![1, 1], 1, zero).is_err());
        assert!(GeneralProduct::from_entries(1, vec![1], 1, vec![ProductEntry::new(0, vec![0], one())]).is_err());

        let p = tensor(2, 2).unwrap();
        assert!(p.apply(&[basis(2, 0)]).is_err());
        assert!(p.apply(&[basis(2, 0), basis(3, 0)]).is_err());
    }

    #[test]
    fn builtin_size_limits() {
        assert!(wedge(1).is_err());
        assert!(symmetric_photon(1).is_err());
        assert!(trilinear_geometric(0).is_err());
        assert!(integer_multiplication(3).is_err());
        assert!(tensor(0, 2).is_err());
    }

    #[test]
    fn compose_examples() {
        let p = wedge(2).unwrap();
        let id = ComplexMatrix::identity(2, 2);
        let same = p.compose_with_factor_maps(&[id.clone(), id]).unwrap();
        assert_eq!(same.entries(), p.entries());

        let t_a = ComplexMatrix::from_row_slice(2, 2, &[one(), c64(2.0, 0.0), c64(0.0, 1.0), -one()]);
        let t_b = ComplexMatrix::from_row_slice(2, 2, &[c64(0.5, 0.0), one(), one(), c64(3.0, -1.0)]);
        let q = tensor(2, 2).unwrap().compose_with_factor_maps(&[t_a.clone(), t_b.clone()]).unwrap();
        assert_eq!(*q.universal_map().matrix(), t_a.kronecker(&t_b));

        // (T e0) ^ (T e1) = det(T) (e0 (x) e1 - e1 (x) e0) in two dimensions
        let h = ComplexMatrix::from_row_slice(2, 2, &[one(), one(), one(), -one()]);
        let ph = p.compose_with_factor_maps(&[h.clone(), h]).unwrap();
        let out = ph.apply(&[basis(2, 0), basis(2, 1)]).unwrap();
        assert_eq!(out, real_state(&[0.0, -2.0, 2.0, 0.0]));

        assert!(p.compose_with_factor_maps(&[ComplexMatrix::identity(3, 3), ComplexMatrix::identity(2, 2)]).is_err());
        let zero = ComplexMatrix::zeros(2, 2);
        assert!(p.compose_with_factor_maps(&[zero.clone(), zero]).is_err());
    }

    #[test]
    fn group_legs_examples() {
        let p = trilinear_geometric(3).unwrap();
        assert!(p.group_legs(&[1, 1, 1]).unwrap().entries() == p.entries());
        let g = p.group_legs(&[2, 1]).unwrap();
        assert_eq!(g.input_dims(), &[9, 3]);
        assert_eq!(g.arity(), 2);
        assert!(p.group_legs(&[2, 2]).is_err());
        assert!(p.group_legs(&[3]).is_err());
        assert!(p.group_legs(&[0, 3]).is_err());
    }

    #[test]
    fn family_recognition_and_builtin_syntax() {
        let fam = ProductFamily::parse("symmetric_photon(4)").unwrap();
        let p = fam.build().unwrap();
        assert_eq!(p.family(), Some(fam));
        let json = serde_json::to_string(&p).unwrap();
        let back: GeneralProduct = serde_json::from_str(&json).unwrap();
        assert_eq!(back.family(), Some(fam));
        assert_eq!(back, p);

        assert_eq!(ProductFamily::parse("tensor(2,3)").unwrap(), ProductFamily::Tensor { dim_a: 2, dim_b: 3 });
        for bad in ["tensor(2)", "Wedge(2)", "wedge(2", "wedge()", "wedge(-1)", "frob(2)", "wedge(2,)"] {
            assert!(ProductFamily::parse(bad).is_err(), "{bad}");
        }
        let tri = trilinear_geometric(3).unwrap().compose_with_factor_maps(&[
            ComplexMatrix::identity(3, 3).scale(2.0),
            ComplexMatrix::identity(3, 3),
            ComplexMatrix::identity(3, 3),
        ]).unwrap();
        assert_eq!(tri.family(), None);
    }

    #[test]
    fn product_json_schema() {
        let text = r#"{"name":"w","arity":2,"input_dims":[2,2],"output_dim":4,
            "entries":[{"out":1,"in":[0,1],"re":1.0,"im":0.0},{"out":2,"in":[0,1],"re":-1.0,"im":0.0},
                       {"out":2,"in":[1,0],"re":1.0,"im":0.0},{"out":1,"in":[1,0],"re":-1.0,"im":0.0}]}"#;
        let p: GeneralProduct = serde_json::from_str(text).unwrap();
        assert_eq!(p.family(), Some(ProductFamily::Wedge { dim: 2 }));
        assert_eq!(p.name(), Some("w"));
        let bad = text.replace(r#""out":1,"in":[0,1]"#, r#""out":9,"in":[0,1]"#);
        assert!(serde_json::from_str::<GeneralProduct>(&bad).is_err());
    }

    #[test]
    fn injectivity() {
        assert!(tensor(2, 3).unwrap().is_injective(1e-10).unwrap());
        assert!(!wedge(2).unwrap().is_injective(1e-10).unwrap());
        assert_eq!(wedge(2).unwrap().universal_rank(1e-10).unwrap(), 1);
        assert!(!integer_multiplication(10).unwrap().is_injective(1e-10).unwrap());
    }

    #[test]
    fn flatten_roundtrip() {
        let dims = [3, 2, 4];
        for flat in 0..24 {
            assert_eq!(flatten(&unflatten(flat, &dims), &dims), flat);
        }
    }
}
