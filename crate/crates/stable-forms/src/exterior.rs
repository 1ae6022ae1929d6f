//! Dense exterior algebra over oriented ℝⁿ, 2 ≤ n ≤ 8.
//!
//! Basis p-forms are labelled by strictly increasing index subsets of
//! {1..n}, enumerated in lexicographic order of the sorted tuple. Signs are
//! computed on the fly by counting crossings when merging two sorted index
//! lists; at these sizes (C(8,4) = 70 coefficients at most) nothing is worth
//! precomputing beyond the subset tables themselves.

use crate::error::FormError;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

pub const MAX_DIM: usize = 8;

/// Binomial coefficient C(n, k) for the tiny range used here.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut num = 1usize;
    for i in 0..k {
        num = num * (n - i) / (i + 1);
    }
    num
}

/// All strictly increasing p-subsets of {1..n}, lexicographic.
///
/// The tables are built once per (n, p) and shared; the slice of each entry
/// is the sorted tuple of 1-based indices.
pub fn subsets(n: usize, p: usize) -> &'static [Vec<u8>] {
    static TABLES: OnceLock<Vec<Vec<Vec<Vec<u8>>>>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| {
        let mut all = Vec::with_capacity(MAX_DIM + 1);
        for n in 0..=MAX_DIM {
            let mut per_p = Vec::with_capacity(n + 1);
            for p in 0..=n {
                let mut out: Vec<Vec<u8>> = Vec::with_capacity(binomial(n, p));
                let mut cur: Vec<u8> = Vec::with_capacity(p);
                gen_subsets(n as u8, p, 1, &mut cur, &mut out);
                per_p.push(out);
            }
            all.push(per_p);
        }
        all
    });
    &tables[n][p]
}

fn gen_subsets(n: u8, p: usize, start: u8, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if cur.len() == p {
        out.push(cur.clone());
        return;
    }
    for i in start..=n {
        cur.push(i);
        gen_subsets(n, p, i + 1, cur, out);
        cur.pop();
    }
}

/// Lexicographic rank of a sorted index subset among the p-subsets of {1..n}.
pub fn rank(n: usize, indices: &[u8]) -> usize {
    let p = indices.len();
    let mut r = 0usize;
    let mut prev = 0u8;
    for (pos, &i) in indices.iter().enumerate() {
        for skipped in (prev + 1)..i {
            r += binomial(n - skipped as usize, p - pos - 1);
        }
        prev = i;
    }
    r
}

/// Sign of merging two disjoint sorted index lists into one sorted list:
/// (−1)^{#crossings}. Returns 0 if the lists intersect.
pub fn merge_sign(a: &[u8], b: &[u8]) -> i32 {
    let mut inversions = 0usize;
    for &x in a {
        for &y in b {
            if x == y {
                return 0;
            }
            if x > y {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// A strictly increasing index subset of {1..n} encoded as a bitmask
/// (bit i−1 set ⟺ index i present).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    bits: u8,
}

impl MultiIndex {
    pub fn from_indices(indices: &[u8]) -> Result<Self, FormError> {
        let mut bits = 0u8;
        for &i in indices {
            if i == 0 || i as usize > MAX_DIM {
                return Err(FormError::InvalidLiteral(format!("index {i} out of 1..=8")));
            }
            let bit = 1u8 << (i - 1);
            if bits & bit != 0 {
                return Err(FormError::InvalidLiteral(format!("repeated index {i}")));
            }
            bits |= bit;
        }
        Ok(Self { bits })
    }

    pub fn degree(self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn indices(self) -> Vec<u8> {
        (1..=MAX_DIM as u8).filter(|i| self.bits & (1 << (i - 1)) != 0).collect()
    }

    pub fn bits(self) -> u8 {
        self.bits
    }

    /// Complement within {1..n}.
    pub fn complement(self, n: usize) -> Self {
        let full = if n == 8 { 0xFF } else { (1u8 << n) - 1 };
        Self { bits: full & !self.bits }
    }
}

/// Orientation of ℝⁿ relative to the standard basis e₁∧…∧eₙ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Orientation {
    #[default]
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }
}

/// A degree-p alternating tensor on ℝⁿ with dense coefficients over the
/// lexicographically ordered p-subsets of {1..n}.
#[derive(Debug, Clone, PartialEq)]
pub struct Form {
    dim: usize,
    degree: usize,
    coeffs: Vec<f64>,
}

impl Form {
    pub fn zero(dim: usize, degree: usize) -> Result<Self, FormError> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(FormError::UnsupportedDimension(dim));
        }
        if degree > dim {
            return Err(FormError::DegreeOutOfRange { dim, degree });
        }
        Ok(Self { dim, degree, coeffs: vec![0.0; binomial(dim, degree)] })
    }

    /// Basis term val·e_{i₁}∧…∧e_{iₚ}; indices need not be sorted, the
    /// permutation sign is absorbed into the coefficient.
    pub fn term(dim: usize, indices: &[u8], val: f64) -> Result<Self, FormError> {
        let mut f = Self::zero(dim, indices.len())?;
        f.add_term(indices, val)?;
        Ok(f)
    }

    /// Add val·e_{i₁}∧…∧e_{iₚ} in place (indices in any order, distinct).
    pub fn add_term(&mut self, indices: &[u8], val: f64) -> Result<(), FormError> {
        if indices.len() != self.degree {
            return Err(FormError::DegreeMismatch { expected: self.degree, got: indices.len() });
        }
        for &i in indices {
            if i == 0 || i as usize > self.dim {
                return Err(FormError::InvalidLiteral(format!(
                    "index {i} out of 1..={}",
                    self.dim
                )));
            }
        }
        let mut sorted: Vec<u8> = indices.to_vec();
        // parity of the sort by counting pairwise inversions (p ≤ 8)
        let mut inv = 0usize;
        for i in 0..sorted.len() {
            for j in (i + 1)..sorted.len() {
                if sorted[i] == sorted[j] {
                    return Err(FormError::InvalidLiteral(format!("repeated index {}", sorted[i])));
                }
                if sorted[i] > sorted[j] {
                    inv += 1;
                }
            }
        }
        sorted.sort_unstable();
        let sign = if inv % 2 == 0 { 1.0 } else { -1.0 };
        let r = rank(self.dim, &sorted);
        self.coeffs[r] += sign * val;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, indices: &[u8]) -> f64 {
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        self.coeffs[rank(self.dim, &sorted)]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn norm_inf(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Euclidean coefficient norm squared (equals ‖·‖²_g for g = Id).
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// Euclidean coefficient norm.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, k: f64) -> Self {
        Self { dim: self.dim, degree: self.degree, coeffs: self.coeffs.iter().map(|c| c * k).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self, FormError> {
        self.check_same_shape(other)?;
        Ok(Self {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FormError> {
        Ok(self.add(&other.scale(-1.0))?)
    }

    fn check_same_shape(&self, other: &Self) -> Result<(), FormError> {
        if self.dim != other.dim {
            return Err(FormError::DimensionMismatch(self.dim, other.dim));
        }
        if self.degree != other.degree {
            return Err(FormError::DegreeMismatch { expected: self.degree, got: other.degree });
        }
        Ok(())
    }

    /// Exterior product. Bilinear, associative, graded-commutative.
    pub fn wedge(&self, other: &Self) -> Result<Self, FormError> {
        if self.dim != other.dim {
            return Err(FormError::DimensionMismatch(self.dim, other.dim));
        }
        let p = self.degree + other.degree;
        if p > self.dim {
            return Err(FormError::DegreeOutOfRange { dim: self.dim, degree: p });
        }
        let mut out = Self::zero(self.dim, p)?;
        let sa = subsets(self.dim, self.degree);
        let sb = subsets(self.dim, other.degree);
        for (i, a) in sa.iter().enumerate() {
            let ca = self.coeffs[i];
            if ca == 0.0 {
                continue;
            }
            for (j, b) in sb.iter().enumerate() {
                let cb = other.coeffs[j];
                if cb == 0.0 {
                    continue;
                }
                let sg = merge_sign(a, b);
                if sg != 0 {
                    let mut merged: Vec<u8> = a.iter().chain(b.iter()).copied().collect();
                    merged.sort_unstable();
                    out.coeffs[rank(self.dim, &merged)] += sg as f64 * ca * cb;
                }
            }
        }
        Ok(out)
    }

    /// Interior product ι(v): an antiderivation dropping the degree by one.
    pub fn contract(&self, v: &[f64]) -> Result<Self, FormError> {
        if v.len() != self.dim {
            return Err(FormError::DimensionMismatch(self.dim, v.len()));
        }
        if self.degree == 0 {
            return Err(FormError::ContractDegreeZero);
        }
        let mut out = Self::zero(self.dim, self.degree - 1)?;
        for (i, a) in subsets(self.dim, self.degree).iter().enumerate() {
            let c = self.coeffs[i];
            if c == 0.0 {
                continue;
            }
            for (pos, &idx) in a.iter().enumerate() {
                let vi = v[idx as usize - 1];
                if vi == 0.0 {
                    continue;
                }
                let rest: Vec<u8> =
                    a.iter().enumerate().filter(|&(q, _)| q != pos).map(|(_, &x)| x).collect();
                let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
                out.coeffs[rank(self.dim, &rest)] += sign * vi * c;
            }
        }
        Ok(out)
    }

    /// Hodge star with respect to an SPD metric g and an orientation.
    ///
    /// (∗a)_{I^c} = ε(I, I^c) ⟨e_I, a⟩_g √(det g) · orient, where
    /// ⟨e_I, e_K⟩_g = det(g⁻¹[I, K]).
    pub fn hodge_star(&self, g: &DMatrix<f64>, orient: Orientation) -> Result<Self, FormError> {
        let n = self.dim;
        if g.nrows() != n || g.ncols() != n {
            return Err(FormError::DimensionMismatch(n, g.nrows()));
        }
        let sym_err = (g - g.transpose()).abs().max();
        let chol = nalgebra::Cholesky::new(g.clone());
        if sym_err > 1e-10 * (1.0 + g.abs().max()) || chol.is_none() {
            return Err(FormError::MetricNotSpd);
        }
        let gi = chol.expect("checked above").inverse();
        let sqrt_det = g.determinant().sqrt();
        let p = self.degree;
        let mut out = Self::zero(n, n - p)?;
        let sp = subsets(n, p);
        for i_set in sp {
            // ⟨e_I, a⟩_g
            let mut val = 0.0;
            for (k, k_set) in sp.iter().enumerate() {
                let c = self.coeffs[k];
                if c == 0.0 {
                    continue;
                }
                val += c * minor(&gi, i_set, k_set);
            }
            if val == 0.0 {
                continue;
            }
            let ic = complement(n, i_set);
            let eps = merge_sign(i_set, &ic) as f64;
            out.coeffs[rank(n, &ic)] += eps * val * sqrt_det * orient.sign();
        }
        Ok(out)
    }

    /// Coefficient of a∧b on e₁∧…∧eₙ, for complementary degrees.
    pub fn top_pair(&self, other: &Self) -> Result<f64, FormError> {
        if self.dim != other.dim {
            return Err(FormError::DimensionMismatch(self.dim, other.dim));
        }
        if self.degree + other.degree != self.dim {
            return Err(FormError::DegreeMismatch {
                expected: self.dim - self.degree,
                got: other.degree,
            });
        }
        Ok(self.wedge(other)?.coeffs[0])
    }

    /// Pullback A*ρ where A acts on vectors: (A*ρ)(X₁,…) = ρ(AX₁,…).
    pub fn pullback(&self, a: &DMatrix<f64>) -> Result<Self, FormError> {
        let n = self.dim;
        if a.nrows() != n || a.ncols() != n {
            return Err(FormError::DimensionMismatch(n, a.nrows()));
        }
        let p = self.degree;
        let mut out = Self::zero(n, p)?;
        let sp = subsets(n, p);
        for (j, j_set) in sp.iter().enumerate() {
            let mut val = 0.0;
            for (i, i_set) in sp.iter().enumerate() {
                let c = self.coeffs[i];
                if c == 0.0 {
                    continue;
                }
                val += c * minor(a, i_set, j_set);
            }
            out.coeffs[j] = val;
        }
        Ok(out)
    }
}

fn complement(n: usize, indices: &[u8]) -> Vec<u8> {
    (1..=n as u8).filter(|i| !indices.contains(i)).collect()
}

/// det(m[rows, cols]) for tiny index sets, by nalgebra on the extracted block.
fn minor(m: &DMatrix<f64>, rows: &[u8], cols: &[u8]) -> f64 {
    let k = rows.len();
    match k {
        0 => 1.0,
        1 => m[(rows[0] as usize - 1, cols[0] as usize - 1)],
        _ => {
            let block = DMatrix::from_fn(k, k, |r, c| {
                m[(rows[r] as usize - 1, cols[c] as usize - 1)]
            });
            block.determinant()
        }
    }
}

/// A form (or multivector) tensored with (ΛⁿV*)^w; `contravariant` flags the
/// multivector role, where the coefficient slots are indexed the same way
/// but transform with the inverse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedForm {
    pub base: Form,
    pub weight: i32,
    pub contravariant: bool,
}

impl WeightedForm {
    pub fn covariant(base: Form, weight: i32) -> Self {
        Self { base, weight, contravariant: false }
    }

    pub fn multivector(base: Form, weight: i32) -> Self {
        Self { base, weight, contravariant: true }
    }

    pub fn wedge(&self, other: &Self) -> Result<Self, FormError> {
        if self.contravariant != other.contravariant {
            return Err(FormError::InvalidLiteral(
                "cannot wedge covariant with contravariant".into(),
            ));
        }
        Ok(Self {
            base: self.base.wedge(&other.base)?,
            weight: self.weight + other.weight,
            contravariant: self.contravariant,
        })
    }
}

/// The canonical isomorphism ΛᵖV* ≅ Λ^{n−p}V ⊗ ΛⁿV*: σ_J = ε(J, J^c) ρ_{J^c}.
///
/// The result is a multivector of degree n−p with weight +1.
pub fn to_multivector(rho: &Form) -> WeightedForm {
    let n = rho.dim();
    let q = n - rho.degree();
    let mut out = Form::zero(n, q).expect("degree within range");
    for (j, j_set) in subsets(n, q).iter().enumerate() {
        let jc = complement(n, j_set);
        let eps = merge_sign(j_set, &jc) as f64;
        out.coeffs[j] = eps * rho.coeffs[rank(n, &jc)];
    }
    WeightedForm::multivector(out, 1)
}

/// Interior product of a multivector with a covector e^i (1-based), same
/// combinatorial rule as [`Form::contract`].
pub fn contract_multivector(mv: &WeightedForm, covector_index: u8) -> WeightedForm {
    let mut v = vec![0.0; mv.base.dim()];
    v[covector_index as usize - 1] = 1.0;
    WeightedForm {
        base: mv.base.contract(&v).expect("degree ≥ 1"),
        weight: mv.weight,
        contravariant: true,
    }
}

/// A linear map V → V* ⊗ (ΛⁿV*)^w (or the variants below) as an n×n matrix
/// in the standard trivialization together with its density weight.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMap {
    pub dim: usize,
    pub matrix: DMatrix<f64>,
    pub weight: i32,
    pub variance: Variance,
}

/// Index variance of a [`DensityMap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variance {
    /// V → V ⊗ ΛⁿV* (e.g. the 6d K map).
    EndoDensity,
    /// V → V* ⊗ (ΛⁿV*)^w (e.g. the 7d/8d bilinear forms).
    Bilinear,
    /// V* → V ⊗ (ΛⁿV*)^w (contravariant partners of the above).
    Cobilinear,
}

impl DensityMap {
    /// Weight carried by det(matrix): n·w plus one per V*-valued output leg.
    pub fn det_weight(&self) -> i32 {
        let variance_correction = match self.variance {
            Variance::EndoDensity => 0,
            Variance::Bilinear => 1,
            Variance::Cobilinear => -1,
        };
        self.dim as i32 * self.weight + variance_correction
    }
}

// ---------------------------------------------------------------------------
// JSON form literal
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct TermLiteral {
    indices: Vec<u8>,
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct FormLiteral {
    dim: usize,
    degree: usize,
    terms: Vec<TermLiteral>,
}

impl Form {
    /// Parse the JSON literal {"dim", "degree", "terms": [{"indices", "value"}]}.
    ///
    /// Omitted terms are zero; duplicate index sets and non-increasing index
    /// lists are input errors.
    pub fn from_json(s: &str) -> Result<Self, FormError> {
        let lit: FormLiteral =
            serde_json::from_str(s).map_err(|e| FormError::InvalidLiteral(e.to_string()))?;
        let mut f = Self::zero(lit.dim, lit.degree)?;
        let mut seen = std::collections::HashSet::new();
        for t in &lit.terms {
            if t.indices.len() != lit.degree {
                return Err(FormError::DegreeMismatch { expected: lit.degree, got: t.indices.len() });
            }
            if !t.indices.windows(2).all(|w| w[0] < w[1]) {
                return Err(FormError::InvalidLiteral(format!(
                    "indices {:?} not strictly increasing",
                    t.indices
                )));
            }
            if !seen.insert(t.indices.clone()) {
                return Err(FormError::InvalidLiteral(format!(
                    "duplicate index set {:?}",
                    t.indices
                )));
            }
            f.add_term(&t.indices, t.value)?;
        }
        Ok(f)
    }

    pub fn to_json(&self) -> String {
        let terms: Vec<TermLiteral> = subsets(self.dim, self.degree)
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, &c)| c != 0.0)
            .map(|(s, &c)| TermLiteral { indices: s.clone(), value: c })
            .collect();
        serde_json::to_string(&FormLiteral { dim: self.dim, degree: self.degree, terms })
            .expect("serialization of plain data cannot fail")
    }
}
