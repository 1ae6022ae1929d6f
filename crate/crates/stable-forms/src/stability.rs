//! Volume functionals, stability classification, duals and induced metrics.
//!
//! A p-form ρ on ℝⁿ is *stable* when its GL(n)-orbit is open. On each open
//! orbit there is a volume density φ(ρ), homogeneous of degree n/p, built
//! from one of five case constructions:
//!
//! * p = 2 (symplectic): φ = |ωᵐ/m!|;
//! * p = n−2, n = 2m: pass to the bivector σ ∈ Λ²V ⊗ ΛⁿV* and take
//!   φ = |det σ|^{1/(2m−2)};
//! * (6,3): K(v) = ι(v)ρ∧ρ ∈ V ⊗ Λ⁶V*, φ = √(|tr K²|/6);
//! * (7,3): B(v,w) = ι(v)ρ∧ι(w)ρ∧ρ ∈ Λ⁷V*, φ = 3·(|det B|/6⁷)^{1/9};
//! * (7,4): the same construction on the multivector image of σ;
//! * (8,3): d(v,w) = ι(v)ρ∧ι(w)ρ∧ρ ∈ V ⊗ Λ⁸V*, G = contraction of d⊗d,
//!   φ = 3·(|det G|/90⁸)^{1/18}; (8,5) is the contravariant mirror.
//!
//! Scale normalizations are fixed so that the 6d/7d normal forms satisfy
//! the chain φ(σ) = ⅙ω³ = ¼ρ̂∧ρ = ½φ(ρ) and give the identity metric, and
//! so that the su(3) structure 3-form on ℝ⁸ has metric Id₈.
//!
//! The dual ρ̂ is defined by Dφ(ρ̇) = ρ̂∧ρ̇ and satisfies the Euler identity
//! ρ̂∧ρ = (n/p)φ·e₁…ₙ; all closed-form duals here are normalized to be
//! Euler-positive for the standard orientation.

use crate::error::{FormError, StabilityError};
use crate::exterior::{
    merge_sign, to_multivector, DensityMap, Form, Orientation, Variance,
};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Tolerances used by this module. Relative thresholds are scaled by the
/// appropriate homogeneity power of the input's coefficient 2-norm.
pub mod tol {
    /// A form counts as non-stable when φ falls below this times ‖ρ‖^{n/p}:
    /// the det-root constructions lose meaning near the orbit boundary.
    pub const STABILITY_BOUNDARY_REL: f64 = 1e-12;
    /// Finite-difference step is FD_STEP_SCALE·(1 + ‖ρ‖∞); chosen near the
    /// optimum ε^(1/5) for the fourth-order central stencil so that
    /// truncation (∝h⁴) and roundoff (∝ε/h) balance around 1e−12.
    pub const FD_STEP_SCALE: f64 = 1e-3;
}

/// Orbit classification of a form under GL(n).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityClass {
    /// Nondegenerate 2-form or its (n−2)-form partner.
    Symplectic,
    /// 6d 3-form with tr K² < 0; stabilizer SL(3,ℂ).
    #[serde(rename = "SL3C")]
    Sl3c,
    /// 7d 3- or 4-form with definite induced bilinear form.
    G2,
    /// 8d 3- or 5-form with definite induced bilinear form.
    #[serde(rename = "PSU3")]
    Psu3,
    /// Closed orbit boundary: φ vanishes.
    NotStable,
    /// Open orbit of a noncompact real form (e.g. SL(3,ℝ)×SL(3,ℝ), split
    /// G₂): stable, but no Riemannian metric.
    StableOtherRealForm,
}

impl std::fmt::Display for StabilityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            StabilityClass::Symplectic => "Symplectic",
            StabilityClass::Sl3c => "SL3C",
            StabilityClass::G2 => "G2",
            StabilityClass::Psu3 => "PSU3",
            StabilityClass::NotStable => "NotStable",
            StabilityClass::StableOtherRealForm => "StableOtherRealForm",
        };
        f.write_str(s)
    }
}

/// Volume value and classification; phi > 0 exactly when the class is not
/// [`StabilityClass::NotStable`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeResult {
    pub phi: f64,
    pub class: StabilityClass,
}

/// An almost complex structure on ℝ⁶, I² = −Id.
#[derive(Debug, Clone, PartialEq)]
pub struct AlmostComplexStructure {
    pub matrix: DMatrix<f64>,
}

// ---------------------------------------------------------------------------
// Case dispatch
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CaseKind {
    /// p = 2, n = 2m.
    Symplectic { m: usize },
    /// p = n−2, n = 2m ≥ 6 (n = 4 routes to Symplectic).
    Bivector { m: usize },
    SixThree,
    SevenThree,
    SevenFour,
    EightThree,
    EightFive,
}

fn case_of(n: usize, p: usize) -> Result<CaseKind, StabilityError> {
    match (n, p) {
        (n, 2) if n % 2 == 0 && n >= 4 => Ok(CaseKind::Symplectic { m: n / 2 }),
        (n, p) if n % 2 == 0 && n >= 6 && p == n - 2 => Ok(CaseKind::Bivector { m: n / 2 }),
        (6, 3) => Ok(CaseKind::SixThree),
        (7, 3) => Ok(CaseKind::SevenThree),
        (7, 4) => Ok(CaseKind::SevenFour),
        (8, 3) => Ok(CaseKind::EightThree),
        (8, 5) => Ok(CaseKind::EightFive),
        _ => Err(StabilityError::UnsupportedSignature(n, p)),
    }
}

/// Homogeneity degree n/p of φ for this signature.
fn homogeneity(rho: &Form) -> f64 {
    rho.dim() as f64 / rho.degree() as f64
}

// ---------------------------------------------------------------------------
// Shared tensor constructions
// ---------------------------------------------------------------------------

/// Trivialize Λ^{n−1}V* ≅ V ⊗ ΛⁿV* over the standard basis:
/// w_k = ε({k}, {k}ᶜ)·μ_{{k}ᶜ}.
fn vectorize(mu: &Form) -> Vec<f64> {
    let n = mu.dim();
    debug_assert_eq!(mu.degree(), n - 1);
    (1..=n as u8)
        .map(|k| {
            let comp: Vec<u8> = (1..=n as u8).filter(|&i| i != k).collect();
            merge_sign(&[k], &comp) as f64 * mu.coeff(&comp)
        })
        .collect()
}

fn basis_contractions(rho: &Form) -> Result<Vec<Form>, FormError> {
    let n = rho.dim();
    (0..n)
        .map(|i| {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            rho.contract(&v)
        })
        .collect()
}

/// The 6d map K: V → V ⊗ Λ⁶V*, K(v) = ι(v)ρ∧ρ; column i is K(e_i).
pub fn k_map(rho: &Form) -> Result<DensityMap, StabilityError> {
    expect_signature(rho, 6, 3)?;
    let ci = basis_contractions(rho)?;
    let mut m = DMatrix::zeros(6, 6);
    for (i, c) in ci.iter().enumerate() {
        let w = vectorize(&c.wedge(rho)?);
        for (j, wj) in w.iter().enumerate() {
            m[(j, i)] = *wj;
        }
    }
    Ok(DensityMap { dim: 6, matrix: m, weight: 1, variance: Variance::EndoDensity })
}

/// 7d symmetric bilinear form B[i][j] = coefficient of ι(e_i)ρ∧ι(e_j)ρ∧ρ
/// on e₁…₇. The same combinatorics serves the (7,4) multivector case.
fn bilinear_7(rho: &Form) -> Result<DMatrix<f64>, FormError> {
    let ci = basis_contractions(rho)?;
    let mut b = DMatrix::zeros(7, 7);
    for i in 0..7 {
        for j in i..7 {
            let top = ci[i].wedge(&ci[j])?.wedge(rho)?.coeffs()[0];
            b[(i, j)] = top;
            b[(j, i)] = top;
        }
    }
    Ok(b)
}

/// 8d tensor d[a][b] = vector part of ι(e_a)ρ∧ι(e_b)ρ∧ρ ∈ Λ⁷V* ≅ V⊗Λ⁸V*,
/// symmetric in (a, b); cubic in ρ.
fn d_tensor_8(rho: &Form) -> Result<Vec<Vec<Vec<f64>>>, FormError> {
    let ci = basis_contractions(rho)?;
    let mut d = vec![vec![vec![0.0; 8]; 8]; 8];
    for a in 0..8 {
        for b in a..8 {
            let w = vectorize(&ci[a].wedge(&ci[b])?.wedge(rho)?);
            d[a][b] = w.clone();
            d[b][a] = w;
        }
    }
    Ok(d)
}

/// Invariant contraction of d⊗d: G_{ac} = Σ_{b,k} d_{ab}{}^k d_{kc}{}^b,
/// pairing each vector leg with a covector leg of the other factor.
fn g_matrix_8(d: &[Vec<Vec<f64>>]) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(8, 8);
    for a in 0..8 {
        for c in 0..8 {
            let mut s = 0.0;
            for b in 0..8 {
                for k in 0..8 {
                    s += d[a][b][k] * d[k][c][b];
                }
            }
            g[(a, c)] = s;
        }
    }
    g
}

/// Is the symmetric matrix positive definite (by Cholesky)?
fn is_spd(m: &DMatrix<f64>) -> bool {
    nalgebra::Cholesky::new(m.clone()).is_some()
}

const SIX_POW_7: f64 = 279_936.0; // 6^7
const NINETY_POW_8: f64 = 4.3046721e15; // 90^8

// ---------------------------------------------------------------------------
// Case analysis
// ---------------------------------------------------------------------------

struct Analysis {
    phi: f64,
    class: StabilityClass,
    /// SPD metric when the stabilizer is compact (7d/8d cases only).
    metric: Option<DMatrix<f64>>,
}

fn below_boundary(rho: &Form, phi: f64) -> bool {
    let scale = rho.norm().powf(homogeneity(rho));
    phi <= tol::STABILITY_BOUNDARY_REL * scale
}

fn analyze(rho: &Form) -> Result<Analysis, StabilityError> {
    let kind = case_of(rho.dim(), rho.degree())?;
    let not_stable = Analysis { phi: 0.0, class: StabilityClass::NotStable, metric: None };
    let a = match kind {
        CaseKind::Symplectic { m } => {
            let mut top = rho.clone();
            for _ in 1..m {
                top = top.wedge(rho)?;
            }
            let phi = top.coeffs()[0].abs() / factorial(m);
            if below_boundary(rho, phi) {
                not_stable
            } else {
                Analysis { phi, class: StabilityClass::Symplectic, metric: None }
            }
        }
        CaseKind::Bivector { m } => {
            let s = bivector_matrix(rho);
            let det = s.determinant();
            let phi = det.abs().powf(1.0 / (2.0 * m as f64 - 2.0));
            if below_boundary(rho, phi) {
                not_stable
            } else {
                Analysis { phi, class: StabilityClass::Symplectic, metric: None }
            }
        }
        CaseKind::SixThree => {
            let k = k_map(rho)?.matrix;
            let trk2 = (&k * &k).trace();
            let phi = (trk2.abs() / 6.0).sqrt();
            if below_boundary(rho, phi) {
                not_stable
            } else {
                let class = if trk2 < 0.0 {
                    StabilityClass::Sl3c
                } else {
                    StabilityClass::StableOtherRealForm
                };
                Analysis { phi, class, metric: None }
            }
        }
        CaseKind::SevenThree => {
            let b = bilinear_7(rho)?;
            let det = b.determinant();
            let u = (det.abs() / SIX_POW_7).powf(1.0 / 9.0);
            let phi = 3.0 * u;
            if below_boundary(rho, phi) {
                not_stable
            } else {
                let g = b.scale(det.signum() / (6.0 * u));
                if is_spd(&g) {
                    Analysis { phi, class: StabilityClass::G2, metric: Some(g) }
                } else {
                    Analysis { phi, class: StabilityClass::StableOtherRealForm, metric: None }
                }
            }
        }
        CaseKind::SevenFour => {
            let tau = to_multivector(rho);
            let h = bilinear_7(&tau.base)?;
            let det = h.determinant();
            let u = (det.abs() / SIX_POW_7).powf(1.0 / 12.0);
            let phi = 4.0 * u;
            if below_boundary(rho, phi) {
                not_stable
            } else {
                // H is the *inverse* metric density: g⁻¹ = ±H/(6u²).
                let ginv = h.scale(det.signum() / (6.0 * u * u));
                if is_spd(&ginv) {
                    let g = ginv.try_inverse().ok_or_else(|| {
                        StabilityError::NotStable("singular inverse metric".into())
                    })?;
                    Analysis { phi, class: StabilityClass::G2, metric: Some(g) }
                } else {
                    Analysis { phi, class: StabilityClass::StableOtherRealForm, metric: None }
                }
            }
        }
        CaseKind::EightThree => {
            let g8 = g_matrix_8(&d_tensor_8(rho)?);
            let det = g8.determinant();
            let u = (det.abs() / NINETY_POW_8).powf(1.0 / 18.0);
            let phi = 3.0 * u;
            if below_boundary(rho, phi) {
                not_stable
            } else {
                definite_even(&g8, 90.0 * u * u, false)
                    .map(|g| Analysis { phi, class: StabilityClass::Psu3, metric: Some(g) })
                    .unwrap_or(Analysis {
                        phi,
                        class: StabilityClass::StableOtherRealForm,
                        metric: None,
                    })
            }
        }
        CaseKind::EightFive => {
            let tau = to_multivector(rho);
            let g8 = g_matrix_8(&d_tensor_8(&tau.base)?);
            let det = g8.determinant();
            let u = (det.abs() / NINETY_POW_8).powf(1.0 / 30.0);
            let phi = 5.0 * u;
            if below_boundary(rho, phi) {
                not_stable
            } else {
                definite_even(&g8, 90.0 * u.powi(4), true)
                    .map(|g| Analysis { phi, class: StabilityClass::Psu3, metric: Some(g) })
                    .unwrap_or(Analysis {
                        phi,
                        class: StabilityClass::StableOtherRealForm,
                        metric: None,
                    })
            }
        }
    };
    Ok(a)
}

/// For even dimension the determinant cannot fix the overall sign, so try
/// both; returns the SPD metric g (inverting first if `contravariant`).
fn definite_even(b: &DMatrix<f64>, denom: f64, contravariant: bool) -> Option<DMatrix<f64>> {
    [1.0, -1.0f64].iter().find_map(|&s| {
        let cand = b.scale(s / denom);
        if !is_spd(&cand) {
            return None;
        }
        if contravariant {
            cand.try_inverse()
        } else {
            Some(cand)
        }
    })
}

fn factorial(m: usize) -> f64 {
    (1..=m).product::<usize>() as f64
}

/// Antisymmetric 2m×2m matrix of the bivector image of a (2m−2)-form.
fn bivector_matrix(sigma: &Form) -> DMatrix<f64> {
    let n = sigma.dim();
    let mv = to_multivector(sigma);
    let mut s = DMatrix::zeros(n, n);
    for i in 1..=n as u8 {
        for j in (i + 1)..=n as u8 {
            let c = mv.base.coeff(&[i, j]);
            s[(i as usize - 1, j as usize - 1)] = c;
            s[(j as usize - 1, i as usize - 1)] = -c;
        }
    }
    s
}

fn expect_signature(rho: &Form, n: usize, p: usize) -> Result<(), StabilityError> {
    if rho.dim() != n || rho.degree() != p {
        return Err(StabilityError::UnsupportedSignature(rho.dim(), rho.degree()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

/// Volume functional with classification; phi = 0 for non-stable input.
pub fn volume(rho: &Form) -> Result<VolumeResult, StabilityError> {
    let a = analyze(rho)?;
    Ok(VolumeResult { phi: a.phi, class: a.class })
}

/// Raw φ value without the stability gate (used by finite differences).
fn phi_raw(rho: &Form) -> Result<f64, StabilityError> {
    Ok(analyze(rho)?.phi)
}

/// Dual ρ̂ by fourth-order central finite differences of φ:
/// Dφ(ρ̇) = ρ̂∧ρ̇, so ρ̂_{Jᶜ} = ε(Jᶜ, J)·∂φ/∂ρ_J.
pub fn dual_form_numeric(rho: &Form) -> Result<Form, StabilityError> {
    let a = analyze(rho)?;
    if a.class == StabilityClass::NotStable {
        return Err(StabilityError::NotStable(format!(
            "phi below stability boundary for ({}, {})",
            rho.dim(),
            rho.degree()
        )));
    }
    let n = rho.dim();
    let p = rho.degree();
    let h = tol::FD_STEP_SCALE * (1.0 + rho.norm_inf());
    let mut hat = Form::zero(n, n - p)?;
    for j_set in crate::exterior::subsets(n, p) {
        // (−φ(+2h) + 8φ(+h) − 8φ(−h) + φ(−2h)) / 12h
        let mut samples = [0.0; 4];
        for (slot, step) in samples.iter_mut().zip([2.0 * h, h, -h, -2.0 * h]) {
            let mut shifted = rho.clone();
            shifted.add_term(j_set, step)?;
            *slot = phi_raw(&shifted)?;
        }
        let dphi = (-samples[0] + 8.0 * samples[1] - 8.0 * samples[2] + samples[3]) / (12.0 * h);
        let jc: Vec<u8> = (1..=n as u8).filter(|i| !j_set.contains(i)).collect();
        let eps = merge_sign(&jc, j_set) as f64;
        hat.add_term(&jc, eps * dphi)?;
    }
    Ok(hat)
}

/// Dual ρ̂ in closed form, per case; agrees with [`dual_form_numeric`] and
/// is Euler-positive for the standard orientation.
pub fn dual_form_closed(rho: &Form) -> Result<Form, StabilityError> {
    let kind = case_of(rho.dim(), rho.degree())?;
    let a = analyze(rho)?;
    if a.class == StabilityClass::NotStable {
        return Err(StabilityError::NotStable("cannot dualize a non-stable form".into()));
    }
    match kind {
        CaseKind::Symplectic { m } => {
            // ω̂ = sign(f)·ω^{m−1}/(m−1)! where f = top coefficient of ωᵐ/m!.
            let mut top = rho.clone();
            let mut pow = Form::term(rho.dim(), &[], 1.0)?;
            for _ in 1..m {
                pow = pow.wedge(rho)?;
                top = top.wedge(rho)?;
            }
            let f = top.coeffs()[0];
            Ok(pow.scale(f.signum() / factorial(m - 1)))
        }
        CaseKind::Bivector { m } => Ok(recovered_two_form(rho, m)?.scale(1.0 / (m as f64 - 1.0))),
        CaseKind::SixThree => {
            if a.class != StabilityClass::Sl3c {
                return Err(StabilityError::OtherRealForm(
                    "6d closed dual requires SL(3,C) type".into(),
                ));
            }
            let i = acs_from_rho(rho)?;
            let pulled = rho.pullback(&i.matrix)?;
            let s = pulled.top_pair(rho)?.signum();
            Ok(pulled.scale(s))
        }
        CaseKind::SevenThree | CaseKind::SevenFour | CaseKind::EightThree | CaseKind::EightFive => {
            let g = a.metric.ok_or_else(|| {
                StabilityError::OtherRealForm(
                    "closed dual via Hodge star requires a compact stabilizer".into(),
                )
            })?;
            let star = rho.hodge_star(&g, Orientation::Positive)?;
            let sign = match kind {
                CaseKind::EightThree | CaseKind::EightFive => -1.0,
                _ => 1.0,
            };
            Ok(star.scale(sign))
        }
    }
}

/// Recover the nondegenerate 2-form ω from its (2m−2)-form power
/// σ = ω^{m−1}/(m−1)!: ω = ±|det S|^{1/(2m−2)}·S⁻¹ on the bivector S,
/// with the sign fixed by Euler positivity of ω/(m−1) against σ.
fn recovered_two_form(sigma: &Form, m: usize) -> Result<Form, StabilityError> {
    let s = bivector_matrix(sigma);
    let det = s.determinant();
    let c = det.abs().powf(1.0 / (2.0 * m as f64 - 2.0));
    let w = s
        .try_inverse()
        .ok_or_else(|| StabilityError::NotStable("degenerate bivector".into()))?
        .scale(c);
    let mut omega = Form::zero(sigma.dim(), 2)?;
    for i in 1..=sigma.dim() as u8 {
        for j in (i + 1)..=sigma.dim() as u8 {
            omega.add_term(&[i, j], w[(i as usize - 1, j as usize - 1)])?;
        }
    }
    let euler = omega.top_pair(sigma)?;
    Ok(omega.scale(euler.signum()))
}

/// Induced SPD metric and volume for the compact-stabilizer 7d/8d cases.
pub fn metric_from_form(rho: &Form) -> Result<(DMatrix<f64>, f64), StabilityError> {
    match case_of(rho.dim(), rho.degree())? {
        CaseKind::SevenThree | CaseKind::SevenFour | CaseKind::EightThree | CaseKind::EightFive => {
        }
        _ => return Err(StabilityError::UnsupportedSignature(rho.dim(), rho.degree())),
    }
    let a = analyze(rho)?;
    match a.class {
        StabilityClass::NotStable => {
            Err(StabilityError::NotStable("no metric on the orbit boundary".into()))
        }
        StabilityClass::StableOtherRealForm => Err(StabilityError::OtherRealForm(format!(
            "indefinite induced bilinear form for ({}, {})",
            rho.dim(),
            rho.degree()
        ))),
        _ => Ok((a.metric.expect("compact-stabilizer classes carry a metric"), a.phi)),
    }
}

/// Almost complex structure I = K/√(−tr K²/6) of an SL(3,ℂ)-stable 3-form.
pub fn acs_from_rho(rho: &Form) -> Result<AlmostComplexStructure, StabilityError> {
    let k = k_map(rho)?.matrix;
    let trk2 = (&k * &k).trace();
    if trk2 >= 0.0 {
        return Err(StabilityError::NotComplexType(trk2));
    }
    let lambda = (-trk2 / 6.0).sqrt();
    Ok(AlmostComplexStructure { matrix: k.scale(1.0 / lambda) })
}

// ---------------------------------------------------------------------------
// Reference and random stable forms (shared by tests and the CLI verifier)
// ---------------------------------------------------------------------------

pub mod samples {
    //! Reference stable forms for every supported signature, and random
    //! stable forms obtained from them by pullback under random GL(n).

    use super::*;
    use rand::Rng;

    /// A stable reference form of the given signature.
    pub fn reference(n: usize, p: usize) -> Result<Form, StabilityError> {
        let kind = case_of(n, p)?;
        let f = match kind {
            CaseKind::Symplectic { m } => standard_symplectic(2 * m)?,
            CaseKind::Bivector { m } => {
                // ω^{m−1}/(m−1)! for the standard ω.
                let omega = standard_symplectic(2 * m)?;
                let mut pow = Form::term(2 * m, &[], 1.0)?;
                for _ in 1..m {
                    pow = pow.wedge(&omega)?;
                }
                pow.scale(1.0 / factorial(m - 1))
            }
            CaseKind::SixThree => crate::structures::normal_su3_pair().rho,
            CaseKind::SevenThree => crate::structures::g2_normal_forms().0,
            CaseKind::SevenFour => crate::structures::g2_normal_forms().1,
            CaseKind::EightThree => crate::structures::su3_structure_3form(),
            CaseKind::EightFive => {
                let rho = crate::structures::su3_structure_3form();
                rho.hodge_star(&DMatrix::identity(8, 8), Orientation::Positive)?.scale(-1.0)
            }
        };
        Ok(f)
    }

    fn standard_symplectic(n: usize) -> Result<Form, FormError> {
        let mut omega = Form::zero(n, 2)?;
        for i in 0..n / 2 {
            omega.add_term(&[2 * i as u8 + 1, 2 * i as u8 + 2], 1.0)?;
        }
        Ok(omega)
    }

    /// A well-conditioned random matrix in GL⁺(n): Q₁·D·Q₂ with random
    /// orthogonal factors and singular values in [0.5, 2], so pullbacks
    /// stay far from the stability boundary and finite differences of φ
    /// remain accurate.
    pub fn random_gl<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
        let mut orthogonal = || {
            let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0f64..1.0));
            let mut q = m.qr().q();
            if q.determinant() < 0.0 {
                for r in 0..n {
                    q[(r, 0)] = -q[(r, 0)];
                }
            }
            q
        };
        let (q1, q2) = (orthogonal(), orthogonal());
        // log-uniform singular values in [0.5, 2]
        let singular: Vec<f64> = (0..n).map(|_| 2.0f64.powf(rng.gen_range(-1.0..1.0))).collect();
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(singular));
        q1 * d * q2
    }

    /// A random stable form of the given signature: pullback of the
    /// reference by a random GL⁺(n) matrix (pullback preserves the class).
    pub fn random_stable<R: Rng + ?Sized>(
        n: usize,
        p: usize,
        rng: &mut R,
    ) -> Result<Form, StabilityError> {
        let f = reference(n, p)?.pullback(&random_gl(n, rng))?;
        Ok(f)
    }
}
