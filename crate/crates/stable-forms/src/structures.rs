//! Structure-level constructions: the 6d SU(3) normal pair, the 7d G₂
//! normal forms and the assembly φ = dt∧ω + ρ, compatibility checks, and
//! the su(3) orthogonal multiplication with its structure 3-form on ℝ⁸.
//!
//! Conventions (standard orientation e₁…ₙ positive throughout):
//!
//! * normal SU(3) pair: ω = −e₁₄ + e₂₃ − e₅₆, ρ = e₁₂₅ − e₃₄₅ + e₁₃₆ + e₂₄₆,
//!   with σ = ω²/2 and ρ̂ = e₁₂₆ − e₁₃₅ − e₂₄₅ − e₃₄₆; the volume chain is
//!   φ(σ) = ⅙ω³ = ¼ρ̂∧ρ = ½φ(ρ) = 1;
//! * G₂ normal forms: φ = e₇∧ω + ρ and ∗φ = e₇∧ρ̂ + σ, an orthonormal
//!   package: metric Id₇ and φ∧∗φ = 7·e₁…₇.

use crate::error::{FormError, StructureError};
use crate::exterior::Form;
use crate::stability::{self, StabilityClass};
use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex;
use rand::Rng;

type C64 = Complex<f64>;

// ---------------------------------------------------------------------------
// Normal forms
// ---------------------------------------------------------------------------

/// A compatible (ρ, σ) pair on ℝ⁶; ω is derived as 2·σ̂.
#[derive(Debug, Clone, PartialEq)]
pub struct SU3Pair {
    pub rho: Form,
    pub sigma: Form,
}

impl SU3Pair {
    pub fn new(rho: Form, sigma: Form) -> Result<Self, StructureError> {
        if rho.dim() != 6 || rho.degree() != 3 {
            return Err(FormError::DegreeMismatch { expected: 3, got: rho.degree() }.into());
        }
        if sigma.dim() != 6 || sigma.degree() != 4 {
            return Err(FormError::DegreeMismatch { expected: 4, got: sigma.degree() }.into());
        }
        Ok(Self { rho, sigma })
    }

    /// ω = 2·σ̂ (from σ̂ = ω/(m−1) with m = 3).
    pub fn omega(&self) -> Result<Form, StructureError> {
        Ok(stability::dual_form_closed(&self.sigma)?.scale(2.0))
    }
}

fn form(dim: usize, terms: &[(&[u8], f64)]) -> Form {
    let mut f = Form::zero(dim, terms[0].0.len()).expect("static term tables are valid");
    for (idx, v) in terms {
        f.add_term(idx, *v).expect("static term tables are valid");
    }
    f
}

/// ω = −e₁₄ + e₂₃ − e₅₆.
pub fn normal_omega() -> Form {
    form(6, &[(&[1, 4], -1.0), (&[2, 3], 1.0), (&[5, 6], -1.0)])
}

/// ρ = e₁₂₅ − e₃₄₅ + e₁₃₆ + e₂₄₆.
pub fn normal_rho() -> Form {
    form(6, &[(&[1, 2, 5], 1.0), (&[3, 4, 5], -1.0), (&[1, 3, 6], 1.0), (&[2, 4, 6], 1.0)])
}

/// ρ̂ = e₁₂₆ − e₁₃₅ − e₂₄₅ − e₃₄₆.
pub fn normal_rho_hat() -> Form {
    form(6, &[(&[1, 2, 6], 1.0), (&[1, 3, 5], -1.0), (&[2, 4, 5], -1.0), (&[3, 4, 6], -1.0)])
}

/// σ = ω²/2 = −e₁₂₃₄ + e₁₄₅₆ − e₂₃₅₆.
pub fn normal_sigma() -> Form {
    form(6, &[(&[1, 2, 3, 4], -1.0), (&[1, 4, 5, 6], 1.0), (&[2, 3, 5, 6], -1.0)])
}

/// The normal compatible pair (ρ, σ) with c = 2 and positive type.
pub fn normal_su3_pair() -> SU3Pair {
    SU3Pair { rho: normal_rho(), sigma: normal_sigma() }
}

/// The G₂ normal forms (φ, ∗φ) = (e₇∧ω + ρ, e₇∧ρ̂ + σ): an orthonormal
/// package with metric Id₇.
pub fn g2_normal_forms() -> (Form, Form) {
    let e7 = Form::term(7, &[7], 1.0).expect("static");
    let phi = e7
        .wedge(&embed_in_7(&normal_omega()))
        .and_then(|w| w.add(&embed_in_7(&normal_rho())))
        .expect("static");
    let star = e7
        .wedge(&embed_in_7(&normal_rho_hat()))
        .and_then(|w| w.add(&embed_in_7(&normal_sigma())))
        .expect("static");
    (phi, star)
}

/// Reinterpret a form on ℝ⁶ as a form on ℝ⁷ (indices 1..6 unchanged).
pub fn embed_in_7(f6: &Form) -> Form {
    let mut out = Form::zero(7, f6.degree()).expect("degree ≤ 6");
    for (s, &c) in crate::exterior::subsets(6, f6.degree()).iter().zip(f6.coeffs()) {
        if c != 0.0 {
            out.add_term(s, c).expect("indices stay within 1..6");
        }
    }
    out
}

/// Restrict a form on ℝ⁷ containing no e₇ terms back to ℝ⁶.
fn restrict_to_6(f7: &Form) -> Result<Form, StructureError> {
    let mut out = Form::zero(6, f7.degree())?;
    for (s, &c) in crate::exterior::subsets(7, f7.degree()).iter().zip(f7.coeffs()) {
        if c == 0.0 {
            continue;
        }
        if s.contains(&7) {
            return Err(StructureError::IncompatiblePair(
                "residual e7 component in restriction".into(),
            ));
        }
        out.add_term(s, c)?;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Compatibility and 7d assembly
// ---------------------------------------------------------------------------

/// Result of [`check_compat`].
#[derive(Debug, Clone, PartialEq)]
pub struct CompatReport {
    /// ω∧ρ = 0.
    pub primitive: bool,
    /// φ(ρ)/φ(σ) when both are stable.
    pub c: Option<f64>,
    /// ω(IX, X) > 0 for the almost complex structure I of ρ.
    pub positive_type: bool,
}

///// Compatibility of a (ρ, σ) pair: primitivity ω∧ρ = 0, the constant
/// c = φ(ρ)/φ(σ), and positive type via the almost complex structure.
///
/// Positive type means the symmetric bilinear form (X, Y) ↦ ω(IX, Y) is
/// positive definite; since I is quadratic in ρ this is invariant under
/// ρ → −ρ.
pub fn check_compat(pair: &SU3Pair) -> Result<CompatReport, StructureError> {
    let v_rho = stability::volume(&pair.rho)?;
    let v_sigma = stability::volume(&pair.sigma)?;
    if v_rho.class == StabilityClass::NotStable || v_sigma.class == StabilityClass::NotStable {
        return Err(StructureError::IncompatiblePair("non-stable pair member".into()));
    }
    let omega = pair.omega()?;
    let wr = omega.wedge(&pair.rho)?;
    let primitive = wr.norm_inf() <= 1e-10 * (1.0 + omega.norm_inf() * pair.rho.norm_inf());
    let c = Some(v_rho.phi / v_sigma.phi);
    let positive_type = match stability::acs_from_rho(&pair.rho) {
        Ok(acs) => {
            // h(X, Y) = ω(IX, Y); with ω-matrix W this is h = IᵀW.
            let w = two_form_matrix(&omega);
            let h = acs.matrix.transpose() * w;
            let sym = (&h + h.transpose()).scale(0.5);
            let asym_dev = (&h - h.transpose()).abs().max();
            asym_dev < 1e-8 * (1.0 + h.abs().max())
                && nalgebra::Cholesky::new(sym).is_some()
        }
        Err(_) => false,
    };
    Ok(CompatReport { primitive, c, positive_type })
}

fn two_form_matrix(omega: &Form) -> DMatrix<f64> {
    let n = omega.dim();
    let mut w = DMatrix::zeros(n, n);
    for i in 1..=n as u8 {
        for j in (i + 1)..=n as u8 {
            let c = omega.coeff(&[i, j]);
            w[(i as usize - 1, j as usize - 1)] = c;
            w[(j as usize - 1, i as usize - 1)] = -c;
        }
    }
    w
}

/// Assemble the 7d 3-form φ = dt_scale·e₇∧ω + ρ from a compatible pair
/// with c = 2.
pub fn assemble_7d(pair: &SU3Pair, dt_scale: f64) -> Result<Form, StructureError> {
    let report = check_compat(pair)?;
    if !report.primitive {
        return Err(StructureError::IncompatiblePair("pair is not primitive (ω∧ρ ≠ 0)".into()));
    }
    match report.c {
        Some(c) if (c - 2.0).abs() <= 1e-8 * (1.0 + c.abs()) => {}
        c => {
            return Err(StructureError::IncompatiblePair(format!(
                "pair requires c = 2, got {c:?}"
            )))
        }
    }
    let e7 = Form::term(7, &[7], dt_scale)?;
    let phi = e7.wedge(&embed_in_7(&pair.omega()?))?.add(&embed_in_7(&pair.rho))?;
    Ok(phi)
}

/// Split a 7d 3-form along e₇: φ = e₇∧ω + ρ with ω = ι(e₇)φ.
pub fn decompose_7d(phi: &Form) -> Result<(Form, Form), StructureError> {
    if phi.dim() != 7 || phi.degree() != 3 {
        return Err(FormError::DegreeMismatch { expected: 3, got: phi.degree() }.into());
    }
    let mut e7 = vec![0.0; 7];
    e7[6] = 1.0;
    let omega7 = phi.contract(&e7)?;
    let rho7 = phi.sub(&Form::term(7, &[7], 1.0)?.wedge(&omega7)?)?;
    Ok((restrict_to_6(&omega7)?, restrict_to_6(&rho7)?))
}

// ---------------------------------------------------------------------------
// su(3): orthogonal multiplication and structure 3-form
// ---------------------------------------------------------------------------

/// A 3×3 skew-hermitian traceless complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SU3Matrix {
    m: Matrix3<C64>,
}

impl SU3Matrix {
    pub fn new(m: Matrix3<C64>) -> Result<Self, StructureError> {
        let scale = 1.0 + m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let skew_dev = (m + m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if skew_dev > 1e-10 * scale {
            return Err(StructureError::NotSkewHermitian(skew_dev));
        }
        let tr = m.trace().norm();
        if tr > 1e-10 * scale {
            return Err(StructureError::NotTraceless(tr));
        }
        Ok(Self { m })
    }

    pub fn matrix(&self) -> &Matrix3<C64> {
        &self.m
    }

    /// ⟨A, B⟩ = −tr(AB); real and positive definite on su(3).
    pub fn inner(&self, other: &Self) -> f64 {
        -(self.m * other.m).trace().re
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn bracket(&self, other: &Self) -> Self {
        Self { m: self.m * other.m - other.m * self.m }
    }
}

/// Orthonormal basis T_a = iλ_a/√2 (Gell-Mann λ) for ⟨A,B⟩ = −tr(AB).
pub fn su3_basis() -> [SU3Matrix; 8] {
    let i = C64::new(0.0, 1.0);
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let r3 = 3.0f64.sqrt();
    let lambdas: [Matrix3<C64>; 8] = [
        Matrix3::new(z, o, z, o, z, z, z, z, z),
        Matrix3::new(z, -i, z, i, z, z, z, z, z),
        Matrix3::new(o, z, z, z, -o, z, z, z, z),
        Matrix3::new(z, z, o, z, z, z, o, z, z),
        Matrix3::new(z, z, -i, z, z, z, i, z, z),
        Matrix3::new(z, z, z, z, z, o, z, o, z),
        Matrix3::new(z, z, z, z, z, -i, z, i, z),
        Matrix3::new(o / r3, z, z, z, o / r3, z, z, z, -2.0 * o / r3),
    ];
    lambdas.map(|l| SU3Matrix { m: l.map(|x| i * x / 2.0f64.sqrt()) })
}

/// A random su(3) element: real Gaussian-free uniform combination of the
/// orthonormal basis.
pub fn su3_random<R: Rng + ?Sized>(rng: &mut R) -> SU3Matrix {
    let basis = su3_basis();
    let mut m = Matrix3::zeros();
    for t in &basis {
        let coeff = C64::new(rng.gen_range(-1.0f64..1.0), 0.0);
        m += t.m.map(|z| z * coeff);
    }
    SU3Matrix { m }
}

/// The orthogonal multiplication A×B = ωAB − ω̄BA − (i/√3)tr(AB)·Id with
/// ω = (1 + i√3)/2; closed on su(3) and norm-multiplicative up to a single
/// constant.
pub fn su3_cross(a: &SU3Matrix, b: &SU3Matrix) -> SU3Matrix {
    let w = C64::new(0.5, 3.0f64.sqrt() / 2.0);
    let tr = (a.m * b.m).trace();
    let correction = Matrix3::identity().map(|x: C64| x * tr * C64::new(0.0, 1.0 / 3.0f64.sqrt()));
    SU3Matrix { m: a.m * b.m * w - b.m * a.m * w.conj() - correction }
}

/// Structure constants f_abc of su(3) in the Gell-Mann basis, listed over
/// a < b < c (totally antisymmetric).
const SU3_F: [(u8, u8, u8, f64); 9] = [
    (1, 2, 3, 1.0),
    (1, 4, 7, 0.5),
    (1, 5, 6, -0.5),
    (2, 4, 6, 0.5),
    (2, 5, 7, 0.5),
    (3, 4, 5, 0.5),
    (3, 6, 7, -0.5),
    (4, 5, 8, 0.866_025_403_784_438_6),
    (6, 7, 8, 0.866_025_403_784_438_6),
];

/// The bi-invariant structure 3-form ρ(X,Y,Z) = ⟨[X,Y],Z⟩ on the
/// orthonormal basis: ρ = −√2·Σ_{a<b<c} f_abc e^{abc}.
pub fn su3_structure_3form() -> Form {
    let mut rho = Form::zero(8, 3).expect("static");
    let s = -(2.0f64.sqrt());
    for &(a, b, c, f) in &SU3_F {
        rho.add_term(&[a, b, c], s * f).expect("static");
    }
    rho
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::Orientation;
    use approx::assert_abs_diff_eq;

    #[test]
    fn normal_pair_volume_chain() {
        let pair = normal_su3_pair();
        let omega = normal_omega();
        // φ(σ) = ⅙ω³ = ¼ρ̂∧ρ = ½φ(ρ) = 1
        let w3 = omega.wedge(&omega).unwrap().wedge(&omega).unwrap().coeffs()[0];
        assert_abs_diff_eq!(w3 / 6.0, 1.0, epsilon = 1e-14);
        let euler = normal_rho_hat().top_pair(&pair.rho).unwrap();
        assert_abs_diff_eq!(euler / 4.0, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(stability::volume(&pair.sigma).unwrap().phi, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(stability::volume(&pair.rho).unwrap().phi, 2.0, epsilon = 1e-12);
        // σ really is ω²/2
        let sq = omega.wedge(&omega).unwrap().scale(0.5);
        assert!(sq.sub(&pair.sigma).unwrap().norm_inf() < 1e-14);
    }

    #[test]
    fn normal_pair_compatibility() {
        let pair = normal_su3_pair();
        let report = check_compat(&pair).unwrap();
        assert!(report.primitive);
        assert_abs_diff_eq!(report.c.unwrap(), 2.0, epsilon = 1e-10);
        assert!(report.positive_type);
        // positive type is invariant under ρ → −ρ (I is quadratic in ρ)
        let flipped = SU3Pair { rho: pair.rho.scale(-1.0), sigma: pair.sigma.clone() };
        assert!(check_compat(&flipped).unwrap().positive_type);
    }

    #[test]
    fn primitivity_propagates_to_dual() {
        let pair = normal_su3_pair();
        let omega = pair.omega().unwrap();
        let hat = stability::dual_form_closed(&pair.rho).unwrap();
        assert!(omega.wedge(&hat).unwrap().norm_inf() < 1e-10);
    }

    #[test]
    fn g2_normal_forms_consistency() {
        let (phi, star) = g2_normal_forms();
        // ∗φ computed from the induced metric matches the closed form
        let g = nalgebra::DMatrix::identity(7, 7);
        let star_direct = phi.hodge_star(&g, Orientation::Positive).unwrap();
        assert!(star_direct.sub(&star).unwrap().norm_inf() < 1e-12);
        // φ∧∗φ = 7·vol
        assert_abs_diff_eq!(star.top_pair(&phi).unwrap(), 7.0, epsilon = 1e-12);
    }

    #[test]
    fn decompose_recovers_normal_pair() {
        let (phi, _) = g2_normal_forms();
        let (omega, rho) = decompose_7d(&phi).unwrap();
        assert!(omega.sub(&normal_omega()).unwrap().norm_inf() < 1e-14);
        assert!(rho.sub(&normal_rho()).unwrap().norm_inf() < 1e-14);
    }

    #[test]
    fn assemble_normal_pair_gives_normal_phi() {
        let pair = normal_su3_pair();
        let phi = assemble_7d(&pair, 1.0).unwrap();
        let (phi_n, _) = g2_normal_forms();
        assert!(phi.sub(&phi_n).unwrap().norm_inf() < 1e-10);
        let (g, _) = stability::metric_from_form(&phi).unwrap();
        assert!((&g - nalgebra::DMatrix::identity(7, 7)).abs().max() < 1e-10);
    }

    #[test]
    fn cone_slices_have_cone_metric() {
        // φ = (r²/λ)dr∧ω + r³ρ has metric r²·g₆ ⊕ (1/λ²)dr².
        let lambda = 2.0;
        for &r in &[0.5f64, 1.0, 2.0] {
            let pair = SU3Pair {
                rho: normal_rho().scale(r.powi(3)),
                sigma: normal_sigma().scale(r.powi(4)),
            };
            // pair.omega() = r²ω, so dt_scale = 1/λ yields (r²/λ)e₇∧ω + r³ρ.
            let phi = assemble_7d(&pair, 1.0 / lambda).unwrap();
            let (g, _) = stability::metric_from_form(&phi).unwrap();
            let mut expect = nalgebra::DMatrix::identity(7, 7).scale(r * r);
            expect[(6, 6)] = 1.0 / (lambda * lambda);
            assert!(
                (&g - &expect).abs().max() < 1e-8 * (1.0 + r * r),
                "r = {r}: metric {g} vs {expect}"
            );
        }
    }

    #[test]
    fn assemble_rejects_incompatible_pairs() {
        // ρ scaled by 2 breaks c = 2 (c scales by 4).
        let pair = SU3Pair { rho: normal_rho().scale(2.0), sigma: normal_sigma() };
        assert!(assemble_7d(&pair, 1.0).is_err());
    }

    #[test]
    fn su3_basis_is_orthonormal() {
        let basis = su3_basis();
        for (a, ta) in basis.iter().enumerate() {
            for (b, tb) in basis.iter().enumerate() {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(ta.inner(tb), expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn structure_form_matches_brackets() {
        let basis = su3_basis();
        let rho = su3_structure_3form();
        for a in 0..8u8 {
            for b in (a + 1)..8 {
                for c in (b + 1)..8 {
                    let val = -(basis[a as usize]
                        .bracket(&basis[b as usize])
                        .matrix()
                        * basis[c as usize].matrix())
                    .trace()
                    .re;
                    assert_abs_diff_eq!(
                        rho.coeff(&[a + 1, b + 1, c + 1]),
                        val,
                        epsilon = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn su3_cross_closure_and_constant() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut ratios = Vec::new();
        for _ in 0..100 {
            let a = su3_random(&mut rng);
            let b = su3_random(&mut rng);
            let c = su3_cross(&a, &b);
            // closure: output is validated skew-hermitian traceless
            assert!(SU3Matrix::new(*c.matrix()).is_ok());
            ratios.push(c.norm() / (a.norm() * b.norm()));
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let var =
            ratios.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / ratios.len() as f64;
        assert!(var.sqrt() < 1e-10, "norm ratio stddev {}", var.sqrt());
        assert_abs_diff_eq!(mean, 1.0 / 2.0f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn su3_matrix_validation() {
        let i = C64::new(0.0, 1.0);
        // not traceless
        let bad = Matrix3::from_diagonal_element(i);
        assert!(matches!(SU3Matrix::new(bad), Err(StructureError::NotTraceless(_))));
        // not skew-hermitian
        let bad2 = Matrix3::new(
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        );
        assert!(matches!(SU3Matrix::new(bad2), Err(StructureError::NotSkewHermitian(_))));
    }
}
