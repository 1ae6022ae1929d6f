//! The invariant flow reductions on S⁷ (Spin(7) gradient flow) and S³×S³
//! (G₂ Hamiltonian flow), with coordinate maps, critical points,
//! closed-form solutions, and reconstruction of actual forms from reduced
//! coordinates for cross-validation against [`crate::stability`].
//!
//! S⁷ (Sp(2)-invariant 4-forms, coordinates y₁..y₃, y₄):
//!
//! * flow: ẏ₁ = −1 + (y₂²+y₃²−y₁²)/(2y₂y₃) + y₁²/(2y₄²) (cyclic),
//!   ẏ₄ = −(y₁+y₂+y₃)/(4y₄);
//! * x-coordinates via k₁ = 2(x₄−x₁+x₂+x₃) (cyclic), k₁ = y₂y₃y₄²,
//!   k₂ = y₃y₁y₄², k₃ = y₁y₂y₄², y₄⁴ = −2(x₁+x₂+x₃);
//! * volume V = y₁y₂y₃y₄⁴; the symmetric orbit closes as
//!   y² = (2/5)s + c·s^{−2/3} in s = y₄².
//!
//! S³×S³: Hamiltonian H = 4y₁y₂y₃ − (1+Σx)(x₂+x₃−x₁−1)(x₃+x₁−x₂−1)(x₁+x₂−x₃−1)
//! for the symplectic form Σdxᵢ∧dyᵢ.

use crate::error::{FlowError, FormError};
use crate::exterior::Form;
use nalgebra::{Matrix4, Vector4};

/// Integrator tolerances and step bounds; see
/// [`IntegratorConfig::default_rkf45`] for the defaults used by the tests.
pub mod tol {
    pub const DEFAULT_ATOL: f64 = 1e-10;
    pub const DEFAULT_RTOL: f64 = 1e-10;
    pub const DEFAULT_MAX_STEP: f64 = 1e-2;
    /// Below this step size the adaptive integrator reports underflow.
    pub const MIN_STEP: f64 = 1e-14;
}

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

/// S⁷ reduced metric coordinates (y₁, y₂, y₃, y₄); y₄ > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct S7State {
    pub y: [f64; 4],
}

/// S⁷ form coefficients x of ρ = Σxᵢ d(αᵢωᵢ) + 2x₄ d(α₁α₂α₃);
/// x₁+x₂+x₃ < 0 on the stable domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct S7XState {
    pub x: [f64; 4],
}

/// S³×S³ reduced coordinates (x, y); y₁y₂y₃ > 0 for σ stable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct S3S3State {
    pub x: [f64; 3],
    pub y: [f64; 3],
}

/// The printed Gram table (uᵢ, uⱼ) of the S⁷ quadratic form; integer-exact.
pub fn gram_q() -> Matrix4<i64> {
    Matrix4::new(2, -2, -2, 1, -2, 2, -2, 1, -2, -2, 2, 1, 1, 1, 1, 0)
}

/// The matrix M of the x-side linear system M·ẋ = ∂V/∂x that makes the
/// x-flow the coordinate image of the printed y-flow (the y-equations are
/// the source of truth; see the module notes on the Gram table).
fn x_flow_matrix() -> Matrix4<f64> {
    let t = 2.0 / 3.0;
    Matrix4::new(
        7.0 * t, t, t, 2.0, //
        t, 7.0 * t, t, 2.0, //
        t, t, 7.0 * t, 2.0, //
        2.0, 2.0, 2.0, 0.0,
    )
}

// ---------------------------------------------------------------------------
// S⁷ flow
// ---------------------------------------------------------------------------

/// Right-hand side of the S⁷ flow in y-coordinates.
pub fn s7_rhs_y(s: &S7State) -> Result<[f64; 4], FlowError> {
    let [y1, y2, y3, y4] = s.y;
    if y1 * y2 * y3 == 0.0 || y4 == 0.0 {
        return Err(FlowError::Singular("y-coordinate product vanishes".into()));
    }
    let q = 2.0 * y4 * y4;
    Ok([
        -1.0 + (y2 * y2 + y3 * y3 - y1 * y1) / (2.0 * y2 * y3) + y1 * y1 / q,
        -1.0 + (y3 * y3 + y1 * y1 - y2 * y2) / (2.0 * y3 * y1) + y2 * y2 / q,
        -1.0 + (y1 * y1 + y2 * y2 - y3 * y3) / (2.0 * y1 * y2) + y3 * y3 / q,
        -(y1 + y2 + y3) / (4.0 * y4),
    ])
}

/// k-coordinates of an x-state: kᵢ = 2(x₄ + Σx − 2xᵢ) for i = 1, 2, 3.
fn k_of_x(x: &[f64; 4]) -> [f64; 3] {
    let s = x[0] + x[1] + x[2];
    [
        2.0 * (x[3] + s - 2.0 * x[0]),
        2.0 * (x[3] + s - 2.0 * x[1]),
        2.0 * (x[3] + s - 2.0 * x[2]),
    ]
}

/// V = y₁y₂y₃y₄⁴ expressed through the x-coordinates.
fn v_of_x(x: &S7XState) -> Result<f64, FlowError> {
    let y = coord_map(x)?;
    Ok(y.y[0] * y.y[1] * y.y[2] * y.y[3].powi(4))
}

/// Analytic ∂V/∂x via the k-substitution:
/// ∂V/∂xᵢ = V·(Σⱼ(1−2δᵢⱼ)/kⱼ + 1/(4Σx)) for i ≤ 3, ∂V/∂x₄ = V·Σⱼ1/kⱼ.
fn grad_v(x: &S7XState) -> Result<Vector4<f64>, FlowError> {
    let v = v_of_x(x)?;
    let k = k_of_x(&x.x);
    let sx = x.x[0] + x.x[1] + x.x[2];
    let inv_sum: f64 = k.iter().map(|ki| 1.0 / ki).sum();
    let mut g = Vector4::zeros();
    for i in 0..3 {
        g[i] = v * (inv_sum - 2.0 / k[i] + 1.0 / (4.0 * sx));
    }
    g[3] = v * inv_sum;
    Ok(g)
}

/// Right-hand side of the S⁷ flow in x-coordinates: M·ẋ = ∂V/∂x.
pub fn s7_rhs_x(s: &S7XState) -> Result<[f64; 4], FlowError> {
    let g = grad_v(s)?;
    let xdot = x_flow_matrix()
        .lu()
        .solve(&g)
        .ok_or_else(|| FlowError::Singular("x-flow linear system is singular".into()))?;
    Ok([xdot[0], xdot[1], xdot[2], xdot[3]])
}

/// Coordinate map x → y. Branch: y₄ > 0 and y₁ > 0; the signs of y₂, y₃
/// then follow from the k-equations.
pub fn coord_map(s: &S7XState) -> Result<S7State, FlowError> {
    let sx = s.x[0] + s.x[1] + s.x[2];
    if sx >= 0.0 {
        return Err(FlowError::DomainViolation(format!("x1+x2+x3 = {sx} must be negative")));
    }
    let k = k_of_x(&s.x);
    if k.iter().any(|&ki| ki == 0.0) {
        return Err(FlowError::DomainViolation("a k-coordinate vanishes (orbit boundary)".into()));
    }
    if k[0] * k[1] * k[2] <= 0.0 {
        return Err(FlowError::DomainViolation(
            "k1·k2·k3 must be positive for real y-coordinates".into(),
        ));
    }
    let y4 = (-2.0 * sx).powf(0.25);
    let y4sq = y4 * y4;
    let y1 = (k[1] * k[2] / (k[0] * y4sq)).sqrt();
    let y2 = k[2] / (y1 * y4sq);
    let y3 = k[1] / (y1 * y4sq);
    Ok(S7State { y: [y1, y2, y3, y4] })
}

/// Inverse coordinate map y → x: x₄ = (Σk/2 − Σx)/3, xᵢ = (kⱼ+kₗ)/4 − x₄.
pub fn coord_map_inverse(s: &S7State) -> Result<S7XState, FlowError> {
    let [y1, y2, y3, y4] = s.y;
    if y4 <= 0.0 {
        return Err(FlowError::DomainViolation("y4 must be positive".into()));
    }
    let y4sq = y4 * y4;
    let k = [y2 * y3 * y4sq, y3 * y1 * y4sq, y1 * y2 * y4sq];
    let sx = -y4.powi(4) / 2.0;
    let x4 = ((k[0] + k[1] + k[2]) / 2.0 - sx) / 3.0;
    Ok(S7XState {
        x: [
            (k[1] + k[2]) / 4.0 - x4,
            (k[2] + k[0]) / 4.0 - x4,
            (k[0] + k[1]) / 4.0 - x4,
            x4,
        ],
    })
}

/// The squashed S⁷ critical point: y₁ = y₂ = y₃ = −3/(10λ), y₄² = 9/(40λ²);
/// there the flow field equals λ·(y₁, y₂, y₃, y₄).
pub fn squashed_s7(lambda: f64) -> Result<S7State, FlowError> {
    if lambda == 0.0 {
        return Err(FlowError::InvalidParameter("lambda must be nonzero".into()));
    }
    let y = -3.0 / (10.0 * lambda);
    let y4 = (9.0 / (40.0 * lambda * lambda)).sqrt();
    Ok(S7State { y: [y, y, y, y4] })
}

/// Closed-form symmetric solution y²(s) = (2/5)s + c·s^{−2/3} in s = y₄².
pub fn s7_symmetric_closed_form(c: f64, s: f64) -> Result<f64, FlowError> {
    if s <= 0.0 {
        return Err(FlowError::DomainViolation(format!("s = {s} must be positive")));
    }
    let ysq = 0.4 * s + c * s.powf(-2.0 / 3.0);
    if ysq <= 0.0 {
        return Err(FlowError::DomainViolation(format!("y² = {ysq} is not positive")));
    }
    Ok(ysq)
}

/// Fitted family constant c = (y² − 2s/5)·s^{2/3} of a symmetric state.
pub fn s7_symmetric_family_constant(y: f64, y4: f64) -> f64 {
    let s = y4 * y4;
    (y * y - 0.4 * s) * s.powf(2.0 / 3.0)
}

// ---------------------------------------------------------------------------
// S³×S³ flow
// ---------------------------------------------------------------------------

/// V(ρ)² = (1+Σx)(x₂+x₃−x₁−1)(x₃+x₁−x₂−1)(x₁+x₂−x₃−1).
pub fn s3s3_v_rho_sq(x: &[f64; 3]) -> f64 {
    s3s3_factors(x).iter().product()
}

fn s3s3_factors(x: &[f64; 3]) -> [f64; 4] {
    [
        1.0 + x[0] + x[1] + x[2],
        x[1] + x[2] - x[0] - 1.0,
        x[2] + x[0] - x[1] - 1.0,
        x[0] + x[1] - x[2] - 1.0,
    ]
}

/// V(σ)² = y₁y₂y₃.
pub fn s3s3_v_sigma_sq(y: &[f64; 3]) -> f64 {
    y[0] * y[1] * y[2]
}

/// H = 4·V(σ)² − V(ρ)².
pub fn s3s3_hamiltonian(s: &S3S3State) -> f64 {
    4.0 * s3s3_v_sigma_sq(&s.y) - s3s3_v_rho_sq(&s.x)
}

/// Hamiltonian right-hand side: ẋᵢ = ∂H/∂yᵢ, ẏᵢ = −∂H/∂xᵢ (analytic).
pub fn s3s3_rhs(s: &S3S3State) -> ([f64; 3], [f64; 3]) {
    let [y1, y2, y3] = s.y;
    let xdot = [4.0 * y2 * y3, 4.0 * y3 * y1, 4.0 * y1 * y2];
    // ẏᵢ = −∂H/∂xᵢ = ∂P/∂xᵢ for P = f₀f₁f₂f₃ (∂f₀/∂xᵢ = 1,
    // ∂fⱼ/∂xᵢ = 1 − 2δᵢⱼ for j ≥ 1). The cyclic closed form
    // ∂P/∂xᵢ = fⱼfₖ(fᵢ−f₀) + f₀fᵢ(fⱼ+fₖ) is bitwise symmetric under
    // index swaps, so symmetric subspaces stay exactly flow-invariant.
    let f = s3s3_factors(&s.x);
    let dp = |i: usize, j: usize, k: usize| f[j] * f[k] * (f[i] - f[0]) + f[0] * f[i] * (f[j] + f[k]);
    let ydot = [dp(1, 2, 3), dp(2, 3, 1), dp(3, 1, 2)];
    (xdot, ydot)
}

/// The Bryant–Salamon symmetric locus residual 4y³ − (1+3x)(x−1)³.
pub fn bryant_salamon_residual(x: f64, y: f64) -> f64 {
    4.0 * y.powi(3) - (1.0 + 3.0 * x) * (x - 1.0).powi(3)
}

/// Constrained critical point of F = 8y^{3/2} + 3√3x² under xy = c
/// (weak holonomy SU(3)): found by 1-d root finding in y; satisfies
/// y^{7/2} = √3c²/2.
pub fn weak_su3_critical(c: f64) -> Result<(f64, f64), FlowError> {
    if c <= 0.0 {
        return Err(FlowError::InvalidParameter(format!("c = {c} must be positive")));
    }
    // Eliminating the multiplier gives r(y) = √3c²/2 − y^{7/2} = 0.
    let target = 3.0f64.sqrt() * c * c / 2.0;
    let residual = |y: f64| target - y.powf(3.5);
    let mut lo = 1e-8;
    let mut hi = 1.0;
    while residual(hi) > 0.0 {
        hi *= 2.0;
    }
    while residual(lo) < 0.0 {
        lo *= 0.5;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Newton polish
    let mut y = 0.5 * (lo + hi);
    for _ in 0..5 {
        y -= (y.powf(3.5) - target) / (3.5 * y.powf(2.5));
    }
    Ok((c / y, y))
}

// ---------------------------------------------------------------------------
// Reconstruction of forms from reduced coordinates
// ---------------------------------------------------------------------------

/// The (ρ, σ) pair on ℝ⁶ of an S³×S³ state, basis
/// (σ₁,σ₂,σ₃,Σ₁,Σ₂,Σ₃) ↦ (e₁..e₆):
/// ρ = e₁₂₃ − e₄₅₆ + Σᵢ xᵢ·(cyclic σΣΣ − σσΣ blocks),
/// σ = y₁e₂₅₃₆ + y₂e₃₆₁₄ + y₃e₁₄₂₅.
pub fn reconstruct_s3s3(s: &S3S3State) -> Result<(Form, Form), FormError> {
    let [x1, x2, x3] = s.x;
    let mut rho = Form::zero(6, 3)?;
    rho.add_term(&[1, 2, 3], 1.0)?;
    rho.add_term(&[4, 5, 6], -1.0)?;
    rho.add_term(&[1, 5, 6], x1)?;
    rho.add_term(&[2, 3, 4], -x1)?;
    rho.add_term(&[2, 6, 4], x2)?;
    rho.add_term(&[3, 1, 5], -x2)?;
    rho.add_term(&[3, 4, 5], x3)?;
    rho.add_term(&[1, 2, 6], -x3)?;
    let mut sigma = Form::zero(6, 4)?;
    sigma.add_term(&[2, 5, 3, 6], s.y[0])?;
    sigma.add_term(&[3, 6, 1, 4], s.y[1])?;
    sigma.add_term(&[1, 4, 2, 5], s.y[2])?;
    Ok((rho, sigma))
}

/// The Sp(2)-invariant 4-form on ℝ⁷ of an S⁷ x-state, basis
/// (e₁..e₄, α₁,α₂,α₃) ↦ (e₁..e₇), with the self-dual triple
/// ω₁ = e₄₃+e₁₂, ω₂ = e₁₃+e₂₄, ω₃ = e₂₃+e₄₁ and ν = ω₁² = −2e₁₂₃₄:
/// ρ = (x₁+x₂+x₃)ν + k₁α₂α₃∧ω₁ + k₂α₃α₁∧ω₂ + k₃α₁α₂∧ω₃.
pub fn reconstruct_s7(s: &S7XState) -> Result<Form, FormError> {
    let k = k_of_x(&s.x);
    let sx = s.x[0] + s.x[1] + s.x[2];
    let mut rho = Form::zero(7, 4)?;
    rho.add_term(&[1, 2, 3, 4], -2.0 * sx)?;
    // k₁·e₆₇∧(e₄₃+e₁₂)
    rho.add_term(&[6, 7, 4, 3], k[0])?;
    rho.add_term(&[6, 7, 1, 2], k[0])?;
    // k₂·e₇₅∧(e₁₃+e₂₄)
    rho.add_term(&[7, 5, 1, 3], k[1])?;
    rho.add_term(&[7, 5, 2, 4], k[1])?;
    // k₃·e₅₆∧(e₂₃+e₄₁)
    rho.add_term(&[5, 6, 2, 3], k[2])?;
    rho.add_term(&[5, 6, 4, 1], k[2])?;
    Ok(rho)
}

/// Recorded conversion to the coordinates of the Brandhuber et al.
/// solution: x₁ = A₁A₂A₃ + A₁A₂B₃ + A₃B₁B₂ − A₁B₂B₃ (cyclic) and
/// y₁ = 4A₂B₂A₃B₃ (cyclic). The dictionary is carried over verbatim and is
/// not independently validated here.
pub fn brandhuber_coords(a: &[f64; 3], b: &[f64; 3]) -> S3S3State {
    let x = |i: usize, j: usize, l: usize| {
        a[i] * a[j] * a[l] + a[i] * a[j] * b[l] + a[l] * b[i] * b[j] - a[i] * b[j] * b[l]
    };
    let y = |j: usize, l: usize| 4.0 * a[j] * b[j] * a[l] * b[l];
    S3S3State {
        x: [x(0, 1, 2), x(1, 2, 0), x(2, 0, 1)],
        y: [y(1, 2), y(2, 0), y(0, 1)],
    }
}

// ---------------------------------------------------------------------------
// Integration
// ---------------------------------------------------------------------------

/// Step control for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Classical fixed-step fourth-order Runge–Kutta.
    Rk4 { h: f64 },
    /// Runge–Kutta–Fehlberg 4(5) with absolute/relative tolerances.
    Rkf45 { atol: f64, rtol: f64, max_step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub t_span: (f64, f64),
}

impl IntegratorConfig {
    /// The default used by the identity tests: RKF45, atol = rtol = 1e−10,
    /// max step 1e−2.
    pub fn default_rkf45(t_span: (f64, f64)) -> Self {
        Self {
            method: Method::Rkf45 {
                atol: tol::DEFAULT_ATOL,
                rtol: tol::DEFAULT_RTOL,
                max_step: tol::DEFAULT_MAX_STEP,
            },
            t_span,
        }
    }
}

/// A time-ordered sampled solution. `incomplete` carries the reason when
/// the integrator stopped before the end of the span (domain exit or step
/// underflow); the samples up to that point are still valid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub incomplete: Option<String>,
}

impl Trajectory {
    pub fn last(&self) -> (&f64, &[f64]) {
        (self.times.last().expect("nonempty"), self.states.last().expect("nonempty"))
    }
}

fn axpy(y: &[f64], pairs: &[(f64, &[f64])], h: f64) -> Vec<f64> {
    let mut out = y.to_vec();
    for (c, k) in pairs {
        for (o, ki) in out.iter_mut().zip(k.iter()) {
            *o += h * c * ki;
        }
    }
    out
}

/// Integrate ẏ = rhs(y) over cfg.t_span; one row per accepted step.
pub fn integrate<F>(rhs: F, state0: &[f64], cfg: &IntegratorConfig) -> Result<Trajectory, FlowError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, FlowError>,
{
    // validate the initial state eagerly so a bad start is an error, not an
    // empty trajectory
    rhs(state0)?;
    match cfg.method {
        Method::Rk4 { h } => {
            if h <= 0.0 {
                return Err(FlowError::InvalidParameter("rk4 step must be positive".into()));
            }
            Ok(integrate_rk4(rhs, state0, cfg.t_span, h))
        }
        Method::Rkf45 { atol, rtol, max_step } => {
            if atol <= 0.0 || rtol < 0.0 || max_step <= 0.0 {
                return Err(FlowError::InvalidParameter("rkf45 tolerances must be positive".into()));
            }
            Ok(integrate_rkf45(rhs, state0, cfg.t_span, atol, rtol, max_step))
        }
    }
}

fn integrate_rk4<F>(rhs: F, state0: &[f64], (t0, t1): (f64, f64), h: f64) -> Trajectory
where
    F: Fn(&[f64]) -> Result<Vec<f64>, FlowError>,
{
    let mut t = t0;
    let mut y = state0.to_vec();
    let mut traj =
        Trajectory { times: vec![t0], states: vec![y.clone()], incomplete: None };
    while t < t1 - 1e-15 {
        let step = h.min(t1 - t);
        let res = (|| -> Result<Vec<f64>, FlowError> {
            let k1 = rhs(&y)?;
            let k2 = rhs(&axpy(&y, &[(0.5, &k1)], step))?;
            let k3 = rhs(&axpy(&y, &[(0.5, &k2)], step))?;
            let k4 = rhs(&axpy(&y, &[(1.0, &k3)], step))?;
            Ok(axpy(
                &y,
                &[
                    (1.0 / 6.0, &k1),
                    (1.0 / 3.0, &k2),
                    (1.0 / 3.0, &k3),
                    (1.0 / 6.0, &k4),
                ],
                step,
            ))
        })();
        match res {
            Ok(next) => {
                y = next;
                t += step;
                traj.times.push(t);
                traj.states.push(y.clone());
            }
            Err(e) => {
                traj.incomplete = Some(e.to_string());
                break;
            }
        }
    }
    traj
}

// Fehlberg 4(5) tableau.
const RKF_A2: [f64; 1] = [0.25];
const RKF_A3: [f64; 2] = [3.0 / 32.0, 9.0 / 32.0];
const RKF_A4: [f64; 3] = [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0];
const RKF_A5: [f64; 4] = [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0];
const RKF_A6: [f64; 5] =
    [-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0];
const RKF_B5: [f64; 6] =
    [16.0 / 135.0, 0.0, 6656.0 / 12825.0, 28561.0 / 56430.0, -9.0 / 50.0, 2.0 / 55.0];
const RKF_B4: [f64; 6] =
    [25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -1.0 / 5.0, 0.0];

fn integrate_rkf45<F>(
    rhs: F,
    state0: &[f64],
    (t0, t1): (f64, f64),
    atol: f64,
    rtol: f64,
    max_step: f64,
) -> Trajectory
where
    F: Fn(&[f64]) -> Result<Vec<f64>, FlowError>,
{
    let mut t = t0;
    let mut y = state0.to_vec();
    let mut h = max_step.min(t1 - t0);
    let mut traj =
        Trajectory { times: vec![t0], states: vec![y.clone()], incomplete: None };
    while t < t1 - 1e-15 {
        if h < tol::MIN_STEP {
            traj.incomplete = Some("step size underflow".into());
            break;
        }
        let step = h.min(t1 - t);
        let attempt = (|| -> Result<(Vec<f64>, f64), FlowError> {
            let k1 = rhs(&y)?;
            let k2 = rhs(&axpy(&y, &[(RKF_A2[0], &k1)], step))?;
            let k3 = rhs(&axpy(&y, &[(RKF_A3[0], &k1), (RKF_A3[1], &k2)], step))?;
            let k4 = rhs(&axpy(
                &y,
                &[(RKF_A4[0], &k1), (RKF_A4[1], &k2), (RKF_A4[2], &k3)],
                step,
            ))?;
            let k5 = rhs(&axpy(
                &y,
                &[(RKF_A5[0], &k1), (RKF_A5[1], &k2), (RKF_A5[2], &k3), (RKF_A5[3], &k4)],
                step,
            ))?;
            let k6 = rhs(&axpy(
                &y,
                &[
                    (RKF_A6[0], &k1),
                    (RKF_A6[1], &k2),
                    (RKF_A6[2], &k3),
                    (RKF_A6[3], &k4),
                    (RKF_A6[4], &k5),
                ],
                step,
            ))?;
            let ks = [&k1, &k2, &k3, &k4, &k5, &k6];
            let order5 = axpy(
                &y,
                &RKF_B5.iter().zip(ks).map(|(&c, k)| (c, k.as_slice())).collect::<Vec<_>>(),
                step,
            );
            let order4 = axpy(
                &y,
                &RKF_B4.iter().zip(ks).map(|(&c, k)| (c, k.as_slice())).collect::<Vec<_>>(),
                step,
            );
            let err = order5
                .iter()
                .zip(&order4)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            Ok((order5, err))
        })();
        match attempt {
            Ok((next, err)) => {
                // error-per-unit-step control so the accumulated error over
                // a unit time span stays near atol, not n_steps·atol
                let scale =
                    (atol + rtol * y.iter().fold(0.0f64, |m, v| m.max(v.abs()))) * step;
                if err <= scale {
                    t += step;
                    y = next;
                    traj.times.push(t);
                    traj.states.push(y.clone());
                }
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * (scale / err).powf(0.25)).clamp(0.2, 5.0)
                };
                h = (step * factor).min(max_step);
            }
            Err(e) => {
                // retry with a smaller step; persistent failure ends in
                // step underflow above
                h *= 0.5;
                if h < tol::MIN_STEP {
                    traj.incomplete = Some(e.to_string());
                    break;
                }
            }
        }
    }
    traj
}

/// CSV rendering with 17 significant digits; appends a trailing comment
/// row when the trajectory is incomplete.
pub fn trajectory_to_csv(traj: &Trajectory, header: &str) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for (t, row) in traj.times.iter().zip(&traj.states) {
        out.push_str(&format!("{t:.16e}"));
        for v in row {
            out.push_str(&format!(",{v:.16e}"));
        }
        out.push('\n');
    }
    if let Some(reason) = &traj.incomplete {
        out.push_str(&format!("# INCOMPLETE: {reason}\n"));
    }
    out
}

// Adapters between typed states and the flat integrator interface.

pub fn s7_rhs_y_flat(y: &[f64]) -> Result<Vec<f64>, FlowError> {
    let s = S7State { y: [y[0], y[1], y[2], y[3]] };
    Ok(s7_rhs_y(&s)?.to_vec())
}

pub fn s7_rhs_x_flat(x: &[f64]) -> Result<Vec<f64>, FlowError> {
    let s = S7XState { x: [x[0], x[1], x[2], x[3]] };
    Ok(s7_rhs_x(&s)?.to_vec())
}

pub fn s3s3_rhs_flat(v: &[f64]) -> Result<Vec<f64>, FlowError> {
    let s = S3S3State { x: [v[0], v[1], v[2]], y: [v[3], v[4], v[5]] };
    let (xd, yd) = s3s3_rhs(&s);
    Ok(xd.iter().chain(yd.iter()).copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gram_q_matches_printed_table() {
        let q = gram_q();
        let expect = Matrix4::new(2, -2, -2, 1, -2, 2, -2, 1, -2, -2, 2, 1, 1, 1, 1, 0);
        assert_eq!(q, expect);
    }

    #[test]
    fn symmetric_reduction_of_y_rhs() {
        // y₁=y₂=y₃=y: ẏ = −½ + y²/(2y₄²), ẏ₄ = −3y/(4y₄) (so 2y₄ẏ₄ = −3y/2)
        let s = S7State { y: [0.7, 0.7, 0.7, 1.3] };
        let d = s7_rhs_y(&s).unwrap();
        let expect = -0.5 + 0.49 / (2.0 * 1.69);
        assert_abs_diff_eq!(d[0], expect, epsilon = 1e-14);
        assert_abs_diff_eq!(d[1], expect, epsilon = 1e-14);
        assert_abs_diff_eq!(d[2], expect, epsilon = 1e-14);
        assert_abs_diff_eq!(2.0 * 1.3 * d[3], -1.5 * 0.7, epsilon = 1e-14);
    }

    #[test]
    fn y_rhs_permutation_equivariance() {
        let s = S7State { y: [0.4, 0.9, -0.6, 1.1] };
        let d = s7_rhs_y(&s).unwrap();
        let sp = S7State { y: [0.9, -0.6, 0.4, 1.1] };
        let dp = s7_rhs_y(&sp).unwrap();
        assert_abs_diff_eq!(dp[0], d[1], epsilon = 1e-14);
        assert_abs_diff_eq!(dp[1], d[2], epsilon = 1e-14);
        assert_abs_diff_eq!(dp[2], d[0], epsilon = 1e-14);
        assert_abs_diff_eq!(dp[3], d[3], epsilon = 1e-14);
    }

    #[test]
    fn closed_form_satisfies_ode() {
        // y·dy/ds + y²/(3s) = 1/3 for y² = (2/5)s + c·s^{−2/3}
        for &c in &[-1.0, 0.0, 1.0] {
            for &s in &[0.1, 1.0, 10.0] {
                let ysq = match s7_symmetric_closed_form(c, s) {
                    Ok(v) => v,
                    Err(_) => continue, // y² ≤ 0 for c=−1 at small s
                };
                // y·dy/ds = ½ d(y²)/ds
                let dysq = 0.4 - (2.0 / 3.0) * c * s.powf(-5.0 / 3.0);
                let residual = 0.5 * dysq + ysq / (3.0 * s) - 1.0 / 3.0;
                assert!(residual.abs() < 1e-12, "c={c} s={s}: residual {residual}");
            }
        }
    }

    #[test]
    fn cone_is_self_similar_direction() {
        // on the c=0 cone y² = 2s/5 the flow direction satisfies ẏ/y = ẏ₄/y₄
        let y4: f64 = 1.7;
        let y = (0.4 * y4 * y4).sqrt();
        let d = s7_rhs_y(&S7State { y: [y, y, y, y4] }).unwrap();
        assert_abs_diff_eq!(d[0] / y, d[3] / y4, epsilon = 1e-13);
    }

    #[test]
    fn coord_map_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut done = 0;
        while done < 100 {
            let x = [
                rng.gen_range(-1.0..0.2),
                rng.gen_range(-1.0..0.2),
                rng.gen_range(-1.0..0.2),
                rng.gen_range(-1.0..1.0),
            ];
            let s = S7XState { x };
            let Ok(y) = coord_map(&s) else { continue };
            let back = coord_map_inverse(&y).unwrap();
            for i in 0..4 {
                assert!(
                    (back.x[i] - x[i]).abs() < 1e-12 * (1.0 + x[i].abs()),
                    "round trip failed at {i}: {back:?} vs {x:?}"
                );
            }
            // k-equation residuals vanish after mapping
            let k = k_of_x(&x);
            let [y1, y2, y3, y4] = y.y;
            let y4sq = y4 * y4;
            assert_abs_diff_eq!(y2 * y3 * y4sq, k[0], epsilon = 1e-10);
            assert_abs_diff_eq!(y3 * y1 * y4sq, k[1], epsilon = 1e-10);
            assert_abs_diff_eq!(y1 * y2 * y4sq, k[2], epsilon = 1e-10);
            done += 1;
        }
    }

    #[test]
    fn squashed_point_is_constrained_critical() {
        for &lambda in &[-1.0, -0.3, 0.4, 2.0] {
            let s = squashed_s7(lambda).unwrap();
            let [y, _, _, y4] = s.y;
            // the two printed equations
            assert_abs_diff_eq!(lambda * y, -0.5 + y * y / (2.0 * y4 * y4), epsilon = 1e-12);
            assert_abs_diff_eq!(4.0 * lambda * y4 * y4, -3.0 * y, epsilon = 1e-12);
            // flow field parallel (equal) to λ·position
            let d = s7_rhs_y(&s).unwrap();
            for i in 0..4 {
                assert_abs_diff_eq!(d[i], lambda * s.y[i], epsilon = 1e-12);
            }
        }
        assert!(squashed_s7(0.0).is_err());
        // λ = −1 reproduces the printed values
        let s = squashed_s7(-1.0).unwrap();
        assert_abs_diff_eq!(s.y[0], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(s.y[3] * s.y[3], 0.225, epsilon = 1e-15);
    }

    #[test]
    fn x_and_y_flows_commute_with_coord_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let cfg = IntegratorConfig::default_rkf45((0.0, 0.1));
        let mut done = 0;
        while done < 5 {
            let y0 = [
                rng.gen_range(0.3..1.2),
                rng.gen_range(0.3..1.2),
                rng.gen_range(0.3..1.2),
                rng.gen_range(0.6..1.4),
            ];
            let s0 = S7State { y: y0 };
            let x0 = coord_map_inverse(&s0).unwrap();
            if coord_map(&x0).is_err() {
                continue;
            }
            let ty = integrate(s7_rhs_y_flat, &y0, &cfg).unwrap();
            let tx = integrate(s7_rhs_x_flat, &x0.x, &cfg).unwrap();
            assert!(ty.incomplete.is_none() && tx.incomplete.is_none());
            let (_, xe) = tx.last();
            let ye = coord_map(&S7XState { x: [xe[0], xe[1], xe[2], xe[3]] }).unwrap();
            let (_, ye_direct) = ty.last();
            for i in 0..4 {
                assert!(
                    (ye.y[i] - ye_direct[i]).abs() < 1e-6,
                    "commutation failed: {:?} vs {:?}",
                    ye.y,
                    ye_direct
                );
            }
            done += 1;
        }
    }

    #[test]
    fn v_changes_monotonically_along_x_flow() {
        // The flow is a gradient flow for an indefinite quadratic form; with
        // the y-system as the source of truth V decreases along it here.
        let s0 = S7State { y: [0.8, 0.9, 1.0, 1.1] };
        let x0 = coord_map_inverse(&s0).unwrap();
        let cfg = IntegratorConfig::default_rkf45((0.0, 0.05));
        let tr = integrate(s7_rhs_x_flat, &x0.x, &cfg).unwrap();
        let v0 = v_of_x(&x0).unwrap();
        let (_, xe) = tr.last();
        let v1 = v_of_x(&S7XState { x: [xe[0], xe[1], xe[2], xe[3]] }).unwrap();
        assert!((v1 - v0).abs() > 1e-6, "V must move along the flow");
    }

    #[test]
    fn s3s3_hamiltonian_values() {
        // symmetric locus: H = 0 iff 4y³ = (1+3x)(x−1)³
        let x = 3.0;
        let y = ((1.0 + 3.0 * x) * (x - 1.0f64).powi(3) / 4.0).cbrt();
        let s = S3S3State { x: [x; 3], y: [y; 3] };
        assert_abs_diff_eq!(s3s3_hamiltonian(&s), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(bryant_salamon_residual(x, y), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn s3s3_rhs_analytic_gradient() {
        // finite-difference check of ẏ = −∂H/∂x
        let s = S3S3State { x: [0.3, -0.2, 0.9], y: [1.1, 0.4, 0.7] };
        let (xd, yd) = s3s3_rhs(&s);
        let h = 1e-6;
        for i in 0..3 {
            let mut sp = s;
            sp.y[i] += h;
            let mut sm = s;
            sm.y[i] -= h;
            let fd = (s3s3_hamiltonian(&sp) - s3s3_hamiltonian(&sm)) / (2.0 * h);
            assert!((xd[i] - fd).abs() < 1e-6);
            let mut sp = s;
            sp.x[i] += h;
            let mut sm = s;
            sm.x[i] -= h;
            let fd = (s3s3_hamiltonian(&sp) - s3s3_hamiltonian(&sm)) / (2.0 * h);
            assert!((yd[i] + fd).abs() < 1e-6);
        }
    }

    #[test]
    fn s3s3_conserves_h_and_symmetric_locus() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let cfg = IntegratorConfig::default_rkf45((0.0, 1.0));
        for _ in 0..3 {
            let s0 = S3S3State {
                x: [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)],
                y: [rng.gen_range(0.2..1.0), rng.gen_range(0.2..1.0), rng.gen_range(0.2..1.0)],
            };
            let h0 = s3s3_hamiltonian(&s0);
            let v0: Vec<f64> = s0.x.iter().chain(s0.y.iter()).copied().collect();
            let tr = integrate(s3s3_rhs_flat, &v0, &cfg).unwrap();
            for (t, row) in tr.times.iter().zip(&tr.states) {
                let s = S3S3State { x: [row[0], row[1], row[2]], y: [row[3], row[4], row[5]] };
                let dh = (s3s3_hamiltonian(&s) - h0).abs();
                assert!(dh < 1e-8 * (1.0 + h0.abs()), "t={t}: ΔH = {dh}");
            }
        }
        // x₂=x₃, y₂=y₃ invariance
        let s0 = S3S3State { x: [0.4, -0.1, -0.1], y: [0.9, 0.6, 0.6] };
        let v0: Vec<f64> = s0.x.iter().chain(s0.y.iter()).copied().collect();
        let tr = integrate(s3s3_rhs_flat, &v0, &cfg).unwrap();
        for row in &tr.states {
            assert!((row[1] - row[2]).abs() < 1e-10);
            assert!((row[4] - row[5]).abs() < 1e-10);
        }
    }

    #[test]
    fn reconstruct_s3s3_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut ratios_rho = Vec::new();
        let mut ratios_sigma = Vec::new();
        for _ in 0..10 {
            let s = S3S3State {
                x: [rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)],
                y: [rng.gen_range(0.3..1.0), rng.gen_range(0.3..1.0), rng.gen_range(0.3..1.0)],
            };
            let (rho, sigma) = reconstruct_s3s3(&s).unwrap();
            // ω∧ρ = 0
            let omega = stability::dual_form_closed(&sigma).unwrap().scale(2.0);
            assert!(omega.wedge(&rho).unwrap().norm_inf() < 1e-12);
            // sign-aware identity: P(x) = −tr(K²)/6 (both real forms occur)
            let k = stability::k_map(&rho).unwrap();
            let trk2 = (&k.matrix * &k.matrix).trace();
            let phi_sigma = stability::volume(&sigma).unwrap().phi;
            ratios_rho.push(-trk2 / 6.0 / s3s3_v_rho_sq(&s.x));
            ratios_sigma.push(phi_sigma * phi_sigma / s3s3_v_sigma_sq(&s.y));
        }
        for r in &ratios_rho {
            assert!((r - ratios_rho[0]).abs() < 1e-8, "φ(ρ)² ratio drifts: {ratios_rho:?}");
        }
        for r in &ratios_sigma {
            assert!((r - ratios_sigma[0]).abs() < 1e-8, "φ(σ)² ratio drifts: {ratios_sigma:?}");
        }
        // the reference normalization is in fact 1 for both
        assert_abs_diff_eq!(ratios_rho[0], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(ratios_sigma[0], 1.0, epsilon = 1e-8);
    }

    #[test]
    fn reconstruct_s3s3_base_point_classification() {
        // at x = 0: P = −1 < 0, the noncompact real form (tr K² > 0)
        let s = S3S3State { x: [0.0; 3], y: [1.0; 3] };
        let (rho, _) = reconstruct_s3s3(&s).unwrap();
        assert_eq!(
            stability::volume(&rho).unwrap().class,
            stability::StabilityClass::StableOtherRealForm
        );
        // where P > 0 the form is of SL(3,C) type
        let s = S3S3State { x: [2.0; 3], y: [1.0; 3] };
        assert!(s3s3_v_rho_sq(&s.x) > 0.0);
        let (rho, _) = reconstruct_s3s3(&s).unwrap();
        assert_eq!(stability::volume(&rho).unwrap().class, stability::StabilityClass::Sl3c);
    }

    #[test]
    fn reconstruct_s7_volume_matches_coordinates() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let mut ratios = Vec::new();
        let mut done = 0;
        while done < 10 {
            let x = [
                rng.gen_range(-1.0..0.0),
                rng.gen_range(-1.0..0.0),
                rng.gen_range(-1.0..0.0),
                rng.gen_range(-1.0..1.0),
            ];
            let s = S7XState { x };
            let Ok(y) = coord_map(&s) else { continue };
            let v = y.y[0] * y.y[1] * y.y[2] * y.y[3].powi(4);
            let rho = reconstruct_s7(&s).unwrap();
            let phi = stability::volume(&rho).unwrap().phi;
            // φ ≥ 0 while V carries the branch sign, so compare magnitudes
            ratios.push(phi / v.abs());
            done += 1;
        }
        for r in &ratios {
            assert!((r - ratios[0]).abs() < 1e-8, "φ ratio drifts: {ratios:?}");
        }
        assert_abs_diff_eq!(ratios[0], 4.0, epsilon = 1e-8);
    }

    #[test]
    fn weak_su3_matches_closed_form() {
        for &c in &[0.1, 1.0, 10.0] {
            let (x, y) = weak_su3_critical(c).unwrap();
            let expect = (3.0f64.sqrt() * c * c / 2.0).powf(2.0 / 7.0);
            assert!((y - expect).abs() < 1e-10 * expect, "c={c}: {y} vs {expect}");
            assert_abs_diff_eq!(x * y, c, epsilon = 1e-12 * (1.0 + c));
            // Lagrange residual: ∇F ∥ ∇(xy), i.e. 6√3x·x = 12√y·y
            let lhs = 6.0 * 3.0f64.sqrt() * x * x;
            let rhs_ = 12.0 * y.sqrt() * y;
            assert!((lhs - rhs_).abs() < 1e-9 * (1.0 + lhs.abs()));
        }
        assert!(weak_su3_critical(0.0).is_err());
        // c = √(2/√3) gives y = 1
        let c = (2.0 / 3.0f64.sqrt()).sqrt();
        let (_, y) = weak_su3_critical(c).unwrap();
        assert_abs_diff_eq!(y, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_flow_stays_in_closed_form_family() {
        let y4: f64 = 1.0;
        let y: f64 = 1.0;
        // the symmetric orbit collapses (y₄ → 0) in finite time, so stay
        // well inside the existence interval
        let c0 = s7_symmetric_family_constant(y, y4);
        let cfg = IntegratorConfig::default_rkf45((0.0, 0.3));
        let tr = integrate(s7_rhs_y_flat, &[y, y, y, y4], &cfg).unwrap();
        assert!(tr.incomplete.is_none());
        let mut worst = 0.0f64;
        for row in &tr.states {
            let c = s7_symmetric_family_constant(row[0], row[3]);
            worst = worst.max((c - c0).abs());
        }
        assert!(worst < 1e-6, "family constant drift {worst}");
    }

    #[test]
    fn integrator_flags_domain_exit() {
        // flow into the y₄ → 0 singularity from a state headed there
        let rhs = |v: &[f64]| -> Result<Vec<f64>, FlowError> {
            if v[0] <= 0.0 {
                return Err(FlowError::Singular("left the domain".into()));
            }
            Ok(vec![-1.0])
        };
        let cfg = IntegratorConfig { method: Method::Rk4 { h: 0.01 }, t_span: (0.0, 2.0) };
        let tr = integrate(rhs, &[0.5], &cfg).unwrap();
        assert!(tr.incomplete.is_some());
        assert!(tr.times.len() > 1);
    }

    #[test]
    fn csv_format() {
        let tr = Trajectory {
            times: vec![0.0, 0.5],
            states: vec![vec![1.0, 2.0], vec![3.0, 4.0]],
            incomplete: Some("test".into()),
        };
        let csv = trajectory_to_csv(&tr, "t,a,b");
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,a,b");
        assert!(lines[1].starts_with("0.0000000000000000e0,1.0000000000000000e0"));
        assert_eq!(lines[3], "# INCOMPLETE: test");
    }

    #[test]
    fn compat_conditions_persist_along_h_zero_flow() {
        // started on the H = 0 locus, the reconstructed pair keeps the
        // compatibility conditions: ω∧ρ = 0 and φ(ρ) = 2φ(σ)
        // modest start: the cubic right-hand side blows up in finite time
        // from larger locus points
        let x0 = 1.2;
        let y0 = ((1.0 + 3.0 * x0) * (x0 - 1.0f64).powi(3) / 4.0).cbrt();
        let cfg = IntegratorConfig::default_rkf45((0.0, 0.5));
        let tr = integrate(s3s3_rhs_flat, &[x0, x0, x0, y0, y0, y0], &cfg).unwrap();
        assert!(tr.incomplete.is_none());
        for row in tr.states.iter().step_by(10) {
            let s = S3S3State { x: [row[0], row[1], row[2]], y: [row[3], row[4], row[5]] };
            let (rho, sigma) = reconstruct_s3s3(&s).unwrap();
            let omega = stability::dual_form_closed(&sigma).unwrap().scale(2.0);
            let scale = omega.norm() * rho.norm();
            assert!(omega.wedge(&rho).unwrap().norm_inf() < 1e-12 * scale);
            let phi_rho = stability::volume(&rho).unwrap().phi;
            let phi_sigma = stability::volume(&sigma).unwrap().phi;
            assert!(
                (phi_rho / phi_sigma - 2.0).abs() < 1e-6,
                "ratio {} at {:?}",
                phi_rho / phi_sigma,
                s
            );
        }
    }

    #[test]
    fn brandhuber_dictionary_shape() {
        // recorded conversion only: check the cyclic structure, not values
        let s = brandhuber_coords(&[1.0, 1.0, 1.0], &[0.0, 0.0, 0.0]);
        assert_eq!(s.x, [1.0, 1.0, 1.0]);
        assert_eq!(s.y, [0.0, 0.0, 0.0]);
    }
}
