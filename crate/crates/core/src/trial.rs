//! Trial-function upper bounds on `λ_{a,c}`.
//!
//! Every field is pulled back to the reference triangle `Ω₀` (equilateral,
//! same area) through the affine map `𝓛_{a,c}` or evaluated directly on
//! `Ω_{a,c}`. Since `det 𝓛 = 1`, both routes give the same Rayleigh quotient.

use crate::equilateral::{self, EquilateralSolution, GroundStateField};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{
    angles_equilateral, AffineMap, Point, SmallestAngle, TriangleGeometry, TriangleParams, SIDES,
};
use crate::quadrature;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Margin used by strict verdicts.
pub const STRICT_MARGIN: f64 = 1e-10;

/// Exponents below this are clamped before `exp`.
const LOG_FLOOR: f64 = -700.0;

const AREA_ORDER: usize = 10;
const EDGE_ORDER: usize = 16;
const AREA_TOL: f64 = 1e-12;
const EDGE_TOL: f64 = 1e-13;

/// Terms of the Robin quadratic form and the resulting quotient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormValue {
    pub gradient_term: f64,
    /// `α ∫_∂ |u|²`.
    pub boundary_term: f64,
    pub l2_norm_sq: f64,
    pub rayleigh: f64,
}

impl FormValue {
    fn new(gradient_term: f64, boundary_term: f64, l2_norm_sq: f64) -> Self {
        FormValue {
            gradient_term,
            boundary_term,
            l2_norm_sq,
            rayleigh: (gradient_term + boundary_term) / l2_norm_sq,
        }
    }

    /// Form value of the `L²`-normalised field.
    pub fn normalized_form(&self) -> f64 {
        self.rayleigh
    }
}

/// `u⋆ = exp(α x'/sin(θ/2))` with `x'` measured along the inward bisector at `apex`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorExponential {
    pub theta_star: f64,
    pub l_prime: f64,
    pub apex: Point,
    pub bisector: Point,
    pub alpha: f64,
}

impl SectorExponential {
    pub fn new(alpha: f64, anchor: &SmallestAngle) -> Self {
        SectorExponential {
            theta_star: anchor.theta_star,
            l_prime: anchor.l_prime,
            apex: anchor.apex,
            bisector: anchor.bisector,
            alpha,
        }
    }

    /// `α / sin(θ⋆/2)`.
    pub fn rate(&self) -> f64 {
        self.alpha / (0.5 * self.theta_star).sin()
    }

    pub fn exponent(&self, p: Point) -> f64 {
        self.rate() * (p - self.apex).dot(self.bisector)
    }
}

impl ScalarField for SectorExponential {
    fn value(&self, p: Point) -> f64 {
        self.exponent(p).max(LOG_FLOOR).exp()
    }

    fn gradient(&self, p: Point) -> [f64; 2] {
        let s = self.rate() * self.value(p);
        [s * self.bisector.x, s * self.bisector.y]
    }
}

/// The three trial functions.
#[derive(Debug, Clone, Copy)]
pub enum TrialField {
    /// `ψ₀` on `Ω₀`, used through the transformed form.
    TransplantedGroundState(EquilateralSolution),
    /// The constant function on `Ω_{a,c}`.
    ConstantOne,
    /// `u⋆` on `Ω_{a,c}`.
    SectorExponential(SectorExponential),
}

impl TrialField {
    /// Rayleigh quotient on `Ω_{a,c}` for the Robin parameter `alpha`.
    pub fn form(&self, alpha: f64, tri: &TriangleParams) -> Result<FormValue> {
        match self {
            TrialField::TransplantedGroundState(sol) => {
                form_hat(alpha, tri, &equilateral::ground_state(*sol))
            }
            TrialField::ConstantOne => physical_form(alpha, &tri.geometry(), &crate::field::One),
            TrialField::SectorExponential(f) => {
                let geom = tri.geometry();
                physical_form_toward(alpha, &geom, f, field_vertex(&geom, f))
            }
        }
    }
}

/// Field on `Ω_{a,c}` obtained from a field on `Ω₀` by composing with `𝓛⁻¹`.
#[derive(Debug, Clone, Copy)]
pub struct Pushforward<F> {
    pub field: F,
    pub map: AffineMap,
}

impl<F: ScalarField> ScalarField for Pushforward<F> {
    fn value(&self, p: Point) -> f64 {
        self.field.value(self.map.apply_inverse(p))
    }

    fn gradient(&self, p: Point) -> [f64; 2] {
        let g = self.field.gradient(self.map.apply_inverse(p));
        let m = &self.map.inverse_matrix;
        [m[0][0] * g[0] + m[1][0] * g[1], m[0][1] * g[0] + m[1][1] * g[1]]
    }
}

fn edge_norms_sq(v: &[Point; 3], field: &impl ScalarField) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for (k, &(i, j)) in SIDES.iter().enumerate() {
        let [e] = quadrature::integrate_segment_adaptive(v[i], v[j], EDGE_ORDER, EDGE_TOL, 0.0, &|p| {
            let u = field.value(p);
            [u * u]
        })?;
        out[k] = e;
    }
    Ok(out)
}

/// `ĥ_{α,a,c}[ψ]` for `ψ` given on the equilateral triangle of the same area.
///
/// ```text
/// (S/(√3c²)) ‖∂₁ψ‖² + ‖c sqrt(√3/S) ∂₂ψ - a/sqrt(√3S) ∂₁ψ‖²
///   + α [ (c/c₀) ‖ψ‖²_{Γ⁽⁰⁾} + w₁ ‖ψ‖²_{Γ⁽¹⁾} + w₂ ‖ψ‖²_{Γ⁽²⁾} ]
/// ```
///
/// with `w₁,₂ = sqrt(√3/S) sqrt(c²(a ± c)² + S²)/(2c)`.
pub fn form_hat(alpha: f64, tri: &TriangleParams, psi: &impl ScalarField) -> Result<FormValue> {
    let (a, c, s) = (tri.a, tri.c, tri.area);
    let reference = TriangleParams::equilateral(s)?;
    let v = reference.vertices();
    let k11 = s / (SQRT3 * c * c);
    let k2 = c * (SQRT3 / s).sqrt();
    let k21 = a / (SQRT3 * s).sqrt();
    let [grad, l2] = quadrature::integrate_triangle_adaptive(&v, AREA_ORDER, AREA_TOL, 0.0, 1, 7, &|p| {
        let [g1, g2] = psi.gradient(p);
        let u = psi.value(p);
        let mixed = k2 * g2 - k21 * g1;
        [k11 * g1 * g1 + mixed * mixed, u * u]
    })?;
    let edges = edge_norms_sq(&v, psi)?;
    let w = hat_edge_weights(tri);
    let boundary = alpha * (w[0] * edges[0] + w[1] * edges[1] + w[2] * edges[2]);
    Ok(FormValue::new(grad, boundary, l2))
}

/// Boundary weights of the transformed form, one per side of `Ω₀`.
pub fn hat_edge_weights(tri: &TriangleParams) -> [f64; 3] {
    let (a, c, s) = (tri.a, tri.c, tri.area);
    let r = (SQRT3 / s).sqrt();
    [
        c * r,
        r * (c * c * (a + c) * (a + c) + s * s).sqrt() / (2.0 * c),
        r * (c * c * (a - c) * (a - c) + s * s).sqrt() / (2.0 * c),
    ]
}

/// The plain Robin form `‖∇u‖² + α‖u‖²_{∂Ω}` evaluated on `tri`.
pub fn physical_form(alpha: f64, tri: &TriangleGeometry, u: &impl ScalarField) -> Result<FormValue> {
    let v = tri.vertices;
    let [grad, l2] = quadrature::integrate_triangle_adaptive(&v, AREA_ORDER, AREA_TOL, 0.0, 1, 7, &|p| {
        let [gx, gy] = u.gradient(p);
        let val = u.value(p);
        [gx * gx + gy * gy, val * val]
    })?;
    let edges = edge_norms_sq(&v, u)?;
    Ok(FormValue::new(grad, alpha * edges.iter().sum::<f64>(), l2))
}

/// As [`physical_form`] with quadrature graded toward vertex `apex`, for
/// fields concentrated at a corner.
pub fn physical_form_toward(
    alpha: f64,
    tri: &TriangleGeometry,
    u: &impl ScalarField,
    apex: usize,
) -> Result<FormValue> {
    let v = tri.vertices;
    let rot = [v[apex], v[(apex + 1) % 3], v[(apex + 2) % 3]];
    let [grad, l2] = quadrature::integrate_triangle_toward_apex_adaptive(&rot, AREA_TOL, 0.0, &|p| {
        let [gx, gy] = u.gradient(p);
        let val = u.value(p);
        [gx * gx + gy * gy, val * val]
    })?;
    let sq = |p: Point| {
        let val = u.value(p);
        [val * val]
    };
    let [e1] = quadrature::integrate_segment_toward_start_adaptive(rot[0], rot[1], EDGE_TOL, 0.0, &sq)?;
    let [e2] = quadrature::integrate_segment_toward_start_adaptive(rot[0], rot[2], EDGE_TOL, 0.0, &sq)?;
    let [e3] = quadrature::integrate_segment_adaptive(rot[1], rot[2], EDGE_ORDER, EDGE_TOL, e1 + e2, &sq)?;
    Ok(FormValue::new(grad, alpha * (e1 + e2 + e3), l2))
}

fn field_vertex(tri: &TriangleGeometry, f: &SectorExponential) -> usize {
    (0..3)
        .min_by(|&i, &j| {
            let di = (tri.vertices[i] - f.apex).norm();
            let dj = (tri.vertices[j] - f.apex).norm();
            di.total_cmp(&dj)
        })
        .unwrap_or(0)
}

/// `δ = ĥ_{α,a,c}[ψ₀] - h_α[ψ₀]` for the normalised ground state, from the
/// closed-form norms.
pub fn delta_transplant(alpha: f64, tri: &TriangleParams) -> Result<f64> {
    let sol = equilateral::solve_equilateral(alpha, tri.area)?;
    let norms = equilateral::closed_form_norms(&sol)?;
    Ok(delta_from_norms(alpha, tri, norms.psi_d1_sq(), norms.psi_boundary_sq()))
}

/// `δ` given `‖∂₁ψ₀‖²` and `‖ψ₀‖²_{∂Ω₀}`; lets scans reuse norms across a row.
pub fn delta_from_norms(alpha: f64, tri: &TriangleParams, d1_sq: f64, boundary_sq: f64) -> f64 {
    let metric = metric_excess(tri);
    let perim = half_normalised_perimeter(tri) - 3.0;
    metric * d1_sq + alpha * perim * boundary_sq / 3.0
}

/// `c²√3/S + S/(√3c²) + a²/(√3S) - 2`, non-negative and zero only at the
/// equilateral point.
pub fn metric_excess(tri: &TriangleParams) -> f64 {
    let (a, c, s) = (tri.a, tri.c, tri.area);
    c * c * SQRT3 / s + s / (SQRT3 * c * c) + a * a / (SQRT3 * s) - 2.0
}

/// `f₁ = sqrt(√3/S) l(a,c) / 2`; equals 3 for the equilateral triangle.
pub fn half_normalised_perimeter(tri: &TriangleParams) -> f64 {
    hat_edge_weights(tri).iter().sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantBound {
    /// `α f₂(a,c)` with `f₂ = |∂Ω_{a,c}|/S`.
    pub bound: f64,
    pub f2: f64,
    /// `f₂ > λ₀/α` with a strict margin.
    pub verdict: bool,
}

pub fn constant_bound(alpha: f64, tri: &TriangleParams) -> Result<ConstantBound> {
    let lambda0 = equilateral::lambda0(alpha, tri.area)?;
    Ok(constant_bound_with(alpha, tri, lambda0))
}

/// As [`constant_bound`] with a precomputed `λ₀`.
pub fn constant_bound_with(alpha: f64, tri: &TriangleParams, lambda0: f64) -> ConstantBound {
    let f2 = tri.perimeter() / tri.area;
    let target = lambda0 / alpha;
    ConstantBound {
        bound: alpha * f2,
        f2,
        verdict: f2 - target > STRICT_MARGIN * target.abs().max(1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorBound {
    /// Rayleigh quotient of `u⋆` by quadrature.
    pub rayleigh_upper: f64,
    /// `-(α²/sin²(θ/2)) (1 - 2 exp(2αL' cot(θ/2)))`; `None` for the
    /// equilateral triangle.
    pub closed_upper: Option<f64>,
    pub field: SectorExponential,
}

/// Picks the vertex `u⋆` is built on: the smallest angle, or vertex 0 when
/// `anchor_left` is set.
pub fn sector_anchor(tri: &TriangleGeometry, anchor_left: bool) -> SmallestAngle {
    if anchor_left {
        tri.angle_data_at(0)
    } else {
        tri.smallest_angle_data()
    }
}

pub fn sector_bound(alpha: f64, tri: &TriangleGeometry, anchor_left: bool) -> Result<SectorBound> {
    require_attractive(alpha)?;
    let field = SectorExponential::new(alpha, &sector_anchor(tri, anchor_left));
    let form = physical_form_toward(alpha, tri, &field, field_vertex(tri, &field))?;
    let closed_upper = if angles_equilateral(&tri.angles, 1e-12) {
        None
    } else {
        Some(sector_closed_bound(alpha, field.theta_star, field.l_prime))
    };
    Ok(SectorBound {
        rayleigh_upper: form.rayleigh,
        closed_upper,
        field,
    })
}

/// `-(α²/sin²(θ/2)) (1 - 2 exp(2αL' cot(θ/2)))`.
pub fn sector_closed_bound(alpha: f64, theta: f64, l_prime: f64) -> f64 {
    let half = 0.5 * theta;
    let s = half.sin();
    -(alpha * alpha / (s * s)) * (1.0 - 2.0 * (2.0 * alpha * l_prime / half.tan()).exp())
}

/// `-4α² + 24α/sqrt(√3S) - 36/(√3S) ≥ closed sector bound`.
pub fn sector_condition(alpha: f64, tri: &TriangleGeometry, anchor_left: bool) -> Result<bool> {
    require_attractive(alpha)?;
    if angles_equilateral(&tri.angles, 1e-12) {
        return Err(Error::domain(
            "sector condition needs a non-equilateral triangle",
        ));
    }
    let anchor = sector_anchor(tri, anchor_left);
    let rhs = sector_closed_bound(alpha, anchor.theta_star, anchor.l_prime);
    Ok(lambda0_lower_bound(alpha, tri.params.area)? >= rhs)
}

/// `-4 (3 - α sqrt(√3S))² / (√3S)`, strictly below `λ₀`.
pub fn lambda0_lower_bound(alpha: f64, area: f64) -> Result<f64> {
    require_attractive(alpha)?;
    if !(area > 0.0) {
        return Err(Error::domain(format!("area must be positive, got {area}")));
    }
    let h2 = SQRT3 * area;
    let k = 3.0 - alpha * h2.sqrt();
    Ok(-4.0 * k * k / h2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallCoupling {
    /// `(f₁ - 3) / (metric excess)`; `None` at the equilateral point.
    pub z: Option<f64>,
    pub f1: f64,
    /// `3‖∇ψ₀‖² / (-2α‖ψ₀‖²_{∂Ω₀})`.
    pub g1: f64,
}

impl SmallCoupling {
    /// `g₁ ≤ z`, equivalent to `δ ≤ 0` away from the equilateral point.
    pub fn certifies(&self) -> Option<bool> {
        self.z.map(|z| self.g1 <= z)
    }
}

pub fn small_coupling_functions(alpha: f64, tri: &TriangleParams) -> Result<SmallCoupling> {
    let sol = equilateral::solve_equilateral(alpha, tri.area)?;
    let norms = equilateral::closed_form_norms(&sol)?;
    Ok(small_coupling_from_norms(alpha, tri, norms.psi_grad_sq(), norms.psi_boundary_sq()))
}

pub fn small_coupling_from_norms(
    alpha: f64,
    tri: &TriangleParams,
    grad_sq: f64,
    boundary_sq: f64,
) -> SmallCoupling {
    let denom = metric_excess(tri);
    assert!(denom >= -1e-12, "metric excess must be non-negative, got {denom}");
    let f1 = half_normalised_perimeter(tri);
    let z = if denom > 1e-14 { Some((f1 - 3.0) / denom) } else { None };
    SmallCoupling {
        z,
        f1,
        g1: 3.0 * grad_sq / (-2.0 * alpha * boundary_sq),
    }
}

fn require_attractive(alpha: f64) -> Result<()> {
    if alpha < 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("α must be finite and negative, got {alpha}")))
    }
}

/// Ground state of the equilateral triangle normalised in `L²`.
pub fn normalised_ground_state(sol: EquilateralSolution) -> Result<NormalisedField<GroundStateField>> {
    let field = equilateral::ground_state(sol);
    let l2 = equilateral::l2_norm_sq_by_quadrature(&sol)?;
    Ok(NormalisedField {
        field,
        scale: 1.0 / l2.sqrt(),
    })
}

#[derive(Debug, Clone, Copy)]
pub struct NormalisedField<F> {
    pub field: F,
    pub scale: f64,
}

impl<F: ScalarField> ScalarField for NormalisedField<F> {
    fn value(&self, p: Point) -> f64 {
        self.scale * self.field.value(p)
    }

    fn gradient(&self, p: Point) -> [f64; 2] {
        let [x, y] = self.field.gradient(p);
        [self.scale * x, self.scale * y]
    }
}
