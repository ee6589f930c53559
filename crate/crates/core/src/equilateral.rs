//! Closed-form Robin ground state of the equilateral triangle.
//!
//! For `α < 0` and area `S` write `h = sqrt(√3 S)` (the height of `Ω₀`) and
//! `q = -α h > 0`. The ground state is
//!
//! ```text
//! u₀(x, y) = cosh(L + 2K y/h) + 2 cosh(M - K y/h) cosh(√3 K x/h)
//! ```
//!
//! with `M = artanh t`, `L = -artanh(t/2)`, `K = M - L` and `t ∈ (0, 1)` the
//! root of `t (artanh t + artanh(t/2)) = q`. The eigenvalue is
//! `λ₀ = -4K²/(√3 S)`.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{Point, TriangleGeometry, TriangleParams};
use crate::quadrature;
use crate::roots;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Above this coupling `q` the solve switches from `t` to `M = artanh t`.
const LARGE_COUPLING: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilateralSolution {
    pub alpha: f64,
    pub area: f64,
    /// `q = -α sqrt(√3 S)`.
    pub coupling: f64,
    pub t: f64,
    pub k: f64,
    pub l: f64,
    pub m: f64,
    pub lambda0: f64,
}

/// Relative residuals of the defining equations.
#[derive(Debug, Clone, Copy)]
pub struct SolveResiduals {
    /// `t (artanh t + artanh(t/2)) - q`, over `q`.
    pub reduced: f64,
    /// `2 (L - M) tanh L - q`, over `q`.
    pub first: f64,
    /// `(M - L) tanh M - q`, over `q`.
    pub second: f64,
    /// `tanh M + 2 tanh L`.
    pub tanh_identity: f64,
}

impl SolveResiduals {
    pub fn max_abs(&self) -> f64 {
        [self.reduced, self.first, self.second, self.tanh_identity]
            .iter()
            .fold(0.0, |m, r| m.max(r.abs()))
    }
}

impl EquilateralSolution {
    /// `h = sqrt(√3 S)`.
    pub fn height(&self) -> f64 {
        (SQRT3 * self.area).sqrt()
    }

    pub fn residuals(&self) -> SolveResiduals {
        let q = self.coupling;
        SolveResiduals {
            reduced: (self.t * (self.m - self.l) - q) / q,
            first: (2.0 * (self.l - self.m) * self.l.tanh() - q) / q,
            second: ((self.m - self.l) * self.m.tanh() - q) / q,
            tanh_identity: self.m.tanh() + 2.0 * self.l.tanh(),
        }
    }

    /// `F(K, α) = K + artanh(hα/K) + artanh(hα/(2K))`; zero at the solution.
    /// Not representable once `t` rounds to 1.
    pub fn implicit_function(&self) -> f64 {
        let h = self.height();
        let x = h * self.alpha / self.k;
        self.k + x.atanh() + (0.5 * x).atanh()
    }

    /// `k(α) = A(t) / (K + A(t))`, the logarithmic derivative `(α/K) dK/dα`.
    pub fn log_derivative(&self) -> f64 {
        let a = a_function(self.t);
        a / (self.k + a)
    }

    pub fn ground_state(&self) -> GroundStateField {
        ground_state(*self)
    }
}

/// Solves the transcendental system for `α < 0`, `S > 0`.
pub fn solve_equilateral(alpha: f64, area: f64) -> Result<EquilateralSolution> {
    if !(alpha < 0.0) || !alpha.is_finite() {
        return Err(Error::domain(format!(
            "equilateral solver needs finite α < 0, got {alpha}"
        )));
    }
    if !(area > 0.0) || !area.is_finite() {
        return Err(Error::domain(format!("area must be positive, got {area}")));
    }
    let h = (SQRT3 * area).sqrt();
    let q = -alpha * h;

    let (t, m, l) = if q <= LARGE_COUPLING {
        let fdf = |t: f64| {
            let k = t.atanh() + (0.5 * t).atanh();
            (t * k - q, k + a_function(t))
        };
        let t = roots::bracketed_newton(fdf, 0.0, 1.0 - f64::EPSILON, 1e-6, 1e-15, 100)?;
        (t, t.atanh(), -(0.5 * t).atanh())
    } else {
        // (M + artanh(tanh(M)/2)) tanh M = q, increasing in M
        let fdf = |m: f64| {
            let th = m.tanh();
            let sech2 = 1.0 / m.cosh().powi(2);
            let inner = m + (0.5 * th).atanh();
            let d_inner = 1.0 + 0.5 * sech2 / (1.0 - 0.25 * th * th);
            (inner * th - q, d_inner * th + inner * sech2)
        };
        let m = roots::bracketed_newton(fdf, q - 1.0, q + 1.0, 1e-6, 1e-15, 100)?;
        let t = m.tanh();
        (t, m, -(0.5 * t).atanh())
    };
    let k = m - l;
    let sol = EquilateralSolution {
        alpha,
        area,
        coupling: q,
        t,
        k,
        l,
        m,
        lambda0: -4.0 * k * k / (h * h),
    };
    let res = sol.residuals().max_abs();
    if !(res < 1e-10) {
        return Err(Error::numeric("equilateral transcendental system", res));
    }
    Ok(sol)
}

/// Lowest Robin eigenvalue of the equilateral triangle of area `area`.
pub fn lambda0(alpha: f64, area: f64) -> Result<f64> {
    Ok(solve_equilateral(alpha, area)?.lambda0)
}

/// `A(t) = t/(1 - t²) + t/(2 (1 - t²/4))`.
pub fn a_function(t: f64) -> f64 {
    t / (1.0 - t * t) + t / (2.0 * (1.0 - 0.25 * t * t))
}

/// The unnormalised ground state `u₀` on `Ω₀`.
#[derive(Debug, Clone, Copy)]
pub struct GroundStateField {
    pub solution: EquilateralSolution,
    triangle: TriangleGeometry,
    h: f64,
}

pub fn ground_state(sol: EquilateralSolution) -> GroundStateField {
    let params = TriangleParams::equilateral(sol.area).expect("solution has positive area");
    GroundStateField {
        solution: sol,
        triangle: params.geometry(),
        h: sol.height(),
    }
}

impl GroundStateField {
    pub fn triangle(&self) -> &TriangleGeometry {
        &self.triangle
    }

    /// Evaluates `u₀`, rejecting points outside `Ω₀`.
    pub fn value_checked(&self, p: Point) -> Result<f64> {
        if !self.triangle.contains(p, 1e-12) {
            return Err(Error::domain(format!(
                "({}, {}) lies outside the equilateral triangle",
                p.x, p.y
            )));
        }
        Ok(self.value(p))
    }

    /// `Δu₀`; equals `(4K²/h²) u₀`.
    pub fn laplacian(&self, p: Point) -> f64 {
        let EquilateralSolution { k, l, m, .. } = self.solution;
        let h = self.h;
        let (x, y) = (p.x / h, p.y / h);
        let kk = k * k / (h * h);
        4.0 * kk * (l + 2.0 * k * y).cosh()
            + 2.0 * (m - k * y).cosh() * (SQRT3 * k * x).cosh() * (3.0 * kk + kk)
    }

    /// Outward normal derivative on side `side` (labels as in `geometry`).
    pub fn normal_derivative(&self, side: usize, p: Point) -> f64 {
        let v = self.triangle.vertices;
        let (i, j) = crate::geometry::SIDES[side];
        let e = v[j] - v[i];
        // vertices are counter-clockwise: outward normal of v0v1 and v1v2 is
        // the right-hand normal of the edge; v0v2 runs clockwise.
        let mut n = Point::new(e.y, -e.x).normalized();
        if side == 1 {
            n = -n;
        }
        let g = self.gradient(p);
        g[0] * n.x + g[1] * n.y
    }
}

impl ScalarField for GroundStateField {
    fn value(&self, p: Point) -> f64 {
        let EquilateralSolution { k, l, m, .. } = self.solution;
        let (x, y) = (p.x / self.h, p.y / self.h);
        (l + 2.0 * k * y).cosh() + 2.0 * (m - k * y).cosh() * (SQRT3 * k * x).cosh()
    }

    fn gradient(&self, p: Point) -> [f64; 2] {
        let EquilateralSolution { k, l, m, .. } = self.solution;
        let h = self.h;
        let (x, y) = (p.x / h, p.y / h);
        let dx = 2.0 * (m - k * y).cosh() * (SQRT3 * k / h) * (SQRT3 * k * x).sinh();
        let dy = (2.0 * k / h) * (l + 2.0 * k * y).sinh()
            - (2.0 * k / h) * (m - k * y).sinh() * (SQRT3 * k * x).cosh();
        [dx, dy]
    }
}

/// `‖∂₁u₀‖²` on the equilateral triangle with `c = S = 1/√3` (unit height).
pub fn d1_norm_sq_unit(k: f64, m: f64) -> f64 {
    reflected_d1_norm_sq(k, -m)
}

/// `‖∂₁v‖²` for the y-mirrored field `v = cosh(L - 2Ky) + 2 cosh(M + Ky) cosh(√3Kx)`
/// over the same unit-height triangle. Differs from `‖∂₁u₀‖²` unless `M = 0`.
pub fn reflected_d1_norm_sq(k: f64, m: f64) -> f64 {
    SQRT3 / 8.0
        * (-4.0 - 8.0 * k * k
            + 4.0 * (2.0 * k).cosh()
            + (2.0 * k - 2.0 * m).cosh()
            + 4.0 * (2.0 * m).cosh()
            - 5.0 * (2.0 * k + 2.0 * m).cosh()
            + 8.0 * k * (2.0 * m).sinh()
            + 4.0 * k * (2.0 * k + 2.0 * m).sinh())
}

/// `‖u₀‖²_{L²(∂Ω₀)} = 3 ‖u₀‖²_{L²(Γ⁽⁰⁾)}` for unit height.
pub fn boundary_norm_sq_unit(k: f64, l: f64, m: f64) -> f64 {
    SQRT3 / k
        * (3.0 * k
            + k * (2.0 * l).cosh()
            + 2.0 * k * (2.0 * m).cosh()
            + 8.0 * l.cosh() * m.cosh() * k.sinh()
            + 2.0 * m.cosh().powi(2) * (2.0 * k).sinh())
}

/// Squared norms of the unnormalised `u₀` on `Ω₀` of area `S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilateralNorms {
    /// `‖∂₁u₀‖²_{L²(Ω₀)}`; equals `‖∂₂u₀‖²` by symmetry.
    pub d1_sq: f64,
    pub boundary_sq: f64,
    pub l2_sq: f64,
}

impl EquilateralNorms {
    /// `‖∂₁ψ₀‖²` for the `L²`-normalised ground state.
    pub fn psi_d1_sq(&self) -> f64 {
        self.d1_sq / self.l2_sq
    }

    /// `‖∇ψ₀‖² = 2 ‖∂₁ψ₀‖²`.
    pub fn psi_grad_sq(&self) -> f64 {
        2.0 * self.d1_sq / self.l2_sq
    }

    pub fn psi_boundary_sq(&self) -> f64 {
        self.boundary_sq / self.l2_sq
    }
}

/// Closed forms for the derivative and trace norms (unit height, then
/// dilated to area `S`) and quadrature for the `L²` norm.
pub fn closed_form_norms(sol: &EquilateralSolution) -> Result<EquilateralNorms> {
    let h = sol.height();
    let d1 = d1_norm_sq_unit(sol.k, sol.m);
    let bnd = boundary_norm_sq_unit(sol.k, sol.l, sol.m);
    let unit = solve_equilateral(sol.alpha * h, 1.0 / SQRT3)?;
    let l2 = l2_norm_sq_by_quadrature(&unit)?;
    let norms = EquilateralNorms {
        d1_sq: d1,
        boundary_sq: h * bnd,
        l2_sq: h * h * l2,
    };
    if ![norms.d1_sq, norms.boundary_sq, norms.l2_sq]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0)
    {
        return Err(Error::numeric(
            "ground-state norms overflow at this coupling",
            f64::INFINITY,
        ));
    }
    Ok(norms)
}

/// `‖u₀‖²_{L²(Ω₀)}` by composite conical Gauss quadrature.
pub fn l2_norm_sq_by_quadrature(sol: &EquilateralSolution) -> Result<f64> {
    let field = ground_state(*sol);
    let v = field.triangle().vertices;
    let [val] = quadrature::integrate_triangle_adaptive(&v, 12, 1e-14, 0.0, 0, 9, &|p| {
        let u = field.value(p);
        [u * u]
    })?;
    Ok(val)
}

/// `g(t) = t/(1-t²) + t/(2(1-t²/4)) - 4 artanh t - 4 artanh(t/2)`.
pub fn g_threshold(t: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::domain(format!("g is defined on (0, 1), got t = {t}")));
    }
    Ok(a_function(t) - 4.0 * t.atanh() - 4.0 * (0.5 * t).atanh())
}

/// `t₀ = sqrt(9 - √33)/2`.
pub fn t0() -> f64 {
    (9.0 - 33f64.sqrt()).sqrt() / 2.0
}

/// Root `t̃₀` of `g` in `[0.9, 0.99]`, by bisection to `1e-10`.
pub fn g_root() -> f64 {
    static ROOT: OnceLock<f64> = OnceLock::new();
    *ROOT.get_or_init(|| {
        roots::bisect(|t| g_threshold(t).expect("t in (0,1)"), 0.9, 0.99, 1e-10, 200)
            .expect("g changes sign on [0.9, 0.99]")
    })
}

/// Thresholds on α below which local optimality is certified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaThresholds {
    /// `-(3/2) t₀² / sqrt(√3 S)` truncated toward zero to two decimals in
    /// units of `1/√S`.
    pub alpha_simple: f64,
    /// The untruncated `-(3/2) t₀² / sqrt(√3 S)`.
    pub alpha_simple_exact: f64,
    /// `-t̃₀ (artanh t̃₀ + artanh(t̃₀/2)) / sqrt(√3 S)`.
    pub alpha_improved: f64,
}

pub fn local_optimality_alpha_bound(area: f64) -> Result<AlphaThresholds> {
    if !(area > 0.0) {
        return Err(Error::domain(format!("area must be positive, got {area}")));
    }
    let h = (SQRT3 * area).sqrt();
    let t0 = t0();
    let exact = -1.5 * t0 * t0 / h;
    let per_root_area = (-exact * area.sqrt() * 100.0).floor() / 100.0;
    let tr = g_root();
    Ok(AlphaThresholds {
        alpha_simple: -per_root_area / area.sqrt(),
        alpha_simple_exact: exact,
        alpha_improved: -tr * (tr.atanh() + (0.5 * tr).atanh()) / h,
    })
}

/// Right-hand sides of the Hessian upper bounds at the equilateral point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianBounds {
    /// Upper bound on `∂²λ/∂a²`.
    pub bound_aa: f64,
    /// Upper bound on `∂²λ/∂c²`; always `12 bound_aa`.
    pub bound_cc: f64,
    /// `f(α) = ‖∇ψ₀‖²/3 + α ‖ψ₀‖²_{∂Ω₀}/8`.
    pub f_alpha: f64,
    pub psi_grad_sq: f64,
    pub psi_boundary_sq: f64,
    pub lambda0: f64,
}

pub fn hessian_upper_bounds(alpha: f64, area: f64) -> Result<HessianBounds> {
    let sol = solve_equilateral(alpha, area)?;
    let norms = closed_form_norms(&sol)?;
    let grad = norms.psi_grad_sq();
    let bnd = norms.psi_boundary_sq();
    let core = grad + alpha * 3.0 / 8.0 * bnd;
    Ok(HessianBounds {
        bound_aa: core / (SQRT3 * area),
        bound_cc: 4.0 * SQRT3 / area * core,
        f_alpha: grad / 3.0 + alpha / 8.0 * bnd,
        psi_grad_sq: grad,
        psi_boundary_sq: bnd,
        lambda0: sol.lambda0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIT: f64 = 0.577_350_269_189_625_8; // 1/√3, so sqrt(√3 S) = 1

    #[test]
    fn rejects_non_negative_alpha() {
        assert!(matches!(solve_equilateral(0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(solve_equilateral(1.0, 1.0), Err(Error::Domain(_))));
        assert!(solve_equilateral(-1.0, 0.0).is_err());
    }

    #[test]
    fn unit_coupling_matches_bisection_oracle() {
        // oracle: plain bisection on the monotone map t -> t(artanh t + artanh t/2)
        let phi = |t: f64| t * (t.atanh() + (0.5 * t).atanh()) - 1.0;
        let t_ref = roots::bisect(phi, 1e-9, 1.0 - 1e-12, 1e-16, 400).unwrap();
        let sol = solve_equilateral(-1.0, UNIT).unwrap();
        assert!((sol.t - t_ref).abs() < 1e-14);
        assert!((sol.t - 0.742).abs() < 1e-3);
        let k = t_ref.atanh() + (0.5 * t_ref).atanh();
        assert!((sol.lambda0 + 4.0 * k * k).abs() < 1e-12);
        assert!(sol.implicit_function().abs() < 1e-12);
        assert!(sol.residuals().max_abs() < 1e-13);
    }

    #[test]
    fn invariants_hold_over_log_sweep() {
        for &area in &[0.1, UNIT, 1.0, 10.0] {
            let mut prev_t = 0.0;
            for i in 0..=60 {
                // α from -1e-3 down to -1e3
                let alpha = -(10f64).powf(-3.0 + 6.0 * i as f64 / 60.0);
                let sol = solve_equilateral(alpha, area).unwrap();
                assert!(sol.residuals().max_abs() < 1e-10, "α={alpha} S={area}");
                assert!(sol.t > 0.0 && sol.t <= 1.0);
                assert!(sol.t >= prev_t, "t must grow with |α|");
                prev_t = sol.t;
                assert!(sol.k > 0.0 && sol.lambda0 < 0.0);
                assert!(sol.k < 3.0 + sol.coupling);
                let h = sol.height();
                assert!((sol.lambda0 + 4.0 * sol.k * sol.k / (h * h)).abs() <= 1e-12 * sol.lambda0.abs());
                if sol.coupling < 4.0 {
                    assert!(sol.t < 1.0);
                    assert!(sol.implicit_function().abs() < 1e-9 * sol.k.max(1.0));
                }
            }
        }
    }

    #[test]
    fn neumann_slope_at_small_coupling() {
        for &area in &[UNIT, 2.0] {
            let alpha = -1e-7;
            let slope = lambda0(alpha, area).unwrap() / alpha;
            let expected = 6.0 * (area / SQRT3).sqrt() / area;
            assert!((slope - expected).abs() < 1e-5 * expected, "{slope} vs {expected}");
        }
    }

    #[test]
    fn large_coupling_rate_is_minus_four() {
        let alpha = -1e3;
        let r = lambda0(alpha, 1.0).unwrap() / (alpha * alpha);
        assert!((r + 4.0).abs() < 1e-2);
    }

    #[test]
    fn monotone_in_area() {
        let l1 = lambda0(-1.0, 1.0).unwrap();
        let l2 = lambda0(-1.0, 2.0).unwrap();
        assert!(l1 < l2 && l2 < 0.0);
    }

    #[test]
    fn dilation_law() {
        // λ₀(α, γ²S) = γ⁻² λ₀(γα, S)
        for &(alpha, area, gamma) in &[(-1.0, 1.0, 1.7), (-0.3, 0.2, 0.4), (-5.0, 3.0, 2.5)] {
            let lhs = lambda0(alpha, gamma * gamma * area).unwrap();
            let rhs = lambda0(gamma * alpha, area).unwrap() / (gamma * gamma);
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs());
        }
    }

    #[test]
    fn log_derivative_matches_finite_differences() {
        for &alpha in &[-0.2, -1.0, -3.0] {
            let sol = solve_equilateral(alpha, UNIT).unwrap();
            let d = 1e-5 * alpha.abs();
            let kp = solve_equilateral(alpha + d, UNIT).unwrap().k;
            let km = solve_equilateral(alpha - d, UNIT).unwrap().k;
            let k_alpha = (kp - km) / (2.0 * d);
            let k_fd = alpha / sol.k * k_alpha;
            assert!((k_fd - sol.log_derivative()).abs() < 1e-8, "{k_fd} vs {}", sol.log_derivative());
        }
    }

    #[test]
    fn eigenvalue_increases_with_alpha() {
        let mut prev = f64::NEG_INFINITY;
        for i in 0..40 {
            let alpha = -8.0 + 0.2 * i as f64;
            let l = lambda0(alpha, UNIT).unwrap();
            assert!(l > prev);
            prev = l;
        }
    }

    #[test]
    fn ground_state_is_even_and_positive() {
        let g = ground_state(solve_equilateral(-2.0, 0.8).unwrap());
        let v = g.triangle().vertices;
        for i in 0..=20 {
            for j in 0..=(20 - i) {
                let s = i as f64 / 20.0;
                let t = j as f64 / 20.0;
                let p = v[0] + (v[1] - v[0]) * s + (v[2] - v[0]) * t;
                let u = g.value(p);
                assert!(u > 0.0);
                assert_eq!(u, g.value(Point::new(-p.x, p.y)));
            }
        }
        assert!(g.value_checked(Point::new(0.0, -0.1)).is_err());
    }

    #[test]
    fn ground_state_solves_helmholtz_and_robin() {
        let sol = solve_equilateral(-1.3, 0.7).unwrap();
        let g = ground_state(sol);
        let v = g.triangle().vertices;
        let mut seed = 12345u64;
        let mut rnd = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let (mut s, mut t) = (rnd(), rnd());
            if s + t > 1.0 {
                s = 1.0 - s;
                t = 1.0 - t;
            }
            let p = v[0] + (v[1] - v[0]) * s + (v[2] - v[0]) * t;
            let u = g.value(p);
            let res = (-g.laplacian(p) - sol.lambda0 * u).abs();
            assert!(res < 1e-8 * (sol.lambda0 * u).abs());
        }
        for side in 0..3 {
            let (i, j) = crate::geometry::SIDES[side];
            for k in 0..=10 {
                let p = v[i] + (v[j] - v[i]) * (k as f64 / 10.0);
                let r = g.normal_derivative(side, p) + sol.alpha * g.value(p);
                assert!(r.abs() < 1e-6 * g.value(p), "side {side}: {r}");
            }
        }
    }

    #[test]
    fn threshold_constants() {
        assert!((g_threshold(0.1).unwrap() + 0.45).abs() < 5e-3);
        let t0 = t0();
        assert!((t0 - 0.9021).abs() < 1e-4);
        assert!(g_threshold(t0).unwrap() < 0.0);
        assert!((g_root() - 0.943).abs() < 1e-2);
        assert!(g_threshold(0.0).is_err() && g_threshold(1.0).is_err());
    }

    #[test]
    fn alpha_thresholds_scale_with_area() {
        let one = local_optimality_alpha_bound(1.0).unwrap();
        assert_eq!(one.alpha_simple, -0.92);
        assert!((one.alpha_improved + 1.63).abs() < 5e-3 * 1.63);
        assert!(one.alpha_simple_exact <= one.alpha_simple);
        let four = local_optimality_alpha_bound(4.0).unwrap();
        assert!((four.alpha_simple + 0.46).abs() < 1e-12);
        assert!((four.alpha_improved - one.alpha_improved / 2.0).abs() < 1e-12);
    }

    #[test]
    fn g_negative_above_simple_threshold() {
        for &area in &[0.3, 1.0, 5.0] {
            let th = local_optimality_alpha_bound(area).unwrap();
            for i in 0..50 {
                let alpha = th.alpha_simple * (1.0 - i as f64 / 50.0);
                let sol = solve_equilateral(alpha, area).unwrap();
                assert!(sol.t <= t0() + 1e-12);
                assert!(g_threshold(sol.t).unwrap() < 0.0);
            }
        }
    }

    #[test]
    fn hessian_bound_identities() {
        let hb = hessian_upper_bounds(-0.5, UNIT).unwrap();
        assert!(hb.bound_aa < 0.0 && hb.bound_cc < 0.0);
        assert!((hb.bound_cc - 12.0 * hb.bound_aa).abs() < 1e-12 * hb.bound_cc.abs());
        // variational identity λ₀ = ‖∇ψ₀‖² + α‖ψ₀‖²_∂
        let lhs = hb.psi_grad_sq;
        let rhs = hb.lambda0 - (-0.5) * hb.psi_boundary_sq;
        assert!((lhs - rhs).abs() < 1e-8 * lhs.abs());
        for &alpha in &[-0.3, -1.0, -2.5, -4.0] {
            let hb = hessian_upper_bounds(alpha, UNIT).unwrap();
            let sol = solve_equilateral(alpha, UNIT).unwrap();
            let g = g_threshold(sol.t).unwrap();
            assert_eq!(hb.f_alpha < 0.0, g < 0.0, "α={alpha}");
        }
    }

    #[test]
    fn boundary_slope_matches_derivative_of_lambda() {
        // dλ₀/dα = ‖ψ₀‖²_{∂Ω₀}
        for &alpha in &[-0.1, -1.0, -2.0] {
            let hb = hessian_upper_bounds(alpha, UNIT).unwrap();
            let d = 1e-5;
            let slope = (lambda0(alpha + d, UNIT).unwrap() - lambda0(alpha - d, UNIT).unwrap()) / (2.0 * d);
            assert!(slope > 0.0);
            assert!((slope - hb.psi_boundary_sq).abs() < 1e-6 * slope);
        }
    }

    #[test]
    fn closed_forms_agree_with_quadrature() {
        for &alpha in &[-0.5, -2.0, -8.0] {
            let sol = solve_equilateral(alpha, UNIT).unwrap();
            let g = ground_state(sol);
            let v = g.triangle().vertices;
            let [d1, d2] = quadrature::integrate_triangle_adaptive(&v, 12, 1e-13, 0.0, 0, 8, &|p| {
                let [gx, gy] = g.gradient(p);
                [gx * gx, gy * gy]
            })
            .unwrap();
            let [b0] =
                quadrature::integrate_segment_adaptive(v[0], v[1], 20, 1e-14, 0.0, &|p| {
                    let u = g.value(p);
                    [u * u]
                })
                .unwrap();
            let closed = d1_norm_sq_unit(sol.k, sol.m);
            assert!((closed - d1).abs() < 1e-10 * d1, "α={alpha}: {closed} vs {d1}");
            assert!((d1 - d2).abs() < 1e-10 * d1);
            let bnd = boundary_norm_sq_unit(sol.k, sol.l, sol.m);
            assert!((bnd - 3.0 * b0).abs() < 1e-10 * bnd);
            let mirrored = reflected_d1_norm_sq(sol.k, sol.m);
            assert!((mirrored - d1).abs() > 1e-3 * d1);
        }
    }
}
