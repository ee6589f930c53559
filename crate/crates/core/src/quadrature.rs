//! Gauss–Legendre rules on segments and conical-product rules on triangles.
//!
//! Triangle rules collapse the unit square onto the triangle (Duffy map) and
//! take a tensor Gauss–Legendre rule on the square; a rule built from `n`
//! points per direction integrates polynomials of total degree `2n - 2`
//! exactly. Composite versions split the triangle into `4^k` congruent pieces.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Cached Gauss–Legendre rule mapped to `[0, 1]`.
pub fn unit_gauss_legendre(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static (Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard.entry(n).or_insert_with(|| {
        let (x, w) = gauss_legendre(n);
        let nodes = x.iter().map(|&t| 0.5 * (t + 1.0)).collect();
        let weights = w.iter().map(|&t| 0.5 * t).collect();
        Box::leak(Box::new((nodes, weights)))
    })
}

/// Quadrature rule on the reference triangle `(0,0), (1,0), (0,1)`.
///
/// Points are barycentric pairs `(s, t)` meaning `v0 + s (v1 - v0) + t (v2 - v0)`;
/// weights sum to one (they are fractions of the triangle area).
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Conical-product rule with `n` Gauss points per direction.
    pub fn conical(n: usize) -> Self {
        let (x, w) = unit_gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (&u, &wu) in x.iter().zip(w) {
            for (&v, &wv) in x.iter().zip(w) {
                points.push((u * (1.0 - v), u * v));
                // Jacobian of the collapse is u; normalise by reference area 1/2.
                weights.push(2.0 * wu * wv * u);
            }
        }
        TriangleRule { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn signed_area(v: &[Point; 3]) -> f64 {
    0.5 * ((v[1].x - v[0].x) * (v[2].y - v[0].y) - (v[2].x - v[0].x) * (v[1].y - v[0].y))
}

/// Visits the `4^level` congruent sub-triangles of the lattice subdivision.
pub fn for_each_subtriangle(v: &[Point; 3], level: u32, mut visit: impl FnMut([Point; 3])) {
    let n = 1usize << level;
    let nf = n as f64;
    let node = |i: usize, j: usize| {
        let s = i as f64 / nf;
        let t = j as f64 / nf;
        v[0] + (v[1] - v[0]) * s + (v[2] - v[0]) * t
    };
    for j in 0..n {
        for i in 0..(n - j) {
            visit([node(i, j), node(i + 1, j), node(i, j + 1)]);
            if i + j + 1 < n {
                visit([node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)]);
            }
        }
    }
}

/// Integrates `f` over the triangle `v` with the composite rule at the given
/// refinement level. `f` may return several integrands at once.
pub fn integrate_triangle<const N: usize>(
    v: &[Point; 3],
    rule: &TriangleRule,
    level: u32,
    f: &impl Fn(Point) -> [f64; N],
) -> [f64; N] {
    let mut acc = [0.0; N];
    for_each_subtriangle(v, level, |t| {
        let area = signed_area(&t).abs();
        let e1 = t[1] - t[0];
        let e2 = t[2] - t[0];
        for (&(s, r), &w) in rule.points.iter().zip(&rule.weights) {
            let vals = f(t[0] + e1 * s + e2 * r);
            for k in 0..N {
                acc[k] += area * w * vals[k];
            }
        }
    });
    acc
}

/// Refines until two consecutive levels agree to `rel_tol` in every component
/// (relative to the largest component magnitude, with `abs_floor` as the
/// floor), starting at `start_level`.
pub fn integrate_triangle_adaptive<const N: usize>(
    v: &[Point; 3],
    order: usize,
    rel_tol: f64,
    abs_floor: f64,
    start_level: u32,
    max_level: u32,
    f: &impl Fn(Point) -> [f64; N],
) -> Result<[f64; N]> {
    let rule = TriangleRule::conical(order);
    let mut prev = integrate_triangle(v, &rule, start_level, f);
    let mut worst = f64::INFINITY;
    for level in (start_level + 1)..=max_level {
        let next = integrate_triangle(v, &rule, level, f);
        let scale = next
            .iter()
            .fold(abs_floor, |m, x| if x.abs() > m { x.abs() } else { m });
        worst = prev
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs() / scale)
            .fold(0.0, f64::max);
        if worst <= rel_tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::numeric(
        "triangle quadrature did not converge between refinement levels",
        worst,
    ))
}

/// Integrates `f` with respect to arc length over the segment `p -> q`, using
/// `panels` equal panels of an `order`-point Gauss rule.
pub fn integrate_segment<const N: usize>(
    p: Point,
    q: Point,
    order: usize,
    panels: usize,
    f: &impl Fn(Point) -> [f64; N],
) -> [f64; N] {
    let (x, w) = unit_gauss_legendre(order);
    let len = (q - p).norm();
    let h = 1.0 / panels as f64;
    let mut acc = [0.0; N];
    for k in 0..panels {
        let a = k as f64 * h;
        for (&s, &ws) in x.iter().zip(w) {
            let vals = f(p + (q - p) * (a + s * h));
            for m in 0..N {
                acc[m] += len * h * ws * vals[m];
            }
        }
    }
    acc
}

/// Doubles the panel count until two consecutive results agree to `rel_tol`.
pub fn integrate_segment_adaptive<const N: usize>(
    p: Point,
    q: Point,
    order: usize,
    rel_tol: f64,
    abs_floor: f64,
    f: &impl Fn(Point) -> [f64; N],
) -> Result<[f64; N]> {
    let mut panels = 1;
    let mut prev = integrate_segment(p, q, order, panels, f);
    let mut worst = f64::INFINITY;
    for _ in 0..14 {
        panels *= 2;
        let next = integrate_segment(p, q, order, panels, f);
        let scale = next
            .iter()
            .fold(abs_floor, |m, x| if x.abs() > m { x.abs() } else { m });
        worst = prev
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs() / scale)
            .fold(0.0, f64::max);
        if worst <= rel_tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::numeric("segment quadrature did not converge", worst))
}

/// Duffy-collapsed rule graded toward `v[0]`: the radial variable is split at
/// `2⁻¹, 2⁻², …, 2⁻ᵈ` and each panel gets an `order`-point Gauss rule in both
/// directions. Suited to integrands concentrated at `v[0]`.
pub fn integrate_triangle_toward_apex<const N: usize>(
    v: &[Point; 3],
    order: usize,
    depth: u32,
    f: &impl Fn(Point) -> [f64; N],
) -> [f64; N] {
    let (x, w) = unit_gauss_legendre(order);
    let area = signed_area(v).abs();
    let e1 = v[1] - v[0];
    let e2 = v[2] - v[0];
    let mut acc = [0.0; N];
    for (lo, hi) in geometric_panels(depth) {
        let width = hi - lo;
        for (&su, &wu) in x.iter().zip(w) {
            let u = lo + width * su;
            for (&sv, &wv) in x.iter().zip(w) {
                let vals = f(v[0] + e1 * (u * (1.0 - sv)) + e2 * (u * sv));
                let weight = 2.0 * area * width * wu * wv * u;
                for k in 0..N {
                    acc[k] += weight * vals[k];
                }
            }
        }
    }
    acc
}

/// Arc-length integral over `p -> q` on panels graded geometrically toward `p`.
pub fn integrate_segment_toward_start<const N: usize>(
    p: Point,
    q: Point,
    order: usize,
    depth: u32,
    f: &impl Fn(Point) -> [f64; N],
) -> [f64; N] {
    let (x, w) = unit_gauss_legendre(order);
    let len = (q - p).norm();
    let mut acc = [0.0; N];
    for (lo, hi) in geometric_panels(depth) {
        let width = hi - lo;
        for (&s, &ws) in x.iter().zip(w) {
            let vals = f(p + (q - p) * (lo + width * s));
            for k in 0..N {
                acc[k] += len * width * ws * vals[k];
            }
        }
    }
    acc
}

fn geometric_panels(depth: u32) -> impl Iterator<Item = (f64, f64)> {
    let floor = 0.5f64.powi(depth as i32);
    std::iter::once((0.0, floor)).chain((0..depth).rev().map(|k| {
        let lo = 0.5f64.powi(k as i32 + 1);
        (lo, 2.0 * lo)
    }))
}

/// Increases order and grading depth of [`integrate_triangle_toward_apex`]
/// until two consecutive results agree to `rel_tol`.
pub fn integrate_triangle_toward_apex_adaptive<const N: usize>(
    v: &[Point; 3],
    rel_tol: f64,
    abs_floor: f64,
    f: &impl Fn(Point) -> [f64; N],
) -> Result<[f64; N]> {
    graded_refinement(rel_tol, abs_floor, "apex-graded triangle quadrature did not converge", |order, depth| {
        integrate_triangle_toward_apex(v, order, depth, f)
    })
}

/// Segment counterpart of [`integrate_triangle_toward_apex_adaptive`].
pub fn integrate_segment_toward_start_adaptive<const N: usize>(
    p: Point,
    q: Point,
    rel_tol: f64,
    abs_floor: f64,
    f: &impl Fn(Point) -> [f64; N],
) -> Result<[f64; N]> {
    graded_refinement(rel_tol, abs_floor, "graded segment quadrature did not converge", |order, depth| {
        integrate_segment_toward_start(p, q, order, depth, f)
    })
}

fn graded_refinement<const N: usize>(
    rel_tol: f64,
    abs_floor: f64,
    what: &'static str,
    rule: impl Fn(usize, u32) -> [f64; N],
) -> Result<[f64; N]> {
    let mut prev = rule(10, 12);
    let mut worst = f64::INFINITY;
    for step in 1..6 {
        let next = rule(10 + 4 * step, 12 + 8 * step as u32);
        let scale = next
            .iter()
            .fold(abs_floor, |m, x| if x.abs() > m { x.abs() } else { m });
        worst = prev
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs() / scale)
            .fold(0.0, f64::max);
        if worst <= rel_tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::numeric(what, worst))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_weights_sum_to_two() {
        for n in 1..40 {
            let (_, w) = gauss_legendre(n);
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} sum={s}");
        }
    }

    #[test]
    fn gauss_legendre_exact_to_degree_2n_minus_1() {
        let n = 7;
        let (x, w) = gauss_legendre(n);
        for deg in 0..(2 * n) {
            let q: f64 = x.iter().zip(&w).map(|(&x, &w)| w * x.powi(deg as i32)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "deg {deg}: {q} vs {exact}");
        }
    }

    #[test]
    fn conical_rule_integrates_monomials() {
        // ∫_T s^p t^q = p! q! / (p+q+2)! over the reference triangle (area 1/2)
        let rule = TriangleRule::conical(6);
        let fact = |k: u32| (1..=k).map(|i| i as f64).product::<f64>();
        for p in 0..6u32 {
            for q in 0..(6 - p) {
                let got: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&(s, t), &w)| 0.5 * w * s.powi(p as i32) * t.powi(q as i32))
                    .sum();
                let exact = fact(p) * fact(q) / fact(p + q + 2);
                assert!((got - exact).abs() < 1e-15, "s^{p} t^{q}");
            }
        }
    }

    #[test]
    fn composite_rule_preserves_area() {
        let v = [Point::new(-1.0, 0.0), Point::new(2.0, 0.5), Point::new(0.3, 2.0)];
        let rule = TriangleRule::conical(3);
        for level in 0..4 {
            let [a] = integrate_triangle(&v, &rule, level, &|_| [1.0]);
            assert!((a - signed_area(&v)).abs() < 1e-14);
        }
    }

    #[test]
    fn adaptive_converges_on_steep_exponential() {
        let v = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        // ∫∫ e^{-40x} over the triangle = ∫_0^1 (1-x) e^{-40x} dx
        let b: f64 = 40.0;
        let exact = 1.0 / b - (1.0 - (-b).exp()) / (b * b);
        let [got] =
            integrate_triangle_adaptive(&v, 10, 1e-13, 0.0, 0, 8, &|p| [(-b * p.x).exp()]).unwrap();
        assert!((got - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn apex_graded_rule_handles_sharp_peak() {
        let v = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        let b: f64 = 3000.0;
        // ∫∫ e^{-b(x+y)} over the triangle = (1 - e^{-b}(1 + b)) / b²
        let exact = (1.0 - (-b).exp() * (1.0 + b)) / (b * b);
        let [got] = integrate_triangle_toward_apex_adaptive(&v, 1e-13, 0.0, &|p| [(-b * (p.x + p.y)).exp()]).unwrap();
        assert!((got - exact).abs() < 1e-12 * exact);
        let [area] = integrate_triangle_toward_apex(&v, 4, 3, &|_| [1.0]);
        assert!((area - 0.5).abs() < 1e-15);
        let [seg] = integrate_segment_toward_start_adaptive(v[0], v[1], 1e-13, 0.0, &|p| [(-b * p.x).exp()]).unwrap();
        assert!((seg - (1.0 - (-b).exp()) / b).abs() < 1e-12 * seg);
    }

    #[test]
    fn segment_rule_measures_length() {
        let p = Point::new(0.0, 0.0);
        let q = Point::new(3.0, 4.0);
        let [l] = integrate_segment(p, q, 4, 3, &|_| [1.0]);
        assert!((l - 5.0).abs() < 1e-14);
    }
}
