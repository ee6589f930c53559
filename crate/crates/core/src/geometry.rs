//! Triangles of fixed area parameterised by apex offset `a` and half-base `c`.
//!
//! `Ω_{a,c}` has vertices `(-c, 0)`, `(c, 0)` and `(a, S/c)`, so its area is
//! `S` for every `(a, c)`. The equilateral member is `a = 0`,
//! `c = c₀ = sqrt(S/√3)`. Vertices are always listed in that order; side `k`
//! follows the labelling `Γ⁽⁰⁾ = v0v1` (base), `Γ⁽¹⁾ = v0v2` (left) and
//! `Γ⁽²⁾ = v1v2` (right).

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Angles below this are flagged as numerically degenerate.
pub const DEGENERATE_ANGLE: f64 = 1e-6;

/// Relative slack used to break ties between equal smallest angles.
const ANGLE_TIE_TOL: f64 = 1e-12;

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn normalized(self) -> Point {
        self * (1.0 / self.norm())
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Half-base of the equilateral triangle of area `area`.
pub fn equilateral_half_base(area: f64) -> f64 {
    (area / SQRT3).sqrt()
}

/// Perimeter of the equilateral triangle of area `area`.
pub fn equilateral_perimeter(area: f64) -> f64 {
    6.0 * equilateral_half_base(area)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleParams {
    pub a: f64,
    pub c: f64,
    pub area: f64,
}

impl TriangleParams {
    pub fn new(a: f64, c: f64, area: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::domain(format!("half-base c must be positive, got {c}")));
        }
        if !(area > 0.0) || !area.is_finite() {
            return Err(Error::domain(format!("area S must be positive, got {area}")));
        }
        if !a.is_finite() {
            return Err(Error::domain(format!("apex offset a must be finite, got {a}")));
        }
        Ok(TriangleParams { a, c, area })
    }

    /// The equilateral member of the family.
    pub fn equilateral(area: f64) -> Result<Self> {
        Self::new(0.0, equilateral_half_base(area), area)
    }

    /// Apex height `b = S / c`.
    pub fn height(&self) -> f64 {
        self.area / self.c
    }

    pub fn vertices(&self) -> [Point; 3] {
        [
            Point::new(-self.c, 0.0),
            Point::new(self.c, 0.0),
            Point::new(self.a, self.height()),
        ]
    }

    /// Closed-form perimeter `2c + sqrt(S²/c² + (a-c)²) + sqrt(S²/c² + (a+c)²)`.
    pub fn perimeter(&self) -> f64 {
        let b = self.height();
        2.0 * self.c + b.hypot(self.a - self.c) + b.hypot(self.a + self.c)
    }

    /// Distance of `(a, c)` from the equilateral point in the `|a| + |c - c₀|` sense.
    pub fn deviation_from_equilateral(&self) -> f64 {
        self.a.abs() + (self.c - equilateral_half_base(self.area)).abs()
    }

    pub fn is_equilateral(&self, tol: f64) -> bool {
        self.deviation_from_equilateral() < tol
    }

    /// The dilated triangle `γ Ω_{a,c}` in the same parameterisation.
    pub fn dilated(&self, gamma: f64) -> Result<Self> {
        Self::new(gamma * self.a, gamma * self.c, gamma * gamma * self.area)
    }

    pub fn geometry(&self) -> TriangleGeometry {
        TriangleGeometry::from_params(*self)
    }

    pub fn affine_map(&self) -> AffineMap {
        AffineMap::new(self)
    }
}

/// Smallest-angle data used to anchor the sector trial function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallestAngle {
    pub theta_star: f64,
    /// Length of the shorter side adjacent to the smallest angle.
    pub l_prime: f64,
    pub vertex: usize,
    pub apex: Point,
    /// Unit vector along the interior bisector.
    pub bisector: Point,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleGeometry {
    pub params: TriangleParams,
    pub vertices: [Point; 3],
    /// Lengths of `Γ⁽⁰⁾ = v0v1`, `Γ⁽¹⁾ = v0v2`, `Γ⁽²⁾ = v1v2`.
    pub side_lengths: [f64; 3],
    pub perimeter: f64,
    /// Interior angles at `v0`, `v1`, `v2`.
    pub angles: [f64; 3],
    pub theta_star: f64,
    pub l_prime: f64,
    /// Set when the smallest angle is below [`DEGENERATE_ANGLE`].
    pub degenerate: bool,
}

/// Edges as vertex-index pairs in side-label order.
pub const SIDES: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

impl TriangleGeometry {
    fn from_params(params: TriangleParams) -> Self {
        let v = params.vertices();
        let side_lengths = SIDES.map(|(i, j)| (v[j] - v[i]).norm());
        let perimeter = side_lengths.iter().sum();
        let angles = [0, 1, 2].map(|k| {
            let p = v[(k + 1) % 3] - v[k];
            let q = v[(k + 2) % 3] - v[k];
            p.cross(q).abs().atan2(p.dot(q))
        });
        let mut geom = TriangleGeometry {
            params,
            vertices: v,
            side_lengths,
            perimeter,
            angles,
            theta_star: 0.0,
            l_prime: 0.0,
            degenerate: false,
        };
        let s = geom.smallest_angle_data();
        geom.theta_star = s.theta_star;
        geom.l_prime = s.l_prime;
        geom.degenerate = s.theta_star < DEGENERATE_ANGLE;
        geom
    }

    /// Length of the side joining vertices `i` and `j`.
    pub fn side_between(&self, i: usize, j: usize) -> f64 {
        (self.vertices[j] - self.vertices[i]).norm()
    }

    /// Smallest angle, shorter adjacent side, apex and inward bisector.
    /// Ties go to the lowest vertex index.
    pub fn smallest_angle_data(&self) -> SmallestAngle {
        let min = self.angles.iter().cloned().fold(f64::INFINITY, f64::min);
        let k = (0..3)
            .find(|&k| self.angles[k] <= min * (1.0 + ANGLE_TIE_TOL))
            .unwrap_or(0);
        self.angle_data_at(k)
    }

    /// Angle data anchored at vertex `k` regardless of whether it is smallest.
    pub fn angle_data_at(&self, k: usize) -> SmallestAngle {
        let apex = self.vertices[k];
        let p = self.vertices[(k + 1) % 3] - apex;
        let q = self.vertices[(k + 2) % 3] - apex;
        let bisector = (p.normalized() + q.normalized()).normalized();
        SmallestAngle {
            theta_star: self.angles[k],
            l_prime: p.norm().min(q.norm()),
            vertex: k,
            apex,
            bisector,
        }
    }

    /// `γ_{a,c} = |∂Ω₀| / |∂Ω_{a,c}|`.
    pub fn perimeter_normalizer(&self) -> f64 {
        equilateral_perimeter(self.params.area) / self.perimeter
    }

    /// Signed area from the vertex coordinates.
    pub fn signed_area(&self) -> f64 {
        0.5 * (self.vertices[1] - self.vertices[0]).cross(self.vertices[2] - self.vertices[0])
    }

    /// True if `p` lies in the closed triangle up to `tol` (absolute, in
    /// barycentric units).
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        let [l0, l1, l2] = self.barycentric(p);
        l0 >= -tol && l1 >= -tol && l2 >= -tol
    }

    pub fn barycentric(&self, p: Point) -> [f64; 3] {
        let [v0, v1, v2] = self.vertices;
        let d = (v1 - v0).cross(v2 - v0);
        let l1 = (p - v0).cross(v2 - v0) / d;
        let l2 = (v1 - v0).cross(p - v0) / d;
        [1.0 - l1 - l2, l1, l2]
    }
}

/// Convenience constructor mirroring `TriangleParams::new(..).geometry()`.
pub fn make_triangle(a: f64, c: f64, area: f64) -> Result<TriangleGeometry> {
    Ok(TriangleParams::new(a, c, area)?.geometry())
}

/// `min_a l(a) = l(0) = 2c + 2 sqrt(c² + S²/c²)`.
pub fn perimeter_min_over_a(c: f64, area: f64) -> Result<f64> {
    let p = TriangleParams::new(0.0, c, area)?;
    Ok(2.0 * c + 2.0 * c.hypot(p.height()))
}

/// Affine identification `𝓛_{a,c}: Ω₀ → Ω_{a,c}`,
/// `(x, y) ↦ (c/c₀ x + a/sqrt(√3 S) y, c₀/c y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    /// Jacobian, row-major.
    pub matrix: [[f64; 2]; 2],
    pub inverse_matrix: [[f64; 2]; 2],
    /// `G = JᵀJ`, the pulled-back metric (unit determinant).
    pub metric: [[f64; 2]; 2],
    pub inverse_metric: [[f64; 2]; 2],
}

impl AffineMap {
    pub fn new(p: &TriangleParams) -> Self {
        let (a, c, s) = (p.a, p.c, p.area);
        let c0 = equilateral_half_base(s);
        let h0 = (SQRT3 * s).sqrt();
        let matrix = [[c / c0, a / h0], [0.0, c0 / c]];
        let inverse_matrix = [[c0 / c, -a / h0], [0.0, c / c0]];
        let metric = [
            [c * c * SQRT3 / s, a * c / s],
            [a * c / s, a * a / (SQRT3 * s) + s / (SQRT3 * c * c)],
        ];
        let inverse_metric = [
            [(a * a * c * c + s * s) / (SQRT3 * c * c * s), -a * c / s],
            [-a * c / s, SQRT3 * c * c / s],
        ];
        AffineMap {
            matrix,
            inverse_matrix,
            metric,
            inverse_metric,
        }
    }

    pub fn apply(&self, p: Point) -> Point {
        let m = &self.matrix;
        Point::new(m[0][0] * p.x + m[0][1] * p.y, m[1][0] * p.x + m[1][1] * p.y)
    }

    pub fn apply_inverse(&self, p: Point) -> Point {
        let m = &self.inverse_matrix;
        Point::new(m[0][0] * p.x + m[0][1] * p.y, m[1][0] * p.x + m[1][1] * p.y)
    }

    pub fn metric_determinant(&self) -> f64 {
        let g = &self.metric;
        g[0][0] * g[1][1] - g[0][1] * g[1][0]
    }
}

/// All angles equal `π/3` within `tol`.
pub fn angles_equilateral(angles: &[f64; 3], tol: f64) -> bool {
    angles.iter().all(|t| (t - PI / 3.0).abs() < tol)
}
