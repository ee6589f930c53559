//! P1 finite elements for the Robin eigenvalue problem on a triangle.
//!
//! Meshes are the regular `4ⁿ` subdivision of the triangle, optionally pulled
//! toward chosen vertices by a radial power map. The discrete problem
//! `(K + αB) u = λ M u` is solved by shift-and-invert power iteration with a
//! banded Cholesky factorisation of the shifted matrix.

use std::f64::consts::PI;
use std::io::{self, Write};

use crate::equilateral;
use crate::error::{Error, Result};
use crate::geometry::{Point, TriangleGeometry, TriangleParams, SIDES};
use crate::sparse::{pcg_jacobi, BandedCholesky, CsrMatrix};

/// Largest refinement level accepted by [`build_mesh`].
pub const MAX_LEVEL: u32 = 10;

/// Grading is switched on at a vertex when `|α| L / sin(θ/2)` exceeds this.
pub const GRADING_TRIGGER: f64 = 24.0;

const MAX_POWER_ITERATIONS: usize = 500;
const RAYLEIGH_TOL: f64 = 1e-12;
const MAX_SHIFT_DOUBLINGS: usize = 60;
const NOISE_FLOOR_ITERATIONS: usize = 30;
const SHIFT_UPDATE_INTERVAL: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct FemMesh {
    pub nodes: Vec<Point>,
    pub elements: Vec<[usize; 3]>,
    /// Node pair and side label (`0`: v0v1, `1`: v0v2, `2`: v1v2).
    pub boundary_edges: Vec<([usize; 2], usize)>,
    pub refinement_level: u32,
    /// Attraction strength `β` per vertex; `0` means none.
    pub grading: [f64; 3],
    /// Obtuse vertex whose altitude splits the triangle, if any.
    pub split_vertex: Option<usize>,
}

impl FemMesh {
    /// Plain-text dump: `node k x y`, `element k i j l`, `edge i j side`.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# level {} nodes {} elements {}", self.refinement_level, self.nodes.len(), self.elements.len())?;
        for (k, p) in self.nodes.iter().enumerate() {
            writeln!(w, "node {k} {:.17e} {:.17e}", p.x, p.y)?;
        }
        for (k, e) in self.elements.iter().enumerate() {
            writeln!(w, "element {k} {} {} {}", e[0], e[1], e[2])?;
        }
        for ([i, j], side) in &self.boundary_edges {
            writeln!(w, "edge {i} {j} {side}")?;
        }
        Ok(())
    }
}

fn lattice_index(n: usize, i: usize, j: usize) -> usize {
    j * (n + 1) - j * (j.saturating_sub(1)) / 2 + i
}

/// Vertex attraction `λ'_m ∝ λ_m exp(β_m λ_m)`: near vertex `k` the lattice
/// shrinks by `e^{-β_k}`; sides are mapped onto themselves.
fn warp(bary: [f64; 3], beta: &[f64; 3]) -> [f64; 3] {
    if beta.iter().all(|&b| b == 0.0) {
        return bary;
    }
    let bmax = beta.iter().cloned().fold(0.0, f64::max);
    let w = [0, 1, 2].map(|m| bary[m] * (beta[m] * bary[m] - bmax).exp());
    let total: f64 = w.iter().sum();
    w.map(|x| x / total)
}

fn lattice_point(v: &[Point; 3], exps: &[f64; 3], n: usize, i: usize, j: usize) -> Point {
    let nf = n as f64;
    let (s, t) = (i as f64 / nf, j as f64 / nf);
    let mut bary = [1.0 - s - t, s, t];
    if i + j == n {
        bary[0] = 0.0;
    }
    bary = warp(bary, exps);
    v[0] * bary[0] + v[1] * bary[1] + v[2] * bary[2]
}

/// Elements of the regular lattice, oriented counter-clockwise.
fn lattice_elements(n: usize, ccw: bool, idx: impl Fn(usize, usize) -> usize, out: &mut Vec<[usize; 3]>) {
    let mut push = |e: [usize; 3]| out.push(if ccw { e } else { [e[0], e[2], e[1]] });
    for j in 0..n {
        for i in 0..(n - j) {
            push([idx(i, j), idx(i + 1, j), idx(i, j + 1)]);
            if i + j + 1 < n {
                push([idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
    }
}

fn side_label(i: usize, j: usize) -> usize {
    let key = (i.min(j), i.max(j));
    SIDES.iter().position(|&s| s == key).expect("distinct vertices")
}

fn check_mesh_request(level: u32, grading: &[f64; 3]) -> Result<()> {
    if level > MAX_LEVEL {
        return Err(Error::Resource(format!(
            "refinement level {level} exceeds the cap {MAX_LEVEL}"
        )));
    }
    if grading.iter().any(|&b| !(b >= 0.0) || !b.is_finite()) {
        return Err(Error::domain(format!("grading strengths must be finite and >= 0, got {grading:?}")));
    }
    Ok(())
}

/// Uniform mesh at `level`: the `4ⁿ` congruent sub-triangles.
pub fn build_mesh(tri: &TriangleGeometry, level: u32) -> Result<FemMesh> {
    build_graded_mesh(tri, level, [0.0; 3])
}

/// Regular lattice at `level` warped toward vertices with strengths `grading`.
pub fn build_graded_mesh(tri: &TriangleGeometry, level: u32, grading: [f64; 3]) -> Result<FemMesh> {
    check_mesh_request(level, &grading)?;
    let n = 1usize << level;
    let v = tri.vertices;
    let mut nodes = Vec::with_capacity((n + 1) * (n + 2) / 2);
    for j in 0..=n {
        for i in 0..=(n - j) {
            nodes.push(lattice_point(&v, &grading, n, i, j));
        }
    }
    let idx = |i, j| lattice_index(n, i, j);
    let mut elements = Vec::with_capacity(n * n);
    lattice_elements(n, tri.signed_area() > 0.0, idx, &mut elements);
    let mut boundary_edges = Vec::with_capacity(3 * n);
    for k in 0..n {
        boundary_edges.push(([idx(k, 0), idx(k + 1, 0)], 0));
        boundary_edges.push(([idx(0, k), idx(0, k + 1)], 1));
        boundary_edges.push(([idx(n - k, k), idx(n - k - 1, k + 1)], 2));
    }
    Ok(FemMesh {
        nodes,
        elements,
        boundary_edges,
        refinement_level: level,
        grading,
        split_vertex: None,
    })
}

/// Vertex with an angle above `π/2`, if any.
pub fn obtuse_vertex(tri: &TriangleGeometry) -> Option<usize> {
    (0..3).find(|&k| tri.angles[k] > 0.5 * PI + 1e-9)
}

/// Mesh used by the eigensolver: the regular lattice for non-obtuse
/// triangles; otherwise the two right triangles cut off by the altitude from
/// the obtuse vertex, each carrying a regular lattice at `level`.
pub fn build_solver_mesh(tri: &TriangleGeometry, level: u32, grading: [f64; 3]) -> Result<FemMesh> {
    let Some(k) = obtuse_vertex(tri) else {
        return build_graded_mesh(tri, level, grading);
    };
    check_mesh_request(level, &grading)?;
    let n = 1usize << level;
    let (p, q) = ((k + 1) % 3, (k + 2) % 3);
    let v = tri.vertices;
    let d = v[q] - v[p];
    let foot = v[p] + d * ((v[k] - v[p]).dot(d) / d.dot(d));
    let halves = [([v[k], foot, v[p]], [grading[k], 0.0, grading[p]], p), ([v[k], foot, v[q]], [grading[k], 0.0, grading[q]], q)];

    // Row 0 (the shared altitude) first, then rows j >= 1 of both halves interleaved.
    let base = |j: usize| if j == 0 { 0 } else { (n + 1) + (1..j).map(|r| 2 * (n + 1 - r)).sum::<usize>() };
    let index = |half: usize, i: usize, j: usize| {
        if j == 0 {
            i
        } else {
            base(j) + half * (n + 1 - j) + i
        }
    };
    let total = index(1, 0, n) + 1;
    let mut nodes = vec![Point::new(0.0, 0.0); total];
    for (h, (sub, exps, _)) in halves.iter().enumerate() {
        for j in 0..=n {
            for i in 0..=(n - j) {
                if j == 0 && h == 1 {
                    continue;
                }
                nodes[index(h, i, j)] = lattice_point(sub, exps, n, i, j);
            }
        }
    }
    let mut elements = Vec::with_capacity(2 * n * n);
    let mut boundary_edges = Vec::with_capacity(4 * n);
    for (h, (sub, _, far)) in halves.iter().enumerate() {
        let ccw = (sub[1] - sub[0]).cross(sub[2] - sub[0]) > 0.0;
        lattice_elements(n, ccw, |i, j| index(h, i, j), &mut elements);
        for s in 0..n {
            boundary_edges.push(([index(h, 0, s), index(h, 0, s + 1)], side_label(k, *far)));
            boundary_edges.push(([index(h, n - s, s), index(h, n - s - 1, s + 1)], side_label(p, q)));
        }
    }
    Ok(FemMesh {
        nodes,
        elements,
        boundary_edges,
        refinement_level: level,
        grading,
        split_vertex: Some(k),
    })
}

/// Automatic grading strengths for `(tri, α)`: acute vertices whose decay
/// length `sin(θ/2)/|α|` is shorter than `L/GRADING_TRIGGER` get
/// `β = ln(|α| L / (4 sin(θ/2)))`.
pub fn auto_grading(tri: &TriangleGeometry, alpha: f64) -> [f64; 3] {
    [0, 1, 2].map(|k| {
        let d = tri.angle_data_at(k);
        let ratio = alpha.abs() * d.l_prime / (0.5 * d.theta_star).sin();
        if ratio > GRADING_TRIGGER && d.theta_star < 0.5 * PI {
            (ratio / 4.0).ln()
        } else {
            0.0
        }
    })
}

#[derive(Debug, Clone)]
pub struct FemSystem {
    pub stiffness: CsrMatrix,
    pub boundary_mass: CsrMatrix,
    pub mass: CsrMatrix,
    pub alpha: f64,
}

impl FemSystem {
    /// `K + αB`.
    pub fn operator(&self) -> CsrMatrix {
        self.stiffness.add_scaled(self.alpha, &self.boundary_mass)
    }
}

/// Exact P1 element integrals.
pub fn assemble(mesh: &FemMesh, alpha: f64) -> Result<FemSystem> {
    let n = mesh.nodes.len();
    let total_area: f64 = mesh
        .elements
        .iter()
        .map(|e| element_signed_area(mesh, e))
        .sum();
    let mut k_trip = Vec::with_capacity(9 * mesh.elements.len());
    let mut m_trip = Vec::with_capacity(9 * mesh.elements.len());
    for e in &mesh.elements {
        let area = element_signed_area(mesh, e);
        if !(area > 1e-14 * total_area) {
            return Err(Error::numeric("degenerate finite element", area));
        }
        let p = e.map(|i| mesh.nodes[i]);
        // ∇λ_i = perp(p_{i+2} - p_{i+1}) / (2 area)
        let grads = [0, 1, 2].map(|i| {
            let d = p[(i + 2) % 3] - p[(i + 1) % 3];
            Point::new(-d.y, d.x) * (0.5 / area)
        });
        for a in 0..3 {
            for b in 0..3 {
                k_trip.push((e[a], e[b], area * grads[a].dot(grads[b])));
                let m = if a == b { area / 6.0 } else { area / 12.0 };
                m_trip.push((e[a], e[b], m));
            }
        }
    }
    let mut b_trip = Vec::with_capacity(4 * mesh.boundary_edges.len());
    for ([i, j], _) in &mesh.boundary_edges {
        let len = (mesh.nodes[*j] - mesh.nodes[*i]).norm();
        b_trip.push((*i, *i, len / 3.0));
        b_trip.push((*j, *j, len / 3.0));
        b_trip.push((*i, *j, len / 6.0));
        b_trip.push((*j, *i, len / 6.0));
    }
    Ok(FemSystem {
        stiffness: CsrMatrix::from_triplets(n, &k_trip),
        boundary_mass: CsrMatrix::from_triplets(n, &b_trip),
        mass: CsrMatrix::from_triplets(n, &m_trip),
        alpha,
    })
}

fn element_signed_area(mesh: &FemMesh, e: &[usize; 3]) -> f64 {
    let [a, b, c] = e.map(|i| mesh.nodes[i]);
    0.5 * (b - a).cross(c - a)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub lambda1: f64,
    /// Mass-normalised, sign fixed so that its sum is positive.
    pub eigenvector: Vec<f64>,
    pub iterations: usize,
    /// `‖(K + αB)u - λMu‖_{M⁻¹}` for a single level; the Richardson error
    /// estimate for [`eigenvalue_converged`].
    pub residual: f64,
    pub extrapolated: Option<f64>,
    pub level: u32,
    /// Set when the level cap was hit before `rel_tol` was met.
    pub warning: bool,
    /// Raw eigenvalue per level, coarsest first.
    pub history: Vec<(u32, f64)>,
    pub grading: [f64; 3],
}

impl EigenResult {
    /// `log₂` of the ratio of the last two consecutive level differences.
    pub fn observed_order(&self) -> Option<f64> {
        let h = &self.history;
        if h.len() < 3 {
            return None;
        }
        let n = h.len();
        let d1 = h[n - 2].1 - h[n - 3].1;
        let d2 = h[n - 1].1 - h[n - 2].1;
        Some((d1 / d2).abs().log2())
    }

    pub fn error_estimate(&self) -> f64 {
        self.residual
    }
}

/// Initial shift `-2α²/sin²(θ⋆/2) - 1`.
pub fn initial_shift(tri: &TriangleGeometry, alpha: f64) -> f64 {
    let s = (0.5 * tri.theta_star).sin();
    -2.0 * alpha * alpha / (s * s) - 1.0
}

/// Factors `H - σM`, doubling `|σ|` until the matrix is positive definite.
fn factor_shifted(h: &CsrMatrix, m: &CsrMatrix, mut sigma: f64) -> Result<(BandedCholesky, f64)> {
    for _ in 0..=MAX_SHIFT_DOUBLINGS {
        match BandedCholesky::factor(&h.add_scaled(-sigma, m)) {
            Ok(f) => return Ok((f, sigma)),
            Err(Error::Indefinite { .. }) => sigma = 2.0 * sigma.min(-1.0),
            Err(e) => return Err(e),
        }
    }
    Err(Error::numeric("no positive definite shift found", sigma))
}

struct Iteration {
    lambda: f64,
    vector: Vec<f64>,
    iterations: usize,
}

/// Shift-invert power iteration, optionally deflating `against` (M-orthonormal).
fn power_iteration(
    h: &CsrMatrix,
    m: &CsrMatrix,
    sigma0: f64,
    start: Vec<f64>,
    against: Option<&[f64]>,
    tol: f64,
) -> Result<Iteration> {
    let (mut factor, mut sigma) = factor_shifted(h, m, sigma0)?;
    let deflate = |x: &mut Vec<f64>| {
        if let Some(u) = against {
            let c = m.bilinear(u, x);
            for (xi, ui) in x.iter_mut().zip(u) {
                *xi -= c * ui;
            }
        }
    };
    let mut x = start;
    deflate(&mut x);
    let mut prev = f64::NAN;
    let mut change = f64::INFINITY;
    let mut since_shift = 0;
    let mut at_floor = 0;
    for it in 1..=MAX_POWER_ITERATIONS {
        let mut y = m.mul_vec(&x);
        factor.solve_in_place(&mut y);
        deflate(&mut y);
        let norm = m.bilinear(&y, &y).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::numeric("power iteration lost its vector", norm));
        }
        y.iter_mut().for_each(|v| *v /= norm);
        let rho = h.bilinear(&y, &y);
        x = y;
        change = (rho - prev).abs();
        // Rounding can hold the change just above `tol` on strongly graded
        // meshes; accept once it has stayed near `tol` for a while.
        at_floor = if change <= 1e3 * tol * rho.abs() { at_floor + 1 } else { 0 };
        if change <= tol * rho.abs().max(1e-300) || at_floor >= NOISE_FLOOR_ITERATIONS {
            return Ok(Iteration {
                lambda: rho,
                vector: x,
                iterations: it,
            });
        }
        since_shift += 1;
        if since_shift >= SHIFT_UPDATE_INTERVAL && change > 1e3 * tol * rho.abs() {
            // Move the shift toward ρ; a successful factorisation certifies σ < λ.
            since_shift = 0;
            for frac in [0.9, 0.5] {
                let candidate = sigma + frac * (rho - sigma);
                if let Ok(f) = BandedCholesky::factor(&h.add_scaled(-candidate, m)) {
                    factor = f;
                    sigma = candidate;
                    break;
                }
            }
        }
        prev = rho;
    }
    Err(Error::numeric("power iteration did not converge in 500 steps", change))
}

fn m_inverse_norm(m: &CsrMatrix, r: &[f64]) -> Result<f64> {
    let z = pcg_jacobi(m, r, 1e-10, 1000)?;
    Ok(r.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt())
}

/// Lowest eigenpair of the assembled system.
pub fn lowest_eigenpair(sys: &FemSystem, tri: &TriangleGeometry) -> Result<EigenResult> {
    lowest_eigenpair_hinted(sys, tri, None)
}

/// As [`lowest_eigenpair`], first trying `shift_hint` (it is only used if
/// `K + αB - σM` factors, which certifies that it lies below the spectrum).
pub fn lowest_eigenpair_hinted(sys: &FemSystem, tri: &TriangleGeometry, shift_hint: Option<f64>) -> Result<EigenResult> {
    let h = sys.operator();
    let n = h.dim();
    let sigma0 = match shift_hint {
        Some(s) if BandedCholesky::factor(&h.add_scaled(-s, &sys.mass)).is_ok() => s,
        _ => initial_shift(tri, sys.alpha),
    };
    let it = power_iteration(&h, &sys.mass, sigma0, vec![1.0; n], None, RAYLEIGH_TOL)?;
    let mut u = it.vector;
    if u.iter().sum::<f64>() < 0.0 {
        u.iter_mut().for_each(|v| *v = -*v);
    }
    let hu = h.mul_vec(&u);
    let mu = sys.mass.mul_vec(&u);
    let r: Vec<f64> = hu.iter().zip(&mu).map(|(a, b)| a - it.lambda * b).collect();
    let residual = m_inverse_norm(&sys.mass, &r)?;
    if !(residual <= 1e-4 * it.lambda.abs().max(1.0)) {
        return Err(Error::numeric("eigen-residual above tolerance", residual));
    }
    Ok(EigenResult {
        lambda1: it.lambda,
        eigenvector: u,
        iterations: it.iterations,
        residual,
        extrapolated: None,
        level: 0,
        warning: false,
        history: Vec::new(),
        grading: [0.0; 3],
    })
}

/// Second eigenvalue by deflating the ground state `ground` (M-normalised).
pub fn second_eigenvalue(sys: &FemSystem, mesh: &FemMesh, tri: &TriangleGeometry, ground: &[f64]) -> Result<f64> {
    let h = sys.operator();
    let start: Vec<f64> = mesh
        .nodes
        .iter()
        .map(|p| 1.0 + p.x + 0.37 * p.y + 0.1 * p.x * p.y)
        .collect();
    let it = power_iteration(&h, &sys.mass, initial_shift(tri, sys.alpha), start, Some(ground), 1e-10)?;
    Ok(it.lambda)
}

/// Solves at a single level.
pub fn eigen_at_level(tri: &TriangleGeometry, alpha: f64, level: u32, grading: [f64; 3]) -> Result<EigenResult> {
    eigen_at_level_hinted(tri, alpha, level, grading, None)
}

/// As [`eigen_at_level`], trying `shift_hint` first.
pub fn eigen_at_level_hinted(
    tri: &TriangleGeometry,
    alpha: f64,
    level: u32,
    grading: [f64; 3],
    shift_hint: Option<f64>,
) -> Result<EigenResult> {
    let mesh = build_solver_mesh(tri, level, grading)?;
    let sys = assemble(&mesh, alpha)?;
    let mut res = lowest_eigenpair_hinted(&sys, tri, shift_hint)?;
    res.level = level;
    res.grading = grading;
    res.history = vec![(level, res.lambda1)];
    Ok(res)
}

/// Grading choice for [`eigenvalue_converged_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grading {
    Uniform,
    /// Grade where `|α| L / sin(θ/2)` exceeds [`GRADING_TRIGGER`].
    Auto,
    Fixed([f64; 3]),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceOptions {
    pub rel_tol: f64,
    pub start_level: u32,
    pub max_level: u32,
    pub grading: Grading,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        ConvergenceOptions {
            rel_tol: 1e-6,
            start_level: 3,
            max_level: 7,
            grading: Grading::Auto,
        }
    }
}

/// Richardson value `(4λ_fine - λ_coarse)/3`.
pub fn richardson(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

/// Refines until the extrapolated eigenvalue moves by less than `rel_tol`.
pub fn eigenvalue_converged(tri: &TriangleGeometry, alpha: f64, rel_tol: f64) -> Result<EigenResult> {
    eigenvalue_converged_with(
        tri,
        alpha,
        &ConvergenceOptions {
            rel_tol,
            ..ConvergenceOptions::default()
        },
    )
}

pub fn eigenvalue_converged_with(tri: &TriangleGeometry, alpha: f64, opts: &ConvergenceOptions) -> Result<EigenResult> {
    if !(opts.rel_tol >= 1e-8) {
        return Err(Error::domain(format!("rel_tol must be at least 1e-8, got {}", opts.rel_tol)));
    }
    if opts.max_level < opts.start_level + 2 || opts.max_level > MAX_LEVEL {
        return Err(Error::domain(format!(
            "need start_level + 2 <= max_level <= {MAX_LEVEL}, got {}..{}",
            opts.start_level, opts.max_level
        )));
    }
    let grading = match opts.grading {
        Grading::Uniform => [0.0; 3],
        Grading::Auto => auto_grading(tri, alpha),
        Grading::Fixed(g) => g,
    };
    let mut history = Vec::new();
    let mut prev_ext: Option<f64> = None;
    let mut last = eigen_at_level(tri, alpha, opts.start_level, grading)?;
    history.push((opts.start_level, last.lambda1));
    let mut best_err = f64::INFINITY;
    let mut best_ext = last.lambda1;
    for level in (opts.start_level + 1)..=opts.max_level {
        let hint = shift_hint(&history);
        let next = eigen_at_level_hinted(tri, alpha, level, grading, hint)?;
        let ext = richardson(last.lambda1, next.lambda1);
        history.push((level, next.lambda1));
        last = next;
        if let Some(p) = prev_ext {
            let err = (ext - p).abs();
            best_err = err;
            best_ext = ext;
            if err <= opts.rel_tol * ext.abs() {
                return Ok(finish(last, ext, err, history, grading, false));
            }
        }
        prev_ext = Some(ext);
    }
    Ok(finish(last, best_ext, best_err, history, grading, true))
}

/// Guess for a shift below the next level's eigenvalue from the trend so far.
fn shift_hint(history: &[(u32, f64)]) -> Option<f64> {
    let n = history.len();
    let last = history.last()?.1;
    let step = if n >= 2 { (last - history[n - 2].1).abs() } else { 0.25 * last.abs() };
    Some(last - 2.0 * step - 1e-3 * last.abs() - 1e-6)
}

fn finish(last: EigenResult, ext: f64, err: f64, history: Vec<(u32, f64)>, grading: [f64; 3], warning: bool) -> EigenResult {
    EigenResult {
        lambda1: ext,
        extrapolated: Some(ext),
        residual: err,
        level: last.level,
        warning,
        history,
        grading,
        ..last
    }
}

/// Richardson value from two fixed levels, with `|λ_fine - λ_coarse|/3` as
/// error proxy.
pub fn two_level_value(tri: &TriangleGeometry, alpha: f64, coarse: u32, grading: [f64; 3]) -> Result<(f64, f64)> {
    let a = eigen_at_level(tri, alpha, coarse, grading)?.lambda1;
    let b = eigen_at_level(tri, alpha, coarse + 1, grading)?.lambda1;
    Ok((richardson(a, b), (b - a).abs() / 3.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdDerivatives {
    pub grad_a: f64,
    pub grad_c: f64,
    pub hess_aa: f64,
    pub hess_cc: f64,
    pub hess_ac: f64,
    pub lambda_center: f64,
    pub step: f64,
}

/// Levels used at every stencil point of [`fd_derivatives_at_equilateral`].
pub const FD_LEVELS: (u32, u32) = (6, 7);

/// Central differences of `λ_{a,c}` around `(0, c₀)` with step `h`
/// (`None` means `1e-3 c₀`).
///
/// Every stencil point uses the same two-level Richardson value on the same
/// lattice, so the discretisation error varies smoothly across the stencil.
pub fn fd_derivatives_at_equilateral(alpha: f64, area: f64, h: Option<f64>) -> Result<FdDerivatives> {
    let center = TriangleParams::equilateral(area)?;
    let c0 = center.c;
    let h = h.unwrap_or(1e-3 * c0);
    if !(h > 0.0 && h < 0.1 * c0) {
        return Err(Error::domain(format!("step {h} must lie in (0, 0.1 c0)")));
    }
    let lambda0 = equilateral::lambda0(alpha, area)?;
    let grading = auto_grading(&center.geometry(), alpha);
    let noise = RAYLEIGH_TOL * lambda0.abs() * 10.0;
    let budget = h * h * lambda0.abs() * 0.01;
    if noise > budget {
        return Err(Error::Precision(format!(
            "solver noise {noise:.2e} exceeds stencil budget {budget:.2e}; increase h or tighten the eigensolver"
        )));
    }
    let eval = |da: f64, dc: f64| -> Result<f64> {
        let tri = TriangleParams::new(da, c0 + dc, area)?.geometry();
        Ok(two_level_value(&tri, alpha, FD_LEVELS.0, grading)?.0)
    };
    let f00 = eval(0.0, 0.0)?;
    let fpa = eval(h, 0.0)?;
    let fma = eval(-h, 0.0)?;
    let fpc = eval(0.0, h)?;
    let fmc = eval(0.0, -h)?;
    let fpp = eval(h, h)?;
    let fpm = eval(h, -h)?;
    let fmp = eval(-h, h)?;
    let fmm = eval(-h, -h)?;
    Ok(FdDerivatives {
        grad_a: (fpa - fma) / (2.0 * h),
        grad_c: (fpc - fmc) / (2.0 * h),
        hess_aa: (fpa - 2.0 * f00 + fma) / (h * h),
        hess_cc: (fpc - 2.0 * f00 + fmc) / (h * h),
        hess_ac: (fpp - fpm - fmp + fmm) / (4.0 * h * h),
        lambda_center: f00,
        step: h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_triangle;

    const UNIT: f64 = 0.577_350_269_189_625_8;

    #[test]
    fn mesh_counts() {
        let tri = make_triangle(0.3, 0.8, 1.0).unwrap();
        let m0 = build_mesh(&tri, 0).unwrap();
        assert_eq!((m0.nodes.len(), m0.elements.len(), m0.boundary_edges.len()), (3, 1, 3));
        let m2 = build_mesh(&tri, 2).unwrap();
        assert_eq!((m2.nodes.len(), m2.elements.len()), (15, 16));
        for level in 0..6 {
            let m = build_mesh(&tri, level).unwrap();
            let n = 1usize << level;
            assert_eq!(m.nodes.len(), (n + 1) * (n + 2) / 2);
            assert_eq!(m.elements.len(), n * n);
        }
        assert!(matches!(build_mesh(&tri, 11), Err(Error::Resource(_))));
    }

    #[test]
    fn areas_and_boundary_tile() {
        for &(a, c, s) in &[(0.0, 1.0, 1.0), (2.3, 0.4, 0.7), (-1.0, 2.0, 3.0)] {
            let tri = make_triangle(a, c, s).unwrap();
            for grading in [[0.0; 3], [3.0, 0.0, 5.0], [4.0, 4.0, 4.0]] {
                let mesh = build_graded_mesh(&tri, 4, grading).unwrap();
                let mut total = 0.0;
                for e in &mesh.elements {
                    let ar = element_signed_area(&mesh, e);
                    assert!(ar > 0.0);
                    total += ar;
                }
                assert!((total - s).abs() < 1e-12 * s);
                let mut per_side = [0.0; 3];
                for ([i, j], side) in &mesh.boundary_edges {
                    per_side[*side] += (mesh.nodes[*j] - mesh.nodes[*i]).norm();
                }
                for k in 0..3 {
                    assert!((per_side[k] - tri.side_lengths[k]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn matrices_reproduce_constants_and_linears() {
        let tri = make_triangle(0.7, 0.5, 0.9).unwrap();
        let mesh = build_mesh(&tri, 3).unwrap();
        let sys = assemble(&mesh, -1.0).unwrap();
        let one = vec![1.0; mesh.nodes.len()];
        assert!(sys.stiffness.bilinear(&one, &one).abs() < 1e-12);
        assert!((sys.mass.bilinear(&one, &one) - 0.9).abs() < 1e-12);
        assert!((sys.boundary_mass.bilinear(&one, &one) - tri.perimeter).abs() < 1e-12);
        for r in 0..mesh.nodes.len() {
            let s: f64 = sys.stiffness.row(r).map(|(_, v)| v).sum();
            assert!(s.abs() < 1e-12);
        }
        let x: Vec<f64> = mesh.nodes.iter().map(|p| p.x).collect();
        assert!((sys.stiffness.bilinear(&x, &x) - 0.9).abs() < 1e-12);
        for m in [&sys.stiffness, &sys.mass, &sys.boundary_mass] {
            assert!(m.is_symmetric(1e-14));
        }
        assert!(sys.stiffness.bandwidth() <= (1 << 3) + 2);
    }

    #[test]
    fn neumann_case_has_zero_ground_state() {
        let tri = make_triangle(0.4, 0.6, 1.0).unwrap();
        let mesh = build_mesh(&tri, 3).unwrap();
        let sys = assemble(&mesh, 0.0).unwrap();
        let r = lowest_eigenpair(&sys, &tri).unwrap();
        assert!(r.lambda1.abs() < 1e-10);
        let u0 = r.eigenvector[0];
        assert!(r.eigenvector.iter().all(|u| (u - u0).abs() < 1e-6));
    }

    #[test]
    fn fem_converges_to_equilateral_closed_form() {
        let tri = TriangleParams::equilateral(UNIT).unwrap().geometry();
        let exact = equilateral::lambda0(-1.0, UNIT).unwrap();
        let mut errs = Vec::new();
        for level in 3..=6 {
            let r = eigen_at_level(&tri, -1.0, level, [0.0; 3]).unwrap();
            assert!(r.lambda1 > exact);
            assert!(r.eigenvector.iter().all(|&u| u > 0.0));
            errs.push(r.lambda1 - exact);
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 2.0).abs() < 0.3, "order {order}");
        }
        let conv = eigenvalue_converged(&tri, -1.0, 1e-7).unwrap();
        assert!((conv.lambda1 - exact).abs() < 1e-5 * exact.abs());
        assert!(conv.level <= 7);
    }

    #[test]
    fn constant_trial_bounds_fem_from_above() {
        let tri = make_triangle(1.0, 0.4, UNIT).unwrap();
        let r = eigen_at_level(&tri, -2.0, 4, [0.0; 3]).unwrap();
        assert!(r.lambda1 <= -2.0 * tri.perimeter / UNIT);
    }

    #[test]
    fn reflection_symmetry() {
        let p = eigen_at_level(&make_triangle(0.8, 0.5, 1.0).unwrap(), -1.5, 4, [0.0; 3]).unwrap();
        let m = eigen_at_level(&make_triangle(-0.8, 0.5, 1.0).unwrap(), -1.5, 4, [0.0; 3]).unwrap();
        assert!((p.lambda1 - m.lambda1).abs() < 1e-11 * p.lambda1.abs());
    }

    #[test]
    fn spectral_gap_is_positive() {
        let tri = make_triangle(1.2, 0.5, UNIT).unwrap();
        let mesh = build_mesh(&tri, 4).unwrap();
        let sys = assemble(&mesh, -2.0).unwrap();
        let r = lowest_eigenpair(&sys, &tri).unwrap();
        let l2 = second_eigenvalue(&sys, &mesh, &tri, &r.eigenvector).unwrap();
        assert!(l2 > r.lambda1 + 1e-3);
    }

    #[test]
    fn grading_triggers_on_skinny_corners() {
        let tri = make_triangle(0.0, 3.0, UNIT).unwrap();
        let g = auto_grading(&tri, -8.0);
        assert!(g[0] > 3.0 && g[0] == g[1]);
        assert_eq!(g[2], 0.0);
        let eq = TriangleParams::equilateral(UNIT).unwrap().geometry();
        assert_eq!(auto_grading(&eq, -1.0), [0.0; 3]);
    }

    #[test]
    fn mesh_dump_has_one_record_per_line() {
        let tri = make_triangle(0.0, 1.0, 1.0).unwrap();
        let mesh = build_mesh(&tri, 1).unwrap();
        let mut buf = Vec::new();
        mesh.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 6 + 4 + 6);
    }

    #[test]
    fn rejects_tiny_rel_tol() {
        let tri = make_triangle(0.0, 1.0, 1.0).unwrap();
        assert!(eigenvalue_converged(&tri, -1.0, 1e-9).is_err());
    }
}
