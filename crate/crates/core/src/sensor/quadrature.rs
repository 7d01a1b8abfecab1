//! Product Gauss quadrature on triangles (collapsed square) and composite
//! rules over convex polygons.
//!
//! An order-`q` rule uses `q x q` nodes and integrates polynomials of total
//! degree `2q - 2` exactly.

use super::polygon::{ConvexPolygon, Point2};
use crate::points::CompensatedSum;

/// Default order: exact through degree 6.
pub const DEFAULT_ORDER: usize = 4;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like starting guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut derivative = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(x), p0 = P_{n-1}(x)
            derivative = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / derivative;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * derivative * derivative);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Quadrature rule on the reference triangle `(0,0), (1,0), (0,1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    order: usize,
    /// `(s, t, weight)`; weights sum to 1/2, the reference area.
    nodes: Vec<(f64, f64, f64)>,
}

impl TriangleRule {
    pub fn new(order: usize) -> Self {
        let order = order.max(1);
        let (x, w) = gauss_legendre(order);
        let mut nodes = Vec::with_capacity(order * order);
        for (xi, wi) in x.iter().zip(&w) {
            let u = (1.0 + xi) / 2.0;
            for (xj, wj) in x.iter().zip(&w) {
                let v = (1.0 + xj) / 2.0;
                // (u, v) in the unit square collapses onto (u, v (1 - u)).
                nodes.push((u, v * (1.0 - u), wi * wj / 4.0 * (1.0 - u)));
            }
        }
        Self { order, nodes }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of nodes per triangle.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Physical nodes and weights for triangle `tri` (any orientation).
    pub fn nodes_on(&self, tri: &[Point2; 3]) -> impl Iterator<Item = (Point2, f64)> + '_ {
        let [a, b, c] = *tri;
        let e1 = [b[0] - a[0], b[1] - a[1]];
        let e2 = [c[0] - a[0], c[1] - a[1]];
        let jac = (e1[0] * e2[1] - e1[1] * e2[0]).abs();
        self.nodes.iter().map(move |&(s, t, w)| {
            (
                [a[0] + s * e1[0] + t * e2[0], a[1] + s * e1[1] + t * e2[1]],
                w * jac,
            )
        })
    }

    pub fn integrate_triangle(&self, tri: &[Point2; 3], f: impl Fn(Point2) -> f64) -> f64 {
        self.nodes_on(tri)
            .map(|(z, w)| w * f(z))
            .collect::<CompensatedSum>()
            .value()
    }
}

fn midpoint(a: Point2, b: Point2) -> Point2 {
    [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
}

/// Splits a triangle into `4^levels` congruent pieces, in a fixed order.
pub fn subdivide(tri: [Point2; 3], levels: u32, out: &mut Vec<[Point2; 3]>) {
    if levels == 0 {
        out.push(tri);
        return;
    }
    let [a, b, c] = tri;
    let (ab, bc, ca) = (midpoint(a, b), midpoint(b, c), midpoint(c, a));
    for t in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]] {
        subdivide(t, levels - 1, out);
    }
}

/// Composite rule over a convex polygon: fan triangulation, each triangle
/// split `levels` times.
pub fn integrate_polygon(
    polygon: &ConvexPolygon,
    rule: &TriangleRule,
    levels: u32,
    f: impl Fn(Point2) -> f64,
) -> f64 {
    let mut pieces = Vec::new();
    for tri in polygon.fan() {
        subdivide(tri, levels, &mut pieces);
    }
    pieces
        .iter()
        .map(|t| rule.integrate_triangle(t, &f))
        .collect::<CompensatedSum>()
        .value()
}
