//! Convex polygons in the plane: validation, area, half-plane clipping.

use crate::error::{Error, Result};

pub type Point2 = [f64; 2];

#[inline]
fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Shoelace signed area; positive for counter-clockwise order.
pub fn signed_area(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    let o = vertices[0];
    (1..n - 1)
        .map(|i| cross(o, vertices[i], vertices[i + 1]))
        .sum::<f64>()
        / 2.0
}

/// Convex polygon with counter-clockwise vertices and positive area.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl ConvexPolygon {
    /// Validates orientation and convexity. Collinear vertices are allowed.
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidRegion("non-finite vertex".into()));
        }
        let mut vertices = vertices;
        vertices.dedup();
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::InvalidRegion("polygon needs at least 3 distinct vertices".into()));
        }
        let area = signed_area(&vertices);
        let scale = bbox_extent(&vertices);
        if !(area.abs() > 1e-14 * scale * scale) {
            return Err(Error::InvalidRegion("polygon has zero area".into()));
        }
        if !is_convex(&vertices) {
            return Err(Error::NonConvexRegion);
        }
        if area < 0.0 {
            return Err(Error::InvalidRegion(
                "polygon vertices must be counter-clockwise".into(),
            ));
        }
        Ok(Self { vertices })
    }

    /// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
    pub fn rectangle(min: Point2, max: Point2) -> Result<Self> {
        Self::new(vec![min, [max[0], min[1]], max, [min[0], max[1]]])
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    /// Area centroid.
    pub fn centroid(&self) -> Point2 {
        let o = self.vertices[0];
        let (mut cx, mut cy, mut a) = (0.0, 0.0, 0.0);
        for w in self.vertices[1..].windows(2) {
            let t = cross(o, w[0], w[1]) / 2.0;
            cx += t * (o[0] + w[0][0] + w[1][0]) / 3.0;
            cy += t * (o[1] + w[0][1] + w[1][1]) / 3.0;
            a += t;
        }
        [cx / a, cy / a]
    }

    pub fn bbox(&self) -> (Point2, Point2) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        (lo, hi)
    }

    /// Triangles of the fan from the first vertex.
    pub fn fan(&self) -> impl Iterator<Item = [Point2; 3]> + '_ {
        let o = self.vertices[0];
        self.vertices[1..].windows(2).map(move |w| [o, w[0], w[1]])
    }

    /// Part of the polygon with `normal . z <= offset`; `None` when that part
    /// has no area.
    pub fn clip_halfplane(&self, normal: Point2, offset: f64) -> Option<ConvexPolygon> {
        let side = |p: Point2| normal[0] * p[0] + normal[1] * p[1] - offset;
        let n = self.vertices.len();
        let mut out = Vec::with_capacity(n + 2);
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let (sa, sb) = (side(a), side(b));
            if sa <= 0.0 {
                out.push(a);
            }
            if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
                let t = sa / (sa - sb);
                out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            }
        }
        Self::from_clipped(out, self.area())
    }

    fn from_clipped(mut vertices: Vec<Point2>, reference_area: f64) -> Option<ConvexPolygon> {
        vertices.dedup();
        while vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 || !(signed_area(&vertices) > 1e-14 * reference_area) {
            return None;
        }
        Some(ConvexPolygon { vertices })
    }

    /// Intersection with another convex polygon (Sutherland-Hodgman, clipping
    /// `self` by every edge of `clip`).
    pub fn intersect(&self, clip: &ConvexPolygon) -> Option<ConvexPolygon> {
        let m = clip.vertices.len();
        let mut current = self.clone();
        for i in 0..m {
            let a = clip.vertices[i];
            let b = clip.vertices[(i + 1) % m];
            // Interior of a CCW polygon is left of a -> b: cross(a, b, z) >= 0,
            // i.e. n . z <= n . a with n = (b.y - a.y, a.x - b.x).
            let normal = [b[1] - a[1], a[0] - b[0]];
            let offset = normal[0] * a[0] + normal[1] * a[1];
            current = current.clip_halfplane(normal, offset)?;
        }
        Some(current)
    }
}

fn bbox_extent(vertices: &[Point2]) -> f64 {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for v in vertices {
        for d in 0..2 {
            lo[d] = lo[d].min(v[d]);
            hi[d] = hi[d].max(v[d]);
        }
    }
    (hi[0] - lo[0]).max(hi[1] - lo[1])
}

/// Convex in either orientation: all turns share one sign and the boundary
/// winds exactly once.
pub fn is_convex(vertices: &[Point2]) -> bool {
    let n = vertices.len();
    if n < 3 {
        return false;
    }
    let scale = bbox_extent(vertices);
    let tol = 1e-12 * scale * scale;
    let (mut pos, mut neg) = (false, false);
    let mut turning = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let c = vertices[(i + 2) % n];
        let z = cross(a, b, c);
        if z > tol {
            pos = true;
        } else if z < -tol {
            neg = true;
        }
        let u = [b[0] - a[0], b[1] - a[1]];
        let v = [c[0] - b[0], c[1] - b[1]];
        turning += (u[0] * v[1] - u[1] * v[0]).atan2(u[0] * v[0] + u[1] * v[1]);
    }
    !(pos && neg) && (turning.abs() - std::f64::consts::TAU).abs() < 1e-6
}

/// Intersection of an axis-aligned square with a convex polygon.
pub fn clip_cell(min: Point2, side: f64, polygon: &ConvexPolygon) -> Option<ConvexPolygon> {
    let square = ConvexPolygon {
        vertices: vec![
            min,
            [min[0] + side, min[1]],
            [min[0] + side, min[1] + side],
            [min[0], min[1] + side],
        ],
    };
    square.intersect(polygon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> ConvexPolygon {
        ConvexPolygon::rectangle([0.0, 0.0], [1.0, 1.0]).unwrap()
    }

    #[test]
    fn validation() {
        assert_eq!(unit().area(), 1.0);
        let dart = vec![[0.0, 0.0], [2.0, 0.0], [1.0, 0.5], [2.0, 2.0], [0.0, 2.0]];
        assert_eq!(ConvexPolygon::new(dart), Err(Error::NonConvexRegion));
        let cw = vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]];
        assert!(matches!(ConvexPolygon::new(cw), Err(Error::InvalidRegion(_))));
        let flat = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        assert!(matches!(ConvexPolygon::new(flat), Err(Error::InvalidRegion(_))));
        let collinear = vec![[0.0, 0.0], [0.5, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!(ConvexPolygon::new(collinear).is_ok());
        let closed = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 0.0]];
        assert_eq!(ConvexPolygon::new(closed).unwrap().vertices().len(), 3);
    }

    #[test]
    fn pentagram_is_not_convex() {
        let star: Vec<Point2> = (0..5)
            .map(|i| {
                let t = std::f64::consts::TAU * (2 * i) as f64 / 5.0;
                [t.cos(), t.sin()]
            })
            .collect();
        assert!(!is_convex(&star));
    }

    #[test]
    fn clip_examples() {
        let inside = clip_cell([0.25, 0.25], 0.5, &unit()).unwrap();
        assert_eq!(inside.area(), 0.25);
        assert_eq!(inside.vertices().len(), 4);
        assert!(clip_cell([2.0, 2.0], 0.5, &unit()).is_none());

        let half = unit().clip_halfplane([1.0, 0.0], 0.5).unwrap();
        assert_eq!(half.area(), 0.5);
        assert!(signed_area(half.vertices()) > 0.0);
    }

    #[test]
    fn clip_against_triangle() {
        let tri = ConvexPolygon::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let piece = clip_cell([0.0, 0.0], 0.5, &tri).unwrap();
        assert_eq!(piece.area(), 0.25);
        let corner = clip_cell([0.5, 0.0], 0.5, &tri).unwrap();
        assert!((corner.area() - 0.125).abs() < 1e-15);
        // Touching along a single point has no area.
        assert!(clip_cell([0.5, 0.5], 0.5, &tri).is_none());
    }

    #[test]
    fn centroid_of_triangle() {
        let tri = ConvexPolygon::new(vec![[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]]).unwrap();
        let c = tri.centroid();
        assert!((c[0] - 1.0).abs() < 1e-15 && (c[1] - 1.0).abs() < 1e-15);
    }
}
