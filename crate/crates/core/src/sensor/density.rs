//! Importance densities over the plane and their integrals over convex
//! polygons.

use serde::{Deserialize, Serialize};

use super::polygon::{ConvexPolygon, Point2};
use super::quadrature::{integrate_polygon, TriangleRule};
use crate::error::{Error, Result};
use crate::points::CompensatedSum;

/// Deepest subdivision tried by adaptive integration.
pub const MAX_ADAPTIVE_LEVELS: u32 = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub mean: Point2,
    /// Symmetric positive definite 2x2 covariance.
    pub cov: [[f64; 2]; 2],
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

/// Unnormalized density description, as read from a region file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DensitySpec {
    #[default]
    Uniform,
    GaussianMixture { components: Vec<GaussianComponent> },
    /// Piecewise constant on the grid `origin + [c dx, (c+1) dx] x [r dy, (r+1) dy]`,
    /// `values[r][c]`, zero outside.
    Raster {
        origin: Point2,
        cell_size: [f64; 2],
        values: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct Gaussian {
    mean: Point2,
    /// Inverse covariance entries `(a, b, c)` of `[[a, b], [b, c]]`.
    precision: (f64, f64, f64),
    /// Mixing weight over `2 pi sqrt(det)`.
    coefficient: f64,
}

/// Evaluable density `scale * phi(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    spec: DensitySpec,
    gaussians: Vec<Gaussian>,
    scale: f64,
}

impl Density {
    pub fn new(spec: DensitySpec) -> Result<Self> {
        let mut gaussians = Vec::new();
        match &spec {
            DensitySpec::Uniform => {}
            DensitySpec::GaussianMixture { components } => {
                if components.is_empty() {
                    return Err(Error::InvalidRegion("gaussian mixture has no components".into()));
                }
                for g in components {
                    let [[a, b], [b2, c]] = g.cov;
                    let det = a * c - b * b;
                    let finite = g.mean.iter().chain([a, b, b2, c, g.weight].iter()).all(|x| x.is_finite());
                    if !finite || b != b2 || !(a > 0.0) || !(det > 0.0) {
                        return Err(Error::InvalidRegion(
                            "covariance must be symmetric positive definite".into(),
                        ));
                    }
                    if !(g.weight >= 0.0) {
                        return Err(Error::InvalidRegion("mixing weights must be nonnegative".into()));
                    }
                    gaussians.push(Gaussian {
                        mean: g.mean,
                        precision: (c / det, -b / det, a / det),
                        coefficient: g.weight / (std::f64::consts::TAU * det.sqrt()),
                    });
                }
            }
            DensitySpec::Raster {
                origin,
                cell_size,
                values,
            } => {
                let cols = values.first().map_or(0, Vec::len);
                if cols == 0 || values.iter().any(|r| r.len() != cols) {
                    return Err(Error::InvalidRegion("raster rows must be nonempty and equal length".into()));
                }
                if !cell_size.iter().all(|d| d.is_finite() && *d > 0.0)
                    || !origin.iter().all(|x| x.is_finite())
                {
                    return Err(Error::InvalidRegion("raster geometry must be finite and positive".into()));
                }
                if values.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::InvalidRegion("raster values must be nonnegative".into()));
                }
            }
        }
        Ok(Self {
            spec,
            gaussians,
            scale: 1.0,
        })
    }

    pub fn uniform() -> Self {
        Self::new(DensitySpec::Uniform).expect("uniform density is valid")
    }

    pub fn spec(&self) -> &DensitySpec {
        &self.spec
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            scale: self.scale * factor,
            ..self.clone()
        }
    }

    /// Mass over the whole plane, `None` when unbounded.
    pub fn total_mass(&self) -> Option<f64> {
        match &self.spec {
            DensitySpec::Uniform => None,
            DensitySpec::GaussianMixture { components } => {
                Some(self.scale * components.iter().map(|g| g.weight).sum::<f64>())
            }
            DensitySpec::Raster {
                cell_size, values, ..
            } => {
                let s: f64 = values.iter().flatten().sum();
                Some(self.scale * s * cell_size[0] * cell_size[1])
            }
        }
    }

    /// Density value at `z`.
    pub fn eval(&self, z: Point2) -> f64 {
        let raw = match &self.spec {
            DensitySpec::Uniform => 1.0,
            DensitySpec::GaussianMixture { .. } => self
                .gaussians
                .iter()
                .map(|g| {
                    let (dx, dy) = (z[0] - g.mean[0], z[1] - g.mean[1]);
                    let (a, b, c) = g.precision;
                    g.coefficient * (-0.5 * (a * dx * dx + 2.0 * b * dx * dy + c * dy * dy)).exp()
                })
                .sum(),
            DensitySpec::Raster {
                origin,
                cell_size,
                values,
            } => {
                let c = ((z[0] - origin[0]) / cell_size[0]).floor();
                let r = ((z[1] - origin[1]) / cell_size[1]).floor();
                if c < 0.0 || r < 0.0 {
                    0.0
                } else {
                    values
                        .get(r as usize)
                        .and_then(|row| row.get(c as usize))
                        .copied()
                        .unwrap_or(0.0)
                }
            }
        };
        self.scale * raw
    }

    /// `integral over polygon of phi(z) f(z) dz`.
    ///
    /// Uniform and raster densities are integrated piecewise exactly for
    /// polynomial `f` of degree at most `2 order - 2` (raster pieces are
    /// clipped to the raster cells). Gaussian mixtures are refined until two
    /// successive subdivision levels agree to `1e-12` relative, or to
    /// `abs_tol`.
    pub fn integrate(
        &self,
        polygon: &ConvexPolygon,
        rule: &TriangleRule,
        abs_tol: f64,
        f: impl Fn(Point2) -> f64 + Copy,
    ) -> f64 {
        match &self.spec {
            DensitySpec::GaussianMixture { .. } => {
                let mut prev = self.integrate_fixed(polygon, rule, 0, f);
                for levels in 1..=MAX_ADAPTIVE_LEVELS {
                    let next = self.integrate_fixed(polygon, rule, levels, f);
                    if (next - prev).abs() <= (1e-12 * next.abs()).max(abs_tol) {
                        return next;
                    }
                    prev = next;
                }
                prev
            }
            _ => self.integrate_fixed(polygon, rule, 0, f),
        }
    }

    /// Same as [`Density::integrate`] at a fixed subdivision depth.
    pub fn integrate_fixed(
        &self,
        polygon: &ConvexPolygon,
        rule: &TriangleRule,
        levels: u32,
        f: impl Fn(Point2) -> f64 + Copy,
    ) -> f64 {
        match &self.spec {
            DensitySpec::Uniform => self.scale * integrate_polygon(polygon, rule, levels, f),
            DensitySpec::GaussianMixture { .. } => {
                integrate_polygon(polygon, rule, levels, |z| self.eval(z) * f(z))
            }
            DensitySpec::Raster {
                origin,
                cell_size,
                values,
            } => {
                let (lo, hi) = polygon.bbox();
                let rows = values.len();
                let cols = values[0].len();
                let index_range = |d: usize, n: usize| {
                    let a = ((lo[d] - origin[d]) / cell_size[d]).floor().max(0.0);
                    let b = ((hi[d] - origin[d]) / cell_size[d]).ceil().min(n as f64);
                    (a as usize)..(b.max(a) as usize)
                };
                let mut acc = CompensatedSum::new();
                for r in index_range(1, rows) {
                    for c in index_range(0, cols) {
                        let v = values[r][c];
                        if v == 0.0 {
                            continue;
                        }
                        let min = [
                            origin[0] + c as f64 * cell_size[0],
                            origin[1] + r as f64 * cell_size[1],
                        ];
                        let max = [min[0] + cell_size[0], min[1] + cell_size[1]];
                        let piece = ConvexPolygon::rectangle(min, max)
                            .ok()
                            .and_then(|rect| rect.intersect(polygon));
                        if let Some(piece) = piece {
                            acc.add(v * integrate_polygon(&piece, rule, levels, f));
                        }
                    }
                }
                self.scale * acc.value()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(side: f64) -> ConvexPolygon {
        ConvexPolygon::rectangle([0.0, 0.0], [side, side]).unwrap()
    }

    #[test]
    fn uniform_integrals() {
        let rule = TriangleRule::new(4);
        let d = Density::uniform();
        assert!((d.integrate(&square(2.0), &rule, 0.0, |_| 1.0) - 4.0).abs() < 1e-14);
        let d = d.scaled(0.25);
        assert_eq!(d.eval([0.3, 0.3]), 0.25);
        assert!((d.integrate(&square(2.0), &rule, 0.0, |_| 1.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_mass_on_large_square() {
        let spec = DensitySpec::GaussianMixture {
            components: vec![GaussianComponent {
                mean: [0.0, 0.0],
                cov: [[1.0, 0.3], [0.3, 0.5]],
                weight: 2.0,
            }],
        };
        let d = Density::new(spec).unwrap();
        assert_eq!(d.total_mass(), Some(2.0));
        let big = ConvexPolygon::rectangle([-12.0, -12.0], [12.0, 12.0]).unwrap();
        let m = d.integrate(&big, &TriangleRule::new(6), 0.0, |_| 1.0);
        assert!((m - 2.0).abs() < 1e-9, "{m}");
        // Peak value 2 / (2 pi sqrt(0.41)).
        let peak = 2.0 / (std::f64::consts::TAU * 0.41f64.sqrt());
        assert!((d.eval([0.0, 0.0]) - peak).abs() < 1e-15);
    }

    #[test]
    fn raster_is_exact_across_pieces() {
        let spec = DensitySpec::Raster {
            origin: [0.0, 0.0],
            cell_size: [0.5, 0.5],
            values: vec![vec![1.0, 3.0], vec![0.0, 2.0]],
        };
        let d = Density::new(spec).unwrap();
        assert_eq!(d.total_mass(), Some(1.5));
        let rule = TriangleRule::new(2);
        let m = d.integrate(&square(1.0), &rule, 0.0, |_| 1.0);
        assert!((m - 1.5).abs() < 1e-15);
        // Triangle below the diagonal: half of cells (0,0) and (1,1), all of (0,1).
        let tri = ConvexPolygon::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]).unwrap();
        let m = d.integrate(&tri, &rule, 0.0, |_| 1.0);
        assert!((m - 0.25 * (0.5 + 3.0 + 1.0)).abs() < 1e-15, "{m}");
        // First moment in x over the bottom-right cell: 3 * 0.25 * 0.75.
        let cell = ConvexPolygon::rectangle([0.5, 0.0], [1.0, 0.5]).unwrap();
        let mx = d.integrate(&cell, &rule, 0.0, |z| z[0]);
        assert!((mx - 0.5625).abs() < 1e-15);
        assert_eq!(d.eval([0.75, 0.75]), 2.0);
        assert_eq!(d.eval([-0.1, 0.2]), 0.0);
        assert_eq!(d.eval([1.1, 0.2]), 0.0);
    }

    #[test]
    fn invalid_specs() {
        let bad_cov = DensitySpec::GaussianMixture {
            components: vec![GaussianComponent {
                mean: [0.0, 0.0],
                cov: [[1.0, 2.0], [2.0, 1.0]],
                weight: 1.0,
            }],
        };
        assert!(Density::new(bad_cov).is_err());
        let ragged = DensitySpec::Raster {
            origin: [0.0, 0.0],
            cell_size: [1.0, 1.0],
            values: vec![vec![1.0], vec![1.0, 2.0]],
        };
        assert!(Density::new(ragged).is_err());
        let negative = DensitySpec::Raster {
            origin: [0.0, 0.0],
            cell_size: [1.0, 1.0],
            values: vec![vec![-1.0]],
        };
        assert!(Density::new(negative).is_err());
    }

    #[test]
    fn spec_json_shape() {
        let spec: DensitySpec = serde_json::from_str(
            r#"{"type":"gaussian_mixture","components":[{"mean":[0.5,0.5],"cov":[[0.01,0],[0,0.01]]}]}"#,
        )
        .unwrap();
        let DensitySpec::GaussianMixture { components } = &spec else {
            panic!("wrong variant");
        };
        assert_eq!(components[0].weight, 1.0);
        let uniform: DensitySpec = serde_json::from_str(r#"{"type":"uniform"}"#).unwrap();
        assert_eq!(uniform, DensitySpec::Uniform);
    }
}
