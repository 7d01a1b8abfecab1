//! Sensor coverage: a convex region with an importance density is cut into
//! grid cells, each cell becomes one weighted point at its center of mass,
//! and weighted k-means on those points places the sensors.
//!
//! The coverage cost `H(C) = integral of phi(z) min_i |z - c_i|^2` splits as
//! `weighted cost of the cell points + sum of the cell moments of inertia`
//! whenever no Voronoi boundary cuts through a cell; [`decomposition_check`]
//! reports how far apart the two sides are in general.

pub mod density;
pub mod polygon;
pub mod quadrature;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use density::{Density, DensitySpec, GaussianComponent};
pub use polygon::{clip_cell, ConvexPolygon, Point2};
pub use quadrature::{TriangleRule, DEFAULT_ORDER};

use crate::baselines::{kmeanspp_lloyd, LloydParams};
use crate::error::{Error, Result};
use crate::oracle::brute_force_opt;
use crate::points::{
    squared_distance, CenterSet, ClusteringResult, CompensatedSum, RunMeta, WeightedPointSet,
};
use crate::ptas::{self, PtasOverrides};
use crate::sampling::RandomSource;

/// Cells lighter than this (after normalization) are dropped.
pub const DROP_THRESHOLD: f64 = 1e-12;
/// A placement warns when the summed cell moments exceed this share of `H`.
pub const MOMENT_WARNING_FRACTION: f64 = 0.1;
/// Largest grid `discretize` will lay out.
pub const MAX_GRID_SQUARES: usize = 4_000_000;
/// Normalization refuses regions holding less than this share of a
/// finite-mass density.
pub const NEGLIGIBLE_MASS_FRACTION: f64 = 1e-9;

/// Convex region with a (possibly unnormalized) density.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorRegion {
    polygon: ConvexPolygon,
    density: Density,
}

impl SensorRegion {
    pub fn new(polygon: ConvexPolygon, density: Density) -> Self {
        Self { polygon, density }
    }

    pub fn uniform(polygon: ConvexPolygon) -> Self {
        Self::new(polygon, Density::uniform())
    }

    pub fn polygon(&self) -> &ConvexPolygon {
        &self.polygon
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    /// Density mass inside the polygon.
    pub fn mass(&self, quad_order: usize) -> f64 {
        let rule = TriangleRule::new(quad_order);
        self.density.integrate(&self.polygon, &rule, 0.0, |_| 1.0)
    }

    /// Largest side of the bounding box.
    pub fn extent(&self) -> f64 {
        let (lo, hi) = self.polygon.bbox();
        (hi[0] - lo[0]).max(hi[1] - lo[1])
    }
}

/// Region file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionFile {
    pub polygon: Vec<Point2>,
    #[serde(default)]
    pub density: DensitySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_eps: Option<f64>,
}

impl RegionFile {
    pub fn to_region(&self) -> Result<SensorRegion> {
        Ok(SensorRegion::new(
            ConvexPolygon::new(self.polygon.clone())?,
            Density::new(self.density.clone())?,
        ))
    }
}

/// Rescales the density to unit mass on the region.
pub fn normalize_density(region: &SensorRegion, quad_order: usize) -> Result<SensorRegion> {
    let mass = region.mass(quad_order);
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::ZeroMass);
    }
    if let Some(total) = region.density.total_mass() {
        if mass < NEGLIGIBLE_MASS_FRACTION * total {
            return Err(Error::NegligibleMass { mass: mass / total });
        }
    }
    Ok(SensorRegion {
        polygon: region.polygon.clone(),
        density: region.density.scaled(1.0 / mass),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    /// Grid square clipped to the region.
    pub shape: ConvexPolygon,
    pub weight: f64,
    /// Center of mass.
    pub com: Point2,
    /// Moment of inertia about `com`.
    pub inertia: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    pub cells: Vec<Cell>,
    pub grid_eps: f64,
    points: WeightedPointSet,
}

impl Discretization {
    /// Cell centers of mass weighted by cell mass, in cell order.
    pub fn as_point_set(&self) -> &WeightedPointSet {
        &self.points
    }

    pub fn moment_sum(&self) -> f64 {
        self.cells.iter().map(|c| c.inertia).collect::<CompensatedSum>().value()
    }

    pub fn total_weight(&self) -> f64 {
        self.points.total_weight()
    }
}

fn ceil_robust(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

fn cell_moments(density: &Density, shape: ConvexPolygon, rule: &TriangleRule) -> Option<Cell> {
    let weight = density.integrate(&shape, rule, 1e-18, |_| 1.0);
    if !(weight >= DROP_THRESHOLD) {
        return None;
    }
    // Moments about the cell's own centroid keep the first pass well scaled.
    let o = shape.centroid();
    let (lo, hi) = shape.bbox();
    let size2 = (hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2);
    let tol = 1e-18 * size2.sqrt();
    let mx = density.integrate(&shape, rule, tol, |z| z[0] - o[0]);
    let my = density.integrate(&shape, rule, tol, |z| z[1] - o[1]);
    let com = [o[0] + mx / weight, o[1] + my / weight];
    let inertia = density.integrate(&shape, rule, 1e-18 * size2, |z| {
        (z[0] - com[0]).powi(2) + (z[1] - com[1]).powi(2)
    });
    Some(Cell {
        shape,
        weight,
        com,
        inertia: inertia.max(0.0),
    })
}

/// Lays a square grid of side `grid_eps` from the bounding box's lower-left
/// corner and computes mass, center of mass and inertia of every clipped
/// cell. Cells are ordered row by row from the bottom, left to right.
/// Expects a normalized region.
pub fn discretize(region: &SensorRegion, grid_eps: f64, quad_order: usize) -> Result<Discretization> {
    if !(grid_eps > 0.0 && grid_eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("grid_eps must be positive, got {grid_eps}")));
    }
    let (lo, hi) = region.polygon.bbox();
    let cols = ceil_robust((hi[0] - lo[0]) / grid_eps).max(1);
    let rows = ceil_robust((hi[1] - lo[1]) / grid_eps).max(1);
    if cols.saturating_mul(rows) > MAX_GRID_SQUARES {
        return Err(Error::InvalidParameter(format!(
            "grid_eps {grid_eps} gives {cols} x {rows} squares, more than {MAX_GRID_SQUARES}"
        )));
    }
    let rule = TriangleRule::new(quad_order);
    let cells: Vec<Cell> = (0..rows * cols)
        .into_par_iter()
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            let min = [lo[0] + c as f64 * grid_eps, lo[1] + r as f64 * grid_eps];
            clip_cell(min, grid_eps, &region.polygon)
                .and_then(|shape| cell_moments(&region.density, shape, &rule))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    if cells.is_empty() {
        return Err(Error::DegenerateGrid);
    }
    let coords = cells.iter().flat_map(|c| c.com).collect();
    let weights = cells.iter().map(|c| c.weight).collect();
    let points = WeightedPointSet::from_parts(2, coords, weights)?;
    Ok(Discretization {
        cells,
        grid_eps,
        points,
    })
}

/// Voronoi cell of every center inside `polygon`. Of coincident centers only
/// the first gets a cell; empty cells are `None`.
pub fn voronoi_cells(polygon: &ConvexPolygon, centers: &CenterSet) -> Vec<Option<ConvexPolygon>> {
    (0..centers.len())
        .map(|i| {
            let ci = centers.center(i);
            let mut cell = Some(polygon.clone());
            for j in 0..centers.len() {
                let cj = centers.center(j);
                if j == i {
                    continue;
                }
                if ci == cj {
                    if j < i {
                        return None;
                    }
                    continue;
                }
                // |z - ci| <= |z - cj|  <=>  (cj - ci) . z <= (cj - ci) . (ci + cj) / 2
                let normal = [cj[0] - ci[0], cj[1] - ci[1]];
                let offset = normal[0] * (ci[0] + cj[0]) / 2.0 + normal[1] * (ci[1] + cj[1]) / 2.0;
                cell = cell?.clip_halfplane(normal, offset);
            }
            cell
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoverageMethod {
    /// Exact Voronoi cells integrated by quadrature; `levels: None` refines
    /// adaptively for non-polynomial densities.
    Quadrature { order: usize, levels: Option<u32> },
    /// Uniform rejection sampling inside the region.
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for CoverageMethod {
    fn default() -> Self {
        CoverageMethod::Quadrature {
            order: DEFAULT_ORDER,
            levels: None,
        }
    }
}

fn check_planar(centers: &CenterSet) -> Result<()> {
    if centers.is_empty() {
        return Err(Error::NoCenters);
    }
    if centers.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: centers.dim(),
        });
    }
    Ok(())
}

/// Coverage cost `H(C)` of the region's density.
pub fn coverage_cost(region: &SensorRegion, centers: &CenterSet, method: CoverageMethod) -> Result<f64> {
    check_planar(centers)?;
    match method {
        CoverageMethod::Quadrature { order, levels } => {
            let rule = TriangleRule::new(order);
            let tol = 1e-18 * region.extent().powi(2);
            let parts: Vec<f64> = voronoi_cells(&region.polygon, centers)
                .into_par_iter()
                .enumerate()
                .map(|(i, cell)| {
                    let Some(cell) = cell else { return 0.0 };
                    let c = centers.center(i);
                    let f = |z: Point2| (z[0] - c[0]).powi(2) + (z[1] - c[1]).powi(2);
                    match levels {
                        Some(l) => region.density.integrate_fixed(&cell, &rule, l, f),
                        None => region.density.integrate(&cell, &rule, tol, f),
                    }
                })
                .collect();
            Ok(parts.into_iter().collect::<CompensatedSum>().value())
        }
        CoverageMethod::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidParameter("monte carlo needs samples".into()));
            }
            let (lo, hi) = region.polygon.bbox();
            let mut rng = RandomSource::new(seed, 0);
            let mut acc = CompensatedSum::new();
            let mut accepted = 0;
            let inside = |z: Point2| {
                let v = region.polygon.vertices();
                (0..v.len()).all(|i| {
                    let (a, b) = (v[i], v[(i + 1) % v.len()]);
                    (b[0] - a[0]) * (z[1] - a[1]) - (b[1] - a[1]) * (z[0] - a[0]) >= 0.0
                })
            };
            while accepted < samples {
                let z = [
                    lo[0] + rng.next_f64() * (hi[0] - lo[0]),
                    lo[1] + rng.next_f64() * (hi[1] - lo[1]),
                ];
                if !inside(z) {
                    continue;
                }
                accepted += 1;
                let d = centers
                    .iter()
                    .map(|c| squared_distance(&z, c))
                    .fold(f64::INFINITY, f64::min);
                acc.add(region.density.eval(z) * d);
            }
            Ok(region.polygon.area() * acc.value() / samples as f64)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecompositionReport {
    /// `H(C)`.
    pub coverage_cost: f64,
    pub weighted_cost: f64,
    pub moment_sum: f64,
    /// `weighted_cost + moment_sum`.
    pub rhs: f64,
    pub gap: f64,
}

/// Both sides of the coverage-cost decomposition for `centers`.
pub fn decomposition_check(
    region: &SensorRegion,
    discretization: &Discretization,
    centers: &CenterSet,
    quad_order: usize,
) -> Result<DecompositionReport> {
    check_planar(centers)?;
    let h = coverage_cost(
        region,
        centers,
        CoverageMethod::Quadrature {
            order: quad_order,
            levels: None,
        },
    )?;
    let weighted_cost = crate::points::weighted_cost(discretization.as_point_set(), centers)?;
    let moment_sum = discretization.moment_sum();
    let rhs = weighted_cost + moment_sum;
    Ok(DecompositionReport {
        coverage_cost: h,
        weighted_cost,
        moment_sum,
        rhs,
        gap: (h - rhs).abs(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SensorSolver {
    Ptas { epsilon: f64, overrides: PtasOverrides },
    KmeansppLloyd(LloydParams),
    Oracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementConfig {
    pub k: usize,
    pub grid_eps: f64,
    pub quad_order: usize,
    pub solver: SensorSolver,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementReport {
    pub centers: CenterSet,
    pub coverage_cost: f64,
    pub weighted_cost: f64,
    pub moment_sum: f64,
    pub discretization: Discretization,
    pub meta: RunMeta,
    pub warnings: Vec<String>,
}

/// Solves weighted k-means on the cell points of `points`.
pub fn solve_points(
    points: &WeightedPointSet,
    k: usize,
    solver: &SensorSolver,
    seed: u64,
) -> Result<ClusteringResult> {
    match solver {
        SensorSolver::Ptas { epsilon, overrides } => ptas::solve(points, k, *epsilon, overrides, seed),
        SensorSolver::KmeansppLloyd(params) => kmeanspp_lloyd(points, k, params, seed),
        SensorSolver::Oracle => {
            let exact = brute_force_opt(points, k)?;
            let mut centers = exact.centers.clone();
            let found = centers.len();
            for i in found..k {
                let copy = centers.center(i % found).to_vec();
                centers.push(&copy)?;
            }
            let meta = RunMeta::new("oracle")
                .param("k", k)
                .param("partitions", exact.partitions_evaluated);
            ClusteringResult::evaluate(points, centers, meta)
        }
    }
}

/// Normalize, discretize, cluster the cell points and evaluate the result
/// on the continuous region.
pub fn place_sensors(region: &SensorRegion, config: &PlacementConfig, seed: u64) -> Result<PlacementReport> {
    if config.k == 0 {
        return Err(Error::InvalidK);
    }
    let region = normalize_density(region, config.quad_order)?;
    let discretization = discretize(&region, config.grid_eps, config.quad_order)?;
    let result = solve_points(discretization.as_point_set(), config.k, &config.solver, seed)?;
    let coverage = coverage_cost(
        &region,
        &result.centers,
        CoverageMethod::Quadrature {
            order: config.quad_order,
            levels: None,
        },
    )?;
    let moment_sum = discretization.moment_sum();
    let mut warnings = Vec::new();
    if config.grid_eps >= region.extent() {
        warnings.push(format!(
            "grid_eps {} is coarser than the region (extent {}); the grid has a single column or row",
            config.grid_eps,
            region.extent()
        ));
    }
    if moment_sum > MOMENT_WARNING_FRACTION * coverage {
        warnings.push(format!(
            "cell moments ({moment_sum:.6e}) exceed {:.0}% of the coverage cost ({coverage:.6e}); refine grid_eps",
            MOMENT_WARNING_FRACTION * 100.0
        ));
    }
    let meta = result.meta.param("grid_eps", config.grid_eps).param("cells", discretization.cells.len());
    Ok(PlacementReport {
        centers: result.centers,
        coverage_cost: coverage,
        weighted_cost: result.cost,
        moment_sum,
        discretization,
        meta,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_region() -> SensorRegion {
        SensorRegion::uniform(ConvexPolygon::rectangle([0.0, 0.0], [1.0, 1.0]).unwrap())
    }

    fn centers(c: &[[f64; 2]]) -> CenterSet {
        CenterSet::new(&c.iter().map(|p| p.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn normalize_examples() {
        let r = normalize_density(&unit_region(), DEFAULT_ORDER).unwrap();
        assert!((r.density().eval([0.2, 0.2]) - 1.0).abs() < 1e-14);
        let big = SensorRegion::uniform(ConvexPolygon::rectangle([0.0, 0.0], [2.0, 2.0]).unwrap());
        let r = normalize_density(&big, DEFAULT_ORDER).unwrap();
        assert!((r.density().eval([0.2, 0.2]) - 0.25).abs() < 1e-14);

        let far = DensitySpec::GaussianMixture {
            components: vec![GaussianComponent {
                mean: [50.0, 50.0],
                cov: [[1.0, 0.0], [0.0, 1.0]],
                weight: 1.0,
            }],
        };
        let r = SensorRegion::new(unit_region().polygon().clone(), Density::new(far).unwrap());
        assert!(matches!(
            normalize_density(&r, DEFAULT_ORDER),
            Err(Error::NegligibleMass { .. }) | Err(Error::ZeroMass)
        ));
    }

    #[test]
    fn discretize_unit_square() {
        let region = normalize_density(&unit_region(), DEFAULT_ORDER).unwrap();
        let d = discretize(&region, 0.5, DEFAULT_ORDER).unwrap();
        assert_eq!(d.cells.len(), 4);
        let expected = [[0.25, 0.25], [0.75, 0.25], [0.25, 0.75], [0.75, 0.75]];
        for (cell, com) in d.cells.iter().zip(expected) {
            assert!((cell.weight - 0.25).abs() < 1e-15);
            assert!((cell.com[0] - com[0]).abs() < 1e-15 && (cell.com[1] - com[1]).abs() < 1e-15);
            assert!((cell.inertia - 1.0 / 96.0).abs() < 1e-15);
        }
        let one = discretize(&region, 1.0, DEFAULT_ORDER).unwrap();
        assert_eq!(one.cells.len(), 1);
        assert!((one.cells[0].inertia - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(one.cells[0].com, [0.5, 0.5]);
        assert!(discretize(&region, 0.0, DEFAULT_ORDER).is_err());
    }

    #[test]
    fn degenerate_grid() {
        // Raster mass sits outside the polygon entirely.
        let spec = DensitySpec::Raster {
            origin: [5.0, 5.0],
            cell_size: [1.0, 1.0],
            values: vec![vec![1.0]],
        };
        let r = SensorRegion::new(unit_region().polygon().clone(), Density::new(spec).unwrap());
        assert_eq!(discretize(&r, 0.5, DEFAULT_ORDER), Err(Error::DegenerateGrid));
        assert_eq!(normalize_density(&r, DEFAULT_ORDER), Err(Error::ZeroMass));
    }

    #[test]
    fn coverage_examples() {
        let r = unit_region();
        let h = coverage_cost(&r, &centers(&[[0.5, 0.5]]), CoverageMethod::default()).unwrap();
        assert!((h - 1.0 / 6.0).abs() < 1e-15);
        let h2 = coverage_cost(&r, &centers(&[[0.25, 0.5], [0.75, 0.5]]), CoverageMethod::default()).unwrap();
        assert!((h2 - 5.0 / 48.0).abs() < 1e-15);
        // Duplicates do not double count.
        let dup = coverage_cost(&r, &centers(&[[0.5, 0.5], [0.5, 0.5]]), CoverageMethod::default()).unwrap();
        assert!((dup - h).abs() < 1e-15);
        let mc = coverage_cost(
            &r,
            &centers(&[[0.5, 0.5]]),
            CoverageMethod::MonteCarlo {
                samples: 200_000,
                seed: 3,
            },
        )
        .unwrap();
        assert!((mc - 1.0 / 6.0).abs() < 2e-3, "{mc}");
    }

    #[test]
    fn decomposition_examples() {
        let region = normalize_density(&unit_region(), DEFAULT_ORDER).unwrap();
        let d = discretize(&region, 0.5, DEFAULT_ORDER).unwrap();
        let rep = decomposition_check(&region, &d, &centers(&[[0.5, 0.5]]), DEFAULT_ORDER).unwrap();
        assert!((rep.weighted_cost - 0.125).abs() < 1e-15);
        assert!((rep.moment_sum - 1.0 / 24.0).abs() < 1e-15);
        assert!(rep.gap <= 1e-12);
        let rep = decomposition_check(&region, &d, &centers(&[[0.25, 0.5], [0.75, 0.5]]), DEFAULT_ORDER).unwrap();
        assert!(rep.gap <= 1e-12, "{rep:?}");
    }

    #[test]
    fn single_cell_placement() {
        let config = PlacementConfig {
            k: 1,
            grid_eps: 1.0,
            quad_order: DEFAULT_ORDER,
            solver: SensorSolver::Ptas {
                epsilon: 0.5,
                overrides: PtasOverrides::desk(),
            },
        };
        let rep = place_sensors(&unit_region(), &config, 0).unwrap();
        assert_eq!(rep.centers.to_vecs(), vec![vec![0.5, 0.5]]);
        assert_eq!(rep.weighted_cost, 0.0);
        assert!((rep.coverage_cost - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(rep.warnings.len(), 2);
    }
}
