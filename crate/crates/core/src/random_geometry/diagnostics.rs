use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{segment_segment_dist2, Coord};
use crate::point_process;
use crate::rng;

use super::mask::{CellFlag, PerforatedMask};
use super::obstacles::{ObstacleSet, ObstacleShape};
use super::{CellIndex, EdgeSet, UnionFind};

/// Fraction of interior nodes that are holes.
pub fn volume_fraction(mask: &PerforatedMask) -> Result<f64> {
    let holes = mask.hole_count();
    let interior = holes + mask.material_count();
    if interior == 0 {
        return Err(Error::DegenerateInput("mask has no interior cells".into()));
    }
    Ok(holes as f64 / interior as f64)
}

/// Result of probing the uniform-density condition
/// `C r^n |F| <= |B(x, r) ∩ F| <= C^{-1} r^n |F|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCheck {
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Largest `C` compatible with the probes: `min(min_ratio, 1/max_ratio)`.
    pub constant: f64,
    /// False when some probe ball misses `F` entirely.
    pub satisfied: bool,
    pub probes: usize,
}

/// Evaluates `|B(x, r) ∩ F| / (r^n |F|)` at `probes` uniform centres.
///
/// `F` is the set of hole nodes of the mask. With `interior_only` the
/// centres are drawn from the points of `D` at distance at least `r` from
/// the boundary, so that probe balls are not cut by `∂D`.
pub fn density_ratio_check(
    mask: &PerforatedMask,
    r: f64,
    probes: usize,
    interior_only: bool,
    seed: u64,
) -> Result<DensityCheck> {
    if !(r > 0.0) || probes == 0 {
        return Err(Error::invalid("radius and probe count must be positive"));
    }
    let g = &mask.grid;
    let dim = g.dim;
    let holes: Vec<usize> = (0..g.len()).filter(|&i| mask.flags[i] == CellFlag::Hole).collect();
    if holes.is_empty() {
        return Err(Error::DegenerateInput("|F| = 0: density ratio undefined".into()));
    }
    let mut lo = mask.domain.lower;
    let mut hi = mask.domain.upper;
    if interior_only {
        for d in 0..dim {
            lo[d] += r;
            hi[d] -= r;
            if lo[d] > hi[d] {
                return Err(Error::invalid("probe radius too large for interior probing"));
            }
        }
    }
    let total = holes.len() as f64;
    let rn = r.powi(dim as i32);
    let box_nodes: f64 = (0..dim).map(|_| 2.0 * r / g.dx + 1.0).product();
    let scan_box = box_nodes < total;
    let mut rand = rng::stream(seed);
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = 0.0f64;
    for _ in 0..probes {
        let mut x = [0.0; 3];
        for d in 0..dim {
            x[d] = lo[d] + (hi[d] - lo[d]) * rand.random::<f64>();
        }
        let inside = |p: &Coord| (0..dim).map(|d| (p[d] - x[d]).powi(2)).sum::<f64>() <= r * r;
        let count = if scan_box {
            let mut rr = [(0usize, 0usize); 3];
            let mut empty = false;
            for d in 0..dim {
                match g.index_range(d, x[d] - r, x[d] + r) {
                    Some(v) => rr[d] = v,
                    None => empty = true,
                }
            }
            let mut c = 0usize;
            if !empty {
                for k in rr[2].0..=rr[2].1 {
                    for j in rr[1].0..=rr[1].1 {
                        for i in rr[0].0..=rr[0].1 {
                            let idx = g.index([i, j, k]);
                            if mask.flags[idx] == CellFlag::Hole && inside(&g.position(idx)) {
                                c += 1;
                            }
                        }
                    }
                }
            }
            c
        } else {
            holes.iter().filter(|&&i| inside(&g.position(i))).count()
        };
        let ratio = count as f64 / total / rn;
        min_ratio = min_ratio.min(ratio);
        max_ratio = max_ratio.max(ratio);
    }
    let constant = if max_ratio > 0.0 { min_ratio.min(1.0 / max_ratio) } else { 0.0 };
    Ok(DensityCheck {
        min_ratio,
        max_ratio,
        constant,
        satisfied: min_ratio > 0.0,
        probes,
    })
}

/// Pairs of distinct tubes that intersect: `(sharing an endpoint, other)`.
///
/// Tubes sharing an endpoint always meet; the second count is the number of
/// pairs of vertex-disjoint edges whose tubes still intersect.
pub fn tube_overlap_count(obstacles: &ObstacleSet) -> (usize, usize) {
    let ObstacleShape::Tubes { edges, radii } = &obstacles.shape else {
        return (0, 0);
    };
    if edges.len() < 2 {
        return (0, 0);
    }
    let pts = &obstacles.points.points;
    let mids: Vec<Coord> = edges
        .edges
        .iter()
        .map(|&(i, j)| {
            let mut m = [0.0; 3];
            for d in 0..3 {
                m[d] = 0.5 * (pts[i][d] + pts[j][d]);
            }
            m
        })
        .collect();
    let lmax = edges
        .edges
        .iter()
        .map(|&(i, j)| crate::geom::dist(&pts[i], &pts[j]))
        .fold(0.0, f64::max);
    let rmax = radii.iter().copied().fold(0.0, f64::max);
    let reach = lmax + 2.0 * rmax;
    let index = CellIndex::new(&mids, &obstacles.points.bbox, reach.max(1e-12));
    let (mut shared, mut crossing) = (0, 0);
    for (a, &(i, j)) in edges.edges.iter().enumerate() {
        index.for_each_within(&mids, &mids[a], reach, |b, _| {
            if b <= a {
                return;
            }
            let (k, l) = edges.edges[b];
            if i == k || i == l || j == k || j == l {
                shared += 1;
            } else {
                let d2 = segment_segment_dist2(&pts[i], &pts[j], &pts[k], &pts[l]);
                let s = radii[a] + radii[b];
                if d2 <= s * s {
                    crossing += 1;
                }
            }
        });
    }
    (shared, crossing)
}

/// Interior nodes closer than `width` to `∂D`.
pub fn boundary_layer_cells(mask: &PerforatedMask, width: f64) -> usize {
    let g = &mask.grid;
    (0..g.len())
        .filter(|&i| mask.flags[i] != CellFlag::Exterior)
        .filter(|&i| mask.domain.distance_to_boundary(&g.position(i)) < width)
        .count()
}

/// Summary record for a realized geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryStats {
    pub kind: String,
    pub dim: usize,
    pub points: usize,
    pub pieces: usize,
    pub epsilon: f64,
    pub volume_fraction: f64,
    pub hole_cells: usize,
    pub material_cells: usize,
    pub absorbers: usize,
    /// Connected components of the obstacle set (edges for tubes, touching
    /// pairs for balls).
    pub components: usize,
    pub min_pairwise_distance: Option<f64>,
    pub tube_overlaps_shared: usize,
    pub tube_overlaps_crossing: usize,
    pub boundary_layer_cells: usize,
    pub warnings: Vec<String>,
}

fn ball_contacts(obstacles: &ObstacleSet) -> EdgeSet {
    let ObstacleShape::Balls { radii } = &obstacles.shape else {
        return EdgeSet::default();
    };
    let pts = &obstacles.points.points;
    let rmax = radii.iter().copied().fold(0.0, f64::max);
    if pts.len() < 2 || rmax == 0.0 {
        return EdgeSet::default();
    }
    let index = CellIndex::new(pts, &obstacles.points.bbox, 2.0 * rmax);
    let mut pairs = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        index.for_each_within(pts, p, 2.0 * rmax, |j, d| {
            if j > i && d <= radii[i] + radii[j] {
                pairs.push((i, j));
            }
        });
    }
    EdgeSet::from_pairs(pairs)
}

/// Collects the geometry statistics; `layer` is the boundary-layer width.
pub fn geometry_stats(obstacles: &ObstacleSet, mask: &PerforatedMask, layer: f64) -> GeometryStats {
    let n = obstacles.points.len();
    let components = match &obstacles.shape {
        ObstacleShape::Tubes { edges, .. } => {
            let mut uf = UnionFind::new(n);
            let mut touched = vec![false; n];
            for &(i, j) in &edges.edges {
                uf.union(i, j);
                touched[i] = true;
                touched[j] = true;
            }
            let mut roots: Vec<usize> = (0..n).filter(|&i| touched[i]).map(|i| uf.find(i)).collect();
            roots.sort_unstable();
            roots.dedup();
            roots.len()
        }
        ObstacleShape::Balls { .. } => super::connected_components(n, &ball_contacts(obstacles)).len(),
    };
    let (shared, crossing) = tube_overlap_count(obstacles);
    GeometryStats {
        kind: obstacles.kind().to_string(),
        dim: obstacles.dim(),
        points: n,
        pieces: obstacles.len(),
        epsilon: obstacles.scale_applied,
        volume_fraction: volume_fraction(mask).unwrap_or(0.0),
        hole_cells: mask.hole_count(),
        material_cells: mask.material_count(),
        absorbers: mask.absorbers.len(),
        components,
        min_pairwise_distance: point_process::min_pairwise_distance(&obstacles.points),
        tube_overlaps_shared: shared,
        tube_overlaps_crossing: crossing,
        boundary_layer_cells: boundary_layer_cells(mask, layer),
        warnings: mask.warnings.clone(),
    }
}

/// Indices of balls whose centre lies at distance at least `factor` times
/// the radius from `∂D`. Tube sets have none.
pub fn strongly_contained(obstacles: &ObstacleSet, domain: &crate::geom::AxisBox, factor: f64) -> Vec<usize> {
    let ObstacleShape::Balls { radii } = &obstacles.shape else {
        return Vec::new();
    };
    obstacles
        .points
        .points
        .iter()
        .zip(radii)
        .enumerate()
        .filter(|(_, (p, &r))| domain.contains_closed(p) && domain.distance_to_boundary(p) >= factor * r)
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::AxisBox;
    use crate::point_process::PointConfiguration;
    use crate::random_geometry::{build_balls, rasterize, BallRadiusRule};

    fn lattice_balls(spacing: f64, radius: f64) -> (ObstacleSet, PerforatedMask) {
        let bbox = AxisBox::unit(2);
        let cfg = PointConfiguration::lattice(bbox, spacing).unwrap();
        let o = build_balls(&cfg, &BallRadiusRule::Fixed { radius }, 0).unwrap();
        let m = rasterize(&o, &bbox, 1.0 / 128.0).unwrap();
        (o, m)
    }

    #[test]
    fn periodic_balls_satisfy_density_condition() {
        let (_, m) = lattice_balls(0.125, 0.03);
        let c = density_ratio_check(&m, 0.2, 200, true, 7).unwrap();
        assert!(c.satisfied);
        assert!(c.max_ratio / c.min_ratio < 2.0, "{c:?}");
        assert!(c.constant > 0.0);
    }

    #[test]
    fn probe_covering_everything_gives_one_over_r_n() {
        let (_, m) = lattice_balls(0.25, 0.05);
        let r = 2.0;
        let c = density_ratio_check(&m, r, 20, false, 1).unwrap();
        assert!((c.min_ratio - 0.25).abs() < 1e-12);
        assert!((c.max_ratio - 0.25).abs() < 1e-12);
    }

    #[test]
    fn corner_obstacle_violates_density_condition() {
        let bbox = AxisBox::unit(2);
        let cfg = PointConfiguration::from_points(vec![[0.1, 0.1, 0.0]], bbox, 1.0).unwrap();
        let o = build_balls(&cfg, &BallRadiusRule::Fixed { radius: 0.05 }, 0).unwrap();
        let m = rasterize(&o, &bbox, 1.0 / 64.0).unwrap();
        let c = density_ratio_check(&m, 0.1, 200, false, 3).unwrap();
        assert_eq!(c.min_ratio, 0.0);
        assert!(!c.satisfied);
        assert!(density_ratio_check(&PerforatedMask::hole_free(&bbox, 0.125).unwrap(), 0.1, 5, false, 0).is_err());
    }

    #[test]
    fn volume_fraction_and_layer_counts() {
        let bbox = AxisBox::unit(2);
        let m = PerforatedMask::hole_free(&bbox, 0.125).unwrap();
        assert_eq!(volume_fraction(&m).unwrap(), 0.0);
        // 7x7 interior nodes; the outer two rings lie within 0.3 of the boundary
        assert_eq!(boundary_layer_cells(&m, 0.3), 49 - 9);
        assert_eq!(boundary_layer_cells(&m, 0.2), 49 - 25);
    }

    #[test]
    fn strongly_contained_skips_balls_near_boundary() {
        let bbox = AxisBox::unit(2);
        let pts = vec![[0.5, 0.5, 0.0], [0.05, 0.5, 0.0], [0.5, 0.9, 0.0]];
        let cfg = PointConfiguration::from_points(pts, bbox, 1.0).unwrap();
        let o = build_balls(&cfg, &BallRadiusRule::Fixed { radius: 0.04 }, 0).unwrap();
        assert_eq!(strongly_contained(&o, &bbox, 1.0), vec![0, 1, 2]);
        assert_eq!(strongly_contained(&o, &bbox, 2.0), vec![0, 2]);
        assert_eq!(strongly_contained(&o, &bbox, 3.0), vec![0]);
    }

    #[test]
    fn geometry_stats_counts_touching_balls() {
        let bbox = AxisBox::unit(2);
        let pts = vec![[0.3, 0.5, 0.0], [0.38, 0.5, 0.0], [0.7, 0.5, 0.0]];
        let cfg = PointConfiguration::from_points(pts, bbox, 1.0).unwrap();
        let o = build_balls(&cfg, &BallRadiusRule::Fixed { radius: 0.05 }, 0).unwrap();
        let m = rasterize(&o, &bbox, 1.0 / 64.0).unwrap();
        let s = geometry_stats(&o, &m, 0.1);
        assert_eq!(s.components, 2);
        assert_eq!(s.points, 3);
        assert!(s.volume_fraction > 0.0);
    }
}
