//! Perforated masks: the discrete indicator of `G^ε ∩ D` on a node grid.
//!
//! Node flags come from centre membership. In 3D an optional sub-grid model
//! represents balls too small to contain any node by an absorption term at
//! the nearest node, with a strength chosen so that the far field of the
//! discrete capacitary potential matches that of the ball.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{AxisBox, Coord};
use crate::grid::Grid;

use super::obstacles::{ObstacleSet, Piece};

/// Value at the origin of the Green's function of the 7-point graph
/// Laplacian on `Z^3` (Watson's integral divided by 6).
pub const LATTICE_GREEN_ORIGIN_3D: f64 = 0.252_731_009_858_663;

/// Balls with `radius < SUBGRID_RADIUS_LIMIT * dx` that contain no node
/// become absorbers under [`HoleModel::CapacityMatched`].
pub const SUBGRID_RADIUS_LIMIT: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum CellFlag {
    Material,
    Hole,
    /// Boundary of `D` (zero Dirichlet data) or outside it.
    Exterior,
}

impl CellFlag {
    fn code(self) -> char {
        match self {
            CellFlag::Material => 'M',
            CellFlag::Hole => 'H',
            CellFlag::Exterior => 'X',
        }
    }

    fn from_code(c: char) -> Option<Self> {
        match c {
            'M' => Some(CellFlag::Material),
            'H' => Some(CellFlag::Hole),
            'X' => Some(CellFlag::Exterior),
            _ => None,
        }
    }
}

/// Sub-grid obstacle attached to a material node: adds `strength * u^2` to
/// the Dirichlet energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Absorber {
    pub node: usize,
    pub strength: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoleModel {
    /// Pure centre membership; unresolved balls vanish.
    #[default]
    CenterOnly,
    /// Centre membership plus absorbers for sub-grid balls (3D only).
    CapacityMatched,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RasterOptions {
    pub hole_model: HoleModel,
}

/// Energy weight of a sub-grid ball of radius `r` on a grid of spacing `dx`.
///
/// With `E = Σ_edges dx (u_i - u_j)^2 + k u_0^2` and `u → 1` at infinity the
/// minimizer has far field `1 - k u_0 / (4π|x|)` and `u_0 = 1/(1 + k G_0/dx)`;
/// requiring `k u_0 = 4πr` gives `k = 4πr / (1 - 4π G_0 r / dx)`.
pub fn absorber_strength(r: f64, dx: f64) -> f64 {
    let c = 4.0 * PI * r;
    c / (1.0 - c * LATTICE_GREEN_ORIGIN_3D / dx)
}

/// Binary node mask over a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PerforatedMask {
    pub grid: Grid,
    pub domain: AxisBox,
    pub flags: Vec<CellFlag>,
    /// Sorted by node, at most one per node, only on material nodes.
    pub absorbers: Vec<Absorber>,
    pub epsilon: f64,
    /// Free-form description of the obstacle set.
    pub provenance: String,
    pub warnings: Vec<String>,
}

impl PerforatedMask {
    /// Mask without holes: boundary nodes exterior, the rest material.
    pub fn hole_free(domain: &AxisBox, dx: f64) -> Result<Self> {
        let grid = Grid::over(domain, dx)?;
        let flags = (0..grid.len())
            .map(|i| {
                if grid.on_boundary(grid.ijk(i)) {
                    CellFlag::Exterior
                } else {
                    CellFlag::Material
                }
            })
            .collect();
        Ok(PerforatedMask {
            grid,
            domain: *domain,
            flags,
            absorbers: Vec::new(),
            epsilon: 1.0,
            provenance: "none".into(),
            warnings: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn dx(&self) -> f64 {
        self.grid.dx
    }

    #[inline]
    pub fn flag(&self, idx: usize) -> CellFlag {
        self.flags[idx]
    }

    #[inline]
    pub fn is_material(&self, idx: usize) -> bool {
        self.flags[idx] == CellFlag::Material
    }

    pub fn count(&self, flag: CellFlag) -> usize {
        self.flags.iter().filter(|&&f| f == flag).count()
    }

    pub fn material_count(&self) -> usize {
        self.count(CellFlag::Material)
    }

    pub fn hole_count(&self) -> usize {
        self.count(CellFlag::Hole)
    }

    /// Absorption strength per node (zero where there is none).
    pub fn absorption(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.grid.len()];
        for ab in &self.absorbers {
            a[ab.node] += ab.strength;
        }
        a
    }

    /// True if every hole (and absorber) of `self` is a hole (or carries at
    /// least the same absorption) in `other`, on an identical grid.
    pub fn is_subset_of(&self, other: &PerforatedMask) -> bool {
        if self.grid != other.grid {
            return false;
        }
        let holes = self
            .flags
            .iter()
            .zip(&other.flags)
            .all(|(a, b)| *a != CellFlag::Hole || *b != CellFlag::Material);
        let theirs = other.absorption();
        holes
            && self.absorbers.iter().all(|ab| {
                other.flags[ab.node] != CellFlag::Material || theirs[ab.node] >= ab.strength
            })
    }

    /// Union of the holes of two masks on the same grid.
    pub fn union(&self, other: &PerforatedMask) -> Result<PerforatedMask> {
        if self.grid != other.grid {
            return Err(Error::invalid("mask grids differ"));
        }
        let mut out = self.clone();
        for (f, g) in out.flags.iter_mut().zip(&other.flags) {
            if *f == CellFlag::Material && *g == CellFlag::Hole {
                *f = CellFlag::Hole;
            }
        }
        let mut abs = self.absorbers.clone();
        abs.extend(other.absorbers.iter().copied());
        out.absorbers = merge_absorbers(abs, &out.flags);
        out.provenance = format!("union({}, {})", self.provenance, other.provenance);
        Ok(out)
    }

    /// Restriction to a sub-box whose faces lie on grid nodes. Flags are
    /// copied unchanged, so the sub-box faces keep their original flags.
    pub fn restrict(&self, region: &AxisBox) -> Result<PerforatedMask> {
        if !self.domain.contains_box(region) {
            return Err(Error::invalid("region escapes the mask domain"));
        }
        let g = &self.grid;
        let mut lo = [0usize; 3];
        for d in 0..g.dim {
            let t = (region.lower[d] - g.origin[d]) / g.dx;
            if (t - t.round()).abs() > 1e-6 {
                return Err(Error::invalid("region faces must lie on grid nodes"));
            }
            lo[d] = t.round() as usize;
        }
        let mut sub = Grid::over(region, g.dx)?;
        for d in 0..g.dim {
            sub.origin[d] = g.origin[d] + lo[d] as f64 * g.dx;
            if lo[d] + sub.shape[d] > g.shape[d] {
                return Err(Error::invalid("region escapes the grid"));
            }
        }
        let mut flags = Vec::with_capacity(sub.len());
        for idx in 0..sub.len() {
            let ijk = sub.ijk(idx);
            let gidx = g.index([ijk[0] + lo[0], ijk[1] + lo[1], ijk[2] + lo[2]]);
            flags.push(self.flags[gidx]);
        }
        let mut absorbers = Vec::new();
        for ab in &self.absorbers {
            let ijk = g.ijk(ab.node);
            let inside = (0..3).all(|d| ijk[d] >= lo[d] && ijk[d] < lo[d] + sub.shape[d]);
            if inside {
                let local = [ijk[0] - lo[0], ijk[1] - lo[1], ijk[2] - lo[2]];
                absorbers.push(Absorber {
                    node: sub.index(local),
                    strength: ab.strength,
                });
            }
        }
        Ok(PerforatedMask {
            grid: sub,
            domain: *region,
            flags,
            absorbers,
            epsilon: self.epsilon,
            provenance: self.provenance.clone(),
            warnings: self.warnings.clone(),
        })
    }

    /// Serializes to the versioned text format: header lines, a run-length
    /// encoded flag stream, then the absorber list.
    pub fn to_text(&self) -> String {
        let g = &self.grid;
        let dim = g.dim;
        let v = |c: &Coord| (0..dim).map(|d| format!("{:e}", c[d])).collect::<Vec<_>>().join(" ");
        let mut s = String::new();
        let _ = writeln!(s, "format_version 1");
        let _ = writeln!(s, "dim {dim}");
        let _ = writeln!(s, "shape {}", (0..dim).map(|d| g.shape[d].to_string()).collect::<Vec<_>>().join(" "));
        let _ = writeln!(s, "dx {:e}", g.dx);
        let _ = writeln!(s, "origin {}", v(&g.origin));
        let _ = writeln!(s, "domain_lower {}", v(&self.domain.lower));
        let _ = writeln!(s, "domain_upper {}", v(&self.domain.upper));
        let _ = writeln!(s, "epsilon {:e}", self.epsilon);
        let _ = writeln!(s, "kind {}", self.provenance.replace('\n', " "));
        for w in &self.warnings {
            let _ = writeln!(s, "warning {}", w.replace('\n', " "));
        }
        let runs = rle(&self.flags);
        let _ = writeln!(s, "flags {}", runs.len());
        for chunk in runs.chunks(16) {
            let line: Vec<String> = chunk.iter().map(|(f, n)| format!("{}{}", f.code(), n)).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        let _ = writeln!(s, "absorbers {}", self.absorbers.len());
        for ab in &self.absorbers {
            let _ = writeln!(s, "{} {:e}", ab.node, ab.strength);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<PerforatedMask> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let mut next = |what: &str| lines.next().ok_or_else(|| Error::parse(format!("missing {what}")));
        let field = |line: &str, key: &str| -> Result<String> {
            line.strip_prefix(key)
                .map(|r| r.trim().to_string())
                .ok_or_else(|| Error::parse(format!("expected '{key}', found '{line}'")))
        };
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::parse(format!("bad number '{s}'")));
        let version = field(next("version")?, "format_version")?;
        if version != "1" {
            return Err(Error::parse(format!("unsupported mask format_version {version}")));
        }
        let dim: usize = field(next("dim")?, "dim")?
            .parse()
            .map_err(|_| Error::parse("bad dim"))?;
        let coords = |s: String| -> Result<Coord> {
            let parts: Vec<&str> = s.split_whitespace().collect();
            if parts.len() != dim {
                return Err(Error::parse("coordinate count does not match dim"));
            }
            let mut c = [0.0; 3];
            for (d, p) in parts.iter().enumerate() {
                c[d] = num(p)?;
            }
            Ok(c)
        };
        let shape_s = field(next("shape")?, "shape")?;
        let mut shape = [1usize; 3];
        let parts: Vec<&str> = shape_s.split_whitespace().collect();
        if parts.len() != dim {
            return Err(Error::parse("shape length does not match dim"));
        }
        for (d, p) in parts.iter().enumerate() {
            shape[d] = p.parse().map_err(|_| Error::parse("bad shape"))?;
        }
        let dx = num(&field(next("dx")?, "dx")?)?;
        let origin = coords(field(next("origin")?, "origin")?)?;
        let lower = coords(field(next("domain_lower")?, "domain_lower")?)?;
        let upper = coords(field(next("domain_upper")?, "domain_upper")?)?;
        let epsilon = num(&field(next("epsilon")?, "epsilon")?)?;
        let provenance = field(next("kind")?, "kind")?;
        let mut warnings = Vec::new();
        let mut line = next("flags")?;
        while let Some(w) = line.strip_prefix("warning") {
            warnings.push(w.trim().to_string());
            line = next("flags")?;
        }
        let nruns: usize = field(line, "flags")?
            .parse()
            .map_err(|_| Error::parse("bad run count"))?;
        let grid = Grid { dim, shape, origin, dx };
        let mut flags = Vec::with_capacity(grid.len());
        let mut seen = 0;
        while seen < nruns {
            for tok in next("flag runs")?.split_whitespace() {
                let mut chars = tok.chars();
                let f = chars
                    .next()
                    .and_then(CellFlag::from_code)
                    .ok_or_else(|| Error::parse(format!("bad run '{tok}'")))?;
                let n: usize = chars.as_str().parse().map_err(|_| Error::parse(format!("bad run '{tok}'")))?;
                flags.extend(std::iter::repeat_n(f, n));
                seen += 1;
            }
        }
        if flags.len() != grid.len() {
            return Err(Error::parse(format!(
                "flag stream has {} entries, grid has {}",
                flags.len(),
                grid.len()
            )));
        }
        let nabs: usize = field(next("absorbers")?, "absorbers")?
            .parse()
            .map_err(|_| Error::parse("bad absorber count"))?;
        let mut absorbers = Vec::with_capacity(nabs);
        for _ in 0..nabs {
            let l = next("absorber")?;
            let (a, b) = l.split_once(' ').ok_or_else(|| Error::parse("bad absorber line"))?;
            let node: usize = a.parse().map_err(|_| Error::parse("bad absorber node"))?;
            if node >= grid.len() {
                return Err(Error::parse("absorber node out of range"));
            }
            absorbers.push(Absorber {
                node,
                strength: num(b.trim())?,
            });
        }
        Ok(PerforatedMask {
            grid,
            domain: AxisBox::new(dim, lower, upper)?,
            flags,
            absorbers,
            epsilon,
            provenance,
            warnings,
        })
    }
}

fn rle(flags: &[CellFlag]) -> Vec<(CellFlag, usize)> {
    let mut runs: Vec<(CellFlag, usize)> = Vec::new();
    for &f in flags {
        match runs.last_mut() {
            Some((g, n)) if *g == f => *n += 1,
            _ => runs.push((f, 1)),
        }
    }
    runs
}

/// Sums absorbers sharing a node and drops those not on material nodes.
fn merge_absorbers(mut abs: Vec<Absorber>, flags: &[CellFlag]) -> Vec<Absorber> {
    abs.retain(|a| flags[a.node] == CellFlag::Material);
    abs.sort_by_key(|a| a.node);
    let mut out: Vec<Absorber> = Vec::with_capacity(abs.len());
    for a in abs {
        match out.last_mut() {
            Some(b) if b.node == a.node => b.strength += a.strength,
            _ => out.push(a),
        }
    }
    out
}

/// Rasterizes with default options (centre membership only).
pub fn rasterize(obstacles: &ObstacleSet, domain: &AxisBox, dx: f64) -> Result<PerforatedMask> {
    rasterize_with(obstacles, domain, dx, &RasterOptions::default())
}

/// Flags each interior node as a hole iff it lies in the closed obstacle set.
pub fn rasterize_with(
    obstacles: &ObstacleSet,
    domain: &AxisBox,
    dx: f64,
    options: &RasterOptions,
) -> Result<PerforatedMask> {
    if obstacles.dim() != domain.dim {
        return Err(Error::invalid("obstacle and domain dimensions differ"));
    }
    let mut mask = PerforatedMask::hole_free(domain, dx)?;
    let grid = mask.grid;
    let dim = grid.dim;
    let subgrid = dim == 3 && options.hole_model == HoleModel::CapacityMatched;
    let limit = SUBGRID_RADIUS_LIMIT * dx;

    let mut stamped: Vec<Piece> = Vec::new();
    let mut small: Vec<(Coord, f64)> = Vec::new();
    for piece in obstacles.pieces() {
        match piece {
            Piece::Ball { center, radius } if subgrid && radius < limit => small.push((center, radius)),
            _ => stamped.push(piece),
        }
    }
    // bucket pieces by the slabs (last axis) their bounding boxes touch
    let slab_axis = dim - 1;
    let nslab = grid.shape[slab_axis];
    let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); nslab];
    let mut ranges: Vec<[(usize, usize); 3]> = Vec::with_capacity(stamped.len());
    for (pi, piece) in stamped.iter().enumerate() {
        let (lo, hi) = piece.bounds();
        let mut r = [(0usize, 0usize); 3];
        let mut empty = false;
        for d in 0..dim {
            match grid.index_range(d, lo[d], hi[d]) {
                Some(x) => r[d] = x,
                None => empty = true,
            }
        }
        ranges.push(r);
        if !empty {
            for b in &mut buckets[r[slab_axis].0..=r[slab_axis].1] {
                b.push(pi as u32);
            }
        }
    }
    let slab_len = grid.len() / nslab;
    mask.flags
        .par_chunks_mut(slab_len)
        .enumerate()
        .for_each(|(s, slab)| {
            for &pi in &buckets[s] {
                let piece = &stamped[pi as usize];
                let r = ranges[pi as usize];
                let (j0, j1) = if dim == 3 { r[1] } else { (0, 0) };
                for j in j0..=j1 {
                    for i in r[0].0..=r[0].1 {
                        let ijk = if dim == 3 { [i, j, s] } else { [i, s, 0] };
                        let local = if dim == 3 { i + grid.shape[0] * j } else { i };
                        if slab[local] != CellFlag::Material {
                            continue;
                        }
                        let mut p = [0.0; 3];
                        for d in 0..dim {
                            p[d] = grid.origin[d] + ijk[d] as f64 * dx;
                        }
                        if piece.contains(&p) {
                            slab[local] = CellFlag::Hole;
                        }
                    }
                }
            }
        });

    let mut absorbers = Vec::new();
    let mut swallowed = 0usize;
    for (center, radius) in &small {
        let ball = Piece::Ball { center: *center, radius: *radius };
        let node = grid.nearest_node(center);
        let np = grid.position(node);
        if ball.contains(&np) {
            if mask.flags[node] == CellFlag::Material {
                mask.flags[node] = CellFlag::Hole;
            }
            continue;
        }
        if !domain.contains_closed(center) {
            continue;
        }
        match mask.flags[node] {
            CellFlag::Material => absorbers.push(Absorber {
                node,
                strength: absorber_strength(*radius, dx),
            }),
            _ => swallowed += 1,
        }
    }
    mask.absorbers = merge_absorbers(absorbers, &mask.flags);

    if let Some(rmin) = obstacles.min_feature_radius() {
        if rmin < dx {
            let resolved = if subgrid { "; sub-grid balls carry absorbers" } else { "" };
            mask.warnings.push(format!(
                "resolution loss: smallest feature radius {rmin:.3e} is below dx = {dx:.3e}{resolved}"
            ));
        }
    }
    if swallowed > 0 {
        mask.warnings.push(format!("{swallowed} sub-grid balls fell on hole or boundary nodes"));
    }
    mask.warnings.extend(obstacles.warnings.iter().cloned());
    mask.epsilon = obstacles.scale_applied;
    mask.provenance = format!(
        "{} n={} pieces={} eps={:e}",
        obstacles.kind(),
        obstacles.points.len(),
        obstacles.len(),
        obstacles.scale_applied
    );
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point_process::PointConfiguration;
    use crate::random_geometry::{build_balls, BallRadiusRule};

    fn single_ball(dim: usize, center: Coord, radius: f64, side: f64) -> ObstacleSet {
        let cfg = PointConfiguration::from_points(vec![center], AxisBox::cube(dim, 0.0, side).unwrap(), 1.0)
            .unwrap();
        build_balls(&cfg, &BallRadiusRule::Fixed { radius }, 0).unwrap()
    }

    #[test]
    fn empty_obstacles_give_all_material_interior() {
        let cfg = PointConfiguration::from_points(vec![], AxisBox::unit(2), 0.0).unwrap();
        let m = rasterize(&ObstacleSet::empty(cfg), &AxisBox::unit(2), 0.125).unwrap();
        assert_eq!(m.hole_count(), 0);
        assert_eq!(m.material_count(), 7 * 7);
        assert_eq!(m.count(CellFlag::Exterior), 81 - 49);
    }

    #[test]
    fn disc_area_converges() {
        let r = 0.25;
        let dx = 1.0 / 256.0;
        let o = single_ball(2, [0.5, 0.5, 0.0], r, 1.0);
        let m = rasterize(&o, &AxisBox::unit(2), dx).unwrap();
        let area = m.hole_count() as f64 * dx * dx;
        let exact = std::f64::consts::PI * r * r;
        assert!((area - exact).abs() <= 2.0 * dx * 2.0 * std::f64::consts::PI * r);
    }

    #[test]
    fn holes_match_indicator_exactly() {
        let o = single_ball(3, [0.41, 0.52, 0.47], 0.23, 1.0);
        let m = rasterize(&o, &AxisBox::unit(3), 1.0 / 32.0).unwrap();
        for idx in 0..m.grid.len() {
            if m.flags[idx] != CellFlag::Exterior {
                assert_eq!(m.flags[idx] == CellFlag::Hole, o.contains(&m.grid.position(idx)));
            }
        }
    }

    #[test]
    fn refinement_keeps_shared_nodes() {
        let o = single_ball(2, [0.37, 0.61, 0.0], 0.2, 1.0);
        let coarse = rasterize(&o, &AxisBox::unit(2), 1.0 / 32.0).unwrap();
        let fine = rasterize(&o, &AxisBox::unit(2), 1.0 / 64.0).unwrap();
        for idx in 0..coarse.grid.len() {
            let [i, j, _] = coarse.grid.ijk(idx);
            assert_eq!(coarse.flags[idx], fine.flags[fine.grid.index([2 * i, 2 * j, 0])]);
        }
    }

    #[test]
    fn subgrid_ball_becomes_absorber() {
        let dx = 0.1;
        let o = single_ball(3, [0.52, 0.47, 0.51], 0.01, 1.0);
        let plain = rasterize(&o, &AxisBox::unit(3), dx).unwrap();
        assert_eq!(plain.hole_count(), 0);
        assert!(plain.absorbers.is_empty());
        assert!(plain.warnings.iter().any(|w| w.contains("resolution")));
        let opts = RasterOptions { hole_model: HoleModel::CapacityMatched };
        let m = rasterize_with(&o, &AxisBox::unit(3), dx, &opts).unwrap();
        assert_eq!(m.hole_count(), 0);
        assert_eq!(m.absorbers.len(), 1);
        assert_eq!(m.grid.ijk(m.absorbers[0].node), [5, 5, 5]);
        let k = m.absorbers[0].strength;
        let u0 = 1.0 / (1.0 + k * LATTICE_GREEN_ORIGIN_3D / dx);
        assert!((k * u0 - 4.0 * PI * 0.01).abs() < 1e-15);
        // balls covering a node stay holes
        let o = single_ball(3, [0.5, 0.5, 0.5], 0.01, 1.0);
        let m = rasterize_with(&o, &AxisBox::unit(3), dx, &opts).unwrap();
        assert_eq!(m.hole_count(), 1);
        assert!(m.absorbers.is_empty());
    }

    #[test]
    fn text_round_trip() {
        let dx = 0.05;
        let cfg = PointConfiguration::from_points(
            vec![[0.3, 0.3, 0.3], [0.71, 0.66, 0.52]],
            AxisBox::unit(3),
            1.0,
        )
        .unwrap();
        let o = build_balls(&cfg, &BallRadiusRule::NearestNeighborCapped { radius: 0.2, theta: 0.5 }, 0)
            .unwrap();
        let mut m = rasterize_with(&o, &AxisBox::unit(3), dx, &RasterOptions::default()).unwrap();
        m.absorbers.push(Absorber { node: 1000, strength: 0.012345678901234567 });
        m.warnings.push("note".into());
        let back = PerforatedMask::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert!(PerforatedMask::from_text("format_version 2").is_err());
    }

    #[test]
    fn restriction_and_union() {
        let o = single_ball(2, [0.5, 0.5, 0.0], 0.2, 1.0);
        let m = rasterize(&o, &AxisBox::unit(2), 0.0625).unwrap();
        let sub = m.restrict(&AxisBox::cube(2, 0.25, 0.75).unwrap()).unwrap();
        assert_eq!(sub.grid.shape, [9, 9, 1]);
        assert_eq!(sub.hole_count(), m.hole_count());
        assert!(m.restrict(&AxisBox::cube(2, 0.26, 0.75).unwrap()).is_err());
        let empty = PerforatedMask::hole_free(&AxisBox::unit(2), 0.0625).unwrap();
        assert!(empty.is_subset_of(&m));
        assert!(!m.is_subset_of(&empty));
        assert_eq!(empty.union(&m).unwrap().flags, m.flags);
    }
}
