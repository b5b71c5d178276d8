//! Homogeneous Poisson point processes in boxes.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::geom::{AxisBox, Coord};
use crate::rng;

/// Mean below which the Poisson count is drawn by sequential inversion.
const INVERSION_LIMIT: f64 = 30.0;

/// A finite realization of a point process inside `bbox`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointConfiguration {
    pub points: Vec<Coord>,
    pub bbox: AxisBox,
    /// Points per unit volume of the generating process.
    pub intensity: f64,
    pub seed: u64,
}

impl PointConfiguration {
    pub fn dim(&self) -> usize {
        self.bbox.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Deterministic configuration, e.g. a periodic lattice.
    pub fn from_points(points: Vec<Coord>, bbox: AxisBox, intensity: f64) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !bbox.contains_closed(p)) {
            return Err(Error::invalid(format!("point {p:?} outside box")));
        }
        Ok(PointConfiguration {
            points,
            bbox,
            intensity,
            seed: 0,
        })
    }

    /// Lattice of spacing `spacing` with points at cell centers of `bbox`.
    pub fn lattice(bbox: AxisBox, spacing: f64) -> Result<Self> {
        let n = bbox
            .divisions(spacing, 1e-9)
            .ok_or_else(|| Error::invalid("lattice spacing must divide the box"))?;
        let mut points = Vec::with_capacity(n[0] * n[1] * n[2]);
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    let idx = [i, j, k];
                    let mut p = [0.0; 3];
                    for d in 0..bbox.dim {
                        p[d] = bbox.lower[d] + (idx[d] as f64 + 0.5) * spacing;
                    }
                    points.push(p);
                }
            }
        }
        let intensity = 1.0 / spacing.powi(bbox.dim as i32);
        Self::from_points(points, bbox, intensity)
    }
}

/// Draws a Poisson(`mean`) count.
fn poisson_count<R: Rng>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean <= INVERSION_LIMIT {
        let u: f64 = rng.random();
        let mut k = 0u64;
        let mut p = (-mean).exp();
        let mut cdf = p;
        while u > cdf {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
            if p == 0.0 {
                break;
            }
        }
        k
    } else {
        let dist = Poisson::new(mean).expect("finite positive mean");
        dist.sample(rng) as u64
    }
}

/// Samples a homogeneous Poisson process of the given intensity in `bbox`.
///
/// The count is Poisson(`intensity * volume`); given the count, points are
/// i.i.d. uniform in the half-open box. Identical arguments give
/// bit-identical output.
pub fn sample_poisson(bbox: &AxisBox, intensity: f64, seed: u64) -> Result<PointConfiguration> {
    if !intensity.is_finite() || intensity < 0.0 {
        return Err(Error::invalid(format!("intensity must be finite and >= 0, got {intensity}")));
    }
    let bbox = AxisBox::new(bbox.dim, bbox.lower, bbox.upper)?;
    let mut rng = rng::stream(seed);
    let n = poisson_count(intensity * bbox.volume(), &mut rng);
    let mut points = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let mut p = [0.0; 3];
        for d in 0..bbox.dim {
            loop {
                let u: f64 = rng.random();
                let x = bbox.lower[d] + u * bbox.side(d);
                if x < bbox.upper[d] {
                    p[d] = x;
                    break;
                }
            }
        }
        points.push(p);
    }
    Ok(PointConfiguration {
        points,
        bbox,
        intensity,
        seed,
    })
}

/// Shifts every point and the box by `shift`.
pub fn translate(config: &PointConfiguration, shift: &Coord) -> PointConfiguration {
    let dim = config.dim();
    let points = config
        .points
        .iter()
        .map(|p| {
            let mut q = *p;
            for d in 0..dim {
                q[d] += shift[d];
            }
            q
        })
        .collect();
    PointConfiguration {
        points,
        bbox: config.bbox.translated(shift),
        intensity: config.intensity,
        seed: config.seed,
    }
}

/// Multiplies points and box by `factor`; the intensity becomes
/// `intensity / factor^dim`.
pub fn scale(config: &PointConfiguration, factor: f64) -> Result<PointConfiguration> {
    if !(factor > 0.0) || !factor.is_finite() {
        return Err(Error::invalid(format!("scale factor must be > 0, got {factor}")));
    }
    let dim = config.dim();
    let points = config
        .points
        .iter()
        .map(|p| {
            let mut q = *p;
            for d in 0..dim {
                q[d] *= factor;
            }
            q
        })
        .collect();
    Ok(PointConfiguration {
        points,
        bbox: config.bbox.scaled(factor),
        intensity: config.intensity / factor.powi(dim as i32),
        seed: config.seed,
    })
}

/// Number of points in `region` (closed lower face, open upper face).
pub fn count_in(config: &PointConfiguration, region: &AxisBox) -> Result<usize> {
    if !config.bbox.contains_box(region) {
        return Err(Error::invalid("count region escapes the configuration box"));
    }
    Ok(config
        .points
        .iter()
        .filter(|p| region.contains_half_open(p))
        .count())
}

/// Per-cell point counts on the grid of cubes of side `cell_size`,
/// x-fastest ordering.
pub fn cell_counts(config: &PointConfiguration, cell_size: f64) -> Result<Vec<usize>> {
    let bbox = &config.bbox;
    let n = bbox.divisions(cell_size, 1e-9).ok_or_else(|| {
        Error::invalid(format!("box is not partitionable into cells of side {cell_size}"))
    })?;
    let mut counts = vec![0usize; n[0] * n[1] * n[2]];
    for p in &config.points {
        let mut idx = [0usize; 3];
        for d in 0..bbox.dim {
            let t = ((p[d] - bbox.lower[d]) / cell_size).floor();
            idx[d] = (t.max(0.0) as usize).min(n[d] - 1);
        }
        counts[idx[0] + n[0] * (idx[1] + n[1] * idx[2])] += 1;
    }
    Ok(counts)
}

/// Fraction of grid cells of side `cell_size` that contain no point.
pub fn empty_cell_frequency(config: &PointConfiguration, cell_size: f64) -> Result<f64> {
    let counts = cell_counts(config, cell_size)?;
    let empty = counts.iter().filter(|&&c| c == 0).count();
    Ok(empty as f64 / counts.len() as f64)
}

/// Smallest pairwise distance, `None` for fewer than two points.
pub fn min_pairwise_distance(config: &PointConfiguration) -> Option<f64> {
    if config.len() < 2 {
        return None;
    }
    nearest_neighbor_distances(config).into_iter().reduce(f64::min)
}

/// Distance from each point to its nearest other point (`+inf` if alone).
pub fn nearest_neighbor_distances(config: &PointConfiguration) -> Vec<f64> {
    let n = config.len();
    if n < 2 {
        return vec![f64::INFINITY; n];
    }
    // cell list with roughly one point per cell
    let dim = config.dim();
    let cell = (config.bbox.volume() / n as f64).powf(1.0 / dim as f64);
    let index = crate::random_geometry::CellIndex::new(&config.points, &config.bbox, cell);
    config
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| index.nearest_other(&config.points, i, p))
        .collect()
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes a configuration to the line-oriented text format:
///
/// ```text
/// # format_version 1
/// dim 2; box 0.0e0,0.0e0..1.0e0,1.0e0; intensity 1.0e0; seed 42
/// x y
/// ...
/// ```
/// Coordinates carry 17 significant digits.
pub fn to_text(config: &PointConfiguration) -> String {
    let dim = config.dim();
    let join = |c: &Coord| (0..dim).map(|d| fmt_f64(c[d])).collect::<Vec<_>>().join(",");
    let mut s = String::new();
    s.push_str("# format_version 1\n");
    let _ = writeln!(
        s,
        "dim {dim}; box {}..{}; intensity {}; seed {}",
        join(&config.bbox.lower),
        join(&config.bbox.upper),
        fmt_f64(config.intensity),
        config.seed
    );
    for p in &config.points {
        let line = (0..dim).map(|d| fmt_f64(p[d])).collect::<Vec<_>>().join(" ");
        s.push_str(&line);
        s.push('\n');
    }
    s
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::parse(format!("bad number '{s}'")))
}

/// Parses the text format written by [`to_text`].
pub fn from_text(text: &str) -> Result<PointConfiguration> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let first = lines.next().ok_or_else(|| Error::parse("empty point file"))?;
    let header = if first.starts_with('#') {
        let v = first.trim_start_matches('#').trim();
        if v != "format_version 1" {
            return Err(Error::parse(format!("unsupported point file version '{v}'")));
        }
        lines.next().ok_or_else(|| Error::parse("missing header"))?
    } else {
        first
    };
    let mut dim = None;
    let mut bbox = None;
    let mut intensity = None;
    let mut seed = None;
    for field in header.split(';') {
        let field = field.trim();
        let (key, value) = field
            .split_once(' ')
            .ok_or_else(|| Error::parse(format!("bad header field '{field}'")))?;
        match key {
            "dim" => dim = Some(value.trim().parse::<usize>().map_err(|_| Error::parse("bad dim"))?),
            "box" => bbox = Some(value.trim().to_string()),
            "intensity" => intensity = Some(parse_f64(value)?),
            "seed" => seed = Some(value.trim().parse::<u64>().map_err(|_| Error::parse("bad seed"))?),
            other => return Err(Error::parse(format!("unknown header field '{other}'"))),
        }
    }
    let dim = dim.ok_or_else(|| Error::parse("missing dim"))?;
    let bbox_str = bbox.ok_or_else(|| Error::parse("missing box"))?;
    let (lo, hi) = bbox_str
        .split_once("..")
        .ok_or_else(|| Error::parse("box must be lo..hi"))?;
    let parse_coord = |s: &str| -> Result<Coord> {
        let mut c = [0.0; 3];
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != dim {
            return Err(Error::parse("box coordinate count does not match dim"));
        }
        for (d, p) in parts.iter().enumerate() {
            c[d] = parse_f64(p)?;
        }
        Ok(c)
    };
    let bbox = AxisBox::new(dim, parse_coord(lo)?, parse_coord(hi)?)?;
    let mut points = Vec::new();
    for line in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != dim {
            return Err(Error::parse(format!("point line has {} coordinates", parts.len())));
        }
        let mut p = [0.0; 3];
        for (d, v) in parts.iter().enumerate() {
            p[d] = parse_f64(v)?;
        }
        points.push(p);
    }
    Ok(PointConfiguration {
        points,
        bbox,
        intensity: intensity.ok_or_else(|| Error::parse("missing intensity"))?,
        seed: seed.ok_or_else(|| Error::parse("missing seed"))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_intensity_is_empty() {
        let c = sample_poisson(&AxisBox::unit(3), 0.0, 9).unwrap();
        assert!(c.is_empty());
        assert_eq!(empty_cell_frequency(&c, 0.25).unwrap(), 1.0);
    }

    #[test]
    fn rejects_bad_intensity() {
        assert!(sample_poisson(&AxisBox::unit(2), f64::NAN, 1).is_err());
        assert!(sample_poisson(&AxisBox::unit(2), -1.0, 1).is_err());
        assert!(sample_poisson(&AxisBox::unit(2), f64::INFINITY, 1).is_err());
    }

    #[test]
    fn same_seed_same_points() {
        let b = AxisBox::cube(2, 0.0, 10.0).unwrap();
        let a = sample_poisson(&b, 3.0, 77).unwrap();
        let c = sample_poisson(&b, 3.0, 77).unwrap();
        assert_eq!(a, c);
        let d = sample_poisson(&b, 3.0, 78).unwrap();
        assert_ne!(a.points, d.points);
    }

    #[test]
    fn large_mean_branch_is_used_and_inside() {
        let b = AxisBox::cube(3, -2.0, 2.0).unwrap();
        let c = sample_poisson(&b, 5.0, 1).unwrap();
        assert!(c.len() > 200);
        assert!(c.points.iter().all(|p| b.contains_half_open(p)));
    }

    #[test]
    fn count_regions() {
        let b = AxisBox::unit(2);
        let c = sample_poisson(&b, 50.0, 3).unwrap();
        assert_eq!(count_in(&c, &b).unwrap(), c.len());
        let left = AxisBox::new(2, [0.0, 0.0, 0.0], [0.5, 1.0, 0.0]).unwrap();
        let right = AxisBox::new(2, [0.5, 0.0, 0.0], [1.0, 1.0, 0.0]).unwrap();
        assert_eq!(count_in(&c, &left).unwrap() + count_in(&c, &right).unwrap(), c.len());
        let outside = AxisBox::new(2, [0.5, 0.0, 0.0], [1.5, 1.0, 0.0]).unwrap();
        assert!(count_in(&c, &outside).is_err());
        let empty = PointConfiguration::from_points(vec![], b, 0.0).unwrap();
        assert_eq!(count_in(&empty, &left).unwrap(), 0);
    }

    #[test]
    fn scale_rejects_nonpositive() {
        let c = sample_poisson(&AxisBox::unit(2), 5.0, 3).unwrap();
        assert!(scale(&c, 0.0).is_err());
        assert!(scale(&c, -1.0).is_err());
        assert_eq!(scale(&c, 1.0).unwrap(), c);
    }

    #[test]
    fn scaling_scales_nearest_neighbour_distances() {
        let c = sample_poisson(&AxisBox::cube(3, 0.0, 4.0).unwrap(), 2.0, 5).unwrap();
        let s = scale(&c, 0.125).unwrap();
        let d0 = nearest_neighbor_distances(&c);
        let d1 = nearest_neighbor_distances(&s);
        for (a, b) in d0.iter().zip(&d1) {
            // multiplication by a power of two is exact
            assert_eq!(a * 0.125, *b);
        }
    }

    #[test]
    fn nearest_neighbour_matches_brute_force() {
        let c = sample_poisson(&AxisBox::cube(2, 0.0, 5.0).unwrap(), 3.0, 11).unwrap();
        let fast = nearest_neighbor_distances(&c);
        for (i, p) in c.points.iter().enumerate() {
            let brute = c
                .points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| crate::geom::dist(p, q))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(fast[i], brute);
        }
    }

    #[test]
    fn empty_cells_require_partition() {
        let c = sample_poisson(&AxisBox::unit(2), 1.0, 3).unwrap();
        assert!(empty_cell_frequency(&c, 0.3).is_err());
    }

    #[test]
    fn text_round_trip_is_exact() {
        let c = sample_poisson(&AxisBox::cube(3, -1.0, 2.5).unwrap(), 2.0, 123).unwrap();
        let back = from_text(&to_text(&c)).unwrap();
        assert_eq!(back, c);
    }
}
