use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::dist;
use crate::point_process::PointConfiguration;
use crate::rng;

use super::CellIndex;

/// Distance-to-probability map of the random connection model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConnectivityFunction {
    /// `g(d) = 1` on `[c1, c2]`, zero elsewhere.
    Annulus { c1: f64, c2: f64 },
    /// Piecewise-linear interpolation of `(distance, probability)` knots;
    /// constant beyond the first and last knot.
    General { table: Vec<(f64, f64)> },
}

impl ConnectivityFunction {
    pub fn annulus(c1: f64, c2: f64) -> Result<Self> {
        let g = ConnectivityFunction::Annulus { c1, c2 };
        g.validate()?;
        Ok(g)
    }

    pub fn general(table: Vec<(f64, f64)>) -> Result<Self> {
        let g = ConnectivityFunction::General { table };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ConnectivityFunction::Annulus { c1, c2 } => {
                if !(*c1 > 0.0) || !(c2 >= c1) || !c2.is_finite() {
                    return Err(Error::invalid(format!(
                        "annulus needs 0 < c1 <= c2 < inf, got c1={c1}, c2={c2}"
                    )));
                }
            }
            ConnectivityFunction::General { table } => {
                if table.is_empty() {
                    return Err(Error::invalid("connectivity table is empty"));
                }
                for w in table.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return Err(Error::invalid("table distances must increase"));
                    }
                    if w[1].1 > w[0].1 {
                        return Err(Error::invalid("table probabilities must not increase"));
                    }
                }
                if table
                    .iter()
                    .any(|&(d, p)| !(d >= 0.0) || !d.is_finite() || !(0.0..=1.0).contains(&p))
                {
                    return Err(Error::invalid("table entries must be d >= 0, p in [0, 1]"));
                }
            }
        }
        Ok(())
    }

    pub fn probability(&self, d: f64) -> f64 {
        match self {
            ConnectivityFunction::Annulus { c1, c2 } => {
                if d >= *c1 && d <= *c2 {
                    1.0
                } else {
                    0.0
                }
            }
            ConnectivityFunction::General { table } => {
                let first = table[0];
                if d <= first.0 {
                    return first.1;
                }
                for w in table.windows(2) {
                    let (d0, p0) = w[0];
                    let (d1, p1) = w[1];
                    if d <= d1 {
                        return p0 + (p1 - p0) * (d - d0) / (d1 - d0);
                    }
                }
                table[table.len() - 1].1
            }
        }
    }

    /// Distance beyond which the probability is zero (`inf` if never).
    pub fn range(&self) -> f64 {
        match self {
            ConnectivityFunction::Annulus { c2, .. } => *c2,
            ConnectivityFunction::General { table } => table
                .iter()
                .find(|&&(_, p)| p == 0.0)
                .map(|&(d, _)| d)
                .unwrap_or(f64::INFINITY),
        }
    }

    /// Smallest distance with positive probability (the `c1` of the
    /// annulus; zero for a general table with positive `g(0)`).
    pub fn inner_radius(&self) -> f64 {
        match self {
            ConnectivityFunction::Annulus { c1, .. } => *c1,
            ConnectivityFunction::General { .. } => 0.0,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        match self {
            ConnectivityFunction::Annulus { .. } => true,
            ConnectivityFunction::General { table } => {
                table.iter().all(|&(_, p)| p == 0.0 || p == 1.0)
            }
        }
    }

    pub fn scaled(&self, eps: f64) -> ConnectivityFunction {
        match self {
            ConnectivityFunction::Annulus { c1, c2 } => ConnectivityFunction::Annulus {
                c1: c1 * eps,
                c2: c2 * eps,
            },
            ConnectivityFunction::General { table } => ConnectivityFunction::General {
                table: table.iter().map(|&(d, p)| (d * eps, p)).collect(),
            },
        }
    }
}

/// Undirected edges `(i, j)` with `i < j`, sorted and free of duplicates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EdgeSet {
    pub edges: Vec<(usize, usize)>,
    /// Seed of the Bernoulli draws; `None` when the edge set is deterministic.
    pub seed: Option<u64>,
}

impl EdgeSet {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut edges: Vec<(usize, usize)> = pairs
            .into_iter()
            .filter(|(i, j)| i != j)
            .map(|(i, j)| if i < j { (i, j) } else { (j, i) })
            .collect();
        edges.sort_unstable();
        edges.dedup();
        EdgeSet { edges, seed: None }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Random connection model edges.
///
/// Annulus kind: `(i, j)` is an edge iff `c1 <= |x_i - x_j| <= c2`; the seed
/// is ignored. General kind: each pair is kept independently with
/// probability `g(|x_i - x_j|)`, the uniform draw for a pair depending only
/// on `(seed, i, j)`.
pub fn build_rcm_edges(config: &PointConfiguration, g: &ConnectivityFunction, seed: u64) -> EdgeSet {
    let pts = &config.points;
    let n = pts.len();
    let deterministic = g.is_deterministic();
    let keep = |i: usize, j: usize, d: f64| -> bool {
        let p = g.probability(d);
        if p <= 0.0 {
            false
        } else if p >= 1.0 {
            true
        } else {
            rng::hash_uniform(seed, i as u64, j as u64) < p
        }
    };
    let mut edges = Vec::new();
    let range = g.range();
    if range.is_finite() && n > 1 {
        let index = CellIndex::new(pts, &config.bbox, range.max(f64::MIN_POSITIVE));
        for (i, p) in pts.iter().enumerate() {
            index.for_each_within(pts, p, range, |j, d| {
                if j > i && keep(i, j, d) {
                    edges.push((i, j));
                }
            });
        }
    } else {
        for i in 0..n {
            for j in (i + 1)..n {
                if keep(i, j, dist(&pts[i], &pts[j])) {
                    edges.push((i, j));
                }
            }
        }
    }
    edges.sort_unstable();
    EdgeSet {
        edges,
        seed: if deterministic { None } else { Some(seed) },
    }
}
