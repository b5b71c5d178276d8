use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{AxisBox, Coord};
use crate::random_geometry::PerforatedMask;

use super::local::{cube_at, local_capacity};

/// A random geometry indexed by scale and replica.
pub trait MaskFamily: Sync {
    fn domain(&self) -> AxisBox;

    /// Seed of the realization used at `(eps, replica)`.
    fn seed(&self, eps: f64, replica: usize) -> u64;

    fn mask(&self, eps: f64, replica: usize) -> Result<PerforatedMask>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrangeTermOptions {
    pub hs: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub replicas: usize,
    /// Centre of every cube; defaults to the domain centre.
    pub center: Option<Coord>,
    pub tol: f64,
    /// Threshold `A` for `cap / h^n`.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityRow {
    pub h: f64,
    pub eps: f64,
    pub replica: usize,
    pub seed: u64,
    pub cap: f64,
    pub cap_per_volume: f64,
    pub iterations: usize,
    pub dx: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrangeTermEstimate {
    /// Replica mean of `cap / h^n` at the smallest `(h, eps)`.
    pub c: f64,
    /// Sample standard deviation across replicas at that cell.
    pub spread: f64,
    /// `eps -> 0` first: for each `h` (descending), the mean at the smallest `eps`.
    pub eps_then_h: Vec<(f64, f64)>,
    /// `h -> 0` first: for each `eps` (descending), the mean at the smallest `h`.
    pub h_then_eps: Vec<(f64, f64)>,
    pub bound_violations: usize,
    pub rows: Vec<CapacityRow>,
}

/// Sample mean and standard deviation; identical samples give exactly
/// `(v[0], 0)`.
pub fn mean_and_std(v: &[f64]) -> (f64, f64) {
    if let Some(&first) = v.first() {
        if v.iter().all(|&x| x == first) {
            return (first, 0.0);
        }
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Checks `eps < h/4` for every pair and the sizes of the sequences.
pub fn check_scales(hs: &[f64], epsilons: &[f64]) -> Result<()> {
    if hs.len() < 2 || epsilons.len() < 3 {
        return Err(Error::invalid("need at least two h values and three eps values"));
    }
    let hmin = hs.iter().copied().fold(f64::INFINITY, f64::min);
    if let Some(e) = epsilons.iter().find(|&&e| !(e > 0.0 && e < hmin / 4.0)) {
        return Err(Error::invalid(format!("eps = {e} violates eps < min(h)/4 = {}", hmin / 4.0)));
    }
    Ok(())
}

/// Estimates `c = lim_h lim_eps cap(x, h, eps) / h^n` over a table of
/// cube sizes, scales and replicas.
pub fn strange_term(family: &dyn MaskFamily, opts: &StrangeTermOptions) -> Result<StrangeTermEstimate> {
    let domain = family.domain();
    if domain.dim != 3 {
        return Err(Error::UnsupportedDimension(domain.dim));
    }
    check_scales(&opts.hs, &opts.epsilons)?;
    if opts.replicas == 0 {
        return Err(Error::invalid("need at least one replica"));
    }
    let center = opts.center.unwrap_or_else(|| domain.center());
    let n = domain.dim as i32;
    let jobs: Vec<(f64, usize)> = opts
        .epsilons
        .iter()
        .flat_map(|&e| (0..opts.replicas).map(move |r| (e, r)))
        .collect();
    let per_mask: Vec<Result<Vec<CapacityRow>>> = jobs
        .par_iter()
        .map(|&(eps, replica)| {
            let mask = family.mask(eps, replica)?;
            let seed = family.seed(eps, replica);
            opts.hs
                .iter()
                .map(|&h| {
                    let cube = cube_at(domain.dim, center, h)?;
                    let est = local_capacity(&mask, &cube, opts.tol)?;
                    Ok(CapacityRow {
                        h,
                        eps,
                        replica,
                        seed,
                        cap: est.value,
                        cap_per_volume: est.value / h.powi(n),
                        iterations: est.iterations,
                        dx: est.dx,
                    })
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_mask {
        rows.extend(r?);
    }
    rows.sort_by(|a, b| {
        b.h.total_cmp(&a.h)
            .then(b.eps.total_cmp(&a.eps))
            .then(a.replica.cmp(&b.replica))
    });
    let cell = |h: f64, e: f64| -> Vec<f64> {
        rows.iter()
            .filter(|r| r.h == h && r.eps == e)
            .map(|r| r.cap_per_volume)
            .collect()
    };
    let mut hs = opts.hs.clone();
    hs.sort_by(|a, b| b.total_cmp(a));
    let mut es = opts.epsilons.clone();
    es.sort_by(|a, b| b.total_cmp(a));
    let (hmin, emin) = (*hs.last().expect("checked"), *es.last().expect("checked"));
    let (c, spread) = mean_and_std(&cell(hmin, emin));
    let eps_then_h = hs.iter().map(|&h| (h, mean_and_std(&cell(h, emin)).0)).collect();
    let h_then_eps = es.iter().map(|&e| (e, mean_and_std(&cell(hmin, e)).0)).collect();
    let bound_violations = opts
        .bound
        .map_or(0, |a| rows.iter().filter(|r| r.cap_per_volume >= a).count());
    Ok(StrangeTermEstimate {
        c,
        spread,
        eps_then_h,
        h_then_eps,
        bound_violations,
        rows,
    })
}
