//! Coordinates, axis-aligned boxes and the distance primitives used by the
//! obstacle predicates.
//!
//! Points are stored as `[f64; 3]` in both dimensions; in 2D the third
//! component is zero and ignored by every box operation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Coord = [f64; 3];

#[inline]
pub fn sub(a: &Coord, b: &Coord) -> Coord {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn dot(a: &Coord, b: &Coord) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm2(a: &Coord) -> f64 {
    dot(a, a)
}

#[inline]
pub fn dist(a: &Coord, b: &Coord) -> f64 {
    norm2(&sub(a, b)).sqrt()
}

/// Squared distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_dist2(p: &Coord, a: &Coord, b: &Coord) -> f64 {
    let ab = sub(b, a);
    let ap = sub(p, a);
    let len2 = norm2(&ab);
    if len2 == 0.0 {
        return norm2(&ap);
    }
    let t = (dot(&ap, &ab) / len2).clamp(0.0, 1.0);
    let q = [a[0] + t * ab[0], a[1] + t * ab[1], a[2] + t * ab[2]];
    norm2(&sub(p, &q))
}

/// Squared distance between closed segments `[p1, q1]` and `[p2, q2]`.
///
/// Closest-point parametrisation with clamping (Ericson, Real-Time
/// Collision Detection, 5.1.9).
pub fn segment_segment_dist2(p1: &Coord, q1: &Coord, p2: &Coord, q2: &Coord) -> f64 {
    const EPS: f64 = 1e-300;
    let d1 = sub(q1, p1);
    let d2 = sub(q2, p2);
    let r = sub(p1, p2);
    let a = norm2(&d1);
    let e = norm2(&d2);
    let f = dot(&d2, &r);
    let (s, t);
    if a <= EPS && e <= EPS {
        return norm2(&r);
    }
    if a <= EPS {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = dot(&d1, &r);
        if e <= EPS {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = dot(&d1, &d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 0.0 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let c1 = [p1[0] + s * d1[0], p1[1] + s * d1[1], p1[2] + s * d1[2]];
    let c2 = [p2[0] + t * d2[0], p2[1] + t * d2[1], p2[2] + t * d2[2]];
    norm2(&sub(&c1, &c2))
}

/// Axis-aligned box `[lower, upper]` in dimension 2 or 3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub dim: usize,
    pub lower: Coord,
    pub upper: Coord,
}

impl AxisBox {
    pub fn new(dim: usize, lower: Coord, upper: Coord) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::UnsupportedDimension(dim));
        }
        let mut lower = lower;
        let mut upper = upper;
        for d in 0..dim {
            if !lower[d].is_finite() || !upper[d].is_finite() || upper[d] <= lower[d] {
                return Err(Error::invalid(format!(
                    "degenerate box along axis {d}: [{}, {}]",
                    lower[d], upper[d]
                )));
            }
        }
        for d in dim..3 {
            lower[d] = 0.0;
            upper[d] = 0.0;
        }
        Ok(AxisBox { dim, lower, upper })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(dim, [lo; 3], [hi; 3])
    }

    pub fn unit(dim: usize) -> Self {
        Self::cube(dim, 0.0, 1.0).expect("unit cube is valid")
    }

    pub fn side(&self, d: usize) -> f64 {
        self.upper[d] - self.lower[d]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|d| self.side(d)).product()
    }

    pub fn center(&self) -> Coord {
        let mut c = [0.0; 3];
        for d in 0..self.dim {
            c[d] = 0.5 * (self.lower[d] + self.upper[d]);
        }
        c
    }

    pub fn diameter(&self) -> f64 {
        (0..self.dim).map(|d| self.side(d).powi(2)).sum::<f64>().sqrt()
    }

    /// Half-open membership: closed lower face, open upper face.
    pub fn contains_half_open(&self, p: &Coord) -> bool {
        (0..self.dim).all(|d| p[d] >= self.lower[d] && p[d] < self.upper[d])
    }

    pub fn contains_closed(&self, p: &Coord) -> bool {
        (0..self.dim).all(|d| p[d] >= self.lower[d] && p[d] <= self.upper[d])
    }

    pub fn contains_box(&self, other: &AxisBox) -> bool {
        self.dim == other.dim
            && (0..self.dim)
                .all(|d| other.lower[d] >= self.lower[d] && other.upper[d] <= self.upper[d])
    }

    pub fn translated(&self, shift: &Coord) -> AxisBox {
        let mut b = *self;
        for d in 0..self.dim {
            b.lower[d] += shift[d];
            b.upper[d] += shift[d];
        }
        b
    }

    pub fn scaled(&self, factor: f64) -> AxisBox {
        let mut b = *self;
        for d in 0..self.dim {
            b.lower[d] *= factor;
            b.upper[d] *= factor;
        }
        b
    }

    /// Distance from `p` (assumed inside) to the boundary of the box.
    pub fn distance_to_boundary(&self, p: &Coord) -> f64 {
        (0..self.dim)
            .map(|d| (p[d] - self.lower[d]).min(self.upper[d] - p[d]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Number of cells of side `cell` along each axis, if `cell` divides every
    /// side within `rel_tol`.
    pub fn divisions(&self, cell: f64, rel_tol: f64) -> Option<[usize; 3]> {
        if !(cell > 0.0) || !cell.is_finite() {
            return None;
        }
        let mut n = [1usize; 3];
        for d in 0..self.dim {
            let q = self.side(d) / cell;
            let r = q.round();
            if r < 1.0 || (q - r).abs() > rel_tol * q.max(1.0) {
                return None;
            }
            n[d] = r as usize;
        }
        Some(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(AxisBox::new(2, [0.0; 3], [1.0, 0.0, 0.0]).is_err());
        assert!(AxisBox::new(4, [0.0; 3], [1.0; 3]).is_err());
        assert!(AxisBox::new(3, [0.0; 3], [1.0, 1.0, f64::NAN]).is_err());
    }

    #[test]
    fn two_dimensional_box_ignores_third_axis() {
        let b = AxisBox::new(2, [0.0, 0.0, 5.0], [2.0, 3.0, 9.0]).unwrap();
        assert_eq!(b.volume(), 6.0);
        assert!(b.contains_half_open(&[1.0, 1.0, 100.0]));
    }

    #[test]
    fn segment_distances() {
        let a = [0.0, 0.0, 0.0];
        let b = [1.0, 0.0, 0.0];
        assert_eq!(point_segment_dist2(&[0.5, 2.0, 0.0], &a, &b), 4.0);
        assert_eq!(point_segment_dist2(&[-1.0, 0.0, 0.0], &a, &b), 1.0);
        // skew segments one unit apart in z
        let d = segment_segment_dist2(&a, &b, &[0.5, -1.0, 1.0], &[0.5, 1.0, 1.0]);
        assert!((d - 1.0).abs() < 1e-15);
        // parallel segments
        let d = segment_segment_dist2(&a, &b, &[2.0, 1.0, 0.0], &[3.0, 1.0, 0.0]);
        assert!((d - 2.0).abs() < 1e-15);
    }

    #[test]
    fn divisions_respect_tolerance() {
        let b = AxisBox::cube(2, 0.0, 64.0).unwrap();
        assert_eq!(b.divisions(1.0, 1e-9), Some([64, 64, 1]));
        assert_eq!(b.divisions(1.5, 1e-9), None);
    }
}
