use crate::geom::{dist, AxisBox, Coord};

/// Uniform bucket grid over a set of points for radius and nearest-neighbour
/// queries.
#[derive(Debug, Clone)]
pub struct CellIndex {
    dim: usize,
    origin: Coord,
    cell: f64,
    n: [usize; 3],
    /// CSR layout: bucket `b` holds `items[start[b]..start[b + 1]]`.
    start: Vec<usize>,
    items: Vec<usize>,
}

impl CellIndex {
    pub fn new(points: &[Coord], bbox: &AxisBox, cell: f64) -> Self {
        let dim = bbox.dim;
        let npts = points.len().max(1);
        // keep the bucket count within a small multiple of the point count
        let min_cell = (bbox.volume() / (4 * npts) as f64).powf(1.0 / dim as f64);
        let cell = cell.max(min_cell).max(f64::MIN_POSITIVE);
        let mut n = [1usize; 3];
        for d in 0..dim {
            n[d] = ((bbox.side(d) / cell).ceil() as usize).max(1);
        }
        let mut origin = bbox.lower;
        for o in origin.iter_mut().skip(dim) {
            *o = 0.0;
        }
        let mut idx = CellIndex {
            dim,
            origin,
            cell,
            n,
            start: Vec::new(),
            items: Vec::new(),
        };
        let nb = n[0] * n[1] * n[2];
        let mut counts = vec![0usize; nb + 1];
        let buckets: Vec<usize> = points.iter().map(|p| idx.bucket_of(p)).collect();
        for &b in &buckets {
            counts[b + 1] += 1;
        }
        for b in 0..nb {
            counts[b + 1] += counts[b];
        }
        let mut fill = counts.clone();
        let mut items = vec![0usize; points.len()];
        for (i, &b) in buckets.iter().enumerate() {
            items[fill[b]] = i;
            fill[b] += 1;
        }
        idx.start = counts;
        idx.items = items;
        idx
    }

    fn cell_coord(&self, p: &Coord, d: usize) -> isize {
        ((p[d] - self.origin[d]) / self.cell).floor() as isize
    }

    fn bucket_of(&self, p: &Coord) -> usize {
        let mut c = [0usize; 3];
        for d in 0..self.dim {
            c[d] = self.cell_coord(p, d).clamp(0, self.n[d] as isize - 1) as usize;
        }
        c[0] + self.n[0] * (c[1] + self.n[1] * c[2])
    }

    fn visit_block(&self, lo: [isize; 3], hi: [isize; 3], f: &mut impl FnMut(usize)) {
        let clamp = |v: isize, d: usize| v.clamp(0, self.n[d] as isize - 1) as usize;
        let (a, b) = (
            [clamp(lo[0], 0), clamp(lo[1], 1), clamp(lo[2], 2)],
            [clamp(hi[0], 0), clamp(hi[1], 1), clamp(hi[2], 2)],
        );
        for k in a[2]..=b[2] {
            for j in a[1]..=b[1] {
                for i in a[0]..=b[0] {
                    let bkt = i + self.n[0] * (j + self.n[1] * k);
                    for &it in &self.items[self.start[bkt]..self.start[bkt + 1]] {
                        f(it);
                    }
                }
            }
        }
    }

    /// Calls `f(j)` for every indexed point within distance `radius` of `p`
    /// (closed ball), in bucket order.
    pub fn for_each_within(
        &self,
        points: &[Coord],
        p: &Coord,
        radius: f64,
        mut f: impl FnMut(usize, f64),
    ) {
        let mut lo = [0isize; 3];
        let mut hi = [0isize; 3];
        for d in 0..self.dim {
            lo[d] = ((p[d] - radius - self.origin[d]) / self.cell).floor() as isize;
            hi[d] = ((p[d] + radius - self.origin[d]) / self.cell).floor() as isize;
        }
        self.visit_block(lo, hi, &mut |j| {
            let dd = dist(p, &points[j]);
            if dd <= radius {
                f(j, dd);
            }
        });
    }

    /// Distance from point `i` to its nearest other indexed point.
    pub fn nearest_other(&self, points: &[Coord], i: usize, p: &Coord) -> f64 {
        let mut best = f64::INFINITY;
        let mut ring = 0isize;
        let max_ring = *self.n.iter().max().unwrap() as isize;
        let center: Vec<isize> = (0..3)
            .map(|d| if d < self.dim { self.cell_coord(p, d) } else { 0 })
            .collect();
        loop {
            let mut lo = [0isize; 3];
            let mut hi = [0isize; 3];
            for d in 0..self.dim {
                lo[d] = center[d] - ring;
                hi[d] = center[d] + ring;
            }
            // scan the shell (inner part was already scanned)
            self.visit_block(lo, hi, &mut |j| {
                if j != i {
                    let dd = dist(p, &points[j]);
                    if dd < best {
                        best = dd;
                    }
                }
            });
            // any point outside the scanned block is at least ring * cell away
            if best <= ring as f64 * self.cell || ring > max_ring {
                return best;
            }
            ring += 1;
        }
    }
}
