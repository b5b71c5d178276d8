use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::Grid;
use crate::random_geometry::{CellFlag, PerforatedMask};

/// Node values over a grid, zero on every non-material node (the extension
/// by zero into holes and across `∂D`).
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(grid: Grid) -> Self {
        GridField {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    /// Samples `f` at material nodes of the mask.
    pub fn from_fn(mask: &PerforatedMask, f: impl Fn(&[f64; 3]) -> f64) -> Self {
        let g = mask.grid;
        let values = (0..g.len())
            .map(|i| if mask.is_material(i) { f(&g.position(i)) } else { 0.0 })
            .collect();
        GridField { grid: g, values }
    }

    /// Takes full-length values and zeroes the non-material nodes.
    pub fn from_values(mask: &PerforatedMask, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != mask.grid.len() {
            return Err(Error::invalid("value count does not match grid"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite field value {v}")));
        }
        for (v, f) in values.iter_mut().zip(&mask.flags) {
            if *f != CellFlag::Material {
                *v = 0.0;
            }
        }
        Ok(GridField {
            grid: mask.grid,
            values,
        })
    }

    #[inline]
    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Binary file: the mask text header, a `data N` line, then `N`
    /// little-endian `f64` values for the material nodes in index order.
    pub fn to_bytes(&self, mask: &PerforatedMask) -> Result<Vec<u8>> {
        if mask.grid != self.grid {
            return Err(Error::invalid("mask and field grids differ"));
        }
        let mut out = mask.to_text().into_bytes();
        let material: Vec<f64> = (0..self.grid.len())
            .filter(|&i| mask.is_material(i))
            .map(|i| self.values[i])
            .collect();
        out.extend_from_slice(format!("data {}\n", material.len()).as_bytes());
        for v in material {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<(PerforatedMask, GridField)> {
        let marker = b"\ndata ";
        let pos = bytes
            .windows(marker.len())
            .position(|w| w == marker)
            .ok_or_else(|| Error::parse("missing data section"))?;
        let header = std::str::from_utf8(&bytes[..pos + 1]).map_err(|_| Error::parse("header is not UTF-8"))?;
        let mask = PerforatedMask::from_text(header)?;
        let rest = &bytes[pos + marker.len()..];
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::parse("unterminated data line"))?;
        let n: usize = std::str::from_utf8(&rest[..nl])
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::parse("bad data count"))?;
        let data = &rest[nl + 1..];
        if data.len() != 8 * n || n != mask.material_count() {
            return Err(Error::parse("data length does not match the mask"));
        }
        let mut values = vec![0.0; mask.grid.len()];
        let mut chunks = data.chunks_exact(8);
        for i in 0..mask.grid.len() {
            if mask.is_material(i) {
                let c = chunks.next().expect("length checked");
                values[i] = f64::from_le_bytes(c.try_into().expect("8 bytes"));
            }
        }
        let field = GridField::from_values(&mask, values)?;
        Ok((mask, field))
    }
}

/// Right-hand side `f` of `Δu - λu = f`.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Constant(f64),
    Expr(Expr),
    /// Node values on the same grid as the mask.
    Values(Vec<f64>),
}

impl Source {
    /// Values of `f` at material nodes, zero elsewhere.
    pub fn sample(&self, mask: &PerforatedMask) -> Result<GridField> {
        match self {
            Source::Constant(c) => {
                if !c.is_finite() {
                    return Err(Error::invalid("non-finite source"));
                }
                Ok(GridField::from_fn(mask, |_| *c))
            }
            Source::Expr(e) => GridField::from_values(
                mask,
                (0..mask.grid.len())
                    .map(|i| if mask.is_material(i) { e.eval(&mask.grid.position(i)) } else { 0.0 })
                    .collect(),
            ),
            Source::Values(v) => GridField::from_values(mask, v.clone()),
        }
    }
}
