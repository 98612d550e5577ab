//! The finite grid `{1, …, m}^d` with nearest-neighbor adjacency.
//!
//! Nodes are linearized in row-major order with axis 1 varying fastest, so
//! the coordinate tuple `(x_1, …, x_d)` (1-based) maps to
//! `Σ (x_i − 1) · m^(i−1)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear node index in `[0, m^d)`.
pub type NodeIndex = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Free,
    Toroidal,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Free => "free",
            Boundary::Toroidal => "toroidal",
        })
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "free" => Ok(Boundary::Free),
            "toroidal" | "torus" => Ok(Boundary::Toroidal),
            other => Err(Error::Parse(format!("unknown boundary mode `{other}`"))),
        }
    }
}

/// An immutable `m^d` lattice.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct GridSpec {
    dim: usize,
    side: usize,
    boundary: Boundary,
    strides: Vec<usize>,
    len: usize,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    d: usize,
    m: usize,
    boundary: Boundary,
}

impl TryFrom<GridRepr> for GridSpec {
    type Error = Error;

    fn try_from(r: GridRepr) -> Result<Self> {
        GridSpec::new(r.d, r.m, r.boundary)
    }
}

impl From<GridSpec> for GridRepr {
    fn from(g: GridSpec) -> Self {
        GridRepr { d: g.dim, m: g.side, boundary: g.boundary }
    }
}

impl GridSpec {
    /// Node counts are capped so that labels fit in `u32`.
    pub const MAX_NODES: usize = u32::MAX as usize - 2;

    pub fn new(dim: usize, side: usize, boundary: Boundary) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidGrid("dimension must be at least 1".into()));
        }
        if side == 0 {
            return Err(Error::InvalidGrid("side must be at least 1".into()));
        }
        let mut strides = Vec::with_capacity(dim);
        let mut len: usize = 1;
        for _ in 0..dim {
            strides.push(len);
            len = len
                .checked_mul(side)
                .filter(|&n| n <= Self::MAX_NODES)
                .ok_or_else(|| Error::InvalidGrid(format!("{side}^{dim} nodes overflow the index type")))?;
        }
        Ok(Self { dim, side, boundary, strides, len })
    }

    pub fn free(dim: usize, side: usize) -> Result<Self> {
        Self::new(dim, side, Boundary::Free)
    }

    pub fn toroidal(dim: usize, side: usize) -> Result<Self> {
        Self::new(dim, side, Boundary::Toroidal)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Number of nodes, `m^d`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Offset between axis-`axis` neighbors (0-based axis).
    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn check_index(&self, v: NodeIndex) -> Result<()> {
        if v < self.len {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: v, len: self.len })
        }
    }

    /// 1-based coordinates to a linear index.
    pub fn coords_to_index(&self, coords: &[usize]) -> Result<NodeIndex> {
        if coords.len() != self.dim {
            return Err(Error::InvalidParameter(format!(
                "expected {} coordinates, got {}",
                self.dim,
                coords.len()
            )));
        }
        let mut index = 0;
        for (axis, (&x, &stride)) in coords.iter().zip(&self.strides).enumerate() {
            if x == 0 || x > self.side {
                return Err(Error::CoordinateOutOfRange { axis: axis + 1, value: x, side: self.side });
            }
            index += (x - 1) * stride;
        }
        Ok(index)
    }

    /// Linear index to 1-based coordinates.
    pub fn index_to_coords(&self, v: NodeIndex) -> Result<Vec<usize>> {
        self.check_index(v)?;
        Ok((0..self.dim).map(|axis| self.axis_offset(v, axis) + 1).collect())
    }

    /// 0-based coordinate of `v` along `axis`; no bounds check.
    #[inline]
    pub fn axis_offset(&self, v: NodeIndex, axis: usize) -> usize {
        (v / self.strides[axis]) % self.side
    }

    /// Nearest neighbors of `v`, honoring the boundary mode.
    pub fn neighbors(&self, v: NodeIndex) -> Result<Vec<NodeIndex>> {
        self.check_index(v)?;
        let mut out = Vec::with_capacity(2 * self.dim);
        self.for_each_neighbor(v, |w| out.push(w));
        Ok(out)
    }

    /// Calls `f` once per distinct neighbor of `v`. `v` must be valid.
    #[inline]
    pub fn for_each_neighbor(&self, v: NodeIndex, mut f: impl FnMut(NodeIndex)) {
        let m = self.side;
        if m == 1 {
            return;
        }
        let toroidal = self.boundary == Boundary::Toroidal;
        for axis in 0..self.dim {
            let stride = self.strides[axis];
            let x = self.axis_offset(v, axis);
            if x + 1 < m {
                f(v + stride);
            } else if toroidal && m > 2 {
                f(v + stride - m * stride);
            }
            if x > 0 {
                f(v - stride);
            } else if toroidal && m > 2 {
                f(v + (m - 1) * stride);
            }
        }
    }

    /// Index of the node at the center of the grid (rounded down on each axis).
    pub fn center(&self) -> NodeIndex {
        let c = (self.side - 1) / 2;
        self.strides.iter().map(|s| c * s).sum()
    }
}

/// A set of nodes of a particular grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Region {
    /// Axis-aligned box given by 1-based inclusive lower corner and per-axis extent.
    Box { lower: Vec<usize>, extent: Vec<usize> },
    /// Explicit member list.
    Set(Vec<NodeIndex>),
}

impl Region {
    pub fn cube(lower: Vec<usize>, side: usize) -> Self {
        let extent = vec![side; lower.len()];
        Region::Box { lower, extent }
    }

    /// Resolves the member indices, sorted and deduplicated.
    pub fn members(&self, grid: &GridSpec) -> Result<Vec<NodeIndex>> {
        match self {
            Region::Set(nodes) => {
                let mut nodes = nodes.clone();
                for &v in &nodes {
                    grid.check_index(v)?;
                }
                nodes.sort_unstable();
                nodes.dedup();
                Ok(nodes)
            }
            Region::Box { lower, extent } => {
                if lower.len() != grid.dim() || extent.len() != grid.dim() {
                    return Err(Error::InvalidParameter("box dimension does not match grid".into()));
                }
                for axis in 0..grid.dim() {
                    let lo = lower[axis];
                    let hi = lo + extent[axis].saturating_sub(1);
                    if lo == 0 || extent[axis] == 0 || hi > grid.side() {
                        return Err(Error::ShapeOutOfBounds(format!(
                            "box spans {lo}..={hi} on axis {} of a side-{} grid",
                            axis + 1,
                            grid.side()
                        )));
                    }
                }
                let origin = grid.coords_to_index(lower)?;
                let mut out = vec![origin];
                for axis in 0..grid.dim() {
                    let stride = grid.stride(axis);
                    let layer = out.len();
                    for step in 1..extent[axis] {
                        for i in 0..layer {
                            out.push(out[i] + step * stride);
                        }
                    }
                }
                out.sort_unstable();
                Ok(out)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(grid: &GridSpec, pts: &[&[usize]]) -> Vec<usize> {
        let mut v: Vec<_> = pts.iter().map(|c| grid.coords_to_index(c).unwrap()).collect();
        v.sort_unstable();
        v
    }

    fn sorted(mut v: Vec<usize>) -> Vec<usize> {
        v.sort_unstable();
        v
    }

    #[test]
    fn interior_and_corner_neighbors() {
        let g = GridSpec::free(2, 3).unwrap();
        let center = g.coords_to_index(&[2, 2]).unwrap();
        assert_eq!(
            sorted(g.neighbors(center).unwrap()),
            set(&g, &[&[1, 2], &[3, 2], &[2, 1], &[2, 3]])
        );
        let corner = g.coords_to_index(&[1, 1]).unwrap();
        assert_eq!(sorted(g.neighbors(corner).unwrap()), set(&g, &[&[2, 1], &[1, 2]]));
    }

    #[test]
    fn toroidal_corner_wraps() {
        let g = GridSpec::toroidal(2, 4).unwrap();
        let corner = g.coords_to_index(&[1, 1]).unwrap();
        assert_eq!(
            sorted(g.neighbors(corner).unwrap()),
            set(&g, &[&[2, 1], &[1, 2], &[4, 1], &[1, 4]])
        );
    }

    #[test]
    fn coordinate_examples() {
        let g = GridSpec::free(2, 3).unwrap();
        assert_eq!(g.coords_to_index(&[1, 1]).unwrap(), 0);
        assert_eq!(g.coords_to_index(&[3, 3]).unwrap(), 8);
        let g3 = GridSpec::free(3, 2).unwrap();
        assert_eq!(g3.coords_to_index(&[2, 1, 1]).unwrap(), 1);
        assert_eq!(g3.index_to_coords(1).unwrap(), vec![2, 1, 1]);
    }

    #[test]
    fn out_of_range_errors() {
        let g = GridSpec::free(2, 3).unwrap();
        assert!(g.coords_to_index(&[0, 1]).is_err());
        assert!(g.coords_to_index(&[4, 1]).is_err());
        assert!(g.coords_to_index(&[1]).is_err());
        assert!(g.neighbors(9).is_err());
        assert!(g.index_to_coords(9).is_err());
    }

    #[test]
    fn construction_errors() {
        assert!(GridSpec::free(0, 3).is_err());
        assert!(GridSpec::free(2, 0).is_err());
        assert!(GridSpec::free(8, 1 << 10).is_err());
    }

    #[test]
    fn small_toroidal_sides_have_no_duplicates() {
        let g = GridSpec::toroidal(2, 2).unwrap();
        assert_eq!(g.neighbors(0).unwrap().len(), 2);
        let g = GridSpec::toroidal(2, 1).unwrap();
        assert!(g.neighbors(0).unwrap().is_empty());
    }

    #[test]
    fn box_members() {
        let g = GridSpec::free(2, 4).unwrap();
        let r = Region::cube(vec![2, 2], 2);
        assert_eq!(r.members(&g).unwrap(), set(&g, &[&[2, 2], &[3, 2], &[2, 3], &[3, 3]]));
        assert!(Region::cube(vec![4, 4], 2).members(&g).is_err());
    }
}
