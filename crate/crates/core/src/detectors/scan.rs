use crate::distributions::FamilySpec;
use crate::error::{Error, Result};
use crate::lattice::{GridSpec, NodeIndex};
use crate::percolation::Field;

use super::Statistic;

/// All axis-aligned cubes of side `ℓ` lying inside the grid. Wrapped
/// placements on a torus are not included.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HypercubeClass {
    side: usize,
    grid_side: usize,
    dim: usize,
}

impl HypercubeClass {
    pub fn new(grid: &GridSpec, side: usize) -> Result<Self> {
        if side == 0 || side > grid.side() {
            return Err(Error::InvalidParameter(format!(
                "hypercube side {side} must lie in 1..={}",
                grid.side()
            )));
        }
        Ok(Self { side, grid_side: grid.side(), dim: grid.dim() })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Nodes per placement, `ℓ^d`.
    pub fn volume(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    /// `(m − ℓ + 1)^d`.
    pub fn placement_count(&self) -> usize {
        (self.grid_side - self.side + 1).pow(self.dim as u32)
    }

    /// Calls `f` with every 0-based lower corner, axis 1 varying fastest.
    pub fn for_each_corner(&self, mut f: impl FnMut(&[usize])) {
        let span = self.grid_side - self.side + 1;
        let mut corner = vec![0usize; self.dim];
        loop {
            f(&corner);
            let mut axis = 0;
            loop {
                if axis == self.dim {
                    return;
                }
                corner[axis] += 1;
                if corner[axis] < span {
                    break;
                }
                corner[axis] = 0;
                axis += 1;
            }
        }
    }

    /// Member nodes of the placement with the given 0-based lower corner.
    pub fn members(&self, grid: &GridSpec, corner: &[usize]) -> Vec<NodeIndex> {
        let base: usize = corner.iter().enumerate().map(|(a, &c)| c * grid.stride(a)).sum();
        let mut out = vec![base];
        for axis in 0..self.dim {
            let layer = out.len();
            for step in 1..self.side {
                for i in 0..layer {
                    out.push(out[i] + step * grid.stride(axis));
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// A `d`-dimensional summed-area table over an `(m+1)^d` padded array.
#[derive(Debug, Clone)]
pub struct PrefixSums {
    table: Vec<f64>,
    strides: Vec<usize>,
}

impl PrefixSums {
    pub fn new(field: &Field) -> Self {
        Self::centered(field, 0.0)
    }

    /// Table of `X_v − shift`; centering keeps window sums of a constant
    /// field exact.
    pub fn centered(field: &Field, shift: f64) -> Self {
        let grid = field.grid();
        let (d, m) = (grid.dim(), grid.side());
        let strides: Vec<usize> = (0..d).map(|a| (m + 1).pow(a as u32)).collect();
        let mut table = vec![0.0; (m + 1).pow(d as u32)];
        for (v, &x) in field.values().iter().enumerate() {
            let cell: usize = (0..d).map(|a| (grid.axis_offset(v, a) + 1) * strides[a]).sum();
            table[cell] = x - shift;
        }
        for &stride in &strides {
            for cell in 0..table.len() {
                if (cell / stride) % (m + 1) > 0 {
                    table[cell] += table[cell - stride];
                }
            }
        }
        Self { table, strides }
    }

    /// Sum over the cube of side `side` with 0-based lower corner `corner`.
    pub fn cube_sum(&self, corner: &[usize], side: usize) -> f64 {
        let base: usize = corner.iter().zip(&self.strides).map(|(c, s)| c * s).sum();
        let d = self.strides.len();
        let mut total = 0.0;
        for mask in 0u32..(1 << d) {
            let mut cell = base;
            for (a, s) in self.strides.iter().enumerate() {
                if mask >> a & 1 == 1 {
                    cell += side * s;
                }
            }
            if (d as u32 - mask.count_ones()).is_multiple_of(2) {
                total += self.table[cell];
            } else {
                total -= self.table[cell];
            }
        }
        total
    }
}

/// Maximum over a hypercube class with the maximizing placement.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub value: f64,
    /// 0-based lower corner of the best placement.
    pub corner: Vec<usize>,
    /// Some window mean fell outside the support closure and was clamped.
    pub clamped: bool,
}

fn best_window(field: &Field, class: &HypercubeClass, shift: f64, mut score: impl FnMut(f64) -> f64) -> ScanResult {
    let sums = PrefixSums::centered(field, shift);
    let mut best = ScanResult { value: f64::NEG_INFINITY, corner: vec![0; class.dim], clamped: false };
    class.for_each_corner(|corner| {
        let s = score(sums.cube_sum(corner, class.side));
        if s > best.value {
            best.value = s;
            best.corner.copy_from_slice(corner);
        }
    });
    best
}

/// `max_K √|K| (X̄_K − μ₀)`; `mu0 = None` uses the grand mean.
pub fn simple_scan(field: &Field, class: &HypercubeClass, mu0: Option<f64>) -> ScanResult {
    let mu0 = mu0.unwrap_or_else(|| field.mean());
    let n = class.volume() as f64;
    let root = n.sqrt();
    best_window(field, class, mu0, |centered| root * (centered / n))
}

/// Square root of twice the largest log generalized likelihood ratio over the
/// class, so that it is on the scale of [`simple_scan`] in plug-in mode.
///
/// Windows whose mean does not exceed the grand mean contribute zero.
pub fn glr_scan(field: &Field, class: &HypercubeClass, family: &FamilySpec) -> Result<ScanResult> {
    family.validate(0.0)?;
    let values = field.values();
    if values.iter().all(|&x| x == values[0]) {
        let corner = vec![0; class.dim];
        return Ok(ScanResult { value: 0.0, corner, clamped: false });
    }
    let (lo, hi) = family.support();
    let mut clamped = false;
    let mut clamp = |x: f64| {
        if x < lo || x > hi {
            clamped = true;
            x.clamp(lo, hi)
        } else {
            x
        }
    };
    let n_total = field.len() as f64;
    let total: f64 = field.values().iter().sum();
    let mean_all = clamp(total / n_total);
    let base = n_total * family.rate_function_two_sided(mean_all);
    let n_in = class.volume() as f64;
    let n_out = n_total - n_in;
    let mut r = best_window(field, class, 0.0, |sum| {
        let mean_in = sum / n_in;
        if mean_in <= mean_all || n_out == 0.0 {
            return 0.0;
        }
        let mean_in = clamp(mean_in);
        let mean_out = clamp((total - sum) / n_out);
        let llr = n_in * family.rate_function_two_sided(mean_in)
            + n_out * family.rate_function_two_sided(mean_out)
            - base;
        llr.max(0.0)
    });
    r.value = (2.0 * r.value).sqrt();
    r.clamped = clamped;
    Ok(r)
}

/// Simple scan over an explicit list of candidate node sets (e.g. paths).
pub fn candidate_scan(field: &Field, candidates: &[Vec<NodeIndex>], mu0: Option<f64>) -> Result<Statistic> {
    let mu0 = mu0.unwrap_or_else(|| field.mean());
    let mut best = Statistic::Empty;
    for set in candidates {
        if set.is_empty() {
            continue;
        }
        let mut sum = 0.0;
        for &v in set {
            field.grid().check_index(v)?;
            sum += field.values()[v];
        }
        let n = set.len() as f64;
        best = best.max(Statistic::Value(n.sqrt() * (sum / n - mu0)));
    }
    Ok(best)
}
