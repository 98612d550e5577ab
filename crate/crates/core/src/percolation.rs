//! Thresholding a field into an open configuration and labeling its
//! connected components.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lattice::{Boundary, GridSpec, NodeIndex, Region};
use crate::unionfind::DisjointSets;

const CLOSED: u32 = u32::MAX;

/// One finite observation per node.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "field has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite value {} at node {i}", values[i])));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        let n = grid.len();
        Self { grid, values: vec![value; n] }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Same values viewed on a grid with a different boundary mode.
    pub fn with_boundary(self, boundary: Boundary) -> Result<Self> {
        let grid = GridSpec::new(self.grid.dim(), self.grid.side(), boundary)?;
        Ok(Self { grid, values: self.values })
    }
}

/// Which nodes are open (`X_v > t`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpenConfiguration {
    grid: GridSpec,
    open: Vec<bool>,
}

impl OpenConfiguration {
    pub fn new(grid: GridSpec, open: Vec<bool>) -> Result<Self> {
        if open.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "configuration has {} flags for a grid of {} nodes",
                open.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, open })
    }

    pub fn from_open_nodes(grid: GridSpec, nodes: &[NodeIndex]) -> Result<Self> {
        let mut open = vec![false; grid.len()];
        for &v in nodes {
            grid.check_index(v)?;
            open[v] = true;
        }
        Ok(Self { grid, open })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn is_open(&self, v: NodeIndex) -> bool {
        self.open[v]
    }

    pub fn flags(&self) -> &[bool] {
        &self.open
    }

    pub fn open_count(&self) -> usize {
        self.open.iter().filter(|&&o| o).count()
    }
}

/// `open(v) ⟺ X_v > t`. `t = −∞` opens every node.
pub fn threshold(field: &Field, t: f64) -> OpenConfiguration {
    OpenConfiguration { grid: field.grid.clone(), open: field.values.iter().map(|&x| x > t).collect() }
}

/// Unions every open node with its open "backward" neighbors (lower index
/// along each axis, plus the wrap edge under toroidal boundary).
fn union_open<F: Fn(NodeIndex) -> bool>(grid: &GridSpec, is_open: F, ds: &mut DisjointSets) {
    let m = grid.side();
    let wrap = grid.boundary() == Boundary::Toroidal && m > 2;
    for v in 0..grid.len() {
        if !is_open(v) {
            continue;
        }
        for axis in 0..grid.dim() {
            let stride = grid.stride(axis);
            let x = grid.axis_offset(v, axis);
            if x > 0 && is_open(v - stride) {
                ds.union(v, v - stride);
            }
            if wrap && x == m - 1 {
                let w = v - (m - 1) * stride;
                if is_open(w) {
                    ds.union(v, w);
                }
            }
        }
    }
}

/// Size of the largest open cluster without building a full labeling.
pub fn largest_open_cluster(config: &OpenConfiguration) -> usize {
    let mut ds = DisjointSets::new(config.grid.len());
    union_open(&config.grid, |v| config.open[v], &mut ds);
    (0..config.grid.len()).filter(|&v| config.open[v]).map(|v| ds.set_size(v)).max().unwrap_or(0)
}

/// Component labels of the open nodes; the representative of each cluster is
/// its smallest node index and clusters are numbered in that order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabeling {
    grid: GridSpec,
    cluster_of: Vec<u32>,
    reps: Vec<NodeIndex>,
    sizes: Vec<usize>,
}

impl ClusterLabeling {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn num_clusters(&self) -> usize {
        self.reps.len()
    }

    /// Dense cluster id of `v`, or `None` when `v` is closed.
    #[inline]
    pub fn cluster_id(&self, v: NodeIndex) -> Option<usize> {
        match self.cluster_of[v] {
            CLOSED => None,
            id => Some(id as usize),
        }
    }

    /// Canonical label: the smallest node index of `v`'s cluster.
    pub fn label(&self, v: NodeIndex) -> Option<NodeIndex> {
        self.cluster_id(v).map(|id| self.reps[id])
    }

    pub fn representatives(&self) -> &[NodeIndex] {
        &self.reps
    }

    /// Cluster sizes indexed by cluster id.
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn open_count(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// `S`: size of the largest cluster, 0 when nothing is open.
    pub fn largest(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0)
    }

    /// Members of every cluster, each list in increasing node order.
    pub fn members(&self) -> Vec<Vec<NodeIndex>> {
        let mut out: Vec<Vec<NodeIndex>> = self.sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for (v, &c) in self.cluster_of.iter().enumerate() {
            if c != CLOSED {
                out[c as usize].push(v);
            }
        }
        out
    }

    /// Per-cluster sums of `values`.
    pub fn sums(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.reps.len()];
        for (v, &c) in self.cluster_of.iter().enumerate() {
            if c != CLOSED {
                out[c as usize] += values[v];
            }
        }
        out
    }

    pub fn histogram(&self) -> ClusterHistogram {
        let mut counts = BTreeMap::new();
        for &s in &self.sizes {
            *counts.entry(s).or_insert(0) += 1;
        }
        ClusterHistogram { counts }
    }
}

pub fn label_clusters(config: &OpenConfiguration) -> ClusterLabeling {
    let grid = &config.grid;
    let n = grid.len();
    let mut ds = DisjointSets::new(n);
    union_open(grid, |v| config.open[v], &mut ds);

    let mut root_id = vec![CLOSED; n];
    let mut cluster_of = vec![CLOSED; n];
    let mut reps = Vec::new();
    let mut sizes = Vec::new();
    for v in 0..n {
        if !config.open[v] {
            continue;
        }
        let r = ds.find(v);
        if root_id[r] == CLOSED {
            root_id[r] = reps.len() as u32;
            reps.push(v);
            sizes.push(ds.set_size(r));
        }
        cluster_of[v] = root_id[r];
    }
    ClusterLabeling { grid: grid.clone(), cluster_of, reps, sizes }
}

pub fn largest_cluster_size(labeling: &ClusterLabeling) -> usize {
    labeling.largest()
}

/// `S_K`: largest open cluster of the subgraph induced on `region`.
pub fn largest_cluster_within(config: &OpenConfiguration, region: &Region) -> Result<usize> {
    let grid = &config.grid;
    let members = region.members(grid)?;
    let mut local = vec![CLOSED; grid.len()];
    for (i, &v) in members.iter().enumerate() {
        local[v] = i as u32;
    }
    let mut ds = DisjointSets::new(members.len());
    for (i, &v) in members.iter().enumerate() {
        if !config.open[v] {
            continue;
        }
        grid.for_each_neighbor(v, |w| {
            let j = local[w];
            if j != CLOSED && config.open[w] {
                ds.union(i, j as usize);
            }
        });
    }
    Ok(members
        .iter()
        .enumerate()
        .filter(|&(_, &v)| config.open[v])
        .map(|(i, _)| ds.set_size(i))
        .max()
        .unwrap_or(0))
}

/// `N(k)`: number of clusters of each size `k` (only sizes with `N(k) > 0`).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClusterHistogram {
    counts: BTreeMap<usize, usize>,
}

impl ClusterHistogram {
    pub fn count(&self, k: usize) -> usize {
        self.counts.get(&k).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.counts.iter().map(|(&k, &n)| (k, n))
    }

    pub fn largest(&self) -> usize {
        self.counts.keys().next_back().copied().unwrap_or(0)
    }

    /// `Σ k · N(k)`.
    pub fn open_count(&self) -> usize {
        self.iter().map(|(k, n)| k * n).sum()
    }
}

pub fn cluster_size_histogram(labeling: &ClusterLabeling) -> ClusterHistogram {
    labeling.histogram()
}
