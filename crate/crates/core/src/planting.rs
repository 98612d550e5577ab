//! Null and planted fields, and the shapes the alternatives are planted on.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::FamilySpec;
use crate::error::{Error, Result};
use crate::lattice::{GridSpec, NodeIndex, Region};
use crate::percolation::Field;

/// Where a hypercube goes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Centered in the grid.
    Center,
    /// Uniform over all placements fully inside the grid.
    Random,
    /// Fixed 1-based lower corner.
    Corner(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeSpec {
    Hypercube { side: usize, placement: Placement },
    /// A segment along `axis` (1-based). Centered when `start` is absent.
    StraightPath { length: usize, axis: usize, start: Option<Vec<usize>> },
    /// A self-avoiding walk. Without a seed the walk is drawn from the
    /// caller's generator, so it differs per replicate.
    SawPath { length: usize, seed: Option<u64> },
}

impl ShapeSpec {
    pub fn hypercube(side: usize) -> Self {
        ShapeSpec::Hypercube { side, placement: Placement::Center }
    }

    /// Number of nodes in the resolved shape.
    pub fn size(&self, dim: usize) -> usize {
        match self {
            ShapeSpec::Hypercube { side, .. } => side.pow(dim as u32),
            ShapeSpec::StraightPath { length, .. } | ShapeSpec::SawPath { length, .. } => *length,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("shape serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(format!("shape descriptor: {e}")))
    }

    /// Resolves the shape to a sorted node list inside `grid`. `rng` is used
    /// only for random placements and unseeded walks.
    pub fn resolve<R: Rng + ?Sized>(&self, grid: &GridSpec, rng: &mut R) -> Result<Vec<NodeIndex>> {
        let d = grid.dim();
        let m = grid.side();
        let nodes = match self {
            ShapeSpec::Hypercube { side, placement } => {
                if *side == 0 || *side > m {
                    return Err(Error::ShapeOutOfBounds(format!("hypercube side {side} in a side-{m} grid")));
                }
                let lower = match placement {
                    Placement::Center => vec![(m - side) / 2 + 1; d],
                    Placement::Random => (0..d).map(|_| rng.random_range(1..=m - side + 1)).collect(),
                    Placement::Corner(c) => c.clone(),
                };
                Region::cube(lower, *side).members(grid)?
            }
            ShapeSpec::StraightPath { length, axis, start } => {
                if *axis == 0 || *axis > d {
                    return Err(Error::InvalidParameter(format!("axis {axis} outside 1..={d}")));
                }
                if *length == 0 {
                    return Err(Error::InvalidParameter("path length must be at least 1".into()));
                }
                let start = match start {
                    Some(s) => s.clone(),
                    None => {
                        if *length > m {
                            return Err(Error::ShapeOutOfBounds(format!("path of length {length} in a side-{m} grid")));
                        }
                        let mut s = vec![(m - 1) / 2 + 1; d];
                        s[axis - 1] = (m - length) / 2 + 1;
                        s
                    }
                };
                let mut extent = vec![1; d];
                extent[axis - 1] = *length;
                Region::Box { lower: start, extent }.members(grid)?
            }
            ShapeSpec::SawPath { length, seed } => {
                let mut path = match seed {
                    Some(seed) => {
                        let mut own = crate::rng::stream(*seed, crate::rng::condition_id("saw"), 0);
                        generate_saw(grid, *length, None, &mut own)?
                    }
                    None => generate_saw(grid, *length, None, rng)?,
                };
                path.sort_unstable();
                path
            }
        };
        Ok(nodes)
    }
}

impl fmt::Display for ShapeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |c: &[usize]| c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match self {
            ShapeSpec::Hypercube { side, placement } => {
                write!(f, "hypercube:{side}")?;
                match placement {
                    Placement::Center => Ok(()),
                    Placement::Random => f.write_str("@random"),
                    Placement::Corner(c) => write!(f, "@{}", join(c)),
                }
            }
            ShapeSpec::StraightPath { length, axis, start } => {
                write!(f, "straight:{length}:{axis}")?;
                match start {
                    Some(s) => write!(f, "@{}", join(s)),
                    None => Ok(()),
                }
            }
            ShapeSpec::SawPath { length, seed } => match seed {
                Some(s) => write!(f, "saw:{length}@{s}"),
                None => write!(f, "saw:{length}"),
            },
        }
    }
}

impl FromStr for ShapeSpec {
    type Err = Error;

    /// `hypercube:SIDE[@random|@x1,..,xd]`, `straight:LEN[:AXIS][@x1,..,xd]`,
    /// `saw:LEN[@SEED]`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad shape `{s}`"));
        let (head, at) = match s.split_once('@') {
            Some((h, a)) => (h, Some(a.trim())),
            None => (s, None),
        };
        let mut parts = head.trim().split(':');
        let kind = parts.next().ok_or_else(bad)?.to_ascii_lowercase();
        let int = |x: Option<&str>| x.and_then(|x| x.trim().parse::<usize>().ok()).ok_or_else(bad);
        let coords = |a: &str| -> Result<Vec<usize>> {
            a.split(',').map(|x| x.trim().parse::<usize>().map_err(|_| bad())).collect()
        };
        match kind.as_str() {
            "hypercube" | "cube" => {
                let side = int(parts.next())?;
                let placement = match at {
                    None | Some("center") => Placement::Center,
                    Some("random") => Placement::Random,
                    Some(c) => Placement::Corner(coords(c)?),
                };
                Ok(ShapeSpec::Hypercube { side, placement })
            }
            "straight" | "line" => {
                let length = int(parts.next())?;
                let axis = match parts.next() {
                    Some(a) => int(Some(a))?,
                    None => 1,
                };
                let start = at.map(coords).transpose()?;
                Ok(ShapeSpec::StraightPath { length, axis, start })
            }
            "saw" => {
                let length = int(parts.next())?;
                let seed = at.map(|a| a.parse::<u64>().map_err(|_| bad())).transpose()?;
                Ok(ShapeSpec::SawPath { length, seed })
            }
            _ => Err(bad()),
        }
    }
}

/// I.i.d. `F₀` values at every node, drawn in index order.
pub fn sample_null<R: Rng + ?Sized>(grid: &GridSpec, family: &FamilySpec, rng: &mut R) -> Result<Field> {
    let sampler = family.sampler(0.0)?;
    let values = (0..grid.len()).map(|_| sampler.draw(rng)).collect();
    Field::new(grid.clone(), values)
}

/// `F_θ` values on `nodes`, `F₀` elsewhere, drawn in index order. With
/// `θ = 0` this consumes the generator exactly like [`sample_null`].
pub fn plant<R: Rng + ?Sized>(
    grid: &GridSpec,
    family: &FamilySpec,
    theta: f64,
    nodes: &[NodeIndex],
    rng: &mut R,
) -> Result<Field> {
    let null = family.sampler(0.0)?;
    let tilted = family.sampler(theta)?;
    let mut inside = vec![false; grid.len()];
    for &v in nodes {
        grid.check_index(v).map_err(|_| Error::ShapeOutOfBounds(format!("node {v} outside the grid")))?;
        inside[v] = true;
    }
    let values = inside
        .iter()
        .map(|&k| if k { tilted.draw(rng) } else { null.draw(rng) })
        .collect();
    Field::new(grid.clone(), values)
}

/// Restarts allowed before [`generate_saw`] gives up.
pub const SAW_RESTARTS: usize = 10_000;

/// A self-avoiding walk of `length` nodes in path order. The walk starts at a
/// uniform node of `region` (default: the whole grid) and extends its tail by
/// a uniform free neighbor, falling back to the head when the tail is stuck;
/// if both ends are stuck it starts over.
pub fn generate_saw<R: Rng + ?Sized>(
    grid: &GridSpec,
    length: usize,
    region: Option<&[NodeIndex]>,
    rng: &mut R,
) -> Result<Vec<NodeIndex>> {
    let allowed_nodes: Vec<NodeIndex> = match region {
        Some(r) => {
            let mut r = r.to_vec();
            r.sort_unstable();
            r.dedup();
            r
        }
        None => (0..grid.len()).collect(),
    };
    if length == 0 || length > allowed_nodes.len() {
        return Err(Error::InvalidParameter(format!(
            "walk length {length} must lie in 1..={}",
            allowed_nodes.len()
        )));
    }
    let mut allowed = vec![false; grid.len()];
    for &v in &allowed_nodes {
        grid.check_index(v)?;
        allowed[v] = true;
    }
    let mut visited = vec![false; grid.len()];
    let mut free = Vec::with_capacity(2 * grid.dim());
    let mut pick = |end: NodeIndex, visited: &[bool], rng: &mut R| -> Option<NodeIndex> {
        free.clear();
        grid.for_each_neighbor(end, |w| {
            if allowed[w] && !visited[w] {
                free.push(w);
            }
        });
        (!free.is_empty()).then(|| free[rng.random_range(0..free.len())])
    };
    for _ in 0..=SAW_RESTARTS {
        let start = allowed_nodes[rng.random_range(0..allowed_nodes.len())];
        let mut path = VecDeque::with_capacity(length);
        path.push_back(start);
        visited[start] = true;
        while path.len() < length {
            let tail = *path.back().expect("non-empty");
            if let Some(w) = pick(tail, &visited, rng) {
                visited[w] = true;
                path.push_back(w);
                continue;
            }
            let head = *path.front().expect("non-empty");
            match pick(head, &visited, rng) {
                Some(w) => {
                    visited[w] = true;
                    path.push_front(w);
                }
                None => break,
            }
        }
        if path.len() == length {
            return Ok(path.into());
        }
        for &v in &path {
            visited[v] = false;
        }
    }
    Err(Error::RestartBudgetExhausted { restarts: SAW_RESTARTS })
}

/// True when `nodes` is a loopless path: no repeats and consecutive entries adjacent.
pub fn is_self_avoiding_path(grid: &GridSpec, nodes: &[NodeIndex]) -> bool {
    let mut seen = vec![false; grid.len()];
    for (i, &v) in nodes.iter().enumerate() {
        if v >= grid.len() || seen[v] {
            return false;
        }
        seen[v] = true;
        if i > 0 {
            let mut adjacent = false;
            grid.for_each_neighbor(nodes[i - 1], |w| adjacent |= w == v);
            if !adjacent {
                return false;
            }
        }
    }
    true
}

/// True when `nodes` is non-empty, inside the grid and connected.
pub fn is_connected(grid: &GridSpec, nodes: &[NodeIndex]) -> bool {
    if nodes.is_empty() || nodes.iter().any(|&v| v >= grid.len()) {
        return false;
    }
    let mut member = vec![false; grid.len()];
    for &v in nodes {
        member[v] = true;
    }
    let mut seen = vec![false; grid.len()];
    let mut stack = vec![nodes[0]];
    seen[nodes[0]] = true;
    let mut reached = 0;
    while let Some(v) = stack.pop() {
        reached += 1;
        grid.for_each_neighbor(v, |w| {
            if member[w] && !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        });
    }
    let distinct = member.iter().filter(|&&b| b).count();
    reached == distinct
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::distributions::FamilyKind;

    #[test]
    fn zero_tilt_plant_equals_null() {
        let g = GridSpec::free(2, 20).unwrap();
        for fam in [FamilySpec::normal(), FamilySpec::new(FamilyKind::Poisson, 2.0).unwrap()] {
            let nodes = ShapeSpec::hypercube(5).resolve(&g, &mut stream(1, 2, 3)).unwrap();
            let a = sample_null(&g, &fam, &mut stream(1, 2, 3)).unwrap();
            let b = plant(&g, &fam, 0.0, &nodes, &mut stream(1, 2, 3)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn null_is_reproducible() {
        let g = GridSpec::free(2, 10).unwrap();
        let a = sample_null(&g, &FamilySpec::normal(), &mut stream(9, 0, 0)).unwrap();
        let b = sample_null(&g, &FamilySpec::normal(), &mut stream(9, 0, 0)).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn straight_path_has_length_nodes() {
        let g = GridSpec::free(2, 100).unwrap();
        let shape = ShapeSpec::StraightPath { length: 50, axis: 1, start: None };
        let nodes = shape.resolve(&g, &mut stream(0, 0, 0)).unwrap();
        assert_eq!(nodes.len(), 50);
        assert!(is_self_avoiding_path(&g, &nodes));
        let fam = FamilySpec::normal();
        let f = plant(&g, &fam, 1e6, &nodes, &mut stream(0, 0, 0)).unwrap();
        assert_eq!(f.values().iter().filter(|&&x| x > 1e5).count(), 50);
    }

    #[test]
    fn centered_cube_is_away_from_boundary() {
        let g = GridSpec::free(2, 500).unwrap();
        let nodes = ShapeSpec::hypercube(100).resolve(&g, &mut stream(0, 0, 0)).unwrap();
        assert_eq!(nodes.len(), 10_000);
        assert_eq!(g.index_to_coords(nodes[0]).unwrap(), vec![201, 201]);
        assert!(is_connected(&g, &nodes));
    }

    #[test]
    fn out_of_bounds_shapes() {
        let g = GridSpec::free(2, 10).unwrap();
        let mut rng = stream(0, 0, 0);
        assert!(ShapeSpec::hypercube(11).resolve(&g, &mut rng).is_err());
        let corner = ShapeSpec::Hypercube { side: 3, placement: Placement::Corner(vec![9, 1]) };
        assert!(matches!(corner.resolve(&g, &mut rng), Err(Error::ShapeOutOfBounds(_))));
        assert!(plant(&g, &FamilySpec::normal(), 1.0, &[100], &mut rng).is_err());
    }

    #[test]
    fn saw_examples() {
        let g = GridSpec::free(2, 10).unwrap();
        let mut rng = stream(4, 0, 0);
        assert_eq!(generate_saw(&g, 1, None, &mut rng).unwrap().len(), 1);
        let corridor = Region::Box { lower: vec![1, 4], extent: vec![10, 1] }.members(&g).unwrap();
        let mut path = generate_saw(&g, 10, Some(&corridor), &mut rng).unwrap();
        assert!(is_self_avoiding_path(&g, &path));
        path.sort_unstable();
        assert_eq!(path, corridor);
        assert!(generate_saw(&g, 101, None, &mut rng).is_err());
    }

    #[test]
    fn saw_restart_budget() {
        // two disconnected nodes cannot host a walk of length 2
        let g = GridSpec::free(1, 5).unwrap();
        let err = generate_saw(&g, 2, Some(&[0, 4]), &mut stream(0, 0, 0)).unwrap_err();
        assert!(matches!(err, Error::RestartBudgetExhausted { .. }));
    }

    #[test]
    fn shape_strings_and_json() {
        for s in ["hypercube:10", "hypercube:10@random", "hypercube:3@2,5", "straight:50:1", "straight:7:2@1,1", "saw:20", "saw:20@7"] {
            let shape: ShapeSpec = s.parse().unwrap();
            assert_eq!(shape.to_string(), s);
            assert_eq!(ShapeSpec::from_json(&shape.to_json()).unwrap(), shape);
        }
        assert!("blob:3".parse::<ShapeSpec>().is_err());
    }
}
