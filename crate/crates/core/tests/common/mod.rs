//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

use percoscan::distributions::FamilySpec;
use percoscan::percolation::ClusterLabeling;
use percoscan::{Field, Statistic};

/// Neighbors of `v` in an `m^d` lattice with axis 0 varying fastest,
/// computed from coordinates.
pub fn lattice_neighbors(v: usize, d: usize, m: usize, toroidal: bool) -> Vec<usize> {
    let mut coords = Vec::with_capacity(d);
    let mut rest = v;
    for _ in 0..d {
        coords.push(rest % m);
        rest /= m;
    }
    let encode = |c: &[usize]| c.iter().rev().fold(0, |acc, &x| acc * m + x);
    let mut out = Vec::new();
    for axis in 0..d {
        for step in [-1i64, 1] {
            let x = coords[axis] as i64 + step;
            let x = if (0..m as i64).contains(&x) {
                x as usize
            } else if toroidal {
                x.rem_euclid(m as i64) as usize
            } else {
                continue;
            };
            let mut c = coords.clone();
            c[axis] = x;
            out.push(encode(&c));
        }
    }
    out
}

/// Breadth-first flood fill: component id per open node.
pub fn bfs_components(open: &[bool], d: usize, m: usize, toroidal: bool) -> Vec<Option<usize>> {
    let mut comp = vec![None; open.len()];
    let mut next = 0;
    for start in 0..open.len() {
        if !open[start] || comp[start].is_some() {
            continue;
        }
        comp[start] = Some(next);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for w in lattice_neighbors(v, d, m, toroidal) {
                if open[w] && comp[w].is_none() {
                    comp[w] = Some(next);
                    queue.push_back(w);
                }
            }
        }
        next += 1;
    }
    comp
}

/// Whether a labeling induces exactly the partition `reference`.
pub fn same_partition(labeling: &ClusterLabeling, reference: &[Option<usize>]) -> bool {
    let mut forward = HashMap::new();
    let mut backward = HashMap::new();
    for (v, r) in reference.iter().enumerate() {
        match (labeling.cluster_id(v), r) {
            (None, None) => {}
            (Some(a), Some(b)) => {
                if *forward.entry(a).or_insert(*b) != *b || *backward.entry(*b).or_insert(a) != a {
                    return false;
                }
            }
            _ => return false,
        }
    }
    forward.len() == labeling.num_clusters()
}

/// Clusters of `{X > t}` as node lists.
pub fn clusters_above(field: &Field, t: f64) -> Vec<Vec<usize>> {
    let g = field.grid();
    let open: Vec<bool> = field.values().iter().map(|&x| x > t).collect();
    let comp = bfs_components(&open, g.dim(), g.side(), g.boundary() == percoscan::Boundary::Toroidal);
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for (v, c) in comp.iter().enumerate() {
        if let Some(c) = c {
            groups.entry(*c).or_default().push(v);
        }
    }
    groups.into_values().collect()
}

/// Standard normal `X | X > t`: mean and standard deviation, from the
/// Mills ratio computed by `statrs`.
pub fn normal_tail_moments(t: f64) -> (f64, f64) {
    use statrs::distribution::{Continuous, ContinuousCDF, Normal};
    if t == f64::NEG_INFINITY {
        return (0.0, 1.0);
    }
    let n = Normal::new(0.0, 1.0).unwrap();
    let lambda = n.pdf(t) / n.sf(t);
    let var = 1.0 + t * lambda - lambda * lambda;
    (lambda, var.sqrt())
}

/// `max √|K| (X̄_K − μ)` over clusters at `t` of size at least `k_min`.
pub fn brute_uls(field: &Field, t: f64, k_min: usize, mu: f64) -> Statistic {
    let mut best = Statistic::Empty;
    for c in clusters_above(field, t) {
        if c.len() < k_min {
            continue;
        }
        let n = c.len() as f64;
        let s: f64 = c.iter().map(|&v| field.values()[v]).sum();
        best = best.max(Statistic::Value(n.sqrt() * (s / n - mu)));
    }
    best
}

/// Brute-force all-threshold ULS under the standard normal null: every
/// distinct observed value and `−∞` as thresholds.
pub fn brute_uls_all_normal(field: &Field, k_min: usize) -> Statistic {
    let mut ts: Vec<f64> = field.values().to_vec();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts.push(f64::NEG_INFINITY);
    let mut best = Statistic::Empty;
    for t in ts {
        let (mu, sigma) = normal_tail_moments(t);
        if let Statistic::Value(u) = brute_uls(field, t, k_min, mu) {
            best = best.max(Statistic::Value(u / sigma));
        }
    }
    best
}

pub fn normal_family() -> FamilySpec {
    FamilySpec::normal()
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}
