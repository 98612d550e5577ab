use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use crate::distributions::FamilySpec;
use crate::error::{Error, Result};
use crate::percolation::{label_clusters, threshold, Field};
use crate::unionfind::DisjointSets;

use super::{DetectorSpec, Statistic};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UlsMode {
    FixedThreshold { t: f64, k_min: usize },
    AllThresholds { k_min: usize },
    /// `k_min = ⌈fraction · S_m(t)⌉` at each threshold; sweeps when `t` is `None`.
    Relative { fraction: f64, t: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UlsConfig {
    pub mode: UlsMode,
    /// Replace `μ₀|t` and `σ₀|t` by the mean and standard deviation of the
    /// surviving values.
    pub plug_in_mu0: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UlsOutcome {
    pub statistic: Statistic,
    /// Threshold at which the maximum was attained (the fixed one otherwise).
    pub threshold: Option<f64>,
    /// Thresholds dropped because `σ₀|t` was zero or undefined.
    pub skipped_thresholds: usize,
}

impl UlsConfig {
    pub fn from_spec(spec: &DetectorSpec) -> Option<Self> {
        let (mode, plug_in_mu0) = match *spec {
            DetectorSpec::Uls { t, k_min, plug_in } => (UlsMode::FixedThreshold { t, k_min }, plug_in),
            DetectorSpec::UlsAll { k_min, plug_in } => (UlsMode::AllThresholds { k_min }, plug_in),
            DetectorSpec::UlsRelative { fraction, t, plug_in } => (UlsMode::Relative { fraction, t }, plug_in),
            _ => return None,
        };
        Some(Self { mode, plug_in_mu0 })
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            UlsMode::FixedThreshold { k_min: 0, .. } | UlsMode::AllThresholds { k_min: 0 } => {
                Err(Error::InvalidParameter("k_min must be at least 1".into()))
            }
            UlsMode::Relative { fraction, .. } if !(fraction > 0.0 && fraction <= 1.0) => {
                Err(Error::InvalidParameter(format!("fraction {fraction} outside (0, 1]")))
            }
            _ => Ok(()),
        }
    }

    pub fn run(&self, field: &Field, family: &FamilySpec) -> Result<UlsOutcome> {
        self.validate()?;
        let fixed = |t: f64, stat: Statistic| UlsOutcome { statistic: stat, threshold: Some(t), skipped_thresholds: 0 };
        match self.mode {
            UlsMode::FixedThreshold { t, k_min } => {
                Ok(fixed(t, uls_at_threshold(field, family, t, k_min, self.plug_in_mu0)?))
            }
            UlsMode::Relative { fraction, t: Some(t) } => {
                Ok(fixed(t, uls_relative(field, family, fraction, t, self.plug_in_mu0)?))
            }
            UlsMode::AllThresholds { k_min } => Ok(sweep(field, family, MinSize::Fixed(k_min), self.plug_in_mu0)),
            UlsMode::Relative { fraction, t: None } => {
                Ok(sweep(field, family, MinSize::Fraction(fraction), self.plug_in_mu0))
            }
        }
    }
}

fn surviving(field: &Field, t: f64) -> impl Iterator<Item = f64> + '_ {
    field.values().iter().copied().filter(move |&x| x > t)
}

/// `U_m(t, k) = max √|K| (X̄_K − μ₀|t)` over open clusters at `t` with at
/// least `k_min` nodes, or [`Statistic::Empty`] when none qualify.
pub fn uls_at_threshold(field: &Field, family: &FamilySpec, t: f64, k_min: usize, plug_in: bool) -> Result<Statistic> {
    let labeling = label_clusters(&threshold(field, t));
    if labeling.num_clusters() == 0 {
        return Ok(Statistic::Empty);
    }
    let mu = if plug_in {
        let (n, s) = surviving(field, t).fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
        s / n as f64
    } else {
        family.truncated_moments(0.0, t)?.0
    };
    let sums = labeling.sums(field.values());
    let mut best = Statistic::Empty;
    for (&n, &s) in labeling.sizes().iter().zip(&sums) {
        if n >= k_min.max(1) {
            let n = n as f64;
            best = best.max(Statistic::Value(n.sqrt() * (s / n - mu)));
        }
    }
    Ok(best)
}

/// [`uls_at_threshold`] with `k_min = ⌈fraction · S_m(t)⌉`.
pub fn uls_relative(field: &Field, family: &FamilySpec, fraction: f64, t: f64, plug_in: bool) -> Result<Statistic> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!("fraction {fraction} outside (0, 1]")));
    }
    let largest = label_clusters(&threshold(field, t)).largest();
    let k_min = ((fraction * largest as f64).ceil() as usize).max(1);
    uls_at_threshold(field, family, t, k_min, plug_in)
}

/// `ULS_m(k) = max_t U_m(t, k) / σ₀|t`.
///
/// The thresholds are the distinct observed values plus one below the
/// minimum (`−∞` for continuous families, `v_min − 0.5` for integer ones).
/// Nodes are inserted in decreasing order of value, ties as one batch, into
/// an incremental union-find; after each batch the open set equals
/// `{X > t}` for the next lower threshold `t`.
pub fn uls_all_thresholds(field: &Field, family: &FamilySpec, k_min: usize, plug_in: bool) -> Result<UlsOutcome> {
    if k_min == 0 {
        return Err(Error::InvalidParameter("k_min must be at least 1".into()));
    }
    Ok(sweep(field, family, MinSize::Fixed(k_min), plug_in))
}

#[derive(Debug, Clone, Copy)]
enum MinSize {
    Fixed(usize),
    Fraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Clusters grouped by size, each group ordered by cluster sum.
#[derive(Default)]
struct SizeIndex {
    groups: BTreeMap<usize, BTreeSet<(Key, u32)>>,
}

impl SizeIndex {
    fn insert(&mut self, size: usize, sum: f64, root: usize) {
        self.groups.entry(size).or_default().insert((Key(sum), root as u32));
    }

    fn remove(&mut self, size: usize, sum: f64, root: usize) {
        if let Some(group) = self.groups.get_mut(&size) {
            group.remove(&(Key(sum), root as u32));
            if group.is_empty() {
                self.groups.remove(&size);
            }
        }
    }

    fn largest(&self) -> usize {
        self.groups.keys().next_back().copied().unwrap_or(0)
    }
}

fn sweep(field: &Field, family: &FamilySpec, min_size: MinSize, plug_in: bool) -> UlsOutcome {
    let grid = field.grid();
    let values = field.values();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_unstable_by(|&a, &b| values[b].total_cmp(&values[a]));

    let mut sets = DisjointSets::new(values.len());
    let mut active = vec![false; values.len()];
    let mut sums = vec![0.0; values.len()];
    let mut index = SizeIndex::default();
    let (mut count, mut mean, mut m2) = (0usize, 0.0f64, 0.0f64);

    let mut best = Statistic::Empty;
    let mut best_t = None;
    let mut skipped = 0;

    let mut start = 0;
    while start < order.len() {
        let v_batch = values[order[start]];
        let mut end = start;
        while end < order.len() && values[order[end]] == v_batch {
            let v = order[end];
            active[v] = true;
            sums[v] = values[v];
            index.insert(1, values[v], v);
            count += 1;
            let delta = values[v] - mean;
            mean += delta / count as f64;
            m2 += delta * (values[v] - mean);
            grid.for_each_neighbor(v, |w| {
                if !active[w] {
                    return;
                }
                let (rv, rw) = (sets.find(v), sets.find(w));
                if rv == rw {
                    return;
                }
                index.remove(sets.set_size(rv), sums[rv], rv);
                index.remove(sets.set_size(rw), sums[rw], rw);
                let total = sums[rv] + sums[rw];
                let r = sets.union(rv, rw);
                sums[r] = total;
                index.insert(sets.set_size(r), total, r);
            });
            end += 1;
        }
        start = end;

        let t = if end < order.len() {
            values[order[end]]
        } else if family.is_discrete() {
            family.just_below(v_batch)
        } else {
            f64::NEG_INFINITY
        };
        let moments = if plug_in {
            (count >= 2).then(|| (mean, (m2 / (count - 1) as f64).sqrt()))
        } else {
            family.truncated_moments(0.0, t).ok().map(|(m, v)| (m, v.sqrt()))
        };
        let Some((mu, sigma)) = moments.filter(|&(_, s)| s > 0.0 && s.is_finite()) else {
            skipped += 1;
            continue;
        };
        let k = match min_size {
            MinSize::Fixed(k) => k,
            MinSize::Fraction(f) => ((f * index.largest() as f64).ceil() as usize).max(1),
        };
        for (&n, group) in index.groups.range(k..) {
            let (Key(s), _) = *group.iter().next_back().expect("groups are non-empty");
            let n = n as f64;
            let score = Statistic::Value((s - n * mu) / (n.sqrt() * sigma));
            if score > best {
                best = score;
                best_t = Some(t);
            }
        }
    }
    UlsOutcome { statistic: best, threshold: best_t, skipped_thresholds: skipped }
}

/// The thresholds visited by the all-threshold sweep, in decreasing order.
pub fn sweep_thresholds(field: &Field, family: &FamilySpec) -> Vec<f64> {
    let mut vals: Vec<f64> = field.values().to_vec();
    vals.sort_unstable_by(|a, b| b.total_cmp(a));
    vals.dedup();
    let last = *vals.last().expect("fields are non-empty");
    let mut out: Vec<f64> = vals[1..].to_vec();
    out.push(if family.is_discrete() { family.just_below(last) } else { f64::NEG_INFINITY });
    out
}
