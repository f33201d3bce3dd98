//! Single-linkage agglomeration of entities, change points of the merge
//! heights, and cutting the merge tree back onto observations.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::matrix::SymMatrix;
use crate::partition::{Partition, SCATTER};

/// One agglomeration step: two groups of entity indices (0-based, sorted)
/// joined at `height`.
#[derive(Debug, Clone, PartialEq)]
pub struct Merge {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeTrace {
    pub merges: Vec<Merge>,
    pub entity_count: usize,
}

impl MergeTrace {
    pub fn heights(&self) -> Vec<f64> {
        self.merges.iter().map(|m| m.height).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.merges.len() + 1 == self.entity_count
    }

    /// Entity labels (length `entity_count`, values `1..=k`, numbered by the
    /// smallest entity index) after applying the first `entity_count − k`
    /// merges.
    pub fn entity_labels(&self, k: usize) -> Result<Vec<u32>> {
        let k0 = self.entity_count;
        if k == 0 || k > k0 || k0 - k > self.merges.len() {
            return Err(invalid(alloc::format!(
                "cannot cut a {k0}-entity trace with {} merges into {k} groups",
                self.merges.len()
            )));
        }
        let mut root: Vec<usize> = (0..k0).collect();
        for m in &self.merges[..k0 - k] {
            let target = root[m.left[0]].min(root[m.right[0]]);
            let (a, b) = (root[m.left[0]], root[m.right[0]]);
            for r in root.iter_mut() {
                if *r == a || *r == b {
                    *r = target;
                }
            }
        }
        let raw: Vec<u32> = root.iter().map(|&r| r as u32 + 1).collect();
        Ok(Partition::canonical(&raw).labels().to_vec())
    }
}

/// Greedy single linkage: repeatedly joins the closest pair of groups (ties
/// to the lexicographically smallest pair of representatives, each group
/// being represented by its smallest entity) and replaces the distance to
/// the merged group by the minimum of the two. Stops when `stop_at` groups
/// remain. Returns the trace and the entity partition at the stop.
pub fn single_linkage(dist: &SymMatrix, stop_at: usize) -> Result<(MergeTrace, Partition)> {
    let k0 = dist.n();
    if k0 == 0 {
        return Err(invalid("empty distance matrix"));
    }
    if stop_at == 0 || stop_at > k0 {
        return Err(invalid(alloc::format!("stop_at = {stop_at} must lie in 1..={k0}")));
    }
    if !dist.is_symmetric() {
        return Err(invalid("distance matrix is not symmetric"));
    }
    if dist.values().iter().any(|v| v.is_nan()) {
        return Err(invalid("distance matrix contains NaN"));
    }
    let mut d = dist.clone();
    let mut groups: Vec<Option<Vec<usize>>> = (0..k0).map(|i| Some(alloc::vec![i])).collect();
    let mut merges = Vec::with_capacity(k0 - stop_at);
    for _ in 0..(k0 - stop_at) {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..k0 {
            if groups[i].is_none() {
                continue;
            }
            for j in (i + 1)..k0 {
                if groups[j].is_none() {
                    continue;
                }
                let v = d.get(i, j);
                if best.is_none_or(|b| v < b.2) {
                    best = Some((i, j, v));
                }
            }
        }
        let (i, j, h) = best.ok_or_else(|| Error::Pipeline("no pair left to merge".into()))?;
        let left = groups[i].take().unwrap_or_default();
        let right = groups[j].take().unwrap_or_default();
        for m in 0..k0 {
            if groups[m].is_some() && m != i {
                let v = d.get(i, m).min(d.get(j, m));
                d.set(i, m, v);
            }
        }
        let mut joined = left.clone();
        joined.extend_from_slice(&right);
        joined.sort_unstable();
        groups[i] = Some(joined);
        merges.push(Merge { left, right, height: h });
    }
    let trace = MergeTrace {
        merges,
        entity_count: k0,
    };
    let labels = trace.entity_labels(stop_at)?;
    Ok((trace, Partition::new(labels)?))
}

/// How a change point index maps to a cluster count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CpMapping {
    /// `CP_k` proposes `K₀ − k`: stop right before the jump.
    #[default]
    BeforeJump,
    /// `CP_k` proposes `K₀ − k + 1`.
    Shifted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChangePointReport {
    /// `CP_k = d*_{k+1} − d*_k` for `k = 1..K₀−2` (position `k − 1`).
    pub cps: Vec<f64>,
    /// Proposed cluster counts ranked by descending change point (ties to
    /// the larger count), clamped to at least 2 and de-duplicated.
    pub candidate_kstars: Vec<usize>,
}

/// Ranks the gaps between consecutive merge heights of a complete trace and
/// returns the `l` leading cluster counts.
pub fn change_points(trace: &MergeTrace, l: usize, mapping: CpMapping) -> Result<ChangePointReport> {
    if !trace.is_complete() {
        return Err(invalid("change points need a complete merge trace"));
    }
    let k0 = trace.entity_count;
    if k0 < 3 {
        let candidate_kstars = if k0 == 2 { alloc::vec![2] } else { Vec::new() };
        return Ok(ChangePointReport {
            cps: Vec::new(),
            candidate_kstars,
        });
    }
    if l == 0 || l > k0 - 1 {
        return Err(invalid(alloc::format!("L = {l} must lie in 1..={}", k0 - 1)));
    }
    let heights = trace.heights();
    let cps: Vec<f64> = heights.windows(2).map(|w| w[1] - w[0]).collect();
    let mut ranked: Vec<(usize, f64)> = cps
        .iter()
        .enumerate()
        .map(|(i, &cp)| {
            let k = i + 1;
            let kstar = match mapping {
                CpMapping::BeforeJump => k0 - k,
                CpMapping::Shifted => k0 - k + 1,
            };
            (kstar.max(2), cp)
        })
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(b.0.cmp(&a.0)));
    let mut candidate_kstars: Vec<usize> = Vec::with_capacity(l);
    for (k, _) in ranked {
        if !candidate_kstars.contains(&k) {
            candidate_kstars.push(k);
        }
        if candidate_kstars.len() == l {
            break;
        }
    }
    Ok(ChangePointReport { cps, candidate_kstars })
}

/// Observations inherit the merged label of their entity; `entity_partition`
/// gives each observation's entity id (`1..=K₀`, or scatter).
pub fn cut_to_partition(trace: &MergeTrace, kstar: usize, entity_partition: &Partition) -> Result<Partition> {
    let k0 = trace.entity_count;
    if kstar < 2 || kstar > k0 {
        return Err(invalid(alloc::format!("K* = {kstar} must lie in 2..={k0}")));
    }
    if entity_partition.k() != k0 {
        return Err(Error::DimensionMismatch {
            expected: k0,
            found: entity_partition.k(),
        });
    }
    let merged = trace.entity_labels(kstar)?;
    let raw: Vec<u32> = entity_partition
        .labels()
        .iter()
        .map(|&e| if e == SCATTER { SCATTER } else { merged[e as usize - 1] })
        .collect();
    Ok(Partition::canonical(&raw))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three() -> SymMatrix {
        SymMatrix::from_values(3, vec![0.0, 0.1, 0.4, 0.1, 0.0, 0.3, 0.4, 0.3, 0.0]).unwrap()
    }

    fn trace_from_heights(h: &[f64]) -> MergeTrace {
        // chain merges: entity i+1 joins the group of entity 0 at h[i]
        MergeTrace {
            merges: h
                .iter()
                .enumerate()
                .map(|(i, &height)| Merge {
                    left: (0..=i).collect(),
                    right: vec![i + 1],
                    height,
                })
                .collect(),
            entity_count: h.len() + 1,
        }
    }

    #[test]
    fn three_entity_hand_trace() {
        let (t, part) = single_linkage(&three(), 1).unwrap();
        assert_eq!(t.heights(), vec![0.1, 0.3]);
        assert_eq!(t.merges[0].left, vec![0]);
        assert_eq!(t.merges[0].right, vec![1]);
        assert_eq!(t.merges[1].left, vec![0, 1]);
        assert_eq!(t.merges[1].right, vec![2]);
        assert_eq!(part.k(), 1);
    }

    #[test]
    fn two_entities_merge_once() {
        let m = SymMatrix::from_values(2, vec![0.0, 0.7, 0.7, 0.0]).unwrap();
        let (t, _) = single_linkage(&m, 1).unwrap();
        assert_eq!(t.heights(), vec![0.7]);
    }

    #[test]
    fn rejects_bad_input() {
        let asym = SymMatrix::from_values(2, vec![0.0, 0.7, 0.7, 0.0]).unwrap();
        assert!(single_linkage(&asym, 0).is_err());
        assert!(single_linkage(&asym, 3).is_err());
        assert!(SymMatrix::from_values(2, vec![0.0, 0.7, 0.6, 0.0]).is_err());
        assert!(SymMatrix::from_values(2, vec![0.0, f64::NAN, f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn change_point_examples() {
        let r = change_points(&trace_from_heights(&[0.1, 0.15, 0.6]), 1, CpMapping::BeforeJump).unwrap();
        assert_eq!(r.cps.len(), 2);
        assert!((r.cps[0] - 0.05).abs() < 1e-12 && (r.cps[1] - 0.45).abs() < 1e-12);
        assert_eq!(r.candidate_kstars, vec![2]);

        let r = change_points(&trace_from_heights(&[0.1, 0.5, 0.55]), 2, CpMapping::BeforeJump).unwrap();
        assert_eq!(r.candidate_kstars, vec![3, 2]);

        let r = change_points(&trace_from_heights(&[0.2, 0.2, 0.2]), 2, CpMapping::BeforeJump).unwrap();
        assert_eq!(r.cps, vec![0.0, 0.0]);
        assert_eq!(r.candidate_kstars, vec![3, 2]);

        let r = change_points(&trace_from_heights(&[0.1, 0.5, 0.55]), 2, CpMapping::Shifted).unwrap();
        assert_eq!(r.candidate_kstars, vec![4, 3]);

        let r = change_points(&trace_from_heights(&[0.4]), 1, CpMapping::BeforeJump).unwrap();
        assert!(r.cps.is_empty());
        assert_eq!(r.candidate_kstars, vec![2]);
    }

    #[test]
    fn cut_examples() {
        let (t, _) = single_linkage(&three(), 1).unwrap();
        let entities = Partition::new(vec![1, 1, 2, 3, 3, 2]).unwrap();
        let same = cut_to_partition(&t, 3, &entities).unwrap();
        assert_eq!(same.labels(), entities.labels());
        let two = cut_to_partition(&t, 2, &entities).unwrap();
        assert_eq!(two.labels(), &[1, 1, 1, 2, 2, 1]);
        assert!(cut_to_partition(&t, 1, &entities).is_err());
        assert!(cut_to_partition(&t, 4, &entities).is_err());

        let with_scatter = Partition::new(vec![0, 1, 2, 3]).unwrap();
        assert_eq!(cut_to_partition(&t, 2, &with_scatter).unwrap().labels(), &[0, 1, 1, 2]);
    }
}
