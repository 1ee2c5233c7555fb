//! Hypervolume: exact computation by objective slicing, a Monte Carlo
//! estimator for high objective counts, and exclusive contributions.
//!
//! All inputs are minimization-convention objective vectors. Points are
//! mapped into normalized space through an [`HvReference`]; a point
//! contributes only the part of its dominated region inside the reference
//! box, so points at or beyond the reference are dropped rather than errored.

use rand::Rng;

use crate::{Error, Result};

/// Exact hypervolume is limited to this many objectives; callers with more
/// must use [`hypervolume_mc`].
pub const EXACT_MAX_OBJECTIVES: usize = 8;

/// Reference point plus per-objective (ideal, nadir) normalization.
#[derive(Debug, Clone)]
pub struct HvReference {
    pub ref_point: Vec<f64>,
    pub ideal: Vec<f64>,
    pub nadir: Vec<f64>,
}

impl HvReference {
    /// Reference point used as-is, no normalization.
    pub fn raw(ref_point: Vec<f64>) -> Self {
        let m = ref_point.len();
        HvReference {
            ref_point,
            ideal: vec![0.0; m],
            nadir: vec![1.0; m],
        }
    }

    /// Running-extremes policy: ideal is the componentwise minimum of the
    /// observed objective vectors, the reference point is the componentwise
    /// maximum (nadir) expanded by 10% of the per-objective range.
    pub fn from_observed(observed: &[Vec<f64>]) -> Option<Self> {
        let first = observed.first()?;
        let m = first.len();
        let mut ideal = first.clone();
        let mut nadir = first.clone();
        for p in &observed[1..] {
            for k in 0..m {
                ideal[k] = ideal[k].min(p[k]);
                nadir[k] = nadir[k].max(p[k]);
            }
        }
        let ref_point: Vec<f64> = (0..m)
            .map(|k| {
                let range = nadir[k] - ideal[k];
                let pad = if range > 0.0 { 0.1 * range } else { 1.0 };
                nadir[k] + pad
            })
            .collect();
        Some(HvReference {
            ref_point,
            ideal,
            nadir,
        })
    }

    pub fn dim(&self) -> usize {
        self.ref_point.len()
    }

    fn scale(&self, k: usize) -> f64 {
        let r = self.nadir[k] - self.ideal[k];
        if r > 0.0 {
            r
        } else {
            1.0
        }
    }

    fn normalize_point(&self, p: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|k| (p[k] - self.ideal[k]) / self.scale(k))
            .collect()
    }

    fn normalized_ref(&self) -> Vec<f64> {
        self.normalize_point(&self.ref_point)
    }
}

/// Keeps points strictly inside the reference box and removes points weakly
/// dominated by another (ties keep the earlier point).
fn clean(points: &[Vec<f64>], reference: &[f64]) -> Vec<Vec<f64>> {
    let inside: Vec<&Vec<f64>> = points
        .iter()
        .filter(|p| p.iter().zip(reference).all(|(a, r)| a < r))
        .collect();
    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(inside.len());
    'outer: for (i, p) in inside.iter().enumerate() {
        for (j, q) in inside.iter().enumerate() {
            if i == j {
                continue;
            }
            let weakly = q.iter().zip(p.iter()).all(|(a, b)| a <= b);
            if weakly && (q != p || j < i) {
                continue 'outer;
            }
        }
        kept.push((*p).clone());
    }
    kept
}

/// Recursive slicing over the last objective; assumes a cleaned point set.
fn hv_recursive(points: &mut Vec<Vec<f64>>, reference: &[f64]) -> f64 {
    let m = reference.len();
    if points.is_empty() {
        return 0.0;
    }
    if m == 1 {
        let best = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        return (reference[0] - best).max(0.0);
    }
    if m == 2 {
        // Sorted sweep: ascending in the first objective, the second
        // objective of kept points is strictly decreasing.
        points.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        let mut area = 0.0;
        let mut prev_y = reference[1];
        for p in points.iter() {
            if p[1] < prev_y {
                area += (reference[0] - p[0]) * (prev_y - p[1]);
                prev_y = p[1];
            }
        }
        return area;
    }
    // Slice along the last objective.
    points.sort_by(|a, b| a[m - 1].partial_cmp(&b[m - 1]).unwrap());
    let mut volume = 0.0;
    let sub_ref = &reference[..m - 1];
    for i in 0..points.len() {
        let z_lo = points[i][m - 1];
        let z_hi = if i + 1 < points.len() {
            points[i + 1][m - 1]
        } else {
            reference[m - 1]
        };
        let depth = z_hi - z_lo;
        if depth <= 0.0 {
            continue;
        }
        let slab: Vec<Vec<f64>> = points[..=i].iter().map(|p| p[..m - 1].to_vec()).collect();
        let mut slab = clean(&slab, sub_ref);
        volume += depth * hv_recursive(&mut slab, sub_ref);
    }
    volume
}

/// Exact hypervolume in normalized space. Points not strictly dominating the
/// reference are dropped.
pub fn hypervolume_exact(points: &[Vec<f64>], reference: &HvReference) -> Result<f64> {
    let m = reference.dim();
    if m > EXACT_MAX_OBJECTIVES {
        return Err(Error::TooManyObjectives(m));
    }
    let norm_ref = reference.normalized_ref();
    let normalized: Vec<Vec<f64>> = points.iter().map(|p| reference.normalize_point(p)).collect();
    let mut cleaned = clean(&normalized, &norm_ref);
    Ok(hv_recursive(&mut cleaned, &norm_ref))
}

/// Monte Carlo hypervolume estimate: fraction of uniform samples in the
/// [ideal-side, reference] box dominated by some point, times the box volume.
/// The sampling box spans from the componentwise minimum of the points to the
/// reference, in normalized space.
pub fn hypervolume_mc<R: Rng>(
    points: &[Vec<f64>],
    reference: &HvReference,
    samples: u64,
    rng: &mut R,
) -> f64 {
    let m = reference.dim();
    let norm_ref = reference.normalized_ref();
    let normalized: Vec<Vec<f64>> = points.iter().map(|p| reference.normalize_point(p)).collect();
    let cleaned = clean(&normalized, &norm_ref);
    if cleaned.is_empty() {
        return 0.0;
    }
    let mut lo = cleaned[0].clone();
    for p in &cleaned[1..] {
        for k in 0..m {
            lo[k] = lo[k].min(p[k]);
        }
    }
    let box_volume: f64 = (0..m).map(|k| norm_ref[k] - lo[k]).product();
    let mut hits = 0u64;
    let mut sample = vec![0.0f64; m];
    for _ in 0..samples {
        for k in 0..m {
            sample[k] = rng.gen_range(lo[k]..norm_ref[k]);
        }
        if cleaned
            .iter()
            .any(|p| p.iter().zip(&sample).all(|(a, s)| a <= s))
        {
            hits += 1;
        }
    }
    box_volume * hits as f64 / samples as f64
}

/// Exclusive hypervolume of `point` over `base`: HV(base + point) - HV(base).
/// Computed locally by clipping the base into the point's box against the
/// reference, which keeps the recursion small.
pub fn hv_contribution(point: &[f64], base: &[Vec<f64>], reference: &HvReference) -> Result<f64> {
    let m = reference.dim();
    if m > EXACT_MAX_OBJECTIVES {
        return Err(Error::TooManyObjectives(m));
    }
    let norm_ref = reference.normalized_ref();
    let p = reference.normalize_point(point);
    if p.iter().zip(&norm_ref).any(|(a, r)| a >= r) {
        return Ok(0.0);
    }
    let own: f64 = (0..m).map(|k| norm_ref[k] - p[k]).product();
    // Base points clipped to the point's box; their union inside the box is
    // the already-covered part.
    let clipped: Vec<Vec<f64>> = base
        .iter()
        .map(|b| {
            let bn = reference.normalize_point(b);
            (0..m).map(|k| bn[k].max(p[k])).collect()
        })
        .collect();
    let mut covered = clean(&clipped, &norm_ref);
    let overlap = hv_recursive(&mut covered, &norm_ref);
    Ok((own - overlap).max(0.0))
}

/// Greedy max-contribution subset: repeatedly picks the candidate adding the
/// most hypervolume over `base` plus the picks so far; ties break by input
/// index. Returns candidate indices in pick order.
///
/// Contributions are submodular (they only shrink as the context grows), so
/// stale values are upper bounds: each round pops the best bound and only
/// recomputes that one candidate, which picks exactly what a full rescan
/// would, including its index tie-breaks.
pub fn greedy_hv_subset(
    candidates: &[Vec<f64>],
    base: &[Vec<f64>],
    count: usize,
    reference: &HvReference,
) -> Result<Vec<usize>> {
    use rayon::prelude::*;
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    /// Heap key: contribution descending, then candidate index ascending.
    #[derive(PartialEq)]
    struct Entry {
        contrib: f64,
        idx: Reverse<usize>,
        round: usize,
    }
    impl Eq for Entry {}
    impl PartialOrd for Entry {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Entry {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.contrib
                .total_cmp(&other.contrib)
                .then(self.idx.cmp(&other.idx))
        }
    }

    let initial: Vec<f64> = candidates
        .par_iter()
        .map(|c| hv_contribution(c, base, reference))
        .collect::<Result<_>>()?;
    let mut heap: BinaryHeap<Entry> = initial
        .into_iter()
        .enumerate()
        .map(|(i, contrib)| Entry {
            contrib,
            idx: Reverse(i),
            round: 0,
        })
        .collect();

    let mut picked_idx: Vec<usize> = Vec::new();
    let mut context: Vec<Vec<f64>> = base.to_vec();
    while picked_idx.len() < count.min(candidates.len()) {
        let entry = heap.pop().expect("candidates remain");
        let i = entry.idx.0;
        if entry.round == picked_idx.len() {
            context.push(candidates[i].clone());
            picked_idx.push(i);
        } else {
            heap.push(Entry {
                contrib: hv_contribution(&candidates[i], &context, reference)?,
                idx: Reverse(i),
                round: picked_idx.len(),
            });
        }
    }
    Ok(picked_idx)
}
