use std::collections::BinaryHeap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Outcome, RigidityError, TTSet};
use crate::manifold::{SpaceForm, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    /// Largest residual among matched samples, both directions.
    pub sup_matched_residual: f64,
    pub mean_matched_residual: f64,
    /// The `RESIDUAL_QUANTILE` quantile of residuals over compared samples, both
    /// directions, with unmatched samples counted at the match radius. Unlike the
    /// mean it ignores the sparse tail where repeated reflection spreads the samples
    /// apart; that tail looks the same for equal and for different scenes.
    pub quantile_residual: f64,
    /// Fraction of samples (both sets) with no partner within the match radius.
    pub unmatched_fraction: f64,
    pub trapped_fraction_each: (f64, f64),
    pub matched: usize,
    pub compared: usize,
    /// Grazing samples in each set; they take part in the comparison.
    pub grazing_each: (usize, usize),
}

pub const RESIDUAL_QUANTILE: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Residual {
    NotSample,
    Unmatched,
    Matched(f64),
}

struct Entry {
    x: Vector,
    y: Vector,
    t: f64,
}

#[derive(PartialEq)]
struct Near(f64, usize);

impl Eq for Near {}

impl PartialOrd for Near {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Near {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0).then(self.1.cmp(&o.1))
    }
}

fn entries(set: &TTSet, both_orders: bool) -> Vec<Entry> {
    let mut out = Vec::new();
    for s in &set.samples {
        if let Outcome::Sample { x, y, t, .. } = &s.outcome {
            let (x, y) = (Vector::from_row_slice(x), Vector::from_row_slice(y));
            if both_orders {
                out.push(Entry { x: y.clone(), y: x.clone(), t: *t });
            }
            out.push(Entry { x, y, t: *t });
        }
    }
    out
}

fn check_comparable(a: &TTSet, b: &TTSet) -> Result<(), RigidityError> {
    let (ga, gb) = (&a.header.geometry, &b.header.geometry);
    if ga.model != gb.model {
        return Err(RigidityError::IncomparableSpecs(format!("models differ: {:?} vs {:?}", ga.model, gb.model)));
    }
    let dc = ga.domain_center.iter().zip(&gb.domain_center).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    if ga.domain_center.len() != gb.domain_center.len() || dc > 1e-12 || (ga.domain_radius - gb.domain_radius).abs() > 1e-12 {
        return Err(RigidityError::IncomparableSpecs("domains differ".into()));
    }
    Ok(())
}

/// Tangent frame of the domain boundary at `x`.
fn boundary_frame(model: &SpaceForm, center: &Vector, x: &Vector) -> Vec<Vector> {
    let w = model.log(x, center);
    let n = &w / model.norm(&w);
    model.complement_basis(x, &n)
}

/// Residual of every sample of `a` against the set `b`.
///
/// The residual is the smaller of the nearest-neighbour distance under
/// `d(x, x') + d(y, y') + |t - t'|` (with `(x, y)` and `(y, x)` both allowed)
/// and, when the neighbours surround the sample, the time error of a local
/// affine fit of `t` over the neighbours' end points.
pub fn matched_residuals(a: &TTSet, b: &TTSet, match_radius: f64) -> Result<Vec<Residual>, RigidityError> {
    check_comparable(a, b)?;
    let geo = &a.header.geometry;
    let model = geo.space_form();
    let center = Vector::from_row_slice(&geo.domain_center);
    let m = model.dim();
    let dof = 2 * (m - 1);
    let k_near = 4 * (dof + 1);
    let mut pool = entries(b, true);
    pool.sort_by(|p, q| p.t.total_cmp(&q.t));
    let times: Vec<f64> = pool.iter().map(|e| e.t).collect();

    let residual = |x: &Vector, y: &Vector, t: f64| -> Residual {
        let d = |e: &Entry| model.dist(x, &e.x) + model.dist(y, &e.y) + (t - e.t).abs();
        let start = times.partition_point(|&s| s < t);
        let mut heap: BinaryHeap<Near> = BinaryHeap::new();
        let (mut lo, mut hi) = (start as isize - 1, start);
        let limit = 4.0 * match_radius;
        loop {
            let worst = if heap.len() == k_near { heap.peek().map(|n| n.0).unwrap() } else { limit };
            let dl = if lo >= 0 { t - times[lo as usize] } else { f64::INFINITY };
            let dh = if hi < times.len() { times[hi] - t } else { f64::INFINITY };
            let (gap, idx) = if dl <= dh { (dl, lo as usize) } else { (dh, hi) };
            if gap > worst || gap == f64::INFINITY {
                break;
            }
            if dl <= dh {
                lo -= 1;
            } else {
                hi += 1;
            }
            let dist = d(&pool[idx]);
            if dist < worst || heap.len() < k_near {
                heap.push(Near(dist, idx));
                if heap.len() > k_near {
                    heap.pop();
                }
            }
        }
        let near: Vec<Near> = heap.into_sorted_vec();
        let Some(best) = near.first().map(|n| n.0) else { return Residual::Unmatched };
        if best > match_radius {
            return Residual::Unmatched;
        }
        if best == 0.0 {
            return Residual::Matched(0.0);
        }
        let close: Vec<&Entry> = near.iter().filter(|n| n.0 <= match_radius).map(|n| &pool[n.1]).collect();
        let mut fit = f64::INFINITY;
        if close.len() >= dof + 2 {
            let fx = boundary_frame(&model, &center, x);
            let fy = boundary_frame(&model, &center, y);
            let coords: Vec<Vec<f64>> = close
                .iter()
                .map(|e| {
                    let wx = model.log(x, &e.x);
                    let wy = model.log(y, &e.y);
                    fx.iter().map(|f| model.inner(&wx, f)).chain(fy.iter().map(|f| model.inner(&wy, f))).collect()
                })
                .collect();
            // Nested neighbourhoods, nearest first: a small one stays on the sample's own
            // branch of the travelling-time map where a large one would straddle a fold.
            for k in dof + 2..=close.len() {
                let (cs, es) = (&coords[..k], &close[..k]);
                let surrounded = (0..dof).all(|j| cs.iter().any(|c| c[j] > 0.0) && cs.iter().any(|c| c[j] < 0.0));
                if !surrounded {
                    continue;
                }
                let design = DMatrix::from_fn(k, dof + 1, |r, c| if c == 0 { 1.0 } else { cs[r][c - 1] });
                let rhs = DVector::from_iterator(k, es.iter().map(|e| e.t - t));
                let svd = design.svd(true, true);
                let sv = &svd.singular_values;
                if sv.min() > 1e-8 * sv.max() {
                    if let Ok(c) = svd.solve(&rhs, 0.0) {
                        fit = fit.min(c[0].abs());
                    }
                }
            }
        }
        Residual::Matched(best.min(fit))
    };

    Ok(a.samples
        .par_iter()
        .map(|s| match &s.outcome {
            Outcome::Sample { x, y, t, .. } => residual(&Vector::from_row_slice(x), &Vector::from_row_slice(y), *t),
            _ => Residual::NotSample,
        })
        .collect())
}

/// Symmetrised comparison of two travelling-time sets.
pub fn compare_tt_sets(a: &TTSet, b: &TTSet, match_radius: f64) -> Result<DiscrepancyReport, RigidityError> {
    let ab = matched_residuals(a, b, match_radius)?;
    let ba = matched_residuals(b, a, match_radius)?;
    let mut sup: f64 = 0.0;
    let mut sum = 0.0;
    let (mut matched, mut unmatched) = (0usize, 0usize);
    let mut all = Vec::new();
    for r in ab.iter().chain(&ba) {
        match r {
            Residual::Matched(v) => {
                matched += 1;
                sup = sup.max(*v);
                sum += v;
                all.push(*v);
            }
            Residual::Unmatched => {
                unmatched += 1;
                all.push(match_radius);
            }
            Residual::NotSample => {}
        }
    }
    let compared = matched + unmatched;
    all.sort_by(f64::total_cmp);
    let quantile_residual = if all.is_empty() { 0.0 } else { all[((all.len() - 1) as f64 * RESIDUAL_QUANTILE).round() as usize] };
    let grazing = |s: &TTSet| s.samples.iter().filter(|x| matches!(x.outcome, Outcome::Sample { grazing: true, .. })).count();
    Ok(DiscrepancyReport {
        sup_matched_residual: sup,
        mean_matched_residual: if matched > 0 { sum / matched as f64 } else { 0.0 },
        quantile_residual,
        unmatched_fraction: if compared > 0 { unmatched as f64 / compared as f64 } else { 0.0 },
        trapped_fraction_each: (a.trapped_fraction(), b.trapped_fraction()),
        matched,
        compared,
        grazing_each: (grazing(a), grazing(b)),
    })
}
