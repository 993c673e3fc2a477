//! The t-digest data structure.
//!
//! A digest summarizes a stream of real samples as an ordered sequence of
//! centroids, each holding the mean and total weight of one cluster. Cluster
//! sizes are limited through a [`ScaleKind`] so that clusters near the tails
//! stay small (often a single sample) while clusters near the median grow
//! large. Two construction algorithms are provided: a buffer-and-merge pass
//! ([`TDigest::merge_buffer`]) and a one-at-a-time clustering insert
//! ([`TDigest::add_point`]). Digests built independently can be combined
//! with [`TDigest::merge_digests`].

use crate::error::{Error, Result};
use crate::scale::ScaleKind;

/// A `(mean, weight)` pair summarizing one cluster of samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Centroid {
    mean: f64,
    weight: f64,
}

impl Centroid {
    pub fn new(mean: f64, weight: f64) -> Self {
        Centroid { mean, weight }
    }

    #[inline]
    pub fn mean(&self) -> f64 {
        self.mean
    }

    #[inline]
    pub fn weight(&self) -> f64 {
        self.weight
    }
}

/// Tuning knobs for the buffered-merge construction path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergePolicy {
    /// Number of samples collected before a merge pass runs.
    pub buffer_capacity: usize,
    /// Merge passes run at `delta * working_delta_factor`; [`TDigest::compress`]
    /// consolidates down to the final `delta`. Factor 1 disables stratification.
    pub working_delta_factor: f64,
    /// Alternate the scan direction between merge passes. Keeps clusters from
    /// drifting in one direction as data accumulates.
    pub alternate_scan: bool,
}

impl MergePolicy {
    /// Buffer of `10⌈δ⌉` samples, working compression `3δ`, alternating scans.
    pub fn default_for(delta: f64) -> Self {
        MergePolicy {
            buffer_capacity: (10.0 * delta.ceil()).max(1.0) as usize,
            working_delta_factor: 3.0,
            alternate_scan: true,
        }
    }

    fn check(&self) -> Result<()> {
        if self.buffer_capacity == 0 {
            return Err(Error::InvalidBufferCapacity);
        }
        if !(self.working_delta_factor >= 1.0 && self.working_delta_factor.is_finite()) {
            return Err(Error::InvalidDeltaFactor(self.working_delta_factor));
        }
        Ok(())
    }
}

/// Working representation inside a merge pass: a centroid plus the raw-sample
/// range it covers (only retained for instrumented digests).
#[derive(Debug, Clone, Copy)]
struct MergeItem {
    mean: f64,
    weight: f64,
    lo: f64,
    hi: f64,
}

impl MergeItem {
    fn fuse(&mut self, other: MergeItem) {
        let w = self.weight + other.weight;
        self.mean += (other.mean - self.mean) * other.weight / w;
        self.weight = w;
        self.lo = self.lo.min(other.lo);
        self.hi = self.hi.max(other.hi);
    }
}

/// Minimum supported compression parameter.
pub const MIN_DELTA: f64 = 10.0;

/// t-digest sketch: ordered centroids, observed extrema, total weight and the
/// compression configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct TDigest {
    centroids: Vec<Centroid>,
    /// Per-centroid `[lowest, highest]` raw sample, present in instrumented mode.
    ranges: Option<Vec<(f64, f64)>>,
    total_weight: f64,
    min: f64,
    max: f64,
    delta: f64,
    scale: ScaleKind,
    policy: MergePolicy,
    reverse_next: bool,
}

impl TDigest {
    /// Creates an empty digest. `delta` must be at least [`MIN_DELTA`].
    pub fn new(delta: f64, scale: ScaleKind, policy: MergePolicy) -> Result<Self> {
        if !(delta.is_finite() && delta >= MIN_DELTA) {
            return Err(Error::DeltaBelowMinimum(delta));
        }
        policy.check()?;
        Ok(TDigest {
            centroids: Vec::new(),
            ranges: None,
            total_weight: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            delta,
            scale,
            policy,
            reverse_next: false,
        })
    }

    /// Creates an empty digest with the default policy for `delta`.
    pub fn with_defaults(delta: f64, scale: ScaleKind) -> Result<Self> {
        Self::new(delta, scale, MergePolicy::default_for(delta))
    }

    /// Creates an empty digest that additionally retains, per centroid, the
    /// lowest and highest raw sample assigned to it, enabling
    /// [`TDigest::measure_overlap`].
    pub fn new_instrumented(delta: f64, scale: ScaleKind, policy: MergePolicy) -> Result<Self> {
        let mut d = Self::new(delta, scale, policy)?;
        d.ranges = Some(Vec::new());
        Ok(d)
    }

    /// Builds a digest from unit-weight values: buffered merges followed by a
    /// final compression.
    pub fn from_values<I>(
        delta: f64,
        scale: ScaleKind,
        policy: MergePolicy,
        values: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = f64>,
    {
        let mut d = Self::new(delta, scale, policy)?;
        d.extend_values(values)?;
        d.compress();
        Ok(d)
    }

    pub fn centroids(&self) -> &[Centroid] {
        &self.centroids
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Smallest value observed; `+∞` while the digest is empty.
    pub fn min(&self) -> f64 {
        self.min
    }

    /// Largest value observed; `−∞` while the digest is empty.
    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn scale(&self) -> ScaleKind {
        self.scale
    }

    pub fn policy(&self) -> MergePolicy {
        self.policy
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    pub fn is_instrumented(&self) -> bool {
        self.ranges.is_some()
    }

    pub(crate) fn set_extrema(&mut self, min: f64, max: f64) {
        self.min = min;
        self.max = max;
    }

    pub(crate) fn set_state(&mut self, centroids: Vec<Centroid>, total_weight: f64) {
        self.centroids = centroids;
        self.total_weight = total_weight;
    }

    /// Merges a buffer of `(value, weight)` samples into the digest with one
    /// greedy pass at the working compression (`delta * working_delta_factor`).
    ///
    /// The union of the existing centroids and the buffer is sorted by mean
    /// and scanned once (left to right, or right to left on alternating
    /// passes), accumulating into the current cluster while the running
    /// quantile stays within `q_limit = k⁻¹(k(q₀)+1)`; exactly one `k`/`k⁻¹`
    /// pair is evaluated per emitted centroid. Rejects non-finite values and
    /// non-positive weights without modifying the digest.
    pub fn merge_buffer(&mut self, buffer: &[(f64, f64)]) -> Result<()> {
        for &(value, weight) in buffer {
            if !value.is_finite() {
                return Err(Error::NonFiniteValue(value));
            }
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(Error::InvalidWeight(weight));
            }
        }
        if buffer.is_empty() && self.centroids.is_empty() {
            return Ok(());
        }
        for &(value, _) in buffer {
            self.min = self.min.min(value);
            self.max = self.max.max(value);
        }
        let extra = buffer
            .iter()
            .map(|&(value, weight)| MergeItem {
                mean: value,
                weight,
                lo: value,
                hi: value,
            })
            .collect();
        self.run_merge_pass(extra, self.delta * self.policy.working_delta_factor);
        Ok(())
    }

    /// Feeds unit-weight values through an internal buffer of
    /// `policy.buffer_capacity` samples, merging each time it fills. The
    /// digest is left fully merged at the working compression; call
    /// [`TDigest::compress`] to consolidate to the final `delta`.
    pub fn extend_values<I>(&mut self, values: I) -> Result<()>
    where
        I: IntoIterator<Item = f64>,
    {
        let cap = self.policy.buffer_capacity;
        let mut buf: Vec<(f64, f64)> = Vec::with_capacity(cap);
        for v in values {
            buf.push((v, 1.0));
            if buf.len() == cap {
                self.merge_buffer(&buf)?;
                buf.clear();
            }
        }
        if !buf.is_empty() {
            self.merge_buffer(&buf)?;
        }
        Ok(())
    }

    /// Consolidates the digest with one merge pass at the final `delta`,
    /// undoing any working-compression stratification. Idempotent on a digest
    /// that is already fully merged at `delta`.
    pub fn compress(&mut self) {
        if self.centroids.is_empty() {
            return;
        }
        self.run_merge_pass(Vec::new(), self.delta);
    }

    /// Adds a single `(value, weight)` sample by nearest-centroid clustering.
    ///
    /// The candidates are the centroids at minimum mean-distance from
    /// `value`, narrowed to those whose k-size stays at most 1 after
    /// absorbing the weight; among those the heaviest wins. If none qualify
    /// the sample starts a new centroid. When the centroid count exceeds
    /// `growth_limit * delta` the digest is compressed.
    pub fn add_point(&mut self, value: f64, weight: f64, growth_limit: u32) -> Result<()> {
        if growth_limit < 1 {
            return Err(Error::InvalidGrowthLimit);
        }
        if !value.is_finite() {
            return Err(Error::NonFiniteValue(value));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidWeight(weight));
        }

        let target = self.nearest_absorbable(value, weight);
        self.total_weight += weight;
        self.min = self.min.min(value);
        self.max = self.max.max(value);

        match target {
            Some(i) => {
                let c = &mut self.centroids[i];
                let w = c.weight + weight;
                c.mean += (value - c.mean) * weight / w;
                c.weight = w;
                if let Some(ranges) = &mut self.ranges {
                    ranges[i].0 = ranges[i].0.min(value);
                    ranges[i].1 = ranges[i].1.max(value);
                }
                self.restore_order_around(i);
            }
            None => {
                let pos = self.centroids.partition_point(|c| c.mean < value);
                self.centroids.insert(pos, Centroid::new(value, weight));
                if let Some(ranges) = &mut self.ranges {
                    ranges.insert(pos, (value, value));
                }
            }
        }

        if self.centroids.len() as f64 > growth_limit as f64 * self.delta {
            self.compress();
        }
        Ok(())
    }

    /// Index of the centroid that should absorb `(value, weight)`, if any.
    fn nearest_absorbable(&self, value: f64, weight: f64) -> Option<usize> {
        if self.centroids.is_empty() {
            return None;
        }
        let pos = self.centroids.partition_point(|c| c.mean < value);
        let left = pos
            .checked_sub(1)
            .map(|i| (i, value - self.centroids[i].mean));
        let right = (pos < self.centroids.len()).then(|| (pos, self.centroids[pos].mean - value));

        let dmin = match (left, right) {
            (Some((_, a)), Some((_, b))) => a.min(b),
            (Some((_, a)), None) => a,
            (None, Some((_, b))) => b,
            (None, None) => return None,
        };

        // Collect every centroid at exactly the minimum distance; runs of
        // equal means extend the candidate set on either side.
        let mut candidates: Vec<usize> = Vec::new();
        if let Some((i, d)) = left {
            if d == dmin {
                let run_mean = self.centroids[i].mean;
                let mut j = i;
                loop {
                    candidates.push(j);
                    if j == 0 || self.centroids[j - 1].mean != run_mean {
                        break;
                    }
                    j -= 1;
                }
            }
        }
        if let Some((i, d)) = right {
            if d == dmin {
                let run_mean = self.centroids[i].mean;
                let mut j = i;
                while j < self.centroids.len() && self.centroids[j].mean == run_mean {
                    candidates.push(j);
                    j += 1;
                }
            }
        }

        let n_after = self.total_weight + weight;
        let mut prefix = vec![0.0; self.centroids.len()];
        let mut acc = 0.0;
        for (i, c) in self.centroids.iter().enumerate() {
            prefix[i] = acc;
            acc += c.weight;
        }

        candidates
            .into_iter()
            .filter(|&i| {
                let q_left = prefix[i] / n_after;
                let q_right = (prefix[i] + self.centroids[i].weight + weight) / n_after;
                let size = self.scale.k_unchecked(q_right, self.delta, n_after)
                    - self.scale.k_unchecked(q_left, self.delta, n_after);
                size <= 1.0
            })
            .max_by(|&a, &b| {
                self.centroids[a]
                    .weight
                    .total_cmp(&self.centroids[b].weight)
            })
    }

    /// After an in-place mean update, bubbles centroid `i` back to its sorted
    /// position (equal-mean runs can momentarily invert).
    fn restore_order_around(&mut self, mut i: usize) {
        while i > 0 && self.centroids[i].mean < self.centroids[i - 1].mean {
            self.centroids.swap(i, i - 1);
            if let Some(ranges) = &mut self.ranges {
                ranges.swap(i, i - 1);
            }
            i -= 1;
        }
        while i + 1 < self.centroids.len() && self.centroids[i].mean > self.centroids[i + 1].mean {
            self.centroids.swap(i, i + 1);
            if let Some(ranges) = &mut self.ranges {
                ranges.swap(i, i + 1);
            }
            i += 1;
        }
    }

    /// Combines independently built digests into one digest fully merged at
    /// `out_delta`. All inputs must share a scale kind and `out_delta` must
    /// not exceed any input's delta (merging may lower resolution, never
    /// raise it). Total weight is the sum; extrema are the union.
    pub fn merge_digests(digests: &[TDigest], out_delta: f64) -> Result<TDigest> {
        let first = digests.first().ok_or(Error::NoDigests)?;
        if !(out_delta.is_finite() && out_delta >= MIN_DELTA) {
            return Err(Error::DeltaBelowMinimum(out_delta));
        }
        for d in digests {
            if d.scale != first.scale {
                return Err(Error::MixedScaleKinds);
            }
            if out_delta > d.delta {
                return Err(Error::MergeDeltaTooLarge {
                    out: out_delta,
                    input: d.delta,
                });
            }
        }

        let mut out = TDigest::new(out_delta, first.scale, first.policy)?;
        if digests.iter().all(|d| d.is_instrumented()) {
            out.ranges = Some(Vec::new());
        }
        for d in digests {
            out.min = out.min.min(d.min);
            out.max = out.max.max(d.max);
        }
        let items: Vec<MergeItem> = digests.iter().flat_map(|d| d.items()).collect();
        if items.is_empty() {
            return Ok(out);
        }
        out.run_merge_pass(items, out_delta);
        Ok(out)
    }

    fn items(&self) -> Vec<MergeItem> {
        self.centroids
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let (lo, hi) = match &self.ranges {
                    Some(r) => r[i],
                    None => (c.mean, c.mean),
                };
                MergeItem {
                    mean: c.mean,
                    weight: c.weight,
                    lo,
                    hi,
                }
            })
            .collect()
    }

    /// One greedy merge pass over the current centroids plus `extra`, at the
    /// given compression parameter.
    fn run_merge_pass(&mut self, extra: Vec<MergeItem>, working_delta: f64) {
        let mut items = self.items();
        items.extend(extra);
        if items.is_empty() {
            return;
        }
        items.sort_by(|a, b| a.mean.total_cmp(&b.mean));
        let total: f64 = items.iter().map(|c| c.weight).sum();

        let reverse = self.policy.alternate_scan && self.reverse_next;
        if self.policy.alternate_scan {
            self.reverse_next = !self.reverse_next;
        }

        let scale = self.scale;
        // A limit at or beyond the terminal k value means the rest of the
        // scan fits in one cluster; signalling ±∞ instead of a clamped
        // quantile keeps accumulated rounding from splintering the tail.
        let merged = if reverse {
            let k_start = scale.k_unchecked(0.0, working_delta, total);
            greedy_reverse(items, total, |q1| {
                let target = scale.k_unchecked(q1, working_delta, total) - 1.0;
                if target <= k_start {
                    f64::NEG_INFINITY
                } else {
                    scale.k_inverse_unchecked(target, working_delta, total)
                }
            })
        } else {
            let k_end = scale.k_unchecked(1.0, working_delta, total);
            greedy_forward(items, total, |q0| {
                let target = scale.k_unchecked(q0, working_delta, total) + 1.0;
                if target >= k_end {
                    f64::INFINITY
                } else {
                    scale.k_inverse_unchecked(target, working_delta, total)
                }
            })
        };

        self.total_weight = total;
        if self.ranges.is_some() {
            self.ranges = Some(merged.iter().map(|c| (c.lo, c.hi)).collect());
        }
        self.centroids = merged
            .into_iter()
            .map(|c| Centroid::new(c.mean, c.weight))
            .collect();
    }

    /// k-size of centroid `index` at the digest's final delta and current
    /// total weight.
    pub fn k_size(&self, index: usize) -> Option<f64> {
        self.span_k_size(index, index)
    }

    /// Combined k-size of the adjacent pair starting at `index`.
    pub fn pair_k_size(&self, index: usize) -> Option<f64> {
        self.span_k_size(index, index + 1)
    }

    fn span_k_size(&self, first: usize, last: usize) -> Option<f64> {
        if last >= self.centroids.len() || self.total_weight <= 0.0 {
            return None;
        }
        let w_left: f64 = self.centroids[..first].iter().map(|c| c.weight).sum();
        let w_span: f64 = self.centroids[first..=last].iter().map(|c| c.weight).sum();
        let q_left = w_left / self.total_weight;
        let q_right = (w_left + w_span) / self.total_weight;
        Some(
            self.scale
                .k_unchecked(q_right, self.delta, self.total_weight)
                - self
                    .scale
                    .k_unchecked(q_left, self.delta, self.total_weight),
        )
    }

    /// Smallest ordering offset `Δ` such that any two clusters more than `Δ`
    /// apart have non-overlapping raw-sample ranges (`Δ = 0` means strongly
    /// ordered). Requires instrumented mode.
    pub fn measure_overlap(&self) -> Result<usize> {
        let ranges = self.ranges.as_ref().ok_or(Error::NotInstrumented)?;
        let mut offset = 0usize;
        for j in 0..ranges.len() {
            for i in (j + 1)..ranges.len() {
                if ranges[i].0 < ranges[j].1 {
                    offset = offset.max(i - j);
                }
            }
        }
        Ok(offset)
    }

    /// Structural invariants: finite sorted means, positive weights, extrema
    /// envelope, and centroid weights summing to the recorded total.
    pub fn validate(&self) -> Result<()> {
        let mut sum = 0.0;
        for pair in self.centroids.windows(2) {
            if pair[0].mean > pair[1].mean {
                return Err(Error::InvariantViolation("centroid means out of order"));
            }
        }
        for c in &self.centroids {
            if !c.mean.is_finite() {
                return Err(Error::InvariantViolation("non-finite centroid mean"));
            }
            if !(c.weight > 0.0 && c.weight.is_finite()) {
                return Err(Error::InvariantViolation("non-positive centroid weight"));
            }
            sum += c.weight;
        }
        if (sum - self.total_weight).abs() > 1e-9 * self.total_weight.max(1.0) {
            return Err(Error::InvariantViolation(
                "centroid weights do not sum to the total",
            ));
        }
        if let Some(first) = self.centroids.first() {
            let last = self.centroids.last().unwrap();
            if first.mean < self.min || last.mean > self.max {
                return Err(Error::InvariantViolation(
                    "centroid means escape the [min, max] envelope",
                ));
            }
        }
        if let Some(ranges) = &self.ranges {
            if ranges.len() != self.centroids.len() {
                return Err(Error::InvariantViolation(
                    "instrumented ranges out of sync with centroids",
                ));
            }
        }
        Ok(())
    }
}

/// Left-to-right greedy consolidation. `limit` maps a cluster's left quantile
/// edge to the largest admissible right edge; it is invoked exactly once per
/// emitted centroid. Bookkeeping runs in weight units, which stay exact for
/// integral weights where repeated quantile accumulation would not.
fn greedy_forward(
    items: Vec<MergeItem>,
    total: f64,
    mut limit: impl FnMut(f64) -> f64,
) -> Vec<MergeItem> {
    let mut out = Vec::new();
    let mut iter = items.into_iter();
    let mut sigma = match iter.next() {
        Some(first) => first,
        None => return out,
    };
    let mut w_before = 0.0;
    let mut w_limit = limit(0.0) * total;
    for item in iter {
        if w_before + sigma.weight + item.weight <= w_limit {
            sigma.fuse(item);
        } else {
            w_before += sigma.weight;
            w_limit = limit(w_before / total) * total;
            out.push(std::mem::replace(&mut sigma, item));
        }
    }
    out.push(sigma);
    out
}

/// Mirror image of [`greedy_forward`], scanning right to left with the
/// symmetric limit `k⁻¹(k(q₁)−1)`.
fn greedy_reverse(
    items: Vec<MergeItem>,
    total: f64,
    mut limit: impl FnMut(f64) -> f64,
) -> Vec<MergeItem> {
    let mut out = Vec::new();
    let mut iter = items.into_iter().rev();
    let mut sigma = match iter.next() {
        Some(first) => first,
        None => return out,
    };
    let mut w_after = 0.0;
    let mut w_limit = limit(1.0) * total;
    for item in iter {
        if total - (w_after + sigma.weight + item.weight) >= w_limit {
            sigma.fuse(item);
        } else {
            w_after += sigma.weight;
            w_limit = limit((total - w_after) / total) * total;
            out.push(std::mem::replace(&mut sigma, item));
        }
    }
    out.push(sigma);
    out.reverse();
    out
}
