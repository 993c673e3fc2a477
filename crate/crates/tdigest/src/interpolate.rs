//! Rank-statistic queries over a digest.
//!
//! Queries model the summarized distribution from the centroids under two
//! assumptions: half of a multi-sample cluster's weight lies on each side of
//! its centroid, and mass between adjacent clusters is uniform. Four cluster
//! configurations get distinct treatment: multi/multi neighbors interpolate
//! plainly; a single-sample cluster is an exact point mass (the CDF steps to
//! the mid-point of its weight and stays flat up to the next singleton); and
//! a terminal cluster of weight w > 2 donates one implicit singleton at the
//! recorded extremum with the remaining w/2 − 1 interpolated. A terminal
//! cluster of weight 2 is two reconstructible singletons: the extremum and
//! its mirror `2·mean − extremum`.
//!
//! `quantile` anchors every cluster at the mid-rank of its weight span and
//! interpolates linearly between anchors, so a digest of all singletons
//! reproduces the mid-rank empirical quantile exactly. `cdf` keeps the honest
//! step shape at singletons; the two agree wherever clusters hold several
//! samples each.

use crate::digest::TDigest;
use crate::error::{Error, Result};

/// One node of the interpolation profile: a point mass of `atom` at `value`,
/// or a centroid anchor with `left`/`right` mass spread toward its neighbors.
#[derive(Debug, Clone, Copy)]
struct Node {
    value: f64,
    atom: f64,
    left: f64,
    right: f64,
}

impl Node {
    fn atom(value: f64, weight: f64) -> Self {
        Node {
            value,
            atom: weight,
            left: 0.0,
            right: 0.0,
        }
    }

    fn anchor(value: f64, left: f64, right: f64) -> Self {
        Node {
            value,
            atom: 0.0,
            left,
            right,
        }
    }
}

impl TDigest {
    /// Estimated value at quantile `q`; `quantile(0)` and `quantile(1)` are
    /// the exact extrema.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::EmptyDigest);
        }
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::QuantileOutOfRange(q));
        }
        if q == 0.0 {
            return Ok(self.min());
        }
        if q == 1.0 {
            return Ok(self.max());
        }
        let knots = self.quantile_knots();
        Ok(value_at_rank(&knots, q * self.total_weight()))
    }

    /// Estimated fraction of the weight at or below `x`. At a singleton the
    /// value is the mid-point of its step; strictly outside the observed
    /// range it is exactly 0 or 1.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::EmptyDigest);
        }
        if x.is_nan() {
            return Err(Error::NanProbe);
        }
        if x < self.min() {
            return Ok(0.0);
        }
        if x > self.max() {
            return Ok(1.0);
        }
        let n = self.total_weight();
        let nodes = self.profile();
        // One-sided limits of the modelled mass below x; their average puts
        // any step discontinuity (singletons, duplicate means) at its
        // mid-point.
        let mut below = 0.0;
        let mut above = 0.0;
        for (j, node) in nodes.iter().enumerate() {
            if node.atom > 0.0 {
                if node.value < x {
                    below += node.atom;
                } else if node.value > x {
                    above += node.atom;
                }
            }
            if let Some(next) = nodes.get(j + 1) {
                let w = node.right + next.left;
                if w <= 0.0 {
                    continue;
                }
                let (a, b) = (node.value, next.value);
                if a == b {
                    if b < x {
                        below += w;
                    } else if a > x {
                        above += w;
                    }
                } else if x <= a {
                    above += w;
                } else if x >= b {
                    below += w;
                } else {
                    let t = (x - a) / (b - a);
                    below += w * t;
                    above += w * (1.0 - t);
                }
            }
        }
        Ok((below + (n - above)) / (2.0 * n))
    }

    /// Mean of the modelled distribution restricted to the quantile range
    /// `[q_lo, q_hi]`. Clusters entirely inside the range contribute their
    /// exact `mean · weight`; clusters cut by a boundary contribute pro-rata
    /// under the interpolation model.
    pub fn trimmed_mean(&self, q_lo: f64, q_hi: f64) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::EmptyDigest);
        }
        if !(0.0 <= q_lo && q_lo < q_hi && q_hi <= 1.0) {
            return Err(Error::InvalidTrimRange(q_lo, q_hi));
        }
        let n = self.total_weight();
        let (r_lo, r_hi) = (q_lo * n, q_hi * n);
        let knots = self.quantile_knots();
        let mut sum = 0.0;
        let mut weight = 0.0;
        let mut w_before = 0.0;
        for c in self.centroids() {
            let (a, b) = (w_before, w_before + c.weight());
            w_before = b;
            if b <= r_lo || a >= r_hi {
                continue;
            }
            if a >= r_lo && b <= r_hi {
                sum += c.mean() * c.weight();
                weight += c.weight();
            } else {
                let (lo, hi) = (a.max(r_lo), b.min(r_hi));
                sum += integrate_rank(&knots, lo, hi);
                weight += hi - lo;
            }
        }
        Ok(sum / weight)
    }

    /// Expands the centroid list into interpolation nodes, applying the
    /// terminal-cluster rules. Node values are clamped into `[min, max]` and
    /// forced non-decreasing so queries stay monotone even on digests merged
    /// from weakly ordered parts.
    fn profile(&self) -> Vec<Node> {
        let centroids = self.centroids();
        let m = centroids.len();
        let (min, max) = (self.min(), self.max());
        let mut nodes: Vec<Node> = Vec::with_capacity(m + 2);
        for (i, c) in centroids.iter().enumerate() {
            let (mean, w) = (c.mean(), c.weight());
            let first = i == 0;
            let last = i == m - 1;
            match (first, last) {
                (true, true) => {
                    if w <= 1.0 {
                        nodes.push(Node::atom(mean, w));
                    } else if w <= 2.0 {
                        nodes.push(Node::atom(min, w / 2.0));
                        nodes.push(Node::atom(max, w / 2.0));
                    } else {
                        nodes.push(Node::atom(min, 1.0));
                        nodes.push(Node::anchor(mean, w / 2.0 - 1.0, w / 2.0 - 1.0));
                        nodes.push(Node::atom(max, 1.0));
                    }
                }
                (true, false) => {
                    if w <= 1.0 {
                        nodes.push(Node::atom(mean, w));
                    } else if w <= 2.0 {
                        nodes.push(Node::atom(min, w / 2.0));
                        nodes.push(Node::atom(2.0 * mean - min, w / 2.0));
                    } else {
                        nodes.push(Node::atom(min, 1.0));
                        nodes.push(Node::anchor(mean, w / 2.0 - 1.0, w / 2.0));
                    }
                }
                (false, true) => {
                    if w <= 1.0 {
                        nodes.push(Node::atom(mean, w));
                    } else if w <= 2.0 {
                        nodes.push(Node::atom(2.0 * mean - max, w / 2.0));
                        nodes.push(Node::atom(max, w / 2.0));
                    } else {
                        nodes.push(Node::anchor(mean, w / 2.0, w / 2.0 - 1.0));
                        nodes.push(Node::atom(max, 1.0));
                    }
                }
                (false, false) => {
                    if w <= 1.0 {
                        nodes.push(Node::atom(mean, w));
                    } else {
                        nodes.push(Node::anchor(mean, w / 2.0, w / 2.0));
                    }
                }
            }
        }
        let mut floor = min;
        for node in &mut nodes {
            node.value = node.value.clamp(min, max).max(floor);
            floor = node.value;
        }
        nodes
    }

    /// The quantile curve as `(rank, value)` knots: atoms anchored at the
    /// mid-rank of their weight span, centroid anchors at their half-weight
    /// point.
    fn quantile_knots(&self) -> Vec<(f64, f64)> {
        let nodes = self.profile();
        let mut knots = Vec::with_capacity(nodes.len());
        let mut cum = 0.0;
        for node in nodes {
            if node.atom > 0.0 {
                knots.push((cum + node.atom / 2.0, node.value));
                cum += node.atom;
            } else {
                knots.push((cum + node.left, node.value));
                cum += node.left + node.right;
            }
        }
        knots
    }
}

/// Piecewise-linear evaluation of the knot curve, clamped flat beyond the
/// terminal knots.
fn value_at_rank(knots: &[(f64, f64)], rank: f64) -> f64 {
    let first = knots[0];
    if rank <= first.0 {
        return first.1;
    }
    let last = knots[knots.len() - 1];
    if rank >= last.0 {
        return last.1;
    }
    let seg = knots.partition_point(|&(r, _)| r < rank);
    let (r0, v0) = knots[seg - 1];
    let (r1, v1) = knots[seg];
    if r1 <= r0 {
        return v1;
    }
    v0 + (v1 - v0) * ((rank - r0) / (r1 - r0))
}

/// Exact integral of the piecewise-linear knot curve over `[lo, hi]` in rank
/// units.
fn integrate_rank(knots: &[(f64, f64)], lo: f64, hi: f64) -> f64 {
    let mut cuts = vec![lo];
    for &(r, _) in knots {
        if r > lo && r < hi {
            cuts.push(r);
        }
    }
    cuts.push(hi);
    let mut sum = 0.0;
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        sum += (b - a) * (value_at_rank(knots, a) + value_at_rank(knots, b)) / 2.0;
    }
    sum
}
