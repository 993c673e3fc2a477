//! Scale functions mapping quantiles to notional cluster indices.
//!
//! A scale function is a non-decreasing map `k(q)` from a quantile
//! `q ∈ [0, 1]` to an index `k`. Clusters in a digest are limited to unit
//! span in `k`, so the local steepness of the scale function controls how
//! much weight a cluster may hold at a given quantile. Steeper near the
//! tails means smaller tail clusters and better relative accuracy there.
//!
//! Six variants are provided:
//!
//! ```text
//! k0(q) = (δ/2)·q                            uniform cluster sizes
//! k1(q) = (δ/2π)·asin(2q−1)                  sizes ∝ sqrt(q(1−q))
//! k2(q) = (δ/Z)·ln(q/(1−q)),   Z = 4·ln(n/δ)+24    sizes ∝ q(1−q)
//! k3(q) = (δ/Z′)·±ln(2·min(q,1−q)), Z′ = 4·ln(n/δ)+21  sizes ∝ min(q,1−q)
//! ```
//!
//! plus unnormalized forms of `k2`/`k3` that drop the `Z` denominator
//! (cluster count then grows roughly with log n). The `k2`/`k3` families
//! diverge at the endpoints: `k(0) = −∞` and `k(1) = +∞`, which forces the
//! extreme clusters to hold a single sample.

use crate::error::{Error, Result};

/// Selector for the q→k mapping used by a digest.
#[derive(Debug, Copy, Clone, PartialEq, Eq, Hash)]
pub enum ScaleKind {
    /// Linear scale; uniform bins, constant absolute error in q.
    K0,
    /// Arcsine scale; cluster sizes proportional to `sqrt(q(1−q))`.
    K1,
    /// Logit scale normalized by `4·ln(n/δ)+24`; sizes proportional to `q(1−q)`.
    K2,
    /// Piecewise-log scale normalized by `4·ln(n/δ)+21`; sizes proportional
    /// to `min(q, 1−q)`.
    K3,
    /// `k2` without the sample-count normalizer.
    K2Unnormalized,
    /// `k3` without the sample-count normalizer.
    K3Unnormalized,
}

impl ScaleKind {
    /// All supported kinds, in wire-tag order.
    pub const ALL: [ScaleKind; 6] = [
        ScaleKind::K0,
        ScaleKind::K1,
        ScaleKind::K2,
        ScaleKind::K3,
        ScaleKind::K2Unnormalized,
        ScaleKind::K3Unnormalized,
    ];

    /// Short lowercase name, as accepted on the command line.
    pub fn name(self) -> &'static str {
        match self {
            ScaleKind::K0 => "k0",
            ScaleKind::K1 => "k1",
            ScaleKind::K2 => "k2",
            ScaleKind::K3 => "k3",
            ScaleKind::K2Unnormalized => "k2u",
            ScaleKind::K3Unnormalized => "k3u",
        }
    }

    /// Maps a quantile to its notional index.
    ///
    /// `n` is the total sample weight; it only matters for the normalized
    /// `k2`/`k3` variants and is clamped to at least 1. The `k2`/`k3`
    /// families return `−∞` at `q = 0` and `+∞` at `q = 1`, which signals
    /// that a boundary cluster may never absorb a second sample.
    pub fn k(self, q: f64, delta: f64, n: f64) -> Result<f64> {
        check_delta(delta)?;
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::QuantileOutOfRange(q));
        }
        Ok(self.k_unchecked(q, delta, n))
    }

    /// Maps an index back to a quantile, the inverse of [`ScaleKind::k`].
    ///
    /// `k` is clamped to the range actually reachable by the forward map,
    /// so the result always lies in `[0, 1]`.
    pub fn k_inverse(self, k: f64, delta: f64, n: f64) -> Result<f64> {
        check_delta(delta)?;
        Ok(self.k_inverse_unchecked(k, delta, n))
    }

    /// Largest weight a cluster whose left edge sits at `q_left` may hold
    /// while keeping its k-size at most 1. Never less than 1: a single
    /// sample is always admissible.
    pub fn max_cluster_weight(self, q_left: f64, delta: f64, n: f64) -> Result<f64> {
        check_delta(delta)?;
        if !(0.0..=1.0).contains(&q_left) {
            return Err(Error::QuantileOutOfRange(q_left));
        }
        let k_left = self.k_unchecked(q_left, delta, n);
        let q_right = self.k_inverse_unchecked(k_left + 1.0, delta, n);
        Ok((n * (q_right - q_left)).max(1.0))
    }

    /// Normalizer `Z` in `k(q) = (δ/Z)·f(q)`. Unity except for the
    /// normalized `k2`/`k3` variants, where the denominator is clamped to
    /// at least 1 so tiny digests (n < δ) keep a finite, monotone map.
    fn normalizer(self, delta: f64, n: f64) -> f64 {
        let n = n.max(1.0);
        match self {
            ScaleKind::K2 => (4.0 * (n / delta).ln() + 24.0).max(1.0),
            ScaleKind::K3 => (4.0 * (n / delta).ln() + 21.0).max(1.0),
            _ => 1.0,
        }
    }

    pub(crate) fn k_unchecked(self, q: f64, delta: f64, n: f64) -> f64 {
        match self {
            ScaleKind::K0 => delta / 2.0 * q,
            ScaleKind::K1 => {
                delta / (2.0 * std::f64::consts::PI) * (2.0 * q - 1.0).clamp(-1.0, 1.0).asin()
            }
            ScaleKind::K2 | ScaleKind::K2Unnormalized => {
                // ln(q/(1-q)) hits -inf at 0 and +inf at 1, as intended.
                delta / self.normalizer(delta, n) * (q / (1.0 - q)).ln()
            }
            ScaleKind::K3 | ScaleKind::K3Unnormalized => {
                let y = if q <= 0.5 {
                    (2.0 * q).ln()
                } else {
                    -(2.0 * (1.0 - q)).ln()
                };
                delta / self.normalizer(delta, n) * y
            }
        }
    }

    pub(crate) fn k_inverse_unchecked(self, k: f64, delta: f64, n: f64) -> f64 {
        match self {
            ScaleKind::K0 => (2.0 * k / delta).clamp(0.0, 1.0),
            ScaleKind::K1 => {
                let k = k.clamp(-delta / 4.0, delta / 4.0);
                ((2.0 * std::f64::consts::PI * k / delta).sin() + 1.0) / 2.0
            }
            ScaleKind::K2 | ScaleKind::K2Unnormalized => {
                if k == f64::INFINITY {
                    1.0
                } else if k == f64::NEG_INFINITY {
                    0.0
                } else {
                    let z = self.normalizer(delta, n);
                    (1.0 / (1.0 + (-k * z / delta).exp())).clamp(0.0, 1.0)
                }
            }
            ScaleKind::K3 | ScaleKind::K3Unnormalized => {
                if k == f64::INFINITY {
                    1.0
                } else if k == f64::NEG_INFINITY {
                    0.0
                } else {
                    let z = self.normalizer(delta, n);
                    if k <= 0.0 {
                        ((k * z / delta).exp() / 2.0).clamp(0.0, 1.0)
                    } else {
                        (1.0 - (-k * z / delta).exp() / 2.0).clamp(0.0, 1.0)
                    }
                }
            }
        }
    }
}

impl std::fmt::Display for ScaleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ScaleKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "k0" => Ok(ScaleKind::K0),
            "k1" => Ok(ScaleKind::K1),
            "k2" => Ok(ScaleKind::K2),
            "k3" => Ok(ScaleKind::K3),
            "k2u" => Ok(ScaleKind::K2Unnormalized),
            "k3u" => Ok(ScaleKind::K3Unnormalized),
            other => Err(format!(
                "unknown scale function {other:?}, expected one of k0, k1, k2, k3, k2u, k3u"
            )),
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidDelta(delta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KINDS: [ScaleKind; 6] = ScaleKind::ALL;

    /// Independent route for the inverse: bisection on the forward map.
    fn invert_by_bisection(kind: ScaleKind, target: f64, delta: f64, n: f64) -> f64 {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = (lo + hi) / 2.0;
            if kind.k_unchecked(mid, delta, n) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo + hi) / 2.0
    }

    #[test]
    fn forward_examples() {
        assert_eq!(ScaleKind::K0.k(1.0, 100.0, 1.0).unwrap(), 50.0);
        assert!((ScaleKind::K1.k(0.0, 100.0, 1.0).unwrap() + 25.0).abs() < 1e-12);
        assert_eq!(ScaleKind::K1.k(0.5, 10.0, 1.0).unwrap(), 0.0);
        assert_eq!(ScaleKind::K2.k(0.5, 100.0, 1e6).unwrap(), 0.0);
    }

    #[test]
    fn forward_boundaries_diverge_for_k2_k3_families() {
        for kind in [
            ScaleKind::K2,
            ScaleKind::K3,
            ScaleKind::K2Unnormalized,
            ScaleKind::K3Unnormalized,
        ] {
            assert_eq!(kind.k(0.0, 100.0, 1e6).unwrap(), f64::NEG_INFINITY);
            assert_eq!(kind.k(1.0, 100.0, 1e6).unwrap(), f64::INFINITY);
        }
    }

    #[test]
    fn forward_domain_errors() {
        assert!(matches!(
            ScaleKind::K1.k(-0.1, 100.0, 1.0),
            Err(Error::QuantileOutOfRange(_))
        ));
        assert!(matches!(
            ScaleKind::K1.k(1.1, 100.0, 1.0),
            Err(Error::QuantileOutOfRange(_))
        ));
        assert!(matches!(
            ScaleKind::K1.k(0.5, 0.0, 1.0),
            Err(Error::InvalidDelta(_))
        ));
        assert!(matches!(
            ScaleKind::K1.k(0.5, -3.0, 1.0),
            Err(Error::InvalidDelta(_))
        ));
        assert!(matches!(
            ScaleKind::K0.k_inverse(1.0, f64::NAN, 1.0),
            Err(Error::InvalidDelta(_))
        ));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(ScaleKind::K1.k_inverse(25.0, 100.0, 1.0).unwrap(), 1.0);
        assert!((ScaleKind::K0.k_inverse(12.5, 100.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        // clamped beyond the reachable range
        assert_eq!(ScaleKind::K1.k_inverse(1e9, 100.0, 1.0).unwrap(), 1.0);
        assert_eq!(ScaleKind::K0.k_inverse(-5.0, 100.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn inverse_round_trip() {
        for kind in KINDS {
            for &delta in &[10.0, 100.0, 316.0, 1000.0] {
                for &n in &[1.0, 100.0, 1e6, 1e8] {
                    for &q in &[0.001, 0.3, 0.5, 0.9, 0.999] {
                        let k = kind.k(q, delta, n).unwrap();
                        let back = kind.k_inverse(k, delta, n).unwrap();
                        assert!(
                            (back - q).abs() < 1e-9,
                            "{kind} δ={delta} n={n} q={q} -> k={k} -> {back}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn inverse_matches_bisection() {
        for kind in KINDS {
            for &q0 in &[0.01, 0.2, 0.5, 0.8, 0.95] {
                let (delta, n) = (100.0, 1e6);
                let k = kind.k_unchecked(q0, delta, n);
                let closed = kind.k_inverse(k + 1.0, delta, n).unwrap();
                let numeric = invert_by_bisection(kind, k + 1.0, delta, n);
                assert!(
                    (closed - numeric).abs() < 1e-12,
                    "{kind}: closed-form {closed} vs bisection {numeric}"
                );
            }
        }
    }

    #[test]
    fn monotone_non_decreasing() {
        for kind in KINDS {
            let mut prev = kind.k(0.0, 100.0, 1e6).unwrap();
            for i in 1..=1000 {
                let q = i as f64 / 1000.0;
                let k = kind.k(q, 100.0, 1e6).unwrap();
                assert!(k >= prev, "{kind} not monotone at q={q}");
                if i > 1 && i < 1000 {
                    assert!(k > prev, "{kind} not strictly increasing at q={q}");
                }
                prev = k;
            }
        }
    }

    #[test]
    fn k1_spans_exactly_quarter_delta() {
        for &delta in &[10.0, 100.0, 777.0] {
            assert!((ScaleKind::K1.k(0.0, delta, 1.0).unwrap() + delta / 4.0).abs() < 1e-9);
            assert!((ScaleKind::K1.k(1.0, delta, 1.0).unwrap() - delta / 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn antisymmetric_about_median() {
        for kind in [
            ScaleKind::K1,
            ScaleKind::K2,
            ScaleKind::K3,
            ScaleKind::K2Unnormalized,
            ScaleKind::K3Unnormalized,
        ] {
            for i in 0..=100 {
                let q = i as f64 / 100.0;
                let a = kind.k(q, 100.0, 1e6).unwrap();
                let b = kind.k(1.0 - q, 100.0, 1e6).unwrap();
                if a.is_infinite() {
                    assert_eq!(a, -b);
                } else {
                    assert!((a + b).abs() < 1e-9, "{kind} q={q}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn max_cluster_weight_examples() {
        let w = ScaleKind::K0.max_cluster_weight(0.0, 100.0, 1e6).unwrap();
        assert!((w - 20_000.0).abs() < 1e-6);

        // Closed form frozen from the inverse, cross-checked against
        // bisection on the forward map.
        let w = ScaleKind::K1.max_cluster_weight(0.0, 100.0, 1e6).unwrap();
        assert!((w - 986.6357858642206).abs() < 1e-6, "{w}");
        let numeric = 1e6 * invert_by_bisection(ScaleKind::K1, -25.0 + 1.0, 100.0, 1e6);
        assert!((w - numeric).abs() < 1e-6, "{w} vs bisection {numeric}");

        // Boundary forces a singleton for k3.
        let w = ScaleKind::K3.max_cluster_weight(0.0, 100.0, 1e6).unwrap();
        assert_eq!(w, 1.0);
        // Same at the right edge.
        let w = ScaleKind::K2.max_cluster_weight(1.0, 100.0, 1e6).unwrap();
        assert_eq!(w, 1.0);
    }

    #[test]
    fn max_cluster_weight_never_below_one() {
        for kind in KINDS {
            for i in 0..=50 {
                let q = i as f64 / 50.0;
                let w = kind.max_cluster_weight(q, 100.0, 20.0).unwrap();
                assert!(w >= 1.0, "{kind} q={q} w={w}");
            }
        }
    }

    #[test]
    fn tail_cluster_size_scaling() {
        // The allowed relative cluster size tracks sqrt(q(1-q)) for k1,
        // q(1-q) for k2 and min(q, 1-q) for k3. Probe a geometric ladder of
        // q values in the regime where one k-unit is locally small (q well
        // above the first-bin width (π/δ)²) and check the ratio to the
        // reference shape stays within a constant factor while the absolute
        // size falls toward zero.
        let (delta, n) = (100.0, 1e8);
        type Shape = fn(f64) -> f64;
        let shapes: [(ScaleKind, Shape); 3] = [
            (ScaleKind::K1, |q| (q * (1.0 - q)).sqrt()),
            (ScaleKind::K2, |q| q * (1.0 - q)),
            (ScaleKind::K3, |q| q.min(1.0 - q)),
        ];
        for (kind, shape) in shapes {
            let mut ratios = Vec::new();
            let mut sizes = Vec::new();
            for &q in &[0.25, 0.05, 0.02, 0.01, 0.005] {
                let w = kind.max_cluster_weight(q, delta, n).unwrap();
                ratios.push(w / n / shape(q));
                sizes.push(w / n);
            }
            let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ratios.iter().cloned().fold(0.0_f64, f64::max);
            assert!(
                hi / lo < 2.0,
                "{kind}: tail scaling drifts: ratios {ratios:?}"
            );
            for pair in sizes.windows(2) {
                assert!(pair[1] < pair[0], "{kind}: sizes not shrinking: {sizes:?}");
            }
        }
    }

    #[test]
    fn union_split_cannot_overflow_both_sides() {
        // Two adjacent admissible spans (each k-size <= 1) with combined
        // k-size > 1: any alternative split point leaves at least one side
        // admissible. Randomized q partitions, all kinds.
        let mut state = 0x9E3779B97F4A7C15_u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let (delta, n) = (100.0, 1e6);
        for kind in KINDS {
            let mut tried = 0;
            while tried < 200 {
                let mut qs = [next(), next(), next()];
                qs.sort_by(f64::total_cmp);
                let [q0, q1, q2] = qs;
                let ks =
                    |a: f64, b: f64| kind.k_unchecked(b, delta, n) - kind.k_unchecked(a, delta, n);
                let (a, b) = (ks(q0, q1), ks(q1, q2));
                if !(a <= 1.0 && b <= 1.0 && a + b > 1.0) {
                    continue;
                }
                tried += 1;
                let split = q0 + (q2 - q0) * next();
                let (left, right) = (ks(q0, split), ks(split, q2));
                assert!(
                    left <= 1.0 + 1e-9 || right <= 1.0 + 1e-9,
                    "{kind}: both sides overflow for split {split} of [{q0}, {q2}]"
                );
            }
        }
    }

    #[test]
    fn parses_cli_names() {
        for kind in KINDS {
            assert_eq!(kind.name().parse::<ScaleKind>().unwrap(), kind);
        }
        assert!("k9".parse::<ScaleKind>().is_err());
    }
}
