//! Exact rank statistics over fully retained samples.
//!
//! Sort-based reference implementations of quantile, CDF and trimmed mean,
//! used as the error baseline for digest accuracy measurements. The mid-rank
//! convention places sorted sample `i` at quantile `(i + 0.5)/n`, matching
//! the digest's half-weight-on-each-side model, so a digest of all
//! singletons agrees with these references exactly.

use crate::error::{Error, Result};

/// A set of samples retained in full, sorted on construction.
#[derive(Debug, Clone)]
pub struct SampleSet {
    values: Vec<f64>,
}

impl SampleSet {
    /// Sorts and stores the samples. Rejects non-finite values.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        for &v in &values {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue(v));
            }
        }
        values.sort_by(f64::total_cmp);
        Ok(SampleSet { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mid-rank empirical quantile with linear interpolation between
    /// adjacent order statistics; `q = 0` gives the minimum and `q = 1` the
    /// maximum.
    pub fn exact_quantile(&self, q: f64) -> Result<f64> {
        if self.values.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::QuantileOutOfRange(q));
        }
        let n = self.values.len() as f64;
        let rank = q * n;
        if rank <= 0.5 {
            return Ok(self.values[0]);
        }
        if rank >= n - 0.5 {
            return Ok(*self.values.last().unwrap());
        }
        let i = (rank - 0.5).floor() as usize;
        let (r0, v0) = (i as f64 + 0.5, self.values[i]);
        let (r1, v1) = (i as f64 + 1.5, self.values[i + 1]);
        Ok(v0 + (v1 - v0) * ((rank - r0) / (r1 - r0)))
    }

    /// Mid-rank CDF: `(count_below + 0.5 · count_equal) / n`.
    pub fn exact_cdf(&self, x: f64) -> Result<f64> {
        if self.values.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        if x.is_nan() {
            return Err(Error::NanProbe);
        }
        let below = self.values.partition_point(|&v| v < x);
        let not_above = self.values.partition_point(|&v| v <= x);
        let equal = not_above - below;
        Ok((below as f64 + 0.5 * equal as f64) / self.values.len() as f64)
    }

    /// Mean of the samples whose rank span overlaps `[q_lo, q_hi]`, with
    /// fractional weight for the samples cut by a boundary. Sample `i`
    /// occupies the rank span `[i, i+1]` out of `n`.
    pub fn exact_trimmed_mean(&self, q_lo: f64, q_hi: f64) -> Result<f64> {
        if self.values.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        if !(0.0 <= q_lo && q_lo < q_hi && q_hi <= 1.0) {
            return Err(Error::InvalidTrimRange(q_lo, q_hi));
        }
        let n = self.values.len() as f64;
        let (r_lo, r_hi) = (q_lo * n, q_hi * n);
        let mut sum = 0.0;
        let mut weight = 0.0;
        for (i, &v) in self.values.iter().enumerate() {
            let (a, b) = (i as f64, i as f64 + 1.0);
            let overlap = (b.min(r_hi) - a.max(r_lo)).max(0.0);
            if overlap > 0.0 {
                sum += v * overlap;
                weight += overlap;
            }
        }
        Ok(sum / weight)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_examples() {
        let s = SampleSet::new(vec![5.0, 3.0, 1.0, 4.0, 2.0]).unwrap();
        assert_eq!(s.exact_quantile(0.5).unwrap(), 3.0);
        assert_eq!(s.exact_quantile(0.0).unwrap(), 1.0);
        assert_eq!(s.exact_quantile(1.0).unwrap(), 5.0);

        let s = SampleSet::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(s.exact_quantile(0.5).unwrap(), 1.5);
    }

    #[test]
    fn cdf_examples() {
        let s = SampleSet::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.exact_cdf(0.0).unwrap(), 0.0);
        assert_eq!(s.exact_cdf(2.0).unwrap(), 0.5);
        assert_eq!(s.exact_cdf(9.0).unwrap(), 1.0);

        let s = SampleSet::new(vec![1.0; 4]).unwrap();
        assert_eq!(s.exact_cdf(1.0).unwrap(), 0.5);
    }

    #[test]
    fn trimmed_mean_examples() {
        let s = SampleSet::new(vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(s.exact_trimmed_mean(0.0, 1.0).unwrap(), 3.0);
        assert_eq!(s.exact_trimmed_mean(0.2, 0.8).unwrap(), 3.0);

        let s = SampleSet::new(vec![0.0, 100.0]).unwrap();
        assert_eq!(s.exact_trimmed_mean(0.0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn cdf_of_quantile_is_identity_at_knots() {
        let s = SampleSet::new(vec![2.0, 7.0, 9.0, 15.0, 21.0, 40.0]).unwrap();
        let n = s.len() as f64;
        for i in 0..s.len() {
            let q = (i as f64 + 0.5) / n;
            let v = s.exact_quantile(q).unwrap();
            assert!((s.exact_cdf(v).unwrap() - q).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SampleSet::new(vec![1.0, f64::NAN]).is_err());
        let empty = SampleSet::new(vec![]).unwrap();
        assert!(matches!(
            empty.exact_quantile(0.5),
            Err(Error::EmptySampleSet)
        ));
        assert!(matches!(empty.exact_cdf(0.5), Err(Error::EmptySampleSet)));
        let s = SampleSet::new(vec![1.0]).unwrap();
        assert!(s.exact_cdf(f64::NAN).is_err());
        assert!(s.exact_trimmed_mean(0.5, 0.5).is_err());
        assert!(s.exact_trimmed_mean(0.8, 0.2).is_err());
    }
}
