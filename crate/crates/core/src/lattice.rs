/// Values on a contiguous run of lattice sites `start, start + 1, ...`.
/// Sites outside the run read as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteField {
    pub start: i64,
    pub values: Vec<f64>,
}

impl SiteField {
    pub fn new(start: i64, values: Vec<f64>) -> Self {
        Self { start, values }
    }

    pub fn zeros(lo: i64, hi: i64) -> Self {
        Self::from_fn(lo, hi, |_| 0.0)
    }

    /// Field on `[lo, hi]` (inclusive) filled by `f(site)`.
    pub fn from_fn<F: FnMut(i64) -> f64>(lo: i64, hi: i64, mut f: F) -> Self {
        let values = (lo..=hi).map(&mut f).collect();
        Self { start: lo, values }
    }

    pub fn indicator(site: i64, lo: i64, hi: i64) -> Self {
        Self::from_fn(lo, hi, |i| if i == site { 1.0 } else { 0.0 })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Last site of the run.
    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64 - 1
    }

    #[inline]
    pub fn get(&self, site: i64) -> f64 {
        let k = site - self.start;
        if k < 0 || k >= self.values.len() as i64 {
            0.0
        } else {
            self.values[k as usize]
        }
    }

    pub fn sites(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(k, &v)| (self.start + k as i64, v))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Restriction to `[lo, hi]`, zero-padded where the run does not reach.
    pub fn restrict(&self, lo: i64, hi: i64) -> Self {
        Self::from_fn(lo, hi, |i| self.get(i))
    }

    /// The same values moved `by` sites to the right.
    pub fn shifted(&self, by: i64) -> Self {
        Self {
            start: self.start + by,
            values: self.values.clone(),
        }
    }
}

#[inline]
pub(crate) fn is_even(site: i64) -> bool {
    site.rem_euclid(2) == 0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn out_of_window_reads_zero() {
        let f = SiteField::from_fn(-2, 2, |i| i as f64);
        assert_eq!(f.get(-3), 0.0);
        assert_eq!(f.get(3), 0.0);
        assert_eq!(f.get(-2), -2.0);
        assert_eq!(f.end(), 2);
        assert_eq!(f.restrict(1, 4).values, vec![1.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn parity_of_negative_sites() {
        assert!(is_even(-2));
        assert!(!is_even(-1));
        assert!(is_even(0));
    }
}
