use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Contiguous train / validation / test index ranges, in that time order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRanges {
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

impl SplitRanges {
    pub fn total(&self) -> usize {
        self.test.end
    }

    pub fn lengths(&self) -> (usize, usize, usize) {
        (self.train.len(), self.val.len(), self.test.len())
    }
}

/// Splits `n` points chronologically: train = ⌊f_train·n⌋, val = ⌊f_val·n⌋,
/// test = the remainder.
pub fn chronological_split(n: usize, train: f64, val: f64, test: f64) -> Result<SplitRanges> {
    if [train, val, test].iter().any(|f| !(*f > 0.0) || !f.is_finite()) {
        return Err(Error::config("split fractions must be positive"));
    }
    if (train + val + test - 1.0).abs() > 1e-9 {
        return Err(Error::config(format!(
            "split fractions sum to {}, expected 1",
            train + val + test
        )));
    }
    // The epsilon keeps exact products such as 0.7·100 from flooring to 69.
    let floor = |f: f64| (f * n as f64 + 1e-9).floor() as usize;
    let n_train = floor(train);
    let n_val = floor(val);
    Ok(SplitRanges {
        train: 0..n_train,
        val: n_train..n_train + n_val,
        test: n_train + n_val..n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_lengths() {
        assert_eq!(chronological_split(100, 0.7, 0.2, 0.1).unwrap().lengths(), (70, 20, 10));
        assert_eq!(chronological_split(105, 0.7, 0.2, 0.1).unwrap().lengths(), (73, 21, 11));
    }

    #[test]
    fn bad_fractions() {
        assert!(matches!(chronological_split(100, 0.7, 0.2, 0.2), Err(Error::Config(_))));
        assert!(chronological_split(100, 1.1, -0.2, 0.1).is_err());
    }

    #[test]
    fn ranges_are_contiguous_for_many_n() {
        for n in 0..2000 {
            let s = chronological_split(n, 0.7, 0.2, 0.1).unwrap();
            assert_eq!(s.train.start, 0);
            assert_eq!(s.train.end, s.val.start);
            assert_eq!(s.val.end, s.test.start);
            assert_eq!(s.test.end, n);
        }
    }
}
