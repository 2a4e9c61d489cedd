//! Small numeric helpers shared by the delay evaluators.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

/// `floor(x)` as a count, clamped at zero.
///
/// Quotients such as `50 m / (50/3 m/s)` land a few ulps below the integer
/// they represent; a relative slack of 1e-9 absorbs that rounding.
pub fn floor_count(x: f64) -> usize {
    if !(x > 0.0) {
        return 0;
    }
    let slack = 1e-9 * x.max(1.0);
    (x + slack).floor() as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut values = vec![1e16];
        values.extend(std::iter::repeat_n(1.0, 1000));
        values.push(-1e16);
        assert_eq!(compensated_sum(values), 1000.0);
    }

    #[test]
    fn floor_count_absorbs_rounding() {
        assert_eq!(floor_count(2.9999999999999996), 3);
        assert_eq!(floor_count(1.6), 1);
        assert_eq!(floor_count(0.0), 0);
        assert_eq!(floor_count(-0.5), 0);
        assert_eq!(floor_count(f64::NAN), 0);
    }
}
