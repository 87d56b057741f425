//! Streaming mean/variance with a deterministic merge order.

/// Running mean and sum of squared deviations for a vector of observables.
#[derive(Debug, Clone, PartialEq)]
pub struct VecAccumulator {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl VecAccumulator {
    pub fn new(len: usize) -> Self {
        VecAccumulator { count: 0, mean: vec![0.0; len], m2: vec![0.0; len] }
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn push(&mut self, sample: &[f64]) {
        assert_eq!(sample.len(), self.mean.len());
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), &x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(sample) {
            let delta = x - *m;
            *m += delta / n;
            *s += delta * (x - *m);
        }
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&mut self, other: &VecAccumulator) {
        assert_eq!(self.mean.len(), other.mean.len());
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        for i in 0..self.mean.len() {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * nb / n;
            self.m2[i] += other.m2[i] + delta * delta * na * nb / n;
        }
        self.count += other.count;
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Unbiased sample variance per component (zero for fewer than two samples).
    pub fn variance(&self) -> Vec<f64> {
        if self.count < 2 {
            return vec![0.0; self.mean.len()];
        }
        let d = (self.count - 1) as f64;
        self.m2.iter().map(|s| (s / d).max(0.0)).collect()
    }

    /// Standard error of the mean per component.
    pub fn std_error(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.variance().into_iter().map(|v| (v / n).sqrt()).collect()
    }
}

/// Merge accumulators pairwise in a fixed balanced tree. The tree shape only
/// depends on `parts.len()`, which keeps results bit-identical across worker
/// counts.
pub fn tree_merge(mut parts: Vec<VecAccumulator>, len: usize) -> VecAccumulator {
    if parts.is_empty() {
        return VecAccumulator::new(len);
    }
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                a.merge(&b);
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().unwrap()
}

/// Mean and standard error of a scalar sample.
pub fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let mut acc = VecAccumulator::new(1);
    for &s in samples {
        acc.push(&[s]);
    }
    (acc.mean()[0], acc.std_error()[0])
}

/// Median of a sample (average of the two central values for even length).
pub fn median(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}
