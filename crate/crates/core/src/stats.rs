//! Empirical distributions and goodness-of-fit metrics.

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;

/// Minimum number of samples a tail-slope fit needs inside its window.
pub const MIN_TAIL_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    sorted: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        EmpiricalDistribution { sorted: samples }
    }

    pub fn sorted_samples(&self) -> &[f64] {
        &self.sorted
    }

    pub fn count(&self) -> usize {
        self.sorted.len()
    }

    /// `F_n(x) = #{x_i ≤ x} / n`
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.count() as f64
    }

    /// Linear-interpolated quantile, `q ∈ [0, 1]`.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.count();
        assert!(n > 0, "quantile of an empty sample");
        let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let w = pos - lo as f64;
        self.sorted[lo] * (1.0 - w) + self.sorted[hi] * w
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }
}

/// Outcome of comparing a statistic to its acceptance threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GofReport {
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
    pub n_samples: usize,
    pub metadata: Value,
}

impl GofReport {
    pub fn new(statistic: f64, threshold: f64, n_samples: usize, metadata: Value) -> Self {
        GofReport {
            statistic,
            threshold,
            pass: statistic <= threshold,
            n_samples,
            metadata,
        }
    }
}

/// `sup_x |F_n(x) − F(x)|`, checked on both sides of every jump.
pub fn ks_distance(samples: &EmpiricalDistribution, cdf: impl Fn(f64) -> f64) -> f64 {
    let xs = samples.sorted_samples();
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let mut j = i;
        while j < xs.len() && xs[j] == xs[i] {
            j += 1;
        }
        let f = cdf(xs[i]);
        d = d.max((i as f64 / n - f).abs()).max((j as f64 / n - f).abs());
        i = j;
    }
    d
}

/// `sup_x |F_a(x) − F_b(x)|`
pub fn ks_two_sample(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> f64 {
    let (xa, xb) = (a.sorted_samples(), b.sorted_samples());
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// `e^{-t} t^j / j!` for `j = 0..=cutoff`.
pub fn poisson_pmf(t: f64, cutoff: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(cutoff + 1);
    let mut v = (-t).exp();
    for j in 0..=cutoff {
        p.push(v);
        v *= t / (j + 1) as f64;
    }
    p
}

/// Total variation distance between a count histogram (`counts[j]` = number
/// of replicas with value `j`) and Poisson(`t`), cells above `cutoff` lumped
/// into one tail cell whose empirical and reference masses are both charged.
pub fn tv_distance_poisson(counts: &[u64], t: f64, cutoff: usize) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 1.0;
    }
    let pmf = poisson_pmf(t, cutoff);
    let mut acc = NeumaierSum::new();
    let mut seen = 0u64;
    for (j, &p) in pmf.iter().enumerate() {
        let c = counts.get(j).copied().unwrap_or(0);
        seen += c;
        acc.add((c as f64 / total as f64 - p).abs());
    }
    let ref_tail = (1.0 - pmf.iter().sum::<f64>()).max(0.0);
    let emp_tail = (total - seen) as f64 / total as f64;
    (0.5 * (acc.value() + ref_tail + emp_tail)).min(1.0)
}

/// CDF of `N(0, σ²)`.
pub fn normal_cdf(x: f64, sigma2: f64) -> f64 {
    0.5 * libm::erfc(-x / (2.0 * sigma2).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleMoments {
    pub mean: f64,
    /// `central[j] = (1/n) Σ (x_i − mean)^j` for `j = 0..=k`.
    pub central: Vec<f64>,
}

impl SampleMoments {
    pub fn variance(&self) -> f64 {
        self.central[2]
    }
}

/// Mean and central moments up to order `up_to_k`, compensated.
pub fn sample_moments(samples: &[f64], up_to_k: usize) -> SampleMoments {
    assert!(!samples.is_empty(), "moments of an empty sample");
    let n = samples.len() as f64;
    let mean = samples.iter().copied().collect::<NeumaierSum>().value() / n;
    let mut sums = vec![NeumaierSum::new(); up_to_k + 1];
    for &x in samples {
        let d = x - mean;
        let mut p = 1.0;
        for s in sums.iter_mut() {
            s.add(p);
            p *= d;
        }
    }
    SampleMoments {
        mean,
        central: sums.iter().map(|s| s.value() / n).collect(),
    }
}

/// Pearson correlation of paired samples.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ma = sample_moments(a, 0).mean;
    let mb = sample_moments(b, 0).mean;
    let (mut sab, mut saa, mut sbb) = (NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new());
    for (&x, &y) in a.iter().zip(b) {
        sab.add((x - ma) * (y - mb));
        saa.add((x - ma) * (x - ma));
        sbb.add((y - mb) * (y - mb));
    }
    sab.value() / (saa.value() * sbb.value()).sqrt()
}

/// Least-squares slope of `log P(X > x)` against `log x` over samples in
/// `[lo, hi]`. The CCDF at the `j`-th order statistic uses the midpoint
/// plotting position `(n − j − ½)/n`.
pub fn hill_tail_slope(samples: &[f64], lo: f64, hi: f64) -> Result<f64> {
    let dist = EmpiricalDistribution::new(samples.to_vec());
    let xs = dist.sorted_samples();
    let n = xs.len() as f64;
    let start = xs.partition_point(|&v| v < lo);
    let end = xs.partition_point(|&v| v <= hi);
    let found = end.saturating_sub(start);
    if found < MIN_TAIL_SAMPLES {
        return Err(Error::InsufficientTail {
            found,
            needed: MIN_TAIL_SAMPLES,
        });
    }
    let points: Vec<(f64, f64)> = (start..end)
        .map(|j| (xs[j].ln(), ((n - j as f64 - 0.5) / n).ln()))
        .collect();
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(x: f64) -> f64 {
        x.clamp(0.0, 1.0)
    }

    #[test]
    fn ks_examples() {
        let e = EmpiricalDistribution::new(vec![0.75, 0.25]);
        assert!((ks_distance(&e, uniform) - 0.25).abs() < 1e-15);
        let e = EmpiricalDistribution::new(vec![0.5]);
        assert_eq!(ks_distance(&e, uniform), 0.5);
        // evenly spaced midpoints attain the minimum 1/(2n)
        let e = EmpiricalDistribution::new((0..100).map(|i| (i as f64 + 0.5) / 100.0).collect());
        assert!((ks_distance(&e, uniform) - 0.005).abs() < 1e-12);
    }

    #[test]
    fn ks_handles_ties() {
        let e = EmpiricalDistribution::new(vec![0.5, 0.5, 0.5, 0.5]);
        assert_eq!(ks_distance(&e, uniform), 0.5);
    }

    #[test]
    fn two_sample_examples() {
        let a = EmpiricalDistribution::new(vec![1.0, 2.0]);
        let b = EmpiricalDistribution::new(vec![1.5, 2.5]);
        assert_eq!(ks_two_sample(&a, &b), 0.5);
        assert_eq!(ks_two_sample(&a, &a), 0.0);
        let c = EmpiricalDistribution::new(vec![10.0, 11.0, 12.0]);
        assert_eq!(ks_two_sample(&a, &c), 1.0);
        assert_eq!(ks_two_sample(&c, &a), 1.0);
    }

    #[test]
    fn tv_examples() {
        let t = 1.0;
        let e = (-1.0f64).exp();
        assert!((tv_distance_poisson(&[1], t, 10) - (1.0 - e)).abs() < 1e-12);
        assert!((poisson_pmf(1.0, 3)[0] - 0.367_879_441_171_442_3).abs() < 1e-15);
        // histogram proportional to the pmf, up to rounding
        let scale = 1e12;
        let counts: Vec<u64> = poisson_pmf(2.0, 40).iter().map(|p| (p * scale).round() as u64).collect();
        assert!(tv_distance_poisson(&counts, 2.0, 40) < 1e-10);
    }

    #[test]
    fn tv_charges_mass_beyond_cutoff() {
        let mut counts = vec![0u64; 50];
        counts[49] = 1;
        assert!((tv_distance_poisson(&counts, 1.0, 10) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normal_cdf_values() {
        assert_eq!(normal_cdf(0.0, 3.0), 0.5);
        assert!((normal_cdf(1.959_963_984_540_054, 1.0) - 0.975).abs() < 1e-12);
        assert!((normal_cdf(2.0, 4.0) - normal_cdf(1.0, 1.0)).abs() < 1e-15);
    }

    #[test]
    fn moment_examples() {
        let m = sample_moments(&[-1.0, 1.0], 4);
        assert_eq!(m.mean, 0.0);
        assert_eq!(m.central[2], 1.0);
        assert_eq!(m.central[3], 0.0);
        assert_eq!(m.central[4], 1.0);
    }

    #[test]
    fn tail_slope_of_pareto_grid() {
        let a = 8.0 / 3.0;
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|i| (1.0 - (i as f64 + 0.5) / n as f64).powf(-1.0 / a)).collect();
        let s = hill_tail_slope(&xs, 1.5, 15.0).unwrap();
        assert!((s + a).abs() < 0.01, "slope {s}");
    }

    #[test]
    fn tail_slope_needs_samples() {
        let xs = vec![2.0; 50];
        assert!(matches!(
            hill_tail_slope(&xs, 1.0, 10.0),
            Err(Error::InsufficientTail { found: 50, .. })
        ));
    }

    #[test]
    fn quantiles() {
        let e = EmpiricalDistribution::new(vec![3.0, 1.0, 2.0, 4.0]);
        assert_eq!(e.median(), 2.5);
        assert_eq!(e.quantile(0.0), 1.0);
        assert_eq!(e.quantile(1.0), 4.0);
        assert_eq!(e.cdf(2.0), 0.5);
    }
}
