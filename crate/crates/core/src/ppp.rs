//! Poisson point processes on `[0, ∞)`, their trimmed versions, and the
//! reference law of the light-trimming distributional limit.
//!
//! Arrival times are cumulative sums of i.i.d. standard exponentials, so the
//! trimmed process `Λ^K` is simply the arrivals with index `> K`.

use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;

use crate::numeric::{NegPow, NeumaierSum};
use crate::rng::{stream, RandomSource, StreamPurpose};

/// Reference samples drawn per random stream; fixes the chunking so results
/// do not depend on the number of workers.
pub const REFERENCE_CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CenteringMode {
    /// `∫₁^R x^{-α} dx` for every `α`.
    Finite,
    /// As `Finite`, except `0` for `α > 1` where the sum converges without
    /// centering.
    Asymptotic,
}

/// `c_R = ∫₁^R x^{-α} dx`.
pub fn centering_c_r(alpha: f64, horizon: f64, mode: CenteringMode) -> f64 {
    if mode == CenteringMode::Asymptotic && alpha > 1.0 {
        return 0.0;
    }
    if horizon <= 1.0 {
        return 0.0;
    }
    if alpha == 1.0 {
        horizon.ln()
    } else {
        (horizon.powf(1.0 - alpha) - 1.0) / (1.0 - alpha)
    }
}

/// Arrivals of a unit-rate Poisson process below `horizon`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PppSample {
    arrivals: Vec<f64>,
    horizon: f64,
}

impl PppSample {
    /// Builds a sample from given sorted arrivals (all below `horizon`).
    pub fn from_arrivals(arrivals: Vec<f64>, horizon: f64) -> Self {
        debug_assert!(arrivals.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(arrivals.iter().all(|&x| x > 0.0 && x < horizon));
        PppSample { arrivals, horizon }
    }

    pub fn arrivals(&self) -> &[f64] {
        &self.arrivals
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `#(Λ ∩ [0, t))`
    pub fn count_below(&self, t: f64) -> usize {
        self.arrivals.partition_point(|&x| x < t)
    }

    /// `#(Λ^K ∩ [0, t))`, counted directly on the arrivals with index `> K`.
    pub fn trimmed_count_below(&self, k: usize, t: f64) -> usize {
        self.arrivals.iter().skip(k).take_while(|&&x| x < t).count()
    }
}

pub fn sample_ppp(horizon: f64, rng: &mut RandomSource) -> PppSample {
    let mut arrivals = Vec::new();
    let mut t = 0.0;
    loop {
        let e: f64 = Exp1.sample(rng);
        t += e;
        if t >= horizon {
            break;
        }
        arrivals.push(t);
    }
    PppSample { arrivals, horizon }
}

/// `Σ_{k > K, ξ_k < R} ξ_k^{-α} − c_R(α, R)` with the finite-horizon `c_R`.
pub fn trimmed_ppp_sum(sample: &PppSample, k: usize, alpha: f64, horizon: f64) -> f64 {
    let pow = NegPow::new(alpha);
    let sum: NeumaierSum = sample
        .arrivals
        .iter()
        .skip(k)
        .take_while(|&&x| x < horizon)
        .map(|&x| pow.eval(x))
        .collect();
    sum.value() - centering_c_r(alpha, horizon, CenteringMode::Finite)
}

/// `κ_k` of the centered sum of `x^{-α}` over `Λ ∩ [lo, hi)`:
/// `∫_lo^hi u^{-kα} du` for `k ≥ 2`, and `0` for `k = 1`.
pub fn cumulant(order: u32, alpha: f64, lo: f64, hi: f64) -> f64 {
    if order <= 1 {
        return 0.0;
    }
    let e = order as f64 * alpha;
    if e == 1.0 {
        hi.ln() - lo.ln()
    } else {
        (hi.powf(1.0 - e) - lo.powf(1.0 - e)) / (1.0 - e)
    }
}

/// Moments `m_0, …, m_n` from cumulants `κ_1, …, κ_n` via
/// `m_k = Σ_{j=1}^{k} C(k−1, j−1) κ_j m_{k−j}`. With `κ_1 = 0` these are
/// the central moments.
pub fn moments_from_cumulants(kappas: &[f64]) -> Vec<f64> {
    let n = kappas.len();
    let mut m = vec![0.0; n + 1];
    m[0] = 1.0;
    for k in 1..=n {
        let mut binom = 1.0; // C(k−1, j−1)
        let mut acc = 0.0;
        for j in 1..=k {
            acc += binom * kappas[j - 1] * m[k - j];
            binom = binom * (k - j) as f64 / j as f64;
        }
        m[k] = acc;
    }
    m
}

/// Leading pairing term `k!/((k/2)! 2^{k/2}) κ₂^{k/2}` of the `k`-th central
/// moment, for even `k`.
pub fn gaussian_pairing_term(k: u32, kappa2: f64) -> f64 {
    assert!(k % 2 == 0, "pairing term needs an even order");
    // (k−1)!! = k!/((k/2)! 2^{k/2})
    let double_factorial: f64 = (1..k).step_by(2).map(|v| v as f64).product();
    double_factorial * kappa2.powi(k as i32 / 2)
}

/// `c · (Σ_{x ∈ Λ^K ∩ [0,R)} x^{-α} − c_R)`, the horizon-`R` surrogate of
/// the light-trimming limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrimmedPppLaw {
    pub k: usize,
    pub alpha: f64,
    pub coupling: f64,
    pub centering: f64,
}

impl TrimmedPppLaw {
    pub fn new(k: usize, alpha: f64, coupling: f64, centering: f64) -> Self {
        TrimmedPppLaw {
            k,
            alpha,
            coupling,
            centering,
        }
    }

    /// Absolute moments of order `p` are finite iff `p < (K + 1)/α`.
    pub fn moment_is_finite(&self, p: f64) -> bool {
        p < (self.k as f64 + 1.0) / self.alpha
    }

    /// Tail exponent of `|Y|`: `P(|Y| > y) ≍ y^{-(K+1)/α}`.
    pub fn tail_exponent(&self) -> f64 {
        (self.k as f64 + 1.0) / self.alpha
    }

    /// One draw, generated on the fly without storing arrivals.
    pub fn sample_one(&self, horizon: f64, rng: &mut RandomSource) -> f64 {
        let pow = NegPow::new(self.alpha);
        let mut sum = NeumaierSum::new();
        let mut t = 0.0;
        let mut index = 0usize;
        loop {
            let e: f64 = Exp1.sample(rng);
            t += e;
            if t >= horizon {
                break;
            }
            index += 1;
            if index > self.k {
                sum.add(pow.eval(t));
            }
        }
        self.coupling * (sum.value() - self.centering)
    }
}

/// `n_samples` i.i.d. draws of the reference law at horizon `R`. Samples are
/// generated in fixed chunks with one stream per chunk, so the output
/// depends only on `seed`.
pub fn sample_reference_law(law: &TrimmedPppLaw, horizon: f64, n_samples: usize, seed: u64) -> Vec<f64> {
    let chunks = n_samples.div_ceil(REFERENCE_CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = stream(seed, StreamPurpose::Reference, c as u64);
            let len = REFERENCE_CHUNK.min(n_samples - c * REFERENCE_CHUNK);
            (0..len).map(move |_| law.sample_one(horizon, &mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

/// Untrimmed sum `Σ_{x ∈ Λ ∩ [lo, hi)} x^{-α}`, uncentered.
pub fn window_sum(alpha: f64, lo: f64, hi: f64, rng: &mut RandomSource) -> f64 {
    let pow = NegPow::new(alpha);
    let mut sum = NeumaierSum::new();
    let mut t = 0.0;
    loop {
        let e: f64 = Exp1.sample(rng);
        t += e;
        if t >= hi {
            break;
        }
        if t >= lo {
            sum.add(pow.eval(t));
        }
    }
    sum.value()
}
