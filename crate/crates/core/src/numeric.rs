//! Numerical building blocks: compensated summation, fast negative powers,
//! tanh-sinh quadrature and bisection.

use crate::error::{Error, Result};

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub const fn new() -> Self {
        NeumaierSum {
            sum: 0.0,
            compensation: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl Extend<f64> for NeumaierSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        acc.extend(iter);
        acc
    }
}

/// Compensated sum of a slice.
pub fn compensated_sum(values: &[f64]) -> f64 {
    values.iter().copied().collect::<NeumaierSum>().value()
}

/// `x ↦ x^{-exponent}` with fast paths for the exponents used by the
/// built-in experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NegPow {
    Half,
    ThreeQuarters,
    One,
    ThreeHalves,
    Two,
    General(f64),
}

impl NegPow {
    pub fn new(exponent: f64) -> Self {
        match exponent {
            e if e == 0.5 => NegPow::Half,
            e if e == 0.75 => NegPow::ThreeQuarters,
            e if e == 1.0 => NegPow::One,
            e if e == 1.5 => NegPow::ThreeHalves,
            e if e == 2.0 => NegPow::Two,
            e => NegPow::General(e),
        }
    }

    pub fn exponent(&self) -> f64 {
        match *self {
            NegPow::Half => 0.5,
            NegPow::ThreeQuarters => 0.75,
            NegPow::One => 1.0,
            NegPow::ThreeHalves => 1.5,
            NegPow::Two => 2.0,
            NegPow::General(e) => e,
        }
    }

    #[inline(always)]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            NegPow::Half => 1.0 / x.sqrt(),
            NegPow::ThreeQuarters => {
                let s = x.sqrt();
                1.0 / (s * s.sqrt())
            }
            NegPow::One => 1.0 / x,
            NegPow::ThreeHalves => 1.0 / (x * x.sqrt()),
            NegPow::Two => 1.0 / (x * x),
            NegPow::General(e) => x.powf(-e),
        }
    }
}

/// Result of a quadrature: value and error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

const TANH_SINH_MAX_LEVEL: usize = 12;
const TANH_SINH_T_MAX: f64 = 4.0;

/// Tanh-sinh quadrature of `f` over `[a, b]`.
///
/// The integrand is never evaluated at the endpoints, so integrable endpoint
/// singularities are fine. Interior discontinuities should be split off by
/// the caller. Fails with `QuadratureFailure` if successive levels do not
/// agree to `rel_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
        });
    }
    if b < a {
        let q = integrate(f, b, a, rel_tol)?;
        return Ok(Quadrature {
            value: -q.value,
            error: q.error,
        });
    }
    let half = 0.5 * (b - a);
    let half_pi = std::f64::consts::FRAC_PI_2;

    // Contribution of the abscissa pair at parameter t > 0 (or the centre at t = 0).
    let node = |t: f64| -> f64 {
        let u = half_pi * t.sinh();
        let cosh_u = u.cosh();
        let weight = half_pi * t.cosh() / (cosh_u * cosh_u);
        if t == 0.0 {
            return weight * f(a + half);
        }
        // distance of the node from the nearer endpoint, scaled by `half`
        let delta = 2.0 / (1.0 + (2.0 * u).exp());
        let offset = half * delta;
        if offset <= 0.0 || weight == 0.0 {
            return 0.0;
        }
        weight * (f(a + offset) + f(b - offset))
    };

    let mut step = 1.0;
    let mut total = node(0.0);
    let mut k = 1;
    while k as f64 * step <= TANH_SINH_T_MAX {
        total += node(k as f64 * step);
        k += 1;
    }
    let mut estimate = half * step * total;
    let mut error = f64::INFINITY;
    for level in 1..=TANH_SINH_MAX_LEVEL {
        step *= 0.5;
        let mut odd = 0.0;
        let mut k = 1;
        while k as f64 * step <= TANH_SINH_T_MAX {
            odd += node(k as f64 * step);
            k += 2;
        }
        total += odd;
        let next = half * step * total;
        error = (next - estimate).abs();
        estimate = next;
        if !estimate.is_finite() {
            break;
        }
        if level >= 3 && error <= rel_tol * estimate.abs().max(f64::MIN_POSITIVE) {
            return Ok(Quadrature {
                value: estimate,
                error,
            });
        }
    }
    Err(Error::QuadratureFailure {
        tolerance: rel_tol,
        estimate,
        error,
    })
}

/// Integrates over consecutive pieces `[p_0, p_1], [p_1, p_2], …`.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, breakpoints: &[f64], rel_tol: f64) -> Result<Quadrature> {
    let mut value = NeumaierSum::new();
    let mut error = 0.0;
    for w in breakpoints.windows(2) {
        let q = integrate(&f, w[0], w[1], rel_tol)?;
        value.add(q.value);
        error += q.error;
    }
    Ok(Quadrature {
        value: value.value(),
        error,
    })
}

/// Bisection for a root of `f` on `[lo, hi]`; requires a sign change.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::RootFindFailure { lo, hi });
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= rel_tol * mid.abs() || mid == lo || mid == hi {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Maximal subintervals of `[lo, hi]` on which `h > 0`, located by scanning
/// `grid` equal steps and refining each sign change by bisection.
pub fn positive_intervals<F: Fn(f64) -> f64>(h: F, lo: f64, hi: f64, grid: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    if hi <= lo {
        return out;
    }
    let dx = (hi - lo) / grid as f64;
    let mut prev_x = lo;
    let mut prev_pos = h(lo) > 0.0;
    let mut start = if prev_pos { Some(lo) } else { None };
    for i in 1..=grid {
        let x = if i == grid { hi } else { lo + dx * i as f64 };
        let pos = h(x) > 0.0;
        if pos != prev_pos {
            let edge = bisect(&h, prev_x, x, 1e-15).unwrap_or(0.5 * (prev_x + x));
            if pos {
                start = Some(edge);
            } else if let Some(s) = start.take() {
                out.push((s, edge));
            }
        }
        prev_x = x;
        prev_pos = pos;
    }
    if let Some(s) = start {
        out.push((s, hi));
    }
    out
}
