//! Observables with a power singularity `f(x) = g(x) · d(x, x*)^{-β}`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynsys::{Geometry, Point, SystemId, SystemModel};
use crate::error::{Error, Result};
use crate::numeric::{integrate, integrate_pieces, positive_intervals, NegPow, NeumaierSum};

/// `frac((√5 − 1)/2)`.
pub const GOLDEN_SITE: f64 = 0.618_033_988_749_894_9;
/// `frac(√2)`, second coordinate of the default cat-map site.
pub const SQRT2_SITE: f64 = 0.414_213_562_373_095_1;

const QUAD_TOL: f64 = 1e-10;
const LEVEL_SET_GRID: usize = 256;

/// Volume of the `d`-dimensional unit ball.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => PI,
        _ => PI.powf(d as f64 / 2.0) / libm::tgamma(d as f64 / 2.0 + 1.0),
    }
}

/// The smooth factor `g` of the observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// `g ≡ 1`; value order and distance order agree.
    Radial,
    /// `g(x) = 1 + cos(2π x₁)/2`, which has non-zero slope at generic sites
    /// and so separates "largest values" from "closest points".
    Oscillatory,
    /// Continued-fraction digit `⌊1/x⌋` (Gauss map only).
    Digit,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "radial" => Ok(Profile::Radial),
            "oscillatory" => Ok(Profile::Oscillatory),
            "digit" => Ok(Profile::Digit),
            other => Err(Error::config("profile", format!("unknown profile `{other}`"))),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Radial => "radial",
            Profile::Oscillatory => "oscillatory",
            Profile::Digit => "digit",
        })
    }
}

/// Fraction of the tangent directions that see the singularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aperture {
    Full,
    /// One-sided singularity, e.g. at an endpoint of `[0,1)`.
    Half,
}

impl Aperture {
    pub fn factor(&self) -> f64 {
        match self {
            Aperture::Full => 1.0,
            Aperture::Half => 0.5,
        }
    }
}

impl FromStr for Aperture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Aperture::Full),
            "half" => Ok(Aperture::Half),
            other => Err(Error::config("aperture", format!("unknown aperture `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observable {
    profile: Profile,
    site: Point,
    beta: f64,
    dimension: usize,
    aperture: Aperture,
    scale: f64,
    pow: NegPow,
}

/// `μ(f > t) ~ tail_constant · t^{-1/α}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailLaw {
    pub alpha: f64,
    pub tail_constant: f64,
}

impl Observable {
    /// Power-singular observable of order `beta` at `site`.
    pub fn power(system: &SystemModel, site: Point, beta: f64, profile: Profile, aperture: Aperture) -> Result<Self> {
        if profile == Profile::Digit {
            return Observable::digit(system);
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::config("beta", format!("order must be positive, got {beta}")));
        }
        let d = system.dimension();
        if system.geometry() == Geometry::Interval {
            let endpoint = site.x() == 0.0;
            if endpoint != (aperture == Aperture::Half) {
                return Err(Error::config(
                    "aperture",
                    "on the interval, a half aperture is required exactly when the site is the endpoint 0",
                ));
            }
        } else if aperture == Aperture::Half {
            return Err(Error::config("aperture", "half aperture only applies to interval systems"));
        }
        system.validate_site(site)?;
        Ok(Observable {
            profile,
            site,
            beta,
            dimension: d,
            aperture,
            scale: 1.0,
            pow: NegPow::new(beta),
        })
    }

    /// The continued-fraction digit `x ↦ ⌊1/x⌋` over the Gauss map: a
    /// one-sided order-1 singularity at 0 with unit residue.
    pub fn digit(system: &SystemModel) -> Result<Self> {
        if system.id() != SystemId::GaussMap {
            return Err(Error::config("profile", "the digit observable requires the Gauss map"));
        }
        Ok(Observable {
            profile: Profile::Digit,
            site: Point::one(0.0),
            beta: 1.0,
            dimension: 1,
            aperture: Aperture::Half,
            scale: 1.0,
            pow: NegPow::One,
        })
    }

    /// Multiplies the residue profile (and hence `f`) by `lambda`.
    pub fn scaled(mut self, lambda: f64) -> Self {
        self.scale *= lambda;
        self
    }

    /// The built-in default site for a system.
    pub fn default_site(system: &SystemModel) -> Point {
        match system.id() {
            SystemId::IidUniform | SystemId::GaussMap => Point::one(0.0),
            SystemId::DoublingBitstream => Point::one(GOLDEN_SITE),
            SystemId::CatMapFixed128 => Point::two(GOLDEN_SITE, SQRT2_SITE),
        }
    }

    pub fn default_aperture(system: &SystemModel, site: Point) -> Aperture {
        if system.geometry() == Geometry::Interval && site.x() == 0.0 {
            Aperture::Half
        } else {
            Aperture::Full
        }
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn site(&self) -> Point {
        self.site
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn alpha(&self) -> f64 {
        self.beta / self.dimension as f64
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn aperture(&self) -> Aperture {
        self.aperture
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `g(x)`.
    #[inline(always)]
    pub fn residue_profile(&self, x: Point) -> f64 {
        match self.profile {
            Profile::Radial | Profile::Digit => self.scale,
            Profile::Oscillatory => self.scale * (1.0 + 0.5 * (TAU * x.x()).cos()),
        }
    }

    /// `Res_{x*}(f) = g(x*)`.
    pub fn residue(&self) -> f64 {
        self.residue_profile(self.site)
    }

    /// Bounds of `g` over the whole space.
    pub fn profile_range(&self) -> (f64, f64) {
        match self.profile {
            Profile::Radial | Profile::Digit => (self.scale, self.scale),
            Profile::Oscillatory => (0.5 * self.scale, 1.5 * self.scale),
        }
    }

    /// A constant `C₀` with `f(x) ≤ C₀ d(x, x*)^{-β}` everywhere.
    pub fn bound_c0(&self) -> f64 {
        self.profile_range().1
    }

    /// Lipschitz constant of `g`, so `|g(x) − Res| ≤ L·d(x, x*)`.
    pub fn residue_lipschitz_bound(&self) -> f64 {
        match self.profile {
            Profile::Radial | Profile::Digit => 0.0,
            Profile::Oscillatory => PI * self.scale,
        }
    }

    /// `f` at a point already known to lie at distance `dist > 0` from the site.
    #[inline(always)]
    pub fn value_at(&self, x: Point, dist: f64) -> f64 {
        match self.profile {
            Profile::Radial => self.scale * self.pow.eval(dist),
            Profile::Oscillatory => self.residue_profile(x) * self.pow.eval(dist),
            Profile::Digit => self.scale * (1.0 / x.x()).floor(),
        }
    }

    pub fn distance(&self, system: &SystemModel, x: Point) -> f64 {
        system.metric(x, self.site)
    }

    pub fn evaluate(&self, system: &SystemModel, x: Point) -> Result<f64> {
        let dist = self.distance(system, x);
        if dist == 0.0 {
            return Err(Error::DegenerateHit { step: 0 });
        }
        Ok(self.value_at(x, dist))
    }

    pub fn tail_law(&self, system: &SystemModel) -> TailLaw {
        let alpha = self.alpha();
        TailLaw {
            alpha,
            tail_constant: self.aperture.factor()
                * unit_ball_volume(self.dimension)
                * system.density_at(self.site)
                * self.residue().powf(1.0 / alpha),
        }
    }

    /// `μ(f ≥ t)`. Equal to `μ(f > t)` for the continuous profiles; for the
    /// integer-valued digit observable it is `μ(⌊1/x⌋ ≥ ⌈t⌉)`.
    pub fn tail_measure(&self, system: &SystemModel, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::InvalidArgument(format!("tail threshold must be positive, got {t}")));
        }
        match self.profile {
            Profile::Digit => {
                let n = (t / self.scale).ceil();
                if n <= 1.0 {
                    Ok(1.0)
                } else {
                    Ok((1.0 / n).ln_1p() / std::f64::consts::LN_2)
                }
            }
            Profile::Radial => {
                let r = (self.scale / t).powf(1.0 / self.beta);
                Ok(system.ball_measure(self.site, r))
            }
            Profile::Oscillatory => self.oscillatory_tail(system, t),
        }
    }

    fn oscillatory_tail(&self, system: &SystemModel, t: f64) -> Result<f64> {
        let (g_min, g_max) = self.profile_range();
        let inv_beta = 1.0 / self.beta;
        let s_in = (g_min / t).powf(inv_beta);
        let s_out = (g_max / t).powf(inv_beta);
        match system.geometry() {
            Geometry::Interval | Geometry::Circle => {
                let mut mass = NeumaierSum::new();
                for side in [-1.0, 1.0] {
                    let s_max = self.side_extent(system, side);
                    let along = |s: f64| Point::one((self.site.x() + side * s).rem_euclid(1.0));
                    let h = |s: f64| self.residue_profile(along(s)) - t * s.powf(self.beta);
                    let inner = s_in.min(s_max);
                    mass.add(self.side_mass(system, side, 0.0, inner));
                    for (a, b) in positive_intervals(h, inner, s_out.min(s_max), LEVEL_SET_GRID) {
                        mass.add(self.side_mass(system, side, a, b));
                    }
                }
                Ok(mass.value())
            }
            Geometry::Torus2 => {
                let ray_area = |theta: f64| {
                    let (sin, cos) = theta.sin_cos();
                    let s_max = 0.5 / cos.abs().max(sin.abs());
                    let at = |s: f64| Point::two(self.site.x() + s * cos, self.site.y() + s * sin);
                    let h = |s: f64| self.residue_profile(at(s)) - t * s.powf(self.beta);
                    let inner = s_in.min(s_max);
                    let mut area = 0.5 * inner * inner;
                    for (a, b) in positive_intervals(h, inner, s_out.min(s_max), 64) {
                        area += 0.5 * (b * b - a * a);
                    }
                    area
                };
                let cuts: Vec<f64> = (0..=8).map(|i| i as f64 * PI / 4.0).collect();
                Ok(integrate_pieces(ray_area, &cuts, 1e-6)?.value)
            }
        }
    }

    /// Largest distance reachable from the site on one side in one dimension.
    fn side_extent(&self, system: &SystemModel, side: f64) -> f64 {
        match system.geometry() {
            Geometry::Circle => 0.5,
            _ => {
                if side < 0.0 {
                    self.site.x()
                } else {
                    1.0 - self.site.x()
                }
            }
        }
    }

    /// Measure of the segment at distances `[a, b]` on one side of the site.
    fn side_mass(&self, system: &SystemModel, side: f64, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        match system.id() {
            SystemId::GaussMap => {
                let (lo, hi) = if side < 0.0 {
                    (self.site.x() - b, self.site.x() - a)
                } else {
                    (self.site.x() + a, self.site.x() + b)
                };
                crate::dynsys::gauss_cdf(hi) - crate::dynsys::gauss_cdf(lo)
            }
            _ => b - a,
        }
    }

    /// `E[f · 1{d(·, x*) > r}]`.
    pub fn truncated_mean(&self, system: &SystemModel, r: f64) -> Result<f64> {
        if self.profile == Profile::Digit {
            return Ok(digit_truncated_mean(r) * self.scale);
        }
        let beta = self.beta;
        let d = self.dimension as f64;
        if r <= 0.0 && beta >= d {
            return Ok(f64::INFINITY);
        }
        // ∫_a^b s^{-β} ds
        let power_integral = |a: f64, b: f64| -> f64 {
            if b <= a {
                0.0
            } else if beta == 1.0 {
                (b / a).ln()
            } else {
                (b.powf(1.0 - beta) - a.powf(1.0 - beta)) / (1.0 - beta)
            }
        };
        let r = r.max(0.0);
        match (self.profile, system.id(), system.geometry()) {
            (Profile::Radial, _, Geometry::Circle) => Ok(self.scale * 2.0 * power_integral(r, 0.5)),
            (Profile::Radial, SystemId::IidUniform, _) => {
                let near = self.site.x().min(1.0 - self.site.x());
                let far = self.site.x().max(1.0 - self.site.x());
                let two_sided = 2.0 * power_integral(r, near.max(r));
                let one_sided = power_integral(r.max(near), far);
                Ok(self.scale * (two_sided + one_sided))
            }
            (Profile::Radial, _, _) => {
                let s_max = system.max_distance(self.site);
                let mut cuts = vec![r];
                let breaks = match system.geometry() {
                    Geometry::Torus2 => vec![0.5],
                    _ => vec![self.site.x(), 1.0 - self.site.x()],
                };
                for b in breaks {
                    if b > r && b < s_max {
                        cuts.push(b);
                    }
                }
                cuts.push(s_max);
                cuts.sort_by(f64::total_cmp);
                cuts.dedup();
                let q = integrate_pieces(
                    |s| self.pow.eval(s) * system.distance_density(self.site, s),
                    &cuts,
                    QUAD_TOL,
                )?;
                Ok(self.scale * q.value)
            }
            (Profile::Oscillatory, _, Geometry::Torus2) => {
                let ray = |theta: f64| -> f64 {
                    let (sin, cos) = theta.sin_cos();
                    let s_max = 0.5 / cos.abs().max(sin.abs());
                    if s_max <= r {
                        return 0.0;
                    }
                    let at = |s: f64| Point::two(self.site.x() + s * cos, self.site.y() + s * sin);
                    integrate(|s| self.residue_profile(at(s)) * self.pow.eval(s) * s, r, s_max, 1e-9)
                        .map(|q| q.value)
                        .unwrap_or(f64::NAN)
                };
                let cuts: Vec<f64> = (0..=8).map(|i| i as f64 * PI / 4.0).collect();
                let q = integrate_pieces(ray, &cuts, 1e-8)?;
                if !q.value.is_finite() {
                    return Err(Error::QuadratureFailure {
                        tolerance: 1e-9,
                        estimate: q.value,
                        error: q.error,
                    });
                }
                Ok(q.value)
            }
            (Profile::Oscillatory, _, _) => {
                let mut total = NeumaierSum::new();
                for side in [-1.0, 1.0] {
                    let s_max = self.side_extent(system, side);
                    if s_max <= r {
                        continue;
                    }
                    let along = |s: f64| Point::one((self.site.x() + side * s).rem_euclid(1.0));
                    let q = integrate(
                        |s| {
                            let x = along(s);
                            self.residue_profile(x) * self.pow.eval(s) * system.density_at(x)
                        },
                        r,
                        s_max,
                        QUAD_TOL,
                    )?;
                    total.add(q.value);
                }
                Ok(total.value())
            }
            (Profile::Digit, _, _) => unreachable!(),
        }
    }

    /// Threshold `λ` with `μ(f ≥ λ) = mass`.
    pub fn level_for_tail_mass(&self, system: &SystemModel, mass: f64) -> Result<f64> {
        if !(mass > 0.0 && mass <= 1.0) {
            return Err(Error::InvalidArgument(format!("tail mass must lie in (0, 1], got {mass}")));
        }
        match self.profile {
            Profile::Radial => {
                let r = system.radius_for_mass(self.site, mass)?;
                Ok(self.scale * self.pow.eval(r))
            }
            _ => {
                // μ(f ≥ t) is nonincreasing in t; search in log t
                let law = self.tail_law(system);
                let guess = (mass / law.tail_constant).powf(-law.alpha);
                let (mut lo, mut hi) = (guess.ln() - 2.0, guess.ln() + 2.0);
                let excess = |lt: f64| self.tail_measure(system, lt.exp()).map(|m| m - mass);
                let mut widen = 0;
                while excess(lo)? < 0.0 || excess(hi)? > 0.0 {
                    lo -= 4.0;
                    hi += 4.0;
                    widen += 1;
                    if widen > 20 {
                        return Err(Error::RootFindFailure { lo: lo.exp(), hi: hi.exp() });
                    }
                }
                let root = crate::numeric::bisect(|lt| excess(lt).unwrap_or(f64::NAN), lo, hi, 1e-14)?;
                Ok(root.exp())
            }
        }
    }
}

/// `E_Gauss[⌊1/x⌋ · 1{x > r}]`.
fn digit_truncated_mean(r: f64) -> f64 {
    let log2 = |v: f64| v.ln() / std::f64::consts::LN_2;
    if r >= 1.0 {
        return 0.0;
    }
    if r <= 0.0 {
        return f64::INFINITY;
    }
    // digit n occupies (1/(n+1), 1/n]
    let m = (1.0 / r).floor() as u64;
    let mut acc = NeumaierSum::new();
    for n in 1..m {
        let nf = n as f64;
        acc.add(nf * log2((nf + 1.0) * (nf + 1.0) / (nf * (nf + 2.0))));
    }
    // partial cell of digit m: (r, 1/m]
    let mf = m as f64;
    let upper = 1.0 / mf;
    if upper > r {
        acc.add(mf * (log2(1.0 + upper) - log2(1.0 + r)));
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iid() -> SystemModel {
        SystemModel::new(SystemId::IidUniform)
    }
    fn doubling() -> SystemModel {
        SystemModel::new(SystemId::DoublingBitstream)
    }
    fn gauss() -> SystemModel {
        SystemModel::new(SystemId::GaussMap)
    }

    #[test]
    fn evaluate_examples() {
        let f = Observable::power(&iid(), Point::one(0.0), 1.0, Profile::Radial, Aperture::Half).unwrap();
        assert_eq!(f.evaluate(&iid(), Point::one(0.5)).unwrap(), 2.0);

        let f = Observable::power(&doubling(), Point::one(0.5), 2.0, Profile::Radial, Aperture::Full).unwrap();
        let v = f.evaluate(&doubling(), Point::one(0.6)).unwrap();
        assert!((v - 100.0).abs() < 1e-9);

        let f = Observable::power(&doubling(), Point::one(0.25), 1.0, Profile::Oscillatory, Aperture::Full).unwrap();
        let v = f.evaluate(&doubling(), Point::one(0.35)).unwrap();
        let hand = (1.0 + 0.5 * (TAU * 0.35).cos()) / 0.1;
        assert!((v - hand).abs() < 1e-12 * hand);
    }

    #[test]
    fn evaluate_at_site_is_degenerate() {
        let f = Observable::power(&iid(), Point::one(0.0), 1.0, Profile::Radial, Aperture::Half).unwrap();
        assert!(matches!(f.evaluate(&iid(), Point::one(0.0)), Err(Error::DegenerateHit { .. })));
        let d = Observable::digit(&gauss()).unwrap();
        assert!(d.evaluate(&gauss(), Point::one(0.0)).is_err());
    }

    #[test]
    fn digit_examples() {
        let d = Observable::digit(&gauss()).unwrap();
        let g = gauss();
        assert_eq!(d.evaluate(&g, Point::one(0.4)).unwrap(), 2.0);
        assert_eq!(d.evaluate(&g, Point::one(0.99)).unwrap(), 1.0);
        assert_eq!(d.evaluate(&g, Point::one(0.01)).unwrap(), 100.0);
        assert!(Observable::digit(&iid()).is_err());
    }

    #[test]
    fn tail_measure_examples() {
        let f = Observable::power(&iid(), Point::one(0.0), 2.0, Profile::Radial, Aperture::Half).unwrap();
        assert!((f.tail_measure(&iid(), 4.0).unwrap() - 0.5).abs() < 1e-15);

        let f = Observable::power(&doubling(), Point::one(GOLDEN_SITE), 1.0, Profile::Radial, Aperture::Full).unwrap();
        assert!((f.tail_measure(&doubling(), 10.0).unwrap() - 0.2).abs() < 1e-15);

        let d = Observable::digit(&gauss()).unwrap();
        assert!((d.tail_measure(&gauss(), 2.0).unwrap() - 1.5f64.log2()).abs() < 1e-15);
        assert!((d.tail_measure(&gauss(), 2.0).unwrap() - 0.584_962_500_721_156).abs() < 1e-12);
    }

    #[test]
    fn aperture_must_match_site() {
        assert!(Observable::power(&iid(), Point::one(0.0), 1.0, Profile::Radial, Aperture::Full).is_err());
        assert!(Observable::power(&iid(), Point::one(0.3), 1.0, Profile::Radial, Aperture::Half).is_err());
        assert!(Observable::power(&doubling(), Point::one(0.0), 1.0, Profile::Radial, Aperture::Full).is_err());
    }

    #[test]
    fn scaling_multiplies_values() {
        let sys = doubling();
        let f = Observable::power(&sys, Point::one(GOLDEN_SITE), 1.5, Profile::Oscillatory, Aperture::Full).unwrap();
        let g = f.scaled(3.0);
        for x in [0.1, 0.5, 0.6, 0.9] {
            let p = Point::one(x);
            let (a, b) = (g.evaluate(&sys, p).unwrap(), 3.0 * f.evaluate(&sys, p).unwrap());
            assert!((a - b).abs() <= 4.0 * f64::EPSILON * b);
        }
    }

    #[test]
    fn doubling_threshold_halves_radial_tail() {
        for (sys, site, ap) in [
            (doubling(), Point::one(GOLDEN_SITE), Aperture::Full),
            (iid(), Point::one(0.0), Aperture::Half),
        ] {
            for beta in [0.75, 1.0, 2.0] {
                let f = Observable::power(&sys, site, beta, Profile::Radial, ap).unwrap();
                for t in [50.0, 1e3, 1e5] {
                    let a = f.tail_measure(&sys, t).unwrap();
                    let b = f.tail_measure(&sys, t * 2f64.powf(f.alpha())).unwrap();
                    assert!((a / b - 2.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn oscillatory_tail_matches_brute_force() {
        let sys = doubling();
        let f = Observable::power(&sys, Point::one(GOLDEN_SITE), 1.0, Profile::Oscillatory, Aperture::Full).unwrap();
        // fine midpoint grid count of {f ≥ t}
        let n = 2_000_000;
        for t in [3.0, 20.0] {
            let hits = (0..n)
                .filter(|i| {
                    let x = Point::one((*i as f64 + 0.5) / n as f64);
                    f.evaluate(&sys, x).unwrap() >= t
                })
                .count();
            let grid = hits as f64 / n as f64;
            let exact = f.tail_measure(&sys, t).unwrap();
            assert!((grid - exact).abs() < 3.0 / n as f64, "t={t}: {grid} vs {exact}");
        }
    }

    #[test]
    fn truncated_mean_closed_forms() {
        // ∫₀¹ x^{-3/4} dx = 4
        let f = Observable::power(&iid(), Point::one(0.0), 0.75, Profile::Radial, Aperture::Half).unwrap();
        assert!((f.truncated_mean(&iid(), 0.0).unwrap() - 4.0).abs() < 1e-12);
        // one-sided 1/x beyond r: log(1/r)
        let f = Observable::power(&iid(), Point::one(0.0), 1.0, Profile::Radial, Aperture::Half).unwrap();
        assert!((f.truncated_mean(&iid(), 1e-3).unwrap() - 1e3f64.ln()).abs() < 1e-12);
        // two-sided torus |x − x*|^{-2} beyond r: 2(1/r − 2)
        let f = Observable::power(&doubling(), Point::one(GOLDEN_SITE), 2.0, Profile::Radial, Aperture::Full).unwrap();
        assert!((f.truncated_mean(&doubling(), 0.01).unwrap() - 2.0 * (100.0 - 2.0)).abs() < 1e-9);
    }

    #[test]
    fn truncated_mean_quadrature_agrees_with_closed_form_paths() {
        // the Gauss-density quadrature path against its own grid sum
        let sys = gauss();
        let f = Observable::power(&sys, Point::one(0.3), 0.75, Profile::Radial, Aperture::Full).unwrap();
        let r = 0.01;
        let n = 4_000_000;
        let mut acc = NeumaierSum::new();
        for i in 0..n {
            let x = (i as f64 + 0.5) / n as f64;
            let d = (x - 0.3f64).abs();
            if d > r {
                acc.add(d.powf(-0.75) * sys.density_at(Point::one(x)) / n as f64);
            }
        }
        let q = f.truncated_mean(&sys, r).unwrap();
        assert!((q - acc.value()).abs() < 1e-5 * q, "{q} vs {}", acc.value());
    }

    #[test]
    fn digit_truncated_mean_matches_direct_sum() {
        // r = 1/10 exactly at a cell boundary: Σ_{n<10} n μ(a=n)
        let direct: f64 = (1..10)
            .map(|n| {
                let n = n as f64;
                n * (((n + 1.0) * (n + 1.0)) / (n * (n + 2.0))).log2()
            })
            .sum();
        assert!((digit_truncated_mean(0.1) - direct).abs() < 1e-12);
    }

    #[test]
    fn level_for_tail_mass_inverts_tail_measure() {
        let sys = doubling();
        for profile in [Profile::Radial, Profile::Oscillatory] {
            let f = Observable::power(&sys, Point::one(GOLDEN_SITE), 1.0, profile, Aperture::Full).unwrap();
            for mass in [1e-4, 1e-2] {
                let lambda = f.level_for_tail_mass(&sys, mass).unwrap();
                let back = f.tail_measure(&sys, lambda).unwrap();
                assert!((back / mass - 1.0).abs() < 1e-10, "{profile} {mass}: {back}");
            }
        }
    }

    #[test]
    fn unit_ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert_eq!(unit_ball_volume(2), PI);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-12);
    }
}
