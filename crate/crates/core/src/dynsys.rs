//! Measure-preserving systems over which orbits are generated.
//!
//! Four concrete models are provided:
//!
//! * `IidUniform`: i.i.d. uniform points on `[0,1)`, the ground-truth baseline.
//! * `DoublingBitstream`: `x ↦ 2x mod 1`, realized as a left shift over a
//!   lazily drawn stream of fair bits with a 64-bit window. Exact in
//!   distribution and immune to the collapse of naive floating-point doubling.
//! * `CatMapFixed128`: `(x, y) ↦ (2x + y, x + y) mod 1` on 128-bit fixed
//!   point integers, so the modular arithmetic is exact and invertible.
//! * `GaussMap`: `x ↦ frac(1/x)` in double precision, with invariant density
//!   `1/((1 + x) log 2)`.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomSource;

const TWO_POW_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

/// A point of `[0,1)^d`; the second coordinate is unused when `d = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point(pub [f64; 2]);

impl Point {
    pub const fn one(x: f64) -> Self {
        Point([x, 0.0])
    }

    pub const fn two(x: f64, y: f64) -> Self {
        Point([x, y])
    }

    #[inline(always)]
    pub fn x(&self) -> f64 {
        self.0[0]
    }

    #[inline(always)]
    pub fn y(&self) -> f64 {
        self.0[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemId {
    #[serde(rename = "iid")]
    IidUniform,
    #[serde(rename = "doubling")]
    DoublingBitstream,
    #[serde(rename = "catmap")]
    CatMapFixed128,
    #[serde(rename = "gauss")]
    GaussMap,
}

impl SystemId {
    pub fn name(&self) -> &'static str {
        match self {
            SystemId::IidUniform => "iid",
            SystemId::DoublingBitstream => "doubling",
            SystemId::CatMapFixed128 => "catmap",
            SystemId::GaussMap => "gauss",
        }
    }
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iid" => Ok(SystemId::IidUniform),
            "doubling" => Ok(SystemId::DoublingBitstream),
            "catmap" => Ok(SystemId::CatMapFixed128),
            "gauss" => Ok(SystemId::GaussMap),
            other => Err(Error::config("system", format!("unknown system `{other}`"))),
        }
    }
}

/// Shape of the state space, which fixes the metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    /// `[0,1)` with `|a − b|`.
    Interval,
    /// `ℝ/ℤ` with wrap-around distance.
    Circle,
    /// `ℝ²/ℤ²` with the Euclidean norm of wrapped differences.
    Torus2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemModel {
    id: SystemId,
}

impl SystemModel {
    pub const fn new(id: SystemId) -> Self {
        SystemModel { id }
    }

    pub fn id(&self) -> SystemId {
        self.id
    }

    pub fn dimension(&self) -> usize {
        match self.id {
            SystemId::CatMapFixed128 => 2,
            _ => 1,
        }
    }

    pub fn geometry(&self) -> Geometry {
        match self.id {
            SystemId::IidUniform | SystemId::GaussMap => Geometry::Interval,
            SystemId::DoublingBitstream => Geometry::Circle,
            SystemId::CatMapFixed128 => Geometry::Torus2,
        }
    }

    /// Density of the invariant measure with respect to Lebesgue measure.
    pub fn density_at(&self, p: Point) -> f64 {
        match self.id {
            SystemId::GaussMap => gauss_density(p.x()),
            _ => 1.0,
        }
    }

    /// Geodesic distance, with torus wrap-around where applicable.
    #[inline(always)]
    pub fn metric(&self, a: Point, b: Point) -> f64 {
        match self.geometry() {
            Geometry::Interval => (a.x() - b.x()).abs(),
            Geometry::Circle => wrapped(a.x() - b.x()),
            Geometry::Torus2 => wrapped(a.x() - b.x()).hypot(wrapped(a.y() - b.y())),
        }
    }

    /// Draws an initial state distributed according to the invariant measure.
    pub fn sample_initial(&self, mut rng: RandomSource) -> OrbitState {
        match self.id {
            SystemId::IidUniform => {
                let x = rng.random::<f64>();
                OrbitState::Iid(IidOrbit { x, rng, step: 0 })
            }
            SystemId::DoublingBitstream => {
                let window = rng.next_u64();
                OrbitState::Doubling(DoublingOrbit::from_window(window, rng))
            }
            SystemId::CatMapFixed128 => {
                let x = ((rng.next_u64() as u128) << 64) | rng.next_u64() as u128;
                let y = ((rng.next_u64() as u128) << 64) | rng.next_u64() as u128;
                OrbitState::CatMap(CatMapOrbit::new(x, y))
            }
            SystemId::GaussMap => {
                let u = rng.random::<f64>();
                OrbitState::Gauss(GaussOrbit::new(gauss_inverse_cdf(u)))
            }
        }
    }

    /// Largest possible distance from `center`.
    pub fn max_distance(&self, center: Point) -> f64 {
        match self.geometry() {
            Geometry::Interval => center.x().max(1.0 - center.x()),
            Geometry::Circle => 0.5,
            Geometry::Torus2 => std::f64::consts::FRAC_1_SQRT_2,
        }
    }

    /// `μ(B_r(center))`, exact.
    pub fn ball_measure(&self, center: Point, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let c = center.x();
        match (self.id, self.geometry()) {
            (SystemId::GaussMap, _) => {
                let lo = (c - r).max(0.0);
                let hi = (c + r).min(1.0);
                (1.0 + hi).log2() - (1.0 + lo).log2()
            }
            (_, Geometry::Interval) => (c + r).min(1.0) - (c - r).max(0.0),
            (_, Geometry::Circle) => (2.0 * r).min(1.0),
            (_, Geometry::Torus2) => disc_in_unit_torus(r),
        }
    }

    /// Derivative of `r ↦ μ(B_r(center))`.
    pub fn distance_density(&self, center: Point, s: f64) -> f64 {
        if s < 0.0 {
            return 0.0;
        }
        let c = center.x();
        let sides = |w: &dyn Fn(f64) -> f64| {
            let mut acc = 0.0;
            if c - s > 0.0 {
                acc += w(c - s);
            }
            if c + s < 1.0 {
                acc += w(c + s);
            }
            acc
        };
        match (self.id, self.geometry()) {
            (SystemId::GaussMap, _) => sides(&gauss_density),
            (_, Geometry::Interval) => sides(&|_| 1.0),
            (_, Geometry::Circle) => {
                if s < 0.5 {
                    2.0
                } else {
                    0.0
                }
            }
            (_, Geometry::Torus2) => {
                if s <= 0.5 {
                    2.0 * PI * s
                } else if s < std::f64::consts::FRAC_1_SQRT_2 {
                    s * (2.0 * PI - 8.0 * (0.5 / s).acos())
                } else {
                    0.0
                }
            }
        }
    }

    /// Radius `r` with `μ(B_r(center)) = mass`.
    pub fn radius_for_mass(&self, center: Point, mass: f64) -> Result<f64> {
        if mass <= 0.0 {
            return Ok(0.0);
        }
        if mass >= 1.0 {
            return Ok(self.max_distance(center));
        }
        let c = center.x();
        match (self.id, self.geometry()) {
            (SystemId::IidUniform, _) => {
                // two-sided until the nearer edge is reached, one-sided after
                let near = c.min(1.0 - c);
                if mass <= 2.0 * near {
                    Ok(mass / 2.0)
                } else {
                    Ok(mass - near)
                }
            }
            (_, Geometry::Circle) => Ok(mass / 2.0),
            _ => {
                let hi = self.max_distance(center);
                crate::numeric::bisect(|r| self.ball_measure(center, r) - mass, 0.0, hi, 1e-15)
            }
        }
    }

    /// Rejects sites that are periodic with short period, which violate slow
    /// recurrence.
    pub fn validate_site(&self, site: Point) -> Result<()> {
        let inside = |v: f64| (0.0..1.0).contains(&v);
        if !inside(site.x()) || (self.dimension() == 2 && !inside(site.y())) {
            return Err(Error::config("site", "singular site must lie in [0,1)^d"));
        }
        const PERIOD_LIMIT: u32 = 20;
        const TOL: f64 = 1e-9;
        let periodic = match self.id {
            SystemId::IidUniform => None,
            SystemId::DoublingBitstream => (1..=PERIOD_LIMIT).find(|&p| {
                let k = ((1u64 << p) - 1) as f64;
                wrapped(k * site.x()) < TOL * (1u64 << p) as f64
            }),
            SystemId::CatMapFixed128 => {
                let (mut x, mut y) = (site.x(), site.y());
                (1..=PERIOD_LIMIT).find(|_| {
                    let nx = (2.0 * x + y).rem_euclid(1.0);
                    let ny = (x + y).rem_euclid(1.0);
                    x = nx;
                    y = ny;
                    wrapped(x - site.x()).hypot(wrapped(y - site.y())) < 1e-7
                })
            }
            SystemId::GaussMap => {
                if site.x() == 0.0 {
                    None
                } else {
                    let mut x = site.x();
                    (1..=PERIOD_LIMIT).find(|_| {
                        if x == 0.0 {
                            return false;
                        }
                        x = (1.0 / x).fract();
                        (x - site.x()).abs() < 1e-7
                    })
                }
            }
        };
        match periodic {
            Some(p) => Err(Error::config(
                "site",
                format!("site is periodic with period {p} for {}; pick a non-periodic point", self.id),
            )),
            None => Ok(()),
        }
    }
}

/// Wrapped distance on the circle.
#[inline(always)]
pub fn wrapped(delta: f64) -> f64 {
    let a = delta.abs().rem_euclid(1.0);
    a.min(1.0 - a)
}

/// Area of a disc of radius `r` on the unit torus (no self-overlap below `√2/2`).
fn disc_in_unit_torus(r: f64) -> f64 {
    if r <= 0.5 {
        PI * r * r
    } else if r < std::f64::consts::FRAC_1_SQRT_2 {
        let h = 0.5;
        let segment = r * r * (h / r).acos() - h * (r * r - h * h).sqrt();
        PI * r * r - 4.0 * segment
    } else {
        1.0
    }
}

pub fn gauss_density(x: f64) -> f64 {
    1.0 / ((1.0 + x) * LN_2)
}

/// Inverse CDF of the Gauss measure, `u ↦ 2^u − 1`.
pub fn gauss_inverse_cdf(u: f64) -> f64 {
    u.exp2() - 1.0
}

pub fn gauss_cdf(x: f64) -> f64 {
    (1.0 + x).log2()
}

/// One step of an orbit. `point` is the current position; `step` advances by
/// one application of the map.
pub trait Orbit {
    fn point(&self) -> Point;
    fn step(&mut self) -> Result<()>;
    fn step_index(&self) -> u64;
}

#[derive(Debug, Clone)]
pub struct IidOrbit {
    x: f64,
    rng: RandomSource,
    step: u64,
}

impl Orbit for IidOrbit {
    #[inline(always)]
    fn point(&self) -> Point {
        Point::one(self.x)
    }

    #[inline(always)]
    fn step(&mut self) -> Result<()> {
        self.x = self.rng.random::<f64>();
        self.step += 1;
        Ok(())
    }

    fn step_index(&self) -> u64 {
        self.step
    }
}

#[derive(Debug, Clone)]
pub struct DoublingOrbit {
    window: u64,
    buffer: u64,
    remaining: u32,
    rng: RandomSource,
    step: u64,
}

impl DoublingOrbit {
    /// Starts from the binary expansion whose first 64 digits are `window`;
    /// later digits are drawn from `rng`.
    pub fn from_window(window: u64, mut rng: RandomSource) -> Self {
        let buffer = rng.next_u64();
        DoublingOrbit {
            window,
            buffer,
            remaining: 64,
            rng,
            step: 0,
        }
    }

    pub fn window(&self) -> u64 {
        self.window
    }
}

impl Orbit for DoublingOrbit {
    #[inline(always)]
    fn point(&self) -> Point {
        Point::one((self.window >> 11) as f64 * TWO_POW_NEG_53)
    }

    #[inline(always)]
    fn step(&mut self) -> Result<()> {
        self.window = (self.window << 1) | (self.buffer >> 63);
        self.buffer <<= 1;
        self.remaining -= 1;
        if self.remaining == 0 {
            self.buffer = self.rng.next_u64();
            self.remaining = 64;
        }
        self.step += 1;
        Ok(())
    }

    fn step_index(&self) -> u64 {
        self.step
    }
}

/// State `(X, Y)` of the cat map, representing `(X / 2^128, Y / 2^128)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CatMapOrbit {
    x: u128,
    y: u128,
    step: u64,
}

impl CatMapOrbit {
    pub const fn new(x: u128, y: u128) -> Self {
        CatMapOrbit { x, y, step: 0 }
    }

    pub fn raw(&self) -> (u128, u128) {
        (self.x, self.y)
    }

    /// Applies the inverse map `(x, y) ↦ (x − y, 2y − x)`.
    pub fn step_back(&mut self) {
        let x = self.x.wrapping_sub(self.y);
        let y = self.y.wrapping_mul(2).wrapping_sub(self.x);
        self.x = x;
        self.y = y;
        self.step = self.step.wrapping_sub(1);
    }
}

impl Orbit for CatMapOrbit {
    #[inline(always)]
    fn point(&self) -> Point {
        Point::two(
            (self.x >> 75) as f64 * TWO_POW_NEG_53,
            (self.y >> 75) as f64 * TWO_POW_NEG_53,
        )
    }

    #[inline(always)]
    fn step(&mut self) -> Result<()> {
        let x = self.x.wrapping_mul(2).wrapping_add(self.y);
        let y = self.x.wrapping_add(self.y);
        self.x = x;
        self.y = y;
        self.step += 1;
        Ok(())
    }

    fn step_index(&self) -> u64 {
        self.step
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussOrbit {
    x: f64,
    step: u64,
}

impl GaussOrbit {
    pub const fn new(x: f64) -> Self {
        GaussOrbit { x, step: 0 }
    }
}

impl Orbit for GaussOrbit {
    #[inline(always)]
    fn point(&self) -> Point {
        Point::one(self.x)
    }

    #[inline(always)]
    fn step(&mut self) -> Result<()> {
        let inv = 1.0 / self.x;
        if !inv.is_finite() {
            return Err(Error::DegenerateState {
                step: self.step,
                reason: format!("Gauss map undefined at x = {:e}", self.x),
            });
        }
        self.x = inv.fract();
        self.step += 1;
        Ok(())
    }

    fn step_index(&self) -> u64 {
        self.step
    }
}

/// The exact state of one orbit, owned by a single worker.
#[derive(Debug, Clone)]
pub enum OrbitState {
    Iid(IidOrbit),
    Doubling(DoublingOrbit),
    CatMap(CatMapOrbit),
    Gauss(GaussOrbit),
}

impl Orbit for OrbitState {
    fn point(&self) -> Point {
        match self {
            OrbitState::Iid(o) => o.point(),
            OrbitState::Doubling(o) => o.point(),
            OrbitState::CatMap(o) => o.point(),
            OrbitState::Gauss(o) => o.point(),
        }
    }

    fn step(&mut self) -> Result<()> {
        match self {
            OrbitState::Iid(o) => o.step(),
            OrbitState::Doubling(o) => o.step(),
            OrbitState::CatMap(o) => o.step(),
            OrbitState::Gauss(o) => o.step(),
        }
    }

    fn step_index(&self) -> u64 {
        match self {
            OrbitState::Iid(o) => o.step_index(),
            OrbitState::Doubling(o) => o.step_index(),
            OrbitState::CatMap(o) => o.step_index(),
            OrbitState::Gauss(o) => o.step_index(),
        }
    }
}

/// Calls `$body` with `$orbit` bound to the concrete orbit type, so that
/// hot loops are monomorphized per system.
#[macro_export]
macro_rules! with_orbit {
    ($state:expr, $orbit:ident => $body:expr) => {
        match $state {
            $crate::dynsys::OrbitState::Iid($orbit) => $body,
            $crate::dynsys::OrbitState::Doubling($orbit) => $body,
            $crate::dynsys::OrbitState::CatMap($orbit) => $body,
            $crate::dynsys::OrbitState::Gauss($orbit) => $body,
        }
    };
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::integrate;
    use crate::rng::{stream, StreamPurpose};

    fn rng(i: u64) -> RandomSource {
        stream(11, StreamPurpose::Orbit, i)
    }

    #[test]
    fn gauss_inverse_cdf_endpoints() {
        assert_eq!(gauss_inverse_cdf(0.0), 0.0);
        assert_eq!(gauss_inverse_cdf(1.0), 1.0);
    }

    #[test]
    fn iid_is_reproducible() {
        let sys = SystemModel::new(SystemId::IidUniform);
        let run = || {
            let mut s = sys.sample_initial(rng(5));
            (0..100)
                .map(|_| {
                    let p = s.point();
                    s.step().unwrap();
                    p.x()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn cat_map_step_example() {
        let mut o = CatMapOrbit::new(1 << 126, 1 << 126);
        assert_eq!(o.point(), Point::two(0.25, 0.25));
        o.step().unwrap();
        assert_eq!(o.point(), Point::two(0.75, 0.5));
    }

    #[test]
    fn doubling_shifts_window() {
        // 0.101₂… → 0.01₂…
        let mut o = DoublingOrbit::from_window(0b101 << 61, rng(0));
        assert_eq!(o.point().x(), 0.625);
        o.step().unwrap();
        assert_eq!(o.window() >> 62, 0b01);
        assert!(o.point().x() >= 0.25 && o.point().x() < 0.5);
    }

    #[test]
    fn gauss_step_example_and_degenerate() {
        let mut o = GaussOrbit::new(0.4);
        o.step().unwrap();
        assert!((o.point().x() - 0.5).abs() < 1e-15);
        let mut z = GaussOrbit::new(0.0);
        assert!(matches!(z.step(), Err(Error::DegenerateState { .. })));
    }

    #[test]
    fn torus_distance_examples() {
        let circle = SystemModel::new(SystemId::DoublingBitstream);
        assert!((circle.metric(Point::one(0.9), Point::one(0.1)) - 0.2).abs() < 1e-15);
        assert_eq!(circle.metric(Point::one(0.3), Point::one(0.3)), 0.0);
        let torus = SystemModel::new(SystemId::CatMapFixed128);
        let d = torus.metric(Point::two(0.95, 0.0), Point::two(0.05, 0.0));
        assert!((d - 0.1).abs() < 1e-15);
        let interval = SystemModel::new(SystemId::IidUniform);
        assert!((interval.metric(Point::one(0.9), Point::one(0.1)) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn densities_integrate_to_one() {
        for id in [SystemId::IidUniform, SystemId::DoublingBitstream, SystemId::GaussMap] {
            let sys = SystemModel::new(id);
            let q = integrate(|x| sys.density_at(Point::one(x)), 0.0, 1.0, 1e-12).unwrap();
            assert!((q.value - 1.0).abs() < 1e-10, "{id}");
        }
    }

    #[test]
    fn ball_measure_is_integral_of_distance_density() {
        let cases = [
            (SystemId::IidUniform, Point::one(0.3)),
            (SystemId::GaussMap, Point::one(0.2)),
            (SystemId::DoublingBitstream, Point::one(0.7)),
            (SystemId::CatMapFixed128, Point::two(0.6, 0.4)),
        ];
        for (id, c) in cases {
            let sys = SystemModel::new(id);
            for r in [0.05f64, 0.25, 0.4, 0.6, 0.7] {
                let r = r.min(sys.max_distance(c));
                let mut cuts = vec![0.0, r];
                for b in [c.x(), 1.0 - c.x(), 0.5] {
                    if b < r {
                        cuts.push(b);
                    }
                }
                cuts.sort_by(f64::total_cmp);
                let q = crate::numeric::integrate_pieces(|s| sys.distance_density(c, s), &cuts, 1e-11).unwrap();
                assert!((q.value - sys.ball_measure(c, r)).abs() < 1e-9, "{id} r={r}");
            }
            assert!((sys.ball_measure(c, sys.max_distance(c)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn radius_for_mass_inverts_ball_measure() {
        let cases = [
            (SystemId::IidUniform, Point::one(0.0)),
            (SystemId::IidUniform, Point::one(0.3)),
            (SystemId::GaussMap, Point::one(0.0)),
            (SystemId::DoublingBitstream, Point::one(0.7)),
            (SystemId::CatMapFixed128, Point::two(0.6, 0.4)),
        ];
        for (id, c) in cases {
            let sys = SystemModel::new(id);
            for m in [1e-6, 0.01, 0.3, 0.9] {
                let r = sys.radius_for_mass(c, m).unwrap();
                assert!((sys.ball_measure(c, r) - m).abs() < 1e-12 * m.max(1e-3), "{id} m={m}");
            }
        }
    }

    #[test]
    fn validator_rejects_periodic_sites() {
        let dbl = SystemModel::new(SystemId::DoublingBitstream);
        assert!(dbl.validate_site(Point::one(0.0)).is_err());
        assert!(dbl.validate_site(Point::one(1.0 / 3.0)).is_err());
        assert!(dbl.validate_site(Point::one(0.618_033_988_749_894_9)).is_ok());
        let gauss = SystemModel::new(SystemId::GaussMap);
        assert!(gauss.validate_site(Point::one(0.618_033_988_749_894_9)).is_err());
        assert!(gauss.validate_site(Point::one(0.0)).is_ok());
        let cat = SystemModel::new(SystemId::CatMapFixed128);
        assert!(cat.validate_site(Point::two(0.0, 0.0)).is_err());
        assert!(cat.validate_site(Point::two(0.618_033_988_749_894_9, 0.414_213_562_373_095_1)).is_ok());
    }
}
