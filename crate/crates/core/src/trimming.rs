//! One-pass computation of untrimmed, value-trimmed and distance-trimmed
//! Birkhoff sums at a list of checkpoints.
//!
//! `S_N^k` removes the `k` largest values, `Ŝ_N^k` removes the values at the
//! `k` orbit points closest to the singular site. Both are read off two
//! bounded heaps of size `k(N_max)`: `k` is nondecreasing, so the top
//! `k(N_j)` of a prefix are always among the stored top `k(N_max)`.
//! Ties keep the earliest orbit index.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynsys::{Orbit, OrbitState, Point, SystemModel};
use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;
use crate::observables::Observable;
use crate::with_orbit;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrimSchedule {
    /// `k(N) = ⌈N^γ⌉`, `0 < γ < 1`.
    PowerLaw(f64),
    /// `k(N) = ⌈(log N)^p⌉`, `p > 0`.
    PolyLog(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrimSpec {
    /// Remove a fixed number of terms (`Light(0)` means no trimming).
    Light(usize),
    Intermediate(TrimSchedule),
}

impl TrimSpec {
    pub fn k_at(&self, n: u64) -> usize {
        match *self {
            TrimSpec::Light(k) => k,
            TrimSpec::Intermediate(TrimSchedule::PowerLaw(gamma)) => (n as f64).powf(gamma).ceil() as usize,
            TrimSpec::Intermediate(TrimSchedule::PolyLog(p)) => {
                if n <= 1 {
                    0
                } else {
                    (n as f64).ln().powf(p).ceil() as usize
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            TrimSpec::Light(_) => Ok(()),
            TrimSpec::Intermediate(TrimSchedule::PowerLaw(g)) if g > 0.0 && g < 1.0 => Ok(()),
            TrimSpec::Intermediate(TrimSchedule::PolyLog(p)) if p > 0.0 && p.is_finite() => Ok(()),
            _ => Err(Error::config("trim", format!("invalid trimming schedule {self}"))),
        }
    }

    pub fn is_light(&self) -> bool {
        matches!(self, TrimSpec::Light(_))
    }
}

impl fmt::Display for TrimSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrimSpec::Light(k) => write!(f, "light:{k}"),
            TrimSpec::Intermediate(TrimSchedule::PowerLaw(g)) => write!(f, "inter:pow:{g}"),
            TrimSpec::Intermediate(TrimSchedule::PolyLog(p)) => write!(f, "inter:polylog:{p}"),
        }
    }
}

impl FromStr for TrimSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config("trim", format!("expected light:K, inter:pow:G or inter:polylog:P, got `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        let spec = match parts.as_slice() {
            ["light", k] => TrimSpec::Light(k.parse().map_err(|_| bad())?),
            ["inter", "pow", g] => TrimSpec::Intermediate(TrimSchedule::PowerLaw(g.parse().map_err(|_| bad())?)),
            ["inter", "polylog", p] => TrimSpec::Intermediate(TrimSchedule::PolyLog(p.parse().map_err(|_| bad())?)),
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl Serialize for TrimSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TrimSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Heap entry ordered so that the heap top is the weakest of the kept
/// largest values (smallest value, latest index among equals).
#[derive(Debug, Clone, Copy)]
struct ByValue {
    value: f64,
    index: u64,
}

impl PartialEq for ByValue {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for ByValue {}
impl PartialOrd for ByValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for ByValue {
    fn cmp(&self, other: &Self) -> Ordering {
        other.value.total_cmp(&self.value).then(self.index.cmp(&other.index))
    }
}

/// Heap entry ordered so that the heap top is the farthest of the kept
/// closest points (largest distance, latest index among equals).
#[derive(Debug, Clone, Copy)]
struct ByDistance {
    distance: f64,
    value: f64,
    index: u64,
}

impl PartialEq for ByDistance {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for ByDistance {}
impl PartialOrd for ByDistance {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for ByDistance {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance.total_cmp(&other.distance).then(self.index.cmp(&other.index))
    }
}

/// Trimmed sums of a prefix of the stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Checkpoint {
    pub n: u64,
    pub k: usize,
    /// `S_N`
    pub total: f64,
    /// `S_N^k`
    pub trimmed: f64,
    /// `Ŝ_N^k`
    pub hat_trimmed: f64,
    /// Largest value in the prefix.
    pub max_value: f64,
    /// Smallest of the `k` removed values (NaN if `k = 0`).
    pub kth_value: f64,
    /// Distance of the closest point.
    pub min_distance: f64,
    /// Distance of the `k`-th closest point (NaN if `k = 0`).
    pub kth_distance: f64,
}

/// Streaming accumulator of the running sum and the two bounded heaps.
#[derive(Debug, Clone)]
pub struct TrimAccumulator {
    capacity: usize,
    count: u64,
    total: NeumaierSum,
    largest: BinaryHeap<ByValue>,
    closest: BinaryHeap<ByDistance>,
}

impl TrimAccumulator {
    /// `capacity` is the largest `k` that will be requested.
    pub fn new(capacity: usize) -> Self {
        // one slot more so that `max_value`/`min_distance` exist for k = 0
        let slots = capacity.max(1);
        TrimAccumulator {
            capacity: slots,
            count: 0,
            total: NeumaierSum::new(),
            largest: BinaryHeap::with_capacity(slots + 1),
            closest: BinaryHeap::with_capacity(slots + 1),
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    #[inline(always)]
    pub fn push(&mut self, value: f64, distance: f64) {
        let index = self.count;
        self.count += 1;
        self.total.add(value);

        if self.largest.len() < self.capacity {
            self.largest.push(ByValue { value, index });
        } else if self.largest.peek().is_some_and(|top| value > top.value) {
            // a later index never beats an equal value
            if let Some(mut top) = self.largest.peek_mut() {
                *top = ByValue { value, index };
            }
        }

        if self.closest.len() < self.capacity {
            self.closest.push(ByDistance { distance, value, index });
        } else if self.closest.peek().is_some_and(|top| distance < top.distance) {
            if let Some(mut top) = self.closest.peek_mut() {
                *top = ByDistance { distance, value, index };
            }
        }
    }

    fn sorted_largest(&self) -> Vec<ByValue> {
        let mut v: Vec<ByValue> = self.largest.iter().copied().collect();
        v.sort_unstable();
        v
    }

    fn sorted_closest(&self) -> Vec<ByDistance> {
        let mut v: Vec<ByDistance> = self.closest.iter().copied().collect();
        v.sort_unstable();
        v
    }

    /// Orbit indices of the `k` largest values, largest first.
    pub fn top_indices(&self, k: usize) -> Vec<u64> {
        self.sorted_largest().iter().take(k).map(|e| e.index).collect()
    }

    /// Orbit indices of the `k` closest points, closest first.
    pub fn closest_indices(&self, k: usize) -> Vec<u64> {
        self.sorted_closest().iter().take(k).map(|e| e.index).collect()
    }

    /// Trimmed sums of everything pushed so far, removing `k` terms.
    pub fn checkpoint(&self, k: usize) -> Result<Checkpoint> {
        let n = self.count;
        if k > self.capacity || (k > 0 && k as u64 >= n) {
            return Err(Error::InsufficientPoints { k, n });
        }
        let largest = self.sorted_largest();
        let closest = self.sorted_closest();
        let mut trimmed = self.total;
        for e in largest.iter().take(k) {
            trimmed.add(-e.value);
        }
        let mut hat = self.total;
        for e in closest.iter().take(k) {
            hat.add(-e.value);
        }
        let kth = |present: bool, v: f64| if present { v } else { f64::NAN };
        Ok(Checkpoint {
            n,
            k,
            total: self.total.value(),
            trimmed: trimmed.value(),
            hat_trimmed: hat.value(),
            max_value: largest.first().map_or(f64::NAN, |e| e.value),
            kth_value: kth(k > 0, largest.get(k.saturating_sub(1)).map_or(f64::NAN, |e| e.value)),
            min_distance: closest.first().map_or(f64::NAN, |e| e.distance),
            kth_distance: kth(k > 0, closest.get(k.saturating_sub(1)).map_or(f64::NAN, |e| e.distance)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrimmedSeries {
    pub checkpoints: Vec<Checkpoint>,
}

fn validate_checkpoints(trim: &TrimSpec, checkpoints: &[u64]) -> Result<()> {
    if checkpoints.is_empty() {
        return Err(Error::InvalidArgument("no checkpoints given".into()));
    }
    if checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("checkpoints must be positive and strictly increasing".into()));
    }
    for &n in checkpoints {
        let k = trim.k_at(n);
        if k > 0 && k as u64 >= n {
            return Err(Error::InsufficientPoints { k, n });
        }
    }
    Ok(())
}

/// Runs one orbit of length `max(checkpoints)` and records the trimmed sums
/// at every checkpoint.
pub fn run_trimmed_series(
    system: &SystemModel,
    obs: &Observable,
    trim: &TrimSpec,
    state: OrbitState,
    checkpoints: &[u64],
) -> Result<TrimmedSeries> {
    validate_checkpoints(trim, checkpoints)?;
    let k_max = trim.k_at(*checkpoints.last().expect("validated non-empty"));
    let mut acc = TrimAccumulator::new(k_max);
    let mut state = state;
    let out = with_orbit!(&mut state, orbit => drive(orbit, system, obs, trim, &mut acc, checkpoints))?;
    Ok(TrimmedSeries { checkpoints: out })
}

fn drive<O: Orbit>(
    orbit: &mut O,
    system: &SystemModel,
    obs: &Observable,
    trim: &TrimSpec,
    acc: &mut TrimAccumulator,
    checkpoints: &[u64],
) -> Result<Vec<Checkpoint>> {
    let site = obs.site();
    let n_max = *checkpoints.last().expect("validated non-empty");
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    for n in 0..n_max {
        let p = orbit.point();
        let dist = system.metric(p, site);
        if dist == 0.0 {
            return Err(Error::DegenerateHit { step: n });
        }
        acc.push(obs.value_at(p, dist), dist);
        if n + 1 == checkpoints[next] {
            out.push(acc.checkpoint(trim.k_at(n + 1))?);
            next += 1;
        }
        if n + 1 < n_max {
            orbit.step()?;
        }
    }
    Ok(out)
}

/// Hit counts of `B_r(site)` for each radius along one orbit of length `n`.
pub fn count_ball_hits(system: &SystemModel, site: Point, state: OrbitState, n: u64, radii: &[f64]) -> Result<Vec<u64>> {
    if radii.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("radii must be nondecreasing".into()));
    }
    let mut state = state;
    with_orbit!(&mut state, orbit => {
        let mut counts = vec![0u64; radii.len()];
        for i in 0..n {
            let d = system.metric(orbit.point(), site);
            // the first ball containing the point; all larger ones do too
            if let Some(first) = radii.iter().position(|&r| d < r) {
                counts[first] += 1;
            }
            if i + 1 < n {
                orbit.step()?;
            }
        }
        let mut running = 0;
        for c in counts.iter_mut() {
            running += *c;
            *c = running;
        }
        Ok(counts)
    })
}

/// Ball hit counts together with the distances of the `k` closest visits.
#[derive(Debug, Clone, PartialEq)]
pub struct BallHits {
    /// `counts[i]` = hits of `B_{radii[i]}`.
    pub counts: Vec<u64>,
    /// Distances of the `k` closest orbit points, closest first.
    pub closest: Vec<f64>,
}

impl BallHits {
    /// `Ŝ^K(1_B)`: hits of `B_{radii[i]}` after removing the `K` closest visits.
    pub fn hat_count(&self, i: usize, radius: f64, k: usize) -> u64 {
        let removed = self.closest.iter().take(k).filter(|&&d| d < radius).count() as u64;
        self.counts[i] - removed
    }
}

/// As [`count_ball_hits`], also tracking the `k` closest visits.
pub fn ball_hits_with_closest(
    system: &SystemModel,
    site: Point,
    state: OrbitState,
    n: u64,
    radii: &[f64],
    k: usize,
) -> Result<BallHits> {
    if radii.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("radii must be nondecreasing".into()));
    }
    let mut state = state;
    with_orbit!(&mut state, orbit => {
        let mut counts = vec![0u64; radii.len()];
        // sorted ascending, at most k entries
        let mut closest: Vec<f64> = Vec::with_capacity(k + 1);
        for i in 0..n {
            let d = system.metric(orbit.point(), site);
            if d == 0.0 {
                return Err(Error::DegenerateHit { step: i });
            }
            if let Some(first) = radii.iter().position(|&r| d < r) {
                counts[first] += 1;
            }
            if k > 0 && (closest.len() < k || d < closest[k - 1]) {
                let at = closest.partition_point(|&c| c <= d);
                closest.insert(at, d);
                closest.truncate(k);
            }
            if i + 1 < n {
                orbit.step()?;
            }
        }
        let mut running = 0;
        for c in counts.iter_mut() {
            running += *c;
            *c = running;
        }
        Ok(BallHits { counts, closest })
    })
}

/// `max(count − K, 0)`: the number of hits left after removing the `K`
/// closest visits.
pub fn trimmed_count(count: u64, k: u64) -> u64 {
    count.saturating_sub(k)
}

/// Result of the sort-based reference computation.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForce {
    pub total: f64,
    pub trimmed: f64,
    pub hat_trimmed: f64,
    pub top_indices: Vec<u64>,
    pub closest_indices: Vec<u64>,
}

/// Full-sort oracle for `S^k` and `Ŝ^k`, ties broken by earliest index.
pub fn trimmed_sum_bruteforce(values: &[f64], distances: &[f64], k: usize) -> Result<BruteForce> {
    if values.len() != distances.len() {
        return Err(Error::InvalidArgument("values and distances differ in length".into()));
    }
    if k > values.len() {
        return Err(Error::InsufficientPoints {
            k,
            n: values.len() as u64,
        });
    }
    let mut by_value: Vec<usize> = (0..values.len()).collect();
    by_value.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut by_distance: Vec<usize> = (0..values.len()).collect();
    by_distance.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]).then(a.cmp(&b)));

    let top = &by_value[..k];
    let near = &by_distance[..k];
    let mut keep_value = vec![true; values.len()];
    for &i in top {
        keep_value[i] = false;
    }
    let mut keep_near = vec![true; values.len()];
    for &i in near {
        keep_near[i] = false;
    }
    let sum_where = |keep: &[bool]| {
        values
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(v, _)| *v)
            .collect::<NeumaierSum>()
            .value()
    };
    Ok(BruteForce {
        total: values.iter().copied().collect::<NeumaierSum>().value(),
        trimmed: sum_where(&keep_value),
        hat_trimmed: sum_where(&keep_near),
        top_indices: top.iter().map(|&i| i as u64).collect(),
        closest_indices: near.iter().map(|&i| i as u64).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsys::SystemId;
    use crate::observables::{Aperture, Profile, GOLDEN_SITE};
    use crate::rng::{stream, StreamPurpose};

    fn feed(values: &[f64], k: usize) -> Checkpoint {
        let mut acc = TrimAccumulator::new(k);
        for (i, &v) in values.iter().enumerate() {
            acc.push(v, 1.0 / v + i as f64 * 1e-9);
        }
        acc.checkpoint(k).unwrap()
    }

    #[test]
    fn hand_sorted_example() {
        let c = feed(&[3.0, 1.0, 4.0, 1.0, 5.0], 2);
        assert_eq!(c.total, 14.0);
        assert_eq!(c.trimmed, 5.0);
    }

    #[test]
    fn zero_trim_is_untrimmed() {
        let c = feed(&[3.0, 1.0, 4.0], 0);
        assert_eq!(c.trimmed, c.total);
        assert_eq!(c.hat_trimmed, c.total);
        assert_eq!(c.max_value, 4.0);
        assert!(c.kth_value.is_nan());
    }

    #[test]
    fn ties_keep_earliest_index() {
        let b = trimmed_sum_bruteforce(&[2.0, 2.0, 1.0], &[0.5, 0.5, 0.9], 1).unwrap();
        assert_eq!(b.trimmed, 3.0);
        assert_eq!(b.top_indices, vec![0]);
        assert_eq!(b.closest_indices, vec![0]);

        let mut acc = TrimAccumulator::new(1);
        for (v, d) in [(2.0, 0.5), (2.0, 0.5), (1.0, 0.9)] {
            acc.push(v, d);
        }
        assert_eq!(acc.top_indices(1), vec![0]);
        assert_eq!(acc.closest_indices(1), vec![0]);
    }

    #[test]
    fn removing_everything_in_oracle() {
        let b = trimmed_sum_bruteforce(&[1.0, 2.0], &[0.1, 0.2], 2).unwrap();
        assert_eq!(b.trimmed, 0.0);
        assert!(matches!(
            trimmed_sum_bruteforce(&[1.0], &[0.1], 2),
            Err(Error::InsufficientPoints { .. })
        ));
        let mut acc = TrimAccumulator::new(2);
        acc.push(1.0, 0.1);
        acc.push(2.0, 0.2);
        assert!(matches!(acc.checkpoint(2), Err(Error::InsufficientPoints { .. })));
    }

    #[test]
    fn schedules() {
        let pow = TrimSpec::Intermediate(TrimSchedule::PowerLaw(0.3));
        assert_eq!(pow.k_at(10_000_000), 126);
        assert_eq!(pow.k_at(1000), 8);
        let pl = TrimSpec::Intermediate(TrimSchedule::PolyLog(2.0));
        assert_eq!(pl.k_at(1000), 48);
        for spec in [pow, pl] {
            let mut prev = 0;
            for n in (1..2000u64).chain([10_000, 1_000_000]) {
                let k = spec.k_at(n);
                assert!(k >= prev);
                prev = k;
            }
        }
    }

    #[test]
    fn trim_spec_round_trips_through_text() {
        for s in ["light:3", "inter:pow:0.3", "inter:polylog:2"] {
            assert_eq!(s.parse::<TrimSpec>().unwrap().to_string(), s);
        }
        assert!("inter:pow:1.5".parse::<TrimSpec>().is_err());
        assert!("heavy:2".parse::<TrimSpec>().is_err());
    }

    #[test]
    fn checkpoint_validation() {
        let sys = SystemModel::new(SystemId::IidUniform);
        let obs = Observable::power(&sys, Point::one(0.0), 1.0, Profile::Radial, Aperture::Half).unwrap();
        let state = || sys.sample_initial(stream(1, StreamPurpose::Orbit, 0));
        assert!(run_trimmed_series(&sys, &obs, &TrimSpec::Light(1), state(), &[10, 10]).is_err());
        assert!(matches!(
            run_trimmed_series(&sys, &obs, &TrimSpec::Light(5), state(), &[5, 10]),
            Err(Error::InsufficientPoints { k: 5, n: 5 })
        ));
    }

    #[test]
    fn radial_profile_gives_identical_trims() {
        let sys = SystemModel::new(SystemId::DoublingBitstream);
        let obs = Observable::power(&sys, Point::one(GOLDEN_SITE), 1.0, Profile::Radial, Aperture::Full).unwrap();
        let spec = TrimSpec::Intermediate(TrimSchedule::PowerLaw(0.4));
        let series = run_trimmed_series(
            &sys,
            &obs,
            &spec,
            sys.sample_initial(stream(3, StreamPurpose::Orbit, 0)),
            &[1000, 2000, 4000, 8000],
        )
        .unwrap();
        for c in &series.checkpoints {
            assert_eq!(c.trimmed, c.hat_trimmed);
            assert!(c.trimmed <= c.total);
        }
    }

    #[test]
    fn ball_hit_edge_cases() {
        let sys = SystemModel::new(SystemId::DoublingBitstream);
        let site = Point::one(GOLDEN_SITE);
        let state = || sys.sample_initial(stream(9, StreamPurpose::Orbit, 0));
        let c = count_ball_hits(&sys, site, state(), 5000, &[0.0, 0.01, 0.1, 0.6]).unwrap();
        assert_eq!(c[0], 0);
        assert_eq!(c[3], 5000);
        assert!(c[1] <= c[2]);
        assert!(count_ball_hits(&sys, site, state(), 10, &[0.2, 0.1]).is_err());
        assert_eq!(trimmed_count(1, 2), 0);
        assert_eq!(trimmed_count(5, 2), 3);
    }
}
