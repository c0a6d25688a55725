//! TOML experiment configuration.
//!
//! ```toml
//! experiment = "dlt-inter"      # required, the only required key
//! system = "doubling"           # iid | doubling | catmap | gauss
//! trim = "inter:pow:0.4"        # light:K | inter:pow:G | inter:polylog:P
//! checkpoints = [1000000]       # or a geometric range "1e4:1e7:x10"
//! replicas = 2000
//! seed = 42
//! output_dir = "out/dlt-inter"
//!
//! [observable]
//! profile = "radial"            # radial | oscillatory | digit
//! beta = 0.75
//! site = [0.6180339887498949]   # defaults to the system's standard site
//! aperture = "full"             # full | half, defaults from the site
//! scale = 1.0
//!
//! [reference]                   # point-process reference (dlt-light, ppp-limit)
//! horizon = 10000.0
//! samples = 100000
//!
//! [poisson]                     # poisson-returns
//! times = [0.5, 1.0, 2.0]
//! trim = [1, 2]
//!
//! [acceptance]                  # omitted: per-experiment defaults; present: only listed rules
//! ks_max = 0.06
//! ```
//!
//! Every key has a per-experiment default, so `experiment = "…"` alone is a
//! valid file. Writing a parsed config emits every field.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dynsys::{Point, SystemId, SystemModel};
use crate::error::{Error, Result};
use crate::observables::{Aperture, Observable, Profile};
use crate::trimming::{TrimSchedule, TrimSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SllnLight,
    SllnInter,
    /// Intermediate trimming at `α = 1`, normalized by `N log(N/k)`.
    /// Exploratory; the statement it checks comes without proof.
    SllnInterD,
    WeakLaw,
    DltLight,
    DltInter,
    PoissonReturns,
    PppLimit,
    NearEquivalence,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::SllnLight,
        ExperimentKind::SllnInter,
        ExperimentKind::SllnInterD,
        ExperimentKind::WeakLaw,
        ExperimentKind::DltLight,
        ExperimentKind::DltInter,
        ExperimentKind::PoissonReturns,
        ExperimentKind::PppLimit,
        ExperimentKind::NearEquivalence,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::SllnLight => "slln-light",
            ExperimentKind::SllnInter => "slln-inter",
            ExperimentKind::SllnInterD => "slln-inter-d",
            ExperimentKind::WeakLaw => "weak-law",
            ExperimentKind::DltLight => "dlt-light",
            ExperimentKind::DltInter => "dlt-inter",
            ExperimentKind::PoissonReturns => "poisson-returns",
            ExperimentKind::PppLimit => "ppp-limit",
            ExperimentKind::NearEquivalence => "near-equivalence",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config("experiment", format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableConfig {
    pub profile: Profile,
    pub beta: f64,
    pub site: Vec<f64>,
    pub aperture: Aperture,
    pub scale: f64,
}

impl ObservableConfig {
    pub fn site_point(&self) -> Point {
        match self.site.as_slice() {
            [x] => Point::one(*x),
            [x, y] => Point::two(*x, *y),
            _ => unreachable!("validated when parsing"),
        }
    }

    pub fn build(&self, system: &SystemModel) -> Result<Observable> {
        let obs = match self.profile {
            Profile::Digit => Observable::digit(system)?,
            p => Observable::power(system, self.site_point(), self.beta, p, self.aperture)?,
        };
        Ok(obs.scaled(self.scale))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceConfig {
    /// Horizon `R` of the truncated point-process reference.
    pub horizon: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonConfig {
    /// Scaled ball masses `t`; the radius is chosen so that `N μ(B_r) = t`.
    pub times: Vec<f64>,
    /// Trimming levels `K` for the trimmed-count identity.
    pub trim: Vec<usize>,
}

/// Pass/fail rules. A rule is checked only when its key is present.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceptanceRules {
    /// `|median/target − 1|` at the last checkpoint.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median_rel_tol: Option<f64>,
    /// `|median − target|` nonincreasing across checkpoints.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monotone: Option<bool>,
    /// Median over replicas of `|statistic − target|` nonincreasing across
    /// checkpoints.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub typical_monotone: Option<bool>,
    /// Fraction of replicas with `|statistic − 1| > eps` strictly decreasing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviation_eps: Option<f64>,
    /// KS distance to the target law at the last checkpoint.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_max: Option<f64>,
    /// TV distance to Poisson(t), for every `t`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tv_max: Option<f64>,
    /// `|corr|` of the inner count and the disjoint annulus count.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corr_max: Option<f64>,
    /// Trimmed-count identity must hold for every replica.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trimmed_identity: Option<bool>,
    /// Median of `Ŝ/S − 1` at the last checkpoint.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_max: Option<f64>,
    /// Tail slope within this relative tolerance of `−(K+1)/α`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_slope_rel_tol: Option<f64>,
    /// Window `[lo, hi]` of the tail-slope fit.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_window: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub system: SystemId,
    pub trim: TrimSpec,
    pub checkpoints: Vec<u64>,
    pub replicas: usize,
    #[serde(serialize_with = "serialize_seed")]
    pub seed: u64,
    pub output_dir: PathBuf,
    pub observable: ObservableConfig,
    pub reference: ReferenceConfig,
    pub poisson: PoissonConfig,
    pub acceptance: AcceptanceRules,
}

// TOML integers are signed 64-bit
fn serialize_seed<S: Serializer>(seed: &u64, s: S) -> std::result::Result<S::Ok, S::Error> {
    match i64::try_from(*seed) {
        Ok(v) => s.serialize_i64(v),
        Err(_) => s.serialize_str(&seed.to_string()),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum SeedValue {
    Int(i64),
    Text(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum CheckpointValue {
    List(Vec<i64>),
    Range(String),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObservable {
    profile: Option<Profile>,
    beta: Option<f64>,
    site: Option<Vec<f64>>,
    aperture: Option<Aperture>,
    scale: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReference {
    horizon: Option<f64>,
    samples: Option<i64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPoisson {
    times: Option<Vec<f64>>,
    trim: Option<Vec<i64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: String,
    system: Option<String>,
    trim: Option<String>,
    checkpoints: Option<CheckpointValue>,
    replicas: Option<i64>,
    seed: Option<SeedValue>,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    observable: RawObservable,
    #[serde(default)]
    reference: RawReference,
    #[serde(default)]
    poisson: RawPoisson,
    acceptance: Option<AcceptanceRules>,
}

/// Command-line overrides, applied before defaults are filled in.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub system: Option<SystemId>,
    pub beta: Option<f64>,
    pub site: Option<Vec<f64>>,
    pub profile: Option<Profile>,
    pub aperture: Option<Aperture>,
    pub trim: Option<TrimSpec>,
    pub checkpoints: Option<Vec<u64>>,
    pub replicas: Option<usize>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

struct Defaults {
    system: SystemId,
    profile: Profile,
    beta: f64,
    trim: TrimSpec,
    checkpoints: &'static [u64],
    replicas: usize,
}

fn defaults(kind: ExperimentKind) -> Defaults {
    use ExperimentKind::*;
    const DECADES: &[u64] = &[100_000, 1_000_000, 10_000_000];
    const MILLION: &[u64] = &[1_000_000];
    const FOUR_DECADES: &[u64] = &[10_000, 100_000, 1_000_000, 10_000_000];
    let (system, profile, beta, trim, checkpoints, replicas) = match kind {
        SllnLight => (SystemId::IidUniform, Profile::Radial, 1.0, TrimSpec::Light(1), DECADES, 200),
        SllnInter => (
            SystemId::IidUniform,
            Profile::Radial,
            2.0,
            TrimSpec::Intermediate(TrimSchedule::PowerLaw(0.3)),
            DECADES,
            200,
        ),
        SllnInterD => (
            SystemId::IidUniform,
            Profile::Radial,
            1.0,
            TrimSpec::Intermediate(TrimSchedule::PowerLaw(0.5)),
            DECADES,
            200,
        ),
        WeakLaw => (SystemId::IidUniform, Profile::Radial, 1.0, TrimSpec::Light(0), DECADES, 500),
        DltLight => (SystemId::DoublingBitstream, Profile::Radial, 0.75, TrimSpec::Light(1), MILLION, 2000),
        DltInter => (
            SystemId::DoublingBitstream,
            Profile::Radial,
            0.75,
            TrimSpec::Intermediate(TrimSchedule::PowerLaw(0.4)),
            MILLION,
            2000,
        ),
        PoissonReturns => (SystemId::DoublingBitstream, Profile::Radial, 1.0, TrimSpec::Light(2), MILLION, 4000),
        PppLimit => (SystemId::IidUniform, Profile::Radial, 0.75, TrimSpec::Light(1), MILLION, 1),
        NearEquivalence => (
            SystemId::DoublingBitstream,
            Profile::Oscillatory,
            1.0,
            TrimSpec::Light(3),
            FOUR_DECADES,
            100,
        ),
    };
    Defaults {
        system,
        profile,
        beta,
        trim,
        checkpoints,
        replicas,
    }
}

fn default_rules(kind: ExperimentKind) -> AcceptanceRules {
    use ExperimentKind::*;
    let mut r = AcceptanceRules::default();
    match kind {
        SllnLight => {
            r.median_rel_tol = Some(0.15);
            r.monotone = Some(true);
        }
        SllnInter => {
            r.median_rel_tol = Some(0.10);
            r.typical_monotone = Some(true);
        }
        SllnInterD => {}
        WeakLaw => r.deviation_eps = Some(0.2),
        DltLight => r.ks_max = Some(0.08),
        DltInter => r.ks_max = Some(0.06),
        PoissonReturns => {
            r.tv_max = Some(0.03);
            r.corr_max = Some(0.05);
            r.trimmed_identity = Some(true);
        }
        PppLimit => {
            r.tail_slope_rel_tol = Some(0.25);
            r.tail_window = Some([5.0, 50.0]);
        }
        NearEquivalence => {
            r.ratio_max = Some(0.02);
            r.monotone = Some(true);
        }
    }
    r
}

/// Parses `"1e4:1e7:x10"` into `1e4, 1e5, 1e6, 1e7`.
pub fn parse_checkpoint_range(s: &str) -> Result<Vec<u64>> {
    let bad = |m: &str| Error::config("checkpoints", format!("`{s}`: {m}"));
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, factor] = parts.as_slice() else {
        return Err(bad("expected START:END:xFACTOR"));
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let (lo, hi) = (num(lo)?, num(hi)?);
    let factor = num(factor.strip_prefix('x').ok_or_else(|| bad("factor must look like x10"))?)?;
    if !(lo >= 1.0 && hi >= lo && factor > 1.0) {
        return Err(bad("need 1 ≤ START ≤ END and FACTOR > 1"));
    }
    let mut out = Vec::new();
    let mut v = lo;
    while v <= hi * (1.0 + 1e-12) {
        out.push(v.round() as u64);
        v *= factor;
    }
    Ok(out)
}

fn positive(field: &str, v: i64) -> Result<usize> {
    if v < 1 {
        return Err(Error::config(field, format!("must be at least 1, got {v}")));
    }
    Ok(v as usize)
}

fn resolve(raw: RawConfig, ov: &Overrides) -> Result<ExperimentConfig> {
    let experiment: ExperimentKind = raw.experiment.parse()?;
    let d = defaults(experiment);

    let system = match (&ov.system, &raw.system) {
        (Some(s), _) => *s,
        (None, Some(s)) => s.parse()?,
        (None, None) => d.system,
    };
    let model = SystemModel::new(system);
    let trim = match (&ov.trim, &raw.trim) {
        (Some(t), _) => *t,
        (None, Some(t)) => t.parse()?,
        (None, None) => d.trim,
    };
    let checkpoints = match (&ov.checkpoints, &raw.checkpoints) {
        (Some(c), _) => c.clone(),
        (None, Some(CheckpointValue::List(v))) => v
            .iter()
            .map(|&n| positive("checkpoints", n).map(|n| n as u64))
            .collect::<Result<_>>()?,
        (None, Some(CheckpointValue::Range(s))) => parse_checkpoint_range(s)?,
        (None, None) => d.checkpoints.to_vec(),
    };
    if checkpoints.is_empty() || checkpoints.windows(2).any(|w| w[0] >= w[1]) || checkpoints[0] == 0 {
        return Err(Error::config("checkpoints", "must be positive and strictly increasing"));
    }
    for &n in &checkpoints {
        let k = trim.k_at(n);
        if k > 0 && k as u64 >= n {
            return Err(Error::config("trim", format!("k = {k} leaves nothing at N = {n}")));
        }
    }
    let replicas = match (ov.replicas, raw.replicas) {
        (Some(r), _) => positive("replicas", r as i64)?,
        (None, Some(r)) => positive("replicas", r)?,
        (None, None) => d.replicas,
    };
    let seed = match (ov.seed, raw.seed) {
        (Some(s), _) => s,
        (None, Some(SeedValue::Int(v))) => {
            u64::try_from(v).map_err(|_| Error::config("seed", format!("must be non-negative, got {v}")))?
        }
        (None, Some(SeedValue::Text(t))) => t
            .parse()
            .map_err(|_| Error::config("seed", format!("not a 64-bit unsigned integer: `{t}`")))?,
        (None, None) => 0x7472_696d_6c61_6221,
    };
    let output_dir = ov
        .output_dir
        .clone()
        .or(raw.output_dir)
        .unwrap_or_else(|| PathBuf::from("out").join(experiment.name()));

    let ro = raw.observable;
    let profile = ov.profile.or(ro.profile).unwrap_or(if system == SystemId::GaussMap {
        Profile::Digit
    } else {
        d.profile
    });
    let beta = ov.beta.or(ro.beta).unwrap_or(if profile == Profile::Digit { 1.0 } else { d.beta });
    let site = ov
        .site
        .clone()
        .or(ro.site)
        .unwrap_or_else(|| Observable::default_site(&model).0[..model.dimension()].to_vec());
    if site.len() != model.dimension() {
        return Err(Error::config(
            "observable.site",
            format!("{system} needs {} coordinate(s), got {}", model.dimension(), site.len()),
        ));
    }
    let site_point = if site.len() == 1 {
        Point::one(site[0])
    } else {
        Point::two(site[0], site[1])
    };
    let aperture = ov
        .aperture
        .or(ro.aperture)
        .unwrap_or_else(|| Observable::default_aperture(&model, site_point));
    let scale = ro.scale.unwrap_or(1.0);
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::config("observable.scale", format!("must be positive, got {scale}")));
    }
    let observable = ObservableConfig {
        profile,
        beta,
        site,
        aperture,
        scale,
    };
    observable
        .build(&model)
        .map_err(|e| Error::config("observable", e.to_string()))?;

    let horizon = raw.reference.horizon.unwrap_or(match experiment {
        ExperimentKind::PppLimit => 100.0,
        _ => 1e4,
    });
    if !(horizon > 1.0 && horizon.is_finite()) {
        return Err(Error::config("reference.horizon", format!("must exceed 1, got {horizon}")));
    }
    let samples = match raw.reference.samples {
        Some(s) => positive("reference.samples", s)?,
        None if experiment == ExperimentKind::PppLimit => 1_000_000,
        None => 100_000,
    };

    let times = raw.poisson.times.unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
    if times.is_empty() || times.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::config("poisson.times", "must be a non-empty list of positive numbers"));
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("poisson.times", "must be strictly increasing"));
    }
    let poisson_trim = match raw.poisson.trim {
        Some(v) => v
            .into_iter()
            .map(|k| {
                usize::try_from(k).map_err(|_| Error::config("poisson.trim", format!("must be non-negative, got {k}")))
            })
            .collect::<Result<Vec<_>>>()?,
        None => vec![1, 2],
    };
    if experiment == ExperimentKind::PoissonReturns && checkpoints.len() != 1 {
        return Err(Error::config("checkpoints", "poisson-returns takes a single N"));
    }

    Ok(ExperimentConfig {
        experiment,
        system,
        trim,
        checkpoints,
        replicas,
        seed,
        output_dir,
        observable,
        reference: ReferenceConfig { horizon, samples },
        poisson: PoissonConfig {
            times,
            trim: poisson_trim,
        },
        acceptance: raw.acceptance.unwrap_or_else(|| default_rules(experiment)),
    })
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn toml_error(text: &str, e: toml::de::Error) -> Error {
    let message = e.message().to_string();
    let field = message
        .split('`')
        .nth(1)
        .filter(|_| message.starts_with("unknown field") || message.starts_with("missing field"))
        .unwrap_or("")
        .to_string();
    Error::Config {
        line: e.span().map(|s| line_of(text, s.start)),
        field,
        message,
    }
}

pub fn parse_config_str(text: &str, overrides: &Overrides) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| toml_error(text, e))?;
    resolve(raw, overrides)
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    parse_config_with(path, &Overrides::default())
}

pub fn parse_config_with(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, overrides)
}

/// Fully populated TOML for `config`; parsing it gives `config` back.
pub fn write_config(config: &ExperimentConfig) -> Result<String> {
    toml::to_string(config).map_err(|e| Error::Serialize(e.to_string()))
}

impl<'de> Deserialize<'de> for ExperimentConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawConfig::deserialize(d)?;
        resolve(raw, &Overrides::default()).map_err(serde::de::Error::custom)
    }
}
