//! Normalizing constants, centerings and limit laws of the trimmed limit
//! theorems.

use serde::Serialize;

use crate::dynsys::SystemModel;
use crate::error::{Error, Result};
use crate::observables::{unit_ball_volume, Observable};
use crate::ppp::{centering_c_r, CenteringMode};

/// Smallest `α` accepted by the intermediate strong law; `1/(α − 1)` blows
/// up at 1.
pub const SLLN_INTER_MIN_ALPHA: f64 = 1.05;
/// Distributional experiments reject `α` this close to a regime boundary
/// (`1/2` and either side of `1`).
pub const DLT_BOUNDARY_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Theorem {
    SllnLight,
    SllnInter,
    /// Intermediate trimming at `α = 1`, normalized by `N log(N/k)`.
    SllnInterCritical,
    DltLight,
    DltInter,
    WeakLaw,
    PoissonReturns,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum LawDescriptor {
    PointMass { value: f64 },
    Normal { variance: f64 },
    TrimmedPpp { k: usize, alpha: f64, coupling: f64, centering: f64, horizon: f64 },
    Poisson { mean: f64 },
}

/// `B_d`, aperture, `ρ(x*)` and `Res_{x*}(f)` for one observable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometryConstants {
    pub unit_ball: f64,
    pub aperture: f64,
    pub rho_at_site: f64,
    pub residue: f64,
    pub dimension: usize,
    pub alpha: f64,
}

impl GeometryConstants {
    pub fn new(obs: &Observable, system: &SystemModel) -> Self {
        GeometryConstants {
            unit_ball: unit_ball_volume(obs.dimension()),
            aperture: obs.aperture().factor(),
            rho_at_site: system.density_at(obs.site()),
            residue: obs.residue(),
            dimension: obs.dimension(),
            alpha: obs.alpha(),
        }
    }

    /// `c_geom · B_d · ρ(x*)`, the small-ball rate `μ(B_r) ≈ rate · r^d`.
    pub fn ball_rate(&self) -> f64 {
        self.aperture * self.unit_ball * self.rho_at_site
    }

    /// `Res · (c_geom B_d ρ)^α`, the coupling between `f` and `ξ^{-α}`.
    pub fn coupling(&self) -> f64 {
        self.residue * self.ball_rate().powf(self.alpha)
    }
}

/// `Res · c_geom · B_d · ρ(x*)`, the limit of `S_N^K / (N log N)` when `α = 1`.
pub fn slln_light_constant(geom: &GeometryConstants) -> Result<f64> {
    if geom.alpha != 1.0 {
        return Err(Error::WrongRegime(format!(
            "light-trimming strong law needs α = 1, got {}",
            geom.alpha
        )));
    }
    Ok(geom.residue * geom.ball_rate())
}

/// `Res/(α − 1) · (c_geom B_d ρ(x*))^α`, the limit of
/// `S_N^{k(N)} / (N^α k^{1−α})` when `α > 1`.
pub fn slln_inter_constant(geom: &GeometryConstants) -> Result<f64> {
    let alpha = geom.alpha;
    if alpha < SLLN_INTER_MIN_ALPHA {
        return Err(Error::WrongRegime(format!(
            "intermediate strong law needs α ≥ {SLLN_INTER_MIN_ALPHA}, got {alpha}"
        )));
    }
    Ok(geom.residue / (alpha - 1.0) * geom.ball_rate().powf(alpha))
}

fn check_dlt_regime(alpha: f64) -> Result<()> {
    if alpha <= 0.5 {
        return Err(Error::WrongRegime(format!("distributional limits need α > 1/2, got {alpha}")));
    }
    Ok(())
}

/// Rejects `α` too close to a regime boundary for a desk-scale experiment.
pub fn validate_dlt_alpha(alpha: f64) -> Result<()> {
    check_dlt_regime(alpha)?;
    let near_half = alpha < 0.5 + DLT_BOUNDARY_MARGIN;
    let near_one = alpha != 1.0 && (alpha - 1.0).abs() < DLT_BOUNDARY_MARGIN;
    if near_half || near_one {
        return Err(Error::WrongRegime(format!(
            "α = {alpha} is within {DLT_BOUNDARY_MARGIN} of a regime boundary"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterNormalization {
    pub a_n: f64,
    pub b_n: f64,
    pub sigma2: f64,
    /// Radius with `μ(B_r) = k/N`.
    pub r_n: f64,
}

/// Centering, scale and limiting variance for intermediate trimming.
///
/// `a_N = N E[f 1{d(·,x*) > r_N}]` with `μ(B_{r_N}) = k/N`, evaluated exactly;
/// `b_N = Res (c_geom B_d ρ)^α N^α k^{1/2−α}`; `σ² = 2α/(2α − 1)`.
pub fn dlt_inter_normalization(obs: &Observable, system: &SystemModel, n: u64, k: usize) -> Result<InterNormalization> {
    let geom = GeometryConstants::new(obs, system);
    let alpha = geom.alpha;
    check_dlt_regime(alpha)?;
    if k == 0 || k as u64 >= n {
        return Err(Error::InsufficientPoints { k, n });
    }
    let nf = n as f64;
    let kf = k as f64;
    let r_n = system.radius_for_mass(obs.site(), kf / nf)?;
    let a_n = nf * obs.truncated_mean(system, r_n)?;
    let b_n = geom.coupling() * nf.powf(alpha) * kf.powf(0.5 - alpha);
    Ok(InterNormalization {
        a_n,
        b_n,
        sigma2: 2.0 * alpha / (2.0 * alpha - 1.0),
        r_n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LightNormalization {
    pub a_n: f64,
    /// `N^α`
    pub scale: f64,
    /// `c = Res (c_geom B_d ρ)^α`
    pub coupling: f64,
    pub c_r: f64,
    pub horizon: f64,
}

/// Centering for light trimming, coupled to the point-process reference at
/// horizon `R`:
/// `a_N = c N^α c_R + N E[f 1{d(·,x*) > R^{1/d} r_N}]`,
/// `r_N = (c_geom B_d ρ N)^{-1/d}`. `c_R` vanishes for `α > 1`.
pub fn dlt_light_normalization(obs: &Observable, system: &SystemModel, n: u64, horizon: f64) -> Result<LightNormalization> {
    let geom = GeometryConstants::new(obs, system);
    let alpha = geom.alpha;
    check_dlt_regime(alpha)?;
    if !(horizon > 1.0) {
        return Err(Error::InvalidArgument(format!("reference horizon must exceed 1, got {horizon}")));
    }
    let nf = n as f64;
    let d = geom.dimension as f64;
    let r_n = (geom.ball_rate() * nf).powf(-1.0 / d);
    let cut = horizon.powf(1.0 / d) * r_n;
    let c_r = centering_c_r(alpha, horizon, CenteringMode::Asymptotic);
    let coupling = geom.coupling();
    let scale = nf.powf(alpha);
    let a_n = coupling * scale * c_r + nf * obs.truncated_mean(system, cut)?;
    Ok(LightNormalization {
        a_n,
        scale,
        coupling,
        c_r,
        horizon,
    })
}

/// `r_N^t = (t / (c_geom B_d ρ N))^{1/d}`.
pub fn poisson_radius(geom: &GeometryConstants, n: u64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    (t / (geom.ball_rate() * n as f64)).powf(1.0 / geom.dimension as f64)
}

/// The level `λ` with `μ(f ≥ λ) = k/N`.
pub fn lambda_cut(obs: &Observable, system: &SystemModel, n: u64, k: usize) -> Result<f64> {
    if k as u64 >= n || k == 0 {
        return Err(Error::InsufficientPoints { k, n });
    }
    obs.level_for_tail_mass(system, k as f64 / n as f64)
}

/// Centering `a_N` and scale `b_N` at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Normalization {
    pub a_n: f64,
    pub b_n: f64,
}

impl Normalization {
    pub fn apply(&self, raw: f64) -> f64 {
        (raw - self.a_n) / self.b_n
    }
}

/// A theorem instance for one observable: how to normalize and what the
/// normalized statistic converges to.
#[derive(Debug, Clone, Copy)]
pub struct TheoremTarget {
    pub theorem: Theorem,
    pub limit: LawDescriptor,
    obs: Observable,
    system: SystemModel,
    horizon: f64,
}

impl TheoremTarget {
    pub fn new(theorem: Theorem, obs: &Observable, system: &SystemModel, trim_k: usize, horizon: f64, poisson_t: f64) -> Result<Self> {
        let geom = GeometryConstants::new(obs, system);
        let limit = match theorem {
            Theorem::SllnLight | Theorem::WeakLaw | Theorem::SllnInterCritical => LawDescriptor::PointMass {
                value: slln_light_constant(&geom)?,
            },
            Theorem::SllnInter => LawDescriptor::PointMass {
                value: slln_inter_constant(&geom)?,
            },
            Theorem::DltInter => {
                validate_dlt_alpha(geom.alpha)?;
                LawDescriptor::Normal {
                    variance: 2.0 * geom.alpha / (2.0 * geom.alpha - 1.0),
                }
            }
            Theorem::DltLight => {
                validate_dlt_alpha(geom.alpha)?;
                LawDescriptor::TrimmedPpp {
                    k: trim_k,
                    alpha: geom.alpha,
                    coupling: geom.coupling(),
                    centering: centering_c_r(geom.alpha, horizon, CenteringMode::Asymptotic),
                    horizon,
                }
            }
            Theorem::PoissonReturns => LawDescriptor::Poisson { mean: poisson_t },
        };
        Ok(TheoremTarget {
            theorem,
            limit,
            obs: *obs,
            system: *system,
            horizon,
        })
    }

    /// Normalization of the raw trimmed sum at `(N, k)`.
    pub fn normalization(&self, n: u64, k: usize) -> Result<Normalization> {
        let nf = n as f64;
        let alpha = self.obs.alpha();
        Ok(match self.theorem {
            Theorem::SllnLight | Theorem::WeakLaw => Normalization {
                a_n: 0.0,
                b_n: nf * nf.ln(),
            },
            Theorem::SllnInter => Normalization {
                a_n: 0.0,
                b_n: nf.powf(alpha) * (k as f64).powf(1.0 - alpha),
            },
            Theorem::SllnInterCritical => Normalization {
                a_n: 0.0,
                b_n: nf * (nf / k as f64).ln(),
            },
            Theorem::DltInter => {
                let m = dlt_inter_normalization(&self.obs, &self.system, n, k)?;
                Normalization { a_n: m.a_n, b_n: m.b_n }
            }
            Theorem::DltLight => {
                let m = dlt_light_normalization(&self.obs, &self.system, n, self.horizon)?;
                Normalization {
                    a_n: m.a_n,
                    b_n: m.scale,
                }
            }
            Theorem::PoissonReturns => Normalization { a_n: 0.0, b_n: 1.0 },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsys::{Point, SystemId};
    use crate::observables::{Aperture, Profile, GOLDEN_SITE};

    fn iid_obs(beta: f64) -> (Observable, SystemModel) {
        let sys = SystemModel::new(SystemId::IidUniform);
        (
            Observable::power(&sys, Point::one(0.0), beta, Profile::Radial, Aperture::Half).unwrap(),
            sys,
        )
    }

    fn doubling_obs(beta: f64) -> (Observable, SystemModel) {
        let sys = SystemModel::new(SystemId::DoublingBitstream);
        (
            Observable::power(&sys, Point::one(GOLDEN_SITE), beta, Profile::Radial, Aperture::Full).unwrap(),
            sys,
        )
    }

    #[test]
    fn unit_ball_constants() {
        let (o, s) = doubling_obs(1.0);
        assert_eq!(GeometryConstants::new(&o, &s).unit_ball, 2.0);
        let cat = SystemModel::new(SystemId::CatMapFixed128);
        let o = Observable::power(&cat, Observable::default_site(&cat), 2.0, Profile::Radial, Aperture::Full).unwrap();
        assert_eq!(GeometryConstants::new(&o, &cat).unit_ball, std::f64::consts::PI);
    }

    #[test]
    fn light_slln_constants() {
        let (o, s) = iid_obs(1.0);
        assert_eq!(slln_light_constant(&GeometryConstants::new(&o, &s)).unwrap(), 1.0);
        let (o, s) = doubling_obs(1.0);
        assert_eq!(slln_light_constant(&GeometryConstants::new(&o, &s)).unwrap(), 2.0);
        let g = SystemModel::new(SystemId::GaussMap);
        let d = Observable::digit(&g).unwrap();
        let c = slln_light_constant(&GeometryConstants::new(&d, &g)).unwrap();
        assert!((c - 1.0 / std::f64::consts::LN_2).abs() < 1e-15);
        assert!((c - 1.442_695).abs() < 1e-6);
        let (o, s) = iid_obs(2.0);
        assert!(matches!(
            slln_light_constant(&GeometryConstants::new(&o, &s)),
            Err(Error::WrongRegime(_))
        ));
    }

    #[test]
    fn inter_slln_constants() {
        let (o, s) = iid_obs(2.0);
        assert_eq!(slln_inter_constant(&GeometryConstants::new(&o, &s)).unwrap(), 1.0);
        let (o, s) = doubling_obs(2.0);
        assert_eq!(slln_inter_constant(&GeometryConstants::new(&o, &s)).unwrap(), 4.0);
        let (o, s) = iid_obs(1.02);
        assert!(slln_inter_constant(&GeometryConstants::new(&o, &s)).is_err());
    }

    #[test]
    fn inter_dlt_variance_and_regimes() {
        let (o, s) = doubling_obs(2.0);
        let m = dlt_inter_normalization(&o, &s, 1_000_000, 251).unwrap();
        assert!((m.sigma2 - 4.0 / 3.0).abs() < 1e-15);
        let (o, s) = doubling_obs(0.75);
        assert!((dlt_inter_normalization(&o, &s, 1000, 10).unwrap().sigma2 - 3.0).abs() < 1e-15);
        let (o, s) = iid_obs(0.5);
        assert!(matches!(dlt_inter_normalization(&o, &s, 1000, 10), Err(Error::WrongRegime(_))));
    }

    #[test]
    fn inter_centering_regimes() {
        // ½ < α < 1: a_N / N → ∫ f = 4 for x^{-3/4}
        let (o, s) = iid_obs(0.75);
        let n = 10_000_000_000_000_000u64;
        let k = (n as f64).powf(0.4).ceil() as usize;
        let m = dlt_inter_normalization(&o, &s, n, k).unwrap();
        assert!((m.a_n / n as f64 - 4.0).abs() < 0.02);
        // α = 1: a_N = N log(N/k) exactly for the one-sided 1/x
        let (o, s) = iid_obs(1.0);
        let k = (n as f64).sqrt().ceil() as usize;
        let m = dlt_inter_normalization(&o, &s, n, k).unwrap();
        let nf = n as f64;
        assert!((m.a_n / (nf * (nf / k as f64).ln()) - 1.0).abs() < 1e-12);
        assert!((m.a_n / (0.5 * nf * nf.ln()) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn light_dlt_normalization() {
        let (o, s) = doubling_obs(2.0);
        let m = dlt_light_normalization(&o, &s, 1_000_000, 1e4).unwrap();
        assert_eq!(m.c_r, 0.0);
        assert!(m.a_n / m.scale < 1.0);
        let (o, s) = iid_obs(1.0);
        let n = 1_000_000_000u64;
        let m = dlt_light_normalization(&o, &s, n, 1e4).unwrap();
        let nf = n as f64;
        assert!((m.a_n / (nf * nf.ln()) - 1.0).abs() < 1e-12);
        let (o, s) = iid_obs(0.75);
        let m = dlt_light_normalization(&o, &s, n, 1e4).unwrap();
        assert!((m.a_n / nf - 4.0).abs() < 0.05);
    }

    #[test]
    fn poisson_radius_examples() {
        let (o, s) = doubling_obs(1.0);
        let g = GeometryConstants::new(&o, &s);
        assert!((poisson_radius(&g, 1_000_000, 1.0) - 5e-7).abs() < 1e-22);
        assert_eq!(poisson_radius(&g, 1_000_000, 0.0), 0.0);
        let r1 = poisson_radius(&g, 1000, 1.0);
        assert!((poisson_radius(&g, 1000, 4.0) / r1 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_cut_examples() {
        let (o, s) = iid_obs(2.0);
        assert!((lambda_cut(&o, &s, 100, 1).unwrap() - 1e4).abs() < 1e-6);
        // two-sided 1/|x − x*|, k/N = 10^{-3}: μ(B_r) = 2r = 10^{-3}
        let (o, s) = doubling_obs(1.0);
        assert!((lambda_cut(&o, &s, 1000, 1).unwrap() - 2000.0).abs() < 1e-9);
        // k/N → 1: the minimum of f over the space
        let l = lambda_cut(&o, &s, 1_000_000, 999_999).unwrap();
        assert!((l - 2.0).abs() < 1e-5);
    }

    #[test]
    fn normalized_statistic_is_scale_free() {
        let (o, s) = doubling_obs(0.75);
        let scaled = o.scaled(3.0);
        let a = dlt_inter_normalization(&o, &s, 100_000, 100).unwrap();
        let b = dlt_inter_normalization(&scaled, &s, 100_000, 100).unwrap();
        assert!((b.b_n / a.b_n - 3.0).abs() < 1e-12);
        assert!((b.a_n / a.a_n - 3.0).abs() < 1e-12);
        let raw = 12345.0;
        let na = Normalization { a_n: a.a_n, b_n: a.b_n }.apply(raw);
        let nb = Normalization { a_n: b.a_n, b_n: b.b_n }.apply(3.0 * raw);
        assert!((na - nb).abs() < 1e-12 * na.abs().max(1.0));
    }
}
