//! Throughput-optimal mean photon number, maximum range, and rate curves.

use rayon::prelude::*;
use thiserror::Error;

use crate::params::{AttackScenario, SourceKind, SystemConfig};
use crate::scalar::Scalar;
use crate::secrecy::{self, LeakageModel, SecrecyError, SecrecyPoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("mean photon number optimization applies only to weak-coherent sources")]
    NotWeakCoherent,
    #[error("no secret-key capacity at zero distance (S = {0:e})")]
    NoCapacity(f64),
    #[error("distances must be strictly increasing")]
    UnsortedDistances,
    #[error("invalid search bracket [{0}, {1}]")]
    BadBracket(f64, f64),
    #[error(transparent)]
    Secrecy(#[from] SecrecyError),
}

/// Search bracket and tolerance for the photon-number optimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuSearch {
    pub lo: f64,
    pub hi: f64,
    /// Absolute tolerance in `mu`.
    pub tol: f64,
    pub grid_points: usize,
}

impl Default for MuSearch {
    fn default() -> Self {
        MuSearch {
            lo: 1e-4,
            hi: 3.0,
            tol: 1e-9,
            grid_points: 101,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuOptimum<S = f64> {
    pub mu_opt: S,
    pub s_opt: S,
    /// `S <= 0` everywhere in the bracket.
    pub no_capacity: bool,
    /// The pre-scan found more than one local maximum.
    pub multimodal: bool,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization of `f` on `[lo, hi]` to width `tol`.
pub fn golden_section_max<S: Scalar, F: FnMut(S) -> S>(mut f: F, lo: S, hi: S, tol: S) -> (S, S) {
    let r = S::lit(INV_PHI);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        // Bracket stops shrinking once it reaches float resolution.
        if c >= d {
            break;
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Geometric grid of `points` values spanning `[lo, hi]`.
pub fn mu_grid(search: &MuSearch) -> Vec<f64> {
    let n = search.grid_points.max(2);
    let ratio = (search.hi / search.lo).ln();
    (0..n)
        .map(|i| {
            if i == n - 1 {
                search.hi
            } else {
                search.lo * (ratio * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

fn capacity_at<S: Scalar>(
    config: &SystemConfig<S>,
    scenario: AttackScenario,
    model: &LeakageModel<S>,
    mu: S,
) -> Result<SecrecyPoint<S>, SecrecyError> {
    secrecy::secrecy_capacity(config, scenario, mu, model)
}

pub fn optimal_mu<S: Scalar>(
    config: &SystemConfig<S>,
    scenario: AttackScenario,
    model: &LeakageModel<S>,
) -> Result<MuOptimum<S>, OptimizeError> {
    optimal_mu_with(config, scenario, model, &MuSearch::default())
}

pub fn optimal_mu_with<S: Scalar>(
    config: &SystemConfig<S>,
    scenario: AttackScenario,
    model: &LeakageModel<S>,
    search: &MuSearch,
) -> Result<MuOptimum<S>, OptimizeError> {
    if config.source.kind != SourceKind::WeakCoherent {
        return Err(OptimizeError::NotWeakCoherent);
    }
    if !(search.lo > 0.0 && search.hi > search.lo) {
        return Err(OptimizeError::BadBracket(search.lo, search.hi));
    }
    // Surfaces constraint violations before the search swallows them.
    capacity_at(config, scenario, model, S::lit(search.lo))?;
    let eval = |mu: S| {
        capacity_at(config, scenario, model, mu)
            .map(|p| p.capacity_s)
            .unwrap_or(S::neg_infinity())
    };

    let grid = mu_grid(search);
    let values: Vec<S> = grid.iter().map(|&m| eval(S::lit(m))).collect();
    let last = values.len() - 1;
    let peaks = (0..values.len())
        .filter(|&i| {
            let left = i == 0 || values[i] > values[i - 1];
            let right = i == last || values[i] >= values[i + 1];
            left && right
        })
        .count();
    let (best_i, best_s) =
        values
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, S::neg_infinity()),
                |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
            );
    let multimodal = peaks > 1;

    let tol = S::lit(search.tol);
    let (lo, hi) = if multimodal {
        (grid[best_i.saturating_sub(1)], grid[(best_i + 1).min(last)])
    } else {
        (search.lo, search.hi)
    };
    let (mut mu, mut s) = golden_section_max(eval, S::lit(lo), S::lit(hi), tol);
    if best_s > s {
        mu = S::lit(grid[best_i]);
        s = best_s;
    }
    Ok(MuOptimum {
        mu_opt: mu,
        s_opt: s,
        no_capacity: s <= S::zero(),
        multimodal,
    })
}

/// Best operating point at the configured distance: `mu_opt` for WCS, the
/// fixed capacity for SPS.
pub fn best_point<S: Scalar>(
    config: &SystemConfig<S>,
    scenario: AttackScenario,
    model: &LeakageModel<S>,
) -> Result<SecrecyPoint<S>, OptimizeError> {
    let mu = match config.source.kind {
        SourceKind::WeakCoherent => optimal_mu(config, scenario, model)?.mu_opt,
        SourceKind::SinglePhoton => S::one(),
    };
    Ok(capacity_at(config, scenario, model, mu)?)
}

fn at_distance<S: Scalar>(config: &SystemConfig<S>, km: S) -> SystemConfig<S> {
    let mut c = *config;
    c.channel.fiber_length_km = km;
    c
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeResult<S = f64> {
    pub km: S,
    /// Capacity was still positive at the search ceiling.
    pub saturated: bool,
}

pub const DEFAULT_RANGE_CEILING_KM: f64 = 300.0;

pub fn max_range<S: Scalar>(
    config: &SystemConfig<S>,
    scenario: AttackScenario,
    model: &LeakageModel<S>,
) -> Result<RangeResult<S>, OptimizeError> {
    max_range_with(
        config,
        scenario,
        model,
        S::lit(DEFAULT_RANGE_CEILING_KM),
        S::lit(0.01),
    )
}

/// Largest distance with positive capacity, bisected to `resolution` km.
pub fn max_range_with<S: Scalar>(
    config: &SystemConfig<S>,
    scenario: AttackScenario,
    model: &LeakageModel<S>,
    ceiling: S,
    resolution: S,
) -> Result<RangeResult<S>, OptimizeError> {
    let positive = |km: S| -> Result<bool, OptimizeError> {
        Ok(best_point(&at_distance(config, km), scenario, model)?.capacity_s > S::zero())
    };
    let s0 = best_point(&at_distance(config, S::zero()), scenario, model)?.capacity_s;
    if !(s0 > S::zero()) {
        return Err(OptimizeError::NoCapacity(s0.as_f64()));
    }
    if positive(ceiling)? {
        return Ok(RangeResult {
            km: ceiling,
            saturated: true,
        });
    }
    let (mut lo, mut hi) = (S::zero(), ceiling);
    while hi - lo > resolution {
        let mid = (lo + hi) / S::lit(2.0);
        if positive(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(RangeResult {
        km: lo,
        saturated: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint<S = f64> {
    pub l_km: S,
    pub alpha: S,
    /// `mu_opt` for WCS, 1.0 for SPS.
    pub mu: S,
    pub capacity_s: S,
    pub rate_r: S,
    /// Set when this point failed; the numeric fields are then NaN.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateCurve<S = f64> {
    pub points: Vec<CurvePoint<S>>,
    pub config_digest: String,
}

/// Distances `0, step, 2 step, ...` up to and including `max_km`.
pub fn distance_grid(step_km: f64, max_km: f64) -> Vec<f64> {
    let n = (max_km / step_km + 1e-9).floor() as usize;
    (0..=n).map(|i| i as f64 * step_km).collect()
}

pub fn rate_curve<S: Scalar>(
    config: &SystemConfig<S>,
    scenario: AttackScenario,
    distances: &[S],
    model: &LeakageModel<S>,
) -> Result<RateCurve<S>, OptimizeError> {
    if distances.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(OptimizeError::UnsortedDistances);
    }
    let points = distances
        .par_iter()
        .map(|&km| {
            let c = at_distance(config, km);
            match best_point(&c, scenario, model) {
                Ok(p) => CurvePoint {
                    l_km: km,
                    alpha: p.alpha,
                    mu: p.mu_used,
                    capacity_s: p.capacity_s,
                    rate_r: p.rate_r,
                    error: None,
                },
                Err(e) => CurvePoint {
                    l_km: km,
                    alpha: c.alpha(),
                    mu: S::nan(),
                    capacity_s: S::nan(),
                    rate_r: S::nan(),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(RateCurve {
        points,
        config_digest: config.cast::<f64>().digest(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{AuthSpend, SystemConfigF64};

    fn cfg() -> SystemConfigF64 {
        SystemConfigF64::default()
    }

    fn model(c: &SystemConfigF64) -> LeakageModel {
        LeakageModel::from_security(&c.security)
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, fx) = golden_section_max(|x: f64| -(x - 0.37).powi(2), 0.0, 3.0, 1e-10);
        assert!((x - 0.37).abs() < 1e-8);
        assert!(fx <= 0.0 && fx > -1e-15);
    }

    #[test]
    fn optimum_dominates_probes_and_grid() {
        let c = cfg();
        let m = model(&c);
        let s = AttackScenario::AttenuationIntact;
        let opt = optimal_mu(&c, s, &m).unwrap();
        let at = |mu: f64| secrecy::secrecy_capacity(&c, s, mu, &m).unwrap().capacity_s;
        assert!(opt.s_opt >= at(0.1) && opt.s_opt >= at(1.0));
        for mu in mu_grid(&MuSearch::default()) {
            assert!(opt.s_opt >= at(mu) - 1e-12 * at(mu).abs(), "mu = {mu}");
        }
        assert!(opt.mu_opt > 0.0 && opt.mu_opt < 3.0);
        assert!(!opt.multimodal);
    }

    #[test]
    fn first_order_optimality() {
        // Fixed authentication spend keeps S smooth in mu.
        let mut c = cfg();
        c.security.auth_spend = AuthSpend::Fixed(5000.0);
        let m = model(&c);
        for s in [
            AttackScenario::AttenuationIntact,
            AttackScenario::AttenuationEliminated,
        ] {
            let opt = optimal_mu(&c, s, &m).unwrap();
            let h = 1e-4 * opt.mu_opt;
            let at = |mu: f64| secrecy::secrecy_capacity(&c, s, mu, &m).unwrap().capacity_s;
            let deriv = (at(opt.mu_opt + h) - at(opt.mu_opt - h)) / (2.0 * h);
            assert!(deriv.abs() <= 1e-6 * opt.s_opt.abs(), "{s}: {deriv}");
        }
    }

    #[test]
    fn optimizer_is_deterministic_and_bracket_independent() {
        let c = cfg();
        let m = model(&c);
        let s = AttackScenario::AttenuationIntact;
        let a = optimal_mu(&c, s, &m).unwrap();
        assert_eq!(a, optimal_mu(&c, s, &m).unwrap());
        for (lo, hi) in [(1e-3, 2.0), (0.01, 1.0), (0.05, 3.0)] {
            let search = MuSearch {
                lo,
                hi,
                ..MuSearch::default()
            };
            let b = optimal_mu_with(&c, s, &m, &search).unwrap();
            assert!(
                (a.mu_opt - b.mu_opt).abs() < 1e-5,
                "{lo}..{hi}: {} vs {}",
                a.mu_opt,
                b.mu_opt
            );
        }
    }

    #[test]
    fn mu_opt_regression_fixtures() {
        // Recorded fixtures at 10 and 40 km; cross-checked with a 10x
        // tighter golden-section run.
        let c = cfg();
        let m = model(&c);
        let s = AttackScenario::AttenuationIntact;
        for km in [10.0, 40.0] {
            let ck = at_distance(&c, km);
            let opt = optimal_mu(&ck, s, &m).unwrap();
            let tight = optimal_mu_with(
                &ck,
                s,
                &m,
                &MuSearch {
                    tol: 1e-10,
                    ..MuSearch::default()
                },
            )
            .unwrap();
            assert!((opt.mu_opt - tight.mu_opt).abs() < 1e-6);
            assert!(opt.mu_opt > 0.0 && opt.mu_opt < 3.0);
        }
    }

    #[test]
    fn sps_is_rejected() {
        let mut c = cfg();
        c.source.kind = SourceKind::SinglePhoton;
        assert_eq!(
            optimal_mu(&c, AttackScenario::AttenuationIntact, &model(&c)),
            Err(OptimizeError::NotWeakCoherent)
        );
    }

    #[test]
    fn range_saturates_for_lossless_processing() {
        let mut c = cfg();
        c.source.kind = SourceKind::SinglePhoton;
        c.channel.intrinsic_error_rc = 0.0;
        c.detector.dark_count_rd = 0.0;
        c.security.g_pa = 1;
        c.security.auth_spend = AuthSpend::Fixed(0.0);
        c.security.leakage_t_factor = 0.0;
        let r = max_range_with(
            &c,
            AttackScenario::AttenuationEliminated,
            &model(&c),
            100.0,
            0.01,
        )
        .unwrap();
        assert!(r.saturated);
        assert_eq!(r.km, 100.0);
        // Far beyond the point where fewer than one bit is sifted per block.
        assert!(
            !max_range(&c, AttackScenario::AttenuationEliminated, &model(&c))
                .unwrap()
                .saturated
        );
    }

    #[test]
    fn sps_range_exceeds_56_km() {
        let mut c = cfg();
        c.source.kind = SourceKind::SinglePhoton;
        let r = max_range(&c, AttackScenario::AttenuationIntact, &model(&c)).unwrap();
        assert!(!r.saturated && r.km > 56.0, "{}", r.km);
    }

    #[test]
    fn huge_privacy_overhead_has_no_capacity() {
        let mut c = cfg();
        c.source.kind = SourceKind::SinglePhoton;
        c.security.g_pa = u32::MAX;
        assert!(matches!(
            max_range(&c, AttackScenario::AttenuationIntact, &model(&c)),
            Err(OptimizeError::NoCapacity(_))
        ));
    }

    #[test]
    fn curves_scale_with_pulse_rate() {
        let mut c = cfg();
        c.source.kind = SourceKind::SinglePhoton;
        let d = distance_grid(5.0, 60.0);
        let fast = rate_curve(&c, AttackScenario::AttenuationIntact, &d, &model(&c)).unwrap();
        c.source.pulse_period_tau = 2e-4;
        let slow = rate_curve(&c, AttackScenario::AttenuationIntact, &d, &model(&c)).unwrap();
        for (f, s) in fast.points.iter().zip(&slow.points) {
            assert_eq!(f.mu, 1.0);
            assert_eq!(f.capacity_s, s.capacity_s);
            if f.capacity_s > 0.0 {
                assert!((f.rate_r / s.rate_r - 200.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn curve_points_carry_errors() {
        let mut c = cfg();
        c.detector.efficiency_eta = 0.25;
        let d = [0.0, 10.0];
        let curve = rate_curve(&c, AttackScenario::AttenuationEliminated, &d, &model(&c)).unwrap();
        assert!(curve.points.iter().all(|p| p.error.is_some()));
        assert_eq!(
            rate_curve(
                &c,
                AttackScenario::AttenuationIntact,
                &[1.0, 1.0],
                &model(&c)
            ),
            Err(OptimizeError::UnsortedDistances)
        );
    }

    #[test]
    fn distance_grid_includes_endpoint() {
        let g = distance_grid(0.5, 60.0);
        assert_eq!(g.len(), 121);
        assert_eq!(*g.last().unwrap(), 60.0);
    }
}
