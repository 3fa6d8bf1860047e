//! Privacy-amplification compression for multi-photon pulses, the key-length
//! ledger, secrecy capacities and rates, and the information-bound report.

use thiserror::Error;

use crate::hashing::{self, HashError};
use crate::params::{
    constraint_check, AttackScenario, AuthSpend, SecurityParams, SourceKind, SystemConfig,
};
use crate::photonics::{self, SiftForm, SiftStats};
use crate::protocol::TranscriptLedger;
use crate::scalar::{binary_entropy, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SecrecyError {
    #[error("{scenario} regime requires y {rel} {bound:.6}, got y = {y:.6}")]
    ConstraintViolated {
        scenario: AttackScenario,
        y: f64,
        bound: f64,
        rel: &'static str,
    },
    #[error("transcript-measured leakage needs a session transcript")]
    MissingTranscript,
    #[error(transparent)]
    Hash(#[from] HashError),
}

/// How reconciliation leakage `q = Q e_T` and `t = T e_T` are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeakageKind {
    /// `e_T + q = x n h2(e_T / n)`: a reconciliation running `x` times the
    /// Shannon limit.
    AnalyticShannon,
    /// `q` is the parity count disclosed in a recorded session.
    TranscriptMeasured,
    /// Fixed `Q` and `T`.
    ConstantFactors,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakageModel<S = f64> {
    pub kind: LeakageKind,
    /// `Q`; only read by [`LeakageKind::ConstantFactors`].
    pub q: S,
    /// `T`, leaked bits per error (a stand-in default of 1).
    pub t: S,
    /// Carried for a future exact `T` expression; unused.
    pub epsilon: S,
}

impl<S: Scalar> LeakageModel<S> {
    pub fn analytic_shannon(t: S, epsilon: S) -> Self {
        LeakageModel {
            kind: LeakageKind::AnalyticShannon,
            q: S::zero(),
            t,
            epsilon,
        }
    }

    pub fn transcript_measured(t: S, epsilon: S) -> Self {
        LeakageModel {
            kind: LeakageKind::TranscriptMeasured,
            q: S::zero(),
            t,
            epsilon,
        }
    }

    pub fn constant(q: S, t: S) -> Self {
        LeakageModel {
            kind: LeakageKind::ConstantFactors,
            q,
            t,
            epsilon: S::zero(),
        }
    }

    /// Analytic model with `T` and `epsilon` from the security parameters.
    pub fn from_security(sec: &SecurityParams<S>) -> Self {
        Self::analytic_shannon(sec.leakage_t_factor, sec.epsilon)
    }
}

/// Resolved leakage for one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leakage<S = f64> {
    pub q_factor: S,
    pub t_factor: S,
    /// `q` in bits.
    pub q_bits: S,
    /// `t` in bits.
    pub t_bits: S,
    /// Set when `e_T = 0`, so `Q` cannot be formed from `q / e_T`.
    pub zero_errors: bool,
}

impl<S: Scalar> Leakage<S> {
    /// `f = 1 + Q + T`.
    pub fn f(&self) -> S {
        S::one() + self.q_factor + self.t_factor
    }
}

pub fn leakage_factors<S: Scalar>(
    stats: &SiftStats<S>,
    sec: &SecurityParams<S>,
    model: &LeakageModel<S>,
    transcript: Option<&TranscriptLedger>,
) -> Result<Leakage<S>, SecrecyError> {
    let e = stats.expected_errors_et;
    let n = stats.expected_sifted_n;
    let zero_errors = e <= S::zero();
    let q_bits = match model.kind {
        LeakageKind::AnalyticShannon => {
            if zero_errors || n <= S::zero() {
                S::zero()
            } else {
                sec.shannon_deficit_x * n * binary_entropy(e / n) - e
            }
        }
        LeakageKind::TranscriptMeasured => {
            let ledger = transcript.ok_or(SecrecyError::MissingTranscript)?;
            S::from_count(ledger.parity_bits_disclosed)
        }
        LeakageKind::ConstantFactors => model.q * e.max(S::zero()),
    };
    let q_factor = match model.kind {
        LeakageKind::ConstantFactors => model.q,
        _ if zero_errors => S::zero(),
        _ => q_bits / e,
    };
    Ok(Leakage {
        q_factor,
        t_factor: model.t,
        q_bits,
        t_bits: model.t * e.max(S::zero()),
        zero_errors,
    })
}

/// Multi-photon compression for one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuMax<S = f64> {
    /// `nu` in bits for the configured block size.
    pub nu: S,
    /// Rescaled `2 nu / m`, independent of the block size.
    pub nu_tilde: S,
    /// Set when a negative value from cancellation was clamped to zero.
    pub clamped: bool,
}

fn require_constraint<S: Scalar>(
    config: &SystemConfig<S>,
    scenario: AttackScenario,
) -> Result<S, SecrecyError> {
    let check = constraint_check(config, scenario);
    if !check.holds {
        return Err(SecrecyError::ConstraintViolated {
            scenario,
            y: check.y,
            bound: check.bound,
            rel: match scenario {
                AttackScenario::AttenuationEliminated => ">",
                AttackScenario::AttenuationIntact => "<",
            },
        });
    }
    Ok(match scenario {
        AttackScenario::AttenuationEliminated => config.detector.efficiency_eta,
        AttackScenario::AttenuationIntact => config.detector.efficiency_eta * config.alpha(),
    })
}

/// Rescaled compression `2 nu_max / m` for a weak-coherent source.
fn nu_tilde_raw<S: Scalar>(mu: S, y: S, scenario: AttackScenario) -> S {
    let one = S::one();
    let two = S::lit(2.0);
    match scenario {
        AttackScenario::AttenuationEliminated => {
            // psi2 - (1-y)^-1 { e^-y mu - e^-mu [1 + mu (1-y)] }; the brace is
            // rewritten as e^-mu (expm1(mu d) - mu d) with d = 1 - y to stay
            // finite at y = 1.
            let d = one - y;
            let brace_over_d = if d == S::zero() {
                S::zero()
            } else {
                (-mu).exp() * ((mu * d).exp_m1() - mu * d) / d
            };
            photonics::psi_geq2(mu) - brace_over_d
        }
        AttackScenario::AttenuationIntact => {
            let r = mu / S::SQRT_2();
            photonics::psi_geq2(mu) * y + one
                - (-mu).exp() * (S::SQRT_2() * r.sinh() + two * r.cosh() - one)
        }
    }
}

/// Multi-photon compression `nu_max(mu)` for the regime; zero for SPS.
pub fn nu_max<S: Scalar>(
    mu: S,
    config: &SystemConfig<S>,
    scenario: AttackScenario,
) -> Result<NuMax<S>, SecrecyError> {
    if config.source.kind == SourceKind::SinglePhoton {
        return Ok(NuMax {
            nu: S::zero(),
            nu_tilde: S::zero(),
            clamped: false,
        });
    }
    let y = require_constraint(config, scenario)?;
    let raw = nu_tilde_raw(mu, y, scenario);
    let clamped = raw < S::zero();
    let nu_tilde = raw.max(S::zero());
    Ok(NuMax {
        nu: config.m() / S::lit(2.0) * nu_tilde,
        nu_tilde,
        clamped,
    })
}

/// Authentication secret bits per block: one index per authenticated
/// message (Bob's sift report, Alice's basis reply, both equivalence tags)
/// plus the equivalence hash key, for a block with `n` sifted bits.
pub fn auth_spend_estimate<S: Scalar>(config: &SystemConfig<S>, n: S) -> Result<S, HashError> {
    let sec = &config.security;
    let detections = (S::lit(2.0) * n).max(S::zero());
    let index_bits = ceil_log2(config.block.raw_block_m);
    let c = |bits: S| -> u64 { bits.round().as_f64().max(4.0) as u64 };
    let bob = hashing::wc_index_length(sec.g_auth, c(detections * S::from_count(1 + index_bits)))?;
    let alice = hashing::wc_index_length(sec.g_auth, c(detections))?;
    let equiv = hashing::wc_index_length(sec.g_ec, c(n))?;
    // Each party sends its equivalence tag as an authenticated message.
    let tag_msgs =
        2 * hashing::wc_index_length(sec.g_auth, hashing::family_size(sec.g_ec as usize))?;
    Ok(S::from_count(bob + alice + equiv + tag_msgs))
}

pub fn ceil_log2(m: u64) -> u64 {
    if m <= 1 {
        0
    } else {
        64 - (m - 1).leading_zeros() as u64
    }
}

fn auth_spend<S: Scalar>(config: &SystemConfig<S>, n: S) -> Result<S, HashError> {
    match config.security.auth_spend {
        AuthSpend::Fixed(a) => Ok(a),
        AuthSpend::PerBlockEstimate => auth_spend_estimate(config, n),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecrecyPoint<S = f64> {
    pub capacity_s: S,
    /// `max(S, 0) / tau` in bits per second.
    pub rate_r: S,
    pub mu_used: S,
    pub alpha: S,
    pub scenario: AttackScenario,
    pub f_factor: S,
    pub nu_tilde: S,
    pub auth_spend_a: S,
    pub nu_clamped: bool,
}

impl<S: Scalar> SecrecyPoint<S> {
    /// Key generation is possible only when `S > 0`.
    pub fn has_capacity(&self) -> bool {
        self.capacity_s > S::zero()
    }
}

/// Capacity with the leakage factor `f` and spend `a` given directly.
pub fn secrecy_capacity_with<S: Scalar>(
    config: &SystemConfig<S>,
    scenario: AttackScenario,
    mu: S,
    f: S,
    a: S,
) -> Result<SecrecyPoint<S>, SecrecyError> {
    let half = S::lit(0.5);
    let rc = config.channel.intrinsic_error_rc;
    let rd = config.detector.dark_count_rd;
    let alpha = config.alpha();
    let overhead = (S::from_count(config.security.g_pa as u64) + a) / config.m();
    let dark = (S::one() - f / S::lit(2.0)) * rd;
    // psi_>=1(eta mu alpha) for WCS, eta alpha for SPS.
    let signal = photonics::signal_click_probability(config, mu);
    let nu = nu_max(mu, config, scenario)?;
    let capacity_s = half * (signal * (S::one() - f * rc) + dark - nu.nu_tilde) - overhead;
    Ok(SecrecyPoint {
        capacity_s,
        rate_r: capacity_s.max(S::zero()) / config.source.pulse_period_tau,
        mu_used: match config.source.kind {
            SourceKind::WeakCoherent => mu,
            SourceKind::SinglePhoton => S::one(),
        },
        alpha,
        scenario,
        f_factor: f,
        nu_tilde: nu.nu_tilde,
        auth_spend_a: a,
        nu_clamped: nu.clamped,
    })
}

/// Effective secrecy capacity `S = L / m` and rate at mean photon number `mu`.
pub fn secrecy_capacity<S: Scalar>(
    config: &SystemConfig<S>,
    scenario: AttackScenario,
    mu: S,
    model: &LeakageModel<S>,
) -> Result<SecrecyPoint<S>, SecrecyError> {
    let stats = photonics::expected_sift_stats_at(config, mu, SiftForm::Simplified);
    let leak = leakage_factors(&stats, &config.security, model, None)?;
    let a = auth_spend(config, stats.expected_sifted_n)?;
    secrecy_capacity_with(config, scenario, mu, leak.f(), a)
}

/// The subtraction ledger defining the final key length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyAmpBudget<S = f64> {
    pub n: S,
    pub e_t: S,
    pub q: S,
    pub t: S,
    pub nu: S,
    pub g_pa: u32,
    /// Authentication secret bits charged to this block.
    pub a: S,
}

impl<S: Scalar> PrivacyAmpBudget<S> {
    /// `n - (e_T + q + t + nu) - (a + g_pa)`, possibly negative.
    pub fn raw_length(&self) -> S {
        self.n - (self.e_t + self.q + self.t + self.nu) - (self.a + S::from_count(self.g_pa as u64))
    }

    /// Privacy-amplification output length before the authentication spend.
    pub fn pa_length(&self) -> S {
        self.raw_length() + self.a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FinalKeyLength {
    pub bits: u64,
    pub zero_capacity: bool,
}

pub fn final_key_length<S: Scalar>(budget: &PrivacyAmpBudget<S>) -> FinalKeyLength {
    let raw = budget.raw_length().floor();
    if raw.is_nan() || raw <= S::zero() {
        FinalKeyLength {
            bits: 0,
            zero_capacity: true,
        }
    } else {
        FinalKeyLength {
            bits: raw.as_f64() as u64,
            zero_capacity: false,
        }
    }
}

/// Expected ledger for one block at mean photon number `mu`.
pub fn analytic_budget<S: Scalar>(
    config: &SystemConfig<S>,
    scenario: AttackScenario,
    mu: S,
    model: &LeakageModel<S>,
) -> Result<PrivacyAmpBudget<S>, SecrecyError> {
    let stats = photonics::expected_sift_stats_at(config, mu, SiftForm::Simplified);
    let leak = leakage_factors(&stats, &config.security, model, None)?;
    Ok(PrivacyAmpBudget {
        n: stats.expected_sifted_n,
        e_t: stats.expected_errors_et,
        q: leak.q_bits,
        t: leak.t_bits,
        nu: nu_max(mu, config, scenario)?.nu,
        g_pa: config.security.g_pa,
        a: auth_spend(config, stats.expected_sifted_n)?,
    })
}

pub const SECRECY_CATEGORY: &str = "secrecy in the sense of privacy amplification";

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub key_len: u64,
    /// Upper bound on Eve's expected information about the final key, bits.
    pub eve_information_bound: f64,
    /// Forgery probability for a fresh single-use tag.
    pub forgery_bound: f64,
    /// Forgery probability after one observed message/tag pair.
    pub reuse_forgery_bound: f64,
    /// Probability that two different strings pass the equivalence check.
    pub equivalence_miss_bound: f64,
    pub category: &'static str,
}

pub fn secrecy_bounds_report<S: Scalar>(sec: &SecurityParams<S>, key_len: u64) -> BoundsReport {
    let p = |g: u32| 2f64.powi(-(g as i32));
    BoundsReport {
        key_len,
        eve_information_bound: p(sec.g_pa) / std::f64::consts::LN_2,
        forgery_bound: p(sec.g_auth),
        reuse_forgery_bound: 2.0 * p(sec.g_auth),
        equivalence_miss_bound: p(sec.g_ec),
        category: SECRECY_CATEGORY,
    }
}
