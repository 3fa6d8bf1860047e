//! System parameters, the sectioned `key = value` config format, and validation.
//!
//! ```text
//! # comment
//! [source]
//! kind = WCS            # or SPS
//! mu = 0.1
//! pulse_period_tau = 1e-6
//! ```
//!
//! Sections: `[source]`, `[channel]`, `[detector]`, `[security]`, `[block]`,
//! `[attack]`. Every key is optional and defaults to the reference parameter
//! set (see [`SystemConfig::default`]). Unknown sections or keys are errors.
//! Integer keys accept scientific notation when the value is integral
//! (`raw_block_m = 2e8`).

use std::fmt::{self, Write as _};
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::photonics;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceKind {
    WeakCoherent,
    SinglePhoton,
}

/// Whether the eavesdropper can remove line attenuation between herself and Bob.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttackScenario {
    AttenuationIntact,
    AttenuationEliminated,
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceKind::WeakCoherent => "WCS",
            SourceKind::SinglePhoton => "SPS",
        })
    }
}

impl fmt::Display for AttackScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttackScenario::AttenuationIntact => "intact",
            AttackScenario::AttenuationEliminated => "eliminated",
        })
    }
}

impl std::str::FromStr for SourceKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match normalize(s).as_str() {
            "wcs" | "weakcoherent" => Ok(SourceKind::WeakCoherent),
            "sps" | "singlephoton" => Ok(SourceKind::SinglePhoton),
            _ => Err(format!("unknown source kind `{s}` (expected WCS or SPS)")),
        }
    }
}

impl std::str::FromStr for AttackScenario {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match normalize(s).as_str() {
            "intact" | "attenuationintact" => Ok(AttackScenario::AttenuationIntact),
            "eliminated" | "attenuationeliminated" => Ok(AttackScenario::AttenuationEliminated),
            _ => Err(format!(
                "unknown attack scenario `{s}` (expected intact or eliminated)"
            )),
        }
    }
}

fn normalize(s: &str) -> String {
    s.chars()
        .filter(|c| !matches!(c, '_' | '-' | ' '))
        .flat_map(char::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec<S = f64> {
    pub kind: SourceKind,
    /// Mean photon number per pulse; unused for single-photon sources.
    pub mu: S,
    /// Bit-cell period in seconds.
    pub pulse_period_tau: S,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec<S = f64> {
    /// Fiber attenuation in dB/km.
    pub attenuation_a: S,
    /// Bulk loss magnitude in dB (non-negative; a loss, never a gain).
    pub bulk_loss_kappa: S,
    pub fiber_length_km: S,
    pub intrinsic_error_rc: S,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSpec<S = f64> {
    pub efficiency_eta: S,
    /// Dark-count probability per pulse period.
    pub dark_count_rd: S,
}

/// Authentication secret bits charged against each block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AuthSpend<S = f64> {
    /// Sum of index lengths over the block's authenticated messages.
    PerBlockEstimate,
    Fixed(S),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityParams<S = f64> {
    pub g_auth: u32,
    pub g_ec: u32,
    pub g_pa: u32,
    pub epsilon: S,
    pub shannon_deficit_x: S,
    /// Expected errors per error-correction block.
    pub rho: S,
    /// Consecutive matching validation parities required.
    pub n2_required: u32,
    pub qber_threshold: S,
    pub qber_sample_fraction: S,
    /// Leaked bits per error attributed to the eavesdropper's error-correction
    /// side information (`T`).
    pub leakage_t_factor: S,
    pub auth_spend: AuthSpend<S>,
    /// Failed validation passes assumed by the load model.
    pub expected_validation_failures: u32,
    /// Draw a fresh shuffle before every error-correction iteration, which
    /// splits error pairs that survive in one block. Off by default.
    pub reshuffle_each_iteration: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockSpec<S = f64> {
    pub raw_block_m: u64,
    pub machine_word_w: u32,
    pub overhead_lb0: u64,
    /// Sifted length for the load budget; derived from the channel when absent.
    pub sifted_n: Option<u64>,
    /// Initial error count for the load budget; derived when absent.
    pub initial_errors_e0: Option<S>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackSpec<S = f64> {
    pub scenario: AttackScenario,
    /// Fraction of pulses subjected to intercept-resend in simulation.
    pub eve_intercept_fraction_phi: S,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig<S = f64> {
    pub source: SourceSpec<S>,
    pub channel: ChannelSpec<S>,
    pub detector: DetectorSpec<S>,
    pub security: SecurityParams<S>,
    pub block: BlockSpec<S>,
    pub attack: AttackSpec<S>,
}

impl<S: Scalar> Default for SystemConfig<S> {
    /// Reference parameter set: 1 MHz weak-coherent source at mu = 0.1,
    /// 10 km of 0.3 dB/km fiber with 5 dB bulk loss, 50% detectors.
    fn default() -> Self {
        let l = S::lit;
        SystemConfig {
            source: SourceSpec {
                kind: SourceKind::WeakCoherent,
                mu: l(0.1),
                pulse_period_tau: l(1e-6),
            },
            channel: ChannelSpec {
                attenuation_a: l(0.3),
                bulk_loss_kappa: l(5.0),
                fiber_length_km: l(10.0),
                intrinsic_error_rc: l(0.01),
            },
            detector: DetectorSpec {
                efficiency_eta: l(0.5),
                dark_count_rd: l(1e-6),
            },
            security: SecurityParams {
                g_auth: 30,
                g_ec: 30,
                g_pa: 30,
                epsilon: l(1e-9),
                shannon_deficit_x: l(1.16),
                rho: l(0.5),
                n2_required: 30,
                qber_threshold: l(0.05),
                qber_sample_fraction: l(0.05),
                leakage_t_factor: l(1.0),
                auth_spend: AuthSpend::PerBlockEstimate,
                expected_validation_failures: 3,
                reshuffle_each_iteration: false,
            },
            block: BlockSpec {
                raw_block_m: 200_000_000,
                machine_word_w: 64,
                overhead_lb0: 1_000_000,
                sifted_n: None,
                initial_errors_e0: None,
            },
            attack: AttackSpec {
                scenario: AttackScenario::AttenuationIntact,
                eve_intercept_fraction_phi: S::zero(),
            },
        }
    }
}

pub type SystemConfigF32 = SystemConfig<f32>;
pub type SystemConfigF64 = SystemConfig<f64>;

impl<S: Scalar> SystemConfig<S> {
    /// Converts every real field to another scalar type.
    pub fn cast<T: Scalar>(&self) -> SystemConfig<T> {
        let c = |x: S| T::lit(x.as_f64());
        SystemConfig {
            source: SourceSpec {
                kind: self.source.kind,
                mu: c(self.source.mu),
                pulse_period_tau: c(self.source.pulse_period_tau),
            },
            channel: ChannelSpec {
                attenuation_a: c(self.channel.attenuation_a),
                bulk_loss_kappa: c(self.channel.bulk_loss_kappa),
                fiber_length_km: c(self.channel.fiber_length_km),
                intrinsic_error_rc: c(self.channel.intrinsic_error_rc),
            },
            detector: DetectorSpec {
                efficiency_eta: c(self.detector.efficiency_eta),
                dark_count_rd: c(self.detector.dark_count_rd),
            },
            security: SecurityParams {
                g_auth: self.security.g_auth,
                g_ec: self.security.g_ec,
                g_pa: self.security.g_pa,
                epsilon: c(self.security.epsilon),
                shannon_deficit_x: c(self.security.shannon_deficit_x),
                rho: c(self.security.rho),
                n2_required: self.security.n2_required,
                qber_threshold: c(self.security.qber_threshold),
                qber_sample_fraction: c(self.security.qber_sample_fraction),
                leakage_t_factor: c(self.security.leakage_t_factor),
                auth_spend: match self.security.auth_spend {
                    AuthSpend::PerBlockEstimate => AuthSpend::PerBlockEstimate,
                    AuthSpend::Fixed(a) => AuthSpend::Fixed(c(a)),
                },
                expected_validation_failures: self.security.expected_validation_failures,
                reshuffle_each_iteration: self.security.reshuffle_each_iteration,
            },
            block: BlockSpec {
                raw_block_m: self.block.raw_block_m,
                machine_word_w: self.block.machine_word_w,
                overhead_lb0: self.block.overhead_lb0,
                sifted_n: self.block.sifted_n,
                initial_errors_e0: self.block.initial_errors_e0.map(c),
            },
            attack: AttackSpec {
                scenario: self.attack.scenario,
                eve_intercept_fraction_phi: c(self.attack.eve_intercept_fraction_phi),
            },
        }
    }

    /// Channel transmission probability for this configuration.
    pub fn alpha(&self) -> S {
        photonics::transmission_probability(&self.channel)
    }

    pub fn m(&self) -> S {
        S::from_count(self.block.raw_block_m)
    }
}

// ---------------------------------------------------------------------------
// errors and validation

#[derive(Debug, Clone, PartialEq)]
pub struct RangeViolation {
    pub field: &'static str,
    pub value: f64,
    pub expected: &'static str,
}

impl fmt::Display for RangeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} = {} out of range (expected {})",
            self.field, self.value, self.expected
        )
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unknown section [{section}]")]
    UnknownSection { line: usize, section: String },
    #[error("line {line}: unknown key `{key}` in [{section}]")]
    UnknownKey {
        line: usize,
        section: String,
        key: String,
    },
    #[error("{0}")]
    Range(RangeViolation),
}

impl ConfigError {
    /// Field name for range violations.
    pub fn field(&self) -> Option<&'static str> {
        match self {
            ConfigError::Range(v) => Some(v.field),
            _ => None,
        }
    }
}

/// Outcome of checking one attack regime's `y` constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintCheck {
    pub scenario: AttackScenario,
    pub y: f64,
    pub bound: f64,
    pub holds: bool,
}

impl ConstraintCheck {
    pub fn describe(&self) -> String {
        let rel = match self.scenario {
            AttackScenario::AttenuationEliminated => ">",
            AttackScenario::AttenuationIntact => "<",
        };
        format!(
            "{}: y = {:.6} must be {rel} {:.6}: {}",
            self.scenario,
            self.y,
            self.bound,
            if self.holds { "ok" } else { "VIOLATED" }
        )
    }
}

/// `1 - 1/sqrt(2)`: lower bound on `y = eta` when attenuation is eliminated.
pub const ELIMINATED_Y_BOUND: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;

/// `1 - 2^(-1/3)`: upper bound on `y = eta * alpha` when attenuation is intact.
pub fn intact_y_bound() -> f64 {
    1.0 - 2f64.powf(-1.0 / 3.0)
}

/// The `y` constraint for one regime.
pub fn constraint_check<S: Scalar>(
    config: &SystemConfig<S>,
    scenario: AttackScenario,
) -> ConstraintCheck {
    let eta = config.detector.efficiency_eta.as_f64();
    match scenario {
        AttackScenario::AttenuationEliminated => ConstraintCheck {
            scenario,
            y: eta,
            bound: ELIMINATED_Y_BOUND,
            holds: eta > ELIMINATED_Y_BOUND,
        },
        AttackScenario::AttenuationIntact => {
            let y = eta * config.alpha().as_f64();
            let bound = intact_y_bound();
            ConstraintCheck {
                scenario,
                y,
                bound,
                holds: y < bound,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub range_violations: Vec<RangeViolation>,
    pub warnings: Vec<String>,
    pub intact: ConstraintCheck,
    pub eliminated: ConstraintCheck,
}

impl ValidationReport {
    pub fn constraint(&self, scenario: AttackScenario) -> &ConstraintCheck {
        match scenario {
            AttackScenario::AttenuationIntact => &self.intact,
            AttackScenario::AttenuationEliminated => &self.eliminated,
        }
    }

    pub fn ranges_ok(&self) -> bool {
        self.range_violations.is_empty()
    }
}

/// Checks every range and both regime constraints. Pure; never fails.
pub fn validate<S: Scalar>(config: &SystemConfig<S>) -> ValidationReport {
    let range_violations = range_violations(config);
    let mut warnings = Vec::new();
    if config.detector.dark_count_rd.as_f64() > 1e-3 {
        warnings.push(format!(
            "dark_count_rd = {} exceeds 1e-3; the small-dark-count approximations degrade",
            config.detector.dark_count_rd
        ));
    }
    ValidationReport {
        range_violations,
        warnings,
        intact: constraint_check(config, AttackScenario::AttenuationIntact),
        eliminated: constraint_check(config, AttackScenario::AttenuationEliminated),
    }
}

fn range_violations<S: Scalar>(c: &SystemConfig<S>) -> Vec<RangeViolation> {
    let mut out = Vec::new();
    let mut check = |field: &'static str, value: f64, ok: bool, expected: &'static str| {
        if !ok || value.is_nan() {
            out.push(RangeViolation {
                field,
                value,
                expected,
            });
        }
    };
    let f = |x: S| x.as_f64();

    let mu = f(c.source.mu);
    match c.source.kind {
        SourceKind::WeakCoherent => {
            check("mu", mu, mu > 0.0 && mu.is_finite(), "> 0 for a WCS source")
        }
        SourceKind::SinglePhoton => check("mu", mu, mu >= 0.0 && mu.is_finite(), ">= 0"),
    }
    let tau = f(c.source.pulse_period_tau);
    check("pulse_period_tau", tau, tau > 0.0 && tau.is_finite(), "> 0");

    let a = f(c.channel.attenuation_a);
    check("attenuation_A", a, a >= 0.0 && a.is_finite(), ">= 0");
    let kappa = f(c.channel.bulk_loss_kappa);
    check(
        "bulk_loss_kappa",
        kappa,
        kappa >= 0.0 && kappa.is_finite(),
        ">= 0 (loss magnitude)",
    );
    let len = f(c.channel.fiber_length_km);
    check(
        "fiber_length_km",
        len,
        len >= 0.0 && len.is_finite(),
        ">= 0",
    );
    let rc = f(c.channel.intrinsic_error_rc);
    check(
        "intrinsic_error_rc",
        rc,
        (0.0..=1.0).contains(&rc),
        "in [0, 1]",
    );
    if a >= 0.0 && kappa >= 0.0 && len >= 0.0 {
        let alpha = f(c.alpha());
        check(
            "alpha",
            alpha,
            alpha > 0.0 && alpha <= 1.0,
            "in (0, 1]; total channel loss too large",
        );
    }

    let eta = f(c.detector.efficiency_eta);
    check("efficiency_eta", eta, eta > 0.0 && eta <= 1.0, "in (0, 1]");
    let rd = f(c.detector.dark_count_rd);
    check("dark_count_rd", rd, (0.0..1.0).contains(&rd), "in [0, 1)");

    let s = &c.security;
    check("g_auth", s.g_auth as f64, s.g_auth > 0, "> 0");
    check("g_EC", s.g_ec as f64, s.g_ec > 0, "> 0");
    check("g_pa", s.g_pa as f64, s.g_pa > 0, "> 0");
    let eps = f(s.epsilon);
    check("epsilon", eps, eps > 0.0 && eps < 1.0, "in (0, 1)");
    let x = f(s.shannon_deficit_x);
    check("shannon_deficit_x", x, x >= 1.0 && x.is_finite(), ">= 1");
    let rho = f(s.rho);
    check("rho", rho, rho > 0.0 && rho.is_finite(), "> 0");
    check(
        "n2_required",
        s.n2_required as f64,
        s.n2_required > 0,
        "> 0",
    );
    let qt = f(s.qber_threshold);
    check("qber_threshold", qt, (0.0..=1.0).contains(&qt), "in [0, 1]");
    let qs = f(s.qber_sample_fraction);
    check(
        "qber_sample_fraction",
        qs,
        qs > 0.0 && qs < 1.0,
        "in (0, 1)",
    );
    let t = f(s.leakage_t_factor);
    check("leakage_t_factor", t, t >= 0.0 && t.is_finite(), ">= 0");
    if let AuthSpend::Fixed(a) = s.auth_spend {
        let a = f(a);
        check("auth_spend_a", a, a >= 0.0 && a.is_finite(), ">= 0");
    }

    let b = &c.block;
    check(
        "raw_block_m",
        b.raw_block_m as f64,
        b.raw_block_m >= 1 << 10,
        ">= 1024",
    );
    check(
        "machine_word_w",
        b.machine_word_w as f64,
        matches!(b.machine_word_w, 8 | 16 | 32 | 64 | 128),
        "one of 8, 16, 32, 64, 128",
    );
    if let Some(n) = b.sifted_n {
        check("sifted_n", n as f64, n > 0, "> 0");
    }
    if let Some(e0) = b.initial_errors_e0 {
        let e0 = f(e0);
        check("initial_errors_e0", e0, e0 > 0.0 && e0.is_finite(), "> 0");
    }

    let phi = f(c.attack.eve_intercept_fraction_phi);
    check(
        "eve_intercept_fraction_phi",
        phi,
        (0.0..=1.0).contains(&phi),
        "in [0, 1]",
    );
    out
}

// ---------------------------------------------------------------------------
// parsing and serialization

const SECTIONS: [&str; 6] = [
    "source", "channel", "detector", "security", "block", "attack",
];

fn parse_real(line: usize, key: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse::<f64>().map_err(|_| ConfigError::Parse {
        line,
        msg: format!("`{key}`: expected a number, got `{v}`"),
    })
}

fn parse_int<T: TryFrom<u64>>(line: usize, key: &str, v: &str) -> Result<T, ConfigError> {
    let bad = |why: &str| ConfigError::Parse {
        line,
        msg: format!("`{key}`: expected {why}, got `{v}`"),
    };
    let n = match v.parse::<u64>() {
        Ok(n) => n,
        Err(_) => {
            let x = parse_real(line, key, v)?;
            if x < 0.0 || x.fract() != 0.0 || x >= u64::MAX as f64 {
                return Err(bad("a non-negative integer"));
            }
            x as u64
        }
    };
    T::try_from(n).map_err(|_| bad("a smaller integer"))
}

/// Parses config text, applying defaults, then rejects out-of-range fields.
pub fn parse_config(text: &str) -> Result<SystemConfig, ConfigError> {
    let mut c = SystemConfig::<f64>::default();
    let mut section: Option<&str> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or(ConfigError::Parse {
                line,
                msg: format!("malformed section header `{body}`"),
            })?;
            let name = name.trim();
            section = Some(
                SECTIONS
                    .iter()
                    .copied()
                    .find(|s| *s == name)
                    .ok_or_else(|| ConfigError::UnknownSection {
                        line,
                        section: name.to_string(),
                    })?,
            );
            continue;
        }
        let (key, value) = body.split_once('=').ok_or(ConfigError::Parse {
            line,
            msg: format!("expected `key = value`, got `{body}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section.ok_or(ConfigError::Parse {
            line,
            msg: format!("key `{key}` outside any section"),
        })?;
        let real = || parse_real(line, key, value);
        let unknown = || ConfigError::UnknownKey {
            line,
            section: sec.to_string(),
            key: key.to_string(),
        };
        match (sec, key) {
            ("source", "kind") => {
                c.source.kind = value
                    .parse()
                    .map_err(|msg| ConfigError::Parse { line, msg })?
            }
            ("source", "mu") => c.source.mu = real()?,
            ("source", "pulse_period_tau") => c.source.pulse_period_tau = real()?,
            ("channel", "attenuation_A") => c.channel.attenuation_a = real()?,
            ("channel", "bulk_loss_kappa") => c.channel.bulk_loss_kappa = real()?,
            ("channel", "fiber_length_km") => c.channel.fiber_length_km = real()?,
            ("channel", "intrinsic_error_rc") => c.channel.intrinsic_error_rc = real()?,
            ("detector", "efficiency_eta") => c.detector.efficiency_eta = real()?,
            ("detector", "dark_count_rd") => c.detector.dark_count_rd = real()?,
            ("security", "g_auth") => c.security.g_auth = parse_int(line, key, value)?,
            ("security", "g_EC") => c.security.g_ec = parse_int(line, key, value)?,
            ("security", "g_pa") => c.security.g_pa = parse_int(line, key, value)?,
            ("security", "epsilon") => c.security.epsilon = real()?,
            ("security", "shannon_deficit_x") => c.security.shannon_deficit_x = real()?,
            ("security", "rho") => c.security.rho = real()?,
            ("security", "n2_required") => c.security.n2_required = parse_int(line, key, value)?,
            ("security", "qber_threshold") => c.security.qber_threshold = real()?,
            ("security", "qber_sample_fraction") => c.security.qber_sample_fraction = real()?,
            ("security", "leakage_t_factor") => c.security.leakage_t_factor = real()?,
            ("security", "auth_spend_a") => c.security.auth_spend = AuthSpend::Fixed(real()?),
            ("security", "expected_validation_failures") => {
                c.security.expected_validation_failures = parse_int(line, key, value)?
            }
            ("security", "reshuffle_each_iteration") => {
                c.security.reshuffle_each_iteration =
                    value.parse().map_err(|_| ConfigError::Parse {
                        line,
                        msg: format!("{key}: expected `true` or `false`, got `{value}`"),
                    })?
            }
            ("block", "raw_block_m") => c.block.raw_block_m = parse_int(line, key, value)?,
            ("block", "machine_word_w") => c.block.machine_word_w = parse_int(line, key, value)?,
            ("block", "overhead_LB0") => c.block.overhead_lb0 = parse_int(line, key, value)?,
            ("block", "sifted_n") => c.block.sifted_n = Some(parse_int(line, key, value)?),
            ("block", "initial_errors_e0") => c.block.initial_errors_e0 = Some(real()?),
            ("attack", "scenario") => {
                c.attack.scenario = value
                    .parse()
                    .map_err(|msg| ConfigError::Parse { line, msg })?
            }
            ("attack", "eve_intercept_fraction_phi") => {
                c.attack.eve_intercept_fraction_phi = real()?
            }
            _ => return Err(unknown()),
        }
    }
    if let Some(v) = range_violations(&c).into_iter().next() {
        return Err(ConfigError::Range(v));
    }
    Ok(c)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<SystemConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

/// Shortest round-tripping decimal form.
fn real_str(x: f64) -> String {
    format!("{x:?}")
}

impl SystemConfig<f64> {
    /// Canonical text form; parses back to an identical config.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let c = self;
        let kind = match c.source.kind {
            SourceKind::WeakCoherent => "WCS",
            SourceKind::SinglePhoton => "SPS",
        };
        let scenario = match c.attack.scenario {
            AttackScenario::AttenuationIntact => "AttenuationIntact",
            AttackScenario::AttenuationEliminated => "AttenuationEliminated",
        };
        let _ = writeln!(s, "[source]");
        let _ = writeln!(s, "kind = {kind}");
        let _ = writeln!(s, "mu = {}", real_str(c.source.mu));
        let _ = writeln!(
            s,
            "pulse_period_tau = {}",
            real_str(c.source.pulse_period_tau)
        );
        let _ = writeln!(s, "\n[channel]");
        let _ = writeln!(s, "attenuation_A = {}", real_str(c.channel.attenuation_a));
        let _ = writeln!(
            s,
            "bulk_loss_kappa = {}",
            real_str(c.channel.bulk_loss_kappa)
        );
        let _ = writeln!(
            s,
            "fiber_length_km = {}",
            real_str(c.channel.fiber_length_km)
        );
        let _ = writeln!(
            s,
            "intrinsic_error_rc = {}",
            real_str(c.channel.intrinsic_error_rc)
        );
        let _ = writeln!(s, "\n[detector]");
        let _ = writeln!(
            s,
            "efficiency_eta = {}",
            real_str(c.detector.efficiency_eta)
        );
        let _ = writeln!(s, "dark_count_rd = {}", real_str(c.detector.dark_count_rd));
        let sec = &c.security;
        let _ = writeln!(s, "\n[security]");
        let _ = writeln!(s, "g_auth = {}", sec.g_auth);
        let _ = writeln!(s, "g_EC = {}", sec.g_ec);
        let _ = writeln!(s, "g_pa = {}", sec.g_pa);
        let _ = writeln!(s, "epsilon = {}", real_str(sec.epsilon));
        let _ = writeln!(s, "shannon_deficit_x = {}", real_str(sec.shannon_deficit_x));
        let _ = writeln!(s, "rho = {}", real_str(sec.rho));
        let _ = writeln!(s, "n2_required = {}", sec.n2_required);
        let _ = writeln!(s, "qber_threshold = {}", real_str(sec.qber_threshold));
        let _ = writeln!(
            s,
            "qber_sample_fraction = {}",
            real_str(sec.qber_sample_fraction)
        );
        let _ = writeln!(s, "leakage_t_factor = {}", real_str(sec.leakage_t_factor));
        if let AuthSpend::Fixed(a) = sec.auth_spend {
            let _ = writeln!(s, "auth_spend_a = {}", real_str(a));
        }
        let _ = writeln!(
            s,
            "expected_validation_failures = {}",
            sec.expected_validation_failures
        );
        let _ = writeln!(
            s,
            "reshuffle_each_iteration = {}",
            sec.reshuffle_each_iteration
        );
        let _ = writeln!(s, "\n[block]");
        let _ = writeln!(s, "raw_block_m = {}", c.block.raw_block_m);
        let _ = writeln!(s, "machine_word_w = {}", c.block.machine_word_w);
        let _ = writeln!(s, "overhead_LB0 = {}", c.block.overhead_lb0);
        if let Some(n) = c.block.sifted_n {
            let _ = writeln!(s, "sifted_n = {n}");
        }
        if let Some(e0) = c.block.initial_errors_e0 {
            let _ = writeln!(s, "initial_errors_e0 = {}", real_str(e0));
        }
        let _ = writeln!(s, "\n[attack]");
        let _ = writeln!(s, "scenario = {scenario}");
        let _ = writeln!(
            s,
            "eve_intercept_fraction_phi = {}",
            real_str(c.attack.eve_intercept_fraction_phi)
        );
        s
    }

    /// Short hex digest of the canonical text form.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.to_config_string().as_bytes());
        hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
