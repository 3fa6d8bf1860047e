//! Command implementations behind the `qkd` binary.
//!
//! Every artifact starts with a run manifest: `# key: value` lines naming the
//! command, config path and digest, seed, output path, attack scenario and
//! output schema. No timestamps, so reruns are byte-identical.
//!
//! Exit codes: 0 success, 1 I/O or internal failure, 2 config error, 3
//! constraint violation, 4 QBER abort, 5 equivalence failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use qkd_core::loadmodel::{self, LoadError};
use qkd_core::optimize::{self, OptimizeError};
use qkd_core::params::{self, ConfigError};
use qkd_core::protocol::{self, ProtocolError, SessionOptions, SessionOutcome, SessionReport};
use qkd_core::secrecy::{LeakageModel, SecrecyError};
use qkd_core::{AttackScenario, SourceKind, SystemConfig};

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CONSTRAINT: i32 = 3;
pub const EXIT_QBER_ABORT: i32 = 4;
pub const EXIT_EQUIVALENCE: i32 = 5;

pub const RATE_SCHEMA: &str = "qkd-rate-csv/1";
pub const REPORT_SCHEMA: &str = "qkd-session-report/1";
pub const TRANSCRIPT_SCHEMA: &str = "qkd-transcript/1";
pub const LOAD_SCHEMA: &str = "qkd-load-budget/1";

pub const DEFAULT_STEP_KM: f64 = 0.5;
pub const DEFAULT_MAX_KM: f64 = 60.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Constraint(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error(transparent)]
    Load(#[from] LoadError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) | CliError::Load(_) => EXIT_CONFIG,
            CliError::Constraint(_) => EXIT_CONSTRAINT,
            CliError::Io { .. } => EXIT_FAILURE,
            CliError::Protocol(e) => match e {
                ProtocolError::Config(_) | ProtocolError::BlockTooLarge { .. } => EXIT_CONFIG,
                ProtocolError::Secrecy(SecrecyError::ConstraintViolated { .. }) => EXIT_CONSTRAINT,
                _ => EXIT_FAILURE,
            },
            CliError::Optimize(e) => match e {
                OptimizeError::Secrecy(SecrecyError::ConstraintViolated { .. }) => EXIT_CONSTRAINT,
                _ => EXIT_FAILURE,
            },
        }
    }
}

/// Provenance header written at the top of every artifact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunManifest {
    pub command: String,
    pub config_path: String,
    pub seed: Option<u64>,
    pub output_path: String,
    pub scenario: String,
    pub config_digest: String,
    pub schema: &'static str,
}

impl RunManifest {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# command: {}", self.command);
        let _ = writeln!(s, "# config_path: {}", self.config_path);
        match self.seed {
            Some(seed) => {
                let _ = writeln!(s, "# seed: {seed}");
            }
            None => s.push_str("# seed: -\n"),
        }
        let _ = writeln!(s, "# output_path: {}", self.output_path);
        let _ = writeln!(s, "# scenario: {}", self.scenario);
        let _ = writeln!(s, "# config_digest: {}", self.config_digest);
        let _ = writeln!(s, "# schema: {}", self.schema);
        s
    }
}

/// CSV/report number format: shortest round-trip decimal, scientific
/// notation below 1e-3 in magnitude.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn load(path: &Path) -> Result<SystemConfig, CliError> {
    Ok(params::load_config(path)?)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// One curve of a scenario: a named system evaluated along the distance grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub system: String,
    pub prf_hz: f64,
    pub scenario: AttackScenario,
    pub config: SystemConfig,
}

fn series(
    base: &SystemConfig,
    kind: SourceKind,
    prf_hz: f64,
    scenario: AttackScenario,
    label: String,
) -> Series {
    let mut config = *base;
    config.source.kind = kind;
    config.source.pulse_period_tau = 1.0 / prf_hz;
    Series {
        system: label,
        prf_hz,
        scenario,
        config,
    }
}

/// The curves of scenario 1 (attenuation intact), 2 (attenuation eliminated)
/// or 3 (SPS at 5 kHz over 0.2 and 0.3 dB/km fiber).
pub fn scenario_series(id: u8, base: &SystemConfig) -> Result<Vec<Series>, CliError> {
    use AttackScenario::*;
    use SourceKind::*;
    let three = |s: AttackScenario| {
        vec![
            series(base, SinglePhoton, 1e6, s, "SPS".into()),
            series(base, WeakCoherent, 1e6, s, "WCS".into()),
            series(base, SinglePhoton, 5e3, s, "SPS".into()),
        ]
    };
    match id {
        1 => Ok(three(AttenuationIntact)),
        2 => Ok(three(AttenuationEliminated)),
        3 => Ok([0.2, 0.3]
            .iter()
            .map(|&a| {
                let mut s = series(
                    base,
                    SinglePhoton,
                    5e3,
                    AttenuationIntact,
                    format!("SPS-A{a}"),
                );
                s.config.channel.attenuation_a = a;
                s
            })
            .collect()),
        _ => Err(CliError::Usage(format!(
            "unknown scenario {id}; expected 1, 2 or 3"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub l_km: f64,
    pub alpha: f64,
    pub system: String,
    pub prf_hz: f64,
    pub mu: f64,
    pub s: f64,
    pub r_bps: f64,
}

pub const CSV_HEADER: &str = "L_km,alpha,system,prf_hz,mu,S,R_bps";

impl CsvRow {
    pub fn render(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            format_real(self.l_km),
            format_real(self.alpha),
            self.system,
            format_real(self.prf_hz),
            format_real(self.mu),
            format_real(self.s),
            format_real(self.r_bps)
        )
    }
}

/// Evaluates one series along `distances`; a constraint violation at any
/// point is reported as such rather than written as a gap.
pub fn series_rows(s: &Series, distances: &[f64]) -> Result<Vec<CsvRow>, CliError> {
    let model = LeakageModel::from_security(&s.config.security);
    let curve = optimize::rate_curve(&s.config, s.scenario, distances, &model)?;
    let mut rows = Vec::with_capacity(curve.points.len());
    for p in curve.points {
        if let Some(e) = p.error {
            return Err(CliError::Constraint(format!(
                "{} {} Hz at {} km: {e}",
                s.system, s.prf_hz, p.l_km
            )));
        }
        rows.push(CsvRow {
            l_km: p.l_km,
            alpha: p.alpha,
            system: s.system.clone(),
            prf_hz: s.prf_hz,
            mu: p.mu,
            s: p.capacity_s,
            r_bps: p.rate_r,
        });
    }
    Ok(rows)
}

pub fn render_csv(manifest: &RunManifest, rows: &[CsvRow]) -> String {
    let mut out = manifest.render();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.render());
        out.push('\n');
    }
    out
}

fn check_grid(step: f64, max_km: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0 && step.is_finite()) || !(max_km >= 0.0 && max_km.is_finite()) {
        return Err(CliError::Usage(format!(
            "distance grid needs step > 0 and max >= 0, got step {step}, max {max_km}"
        )));
    }
    Ok(optimize::distance_grid(step, max_km))
}

pub fn scenario_rows(
    id: u8,
    base: &SystemConfig,
    step: f64,
    max_km: f64,
) -> Result<Vec<CsvRow>, CliError> {
    let grid = check_grid(step, max_km)?;
    let mut rows = Vec::new();
    for s in scenario_series(id, base)? {
        rows.extend(series_rows(&s, &grid)?);
    }
    Ok(rows)
}

pub fn cmd_scenario(
    id: u8,
    config_path: &Path,
    out: &Path,
    step: f64,
    max_km: f64,
) -> Result<(), CliError> {
    let config = load(config_path)?;
    let rows = scenario_rows(id, &config, step, max_km)?;
    let scenario = match id {
        2 => "eliminated",
        _ => "intact",
    };
    let manifest = RunManifest {
        command: format!(
            "qkd scenario {id} --step {} --max-km {}",
            format_real(step),
            format_real(max_km)
        ),
        config_path: config_path.display().to_string(),
        seed: None,
        output_path: out.display().to_string(),
        scenario: scenario.to_string(),
        config_digest: config.digest(),
        schema: RATE_SCHEMA,
    };
    write_file(out, &render_csv(&manifest, &rows))
}

pub fn cmd_rate_curve(
    config_path: &Path,
    scenario: AttackScenario,
    out: &Path,
    step: f64,
    max_km: f64,
) -> Result<(), CliError> {
    let config = load(config_path)?;
    let grid = check_grid(step, max_km)?;
    let prf = 1.0 / config.source.pulse_period_tau;
    let s = Series {
        system: config.source.kind.to_string(),
        prf_hz: prf,
        scenario,
        config,
    };
    let rows = series_rows(&s, &grid)?;
    let manifest = RunManifest {
        command: format!(
            "qkd rate-curve --scenario {scenario} --step {} --max-km {}",
            format_real(step),
            format_real(max_km)
        ),
        config_path: config_path.display().to_string(),
        seed: None,
        output_path: out.display().to_string(),
        scenario: scenario.to_string(),
        config_digest: config.digest(),
        schema: RATE_SCHEMA,
    };
    write_file(out, &render_csv(&manifest, &rows))
}

fn outcome_name(o: SessionOutcome) -> &'static str {
    match o {
        SessionOutcome::Completed => "completed",
        SessionOutcome::QberAbort => "qber-abort",
        SessionOutcome::EquivalenceFailed => "equivalence-failed",
    }
}

pub fn outcome_exit_code(o: SessionOutcome) -> i32 {
    match o {
        SessionOutcome::Completed => EXIT_SUCCESS,
        SessionOutcome::QberAbort => EXIT_QBER_ABORT,
        SessionOutcome::EquivalenceFailed => EXIT_EQUIVALENCE,
    }
}

/// Structured `key = value` body of a session report.
pub fn render_report(r: &SessionReport) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    let l = &r.ledger;
    let b = &r.budget;
    kv("outcome", outcome_name(r.outcome).into());
    kv("detections", r.detections.to_string());
    kv("sifted_n", r.sifted_n.to_string());
    kv("qber_sample_n", r.qber_sample_n.to_string());
    kv("qber_observed", format_real(r.qber_observed));
    kv("errors_injected", r.errors_injected.to_string());
    kv("errors_corrected", r.errors_corrected.to_string());
    kv("residual_errors", r.residual_errors.to_string());
    kv("equivalence_passed", r.equivalence_passed.to_string());
    kv(
        "sift_bits_bob_to_alice",
        l.sift_bits_bob_to_alice.to_string(),
    );
    kv(
        "sift_bits_alice_to_bob",
        l.sift_bits_alice_to_bob.to_string(),
    );
    kv("parity_bits_disclosed", l.parity_bits_disclosed.to_string());
    kv("block_parities", l.parities.block.to_string());
    kv("bisection_parities", l.parities.bisection.to_string());
    kv("validation_parities", l.parities.validation.to_string());
    kv("auth_bits_spent_a", l.auth_bits_spent_a.to_string());
    let iters: Vec<String> = l
        .ec_iterations
        .iter()
        .map(|i| format!("{}:{}", i.blocks, i.errors_found))
        .collect();
    kv("ec_iterations", iters.join(" "));
    kv("validation_passes", l.validation_passes.to_string());
    kv("validation_failures", l.validation_failures.to_string());
    let tags: Vec<String> = l.tags.iter().map(|t| t.to_hex()).collect();
    kv("auth_tags", tags.join(" "));
    kv("budget_n", format_real(b.n));
    kv("budget_e_t", format_real(b.e_t));
    kv("budget_q", format_real(b.q));
    kv("budget_t", format_real(b.t));
    kv("budget_nu", format_real(b.nu));
    kv("budget_a", format_real(b.a));
    kv("budget_g_pa", b.g_pa.to_string());
    kv("final_key_length", r.final_key_length.bits.to_string());
    kv("final_key_alice", r.final_key_alice.to_hex());
    kv("final_key_bob", r.final_key_bob.to_hex());
    s
}

/// Runs one seeded session; the report (and transcript, if requested) is
/// written even when the session aborts. Returns the outcome's exit code.
pub fn cmd_simulate(
    config_path: &Path,
    seed: u64,
    out: &Path,
    transcript: Option<&Path>,
) -> Result<i32, CliError> {
    cmd_simulate_with(
        config_path,
        seed,
        out,
        transcript,
        SessionOptions::default(),
    )
}

pub fn cmd_simulate_with(
    config_path: &Path,
    seed: u64,
    out: &Path,
    transcript: Option<&Path>,
    options: SessionOptions,
) -> Result<i32, CliError> {
    let config = load(config_path)?;
    let scenario = config.attack.scenario;
    let model = LeakageModel::from_security(&config.security);
    let report = protocol::run_session_with(&config, scenario, &model, seed, options)?;
    let manifest = |path: &Path, schema| RunManifest {
        command: "qkd simulate".to_string(),
        config_path: config_path.display().to_string(),
        seed: Some(seed),
        output_path: path.display().to_string(),
        scenario: scenario.to_string(),
        config_digest: config.digest(),
        schema,
    };
    let mut text = manifest(out, REPORT_SCHEMA).render();
    text.push_str(&render_report(&report));
    write_file(out, &text)?;
    if let Some(t) = transcript {
        let mut text = manifest(t, TRANSCRIPT_SCHEMA).render();
        text.push_str(&report.ledger.dump());
        write_file(t, &text)?;
    }
    Ok(outcome_exit_code(report.outcome))
}

/// The load table as printed by `qkd load-budget`.
pub fn cmd_load_budget(config_path: &Path) -> Result<String, CliError> {
    let config = load(config_path)?;
    let inputs = loadmodel::load_inputs(&config);
    let (load, rate) = loadmodel::load_budget(&config)?;
    let manifest = RunManifest {
        command: "qkd load-budget".to_string(),
        config_path: config_path.display().to_string(),
        seed: None,
        output_path: "-".to_string(),
        scenario: config.attack.scenario.to_string(),
        config_digest: config.digest(),
        schema: LOAD_SCHEMA,
    };
    let mut s = manifest.render();
    let rows = [
        ("sifted_n", inputs.n as f64),
        ("initial_errors_e0", inputs.e0),
        ("N1", load.n1 as f64),
        ("N2_total", load.n2_total as f64),
        ("overhead_LB0", load.overhead_lb0),
        ("sifting_term", load.sifting_term),
        ("ec_bracket_term", load.ec_bracket_term),
        ("quadratic_term", load.quadratic_term),
        ("total_LB", load.total_lb),
        ("rate_ops_per_s", rate),
    ];
    for (k, v) in rows {
        let _ = writeln!(s, "{k:<18} {}", format_real(v));
    }
    Ok(s)
}
