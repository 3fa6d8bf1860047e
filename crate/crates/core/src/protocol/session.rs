//! One complete block, both parties in lockstep.

use rand::Rng;

use crate::bits::BitString;
use crate::hashing::{self, AuthKeyIndex, AuthTag, PAHashParams};
use crate::params::{self, AttackScenario, SystemConfig};
use crate::photonics::SiftStats;
use crate::secrecy::{self, FinalKeyLength, LeakageModel, PrivacyAmpBudget};

use super::exchange::simulate_quantum_exchange;
use super::reconcile::{error_correct_with, validate_with};
use super::sift::sift;
use super::transcript::TranscriptLedger;
use super::{stream_rng, ProtocolError, STREAM_SECRET, STREAM_SHARED};

/// Largest block the simulator accepts.
pub const MAX_SIMULATED_M: u64 = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionOutcome {
    Completed,
    /// Sampled error rate above the threshold; no key produced.
    QberAbort,
    /// Equivalence tags differed; keys discarded.
    EquivalenceFailed,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SessionOptions {
    /// Flip one of Bob's bits after validation, so the equivalence check
    /// faces a single residual discrepancy.
    pub force_residual_error: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionReport {
    pub outcome: SessionOutcome,
    pub seed: u64,
    pub detections: u64,
    /// Sifted length before the error-rate sample is removed.
    pub sifted_n: u64,
    pub qber_sample_n: u64,
    pub qber_observed: f64,
    /// Discrepancies entering error correction.
    pub errors_injected: u64,
    /// Bits flipped by error correction and validation.
    pub errors_corrected: u64,
    /// Discrepancies left when the equivalence check runs.
    pub residual_errors: u64,
    pub ec_residual_errors: u64,
    pub validation_first_failure: Option<u64>,
    pub validation_degenerate: bool,
    pub equivalence_passed: bool,
    pub equivalence_tags: Option<(AuthTag, AuthTag)>,
    pub pa_input_len: u64,
    pub budget: PrivacyAmpBudget,
    pub final_key_length: FinalKeyLength,
    pub final_key_alice: BitString,
    pub final_key_bob: BitString,
    pub ledger: TranscriptLedger,
}

impl SessionReport {
    pub fn keys_match(&self) -> bool {
        self.final_key_alice == self.final_key_bob
    }
}

pub fn run_session(
    config: &SystemConfig,
    scenario: AttackScenario,
    model: &LeakageModel,
    seed: u64,
) -> Result<SessionReport, ProtocolError> {
    run_session_with(config, scenario, model, seed, SessionOptions::default())
}

/// Tags `message` under a fresh index from the secret pool and charges it.
fn authenticate<R: Rng>(
    message: &BitString,
    g: u32,
    secret: &mut R,
    ledger: &mut TranscriptLedger,
) -> Result<AuthTag, ProtocolError> {
    let c = hashing::family_size(message.len());
    let mut index = AuthKeyIndex::random(g, c, secret)?;
    ledger.auth_bits_spent_a += index.bits().len() as u64;
    let tag = hashing::wc_tag(message, &mut index, g)?;
    ledger.tags.push(tag.clone());
    Ok(tag)
}

/// Removes the positions set in `mask`.
fn drop_positions(s: &BitString, mask: &[bool]) -> BitString {
    let mut out = BitString::with_capacity(s.len());
    for (i, &drop) in mask.iter().enumerate() {
        if !drop {
            out.push(s.get(i));
        }
    }
    out
}

pub fn run_session_with(
    config: &SystemConfig,
    scenario: AttackScenario,
    model: &LeakageModel,
    seed: u64,
    options: SessionOptions,
) -> Result<SessionReport, ProtocolError> {
    let m = config.block.raw_block_m;
    if m > MAX_SIMULATED_M {
        return Err(ProtocolError::BlockTooLarge {
            m,
            limit: MAX_SIMULATED_M,
        });
    }
    if let Some(v) = params::validate(config).range_violations.first() {
        return Err(ProtocolError::Config(v.to_string()));
    }
    let sec = &config.security;
    let mut shared = stream_rng(seed, STREAM_SHARED);
    let mut secret = stream_rng(seed, STREAM_SECRET);
    let mut ledger = TranscriptLedger::default();

    let record = simulate_quantum_exchange(config, seed);
    let sifted = sift(&record);
    ledger.sift_bits_bob_to_alice = sifted.sift_bits_bob_to_alice;
    ledger.sift_bits_alice_to_bob = sifted.sift_bits_alice_to_bob;
    let tag = authenticate(&sifted.bob_message, sec.g_auth, &mut secret, &mut ledger)?;
    ledger.record(
        "sift",
        "bob->alice",
        sifted.sift_bits_bob_to_alice,
        Some(&tag),
    );
    let tag = authenticate(&sifted.alice_reply, sec.g_auth, &mut secret, &mut ledger)?;
    ledger.record(
        "sift",
        "alice->bob",
        sifted.sift_bits_alice_to_bob,
        Some(&tag),
    );

    // Error-rate estimate on a sacrificed sample.
    let n_sift = sifted.alice.len();
    let k = ((sec.qber_sample_fraction * n_sift as f64).round() as usize).min(n_sift);
    let mut mask = vec![false; n_sift];
    let mut sample_errors = 0;
    for i in rand::seq::index::sample(&mut shared, n_sift, k) {
        mask[i] = true;
        sample_errors += (sifted.alice.get(i) != sifted.bob.get(i)) as u64;
    }
    let qber = if k == 0 {
        0.0
    } else {
        sample_errors as f64 / k as f64
    };
    ledger.qber_sample_bits = k as u64;
    ledger.record("qber-sample", "alice->bob", k as u64, None);
    ledger.record("qber-sample", "bob->alice", k as u64, None);
    let alice = drop_positions(&sifted.alice, &mask);
    let bob = drop_positions(&sifted.bob, &mask);
    let n = alice.len();
    let errors_injected = alice.hamming_distance(&bob) as u64;

    let mut report = SessionReport {
        outcome: SessionOutcome::QberAbort,
        seed,
        detections: record.detections.len() as u64,
        sifted_n: n_sift as u64,
        qber_sample_n: k as u64,
        qber_observed: qber,
        errors_injected,
        errors_corrected: 0,
        residual_errors: errors_injected,
        ec_residual_errors: errors_injected,
        validation_first_failure: None,
        validation_degenerate: false,
        equivalence_passed: false,
        equivalence_tags: None,
        pa_input_len: 0,
        budget: PrivacyAmpBudget {
            n: n as f64,
            e_t: 0.0,
            q: 0.0,
            t: 0.0,
            nu: 0.0,
            g_pa: sec.g_pa,
            a: ledger.auth_bits_spent_a as f64,
        },
        final_key_length: FinalKeyLength {
            bits: 0,
            zero_capacity: true,
        },
        final_key_alice: BitString::new(),
        final_key_bob: BitString::new(),
        ledger: TranscriptLedger::default(),
    };
    if qber > sec.qber_threshold {
        report.ledger = ledger;
        return Ok(report);
    }

    let ec = error_correct_with(&alice, &bob, sec, qber * n as f64, &mut shared)?;
    for it in &ec.iterations {
        ledger.record("ec-block", "alice->bob", it.blocks, None);
    }
    ledger.record(
        "ec-bisect",
        "alice->bob",
        ec.link.sent_by_alice.bisection,
        None,
    );
    ledger.ec_iterations = ec.iterations.clone();
    report.ec_residual_errors = alice.hamming_distance(&ec.bob) as u64;

    let val = validate_with(&alice, &ec.bob, sec.n2_required, &mut shared)?;
    ledger.record(
        "validation",
        "alice->bob",
        val.link.sent_by_alice.validation + val.link.sent_by_alice.bisection,
        None,
    );
    ledger.validation_passes = val.passes;
    ledger.validation_failures = val.failures;
    ledger.parities = ec.link.sent_by_alice;
    ledger.parities.add(&val.link.sent_by_alice);
    let mut bob_checked = ec.link.checked_by_bob;
    bob_checked.add(&val.link.checked_by_bob);
    debug_assert_eq!(ledger.parities, bob_checked);
    ledger.parity_bits_disclosed = ledger.parities.total();
    report.validation_first_failure = val.first_failure_at;
    report.validation_degenerate = val.degenerate;
    report.errors_corrected = ec.corrected + val.corrected;

    let mut bob = val.bob;
    if options.force_residual_error && n > 0 {
        let i = shared.random_range(0..n);
        bob.flip(i);
    }
    report.residual_errors = alice.hamming_distance(&bob) as u64;

    // Equivalence check: one shared index, each party tags its own string.
    let mut idx_alice = AuthKeyIndex::random(sec.g_ec, hashing::family_size(n), &mut secret)?;
    let mut idx_bob = idx_alice.clone();
    ledger.auth_bits_spent_a += idx_alice.bits().len() as u64;
    let tag_alice = hashing::equivalence_tag(&alice, &mut idx_alice, sec.g_ec)?;
    let tag_bob = hashing::equivalence_tag(&bob, &mut idx_bob, sec.g_ec)?;
    let auth = authenticate(&tag_alice.bits, sec.g_auth, &mut secret, &mut ledger)?;
    ledger.record(
        "equivalence",
        "alice->bob",
        tag_alice.len() as u64,
        Some(&auth),
    );
    let auth = authenticate(&tag_bob.bits, sec.g_auth, &mut secret, &mut ledger)?;
    ledger.record(
        "equivalence",
        "bob->alice",
        tag_bob.len() as u64,
        Some(&auth),
    );
    report.equivalence_passed = tag_alice == tag_bob;
    report.equivalence_tags = Some((tag_alice, tag_bob));

    // Privacy amplification over the largest supported prefix.
    let n_pa = hashing::pa_supported_len(n);
    let e_t = report.errors_corrected as f64;
    let stats = SiftStats {
        expected_sifted_n: n as f64,
        expected_errors_et: e_t,
        detection_prob_per_pulse: record.detections.len() as f64 / m as f64,
    };
    let leak = secrecy::leakage_factors(&stats, sec, model, Some(&ledger))?;
    let budget = PrivacyAmpBudget {
        n: n_pa as f64,
        e_t,
        q: leak.q_bits,
        t: leak.t_bits,
        nu: secrecy::nu_max(config.source.mu, config, scenario)?.nu,
        g_pa: sec.g_pa,
        a: ledger.auth_bits_spent_a as f64,
    };
    let key_len = secrecy::final_key_length(&budget);
    report.budget = budget;
    report.final_key_length = key_len;
    report.pa_input_len = n_pa as u64;

    if !report.equivalence_passed {
        report.outcome = SessionOutcome::EquivalenceFailed;
        report.ledger = ledger;
        return Ok(report);
    }

    // PA index from Bob's announced bases, topped up from the shared stream.
    let mut source = sifted
        .bob_detection_bases
        .slice(0, sifted.bob_detection_bases.len().min(2 * n_pa));
    if source.len() < 2 * n_pa {
        source.extend_from(&BitString::random(2 * n_pa - source.len(), &mut shared));
    }
    let pa = PAHashParams::new(source.slice(0, n_pa), source.slice(n_pa, 2 * n_pa))?;
    let out = key_len.bits as usize;
    report.final_key_alice = hashing::pa_hash(&alice.slice(0, n_pa), &pa, out)?;
    report.final_key_bob = hashing::pa_hash(&bob.slice(0, n_pa), &pa, out)?;
    ledger.record("privacy-amplification", "local", out as u64, None);
    report.outcome = SessionOutcome::Completed;
    report.ledger = ledger;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{SourceKind, SystemConfigF64};
    use crate::secrecy::ceil_log2;

    fn wcs(m: u64) -> SystemConfigF64 {
        let mut c = SystemConfigF64::default();
        c.block.raw_block_m = m;
        c
    }

    fn noiseless(m: u64) -> SystemConfigF64 {
        let mut c = wcs(m);
        c.source.kind = SourceKind::SinglePhoton;
        c.channel.fiber_length_km = 0.0;
        c.channel.bulk_loss_kappa = 0.0;
        c.detector.efficiency_eta = 1.0;
        c.detector.dark_count_rd = 0.0;
        c.channel.intrinsic_error_rc = 0.0;
        c
    }

    fn model(c: &SystemConfigF64) -> LeakageModel {
        LeakageModel::from_security(&c.security)
    }

    #[test]
    fn noiseless_session() {
        let c = noiseless(1 << 16);
        let r = run_session(&c, AttackScenario::AttenuationIntact, &model(&c), 1).unwrap();
        assert_eq!(r.outcome, SessionOutcome::Completed);
        assert!(r.equivalence_passed && r.keys_match());
        assert!(!r.final_key_alice.is_empty());
        assert_eq!(r.errors_injected, 0);
        assert_eq!(r.ledger.parities.bisection, 0);
        assert_eq!(
            r.ledger.parities.block + r.ledger.parities.validation,
            r.ledger.parity_bits_disclosed
        );
        assert_eq!(r.ledger.validation_passes, 30);
        let tm = LeakageModel::transcript_measured(1.0, 1e-9);
        let r = run_session(&c, AttackScenario::AttenuationIntact, &tm, 1).unwrap();
        assert_eq!(r.budget.q, r.ledger.parity_bits_disclosed as f64);
    }

    #[test]
    fn ledger_counts_match_encoding() {
        let c = wcs(1 << 20);
        let r = run_session(&c, AttackScenario::AttenuationIntact, &model(&c), 5).unwrap();
        let l = &r.ledger;
        assert_eq!(
            l.sift_bits_bob_to_alice,
            r.detections * (1 + ceil_log2(1 << 20))
        );
        assert_eq!(l.sift_bits_alice_to_bob, r.detections);
        let n = r.sifted_n - r.qber_sample_n;
        let want = hashing::wc_index_length(30, l.sift_bits_bob_to_alice).unwrap()
            + hashing::wc_index_length(30, l.sift_bits_alice_to_bob).unwrap()
            + hashing::wc_index_length(30, hashing::family_size(n as usize)).unwrap()
            + 2 * hashing::wc_index_length(30, 30).unwrap();
        assert_eq!(l.auth_bits_spent_a, want);
        assert_eq!(l.tags.len(), 4);
        assert_eq!(r.final_key_length.bits as usize, r.final_key_alice.len());
        assert_eq!(r.final_key_length, secrecy::final_key_length(&r.budget));
    }

    #[test]
    fn typical_block_produces_key() {
        let c = wcs(1 << 22);
        let r = run_session(&c, AttackScenario::AttenuationIntact, &model(&c), 2).unwrap();
        assert_eq!(r.outcome, SessionOutcome::Completed);
        assert!(r.keys_match());
        assert_eq!(r.residual_errors, 0);
        assert!(
            r.final_key_alice.len() > 1000,
            "{}",
            r.final_key_alice.len()
        );
        assert!((r.qber_observed - 0.01).abs() < 0.01);
    }

    #[test]
    fn deterministic() {
        let c = wcs(1 << 18);
        let a = run_session(&c, AttackScenario::AttenuationIntact, &model(&c), 77).unwrap();
        let b = run_session(&c, AttackScenario::AttenuationIntact, &model(&c), 77).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn intercept_resend_aborts() {
        let mut c = noiseless(1 << 16);
        c.attack.eve_intercept_fraction_phi = 1.0;
        let r = run_session(&c, AttackScenario::AttenuationIntact, &model(&c), 3).unwrap();
        assert_eq!(r.outcome, SessionOutcome::QberAbort);
        let k = r.qber_sample_n as f64;
        assert!((r.qber_observed - 0.25).abs() < 3.0 * (0.25 * 0.75 / k).sqrt());
        assert!(r.final_key_alice.is_empty());
    }

    #[test]
    fn forced_residual_error_is_usually_caught() {
        let c = noiseless(1 << 12);
        let opts = SessionOptions {
            force_residual_error: true,
        };
        let r =
            run_session_with(&c, AttackScenario::AttenuationIntact, &model(&c), 4, opts).unwrap();
        assert_eq!(r.residual_errors, 1);
        assert_eq!(r.outcome, SessionOutcome::EquivalenceFailed);
        assert!(r.final_key_alice.is_empty() && r.final_key_bob.is_empty());
    }

    #[test]
    fn guards() {
        let c = wcs((1 << 26) + 1);
        assert!(matches!(
            run_session(&c, AttackScenario::AttenuationIntact, &model(&c), 0),
            Err(ProtocolError::BlockTooLarge { .. })
        ));
        let mut c = wcs(1 << 12);
        c.source.mu = -1.0;
        assert!(matches!(
            run_session(&c, AttackScenario::AttenuationIntact, &model(&c), 0),
            Err(ProtocolError::Config(_))
        ));
    }

    #[test]
    fn transcript_dump_lists_each_phase() {
        let c = wcs(1 << 16);
        let r = run_session(&c, AttackScenario::AttenuationIntact, &model(&c), 9).unwrap();
        let dump = r.ledger.dump();
        for phase in ["sift", "qber-sample", "validation", "equivalence"] {
            assert!(dump.lines().any(|l| l.starts_with(phase)), "{phase}");
        }
    }
}
