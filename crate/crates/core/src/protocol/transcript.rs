//! Bit-cost ledger of one session and the line-oriented transcript dump.
//!
//! Dump format: a `#` header line, then one tab-separated record per
//! message: `phase`, `direction`, `payload_bits`, `tag_hex` (`-` when the
//! message carries no authentication tag).

use std::fmt::Write as _;

use crate::hashing::AuthTag;

/// Parity bits disclosed during reconciliation, by phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParityCounts {
    pub block: u64,
    pub bisection: u64,
    pub validation: u64,
}

impl ParityCounts {
    pub fn total(&self) -> u64 {
        self.block + self.bisection + self.validation
    }

    pub fn add(&mut self, other: &ParityCounts) {
        self.block += other.block;
        self.bisection += other.bisection;
        self.validation += other.validation;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParityKind {
    Block,
    Bisection,
    Validation,
}

/// Parity exchanges as tallied separately by the sender and the checker.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParityLink {
    pub sent_by_alice: ParityCounts,
    pub checked_by_bob: ParityCounts,
}

impl ParityLink {
    /// Alice discloses one parity; Bob compares it with his own. Returns
    /// true on mismatch.
    pub fn exchange(&mut self, kind: ParityKind, alice: bool, bob: bool) -> bool {
        bump(&mut self.sent_by_alice, kind);
        bump(&mut self.checked_by_bob, kind);
        alice != bob
    }
}

fn bump(c: &mut ParityCounts, kind: ParityKind) {
    match kind {
        ParityKind::Block => c.block += 1,
        ParityKind::Bisection => c.bisection += 1,
        ParityKind::Validation => c.validation += 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EcIteration {
    /// Number of blocks `J`.
    pub blocks: u64,
    /// Blocks with mismatched parity, each yielding one correction.
    pub errors_found: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptRecord {
    pub phase: &'static str,
    pub direction: &'static str,
    pub payload_bits: u64,
    pub tag_hex: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TranscriptLedger {
    pub sift_bits_bob_to_alice: u64,
    pub sift_bits_alice_to_bob: u64,
    /// All reconciliation parities: block, bisection and validation.
    pub parity_bits_disclosed: u64,
    pub parities: ParityCounts,
    /// Sifted bits revealed for error-rate estimation (removed from the key).
    pub qber_sample_bits: u64,
    pub auth_bits_spent_a: u64,
    pub ec_iterations: Vec<EcIteration>,
    pub validation_passes: u64,
    pub validation_failures: u64,
    pub tags: Vec<AuthTag>,
    pub records: Vec<TranscriptRecord>,
}

impl TranscriptLedger {
    pub fn record(
        &mut self,
        phase: &'static str,
        direction: &'static str,
        payload_bits: u64,
        tag: Option<&AuthTag>,
    ) {
        self.records.push(TranscriptRecord {
            phase,
            direction,
            payload_bits,
            tag_hex: tag.map(AuthTag::to_hex),
        });
    }

    pub fn dump(&self) -> String {
        let mut s = String::from("# phase\tdirection\tpayload_bits\ttag_hex\n");
        for r in &self.records {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}",
                r.phase,
                r.direction,
                r.payload_bits,
                r.tag_hex.as_deref().unwrap_or("-")
            );
        }
        s
    }
}
