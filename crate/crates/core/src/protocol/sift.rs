//! Basis reconciliation over the public channel.
//!
//! Bob announces, per detection, the pulse index in `ceil(log2 m)` bits and
//! his basis bit. Alice answers one bit per detection saying whether the
//! bases agreed.

use crate::bits::BitString;
use crate::secrecy::ceil_log2;

use super::exchange::QuantumExchangeRecord;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiftResult {
    pub alice: BitString,
    pub bob: BitString,
    /// Bob's announcement.
    pub bob_message: BitString,
    /// Alice's agreement flags.
    pub alice_reply: BitString,
    /// Bob's basis for every detection, in detection order.
    pub bob_detection_bases: BitString,
    pub sift_bits_bob_to_alice: u64,
    pub sift_bits_alice_to_bob: u64,
}

pub fn sift(record: &QuantumExchangeRecord) -> SiftResult {
    let width = ceil_log2(record.m() as u64) as usize;
    let d = record.detections.len();
    let mut alice = BitString::with_capacity(d / 2 + 1);
    let mut bob = BitString::with_capacity(d / 2 + 1);
    let mut bob_message = BitString::with_capacity(d * (1 + width));
    let mut alice_reply = BitString::with_capacity(d);
    let mut bob_detection_bases = BitString::with_capacity(d);
    for det in &record.detections {
        let i = det.pulse_index as usize;
        let basis = record.bob_bases.get(i);
        bob_message.push_bits(det.pulse_index, width);
        bob_message.push(basis);
        bob_detection_bases.push(basis);
        let agree = record.alice_bases.get(i) == basis;
        alice_reply.push(agree);
        if agree {
            alice.push(record.alice_bits.get(i));
            bob.push(det.bob_bit);
        }
    }
    SiftResult {
        sift_bits_bob_to_alice: bob_message.len() as u64,
        sift_bits_alice_to_bob: alice_reply.len() as u64,
        alice,
        bob,
        bob_message,
        alice_reply,
        bob_detection_bases,
    }
}
