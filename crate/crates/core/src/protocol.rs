//! The three-party protocols: Alice (sender) measures her half of the
//! channel, Charlie (controller) measures his and decides whether to disclose,
//! Bob (receiver) applies a Pauli correction chosen from the two outcomes.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bases::{
    alice_basis_single, alice_basis_two, tau_basis, SingleTarget, Target, TargetClass, TwoTarget,
};
use crate::channel::{double, double_channel, maximal_slice, single, ChannelParams};
use crate::error::{CrspError, Result};
use crate::qstate::{fidelity, LocalUnitary2, MeasurementBasis, Statevector};

/// A successful trial must reproduce the target at least this well.
pub const SUCCESS_FIDELITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolId {
    SingleArbitrary,
    SingleAmplitude,
    SinglePhase,
    TwoArbitrary,
    TwoAmplitude,
    TwoPhase,
}

impl ProtocolId {
    pub const ALL: [ProtocolId; 6] = [
        ProtocolId::SingleArbitrary,
        ProtocolId::SingleAmplitude,
        ProtocolId::SinglePhase,
        ProtocolId::TwoArbitrary,
        ProtocolId::TwoAmplitude,
        ProtocolId::TwoPhase,
    ];

    pub fn new(num_qubits: usize, class: TargetClass) -> Option<Self> {
        use ProtocolId::*;
        match (num_qubits, class) {
            (1, TargetClass::Arbitrary) => Some(SingleArbitrary),
            (1, TargetClass::Amplitude) => Some(SingleAmplitude),
            (1, TargetClass::Phase) => Some(SinglePhase),
            (2, TargetClass::Arbitrary) => Some(TwoArbitrary),
            (2, TargetClass::Amplitude) => Some(TwoAmplitude),
            (2, TargetClass::Phase) => Some(TwoPhase),
            _ => None,
        }
    }

    pub fn for_target(t: &Target) -> Self {
        Self::new(t.num_qubits(), t.class()).expect("targets are one or two qubits")
    }

    pub fn num_qubits(self) -> usize {
        match self {
            ProtocolId::SingleArbitrary | ProtocolId::SingleAmplitude | ProtocolId::SinglePhase => {
                1
            }
            _ => 2,
        }
    }

    pub fn class(self) -> TargetClass {
        match self {
            ProtocolId::SingleArbitrary | ProtocolId::TwoArbitrary => TargetClass::Arbitrary,
            ProtocolId::SingleAmplitude | ProtocolId::TwoAmplitude => TargetClass::Amplitude,
            ProtocolId::SinglePhase | ProtocolId::TwoPhase => TargetClass::Phase,
        }
    }

    /// 1/2 and 1/4 for arbitrary targets, certainty for the restricted classes.
    pub fn claimed_success_probability(self) -> f64 {
        match self {
            ProtocolId::SingleArbitrary => 0.5,
            ProtocolId::TwoArbitrary => 0.25,
            _ => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolId::SingleArbitrary => "single_arbitrary",
            ProtocolId::SingleAmplitude => "single_amplitude",
            ProtocolId::SinglePhase => "single_phase",
            ProtocolId::TwoArbitrary => "two_arbitrary",
            ProtocolId::TwoAmplitude => "two_amplitude",
            ProtocolId::TwoPhase => "two_phase",
        }
    }

    pub fn num_channels(self) -> usize {
        self.num_qubits()
    }
}

impl fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtocolId {
    type Err = CrspError;

    fn from_str(s: &str) -> Result<Self> {
        ProtocolId::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| CrspError::InvalidConfig(format!("unknown protocol '{s}'")))
    }
}

/// Bob's correction alphabet. `Y` is the real matrix `|1><0| - |0><1|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn unitary(self) -> LocalUnitary2 {
        match self {
            Pauli::I => LocalUnitary2::identity(),
            Pauli::X => LocalUnitary2::sigma_x(),
            Pauli::Y => LocalUnitary2::sigma_y(),
            Pauli::Z => LocalUnitary2::sigma_z(),
        }
    }
}

/// Applies one Pauli per qubit of `state`, in qubit order.
pub fn apply_paulis(state: &Statevector, ops: &[Pauli]) -> Result<Statevector> {
    if ops.len() != state.num_qubits() {
        return Err(CrspError::DimensionMismatch {
            expected: state.num_qubits(),
            actual: ops.len(),
        });
    }
    ops.iter()
        .enumerate()
        .try_fold(state.clone(), |s, (q, p)| s.apply_local(q, &p.unitary()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorrectionEntry {
    pub alice_outcome: usize,
    /// One index per controller qubit; 0 is `tau+`, 1 is `tau-`.
    pub charlie_outcome: Vec<usize>,
    /// One operator per receiver qubit.
    pub unitary: Vec<Pauli>,
}

mod tables {
    use super::Pauli::{self, *};

    pub const SINGLE_ARBITRARY: &[(usize, usize, Pauli)] = &[(1, 0, I), (1, 1, Z)];

    pub const SINGLE_AMPLITUDE: &[(usize, usize, Pauli)] =
        &[(0, 0, Y), (0, 1, X), (1, 0, I), (1, 1, Z)];

    pub const SINGLE_PHASE: &[(usize, usize, Pauli)] =
        &[(0, 0, I), (0, 1, Z), (1, 0, Z), (1, 1, I)];

    pub const TWO_ARBITRARY: &[(usize, [usize; 2], [Pauli; 2])] = &[
        (0, [0, 0], [I, I]),
        (0, [0, 1], [I, Z]),
        (0, [1, 0], [Z, I]),
        (0, [1, 1], [Z, Z]),
    ];

    pub const TWO_AMPLITUDE: &[(usize, [usize; 2], [Pauli; 2])] = &[
        (0, [0, 0], [I, I]),
        (0, [0, 1], [I, Z]),
        (0, [1, 0], [Z, I]),
        (0, [1, 1], [Z, Z]),
        (1, [0, 0], [I, Y]),
        (1, [0, 1], [I, X]),
        (1, [1, 0], [Z, Y]),
        (1, [1, 1], [Z, X]),
        (2, [0, 0], [Y, Z]),
        (2, [0, 1], [Y, I]),
        (2, [1, 0], [X, Z]),
        (2, [1, 1], [X, I]),
        (3, [0, 0], [Y, X]),
        (3, [0, 1], [Y, Y]),
        (3, [1, 0], [X, X]),
        (3, [1, 1], [X, Y]),
    ];

    pub const TWO_PHASE: &[(usize, [usize; 2], [Pauli; 2])] = &[
        (0, [0, 0], [I, I]),
        (0, [0, 1], [I, Z]),
        (0, [1, 0], [Z, I]),
        (0, [1, 1], [Z, Z]),
        (1, [0, 0], [Z, I]),
        (1, [0, 1], [Z, Z]),
        (1, [1, 0], [I, I]),
        (1, [1, 1], [I, Z]),
        (2, [0, 0], [I, Z]),
        (2, [0, 1], [I, I]),
        (2, [1, 0], [Z, Z]),
        (2, [1, 1], [Z, I]),
        (3, [0, 0], [Z, Z]),
        (3, [0, 1], [Z, I]),
        (3, [1, 0], [I, Z]),
        (3, [1, 1], [I, I]),
    ];
}

/// Every row of the protocol's correction table.
pub fn correction_table(protocol: ProtocolId) -> Vec<CorrectionEntry> {
    let single = |rows: &[(usize, usize, Pauli)]| {
        rows.iter()
            .map(|&(a, c, u)| CorrectionEntry {
                alice_outcome: a,
                charlie_outcome: vec![c],
                unitary: vec![u],
            })
            .collect()
    };
    let two = |rows: &[(usize, [usize; 2], [Pauli; 2])]| {
        rows.iter()
            .map(|&(a, c, u)| CorrectionEntry {
                alice_outcome: a,
                charlie_outcome: c.to_vec(),
                unitary: u.to_vec(),
            })
            .collect()
    };
    match protocol {
        ProtocolId::SingleArbitrary => single(tables::SINGLE_ARBITRARY),
        ProtocolId::SingleAmplitude => single(tables::SINGLE_AMPLITUDE),
        ProtocolId::SinglePhase => single(tables::SINGLE_PHASE),
        ProtocolId::TwoArbitrary => two(tables::TWO_ARBITRARY),
        ProtocolId::TwoAmplitude => two(tables::TWO_AMPLITUDE),
        ProtocolId::TwoPhase => two(tables::TWO_PHASE),
    }
}

pub fn correction_lookup(
    protocol: ProtocolId,
    alice_outcome: usize,
    charlie_outcome: &[usize],
) -> Result<CorrectionEntry> {
    correction_table(protocol)
        .into_iter()
        .find(|e| e.alice_outcome == alice_outcome && e.charlie_outcome == charlie_outcome)
        .ok_or_else(|| CrspError::LookupMiss {
            protocol: protocol.to_string(),
            alice: alice_outcome,
            charlie: charlie_outcome.to_vec(),
        })
}

/// Whether Bob can still be helped after Alice reports `alice_outcome`.
pub fn alice_outcome_recoverable(protocol: ProtocolId, alice_outcome: usize) -> bool {
    correction_table(protocol)
        .iter()
        .any(|e| e.alice_outcome == alice_outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    Alice,
    Bob,
    Charlie,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Yes,
    No,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum MessageContent {
    /// Basis index per measured qubit.
    Outcome(Vec<usize>),
    Verdict(Verdict),
}

impl MessageContent {
    /// `ceil(log2)` of the alphabet the content is drawn from.
    pub fn alphabet_bits(&self) -> u32 {
        match self {
            MessageContent::Outcome(bits) => bits.len() as u32,
            MessageContent::Verdict(_) => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartyMessage {
    pub from: Party,
    pub to: Party,
    pub payload_bits: u32,
    pub content: MessageContent,
}

impl PartyMessage {
    pub fn to_bob(from: Party, content: MessageContent) -> Self {
        Self {
            from,
            to: Party::Bob,
            payload_bits: content.alphabet_bits(),
            content,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Success,
    FailureUncorrectable,
    BlockedByController,
}

/// Quantum state left with the receiver (and, on failure, the controller).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub qubits: Vec<&'static str>,
    pub state: Statevector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub protocol: ProtocolId,
    pub target: Target,
    pub channels: Vec<ChannelParams>,
    pub alice_outcome: usize,
    pub charlie_outcome: Option<Vec<usize>>,
    pub correction: Option<Vec<Pauli>>,
    pub status: TrialStatus,
    /// Bob's state against the target; absent on failure, where Bob's qubits
    /// are still entangled with Charlie's.
    pub fidelity: Option<f64>,
    pub messages: Vec<PartyMessage>,
    pub sender_bits: u32,
    pub controller_bits: u32,
    pub residual: Residual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub cooperate: bool,
    /// Alice sends a one-bit yes/no instead of her full two-qubit outcome
    /// (arbitrary two-qubit targets only).
    pub sender_compact: bool,
}

impl RunOptions {
    pub fn cooperative() -> Self {
        Self {
            cooperate: true,
            sender_compact: false,
        }
    }
}

/// Bits sent to Bob by (Alice, Charlie), summed from the message log.
pub fn message_audit(record: &TrialRecord) -> (u32, u32) {
    record
        .messages
        .iter()
        .fold((0, 0), |(s, c), m| match m.from {
            Party::Alice => (s + m.payload_bits, c),
            Party::Charlie => (s, c + m.payload_bits),
            Party::Bob => (s, c),
        })
}

/// Runs any protocol; the protocol is chosen by the target's arity and class.
pub fn run<R: Rng + ?Sized>(
    target: &Target,
    channels: &[ChannelParams],
    opts: RunOptions,
    rng: &mut R,
) -> Result<TrialRecord> {
    match (target, channels) {
        (Target::Single(t), [ch]) => run_single(t, *ch, opts.cooperate, rng),
        (Target::Two(t), [c1, c2]) => {
            run_two(t, *c1, *c2, opts.cooperate, opts.sender_compact, rng)
        }
        _ => Err(CrspError::ProtocolMismatch(format!(
            "{}-qubit target needs {} channel(s), got {}",
            target.num_qubits(),
            target.num_qubits(),
            channels.len()
        ))),
    }
}

pub fn run_single<R: Rng + ?Sized>(
    t: &SingleTarget,
    ch: ChannelParams,
    cooperate: bool,
    rng: &mut R,
) -> Result<TrialRecord> {
    let protocol = ProtocolId::new(1, t.class()).expect("single-qubit protocol");
    let target = Target::Single(*t);
    let channel = maximal_slice(ch);
    let alice_basis = alice_basis_single(t);

    let am = channel.measure(&[single::A], &alice_basis, rng)?;
    let mut log = Log::default();
    log.send(Party::Alice, MessageContent::Outcome(vec![am.outcome]));

    if !alice_outcome_recoverable(protocol, am.outcome) {
        let bc = am
            .collapsed
            .residual(&[single::A], alice_basis.vector(am.outcome))?;
        return Ok(log.finish(TrialRecord {
            protocol,
            target,
            channels: vec![ch],
            alice_outcome: am.outcome,
            charlie_outcome: None,
            correction: None,
            status: TrialStatus::FailureUncorrectable,
            fidelity: None,
            messages: vec![],
            sender_bits: 0,
            controller_bits: 0,
            residual: Residual {
                qubits: vec!["B", "C"],
                state: bc,
            },
        }));
    }

    let tau = tau_basis(ch)?;
    let cm = am.collapsed.measure(&[single::C], &tau, rng)?;
    let measured_ket = kron(alice_basis.vector(am.outcome), tau.vector(cm.outcome));
    let bob = cm
        .collapsed
        .residual(&[single::A, single::C], &measured_ket)?;

    finish_controlled(
        protocol,
        target,
        vec![ch],
        am.outcome,
        vec![cm.outcome],
        bob,
        &["B"],
        cooperate,
        log,
    )
}

pub fn run_two<R: Rng + ?Sized>(
    t: &TwoTarget,
    ch1: ChannelParams,
    ch2: ChannelParams,
    cooperate: bool,
    sender_compact: bool,
    rng: &mut R,
) -> Result<TrialRecord> {
    let protocol = ProtocolId::new(2, t.class()).expect("two-qubit protocol");
    let target = Target::Two(*t);
    let channel = double_channel(ch1, ch2);
    let alice_basis = alice_basis_two(t)?;
    let alice_qubits = [double::A1, double::A2];

    let am = channel.measure(&alice_qubits, &alice_basis, rng)?;
    let recoverable = alice_outcome_recoverable(protocol, am.outcome);
    let mut log = Log::default();
    let alice_says = if sender_compact && t.class() == TargetClass::Arbitrary {
        MessageContent::Verdict(if recoverable {
            Verdict::Yes
        } else {
            Verdict::No
        })
    } else {
        MessageContent::Outcome(vec![am.outcome >> 1, am.outcome & 1])
    };
    log.send(Party::Alice, alice_says);

    if !recoverable {
        let rest = am
            .collapsed
            .residual(&alice_qubits, alice_basis.vector(am.outcome))?;
        return Ok(log.finish(TrialRecord {
            protocol,
            target,
            channels: vec![ch1, ch2],
            alice_outcome: am.outcome,
            charlie_outcome: None,
            correction: None,
            status: TrialStatus::FailureUncorrectable,
            fidelity: None,
            messages: vec![],
            sender_bits: 0,
            controller_bits: 0,
            residual: Residual {
                qubits: vec!["B1", "C1", "B2", "C2"],
                state: rest,
            },
        }));
    }

    let tau1 = tau_basis(ch1)?;
    let tau2 = tau_basis(ch2)?;
    let c1 = am.collapsed.measure(&[double::C1], &tau1, rng)?;
    let c2 = c1.collapsed.measure(&[double::C2], &tau2, rng)?;
    let measured_ket = kron(
        &kron(alice_basis.vector(am.outcome), tau1.vector(c1.outcome)),
        tau2.vector(c2.outcome),
    );
    let bob = c2.collapsed.residual(
        &[double::A1, double::A2, double::C1, double::C2],
        &measured_ket,
    )?;

    finish_controlled(
        protocol,
        target,
        vec![ch1, ch2],
        am.outcome,
        vec![c1.outcome, c2.outcome],
        bob,
        &["B1", "B2"],
        cooperate,
        log,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish_controlled(
    protocol: ProtocolId,
    target: Target,
    channels: Vec<ChannelParams>,
    alice_outcome: usize,
    charlie_outcome: Vec<usize>,
    bob: Statevector,
    bob_qubits: &[&'static str],
    cooperate: bool,
    mut log: Log,
) -> Result<TrialRecord> {
    let want = crate::bases::target_state(&target);
    if !cooperate {
        let f = fidelity(&bob, &want)?;
        return Ok(log.finish(TrialRecord {
            protocol,
            target,
            channels,
            alice_outcome,
            charlie_outcome: None,
            correction: None,
            status: TrialStatus::BlockedByController,
            fidelity: Some(f),
            messages: vec![],
            sender_bits: 0,
            controller_bits: 0,
            residual: Residual {
                qubits: bob_qubits.to_vec(),
                state: bob,
            },
        }));
    }

    log.send(
        Party::Charlie,
        MessageContent::Outcome(charlie_outcome.clone()),
    );
    let entry = correction_lookup(protocol, alice_outcome, &charlie_outcome)?;
    let corrected = apply_paulis(&bob, &entry.unitary)?;
    let f = fidelity(&corrected, &want)?;
    if f < 1.0 - SUCCESS_FIDELITY_TOL {
        return Err(CrspError::ProtocolMismatch(format!(
            "{protocol}: correction {:?} for alice={alice_outcome}, charlie={charlie_outcome:?} left fidelity {f}",
            entry.unitary
        )));
    }
    Ok(log.finish(TrialRecord {
        protocol,
        target,
        channels,
        alice_outcome,
        charlie_outcome: Some(charlie_outcome),
        correction: Some(entry.unitary),
        status: TrialStatus::Success,
        fidelity: Some(f),
        messages: vec![],
        sender_bits: 0,
        controller_bits: 0,
        residual: Residual {
            qubits: bob_qubits.to_vec(),
            state: corrected,
        },
    }))
}

#[derive(Default)]
struct Log(Vec<PartyMessage>);

impl Log {
    fn send(&mut self, from: Party, content: MessageContent) {
        self.0.push(PartyMessage::to_bob(from, content));
    }

    fn finish(self, mut record: TrialRecord) -> TrialRecord {
        record.messages = self.0;
        let (s, c) = message_audit(&record);
        record.sender_bits = s;
        record.controller_bits = c;
        record
    }
}

pub(crate) fn kron(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| x * y))
        .collect()
}

/// Receiver qubit positions for a protocol's channel layout.
pub(crate) fn bob_qubits(protocol: ProtocolId) -> &'static [usize] {
    if protocol.num_qubits() == 1 {
        &[single::B]
    } else {
        &[double::B1, double::B2]
    }
}

/// Alice's basis for any target.
pub fn alice_basis(target: &Target) -> Result<MeasurementBasis> {
    match target {
        Target::Single(t) => Ok(alice_basis_single(t)),
        Target::Two(t) => alice_basis_two(t),
    }
}
