//! Sampling-free verification. Every (Alice, Charlie) branch is forced with
//! [`Statevector::project`], so probabilities are exact products of branch
//! weights and no random source is involved.

use serde::Serialize;

use crate::bases::{target_state, tau_basis, Target};
use crate::channel::{double, double_channel, maximal_slice, single, ChannelParams};
use crate::error::{CrspError, Result};
use crate::protocol::{
    alice_basis, alice_outcome_recoverable, apply_paulis, bob_qubits, correction_lookup,
    correction_table, kron, CorrectionEntry, Pauli, ProtocolId, SUCCESS_FIDELITY_TOL,
};
use crate::qstate::{fidelity, schmidt_coefficients_2q, MeasurementBasis, Statevector};

/// Tolerance for "exactly" in probability claims.
pub const EXACT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchReport {
    pub alice_outcome: usize,
    pub charlie_outcome: Option<Vec<usize>>,
    pub exact_prob: f64,
    pub correctable: bool,
    pub correction: Option<Vec<Pauli>>,
    pub post_correction_fidelity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowVerdict {
    pub row: CorrectionEntry,
    pub branch_prob: f64,
    pub fidelity: Option<f64>,
    pub matches: bool,
}

/// The measured registers and bases for one protocol instance.
struct Setup {
    channel: Statevector,
    alice_qubits: Vec<usize>,
    alice_basis: MeasurementBasis,
    charlie_qubits: Vec<usize>,
    taus: Vec<MeasurementBasis>,
    target: Statevector,
}

impl Setup {
    fn new(protocol: ProtocolId, target: &Target, channels: &[ChannelParams]) -> Result<Self> {
        if ProtocolId::for_target(target) != protocol {
            return Err(CrspError::ProtocolMismatch(format!(
                "{protocol} cannot prepare a {}-qubit {:?} target",
                target.num_qubits(),
                target.class()
            )));
        }
        if channels.len() != protocol.num_channels() {
            return Err(CrspError::ProtocolMismatch(format!(
                "{protocol} needs {} channel(s), got {}",
                protocol.num_channels(),
                channels.len()
            )));
        }
        let taus = channels
            .iter()
            .map(|c| tau_basis(*c))
            .collect::<Result<Vec<_>>>()?;
        let (channel, alice_qubits, charlie_qubits) = match channels {
            [c] => (maximal_slice(*c), vec![single::A], vec![single::C]),
            [c1, c2] => (
                double_channel(*c1, *c2),
                vec![double::A1, double::A2],
                vec![double::C1, double::C2],
            ),
            _ => unreachable!("channel count checked above"),
        };
        Ok(Self {
            channel,
            alice_qubits,
            alice_basis: alice_basis(target)?,
            charlie_qubits,
            taus,
            target: target_state(target),
        })
    }

    fn charlie_outcomes(&self) -> Vec<Vec<usize>> {
        match self.taus.len() {
            1 => vec![vec![0], vec![1]],
            _ => vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]],
        }
    }

    fn alice_prob(&self, alice: usize) -> Result<f64> {
        Ok(self
            .channel
            .project(&self.alice_qubits, &self.alice_basis, alice)?
            .prob)
    }

    /// Joint (Alice, Charlie) branch probability and Bob's uncorrected state.
    fn branch(&self, alice: usize, charlie: &[usize]) -> Result<(f64, Option<Statevector>)> {
        let pa = self
            .channel
            .project(&self.alice_qubits, &self.alice_basis, alice)?;
        let mut prob = pa.prob;
        let mut state = match pa.collapsed {
            Some(s) => s,
            None => return Ok((prob, None)),
        };
        let mut ket = self.alice_basis.vector(alice).to_vec();
        for ((&q, tau), &c) in self.charlie_qubits.iter().zip(&self.taus).zip(charlie) {
            let pc = state.project(&[q], tau, c)?;
            prob *= pc.prob;
            state = match pc.collapsed {
                Some(s) => s,
                None => return Ok((prob, None)),
            };
            ket = kron(&ket, tau.vector(c));
        }
        let measured: Vec<usize> = self
            .alice_qubits
            .iter()
            .chain(&self.charlie_qubits)
            .copied()
            .collect();
        let bob = state.residual(&measured, &ket)?;
        Ok((prob, Some(bob)))
    }
}

/// Every measurement branch of the protocol with its exact probability.
/// Branches Alice cannot recover from are reported once, without a Charlie outcome.
pub fn enumerate(
    protocol: ProtocolId,
    target: &Target,
    channels: &[ChannelParams],
) -> Result<Vec<BranchReport>> {
    let setup = Setup::new(protocol, target, channels)?;
    let mut reports = Vec::new();
    for alice in 0..setup.alice_basis.len() {
        if !alice_outcome_recoverable(protocol, alice) {
            reports.push(BranchReport {
                alice_outcome: alice,
                charlie_outcome: None,
                exact_prob: setup.alice_prob(alice)?,
                correctable: false,
                correction: None,
                post_correction_fidelity: None,
            });
            continue;
        }
        for charlie in setup.charlie_outcomes() {
            let (prob, bob) = setup.branch(alice, &charlie)?;
            let entry = correction_lookup(protocol, alice, &charlie)?;
            let fid = match bob {
                Some(b) => Some(fidelity(&apply_paulis(&b, &entry.unitary)?, &setup.target)?),
                None => None,
            };
            reports.push(BranchReport {
                alice_outcome: alice,
                charlie_outcome: Some(charlie),
                exact_prob: prob,
                correctable: true,
                correction: Some(entry.unitary),
                post_correction_fidelity: fid,
            });
        }
    }
    Ok(reports)
}

/// Total weight of the correctable branches.
pub fn success_probability(reports: &[BranchReport]) -> f64 {
    reports
        .iter()
        .filter(|r| r.correctable)
        .map(|r| r.exact_prob)
        .sum()
}

/// `P(Charlie = outcome | Alice's branch recoverable)`.
pub fn conditional_charlie_probability(reports: &[BranchReport], outcome: &[usize]) -> f64 {
    let hit: f64 = reports
        .iter()
        .filter(|r| r.correctable && r.charlie_outcome.as_deref() == Some(outcome))
        .map(|r| r.exact_prob)
        .sum();
    hit / success_probability(reports)
}

/// Forces each table row's branch, applies the listed correction and checks
/// that the target comes back.
pub fn verify_table(
    protocol: ProtocolId,
    target: &Target,
    channels: &[ChannelParams],
) -> Result<Vec<RowVerdict>> {
    let setup = Setup::new(protocol, target, channels)?;
    correction_table(protocol)
        .into_iter()
        .map(|row| {
            let (prob, bob) = setup.branch(row.alice_outcome, &row.charlie_outcome)?;
            let fid = match bob {
                Some(b) => Some(fidelity(&apply_paulis(&b, &row.unitary)?, &setup.target)?),
                None => None,
            };
            Ok(RowVerdict {
                matches: fid.is_some_and(|f| f >= 1.0 - SUCCESS_FIDELITY_TOL),
                row,
                branch_prob: prob,
                fidelity: fid,
            })
        })
        .collect()
}

/// Every Pauli product that maps Bob's uncorrected state in the given branch
/// back to the target. Independent of the correction tables.
pub fn recovering_corrections(
    protocol: ProtocolId,
    target: &Target,
    channels: &[ChannelParams],
    alice: usize,
    charlie: &[usize],
) -> Result<Vec<Vec<Pauli>>> {
    let setup = Setup::new(protocol, target, channels)?;
    let (_, bob) = setup.branch(alice, charlie)?;
    let Some(bob) = bob else {
        return Ok(vec![]);
    };
    let n = bob_qubits(protocol).len();
    let mut out = Vec::new();
    for code in 0..4usize.pow(n as u32) {
        let ops: Vec<Pauli> = (0..n)
            .map(|i| Pauli::ALL[(code >> (2 * (n - 1 - i))) & 3])
            .collect();
        if fidelity(&apply_paulis(&bob, &ops)?, &setup.target)? >= 1.0 - SUCCESS_FIDELITY_TOL {
            out.push(ops);
        }
    }
    Ok(out)
}

/// Schmidt coefficients of the Alice–Bob pair left after Charlie projects the
/// raw channel onto each tau outcome, as `(prob, [hi, lo])` per outcome.
pub fn controller_residual_schmidt(params: ChannelParams) -> Result<Vec<(f64, [f64; 2])>> {
    let ch = maximal_slice(params);
    let tau = tau_basis(params)?;
    (0..tau.len())
        .map(|k| {
            let p = ch.project(&[single::C], &tau, k)?;
            let ab = ch.residual(&[single::C], tau.vector(k))?;
            Ok((p.prob, schmidt_coefficients_2q(&ab)?))
        })
        .collect()
}
