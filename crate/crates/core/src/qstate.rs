//! Dense statevector engine for the handful of qubits these protocols need.
//!
//! Qubit 0 is the leftmost symbol of a ket and the most significant bit of the
//! amplitude index, so `|A B C>` with `A = 1, B = 0, C = 0` lives at index `0b100`.
//! Every operation returns a new value; a `Statevector` is never mutated once
//! built.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{CrspError, Result};

/// Norm and unitarity tolerance for values produced by exact-arithmetic steps.
pub const NORM_TOL: f64 = 1e-12;
/// Orthonormality tolerance for caller-supplied measurement bases.
pub const BASIS_TOL: f64 = 1e-10;
/// Branches whose probability falls below this are reported as invalid.
pub const ZERO_PROB: f64 = 1e-20;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Statevector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// Wraps an amplitude vector. The squared norm must be within
    /// [`BASIS_TOL`] of 1; the stored vector is rescaled to unit norm.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let num_qubits = qubits_for_len(amplitudes.len())?;
        let n2 = norm_sqr(&amplitudes);
        if (n2 - 1.0).abs() > BASIS_TOL {
            return Err(CrspError::NotNormalized(n2));
        }
        Ok(Self::rescaled(num_qubits, amplitudes, n2))
    }

    /// Builds a state from an unnormalized vector. Fails on the zero vector.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let num_qubits = qubits_for_len(amplitudes.len())?;
        let n2 = norm_sqr(&amplitudes);
        if n2 < ZERO_PROB {
            return Err(CrspError::NotNormalized(n2));
        }
        Ok(Self::rescaled(num_qubits, amplitudes, n2))
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Computational basis state `|index>` on `num_qubits` qubits.
    pub fn basis_state(num_qubits: usize, index: usize) -> Result<Self> {
        if num_qubits == 0 {
            return Err(CrspError::BadLength(1));
        }
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(CrspError::OutcomeOutOfRange {
                outcome: index,
                size: dim,
            });
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    fn rescaled(num_qubits: usize, mut amplitudes: Vec<Complex64>, n2: f64) -> Self {
        let inv = 1.0 / n2.sqrt();
        amplitudes.iter_mut().for_each(|a| *a *= inv);
        Self {
            num_qubits,
            amplitudes,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amplitudes)
    }

    /// Kronecker product; `self` supplies the more significant qubits.
    pub fn tensor(&self, other: &Statevector) -> Statevector {
        let mut amplitudes = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            amplitudes.extend(other.amplitudes.iter().map(|b| a * b));
        }
        Statevector {
            num_qubits: self.num_qubits + other.num_qubits,
            amplitudes,
        }
    }

    /// Applies `u` to one qubit, identity elsewhere.
    pub fn apply_local(&self, qubit: usize, u: &LocalUnitary2) -> Result<Statevector> {
        self.check_qubit(qubit)?;
        let m = u.entries();
        let stride = 1usize << (self.num_qubits - 1 - qubit);
        let mut out = self.amplitudes.clone();
        for i in 0..self.dim() {
            if i & stride != 0 {
                continue;
            }
            let j = i | stride;
            let (x0, x1) = (self.amplitudes[i], self.amplitudes[j]);
            out[i] = m[0][0] * x0 + m[0][1] * x1;
            out[j] = m[1][0] * x0 + m[1][1] * x1;
        }
        Ok(Statevector {
            num_qubits: self.num_qubits,
            amplitudes: out,
        })
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Statevector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(CrspError::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Probability of every outcome of `basis` measured on `qubits`.
    pub fn branch_probabilities(
        &self,
        qubits: &[usize],
        basis: &MeasurementBasis,
    ) -> Result<Vec<f64>> {
        let layout = self.layout(qubits, basis.arity())?;
        Ok(basis
            .vectors()
            .iter()
            .map(|v| norm_sqr(&layout.contract(&self.amplitudes, v)))
            .collect())
    }

    /// Forces `outcome`. A branch with probability below [`ZERO_PROB`] comes
    /// back with `collapsed = None` rather than a NaN-filled state.
    pub fn project(
        &self,
        qubits: &[usize],
        basis: &MeasurementBasis,
        outcome: usize,
    ) -> Result<Projection> {
        let layout = self.layout(qubits, basis.arity())?;
        if outcome >= basis.len() {
            return Err(CrspError::OutcomeOutOfRange {
                outcome,
                size: basis.len(),
            });
        }
        let v = basis.vector(outcome);
        let rest = layout.contract(&self.amplitudes, v);
        let prob = norm_sqr(&rest);
        let collapsed = (prob >= ZERO_PROB).then(|| {
            let scale = 1.0 / prob.sqrt();
            let mut amplitudes = vec![ZERO; self.dim()];
            for (j, vj) in v.iter().enumerate() {
                for (r, x) in rest.iter().enumerate() {
                    amplitudes[layout.compose(j, r)] = vj * x * scale;
                }
            }
            Statevector {
                num_qubits: self.num_qubits,
                amplitudes,
            }
        });
        Ok(Projection {
            outcome,
            prob,
            collapsed,
        })
    }

    /// Samples an outcome with the Born rule and collapses onto it.
    pub fn measure<R: Rng + ?Sized>(
        &self,
        qubits: &[usize],
        basis: &MeasurementBasis,
        rng: &mut R,
    ) -> Result<Measurement> {
        let probs = self.branch_probabilities(qubits, basis)?;
        let u: f64 = rng.random::<f64>() * probs.iter().sum::<f64>();
        let mut acc = 0.0;
        let mut outcome = probs.len() - 1;
        for (k, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc && *p >= ZERO_PROB {
                outcome = k;
                break;
            }
        }
        // Rounding can leave the fallback on a zero branch; walk back to a live one.
        while probs[outcome] < ZERO_PROB && outcome > 0 {
            outcome -= 1;
        }
        let p = self.project(qubits, basis, outcome)?;
        let collapsed = p.collapsed.ok_or(CrspError::NotNormalized(p.prob))?;
        Ok(Measurement {
            outcome,
            prob: p.prob,
            collapsed,
        })
    }

    /// Contracts `<ket|` onto `qubits` and returns the normalized state of the
    /// remaining qubits, in their original relative order.
    pub fn residual(&self, qubits: &[usize], ket: &[Complex64]) -> Result<Statevector> {
        let layout = self.layout(qubits, qubits.len())?;
        if ket.len() != 1 << qubits.len() {
            return Err(CrspError::DimensionMismatch {
                expected: 1 << qubits.len(),
                actual: ket.len(),
            });
        }
        if layout.rest.is_empty() {
            return Err(CrspError::BadLength(1));
        }
        Statevector::normalized(layout.contract(&self.amplitudes, ket))
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(CrspError::QubitOutOfRange {
                index: qubit,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    fn layout(&self, qubits: &[usize], arity: usize) -> Result<Layout> {
        if qubits.len() != arity {
            return Err(CrspError::DimensionMismatch {
                expected: arity,
                actual: qubits.len(),
            });
        }
        for (i, &q) in qubits.iter().enumerate() {
            self.check_qubit(q)?;
            if qubits[..i].contains(&q) {
                return Err(CrspError::DuplicateQubit(q));
            }
        }
        let rest = (0..self.num_qubits)
            .filter(|q| !qubits.contains(q))
            .collect();
        Ok(Layout {
            n: self.num_qubits,
            measured: qubits.to_vec(),
            rest,
        })
    }
}

/// `|<a|b>|^2`; insensitive to global phase.
pub fn fidelity(a: &Statevector, b: &Statevector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().clamp(0.0, 1.0))
}

/// Schmidt coefficients of a two-qubit pure state across its only cut,
/// largest first.
pub fn schmidt_coefficients_2q(state: &Statevector) -> Result<[f64; 2]> {
    if state.num_qubits() != 2 {
        return Err(CrspError::DimensionMismatch {
            expected: 2,
            actual: state.num_qubits(),
        });
    }
    let a = state.amplitudes();
    // Eigenvalues of the Hermitian M^dagger M for M = [[a00, a01], [a10, a11]],
    // written so the gap is computed from entries rather than by cancellation.
    let p = a[0].norm_sqr() + a[2].norm_sqr();
    let r = a[1].norm_sqr() + a[3].norm_sqr();
    let q = a[0].conj() * a[1] + a[2].conj() * a[3];
    let mean = (p + r) / 2.0;
    let gap = ((p - r) / 2.0).hypot(q.norm());
    let hi = (mean + gap).sqrt();
    let lo = (mean - gap).max(0.0).sqrt();
    Ok([hi, lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub outcome: usize,
    pub prob: f64,
    pub collapsed: Option<Statevector>,
}

impl Projection {
    pub fn is_valid(&self) -> bool {
        self.collapsed.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub outcome: usize,
    pub prob: f64,
    pub collapsed: Statevector,
}

/// Index bookkeeping for splitting a register into measured and remaining qubits.
struct Layout {
    n: usize,
    measured: Vec<usize>,
    rest: Vec<usize>,
}

impl Layout {
    fn scatter(&self, value: usize, qubits: &[usize]) -> usize {
        let k = qubits.len();
        qubits.iter().enumerate().fold(0, |acc, (i, &q)| {
            let bit = (value >> (k - 1 - i)) & 1;
            acc | (bit << (self.n - 1 - q))
        })
    }

    fn compose(&self, measured: usize, rest: usize) -> usize {
        self.scatter(measured, &self.measured) | self.scatter(rest, &self.rest)
    }

    fn contract(&self, amps: &[Complex64], ket: &[Complex64]) -> Vec<Complex64> {
        let rest_dim = 1usize << self.rest.len();
        (0..rest_dim)
            .map(|r| {
                let base = self.scatter(r, &self.rest);
                ket.iter()
                    .enumerate()
                    .map(|(j, v)| v.conj() * amps[base | self.scatter(j, &self.measured)])
                    .sum()
            })
            .collect()
    }
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

fn qubits_for_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(CrspError::BadLength(len));
    }
    Ok(len.trailing_zeros() as usize)
}

/// A single-qubit unitary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalUnitary2([[Complex64; 2]; 2]);

impl LocalUnitary2 {
    pub fn new(entries: [[Complex64; 2]; 2]) -> Result<Self> {
        let u = Self(entries);
        let dev = u.unitarity_deviation();
        if dev > NORM_TOL {
            return Err(CrspError::NotUnitary(dev));
        }
        Ok(u)
    }

    fn real(m: [[f64; 2]; 2]) -> Self {
        let c = |x: f64| Complex64::new(x, 0.0);
        Self([[c(m[0][0]), c(m[0][1])], [c(m[1][0]), c(m[1][1])]])
    }

    pub fn identity() -> Self {
        Self::real([[1.0, 0.0], [0.0, 1.0]])
    }

    /// `|0><1| + |1><0|`
    pub fn sigma_x() -> Self {
        Self::real([[0.0, 1.0], [1.0, 0.0]])
    }

    /// `|1><0| - |0><1|`, the real-matrix convention (no factor of i).
    pub fn sigma_y() -> Self {
        Self::real([[0.0, -1.0], [1.0, 0.0]])
    }

    /// `|0><0| - |1><1|`
    pub fn sigma_z() -> Self {
        Self::real([[1.0, 0.0], [0.0, -1.0]])
    }

    pub fn entries(&self) -> &[[Complex64; 2]; 2] {
        &self.0
    }

    pub fn mul(&self, rhs: &LocalUnitary2) -> LocalUnitary2 {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        LocalUnitary2(out)
    }

    pub fn adjoint(&self) -> LocalUnitary2 {
        let a = &self.0;
        LocalUnitary2([
            [a[0][0].conj(), a[1][0].conj()],
            [a[0][1].conj(), a[1][1].conj()],
        ])
    }

    /// Largest entrywise deviation of `U^dagger U` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let p = self.adjoint().mul(self);
        let mut dev: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { ONE } else { ZERO };
                dev = dev.max((p.0[i][j] - want).norm());
            }
        }
        dev
    }

    pub fn max_abs_diff(&self, other: &LocalUnitary2) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        d
    }
}

/// Orthonormal set of `2^arity` kets used as a projective measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBasis {
    arity: usize,
    vectors: Vec<Vec<Complex64>>,
}

impl MeasurementBasis {
    pub fn new(vectors: Vec<Vec<Complex64>>) -> Result<Self> {
        let n = vectors.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(CrspError::DegenerateBasis(format!("{n} vectors")));
        }
        if let Some(v) = vectors.iter().find(|v| v.len() != n) {
            return Err(CrspError::DegenerateBasis(format!(
                "vector of length {} in a basis of {n}",
                v.len()
            )));
        }
        let basis = Self {
            arity: n.trailing_zeros() as usize,
            vectors,
        };
        let dev = basis.orthonormality_deviation();
        if dev > BASIS_TOL {
            return Err(CrspError::DegenerateBasis(format!(
                "Gram matrix deviates from identity by {dev:e}"
            )));
        }
        Ok(basis)
    }

    /// Normalizes each row first, then validates orthogonality.
    pub fn from_unnormalized(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let rows = rows
            .into_iter()
            .map(|r| {
                let n = norm_sqr(&r).sqrt();
                if n < BASIS_TOL {
                    return Err(CrspError::DegenerateBasis("zero row".into()));
                }
                Ok(r.into_iter().map(|x| x / n).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    pub fn computational(arity: usize) -> Self {
        let n = 1usize << arity;
        let vectors = (0..n)
            .map(|i| (0..n).map(|j| if i == j { ONE } else { ZERO }).collect())
            .collect();
        Self { arity, vectors }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vector(&self, i: usize) -> &[Complex64] {
        &self.vectors[i]
    }

    pub fn vectors(&self) -> &[Vec<Complex64>] {
        &self.vectors
    }

    pub fn ket(&self, i: usize) -> Statevector {
        Statevector {
            num_qubits: self.arity,
            amplitudes: self.vectors[i].clone(),
        }
    }

    /// Largest entrywise deviation of the Gram matrix from the identity.
    pub fn orthonormality_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for (i, u) in self.vectors.iter().enumerate() {
            for (j, v) in self.vectors.iter().enumerate() {
                let ip: Complex64 = u.iter().zip(v).map(|(x, y)| x.conj() * y).sum();
                let want = if i == j { ONE } else { ZERO };
                dev = dev.max((ip - want).norm());
            }
        }
        dev
    }
}
