//! Target states and every measurement basis the protocols use.
//!
//! Alice's bases are built from what she knows about the target. Bob and
//! Charlie only ever see the controller's tau basis, which depends on the
//! channel alone. Rows printed without a normalization factor (the phase-state
//! bases) are scaled to unit length here; branch ratios are unchanged.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::channel::ChannelParams;
use crate::error::{CrspError, Result};
use crate::qstate::{MeasurementBasis, Statevector, NORM_TOL};

/// Lower bound on `alpha^2 + beta^2` and `delta^2 + eta^2` for arbitrary two-qubit targets.
pub const MIN_HALF_WEIGHT: f64 = 1e-8;

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetClass {
    Arbitrary,
    Amplitude,
    Phase,
}

/// `cos(theta)|0> + e^{i phi} sin(theta)|1>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingleTarget {
    theta: f64,
    phi: f64,
    class: TargetClass,
}

impl SingleTarget {
    pub fn arbitrary(theta: f64, phi: f64) -> Result<Self> {
        check_theta(theta)?;
        check_phase("phi", phi)?;
        Ok(Self {
            theta,
            phi,
            class: TargetClass::Arbitrary,
        })
    }

    pub fn amplitude(theta: f64) -> Result<Self> {
        check_theta(theta)?;
        Ok(Self {
            theta,
            phi: 0.0,
            class: TargetClass::Amplitude,
        })
    }

    pub fn phase(phi: f64) -> Result<Self> {
        check_phase("phi", phi)?;
        Ok(Self {
            theta: FRAC_PI_4,
            phi,
            class: TargetClass::Phase,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn class(&self) -> TargetClass {
        self.class
    }

    pub fn state(&self) -> Statevector {
        let (s, c) = self.theta.sin_cos();
        Statevector::new(vec![
            Complex64::new(c, 0.0),
            Complex64::from_polar(s, self.phi),
        ])
        .expect("cos^2 + sin^2 = 1")
    }
}

/// `alpha|00> + e^{i phi1} beta|01> + e^{i phi2} delta|10> + e^{i phi3} eta|11>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoTarget {
    alpha: f64,
    beta: f64,
    delta: f64,
    eta: f64,
    phi1: f64,
    phi2: f64,
    phi3: f64,
    class: TargetClass,
}

impl TwoTarget {
    pub fn arbitrary(amplitudes: [f64; 4], phases: [f64; 3]) -> Result<Self> {
        check_amplitudes(amplitudes)?;
        for (name, p) in ["phi1", "phi2", "phi3"].iter().zip(phases) {
            check_phase(name, p)?;
        }
        let [alpha, beta, delta, eta] = amplitudes;
        let upper = alpha * alpha + beta * beta;
        let lower = delta * delta + eta * eta;
        if upper < MIN_HALF_WEIGHT || lower < MIN_HALF_WEIGHT {
            return Err(CrspError::DegenerateTarget(format!(
                "alpha^2+beta^2 = {upper:e}, delta^2+eta^2 = {lower:e}; both must be >= {MIN_HALF_WEIGHT:e}"
            )));
        }
        let [phi1, phi2, phi3] = phases;
        Ok(Self {
            alpha,
            beta,
            delta,
            eta,
            phi1,
            phi2,
            phi3,
            class: TargetClass::Arbitrary,
        })
    }

    pub fn amplitude(amplitudes: [f64; 4]) -> Result<Self> {
        check_amplitudes(amplitudes)?;
        let [alpha, beta, delta, eta] = amplitudes;
        Ok(Self {
            alpha,
            beta,
            delta,
            eta,
            phi1: 0.0,
            phi2: 0.0,
            phi3: 0.0,
            class: TargetClass::Amplitude,
        })
    }

    pub fn phase(phases: [f64; 3]) -> Result<Self> {
        for (name, p) in ["phi1", "phi2", "phi3"].iter().zip(phases) {
            check_phase(name, p)?;
        }
        let [phi1, phi2, phi3] = phases;
        Ok(Self {
            alpha: 0.5,
            beta: 0.5,
            delta: 0.5,
            eta: 0.5,
            phi1,
            phi2,
            phi3,
            class: TargetClass::Phase,
        })
    }

    /// `[alpha, beta, delta, eta]`
    pub fn amplitudes(&self) -> [f64; 4] {
        [self.alpha, self.beta, self.delta, self.eta]
    }

    /// `[phi1, phi2, phi3]`
    pub fn phases(&self) -> [f64; 3] {
        [self.phi1, self.phi2, self.phi3]
    }

    pub fn class(&self) -> TargetClass {
        self.class
    }

    /// `sqrt(delta^2 + eta^2) / sqrt(alpha^2 + beta^2)`, when both halves carry weight.
    pub fn m(&self) -> Option<f64> {
        let upper = self.alpha * self.alpha + self.beta * self.beta;
        let lower = self.delta * self.delta + self.eta * self.eta;
        (upper >= MIN_HALF_WEIGHT && lower >= MIN_HALF_WEIGHT).then(|| (lower / upper).sqrt())
    }

    pub fn state(&self) -> Statevector {
        Statevector::new(vec![
            Complex64::new(self.alpha, 0.0),
            Complex64::from_polar(self.beta, self.phi1),
            Complex64::from_polar(self.delta, self.phi2),
            Complex64::from_polar(self.eta, self.phi3),
        ])
        .expect("validated amplitudes are normalized")
    }
}

/// A one- or two-qubit target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "arity", rename_all = "snake_case")]
pub enum Target {
    Single(SingleTarget),
    Two(TwoTarget),
}

impl Target {
    pub fn class(&self) -> TargetClass {
        match self {
            Target::Single(t) => t.class(),
            Target::Two(t) => t.class(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        match self {
            Target::Single(_) => 1,
            Target::Two(_) => 2,
        }
    }
}

impl From<SingleTarget> for Target {
    fn from(t: SingleTarget) -> Self {
        Target::Single(t)
    }
}

impl From<TwoTarget> for Target {
    fn from(t: TwoTarget) -> Self {
        Target::Two(t)
    }
}

pub fn target_state(t: &Target) -> Statevector {
    match t {
        Target::Single(s) => s.state(),
        Target::Two(s) => s.state(),
    }
}

/// Alice's single-qubit basis `{|phi_0>, |phi_1>}` for the target's class.
pub fn alice_basis_single(t: &SingleTarget) -> MeasurementBasis {
    let (s, c) = t.theta.sin_cos();
    let re = |x: f64| Complex64::new(x, 0.0);
    let rows = match t.class {
        TargetClass::Arbitrary | TargetClass::Amplitude => {
            let phi = if t.class == TargetClass::Amplitude {
                0.0
            } else {
                t.phi
            };
            vec![
                vec![-Complex64::from_polar(s, phi), re(c)],
                vec![re(c), Complex64::from_polar(s, -phi)],
            ]
        }
        TargetClass::Phase => {
            let e = Complex64::from_polar(FRAC_1_SQRT_2, -t.phi);
            vec![vec![re(FRAC_1_SQRT_2), e], vec![re(FRAC_1_SQRT_2), -e]]
        }
    };
    MeasurementBasis::new(rows).expect("single-qubit Alice basis is orthonormal")
}

/// Charlie's basis `tau_pm = ((1 +- b)|0> +- a|1>) / sqrt((1 +- b)^2 + a^2)`.
pub fn tau_basis(params: ChannelParams) -> Result<MeasurementBasis> {
    let (a, b) = (params.a(), params.b());
    if a < crate::channel::MIN_A {
        return Err(CrspError::DegenerateBasis(format!(
            "tau basis needs a >= 1e-8, got {a:e}"
        )));
    }
    let re = |x: f64| Complex64::new(x, 0.0);
    MeasurementBasis::from_unnormalized(vec![vec![re(1.0 + b), re(a)], vec![re(1.0 - b), re(-a)]])
}

/// Alice's two-qubit basis: rows of `V` (arbitrary), the real signed
/// permutation matrix (amplitude), or the sign-pattern phase matrix scaled by 1/2.
pub fn alice_basis_two(t: &TwoTarget) -> Result<MeasurementBasis> {
    let [al, be, de, et] = t.amplitudes();
    let [p1, p2, p3] = t.phases();
    let re = |x: f64| Complex64::new(x, 0.0);
    let rows = match t.class {
        TargetClass::Arbitrary => {
            let m = t.m().ok_or_else(|| {
                CrspError::DegenerateTarget(format!(
                    "alpha^2+beta^2 = {:e}, delta^2+eta^2 = {:e}",
                    al * al + be * be,
                    de * de + et * et
                ))
            })?;
            let e = |r: f64, p: f64| Complex64::from_polar(r, p);
            vec![
                vec![re(al), e(be, -p1), e(de, -p2), e(et, -p3)],
                vec![re(m * al), e(m * be, -p1), -e(de / m, -p2), -e(et / m, -p3)],
                vec![e(be, p1), re(-al), e(et, p3), -e(de, p2)],
                vec![e(m * be, p1), re(-m * al), -e(et / m, p3), e(de / m, p2)],
            ]
        }
        TargetClass::Amplitude => vec![
            vec![re(al), re(be), re(de), re(et)],
            vec![re(be), re(-al), re(et), re(-de)],
            vec![re(de), re(-et), re(-al), re(be)],
            vec![re(-et), re(-de), re(be), re(al)],
        ],
        TargetClass::Phase => {
            let e1 = Complex64::from_polar(0.5, -p1);
            let e2 = Complex64::from_polar(0.5, -p2);
            let e3 = Complex64::from_polar(0.5, -p3);
            let h = re(0.5);
            vec![
                vec![h, e1, e2, e3],
                vec![h, e1, -e2, -e3],
                vec![h, -e1, e2, -e3],
                vec![h, -e1, -e2, e3],
            ]
        }
    };
    MeasurementBasis::new(rows)
}

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(CrspError::InvalidTarget(format!(
            "theta = {theta} outside [0, pi/2]"
        )));
    }
    Ok(())
}

fn check_phase(name: &str, p: f64) -> Result<()> {
    if !(0.0..TWO_PI).contains(&p) {
        return Err(CrspError::InvalidTarget(format!(
            "{name} = {p} outside [0, 2pi)"
        )));
    }
    Ok(())
}

fn check_amplitudes(a: [f64; 4]) -> Result<()> {
    if a.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(CrspError::InvalidTarget(format!(
            "amplitudes must be finite and non-negative, got {a:?}"
        )));
    }
    let n2: f64 = a.iter().map(|x| x * x).sum();
    if (n2 - 1.0).abs() > NORM_TOL {
        return Err(CrspError::InvalidTarget(format!(
            "alpha^2+beta^2+delta^2+eta^2 = {n2}, expected 1"
        )));
    }
    Ok(())
}
