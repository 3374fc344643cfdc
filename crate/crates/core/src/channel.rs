//! Maximal-slice resource states `(|000> + a|111> + b|110>)/sqrt(2)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{CrspError, Result};
use crate::qstate::{Statevector, NORM_TOL};

/// Smallest `a` for which the controller's tau basis is well separated.
pub const MIN_A: f64 = 1e-8;

/// Real channel coefficients with `a^2 + b^2 = 1`, `a > 0`, `b >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelParams {
    a: f64,
    b: f64,
}

impl ChannelParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(CrspError::InvalidChannel(format!(
                "non-finite (a, b) = ({a}, {b})"
            )));
        }
        if !(0.0..1.0).contains(&b) {
            return Err(CrspError::InvalidChannel(format!("b = {b} outside [0, 1)")));
        }
        if !(MIN_A..=1.0).contains(&a) {
            return Err(CrspError::InvalidChannel(format!(
                "a = {a} outside [{MIN_A:e}, 1]"
            )));
        }
        let dev = (a * a + b * b - 1.0).abs();
        if dev > NORM_TOL {
            return Err(CrspError::InvalidChannel(format!(
                "a^2 + b^2 - 1 = {dev:e}"
            )));
        }
        Ok(Self { a, b })
    }

    /// `a = +sqrt(1 - b^2)`.
    pub fn from_b(b: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&b) {
            return Err(CrspError::InvalidChannel(format!("b = {b} outside [0, 1)")));
        }
        Self::new((1.0 - b * b).sqrt(), b)
    }

    /// The GHZ special case `a = 1, b = 0`.
    pub fn ghz() -> Self {
        Self { a: 1.0, b: 0.0 }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

/// Three-qubit channel in the order A, B, C.
pub fn maximal_slice(params: ChannelParams) -> Statevector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![Complex64::new(0.0, 0.0); 8];
    amps[0b000] = Complex64::new(s, 0.0);
    amps[0b111] = Complex64::new(params.a * s, 0.0);
    amps[0b110] = Complex64::new(params.b * s, 0.0);
    Statevector::new(amps).expect("valid params give a unit-norm channel")
}

/// Two independent channels in the order A1, B1, C1, A2, B2, C2.
pub fn double_channel(p1: ChannelParams, p2: ChannelParams) -> Statevector {
    maximal_slice(p1).tensor(&maximal_slice(p2))
}

/// Qubit positions inside a single channel.
pub mod single {
    pub const A: usize = 0;
    pub const B: usize = 1;
    pub const C: usize = 2;
}

/// Qubit positions inside the six-qubit double channel.
pub mod double {
    pub const A1: usize = 0;
    pub const B1: usize = 1;
    pub const C1: usize = 2;
    pub const A2: usize = 3;
    pub const B2: usize = 4;
    pub const C2: usize = 5;
}
