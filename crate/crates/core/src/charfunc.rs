//! One- and two-variable characteristic functions of cubic phase states.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{CubicParams, Violation};

/// Classical (`s = 0`) or quantum (`s = 1`) dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    Classical,
    Quantum,
}

impl Hypothesis {
    pub const BOTH: [Hypothesis; 2] = [Hypothesis::Classical, Hypothesis::Quantum];

    pub fn s(self) -> f64 {
        match self {
            Hypothesis::Classical => 0.0,
            Hypothesis::Quantum => 1.0,
        }
    }

    pub fn index(self) -> u64 {
        match self {
            Hypothesis::Classical => 0,
            Hypothesis::Quantum => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Hypothesis::Classical => "classical",
            Hypothesis::Quantum => "quantum",
        }
    }
}

/// `log chi` at a possibly complex wavenumber. The principal logarithm keeps
/// `1/sqrt(1 + 2 i theta1 k)` on the principal branch; for real `k` (and for
/// `k - i t` with `theta1 t >= 0`) the argument stays in the right half-plane.
pub fn log_cf_1d(p: &CubicParams, s: Hypothesis, noise_sigma2: f64, k: Complex64) -> Complex64 {
    let i = Complex64::i();
    let k2 = k * k;
    let cubic = -i * (s.s() * p.theta3 / 3.0) * k2 * k;
    let gauss = -0.5 * (p.theta2 + noise_sigma2) * k2;
    let root = (1.0 + 2.0 * i * p.theta1 * k).ln();
    cubic + gauss - 0.5 * root
}

/// `chi_s(k) = exp(-i s theta3 k^3/3 - (theta2 + noise) k^2/2) / sqrt(1 + 2 i theta1 k)`.
pub fn cf_1d(p: &CubicParams, s: Hypothesis, noise_sigma2: f64, k: f64) -> Complex64 {
    log_cf_1d(p, s, noise_sigma2, Complex64::new(k, 0.0)).exp()
}

/// Cumulant of order `j` of the position distribution. Orders four and up do
/// not depend on the hypothesis.
pub fn cumulant(p: &CubicParams, s: Hypothesis, j: i64) -> Result<f64> {
    let t1 = p.theta1;
    match j {
        j if j < 1 => Err(Error::CumulantOrder(j)),
        1 => Ok(-t1),
        2 => Ok(p.theta2 + 2.0 * t1 * t1),
        3 => Ok(2.0 * s.s() * p.theta3 - 8.0 * t1.powi(3)),
        j => {
            let fact: f64 = (1..j).map(|v| v as f64).product();
            Ok(fact * (-2.0 * t1).powi(j as i32) / 2.0)
        }
    }
}

/// Thermal Gaussian state after a cubic kick, in zero-point units.
///
/// With the potential `-(hbar gamma/2)(x/x_zpf)^3` the momentum marginal
/// matches the one-variable family through
/// `theta1 = -gamma Vx`, `theta2 = Vp`, `theta3 = -gamma`,
/// so a positive theta3 corresponds to a negative pulse strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoModeCubicCF {
    pub vx: f64,
    pub vp: f64,
    pub gamma: f64,
}

impl TwoModeCubicCF {
    pub fn new(vx: f64, vp: f64, gamma: f64) -> Result<TwoModeCubicCF> {
        let cf = TwoModeCubicCF { vx, vp, gamma };
        cf.validate()?;
        Ok(cf)
    }

    /// A thermal input has both variances at least the zero-point value.
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        if !(self.vx.is_finite() && self.vp.is_finite() && self.gamma.is_finite()) {
            return Err(Violation::NonFinite);
        }
        if self.vx < 1.0 - 1e-12 || self.vp < 1.0 - 1e-12 {
            return Err(Violation::SubZeroPointVariance { vx: self.vx, vp: self.vp });
        }
        Ok(())
    }

    /// State whose momentum marginal is the one-variable family `p`.
    pub fn from_cubic(p: &CubicParams) -> Result<TwoModeCubicCF> {
        p.validate()?;
        if p.theta3 == 0.0 {
            if p.theta1 != 0.0 {
                return Err(Error::InvalidArgument(
                    "theta3 = 0 with theta1 != 0 has no kicked-thermal-state preimage".into(),
                ));
            }
            // unkicked: the position variance is not constrained by the marginal
            return TwoModeCubicCF::new(1.0, p.theta2, 0.0);
        }
        TwoModeCubicCF::new(p.theta1 / p.theta3, p.theta2, -p.theta3)
    }

    pub fn to_cubic(&self) -> CubicParams {
        CubicParams::new(-self.gamma * self.vx, self.vp, -self.gamma)
    }
}

/// Two-variable characteristic function, wavenumbers in inverse zero-point units.
pub fn cf_2d(cf: &TwoModeCubicCF, s: Hypothesis, kx: f64, kp: f64) -> Complex64 {
    let i = Complex64::i();
    let denom = 1.0 - 2.0 * i * cf.gamma * cf.vx * kp;
    let exponent = i * (s.s() * cf.gamma / 3.0) * kp.powi(3)
        - 0.5 * cf.vp * kp * kp
        - 0.5 * cf.vx * kx * kx / denom;
    (exponent - 0.5 * denom.ln()).exp()
}
