//! State parameters of the cubic phase family, their validity constraints,
//! rescaling, noise composition and the mapping from protocol settings.
//!
//! Everything downstream works in units of `lambda * x_zpf`, where the
//! scale invariance of the family makes the choice of unit lossless.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack on the positivity ratio, so that states built to be exactly
/// pure do not fail validation on the last bit.
const RATIO_SLACK: f64 = 1e-12;

/// Parameters `(theta1, theta2, theta3)` of the characteristic function
/// `exp(-i s theta3 k^3/3 - theta2 k^2/2) / sqrt(1 + 2 i theta1 k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicParams {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
}

/// Additive Gaussian measurement noise.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseParams {
    pub sigma_r2: f64,
}

/// Which constraint a parameter triple violates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Violation {
    NonFinite,
    Theta2NotPositive { theta2: f64 },
    RatioOutOfRange { ratio: f64 },
    Theta3WithoutTheta1 { theta3: f64 },
    NegativeNoise { sigma_r2: f64 },
    NegativeProtocolTerm,
    SubZeroPointVariance { vx: f64, vp: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFinite => write!(f, "parameters must be finite"),
            Violation::Theta2NotPositive { theta2 } => {
                write!(f, "theta2 must be > 0 (got {theta2})")
            }
            Violation::RatioOutOfRange { ratio } => write!(
                f,
                "theta3/(theta2*theta1) must lie in [0, 1] (got {ratio})"
            ),
            Violation::Theta3WithoutTheta1 { theta3 } => {
                write!(f, "theta1 = 0 requires theta3 = 0 (got theta3 = {theta3})")
            }
            Violation::NegativeNoise { sigma_r2 } => {
                write!(f, "noise variance must be >= 0 (got {sigma_r2})")
            }
            Violation::NegativeProtocolTerm => {
                write!(f, "phonon number and decoherence terms must be >= 0")
            }
            Violation::SubZeroPointVariance { vx, vp } => write!(
                f,
                "thermal input needs Vx >= 1 and Vp >= 1 in zero-point units (got {vx}, {vp})"
            ),
        }
    }
}

impl std::error::Error for Violation {}

impl CubicParams {
    pub const fn new(theta1: f64, theta2: f64, theta3: f64) -> Self {
        CubicParams { theta1, theta2, theta3 }
    }

    /// The Table I operating point, in `lambda * x_zpf` units.
    pub const fn table1() -> Self {
        CubicParams::new(69.04, 6.001, 34.52)
    }

    /// Checks `theta2 > 0` and the positivity constraint on the ratio
    /// `theta3 / (theta2 theta1)`.
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        let CubicParams { theta1, theta2, theta3 } = *self;
        if !(theta1.is_finite() && theta2.is_finite() && theta3.is_finite()) {
            return Err(Violation::NonFinite);
        }
        if theta2 <= 0.0 {
            return Err(Violation::Theta2NotPositive { theta2 });
        }
        if theta1 == 0.0 {
            if theta3 != 0.0 {
                return Err(Violation::Theta3WithoutTheta1 { theta3 });
            }
            return Ok(());
        }
        let ratio = self.positivity_ratio();
        if !(0.0..=1.0 + RATIO_SLACK).contains(&ratio) {
            return Err(Violation::RatioOutOfRange { ratio });
        }
        Ok(())
    }

    /// `theta3 / (theta2 theta1)`, or 0 when theta1 = 0.
    pub fn positivity_ratio(&self) -> f64 {
        if self.theta1 == 0.0 {
            0.0
        } else {
            self.theta3 / (self.theta2 * self.theta1)
        }
    }

    /// Rescales positions by `lambda`: `(l t1, l^2 t2, l^3 t3)`.
    pub fn scale(&self, lambda: f64) -> Result<CubicParams> {
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::ZeroScale);
        }
        Ok(CubicParams::new(
            lambda * self.theta1,
            lambda * lambda * self.theta2,
            lambda * lambda * lambda * self.theta3,
        ))
    }

    /// Decoherence parameter `sigma^2 = theta2 - theta3/theta1 + sigma_R^2`.
    pub fn effective_sigma2(&self, noise: NoiseParams) -> Result<f64> {
        if self.theta1 == 0.0 {
            return Err(Error::Theta1Zero("the decoherence parameter"));
        }
        Ok(self.theta2 - self.theta3 / self.theta1 + noise.sigma_r2)
    }

    /// Purity `sqrt(theta3/(theta2 theta1))` of the underlying quantum state.
    /// A Gaussian triple with theta1 = theta3 = 0 reports 0 by convention.
    pub fn purity(&self) -> f64 {
        self.positivity_ratio().max(0.0).sqrt()
    }

    /// Same state with `v` added to theta2 (noise folded into the state).
    pub fn with_extra_variance(&self, v: f64) -> CubicParams {
        CubicParams::new(self.theta1, self.theta2 + v, self.theta3)
    }

    /// Triple whose decoherence parameter is `sigma2` for the given noise,
    /// keeping theta1 and theta3.
    pub fn with_sigma2(&self, sigma2: f64, noise: NoiseParams) -> Result<CubicParams> {
        if self.theta1 == 0.0 {
            return Err(Error::Theta1Zero("the decoherence parameter"));
        }
        let p = CubicParams::new(
            self.theta1,
            sigma2 - noise.sigma_r2 + self.theta3 / self.theta1,
            self.theta3,
        );
        p.validate()?;
        Ok(p)
    }
}

impl NoiseParams {
    pub fn new(sigma_r2: f64) -> Result<NoiseParams> {
        let n = NoiseParams { sigma_r2 };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> std::result::Result<(), Violation> {
        if !self.sigma_r2.is_finite() {
            return Err(Violation::NonFinite);
        }
        if self.sigma_r2 < 0.0 {
            return Err(Violation::NegativeNoise { sigma_r2: self.sigma_r2 });
        }
        Ok(())
    }
}

/// Protocol settings, already made dimensionless.
///
/// Rates enter only through the products listed below; `t2` is the free
/// evolution between the cubic pulse and the expansion stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalProtocol {
    /// Mean phonon number of the initial thermal state.
    pub nbar: f64,
    /// Pulse wavenumber times zero-point length, `k x_zpf`.
    pub k_xzpf: f64,
    /// `Omega t1`.
    pub omega_t1: f64,
    /// `Gamma1 t1`.
    pub gamma1_t1: f64,
    /// `Gamma2 t2`.
    pub gamma2_t2: f64,
    /// `Gamma3 t3`.
    pub gamma3_t3: f64,
    /// `Gamma4 / Omega4`.
    pub gamma4_over_omega4: f64,
    /// `Omega4 t4`.
    pub omega4_t4: f64,
    /// `Omega4 / Omega`.
    pub omega4_over_omega: f64,
    /// `t3 / t1`.
    pub t3_over_t1: f64,
}

impl PhysicalProtocol {
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        let all = [
            self.nbar,
            self.k_xzpf,
            self.omega_t1,
            self.gamma1_t1,
            self.gamma2_t2,
            self.gamma3_t3,
            self.gamma4_over_omega4,
            self.omega4_t4,
            self.omega4_over_omega,
            self.t3_over_t1,
        ];
        if all.iter().any(|v| !v.is_finite()) || self.omega4_over_omega == 0.0 {
            return Err(Violation::NonFinite);
        }
        let nonneg = [
            self.nbar,
            self.gamma1_t1,
            self.gamma2_t2,
            self.gamma3_t3,
            self.gamma4_over_omega4,
        ];
        if nonneg.iter().any(|&v| v < 0.0) {
            return Err(Violation::NegativeProtocolTerm);
        }
        Ok(())
    }

    /// Magnification of the expansion stage,
    /// `-cosh(W4 t4) t3/t1 - sinh(W4 t4)/(W4 t1)`.
    pub fn lambda(&self) -> f64 {
        let omega4_t1 = self.omega4_over_omega * self.omega_t1;
        -self.omega4_t4.cosh() * self.t3_over_t1 - self.omega4_t4.sinh() / omega4_t1
    }

    /// Extra momentum-diffusion variance `a`, from
    /// `a/W^2 = 4 G2 t2 t1^2 + 4 G1 t1^3/3 + e^{2 W4 t4} (4 G3 t3^3/3 + 2 G4/W4^3) / (4 lambda^2)`.
    pub fn diffusion(&self) -> f64 {
        let lambda = self.lambda();
        let wt1_sq = self.omega_t1 * self.omega_t1;
        let wt3 = self.omega_t1 * self.t3_over_t1;
        let w_over_w4 = 1.0 / self.omega4_over_omega;
        let early = 4.0 * self.gamma2_t2 * wt1_sq + 4.0 * self.gamma1_t1 * wt1_sq / 3.0;
        let late = (2.0 * self.omega4_t4).exp()
            * (4.0 * self.gamma3_t3 * wt3 * wt3 / 3.0
                + 2.0 * self.gamma4_over_omega4 * w_over_w4 * w_over_w4)
            / (4.0 * lambda * lambda);
        early + late
    }

    /// Maps the protocol to `(theta, lambda)` with theta in `lambda x_zpf` units.
    pub fn to_params(&self) -> Result<(CubicParams, f64)> {
        self.validate()?;
        let thermal = 2.0 * self.nbar + 1.0;
        let kick = self.k_xzpf * self.omega_t1.powi(3);
        let lambda = self.lambda();
        let a = self.diffusion();
        let p = CubicParams::new(thermal * kick, thermal + a, kick);
        if !(p.theta1.is_finite() && p.theta2.is_finite() && p.theta3.is_finite())
            || !lambda.is_finite()
        {
            return Err(Error::NonFinite("protocol mapping"));
        }
        p.validate()?;
        Ok((p, lambda))
    }
}

/// Convenience wrapper for [`PhysicalProtocol::to_params`].
pub fn from_physical(proto: &PhysicalProtocol) -> Result<(CubicParams, f64)> {
    proto.to_params()
}

/// Length unit of the numbers in a parameter document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    /// `lambda x_zpf` (the internal unit).
    #[default]
    LambdaXzpf,
    /// Plain `x_zpf`; needs `lambda` to convert.
    Xzpf,
}

/// JSON parameter document. Either the three thetas or a `protocol` block.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsDocument {
    pub theta1: Option<f64>,
    pub theta2: Option<f64>,
    pub theta3: Option<f64>,
    #[serde(default)]
    pub sigma_r2: f64,
    #[serde(default)]
    pub units: Units,
    pub lambda: Option<f64>,
    pub protocol: Option<PhysicalProtocol>,
}

/// Resolved parameters in internal units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedParams {
    pub params: CubicParams,
    pub noise: NoiseParams,
    /// Scale factor, when known.
    pub lambda: Option<f64>,
}

impl ParamsDocument {
    pub fn from_json(text: &str) -> Result<ParamsDocument> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<ParamsDocument> {
        ParamsDocument::from_json(&std::fs::read_to_string(path)?)
    }

    /// Converts to internal units. Validation is left to the caller so that
    /// invalid triples can still be reported.
    pub fn resolve(&self) -> Result<ResolvedParams> {
        if let Some(proto) = &self.protocol {
            if self.theta1.is_some() || self.theta2.is_some() || self.theta3.is_some() {
                return Err(Error::InvalidArgument(
                    "give either theta1..theta3 or a protocol block, not both".into(),
                ));
            }
            let (params, lambda) = proto.to_params()?;
            let noise = NoiseParams::new(self.sigma_r2)?;
            return Ok(ResolvedParams { params, noise, lambda: Some(lambda) });
        }
        let (Some(t1), Some(t2), Some(t3)) = (self.theta1, self.theta2, self.theta3) else {
            return Err(Error::InvalidArgument(
                "theta1, theta2 and theta3 are all required".into(),
            ));
        };
        let raw = CubicParams::new(t1, t2, t3);
        match self.units {
            Units::LambdaXzpf => Ok(ResolvedParams {
                params: raw,
                noise: NoiseParams::new(self.sigma_r2)?,
                lambda: self.lambda,
            }),
            Units::Xzpf => {
                let lambda = self.lambda.ok_or_else(|| {
                    Error::InvalidArgument("units \"xzpf\" requires lambda".into())
                })?;
                let params = raw.scale(1.0 / lambda)?;
                let noise = NoiseParams::new(self.sigma_r2 / (lambda * lambda))?;
                Ok(ResolvedParams { params, noise, lambda: Some(lambda) })
            }
        }
    }
}

/// Table I scale factor.
pub const TABLE1_LAMBDA: f64 = -59.67;
