//! Increment laws with closed-form log-MGF and exact exponential tilting.
//!
//! An increment law here is mean zero with unit variance. Each law exposes
//! `psi(theta) = log E[exp(theta X)]`, the domain on which `psi` is finite,
//! a certified radius `delta_prime` on which `psi(theta) <= theta^2`, and an
//! exact sampler for the tilted law `dP_theta/dP = exp(theta x - psi(theta))`.

use std::fmt;
use std::sync::Arc;

use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Radius reported for the standard normal. `psi(theta) = theta^2 / 2` is
/// dominated by `theta^2` everywhere; the constraint `a < 1/2` always binds
/// before this cap does.
pub const NORMAL_DELTA_PRIME_CAP: f64 = 10.0;

/// Number of grid points used when certifying a custom law.
const CERTIFY_GRID: usize = 10_001;

/// A user-supplied increment law. Implementations must provide a closed-form
/// log-MGF and an exact tilted sampler; no numerical tilting is attempted.
pub trait TiltedLaw: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    /// `log E[exp(theta X)]`; only called for `theta` inside [`psi_domain`](Self::psi_domain).
    fn psi(&self, theta: f64) -> f64;

    /// Open interval on which `psi` is finite.
    fn psi_domain(&self) -> (f64, f64);

    /// One draw from the law tilted by `theta`.
    fn sample_tilted(&self, theta: f64, rng: &mut SimRng) -> f64;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LawName {
    CenteredExponential,
    StandardNormal,
    Custom,
}

impl LawName {
    pub fn as_str(self) -> &'static str {
        match self {
            LawName::CenteredExponential => "centered-exponential",
            LawName::StandardNormal => "standard-normal",
            LawName::Custom => "custom",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CustomLaw {
    inner: Arc<dyn TiltedLaw>,
    delta_prime: f64,
}

/// A mean-zero, unit-variance increment distribution.
#[derive(Clone, Debug)]
pub enum IncrementLaw {
    /// `E - 1` with `E` unit-rate exponential; `psi(theta) = -theta - ln(1 - theta)`.
    CenteredExponential,
    /// `N(0, 1)`; `psi(theta) = theta^2 / 2`.
    StandardNormal,
    Custom(CustomLaw),
}

impl IncrementLaw {
    /// Parse a built-in law name as used on the command line.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "centered-exponential" | "exp" | "exponential" => Ok(IncrementLaw::CenteredExponential),
            "standard-normal" | "normal" => Ok(IncrementLaw::StandardNormal),
            other => Err(Error::Config(format!("unknown increment law '{other}'"))),
        }
    }

    /// Wrap a custom law after certifying `psi(0) = 0`, `(-radius, radius)`
    /// inside the domain, and `psi(theta) <= theta^2` on a dense grid of that
    /// interval.
    pub fn custom(law: Arc<dyn TiltedLaw>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Constraint(format!("certified radius must be positive, got {radius}")));
        }
        let (lo, hi) = law.psi_domain();
        if !(lo < -radius && radius < hi) {
            return Err(Error::Constraint(format!(
                "radius {radius} is not inside the log-MGF domain ({lo}, {hi})"
            )));
        }
        if law.psi(0.0).abs() > 1e-12 {
            return Err(Error::Constraint("psi(0) must be 0".into()));
        }
        for i in 0..CERTIFY_GRID {
            let theta = -radius + 2.0 * radius * (i as f64 + 0.5) / CERTIFY_GRID as f64;
            let psi = law.psi(theta);
            if !(psi.is_finite() && psi <= theta * theta) {
                return Err(Error::Constraint(format!(
                    "psi({theta}) = {psi} exceeds theta^2 inside the claimed radius"
                )));
            }
        }
        Ok(IncrementLaw::Custom(CustomLaw { inner: law, delta_prime: radius }))
    }

    pub fn name(&self) -> LawName {
        match self {
            IncrementLaw::CenteredExponential => LawName::CenteredExponential,
            IncrementLaw::StandardNormal => LawName::StandardNormal,
            IncrementLaw::Custom(_) => LawName::Custom,
        }
    }

    pub fn label(&self) -> &str {
        match self {
            IncrementLaw::Custom(c) => c.inner.name(),
            other => other.name().as_str(),
        }
    }

    pub fn psi_domain(&self) -> (f64, f64) {
        match self {
            IncrementLaw::CenteredExponential => (f64::NEG_INFINITY, 1.0),
            IncrementLaw::StandardNormal => (f64::NEG_INFINITY, f64::INFINITY),
            IncrementLaw::Custom(c) => c.inner.psi_domain(),
        }
    }

    fn check_domain(&self, theta: f64) -> Result<()> {
        let (lo, hi) = self.psi_domain();
        if theta > lo && theta < hi {
            Ok(())
        } else {
            Err(Error::Domain { theta, lo, hi })
        }
    }

    pub fn psi(&self, theta: f64) -> Result<f64> {
        self.check_domain(theta)?;
        Ok(self.psi_unchecked(theta))
    }

    fn psi_unchecked(&self, theta: f64) -> f64 {
        match self {
            // -theta - ln(1 - theta), written with ln_1p for accuracy near 0.
            IncrementLaw::CenteredExponential => -theta - (-theta).ln_1p(),
            IncrementLaw::StandardNormal => 0.5 * theta * theta,
            IncrementLaw::Custom(c) => c.inner.psi(theta),
        }
    }

    /// Certified radius on which `psi(theta) <= theta^2`.
    pub fn delta_prime(&self) -> f64 {
        match self {
            IncrementLaw::CenteredExponential => 1.0 - std::f64::consts::FRAC_1_SQRT_2,
            IncrementLaw::StandardNormal => NORMAL_DELTA_PRIME_CAP,
            IncrementLaw::Custom(c) => c.delta_prime,
        }
    }

    /// Validated tilted sampler; `tilt(0.0)` is the nominal law.
    pub fn tilt(&self, theta: f64) -> Result<Tilt<'_>> {
        self.check_domain(theta)?;
        let kind = match self {
            IncrementLaw::CenteredExponential => TiltKind::Exp { scale: 1.0 / (1.0 - theta) },
            IncrementLaw::StandardNormal => TiltKind::Normal,
            IncrementLaw::Custom(_) => TiltKind::Custom,
        };
        Ok(Tilt { law: self, theta, psi: self.psi_unchecked(theta), kind })
    }

    /// Nominal sampler.
    pub fn nominal(&self) -> Tilt<'_> {
        self.tilt(0.0).expect("0 lies in every log-MGF domain")
    }

    /// One draw from the nominal law.
    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        self.nominal().draw(rng)
    }

    /// One draw from the law tilted by `theta`.
    pub fn sample_tilted(&self, theta: f64, rng: &mut SimRng) -> Result<f64> {
        Ok(self.tilt(theta)?.draw(rng))
    }
}

#[derive(Clone, Copy, Debug)]
enum TiltKind {
    Exp { scale: f64 },
    Normal,
    Custom,
}

/// A law tilted by a fixed, domain-checked `theta`.
#[derive(Clone, Copy, Debug)]
pub struct Tilt<'a> {
    law: &'a IncrementLaw,
    theta: f64,
    psi: f64,
    kind: TiltKind,
}

impl Tilt<'_> {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `psi(theta)` for this tilt.
    pub fn psi(&self) -> f64 {
        self.psi
    }

    #[inline]
    pub fn draw(&self, rng: &mut SimRng) -> f64 {
        match self.kind {
            // Exponential tilted by theta < 1 is exponential with rate 1 - theta.
            TiltKind::Exp { scale } => {
                let e: f64 = Exp1.sample(rng);
                e * scale - 1.0
            }
            TiltKind::Normal => {
                let z: f64 = StandardNormal.sample(rng);
                z + self.theta
            }
            TiltKind::Custom => match self.law {
                IncrementLaw::Custom(c) => c.inner.sample_tilted(self.theta, rng),
                _ => unreachable!("custom tilt on a built-in law"),
            },
        }
    }
}
