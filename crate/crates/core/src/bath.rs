//! Generalized-Ohmic environment: parameters and closed-form correlators.
//!
//! Every proportionality constant is fixed to 1. Formulas take `hbar` and
//! `k_B` from the spec's [`Units`], so the same code serves natural units
//! (`hbar = k_B = 1`, times in units of the QEC cycle) and SI inputs.

use num_rational::{BigRational, Rational64};
use num_traits::{FromPrimitive, ToPrimitive};

use crate::error::{Error, Result};

pub const HBAR_SI: f64 = 1.054_571_817e-34;
pub const KB_SI: f64 = 1.380_649e-23;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Units {
    pub hbar: f64,
    pub kb: f64,
}

impl Units {
    pub const NATURAL: Units = Units { hbar: 1.0, kb: 1.0 };
    pub const SI: Units = Units {
        hbar: HBAR_SI,
        kb: KB_SI,
    };
}

impl Default for Units {
    fn default() -> Self {
        Units::NATURAL
    }
}

/// Bath and code-cycle parameters for one evaluation point.
///
/// `z` and `alpha` are exact rationals so the Ohmic constraint and the
/// `z = 1/2` branch of the contraction weight are decided without rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct BathSpec {
    /// Dynamical exponent, `omega ~ |k|^z`.
    pub z: Rational64,
    /// Spectral exponent, `J(omega) ~ omega^s`.
    pub s: f64,
    /// Microscopic coupling (energy x length).
    pub lambda: f64,
    /// Bath velocity.
    pub v: f64,
    /// Qubit lattice pitch.
    pub a: f64,
    /// Bath short-distance cutoff.
    pub a0: f64,
    pub d_dim: u32,
    pub alpha: Rational64,
    pub temperature: f64,
    pub tau_qec: f64,
    pub units: Units,
}

impl Default for BathSpec {
    fn default() -> Self {
        BathSpec {
            z: Rational64::from_integer(1),
            s: 1.0,
            lambda: 0.01,
            v: 1.0,
            a: 1.0,
            a0: 1.0,
            d_dim: 2,
            alpha: Rational64::from_integer(0),
            temperature: 0.0,
            tau_qec: 1.0,
            units: Units::NATURAL,
        }
    }
}

impl BathSpec {
    pub fn z_f64(&self) -> f64 {
        self.z.to_f64().unwrap_or(f64::NAN)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("v", self.v),
            ("a", self.a),
            ("a0", self.a0),
            ("tau_qec", self.tau_qec),
            ("hbar", self.units.hbar),
            ("kb", self.units.kb),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::invalid(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        if *self.z.numer() <= 0 {
            return Err(Error::invalid(format!(
                "z must be positive, got {}",
                self.z
            )));
        }
        if !(self.s > 0.0 && self.s <= 1.0) {
            return Err(Error::invalid(format!(
                "s must lie in (0, 1], got {}",
                self.s
            )));
        }
        if !(self.temperature >= 0.0) || !self.temperature.is_finite() {
            return Err(Error::invalid(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if !self.lambda.is_finite() {
            return Err(Error::invalid("lambda must be finite"));
        }
        if self.d_dim == 0 {
            return Err(Error::invalid("spatial dimension must be >= 1"));
        }
        Ok(())
    }

    /// `w = pi k_B T / hbar`, the thermal rate entering the finite-T correlator.
    pub fn thermal_frequency(&self) -> f64 {
        std::f64::consts::PI * self.units.kb * self.temperature / self.units.hbar
    }
}

/// Exact test of `D + 2 alpha == 2 z`.
pub fn ohmic_constraint_holds(spec: &BathSpec) -> bool {
    ohmic_constraint_exact(spec.d_dim, spec.alpha, spec.z)
}

pub fn ohmic_constraint_exact(d_dim: u32, alpha: Rational64, z: Rational64) -> bool {
    let d = Rational64::from_integer(i64::from(d_dim));
    let two = Rational64::from_integer(2);
    d + two * alpha == two * z
}

/// Float variant: the comparison is carried out on the exact binary values
/// of the inputs, with no rounding in the sum.
pub fn ohmic_constraint_f64(d_dim: u32, alpha: f64, z: f64) -> bool {
    let (Some(a), Some(z)) = (BigRational::from_f64(alpha), BigRational::from_f64(z)) else {
        return false;
    };
    let d = BigRational::from_integer(d_dim.into());
    let two = BigRational::from_integer(2.into());
    d + &two * a == two * z
}

/// Zero-temperature temporal correlator `lambda^2 / (v^2 |t1 - t2|^2)`.
pub fn temporal_correlator(spec: &BathSpec, t1: f64, t2: f64) -> Result<f64> {
    let dt = (t1 - t2).abs();
    if dt == 0.0 {
        return Err(Error::Singularity(
            "temporal correlator at coincident times".into(),
        ));
    }
    Ok(spec.lambda * spec.lambda / (spec.v * spec.v * dt * dt))
}

/// Equal-time spatial correlator `lambda^2 / (a0^{2(1-z)} |x1 - x2|^{2z})`.
pub fn spatial_correlator(spec: &BathSpec, x1: f64, x2: f64) -> Result<f64> {
    let dx = (x1 - x2).abs();
    if dx == 0.0 {
        return Err(Error::Singularity(
            "spatial correlator at coincident points".into(),
        ));
    }
    let z = spec.z_f64();
    Ok(spec.lambda * spec.lambda / (spec.a0.powf(2.0 * (1.0 - z)) * dx.powf(2.0 * z)))
}

/// Finite-temperature correlator `(w / sinh(w t))^2`, `w = pi k_B T / hbar`.
pub fn thermal_correlator(spec: &BathSpec, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::invalid(format!("time must be positive, got {t}")));
    }
    if !(spec.temperature >= 0.0) {
        return Err(Error::invalid("temperature must be >= 0"));
    }
    Ok(thermal_kernel(spec.thermal_frequency(), t))
}

/// `(w / sinh(w t))^2` with the `w -> 0` limit `1 / t^2` taken analytically.
pub fn thermal_kernel(w: f64, t: f64) -> f64 {
    let u = w * t;
    if u == 0.0 {
        return 1.0 / (t * t);
    }
    if u < 1.0 {
        let ratio = u / u.sinh();
        ratio * ratio / (t * t)
    } else {
        // sinh u = e^u (1 - e^{-2u}) / 2, kept finite for large u
        let f = 2.0 * w * (-u).exp() / -(-2.0 * u).exp_m1();
        f * f
    }
}

/// Spectral density `omega^s` with unit prefactor.
pub fn spectral_density(spec: &BathSpec, omega: f64) -> Result<f64> {
    if !(omega >= 0.0) {
        return Err(Error::invalid(format!(
            "frequency must be >= 0, got {omega}"
        )));
    }
    if omega == 0.0 {
        return Ok(0.0);
    }
    Ok(omega.powf(spec.s))
}

/// Non-oscillatory RKKY envelope `d^{-dim}` for `dim` in {2, 3}.
pub fn rkky_envelope(d: f64, dim: u32) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::invalid(format!(
            "distance must be positive, got {d}"
        )));
    }
    match dim {
        2 => Ok(d.powi(-2)),
        3 => Ok(d.powi(-3)),
        other => Err(Error::invalid(format!(
            "RKKY envelope defined for dim 2 or 3, got {other}"
        ))),
    }
}
