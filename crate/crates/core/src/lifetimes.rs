//! Closed-form lifetimes of the corrected logical memory.
//!
//! All approximate relations are evaluated as equalities with unit
//! prefactors. Times share the unit of `tau_qec`, and each estimate records
//! the formula branch that produced it.

use std::fmt;
use std::str::FromStr;

use num_rational::{Ratio, Rational64};
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use crate::bath::{BathSpec, Units};
use crate::error::{Error, Result};
use crate::format::{fmt_f64, fmt_opt};
use crate::rg::{integrate_flow, CouplingVector, FlowOptions, Phase, Terminal};
use crate::wick::{
    classify_regime, contraction_branch, contraction_size_factor, lambda_bar_sq, RegimeLabel,
};

/// Couplings above this make the weak-coupling inversion meaningless.
pub const SATURATION_COUPLING: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JzStarSource {
    UserSupplied,
    FlowTerminal,
}

impl JzStarSource {
    pub fn as_str(self) -> &'static str {
        match self {
            JzStarSource::UserSupplied => "user",
            JzStarSource::FlowTerminal => "flow",
        }
    }
}

/// Renormalized longitudinal coupling of the ferromagnetic fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JzStar {
    pub value: f64,
    pub source: JzStarSource,
}

impl JzStar {
    pub fn user(value: f64) -> Self {
        JzStar {
            value,
            source: JzStarSource::UserSupplied,
        }
    }

    /// Runs the flow from `j0` and takes `jz` at its terminal point.
    pub fn from_flow(j0: CouplingVector, opts: &FlowOptions) -> Result<Self> {
        let trace = integrate_flow(j0, opts)?;
        let value = match trace.terminal {
            Terminal::Localized { j_star, .. } => j_star.jz,
            Terminal::CutoffReached { .. } => trace.last().j.jz,
            Terminal::StrongCoupling { .. } => {
                return Err(Error::PhaseMismatch {
                    expected: "FM",
                    found: "AFM",
                })
            }
        };
        Ok(JzStar {
            value,
            source: JzStarSource::FlowTerminal,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodePoint {
    pub l: usize,
    pub epsilon: f64,
    pub spec: BathSpec,
    pub phase: Phase,
    pub jz_star: Option<JzStar>,
}

impl CodePoint {
    pub fn new(l: usize, epsilon: f64, spec: BathSpec) -> Self {
        CodePoint {
            l,
            epsilon,
            spec,
            phase: Phase::Antiferromagnetic,
            jz_star: None,
        }
    }

    pub fn ferromagnetic(mut self, jz_star: JzStar) -> Self {
        self.phase = Phase::Ferromagnetic;
        self.jz_star = Some(jz_star);
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_distance(self.l)?;
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid(format!(
                "error budget must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        self.spec.validate()
    }
}

fn check_distance(l: usize) -> Result<()> {
    if l < 2 || !l.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "code distance must be an even integer >= 2, got {l}"
        )));
    }
    Ok(())
}

/// `(lambda / hbar v) sqrt(2L/pi) (lambda_bar^2)^{L/4}` from its two factors.
pub fn macroscopic_coupling(prefactor: f64, lambda_bar_sq: f64, l: usize) -> f64 {
    let lf = l as f64;
    prefactor * (2.0 * lf / std::f64::consts::PI).sqrt() * lambda_bar_sq.powf(lf / 4.0)
}

/// Initial dimensionless Kondo coupling of a distance-`l` code.
pub fn j_of_l(spec: &BathSpec, l: usize) -> Result<f64> {
    let base = lambda_bar_sq(spec, l)?;
    Ok(macroscopic_coupling(
        spec.lambda / (spec.units.hbar * spec.v),
        base,
        l,
    ))
}

/// `ln j(L)`, finite where `j(L)` itself under- or overflows.
pub fn ln_j_of_l(spec: &BathSpec, l: usize) -> Result<f64> {
    let base = lambda_bar_sq(spec, l)?;
    let lf = l as f64;
    Ok((spec.lambda / (spec.units.hbar * spec.v)).ln()
        + 0.5 * (2.0 * lf / std::f64::consts::PI).ln()
        + lf / 4.0 * base.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormulaBranch {
    OhmicShortRange,
    OhmicCritical,
    OhmicLongRange,
    SubOhmicPowerLaw,
    FerromagneticPowerLaw,
}

impl FormulaBranch {
    pub fn as_str(self) -> &'static str {
        match self {
            FormulaBranch::OhmicShortRange => "ohmic_short_range",
            FormulaBranch::OhmicCritical => "ohmic_critical",
            FormulaBranch::OhmicLongRange => "ohmic_long_range",
            FormulaBranch::SubOhmicPowerLaw => "subohmic_power_law",
            FormulaBranch::FerromagneticPowerLaw => "fm_power_law",
        }
    }

    fn ohmic(regime: RegimeLabel) -> Self {
        match regime {
            RegimeLabel::ShortRange => FormulaBranch::OhmicShortRange,
            RegimeLabel::Critical => FormulaBranch::OhmicCritical,
            RegimeLabel::LongRange => FormulaBranch::OhmicLongRange,
        }
    }
}

impl fmt::Display for FormulaBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeEstimate {
    pub value: f64,
    /// Natural log of `value`; stays finite when `value` overflows.
    pub ln_value: f64,
    pub branch: FormulaBranch,
    /// Set when the coupling is beyond [`SATURATION_COUPLING`].
    pub saturated: bool,
}

impl TimeEstimate {
    fn from_ln(ln_value: f64, branch: FormulaBranch, saturated: bool) -> Self {
        TimeEstimate {
            value: ln_value.exp(),
            ln_value,
            branch,
            saturated,
        }
    }
}

fn require_afm(point: &CodePoint) -> Result<()> {
    if point.phase != Phase::Antiferromagnetic {
        return Err(Error::PhaseMismatch {
            expected: "AFM",
            found: "FM",
        });
    }
    Ok(())
}

/// Kondo failure time `tau e^{1/j}`.
pub fn t_kondo(tau: f64, j: f64) -> f64 {
    tau * (1.0 / j).exp()
}

/// Practical computation window `epsilon tau e^{1/j}` for a given coupling.
pub fn t_comp_from_coupling(epsilon: f64, tau: f64, j: f64) -> f64 {
    epsilon * t_kondo(tau, j)
}

/// Practical computation window `epsilon tau e^{1/j(L)}` in the Ohmic bath,
/// with `j(L)` built from the `z`-appropriate contraction weight.
pub fn t_comp_ohmic(point: &CodePoint) -> Result<TimeEstimate> {
    point.validate()?;
    require_afm(point)?;
    if point.spec.s != 1.0 {
        return Err(Error::invalid(format!(
            "Ohmic window needs s = 1, got s = {}",
            point.spec.s
        )));
    }
    let ln_j = ln_j_of_l(&point.spec, point.l)?;
    let j = ln_j.exp();
    let ln_value = point.epsilon.ln() + point.spec.tau_qec.ln() + (-ln_j).exp();
    Ok(TimeEstimate::from_ln(
        ln_value,
        FormulaBranch::ohmic(contraction_branch(point.spec.z)),
        j >= SATURATION_COUPLING,
    ))
}

/// Sub-Ohmic window `epsilon tau (1/j)^{1/(1-s)}`.
pub fn t_comp_subohmic_from_coupling(epsilon: f64, tau: f64, j: f64, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::invalid(format!(
            "sub-Ohmic exponent must lie in (0, 1), got {s}"
        )));
    }
    if !(j > 0.0) {
        return Err(Error::invalid(format!(
            "coupling must be positive, got {j}"
        )));
    }
    Ok(epsilon * tau * (1.0 / j).powf(1.0 / (1.0 - s)))
}

pub fn t_comp_subohmic(point: &CodePoint, s: f64) -> Result<TimeEstimate> {
    point.validate()?;
    require_afm(point)?;
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::invalid(format!(
            "sub-Ohmic exponent must lie in (0, 1), got {s}"
        )));
    }
    let ln_j = ln_j_of_l(&point.spec, point.l)?;
    let ln_value = point.epsilon.ln() + point.spec.tau_qec.ln() - ln_j / (1.0 - s);
    Ok(TimeEstimate::from_ln(
        ln_value,
        FormulaBranch::SubOhmicPowerLaw,
        ln_j.exp() >= SATURATION_COUPLING,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryTime {
    /// `tau (1 - epsilon)^{-1/(2 jz*^2)}`.
    pub exact: f64,
    /// `tau exp(epsilon / (2 jz*^2))`.
    pub approx: f64,
}

/// Ferromagnetic memory time from inverting the power-law decay at
/// survival `1 - epsilon`. Infinite when `jz* = 0`.
///
/// The two forms differ by `exp(-(ln(1-e) + e) / (2 jz*^2))`, so their
/// relative gap stays below `epsilon` only while `epsilon` is small compared
/// with `4 jz*^2`.
pub fn t_mem_fm(point: &CodePoint) -> Result<MemoryTime> {
    let jz = point.jz_star.ok_or(Error::MissingInput("jz_star"))?.value;
    if !(point.epsilon > 0.0 && point.epsilon < 1.0) {
        return Err(Error::invalid(format!(
            "error budget must lie in (0, 1), got {}",
            point.epsilon
        )));
    }
    memory_time(point.epsilon, point.spec.tau_qec, jz)
}

pub fn memory_time(epsilon: f64, tau: f64, jz_star: f64) -> Result<MemoryTime> {
    if !jz_star.is_finite() {
        return Err(Error::invalid("jz_star must be finite"));
    }
    if jz_star == 0.0 {
        return Ok(MemoryTime {
            exact: f64::INFINITY,
            approx: f64::INFINITY,
        });
    }
    let k = 2.0 * jz_star * jz_star;
    Ok(MemoryTime {
        exact: tau * (-(-epsilon).ln_1p() / k).exp(),
        approx: tau * (epsilon / k).exp(),
    })
}

/// Korringa relaxation rate `j^2 k_B T / hbar`, given `k_B T / hbar`.
pub fn korringa_rate(j: f64, thermal_rate: f64) -> f64 {
    j * j * thermal_rate
}

/// Thermal coherence time `hbar / (2 pi k_B T jz*^2)`, given `k_B T / hbar`.
pub fn thermal_t2(jz_star: f64, thermal_rate: f64) -> f64 {
    1.0 / (2.0 * std::f64::consts::PI * thermal_rate * jz_star * jz_star)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThermalRates {
    /// `T = 0`: decay stays algebraic, no thermal rate exists.
    ZeroTemperature,
    Finite {
        t2_thermal: Option<f64>,
        gamma_korringa: f64,
    },
}

pub fn thermal_rates(point: &CodePoint) -> Result<ThermalRates> {
    point.validate()?;
    let spec = &point.spec;
    if spec.temperature == 0.0 {
        return Ok(ThermalRates::ZeroTemperature);
    }
    let rate = spec.units.kb * spec.temperature / spec.units.hbar;
    let j = j_of_l(spec, point.l)?;
    Ok(ThermalRates::Finite {
        t2_thermal: point.jz_star.map(|s| thermal_t2(s.value, rate)),
        gamma_korringa: korringa_rate(j, rate),
    })
}

/// True thermodynamic threshold exists iff `z > 1/(s+1)`.
pub fn threshold_exists(z: f64, s: f64) -> bool {
    classify_regime(z, s) == RegimeLabel::ShortRange
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalCoupling {
    pub lambda_c: f64,
    pub branch: RegimeLabel,
    pub l_independent: bool,
}

/// Coupling at which the contraction weight equals 1:
/// `hbar a0^{1-z} a^z / (4 tau sqrt(F(L)))`, `F` being the size factor.
pub fn critical_coupling(spec: &BathSpec, l: usize) -> Result<CriticalCoupling> {
    check_distance(l)?;
    let z = spec.z_f64();
    let branch = contraction_branch(spec.z);
    let size = contraction_size_factor(spec.z, l);
    let lambda_c = spec.units.hbar * spec.a0.powf(1.0 - z) * spec.a.powf(z)
        / (4.0 * spec.tau_qec * size.sqrt());
    Ok(CriticalCoupling {
        lambda_c,
        branch,
        l_independent: branch == RegimeLabel::ShortRange,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeReport {
    pub l: usize,
    pub regime: RegimeLabel,
    pub phase: Phase,
    pub j_l: f64,
    pub t_k_over_tau: Option<f64>,
    pub t_comp_over_tau: Option<f64>,
    pub t_mem_over_tau: Option<f64>,
    pub gamma_korringa: Option<f64>,
    pub t2_thermal: Option<f64>,
    pub threshold_exists: bool,
    pub lambda_critical: Option<f64>,
    pub branch: Option<FormulaBranch>,
    pub saturated: bool,
    pub jz_star: Option<JzStar>,
}

impl LifetimeReport {
    pub const CSV_HEADER: &'static str = "regime,phase,L,j_L,t_K_over_tau,t_comp_over_tau,t_mem_over_tau,gamma_korringa,t2_thermal,lambda_critical";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.regime,
            self.phase,
            self.l,
            fmt_f64(self.j_l),
            fmt_opt(self.t_k_over_tau),
            fmt_opt(self.t_comp_over_tau),
            fmt_opt(self.t_mem_over_tau),
            fmt_opt(self.gamma_korringa),
            fmt_opt(self.t2_thermal),
            fmt_opt(self.lambda_critical),
        )
    }

    pub fn to_json(&self) -> Value {
        json!({
            "regime": self.regime.as_str(),
            "phase": self.phase.as_str(),
            "L": self.l,
            "j_L": fmt_f64(self.j_l),
            "t_K_over_tau": self.t_k_over_tau.map(fmt_f64),
            "t_comp_over_tau": self.t_comp_over_tau.map(fmt_f64),
            "t_mem_over_tau": self.t_mem_over_tau.map(fmt_f64),
            "gamma_korringa": self.gamma_korringa.map(fmt_f64),
            "t2_thermal": self.t2_thermal.map(fmt_f64),
            "lambda_critical": self.lambda_critical.map(fmt_f64),
            "threshold_exists": self.threshold_exists,
            "branch": self.branch.map(FormulaBranch::as_str),
            "saturated": self.saturated,
            "jz_star": self.jz_star.map(|s| fmt_f64(s.value)),
            "jz_star_source": self.jz_star.map(|s| s.source.as_str()),
        })
    }
}

/// Evaluates every lifetime quantity that applies to `point`.
pub fn evaluate(point: &CodePoint) -> Result<LifetimeReport> {
    point.validate()?;
    let spec = &point.spec;
    let tau = spec.tau_qec;
    let regime = classify_regime(spec.z_f64(), spec.s);
    let j_l = j_of_l(spec, point.l)?;

    let (mut t_k, mut t_comp, mut t_mem, mut branch, mut saturated) =
        (None, None, None, None, false);
    match point.phase {
        Phase::Antiferromagnetic => {
            let est = if spec.s == 1.0 {
                t_comp_ohmic(point)?
            } else {
                t_comp_subohmic(point, spec.s)?
            };
            t_comp = Some(est.value / tau);
            t_k = Some((est.ln_value - point.epsilon.ln()).exp() / tau);
            branch = Some(est.branch);
            saturated = est.saturated;
        }
        Phase::Ferromagnetic => {
            if point.jz_star.is_some() {
                t_mem = Some(t_mem_fm(point)?.exact / tau);
                branch = Some(FormulaBranch::FerromagneticPowerLaw);
            }
        }
    }

    let (gamma_korringa, t2_thermal) = match thermal_rates(point)? {
        ThermalRates::ZeroTemperature => (None, None),
        ThermalRates::Finite {
            t2_thermal,
            gamma_korringa,
        } => (Some(gamma_korringa), t2_thermal),
    };

    Ok(LifetimeReport {
        l: point.l,
        regime,
        phase: point.phase,
        j_l,
        t_k_over_tau: t_k,
        t_comp_over_tau: t_comp,
        t_mem_over_tau: t_mem,
        gamma_korringa,
        t2_thermal,
        threshold_exists: regime == RegimeLabel::ShortRange,
        lambda_critical: Some(critical_coupling(spec, point.l)?.lambda_c),
        branch,
        saturated,
        jz_star: point.jz_star,
    })
}

/// Speed of light as used for the rounded hardware estimate.
pub const C_ROUNDED: f64 = 3e8;
pub const C_SI: f64 = 2.9979e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Superconducting,
    NeutralAtom,
}

impl Preset {
    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Superconducting => "superconducting",
            Preset::NeutralAtom => "neutral_atom",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "superconducting" => Ok(Preset::Superconducting),
            "neutral_atom" => Ok(Preset::NeutralAtom),
            other => Err(Error::invalid(format!(
                "unknown preset '{other}' (expected superconducting or neutral_atom)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalCurve {
    pub z: Rational64,
    pub branch: RegimeLabel,
    pub points: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PresetReport {
    pub preset: Preset,
    /// Named derived values, in a fixed order.
    pub checks: Vec<(String, f64)>,
    /// Values also known as exact rationals, printed as `p/q`.
    pub exact: Vec<(String, String)>,
    pub curves: Vec<CriticalCurve>,
}

impl PresetReport {
    pub fn check(&self, key: &str) -> Option<f64> {
        self.checks.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    /// JSON form; check values are shortest round-trip numbers.
    pub fn to_json(&self) -> Value {
        let checks: serde_json::Map<String, Value> = self
            .checks
            .iter()
            .map(|(k, v)| (k.clone(), json!(v)))
            .collect();
        let exact: serde_json::Map<String, Value> = self
            .exact
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect();
        let curves: Vec<Value> = self
            .curves
            .iter()
            .map(|c| {
                json!({
                    "z": c.z.to_string(),
                    "branch": c.branch.as_str(),
                    "L": c.points.iter().map(|p| p.0).collect::<Vec<_>>(),
                    "lambda_c": c.points.iter().map(|p| fmt_f64(p.1)).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({
            "preset": self.preset.as_str(),
            "checks": checks,
            "exact": exact,
            "critical_curves": curves,
        })
    }
}

pub const SUPERCONDUCTING_DEFAULT_L: [usize; 4] = [10, 30, 100, 1000];

/// Hardware estimates for the two reference platforms.
///
/// Neutral atoms (`tau = 1 ms`, `a = 3 um`, `z = 1`): light-cone sites per
/// cycle `c tau / a` and the threshold coupling `g_c = 1 / (4 c tau / a)`,
/// evaluated in exact rational arithmetic with `c = 3e8 m/s`, and again in
/// floating point with `c = 2.9979e8 m/s`.
///
/// Superconducting circuits (`tau = 1 us`, `a = 1 mm`, `a0 = a`): critical
/// coupling curves `lambda_c(L)` in SI units for `z` in {1, 1/2, 3/10}.
pub fn preset_report(preset: Preset, l_grid: &[usize]) -> Result<PresetReport> {
    match preset {
        Preset::NeutralAtom => {
            let c = Ratio::<i128>::from_integer(300_000_000);
            let tau = Ratio::<i128>::new(1, 1_000);
            let a = Ratio::<i128>::new(3, 1_000_000);
            let sites = c * tau / a;
            let g_c = Ratio::<i128>::from_integer(1) / (Ratio::from_integer(4) * sites);
            let to_f64 = |r: Ratio<i128>| -> f64 {
                r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
            };
            let sites_si = C_SI * 1e-3 / 3e-6;
            Ok(PresetReport {
                preset,
                checks: vec![
                    ("tau_qec_s".into(), 1e-3),
                    ("a_m".into(), 3e-6),
                    ("c_rounded".into(), C_ROUNDED),
                    ("c_tau_over_a".into(), to_f64(sites)),
                    ("g_c".into(), to_f64(g_c)),
                    ("c_si".into(), C_SI),
                    ("c_tau_over_a_si".into(), sites_si),
                    ("g_c_si".into(), 1.0 / (4.0 * sites_si)),
                ],
                exact: vec![
                    ("c_tau_over_a".into(), sites.to_string()),
                    ("g_c".into(), g_c.to_string()),
                ],
                curves: Vec::new(),
            })
        }
        Preset::Superconducting => {
            for &l in l_grid {
                check_distance(l)?;
            }
            let base = BathSpec {
                tau_qec: 1e-6,
                a: 1e-3,
                a0: 1e-3,
                units: Units::SI,
                ..BathSpec::default()
            };
            let curves = [
                Rational64::from_integer(1),
                Rational64::new(1, 2),
                Rational64::new(3, 10),
            ]
            .into_iter()
            .map(|z| {
                let spec = BathSpec { z, ..base.clone() };
                let points = l_grid
                    .iter()
                    .map(|&l| Ok((l, critical_coupling(&spec, l)?.lambda_c)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(CriticalCurve {
                    z,
                    branch: contraction_branch(z),
                    points,
                })
            })
            .collect::<Result<Vec<_>>>()?;
            let critical = BathSpec {
                z: Rational64::new(1, 2),
                ..base.clone()
            };
            let ratio = critical_coupling(&critical, 100)?.lambda_c
                / critical_coupling(&critical, 10)?.lambda_c;
            Ok(PresetReport {
                preset,
                checks: vec![
                    ("tau_qec_s".into(), base.tau_qec),
                    ("a_m".into(), base.a),
                    ("a0_m".into(), base.a0),
                    (
                        "lambda_c_short_range".into(),
                        critical_coupling(&base, 2)?.lambda_c,
                    ),
                    ("critical_ratio_L100_over_L10".into(), ratio),
                ],
                exact: Vec::new(),
                curves,
            })
        }
    }
}
