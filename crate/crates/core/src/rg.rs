//! One-loop anisotropic Kondo flow
//! `djx/dl = jy jz`, `djy/dl = jx jz`, `djz/dl = jx jy`.
//!
//! Traces stop at one of three events: a coupling reaches the strong-coupling
//! ceiling, the transverse couplings stay below the localization floor for a
//! full dwell interval, or the RG scale reaches `l_max`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use crate::bath::BathSpec;
use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::ode::{dp45_step, next_step};

const MAX_STEPS: usize = 50_000_000;
const CROSSING_BISECTIONS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CouplingVector {
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
}

impl CouplingVector {
    pub const fn new(jx: f64, jy: f64, jz: f64) -> Self {
        CouplingVector { jx, jy, jz }
    }

    /// Symmetric error model `jx = jy = j_perp`.
    pub const fn symmetric(j_perp: f64, jz: f64) -> Self {
        CouplingVector::new(j_perp, j_perp, jz)
    }

    pub const fn isotropic(j: f64) -> Self {
        CouplingVector::new(j, j, j)
    }

    pub fn is_finite(&self) -> bool {
        self.jx.is_finite() && self.jy.is_finite() && self.jz.is_finite()
    }

    pub fn max_abs(&self) -> f64 {
        self.jx.abs().max(self.jy.abs()).max(self.jz.abs())
    }

    pub fn transverse(&self) -> f64 {
        self.jx.abs().max(self.jy.abs())
    }

    fn to_array(self) -> [f64; 3] {
        [self.jx, self.jy, self.jz]
    }

    fn from_array(a: [f64; 3]) -> Self {
        CouplingVector::new(a[0], a[1], a[2])
    }
}

impl Add for CouplingVector {
    type Output = CouplingVector;
    fn add(self, o: CouplingVector) -> CouplingVector {
        CouplingVector::new(self.jx + o.jx, self.jy + o.jy, self.jz + o.jz)
    }
}

impl Sub for CouplingVector {
    type Output = CouplingVector;
    fn sub(self, o: CouplingVector) -> CouplingVector {
        CouplingVector::new(self.jx - o.jx, self.jy - o.jy, self.jz - o.jz)
    }
}

impl Mul<f64> for CouplingVector {
    type Output = CouplingVector;
    fn mul(self, k: f64) -> CouplingVector {
        CouplingVector::new(self.jx * k, self.jy * k, self.jz * k)
    }
}

pub fn flow_rhs(j: CouplingVector) -> CouplingVector {
    CouplingVector::new(j.jy * j.jz, j.jx * j.jz, j.jx * j.jy)
}

/// `(jx^2 - jy^2, jz^2 - jx^2)`, both conserved by the flow.
pub fn constants_of_motion(j: CouplingVector) -> (f64, f64) {
    (j.jx * j.jx - j.jy * j.jy, j.jz * j.jz - j.jx * j.jx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowOptions {
    pub j_max: f64,
    pub j_min: f64,
    pub l_max: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Keep every `sample_stride`-th accepted step (first and last always kept).
    pub sample_stride: usize,
    /// RG time the transverse couplings must stay below `j_min`.
    pub localization_dwell: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            j_max: 1.0,
            j_min: 1e-8,
            l_max: 1e3,
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            sample_stride: 1,
            localization_dwell: 1.0,
        }
    }
}

impl FlowOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.j_min > 0.0 && self.j_min < self.j_max) || !self.j_max.is_finite() {
            return Err(Error::invalid(format!(
                "need 0 < j_min < j_max, got j_min = {}, j_max = {}",
                self.j_min, self.j_max
            )));
        }
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::invalid("integrator tolerances must be positive"));
        }
        if self.l_max.is_nan() {
            return Err(Error::invalid("l_max must not be NaN"));
        }
        if self.sample_stride == 0 {
            return Err(Error::invalid("sample_stride must be >= 1"));
        }
        if !(self.localization_dwell >= 0.0) {
            return Err(Error::invalid("localization_dwell must be >= 0"));
        }
        Ok(())
    }

    /// Caps `l_max` at the thermal scale of `spec` (no change at zero temperature).
    pub fn with_thermal_cutoff(mut self, spec: &BathSpec) -> Self {
        self.l_max = self.l_max.min(thermal_cutoff(spec));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Terminal {
    /// A coupling reached `j_max`; `l_star` is extrapolated to the pole.
    StrongCoupling {
        l_stop: f64,
        l_star: f64,
    },
    Localized {
        l: f64,
        j_star: CouplingVector,
    },
    CutoffReached {
        l_max: f64,
    },
}

impl Terminal {
    pub fn label(&self) -> &'static str {
        match self {
            Terminal::StrongCoupling { .. } => "StrongCoupling",
            Terminal::Localized { .. } => "Localized",
            Terminal::CutoffReached { .. } => "CutoffReached",
        }
    }

    /// RG scale at which the trace ended (extrapolated pole for strong coupling).
    pub fn scale(&self) -> f64 {
        match *self {
            Terminal::StrongCoupling { l_star, .. } => l_star,
            Terminal::Localized { l, .. } => l,
            Terminal::CutoffReached { l_max } => l_max,
        }
    }
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSample {
    pub l: f64,
    pub j: CouplingVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub initial: CouplingVector,
    pub samples: Vec<FlowSample>,
    pub terminal: Terminal,
    /// Largest deviation of either constant of motion from its initial value,
    /// over every accepted step.
    pub invariant_drift: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl FlowTrace {
    pub const CSV_HEADER: &'static str = "l,jx,jy,jz,c1,c2";

    pub fn last(&self) -> FlowSample {
        *self
            .samples
            .last()
            .expect("trace always holds the initial sample")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.samples.len() + 1));
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            let (c1, c2) = constants_of_motion(s.j);
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fmt_f64(s.l),
                fmt_f64(s.j.jx),
                fmt_f64(s.j.jy),
                fmt_f64(s.j.jz),
                fmt_f64(c1),
                fmt_f64(c2)
            ));
        }
        out
    }
}

fn rhs_array(y: &[f64; 3]) -> [f64; 3] {
    [y[1] * y[2], y[0] * y[2], y[0] * y[1]]
}

/// Integrates the flow from `j0` with adaptive Dormand-Prince steps.
///
/// On reaching the ceiling the crossing point is located by bisection on the
/// last step, and `l_star = l_stop + 1/|j(l_stop)|_max`: the remaining
/// distance to the pole of the isotropic flow `dj/dl = j^2`.
pub fn integrate_flow(j0: CouplingVector, opts: &FlowOptions) -> Result<FlowTrace> {
    opts.validate()?;
    if !j0.is_finite() {
        return Err(Error::invalid("initial couplings must be finite"));
    }

    let c0 = constants_of_motion(j0);
    let mut samples = vec![FlowSample { l: 0.0, j: j0 }];
    let trace = |samples: Vec<FlowSample>, terminal, drift, acc, rej| FlowTrace {
        initial: j0,
        samples,
        terminal,
        invariant_drift: drift,
        accepted_steps: acc,
        rejected_steps: rej,
    };

    if j0.max_abs() >= opts.j_max {
        let l_star = 1.0 / j0.max_abs();
        return Ok(trace(
            samples,
            Terminal::StrongCoupling {
                l_stop: 0.0,
                l_star,
            },
            0.0,
            0,
            0,
        ));
    }
    if opts.l_max <= 0.0 {
        return Ok(trace(
            samples,
            Terminal::CutoffReached { l_max: opts.l_max },
            0.0,
            0,
            0,
        ));
    }

    let mut l = 0.0;
    let mut y = j0.to_array();
    let rate = flow_rhs(j0).max_abs();
    let mut h = if rate > 0.0 {
        (0.01 / rate).min(0.1)
    } else {
        0.1
    };
    let mut drift: f64 = 0.0;
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut localized_since: Option<f64> = None;

    for _ in 0..MAX_STEPS {
        if l >= opts.l_max {
            break;
        }
        h = h.min(opts.l_max - l);
        let step = dp45_step(&rhs_array, &y, h, opts.abs_tol, opts.rel_tol);
        if !(step.err <= 1.0) {
            rejected += 1;
            h = next_step(h, if step.err.is_finite() { step.err } else { 1e10 });
            if h < f64::EPSILON * l.max(1.0) {
                return Err(Error::invalid(
                    "step size underflow during flow integration",
                ));
            }
            continue;
        }

        let j_new = CouplingVector::from_array(step.y);
        if j_new.max_abs() >= opts.j_max {
            let (h_cross, y_cross) = locate_crossing(&y, h, opts);
            let j_cross = CouplingVector::from_array(y_cross);
            l += h_cross;
            accepted += 1;
            drift = drift.max(deviation(j_cross, c0));
            samples.push(FlowSample { l, j: j_cross });
            let l_star = l + 1.0 / j_cross.max_abs();
            return Ok(trace(
                samples,
                Terminal::StrongCoupling { l_stop: l, l_star },
                drift,
                accepted,
                rejected,
            ));
        }

        l += h;
        y = step.y;
        accepted += 1;
        drift = drift.max(deviation(j_new, c0));
        if accepted.is_multiple_of(opts.sample_stride) {
            samples.push(FlowSample { l, j: j_new });
        }

        if j_new.transverse() < opts.j_min {
            let since = *localized_since.get_or_insert(l);
            if l - since >= opts.localization_dwell {
                push_last(&mut samples, l, j_new);
                return Ok(trace(
                    samples,
                    Terminal::Localized { l, j_star: j_new },
                    drift,
                    accepted,
                    rejected,
                ));
            }
        } else {
            localized_since = None;
        }

        h = next_step(h, step.err);
    }

    push_last(&mut samples, l, CouplingVector::from_array(y));
    Ok(trace(
        samples,
        Terminal::CutoffReached { l_max: l },
        drift,
        accepted,
        rejected,
    ))
}

fn push_last(samples: &mut Vec<FlowSample>, l: f64, j: CouplingVector) {
    if samples.last().map(|s| s.l) != Some(l) {
        samples.push(FlowSample { l, j });
    }
}

fn deviation(j: CouplingVector, c0: (f64, f64)) -> f64 {
    let (c1, c2) = constants_of_motion(j);
    (c1 - c0.0).abs().max((c2 - c0.1).abs())
}

/// Sub-step `h' <= h` at which `max |j|` first equals `j_max`.
fn locate_crossing(y: &[f64; 3], h: f64, opts: &FlowOptions) -> (f64, [f64; 3]) {
    let (mut lo, mut hi) = (0.0, h);
    let mut y_hi = dp45_step(&rhs_array, y, hi, opts.abs_tol, opts.rel_tol).y;
    for _ in 0..CROSSING_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let y_mid = dp45_step(&rhs_array, y, mid, opts.abs_tol, opts.rel_tol).y;
        if CouplingVector::from_array(y_mid).max_abs() >= opts.j_max {
            hi = mid;
            y_hi = y_mid;
        } else {
            lo = mid;
        }
    }
    (hi, y_hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Ferromagnetic,
    Antiferromagnetic,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Ferromagnetic => "FM",
            Phase::Antiferromagnetic => "AFM",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMethod {
    /// Closed-form boundary `jz <= -j_perp` of the symmetric model.
    Boundary,
    /// Asymmetric start; label taken from the integrated terminal event.
    Flow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseVerdict {
    pub phase: Phase,
    pub method: PhaseMethod,
}

/// Ferromagnetic iff `jz <= -|j_perp|` when `jx == jy`; otherwise the flow
/// decides (strong coupling means antiferromagnetic, anything else
/// ferromagnetic).
pub fn classify_phase(j0: CouplingVector, opts: &FlowOptions) -> Result<PhaseVerdict> {
    if !j0.is_finite() {
        return Err(Error::invalid("initial couplings must be finite"));
    }
    if j0.jx.abs() == j0.jy.abs() {
        let phase = if j0.jz <= -j0.jx.abs() {
            Phase::Ferromagnetic
        } else {
            Phase::Antiferromagnetic
        };
        return Ok(PhaseVerdict {
            phase,
            method: PhaseMethod::Boundary,
        });
    }
    let trace = integrate_flow(j0, opts)?;
    let phase = match trace.terminal {
        Terminal::StrongCoupling { .. } => Phase::Antiferromagnetic,
        _ => Phase::Ferromagnetic,
    };
    Ok(PhaseVerdict {
        phase,
        method: PhaseMethod::Flow,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KondoScale {
    pub l_star: f64,
    /// `k_B T_K = (hbar / tau) e^{-l_star}` from the integrated flow.
    pub kb_tk: f64,
    /// `t_K = hbar / (k_B T_K) = tau e^{l_star}`.
    pub t_k: f64,
    /// `(k_B T_K, t_K)` from `e^{-1/j}` for isotropic starts.
    pub analytic: Option<(f64, f64)>,
}

impl KondoScale {
    pub fn t_k_over_tau(&self, spec: &BathSpec) -> f64 {
        self.t_k / spec.tau_qec
    }
}

/// Kondo energy and time scales of an antiferromagnetic start. At finite
/// temperature the flow is cut at the thermal scale first.
pub fn kondo_scale(j0: CouplingVector, spec: &BathSpec, opts: &FlowOptions) -> Result<KondoScale> {
    let verdict = classify_phase(j0, opts)?;
    if verdict.phase != Phase::Antiferromagnetic {
        return Err(Error::PhaseMismatch {
            expected: "AFM",
            found: "FM",
        });
    }
    let opts = opts.clone().with_thermal_cutoff(spec);
    let trace = integrate_flow(j0, &opts)?;
    let Terminal::StrongCoupling { l_star, .. } = trace.terminal else {
        return Err(Error::NoStrongCoupling { l_max: opts.l_max });
    };
    let energy_cutoff = spec.units.hbar / spec.tau_qec;
    let kb_tk = energy_cutoff * (-l_star).exp();
    let analytic = (j0.jx == j0.jy && j0.jy == j0.jz && j0.jz > 0.0).then(|| {
        let kb = energy_cutoff * (-1.0 / j0.jz).exp();
        (kb, spec.tau_qec * (1.0 / j0.jz).exp())
    });
    Ok(KondoScale {
        l_star,
        kb_tk,
        t_k: spec.tau_qec * l_star.exp(),
        analytic,
    })
}

/// Sub-Ohmic flow `dj/dl = (1 - s) j`, solved in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubOhmicFlow {
    pub j0: f64,
    pub s: f64,
    /// Scale at which `j` reaches 1 (zero when `j0 >= 1`).
    pub l_star: f64,
}

impl SubOhmicFlow {
    pub fn j_at(&self, l: f64) -> f64 {
        self.j0 * ((1.0 - self.s) * l).exp()
    }
}

pub fn subohmic_flow(j0: f64, s: f64) -> Result<SubOhmicFlow> {
    if s >= 1.0 {
        return Err(Error::invalid(format!(
            "s = {s} is Ohmic or super-Ohmic; use the Kondo flow"
        )));
    }
    if !(s > 0.0) {
        return Err(Error::invalid(format!("s must be positive, got {s}")));
    }
    if !(j0 > 0.0) || !j0.is_finite() {
        return Err(Error::invalid(format!("j0 must be positive, got {j0}")));
    }
    let l_star = ((1.0 / j0).ln() / (1.0 - s)).max(0.0);
    Ok(SubOhmicFlow { j0, s, l_star })
}

/// `ln(t_th / tau)` with `t_th = hbar / (pi k_B T)`; infinite at `T = 0`.
pub fn thermal_cutoff(spec: &BathSpec) -> f64 {
    if spec.temperature <= 0.0 {
        return f64::INFINITY;
    }
    let t_th = spec.units.hbar / (std::f64::consts::PI * spec.units.kb * spec.temperature);
    (t_th / spec.tau_qec).ln()
}
