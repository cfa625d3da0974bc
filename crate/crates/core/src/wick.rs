//! Pairwise-contraction combinatorics along a one-dimensional error string.
//!
//! [`matching_sum`] is an exact enumeration over perfect matchings and serves
//! as the oracle that the closed-form contraction weight [`lambda_bar_sq`]
//! is checked against (scaling class only, never the prefactor).

use std::fmt;

use num_bigint::BigUint;
use num_rational::Rational64;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;

use crate::bath::BathSpec;
use crate::error::{Error, Result};

/// Hard ceiling on points per matching problem: 19!! = 654,729,075 matchings.
pub const MATCHING_MAX_N: usize = 20;
/// Default ceiling for scaling probes: 15!! = 2,027,025 matchings.
pub const PROBE_DEFAULT_MAX_N: usize = 16;
/// Largest code distance for the exact path count.
pub const N_PATHS_MAX_L: usize = 512;

const REGIME_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MatchingProblem {
    positions: Vec<i64>,
    z: f64,
}

impl MatchingProblem {
    pub fn new(positions: Vec<i64>, z: f64) -> Result<Self> {
        let n = positions.len();
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "matching needs an even number (>= 2) of points, got {n}"
            )));
        }
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("positions must be strictly increasing"));
        }
        if !z.is_finite() || z < 0.0 {
            return Err(Error::invalid(format!(
                "z must be finite and >= 0, got {z}"
            )));
        }
        Ok(MatchingProblem { positions, z })
    }

    /// `n` points at unit spacing starting from 0.
    pub fn unit_string(n: usize, z: f64) -> Result<Self> {
        Self::new((0..n as i64).collect(), z)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[i64] {
        &self.positions
    }

    pub fn z(&self) -> f64 {
        self.z
    }
}

/// Sum over all `(n-1)!!` perfect matchings of `prod |x_i - x_j|^{-2z}`.
///
/// Enumeration pairs the lowest unmatched point with each remaining partner,
/// so each matching is visited once. The top-level branches run in parallel
/// and are reduced in partner order.
pub fn matching_sum(problem: &MatchingProblem) -> Result<f64> {
    let n = problem.len();
    if n > MATCHING_MAX_N {
        return Err(Error::ResourceLimit(format!(
            "exact matching enumeration limited to n <= {MATCHING_MAX_N}, got {n}"
        )));
    }
    let x = &problem.positions;
    let weights: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        ((x[i] - x[j]).unsigned_abs() as f64).powf(-2.0 * problem.z)
                    }
                })
                .collect()
        })
        .collect();

    let rest = ((1u32 << n) - 1) & !1;
    let branches: Vec<f64> = (1..n)
        .into_par_iter()
        .map(|j| weights[0][j] * sum_rest(&weights, rest & !(1 << j)))
        .collect();
    Ok(branches.into_iter().sum())
}

fn sum_rest(weights: &[Vec<f64>], mask: u32) -> f64 {
    if mask == 0 {
        return 1.0;
    }
    let i = mask.trailing_zeros() as usize;
    let rest = mask & (mask - 1);
    let mut total = 0.0;
    let mut partners = rest;
    while partners != 0 {
        let j = partners.trailing_zeros() as usize;
        partners &= partners - 1;
        total += weights[i][j] * sum_rest(weights, rest & !(1 << j));
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSample {
    pub n: usize,
    pub matching_sum: f64,
    /// `matching_sum^{2/n}`: geometric-mean weight per contracted pair.
    pub per_pair_weight: f64,
}

impl ProbeSample {
    pub const CSV_HEADER: &'static str = "n,matching_sum,per_pair_weight";
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrendClass {
    Bounded,
    Logarithmic,
    PowerLaw { exponent: f64 },
}

impl TrendClass {
    pub fn label(&self) -> &'static str {
        match self {
            TrendClass::Bounded => "bounded",
            TrendClass::Logarithmic => "logarithmic",
            TrendClass::PowerLaw { .. } => "power_law",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingProbe {
    pub z: f64,
    pub samples: Vec<ProbeSample>,
    /// Local log-log slopes of the per-pair weight between consecutive samples.
    pub local_slopes: Vec<f64>,
    pub trend: TrendClass,
}

impl ScalingProbe {
    pub fn weights(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.per_pair_weight).collect()
    }

    pub fn increments(&self) -> Vec<f64> {
        self.samples
            .windows(2)
            .map(|w| w[1].per_pair_weight - w[0].per_pair_weight)
            .collect()
    }

    /// Least-squares slope of `ln w` against `ln n` over all samples.
    pub fn loglog_slope(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .samples
            .iter()
            .map(|s| ((s.n as f64).ln(), s.per_pair_weight.ln()))
            .collect();
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        sxy / sxx
    }
}

// Thresholds on last/first local log-log slope. A saturating weight loses
// slope fast, a logarithm loses it slowly, a power law keeps it. Calibrated
// on unit strings with n in 4..=16.
const BOUNDED_SLOPE_RATIO: f64 = 0.85;
const POWER_LAW_SLOPE_RATIO: f64 = 0.97;

/// Samples the per-pair weight of unit-spaced strings and labels its trend.
///
/// At desk-scale `n` the label is a heuristic; callers that need a hard
/// statement should inspect [`ScalingProbe::samples`] directly.
pub fn matching_scaling_probe(
    n_values: &[usize],
    z: f64,
    allow_large: bool,
) -> Result<ScalingProbe> {
    if n_values.len() < 3 {
        return Err(Error::invalid(format!(
            "scaling probe needs at least 3 sample sizes, got {}",
            n_values.len()
        )));
    }
    if n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("sample sizes must be strictly increasing"));
    }
    let ceiling = if allow_large {
        MATCHING_MAX_N
    } else {
        PROBE_DEFAULT_MAX_N
    };
    if let Some(&n) = n_values.iter().find(|&&n| n > ceiling) {
        return Err(Error::ResourceLimit(format!(
            "probe size {n} above ceiling {ceiling} (large sizes need explicit opt-in)"
        )));
    }
    let samples = n_values
        .iter()
        .map(|&n| {
            let sum = matching_sum(&MatchingProblem::unit_string(n, z)?)?;
            Ok(ProbeSample {
                n,
                matching_sum: sum,
                per_pair_weight: sum.powf(2.0 / n as f64),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let local_slopes: Vec<f64> = samples
        .windows(2)
        .map(|w| {
            (w[1].per_pair_weight / w[0].per_pair_weight).ln()
                / (w[1].n as f64 / w[0].n as f64).ln()
        })
        .collect();
    let first = local_slopes[0];
    let last = *local_slopes.last().unwrap();
    let trend = if first <= 0.0 || last <= 0.0 {
        TrendClass::Bounded
    } else {
        let ratio = last / first;
        if ratio < BOUNDED_SLOPE_RATIO {
            TrendClass::Bounded
        } else if ratio < POWER_LAW_SLOPE_RATIO {
            TrendClass::Logarithmic
        } else {
            TrendClass::PowerLaw { exponent: last }
        }
    };
    Ok(ScalingProbe {
        z,
        samples,
        local_slopes,
        trend,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegimeLabel {
    ShortRange,
    Critical,
    LongRange,
}

impl RegimeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            RegimeLabel::ShortRange => "ShortRange",
            RegimeLabel::Critical => "Critical",
            RegimeLabel::LongRange => "LongRange",
        }
    }
}

impl fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Threshold criterion `z > 1/(s+1)`, with `|z - 1/(s+1)| <= 1e-12` counted as critical.
pub fn classify_regime(z: f64, s: f64) -> RegimeLabel {
    let boundary = 1.0 / (s + 1.0);
    if (z - boundary).abs() <= REGIME_TOLERANCE {
        RegimeLabel::Critical
    } else if z > boundary {
        RegimeLabel::ShortRange
    } else {
        RegimeLabel::LongRange
    }
}

pub fn classify_regime_exact(z: Rational64, s: Rational64) -> RegimeLabel {
    let boundary = Rational64::one() / (s + Rational64::one());
    match z.cmp(&boundary) {
        std::cmp::Ordering::Greater => RegimeLabel::ShortRange,
        std::cmp::Ordering::Equal => RegimeLabel::Critical,
        std::cmp::Ordering::Less => RegimeLabel::LongRange,
    }
}

/// Branch of the Ohmic contraction weight selected by `z` against 1/2.
pub fn contraction_branch(z: Rational64) -> RegimeLabel {
    classify_regime_exact(z, Rational64::one())
}

/// Size-dependent factor of the contraction weight: 1, `ln L`, or `L^{1-2z}`.
pub fn contraction_size_factor(z: Rational64, l: usize) -> f64 {
    let zf = z.to_f64().unwrap_or(f64::NAN);
    match contraction_branch(z) {
        RegimeLabel::ShortRange => 1.0,
        RegimeLabel::Critical => (l as f64).ln(),
        RegimeLabel::LongRange => (l as f64).powf(1.0 - 2.0 * zf),
    }
}

fn check_even_distance(l: usize) -> Result<()> {
    if l < 2 || !l.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "code distance must be an even integer >= 2, got {l}"
        )));
    }
    Ok(())
}

/// Effective contraction weight per error segment:
/// `16 lambda^2 tau^2 / (hbar^2 a0^{2(1-z)} a^{2z})` times the size factor.
/// At `z = 1/2` the length scale is `a0 * a`, which the general expression
/// already reduces to.
pub fn lambda_bar_sq(spec: &BathSpec, l: usize) -> Result<f64> {
    check_even_distance(l)?;
    let z = spec.z_f64();
    let hbar = spec.units.hbar;
    let base = 16.0 * (spec.lambda * spec.tau_qec / hbar).powi(2)
        / (spec.a0.powf(2.0 * (1.0 - z)) * spec.a.powf(2.0 * z));
    Ok(base * contraction_size_factor(spec.z, l))
}

/// Exact number of failure pathways `L * C(L, L/2)`.
pub fn n_paths(l: usize) -> Result<BigUint> {
    check_even_distance(l)?;
    if l > N_PATHS_MAX_L {
        return Err(Error::ResourceLimit(format!(
            "exact path count limited to L <= {N_PATHS_MAX_L}, got {l}"
        )));
    }
    Ok(BigUint::from(l) * central_binomial(l))
}

/// `C(l, l/2)` by the multiplicative recurrence, exact at every step.
fn central_binomial(l: usize) -> BigUint {
    let k = l / 2;
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= BigUint::from(l - i);
        acc /= BigUint::from(i + 1);
    }
    acc
}

/// Stirling form `sqrt(2L/pi) 2^L` of the path count.
pub fn n_paths_stirling(l: usize) -> Result<f64> {
    check_even_distance(l)?;
    let lf = l as f64;
    Ok((2.0 * lf / std::f64::consts::PI).sqrt() * 2f64.powf(lf))
}

/// `n_paths_stirling(l) / n_paths(l)` computed without overflowing f64.
pub fn stirling_ratio(l: usize) -> Result<f64> {
    let exact = n_paths(l)?;
    let stirling = n_paths_stirling(l)?;
    let exact = exact
        .to_f64()
        .ok_or_else(|| Error::ResourceLimit("path count exceeds f64 range".into()))?;
    Ok(stirling / exact)
}
