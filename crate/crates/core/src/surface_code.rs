//! Planar surface code on an `L x L` vertex grid, plus the one-dimensional
//! contour decoder used to expose the order-`L/2` decoding ambiguity.
//!
//! Edge layout (qubits live on edges):
//!
//! * horizontal edge `h(r, c)` for `r, c in 0..L`, index `r * L + c` (`L^2` qubits);
//! * vertical edge `v(r, c)` for `r, c in 0..L-1`, index `L^2 + r * (L-1) + c`
//!   (`(L-1)^2` qubits).
//!
//! Stars (X-type vertex checks) sit at `(r, c)` with `r in 0..L`, `c in 0..L-1`
//! and touch `h(r,c)`, `h(r,c+1)`, `v(r-1,c)`, `v(r,c)`. Plaquettes (Z-type
//! tile checks) sit at `(r, c)` with `r in 0..L-1`, `c in 0..L` and touch
//! `h(r,c)`, `h(r+1,c)`, `v(r,c-1)`, `v(r,c)`. Missing edges at the
//! boundaries leave three-qubit checks. There are `L(L-1)` of each, so the
//! code stores exactly one logical qubit.
//!
//! `logical_z` is the horizontal row `h(0, 0..L)`; `logical_x` is the column
//! `h(0..L, 0)`. They cross once, on `h(0, 0)`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest contour length accepted by [`failure_census`].
pub const CENSUS_MAX_L: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Edge {
    Horizontal { row: usize, col: usize },
    Vertical { row: usize, col: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Z,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceCode {
    l: usize,
    qubits: Vec<Edge>,
    stars: Vec<Vec<usize>>,
    plaquettes: Vec<Vec<usize>>,
    logical_x: Vec<usize>,
    logical_z: Vec<usize>,
    delta0: f64,
}

impl SurfaceCode {
    pub fn distance(&self) -> usize {
        self.l
    }

    pub fn qubits(&self) -> &[Edge] {
        &self.qubits
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn stars(&self) -> &[Vec<usize>] {
        &self.stars
    }

    pub fn plaquettes(&self) -> &[Vec<usize>] {
        &self.plaquettes
    }

    pub fn logical_x(&self) -> &[usize] {
        &self.logical_x
    }

    pub fn logical_z(&self) -> &[usize] {
        &self.logical_z
    }

    /// Code gap of the stabilizer Hamiltonian. Carried as metadata only.
    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    pub fn with_gap(mut self, delta0: f64) -> Self {
        self.delta0 = delta0;
        self
    }

    pub fn horizontal(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.l && col < self.l);
        row * self.l + col
    }

    pub fn vertical(&self, row: usize, col: usize) -> usize {
        debug_assert!(row + 1 < self.l && col + 1 < self.l);
        self.l * self.l + row * (self.l - 1) + col
    }

    /// Star index of the junction between `h(row, col)` and `h(row, col + 1)`.
    pub fn star_at(&self, row: usize, col: usize) -> usize {
        row * (self.l - 1) + col
    }

    /// Qubits of the horizontal contour `row`, ordered left to right.
    pub fn contour(&self, row: usize) -> Vec<usize> {
        (0..self.l).map(|c| self.horizontal(row, c)).collect()
    }

    fn check_support(&self, error: &ErrorChain) -> Result<()> {
        match error.support.iter().next_back() {
            Some(&q) if q >= self.qubits.len() => Err(Error::invalid(format!(
                "qubit index {q} out of range for {} qubits",
                self.qubits.len()
            ))),
            _ => Ok(()),
        }
    }
}

/// Builds the distance-`l` planar code.
pub fn build_code(l: usize) -> Result<SurfaceCode> {
    if l < 2 || !l.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "code distance must be an even integer >= 2, got {l}"
        )));
    }
    let n_h = l * l;
    let h = |r: usize, c: usize| r * l + c;
    let v = |r: usize, c: usize| n_h + r * (l - 1) + c;

    let mut qubits = Vec::with_capacity(n_h + (l - 1) * (l - 1));
    for row in 0..l {
        for col in 0..l {
            qubits.push(Edge::Horizontal { row, col });
        }
    }
    for row in 0..l - 1 {
        for col in 0..l - 1 {
            qubits.push(Edge::Vertical { row, col });
        }
    }

    let mut stars = Vec::with_capacity(l * (l - 1));
    for r in 0..l {
        for c in 0..l - 1 {
            let mut s = vec![h(r, c), h(r, c + 1)];
            if r > 0 {
                s.push(v(r - 1, c));
            }
            if r + 1 < l {
                s.push(v(r, c));
            }
            s.sort_unstable();
            stars.push(s);
        }
    }

    let mut plaquettes = Vec::with_capacity(l * (l - 1));
    for r in 0..l - 1 {
        for c in 0..l {
            let mut p = vec![h(r, c), h(r + 1, c)];
            if c > 0 {
                p.push(v(r, c - 1));
            }
            if c + 1 < l {
                p.push(v(r, c));
            }
            p.sort_unstable();
            plaquettes.push(p);
        }
    }

    Ok(SurfaceCode {
        l,
        qubits,
        stars,
        plaquettes,
        logical_x: (0..l).map(|r| h(r, 0)).collect(),
        logical_z: (0..l).map(|c| h(0, c)).collect(),
        delta0: 1.0,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorChain {
    pub kind: Pauli,
    pub support: BTreeSet<usize>,
}

impl ErrorChain {
    pub fn new(kind: Pauli, support: impl IntoIterator<Item = usize>) -> Self {
        ErrorChain {
            kind,
            support: support.into_iter().collect(),
        }
    }

    pub fn z(support: impl IntoIterator<Item = usize>) -> Self {
        Self::new(Pauli::Z, support)
    }

    pub fn weight(&self) -> usize {
        self.support.len()
    }

    /// Product of two chains of the same Pauli type (symmetric difference).
    pub fn compose(&self, other: &ErrorChain) -> Result<ErrorChain> {
        if self.kind != other.kind {
            return Err(Error::invalid(
                "cannot compose chains of different Pauli type",
            ));
        }
        Ok(ErrorChain {
            kind: self.kind,
            support: self
                .support
                .symmetric_difference(&other.support)
                .copied()
                .collect(),
        })
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Syndrome {
    pub defects: BTreeSet<usize>,
}

impl Syndrome {
    pub fn new(defects: impl IntoIterator<Item = usize>) -> Self {
        Syndrome {
            defects: defects.into_iter().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.defects.is_empty()
    }
}

/// Z chains are detected by stars, X chains by plaquettes. The returned
/// defects index into [`SurfaceCode::stars`] or [`SurfaceCode::plaquettes`]
/// accordingly.
pub fn syndrome_of(code: &SurfaceCode, error: &ErrorChain) -> Result<Syndrome> {
    code.check_support(error)?;
    let checks = match error.kind {
        Pauli::Z => &code.stars,
        Pauli::X => &code.plaquettes,
    };
    let defects = checks
        .iter()
        .enumerate()
        .filter(|(_, check)| check.iter().filter(|q| error.support.contains(q)).count() % 2 == 1)
        .map(|(id, _)| id)
        .collect();
    Ok(Syndrome { defects })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TieBreak {
    /// Surface the tie as a distinct status.
    Report,
    /// Pick the candidate equal to the true error.
    Benign,
    /// Pick the candidate complementary to the true error.
    Adversarial,
}

impl TieBreak {
    pub const ALL: [TieBreak; 3] = [TieBreak::Report, TieBreak::Benign, TieBreak::Adversarial];

    pub fn as_str(self) -> &'static str {
        match self {
            TieBreak::Report => "report",
            TieBreak::Benign => "benign",
            TieBreak::Adversarial => "adversarial",
        }
    }
}

impl fmt::Display for TieBreak {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TieBreak {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "report" => Ok(TieBreak::Report),
            "benign" => Ok(TieBreak::Benign),
            "adversarial" => Ok(TieBreak::Adversarial),
            other => Err(Error::invalid(format!(
                "unknown tie-break rule '{other}' (expected report, benign or adversarial)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecodeStatus {
    Success,
    LogicalError,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutcome {
    pub correction: ErrorChain,
    pub status: DecodeStatus,
    pub tie_break_used: TieBreak,
    /// Whether two distinct minimum-weight corrections existed.
    pub ambiguous: bool,
}

fn check_contour_len(l: usize) -> Result<()> {
    if l < 2 {
        return Err(Error::invalid(format!(
            "contour length must be >= 2, got {l}"
        )));
    }
    Ok(())
}

/// Junction `j` (between contour qubits `j` and `j + 1`) is flipped when
/// exactly one of its two neighbours carries an error. Both contour ends are
/// open, so endpoint defects are absorbed.
pub fn contour_syndrome(l: usize, error: &ErrorChain) -> Result<Syndrome> {
    check_contour_len(l)?;
    if let Some(&q) = error.support.iter().next_back() {
        if q >= l {
            return Err(Error::invalid(format!(
                "contour position {q} out of range for length {l}"
            )));
        }
    }
    let on = |i: usize| error.support.contains(&i);
    Ok(Syndrome {
        defects: (0..l - 1).filter(|&j| on(j) != on(j + 1)).collect(),
    })
}

/// The only two corrections consistent with a contour syndrome: the chain
/// built by walking left to right starting clean, and its complement.
/// Returned with the lexicographically smaller support first.
pub fn contour_candidates(l: usize, syndrome: &Syndrome, kind: Pauli) -> Result<[ErrorChain; 2]> {
    check_contour_len(l)?;
    if let Some(&j) = syndrome.defects.iter().next_back() {
        if j >= l - 1 {
            return Err(Error::invalid(format!(
                "junction index {j} out of range for contour length {l} (max {})",
                l - 2
            )));
        }
    }
    let mut on = false;
    let mut first = BTreeSet::new();
    let mut second = BTreeSet::new();
    for q in 0..l {
        if q > 0 && syndrome.defects.contains(&(q - 1)) {
            on = !on;
        }
        if on {
            first.insert(q);
        } else {
            second.insert(q);
        }
    }
    let mut pair = [
        ErrorChain {
            kind,
            support: first,
        },
        ErrorChain {
            kind,
            support: second,
        },
    ];
    if pair[1].support.iter().lt(pair[0].support.iter()) {
        pair.swap(0, 1);
    }
    Ok(pair)
}

/// Minimum-weight decoding on a single open contour of length `l`.
///
/// The correction is chosen from the syndrome alone; `truth` is consulted
/// only to break ties under the benign/adversarial rules and to classify the
/// residual. A residual that covers the whole contour crosses the logical
/// operator once and is a logical error.
pub fn decode_contour(
    l: usize,
    syndrome: &Syndrome,
    truth: &ErrorChain,
    rule: TieBreak,
) -> Result<DecodeOutcome> {
    let observed = contour_syndrome(l, truth)?;
    if observed != *syndrome {
        return Err(Error::invalid(
            "syndrome is inconsistent with the supplied error",
        ));
    }
    let [a, b] = contour_candidates(l, syndrome, truth.kind)?;
    let ambiguous = a.weight() == b.weight();

    let status_for = |correction: &ErrorChain| -> DecodeStatus {
        let residual = correction
            .support
            .symmetric_difference(&truth.support)
            .count();
        if residual == 0 {
            DecodeStatus::Success
        } else {
            debug_assert_eq!(residual, l);
            DecodeStatus::LogicalError
        }
    };

    let (correction, status) = if !ambiguous {
        let best = if a.weight() < b.weight() { a } else { b };
        let status = status_for(&best);
        (best, status)
    } else {
        match rule {
            TieBreak::Report => (a, DecodeStatus::Tie),
            TieBreak::Benign => {
                let pick = if a == *truth { a } else { b };
                (pick, DecodeStatus::Success)
            }
            TieBreak::Adversarial => {
                let pick = if a == *truth { b } else { a };
                (pick, DecodeStatus::LogicalError)
            }
        }
    };

    Ok(DecodeOutcome {
        correction,
        status,
        tie_break_used: rule,
        ambiguous,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CensusRecord {
    pub l: usize,
    pub weight: usize,
    pub rule: TieBreak,
    pub n_success: u64,
    pub n_logical: u64,
    pub n_tie: u64,
}

impl CensusRecord {
    pub const CSV_HEADER: &'static str = "L,weight,rule,n_success,n_logical,n_tie";

    pub fn total(&self) -> u64 {
        self.n_success + self.n_logical + self.n_tie
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.l, self.weight, self.rule, self.n_success, self.n_logical, self.n_tie
        )
    }
}

/// Decodes every weight-`weight` Z configuration on a length-`l` contour.
pub fn failure_census(l: usize, weight: usize, rule: TieBreak) -> Result<CensusRecord> {
    check_contour_len(l)?;
    if l > CENSUS_MAX_L {
        return Err(Error::ResourceLimit(format!(
            "exhaustive census limited to L <= {CENSUS_MAX_L}, got {l}"
        )));
    }
    if weight > l {
        return Err(Error::invalid(format!(
            "weight {weight} exceeds contour length {l}"
        )));
    }
    let mut record = CensusRecord {
        l,
        weight,
        rule,
        n_success: 0,
        n_logical: 0,
        n_tie: 0,
    };
    for mask in FixedWeightMasks::new(l, weight) {
        let error = ErrorChain::z((0..l).filter(|i| mask >> i & 1 == 1));
        let syndrome = contour_syndrome(l, &error)?;
        match decode_contour(l, &syndrome, &error, rule)?.status {
            DecodeStatus::Success => record.n_success += 1,
            DecodeStatus::LogicalError => record.n_logical += 1,
            DecodeStatus::Tie => record.n_tie += 1,
        }
    }
    Ok(record)
}

/// All `n`-bit masks with exactly `k` bits set, in increasing order (Gosper).
struct FixedWeightMasks {
    next: Option<u64>,
    limit: u64,
}

impl FixedWeightMasks {
    fn new(n: usize, k: usize) -> Self {
        let limit = 1u64 << n;
        let first = if k == 0 { 0 } else { (1u64 << k) - 1 };
        FixedWeightMasks {
            next: (k <= n).then_some(first),
            limit,
        }
    }
}

impl Iterator for FixedWeightMasks {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let cur = self.next?;
        self.next = if cur == 0 {
            None
        } else {
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            let n = (((r ^ cur) >> 2) / c) | r;
            (n < self.limit).then_some(n)
        };
        Some(cur)
    }
}

/// Static field profile `-(J_z / 2v) * zbar * sgn(x)` of the boundary-coupled bath.
pub fn vacuum_profile(x: f64, jz: f64, v: f64, zbar: i8) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::invalid(format!(
            "velocity must be positive, got {v}"
        )));
    }
    if zbar != 1 && zbar != -1 {
        return Err(Error::invalid(format!(
            "logical eigenvalue must be +1 or -1, got {zbar}"
        )));
    }
    if x == 0.0 {
        return Err(Error::Singularity(
            "vacuum profile is discontinuous at x = 0".into(),
        ));
    }
    Ok(-(jz / (2.0 * v)) * f64::from(zbar) * x.signum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn overlap(a: &[usize], b: &[usize]) -> usize {
        a.iter().filter(|q| b.contains(q)).count()
    }

    #[test]
    fn rejects_odd_or_small_distance() {
        for l in [0, 1, 3, 7] {
            assert!(matches!(build_code(l), Err(Error::InvalidArgument(_))));
        }
    }

    #[test]
    fn star_plaquette_overlaps_are_even() {
        for l in [2, 4, 6] {
            let code = build_code(l).unwrap();
            for s in code.stars() {
                for p in code.plaquettes() {
                    let k = overlap(s, p);
                    assert!(k == 0 || k == 2, "L={l} overlap {k}");
                }
            }
        }
    }

    #[test]
    fn logicals_cross_once_and_commute_with_checks() {
        for l in [2, 4, 6, 8] {
            let code = build_code(l).unwrap();
            assert_eq!(overlap(code.logical_x(), code.logical_z()) % 2, 1);
            for s in code.stars() {
                assert_eq!(overlap(s, code.logical_z()) % 2, 0);
            }
            for p in code.plaquettes() {
                assert_eq!(overlap(p, code.logical_x()) % 2, 0);
            }
        }
    }

    #[test]
    fn bulk_checks_have_four_qubits_and_boundary_three() {
        let code = build_code(6).unwrap();
        for (i, s) in code.stars().iter().enumerate() {
            let row = i / 5;
            let expected = if row == 0 || row == 5 { 3 } else { 4 };
            assert_eq!(s.len(), expected);
        }
        for (i, p) in code.plaquettes().iter().enumerate() {
            let col = i % 6;
            let expected = if col == 0 || col == 5 { 3 } else { 4 };
            assert_eq!(p.len(), expected);
        }
    }

    #[test]
    fn single_bulk_z_flips_two_stars() {
        let code = build_code(4).unwrap();
        let q = code.horizontal(1, 2);
        let s = syndrome_of(&code, &ErrorChain::z([q])).unwrap();
        assert_eq!(s.defects.len(), 2);
        let q = code.vertical(1, 1);
        assert_eq!(
            syndrome_of(&code, &ErrorChain::z([q]))
                .unwrap()
                .defects
                .len(),
            2
        );
    }

    #[test]
    fn empty_and_logical_chains_are_silent() {
        let code = build_code(4).unwrap();
        assert!(syndrome_of(&code, &ErrorChain::z([])).unwrap().is_empty());
        let lz = ErrorChain::z(code.logical_z().iter().copied());
        assert!(syndrome_of(&code, &lz).unwrap().is_empty());
        let lx = ErrorChain::new(Pauli::X, code.logical_x().iter().copied());
        assert!(syndrome_of(&code, &lx).unwrap().is_empty());
    }

    #[test]
    fn out_of_range_qubit_is_rejected() {
        let code = build_code(2).unwrap();
        let err = syndrome_of(&code, &ErrorChain::z([5])).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn contour_junctions_match_row_stars() {
        let l = 6;
        let code = build_code(l).unwrap();
        let row = 2;
        let contour = code.contour(row);
        for mask in 0u64..(1 << l) {
            let positions: Vec<usize> = (0..l).filter(|i| mask >> i & 1 == 1).collect();
            let on_contour =
                contour_syndrome(l, &ErrorChain::z(positions.iter().copied())).unwrap();
            let on_code =
                syndrome_of(&code, &ErrorChain::z(positions.iter().map(|&i| contour[i]))).unwrap();
            let mapped: BTreeSet<usize> = on_contour
                .defects
                .iter()
                .map(|&j| code.star_at(row, j))
                .collect();
            assert_eq!(mapped, on_code.defects);
        }
    }

    #[test]
    fn decode_single_error_is_unique() {
        let truth = ErrorChain::z([0]);
        let s = contour_syndrome(4, &truth).unwrap();
        let out = decode_contour(4, &s, &truth, TieBreak::Report).unwrap();
        assert_eq!(out.status, DecodeStatus::Success);
        assert_eq!(out.correction, truth);
        assert!(!out.ambiguous);
    }

    #[test]
    fn decode_adjacent_pair_ties() {
        let truth = ErrorChain::z([0, 1]);
        let s = contour_syndrome(4, &truth).unwrap();
        let out = decode_contour(4, &s, &truth, TieBreak::Report).unwrap();
        assert_eq!(out.status, DecodeStatus::Tie);
        let [a, b] = contour_candidates(4, &s, Pauli::Z).unwrap();
        assert_eq!(a, ErrorChain::z([0, 1]));
        assert_eq!(b, ErrorChain::z([2, 3]));
    }

    #[test]
    fn decode_alternating_pair_adversarial_fails() {
        let truth = ErrorChain::z([0, 2]);
        let s = contour_syndrome(4, &truth).unwrap();
        let [a, b] = contour_candidates(4, &s, Pauli::Z).unwrap();
        assert_eq!((a.support.len(), b.support.len()), (2, 2));
        assert_eq!(b, ErrorChain::z([1, 3]));
        let out = decode_contour(4, &s, &truth, TieBreak::Adversarial).unwrap();
        assert_eq!(out.status, DecodeStatus::LogicalError);
        assert_eq!(out.correction, ErrorChain::z([1, 3]));
        let out = decode_contour(4, &s, &truth, TieBreak::Benign).unwrap();
        assert_eq!(out.status, DecodeStatus::Success);
    }

    #[test]
    fn junction_out_of_range() {
        let s = Syndrome::new([3]);
        assert!(contour_candidates(4, &s, Pauli::Z).is_err());
        let truth = ErrorChain::z([]);
        assert!(decode_contour(4, &s, &truth, TieBreak::Report).is_err());
    }

    #[test]
    fn census_small_cases() {
        let r = failure_census(4, 2, TieBreak::Report).unwrap();
        assert_eq!((r.n_success, r.n_logical, r.n_tie), (0, 0, 6));
        let r = failure_census(4, 1, TieBreak::Report).unwrap();
        assert_eq!(r.n_success, 4);
        let r = failure_census(4, 2, TieBreak::Adversarial).unwrap();
        assert_eq!(r.n_logical, 6);
        let r = failure_census(4, 3, TieBreak::Report).unwrap();
        assert_eq!(r.n_logical, 4);
        assert_eq!(r.csv_row(), "4,3,report,0,4,0");
    }

    #[test]
    fn census_guards() {
        assert!(matches!(
            failure_census(22, 11, TieBreak::Report),
            Err(Error::ResourceLimit(_))
        ));
        assert!(matches!(
            failure_census(4, 5, TieBreak::Report),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn gosper_masks_count_binomials() {
        assert_eq!(FixedWeightMasks::new(6, 3).count(), 20);
        assert_eq!(FixedWeightMasks::new(6, 0).count(), 1);
        assert_eq!(FixedWeightMasks::new(6, 6).count(), 1);
        assert_eq!(FixedWeightMasks::new(3, 4).count(), 0);
    }

    #[test]
    fn vacuum_profile_values() {
        assert_eq!(vacuum_profile(1.0, 2.0, 1.0, 1).unwrap(), -1.0);
        assert_eq!(vacuum_profile(-1.0, 2.0, 1.0, 1).unwrap(), 1.0);
        assert!((vacuum_profile(5.0, 0.4, 2.0, -1).unwrap() - 0.1).abs() < 1e-15);
        assert!(matches!(
            vacuum_profile(0.0, 1.0, 1.0, 1),
            Err(Error::Singularity(_))
        ));
        assert!(vacuum_profile(1.0, 1.0, 0.0, 1).is_err());
        assert!(vacuum_profile(1.0, 1.0, 1.0, 0).is_err());
    }
}
