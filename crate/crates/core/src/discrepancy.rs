//! Log pullback and the singularity taxonomy of log surfaces.
//!
//! For a pair `(X, Delta)` presented by a resolution `Y -> X`, the log
//! pullback writes `K_Y + Delta_Y` as the pullback of `K_X + Delta`; the
//! exceptional coefficients of `Delta_Y` are the (negated) discrepancies.
//! Four predicates are decided from them:
//!
//! * klt — all coefficients of `Delta_Y` below one on a log resolution;
//! * lc — all coefficients at most one on a log resolution;
//! * MRLC — coefficients at most one on the minimal resolution;
//! * GMRLC — coefficients in `[0, 1]` on some Q-factorial partial
//!   contraction of the resolution.
//!
//! The GMRLC witness search enumerates partial contractions of the supplied
//! resolution; Q-factoriality of a candidate is certified through rational
//! singularities (fundamental cycle of arithmetic genus zero). The search is
//! exhaustive over supersets of the forced contraction set, ordered by size
//! with a fixed enumeration order, and may run on a thread pool without
//! changing the answer.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::exactlin::{self, Rational};
use crate::surface::{CurveId, Divisor, SingularModel, SurfaceError};

/// Three-valued verdict. `Undecided` carries the reason the predicate could
/// not be decided on the supplied data.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    True,
    False,
    Undecided(String),
}

impl Verdict {
    pub fn is_true(&self) -> bool {
        matches!(self, Verdict::True)
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Verdict::False)
    }

    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::True
        } else {
            Verdict::False
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiscrepancyError {
    #[error("boundary coefficient {coeff} on {curve} is outside [0, 1]")]
    BoundaryOutOfRange { curve: CurveId, coeff: Rational },
    #[error("model is not attested simple normal crossing; a log resolution is required")]
    NotLogResolution,
    #[error("curves [{}] do not form a connected configuration", join(.curves))]
    NotConnected { curves: Vec<CurveId> },
    #[error("curves [{}] are not negative definite", join(.curves))]
    NotNegativeDefinite { curves: Vec<CurveId> },
    #[error("invalid curve data: {0}")]
    InvalidCurveData(String),
    #[error("-(K+Delta_Y) is not nef over the contraction: degree {degree} on {curve}")]
    NotNefOver { curve: CurveId, degree: Rational },
    #[error("invalid contraction set: {0}")]
    InvalidOver(String),
    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

fn join(curves: &[CurveId]) -> String {
    curves
        .iter()
        .map(CurveId::as_str)
        .collect::<Vec<_>>()
        .join(", ")
}

/// Round-down, round-up, and fractional part of a divisor.
/// `floor + frac` reproduces the input and `ceil = -floor(-D)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundedDivisor {
    pub floor: Divisor,
    pub ceil: Divisor,
    pub frac: Divisor,
}

/// Componentwise floor, ceiling, and fractional part.
pub fn round_ops(d: &Divisor) -> RoundedDivisor {
    let mut floor = Divisor::zero();
    let mut ceil = Divisor::zero();
    let mut frac = Divisor::zero();
    for (id, c) in d.iter() {
        floor.set(id.clone(), Rational::from(c.floor()));
        ceil.set(id.clone(), Rational::from(c.ceil()));
        frac.set(id.clone(), c.fract());
    }
    RoundedDivisor { floor, ceil, frac }
}

fn ensure_boundary_range(delta: &Divisor) -> Result<(), DiscrepancyError> {
    for (id, c) in delta.iter() {
        if c.is_negative() || c > &Rational::one() {
            return Err(DiscrepancyError::BoundaryOutOfRange {
                curve: id.clone(),
                coeff: c.clone(),
            });
        }
    }
    Ok(())
}

/// Log pullback without the boundary-range gate, for exploratory use. The
/// support must still live on `X` and the contracted form must be negative
/// definite.
pub fn log_pullback_raw(
    model: &SingularModel,
    delta: &Divisor,
) -> Result<Divisor, DiscrepancyError> {
    for id in delta.support() {
        if !model.config.has_curve(id) {
            return Err(SurfaceError::UnknownCurve { curve: id.clone() }.into());
        }
        if model.is_contracted(id) {
            return Err(SurfaceError::ContractedSupport { curve: id.clone() }.into());
        }
    }
    let exceptional: Vec<CurveId> = model.contracted.iter().cloned().collect();
    if exceptional.is_empty() {
        return Ok(delta.clone());
    }
    for component in model.contracted_components() {
        let gram = model.config.gram(&component);
        match exactlin::is_negative_definite(&gram) {
            Ok(true) => {}
            _ => return Err(SurfaceError::NotContractible { component }.into()),
        }
    }
    // (K_Y + Delta_strict + sum c_i E_i) . E_j = 0 for every contracted E_j.
    let gram = model.config.gram(&exceptional);
    let rhs: Vec<Rational> = exceptional
        .iter()
        .map(|e| {
            let e_div = Divisor::unit(e.clone());
            -(model.k_pairing_on_y(&e_div) + model.pairing_on_y(delta, &e_div))
        })
        .collect();
    let coeffs = exactlin::solve_linear(&gram, &rhs).map_err(SurfaceError::from)?;
    let mut out = delta.clone();
    for (e, c) in exceptional.into_iter().zip(coeffs) {
        out.set(e, c);
    }
    Ok(out)
}

/// Log pullback of `K_X + Delta`: returns `Delta_Y` with
/// `(K_Y + Delta_Y) . E = 0` for every contracted `E` and pushforward
/// `Delta`. Boundary coefficients must lie in `[0, 1]`.
pub fn log_pullback(model: &SingularModel, delta: &Divisor) -> Result<Divisor, DiscrepancyError> {
    ensure_boundary_range(delta)?;
    log_pullback_raw(model, delta)
}

/// Blows down contracted (-1)-curves of genus zero until none remain, i.e.
/// passes to the minimal resolution of `X`. On the result every contracted
/// curve has `K.E >= 0`.
pub fn minimal_resolution(model: &SingularModel) -> Result<SingularModel, DiscrepancyError> {
    let mut config = model.config.clone();
    let mut contracted = model.contracted.clone();
    loop {
        let next = contracted
            .iter()
            .find(|id| {
                config
                    .curve(id)
                    .is_some_and(|c| c.self_int == -1 && c.genus == 0)
            })
            .cloned();
        match next {
            None => break,
            Some(e) => {
                config = config.blow_down(&e).map_err(DiscrepancyError::Surface)?;
                contracted.remove(&e);
            }
        }
    }
    // Blow-downs invalidate the points table, but the original SNC claim is
    // about the starting arena anyway; klt/lc are decided there.
    let out = SingularModel {
        config,
        contracted,
        q_factorial_attested: model.q_factorial_attested,
    };
    for component in out.contracted_components() {
        let gram = out.config.gram(&component);
        if !exactlin::is_negative_definite(&gram).unwrap_or(false) {
            return Err(SurfaceError::NotContractible { component }.into());
        }
    }
    Ok(out)
}

/// Fundamental cycle of a connected negative-definite configuration, by
/// Laufer iteration: start from the reduced cycle and add any curve the
/// cycle still meets positively. Returns the cycle and its arithmetic genus
/// `p_a(Z) = 1 + (Z^2 + K.Z)/2`; the contracted point is rational iff the
/// genus is zero.
pub fn fundamental_cycle(
    model: &SingularModel,
    component: &BTreeSet<CurveId>,
) -> Result<(Divisor, i64), DiscrepancyError> {
    let ids: Vec<CurveId> = component.iter().cloned().collect();
    if ids.is_empty() {
        return Err(DiscrepancyError::InvalidCurveData(
            "empty component".to_string(),
        ));
    }
    for id in &ids {
        if !model.config.has_curve(id) {
            return Err(SurfaceError::UnknownCurve { curve: id.clone() }.into());
        }
    }
    if model.config.components_of(component).len() != 1 {
        return Err(DiscrepancyError::NotConnected { curves: ids });
    }
    let gram = model.config.gram(&ids);
    if !exactlin::is_negative_definite(&gram).map_err(SurfaceError::from)? {
        return Err(DiscrepancyError::NotNegativeDefinite { curves: ids });
    }

    let n = ids.len();
    let mut z = vec![1i64; n];
    let mut guard = 0usize;
    loop {
        let positive = (0..n).find(|&i| {
            let mut dot = 0i64;
            for j in 0..n {
                dot += z[j] * model.config.pairing(&ids[j], &ids[i]);
            }
            dot > 0
        });
        match positive {
            None => break,
            Some(i) => z[i] += 1,
        }
        guard += 1;
        if guard > 100_000 {
            return Err(DiscrepancyError::InvariantViolation(
                "Laufer iteration did not terminate".to_string(),
            ));
        }
    }

    let mut z_sq = 0i64;
    let mut k_z = 0i64;
    for i in 0..n {
        k_z += z[i] * model.config.curve(&ids[i]).unwrap().k_dot;
        for j in 0..n {
            z_sq += z[i] * z[j] * model.config.pairing(&ids[i], &ids[j]);
        }
    }
    if (z_sq + k_z) % 2 != 0 {
        return Err(DiscrepancyError::InvariantViolation(format!(
            "Z^2 + K.Z = {} is odd; adjunction data is corrupt",
            z_sq + k_z
        )));
    }
    let pa = 1 + (z_sq + k_z) / 2;
    let mut cycle = Divisor::zero();
    for (id, c) in ids.into_iter().zip(z) {
        cycle.set(id, Rational::from(c));
    }
    Ok((cycle, pa))
}

/// Rationality certificate for one singular point of `X`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointCertificate {
    pub component: Vec<CurveId>,
    pub fundamental_cycle: Divisor,
    pub pa: i64,
}

impl PointCertificate {
    pub fn is_rational(&self) -> bool {
        self.pa == 0
    }
}

/// Verdicts for one pair `(X, Delta)`, with the witnesses that back them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub klt: Verdict,
    pub lc: Verdict,
    pub mrlc: Verdict,
    pub gmrlc: Verdict,
    /// Contraction subset witnessing the GMRLC verdict, when `gmrlc` is true.
    pub gmrlc_witness: Option<BTreeSet<CurveId>>,
    /// Scope qualifier recorded when `gmrlc` is false.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gmrlc_refutation: Option<String>,
    pub q_factorial: Verdict,
    pub q_factorial_certificates: Vec<PointCertificate>,
    pub delta_y: Divisor,
    pub notes: Vec<String>,
}

/// How the GMRLC witness enumeration is executed. Both modes visit the
/// candidates in the same order and return the same witness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchMode {
    Sequential,
    /// Runs on the rayon pool when the `parallel` feature is enabled;
    /// otherwise identical to `Sequential`.
    Parallel,
}

#[derive(Clone, Debug)]
pub struct ClassifyOptions {
    /// Cap on the number of contracted curves for the exhaustive witness
    /// search; larger contracted sets get an undecided GMRLC verdict unless
    /// a sound shortcut applies. Wired to `MMP_SURFACE_MAX_SUBSET` in the
    /// CLI.
    pub max_witness_curves: usize,
    pub search: SearchMode,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            max_witness_curves: 20,
            search: if cfg!(feature = "parallel") {
                SearchMode::Parallel
            } else {
                SearchMode::Sequential
            },
        }
    }
}

/// Classifies `(X, Delta)` with default options.
pub fn classify(
    model: &SingularModel,
    delta: &Divisor,
) -> Result<ClassificationReport, DiscrepancyError> {
    classify_with(model, delta, &ClassifyOptions::default())
}

/// Classifies `(X, Delta)`: klt and lc on the supplied model when it is an
/// attested log resolution, MRLC on the minimal resolution, GMRLC by witness
/// search over partial contractions, and a Q-factoriality certificate for
/// `X` through rational singularities.
pub fn classify_with(
    model: &SingularModel,
    delta: &Divisor,
    opts: &ClassifyOptions,
) -> Result<ClassificationReport, DiscrepancyError> {
    let violations = model.validate();
    if !violations.is_empty() {
        return Err(SurfaceError::InvalidModel { violations }.into());
    }
    ensure_boundary_range(delta)?;
    let delta_y = log_pullback_raw(model, delta)?;

    let mut notes = vec![
        "combinatorial model is field-independent; characteristic-specific hypotheses are not modeled"
            .to_string(),
    ];

    // klt / lc need a log resolution. One attested log resolution suffices:
    // coefficients can only drop under further blow-ups of an SNC pair with
    // coefficients at most one.
    let one = Rational::one();
    let (klt, lc) = if model.config.snc_attested {
        if model.config.points.is_some() {
            notes.push("snc verified against the points table".to_string());
        } else {
            notes.push("snc attested without a points table (trusted)".to_string());
        }
        notes.push("klt/lc decided on the supplied log resolution".to_string());
        let max_above_one = delta_y.iter().any(|(_, c)| c > &one);
        let any_at_one = delta_y.iter().any(|(_, c)| c == &one);
        (
            Verdict::from_bool(!max_above_one && !any_at_one),
            Verdict::from_bool(!max_above_one),
        )
    } else {
        let reason = DiscrepancyError::NotLogResolution.to_string();
        (
            Verdict::Undecided(reason.clone()),
            Verdict::Undecided(reason),
        )
    };

    // MRLC on the minimal resolution. The pullback there is effective by the
    // negativity lemma; anything else means corrupt data.
    let minres = minimal_resolution(model)?;
    let delta_y_min = log_pullback_raw(&minres, delta)?;
    if !delta_y_min.is_effective() {
        return Err(DiscrepancyError::InvariantViolation(format!(
            "pullback on the minimal resolution is not effective: {delta_y_min:?}"
        )));
    }
    let mrlc = Verdict::from_bool(delta_y_min.iter().all(|(_, c)| c <= &one));

    // Q-factoriality of X itself: all singular points rational.
    let mut certificates = Vec::new();
    for component in model.contracted_components() {
        let set: BTreeSet<CurveId> = component.iter().cloned().collect();
        let (cycle, pa) = fundamental_cycle(model, &set)?;
        certificates.push(PointCertificate {
            component,
            fundamental_cycle: cycle,
            pa,
        });
    }
    let q_factorial = if certificates.iter().all(PointCertificate::is_rational) {
        Verdict::True
    } else if model.q_factorial_attested {
        notes.push("Q-factoriality attested by the input".to_string());
        Verdict::True
    } else {
        let bad: Vec<String> = certificates
            .iter()
            .filter(|c| !c.is_rational())
            .map(|c| {
                format!(
                    "[{}] has fundamental-cycle genus {}",
                    join(&c.component),
                    c.pa
                )
            })
            .collect();
        Verdict::Undecided(format!("no rationality certificate: {}", bad.join("; ")))
    };

    // GMRLC witness search over partial contractions T of the resolution:
    // curves left uncontracted must carry coefficients in [0, 1], so T must
    // contain the out-of-range set T0; the contracted model must be
    // certified Q-factorial.
    let forced: BTreeSet<CurveId> = model
        .contracted
        .iter()
        .filter(|id| {
            let c = delta_y.coeff(id);
            c.is_negative() || c > one
        })
        .cloned()
        .collect();
    let (gmrlc, gmrlc_witness, gmrlc_refutation) = match witness_search(model, &forced, opts) {
        WitnessOutcome::Found(witness) => (Verdict::True, Some(witness), None),
        WitnessOutcome::Exhausted => {
            let refutation =
                "no witness among partial contractions of the supplied resolution".to_string();
            (Verdict::False, None, Some(refutation))
        }
        WitnessOutcome::CapExceeded => {
            if mrlc.is_true() {
                // Sound shortcut: the minimal resolution is a smooth
                // witness; its blown-down curves contract to smooth
                // points of it.
                let witness: BTreeSet<CurveId> = model
                    .contracted
                    .iter()
                    .filter(|id| !minres.contracted.contains(*id))
                    .cloned()
                    .collect();
                notes.push(
                    "witness search cap exceeded; witness taken from the minimal resolution"
                        .to_string(),
                );
                (Verdict::True, Some(witness), None)
            } else {
                (
                    Verdict::Undecided(format!(
                        "contracted set larger than the witness search cap ({})",
                        opts.max_witness_curves
                    )),
                    None,
                    None,
                )
            }
        }
    };

    let report = ClassificationReport {
        klt,
        lc,
        mrlc,
        gmrlc,
        gmrlc_witness,
        gmrlc_refutation,
        q_factorial,
        q_factorial_certificates: certificates,
        delta_y,
        notes,
    };
    check_chain(&report)?;
    Ok(report)
}

/// The implication chain klt => lc => MRLC => GMRLC must hold whenever the
/// verdicts are decided.
fn check_chain(report: &ClassificationReport) -> Result<(), DiscrepancyError> {
    let chain = [&report.klt, &report.lc, &report.mrlc, &report.gmrlc];
    for pair in chain.windows(2) {
        if pair[0].is_true() && pair[1].is_false() {
            return Err(DiscrepancyError::InvariantViolation(format!(
                "classification chain broken: {:?} => {:?}",
                pair[0], pair[1]
            )));
        }
    }
    Ok(())
}

enum WitnessOutcome {
    Found(BTreeSet<CurveId>),
    Exhausted,
    CapExceeded,
}

/// A candidate contraction is certified when every connected component has a
/// rational fundamental cycle, or when it is the full contracted set of a
/// model that attests Q-factoriality.
fn certify_candidate(model: &SingularModel, t: &BTreeSet<CurveId>) -> bool {
    if model.q_factorial_attested && t == &model.contracted {
        return true;
    }
    model.config.components_of(t).into_iter().all(|component| {
        let set: BTreeSet<CurveId> = component.into_iter().collect();
        matches!(fundamental_cycle(model, &set), Ok((_, 0)))
    })
}

fn witness_search(
    model: &SingularModel,
    forced: &BTreeSet<CurveId>,
    opts: &ClassifyOptions,
) -> WitnessOutcome {
    // The forced set alone is always worth a try, cap or no cap.
    if certify_candidate(model, forced) {
        return WitnessOutcome::Found(forced.clone());
    }
    if model.contracted.len() > opts.max_witness_curves {
        return WitnessOutcome::CapExceeded;
    }
    let free: Vec<CurveId> = model
        .contracted
        .iter()
        .filter(|id| !forced.contains(*id))
        .cloned()
        .collect();
    for size in 1..=free.len() {
        let combos = combinations(free.len(), size);
        let build = |combo: &Vec<usize>| -> BTreeSet<CurveId> {
            let mut t = forced.clone();
            t.extend(combo.iter().map(|&i| free[i].clone()));
            t
        };
        let hit = match opts.search {
            SearchMode::Sequential => combos
                .iter()
                .find(|combo| certify_candidate(model, &build(combo))),
            SearchMode::Parallel => {
                #[cfg(feature = "parallel")]
                {
                    // Candidates are cheap to test; chunk them so the pool
                    // overhead does not eat the speedup. find_first keeps
                    // the enumeration-order semantics.
                    combos
                        .par_iter()
                        .with_min_len(128)
                        .find_first(|combo| certify_candidate(model, &build(combo)))
                }
                #[cfg(not(feature = "parallel"))]
                {
                    combos
                        .iter()
                        .find(|combo| certify_candidate(model, &build(combo)))
                }
            }
        };
        if let Some(combo) = hit {
            return WitnessOutcome::Found(build(combo));
        }
    }
    WitnessOutcome::Exhausted
}

/// All `size`-element index subsets of `0..n` in lexicographic order.
fn combinations(n: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if size > n {
        return out;
    }
    let mut combo: Vec<usize> = (0..size).collect();
    loop {
        out.push(combo.clone());
        // Advance the rightmost index that can still move.
        let mut i = size;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if combo[i] != i + n - size {
                break;
            }
        }
        if combo[i] == i + n - size {
            return out;
        }
        combo[i] += 1;
        for j in (i + 1)..size {
            combo[j] = combo[j - 1] + 1;
        }
    }
}

/// Round-down of the log pullback on an attested log resolution, plus the
/// klt triviality test: the multiplier co-divisor `floor(Delta_Y)` has no
/// positive part exactly for klt pairs.
pub fn multiplier_floor(
    model: &SingularModel,
    delta: &Divisor,
) -> Result<(Divisor, bool), DiscrepancyError> {
    if !model.config.snc_attested {
        return Err(DiscrepancyError::NotLogResolution);
    }
    let delta_y = log_pullback_raw(model, delta)?;
    let floor = round_ops(&delta_y).floor;
    let klt_equiv = floor.iter().all(|(_, c)| !c.is_positive());
    Ok((floor, klt_equiv))
}

/// Degree-inequality non-vanishing check on a smooth projective curve of
/// genus `g`: sections of `mD + ceil(-G)` exist when the curve is rational
/// and `m >= 0`, or when `m >= a` and the Riemann-Roch lower bound
/// `m deg D + deg ceil(-G) - g + 1` is positive.
pub fn nonvanishing_degree_check(
    g: i64,
    deg_d: i64,
    deg_ceil_neg_g: i64,
    deg_kg: &Rational,
    a: i64,
    m: i64,
) -> Result<bool, DiscrepancyError> {
    if g < 0 {
        return Err(DiscrepancyError::InvalidCurveData(format!(
            "negative genus {g}"
        )));
    }
    if deg_d < 0 {
        return Err(DiscrepancyError::InvalidCurveData(format!(
            "nef divisor has negative degree {deg_d}"
        )));
    }
    if deg_ceil_neg_g < 0 {
        return Err(DiscrepancyError::InvalidCurveData(format!(
            "round-up of -G has negative degree {deg_ceil_neg_g}; floor(G) <= 0 is required"
        )));
    }
    if a < 1 {
        return Err(DiscrepancyError::InvalidCurveData(format!(
            "scaling factor a = {a} must be positive"
        )));
    }
    // deg(K_C + {G}) >= deg K_C since the fractional part is effective.
    if deg_kg < &Rational::from(2 * g - 2) {
        return Err(DiscrepancyError::InvalidCurveData(format!(
            "deg(K_C + {{G}}) = {deg_kg} is below 2g - 2 = {}",
            2 * g - 2
        )));
    }
    if g == 0 {
        return Ok(m >= 0);
    }
    Ok(m >= a && m * deg_d + deg_ceil_neg_g - g + 1 > 0)
}

/// The divisor adjustment for a further contraction, decomposed into its
/// effective parts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThetaDecomposition {
    pub theta: Divisor,
    pub plus: Divisor,
    pub minus: Divisor,
}

/// Given a further contraction whose exceptional set on `Y` is `over`
/// (containing the contracted set) and on which `-(K_Y + Delta_Y)` is nef,
/// produces the unique divisor that agrees with `Delta_Y` off `over` and
/// makes `K_Y + Theta` numerically trivial on it. By the negativity lemma
/// `Theta <= Delta_Y`, and the negative part of the decomposition is
/// supported inside `over`.
pub fn theta_construction(
    model: &SingularModel,
    delta: &Divisor,
    over: &BTreeSet<CurveId>,
) -> Result<ThetaDecomposition, DiscrepancyError> {
    for id in over {
        if !model.config.has_curve(id) {
            return Err(SurfaceError::UnknownCurve { curve: id.clone() }.into());
        }
    }
    if !model.contracted.is_subset(over) {
        return Err(DiscrepancyError::InvalidOver(
            "the exceptional set of the composite must contain the contracted set".to_string(),
        ));
    }
    if let Some((id, c)) = delta.iter().find(|(_, c)| c.is_negative()) {
        return Err(DiscrepancyError::BoundaryOutOfRange {
            curve: id.clone(),
            coeff: c.clone(),
        });
    }
    let delta_y = log_pullback_raw(model, delta)?;

    let ids: Vec<CurveId> = over.iter().cloned().collect();
    if !ids.is_empty() {
        let gram = model.config.gram(&ids);
        if !exactlin::is_negative_definite(&gram).map_err(SurfaceError::from)? {
            return Err(DiscrepancyError::NotNegativeDefinite {
                curves: ids.clone(),
            });
        }
    }

    // Nefness of -(K_Y + Delta_Y) on the exceptional set.
    for id in &ids {
        let e = Divisor::unit(id.clone());
        let degree = model.k_pairing_on_y(&e) + model.pairing_on_y(&delta_y, &e);
        if degree.is_positive() {
            return Err(DiscrepancyError::NotNefOver {
                curve: id.clone(),
                degree,
            });
        }
    }

    // Solve (K_Y + Theta) . E = 0 on `over`, holding the off-part fixed.
    let off_part = delta_y.filter(|id| !over.contains(id));
    let mut theta = off_part.clone();
    if !ids.is_empty() {
        let gram = model.config.gram(&ids);
        let rhs: Vec<Rational> = ids
            .iter()
            .map(|e| {
                let e_div = Divisor::unit(e.clone());
                -(model.k_pairing_on_y(&e_div) + model.pairing_on_y(&off_part, &e_div))
            })
            .collect();
        let coeffs = exactlin::solve_linear(&gram, &rhs).map_err(SurfaceError::from)?;
        for (e, c) in ids.iter().zip(coeffs) {
            theta.set(e.clone(), c);
        }
    }

    if !theta.le(&delta_y) {
        return Err(DiscrepancyError::InvariantViolation(format!(
            "negativity lemma violated: Theta = {theta:?} exceeds Delta_Y = {delta_y:?}"
        )));
    }
    let mut plus = Divisor::zero();
    let mut minus = Divisor::zero();
    for (id, c) in theta.iter() {
        if c.is_positive() {
            plus.set(id.clone(), c.clone());
        } else {
            minus.set(id.clone(), -c);
        }
    }
    if let Some(id) = minus.support().find(|id| !over.contains(*id)) {
        return Err(DiscrepancyError::InvariantViolation(format!(
            "negative part touches {id} outside the exceptional set"
        )));
    }
    Ok(ThetaDecomposition { theta, plus, minus })
}
