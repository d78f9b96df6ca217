//! Cone, contraction, and the minimal model program driver.
//!
//! Extremal-ray search is restricted to a declared curve universe. Universe
//! curves are compared through their observable numerical classes: the
//! vector of Mumford pairings against the whole universe plus the canonical
//! degree. Proportional classes are merged into one ray (negative rays are
//! always spanned by a single curve, since distinct curves pair
//! nonnegatively); a ray is extremal when its class is not a nonnegative
//! combination of the remaining rays, decided by an exact phase-1 simplex.
//!
//! The driver contracts negative birational rays one at a time with a fixed
//! tie-break, re-classifies every intermediate pair, and stops at a good
//! minimal model (nothing negative left) or a Mori fiber space (a negative
//! fiber-type or anti-ample ray and no birational one). For toric inputs the
//! universe generates the whole cone of curves, so outcomes are
//! unconditional and nef endings carry a lattice-polytope semi-ample
//! witness.

// Class vectors and simplex tableaus are indexed in lockstep throughout.
#![allow(clippy::needless_range_loop)]

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discrepancy::{self, ClassificationReport, ClassifyOptions, DiscrepancyError, Verdict};
use crate::exactlin::{self, QMatrix, Rational};
use crate::surface::{CurveId, Divisor, SingularModel, SurfaceError};
use crate::toric::{self, SemiampleCheck, SemiampleWitness, ToricSurface};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MmpError {
    #[error("universe is empty")]
    EmptyUniverse,
    #[error("universe curve {curve} is unknown")]
    UnknownUniverseCurve { curve: CurveId },
    #[error("universe curve {curve} is contracted")]
    UniverseCurveContracted { curve: CurveId },
    #[error("ray on {curve} is not birational")]
    NotBirationalRay { curve: CurveId },
    #[error("contracting {curve} breaks negative definiteness")]
    ContractionNotNegDef { curve: CurveId },
    #[error("pair is not generalized MR log canonical: {reason}")]
    NotGMRLC { reason: String },
    #[error("negative class on {curve} cannot be classified against this universe")]
    RayUnclassifiable { curve: CurveId },
    #[error("minimal model program invariant violated: {0}")]
    InvariantViolated(String),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Discrepancy(#[from] DiscrepancyError),
}

/// Kind of a negative extremal ray.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RayKind {
    #[serde(rename = "birational")]
    Birational,
    #[serde(rename = "fiber-type")]
    FiberType,
    #[serde(rename = "ample-anti")]
    AmpleAnti,
}

/// A negative extremal ray of the universe cone, spanned by a curve.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RayCandidate {
    pub curve: CurveId,
    /// `(K_X + Delta) . C` under the Mumford pairing; negative by
    /// construction.
    pub kdelta_deg: Rational,
    /// `C . C` on `X`.
    pub self_int_x: Rational,
    pub kind: RayKind,
}

/// Observable class data of the universe curves on `X`.
struct UniverseClasses {
    ids: Vec<CurveId>,
    /// Pairing rows against the universe, augmented with the canonical
    /// degree so numerically distinct square-zero classes stay distinct.
    vectors: Vec<Vec<Rational>>,
    kdelta: Vec<Rational>,
    rank: usize,
}

fn universe_classes(
    model: &SingularModel,
    delta: &Divisor,
    universe: &[CurveId],
) -> Result<UniverseClasses, MmpError> {
    let delta_y = discrepancy::log_pullback_raw(model, delta)?;
    let pullbacks: Vec<Divisor> = universe
        .iter()
        .map(|id| model.mumford_pullback(&Divisor::unit(id.clone())))
        .collect::<Result<_, _>>()?;
    let n = universe.len();
    let mut vectors = Vec::with_capacity(n);
    let mut kdelta = Vec::with_capacity(n);
    for p in &pullbacks {
        let mut row: Vec<Rational> = pullbacks.iter().map(|q| model.pairing_on_y(p, q)).collect();
        let k_deg = model.k_pairing_on_y(p);
        kdelta.push(&k_deg + &model.pairing_on_y(&delta_y, p));
        row.push(k_deg);
        vectors.push(row);
    }
    let gram = QMatrix::from_fn(n, n, |i, j| vectors[i][j].clone());
    let rank = exactlin::rank(&gram);
    Ok(UniverseClasses {
        ids: universe.to_vec(),
        vectors,
        kdelta,
        rank,
    })
}

/// Finds the `(K_X + Delta)`-negative extremal rays of the cone spanned by
/// the universe curves on `X`. With `vertical_only` the universe is first
/// restricted to curves mapping to points of the base.
pub fn extremal_rays(
    model: &SingularModel,
    delta: &Divisor,
    universe: &[CurveId],
    vertical_only: bool,
) -> Result<Vec<RayCandidate>, MmpError> {
    if universe.is_empty() {
        return Err(MmpError::EmptyUniverse);
    }
    for id in universe {
        if !model.config.has_curve(id) {
            return Err(MmpError::UnknownUniverseCurve { curve: id.clone() });
        }
        if model.is_contracted(id) {
            return Err(MmpError::UniverseCurveContracted { curve: id.clone() });
        }
    }
    let effective: Vec<CurveId> = universe
        .iter()
        .filter(|id| !vertical_only || model.config.curve(id).is_some_and(|c| c.vertical))
        .cloned()
        .collect();
    if effective.is_empty() {
        return Ok(Vec::new());
    }
    let classes = universe_classes(model, delta, &effective)?;

    // Group proportional classes into rays; each ray is represented by the
    // member of least negative degree (then smallest id), which is the
    // spanning curve the degree bound speaks about.
    let n = classes.ids.len();
    let mut assigned = vec![false; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let mut group = vec![i];
        assigned[i] = true;
        for j in (i + 1)..n {
            if !assigned[j] && proportional_positive(&classes.vectors[i], &classes.vectors[j]) {
                assigned[j] = true;
                group.push(j);
            }
        }
        groups.push(group);
    }
    let reps: Vec<usize> = groups
        .iter()
        .map(|group| {
            *group
                .iter()
                .min_by(|&&a, &&b| {
                    // Maximal kdelta (closest to zero for negative rays),
                    // then lexicographic id.
                    classes.kdelta[b]
                        .cmp(&classes.kdelta[a])
                        .then_with(|| classes.ids[a].cmp(&classes.ids[b]))
                })
                .unwrap()
        })
        .collect();

    let mut rays = Vec::new();
    for (g, &i) in reps.iter().enumerate() {
        let others: Vec<Vec<Rational>> = reps
            .iter()
            .enumerate()
            .filter(|(h, _)| *h != g)
            .map(|(_, &j)| classes.vectors[j].clone())
            .collect();
        if nonneg_combination(&classes.vectors[i], &others).is_some() {
            continue; // interior of the cone, not extremal
        }
        if !classes.kdelta[i].is_negative() {
            continue;
        }
        let self_int_x = classes.vectors[i][i].clone();
        let kind = if self_int_x.is_negative() {
            RayKind::Birational
        } else if self_int_x.is_zero() {
            if classes.vectors[i].iter().take(n).any(Rational::is_negative) {
                return Err(MmpError::RayUnclassifiable {
                    curve: classes.ids[i].clone(),
                });
            }
            RayKind::FiberType
        } else if classes.rank == 1 {
            RayKind::AmpleAnti
        } else {
            return Err(MmpError::RayUnclassifiable {
                curve: classes.ids[i].clone(),
            });
        };
        rays.push(RayCandidate {
            curve: classes.ids[i].clone(),
            kdelta_deg: classes.kdelta[i].clone(),
            self_int_x,
            kind,
        });
    }
    // Most negative degree first, then id: the driver's tie-break order.
    rays.sort_by(|a, b| {
        a.kdelta_deg
            .cmp(&b.kdelta_deg)
            .then_with(|| a.curve.cmp(&b.curve))
    });
    Ok(rays)
}

/// Whether `b = lambda a` for some positive rational `lambda`.
fn proportional_positive(a: &[Rational], b: &[Rational]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let Some(k) = a.iter().position(|x| !x.is_zero()) else {
        return b.iter().all(Rational::is_zero);
    };
    if b[k].is_zero() || a[k].signum() != b[k].signum() {
        return false;
    }
    let lambda = &b[k] / &a[k];
    a.iter().zip(b).all(|(x, y)| &(&lambda * x) == y)
}

/// Exact feasibility of `sum lambda_j gens_j = target` with `lambda >= 0`,
/// by a phase-1 simplex with Bland's rule. Returns the multipliers when
/// feasible.
pub fn nonneg_combination(target: &[Rational], gens: &[Vec<Rational>]) -> Option<Vec<Rational>> {
    let d = target.len();
    let m = gens.len();
    if gens.iter().any(|g| g.len() != d) {
        return None;
    }
    if target.iter().all(Rational::is_zero) {
        return Some(vec![Rational::zero(); m]);
    }
    if m == 0 {
        return None;
    }

    // Tableau rows 1..=d: [A | I | b] with b >= 0; row 0: reduced costs of
    // minimizing the artificial sum, with the negated objective at the end.
    let cols = m + d + 1;
    let mut t: Vec<Vec<Rational>> = Vec::with_capacity(d + 1);
    t.push(vec![Rational::zero(); cols]);
    for i in 0..d {
        let flip = target[i].is_negative();
        let mut row: Vec<Rational> = Vec::with_capacity(cols);
        for gen in gens.iter() {
            row.push(if flip { -&gen[i] } else { gen[i].clone() });
        }
        for k in 0..d {
            row.push(if k == i {
                Rational::one()
            } else {
                Rational::zero()
            });
        }
        row.push(if flip { -&target[i] } else { target[i].clone() });
        t.push(row);
    }
    for j in 0..cols {
        let mut acc = Rational::zero();
        for i in 1..=d {
            acc += &t[i][j];
        }
        // Reduced cost of the artificial basis: c_j - sum of the column.
        let c_j = if (m..m + d).contains(&j) {
            Rational::one()
        } else {
            Rational::zero()
        };
        t[0][j] = c_j - acc;
    }
    let mut basis: Vec<usize> = (m..m + d).collect();

    // Bland: smallest improving column each round.
    while let Some(enter) = (0..m + d).find(|&j| t[0][j].is_negative()) {
        let mut leave: Option<usize> = None;
        let mut best_ratio: Option<Rational> = None;
        for i in 1..=d {
            if !t[i][enter].is_positive() {
                continue;
            }
            let ratio = &t[i][cols - 1] / &t[i][enter];
            let better = match &best_ratio {
                None => true,
                Some(r) => &ratio < r || (&ratio == r && basis[i - 1] < basis[leave.unwrap() - 1]),
            };
            if better {
                best_ratio = Some(ratio);
                leave = Some(i);
            }
        }
        let leave = leave?; // unbounded phase-1 cannot happen
        let pivot = t[leave][enter].clone();
        for j in 0..cols {
            t[leave][j] = &t[leave][j] / &pivot;
        }
        for i in 0..=d {
            if i == leave || t[i][enter].is_zero() {
                continue;
            }
            let factor = t[i][enter].clone();
            for j in 0..cols {
                let delta = &factor * &t[leave][j];
                t[i][j] = &t[i][j] - &delta;
            }
        }
        basis[leave - 1] = enter;
    }

    // Feasible exactly when all artificials are driven to zero.
    if !t[0][cols - 1].is_zero() {
        return None;
    }
    let mut lambda = vec![Rational::zero(); m];
    for (i, &b) in basis.iter().enumerate() {
        if b < m {
            lambda[b] = t[i + 1][cols - 1].clone();
        } else if !t[i + 1][cols - 1].is_zero() {
            return None; // artificial stuck at a positive level
        }
    }
    // The certificate must reproduce the target exactly.
    for i in 0..d {
        let mut acc = Rational::zero();
        for (j, gen) in gens.iter().enumerate() {
            acc += &(&lambda[j] * &gen[i]);
        }
        if acc != target[i] {
            return None;
        }
    }
    Some(lambda)
}

/// Adds the ray's curve to the contracted set. The enlarged component must
/// stay negative definite; the Picard rank drop is asserted by the driver,
/// which knows the universe.
pub fn contract_ray(model: &SingularModel, ray: &RayCandidate) -> Result<SingularModel, MmpError> {
    if ray.kind != RayKind::Birational {
        return Err(MmpError::NotBirationalRay {
            curve: ray.curve.clone(),
        });
    }
    if !model.config.has_curve(&ray.curve) {
        return Err(MmpError::UnknownUniverseCurve {
            curve: ray.curve.clone(),
        });
    }
    if model.is_contracted(&ray.curve) {
        return Err(MmpError::UniverseCurveContracted {
            curve: ray.curve.clone(),
        });
    }
    let mut contracted = model.contracted.clone();
    contracted.insert(ray.curve.clone());
    let out = SingularModel {
        config: model.config.clone(),
        contracted,
        // X changes; an externally attested Q-factoriality claim does not
        // transfer to the new surface.
        q_factorial_attested: false,
    };
    let component_set: BTreeSet<CurveId> = out
        .contracted_components()
        .into_iter()
        .find(|c| c.contains(&ray.curve))
        .unwrap_or_default()
        .into_iter()
        .collect();
    let ids: Vec<CurveId> = component_set.into_iter().collect();
    let gram = out.config.gram(&ids);
    match exactlin::is_negative_definite(&gram) {
        Ok(true) => Ok(out),
        _ => Err(MmpError::ContractionNotNegDef {
            curve: ray.curve.clone(),
        }),
    }
}

/// Degree bound for negative extremal rays: `0 < -(K+Delta).C <= 3`, and
/// `<= 2` unless the model is numerically the projective plane (smooth
/// after minimal resolution, universe of rank one, `K^2 = 9`).
pub fn check_extremal_bound(
    model: &SingularModel,
    universe: &[CurveId],
    ray: &RayCandidate,
) -> bool {
    let minus_deg = -&ray.kdelta_deg;
    if !minus_deg.is_positive() {
        return false;
    }
    let limit = Rational::from(if is_plane_proxy(model, universe) {
        3
    } else {
        2
    });
    minus_deg <= limit
}

fn is_plane_proxy(model: &SingularModel, universe: &[CurveId]) -> bool {
    let Ok(minres) = discrepancy::minimal_resolution(model) else {
        return false;
    };
    if !minres.contracted.is_empty() {
        return false;
    }
    let Ok(classes) = universe_classes(model, &Divisor::zero(), universe) else {
        return false;
    };
    if classes.rank != 1 {
        return false;
    }
    // K = lambda C on a rank-one lattice, so K^2 = (K.C)^2 / C^2 = 9 is the
    // plane's signature.
    universe.iter().enumerate().any(|(i, _)| {
        let sq = &classes.vectors[i][i];
        if !sq.is_positive() {
            return false;
        }
        let k_deg = &classes.vectors[i][classes.ids.len()];
        k_deg * k_deg == &Rational::from(9) * sq
    })
}

/// One contraction step of a run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MmpStep {
    pub ray: RayCandidate,
    pub model_before: SingularModel,
    pub model_after: SingularModel,
    pub delta_after: Divisor,
    pub classification: ClassificationReport,
}

/// Rank-one certificate for a Mori fiber space ending.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberSpaceCertificate {
    /// Dimension of the target: 0 for an anti-ample ending, 1 for a
    /// fibration over a curve.
    pub target_dim: u8,
    /// For `target_dim = 1`: every universe curve contracted by the
    /// fibration is proportional to the fiber class. For `target_dim = 0`:
    /// the universe lattice has rank one.
    pub relative_picard_rank_one: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MmpOutcome {
    GoodMinimalModel {
        /// `(K+Delta).C >= 0` for every universe curve, exactly.
        nef_certificate: Vec<(CurveId, Rational)>,
        /// Lattice-polytope witness on toric inputs.
        semiample: Option<SemiampleWitness>,
        note: String,
    },
    MoriFiberSpace {
        ray: RayCandidate,
        certificate: FiberSpaceCertificate,
    },
}

/// Full record of a minimal model program run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MmpTrace {
    pub initial_model: SingularModel,
    pub initial_delta: Divisor,
    pub universe: Vec<CurveId>,
    pub vertical_only: bool,
    /// True for toric-built inputs, whose invariant curves generate the
    /// whole cone of curves.
    pub universe_certified_complete: bool,
    pub initial_classification: ClassificationReport,
    pub steps: Vec<MmpStep>,
    pub outcome: MmpOutcome,
    pub warnings: Vec<String>,
}

impl MmpTrace {
    pub fn final_model(&self) -> &SingularModel {
        self.steps
            .last()
            .map(|s| &s.model_after)
            .unwrap_or(&self.initial_model)
    }

    pub fn final_delta(&self) -> &Divisor {
        self.steps
            .last()
            .map(|s| &s.delta_after)
            .unwrap_or(&self.initial_delta)
    }
}

/// Options for a run. A toric backing certifies the universe complete and
/// enables the semi-ample witness on nef endings.
#[derive(Clone, Debug, Default)]
pub struct MmpOptions<'a> {
    pub vertical_only: bool,
    pub toric: Option<&'a ToricSurface>,
    pub classify: ClassifyOptions,
}

/// Runs the minimal model program on a generalized MR log canonical pair.
///
/// Every step contracts the most negative birational ray (ties broken by
/// curve id), re-classifies the new pair, and insists that the GMRLC
/// property persists — along with lc, MRLC, and certified Q-factoriality
/// when the input had them. The run performs at most `rank - 1` birational
/// contractions and ends in a good minimal model or a Mori fiber space.
pub fn run_mmp(
    model: &SingularModel,
    delta: &Divisor,
    universe: &[CurveId],
    opts: &MmpOptions<'_>,
) -> Result<MmpTrace, MmpError> {
    run_mmp_observed(model, delta, universe, opts, |_| {})
}

/// Same as [`run_mmp`], invoking the observer on each completed step so
/// long runs can be streamed.
pub fn run_mmp_observed(
    model: &SingularModel,
    delta: &Divisor,
    universe: &[CurveId],
    opts: &MmpOptions<'_>,
    mut on_step: impl FnMut(&MmpStep),
) -> Result<MmpTrace, MmpError> {
    let violations = model.validate();
    if !violations.is_empty() {
        return Err(SurfaceError::InvalidModel { violations }.into());
    }
    if universe.is_empty() {
        return Err(MmpError::EmptyUniverse);
    }
    let initial_classification = discrepancy::classify_with(model, delta, &opts.classify)?;
    if !initial_classification.gmrlc.is_true() {
        let reason = match &initial_classification.gmrlc {
            Verdict::Undecided(r) => r.clone(),
            _ => initial_classification
                .gmrlc_refutation
                .clone()
                .unwrap_or_else(|| "no witness".to_string()),
        };
        return Err(MmpError::NotGMRLC { reason });
    }
    let require_lc = initial_classification.lc.is_true();
    let require_mrlc = initial_classification.mrlc.is_true();
    // Certified means rational singular points, not an external attestation.
    let require_q_factorial = initial_classification
        .q_factorial_certificates
        .iter()
        .all(|c| c.is_rational());

    let initial_rank = universe_classes(model, delta, universe)?.rank;
    let mut warnings = Vec::new();
    if opts.toric.is_none() {
        warnings.push(
            "universe not certified complete; cone verdicts are relative to the supplied universe"
                .to_string(),
        );
    }

    let mut current_model = model.clone();
    let mut current_delta = delta.clone();
    let mut current_universe: Vec<CurveId> = universe.to_vec();
    let mut steps: Vec<MmpStep> = Vec::new();

    let outcome = loop {
        let rays = extremal_rays(
            &current_model,
            &current_delta,
            &current_universe,
            opts.vertical_only,
        )?;
        for ray in &rays {
            if !check_extremal_bound(&current_model, &current_universe, ray) {
                return Err(MmpError::InvariantViolated(format!(
                    "extremal degree bound fails on {}: (K+Delta).C = {}",
                    ray.curve, ray.kdelta_deg
                )));
            }
        }

        if rays.is_empty() {
            break good_minimal_model(
                &current_model,
                &current_delta,
                &current_universe,
                opts,
                &mut warnings,
            )?;
        }

        if let Some(ray) = rays.iter().find(|r| r.kind == RayKind::Birational) {
            if steps.len() + 1 > initial_rank.saturating_sub(1) {
                return Err(MmpError::InvariantViolated(format!(
                    "more than rank - 1 = {} birational steps",
                    initial_rank.saturating_sub(1)
                )));
            }
            let rank_before =
                universe_classes(&current_model, &current_delta, &current_universe)?.rank;
            let model_after = contract_ray(&current_model, ray)?;
            let universe_after: Vec<CurveId> = current_universe
                .iter()
                .filter(|id| *id != &ray.curve)
                .cloned()
                .collect();
            let delta_after = model_after.pushforward(&current_delta);
            let rank_after = if universe_after.is_empty() {
                0
            } else {
                universe_classes(&model_after, &delta_after, &universe_after)?.rank
            };
            if rank_after + 1 != rank_before {
                return Err(MmpError::InvariantViolated(format!(
                    "Picard rank dropped from {rank_before} to {rank_after} while contracting {}",
                    ray.curve
                )));
            }

            let classification =
                discrepancy::classify_with(&model_after, &delta_after, &opts.classify)?;
            if !classification.gmrlc.is_true() {
                return Err(MmpError::InvariantViolated(format!(
                    "GMRLC lost after contracting {}",
                    ray.curve
                )));
            }
            if require_lc && !classification.lc.is_true() {
                return Err(MmpError::InvariantViolated(format!(
                    "log canonicity lost after contracting {}",
                    ray.curve
                )));
            }
            if require_mrlc && !classification.mrlc.is_true() {
                return Err(MmpError::InvariantViolated(format!(
                    "MRLC lost after contracting {}",
                    ray.curve
                )));
            }
            if require_q_factorial
                && !classification
                    .q_factorial_certificates
                    .iter()
                    .all(|c| c.is_rational())
            {
                return Err(MmpError::InvariantViolated(format!(
                    "rationality certificate lost after contracting {}",
                    ray.curve
                )));
            }

            let step = MmpStep {
                ray: ray.clone(),
                model_before: current_model.clone(),
                model_after: model_after.clone(),
                delta_after: delta_after.clone(),
                classification,
            };
            on_step(&step);
            steps.push(step);
            current_model = model_after;
            current_delta = delta_after;
            current_universe = universe_after;
            continue;
        }

        // Only fiber-type or anti-ample rays remain: a Mori fiber space.
        let ray = rays[0].clone();
        let certificate =
            fiber_space_certificate(&current_model, &current_delta, &current_universe, &ray)?;
        break MmpOutcome::MoriFiberSpace { ray, certificate };
    };

    if steps.len() > initial_rank.saturating_sub(1) {
        return Err(MmpError::InvariantViolated(format!(
            "{} birational steps exceed rank - 1 = {}",
            steps.len(),
            initial_rank.saturating_sub(1)
        )));
    }

    Ok(MmpTrace {
        initial_model: model.clone(),
        initial_delta: delta.clone(),
        universe: universe.to_vec(),
        vertical_only: opts.vertical_only,
        universe_certified_complete: opts.toric.is_some(),
        initial_classification,
        steps,
        outcome,
        warnings,
    })
}

fn good_minimal_model(
    model: &SingularModel,
    delta: &Divisor,
    universe: &[CurveId],
    opts: &MmpOptions<'_>,
    warnings: &mut Vec<String>,
) -> Result<MmpOutcome, MmpError> {
    let delta_y = discrepancy::log_pullback_raw(model, delta)?;
    let mut nef_certificate = Vec::new();
    for id in universe {
        let p = model.mumford_pullback(&Divisor::unit(id.clone()))?;
        let degree = model.k_pairing_on_y(&p) + model.pairing_on_y(&delta_y, &p);
        if degree.is_negative() {
            return Err(MmpError::InvariantViolated(format!(
                "no negative ray found but (K+Delta).{id} = {degree}"
            )));
        }
        nef_certificate.push((id.clone(), degree));
    }
    let (semiample, note) = match opts.toric {
        Some(surface) => {
            // K + Delta on X as a divisor on invariant curves.
            let d = model.pushforward(&surface.canonical) + delta;
            let toric_supported = d
                .support()
                .all(|id| surface.rays.iter().any(|r| &r.curve == id));
            if toric_supported {
                let checked = toric::nef_semiample_witness(surface, model, &d)
                    .map_err(|e| MmpError::InvariantViolated(e.to_string()))?;
                match checked {
                    SemiampleCheck::Witness(w) => (
                        Some(w),
                        "nef with a toric lattice-polytope semi-ample witness".to_string(),
                    ),
                    SemiampleCheck::NotNef { curve, degree } => {
                        return Err(MmpError::InvariantViolated(format!(
                            "nef certificate contradicts the toric check on {curve}: {degree}"
                        )));
                    }
                }
            } else {
                warnings.push(
                    "boundary leaves the invariant curves; no constructive semi-ample witness"
                        .to_string(),
                );
                (None, abundance_note())
            }
        }
        None => (None, abundance_note()),
    };
    Ok(MmpOutcome::GoodMinimalModel {
        nef_certificate,
        semiample,
        note,
    })
}

fn abundance_note() -> String {
    "nef; semi-ample by the abundance theorem for generalized MR log canonical pairs (trusted)"
        .to_string()
}

fn fiber_space_certificate(
    model: &SingularModel,
    delta: &Divisor,
    universe: &[CurveId],
    ray: &RayCandidate,
) -> Result<FiberSpaceCertificate, MmpError> {
    let classes = universe_classes(model, delta, universe)?;
    match ray.kind {
        RayKind::AmpleAnti => {
            if classes.rank != 1 {
                return Err(MmpError::InvariantViolated(format!(
                    "anti-ample ending with universe rank {}",
                    classes.rank
                )));
            }
            Ok(FiberSpaceCertificate {
                target_dim: 0,
                relative_picard_rank_one: true,
            })
        }
        RayKind::FiberType => {
            let f = universe
                .iter()
                .position(|id| id == &ray.curve)
                .expect("ray curve is in the universe");
            // Curves contracted by the fibration pair to zero with the
            // fiber; they must all be proportional to it.
            for i in 0..universe.len() {
                if classes.vectors[i][f].is_zero()
                    && !proportional_positive(&classes.vectors[f], &classes.vectors[i])
                {
                    return Err(MmpError::InvariantViolated(format!(
                        "vertical curve {} is not proportional to the fiber class {}",
                        universe[i], ray.curve
                    )));
                }
            }
            Ok(FiberSpaceCertificate {
                target_dim: 1,
                relative_picard_rank_one: true,
            })
        }
        RayKind::Birational => Err(MmpError::NotBirationalRay {
            curve: ray.curve.clone(),
        }),
    }
}
