//! Combinatorial surface models.
//!
//! A smooth projective surface enters the engine as a [`CurveConfig`]: a
//! finite list of curves with self-intersections, arithmetic genera, and
//! canonical degrees, plus a symmetric table of pairwise intersection
//! numbers. A normal surface `X` is never stored directly — it is a
//! [`SingularModel`], i.e. a smooth configuration `Y` together with the set
//! of curves contracted by the resolution `Y -> X`. All intersection theory
//! on `X` is computed through the numerical pullback to `Y`, which is exact
//! because the contracted intersection form is negative definite.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactlin::{self, QMatrix, Rational};

/// Identifier of a configured curve.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CurveId(pub String);

impl CurveId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CurveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for CurveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<&str> for CurveId {
    fn from(s: &str) -> Self {
        CurveId(s.to_string())
    }
}

impl From<String> for CurveId {
    fn from(s: String) -> Self {
        CurveId(s)
    }
}

impl std::borrow::Borrow<str> for CurveId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// One curve on the smooth model: self-intersection, arithmetic genus, and
/// canonical degree `K.C`. Storing both the genus and `K.C` makes corrupted
/// input loudly detectable through the adjunction relation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub id: CurveId,
    pub self_int: i64,
    pub genus: i64,
    pub k_dot: i64,
    /// Maps to a point of the base of the structure morphism. `true` for
    /// absolute (base = point) setups, which is the default.
    #[serde(default = "default_true")]
    pub vertical: bool,
}

fn default_true() -> bool {
    true
}

impl CurveRecord {
    pub fn new(id: impl Into<CurveId>, self_int: i64, genus: i64, k_dot: i64) -> Self {
        CurveRecord {
            id: id.into(),
            self_int,
            genus,
            k_dot,
            vertical: true,
        }
    }

    /// Record with `K.C` derived from adjunction `2g - 2 = C^2 + K.C`.
    pub fn with_adjunction(id: impl Into<CurveId>, self_int: i64, genus: i64) -> Self {
        CurveRecord::new(id, self_int, genus, 2 * genus - 2 - self_int)
    }

    pub fn adjunction_holds(&self) -> bool {
        2 * self.genus - 2 == self.self_int + self.k_dot
    }
}

/// A point shared by curves, used to verify simple-normal-crossing claims.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointRecord {
    pub id: String,
    pub curves: Vec<CurveId>,
}

/// A configuration of curves on a smooth projective surface.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveConfig {
    pub curves: Vec<CurveRecord>,
    /// Pairwise intersection numbers, stored once per unordered pair with
    /// the ids in sorted order; absent pairs meet in zero points.
    #[serde(
        default,
        serialize_with = "ser_intersections",
        deserialize_with = "de_intersections"
    )]
    pub intersections: BTreeMap<(CurveId, CurveId), u64>,
    /// Claim that the configuration is simple normal crossing. Verified
    /// combinatorially when `points` is present, otherwise trusted and
    /// recorded in reports.
    #[serde(default)]
    pub snc_attested: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<PointRecord>>,
}

fn ser_intersections<S: serde::Serializer>(
    map: &BTreeMap<(CurveId, CurveId), u64>,
    s: S,
) -> Result<S::Ok, S::Error> {
    let triples: Vec<(&CurveId, &CurveId, u64)> =
        map.iter().map(|((a, b), &n)| (a, b, n)).collect();
    triples.serialize(s)
}

fn de_intersections<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> Result<BTreeMap<(CurveId, CurveId), u64>, D::Error> {
    let triples: Vec<(CurveId, CurveId, u64)> = Vec::deserialize(d)?;
    let mut map = BTreeMap::new();
    for (a, b, n) in triples {
        if n == 0 {
            continue;
        }
        let key = if a <= b { (a, b) } else { (b, a) };
        *map.entry(key).or_insert(0) += n;
    }
    Ok(map)
}

/// A violation of the configuration invariants. Violations are data, not
/// errors: `validate` returns the full list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Violation {
    DuplicateCurveId {
        curve: CurveId,
    },
    NegativeGenus {
        curve: CurveId,
    },
    AdjunctionFailed {
        curve: CurveId,
        lhs: i64,
        rhs: i64,
    },
    UnknownCurveInTable {
        curve: CurveId,
    },
    SelfPairInTable {
        curve: CurveId,
    },
    UnknownCurveInPoint {
        point: String,
        curve: CurveId,
    },
    PointNotDouble {
        point: String,
        incident: usize,
    },
    PointCountMismatch {
        a: CurveId,
        b: CurveId,
        table: u64,
        points: u64,
    },
    UnknownContractedCurve {
        curve: CurveId,
    },
    ContractedNotNegativeDefinite {
        component: Vec<CurveId>,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateCurveId { curve } => write!(f, "duplicate curve id {curve}"),
            Violation::NegativeGenus { curve } => write!(f, "negative genus on {curve}"),
            Violation::AdjunctionFailed { curve, lhs, rhs } => {
                write!(
                    f,
                    "adjunction fails on {curve}: 2g-2 = {lhs} but C^2 + K.C = {rhs}"
                )
            }
            Violation::UnknownCurveInTable { curve } => {
                write!(f, "intersection table references unknown curve {curve}")
            }
            Violation::SelfPairInTable { curve } => {
                write!(f, "intersection table pairs {curve} with itself")
            }
            Violation::UnknownCurveInPoint { point, curve } => {
                write!(f, "point {point} references unknown curve {curve}")
            }
            Violation::PointNotDouble { point, incident } => {
                write!(
                    f,
                    "point {point} has {incident} incident curves, want exactly 2"
                )
            }
            Violation::PointCountMismatch {
                a,
                b,
                table,
                points,
            } => write!(
                f,
                "curves {a},{b} meet {table} times in the table but share {points} points"
            ),
            Violation::UnknownContractedCurve { curve } => {
                write!(f, "contracted set references unknown curve {curve}")
            }
            Violation::ContractedNotNegativeDefinite { component } => {
                let ids: Vec<&str> = component.iter().map(CurveId::as_str).collect();
                write!(
                    f,
                    "contracted component [{}] is not negative definite",
                    ids.join(", ")
                )
            }
        }
    }
}

impl CurveConfig {
    pub fn new(curves: Vec<CurveRecord>) -> Self {
        CurveConfig {
            curves,
            intersections: BTreeMap::new(),
            snc_attested: false,
            points: None,
        }
    }

    pub fn with_intersection(mut self, a: &str, b: &str, n: u64) -> Self {
        self.set_intersection(a, b, n);
        self
    }

    pub fn set_intersection(&mut self, a: &str, b: &str, n: u64) {
        assert!(a != b, "self-pairs belong in self_int");
        let (a, b) = (CurveId::from(a), CurveId::from(b));
        let key = if a <= b { (a, b) } else { (b, a) };
        if n == 0 {
            self.intersections.remove(&key);
        } else {
            self.intersections.insert(key, n);
        }
    }

    pub fn attest_snc(mut self) -> Self {
        self.snc_attested = true;
        self
    }

    pub fn curve(&self, id: &CurveId) -> Option<&CurveRecord> {
        self.curves.iter().find(|c| &c.id == id)
    }

    pub fn has_curve(&self, id: &CurveId) -> bool {
        self.curve(id).is_some()
    }

    pub fn ids(&self) -> impl Iterator<Item = &CurveId> {
        self.curves.iter().map(|c| &c.id)
    }

    /// Intersection number of two configured curves on the smooth model;
    /// the self-intersection when `a == b`.
    pub fn pairing(&self, a: &CurveId, b: &CurveId) -> i64 {
        if a == b {
            return self.curve(a).map_or(0, |c| c.self_int);
        }
        let key = if a <= b {
            (a.clone(), b.clone())
        } else {
            (b.clone(), a.clone())
        };
        self.intersections
            .get(&key)
            .copied()
            .map_or(0, |n| n as i64)
    }

    /// Gram matrix of the listed curves under the smooth-model pairing.
    pub fn gram(&self, ids: &[CurveId]) -> QMatrix {
        QMatrix::from_fn(ids.len(), ids.len(), |i, j| {
            Rational::from(self.pairing(&ids[i], &ids[j]))
        })
    }

    /// Checks every configuration invariant and returns the violations.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        let mut seen = BTreeSet::new();
        for c in &self.curves {
            if !seen.insert(c.id.clone()) {
                violations.push(Violation::DuplicateCurveId {
                    curve: c.id.clone(),
                });
            }
            if c.genus < 0 {
                violations.push(Violation::NegativeGenus {
                    curve: c.id.clone(),
                });
            }
            if !c.adjunction_holds() {
                violations.push(Violation::AdjunctionFailed {
                    curve: c.id.clone(),
                    lhs: 2 * c.genus - 2,
                    rhs: c.self_int + c.k_dot,
                });
            }
        }
        for (a, b) in self.intersections.keys() {
            if a == b {
                violations.push(Violation::SelfPairInTable { curve: a.clone() });
            }
            for id in [a, b] {
                if !self.has_curve(id) {
                    violations.push(Violation::UnknownCurveInTable { curve: id.clone() });
                }
            }
        }
        if self.snc_attested {
            if let Some(points) = &self.points {
                violations.extend(self.check_points(points));
            }
        }
        violations
    }

    /// SNC verification against the points table: every point is an
    /// ordinary double point of the configuration, and shared-point counts
    /// reproduce the intersection table.
    fn check_points(&self, points: &[PointRecord]) -> Vec<Violation> {
        let mut violations = Vec::new();
        let mut shared: BTreeMap<(CurveId, CurveId), u64> = BTreeMap::new();
        for p in points {
            for id in &p.curves {
                if !self.has_curve(id) {
                    violations.push(Violation::UnknownCurveInPoint {
                        point: p.id.clone(),
                        curve: id.clone(),
                    });
                }
            }
            if p.curves.len() != 2 {
                violations.push(Violation::PointNotDouble {
                    point: p.id.clone(),
                    incident: p.curves.len(),
                });
                continue;
            }
            let (a, b) = (p.curves[0].clone(), p.curves[1].clone());
            let key = if a <= b { (a, b) } else { (b, a) };
            *shared.entry(key).or_insert(0) += 1;
        }
        let mut pairs: BTreeSet<(CurveId, CurveId)> = self.intersections.keys().cloned().collect();
        pairs.extend(shared.keys().cloned());
        for key in pairs {
            let table = self.intersections.get(&key).copied().unwrap_or(0);
            let pts = shared.get(&key).copied().unwrap_or(0);
            if table != pts {
                violations.push(Violation::PointCountMismatch {
                    a: key.0,
                    b: key.1,
                    table,
                    points: pts,
                });
            }
        }
        violations
    }

    /// Connected components of the given curves in the dual graph.
    pub fn components_of(&self, ids: &BTreeSet<CurveId>) -> Vec<Vec<CurveId>> {
        let mut remaining: BTreeSet<CurveId> = ids.clone();
        let mut components = Vec::new();
        while let Some(start) = remaining.iter().next().cloned() {
            remaining.remove(&start);
            let mut component = vec![start];
            let mut frontier = vec![component[0].clone()];
            while let Some(cur) = frontier.pop() {
                let adjacent: Vec<CurveId> = remaining
                    .iter()
                    .filter(|other| self.pairing(&cur, other) > 0)
                    .cloned()
                    .collect();
                for next in adjacent {
                    remaining.remove(&next);
                    component.push(next.clone());
                    frontier.push(next);
                }
            }
            component.sort();
            components.push(component);
        }
        components
    }

    /// Contracts a (-1)-curve and rewrites the remaining records by the
    /// blow-down calculus: for surviving curves `C`, `D`,
    /// `C.D += (C.e)(D.e)`, `C^2 += (C.e)^2`, `K.C -= C.e`, and the
    /// arithmetic genus picks up `m(m-1)/2` nodes when `m = C.e > 1`, which
    /// is exactly what adjunction on the image demands.
    pub fn blow_down(&self, e: &CurveId) -> Result<CurveConfig, SurfaceError> {
        let rec = self
            .curve(e)
            .ok_or_else(|| SurfaceError::UnknownCurve { curve: e.clone() })?;
        if rec.self_int != -1 || rec.genus != 0 {
            return Err(SurfaceError::NotMinusOneCurve { curve: e.clone() });
        }
        let mut curves = Vec::new();
        for c in &self.curves {
            if &c.id == e {
                continue;
            }
            let m = self.pairing(&c.id, e);
            curves.push(CurveRecord {
                id: c.id.clone(),
                self_int: c.self_int + m * m,
                genus: c.genus + m * (m - 1) / 2,
                k_dot: c.k_dot - m,
                vertical: c.vertical,
            });
        }
        let mut out = CurveConfig::new(curves);
        for ((a, b), &n) in &self.intersections {
            if a == e || b == e {
                continue;
            }
            out.intersections.insert((a.clone(), b.clone()), n);
        }
        let survivors: Vec<CurveId> = out.ids().cloned().collect();
        for i in 0..survivors.len() {
            for j in (i + 1)..survivors.len() {
                let extra = self.pairing(&survivors[i], e) * self.pairing(&survivors[j], e);
                if extra > 0 {
                    let old = out.pairing(&survivors[i], &survivors[j]);
                    out.set_intersection(
                        survivors[i].as_str(),
                        survivors[j].as_str(),
                        (old + extra) as u64,
                    );
                }
            }
        }
        // The points table describes the old surface; drop it rather than
        // guess where images meet. The SNC claim goes with it.
        out.snc_attested = false;
        out.points = None;
        Ok(out)
    }
}

/// Formal rational combination of configured curves. Zero coefficients are
/// never stored.
#[derive(Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Divisor {
    coeffs: BTreeMap<CurveId, Rational>,
}

impl Divisor {
    pub fn zero() -> Self {
        Divisor::default()
    }

    pub fn unit(id: impl Into<CurveId>) -> Self {
        Divisor::zero().with(id, Rational::one())
    }

    pub fn with(mut self, id: impl Into<CurveId>, coeff: Rational) -> Self {
        self.set(id.into(), coeff);
        self
    }

    pub fn set(&mut self, id: CurveId, coeff: Rational) {
        if coeff.is_zero() {
            self.coeffs.remove(&id);
        } else {
            self.coeffs.insert(id, coeff);
        }
    }

    pub fn coeff(&self, id: &CurveId) -> Rational {
        self.coeffs.get(id).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = &CurveId> {
        self.coeffs.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CurveId, &Rational)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_effective(&self) -> bool {
        self.coeffs.values().all(|c| !c.is_negative())
    }

    /// Componentwise comparison `self <= other`.
    pub fn le(&self, other: &Divisor) -> bool {
        let ids: BTreeSet<&CurveId> = self.support().chain(other.support()).collect();
        ids.into_iter().all(|id| self.coeff(id) <= other.coeff(id))
    }

    /// Restriction to the ids accepted by the predicate.
    pub fn filter(&self, mut keep: impl FnMut(&CurveId) -> bool) -> Divisor {
        Divisor {
            coeffs: self
                .coeffs
                .iter()
                .filter(|(id, _)| keep(id))
                .map(|(id, c)| (id.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn map_coeffs(&self, mut f: impl FnMut(&Rational) -> Rational) -> Divisor {
        let mut out = Divisor::zero();
        for (id, c) in &self.coeffs {
            out.set(id.clone(), f(c));
        }
        out
    }
}

impl fmt::Debug for Divisor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .map(|(id, c)| format!("{c}*{id}"))
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

impl Add for &Divisor {
    type Output = Divisor;
    fn add(self, rhs: &Divisor) -> Divisor {
        let mut out = self.clone();
        for (id, c) in &rhs.coeffs {
            let v = out.coeff(id) + c;
            out.set(id.clone(), v);
        }
        out
    }
}

impl Add<&Divisor> for Divisor {
    type Output = Divisor;
    fn add(self, rhs: &Divisor) -> Divisor {
        &self + rhs
    }
}

impl Sub for &Divisor {
    type Output = Divisor;
    fn sub(self, rhs: &Divisor) -> Divisor {
        let mut out = self.clone();
        for (id, c) in &rhs.coeffs {
            let v = out.coeff(id) - c;
            out.set(id.clone(), v);
        }
        out
    }
}

impl Neg for &Divisor {
    type Output = Divisor;
    fn neg(self) -> Divisor {
        self.map_coeffs(|c| -c)
    }
}

impl Mul<&Divisor> for &Rational {
    type Output = Divisor;
    fn mul(self, rhs: &Divisor) -> Divisor {
        rhs.map_coeffs(|c| self * c)
    }
}

/// Errors from the intersection calculus.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SurfaceError {
    #[error("unknown curve {curve}")]
    UnknownCurve { curve: CurveId },
    #[error("divisor touches contracted curve {curve}")]
    ContractedSupport { curve: CurveId },
    #[error("contracted component [{}] is not negative definite", ids(.component))]
    NotContractible { component: Vec<CurveId> },
    #[error("{curve} is not a (-1)-curve of genus 0")]
    NotMinusOneCurve { curve: CurveId },
    #[error("invalid model: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidModel { violations: Vec<Violation> },
    #[error(transparent)]
    Linear(#[from] exactlin::ExactLinError),
}

fn ids(component: &[CurveId]) -> String {
    component
        .iter()
        .map(CurveId::as_str)
        .collect::<Vec<_>>()
        .join(", ")
}

/// A normal surface `X` presented by a resolution: the smooth configuration
/// together with the curves contracted to the singular points of `X`. The
/// empty contracted set is the identity map.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingularModel {
    pub config: CurveConfig,
    #[serde(default)]
    pub contracted: BTreeSet<CurveId>,
    /// External assertion that `X` itself is Q-factorial, for inputs whose
    /// singularities carry no rationality certificate.
    #[serde(default)]
    pub q_factorial_attested: bool,
}

impl SingularModel {
    pub fn smooth(config: CurveConfig) -> Self {
        SingularModel {
            config,
            contracted: BTreeSet::new(),
            q_factorial_attested: false,
        }
    }

    pub fn new(config: CurveConfig, contracted: impl IntoIterator<Item = CurveId>) -> Self {
        SingularModel {
            config,
            contracted: contracted.into_iter().collect(),
            q_factorial_attested: false,
        }
    }

    pub fn is_contracted(&self, id: &CurveId) -> bool {
        self.contracted.contains(id)
    }

    /// Connected components of the contracted set; each contracts to one
    /// singular (or smooth) point of `X`.
    pub fn contracted_components(&self) -> Vec<Vec<CurveId>> {
        self.config.components_of(&self.contracted)
    }

    /// Model invariants: configuration invariants, contracted ids exist,
    /// and each contracted component is negative definite.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = self.config.validate();
        for id in &self.contracted {
            if !self.config.has_curve(id) {
                violations.push(Violation::UnknownContractedCurve { curve: id.clone() });
            }
        }
        if violations.is_empty() {
            for component in self.contracted_components() {
                let gram = self.config.gram(&component);
                if !exactlin::is_negative_definite(&gram).unwrap_or(false) {
                    violations.push(Violation::ContractedNotNegativeDefinite { component });
                }
            }
        }
        violations
    }

    fn ensure_contractible(&self) -> Result<(), SurfaceError> {
        for component in self.contracted_components() {
            let gram = self.config.gram(&component);
            if !exactlin::is_negative_definite(&gram)? {
                return Err(SurfaceError::NotContractible { component });
            }
        }
        Ok(())
    }

    fn ensure_off_contracted(&self, d: &Divisor) -> Result<(), SurfaceError> {
        for id in d.support() {
            if !self.config.has_curve(id) {
                return Err(SurfaceError::UnknownCurve { curve: id.clone() });
            }
            if self.is_contracted(id) {
                return Err(SurfaceError::ContractedSupport { curve: id.clone() });
            }
        }
        Ok(())
    }

    /// Intersection pairing of two divisors on the smooth model `Y`.
    pub fn pairing_on_y(&self, d1: &Divisor, d2: &Divisor) -> Rational {
        let mut acc = Rational::zero();
        for (a, ca) in d1.iter() {
            for (b, cb) in d2.iter() {
                let p = self.config.pairing(a, b);
                if p != 0 {
                    acc += &(&(ca * cb) * &Rational::from(p));
                }
            }
        }
        acc
    }

    /// `K_Y . D` from the per-curve canonical degrees.
    pub fn k_pairing_on_y(&self, d: &Divisor) -> Rational {
        let mut acc = Rational::zero();
        for (id, c) in d.iter() {
            let k = self.config.curve(id).map_or(0, |r| r.k_dot);
            if k != 0 {
                acc += &(c * &Rational::from(k));
            }
        }
        acc
    }

    /// Numerical pullback of a divisor on `X`: the strict transform plus the
    /// unique exceptional correction making the result meet every contracted
    /// curve in zero.
    pub fn mumford_pullback(&self, d: &Divisor) -> Result<Divisor, SurfaceError> {
        self.ensure_off_contracted(d)?;
        self.ensure_contractible()?;
        let exceptional: Vec<CurveId> = self.contracted.iter().cloned().collect();
        if exceptional.is_empty() {
            return Ok(d.clone());
        }
        let gram = self.config.gram(&exceptional);
        let rhs: Vec<Rational> = exceptional
            .iter()
            .map(|e| -self.pairing_on_y(d, &Divisor::unit(e.clone())))
            .collect();
        let coeffs = exactlin::solve_linear(&gram, &rhs)?;
        let mut out = d.clone();
        for (e, c) in exceptional.into_iter().zip(coeffs) {
            out.set(e, c);
        }
        Ok(out)
    }

    /// Drops coefficients on contracted curves.
    pub fn pushforward(&self, d: &Divisor) -> Divisor {
        d.filter(|id| !self.is_contracted(id))
    }

    /// Mumford intersection pairing on `X`, computed by pulling both
    /// divisors back to `Y`.
    pub fn intersect_on_x(&self, d1: &Divisor, d2: &Divisor) -> Result<Rational, SurfaceError> {
        let p1 = self.mumford_pullback(d1)?;
        let p2 = self.mumford_pullback(d2)?;
        Ok(self.pairing_on_y(&p1, &p2))
    }
}

/// DOT rendering of the weighted dual graph: one node per curve labeled with
/// self-intersection and genus, one edge per unit of intersection.
/// Contracted curves are drawn dashed.
pub fn dual_graph_dot(model: &SingularModel) -> String {
    let mut out = String::from("graph dual {\n  node [shape=circle];\n");
    for c in &model.config.curves {
        let style = if model.is_contracted(&c.id) {
            ", style=dashed"
        } else {
            ""
        };
        out.push_str(&format!(
            "  \"{}\" [label=\"{}\\n({}, g{}){}\"{}];\n",
            c.id,
            c.id,
            c.self_int,
            c.genus,
            if c.vertical { "" } else { ", horiz" },
            style
        ));
    }
    for ((a, b), &n) in &model.config.intersections {
        for _ in 0..n {
            out.push_str(&format!("  \"{a}\" -- \"{b}\";\n"));
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    /// A1 model: one contracted (-2)-curve met once by a line transform.
    fn a1_model() -> SingularModel {
        let config = CurveConfig::new(vec![
            CurveRecord::with_adjunction("E", -2, 0),
            CurveRecord::with_adjunction("L", -1, 0),
        ])
        .with_intersection("E", "L", 1);
        SingularModel::new(config, [CurveId::from("E")])
    }

    #[test]
    fn validate_adjunction() {
        let good = CurveConfig::new(vec![CurveRecord::new("E", -2, 0, 0)]);
        assert!(good.validate().is_empty());

        let bad = CurveConfig::new(vec![CurveRecord::new("E", -1, 0, 0)]);
        let violations = bad.validate();
        assert_eq!(violations.len(), 1);
        assert!(matches!(violations[0], Violation::AdjunctionFailed { .. }));
    }

    #[test]
    fn validate_points_table() {
        let config = CurveConfig::new(vec![
            CurveRecord::with_adjunction("C", 0, 0),
            CurveRecord::with_adjunction("D", 0, 0),
        ])
        .with_intersection("C", "D", 1)
        .attest_snc();
        let mut with_points = config.clone();
        with_points.points = Some(vec![PointRecord {
            id: "p".into(),
            curves: vec!["C".into(), "D".into()],
        }]);
        assert!(with_points.validate().is_empty());

        let mut wrong = config;
        wrong.points = Some(vec![]);
        let violations = wrong.validate();
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::PointCountMismatch { .. })));
    }

    #[test]
    fn mumford_pullback_a1() {
        let model = a1_model();
        let pulled = model.mumford_pullback(&Divisor::unit("L")).unwrap();
        assert_eq!(pulled.coeff(&"E".into()), q(1, 2));
        assert_eq!(pulled.coeff(&"L".into()), Rational::one());
    }

    #[test]
    fn mumford_pullback_zero() {
        let model = a1_model();
        assert_eq!(
            model.mumford_pullback(&Divisor::zero()).unwrap(),
            Divisor::zero()
        );
    }

    #[test]
    fn mumford_pullback_a2_chain() {
        let config = CurveConfig::new(vec![
            CurveRecord::with_adjunction("E1", -2, 0),
            CurveRecord::with_adjunction("E2", -2, 0),
            CurveRecord::with_adjunction("L", -1, 0),
        ])
        .with_intersection("E1", "E2", 1)
        .with_intersection("L", "E1", 1);
        let model = SingularModel::new(config, [CurveId::from("E1"), CurveId::from("E2")]);
        let pulled = model.mumford_pullback(&Divisor::unit("L")).unwrap();
        assert_eq!(pulled.coeff(&"E1".into()), q(2, 3));
        assert_eq!(pulled.coeff(&"E2".into()), q(1, 3));
    }

    #[test]
    fn pullback_rejects_contracted_support() {
        let model = a1_model();
        let err = model.mumford_pullback(&Divisor::unit("E")).unwrap_err();
        assert!(matches!(err, SurfaceError::ContractedSupport { .. }));
    }

    #[test]
    fn pullback_rejects_non_contractible() {
        let config = CurveConfig::new(vec![CurveRecord::with_adjunction("E", 1, 0)]);
        let model = SingularModel::new(config, [CurveId::from("E")]);
        let err = model.mumford_pullback(&Divisor::zero()).unwrap_err();
        assert!(matches!(err, SurfaceError::NotContractible { .. }));
    }

    #[test]
    fn pushforward_examples() {
        let model = a1_model();
        let dy = Divisor::unit("L").with("E", q(1, 2));
        assert_eq!(model.pushforward(&dy), Divisor::unit("L"));
        assert_eq!(
            model.pushforward(&Divisor::zero().with("E", q(2, 1))),
            Divisor::zero()
        );
        let off = Divisor::unit("L");
        assert_eq!(model.pushforward(&off), off);
    }

    #[test]
    fn intersect_on_x_a1() {
        let model = a1_model();
        let l = Divisor::unit("L");
        assert_eq!(model.intersect_on_x(&l, &l).unwrap(), q(-1, 2));
        assert_eq!(
            model.intersect_on_x(&Divisor::zero(), &l).unwrap(),
            Rational::zero()
        );
    }

    #[test]
    fn intersect_on_x_identity_map() {
        let config = CurveConfig::new(vec![
            CurveRecord::with_adjunction("A", -1, 0),
            CurveRecord::with_adjunction("B", 0, 0),
        ])
        .with_intersection("A", "B", 2);
        let model = SingularModel::smooth(config);
        let a = Divisor::unit("A");
        let b = Divisor::unit("B");
        assert_eq!(model.intersect_on_x(&a, &b).unwrap(), Rational::from(2));
    }

    #[test]
    fn blow_down_line_pair() {
        // Blow-up of the plane: exceptional E plus the strict transform of a
        // line through the center. Contracting E recovers the line with
        // self-intersection 1 and K.L = -3.
        let config = CurveConfig::new(vec![
            CurveRecord::with_adjunction("E", -1, 0),
            CurveRecord::with_adjunction("L", 0, 0),
        ])
        .with_intersection("E", "L", 1);
        let down = config.blow_down(&"E".into()).unwrap();
        let l = down.curve(&"L".into()).unwrap();
        assert_eq!(l.self_int, 1);
        assert_eq!(l.k_dot, -3);
        assert_eq!(l.genus, 0);
        assert!(down.validate().is_empty());
        assert_eq!(down.curves.len(), 1);
    }

    #[test]
    fn blow_down_creates_intersection() {
        let config = CurveConfig::new(vec![
            CurveRecord::with_adjunction("E", -1, 0),
            CurveRecord::with_adjunction("C", -1, 0),
            CurveRecord::with_adjunction("D", -1, 0),
        ])
        .with_intersection("E", "C", 1)
        .with_intersection("E", "D", 1);
        let down = config.blow_down(&"E".into()).unwrap();
        assert_eq!(down.pairing(&"C".into(), &"D".into()), 1);
        assert_eq!(down.curve(&"C".into()).unwrap().self_int, 0);
        assert!(down.validate().is_empty());
    }

    #[test]
    fn blow_down_disjoint_curve_unchanged() {
        let config = CurveConfig::new(vec![
            CurveRecord::with_adjunction("E", -1, 0),
            CurveRecord::with_adjunction("F", -3, 1),
        ]);
        let down = config.blow_down(&"E".into()).unwrap();
        assert_eq!(down.curve(&"F".into()), config.curve(&"F".into()));
    }

    #[test]
    fn blow_down_rejects_non_minus_one() {
        let config = CurveConfig::new(vec![CurveRecord::with_adjunction("E", -2, 0)]);
        assert!(matches!(
            config.blow_down(&"E".into()),
            Err(SurfaceError::NotMinusOneCurve { .. })
        ));
    }

    #[test]
    fn blow_down_multiplicity_two_keeps_adjunction() {
        // A conic through the blown-up point twice: the image gains a node.
        let config = CurveConfig::new(vec![
            CurveRecord::with_adjunction("E", -1, 0),
            CurveRecord::with_adjunction("C", 0, 0),
        ])
        .with_intersection("E", "C", 2);
        let down = config.blow_down(&"E".into()).unwrap();
        let c = down.curve(&"C".into()).unwrap();
        assert_eq!(c.self_int, 4);
        assert_eq!(c.genus, 1);
        assert_eq!(c.k_dot, -6 + 2);
        assert!(c.adjunction_holds());
    }

    #[test]
    fn projection_formula() {
        let model = a1_model();
        let pulled = model.mumford_pullback(&Divisor::unit("L")).unwrap();
        let e = Divisor::unit("E");
        assert_eq!(model.pairing_on_y(&pulled, &e), Rational::zero());
    }

    #[test]
    fn pushforward_of_pullback_is_identity() {
        let model = a1_model();
        let d = Divisor::unit("L").map_coeffs(|_| q(7, 3));
        let back = model.pushforward(&model.mumford_pullback(&d).unwrap());
        assert_eq!(back, d);
    }

    #[test]
    fn component_split_composes() {
        // Two disjoint contracted components: pulling back through one and
        // then the other matches the joint solve.
        let config = CurveConfig::new(vec![
            CurveRecord::with_adjunction("E1", -2, 0),
            CurveRecord::with_adjunction("E2", -3, 0),
            CurveRecord::with_adjunction("L", -1, 0),
        ])
        .with_intersection("L", "E1", 1)
        .with_intersection("L", "E2", 2);
        let joint = SingularModel::new(config.clone(), [CurveId::from("E1"), CurveId::from("E2")]);
        let first = SingularModel::new(config.clone(), [CurveId::from("E1")]);
        let second = SingularModel::new(config, [CurveId::from("E2")]);

        let d = Divisor::unit("L");
        let direct = joint.mumford_pullback(&d).unwrap();
        let staged = second
            .mumford_pullback(&first.mumford_pullback(&d).unwrap())
            .unwrap();
        assert_eq!(direct, staged);
    }

    #[test]
    fn component_split_composes_randomized() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xc0c0);
        let mut tested = 0;
        while tested < 40 {
            // Two disjoint contracted components plus a transverse curve.
            let mut curves = vec![CurveRecord::with_adjunction("L", -1, 0)];
            let mut config = CurveConfig::new(Vec::new());
            let mut left = Vec::new();
            let mut right = Vec::new();
            for i in 0..rng.random_range(1..=2usize) {
                let id = format!("A{i}");
                curves.push(CurveRecord::with_adjunction(
                    id.as_str(),
                    rng.random_range(-4..=-2),
                    0,
                ));
                left.push(CurveId::from(id.as_str()));
            }
            for i in 0..rng.random_range(1..=2usize) {
                let id = format!("B{i}");
                curves.push(CurveRecord::with_adjunction(
                    id.as_str(),
                    rng.random_range(-4..=-2),
                    0,
                ));
                right.push(CurveId::from(id.as_str()));
            }
            config.curves = curves;
            // Chains inside each component, random meetings with L.
            for ids in [&left, &right] {
                for w in ids.windows(2) {
                    config.set_intersection(w[0].as_str(), w[1].as_str(), 1);
                }
                for id in ids.iter() {
                    let m = rng.random_range(0..=2u64);
                    if m > 0 {
                        config.set_intersection("L", id.as_str(), m);
                    }
                }
            }
            let all: Vec<CurveId> = left.iter().chain(&right).cloned().collect();
            let joint = SingularModel::new(config.clone(), all);
            if !joint.validate().is_empty() {
                continue;
            }
            let first = SingularModel::new(config.clone(), left.clone());
            let second = SingularModel::new(config.clone(), right.clone());
            let d = Divisor::unit("L");
            let direct = joint.mumford_pullback(&d).unwrap();
            let staged = second
                .mumford_pullback(&first.mumford_pullback(&d).unwrap())
                .unwrap();
            assert_eq!(direct, staged, "split {left:?} | {right:?}");
            tested += 1;
        }
    }

    #[test]
    fn serde_round_trip() {
        let model = a1_model();
        let json = serde_json::to_string(&model).unwrap();
        let back: SingularModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn dot_output_lists_nodes_and_edges() {
        let model = a1_model();
        let dot = dual_graph_dot(&model);
        assert!(dot.contains("\"E\""));
        assert!(dot.contains("style=dashed"));
        assert_eq!(dot.matches("--").count(), 1);
    }

    mod proptests {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // Projection formula on random A1/A2-style contractions: the
            // pullback meets every contracted curve in exactly zero.
            #[test]
            fn pullback_kills_contracted_pairings(
                meet1 in 0u64..=3, meet2 in 0u64..=3, s1 in -5i64..=-2, s2 in -5i64..=-2, chain in proptest::bool::ANY
            ) {
                let mut config = CurveConfig::new(vec![
                    CurveRecord::with_adjunction("E1", s1, 0),
                    CurveRecord::with_adjunction("E2", s2, 0),
                    CurveRecord::with_adjunction("L", -1, 0),
                ]);
                if chain {
                    config.set_intersection("E1", "E2", 1);
                }
                config.set_intersection("L", "E1", meet1);
                config.set_intersection("L", "E2", meet2);
                let model = SingularModel::new(config, [CurveId::from("E1"), CurveId::from("E2")]);
                prop_assume!(model.validate().is_empty());
                let pulled = model.mumford_pullback(&Divisor::unit("L")).unwrap();
                for e in ["E1", "E2"] {
                    prop_assert_eq!(
                        model.pairing_on_y(&pulled, &Divisor::unit(e)),
                        Rational::zero()
                    );
                }
                prop_assert_eq!(model.pushforward(&pulled), Divisor::unit("L"));
            }
        }
    }
}
